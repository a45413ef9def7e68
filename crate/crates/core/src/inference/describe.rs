//! Group means by predicted label and their relative differences.

use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::classifier::LabeledRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Likes,
    Retweets,
    Replies,
    Total,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Likes, Metric::Retweets, Metric::Replies, Metric::Total];
    /// The engagement components, excluding their sum.
    pub const COMPONENTS: [Metric; 3] = [Metric::Likes, Metric::Retweets, Metric::Replies];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Likes => "likes",
            Metric::Retweets => "retweets",
            Metric::Replies => "replies",
            Metric::Total => "total",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMeans {
    pub n: usize,
    pub likes: f64,
    pub retweets: f64,
    pub replies: f64,
    pub total: f64,
}

impl GroupMeans {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Likes => self.likes,
            Metric::Retweets => self.retweets,
            Metric::Replies => self.replies,
            Metric::Total => self.total,
        }
    }

    fn from_records<'a>(records: impl Iterator<Item = &'a LabeledRecord>) -> GroupMeans {
        let (mut n, mut l, mut rt, mut rp, mut t) = (0usize, 0u64, 0u64, 0u64, 0u64);
        for r in records {
            n += 1;
            l += r.record.likes;
            rt += r.record.retweets;
            rp += r.record.replies;
            t += r.record.total_engagement;
        }
        let d = n as f64;
        GroupMeans {
            n,
            likes: l as f64 / d,
            retweets: rt as f64 / d,
            replies: rp as f64 / d,
            total: t as f64 / d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricGap {
    pub metric: Metric,
    pub mean_uncertain: f64,
    pub mean_certain: f64,
    /// 100·(mean_uncertain − mean_certain)/mean_certain.
    pub percent_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveReport {
    pub uncertain: GroupMeans,
    pub certain: GroupMeans,
    pub gaps: Vec<MetricGap>,
    /// Component (likes/retweets/replies) with the largest relative gap.
    pub largest_gap: Metric,
}

impl DescriptiveReport {
    pub fn from_means(uncertain: GroupMeans, certain: GroupMeans) -> Result<DescriptiveReport, InferenceError> {
        for (name, g) in [("uncertain", &uncertain), ("certain", &certain)] {
            if g.n == 0 {
                return Err(InferenceError::DegenerateGroup(name.to_string()));
            }
        }
        let gaps: Vec<MetricGap> = Metric::ALL
            .into_iter()
            .map(|m| {
                let (u, c) = (uncertain.get(m), certain.get(m));
                MetricGap {
                    metric: m,
                    mean_uncertain: u,
                    mean_certain: c,
                    percent_difference: if c == 0.0 && u == 0.0 { 0.0 } else { 100.0 * (u - c) / c },
                }
            })
            .collect();
        let largest_gap = Metric::COMPONENTS
            .into_iter()
            .max_by(|a, b| {
                let pa = gaps.iter().find(|g| g.metric == *a).unwrap().percent_difference;
                let pb = gaps.iter().find(|g| g.metric == *b).unwrap().percent_difference;
                pa.total_cmp(&pb)
            })
            .expect("three components");
        Ok(DescriptiveReport {
            uncertain,
            certain,
            gaps,
            largest_gap,
        })
    }

    pub fn gap(&self, metric: Metric) -> &MetricGap {
        self.gaps.iter().find(|g| g.metric == metric).expect("all metrics present")
    }

    /// True when replies carry the largest relative gap.
    pub fn reply_asymmetry(&self) -> bool {
        self.largest_gap == Metric::Replies
    }
}

pub fn describe(records: &[LabeledRecord]) -> Result<DescriptiveReport, InferenceError> {
    let uncertain = GroupMeans::from_records(records.iter().filter(|r| r.is_uncertain));
    let certain = GroupMeans::from_records(records.iter().filter(|r| !r.is_uncertain));
    DescriptiveReport::from_means(uncertain, certain)
}

/// Round to one decimal, as reported.
pub fn one_decimal(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{derive_features, RawTweet};

    fn means(n: usize, likes: f64, retweets: f64, replies: f64, total: f64) -> GroupMeans {
        GroupMeans {
            n,
            likes,
            retweets,
            replies,
            total,
        }
    }

    #[test]
    fn headline_percentages() {
        let r = DescriptiveReport::from_means(
            means(4997, 18.84, 2.66, 2.16, 23.67),
            means(11698, 12.82, 1.61, 1.19, 15.62),
        )
        .unwrap();
        assert_eq!(one_decimal(r.gap(Metric::Total).percent_difference), 51.5);
        assert_eq!(one_decimal(r.gap(Metric::Likes).percent_difference), 47.0);
        assert_eq!(one_decimal(r.gap(Metric::Retweets).percent_difference), 65.2);
        assert_eq!(one_decimal(r.gap(Metric::Replies).percent_difference), 81.5);
        assert!(r.reply_asymmetry());
    }

    #[test]
    fn equal_means_give_zero() {
        let g = means(3, 1.0, 2.0, 3.0, 6.0);
        let r = DescriptiveReport::from_means(g, g).unwrap();
        assert!(r.gaps.iter().all(|g| g.percent_difference == 0.0));
    }

    #[test]
    fn empty_group_is_degenerate() {
        let rec = LabeledRecord {
            record: derive_features(RawTweet {
                tweet_id: "1".into(),
                author_id: "a".into(),
                likes: 3,
                ..RawTweet::default()
            }),
            is_uncertain: true,
            matches: vec![],
            suppressed: vec![],
        };
        assert!(matches!(describe(&[rec]), Err(InferenceError::DegenerateGroup(g)) if g == "certain"));
    }
}
