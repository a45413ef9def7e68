//! Synthetic corpora with known ground truth.
//!
//! Authors post `1 + Poisson(mean − 1)` tweets each. Per tweet, covariates
//! are drawn from simple marginals (see [`SimConfig`]); uncertain tweets get
//! one unconditional lexicon marker planted in their text, so the classifier
//! recovers the planted label exactly. The outcome is generated on the log
//! scale from the linear predictor plus an author random effect.
//!
//! Randomness comes from ChaCha8 streams keyed by `(seed, stream)`; corpus
//! replication `r` uses its own streams, so parallel and serial runs agree.

use chrono::{DateTime, Duration, TimeZone, Utc};
use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Binomial, Distribution, Gamma, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::LabeledRecord;
use crate::corpus::{derive_features, Corpus, RawTweet};
use crate::inference::{fit_ols, DesignMatrix, InferenceError, OutcomeScale};
use crate::lexicon::Lexicon;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

/// Filler vocabulary for synthetic text; none of these is a lexicon marker.
pub const FILLER_WORDS: [&str; 20] = [
    "لبنان", "بيروت", "الحكومة", "اليوم", "الوضع", "الاقتصاد", "الناس", "الكهرباء", "الوزير", "المجلس", "الجنوب",
    "الليرة", "المصارف", "الشارع", "الانتخابات", "المطار", "الرئيس", "الجلسة", "الأسعار", "البلد",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueBeta {
    pub uncertainty: f64,
    /// Per character.
    pub length: f64,
    pub has_link: f64,
    pub verified: f64,
}

impl Default for TrueBeta {
    fn default() -> Self {
        TrueBeta {
            uncertainty: 0.221,
            length: 0.001,
            has_link: 0.243,
            verified: 0.376,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OutcomeFamily {
    /// log1p(engagement) = η + author effect + N(0, noise_sd²), then rounded
    /// back to a count and clipped at zero.
    LognormalOls,
    /// NB2 counts with mean exp(η + author effect); the uncertainty
    /// coefficient is ln(irr).
    Negbin { irr: f64, alpha: f64 },
}

/// Engagement split across likes / retweets / replies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentShares {
    pub likes: f64,
    pub retweets: f64,
    pub replies: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_tweets: usize,
    pub mean_tweets_per_author: f64,
    pub prevalence: f64,
    pub intercept: f64,
    pub true_beta: TrueBeta,
    pub outcome: OutcomeFamily,
    /// Residual sd on the log scale (lognormal family only).
    pub noise_sd: f64,
    pub author_effect_sd: f64,
    /// Tweet length ~ round(N(mean, sd)), redrawn until positive.
    pub length_mean: f64,
    pub length_sd: f64,
    /// Per-tweet Bernoulli rate.
    pub link_rate: f64,
    /// Per-author Bernoulli rate.
    pub verified_rate: f64,
    pub reply_rate: f64,
    pub shares_uncertain: ComponentShares,
    pub shares_certain: ComponentShares,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_tweets: 16_695,
            mean_tweets_per_author: 2.2,
            prevalence: 0.299,
            intercept: 2.3,
            true_beta: TrueBeta::default(),
            outcome: OutcomeFamily::LognormalOls,
            noise_sd: 0.8,
            author_effect_sd: 0.3,
            length_mean: 120.0,
            length_sd: 60.0,
            link_rate: 0.4,
            verified_rate: 0.05,
            reply_rate: 0.412,
            // Group means 18.84/2.66/2.16 and 12.82/1.61/1.19.
            shares_uncertain: ComponentShares {
                likes: 18.84,
                retweets: 2.66,
                replies: 2.16,
            },
            shares_certain: ComponentShares {
                likes: 12.82,
                retweets: 1.61,
                replies: 1.19,
            },
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.n_tweets < 1 {
            return bad("n_tweets must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.prevalence) {
            return bad(format!("prevalence {} outside [0, 1]", self.prevalence));
        }
        let planted = self.planted_count();
        if self.prevalence > 0.0 && self.prevalence < 1.0 && (planted == 0 || planted == self.n_tweets) {
            return bad(format!(
                "prevalence {} with n_tweets {} leaves a stratum empty",
                self.prevalence, self.n_tweets
            ));
        }
        if !(self.mean_tweets_per_author >= 1.0 && self.mean_tweets_per_author.is_finite()) {
            return bad("mean_tweets_per_author must be >= 1".into());
        }
        for (name, v) in [
            ("noise_sd", self.noise_sd),
            ("author_effect_sd", self.author_effect_sd),
            ("length_sd", self.length_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a nonnegative number"));
            }
        }
        for (name, v) in [
            ("link_rate", self.link_rate),
            ("verified_rate", self.verified_rate),
            ("reply_rate", self.reply_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        if let OutcomeFamily::Negbin { irr, alpha } = self.outcome {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return bad(format!("negbin alpha must be > 0, got {alpha}"));
            }
            if !(irr > 0.0 && irr.is_finite()) {
                return bad(format!("negbin irr must be > 0, got {irr}"));
            }
        }
        for s in [self.shares_uncertain, self.shares_certain] {
            let parts = [s.likes, s.retweets, s.replies];
            if parts.iter().any(|p| p.is_nan() || *p < 0.0) || parts.iter().sum::<f64>() <= 0.0 {
                return bad("component shares must be nonnegative with a positive sum".into());
            }
        }
        Ok(())
    }

    /// Number of tweets that receive a planted marker.
    pub fn planted_count(&self) -> usize {
        (self.prevalence * self.n_tweets as f64).round() as usize
    }

    fn uncertainty_coefficient(&self) -> f64 {
        match self.outcome {
            OutcomeFamily::LognormalOls => self.true_beta.uncertainty,
            OutcomeFamily::Negbin { irr, .. } => irr.ln(),
        }
    }
}

/// Known truth behind a simulated corpus, aligned with its records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub planted_uncertain: Vec<bool>,
    pub planted_marker: Vec<Option<String>>,
    /// Linear predictor including the author effect (log scale).
    pub linear_predictor: Vec<f64>,
    /// Continuous log-scale outcome before rounding (lognormal family).
    pub latent_log_outcome: Vec<f64>,
    pub n_authors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCorpus {
    pub corpus: Corpus,
    pub truth: GroundTruth,
}

impl SimulatedCorpus {
    /// Records labeled with the planted truth, no classifier involved.
    pub fn truth_labeled(&self) -> Vec<LabeledRecord> {
        self.labeled_with(&self.truth.planted_uncertain)
    }

    pub fn labeled_with(&self, labels: &[bool]) -> Vec<LabeledRecord> {
        self.corpus
            .records
            .iter()
            .zip(labels)
            .map(|(r, &u)| LabeledRecord {
                record: r.clone(),
                is_uncertain: u,
                matches: Vec::new(),
                suppressed: Vec::new(),
            })
            .collect()
    }
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn generate_corpus(config: &SimConfig) -> Result<SimulatedCorpus, SimError> {
    generate_with_rng(config, &mut rng_for(config.seed, 0))
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("validated sd")
}

fn random_slug(rng: &mut ChaCha8Rng, len: usize) -> String {
    const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    (0..len).map(|_| ALNUM[rng.random_range(0..ALNUM.len())] as char).collect()
}

/// Build text of `target` chars where possible: optional marker, filler
/// words, dot padding, then an optional link.
fn build_text(rng: &mut ChaCha8Rng, target: usize, marker: Option<&str>, link: Option<&str>) -> String {
    let link_len = link.map_or(0, |l| l.chars().count() + 1);
    let body_target = target.saturating_sub(link_len);
    let mut body = marker.unwrap_or("").to_string();
    let mut body_len = body.chars().count();
    loop {
        let word = FILLER_WORDS[rng.random_range(0..FILLER_WORDS.len())];
        let extra = word.chars().count() + usize::from(body_len > 0);
        if body_len + extra > body_target {
            break;
        }
        if body_len > 0 {
            body.push(' ');
        }
        body.push_str(word);
        body_len += extra;
    }
    while body_len < body_target {
        body.push('.');
        body_len += 1;
    }
    match link {
        Some(l) if body.is_empty() => l.to_string(),
        Some(l) => format!("{body} {l}"),
        None => body,
    }
}

fn split_engagement(rng: &mut ChaCha8Rng, total: u64, shares: ComponentShares) -> (u64, u64, u64) {
    let sum = shares.likes + shares.retweets + shares.replies;
    let likes = Binomial::new(total, (shares.likes / sum).clamp(0.0, 1.0))
        .expect("valid p")
        .sample(rng);
    let rest = total - likes;
    let rt_share = shares.retweets + shares.replies;
    let p_rt = if rt_share > 0.0 { shares.retweets / rt_share } else { 0.0 };
    let retweets = Binomial::new(rest, p_rt.clamp(0.0, 1.0)).expect("valid p").sample(rng);
    (likes, retweets, rest - retweets)
}

fn generate_with_rng(config: &SimConfig, rng: &mut ChaCha8Rng) -> Result<SimulatedCorpus, SimError> {
    config.validate()?;
    let n = config.n_tweets;
    let lexicon = Lexicon::embedded();
    let markers: Vec<&str> = lexicon.unconditional_markers().map(|m| m.raw.as_str()).collect();

    // Authors.
    let extra_posts = (config.mean_tweets_per_author > 1.0)
        .then(|| Poisson::new(config.mean_tweets_per_author - 1.0).expect("positive rate"));
    let author_effect = normal(0.0, config.author_effect_sd);
    let verified_dist = Bernoulli::new(config.verified_rate).expect("validated rate");
    let mut author_of = Vec::with_capacity(n);
    let mut authors: Vec<(f64, bool)> = Vec::new();
    while author_of.len() < n {
        let posts = 1 + extra_posts.as_ref().map_or(0, |p| p.sample(rng) as usize);
        let idx = authors.len();
        authors.push((author_effect.sample(rng), verified_dist.sample(rng)));
        for _ in 0..posts.min(n - author_of.len()) {
            author_of.push(idx);
        }
    }

    // Which tweets are uncertain: an exact count, positions shuffled.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut planted = vec![false; n];
    for &i in &order[..config.planted_count()] {
        planted[i] = true;
    }

    let link_dist = Bernoulli::new(config.link_rate).expect("validated rate");
    let reply_dist = Bernoulli::new(config.reply_rate).expect("validated rate");
    let length_dist = normal(config.length_mean, config.length_sd);
    let noise = normal(0.0, config.noise_sd);
    let beta = config.true_beta;
    let b_unc = config.uncertainty_coefficient();
    let start: DateTime<Utc> = Utc.with_ymd_and_hms(2025, 12, 15, 0, 0, 0).unwrap();
    let window_secs = 35 * 24 * 3600;

    let mut records = Vec::with_capacity(n);
    let mut truth = GroundTruth {
        planted_uncertain: planted.clone(),
        planted_marker: Vec::with_capacity(n),
        linear_predictor: Vec::with_capacity(n),
        latent_log_outcome: Vec::with_capacity(n),
        n_authors: authors.len(),
    };

    for i in 0..n {
        let (effect, verified) = authors[author_of[i]];
        let has_link = link_dist.sample(rng);
        let is_reply = reply_dist.sample(rng);
        let mut target = 0.0;
        for _ in 0..100 {
            target = length_dist.sample(rng).round();
            if target >= 1.0 {
                break;
            }
        }
        let target = target.max(1.0) as usize;
        let marker = planted[i].then(|| markers[rng.random_range(0..markers.len())]);
        let link = has_link.then(|| format!("https://t.co/{}", random_slug(rng, 10)));
        let text = build_text(rng, target, marker, link.as_deref());
        let length = text.chars().count() as f64;

        let eta = config.intercept
            + b_unc * f64::from(u8::from(planted[i]))
            + beta.length * length
            + beta.has_link * f64::from(u8::from(has_link))
            + beta.verified * f64::from(u8::from(verified))
            + effect;

        let (total, latent) = match config.outcome {
            OutcomeFamily::LognormalOls => {
                let latent = eta + noise.sample(rng);
                (latent.exp_m1().round().clamp(0.0, 1e15) as u64, latent)
            }
            OutcomeFamily::Negbin { alpha, .. } => {
                let mu = eta.exp();
                let lambda = mu * Gamma::new(1.0 / alpha, alpha).expect("validated alpha").sample(rng);
                let y = if lambda > 0.0 {
                    Poisson::new(lambda).expect("positive rate").sample(rng)
                } else {
                    0.0
                };
                (y as u64, eta)
            }
        };
        let shares = if planted[i] {
            config.shares_uncertain
        } else {
            config.shares_certain
        };
        let (likes, retweets, replies) = split_engagement(rng, total, shares);
        let created_at = start + Duration::seconds(rng.random_range(0..window_secs));

        records.push(derive_features(RawTweet {
            tweet_id: format!("t{:06}", i + 1),
            author_id: format!("u{:05}", author_of[i] + 1),
            text,
            created_at: Some(created_at),
            likes,
            retweets,
            replies,
            verified: Some(verified),
            is_reply: Some(is_reply),
            has_link: Some(has_link),
        }));
        truth.planted_marker.push(marker.map(str::to_string));
        truth.linear_predictor.push(eta);
        truth.latent_log_outcome.push(latent);
    }

    let mut corpus = Corpus::from_records(records);
    corpus.provenance.source = Some(format!("simulated:seed={}", config.seed));
    Ok(SimulatedCorpus { corpus, truth })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelNoise {
    /// Keep `recall` of the true positives and add false positives until the
    /// predicted-positive precision reaches `precision`.
    Targets { precision: f64, recall: f64 },
    /// Predicted labels are a random permutation of the truth.
    Randomized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationReport {
    pub noise: LabelNoise,
    pub true_beta: f64,
    pub replications: usize,
    pub estimates: Vec<f64>,
    pub mean_estimate: f64,
    /// Monte Carlo standard error of the mean estimate.
    pub mc_se: f64,
    pub attenuation_ratio: f64,
    /// Share of replications whose estimate lies strictly below the truth.
    pub share_below_truth: f64,
    /// Achieved precision/recall, averaged over replications.
    pub achieved_precision: f64,
    pub achieved_recall: f64,
}

fn corrupt_labels(truth: &[bool], noise: LabelNoise, rng: &mut ChaCha8Rng) -> Result<Vec<bool>, SimError> {
    match noise {
        LabelNoise::Randomized => {
            let mut labels = truth.to_vec();
            labels.shuffle(rng);
            Ok(labels)
        }
        LabelNoise::Targets { precision, recall } => {
            if !(precision > 0.0 && precision <= 1.0) || !(recall > 0.0 && recall <= 1.0) {
                return Err(SimError::Config(format!(
                    "precision and recall targets must lie in (0, 1], got {precision} / {recall}"
                )));
            }
            let mut positives: Vec<usize> = (0..truth.len()).filter(|&i| truth[i]).collect();
            let mut negatives: Vec<usize> = (0..truth.len()).filter(|&i| !truth[i]).collect();
            positives.shuffle(rng);
            negatives.shuffle(rng);
            let keep = (recall * positives.len() as f64).round() as usize;
            let false_pos = (keep as f64 * (1.0 - precision) / precision).round() as usize;
            if false_pos > negatives.len() {
                return Err(SimError::Config(format!(
                    "precision {precision} needs {false_pos} false positives but only {} negatives exist",
                    negatives.len()
                )));
            }
            let mut labels = vec![false; truth.len()];
            for &i in positives[..keep].iter().chain(&negatives[..false_pos]) {
                labels[i] = true;
            }
            Ok(labels)
        }
    }
}

/// Refit the log-linear model on noisy labels over independent replications
/// and compare the mean uncertainty coefficient with the truth.
pub fn attenuation_experiment(config: &SimConfig, noise: LabelNoise, replications: usize) -> Result<AttenuationReport, SimError> {
    if replications < 1 {
        return Err(SimError::Config("replications must be >= 1".into()));
    }
    config.validate()?;
    let true_beta = config.uncertainty_coefficient();

    let per_rep: Vec<(f64, f64, f64)> = (0..replications as u64)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64, f64), SimError> {
            let sim = generate_with_rng(config, &mut rng_for(config.seed, 1 + 2 * r))?;
            let truth = &sim.truth.planted_uncertain;
            let labels = corrupt_labels(truth, noise, &mut rng_for(config.seed, 2 + 2 * r))?;
            let (mut tp, mut pp, mut ap) = (0usize, 0usize, 0usize);
            for (&p, &t) in labels.iter().zip(truth) {
                tp += usize::from(p && t);
                pp += usize::from(p);
                ap += usize::from(t);
            }
            let design = DesignMatrix::engagement(&sim.labeled_with(&labels), OutcomeScale::Log1p)?;
            let fit = fit_ols(&design)?;
            let col = design.column_index("uncertainty").expect("engagement design");
            let prec = if pp == 0 { 0.0 } else { tp as f64 / pp as f64 };
            let rec = if ap == 0 { 0.0 } else { tp as f64 / ap as f64 };
            Ok((fit.coefficients[col], prec, rec))
        })
        .collect::<Result<_, _>>()?;

    let estimates: Vec<f64> = per_rep.iter().map(|e| e.0).collect();
    let k = replications as f64;
    let mean = estimates.iter().sum::<f64>() / k;
    let var = if replications > 1 {
        estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(AttenuationReport {
        noise,
        true_beta,
        replications,
        mean_estimate: mean,
        mc_se: (var / k).sqrt(),
        attenuation_ratio: mean / true_beta,
        share_below_truth: estimates.iter().filter(|&&e| e < true_beta).count() as f64 / k,
        achieved_precision: per_rep.iter().map(|e| e.1).sum::<f64>() / k,
        achieved_recall: per_rep.iter().map(|e| e.2).sum::<f64>() / k,
        estimates,
    })
}

/// Latent outcome as a vector, for fitting on the continuous scale.
pub fn latent_outcome(truth: &GroundTruth) -> DVector<f64> {
    DVector::from_vec(truth.latent_log_outcome.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{classify_corpus, Classifier};
    use crate::corpus::write_jsonl;

    fn small(n: usize, seed: u64) -> SimConfig {
        SimConfig {
            n_tweets: n,
            seed,
            ..SimConfig::default()
        }
    }

    #[test]
    fn planted_count_is_exact() {
        let sim = generate_corpus(&SimConfig::default()).unwrap();
        let planted = sim.truth.planted_uncertain.iter().filter(|&&u| u).count();
        assert_eq!(planted, (0.299f64 * 16_695.0).round() as usize);
        assert_eq!(planted, 4992);
        assert_eq!(sim.corpus.len(), 16_695);
    }

    #[test]
    fn classifier_agrees_with_planting() {
        let sim = generate_corpus(&small(3000, 5)).unwrap();
        let labeled = classify_corpus(&sim.corpus, &Classifier::new(&Lexicon::embedded()));
        for (l, &t) in labeled.records.iter().zip(&sim.truth.planted_uncertain) {
            assert_eq!(l.is_uncertain, t, "{}", l.record.text);
        }
        assert_eq!(labeled.summary.uncertain, small(3000, 5).planted_count());
    }

    #[test]
    fn filler_words_are_not_markers() {
        let c = Classifier::new(&Lexicon::embedded());
        for w in FILLER_WORDS {
            assert!(!c.classify_text("x", w).is_uncertain, "{w}");
            assert!(c.classify_text("x", w).suppressed.is_empty());
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let dump = |seed| {
            let sim = generate_corpus(&small(500, seed)).unwrap();
            let mut buf = Vec::new();
            write_jsonl(&sim.corpus.records, &mut buf).unwrap();
            buf
        };
        assert_eq!(dump(9), dump(9));
        assert_ne!(dump(9), dump(10));
    }

    #[test]
    fn texts_hit_target_lengths_and_links() {
        let sim = generate_corpus(&small(800, 3)).unwrap();
        for r in &sim.corpus.records {
            assert_eq!(r.length_chars, r.text.chars().count() as u64);
            assert_eq!(r.has_link, r.text.contains("https://t.co/"));
        }
        let mean_tweets = 800.0 / sim.truth.n_authors as f64;
        assert!((mean_tweets - 2.2).abs() < 0.25, "{mean_tweets}");
    }

    #[test]
    fn noiseless_outcome_is_recovered_exactly() {
        let cfg = SimConfig {
            n_tweets: 2000,
            noise_sd: 0.0,
            author_effect_sd: 0.0,
            seed: 4,
            ..SimConfig::default()
        };
        let sim = generate_corpus(&cfg).unwrap();
        let design = DesignMatrix::engagement(&sim.truth_labeled(), OutcomeScale::Log1p)
            .unwrap()
            .with_outcome(latent_outcome(&sim.truth))
            .unwrap();
        let fit = fit_ols(&design).unwrap();
        let want = [cfg.intercept, 0.221, 0.001, 0.243, 0.376];
        for (got, want) in fit.coefficients.iter().zip(want) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn config_errors() {
        let bad = |c: SimConfig| matches!(generate_corpus(&c), Err(SimError::Config(_)));
        assert!(bad(SimConfig { n_tweets: 0, ..small(1, 1) }));
        assert!(bad(SimConfig { prevalence: 1.5, ..small(10, 1) }));
        assert!(bad(SimConfig { prevalence: 0.3, ..small(1, 1) }));
        assert!(bad(SimConfig {
            outcome: OutcomeFamily::Negbin { irr: 1.3, alpha: 0.0 },
            ..small(10, 1)
        }));
        assert!(bad(SimConfig {
            mean_tweets_per_author: 0.5,
            ..small(10, 1)
        }));
        assert!(generate_corpus(&SimConfig { prevalence: 0.0, ..small(5, 1) }).is_ok());
    }

    #[test]
    fn unattainable_precision_is_rejected() {
        let cfg = SimConfig {
            prevalence: 0.7,
            ..small(200, 1)
        };
        let err = attenuation_experiment(&cfg, LabelNoise::Targets { precision: 0.2, recall: 1.0 }, 1).unwrap_err();
        assert!(matches!(err, SimError::Config(m) if m.contains("false positives")));
        assert!(attenuation_experiment(&cfg, LabelNoise::Randomized, 0).is_err());
    }

    #[test]
    fn achieved_noise_matches_targets() {
        let cfg = small(4000, 2);
        let rep = attenuation_experiment(&cfg, LabelNoise::Targets { precision: 0.47, recall: 1.0 }, 3).unwrap();
        assert!((rep.achieved_precision - 0.47).abs() < 0.002, "{}", rep.achieved_precision);
        assert_eq!(rep.achieved_recall, 1.0);
        assert_eq!(rep.estimates.len(), 3);
    }

    #[test]
    fn replications_are_reproducible() {
        let cfg = small(1500, 8);
        let a = attenuation_experiment(&cfg, LabelNoise::Targets { precision: 0.6, recall: 1.0 }, 4).unwrap();
        let b = attenuation_experiment(&cfg, LabelNoise::Targets { precision: 0.6, recall: 1.0 }, 4).unwrap();
        assert_eq!(a, b);
    }
}
