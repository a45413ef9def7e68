//! Rendering of analysis results: plain text, CSV tables, JSON and an SVG
//! grouped bar chart of group means. All output is a pure function of the
//! [`ResultSet`], so identical inputs give identical bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::inference::{
    percent_change, DescriptiveReport, Metric, ModelKind, RegressionResult, RobustnessComparison, Term,
};
use crate::validation::ValidationReport;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResultSet {
    pub descriptive: Option<DescriptiveReport>,
    pub regressions: Vec<RegressionResult>,
    pub robustness: Option<RobustnessComparison>,
    pub validation: Option<ValidationReport>,
}

impl ResultSet {
    pub fn is_empty(&self) -> bool {
        self.descriptive.is_none() && self.regressions.is_empty() && self.robustness.is_none() && self.validation.is_none()
    }

    /// Fold another set in; later values replace earlier single-valued parts.
    pub fn merge(&mut self, other: ResultSet) {
        if other.descriptive.is_some() {
            self.descriptive = other.descriptive;
        }
        self.regressions.extend(other.regressions);
        if other.robustness.is_some() {
            self.robustness = other.robustness;
        }
        if other.validation.is_some() {
            self.validation = other.validation;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportArtifacts {
    pub text: String,
    pub coefficients_csv: String,
    pub group_means_csv: String,
    pub json: String,
    pub svg: Option<String>,
}

pub fn render(results: &ResultSet, with_svg: bool) -> ReportArtifacts {
    ReportArtifacts {
        text: render_text(results),
        coefficients_csv: coefficients_csv(results),
        group_means_csv: group_means_csv(results.descriptive.as_ref()),
        json: to_json(results),
        svg: with_svg.then(|| group_means_svg(results.descriptive.as_ref())),
    }
}

pub fn to_json(results: &ResultSet) -> String {
    let mut s = serde_json::to_string_pretty(results).expect("results serialize");
    s.push('\n');
    s
}

pub fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

pub fn fmt_pct(x: f64) -> String {
    format!("{x:.1}")
}

pub fn fmt_p(p: f64) -> String {
    if p == 0.0 {
        "0".to_string()
    } else if p < 0.001 {
        format!("{p:.1e}")
    } else {
        format!("{p:.3}")
    }
}

fn model_name(m: ModelKind) -> &'static str {
    match m {
        ModelKind::Ols => "ols",
        ModelKind::NegBin => "negbin",
    }
}

fn covariance_name(r: &RegressionResult) -> String {
    serde_json::to_value(r.covariance)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

const COEF_HEADER: &str = "fit,model,covariance,term,estimate,se,ci_low,ci_high,t,p,irr,irr_ci_low,irr_ci_high\n";

fn coef_row(out: &mut String, fit: &str, r: &RegressionResult, t: &Term) {
    let opt = |x: Option<f64>| x.map(fmt3).unwrap_or_default();
    let _ = writeln!(
        out,
        "{fit},{},{},{},{},{},{},{},{},{},{},{},{}",
        model_name(r.model),
        covariance_name(r),
        t.name,
        fmt3(t.estimate),
        fmt3(t.se),
        fmt3(t.ci95.0),
        fmt3(t.ci95.1),
        fmt3(t.t),
        fmt_p(t.p),
        opt(t.irr),
        opt(t.irr_ci95.map(|c| c.0)),
        opt(t.irr_ci95.map(|c| c.1)),
    );
}

pub fn coefficients_csv(results: &ResultSet) -> String {
    let mut out = String::from(COEF_HEADER);
    for r in &results.regressions {
        for t in &r.terms {
            coef_row(&mut out, "main", r, t);
        }
    }
    if let Some(rb) = &results.robustness {
        for (fit, r) in [("full", &rb.full), ("trimmed", &rb.trimmed)] {
            for t in &r.terms {
                coef_row(&mut out, fit, r, t);
            }
        }
    }
    out
}

pub fn group_means_csv(desc: Option<&DescriptiveReport>) -> String {
    let mut out = String::from("metric,n_uncertain,n_certain,mean_uncertain,mean_certain,percent_difference,largest_gap\n");
    if let Some(d) = desc {
        for g in &d.gaps {
            let _ = writeln!(
                out,
                "{},{},{},{:.2},{:.2},{},{}",
                g.metric.as_str(),
                d.uncertain.n,
                d.certain.n,
                g.mean_uncertain,
                g.mean_certain,
                fmt_pct(g.percent_difference),
                g.metric == d.largest_gap
            );
        }
    }
    out
}

fn signed_pct(x: f64) -> String {
    if x >= 0.0 {
        format!("+{}%", fmt_pct(x))
    } else {
        format!("{}%", fmt_pct(x))
    }
}

fn regression_text(out: &mut String, title: &str, r: &RegressionResult) {
    let _ = writeln!(
        out,
        "{title}: {} (n = {}, clusters = {}, {} covariance, df = {})",
        model_name(r.model),
        r.n,
        r.n_clusters,
        covariance_name(r).to_uppercase(),
        r.df
    );
    let _ = writeln!(out, "  {:<14} {:>9} {:>8} {:>20} {:>9}", "term", "estimate", "se", "95% CI", "p");
    for t in &r.terms {
        let ci = format!("[{}, {}]", fmt3(t.ci95.0), fmt3(t.ci95.1));
        let _ = write!(out, "  {:<14} {:>9} {:>8} {:>20} {:>9}", t.name, fmt3(t.estimate), fmt3(t.se), ci, fmt_p(t.p));
        if let (Some(irr), Some((lo, hi))) = (t.irr, t.irr_ci95) {
            let _ = write!(out, "  IRR {} [{}, {}]", fmt3(irr), fmt3(lo), fmt3(hi));
        }
        out.push('\n');
    }
    if let Some(r2) = r.r_squared {
        let _ = writeln!(out, "  R² = {}", fmt3(r2));
    }
    if let Some(a) = r.dispersion_alpha {
        let _ = writeln!(out, "  α = {}", fmt3(a));
    }
    if let Some(u) = r.uncertainty() {
        let label = match r.model {
            ModelKind::Ols => "expected engagement",
            ModelKind::NegBin => "expected count",
        };
        let _ = writeln!(
            out,
            "  uncertainty: exp({})−1 = {} {label}",
            fmt3(u.estimate),
            signed_pct(percent_change(u.estimate))
        );
    }
}

pub fn render_text(results: &ResultSet) -> String {
    let mut out = String::new();
    if results.is_empty() {
        out.push_str("No results.\n");
        return out;
    }
    if let Some(d) = &results.descriptive {
        let _ = writeln!(
            out,
            "Group means (uncertain n = {}, certain n = {})",
            d.uncertain.n, d.certain.n
        );
        let _ = writeln!(out, "  {:<9} {:>10} {:>10} {:>8}", "metric", "uncertain", "certain", "diff");
        for g in &d.gaps {
            let _ = writeln!(
                out,
                "  {:<9} {:>10.2} {:>10.2} {:>8}",
                g.metric.as_str(),
                g.mean_uncertain,
                g.mean_certain,
                signed_pct(g.percent_difference)
            );
        }
        let _ = writeln!(out, "  largest relative gap: {}", d.largest_gap.as_str());
        out.push('\n');
    }
    for r in &results.regressions {
        regression_text(&mut out, "Regression", r);
        out.push('\n');
    }
    if let Some(rb) = &results.robustness {
        let _ = writeln!(
            out,
            "Outlier robustness: dropped {} rows above the {} quantile ({})",
            rb.excluded,
            rb.quantile,
            fmt3(rb.threshold)
        );
        regression_text(&mut out, "Trimmed", &rb.trimmed);
        let _ = writeln!(
            out,
            "  sign preserved: {}; significant in both: {}",
            rb.sign_preserved, rb.significant_in_both
        );
        out.push('\n');
    }
    if let Some(v) = &results.validation {
        let m = v.matrix;
        let _ = writeln!(out, "Validation (tp = {}, fp = {}, fn = {}, tn = {})", m.tp, m.fp, m.fn_, m.tn);
        let _ = writeln!(
            out,
            "  accuracy {}  precision {}  recall {}  F1 {}  kappa {}",
            fmt3(v.accuracy),
            fmt3(v.precision),
            fmt3(v.recall),
            fmt3(v.f1),
            v.kappa.map(fmt3).unwrap_or_else(|| "undefined".into())
        );
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}

const SVG_W: f64 = 520.0;
const SVG_H: f64 = 320.0;
const MARGIN_L: f64 = 50.0;
const MARGIN_B: f64 = 40.0;
const MARGIN_T: f64 = 40.0;
const COLOR_UNCERTAIN: &str = "#c0504d";
const COLOR_CERTAIN: &str = "#4f81bd";

/// Grouped bars of mean likes, retweets and replies by group.
pub fn group_means_svg(desc: Option<&DescriptiveReport>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">"#
    );
    let base = SVG_H - MARGIN_B;
    let plot_h = base - MARGIN_T;
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_L}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        SVG_W - 10.0
    );
    let _ = writeln!(s, r#"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{base}" stroke="black"/>"#);
    if let Some(d) = desc {
        let max = Metric::COMPONENTS
            .iter()
            .flat_map(|&m| [d.uncertain.get(m), d.certain.get(m)])
            .fold(0.0f64, f64::max);
        let scale = if max > 0.0 { plot_h / max } else { 0.0 };
        let slot = (SVG_W - MARGIN_L - 10.0) / 3.0;
        let bar_w = slot / 3.0;
        for (i, m) in Metric::COMPONENTS.iter().enumerate() {
            let x0 = MARGIN_L + slot * i as f64 + bar_w / 2.0;
            for (j, (v, color)) in [(d.uncertain.get(*m), COLOR_UNCERTAIN), (d.certain.get(*m), COLOR_CERTAIN)]
                .into_iter()
                .enumerate()
            {
                let h = v * scale;
                let x = x0 + bar_w * j as f64;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.1}" y="{:.1}" width="{bar_w:.1}" height="{h:.1}" fill="{color}"/>"#,
                    base - h
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.2}</text>"#,
                    x + bar_w / 2.0,
                    base - h - 4.0
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{} ({})</text>"#,
                x0 + bar_w,
                base + 18.0,
                m.as_str(),
                signed_pct(d.gap(*m).percent_difference)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="12" width="10" height="10" fill="{COLOR_UNCERTAIN}"/><text x="{}" y="21">uncertain</text>"#,
            MARGIN_L,
            MARGIN_L + 14.0
        );
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="12" width="10" height="10" fill="{COLOR_CERTAIN}"/><text x="{}" y="21">certain</text>"#,
            MARGIN_L + 100.0,
            MARGIN_L + 114.0
        );
    }
    s.push_str("</svg>\n");
    s
}
