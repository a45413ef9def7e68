use shakk::classifier::{classify_corpus, Classifier};
use shakk::simulate::{attenuation_experiment, generate_corpus, LabelNoise, SimConfig};
use shakk::Lexicon;

fn config(n: usize, seed: u64) -> SimConfig {
    SimConfig {
        n_tweets: n,
        seed,
        ..SimConfig::default()
    }
}

#[test]
fn classifier_prevalence_equals_planting() {
    for seed in [11, 12, 13] {
        let cfg = config(2500, seed);
        let sim = generate_corpus(&cfg).unwrap();
        let labeled = classify_corpus(&sim.corpus, &Classifier::new(&Lexicon::embedded()));
        assert_eq!(labeled.summary.uncertain, cfg.planted_count());
        assert_eq!(labeled.summary.total, 2500);
    }
}

#[test]
fn randomized_labels_center_on_zero() {
    let rep = attenuation_experiment(&config(4000, 21), LabelNoise::Randomized, 40).unwrap();
    assert!(rep.mean_estimate.abs() <= 2.0 * rep.mc_se, "{} ± {}", rep.mean_estimate, rep.mc_se);
}

#[test]
fn lower_precision_never_increases_mean_effect() {
    let cfg = config(4000, 31);
    let mut last = f64::INFINITY;
    for precision in [1.0, 0.8, 0.6, 0.47, 0.35] {
        let rep = attenuation_experiment(&cfg, LabelNoise::Targets { precision, recall: 1.0 }, 10).unwrap();
        let mean_abs = rep.estimates.iter().map(|e| e.abs()).sum::<f64>() / rep.estimates.len() as f64;
        assert!(mean_abs <= last, "precision {precision}: {mean_abs} > {last}");
        last = mean_abs;
    }
}

#[test]
fn recall_loss_keeps_estimates_finite() {
    let rep = attenuation_experiment(&config(3000, 41), LabelNoise::Targets { precision: 1.0, recall: 0.5 }, 4).unwrap();
    assert!(rep.attenuation_ratio.is_finite());
    assert!((rep.achieved_recall - 0.5).abs() < 0.01);
}
