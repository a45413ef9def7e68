use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::json;
use shakk::classifier::{read_labeled_jsonl, write_labeled_jsonl};
use shakk::corpus::{FieldMap, InputFormat, LoadOptions};
use shakk::inference::{
    describe, negbin_clustered, ols_clustered, outlier_robustness, CovarianceKind, DesignMatrix, NegBinOptions,
    OutcomeScale,
};
use shakk::lexicon::NormalizeOptions;
use shakk::report::{render, ReportArtifacts, ResultSet};
use shakk::simulate::{attenuation_experiment, generate_corpus, LabelNoise, SimConfig};
use shakk::validation::{evaluate, read_gold_csv, stratified_sample, write_manifest_csv, ConfusionMatrix, ValidationReport};
use shakk::{classify_corpus, load_corpus, Classifier, LabeledRecord, Lexicon};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::manifest::{write_file, RunManifest};

fn require(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::missing(path))
    }
}

fn read_labeled(path: &Path) -> CliResult<Vec<LabeledRecord>> {
    require(path)?;
    let file = fs::File::open(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    read_labeled_jsonl(io::BufReader::new(file)).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn stdout_write(bytes: &[u8]) -> CliResult<()> {
    io::stdout()
        .lock()
        .write_all(bytes)
        .map_err(|e| CliError::runtime(format!("cannot write to stdout: {e}")))
}

pub fn classify(args: &ClassifyArgs) -> CliResult<()> {
    let ingest = &args.ingest;
    require(&ingest.input)?;
    let field_map = FieldMap::from_pairs(&ingest.field_map).map_err(CliError::usage)?;
    let opts = LoadOptions {
        format: ingest.format.map(|f| match f {
            FormatArg::Jsonl => InputFormat::Jsonl,
            FormatArg::Csv => InputFormat::Csv,
        }),
        field_map,
        strict: ingest.strict,
    };
    let mut manifest = RunManifest::new("classify", args);
    manifest.input(&ingest.input)?;
    let lexicon = match &args.lexicon {
        Some(path) => {
            require(path)?;
            manifest.input(path)?;
            Lexicon::load(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        }
        None => Lexicon::embedded(),
    };
    let corpus = load_corpus(&ingest.input, &opts).map_err(|e| CliError::input(format!("{}: {e}", ingest.input.display())))?;
    let classifier = Classifier::with_options(&lexicon, NormalizeOptions { fold: !args.no_fold }, true);
    let labeled = classify_corpus(&corpus, &classifier);

    let mut buf = Vec::new();
    write_labeled_jsonl(&labeled.records, &mut buf).map_err(CliError::runtime)?;
    match &args.out {
        Some(out) => {
            write_file(out, &buf)?;
            manifest.artifact(out);
            manifest.summary = Some(json!({
                "lexicon_version": lexicon.version,
                "lexicon_size": lexicon.len(),
                "prevalence": labeled.summary,
                "dedupe": corpus.dedupe_report,
                "rejected_rows": corpus.diagnostics,
            }));
            manifest.write_sidecar(out)?;
            Ok(())
        }
        None => stdout_write(&buf),
    }
}

fn write_report_dir(dir: &Path, artifacts: &ReportArtifacts, manifest: &mut RunManifest) -> CliResult<()> {
    let mut files: Vec<(&str, &str)> = vec![
        ("results.json", &artifacts.json),
        ("report.txt", &artifacts.text),
        ("coefficients.csv", &artifacts.coefficients_csv),
        ("group_means.csv", &artifacts.group_means_csv),
    ];
    if let Some(svg) = &artifacts.svg {
        files.push(("group_means.svg", svg));
    }
    for (name, body) in files {
        let path = dir.join(name);
        write_file(&path, body.as_bytes())?;
        manifest.artifact(&path);
    }
    manifest.write_in(dir)?;
    Ok(())
}

fn emit_results(results: &ResultSet, out_dir: Option<&Path>, svg: bool, manifest: &mut RunManifest) -> CliResult<()> {
    let artifacts = render(results, svg);
    match out_dir {
        Some(dir) => write_report_dir(dir, &artifacts, manifest),
        None => stdout_write(artifacts.text.as_bytes()),
    }
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<()> {
    if args.drop_top.is_some() && args.model == ModelArg::Negbin {
        return Err(CliError::usage("--drop-top applies to the OLS model only; it cannot be combined with --model negbin"));
    }
    if let Some(f) = args.drop_top {
        if !(f > 0.0 && f < 1.0) {
            return Err(CliError::usage(format!("--drop-top must lie strictly between 0 and 1, got {f}")));
        }
    }
    let mut records = read_labeled(&args.input)?;
    let mut manifest = RunManifest::new("analyze", args);
    manifest.input(&args.input)?;
    if args.cluster == ClusterArg::TweetId {
        // Models cluster on author_id; one cluster per tweet is the
        // heteroskedasticity-robust case.
        for r in &mut records {
            r.record.author_id = r.record.tweet_id.clone();
        }
    }
    let kind = if args.cr0 { CovarianceKind::Cr0 } else { CovarianceKind::Cr1 };
    let fail = |e: shakk::inference::InferenceError| CliError::runtime(e);

    let mut results = ResultSet {
        descriptive: Some(describe(&records).map_err(fail)?),
        ..ResultSet::default()
    };
    match args.model {
        ModelArg::Ols => {
            let design = DesignMatrix::engagement(&records, OutcomeScale::Log1p).map_err(fail)?;
            results.regressions.push(ols_clustered(&design, kind).map_err(fail)?);
            if let Some(f) = args.drop_top {
                results.robustness = Some(outlier_robustness(&records, 1.0 - f, kind).map_err(fail)?);
            }
        }
        ModelArg::Negbin => {
            let design = DesignMatrix::engagement(&records, OutcomeScale::Counts).map_err(fail)?;
            let opts = NegBinOptions {
                max_iter: args.max_iter,
                ..NegBinOptions::default()
            };
            results.regressions.push(negbin_clustered(&design, kind, &opts).map_err(fail)?);
        }
    }
    emit_results(&results, args.out_dir.as_deref(), args.svg, &mut manifest)
}

pub fn validate(args: &ValidateArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("validate", args);
    let report = match (&args.matrix, &args.predictions, &args.gold) {
        (Some(m), None, None) => {
            if m.len() != 4 {
                return Err(CliError::usage(format!("--matrix takes four counts TP,FP,FN,TN, got {}", m.len())));
            }
            ValidationReport::from_matrix(ConfusionMatrix::new(m[0], m[1], m[2], m[3])).map_err(CliError::input)?
        }
        (None, Some(pred), Some(gold)) => {
            let predictions = read_labeled(pred)?;
            require(gold)?;
            manifest.input(pred)?;
            manifest.input(gold)?;
            let file = fs::File::open(gold).map_err(|e| CliError::input(format!("cannot read {}: {e}", gold.display())))?;
            let labels = read_gold_csv(file).map_err(|e| CliError::input(format!("{}: {e}", gold.display())))?;
            evaluate(&predictions, &labels).map_err(CliError::input)?
        }
        _ => return Err(CliError::usage("give either --matrix or both --predictions and --gold")),
    };
    let results = ResultSet {
        validation: Some(report),
        ..ResultSet::default()
    };
    emit_results(&results, args.out_dir.as_deref(), false, &mut manifest)
}

pub fn sample(args: &SampleArgs) -> CliResult<()> {
    let records = read_labeled(&args.input)?;
    let mut manifest = RunManifest::new("sample", args);
    manifest.input(&args.input)?;
    manifest.seeds.push(args.seed);
    let rows = stratified_sample(&records, args.per_stratum, args.seed).map_err(CliError::input)?;
    let mut buf = Vec::new();
    write_manifest_csv(&rows, &mut buf).map_err(CliError::runtime)?;
    write_file(&args.out, &buf)?;
    manifest.artifact(&args.out);
    manifest.write_sidecar(&args.out)?;
    Ok(())
}

fn sim_config(args: &SimConfigArgs, manifest: &mut RunManifest) -> CliResult<SimConfig> {
    let mut config = match &args.config {
        Some(path) => {
            require(path)?;
            manifest.input(path)?;
            let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        }
        None => SimConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(n) = args.n_tweets {
        config.n_tweets = n;
    }
    config.validate().map_err(CliError::input)?;
    manifest.seeds.push(config.seed);
    Ok(config)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    if let Some(SimulateAction::Attenuate(a)) = &args.action {
        return attenuate(a);
    }
    let gen = &args.generate;
    let Some(out) = &gen.out else {
        return Err(CliError::usage("simulate needs --out (or the attenuate subcommand)"));
    };
    let mut manifest = RunManifest::new("simulate", gen);
    let config = sim_config(&gen.sim, &mut manifest)?;
    let sim = generate_corpus(&config).map_err(CliError::input)?;

    let mut buf = Vec::new();
    shakk::corpus::write_jsonl(&sim.corpus.records, &mut buf).map_err(CliError::runtime)?;
    write_file(out, &buf)?;
    manifest.artifact(out);
    if let Some(truth) = &gen.truth {
        let mut body = serde_json::to_string_pretty(&sim.truth).expect("truth serializes");
        body.push('\n');
        write_file(truth, body.as_bytes())?;
        manifest.artifact(truth);
    }
    manifest.summary = Some(json!({
        "config": config,
        "planted_uncertain": config.planted_count(),
        "n_authors": sim.truth.n_authors,
    }));
    manifest.write_sidecar(out)?;
    Ok(())
}

fn attenuate(args: &AttenuateArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("simulate attenuate", args);
    let config = sim_config(&args.sim, &mut manifest)?;
    let noise = if args.randomize {
        LabelNoise::Randomized
    } else {
        LabelNoise::Targets {
            precision: args.precision,
            recall: args.recall,
        }
    };
    let report = attenuation_experiment(&config, noise, args.reps).map_err(|e| match e {
        shakk::simulate::SimError::Config(_) => CliError::input(e),
        other => CliError::runtime(other),
    })?;
    let mut body = serde_json::to_string_pretty(&report).expect("report serializes");
    body.push('\n');
    match &args.out {
        Some(out) => {
            write_file(out, body.as_bytes())?;
            manifest.artifact(out);
            manifest.summary = Some(json!({ "config": config }));
            manifest.write_sidecar(out)?;
            Ok(())
        }
        None => stdout_write(body.as_bytes()),
    }
}

pub fn report(args: &ReportArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("report", args);
    let mut results = ResultSet::default();
    for path in &args.results {
        require(path)?;
        manifest.input(path)?;
        let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        let set: ResultSet = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        results.merge(set);
    }
    emit_results(&results, Some(&args.out_dir), args.svg, &mut manifest)
}
