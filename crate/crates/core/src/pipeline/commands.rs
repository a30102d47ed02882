//! Stage implementations behind the command-line subcommands.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

use super::manifest::{file_digest, sidecar_path, RunManifest};
use super::output::{num, write_tidy};
use super::scores::{IngestReport, ScoreStore};
use crate::analysis::{
    correlation_trajectory, cross_model_correlation, detect_phases, predictor_correlations, regression_trajectory,
    CorrelationMethod, RegressionMode, RegressionSpec, TrajectorySeries,
};
use crate::corpus_index::{is_punctuation, tokenize_line, CorpusIndex, TokenizeOptions};
use crate::dataset::{build_dataset, read_dataset, write_dataset, BuildReport, Dataset, FilterConfig, SentenceHook, Split, SplitSizes};
use crate::heuristics::{column_role, score_heuristics, ColumnRole, HeuristicReport, HeuristicTable};
use crate::ngram::BackoffConfig;
use crate::similarity::{EmbeddingTable, WeightingScheme};

/// Bad invocation detected after argument parsing (exit status 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn build_index(corpus: &Path, out: &Path, lowercase: bool) -> Result<CorpusIndex> {
    let mut manifest = RunManifest::new("build-index", json!({ "lowercase": lowercase }), None);
    manifest.add_input("corpus", corpus)?;
    let index = CorpusIndex::from_text(open(corpus)?, TokenizeOptions { lowercase })
        .with_context(|| format!("indexing {}", corpus.display()))?;
    index.save(out).with_context(|| format!("writing {}", out.display()))?;
    manifest.finish();
    manifest.write(&sidecar_path(out))?;
    Ok(index)
}

/// Counts a query given as words; the words go through the corpus tokenizer.
pub fn count(index: &Path, words: &[String], lowercase: bool) -> Result<u64> {
    let tokens = tokenize_line(&words.join(" "), TokenizeOptions { lowercase });
    if tokens.is_empty() {
        return Err(UsageError("count query must contain at least one token".into()).into());
    }
    let index = CorpusIndex::load(index).with_context(|| format!("loading {}", index.display()))?;
    Ok(index.count_words(&tokens)?)
}

#[derive(Debug, Clone)]
pub struct BuildDatasetArgs {
    pub sentences: PathBuf,
    pub indices: Vec<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub sizes: SplitSizes,
    pub min_words: usize,
    pub require_capitalization: bool,
    pub blocklist: Option<PathBuf>,
    pub vocabularies: Vec<PathBuf>,
    pub lowercase: bool,
}

fn word_set(path: &Path) -> Result<HashSet<String>> {
    let mut set = HashSet::new();
    for line in open(path)?.lines() {
        set.extend(line?.split_whitespace().map(str::to_owned));
    }
    Ok(set)
}

pub fn build_dataset_cmd(args: &BuildDatasetArgs) -> Result<(Dataset, BuildReport)> {
    let mut cfg = FilterConfig {
        min_words: args.min_words,
        require_capitalization: args.require_capitalization,
        split_sizes: args.sizes,
        seed: args.seed,
        tokenize: TokenizeOptions { lowercase: args.lowercase },
        ..FilterConfig::default()
    };
    if let Some(path) = &args.blocklist {
        let blocked = word_set(path)?;
        cfg.content_hook = Some(SentenceHook::new(format!("blocklist:{}", file_digest(path)?), move |tokens: &[String]| {
            !tokens.iter().any(|t| blocked.contains(&t.to_lowercase()))
        }));
    }
    if !args.vocabularies.is_empty() {
        let mut label = String::from("vocabularies");
        let mut sets = Vec::new();
        for path in &args.vocabularies {
            label.push(':');
            label.push_str(&file_digest(path)?);
            sets.push(word_set(path)?);
        }
        cfg.vocabulary_hook = Some(SentenceHook::new(label, move |tokens: &[String]| {
            tokens
                .iter()
                .filter(|t| !is_punctuation(t))
                .all(|t| sets.iter().all(|s| s.contains(t)))
        }));
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;

    let mut manifest = RunManifest::new(
        "build-dataset",
        json!({ "filter_config_digest": cfg.digest() }),
        Some(args.seed),
    );
    manifest.add_input("sentences", &args.sentences)?;
    let mut indices = Vec::new();
    for path in &args.indices {
        manifest.add_input("decontamination_index", path)?;
        indices.push(CorpusIndex::load(path).with_context(|| format!("loading {}", path.display()))?);
    }
    if let Some(p) = &args.blocklist {
        manifest.add_input("blocklist", p)?;
    }
    for p in &args.vocabularies {
        manifest.add_input("vocabulary", p)?;
    }

    let (mut dataset, report) = build_dataset(open(&args.sentences)?, &indices, &cfg)?;
    dataset.metadata.manifest_digest = Some(manifest.manifest_digest.clone());
    write_dataset(&dataset, create(&args.out)?)?;
    manifest.finish();
    manifest.write(&sidecar_path(&args.out))?;
    Ok((dataset, report))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(open(path)?).with_context(|| format!("reading dataset {}", path.display()))
}

#[derive(Debug, Clone)]
pub struct ScoreHeuristicsArgs {
    pub dataset: PathBuf,
    pub ngram_sources: Vec<(String, PathBuf)>,
    pub embeddings: Vec<(String, PathBuf)>,
    pub orders: Vec<usize>,
    pub schemes: Vec<WeightingScheme>,
    pub backoff: BackoffConfig,
    pub out: PathBuf,
}

pub fn score_heuristics_cmd(args: &ScoreHeuristicsArgs) -> Result<(HeuristicTable, HeuristicReport)> {
    args.backoff.validate()?;
    if args.ngram_sources.is_empty() {
        return Err(UsageError("at least one --ngram-source is required".into()).into());
    }
    let labels: Vec<&String> = args.ngram_sources.iter().chain(&args.embeddings).map(|(l, _)| l).collect();
    if labels.iter().collect::<BTreeSet<_>>().len() != labels.len() {
        return Err(UsageError("source and embedding labels must be distinct".into()).into());
    }
    let mut manifest = RunManifest::new(
        "score-heuristics",
        json!({
            "alpha": args.backoff.alpha,
            "max_n": args.backoff.max_n,
            "replicate_paper_unigram": args.backoff.replicate_paper_unigram,
            "orders": args.orders,
            "weighting": args.schemes.iter().map(|s| s.name()).collect::<Vec<_>>(),
            "ngram_sources": args.ngram_sources.iter().map(|(l, _)| l).collect::<Vec<_>>(),
            "embeddings": args.embeddings.iter().map(|(l, _)| l).collect::<Vec<_>>(),
        }),
        None,
    );
    manifest.add_input("dataset", &args.dataset)?;
    let dataset = load_dataset(&args.dataset)?;

    let mut indices = Vec::new();
    for (label, path) in &args.ngram_sources {
        manifest.add_input(&format!("ngram_source:{label}"), path)?;
        indices.push((label.clone(), CorpusIndex::load(path).with_context(|| format!("loading {}", path.display()))?));
    }
    let mut tables = Vec::new();
    for (label, path) in &args.embeddings {
        manifest.add_input(&format!("embeddings:{label}"), path)?;
        tables.push((label.clone(), EmbeddingTable::load(path).with_context(|| format!("loading {}", path.display()))?));
    }
    let sources: Vec<(String, &CorpusIndex)> = indices.iter().map(|(l, i)| (l.clone(), i)).collect();
    let embeddings: Vec<(String, &EmbeddingTable)> = tables.iter().map(|(l, t)| (l.clone(), t)).collect();

    let (table, report) =
        score_heuristics(&dataset.items, &sources, &embeddings, &args.orders, &args.schemes, &args.backoff)?;
    let comments = vec![
        format!("phasescope {} heuristics", super::manifest::TOOL_VERSION),
        format!("manifest={}", manifest.manifest_digest),
        "ngram columns are natural-log stupid backoff scores".to_owned(),
    ];
    table.write_csv(create(&args.out)?, &comments)?;
    manifest.finish();
    manifest.write(&sidecar_path(&args.out))?;
    Ok((table, report))
}

fn ingest(paths: &[PathBuf], known: Option<&HashSet<String>>) -> Result<(ScoreStore, IngestReport)> {
    let mut sources = Vec::new();
    for p in paths {
        sources.push((p.display().to_string(), open(p)?));
    }
    Ok(ScoreStore::ingest(sources, known)?)
}

pub fn ingest_scores_cmd(inputs: &[PathBuf], dataset: Option<&Path>, out: &Path) -> Result<(ScoreStore, IngestReport)> {
    let mut manifest = RunManifest::new("ingest-scores", json!({}), None);
    for p in inputs {
        manifest.add_input("scores", p)?;
    }
    let known = match dataset {
        Some(d) => {
            manifest.add_input("dataset", d)?;
            Some(load_dataset(d)?.items.into_iter().map(|i| i.item_id).collect::<HashSet<_>>())
        }
        None => None,
    };
    let (store, report) = ingest(inputs, known.as_ref())?;
    store.write(create(out)?, &manifest.manifest_digest)?;
    manifest.finish();
    manifest.write(&sidecar_path(out))?;
    Ok((store, report))
}

#[derive(Debug, Clone)]
pub struct AnalyzeArgs {
    pub scores: Vec<PathBuf>,
    pub heuristics: PathBuf,
    pub dataset: PathBuf,
    pub out_dir: PathBuf,
    pub mode: RegressionMode,
    pub stability_eps: f64,
    pub schemes: Vec<WeightingScheme>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalyzeSummary {
    pub score_records: usize,
    pub checkpoints: usize,
    pub conditions: Vec<String>,
    pub errors: usize,
    pub warnings: Vec<String>,
}

pub const OUTPUT_FILES: [&str; 6] = [
    "correlations.csv",
    "coefficients.csv",
    "r_squared.csv",
    "predictor_corr.csv",
    "cross_model.csv",
    "phases.csv",
];

/// Appends per-seed rows and seed-aggregate rows for one series.
/// Row layout: model, seed, step, `mid`..., metric, `suffix`..., value.
fn series_rows(
    model: &str,
    mid: &[&str],
    metric: &str,
    series: &TrajectorySeries,
    suffix: &[&str],
    rows: &mut Vec<Vec<String>>,
) {
    let make = |seed: &str, step: u64, m: &str, v: f64| {
        let mut r = vec![model.to_owned(), seed.to_owned(), step.to_string()];
        r.extend(mid.iter().map(|s| (*s).to_owned()));
        r.push(m.to_owned());
        r.extend(suffix.iter().map(|s| (*s).to_owned()));
        r.push(num(v));
        r
    };
    for (seed, values) in &series.per_seed {
        for (&step, v) in series.steps.iter().zip(values) {
            if let Some(v) = v {
                rows.push(make(seed, step, metric, *v));
            }
        }
    }
    for (i, &step) in series.steps.iter().enumerate() {
        rows.push(make("all", step, &format!("{metric}_mean"), series.mean[i]));
        rows.push(make("all", step, &format!("{metric}_ci95"), series.ci95[i]));
    }
}

/// Runs every analysis and writes the tidy result files into `out_dir`.
pub fn analyze_cmd(args: &AnalyzeArgs) -> Result<AnalyzeSummary> {
    if !(args.stability_eps > 0.0) {
        return Err(UsageError(format!("--stability-eps must be positive, got {}", args.stability_eps)).into());
    }
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mode_name = match args.mode {
        RegressionMode::Standardized => "zscored",
        RegressionMode::BitsDistance => "bits-distance",
    };
    let mut manifest = RunManifest::new(
        "analyze",
        json!({
            "mode": mode_name,
            "stability_eps": args.stability_eps,
            "weighting": args.schemes.iter().map(|s| s.name()).collect::<Vec<_>>(),
            "ci": "normal approximation, 1.96 * sd / sqrt(seeds)",
        }),
        None,
    );
    for p in &args.scores {
        manifest.add_input("scores", p)?;
    }
    manifest.add_input("heuristics", &args.heuristics)?;
    manifest.add_input("dataset", &args.dataset)?;

    let mut summary = AnalyzeSummary::default();
    let dataset = load_dataset(&args.dataset)?;
    let known: HashSet<String> = dataset.items.iter().map(|i| i.item_id.clone()).collect();
    let full_table = HeuristicTable::read_csv(open(&args.heuristics)?)
        .with_context(|| format!("reading {}", args.heuristics.display()))?;

    // keep heuristic rows for dataset items only
    let keep: Vec<usize> = (0..full_table.len()).filter(|&r| known.contains(&full_table.item_ids[r])).collect();
    if keep.len() != full_table.len() {
        summary
            .warnings
            .push(format!("{} heuristic rows are not in the dataset and were ignored", full_table.len() - keep.len()));
    }
    if keep.len() != known.len() {
        summary
            .warnings
            .push(format!("{} dataset items have no heuristic row", known.len() - keep.len()));
    }
    let table = HeuristicTable {
        item_ids: keep.iter().map(|&r| full_table.item_ids[r].clone()).collect(),
        splits: keep.iter().map(|&r| full_table.splits[r]).collect(),
        columns: full_table
            .columns
            .iter()
            .map(|c| crate::heuristics::HeuristicColumn {
                name: c.name.clone(),
                values: keep.iter().map(|&r| c.values[r]).collect(),
            })
            .collect(),
    };

    let (store, ingest_report) = ingest(&args.scores, Some(&known))?;
    summary.score_records = store.len();
    if ingest_report.unknown_items > 0 {
        summary
            .warnings
            .push(format!("{} score rows reference unknown items", ingest_report.unknown_items));
    }
    if !ingest_report.non_finite.is_empty() {
        summary
            .warnings
            .push(format!("{} score rows have non-finite logprobs", ingest_report.non_finite.len()));
    }
    if store.is_empty() {
        summary.warnings.push("no score records; outputs are empty".to_owned());
    }
    let groups = store.groups();
    summary.checkpoints = groups.len();

    let train = table.rows_in(Split::Train);
    let validation = table.rows_in(Split::Validation);
    let scheme_ok = |name: &str| args.schemes.iter().any(|s| name.ends_with(&format!("_sim_{}", s.name())));
    let heuristic_cols: Vec<&str> = table
        .columns
        .iter()
        .filter(|c| match column_role(&c.name) {
            Some(ColumnRole::NGram { .. }) => true,
            Some(ColumnRole::Similarity) => scheme_ok(&c.name),
            _ => false,
        })
        .map(|c| c.name.as_str())
        .collect();

    let comments = vec![
        format!("phasescope {} analyze", super::manifest::TOOL_VERSION),
        format!("manifest={}", manifest.manifest_digest),
        format!("mode={mode_name}; logprob=natural_log; ci95=1.96*sd/sqrt(seeds)"),
    ];
    let mut errors: Vec<Vec<String>> = Vec::new();
    let issue_row = |i: &crate::analysis::Issue| {
        vec![i.model.clone(), i.seed.clone(), i.step.to_string(), i.context.clone(), i.message.clone()]
    };

    // correlations
    let mut rows = Vec::new();
    for method in [CorrelationMethod::Pearson, CorrelationMethod::Spearman] {
        let out = correlation_trajectory(&groups, &table, &heuristic_cols, &train, method);
        for ((model, heuristic), series) in &out.series {
            series_rows(model, &[], method.name(), series, &[heuristic], &mut rows);
        }
        errors.extend(out.issues.iter().map(issue_row));
    }
    write_tidy(
        &args.out_dir.join("correlations.csv"),
        &comments,
        &["model", "seed", "step", "metric", "heuristic", "value"],
        &rows,
    )?;

    // regressions, one condition per n-gram source and similarity column
    let mut sources: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for c in &table.columns {
        if let Some(ColumnRole::NGram { order }) = column_role(&c.name) {
            let label = c.name.rsplit_once("_ngram_logprob_n").unwrap().0.to_owned();
            let e = sources.entry(label).or_insert((order, order));
            e.0 = e.0.min(order);
            e.1 = e.1.max(order);
        }
    }
    let sims: Vec<&str> = heuristic_cols
        .iter()
        .copied()
        .filter(|c| column_role(c) == Some(ColumnRole::Similarity))
        .collect();
    let mut specs = Vec::new();
    for (label, &(lo, hi)) in &sources {
        if lo != 1 || hi < 2 {
            summary
                .warnings
                .push(format!("n-gram source {label} lacks a unigram or higher-order column; no regression"));
            continue;
        }
        for sim in &sims {
            specs.push(RegressionSpec {
                condition: format!("{label}|{sim}"),
                unigram: crate::heuristics::ngram_column_name(label, 1),
                ngram: crate::heuristics::ngram_column_name(label, hi),
                similarity: (*sim).to_owned(),
                mode: args.mode,
            });
        }
    }

    let mut coef_rows = Vec::new();
    let mut r2_rows = Vec::new();
    let mut phase_rows = Vec::new();
    for spec in &specs {
        summary.conditions.push(spec.condition.clone());
        let traj = regression_trajectory(&groups, &table, spec, &train, &validation)?;
        if traj.excluded_train + traj.excluded_validation > 0 {
            summary.warnings.push(format!(
                "{}: {} train and {} validation items lack a predictor value and were excluded",
                spec.condition, traj.excluded_train, traj.excluded_validation
            ));
        }
        errors.extend(traj.issues.iter().map(issue_row));
        for (model, reg) in &traj.models {
            for (predictor, series) in reg.coefficients.iter().map(|(n, s)| (n.as_str(), s)).chain([("intercept", &reg.intercept)]) {
                series_rows(model, &[&spec.condition], "coef", series, &[predictor], &mut coef_rows);
            }
            series_rows(model, &[&spec.condition], "r2_train", &reg.r2_train, &[], &mut r2_rows);
            series_rows(model, &[&spec.condition], "r2_validation", &reg.r2_validation, &[], &mut r2_rows);

            let steps = &reg.coefficients[0].1.steps;
            let means: Vec<&[f64]> = reg.coefficients.iter().map(|(_, s)| s.mean.as_slice()).collect();
            match detect_phases(steps, &means, args.stability_eps) {
                Ok(p) => {
                    let eps = num(p.threshold);
                    phase_rows.push(vec![model.clone(), spec.condition.clone(), "phase1_end".into(), p.phase1_end.to_string(), eps.clone()]);
                    phase_rows.push(vec![
                        model.clone(),
                        spec.condition.clone(),
                        "phase2_end".into(),
                        p.phase2_end.map(|s| s.to_string()).unwrap_or_default(),
                        eps,
                    ]);
                }
                Err(e) => errors.push(vec![model.clone(), "all".into(), String::new(), format!("phases:{}", spec.condition), e.to_string()]),
            }
        }
    }
    write_tidy(
        &args.out_dir.join("coefficients.csv"),
        &comments,
        &["model", "seed", "step", "condition", "metric", "predictor", "value"],
        &coef_rows,
    )?;
    write_tidy(
        &args.out_dir.join("r_squared.csv"),
        &comments,
        &["model", "seed", "step", "condition", "metric", "value"],
        &r2_rows,
    )?;
    write_tidy(
        &args.out_dir.join("phases.csv"),
        &comments,
        &["model", "condition", "boundary", "step", "threshold"],
        &phase_rows,
    )?;

    // predictor correlations on the training split
    let mut pc_rows = Vec::new();
    if !heuristic_cols.is_empty() {
        match predictor_correlations(&table, &heuristic_cols, &train) {
            Ok(m) => {
                for (i, a) in m.names.iter().enumerate() {
                    for (j, b) in m.names.iter().enumerate() {
                        pc_rows.push(vec!["train".into(), a.clone(), b.clone(), m.n.to_string(), num(m.values[i][j])]);
                    }
                }
            }
            Err(e) => errors.push(vec![String::new(), String::new(), String::new(), "predictor_corr".into(), e.to_string()]),
        }
    }
    write_tidy(
        &args.out_dir.join("predictor_corr.csv"),
        &comments,
        &["split", "heuristic_a", "heuristic_b", "n", "value"],
        &pc_rows,
    )?;

    // cross-model correlations of seed-averaged scores on training items
    let train_ids: HashSet<&String> = train.iter().map(|&r| &table.item_ids[r]).collect();
    let mut by_step: BTreeMap<u64, BTreeMap<&str, Vec<&HashMap<String, f64>>>> = BTreeMap::new();
    for (key, g) in &groups {
        by_step.entry(key.step).or_default().entry(key.model.as_str()).or_default().push(g);
    }
    let mut cm_rows = Vec::new();
    for (step, models) in &by_step {
        if models.len() < 2 {
            continue;
        }
        let averaged: Vec<(String, HashMap<String, f64>)> = models
            .iter()
            .map(|(model, seeds)| {
                let mut sums: HashMap<String, Vec<f64>> = HashMap::new();
                for g in seeds {
                    for (id, &v) in g.iter().filter(|(id, _)| train_ids.contains(id)) {
                        sums.entry(id.clone()).or_default().push(v);
                    }
                }
                // only items every seed scored
                let avg = sums
                    .into_iter()
                    .filter(|(_, v)| v.len() == seeds.len())
                    .map(|(id, mut v)| {
                        v.sort_by(f64::total_cmp);
                        (id, v.iter().sum::<f64>() / v.len() as f64)
                    })
                    .collect();
                ((*model).to_owned(), avg)
            })
            .collect();
        let refs: Vec<(String, &HashMap<String, f64>)> = averaged.iter().map(|(m, s)| (m.clone(), s)).collect();
        match cross_model_correlation(&refs) {
            Ok(m) => {
                for (i, a) in m.names.iter().enumerate() {
                    for (j, b) in m.names.iter().enumerate() {
                        cm_rows.push(vec![step.to_string(), a.clone(), b.clone(), m.n.to_string(), num(m.values[i][j])]);
                    }
                }
                if m.dropped.iter().any(|&d| d > 0) {
                    summary.warnings.push(format!(
                        "step {step}: cross-model correlation restricted to {} shared items",
                        m.n
                    ));
                }
            }
            Err(e) => errors.push(vec![String::new(), "all".into(), step.to_string(), "cross_model".into(), e.to_string()]),
        }
    }
    write_tidy(
        &args.out_dir.join("cross_model.csv"),
        &comments,
        &["step", "model_a", "model_b", "n", "value"],
        &cm_rows,
    )?;

    summary.errors = errors.len();
    write_tidy(
        &args.out_dir.join("errors.csv"),
        &comments,
        &["model", "seed", "step", "context", "message"],
        &errors,
    )?;

    let report = json!({
        "manifest_digest": manifest.manifest_digest,
        "score_records": summary.score_records,
        "checkpoints": summary.checkpoints,
        "score_rows_non_finite": ingest_report.non_finite.len(),
        "score_rows_unknown_item": ingest_report.unknown_items,
        "conditions": summary.conditions,
        "errors": summary.errors,
        "warnings": summary.warnings,
    });
    let mut w = create(&args.out_dir.join("report.json"))?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    manifest.finish();
    manifest.write(&args.out_dir.join("manifest.json"))?;
    if summary.score_records == 0 && !args.scores.is_empty() && summary.warnings.is_empty() {
        bail!("internal: empty score set produced no warning");
    }
    Ok(summary)
}
