use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use anyhow::{anyhow, Context};
use review_radar::corpus::{corpus_summary, ingest_diff_directory, load_corpus_with, write_corpus, LoadOptions, Patch};
use review_radar::embedding::{build_embedding, load_external_vectors, EmbeddingSpec, TextModel};
use review_radar::evaluation::{
    median_index, prepare_split, prepare_splits, run_experiment, run_split, select_model, split_ratio, split_sliding,
    Dataset, EvaluationReport, Scheme,
};
use review_radar::features::FEATURE_NAMES;
use review_radar::labeling::{FileKey, Label};
use review_radar::learning::{feature_importance, predict_matrix, Family, ModelArtifact, Variant};
use review_radar::ordering::{ordering_report, predicted_orderings};
use review_radar::stats::{build_paired_vectors, cliffs_delta, wilcoxon_paired, Grouping, Metric};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::output::{
    file_sha256, num, opt_num, read_json, read_jsonl, write_atomic, write_csv, write_json, write_jsonl, Meta,
};

/// A trained model with what is needed to embed new rows for it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBundle {
    pub dataset: String,
    pub spec: EmbeddingSpec,
    pub label: Label,
    pub scheme: Scheme,
    pub split_id: String,
    pub text: TextModel,
    pub model: ModelArtifact,
    pub report: EvaluationReport,
}

fn meta(cfg: &PipelineConfig, stage: &str, corpus_sha: Option<&str>) -> Meta {
    Meta::new(stage, cfg.hash(), corpus_sha.map(str::to_string))
}

fn write_config(cfg: &PipelineConfig, m: &Meta) -> anyhow::Result<()> {
    write_json(&cfg.out.join("config.json"), m, cfg)
}

fn load_patches(cfg: &PipelineConfig) -> anyhow::Result<(Vec<Patch>, String)> {
    let path = cfg.corpus_path()?;
    let sha = file_sha256(path)?;
    let patches = load_corpus_with(
        path,
        LoadOptions {
            context_limit: cfg.context_limit,
        },
    )
    .with_context(|| format!("loading corpus {}", path.display()))?;
    Ok((patches, sha))
}

fn load_dataset(cfg: &PipelineConfig) -> anyhow::Result<(Dataset, String)> {
    let (patches, sha) = load_patches(cfg)?;
    let external = match &cfg.external_vectors {
        Some(p) => {
            let known: HashSet<FileKey> = patches
                .iter()
                .flat_map(|pt| {
                    pt.initial_commit()
                        .files
                        .iter()
                        .map(move |f| FileKey::new(&pt.patch_id, &f.path))
                })
                .collect();
            Some(load_external_vectors(p, Some(&known)).with_context(|| format!("loading {}", p.display()))?)
        }
        None => None,
    };
    Ok((
        Dataset::build(cfg.dataset_name(), patches, cfg.comments_scope, external),
        sha,
    ))
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

pub fn ingest(cfg: &PipelineConfig, diffs: Option<&Path>, metadata: Option<&Path>) -> anyhow::Result<()> {
    let (patches, sha) = match (diffs, metadata) {
        (Some(d), Some(m)) => (
            ingest_diff_directory(d, m, cfg.context_limit).context("ingesting diff directory")?,
            file_sha256(m)?,
        ),
        _ => load_patches(cfg)?,
    };
    let m = meta(cfg, "ingest", Some(&sha));
    let mut buf = m.jsonl_line().into_bytes();
    write_corpus(&mut buf, &patches)?;
    write_atomic(&cfg.out.join("corpus.jsonl"), &buf)?;
    write_config(cfg, &m)?;
    let files: usize = patches.iter().map(|p| p.initial_commit().files.len()).sum();
    println!("ingested {} patches, {files} changed files", patches.len());
    Ok(())
}

pub fn label(cfg: &PipelineConfig) -> anyhow::Result<()> {
    let (data, sha) = load_dataset(cfg)?;
    let m = meta(cfg, "label", Some(&sha));
    let rows: Vec<Vec<String>> = data
        .labels
        .iter()
        .map(|(k, l)| {
            vec![
                k.patch_id.clone(),
                k.path.clone(),
                flag(l.commented),
                flag(l.revised),
                flag(l.hot_spot),
            ]
        })
        .collect();
    write_csv(
        &cfg.out.join("labels.csv"),
        &m,
        &["patch_id", "path", "commented", "revised", "hot_spot"],
        &rows,
    )?;
    let summary = corpus_summary(&data.patches, &data.labels);
    write_json(&cfg.out.join("summary.json"), &m, &summary)?;
    write_config(cfg, &m)?;
    println!(
        "{} patches, {} changed files",
        summary.patch_count, summary.changed_file_count
    );
    for s in &summary.labels {
        println!(
            "  {:<10} {:>6} files ({:.1}%)  {:>5} patches ({:.1}%)",
            s.label.as_str(),
            s.files,
            100.0 * s.file_ratio,
            s.patches,
            100.0 * s.patch_ratio
        );
    }
    Ok(())
}

pub fn featurize(cfg: &PipelineConfig) -> anyhow::Result<()> {
    let (data, sha) = load_dataset(cfg)?;
    let m = meta(cfg, "featurize", Some(&sha));
    let mut header = vec!["patch_id", "path"];
    header.extend(FEATURE_NAMES);
    let rows: Vec<Vec<String>> = data
        .features
        .iter()
        .map(|(k, fv)| {
            let mut r = vec![k.patch_id.clone(), k.path.clone()];
            r.extend(fv.values.iter().map(|&v| num(v)));
            r
        })
        .collect();
    write_csv(&cfg.out.join("features.csv"), &m, &header, &rows)?;
    write_config(cfg, &m)?;
    println!("wrote {} feature rows", rows.len());
    Ok(())
}

pub fn embed(cfg: &PipelineConfig) -> anyhow::Result<()> {
    let (data, sha) = load_dataset(cfg)?;
    let exp = cfg.experiment()?;
    let split = match exp.scheme {
        Scheme::Ratio => split_ratio(&data.rows)?,
        Scheme::Sliding => split_sliding(&data.rows, exp.period_days)?
            .into_iter()
            .next()
            .ok_or_else(|| anyhow!("no usable sliding window"))?,
    };
    let train_keys: Vec<FileKey> = split.train.iter().map(|&i| data.rows.keys[i].clone()).collect();
    let text = TextModel::fit(&exp.spec, &data.documents, &train_keys);
    let matrix = build_embedding(&exp.spec, &data.rows.keys, &text, &data.inputs())?;
    let m = meta(cfg, "embed", Some(&sha));
    write_json(&cfg.out.join("embedding.json"), &m, &matrix)?;
    write_json(&cfg.out.join("text_model.json"), &m, &text)?;
    write_config(cfg, &m)?;
    println!(
        "embedded {} files into {} columns ({})",
        data.rows.len(),
        matrix.column_names().len(),
        exp.spec
    );
    Ok(())
}

pub fn train(cfg: &PipelineConfig, variant: Variant, seed: u64) -> anyhow::Result<()> {
    let (data, sha) = load_dataset(cfg)?;
    let exp = cfg.experiment()?;
    let mut prepared = prepare_splits(&data, &exp)?;
    // the latest window is the one a deployed model would use
    let p = prepared.pop().ok_or_else(|| anyhow!("no usable split"))?;
    let run = run_split(&data, &exp, &p, variant, seed)?;
    let m = meta(cfg, "train", Some(&sha));
    if run.model.family == Family::Rf {
        let imp = feature_importance(&run.model)?;
        let mut rows: Vec<(String, f64)> = imp.into_iter().collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1));
        let rows: Vec<Vec<String>> = rows.into_iter().map(|(c, v)| vec![c, num(v)]).collect();
        write_csv(&cfg.out.join("importance.csv"), &m, &["column", "importance"], &rows)?;
    }
    let r = &run.report;
    println!(
        "{variant} seed {seed} on {}: threshold {:.4}, test f1 {:.3}, auc {}",
        p.split.id,
        r.threshold,
        r.f1,
        r.auc.map_or_else(|| "n/a".into(), |a| format!("{a:.3}"))
    );
    let bundle = ModelBundle {
        dataset: data.name.clone(),
        spec: exp.spec,
        label: exp.label,
        scheme: exp.scheme,
        split_id: p.split.id.clone(),
        text: p.text,
        model: run.model,
        report: run.report,
    };
    write_json(&cfg.out.join("model.json"), &m, &bundle)?;
    write_config(cfg, &m)?;
    Ok(())
}

const REPORT_HEADER: [&str; 21] = [
    "dataset",
    "label",
    "spec",
    "variant",
    "scheme",
    "seed",
    "window",
    "split_id",
    "auc",
    "f1",
    "gm",
    "pre",
    "rec",
    "threshold",
    "val_f1",
    "tp",
    "fp",
    "tn",
    "fn",
    "train_rows",
    "test_rows",
];

fn report_row(r: &EvaluationReport) -> Vec<String> {
    vec![
        r.dataset.clone(),
        r.label.to_string(),
        r.spec.clone(),
        r.variant.to_string(),
        r.scheme.to_string(),
        r.seed.to_string(),
        r.window.map(|w| w.to_string()).unwrap_or_default(),
        r.split_id.clone(),
        opt_num(r.auc),
        num(r.f1),
        num(r.gm),
        num(r.pre),
        num(r.rec),
        num(r.threshold),
        num(r.val_f1),
        r.tp.to_string(),
        r.fp.to_string(),
        r.tn.to_string(),
        r.fn_.to_string(),
        r.train_rows.to_string(),
        r.test_rows.to_string(),
    ]
}

pub fn evaluate(cfg: &PipelineConfig) -> anyhow::Result<()> {
    let (data, sha) = load_dataset(cfg)?;
    let exp = cfg.experiment()?;
    let reports = run_experiment(&data, &exp)?;
    let m = meta(cfg, "evaluate", Some(&sha));
    let rows: Vec<Vec<String>> = reports.iter().map(report_row).collect();
    write_csv(&cfg.out.join("reports.csv"), &m, &REPORT_HEADER, &rows)?;
    write_jsonl(&cfg.out.join("reports.jsonl"), &m, &reports)?;
    let selection = select_model(&reports);
    write_json(&cfg.out.join("selection.json"), &m, &selection)?;
    write_config(cfg, &m)?;
    println!("{} runs written", reports.len());
    if let Some(s) = selection {
        let r = &s.representative;
        println!(
            "selected {} (median validation f1 {:.3}): test auc {} f1 {:.3} gm {:.3}",
            s.variant,
            s.median_val_f1,
            r.auc.map_or_else(|| "n/a".into(), |a| format!("{a:.3}")),
            r.f1,
            r.gm
        );
    }
    Ok(())
}

/// Runs of the best variant (by median validation F1) for each dataset.
fn selected_runs(reports: &[EvaluationReport], label: Label) -> Vec<EvaluationReport> {
    let mut by_ds: BTreeMap<&str, Vec<EvaluationReport>> = BTreeMap::new();
    for r in reports.iter().filter(|r| r.label == label) {
        by_ds.entry(&r.dataset).or_default().push(r.clone());
    }
    by_ds
        .into_values()
        .flat_map(|runs| {
            let v = select_model(&runs).map(|s| s.variant);
            runs.into_iter().filter(move |r| Some(r.variant) == v)
        })
        .collect()
}

fn setup_name(reports: &[EvaluationReport]) -> String {
    let mut specs: Vec<&str> = reports.iter().map(|r| r.spec.as_str()).collect();
    specs.sort_unstable();
    specs.dedup();
    specs.join("|")
}

pub fn compare(
    cfg: &PipelineConfig,
    a_path: &Path,
    b_path: &Path,
    grouping: Grouping,
    datasets: Option<Vec<String>>,
) -> anyhow::Result<()> {
    let a: Vec<EvaluationReport> = read_jsonl(a_path)?;
    let b: Vec<EvaluationReport> = read_jsonl(b_path)?;
    let (sa, sb) = (selected_runs(&a, cfg.label), selected_runs(&b, cfg.label));
    let datasets = datasets.unwrap_or_else(|| {
        let mut d: Vec<String> = sa.iter().chain(&sb).map(|r| r.dataset.clone()).collect();
        d.sort();
        d.dedup();
        d
    });
    let mut rows = Vec::new();
    for metric in Metric::ALL {
        let sample = build_paired_vectors(&sa, &sb, &datasets, grouping, metric, cfg.label)?;
        let w = wilcoxon_paired(&sample.x, &sample.y);
        let (delta, magnitude) = if sample.x.is_empty() {
            (0.0, review_radar::stats::Magnitude::Negligible)
        } else {
            cliffs_delta(&sample.x, &sample.y)
        };
        rows.push(vec![
            setup_name(&sa),
            setup_name(&sb),
            grouping.as_str().to_string(),
            cfg.label.to_string(),
            metric.as_str().to_string(),
            sample.x.len().to_string(),
            serde_json::to_value(w.method)?.as_str().unwrap_or_default().to_string(),
            num(w.p_value),
            flag(w.p_value < cfg.alpha),
            num(delta),
            magnitude.to_string(),
        ]);
    }
    let m = meta(cfg, "compare", None);
    write_csv(
        &cfg.out.join("compare.csv"),
        &m,
        &[
            "setup_a",
            "setup_b",
            "grouping",
            "label",
            "metric",
            "n",
            "method",
            "p",
            "significant",
            "delta",
            "magnitude",
        ],
        &rows,
    )?;
    write_config(cfg, &m)?;
    for r in &rows {
        println!(
            "{:<4} n={:<3} p={:<10.4} delta={:+.3} {}",
            r[4],
            r[5],
            r[7].parse::<f64>()?,
            r[9].parse::<f64>()?,
            r[10]
        );
    }
    Ok(())
}

pub fn order(cfg: &PipelineConfig, model_path: &Path) -> anyhow::Result<()> {
    let bundle: ModelBundle = read_json(model_path)?.data;
    let (data, sha) = load_dataset(cfg)?;
    let splits = match bundle.scheme {
        Scheme::Ratio => vec![split_ratio(&data.rows)?],
        Scheme::Sliding => split_sliding(&data.rows, cfg.period_days)?,
    };
    let split = splits
        .into_iter()
        .find(|s| s.id == bundle.split_id)
        .ok_or_else(|| anyhow!("split {} not found in this corpus", bundle.split_id))?;
    let prepared = prepare_split(&data, &bundle.spec, bundle.label, split)?;
    let text = bundle.text.clone().reindex();
    let keys = prepared.test_keys().to_vec();
    let matrix = build_embedding(&bundle.spec, &keys, &text, &data.inputs())?;
    let scores_vec = predict_matrix(&bundle.model, &matrix)?;
    let scores: HashMap<FileKey, f64> = keys.into_iter().zip(scores_vec).collect();
    let report = ordering_report(&data.patches, &data.labels, &scores, cfg.ordering_seed)?;
    let orderings = predicted_orderings(&data.patches, &data.labels, &scores)?;
    let m = meta(cfg, "order", Some(&sha));
    write_jsonl(&cfg.out.join("orderings.jsonl"), &m, &orderings)?;
    let mut rows = Vec::new();
    for b in &report.buckets {
        for p in &b.policies {
            rows.push(vec![
                b.bucket.as_str().to_string(),
                b.patches.to_string(),
                num(b.patch_fraction),
                p.policy.to_string(),
                opt_num(p.recall_50),
                opt_num(p.recall_25),
            ]);
        }
    }
    write_csv(
        &cfg.out.join("ordering.csv"),
        &m,
        &[
            "bucket",
            "patches",
            "patch_fraction",
            "policy",
            "recall_50",
            "recall_25",
        ],
        &rows,
    )?;
    write_config(cfg, &m)?;
    println!(
        "{} test patches, {} eligible; Recall@50% by bucket (alphanumeric -> predicted):",
        report.slice_patches, report.eligible_patches
    );
    for b in &report.buckets {
        let get = |pol| {
            b.policies
                .iter()
                .find(|p| p.policy == pol)
                .and_then(|p| p.recall_50)
                .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
        };
        use review_radar::ordering::Policy;
        println!(
            "  {:<5} {:>4} patches  {} -> {}",
            b.bucket.as_str(),
            b.patches,
            get(Policy::Alphanumeric),
            get(Policy::Predicted)
        );
    }
    Ok(())
}

pub fn report(cfg: &PipelineConfig, reports_path: &Path) -> anyhow::Result<()> {
    let reports: Vec<EvaluationReport> = read_jsonl(reports_path)?;
    let mut groups: BTreeMap<(String, String, String), Vec<EvaluationReport>> = BTreeMap::new();
    for r in reports {
        groups
            .entry((r.dataset.clone(), r.label.to_string(), r.spec.clone()))
            .or_default()
            .push(r);
    }
    let mut rows = Vec::new();
    for ((dataset, label, spec), runs) in &groups {
        let selected = select_model(runs).map(|s| s.variant);
        for variant in Variant::ALL {
            let mut vr: Vec<&EvaluationReport> = runs.iter().filter(|r| r.variant == variant).collect();
            if vr.is_empty() {
                continue;
            }
            vr.sort_by(|a, b| a.val_f1.total_cmp(&b.val_f1));
            let rep = vr[median_index(vr.len())];
            rows.push(vec![
                dataset.clone(),
                label.clone(),
                spec.clone(),
                variant.to_string(),
                vr.len().to_string(),
                num(rep.val_f1),
                opt_num(rep.auc),
                num(rep.f1),
                num(rep.gm),
                num(rep.pre),
                num(rep.rec),
                flag(selected == Some(variant)),
            ]);
        }
    }
    let m = meta(cfg, "report", Some(&file_sha256(reports_path)?));
    write_csv(
        &cfg.out.join("summary.csv"),
        &m,
        &[
            "dataset",
            "label",
            "spec",
            "variant",
            "runs",
            "median_val_f1",
            "auc",
            "f1",
            "gm",
            "pre",
            "rec",
            "selected",
        ],
        &rows,
    )?;
    println!(
        "{:<16} {:<10} {:<22} {:<4} {:>4} {:>7} {:>6} {:>6} {:>6}",
        "dataset", "label", "spec", "var", "runs", "val_f1", "auc", "f1", "gm"
    );
    for r in &rows {
        let f = |i: usize| {
            r[i].parse::<f64>()
                .map_or_else(|_| "-".to_string(), |v| format!("{v:.3}"))
        };
        println!(
            "{:<16} {:<10} {:<22} {:<4} {:>4} {:>7} {:>6} {:>6} {:>6}{}",
            r[0],
            r[1],
            r[2],
            r[3],
            r[4],
            f(5),
            f(6),
            f(7),
            f(8),
            if r[11] == "1" { "  *" } else { "" }
        );
    }
    Ok(())
}
