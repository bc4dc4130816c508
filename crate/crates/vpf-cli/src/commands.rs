//! Implementations of the pipeline subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use vpf_core::canon;
use vpf_core::config::{load_country_config, CoalitionEntry, CountryConfig};
use vpf_core::eval::{
    bill_level_accuracy, compute_metrics, draw_roc_points, write_bill_report_csv, EvaluationReport,
    PredictedVote,
};
use vpf_core::explain::{
    anomalies_csv, beeswarm_csv, beeswarm_export, false_negative_report, importance_csv,
    shapley_sampling, Attribution,
};
use vpf_core::features::{
    build_enriched, encode_features, load_feature_matrix, read_enriched, save_feature_matrix,
    write_coverage, write_enriched, EncodePolicy, Embedder, FeatureMatrix, HashedEmbedder,
    PrecomputedEmbedder,
};
use vpf_core::hashing::sub_seed;
use vpf_core::ingest::{load_overrides, parse_bundle, repair_missing};
use vpf_core::manifest::{
    hash_file, load_manifest, record_timing, save_manifest, RunManifest,
};
use vpf_core::models::{
    load_model, model_file_name, save_model, select_best, train as train_model, LearnerKind,
    LearnerSpec, ModelError, TrainedModel,
};
use vpf_core::schema::{validate_bundle, VoteResult};
use vpf_core::split::{time_series_split, write_row_keys, write_split_plan, Resolution, SplitPlan};

use crate::logging;
use crate::CliError;

fn input_err(message: impl ToString) -> CliError {
    CliError::Input(message.to_string())
}

fn model_err(e: ModelError) -> CliError {
    match e {
        ModelError::ColumnSpecMismatch => CliError::Contract(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

fn hash_inputs(paths: &[PathBuf]) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    for path in paths {
        if let Ok(hash) = hash_file(path) {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().to_string())
                .unwrap_or_else(|| path.display().to_string());
            map.insert(name, hash);
        }
    }
    map
}

fn hash_outputs(dir: &Path, names: &[&str]) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    for name in names {
        let path = dir.join(name);
        if let Ok(hash) = hash_file(&path) {
            map.insert(name.to_string(), hash);
        }
    }
    map
}

#[allow(clippy::too_many_arguments)]
fn finish_stage(
    dir: &Path,
    stage: &str,
    country: &str,
    seed: Option<u64>,
    config_hash: Option<String>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    started: Instant,
) -> Result<(), CliError> {
    let mut manifest = load_manifest(dir).unwrap_or_else(|_| RunManifest::default());
    if !country.is_empty() {
        manifest.country = country.to_string();
    }
    if let Some(seed) = seed {
        manifest.seed = seed;
    }
    if let Some(hash) = config_hash {
        manifest.config_hash = hash;
    }
    manifest.record_stage(stage, inputs, outputs);
    save_manifest(dir, &manifest).map_err(input_err)?;
    record_timing(dir, stage, started.elapsed().as_secs_f64()).map_err(input_err)?;
    Ok(())
}

pub fn ingest(country_dir: &Path, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let config_path = country_dir.join("config.json");
    let config = load_country_config(&config_path).map_err(input_err)?;

    let (bundle, rejects) = parse_bundle(country_dir, &config).map_err(input_err)?;
    logging::debug(format!(
        "parsed {} members, {} bills, {} votes, {} protocols ({} rejects)",
        bundle.members.len(),
        bundle.bills.len(),
        bundle.votes.len(),
        bundle.protocols.len(),
        rejects.len()
    ));

    let overrides_path = country_dir.join("overrides.csv");
    let overrides = if overrides_path.exists() {
        load_overrides(&overrides_path).map_err(input_err)?
    } else {
        Vec::new()
    };

    let repaired = repair_missing(bundle, &overrides).map_err(input_err)?;
    let report = validate_bundle(&repaired);
    logging::info(format!(
        "ingest: {} votes, {} repairs, {} rejects, {} residual violations",
        repaired.votes.len(),
        repaired.repair_log.len(),
        rejects.len(),
        report.total_violations()
    ));

    fs::create_dir_all(out).map_err(input_err)?;
    canon::write_bundle(out, &repaired).map_err(input_err)?;
    canon::write_rejects(&out.join("rejects.csv"), &rejects).map_err(input_err)?;

    let mut input_paths = vec![config_path];
    for name in ["members", "bills", "votes", "protocols"] {
        for ext in ["csv", "tsv", "txt", "json", "html", "htm"] {
            let p = country_dir.join(format!("{name}.{ext}"));
            if p.exists() {
                input_paths.push(p);
            }
        }
    }
    if overrides_path.exists() {
        input_paths.push(overrides_path);
    }
    let outputs = hash_outputs(
        out,
        &[
            "members.csv",
            "bills.csv",
            "votes.csv",
            "protocols.csv",
            "repair_log.csv",
            "rejects.csv",
        ],
    );
    let config_hash = hash_file(&country_dir.join("config.json")).ok();
    finish_stage(
        out,
        "ingest",
        &config.country,
        None,
        config_hash,
        hash_inputs(&input_paths),
        outputs,
        started,
    )
}

fn make_embedder(
    config: &CountryConfig,
    embeddings: Option<&Path>,
) -> Result<Box<dyn Embedder>, CliError> {
    if let Some(path) = embeddings {
        return Ok(Box::new(
            PrecomputedEmbedder::from_csv(path).map_err(input_err)?,
        ));
    }
    if let Some(file) = &config.embedding.file {
        return Ok(Box::new(
            PrecomputedEmbedder::from_csv(Path::new(file)).map_err(input_err)?,
        ));
    }
    Ok(Box::new(HashedEmbedder::new(
        config.embedding.dim,
        config.embedding.seed,
    )))
}

pub fn enrich(
    dir: &Path,
    config_path: &Path,
    embeddings: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let config = load_country_config(config_path).map_err(input_err)?;
    if !dir.join("votes.csv").exists() {
        return Err(input_err(format!(
            "missing artifact {}: run `vpf ingest` first",
            dir.join("votes.csv").display()
        )));
    }
    let bundle = canon::read_bundle(dir).map_err(input_err)?;
    let embedder = make_embedder(&config, embeddings)?;

    let (records, coverage) =
        build_enriched(&bundle, &config, embedder.as_ref()).map_err(input_err)?;
    logging::info(format!(
        "enrich: {} records, member join {:.1}%, bill join {:.1}%",
        records.len(),
        coverage.member_join * 100.0,
        coverage.bill_join * 100.0
    ));

    fs::create_dir_all(out).map_err(input_err)?;
    write_enriched(&out.join("enriched.csv"), &records).map_err(input_err)?;
    write_coverage(&out.join("coverage.json"), &coverage).map_err(input_err)?;

    let policy = EncodePolicy {
        embedding_dim: embedder.dim(),
        parliament_number_categorical: config.parliament_number_categorical,
    };
    let (matrix, skipped) = encode_features(&records, &policy).map_err(input_err)?;
    if skipped > 0 {
        logging::info(format!("enrich: skipped {skipped} rows without a vote date"));
    }
    save_feature_matrix(out, &matrix).map_err(input_err)?;

    let mut input_paths: Vec<PathBuf> = ["members.csv", "bills.csv", "votes.csv", "protocols.csv"]
        .iter()
        .map(|n| dir.join(n))
        .collect();
    input_paths.push(config_path.to_path_buf());
    if let Some(p) = embeddings {
        input_paths.push(p.to_path_buf());
    }
    let outputs = hash_outputs(
        out,
        &[
            "enriched.csv",
            "coverage.json",
            "feature_matrix.bin",
            "column_spec.json",
            "dictionaries.json",
        ],
    );
    let config_hash = hash_file(config_path).ok();
    finish_stage(
        out,
        "enrich",
        &config.country,
        None,
        config_hash,
        hash_inputs(&input_paths),
        outputs,
        started,
    )
}

fn load_matrix(dir: &Path) -> Result<FeatureMatrix, CliError> {
    if !dir.join("feature_matrix.bin").exists() {
        return Err(input_err(format!(
            "missing artifact {}: run `vpf enrich` first",
            dir.join("feature_matrix.bin").display()
        )));
    }
    load_feature_matrix(dir).map_err(|e| match e {
        vpf_core::features::EncodeError::BadArtifact { .. } => CliError::Contract(e.to_string()),
        other => input_err(other),
    })
}

pub fn split(dir: &Path, target: f64) -> Result<(), CliError> {
    let started = Instant::now();
    let matrix = load_matrix(dir)?;
    let (train_idx, test_idx, plan) =
        time_series_split(&matrix, target, &Resolution::COARSE_TO_FINE).map_err(input_err)?;
    logging::info(format!(
        "split: boundary {} ({:?}), {} train / {} test ({:.1}%)",
        plan.boundary_date,
        plan.resolution,
        plan.train_rows,
        plan.test_rows,
        plan.train_fraction * 100.0
    ));
    write_split_plan(&dir.join("split_plan.json"), &plan).map_err(input_err)?;
    write_row_keys(&dir.join("train_keys.csv"), &matrix, &train_idx).map_err(input_err)?;
    write_row_keys(&dir.join("test_keys.csv"), &matrix, &test_idx).map_err(input_err)?;

    let outputs = hash_outputs(dir, &["split_plan.json", "train_keys.csv", "test_keys.csv"]);
    finish_stage(
        dir,
        "split",
        "",
        None,
        None,
        hash_inputs(&[dir.join("feature_matrix.bin")]),
        outputs,
        started,
    )
}

fn read_split_artifacts(dir: &Path) -> Result<(SplitPlan, Vec<usize>, Vec<usize>), CliError> {
    let plan_path = dir.join("split_plan.json");
    if !plan_path.exists() {
        return Err(input_err(format!(
            "missing artifact {}: run `vpf split` first",
            plan_path.display()
        )));
    }
    let plan = vpf_core::split::read_split_plan(&plan_path).map_err(input_err)?;
    let matrix = load_matrix(dir)?;
    let index_of: std::collections::HashMap<(String, String), usize> = matrix
        .row_keys
        .iter()
        .enumerate()
        .map(|(i, k)| (k.clone(), i))
        .collect();
    let read_keys = |name: &str| -> Result<Vec<usize>, CliError> {
        let path = dir.join(name);
        let keys = vpf_core::split::read_row_keys(&path)
            .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
        let mut indices = Vec::new();
        for key in keys {
            let idx = index_of.get(&key).ok_or_else(|| {
                CliError::Contract(format!(
                    "{name} references row {}|{} absent from the matrix",
                    key.0, key.1
                ))
            })?;
            indices.push(*idx);
        }
        Ok(indices)
    };
    Ok((plan, read_keys("train_keys.csv")?, read_keys("test_keys.csv")?))
}

fn parse_learner_list(list: &str) -> Result<Vec<LearnerKind>, CliError> {
    let mut kinds = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind = LearnerKind::parse(item)
            .ok_or_else(|| input_err(format!("unknown learner kind {item:?}")))?;
        kinds.push(kind);
    }
    if kinds.is_empty() {
        return Err(input_err("no learner kinds given"));
    }
    Ok(kinds)
}

pub fn train(dir: &Path, learner_list: &str, seed: u64) -> Result<(), CliError> {
    let started = Instant::now();
    let kinds = parse_learner_list(learner_list)?;
    let matrix = load_matrix(dir)?;
    let (plan, train_idx, _) = read_split_artifacts(dir)?;
    let train_matrix = matrix.subset(&train_idx);
    if train_matrix.n_rows == 0 {
        return Err(input_err("training split is empty"));
    }

    let mut output_names: Vec<String> = Vec::new();
    for kind in &kinds {
        let spec = LearnerSpec::new(*kind, sub_seed(seed, &format!("train:{kind}")));
        let model = train_model(&spec, &train_matrix)
            .map_err(model_err)?
            .with_train_boundary(plan.boundary_date);
        let name = model_file_name(*kind);
        save_model(&dir.join(&name), &model).map_err(model_err)?;
        logging::info(format!(
            "train: {kind} fit on {} rows{}",
            train_matrix.n_rows,
            model
                .best_round
                .map(|r| format!(", stopped at round {r}"))
                .unwrap_or_default()
        ));
        output_names.push(name);
    }

    let output_refs: Vec<&str> = output_names.iter().map(String::as_str).collect();
    let outputs = hash_outputs(dir, &output_refs);
    finish_stage(
        dir,
        "train",
        "",
        Some(seed),
        None,
        hash_inputs(&[
            dir.join("feature_matrix.bin"),
            dir.join("split_plan.json"),
            dir.join("train_keys.csv"),
        ]),
        outputs,
        started,
    )
}

/// Class list covering the model's classes plus any labels present in the
/// test rows, with zero-probability columns for classes the model never saw.
fn align_scores(
    model: &TrainedModel,
    proba: &[f64],
    y_true: &[u8],
) -> (Vec<u8>, Vec<f64>) {
    let mut classes = model.classes.clone();
    for &label in y_true {
        if !classes.contains(&label) {
            classes.push(label);
        }
    }
    classes.sort_unstable();
    if classes == model.classes {
        return (classes, proba.to_vec());
    }
    let n = y_true.len();
    let k_old = model.classes.len();
    let k_new = classes.len();
    let mut aligned = vec![0.0f64; n * k_new];
    for i in 0..n {
        for (old_k, &class) in model.classes.iter().enumerate() {
            let new_k = classes.iter().position(|&c| c == class).unwrap();
            aligned[i * k_new + new_k] = proba[i * k_old + old_k];
        }
    }
    (classes, aligned)
}

fn resolve_model_path(dir: &Path, item: &str) -> PathBuf {
    match LearnerKind::parse(item) {
        Some(kind) => dir.join(model_file_name(kind)),
        None => PathBuf::from(item),
    }
}

pub fn evaluate(dir: &Path, models: &str) -> Result<(), CliError> {
    let started = Instant::now();
    let matrix = load_matrix(dir)?;
    let (_, _, test_idx) = read_split_artifacts(dir)?;
    let test = matrix.subset(&test_idx);
    if test.n_rows == 0 {
        return Err(input_err("test split is empty"));
    }
    let enriched_path = dir.join("enriched.csv");
    let enriched = if enriched_path.exists() {
        read_enriched(&enriched_path).map_err(input_err)?
    } else {
        Vec::new()
    };

    let mut results: Vec<(LearnerSpec, EvaluationReport)> = Vec::new();
    let mut loaded_models: Vec<(String, TrainedModel, Vec<u8>)> = Vec::new();
    let mut input_paths = vec![
        dir.join("feature_matrix.bin"),
        dir.join("split_plan.json"),
        dir.join("test_keys.csv"),
    ];
    for item in models.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let path = resolve_model_path(dir, item);
        if !path.exists() {
            return Err(input_err(format!(
                "missing artifact {}: run `vpf train` first",
                path.display()
            )));
        }
        let model = load_model(&path).map_err(model_err)?;
        let proba = model.predict_proba_matrix(&test).map_err(model_err)?;
        let y_pred = model.predict_matrix(&test).map_err(model_err)?;
        let (classes, aligned) = align_scores(&model, &proba, &test.y);
        let report =
            compute_metrics(&test.y, &y_pred, &aligned, &classes).map_err(input_err)?;
        logging::info(format!(
            "evaluate: {} accuracy {:.3}%, weighted F1 {:.3}%, micro AUC {:.3}",
            model.spec.kind(),
            report.accuracy * 100.0,
            report.f1_weighted * 100.0,
            report.auc_micro
        ));
        results.push((model.spec.clone(), report));
        loaded_models.push((item.to_string(), model, y_pred));
        input_paths.push(path);
    }

    let champion_idx = select_best(&results).map_err(model_err)?;
    let (champion_name, champion_model, champion_pred) = &loaded_models[champion_idx];
    let champion_report = &results[champion_idx].1;
    logging::info(format!(
        "evaluate: champion is {}",
        champion_model.spec.kind()
    ));

    // metrics.json: every model's report plus the champion record.
    let metrics_json = serde_json::json!({
        "models": results
            .iter()
            .map(|(spec, report)| {
                serde_json::json!({
                    "kind": spec.kind().name(),
                    "accuracy": report.accuracy,
                    "f1_weighted": report.f1_weighted,
                    "f1_macro": report.f1_macro,
                    "auc_micro": report.auc_micro,
                    "auc_per_class": report.auc_per_class,
                    "classes": report.classes,
                    "confusion": report.confusion,
                    "n_test": report.n_test,
                })
            })
            .collect::<Vec<_>>(),
        "champion": champion_model.spec.kind().name(),
    });
    fs::write(
        dir.join("metrics.json"),
        serde_json::to_string_pretty(&metrics_json).map_err(input_err)? + "\n",
    )
    .map_err(input_err)?;

    fs::write(dir.join("roc_points.csv"), draw_roc_points(champion_report))
        .map_err(input_err)?;

    let champion_record = serde_json::json!({
        "kind": champion_model.spec.kind().name(),
        "model": champion_name,
        "accuracy": champion_report.accuracy,
        "f1_weighted": champion_report.f1_weighted,
        "auc_micro": champion_report.auc_micro,
        "train_boundary": champion_model.train_boundary,
    });
    fs::write(
        dir.join("champion.json"),
        serde_json::to_string_pretty(&champion_record).map_err(input_err)? + "\n",
    )
    .map_err(input_err)?;

    // Bill-level aggregation for the champion, when bills joined.
    let predictions: Vec<PredictedVote> = test
        .row_keys
        .iter()
        .zip(test.y.iter().zip(champion_pred))
        .map(|((vote_id, member_id), (&actual, &predicted))| PredictedVote {
            vote_id: vote_id.clone(),
            member_id: member_id.clone(),
            actual: VoteResult::from_code(actual).expect("matrix labels are canonical"),
            predicted: VoteResult::from_code(predicted).expect("model labels are canonical"),
        })
        .collect();
    match bill_level_accuracy(&predictions, &enriched) {
        Ok(bill_report) => {
            logging::info(format!(
                "evaluate: bill accuracy {:.3}% ({} of {})",
                bill_report.accuracy * 100.0,
                bill_report.successful_bills,
                bill_report.total_bills
            ));
            fs::write(dir.join("bill_report.csv"), write_bill_report_csv(&bill_report))
                .map_err(input_err)?;
            let pass_reject = serde_json::json!({
                "total_bills": bill_report.total_bills,
                "successful_bills": bill_report.successful_bills,
                "accuracy": bill_report.accuracy,
                "pass_reject": bill_report.pass_reject,
                "unjoined_predictions": bill_report.unjoined_predictions,
            });
            fs::write(
                dir.join("pass_reject.json"),
                serde_json::to_string_pretty(&pass_reject).map_err(input_err)? + "\n",
            )
            .map_err(input_err)?;
        }
        Err(e) => logging::info(format!("evaluate: skipping bill aggregation: {e}")),
    }

    let outputs = hash_outputs(
        dir,
        &[
            "metrics.json",
            "roc_points.csv",
            "champion.json",
            "bill_report.csv",
            "pass_reject.json",
        ],
    );
    finish_stage(dir, "evaluate", "", None, None, hash_inputs(&input_paths), outputs, started)
}

/// Evenly spaced selection of `count` indices from a pool.
fn spaced(pool: &[usize], count: usize) -> Vec<usize> {
    if pool.len() <= count {
        return pool.to_vec();
    }
    (0..count)
        .map(|i| pool[i * pool.len() / count])
        .collect()
}

pub fn explain(
    dir: &Path,
    model_path: &Path,
    samples: usize,
    seed: u64,
    background_size: usize,
    max_rows: Option<usize>,
) -> Result<(), CliError> {
    let started = Instant::now();
    if !model_path.exists() {
        return Err(input_err(format!(
            "missing artifact {}: run `vpf train` first",
            model_path.display()
        )));
    }
    let model = load_model(model_path).map_err(model_err)?;
    let matrix = load_matrix(dir)?;
    if matrix.column_spec_hash() != model.column_spec_hash {
        return Err(CliError::Contract(
            "model was trained on a differently-encoded matrix".to_string(),
        ));
    }
    let (_, train_idx, test_idx) = read_split_artifacts(dir)?;

    let background_rows = spaced(&train_idx, background_size.max(1));
    if background_rows.is_empty() {
        return Err(input_err("training split is empty; nothing to use as background"));
    }
    let background: Vec<Vec<f64>> = background_rows
        .iter()
        .map(|&i| matrix.row(i).to_vec())
        .collect();

    let explain_rows = match max_rows {
        Some(cap) => spaced(&test_idx, cap.max(1)),
        None => test_idx.clone(),
    };

    let class_position = |code: u8| model.classes.iter().position(|&c| c == code);
    let mut attributions: Vec<Attribution> = Vec::with_capacity(explain_rows.len());
    let mut explained_features: Vec<Vec<f64>> = Vec::with_capacity(explain_rows.len());
    for &i in &explain_rows {
        let row = matrix.row(i);
        let predicted = model.predict(row).map_err(model_err)?[0];
        let class_index = class_position(predicted).unwrap_or(0);
        let (vote_id, member_id) = &matrix.row_keys[i];
        let row_key = format!("{vote_id}|{member_id}");
        let mut attribution = shapley_sampling(
            &model,
            row,
            &background,
            class_index,
            samples,
            sub_seed(seed, &format!("shap:{row_key}")),
        )
        .map_err(input_err)?;
        attribution.row_key = row_key;
        attribution.class_code = predicted;
        attributions.push(attribution);
        explained_features.push(row.to_vec());
    }
    logging::info(format!(
        "explain: attributed {} rows with {} samples each",
        attributions.len(),
        samples
    ));

    let feature_names: Vec<String> = matrix.columns.iter().map(|c| c.name.clone()).collect();
    let export = beeswarm_export(&attributions, &explained_features, &feature_names, &background);
    fs::write(dir.join("shap_values.csv"), beeswarm_csv(&export)).map_err(input_err)?;
    fs::write(dir.join("feature_importance.csv"), importance_csv(&export))
        .map_err(input_err)?;

    // Anomalies come from every test prediction, not just the attributed rows.
    let enriched_path = dir.join("enriched.csv");
    if enriched_path.exists() {
        let enriched = read_enriched(&enriched_path).map_err(input_err)?;
        let test = matrix.subset(&test_idx);
        let y_pred = model.predict_matrix(&test).map_err(model_err)?;
        let predictions: Vec<PredictedVote> = test
            .row_keys
            .iter()
            .zip(test.y.iter().zip(&y_pred))
            .map(|((vote_id, member_id), (&actual, &predicted))| PredictedVote {
                vote_id: vote_id.clone(),
                member_id: member_id.clone(),
                actual: VoteResult::from_code(actual).expect("canonical"),
                predicted: VoteResult::from_code(predicted).expect("canonical"),
            })
            .collect();
        // Coalition status per party, reconstructed from the enriched rows.
        let mut coalition: BTreeMap<(u32, String), bool> = BTreeMap::new();
        for r in &enriched {
            if let Some(flag) = r.is_in_alliance {
                coalition
                    .entry((r.parliament_number, r.party_name.clone()))
                    .or_insert(flag);
            }
        }
        let coalition_table: Vec<CoalitionEntry> = coalition
            .into_iter()
            .map(|((parliament_number, party_name), in_coalition)| CoalitionEntry {
                parliament_number,
                party_name,
                in_coalition,
            })
            .collect();
        let report = false_negative_report(&predictions, &enriched, &coalition_table);
        logging::info(format!(
            "explain: {} mispredictions, {} flagged as defections",
            report.rows.len(),
            report.rows.iter().filter(|r| r.is_defection).count()
        ));
        fs::write(dir.join("anomalies.csv"), anomalies_csv(&report)).map_err(input_err)?;
        let groups = serde_json::json!({
            "by_party": report.by_party,
            "by_member": report.by_member,
            "by_bill": report.by_bill,
        });
        fs::write(
            dir.join("anomaly_groups.json"),
            serde_json::to_string_pretty(&groups).map_err(input_err)? + "\n",
        )
        .map_err(input_err)?;
    }

    let outputs = hash_outputs(
        dir,
        &[
            "shap_values.csv",
            "feature_importance.csv",
            "anomalies.csv",
            "anomaly_groups.json",
        ],
    );
    finish_stage(
        dir,
        "explain",
        "",
        Some(seed),
        None,
        hash_inputs(&[model_path.to_path_buf(), dir.join("feature_matrix.bin")]),
        outputs,
        started,
    )
}

pub fn report(dir: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    if !dir.exists() {
        return Err(input_err(format!("no such directory {}", dir.display())));
    }
    let read_json = |name: &str| -> Option<serde_json::Value> {
        fs::read_to_string(dir.join(name))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
    };

    let manifest = read_json("manifest.json");
    let coverage = read_json("coverage.json");
    let split_plan = read_json("split_plan.json");
    let metrics = read_json("metrics.json");
    let champion = read_json("champion.json");
    let pass_reject = read_json("pass_reject.json");
    let anomaly_groups = read_json("anomaly_groups.json");

    let mut text = String::new();
    text.push_str("VPF run report\n==============\n");
    if let Some(m) = &manifest {
        text.push_str(&format!(
            "run {} country {} (stages: {})\n",
            m["run_id"].as_str().unwrap_or("?"),
            m["country"].as_str().unwrap_or("?"),
            m["stages"]
                .as_array()
                .map(|s| s.iter().filter_map(|v| v.as_str()).collect::<Vec<_>>().join(", "))
                .unwrap_or_default()
        ));
    }
    if let Some(c) = &coverage {
        text.push_str(&format!(
            "joins: member {:.1}%, bill {:.1}%, protocol {:.1}% over {} votes\n",
            c["member_join"].as_f64().unwrap_or(0.0) * 100.0,
            c["bill_join"].as_f64().unwrap_or(0.0) * 100.0,
            c["protocol_join"].as_f64().unwrap_or(0.0) * 100.0,
            c["n_votes"].as_u64().unwrap_or(0)
        ));
    }
    if let Some(p) = &split_plan {
        text.push_str(&format!(
            "split: boundary {} at {} resolution, {} train / {} test ({:.1}% train)\n",
            p["boundary_date"].as_str().unwrap_or("?"),
            p["resolution"].as_str().unwrap_or("?"),
            p["train_rows"].as_u64().unwrap_or(0),
            p["test_rows"].as_u64().unwrap_or(0),
            p["train_fraction"].as_f64().unwrap_or(0.0) * 100.0
        ));
    }
    if let Some(m) = &metrics {
        if let Some(models) = m["models"].as_array() {
            for model in models {
                text.push_str(&format!(
                    "model {}: accuracy {:.3}%, weighted F1 {:.3}%, micro AUC {:.3}\n",
                    model["kind"].as_str().unwrap_or("?"),
                    model["accuracy"].as_f64().unwrap_or(0.0) * 100.0,
                    model["f1_weighted"].as_f64().unwrap_or(0.0) * 100.0,
                    model["auc_micro"].as_f64().unwrap_or(0.0)
                ));
            }
        }
        text.push_str(&format!(
            "champion: {}\n",
            m["champion"].as_str().unwrap_or("?")
        ));
    }
    if let Some(b) = &pass_reject {
        text.push_str(&format!(
            "bills: {} of {} predicted ({:.3}%)\n",
            b["successful_bills"].as_u64().unwrap_or(0),
            b["total_bills"].as_u64().unwrap_or(0),
            b["accuracy"].as_f64().unwrap_or(0.0) * 100.0
        ));
    }
    if let Some(a) = &anomaly_groups {
        if let Some(parties) = a["by_party"].as_array() {
            if let Some(top) = parties.first() {
                text.push_str(&format!(
                    "most mispredicted party: {} ({} rows)\n",
                    top["key"].as_str().unwrap_or("?"),
                    top["count"].as_u64().unwrap_or(0)
                ));
            }
        }
    }

    let consolidated = serde_json::json!({
        "manifest": manifest,
        "coverage": coverage,
        "split_plan": split_plan,
        "metrics": metrics,
        "champion": champion,
        "pass_reject": pass_reject,
        "anomaly_groups": anomaly_groups,
    });
    fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&consolidated).map_err(input_err)? + "\n",
    )
    .map_err(input_err)?;
    fs::write(dir.join("report.txt"), &text).map_err(input_err)?;
    print!("{text}");

    let outputs = hash_outputs(dir, &["report.json", "report.txt"]);
    finish_stage(dir, "report", "", None, None, BTreeMap::new(), outputs, started)
}
