//! Command implementations behind the `varord` CLI and the cross-dataset
//! experiment harness.

mod experiment;
mod repro;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{augment_dataset, class_distribution, AugmentError, ClassDistribution};
use crate::cadcost::{rank_orderings, CostError};
use crate::dataset::{
    load_dataset, orbit_leakage, save_dataset, split, Dataset, DatasetError, SplitSpec,
};
use crate::features::{fit_scaler, FeatureError};
use crate::models::{self, default_grid, Family, GridResult, Hyperparams, ModelError, Samples, TrainedModel};
use crate::polysys::num_orderings;

pub use experiment::{
    random_baseline_accuracy, report_csv, report_markdown, run_experiment, write_artifacts, write_reports, DatasetInfo,
    DirectionArtifacts, DirectionInfo, ExperimentConfig, ExperimentReport, ReportRow,
};
pub use repro::{
    bias_pattern, compact_grids, repro_bias_study, PatternCheck, ReproConfig, ReproOutcome,
    BALANCED_NAME, BIASED_NAME, BENCHMARK_SKEW,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("class {label} is missing from the training split of {dataset}")]
    MissingClass { dataset: String, label: usize },
    #[error("record {id:?} has no timings row")]
    MissingTimings { id: String },
    #[error("timings row {id:?} matches no record")]
    UnknownTimingsId { id: String },
    #[error("record {id:?}: {source}")]
    Record { id: String, source: DatasetError },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// True for bad input or configuration, false for I/O failures.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            PipelineError::Io(_)
                | PipelineError::Dataset(DatasetError::Io(_))
                | PipelineError::Model(ModelError::Io(_))
        )
    }
}

/// Parses problems, computes features and writes the feature table.
pub fn featurize(input: &Path, output: &Path) -> Result<Dataset, PipelineError> {
    let d = load_dataset(input)?;
    save_dataset(&d, output)?;
    Ok(d)
}

#[derive(Clone, Debug, PartialEq)]
pub enum LabelSource {
    /// Timings are the projection sotd of each ordering.
    Oracle,
    /// CSV with header `id,t0,..,t5`.
    Timings(PathBuf),
}

fn read_timings(path: &Path, nclasses: usize) -> Result<Vec<(String, Vec<f64>)>, PipelineError> {
    let mut reader = csv::Reader::from_path(path).map_err(DatasetError::from)?;
    let header = reader.headers().map_err(DatasetError::from)?.clone();
    let mut expected = vec!["id".to_string()];
    expected.extend((0..nclasses).map(|k| format!("t{k}")));
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(PipelineError::Config(format!(
            "timings header must be {}",
            expected.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(DatasetError::from)?;
        let row_err = |msg: String| DatasetError::Row { row: k + 1, msg };
        let ts = rec
            .iter()
            .skip(1)
            .map(crate::dataset::parse_float)
            .collect::<Result<Vec<f64>, _>>()
            .map_err(row_err)?;
        rows.push((rec[0].to_string(), ts));
    }
    Ok(rows)
}

/// Attaches timings, labels and tie flags to every record.
pub fn label(d: &mut Dataset, source: &LabelSource) -> Result<(), PipelineError> {
    let Some(nvars) = d.nvars() else {
        return Err(DatasetError::Empty.into());
    };
    match source {
        LabelSource::Oracle => {
            for r in &mut d.records {
                let system = r
                    .system
                    .as_ref()
                    .ok_or_else(|| DatasetError::MissingSystem { id: r.id.clone() })?;
                let table = rank_orderings(system)?;
                let ts = table.costs.iter().map(|c| c.total_sotd as f64).collect();
                r.set_timings(ts).map_err(|source| PipelineError::Record {
                    id: r.id.clone(),
                    source,
                })?;
            }
            d.provenance.insert("timings".into(), "projection sotd".into());
        }
        LabelSource::Timings(path) => {
            let rows = read_timings(path, num_orderings(nvars))?;
            let mut by_id: HashMap<String, Vec<f64>> = HashMap::with_capacity(rows.len());
            for (id, ts) in rows {
                if by_id.insert(id.clone(), ts).is_some() {
                    return Err(DatasetError::DuplicateId(id).into());
                }
            }
            for r in &mut d.records {
                let ts = by_id
                    .remove(&r.id)
                    .ok_or_else(|| PipelineError::MissingTimings { id: r.id.clone() })?;
                r.set_timings(ts).map_err(|source| PipelineError::Record {
                    id: r.id.clone(),
                    source,
                })?;
            }
            if let Some(id) = by_id.into_keys().min() {
                return Err(PipelineError::UnknownTimingsId { id });
            }
            d.provenance
                .insert("timings".into(), format!("file {}", path.display()));
        }
    }
    Ok(())
}

pub fn label_file(input: &Path, output: &Path, source: &LabelSource) -> Result<Dataset, PipelineError> {
    let mut d = load_dataset(input)?;
    label(&mut d, source)?;
    save_dataset(&d, output)?;
    Ok(d)
}

/// Writes `<stem>.distribution.csv` and `<stem>.summary.json` next to `path`.
pub fn write_distribution(dist: &ClassDistribution, path: &Path) -> Result<(PathBuf, PathBuf), PipelineError> {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let dir = path.parent().unwrap_or_else(|| Path::new(""));
    let csv_path = dir.join(format!("{stem}.distribution.csv"));
    let json_path = dir.join(format!("{stem}.summary.json"));
    std::fs::write(&csv_path, dist.to_csv())?;
    let mut json = serde_json::to_string_pretty(&dist.summary_json())?;
    json.push('\n');
    std::fs::write(&json_path, json)?;
    Ok((csv_path, json_path))
}

/// Expands every root into its orbit and writes the result together with
/// its class distribution.
pub fn augment_file(input: &Path, output: &Path) -> Result<ClassDistribution, PipelineError> {
    let d = augment_dataset(&load_dataset(input)?)?;
    save_dataset(&d, output)?;
    let dist = class_distribution(&d);
    write_distribution(&dist, output)?;
    Ok(dist)
}

/// Splits a dataset file and returns the orbit leakage of the split.
pub fn split_file(
    input: &Path,
    train_out: &Path,
    test_out: &Path,
    spec: &SplitSpec,
) -> Result<f64, PipelineError> {
    let d = load_dataset(input)?;
    let (train, test) = split(&d, spec)?;
    save_dataset(&train, train_out)?;
    save_dataset(&test, test_out)?;
    Ok(orbit_leakage(&train, &test))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub family: Family,
    /// Overrides the family's default grid.
    pub grid: Option<Vec<Hyperparams>>,
    pub cv_folds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            family: Family::Knn,
            grid: None,
            cv_folds: 5,
        }
    }
}

/// Samples of a labeled dataset with class count taken from its arity.
pub fn dataset_samples(d: &Dataset, scaler: &crate::features::Scaler) -> Result<Samples, PipelineError> {
    let nvars = d.nvars().ok_or(DatasetError::Empty)?;
    let x = scaler.transform_all(&d.feature_rows())?;
    Ok(Samples::new(x, d.labels()?, num_orderings(nvars))?)
}

/// Fits a scaler on `d`, grid-searches the family and trains the winner.
pub fn train(d: &Dataset, cfg: &TrainConfig, seed: u64) -> Result<(TrainedModel, GridResult), PipelineError> {
    let grid = cfg.grid.clone().unwrap_or_else(|| default_grid(cfg.family));
    if let Some(hp) = grid.iter().find(|hp| hp.family() != cfg.family) {
        return Err(PipelineError::Config(format!(
            "grid for {} contains {} hyperparameters",
            cfg.family,
            hp.family()
        )));
    }
    let scaler = fit_scaler(&d.feature_rows())?;
    let data = dataset_samples(d, &scaler)?;
    let search = models::grid_search(&grid, &data, cfg.cv_folds, seed)?;
    let model = models::train(&search.best, &data, seed)?.with_scaler(scaler);
    Ok((model, search))
}

pub fn train_file(
    input: &Path,
    model_out: &Path,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(TrainedModel, GridResult), PipelineError> {
    let d = load_dataset(input)?;
    let (model, search) = train(&d, cfg, seed)?;
    models::save_model(&model, model_out)?;
    Ok((model, search))
}

/// Accuracy of a persisted model on a labeled dataset, using the model's
/// own scaler.
pub fn evaluate_file(model_path: &Path, data_path: &Path) -> Result<f64, PipelineError> {
    let model = models::load_model(model_path)?;
    let d = load_dataset(data_path)?;
    let scaler = model
        .scaler
        .clone()
        .unwrap_or_else(|| crate::features::Scaler::identity(model.n_features));
    let data = dataset_samples(&d, &scaler)?;
    Ok(models::accuracy(&model, &data)?)
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Loads two dataset files, runs the experiment and writes reports and
/// artifacts into `out_dir`.
pub fn experiment_files(
    a: &Path,
    b: &Path,
    cfg: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<ExperimentReport, PipelineError> {
    let (da, db) = (load_dataset(a)?, load_dataset(b)?);
    let (mut na, mut nb) = (dataset_name(a), dataset_name(b));
    if na == nb {
        na.push_str("_a");
        nb.push_str("_b");
    }
    let (report, artifacts) = run_experiment((&na, &da), (&nb, &db), cfg, seed)?;
    write_reports(std::slice::from_ref(&report), out_dir)?;
    write_artifacts(&artifacts, out_dir)?;
    Ok(report)
}

#[cfg(test)]
mod tests;
