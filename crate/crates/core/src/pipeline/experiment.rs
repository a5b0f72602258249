//! Cross-dataset evaluation: train on a split of one dataset, test on the
//! held-out part and on all of the other dataset, in both directions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::augment::{class_distribution, ClassDistribution};
use crate::dataset::{orbit_leakage, split, Dataset, SplitMode, SplitSpec};
use crate::features::{fit_scaler, Scaler};
use crate::models::{self, default_grid, Family, Hyperparams, Samples, TrainedModel};
use crate::polysys::num_orderings;
use crate::seeding;

/// Stream used for the uniform random baseline.
const BASELINE_STREAM: u64 = 0xBA5E_11E0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub test_fraction: f64,
    pub split_mode: SplitMode,
    pub cv_folds: usize,
    pub families: Vec<Family>,
    /// Per-family grids; families without an entry use the default grid.
    pub grids: BTreeMap<Family, Vec<Hyperparams>>,
    pub random_baseline: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            test_fraction: 0.2,
            split_mode: SplitMode::Random,
            cv_folds: 5,
            families: Family::ALL.to_vec(),
            grids: BTreeMap::new(),
            random_baseline: true,
        }
    }
}

impl ExperimentConfig {
    pub fn grid(&self, family: Family) -> Vec<Hyperparams> {
        self.grids
            .get(&family)
            .cloned()
            .unwrap_or_else(|| default_grid(family))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction must lie in (0, 1), got {}", self.test_fraction));
        }
        if self.cv_folds < 2 {
            return bad("cv_folds must be at least 2".into());
        }
        if self.families.is_empty() {
            return bad("at least one model family is required".into());
        }
        for (family, grid) in &self.grids {
            if grid.is_empty() {
                return bad(format!("grid for {family} is empty"));
            }
            for hp in grid {
                if hp.family() != *family {
                    return bad(format!("grid for {family} contains {} hyperparameters", hp.family()));
                }
                hp.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub train_dataset: String,
    pub other_dataset: String,
    /// Model family name, or `"random"` for the uniform baseline.
    pub model: String,
    pub hyperparams: Option<Hyperparams>,
    pub cv_accuracy: Option<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub cross_dataset_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionInfo {
    pub train_dataset: String,
    pub other_dataset: String,
    pub train_size: usize,
    pub test_size: usize,
    pub other_size: usize,
    /// Fraction of test records with an orbit-mate in the training split.
    pub leakage: f64,
    pub scaler: Scaler,
    pub grid_search: BTreeMap<Family, models::GridResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub size: usize,
    pub distribution: ClassDistribution,
    pub provenance: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub split: SplitSpec,
    pub config: ExperimentConfig,
    pub datasets: Vec<DatasetInfo>,
    pub directions: Vec<DirectionInfo>,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn row(&self, train_dataset: &str, model: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.train_dataset == train_dataset && r.model == model)
    }
}

/// Trained models and the split record ids of one direction.
pub struct DirectionArtifacts {
    pub train_dataset: String,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub models: Vec<TrainedModel>,
}

fn samples(d: &Dataset, scaler: &Scaler, n_classes: usize) -> Result<Samples, PipelineError> {
    let x = scaler.transform_all(&d.feature_rows())?;
    Ok(Samples::new(x, d.labels()?, n_classes)?)
}

/// Accuracy of guessing a uniformly random label for each record.
pub fn random_baseline_accuracy<R: Rng>(truth: &[usize], n_classes: usize, rng: &mut R) -> f64 {
    let hits = truth
        .iter()
        .filter(|&&t| rng.gen_range(0..n_classes) == t)
        .count();
    hits as f64 / truth.len() as f64
}

fn run_direction(
    (train_name, train_data): (&str, &Dataset),
    (other_name, other_data): (&str, &Dataset),
    cfg: &ExperimentConfig,
    spec: &SplitSpec,
    seed: u64,
) -> Result<(DirectionInfo, Vec<ReportRow>, DirectionArtifacts), PipelineError> {
    let n_classes = train_data
        .nvars()
        .map(num_orderings)
        .ok_or_else(|| PipelineError::Config(format!("dataset {train_name} is empty")))?;
    let (tr, te) = split(train_data, spec)?;
    let labels = tr.labels()?;
    if let Some(missing) = (0..n_classes).find(|c| !labels.contains(c)) {
        return Err(PipelineError::MissingClass {
            dataset: train_name.into(),
            label: missing,
        });
    }
    let scaler = fit_scaler(&tr.feature_rows())?;
    let train_s = samples(&tr, &scaler, n_classes)?;
    let test_s = samples(&te, &scaler, n_classes)?;
    let other_s = samples(other_data, &scaler, n_classes)?;
    if test_s.is_empty() || other_s.is_empty() {
        return Err(PipelineError::Config(format!(
            "direction {train_name} -> {other_name} has an empty evaluation set"
        )));
    }

    let mut rows = Vec::new();
    let mut searches = BTreeMap::new();
    let mut trained = Vec::new();
    for &family in &cfg.families {
        let grid = cfg.grid(family);
        let search = models::grid_search(&grid, &train_s, cfg.cv_folds, seed)?;
        let model = models::train(&search.best, &train_s, seed)?.with_scaler(scaler.clone());
        rows.push(ReportRow {
            train_dataset: train_name.into(),
            other_dataset: other_name.into(),
            model: family.name().into(),
            hyperparams: Some(search.best.clone()),
            cv_accuracy: Some(search.table[search.best_index].cv.mean),
            train_accuracy: models::accuracy(&model, &train_s)?,
            test_accuracy: models::accuracy(&model, &test_s)?,
            cross_dataset_accuracy: models::accuracy(&model, &other_s)?,
        });
        searches.insert(family, search);
        trained.push(model);
    }
    if cfg.random_baseline {
        let mut rng = seeding::stream_rng(seed, BASELINE_STREAM);
        rows.push(ReportRow {
            train_dataset: train_name.into(),
            other_dataset: other_name.into(),
            model: "random".into(),
            hyperparams: None,
            cv_accuracy: None,
            train_accuracy: random_baseline_accuracy(&train_s.y, n_classes, &mut rng),
            test_accuracy: random_baseline_accuracy(&test_s.y, n_classes, &mut rng),
            cross_dataset_accuracy: random_baseline_accuracy(&other_s.y, n_classes, &mut rng),
        });
    }
    let info = DirectionInfo {
        train_dataset: train_name.into(),
        other_dataset: other_name.into(),
        train_size: tr.len(),
        test_size: te.len(),
        other_size: other_data.len(),
        leakage: orbit_leakage(&tr, &te),
        scaler,
        grid_search: searches,
    };
    let artifacts = DirectionArtifacts {
        train_dataset: train_name.into(),
        train_ids: tr.records.iter().map(|r| r.id.clone()).collect(),
        test_ids: te.records.iter().map(|r| r.id.clone()).collect(),
        models: trained,
    };
    Ok((info, rows, artifacts))
}

/// Runs both directions `a -> b` and `b -> a`. Scalers are fitted on the
/// training split and reused for the other dataset.
pub fn run_experiment(
    a: (&str, &Dataset),
    b: (&str, &Dataset),
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(ExperimentReport, Vec<DirectionArtifacts>), PipelineError> {
    cfg.validate()?;
    if a.0 == b.0 {
        return Err(PipelineError::Config("the two datasets need distinct names".into()));
    }
    let spec = SplitSpec {
        test_fraction: cfg.test_fraction,
        seed,
        mode: cfg.split_mode,
    };
    let mut directions = Vec::new();
    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    for (i, j) in [(0, 1), (1, 0)] {
        let pair = [a, b];
        let (info, r, art) = run_direction(pair[i], pair[j], cfg, &spec, seed)?;
        directions.push(info);
        rows.extend(r);
        artifacts.push(art);
    }
    let datasets = [a, b]
        .iter()
        .map(|(name, d)| DatasetInfo {
            name: (*name).into(),
            size: d.len(),
            distribution: class_distribution(d),
            provenance: d.provenance.clone(),
        })
        .collect();
    Ok((
        ExperimentReport {
            seed,
            split: spec,
            config: cfg.clone(),
            datasets,
            directions,
            rows,
        },
        artifacts,
    ))
}

fn mode_name(mode: SplitMode) -> &'static str {
    match mode {
        SplitMode::Random => "random",
        SplitMode::Orbit => "orbit",
    }
}

/// One CSV row per model and direction.
pub fn report_csv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from(
        "split_mode,train_dataset,other_dataset,model,hyperparams,cv_accuracy,train_accuracy,test_accuracy,cross_dataset_accuracy,leakage\n",
    );
    for rep in reports {
        for row in &rep.rows {
            let leakage = rep
                .directions
                .iter()
                .find(|d| d.train_dataset == row.train_dataset)
                .map_or(0.0, |d| d.leakage);
            let hp = row
                .hyperparams
                .as_ref()
                .map(|h| serde_json::to_string(h).expect("hyperparameters serialize"))
                .unwrap_or_default();
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(Vec::new());
            w.write_record([
                mode_name(rep.split.mode).to_string(),
                row.train_dataset.clone(),
                row.other_dataset.clone(),
                row.model.clone(),
                hp,
                row.cv_accuracy.map(|a| format!("{a:.6}")).unwrap_or_default(),
                format!("{:.6}", row.train_accuracy),
                format!("{:.6}", row.test_accuracy),
                format!("{:.6}", row.cross_dataset_accuracy),
                format!("{leakage:.6}"),
            ])
            .expect("write to memory");
            out.push_str(&String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8"));
        }
    }
    out
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

/// Markdown tables, one per direction, with the model's own training
/// split, its held-out test split and the entire other dataset as columns.
pub fn report_markdown(reports: &[ExperimentReport]) -> String {
    let mut out = String::from("# Cross-dataset evaluation\n");
    for rep in reports {
        let sizes: Vec<String> = rep
            .datasets
            .iter()
            .map(|d| format!("{} ({} records)", d.name, d.size))
            .collect();
        writeln!(
            out,
            "\n## Split mode: {}\n\nSeed {}, test fraction {}, datasets {}.",
            mode_name(rep.split.mode),
            rep.seed,
            rep.split.test_fraction,
            sizes.join(", ")
        )
        .expect("write to string");
        for dir in &rep.directions {
            writeln!(
                out,
                "\n### Trained on {}\n\nTrain {} / test {} records; orbit leakage of the split: {:.4}.\n",
                dir.train_dataset, dir.train_size, dir.test_size, dir.leakage
            )
            .expect("write to string");
            writeln!(
                out,
                "| Model | Training set | Testing set ({}) | {} (all) | Selected hyperparameters |",
                dir.train_dataset, dir.other_dataset
            )
            .expect("write to string");
            out.push_str("|---|---|---|---|---|\n");
            for row in rep.rows.iter().filter(|r| r.train_dataset == dir.train_dataset) {
                let hp = row.hyperparams.as_ref().map_or("-".to_string(), ToString::to_string);
                writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    row.model,
                    pct(row.train_accuracy),
                    pct(row.test_accuracy),
                    pct(row.cross_dataset_accuracy),
                    hp
                )
                .expect("write to string");
            }
        }
    }
    out
}

/// Writes `report.csv`, `report.md` and `report.json`.
pub fn write_reports(reports: &[ExperimentReport], dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.csv"), report_csv(reports))?;
    std::fs::write(dir.join("report.md"), report_markdown(reports))?;
    let mut json = serde_json::to_string_pretty(reports)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    Ok(())
}

/// Saves models as `models/<dataset>_<family>.json` and splits as
/// `splits/<dataset>.json` (`{"train": [ids], "test": [ids]}`).
pub fn write_artifacts(artifacts: &[DirectionArtifacts], dir: &Path) -> Result<(), PipelineError> {
    let models_dir = dir.join("models");
    let splits_dir = dir.join("splits");
    std::fs::create_dir_all(&models_dir)?;
    std::fs::create_dir_all(&splits_dir)?;
    for art in artifacts {
        for m in &art.models {
            let name = format!("{}_{}.json", art.train_dataset, m.family.name().to_lowercase());
            models::save_model(m, &models_dir.join(name))?;
        }
        let ids = serde_json::json!({ "train": art.train_ids, "test": art.test_ids });
        let mut text = serde_json::to_string_pretty(&ids)?;
        text.push('\n');
        std::fs::write(splits_dir.join(format!("{}.json", art.train_dataset)), text)?;
    }
    Ok(())
}
