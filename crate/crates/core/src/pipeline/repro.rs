//! Self-contained bias study: synthetic roots, a skewed subsample and the
//! orbit-augmented balanced set, compared in both directions.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::{run_experiment, write_artifacts, write_reports, ExperimentConfig, ExperimentReport};
use super::{write_distribution, PipelineError};
use crate::augment::{augment_dataset, class_distribution};
use crate::dataset::{
    bias_subsample, generate_synthetic, max_subsample_size, save_dataset, Dataset, GeneratorConfig,
    SplitMode,
};
use crate::models::{Family, Gamma, Hyperparams, Kernel, MaxFeatures};
use crate::seeding;

/// Class shares 580, 900, 1100, 800, 858, 2657 out of 6,895 problems.
pub const BENCHMARK_SKEW: [f64; 6] = [
    580.0 / 6895.0,
    900.0 / 6895.0,
    1100.0 / 6895.0,
    800.0 / 6895.0,
    858.0 / 6895.0,
    2657.0 / 6895.0,
];

pub const BIASED_NAME: &str = "D1";
pub const BALANCED_NAME: &str = "D2";

const GENERATOR_STREAM: u64 = 1;
const SUBSAMPLE_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproConfig {
    pub generator: GeneratorConfig,
    pub bias_proportions: Vec<f64>,
    /// Size of the skewed subsample; `None` takes the largest feasible.
    pub bias_size: Option<usize>,
    pub experiment: ExperimentConfig,
    pub split_modes: Vec<SplitMode>,
}

/// Small grids that keep a three-seed study within minutes on one core.
pub fn compact_grids() -> BTreeMap<Family, Vec<Hyperparams>> {
    let mut grids = BTreeMap::new();
    grids.insert(
        Family::Knn,
        [5, 15].map(|k| Hyperparams::Knn { k }).to_vec(),
    );
    grids.insert(
        Family::Dt,
        [Some(6), Some(10)]
            .map(|max_depth| Hyperparams::Dt {
                max_depth,
                min_samples_split: 2,
            })
            .to_vec(),
    );
    grids.insert(
        Family::Rf,
        [Some(10), None]
            .map(|max_depth| Hyperparams::Rf {
                n_trees: 50,
                max_features: MaxFeatures::Sqrt,
                max_depth,
            })
            .to_vec(),
    );
    grids.insert(
        Family::Svm,
        [1.0, 10.0]
            .map(|c| Hyperparams::Svm {
                c,
                gamma: Gamma::Scale,
                kernel: Kernel::Rbf,
            })
            .to_vec(),
    );
    grids.insert(
        Family::Mlp,
        [1e-2, 5e-2]
            .map(|learning_rate| Hyperparams::Mlp {
                hidden_sizes: vec![32],
                learning_rate,
                epochs: 30,
                batch_size: 32,
            })
            .to_vec(),
    );
    grids
}

impl Default for ReproConfig {
    fn default() -> Self {
        ReproConfig {
            generator: GeneratorConfig {
                count: 1200,
                // x2 heavier and x3 lighter than x1, so roots favour
                // eliminating x3 first like the skewed target.
                var_presence: [0.45, 0.65, 0.4],
                exclude_ties: true,
                ..GeneratorConfig::default()
            },
            bias_proportions: BENCHMARK_SKEW.to_vec(),
            bias_size: None,
            experiment: ExperimentConfig {
                grids: compact_grids(),
                ..ExperimentConfig::default()
            },
            split_modes: vec![SplitMode::Random, SplitMode::Orbit],
        }
    }
}

pub struct ReproOutcome {
    pub roots: Dataset,
    pub biased: Dataset,
    pub balanced: Dataset,
    /// One report per split mode, in configuration order.
    pub reports: Vec<ExperimentReport>,
}

fn mode_dir(mode: SplitMode) -> &'static str {
    match mode {
        SplitMode::Random => "random",
        SplitMode::Orbit => "orbit",
    }
}

/// Generates roots, derives the skewed subsample `D1` and the augmented
/// set `D2`, and runs the experiment once per split mode. With `out_dir`
/// set, datasets, distributions, per-mode reports and artifacts and a
/// combined report are written there.
pub fn repro_bias_study(
    seed: u64,
    cfg: &ReproConfig,
    out_dir: Option<&Path>,
) -> Result<ReproOutcome, PipelineError> {
    cfg.experiment.validate()?;
    if cfg.split_modes.is_empty() {
        return Err(PipelineError::Config("at least one split mode is required".into()));
    }
    if !cfg.generator.exclude_ties {
        return Err(PipelineError::Config(
            "the bias study needs tie-free roots (generator.exclude_ties)".into(),
        ));
    }
    let roots = generate_synthetic(&cfg.generator, seeding::derive_seed(seed, GENERATOR_STREAM))?;
    let balanced = augment_dataset(&roots)?;
    let size = match cfg.bias_size {
        Some(s) => s,
        None => max_subsample_size(&roots, &cfg.bias_proportions)?,
    };
    let biased = bias_subsample(
        &roots,
        &cfg.bias_proportions,
        size,
        seeding::derive_seed(seed, SUBSAMPLE_STREAM),
    )?;

    let mut reports = Vec::with_capacity(cfg.split_modes.len());
    for &mode in &cfg.split_modes {
        let exp = ExperimentConfig {
            split_mode: mode,
            ..cfg.experiment.clone()
        };
        let (report, artifacts) =
            run_experiment((BIASED_NAME, &biased), (BALANCED_NAME, &balanced), &exp, seed)?;
        if let Some(dir) = out_dir {
            let sub = dir.join(mode_dir(mode));
            write_reports(std::slice::from_ref(&report), &sub)?;
            write_artifacts(&artifacts, &sub)?;
        }
        reports.push(report);
    }

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        save_dataset(&roots, &dir.join("roots.jsonl"))?;
        for (name, d) in [(BIASED_NAME, &biased), (BALANCED_NAME, &balanced)] {
            let path = dir.join(format!("{name}.csv"));
            save_dataset(d, &path)?;
            write_distribution(&class_distribution(d), &path)?;
        }
        let mut cfg_text = serde_json::to_string_pretty(&serde_json::json!({
            "seed": seed,
            "config": cfg,
        }))?;
        cfg_text.push('\n');
        std::fs::write(dir.join("study.json"), cfg_text)?;
        write_reports(&reports, dir)?;
    }
    Ok(ReproOutcome {
        roots,
        biased,
        balanced,
        reports,
    })
}

/// Per-family comparison of cross-dataset accuracy against own test
/// accuracy, in percentage points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternCheck {
    pub family: Family,
    /// Biased-trained: own test accuracy minus accuracy on the balanced set.
    pub biased_drop: f64,
    /// Balanced-trained: accuracy on the biased set minus own test accuracy.
    pub balanced_shift: f64,
}

impl PatternCheck {
    /// The biased model loses at least `points` on the balanced data.
    pub fn drops(&self, points: f64) -> bool {
        self.biased_drop >= points
    }

    /// The balanced model stays within `points` of its own test accuracy.
    pub fn retains(&self, points: f64) -> bool {
        self.balanced_shift.abs() <= points
    }
}

pub fn bias_pattern(report: &ExperimentReport) -> Vec<PatternCheck> {
    report
        .config
        .families
        .iter()
        .filter_map(|&family| {
            let b = report.row(BIASED_NAME, family.name())?;
            let u = report.row(BALANCED_NAME, family.name())?;
            Some(PatternCheck {
                family,
                biased_drop: 100.0 * (b.test_accuracy - b.cross_dataset_accuracy),
                balanced_shift: 100.0 * (u.cross_dataset_accuracy - u.test_accuracy),
            })
        })
        .collect()
}
