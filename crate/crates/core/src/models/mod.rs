//! Native classifiers over scaled feature vectors: k-nearest neighbours,
//! CART decision trees, random forests, one-vs-rest SMO support vector
//! machines and multi-layer perceptrons, with k-fold cross-validation, grid
//! search and versioned JSON persistence.
//!
//! Training is a deterministic function of the data, the hyperparameters
//! and a 64-bit seed. Prediction ties always go to the lowest label.

mod knn;
mod mlp;
mod svm;
mod tree;

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::features::Scaler;
use crate::polysys::OrderingLabel;
use crate::seeding;

pub use knn::Knn;
pub use mlp::{flatten_layers, Layer, Mlp};
pub use svm::{Kernel, Machine, Svm, TOLERANCE as SVM_TOLERANCE};
pub use tree::{Node, Tree};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("evaluation set is empty")]
    EmptyEvaluationSet,
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error("expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{samples} samples but {labels} labels")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("label {label} outside 0..{n_classes}")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("cannot make {k} folds from {n} samples (need 2 <= k <= n)")]
    InvalidFolds { k: usize, n: usize },
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("model file has schema version {found:?}, expected {expected}")]
    VersionMismatch { found: Option<u64>, expected: u32 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Knn,
    Dt,
    Rf,
    Svm,
    Mlp,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Svm, Family::Knn, Family::Dt, Family::Rf, Family::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Family::Knn => "kNN",
            Family::Dt => "DT",
            Family::Rf => "RF",
            Family::Svm => "SVM",
            Family::Mlp => "MLP",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(Family::Knn),
            "dt" => Ok(Family::Dt),
            "rf" => Ok(Family::Rf),
            "svm" => Ok(Family::Svm),
            "mlp" => Ok(Family::Mlp),
            _ => Err(format!("unknown model family {s:?} (expected knn, dt, rf, svm or mlp)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    All,
}

impl MaxFeatures {
    fn count(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
        }
    }
}

/// RBF width: a fixed value or `"scale"`, i.e. `1 / (n_features * var(X))`
/// over all entries of the training matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gamma {
    Scale,
    Value(f64),
}

impl Serialize for Gamma {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Gamma::Scale => s.serialize_str("scale"),
            Gamma::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Gamma::Value(v)),
            Raw::Text(t) if t == "scale" => Ok(Gamma::Scale),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "gamma must be a number or \"scale\", found {t:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum Hyperparams {
    Knn {
        k: usize,
    },
    Dt {
        max_depth: Option<usize>,
        min_samples_split: usize,
    },
    Rf {
        n_trees: usize,
        max_features: MaxFeatures,
        max_depth: Option<usize>,
    },
    Svm {
        #[serde(rename = "C")]
        c: f64,
        gamma: Gamma,
        kernel: Kernel,
    },
    Mlp {
        hidden_sizes: Vec<usize>,
        learning_rate: f64,
        epochs: usize,
        batch_size: usize,
    },
}

impl Hyperparams {
    pub fn family(&self) -> Family {
        match self {
            Hyperparams::Knn { .. } => Family::Knn,
            Hyperparams::Dt { .. } => Family::Dt,
            Hyperparams::Rf { .. } => Family::Rf,
            Hyperparams::Svm { .. } => Family::Svm,
            Hyperparams::Mlp { .. } => Family::Mlp,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::Hyperparams(msg.into()));
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match self {
            Hyperparams::Knn { k } if *k == 0 => bad("k must be positive"),
            Hyperparams::Dt { max_depth: Some(0), .. }
            | Hyperparams::Rf { max_depth: Some(0), .. } => bad("max_depth must be positive"),
            Hyperparams::Dt { min_samples_split: 0, .. } => bad("min_samples_split must be positive"),
            Hyperparams::Rf { n_trees: 0, .. } => bad("n_trees must be positive"),
            Hyperparams::Svm { c, .. } if !positive(*c) => bad("C must be positive"),
            Hyperparams::Svm { gamma: Gamma::Value(g), .. } if !positive(*g) => {
                bad("gamma must be positive")
            }
            Hyperparams::Mlp { hidden_sizes, .. } if hidden_sizes.contains(&0) => {
                bad("hidden layer sizes must be positive")
            }
            Hyperparams::Mlp { learning_rate, .. } if !positive(*learning_rate) => {
                bad("learning_rate must be positive")
            }
            Hyperparams::Mlp { epochs: 0, .. } => bad("epochs must be positive"),
            Hyperparams::Mlp { batch_size: 0, .. } => bad("batch_size must be positive"),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let depth = |d: &Option<usize>| d.map_or("none".to_string(), |d| d.to_string());
        match self {
            Hyperparams::Knn { k } => write!(f, "k={k}"),
            Hyperparams::Dt {
                max_depth,
                min_samples_split,
            } => write!(f, "max_depth={} min_samples_split={min_samples_split}", depth(max_depth)),
            Hyperparams::Rf {
                n_trees,
                max_features,
                max_depth,
            } => write!(
                f,
                "n_trees={n_trees} max_features={} max_depth={}",
                serde_json::to_value(max_features).expect("enum serializes").as_str().unwrap_or("?"),
                depth(max_depth)
            ),
            Hyperparams::Svm { c, gamma, kernel } => {
                let g = match gamma {
                    Gamma::Scale => "scale".to_string(),
                    Gamma::Value(v) => v.to_string(),
                };
                write!(f, "kernel={} C={c} gamma={g}", kernel.name())
            }
            Hyperparams::Mlp {
                hidden_sizes,
                learning_rate,
                epochs,
                batch_size,
            } => write!(
                f,
                "hidden={hidden_sizes:?} lr={learning_rate} epochs={epochs} batch={batch_size}"
            ),
        }
    }
}

/// Default search grids.
pub fn default_grid(family: Family) -> Vec<Hyperparams> {
    let mut grid = Vec::new();
    match family {
        Family::Knn => {
            for k in [1, 3, 5, 7, 11, 15] {
                grid.push(Hyperparams::Knn { k });
            }
        }
        Family::Dt => {
            for max_depth in [Some(3), Some(5), Some(8), Some(12), None] {
                for min_samples_split in [2, 5, 10] {
                    grid.push(Hyperparams::Dt {
                        max_depth,
                        min_samples_split,
                    });
                }
            }
        }
        Family::Rf => {
            for n_trees in [50, 100, 200] {
                for max_features in [MaxFeatures::Sqrt, MaxFeatures::All] {
                    grid.push(Hyperparams::Rf {
                        n_trees,
                        max_features,
                        max_depth: None,
                    });
                }
            }
        }
        Family::Svm => {
            for c in [0.1, 1.0, 10.0, 100.0] {
                for gamma in [Gamma::Value(0.01), Gamma::Value(0.1), Gamma::Value(1.0), Gamma::Scale] {
                    for kernel in [Kernel::Rbf, Kernel::Linear] {
                        grid.push(Hyperparams::Svm { c, gamma, kernel });
                    }
                }
            }
        }
        Family::Mlp => {
            for hidden_sizes in [vec![16], vec![32], vec![64, 32]] {
                for learning_rate in [1e-2, 1e-3] {
                    grid.push(Hyperparams::Mlp {
                        hidden_sizes: hidden_sizes.clone(),
                        learning_rate,
                        epochs: 200,
                        batch_size: 32,
                    });
                }
            }
        }
    }
    grid
}

/// A labeled, already scaled feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

impl Samples {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<usize>, n_classes: usize) -> Result<Self, ModelError> {
        if x.len() != y.len() {
            return Err(ModelError::LengthMismatch {
                samples: x.len(),
                labels: y.len(),
            });
        }
        if let Some(&label) = y.iter().find(|&&l| l >= n_classes) {
            return Err(ModelError::LabelOutOfRange { label, n_classes });
        }
        if let Some(first) = x.first() {
            if let Some(row) = x.iter().find(|r| r.len() != first.len()) {
                return Err(ModelError::DimensionMismatch {
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        Ok(Samples { x, y, n_classes })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn select(&self, indices: &[usize]) -> Samples {
        Samples {
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            n_classes: self.n_classes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Params {
    Knn(knn::Knn),
    Tree(tree::Tree),
    Forest { trees: Vec<tree::Tree> },
    Svm(svm::Svm),
    Mlp(mlp::Mlp),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub family: Family,
    pub hyperparams: Hyperparams,
    pub n_features: usize,
    pub n_classes: usize,
    pub seed: u64,
    /// Standardization the inputs are expected to have been through.
    pub scaler: Option<Scaler>,
    pub params: Params,
}

impl TrainedModel {
    pub fn with_scaler(mut self, scaler: Scaler) -> Self {
        self.scaler = Some(scaler);
        self
    }

    fn check_dim(&self, v: &[f64]) -> Result<(), ModelError> {
        if v.len() == self.n_features {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch {
                expected: self.n_features,
                found: v.len(),
            })
        }
    }

    /// Per-class scores whose argmax is the prediction: vote counts for the
    /// neighbour and tree models, decision values for SVM, probabilities
    /// for MLP.
    pub fn scores(&self, v: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_dim(v)?;
        Ok(match &self.params {
            Params::Knn(m) => m.votes(v, self.n_classes),
            Params::Tree(t) => {
                let mut s = vec![0.0; self.n_classes];
                s[t.predict(v)] = 1.0;
                s
            }
            Params::Forest { trees } => {
                let mut s = vec![0.0; self.n_classes];
                for t in trees {
                    s[t.predict(v)] += 1.0;
                }
                s
            }
            Params::Svm(m) => m.decision_values(v),
            Params::Mlp(m) => m.probabilities(v),
        })
    }

    /// Expects `v` already standardized by the model's scaler.
    pub fn predict(&self, v: &[f64]) -> Result<OrderingLabel, ModelError> {
        Ok(OrderingLabel(argmax(&self.scores(v)?)))
    }

    /// Applies the stored scaler (if any) before predicting.
    pub fn predict_raw(&self, v: &[f64]) -> Result<OrderingLabel, ModelError> {
        match &self.scaler {
            Some(sc) => {
                let scaled = sc.transform(v).map_err(|_| ModelError::DimensionMismatch {
                    expected: sc.dim(),
                    found: v.len(),
                })?;
                self.predict(&scaled)
            }
            None => self.predict(v),
        }
    }

    pub fn predict_all(&self, x: &[Vec<f64>]) -> Result<Vec<usize>, ModelError> {
        x.iter().map(|v| self.predict(v).map(|l| l.0)).collect()
    }
}

/// Index of the largest score, lowest index on ties.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn train(hp: &Hyperparams, data: &Samples, seed: u64) -> Result<TrainedModel, ModelError> {
    hp.validate()?;
    if data.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let params = match hp {
        Hyperparams::Knn { k } => Params::Knn(knn::Knn::fit(data, *k)),
        Hyperparams::Dt {
            max_depth,
            min_samples_split,
        } => Params::Tree(tree::Tree::fit(
            data,
            &tree::TreeOptions {
                max_depth: *max_depth,
                min_samples_split: *min_samples_split,
                max_features: data.n_features(),
            },
            None,
        )),
        Hyperparams::Rf {
            n_trees,
            max_features,
            max_depth,
        } => Params::Forest {
            trees: tree::fit_forest(
                data,
                *n_trees,
                &tree::TreeOptions {
                    max_depth: *max_depth,
                    min_samples_split: 2,
                    max_features: max_features.count(data.n_features()),
                },
                seed,
            ),
        },
        Hyperparams::Svm { c, gamma, kernel } => Params::Svm(svm::Svm::fit(data, *c, *gamma, *kernel)),
        Hyperparams::Mlp {
            hidden_sizes,
            learning_rate,
            epochs,
            batch_size,
        } => Params::Mlp(mlp::Mlp::fit(
            data,
            hidden_sizes,
            *learning_rate,
            *epochs,
            *batch_size,
            seed,
        )),
    };
    Ok(TrainedModel {
        schema_version: SCHEMA_VERSION,
        family: hp.family(),
        hyperparams: hp.clone(),
        n_features: data.n_features(),
        n_classes: data.n_classes,
        seed,
        scaler: None,
        params,
    })
}

/// Fraction of correctly predicted samples.
pub fn accuracy(m: &TrainedModel, data: &Samples) -> Result<f64, ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyEvaluationSet);
    }
    let pred = m.predict_all(&data.x)?;
    Ok(fraction_correct(&pred, &data.y))
}

pub(crate) fn fraction_correct(pred: &[usize], truth: &[usize]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
}

/// Shuffled contiguous folds; the first `n % k` folds get one extra sample.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, ModelError> {
    if k < 2 || k > n {
        return Err(ModelError::InvalidFolds { k, n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeding::rng(seed));
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        let mut fold = idx[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(folds)
}

/// k-fold cross-validated accuracy. Every fold's model is trained with the
/// same `seed`.
pub fn cross_validate(
    hp: &Hyperparams,
    data: &Samples,
    k: usize,
    seed: u64,
) -> Result<CvResult, ModelError> {
    hp.validate()?;
    let folds = fold_assignment(data.len(), k, seed)?;
    let mut in_fold = vec![0usize; data.len()];
    for (f, fold) in folds.iter().enumerate() {
        for &i in fold {
            in_fold[i] = f;
        }
    }
    let mut fold_accuracies = Vec::with_capacity(k);
    for (f, fold) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| in_fold[i] != f).collect();
        let model = train(hp, &data.select(&train_idx), seed)?;
        fold_accuracies.push(accuracy(&model, &data.select(fold))?);
    }
    let mean = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(CvResult {
        fold_accuracies,
        mean,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub hyperparams: Hyperparams,
    pub cv: CvResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_index: usize,
    pub best: Hyperparams,
    pub table: Vec<GridEntry>,
}

/// Highest mean CV accuracy wins; ties go to the earliest grid entry.
pub fn grid_search(
    grid: &[Hyperparams],
    data: &Samples,
    k: usize,
    seed: u64,
) -> Result<GridResult, ModelError> {
    if grid.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    #[cfg(feature = "parallel")]
    let results: Vec<Result<CvResult, ModelError>> = {
        use rayon::prelude::*;
        grid.par_iter()
            .map(|hp| cross_validate(hp, data, k, seed))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<CvResult, ModelError>> = grid
        .iter()
        .map(|hp| cross_validate(hp, data, k, seed))
        .collect();
    let mut table = Vec::with_capacity(grid.len());
    for (hp, cv) in grid.iter().zip(results) {
        table.push(GridEntry {
            hyperparams: hp.clone(),
            cv: cv?,
        });
    }
    let mut best_index = 0;
    for (i, e) in table.iter().enumerate() {
        if e.cv.mean > table[best_index].cv.mean {
            best_index = i;
        }
    }
    Ok(GridResult {
        best_index,
        best: grid[best_index].clone(),
        table,
    })
}

pub fn model_to_json(m: &TrainedModel) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("model serializes");
    s.push('\n');
    s
}

pub fn model_from_json(text: &str) -> Result<TrainedModel, ModelError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ModelError::Corrupt(e.to_string()))?;
    let found = value.get("schema_version").and_then(serde_json::Value::as_u64);
    if found != Some(u64::from(SCHEMA_VERSION)) {
        return Err(ModelError::VersionMismatch {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    let m: TrainedModel =
        serde_json::from_value(value).map_err(|e| ModelError::Corrupt(e.to_string()))?;
    validate_params(&m)?;
    Ok(m)
}

fn validate_params(m: &TrainedModel) -> Result<(), ModelError> {
    let corrupt = |msg: &str| Err(ModelError::Corrupt(msg.into()));
    if m.family != m.hyperparams.family() {
        return corrupt("family tag disagrees with hyperparameters");
    }
    if m.n_classes == 0 {
        return corrupt("n_classes must be positive");
    }
    let ok = match (&m.params, m.family) {
        (Params::Knn(p), Family::Knn) => p.is_consistent(m.n_features, m.n_classes),
        (Params::Tree(t), Family::Dt) => t.is_consistent(m.n_features, m.n_classes),
        (Params::Forest { trees }, Family::Rf) => {
            !trees.is_empty() && trees.iter().all(|t| t.is_consistent(m.n_features, m.n_classes))
        }
        (Params::Svm(p), Family::Svm) => p.is_consistent(m.n_features, m.n_classes),
        (Params::Mlp(p), Family::Mlp) => p.is_consistent(m.n_features, m.n_classes),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        corrupt("parameters do not match the declared family or dimensions")
    }
}

pub fn save_model(m: &TrainedModel, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, model_to_json(m))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedModel, ModelError> {
    model_from_json(&std::fs::read_to_string(path)?)
}
