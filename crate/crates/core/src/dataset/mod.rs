//! Problem records, labeling, splits and subsampling.
//!
//! A [`ProblemRecord`] carries a system (optional once featurized), its
//! feature vector, per-ordering timings (seconds or proxy cost units, with
//! `+inf` for timeouts) and the label of the cheapest ordering. Records
//! obtained from one another by a variable permutation share an
//! `orbit_id`; `perm` is the permutation relative to the orbit root.

mod generate;
mod io;

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cadcost::CostError;
use crate::features::{FeatureError, FeatureVector};
use crate::polysys::{OrderingLabel, PolyError, PolySystem, VarPermutation};
use crate::seeding;

pub use generate::{generate_synthetic, GeneratorConfig};
pub use io::{load_csv, load_dataset, load_jsonl, save_csv, save_dataset, save_jsonl};
pub(crate) use io::parse_float;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset is empty")]
    Empty,
    #[error("need at least {needed} records, found {found}")]
    TooFewRecords { needed: usize, found: usize },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("records disagree on the number of variables ({expected} vs {found}) at {id:?}")]
    MixedArity {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("test fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("every ordering timed out")]
    AllTimeouts,
    #[error("timings must be non-negative numbers or +inf, got {0:?}")]
    InvalidTimings(Vec<f64>),
    #[error("record {id:?} has no label")]
    Unlabeled { id: String },
    #[error("record {id:?} carries no polynomial system")]
    MissingSystem { id: String },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("line {line}: {msg}")]
    Jsonl { line: usize, msg: String },
    #[error("class {label} needs {needed} records but only {available} are available")]
    InsufficientClass {
        label: usize,
        needed: usize,
        available: usize,
    },
    #[error("invalid class proportions: {0}")]
    InvalidProportions(String),
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("could not generate record {index} within {attempts} attempts")]
    GenerationFailed { index: usize, attempts: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemRecord {
    pub id: String,
    pub orbit_id: String,
    pub perm: VarPermutation,
    pub system: Option<PolySystem>,
    pub features: FeatureVector,
    pub timings: Option<Vec<f64>>,
    pub label: Option<OrderingLabel>,
    pub tie: bool,
}

impl ProblemRecord {
    /// A fresh orbit root: identity permutation, features computed, no labels.
    pub fn root(id: impl Into<String>, system: PolySystem) -> Self {
        let id = id.into();
        ProblemRecord {
            orbit_id: id.clone(),
            perm: VarPermutation::identity(system.nvars()),
            features: crate::features::extract_features(&system),
            system: Some(system),
            timings: None,
            label: None,
            tie: false,
            id,
        }
    }

    pub fn nvars(&self) -> usize {
        self.perm.len()
    }

    pub fn is_root(&self) -> bool {
        self.perm.is_identity()
    }

    /// Sets timings and derives label and tie flag from them.
    pub fn set_timings(&mut self, timings: Vec<f64>) -> Result<(), DatasetError> {
        let (label, tie) = label_from_timings(&timings)?;
        self.timings = Some(timings);
        self.label = Some(label);
        self.tie = tie;
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<ProblemRecord>,
    /// Source, seeds and generator settings.
    pub provenance: BTreeMap<String, String>,
}

impl Dataset {
    pub fn new(
        records: Vec<ProblemRecord>,
        provenance: BTreeMap<String, String>,
    ) -> Result<Self, DatasetError> {
        let d = Dataset {
            records,
            provenance,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut ids = HashSet::new();
        let nvars = self.records.first().map(ProblemRecord::nvars);
        for r in &self.records {
            if !ids.insert(r.id.as_str()) {
                return Err(DatasetError::DuplicateId(r.id.clone()));
            }
            if Some(r.nvars()) != nvars {
                return Err(DatasetError::MixedArity {
                    id: r.id.clone(),
                    expected: nvars.unwrap_or(0),
                    found: r.nvars(),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn nvars(&self) -> Option<usize> {
        self.records.first().map(ProblemRecord::nvars)
    }

    pub fn labels(&self) -> Result<Vec<usize>, DatasetError> {
        self.records
            .iter()
            .map(|r| {
                r.label.map(|l| l.0).ok_or_else(|| DatasetError::Unlabeled {
                    id: r.id.clone(),
                })
            })
            .collect()
    }

    pub fn feature_rows(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.features.0.clone()).collect()
    }

    fn subset(&self, indices: &[usize], part: &str) -> Dataset {
        let mut provenance = self.provenance.clone();
        provenance.insert("part".into(), part.into());
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            provenance,
        }
    }
}

/// Cheapest ordering by timing, ties going to the lowest label.
pub fn label_from_timings(timings: &[f64]) -> Result<(OrderingLabel, bool), DatasetError> {
    if timings.is_empty() || timings.iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(DatasetError::InvalidTimings(timings.to_vec()));
    }
    let best = timings.iter().copied().fold(f64::INFINITY, f64::min);
    if best.is_infinite() {
        return Err(DatasetError::AllTimeouts);
    }
    let label = timings.iter().position(|&t| t == best).expect("minimum present");
    let tie = timings.iter().filter(|&&t| t == best).count() > 1;
    Ok((OrderingLabel(label), tie))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    Random,
    /// Whole orbits go to one side.
    Orbit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub mode: SplitMode,
}

impl SplitSpec {
    /// `floor(n * test_fraction)`, guarded against representation error
    /// just below an integer.
    pub fn test_size(&self, n: usize) -> usize {
        (n as f64 * self.test_fraction + 1e-9).floor() as usize
    }
}

/// Partitions `d` into `(train, test)`, preserving record order within each side.
pub fn split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), DatasetError> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(spec.test_fraction));
    }
    if d.is_empty() {
        return Err(DatasetError::Empty);
    }
    if d.len() < 2 {
        return Err(DatasetError::TooFewRecords {
            needed: 2,
            found: d.len(),
        });
    }
    let target = spec.test_size(d.len());
    let mut rng = seeding::rng(spec.seed);
    let mut is_test = vec![false; d.len()];
    match spec.mode {
        SplitMode::Random => {
            let mut idx: Vec<usize> = (0..d.len()).collect();
            idx.shuffle(&mut rng);
            for &i in &idx[..target] {
                is_test[i] = true;
            }
        }
        SplitMode::Orbit => {
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut slot: HashMap<&str, usize> = HashMap::new();
            for (i, r) in d.records.iter().enumerate() {
                let g = *slot.entry(r.orbit_id.as_str()).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[g].push(i);
            }
            groups.shuffle(&mut rng);
            let mut taken = 0usize;
            for g in &groups {
                if (taken + g.len()).abs_diff(target) < taken.abs_diff(target) {
                    taken += g.len();
                    for &i in g {
                        is_test[i] = true;
                    }
                }
            }
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..d.len()).partition(|&i| is_test[i]);
    Ok((d.subset(&train, "train"), d.subset(&test, "test")))
}

/// Fraction of test records whose orbit also has a member in `train`.
pub fn orbit_leakage(train: &Dataset, test: &Dataset) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let seen: HashSet<&str> = train.records.iter().map(|r| r.orbit_id.as_str()).collect();
    let leaked = test
        .records
        .iter()
        .filter(|r| seen.contains(r.orbit_id.as_str()))
        .count();
    leaked as f64 / test.len() as f64
}

/// Per-class counts for `size` records by largest-remainder rounding;
/// equal remainders favour the lower label.
pub fn largest_remainder(proportions: &[f64], size: usize) -> Vec<usize> {
    let quotas: Vec<f64> = proportions.iter().map(|p| p * size as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).expect("finite quotas").then(a.cmp(&b))
    });
    for &c in order.iter().take(size.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    counts
}

/// Stratified sample of `size` records whose class counts follow
/// `proportions` (one entry per label).
pub fn bias_subsample(
    d: &Dataset,
    proportions: &[f64],
    size: usize,
    seed: u64,
) -> Result<Dataset, DatasetError> {
    let nclasses = d.nvars().map(crate::polysys::num_orderings).unwrap_or(proportions.len());
    if proportions.len() != nclasses {
        return Err(DatasetError::InvalidProportions(format!(
            "expected {nclasses} entries, found {}",
            proportions.len()
        )));
    }
    if proportions.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(DatasetError::InvalidProportions("entries must be non-negative".into()));
    }
    let sum: f64 = proportions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(DatasetError::InvalidProportions(format!("entries sum to {sum}, not 1")));
    }
    let labels = d.labels()?;
    let counts = largest_remainder(proportions, size);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); nclasses];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = seeding::rng(seed);
    let mut chosen = Vec::with_capacity(size);
    for (label, (pool, &need)) in by_class.iter_mut().zip(&counts).enumerate() {
        if pool.len() < need {
            return Err(DatasetError::InsufficientClass {
                label,
                needed: need,
                available: pool.len(),
            });
        }
        pool.shuffle(&mut rng);
        chosen.extend_from_slice(&pool[..need]);
    }
    chosen.sort_unstable();
    let mut out = d.subset(&chosen, "bias_subsample");
    out.provenance.remove("part");
    out.provenance.insert("subsample_seed".into(), seed.to_string());
    out.provenance.insert(
        "subsample_proportions".into(),
        serde_json::to_string(proportions).expect("finite floats"),
    );
    Ok(out)
}

/// The largest sample size for which every class can meet its quota.
pub fn max_subsample_size(d: &Dataset, proportions: &[f64]) -> Result<usize, DatasetError> {
    let labels = d.labels()?;
    let mut avail = vec![0usize; proportions.len()];
    for l in labels {
        if let Some(a) = avail.get_mut(l) {
            *a += 1;
        }
    }
    let mut size = proportions
        .iter()
        .zip(&avail)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, a)| (*a as f64 / p).floor() as usize)
        .min()
        .unwrap_or(0);
    while size > 0
        && largest_remainder(proportions, size)
            .iter()
            .zip(&avail)
            .any(|(need, a)| need > a)
    {
        size -= 1;
    }
    Ok(size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::parse_system;

    fn toy(n: usize, orbit_size: usize) -> Dataset {
        let records = (0..n)
            .map(|i| {
                let s = parse_system("vars 3; x1 + x2*x3").unwrap();
                let mut r = ProblemRecord::root(format!("r{i}"), s);
                r.orbit_id = format!("o{}", i / orbit_size);
                r.label = Some(OrderingLabel(i % 6));
                r
            })
            .collect();
        Dataset::new(records, BTreeMap::new()).unwrap()
    }

    #[test]
    fn label_examples() {
        assert_eq!(
            label_from_timings(&[5.0, 4.0, 9.9, 7.1, 8.0, 6.0]).unwrap(),
            (OrderingLabel(1), false)
        );
        assert_eq!(label_from_timings(&[3.0; 6]).unwrap(), (OrderingLabel(0), true));
        let inf = f64::INFINITY;
        assert_eq!(
            label_from_timings(&[inf, inf, 2.0, inf, inf, inf]).unwrap(),
            (OrderingLabel(2), false)
        );
        assert!(matches!(label_from_timings(&[inf; 6]), Err(DatasetError::AllTimeouts)));
        assert!(matches!(
            label_from_timings(&[1.0, f64::NAN]),
            Err(DatasetError::InvalidTimings(_))
        ));
        assert!(matches!(
            label_from_timings(&[-1.0, 2.0]),
            Err(DatasetError::InvalidTimings(_))
        ));
    }

    #[test]
    fn split_sizes_use_floor() {
        let spec = SplitSpec {
            test_fraction: 0.2,
            seed: 1,
            mode: SplitMode::Random,
        };
        let (train, test) = split(&toy(10, 1), &spec).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!(spec.test_size(6895), 1379);
        assert_eq!(spec.test_size(41370), 8274);
        assert_eq!(
            SplitSpec {
                test_fraction: 0.29,
                ..spec
            }
            .test_size(100),
            29
        );
    }

    #[test]
    fn split_errors() {
        let spec = SplitSpec {
            test_fraction: 0.2,
            seed: 1,
            mode: SplitMode::Random,
        };
        assert!(matches!(split(&Dataset::default(), &spec), Err(DatasetError::Empty)));
        assert!(matches!(
            split(&toy(1, 1), &spec),
            Err(DatasetError::TooFewRecords { .. })
        ));
        let bad = SplitSpec {
            test_fraction: 1.0,
            ..spec
        };
        assert!(matches!(split(&toy(5, 1), &bad), Err(DatasetError::InvalidFraction(_))));
    }

    #[test]
    fn orbit_split_keeps_orbits_whole() {
        let d = toy(120, 6);
        let spec = SplitSpec {
            test_fraction: 0.2,
            seed: 4,
            mode: SplitMode::Orbit,
        };
        let (train, test) = split(&d, &spec).unwrap();
        assert_eq!(orbit_leakage(&train, &test), 0.0);
        assert_eq!(test.len(), 24);
        assert_eq!(train.len() + test.len(), 120);
    }

    #[test]
    fn split_is_deterministic() {
        let d = toy(50, 1);
        let spec = SplitSpec {
            test_fraction: 0.3,
            seed: 11,
            mode: SplitMode::Random,
        };
        assert_eq!(split(&d, &spec).unwrap(), split(&d, &spec).unwrap());
    }

    #[test]
    fn largest_remainder_rounding() {
        let p = [580.0, 900.0, 1100.0, 800.0, 858.0, 2657.0];
        let total: f64 = p.iter().sum();
        let props: Vec<f64> = p.iter().map(|x| x / total).collect();
        assert_eq!(largest_remainder(&props, 6895), vec![580, 900, 1100, 800, 858, 2657]);
        assert_eq!(largest_remainder(&[1.0 / 6.0; 6], 6), vec![1; 6]);
        assert_eq!(largest_remainder(&[1.0 / 3.0; 3], 5), vec![2, 2, 1]);
    }

    #[test]
    fn subsample_counts_and_errors() {
        let d = toy(60, 1);
        let out = bias_subsample(&d, &[1.0 / 6.0; 6], 6, 3).unwrap();
        let mut labels = out.labels().unwrap();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 1, 2, 3, 4, 5]);
        let err = bias_subsample(&d, &[0.5, 0.5, 0.0, 0.0, 0.0, 0.0], 40, 3).unwrap_err();
        assert!(matches!(
            err,
            DatasetError::InsufficientClass {
                label: 0,
                needed: 20,
                available: 10
            }
        ));
        assert!(bias_subsample(&d, &[0.5; 6], 6, 3).is_err());
        assert!(bias_subsample(&d, &[0.2; 5], 6, 3).is_err());
        assert_eq!(max_subsample_size(&d, &[0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap(), 20);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut d = toy(3, 1);
        d.records[2].id = "r0".into();
        assert!(matches!(d.validate(), Err(DatasetError::DuplicateId(_))));
    }
}
