//! Orbit augmentation under variable permutations and class-balance
//! diagnostics.
//!
//! Renaming variables in a system and in an ordering leaves the projection
//! cost unchanged, so each labeled root yields six labeled records, one per
//! element of S3.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError, ProblemRecord};
use crate::features::{extract_features, permute_features, FeatureError};
use crate::polysys::{num_orderings, permute_label, OrderingLabel, PolyError, VarPermutation};

const ORBIT_VARS: usize = 3;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("record {id:?} is not an orbit root (perm is not the identity)")]
    NotRoot { id: String },
    #[error("record {id:?} has {nvars} variables; orbits are defined for 3")]
    UnsupportedArity { id: String, nvars: usize },
    #[error("class {label} has no records; imbalance ratio undefined")]
    EmptyClass { label: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Per-label record counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub counts: Vec<usize>,
    pub total: usize,
}

impl ClassDistribution {
    pub fn from_labels(labels: impl IntoIterator<Item = usize>, nclasses: usize) -> Self {
        let mut counts = vec![0; nclasses];
        for l in labels {
            counts[l] += 1;
        }
        let total = counts.iter().sum();
        ClassDistribution { counts, total }
    }

    /// `label,count` rows under a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,count\n");
        for (l, c) in self.counts.iter().enumerate() {
            writeln!(out, "{l},{c}").expect("write to string");
        }
        out
    }

    /// Counts, total and imbalance ratio (`null` when some class is empty).
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "counts": self.counts,
            "total": self.total,
            "imbalance_ratio": imbalance_ratio(self).ok(),
        })
    }
}

/// The six variants of a root record, in lexicographic order of the
/// permutation. Member `k` has id `"<root>#k"` except the identity member,
/// which is the root itself.
///
/// Timings are reindexed so that the entry for `permute_label(l, σ)` is the
/// root's entry for `l`. Label and tie flag are re-derived from the new
/// timings; without timings the label is carried by `permute_label`.
pub fn orbit(r: &ProblemRecord) -> Result<Vec<ProblemRecord>, AugmentError> {
    if r.nvars() != ORBIT_VARS {
        return Err(AugmentError::UnsupportedArity {
            id: r.id.clone(),
            nvars: r.nvars(),
        });
    }
    if !r.is_root() {
        return Err(AugmentError::NotRoot { id: r.id.clone() });
    }
    VarPermutation::all(ORBIT_VARS)
        .into_iter()
        .enumerate()
        .map(|(k, sigma)| {
            if sigma.is_identity() {
                Ok(r.clone())
            } else {
                orbit_member(r, &sigma, k)
            }
        })
        .collect()
}

fn orbit_member(
    r: &ProblemRecord,
    sigma: &VarPermutation,
    k: usize,
) -> Result<ProblemRecord, AugmentError> {
    let system = r
        .system
        .as_ref()
        .map(|s| s.apply_permutation(sigma))
        .transpose()?;
    let features = match &system {
        Some(s) => extract_features(s),
        None => permute_features(&r.features, sigma)?,
    };
    let mut m = ProblemRecord {
        id: format!("{}#{k}", r.id),
        orbit_id: r.orbit_id.clone(),
        perm: sigma.clone(),
        system,
        features,
        timings: None,
        label: r.label.map(|l| permute_label(l, sigma)),
        tie: r.tie,
    };
    if let Some(ts) = &r.timings {
        let mut moved = vec![0.0; ts.len()];
        for (l, &t) in ts.iter().enumerate() {
            moved[permute_label(OrderingLabel(l), sigma).0] = t;
        }
        m.set_timings(moved)?;
    }
    Ok(m)
}

/// Concatenation of the orbits of every record, root order first, without
/// removing coincident members of symmetric systems.
pub fn augment_dataset(d: &Dataset) -> Result<Dataset, AugmentError> {
    let mut records = Vec::with_capacity(6 * d.len());
    for r in &d.records {
        records.extend(orbit(r)?);
    }
    let mut provenance = d.provenance.clone();
    provenance.insert("augmented".into(), "S3 orbits".into());
    Ok(Dataset::new(records, provenance)?)
}

/// Counts of labeled records per class; unlabeled records are skipped.
pub fn class_distribution(d: &Dataset) -> ClassDistribution {
    let nclasses = d.nvars().map_or(num_orderings(ORBIT_VARS), num_orderings);
    ClassDistribution::from_labels(d.records.iter().filter_map(|r| r.label.map(|l| l.0)), nclasses)
}

/// Largest class count over smallest.
pub fn imbalance_ratio(dist: &ClassDistribution) -> Result<f64, AugmentError> {
    match dist.counts.iter().position(|&c| c == 0) {
        Some(label) => Err(AugmentError::EmptyClass { label }),
        None if dist.counts.is_empty() => Err(AugmentError::EmptyClass { label: 0 }),
        None => {
            let max = dist.counts.iter().max().expect("non-empty");
            let min = dist.counts.iter().min().expect("non-empty");
            Ok(*max as f64 / *min as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, label_from_timings, GeneratorConfig};
    use crate::polysys::parse_system;
    use std::collections::BTreeMap;

    fn labeled_root(text: &str, timings: Vec<f64>) -> ProblemRecord {
        let mut r = ProblemRecord::root("r", parse_system(text).unwrap());
        r.set_timings(timings).unwrap();
        r
    }

    #[test]
    fn orbit_structure() {
        let r = labeled_root("vars 3; x1^2*x2 + x3", vec![5.0, 4.0, 9.9, 7.1, 8.0, 6.0]);
        let members = orbit(&r).unwrap();
        assert_eq!(members.len(), 6);
        assert_eq!(members[0], r);
        let mut labels: Vec<usize> = members.iter().map(|m| m.label.unwrap().0).collect();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 1, 2, 3, 4, 5]);
        for (k, m) in members.iter().enumerate().skip(1) {
            assert_eq!(m.id, format!("r#{k}"));
            assert_eq!(m.orbit_id, "r");
            assert_eq!(m.perm.index(), k);
            let (l, tie) = label_from_timings(m.timings.as_ref().unwrap()).unwrap();
            assert_eq!((Some(l), tie), (m.label, m.tie));
            let mut a = m.timings.clone().unwrap();
            let mut b = r.timings.clone().unwrap();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn swap_moves_label_zero_to_two() {
        // x1 <-> x2 is the third permutation in lexicographic order.
        let r = labeled_root("vars 3; x1 + x2*x3", vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let m = &orbit(&r).unwrap()[2];
        assert_eq!(m.perm.image(), &[1, 0, 2]);
        assert_eq!(m.label.unwrap().0, 2);
        assert_eq!(m.timings.as_ref().unwrap()[2], 1.0);
    }

    #[test]
    fn featureless_members_use_permuted_features() {
        let mut r = labeled_root("vars 3; x1^3*x2 - x3 + 1; x2^2", vec![3.0, 1.0, 2.0, 4.0, 5.0, 6.0]);
        let with_systems = orbit(&r).unwrap();
        r.system = None;
        let without = orbit(&r).unwrap();
        for (a, b) in with_systems.iter().zip(&without) {
            assert_eq!(a.features, b.features);
            assert_eq!(a.label, b.label);
        }
    }

    #[test]
    fn rejects_non_roots_and_other_arity() {
        let r = labeled_root("vars 3; x1 + x2 + x3", vec![1.0; 6]);
        let member = orbit(&r).unwrap()[3].clone();
        assert!(matches!(orbit(&member), Err(AugmentError::NotRoot { .. })));
        let mut two = ProblemRecord::root("t", parse_system("vars 2; x1 + x2").unwrap());
        two.set_timings(vec![1.0, 2.0]).unwrap();
        assert!(matches!(orbit(&two), Err(AugmentError::UnsupportedArity { .. })));
    }

    #[test]
    fn augmented_tie_free_roots_are_balanced() {
        let cfg = GeneratorConfig {
            count: 10,
            exclude_ties: true,
            ..GeneratorConfig::default()
        };
        let d = generate_synthetic(&cfg, 4).unwrap();
        let a = augment_dataset(&d).unwrap();
        assert_eq!(a.len(), 60);
        let dist = class_distribution(&a);
        assert_eq!(dist.counts, vec![10; 6]);
        assert_eq!(dist.total, 60);
        assert_eq!(imbalance_ratio(&dist).unwrap(), 1.0);
    }

    #[test]
    fn distribution_reports() {
        let empty = Dataset::new(Vec::new(), BTreeMap::new()).unwrap();
        assert_eq!(class_distribution(&empty).counts, vec![0; 6]);

        let dist = ClassDistribution::from_labels([0, 1, 2, 3, 4, 5, 5], 6);
        assert_eq!(imbalance_ratio(&dist).unwrap(), 2.0);
        assert_eq!(dist.to_csv(), "label,count\n0,1\n1,1\n2,1\n3,1\n4,1\n5,2\n");
        assert_eq!(dist.summary_json()["imbalance_ratio"], 2.0);

        let skewed = ClassDistribution {
            counts: vec![580, 900, 1100, 800, 858, 2657],
            total: 6895,
        };
        assert!((imbalance_ratio(&skewed).unwrap() - 2657.0 / 580.0).abs() < 1e-12);

        let gap = ClassDistribution::from_labels([0, 1, 2], 6);
        assert!(matches!(imbalance_ratio(&gap), Err(AugmentError::EmptyClass { label: 3 })));
        assert!(gap.summary_json()["imbalance_ratio"].is_null());
    }
}
