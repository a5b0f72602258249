//! Per-system feature vectors and standardization.
//!
//! For `n` variables the vector has `2 + 3n` entries:
//! `[num_polys, max_total_degree, maxdeg_x1..maxdeg_xn,
//!   polyprop_x1..polyprop_xn, monoprop_x1..monoprop_xn]`.
//!
//! `polyprop_xi` is the fraction of polynomials in which `xi` has positive
//! degree; `monoprop_xi` is the fraction of all terms (constants included)
//! in which `xi` has a positive exponent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polysys::{PolySystem, VarPermutation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("cannot fit a scaler on zero rows")]
    NoRows,
    #[error("expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Variable count implied by the length `2 + 3n`.
    pub fn nvars(&self) -> Option<usize> {
        let k = self.0.len();
        (k >= 5 && (k - 2) % 3 == 0).then(|| (k - 2) / 3)
    }
}

pub fn num_features(nvars: usize) -> usize {
    2 + 3 * nvars
}

pub fn extract_features(s: &PolySystem) -> FeatureVector {
    let n = s.nvars();
    let polys = s.polys();
    let num_polys = polys.len() as f64;
    let mut out = Vec::with_capacity(num_features(n));
    out.push(num_polys);
    out.push(polys.iter().map(|p| p.total_degree()).max().unwrap_or(0) as f64);

    let mut maxdeg = vec![0u32; n];
    let mut in_polys = vec![0usize; n];
    let mut in_terms = vec![0usize; n];
    let mut total_terms = 0usize;
    for p in polys {
        let mut seen = vec![false; n];
        for (m, _) in p.terms() {
            total_terms += 1;
            for (v, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    in_terms[v] += 1;
                    seen[v] = true;
                    maxdeg[v] = maxdeg[v].max(e);
                }
            }
        }
        for (v, hit) in seen.into_iter().enumerate() {
            in_polys[v] += usize::from(hit);
        }
    }
    out.extend(maxdeg.iter().map(|&d| d as f64));
    out.extend(in_polys.iter().map(|&c| c as f64 / num_polys));
    out.extend(in_terms.iter().map(|&c| c as f64 / total_terms as f64));
    FeatureVector(out)
}

/// Image of a feature vector under a variable renaming: the per-variable
/// blocks are permuted by `sigma`, the first two entries are unchanged.
pub fn permute_features(
    f: &FeatureVector,
    sigma: &VarPermutation,
) -> Result<FeatureVector, FeatureError> {
    let n = sigma.len();
    if f.len() != num_features(n) {
        return Err(FeatureError::DimensionMismatch {
            expected: num_features(n),
            found: f.len(),
        });
    }
    let mut out = f.0.clone();
    for block in 0..3 {
        let base = 2 + block * n;
        for i in 0..n {
            out[base + sigma.apply(i)] = f.0[base + i];
        }
    }
    Ok(FeatureVector(out))
}

/// Per-column standardization with population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn identity(dim: usize) -> Self {
        Scaler {
            means: vec![0.0; dim],
            stds: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// `(v - mean) / std`, dividing by 1 where a column had zero spread.
    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if v.len() != self.dim() {
            return Err(FeatureError::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(v.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / if *s == 0.0 { 1.0 } else { *s })
            .collect())
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, FeatureError> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

pub fn fit_scaler(rows: &[Vec<f64>]) -> Result<Scaler, FeatureError> {
    let first = rows.first().ok_or(FeatureError::NoRows)?;
    let dim = first.len();
    let mut means = vec![0.0; dim];
    for r in rows {
        if r.len() != dim {
            return Err(FeatureError::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        for (m, x) in means.iter_mut().zip(r) {
            *m += x;
        }
    }
    let count = rows.len() as f64;
    means.iter_mut().for_each(|m| *m /= count);
    let mut vars = vec![0.0; dim];
    for r in rows {
        for ((v, x), m) in vars.iter_mut().zip(r).zip(&means) {
            *v += (x - m) * (x - m);
        }
    }
    let stds = vars.into_iter().map(|v| (v / count).sqrt()).collect();
    Ok(Scaler { means, stds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::parse_system;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_counted_features() {
        let s = parse_system("vars 3; x1^2*x2 - 1; x1 + x3").unwrap();
        assert_eq!(
            extract_features(&s).0,
            vec![2.0, 3.0, 2.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.25, 0.25]
        );
        let s = parse_system("vars 3; x1").unwrap();
        assert_eq!(
            extract_features(&s).0,
            vec![1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn permuted_system_permutes_blocks() {
        let s = parse_system("vars 3; x1^3*x2 + x3 - 2; x2^2 + 1").unwrap();
        let sigma = VarPermutation::new(vec![2, 0, 1]).unwrap();
        let lhs = extract_features(&s.apply_permutation(&sigma).unwrap());
        let rhs = permute_features(&extract_features(&s), &sigma).unwrap();
        assert_eq!(lhs, rhs);
        assert!(permute_features(&lhs, &VarPermutation::identity(2)).is_err());
    }

    #[test]
    fn scaler_on_single_column() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let sc = fit_scaler(&rows).unwrap();
        assert_abs_diff_eq!(sc.means[0], 2.0);
        assert_abs_diff_eq!(sc.stds[0], (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        let t: Vec<f64> = rows.iter().map(|r| sc.transform(r).unwrap()[0]).collect();
        let r = 1.5f64.sqrt();
        assert_abs_diff_eq!(t[0], -r, epsilon = 1e-12);
        assert_abs_diff_eq!(t[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t[2], r, epsilon = 1e-12);
    }

    #[test]
    fn constant_column_and_single_row() {
        let sc = fit_scaler(&[vec![5.0], vec![5.0], vec![5.0]]).unwrap();
        assert_eq!((sc.means[0], sc.stds[0]), (5.0, 0.0));
        assert_eq!(sc.transform(&[5.0]).unwrap(), vec![0.0]);
        let row = vec![3.0, -1.0, 7.5];
        let sc = fit_scaler(std::slice::from_ref(&row)).unwrap();
        assert_eq!(sc.transform(&row).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn identity_scaler_and_errors() {
        let v = vec![1.0, -2.0, 3.5];
        assert_eq!(Scaler::identity(3).transform(&v).unwrap(), v);
        assert!(Scaler::identity(2).transform(&v).is_err());
        assert_eq!(fit_scaler(&[]), Err(FeatureError::NoRows));
        assert!(fit_scaler(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn standardized_columns_have_unit_variance() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64, (i * i % 7) as f64, 3.0])
            .collect();
        let sc = fit_scaler(&rows).unwrap();
        let t = sc.transform_all(&rows).unwrap();
        for col in 0..2 {
            let mean = t.iter().map(|r| r[col]).sum::<f64>() / 40.0;
            let var = t.iter().map(|r| (r[col] - mean).powi(2)).sum::<f64>() / 40.0;
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(var.sqrt(), 1.0, epsilon = 1e-9);
        }
        assert!(t.iter().all(|r| r[2] == 0.0));
    }
}
