//! Projection-phase cost oracle for CAD variable orderings.
//!
//! Each projection step eliminates one variable from a set of polynomials
//! and returns, deduplicated and normalized to primitive parts with a
//! positive leading coefficient:
//!
//! * every coefficient of every input, viewed as a polynomial in the
//!   eliminated variable,
//! * the discriminant of every input of degree at least 2 in it,
//! * the resultant of every pair of inputs that both mention it.
//!
//! Constants are discarded. The cost of an ordering is the number of
//! polynomials and their sum of total degrees (sotd) over the `n - 1`
//! projection levels, eliminating the first listed variable first.
//! Resultants are Sylvester determinants evaluated exactly by fraction-free
//! (Bareiss) elimination.

mod dense;
mod zpoly;

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polysys::{label_to_ordering, num_orderings, OrderingLabel, PolySystem, Polynomial};
use zpoly::ZPoly;

/// Largest variable count `rank_orderings` accepts.
pub const MAX_RANKED_VARS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("polynomial has degree {degree} in x{var}, need at least {needed}")]
    DegreeTooLow { var: usize, degree: u32, needed: u32 },
    #[error("variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },
    #[error("ranking {nvars} variables is not supported (at most {MAX_RANKED_VARS})")]
    TooManyVariables { nvars: usize },
    #[error("label {label} out of range for {nvars} variables")]
    LabelOutOfRange { label: usize, nvars: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelCost {
    pub num_polys: u64,
    pub sotd: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostReport {
    pub per_level: Vec<LevelCost>,
    pub total_polys: u64,
    pub total_sotd: u64,
}

impl CostReport {
    fn from_levels(per_level: Vec<LevelCost>) -> Self {
        CostReport {
            total_polys: per_level.iter().map(|l| l.num_polys).sum(),
            total_sotd: per_level.iter().map(|l| l.sotd).sum(),
            per_level,
        }
    }

    /// Ranking key: sotd, then polynomial count.
    pub fn key(&self) -> (u64, u64) {
        (self.total_sotd, self.total_polys)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingCostTable {
    pub costs: Vec<CostReport>,
    pub argmin_label: OrderingLabel,
    pub tie: bool,
}

fn check_var(p: &Polynomial, v: usize) -> Result<(), CostError> {
    if v >= p.nvars() {
        return Err(CostError::IndexOutOfRange {
            index: v,
            nvars: p.nvars(),
        });
    }
    Ok(())
}

/// Resultant of `p` and `q` with respect to `x{v+1}`, computed exactly.
pub fn resultant(p: &Polynomial, q: &Polynomial, v: usize) -> Result<Polynomial, CostError> {
    check_var(p, v)?;
    check_var(q, v)?;
    let (zp, dp) = ZPoly::from_polynomial(p);
    let (zq, dq) = ZPoly::from_polynomial(q);
    let (m, n) = (zp.degree_in(v), zq.degree_in(v));
    for deg in [m, n] {
        if deg == 0 {
            return Err(CostError::DegreeTooLow {
                var: v,
                degree: 0,
                needed: 1,
            });
        }
    }
    // res(zp/dp, zq/dq) = res(zp, zq) / (dp^n * dq^m)
    let r = zresultant(&zp, &zq, v).to_polynomial();
    let denom: BigInt = Pow::pow(&dp, n) * Pow::pow(&dq, m);
    Ok(r.scale(&BigRational::new(BigInt::one(), denom)))
}

/// `resultant(p, ∂p/∂x{v+1}, v)` without sign or leading-coefficient normalization.
pub fn discriminant(p: &Polynomial, v: usize) -> Result<Polynomial, CostError> {
    check_var(p, v)?;
    let degree = p.degree_in(v).expect("checked");
    if degree < 2 {
        return Err(CostError::DegreeTooLow {
            var: v,
            degree,
            needed: 2,
        });
    }
    resultant(p, &p.derivative(v), v)
}

/// Determinant of a square matrix of polynomials via Bareiss elimination.
///
/// Panics if the matrix is not square or entries disagree on `nvars`.
pub fn determinant(rows: &[Vec<Polynomial>]) -> Polynomial {
    let n = rows.len();
    let nvars = rows.first().and_then(|r| r.first()).map_or(1, Polynomial::nvars);
    let mut scale = BigInt::one();
    let mut matrix = Vec::with_capacity(n);
    for row in rows {
        assert_eq!(row.len(), n, "matrix is not square");
        let converted: Vec<(ZPoly, BigInt)> = row.iter().map(ZPoly::from_polynomial).collect();
        let lcm = converted
            .iter()
            .fold(BigInt::one(), |acc, (_, d)| num_integer::Integer::lcm(&acc, d));
        matrix.push(
            converted
                .into_iter()
                .map(|(z, d)| z.scale(&(&lcm / d)))
                .collect::<Vec<_>>(),
        );
        scale *= lcm;
    }
    bareiss(matrix, nvars)
        .to_polynomial()
        .scale(&BigRational::new(BigInt::one(), scale))
}

fn bareiss(mut m: Vec<Vec<ZPoly>>, nvars: usize) -> ZPoly {
    let mask = m.iter().flatten().fold(0, |acc, e| acc | e.variable_mask());
    if mask.count_ones() <= 1 {
        let v = mask.trailing_zeros() as usize % nvars.max(1);
        let dense = m
            .iter()
            .map(|row| row.iter().map(|e| e.to_dense(v)).map(trim_dense).collect())
            .collect();
        return ZPoly::from_dense(nvars, v, &dense::bareiss(dense));
    }
    let n = m.len();
    if n == 0 {
        return ZPoly::constant(nvars, BigInt::one());
    }
    let mut negate = false;
    let mut prev = ZPoly::constant(nvars, BigInt::one());
    for k in 0..n - 1 {
        let Some(pivot) = (k..n).find(|&i| !m[i][k].is_zero()) else {
            return ZPoly::zero(nvars);
        };
        if pivot != k {
            m.swap(pivot, k);
            negate = !negate;
        }
        let (top, rest) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in rest.iter_mut() {
            for j in k + 1..n {
                let t = row[j].mul(&pivot_row[k]).sub(&row[k].mul(&pivot_row[j]));
                row[j] = t.exact_div(&prev);
            }
            row[k] = ZPoly::zero(nvars);
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if negate {
        det.neg()
    } else {
        det
    }
}

fn trim_dense(mut p: dense::Dense) -> dense::Dense {
    while p.last().is_some_and(num_traits::Zero::is_zero) {
        p.pop();
    }
    p
}

/// Sylvester matrix of `p` (degree m) and `q` (degree n) in `x{v+1}`:
/// n shifted rows of p's coefficients followed by m shifted rows of q's,
/// leading coefficients first.
fn sylvester(p: &ZPoly, q: &ZPoly, v: usize, nvars: usize) -> Vec<Vec<ZPoly>> {
    let pc: Vec<ZPoly> = p.coefficients_in(v).into_iter().rev().collect();
    let qc: Vec<ZPoly> = q.coefficients_in(v).into_iter().rev().collect();
    let (m, n) = (pc.len() - 1, qc.len() - 1);
    let size = m + n;
    let mut rows = vec![vec![ZPoly::zero(nvars); size]; size];
    for i in 0..n {
        for (j, c) in pc.iter().enumerate() {
            rows[i][i + j] = c.clone();
        }
    }
    for i in 0..m {
        for (j, c) in qc.iter().enumerate() {
            rows[n + i][i + j] = c.clone();
        }
    }
    rows
}

fn zresultant(p: &ZPoly, q: &ZPoly, v: usize) -> ZPoly {
    let nvars = p.nvars();
    bareiss(sylvester(p, q, v, nvars), nvars)
}

fn zdiscriminant(p: &ZPoly, v: usize) -> ZPoly {
    zresultant(p, &p.derivative(v), v)
}

fn insert_normalized(out: &mut BTreeSet<ZPoly>, p: ZPoly) {
    if !p.is_zero() && !p.is_constant() {
        out.insert(p.primitive_normalized());
    }
}

fn project(polys: &[ZPoly], v: usize) -> Vec<ZPoly> {
    let mut out = BTreeSet::new();
    for p in polys {
        for c in p.coefficients_in(v) {
            insert_normalized(&mut out, c);
        }
        if p.degree_in(v) >= 2 {
            insert_normalized(&mut out, zdiscriminant(p, v));
        }
    }
    let movers: Vec<&ZPoly> = polys.iter().filter(|p| p.mentions(v)).collect();
    for (i, p) in movers.iter().enumerate() {
        for q in &movers[i + 1..] {
            insert_normalized(&mut out, zresultant(p, q, v));
        }
    }
    out.into_iter().collect()
}

fn normalized_inputs<'a>(polys: impl IntoIterator<Item = &'a Polynomial>) -> Vec<ZPoly> {
    let mut set = BTreeSet::new();
    for p in polys {
        let z = ZPoly::from_polynomial(p).0;
        if !z.is_zero() {
            set.insert(z.primitive_normalized());
        }
    }
    set.into_iter().collect()
}

fn level_cost(polys: &[ZPoly]) -> LevelCost {
    LevelCost {
        num_polys: polys.len() as u64,
        sotd: polys.iter().map(|p| u64::from(p.total_degree())).sum(),
    }
}

/// One elimination step on a set of polynomials.
pub fn projection_step(polys: &[Polynomial], v: usize) -> Result<Vec<Polynomial>, CostError> {
    for p in polys {
        check_var(p, v)?;
    }
    Ok(project(&normalized_inputs(polys), v)
        .iter()
        .map(ZPoly::to_polynomial)
        .collect())
}

/// Cost of eliminating variables in the ordering named by `label`.
pub fn projection_cost(s: &PolySystem, label: OrderingLabel) -> Result<CostReport, CostError> {
    let ordering = label_to_ordering(label, s.nvars()).map_err(|_| CostError::LabelOutOfRange {
        label: label.0,
        nvars: s.nvars(),
    })?;
    let mut polys = normalized_inputs(s.polys());
    let mut levels = Vec::with_capacity(s.nvars().saturating_sub(1));
    for &v in &ordering[..s.nvars() - 1] {
        polys = project(&polys, v);
        levels.push(level_cost(&polys));
    }
    Ok(CostReport::from_levels(levels))
}

// Walks the prefix tree of orderings so that shared prefixes are projected once.
fn rank_subtree(
    polys: &[ZPoly],
    prefix: &mut Vec<usize>,
    levels: &mut Vec<LevelCost>,
    nvars: usize,
    out: &mut HashMap<Vec<usize>, CostReport>,
) {
    if prefix.len() + 1 >= nvars {
        let mut ordering = prefix.clone();
        ordering.extend((0..nvars).filter(|v| !prefix.contains(v)));
        out.insert(ordering, CostReport::from_levels(levels.clone()));
        return;
    }
    for v in 0..nvars {
        if prefix.contains(&v) {
            continue;
        }
        let next = project(polys, v);
        prefix.push(v);
        levels.push(level_cost(&next));
        rank_subtree(&next, prefix, levels, nvars, out);
        levels.pop();
        prefix.pop();
    }
}

fn subtree_for_first(polys: &[ZPoly], first: usize, nvars: usize) -> HashMap<Vec<usize>, CostReport> {
    let mut out = HashMap::new();
    let mut prefix = vec![first];
    let next = project(polys, first);
    let mut levels = vec![level_cost(&next)];
    rank_subtree(&next, &mut prefix, &mut levels, nvars, &mut out);
    out
}

/// Costs of all `n!` orderings with the cheapest one selected.
///
/// Ties on `(total_sotd, total_polys)` go to the lowest label; `tie`
/// records whether more than one ordering attains the minimum.
pub fn rank_orderings(s: &PolySystem) -> Result<OrderingCostTable, CostError> {
    let nvars = s.nvars();
    if nvars > MAX_RANKED_VARS {
        return Err(CostError::TooManyVariables { nvars });
    }
    let polys = normalized_inputs(s.polys());
    let mut by_ordering: HashMap<Vec<usize>, CostReport> = HashMap::new();
    if nvars == 1 {
        by_ordering.insert(vec![0], CostReport::default());
    } else {
        #[cfg(feature = "parallel")]
        let parts: Vec<_> = {
            use rayon::prelude::*;
            (0..nvars)
                .into_par_iter()
                .map(|first| subtree_for_first(&polys, first, nvars))
                .collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<_> = (0..nvars)
            .map(|first| subtree_for_first(&polys, first, nvars))
            .collect();
        for part in parts {
            by_ordering.extend(part);
        }
    }
    let costs: Vec<CostReport> = (0..num_orderings(nvars))
        .map(|l| {
            let ordering = label_to_ordering(OrderingLabel(l), nvars).expect("label in range");
            by_ordering.remove(&ordering).expect("every ordering ranked")
        })
        .collect();
    Ok(table_from_costs(costs))
}

pub(crate) fn table_from_costs(costs: Vec<CostReport>) -> OrderingCostTable {
    let best = costs
        .iter()
        .map(CostReport::key)
        .min()
        .expect("at least one ordering");
    let argmin = costs.iter().position(|c| c.key() == best).expect("minimum exists");
    let tie = costs.iter().filter(|c| c.key() == best).count() > 1;
    OrderingCostTable {
        costs,
        argmin_label: OrderingLabel(argmin),
        tie,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::{parse_system, permute_label, VarPermutation};

    fn poly(nvars: usize, text: &str) -> Polynomial {
        parse_system(&format!("vars {nvars}; {text}")).unwrap().polys()[0].clone()
    }

    fn strs(ps: &[Polynomial]) -> Vec<String> {
        ps.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn resultant_of_linear_forms() {
        // res(a*x1 + b, c*x1 + d) = a*d - b*c with a..d carried by x2..x5
        let p = poly(5, "x2*x1 + x3");
        let q = poly(5, "x4*x1 + x5");
        assert_eq!(resultant(&p, &q, 0).unwrap(), poly(5, "x2*x5 - x3*x4"));
        let p = poly(1, "3*x1 + 2");
        let q = poly(1, "5*x1 - 7");
        assert_eq!(resultant(&p, &q, 0).unwrap(), Polynomial::from_int(1, -31));
    }

    #[test]
    fn resultant_examples() {
        let r = resultant(&poly(2, "x1^2 - 1"), &poly(2, "x1 - 1"), 0).unwrap();
        assert!(r.is_zero());
        let r = resultant(&poly(2, "x1^2 + x2"), &poly(2, "2*x1"), 0).unwrap();
        assert_eq!(r, poly(2, "4*x2"));
        assert!(!r.mentions(0));
    }

    #[test]
    fn resultant_with_rational_coefficients() {
        // res(x/2 - 1, x - 2) = 0 since both vanish at 2; res(x/2, x - 2) = 1/2*(-2) - 0 = -1
        let r = resultant(&poly(1, "1/2*x1 - 1"), &poly(1, "x1 - 2"), 0).unwrap();
        assert!(r.is_zero());
        let r = resultant(&poly(1, "1/2*x1"), &poly(1, "x1 - 2"), 0).unwrap();
        assert_eq!(r, Polynomial::from_int(1, -1));
    }

    #[test]
    fn resultant_requires_positive_degree() {
        let err = resultant(&poly(2, "x2 + 1"), &poly(2, "x1"), 0).unwrap_err();
        assert!(matches!(err, CostError::DegreeTooLow { .. }));
        assert!(matches!(
            resultant(&poly(2, "x1"), &poly(2, "x1"), 2),
            Err(CostError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn discriminant_examples() {
        // x1^2 + b*x1 + c with b = x2, c = x3
        let d = discriminant(&poly(3, "x1^2 + x2*x1 + x3"), 0).unwrap();
        assert_eq!(d, poly(3, "-x2^2 + 4*x3"));
        assert!(discriminant(&poly(1, "x1^2"), 0).unwrap().is_zero());
        assert_eq!(discriminant(&poly(2, "x1^2 + x2"), 0).unwrap(), poly(2, "4*x2"));
        assert!(matches!(
            discriminant(&poly(2, "x1 + x2"), 0),
            Err(CostError::DegreeTooLow { degree: 1, needed: 2, .. })
        ));
    }

    #[test]
    fn projection_step_examples() {
        let out = projection_step(&[poly(2, "x1^2 + x2")], 0).unwrap();
        assert_eq!(strs(&out), vec!["x2"]);
        let out = projection_step(&[poly(2, "x2 + 1")], 0).unwrap();
        assert_eq!(strs(&out), vec!["x2 + 1"]);
        let out = projection_step(&[poly(2, "x1 - x2"), poly(2, "x1 + x2")], 0).unwrap();
        assert_eq!(strs(&out), vec!["x2"]);
    }

    #[test]
    fn projection_drops_eliminated_variable() {
        let s = parse_system("vars 3; x1^2*x2 - x3 + 4; x1*x3^2 - x2; x1^3 + x2*x3").unwrap();
        for v in 0..3 {
            for r in projection_step(s.polys(), v).unwrap() {
                assert_eq!(r.degree_in(v).unwrap(), 0);
            }
        }
    }

    #[test]
    fn projection_cost_examples() {
        let uni = parse_system("vars 1; x1^3 - 2").unwrap();
        let c = projection_cost(&uni, OrderingLabel(0)).unwrap();
        assert!(c.per_level.is_empty());
        assert_eq!((c.total_polys, c.total_sotd), (0, 0));

        let s = parse_system("vars 2; x1^2 + x2").unwrap();
        let c = projection_cost(&s, OrderingLabel(0)).unwrap();
        assert_eq!(c.per_level, vec![LevelCost { num_polys: 1, sotd: 1 }]);
        assert!(projection_cost(&s, OrderingLabel(2)).is_err());
    }

    #[test]
    fn mixed_term_system_cost_is_equivariant() {
        let s = parse_system(
            "vars 3; 68*x1^2 - 12*x3*x2 + 46*x3 - 126; -54*x2*x1 + 11*x1 + 92*x2 - 42*x3*x2*x1 - 35",
        )
        .unwrap();
        for sigma in VarPermutation::all(3) {
            let t = s.apply_permutation(&sigma).unwrap();
            for l in 0..6 {
                let l = OrderingLabel(l);
                assert_eq!(
                    projection_cost(&t, permute_label(l, &sigma)).unwrap(),
                    projection_cost(&s, l).unwrap()
                );
            }
        }
    }

    #[test]
    fn symmetric_system_ties_at_label_zero() {
        let s = parse_system("vars 3; x1 + x2 + x3").unwrap();
        let t = rank_orderings(&s).unwrap();
        assert!(t.costs.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(t.argmin_label, OrderingLabel(0));
        assert!(t.tie);
    }

    #[test]
    fn high_degree_variable_changes_cost() {
        let s = parse_system("vars 3; x1^4*x2 + 1; x3 + 1").unwrap();
        let t = rank_orderings(&s).unwrap();
        // (x1, x2, x3) against (x3, x1, x2)
        assert_ne!(t.costs[0], t.costs[4]);
        for l in 0..6 {
            assert_eq!(t.costs[l], projection_cost(&s, OrderingLabel(l)).unwrap());
        }
    }

    #[test]
    fn rank_rejects_many_variables() {
        let s = parse_system("vars 6; x1*x6").unwrap();
        assert_eq!(
            rank_orderings(&s).unwrap_err(),
            CostError::TooManyVariables { nvars: 6 }
        );
    }

    #[test]
    fn determinant_small_cases() {
        let m = vec![
            vec![poly(1, "x1"), Polynomial::from_int(1, 2)],
            vec![Polynomial::from_int(1, 3), poly(1, "x1")],
        ];
        assert_eq!(determinant(&m), poly(1, "x1^2 - 6"));
        // zero first pivot forces a row swap
        let m = vec![
            vec![Polynomial::zero(1), Polynomial::from_int(1, 1)],
            vec![Polynomial::from_int(1, 1), Polynomial::zero(1)],
        ];
        assert_eq!(determinant(&m), Polynomial::from_int(1, -1));
        assert_eq!(determinant(&[]), Polynomial::from_int(1, 1));
    }

    #[test]
    fn cost_report_json_fields() {
        let c = CostReport::from_levels(vec![LevelCost { num_polys: 2, sotd: 3 }]);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(
            json,
            r#"{"per_level":[{"num_polys":2,"sotd":3}],"total_polys":2,"total_sotd":3}"#
        );
    }
}
