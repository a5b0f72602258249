//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! A [`Polynomial`] is a map from [`Monomial`] to a non-zero
//! [`BigRational`]. Terms are kept in graded lexicographic order, so two
//! equal polynomials always have the same representation and the same
//! printed form. A [`PolySystem`] is a non-empty list of non-zero
//! polynomials sharing a variable count; relational operators are not
//! modelled, only the polynomial set matters for ordering cost.

mod parse;
mod perm;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;
use thiserror::Error;

pub use parse::parse_system;
pub use perm::{
    label_to_ordering, num_orderings, ordering_to_label, permute_label, OrderingLabel,
    VarPermutation,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("polynomial #{number} of the system is zero")]
    ZeroPolynomial { number: usize },
    #[error("variable x{var} at line {line}, column {col} exceeds the declared {nvars} variables")]
    VariableOutOfRange {
        var: usize,
        nvars: usize,
        line: usize,
        col: usize,
    },
    #[error("variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },
    #[error("expected {expected} variables, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("not a permutation: {0:?}")]
    NotAPermutation(Vec<usize>),
    #[error("label {label} out of range for {nvars} variables")]
    LabelOutOfRange { label: usize, nvars: usize },
    #[error("a system needs at least one polynomial")]
    EmptySystem,
    #[error("the number of variables must be positive")]
    NoVariables,
}

/// Exponent vector; index `i` holds the exponent of `x{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(SmallVec<[u32; 4]>);

impl Monomial {
    pub fn new(exponents: &[u32]) -> Self {
        Monomial(SmallVec::from_slice(exponents))
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(SmallVec::from_elem(0, nvars))
    }

    /// `x{index+1}^exp`
    pub fn var(nvars: usize, index: usize, exp: u32) -> Self {
        let mut m = Self::one(nvars);
        m.0[index] = exp;
        m
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn degree_in(&self, index: usize) -> u32 {
        self.0[index]
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self / other` when `other` divides `self`.
    pub fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = SmallVec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(Monomial(out))
    }

    pub fn with_exponent(&self, index: usize, exp: u32) -> Monomial {
        let mut m = self.clone();
        m.0[index] = exp;
        m
    }

    /// The exponent of `x{σ(i)+1}` in the result equals the exponent of
    /// `x{i+1}` in `self`.
    pub fn permuted(&self, sigma: &VarPermutation) -> Monomial {
        let mut out: SmallVec<[u32; 4]> = SmallVec::from_elem(0, self.0.len());
        for (i, &e) in self.0.iter().enumerate() {
            out[sigma.apply(i)] = e;
        }
        Monomial(out)
    }
}

/// Graded lexicographic: total degree first, then `x1` dominates `x2` and so on.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Self::from_terms(nvars, [(Monomial::one(nvars), c)])
    }

    pub fn from_int(nvars: usize, c: i64) -> Self {
        Self::constant(nvars, BigRational::from_integer(BigInt::from(c)))
    }

    /// The polynomial `x{index+1}`.
    pub fn var(nvars: usize, index: usize) -> Self {
        Self::from_terms(nvars, [(Monomial::var(nvars, index, 1), BigRational::one())])
    }

    /// Canonicalizes a raw term list: duplicate monomials are summed and
    /// zero coefficients dropped.
    ///
    /// Panics if a monomial has the wrong number of variables.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, BigRational)>,
    {
        let mut map: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars, "monomial arity does not match polynomial");
            if c.is_zero() {
                continue;
            }
            match map.entry(m) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(c);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    *e.get_mut() += c;
                    if e.get().is_zero() {
                        e.remove();
                    }
                }
            }
        }
        Polynomial { nvars, terms: map }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in descending graded lexicographic order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> + '_ {
        self.terms.iter().rev()
    }

    pub fn coefficient(&self, m: &Monomial) -> Option<&BigRational> {
        self.terms.get(m)
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    /// Maximum total degree over the terms; constants (and zero) have degree 0.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::total_degree).max().unwrap_or(0)
    }

    /// Largest exponent of `x{v+1}`; 0 if the variable is absent.
    pub fn degree_in(&self, v: usize) -> Result<u32, PolyError> {
        if v >= self.nvars {
            return Err(PolyError::IndexOutOfRange {
                index: v,
                nvars: self.nvars,
            });
        }
        Ok(self.terms.keys().map(|m| m.degree_in(v)).max().unwrap_or(0))
    }

    pub fn mentions(&self, v: usize) -> bool {
        self.terms.keys().any(|m| m.degree_in(v) > 0)
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    /// Partial derivative with respect to `x{v+1}`.
    pub fn derivative(&self, v: usize) -> Polynomial {
        Polynomial::from_terms(
            self.nvars,
            self.terms.iter().filter(|(m, _)| m.degree_in(v) > 0).map(|(m, c)| {
                let e = m.degree_in(v);
                (m.with_exponent(v, e - 1), c * BigRational::from_integer(BigInt::from(e)))
            }),
        )
    }

    /// Coefficients of `self` viewed as a polynomial in `x{v+1}`; entry `k`
    /// multiplies `x{v+1}^k` and never mentions `x{v+1}`.
    pub fn coefficients_in(&self, v: usize) -> Vec<Polynomial> {
        let deg = self.terms.keys().map(|m| m.degree_in(v)).max().unwrap_or(0) as usize;
        let mut buckets: Vec<Vec<(Monomial, BigRational)>> = vec![Vec::new(); deg + 1];
        for (m, c) in &self.terms {
            buckets[m.degree_in(v) as usize].push((m.with_exponent(v, 0), c.clone()));
        }
        buckets
            .into_iter()
            .map(|ts| Polynomial::from_terms(self.nvars, ts))
            .collect()
    }

    pub fn permuted(&self, sigma: &VarPermutation) -> Result<Polynomial, PolyError> {
        if sigma.len() != self.nvars {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars,
                found: sigma.len(),
            });
        }
        Ok(Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.permuted(sigma), c.clone()))
                .collect(),
        })
    }

    /// Evaluates at a rational point.
    pub fn eval(&self, point: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(m.exponents()) {
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            acc += t;
        }
        acc
    }

    fn combine(&self, other: &Polynomial, negate: bool) -> Polynomial {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let rhs = other.terms.iter().map(|(m, c)| {
            let c = if negate { -c.clone() } else { c.clone() };
            (m.clone(), c)
        });
        Polynomial::from_terms(
            self.nvars,
            self.terms.iter().map(|(m, c)| (m.clone(), c.clone())).chain(rhs),
        )
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, false)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, true)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                terms.push((ma.mul(mb), ca * cb));
            }
        }
        Polynomial::from_terms(self.nvars, terms)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, m: &Monomial) -> fmt::Result {
    let mut first = true;
    for (i, &e) in m.exponents().iter().enumerate() {
        if e == 0 {
            continue;
        }
        if !first {
            f.write_str("*")?;
        }
        first = false;
        write!(f, "x{}", i + 1)?;
        if e > 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

/// Prints in the system grammar, e.g. `68*x1^2 - 12*x2*x3 + 46*x3 - 126`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = c.abs();
            if m.is_one() {
                write!(f, "{a}")?;
            } else {
                if !a.is_one() {
                    write!(f, "{a}*")?;
                }
                write_monomial(f, m)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolySystem {
    nvars: usize,
    polys: Vec<Polynomial>,
}

impl PolySystem {
    pub fn new(nvars: usize, polys: Vec<Polynomial>) -> Result<Self, PolyError> {
        if nvars == 0 {
            return Err(PolyError::NoVariables);
        }
        if polys.is_empty() {
            return Err(PolyError::EmptySystem);
        }
        for (k, p) in polys.iter().enumerate() {
            if p.nvars() != nvars {
                return Err(PolyError::ArityMismatch {
                    expected: nvars,
                    found: p.nvars(),
                });
            }
            if p.is_zero() {
                return Err(PolyError::ZeroPolynomial { number: k + 1 });
            }
        }
        Ok(PolySystem { nvars, polys })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// Renames variables: `x{i+1}` becomes `x{σ(i)+1}` in every polynomial.
    pub fn apply_permutation(&self, sigma: &VarPermutation) -> Result<PolySystem, PolyError> {
        let polys = self
            .polys
            .iter()
            .map(|p| p.permuted(sigma))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolySystem {
            nvars: self.nvars,
            polys,
        })
    }

    /// Whether every variable has positive degree in some polynomial.
    pub fn uses_all_variables(&self) -> bool {
        (0..self.nvars).all(|v| self.polys.iter().any(|p| p.mentions(v)))
    }
}

impl fmt::Display for PolySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vars {}", self.nvars)?;
        for p in &self.polys {
            write!(f, "; {p}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for PolySystem {
    type Err = PolyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_system(s)
    }
}
