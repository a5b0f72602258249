//! Integer-coefficient polynomials used inside resultant computations.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::polysys::{Monomial, Polynomial};

/// Terms sorted by descending graded lexicographic monomial, no zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct ZPoly {
    terms: Vec<(Monomial, BigInt)>,
    nvars: usize,
}

impl ZPoly {
    pub fn zero(nvars: usize) -> Self {
        ZPoly {
            terms: Vec::new(),
            nvars,
        }
    }

    pub fn constant(nvars: usize, c: BigInt) -> Self {
        if c.is_zero() {
            return Self::zero(nvars);
        }
        ZPoly {
            terms: vec![(Monomial::one(nvars), c)],
            nvars,
        }
    }

    fn from_map(nvars: usize, map: BTreeMap<Monomial, BigInt>) -> Self {
        ZPoly {
            terms: map.into_iter().rev().filter(|(_, c)| !c.is_zero()).collect(),
            nvars,
        }
    }

    /// Returns `(z, d)` with `p = z / d`, `d > 0` the lcm of the denominators.
    pub fn from_polynomial(p: &Polynomial) -> (ZPoly, BigInt) {
        let d = p
            .terms()
            .fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
        let terms = p
            .terms()
            .map(|(m, c)| (m.clone(), c.numer() * (&d / c.denom())))
            .collect();
        (
            ZPoly {
                terms,
                nvars: p.nvars(),
            },
            d,
        )
    }

    pub fn to_polynomial(&self) -> Polynomial {
        Polynomial::from_terms(
            self.nvars,
            self.terms
                .iter()
                .map(|(m, c)| (m.clone(), BigRational::from_integer(c.clone()))),
        )
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.is_one())
    }

    pub fn total_degree(&self) -> u32 {
        // Leading term has maximal total degree under a graded order.
        self.terms.first().map_or(0, |(m, _)| m.total_degree())
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree_in(v)).max().unwrap_or(0)
    }

    /// Bit `v` set iff `x{v+1}` occurs.
    pub fn variable_mask(&self) -> u64 {
        self.terms.iter().fold(0, |acc, (m, _)| {
            m.exponents()
                .iter()
                .enumerate()
                .fold(acc, |a, (v, &e)| if e > 0 { a | 1 << v } else { a })
        })
    }

    /// Dense coefficients in `x{v+1}`, index = power; requires no other variable.
    pub fn to_dense(&self, v: usize) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.degree_in(v) as usize + 1];
        for (m, c) in &self.terms {
            out[m.degree_in(v) as usize] = c.clone();
        }
        out
    }

    pub fn from_dense(nvars: usize, v: usize, coeffs: &[BigInt]) -> ZPoly {
        ZPoly {
            terms: coeffs
                .iter()
                .enumerate()
                .rev()
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, c)| (Monomial::var(nvars, v, e as u32), c.clone()))
                .collect(),
            nvars,
        }
    }

    pub fn mentions(&self, v: usize) -> bool {
        self.terms.iter().any(|(m, _)| m.degree_in(v) > 0)
    }

    // Lowering the exponent of one variable uniformly keeps grlex order among
    // the affected terms, so neither helper below needs to re-sort.
    pub fn coefficients_in(&self, v: usize) -> Vec<ZPoly> {
        let deg = self.degree_in(v) as usize;
        let mut buckets: Vec<Vec<(Monomial, BigInt)>> = vec![Vec::new(); deg + 1];
        for (m, c) in &self.terms {
            buckets[m.degree_in(v) as usize].push((m.with_exponent(v, 0), c.clone()));
        }
        buckets
            .into_iter()
            .map(|terms| ZPoly {
                terms,
                nvars: self.nvars,
            })
            .collect()
    }

    pub fn derivative(&self, v: usize) -> ZPoly {
        let terms: Vec<(Monomial, BigInt)> = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree_in(v) > 0)
            .map(|(m, c)| {
                let e = m.degree_in(v);
                (m.with_exponent(v, e - 1), c * BigInt::from(e))
            })
            .collect();
        ZPoly {
            terms,
            nvars: self.nvars,
        }
    }

    pub fn neg(&self) -> ZPoly {
        ZPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
            nvars: self.nvars,
        }
    }

    pub fn sub(&self, other: &ZPoly) -> ZPoly {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (ma, ca) = &self.terms[i];
            let (mb, cb) = &other.terms[j];
            match ma.cmp(mb) {
                std::cmp::Ordering::Greater => {
                    out.push((ma.clone(), ca.clone()));
                    i += 1;
                }
                std::cmp::Ordering::Less => {
                    out.push((mb.clone(), -cb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = ca - cb;
                    if !c.is_zero() {
                        out.push((ma.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(self.terms[i..].iter().cloned());
        out.extend(other.terms[j..].iter().map(|(m, c)| (m.clone(), -c)));
        ZPoly {
            terms: out,
            nvars: self.nvars,
        }
    }

    pub fn mul(&self, other: &ZPoly) -> ZPoly {
        if self.is_zero() || other.is_zero() {
            return ZPoly::zero(self.nvars);
        }
        if self.terms.len() == 1 && self.terms[0].0.is_one() {
            return other.scale(&self.terms[0].1);
        }
        if other.terms.len() == 1 && other.terms[0].0.is_one() {
            return self.scale(&other.terms[0].1);
        }
        let mut map: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *map.entry(ma.mul(mb)).or_insert_with(BigInt::zero) += ca * cb;
            }
        }
        ZPoly::from_map(self.nvars, map)
    }

    pub fn scale(&self, c: &BigInt) -> ZPoly {
        if c.is_zero() {
            return ZPoly::zero(self.nvars);
        }
        ZPoly {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
            nvars: self.nvars,
        }
    }

    /// `self / d` where `d` is known to divide `self` exactly.
    pub fn exact_div(&self, d: &ZPoly) -> ZPoly {
        assert!(!d.is_zero(), "division by zero polynomial");
        if d.is_constant() {
            let c = &d.terms[0].1;
            return ZPoly {
                terms: self.terms.iter().map(|(m, a)| (m.clone(), a / c)).collect(),
                nvars: self.nvars,
            };
        }
        let (lm, lc) = &d.terms[0];
        let mut rem: BTreeMap<Monomial, BigInt> = self.terms.iter().cloned().collect();
        let mut quot = Vec::new();
        while let Some((m, c)) = rem.pop_last() {
            let qm = m
                .checked_div(lm)
                .expect("inexact polynomial division in Bareiss elimination");
            let (qc, r) = c.div_rem(lc);
            debug_assert!(r.is_zero(), "inexact coefficient division");
            for (dm, dc) in &d.terms[1..] {
                match rem.entry(qm.mul(dm)) {
                    Entry::Occupied(mut e) => {
                        *e.get_mut() -= &qc * dc;
                        if e.get().is_zero() {
                            e.remove();
                        }
                    }
                    Entry::Vacant(e) => {
                        e.insert(-(&qc * dc));
                    }
                }
            }
            quot.push((qm, qc));
        }
        ZPoly {
            terms: quot,
            nvars: self.nvars,
        }
    }

    /// Divides out the integer content and makes the leading coefficient positive.
    pub fn primitive_normalized(&self) -> ZPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut g = BigInt::zero();
        for (_, c) in &self.terms {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        if self.terms[0].1.is_negative() {
            g = -g;
        }
        if g.is_one() {
            return self.clone();
        }
        ZPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c / &g)).collect(),
            nvars: self.nvars,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::parse_system;

    fn z(text: &str) -> ZPoly {
        let s = parse_system(&format!("vars 3; {text}")).unwrap();
        ZPoly::from_polynomial(&s.polys()[0]).0
    }

    #[test]
    fn arithmetic_matches_rational_polynomials() {
        let a = z("3*x1^2*x2 - x3 + 4");
        let b = z("x1 - 2*x2*x3 + 1");
        let prod = a.mul(&b);
        let expected = &a.to_polynomial() * &b.to_polynomial();
        assert_eq!(prod.to_polynomial(), expected);
        assert_eq!(prod.exact_div(&b), a);
        assert_eq!(prod.exact_div(&a), b);
        assert_eq!(a.sub(&b).to_polynomial(), &a.to_polynomial() - &b.to_polynomial());
    }

    #[test]
    fn denominators_are_cleared() {
        let s = parse_system("vars 2; 1/2*x1 + 2/3").unwrap();
        let (zp, d) = ZPoly::from_polynomial(&s.polys()[0]);
        assert_eq!(d, BigInt::from(6));
        assert_eq!(zp.to_polynomial().to_string(), "3*x1 + 4");
    }

    #[test]
    fn primitive_part_sign_and_content() {
        assert_eq!(z("-6*x1 + 4*x2").primitive_normalized(), z("3*x1 - 2*x2"));
        assert_eq!(z("5").primitive_normalized(), z("1"));
    }

    #[test]
    fn coefficients_keep_order() {
        let cs = z("x1*x2^2 + x1^2 + x3^3").coefficients_in(0);
        assert_eq!(cs[0], z("x3^3"));
        assert_eq!(cs[1], z("x2^2"));
        assert_eq!(cs[2], z("1"));
    }
}
