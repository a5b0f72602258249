//! Synthetic three-variable problem generator.
//!
//! Every system is labeled by the projection cost oracle: the "timing" of
//! an ordering is its total sotd. Each record draws from its own random
//! stream derived from `(seed, index)`, so output does not depend on
//! generation order.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, ProblemRecord};
use crate::cadcost::rank_orderings;
use crate::polysys::{Monomial, PolySystem, Polynomial};
use crate::seeding;

const NVARS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub count: usize,
    pub min_polys: usize,
    pub max_polys: usize,
    pub min_terms: usize,
    pub max_terms: usize,
    /// Exponent bound per variable.
    pub max_degree: [u32; NVARS],
    /// Probability that a variable occurs in a generated term.
    pub var_presence: [f64; NVARS],
    /// Coefficients are drawn from `[-bound, bound] \ {0}`.
    pub coeff_bound: i64,
    /// Resample systems whose cheapest ordering is not unique.
    pub exclude_ties: bool,
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            count: 100,
            min_polys: 1,
            max_polys: 3,
            min_terms: 1,
            max_terms: 4,
            max_degree: [2, 2, 2],
            var_presence: [0.5, 0.5, 0.5],
            coeff_bound: 99,
            exclude_ties: false,
            max_attempts: 1000,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |msg: &str| Err(DatasetError::InvalidConfig(msg.into()));
        if !(1 <= self.min_polys && self.min_polys <= self.max_polys && self.max_polys <= 4) {
            return bad("polynomials per system must satisfy 1 <= min <= max <= 4");
        }
        if !(1 <= self.min_terms && self.min_terms <= self.max_terms && self.max_terms <= 6) {
            return bad("terms per polynomial must satisfy 1 <= min <= max <= 6");
        }
        if self.max_degree.iter().any(|&d| d == 0 || d > 4) {
            return bad("per-variable degree bounds must lie in 1..=4");
        }
        if self
            .var_presence
            .iter()
            .any(|p| !(p.is_finite() && *p > 0.0 && *p <= 1.0))
        {
            return bad("variable presence probabilities must lie in (0, 1]");
        }
        if !(1..=99).contains(&self.coeff_bound) {
            return bad("coefficient bound must lie in 1..=99");
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive");
        }
        Ok(())
    }
}

fn random_term<R: Rng>(cfg: &GeneratorConfig, rng: &mut R) -> (Monomial, BigRational) {
    let exps: Vec<u32> = (0..NVARS)
        .map(|v| {
            if rng.gen_bool(cfg.var_presence[v]) {
                rng.gen_range(1..=cfg.max_degree[v])
            } else {
                0
            }
        })
        .collect();
    let mut c = rng.gen_range(-cfg.coeff_bound..cfg.coeff_bound);
    if c >= 0 {
        c += 1;
    }
    (Monomial::new(&exps), BigRational::from_integer(BigInt::from(c)))
}

fn random_system<R: Rng>(cfg: &GeneratorConfig, rng: &mut R) -> PolySystem {
    loop {
        let npolys = rng.gen_range(cfg.min_polys..=cfg.max_polys);
        let mut polys = Vec::with_capacity(npolys);
        while polys.len() < npolys {
            let nterms = rng.gen_range(cfg.min_terms..=cfg.max_terms);
            let p = Polynomial::from_terms(NVARS, (0..nterms).map(|_| random_term(cfg, rng)));
            if !p.is_zero() {
                polys.push(p);
            }
        }
        let s = PolySystem::new(NVARS, polys).expect("non-empty system of non-zero polynomials");
        if s.uses_all_variables() {
            return s;
        }
    }
}

fn generate_one(cfg: &GeneratorConfig, seed: u64, index: usize) -> Result<ProblemRecord, DatasetError> {
    let mut rng = seeding::stream_rng(seed, index as u64);
    for _ in 0..cfg.max_attempts {
        let system = random_system(cfg, &mut rng);
        let table = rank_orderings(&system)?;
        let timings: Vec<f64> = table.costs.iter().map(|c| c.total_sotd as f64).collect();
        let mut record = ProblemRecord::root(format!("p{index:06}"), system);
        record.set_timings(timings)?;
        if cfg.exclude_ties && record.tie {
            continue;
        }
        return Ok(record);
    }
    Err(DatasetError::GenerationFailed {
        index,
        attempts: cfg.max_attempts,
    })
}

/// `cfg.count` orbit roots labeled by the sotd oracle.
pub fn generate_synthetic(cfg: &GeneratorConfig, seed: u64) -> Result<Dataset, DatasetError> {
    cfg.validate()?;
    #[cfg(feature = "parallel")]
    let records: Vec<ProblemRecord> = {
        use rayon::prelude::*;
        (0..cfg.count)
            .into_par_iter()
            .map(|i| generate_one(cfg, seed, i))
            .collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let records: Vec<ProblemRecord> = (0..cfg.count)
        .map(|i| generate_one(cfg, seed, i))
        .collect::<Result<_, _>>()?;
    let mut provenance = BTreeMap::new();
    provenance.insert("source".into(), "synthetic".into());
    provenance.insert("seed".into(), seed.to_string());
    provenance.insert(
        "generator".into(),
        serde_json::to_string(cfg).expect("config serializes"),
    );
    provenance.insert("timings".into(), "projection sotd".into());
    Dataset::new(records, provenance)
}
