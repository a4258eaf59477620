//! Uniform random k-SAT.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use super::{CnfInstance, Literal};
use crate::error::{Error, Result};

/// `ceil(n * ratio)`, tolerant of floating-point noise just above an integer
/// (e.g. `3 * (1/3)`).
pub fn uniform_clause_count(n: usize, ratio: f64) -> usize {
    let target = n as f64 * ratio;
    (target - 1e-9).ceil().max(0.0) as usize
}

/// Number of distinct clauses of `k` distinct variables over `n` variables:
/// `C(n, k) * 2^k`, saturating at `u128::MAX`.
pub fn distinct_clause_capacity(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        // exact at every step: c * (n - i) is divisible by (i + 1)
        c = match c.checked_mul(n as u128 - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c.checked_mul(1u128.checked_shl(k as u32).unwrap_or(u128::MAX))
        .unwrap_or(u128::MAX)
}

/// Generates `ceil(n * ratio)` pairwise-distinct clauses, each over `k`
/// distinct variables chosen uniformly, each literal negated by a fair coin.
/// A clause that repeats an earlier one is redrawn in full.
pub fn gen_uniform_ksat<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    ratio: f64,
    rng: &mut R,
) -> Result<CnfInstance> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "clause size k={k} must satisfy 1 <= k <= n={n}"
        )));
    }
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "clause-to-variable ratio must be positive, got {ratio}"
        )));
    }
    let m = uniform_clause_count(n, ratio);
    let capacity = distinct_clause_capacity(n, k);
    if m as u128 > capacity {
        return Err(Error::InfeasibleGeneration {
            requested: m as u128,
            available: capacity,
        });
    }

    let mut seen = HashSet::with_capacity(m);
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let mut vars = index::sample(rng, n, k).into_vec();
        vars.sort_unstable();
        let clause: Vec<Literal> = vars
            .into_iter()
            .map(|v| Literal::new(v, rng.random_bool(0.5)))
            .collect();
        if seen.insert(clause.clone()) {
            clauses.push(clause);
        }
    }
    CnfInstance::new(n, clauses)
}
