//! β-weighted ranking of plans.
//!
//! A plan's score is `β · exec/max_exec + (1 − β) · blocks/max_blocks`, where
//! the maxima are taken over the population being ranked. Lower is better.
//! A zero maximum makes the matching term zero for everyone.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{BetaWeight, PlanMetrics, Time};

/// Normalization maxima for one population of plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Normalizer {
    pub max_exec: Time,
    pub max_blocks: u64,
}

impl Normalizer {
    pub fn over<'a>(population: impl IntoIterator<Item = &'a PlanMetrics>) -> Self {
        population.into_iter().fold(
            Normalizer {
                max_exec: Time::ZERO,
                max_blocks: 0,
            },
            |acc, m| Normalizer {
                max_exec: acc.max_exec.max(m.overall_exec),
                max_blocks: acc.max_blocks.max(m.total_blocks),
            },
        )
    }

    /// Floating-point score, clamped to `[0, 1]`.
    ///
    /// Non-decreasing in both `exec` and `blocks` for a fixed normalizer,
    /// which the oracle relies on for pruning.
    pub fn score(&self, exec: Time, blocks: u64, beta: BetaWeight) -> f64 {
        let b = beta.value();
        let e = if self.max_exec.is_zero() {
            0.0
        } else {
            exec.as_micros() as f64 / self.max_exec.as_micros() as f64
        };
        let k = if self.max_blocks == 0 {
            0.0
        } else {
            blocks as f64 / self.max_blocks as f64
        };
        (b * e + (1.0 - b) * k).clamp(0.0, 1.0)
    }

    /// The same score as an exact rational, with β taken as the exact value of
    /// its binary representation.
    pub fn exact_score(&self, exec: Time, blocks: u64, beta: BetaWeight) -> BigRational {
        let zero = BigRational::from_integer(BigInt::from(0));
        let one = BigRational::from_integer(BigInt::from(1));
        let b = BigRational::from_float(beta.value()).unwrap_or_else(|| zero.clone());
        let e = if self.max_exec.is_zero() {
            zero.clone()
        } else {
            BigRational::new(exec.as_micros().into(), self.max_exec.as_micros().into())
        };
        let k = if self.max_blocks == 0 {
            zero
        } else {
            BigRational::new(blocks.into(), self.max_blocks.into())
        };
        &b * e + (one - &b) * k
    }
}

/// Scores every candidate against the maxima of the candidate set.
pub fn score_plans(candidates: &[PlanMetrics], beta: BetaWeight) -> Vec<f64> {
    let norm = Normalizer::over(candidates);
    candidates
        .iter()
        .map(|m| norm.score(m.overall_exec, m.total_blocks, beta))
        .collect()
}

/// Index of the lowest-scoring candidate; earliest wins ties.
///
/// Compared in exact arithmetic so that the choice is a true minimizer of the
/// weighted objective. Floating-point scores can misorder near-ties by an ulp,
/// which would break the monotone shift of the chosen plan as β grows.
pub fn argmin_score(candidates: &[PlanMetrics], beta: BetaWeight) -> Option<usize> {
    let norm = Normalizer::over(candidates);
    let mut best: Option<(usize, BigRational)> = None;
    for (i, m) in candidates.iter().enumerate() {
        let s = norm.exact_score(m.overall_exec, m.total_blocks, beta);
        match &best {
            Some((_, incumbent)) if s.cmp(incumbent) != Ordering::Less => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}
