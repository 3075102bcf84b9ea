//! Asymptotically optimal sampling ratios under known means and variances.
//!
//! With `b` the best, `δ_i = μ_b − μ_i` and `σ_i²` the sampling variances,
//! the ratios satisfy the equal-rate conditions
//! `δ_i² / (σ_i²/r_i + σ_b²/r_b) = δ_j² / (σ_j²/r_j + σ_b²/r_b)` for
//! `i, j ≠ b`, and the balance condition `r_b = σ_b·√(Σ_{i≠b} r_i²/σ_i²)`.

use crate::bayes::GroundTruth;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const TARGET_RESIDUAL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 100_000;
const DAMPING: f64 = 0.5;

/// Nonnegative ratios summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RatioVector(Vec<f64>);

impl RatioVector {
    /// Normalizes nonnegative weights.
    pub fn from_weights(w: Vec<f64>) -> Result<Self> {
        let total: f64 = w.iter().sum();
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) || !(total > 0.0) || !total.is_finite() {
            return Err(Error::invalid(format!("ratio weights must be finite, >= 0 and not all 0: {w:?}")));
        }
        Ok(Self(w.into_iter().map(|x| x / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for RatioVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalRatios {
    pub ratios: RatioVector,
    /// Largest relative spread among the equal-rate conditions.
    pub rate_residual: f64,
    /// `|r_b − σ_b·√(Σ r_i²/σ_i²)|`.
    pub balance_residual: f64,
    pub iterations: usize,
}

struct Problem {
    best: usize,
    gap2: Vec<f64>,
    var: Vec<f64>,
}

impl Problem {
    fn new(truth: &GroundTruth) -> Result<Self> {
        let best = truth.best();
        let mb = truth.means[best];
        let gap2: Vec<f64> = truth.means.iter().map(|&m| (mb - m) * (mb - m)).collect();
        for (i, &g) in gap2.iter().enumerate() {
            if i != best && !(g > 0.0) {
                return Err(Error::invalid(format!(
                    "optimal ratios need a unique best mean (alternatives {best} and {i} tie)"
                )));
            }
        }
        if truth.variances.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("optimal ratios need positive sampling variances"));
        }
        Ok(Self {
            best,
            gap2,
            var: truth.variances.clone(),
        })
    }

    fn others(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.gap2.len()).filter(move |&i| i != self.best)
    }

    /// Non-best ratios solving the equal-rate conditions with `Σ r_i = 1 − rb`.
    ///
    /// With common rate `z` and `a = 1/z`, `r_i = σ_i²/(δ_i²·a − σ_b²/rb)`.
    /// Writing `a = a_min + e`, where `a_min` puts the smallest gap on its
    /// pole, keeps full relative precision in `e` near that pole.
    fn split(&self, rb: f64) -> Vec<f64> {
        let vb = self.var[self.best] / rb;
        let gmin = self.others().map(|i| self.gap2[i]).fold(f64::INFINITY, f64::min);
        let share = |e: f64, i: usize| {
            let g = self.gap2[i];
            self.var[i] / (g * e + vb * (g / gmin - 1.0))
        };
        let mass = |e: f64| self.others().map(|i| share(e, i)).sum::<f64>();
        let target = 1.0 - rb;
        // The mass is decreasing in e, from ∞ at e = 0 to 0 at e = ∞.
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        while mass(lo) < target {
            lo *= 0.5;
        }
        while mass(hi) > target {
            hi *= 2.0;
        }
        let (mut llo, mut lhi) = (lo.ln(), hi.ln());
        for _ in 0..200 {
            let mid = 0.5 * (llo + lhi);
            if mid <= llo || mid >= lhi {
                break;
            }
            if mass(mid.exp()) > target {
                llo = mid;
            } else {
                lhi = mid;
            }
        }
        let e = (0.5 * (llo + lhi)).exp();
        let mut r = vec![0.0; self.gap2.len()];
        let m = mass(e);
        for i in self.others() {
            r[i] = share(e, i) * target / m;
        }
        r[self.best] = rb;
        r
    }

    fn balance_target(&self, r: &[f64]) -> f64 {
        let s: f64 = self.others().map(|i| r[i] * r[i] / self.var[i]).sum();
        self.var[self.best].sqrt() * s.sqrt()
    }

    /// Balance-updated best ratio after renormalizing; the fixed point is
    /// where it equals `rb`.
    fn image(&self, rb: f64) -> (f64, Vec<f64>) {
        let r = self.split(rb);
        let t = self.balance_target(&r);
        (t / (t + 1.0 - rb), r)
    }
}

/// Residuals of the two optimality conditions at `r`.
pub fn ratio_residuals(truth: &GroundTruth, r: &[f64]) -> Result<(f64, f64)> {
    let p = Problem::new(truth)?;
    if r.len() != truth.k() {
        return Err(Error::invalid("ratio length differs from k"));
    }
    let vb = p.var[p.best] / r[p.best];
    let rates: Vec<f64> = p.others().map(|i| p.gap2[i] / (p.var[i] / r[i] + vb)).collect();
    let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(((max - min) / max, (r[p.best] - p.balance_target(r)).abs()))
}

/// Optimal ratios starting from `r_b = 1/k`.
pub fn optimal_ratios(truth: &GroundTruth) -> Result<OptimalRatios> {
    optimal_ratios_from(truth, 1.0 / truth.k() as f64)
}

/// Damped fixed-point iteration on the best alternative's ratio, kept inside
/// a bracket that shrinks with every evaluation so it cannot diverge.
pub fn optimal_ratios_from(truth: &GroundTruth, initial_best_ratio: f64) -> Result<OptimalRatios> {
    let p = Problem::new(truth)?;
    if !(initial_best_ratio > 0.0 && initial_best_ratio < 1.0) {
        return Err(Error::invalid(format!(
            "initial best ratio must lie in (0, 1) (got {initial_best_ratio})"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut rb = initial_best_ratio;
    let mut residual = f64::INFINITY;
    for iteration in 1..=MAX_ITERATIONS {
        let (h, r) = p.image(rb);
        let g = rb - h;
        residual = g.abs();
        if residual < TARGET_RESIDUAL {
            let ratios = RatioVector::from_weights(r)?;
            let (rate_residual, balance_residual) = ratio_residuals(truth, ratios.as_slice())?;
            return Ok(OptimalRatios {
                ratios,
                rate_residual,
                balance_residual,
                iterations: iteration,
            });
        }
        // rb − h(rb) is increasing in rb.
        if g < 0.0 {
            lo = lo.max(rb);
        } else {
            hi = hi.min(rb);
        }
        let next = rb - DAMPING * g;
        rb = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo < f64::EPSILON * rb {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(means: &[f64], stds: &[f64]) -> GroundTruth {
        GroundTruth::new(means.to_vec(), stds.iter().map(|s| s * s).collect()).unwrap()
    }

    #[test]
    fn two_alternatives_closed_form() {
        let r = optimal_ratios(&truth(&[1.0, 0.0], &[1.0, 1.0])).unwrap();
        assert!((r.ratios[0] - 0.5).abs() < 1e-10 && (r.ratios[1] - 0.5).abs() < 1e-10);
        let r = optimal_ratios(&truth(&[1.0, 0.0], &[2.0, 1.0])).unwrap();
        assert!((r.ratios[0] - 2.0 / 3.0).abs() < 1e-10, "{:?}", r.ratios);
        let r = optimal_ratios(&truth(&[0.0, 1.0], &[1.0, 3.0])).unwrap();
        assert!((r.ratios[1] - 0.75).abs() < 1e-10);
    }

    #[test]
    fn residuals_and_restarts() {
        let t = truth(&[0.0, 1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 0.5, 1.5, 1.0]);
        let base = optimal_ratios(&t).unwrap();
        assert!(base.rate_residual < 1e-8 && base.balance_residual < 1e-8, "{base:?}");
        assert!((base.ratios.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for start in [0.01, 0.2, 0.5, 0.9, 0.999] {
            let r = optimal_ratios_from(&t, start).unwrap();
            for i in 0..5 {
                assert!((r.ratios[i] - base.ratios[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_tied_best_and_bad_start() {
        assert!(optimal_ratios(&truth(&[1.0, 1.0, 0.0], &[1.0; 3])).is_err());
        assert!(optimal_ratios_from(&truth(&[1.0, 0.0], &[1.0; 2]), 1.0).is_err());
        assert!(RatioVector::from_weights(vec![0.0, 0.0]).is_err());
    }
}
