//! Terminal selection rules.

use super::quadrature::{integrate, QuadratureConfig};
use super::BeliefVector;
use crate::error::{Error, Result};
use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Half-width of the integration window in posterior standard deviations.
const WINDOW_SDS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    pub quadrature: QuadratureConfig,
    /// Largest `k` accepted by the quadrature-based rules.
    pub max_k: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            quadrature: QuadratureConfig::default(),
            max_k: 16,
        }
    }
}

/// Sample-mean (posterior-mean) selection: the current best `<1>_t`.
pub fn select_max_posterior_mean(b: &BeliefVector) -> usize {
    b.best()
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

pub(crate) fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// One marginal posterior: a normal, or a point mass when `sd == 0`.
#[derive(Clone, Copy)]
struct Marginal {
    mean: f64,
    sd: f64,
}

impl Marginal {
    fn cdf(&self, x: f64) -> f64 {
        if self.sd == 0.0 {
            if x >= self.mean {
                1.0
            } else {
                0.0
            }
        } else {
            std_normal_cdf((x - self.mean) / self.sd)
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        std_normal_pdf((x - self.mean) / self.sd) / self.sd
    }
}

fn marginals(b: &BeliefVector, cfg: &SelectionConfig) -> Result<Vec<Marginal>> {
    if b.k() > cfg.max_k {
        return Err(Error::invalid(format!(
            "quadrature selection supports k <= {} (got {})",
            cfg.max_k,
            b.k()
        )));
    }
    Ok(b.beliefs()
        .iter()
        .map(|x| Marginal {
            mean: x.post_mean,
            sd: x.post_std(),
        })
        .collect())
}

/// A point mass at `m_i` beats point masses at the same location only when it
/// has the lower index; continuous competitors contribute their CDF.
fn point_mass_win(m: &[Marginal], i: usize) -> f64 {
    let x = m[i].mean;
    m.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, mj)| {
            if mj.sd == 0.0 {
                if x > mj.mean || (x == mj.mean && i < j) {
                    1.0
                } else {
                    0.0
                }
            } else {
                mj.cdf(x)
            }
        })
        .product()
}

/// `∫ h(x) f_i(x) Π_{j≠i} F_j(x) dx` for a continuous marginal `i`.
fn weighted_win<H: Fn(f64) -> f64>(m: &[Marginal], i: usize, h: H, cfg: &SelectionConfig) -> Result<f64> {
    let mi = m[i];
    let breaks: Vec<f64> = m
        .iter()
        .enumerate()
        .filter(|&(j, mj)| j != i && mj.sd == 0.0)
        .map(|(_, mj)| mj.mean)
        .collect();
    let integrand = |x: f64| {
        let mut p = mi.pdf(x) * h(x);
        for (j, mj) in m.iter().enumerate() {
            if j != i {
                p *= mj.cdf(x);
            }
        }
        p
    };
    integrate(
        integrand,
        mi.mean - WINDOW_SDS * mi.sd,
        mi.mean + WINDOW_SDS * mi.sd,
        &breaks,
        cfg.quadrature,
    )
}

/// Posterior probabilities `P(μ_i ≥ μ_j ∀j)` for every alternative.
pub fn pcs_probabilities(b: &BeliefVector, cfg: &SelectionConfig) -> Result<Vec<f64>> {
    let m = marginals(b, cfg)?;
    (0..m.len())
        .map(|i| {
            if m[i].sd == 0.0 {
                Ok(point_mass_win(&m, i))
            } else {
                weighted_win(&m, i, |_| 1.0, cfg)
            }
        })
        .collect()
}

/// Selection maximizing the posterior probability of correct selection.
pub fn select_optimal_pcs(b: &BeliefVector) -> Result<usize> {
    select_optimal_pcs_with(b, &SelectionConfig::default())
}

/// Probabilities within twice the quadrature tolerance of the maximum count as
/// tied; ties resolve in posterior-mean order.
pub fn select_optimal_pcs_with(b: &BeliefVector, cfg: &SelectionConfig) -> Result<usize> {
    let p = pcs_probabilities(b, cfg)?;
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = 2.0 * cfg.quadrature.abs_tol;
    Ok(*b
        .order()
        .iter()
        .find(|&&i| p[i] >= max - slack)
        .expect("the maximizer is within the slack"))
}

/// Selection maximizing the terminal expected value: the max posterior mean.
pub fn select_optimal_eoc(b: &BeliefVector) -> usize {
    b.best()
}

/// `max_i E[μ_i] − E[max_i μ_i]`, never positive.
pub fn eoc_value(b: &BeliefVector) -> Result<f64> {
    eoc_value_with(b, &SelectionConfig::default())
}

pub fn eoc_value_with(b: &BeliefVector, cfg: &SelectionConfig) -> Result<f64> {
    let m = marginals(b, cfg)?;
    // Integrate x − c to keep the integrand small and shift-invariant.
    let c = m[b.best()].mean;
    let mut excess = 0.0;
    for i in 0..m.len() {
        excess += if m[i].sd == 0.0 {
            (m[i].mean - c) * point_mass_win(&m, i)
        } else {
            weighted_win(&m, i, |x| x - c, cfg)?
        };
    }
    Ok((-excess).min(0.0))
}
