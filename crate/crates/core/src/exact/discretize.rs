//! Quantile-grid discretization of continuous priors.
//!
//! Each marginal prior is replaced by `grid_points` equally weighted points
//! at the quantiles `(m - 1/2) / grid_points`; the joint prior is the product
//! grid over alternatives. This is an approximation: the resulting
//! [`DiscreteModel`] is solved exactly, the original continuous model is not.

use statrs::distribution::{Beta, ContinuousCDF, Normal};

use super::model::{DiscreteModel, Reward};
use crate::error::{Error, Result};

/// Largest product grid `discretize_prior` will build.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousSpec {
    /// Bernoulli sampling with independent `Beta(alpha_i, beta_i)` priors.
    BetaBernoulli { alphas: Vec<f64>, betas: Vec<f64> },
    /// Normal sampling with known std and independent normal priors on the
    /// means; outcomes are binned into `outcome_bins` equal-width cells over
    /// `[min grid mean - 4 std, max grid mean + 4 std]`, tails folded into the
    /// end cells, each cell represented by its midpoint.
    NormalBinned {
        prior_means: Vec<f64>,
        prior_stds: Vec<f64>,
        sampling_stds: Vec<f64>,
        outcome_bins: usize,
    },
}

/// Quantile grid of one marginal.
pub fn quantile_grid(marginal: &dyn ContinuousCDF<f64, f64>, grid_points: usize) -> Vec<f64> {
    (0..grid_points)
        .map(|m| marginal.inverse_cdf((m as f64 + 0.5) / grid_points as f64))
        .collect()
}

pub fn discretize_prior(spec: &ContinuousSpec, grid_points: usize, reward: Reward) -> Result<DiscreteModel> {
    if grid_points < 2 {
        return Err(Error::invalid(format!("grid_points must be >= 2 (got {grid_points})")));
    }
    let (grids, outcome_model): (Vec<Vec<f64>>, OutcomeModel) = match spec {
        ContinuousSpec::BetaBernoulli { alphas, betas } => {
            if alphas.len() != betas.len() || alphas.is_empty() {
                return Err(Error::invalid("alphas and betas must have equal, non-zero length"));
            }
            let grids = alphas
                .iter()
                .zip(betas)
                .map(|(&a, &b)| {
                    let dist = Beta::new(a, b)
                        .map_err(|e| Error::invalid(format!("Beta({a}, {b}): {e}")))?;
                    Ok(quantile_grid(&dist, grid_points))
                })
                .collect::<Result<Vec<_>>>()?;
            (grids, OutcomeModel::Bernoulli)
        }
        ContinuousSpec::NormalBinned {
            prior_means,
            prior_stds,
            sampling_stds,
            outcome_bins,
        } => {
            let k = prior_means.len();
            if k == 0 || prior_stds.len() != k || sampling_stds.len() != k {
                return Err(Error::invalid("normal spec vectors must have equal, non-zero length"));
            }
            if *outcome_bins < 2 {
                return Err(Error::invalid("outcome_bins must be >= 2"));
            }
            if sampling_stds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(Error::invalid("sampling stds must be finite and > 0"));
            }
            let grids = prior_means
                .iter()
                .zip(prior_stds)
                .map(|(&m, &s)| {
                    let dist = Normal::new(m, s)
                        .map_err(|e| Error::invalid(format!("N({m}, {s}^2): {e}")))?;
                    Ok(quantile_grid(&dist, grid_points))
                })
                .collect::<Result<Vec<_>>>()?;
            (
                grids,
                OutcomeModel::Binned {
                    sampling_stds: sampling_stds.clone(),
                    bins: *outcome_bins,
                },
            )
        }
    };

    let k = grids.len();
    let r = (grid_points as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if r > MAX_GRID_POINTS as u128 {
        return Err(Error::invalid(format!(
            "product grid of {grid_points}^{k} points exceeds {MAX_GRID_POINTS}"
        )));
    }
    let r = r as usize;

    let outcomes = outcome_model.build(&grids)?;
    let mut prior_support = Vec::with_capacity(r);
    let mut sampling_pmf = Vec::with_capacity(r);
    for flat in 0..r {
        let mut rem = flat;
        let mut point = Vec::with_capacity(k);
        let mut pmfs = Vec::with_capacity(k);
        for i in 0..k {
            let m = rem % grid_points;
            rem /= grid_points;
            point.push(grids[i][m]);
            pmfs.push(outcomes.pmf[i][m].clone());
        }
        prior_support.push(point);
        sampling_pmf.push(pmfs);
    }
    DiscreteModel::new(
        outcomes.support,
        prior_support,
        vec![1.0 / r as f64; r],
        sampling_pmf,
        reward,
    )
}

enum OutcomeModel {
    Bernoulli,
    Binned { sampling_stds: Vec<f64>, bins: usize },
}

struct Outcomes {
    support: Vec<Vec<f64>>,
    /// `pmf[i][m]` is alternative `i`'s outcome pmf at grid point `m`.
    pmf: Vec<Vec<Vec<f64>>>,
}

impl OutcomeModel {
    fn build(&self, grids: &[Vec<f64>]) -> Result<Outcomes> {
        match self {
            OutcomeModel::Bernoulli => Ok(Outcomes {
                support: vec![vec![0.0, 1.0]; grids.len()],
                pmf: grids
                    .iter()
                    .map(|g| g.iter().map(|&p| vec![1.0 - p, p]).collect())
                    .collect(),
            }),
            OutcomeModel::Binned { sampling_stds, bins } => {
                let mut support = Vec::with_capacity(grids.len());
                let mut pmf = Vec::with_capacity(grids.len());
                for (grid, &sd) in grids.iter().zip(sampling_stds) {
                    let lo = grid.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * sd;
                    let hi = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0 * sd;
                    let width = (hi - lo) / *bins as f64;
                    support.push((0..*bins).map(|b| lo + (b as f64 + 0.5) * width).collect());
                    let per_point = grid
                        .iter()
                        .map(|&mu| {
                            let dist = Normal::new(mu, sd).expect("validated std");
                            let mut cdf_prev = 0.0;
                            let mut cells: Vec<f64> = (1..=*bins)
                                .map(|b| {
                                    let cdf = if b == *bins { 1.0 } else { dist.cdf(lo + b as f64 * width) };
                                    let p = cdf - cdf_prev;
                                    cdf_prev = cdf;
                                    p.max(0.0)
                                })
                                .collect();
                            let total: f64 = cells.iter().sum();
                            cells.iter_mut().for_each(|p| *p /= total);
                            cells
                        })
                        .collect();
                    pmf.push(per_point);
                }
                Ok(Outcomes { support, pmf })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_grid_rejected() {
        let spec = ContinuousSpec::BetaBernoulli {
            alphas: vec![1.0, 1.0],
            betas: vec![1.0, 1.0],
        };
        assert!(discretize_prior(&spec, 1, Reward::Pcs).is_err());
    }

    #[test]
    fn symmetric_prior_gives_symmetric_grid() {
        let grid = quantile_grid(&Beta::new(2.0, 2.0).unwrap(), 6);
        for (a, b) in grid.iter().zip(grid.iter().rev()) {
            assert!((a + b - 1.0).abs() < 1e-12);
        }
        let grid = quantile_grid(&Normal::new(0.0, 1.0).unwrap(), 7);
        for (a, b) in grid.iter().zip(grid.iter().rev()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_grid_mean_matches_prior_mean() {
        let grid = quantile_grid(&Normal::new(0.3, 2.0).unwrap(), 101);
        let mean = grid.iter().sum::<f64>() / 101.0;
        assert!((mean - 0.3).abs() < 1e-3, "grid mean {mean}");
    }

    #[test]
    fn discretized_models_validate() {
        let beta = ContinuousSpec::BetaBernoulli {
            alphas: vec![1.0, 2.0],
            betas: vec![1.0, 3.0],
        };
        let m = discretize_prior(&beta, 5, Reward::Pcs).unwrap();
        assert_eq!(m.num_points(), 25);
        assert_eq!(m.support_sizes(), vec![2, 2]);

        let normal = ContinuousSpec::NormalBinned {
            prior_means: vec![0.0, 0.5],
            prior_stds: vec![1.0, 1.0],
            sampling_stds: vec![1.0, 2.0],
            outcome_bins: 4,
        };
        let m = discretize_prior(&normal, 3, Reward::Eoc).unwrap();
        assert_eq!(m.num_points(), 9);
        assert_eq!(m.support_sizes(), vec![4, 4]);
    }
}
