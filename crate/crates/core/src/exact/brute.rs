//! Exhaustive oracle for the exact solver.
//!
//! Recurses over raw observation histories, never over sufficient statistics,
//! and updates the parameter posterior one observation at a time. The maximum
//! over the allocation at every history node equals the maximum over all
//! deterministic allocation trees.

use num_bigint::BigUint;

use super::model::{reward_table, DiscreteModel};
use crate::error::{Error, Result};

pub const DEFAULT_PATH_CAP: usize = 10_000_000;

pub fn brute_force_value(model: &DiscreteModel, horizon: usize, path_cap: usize) -> Result<f64> {
    model.validate()?;
    let s_max = model.support.iter().map(Vec::len).max().unwrap_or(1);
    let paths = BigUint::from(model.k * s_max).pow(horizon as u32);
    if paths > BigUint::from(path_cap) {
        return Err(Error::EnumerationTooLarge {
            paths: paths.to_string(),
            cap: path_cap,
        });
    }
    let rewards = reward_table(model);
    Ok(recurse(model, &rewards, &model.prior_pmf, horizon))
}

fn recurse(model: &DiscreteModel, rewards: &[Vec<f64>], posterior: &[f64], remaining: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..model.k {
        let v = if remaining == 0 {
            posterior.iter().zip(rewards).map(|(p, row)| p * row[i]).sum()
        } else {
            let mut v = 0.0;
            for l in 0..model.support[i].len() {
                let joint: Vec<f64> = posterior
                    .iter()
                    .enumerate()
                    .map(|(j, p)| p * model.sampling_pmf[j][i][l])
                    .collect();
                let marginal: f64 = joint.iter().sum();
                if marginal > 0.0 {
                    let next: Vec<f64> = joint.iter().map(|w| w / marginal).collect();
                    v += marginal * recurse(model, rewards, &next, remaining - 1);
                }
            }
            v
        };
        best = best.max(v);
    }
    best
}
