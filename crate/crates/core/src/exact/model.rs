use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PMF_TOL: f64 = 1e-12;
/// Means within this distance of the maximum count as maximizers.
pub(crate) const MEAN_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reward {
    /// Probability of correct selection, `1{i is a best alternative}`.
    Pcs,
    /// Expected opportunity cost, `mu_i - max_j mu_j`.
    Eoc,
}

/// Finite-support sampling model with a finite-support prior.
///
/// `sampling_pmf[j][i][l]` is the probability that alternative `i` produces
/// `support[i][l]` when the parameter is the prior point `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModel {
    pub k: usize,
    pub support: Vec<Vec<f64>>,
    /// Coordinates of the prior points; informational only.
    #[serde(default)]
    pub prior_support: Vec<Vec<f64>>,
    pub prior_pmf: Vec<f64>,
    pub sampling_pmf: Vec<Vec<Vec<f64>>>,
    pub reward: Reward,
}

impl DiscreteModel {
    pub fn new(
        support: Vec<Vec<f64>>,
        prior_support: Vec<Vec<f64>>,
        prior_pmf: Vec<f64>,
        sampling_pmf: Vec<Vec<Vec<f64>>>,
        reward: Reward,
    ) -> Result<Self> {
        let model = Self {
            k: support.len(),
            support,
            prior_support,
            prior_pmf,
            sampling_pmf,
            reward,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.support.len() != self.k {
            return Err(Error::invalid(format!(
                "model declares k = {} but has {} supports",
                self.k,
                self.support.len()
            )));
        }
        if let Some(i) = self.support.iter().position(|s| s.is_empty()) {
            return Err(Error::invalid(format!("alternative {i} has an empty support")));
        }
        let r = self.prior_pmf.len();
        if r == 0 {
            return Err(Error::invalid("prior pmf is empty"));
        }
        if !self.prior_support.is_empty() && self.prior_support.len() != r {
            return Err(Error::invalid(format!(
                "prior_support has {} points but prior_pmf has {r}",
                self.prior_support.len()
            )));
        }
        check_pmf(&self.prior_pmf, "prior pmf")?;
        if self.sampling_pmf.len() != r {
            return Err(Error::invalid(format!(
                "sampling_pmf has {} parameter points, expected {r}",
                self.sampling_pmf.len()
            )));
        }
        for (j, per_alt) in self.sampling_pmf.iter().enumerate() {
            if per_alt.len() != self.k {
                return Err(Error::invalid(format!(
                    "sampling_pmf[{j}] covers {} alternatives, expected {}",
                    per_alt.len(),
                    self.k
                )));
            }
            for (i, pmf) in per_alt.iter().enumerate() {
                if pmf.len() != self.support[i].len() {
                    return Err(Error::invalid(format!(
                        "sampling_pmf[{j}][{i}] has {} entries, support has {}",
                        pmf.len(),
                        self.support[i].len()
                    )));
                }
                check_pmf(pmf, &format!("sampling_pmf[{j}][{i}]"))?;
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn num_points(&self) -> usize {
        self.prior_pmf.len()
    }

    pub fn support_sizes(&self) -> Vec<usize> {
        self.support.iter().map(Vec::len).collect()
    }

    /// Mean of alternative `i` under prior point `j`.
    pub fn mean(&self, j: usize, i: usize) -> f64 {
        self.support[i]
            .iter()
            .zip(&self.sampling_pmf[j][i])
            .map(|(y, q)| y * q)
            .sum()
    }

    pub(crate) fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.k + 1);
        let mut acc = 0;
        offsets.push(0);
        for s in &self.support {
            acc += s.len();
            offsets.push(acc);
        }
        offsets
    }

    /// Per-point reward `V(eta_j; i)`.
    pub fn point_reward(&self, j: usize, i: usize) -> f64 {
        let means: Vec<f64> = (0..self.k).map(|a| self.mean(j, a)).collect();
        let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        match self.reward {
            Reward::Pcs => {
                if means[i] >= max - MEAN_TIE_TOL * (1.0 + max.abs()) {
                    1.0
                } else {
                    0.0
                }
            }
            Reward::Eoc => means[i] - max,
        }
    }
}

fn check_pmf(pmf: &[f64], what: &str) -> Result<()> {
    if pmf.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid(format!("{what} has entries outside [0, 1]")));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > PMF_TOL {
        return Err(Error::invalid(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// Outcome counts per alternative: the sufficient statistic of the history.
///
/// Counts are stored flat, alternative after alternative, in the order of
/// the model's supports.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteState {
    pub counts: Vec<u32>,
}

impl DiscreteState {
    pub fn empty(model: &DiscreteModel) -> Self {
        Self {
            counts: vec![0; model.support.iter().map(Vec::len).sum()],
        }
    }

    pub fn from_nested(model: &DiscreteModel, counts: &[Vec<u32>]) -> Result<Self> {
        if counts.len() != model.k
            || counts.iter().zip(&model.support).any(|(c, s)| c.len() != s.len())
        {
            return Err(Error::invalid("state counts do not match the model's supports"));
        }
        Ok(Self {
            counts: counts.concat(),
        })
    }

    /// Builds the state from a raw history of `(alternative, outcome index)`.
    pub fn from_history(model: &DiscreteModel, history: &[(usize, usize)]) -> Result<Self> {
        let offsets = model.offsets();
        let mut state = Self::empty(model);
        for &(i, l) in history {
            if i >= model.k || l >= model.support[i].len() {
                return Err(Error::invalid(format!("history entry ({i}, {l}) out of range")));
            }
            state.counts[offsets[i] + l] += 1;
        }
        Ok(state)
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub(crate) fn child(&self, flat_index: usize) -> Self {
        let mut counts = self.counts.clone();
        counts[flat_index] += 1;
        Self { counts }
    }

    pub fn per_alternative(&self, model: &DiscreteModel) -> Vec<u32> {
        let offsets = model.offsets();
        (0..model.k)
            .map(|i| self.counts[offsets[i]..offsets[i + 1]].iter().sum())
            .collect()
    }

    /// `c11 c12|c21 c22` rendering used in policy tables.
    pub fn render(&self, model: &DiscreteModel) -> String {
        let offsets = model.offsets();
        (0..model.k)
            .map(|i| {
                self.counts[offsets[i]..offsets[i + 1]]
                    .iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// Posterior pmf over the prior points given the outcome counts.
///
/// Computed in log space with max-normalization so long histories do not
/// underflow.
pub fn posterior_pmf(model: &DiscreteModel, state: &DiscreteState) -> Result<Vec<f64>> {
    if state.counts.len() != model.support.iter().map(Vec::len).sum::<usize>() {
        return Err(Error::invalid("state dimensions do not match the model"));
    }
    let offsets = model.offsets();
    let log_weights: Vec<f64> = (0..model.num_points())
        .map(|j| {
            let mut lw = model.prior_pmf[j].ln();
            for i in 0..model.k {
                for (l, &q) in model.sampling_pmf[j][i].iter().enumerate() {
                    let c = state.counts[offsets[i] + l];
                    if c > 0 {
                        lw += c as f64 * q.ln();
                    }
                }
            }
            lw
        })
        .collect();
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::degenerate(
            "state has zero likelihood under every prior point",
        ));
    }
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Predictive pmf of the next outcome of alternative `i`.
pub fn predictive_pmf(model: &DiscreteModel, state: &DiscreteState, i: usize) -> Result<Vec<f64>> {
    if i >= model.k {
        return Err(Error::invalid(format!("alternative {i} out of range")));
    }
    let post = posterior_pmf(model, state)?;
    Ok(predictive_from_posterior(model, &post, i))
}

pub(crate) fn predictive_from_posterior(model: &DiscreteModel, post: &[f64], i: usize) -> Vec<f64> {
    let mut pred = vec![0.0; model.support[i].len()];
    for (j, &p) in post.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (slot, &q) in pred.iter_mut().zip(&model.sampling_pmf[j][i]) {
            *slot += p * q;
        }
    }
    pred
}

/// Precomputed `V(eta_j; i)` table, indexed `[j][i]`.
pub(crate) fn reward_table(model: &DiscreteModel) -> Vec<Vec<f64>> {
    (0..model.num_points())
        .map(|j| (0..model.k).map(|i| model.point_reward(j, i)).collect())
        .collect()
}

/// Posterior expected terminal reward of selecting `i`.
pub fn terminal_value(model: &DiscreteModel, state: &DiscreteState, i: usize) -> Result<f64> {
    if i >= model.k {
        return Err(Error::invalid(format!("alternative {i} out of range")));
    }
    let post = posterior_pmf(model, state)?;
    Ok(post
        .iter()
        .enumerate()
        .map(|(j, p)| p * model.point_reward(j, i))
        .sum())
}
