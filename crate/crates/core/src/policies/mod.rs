//! Allocation and selection policies for independent normal beliefs.
//!
//! Alternatives are indexed from zero. `order()[0]` is the current best
//! `<1>_t` by posterior mean; ties in posterior mean rank the lower index
//! first.

mod aoap;
mod kg;
mod ocba;
pub mod quadrature;
mod ratios;
mod selection;
pub(crate) mod two_factor;

pub use aoap::{aoap_allocate, aoap_multistep, aoap_values, distance_feature, induced_correlation, Distances, MAX_LOOKAHEAD_PATHS};
pub use kg::{kg_allocate, kg_factors, kg_log_factors};
pub use ocba::{ocba_most_starving_allocate, ocba_ratios, OcbaRatios};
pub use ratios::{optimal_ratios, optimal_ratios_from, ratio_residuals, OptimalRatios, RatioVector};
pub use selection::{
    eoc_value, eoc_value_with, pcs_probabilities, select_max_posterior_mean, select_optimal_eoc, select_optimal_pcs,
    select_optimal_pcs_with, SelectionConfig,
};
pub use two_factor::{two_factor_allocate, two_factor_value};

use crate::bayes::GaussianBelief;
use crate::error::{Error, Result};
use crate::vfa::VfaWeights;

/// Posterior beliefs over all alternatives, with the posterior-mean ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    beliefs: Vec<GaussianBelief>,
    order: Vec<usize>,
}

impl BeliefVector {
    pub fn new(beliefs: Vec<GaussianBelief>) -> Result<Self> {
        if beliefs.len() < 2 {
            return Err(Error::invalid(format!("need k >= 2 beliefs (got {})", beliefs.len())));
        }
        let order = ranking(&beliefs);
        Ok(Self { beliefs, order })
    }

    /// Builds beliefs directly from posterior means, posterior variances and
    /// sampling variances.
    pub fn from_moments(means: &[f64], post_vars: &[f64], sampling_vars: &[f64]) -> Result<Self> {
        if means.len() != post_vars.len() || means.len() != sampling_vars.len() {
            return Err(Error::invalid("moment vectors must have equal length"));
        }
        let beliefs = means
            .iter()
            .zip(post_vars)
            .zip(sampling_vars)
            .map(|((&m, &v), &s)| GaussianBelief::from_moments(m, v, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(beliefs)
    }

    pub fn k(&self) -> usize {
        self.beliefs.len()
    }

    pub fn beliefs(&self) -> &[GaussianBelief] {
        &self.beliefs
    }

    pub fn get(&self, i: usize) -> &GaussianBelief {
        &self.beliefs[i]
    }

    /// Alternatives by descending posterior mean.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn best(&self) -> usize {
        self.order[0]
    }

    pub fn means(&self) -> Vec<f64> {
        self.beliefs.iter().map(|b| b.post_mean).collect()
    }

    pub fn post_vars(&self) -> Vec<f64> {
        self.beliefs.iter().map(GaussianBelief::post_var).collect()
    }

    pub fn counts(&self) -> Vec<u64> {
        self.beliefs.iter().map(|b| b.count).collect()
    }

    pub fn total_count(&self) -> u64 {
        self.beliefs.iter().map(|b| b.count).sum()
    }

    /// Replaces one belief and refreshes the ranking.
    pub fn set(&mut self, i: usize, belief: GaussianBelief) {
        self.beliefs[i] = belief;
        self.order = ranking(&self.beliefs);
    }

    pub fn into_beliefs(self) -> Vec<GaussianBelief> {
        self.beliefs
    }
}

fn ranking(beliefs: &[GaussianBelief]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..beliefs.len()).collect();
    // Stable sort keeps the lower index first among equal means.
    order.sort_by(|&a, &b| beliefs[b].post_mean.total_cmp(&beliefs[a].post_mean));
    order
}

/// Argmax with ties going to the fewest samples, then the lowest index.
pub(crate) fn argmax_fewest_then_lowest(values: &[f64], counts: &[u64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        let better = values[i] > values[best] || (values[i] == values[best] && counts[i] < counts[best]);
        if better {
            best = i;
        }
    }
    best
}

/// Argmax with ties going to the lowest index.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    crate::bayes::argmax_first(values)
}

/// Equal allocation: round-robin over the alternatives.
pub fn ea_allocate(t: u64, k: usize) -> usize {
    (t % k as u64) as usize
}

/// Sequential allocation rules driven by the current beliefs.
#[derive(Debug, Clone, PartialEq)]
pub enum AllocationRule {
    EqualAllocation,
    Ocba,
    KnowledgeGradient,
    Aoap,
    AoapMultistep { depth: usize },
    TwoFactor(VfaWeights),
}

impl AllocationRule {
    /// Alternative to sample next; `t` is the number of samples taken so far.
    pub fn allocate(&self, beliefs: &BeliefVector, t: u64) -> Result<usize> {
        match self {
            AllocationRule::EqualAllocation => Ok(ea_allocate(t, beliefs.k())),
            AllocationRule::Ocba => ocba_most_starving_allocate(beliefs),
            AllocationRule::KnowledgeGradient => kg_allocate(beliefs),
            AllocationRule::Aoap => aoap_allocate(beliefs),
            AllocationRule::AoapMultistep { depth } => aoap_multistep(beliefs, *depth),
            AllocationRule::TwoFactor(w) => two_factor_allocate(beliefs, w),
        }
    }
}
