//! Certainty-equivalence allocation on the `d²` feature.

use super::{argmax_fewest_then_lowest, BeliefVector};
use crate::bayes::GaussianBelief;
use crate::error::{Error, Result};

/// Default cap on `k^depth` for multi-step look-ahead.
pub const MAX_LOOKAHEAD_PATHS: u64 = 1_000_000;

/// Standardized gaps to the current best.
#[derive(Debug, Clone, PartialEq)]
pub struct Distances {
    pub best: usize,
    /// `(alternative, d_i)` in posterior-mean rank order, best excluded.
    pub d: Vec<(usize, f64)>,
    pub min: f64,
}

/// Posterior variance after `extra` more samples, posterior mean held fixed.
pub(crate) fn shrunk_var(b: &GaussianBelief, extra: u64) -> f64 {
    if extra == 0 {
        b.post_var()
    } else {
        1.0 / (b.post_precision + extra as f64 / b.sampling_var)
    }
}

/// `gap² / var`, with `+∞` for a known positive gap.
fn ratio_term(gap: f64, var: f64, i: usize, best: usize) -> Result<f64> {
    if var > 0.0 {
        Ok(gap * gap / var)
    } else if gap > 0.0 {
        Ok(f64::INFINITY)
    } else {
        Err(Error::degenerate(format!(
            "alternatives {best} and {i} have equal means and zero posterior variance"
        )))
    }
}

/// `d²` of the state where each belief's variance is `vars[i]`.
pub(crate) fn d2_with_vars(b: &BeliefVector, vars: &[f64]) -> Result<f64> {
    let best = b.best();
    let mb = b.get(best).post_mean;
    let mut min = f64::INFINITY;
    for &i in &b.order()[1..] {
        let term = ratio_term(mb - b.get(i).post_mean, vars[best] + vars[i], i, best)?;
        min = min.min(term);
    }
    Ok(min)
}

pub fn distance_feature(b: &BeliefVector) -> Result<Distances> {
    let best = b.best();
    let mb = b.get(best).post_mean;
    let vb = b.get(best).post_var();
    let mut d = Vec::with_capacity(b.k() - 1);
    for &i in &b.order()[1..] {
        let gap = mb - b.get(i).post_mean;
        let di = ratio_term(gap, vb + b.get(i).post_var(), i, best)?.sqrt();
        d.push((i, di));
    }
    let min = d.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    Ok(Distances { best, d, min })
}

/// Correlation between `μ_b − μ_i` and `μ_b − μ_j` induced by the current
/// best's posterior variance; zero when that variance is zero.
pub fn induced_correlation(b: &BeliefVector, i: usize, j: usize) -> Result<f64> {
    let best = b.best();
    if i == j || i == best || j == best || i >= b.k() || j >= b.k() {
        return Err(Error::invalid(format!(
            "induced correlation needs distinct non-best indices (got {i}, {j}; best {best})"
        )));
    }
    Ok(rho(b.get(best).post_var(), b.get(i).post_var(), b.get(j).post_var()))
}

pub(crate) fn rho(vb: f64, vi: f64, vj: f64) -> f64 {
    if vb == 0.0 {
        0.0
    } else {
        vb / ((vb + vi).sqrt() * (vb + vj).sqrt())
    }
}

/// One-step look-ahead values `V̂_t(E_t; i)` for every alternative.
pub fn aoap_values(b: &BeliefVector) -> Result<Vec<f64>> {
    let mut vars = b.post_vars();
    (0..b.k())
        .map(|j| {
            let old = vars[j];
            vars[j] = shrunk_var(b.get(j), 1);
            let v = d2_with_vars(b, &vars);
            vars[j] = old;
            v
        })
        .collect()
}

pub fn aoap_allocate(b: &BeliefVector) -> Result<usize> {
    Ok(argmax_fewest_then_lowest(&aoap_values(b)?, &b.counts()))
}

/// `depth`-step certainty-equivalence look-ahead; `depth == 1` is AOAP.
pub fn aoap_multistep(b: &BeliefVector, depth: usize) -> Result<usize> {
    aoap_multistep_capped(b, depth, MAX_LOOKAHEAD_PATHS)
}

pub(crate) fn aoap_multistep_capped(b: &BeliefVector, depth: usize, cap: u64) -> Result<usize> {
    if depth == 0 {
        return Err(Error::invalid("look-ahead depth must be >= 1"));
    }
    let paths = (b.k() as u64).checked_pow(depth as u32).filter(|&p| p <= cap);
    if paths.is_none() {
        return Err(Error::EnumerationTooLarge {
            paths: format!("{}^{}", b.k(), depth),
            cap: cap as usize,
        });
    }
    let mut extra = vec![0u64; b.k()];
    let mut vars = b.post_vars();
    let values = (0..b.k())
        .map(|i| {
            extra[i] += 1;
            vars[i] = shrunk_var(b.get(i), extra[i]);
            let v = lookahead(b, depth - 1, &mut extra, &mut vars);
            extra[i] -= 1;
            vars[i] = shrunk_var(b.get(i), extra[i]);
            v
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_fewest_then_lowest(&values, &b.counts()))
}

fn lookahead(b: &BeliefVector, remaining: usize, extra: &mut [u64], vars: &mut [f64]) -> Result<f64> {
    if remaining == 0 {
        return d2_with_vars(b, vars);
    }
    let mut best = f64::NEG_INFINITY;
    for i in 0..b.k() {
        extra[i] += 1;
        vars[i] = shrunk_var(b.get(i), extra[i]);
        let v = lookahead(b, remaining - 1, extra, vars);
        extra[i] -= 1;
        vars[i] = shrunk_var(b.get(i), extra[i]);
        best = best.max(v?);
    }
    Ok(best)
}
