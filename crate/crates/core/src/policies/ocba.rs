//! Most-starving sequential OCBA with plug-in estimates.

use super::{argmax_lowest, BeliefVector, RatioVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OcbaRatios {
    pub ratios: RatioVector,
    /// Set when some gap to the best was zero and had to be replaced by a
    /// machine-epsilon-scale guard.
    pub guarded: bool,
}

/// OCBA ratios for the given means and sampling variances.
///
/// `r_i ∝ σ_i²/δ_i²` for `i ≠ b` and `r_b = σ_b·√(Σ_{i≠b} r_i²/σ_i²)`.
pub fn ocba_ratios(means: &[f64], variances: &[f64]) -> Result<OcbaRatios> {
    let k = means.len();
    if k < 2 || variances.len() != k {
        return Err(Error::invalid("OCBA needs k >= 2 means with matching variances"));
    }
    if variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) || means.iter().any(|m| !m.is_finite()) {
        return Err(Error::invalid("OCBA needs finite means and positive finite variances"));
    }
    let best = crate::bayes::argmax_first(means);
    let guard = f64::EPSILON * means[best].abs().max(1.0);
    let mut guarded = false;
    let mut w = vec![0.0; k];
    for i in (0..k).filter(|&i| i != best) {
        let mut gap = means[best] - means[i];
        if gap < guard {
            gap = guard;
            guarded = true;
        }
        w[i] = variances[i] / (gap * gap);
    }
    // Factor the largest weight out so extreme guards cannot overflow.
    let scale = w.iter().copied().fold(0.0, f64::max);
    for x in &mut w {
        *x /= scale;
    }
    let s: f64 = (0..k).filter(|&i| i != best).map(|i| w[i] * w[i] / variances[i]).sum();
    w[best] = variances[best].sqrt() * s.sqrt();
    Ok(OcbaRatios {
        ratios: RatioVector::from_weights(w)?,
        guarded,
    })
}

/// Samples the alternative with the largest deficit `t·r_i − t_i`.
pub fn ocba_most_starving_allocate(b: &BeliefVector) -> Result<usize> {
    let vars: Vec<f64> = b.beliefs().iter().map(|x| x.sampling_var).collect();
    let r = ocba_ratios(&b.means(), &vars)?.ratios;
    let t = b.total_count() as f64;
    let deficit: Vec<f64> = b.beliefs().iter().enumerate().map(|(i, x)| t * r[i] - x.count as f64).collect();
    Ok(argmax_lowest(&deficit))
}
