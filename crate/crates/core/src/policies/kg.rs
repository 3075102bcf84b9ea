//! Knowledge gradient for independent normal beliefs with known variance.

use super::selection::{std_normal_cdf, std_normal_pdf};
use super::{argmax_lowest, BeliefVector};
use crate::error::{Error, Result};

/// Beyond this `|z|` the asymptotic series for `f` is used.
const ASYMPTOTIC_Z: f64 = 30.0;

/// `ln f(−x)` for `x ≥ 0`, where `f(z) = zΦ(z) + φ(z)`.
fn log_f_neg(x: f64) -> f64 {
    let log_phi = -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln();
    if x < ASYMPTOTIC_Z {
        (std_normal_pdf(x) - x * std_normal_cdf(-x)).ln()
    } else {
        let y = 1.0 / (x * x);
        let series = y * (1.0 - y * (3.0 - y * (15.0 - y * (105.0 - y * 945.0))));
        log_phi + series.ln()
    }
}

/// `ln ν_i`; `−∞` where the predictive change `s̃_i` is zero.
pub fn kg_log_factors(b: &BeliefVector) -> Result<Vec<f64>> {
    let order = b.order();
    let out: Vec<f64> = (0..b.k())
        .map(|i| {
            let x = b.get(i);
            let s2 = x.post_var() - x.next_post_var();
            if !(s2 > 0.0) {
                return f64::NEG_INFINITY;
            }
            let s = s2.sqrt();
            let rival = if order[0] == i { order[1] } else { order[0] };
            let gap = (x.post_mean - b.get(rival).post_mean).abs();
            s.ln() + log_f_neg(gap / s)
        })
        .collect();
    if out.iter().all(|&v| v == f64::NEG_INFINITY) {
        return Err(Error::degenerate("every alternative has zero predictive change"));
    }
    Ok(out)
}

pub fn kg_factors(b: &BeliefVector) -> Result<Vec<f64>> {
    Ok(kg_log_factors(b)?.into_iter().map(f64::exp).collect())
}

pub fn kg_allocate(b: &BeliefVector) -> Result<usize> {
    Ok(argmax_lowest(&kg_log_factors(b)?))
}
