//! Allocation on the two-factor VFA `K(w₁·d² + w₂·min ρ²)`.

use super::aoap::{d2_with_vars, rho, shrunk_var};
use super::{argmax_fewest_then_lowest, BeliefVector};
use crate::error::Result;
use crate::vfa::VfaWeights;

/// `(g₁, g₂)` of the state whose posterior variances are `vars`.
///
/// `g₂` is zero when fewer than two non-best alternatives exist.
pub(crate) fn features_with_vars(b: &BeliefVector, vars: &[f64]) -> Result<[f64; 2]> {
    let g1 = d2_with_vars(b, vars)?;
    let best = b.best();
    let rest = &b.order()[1..];
    let mut g2 = f64::INFINITY;
    for (n, &i) in rest.iter().enumerate() {
        for &j in &rest[n + 1..] {
            let r = rho(vars[best], vars[i], vars[j]);
            g2 = g2.min(r * r);
        }
    }
    Ok([g1, if g2.is_finite() { g2 } else { 0.0 }])
}

/// VFA value of the current state.
pub fn two_factor_value(b: &BeliefVector, w: &VfaWeights) -> Result<f64> {
    let g = features_with_vars(b, &b.post_vars())?;
    w.eval(&g)
}

/// Certainty-equivalence one-step maximization of the two-factor VFA.
///
/// The activation is monotone, so the argmax is taken on the linear score;
/// this keeps decisions exact where `1 − e^{−z}` would saturate.
pub fn two_factor_allocate(b: &BeliefVector, w: &VfaWeights) -> Result<usize> {
    w.check()?;
    let mut vars = b.post_vars();
    let scores = (0..b.k())
        .map(|j| {
            let old = vars[j];
            vars[j] = shrunk_var(b.get(j), 1);
            let g = features_with_vars(b, &vars);
            vars[j] = old;
            g.and_then(|g| w.score(&g))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_fewest_then_lowest(&scores, &b.counts()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::aoap_allocate;
    use crate::vfa::Activation;

    #[test]
    fn pair_count_conventions() {
        let b = BeliefVector::from_moments(&[1.0, 0.0, 0.0], &[0.3; 3], &[1.0; 3]).unwrap();
        let g = features_with_vars(&b, &b.post_vars()).unwrap();
        assert!((g[1] - 0.25).abs() < 1e-15);
        let b = BeliefVector::from_moments(&[1.0, 0.0], &[0.3; 2], &[1.0; 2]).unwrap();
        assert_eq!(features_with_vars(&b, &b.post_vars()).unwrap()[1], 0.0);
    }

    #[test]
    fn zero_second_weight_is_aoap() {
        let b = BeliefVector::from_moments(&[0.2, 0.5, -0.1, 0.45], &[0.4, 0.1, 2.0, 0.3], &[1.0, 2.0, 0.5, 1.0])
            .unwrap();
        for act in [Activation::Linear, Activation::Expm] {
            let w = VfaWeights::new(vec![1.0, 0.0], act).unwrap();
            assert_eq!(two_factor_allocate(&b, &w).unwrap(), aoap_allocate(&b).unwrap());
        }
    }

    #[test]
    fn state_value_uses_activation() {
        let b = BeliefVector::from_moments(&[1.0, 0.0, 0.0], &[0.5; 3], &[1.0; 3]).unwrap();
        let lin = two_factor_value(&b, &VfaWeights::new(vec![1.0, 2.0], Activation::Linear).unwrap()).unwrap();
        assert!((lin - (1.0 + 0.5)).abs() < 1e-15);
        let ex = two_factor_value(&b, &VfaWeights::new(vec![1.0, 2.0], Activation::Expm).unwrap()).unwrap();
        assert!((ex - (1.0 - (-1.5f64).exp())).abs() < 1e-15);
    }
}
