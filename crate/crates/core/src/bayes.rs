//! Conjugate belief models.
//!
//! Two families are supported: Beta priors for Bernoulli sampling and normal
//! priors for normal sampling with known variance. Both keep their sufficient
//! statistics next to the hyper-parameters, so a posterior can be rebuilt in
//! one batch step (for example after the sampling variance estimate changes).
//!
//! Uninformative priors are encoded as zero prior precision (normal) and
//! `alpha = beta = 0` (Beta). A point-mass normal prior (zero variance) is
//! encoded as infinite precision and never moves.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Beta posterior for one Bernoulli alternative.
///
/// `alpha` and `beta` are always recomputed from the prior and the counts,
/// so they equal `alpha0 + successes` and `beta0 + failures` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBelief {
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub count: u64,
    pub successes: u64,
}

impl BetaBelief {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::invalid(format!(
                "beta prior needs finite alpha, beta >= 0 (got {alpha}, {beta})"
            )));
        }
        Ok(Self {
            alpha0: alpha,
            beta0: beta,
            alpha,
            beta,
            count: 0,
            successes: 0,
        })
    }

    pub fn uninformative() -> Self {
        Self::new(0.0, 0.0).expect("zero prior is valid")
    }

    pub fn update(&self, obs: bool) -> Self {
        let count = self.count + 1;
        let successes = self.successes + u64::from(obs);
        Self {
            alpha: self.alpha0 + successes as f64,
            beta: self.beta0 + (count - successes) as f64,
            count,
            successes,
            ..*self
        }
    }

    /// Predictive success probability `alpha / (alpha + beta)`.
    pub fn predictive(&self) -> Result<f64> {
        let total = self.alpha + self.beta;
        if total <= 0.0 {
            return Err(Error::degenerate(
                "uninformative beta prior with no observations has no predictive",
            ));
        }
        Ok(self.alpha / total)
    }

    pub fn sample_mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.successes as f64 / self.count as f64)
    }
}

/// Normal prior on an unknown mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrior {
    pub mean: f64,
    /// Prior precision `1 / var`; zero is uninformative, infinity a point mass.
    pub precision: f64,
}

impl GaussianPrior {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid(format!("prior mean must be finite (got {mean})")));
        }
        if !(std >= 0.0) {
            return Err(Error::invalid(format!("prior std must be >= 0 (got {std})")));
        }
        Ok(Self {
            mean,
            precision: 1.0 / (std * std),
        })
    }

    pub fn uninformative() -> Self {
        Self {
            mean: 0.0,
            precision: 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        1.0 / self.precision
    }
}

/// Posterior on the mean of one normal alternative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    pub prior: GaussianPrior,
    pub post_mean: f64,
    /// Posterior precision; `post_var()` is its reciprocal.
    pub post_precision: f64,
    pub count: u64,
    pub sampling_var: f64,
    pub sum_obs: f64,
    /// Running sum of squared deviations from the sample mean (Welford).
    pub sq_dev: f64,
}

fn check_sampling_var(sampling_var: f64) -> Result<()> {
    if sampling_var > 0.0 && sampling_var.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "sampling variance must be finite and > 0 (got {sampling_var})"
        )))
    }
}

impl GaussianBelief {
    pub fn new(prior: GaussianPrior, sampling_var: f64) -> Result<Self> {
        check_sampling_var(sampling_var)?;
        let post_mean = if prior.precision == 0.0 { 0.0 } else { prior.mean };
        Ok(Self {
            prior,
            post_mean,
            post_precision: prior.precision,
            count: 0,
            sampling_var,
            sum_obs: 0.0,
            sq_dev: 0.0,
        })
    }

    /// Belief with explicit posterior moments and no recorded data; handy for
    /// policy computations on hand-built states.
    pub fn from_moments(post_mean: f64, post_var: f64, sampling_var: f64) -> Result<Self> {
        let prior = GaussianPrior {
            mean: post_mean,
            precision: 1.0 / post_var,
        };
        if !post_mean.is_finite() || !(post_var >= 0.0) {
            return Err(Error::invalid(format!(
                "posterior moments must be finite with var >= 0 (got {post_mean}, {post_var})"
            )));
        }
        Self::new(prior, sampling_var)
    }

    pub fn post_var(&self) -> f64 {
        1.0 / self.post_precision
    }

    pub fn post_std(&self) -> f64 {
        self.post_var().sqrt()
    }

    pub fn sample_mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum_obs / self.count as f64)
    }

    /// Unbiased sample variance of the recorded observations (needs two).
    pub fn sample_variance(&self) -> Option<f64> {
        (self.count > 1).then(|| self.sq_dev / (self.count - 1) as f64)
    }

    /// Posterior variance after one more observation, without observing it.
    pub fn next_post_var(&self) -> f64 {
        1.0 / (self.post_precision + 1.0 / self.sampling_var)
    }

    /// Sequential conjugate update with one observation.
    pub fn update(&self, obs: f64) -> Result<Self> {
        if !obs.is_finite() {
            return Err(Error::NonFinite(format!("observation {obs}")));
        }
        let obs_precision = 1.0 / self.sampling_var;
        let post_precision = self.post_precision + obs_precision;
        let post_mean = if self.post_precision.is_infinite() {
            self.post_mean
        } else {
            (self.post_precision * self.post_mean + obs_precision * obs) / post_precision
        };
        let count = self.count + 1;
        let old_mean = self.sample_mean().unwrap_or(obs);
        let sum_obs = self.sum_obs + obs;
        let new_mean = sum_obs / count as f64;
        Ok(Self {
            post_mean,
            post_precision,
            count,
            sum_obs,
            sq_dev: self.sq_dev + (obs - old_mean) * (obs - new_mean),
            ..*self
        })
    }

    /// Rebuilds the posterior from the prior and the recorded data under a new
    /// sampling variance (plug-in variance refresh).
    pub fn with_sampling_var(&self, sampling_var: f64) -> Result<Self> {
        check_sampling_var(sampling_var)?;
        let (post_mean, post_precision) =
            batch_moments(self.prior, sampling_var, self.count, self.sum_obs);
        Ok(Self {
            post_mean,
            post_precision,
            sampling_var,
            ..*self
        })
    }

    /// Predictive distribution of the next observation as `(mean, var)`.
    pub fn predictive(&self) -> (f64, f64) {
        (self.post_mean, self.sampling_var + self.post_var())
    }
}

fn batch_moments(prior: GaussianPrior, sampling_var: f64, n: u64, sum: f64) -> (f64, f64) {
    let data_precision = n as f64 / sampling_var;
    let precision = prior.precision + data_precision;
    let mean = if prior.precision.is_infinite() {
        prior.mean
    } else if precision == 0.0 {
        0.0
    } else {
        (prior.precision * prior.mean + sum / sampling_var) / precision
    };
    (mean, precision)
}

/// Posterior after `n` observations with the given sample mean, in one step.
///
/// The squared-deviation statistic is unknown from `(n, mean)` alone and is
/// left at zero.
pub fn normal_batch_posterior(
    prior: GaussianPrior,
    sampling_var: f64,
    n: u64,
    sample_mean: f64,
) -> Result<GaussianBelief> {
    let base = GaussianBelief::new(prior, sampling_var)?;
    if n == 0 {
        return Ok(base);
    }
    if !sample_mean.is_finite() {
        return Err(Error::NonFinite(format!("sample mean {sample_mean}")));
    }
    let sum_obs = sample_mean * n as f64;
    let (post_mean, post_precision) = batch_moments(prior, sampling_var, n, sum_obs);
    Ok(GaussianBelief {
        post_mean,
        post_precision,
        count: n,
        sum_obs,
        ..base
    })
}

/// True means and sampling variances of the alternatives.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl GroundTruth {
    pub fn new(means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if means.len() < 2 || means.len() != variances.len() {
            return Err(Error::invalid(format!(
                "ground truth needs k >= 2 equal-length means and variances (got {} and {})",
                means.len(),
                variances.len()
            )));
        }
        if means.iter().any(|m| !m.is_finite())
            || variances.iter().any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::invalid("ground truth entries must be finite, variances >= 0"));
        }
        Ok(Self { means, variances })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn std(&self, i: usize) -> f64 {
        self.variances[i].sqrt()
    }

    /// Index of the largest true mean (lowest index on ties).
    pub fn best(&self) -> usize {
        argmax_first(&self.means)
    }
}

pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Independent normal prior over the alternatives' means plus their sampling
/// standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalPriorSpec {
    pub prior_means: Vec<f64>,
    pub prior_stds: Vec<f64>,
    pub sampling_stds: Vec<f64>,
}

impl NormalPriorSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.prior_means.len();
        if k < 2 || self.prior_stds.len() != k || self.sampling_stds.len() != k {
            return Err(Error::invalid(format!(
                "prior spec needs k >= 2 and equal lengths (got {}, {}, {})",
                k,
                self.prior_stds.len(),
                self.sampling_stds.len()
            )));
        }
        if let Some(s) = self.prior_stds.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("prior std must be finite and >= 0 (got {s})")));
        }
        if let Some(s) = self.sampling_stds.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("sampling std must be finite and >= 0 (got {s})")));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.prior_means.len()
    }

    pub fn prior(&self, i: usize) -> Result<GaussianPrior> {
        GaussianPrior::new(self.prior_means[i], self.prior_stds[i])
    }
}

/// Draws true means independently from the prior.
pub fn sample_ground_truth<R: Rng + ?Sized>(spec: &NormalPriorSpec, rng: &mut R) -> Result<GroundTruth> {
    spec.validate()?;
    let means = spec
        .prior_means
        .iter()
        .zip(&spec.prior_stds)
        .map(|(&m, &s)| {
            let z: f64 = rng.sample(StandardNormal);
            m + s * z
        })
        .collect();
    let variances = spec.sampling_stds.iter().map(|s| s * s).collect();
    GroundTruth::new(means, variances)
}

/// One observation of alternative `i` (zero-based).
pub fn sample_observation<R: Rng + ?Sized>(truth: &GroundTruth, i: usize, rng: &mut R) -> Result<f64> {
    if i >= truth.k() {
        return Err(Error::invalid(format!(
            "alternative index {i} out of range for k = {}",
            truth.k()
        )));
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(truth.means[i] + truth.std(i) * z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn beta_update_increments() {
        let b = BetaBelief::new(1.0, 1.0).unwrap().update(true);
        assert_eq!((b.alpha, b.beta, b.count), (2.0, 1.0, 1));
        assert_eq!(BetaBelief::new(1.0, 1.0).unwrap().predictive().unwrap(), 0.5);
    }

    #[test]
    fn beta_uninformative_predictive_is_sample_mean() {
        let b = BetaBelief::uninformative();
        assert!(matches!(b.predictive(), Err(Error::Degenerate(_))));
        let b = b.update(true).update(true).update(false);
        assert!(close(b.predictive().unwrap(), 2.0 / 3.0, 1e-15));
        assert_eq!(b.sample_mean(), Some(2.0 / 3.0));
    }

    #[test]
    fn beta_predictive_examples() {
        assert!(close(BetaBelief::new(2.0, 1.0).unwrap().predictive().unwrap(), 2.0 / 3.0, 1e-15));
        assert_eq!(BetaBelief::new(3.0, 1.0).unwrap().predictive().unwrap(), 0.75);
        for c in [0.1, 1.0, 7.5] {
            assert_eq!(BetaBelief::new(c, c).unwrap().predictive().unwrap(), 0.5);
        }
        assert!(BetaBelief::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn normal_update_examples() {
        let b = GaussianBelief::new(GaussianPrior::new(0.0, 1.0).unwrap(), 1.0).unwrap();
        let b1 = b.update(2.0).unwrap();
        assert!(close(b1.post_mean, 1.0, 1e-15));
        assert!(close(b1.post_var(), 0.5, 1e-15));
        assert_eq!(b1.count, 1);

        let fixed = b.update(0.0).unwrap();
        assert_eq!(fixed.post_mean, 0.0);

        let u = GaussianBelief::new(GaussianPrior::uninformative(), 2.5).unwrap();
        let u1 = u.update(3.25).unwrap();
        assert_eq!(u1.post_mean, 3.25);
        assert_eq!(u1.post_var(), 2.5);
        assert!(matches!(b.update(f64::NAN), Err(Error::NonFinite(_))));
    }

    #[test]
    fn point_mass_prior_never_moves() {
        let b = GaussianBelief::new(GaussianPrior::new(0.7, 0.0).unwrap(), 1.0).unwrap();
        let b = b.update(100.0).unwrap().update(-3.0).unwrap();
        assert_eq!(b.post_mean, 0.7);
        assert_eq!(b.post_var(), 0.0);
    }

    #[test]
    fn batch_posterior_examples() {
        let prior = GaussianPrior::new(0.0, 1.0).unwrap();
        let b0 = normal_batch_posterior(prior, 1.0, 0, 123.0).unwrap();
        assert_eq!(b0, GaussianBelief::new(prior, 1.0).unwrap());
        let b1 = normal_batch_posterior(prior, 1.0, 1, 2.0).unwrap();
        assert!(close(b1.post_mean, 1.0, 1e-15) && close(b1.post_var(), 0.5, 1e-15));
        let b3 = normal_batch_posterior(prior, 1.0, 3, 1.0).unwrap();
        assert!(close(b3.post_mean, 0.75, 1e-15) && close(b3.post_var(), 0.25, 1e-15));
    }

    #[test]
    fn predictive_examples() {
        let b = GaussianBelief::from_moments(1.0, 0.5, 1.0).unwrap();
        assert_eq!(b.predictive(), (1.0, 1.5));
        let b = GaussianBelief::from_moments(0.3, 0.0, 2.0).unwrap();
        assert_eq!(b.predictive().1, 2.0);
        let b = GaussianBelief::new(GaussianPrior::new(0.0, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(b.predictive(), (0.0, 2.0));
    }

    #[test]
    fn refresh_recomputes_from_sufficient_statistics() {
        let prior = GaussianPrior::new(0.5, 2.0).unwrap();
        let mut b = GaussianBelief::new(prior, 1.0).unwrap();
        for x in [1.0, -0.5, 2.0, 0.25] {
            b = b.update(x).unwrap();
        }
        let refreshed = b.with_sampling_var(3.0).unwrap();
        let mut direct = GaussianBelief::new(prior, 3.0).unwrap();
        for x in [1.0, -0.5, 2.0, 0.25] {
            direct = direct.update(x).unwrap();
        }
        assert!(close(refreshed.post_mean, direct.post_mean, 1e-12));
        assert!(close(refreshed.post_var(), direct.post_var(), 1e-12));
        let sv = b.sample_variance().unwrap();
        let xs = [1.0f64, -0.5, 2.0, 0.25];
        let m = xs.iter().sum::<f64>() / 4.0;
        let expect = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 3.0;
        assert!(close(sv, expect, 1e-12));
    }

    #[test]
    fn degenerate_prior_truth_is_prior_mean() {
        let spec = NormalPriorSpec {
            prior_means: vec![0.5, -1.0, 2.0],
            prior_stds: vec![0.0; 3],
            sampling_stds: vec![1.0; 3],
        };
        let t = sample_ground_truth(&spec, &mut stream(1, &[])).unwrap();
        assert_eq!(t.means, spec.prior_means);
        let bad = NormalPriorSpec {
            prior_stds: vec![1.0, -0.1, 1.0],
            ..spec
        };
        assert!(sample_ground_truth(&bad, &mut stream(1, &[])).is_err());
    }

    #[test]
    fn ground_truth_is_deterministic_per_stream() {
        let spec = NormalPriorSpec {
            prior_means: vec![0.0; 4],
            prior_stds: vec![1.0; 4],
            sampling_stds: vec![1.0; 4],
        };
        let a = sample_ground_truth(&spec, &mut stream(9, &[1])).unwrap();
        let b = sample_ground_truth(&spec, &mut stream(9, &[1])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ground_truth_matches_prior_moments() {
        let spec = NormalPriorSpec {
            prior_means: vec![0.0; 2],
            prior_stds: vec![1.0; 2],
            sampling_stds: vec![1.0; 2],
        };
        let mut rng = stream(11, &[]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_ground_truth(&spec, &mut rng).unwrap().means[0])
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = 1.0 / (n as f64).sqrt();
        let se_std = 1.0 / (2.0 * n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se_mean, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 3.0 * se_std, "std {}", var.sqrt());
    }

    #[test]
    fn observations() {
        let t = GroundTruth::new(vec![1.5, -2.0], vec![0.0, 4.0]).unwrap();
        let mut rng = stream(3, &[]);
        assert_eq!(sample_observation(&t, 0, &mut rng).unwrap(), 1.5);
        assert!(sample_observation(&t, 2, &mut rng).is_err());

        let n = 100_000;
        let mean = (0..n)
            .map(|_| sample_observation(&t, 1, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean + 2.0).abs() < 3.0 * 2.0 / (n as f64).sqrt(), "mean {mean}");

        let a = sample_observation(&t, 1, &mut stream(5, &[2])).unwrap();
        let b = sample_observation(&t, 1, &mut stream(5, &[2])).unwrap();
        assert_eq!(a, b);
    }
}
