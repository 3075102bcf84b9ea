//! Value function approximation `V̄(E; w) = K(Σ w_j g_j(E))` and its fit by
//! gradient-based Monte Carlo learning (projected stochastic approximation).

use crate::error::{Error, Result};
use crate::experiment::{simulate, Scenario};
use crate::policies::{two_factor, AllocationRule, BeliefVector};
use crate::rng::{self, ReplicationStream};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DEFAULT_BOX_BOUND: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Linear,
    /// `K(z) = 1 − e^{−z}`.
    Expm,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Expm => -(-z).exp_m1(),
        }
    }

    /// `K'(z)`.
    pub fn slope(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Expm => (-z).exp(),
        }
    }
}

/// Feature weights constrained to the box `[0, w̄]^τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VfaWeights {
    pub w: Vec<f64>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default = "default_box_bound")]
    pub box_bound: f64,
}

fn default_box_bound() -> f64 {
    DEFAULT_BOX_BOUND
}

impl VfaWeights {
    pub fn new(w: Vec<f64>, activation: Activation) -> Result<Self> {
        Self::with_bound(w, activation, DEFAULT_BOX_BOUND)
    }

    pub fn with_bound(w: Vec<f64>, activation: Activation, box_bound: f64) -> Result<Self> {
        let out = Self {
            w,
            activation,
            box_bound,
        };
        out.check()?;
        Ok(out)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.box_bound > 0.0) || !self.box_bound.is_finite() {
            return Err(Error::invalid(format!("box bound must be finite and > 0 (got {})", self.box_bound)));
        }
        if self.w.iter().any(|&x| !(x >= 0.0 && x <= self.box_bound)) {
            return Err(Error::invalid(format!(
                "weights must lie in [0, {}] (got {:?})",
                self.box_bound, self.w
            )));
        }
        Ok(())
    }

    /// Pre-activation score `Σ w_j g_j`.
    pub fn score(&self, g: &[f64]) -> Result<f64> {
        if g.len() != self.w.len() {
            return Err(Error::invalid(format!(
                "{} features for {} weights",
                g.len(),
                self.w.len()
            )));
        }
        Ok(self.w.iter().zip(g).map(|(w, g)| w * g).sum())
    }

    pub fn eval(&self, g: &[f64]) -> Result<f64> {
        Ok(self.activation.apply(self.score(g)?))
    }

    fn project(&mut self) {
        for x in &mut self.w {
            *x = x.clamp(0.0, self.box_bound);
        }
    }
}

/// Two-factor features `(d², min ρ²)` of the current state.
pub fn features(b: &BeliefVector) -> Result<[f64; 2]> {
    two_factor::features_with_vars(b, &b.post_vars())
}

pub fn vfa_eval(w: &VfaWeights, g: &[f64]) -> Result<f64> {
    w.eval(g)
}

/// Single-run gradient `(V̄ − 1{correct})·∇_w V̄`.
pub fn gmcl_gradient(g: &[f64], correct: bool, w: &VfaWeights) -> Result<Vec<f64>> {
    let z = w.score(g)?;
    let residual = w.activation.apply(z) - if correct { 1.0 } else { 0.0 };
    let slope = w.activation.slope(z);
    Ok(g.iter().map(|&x| residual * slope * x).collect())
}

/// Terminal features of one simulated replication and whether the
/// posterior-mean selection was correct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub g: Vec<f64>,
    pub correct: bool,
}

/// Projected SA settings; the step is `λ_l = step_scale · l^{−step_exponent}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaConfig {
    pub step_scale: f64,
    pub step_exponent: f64,
    pub iterations: usize,
    pub initial_w: Vec<f64>,
    pub activation: Activation,
    pub box_bound: f64,
    pub seed: u64,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            step_scale: 10.0,
            step_exponent: 2.0 / 3.0,
            iterations: 10_000,
            initial_w: vec![1.0, 1.0],
            activation: Activation::Linear,
            box_bound: DEFAULT_BOX_BOUND,
            seed: 0,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_scale > 0.0) || !(self.step_exponent > 0.5 && self.step_exponent <= 1.0) {
            return Err(Error::invalid(format!(
                "step sequence needs scale > 0 and exponent in (0.5, 1] (got {}, {})",
                self.step_scale, self.step_exponent
            )));
        }
        VfaWeights::with_bound(self.initial_w.clone(), self.activation, self.box_bound)?;
        Ok(())
    }

    pub fn step(&self, l: usize) -> f64 {
        self.step_scale * (l as f64).powf(-self.step_exponent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaOutcome {
    pub weights: VfaWeights,
    /// `(V̄ − 1{correct})²` at each iterate, before its update.
    pub sq_residuals: Vec<f64>,
}

/// Runs projected SA where `draw(l)` supplies the sample for iteration `l`.
pub fn stochastic_approximation<F>(config: &SaConfig, mut draw: F) -> Result<SaOutcome>
where
    F: FnMut(usize) -> Result<Sample>,
{
    config.validate()?;
    let mut w = VfaWeights::with_bound(config.initial_w.clone(), config.activation, config.box_bound)?;
    let mut sq_residuals = Vec::with_capacity(config.iterations);
    for l in 1..=config.iterations {
        let s = draw(l)?;
        let residual = w.eval(&s.g)? - if s.correct { 1.0 } else { 0.0 };
        sq_residuals.push(residual * residual);
        let d = gmcl_gradient(&s.g, s.correct, &w)?;
        let step = config.step(l);
        // Descent: the iterate moves against the gradient of the squared error.
        for (x, dx) in w.w.iter_mut().zip(&d) {
            *x -= step * dx;
        }
        if w.w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("SA iterate {l}: {:?} after gradient {d:?}", w.w)));
        }
        w.project();
    }
    Ok(SaOutcome { weights: w, sq_residuals })
}

/// Simulates one replication with the generator to `horizon` and returns
/// its terminal sample.
pub fn replication_sample(
    scenario: &Scenario,
    generator: &AllocationRule,
    horizon: u64,
    stream: &ReplicationStream,
) -> Result<Sample> {
    let rep = simulate(scenario, generator, horizon, stream, false)?;
    Ok(Sample {
        g: features(&rep.beliefs)?.to_vec(),
        correct: rep.beliefs.best() == rep.truth.best(),
    })
}

/// G-MCL: each SA iteration is driven by a fresh replication generated
/// independently of `w`.
pub fn gmcl_fit(scenario: &Scenario, horizon: u64, generator: &AllocationRule, config: &SaConfig) -> Result<SaOutcome> {
    stochastic_approximation(config, |l| {
        let stream = ReplicationStream::new(config.seed, rng::stage::VFA_FIT, l as u64);
        replication_sample(scenario, generator, horizon, &stream)
    })
}

/// Fits separate weights for each listed horizon (the nonstationary mode).
pub fn gmcl_fit_per_step(
    scenario: &Scenario,
    horizons: &[u64],
    generator: &AllocationRule,
    config: &SaConfig,
) -> Result<Vec<(u64, VfaWeights)>> {
    horizons
        .iter()
        .map(|&h| {
            let cfg = SaConfig {
                seed: rng::derive_seed(config.seed, &[h]),
                ..config.clone()
            };
            Ok((h, gmcl_fit(scenario, h, generator, &cfg)?.weights))
        })
        .collect()
}

/// Independent replications with the generator, for frozen-set work.
pub fn frozen_samples(
    scenario: &Scenario,
    generator: &AllocationRule,
    horizon: u64,
    n: usize,
    seed: u64,
) -> Result<Vec<Sample>> {
    use rayon::prelude::*;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let stream = ReplicationStream::new(seed, rng::stage::FROZEN_SET, i);
            replication_sample(scenario, generator, horizon, &stream)
        })
        .collect()
}

/// SA over a frozen set, drawing a uniformly random member per iteration.
pub fn sa_on_samples(samples: &[Sample], config: &SaConfig) -> Result<SaOutcome> {
    if samples.is_empty() {
        return Err(Error::invalid("empty sample set"));
    }
    let mut rng = rng::stream(config.seed, &[rng::stage::SA_RESAMPLE]);
    stochastic_approximation(config, |_| Ok(samples[rng.random_range(0..samples.len())].clone()))
}

/// Empirical objective `mean (V̄ − 1{correct})²`.
pub fn empirical_objective(samples: &[Sample], w: &VfaWeights) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        let r = w.eval(&s.g)? - if s.correct { 1.0 } else { 0.0 };
        total += r * r;
    }
    Ok(total / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsqFit {
    pub w: Vec<f64>,
    pub objective: f64,
    /// Smallest eigenvalue of `2·mean(g gᵀ)`.
    pub hessian_min_eigenvalue: f64,
}

fn design(samples: &[Sample]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let tau = samples.first().map(|s| s.g.len()).ok_or_else(|| Error::invalid("empty sample set"))?;
    if tau == 0 || samples.iter().any(|s| s.g.len() != tau) {
        return Err(Error::invalid("samples must share a nonzero feature count"));
    }
    let n = samples.len() as f64;
    let mut gram = DMatrix::zeros(tau, tau);
    let mut rhs = DVector::zeros(tau);
    for s in samples {
        let g = DVector::from_column_slice(&s.g);
        gram += &g * g.transpose();
        if s.correct {
            rhs += g;
        }
    }
    Ok((gram / n, rhs / n))
}

/// Box-constrained linear least squares of the indicators on the features,
/// solved exactly by enumerating which coordinates sit at a bound.
pub fn linear_lsq_oracle(samples: &[Sample], box_bound: f64) -> Result<LsqFit> {
    let (gram, rhs) = design(samples)?;
    let tau = gram.nrows();
    if tau > 12 {
        return Err(Error::invalid("active-set enumeration supports at most 12 features"));
    }
    let eig = SymmetricEigen::new(&gram * 2.0).eigenvalues;
    let min_eig = eig.min();
    let max_eig = eig.max();
    if min_eig < -1e-10 {
        return Err(Error::NonFinite(format!("empirical Hessian has eigenvalue {min_eig}")));
    }
    if !(max_eig > 0.0) || min_eig <= 1e-14 * max_eig {
        return Err(Error::degenerate(format!(
            "singular design: Hessian eigenvalues in [{min_eig}, {max_eig}]"
        )));
    }
    let y_mean = samples.iter().filter(|s| s.correct).count() as f64 / samples.len() as f64;
    // mean (g·w − y)² = wᵀGw − 2 wᵀr + mean y², with y² = y.
    let objective = |w: &DVector<f64>| (w.transpose() * &gram * w)[(0, 0)] - 2.0 * w.dot(&rhs) + y_mean;

    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(tau as u32) {
        // Coordinate state: 0 free, 1 at zero, 2 at the upper bound.
        let mut state = vec![0u8; tau];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let free: Vec<usize> = (0..tau).filter(|&j| state[j] == 0).collect();
        let mut w = DVector::from_fn(tau, |j, _| if state[j] == 2 { box_bound } else { 0.0 });
        if !free.is_empty() {
            let a = DMatrix::from_fn(free.len(), free.len(), |r, c| gram[(free[r], free[c])]);
            let b = DVector::from_fn(free.len(), |r, _| {
                let j = free[r];
                rhs[j] - (0..tau).filter(|&m| state[m] == 2).map(|m| gram[(j, m)] * box_bound).sum::<f64>()
            });
            let Some(chol) = a.cholesky() else { continue };
            let x = chol.solve(&b);
            for (r, &j) in free.iter().enumerate() {
                w[j] = x[r];
            }
            if free.iter().any(|&j| !(w[j] >= 0.0 && w[j] <= box_bound)) {
                continue;
            }
        }
        let f = objective(&w);
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, w));
        }
    }
    let (objective, w) = best.expect("the all-at-zero vertex is always feasible");
    Ok(LsqFit {
        w: w.iter().copied().collect(),
        objective: objective.max(0.0),
        hessian_min_eigenvalue: min_eig,
    })
}

/// Fitted weights with the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub weights: VfaWeights,
    pub scenario: String,
    pub horizon: u64,
    pub generator: String,
    pub sa: SaConfig,
}

impl WeightsFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let out: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        out.weights.check()?;
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("weights serialize");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
