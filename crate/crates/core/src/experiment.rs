//! Macro-replication harness for integrated PCS curves.
//!
//! Every replication draws its ground truth from the prior, warms up with
//! `n0` round-robin samples per alternative and then follows the policy to
//! the horizon, recording whether the posterior-mean selection is correct.
//! Replication `i` of a stage always uses the streams derived from
//! `(master_seed, stage, i)`, so results do not depend on thread count and
//! every policy sees the same truths and warmup data.

use crate::bayes::{sample_ground_truth, sample_observation, GaussianBelief, GroundTruth, NormalPriorSpec};
use crate::error::{Error, Result};
use crate::policies::{AllocationRule, BeliefVector};
use crate::rng::{self, ReplicationStream};
use crate::vfa::{self, SaConfig, VfaWeights, WeightsFile};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// The true sampling variances.
    Known,
    /// Sample variances after warmup, then fixed.
    PluginFrozen,
    /// Sample variances over all observations, refreshed on every sample.
    #[default]
    PluginRefresh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub k: usize,
    pub prior_means: Vec<f64>,
    pub prior_stds: Vec<f64>,
    pub sampling_stds: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub n0: u64,
    pub macro_reps: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub variance_mode: VarianceMode,
}

pub const DEFAULT_MACRO_REPS: u64 = 10_000;
pub const BUILTIN_SCENARIOS: [&str; 3] = ["example1", "example2-lowconf", "example2-midconf"];

impl Scenario {
    /// Ten alternatives, standard normal priors, unit sampling noise.
    pub fn example1() -> Self {
        Self {
            name: "example1".into(),
            k: 10,
            prior_means: vec![0.0; 10],
            prior_stds: vec![1.0; 10],
            sampling_stds: vec![1.0; 10],
            horizon: 400,
            n0: 10,
            macro_reps: DEFAULT_MACRO_REPS,
            master_seed: 1,
            variance_mode: VarianceMode::default(),
        }
    }

    fn low_confidence(name: &str, first_std: f64, other_std: f64) -> Self {
        let mut prior_stds = vec![other_std; 10];
        prior_stds[0] = first_std;
        Self {
            name: name.into(),
            prior_stds,
            horizon: 200,
            master_seed: 2,
            ..Self::example1()
        }
    }

    pub fn example2_lowconf() -> Self {
        Self::low_confidence("example2-lowconf", 0.02, 0.01)
    }

    pub fn example2_midconf() -> Self {
        Self::low_confidence("example2-midconf", 0.08, 0.04)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "example1" => Ok(Self::example1()),
            "example2-lowconf" => Ok(Self::example2_lowconf()),
            "example2-midconf" => Ok(Self::example2_midconf()),
            other => Err(Error::invalid(format!(
                "unknown scenario {other:?} (built-ins: {})",
                BUILTIN_SCENARIOS.join(", ")
            ))),
        }
    }

    /// A built-in name, or a path to a JSON scenario object.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if BUILTIN_SCENARIOS.contains(&name_or_path) {
            return Self::builtin(name_or_path);
        }
        let path = Path::new(name_or_path);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: name_or_path.to_string(),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    /// Samples taken once warmup ends.
    pub fn warmup_total(&self) -> u64 {
        self.k as u64 * self.n0
    }

    pub fn prior_spec(&self) -> NormalPriorSpec {
        NormalPriorSpec {
            prior_means: self.prior_means.clone(),
            prior_stds: self.prior_stds.clone(),
            sampling_stds: self.sampling_stds.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.prior_spec();
        spec.validate()?;
        if spec.k() != self.k {
            return Err(Error::invalid(format!("k = {} but {} alternatives given", self.k, spec.k())));
        }
        if self.n0 == 0 {
            return Err(Error::invalid("warmup n0 must be >= 1"));
        }
        if self.variance_mode != VarianceMode::Known && self.n0 < 2 {
            return Err(Error::invalid("plug-in variances need n0 >= 2"));
        }
        if self.horizon < self.warmup_total() {
            return Err(Error::invalid(format!(
                "horizon T = {} is below the warmup total k*n0 = {}",
                self.horizon,
                self.warmup_total()
            )));
        }
        if self.macro_reps == 0 {
            return Err(Error::invalid("macro_reps must be >= 1"));
        }
        Ok(())
    }
}

/// End state of one simulated replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub truth: GroundTruth,
    pub beliefs: BeliefVector,
    /// Correct-selection bits for `t = k·n0, …, horizon` when recorded.
    pub bits: Vec<bool>,
}

fn refreshed(b: GaussianBelief) -> Result<GaussianBelief> {
    match b.sample_variance() {
        Some(v) if v > 0.0 => b.with_sampling_var(v),
        _ => Err(Error::degenerate(format!(
            "plug-in sampling variance unavailable after {} observations",
            b.count
        ))),
    }
}

/// Runs one replication to `horizon` under `rule`.
pub fn simulate(
    scenario: &Scenario,
    rule: &AllocationRule,
    horizon: u64,
    stream: &ReplicationStream,
    record: bool,
) -> Result<Replication> {
    scenario.validate()?;
    if horizon < scenario.warmup_total() {
        return Err(Error::invalid("horizon is below the warmup total"));
    }
    let spec = scenario.prior_spec();
    let truth = sample_ground_truth(&spec, &mut stream.truth_rng())?;
    let mut obs: Vec<_> = (0..scenario.k).map(|i| stream.observation_rng(i)).collect();
    let mut beliefs = (0..scenario.k)
        .map(|i| {
            let var = match scenario.variance_mode {
                VarianceMode::Known => truth.variances[i],
                _ => 1.0,
            };
            GaussianBelief::new(spec.prior(i)?, var)
        })
        .collect::<Result<Vec<_>>>()?;
    for _ in 0..scenario.n0 {
        for (i, b) in beliefs.iter_mut().enumerate() {
            *b = b.update(sample_observation(&truth, i, &mut obs[i])?)?;
        }
    }
    if scenario.variance_mode != VarianceMode::Known {
        beliefs = beliefs.into_iter().map(refreshed).collect::<Result<_>>()?;
    }
    let mut bv = BeliefVector::new(beliefs)?;
    let best = truth.best();
    let mut bits = Vec::new();
    if record {
        bits.reserve((horizon - scenario.warmup_total() + 1) as usize);
        bits.push(bv.best() == best);
    }
    for t in scenario.warmup_total()..horizon {
        let i = rule.allocate(&bv, t)?;
        let mut b = bv.get(i).update(sample_observation(&truth, i, &mut obs[i])?)?;
        if scenario.variance_mode == VarianceMode::PluginRefresh {
            b = refreshed(b)?;
        }
        bv.set(i, b);
        if record {
            bits.push(bv.best() == best);
        }
    }
    Ok(Replication {
        truth,
        beliefs: bv,
        bits,
    })
}

/// Correct-selection bits for `t = k·n0, …, T`.
pub fn run_macro_replication(scenario: &Scenario, rule: &AllocationRule, stream: &ReplicationStream) -> Result<Vec<bool>> {
    Ok(simulate(scenario, rule, scenario.horizon, stream, true)?.bits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpcsCurve {
    pub policy: String,
    /// First step of the grid, `k·n0`.
    pub t0: u64,
    pub ipcs: Vec<f64>,
    pub stderr: Vec<f64>,
    pub macro_reps: u64,
}

impl IpcsCurve {
    fn from_counts(policy: String, t0: u64, counts: &[u64], n: u64) -> Self {
        let ipcs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let stderr = ipcs.iter().map(|&p| (p * (1.0 - p) / n as f64).sqrt()).collect();
        Self {
            policy,
            t0,
            ipcs,
            stderr,
            macro_reps: n,
        }
    }

    pub fn last_t(&self) -> u64 {
        self.t0 + self.ipcs.len() as u64 - 1
    }

    /// `(ipcs, stderr)` at step `t`.
    pub fn at(&self, t: u64) -> Option<(f64, f64)> {
        let n = t.checked_sub(self.t0)? as usize;
        Some((*self.ipcs.get(n)?, self.stderr[n]))
    }

    pub fn points(&self) -> impl Iterator<Item = (u64, f64, f64)> + '_ {
        self.ipcs
            .iter()
            .zip(&self.stderr)
            .enumerate()
            .map(|(n, (&p, &s))| (self.t0 + n as u64, p, s))
    }
}

/// IPCS over `scenario.macro_reps` replications on the evaluation streams.
pub fn estimate_ipcs(scenario: &Scenario, rule: &AllocationRule, policy: &str) -> Result<IpcsCurve> {
    scenario.validate()?;
    let width = (scenario.horizon - scenario.warmup_total() + 1) as usize;
    let counts = (0..scenario.macro_reps)
        .into_par_iter()
        .map(|i| {
            let stream = ReplicationStream::new(scenario.master_seed, rng::stage::EVALUATION, i);
            run_macro_replication(scenario, rule, &stream)
        })
        .try_fold(
            || vec![0u64; width],
            |mut acc, bits| {
                for (a, b) in acc.iter_mut().zip(bits?) {
                    *a += b as u64;
                }
                Ok::<_, Error>(acc)
            },
        )
        .try_reduce(
            || vec![0u64; width],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    Ok(IpcsCurve::from_counts(
        policy.to_string(),
        scenario.warmup_total(),
        &counts,
        scenario.macro_reps,
    ))
}

/// Where the two-factor policy gets its weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoFactorSource {
    /// A weights file written by `fit-vfa`; relative paths resolve against
    /// the config's directory.
    WeightsFile(PathBuf),
    /// Fit by G-MCL with equal allocation before evaluation. The configured
    /// seed is mixed with the scenario's master seed.
    Fit(SaConfig),
    Weights(VfaWeights),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    Ea,
    Ocba,
    Kg,
    Aoap,
    AoapMs { depth: usize },
    TwoFactor(TwoFactorSource),
}

pub const POLICY_IDS: [&str; 6] = ["ea", "ocba", "kg", "aoap", "aoap_ms", "two_factor"];

impl PolicySpec {
    pub fn label(&self) -> String {
        match self {
            PolicySpec::Ea => "ea".into(),
            PolicySpec::Ocba => "ocba".into(),
            PolicySpec::Kg => "kg".into(),
            PolicySpec::Aoap => "aoap".into(),
            PolicySpec::AoapMs { depth } => format!("aoap_ms{depth}"),
            PolicySpec::TwoFactor(_) => "two_factor".into(),
        }
    }

    /// Parses one entry, reporting unrecognized ids as unknown policies.
    pub fn from_value(v: &serde_json::Value) -> Result<Self> {
        let id = match v {
            serde_json::Value::String(s) => Some(s.clone()),
            serde_json::Value::Object(m) if m.len() == 1 => m.keys().next().cloned(),
            _ => None,
        };
        match id {
            Some(id) if !POLICY_IDS.contains(&id.as_str()) => Err(Error::UnknownPolicy(id)),
            _ => serde_json::from_value(v.clone()).map_err(|e| Error::invalid(format!("policy entry {v}: {e}"))),
        }
    }

    /// Builds the allocation rule, running any fitting stage first.
    pub fn resolve(&self, scenario: &Scenario, base_dir: &Path) -> Result<AllocationRule> {
        Ok(match self {
            PolicySpec::Ea => AllocationRule::EqualAllocation,
            PolicySpec::Ocba => AllocationRule::Ocba,
            PolicySpec::Kg => AllocationRule::KnowledgeGradient,
            PolicySpec::Aoap => AllocationRule::Aoap,
            PolicySpec::AoapMs { depth } => AllocationRule::AoapMultistep { depth: *depth },
            PolicySpec::TwoFactor(TwoFactorSource::Weights(w)) => {
                w.check()?;
                AllocationRule::TwoFactor(w.clone())
            }
            PolicySpec::TwoFactor(TwoFactorSource::WeightsFile(p)) => {
                AllocationRule::TwoFactor(WeightsFile::load(&base_dir.join(p))?.weights)
            }
            PolicySpec::TwoFactor(TwoFactorSource::Fit(cfg)) => {
                AllocationRule::TwoFactor(fit_two_factor(scenario, cfg)?.weights)
            }
        })
    }
}

/// G-MCL fit at the scenario horizon with equal allocation as generator.
pub fn fit_two_factor(scenario: &Scenario, cfg: &SaConfig) -> Result<WeightsFile> {
    let sa = SaConfig {
        seed: rng::derive_seed(scenario.master_seed, &[rng::stage::VFA_FIT, cfg.seed]),
        ..cfg.clone()
    };
    let out = vfa::gmcl_fit(scenario, scenario.horizon, &AllocationRule::EqualAllocation, &sa)?;
    Ok(WeightsFile {
        weights: out.weights,
        scenario: scenario.name.clone(),
        horizon: scenario.horizon,
        generator: "ea".into(),
        sa,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Builtin(String),
    Inline(Scenario),
}

impl ScenarioSpec {
    pub fn resolve(&self) -> Result<Scenario> {
        let s = match self {
            ScenarioSpec::Builtin(name) => Scenario::builtin(name)?,
            ScenarioSpec::Inline(s) => s.clone(),
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Keep every n-th step of the grid (the last step is always kept).
    #[serde(default)]
    pub downsample: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub policies: Vec<PolicySpec>,
    pub output: OutputSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: ScenarioSpec,
    policies: Vec<serde_json::Value>,
    #[serde(default)]
    output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        let policies = raw.policies.iter().map(PolicySpec::from_value).collect::<Result<_>>()?;
        Ok(Self {
            scenario: raw.scenario,
            policies,
            output: raw.output,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub curves: Vec<IpcsCurve>,
}

impl ResultTable {
    pub fn row_count(&self) -> usize {
        self.curves.iter().map(|c| c.ipcs.len()).sum()
    }

    pub fn curve(&self, policy: &str) -> Option<&IpcsCurve> {
        self.curves.iter().find(|c| c.policy == policy)
    }
}

/// Runs every configured policy on the scenario; `base_dir` anchors relative
/// weights files.
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<ResultTable> {
    let scenario = config.scenario.resolve()?;
    let mut curves = Vec::with_capacity(config.policies.len());
    for p in &config.policies {
        let rule = p.resolve(&scenario, base_dir)?;
        curves.push(estimate_ipcs(&scenario, &rule, &p.label())?);
    }
    Ok(ResultTable { curves })
}

/// Decimal rendering with ten significant digits.
pub fn format_sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0.000000000".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (9 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit; one fewer decimal then.
    let digits = s.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
    if digits.trim_start_matches('0').len() > 10 && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// Renders the CSV body: rows sorted by `(policy, t)`.
pub fn render_results(table: &ResultTable, downsample: Option<u64>) -> String {
    let step = downsample.unwrap_or(1).max(1);
    let mut order: Vec<&IpcsCurve> = table.curves.iter().collect();
    order.sort_by(|a, b| a.policy.cmp(&b.policy));
    let mut out = String::from("policy,t,ipcs,stderr,macro_reps\n");
    for c in order {
        let last = c.last_t();
        for (t, p, s) in c.points() {
            if (t - c.t0) % step == 0 || t == last {
                let _ = writeln!(out, "{},{t},{},{},{}", c.policy, format_sig10(p), format_sig10(s), c.macro_reps);
            }
        }
    }
    out
}

pub fn write_results(table: &ResultTable, path: &Path, downsample: Option<u64>) -> Result<()> {
    std::fs::write(path, render_results(table, downsample)).map_err(|e| Error::io(path, e))
}
