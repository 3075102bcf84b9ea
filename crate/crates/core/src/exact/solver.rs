use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigUint;

use super::count::state_space_size;
use super::model::{posterior_pmf, predictive_from_posterior, reward_table, DiscreteModel, DiscreteState};
use crate::error::{Error, Result};

/// Values closer than this are ties; ties go to the lowest alternative index.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    /// Maximum number of materialized states across all steps.
    pub max_states: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_states: 10_000_000,
        }
    }
}

/// States reachable after `t` samples, with their optimal values and actions.
#[derive(Debug, Clone)]
pub struct Level {
    pub states: Vec<DiscreteState>,
    pub values: Vec<f64>,
    /// Allocation for `t < T`, selection at `t = T` (zero-based).
    pub actions: Vec<usize>,
    index: HashMap<DiscreteState, usize>,
}

impl Level {
    fn new(states: Vec<DiscreteState>) -> Self {
        let index = states.iter().cloned().enumerate().map(|(n, s)| (s, n)).collect();
        let len = states.len();
        Self {
            states,
            values: vec![f64::NAN; len],
            actions: vec![usize::MAX; len],
            index,
        }
    }

    fn position(&self, state: &DiscreteState) -> Option<usize> {
        self.index.get(state).copied()
    }
}

/// Optimal allocation-and-selection policy for a finite horizon.
#[derive(Debug, Clone)]
pub struct SolvedPolicy {
    pub horizon: usize,
    pub levels: Vec<Level>,
}

impl SolvedPolicy {
    /// Optimal expected terminal reward from the empty history.
    pub fn value(&self) -> f64 {
        self.levels[0].values[0]
    }

    pub fn num_states(&self) -> usize {
        self.levels.iter().map(|l| l.states.len()).sum()
    }

    fn lookup(&self, state: &DiscreteState) -> Option<(usize, usize)> {
        let t = state.total() as usize;
        let level = self.levels.get(t)?;
        level.position(state).map(|n| (t, n))
    }

    /// Optimal alternative to sample next at a reachable pre-horizon state.
    pub fn allocation(&self, state: &DiscreteState) -> Option<usize> {
        let (t, n) = self.lookup(state)?;
        (t < self.horizon).then(|| self.levels[t].actions[n])
    }

    /// Optimal selection at a reachable terminal state.
    pub fn selection(&self, state: &DiscreteState) -> Option<usize> {
        let (t, n) = self.lookup(state)?;
        (t == self.horizon).then(|| self.levels[t].actions[n])
    }

    pub fn state_value(&self, state: &DiscreteState) -> Option<f64> {
        self.lookup(state).map(|(t, n)| self.levels[t].values[n])
    }

    /// CSV table `t,state,kind,alternative,value` with one-based alternatives.
    pub fn to_table(&self, model: &DiscreteModel) -> String {
        let mut out = String::from("t,state,kind,alternative,value\n");
        for (t, level) in self.levels.iter().enumerate() {
            let kind = if t < self.horizon { "allocate" } else { "select" };
            let mut order: Vec<usize> = (0..level.states.len()).collect();
            order.sort_by(|&a, &b| level.states[a].cmp(&level.states[b]));
            for n in order {
                let _ = writeln!(
                    out,
                    "{t},{},{kind},{},{:.12}",
                    level.states[n].render(model),
                    level.actions[n] + 1,
                    level.values[n]
                );
            }
        }
        out
    }

    pub fn write_table(&self, model: &DiscreteModel, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_table(model)).map_err(|e| Error::io(path, e))
    }
}

fn argmax_lowest(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 + TIE_TOL {
            best = (i, v);
        }
    }
    best
}

/// Backward induction over the reachable sufficient-statistic states.
pub fn solve_bellman(model: &DiscreteModel, horizon: usize, config: SolverConfig) -> Result<SolvedPolicy> {
    model.validate()?;
    let size = state_space_size(horizon, model.k, &model.support_sizes())?;
    if size > BigUint::from(config.max_states) {
        return Err(Error::StateSpaceTooLarge {
            size: format!("L_{{{horizon},{}}} = {size}", model.k),
            cap: config.max_states,
        });
    }

    let offsets = model.offsets();
    let rewards = reward_table(model);

    // Forward pass: materialize only states with positive predictive mass.
    let mut levels = vec![Level::new(vec![DiscreteState::empty(model)])];
    let mut total = 1usize;
    for _t in 0..horizon {
        let current = levels.last().expect("at least one level");
        let mut next: Vec<DiscreteState> = Vec::new();
        let mut seen: HashSet<DiscreteState> = HashSet::new();
        for state in &current.states {
            let post = posterior_pmf(model, state)?;
            for i in 0..model.k {
                let pred = predictive_from_posterior(model, &post, i);
                for (l, &p) in pred.iter().enumerate() {
                    if p > 0.0 {
                        let child = state.child(offsets[i] + l);
                        if seen.insert(child.clone()) {
                            next.push(child);
                        }
                    }
                }
            }
        }
        total += next.len();
        if total > config.max_states {
            return Err(Error::StateSpaceTooLarge {
                size: format!("more than {total} reachable states"),
                cap: config.max_states,
            });
        }
        levels.push(Level::new(next));
    }

    // Terminal selection.
    {
        let last = levels.last_mut().expect("at least one level");
        for n in 0..last.states.len() {
            let post = posterior_pmf(model, &last.states[n])?;
            let (i, v) = argmax_lowest((0..model.k).map(|i| {
                post.iter().zip(&rewards).map(|(p, row)| p * row[i]).sum::<f64>()
            }));
            last.values[n] = v;
            last.actions[n] = i;
        }
    }

    // Backward induction.
    for t in (0..horizon).rev() {
        let (head, tail) = levels.split_at_mut(t + 1);
        let level = &mut head[t];
        let next = &tail[0];
        for n in 0..level.states.len() {
            let state = &level.states[n];
            let post = posterior_pmf(model, state)?;
            let mut q_values = Vec::with_capacity(model.k);
            for i in 0..model.k {
                let pred = predictive_from_posterior(model, &post, i);
                let mut v = 0.0;
                for (l, &p) in pred.iter().enumerate() {
                    if p > 0.0 {
                        let child = state.child(offsets[i] + l);
                        let m = next.position(&child).expect("child materialized in forward pass");
                        v += p * next.values[m];
                    }
                }
                q_values.push(v);
            }
            let (i, v) = argmax_lowest(q_values.into_iter());
            level.values[n] = v;
            level.actions[n] = i;
        }
    }

    Ok(SolvedPolicy { horizon, levels })
}
