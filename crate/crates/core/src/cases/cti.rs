//! Threat-intelligence sharing on a graph.
//!
//! Firm `i` pays `c_i` to share and gains `v_j` from every sharing neighbor
//! `j` when it shares itself: `U_i(a) = a_i(−c_i + Σ_{j∈N_i} a_j v_j)`. In
//! the history-dependent game the values come from a process indexed by the
//! history length; the static reference replaces them with a lower bound.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::PotentialFunction;
use crate::error::{param, Result};
use crate::experiment::{run_paired_trials, Dataset, Model, TrialRecord};
use crate::game::{DynamicGame, Frozen, StaticGame};
use crate::graph::Graph;
use crate::learning::{simulate_with, IndividualRule, InitialDistribution};
use crate::profile::ActionProfile;

/// Where the value of shared intelligence comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ValueProcess {
    Constant {
        value: f64,
    },
    /// `base + X + epsilon` with `X ~ Uniform[0, width)`, redrawn every
    /// step. One draw is shared by all firms unless `per_agent` is set.
    BoundedUniform {
        base: f64,
        width: f64,
        epsilon: f64,
        #[serde(default)]
        per_agent: bool,
    },
    /// Deterministic value per step; the last entry holds afterwards.
    Schedule {
        values: Vec<f64>,
    },
}

impl ValueProcess {
    /// Lower bound over all realizations.
    pub fn lower_bound(&self) -> f64 {
        match self {
            ValueProcess::Constant { value } => *value,
            ValueProcess::BoundedUniform { base, epsilon, .. } => base + epsilon,
            ValueProcess::Schedule { values } => {
                values.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ValueProcess::Constant { value } if !value.is_finite() => {
                Err(param("value.value", "must be finite"))
            }
            ValueProcess::BoundedUniform { width, .. } if !(*width >= 0.0) => {
                Err(param("value.width", "must be nonnegative"))
            }
            ValueProcess::Schedule { values } if values.is_empty() => {
                Err(param("value.values", "schedule must not be empty"))
            }
            _ => Ok(()),
        }
    }

    /// Per-firm values at step `t` (0-based). Random processes read stream
    /// `t` of a generator seeded with `seed`, so the values are a pure
    /// function of `(seed, t)`.
    pub fn realize(&self, seed: u64, t: usize, n: usize) -> Vec<f64> {
        match self {
            ValueProcess::Constant { value } => vec![*value; n],
            ValueProcess::BoundedUniform {
                base,
                width,
                epsilon,
                per_agent,
            } => {
                let mut rng = crate::experiment::stream_rng(seed, t as u64);
                if *per_agent {
                    (0..n)
                        .map(|_| base + rng.gen::<f64>() * width + epsilon)
                        .collect()
                } else {
                    vec![base + rng.gen::<f64>() * width + epsilon; n]
                }
            }
            ValueProcess::Schedule { values } => vec![values[t.min(values.len() - 1)]; n],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CtiConfig {
    pub graph: Graph,
    pub costs: Vec<f64>,
    pub value: ValueProcess,
    /// Value used by the static reference game.
    pub lower_bound: f64,
}

impl CtiConfig {
    /// The process is not checked against `lower_bound`; a process that dips
    /// below it yields a pair that fails the alignment check.
    pub fn new(
        graph: Graph,
        costs: Vec<f64>,
        value: ValueProcess,
        lower_bound: f64,
    ) -> Result<Self> {
        if costs.len() != graph.num_nodes() {
            return Err(param(
                "costs",
                format!("expected {} costs, got {}", graph.num_nodes(), costs.len()),
            ));
        }
        if costs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(param("costs", "costs must be finite and nonnegative"));
        }
        if !(lower_bound > 0.0) {
            return Err(param(
                "lower_bound",
                format!("must be positive, got {lower_bound}"),
            ));
        }
        value.validate()?;
        Ok(Self {
            graph,
            costs,
            value,
            lower_bound,
        })
    }

    /// Uses the process's own lower bound for the reference game.
    pub fn with_process_bound(graph: Graph, costs: Vec<f64>, value: ValueProcess) -> Result<Self> {
        let bound = value.lower_bound();
        Self::new(graph, costs, value, bound)
    }

    pub fn num_agents(&self) -> usize {
        self.graph.num_nodes()
    }
}

/// `a_i(−c_i + Σ_{j∈N_i} a_j v_j)`.
pub fn cti_utility(cfg: &CtiConfig, values: &[f64], a: ActionProfile, agent: usize) -> f64 {
    if !a.get(agent) {
        return 0.0;
    }
    let gain: f64 = cfg
        .graph
        .neighbors(agent)
        .iter()
        .filter(|&&j| a.get(j))
        .map(|&j| values[j])
        .sum();
    gain - cfg.costs[agent]
}

/// History-dependent sharing game. `seed` fixes the value realizations.
#[derive(Clone, Debug, PartialEq)]
pub struct CtiGame {
    pub cfg: CtiConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CtiEnv {
    /// 0-based step of the last profile.
    pub t: usize,
    pub values: Vec<f64>,
}

impl CtiGame {
    pub fn new(cfg: CtiConfig, seed: u64) -> Self {
        Self { cfg, seed }
    }

    fn env_at(&self, t: usize) -> CtiEnv {
        CtiEnv {
            t,
            values: self.cfg.value.realize(self.seed, t, self.cfg.num_agents()),
        }
    }
}

impl DynamicGame for CtiGame {
    type Env = CtiEnv;

    fn num_agents(&self) -> usize {
        self.cfg.num_agents()
    }

    fn start(&self, _first: ActionProfile) -> Result<CtiEnv> {
        Ok(self.env_at(0))
    }

    fn advance(&self, env: &CtiEnv, _next: ActionProfile) -> Result<CtiEnv> {
        Ok(self.env_at(env.t + 1))
    }

    fn utility(&self, env: &CtiEnv, agent: usize, a: ActionProfile) -> f64 {
        cti_utility(&self.cfg, &env.values, a, agent)
    }
}

/// Static game with every value replaced by the lower bound.
#[derive(Clone, Debug, PartialEq)]
pub struct CtiReference {
    cfg: CtiConfig,
    values: Vec<f64>,
}

pub fn cti_reference(cfg: &CtiConfig) -> CtiReference {
    CtiReference {
        values: vec![cfg.lower_bound; cfg.num_agents()],
        cfg: cfg.clone(),
    }
}

impl StaticGame for CtiReference {
    fn num_agents(&self) -> usize {
        self.cfg.num_agents()
    }

    fn utility(&self, agent: usize, a: ActionProfile) -> f64 {
        cti_utility(&self.cfg, &self.values, a, agent)
    }
}

/// `φ(a) = Σ_i ((1−a_i)c_i + (a_i/2) Σ_{j∈N_i} a_j v̲)`.
pub fn cti_potential_value(cfg: &CtiConfig, a: ActionProfile) -> f64 {
    (0..cfg.num_agents())
        .map(|i| {
            if a.get(i) {
                let sharing = cfg.graph.neighbors(i).iter().filter(|&&j| a.get(j)).count();
                0.5 * sharing as f64 * cfg.lower_bound
            } else {
                cfg.costs[i]
            }
        })
        .sum()
}

pub fn cti_potential(cfg: &CtiConfig) -> Result<PotentialFunction> {
    PotentialFunction::from_fn(cfg.num_agents(), |a| cti_potential_value(cfg, a))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentCondition {
    pub degree: usize,
    pub cost: f64,
    /// `c_i / |N_i|`, absent for isolated firms.
    pub strict_nash_threshold: Option<f64>,
    /// `2 c_i / |N_i|`, absent for isolated firms.
    pub maximizer_threshold: Option<f64>,
    pub strict_nash: bool,
    pub unique_maximizer: bool,
}

/// Which sufficient conditions on the lower bound hold: sharing by everyone
/// is a strict Nash equilibrium when `v̲|N_i| > c_i` for all firms, and the
/// unique potential maximizer when `v̲|N_i| > 2c_i` for all firms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CtiConditions {
    pub lower_bound: f64,
    pub agents: Vec<AgentCondition>,
    pub strict_nash_guaranteed: bool,
    pub unique_maximizer_guaranteed: bool,
}

pub fn cti_condition_check(cfg: &CtiConfig) -> CtiConditions {
    let v = cfg.lower_bound;
    let agents: Vec<_> = (0..cfg.num_agents())
        .map(|i| {
            let degree = cfg.graph.degree(i);
            let cost = cfg.costs[i];
            let threshold = |k: f64| (degree > 0).then(|| k * cost / degree as f64);
            AgentCondition {
                degree,
                cost,
                strict_nash_threshold: threshold(1.0),
                maximizer_threshold: threshold(2.0),
                strict_nash: v * degree as f64 > cost,
                unique_maximizer: v * degree as f64 > 2.0 * cost,
            }
        })
        .collect();
    CtiConditions {
        lower_bound: v,
        strict_nash_guaranteed: agents.iter().all(|a| a.strict_nash),
        unique_maximizer_guaranteed: agents.iter().all(|a| a.unique_maximizer),
        agents,
    }
}

fn record_step(rec: &mut TrialRecord, a: ActionProfile) {
    rec.count_ones.push(a.count_ones());
    rec.at_all_ones.push(a.is_all_ones());
}

/// Runs the history-dependent game and its reference side by side. Each
/// trial draws its value-process seed from its auxiliary stream; both models
/// share the trial's learning stream.
pub fn cti_experiment(
    cfg: &CtiConfig,
    rule: &impl IndividualRule,
    pi: &InitialDistribution,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<Dataset> {
    if trials == 0 {
        return Err(param("trials", "must be at least 1"));
    }
    let reference = Frozen(cti_reference(cfg));
    let records = run_paired_trials(trials, seed, |k, dynamics, aux| {
        let game = CtiGame::new(cfg.clone(), aux.gen());
        let mut dynamic = TrialRecord::new(Model::Dynamic, k, horizon, false);
        simulate_with(&game, rule, pi, horizon, &mut dynamics(), |a, _| {
            record_step(&mut dynamic, a)
        })?;
        let mut fixed = TrialRecord::new(Model::Static, k, horizon, false);
        simulate_with(&reference, rule, pi, horizon, &mut dynamics(), |a, _| {
            record_step(&mut fixed, a)
        })?;
        Ok((dynamic, fixed))
    })?;
    Ok(Dataset {
        n: cfg.num_agents(),
        horizon,
        records,
    })
}
