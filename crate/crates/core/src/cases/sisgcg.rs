//! Graphical coordination game coupled to an SIS epidemic.
//!
//! The susceptible fraction follows `Ṡ = (1−S)(γ − βS)` where `β` averages
//! `β₁` over agents playing 1 and `β₀` over agents playing 0. Agents earn
//! `λ + I` per neighbor when both play 1 and `1` per neighbor when both play
//! 0, with `I = 1 − S`. One learning step happens per unit of ODE time, and
//! `β` is held at the profile in force during that unit.

use serde::Serialize;

use crate::equilibrium::PotentialFunction;
use crate::error::{param, Error, Result};
use crate::experiment::{run_paired_trials, Dataset, Model, TrialRecord};
use crate::game::{DynamicGame, Frozen, StaticGame};
use crate::graph::Graph;
use crate::learning::{simulate_with, IndividualRule, InitialDistribution};
use crate::profile::{ActionProfile, History};

/// Tolerance for snapping `S` back into `[0, 1]`.
pub const CLAMP_TOL: f64 = 1e-9;

/// Largest change of `S` allowed in one integrator substep.
pub const MAX_SUBSTEP_CHANGE: f64 = 0.5;

/// Margin for deciding the reference game's potential maximizer.
pub const MARGIN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SisgcgConfig {
    pub graph: Graph,
    pub gamma: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub lambda: f64,
    /// Susceptible fraction at the first step.
    pub s0: f64,
    /// RK4 substeps per unit of time.
    pub substeps: usize,
}

impl SisgcgConfig {
    pub fn new(
        graph: Graph,
        gamma: f64,
        beta0: f64,
        beta1: f64,
        lambda: f64,
        s0: f64,
        substeps: usize,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(param("gamma", format!("must be positive, got {gamma}")));
        }
        if !(beta1 > 0.0) {
            return Err(param("beta1", format!("must be positive, got {beta1}")));
        }
        if !(beta1 < beta0 && beta0.is_finite()) {
            return Err(param(
                "beta1",
                format!("infection rates need 0 < beta1 < beta0, got beta1={beta1}, beta0={beta0}"),
            ));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(param("lambda", format!("must lie in (0, 1], got {lambda}")));
        }
        if !(0.0..=1.0).contains(&s0) {
            return Err(param("S0", format!("must lie in [0, 1], got {s0}")));
        }
        if substeps == 0 {
            return Err(param("substeps", "must be at least 1"));
        }
        Ok(Self {
            graph,
            gamma,
            beta0,
            beta1,
            lambda,
            s0,
            substeps,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.graph.num_nodes()
    }

    /// `γ/β₁`, the susceptible level the epidemic settles at when everyone
    /// plays 1.
    pub fn susceptible_bound(&self) -> f64 {
        self.gamma / self.beta1
    }

    /// `1 − γ/β₁`, the infection level frozen into the reference game.
    pub fn reference_infection(&self) -> f64 {
        1.0 - self.susceptible_bound()
    }
}

/// Average infection rate `(1/n) Σ (a_i β₁ + (1−a_i) β₀)`.
pub fn beta_of_profile(cfg: &SisgcgConfig, a: ActionProfile) -> f64 {
    let n = a.n() as f64;
    let ones = a.count_ones() as f64;
    (ones * cfg.beta1 + (n - ones) * cfg.beta0) / n
}

fn susceptible_rate(gamma: f64, beta: f64, s: f64) -> f64 {
    (1.0 - s) * (gamma - beta * s)
}

/// Integrates the susceptible fraction over one unit of time at fixed `beta`
/// with `cfg.substeps` classical Runge–Kutta steps.
pub fn sis_step(cfg: &SisgcgConfig, s: f64, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Numeric(format!(
            "susceptible fraction {s} outside [0, 1]"
        )));
    }
    let h = 1.0 / cfg.substeps as f64;
    let f = |x: f64| susceptible_rate(cfg.gamma, beta, x);
    let mut x = s;
    for _ in 0..cfg.substeps {
        let k1 = f(x);
        let k2 = f(x + 0.5 * h * k1);
        let k3 = f(x + 0.5 * h * k2);
        let k4 = f(x + h * k3);
        let dx = h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(dx.abs() <= MAX_SUBSTEP_CHANGE) {
            return Err(Error::Numeric(format!(
                "integrator step changed S by {dx}; increase substeps above {}",
                cfg.substeps
            )));
        }
        x += dx;
    }
    if !(0.0..=1.0).contains(&x) {
        let over = if x < 0.0 { -x } else { x - 1.0 };
        if over > CLAMP_TOL {
            return Err(Error::Numeric(format!(
                "S left [0, 1] by {over}; increase substeps above {}",
                cfg.substeps
            )));
        }
        x = x.clamp(0.0, 1.0);
    }
    Ok(x)
}

/// `a_i|N_i(1)|(λ + I) + (1 − a_i)|N_i(0)|`.
pub fn sisgcg_utility(cfg: &SisgcgConfig, infected: f64, a: ActionProfile, agent: usize) -> f64 {
    coordination_utility(&cfg.graph, cfg.lambda, infected, a, agent)
}

fn coordination_utility(
    graph: &Graph,
    lambda: f64,
    infected: f64,
    a: ActionProfile,
    agent: usize,
) -> f64 {
    let mine = a.get(agent);
    let same = graph
        .neighbors(agent)
        .iter()
        .filter(|&&j| a.get(j) == mine)
        .count() as f64;
    if mine {
        same * (lambda + infected)
    } else {
        same
    }
}

/// Susceptible fraction after the last profile, and that profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SisEnv {
    pub susceptible: f64,
    pub last: ActionProfile,
}

impl SisEnv {
    pub fn infected(&self) -> f64 {
        1.0 - self.susceptible
    }
}

/// The coupled game: utilities read the infection level reached after the
/// history so far.
#[derive(Clone, Debug, PartialEq)]
pub struct SisgcgGame {
    pub cfg: SisgcgConfig,
}

impl SisgcgGame {
    pub fn new(cfg: SisgcgConfig) -> Self {
        Self { cfg }
    }
}

impl DynamicGame for SisgcgGame {
    type Env = SisEnv;

    fn num_agents(&self) -> usize {
        self.cfg.num_agents()
    }

    fn start(&self, first: ActionProfile) -> Result<SisEnv> {
        Ok(SisEnv {
            susceptible: self.cfg.s0,
            last: first,
        })
    }

    fn advance(&self, env: &SisEnv, next: ActionProfile) -> Result<SisEnv> {
        let beta = beta_of_profile(&self.cfg, env.last);
        Ok(SisEnv {
            susceptible: sis_step(&self.cfg, env.susceptible, beta)?,
            last: next,
        })
    }

    fn utility(&self, env: &SisEnv, agent: usize, a: ActionProfile) -> f64 {
        sisgcg_utility(&self.cfg, env.infected(), a, agent)
    }
}

/// Coordination game at a fixed infection level.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinationGame {
    pub graph: Graph,
    pub lambda: f64,
    pub infected: f64,
}

impl StaticGame for CoordinationGame {
    fn num_agents(&self) -> usize {
        self.graph.num_nodes()
    }

    fn utility(&self, agent: usize, a: ActionProfile) -> f64 {
        coordination_utility(&self.graph, self.lambda, self.infected, a, agent)
    }
}

impl CoordinationGame {
    /// Sum over edges of `λ + I` when both ends play 1 and `1` when both
    /// play 0.
    pub fn potential_value(&self, a: ActionProfile) -> f64 {
        let mut phi = 0.0;
        for i in 0..self.graph.num_nodes() {
            for &j in self.graph.neighbors(i).iter().filter(|&&j| j > i) {
                match (a.get(i), a.get(j)) {
                    (true, true) => phi += self.lambda + self.infected,
                    (false, false) => phi += 1.0,
                    _ => {}
                }
            }
        }
        phi
    }

    pub fn potential(&self) -> Result<PotentialFunction> {
        PotentialFunction::from_fn(self.graph.num_nodes(), |a| self.potential_value(a))
    }
}

/// Reference game with the infection level frozen at `1 − γ/β₁`.
pub fn gcg_reference(cfg: &SisgcgConfig) -> CoordinationGame {
    CoordinationGame {
        graph: cfg.graph.clone(),
        lambda: cfg.lambda,
        infected: cfg.reference_infection(),
    }
}

/// `λ + (1 − γ/β₁) − 1`. On a connected graph the all-ones profile is the
/// reference game's unique potential maximizer when this is positive, the
/// all-zeros profile when negative, and both tie at zero.
pub fn reference_margin(cfg: &SisgcgConfig) -> f64 {
    cfg.lambda + cfg.reference_infection() - 1.0
}

/// Sufficient conditions for the all-ones profile to be stochastically
/// stable in the coupled game.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SisgcgHypotheses {
    /// `β₁/γ > 1`.
    pub epidemic_persists: bool,
    /// `λ + 1 − γ/β₁ > 1`.
    pub reference_prefers_ones: bool,
    /// `I(0) > 0`.
    pub initially_infected: bool,
}

impl SisgcgHypotheses {
    pub fn all(&self) -> bool {
        self.epidemic_persists && self.reference_prefers_ones && self.initially_infected
    }
}

pub fn sisgcg_hypotheses(cfg: &SisgcgConfig) -> SisgcgHypotheses {
    SisgcgHypotheses {
        epidemic_persists: cfg.beta1 / cfg.gamma > 1.0,
        reference_prefers_ones: reference_margin(cfg) > MARGIN_TOL,
        initially_infected: cfg.s0 < 1.0,
    }
}

/// Simulates the coupled model; returns the action path and the
/// susceptible fraction at every step.
pub fn sisgcg_simulate(
    cfg: &SisgcgConfig,
    rule: &impl IndividualRule,
    pi: &InitialDistribution,
    horizon: usize,
    rng: &mut impl rand::Rng,
) -> Result<(History, Vec<f64>)> {
    let game = SisgcgGame::new(cfg.clone());
    let mut path = Vec::with_capacity(horizon);
    let mut susceptible = Vec::with_capacity(horizon);
    simulate_with(&game, rule, pi, horizon, rng, |a, env| {
        path.push(a);
        susceptible.push(env.susceptible);
    })?;
    Ok((History::new(path)?, susceptible))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    /// Set when the initial state rules the entry result out.
    pub hypothesis_violated: Option<String>,
    /// First step with `S ≤ γ/β₁ + 1e-9`.
    pub entry_time: Option<usize>,
    /// Largest `S(t) − γ/β₁` after entry (negative when strictly inside).
    pub max_excursion: Option<f64>,
    pub holds: bool,
}

/// Checks that once the susceptible fraction enters `[0, γ/β₁]` it stays
/// there, within `1e-6`.
pub fn invariance_check(cfg: &SisgcgConfig, susceptible: &[f64]) -> InvarianceReport {
    let bound = cfg.susceptible_bound();
    if susceptible.first().is_some_and(|s| *s >= 1.0) {
        return InvarianceReport {
            hypothesis_violated: Some(
                "I(0) > 0 required: the initial state is disease-free".into(),
            ),
            entry_time: None,
            max_excursion: None,
            holds: false,
        };
    }
    let entry = susceptible.iter().position(|s| *s <= bound + 1e-9);
    let excursion = entry.map(|t| {
        susceptible[t..]
            .iter()
            .map(|s| s - bound)
            .fold(f64::NEG_INFINITY, f64::max)
    });
    InvarianceReport {
        hypothesis_violated: None,
        entry_time: entry,
        max_excursion: excursion,
        holds: excursion.is_some_and(|e| e <= 1e-6),
    }
}

/// Runs the coupled model and its frozen-infection reference side by side.
/// Both share each trial's learning stream.
pub fn sisgcg_experiment(
    cfg: &SisgcgConfig,
    rule: &impl IndividualRule,
    pi: &InitialDistribution,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<Dataset> {
    if trials == 0 {
        return Err(param("trials", "must be at least 1"));
    }
    let game = SisgcgGame::new(cfg.clone());
    let reference = Frozen(gcg_reference(cfg));
    let records = run_paired_trials(trials, seed, |k, dynamics, _| {
        let mut dynamic = TrialRecord::new(Model::Dynamic, k, horizon, true);
        simulate_with(&game, rule, pi, horizon, &mut dynamics(), |a, env| {
            dynamic.count_ones.push(a.count_ones());
            dynamic.at_all_ones.push(a.is_all_ones());
            if let Some(i) = dynamic.infected.as_mut() {
                i.push(env.infected());
            }
        })?;
        let mut fixed = TrialRecord::new(Model::Static, k, horizon, false);
        simulate_with(&reference, rule, pi, horizon, &mut dynamics(), |a, _| {
            fixed.count_ones.push(a.count_ones());
            fixed.at_all_ones.push(a.is_all_ones());
        })?;
        Ok((dynamic, fixed))
    })?;
    Ok(Dataset {
        n: cfg.num_agents(),
        horizon,
        records,
    })
}
