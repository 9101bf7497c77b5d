//! Individual learning rules, their asynchronous composition, property
//! verifiers, sampling, and exact path probabilities.
//!
//! RNG consumption is fixed so runs are bit-reproducible: the initial profile
//! takes one draw (`u64` for uniform, `f64` for tables, none for point
//! masses), then every step draws the revising agent with `gen_range(0..n)`
//! followed by one `f64`; the agent plays 1 iff that draw is below its
//! probability of choosing 1.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::game::{check_enumerable, DynamicGame, EnvView, StaticGame, TableGame};
use crate::profile::{ActionProfile, History};

/// Utility gap below which best-response treats two actions as tied.
pub const BR_TIE_TOL: f64 = 1e-9;

/// Probability sums must match 1 to this precision.
pub const PROB_TOL: f64 = 1e-12;

/// An individual learning rule `P_i`: the distribution `[p(0), p(1)]` of
/// agent `i`'s next action when it is the agent selected to revise at `a`.
///
/// Returning a pair makes the unilateral-support condition structural: no
/// other agent can move.
pub trait IndividualRule: Send + Sync {
    fn choice(
        &self,
        agent: usize,
        a: ActionProfile,
        utilities: &dyn StaticGame,
    ) -> Result<[f64; 2]>;
}

impl<R: IndividualRule + ?Sized> IndividualRule for &R {
    fn choice(&self, agent: usize, a: ActionProfile, u: &dyn StaticGame) -> Result<[f64; 2]> {
        (**self).choice(agent, a, u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearningRule {
    /// Softmax over the agent's two payoffs with temperature `tau`.
    LogLinear { tau: f64 },
    /// Uniform over the best-response set.
    BestResponse,
}

impl LearningRule {
    pub fn log_linear(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(param(
                "tau",
                format!("must be positive and finite, got {tau}"),
            ));
        }
        Ok(LearningRule::LogLinear { tau })
    }

    pub fn tau(&self) -> Option<f64> {
        match self {
            LearningRule::LogLinear { tau } => Some(*tau),
            LearningRule::BestResponse => None,
        }
    }
}

impl fmt::Display for LearningRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearningRule::LogLinear { tau } => write!(f, "log-linear(tau={tau})"),
            LearningRule::BestResponse => f.write_str("best-response"),
        }
    }
}

fn own_payoffs(agent: usize, a: ActionProfile, u: &dyn StaticGame) -> Result<[f64; 2]> {
    let pay = [
        u.utility(agent, a.with(agent, false)),
        u.utility(agent, a.with(agent, true)),
    ];
    if pay.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite utility {pay:?} for agent {} at {a}",
            agent + 1
        )));
    }
    Ok(pay)
}

impl IndividualRule for LearningRule {
    fn choice(&self, agent: usize, a: ActionProfile, u: &dyn StaticGame) -> Result<[f64; 2]> {
        let [u0, u1] = own_payoffs(agent, a, u)?;
        match *self {
            LearningRule::LogLinear { tau } => {
                let m = u0.max(u1);
                let e0 = ((u0 - m) / tau).exp();
                let e1 = ((u1 - m) / tau).exp();
                let z = e0 + e1;
                Ok([e0 / z, e1 / z])
            }
            LearningRule::BestResponse => {
                if (u1 - u0).abs() <= BR_TIE_TOL {
                    Ok([0.5, 0.5])
                } else if u1 > u0 {
                    Ok([0.0, 1.0])
                } else {
                    Ok([1.0, 0.0])
                }
            }
        }
    }
}

/// Keeps the current action with probability `keep` regardless of payoffs.
/// Violates locality; shipped as the counterexample for the verifier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertialRule {
    pub keep: f64,
}

impl IndividualRule for InertialRule {
    fn choice(&self, agent: usize, a: ActionProfile, _u: &dyn StaticGame) -> Result<[f64; 2]> {
        Ok(if a.get(agent) {
            [1.0 - self.keep, self.keep]
        } else {
            [self.keep, 1.0 - self.keep]
        })
    }
}

pub fn individual_step(
    rule: &impl IndividualRule,
    agent: usize,
    a: ActionProfile,
    utilities: &dyn StaticGame,
) -> Result<[f64; 2]> {
    rule.choice(agent, a, utilities)
}

/// Per-agent choice distributions at `a`, `[P_i(0), P_i(1)]` for every `i`.
pub fn individual_kernels(
    rule: &impl IndividualRule,
    a: ActionProfile,
    utilities: &dyn StaticGame,
) -> Result<Vec<[f64; 2]>> {
    (0..a.n()).map(|i| rule.choice(i, a, utilities)).collect()
}

/// One-step distribution of the asynchronous rule from `origin`.
///
/// Entries cover `f(origin) ∪ {origin}` in canonical order, including zero
/// masses.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionDistribution {
    origin: ActionProfile,
    entries: Vec<(ActionProfile, f64)>,
}

impl TransitionDistribution {
    /// Assembles the uniform-agent mixture from per-agent choice pairs.
    pub fn from_kernels(origin: ActionProfile, kernels: &[[f64; 2]]) -> Result<Self> {
        let n = origin.n();
        if kernels.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: kernels.len(),
            });
        }
        let w = 1.0 / n as f64;
        let mut stay = 0.0;
        let mut entries = Vec::with_capacity(n + 1);
        for (i, k) in kernels.iter().enumerate() {
            let own = origin.action(i) as usize;
            stay += w * k[own];
            entries.push((origin.flip(i), w * k[1 - own]));
        }
        entries.push((origin, stay));
        entries.sort_by_key(|x| x.0);
        Ok(Self { origin, entries })
    }

    pub fn origin(&self) -> ActionProfile {
        self.origin
    }

    pub fn entries(&self) -> &[(ActionProfile, f64)] {
        &self.entries
    }

    pub fn prob(&self, target: &ActionProfile) -> f64 {
        self.entries
            .iter()
            .find(|(p, _)| p == target)
            .map_or(0.0, |(_, w)| *w)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }
}

pub fn async_step_distribution(
    rule: &impl IndividualRule,
    a: ActionProfile,
    utilities: &dyn StaticGame,
) -> Result<TransitionDistribution> {
    TransitionDistribution::from_kernels(a, &individual_kernels(rule, a, utilities)?)
}

/// Initial distribution `π` over profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialDistribution {
    Uniform { n: usize },
    PointMass { profile: ActionProfile },
    Table { entries: Vec<(ActionProfile, f64)> },
}

impl InitialDistribution {
    pub fn uniform(n: usize) -> Self {
        InitialDistribution::Uniform { n }
    }

    pub fn point(profile: ActionProfile) -> Self {
        InitialDistribution::PointMass { profile }
    }

    pub fn table(mut entries: Vec<(ActionProfile, f64)>) -> Result<Self> {
        let n = entries
            .first()
            .map(|e| e.0.n())
            .ok_or_else(|| param("pi", "empty table"))?;
        if entries.iter().any(|(p, w)| p.n() != n || !(*w >= 0.0)) {
            return Err(param("pi", "entries must share n and be nonnegative"));
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(param("pi", format!("masses sum to {total}")));
        }
        entries.sort_by_key(|x| x.0);
        Ok(InitialDistribution::Table { entries })
    }

    pub fn n(&self) -> usize {
        match self {
            InitialDistribution::Uniform { n } => *n,
            InitialDistribution::PointMass { profile } => profile.n(),
            InitialDistribution::Table { entries } => entries[0].0.n(),
        }
    }

    pub fn prob(&self, a: &ActionProfile) -> f64 {
        match self {
            InitialDistribution::Uniform { n } => {
                if a.n() == *n {
                    (0.5f64).powi(*n as i32)
                } else {
                    0.0
                }
            }
            InitialDistribution::PointMass { profile } => (profile == a) as u8 as f64,
            InitialDistribution::Table { entries } => {
                entries.iter().filter(|(p, _)| p == a).map(|(_, w)| w).sum()
            }
        }
    }

    pub fn has_full_support(&self) -> bool {
        match self {
            InitialDistribution::Uniform { .. } => true,
            InitialDistribution::PointMass { profile } => profile.n() == 0,
            InitialDistribution::Table { entries } => {
                let n = entries[0].0.n();
                n <= 63 && entries.iter().filter(|e| e.1 > 0.0).count() as u64 == 1u64 << n
            }
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> ActionProfile {
        match self {
            InitialDistribution::Uniform { n } => {
                let mask = if *n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                ActionProfile::from_bits(*n, rng.gen::<u64>() & mask).expect("masked")
            }
            InitialDistribution::PointMass { profile } => *profile,
            InitialDistribution::Table { entries } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (p, w) in entries {
                    acc += w;
                    if u < acc {
                        return *p;
                    }
                }
                // round-off: fall back to the last positive entry
                entries.iter().rev().find(|e| e.1 > 0.0).expect("mass").0
            }
        }
    }
}

/// Draws one asynchronous step from `a`.
pub fn sample_step(
    rule: &impl IndividualRule,
    a: ActionProfile,
    utilities: &dyn StaticGame,
    rng: &mut impl Rng,
) -> Result<ActionProfile> {
    let agent = rng.gen_range(0..a.n());
    let u: f64 = rng.gen();
    let [_, p1] = rule.choice(agent, a, utilities)?;
    Ok(a.with(agent, u < p1))
}

/// Simulates a path of length `horizon`. For a dynamic game each step uses
/// the utilities of the history so far; static games are passed through
/// [`crate::game::Frozen`].
pub fn simulate_path<G: DynamicGame>(
    game: &G,
    rule: &impl IndividualRule,
    pi: &InitialDistribution,
    horizon: usize,
    rng: &mut impl Rng,
) -> Result<History> {
    let mut profiles = Vec::with_capacity(horizon);
    simulate_with(game, rule, pi, horizon, rng, |a, _| profiles.push(a))?;
    History::new(profiles)
}

/// Runs the chain for `horizon` profiles without storing them, calling
/// `observe(α^t, env(α^{≤t}))` once per step. Draws exactly the same random
/// numbers as [`simulate_path`].
pub fn simulate_with<G: DynamicGame>(
    game: &G,
    rule: &impl IndividualRule,
    pi: &InitialDistribution,
    horizon: usize,
    rng: &mut impl Rng,
    mut observe: impl FnMut(ActionProfile, &G::Env),
) -> Result<()> {
    if horizon == 0 {
        return Err(param("T", "horizon must be at least 1"));
    }
    let mut a = pi.sample(rng);
    let mut env = game.start(a)?;
    observe(a, &env);
    for _ in 1..horizon {
        a = sample_step(rule, a, &EnvView::new(game, &env), rng)?;
        env = game.advance(&env, a)?;
        observe(a, &env);
    }
    Ok(())
}

/// Product of `π(α^1)` and the one-step probabilities along `α`, with
/// history-aware utilities. Zero whenever two consecutive profiles differ in
/// more than one coordinate.
pub fn exact_path_probability<G: DynamicGame>(
    game: &G,
    rule: &impl IndividualRule,
    pi: &InitialDistribution,
    alpha: &History,
) -> Result<f64> {
    let profiles = alpha.profiles();
    let mut prob = pi.prob(&profiles[0]);
    let mut env = game.start(profiles[0])?;
    for w in profiles.windows(2) {
        if prob == 0.0 {
            return Ok(0.0);
        }
        let (from, to) = (w[0], w[1]);
        let step = match crate::profile::deviator(&from, &to) {
            Err(_) => return Ok(0.0),
            Ok(_) => async_step_distribution(rule, from, &EnvView::new(game, &env))?.prob(&to),
        };
        prob *= step;
        env = game.advance(&env, to)?;
    }
    Ok(prob)
}

/// Dense path index: `Σ_t index(α^t) · (2^n)^(t-1)`.
pub fn path_index(path: &[ActionProfile]) -> usize {
    let n = path[0].n();
    path.iter()
        .rev()
        .fold(0usize, |acc, p| (acc << n) | p.index())
}

pub fn path_from_index(n: usize, horizon: usize, mut index: usize) -> History {
    let mask = (1usize << n) - 1;
    let profiles = (0..horizon)
        .map(|_| {
            let p = ActionProfile::from_index(n, index & mask);
            index >>= n;
            p
        })
        .collect();
    History::new(profiles).expect("non-empty")
}

/// Probabilities of every path of a fixed length, indexed by [`path_index`].
#[derive(Clone, Debug, PartialEq)]
pub struct PathDistribution {
    pub n: usize,
    pub horizon: usize,
    pub probs: Vec<f64>,
}

impl PathDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn expectation(&self, z: impl Fn(&History) -> f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != 0.0)
            .map(|(k, p)| p * z(&path_from_index(self.n, self.horizon, k)))
            .sum()
    }
}

pub(crate) fn check_path_budget(n: usize, horizon: usize, budget: u128) -> Result<()> {
    check_enumerable(n)?;
    let required = 1u128
        .checked_shl((n * horizon) as u32)
        .filter(|_| n * horizon < 127)
        .unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::Budget { required, budget });
    }
    Ok(())
}

/// Exact distribution over all `|A|^T` paths by a depth-first walk of the
/// path tree, pruning zero-mass branches.
pub fn exact_path_distribution<G: DynamicGame>(
    game: &G,
    rule: &impl IndividualRule,
    pi: &InitialDistribution,
    horizon: usize,
    budget: u128,
) -> Result<PathDistribution> {
    let n = game.num_agents();
    if horizon == 0 {
        return Err(param("T", "horizon must be at least 1"));
    }
    check_path_budget(n, horizon, budget)?;
    let mut probs = vec![0.0; 1usize << (n * horizon)];

    fn recurse<G: DynamicGame, R: IndividualRule>(
        game: &G,
        rule: &R,
        horizon: usize,
        path: &mut Vec<ActionProfile>,
        env: &G::Env,
        mass: f64,
        probs: &mut [f64],
    ) -> Result<()> {
        if path.len() == horizon {
            probs[path_index(path)] = mass;
            return Ok(());
        }
        let here = *path.last().expect("non-empty");
        let step = async_step_distribution(rule, here, &EnvView::new(game, env))?;
        for &(next, w) in step.entries() {
            if w == 0.0 {
                continue;
            }
            let child = game.advance(env, next)?;
            path.push(next);
            recurse(game, rule, horizon, path, &child, mass * w, probs)?;
            path.pop();
        }
        Ok(())
    }

    let mut path = Vec::with_capacity(horizon);
    for first in ActionProfile::all(n) {
        let mass = pi.prob(&first);
        if mass == 0.0 {
            continue;
        }
        let env = game.start(first)?;
        path.push(first);
        recurse(game, rule, horizon, &mut path, &env, mass, &mut probs)?;
        path.pop();
    }
    Ok(PathDistribution { n, horizon, probs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleProperty {
    Individual,
    Local,
    Monotone,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuleViolation {
    pub property: RuleProperty,
    pub instance: usize,
    pub agent: usize,
    pub profile: ActionProfile,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuleReport {
    pub instances: usize,
    pub checks: u64,
    pub individual: Option<RuleViolation>,
    pub local: Option<RuleViolation>,
    pub monotone: Option<RuleViolation>,
}

impl RuleReport {
    pub fn passed(&self) -> bool {
        self.individual.is_none() && self.local.is_none() && self.monotone.is_none()
    }
}

/// `U` with every entry outside agent `i`'s local payoff block at `a_{-i}`
/// shifted by a fixed pattern.
struct NonLocalPerturbation<'a> {
    base: &'a dyn StaticGame,
    agent: usize,
    anchor: ActionProfile,
    scale: f64,
}

impl StaticGame for NonLocalPerturbation<'_> {
    fn num_agents(&self) -> usize {
        self.base.num_agents()
    }
    fn utility(&self, agent: usize, a: ActionProfile) -> f64 {
        let own_block = agent == self.agent && (a.bits() ^ self.anchor.bits()) & !(1 << agent) == 0;
        let u = self.base.utility(agent, a);
        if own_block {
            u
        } else {
            u + self.scale * (((agent * 31 + a.index() * 17) % 7) as f64 - 3.0)
        }
    }
}

/// `Ū_i(a) = U_i(a) + l` whenever `a_i = action`.
struct Lifted<'a> {
    base: &'a dyn StaticGame,
    agent: usize,
    action: bool,
    lift: f64,
}

impl StaticGame for Lifted<'_> {
    fn num_agents(&self) -> usize {
        self.base.num_agents()
    }
    fn utility(&self, agent: usize, a: ActionProfile) -> f64 {
        let u = self.base.utility(agent, a);
        if agent == self.agent && a.get(agent) == self.action {
            u + self.lift
        } else {
            u
        }
    }
}

/// Checks that `rule` is individual, local, and monotone with respect to
/// utility on every `(instance, profile, agent)` of the ensemble, lifting
/// payoffs by each `l` in `lifts`. Stops recording a property at its first
/// counterexample.
pub fn verify_rule_properties(
    rule: &impl IndividualRule,
    ensemble: &[TableGame],
    lifts: &[f64],
) -> RuleReport {
    let mut report = RuleReport {
        instances: ensemble.len(),
        checks: 0,
        individual: None,
        local: None,
        monotone: None,
    };
    let close = |x: [f64; 2], y: [f64; 2]| {
        (x[0] - y[0]).abs() <= PROB_TOL && (x[1] - y[1]).abs() <= PROB_TOL
    };

    for (k, game) in ensemble.iter().enumerate() {
        let n = game.num_agents();
        for a in ActionProfile::all(n) {
            for i in 0..n {
                report.checks += 1;
                let violation = |property, detail: String| RuleViolation {
                    property,
                    instance: k,
                    agent: i,
                    profile: a,
                    detail,
                };
                let base = match rule.choice(i, a, game) {
                    Ok(p) => p,
                    Err(e) => {
                        report.individual.get_or_insert_with(|| {
                            violation(RuleProperty::Individual, e.to_string())
                        });
                        continue;
                    }
                };
                if report.individual.is_none()
                    && (base.iter().any(|p| !(*p >= 0.0) || !p.is_finite())
                        || (base[0] + base[1] - 1.0).abs() > PROB_TOL)
                {
                    report.individual = Some(violation(
                        RuleProperty::Individual,
                        format!("choice {base:?} is not a distribution"),
                    ));
                }

                if report.local.is_none() {
                    let flipped = rule.choice(i, a.flip(i), game);
                    let mut detail = match flipped {
                        Ok(p) if close(p, base) => None,
                        Ok(p) => Some(format!(
                            "own previous action changes choice {base:?} -> {p:?}"
                        )),
                        Err(e) => Some(e.to_string()),
                    };
                    for scale in [0.5, -1.3] {
                        if detail.is_some() {
                            break;
                        }
                        let perturbed = NonLocalPerturbation {
                            base: game,
                            agent: i,
                            anchor: a,
                            scale,
                        };
                        detail = match rule.choice(i, a, &perturbed) {
                            Ok(p) if close(p, base) => None,
                            Ok(p) => {
                                Some(format!("non-local payoffs change choice {base:?} -> {p:?}"))
                            }
                            Err(e) => Some(e.to_string()),
                        };
                    }
                    if let Some(d) = detail {
                        report.local = Some(violation(RuleProperty::Local, d));
                    }
                }

                if report.monotone.is_none() {
                    'lift: for &lift in lifts {
                        for action in [false, true] {
                            let lifted = Lifted {
                                base: game,
                                agent: i,
                                action,
                                lift,
                            };
                            let x = action as usize;
                            match rule.choice(i, a, &lifted) {
                                Ok(p) if p[x] >= base[x] - PROB_TOL => {}
                                Ok(p) => {
                                    report.monotone = Some(violation(
                                        RuleProperty::Monotone,
                                        format!("lift {lift} on action {x} lowers its probability {} -> {}", base[x], p[x]),
                                    ));
                                    break 'lift;
                                }
                                Err(e) => {
                                    report.monotone =
                                        Some(violation(RuleProperty::Monotone, e.to_string()));
                                    break 'lift;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    report
}

/// Seeded ensemble of random payoff tables with `1..=max_agents` agents.
/// Every other instance uses integer payoffs from `{0,1,2}` to exercise ties.
pub fn random_ensemble(count: usize, max_agents: usize, seed: u64) -> Vec<TableGame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let n = 1 + k % max_agents.max(1);
            let levels = (k % 2 == 1).then_some(3);
            TableGame::random(n, &mut rng, levels).expect("small n")
        })
        .collect()
}
