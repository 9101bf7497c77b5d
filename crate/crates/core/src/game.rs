//! Game models: static utility oracles, history-dependent games driven by an
//! environment state, and the aligned-pair checker.

use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::{submasks, ActionProfile, History, MAX_EXACT_AGENTS};

/// Utilities of a static game, `U_i(a)`.
pub trait StaticGame: Send + Sync {
    fn num_agents(&self) -> usize;
    fn utility(&self, agent: usize, a: ActionProfile) -> f64;
}

impl<G: StaticGame + ?Sized> StaticGame for &G {
    fn num_agents(&self) -> usize {
        (**self).num_agents()
    }
    fn utility(&self, agent: usize, a: ActionProfile) -> f64 {
        (**self).utility(agent, a)
    }
}

impl<G: StaticGame + ?Sized> StaticGame for Box<G> {
    fn num_agents(&self) -> usize {
        (**self).num_agents()
    }
    fn utility(&self, agent: usize, a: ActionProfile) -> f64 {
        (**self).utility(agent, a)
    }
}

/// A history-dependent game `U^α`.
///
/// The history enters only through an environment value folded over the
/// profiles played so far: `start` observes `α^1` and `advance` observes each
/// later profile. Utilities for history `α` are then `utility(env(α), i, a)`.
pub trait DynamicGame: Send + Sync {
    type Env: Clone + Send + Sync;

    fn num_agents(&self) -> usize;
    fn start(&self, first: ActionProfile) -> Result<Self::Env>;
    fn advance(&self, env: &Self::Env, next: ActionProfile) -> Result<Self::Env>;
    fn utility(&self, env: &Self::Env, agent: usize, a: ActionProfile) -> f64;

    fn env_of(&self, history: &History) -> Result<Self::Env> {
        let profiles = history.profiles();
        let mut env = self.start(profiles[0])?;
        for &p in &profiles[1..] {
            env = self.advance(&env, p)?;
        }
        Ok(env)
    }
}

impl<G: DynamicGame + ?Sized> DynamicGame for &G {
    type Env = G::Env;
    fn num_agents(&self) -> usize {
        (**self).num_agents()
    }
    fn start(&self, first: ActionProfile) -> Result<Self::Env> {
        (**self).start(first)
    }
    fn advance(&self, env: &Self::Env, next: ActionProfile) -> Result<Self::Env> {
        (**self).advance(env, next)
    }
    fn utility(&self, env: &Self::Env, agent: usize, a: ActionProfile) -> f64 {
        (**self).utility(env, agent, a)
    }
}

/// `U^α` for one fixed environment, viewed as a static utility vector.
pub struct EnvView<'a, G: DynamicGame> {
    pub game: &'a G,
    pub env: &'a G::Env,
}

impl<'a, G: DynamicGame> EnvView<'a, G> {
    pub fn new(game: &'a G, env: &'a G::Env) -> Self {
        Self { game, env }
    }
}

impl<G: DynamicGame> StaticGame for EnvView<'_, G> {
    fn num_agents(&self) -> usize {
        self.game.num_agents()
    }
    fn utility(&self, agent: usize, a: ActionProfile) -> f64 {
        self.game.utility(self.env, agent, a)
    }
}

/// A static game seen as a history-dependent one that ignores its history.
#[derive(Clone, Debug)]
pub struct Frozen<G>(pub G);

impl<G: StaticGame> DynamicGame for Frozen<G> {
    type Env = ();
    fn num_agents(&self) -> usize {
        self.0.num_agents()
    }
    fn start(&self, _first: ActionProfile) -> Result<()> {
        Ok(())
    }
    fn advance(&self, _env: &(), _next: ActionProfile) -> Result<()> {
        Ok(())
    }
    fn utility(&self, _env: &(), agent: usize, a: ActionProfile) -> f64 {
        self.0.utility(agent, a)
    }
}

/// Static game given by a closure.
pub struct FnGame<F> {
    n: usize,
    f: F,
}

impl<F> FnGame<F>
where
    F: Fn(usize, ActionProfile) -> f64 + Send + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> StaticGame for FnGame<F>
where
    F: Fn(usize, ActionProfile) -> f64 + Send + Sync,
{
    fn num_agents(&self) -> usize {
        self.n
    }
    fn utility(&self, agent: usize, a: ActionProfile) -> f64 {
        (self.f)(agent, a)
    }
}

/// Explicit payoff table over all `2^n` profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct TableGame {
    n: usize,
    values: Vec<f64>,
}

impl TableGame {
    pub fn from_game(game: &impl StaticGame) -> Result<Self> {
        let n = game.num_agents();
        check_enumerable(n)?;
        let mut values = Vec::with_capacity(n << n);
        for a in ActionProfile::all(n) {
            for i in 0..n {
                values.push(game.utility(i, a));
            }
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, ActionProfile) -> f64) -> Result<Self> {
        check_enumerable(n)?;
        let mut values = Vec::with_capacity(n << n);
        for a in ActionProfile::all(n) {
            for i in 0..n {
                values.push(f(i, a));
            }
        }
        Ok(Self { n, values })
    }

    /// Random payoffs. With `integer_levels = Some(k)` payoffs are drawn from
    /// `{0, …, k-1}` so that ties occur; otherwise uniformly from `[-1, 1)`.
    pub fn random(n: usize, rng: &mut impl Rng, integer_levels: Option<u32>) -> Result<Self> {
        Self::from_fn(n, |_, _| 0.0).map(|mut t| {
            for v in &mut t.values {
                *v = match integer_levels {
                    Some(k) => rng.gen_range(0..k) as f64,
                    None => rng.gen_range(-1.0..1.0),
                };
            }
            t
        })
    }

    pub fn set(&mut self, agent: usize, a: ActionProfile, value: f64) {
        self.values[a.index() * self.n + agent] = value;
    }

    pub fn get(&self, agent: usize, a: ActionProfile) -> f64 {
        self.values[a.index() * self.n + agent]
    }
}

impl StaticGame for TableGame {
    fn num_agents(&self) -> usize {
        self.n
    }
    fn utility(&self, agent: usize, a: ActionProfile) -> f64 {
        self.get(agent, a)
    }
}

pub(crate) fn check_enumerable(n: usize) -> Result<()> {
    if n == 0 || n > MAX_EXACT_AGENTS {
        return Err(Error::Budget {
            required: 1u128 << n.min(127),
            budget: 1u128 << MAX_EXACT_AGENTS,
        });
    }
    Ok(())
}

/// Number of histories of length `1..=t_max` over `n` agents.
pub fn history_count(n: usize, t_max: usize) -> u128 {
    let per_step = 1u128.checked_shl(n as u32).unwrap_or(u128::MAX);
    let mut total = 0u128;
    let mut layer = 1u128;
    for _ in 0..t_max {
        layer = layer.saturating_mul(per_step);
        total = total.saturating_add(layer);
    }
    total
}

/// Depth-first walk over every history of length `1..=t_max`, carrying the
/// game environment. The callback sees `(α, env(α))`; returning `Break` stops
/// the walk.
pub(crate) fn walk_histories<G, B>(
    game: &G,
    t_max: usize,
    visit: &mut impl FnMut(&[ActionProfile], &G::Env) -> ControlFlow<B>,
) -> Result<Option<B>>
where
    G: DynamicGame,
{
    fn recurse<G: DynamicGame, B>(
        game: &G,
        t_max: usize,
        path: &mut Vec<ActionProfile>,
        env: &G::Env,
        visit: &mut impl FnMut(&[ActionProfile], &G::Env) -> ControlFlow<B>,
    ) -> Result<Option<B>> {
        if let ControlFlow::Break(b) = visit(path, env) {
            return Ok(Some(b));
        }
        if path.len() == t_max {
            return Ok(None);
        }
        for next in ActionProfile::all(game.num_agents()) {
            let child = game.advance(env, next)?;
            path.push(next);
            let out = recurse(game, t_max, path, &child, visit)?;
            path.pop();
            if out.is_some() {
                return Ok(out);
            }
        }
        Ok(None)
    }

    let n = game.num_agents();
    check_enumerable(n)?;
    let mut path = Vec::with_capacity(t_max);
    for first in ActionProfile::all(n) {
        let env = game.start(first)?;
        path.push(first);
        let out = recurse(game, t_max, &mut path, &env, visit)?;
        path.pop();
        if out.is_some() {
            return Ok(out);
        }
    }
    Ok(None)
}

/// A history-dependent game together with its static reference game.
#[derive(Clone, Debug)]
pub struct AlignedGamePair<D, S> {
    pub dynamic: D,
    pub reference: S,
}

impl<D: DynamicGame, S: StaticGame> AlignedGamePair<D, S> {
    pub fn new(dynamic: D, reference: S) -> Result<Self> {
        if dynamic.num_agents() != reference.num_agents() {
            return Err(Error::Dimension {
                expected: dynamic.num_agents(),
                found: reference.num_agents(),
            });
        }
        Ok(Self { dynamic, reference })
    }

    pub fn num_agents(&self) -> usize {
        self.reference.num_agents()
    }
}

/// Slack allowed in the alignment inequalities.
pub const ALIGN_TOL: f64 = 1e-12;

/// The first violated alignment inequality found.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignmentWitness {
    pub history: History,
    /// Reference profile `a`; only `a_{-i}` matters and `a_i` is reported as 0.
    pub profile: ActionProfile,
    /// 0-based agent index.
    pub agent: usize,
    /// 1: `U^α_i(1, α^T_{-i}) ≥ Û_i(1, a_{-i})`; 2: `Û_i(0, a_{-i}) ≥ U^α_i(0, α^T_{-i})`.
    pub condition: u8,
    pub dynamic_value: f64,
    pub reference_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum AlignmentVerdict {
    /// Every history up to the horizon was enumerated.
    Pass {
        histories: u64,
    },
    /// Histories were sampled; this is evidence, not a proof.
    SampledPass {
        samples: u64,
    },
    Counterexample(AlignmentWitness),
}

impl AlignmentVerdict {
    pub fn passed(&self) -> bool {
        !matches!(self, AlignmentVerdict::Counterexample(_))
    }
}

/// Checks one history against the alignment inequalities, over every agent
/// and every reference profile whose others-part lies below `α^T_{-i}`.
/// `pick` selects which reference profiles to try: all submasks, or a sample.
fn check_history<D: DynamicGame, S: StaticGame>(
    pair: &AlignedGamePair<D, S>,
    path: &[ActionProfile],
    env: &D::Env,
    mut pick: impl FnMut(u64) -> Vec<u64>,
) -> Option<AlignmentWitness> {
    let n = pair.num_agents();
    let last = *path.last().expect("non-empty");
    for i in 0..n {
        let dyn_one = pair.dynamic.utility(env, i, last.with(i, true));
        let dyn_zero = pair.dynamic.utility(env, i, last.with(i, false));
        let others = last.bits() & !(1 << i);
        for sub in pick(others) {
            let a = ActionProfile::from_bits(n, sub).expect("submask");
            let ref_one = pair.reference.utility(i, a.with(i, true));
            let ref_zero = pair.reference.utility(i, a.with(i, false));
            let witness = |condition, dynamic_value, reference_value| AlignmentWitness {
                history: History::new(path.to_vec()).expect("non-empty"),
                profile: a,
                agent: i,
                condition,
                dynamic_value,
                reference_value,
            };
            if dyn_one < ref_one - ALIGN_TOL {
                return Some(witness(1, dyn_one, ref_one));
            }
            if ref_zero < dyn_zero - ALIGN_TOL {
                return Some(witness(2, dyn_zero, ref_zero));
            }
        }
    }
    None
}

/// Exhaustively checks the alignment conditions on every history of length
/// at most `t_max`. Fails with a budget error when more than `budget`
/// histories would be enumerated.
pub fn check_aligned<D: DynamicGame, S: StaticGame>(
    pair: &AlignedGamePair<D, S>,
    t_max: usize,
    budget: u128,
) -> Result<AlignmentVerdict> {
    let n = pair.num_agents();
    check_enumerable(n)?;
    let required = history_count(n, t_max);
    if required > budget {
        return Err(Error::Budget { required, budget });
    }
    let mut histories = 0u64;
    let found = walk_histories(&pair.dynamic, t_max, &mut |path, env| {
        histories += 1;
        match check_history(pair, path, env, |mask| submasks(mask).collect()) {
            Some(w) => ControlFlow::Break(w),
            None => ControlFlow::Continue(()),
        }
    })?;
    Ok(match found {
        Some(w) => AlignmentVerdict::Counterexample(w),
        None => AlignmentVerdict::Pass { histories },
    })
}

/// Sampled variant for games too large to enumerate: draws `samples`
/// histories with uniform length and uniform profiles, and one random
/// dominated reference profile per agent.
pub fn check_aligned_sampled<D: DynamicGame, S: StaticGame>(
    pair: &AlignedGamePair<D, S>,
    t_max: usize,
    samples: u64,
    seed: u64,
) -> Result<AlignmentVerdict> {
    let n = pair.num_agents();
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let len = rng.gen_range(1..=t_max.max(1));
        let path: Vec<ActionProfile> = (0..len)
            .map(|_| ActionProfile::from_bits(n, rng.gen::<u64>() & mask).expect("masked"))
            .collect();
        let history = History::new(path.clone())?;
        let env = pair.dynamic.env_of(&history)?;
        let draw: u64 = rng.gen();
        if let Some(w) = check_history(pair, &path, &env, |m| vec![m & draw, 0, m]) {
            return Ok(AlignmentVerdict::Counterexample(w));
        }
    }
    Ok(AlignmentVerdict::SampledPass { samples })
}
