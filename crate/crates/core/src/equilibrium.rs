//! Static-game analysis: exact potentials, strict Nash equilibria, the exact
//! chain of asynchronous learning, and Monte Carlo stability estimates.

use std::io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::game::{check_enumerable, DynamicGame, StaticGame};
use crate::learning::{
    async_step_distribution, simulate_path, IndividualRule, InitialDistribution, LearningRule,
};
use crate::profile::ActionProfile;

/// Tolerance for the potential identity on deviation edges.
pub const POTENTIAL_TOL: f64 = 1e-9;

/// Margin a deviation must lose by for an equilibrium to count as strict.
pub const STRICT_MARGIN: f64 = 1e-9;

/// Potential values are tied when closer than this.
pub const ARGMAX_TOL: f64 = 1e-12;

/// States above this count are rejected by the exact chain routines.
pub const MAX_CHAIN_STATES: usize = 1 << 14;

/// Power-iteration cap for large chains.
pub const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialFunction {
    n: usize,
    values: Vec<f64>,
}

impl PotentialFunction {
    pub fn from_fn(n: usize, f: impl Fn(ActionProfile) -> f64) -> Result<Self> {
        check_enumerable(n)?;
        Ok(Self {
            n,
            values: ActionProfile::all(n).map(f).collect(),
        })
    }

    pub fn num_agents(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: ActionProfile) -> f64 {
        self.values[a.index()]
    }

    /// Values indexed by [`ActionProfile::index`].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Adds a constant so that `φ(0⃗) = at_zero`.
    pub fn anchored(mut self, at_zero: f64) -> Self {
        let shift = at_zero - self.values[0];
        for v in &mut self.values {
            *v += shift;
        }
        self
    }

    /// Largest `|φ(a) − other(a)|` after aligning both at `0⃗`.
    pub fn max_difference(&self, other: &PotentialFunction) -> f64 {
        let shift = other.values[0] - self.values[0];
        self.values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x + shift - y).abs())
            .fold(0.0, f64::max)
    }
}

/// A deviation edge on which utility and potential differences disagree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialViolation {
    pub profile: ActionProfile,
    pub agent: usize,
    pub utility_difference: f64,
    pub potential_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum PotentialCheck {
    Potential(PotentialFunction),
    Violation(PotentialViolation),
}

impl PotentialCheck {
    pub fn potential(self) -> Option<PotentialFunction> {
        match self {
            PotentialCheck::Potential(phi) => Some(phi),
            PotentialCheck::Violation(_) => None,
        }
    }
}

/// Integrates utility differences along the tree that reaches each profile
/// from `0⃗` by setting its highest agent last, then checks every one of the
/// `n·2^(n-1)` deviation edges. The returned potential has `φ(0⃗) = 0`.
pub fn check_exact_potential(game: &impl StaticGame) -> Result<PotentialCheck> {
    let n = game.num_agents();
    check_enumerable(n)?;
    let mut values = vec![0.0; 1 << n];
    for a in ActionProfile::all(n).skip(1) {
        let top = 63 - a.bits().leading_zeros() as usize;
        let parent = a.with(top, false);
        values[a.index()] =
            values[parent.index()] + game.utility(top, a) - game.utility(top, parent);
    }
    for a in ActionProfile::all(n) {
        for i in (0..n).filter(|&i| !a.get(i)) {
            let up = a.with(i, true);
            let du = game.utility(i, up) - game.utility(i, a);
            let dphi = values[up.index()] - values[a.index()];
            if !((du - dphi).abs() <= POTENTIAL_TOL) {
                return Ok(PotentialCheck::Violation(PotentialViolation {
                    profile: a,
                    agent: i,
                    utility_difference: du,
                    potential_difference: dphi,
                }));
            }
        }
    }
    Ok(PotentialCheck::Potential(PotentialFunction { n, values }))
}

/// Every profile within [`ARGMAX_TOL`] of the maximum potential.
pub fn potential_maximizers(phi: &PotentialFunction) -> Vec<ActionProfile> {
    let best = phi.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ActionProfile::all(phi.n)
        .filter(|a| phi.get(*a) >= best - ARGMAX_TOL)
        .collect()
}

/// Whether every unilateral deviation from `a` loses more than
/// [`STRICT_MARGIN`].
pub fn is_strict_nash(game: &impl StaticGame, a: ActionProfile) -> bool {
    (0..a.n()).all(|i| game.utility(i, a) - game.utility(i, a.flip(i)) > STRICT_MARGIN)
}

/// `exp(φ/τ)` normalized, indexed by profile index.
pub fn gibbs_distribution(phi: &PotentialFunction, tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(param("tau", format!("must be positive, got {tau}")));
    }
    let best = phi.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = phi
        .values
        .iter()
        .map(|v| ((v - best) / tau).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Sparse transition matrix of the asynchronous chain on a static game.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn build(game: &impl StaticGame, rule: &impl IndividualRule) -> Result<Self> {
        let n = game.num_agents();
        check_enumerable(n)?;
        if 1usize << n > MAX_CHAIN_STATES {
            return Err(Error::Budget {
                required: 1 << n,
                budget: MAX_CHAIN_STATES as u128,
            });
        }
        let rows = (0..1usize << n)
            .into_par_iter()
            .map(|k| {
                let d = async_step_distribution(rule, ActionProfile::from_index(n, k), game)?;
                Ok(d.entries()
                    .iter()
                    .filter(|e| e.1 != 0.0)
                    .map(|(p, w)| (p.index(), *w))
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, rows })
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn prob(&self, from: ActionProfile, to: ActionProfile) -> f64 {
        self.rows[from.index()]
            .iter()
            .find(|e| e.0 == to.index())
            .map_or(0.0, |e| e.1)
    }

    /// One step of the distribution: `x ↦ xP`.
    pub fn push_forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (from, row) in self.rows.iter().enumerate() {
            if x[from] == 0.0 {
                continue;
            }
            for &(to, w) in row {
                y[to] += x[from] * w;
            }
        }
        y
    }

    /// Distributions at `t = 1..=steps`, starting from `initial` at `t = 1`.
    pub fn evolve(&self, initial: &[f64], steps: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(steps);
        let mut x = initial.to_vec();
        for _ in 0..steps {
            let next = self.push_forward(&x);
            out.push(std::mem::replace(&mut x, next));
        }
        out
    }

    fn residual(&self, x: &[f64]) -> f64 {
        self.push_forward(x)
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    fn dense(&self) -> Vec<f64> {
        let s = self.num_states();
        let mut m = vec![0.0; s * s];
        for (from, row) in self.rows.iter().enumerate() {
            for &(to, w) in row {
                m[from * s + to] = w;
            }
        }
        m
    }
}

/// Chains up to this many states are solved by elimination.
pub const MAX_ELIMINATION_STATES: usize = 1 << 10;

/// Stationary vector by Grassmann–Taksar–Heyman elimination. The update
/// uses only sums and products of nonnegative numbers, so it stays accurate
/// for chains whose mixing time is far beyond any iteration budget. Returns
/// `None` when the chain is reducible.
fn gth_stationary(dense: &mut [f64], s: usize) -> Option<Vec<f64>> {
    for k in (1..s).rev() {
        let (upper, rest) = dense.split_at_mut(k * s);
        let row_k = &rest[..s];
        let out: f64 = row_k[..k].iter().sum();
        if !(out > 0.0) {
            return None;
        }
        upper.par_chunks_mut(s).for_each(|row| {
            let w = row[k] / out;
            row[k] = w;
            if w != 0.0 {
                for (r, b) in row[..k].iter_mut().zip(&row_k[..k]) {
                    *r += w * b;
                }
            }
        });
    }
    let mut x = vec![0.0; s];
    x[0] = 1.0;
    for j in 1..s {
        x[j] = (0..j).map(|i| x[i] * dense[i * s + j]).sum();
    }
    let z: f64 = x.iter().sum();
    Some(x.into_iter().map(|v| v / z).collect())
}

/// Target L1 residual `‖xP − x‖₁` of the stationary vector.
pub const STATIONARY_RESIDUAL: f64 = 1e-12;

/// Stationary distribution of the chain.
///
/// Irreducible chains with at most [`MAX_ELIMINATION_STATES`] states are
/// solved directly by elimination; others use power iteration from the
/// uniform vector, capped at [`MAX_ITERATIONS`]. Either way the result must
/// reach residual [`STATIONARY_RESIDUAL`].
pub fn stationary_distribution(matrix: &TransitionMatrix) -> Result<Vec<f64>> {
    let s = matrix.num_states();
    if s <= MAX_ELIMINATION_STATES {
        if let Some(x) = gth_stationary(&mut matrix.dense(), s) {
            if matrix.residual(&x) <= STATIONARY_RESIDUAL {
                return Ok(x);
            }
        }
    }
    let mut x = vec![1.0 / s as f64; s];
    for _ in 0..MAX_ITERATIONS {
        if matrix.residual(&x) <= STATIONARY_RESIDUAL {
            let z: f64 = x.iter().sum();
            return Ok(x.into_iter().map(|v| v / z).collect());
        }
        x = matrix.push_forward(&x);
    }
    Err(Error::Numeric(format!(
        "power iteration did not reach residual {STATIONARY_RESIDUAL} in {MAX_ITERATIONS} steps"
    )))
}

/// Writes `profile,probability` rows in canonical profile order.
pub fn write_distribution_csv(out: &mut impl io::Write, n: usize, probs: &[f64]) -> io::Result<()> {
    writeln!(out, "profile,probability")?;
    let mut profiles: Vec<_> = ActionProfile::all(n).collect();
    profiles.sort();
    for a in profiles {
        writeln!(out, "{a},{}", probs[a.index()])?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityEstimate {
    pub tau: Option<f64>,
    pub horizon: usize,
    pub trials: usize,
    pub estimate: f64,
    pub standard_error: f64,
}

impl StabilityEstimate {
    pub fn from_hits(tau: Option<f64>, horizon: usize, trials: usize, hits: usize) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            tau,
            horizon,
            trials,
            estimate: p,
            standard_error: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }
}

/// Monte Carlo frequency of `α^T = 1⃗`. Trial `k` draws from stream `k` of
/// a ChaCha8 generator seeded with `seed`, so results do not depend on the
/// thread count.
pub fn estimate_prob_all_ones<G: DynamicGame>(
    game: &G,
    rule: &LearningRule,
    pi: &InitialDistribution,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<StabilityEstimate> {
    if trials == 0 {
        return Err(param("trials", "must be at least 1"));
    }
    let hits = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let h = simulate_path(game, rule, pi, horizon, &mut rng)?;
            Ok(h.last().is_all_ones() as usize)
        })
        .sum::<Result<usize>>()?;
    Ok(StabilityEstimate::from_hits(
        rule.tau(),
        horizon,
        trials,
        hits,
    ))
}
