//! Monotone couplings between the static reference chain and the
//! history-dependent chain, and exact oracles for the dominance results they
//! imply.
//!
//! Orientation: the left coordinate always follows the static reference game
//! (the dominated chain) and the right coordinate the history-dependent game.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{
    check_enumerable, history_count, walk_histories, AlignedGamePair, DynamicGame, EnvView, Frozen,
    StaticGame,
};
use crate::learning::{
    check_path_budget, exact_path_distribution, individual_kernels, path_from_index, path_index,
    IndividualRule, InitialDistribution, PathDistribution, TransitionDistribution,
};
use crate::profile::{deviator, mirror_b, partition_sets, submasks, ActionProfile, History};

/// Negative cells down to this value are treated as round-off and clamped.
pub const CLAMP_TOL: f64 = 1e-9;

/// Sparse joint distribution over ordered profile pairs with both target
/// marginals cached.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingMatrix {
    low: ActionProfile,
    high: ActionProfile,
    entries: Vec<(ActionProfile, ActionProfile, f64)>,
    left: TransitionDistribution,
    right: TransitionDistribution,
    clamped: f64,
}

impl CouplingMatrix {
    /// Raw constructor, used for fixtures and the product coupling. Cells are
    /// merged and sorted; nothing is validated.
    pub fn from_parts(
        left: TransitionDistribution,
        right: TransitionDistribution,
        cells: impl IntoIterator<Item = (ActionProfile, ActionProfile, f64)>,
    ) -> Self {
        let mut map = BTreeMap::new();
        for (x, y, w) in cells {
            *map.entry((x, y)).or_insert(0.0) += w;
        }
        Self {
            low: left.origin(),
            high: right.origin(),
            entries: map.into_iter().map(|((x, y), w)| (x, y, w)).collect(),
            left,
            right,
            clamped: 0.0,
        }
    }

    /// Independent coupling `left ⊗ right`.
    pub fn product(left: TransitionDistribution, right: TransitionDistribution) -> Self {
        let cells: Vec<_> = left
            .entries()
            .iter()
            .flat_map(|&(x, p)| right.entries().iter().map(move |&(y, q)| (x, y, p * q)))
            .filter(|c| c.2 != 0.0)
            .collect();
        Self::from_parts(left, right, cells)
    }

    pub fn low(&self) -> ActionProfile {
        self.low
    }

    pub fn high(&self) -> ActionProfile {
        self.high
    }

    pub fn entries(&self) -> &[(ActionProfile, ActionProfile, f64)] {
        &self.entries
    }

    pub fn get(&self, x: &ActionProfile, y: &ActionProfile) -> f64 {
        self.entries
            .iter()
            .find(|(a, b, _)| a == x && b == y)
            .map_or(0.0, |c| c.2)
    }

    /// Adds `delta` to one cell, creating it if needed.
    pub fn perturb(&mut self, x: ActionProfile, y: ActionProfile, delta: f64) {
        match self.entries.iter_mut().find(|(a, b, _)| *a == x && *b == y) {
            Some(c) => c.2 += delta,
            None => {
                self.entries.push((x, y, delta));
                self.entries.sort_by_key(|p| (p.0, p.1));
            }
        }
    }

    pub fn left_marginal(&self) -> &TransitionDistribution {
        &self.left
    }

    pub fn right_marginal(&self) -> &TransitionDistribution {
        &self.right
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|c| c.2).sum()
    }

    /// Largest magnitude clamped to zero during construction.
    pub fn clamped(&self) -> f64 {
        self.clamped
    }
}

/// Builds the monotone one-step coupling from per-agent choice kernels:
/// `left` are the static rule's kernels at `low`, `right` the dynamic rule's
/// kernels at `high`.
///
/// Every nonzero cell pairs ordered profiles. Cells are nonnegative exactly
/// when `right[i][1] >= left[i][1]` for every agent.
pub fn couple_kernels(
    low: ActionProfile,
    high: ActionProfile,
    left: &[[f64; 2]],
    right: &[[f64; 2]],
) -> Result<CouplingMatrix> {
    let n = low.n();
    let sets = partition_sets(&low, &high)?;
    let w = 1.0 / n as f64;
    let agent = |from: &ActionProfile, to: &ActionProfile| -> Result<usize> {
        Ok(deviator(from, to)?.index().expect("neighbor differs"))
    };

    let mut cells: Vec<(ActionProfile, ActionProfile, f64)> = Vec::with_capacity(2 * n + 1);
    for z in &sets.low_outside {
        let g = agent(&low, z)?;
        cells.push((*z, mirror_b(&low, &high, z)?, w * left[g][1]));
    }
    for z in &sets.high_up {
        let g = agent(&high, z)?;
        cells.push((low, *z, w * (right[g][1] - left[g][1])));
    }
    for z in &sets.high_inside {
        let g = agent(&high, z)?;
        cells.push((low, *z, w * right[g][z.action(g) as usize]));
    }
    for z in &sets.low_inside {
        let g = agent(&low, z)?;
        cells.push((*z, high, w * left[g][z.action(g) as usize]));
    }
    for z in &sets.low_down {
        let g = agent(&low, z)?;
        cells.push((*z, mirror_b(&low, &high, z)?, w * right[g][0]));
        cells.push((*z, high, w * (left[g][0] - right[g][0])));
    }
    let mut moved = 0.0;
    for z in sets.low_inside.iter().chain(&sets.low_down) {
        moved += left[agent(&low, z)?][z.action(agent(&low, z)?) as usize];
    }
    for z in sets.high_inside.iter().chain(&sets.high_up) {
        moved += right[agent(&high, z)?][z.action(agent(&high, z)?) as usize];
    }
    cells.push((low, high, w * (n as f64 - moved)));

    let mut clamped: f64 = 0.0;
    for (x, y, v) in &mut cells {
        if *v < 0.0 {
            if *v < -CLAMP_TOL {
                return Err(Error::AlignmentViolation {
                    cell: format!("({x}, {y}) from ({low}, {high})"),
                    value: *v,
                });
            }
            clamped = clamped.max(-*v);
            *v = 0.0;
        }
    }
    cells.retain(|c| c.2 != 0.0);

    let mut m = CouplingMatrix::from_parts(
        TransitionDistribution::from_kernels(low, left)?,
        TransitionDistribution::from_kernels(high, right)?,
        cells,
    );
    m.clamped = clamped;
    Ok(m)
}

fn coupling_at_env<D: DynamicGame, S: StaticGame>(
    pair: &AlignedGamePair<D, S>,
    rule: &impl IndividualRule,
    low: ActionProfile,
    high: ActionProfile,
    env: &D::Env,
) -> Result<CouplingMatrix> {
    let left = individual_kernels(rule, low, &pair.reference)?;
    let right = individual_kernels(rule, high, &EnvView::new(&pair.dynamic, env))?;
    couple_kernels(low, high, &left, &right)
}

/// One-step coupling of the static chain at `a` and the history-dependent
/// chain after history `alpha`; requires `a ≤ α^T`.
pub fn build_one_step_coupling<D: DynamicGame, S: StaticGame>(
    pair: &AlignedGamePair<D, S>,
    rule: &impl IndividualRule,
    a: ActionProfile,
    alpha: &History,
) -> Result<CouplingMatrix> {
    if a.n() != pair.num_agents() || alpha.n() != pair.num_agents() {
        return Err(Error::Dimension {
            expected: pair.num_agents(),
            found: if a.n() != pair.num_agents() {
                a.n()
            } else {
                alpha.n()
            },
        });
    }
    if !a.leq(&alpha.last())? {
        return Err(Error::Order(format!("{a} is not below {}", alpha.last())));
    }
    let env = pair.dynamic.env_of(alpha)?;
    coupling_at_env(pair, rule, a, alpha.last(), &env)
}

/// Maximum violation of each coupling condition.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CouplingReport {
    pub negativity: f64,
    pub mass: f64,
    pub left_marginal: f64,
    pub right_marginal: f64,
    /// Mass on cells `(x, y)` with `x ≰ y`.
    pub support: f64,
    pub clamped: f64,
    /// Cell or profile responsible for the largest violation.
    pub witness: Option<String>,
}

impl CouplingReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.negativity,
            self.mass,
            self.left_marginal,
            self.right_marginal,
            self.support,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

pub fn verify_one_step_coupling(m: &CouplingMatrix) -> CouplingReport {
    let mut report = CouplingReport {
        clamped: m.clamped,
        ..Default::default()
    };
    let mut worst = 0.0;
    let mut note = |value: f64, what: String, report: &mut CouplingReport| {
        if value > worst {
            worst = value;
            report.witness = Some(what);
        }
    };

    let mut rows: BTreeMap<ActionProfile, f64> = BTreeMap::new();
    let mut cols: BTreeMap<ActionProfile, f64> = BTreeMap::new();
    for &(x, _) in m.left.entries() {
        rows.insert(x, 0.0);
    }
    for &(y, _) in m.right.entries() {
        cols.insert(y, 0.0);
    }
    for &(x, y, v) in &m.entries {
        *rows.entry(x).or_insert(0.0) += v;
        *cols.entry(y).or_insert(0.0) += v;
        if v < 0.0 {
            report.negativity = report.negativity.max(-v);
            note(-v, format!("negative cell ({x}, {y})"), &mut report);
        }
        let ordered = x.n() == y.n() && x.leq(&y).unwrap_or(false);
        if !ordered && v != 0.0 {
            report.support = report.support.max(v.abs());
            note(v.abs(), format!("unordered cell ({x}, {y})"), &mut report);
        }
    }
    report.mass = (m.total() - 1.0).abs();
    for (x, s) in rows {
        let d = (s - m.left.prob(&x)).abs();
        report.left_marginal = report.left_marginal.max(d);
        note(d, format!("left marginal at {x}"), &mut report);
    }
    for (y, s) in cols {
        let d = (s - m.right.prob(&y)).abs();
        report.right_marginal = report.right_marginal.max(d);
        note(d, format!("right marginal at {y}"), &mut report);
    }
    report
}

/// Result of checking every coupling over a family of `(a, α)` inputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CouplingSweep {
    pub couplings: u64,
    pub max_violation: f64,
    pub max_clamped: f64,
    pub errors: u64,
    pub worst: Option<String>,
    pub first_error: Option<String>,
}

impl CouplingSweep {
    pub fn passed(&self, tol: f64) -> bool {
        self.errors == 0 && self.max_violation <= tol
    }
}

/// Builds and verifies the one-step coupling for every history of length
/// `1..=t_max` and every `a ≤ α^T`.
pub fn sweep_one_step_couplings<D: DynamicGame, S: StaticGame>(
    pair: &AlignedGamePair<D, S>,
    rule: &impl IndividualRule,
    t_max: usize,
    budget: u128,
) -> Result<CouplingSweep> {
    let n = pair.num_agents();
    check_enumerable(n)?;
    let required = history_count(n, t_max);
    if required > budget {
        return Err(Error::Budget { required, budget });
    }
    let mut sweep = CouplingSweep::default();
    let mut failure = None;
    walk_histories(&pair.dynamic, t_max, &mut |path, env| {
        let high = *path.last().expect("non-empty");
        for bits in submasks(high.bits()) {
            let low = ActionProfile::from_bits(n, bits).expect("submask");
            sweep.couplings += 1;
            let describe = || {
                let h: Vec<String> = path.iter().map(|p| p.to_string()).collect();
                format!("a={low}, alpha=({})", h.join(","))
            };
            match coupling_at_env(pair, rule, low, high, env) {
                Ok(m) => {
                    let r = verify_one_step_coupling(&m);
                    sweep.max_clamped = sweep.max_clamped.max(r.clamped);
                    if r.max_violation() > sweep.max_violation || sweep.worst.is_none() {
                        sweep.max_violation = sweep.max_violation.max(r.max_violation());
                        sweep.worst = Some(describe());
                    }
                }
                Err(e @ Error::AlignmentViolation { .. }) => {
                    sweep.errors += 1;
                    sweep
                        .first_error
                        .get_or_insert_with(|| format!("{}: {e}", describe()));
                }
                Err(e) => {
                    failure = Some(e);
                    return ControlFlow::Break(());
                }
            }
        }
        ControlFlow::Continue(())
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(sweep),
    }
}

/// A pair of equal-length paths: `left` for the static chain, `right` for
/// the history-dependent chain.
#[derive(Clone, Debug, PartialEq)]
pub struct PathCouplingQuery {
    pub left: History,
    pub right: History,
    pub pi: InitialDistribution,
}

impl PathCouplingQuery {
    pub fn new(left: History, right: History, pi: InitialDistribution) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::Dimension {
                expected: left.len(),
                found: right.len(),
            });
        }
        if left.n() != right.n() || left.n() != pi.n() {
            return Err(Error::Dimension {
                expected: left.n(),
                found: if left.n() != right.n() {
                    right.n()
                } else {
                    pi.n()
                },
            });
        }
        Ok(Self { left, right, pi })
    }
}

/// Probability of a path pair under the path coupling: the initial mass on
/// a common first profile times the one-step coupling cells along the way.
pub fn path_coupling_probability<D: DynamicGame, S: StaticGame>(
    pair: &AlignedGamePair<D, S>,
    rule: &impl IndividualRule,
    query: &PathCouplingQuery,
) -> Result<f64> {
    let left = query.left.profiles();
    let right = query.right.profiles();
    if left[0] != right[0] {
        return Ok(0.0);
    }
    let mut prob = query.pi.prob(&left[0]);
    let mut env = pair.dynamic.start(right[0])?;
    for t in 1..left.len() {
        if prob == 0.0 {
            return Ok(0.0);
        }
        let m = coupling_at_env(pair, rule, left[t - 1], right[t - 1], &env)?;
        prob *= m.get(&left[t], &right[t]);
        env = pair.dynamic.advance(&env, right[t])?;
    }
    Ok(prob)
}

/// Every path pair with positive mass under the path coupling, keyed by
/// dense path indices.
#[derive(Clone, Debug, PartialEq)]
pub struct PathCoupling {
    pub n: usize,
    pub horizon: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl PathCoupling {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    fn marginal(&self, pick: impl Fn(&(usize, usize, f64)) -> usize) -> PathDistribution {
        let mut probs = vec![0.0; 1usize << (self.n * self.horizon)];
        for e in &self.entries {
            probs[pick(e)] += e.2;
        }
        PathDistribution {
            n: self.n,
            horizon: self.horizon,
            probs,
        }
    }

    pub fn left_marginal(&self) -> PathDistribution {
        self.marginal(|e| e.0)
    }

    pub fn right_marginal(&self) -> PathDistribution {
        self.marginal(|e| e.1)
    }

    /// Largest mass on a pair whose paths are not componentwise ordered.
    pub fn max_unordered_mass(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.0 & !e.1 != 0)
            .fold(0.0, |m, e| m.max(e.2))
    }
}

/// Enumerates the path coupling by a joint depth-first walk.
pub fn path_coupling_distribution<D: DynamicGame, S: StaticGame>(
    pair: &AlignedGamePair<D, S>,
    rule: &impl IndividualRule,
    pi: &InitialDistribution,
    horizon: usize,
    budget: u128,
) -> Result<PathCoupling> {
    let n = pair.num_agents();
    if horizon == 0 {
        return Err(crate::error::param("T", "horizon must be at least 1"));
    }
    check_path_budget(n, horizon, budget)?;

    struct Walk<'a, D: DynamicGame, S, R> {
        pair: &'a AlignedGamePair<D, S>,
        rule: &'a R,
        horizon: usize,
        left: Vec<ActionProfile>,
        right: Vec<ActionProfile>,
        out: Vec<(usize, usize, f64)>,
    }

    impl<D: DynamicGame, S: StaticGame, R: IndividualRule> Walk<'_, D, S, R> {
        fn go(&mut self, env: &D::Env, mass: f64) -> Result<()> {
            if self.left.len() == self.horizon {
                self.out
                    .push((path_index(&self.left), path_index(&self.right), mass));
                return Ok(());
            }
            let low = *self.left.last().expect("non-empty");
            let high = *self.right.last().expect("non-empty");
            let m = coupling_at_env(self.pair, self.rule, low, high, env)?;
            for &(x, y, w) in m.entries() {
                let child = self.pair.dynamic.advance(env, y)?;
                self.left.push(x);
                self.right.push(y);
                self.go(&child, mass * w)?;
                self.left.pop();
                self.right.pop();
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        pair,
        rule,
        horizon,
        left: Vec::with_capacity(horizon),
        right: Vec::with_capacity(horizon),
        out: Vec::new(),
    };
    for first in ActionProfile::all(n) {
        let mass = pi.prob(&first);
        if mass == 0.0 {
            continue;
        }
        let env = pair.dynamic.start(first)?;
        walk.left.push(first);
        walk.right.push(first);
        walk.go(&env, mass)?;
        walk.left.pop();
        walk.right.pop();
    }
    Ok(PathCoupling {
        n,
        horizon,
        entries: walk.out,
    })
}

/// Increasing path functionals used by the dominance oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathFunctional {
    /// Agents playing 1 at the final step.
    FinalCount,
    /// 1-plays summed over the whole path.
    TotalOnes,
    /// Whether the all-ones profile occurs on the path.
    ReachedAllOnes,
    /// Whether the final profile is all ones.
    FinalAllOnes,
}

impl PathFunctional {
    pub const INCREASING: [PathFunctional; 4] = [
        PathFunctional::FinalCount,
        PathFunctional::TotalOnes,
        PathFunctional::ReachedAllOnes,
        PathFunctional::FinalAllOnes,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PathFunctional::FinalCount => "final-count",
            PathFunctional::TotalOnes => "total-ones",
            PathFunctional::ReachedAllOnes => "reached-all-ones",
            PathFunctional::FinalAllOnes => "final-all-ones",
        }
    }

    pub fn eval(&self, path: &History) -> i64 {
        match self {
            PathFunctional::FinalCount => path.last().count_ones() as i64,
            PathFunctional::TotalOnes => {
                path.profiles().iter().map(|p| p.count_ones() as i64).sum()
            }
            PathFunctional::ReachedAllOnes => {
                path.profiles().iter().any(|p| p.is_all_ones()) as i64
            }
            PathFunctional::FinalAllOnes => path.last().is_all_ones() as i64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub dynamic: f64,
    pub reference: f64,
}

impl Comparison {
    pub fn gap(&self) -> f64 {
        self.dynamic - self.reference
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceReport {
    pub horizon: usize,
    pub final_all_ones: Comparison,
    pub functionals: Vec<Comparison>,
    pub upper_sets: Vec<Comparison>,
    /// Smallest `dynamic − reference` over every comparison.
    pub min_gap: f64,
    pub tolerance: f64,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.min_gap >= -self.tolerance
    }
}

/// Up-closure of a random antichain of paths, as a membership test on dense
/// path indices. Path order coincides with bit inclusion of the indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpperSet {
    pub generators: Vec<usize>,
}

impl UpperSet {
    pub fn random(n: usize, horizon: usize, rng: &mut impl Rng) -> Self {
        let width = n * horizon;
        let mask = if width >= 64 {
            u64::MAX
        } else {
            (1u64 << width) - 1
        };
        let k = rng.gen_range(1..=3);
        let mut picks: Vec<usize> = (0..k).map(|_| (rng.gen::<u64>() & mask) as usize).collect();
        // keep the minimal elements only
        let all = picks.clone();
        picks.retain(|&g| !all.iter().any(|&h| h != g && h & !g == 0));
        picks.sort_unstable();
        picks.dedup();
        Self { generators: picks }
    }

    pub fn contains(&self, path: usize) -> bool {
        self.generators.iter().any(|&g| g & !path == 0)
    }

    pub fn probability(&self, dist: &PathDistribution) -> f64 {
        dist.probs
            .iter()
            .enumerate()
            .filter(|(k, _)| self.contains(*k))
            .map(|(_, p)| p)
            .sum()
    }
}

/// Exact first-order dominance checks: `P(α^T = 1⃗)`, the increasing
/// functional library, and `upper_sets` seeded random upper sets.
pub fn dominance_oracle<D: DynamicGame, S: StaticGame>(
    pair: &AlignedGamePair<D, S>,
    rule: &impl IndividualRule,
    pi: &InitialDistribution,
    horizon: usize,
    budget: u128,
    upper_sets: usize,
    seed: u64,
) -> Result<DominanceReport> {
    let dynamic = exact_path_distribution(&pair.dynamic, rule, pi, horizon, budget)?;
    let reference = exact_path_distribution(&Frozen(&pair.reference), rule, pi, horizon, budget)?;
    let n = pair.num_agents();
    let compare = |name: String, f: &dyn Fn(&PathDistribution) -> f64| Comparison {
        name,
        dynamic: f(&dynamic),
        reference: f(&reference),
    };

    let ones = ActionProfile::ones(n).index();
    let shift = n * (horizon - 1);
    let final_all_ones = compare("final-all-ones".into(), &|d| {
        d.probs
            .iter()
            .enumerate()
            .filter(|(k, _)| k >> shift == ones)
            .map(|(_, p)| p)
            .sum()
    });
    let functionals: Vec<_> = PathFunctional::INCREASING
        .iter()
        .map(|z| {
            compare(z.name().to_string(), &|d| {
                d.expectation(|h| z.eval(h) as f64)
            })
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper: Vec<_> = (0..upper_sets)
        .map(|k| {
            let set = UpperSet::random(n, horizon, &mut rng);
            compare(format!("upper-set-{k}"), &|d| set.probability(d))
        })
        .collect();

    let min_gap = std::iter::once(&final_all_ones)
        .chain(&functionals)
        .chain(&upper)
        .map(Comparison::gap)
        .fold(f64::INFINITY, f64::min);
    Ok(DominanceReport {
        horizon,
        final_all_ones,
        functionals,
        upper_sets: upper,
        min_gap,
        tolerance: 1e-12,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    /// `E_dynamic[Z] − E_reference[Z]` from the two path distributions.
    pub lhs: f64,
    /// `Σ_η P(left ∈ {Z < η}, right ∈ {Z ≥ η})` under the path coupling.
    pub rhs: f64,
    pub difference: f64,
}

/// Checks the gap identity for an integer-valued increasing functional.
pub fn coupling_gap_identity<D: DynamicGame, S: StaticGame>(
    pair: &AlignedGamePair<D, S>,
    rule: &impl IndividualRule,
    pi: &InitialDistribution,
    horizon: usize,
    z: &dyn Fn(&History) -> i64,
    budget: u128,
) -> Result<GapReport> {
    let n = pair.num_agents();
    let dynamic = exact_path_distribution(&pair.dynamic, rule, pi, horizon, budget)?;
    let reference = exact_path_distribution(&Frozen(&pair.reference), rule, pi, horizon, budget)?;
    let ez = |d: &PathDistribution| d.expectation(|h| z(h) as f64);
    let lhs = ez(&dynamic) - ez(&reference);

    let coupling = path_coupling_distribution(pair, rule, pi, horizon, budget)?;
    let values: Vec<i64> = (0..1usize << (n * horizon))
        .map(|k| z(&path_from_index(n, horizon, k)))
        .collect();
    let lo = values.iter().copied().min().unwrap_or(0);
    let hi = values.iter().copied().max().unwrap_or(0);
    let mut rhs = 0.0;
    for eta in lo + 1..=hi {
        rhs += coupling
            .entries
            .iter()
            .filter(|(x, y, _)| values[*x] < eta && values[*y] >= eta)
            .map(|e| e.2)
            .sum::<f64>();
    }
    Ok(GapReport {
        lhs,
        rhs,
        difference: (lhs - rhs).abs(),
    })
}
