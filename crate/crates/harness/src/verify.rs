//! Batches of exhaustive desk-scale checks with one JSON verdict each.

use hdgame::cases::cti::{cti_potential, cti_reference, CtiConfig, CtiGame, ValueProcess};
use hdgame::cases::sisgcg::{gcg_reference, SisgcgConfig, SisgcgGame};
use hdgame::coupling::{
    build_one_step_coupling, coupling_gap_identity, dominance_oracle, path_coupling_distribution,
    sweep_one_step_couplings, verify_one_step_coupling, PathFunctional,
};
use hdgame::equilibrium::{
    check_exact_potential, gibbs_distribution, potential_maximizers, stationary_distribution,
    total_variation, PotentialFunction, TransitionMatrix,
};
use hdgame::learning::{random_ensemble, verify_rule_properties};
use hdgame::{
    check_aligned, exact_path_distribution, ActionProfile, AlignedGamePair, DynamicGame, Frozen,
    Graph, History, IndividualRule, InertialRule, InitialDistribution, LearningRule, StaticGame,
};
use serde::Serialize;

use crate::error::Result;

/// Tolerance for coupling, marginal and dominance checks.
pub const COUPLING_TOL: f64 = 1e-12;
pub const GAP_TOL: f64 = 1e-10;
pub const POTENTIAL_TOL: f64 = 1e-9;
pub const GIBBS_TOL: f64 = 1e-9;

const ENUMERATION_BUDGET: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Core,
    Coupling,
    Equilibrium,
    All,
}

impl Scope {
    fn includes(self, other: Scope) -> bool {
        self == Scope::All || self == other
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub scope: Scope,
    /// Largest number of agents in the enumerated sweeps.
    pub budget: usize,
    /// Injects a known fault into one fixture per scope so that the
    /// corresponding property must be reported as failing.
    pub corrupt: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            scope: Scope::All,
            budget: 4,
            corrupt: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyVerdict {
    pub scope: Scope,
    pub property: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_violation: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub budget: usize,
    pub corrupt: bool,
    pub verdicts: Vec<PropertyVerdict>,
    pub passed: bool,
}

struct Collector {
    scope: Scope,
    verdicts: Vec<PropertyVerdict>,
}

impl Collector {
    fn push(
        &mut self,
        property: impl Into<String>,
        passed: bool,
        max_violation: Option<f64>,
        detail: String,
    ) {
        self.verdicts.push(PropertyVerdict {
            scope: self.scope,
            property: property.into(),
            passed,
            max_violation,
            detail,
        });
    }
}

pub fn bounded_uniform_process() -> ValueProcess {
    ValueProcess::BoundedUniform {
        base: 0.4,
        width: 0.1,
        epsilon: 0.001,
        per_agent: false,
    }
}

fn cti_pair(
    graph: Graph,
    value: ValueProcess,
    seed: u64,
) -> Result<AlignedGamePair<CtiGame, hdgame::cases::cti::CtiReference>> {
    let n = graph.num_nodes();
    let cfg = CtiConfig::with_process_bound(graph, vec![0.4; n], value)?;
    Ok(AlignedGamePair::new(
        CtiGame::new(cfg.clone(), seed),
        cti_reference(&cfg),
    )?)
}

/// Coupled epidemic with the susceptible fraction already below `γ/β₁`.
pub fn sis_inside(n: usize) -> Result<SisgcgConfig> {
    Ok(SisgcgConfig::new(
        Graph::ring(n),
        0.25,
        0.9,
        0.45,
        0.25 / 0.45 + 1e-3,
        0.5,
        100,
    )?)
}

pub fn run_verifications(opts: VerifyOptions) -> Result<VerificationReport> {
    let mut verdicts = Vec::new();
    if opts.scope.includes(Scope::Core) {
        let mut c = Collector {
            scope: Scope::Core,
            verdicts: Vec::new(),
        };
        core_suite(&mut c, opts)?;
        verdicts.extend(c.verdicts);
    }
    if opts.scope.includes(Scope::Coupling) {
        let mut c = Collector {
            scope: Scope::Coupling,
            verdicts: Vec::new(),
        };
        coupling_suite(&mut c, opts)?;
        verdicts.extend(c.verdicts);
    }
    if opts.scope.includes(Scope::Equilibrium) {
        let mut c = Collector {
            scope: Scope::Equilibrium,
            verdicts: Vec::new(),
        };
        equilibrium_suite(&mut c, opts)?;
        verdicts.extend(c.verdicts);
    }
    let passed = verdicts.iter().all(|v| v.passed);
    Ok(VerificationReport {
        budget: opts.budget,
        corrupt: opts.corrupt,
        verdicts,
        passed,
    })
}

fn rule_verdict(
    c: &mut Collector,
    name: &str,
    rule: &impl IndividualRule,
    expect_pass: bool,
    budget: usize,
) {
    let ensemble = random_ensemble(200, budget.clamp(1, 4), 7);
    let report = verify_rule_properties(rule, &ensemble, &[0.0, 0.1, 1.0, 10.0]);
    let first = [&report.individual, &report.local, &report.monotone]
        .into_iter()
        .flatten()
        .next()
        .map(|v| {
            format!(
                "{:?} fails on instance {}: {}",
                v.property, v.instance, v.detail
            )
        });
    let detail = match first {
        Some(d) => d,
        None => format!("{} instances, {} checks", report.instances, report.checks),
    };
    let passed = if expect_pass {
        report.passed()
    } else {
        report.local.is_some()
    };
    c.push(name, passed, None, detail);
}

fn core_suite(c: &mut Collector, opts: VerifyOptions) -> Result<()> {
    for tau in [0.05, 1.0] {
        rule_verdict(
            c,
            &format!("rule-properties-log-linear-tau-{tau}"),
            &LearningRule::log_linear(tau)?,
            true,
            opts.budget,
        );
    }
    rule_verdict(
        c,
        "rule-properties-best-response",
        &LearningRule::BestResponse,
        true,
        opts.budget,
    );
    rule_verdict(
        c,
        "inertial-rule-rejected",
        &InertialRule { keep: 0.9 },
        false,
        opts.budget,
    );

    let n = opts.budget.clamp(2, 3);
    let value = if opts.corrupt {
        // dips below the declared bound at the third step
        ValueProcess::Schedule {
            values: vec![0.5, 0.5, 0.3],
        }
    } else {
        bounded_uniform_process()
    };
    let cfg = CtiConfig::new(Graph::ring(n), vec![0.4; n], value, 0.401)?;
    let pair = AlignedGamePair::new(CtiGame::new(cfg.clone(), 3), cti_reference(&cfg))?;
    let verdict = check_aligned(&pair, 3, ENUMERATION_BUDGET)?;
    c.push(
        format!("cti-alignment-n{n}"),
        verdict.passed(),
        None,
        format!("{verdict:?}"),
    );

    let sis = sis_inside(n)?;
    let pair = AlignedGamePair::new(SisgcgGame::new(sis.clone()), gcg_reference(&sis))?;
    let verdict = check_aligned(&pair, 3, ENUMERATION_BUDGET)?;
    c.push(
        format!("sis-alignment-after-entry-n{n}"),
        verdict.passed(),
        None,
        format!("{verdict:?}"),
    );
    Ok(())
}

fn sweep_verdict<D: DynamicGame, S: StaticGame>(
    c: &mut Collector,
    name: String,
    pair: &AlignedGamePair<D, S>,
    rule: &LearningRule,
    t_max: usize,
) -> Result<()> {
    let sweep = sweep_one_step_couplings(pair, rule, t_max, ENUMERATION_BUDGET)?;
    let detail = format!(
        "{} couplings, {} errors, max clamped {:e}, worst {}",
        sweep.couplings,
        sweep.errors,
        sweep.max_clamped,
        sweep
            .first_error
            .as_ref()
            .or(sweep.worst.as_ref())
            .map(String::as_str)
            .unwrap_or("-")
    );
    c.push(
        name,
        sweep.passed(COUPLING_TOL),
        Some(sweep.max_violation),
        detail,
    );
    Ok(())
}

/// Largest pointwise gap between the coupling's marginals and the
/// independently enumerated path distributions.
pub fn marginal_error<D: DynamicGame, S: StaticGame>(
    pair: &AlignedGamePair<D, S>,
    rule: &LearningRule,
    pi: &InitialDistribution,
    horizon: usize,
) -> Result<f64> {
    let coupling = path_coupling_distribution(pair, rule, pi, horizon, ENUMERATION_BUDGET)?;
    let dynamic = exact_path_distribution(&pair.dynamic, rule, pi, horizon, ENUMERATION_BUDGET)?;
    let reference = exact_path_distribution(
        &Frozen(&pair.reference),
        rule,
        pi,
        horizon,
        ENUMERATION_BUDGET,
    )?;
    let diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    Ok(diff(&coupling.left_marginal().probs, &reference.probs)
        .max(diff(&coupling.right_marginal().probs, &dynamic.probs))
        .max(coupling.max_unordered_mass()))
}

fn coupling_suite(c: &mut Collector, opts: VerifyOptions) -> Result<()> {
    let rule = LearningRule::log_linear(0.3)?;
    for n in 2..=opts.budget.max(2) {
        let t_max = if n <= 4 { 3 } else { 2 };
        for (gname, graph) in [("ring", Graph::ring(n)), ("complete", Graph::complete(n))] {
            for (vname, value) in [
                ("constant", ValueProcess::Constant { value: 0.45 }),
                ("bounded-uniform", bounded_uniform_process()),
            ] {
                let pair = cti_pair(graph.clone(), value, 11)?;
                sweep_verdict(
                    c,
                    format!("coupling-sweep-cti-{gname}-{vname}-n{n}"),
                    &pair,
                    &rule,
                    t_max,
                )?;
            }
        }
    }
    for n in 2..=opts.budget.clamp(2, 3) {
        let sis = sis_inside(n)?;
        let pair = AlignedGamePair::new(SisgcgGame::new(sis.clone()), gcg_reference(&sis))?;
        sweep_verdict(c, format!("coupling-sweep-sis-n{n}"), &pair, &rule, 3)?;
    }

    // fixture: the two-firm coupling at a = 00 after the history (00, 11)
    let pair = cti_pair(Graph::ring(2), ValueProcess::Constant { value: 0.45 }, 0)?;
    let alpha = History::new(vec![ActionProfile::zeros(2), ActionProfile::ones(2)])?;
    let mut m = build_one_step_coupling(&pair, &rule, ActionProfile::zeros(2), &alpha)?;
    if opts.corrupt {
        m.perturb(ActionProfile::zeros(2), ActionProfile::ones(2), 1e-6);
    }
    let r = verify_one_step_coupling(&m);
    c.push(
        "coupling-fixture",
        r.passed(COUPLING_TOL),
        Some(r.max_violation()),
        format!("{r:?}"),
    );

    let pi = InitialDistribution::uniform(2);
    for (n, horizon) in [(2, 4), (3, 3)] {
        let pair = cti_pair(Graph::ring(n), bounded_uniform_process(), 5)?;
        let pi = if n == 2 {
            pi.clone()
        } else {
            InitialDistribution::uniform(3)
        };
        let err = marginal_error(&pair, &rule, &pi, horizon)?;
        c.push(
            format!("path-marginals-n{n}-T{horizon}"),
            err <= COUPLING_TOL,
            Some(err),
            "coupling marginals against enumerated path laws".into(),
        );
    }

    let pair = cti_pair(Graph::ring(3), bounded_uniform_process(), 5)?;
    let pi = InitialDistribution::uniform(3);
    for horizon in 2..=5 {
        let report = dominance_oracle(
            &pair,
            &rule,
            &pi,
            horizon,
            ENUMERATION_BUDGET,
            16,
            horizon as u64,
        )?;
        c.push(
            format!("dominance-n3-T{horizon}"),
            report.passed(),
            Some((-report.min_gap).max(0.0)),
            format!(
                "P(final all ones): dynamic {:.6} vs static {:.6}; min gap {:e}",
                report.final_all_ones.dynamic, report.final_all_ones.reference, report.min_gap
            ),
        );
    }
    let z = |h: &History| PathFunctional::TotalOnes.eval(h);
    let gap = coupling_gap_identity(&pair, &rule, &pi, 4, &z, ENUMERATION_BUDGET)?;
    c.push(
        "gap-identity-n3-T4",
        gap.difference <= GAP_TOL,
        Some(gap.difference),
        format!("lhs {:.12}, rhs {:.12}", gap.lhs, gap.rhs),
    );
    Ok(())
}

fn potential_verdict(
    c: &mut Collector,
    name: String,
    game: &impl StaticGame,
    closed: &PotentialFunction,
) -> Result<()> {
    match check_exact_potential(game)?.potential() {
        Some(phi) => {
            let err = phi.max_difference(closed);
            c.push(
                name,
                err <= POTENTIAL_TOL,
                Some(err),
                "recovered potential against closed form".into(),
            );
        }
        None => c.push(name, false, None, "not an exact potential game".into()),
    }
    Ok(())
}

fn equilibrium_suite(c: &mut Collector, opts: VerifyOptions) -> Result<()> {
    for n in [4, 6, 10] {
        let cfg =
            CtiConfig::with_process_bound(Graph::ring(n), vec![0.4; n], bounded_uniform_process())?;
        let mut closed = cti_potential(&cfg)?;
        if opts.corrupt && n == 4 {
            closed = PotentialFunction::from_fn(n, |a| {
                closed.get(a) + if a.is_all_ones() { 1e-6 } else { 0.0 }
            })?;
        }
        potential_verdict(
            c,
            format!("cti-potential-ring-{n}"),
            &cti_reference(&cfg),
            &closed,
        )?;
    }
    let cfg =
        CtiConfig::with_process_bound(Graph::ring(10), vec![0.4; 10], bounded_uniform_process())?;
    let best = potential_maximizers(&cti_potential(&cfg)?);
    c.push(
        "cti-unique-maximizer-ring-10",
        best == vec![ActionProfile::ones(10)],
        None,
        format!("maximizers {best:?}"),
    );

    let sis = SisgcgConfig::new(
        Graph::ring(8),
        0.25,
        0.9,
        0.45,
        0.25 / 0.45 + 1e-3,
        0.99,
        100,
    )?;
    let gcg = gcg_reference(&sis);
    potential_verdict(c, "gcg-potential-ring-8".into(), &gcg, &gcg.potential()?)?;
    let best = potential_maximizers(&gcg.potential()?);
    c.push(
        "gcg-unique-maximizer-ring-8",
        best == vec![ActionProfile::ones(8)],
        None,
        format!("maximizers {best:?}"),
    );

    for n in [4, 6, 8] {
        let cfg =
            CtiConfig::with_process_bound(Graph::ring(n), vec![0.4; n], bounded_uniform_process())?;
        gibbs_verdict(
            c,
            format!("gibbs-stationary-cti-ring-{n}"),
            &cti_reference(&cfg),
            &cti_potential(&cfg)?,
            0.1,
        )?;
    }
    gibbs_verdict(
        c,
        "gibbs-stationary-gcg-ring-8".into(),
        &gcg,
        &gcg.potential()?,
        0.3,
    )?;
    Ok(())
}

fn gibbs_verdict(
    c: &mut Collector,
    name: String,
    game: &impl StaticGame,
    phi: &PotentialFunction,
    tau: f64,
) -> Result<()> {
    let matrix = TransitionMatrix::build(game, &LearningRule::log_linear(tau)?)?;
    let stationary = stationary_distribution(&matrix)?;
    let tv = total_variation(&stationary, &gibbs_distribution(phi, tau)?);
    c.push(name, tv <= GIBBS_TOL, Some(tv), format!("tau = {tau}"));
    Ok(())
}
