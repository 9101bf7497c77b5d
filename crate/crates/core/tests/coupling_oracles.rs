//! One-step couplings checked against a max-flow feasibility oracle and
//! hand-computed kernels.

use hdgame::cases::cti::{cti_reference, CtiConfig, CtiGame, ValueProcess};
use hdgame::coupling::{build_one_step_coupling, verify_one_step_coupling, CouplingMatrix};
use hdgame::{ActionProfile, AlignedGamePair, Error, FnGame, Frozen, Graph, History, LearningRule};

fn p(s: &str) -> ActionProfile {
    s.parse().unwrap()
}

/// Edmonds–Karp on a dense capacity matrix.
fn max_flow(cap: &mut [Vec<f64>], source: usize, sink: usize) -> f64 {
    let v = cap.len();
    let mut total = 0.0;
    loop {
        let mut parent = vec![usize::MAX; v];
        parent[source] = source;
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for w in 0..v {
                if parent[w] == usize::MAX && cap[u][w] > 1e-15 {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        if parent[sink] == usize::MAX {
            return total;
        }
        let mut push = f64::INFINITY;
        let mut w = sink;
        while w != source {
            push = push.min(cap[parent[w]][w]);
            w = parent[w];
        }
        let mut w = sink;
        while w != source {
            cap[parent[w]][w] -= push;
            cap[w][parent[w]] += push;
            w = parent[w];
        }
        total += push;
    }
}

/// Largest mass a coupling supported on ordered pairs can carry between two
/// distributions over `n`-agent profiles (1 iff a monotone coupling exists).
fn monotone_capacity(n: usize, left: &[f64], right: &[f64]) -> f64 {
    let k = 1 << n;
    let (source, sink) = (2 * k, 2 * k + 1);
    let mut cap = vec![vec![0.0; 2 * k + 2]; 2 * k + 2];
    for x in 0..k {
        cap[source][x] = left[x];
        cap[k + x][sink] = right[x];
        for y in 0..k {
            if x & !y == 0 {
                cap[x][k + y] = 2.0;
            }
        }
    }
    max_flow(&mut cap, source, sink)
}

/// Log-linear asynchronous kernel written out directly.
fn log_linear_row(
    n: usize,
    tau: f64,
    u: impl Fn(usize, ActionProfile) -> f64,
    a: ActionProfile,
) -> Vec<f64> {
    let mut row = vec![0.0; 1 << n];
    for i in 0..n {
        let z0 = (u(i, a.with(i, false)) / tau).exp();
        let z1 = (u(i, a.with(i, true)) / tau).exp();
        row[a.with(i, false).index()] += z0 / (z0 + z1) / n as f64;
        row[a.with(i, true).index()] += z1 / (z0 + z1) / n as f64;
    }
    row
}

fn cti_pair(
    n: usize,
    value: ValueProcess,
    seed: u64,
) -> AlignedGamePair<CtiGame, hdgame::cases::cti::CtiReference> {
    let cfg = CtiConfig::with_process_bound(Graph::ring(n), vec![0.4; n], value).unwrap();
    AlignedGamePair::new(CtiGame::new(cfg.clone(), seed), cti_reference(&cfg)).unwrap()
}

fn bounded_uniform() -> ValueProcess {
    ValueProcess::BoundedUniform {
        base: 0.4,
        width: 0.1,
        epsilon: 0.001,
        per_agent: false,
    }
}

#[test]
fn two_agent_cti_coupling_is_a_feasible_monotone_coupling() {
    let pair = cti_pair(2, bounded_uniform(), 17);
    let tau = 0.1;
    let rule = LearningRule::log_linear(tau).unwrap();
    let alpha = History::parse("00 11").unwrap();
    let m = build_one_step_coupling(&pair, &rule, p("00"), &alpha).unwrap();

    // kernels from the formula, independent of the library's rule code
    let env_values = pair.dynamic.cfg.value.realize(17, 1, 2);
    let dyn_u = |i: usize, a: ActionProfile| {
        if a.get(i) && a.get(1 - i) {
            env_values[1 - i] - 0.4
        } else if a.get(i) {
            -0.4
        } else {
            0.0
        }
    };
    let ref_u = |i: usize, a: ActionProfile| {
        if a.get(i) && a.get(1 - i) {
            0.401 - 0.4
        } else if a.get(i) {
            -0.4
        } else {
            0.0
        }
    };
    let left = log_linear_row(2, tau, ref_u, p("00"));
    let right = log_linear_row(2, tau, dyn_u, p("11"));

    assert!((monotone_capacity(2, &left, &right) - 1.0).abs() < 1e-12);

    // every cell is admissible for the flow problem and the sums match
    let mut rows = [0.0; 4];
    let mut cols = [0.0; 4];
    for &(x, y, w) in m.entries() {
        assert!(w >= 0.0);
        assert!(x.leq(&y).unwrap(), "cell ({x}, {y})");
        assert!(w <= left[x.index()].min(right[y.index()]) + 1e-15);
        rows[x.index()] += w;
        cols[y.index()] += w;
    }
    for k in 0..4 {
        assert!((rows[k] - left[k]).abs() < 1e-12);
        assert!((cols[k] - right[k]).abs() < 1e-12);
    }
    assert!(verify_one_step_coupling(&m).passed(1e-12));
}

#[test]
fn flow_oracle_detects_missing_dominance() {
    // static copy rewards action 1, dynamic copy does not
    let rule = LearningRule::log_linear(0.5).unwrap();
    let bonus = FnGame::new(2, |i, a: ActionProfile| if a.get(i) { 1.0 } else { 0.0 });
    let flat = FnGame::new(2, |_, _| 0.0);
    let left = log_linear_row(2, 0.5, bonus_utility, p("00"));
    let right = log_linear_row(2, 0.5, |_, _| 0.0, p("00"));
    assert!(monotone_capacity(2, &left, &right) < 1.0 - 1e-6);

    let pair = AlignedGamePair::new(Frozen(flat), bonus).unwrap();
    let err = build_one_step_coupling(&pair, &rule, p("00"), &History::parse("00").unwrap());
    assert!(matches!(err, Err(Error::AlignmentViolation { .. })));
}

fn bonus_utility(i: usize, a: ActionProfile) -> f64 {
    if a.get(i) {
        1.0
    } else {
        0.0
    }
}

#[test]
fn equal_states_give_the_diagonal() {
    let pair = cti_pair(3, ValueProcess::Constant { value: 0.45 }, 0);
    let rule = LearningRule::log_linear(0.2).unwrap();
    for a in ActionProfile::all(3) {
        let m = build_one_step_coupling(&pair, &rule, a, &History::single(a)).unwrap();
        assert!(m.entries().iter().all(|(x, y, _)| x == y));
        assert!((m.total() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn product_coupling_and_injected_fault() {
    let pair = cti_pair(3, bounded_uniform(), 5);
    let rule = LearningRule::log_linear(0.1).unwrap();
    let alpha = History::parse("010 011 111").unwrap();
    let m = build_one_step_coupling(&pair, &rule, p("010"), &alpha).unwrap();
    let product = CouplingMatrix::product(m.left_marginal().clone(), m.right_marginal().clone());
    assert!(verify_one_step_coupling(&product).support > 0.0);

    let mut bad = m.clone();
    bad.perturb(p("010"), p("111"), 0.01);
    let r = verify_one_step_coupling(&bad);
    assert!((r.left_marginal - 0.01).abs() < 1e-12);
    assert!((r.right_marginal - 0.01).abs() < 1e-12);
    assert!(!r.passed(1e-12));
}

#[test]
fn random_flow_feasibility_matches_builder() {
    // For random aligned kernels (right prefers 1 at least as much), the
    // builder succeeds and the flow oracle agrees that a coupling exists.
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let high = ActionProfile::from_bits(n, rng.gen::<u64>() & ((1 << n) - 1)).unwrap();
        let low = ActionProfile::from_bits(n, high.bits() & rng.gen::<u64>()).unwrap();
        let left: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                let q: f64 = rng.gen();
                [1.0 - q, q]
            })
            .collect();
        let right: Vec<[f64; 2]> = left
            .iter()
            .map(|k| {
                let q = k[1] + (1.0 - k[1]) * rng.gen::<f64>();
                [1.0 - q, q]
            })
            .collect();
        let m = hdgame::coupling::couple_kernels(low, high, &left, &right).unwrap();
        assert!(verify_one_step_coupling(&m).passed(1e-12));
        let dense = |d: &hdgame::TransitionDistribution| {
            let mut v = vec![0.0; 1 << n];
            for &(x, w) in d.entries() {
                v[x.index()] += w;
            }
            v
        };
        let cap = monotone_capacity(n, &dense(m.left_marginal()), &dense(m.right_marginal()));
        assert!((cap - 1.0).abs() < 1e-9);
    }
}
