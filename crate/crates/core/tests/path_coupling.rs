//! Path coupling and dominance oracles by full enumeration.

use hdgame::cases::cti::{cti_reference, CtiConfig, CtiGame, CtiReference, ValueProcess};
use hdgame::coupling::{
    coupling_gap_identity, dominance_oracle, path_coupling_distribution, path_coupling_probability,
    PathCouplingQuery, PathFunctional,
};
use hdgame::learning::{path_from_index, path_index};
use hdgame::{
    exact_path_distribution, exact_path_probability, ActionProfile, AlignedGamePair, Frozen, Graph,
    History, InitialDistribution, LearningRule,
};

const BUDGET: u128 = 1 << 24;

fn cti_pair(n: usize, seed: u64) -> AlignedGamePair<CtiGame, CtiReference> {
    let value = ValueProcess::BoundedUniform {
        base: 0.4,
        width: 0.1,
        epsilon: 0.001,
        per_agent: false,
    };
    let cfg = CtiConfig::with_process_bound(Graph::ring(n), vec![0.4; n], value).unwrap();
    AlignedGamePair::new(CtiGame::new(cfg.clone(), seed), cti_reference(&cfg)).unwrap()
}

fn all_paths(n: usize, horizon: usize) -> impl Iterator<Item = History> {
    (0..1usize << (n * horizon)).map(move |k| path_from_index(n, horizon, k))
}

#[test]
fn pairwise_probabilities_sum_to_one_and_reproduce_marginals() {
    let pair = cti_pair(2, 4);
    let rule = LearningRule::log_linear(0.1).unwrap();
    let pi = InitialDistribution::uniform(2);
    let horizon = 3;
    let paths: Vec<History> = all_paths(2, horizon).collect();
    let mut left = vec![0.0; paths.len()];
    let mut right = vec![0.0; paths.len()];
    let mut total = 0.0;
    for (i, x) in paths.iter().enumerate() {
        for (j, y) in paths.iter().enumerate() {
            let q = PathCouplingQuery::new(x.clone(), y.clone(), pi.clone()).unwrap();
            let w = path_coupling_probability(&pair, &rule, &q).unwrap();
            if w > 0.0 {
                assert!(x.leq(y).unwrap(), "mass on unordered pair {x} / {y}");
            }
            left[i] += w;
            right[j] += w;
            total += w;
        }
    }
    assert!((total - 1.0).abs() < 1e-12);
    for (k, path) in paths.iter().enumerate() {
        let stat = exact_path_probability(&Frozen(&pair.reference), &rule, &pi, path).unwrap();
        let dynm = exact_path_probability(&pair.dynamic, &rule, &pi, path).unwrap();
        assert!((left[k] - stat).abs() < 1e-12);
        assert!((right[k] - dynm).abs() < 1e-12);
    }
}

#[test]
fn joint_walk_agrees_with_pointwise_products() {
    let pair = cti_pair(2, 8);
    let rule = LearningRule::log_linear(0.3).unwrap();
    let pi = InitialDistribution::uniform(2);
    let joint = path_coupling_distribution(&pair, &rule, &pi, 3, BUDGET).unwrap();
    assert!((joint.total() - 1.0).abs() < 1e-12);
    assert_eq!(joint.max_unordered_mass(), 0.0);
    for &(x, y, w) in joint.entries.iter().take(200) {
        let q = PathCouplingQuery::new(
            path_from_index(2, 3, x),
            path_from_index(2, 3, y),
            pi.clone(),
        )
        .unwrap();
        assert!((path_coupling_probability(&pair, &rule, &q).unwrap() - w).abs() < 1e-15);
    }
}

#[test]
fn exact_path_distribution_matches_single_path_products() {
    let pair = cti_pair(3, 2);
    let rule = LearningRule::log_linear(0.2).unwrap();
    let pi = InitialDistribution::uniform(3);
    let dist = exact_path_distribution(&pair.dynamic, &rule, &pi, 3, BUDGET).unwrap();
    assert!((dist.total() - 1.0).abs() < 1e-12);
    for (k, path) in all_paths(3, 3).enumerate().step_by(7) {
        assert_eq!(path_index(path.profiles()), k);
        let direct = exact_path_probability(&pair.dynamic, &rule, &pi, &path).unwrap();
        assert!((dist.probs[k] - direct).abs() < 1e-15);
    }
}

#[test]
fn query_edge_cases() {
    let pair = cti_pair(2, 0);
    let rule = LearningRule::log_linear(0.1).unwrap();
    let pi = InitialDistribution::uniform(2);
    let q = PathCouplingQuery::new(
        History::parse("01").unwrap(),
        History::parse("11").unwrap(),
        pi.clone(),
    )
    .unwrap();
    assert_eq!(path_coupling_probability(&pair, &rule, &q).unwrap(), 0.0);
    let x = History::parse("10").unwrap();
    let q = PathCouplingQuery::new(x.clone(), x, pi.clone()).unwrap();
    assert_eq!(path_coupling_probability(&pair, &rule, &q).unwrap(), 0.25);
    assert!(PathCouplingQuery::new(
        History::parse("10").unwrap(),
        History::parse("10 11").unwrap(),
        pi
    )
    .is_err());
}

#[test]
fn ring_of_three_dominance() {
    let pair = cti_pair(3, 21);
    let rule = LearningRule::log_linear(0.1).unwrap();
    let pi = InitialDistribution::uniform(3);
    let report = dominance_oracle(&pair, &rule, &pi, 4, BUDGET, 50, 7).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!(report.final_all_ones.gap() >= 0.0);
    assert!(report.functionals.iter().all(|c| c.gap() >= -1e-12));
}

#[test]
fn decreasing_functional_is_not_in_the_library() {
    let pair = cti_pair(3, 21);
    let rule = LearningRule::log_linear(0.1).unwrap();
    let pi = InitialDistribution::uniform(3);
    // count of 0-players at the end moves the other way
    let zeros = |h: &History| (3 - h.last().count_ones()) as f64;
    let d = exact_path_distribution(&pair.dynamic, &rule, &pi, 4, BUDGET).unwrap();
    let s = exact_path_distribution(&Frozen(&pair.reference), &rule, &pi, 4, BUDGET).unwrap();
    assert!(d.expectation(zeros) <= s.expectation(zeros) + 1e-12);
    let report = dominance_oracle(&pair, &rule, &pi, 3, BUDGET, 0, 0).unwrap();
    let names: Vec<_> = report.functionals.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, PathFunctional::INCREASING.map(|z| z.name()));
}

#[test]
fn gap_identity_for_reaching_all_ones() {
    let pair = cti_pair(2, 13);
    let rule = LearningRule::log_linear(0.1).unwrap();
    let pi = InitialDistribution::uniform(2);
    let g = coupling_gap_identity(
        &pair,
        &rule,
        &pi,
        3,
        &|h: &History| h.last().is_all_ones() as i64,
        BUDGET,
    )
    .unwrap();
    assert!(g.difference <= 1e-12, "{g:?}");
    assert!(g.lhs >= 0.0);
    let g = coupling_gap_identity(
        &pair,
        &rule,
        &pi,
        3,
        &|h: &History| h.profiles().iter().map(|a| a.count_ones() as i64).sum(),
        BUDGET,
    )
    .unwrap();
    assert!(g.difference <= 1e-12, "{g:?}");
}

#[test]
fn point_mass_start_and_budget_guard() {
    let pair = cti_pair(3, 1);
    let rule = LearningRule::BestResponse;
    let pi = InitialDistribution::point(ActionProfile::ones(3));
    let report = dominance_oracle(&pair, &rule, &pi, 3, BUDGET, 10, 1).unwrap();
    // all-ones is a strict equilibrium of both games, so both stay
    assert_eq!(report.final_all_ones.dynamic, 1.0);
    assert_eq!(report.final_all_ones.reference, 1.0);
    assert!(matches!(
        dominance_oracle(&pair, &rule, &pi, 5, 1 << 10, 0, 0),
        Err(hdgame::Error::Budget { .. })
    ));
}
