//! Exact chain analysis on the reference games.

use hdgame::cases::cti::{cti_potential, cti_reference, CtiConfig, ValueProcess};
use hdgame::cases::sisgcg::{gcg_reference, SisgcgConfig};
use hdgame::equilibrium::{
    check_exact_potential, gibbs_distribution, is_strict_nash, potential_maximizers,
    stationary_distribution, total_variation, TransitionMatrix,
};
use hdgame::{ActionProfile, Graph, LearningRule};

fn cti(n: usize, v: f64) -> CtiConfig {
    CtiConfig::with_process_bound(
        Graph::ring(n),
        vec![0.4; n],
        ValueProcess::Constant { value: v },
    )
    .unwrap()
}

#[test]
fn low_temperature_concentrates_on_all_ones() {
    let cfg = cti(6, 0.5);
    let m = TransitionMatrix::build(
        &cti_reference(&cfg),
        &LearningRule::log_linear(0.05).unwrap(),
    )
    .unwrap();
    let st = stationary_distribution(&m).unwrap();
    assert!(st[ActionProfile::ones(6).index()] >= 0.99);
    let gibbs = gibbs_distribution(&cti_potential(&cfg).unwrap(), 0.05).unwrap();
    assert!(total_variation(&st, &gibbs) < 1e-9);
}

#[test]
fn ten_firm_ring_matches_gibbs() {
    let cfg = cti(10, 0.401);
    let tau = 0.5;
    let m = TransitionMatrix::build(
        &cti_reference(&cfg),
        &LearningRule::log_linear(tau).unwrap(),
    )
    .unwrap();
    let st = stationary_distribution(&m).unwrap();
    let gibbs = gibbs_distribution(&cti_potential(&cfg).unwrap(), tau).unwrap();
    assert!(total_variation(&st, &gibbs) < 1e-9);
}

#[test]
fn stationary_mode_tracks_potential_maximizers() {
    let sis =
        SisgcgConfig::new(Graph::ring(8), 0.25, 0.9, 0.45, 0.25 / 0.45 + 0.05, 0.9, 10).unwrap();
    let game = gcg_reference(&sis);
    let phi = check_exact_potential(&game).unwrap().potential().unwrap();
    let best = potential_maximizers(&phi);
    assert_eq!(best, vec![ActionProfile::ones(8)]);
    let mut mode_mass = Vec::new();
    for tau in [1.0, 0.3, 0.1, 0.03] {
        let m = TransitionMatrix::build(&game, &LearningRule::log_linear(tau).unwrap()).unwrap();
        let st = stationary_distribution(&m).unwrap();
        let gibbs = gibbs_distribution(&phi, tau).unwrap();
        assert!(total_variation(&st, &gibbs) < 1e-9, "tau={tau}");
        mode_mass.push(st[best[0].index()]);
    }
    let m = TransitionMatrix::build(&game, &LearningRule::log_linear(0.03).unwrap()).unwrap();
    let st = stationary_distribution(&m).unwrap();
    let argmax = (0..st.len())
        .max_by(|a, b| st[*a].total_cmp(&st[*b]))
        .unwrap();
    assert_eq!(argmax, best[0].index());
    assert!(mode_mass.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn best_response_never_loses_mass_on_a_strict_equilibrium() {
    for n in 2..=4 {
        let cfg = cti(n, 0.5);
        let game = cti_reference(&cfg);
        assert!(is_strict_nash(&game, ActionProfile::ones(n)));
        let m = TransitionMatrix::build(&game, &LearningRule::BestResponse).unwrap();
        let uniform = vec![1.0 / (1 << n) as f64; 1 << n];
        let ones = ActionProfile::ones(n).index();
        let path = m.evolve(&uniform, 60);
        for w in path.windows(2) {
            assert!(w[1][ones] >= w[0][ones] - 1e-15);
        }
        assert_eq!(m.prob(ActionProfile::ones(n), ActionProfile::ones(n)), 1.0);
    }
}
