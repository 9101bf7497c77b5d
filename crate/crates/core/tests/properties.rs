use hdgame::coupling::{couple_kernels, verify_one_step_coupling};
use hdgame::{
    async_step_distribution, deviator, leq_profile, mirror_b, partition_sets, unilateral_neighbors,
    ActionProfile, FnGame, History, IndividualRule, LearningRule, StaticGame, TableGame,
};
use proptest::prelude::*;
use rand::SeedableRng;

fn profile(max_n: usize) -> impl Strategy<Value = ActionProfile> {
    (1..=max_n)
        .prop_flat_map(|n| (Just(n), 0u64..(1 << n)))
        .prop_map(|(n, bits)| ActionProfile::from_bits(n, bits).unwrap())
}

/// An ordered pair `low ≤ high`.
fn ordered_pair(max_n: usize) -> impl Strategy<Value = (ActionProfile, ActionProfile)> {
    profile(max_n).prop_flat_map(|high| {
        (Just(high), 0u64..(1 << high.n())).prop_map(|(high, mask)| {
            (
                ActionProfile::from_bits(high.n(), high.bits() & mask).unwrap(),
                high,
            )
        })
    })
}

fn rule() -> impl Strategy<Value = LearningRule> {
    prop_oneof![
        (0.01f64..10.0).prop_map(|t| LearningRule::log_linear(t).unwrap()),
        Just(LearningRule::BestResponse),
    ]
}

proptest! {
    #[test]
    fn bitstring_roundtrip(a in profile(12)) {
        let back: ActionProfile = a.to_string().parse().unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn order_is_a_partial_order(a in profile(6), b_bits in any::<u64>(), c_bits in any::<u64>()) {
        let n = a.n();
        let mask = (1u64 << n) - 1;
        let b = ActionProfile::from_bits(n, b_bits & mask).unwrap();
        let c = ActionProfile::from_bits(n, c_bits & mask).unwrap();
        prop_assert!(leq_profile(&a, &a).unwrap());
        if leq_profile(&a, &b).unwrap() && leq_profile(&b, &a).unwrap() {
            prop_assert_eq!(a, b);
        }
        if leq_profile(&a, &b).unwrap() && leq_profile(&b, &c).unwrap() {
            prop_assert!(leq_profile(&a, &c).unwrap());
        }
    }

    #[test]
    fn neighbors_differ_in_one_agent(a in profile(10)) {
        let f = unilateral_neighbors(&a);
        prop_assert_eq!(f.len(), a.n());
        for z in &f {
            let g = deviator(&a, z).unwrap().index().unwrap();
            prop_assert_eq!(a.flip(g), *z);
        }
    }

    #[test]
    fn mirror_keeps_the_deviator((low, high) in ordered_pair(8), pick in any::<prop::sample::Index>()) {
        let f = unilateral_neighbors(&low);
        let z = f[pick.index(f.len())];
        let b = mirror_b(&low, &high, &z).unwrap();
        prop_assert_eq!(deviator(&low, &z).unwrap(), deviator(&high, &b).unwrap());
        let sets = partition_sets(&low, &high).unwrap();
        let total = sets.low_down.len() + sets.low_inside.len() + sets.low_outside.len();
        prop_assert_eq!(total, low.n());
        let total = sets.high_up.len() + sets.high_inside.len() + sets.high_outside.len();
        prop_assert_eq!(total, high.n());
    }

    #[test]
    fn transitions_are_distributions(seed in any::<u64>(), n in 1usize..=4, r in rule(), ties in any::<bool>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let game = TableGame::random(n, &mut rng, ties.then_some(3)).unwrap();
        for a in ActionProfile::all(n) {
            let d = async_step_distribution(&r, a, &game).unwrap();
            prop_assert!((d.total() - 1.0).abs() <= 1e-12);
            prop_assert!(d.entries().iter().all(|(_, w)| *w >= 0.0));
            prop_assert_eq!(d.entries().len(), n + 1);
        }
    }

    #[test]
    fn log_linear_ignores_common_shifts(seed in any::<u64>(), shift in -50.0f64..50.0, tau in 0.05f64..5.0) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let game = TableGame::random(3, &mut rng, None).unwrap();
        let shifted = FnGame::new(3, |i, a| game.utility(i, a) + shift);
        let r = LearningRule::log_linear(tau).unwrap();
        for a in ActionProfile::all(3) {
            for i in 0..3 {
                let x = r.choice(i, a, &game).unwrap();
                let y = r.choice(i, a, &shifted).unwrap();
                prop_assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dominating_kernels_always_couple((low, high) in ordered_pair(6), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = low.n();
        let left: Vec<[f64; 2]> = (0..n).map(|_| { let q: f64 = rng.gen(); [1.0 - q, q] }).collect();
        let right: Vec<[f64; 2]> = left.iter().map(|k| {
            let q = k[1] + (1.0 - k[1]) * rng.gen::<f64>();
            [1.0 - q, q]
        }).collect();
        let m = couple_kernels(low, high, &left, &right).unwrap();
        let r = verify_one_step_coupling(&m);
        prop_assert!(r.passed(1e-12), "{:?}", r);
        prop_assert!(m.entries().len() <= 2 * n + 1);
    }

    #[test]
    fn history_text_roundtrip(bits in prop::collection::vec(0u64..8, 1..6)) {
        let h = History::new(bits.iter().map(|b| ActionProfile::from_bits(3, *b).unwrap()).collect()).unwrap();
        let back = History::parse(&h.to_string()).unwrap();
        prop_assert_eq!(back, h);
    }
}
