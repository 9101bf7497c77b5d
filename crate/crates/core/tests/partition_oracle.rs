//! Deviation partition sets against a brute-force reading of their
//! definitions over all profiles.

use hdgame::{deviator, mirror_b, partition_sets, ActionProfile, Error};

fn p(s: &str) -> ActionProfile {
    s.parse().unwrap()
}

fn actions(a: &ActionProfile) -> Vec<u8> {
    (0..a.n()).map(|i| a.action(i)).collect()
}

fn below(x: &ActionProfile, y: &ActionProfile) -> bool {
    actions(x).iter().zip(actions(y)).all(|(u, v)| *u <= v)
}

fn one_apart(x: &ActionProfile, y: &ActionProfile) -> bool {
    actions(x)
        .iter()
        .zip(actions(y))
        .filter(|(u, v)| *u != v)
        .count()
        == 1
}

struct Brute {
    r: Vec<ActionProfile>,
    q: Vec<ActionProfile>,
    s: Vec<ActionProfile>,
    big_r: Vec<ActionProfile>,
    big_q: Vec<ActionProfile>,
    big_s: Vec<ActionProfile>,
}

fn brute(low: &ActionProfile, high: &ActionProfile) -> Brute {
    let n = low.n();
    let all: Vec<_> = ActionProfile::all(n).collect();
    let sorted = |mut v: Vec<ActionProfile>| {
        v.sort();
        v
    };
    let near_low: Vec<_> = all.iter().copied().filter(|z| one_apart(low, z)).collect();
    let near_high: Vec<_> = all.iter().copied().filter(|z| one_apart(high, z)).collect();
    Brute {
        r: sorted(near_low.iter().copied().filter(|z| below(z, low)).collect()),
        q: sorted(
            near_low
                .iter()
                .copied()
                .filter(|z| below(low, z) && below(z, high))
                .collect(),
        ),
        s: sorted(
            near_low
                .iter()
                .copied()
                .filter(|z| below(low, z) && !below(z, high))
                .collect(),
        ),
        big_r: sorted(
            near_high
                .iter()
                .copied()
                .filter(|z| below(high, z))
                .collect(),
        ),
        big_q: sorted(
            near_high
                .iter()
                .copied()
                .filter(|z| below(z, high) && below(low, z))
                .collect(),
        ),
        big_s: sorted(
            near_high
                .iter()
                .copied()
                .filter(|z| below(z, high) && !below(low, z))
                .collect(),
        ),
    }
}

#[test]
fn golden_two_agent_sets() {
    let sets = partition_sets(&p("10"), &p("11")).unwrap();
    assert_eq!(sets.low_down, vec![p("00")]);
    assert_eq!(sets.low_inside, vec![p("11")]);
    assert!(sets.low_outside.is_empty());
    assert!(sets.high_up.is_empty());
    assert_eq!(sets.high_inside, vec![p("10")]);
    assert_eq!(sets.high_outside, vec![p("01")]);
}

#[test]
fn every_ordered_pair_matches_brute_force() {
    for n in 1..=4 {
        for low in ActionProfile::all(n) {
            for high in ActionProfile::all(n) {
                if !below(&low, &high) {
                    assert!(matches!(partition_sets(&low, &high), Err(Error::Order(_))));
                    continue;
                }
                let got = partition_sets(&low, &high).unwrap();
                let want = brute(&low, &high);
                assert_eq!(got.low_down, want.r, "r for {low} {high}");
                assert_eq!(got.low_inside, want.q, "q for {low} {high}");
                assert_eq!(got.low_outside, want.s, "s for {low} {high}");
                assert_eq!(got.high_up, want.big_r, "R for {low} {high}");
                assert_eq!(got.high_inside, want.big_q, "Q for {low} {high}");
                assert_eq!(got.high_outside, want.big_s, "S for {low} {high}");
            }
        }
    }
}

#[test]
fn mirror_is_a_bijection_between_matching_sets() {
    for n in 1..=5 {
        for high in ActionProfile::all(n) {
            for low in ActionProfile::all(n).filter(|l| below(l, &high)) {
                let sets = partition_sets(&low, &high).unwrap();
                let image = |from: &[ActionProfile]| {
                    let mut v: Vec<_> = from
                        .iter()
                        .map(|z| mirror_b(&low, &high, z).unwrap())
                        .collect();
                    v.sort();
                    v
                };
                assert_eq!(image(&sets.low_down), sets.high_outside);
                assert_eq!(image(&sets.low_outside), sets.high_up);
                assert_eq!(image(&sets.low_inside), sets.high_inside);
                for z in sets
                    .low_down
                    .iter()
                    .chain(&sets.low_inside)
                    .chain(&sets.low_outside)
                {
                    let b = mirror_b(&low, &high, z).unwrap();
                    assert_eq!(deviator(&low, z).unwrap(), deviator(&high, &b).unwrap());
                }
                assert_eq!(
                    sets.low_down.len() + sets.low_inside.len() + sets.low_outside.len(),
                    n
                );
            }
        }
    }
}
