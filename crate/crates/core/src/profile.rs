//! Binary action profiles, histories, and the unilateral-deviation structure
//! between two ordered profiles.
//!
//! Agent `i` (0-based) is stored in bit `i` of a packed word. Externally
//! profiles print as bit strings with agent 1 leftmost, and sets of profiles
//! are returned in the lexicographic order of those strings.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest agent count a packed profile can hold.
pub const MAX_AGENTS: usize = 64;

/// Largest agent count for which exhaustive oracles enumerate `{0,1}^n`.
pub const MAX_EXACT_AGENTS: usize = 24;

/// A joint binary action, one bit per agent.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionProfile {
    bits: u64,
    n: u8,
}

impl ActionProfile {
    fn mask(n: usize) -> u64 {
        if n == 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    pub fn zeros(n: usize) -> Self {
        assert!(
            (1..=MAX_AGENTS).contains(&n),
            "agent count {n} out of range"
        );
        Self {
            bits: 0,
            n: n as u8,
        }
    }

    pub fn ones(n: usize) -> Self {
        assert!(
            (1..=MAX_AGENTS).contains(&n),
            "agent count {n} out of range"
        );
        Self {
            bits: Self::mask(n),
            n: n as u8,
        }
    }

    /// Builds a profile from its packed word (bit `i` is agent `i`).
    pub fn from_bits(n: usize, bits: u64) -> Result<Self> {
        if n == 0 || n > MAX_AGENTS {
            return Err(Error::Dimension {
                expected: MAX_AGENTS,
                found: n,
            });
        }
        if bits & !Self::mask(n) != 0 {
            return Err(Error::InvalidPair(format!(
                "bits {bits:#x} exceed {n} agents"
            )));
        }
        Ok(Self { bits, n: n as u8 })
    }

    /// Profile with packed index `index`, as produced by [`ActionProfile::all`].
    pub fn from_index(n: usize, index: usize) -> Self {
        Self::from_bits(n, index as u64).expect("index within 2^n")
    }

    pub fn from_actions(actions: &[u8]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &x) in actions.iter().enumerate() {
            match x {
                0 => {}
                1 => bits |= 1 << i,
                other => {
                    return Err(Error::InvalidPair(format!(
                        "action {other} of agent {} is not binary",
                        i + 1
                    )))
                }
            }
        }
        Self::from_bits(actions.len(), bits)
    }

    /// All `2^n` profiles in packed-index order.
    pub fn all(n: usize) -> impl Iterator<Item = ActionProfile> {
        assert!(
            (1..=MAX_EXACT_AGENTS).contains(&n),
            "cannot enumerate {n} agents"
        );
        (0..(1u64 << n)).map(move |bits| ActionProfile { bits, n: n as u8 })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Dense index in `0..2^n`.
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn get(&self, agent: usize) -> bool {
        debug_assert!(agent < self.n());
        self.bits >> agent & 1 == 1
    }

    pub fn action(&self, agent: usize) -> u8 {
        self.get(agent) as u8
    }

    pub fn with(&self, agent: usize, action: bool) -> Self {
        debug_assert!(agent < self.n());
        let bits = if action {
            self.bits | 1 << agent
        } else {
            self.bits & !(1 << agent)
        };
        Self { bits, n: self.n }
    }

    pub fn flip(&self, agent: usize) -> Self {
        debug_assert!(agent < self.n());
        Self {
            bits: self.bits ^ 1 << agent,
            n: self.n,
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_all_ones(&self) -> bool {
        self.bits == Self::mask(self.n())
    }

    pub fn is_all_zeros(&self) -> bool {
        self.bits == 0
    }

    fn check_same_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok(())
    }

    /// Componentwise order: `self ≤ other` iff every agent playing 1 in
    /// `self` also plays 1 in `other`.
    pub fn leq(&self, other: &Self) -> Result<bool> {
        self.check_same_n(other)?;
        Ok(self.le_bits(other))
    }

    #[inline]
    pub(crate) fn le_bits(&self, other: &Self) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.n())
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    // Agent 1 becomes the most significant position so integer order equals
    // bit-string order.
    fn lex_key(&self) -> u64 {
        self.bits.reverse_bits() >> (64 - self.n())
    }
}

impl Ord for ActionProfile {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.lex_key().cmp(&other.lex_key()))
    }
}

impl PartialOrd for ActionProfile {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl fmt::Debug for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ActionProfile({self})")
    }
}

impl FromStr for ActionProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let actions = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidPair(format!(
                    "unexpected character {other:?} in profile {s:?}"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::from_actions(&actions)
    }
}

impl Serialize for ActionProfile {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bitstring())
    }
}

impl<'de> Deserialize<'de> for ActionProfile {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A path of action profiles `(α^1, …, α^T)`, `T ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ActionProfile>", into = "Vec<ActionProfile>")]
pub struct History {
    profiles: Vec<ActionProfile>,
}

impl History {
    pub fn new(profiles: Vec<ActionProfile>) -> Result<Self> {
        let first = profiles
            .first()
            .ok_or_else(|| Error::InvalidPair("a history needs at least one profile".into()))?;
        for p in &profiles[1..] {
            first.check_same_n(p)?;
        }
        Ok(Self { profiles })
    }

    pub fn single(profile: ActionProfile) -> Self {
        Self {
            profiles: vec![profile],
        }
    }

    /// Parses whitespace- or comma-separated bit strings.
    pub fn parse(s: &str) -> Result<Self> {
        let profiles = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(profiles)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n(&self) -> usize {
        self.profiles[0].n()
    }

    pub fn first(&self) -> ActionProfile {
        self.profiles[0]
    }

    /// `α^T`.
    pub fn last(&self) -> ActionProfile {
        *self.profiles.last().expect("non-empty")
    }

    pub fn profiles(&self) -> &[ActionProfile] {
        &self.profiles
    }

    /// `α^{≤t}` for `1 ≤ t ≤ T`.
    pub fn prefix(&self, t: usize) -> History {
        assert!(t >= 1 && t <= self.len());
        History {
            profiles: self.profiles[..t].to_vec(),
        }
    }

    pub fn extended(&self, next: ActionProfile) -> Result<History> {
        self.first().check_same_n(&next)?;
        let mut profiles = self.profiles.clone();
        profiles.push(next);
        Ok(History { profiles })
    }

    /// Componentwise path order: `self ≤ other` iff `self^t ≤ other^t` for every `t`.
    pub fn leq(&self, other: &History) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: other.len(),
            });
        }
        let mut all = true;
        for (x, y) in self.profiles.iter().zip(&other.profiles) {
            all &= x.leq(y)?;
        }
        Ok(all)
    }
}

impl TryFrom<Vec<ActionProfile>> for History {
    type Error = Error;
    fn try_from(v: Vec<ActionProfile>) -> Result<Self> {
        History::new(v)
    }
}

impl From<History> for Vec<ActionProfile> {
    fn from(h: History) -> Self {
        h.profiles
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, p) in self.profiles.iter().enumerate() {
            if t > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

pub fn leq_profile(a: &ActionProfile, b: &ActionProfile) -> Result<bool> {
    a.leq(b)
}

pub fn leq_path(alpha: &History, beta: &History) -> Result<bool> {
    alpha.leq(beta)
}

/// `f(a)`: the `n` profiles one unilateral deviation away from `a`, in
/// canonical order.
pub fn unilateral_neighbors(a: &ActionProfile) -> Vec<ActionProfile> {
    let mut out: Vec<_> = (0..a.n()).map(|i| a.flip(i)).collect();
    out.sort();
    out
}

/// Which agent deviated between two profiles; 0 means none.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeviatorId(usize);

impl DeviatorId {
    pub const NONE: DeviatorId = DeviatorId(0);

    /// From a 0-based agent index.
    pub fn agent(index: usize) -> Self {
        DeviatorId(index + 1)
    }

    pub fn value(&self) -> usize {
        self.0
    }

    /// 0-based agent index, or `None` when no one deviated.
    pub fn index(&self) -> Option<usize> {
        self.0.checked_sub(1)
    }
}

/// `g(a, a')`.
pub fn deviator(a: &ActionProfile, b: &ActionProfile) -> Result<DeviatorId> {
    a.check_same_n(b)?;
    let diff = a.bits ^ b.bits;
    match diff.count_ones() {
        0 => Ok(DeviatorId::NONE),
        1 => Ok(DeviatorId::agent(diff.trailing_zeros() as usize)),
        k => Err(Error::InvalidPair(format!(
            "{a} and {b} differ in {k} coordinates"
        ))),
    }
}

/// `b^{a,a'}(ā)`: flips, in `high`, the agent that deviates between `low` and `neighbor`.
pub fn mirror_b(
    low: &ActionProfile,
    high: &ActionProfile,
    neighbor: &ActionProfile,
) -> Result<ActionProfile> {
    if !low.leq(high)? {
        return Err(Error::InvalidPair(format!("{low} is not below {high}")));
    }
    match deviator(low, neighbor)?.index() {
        Some(i) => Ok(high.flip(i)),
        None => Err(Error::InvalidPair(format!(
            "{neighbor} is not a unilateral deviation of {low}"
        ))),
    }
}

/// The six deviation sets for an ordered pair `low ≤ high`.
///
/// Subsets of `f(low)`:
/// * `low_down` (r): the deviating agent drops from 1 to 0.
/// * `low_inside` (q): moves up and stays below `high`.
/// * `low_outside` (s): moves up and leaves the down-set of `high`.
///
/// Subsets of `f(high)`:
/// * `high_up` (R): the deviating agent rises from 0 to 1.
/// * `high_inside` (Q): moves down and stays above `low`.
/// * `high_outside` (S): moves down and leaves the up-set of `low`.
///
/// [`mirror_b`] maps `low_down → high_outside`, `low_outside → high_up` and
/// `low_inside → high_inside` bijectively.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionSets {
    pub low_down: Vec<ActionProfile>,
    pub low_inside: Vec<ActionProfile>,
    pub low_outside: Vec<ActionProfile>,
    pub high_up: Vec<ActionProfile>,
    pub high_inside: Vec<ActionProfile>,
    pub high_outside: Vec<ActionProfile>,
}

pub fn partition_sets(low: &ActionProfile, high: &ActionProfile) -> Result<PartitionSets> {
    if !low.leq(high)? {
        return Err(Error::Order(format!("{low} is not below {high}")));
    }
    let mut sets = PartitionSets {
        low_down: vec![],
        low_inside: vec![],
        low_outside: vec![],
        high_up: vec![],
        high_inside: vec![],
        high_outside: vec![],
    };
    for z in unilateral_neighbors(low) {
        let g = deviator(low, &z)?.index().expect("neighbor differs");
        if low.get(g) {
            sets.low_down.push(z);
        } else if z.le_bits(high) {
            sets.low_inside.push(z);
        } else {
            sets.low_outside.push(z);
        }
    }
    for z in unilateral_neighbors(high) {
        let g = deviator(high, &z)?.index().expect("neighbor differs");
        if !high.get(g) {
            sets.high_up.push(z);
        } else if low.le_bits(&z) {
            sets.high_inside.push(z);
        } else {
            sets.high_outside.push(z);
        }
    }
    Ok(sets)
}

/// Enumerates the submasks of `mask` (including `mask` and 0).
pub(crate) fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            Some((cur - 1) & mask)
        };
        Some(cur)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ActionProfile {
        s.parse().unwrap()
    }

    #[test]
    fn order_examples() {
        assert!(leq_profile(&p("00"), &p("11")).unwrap());
        assert!(!leq_profile(&p("10"), &p("01")).unwrap());
        assert!(leq_profile(&p("011"), &p("011")).unwrap());
        assert!(matches!(
            leq_profile(&p("01"), &p("011")),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn path_order_examples() {
        let h = |s: &str| History::parse(s).unwrap();
        assert!(leq_path(&h("00 01"), &h("01 11")).unwrap());
        assert!(leq_path(&h("01 00"), &h("11 00")).unwrap());
        assert!(!leq_path(&h("10 00"), &h("01 11")).unwrap());
        assert!(leq_path(&h("00"), &h("00 01")).is_err());
    }

    #[test]
    fn neighbor_examples() {
        assert_eq!(unilateral_neighbors(&p("00")), vec![p("01"), p("10")]);
        assert_eq!(
            unilateral_neighbors(&p("111")),
            vec![p("011"), p("101"), p("110")]
        );
        assert_eq!(unilateral_neighbors(&p("0")), vec![p("1")]);
    }

    #[test]
    fn deviator_examples() {
        assert_eq!(deviator(&p("00"), &p("01")).unwrap().value(), 2);
        assert_eq!(deviator(&p("11"), &p("11")).unwrap(), DeviatorId::NONE);
        assert!(matches!(
            deviator(&p("01"), &p("10")),
            Err(Error::InvalidPair(_))
        ));
    }

    #[test]
    fn mirror_examples() {
        assert_eq!(mirror_b(&p("00"), &p("11"), &p("10")).unwrap(), p("01"));
        assert_eq!(mirror_b(&p("00"), &p("01"), &p("01")).unwrap(), p("00"));
        assert_eq!(mirror_b(&p("10"), &p("10"), &p("00")).unwrap(), p("00"));
        assert!(mirror_b(&p("10"), &p("01"), &p("00")).is_err());
        assert!(mirror_b(&p("00"), &p("11"), &p("11")).is_err());
        assert!(mirror_b(&p("00"), &p("11"), &p("00")).is_err());
    }

    #[test]
    fn partition_requires_order() {
        assert!(matches!(
            partition_sets(&p("10"), &p("01")),
            Err(Error::Order(_))
        ));
    }

    #[test]
    fn bitstring_and_canonical_order() {
        let a = p("0110");
        assert_eq!(a.to_bitstring(), "0110");
        assert!(a.get(1) && a.get(2) && !a.get(0));
        let mut all: Vec<_> = ActionProfile::all(3).collect();
        all.sort();
        let strings: Vec<_> = all.iter().map(|x| x.to_bitstring()).collect();
        let mut sorted = strings.clone();
        sorted.sort();
        assert_eq!(strings, sorted);
        assert!("012".parse::<ActionProfile>().is_err());
        assert!("".parse::<ActionProfile>().is_err());
    }

    #[test]
    fn submask_enumeration() {
        let mut subs: Vec<u64> = submasks(0b101).collect();
        subs.sort();
        assert_eq!(subs, vec![0, 1, 4, 5]);
        assert_eq!(submasks(0).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn history_serde_uses_bitstrings() {
        let h = History::parse("01,11").unwrap();
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(json, r#"["01","11"]"#);
        let back: History = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
        assert!(serde_json::from_str::<History>("[]").is_err());
    }
}
