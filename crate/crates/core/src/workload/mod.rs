//! Seeded synthetic rule sets and update traces.

mod balance;

pub use balance::{
    exceeds_factor, gen_flows, gen_load_balance, greedy_assign, max_utilization, parse_flows, Assignment, MacroFlow,
    Quantity,
};

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracle::{Action, RuleSet};
use crate::prefix::Prefix;
use crate::update::UpdateOp;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Profile {
    /// Every destination has a rule for every source prefix; sources fall
    /// into a few groups that share a policy.
    #[default]
    DensePolicy,
    /// Random (destination, source) pairs with optional defaults.
    Sparse,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dense" | "dense-policy" => Ok(Profile::DensePolicy),
            "sparse" | "sparse-lb" => Ok(Profile::Sparse),
            other => Err(format!("unknown profile `{other}` (dense|sparse)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub width_d: u8,
    pub width_s: u8,
    pub dests: usize,
    pub srcs: usize,
    /// Source-specific rules; ignored by the dense profile, which has
    /// `dests * srcs` of them.
    pub rules: usize,
    /// Source groups of the dense profile.
    pub src_groups: usize,
    pub actions: usize,
    /// Chance that a destination carries a default.
    pub default_prob: f64,
    /// Extra destinations holding only a default.
    pub dest_only: usize,
    pub profile: Profile,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            width_d: 8,
            width_s: 8,
            dests: 30,
            srcs: 30,
            rules: 200,
            src_groups: 4,
            actions: 8,
            default_prob: 0.5,
            dest_only: 0,
            profile: Profile::Sparse,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    /// The dense scenario: `dests` destinations times `srcs` sources.
    pub fn dense(width: u8, dests: usize, srcs: usize, seed: u64) -> Self {
        ScenarioSpec {
            width_d: width,
            width_s: width,
            dests,
            srcs,
            rules: dests * srcs,
            default_prob: 0.0,
            profile: Profile::DensePolicy,
            seed,
            ..Default::default()
        }
    }

    pub fn sparse(width: u8, rules: usize, seed: u64) -> Self {
        let pool = ((rules as f64).sqrt() * 2.0).ceil() as usize;
        ScenarioSpec {
            width_d: width,
            width_s: width,
            dests: pool,
            srcs: pool,
            rules,
            seed,
            ..Default::default()
        }
    }
}

fn action(i: usize) -> Action {
    Action::new(format!("nh{i}"))
}

/// Prefixes of `width` bits with length in `min_len..=width`.
fn prefix_capacity(width: u8, min_len: u8) -> u128 {
    (min_len..=width).map(|l| 1u128.checked_shl(l as u32).unwrap_or(u128::MAX)).fold(0u128, u128::saturating_add)
}

pub fn random_prefix(rng: &mut impl Rng, width: u8, min_len: u8) -> Prefix {
    let len = rng.gen_range(min_len..=width);
    let value = if len == 0 { 0 } else { rng.gen::<u128>() >> (128 - len as u32) };
    Prefix::from_value(width, len, value).expect("length within width")
}

/// `n` distinct random prefixes, sorted.
pub fn random_prefixes(rng: &mut impl Rng, width: u8, min_len: u8, n: usize) -> Result<Vec<Prefix>> {
    let cap = prefix_capacity(width, min_len);
    if n as u128 > cap {
        return Err(Error::Infeasible(format!(
            "{n} distinct prefixes requested, only {cap} exist at width {width}"
        )));
    }
    if (n as u128) * 2 > cap {
        // dense request at a tiny width: sample without replacement
        let mut all: Vec<Prefix> = (min_len..=width)
            .flat_map(|l| (0..1u128 << l).map(move |v| Prefix::from_value(width, l, v).unwrap()))
            .collect();
        all.shuffle(rng);
        all.truncate(n);
        all.sort();
        return Ok(all);
    }
    let mut set = BTreeSet::new();
    while set.len() < n {
        set.insert(random_prefix(rng, width, min_len));
    }
    Ok(set.into_iter().collect())
}

/// Rule set of `spec`, plus a trace inserting all of it into an empty
/// table in random order.
pub fn gen_policy(spec: &ScenarioSpec) -> Result<(RuleSet, Vec<UpdateOp>)> {
    if spec.actions == 0 {
        return Err(Error::Infeasible("at least one action is needed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dests = random_prefixes(&mut rng, spec.width_d, 0, spec.dests + spec.dest_only)?;
    let srcs = random_prefixes(&mut rng, spec.width_s, 1, spec.srcs)?;
    let (with_rules, only_default) = {
        let mut d = dests.clone();
        d.shuffle(&mut rng);
        let rest = d.split_off(spec.dests);
        (d, rest)
    };
    let mut rs = RuleSet::new(spec.width_d, spec.width_s);
    match spec.profile {
        Profile::DensePolicy => {
            let groups = spec.src_groups.max(1);
            let group: Vec<usize> = (0..srcs.len()).map(|_| rng.gen_range(0..groups)).collect();
            for d in &with_rules {
                let policy: Vec<usize> = (0..groups).map(|_| rng.gen_range(0..spec.actions)).collect();
                for (j, s) in srcs.iter().enumerate() {
                    rs.insert(*d, *s, action(policy[group[j]]))?;
                }
            }
        }
        Profile::Sparse => {
            let room = with_rules.len() * srcs.len();
            if spec.rules > room {
                return Err(Error::Infeasible(format!(
                    "{} rules requested over {} (destination, source) pairs",
                    spec.rules, room
                )));
            }
            let mut pairs = BTreeSet::new();
            if spec.rules * 2 > room {
                let mut all: Vec<(usize, usize)> =
                    (0..with_rules.len()).flat_map(|i| (0..srcs.len()).map(move |j| (i, j))).collect();
                all.shuffle(&mut rng);
                pairs.extend(all.into_iter().take(spec.rules));
            }
            while pairs.len() < spec.rules {
                pairs.insert((rng.gen_range(0..with_rules.len()), rng.gen_range(0..srcs.len())));
            }
            for (i, j) in pairs {
                rs.insert(with_rules[i], srcs[j], action(rng.gen_range(0..spec.actions)))?;
            }
        }
    }
    for d in &with_rules {
        if rng.gen_bool(spec.default_prob.clamp(0.0, 1.0)) {
            rs.set_default(*d, action(rng.gen_range(0..spec.actions)))?;
        }
    }
    for d in &only_default {
        rs.set_default(*d, action(rng.gen_range(0..spec.actions)))?;
    }
    let mut trace: Vec<UpdateOp> = rs
        .folded_rules()
        .into_iter()
        .map(|r| UpdateOp::Insert {
            dest: r.dest,
            src: r.src,
            action: r.action,
        })
        .collect();
    trace.shuffle(&mut rng);
    Ok((rs, trace))
}

/// Random valid mix of inserts, deletes, updates and default changes
/// starting from `rs`. New prefixes are drawn now and then so the prefix
/// sets grow and shrink.
pub fn gen_updates(rs: &RuleSet, n: usize, actions: usize, seed: u64) -> Vec<UpdateOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (wd, ws) = (rs.width_d(), rs.width_s());
    let wild = Prefix::wildcard(ws);
    let mut shadow = rs.clone();
    let mut dest_pool: Vec<Prefix> = rs.dests().map(|(d, _)| d).collect();
    let mut src_pool: Vec<Prefix> = rs.src_prefixes().into_iter().collect();
    let mut ops = Vec::with_capacity(n);
    let actions = actions.max(1);
    while ops.len() < n {
        let existing = shadow.folded_rules();
        let roll = rng.gen_range(0..100);
        let op = if roll < 40 || existing.is_empty() {
            if dest_pool.is_empty() || rng.gen_bool(0.2) {
                dest_pool.push(random_prefix(&mut rng, wd, 0));
            }
            if src_pool.is_empty() || rng.gen_bool(0.2) {
                src_pool.push(random_prefix(&mut rng, ws, 1));
            }
            let dest = *dest_pool.choose(&mut rng).unwrap();
            let src = if rng.gen_bool(0.1) { wild } else { *src_pool.choose(&mut rng).unwrap() };
            if shadow.get(&dest, &src).is_some() {
                continue;
            }
            UpdateOp::Insert { dest, src, action: action(rng.gen_range(0..actions)) }
        } else if roll < 70 {
            let r = existing.choose(&mut rng).unwrap();
            UpdateOp::Delete { dest: r.dest, src: r.src }
        } else if roll < 90 {
            let r = existing.choose(&mut rng).unwrap();
            UpdateOp::Update { dest: r.dest, src: r.src, action: action(rng.gen_range(0..actions)) }
        } else {
            let dest = *dest_pool.choose(&mut rng).unwrap();
            UpdateOp::Update { dest, src: wild, action: action(rng.gen_range(0..actions)) }
        };
        match &op {
            UpdateOp::Insert { dest, src, action } | UpdateOp::Update { dest, src, action } => {
                shadow.upsert(*dest, *src, action.clone()).unwrap();
            }
            UpdateOp::Delete { dest, src } => {
                shadow.remove(dest, src).unwrap();
            }
        }
        ops.push(op);
    }
    ops
}

/// `n` default changes spread over the destinations of `rs` that hold a
/// default.
pub fn gen_default_updates(rs: &RuleSet, n: usize, actions: usize, seed: u64) -> Vec<UpdateOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dests: Vec<Prefix> = rs.dests().filter(|(_, a)| a.is_some()).map(|(d, _)| d).collect();
    if dests.is_empty() {
        return Vec::new();
    }
    let wild = Prefix::wildcard(rs.width_s());
    (0..n)
        .map(|_| UpdateOp::Update {
            dest: *dests.choose(&mut rng).unwrap(),
            src: wild,
            action: action(rng.gen_range(0..actions.max(1))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_counts() {
        let (rs, trace) = gen_policy(&ScenarioSpec::dense(16, 40, 5, 1)).unwrap();
        assert_eq!(rs.rule_count(), 200);
        assert_eq!(rs.dests().count(), 40);
        assert_eq!(rs.src_prefixes().len(), 5);
        assert_eq!(trace.len(), 200);
        let one = gen_policy(&ScenarioSpec::dense(8, 1, 1, 3)).unwrap().0;
        assert_eq!(one.rule_count(), 1);
    }

    #[test]
    fn deterministic_per_seed() {
        let s = ScenarioSpec::sparse(8, 150, 9);
        assert_eq!(gen_policy(&s).unwrap().1, gen_policy(&s).unwrap().1);
        assert_ne!(gen_policy(&s).unwrap().1, gen_policy(&ScenarioSpec { seed: 10, ..s }).unwrap().1);
        let rs = gen_policy(&s).unwrap().0;
        assert_eq!(rs.rule_count(), 150);
        assert_eq!(gen_updates(&rs, 50, 4, 2), gen_updates(&rs, 50, 4, 2));
    }

    #[test]
    fn infeasible_counts() {
        let s = ScenarioSpec { width_d: 1, dests: 4, ..ScenarioSpec::default() };
        assert!(matches!(gen_policy(&s), Err(Error::Infeasible(_))));
        let s = ScenarioSpec { dests: 2, srcs: 2, rules: 5, ..ScenarioSpec::default() };
        assert!(matches!(gen_policy(&s), Err(Error::Infeasible(_))));
        // every prefix of a 2-bit width
        assert_eq!(random_prefixes(&mut ChaCha8Rng::seed_from_u64(0), 2, 0, 7).unwrap().len(), 7);
    }

    #[test]
    fn update_traces_stay_valid() {
        let rs = gen_policy(&ScenarioSpec::sparse(6, 40, 4)).unwrap().0;
        let mut shadow = rs.clone();
        for op in gen_updates(&rs, 300, 4, 5) {
            match op {
                UpdateOp::Insert { dest, src, action } => shadow.insert(dest, src, action).unwrap(),
                UpdateOp::Update { dest, src, action } => {
                    shadow.upsert(dest, src, action).unwrap();
                }
                UpdateOp::Delete { dest, src } => {
                    shadow.remove(&dest, &src).unwrap();
                }
            }
        }
    }
}
