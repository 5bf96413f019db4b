#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use fist::fist::{BuildOptions, FistTable};
use fist::oracle::{oracle_lookup, Action, RuleSet};
use fist::prefix::{Address, Prefix};
use fist::update::UpdateOp;
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Label = Vec<Option<Action>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn p(s: &str, w: u8) -> Prefix {
    Prefix::parse(s, w).unwrap()
}

pub fn prefix(rng: &mut impl Rng, width: u8) -> Prefix {
    let len = rng.gen_range(0..=width);
    let value = if len == 0 { 0 } else { rng.gen_range(0..1u128 << len) };
    Prefix::from_value(width, len, value).unwrap()
}

/// `n` random rules over a pool of `dests` x `srcs` prefixes, actions
/// `a0..a{actions}`, and a default on each destination with chance `defaults`.
pub fn random_rules(seed: u64, width: u8, n: usize, pool: usize, actions: usize, defaults: f64) -> RuleSet {
    let mut r = rng(seed);
    let dests: Vec<Prefix> = (0..pool).map(|_| prefix(&mut r, width)).collect();
    let srcs: Vec<Prefix> = (0..pool).map(|_| prefix(&mut r, width)).collect();
    let mut rs = RuleSet::new(width, width);
    for _ in 0..n {
        let d = dests[r.gen_range(0..pool)];
        let s = srcs[r.gen_range(0..pool)];
        rs.upsert(d, s, format!("a{}", r.gen_range(0..actions))).unwrap();
    }
    for d in dests {
        if r.gen_bool(defaults) && rs.default_of(&d).is_none() {
            rs.set_default(d, format!("a{}", r.gen_range(0..actions))).unwrap();
        }
    }
    rs
}

pub fn all_flag_combos() -> Vec<BuildOptions> {
    let mut out = Vec::new();
    for isolation in [true, false] {
        for non_homogeneous in [true, false] {
            for dedup in [None, Some(2)] {
                out.push(BuildOptions {
                    isolation,
                    non_homogeneous,
                    dedup,
                    ..Default::default()
                });
            }
        }
    }
    out
}

/// Lookup semantics computed straight from the rule list.
pub fn naive_lookup(rs: &RuleSet, d: &Address, s: &Address) -> Option<Action> {
    let dest = rs
        .dests()
        .map(|(q, _)| q)
        .filter(|q| q.matches(d).unwrap())
        .max_by_key(|q| q.len())?;
    let best = rs
        .rules()
        .filter(|r| r.dest == dest && r.src.matches(s).unwrap())
        .max_by_key(|r| r.src.len());
    match best {
        Some(r) => Some(r.action),
        None => rs.default_of(&dest).cloned(),
    }
}

/// Every rule and default replaced by a token naming it, so any change of
/// the governing entry shows up as a changed value.
pub fn tokens(rs: &RuleSet, fresh: Option<(Prefix, Prefix)>) -> RuleSet {
    let mut out = RuleSet::new(rs.width_d(), rs.width_s());
    for r in rs.rules() {
        let name = if fresh == Some((r.dest, r.src)) {
            "fresh".to_string()
        } else {
            format!("{} {}", r.dest, r.src)
        };
        out.insert(r.dest, r.src, name).unwrap();
    }
    for (d, a) in rs.dests() {
        if a.is_some() {
            out.set_default(d, format!("default {d}")).unwrap();
        }
    }
    out
}

/// Stored value of cell (d, q) in a saturated table over `rs`, computed
/// from the rule list alone.
pub fn cell_value(rs: &RuleSet, d: &Prefix, q: &Prefix, isolation: bool) -> Option<Action> {
    let best = rs.rules_of(d).filter(|(s, _)| s.covers(q)).max_by_key(|(s, _)| s.len());
    match best {
        Some((_, a)) => Some(a.clone()),
        None if !isolation => rs.default_of(d).cloned(),
        None => None,
    }
}

pub fn rows(t: &FistTable) -> BTreeSet<Prefix> {
    t.dest_table().iter().filter(|(_, u)| u.row.is_some()).map(|(p, _)| p).collect()
}

/// Cells whose governing entry differs between `before` and `after`, with
/// `fresh` standing for a rewritten rule.
pub fn cell_diff(before: &RuleSet, after: &RuleSet, fresh: (Prefix, Prefix), opts: BuildOptions) -> usize {
    let (tb, ta) = (FistTable::build(before, opts).unwrap(), FistTable::build(after, opts).unwrap());
    let (vb, va) = (tokens(before, None), tokens(after, Some(fresh)));
    let dests: BTreeSet<Prefix> = rows(&tb).union(&rows(&ta)).copied().collect();
    let srcs: BTreeSet<Prefix> = tb.src_table().prefixes().chain(ta.src_table().prefixes()).collect();
    let mut n = 0;
    for d in &dests {
        for q in &srcs {
            if cell_value(&vb, d, q, opts.isolation) != cell_value(&va, d, q, opts.isolation) {
                n += 1;
            }
        }
    }
    n
}

pub fn random_op(r: &mut impl Rng, rs: &RuleSet, width: u8) -> UpdateOp {
    let existing: Vec<(Prefix, Prefix)> = rs.rules().map(|x| (x.dest, x.src)).collect();
    let action = Action::new(format!("a{}", r.gen_range(0..4)));
    match r.gen_range(0..3) {
        0 | 1 if !existing.is_empty() => {
            let (dest, src) = *existing.iter().choose(r).unwrap();
            if r.gen_bool(0.5) {
                UpdateOp::Delete { dest, src }
            } else {
                UpdateOp::Update { dest, src, action }
            }
        }
        _ => loop {
            let dest = if !existing.is_empty() && r.gen_bool(0.5) {
                existing.iter().choose(r).unwrap().0
            } else {
                prefix(r, width)
            };
            let src = prefix(r, width);
            if !src.is_wildcard() && rs.get(&dest, &src).is_none() {
                break UpdateOp::Insert { dest, src, action };
            }
        },
    }
}

pub fn apply_to_rules(rs: &mut RuleSet, op: &UpdateOp) {
    match op {
        UpdateOp::Insert { dest, src, action } => rs.insert(*dest, *src, action.clone()).unwrap(),
        UpdateOp::Delete { dest, src } => {
            rs.remove(dest, src).unwrap();
        }
        UpdateOp::Update { dest, src, action } => {
            rs.upsert(*dest, *src, action.clone()).unwrap();
        }
    }
}

/// Minimum prefix count giving every address of `width` bits its label
/// under longest match. `root = None` means every address must be covered.
pub struct MinCover<'a, L> {
    width: u8,
    labels: &'a [L],
    memo: HashMap<(Prefix, Option<usize>), usize>,
}

impl<'a, L: PartialEq> MinCover<'a, L> {
    pub fn solve(width: u8, labels: &'a [L], root: Option<&L>) -> usize {
        let mut m = MinCover {
            width,
            labels,
            memo: HashMap::new(),
        };
        // inherited labels are tracked by the index of an address carrying them
        let inh = root.map(|r| labels.iter().position(|l| l == r).unwrap_or(usize::MAX));
        m.cost(Prefix::wildcard(width), inh)
    }

    fn label_of(&self, inh: Option<usize>) -> Option<&L> {
        inh.and_then(|i| self.labels.get(i))
    }

    fn cost(&mut self, x: Prefix, inh: Option<usize>) -> usize {
        if let Some(&c) = self.memo.get(&(x, inh)) {
            return c;
        }
        let first = x.first_address().bits() as usize;
        let span = 1usize << (self.width - x.len());
        let c = if x.len() == self.width {
            let here = &self.labels[first];
            let covered = match inh {
                Some(usize::MAX) => false,
                Some(i) => self.labels.get(i) == Some(here),
                None => false,
            };
            usize::from(!covered)
        } else {
            let (x0, x1) = (x.child(false).unwrap(), x.child(true).unwrap());
            let mut best = self.cost(x0, inh) + self.cost(x1, inh);
            let mut tried: Vec<usize> = Vec::new();
            for i in first..first + span {
                if tried.iter().any(|&j| self.labels[j] == self.labels[i]) || self.label_of(inh) == Some(&self.labels[i]) {
                    continue;
                }
                tried.push(i);
                best = best.min(1 + self.cost(x0, Some(i)) + self.cost(x1, Some(i)));
            }
            best
        };
        self.memo.insert((x, inh), c);
        c
    }
}

/// Exhaustive search over prefix subsets; small widths only.
pub fn brute_cover<L: PartialEq>(width: u8, labels: &[L], root: Option<&L>) -> usize {
    let all: Vec<Prefix> = (0..=width)
        .flat_map(|len| (0..1u128 << len).map(move |v| Prefix::from_value(width, len, v).unwrap()))
        .collect();
    let mut best = usize::MAX;
    for mask in 0u64..1 << all.len() {
        let k = mask.count_ones() as usize;
        if k >= best {
            continue;
        }
        let set: Vec<Prefix> = (0..all.len()).filter(|i| mask >> i & 1 == 1).map(|i| all[i]).collect();
        let mut group: HashMap<Prefix, usize> = HashMap::new();
        let ok = Address::all(width).all(|a| {
            let i = a.bits() as usize;
            match set.iter().filter(|q| q.matches(&a).unwrap()).max_by_key(|q| q.len()) {
                Some(q) => *group.entry(*q).or_insert(i) == i || labels[group[q]] == labels[i],
                None => root == Some(&labels[i]),
            }
        });
        if ok {
            best = k;
        }
    }
    best
}

/// Independent minimum of destination plus source entries for `rs` built
/// with `opts`.
pub fn min_entries(rs: &RuleSet, opts: BuildOptions) -> usize {
    let (wd, ws) = (rs.width_d(), rs.width_s());
    let dests: Vec<Address> = Address::all(wd).collect();
    let srcs: Vec<Address> = Address::all(ws).collect();
    let f: Vec<Label> = dests
        .iter()
        .map(|d| srcs.iter().map(|s| oracle_lookup(rs, d, s).action().cloned()).collect())
        .collect();
    let none: Label = vec![None; srcs.len()];
    let dest_min = MinCover::solve(wd, &f, Some(&none));
    let constant = |v: &Label| v.iter().all(|x| *x == v[0]);
    let with_row: Vec<usize> = (0..dests.len())
        .filter(|&i| f[i] != none && (!opts.non_homogeneous || !constant(&f[i])))
        .collect();
    if with_row.is_empty() {
        return dest_min;
    }
    let cols: Vec<Label> = (0..srcs.len()).map(|j| with_row.iter().map(|&i| f[i][j].clone()).collect()).collect();
    let src_min = if opts.isolation {
        let fallback: Label = with_row
            .iter()
            .map(|&i| {
                let d = &dests[i];
                rs.dests()
                    .filter(|(q, _)| q.matches(d).unwrap())
                    .max_by_key(|(q, _)| q.len())
                    .and_then(|(_, a)| a.cloned())
            })
            .collect();
        MinCover::solve(ws, &cols, Some(&fallback))
    } else {
        MinCover::solve(ws, &cols, None)
    };
    dest_min + src_min
}
