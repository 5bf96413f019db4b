//! Brute-force reference semantics of two-dimensional matching over a flat
//! rule list, plus the concatenated-key (ACL-like) TCAM baseline.

mod rules;

pub use rules::{Action, Rule, RuleSet};

use crate::cost::AccessLedger;
use crate::prefix::{Address, Prefix};

/// Lookup outcome. `Default` records that the destination's default next hop
/// answered because no source-specific rule matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict<'a> {
    Rule(&'a Action),
    Default(&'a Action),
    Miss,
}

impl<'a> Verdict<'a> {
    pub fn action(&self) -> Option<&'a Action> {
        match *self {
            Verdict::Rule(a) | Verdict::Default(a) => Some(a),
            Verdict::Miss => None,
        }
    }

    pub fn is_miss(&self) -> bool {
        matches!(self, Verdict::Miss)
    }
}

/// Destination first by longest match among every destination present in
/// the set, then the longest matching source among that destination's rules,
/// then its default. O(|destinations| + |rules of the match|) per call.
pub fn oracle_lookup<'a>(rs: &'a RuleSet, d: &Address, s: &Address) -> Verdict<'a> {
    if d.width() != rs.width_d() || s.width() != rs.width_s() {
        return Verdict::Miss;
    }
    let mut best: Option<Prefix> = None;
    for (dest, _) in rs.dests() {
        if dest.matches_unchecked(d) && best.map_or(true, |b| dest.len() > b.len()) {
            best = Some(dest);
        }
    }
    let Some(dest) = best else {
        return Verdict::Miss;
    };
    let mut hit: Option<(Prefix, &Action)> = None;
    for (src, action) in rs.rules_of(&dest) {
        if src.matches_unchecked(s) && hit.map_or(true, |(h, _)| src.len() > h.len()) {
            hit = Some((src, action));
        }
    }
    match (hit, rs.default_of(&dest)) {
        (Some((_, a)), _) => Verdict::Rule(a),
        (None, Some(a)) => Verdict::Default(a),
        (None, None) => Verdict::Miss,
    }
}

/// Storage of the concatenated-key layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AclCost {
    pub tcam_entries: u64,
    pub tcam_bits: u64,
    pub sram_bits: u64,
}

/// Bits needed to index `n` distinct values (at least one bit when `n > 0`).
pub fn index_bits(n: usize) -> u64 {
    match n {
        0 => 0,
        1 => 1,
        n => (usize::BITS - (n - 1).leading_zeros()) as u64,
    }
}

/// Cost of storing `rs` with destination and source concatenated in one
/// TCAM entry of `2 * slot_width` bits. With `fold_defaults`, each default is
/// an extra wildcard-source entry.
pub fn acl_cost_model(rs: &RuleSet, slot_width: u32, fold_defaults: bool) -> AclCost {
    let mut entries = rs.rule_count() as u64;
    if fold_defaults {
        entries += rs.default_count() as u64;
    }
    let actions = if fold_defaults {
        rs.actions().len()
    } else {
        rs.rules().map(|r| r.action).collect::<std::collections::BTreeSet<_>>().len()
    };
    AclCost {
        tcam_entries: entries,
        tcam_bits: entries * 2 * slot_width as u64,
        sram_bits: entries * index_bits(actions),
    }
}

/// Priority-ordered concatenated-key table. Each destination carries a
/// terminal wildcard-source entry (its default, or an explicit miss) so that
/// first-match over the ordering reproduces [`oracle_lookup`].
#[derive(Clone, Debug)]
pub struct AclTable {
    entries: Vec<(Prefix, Prefix, Option<Action>)>,
}

impl AclTable {
    pub fn build(rs: &RuleSet) -> Self {
        let wild = Prefix::wildcard(rs.width_s());
        let mut entries: Vec<_> = rs
            .rules()
            .map(|r| (r.dest, r.src, Some(r.action)))
            .chain(rs.dests().map(|(d, a)| (d, wild, a.cloned())))
            .collect();
        entries.sort_by(|a, b| {
            b.0.len()
                .cmp(&a.0.len())
                .then(b.1.len().cmp(&a.1.len()))
                .then(a.0.cmp(&b.0))
                .then(a.1.cmp(&b.1))
        });
        AclTable { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One TCAM search over the concatenated key, one SRAM read of the
    /// associated action.
    pub fn lookup(&self, d: &Address, s: &Address, ledger: &mut AccessLedger) -> Option<&Action> {
        ledger.count_lookup();
        ledger.tcam_read(1);
        ledger.sram_read(1);
        self.entries
            .iter()
            .find(|(dp, sp, _)| dp.matches_unchecked(d) && sp.matches_unchecked(s))
            .and_then(|(_, _, a)| a.as_ref())
    }
}
