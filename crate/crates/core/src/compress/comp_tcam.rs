//! Joint minimization of the destination and source TCAM tables.
//!
//! Every stored prefix is summarized by what it resolves to: a destination
//! by its outcomes across the source classes, a source by its outcomes
//! across the destination classes. Each table is then minimized on its own
//! over those summaries, and the surviving prefixes point at one shared row
//! or column per distinct summary.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Bound;

use super::fingerprint::VectorInterner;
use super::ortc::{ortc, RootPolicy};
use super::NarrowStore;
use crate::error::{Error, Result};
use crate::fist::{BuildOptions, Cell, DestUnit, FistTable, SrcUnit};
use crate::prefix::{Prefix, PrefixTrie};

fn fully_covered(set: &BTreeSet<Prefix>, x: Prefix) -> bool {
    if set.contains(&x) {
        return true;
    }
    if x.len() == x.width() {
        return false;
    }
    match set.range((Bound::Excluded(x), Bound::Unbounded)).next() {
        Some(n) if x.covers(n) => {}
        _ => return false,
    }
    fully_covered(set, x.child(false).unwrap()) && fully_covered(set, x.child(true).unwrap())
}

/// Stored prefixes that are the longest match of at least one address.
pub fn reachable_entries<V>(trie: &PrefixTrie<V>) -> Vec<Prefix> {
    let set: BTreeSet<Prefix> = trie.prefixes().collect();
    set.iter()
        .copied()
        .filter(|q| {
            q.len() == q.width()
                || !(fully_covered(&set, q.child(false).unwrap()) && fully_covered(&set, q.child(true).unwrap()))
        })
        .collect()
}

/// Whether some address matches no stored prefix.
pub fn has_unmatched<V>(trie: &PrefixTrie<V>) -> bool {
    let set: BTreeSet<Prefix> = trie.prefixes().collect();
    !fully_covered(&set, Prefix::wildcard(trie.width()))
}

/// Outcome of a lookup that lands on destination class `d` and source
/// class `s` (`None` = no match in that table), as a cell: invalid means
/// no action.
fn resolved(t: &FistTable, d: Option<Prefix>, s: Option<Prefix>) -> Cell {
    let Some(u) = d.and_then(|d| t.dest_unit(&d)) else {
        return Cell::Invalid;
    };
    let fallback = Cell::from(u.default);
    match (u.row, s.and_then(|s| t.col_of(&s))) {
        (Some(r), Some(c)) => match t.td().get(r, c) {
            Cell::Invalid => fallback,
            v => v,
        },
        _ => fallback,
    }
}

fn constant(v: &[Cell]) -> Option<Cell> {
    let first = *v.first()?;
    v.iter().all(|&c| c == first).then_some(first)
}

/// Minimum-entry equivalent of `t`. The result is frozen; its rule set is
/// the input's, which it still realizes.
pub fn comp_tcam(t: &FistTable) -> Result<FistTable> {
    if !t.is_saturated() {
        return Err(Error::Unsaturated);
    }
    let opts = *t.opts();
    let algo = opts.fingerprint;

    let mut src_classes: Vec<Option<Prefix>> = reachable_entries(t.src_table()).into_iter().map(Some).collect();
    if has_unmatched(t.src_table()) {
        src_classes.push(None);
    }
    let dest_classes = reachable_entries(t.dest_table());

    let mut rows = VectorInterner::new(algo);
    let mut row_rep: Vec<Option<Prefix>> = Vec::new();
    let mut dest_entries = Vec::with_capacity(dest_classes.len());
    for &d in &dest_classes {
        let v: Vec<Cell> = src_classes.iter().map(|&s| resolved(t, Some(d), s)).collect();
        let (k, fresh) = rows.intern(&v);
        if fresh {
            row_rep.push(Some(d));
        }
        dest_entries.push((d, k));
    }
    let (dest_miss, fresh) = rows.intern(&vec![Cell::Invalid; src_classes.len()]);
    if fresh {
        row_rep.push(None);
    }
    let dest_out = ortc(t.width_d(), &dest_entries, RootPolicy::Implicit(dest_miss))?;

    // all-invalid summaries never need a row: such an entry only masks a
    // shorter one with "no action"
    let needs_row = |k: u32| {
        let v = rows.get(k);
        k != dest_miss && (!opts.non_homogeneous || constant(v).is_none())
    };
    let mut row_of_key: BTreeMap<u32, u32> = BTreeMap::new();
    for &(_, k) in &dest_out {
        if needs_row(k) {
            let next = row_of_key.len() as u32;
            row_of_key.entry(k).or_insert(next);
        }
    }

    let mut src_out = Vec::new();
    let mut col_rep: Vec<Option<Prefix>> = Vec::new();
    if !row_of_key.is_empty() {
        // rowless destinations never consult the source table
        let row_classes: Vec<Prefix> = dest_entries.iter().filter(|&&(_, k)| needs_row(k)).map(|&(d, _)| d).collect();
        let mut cols = VectorInterner::new(algo);
        let mut src_entries = Vec::new();
        for &s in src_classes.iter().flatten() {
            let v: Vec<Cell> = row_classes.iter().map(|&d| resolved(t, Some(d), Some(s))).collect();
            let (k, fresh) = cols.intern(&v);
            if fresh {
                col_rep.push(Some(s));
            }
            src_entries.push((s, k));
        }
        let miss: Vec<Cell> = row_classes.iter().map(|&d| resolved(t, Some(d), None)).collect();
        let (src_miss, fresh) = cols.intern(&miss);
        if fresh {
            col_rep.push(None);
        }
        let policy = if opts.isolation {
            RootPolicy::Implicit(src_miss)
        } else {
            RootPolicy::Required
        };
        src_out = ortc(t.width_s(), &src_entries, policy)?;
    }
    let mut col_of_key: BTreeMap<u32, u32> = BTreeMap::new();
    for &(_, k) in &src_out {
        let next = col_of_key.len() as u32;
        col_of_key.entry(k).or_insert(next);
    }

    let mut out = FistTable::empty(t.width_d(), t.width_s(), BuildOptions { dedup: None, ..opts })?;
    out.opts = opts;
    out.rules = t.rules().clone();
    out.mapping = t.mapping().clone();
    for _ in 0..col_of_key.len() {
        out.td.alloc_col();
    }
    let mut by_row: Vec<(u32, u32)> = row_of_key.iter().map(|(&k, &r)| (r, k)).collect();
    by_row.sort_unstable();
    for (r, rk) in by_row {
        assert_eq!(out.td.alloc_row(), r);
        let rd = row_rep[rk as usize];
        let default = Cell::from(rd.and_then(|d| t.dest_unit(&d)).and_then(|u| u.default));
        for (&ck, &c) in &col_of_key {
            let v = resolved(t, rd, col_rep[ck as usize]);
            let cell = if opts.isolation && v == default { Cell::Invalid } else { v };
            out.td.set(r, c, cell);
        }
    }
    for &(p, k) in &dest_out {
        let unit = match row_of_key.get(&k) {
            Some(&r) => DestUnit {
                indicator: true,
                row: Some(r),
                default: row_rep[k as usize].and_then(|d| t.dest_unit(&d)).and_then(|u| u.default),
            },
            None => DestUnit {
                indicator: false,
                row: None,
                default: constant(rows.get(k)).and_then(Cell::index),
            },
        };
        out.dest.insert(p, unit)?;
        out.dest_layout.insert(p)?;
    }
    for &(p, k) in &src_out {
        out.src.insert(p, SrcUnit { column: col_of_key[&k] })?;
        out.src_layout.insert(p)?;
    }
    if let Some(w) = opts.dedup {
        out.narrow = Some(NarrowStore::build(&out.td, w, algo)?);
    }
    out.saturated = true;
    out.frozen = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::AccessLedger;
    use crate::oracle::RuleSet;
    use crate::prefix::Address;

    fn same_lookups(a: &FistTable, b: &FistTable) {
        let mut l = AccessLedger::new();
        for d in Address::all(a.width_d()) {
            for s in Address::all(a.width_s()) {
                assert_eq!(a.lookup(&d, &s, &mut l).unwrap(), b.lookup(&d, &s, &mut l).unwrap(), "{d} {s}");
            }
        }
    }

    #[test]
    fn reachability() {
        let t: PrefixTrie<()> = ["1***", "10**", "11**", "0***", "01**"]
            .iter()
            .map(|s| (Prefix::parse(s, 4).unwrap(), ()))
            .collect();
        let r: Vec<String> = reachable_entries(&t).iter().map(|p| p.star()).collect();
        assert_eq!(r, ["0***", "01**", "10**", "11**"]);
        assert!(!has_unmatched(&t));
    }

    #[test]
    fn identical_rows_collapse_to_the_wildcard() {
        let rs = RuleSet::parse("0*** 1*** a\n10** 1*** a\n11** 1*** a\ndefault 0*** x\ndefault 10** x\ndefault 11** x\n", 4, 4).unwrap();
        for isolation in [true, false] {
            let t = FistTable::build(&rs, BuildOptions { isolation, ..Default::default() }).unwrap();
            let c = comp_tcam(&t).unwrap();
            let dests: Vec<Prefix> = c.dest_table().prefixes().collect();
            assert_eq!(dests, vec![Prefix::wildcard(4)]);
            assert!(c.is_frozen());
            same_lookups(&t, &c);
        }
    }

    #[test]
    fn rejects_unsaturated_input() {
        let rs = RuleSet::parse("0*** 1*** a\n0*** 11** b\n", 4, 4).unwrap();
        let t = FistTable::build_unsaturated(&rs, BuildOptions::default()).unwrap();
        assert_eq!(comp_tcam(&t).unwrap_err(), Error::Unsaturated);
    }
}
