use std::fmt;
use std::time::{Duration, Instant};

use super::{NoObserver, WriteObserver};
use crate::cost::{AccessLedger, Counters};
use crate::error::{Error, Result};
use crate::fist::FistTable;
use crate::oracle::Action;
use crate::prefix::Prefix;

/// One control-plane change. A wildcard source addresses the default.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UpdateOp {
    Insert { dest: Prefix, src: Prefix, action: Action },
    Delete { dest: Prefix, src: Prefix },
    Update { dest: Prefix, src: Prefix, action: Action },
}

impl UpdateOp {
    pub fn dest(&self) -> Prefix {
        match self {
            UpdateOp::Insert { dest, .. } | UpdateOp::Delete { dest, .. } | UpdateOp::Update { dest, .. } => *dest,
        }
    }

    pub fn src(&self) -> Prefix {
        match self {
            UpdateOp::Insert { src, .. } | UpdateOp::Delete { src, .. } | UpdateOp::Update { src, .. } => *src,
        }
    }

    pub fn action(&self) -> Option<&Action> {
        match self {
            UpdateOp::Insert { action, .. } | UpdateOp::Update { action, .. } => Some(action),
            UpdateOp::Delete { .. } => None,
        }
    }

    /// Cells a from-scratch rebuild writes explicitly for this op: the
    /// rule's own cell, when it lives in the TD-table.
    fn explicit_cells(&self, t: &FistTable) -> u64 {
        match self {
            UpdateOp::Delete { .. } => 0,
            _ if !self.src().is_wildcard() => 1,
            _ => u64::from(!t.opts().isolation && t.row_of(&self.dest()).is_some()),
        }
    }
}

impl fmt::Display for UpdateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpdateOp::Insert { dest, src, action } => write!(f, "I {} {} {action}", dest.star(), src.star()),
            UpdateOp::Delete { dest, src } => write!(f, "D {} {}", dest.star(), src.star()),
            UpdateOp::Update { dest, src, action } => write!(f, "U {} {} {action}", dest.star(), src.star()),
        }
    }
}

/// Parses an update trace: one `I|D|U <dest> <src> [<action>]` per line,
/// `#` starts a comment.
pub fn parse_trace(text: &str, width_d: u8, width_s: u8) -> Result<Vec<UpdateOp>> {
    let mut ops = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let f: Vec<&str> = content.split_whitespace().collect();
        let prefix = |s: &str, w| Prefix::parse(s, w).map_err(|e| err(e.to_string()));
        let (kind, want) = match f[0] {
            "I" | "i" => ('I', 4),
            "U" | "u" => ('U', 4),
            "D" | "d" => ('D', 3),
            other => return Err(err(format!("unknown op `{other}` (I|D|U)"))),
        };
        if f.len() != want {
            return Err(err(format!("expected {want} fields, found {}", f.len())));
        }
        let dest = prefix(f[1], width_d)?;
        let src = prefix(f[2], width_s)?;
        ops.push(match kind {
            'I' => UpdateOp::Insert { dest, src, action: Action::new(f[3]) },
            'U' => UpdateOp::Update { dest, src, action: Action::new(f[3]) },
            _ => UpdateOp::Delete { dest, src },
        });
    }
    Ok(ops)
}

pub fn trace_to_text(ops: &[UpdateOp]) -> String {
    ops.iter().map(|o| format!("{o}\n")).collect()
}

/// How a replay reaches a saturated table after each op.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    /// Rewrite the changed rule's domain only.
    #[default]
    Incremental,
    /// Apply the rule, then re-saturate every conflicted cell of the table.
    FullSaturation,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "incremental" => Ok(Strategy::Incremental),
            "full" | "full-saturation" => Ok(Strategy::FullSaturation),
            other => Err(format!("unknown strategy `{other}` (incremental|full)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReplayResult {
    /// Charges of each op, in trace order.
    pub per_op: Vec<Counters>,
    pub totals: Counters,
    pub elapsed: Duration,
}

impl ReplayResult {
    pub fn max_td_writes(&self) -> u64 {
        self.per_op.iter().map(|c| c.sram_writes.td_cells).max().unwrap_or(0)
    }
}

impl FistTable {
    pub fn apply(&mut self, op: &UpdateOp, ledger: &mut AccessLedger, obs: &mut dyn WriteObserver) -> Result<usize> {
        match op {
            UpdateOp::Insert { dest, src, action } => self.insert_observed(*dest, *src, action.clone(), ledger, obs),
            UpdateOp::Delete { dest, src } => self.delete_observed(*dest, *src, ledger, obs),
            UpdateOp::Update { dest, src, action } => self.update_observed(*dest, *src, action.clone(), ledger, obs),
        }
    }
}

/// Applies `ops` in order, closing one ledger snapshot per op. Stops at the
/// first failing op.
pub fn replay(table: &mut FistTable, ops: &[UpdateOp], strategy: Strategy, ledger: &mut AccessLedger) -> Result<ReplayResult> {
    let start_totals = ledger.totals();
    ledger.snapshot("replay-start");
    let start = Instant::now();
    let mut per_op = Vec::with_capacity(ops.len());
    for (index, op) in ops.iter().enumerate() {
        let wrap = |e| Error::Trace { index, source: Box::new(e) };
        match strategy {
            Strategy::Incremental => {
                table.apply(op, ledger, &mut NoObserver).map_err(wrap)?;
            }
            Strategy::FullSaturation => {
                let mut scratch = AccessLedger::new();
                table.apply(op, &mut scratch, &mut NoObserver).map_err(wrap)?;
                let mut c = scratch.totals();
                c.sram_writes.td_cells = 0;
                ledger.charge(c);
                ledger.td_cell_write(op.explicit_cells(table));
                table.saturate_all(ledger);
            }
        }
        per_op.push(ledger.snapshot(op.to_string()));
    }
    Ok(ReplayResult {
        per_op,
        totals: ledger.totals() - start_totals,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fist::BuildOptions;
    use crate::oracle::RuleSet;

    #[test]
    fn parse_round_trip() {
        let text = "# trace\nI 10** 11** a\nU 10** 11** b\nD 10** 11**\nI 0*** **** z\n";
        let ops = parse_trace(text, 4, 4).unwrap();
        assert_eq!(ops.len(), 4);
        assert_eq!(parse_trace(&trace_to_text(&ops), 4, 4).unwrap(), ops);
        assert!(matches!(parse_trace("X 1 1", 4, 4), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_trace("D 1*** 1*** a", 4, 4), Err(Error::Parse { .. })));
    }

    #[test]
    fn full_saturation_writes_at_least_as_much() {
        let rs = RuleSet::parse("111* 111* a\n100* 111* b\n10** 11** c\ndefault 101* d\n", 4, 4).unwrap();
        let ops = parse_trace("I 101* 1*** e\nU 10** 11** f\nD 111* 111*\nI 0*** 0*** g\n", 4, 4).unwrap();
        let t0 = FistTable::build(&rs, BuildOptions::default()).unwrap();
        let (mut a, mut b) = (t0.clone(), t0);
        let ra = replay(&mut a, &ops, Strategy::Incremental, &mut AccessLedger::new()).unwrap();
        let rb = replay(&mut b, &ops, Strategy::FullSaturation, &mut AccessLedger::new()).unwrap();
        assert_eq!(a.td(), b.td());
        for (x, y) in ra.per_op.iter().zip(&rb.per_op) {
            assert!(x.sram_writes.td_cells <= y.sram_writes.td_cells);
            assert_eq!(x.tcam_writes, y.tcam_writes);
        }
        assert_eq!(ra.per_op.len(), 4);
    }

    #[test]
    fn failures_name_the_op() {
        let mut t = FistTable::empty(4, 4, BuildOptions::default()).unwrap();
        let ops = parse_trace("I 1*** 1*** a\nD 0*** 0***\n", 4, 4).unwrap();
        let e = replay(&mut t, &ops, Strategy::Incremental, &mut AccessLedger::new()).unwrap_err();
        assert!(matches!(e, Error::Trace { index: 1, .. }));
    }
}
