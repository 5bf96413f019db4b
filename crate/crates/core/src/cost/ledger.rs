use std::ops::{Add, AddAssign, Sub};

use crate::report::Report;

/// SRAM writes split by the structure written.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SramWrites {
    /// TD-cells rewritten because they fall in an updated domain.
    pub td_cells: u64,
    /// TD-cells written while initializing a freshly assigned row or column.
    pub td_bulk: u64,
    pub catalog: u64,
    pub narrow: u64,
    /// SRAM units behind destination and source TCAM entries.
    pub units: u64,
    pub mapping: u64,
}

impl SramWrites {
    pub fn total(&self) -> u64 {
        self.td_cells + self.td_bulk + self.catalog + self.narrow + self.units + self.mapping
    }

    /// Writes landing in the two-dimensional cell store.
    pub fn td_total(&self) -> u64 {
        self.td_cells + self.td_bulk
    }
}

impl Add for SramWrites {
    type Output = SramWrites;
    fn add(self, o: SramWrites) -> SramWrites {
        SramWrites {
            td_cells: self.td_cells + o.td_cells,
            td_bulk: self.td_bulk + o.td_bulk,
            catalog: self.catalog + o.catalog,
            narrow: self.narrow + o.narrow,
            units: self.units + o.units,
            mapping: self.mapping + o.mapping,
        }
    }
}

impl Sub for SramWrites {
    type Output = SramWrites;
    fn sub(self, o: SramWrites) -> SramWrites {
        SramWrites {
            td_cells: self.td_cells - o.td_cells,
            td_bulk: self.td_bulk - o.td_bulk,
            catalog: self.catalog - o.catalog,
            narrow: self.narrow - o.narrow,
            units: self.units - o.units,
            mapping: self.mapping - o.mapping,
        }
    }
}

/// Memory access counters. All fields only ever grow within a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub lookups: u64,
    pub tcam_reads: u64,
    /// Entry writes, including entries relocated by the slot layout.
    pub tcam_writes: u64,
    /// The relocation share of `tcam_writes`.
    pub tcam_moves: u64,
    pub sram_reads: u64,
    pub sram_writes: SramWrites,
}

impl Counters {
    pub fn tcam_accesses(&self) -> u64 {
        self.tcam_reads + self.tcam_writes
    }

    pub fn sram_write_total(&self) -> u64 {
        self.sram_writes.total()
    }

    pub fn to_report(&self, title: &str) -> Report {
        let mut r = Report::new(title);
        r.push("lookups", self.lookups);
        r.push("tcam_reads", self.tcam_reads);
        r.push("tcam_writes", self.tcam_writes);
        r.push("tcam_moves", self.tcam_moves);
        r.push("sram_reads", self.sram_reads);
        r.push("sram_writes", self.sram_writes.total());
        r.push("sram_writes_td_cells", self.sram_writes.td_cells);
        r.push("sram_writes_td_bulk", self.sram_writes.td_bulk);
        r.push("sram_writes_catalog", self.sram_writes.catalog);
        r.push("sram_writes_narrow", self.sram_writes.narrow);
        r.push("sram_writes_units", self.sram_writes.units);
        r.push("sram_writes_mapping", self.sram_writes.mapping);
        r
    }
}

impl Add for Counters {
    type Output = Counters;
    fn add(self, o: Counters) -> Counters {
        Counters {
            lookups: self.lookups + o.lookups,
            tcam_reads: self.tcam_reads + o.tcam_reads,
            tcam_writes: self.tcam_writes + o.tcam_writes,
            tcam_moves: self.tcam_moves + o.tcam_moves,
            sram_reads: self.sram_reads + o.sram_reads,
            sram_writes: self.sram_writes + o.sram_writes,
        }
    }
}

impl AddAssign for Counters {
    fn add_assign(&mut self, o: Counters) {
        *self = *self + o;
    }
}

impl Sub for Counters {
    type Output = Counters;
    fn sub(self, o: Counters) -> Counters {
        Counters {
            lookups: self.lookups - o.lookups,
            tcam_reads: self.tcam_reads - o.tcam_reads,
            tcam_writes: self.tcam_writes - o.tcam_writes,
            tcam_moves: self.tcam_moves - o.tcam_moves,
            sram_reads: self.sram_reads - o.sram_reads,
            sram_writes: self.sram_writes - o.sram_writes,
        }
    }
}

impl std::iter::Sum for Counters {
    fn sum<I: Iterator<Item = Counters>>(iter: I) -> Counters {
        iter.fold(Counters::default(), Add::add)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub label: String,
    pub delta: Counters,
}

/// Access counters charged by every lookup and update, with labelled
/// per-operation snapshots.
///
/// Each thread charges its own ledger; [`AccessLedger::merge`] folds finished
/// ledgers together.
#[derive(Clone, Debug, Default)]
pub struct AccessLedger {
    totals: Counters,
    mark: Counters,
    snapshots: Vec<Snapshot>,
}

impl AccessLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn totals(&self) -> Counters {
        self.totals
    }

    /// Counters charged since the last snapshot.
    pub fn pending(&self) -> Counters {
        self.totals - self.mark
    }

    #[inline]
    pub fn count_lookup(&mut self) {
        self.totals.lookups += 1;
    }

    #[inline]
    pub fn tcam_read(&mut self, n: u64) {
        self.totals.tcam_reads += n;
    }

    #[inline]
    pub fn tcam_write(&mut self, n: u64) {
        self.totals.tcam_writes += n;
    }

    pub fn tcam_move(&mut self, n: u64) {
        self.totals.tcam_writes += n;
        self.totals.tcam_moves += n;
    }

    #[inline]
    pub fn sram_read(&mut self, n: u64) {
        self.totals.sram_reads += n;
    }

    #[inline]
    pub fn td_cell_write(&mut self, n: u64) {
        self.totals.sram_writes.td_cells += n;
    }

    #[inline]
    pub fn td_bulk_write(&mut self, n: u64) {
        self.totals.sram_writes.td_bulk += n;
    }

    pub fn catalog_write(&mut self, n: u64) {
        self.totals.sram_writes.catalog += n;
    }

    pub fn narrow_write(&mut self, n: u64) {
        self.totals.sram_writes.narrow += n;
    }

    pub fn unit_write(&mut self, n: u64) {
        self.totals.sram_writes.units += n;
    }

    pub fn mapping_write(&mut self, n: u64) {
        self.totals.sram_writes.mapping += n;
    }

    /// Adds a precomputed charge.
    pub fn charge(&mut self, c: Counters) {
        self.totals += c;
    }

    /// Closes the current operation: records what was charged since the
    /// previous snapshot and returns it.
    pub fn snapshot(&mut self, label: impl Into<String>) -> Counters {
        let delta = self.pending();
        self.snapshots.push(Snapshot {
            label: label.into(),
            delta,
        });
        self.mark = self.totals;
        delta
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// Sums of consecutive groups of `size` snapshots (the last group may be
    /// short).
    pub fn windows(&self, size: usize) -> Vec<Counters> {
        assert!(size > 0, "window size must be positive");
        self.snapshots
            .chunks(size)
            .map(|c| c.iter().map(|s| s.delta).sum())
            .collect()
    }

    /// Adds another ledger's totals and snapshots to this one.
    pub fn merge(&mut self, other: &AccessLedger) {
        let pending = self.pending();
        self.totals += other.totals;
        self.snapshots.extend(other.snapshots.iter().cloned());
        let other_pending = other.pending();
        self.mark = self.totals - pending - other_pending;
    }

    pub fn report(&self) -> Report {
        self.totals.to_report("ledger")
    }
}
