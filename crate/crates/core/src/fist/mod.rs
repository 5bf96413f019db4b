//! The split forwarding state: destination and source TCAM tables pointing
//! at SRAM units, the two-dimensional TD-table of action indexes, and the
//! mapping table from index to next hop.
//!
//! Lookups resolve each dimension independently by longest match and read
//! one TD-cell. Saturation pre-fills every cell whose source has no rule of
//! its own, so that the independent matches agree with the two-stage rule
//! evaluated by [`crate::oracle::oracle_lookup`].

mod mapping;
mod td;

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use mapping::MappingTable;
pub use td::{ActionIndex, Cell, TdTable, INVALID_SENTINEL};

use crate::compress::{FingerprintAlgo, NarrowStore};
use crate::cost::{AccessLedger, LatencyOptions, TcamLayout, DEFAULT_PREALLOC};
use crate::error::{Error, Result};
use crate::oracle::{index_bits, Action, RuleSet};
use crate::prefix::{Address, Prefix, PrefixTrie};
use crate::report::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Keep defaults out of the TD-table: the wildcard is never a source
    /// entry and cells with no governing rule are invalid.
    pub isolation: bool,
    /// Destinations without source-specific rules take no row; their
    /// indicator bit sends lookups straight to the default.
    pub non_homogeneous: bool,
    /// Narrow-row width for fixed-block deduplication of the TD-table.
    pub dedup: Option<usize>,
    pub fingerprint: FingerprintAlgo,
    /// TCAM slot width in bits; the wider address width when unset.
    pub entry_width: Option<u32>,
    /// Slots reserved per prefix-length cluster of each TCAM table.
    pub prealloc: usize,
    /// Destination and source keys searched one after the other.
    pub double_tcam_request: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            isolation: true,
            non_homogeneous: true,
            dedup: None,
            fingerprint: FingerprintAlgo::default(),
            entry_width: None,
            prealloc: DEFAULT_PREALLOC,
            double_tcam_request: false,
        }
    }
}

impl BuildOptions {
    pub fn validate(&self) -> Result<()> {
        if self.dedup == Some(0) {
            return Err(Error::Config("dedup width must be at least 1".into()));
        }
        if self.entry_width == Some(0) {
            return Err(Error::Config("TCAM entry width must be at least 1".into()));
        }
        Ok(())
    }

    pub fn latency_options(&self) -> LatencyOptions {
        LatencyOptions {
            dedup: self.dedup.is_some(),
            acl_baseline: false,
            double_tcam_request: self.double_tcam_request,
        }
    }
}

/// SRAM unit behind a destination entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DestUnit {
    pub indicator: bool,
    pub row: Option<u32>,
    pub default: Option<ActionIndex>,
}

/// SRAM unit behind a source entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SrcUnit {
    pub column: u32,
}

/// Storage footprint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Sizes {
    pub dest_entries: usize,
    pub src_entries: usize,
    pub rows: usize,
    pub cols: usize,
    pub tcam_bits: u64,
    pub td_bits: u64,
    pub unit_bits: u64,
    pub sram_bits: u64,
}

impl Sizes {
    pub fn tcam_entries(&self) -> usize {
        self.dest_entries + self.src_entries
    }

    pub fn to_report(&self, title: &str) -> Report {
        let mut r = Report::new(title);
        r.push("dest_entries", self.dest_entries)
            .push("src_entries", self.src_entries)
            .push("tcam_entries", self.tcam_entries())
            .push("rows", self.rows)
            .push("cols", self.cols)
            .push("tcam_bits", self.tcam_bits)
            .push("td_bits", self.td_bits)
            .push("unit_bits", self.unit_bits)
            .push("sram_bits", self.sram_bits);
        r
    }
}

#[derive(Clone, Debug)]
pub struct FistTable {
    pub(crate) opts: BuildOptions,
    pub(crate) rules: RuleSet,
    pub(crate) dest: PrefixTrie<DestUnit>,
    pub(crate) src: PrefixTrie<SrcUnit>,
    pub(crate) dest_layout: TcamLayout,
    pub(crate) src_layout: TcamLayout,
    pub(crate) td: TdTable,
    pub(crate) narrow: Option<NarrowStore>,
    pub(crate) mapping: MappingTable,
    /// Rules per non-wildcard source prefix.
    pub(crate) src_refs: BTreeMap<Prefix, u32>,
    pub(crate) saturated: bool,
    pub(crate) frozen: bool,
}

impl FistTable {
    pub fn empty(width_d: u8, width_s: u8, opts: BuildOptions) -> Result<Self> {
        opts.validate()?;
        let mut t = FistTable {
            opts,
            rules: RuleSet::new(width_d, width_s),
            dest: PrefixTrie::new(width_d),
            src: PrefixTrie::new(width_s),
            dest_layout: TcamLayout::new(width_d, opts.prealloc),
            src_layout: TcamLayout::new(width_s, opts.prealloc),
            td: TdTable::new(),
            narrow: None,
            mapping: MappingTable::new(),
            src_refs: BTreeMap::new(),
            saturated: true,
            frozen: false,
        };
        if let Some(w) = opts.dedup {
            t.narrow = Some(NarrowStore::new(w, opts.fingerprint)?);
        }
        Ok(t)
    }

    /// Builds and saturates.
    pub fn build(rs: &RuleSet, opts: BuildOptions) -> Result<Self> {
        let mut t = Self::build_unsaturated(rs, opts)?;
        t.saturate(&mut AccessLedger::new());
        if let Some(w) = opts.dedup {
            t.narrow = Some(NarrowStore::build(&t.td, w, opts.fingerprint)?);
        }
        Ok(t)
    }

    /// Places every prefix and writes the cells of explicit rules only.
    /// Deduplicated storage is attached by [`FistTable::build`] after
    /// saturation, so the table returned here reads the plain TD-table.
    pub fn build_unsaturated(rs: &RuleSet, opts: BuildOptions) -> Result<Self> {
        let mut t = Self::empty(rs.width_d(), rs.width_s(), BuildOptions { dedup: None, ..opts })?;
        t.opts = opts;
        t.rules = rs.clone();
        let actions: Vec<Action> = rs.actions().into_iter().cloned().collect();
        for a in &actions {
            t.mapping.acquire(a);
        }
        for r in rs.rules() {
            t.mapping.acquire(&r.action);
            *t.src_refs.entry(r.src).or_default() += 1;
        }
        for (_, a) in rs.dests() {
            if let Some(a) = a {
                t.mapping.acquire(a);
            }
        }
        for a in &actions {
            let i = t.mapping.index_of(a).unwrap();
            t.mapping.release(i);
        }

        for (d, default) in rs.dests() {
            let has_rules = rs.rules_of(&d).next().is_some();
            let row = (has_rules || !opts.non_homogeneous).then(|| t.td.alloc_row());
            let unit = DestUnit {
                indicator: row.is_some(),
                row,
                default: default.and_then(|a| t.mapping.index_of(a)),
            };
            t.dest.insert(d, unit)?;
            t.dest_layout.insert(d)?;
        }
        if !opts.isolation && t.td.row_count() > 0 {
            t.link_src(Prefix::wildcard(rs.width_s()))?;
        }
        for s in rs.src_prefixes() {
            t.link_src(s)?;
        }
        for r in rs.rules() {
            let row = t.row_of(&r.dest).unwrap();
            let col = t.col_of(&r.src).unwrap();
            let i = t.mapping.index_of(&r.action).unwrap();
            t.td.set(row, col, Cell::Valid(i));
        }
        if !opts.isolation {
            if let Some(col) = t.col_of(&Prefix::wildcard(rs.width_s())) {
                for (_, u) in t.dest.iter() {
                    if let (Some(row), Some(i)) = (u.row, u.default) {
                        t.td.set(row, col, Cell::Valid(i));
                    }
                }
            }
        }
        t.saturated = t.td.row_count() == 0 || t.td.col_count() == 0;
        Ok(t)
    }

    fn link_src(&mut self, s: Prefix) -> Result<u32> {
        let column = self.td.alloc_col();
        self.src.insert(s, SrcUnit { column })?;
        self.src_layout.insert(s)?;
        Ok(column)
    }

    pub fn opts(&self) -> &BuildOptions {
        &self.opts
    }

    /// The control-plane rule set this table currently realizes.
    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn width_d(&self) -> u8 {
        self.rules.width_d()
    }

    pub fn width_s(&self) -> u8 {
        self.rules.width_s()
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// Compressed tables no longer mirror a rule set and reject updates.
    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn td(&self) -> &TdTable {
        &self.td
    }

    pub fn mapping(&self) -> &MappingTable {
        &self.mapping
    }

    pub fn narrow(&self) -> Option<&NarrowStore> {
        self.narrow.as_ref()
    }

    pub fn dest_table(&self) -> &PrefixTrie<DestUnit> {
        &self.dest
    }

    pub fn src_table(&self) -> &PrefixTrie<SrcUnit> {
        &self.src
    }

    pub fn dest_layout(&self) -> &TcamLayout {
        &self.dest_layout
    }

    pub fn src_layout(&self) -> &TcamLayout {
        &self.src_layout
    }

    pub fn dest_unit(&self, d: &Prefix) -> Option<&DestUnit> {
        self.dest.get(d)
    }

    pub fn row_of(&self, d: &Prefix) -> Option<u32> {
        self.dest.get(d)?.row
    }

    pub fn col_of(&self, s: &Prefix) -> Option<u32> {
        self.src.get(s).map(|u| u.column)
    }

    /// The stored cell at the intersection of two stored prefixes, read
    /// through deduplicated storage when present.
    pub fn cell(&self, d: &Prefix, s: &Prefix) -> Option<Cell> {
        let (r, c) = (self.row_of(d)?, self.col_of(s)?);
        match &self.narrow {
            Some(n) => n.lookup(r, c).ok(),
            None => self.td.try_get(r, c),
        }
    }

    pub fn cell_action(&self, d: &Prefix, s: &Prefix) -> Option<&Action> {
        self.mapping.get(self.cell(d, s)?.index()?)
    }

    pub fn tcam_entries(&self) -> usize {
        self.dest.len() + self.src.len()
    }

    fn action(&self, i: ActionIndex) -> Result<&Action> {
        self.mapping
            .get(i)
            .ok_or_else(|| Error::Corruption(format!("index {i} is not in the mapping table")))
    }

    /// Reads a cell the way the data plane does.
    fn read_cell(&self, r: u32, c: u32) -> Result<Cell> {
        match &self.narrow {
            Some(n) => n.lookup(r, c),
            None => self
                .td
                .try_get(r, c)
                .ok_or(Error::Unassigned { row: r, col: c }),
        }
    }

    /// Full lookup path. Every stage is charged, including stages a miss or
    /// a destination-only prefix leaves idle.
    pub fn lookup(&self, d: &Address, s: &Address, ledger: &mut AccessLedger) -> Result<Option<&Action>> {
        if d.width() != self.width_d() || s.width() != self.width_s() {
            return Err(Error::WidthMismatch {
                expected: if d.width() != self.width_d() { self.width_d() } else { self.width_s() },
                found: if d.width() != self.width_d() { d.width() } else { s.width() },
            });
        }
        ledger.count_lookup();
        ledger.tcam_read(if self.opts.double_tcam_request { 2 } else { 1 });
        ledger.sram_read(if self.narrow.is_some() { 4 } else { 3 });

        let Some((_, unit)) = self.dest.lmf_unchecked(d) else {
            return Ok(None);
        };
        let fallback = || unit.default.map(|i| self.action(i)).transpose();
        if !unit.indicator {
            return fallback();
        }
        let row = unit
            .row
            .ok_or_else(|| Error::Corruption("indicator set without a row".into()))?;
        let Some((_, su)) = self.src.lmf_unchecked(s) else {
            return fallback();
        };
        match self.read_cell(row, su.column)? {
            Cell::Invalid => fallback(),
            Cell::Valid(i) => self.action(i).map(Some),
        }
    }

    /// The cell a rule `(d, q)` pins, if `q` is black in the colored forest
    /// of `d`. Under isolation the wildcard is never a node.
    pub(crate) fn black_cell(&self, d: &Prefix, q: &Prefix) -> Option<Cell> {
        if q.is_wildcard() {
            if self.opts.isolation {
                return None;
            }
            let a = self.rules.default_of(d)?;
            return Some(Cell::Valid(self.mapping.index_of(a).expect("default action is interned")));
        }
        let a = self.rules.get(d, q)?;
        Some(Cell::Valid(self.mapping.index_of(a).expect("rule action is interned")))
    }

    /// Saturated values of `d`'s row: `(column, cell, black)` for every
    /// source entry in preorder.
    pub(crate) fn saturated_row(&self, d: &Prefix) -> Vec<(u32, Cell, bool)> {
        let mut out = Vec::with_capacity(self.src.len());
        let mut stack: Vec<(Prefix, Cell)> = Vec::new();
        for (q, unit) in self.src.iter() {
            while stack.last().is_some_and(|(top, _)| !top.covers(&q)) {
                stack.pop();
            }
            let inherited = stack.last().map_or(Cell::Invalid, |x| x.1);
            let black = self.black_cell(d, &q);
            let v = black.unwrap_or(inherited);
            out.push((unit.column, v, black.is_some()));
            stack.push((q, v));
        }
        out
    }

    pub(crate) fn row_bearing_dests(&self) -> Vec<(Prefix, u32)> {
        self.dest
            .iter()
            .filter_map(|(p, u)| u.row.map(|r| (p, r)))
            .collect()
    }

    /// Fills every conflicted cell from the longest covering rule of its
    /// row. Only cells whose value changes are written and counted, so a
    /// second pass writes nothing.
    pub fn saturate(&mut self, ledger: &mut AccessLedger) -> usize {
        self.saturation_pass(false, ledger)
    }

    /// Rewrites every cell without a rule of its own, whether or not its
    /// value changes: the cost of re-running saturation from scratch.
    pub fn saturate_all(&mut self, ledger: &mut AccessLedger) -> usize {
        self.saturation_pass(true, ledger)
    }

    fn saturation_pass(&mut self, force: bool, ledger: &mut AccessLedger) -> usize {
        let mut writes = 0;
        for (d, r) in self.row_bearing_dests() {
            for (c, v, black) in self.saturated_row(&d) {
                if black {
                    continue;
                }
                if force || self.td.get(r, c) != v {
                    self.write_cell(r, c, v, false, ledger);
                    writes += 1;
                }
            }
        }
        self.saturated = true;
        writes
    }

    /// Writes one cell through to every storage layer and charges it.
    pub(crate) fn write_cell(&mut self, r: u32, c: u32, cell: Cell, bulk: bool, ledger: &mut AccessLedger) {
        self.td.set(r, c, cell);
        if let Some(n) = self.narrow.as_mut() {
            n.set(r, c, cell, ledger).expect("narrow store tracks every assigned cell");
        }
        if bulk {
            ledger.td_bulk_write(1);
        } else {
            ledger.td_cell_write(1);
        }
    }

    pub(crate) fn alloc_row(&mut self, ledger: &mut AccessLedger) -> u32 {
        let r = self.td.alloc_row();
        if let Some(n) = self.narrow.as_mut() {
            let chunks = self.td.col_span().div_ceil(n.narrow_width());
            n.add_row(r, chunks, ledger);
        }
        r
    }

    pub(crate) fn alloc_col(&mut self, ledger: &mut AccessLedger) -> u32 {
        let c = self.td.alloc_col();
        if let Some(n) = self.narrow.as_mut() {
            n.cover_col(c, ledger);
        }
        c
    }

    pub(crate) fn free_row(&mut self, r: u32) {
        self.td.free_row(r);
        if let Some(n) = self.narrow.as_mut() {
            n.remove_row(r);
        }
    }

    pub(crate) fn free_col(&mut self, c: u32) {
        self.td.free_col(c);
    }

    /// Overwrites one stored cell without touching anything else; for
    /// exercising the verifier.
    pub fn inject_cell_fault(&mut self, d: &Prefix, s: &Prefix, cell: Cell) -> Result<()> {
        let r = self.row_of(d).ok_or_else(|| Error::Config(format!("{d} has no row")))?;
        let c = self.col_of(s).ok_or_else(|| Error::Config(format!("{s} is not a source entry")))?;
        self.td.set(r, c, cell);
        if let Some(n) = self.narrow.as_mut() {
            n.set(r, c, cell, &mut AccessLedger::new())?;
        }
        Ok(())
    }

    /// Bits per TD-cell: enough for every live mapping index.
    pub fn cell_bits(&self) -> u64 {
        index_bits(self.mapping.len()).max(1)
    }

    pub fn entry_width(&self) -> u32 {
        self.opts
            .entry_width
            .unwrap_or(self.width_d().max(self.width_s()) as u32)
    }

    pub fn sizes(&self) -> Sizes {
        let cell_bits = self.cell_bits();
        let rows = self.td.row_count();
        let cols = self.td.col_count();
        let td_bits = match &self.narrow {
            Some(n) => n.bits(cell_bits),
            None => rows as u64 * cols as u64 * cell_bits,
        };
        let dest_unit = 1 + index_bits(self.td.row_span()) + cell_bits;
        let src_unit = index_bits(self.td.col_span());
        let unit_bits = self.dest.len() as u64 * dest_unit + self.src.len() as u64 * src_unit;
        Sizes {
            dest_entries: self.dest.len(),
            src_entries: self.src.len(),
            rows,
            cols,
            tcam_bits: self.tcam_entries() as u64 * self.entry_width() as u64,
            td_bits,
            unit_bits,
            sram_bits: td_bits + unit_bits,
        }
    }

    pub fn tcam_bits(&self) -> u64 {
        self.sizes().tcam_bits
    }

    pub fn sram_bits(&self) -> u64 {
        self.sizes().sram_bits
    }

    /// Deterministic text form: destination units, source units, the
    /// TD-table over assigned ids (`-` for invalid), and the mapping table.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let opt = |o: Option<u32>| o.map_or("-".to_string(), |v| v.to_string());
        let _ = writeln!(out, "[dest] {}", self.dest.len());
        for (p, u) in self.dest.iter() {
            let _ = writeln!(
                out,
                "{p} indicator={} row={} default={}",
                u.indicator as u8,
                opt(u.row),
                opt(u.default)
            );
        }
        let _ = writeln!(out, "[src] {}", self.src.len());
        for (p, u) in self.src.iter() {
            let _ = writeln!(out, "{p} col={}", u.column);
        }
        let cols: Vec<u32> = self.td.cols().collect();
        let _ = writeln!(out, "[td] {}x{}", self.td.row_count(), cols.len());
        if !cols.is_empty() && self.td.row_count() > 0 {
            let header: Vec<String> = cols.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "cols {}", header.join(" "));
        }
        for r in self.td.rows() {
            let cells: Vec<String> = cols
                .iter()
                .map(|&c| self.read_cell(r, c).map_or("?".into(), |x| x.to_string()))
                .collect();
            let _ = writeln!(out, "row {r}: {}", cells.join(" "));
        }
        if let Some(n) = &self.narrow {
            let _ = writeln!(out, "[narrow] width={} rows={}", n.narrow_width(), n.narrow_rows());
            for (id, cells) in n.narrow_table() {
                let cells: Vec<String> = cells.iter().map(Cell::to_string).collect();
                let _ = writeln!(out, "narrow {id}: {}", cells.join(" "));
            }
            for r in self.td.rows() {
                let ids: Vec<String> = (0..n.chunks_per_row(r))
                    .map(|k| opt(n.catalog_entry(r, k)))
                    .collect();
                let _ = writeln!(out, "catalog {r}: {}", ids.join(" "));
            }
        }
        let _ = writeln!(out, "[mapping] {}", self.mapping.len());
        for (i, a) in self.mapping.iter() {
            let _ = writeln!(out, "{i} {a}");
        }
        out
    }

    /// Structural invariants of a table that mirrors its rule set.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Corruption(m));
        for (p, u) in self.dest.iter() {
            if u.indicator != u.row.is_some() {
                return fail(format!("{p}: indicator disagrees with row"));
            }
            if let Some(r) = u.row {
                if !self.td.row_assigned(r) {
                    return fail(format!("{p}: row {r} unassigned"));
                }
            }
            if !self.dest_layout.contains(&p) {
                return fail(format!("{p}: missing from destination layout"));
            }
        }
        for (p, u) in self.src.iter() {
            if !self.td.col_assigned(u.column) {
                return fail(format!("{p}: column {} unassigned", u.column));
            }
            if !self.src_layout.contains(&p) {
                return fail(format!("{p}: missing from source layout"));
            }
        }
        if self.dest_layout.len() != self.dest.len() || self.src_layout.len() != self.src.len() {
            return fail("layout and table sizes differ".into());
        }
        if let Some(n) = &self.narrow {
            n.check()?;
            if !n.matches(&self.td) {
                return fail("narrow store disagrees with the TD-table".into());
            }
        }
        if self.frozen {
            return Ok(());
        }
        if self.opts.isolation && self.src.contains(&Prefix::wildcard(self.width_s())) {
            return fail("wildcard stored as a source entry under isolation".into());
        }
        if self.td.row_count() != self.row_bearing_dests().len() || self.td.col_count() != self.src.len() {
            return fail("assigned ids not one-to-one with prefixes".into());
        }
        for (d, a) in self.rules.dests() {
            let Some(u) = self.dest.get(&d) else {
                return fail(format!("{d}: destination missing"));
            };
            if u.default.and_then(|i| self.mapping.get(i)) != a {
                return fail(format!("{d}: default disagrees with the rule set"));
            }
            let has_rules = self.rules.rules_of(&d).next().is_some();
            if has_rules && u.row.is_none() {
                return fail(format!("{d}: rules without a row"));
            }
            if self.opts.non_homogeneous && !has_rules && u.row.is_some() {
                return fail(format!("{d}: destination-only prefix holds a row"));
            }
        }
        if self.dest.len() != self.rules.dests().count() {
            return fail("stale destination entries".into());
        }
        let mut srcs: Vec<Prefix> = self.rules.src_prefixes().into_iter().collect();
        if !self.opts.isolation && self.td.row_count() > 0 {
            srcs.insert(0, Prefix::wildcard(self.width_s()));
        }
        if self.src.prefixes().collect::<Vec<_>>() != srcs {
            return fail("source entries disagree with the rule set".into());
        }
        Ok(())
    }

    /// Cells whose stored value differs from the saturated value.
    pub fn unsaturated_cells(&self) -> usize {
        self.row_bearing_dests()
            .iter()
            .map(|(d, r)| {
                self.saturated_row(d)
                    .into_iter()
                    .filter(|&(c, v, _)| self.td.get(*r, c) != v)
                    .count()
            })
            .sum()
    }
}
