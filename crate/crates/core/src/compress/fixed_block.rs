use std::collections::{BTreeSet, HashMap};

use super::fingerprint::{FingerprintAlgo, VectorFingerprint};
use crate::cost::AccessLedger;
use crate::error::{Error, Result};
use crate::fist::{Cell, TdTable};
use crate::oracle::index_bits;

pub const DEFAULT_NARROW_WIDTH: usize = 8;

const FILTER_HASHES: u32 = 4;
const FILTER_BITS_PER_ITEM: usize = 16;

/// Membership filter over narrow-row fingerprints. No false negatives;
/// entries are never removed, so stale bits only raise the false-positive
/// rate until the next rebuild.
#[derive(Clone, Debug)]
pub struct MembershipFilter {
    bits: Vec<u64>,
    hashes: u32,
    inserted: usize,
}

impl MembershipFilter {
    pub fn with_capacity(items: usize) -> Self {
        let m = (items.max(4) * FILTER_BITS_PER_ITEM).next_power_of_two();
        MembershipFilter {
            bits: vec![0; m / 64],
            hashes: FILTER_HASHES,
            inserted: 0,
        }
    }

    fn positions(&self, fp: &VectorFingerprint) -> impl Iterator<Item = usize> {
        let (h1, h2) = fp.words();
        let m = (self.bits.len() * 64) as u64;
        (0..self.hashes as u64).map(move |i| (h1.wrapping_add(i.wrapping_mul(h2)) % m) as usize)
    }

    pub fn insert(&mut self, fp: &VectorFingerprint) {
        for p in self.positions(fp).collect::<Vec<_>>() {
            self.bits[p / 64] |= 1 << (p % 64);
        }
        self.inserted += 1;
    }

    pub fn may_contain(&self, fp: &VectorFingerprint) -> bool {
        self.positions(fp).all(|p| self.bits[p / 64] & (1 << (p % 64)) != 0)
    }

    pub fn bit_len(&self) -> usize {
        self.bits.len() * 64
    }

    fn saturated(&self) -> bool {
        self.inserted * FILTER_BITS_PER_ITEM > self.bit_len()
    }
}

#[derive(Clone, Debug)]
struct NarrowRow {
    cells: Vec<Cell>,
    fp: VectorFingerprint,
    refs: u32,
}

/// Counters of the find-or-insert pipeline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DedupStats {
    pub chunks: u64,
    pub filter_negatives: u64,
    pub filter_false_positives: u64,
    pub duplicates: u64,
}

/// Fixed-width chunks of every TD-row, stored once each.
///
/// `catalog[row][chunk]` names the narrow row holding cells
/// `chunk * width .. (chunk + 1) * width` of `row`. Storage rows are padded
/// with invalid cells up to a multiple of the chunk width.
#[derive(Clone, Debug)]
pub struct NarrowStore {
    width: usize,
    algo: FingerprintAlgo,
    narrow: Vec<Option<NarrowRow>>,
    free: BTreeSet<u32>,
    catalog: Vec<Option<Vec<u32>>>,
    index: HashMap<VectorFingerprint, u32>,
    filter: MembershipFilter,
    stats: DedupStats,
}

impl NarrowStore {
    pub fn new(width: usize, algo: FingerprintAlgo) -> Result<Self> {
        if width == 0 {
            return Err(Error::Config("narrow width must be at least 1".into()));
        }
        Ok(NarrowStore {
            width,
            algo,
            narrow: Vec::new(),
            free: BTreeSet::new(),
            catalog: Vec::new(),
            index: HashMap::new(),
            filter: MembershipFilter::with_capacity(64),
            stats: DedupStats::default(),
        })
    }

    /// Chunks every assigned row of `td`.
    pub fn build(td: &TdTable, width: usize, algo: FingerprintAlgo) -> Result<Self> {
        let mut store = NarrowStore::new(width, algo)?;
        let chunks = td.col_span().div_ceil(width);
        store.filter = MembershipFilter::with_capacity(td.row_count() * chunks);
        let mut scratch = AccessLedger::new();
        for r in td.rows() {
            store.ensure_row(r);
            store.catalog[r as usize] = Some(Vec::with_capacity(chunks));
            let raw = td.raw_row(r);
            for k in 0..chunks {
                let chunk = store.pad(raw, k);
                let id = store.find_or_insert(chunk, &mut scratch);
                store.catalog[r as usize].as_mut().unwrap().push(id);
            }
        }
        Ok(store)
    }

    fn pad(&self, raw: &[Cell], k: usize) -> Vec<Cell> {
        let lo = k * self.width;
        (lo..lo + self.width)
            .map(|c| raw.get(c).copied().unwrap_or(Cell::Invalid))
            .collect()
    }

    fn ensure_row(&mut self, r: u32) {
        if self.catalog.len() <= r as usize {
            self.catalog.resize_with(r as usize + 1, || None);
        }
    }

    pub fn narrow_width(&self) -> usize {
        self.width
    }

    pub fn algo(&self) -> FingerprintAlgo {
        self.algo
    }

    pub fn stats(&self) -> DedupStats {
        self.stats
    }

    /// Distinct narrow rows stored.
    pub fn narrow_rows(&self) -> usize {
        self.index.len()
    }

    /// Catalog entries across all rows.
    pub fn catalog_entries(&self) -> usize {
        self.catalog.iter().flatten().map(Vec::len).sum()
    }

    pub fn chunks_per_row(&self, r: u32) -> usize {
        self.catalog.get(r as usize).and_then(Option::as_ref).map_or(0, Vec::len)
    }

    pub fn catalog_entry(&self, r: u32, chunk: usize) -> Option<u32> {
        self.catalog.get(r as usize)?.as_ref()?.get(chunk).copied()
    }

    pub fn narrow_row(&self, id: u32) -> Option<&[Cell]> {
        self.narrow.get(id as usize)?.as_ref().map(|n| n.cells.as_slice())
    }

    /// `(id, cells)` of stored narrow rows, by id.
    pub fn narrow_table(&self) -> impl Iterator<Item = (u32, &[Cell])> {
        self.narrow
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_ref().map(|n| (i as u32, n.cells.as_slice())))
    }

    /// Fingerprint, filter probe, index search, and either a pointer to the
    /// existing narrow row or a freshly stored one.
    fn find_or_insert(&mut self, cells: Vec<Cell>, ledger: &mut AccessLedger) -> u32 {
        self.stats.chunks += 1;
        let fp = VectorFingerprint::of(self.algo, &cells);
        if self.filter.may_contain(&fp) {
            if let Some(&id) = self.index.get(&fp) {
                let row = self.narrow[id as usize].as_mut().unwrap();
                // the digest matched; confirm byte for byte before sharing
                if row.cells == cells {
                    row.refs += 1;
                    self.stats.duplicates += 1;
                    return id;
                }
                panic!("fingerprint collision between distinct narrow rows");
            }
            self.stats.filter_false_positives += 1;
        } else {
            self.stats.filter_negatives += 1;
        }
        let id = match self.free.pop_first() {
            Some(id) => id,
            None => {
                self.narrow.push(None);
                (self.narrow.len() - 1) as u32
            }
        };
        ledger.narrow_write(cells.len() as u64);
        if self.filter.saturated() {
            self.rebuild_filter();
        }
        self.filter.insert(&fp);
        self.index.insert(fp.clone(), id);
        self.narrow[id as usize] = Some(NarrowRow { cells, fp, refs: 1 });
        id
    }

    fn release(&mut self, id: u32) {
        let row = self.narrow[id as usize].as_mut().expect("released narrow row is live");
        row.refs -= 1;
        if row.refs == 0 {
            let row = self.narrow[id as usize].take().unwrap();
            self.index.remove(&row.fp);
            self.free.insert(id);
        }
    }

    fn rebuild_filter(&mut self) {
        let mut f = MembershipFilter::with_capacity(self.index.len() * 2);
        for fp in self.index.keys() {
            f.insert(fp);
        }
        self.filter = f;
    }

    /// Reads a cell through the catalog.
    pub fn lookup(&self, r: u32, c: u32) -> Result<Cell> {
        let k = c as usize / self.width;
        let id = self
            .catalog_entry(r, k)
            .ok_or(Error::Unassigned { row: r, col: c })?;
        let row = self.narrow_row(id).ok_or_else(|| Error::Corruption(format!("catalog names free narrow row {id}")))?;
        Ok(row[c as usize % self.width])
    }

    /// Gives row `r` `chunks` chunks of invalid cells.
    pub fn add_row(&mut self, r: u32, chunks: usize, ledger: &mut AccessLedger) {
        self.ensure_row(r);
        debug_assert!(self.catalog[r as usize].is_none());
        let blank = vec![Cell::Invalid; self.width];
        let mut ids = Vec::with_capacity(chunks);
        for _ in 0..chunks {
            ids.push(self.find_or_insert(blank.clone(), ledger));
            ledger.catalog_write(1);
        }
        self.catalog[r as usize] = Some(ids);
    }

    pub fn remove_row(&mut self, r: u32) {
        for id in self.catalog[r as usize].take().unwrap_or_default() {
            self.release(id);
        }
    }

    /// Widens every row with invalid chunks until column `c` is covered.
    pub fn cover_col(&mut self, c: u32, ledger: &mut AccessLedger) {
        let need = c as usize / self.width + 1;
        let blank = vec![Cell::Invalid; self.width];
        for r in 0..self.catalog.len() {
            while self.catalog[r].as_ref().is_some_and(|row| row.len() < need) {
                let id = self.find_or_insert(blank.clone(), ledger);
                self.catalog[r].as_mut().unwrap().push(id);
                ledger.catalog_write(1);
            }
        }
    }

    /// Copy-on-write cell update: a shared narrow row is never modified in
    /// place.
    pub fn set(&mut self, r: u32, c: u32, cell: Cell, ledger: &mut AccessLedger) -> Result<()> {
        let k = c as usize / self.width;
        let old = self
            .catalog_entry(r, k)
            .ok_or(Error::Unassigned { row: r, col: c })?;
        let mut cells = self.narrow_row(old).unwrap().to_vec();
        let off = c as usize % self.width;
        if cells[off] == cell {
            return Ok(());
        }
        cells[off] = cell;
        let only_user = self.narrow[old as usize].as_ref().unwrap().refs == 1;
        let fp = VectorFingerprint::of(self.algo, &cells);
        if only_user && !self.index.contains_key(&fp) {
            let row = self.narrow[old as usize].as_mut().unwrap();
            let stale = std::mem::replace(&mut row.fp, fp.clone());
            row.cells = cells;
            self.index.remove(&stale);
            self.index.insert(fp.clone(), old);
            if self.filter.saturated() {
                self.rebuild_filter();
            }
            self.filter.insert(&fp);
            ledger.narrow_write(1);
            return Ok(());
        }
        let id = self.find_or_insert(cells, ledger);
        self.release(old);
        self.catalog[r as usize].as_mut().unwrap()[k] = id;
        ledger.catalog_write(1);
        Ok(())
    }

    /// Storage bits: narrow cells plus catalog pointers.
    pub fn bits(&self, cell_bits: u64) -> u64 {
        let narrow = self.narrow_rows() as u64 * self.width as u64 * cell_bits;
        let catalog = self.catalog_entries() as u64 * index_bits(self.narrow_rows());
        narrow + catalog
    }

    /// Cell-by-cell comparison with `td` over assigned rows and columns.
    pub fn matches(&self, td: &TdTable) -> bool {
        td.rows()
            .all(|r| td.cols().all(|c| self.lookup(r, c).ok() == Some(td.get(r, c))))
    }

    /// Internal invariants: every live narrow row distinct and indexed,
    /// reference counts equal to catalog pointers.
    pub fn check(&self) -> Result<()> {
        let mut refs: HashMap<u32, u32> = HashMap::new();
        for row in self.catalog.iter().flatten() {
            for &id in row {
                *refs.entry(id).or_default() += 1;
            }
        }
        let mut seen = BTreeSet::new();
        for (id, row) in self.narrow.iter().enumerate() {
            let Some(row) = row else { continue };
            if refs.get(&(id as u32)).copied().unwrap_or(0) != row.refs {
                return Err(Error::Corruption(format!("narrow row {id} reference count")));
            }
            if !seen.insert(row.cells.clone()) {
                return Err(Error::Corruption(format!("narrow row {id} duplicated")));
            }
            if self.index.get(&row.fp) != Some(&(id as u32)) || !self.filter.may_contain(&row.fp) {
                return Err(Error::Corruption(format!("narrow row {id} not indexed")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[Cell]]) -> TdTable {
        let mut td = TdTable::new();
        let cols = rows.first().map_or(0, |r| r.len());
        for _ in rows {
            td.alloc_row();
        }
        for _ in 0..cols {
            td.alloc_col();
        }
        for (r, row) in rows.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                td.set(r as u32, c as u32, *cell);
            }
        }
        td
    }

    const A: Cell = Cell::Valid(0);
    const B: Cell = Cell::Valid(1);
    const X: Cell = Cell::Invalid;

    #[test]
    fn chunks_are_shared_and_padded() {
        let td = table(&[&[A, A, B], &[A, A, X], &[B, A, B]]);
        let s = NarrowStore::build(&td, 2, FingerprintAlgo::Sha256).unwrap();
        // chunks: [A A] [B X] | [A A] [X X] | [B A] [B X]
        assert_eq!(s.narrow_rows(), 4);
        assert_eq!(s.catalog_entries(), 6);
        assert_eq!(s.catalog_entry(0, 0), s.catalog_entry(1, 0));
        assert_eq!(s.catalog_entry(0, 1), s.catalog_entry(2, 1));
        assert!(s.matches(&td));
        s.check().unwrap();
        assert_eq!(s.stats().duplicates, 2);
    }

    #[test]
    fn full_width_chunks_reduce_to_row_dedup() {
        let td = table(&[&[A, B], &[A, B], &[B, B]]);
        let s = NarrowStore::build(&td, 2, FingerprintAlgo::Sha512).unwrap();
        assert_eq!(s.narrow_rows(), 2);
        let single = table(&[&[A; 5], &[A; 5]]);
        assert_eq!(NarrowStore::build(&single, 5, FingerprintAlgo::Sha256).unwrap().narrow_rows(), 1);
    }

    #[test]
    fn writes_are_copy_on_write() {
        let td = table(&[&[A, A], &[A, A]]);
        let mut s = NarrowStore::build(&td, 2, FingerprintAlgo::Sha256).unwrap();
        let mut l = AccessLedger::new();
        s.set(0, 1, B, &mut l).unwrap();
        assert_eq!(s.lookup(1, 1).unwrap(), A);
        assert_eq!(s.lookup(0, 1).unwrap(), B);
        assert_eq!(s.narrow_rows(), 2);
        s.set(1, 1, B, &mut l).unwrap();
        assert_eq!(s.narrow_rows(), 1, "converged rows share again");
        s.check().unwrap();
        s.cover_col(5, &mut l);
        assert_eq!(s.chunks_per_row(0), 3);
        assert_eq!(s.lookup(0, 5).unwrap(), X);
        s.check().unwrap();
        assert!(s.lookup(7, 0).is_err());
        assert!(NarrowStore::new(0, FingerprintAlgo::Sha256).is_err());
    }

    #[test]
    fn filter_has_no_false_negatives() {
        let mut f = MembershipFilter::with_capacity(10);
        let fps: Vec<_> = (0..200)
            .map(|i| VectorFingerprint::of(FingerprintAlgo::Sha256, &[Cell::Valid(i)]))
            .collect();
        for fp in &fps {
            f.insert(fp);
        }
        assert!(fps.iter().all(|fp| f.may_contain(fp)));
    }
}
