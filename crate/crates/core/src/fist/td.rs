use std::collections::BTreeSet;
use std::fmt;

/// Index into the mapping table.
pub type ActionIndex = u32;

/// Fixed-width serialization of an invalid cell.
pub const INVALID_SENTINEL: u32 = u32::MAX;

/// A TD-cell: an action index, or no index at all.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Cell {
    Valid(ActionIndex),
    #[default]
    Invalid,
}

impl Cell {
    pub fn index(self) -> Option<ActionIndex> {
        match self {
            Cell::Valid(i) => Some(i),
            Cell::Invalid => None,
        }
    }

    pub fn is_valid(self) -> bool {
        matches!(self, Cell::Valid(_))
    }

    pub fn to_raw(self) -> u32 {
        match self {
            Cell::Valid(i) => i,
            Cell::Invalid => INVALID_SENTINEL,
        }
    }

    pub fn from_raw(raw: u32) -> Cell {
        if raw == INVALID_SENTINEL {
            Cell::Invalid
        } else {
            Cell::Valid(raw)
        }
    }
}

impl From<Option<ActionIndex>> for Cell {
    fn from(o: Option<ActionIndex>) -> Self {
        o.map_or(Cell::Invalid, Cell::Valid)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Valid(i) => write!(f, "{i}"),
            Cell::Invalid => f.write_str("-"),
        }
    }
}

/// Id pool handing out the lowest free id first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct IdPool {
    used: Vec<bool>,
    free: BTreeSet<u32>,
}

impl IdPool {
    fn alloc(&mut self) -> u32 {
        if let Some(id) = self.free.pop_first() {
            self.used[id as usize] = true;
            id
        } else {
            self.used.push(true);
            (self.used.len() - 1) as u32
        }
    }

    fn release(&mut self, id: u32) {
        debug_assert!(self.used[id as usize], "releasing unassigned id {id}");
        self.used[id as usize] = false;
        self.free.insert(id);
    }

    fn is_used(&self, id: u32) -> bool {
        self.used.get(id as usize).copied().unwrap_or(false)
    }

    fn high_water(&self) -> usize {
        self.used.len()
    }

    fn assigned(&self) -> impl Iterator<Item = u32> + '_ {
        self.used
            .iter()
            .enumerate()
            .filter(|(_, u)| **u)
            .map(|(i, _)| i as u32)
    }

    fn count(&self) -> usize {
        self.used.len() - self.free.len()
    }
}

/// The row-by-column cell array. Ids come from lowest-first pools; storage
/// spans every id ever handed out, and cells outside assigned rows or
/// columns are never read.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TdTable {
    cells: Vec<Vec<Cell>>,
    width: usize,
    rows: IdPool,
    cols: IdPool,
}

impl TdTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assigns a row with every cell invalid.
    pub fn alloc_row(&mut self) -> u32 {
        let r = self.rows.alloc();
        if r as usize == self.cells.len() {
            self.cells.push(vec![Cell::Invalid; self.width]);
        } else {
            self.cells[r as usize].fill(Cell::Invalid);
        }
        r
    }

    /// Assigns a column with every cell invalid.
    pub fn alloc_col(&mut self) -> u32 {
        let c = self.cols.alloc();
        if c as usize == self.width {
            self.width += 1;
            for row in &mut self.cells {
                row.push(Cell::Invalid);
            }
        } else {
            for row in &mut self.cells {
                row[c as usize] = Cell::Invalid;
            }
        }
        c
    }

    pub fn free_row(&mut self, r: u32) {
        self.rows.release(r);
    }

    pub fn free_col(&mut self, c: u32) {
        self.cols.release(c);
    }

    pub fn row_assigned(&self, r: u32) -> bool {
        self.rows.is_used(r)
    }

    pub fn col_assigned(&self, c: u32) -> bool {
        self.cols.is_used(c)
    }

    #[inline]
    pub fn get(&self, r: u32, c: u32) -> Cell {
        self.cells[r as usize][c as usize]
    }

    pub fn try_get(&self, r: u32, c: u32) -> Option<Cell> {
        (self.row_assigned(r) && self.col_assigned(c)).then(|| self.get(r, c))
    }

    #[inline]
    pub fn set(&mut self, r: u32, c: u32, cell: Cell) {
        self.cells[r as usize][c as usize] = cell;
    }

    pub fn rows(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.assigned()
    }

    pub fn cols(&self) -> impl Iterator<Item = u32> + '_ {
        self.cols.assigned()
    }

    pub fn row_count(&self) -> usize {
        self.rows.count()
    }

    pub fn col_count(&self) -> usize {
        self.cols.count()
    }

    /// Column ids ever handed out; storage width of a row.
    pub fn col_span(&self) -> usize {
        self.cols.high_water()
    }

    pub fn row_span(&self) -> usize {
        self.rows.high_water()
    }

    /// Cells of one row restricted to assigned columns, by column id.
    pub fn row_vector(&self, r: u32) -> Vec<Cell> {
        self.cols().map(|c| self.get(r, c)).collect()
    }

    /// Cells of one column restricted to assigned rows, by row id.
    pub fn col_vector(&self, c: u32) -> Vec<Cell> {
        self.rows().map(|r| self.get(r, c)).collect()
    }

    /// The full storage row, unassigned columns included.
    pub fn raw_row(&self, r: u32) -> &[Cell] {
        &self.cells[r as usize]
    }
}
