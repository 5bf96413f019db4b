use std::collections::BTreeMap;

use super::fingerprint::VectorInterner;
use super::NarrowStore;
use crate::error::{Error, Result};
use crate::fist::{Cell, FistTable, TdTable};

/// Shares one row (column) id among prefixes whose stored row (column)
/// vectors are identical. The TD-table shrinks to distinct rows by
/// distinct columns; prefixes and cell values are unchanged. Frozen.
pub fn dedup_rows_cols(t: &FistTable) -> Result<FistTable> {
    if !t.is_saturated() {
        return Err(Error::Unsaturated);
    }
    let td = t.td();
    let algo = t.opts().fingerprint;
    let cols: Vec<u32> = td.cols().collect();
    let rows: Vec<u32> = td.rows().collect();

    let mut row_ids = VectorInterner::new(algo);
    let mut row_map = BTreeMap::new();
    let mut row_rep = Vec::new();
    for &r in &rows {
        let v: Vec<Cell> = cols.iter().map(|&c| td.get(r, c)).collect();
        let (id, fresh) = row_ids.intern(&v);
        if fresh {
            row_rep.push(r);
        }
        row_map.insert(r, id);
    }
    let mut col_ids = VectorInterner::new(algo);
    let mut col_map = BTreeMap::new();
    let mut col_rep = Vec::new();
    for &c in &cols {
        let v: Vec<Cell> = rows.iter().map(|&r| td.get(r, c)).collect();
        let (id, fresh) = col_ids.intern(&v);
        if fresh {
            col_rep.push(c);
        }
        col_map.insert(c, id);
    }

    let mut out = t.clone();
    let mut new_td = TdTable::new();
    for _ in 0..col_rep.len() {
        new_td.alloc_col();
    }
    for (i, &r) in row_rep.iter().enumerate() {
        new_td.alloc_row();
        for (j, &c) in col_rep.iter().enumerate() {
            new_td.set(i as u32, j as u32, td.get(r, c));
        }
    }
    let dests: Vec<_> = out.dest.prefixes().collect();
    for d in dests {
        let u = out.dest.get_mut(&d).unwrap();
        u.row = u.row.map(|r| row_map[&r]);
    }
    let srcs: Vec<_> = out.src.prefixes().collect();
    for s in srcs {
        let u = out.src.get_mut(&s).unwrap();
        u.column = col_map[&u.column];
    }
    out.td = new_td;
    out.narrow = match t.opts().dedup {
        Some(w) => Some(NarrowStore::build(&out.td, w, algo)?),
        None => None,
    };
    out.frozen = true;
    Ok(out)
}

/// Fixed-block deduplication of `t`'s TD-table.
pub fn dedup_fixed_block(t: &FistTable, narrow_width: usize) -> Result<NarrowStore> {
    if !t.is_saturated() {
        return Err(Error::Unsaturated);
    }
    NarrowStore::build(t.td(), narrow_width, t.opts().fingerprint)
}

/// `t` reading its TD-table through a fixed-block store of the given width.
pub fn with_fixed_block(t: &FistTable, narrow_width: usize) -> Result<FistTable> {
    let mut out = t.clone();
    out.narrow = Some(dedup_fixed_block(t, narrow_width)?);
    out.opts.dedup = Some(narrow_width);
    Ok(out)
}
