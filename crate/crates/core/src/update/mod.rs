//! Incremental rule updates that rewrite exactly the domain of the changed
//! rule, charging every TCAM and SRAM touch to the ledger.
//!
//! Write order keeps concurrent lookups consistent: fresh rows and columns
//! are filled before any TCAM entry points at them, and entries about to be
//! dropped are unlinked before their cells change. A lookup running between
//! any two cell writes therefore sees either the old or the new rule.

mod forest;
mod trace;

pub use forest::{ColoredForest, ForestNode};
pub use trace::{parse_trace, replay, trace_to_text, ReplayResult, Strategy, UpdateOp};

use crate::cost::{AccessLedger, LayoutCost};
use crate::error::{Error, Result};
use crate::fist::{Cell, DestUnit, FistTable, SrcUnit};
use crate::oracle::Action;
use crate::prefix::Prefix;

/// Called after every TD-cell write of an update.
pub trait WriteObserver {
    fn after_cell_write(&mut self, table: &FistTable);
}

impl<F: FnMut(&FistTable)> WriteObserver for F {
    fn after_cell_write(&mut self, table: &FistTable) {
        self(table)
    }
}

/// Observer that does nothing.
pub struct NoObserver;

impl WriteObserver for NoObserver {
    fn after_cell_write(&mut self, _: &FistTable) {}
}

fn charge_layout(cost: LayoutCost, ledger: &mut AccessLedger) {
    ledger.tcam_write(cost.writes - cost.moves);
    ledger.tcam_move(cost.moves);
}

impl FistTable {
    fn check_mutable(&self, dest: &Prefix, src: &Prefix) -> Result<()> {
        if self.frozen {
            return Err(Error::Frozen);
        }
        for (p, w) in [(dest, self.width_d()), (src, self.width_s())] {
            if p.width() != w {
                return Err(Error::WidthMismatch {
                    expected: w,
                    found: p.width(),
                });
            }
        }
        Ok(())
    }

    fn acquire(&mut self, a: &Action, ledger: &mut AccessLedger) -> u32 {
        let (i, fresh) = self.mapping.acquire(a);
        if fresh {
            ledger.mapping_write(1);
        }
        i
    }

    fn release(&mut self, i: u32, ledger: &mut AccessLedger) {
        if self.mapping.release(i) {
            ledger.mapping_write(1);
        }
    }

    fn write_cells(
        &mut self,
        row: u32,
        cols: &[u32],
        cell: Cell,
        ledger: &mut AccessLedger,
        obs: &mut dyn WriteObserver,
    ) {
        for &c in cols {
            self.write_cell(row, c, cell, false, ledger);
            obs.after_cell_write(self);
        }
    }

    /// Under no isolation the wildcard is a source entry whenever any row
    /// exists.
    fn ensure_wildcard_col(&mut self, ledger: &mut AccessLedger) -> Result<()> {
        let wild = Prefix::wildcard(self.width_s());
        if self.opts.isolation || self.src.contains(&wild) {
            return Ok(());
        }
        self.attach_col(&wild, ledger)
    }

    fn drop_wildcard_col_if_idle(&mut self, ledger: &mut AccessLedger) {
        let wild = Prefix::wildcard(self.width_s());
        if self.opts.isolation || self.td.row_count() > 0 {
            return;
        }
        if let Some(c) = self.col_of(&wild) {
            self.src.remove(&wild).expect("width checked");
            charge_layout(self.src_layout.remove(&wild), ledger);
            self.free_col(c);
        }
    }

    /// Assigns a row to `dest` holding its current saturated values. The
    /// destination unit is left untouched.
    fn attach_row(&mut self, dest: &Prefix, ledger: &mut AccessLedger) -> Result<u32> {
        self.ensure_wildcard_col(ledger)?;
        let r = self.alloc_row(ledger);
        for (c, v, _) in self.saturated_row(dest) {
            self.write_cell(r, c, v, true, ledger);
        }
        Ok(r)
    }

    /// Adds `src` as a source entry whose column copies its parent's, so no
    /// lookup changes when the entry goes live.
    fn attach_col(&mut self, src: &Prefix, ledger: &mut AccessLedger) -> Result<()> {
        let parent = self.src.parent_of(src)?.map(|(_, u)| u.column);
        let c = self.alloc_col(ledger);
        let rows: Vec<u32> = self.td.rows().collect();
        for r in rows {
            let v = parent.map_or(Cell::Invalid, |pc| self.td.get(r, pc));
            self.write_cell(r, c, v, true, ledger);
        }
        self.src.insert(*src, SrcUnit { column: c })?;
        ledger.unit_write(1);
        charge_layout(self.src_layout.insert(*src)?, ledger);
        Ok(())
    }

    fn link_dest(&mut self, dest: &Prefix, unit: DestUnit, ledger: &mut AccessLedger) -> Result<()> {
        self.dest.insert(*dest, unit)?;
        ledger.unit_write(1);
        charge_layout(self.dest_layout.insert(*dest)?, ledger);
        Ok(())
    }

    fn unlink_dest(&mut self, dest: &Prefix, ledger: &mut AccessLedger) -> Option<DestUnit> {
        let unit = self.dest.remove(dest).ok().flatten()?;
        charge_layout(self.dest_layout.remove(dest), ledger);
        Some(unit)
    }

    pub fn insert_rule(&mut self, dest: Prefix, src: Prefix, action: impl Into<Action>, ledger: &mut AccessLedger) -> Result<usize> {
        self.insert_observed(dest, src, action.into(), ledger, &mut NoObserver)
    }

    pub fn delete_rule(&mut self, dest: Prefix, src: Prefix, ledger: &mut AccessLedger) -> Result<usize> {
        self.delete_observed(dest, src, ledger, &mut NoObserver)
    }

    pub fn update_rule(&mut self, dest: Prefix, src: Prefix, action: impl Into<Action>, ledger: &mut AccessLedger) -> Result<usize> {
        self.update_observed(dest, src, action.into(), ledger, &mut NoObserver)
    }

    /// Sets (`Some`) or removes (`None`) the default next hop of `dest`.
    pub fn set_default_action(&mut self, dest: Prefix, action: Option<Action>, ledger: &mut AccessLedger) -> Result<usize> {
        let wild = Prefix::wildcard(self.width_s());
        self.check_mutable(&dest, &wild)?;
        self.default_op(dest, action, ledger, &mut NoObserver)
    }

    /// Adds a rule. Returns the TD-cells written for its domain; row and
    /// column initialization is charged separately as bulk writes.
    pub fn insert_observed(
        &mut self,
        dest: Prefix,
        src: Prefix,
        action: Action,
        ledger: &mut AccessLedger,
        obs: &mut dyn WriteObserver,
    ) -> Result<usize> {
        self.check_mutable(&dest, &src)?;
        if self.rules.get(&dest, &src).is_some() {
            return Err(Error::DuplicateRule { dest, src });
        }
        if src.is_wildcard() {
            return self.default_op(dest, Some(action), ledger, obs);
        }
        let idx = self.acquire(&action, ledger);
        let known = self.dest.contains(&dest);
        let row = match self.row_of(&dest) {
            Some(r) => r,
            None => {
                let r = self.attach_row(&dest, ledger)?;
                if known {
                    let u = self.dest.get_mut(&dest).unwrap();
                    u.indicator = true;
                    u.row = Some(r);
                    ledger.unit_write(1);
                }
                r
            }
        };
        if !self.src.contains(&src) {
            self.attach_col(&src, ledger)?;
        }
        *self.src_refs.entry(src).or_default() += 1;
        let dom = self.domain_unchecked(&dest, &src);
        let cols: Vec<u32> = dom.iter().map(|q| self.col_of(q).unwrap()).collect();
        self.rules.insert(dest, src, action)?;
        self.write_cells(row, &cols, Cell::Valid(idx), ledger, obs);
        if !known {
            let unit = DestUnit {
                indicator: true,
                row: Some(row),
                default: None,
            };
            self.link_dest(&dest, unit, ledger)?;
        }
        Ok(cols.len())
    }

    /// Removes a rule; its domain takes the value of the nearest black
    /// ancestor (invalid when there is none).
    pub fn delete_observed(
        &mut self,
        dest: Prefix,
        src: Prefix,
        ledger: &mut AccessLedger,
        obs: &mut dyn WriteObserver,
    ) -> Result<usize> {
        self.check_mutable(&dest, &src)?;
        if src.is_wildcard() {
            if self.rules.default_of(&dest).is_none() {
                return Err(Error::MissingRule { dest, src });
            }
            return self.default_op(dest, None, ledger, obs);
        }
        let Some(action) = self.rules.get(&dest, &src).cloned() else {
            return Err(Error::MissingRule { dest, src });
        };
        let row = self.row_of(&dest).expect("a destination with rules holds a row");
        let dom = self.domain_unchecked(&dest, &src);
        let value = self.inherited_cell(&dest, &src);
        let cols: Vec<u32> = dom.iter().map(|q| self.col_of(q).unwrap()).collect();

        self.rules.remove(&dest, &src)?;
        let idx = self.mapping.index_of(&action).unwrap();
        self.release(idx, ledger);
        let refs = self.src_refs.get_mut(&src).unwrap();
        *refs -= 1;
        let drop_src = *refs == 0;
        let has_rules = self.rules.rules_of(&dest).next().is_some();
        let drop_dest = !has_rules && self.rules.default_of(&dest).is_none();
        let release_row = !has_rules && (drop_dest || self.opts.non_homogeneous);

        if drop_dest {
            self.unlink_dest(&dest, ledger);
        }
        let src_col = self.col_of(&src).unwrap();
        if drop_src {
            self.src.remove(&src)?;
            charge_layout(self.src_layout.remove(&src), ledger);
            self.src_refs.remove(&src);
        }
        self.write_cells(row, &cols, value, ledger, obs);
        if release_row {
            if !drop_dest {
                let u = self.dest.get_mut(&dest).unwrap();
                u.indicator = false;
                u.row = None;
                ledger.unit_write(1);
            }
            self.free_row(row);
        }
        if drop_src {
            self.free_col(src_col);
        }
        self.drop_wildcard_col_if_idle(ledger);
        Ok(cols.len())
    }

    /// Changes a rule's action, or inserts it when absent. An existing rule
    /// stays black, so only its domain is rewritten, once.
    pub fn update_observed(
        &mut self,
        dest: Prefix,
        src: Prefix,
        action: Action,
        ledger: &mut AccessLedger,
        obs: &mut dyn WriteObserver,
    ) -> Result<usize> {
        self.check_mutable(&dest, &src)?;
        if src.is_wildcard() {
            return self.default_op(dest, Some(action), ledger, obs);
        }
        let Some(old) = self.rules.get(&dest, &src).cloned() else {
            return self.insert_observed(dest, src, action, ledger, obs);
        };
        let row = self.row_of(&dest).expect("a destination with rules holds a row");
        let idx = self.acquire(&action, ledger);
        let dom = self.domain_unchecked(&dest, &src);
        let cols: Vec<u32> = dom.iter().map(|q| self.col_of(q).unwrap()).collect();
        self.rules.upsert(dest, src, action)?;
        self.write_cells(row, &cols, Cell::Valid(idx), ledger, obs);
        let old_idx = self.mapping.index_of(&old).unwrap();
        self.release(old_idx, ledger);
        Ok(cols.len())
    }

    /// Default next-hop change. The destination unit always carries the
    /// default; without isolation the wildcard column carries it too, and
    /// its domain in the destination's row is rewritten.
    fn default_op(
        &mut self,
        dest: Prefix,
        action: Option<Action>,
        ledger: &mut AccessLedger,
        obs: &mut dyn WriteObserver,
    ) -> Result<usize> {
        let old = self.rules.default_of(&dest).cloned();
        if old.is_none() && action.is_none() {
            return Err(Error::MissingRule {
                dest,
                src: Prefix::wildcard(self.width_s()),
            });
        }
        let wild = Prefix::wildcard(self.width_s());
        let idx = action.as_ref().map(|a| self.acquire(a, ledger));

        if !self.dest.contains(&dest) {
            let action = action.expect("checked above");
            self.rules.set_default(dest, action)?;
            let row = if self.opts.non_homogeneous {
                None
            } else {
                Some(self.attach_row(&dest, ledger)?)
            };
            let unit = DestUnit {
                indicator: row.is_some(),
                row,
                default: idx,
            };
            self.link_dest(&dest, unit, ledger)?;
            return Ok(0);
        }

        let has_rules = self.rules.rules_of(&dest).next().is_some();
        let drop_dest = action.is_none() && !has_rules;
        match &action {
            Some(a) => {
                self.rules.set_default(dest, a.clone())?;
            }
            None => {
                self.rules.remove(&dest, &wild)?;
            }
        }
        let row = self.row_of(&dest);
        if drop_dest {
            self.unlink_dest(&dest, ledger);
        }
        let mut writes = 0;
        if let (false, false, Some(r), Some(_)) = (drop_dest, self.opts.isolation, row, self.col_of(&wild)) {
            let dom = self.domain_unchecked(&dest, &wild);
            let cols: Vec<u32> = dom.iter().map(|q| self.col_of(q).unwrap()).collect();
            self.write_cells(r, &cols, Cell::from(idx), ledger, obs);
            writes = cols.len();
        }
        if !drop_dest {
            self.dest.get_mut(&dest).unwrap().default = idx;
            ledger.unit_write(1);
        } else if let Some(r) = row {
            self.free_row(r);
        }
        if let Some(old) = old {
            let i = self.mapping.index_of(&old).unwrap();
            self.release(i, ledger);
        }
        self.drop_wildcard_col_if_idle(ledger);
        Ok(writes)
    }
}
