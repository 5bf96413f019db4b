mod comp_tcam;
mod dedup;
mod fingerprint;
mod fixed_block;
mod ortc;

pub use comp_tcam::{comp_tcam, has_unmatched, reachable_entries};
pub use dedup::{dedup_fixed_block, dedup_rows_cols, with_fixed_block};
pub use fingerprint::{canonical_bytes, FingerprintAlgo, VectorFingerprint, VectorInterner};
pub use fixed_block::{DedupStats, MembershipFilter, NarrowStore, DEFAULT_NARROW_WIDTH};
pub use ortc::{ortc, RootPolicy};

use crate::error::Result;
use crate::fist::{FistTable, Sizes};
use crate::report::Report;

/// Which compression stages to run, in pipeline order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stages {
    pub comp_tcam: bool,
    pub dedup_rows_cols: bool,
    /// Narrow width for fixed-block deduplication of the result.
    pub fixed_block: Option<usize>,
}

impl Default for Stages {
    fn default() -> Self {
        Stages {
            comp_tcam: true,
            dedup_rows_cols: true,
            fixed_block: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompressionReport {
    pub before: Sizes,
    pub after: Sizes,
    pub narrow_rows: Option<usize>,
    /// TD-table bits of the result without fixed-block storage.
    pub plain_td_bits: u64,
}

impl CompressionReport {
    /// Plain TD-table bits of the result over the bits actually stored.
    pub fn dedup_ratio(&self) -> f64 {
        if self.after.td_bits == 0 {
            return 1.0;
        }
        self.plain_td_bits as f64 / self.after.td_bits as f64
    }

    pub fn tcam_saving(&self) -> f64 {
        if self.before.tcam_bits == 0 {
            return 0.0;
        }
        1.0 - self.after.tcam_bits as f64 / self.before.tcam_bits as f64
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new("compression");
        let (b, a) = (&self.before, &self.after);
        r.push("tcam_entries_before", b.tcam_entries())
            .push("tcam_entries_after", a.tcam_entries())
            .push("tcam_bits_before", b.tcam_bits)
            .push("tcam_bits_after", a.tcam_bits)
            .push("sram_bits_before", b.sram_bits)
            .push("sram_bits_after", a.sram_bits)
            .push("rows_before", b.rows)
            .push("rows_after", a.rows)
            .push("cols_before", b.cols)
            .push("cols_after", a.cols)
            .push("tcam_saving", format!("{:.4}", self.tcam_saving()));
        match self.narrow_rows {
            Some(n) => r.push("narrow_rows", n),
            None => r.push("narrow_rows", "-"),
        };
        r.push("dedup_ratio", format!("{:.4}", self.dedup_ratio()));
        r
    }
}

/// Runs the selected stages on `t`.
pub fn compress(t: &FistTable, stages: Stages) -> Result<(FistTable, CompressionReport)> {
    let before = t.sizes();
    let mut out = t.clone();
    if stages.comp_tcam {
        out = comp_tcam(&out)?;
    }
    if stages.dedup_rows_cols {
        out = dedup_rows_cols(&out)?;
    }
    if let Some(w) = stages.fixed_block {
        out = with_fixed_block(&out, w)?;
    }
    out.frozen = true;
    let report = CompressionReport {
        before,
        after: out.sizes(),
        plain_td_bits: (out.td().row_count() * out.td().col_count()) as u64 * out.cell_bits(),
        narrow_rows: out.narrow().map(NarrowStore::narrow_rows),
    };
    Ok((out, report))
}
