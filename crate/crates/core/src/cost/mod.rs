//! Memory-access accounting: counters charged by lookups and updates, the
//! length-clustered TCAM slot layout, and the lookup latency model.

mod latency;
mod layout;
mod ledger;

pub use latency::{
    latency_estimate, lookup_cycles, mem_ops_per_sec, reference_budget, sram_write_budget_check, BudgetCheck,
    CycleCosts, LatencyEstimate, LatencyOptions,
};
pub use layout::{LayoutCost, TcamLayout, DEFAULT_PREALLOC};
pub use ledger::{AccessLedger, Counters, Snapshot, SramWrites};
