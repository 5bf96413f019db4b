use num_traits::Float;

use crate::report::Report;

/// Cycle times of the two memories, plus the cycles one memory operation
/// occupies on the update path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleCosts<T> {
    pub tcam_cycle_ns: T,
    pub sram_cycle_ns: T,
    pub cycles_per_mem_op: u32,
}

impl<T: Float> Default for CycleCosts<T> {
    /// Illustrative values only: SRAM must be the faster memory.
    fn default() -> Self {
        CycleCosts {
            tcam_cycle_ns: T::from(4.0).unwrap(),
            sram_cycle_ns: T::from(1.0).unwrap(),
            cycles_per_mem_op: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LatencyOptions {
    pub dedup: bool,
    /// Concatenated-key baseline: one TCAM search and one SRAM read.
    pub acl_baseline: bool,
    /// Both key halves searched one after the other on a single TCAM block.
    pub double_tcam_request: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyEstimate<T> {
    pub tcam_cycles: u32,
    pub sram_cycles: u32,
    pub ns: T,
    /// Pipelined rate: one packet leaves per TCAM occupancy period.
    pub packets_per_sec: T,
}

impl<T: Float + std::fmt::Display> LatencyEstimate<T> {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new("latency");
        r.push("tcam_cycles", self.tcam_cycles)
            .push("sram_cycles", self.sram_cycles)
            .push("ns", self.ns)
            .push("packets_per_sec", self.packets_per_sec);
        r
    }
}

/// Memory cycles along one lookup, matching what the table lookups charge.
pub fn lookup_cycles(opts: LatencyOptions) -> (u32, u32) {
    if opts.acl_baseline {
        return (1, 1);
    }
    let tcam = if opts.double_tcam_request { 2 } else { 1 };
    let sram = if opts.dedup { 4 } else { 3 };
    (tcam, sram)
}

pub fn latency_estimate<T: Float>(opts: LatencyOptions, costs: &CycleCosts<T>) -> LatencyEstimate<T> {
    let (tcam, sram) = lookup_cycles(opts);
    let t = T::from(tcam).unwrap();
    let s = T::from(sram).unwrap();
    let ns = t * costs.tcam_cycle_ns + s * costs.sram_cycle_ns;
    let period = t * costs.tcam_cycle_ns;
    LatencyEstimate {
        tcam_cycles: tcam,
        sram_cycles: sram,
        ns,
        packets_per_sec: T::from(1e9).unwrap() / period,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetCheck<T> {
    /// Every update on a destination rewrites a full row of `M` cells.
    pub worst_case_writes_per_sec: T,
    pub budget_ops_per_sec: T,
    pub within_budget: bool,
    /// Budget share consumed by the worst case.
    pub utilization: T,
}

impl<T: Float + std::fmt::Display> BudgetCheck<T> {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new("sram write budget");
        r.push("worst_case_writes_per_sec", self.worst_case_writes_per_sec)
            .push("budget_ops_per_sec", self.budget_ops_per_sec)
            .push("utilization", self.utilization)
            .push("within_budget", self.within_budget);
        r
    }
}

pub fn sram_write_budget_check<T: Float>(update_rate: T, sources: T, sram_ops_per_sec: T) -> BudgetCheck<T> {
    let worst = update_rate * sources;
    BudgetCheck {
        worst_case_writes_per_sec: worst,
        budget_ops_per_sec: sram_ops_per_sec,
        within_budget: worst <= sram_ops_per_sec,
        utilization: if sram_ops_per_sec > T::zero() {
            worst / sram_ops_per_sec
        } else {
            T::infinity()
        },
    }
}

/// Memory operations per second of a linecard clocked at `clock_hz` spending
/// `cycles_per_op` cycles on each read or write.
pub fn mem_ops_per_sec<T: Float>(clock_hz: T, cycles_per_op: u32) -> T {
    clock_hz / T::from(cycles_per_op).unwrap()
}

/// 500 destination updates per second against 10,000 sources on a 100 MHz
/// linecard needing 20 cycles per memory operation.
pub fn reference_budget() -> BudgetCheck<f64> {
    sram_write_budget_check(500.0, 10_000.0, mem_ops_per_sec(100e6, 20))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_counts() {
        let c = CycleCosts::<f64>::default();
        let e = latency_estimate(LatencyOptions::default(), &c);
        assert_eq!((e.tcam_cycles, e.sram_cycles), (1, 3));
        assert_eq!(e.ns, 7.0);
        let d = latency_estimate(LatencyOptions { dedup: true, ..Default::default() }, &c);
        assert_eq!((d.tcam_cycles, d.sram_cycles), (1, 4));
        let a = latency_estimate(LatencyOptions { acl_baseline: true, ..Default::default() }, &c);
        assert_eq!((a.tcam_cycles, a.sram_cycles), (1, 1));
        assert!(c.sram_cycle_ns < c.tcam_cycle_ns);
        let f = latency_estimate(LatencyOptions::default(), &CycleCosts::<f32>::default());
        assert_eq!(f.packets_per_sec, 2.5e8);
    }

    #[test]
    fn budget() {
        let r = reference_budget();
        assert_eq!(r.worst_case_writes_per_sec, 5_000_000.0);
        assert_eq!(r.budget_ops_per_sec, 5_000_000.0);
        assert_eq!(sram_write_budget_check(0.0, 10_000.0, 1.0).worst_case_writes_per_sec, 0.0);
        assert!(!sram_write_budget_check(501.0f32, 10_000.0, 5e6).within_budget);
    }
}
