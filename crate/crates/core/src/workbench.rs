//! Command implementations behind the `fist` binary. Each command takes
//! file contents, not paths, and returns its output plus a pass flag.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compress::{compress, Stages};
use crate::cost::{latency_estimate, AccessLedger, Counters, CycleCosts};
use crate::error::{Error, Result};
use crate::fist::{BuildOptions, FistTable};
use crate::oracle::{acl_cost_model, oracle_lookup, Action, AclTable, RuleSet};
use crate::prefix::Address;
use crate::report::{Report, ReportFormat};
use crate::update::{parse_trace, replay, Strategy};
use crate::workload::{gen_load_balance, parse_flows, MacroFlow};

/// Sweeps cover every address pair when the two widths sum to at most this.
pub const EXHAUSTIVE_BITS: u32 = 20;
pub const DEFAULT_SAMPLES: usize = 100_000;
const MAX_WITNESSES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub width_d: u8,
    pub width_s: u8,
    pub opts: BuildOptions,
    /// Also fold defaults into the concatenated-key baseline, and route
    /// lookups through it.
    pub acl_compat: bool,
    pub costs: CycleCosts<f64>,
    pub seed: u64,
    /// Address pairs checked when a sweep cannot be exhaustive.
    pub samples: usize,
    pub format: ReportFormat,
    /// Include wall time in replay reports (makes output nondeterministic).
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            width_d: 32,
            width_s: 32,
            opts: BuildOptions::default(),
            acl_compat: false,
            costs: CycleCosts::default(),
            seed: 0,
            samples: DEFAULT_SAMPLES,
            format: ReportFormat::Text,
            timing: false,
        }
    }
}

impl RunConfig {
    pub fn with_width(width: u8) -> Self {
        RunConfig {
            width_d: width,
            width_s: width,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for w in [self.width_d, self.width_s] {
            if !(1..=128).contains(&w) {
                return Err(Error::InvalidWidth(w as u32));
            }
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if !(self.costs.tcam_cycle_ns > 0.0 && self.costs.sram_cycle_ns > 0.0) {
            return Err(Error::Config("cycle times must be positive".into()));
        }
        self.opts.validate()
    }
}

/// Output of one command.
#[derive(Clone, Debug)]
pub struct Outcome {
    /// Free-form text printed ahead of the report (dumps, series, files).
    pub body: String,
    pub report: Report,
    pub passed: bool,
}

impl Outcome {
    fn ok(body: String, report: Report) -> Self {
        Outcome {
            body,
            report,
            passed: true,
        }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        let mut out = self.body.clone();
        if !out.is_empty() && !out.ends_with('\n') {
            out.push('\n');
        }
        out.push_str(&self.report.render(format));
        out
    }

    /// 0 when passed, 1 for a failed check.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Exit status for an error: 1 for consistency failures, 2 for bad input.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Corruption(_) => 1,
        _ => 2,
    }
}

fn random_address(rng: &mut impl Rng, width: u8) -> Address {
    let bits = rng.gen::<u128>() >> (128 - width as u32);
    Address::new(width, bits).expect("bits fit the width")
}

/// Address pairs to check: all of them when small enough, otherwise
/// `samples` seeded random pairs.
pub fn sweep_pairs(width_d: u8, width_s: u8, samples: usize, seed: u64) -> (bool, Box<dyn Iterator<Item = (Address, Address)>>) {
    if width_d as u32 + width_s as u32 <= EXHAUSTIVE_BITS {
        let it = Address::all(width_d).flat_map(move |d| Address::all(width_s).map(move |s| (d, s)));
        return (true, Box::new(it));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let it = (0..samples).map(move |_| (random_address(&mut rng, width_d), random_address(&mut rng, width_s)));
    (false, Box::new(it))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub dest: Address,
    pub src: Address,
    pub expected: Option<Action>,
    pub found: Option<Action>,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyResult {
    pub exhaustive: bool,
    pub checked: u64,
    pub mismatches: u64,
    /// The first few mismatching pairs.
    pub witnesses: Vec<Mismatch>,
}

impl VerifyResult {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }

    fn record(&mut self, dest: Address, src: Address, expected: Option<&Action>, found: Option<&Action>) {
        self.checked += 1;
        if expected != found {
            self.mismatches += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(Mismatch {
                    dest,
                    src,
                    expected: expected.cloned(),
                    found: found.cloned(),
                });
            }
        }
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new("verify");
        r.push("mode", if self.exhaustive { "exhaustive" } else { "sampled" })
            .push("pairs", self.checked)
            .push("mismatches", self.mismatches)
            .push("result", if self.passed() { "pass" } else { "fail" });
        r
    }

    pub fn witness_lines(&self) -> String {
        let show = |a: &Option<Action>| a.as_ref().map_or("miss".to_string(), |a| a.to_string());
        self.witnesses
            .iter()
            .map(|m| format!("mismatch {} {}: expected {} found {}\n", m.dest, m.src, show(&m.expected), show(&m.found)))
            .collect()
    }
}

/// Compares `t`'s lookups with the oracle over `rs`.
pub fn verify_table(t: &FistTable, rs: &RuleSet, samples: usize, seed: u64) -> Result<VerifyResult> {
    let (exhaustive, pairs) = sweep_pairs(t.width_d(), t.width_s(), samples, seed);
    let mut v = VerifyResult {
        exhaustive,
        ..Default::default()
    };
    let mut ledger = AccessLedger::new();
    for (d, s) in pairs {
        let found = t.lookup(&d, &s, &mut ledger)?;
        v.record(d, s, oracle_lookup(rs, &d, &s).action(), found);
    }
    Ok(v)
}

/// Compares the lookups of two tables.
pub fn verify_equivalent(a: &FistTable, b: &FistTable, samples: usize, seed: u64) -> Result<VerifyResult> {
    let (exhaustive, pairs) = sweep_pairs(a.width_d(), a.width_s(), samples, seed);
    let mut v = VerifyResult {
        exhaustive,
        ..Default::default()
    };
    let mut ledger = AccessLedger::new();
    for (d, s) in pairs {
        let x = a.lookup(&d, &s, &mut ledger)?;
        let y = b.lookup(&d, &s, &mut ledger)?;
        v.record(d, s, x, y);
    }
    Ok(v)
}

fn parse_rules(text: &str, cfg: &RunConfig) -> Result<RuleSet> {
    cfg.validate()?;
    RuleSet::parse(text, cfg.width_d, cfg.width_s)
}

/// Dump plus FIST and concatenated-key sizes side by side.
pub fn cmd_build(rules: &str, cfg: &RunConfig) -> Result<Outcome> {
    let rs = parse_rules(rules, cfg)?;
    let t = FistTable::build(&rs, cfg.opts)?;
    let acl = acl_cost_model(&rs, t.entry_width(), cfg.acl_compat);
    let mut r = Report::new("build");
    r.push("rules", rs.rule_count()).push("defaults", rs.default_count());
    r.extend_scoped("fist", &t.sizes().to_report(""));
    r.push("acl.tcam_entries", acl.tcam_entries)
        .push("acl.tcam_bits", acl.tcam_bits)
        .push("acl.sram_bits", acl.sram_bits);
    r.extend_scoped("fist.latency", &latency_estimate(cfg.opts.latency_options(), &cfg.costs).to_report());
    Ok(Outcome::ok(t.dump(), r))
}

/// Looks up `<dest> <src>` address pairs, one per line.
pub fn cmd_lookup(rules: &str, queries: &str, cfg: &RunConfig) -> Result<Outcome> {
    let rs = parse_rules(rules, cfg)?;
    let t = FistTable::build(&rs, cfg.opts)?;
    let acl = cfg.acl_compat.then(|| AclTable::build(&rs));
    let mut ledger = AccessLedger::new();
    let mut body = String::new();
    for (i, raw) in queries.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: i + 1, message };
        let f: Vec<&str> = content.split_whitespace().collect();
        if f.len() != 2 {
            return Err(err(format!("expected 2 fields, found {}", f.len())));
        }
        let d = Address::parse(f[0], cfg.width_d).map_err(|e| err(e.to_string()))?;
        let s = Address::parse(f[1], cfg.width_s).map_err(|e| err(e.to_string()))?;
        let a = match &acl {
            Some(acl) => acl.lookup(&d, &s, &mut ledger),
            None => t.lookup(&d, &s, &mut ledger)?,
        };
        body.push_str(&format!("{d} {s} {}\n", a.map_or("miss", |a| a.as_str())));
    }
    let mut lat = cfg.opts.latency_options();
    lat.acl_baseline = cfg.acl_compat;
    let mut r = ledger.totals().to_report("lookup");
    r.extend_scoped("latency", &latency_estimate(lat, &cfg.costs).to_report());
    Ok(Outcome::ok(body, r))
}

pub fn cmd_verify(rules: &str, cfg: &RunConfig) -> Result<Outcome> {
    let rs = parse_rules(rules, cfg)?;
    let t = FistTable::build(&rs, cfg.opts)?;
    t.check_invariants()?;
    let v = verify_table(&t, &rs, cfg.samples, cfg.seed)?;
    Ok(Outcome {
        body: v.witness_lines(),
        report: v.to_report(),
        passed: v.passed(),
    })
}

fn window_line(i: usize, c: &Counters) -> String {
    format!(
        "window {i}: tcam_accesses={} tcam_moves={} sram_writes={} td_cells={}",
        c.tcam_accesses(),
        c.tcam_moves,
        c.sram_write_total(),
        c.sram_writes.td_cells
    )
}

/// Replays an update trace on the table built from `rules`. The body holds
/// one line per `window` ops; with `baseline`, the same trace is replayed
/// again charging a full re-saturation per op.
pub fn cmd_replay(rules: &str, trace: &str, cfg: &RunConfig, baseline: bool, window: usize) -> Result<Outcome> {
    if window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    let rs = parse_rules(rules, cfg)?;
    let ops = parse_trace(trace, cfg.width_d, cfg.width_s)?;
    let mut t = FistTable::build(&rs, cfg.opts)?;
    let mut ledger = AccessLedger::new();
    let inc = replay(&mut t, &ops, Strategy::Incremental, &mut ledger)?;
    let inc_windows: Vec<Counters> = inc.per_op.chunks(window).map(|c| c.iter().copied().sum()).collect();
    let base = if baseline {
        let mut b = FistTable::build(&rs, cfg.opts)?;
        let r = replay(&mut b, &ops, Strategy::FullSaturation, &mut AccessLedger::new())?;
        Some(r.per_op.chunks(window).map(|c| c.iter().copied().sum::<Counters>()).collect::<Vec<_>>())
    } else {
        None
    };
    let mut body = String::new();
    for (i, c) in inc_windows.iter().enumerate() {
        body.push_str(&window_line(i, c));
        if let Some(b) = &base {
            body.push_str(&format!(" baseline_sram_writes={} baseline_td_cells={}", b[i].sram_write_total(), b[i].sram_writes.td_cells));
        }
        body.push('\n');
    }
    t.check_invariants()?;
    let v = verify_table(&t, t.rules(), cfg.samples.min(10_000), cfg.seed)?;
    let mut r = inc.totals.to_report("replay");
    r.push("ops", ops.len()).push("windows", inc_windows.len());
    if let Some(b) = &base {
        let total: Counters = b.iter().copied().sum();
        r.push("baseline.sram_writes", total.sram_write_total())
            .push("baseline.td_cells", total.sram_writes.td_cells);
    }
    r.push("final.tcam_entries", t.tcam_entries()).push("final.verified", v.result_word());
    if cfg.timing {
        r.push("elapsed_us", inc.elapsed.as_micros());
    }
    Ok(Outcome {
        body,
        report: r,
        passed: v.passed(),
    })
}

impl VerifyResult {
    fn result_word(&self) -> &'static str {
        if self.passed() {
            "pass"
        } else {
            "fail"
        }
    }
}

/// Runs the compression pipeline and refuses to report a result that is
/// not lookup-equivalent to its input.
pub fn cmd_compress(rules: &str, cfg: &RunConfig, stages: Stages) -> Result<Outcome> {
    let rs = parse_rules(rules, cfg)?;
    let t = FistTable::build(&rs, BuildOptions { dedup: None, ..cfg.opts })?;
    let (c, report) = compress(&t, stages)?;
    c.check_invariants()?;
    let v = verify_equivalent(&t, &c, cfg.samples, cfg.seed)?;
    if !v.passed() {
        let w = &v.witnesses[0];
        return Err(Error::Corruption(format!(
            "compressed table differs from its input at ({}, {})",
            w.dest, w.src
        )));
    }
    let mut r = report.to_report();
    r.push("verified_pairs", v.checked);
    Ok(Outcome::ok(c.dump(), r))
}

/// Greedy balancing of a flow file over exits `exit0..` with the given
/// capacities. The body is the resulting rules file.
pub fn cmd_balance(flows: &str, caps: &[f64], cfg: &RunConfig, sort_desc: bool) -> Result<Outcome> {
    cfg.validate()?;
    let flows: Vec<MacroFlow<f64>> = parse_flows(flows, cfg.width_d, cfg.width_s)?;
    let exits: Vec<Action> = (0..caps.len()).map(|k| Action::new(format!("exit{k}"))).collect();
    let (a, rs) = gen_load_balance(&flows, caps, &exits, sort_desc)?;
    let mut r = Report::new("balance");
    r.push("flows", flows.len());
    for (k, (&load, &cap)) in a.loads.iter().zip(caps).enumerate() {
        r.push(format!("exit{k}.load"), load)
            .push(format!("exit{k}.utilization"), format!("{:.4}", load / cap));
    }
    r.push("bottleneck", format!("exit{}", a.bottleneck(caps)))
        .push("diverted_rules", rs.rule_count());
    Ok(Outcome::ok(rs.to_text(), r))
}
