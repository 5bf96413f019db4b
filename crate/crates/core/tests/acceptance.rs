//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{all_flag_combos, apply_to_rules, cell_diff, min_entries, random_op, random_rules};
use fist::compress::{comp_tcam, compress, dedup_rows_cols, NarrowStore, Stages};
use fist::cost::{latency_estimate, lookup_cycles, AccessLedger, CycleCosts, LatencyOptions};
use fist::fist::{BuildOptions, Cell, FistTable};
use fist::oracle::{acl_cost_model, oracle_lookup, Action, AclTable, RuleSet};
use fist::prefix::{Address, Prefix};
use fist::update::{replay, NoObserver, Strategy, UpdateOp};
use fist::workload::{exceeds_factor, gen_policy, gen_updates, greedy_assign, max_utilization, ScenarioSpec};
use num_rational::Ratio;
use rand::Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn within(elapsed: Duration, budget_s: u64) -> bool {
    elapsed <= Duration::from_secs(budget_s)
}

fn expected_entries(rs: &RuleSet, t: &FistTable) -> usize {
    let wildcard_col = !t.opts().isolation && t.td().row_count() > 0;
    rs.dests().count() + rs.src_prefixes().len() + usize::from(wildcard_col)
}

/// W=8, 100 rule sets of about 200 rules, every flag combination,
/// exhaustive sweeps. Also records the footprint identity of every build.
fn oracle_equivalence(footprint_violations: &mut usize) -> Outcome {
    let start = Instant::now();
    let width = 8;
    let results: Vec<(u64, usize, usize)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..4u64)
            .map(|part| {
                scope.spawn(move || {
                    let (mut pairs, mut bad, mut fp) = (0u64, 0usize, 0usize);
                    for seed in (0..100u64).filter(|s| s % 4 == part) {
                        let rs = random_rules(seed, width, 200, 40, 8, 0.5);
                        let expect: Vec<Option<&Action>> = Address::all(width)
                            .flat_map(|d| Address::all(width).map(move |s| (d, s)))
                            .map(|(d, s)| oracle_lookup(&rs, &d, &s).action())
                            .collect();
                        for opts in all_flag_combos() {
                            let t = FistTable::build(&rs, opts).unwrap();
                            if t.tcam_entries() != expected_entries(&rs, &t) {
                                fp += 1;
                            }
                            let mut l = AccessLedger::new();
                            let mut i = 0;
                            for d in Address::all(width) {
                                for s in Address::all(width) {
                                    if t.lookup(&d, &s, &mut l).unwrap() != expect[i] {
                                        bad += 1;
                                    }
                                    i += 1;
                                    pairs += 1;
                                }
                            }
                        }
                    }
                    (pairs, bad, fp)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let pairs: u64 = results.iter().map(|r| r.0).sum();
    let bad: usize = results.iter().map(|r| r.1).sum();
    *footprint_violations += results.iter().map(|r| r.2).sum::<usize>();
    let el = start.elapsed();
    check(
        bad == 0 && pairs == 100 * 8 * 65_536 && within(el, 60),
        format!("{pairs} pairs, {bad} mismatches, {:.1}s", el.as_secs_f64()),
    )
}

const EXAMPLE_RULES: &str = "\
111* 111* 1.0.0.0
111* 100* 1.0.0.1
100* 111* 1.0.0.2
101* 11** 1.0.0.2
10** 11** 1.0.0.3
default 101* 1.0.0.1
default 11** 1.0.0.3
";

fn worked_example() -> Outcome {
    let p = |s| Prefix::parse(s, 4).unwrap();
    let rs = RuleSet::parse(EXAMPLE_RULES, 4, 4).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    for opts in all_flag_combos() {
        let t = FistTable::build(&rs, opts).unwrap();
        let a = t.cell_action(&p("100*"), &p("111*")).map(|a| a.to_string());
        let sat = t.cell_action(&p("101*"), &p("111*")).map(|a| a.to_string());
        ok &= a.as_deref() == Some("1.0.0.2") && sat.as_deref() == Some("1.0.0.2");
    }
    notes.push("cell(100*,111*)=1.0.0.2, saturated cell(101*,111*)=1.0.0.2".to_string());

    // the deleted rule's cells take the destination default value
    let opts = BuildOptions {
        isolation: false,
        non_homogeneous: false,
        ..Default::default()
    };
    let mut t = FistTable::build(&rs, opts).unwrap();
    let before = t.clone();
    let n = t.delete_rule(p("101*"), p("11**"), &mut AccessLedger::new()).unwrap();
    let srcs: Vec<Prefix> = t.src_table().prefixes().collect();
    let changed: Vec<String> = srcs
        .iter()
        .filter(|q| before.cell(&p("101*"), q) != t.cell(&p("101*"), q))
        .map(|q| q.star())
        .collect();
    let values_ok = ["11**", "111*"]
        .iter()
        .all(|q| t.cell_action(&p("101*"), &p(q)).map(|a| a.as_str()) == Some("1.0.0.1"));
    let others_same = t
        .dest_table()
        .prefixes()
        .filter(|d| *d != p("101*"))
        .all(|d| srcs.iter().all(|q| before.cell(&d, q) == t.cell(&d, q)));
    ok &= n == 2 && changed == ["11**", "111*"] && values_ok && others_same;
    notes.push(format!("delete rewrote {changed:?}"));
    check(ok, notes.join("; "))
}

fn update_optimality() -> Outcome {
    let start = Instant::now();
    let width = 6;
    let mut deviations = 0;
    let mut first = String::new();
    for seed in 0..1000u64 {
        let rs = random_rules(seed + 10_000, width, 40, 12, 4, 0.4);
        let mut r = common::rng(seed);
        let opts = all_flag_combos()[seed as usize % 8];
        let op = random_op(&mut r, &rs, width);
        let mut after = rs.clone();
        apply_to_rules(&mut after, &op);
        let mut t = FistTable::build(&rs, opts).unwrap();
        let black_in = if matches!(op, UpdateOp::Insert { .. }) {
            FistTable::build(&after, opts).unwrap()
        } else {
            t.clone()
        };
        let domain = black_in.domain(&op.dest(), &op.src()).unwrap().len();
        let mut ledger = AccessLedger::new();
        let n = t.apply(&op, &mut ledger, &mut NoObserver).unwrap();
        let written = ledger.totals().sram_writes.td_cells as usize;
        let diff = cell_diff(&rs, &after, (op.dest(), op.src()), opts);
        if !(n == domain && written == domain && diff == domain) {
            deviations += 1;
            if first.is_empty() {
                first = format!(" first: {op} n={n} written={written} |D|={domain} diff={diff}");
            }
        }
    }
    let el = start.elapsed();
    check(
        deviations == 0 && within(el, 60),
        format!("1000 updates, {deviations} deviations, {:.1}s{first}", el.as_secs_f64()),
    )
}

fn footprint(build_violations: usize) -> Outcome {
    let spec = ScenarioSpec::dense(32, 6000, 100, 1);
    let (rs, _) = gen_policy(&spec).unwrap();
    let t = FistTable::build(&rs, BuildOptions::default()).unwrap();
    let acl = acl_cost_model(&rs, t.entry_width(), false);
    check(
        build_violations == 0 && t.tcam_entries() == 6100 && acl.tcam_entries == 600_000,
        format!(
            "FIST {} entries vs ACL {}; {} builds off the identity",
            t.tcam_entries(),
            acl.tcam_entries,
            build_violations
        ),
    )
}

fn latency() -> Outcome {
    let rs = random_rules(5, 8, 120, 30, 6, 0.5);
    let mut r = common::rng(5);
    let mut ok = true;
    let mut seen = Vec::new();
    for (dedup, double) in [(false, false), (true, false), (false, true)] {
        let opts = BuildOptions {
            dedup: dedup.then_some(2),
            double_tcam_request: double,
            ..Default::default()
        };
        let t = FistTable::build(&rs, opts).unwrap();
        let want = (if double { 2 } else { 1 }, if dedup { 4 } else { 3 });
        for _ in 0..2000 {
            let d = Address::new(8, r.gen_range(0..256)).unwrap();
            let s = Address::new(8, r.gen_range(0..256)).unwrap();
            let mut l = AccessLedger::new();
            t.lookup(&d, &s, &mut l).unwrap();
            let c = l.totals();
            ok &= (c.tcam_reads, c.sram_reads) == want;
        }
        ok &= lookup_cycles(opts.latency_options()) == (want.0 as u32, want.1 as u32);
        seen.push(format!("{}+{}", want.0, want.1));
    }
    let acl = AclTable::build(&rs);
    for _ in 0..2000 {
        let d = Address::new(8, r.gen_range(0..256)).unwrap();
        let s = Address::new(8, r.gen_range(0..256)).unwrap();
        let mut l = AccessLedger::new();
        acl.lookup(&d, &s, &mut l);
        let c = l.totals();
        ok &= (c.tcam_reads, c.sram_reads) == (1, 1);
    }
    let base = LatencyOptions {
        acl_baseline: true,
        ..Default::default()
    };
    ok &= lookup_cycles(base) == (1, 1);
    check(ok, format!("TCAM+SRAM per lookup: plain {}, dedup {}, split key {}, ACL 1+1", seen[0], seen[1], seen[2]))
}

fn compression() -> Outcome {
    let mut mismatches = 0;
    let width = 6;
    for seed in 0..100u64 {
        let rs = random_rules(seed + 500, width, 60, 14, 4, 0.4);
        for opts in [all_flag_combos()[0], all_flag_combos()[6]] {
            let t = FistTable::build(&rs, opts).unwrap();
            for stages in [
                Stages { comp_tcam: true, dedup_rows_cols: false, fixed_block: None },
                Stages { comp_tcam: true, dedup_rows_cols: true, fixed_block: None },
                Stages { comp_tcam: true, dedup_rows_cols: true, fixed_block: Some(2) },
            ] {
                let (c, _) = compress(&t, stages).unwrap();
                let mut l = AccessLedger::new();
                for d in Address::all(width) {
                    for s in Address::all(width) {
                        if t.lookup(&d, &s, &mut l).unwrap() != c.lookup(&d, &s, &mut l).unwrap() {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
    }
    let mut off_minimum = 0;
    let mut off_dims = 0;
    for seed in 0..40u64 {
        for width in [3u8, 4] {
            let rs = random_rules(seed + 900, width, 3 + seed as usize % 12, 7, 3, 0.5);
            for opts in all_flag_combos() {
                let c = comp_tcam(&FistTable::build(&rs, opts).unwrap()).unwrap();
                if c.tcam_entries() != min_entries(&rs, opts) {
                    off_minimum += 1;
                }
                let td = c.td();
                let rows: std::collections::HashSet<Vec<Cell>> = td.rows().map(|r| td.row_vector(r)).collect();
                let cols: std::collections::HashSet<Vec<Cell>> = td.cols().map(|x| td.col_vector(x)).collect();
                let d = dedup_rows_cols(&c).unwrap();
                if (d.td().row_count(), d.td().col_count()) != (rows.len(), cols.len()) {
                    off_dims += 1;
                }
            }
        }
    }
    // dense uniform policy: identical rows collapse
    let (rs, _) = gen_policy(&ScenarioSpec {
        src_groups: 1,
        ..ScenarioSpec::dense(8, 40, 6, 3)
    })
    .unwrap();
    let t = FistTable::build(&rs, BuildOptions::default()).unwrap();
    let (_, report) = compress(&t, Stages::default()).unwrap();
    let shrinks = report.after.tcam_entries() < report.before.tcam_entries();
    check(
        mismatches == 0 && off_minimum == 0 && off_dims == 0 && shrinks,
        format!(
            "{mismatches} mismatches over 100 seeds; {off_minimum} off the enumerated minimum; {off_dims} dedup dimension errors; dense {} -> {} entries",
            report.before.tcam_entries(),
            report.after.tcam_entries()
        ),
    )
}

fn dedup_lossless() -> Outcome {
    let mut bad = 0;
    let mut cells = 0;
    for seed in 0..100u64 {
        let rs = random_rules(seed + 2000, 6, 90, 16, 6, 0.4);
        let t = FistTable::build(&rs, BuildOptions::default()).unwrap();
        let td = t.td();
        for w in [1, 2, 4, 8] {
            let store = NarrowStore::build(td, w, Default::default()).unwrap();
            for r in td.rows() {
                for c in td.cols() {
                    cells += 1;
                    if store.lookup(r, c).unwrap() != td.get(r, c) {
                        bad += 1;
                    }
                }
            }
        }
    }
    check(bad == 0, format!("{cells} cells read back, {bad} mismatches"))
}

fn isolation_effect() -> Outcome {
    let spec = ScenarioSpec {
        dest_only: 40,
        default_prob: 1.0,
        ..ScenarioSpec::sparse(8, 150, 4)
    };
    let (rs, _) = gen_policy(&spec).unwrap();
    let dest_only: Vec<Prefix> = rs.dests().map(|(d, _)| d).filter(|d| rs.rules_of(d).next().is_none()).collect();
    let mut r = common::rng(4);
    let wild = Prefix::wildcard(8);
    let trace: Vec<UpdateOp> = (0..100)
        .map(|i| UpdateOp::Update {
            dest: dest_only[r.gen_range(0..dest_only.len())],
            src: wild,
            action: Action::new(format!("nh{}", i % 7)),
        })
        .collect();
    let mut iso_writes = 0;
    let mut short = 0;
    for isolation in [true, false] {
        let opts = BuildOptions {
            isolation,
            non_homogeneous: false,
            ..Default::default()
        };
        let mut t = FistTable::build(&rs, opts).unwrap();
        for op in &trace {
            let mut l = AccessLedger::new();
            t.apply(op, &mut l, &mut NoObserver).unwrap();
            let w = l.totals().sram_writes.td_cells;
            if isolation {
                iso_writes += w;
            } else if w != t.td().col_count() as u64 {
                short += 1;
            }
        }
    }
    check(
        iso_writes == 0 && short == 0 && !dest_only.is_empty(),
        format!("isolated: {iso_writes} TD writes; shared: {short} of 100 updates not a full row"),
    )
}

fn saturation_baseline() -> Outcome {
    let (rs, _) = gen_policy(&ScenarioSpec::sparse(8, 200, 12)).unwrap();
    let ops = gen_updates(&rs, 1000, 8, 12);
    let mut a = FistTable::build(&rs, BuildOptions::default()).unwrap();
    let mut b = a.clone();
    let inc = replay(&mut a, &ops, Strategy::Incremental, &mut AccessLedger::new()).unwrap();
    let full = replay(&mut b, &ops, Strategy::FullSaturation, &mut AccessLedger::new()).unwrap();
    let win = |v: &[fist::cost::Counters]| -> Vec<u64> {
        v.chunks(100).map(|c| c.iter().map(|x| x.sram_write_total()).sum()).collect()
    };
    let (wi, wf) = (win(&inc.per_op), win(&full.per_op));
    let all_ge = wi.iter().zip(&wf).all(|(i, f)| f >= i);
    let strict = wi.iter().zip(&wf).filter(|(i, f)| f > i).count();
    check(
        all_ge && strict >= 1 && wi.len() == 10,
        format!("incremental {wi:?} vs baseline {wf:?}; strictly greater in {strict} windows"),
    )
}

fn brute_makespan(v: &[Ratio<u64>], caps: &[Ratio<u64>]) -> Vec<Ratio<u64>> {
    let k = caps.len();
    let mut best: Option<(Ratio<u64>, Vec<Ratio<u64>>)> = None;
    for code in 0..k.pow(v.len() as u32) {
        let mut loads = vec![Ratio::from_integer(0); k];
        let mut x = code;
        for &vol in v {
            loads[x % k] += vol;
            x /= k;
        }
        let m = max_utilization(&loads, caps);
        let u = loads[m] / caps[m];
        if best.as_ref().map_or(true, |(b, _)| u < *b) {
            best = Some((u, loads));
        }
    }
    best.unwrap().1
}

fn greedy_factor_two() -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    for seed in 0..500u64 {
        let mut r = common::rng(seed + 77);
        let exits = if seed % 3 == 0 { 3 } else { 2 };
        let n = r.gen_range(1..=if exits == 3 { 9 } else { 12 });
        let v: Vec<Ratio<u64>> = (0..n).map(|_| Ratio::new(r.gen_range(1..200), r.gen_range(1..8))).collect();
        let caps = vec![Ratio::from_integer(1); exits];
        let opt = brute_makespan(&v, &caps);
        for sort in [false, true] {
            let g = greedy_assign(&v, &caps, sort);
            if exceeds_factor(&g.loads, &opt, &caps, Ratio::from_integer(2)) {
                violations += 1;
            }
        }
    }
    let el = start.elapsed();
    check(
        violations == 0 && within(el, 30),
        format!("500 instances, {violations} violations, {:.1}s", el.as_secs_f64()),
    )
}

fn throughput_model() -> Outcome {
    let costs = CycleCosts::<f64>::default();
    let est = latency_estimate(LatencyOptions::default(), &costs);
    let ns = costs.tcam_cycle_ns + 3.0 * costs.sram_cycle_ns;
    let pps = 1e9 / costs.tcam_cycle_ns;
    let ok = (est.ns - ns).abs() < 1e-9 && (est.packets_per_sec - pps).abs() < 1e-3;
    let gbps = est.packets_per_sec * 64.0 * 8.0 / 1e9;
    Outcome {
        ok,
        detail: format!(
            "measured line rate depends on hardware; model gives {} ns per lookup, {:.0} packets/s, {gbps:.1} Gbps at 64-byte frames",
            est.ns, est.packets_per_sec
        ),
    }
}

fn main() -> ExitCode {
    let mut footprint_violations = 0;
    let results = vec![
        (1, "oracle equivalence", oracle_equivalence(&mut footprint_violations)),
        (2, "worked example", worked_example()),
        (3, "update optimality", update_optimality()),
        (4, "TCAM footprint", footprint(footprint_violations)),
        (5, "lookup latency", latency()),
        (6, "compression", compression()),
        (7, "dedup losslessness", dedup_lossless()),
        (8, "isolation", isolation_effect()),
        (9, "saturation baseline", saturation_baseline()),
        (10, "greedy factor 2", greedy_factor_two()),
        (11, "throughput model", throughput_model()),
    ];
    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n:>2} {name:<20} {} {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.ok);
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
