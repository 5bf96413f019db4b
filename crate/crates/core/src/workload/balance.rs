use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_traits::Num;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};

use super::random_prefix;
use crate::error::{Error, Result};
use crate::oracle::{Action, RuleSet};
use crate::prefix::Prefix;

/// Traffic volume or capacity.
pub trait Quantity: Copy + PartialOrd + Num + fmt::Debug {}

impl<T: Copy + PartialOrd + Num + fmt::Debug> Quantity for T {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacroFlow<Q> {
    pub dest: Prefix,
    pub src: Prefix,
    pub volume: Q,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<Q> {
    /// Exit chosen for each flow, by input position.
    pub exit: Vec<usize>,
    pub loads: Vec<Q>,
}

impl<Q: Quantity> Assignment<Q> {
    /// Exit with the highest load-to-capacity ratio.
    pub fn bottleneck(&self, caps: &[Q]) -> usize {
        max_utilization(&self.loads, caps)
    }
}

/// `a / ca < b / cb` without dividing.
fn less_utilized<Q: Quantity>(a: Q, ca: Q, b: Q, cb: Q) -> bool {
    a * cb < b * ca
}

/// Index of the exit with the highest utilization (first on ties).
pub fn max_utilization<Q: Quantity>(loads: &[Q], caps: &[Q]) -> usize {
    let mut best = 0;
    for k in 1..loads.len() {
        if less_utilized(loads[best], caps[best], loads[k], caps[k]) {
            best = k;
        }
    }
    best
}

/// True iff the peak utilization of `a` exceeds `factor` times that of `b`.
pub fn exceeds_factor<Q: Quantity>(a: &[Q], b: &[Q], caps: &[Q], factor: Q) -> bool {
    let (i, j) = (max_utilization(a, caps), max_utilization(b, caps));
    a[i] * caps[j] > factor * b[j] * caps[i]
}

/// Sends each flow, in input order (or by descending volume), to the exit
/// with the least utilization so far; ties go to the lower exit.
pub fn greedy_assign<Q: Quantity>(volumes: &[Q], caps: &[Q], sort_desc: bool) -> Assignment<Q> {
    assert!(!caps.is_empty(), "at least one exit");
    let mut order: Vec<usize> = (0..volumes.len()).collect();
    if sort_desc {
        order.sort_by(|&a, &b| volumes[b].partial_cmp(&volumes[a]).unwrap_or(std::cmp::Ordering::Equal));
    }
    let mut loads = vec![Q::zero(); caps.len()];
    let mut exit = vec![0; volumes.len()];
    for i in order {
        let mut k = 0;
        for j in 1..caps.len() {
            if less_utilized(loads[j], caps[j], loads[k], caps[k]) {
                k = j;
            }
        }
        loads[k] = loads[k] + volumes[i];
        exit[i] = k;
    }
    Assignment { exit, loads }
}

/// Balances `flows` over the exits and returns the rule set realizing the
/// assignment: every flow destination defaults to the first exit and each
/// diverted flow gets a rule naming its exit.
pub fn gen_load_balance<Q: Quantity>(
    flows: &[MacroFlow<Q>],
    caps: &[Q],
    exits: &[Action],
    sort_desc: bool,
) -> Result<(Assignment<Q>, RuleSet)> {
    let Some(first) = flows.first() else {
        return Err(Error::Config("no flows to balance".into()));
    };
    if caps.is_empty() || caps.len() != exits.len() {
        return Err(Error::Config(format!("{} capacities for {} exits", caps.len(), exits.len())));
    }
    if caps.iter().any(|&c| c <= Q::zero()) {
        return Err(Error::Config("capacities must be positive".into()));
    }
    let volumes: Vec<Q> = flows.iter().map(|f| f.volume).collect();
    let a = greedy_assign(&volumes, caps, sort_desc);
    let mut rs = RuleSet::new(first.dest.width(), first.src.width());
    for (f, &k) in flows.iter().zip(&a.exit) {
        if rs.default_of(&f.dest).is_none() {
            rs.set_default(f.dest, exits[0].clone())?;
        }
        if k != 0 {
            rs.upsert(f.dest, f.src, exits[k].clone())?;
        }
    }
    Ok((a, rs))
}

/// `n` flows over distinct (destination, source) pairs with heavy-tailed
/// volumes.
pub fn gen_flows(n: usize, width_d: u8, width_s: u8, seed: u64) -> Result<Vec<MacroFlow<f64>>> {
    let room = 2f64.powi(width_d as i32 + 1) * 2f64.powi(width_s as i32);
    if n as f64 > room / 2.0 {
        return Err(Error::Infeasible(format!("{n} flows do not fit widths {width_d}/{width_s}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tail = Pareto::new(1.0, 1.5).expect("valid shape");
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let dest = random_prefix(&mut rng, width_d, 1.min(width_d));
        let src = random_prefix(&mut rng, width_s, 1);
        if seen.insert((dest, src)) {
            let volume: f64 = tail.sample(&mut rng);
            out.push(MacroFlow { dest, src, volume: (volume * 100.0).round() / 100.0 });
        }
    }
    Ok(out)
}

/// Flow file: `<dest> <src> <volume>` per line, `#` comments.
pub fn parse_flows<Q>(text: &str, width_d: u8, width_s: u8) -> Result<Vec<MacroFlow<Q>>>
where
    Q: Quantity + FromStr,
{
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let f: Vec<&str> = content.split_whitespace().collect();
        if f.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", f.len())));
        }
        let dest = Prefix::parse(f[0], width_d).map_err(|e| err(e.to_string()))?;
        let src = Prefix::parse(f[1], width_s).map_err(|e| err(e.to_string()))?;
        let volume: Q = f[2].parse().map_err(|_| err(format!("bad volume `{}`", f[2])))?;
        if volume < Q::zero() {
            return Err(err("negative volume".into()));
        }
        if !seen.insert((dest, src)) {
            return Err(err(format!("duplicate flow ({dest}, {src})")));
        }
        out.push(MacroFlow { dest, src, volume });
    }
    Ok(out)
}
