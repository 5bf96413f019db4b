use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use fist::compress::Stages;
use fist::error::Error;
use fist::fist::BuildOptions;
use fist::report::ReportFormat;
use fist::update::trace_to_text;
use fist::workbench::{self, error_exit_code, Outcome, RunConfig, DEFAULT_SAMPLES};
use fist::workload::{gen_default_updates, gen_flows, gen_policy, gen_updates, Profile, ScenarioSpec};

#[derive(Parser)]
#[command(name = "fist", version, about = "Two-dimensional forwarding table workbench")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Address width in bits (destination, and source unless --width-s)
    #[arg(long, global = true, default_value_t = 32)]
    width: u8,
    #[arg(long, global = true)]
    width_s: Option<u8>,
    #[arg(long, global = true, default_value = "on", value_parser = on_off, action = ArgAction::Set)]
    isolation: bool,
    #[arg(long, global = true, default_value = "on", value_parser = on_off, action = ArgAction::Set)]
    non_homogeneous: bool,
    /// Fixed-block deduplication with the given narrow-row width
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "2", require_equals = true)]
    dedup: Option<usize>,
    /// Fold defaults into the concatenated-key baseline and look up through it
    #[arg(long, global = true)]
    acl_compat: bool,
    #[arg(long, global = true)]
    double_tcam_request: bool,
    #[arg(long, global = true)]
    tcam_ns: Option<f64>,
    #[arg(long, global = true)]
    sram_ns: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Address pairs checked when a sweep is too large to be exhaustive
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, global = true, default_value = "text")]
    report: ReportFormat,
    /// Report wall time of replays
    #[arg(long, global = true)]
    timing: bool,
    /// Write command output here instead of stdout
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a table and print its dump and sizes
    Build { rules: PathBuf },
    /// Look up `<dest> <src>` address pairs
    Lookup { rules: PathBuf, queries: PathBuf },
    /// Compare lookups with the reference semantics
    Verify { rules: PathBuf },
    /// Replay an update trace
    Replay {
        rules: PathBuf,
        trace: PathBuf,
        /// Also charge a full re-saturation per update
        #[arg(long)]
        saturation_baseline: bool,
        #[arg(long, default_value_t = 100)]
        window: usize,
    },
    /// Compress a table and report before/after sizes
    Compress {
        rules: PathBuf,
        #[arg(long)]
        skip_comp_tcam: bool,
        #[arg(long)]
        skip_dedup_rows: bool,
    },
    /// Generate synthetic inputs
    #[command(subcommand)]
    Gen(GenCmd),
    /// Spread macro flows over exits
    Balance {
        flows: PathBuf,
        /// Exit capacities, comma separated
        #[arg(long, value_delimiter = ',', default_value = "1,1")]
        caps: Vec<f64>,
        /// Place the largest flows first
        #[arg(long)]
        sorted: bool,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// A random rule set
    Policy {
        #[arg(long, default_value = "sparse")]
        profile: Profile,
        #[arg(long, default_value_t = 30)]
        dests: usize,
        #[arg(long, default_value_t = 30)]
        srcs: usize,
        #[arg(long, default_value_t = 200)]
        rules: usize,
        #[arg(long, default_value_t = 8)]
        actions: usize,
        #[arg(long, default_value_t = 0.5)]
        default_prob: f64,
        /// Also write the insertion trace that builds the rule set
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Random updates valid against a rule set
    Updates {
        rules: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        actions: usize,
        /// Only change defaults
        #[arg(long)]
        defaults: bool,
    },
    /// Random macro flows with heavy-tailed volumes
    Flows {
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

fn on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(format!("expected on|off, found `{other}`")),
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn config(g: &Global) -> RunConfig {
    let mut cfg = RunConfig {
        width_d: g.width,
        width_s: g.width_s.unwrap_or(g.width),
        opts: BuildOptions {
            isolation: g.isolation,
            non_homogeneous: g.non_homogeneous,
            dedup: g.dedup,
            double_tcam_request: g.double_tcam_request,
            ..Default::default()
        },
        acl_compat: g.acl_compat,
        seed: g.seed,
        samples: g.samples,
        format: g.report,
        timing: g.timing,
        ..Default::default()
    };
    if let Some(ns) = g.tcam_ns {
        cfg.costs.tcam_cycle_ns = ns;
    }
    if let Some(ns) = g.sram_ns {
        cfg.costs.sram_cycle_ns = ns;
    }
    cfg
}

fn text_outcome(body: String) -> Outcome {
    Outcome {
        body,
        report: fist::report::Report::new("gen"),
        passed: true,
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let cfg = config(&cli.global);
    cfg.validate()?;
    match &cli.cmd {
        Cmd::Build { rules } => workbench::cmd_build(&read(rules)?, &cfg),
        Cmd::Lookup { rules, queries } => workbench::cmd_lookup(&read(rules)?, &read(queries)?, &cfg),
        Cmd::Verify { rules } => workbench::cmd_verify(&read(rules)?, &cfg),
        Cmd::Replay {
            rules,
            trace,
            saturation_baseline,
            window,
        } => workbench::cmd_replay(&read(rules)?, &read(trace)?, &cfg, *saturation_baseline, *window),
        Cmd::Compress {
            rules,
            skip_comp_tcam,
            skip_dedup_rows,
        } => {
            let stages = Stages {
                comp_tcam: !skip_comp_tcam,
                dedup_rows_cols: !skip_dedup_rows,
                fixed_block: cfg.opts.dedup,
            };
            workbench::cmd_compress(&read(rules)?, &cfg, stages)
        }
        Cmd::Balance { flows, caps, sorted } => workbench::cmd_balance(&read(flows)?, caps, &cfg, *sorted),
        Cmd::Gen(GenCmd::Policy {
            profile,
            dests,
            srcs,
            rules,
            actions,
            default_prob,
            trace_out,
        }) => {
            let spec = ScenarioSpec {
                width_d: cfg.width_d,
                width_s: cfg.width_s,
                dests: *dests,
                srcs: *srcs,
                rules: *rules,
                actions: *actions,
                default_prob: *default_prob,
                profile: *profile,
                seed: cfg.seed,
                ..Default::default()
            };
            let (rs, trace) = gen_policy(&spec)?;
            if let Some(p) = trace_out {
                write(p, &trace_to_text(&trace))?;
            }
            Ok(text_outcome(rs.to_text()))
        }
        Cmd::Gen(GenCmd::Updates {
            rules,
            count,
            actions,
            defaults,
        }) => {
            let rs = fist::oracle::RuleSet::parse(&read(rules)?, cfg.width_d, cfg.width_s)?;
            let ops = if *defaults {
                gen_default_updates(&rs, *count, *actions, cfg.seed)
            } else {
                gen_updates(&rs, *count, *actions, cfg.seed)
            };
            Ok(text_outcome(trace_to_text(&ops)))
        }
        Cmd::Gen(GenCmd::Flows { count }) => {
            let flows = gen_flows(*count, cfg.width_d, cfg.width_s, cfg.seed)?;
            let body = flows.iter().map(|f| format!("{} {} {}\n", f.dest, f.src, f.volume)).collect();
            Ok(text_outcome(body))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let text = match &cli.cmd {
                Cmd::Gen(_) => out.body.clone(),
                _ => out.render(cli.global.report),
            };
            let emitted = match &cli.global.out {
                Some(p) => write(p, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = emitted {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
