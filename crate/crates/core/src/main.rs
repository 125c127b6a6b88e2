//! Experiment harness CLI.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pipomon::cachesim::CacheGeometry;
use pipomon::config::ConfigFile;
use pipomon::experiments::{
    run_brute_force_experiment, run_fpr, run_occupancy, run_primeprobe_experiment,
    run_reverse_experiment, run_synthetic, BruteForceParams, CsvReport, FprParams, OccupancyParams,
    PrimeProbeModes, PrimeProbeParams, ReverseParams, SyntheticParams,
};
use pipomon::filter::FilterConfig;
use pipomon::monitor::MonitorConfig;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "pipomon",
    version,
    about = "Deterministic cache simulator with a Ping-Pong monitor: filter curves and attack experiments",
    after_help = "CSV schemas:\n  \
        occupancy    {mnk, insertions, occupancy}\n  \
        fpr          {f, collision_entry_ratio, multi_collision_ratio, theoretical_eps}\n  \
        brute-force  {trial, fills}\n  \
        reverse      {b, mnk, l, eviction_set_size, setup_inserts, fills_issued, success}\n  \
        primeprobe   {monitor, iteration, square_miss, multiply_miss, victim_square, victim_multiply, inferred_bit, true_bit}\n  \
        synthetic    {workload, captures_per_million_accesses, prefetches_issued}\n\n\
        Event logs use {cycle, event, addr_hex, security, detail}; security is -1 where no filter response applies."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Seed for every random choice the experiment makes.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output CSV path; defaults to <experiment>.csv.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Key/value config file with filter/monitor/geometry/attack settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Filter occupancy versus insertions for each MNK.
    Occupancy {
        /// Comma-separated MNK values.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        mnk: Vec<u32>,
        #[arg(long, default_value_t = 14_000)]
        insertions: u64,
        #[arg(long, default_value_t = 500)]
        sample_interval: u64,
    },
    /// Fingerprint-collision ratios for each fingerprint width.
    Fpr {
        /// Comma-separated fingerprint widths in bits.
        #[arg(
            long = "f-list",
            value_delimiter = ',',
            default_value = "8,10,12,14,16"
        )]
        f_list: Vec<u32>,
        #[arg(long, default_value_t = 100_000)]
        insertions: u64,
    },
    /// Brute-force eviction cost of one filter record.
    BruteForce {
        #[arg(long, default_value_t = 300)]
        trials: u64,
    },
    /// White-box reverse-engineering attack on the filter.
    Reverse {
        /// Cases as b:mnk pairs.
        #[arg(long, value_delimiter = ',', default_value = "2:0,2:1,2:2,8:4")]
        cases: Vec<String>,
    },
    /// Prime+Probe key extraction with and without the monitor.
    Primeprobe {
        #[arg(long, default_value_t = 100)]
        key_len: usize,
        /// off, on, or both.
        #[arg(long, default_value = "both")]
        monitor: String,
    },
    /// Benign synthetic workloads counting false-positive captures.
    Synthetic {
        #[arg(long, default_value_t = 200_000)]
        accesses: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_config(common: &Common) -> Result<ConfigFile> {
    match &common.config {
        None => Ok(ConfigFile::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ConfigFile::parse(&text).with_context(|| format!("parsing config {}", path.display()))
        }
    }
}

fn write_report(report: &CsvReport, out: Option<&Path>, default_name: &str) -> Result<PathBuf> {
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(default_name));
    std::fs::write(&path, report.render())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli.common)?;
    let filter_base = config.filter_config(FilterConfig::default())?;
    let monitor_base = config.monitor_config(MonitorConfig::default())?;
    let geometry = config.geometry(CacheGeometry::default())?;
    geometry.validate()?;
    let out = cli.common.out.as_deref();

    match cli.command {
        Command::Occupancy {
            mnk,
            insertions,
            sample_interval,
        } => {
            if sample_interval == 0 {
                bail!("--sample-interval must be positive");
            }
            let params = OccupancyParams {
                l: filter_base.l,
                b: filter_base.b,
                f: filter_base.f,
                mnk_list: mnk,
                insertions,
                sample_interval,
                seed: cli.common.seed.unwrap_or(1),
            };
            let outcome = run_occupancy(&params)?;
            let path = write_report(&outcome.report, out, "occupancy.csv")?;
            println!(
                "occupancy: l={} b={} insertions={}",
                params.l, params.b, insertions
            );
            println!("{:>6} {:>14}", "mnk", "full at");
            for (mnk, full) in &outcome.first_full {
                let full = full.map_or("not reached".to_string(), |n| n.to_string());
                println!("{mnk:>6} {full:>14}");
            }
            println!("wrote {}", path.display());
        }
        Command::Fpr { f_list, insertions } => {
            let params = FprParams {
                l: filter_base.l,
                b: filter_base.b,
                f_list,
                insertions,
                seed: cli.common.seed.unwrap_or(11),
            };
            let outcome = run_fpr(&params)?;
            let path = write_report(&outcome.report, out, "fpr.csv")?;
            println!(
                "fpr: l={} b={} insertions={}",
                params.l, params.b, insertions
            );
            println!(
                "{:>4} {:>16} {:>16} {:>12}",
                "f", "collision_ratio", "multi_ratio", "eps"
            );
            for p in &outcome.points {
                println!(
                    "{:>4} {:>16.6} {:>16.6} {:>12.6}",
                    p.f, p.collision_entry_ratio, p.multi_collision_ratio, p.theoretical_eps
                );
            }
            println!("wrote {}", path.display());
        }
        Command::BruteForce { trials } => {
            if trials == 0 {
                bail!("--trials must be positive");
            }
            let params = BruteForceParams {
                l: filter_base.l,
                b: filter_base.b,
                trials,
                seed: cli.common.seed.unwrap_or(5150),
            };
            let outcome = run_brute_force_experiment(&params)?;
            let path = write_report(&outcome.report, out, "brute-force.csv")?;
            let s = &outcome.summary;
            println!(
                "brute-force: l={} b={} trials={}",
                params.l, params.b, trials
            );
            println!(
                "fills: mean={:.1} std={:.1} min={} max={} (theoretical b*l = {})",
                s.mean, s.std, s.min, s.max, outcome.expected_mean
            );
            println!("wrote {}", path.display());
        }
        Command::Reverse { cases } => {
            let cases = parse_cases(&cases)?;
            let params = ReverseParams {
                cases,
                l: filter_base.l,
                seed: cli.common.seed.unwrap_or(23),
            };
            let outcome = run_reverse_experiment(&params)?;
            let path = write_report(&outcome.report, out, "reverse.csv")?;
            println!("reverse: l={}", params.l);
            println!(
                "{:>4} {:>5} {:>16} {:>14} {:>13} {:>8}",
                "b", "mnk", "eviction_set", "setup_inserts", "fills_issued", "success"
            );
            for (b, mnk, r) in &outcome.reports {
                println!(
                    "{b:>4} {mnk:>5} {:>16} {:>14} {:>13} {:>8}",
                    r.eviction_set_size_used, r.setup_inserts, r.fills_issued, r.success
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Primeprobe { key_len, monitor } => {
            let modes = match monitor.as_str() {
                "off" => PrimeProbeModes::Off,
                "on" => PrimeProbeModes::On,
                "both" => PrimeProbeModes::Both,
                other => bail!("--monitor must be off, on or both, got {other:?}"),
            };
            let mut params = PrimeProbeParams {
                geometry,
                monitor: monitor_base,
                key_len,
                key_seed: cli.common.seed.unwrap_or(0xACCE55),
                modes,
                ..PrimeProbeParams::default()
            };
            if let Some(len) = config.key_len()? {
                params.key_len = len;
            }
            params.key_bits = config.key_bits()?;
            if let Some(period) = config.probe_period()? {
                params.probe_period = period;
            }
            let outcome = run_primeprobe_experiment(&params)?;
            let path = write_report(&outcome.report, out, "primeprobe.csv")?;
            let effective_len = params.key_bits.as_ref().map_or(params.key_len, Vec::len);
            println!(
                "primeprobe: key_len={} prefetch_delay={}",
                effective_len, params.monitor.prefetch_delay
            );
            for (enabled, acc) in &outcome.accuracies {
                let label = if *enabled {
                    "monitor on "
                } else {
                    "monitor off"
                };
                println!("{label}: key-recovery accuracy {acc:.3}");
            }
            println!("wrote {}", path.display());
        }
        Command::Synthetic { accesses } => {
            if accesses == 0 {
                bail!("--accesses must be positive");
            }
            let params = SyntheticParams {
                geometry,
                monitor: monitor_base,
                accesses,
                seed: cli.common.seed.unwrap_or(5),
                ..SyntheticParams::default()
            };
            let outcome = run_synthetic(&params)?;
            let path = write_report(&outcome.report, out, "synthetic.csv")?;
            println!("synthetic: accesses={accesses} per workload");
            println!(
                "{:>16} {:>12} {:>22} {:>10}",
                "workload", "captures", "captures_per_million", "prefetches"
            );
            for p in &outcome.points {
                println!(
                    "{:>16} {:>12} {:>22.3} {:>10}",
                    p.workload.name(),
                    p.captures,
                    p.captures_per_million,
                    p.prefetches_issued
                );
            }
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn parse_cases(tokens: &[String]) -> Result<Vec<(usize, u32)>> {
    tokens
        .iter()
        .map(|tok| {
            let (b, mnk) = tok
                .split_once(':')
                .with_context(|| format!("case {tok:?} is not b:mnk"))?;
            Ok((
                b.trim()
                    .parse()
                    .with_context(|| format!("bad b in {tok:?}"))?,
                mnk.trim()
                    .parse()
                    .with_context(|| format!("bad mnk in {tok:?}"))?,
            ))
        })
        .collect()
}
