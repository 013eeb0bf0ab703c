//! `bcast3`: single runs, load sweeps and invariant validation for the
//! three-receiver coded broadcast simulator.
//!
//!   bcast3 run --mu 0.5 --rho 0.95 --slots 500000 --seed 1 --out out/
//!   bcast3 sweep --mu 0.5 --rhos 0.8,0.9,0.95 --seeds 1-3 --out sweep/
//!   bcast3 sweep --mu 0.5 --reference-grid --seeds 1-3
//!   bcast3 validate --mu 0.5 --rho 0.9 --slots 100000 --seeds 1-20

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcast3_core::batch;
use bcast3_core::output::{write_packets_csv, write_trace_csv};
use bcast3_core::sweep::{run_sweep, write_sweep_csv, SweepPoint, SweepSpec, REFERENCE_GRID};
use bcast3_core::{run, AssertLevel, Error, Mode, RunOutput, SimConfig, StatsReport, Violations};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const EXIT_INVARIANT: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "bcast3", version, about = "Coded broadcast to three receivers over GF(3)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One simulation; writes trace.csv, packets.csv and a report.
    Run(RunArgs),
    /// Mean delay over a grid of loads, with the log-log slope.
    Sweep(SweepArgs),
    /// Runs with hard invariants enforced and prints a violation table.
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Coded,
    Arq,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Coded => Mode::ThreeRxCoded,
            ModeArg::Arq => Mode::SingleRxArq,
        }
    }
}

#[derive(Args, Debug)]
#[group(id = "load", required = true, multiple = false)]
struct Load {
    /// Arrival probability per slot.
    #[arg(long)]
    lambda: Option<f64>,
    /// Load factor lambda / mu.
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args, Debug)]
struct Common {
    /// Delivery probability per receiver per slot.
    #[arg(long)]
    mu: f64,
    /// Number of arrival slots.
    #[arg(long, default_value_t = 100_000)]
    slots: u64,
    /// Stop when arrivals stop instead of draining the queue.
    #[arg(long)]
    no_drain: bool,
    /// Packets arriving in the first N slots are left out of the averages.
    #[arg(long, default_value_t = 0)]
    warmup: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Coded)]
    mode: ModeArg,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    load: Load,
    #[command(flatten)]
    common: Common,
    #[arg(long, env = "NC_BCAST_SEED", default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Format of the run report.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, value_parser = parse_level, default_value = "monitor")]
    assert_level: AssertLevel,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated loads.
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.9,0.95", conflicts_with = "reference_grid")]
    rhos: Vec<f64>,
    /// Loads 0.95 to 0.995, with 10^6 slots for the two highest.
    #[arg(long)]
    reference_grid: bool,
    /// Seeds as a list and/or inclusive ranges, e.g. `1,4,7-9`.
    #[arg(long, env = "NC_BCAST_SEED", value_parser = parse_seeds, default_value = "1")]
    seeds: SeedList,
    /// Output directory; the table goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, value_parser = parse_level, default_value = "monitor")]
    assert_level: AssertLevel,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    load: Load,
    #[command(flatten)]
    common: Common,
    #[arg(long, env = "NC_BCAST_SEED", value_parser = parse_seeds, default_value = "1", alias = "seed")]
    seeds: SeedList,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, value_parser = parse_level, default_value = "strict")]
    assert_level: AssertLevel,
}

#[derive(Clone, Debug)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|e| format!("bad seed {a:?}: {e}"))?;
                let b: u64 = b.trim().parse().map_err(|e| format!("bad seed {b:?}: {e}"))?;
                if a > b {
                    return Err(format!("empty seed range {part}"));
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|e| format!("bad seed {part:?}: {e}"))?),
        }
    }
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    seeds.sort_unstable();
    seeds.dedup();
    Ok(SeedList(seeds))
}

fn parse_level(s: &str) -> Result<AssertLevel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) => EXIT_USAGE,
            _ => EXIT_INVARIANT,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: EXIT_INVARIANT,
            msg: format!("i/o error: {e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn base_config(load: Option<&Load>, c: &Common, rho: Option<f64>) -> Result<SimConfig, Failure> {
    if !(c.mu > 0.0 && c.mu <= 1.0) {
        return Err(Failure::usage(format!("--mu must lie in (0, 1], got {}", c.mu)));
    }
    let lambda = match (load, rho) {
        (_, Some(rho)) => rho * c.mu,
        (Some(Load { lambda: Some(l), .. }), None) => *l,
        (Some(Load { rho: Some(r), .. }), None) => r * c.mu,
        _ => return Err(Failure::usage("one of --lambda or --rho is required")),
    };
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Failure::usage(format!(
            "arrival probability lambda = {lambda} must lie in [0, 1]"
        )));
    }
    let cfg = SimConfig::new(lambda, c.mu, c.slots, 0)
        .with_drain(!c.no_drain)
        .with_mode(c.mode.into());
    if !cfg.is_stable() {
        eprintln!(
            "warning: load rho = {:.4} is not below 1; the queue will grow without bound",
            cfg.rho()
        );
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::from(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn report_json(out: &RunOutput, warmup: u64) -> Result<serde_json::Value, Failure> {
    match StatsReport::from_run(out, warmup) {
        Ok(r) => Ok(serde_json::to_value(r).expect("report serializes")),
        // Nothing arrived: still write the config and counters.
        Err(Error::NoPackets) => Ok(serde_json::json!({
            "schema_version": bcast3_core::analytics::SCHEMA_VERSION,
            "generator": bcast3_core::sim::RNG_NAME,
            "config": out.config,
            "rho": out.config.rho(),
            "warmup": warmup,
            "total_slots": out.queue.len(),
            "packets": 0,
            "violations": out.violations,
        })),
        Err(e) => Err(e.into()),
    }
}

fn cmd_run(a: RunArgs) -> Result<u8, Failure> {
    let mut cfg = base_config(Some(&a.load), &a.common, None)?;
    cfg.seed = a.seed;
    cfg = cfg.with_assert_level(a.assert_level).with_trace(true);
    let out = run(&cfg)?;

    fs::create_dir_all(&a.out)?;
    write_trace_csv(create(&a.out.join("trace.csv"))?, &out.trace)?;
    write_packets_csv(create(&a.out.join("packets.csv"))?, &out.packets)?;
    let report = report_json(&out, a.common.warmup)?;
    match a.format {
        Format::Json => {
            let mut w = create(&a.out.join("report.json"))?;
            serde_json::to_writer_pretty(&mut w, &report).map_err(io::Error::from)?;
            writeln!(w)?;
            w.flush()?;
        }
        Format::Csv => write_report_csv(create(&a.out.join("report.csv"))?, &report)?,
    }

    let delay = report.get("mean_delay_avg").and_then(|d| d.as_f64());
    eprintln!(
        "{} packets, mean delay {}, {} slots -> {}",
        out.packets.len(),
        delay.map_or("n/a".into(), |d| format!("{d:.4}")),
        out.queue.len(),
        a.out.display()
    );
    let hard = out.violations.hard_total();
    if hard > 0 {
        eprintln!("warning: {hard} hard invariant violations recorded");
    }
    Ok(0)
}

/// Flattens the scalar fields of the report into `key,value` lines.
fn write_report_csv<W: Write>(mut w: W, report: &serde_json::Value) -> io::Result<()> {
    fn walk<W: Write>(w: &mut W, prefix: &str, v: &serde_json::Value) -> io::Result<()> {
        match v {
            serde_json::Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(w, &key, v)?;
                }
                Ok(())
            }
            serde_json::Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    walk(w, &format!("{prefix}.{}", i + 1), v)?;
                }
                Ok(())
            }
            serde_json::Value::String(s) => writeln!(w, "{prefix},{s}"),
            other => writeln!(w, "{prefix},{other}"),
        }
    }
    writeln!(w, "key,value")?;
    walk(&mut w, "", report)?;
    w.flush()
}

fn cmd_sweep(a: SweepArgs) -> Result<u8, Failure> {
    let grid: Vec<(f64, u64)> = if a.reference_grid {
        REFERENCE_GRID.to_vec()
    } else {
        a.rhos.iter().map(|&r| (r, a.common.slots)).collect()
    };
    if grid.is_empty() {
        return Err(Failure::usage("no loads given"));
    }
    // Validates every point; rates and slots are reset per job anyway.
    let mut checked = Vec::with_capacity(grid.len());
    for &(rho, _) in &grid {
        checked.push(base_config(None, &a.common, Some(rho))?);
    }
    let template = checked.swap_remove(0);
    let mut spec = SweepSpec::new(
        a.common.mu,
        grid.iter().map(|&(rho, slots)| SweepPoint { rho, slots }).collect(),
        a.seeds.0.clone(),
    );
    spec.template = template.with_assert_level(a.assert_level);
    spec.warmup = a.common.warmup;
    let res = run_sweep(&spec)?;

    let mut sink: Box<dyn Write> = match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let name = match a.format {
                Format::Csv => "sweep.csv",
                Format::Json => "sweep.json",
            };
            Box::new(create(&dir.join(name))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    match a.format {
        Format::Csv => write_sweep_csv(&mut sink, &res)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &res).map_err(io::Error::from)?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;

    for p in &res.points {
        eprintln!("rho {:<6} x {:>8.2}  mean delay {:.4}", p.rho, p.x, p.delay);
    }
    match res.slope {
        Some(s) => eprintln!("log-log slope {s:.4} over {} points", res.points.len()),
        None => eprintln!("log-log slope needs at least two loads"),
    }
    let mut v = Violations::default();
    for row in &res.rows {
        v.merge(&row.report.violations);
    }
    if v.hard_total() > 0 {
        eprintln!("warning: {} hard invariant violations recorded", v.hard_total());
    }
    Ok(0)
}

#[derive(Serialize)]
struct ValidateRow {
    seed: u64,
    error: Option<String>,
    #[serde(flatten)]
    counts: Violations,
}

fn cmd_validate(a: ValidateArgs) -> Result<u8, Failure> {
    let cfg = base_config(Some(&a.load), &a.common, None)?.with_assert_level(a.assert_level);
    let configs: Vec<SimConfig> = a
        .seeds
        .0
        .iter()
        .map(|&seed| SimConfig { seed, ..cfg.clone() })
        .collect();
    let results = batch::run_many(configs.clone(), |out| Ok(out.violations));
    let mut rows = Vec::new();
    for (c, r) in configs.iter().zip(results) {
        let (counts, error) = match r {
            Ok(v) => (v, None),
            Err(e @ Error::InvalidParameter(_)) => return Err(e.into()),
            Err(e) => (Violations::default(), Some(e.to_string())),
        };
        rows.push(ValidateRow {
            seed: c.seed,
            error,
            counts,
        });
    }
    let mut total = Violations::default();
    for r in &rows {
        total.merge(&r.counts);
    }
    let aborted = rows.iter().filter(|r| r.error.is_some()).count();
    let failed = total.hard_total() > 0 || aborted > 0;

    let mut stdout = io::stdout().lock();
    match a.format {
        Format::Json => {
            let doc = serde_json::json!({
                "config": cfg,
                "runs": rows,
                "total": total,
                "passed": !failed,
            });
            serde_json::to_writer_pretty(&mut stdout, &doc).map_err(io::Error::from)?;
            writeln!(stdout)?;
        }
        Format::Csv => {
            writeln!(
                stdout,
                "seed,non_innovative,idle_while_behind,index_bound,undecoded_support,leader_decode,rank_seen,both_nonleaders_mixed,fallbacks,partition_slots,aborted"
            )?;
            let line = |seed: &str, v: &Violations, aborted: usize| {
                format!(
                    "{seed},{},{},{},{},{},{},{},{},{},{aborted}",
                    v.non_innovative,
                    v.idle_while_behind,
                    v.index_bound,
                    v.undecoded_support,
                    v.leader_decode,
                    v.rank_seen,
                    v.both_nonleaders_mixed,
                    v.fallbacks,
                    v.partition_slots
                )
            };
            for r in &rows {
                writeln!(stdout, "{}", line(&r.seed.to_string(), &r.counts, usize::from(r.error.is_some())))?;
            }
            writeln!(stdout, "{}", line("total", &total, aborted))?;
        }
    }
    stdout.flush()?;

    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("seed {}: {e}", r.seed);
        }
    }
    if total.both_nonleaders_mixed > 0 {
        eprintln!(
            "NOTE: {} slots had both non-leaders holding undecoded heard packets",
            total.both_nonleaders_mixed
        );
    }
    if failed {
        eprintln!(
            "FAIL: {} hard violations, {aborted} runs aborted",
            total.hard_total()
        );
        Ok(EXIT_INVARIANT)
    } else {
        eprintln!("ok: no hard violations over {} runs", rows.len());
        Ok(0)
    }
}
