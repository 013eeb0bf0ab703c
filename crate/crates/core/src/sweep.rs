//! Load sweeps: mean decoding delay at several values of rho with mu fixed,
//! plus the log-log slope of delay against `1 / (1 - rho)`.

use std::io::{self, Write};

use serde::Serialize;

use crate::analytics::{loglog_slope, ScalingPoint, StatsReport};
use crate::batch;
use crate::error::Result;
use crate::sim::{run, SimConfig};

/// Load grid of the reference experiment at `mu = 0.5`, with the number of
/// arrival slots used at each point.
pub const REFERENCE_GRID: [(f64, u64); 5] = [
    (0.95, 500_000),
    (0.97, 500_000),
    (0.98, 500_000),
    (0.99, 1_000_000),
    (0.995, 1_000_000),
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub rho: f64,
    pub slots: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub mu: f64,
    pub points: Vec<SweepPoint>,
    pub seeds: Vec<u64>,
    /// Drain, assert level and mode are taken from here; rates, slots and
    /// seed are overwritten per job.
    pub template: SimConfig,
    pub warmup: u64,
}

impl SweepSpec {
    pub fn new(mu: f64, points: Vec<SweepPoint>, seeds: Vec<u64>) -> Self {
        Self {
            mu,
            points,
            seeds,
            template: SimConfig::new(0.0, mu, 0, 0),
            warmup: 0,
        }
    }

    fn jobs(&self) -> Vec<(f64, SimConfig)> {
        let mut jobs = Vec::new();
        for p in &self.points {
            for &seed in &self.seeds {
                let mut cfg = self.template.clone();
                cfg.lambda = p.rho * self.mu;
                cfg.mu = self.mu;
                cfg.slots = p.slots;
                cfg.seed = seed;
                cfg.record_trace = false;
                jobs.push((p.rho, cfg));
            }
        }
        jobs
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub rho: f64,
    pub seed: u64,
    pub report: StatsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub mu: f64,
    /// One row per (rho, seed), sorted.
    pub rows: Vec<SweepRow>,
    /// Seed-averaged delay per rho, ascending.
    pub points: Vec<ScalingPoint>,
    /// `None` when fewer than two usable points exist.
    pub slope: Option<f64>,
}

/// Runs the sweep with the real simulator.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let warmup = spec.warmup;
    run_sweep_with(spec, |cfg| StatsReport::from_run(&run(cfg)?, warmup))
}

/// Runs the sweep with an arbitrary per-job runner. Jobs execute through
/// [`batch::map`]; results are merged in `(rho, seed)` order.
pub fn run_sweep_with<F>(spec: &SweepSpec, runner: F) -> Result<SweepResult>
where
    F: Fn(&SimConfig) -> Result<StatsReport> + Sync + Send,
{
    let jobs = spec.jobs();
    let reports = batch::map(jobs.clone(), |(_, cfg)| runner(&cfg));
    let mut rows = Vec::with_capacity(jobs.len());
    for ((rho, cfg), rep) in jobs.iter().zip(reports) {
        rows.push(SweepRow {
            rho: *rho,
            seed: cfg.seed,
            report: rep?,
        });
    }
    rows.sort_by(|a, b| a.rho.total_cmp(&b.rho).then(a.seed.cmp(&b.seed)));

    let mut points: Vec<ScalingPoint> = Vec::new();
    for p in &spec.points {
        let delays: Vec<f64> = rows
            .iter()
            .filter(|r| r.rho == p.rho)
            .map(|r| r.report.stats.mean_delay_avg)
            .collect();
        if !delays.is_empty() {
            let mean = delays.iter().sum::<f64>() / delays.len() as f64;
            points.push(ScalingPoint::new(p.rho, mean));
        }
    }
    points.sort_by(|a, b| a.rho.total_cmp(&b.rho));
    let slope = loglog_slope(&points).ok();
    Ok(SweepResult {
        mu: spec.mu,
        rows,
        points,
        slope,
    })
}

/// Sweep table as CSV with the fitted slope in a trailing comment line.
pub fn write_sweep_csv<W: Write>(mut w: W, result: &SweepResult) -> io::Result<()> {
    writeln!(
        w,
        "rho,lambda,mu,x,mean_delay_rx1,mean_delay_rx2,mean_delay_rx3,mean_delay_avg,mean_queue,slots,seed"
    )?;
    for row in &result.rows {
        let s = &row.report.stats;
        let d = |r: usize| s.mean_delay.get(r).copied().unwrap_or(f64::NAN);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.rho,
            row.report.config.lambda,
            row.report.config.mu,
            1.0 / (1.0 - row.rho),
            d(0),
            d(1),
            d(2),
            s.mean_delay_avg,
            s.mean_queue,
            row.report.config.slots,
            row.seed
        )?;
    }
    match result.slope {
        Some(slope) => writeln!(w, "# loglog_slope={slope} points={}", result.points.len()),
        None => writeln!(w, "# loglog_slope=NA points={}", result.points.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::DelayStats;
    use crate::monitor::Violations;
    use crate::sim::RNG_NAME;

    fn synthetic(cfg: &SimConfig) -> Result<StatsReport> {
        // Delay exactly 4 / (1 - rho), independent of seed.
        let d = 4.0 / (1.0 - cfg.rho());
        Ok(StatsReport {
            schema_version: 1,
            generator: RNG_NAME,
            config: cfg.clone(),
            rho: cfg.rho(),
            warmup: 0,
            total_slots: cfg.slots,
            stats: DelayStats {
                packets: 1,
                censored: 0,
                mean_delay: vec![d; 3],
                mean_delay_avg: d,
                mean_queue: 0.0,
                max_queue: 0,
            },
            single_receiver_bound: None,
            violations: Violations::default(),
        })
    }

    #[test]
    fn synthetic_runner_gives_exact_slope() {
        let spec = SweepSpec::new(
            0.5,
            vec![SweepPoint { rho: 0.9, slots: 10 }, SweepPoint { rho: 0.5, slots: 10 }],
            vec![3, 1],
        );
        let res = run_sweep_with(&spec, synthetic).unwrap();
        assert!((res.slope.unwrap() - 1.0).abs() < 1e-12);
        let order: Vec<(f64, u64)> = res.rows.iter().map(|r| (r.rho, r.seed)).collect();
        assert_eq!(order, vec![(0.5, 1), (0.5, 3), (0.9, 1), (0.9, 3)]);
        assert_eq!(res.points.len(), 2);

        let mut csv = Vec::new();
        write_sweep_csv(&mut csv, &res).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 6);
        let footer = text.lines().last().unwrap();
        let slope: f64 = footer["# loglog_slope=".len()..].split(' ').next().unwrap().parse().unwrap();
        assert!((slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_has_no_slope() {
        let spec = SweepSpec::new(0.5, vec![SweepPoint { rho: 0.9, slots: 10 }], vec![1]);
        assert_eq!(run_sweep_with(&spec, synthetic).unwrap().slope, None);
    }

    #[test]
    fn reference_grid_values() {
        let rhos: Vec<f64> = REFERENCE_GRID.iter().map(|g| g.0).collect();
        assert_eq!(rhos, vec![0.95, 0.97, 0.98, 0.99, 0.995]);
        assert_eq!(REFERENCE_GRID[2].1, 500_000);
        assert_eq!(REFERENCE_GRID[3].1, 1_000_000);
    }
}
