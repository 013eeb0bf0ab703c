//! Delay and queue statistics, the single-receiver closed forms, and the
//! log-log slope used to read off delay growth as the load approaches one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::monitor::Violations;
use crate::sim::{PacketRecord, RunOutput, SimConfig, RNG_NAME};

pub const SCHEMA_VERSION: u32 = 1;

/// Delay and queue figures for one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelayStats {
    /// Packets that entered the average.
    pub packets: usize,
    /// Packets left out because some receiver never decoded them.
    pub censored: usize,
    /// Mean decoding delay per receiver, in slots.
    pub mean_delay: Vec<f64>,
    /// Arithmetic mean of `mean_delay`.
    pub mean_delay_avg: f64,
    pub mean_queue: f64,
    pub max_queue: u32,
}

/// Averages decoding delay over packets that arrived after `warmup` and
/// queue length over `queue`.
pub fn summarize(
    packets: &[PacketRecord],
    receivers: usize,
    queue: &[u32],
    warmup: u64,
) -> Result<DelayStats> {
    let mut sums = vec![0u64; receivers];
    let mut counted = 0usize;
    let mut censored = 0usize;
    for p in packets.iter().filter(|p| p.arrival_slot > warmup) {
        let delays: Option<Vec<u64>> = (0..receivers).map(|r| p.delay(r)).collect();
        match delays {
            Some(d) => {
                counted += 1;
                for (s, x) in sums.iter_mut().zip(d) {
                    *s += x;
                }
            }
            None => censored += 1,
        }
    }
    if counted == 0 {
        return Err(Error::NoPackets);
    }
    let mean_delay: Vec<f64> = sums.iter().map(|&s| s as f64 / counted as f64).collect();
    let mean_delay_avg = mean_delay.iter().sum::<f64>() / receivers as f64;
    let mean_queue = if queue.is_empty() {
        0.0
    } else {
        queue.iter().map(|&q| q as f64).sum::<f64>() / queue.len() as f64
    };
    Ok(DelayStats {
        packets: counted,
        censored,
        mean_delay,
        mean_delay_avg,
        mean_queue,
        max_queue: queue.iter().copied().max().unwrap_or(0),
    })
}

/// Steady-state mean queue of the single-receiver ARQ chain,
/// `rho (1 - mu) / (1 - rho)`.
pub fn analytic_queue(rho: f64, mu: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} outside (0, 1)")));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidParameter(format!("mu = {mu} outside (0, 1]")));
    }
    Ok(rho * (1.0 - mu) / (1.0 - rho))
}

/// Mean per-packet delay of the same chain via Little's law, with
/// `lambda = rho * mu`.
pub fn analytic_delay(rho: f64, mu: f64) -> Result<f64> {
    Ok(analytic_queue(rho, mu)? / (rho * mu))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub rho: f64,
    /// `1 / (1 - rho)`.
    pub x: f64,
    pub delay: f64,
}

impl ScalingPoint {
    pub fn new(rho: f64, delay: f64) -> Self {
        Self {
            rho,
            x: 1.0 / (1.0 - rho),
            delay,
        }
    }
}

/// Least-squares slope of `ln(delay)` against `ln(x)`.
pub fn loglog_slope(points: &[ScalingPoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("slope needs at least two points".into()));
    }
    if points.iter().any(|p| !(p.x > 0.0 && p.delay > 0.0)) {
        return Err(Error::InvalidParameter("slope needs positive x and delay".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.delay.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("slope needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LowerBound {
    pub mean_queue: f64,
    pub mean_delay: f64,
}

/// Report written for a single run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsReport {
    pub schema_version: u32,
    pub generator: &'static str,
    pub config: SimConfig,
    pub rho: f64,
    pub warmup: u64,
    pub total_slots: u64,
    #[serde(flatten)]
    pub stats: DelayStats,
    /// Single-receiver ARQ figures at the same load, when the load is below one.
    pub single_receiver_bound: Option<LowerBound>,
    pub violations: Violations,
}

impl StatsReport {
    pub fn from_run(out: &RunOutput, warmup: u64) -> Result<Self> {
        let stats = summarize(&out.packets, out.receivers(), out.arrival_phase_queue(warmup), warmup)?;
        let rho = out.config.rho();
        let single_receiver_bound = match (
            analytic_queue(rho, out.config.mu),
            analytic_delay(rho, out.config.mu),
        ) {
            (Ok(mean_queue), Ok(mean_delay)) => Some(LowerBound {
                mean_queue,
                mean_delay,
            }),
            _ => None,
        };
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            generator: RNG_NAME,
            config: out.config.clone(),
            rho,
            warmup,
            total_slots: out.queue.len() as u64,
            stats,
            single_receiver_bound,
            violations: out.violations.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(arrival: u64, decodes: [u64; 3]) -> PacketRecord {
        let mut p = PacketRecord::new(1, arrival);
        p.decode_slot = decodes.map(Some);
        p
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[packet(5, [5, 7, 6])], 3, &[], 0).unwrap();
        assert_eq!(s.mean_delay, vec![0.0, 2.0, 1.0]);
        assert_eq!(s.mean_delay_avg, 1.0);

        let s = summarize(&[packet(1, [1, 1, 1]), packet(2, [2, 2, 2])], 3, &[0, 0], 0).unwrap();
        assert_eq!(s.mean_delay_avg, 0.0);

        let s = summarize(&[packet(1, [3, 1, 1]), packet(2, [6, 2, 2])], 3, &[1, 2, 0], 0).unwrap();
        assert_eq!(s.mean_delay[0], 3.0);
        assert_eq!(s.mean_queue, 1.0);
        assert_eq!(s.max_queue, 2);
    }

    #[test]
    fn summarize_censors_and_warms_up() {
        let mut open = PacketRecord::new(2, 4);
        open.decode_slot[0] = Some(5);
        let s = summarize(&[packet(1, [2, 2, 2]), open.clone(), packet(9, [9, 10, 11])], 3, &[], 0).unwrap();
        assert_eq!((s.packets, s.censored), (2, 1));
        let s = summarize(&[packet(1, [2, 2, 2]), packet(9, [9, 10, 11])], 3, &[], 5).unwrap();
        assert_eq!(s.packets, 1);
        assert_eq!(s.mean_delay_avg, 1.0);
        assert!(matches!(summarize(&[open], 3, &[], 0), Err(Error::NoPackets)));
        assert!(matches!(summarize(&[], 3, &[], 0), Err(Error::NoPackets)));
    }

    #[test]
    fn closed_forms() {
        assert!((analytic_queue(0.8, 0.5).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(analytic_queue(0.7, 1.0).unwrap(), 0.0);
        assert!((analytic_queue(0.5, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((analytic_delay(0.8, 0.5).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(analytic_delay(0.3, 1.0).unwrap(), 0.0);
        assert!((analytic_delay(0.5, 0.5).unwrap() - 2.0).abs() < 1e-12);
        assert!(analytic_queue(1.0, 0.5).is_err());
        assert!(analytic_delay(1.3, 0.5).is_err());
    }

    #[test]
    fn closed_form_grows_without_bound() {
        let mut prev = 0.0;
        for k in 1..1000 {
            let q = analytic_queue(k as f64 / 1000.0, 0.5).unwrap();
            assert!(q > prev);
            prev = q;
        }
        assert!(prev > 400.0);
    }

    #[test]
    fn slope_examples() {
        let line: Vec<_> = [0.5, 0.8, 0.9, 0.95]
            .iter()
            .map(|&r| ScalingPoint::new(r, 3.7 / (1.0 - r)))
            .collect();
        assert!((loglog_slope(&line).unwrap() - 1.0).abs() < 1e-12);

        let quad: Vec<_> = [0.5, 0.8, 0.9]
            .iter()
            .map(|&r| ScalingPoint::new(r, 2.0 / (1.0 - r).powi(2)))
            .collect();
        assert!((loglog_slope(&quad).unwrap() - 2.0).abs() < 1e-12);

        let two = [
            ScalingPoint { rho: 0.9, x: 10.0, delay: 20.0 },
            ScalingPoint { rho: 0.99, x: 100.0, delay: 180.0 },
        ];
        let expect = 9f64.ln() / 10f64.ln();
        assert!((loglog_slope(&two).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.954).abs() < 1e-3);
    }

    #[test]
    fn slope_rejects_bad_input() {
        assert!(loglog_slope(&[ScalingPoint::new(0.5, 1.0)]).is_err());
        assert!(loglog_slope(&[ScalingPoint::new(0.5, 1.0), ScalingPoint::new(0.6, 0.0)]).is_err());
        assert!(loglog_slope(&[ScalingPoint::new(0.5, 1.0), ScalingPoint::new(0.5, 2.0)]).is_err());
    }
}
