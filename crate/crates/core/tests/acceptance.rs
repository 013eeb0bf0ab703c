//! Acceptance experiments. Each test prints one `ACCEPTANCE` line with the
//! measured figures before asserting, so `--nocapture` gives a summary table.

mod common;

use std::sync::OnceLock;

use bcast3_core::analytics::{analytic_delay, analytic_queue, summarize};
use bcast3_core::batch::run_many;
use bcast3_core::output::{write_packets_csv, write_trace_csv};
use bcast3_core::sweep::{run_sweep, SweepPoint, SweepSpec, REFERENCE_GRID};
use bcast3_core::{run, Mode, ReceiverState, SimConfig, Violations};
use common::{random_rows, Oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MU: f64 = 0.5;
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

// Relative tolerance for the ARQ closed-form comparison.
const ARQ_TOL: f64 = 0.05;
const SLOPE_RANGE: (f64, f64) = (0.8, 1.2);
const DRIFT_FACTOR: f64 = 2.0;

fn report(n: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {n} {name}: {verdict} ({detail})");
}

/// Violation counts per run of the innovation experiment, shared by the
/// criteria that read them.
fn innovation_runs() -> &'static Vec<(f64, u64, Violations)> {
    static RUNS: OnceLock<Vec<(f64, u64, Violations)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut configs = Vec::new();
        for rho in [0.5, 0.8, 0.9, 0.95] {
            for seed in SEEDS {
                configs.push(SimConfig::from_rho(rho, MU, 100_000, seed));
            }
        }
        let results = run_many(configs.clone(), |out| Ok(out.violations));
        configs
            .iter()
            .zip(results)
            .map(|(cfg, v)| (cfg.rho(), cfg.seed, v.expect("simulation failed")))
            .collect()
    })
}

fn total(runs: &[(f64, u64, Violations)]) -> Violations {
    let mut sum = Violations::default();
    for (_, _, v) in runs {
        sum.merge(v);
    }
    sum
}

#[test]
fn criterion_1_innovation_guarantee() {
    let runs = innovation_runs();
    let v = total(runs);
    let pass = v.non_innovative == 0 && v.idle_while_behind == 0;
    report(
        1,
        "innovation guarantee",
        pass,
        format!(
            "{} runs, non-innovative receptions {}, idle while behind {}",
            runs.len(),
            v.non_innovative,
            v.idle_while_behind
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_structural_invariants() {
    let v = total(innovation_runs());
    let pass = v.index_bound == 0 && v.undecoded_support == 0 && v.leader_decode == 0 && v.rank_seen == 0;
    report(
        2,
        "structural invariants",
        pass,
        format!(
            "index bound {}, undecoded in support {}, leader decode {}, rank vs seen {}",
            v.index_bound, v.undecoded_support, v.leader_decode, v.rank_seen
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_arq_closed_form() {
    let (lambda, mu) = (0.4, 0.5);
    let cfg = SimConfig::new(lambda, mu, 1_000_000, 11).with_mode(Mode::SingleRxArq);
    let out = run(&cfg).unwrap();
    let stats = summarize(&out.packets, 1, out.arrival_phase_queue(0), 0).unwrap();
    let rho = lambda / mu;
    let (q_ref, d_ref) = (analytic_queue(rho, mu).unwrap(), analytic_delay(rho, mu).unwrap());
    let q_err = (stats.mean_queue - q_ref).abs() / q_ref;
    let d_err = (stats.mean_delay_avg - d_ref).abs() / d_ref;
    let pass = q_err <= ARQ_TOL && d_err <= ARQ_TOL;
    report(
        3,
        "ARQ baseline vs closed form",
        pass,
        format!(
            "queue {:.4} vs {q_ref:.4} ({:.2}%), delay {:.4} vs {d_ref:.4} ({:.2}%)",
            stats.mean_queue,
            100.0 * q_err,
            stats.mean_delay_avg,
            100.0 * d_err
        ),
    );
    assert!(pass);
}

fn slope_check(n: u32, name: &str, grid: &[(f64, u64)], seeds: Vec<u64>) {
    let points = grid.iter().map(|&(rho, slots)| SweepPoint { rho, slots }).collect();
    let res = run_sweep(&SweepSpec::new(MU, points, seeds)).unwrap();
    let slope = res.slope.unwrap();
    let pass = (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&slope);
    let table: Vec<String> = res
        .points
        .iter()
        .map(|p| format!("rho {} delay {:.2}", p.rho, p.delay))
        .collect();
    report(n, name, pass, format!("slope {slope:.4}; {}", table.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_4_delay_scaling() {
    let grid = [(0.8, 500_000), (0.9, 500_000), (0.95, 500_000)];
    slope_check(4, "delay scaling", &grid, vec![1, 2, 3]);
}

#[test]
#[ignore = "several minutes; run with --ignored"]
fn criterion_4_delay_scaling_reference_grid() {
    slope_check(4, "delay scaling, reference grid", &REFERENCE_GRID, vec![1, 2, 3]);
}

#[test]
fn criterion_5_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = Vec::new();
    let mut nontrivial = 0;
    for case in 0..200 {
        let n = rng.gen_range(1..=10);
        let count = rng.gen_range(0..=8);
        let rows = random_rows(&mut rng, n, count);
        let oracle = Oracle::new(&rows, n);
        let rx = ReceiverState::with_rows(0, rows);
        let part = rx.class_partition(n as u32);
        let classes: Vec<_> = part.nontrivial().cloned().collect();
        let expected = oracle.nontrivial_classes();
        nontrivial += usize::from(!expected.is_empty());
        if rx.seen_set() != oracle.seen() {
            mismatches.push(format!("case {case}: seen"));
        }
        if classes != expected {
            mismatches.push(format!("case {case}: classes"));
        }
        if part.decoded != oracle.decoded() {
            mismatches.push(format!("case {case}: decoded class"));
        }
    }
    let pass = mismatches.is_empty();
    report(
        5,
        "oracle equivalence",
        pass,
        format!("200 states, {nontrivial} with nontrivial classes, mismatches {mismatches:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_queue_stability() {
    let cfg = SimConfig::from_rho(0.9, MU, 1_000_000, 6);
    let out = run(&cfg).unwrap();
    let q = out.arrival_phase_queue(0);
    let half = q.len() / 2;
    let mean = |s: &[u32]| s.iter().map(|&x| x as f64).sum::<f64>() / s.len() as f64;
    let (first, second) = (mean(&q[..half]), mean(&q[half..]));
    let ratio = second / first;
    let undecoded = out
        .packets
        .iter()
        .filter(|p| p.decode_slot.iter().any(Option::is_none))
        .count();
    let pass = (1.0 / DRIFT_FACTOR..=DRIFT_FACTOR).contains(&ratio) && undecoded == 0;
    report(
        6,
        "queue stability",
        pass,
        format!(
            "first half {first:.3}, second half {second:.3}, ratio {ratio:.3}, {} packets, undecoded after drain {undecoded}",
            out.packets.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_monitored_property() {
    let runs = innovation_runs();
    let v = total(runs);
    let flagged: Vec<String> = runs
        .iter()
        .filter(|(_, _, v)| v.both_nonleaders_mixed > 0)
        .map(|(rho, seed, v)| format!("rho {rho} seed {seed}: {}", v.both_nonleaders_mixed))
        .collect();
    let detail = format!(
        "slots with both non-leaders holding undecoded heard packets: {} over {} partition slots",
        v.both_nonleaders_mixed, v.partition_slots
    );
    if flagged.is_empty() {
        report(7, "monitored property", true, detail);
    } else {
        // A finding, not a build failure.
        println!("ACCEPTANCE 7 monitored property: COUNTEREXAMPLE ({detail}; {flagged:?})");
    }
}

fn csv_bytes(cfg: &SimConfig) -> (Vec<u8>, Vec<u8>) {
    let out = run(cfg).unwrap();
    let (mut trace, mut packets) = (Vec::new(), Vec::new());
    write_trace_csv(&mut trace, &out.trace).unwrap();
    write_packets_csv(&mut packets, &out.packets).unwrap();
    (trace, packets)
}

#[test]
fn criterion_8_determinism() {
    let configs = [
        SimConfig::from_rho(0.9, MU, 20_000, 8).with_trace(true),
        SimConfig::from_rho(0.5, 0.3, 20_000, 99).with_trace(true),
        SimConfig::new(0.4, MU, 20_000, 8).with_mode(Mode::SingleRxArq).with_trace(true),
    ];
    let mut differing = 0;
    for cfg in &configs {
        if csv_bytes(cfg) != csv_bytes(cfg) {
            differing += 1;
        }
    }
    let pass = differing == 0;
    report(
        8,
        "determinism",
        pass,
        format!("{} configs run twice, differing outputs {differing}", configs.len()),
    );
    assert!(pass);
}
