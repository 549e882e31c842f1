//! Wall-clock timing over `(N, M)` grids with speedup `S_M = T_1 / T_M` and
//! efficiency `E_M = S_M / M`.
//!
//! When the single-worker run for some `N` is unavailable, the smallest
//! measured worker count `M0` becomes the reference and is credited with
//! speedup `M0`, i.e. `S_M = M0 * T_M0 / T_M`.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::exact::{value_exact_parallel, ValuationRequest};
use crate::model::{derive_crr, MarketInputs};
use crate::payoffs::PayoffKind;

pub const CSV_HEADER: &str = "N,M,wall_seconds,speedup,efficiency,baseline_M";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub n: u32,
    pub m: u64,
    /// Median wall time; `None` when the run was skipped.
    pub wall_seconds: Option<f64>,
    pub speedup: Option<f64>,
    pub efficiency: Option<f64>,
    pub baseline_m: u64,
    /// More workers than hardware threads.
    pub oversubscribed: bool,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        0.5 * (xs[mid - 1] + xs[mid])
    }
}

pub fn hardware_threads() -> u64 {
    std::thread::available_parallelism()
        .map(|n| n.get() as u64)
        .unwrap_or(1)
}

/// Times `workload(N, M)` over the grid. The workload returns the measured
/// duration, or `None` if that point is infeasible and should be skipped.
/// For each `N` the worker counts must be ascending.
pub fn run_bench_with<F>(grid: &[(u32, u64)], repetitions: usize, mut workload: F) -> Result<Vec<BenchRecord>>
where
    F: FnMut(u32, u64) -> Result<Option<Duration>>,
{
    if repetitions == 0 {
        return Err(Error::InvalidInput("repetitions must be at least 1".into()));
    }
    let cores = hardware_threads();
    let mut depths: Vec<u32> = Vec::new();
    for &(n, _) in grid {
        if !depths.contains(&n) {
            depths.push(n);
        }
    }

    let mut records = Vec::with_capacity(grid.len());
    for n in depths {
        let workers: Vec<u64> = grid.iter().filter(|g| g.0 == n).map(|g| g.1).collect();
        if workers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "worker counts for N={n} must be ascending"
            )));
        }
        let mut timed = Vec::with_capacity(workers.len());
        for &m in &workers {
            let mut samples = Vec::with_capacity(repetitions);
            for _ in 0..repetitions {
                match workload(n, m)? {
                    Some(d) => samples.push(d.as_secs_f64()),
                    None => break,
                }
            }
            let wall = (samples.len() == repetitions).then(|| median(samples));
            timed.push((m, wall));
        }

        let baseline = timed.iter().find_map(|&(m, w)| w.map(|w| (m, w)));
        for (m, wall) in timed {
            let (speedup, efficiency, baseline_m) = match (baseline, wall) {
                (Some((m0, t0)), Some(t)) => {
                    let s = m0 as f64 * t0 / t;
                    (Some(s), Some(s / m as f64), m0)
                }
                (Some((m0, _)), None) => (None, None, m0),
                (None, _) => (None, None, m),
            };
            records.push(BenchRecord {
                n,
                m,
                wall_seconds: wall,
                speedup,
                efficiency,
                baseline_m,
                oversubscribed: m > cores,
            });
        }
    }
    Ok(records)
}

/// Times exact partitioned valuation of `payoff` for each grid point. Only
/// the valuation call is inside the timed region.
pub fn run_bench(
    grid: &[(u32, u64)],
    inputs: MarketInputs,
    payoff: PayoffKind,
    allow_large: bool,
    repetitions: usize,
) -> Result<Vec<BenchRecord>> {
    run_bench_with(grid, repetitions, |n, m| {
        let inputs = MarketInputs { steps: n, ..inputs };
        let params = derive_crr(&inputs)?;
        let req = ValuationRequest::new(inputs, params, payoff)
            .with_workers(m)
            .allow_large(allow_large);
        let start = Instant::now();
        match value_exact_parallel(&req) {
            Ok(out) => {
                let elapsed = start.elapsed();
                std::hint::black_box(out.value);
                Ok(Some(elapsed))
            }
            Err(Error::EnumerationTooLarge(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })
}

fn cell(x: Option<f64>, precision: usize) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:.precision$}"))
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let opt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            r.m,
            opt(r.wall_seconds),
            opt(r.speedup),
            opt(r.efficiency),
            r.baseline_m
        );
    }
    out
}

/// Aligned wall-time, speedup and efficiency tables, one row per `N`.
pub fn format_tables(records: &[BenchRecord]) -> String {
    let mut workers: Vec<u64> = records.iter().map(|r| r.m).collect();
    workers.sort_unstable();
    workers.dedup();
    let mut depths: Vec<u32> = records.iter().map(|r| r.n).collect();
    depths.dedup();

    let lookup = |n: u32, m: u64| records.iter().find(|r| r.n == n && r.m == m);
    let mut out = String::new();
    type Column = fn(&BenchRecord) -> Option<f64>;
    let sections: [(&str, Column, usize); 3] = [
        ("(a) Wall clock time in seconds", |r| r.wall_seconds, 3),
        ("(b) Observed speedup S_M", |r| r.speedup, 2),
        ("(c) Observed efficiency E_M", |r| r.efficiency, 2),
    ];
    for (title, field, precision) in sections {
        let _ = writeln!(out, "{title}");
        let _ = write!(out, "{:>4}", "N");
        for m in &workers {
            let label = if *m > hardware_threads() {
                format!("{m}*")
            } else {
                m.to_string()
            };
            let _ = write!(out, " {:>10}", format!("M={label}"));
        }
        out.push('\n');
        for &n in &depths {
            let _ = write!(out, "{n:>4}");
            for &m in &workers {
                let text = lookup(n, m).map_or_else(|| "".to_string(), |r| cell(field(r), precision));
                let _ = write!(out, " {text:>10}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    if records.iter().any(|r| r.oversubscribed) {
        let _ = writeln!(
            out,
            "* more workers than the {} available hardware threads",
            hardware_threads()
        );
    }
    out
}
