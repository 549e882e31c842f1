//! Monte Carlo estimators of `theta = E[V(X)]` and the option value
//! `e^{-qT} theta`.
//!
//! * basic: `R` i.i.d. paths.
//! * partitioned: one stratum per `r`-bit prefix, `R_m = R * P(D_m)` draws
//!   in stratum `m` (or `R_m = R` for the equal-allocation variant), with the
//!   prefix fixed and the remaining `N - r` steps sampled.
//! * shared: `R` suffixes drawn once and completed with every prefix.
//!
//! Random streams are ChaCha8 keyed by `(seed, repetition)` with the stream
//! id set to the stratum index, so results do not depend on how strata or
//! repetitions are scheduled onto threads.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::{run_indexed, ValuationRequest};
use crate::model::TreeParams;
use crate::paths::{block_probability, make_partition, BernoulliPath, PathPartition};
use crate::payoffs::PathPayoff;
use crate::sum::{kahan_sum, KahanSum};

/// Suffixes evaluated per task by the shared-sample estimator.
const SHARED_CHUNK: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    /// Total sample size `R` (per stratum for the equal-allocation variant).
    pub samples: u64,
    /// Stratum count `M`; a power of two for the stratified estimators.
    pub strata: u64,
    pub seed: u64,
    /// Repetitions for averaging studies.
    pub reps: u64,
    /// Index of the repetition this configuration draws for.
    pub rep: u64,
    /// OS threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
}

impl McConfig {
    pub fn new(samples: u64, strata: u64, seed: u64) -> Self {
        Self {
            samples,
            strata,
            seed,
            reps: 1,
            rep: 0,
            threads: None,
        }
    }

    pub fn with_reps(mut self, reps: u64) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn for_rep(mut self, rep: u64) -> Self {
        self.rep = rep;
        self
    }

    fn thread_count(&self) -> usize {
        self.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Basic,
    Partitioned,
    Shared,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Basic => "basic",
            Method::Partitioned => "partitioned",
            Method::Shared => "shared",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumEstimate {
    pub rank: u64,
    pub samples: u64,
    pub probability: f64,
    /// Mean payoff within the stratum, `theta_hat^(m)`.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// `e^{-qT} * theta_hat`.
    pub value: f64,
    /// Estimated variance of `value`, i.e. `e^{-2qT}` times the theta-scale one.
    pub variance: f64,
    pub std_error: f64,
    /// Total paths drawn.
    pub samples: u64,
    pub method: Method,
    pub seed: Option<u64>,
    pub theta: f64,
    pub theta_variance: f64,
    pub per_stratum: Option<Vec<StratumEstimate>>,
}

impl Estimate {
    fn from_theta(
        theta: f64,
        theta_variance: f64,
        discount: f64,
        samples: u64,
        method: Method,
        seed: Option<u64>,
    ) -> Self {
        let variance = discount * discount * theta_variance;
        Self {
            value: discount * theta,
            variance,
            std_error: variance.sqrt(),
            samples,
            method,
            seed,
            theta,
            theta_variance,
            per_stratum: None,
        }
    }

    /// Zero-variance estimate wrapping an exact value.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            variance: 0.0,
            std_error: 0.0,
            samples: 0,
            method: Method::Exact,
            seed: None,
            theta: f64::NAN,
            theta_variance: 0.0,
            per_stratum: None,
        }
    }
}

/// Random stream for `(seed, rep, stream)`.
pub fn stream_rng(seed: u64, rep: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&rep.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Draws steps `first_step..first_step + len` (1-based), packed with the
/// earliest step in the most significant bit.
#[inline]
pub fn sample_suffix<R: Rng + ?Sized>(params: &TreeParams, first_step: u32, len: u32, rng: &mut R) -> u64 {
    let probs = &params.up_probs[(first_step - 1) as usize..(first_step - 1 + len) as usize];
    probs
        .iter()
        .fold(0u64, |acc, &p| (acc << 1) | u64::from(rng.gen::<f64>() < p))
}

/// A path with step `t` up with probability `p_t`, independently.
pub fn sample_path<R: Rng + ?Sized>(params: &TreeParams, rng: &mut R) -> BernoulliPath {
    let n = params.steps();
    BernoulliPath::new(sample_suffix(params, 1, n, rng), n)
}

/// Mean and sum of squared deviations.
fn mean_and_ss(values: &[f64]) -> (f64, f64) {
    let mean = kahan_sum(values.iter().copied()) / values.len() as f64;
    let ss = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, ss)
}

/// Payoffs of `count` paths whose first `prefix_bits` steps equal `prefix`.
fn draw_stratum<P: PathPayoff, R: Rng>(
    req: &ValuationRequest<P>,
    prefix: u64,
    prefix_bits: u32,
    count: u64,
    rng: &mut R,
) -> Vec<f64> {
    let n = req.steps();
    let suffix_bits = n - prefix_bits;
    (0..count)
        .map(|_| {
            let suffix = if suffix_bits == 0 {
                0
            } else {
                sample_suffix(&req.params, prefix_bits + 1, suffix_bits, rng)
            };
            req.payoff_of(BernoulliPath::join(prefix, suffix, suffix_bits, n))
        })
        .collect()
}

/// `theta_hat = (1/R) sum V(x_i)`, variance estimate `(1/R^2) sum (V(x_i) - theta_hat)^2`.
pub fn estimate_basic<P: PathPayoff>(req: &ValuationRequest<P>, cfg: &McConfig) -> Result<Estimate> {
    req.check()?;
    if cfg.samples < 2 {
        return Err(Error::SampleSizeTooSmall(cfg.samples, 2));
    }
    let mut rng = stream_rng(cfg.seed, cfg.rep, 0);
    let values = draw_stratum(req, 0, 0, cfg.samples, &mut rng);
    let (theta, ss) = mean_and_ss(&values);
    let r = cfg.samples as f64;
    Ok(Estimate::from_theta(
        theta,
        ss / (r * r),
        req.discount(),
        cfg.samples,
        Method::Basic,
        Some(cfg.seed),
    ))
}

fn stratified_partition<P: PathPayoff>(req: &ValuationRequest<P>, strata: u64) -> Result<(PathPartition, Vec<f64>)> {
    if !strata.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(strata));
    }
    let partition = make_partition(req.steps(), strata)?;
    let probs = (0..strata)
        .map(|m| block_probability(&req.params, &partition, m))
        .collect::<Result<Vec<_>>>()?;
    Ok((partition, probs))
}

/// Proportional allocation `R_m = R * P(D_m)`, rounded by largest remainder
/// so that `sum R_m = R`, with at least one draw in every stratum of
/// positive probability.
pub fn allocate_strata(partition: &PathPartition, params: &TreeParams, samples: u64) -> Result<Vec<u64>> {
    let probs = (0..partition.workers())
        .map(|m| block_probability(params, partition, m))
        .collect::<Result<Vec<_>>>()?;
    allocate_by_probability(&probs, samples)
}

fn allocate_by_probability(probs: &[f64], samples: u64) -> Result<Vec<u64>> {
    let positive = probs.iter().filter(|&&p| p > 0.0).count() as u64;
    if samples < positive {
        return Err(Error::InfeasibleAllocation {
            samples,
            strata: positive,
        });
    }
    let raw: Vec<f64> = probs.iter().map(|&p| samples as f64 * p).collect();
    let mut alloc: Vec<i64> = raw.iter().map(|r| r.floor() as i64).collect();
    let mut remaining = samples as i64 - alloc.iter().sum::<i64>();

    let mut order: Vec<usize> = (0..probs.len()).filter(|&m| probs[m] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &m in order.iter().cycle().take(remaining.max(0) as usize) {
        alloc[m] += 1;
    }
    remaining = remaining.min(0);

    let largest = |alloc: &[i64]| {
        (0..alloc.len())
            .max_by(|&a, &b| alloc[a].cmp(&alloc[b]).then(b.cmp(&a)))
            .unwrap_or(0)
    };
    // Rounding overshoot from probabilities summing slightly above one.
    while remaining < 0 {
        let m = largest(&alloc);
        alloc[m] -= 1;
        remaining += 1;
    }
    for m in 0..probs.len() {
        if probs[m] > 0.0 && alloc[m] == 0 {
            let donor = largest(&alloc);
            alloc[donor] -= 1;
            alloc[m] = 1;
        }
    }
    Ok(alloc.into_iter().map(|a| a as u64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Allocation {
    Proportional,
    Equal,
}

fn estimate_stratified<P: PathPayoff>(
    req: &ValuationRequest<P>,
    cfg: &McConfig,
    allocation: Allocation,
) -> Result<Estimate> {
    req.check()?;
    let (partition, probs) = stratified_partition(req, cfg.strata)?;
    let counts = match allocation {
        Allocation::Proportional => {
            if cfg.samples < cfg.strata {
                return Err(Error::SampleSizeTooSmall(cfg.samples, cfg.strata));
            }
            allocate_by_probability(&probs, cfg.samples)?
        }
        Allocation::Equal => {
            if cfg.samples < 1 {
                return Err(Error::SampleSizeTooSmall(cfg.samples, 1));
            }
            probs.iter().map(|&p| if p > 0.0 { cfg.samples } else { 0 }).collect()
        }
    };
    let prefix_bits = partition.prefix_bits();

    // (mean, sum of squared deviations) per stratum
    let moments = run_indexed(cfg.strata, cfg.thread_count(), |m| {
        let count = counts[m as usize];
        if count == 0 {
            return Ok((0.0, 0.0));
        }
        let mut rng = stream_rng(cfg.seed, cfg.rep, m);
        Ok(mean_and_ss(&draw_stratum(req, m, prefix_bits, count, &mut rng)))
    })?;

    let theta = kahan_sum(moments.iter().zip(&probs).map(|(&(mean, _), &p)| mean * p));
    let theta_variance = match allocation {
        Allocation::Proportional => {
            let r = cfg.samples as f64;
            kahan_sum(moments.iter().map(|&(_, ss)| ss)) / (r * r)
        }
        // sum_m P_m^2 * SS_m / R_m^2; the proportional formula assumes R_m = R P_m.
        Allocation::Equal => kahan_sum(moments.iter().zip(&probs).zip(&counts).filter(|(_, &c)| c > 0).map(
            |((&(_, ss), &p), &c)| {
                let c = c as f64;
                p * p * ss / (c * c)
            },
        )),
    };

    let mut estimate = Estimate::from_theta(
        theta,
        theta_variance,
        req.discount(),
        counts.iter().sum(),
        Method::Partitioned,
        Some(cfg.seed),
    );
    estimate.per_stratum = Some(
        (0..cfg.strata)
            .map(|m| StratumEstimate {
                rank: m,
                samples: counts[m as usize],
                probability: probs[m as usize],
                mean: moments[m as usize].0,
            })
            .collect(),
    );
    Ok(estimate)
}

/// Partitioned estimator `theta_s = sum_m theta_s^(m) P(D_m)` with
/// proportional allocation.
pub fn estimate_partitioned<P: PathPayoff>(req: &ValuationRequest<P>, cfg: &McConfig) -> Result<Estimate> {
    estimate_stratified(req, cfg, Allocation::Proportional)
}

/// Partitioned estimator with `R_m = R` draws in every stratum (`M * R` total).
pub fn estimate_partitioned_equal<P: PathPayoff>(req: &ValuationRequest<P>, cfg: &McConfig) -> Result<Estimate> {
    estimate_stratified(req, cfg, Allocation::Equal)
}

/// Shared-sample estimator: `R` suffixes `y_i`, each completed with every
/// prefix `z_m`; `theta~ = (1/R) sum_i sum_m V(z_m, y_i) P(D_m)`.
pub fn estimate_shared<P: PathPayoff>(req: &ValuationRequest<P>, cfg: &McConfig) -> Result<Estimate> {
    req.check()?;
    if cfg.samples < 2 {
        return Err(Error::SampleSizeTooSmall(cfg.samples, 2));
    }
    let (partition, probs) = stratified_partition(req, cfg.strata)?;
    let n = req.steps();
    let prefix_bits = partition.prefix_bits();
    let suffix_bits = n - prefix_bits;

    let mut rng = stream_rng(cfg.seed, cfg.rep, 0);
    let suffixes: Vec<u64> = (0..cfg.samples)
        .map(|_| {
            if suffix_bits == 0 {
                0
            } else {
                sample_suffix(&req.params, prefix_bits + 1, suffix_bits, &mut rng)
            }
        })
        .collect();

    let chunks = cfg.samples.div_ceil(SHARED_CHUNK);
    let inner: Vec<f64> = run_indexed(chunks, cfg.thread_count(), |c| {
        let lo = (c * SHARED_CHUNK) as usize;
        let hi = ((c + 1) * SHARED_CHUNK).min(cfg.samples) as usize;
        Ok(suffixes[lo..hi]
            .iter()
            .map(|&y| {
                let mut acc = KahanSum::new();
                for (m, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        acc.add(req.payoff_of(BernoulliPath::join(m as u64, y, suffix_bits, n)) * p);
                    }
                }
                acc.value()
            })
            .collect::<Vec<_>>())
    })?
    .into_iter()
    .flatten()
    .collect();

    let (theta, ss) = mean_and_ss(&inner);
    let r = cfg.samples as f64;
    Ok(Estimate::from_theta(
        theta,
        ss / (r * r),
        req.discount(),
        cfg.samples,
        Method::Shared,
        Some(cfg.seed),
    ))
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let (_, ss) = mean_and_ss(values);
    ss / (values.len() - 1) as f64
}

/// Averages over repetitions, as in a repeated-experiment study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub reps: u64,
    pub mean_estimate: f64,
    pub mean_variance: f64,
    /// Sample variance of the estimates across repetitions.
    pub empirical_variance: f64,
    pub estimates: Vec<Estimate>,
}

impl StudySummary {
    pub fn from_estimates(estimates: Vec<Estimate>) -> Self {
        let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
        let n = estimates.len().max(1) as f64;
        Self {
            reps: estimates.len() as u64,
            mean_estimate: kahan_sum(values.iter().copied()) / n,
            mean_variance: kahan_sum(estimates.iter().map(|e| e.variance)) / n,
            empirical_variance: sample_variance(&values),
            estimates,
        }
    }
}

/// Runs `estimator` for repetitions `0..cfg.reps`. Repetitions are spread
/// over threads; each one runs single-threaded on its own streams.
pub fn repeat<F>(cfg: &McConfig, estimator: F) -> Result<StudySummary>
where
    F: Fn(&McConfig) -> Result<Estimate> + Sync + Send,
{
    if cfg.reps == 0 {
        return Err(Error::InvalidInput("reps must be at least 1".into()));
    }
    let threads = cfg.thread_count();
    let estimates = run_indexed(cfg.reps, threads, |rep| {
        let inner = if threads > 1 {
            cfg.for_rep(rep).with_threads(1)
        } else {
            cfg.for_rep(rep)
        };
        estimator(&inner)
    })?;
    Ok(StudySummary::from_estimates(estimates))
}
