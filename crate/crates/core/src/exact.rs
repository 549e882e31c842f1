//! Exact expected value over all `2^N` Bernoulli paths.
//!
//! Three routes: a serial full enumeration, a rank-partitioned enumeration
//! whose per-worker partial values are reduced in ascending rank order, and
//! the leaf-weight binomial formula (European payoffs with constant `p`
//! only), which serves as an oracle for the other two.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{leaf_prices, MarketInputs, TreeParams};
use crate::paths::{iter_block, make_partition, path_probability, BernoulliPath};
use crate::payoffs::{PathPayoff, PayoffKind};
use crate::sum::{kahan_sum, KahanSum};

/// Depth above which full enumeration needs `allow_large`.
pub const LARGE_ENUMERATION_STEPS: u32 = 28;

/// Default cap on OS threads when the worker count is large.
pub const MAX_DEFAULT_THREADS: usize = 256;

#[derive(Debug, Clone)]
pub struct ValuationRequest<P = PayoffKind> {
    pub inputs: MarketInputs,
    pub params: TreeParams,
    pub payoff: P,
    /// Partition parameter `M`; independent of the thread count.
    pub workers: u64,
    /// Permit exact enumeration beyond `LARGE_ENUMERATION_STEPS`.
    pub allow_large: bool,
    /// OS threads; `None` runs up to `min(M, MAX_DEFAULT_THREADS)` at once.
    pub threads: Option<usize>,
}

impl<P: PathPayoff> ValuationRequest<P> {
    pub fn new(inputs: MarketInputs, params: TreeParams, payoff: P) -> Self {
        Self {
            inputs,
            params,
            payoff,
            workers: 1,
            allow_large: false,
            threads: None,
        }
    }

    pub fn with_workers(mut self, workers: u64) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn allow_large(mut self, allow: bool) -> Self {
        self.allow_large = allow;
        self
    }

    pub fn steps(&self) -> u32 {
        self.inputs.steps
    }

    pub fn discount(&self) -> f64 {
        self.inputs.discount_factor()
    }

    #[inline]
    pub fn payoff_of(&self, path: BernoulliPath) -> f64 {
        self.payoff
            .value(&self.params, self.inputs.spot, self.inputs.strike, path)
    }

    pub(crate) fn check(&self) -> Result<()> {
        self.inputs.validate()?;
        let n = self.inputs.steps as usize;
        if self.params.up_probs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: self.params.up_probs.len(),
            });
        }
        Ok(())
    }

    fn check_enumerable(&self) -> Result<()> {
        self.check()?;
        if self.inputs.steps > LARGE_ENUMERATION_STEPS && !self.allow_large {
            return Err(Error::EnumerationTooLarge(self.inputs.steps));
        }
        Ok(())
    }
}

/// Result of a partitioned exact valuation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactValuation {
    pub value: f64,
    /// Discounted partial value `V_m` of each rank.
    pub per_rank: Vec<f64>,
    pub paths_visited: u64,
}

/// `e^{-qT} * sum_x V_N(x) p(x)` over every path, in code order.
pub fn value_exact_serial<P: PathPayoff>(req: &ValuationRequest<P>) -> Result<f64> {
    req.check_enumerable()?;
    let n = req.steps();
    let mut acc = KahanSum::new();
    for code in 0..(1u64 << n) {
        let path = BernoulliPath::new(code, n);
        acc.add(path_probability(&req.params, path) * req.payoff_of(path));
    }
    Ok(req.discount() * acc.value())
}

/// Runs `f(0..tasks)` on a pool of `threads` OS threads; results in index order.
pub(crate) fn run_indexed<T, F>(tasks: u64, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let threads = threads.max(1);
    if threads == 1 {
        return (0..tasks).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| (0..tasks).into_par_iter().map(f).collect())
}

/// Rank-partitioned enumeration: each rank `m` computes
/// `V_m = e^{-qT} * sum_{x in B_m} p(x) V_N(x)`, then `V = sum_m V_m` in
/// ascending rank order.
pub fn value_exact_parallel<P: PathPayoff>(req: &ValuationRequest<P>) -> Result<ExactValuation> {
    req.check_enumerable()?;
    let partition = make_partition(req.steps(), req.workers)?;
    let discount = req.discount();
    let threads = req
        .threads
        .unwrap_or_else(|| (req.workers as usize).min(MAX_DEFAULT_THREADS));

    let partials = run_indexed(req.workers, threads, |rank| {
        let mut acc = KahanSum::new();
        let mut visited = 0u64;
        for path in iter_block(&partition, rank)? {
            acc.add(path_probability(&req.params, path) * req.payoff_of(path));
            visited += 1;
        }
        Ok((discount * acc.value(), visited))
    })?;

    let per_rank: Vec<f64> = partials.iter().map(|&(v, _)| v).collect();
    Ok(ExactValuation {
        value: kahan_sum(per_rank.iter().copied()),
        paths_visited: partials.iter().map(|&(_, c)| c).sum(),
        per_rank,
    })
}

/// `ln C(N, i)` for `i = 0..=N`, by the iterative ratio.
fn log_binomials(n: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut current = 0.0f64;
    out.push(current);
    for i in 0..n {
        current += f64::from(n - i).ln() - f64::from(i + 1).ln();
        out.push(current);
    }
    out
}

/// `e^{-qT} * sum_i C(N,i) p^i (1-p)^(N-i) V_{N,i}` over the leaf row.
pub fn value_leaf_formula(req: &ValuationRequest<PayoffKind>) -> Result<f64> {
    req.check()?;
    if !req.payoff.is_path_independent() {
        return Err(Error::PathDependentPayoff(req.payoff));
    }
    let p = req.params.constant_prob().ok_or(Error::NonConstantProbs)?;
    let n = req.steps();
    let leaves = leaf_prices(&req.params, req.inputs.spot);
    let strike = req.inputs.strike;

    let weight = |i: u32, log_choose: f64| -> f64 {
        if p == 1.0 {
            f64::from(u8::from(i == n))
        } else if p == 0.0 {
            f64::from(u8::from(i == 0))
        } else {
            (log_choose + f64::from(i) * p.ln() + f64::from(n - i) * (1.0 - p).ln()).exp()
        }
    };

    let total = log_binomials(n)
        .into_iter()
        .zip(leaves)
        .enumerate()
        .map(|(i, (lc, price))| {
            let payoff = req.payoff.terminal(strike, price).unwrap_or_default();
            weight(i as u32, lc) * payoff
        });
    Ok(req.discount() * kahan_sum(total))
}
