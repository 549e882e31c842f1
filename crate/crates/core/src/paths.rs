//! Bernoulli path encoding and the rank-prefix partition of path space.
//!
//! A path of depth `N` is stored as an integer code whose most significant
//! of the `N` used bits is step 1. A worker's prefix is therefore literally
//! the leading bits of the code: with `r` prefix bits, rank `m` owns the
//! codes `m * 2^(N-r) .. (m + 1) * 2^(N-r)`.

use crate::error::{Error, Result};
use crate::model::{TreeParams, MAX_STEPS};

/// An up/down sequence of length `N`; bit value 1 is an up move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BernoulliPath {
    code: u64,
    len: u32,
}

impl BernoulliPath {
    #[inline]
    pub fn new(code: u64, len: u32) -> Self {
        debug_assert!((1..=MAX_STEPS).contains(&len));
        debug_assert!(code < (1u64 << len));
        Self { code, len }
    }

    /// Builds a path from moves in step order (`bits[0]` is step 1).
    pub fn from_bits(bits: &[bool]) -> Self {
        let code = bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b));
        Self::new(code, bits.len() as u32)
    }

    /// Concatenates an `r`-bit prefix with an `(N - r)`-bit suffix.
    #[inline]
    pub fn join(prefix: u64, suffix: u64, suffix_len: u32, len: u32) -> Self {
        Self::new((prefix << suffix_len) | suffix, len)
    }

    #[inline]
    pub fn code(&self) -> u64 {
        self.code
    }

    #[inline]
    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Move at step `t`, `1 <= t <= N`.
    #[inline]
    pub fn bit(&self, step: u32) -> bool {
        (self.code >> (self.len - step)) & 1 == 1
    }

    /// Moves in step order.
    #[inline]
    pub fn bits(self) -> impl Iterator<Item = bool> {
        (1..=self.len).map(move |t| self.bit(t))
    }

    pub fn to_bits(self) -> Vec<bool> {
        self.bits().collect()
    }

    #[inline]
    pub fn count_ups(&self) -> u32 {
        self.code.count_ones()
    }
}

/// `p(x) = prod_t p_t^{x_t} (1 - p_t)^{1 - x_t}`, as a running product.
///
/// Underflows to zero only for extreme `p_t` at large `N`; at `N <= 62` with
/// every `p_t` in `(0.01, 0.99)` the smallest path probability is ~1e-124.
pub fn path_probability(params: &TreeParams, path: BernoulliPath) -> f64 {
    path.bits()
        .zip(&params.up_probs)
        .fold(1.0, |acc, (up, &p)| acc * if up { p } else { 1.0 - p })
}

/// Probability that the first `bits` steps equal `prefix`.
pub fn prefix_probability(params: &TreeParams, prefix: u64, bits: u32) -> f64 {
    (1..=bits).fold(1.0, |acc, t| {
        let up = (prefix >> (bits - t)) & 1 == 1;
        let p = params.up_probs[(t - 1) as usize];
        acc * if up { p } else { 1.0 - p }
    })
}

/// Assignment of prefix blocks to worker ranks.
///
/// With `M` a power of two, `r = log2 M` and rank `m` owns the single prefix
/// `m`. Otherwise `k = min(N, ceil(log2 M) + 4)` prefix bits give `2^k`
/// blocks dealt round-robin: block `b` goes to rank `b mod M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathPartition {
    depth: u32,
    workers: u64,
    prefix_bits: u32,
}

/// Extra prefix bits used when the worker count is not a power of two.
pub const OVERSUBSCRIPTION_BITS: u32 = 4;

pub fn make_partition(depth: u32, workers: u64) -> Result<PathPartition> {
    if depth == 0 || depth > MAX_STEPS {
        return Err(Error::InvalidInput(format!(
            "tree depth must lie in 1..={MAX_STEPS}, got {depth}"
        )));
    }
    if workers == 0 || workers > (1u64 << depth) {
        return Err(Error::InvalidWorkerCount { workers, depth });
    }
    let prefix_bits = if workers.is_power_of_two() {
        workers.trailing_zeros()
    } else {
        let ceil_log2 = 64 - (workers - 1).leading_zeros();
        (ceil_log2 + OVERSUBSCRIPTION_BITS).min(depth)
    };
    Ok(PathPartition {
        depth,
        workers,
        prefix_bits,
    })
}

impl PathPartition {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn workers(&self) -> u64 {
        self.workers
    }

    pub fn prefix_bits(&self) -> u32 {
        self.prefix_bits
    }

    pub fn suffix_bits(&self) -> u32 {
        self.depth - self.prefix_bits
    }

    pub fn block_count(&self) -> u64 {
        1u64 << self.prefix_bits
    }

    /// Paths per prefix block.
    pub fn block_len(&self) -> u64 {
        1u64 << self.suffix_bits()
    }

    fn check_rank(&self, rank: u64) -> Result<()> {
        if rank >= self.workers {
            return Err(Error::RankOutOfRange {
                rank,
                workers: self.workers,
            });
        }
        Ok(())
    }

    /// Prefix values owned by `rank`, ascending.
    pub fn owned_prefixes(&self, rank: u64) -> Result<impl Iterator<Item = u64>> {
        self.check_rank(rank)?;
        Ok((rank..self.block_count()).step_by(self.workers as usize))
    }

    pub fn blocks(&self, rank: u64) -> Result<Vec<u64>> {
        Ok(self.owned_prefixes(rank)?.collect())
    }

    /// Rank that owns the path with this code.
    pub fn rank_of(&self, code: u64) -> u64 {
        (code >> self.suffix_bits()) % self.workers
    }

    /// Number of paths in `rank`'s share.
    pub fn paths_owned(&self, rank: u64) -> Result<u64> {
        Ok(self.owned_prefixes(rank)?.count() as u64 * self.block_len())
    }
}

/// Every path owned by `rank`, once each, in ascending code order.
pub fn iter_block(partition: &PathPartition, rank: u64) -> Result<impl Iterator<Item = BernoulliPath>> {
    let depth = partition.depth;
    let suffix_bits = partition.suffix_bits();
    let block_len = partition.block_len();
    Ok(partition.owned_prefixes(rank)?.flat_map(move |prefix| {
        (0..block_len).map(move |suffix| BernoulliPath::join(prefix, suffix, suffix_bits, depth))
    }))
}

/// `P(D_m)`: probability that a random path lands in `rank`'s share.
pub fn block_probability(params: &TreeParams, partition: &PathPartition, rank: u64) -> Result<f64> {
    let bits = partition.prefix_bits;
    Ok(partition
        .owned_prefixes(rank)?
        .map(|prefix| prefix_probability(params, prefix, bits))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat(p: f64, n: usize) -> TreeParams {
        TreeParams::from_factors(1.0 / n as f64, 1.1, vec![p; n]).unwrap()
    }

    #[test]
    fn bit_order_puts_step_one_first() {
        let path = BernoulliPath::from_bits(&[true, false, false]);
        assert_eq!(path.code(), 4);
        assert!(path.bit(1));
        assert!(!path.bit(3));
        assert_eq!(BernoulliPath::new(1, 3).to_bits(), vec![false, false, true]);
    }

    #[test]
    fn encoding_round_trips_exhaustively() {
        for n in 1..=12u32 {
            for code in 0..(1u64 << n) {
                let path = BernoulliPath::new(code, n);
                assert_eq!(BernoulliPath::from_bits(&path.to_bits()), path);
            }
        }
    }

    #[test]
    fn path_probability_examples() {
        let half = flat(0.5, 3);
        for code in 0..8 {
            assert_eq!(path_probability(&half, BernoulliPath::new(code, 3)), 0.125);
        }
        let varying = TreeParams::from_factors(1.0, 1.1, vec![0.2, 0.5, 0.9]).unwrap();
        let p = path_probability(&varying, BernoulliPath::from_bits(&[true, false, true]));
        assert!((p - 0.09).abs() < 1e-15);

        let certain = flat(1.0, 3);
        assert_eq!(path_probability(&certain, BernoulliPath::new(7, 3)), 1.0);
        for code in 0..7 {
            assert_eq!(path_probability(&certain, BernoulliPath::new(code, 3)), 0.0);
        }
    }

    fn owned(partition: &PathPartition, rank: u64) -> Vec<u64> {
        iter_block(partition, rank).unwrap().map(|p| p.code()).collect()
    }

    #[test]
    fn two_workers_split_on_first_step() {
        let part = make_partition(3, 2).unwrap();
        assert_eq!(part.prefix_bits(), 1);
        assert_eq!(owned(&part, 0), vec![0, 1, 2, 3]);
        assert_eq!(owned(&part, 1), vec![4, 5, 6, 7]);
    }

    #[test]
    fn single_worker_owns_everything() {
        let part = make_partition(3, 1).unwrap();
        assert_eq!(owned(&part, 0), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn one_path_per_worker_when_r_equals_n() {
        let part = make_partition(2, 4).unwrap();
        for m in 0..4 {
            assert_eq!(owned(&part, m), vec![m]);
        }
    }

    #[test]
    fn three_workers_round_robin() {
        // Frozen from a brute-force enumeration of the round-robin deal.
        let part = make_partition(10, 3).unwrap();
        assert_eq!(part.block_count(), 64);
        let counts: Vec<usize> = (0..3).map(|m| part.blocks(m).unwrap().len()).collect();
        assert_eq!(counts, vec![22, 21, 21]);

        let mut seen = std::collections::HashSet::new();
        for m in 0..3 {
            for code in owned(&part, m) {
                assert!(seen.insert(code), "duplicate path {code}");
            }
        }
        assert_eq!(seen.len(), 1024);
    }

    #[test]
    fn eight_workers_cover_4096_paths() {
        let part = make_partition(12, 8).unwrap();
        let mut all: Vec<u64> = (0..8).flat_map(|m| owned(&part, m)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..4096).collect::<Vec<_>>());
    }

    #[test]
    fn streams_are_ascending() {
        let part = make_partition(9, 5).unwrap();
        for m in 0..5 {
            let codes = owned(&part, m);
            assert!(codes.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(codes.len() as u64, part.paths_owned(m).unwrap());
            assert!(codes.iter().all(|&c| part.rank_of(c) == m));
        }
    }

    #[test]
    fn worker_count_errors() {
        assert!(matches!(make_partition(3, 0), Err(Error::InvalidWorkerCount { .. })));
        assert!(matches!(make_partition(3, 9), Err(Error::InvalidWorkerCount { .. })));
        assert!(make_partition(3, 8).is_ok());
        let part = make_partition(3, 2).unwrap();
        assert!(matches!(iter_block(&part, 2).err(), Some(Error::RankOutOfRange { .. })));
        let params = flat(0.5, 3);
        assert!(block_probability(&params, &part, 5).is_err());
    }

    #[test]
    fn block_probability_examples() {
        let params = flat(0.5, 6);
        let part = make_partition(6, 4).unwrap();
        for m in 0..4 {
            assert_eq!(block_probability(&params, &part, m).unwrap(), 0.25);
        }

        let mut probs = vec![0.5; 6];
        probs[0] = 0.9;
        let params = TreeParams::from_factors(0.1, 1.1, probs).unwrap();
        let part = make_partition(6, 2).unwrap();
        assert!((block_probability(&params, &part, 0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(block_probability(&params, &part, 1).unwrap(), 0.9);
    }

    #[test]
    fn leaf_counts_match_binomial_weights() {
        for n in [1u32, 5, 10, 14] {
            let p = 0.37;
            let params = flat(p, n as usize);
            let mut by_leaf = vec![0.0; n as usize + 1];
            let mut total = 0.0;
            for code in 0..(1u64 << n) {
                let path = BernoulliPath::new(code, n);
                let prob = path_probability(&params, path);
                by_leaf[path.count_ups() as usize] += prob;
                total += prob;
            }
            assert!((total - 1.0).abs() < 1e-10);
            let mut choose = 1.0f64;
            for (i, &mass) in by_leaf.iter().enumerate() {
                let expected = choose * p.powi(i as i32) * (1.0 - p).powi(n as i32 - i as i32);
                assert!((mass - expected).abs() < 1e-10, "n={n} i={i}");
                choose = choose * (n as f64 - i as f64) / (i as f64 + 1.0);
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(
            probs in prop::collection::vec(0.01f64..0.99, 16),
            workers in 1u64..=64,
        ) {
            let params = TreeParams::from_factors(0.1, 1.2, probs).unwrap();
            let part = make_partition(16, workers).unwrap();
            let total: f64 = (0..workers)
                .map(|m| block_probability(&params, &part, m).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn disjoint_cover(depth in 1u32..=12, workers_log in 0u32..=12, extra in 0u64..7) {
            let max = 1u64 << depth;
            let workers = ((1u64 << workers_log.min(depth)) + extra).min(max).max(1);
            let part = make_partition(depth, workers).unwrap();
            let mut hits = vec![0u8; max as usize];
            for m in 0..workers {
                for path in iter_block(&part, m).unwrap() {
                    hits[path.code() as usize] += 1;
                }
            }
            prop_assert!(hits.iter().all(|&h| h == 1));
        }
    }
}
