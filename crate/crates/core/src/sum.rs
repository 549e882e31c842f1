//! Compensated (Kahan) accumulation.

use std::iter::Sum;
use std::ops::AddAssign;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    err: f64,
}

impl KahanSum {
    pub const fn new() -> Self {
        Self { sum: 0.0, err: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.err;
        let t = self.sum + y;
        self.err = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

impl AddAssign<f64> for KahanSum {
    #[inline]
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl Sum<f64> for KahanSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

impl<'a> Sum<&'a f64> for KahanSum {
    fn sum<I: Iterator<Item = &'a f64>>(iter: I) -> Self {
        iter.copied().sum()
    }
}

/// Compensated sum of a sequence, in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().sum::<KahanSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_lost_by_naive_sum() {
        let mut values = vec![1.0e16];
        values.extend(std::iter::repeat_n(1.0, 1000));
        let naive: f64 = values.iter().sum();
        assert_eq!(naive, 1.0e16);
        assert_eq!(kahan_sum(values), 1.0e16 + 1000.0);
    }

    #[test]
    fn single_term_is_exact() {
        assert_eq!(kahan_sum([0.1]), 0.1);
        assert_eq!(kahan_sum(std::iter::empty()), 0.0);
    }
}
