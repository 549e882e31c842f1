//! Market inputs, Cox-Ross-Rubinstein tree constants and asset trajectories.
//!
//! The up factor is the root `u = beta + sqrt(beta^2 - 1)` of
//! `u + 1/u = 2 beta`, which is what makes `u * d = 1` hold with `d = 1/u`.
//! The `+1` variant found in some write-ups of this construction does not
//! satisfy that symmetry and is not used.

use crate::error::{Error, Result};
use crate::paths::BernoulliPath;

/// Largest supported tree depth. Path codes for `N <= 62` fit in a `u64`
/// with room to spare for counting.
pub const MAX_STEPS: u32 = 62;

/// Market and tree inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketInputs {
    /// Spot price `S0`.
    pub spot: f64,
    /// Strike `K`.
    pub strike: f64,
    /// Annual risk-free rate `q`, continuously compounded.
    pub rate: f64,
    /// Annual volatility.
    pub sigma: f64,
    /// Time to maturity in years.
    pub maturity: f64,
    /// Tree depth `N`.
    pub steps: u32,
}

impl MarketInputs {
    pub fn new(spot: f64, strike: f64, rate: f64, sigma: f64, maturity: f64, steps: u32) -> Result<Self> {
        let inputs = Self {
            spot,
            strike,
            rate,
            sigma,
            maturity,
            steps,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.spot.is_finite() && self.spot > 0.0) {
            return bad(format!("S0 must be positive, got {}", self.spot));
        }
        if !(self.strike.is_finite() && self.strike >= 0.0) {
            return bad(format!("K must be nonnegative, got {}", self.strike));
        }
        if !self.rate.is_finite() {
            return bad(format!("q must be finite, got {}", self.rate));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return bad(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return bad(format!("T must be positive, got {}", self.maturity));
        }
        if self.steps == 0 || self.steps > MAX_STEPS {
            return bad(format!("N must lie in 1..={MAX_STEPS}, got {}", self.steps));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.maturity / f64::from(self.steps)
    }

    /// `e^{-qT}`.
    pub fn discount_factor(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }
}

/// Constants of the binomial lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub dt: f64,
    pub u: f64,
    pub d: f64,
    /// `p_t` for steps `t = 1..=N`, stored at index `t - 1`.
    pub up_probs: Vec<f64>,
    pub beta: f64,
}

impl TreeParams {
    /// Lattice with explicit up factor and per-step probabilities; `d = 1/u`.
    ///
    /// Probabilities may sit on the closed interval `[0, 1]` here so that
    /// degenerate (deterministic) trees can be expressed.
    pub fn from_factors(dt: f64, u: f64, up_probs: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::InvalidInput(format!("u must be positive, got {u}")));
        }
        if up_probs.is_empty() || up_probs.len() > MAX_STEPS as usize {
            return Err(Error::InvalidInput(format!(
                "tree depth must lie in 1..={MAX_STEPS}, got {}",
                up_probs.len()
            )));
        }
        for (i, &p) in up_probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityOutOfRange { step: i + 1, value: p });
            }
        }
        let d = 1.0 / u;
        Ok(Self {
            dt,
            u,
            d,
            up_probs,
            beta: 0.5 * (u + d),
        })
    }

    pub fn steps(&self) -> u32 {
        self.up_probs.len() as u32
    }

    /// The common up-probability if every step shares it.
    pub fn constant_prob(&self) -> Option<f64> {
        let first = self.up_probs[0];
        self.up_probs.iter().all(|&p| p == first).then_some(first)
    }

    pub fn prob(&self, step: usize) -> f64 {
        self.up_probs[step - 1]
    }
}

/// Derives `dt`, `beta`, `u`, `d` and the constant up-probability `p`.
pub fn derive_crr(inputs: &MarketInputs) -> Result<TreeParams> {
    inputs.validate()?;
    let dt = inputs.dt();
    let q = inputs.rate;
    let var = inputs.sigma * inputs.sigma;
    let beta = 0.5 * ((-q * dt).exp() + ((q + var) * dt).exp());
    let u = beta + (beta * beta - 1.0).max(0.0).sqrt();
    let d = 1.0 / u;
    let growth = (q * dt).exp();

    let p = if inputs.sigma == 0.0 {
        // Deterministic drift: the tree collapses onto a single path.
        if q > 0.0 {
            1.0
        } else if q < 0.0 {
            0.0
        } else {
            f64::NAN
        }
    } else {
        (growth - d) / (u - d)
    };
    let degenerate = inputs.sigma == 0.0 && (p == 0.0 || p == 1.0);
    if !(degenerate || (p > 0.0 && p < 1.0)) {
        return Err(Error::ProbabilityOutOfRange { step: 1, value: p });
    }

    Ok(TreeParams {
        dt,
        u,
        d,
        up_probs: vec![p; inputs.steps as usize],
        beta,
    })
}

/// CRR factors with caller-supplied, possibly time-varying, up-probabilities.
pub fn with_custom_probs(inputs: &MarketInputs, probs: &[f64]) -> Result<TreeParams> {
    let n = inputs.steps as usize;
    if probs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: probs.len(),
        });
    }
    for (i, &p) in probs.iter().enumerate() {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange { step: i + 1, value: p });
        }
    }
    inputs.validate()?;
    let dt = inputs.dt();
    let q = inputs.rate;
    let var = inputs.sigma * inputs.sigma;
    let beta = 0.5 * ((-q * dt).exp() + ((q + var) * dt).exp());
    let u = beta + (beta * beta - 1.0).max(0.0).sqrt();
    Ok(TreeParams {
        dt,
        u,
        d: 1.0 / u,
        up_probs: probs.to_vec(),
        beta,
    })
}

/// Streams `S_1, ..., S_N` along `path`. `S_0` is not yielded.
pub fn price_steps<'a>(params: &'a TreeParams, spot: f64, path: BernoulliPath) -> impl Iterator<Item = f64> + 'a {
    path.bits().scan(spot, move |price, up| {
        *price *= if up { params.u } else { params.d };
        Some(*price)
    })
}

/// `(S_1, ..., S_N)` along `path`.
pub fn asset_path(params: &TreeParams, spot: f64, path: BernoulliPath) -> Vec<f64> {
    price_steps(params, spot, path).collect()
}

/// Terminal row of the price grid: entry `j` is `S0 u^j d^(N-j)`.
pub fn leaf_prices(params: &TreeParams, spot: f64) -> Vec<f64> {
    let n = params.steps() as i32;
    (0..=n)
        .map(|j| spot * params.u.powi(j) * params.d.powi(n - j))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(q: f64, sigma: f64, n: u32) -> MarketInputs {
        MarketInputs::new(5.0, 10.0, q, sigma, 1.0, n).unwrap()
    }

    #[test]
    fn crr_two_step_values() {
        // Frozen from an independent scalar evaluation of the CRR formulas.
        let params = derive_crr(&inputs(0.06, 0.30, 2)).unwrap();
        assert_eq!(params.dt, 0.5);
        assert!((params.beta - 1.02416484221657).abs() < 1e-12);
        assert!((params.u - 1.245329088948476).abs() < 1e-12);
        assert!((params.d - 0.8030005954846637).abs() < 1e-12);
        assert!((params.up_probs[0] - 0.5142195038978686).abs() < 1e-12);
        assert_eq!(params.up_probs.len(), 2);
    }

    #[test]
    fn zero_volatility_is_deterministic_drift() {
        let params = derive_crr(&inputs(0.06, 0.0, 4)).unwrap();
        let dt: f64 = 0.25;
        assert!((params.u - (0.06 * dt).exp()).abs() < 1e-12);
        assert!((params.d - (-0.06 * dt).exp()).abs() < 1e-12);
        assert!(params.up_probs.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn zero_volatility_and_rate_has_no_probability() {
        let err = derive_crr(&inputs(0.0, 0.0, 4)).unwrap_err();
        assert!(matches!(err, Error::ProbabilityOutOfRange { .. }));
    }

    #[test]
    fn put_parameters_satisfy_symmetry() {
        let params = derive_crr(&inputs(0.06, 0.30, 16)).unwrap();
        let p = params.up_probs[0];
        assert!(p > 0.0 && p < 1.0);
        assert!((params.u * params.d - 1.0).abs() < 1e-12);
        let growth = (0.06 * params.dt).exp();
        assert!((p * params.u + (1.0 - p) * params.d - growth).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(MarketInputs::new(0.0, 1.0, 0.0, 0.2, 1.0, 4).is_err());
        assert!(MarketInputs::new(1.0, -1.0, 0.0, 0.2, 1.0, 4).is_err());
        assert!(MarketInputs::new(1.0, 1.0, 0.0, 0.2, 0.0, 4).is_err());
        assert!(MarketInputs::new(1.0, 1.0, 0.0, -0.2, 1.0, 4).is_err());
        assert!(MarketInputs::new(1.0, 1.0, 0.0, 0.2, 1.0, 0).is_err());
        assert!(MarketInputs::new(1.0, 1.0, 0.0, 0.2, 1.0, 63).is_err());
    }

    #[test]
    fn custom_probs_pass_through() {
        let params = with_custom_probs(&inputs(0.06, 0.3, 2), &[0.5, 0.5]).unwrap();
        assert_eq!(params.up_probs, vec![0.5, 0.5]);
        let params = with_custom_probs(&inputs(0.06, 0.3, 3), &[0.2, 0.5, 0.9]).unwrap();
        assert_eq!(params.up_probs, vec![0.2, 0.5, 0.9]);
        assert_eq!(params.constant_prob(), None);
    }

    #[test]
    fn custom_probs_contract() {
        assert_eq!(
            with_custom_probs(&inputs(0.06, 0.3, 3), &[0.5, 0.5]).unwrap_err(),
            Error::LengthMismatch { expected: 3, found: 2 }
        );
        assert!(matches!(
            with_custom_probs(&inputs(0.06, 0.3, 2), &[0.5, 1.0]).unwrap_err(),
            Error::ProbabilityOutOfRange { step: 2, .. }
        ));
    }

    #[test]
    fn trajectories_by_multiplication() {
        let params = TreeParams::from_factors(0.5, 2.0, vec![0.5, 0.5]).unwrap();
        assert_eq!(
            asset_path(&params, 4.0, BernoulliPath::from_bits(&[true, true])),
            vec![8.0, 16.0]
        );
        assert_eq!(
            asset_path(&params, 4.0, BernoulliPath::from_bits(&[false, true])),
            vec![2.0, 4.0]
        );

        let ud = asset_path(&params, 4.0, BernoulliPath::from_bits(&[true, false]));
        let du = asset_path(&params, 4.0, BernoulliPath::from_bits(&[false, true]));
        assert_ne!(ud, du);
        assert_eq!(ud[1], 4.0);
        assert_eq!(du[1], 4.0);
    }

    #[test]
    fn leaf_row() {
        let params = TreeParams::from_factors(0.5, 2.0, vec![0.5, 0.5]).unwrap();
        assert_eq!(leaf_prices(&params, 4.0), vec![1.0, 4.0, 16.0]);

        let params = derive_crr(&inputs(0.06, 0.30, 16)).unwrap();
        let leaves = leaf_prices(&params, 5.0);
        assert_eq!(leaves.len(), 17);
        assert!(leaves.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn terminal_price_matches_leaf_for_every_path() {
        for n in 1..=12u32 {
            let params = derive_crr(&inputs(0.06, 0.30, n)).unwrap();
            let leaves = leaf_prices(&params, 5.0);
            for code in 0..(1u64 << n) {
                let path = BernoulliPath::new(code, n);
                let last = *asset_path(&params, 5.0, path).last().unwrap();
                let leaf = leaves[path.count_ups() as usize];
                assert!(((last - leaf) / leaf).abs() < 1e-12, "n={n} code={code}");
            }
        }
    }
}
