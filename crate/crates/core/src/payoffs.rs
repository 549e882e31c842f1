//! Terminal payoffs `V_N(x)` of a Bernoulli path.
//!
//! Averages and minima run over `S_1, ..., S_N`; the spot `S_0` is excluded.

use std::fmt;
use std::str::FromStr;

use crate::model::TreeParams;
use crate::paths::BernoulliPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PayoffKind {
    EuropeanCall,
    EuropeanPut,
    /// `max(K - mean(S_1..S_N), 0)`, arithmetic average.
    AsianPut,
    /// `max(K - min(S_1..S_N), 0)`.
    FixedLookbackPut,
}

impl PayoffKind {
    pub const ALL: [PayoffKind; 4] = [
        PayoffKind::EuropeanCall,
        PayoffKind::EuropeanPut,
        PayoffKind::AsianPut,
        PayoffKind::FixedLookbackPut,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PayoffKind::EuropeanCall => "euro-call",
            PayoffKind::EuropeanPut => "euro-put",
            PayoffKind::AsianPut => "asian-put",
            PayoffKind::FixedLookbackPut => "lookback-put",
        }
    }

    /// Whether the payoff depends only on the terminal price.
    pub fn is_path_independent(&self) -> bool {
        matches!(self, PayoffKind::EuropeanCall | PayoffKind::EuropeanPut)
    }

    /// Payoff as a function of the terminal price alone; `None` for
    /// path-dependent kinds.
    pub fn terminal(&self, strike: f64, terminal_price: f64) -> Option<f64> {
        match self {
            PayoffKind::EuropeanCall => Some((terminal_price - strike).max(0.0)),
            PayoffKind::EuropeanPut => Some((strike - terminal_price).max(0.0)),
            _ => None,
        }
    }
}

impl fmt::Display for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPayoff(pub String);

impl fmt::Display for UnknownPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown payoff '{}' (expected euro-call, euro-put, asian-put or lookback-put)",
            self.0
        )
    }
}

impl std::error::Error for UnknownPayoff {}

impl FromStr for PayoffKind {
    type Err = UnknownPayoff;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PayoffKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownPayoff(s.to_string()))
    }
}

/// Anything that maps a path to a payoff. The engines are generic over this,
/// so user-defined payoffs plug in next to the built-in kinds.
pub trait PathPayoff: Sync {
    fn value(&self, params: &TreeParams, spot: f64, strike: f64, path: BernoulliPath) -> f64;
}

impl<F> PathPayoff for F
where
    F: Fn(&TreeParams, f64, f64, BernoulliPath) -> f64 + Sync,
{
    fn value(&self, params: &TreeParams, spot: f64, strike: f64, path: BernoulliPath) -> f64 {
        self(params, spot, strike, path)
    }
}

impl PathPayoff for PayoffKind {
    #[inline]
    fn value(&self, params: &TreeParams, spot: f64, strike: f64, path: BernoulliPath) -> f64 {
        payoff(*self, params, spot, strike, path)
    }
}

/// Evaluates `kind` along `path` in one streaming pass.
pub fn payoff(kind: PayoffKind, params: &TreeParams, spot: f64, strike: f64, path: BernoulliPath) -> f64 {
    let (u, d) = (params.u, params.d);
    let mut price = spot;
    match kind {
        PayoffKind::EuropeanCall | PayoffKind::EuropeanPut => {
            // Same expression as the leaf row, so equal up-counts give
            // bit-identical terminal prices.
            let ups = path.count_ups() as i32;
            let terminal = spot * u.powi(ups) * d.powi(path.len() as i32 - ups);
            kind.terminal(strike, terminal).unwrap_or_default()
        }
        PayoffKind::AsianPut => {
            let mut total = 0.0;
            for up in path.bits() {
                price *= if up { u } else { d };
                total += price;
            }
            (strike - total / f64::from(path.len())).max(0.0)
        }
        PayoffKind::FixedLookbackPut => {
            let mut low = f64::INFINITY;
            for up in path.bits() {
                price *= if up { u } else { d };
                low = low.min(price);
            }
            (strike - low).max(0.0)
        }
    }
}
