//! Excess demand and the stock-price update rules.
//!
//! Returns are driven by the change in excess demand (market depth `kappa`)
//! and by Gaussian news whose amplitude grows with `|ED|` (heteroskedasticity
//! `theta`).

use crate::math;
use crate::params::ModelParams;
use crate::{Error, Result};

/// Market position of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Position {
    Long,
    Short,
}

impl Position {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Position::Long => 1.0,
            Position::Short => -1.0,
        }
    }

    #[inline]
    pub fn flipped(self) -> Self {
        match self {
            Position::Long => Position::Short,
            Position::Short => Position::Long,
        }
    }
}

/// Price and excess demand at one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketState {
    pub s: f64,
    pub ed: f64,
    pub ed_prev: f64,
    pub t: f64,
}

impl MarketState {
    /// State at `t = 0`; the previous excess demand equals the current one.
    pub fn initial(s0: f64, ed0: f64) -> Self {
        MarketState {
            s: s0,
            ed: ed0,
            ed_prev: ed0,
            t: 0.0,
        }
    }

    #[inline]
    pub fn delta_ed(&self) -> f64 {
        self.ed - self.ed_prev
    }
}

/// Whether the price equation carries Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceMode {
    Stochastic,
    Deterministic,
}

/// Average position of a population: `(#long - #short) / N`.
pub fn excess_demand<I>(positions: I) -> Result<f64>
where
    I: IntoIterator<Item = Position>,
{
    let (mut n, mut long) = (0usize, 0usize);
    for p in positions {
        n += 1;
        if p == Position::Long {
            long += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    Ok(signed_fraction(long, n))
}

#[inline]
pub(crate) fn signed_fraction(long: usize, n: usize) -> f64 {
    (2.0 * long as f64 - n as f64) / n as f64
}

/// Exponential integrator of the agent-based model:
/// `S' = S exp{(1 + theta |ED|)(sqrt(dt) eta - dt/2) + kappa dED}`.
pub fn price_step_exponential(market: &MarketState, params: &ModelParams, eta: f64) -> f64 {
    let dt = params.dt;
    let vol = 1.0 + params.theta * math::abs(market.ed);
    let exponent = vol * (math::sqrt(dt) * eta - 0.5 * dt) + params.kappa * market.delta_ed();
    market.s * math::exp(exponent)
}

/// Euler-Maruyama step of `dS = kappa ED' S dt + (1 + theta |ED|) S dW`.
///
/// Fails instead of clamping when the step leaves the positive half-line.
pub fn price_step_euler_maruyama(
    market: &MarketState,
    params: &ModelParams,
    eta: f64,
) -> Result<f64> {
    let s = market.s;
    let vol = 1.0 + params.theta * math::abs(market.ed);
    let next = s + params.kappa * market.delta_ed() * s + math::sqrt(params.dt) * vol * s * eta;
    if next > 0.0 {
        Ok(next)
    } else {
        Err(Error::NonPositivePrice {
            t: market.t + params.dt,
            price: next,
        })
    }
}

/// Drift-only step `S' = S + kappa dED S`.
pub fn price_step_deterministic(market: &MarketState, params: &ModelParams) -> f64 {
    market.s + params.kappa * market.delta_ed() * market.s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Preset;
    use alloc::vec::Vec;

    fn params() -> ModelParams {
        Preset::AbmOriginal.config().params
    }

    fn market(s: f64, ed: f64, ed_prev: f64) -> MarketState {
        MarketState {
            s,
            ed,
            ed_prev,
            t: 0.0,
        }
    }

    #[test]
    fn excess_demand_examples() {
        use Position::*;
        assert_eq!(excess_demand([Long, Long, Long]).unwrap(), 1.0);
        assert_eq!(excess_demand([Long, Short]).unwrap(), 0.0);
        let mut v = Vec::new();
        v.resize(667, Long);
        v.resize(1000, Short);
        assert!((excess_demand(v).unwrap() - 0.334).abs() < 1e-15);
        assert_eq!(
            excess_demand(core::iter::empty()),
            Err(Error::EmptyPopulation)
        );
    }

    #[test]
    fn exponential_examples() {
        let p = params();
        let s = price_step_exponential(&market(1.0, 0.0, 0.0), &p, 0.0);
        assert!((s - libm::exp(-2e-5)).abs() < 1e-15);
        assert!((s - 0.99998000).abs() < 1e-8);
        let s = price_step_exponential(&market(1.0, 0.1, 0.0), &p, 0.0);
        assert!((s - libm::exp(0.02 - 2e-5)).abs() < 1e-15);
        assert!((s - 1.0201809).abs() < 1e-7);
        // theta only enters through |ED|
        let a = price_step_exponential(&market(1.0, 0.0, 0.0), &p.with_theta(2.0), 0.7);
        let b = price_step_exponential(&market(1.0, 0.0, 0.0), &p, 0.7);
        assert_eq!(a, b);
    }

    #[test]
    fn euler_maruyama_examples() {
        let p = params();
        let s = price_step_euler_maruyama(&market(1.0, 0.1, 0.0), &p, 0.0).unwrap();
        assert!((s - 1.02).abs() < 1e-15);
        assert_eq!(
            price_step_euler_maruyama(&market(1.0, 0.0, 0.0), &p, 0.0).unwrap(),
            1.0
        );
        let s = price_step_euler_maruyama(&market(2.0, 0.0, 0.0), &p, 1.0).unwrap();
        assert!((s - (2.0 + libm::sqrt(4e-5) * 2.0)).abs() < 1e-15);
        assert!((s - 2.0126491).abs() < 1e-7);
        assert!(matches!(
            price_step_euler_maruyama(&market(1.0, 0.0, 0.0), &p, -200.0),
            Err(Error::NonPositivePrice { .. })
        ));
    }

    #[test]
    fn deterministic_examples() {
        let p = params();
        assert_eq!(price_step_deterministic(&market(1.3, 0.2, 0.2), &p), 1.3);
        assert!((price_step_deterministic(&market(1.0, -0.5, 0.0), &p) - 0.9).abs() < 1e-15);
        let mut m = market(1.0, 0.4, 0.4);
        for _ in 0..100 {
            m.s = price_step_deterministic(&m, &p);
        }
        assert_eq!(m.s, 1.0);
    }
}
