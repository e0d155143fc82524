//! Kinetic particle model.
//!
//! Personal thresholds are replaced by the distribution they are drawn from:
//! an agent switches with probability `lambda_P = lambda1 p(c) + lambda2 q(m, S)`
//! where `p` is the CDF of the herding threshold and `q` the probability that
//! the price lies outside a random inaction band.

use alloc::vec::Vec;
use rand::Rng;

use crate::abm::herding_update;
use crate::params::ModelParams;
use crate::price::{self, signed_fraction, MarketState, Position, PriceMode};
use crate::record::SimulationRecord;
use crate::rng;
use crate::{Error, Pressures, Result};

/// Switching probabilities for fixed parameters.
///
/// Precomputes the thresholds so the hot loops only do compares and one
/// division per evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingKernel {
    pub big_b1: f64,
    pub big_b2: f64,
    pub a1: f64,
    pub a2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub dt_cross: f64,
}

impl SwitchingKernel {
    pub fn new(params: &ModelParams) -> Self {
        SwitchingKernel {
            big_b1: params.big_b1(),
            big_b2: params.big_b2(),
            a1: params.a1,
            a2: params.a2,
            lambda1: params.lambda1,
            lambda2: params.lambda2,
            dt_cross: params.dt_cross,
        }
    }

    /// Kernel of the inaction-only arm: `lambda1 = 0`, `lambda2 = 1`.
    pub fn inaction_only(mut self) -> Self {
        self.lambda1 = 0.0;
        self.lambda2 = 1.0;
        self
    }

    pub fn for_pressures(params: &ModelParams, pressures: Pressures) -> Self {
        let k = Self::new(params);
        match pressures {
            Pressures::Full => k,
            Pressures::InactionOnly => k.inaction_only(),
        }
    }

    /// CDF of `beta ~ U(B1, B2)` at `c`. With `B1 = B2` this is a step at `B1`.
    #[inline]
    pub fn p(&self, c: f64) -> f64 {
        if self.big_b2 > self.big_b1 {
            ((c - self.big_b1) * (1.0 / (self.big_b2 - self.big_b1))).clamp(0.0, 1.0)
        } else if c <= self.big_b1 {
            0.0
        } else {
            1.0
        }
    }

    /// Probability that `s` lies outside a band `[m/(1+alpha), m(1+alpha)]`
    /// with `alpha ~ U(A1, A2)`.
    #[inline]
    pub fn q(&self, m: f64, s: f64) -> f64 {
        // inside the inner band, checked without divisions
        let (u1, u2) = (1.0 + self.a1, 1.0 + self.a2);
        if s * u1 > m && s < m * u1 {
            return 0.0;
        }
        // ramps in x = s / m; the reciprocals are loop invariant
        let (l1, l2) = (1.0 / u2, 1.0 / u1);
        let x = s / m;
        if x < l1 {
            1.0
        } else if x <= l2 {
            (l2 - x) * (1.0 / (l2 - l1))
        } else if x < u1 {
            0.0
        } else if x <= u2 {
            (x - u1) * (1.0 / (u2 - u1))
        } else {
            1.0
        }
    }

    /// `lambda_P = lambda1 p(c) + lambda2 q(m, s)`.
    #[inline]
    pub fn probability(&self, c: f64, m: f64, s: f64) -> f64 {
        let mut out = 0.0;
        if self.lambda1 != 0.0 {
            out += self.lambda1 * self.p(c);
        }
        if self.lambda2 != 0.0 {
            out += self.lambda2 * self.q(m, s);
        }
        out
    }

    /// Switching rate `lambda = lambda_P / dt_cross` (1/time).
    #[inline]
    pub fn rate(&self, c: f64, m: f64, s: f64) -> f64 {
        self.probability(c, m, s) / self.dt_cross
    }
}

pub fn herding_switch_prob(c: f64, params: &ModelParams) -> f64 {
    SwitchingKernel::new(params).p(c)
}

pub fn inaction_switch_prob(m: f64, s: f64, params: &ModelParams) -> f64 {
    SwitchingKernel::new(params).q(m, s)
}

pub fn switching_probability(c: f64, m: f64, s: f64, params: &ModelParams) -> f64 {
    SwitchingKernel::new(params).probability(c, m, s)
}

pub fn switching_rate(c: f64, m: f64, s: f64, params: &ModelParams) -> f64 {
    SwitchingKernel::new(params).rate(c, m, s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticAgent {
    pub gamma: Position,
    pub c: f64,
    pub m: f64,
}

/// Initial population: `ceil(2N/3)` long, `c = B1`, `m = S(0)`.
pub fn init_agents(params: &ModelParams) -> Vec<KineticAgent> {
    let longs = params.initial_longs();
    (0..params.n_agents)
        .map(|i| KineticAgent {
            gamma: if i < longs {
                Position::Long
            } else {
                Position::Short
            },
            c: params.big_b1(),
            m: params.s0,
        })
        .collect()
}

/// One step: Euler-Maruyama price, herding update against the current excess
/// demand, then an independent switch decision per agent at the new price.
///
/// Agents whose switching probability is exactly zero consume no random draw.
pub fn kinetic_step<R: Rng + ?Sized>(
    agents: &mut [KineticAgent],
    market: &mut MarketState,
    params: &ModelParams,
    kernel: &SwitchingKernel,
    pressures: Pressures,
    mode: PriceMode,
    rng: &mut R,
) -> Result<usize> {
    if agents.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let ed = market.ed;
    let s = match mode {
        PriceMode::Stochastic => {
            let eta = rng::standard_normal(rng);
            price::price_step_euler_maruyama(market, params, eta)?
        }
        PriceMode::Deterministic => positive(
            price::price_step_deterministic(market, params),
            market,
            params,
        )?,
    };
    let herding = pressures.herding();
    let mut longs = 0usize;
    let mut switches = 0usize;
    for a in agents.iter_mut() {
        if herding {
            a.c = herding_update(a.gamma, a.c, ed, params.dt);
        }
        let prob = kernel.probability(a.c, a.m, s);
        if prob > 0.0 && rng::uniform(rng) < prob {
            a.gamma = a.gamma.flipped();
            a.m = s;
            a.c = 0.0;
            switches += 1;
        }
        longs += (a.gamma == Position::Long) as usize;
    }
    *market = MarketState {
        s,
        ed: signed_fraction(longs, agents.len()),
        ed_prev: ed,
        t: market.t + params.dt,
    };
    Ok(switches)
}

pub(crate) fn positive(s: f64, market: &MarketState, params: &ModelParams) -> Result<f64> {
    if s > 0.0 && s.is_finite() {
        Ok(s)
    } else {
        Err(Error::NonPositivePrice {
            t: market.t + params.dt,
            price: s,
        })
    }
}

/// Runs the kinetic particle model over `[0, t_end]`.
///
/// The inaction-only arm uses `lambda1 = 0, lambda2 = 1` and never
/// accumulates herding pressure.
pub fn run_kinetic_particle<R: Rng + ?Sized>(
    params: &ModelParams,
    pressures: Pressures,
    mode: PriceMode,
    rng: &mut R,
) -> Result<SimulationRecord> {
    let params = params.validate()?;
    let kernel = SwitchingKernel::for_pressures(&params, pressures);
    let mut agents = init_agents(&params);
    simulate_kinetic(&mut agents, &params, &kernel, pressures, mode, rng)
}

/// Runs prepared agents with an explicit kernel.
pub fn simulate_kinetic<R: Rng + ?Sized>(
    agents: &mut [KineticAgent],
    params: &ModelParams,
    kernel: &SwitchingKernel,
    pressures: Pressures,
    mode: PriceMode,
    rng: &mut R,
) -> Result<SimulationRecord> {
    let ed0 = price::excess_demand(agents.iter().map(|a| a.gamma))?;
    let steps = params.n_steps();
    let mut market = MarketState::initial(params.s0, ed0);
    let mut record = SimulationRecord::with_capacity(steps + 1);
    record.push(&market);
    let mut pop = Population::new(agents);
    for k in 1..=steps {
        let res = pop.step(&mut market, params, kernel, pressures, mode, rng);
        if let Err(e) = res {
            pop.store(agents);
            return Err(e);
        }
        market.t = k as f64 * params.dt;
        record.push(&market);
    }
    pop.store(agents);
    Ok(record)
}

/// Column layout of the agents for the run loop. A step gives the same result
/// and consumes the same random draws as [`kinetic_step`]: agents whose
/// switching probability is certainly zero are masked out in a first pass,
/// the rest are visited in index order.
struct Population {
    long: Vec<bool>,
    c: Vec<f64>,
    m: Vec<f64>,
    active: Vec<u8>,
    longs: usize,
}

impl Population {
    fn new(agents: &[KineticAgent]) -> Self {
        let n = agents.len();
        Population {
            long: agents.iter().map(|a| a.gamma == Position::Long).collect(),
            c: agents.iter().map(|a| a.c).collect(),
            m: agents.iter().map(|a| a.m).collect(),
            active: alloc::vec![0; n.div_ceil(8) * 8],
            longs: agents.iter().filter(|a| a.gamma == Position::Long).count(),
        }
    }

    fn store(&self, agents: &mut [KineticAgent]) {
        for (i, a) in agents.iter_mut().enumerate() {
            a.gamma = if self.long[i] {
                Position::Long
            } else {
                Position::Short
            };
            a.c = self.c[i];
            a.m = self.m[i];
        }
    }

    fn step<R: Rng + ?Sized>(
        &mut self,
        market: &mut MarketState,
        params: &ModelParams,
        kernel: &SwitchingKernel,
        pressures: Pressures,
        mode: PriceMode,
        rng: &mut R,
    ) -> Result<()> {
        let ed = market.ed;
        let s = match mode {
            PriceMode::Stochastic => {
                let eta = rng::standard_normal(rng);
                price::price_step_euler_maruyama(market, params, eta)?
            }
            PriceMode::Deterministic => positive(
                price::price_step_deterministic(market, params),
                market,
                params,
            )?,
        };
        if pressures.herding() {
            // same sums as herding_update: the majority adds an exact zero
            let inc = params.dt * crate::math::abs(ed);
            let (on_long, on_short) = if ed < 0.0 {
                (inc, 0.0)
            } else if ed > 0.0 {
                (0.0, inc)
            } else {
                (0.0, 0.0)
            };
            for (c, &l) in self.c.iter_mut().zip(&self.long) {
                *c += if l { on_long } else { on_short };
            }
        }
        let b1 = if kernel.lambda1 != 0.0 {
            kernel.big_b1
        } else {
            f64::INFINITY
        };
        let u = 1.0 + kernel.a1;
        let su = s * u;
        for ((a, &c), &m) in self.active.iter_mut().zip(&self.c).zip(&self.m) {
            *a = !((c <= b1) & (su > m) & (s < m * u)) as u8;
        }
        for (chunk, bytes) in self.active.chunks_exact(8).enumerate() {
            let mut bits = u64::from_le_bytes(bytes.try_into().expect("chunk of 8"));
            while bits != 0 {
                let i = chunk * 8 + (bits.trailing_zeros() / 8) as usize;
                bits &= bits - 1;
                let prob = kernel.probability(self.c[i], self.m[i], s);
                if prob > 0.0 && rng::uniform(rng) < prob {
                    if self.long[i] {
                        self.longs -= 1;
                    } else {
                        self.longs += 1;
                    }
                    self.long[i] = !self.long[i];
                    self.m[i] = s;
                    self.c[i] = 0.0;
                }
            }
        }
        *market = MarketState {
            s,
            ed: signed_fraction(self.longs, self.long.len()),
            ed_prev: ed,
            t: market.t + params.dt,
        };
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Preset;
    use crate::rng::stream;

    fn params() -> ModelParams {
        Preset::KineticParticle.config().params
    }

    #[test]
    fn herding_probability_examples() {
        let p = params();
        assert_eq!(herding_switch_prob(0.0, &p), 0.0);
        assert!((herding_switch_prob(2e-3, &p) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(herding_switch_prob(5e-3, &p), 1.0);
    }

    #[test]
    fn inaction_probability_examples() {
        let p = params();
        assert_eq!(inaction_switch_prob(1.0, 1.0, &p), 0.0);
        assert!((inaction_switch_prob(1.0, 1.2, &p) - 0.5).abs() < 1e-12);
        assert_eq!(inaction_switch_prob(1.0, 0.5, &p), 1.0);
        assert_eq!(inaction_switch_prob(1.0, 2.0, &p), 1.0);
        // lower ramp midpoint
        let mid = 0.5 * (1.0 / 1.3 + 1.0 / 1.1);
        assert!((inaction_switch_prob(1.0, mid, &p) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn combined_probability_and_rate() {
        let p = params();
        let lp = switching_probability(2e-3, 1.0, 1.2, &p);
        assert!((lp - 5.0 / 12.0).abs() < 1e-12);
        let q_only = p.with_weights(0.0, 1.0);
        assert_eq!(
            switching_probability(2e-3, 1.0, 1.2, &q_only),
            inaction_switch_prob(1.0, 1.2, &p)
        );
        assert_eq!(switching_probability(0.0, 1.0, 1.0, &p), 0.0);

        assert!((switching_rate(2e-3, 1.0, 1.2, &p) - 10416.666666666666).abs() < 1e-6);
        assert_eq!(switching_rate(0.0, 1.0, 1.0, &p), 0.0);
        assert!((switching_rate(1.0, 0.1, 1.0, &p) - 25000.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_ramp_is_a_step() {
        let k = SwitchingKernel {
            big_b2: 1e-3,
            ..SwitchingKernel::new(&params())
        };
        assert_eq!(k.p(1e-3), 0.0);
        assert_eq!(k.p(1.0001e-3), 1.0);
    }

    #[test]
    fn first_step_probability_is_zero_at_preset_initialization() {
        let p = params();
        let k = SwitchingKernel::new(&p);
        assert_eq!(k.probability(p.big_b1(), p.s0, p.s0), 0.0);
    }

    #[test]
    fn zero_probability_freezes_excess_demand() {
        // Inaction-only with a wide price band is impossible to trigger in a
        // deterministic run with constant ED.
        let p = params();
        let mut agents = init_agents(&ModelParams { n_agents: 300, ..p });
        let k = SwitchingKernel {
            lambda1: 0.0,
            lambda2: 0.0,
            ..SwitchingKernel::new(&p)
        };
        let rec = simulate_kinetic(
            &mut agents,
            &p,
            &k,
            Pressures::Full,
            PriceMode::Stochastic,
            &mut stream(1, 0),
        )
        .unwrap();
        assert!(rec.ed.iter().all(|&e| e == rec.ed[0]));
        assert_eq!(rec.len(), p.n_steps() + 1);
    }
}
