//! The original agent-based model.
//!
//! Each agent holds a position and switches when either the price leaves its
//! personal inaction band `[m / (1 + alpha), m (1 + alpha)]` around the price
//! of its last switch, or when its accumulated herding pressure exceeds its
//! personal threshold `beta`. All agents react to the same excess-demand
//! snapshot within a step.

use alloc::vec::Vec;
use rand::Rng;

use crate::params::ModelParams;
use crate::price::{self, signed_fraction, MarketState, Position, PriceMode};
use crate::record::SimulationRecord;
use crate::rng;
use crate::{Error, Pressures, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    pub gamma: Position,
    pub c: f64,
    pub m: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Agent {
    /// True iff `s` lies strictly outside the closed inaction band.
    #[inline]
    pub fn inaction_triggered(&self, s: f64) -> bool {
        let f = 1.0 + self.alpha;
        s < self.m / f || s > self.m * f
    }

    /// Herding pressure after one step: grows by `dt |ed|` while the agent
    /// is in the minority, otherwise unchanged.
    #[inline]
    pub fn herding_update(&self, ed: f64, dt: f64) -> f64 {
        herding_update(self.gamma, self.c, ed, dt)
    }
}

#[inline]
pub(crate) fn herding_update(gamma: Position, c: f64, ed: f64, dt: f64) -> f64 {
    // adding zero keeps c bit for bit and compiles without a branch
    let minority = (gamma.sign() * ed < 0.0) as u8 as f64;
    c + minority * (dt * crate::math::abs(ed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentEnsemble {
    pub agents: Vec<Agent>,
    pressures: Pressures,
}

impl AgentEnsemble {
    pub fn new(agents: Vec<Agent>, pressures: Pressures) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        Ok(AgentEnsemble { agents, pressures })
    }

    pub fn pressures(&self) -> Pressures {
        self.pressures
    }

    pub fn excess_demand(&self) -> f64 {
        signed_fraction(self.longs(), self.agents.len())
    }

    fn longs(&self) -> usize {
        self.agents
            .iter()
            .filter(|a| a.gamma == Position::Long)
            .count()
    }
}

/// Initial population: the first `ceil(2N/3)` agents long, the rest short,
/// `c = B1`, `m = S(0)`, thresholds drawn once as `alpha ~ U(A1, A2)`,
/// `beta ~ U(B1, B2)`.
pub fn init_ensemble<R: Rng + ?Sized>(
    params: &ModelParams,
    pressures: Pressures,
    rng: &mut R,
) -> AgentEnsemble {
    let (bb1, bb2) = (params.big_b1(), params.big_b2());
    let longs = params.initial_longs();
    let agents = (0..params.n_agents)
        .map(|i| {
            let alpha = rng::uniform_in(rng, params.a1, params.a2);
            let beta = rng::uniform_in(rng, bb1, bb2);
            Agent {
                gamma: if i < longs {
                    Position::Long
                } else {
                    Position::Short
                },
                c: bb1,
                m: params.s0,
                alpha,
                beta,
            }
        })
        .collect();
    AgentEnsemble { agents, pressures }
}

/// Advances the model by one step and returns the number of switches.
///
/// Order: price from the current excess demand, herding pressures against the
/// same excess demand, then switches at the new price.
pub fn abm_step<R: Rng + ?Sized>(
    ensemble: &mut AgentEnsemble,
    market: &mut MarketState,
    params: &ModelParams,
    mode: PriceMode,
    rng: &mut R,
) -> Result<usize> {
    let ed = market.ed;
    let eta = match mode {
        PriceMode::Stochastic => rng::standard_normal(rng),
        PriceMode::Deterministic => 0.0,
    };
    let s = price::price_step_exponential(market, params, eta);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::NonPositivePrice {
            t: market.t + params.dt,
            price: s,
        });
    }
    let herding = ensemble.pressures.herding();
    let mut switches = 0;
    for a in &mut ensemble.agents {
        if herding {
            a.c = a.herding_update(ed, params.dt);
        }
        if (herding && a.c > a.beta) || a.inaction_triggered(s) {
            a.gamma = a.gamma.flipped();
            a.c = 0.0;
            a.m = s;
            switches += 1;
        }
    }
    *market = MarketState {
        s,
        ed: ensemble.excess_demand(),
        ed_prev: ed,
        t: market.t + params.dt,
    };
    Ok(switches)
}

/// Runs a prepared ensemble over `[0, t_end]`.
pub fn simulate_abm<R: Rng + ?Sized>(
    mut ensemble: AgentEnsemble,
    params: &ModelParams,
    mode: PriceMode,
    rng: &mut R,
) -> Result<SimulationRecord> {
    let steps = params.n_steps();
    let mut market = MarketState::initial(params.s0, ensemble.excess_demand());
    let mut record = SimulationRecord::with_capacity(steps + 1);
    record.push(&market);
    for k in 1..=steps {
        abm_step(&mut ensemble, &mut market, params, mode, rng)?;
        market.t = k as f64 * params.dt;
        record.push(&market);
    }
    Ok(record)
}

/// Initializes an ensemble from `rng` and runs it.
pub fn run_abm<R: Rng + ?Sized>(
    params: &ModelParams,
    pressures: Pressures,
    mode: PriceMode,
    rng: &mut R,
) -> Result<SimulationRecord> {
    let params = params.validate()?;
    let ensemble = init_ensemble(&params, pressures, rng);
    simulate_abm(ensemble, &params, mode, rng)
}
