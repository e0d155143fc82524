//! Monte Carlo particle solver for the mean-field model.
//!
//! Samples `(gamma, m, c)` follow the kinetic dynamics, but switch with the
//! exact jump probability `1 - exp(-dt lambda)` of the rate, so the scheme
//! has no step restriction. Densities are recovered by histogramming the
//! samples on a finite-volume mesh.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;

use crate::kinetic::{positive, SwitchingKernel};
use crate::meanfield::{DensityField, Dimension, InitialDensity, Mesh};
use crate::params::ModelParams;
use crate::price::{self, signed_fraction, MarketState, Position, PriceMode};
use crate::record::SimulationRecord;
use crate::{math, rng, Error, Result};

/// `1 - exp(-dt lambda)`, the probability of at least one jump of a Poisson
/// clock with rate `lambda` during `dt`.
#[inline]
pub fn effective_switch_prob(rate: f64, dt: f64) -> f64 {
    -math::expm1(-dt * rate)
}

/// Samples stored as parallel arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleEnsemble {
    pub gamma: Vec<Position>,
    pub m: Vec<f64>,
    pub c: Vec<f64>,
    dimension: Dimension,
}

impl SampleEnsemble {
    pub fn new(
        gamma: Vec<Position>,
        m: Vec<f64>,
        c: Vec<f64>,
        dimension: Dimension,
    ) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        if gamma.len() != m.len() || gamma.len() != c.len() {
            return Err(Error::Invalid("sample arrays differ in length"));
        }
        Ok(SampleEnsemble {
            gamma,
            m,
            c,
            dimension,
        })
    }

    /// Draws `params.n_agents` samples from the given initial density.
    ///
    /// The first `round(N (1 + ed0) / 2)` samples are long, so the initial
    /// excess demand is exact up to one sample. Homogeneous samples carry
    /// `c = 0` throughout.
    pub fn init<R: Rng + ?Sized>(
        params: &ModelParams,
        init: InitialDensity,
        dimension: Dimension,
        rng: &mut R,
    ) -> Result<Self> {
        let n = params.n_agents;
        let ed0 = init.ed0();
        if !(-1.0..=1.0).contains(&ed0) {
            return Err(Error::Invalid("initial excess demand must lie in [-1, 1]"));
        }
        let longs = math::round(n as f64 * 0.5 * (1.0 + ed0)) as usize;
        let s0 = params.s0;
        let ((m_lo, m_hi), (c_lo, c_hi)) = match init {
            InitialDensity::UniformBlock { .. } => (
                (s0 / (1.0 + params.a2), s0 * (1.0 + params.a2)),
                (params.big_b1(), params.big_b2()),
            ),
            InitialDensity::NullSpace { .. } => (
                (s0 / (1.0 + params.a1), s0 * (1.0 + params.a1)),
                (0.0, params.big_b1()),
            ),
        };
        let het = dimension == Dimension::Heterogeneous;
        let mut m = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        for _ in 0..n {
            m.push(rng::uniform_in(rng, m_lo, m_hi));
            c.push(if het {
                rng::uniform_in(rng, c_lo, c_hi)
            } else {
                0.0
            });
        }
        let gamma = (0..n)
            .map(|i| {
                if i < longs {
                    Position::Long
                } else {
                    Position::Short
                }
            })
            .collect();
        Self::new(gamma, m, c, dimension)
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn excess_demand(&self) -> f64 {
        let longs = self.gamma.iter().filter(|&&g| g == Position::Long).count();
        signed_fraction(longs, self.len())
    }

    /// Kernel used by the samples: the homogeneous model switches on the
    /// inaction ramp alone.
    pub fn kernel(&self, params: &ModelParams) -> SwitchingKernel {
        let k = SwitchingKernel::new(params);
        match self.dimension {
            Dimension::Heterogeneous => k,
            Dimension::Homogeneous => k.inaction_only(),
        }
    }
}

/// One step: new price from the current excess demand, then one uniform draw
/// per sample in index order. A switching sample is re-emitted at
/// `(-gamma, S_new, 0)`; the others accumulate herding pressure.
///
/// Rates are evaluated at the price of the start of the step.
pub fn mc_step<R: Rng + ?Sized>(
    ens: &mut SampleEnsemble,
    market: &mut MarketState,
    params: &ModelParams,
    kernel: &SwitchingKernel,
    mode: PriceMode,
    rng: &mut R,
) -> Result<usize> {
    let ed = market.ed;
    let s_old = market.s;
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
    let het = ens.dimension == Dimension::Heterogeneous;
    let dt = params.dt;
    let mut switches = 0usize;
    let mut longs = 0usize;
    for ((g, m), c) in ens
        .gamma
        .iter_mut()
        .zip(ens.m.iter_mut())
        .zip(ens.c.iter_mut())
    {
        let rate = kernel.rate(*c, *m, s_old);
        let u = rng::uniform(rng);
        if rate > 0.0 && u < effective_switch_prob(rate, dt) {
            *g = g.flipped();
            *m = s;
            *c = 0.0;
            switches += 1;
        } else if het {
            *c = crate::abm::herding_update(*g, *c, ed, dt);
        }
        longs += (*g == Position::Long) as usize;
    }
    *market = MarketState {
        s,
        ed: signed_fraction(longs, ens.len()),
        ed_prev: ed,
        t: market.t + dt,
    };
    Ok(switches)
}

/// Runs an ensemble over `[0, t_end]`.
pub fn run_mc<R: Rng + ?Sized>(
    ens: &mut SampleEnsemble,
    params: &ModelParams,
    mode: PriceMode,
    rng: &mut R,
) -> Result<SimulationRecord> {
    run_mc_with(ens, params, mode, rng, |_, _| {})
}

/// Like [`run_mc`], calling `inspect` after every step.
pub fn run_mc_with<R, F>(
    ens: &mut SampleEnsemble,
    params: &ModelParams,
    mode: PriceMode,
    rng: &mut R,
    mut inspect: F,
) -> Result<SimulationRecord>
where
    R: Rng + ?Sized,
    F: FnMut(&SampleEnsemble, &MarketState),
{
    let params = params.validate()?;
    let kernel = ens.kernel(&params);
    let steps = params.n_steps();
    let mut market = MarketState::initial(params.s0, ens.excess_demand());
    let mut record = SimulationRecord::with_capacity(steps + 1);
    record.push(&market);
    for k in 1..=steps {
        mc_step(ens, &mut market, &params, &kernel, mode, rng)?;
        market.t = k as f64 * params.dt;
        record.push(&market);
        inspect(ens, &market);
    }
    Ok(record)
}

/// Histogram of an ensemble on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub field: DensityField,
    pub out_of_range: usize,
    pub warning: Option<String>,
}

/// Cell value = samples of the species in the cell / (N * cell area).
///
/// Samples outside the mesh are counted; more than 1% of them produces a
/// warning.
pub fn reconstruct_density(ens: &SampleEnsemble, mesh: &Mesh) -> Reconstruction {
    let mut field = DensityField::zeros(mesh.clone());
    let mut plus = alloc::vec![0usize; mesh.len()];
    let mut minus = alloc::vec![0usize; mesh.len()];
    let n = ens.len() as f64;
    let mut out = 0usize;
    let spec = mesh.spec();
    for k in 0..ens.len() {
        let i = match mesh.m_cell(ens.m[k]) {
            Ok(i) => i,
            Err(_) => {
                out += 1;
                continue;
            }
        };
        let j = if mesh.is_heterogeneous() {
            let c = ens.c[k];
            if !(c >= spec.c_lo && c <= spec.c_hi) {
                out += 1;
                continue;
            }
            (math::floor((c - spec.c_lo) / mesh.dc()) as usize).min(mesh.n_c() - 1)
        } else {
            0
        };
        let idx = mesh.index(i, j);
        match ens.gamma[k] {
            Position::Long => plus[idx] += 1,
            Position::Short => minus[idx] += 1,
        }
    }
    for k in 0..mesh.len() {
        let a = n * mesh.area(k % mesh.n_m(), k / mesh.n_m());
        field.plus[k] = plus[k] as f64 / a;
        field.minus[k] = minus[k] as f64 / a;
    }
    let warning = (out as f64 > 0.01 * n).then(|| {
        format!(
            "{out} of {} samples outside the reconstruction grid",
            ens.len()
        )
    });
    Reconstruction {
        field,
        out_of_range: out,
        warning,
    }
}
