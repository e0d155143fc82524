//! Model parameters, grid specifications and the built-in presets.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::{Error, Result};

/// Scalar parameters shared by every model tier.
///
/// `dt_cross` is the characteristic step of the agent-based model. It sets the
/// herding thresholds `B1 = b1 * dt_cross`, `B2 = b2 * dt_cross` and turns
/// switching probabilities into rates. It normally equals `dt`; a mean-field
/// run may refine `dt` while keeping `dt_cross` fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub kappa: f64,
    pub theta: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub dt: f64,
    pub t_end: f64,
    pub n_agents: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub s0: f64,
    pub seed: u64,
    pub dt_cross: f64,
}

/// One violated invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ModelParams {
    /// Lower herding threshold `B1 = b1 * dt_cross`.
    pub fn big_b1(&self) -> f64 {
        self.b1 * self.dt_cross
    }

    /// Upper herding threshold `B2 = b2 * dt_cross`.
    pub fn big_b2(&self) -> f64 {
        self.b2 * self.dt_cross
    }

    /// Number of steps covering `[0, t_end]`.
    pub fn n_steps(&self) -> usize {
        math::round(self.t_end / self.dt) as usize
    }

    /// Number of agents holding a long position initially: `ceil(2N/3)`.
    pub fn initial_longs(&self) -> usize {
        (2 * self.n_agents).div_ceil(3)
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_weights(mut self, lambda1: f64, lambda2: f64) -> Self {
        self.lambda1 = lambda1;
        self.lambda2 = lambda2;
        self
    }

    /// Checks every invariant and returns the parameters unchanged if all hold.
    pub fn validate(self) -> Result<Self> {
        let mut v = Vec::new();
        let mut check = |ok: bool, field, message| {
            if !ok {
                v.push(Violation { field, message });
            }
        };
        let finite = [
            self.kappa,
            self.theta,
            self.a1,
            self.a2,
            self.b1,
            self.b2,
            self.dt,
            self.t_end,
            self.lambda1,
            self.lambda2,
            self.s0,
            self.dt_cross,
        ]
        .iter()
        .all(|x| x.is_finite());
        check(finite, "params", "all scalars must be finite");
        check(self.a1 > 0.0, "a1", "A1 > 0 violated");
        check(self.a1 < self.a2, "a2", "A1 < A2 violated");
        check(self.b1 > 0.0, "b1", "b1 > 0 violated");
        check(self.b1 < self.b2, "b2", "b1 < b2 violated");
        check(self.dt > 0.0, "dt", "dt > 0 violated");
        check(self.dt_cross > 0.0, "dt_cross", "dt_cross > 0 violated");
        check(self.t_end > 0.0, "t_end", "t_end > 0 violated");
        check(self.n_agents > 0, "n_agents", "n_agents > 0 violated");
        check(self.s0 > 0.0, "s0", "s0 > 0 violated");
        check(self.kappa > 0.0, "kappa", "kappa > 0 violated");
        check(self.theta >= 0.0, "theta", "theta >= 0 violated");
        check(self.lambda1 >= 0.0, "lambda1", "lambda1 >= 0 violated");
        check(self.lambda2 >= 0.0, "lambda2", "lambda2 >= 0 violated");
        check(
            math::abs(self.lambda1 + self.lambda2 - 1.0) <= 1e-12,
            "lambda2",
            "lambda1 + lambda2 = 1 violated",
        );
        let (bb1, bb2) = (self.big_b1(), self.big_b2());
        check(bb1 > 0.0 && bb1 < bb2, "dt_cross", "0 < B1 < B2 violated");
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(v))
        }
    }
}

/// Spacing of cells along the memory axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisScale {
    Linear,
    /// Geometric spacing: every cell has the same width in `ln m`.
    Log,
}

impl AxisScale {
    pub fn name(self) -> &'static str {
        match self {
            AxisScale::Linear => "linear",
            AxisScale::Log => "log",
        }
    }
}

/// Finite-volume grid over memory `m` and herding pressure `c`.
///
/// With `recenter` set (log axis only) the memory window follows the price in
/// whole-cell shifts, so stochastic runs never leave the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub m_lo: f64,
    pub m_hi: f64,
    pub n_m: usize,
    pub c_lo: f64,
    pub c_hi: f64,
    pub n_c: usize,
    pub m_scale: AxisScale,
    pub recenter: bool,
}

impl GridSpec {
    pub fn linear(m_lo: f64, m_hi: f64, n_m: usize, c_lo: f64, c_hi: f64, n_c: usize) -> Self {
        GridSpec {
            m_lo,
            m_hi,
            n_m,
            c_lo,
            c_hi,
            n_c,
            m_scale: AxisScale::Linear,
            recenter: false,
        }
    }

    /// Log-spaced memory window `[s0 / span, s0 * span]` that tracks the price.
    pub fn tracking(s0: f64, span: f64, n_m: usize, c_hi: f64, n_c: usize) -> Self {
        GridSpec {
            m_lo: s0 / span,
            m_hi: s0 * span,
            n_m,
            c_lo: 0.0,
            c_hi,
            n_c,
            m_scale: AxisScale::Log,
            recenter: true,
        }
    }

    pub fn dc(&self) -> f64 {
        (self.c_hi - self.c_lo) / self.n_c as f64
    }

    /// Checks the grid invariants against the initial price `s0`.
    pub fn validate(self, s0: f64) -> Result<Self> {
        let mut v = Vec::new();
        let mut check = |ok: bool, field, message| {
            if !ok {
                v.push(Violation { field, message });
            }
        };
        check(self.m_lo < self.m_hi, "m_hi", "m_lo < m_hi violated");
        check(self.c_lo < self.c_hi, "c_hi", "c_lo < c_hi violated");
        check(self.n_m >= 2, "n_m", "n_m >= 2 violated");
        check(self.n_c >= 2, "n_c", "n_c >= 2 violated");
        check(
            self.m_lo < s0 && s0 < self.m_hi,
            "m_lo",
            "s0 strictly inside the memory axis violated",
        );
        check(
            self.c_lo <= 0.0 && 0.0 < self.c_hi,
            "c_lo",
            "c = 0 inside the herding axis violated",
        );
        check(
            self.m_scale == AxisScale::Linear || self.m_lo > 0.0,
            "m_lo",
            "log axis requires m_lo > 0",
        );
        check(
            !self.recenter || self.m_scale == AxisScale::Log,
            "recenter",
            "recentering requires a log axis",
        );
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(v))
        }
    }
}

/// The built-in parameter tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    AbmOriginal,
    KineticParticle,
    MeanField,
}

/// Parameters plus, for mean-field presets, a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetConfig {
    pub params: ModelParams,
    pub grid: Option<GridSpec>,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::AbmOriginal,
        Preset::KineticParticle,
        Preset::MeanField,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::AbmOriginal => "abm-original",
            Preset::KineticParticle => "kinetic-particle",
            Preset::MeanField => "meanfield",
        }
    }

    pub fn config(self) -> PresetConfig {
        let base = ModelParams {
            kappa: 0.2,
            theta: 0.0,
            a1: 0.1,
            a2: 0.3,
            b1: 25.0,
            b2: 100.0,
            dt: 4e-5,
            t_end: 0.4,
            n_agents: 1000,
            lambda1: 0.5,
            lambda2: 0.5,
            s0: 1.0,
            seed: 1,
            dt_cross: 4e-5,
        };
        match self {
            Preset::AbmOriginal => PresetConfig {
                params: base,
                grid: None,
            },
            Preset::KineticParticle => PresetConfig {
                params: ModelParams {
                    n_agents: 30_000,
                    ..base
                },
                grid: None,
            },
            Preset::MeanField => {
                // c extends to 5*B2 so that the upwind CFL number at |ED| = 1 is 0.8.
                let c_hi = 5.0 * base.big_b2();
                PresetConfig {
                    params: ModelParams {
                        n_agents: 100_000,
                        ..base
                    },
                    grid: Some(GridSpec::linear(0.25, 2.5, 400, 0.0, c_hi, 400)),
                }
            }
        }
    }
}

/// Looks up a preset by name.
pub fn load_preset(name: &str) -> Result<PresetConfig> {
    Preset::ALL
        .iter()
        .find(|p| p.name() == name)
        .map(|p| p.config())
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abm() -> ModelParams {
        load_preset("abm-original").unwrap().params
    }

    #[test]
    fn preset_values() {
        assert_eq!(abm().kappa, 0.2);
        assert_eq!(abm().n_agents, 1000);
        assert_eq!(
            load_preset("kinetic-particle").unwrap().params.n_agents,
            30_000
        );
        let mf = load_preset("meanfield").unwrap();
        let g = mf.grid.unwrap();
        assert_eq!((g.n_m, g.n_c), (400, 400));
        for p in Preset::ALL {
            let c = p.config().params;
            assert_eq!(
                (c.a1, c.a2, c.b1, c.b2, c.dt, c.t_end, c.s0),
                (0.1, 0.3, 25.0, 100.0, 4e-5, 0.4, 1.0)
            );
        }
    }

    #[test]
    fn derived_thresholds() {
        let p = abm();
        assert!((p.big_b2() - 4e-3).abs() < 1e-15);
        assert!((p.big_b1() - 1e-3).abs() < 1e-15);
        assert_eq!(p.n_steps(), 10_000);
        assert_eq!(p.initial_longs(), 667);
    }

    #[test]
    fn unknown_preset() {
        assert_eq!(
            load_preset("nope"),
            Err(Error::UnknownPreset("nope".into()))
        );
    }

    #[test]
    fn every_preset_validates() {
        for p in Preset::ALL {
            let c = p.config();
            c.params.validate().unwrap();
            if let Some(g) = c.grid {
                g.validate(c.params.s0).unwrap();
            }
        }
    }

    #[test]
    fn validate_reports_field() {
        let err = ModelParams {
            a1: 0.3,
            a2: 0.1,
            ..abm()
        }
        .validate()
        .unwrap_err();
        let Error::InvalidParams(v) = err else {
            panic!()
        };
        assert!(v
            .iter()
            .any(|x| x.field == "a2" && x.message == "A1 < A2 violated"));

        assert!(ModelParams { dt: 0.0, ..abm() }.validate().is_err());
        assert!(abm().with_weights(0.5, 0.5).validate().is_ok());
        assert!(abm().with_weights(0.6, 0.5).validate().is_err());
    }

    #[test]
    fn grid_must_contain_initial_price() {
        let g = GridSpec::linear(1.5, 2.5, 10, 0.0, 1.0, 10);
        assert!(g.validate(1.0).is_err());
        let g = GridSpec {
            recenter: true,
            ..GridSpec::linear(0.5, 2.5, 10, 0.0, 1.0, 10)
        };
        assert!(g.validate(1.0).is_err());
        GridSpec::tracking(1.0, 3.0, 10, 1.0, 10)
            .validate(1.0)
            .unwrap();
    }
}
