//! Named experiment presets, one per reproduced figure.
//!
//! A figure has one or more arms (e.g. inaction-only vs. full pressures, or
//! theta = 0 vs. theta = 2); each arm is a complete [`ExperimentSpec`].

use crossmf_core::meanfield::{Dimension, InitialDensity, Reemission};
use crossmf_core::{GridSpec, ModelParams, Preset, Pressures, Tier};

use crate::experiment::{ExperimentSpec, MeanFieldSetup};

/// Seeds of stochastic figure ensembles.
pub const ENSEMBLE_SEEDS: u64 = 10;

/// ED(0) of the mean-field presets; matches the 667/333 split of the agent tiers.
pub const MF_ED0: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub name: &'static str,
    pub spec: ExperimentSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    FirstOriginal,
    SecondOriginal,
    KineticFirst,
    KineticSecond,
    Homo1,
    Hetero1,
    Hetero2,
    Ode1,
    Ode2,
    MonteCarlo,
    Supp,
    Stability,
    StabH,
    SuppH,
}

impl Figure {
    pub const ALL: [Figure; 14] = [
        Figure::FirstOriginal,
        Figure::SecondOriginal,
        Figure::KineticFirst,
        Figure::KineticSecond,
        Figure::Homo1,
        Figure::Hetero1,
        Figure::Hetero2,
        Figure::Ode1,
        Figure::Ode2,
        Figure::MonteCarlo,
        Figure::Supp,
        Figure::Stability,
        Figure::StabH,
        Figure::SuppH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::FirstOriginal => "fig-firstOriginal",
            Figure::SecondOriginal => "fig-secondOriginal",
            Figure::KineticFirst => "fig-KineticParticlefirst",
            Figure::KineticSecond => "fig-KineticParticlesecond",
            Figure::Homo1 => "fig-homo1",
            Figure::Hetero1 => "fig-hetero1",
            Figure::Hetero2 => "fig-hetero2",
            Figure::Ode1 => "fig-ODE1",
            Figure::Ode2 => "fig-ODE2",
            Figure::MonteCarlo => "fig-MC",
            Figure::Supp => "fig-Supp",
            Figure::Stability => "fig-Stability",
            Figure::StabH => "fig-StabH",
            Figure::SuppH => "fig-SuppH",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Figure::FirstOriginal => "ABM returns, inaction-only vs full pressures, theta = 0",
            Figure::SecondOriginal => "ABM full pressures, theta = 0 vs theta = 2",
            Figure::KineticFirst => "kinetic particle returns, inaction-only vs full, theta = 0",
            Figure::KineticSecond => "kinetic particle full pressures, theta = 0 vs theta = 2",
            Figure::Homo1 => "homogeneous mean-field, stochastic price, theta = 0",
            Figure::Hetero1 => "heterogeneous mean-field, stochastic price, theta = 0",
            Figure::Hetero2 => "heterogeneous mean-field, theta = 0 vs theta = 2",
            Figure::Ode1 => "homogeneous mean-field, deterministic price",
            Figure::Ode2 => "heterogeneous mean-field, deterministic price",
            Figure::MonteCarlo => "Monte Carlo vs finite volume, deterministic price",
            Figure::Supp => "homogeneous null-space data, ED(0) = 0",
            Figure::Stability => "homogeneous mean-field from ED(0) = 0.99",
            Figure::StabH => "heterogeneous mean-field from ED(0) = 0.01",
            Figure::SuppH => "heterogeneous null-space data, ED(0) = 1/3",
        }
    }

    pub fn from_name(name: &str) -> Option<Figure> {
        Figure::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arms(self) -> Vec<Arm> {
        use Figure::*;
        let abm = Preset::AbmOriginal.config().params;
        let kin = Preset::KineticParticle.config().params;
        let mf = Preset::MeanField.config().params;
        let arm = |name, spec| Arm { name, spec };
        match self {
            FirstOriginal => vec![
                arm(
                    "inaction-only",
                    ensemble(Tier::Abm, Pressures::InactionOnly, abm),
                ),
                arm("full", ensemble(Tier::Abm, Pressures::Full, abm)),
            ],
            SecondOriginal => vec![
                arm("theta0", ensemble(Tier::Abm, Pressures::Full, abm)),
                arm(
                    "theta2",
                    ensemble(Tier::Abm, Pressures::Full, abm.with_theta(2.0)),
                ),
            ],
            KineticFirst => vec![
                arm(
                    "inaction-only",
                    ensemble(Tier::Kinetic, Pressures::InactionOnly, kin),
                ),
                arm("full", ensemble(Tier::Kinetic, Pressures::Full, kin)),
            ],
            KineticSecond => vec![
                arm("theta0", ensemble(Tier::Kinetic, Pressures::Full, kin)),
                arm(
                    "theta2",
                    ensemble(Tier::Kinetic, Pressures::Full, kin.with_theta(2.0)),
                ),
            ],
            Homo1 => vec![arm(
                "homogeneous",
                stochastic_mf(Dimension::Homogeneous, mf),
            )],
            Hetero1 => vec![arm("full", stochastic_mf(Dimension::Heterogeneous, mf))],
            Hetero2 => vec![
                arm("theta0", stochastic_mf(Dimension::Heterogeneous, mf)),
                arm(
                    "theta2",
                    stochastic_mf(Dimension::Heterogeneous, mf.with_theta(2.0)),
                ),
            ],
            Ode1 => vec![arm(
                "homogeneous",
                deterministic_fv(Dimension::Homogeneous, block(MF_ED0)),
            )],
            Ode2 => vec![arm(
                "full",
                deterministic_fv(Dimension::Heterogeneous, block(MF_ED0)),
            )],
            MonteCarlo => {
                let (fv, mc) = cross_solver_pair();
                vec![arm("mf-fv", fv), arm("mf-mc", mc)]
            }
            Supp => vec![arm(
                "homogeneous",
                deterministic_fv(
                    Dimension::Homogeneous,
                    InitialDensity::NullSpace { ed0: 0.0 },
                ),
            )],
            Stability => vec![arm(
                "homogeneous",
                deterministic_fv(Dimension::Homogeneous, block(0.99)),
            )],
            StabH => vec![arm(
                "full",
                deterministic_fv(Dimension::Heterogeneous, block(0.01)),
            )],
            SuppH => vec![arm(
                "full",
                deterministic_fv(
                    Dimension::Heterogeneous,
                    InitialDensity::NullSpace { ed0: MF_ED0 },
                ),
            )],
        }
    }
}

fn block(ed0: f64) -> InitialDensity {
    InitialDensity::UniformBlock { ed0 }
}

fn ensemble(tier: Tier, pressures: Pressures, params: ModelParams) -> ExperimentSpec {
    ExperimentSpec {
        seeds: (0..ENSEMBLE_SEEDS).collect(),
        ..ExperimentSpec::new(tier, pressures, params)
    }
}

/// Log-spaced memory window `[S/3, 3S]` following the price, with the
/// preset resolution and herding range.
pub fn tracking_grid(params: &ModelParams) -> GridSpec {
    let g = Preset::MeanField
        .config()
        .grid
        .expect("meanfield preset has a grid");
    GridSpec::tracking(params.s0, 3.0, g.n_m, g.c_hi, g.n_c)
}

pub fn stochastic_mf(dimension: Dimension, params: ModelParams) -> ExperimentSpec {
    let pressures = match dimension {
        Dimension::Homogeneous => Pressures::InactionOnly,
        Dimension::Heterogeneous => Pressures::Full,
    };
    ExperimentSpec {
        meanfield: Some(MeanFieldSetup::new(
            tracking_grid(&params),
            dimension,
            block(MF_ED0),
        )),
        ..ensemble(Tier::MeanFieldFv, pressures, params)
    }
}

pub fn deterministic_fv(dimension: Dimension, init: InitialDensity) -> ExperimentSpec {
    let cfg = Preset::MeanField.config();
    let pressures = match dimension {
        Dimension::Homogeneous => Pressures::InactionOnly,
        Dimension::Heterogeneous => Pressures::Full,
    };
    ExperimentSpec {
        deterministic: true,
        meanfield: Some(MeanFieldSetup::new(cfg.grid.unwrap(), dimension, init)),
        save_density: true,
        ..ExperimentSpec::new(Tier::MeanFieldFv, pressures, cfg.params)
    }
}

/// Grid of the solver comparison: fine enough in `m` and `c` to resolve the
/// switching cascades of the first milliseconds.
pub fn cross_solver_grid() -> GridSpec {
    GridSpec::linear(0.6, 1.4, 400, 0.0, 0.005, 400)
}

/// Finite-volume and Monte Carlo specs of the solver comparison: theta = 2,
/// deterministic price, dt = dt_cross / 4, re-emission at the new price.
pub fn cross_solver_pair() -> (ExperimentSpec, ExperimentSpec) {
    let cfg = Preset::MeanField.config();
    let params = ModelParams {
        dt: cfg.params.dt / 4.0,
        ..cfg.params.with_theta(2.0)
    };
    let setup = MeanFieldSetup {
        reemission: Reemission::Next,
        ..MeanFieldSetup::new(cross_solver_grid(), Dimension::Heterogeneous, block(MF_ED0))
    };
    let base = ExperimentSpec {
        deterministic: true,
        meanfield: Some(setup),
        save_density: true,
        ..ExperimentSpec::new(Tier::MeanFieldFv, Pressures::Full, params)
    };
    let mc = ExperimentSpec {
        tier: Tier::MeanFieldMc,
        ..base.clone()
    };
    (base, mc)
}
