//! Simulators for the Cross threshold model of a single-asset market at three
//! levels of description:
//!
//! - [`abm`]: the original agent-based model with personal inaction and
//!   herding thresholds,
//! - [`kinetic`]: the kinetic particle model where thresholds are replaced by
//!   switching probabilities,
//! - [`meanfield`] and [`mc`]: the mean-field PDE-SDE limit, solved either by a
//!   finite-volume scheme or by a Monte Carlo particle method.
//!
//! [`stats`] measures the stylized facts of the resulting return series and
//! [`diagnostics`] checks conservation, steady states and relative entropy of
//! the mean-field solutions.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the companion `crossmf` crate.

#![no_std]

extern crate alloc;

pub mod abm;
pub mod diagnostics;
pub mod error;
pub mod kinetic;
pub(crate) mod math;
pub mod mc;
pub mod meanfield;
pub mod params;
pub mod price;
pub mod record;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use params::{AxisScale, GridSpec, ModelParams, Preset, PresetConfig};
pub use price::{MarketState, Position, PriceMode};
pub use record::{SimulationRecord, Tier};

/// Which psychological pressures drive switching.
///
/// `InactionOnly` is the "rational" arm: herding pressure is never
/// accumulated and, in the kinetic and mean-field tiers, the switching
/// probability reduces to the inaction ramp alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pressures {
    InactionOnly,
    Full,
}

impl Pressures {
    pub fn herding(self) -> bool {
        matches!(self, Pressures::Full)
    }

    pub fn name(self) -> &'static str {
        match self {
            Pressures::InactionOnly => "inaction-only",
            Pressures::Full => "full",
        }
    }
}
