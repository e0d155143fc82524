use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::params::Violation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {}", join(.0))]
    InvalidParams(Vec<Violation>),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("excess demand of an empty population is undefined")]
    EmptyPopulation,
    #[error("price left the positive half-line at t={t}: S={price}")]
    NonPositivePrice { t: f64, price: f64 },
    #[error(
        "price S={price} lies outside the memory axis [{lo}, {hi}]; the grid domain is too small"
    )]
    OutsideDomain { price: f64, lo: f64, hi: f64 },
    #[error("time step {dt} exceeds the stability bound {bound}")]
    Unstable { dt: f64, bound: f64 },
    #[error("series too short: need at least {needed} values, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("non-positive price {0} in series")]
    NonPositiveSeriesValue(f64),
    #[error("invalid lag: {0}")]
    InvalidLag(usize),
    #[error("state has not converged (last per-step L1 change {0:e})")]
    NotConverged(f64),
    #[error("mixed-mass state with ED={ed} cannot be a heterogeneous equilibrium")]
    ExcludedHeterogeneousState { ed: f64 },
    #[error("state does not match any equilibrium class: {0}")]
    NoEquilibriumClass(&'static str),
    #[error("reference density vanishes where the compared density is positive (cell {0})")]
    ReferenceVanishes(usize),
    #[error("densities live on different grids")]
    GridMismatch,
    #[error("{0}")]
    Invalid(&'static str),
}

fn join(v: &[Violation]) -> impl fmt::Display + '_ {
    struct J<'a>(&'a [Violation]);
    impl fmt::Display for J<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            for (i, x) in self.0.iter().enumerate() {
                if i > 0 {
                    f.write_str("; ")?;
                }
                write!(f, "{x}")?;
            }
            Ok(())
        }
    }
    J(v)
}
