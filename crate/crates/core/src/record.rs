//! Time series produced by a simulation run.

use alloc::string::String;
use alloc::vec::Vec;

use crate::price::MarketState;

/// Model tier that produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tier {
    Abm,
    Kinetic,
    MeanFieldFv,
    MeanFieldMc,
}

impl Tier {
    pub const ALL: [Tier; 4] = [
        Tier::Abm,
        Tier::Kinetic,
        Tier::MeanFieldFv,
        Tier::MeanFieldMc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tier::Abm => "abm",
            Tier::Kinetic => "kinetic",
            Tier::MeanFieldFv => "mf-fv",
            Tier::MeanFieldMc => "mf-mc",
        }
    }

    pub fn from_name(name: &str) -> Option<Tier> {
        Tier::ALL.into_iter().find(|t| t.name() == name)
    }
}

/// Price and excess-demand series sampled at every step, `t = 0` included.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationRecord {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub ed: Vec<f64>,
    pub warnings: Vec<String>,
}

impl SimulationRecord {
    pub fn with_capacity(n: usize) -> Self {
        SimulationRecord {
            t: Vec::with_capacity(n),
            s: Vec::with_capacity(n),
            ed: Vec::with_capacity(n),
            warnings: Vec::new(),
        }
    }

    pub fn push(&mut self, m: &MarketState) {
        self.t.push(m.t);
        self.s.push(m.s);
        self.ed.push(m.ed);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn warn(&mut self, msg: String) {
        if !self.warnings.contains(&msg) {
            self.warnings.push(msg);
        }
    }
}
