//! Time stepping of the coupled density-price system.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;

use super::field::{ed_functional, DensityField, Quadrature};
use super::operator::StepOperator;
use super::{CrossShape, ShapeFunction};
use crate::kinetic::positive;
use crate::params::ModelParams;
use crate::price::{self, MarketState, PriceMode};
use crate::record::SimulationRecord;
use crate::rng;
use crate::Result;

/// Mass in the last herding row above which a run is flagged.
const BOUNDARY_MASS: f64 = 1e-6;

/// Price at which switched mass is re-emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reemission {
    /// The price at the start of the step.
    #[default]
    Current,
    /// The price at the end of the step, as in the Monte Carlo solver.
    Next,
}

/// Finite-volume solver for the mean-field model.
///
/// A step freezes price and excess demand, applies advection and collision to
/// the densities, advances the price by Euler-Maruyama (or its drift alone)
/// and finally recomputes the excess demand from the new densities.
#[derive(Debug, Clone)]
pub struct FvSolver<H: ShapeFunction = CrossShape> {
    pub field: DensityField,
    pub market: MarketState,
    params: ModelParams,
    op: StepOperator,
    shape: H,
    mode: PriceMode,
    quadrature: Quadrature,
    track_change: bool,
    last_change: Option<f64>,
    previous: Option<(Vec<f64>, Vec<f64>)>,
    reemission: Reemission,
    warnings: Vec<alloc::string::String>,
}

impl FvSolver<CrossShape> {
    pub fn new(field: DensityField, params: &ModelParams, mode: PriceMode) -> Result<Self> {
        Self::with_shape(field, params, mode, CrossShape)
    }
}

impl<H: ShapeFunction> FvSolver<H> {
    pub fn with_shape(
        field: DensityField,
        params: &ModelParams,
        mode: PriceMode,
        shape: H,
    ) -> Result<Self> {
        let params = params.validate()?;
        field.mesh.spec().validate(params.s0)?;
        let op = StepOperator::new(&params, &field.mesh);
        op.check_stable(&field.mesh, &shape)?;
        let ed0 = ed_functional(&field, Quadrature::Midpoint);
        Ok(FvSolver {
            field,
            market: MarketState::initial(params.s0, ed0),
            params,
            op,
            shape,
            mode,
            quadrature: Quadrature::Midpoint,
            track_change: false,
            last_change: None,
            previous: None,
            reemission: Reemission::Current,
            warnings: Vec::new(),
        })
    }

    /// Quadrature used for the excess demand fed back into the price.
    pub fn with_quadrature(mut self, rule: Quadrature) -> Self {
        self.quadrature = rule;
        self.market = MarketState::initial(self.params.s0, ed_functional(&self.field, rule));
        self
    }

    /// Replaces the switching kernel, e.g. to switch pressures off entirely.
    pub fn with_kernel(mut self, kernel: crate::kinetic::SwitchingKernel) -> Result<Self> {
        self.op = StepOperator::with_kernel(kernel, self.params.dt);
        self.op.check_stable(&self.field.mesh, &self.shape)?;
        Ok(self)
    }

    pub fn with_reemission(mut self, r: Reemission) -> Self {
        self.reemission = r;
        self
    }

    /// Records the L1 change of the densities at every step.
    pub fn tracking_change(mut self) -> Self {
        self.track_change = true;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn operator(&self) -> &StepOperator {
        &self.op
    }

    pub fn shape(&self) -> &H {
        &self.shape
    }

    /// L1 change of the last step, if tracking is enabled.
    pub fn last_change(&self) -> Option<f64> {
        self.last_change
    }

    pub fn warnings(&self) -> &[alloc::string::String] {
        &self.warnings
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let d = self.field.mesh.recenter_shift(self.market.s);
        self.field.shift(d);
        let s = match self.mode {
            PriceMode::Stochastic => {
                let eta = rng::standard_normal(rng);
                price::price_step_euler_maruyama(&self.market, &self.params, eta)?
            }
            PriceMode::Deterministic => positive(
                price::price_step_deterministic(&self.market, &self.params),
                &self.market,
                &self.params,
            )?,
        };
        let mut co =
            self.op
                .coefficients(&self.field.mesh, self.market.s, self.market.ed, &self.shape)?;
        if self.reemission == Reemission::Next {
            co.deposit = self.field.mesh.deposit_cell(s)?;
        }
        if self.track_change {
            let (p, m) = self.previous.get_or_insert_with(Default::default);
            p.clone_from(&self.field.plus);
            m.clone_from(&self.field.minus);
        }
        self.op.forward(&mut self.field, &co);
        if let Some((p, m)) = &self.previous {
            self.last_change = Some(self.field.l1_change(p, m));
        }
        let ed = ed_functional(&self.field, self.quadrature);
        self.market = MarketState {
            s,
            ed,
            ed_prev: self.market.ed,
            t: self.market.t + self.params.dt,
        };
        let top = self.field.top_row_mass();
        if top > BOUNDARY_MASS && self.warnings.is_empty() {
            self.warnings.push(format!(
                "herding boundary reached at t = {:.6}: mass {:.3e} in the last row",
                self.market.t, top
            ));
        }
        Ok(())
    }

    /// Runs `params.n_steps()` steps and returns the price record.
    pub fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<SimulationRecord> {
        self.run_with(rng, self.params.n_steps(), |_| {})
    }

    /// Runs `n` steps, calling `inspect` after each one.
    pub fn run_with<R, F>(
        &mut self,
        rng: &mut R,
        n: usize,
        mut inspect: F,
    ) -> Result<SimulationRecord>
    where
        R: Rng + ?Sized,
        F: FnMut(&Self),
    {
        let mut record = SimulationRecord::with_capacity(n + 1);
        let k0 = libm::round(self.market.t / self.params.dt) as usize;
        record.push(&self.market);
        for k in 1..=n {
            self.step(rng)?;
            self.market.t = (k0 + k) as f64 * self.params.dt;
            record.push(&self.market);
            inspect(self);
        }
        for w in &self.warnings {
            record.warn(w.clone());
        }
        Ok(record)
    }
}

/// Detects a steady state: per-step change below `tol` for `window`
/// consecutive steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceMonitor {
    pub tol: f64,
    pub window: usize,
    streak: usize,
    steps: usize,
    converged_at: Option<usize>,
}

impl Default for ConvergenceMonitor {
    fn default() -> Self {
        ConvergenceMonitor::new(1e-8, 100)
    }
}

impl ConvergenceMonitor {
    pub fn new(tol: f64, window: usize) -> Self {
        ConvergenceMonitor {
            tol,
            window,
            streak: 0,
            steps: 0,
            converged_at: None,
        }
    }

    /// Feeds one per-step change; returns whether the state has converged.
    pub fn push(&mut self, change: f64) -> bool {
        self.steps += 1;
        if change < self.tol {
            self.streak += 1;
        } else {
            self.streak = 0;
            self.converged_at = None;
        }
        if self.streak >= self.window && self.converged_at.is_none() {
            self.converged_at = Some(self.steps + 1 - self.window);
        }
        self.converged()
    }

    pub fn converged(&self) -> bool {
        self.streak >= self.window
    }

    /// First step of the current sub-tolerance streak, once it is long enough.
    pub fn converged_at(&self) -> Option<usize> {
        self.converged_at
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

#[cfg(test)]
mod tests {
    use super::super::{InitialDensity, Mesh};
    use super::*;
    use crate::params::{GridSpec, Preset};
    use crate::rng::stream;

    #[test]
    fn zero_rate_and_zero_demand_leave_field_unchanged() {
        let c = Preset::MeanField.config();
        let mut p = c.params;
        p.t_end = 0.004;
        let mut k = crate::kinetic::SwitchingKernel::new(&p);
        k.lambda1 = 0.0;
        k.lambda2 = 0.0;
        let g = GridSpec {
            n_m: 40,
            n_c: 40,
            ..c.grid.unwrap()
        };
        let f = DensityField::initial(
            Mesh::heterogeneous(g),
            &p,
            InitialDensity::UniformBlock { ed0: 0.0 },
        )
        .unwrap();
        let mut s = FvSolver::new(f.clone(), &p, PriceMode::Stochastic)
            .unwrap()
            .with_kernel(k)
            .unwrap();
        let rec = s.run(&mut stream(1, 0)).unwrap();
        assert_eq!(s.field, f);
        assert!(rec.ed.iter().all(|&e| e == 0.0));
        assert!(rec.s.iter().any(|&x| x != 1.0));
    }

    #[test]
    fn unstable_step_is_rejected() {
        let c = Preset::MeanField.config();
        let mut p = c.params;
        p.dt = 1e-4;
        let f = DensityField::initial(
            Mesh::heterogeneous(c.grid.unwrap()),
            &p,
            InitialDensity::UniformBlock { ed0: 0.0 },
        )
        .unwrap();
        assert!(matches!(
            FvSolver::new(f, &p, PriceMode::Deterministic),
            Err(crate::Error::Unstable { .. })
        ));
    }

    #[test]
    fn monitor_needs_a_full_window() {
        let mut m = ConvergenceMonitor::new(1e-8, 3);
        assert!(!m.push(1e-9));
        assert!(!m.push(1e-9));
        assert!(!m.push(1.0));
        assert!(!m.push(1e-9));
        assert!(!m.push(1e-9));
        assert!(m.push(1e-9));
        assert_eq!(m.converged_at(), Some(4));
    }
}
