//! Checks of the structural properties of the mean-field model: the
//! collision invariant, null-space steady states, the classification of
//! equilibria, the dual problem and the general relative entropy.

use alloc::vec;
use alloc::vec::Vec;

use crate::kinetic::SwitchingKernel;
use crate::meanfield::{
    collision_apply, rate_field, ConvergenceMonitor, CrossShape, DensityField, Mesh, ShapeFunction,
    Species, StepOperator,
};
use crate::params::ModelParams;
use crate::{math, Error, Result};

/// Net collision production of mass and the total loss flux it is measured
/// against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantResidual {
    pub residual: f64,
    pub loss_flux: f64,
}

impl InvariantResidual {
    /// `|residual| / loss_flux`, or 0 when nothing switches.
    pub fn relative(&self) -> f64 {
        if self.loss_flux > 0.0 {
            self.residual.abs() / self.loss_flux
        } else {
            self.residual.abs()
        }
    }
}

/// `integral (Q_gain[f-] - Q_loss[f+]) + (Q_gain[f+] - Q_loss[f-])`.
pub fn collision_invariant_residual(
    field: &DensityField,
    s: f64,
    kernel: &SwitchingKernel,
) -> Result<InvariantResidual> {
    weighted_residual(field, s, kernel, |_, _| 1.0)
}

/// Collision production of `integral phi(m, c) (f+ + f-)`, with `phi`
/// evaluated at cell centers. Vanishes for constant `phi` only.
pub fn weighted_residual<F: Fn(f64, f64) -> f64>(
    field: &DensityField,
    s: f64,
    kernel: &SwitchingKernel,
    phi: F,
) -> Result<InvariantResidual> {
    let d = collision_apply(field, s, kernel)?;
    let mesh = &field.mesh;
    let n_m = mesh.n_m();
    let cs = mesh.c_centers();
    let rates = rate_field(mesh, s, kernel);
    let (mut res, mut loss) = (0.0, 0.0);
    for k in 0..mesh.len() {
        let (i, j) = (k % n_m, k / n_m);
        let a = mesh.area(i, j);
        let w = phi(
            mesh.m_centers()[i],
            if mesh.is_heterogeneous() { cs[j] } else { 0.0 },
        );
        res += w * (d.plus[k] + d.minus[k]) * a;
        loss += rates[k] * (field.plus[k] + field.minus[k]) * a;
    }
    Ok(InvariantResidual {
        residual: res,
        loss_flux: loss,
    })
}

/// Mass of a species on cells whose rate exceeds `rate_tol`.
pub fn switching_mass(
    field: &DensityField,
    sp: Species,
    s: f64,
    kernel: &SwitchingKernel,
    rate_tol: f64,
) -> f64 {
    let rates = rate_field(&field.mesh, s, kernel);
    let f = field.species(sp);
    let n_m = field.mesh.n_m();
    (0..f.len())
        .filter(|&k| rates[k] > rate_tol)
        .map(|k| f[k] * field.mesh.area(k % n_m, k / n_m))
        .sum()
}

/// True iff less than `tol` of the mass sits where the rate exceeds `tol`.
pub fn null_space_membership(
    field: &DensityField,
    s: f64,
    kernel: &SwitchingKernel,
    tol: f64,
) -> bool {
    let total = field.total_mass();
    let off = switching_mass(field, Species::Plus, s, kernel, tol)
        + switching_mass(field, Species::Minus, s, kernel, tol);
    off <= tol * total
}

/// Per-species version of [`null_space_membership`].
pub fn species_in_null_space(
    field: &DensityField,
    sp: Species,
    s: f64,
    kernel: &SwitchingKernel,
    tol: f64,
) -> bool {
    let mass = field.species_mass(sp);
    switching_mass(field, sp, s, kernel, tol) <= tol * mass
}

/// Equilibrium classes at constant price.
///
/// Homogeneous: `a`, `b`, `c` for zero, negative and positive excess demand;
/// `i` when one species (or both, for `a`) has vanished, `ii` when both are
/// present in the null space. Heterogeneous states are `A`, `B` or `C` by the
/// sign of the excess demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SteadyState {
    AI,
    AII,
    BI,
    BII,
    CI,
    CII,
    HeteroA,
    HeteroB,
    HeteroC,
}

impl SteadyState {
    pub fn label(self) -> &'static str {
        match self {
            SteadyState::AI => "a-i",
            SteadyState::AII => "a-ii",
            SteadyState::BI => "b-i",
            SteadyState::BII => "b-ii",
            SteadyState::CI => "c-i",
            SteadyState::CII => "c-ii",
            SteadyState::HeteroA => "A",
            SteadyState::HeteroB => "B",
            SteadyState::HeteroC => "C",
        }
    }
}

/// Classifies a converged state at price `s`.
///
/// A species counts as vanished when its mass is below `tol` times the total;
/// `tol` is also the rate threshold of the null-space test and the tolerance
/// on the excess demand.
pub fn classify_steady_state(
    field: &DensityField,
    s: f64,
    kernel: &SwitchingKernel,
    ed: f64,
    monitor: &ConvergenceMonitor,
    last_change: f64,
    tol: f64,
) -> Result<SteadyState> {
    if !monitor.converged() {
        return Err(Error::NotConverged(last_change));
    }
    let kernel = if field.mesh.is_heterogeneous() {
        *kernel
    } else {
        kernel.inaction_only()
    };
    let total = field.total_mass();
    let (mp, mm) = (
        field.species_mass(Species::Plus),
        field.species_mass(Species::Minus),
    );
    let gone = |m: f64| m <= tol * total.max(f64::MIN_POSITIVE);
    let null = |sp| species_in_null_space(field, sp, s, &kernel, tol);
    let both = !gone(mp) && !gone(mm) && null(Species::Plus) && null(Species::Minus);
    if field.mesh.is_heterogeneous() {
        if gone(total) || (ed.abs() <= tol && both && (mp - mm).abs() <= tol * total) {
            return Ok(SteadyState::HeteroA);
        }
        if ed.abs() > tol && !gone(mp) && !gone(mm) {
            return Err(Error::ExcludedHeterogeneousState { ed });
        }
        if ed < -tol && gone(mp) && null(Species::Minus) {
            return Ok(SteadyState::HeteroB);
        }
        if ed > tol && gone(mm) && null(Species::Plus) {
            return Ok(SteadyState::HeteroC);
        }
        return Err(Error::NoEquilibriumClass(
            "heterogeneous state outside A, B, C",
        ));
    }
    if gone(total) {
        return Ok(SteadyState::AI);
    }
    if ed.abs() <= tol {
        if both && (mp - mm).abs() <= tol * total {
            return Ok(SteadyState::AII);
        }
    } else if ed < 0.0 {
        if gone(mp) && null(Species::Minus) {
            return Ok(SteadyState::BI);
        }
        if both {
            return Ok(SteadyState::BII);
        }
    } else {
        if gone(mm) && null(Species::Plus) {
            return Ok(SteadyState::CI);
        }
        if both {
            return Ok(SteadyState::CII);
        }
    }
    Err(Error::NoEquilibriumClass("mass outside the null space"))
}

/// Convex functions for the relative entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvexFn {
    /// `(x - 1)^2`
    Quadratic,
    /// `x ln x`, with `0 ln 0 = 0`
    XLogX,
    /// `sqrt((x - 1)^2 + eps^2) - eps`
    SmoothAbs { eps: f64 },
}

impl ConvexFn {
    pub const CATALOG: [ConvexFn; 3] = [
        ConvexFn::Quadratic,
        ConvexFn::XLogX,
        ConvexFn::SmoothAbs { eps: 1e-3 },
    ];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            ConvexFn::Quadratic => (x - 1.0) * (x - 1.0),
            ConvexFn::XLogX => {
                if x == 0.0 {
                    0.0
                } else {
                    x * math::ln(x)
                }
            }
            ConvexFn::SmoothAbs { eps } => math::sqrt((x - 1.0) * (x - 1.0) + eps * eps) - eps,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConvexFn::Quadratic => "quadratic",
            ConvexFn::XLogX => "xlogx",
            ConvexFn::SmoothAbs { .. } => "smooth-abs",
        }
    }
}

/// Dual weights paired with a density field.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl DualField {
    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        DualField {
            plus: vec![value; mesh.len()],
            minus: vec![value; mesh.len()],
        }
    }

    pub fn min_value(&self) -> f64 {
        self.plus
            .iter()
            .chain(&self.minus)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Which dual solution weights the entropy.
#[derive(Debug, Clone, PartialEq)]
pub enum DualWeight {
    /// `psi = 1`, an exact solution of the dual problem.
    Unit,
    /// Discrete dual solution from the given terminal data.
    Solved(DualField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyConfig {
    pub k: ConvexFn,
    pub psi: DualWeight,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig {
            k: ConvexFn::Quadratic,
            psi: DualWeight::Unit,
        }
    }
}

/// `sum over species of integral psi p K(g / p)`.
///
/// Cells where both `g` and `p` vanish contribute nothing.
pub fn relative_entropy(
    g: &DensityField,
    p: &DensityField,
    psi: Option<&DualField>,
    k: ConvexFn,
) -> Result<f64> {
    if g.mesh != p.mesh {
        return Err(Error::GridMismatch);
    }
    let mesh = &g.mesh;
    let n_m = mesh.n_m();
    let mut total = 0.0;
    for sp in [Species::Plus, Species::Minus] {
        let (gv, pv) = (g.species(sp), p.species(sp));
        let w = psi.map(|d| match sp {
            Species::Plus => &d.plus,
            Species::Minus => &d.minus,
        });
        for idx in 0..gv.len() {
            let (a, b) = (gv[idx], pv[idx]);
            if b <= 0.0 {
                if a > 0.0 {
                    return Err(Error::ReferenceVanishes(idx));
                }
                continue;
            }
            let weight = w.map_or(1.0, |w| w[idx]);
            total += weight * b * k.eval(a / b) * mesh.area(idx % n_m, idx / n_m);
        }
    }
    Ok(total)
}

/// Backward solution of the discrete dual problem at constant price `s`.
///
/// `eds[k]` is the excess demand that drives step `k`; the result holds the
/// dual weights at every time level `0..=eds.len()`, ending with `terminal`.
/// Each backward step is the exact transpose of a forward step, so
/// `integral psi (f+ + f-)` pairs are preserved and constants stay constant.
pub fn solve_dual(
    params: &ModelParams,
    mesh: &Mesh,
    terminal: DualField,
    eds: &[f64],
    s: f64,
) -> Result<Vec<DualField>> {
    if terminal.plus.len() != mesh.len() || terminal.minus.len() != mesh.len() {
        return Err(Error::GridMismatch);
    }
    if !(terminal.min_value() > 0.0) {
        return Err(Error::Invalid("terminal dual data must be positive"));
    }
    let op = StepOperator::new(params, mesh);
    op.check_stable(mesh, &CrossShape)?;
    let mut out = vec![terminal];
    for &ed in eds.iter().rev() {
        let co = op.coefficients(mesh, s, ed, &CrossShape)?;
        let mut next = out.last().unwrap().clone();
        op.adjoint(mesh, &mut next.plus, &mut next.minus, &co);
        out.push(next);
    }
    out.reverse();
    Ok(out)
}

/// Evolves `g` and the positive reference `p` with the same linear operator at
/// constant price `params.s0` and returns the entropy after every step
/// (including the initial one).
///
/// The advection speed comes from the reference solution's excess demand, so
/// both fields see identical transport.
pub fn entropy_trajectory(
    params: &ModelParams,
    g0: &DensityField,
    p0: &DensityField,
    config: &EntropyConfig,
    n_steps: usize,
) -> Result<Vec<f64>> {
    entropy_trajectory_with_shape(params, g0, p0, config, n_steps, &CrossShape)
}

pub fn entropy_trajectory_with_shape<H: ShapeFunction>(
    params: &ModelParams,
    g0: &DensityField,
    p0: &DensityField,
    config: &EntropyConfig,
    n_steps: usize,
    shape: &H,
) -> Result<Vec<f64>> {
    if g0.mesh != p0.mesh {
        return Err(Error::GridMismatch);
    }
    let mesh = g0.mesh.clone();
    if p0.min_value() <= 0.0 {
        return Err(Error::Invalid(
            "reference density must be strictly positive",
        ));
    }
    let op = StepOperator::new(params, &mesh);
    op.check_stable(&mesh, shape)?;
    let s = params.s0;
    let eds = {
        let mut p = p0.clone();
        let mut eds = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            let ed = crate::meanfield::ed_functional(&p, crate::meanfield::Quadrature::Midpoint);
            eds.push(ed);
            let co = op.coefficients(&mesh, s, ed, shape)?;
            op.forward(&mut p, &co);
        }
        eds
    };
    let duals = match &config.psi {
        DualWeight::Unit => None,
        DualWeight::Solved(terminal) => Some(solve_dual(params, &mesh, terminal.clone(), &eds, s)?),
    };
    let (mut g, mut p) = (g0.clone(), p0.clone());
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(relative_entropy(
        &g,
        &p,
        duals.as_ref().map(|d| &d[0]),
        config.k,
    )?);
    for (k, &ed) in eds.iter().enumerate() {
        let co = op.coefficients(&mesh, s, ed, shape)?;
        op.forward(&mut g, &co);
        op.forward(&mut p, &co);
        out.push(relative_entropy(
            &g,
            &p,
            duals.as_ref().map(|d| &d[k + 1]),
            config.k,
        )?);
    }
    Ok(out)
}
