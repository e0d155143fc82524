//! Discrete advection and collision operators.

use alloc::vec;
use alloc::vec::Vec;

use super::field::{DensityField, Quadrature, Species};
use super::mesh::Mesh;
use super::ShapeFunction;
use crate::kinetic::SwitchingKernel;
use crate::params::ModelParams;
use crate::{Error, Result};

/// Time-step bound `min(0.9 dc / v_max, 1 / lambda_max)`.
///
/// The safety factor applies to the advection part only: in mass coordinates
/// the collision step stays a convex combination up to `dt lambda_max = 1`.
pub fn stable_dt(dc: f64, v_max: f64, lambda_max: f64) -> f64 {
    let cfl = if v_max > 0.0 {
        0.9 * dc / v_max
    } else {
        f64::INFINITY
    };
    let rate = if lambda_max > 0.0 {
        1.0 / lambda_max
    } else {
        f64::INFINITY
    };
    cfl.min(rate)
}

/// Values below this are set to zero after a step. Keeps the far tails of
/// the upwind scheme out of the subnormal range.
const TINY: f64 = 1e-250;

/// One time step of the mean-field system for fixed parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOperator {
    pub kernel: SwitchingKernel,
    pub dt: f64,
}

/// Per-step coefficients, frozen at the current price and excess demand.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCoefficients {
    /// Herding part of the loss fraction per `c` row.
    pub loss_c: Vec<f64>,
    /// Inaction part of the loss fraction per `m` column.
    pub loss_m: Vec<f64>,
    /// Flat index of the re-emission cell.
    pub deposit: usize,
    /// Courant numbers of `f+` and `f-`.
    pub nu_plus: f64,
    pub nu_minus: f64,
}

impl StepCoefficients {
    #[inline]
    pub fn loss(&self, i: usize, j: usize) -> f64 {
        (self.loss_c[j] + self.loss_m[i]).min(1.0)
    }
}

impl StepOperator {
    /// The homogeneous model uses the inaction rate `q / dt_cross` alone.
    pub fn new(params: &ModelParams, mesh: &Mesh) -> Self {
        let kernel = SwitchingKernel::new(params);
        let kernel = if mesh.is_heterogeneous() {
            kernel
        } else {
            kernel.inaction_only()
        };
        StepOperator {
            kernel,
            dt: params.dt,
        }
    }

    pub fn with_kernel(kernel: SwitchingKernel, dt: f64) -> Self {
        StepOperator { kernel, dt }
    }

    /// Largest rate the kernel can produce.
    pub fn lambda_max(&self) -> f64 {
        (self.kernel.lambda1 + self.kernel.lambda2) / self.kernel.dt_cross
    }

    pub fn stable_dt<H: ShapeFunction>(&self, mesh: &Mesh, shape: &H) -> f64 {
        let v_max = if mesh.is_heterogeneous() {
            shape.eval(1.0)
        } else {
            0.0
        };
        stable_dt(mesh.dc(), v_max, self.lambda_max())
    }

    pub fn check_stable<H: ShapeFunction>(&self, mesh: &Mesh, shape: &H) -> Result<()> {
        let bound = self.stable_dt(mesh, shape);
        if self.dt > bound {
            Err(Error::Unstable { dt: self.dt, bound })
        } else {
            Ok(())
        }
    }

    pub fn coefficients<H: ShapeFunction>(
        &self,
        mesh: &Mesh,
        s: f64,
        ed: f64,
        shape: &H,
    ) -> Result<StepCoefficients> {
        let ratio = self.dt / self.kernel.dt_cross;
        let k = &self.kernel;
        let loss_c = if mesh.is_heterogeneous() && k.lambda1 != 0.0 {
            mesh.c_centers()
                .iter()
                .map(|&c| ratio * k.lambda1 * k.p(c))
                .collect()
        } else {
            vec![0.0; mesh.n_c()]
        };
        let loss_m = if k.lambda2 != 0.0 {
            mesh.m_centers()
                .iter()
                .map(|&m| ratio * k.lambda2 * k.q(m, s))
                .collect()
        } else {
            vec![0.0; mesh.n_m()]
        };
        let (nu_plus, nu_minus) = if mesh.is_heterogeneous() {
            let r = self.dt / mesh.dc();
            (r * shape.eval(-ed), r * shape.eval(ed))
        } else {
            (0.0, 0.0)
        };
        Ok(StepCoefficients {
            loss_c,
            loss_m,
            deposit: mesh.deposit_cell(s)?,
            nu_plus,
            nu_minus,
        })
    }

    /// Advances `field` by one step: advection, then collision.
    pub fn forward(&self, field: &mut DensityField, co: &StepCoefficients) {
        let n_m = field.mesh.n_m();
        advect(&mut field.plus, n_m, co.nu_plus);
        advect(&mut field.minus, n_m, co.nu_minus);
        collide(field, co);
    }

    /// Transpose of [`forward`](Self::forward) with respect to the mass
    /// pairing `sum psi f area`: maps dual data at the new time level back to
    /// the old one.
    pub fn adjoint(
        &self,
        mesh: &Mesh,
        psi_plus: &mut [f64],
        psi_minus: &mut [f64],
        co: &StepCoefficients,
    ) {
        let n_m = mesh.n_m();
        let (dp, dm) = (psi_plus[co.deposit], psi_minus[co.deposit]);
        for (k, (a, b)) in psi_plus.iter_mut().zip(psi_minus.iter_mut()).enumerate() {
            let w = co.loss(k % n_m, k / n_m);
            *a += w * (dm - *a);
            *b += w * (dp - *b);
        }
        advect_adjoint(psi_plus, n_m, co.nu_plus);
        advect_adjoint(psi_minus, n_m, co.nu_minus);
    }
}

/// Upwind transport towards larger `c`; nothing leaves through the last row.
fn advect(f: &mut [f64], n_m: usize, nu: f64) {
    if nu == 0.0 {
        return;
    }
    let rows = f.len() / n_m;
    for j in (1..rows).rev() {
        let (lo, hi) = f.split_at_mut(j * n_m);
        let below = &lo[(j - 1) * n_m..];
        let row = &mut hi[..n_m];
        let keep = if j + 1 == rows { 1.0 } else { 1.0 - nu };
        for (x, y) in row.iter_mut().zip(below) {
            *x = flush(keep * *x + nu * y);
        }
    }
    if rows > 1 {
        f[..n_m]
            .iter_mut()
            .for_each(|x| *x = flush(*x * (1.0 - nu)));
    }
}

#[inline(always)]
fn flush(x: f64) -> f64 {
    if x < TINY {
        0.0
    } else {
        x
    }
}

fn advect_adjoint(psi: &mut [f64], n_m: usize, nu: f64) {
    if nu == 0.0 {
        return;
    }
    let rows = psi.len() / n_m;
    for j in 0..rows.saturating_sub(1) {
        let (lo, hi) = psi.split_at_mut((j + 1) * n_m);
        let row = &mut lo[j * n_m..];
        for (x, y) in row.iter_mut().zip(&hi[..n_m]) {
            *x += nu * (y - *x);
        }
    }
}

fn collide(field: &mut DensityField, co: &StepCoefficients) {
    let mesh = &field.mesh;
    let n_m = mesh.n_m();
    let widths = mesh.m_widths();
    let (mut lost_plus, mut lost_minus) = (0.0, 0.0);
    for j in 0..mesh.n_c() {
        let lc = co.loss_c[j];
        let rp = &mut field.plus[j * n_m..(j + 1) * n_m];
        let rm = &mut field.minus[j * n_m..(j + 1) * n_m];
        let (mut sp, mut sm) = (0.0, 0.0);
        for i in 0..n_m {
            let w = (lc + co.loss_m[i]).min(1.0);
            if w == 0.0 {
                continue;
            }
            let (a, b) = (w * rp[i], w * rm[i]);
            rp[i] = flush(rp[i] - a);
            rm[i] = flush(rm[i] - b);
            sp += a * widths[i];
            sm += b * widths[i];
        }
        lost_plus += sp;
        lost_minus += sm;
    }
    let dep_width = widths[co.deposit % n_m];
    field.plus[co.deposit] += lost_minus / dep_width;
    field.minus[co.deposit] += lost_plus / dep_width;
}

/// Time derivative of the collision operator: loss `-lambda f` everywhere and
/// the gain of the opposite species concentrated in the cell holding `(s, 0)`.
pub fn collision_apply(
    field: &DensityField,
    s: f64,
    kernel: &SwitchingKernel,
) -> Result<DensityField> {
    let mesh = &field.mesh;
    let dep = mesh.deposit_cell(s)?;
    let rates = rate_field(mesh, s, kernel);
    let mut out = DensityField::zeros(mesh.clone());
    let (mut gp, mut gm) = (0.0, 0.0);
    for (k, &r) in rates.iter().enumerate() {
        let a = mesh.area(k % mesh.n_m(), k / mesh.n_m());
        out.plus[k] = -r * field.plus[k];
        out.minus[k] = -r * field.minus[k];
        gp += r * field.minus[k] * a;
        gm += r * field.plus[k] * a;
    }
    let a = mesh.area(dep % mesh.n_m(), dep / mesh.n_m());
    out.plus[dep] += gp / a;
    out.minus[dep] += gm / a;
    Ok(out)
}

/// Time derivative of the upwind advection term.
pub fn advection_apply<H: ShapeFunction>(field: &DensityField, ed: f64, shape: &H) -> DensityField {
    let mesh = &field.mesh;
    let mut out = DensityField::zeros(mesh.clone());
    if !mesh.is_heterogeneous() {
        return out;
    }
    let n_m = mesh.n_m();
    let rows = mesh.n_c();
    for (sp, v) in [
        (Species::Plus, shape.eval(-ed)),
        (Species::Minus, shape.eval(ed)),
    ] {
        let f = field.species(sp);
        let d = out.species_mut(sp);
        let r = v / mesh.dc();
        for k in 0..f.len() {
            let j = k / n_m;
            let outflow = if j + 1 == rows { 0.0 } else { f[k] };
            let inflow = if j == 0 { 0.0 } else { f[k - n_m] };
            d[k] = r * (inflow - outflow);
        }
    }
    out
}

/// `dED/dt = 2 integral (f- - f+) lambda`.
pub fn ed_rate(field: &DensityField, s: f64, kernel: &SwitchingKernel, rule: Quadrature) -> f64 {
    let rates = rate_field(&field.mesh, s, kernel);
    let v: Vec<f64> = rates
        .iter()
        .enumerate()
        .map(|(k, r)| 2.0 * r * (field.minus[k] - field.plus[k]))
        .collect();
    field.integrate_with(&v, rule)
}

/// Switching rate on each cell center.
pub fn rate_field(mesh: &Mesh, s: f64, kernel: &SwitchingKernel) -> Vec<f64> {
    let kernel = if mesh.is_heterogeneous() {
        *kernel
    } else {
        kernel.inaction_only()
    };
    let cs = mesh.c_centers();
    let mut out = Vec::with_capacity(mesh.len());
    for &c in &cs {
        let c = if mesh.is_heterogeneous() { c } else { 0.0 };
        out.extend(mesh.m_centers().iter().map(|&m| kernel.rate(c, m, s)));
    }
    out
}
