//! Density fields of long (`+`) and short (`-`) agents.

use alloc::vec;
use alloc::vec::Vec;

use super::mesh::Mesh;
use crate::kinetic::SwitchingKernel;
use crate::params::ModelParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Plus,
    Minus,
}

/// Rule for integrating cell values.
///
/// `Midpoint` treats values as cell averages and is exactly consistent with
/// the finite-volume update. `Trapezoid` treats them as point values at the
/// cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    #[default]
    Midpoint,
    Trapezoid,
}

/// Cell averages of `f+` and `f-` on a mesh, stored row-major with the herding
/// index as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub mesh: Mesh,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

/// Initial data for a mean-field run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialDensity {
    /// Both species uniform on `[M1(s0), M4(s0)] x [B1, B2]` with masses
    /// `(1 + ed0)/2` and `(1 - ed0)/2`.
    UniformBlock { ed0: f64 },
    /// Both species uniform on the cells where the switching rate vanishes at
    /// `s0`, with the same mass split.
    NullSpace { ed0: f64 },
}

impl InitialDensity {
    pub fn ed0(&self) -> f64 {
        match *self {
            InitialDensity::UniformBlock { ed0 } | InitialDensity::NullSpace { ed0 } => ed0,
        }
    }
}

impl DensityField {
    pub fn zeros(mesh: Mesh) -> Self {
        let n = mesh.len();
        DensityField {
            mesh,
            plus: vec![0.0; n],
            minus: vec![0.0; n],
        }
    }

    pub fn initial(mesh: Mesh, params: &ModelParams, init: InitialDensity) -> Result<Self> {
        let ed0 = init.ed0();
        if !(-1.0..=1.0).contains(&ed0) {
            return Err(Error::Invalid("initial excess demand must lie in [-1, 1]"));
        }
        let (w_plus, w_minus) = (0.5 * (1.0 + ed0), 0.5 * (1.0 - ed0));
        let shape = match init {
            InitialDensity::UniformBlock { .. } => uniform_block(&mesh, params),
            InitialDensity::NullSpace { .. } => null_space_block(&mesh, params)?,
        };
        let mut f = DensityField::zeros(mesh);
        for (k, &v) in shape.iter().enumerate() {
            f.plus[k] = w_plus * v;
            f.minus[k] = w_minus * v;
        }
        Ok(f)
    }

    /// Adds `floor` to every cell of both species, then rescales each species
    /// back to its previous mass. Keeps reference solutions strictly positive.
    pub fn with_floor(mut self, floor: f64) -> Self {
        for sp in [Species::Plus, Species::Minus] {
            let before = self.species_mass(sp);
            let v = self.species_mut(sp);
            v.iter_mut().for_each(|x| *x += floor);
            let after = self.species_mass(sp);
            if after > 0.0 {
                let scale = before / after;
                self.species_mut(sp).iter_mut().for_each(|x| *x *= scale);
            }
        }
        self
    }

    pub fn species(&self, sp: Species) -> &[f64] {
        match sp {
            Species::Plus => &self.plus,
            Species::Minus => &self.minus,
        }
    }

    pub fn species_mut(&mut self, sp: Species) -> &mut Vec<f64> {
        match sp {
            Species::Plus => &mut self.plus,
            Species::Minus => &mut self.minus,
        }
    }

    /// Integral of `weight(cell) * v` over cells with the midpoint rule.
    pub fn integrate(&self, v: &[f64]) -> f64 {
        let n_m = self.mesh.n_m();
        let widths = self.mesh.m_widths();
        let mut total = 0.0;
        for row in v.chunks_exact(n_m) {
            total += row.iter().zip(widths).map(|(f, w)| f * w).sum::<f64>();
        }
        total * self.mesh.dc()
    }

    pub fn integrate_with(&self, v: &[f64], rule: Quadrature) -> f64 {
        match rule {
            Quadrature::Midpoint => self.integrate(v),
            Quadrature::Trapezoid => {
                let wm = trapezoid_weights(self.mesh.m_centers());
                let wc = if self.mesh.is_heterogeneous() {
                    trapezoid_weights(&self.mesh.c_centers())
                } else {
                    vec![1.0]
                };
                let n_m = self.mesh.n_m();
                let mut total = 0.0;
                for (j, row) in v.chunks_exact(n_m).enumerate() {
                    total += wc[j] * row.iter().zip(&wm).map(|(f, w)| f * w).sum::<f64>();
                }
                total
            }
        }
    }

    pub fn species_mass(&self, sp: Species) -> f64 {
        self.integrate(self.species(sp))
    }

    pub fn total_mass(&self) -> f64 {
        self.species_mass(Species::Plus) + self.species_mass(Species::Minus)
    }

    /// Memory marginal `integral f dc` of one species, as mass per memory cell.
    pub fn m_marginal_mass(&self, sp: Species) -> Vec<f64> {
        let n_m = self.mesh.n_m();
        let mut out = vec![0.0; n_m];
        for row in self.species(sp).chunks_exact(n_m) {
            for (i, f) in row.iter().enumerate() {
                out[i] += f * self.mesh.area(i, 0);
            }
        }
        out
    }

    /// Mass-weighted L1 distance `sum |f - g| * area` over both species.
    pub fn l1_distance(&self, other: &DensityField) -> Result<f64> {
        if self.mesh != other.mesh {
            return Err(Error::GridMismatch);
        }
        let d = |a: &[f64], b: &[f64]| {
            let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
            self.integrate(&diff)
        };
        Ok(d(&self.plus, &other.plus) + d(&self.minus, &other.minus))
    }

    /// L1 distance to earlier values of this field on the same mesh.
    pub fn l1_change(&self, plus: &[f64], minus: &[f64]) -> f64 {
        let n_m = self.mesh.n_m();
        let widths = self.mesh.m_widths();
        let mut total = 0.0;
        for (a, b) in [(&self.plus, plus), (&self.minus, minus)] {
            for (k, (x, y)) in a.iter().zip(b).enumerate() {
                total += (x - y).abs() * widths[k % n_m];
            }
        }
        total * self.mesh.dc()
    }

    pub fn min_value(&self) -> f64 {
        self.plus
            .iter()
            .chain(&self.minus)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Mass in the last herding row (heterogeneous meshes only).
    pub fn top_row_mass(&self) -> f64 {
        if !self.mesh.is_heterogeneous() {
            return 0.0;
        }
        let n_m = self.mesh.n_m();
        let start = (self.mesh.n_c() - 1) * n_m;
        let row: f64 = (0..n_m)
            .map(|i| (self.plus[start + i] + self.minus[start + i]) * self.mesh.m_widths()[i])
            .sum();
        row * self.mesh.dc()
    }

    /// Moves the field onto `mesh.shifted(d)`. Mass pushed out of the window
    /// is folded into the edge cells, so the total is preserved.
    pub fn shift(&mut self, d: i64) {
        if d == 0 {
            return;
        }
        let new_mesh = self.mesh.shifted(d);
        let n_m = self.mesh.n_m() as i64;
        for sp in [Species::Plus, Species::Minus] {
            let old = core::mem::take(self.species_mut(sp));
            let mut mass = vec![0.0; old.len()];
            for (j, row) in old.chunks_exact(n_m as usize).enumerate() {
                for (i, f) in row.iter().enumerate() {
                    let target = (i as i64 - d).clamp(0, n_m - 1) as usize;
                    mass[j * n_m as usize + target] += f * self.mesh.area(i, j);
                }
            }
            for (k, x) in mass.iter_mut().enumerate() {
                *x /= new_mesh.area(k % n_m as usize, k / n_m as usize);
            }
            *self.species_mut(sp) = mass;
        }
        self.mesh = new_mesh;
    }
}

/// Unit-mass shape of `U(M1(s0), M4(s0)) x U(B1, B2)` as exact cell averages.
fn uniform_block(mesh: &Mesh, params: &ModelParams) -> Vec<f64> {
    let (m_lo, m_hi) = (params.s0 / (1.0 + params.a2), params.s0 * (1.0 + params.a2));
    let (c_lo, c_hi) = (params.big_b1(), params.big_b2());
    let edges = mesh.m_edges();
    let n_m = mesh.n_m();
    let mut out = vec![0.0; mesh.len()];
    for j in 0..mesh.n_c() {
        let fc = if mesh.is_heterogeneous() {
            let a = mesh.c_center(j) - 0.5 * mesh.dc();
            overlap(a, a + mesh.dc(), c_lo, c_hi) / (c_hi - c_lo)
        } else {
            1.0
        };
        for i in 0..n_m {
            let fm = overlap(edges[i], edges[i + 1], m_lo, m_hi) / (m_hi - m_lo);
            out[j * n_m + i] = fm * fc / mesh.area(i, j);
        }
    }
    out
}

/// Unit-mass uniform density over the cells whose rate vanishes at `s0`.
fn null_space_block(mesh: &Mesh, params: &ModelParams) -> Result<Vec<f64>> {
    let kernel = SwitchingKernel::new(params);
    let kernel = if mesh.is_heterogeneous() {
        kernel
    } else {
        kernel.inaction_only()
    };
    let n_m = mesh.n_m();
    let mut out = vec![0.0; mesh.len()];
    let mut area = 0.0;
    for j in 0..mesh.n_c() {
        let c = mesh.c_center(j);
        for i in 0..n_m {
            if kernel.probability(c, mesh.m_centers()[i], params.s0) == 0.0
                && (!mesh.is_heterogeneous() || c >= 0.0)
            {
                out[j * n_m + i] = 1.0;
                area += mesh.area(i, j);
            }
        }
    }
    if area == 0.0 {
        return Err(Error::Invalid("no grid cell lies in the null space"));
    }
    out.iter_mut().for_each(|x| *x /= area);
    Ok(out)
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| {
            let l = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] - x[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

/// Excess demand `integral (f+ - f-)`.
pub fn ed_functional(field: &DensityField, rule: Quadrature) -> f64 {
    field.integrate_with(&field.plus, rule) - field.integrate_with(&field.minus, rule)
}
