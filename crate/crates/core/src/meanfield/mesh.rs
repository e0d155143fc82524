//! Realized finite-volume mesh.

use alloc::vec::Vec;

use crate::math;
use crate::params::{AxisScale, GridSpec};
use crate::{Error, Result};

/// Cell geometry of a density field.
///
/// The memory axis is linear or log-spaced. Homogeneous fields have a single
/// cell of unit width along `c`, so cell areas reduce to memory widths.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    spec: GridSpec,
    heterogeneous: bool,
    /// Whole-cell shift of a log axis relative to `spec.m_lo`.
    offset: i64,
    m_edges: Vec<f64>,
    m_centers: Vec<f64>,
    m_widths: Vec<f64>,
    c_lo: f64,
    dc: f64,
    n_c: usize,
}

impl Mesh {
    pub fn heterogeneous(spec: GridSpec) -> Self {
        Self::build(spec, true, 0)
    }

    pub fn homogeneous(spec: GridSpec) -> Self {
        Self::build(spec, false, 0)
    }

    fn build(spec: GridSpec, heterogeneous: bool, offset: i64) -> Self {
        let n = spec.n_m;
        let m_edges: Vec<f64> = match spec.m_scale {
            AxisScale::Linear => {
                let h = (spec.m_hi - spec.m_lo) / n as f64;
                (0..=n).map(|k| spec.m_lo + k as f64 * h).collect()
            }
            AxisScale::Log => {
                let h = log_step(&spec);
                (0..=n)
                    .map(|k| spec.m_lo * math::exp((k as i64 + offset) as f64 * h))
                    .collect()
            }
        };
        let m_centers = m_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let m_widths = m_edges.windows(2).map(|w| w[1] - w[0]).collect();
        let (c_lo, dc, n_c) = if heterogeneous {
            (spec.c_lo, spec.dc(), spec.n_c)
        } else {
            (0.0, 1.0, 1)
        };
        Mesh {
            spec,
            heterogeneous,
            offset,
            m_edges,
            m_centers,
            m_widths,
            c_lo,
            dc,
            n_c,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn is_heterogeneous(&self) -> bool {
        self.heterogeneous
    }

    pub fn n_m(&self) -> usize {
        self.m_centers.len()
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.n_m() * self.n_c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn m_edges(&self) -> &[f64] {
        &self.m_edges
    }

    pub fn m_centers(&self) -> &[f64] {
        &self.m_centers
    }

    pub fn m_widths(&self) -> &[f64] {
        &self.m_widths
    }

    /// Cell width along `c` (1 for homogeneous meshes).
    pub fn dc(&self) -> f64 {
        self.dc
    }

    pub fn c_center(&self, j: usize) -> f64 {
        self.c_lo + (j as f64 + 0.5) * self.dc
    }

    pub fn c_centers(&self) -> Vec<f64> {
        (0..self.n_c).map(|j| self.c_center(j)).collect()
    }

    #[inline]
    pub fn area(&self, i: usize, _j: usize) -> f64 {
        self.m_widths[i] * self.dc
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_m() + i
    }

    /// Memory cell containing `s` (half-open cells, last one closed).
    pub fn m_cell(&self, s: f64) -> Result<usize> {
        let (lo, hi) = (self.m_edges[0], self.m_edges[self.n_m()]);
        if !(s >= lo && s <= hi) {
            return Err(Error::OutsideDomain { price: s, lo, hi });
        }
        let k = self.m_edges.partition_point(|&e| e <= s);
        Ok(k.saturating_sub(1).min(self.n_m() - 1))
    }

    /// Herding cell containing `c = 0`, where switched agents are re-emitted.
    pub fn c_origin_cell(&self) -> usize {
        if !self.heterogeneous {
            return 0;
        }
        let j = math::floor((0.0 - self.c_lo) / self.dc) as usize;
        j.min(self.n_c - 1)
    }

    /// Cell where switched agents are deposited for price `s`.
    pub fn deposit_cell(&self, s: f64) -> Result<usize> {
        Ok(self.index(self.m_cell(s)?, self.c_origin_cell()))
    }

    /// For a tracking mesh, the whole-cell shift that brings `s` back to the
    /// middle of the window, or 0 while `s` stays within the central band.
    pub fn recenter_shift(&self, s: f64) -> i64 {
        if !self.spec.recenter || !(s > 0.0) {
            return 0;
        }
        let h = log_step(&self.spec);
        let k = math::floor(math::ln(s / self.spec.m_lo) / h) as i64 - self.offset;
        let mid = (self.n_m() / 2) as i64;
        let band = (self.n_m() / 8).max(1) as i64;
        if (k - mid).abs() > band {
            k - mid
        } else {
            0
        }
    }

    /// Mesh shifted by `d` whole cells along a log memory axis.
    pub fn shifted(&self, d: i64) -> Mesh {
        Self::build(self.spec, self.heterogeneous, self.offset + d)
    }
}

fn log_step(spec: &GridSpec) -> f64 {
    math::ln(spec.m_hi / spec.m_lo) / spec.n_m as f64
}
