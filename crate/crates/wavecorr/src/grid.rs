//! Uniform periodic grids over the box [-L/2, L/2)^d and d-dimensional FFTs.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::errors::{Error, Result};
use crate::linalg::Vec3;

/// Uniform axis-aligned grid covering the unit ball strictly.
///
/// Nodes along each axis sit at x_i = -L/2 + i h with h = L/N, so the grid is
/// periodic with period L and never contains the point +L/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    d: usize,
    points_per_axis: usize,
    half_width: f64,
}

impl SpatialGrid {
    pub fn new(d: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::DimensionMismatch { expected: 2, got: d });
        }
        if !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "points per axis must be a power of two, got {points_per_axis}"
            )));
        }
        if !(half_width >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "box half-width must be >= 1 so the box covers the unit ball, got {half_width}"
            )));
        }
        Ok(Self {
            d,
            points_per_axis,
            half_width,
        })
    }

    /// Default laboratory grid: box of total width 4 (padding factor 2
    /// beyond the unit ball) to keep periodization leakage small.
    pub fn standard(d: usize, points_per_axis: usize) -> Result<Self> {
        Self::new(d, points_per_axis, 2.0)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Full box width L.
    pub fn box_width(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Node spacing h = L/N.
    pub fn spacing(&self) -> f64 {
        self.box_width() / self.points_per_axis as f64
    }

    /// Quadrature weight per node, h^d.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Total number of nodes N^d.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node index i along one axis.
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + self.spacing() * i as f64
    }

    /// Multi-index of a row-major linear node index.
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut out = [0usize; 3];
        for axis in (0..self.d).rev() {
            out[axis] = idx % n;
            idx /= n;
        }
        out
    }

    pub fn ravel(&self, ix: &[usize; 3]) -> usize {
        let n = self.points_per_axis;
        let mut idx = 0;
        for axis in 0..self.d {
            idx = idx * n + ix[axis];
        }
        idx
    }

    /// Physical coordinates of a linear node index.
    pub fn node(&self, idx: usize) -> Vec3 {
        let ix = self.unravel(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = self.axis_coord(ix[axis]);
        }
        x
    }

    /// Signed integer frequency of FFT bin i: i for i < N/2, i - N otherwise.
    pub fn freq_index(&self, i: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Spectral node xi = (2 pi / L) p for the linear FFT index.
    pub fn mode(&self, idx: usize) -> Vec3 {
        let ix = self.unravel(idx);
        let base = 2.0 * std::f64::consts::PI / self.box_width();
        let mut xi = [0.0; 3];
        for axis in 0..self.d {
            xi[axis] = base * self.freq_index(ix[axis]) as f64;
        }
        xi
    }

    /// Linear index of the Hermitian partner bin (-p mod N per axis).
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.points_per_axis;
        let ix = self.unravel(idx);
        let mut jx = [0usize; 3];
        for axis in 0..self.d {
            jx[axis] = (n - ix[axis]) % n;
        }
        self.ravel(&jx)
    }

    /// Parity (-1)^(sum of index components), which converts between FFT bin
    /// order and the centered physical coordinates.
    pub fn center_sign(&self, idx: usize) -> f64 {
        let ix = self.unravel(idx);
        let s: usize = (0..self.d).map(|a| ix[a]).sum();
        if s % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Planned d-dimensional FFT over a [`SpatialGrid`].
pub struct GridFft {
    grid: SpatialGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl GridFft {
    pub fn new(grid: SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.points_per_axis());
        let inverse = planner.plan_fft_inverse(grid.points_per_axis());
        Self {
            grid,
            forward,
            inverse,
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    fn apply(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.grid.points_per_axis();
        let d = self.grid.dim();
        let len = self.grid.len();
        assert_eq!(data.len(), len);
        let fft = if inverse { &self.inverse } else { &self.forward };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        // Transform along each axis in turn; gather/scatter handles strides.
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            let lines = len / n;
            for l in 0..lines {
                // Decompose the line id into (outer, inner) around this axis.
                let outer = l / stride;
                let inner = l % stride;
                let base = outer * stride * n + inner;
                for i in 0..n {
                    line[i] = data[base + i * stride];
                }
                fft.process(&mut line);
                for i in 0..n {
                    data[base + i * stride] = line[i];
                }
            }
        }
    }

    /// Unnormalized forward transform: sum_j a_j e^{-2 pi i p.j / N}.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    /// Unnormalized inverse transform: sum_p A_p e^{+2 pi i p.j / N}.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, true);
    }
}
