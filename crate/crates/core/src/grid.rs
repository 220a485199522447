//! Sampling lattices for two-photon distributions.
//!
//! A [`Lattice`] maps an index pair `(r, c)` to a point `(a_s, a_i)` in the
//! signal/idler plane through an origin and two step vectors. Axis-aligned
//! grids are the special case `row_step = (Δa_s, 0)`, `col_step = (0, Δa_i)`;
//! the ridge-aligned layout steps along the sum and difference directions so
//! that both the narrow and the wide feature of a correlated distribution are
//! resolved with the same number of samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default samples per lattice direction.
pub const DEFAULT_GRID_N: usize = 1024;

/// Default ceiling on the working set of a single distribution computation.
pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;

/// Extent factor applied to the characteristic widths.
pub const EXTENT_FACTOR: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lattice<T> {
    pub origin: [T; 2],
    pub row_step: [T; 2],
    pub col_step: [T; 2],
    pub rows: usize,
    pub cols: usize,
}

impl<T: Real> Lattice<T> {
    pub fn new(origin: [T; 2], row_step: [T; 2], col_step: [T; 2], rows: usize, cols: usize) -> Result<Self> {
        let lat = Self {
            origin,
            row_step,
            col_step,
            rows,
            cols,
        };
        if rows == 0 || cols == 0 {
            return Err(Error::Invalid("lattice needs at least one row and column".into()));
        }
        let finite = origin.iter().chain(&row_step).chain(&col_step).all(|v| v.is_finite());
        if !finite || !(lat.cell_area() > T::zero()) {
            return Err(Error::Invalid(
                "lattice steps must be finite and linearly independent".into(),
            ));
        }
        Ok(lat)
    }

    /// Axis-aligned grid with index `n/2` at zero on both axes.
    pub fn centered_rectangular(rows: usize, cols: usize, ds: T, di: T) -> Result<Self> {
        let r0 = T::from_count(rows / 2);
        let c0 = T::from_count(cols / 2);
        Self::new([-r0 * ds, -c0 * di], [ds, T::zero()], [T::zero(), di], rows, cols)
    }

    /// Axis-aligned grid whose cell centres tile `[min, max]` on each axis.
    pub fn cell_centered(rows: usize, cols: usize, s_range: (T, T), i_range: (T, T)) -> Result<Self> {
        let ds = (s_range.1 - s_range.0) / T::from_count(rows);
        let di = (i_range.1 - i_range.0) / T::from_count(cols);
        let half = T::lit(0.5);
        Self::new(
            [s_range.0 + half * ds, i_range.0 + half * di],
            [ds, T::zero()],
            [T::zero(), di],
            rows,
            cols,
        )
    }

    /// Rows step along u = (a_s + a_i)/√2, columns along v = (a_s − a_i)/√2,
    /// covering `[-half_u, half_u) × [-half_v, half_v)` with zero at index `n/2`.
    pub fn ridge_aligned(n: usize, half_u: T, half_v: T) -> Result<Self> {
        let h = T::FRAC_1_SQRT_2();
        let du = half_u * T::lit(2.0) / T::from_count(n);
        let dv = half_v * T::lit(2.0) / T::from_count(n);
        let row_step = [du * h, du * h];
        let col_step = [dv * h, -dv * h];
        let c = T::from_count(n / 2);
        let origin = [-c * (row_step[0] + col_step[0]), -c * (row_step[1] + col_step[1])];
        Self::new(origin, row_step, col_step, n, n)
    }

    #[inline]
    pub fn point(&self, r: usize, c: usize) -> [T; 2] {
        let (r, c) = (T::from_count(r), T::from_count(c));
        [
            self.origin[0] + r * self.row_step[0] + c * self.col_step[0],
            self.origin[1] + r * self.row_step[1] + c * self.col_step[1],
        ]
    }

    /// |det B|, the area represented by one sample.
    pub fn cell_area(&self) -> T {
        self.determinant().abs()
    }

    fn determinant(&self) -> T {
        self.row_step[0] * self.col_step[1] - self.row_step[1] * self.col_step[0]
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.row_step[1] == T::zero() && self.col_step[0] == T::zero()
    }

    /// Spacings `(Δa_s, Δa_i)` of an axis-aligned lattice.
    pub fn spacings(&self) -> Option<(T, T)> {
        self.is_axis_aligned().then(|| (self.row_step[0], self.col_step[1]))
    }

    /// Coordinates along the signal axis (axis-aligned lattices only).
    pub fn signal_axis(&self) -> Option<Vec<T>> {
        self.is_axis_aligned()
            .then(|| (0..self.rows).map(|r| self.point(r, 0)[0]).collect())
    }

    pub fn idler_axis(&self) -> Option<Vec<T>> {
        self.is_axis_aligned()
            .then(|| (0..self.cols).map(|c| self.point(0, c)[1]).collect())
    }

    /// Bounding box `((s_min, s_max), (i_min, i_max))` of the sample points.
    pub fn bounds(&self) -> ((T, T), (T, T)) {
        let corners = [
            self.point(0, 0),
            self.point(self.rows - 1, 0),
            self.point(0, self.cols - 1),
            self.point(self.rows - 1, self.cols - 1),
        ];
        let mut s = (T::infinity(), T::neg_infinity());
        let mut i = s;
        for p in corners {
            s = (s.0.min(p[0]), s.1.max(p[0]));
            i = (i.0.min(p[1]), i.1.max(p[1]));
        }
        (s, i)
    }

    /// Largest |coordinate| on either axis.
    pub fn max_abs(&self) -> T {
        let ((s0, s1), (i0, i1)) = self.bounds();
        s0.abs().max(s1.abs()).max(i0.abs()).max(i1.abs())
    }

    /// Reciprocal lattice of a centred 2D DFT over this lattice:
    /// basis 2π·B⁻ᵀ·diag(1/rows, 1/cols), zero frequency at index `n/2`.
    pub fn conjugate(&self) -> Self {
        let det = self.determinant();
        let two_pi = T::TAU();
        // B = [row_step | col_step] as columns; B⁻ᵀ columns are
        // ( col_step[1], -col_step[0])/det and (-row_step[1], row_step[0])/det
        let nr = T::from_count(self.rows);
        let nc = T::from_count(self.cols);
        let row_step = [
            two_pi * self.col_step[1] / (det * nr),
            -two_pi * self.col_step[0] / (det * nr),
        ];
        let col_step = [
            -two_pi * self.row_step[1] / (det * nc),
            two_pi * self.row_step[0] / (det * nc),
        ];
        let r0 = T::from_count(self.rows / 2);
        let c0 = T::from_count(self.cols / 2);
        Self {
            origin: [
                -r0 * row_step[0] - c0 * col_step[0],
                -r0 * row_step[1] - c0 * col_step[1],
            ],
            row_step,
            col_step,
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// Multiplies signal coordinates by `fs` and idler coordinates by `fi`.
    pub fn scaled(&self, fs: T, fi: T) -> Self {
        let sc = |v: [T; 2]| [v[0] * fs, v[1] * fi];
        Self {
            origin: sc(self.origin),
            row_step: sc(self.row_step),
            col_step: sc(self.col_step),
            ..*self
        }
    }

    pub fn translated(&self, ds: T, di: T) -> Self {
        Self {
            origin: [self.origin[0] + ds, self.origin[1] + di],
            ..*self
        }
    }

    /// Same lattice with signal and idler coordinates exchanged.
    pub fn transposed(&self) -> Self {
        let sw = |v: [T; 2]| [v[1], v[0]];
        Self {
            origin: sw(self.origin),
            row_step: sw(self.row_step),
            col_step: sw(self.col_step),
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridLayout {
    /// Steps along the sum and difference coordinates.
    #[default]
    RidgeAligned,
    /// Plain signal × idler grid.
    Rectangular,
}

/// Grid resolution, layout and optional extent overrides (rad/m).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec<T> {
    pub n: usize,
    pub layout: GridLayout,
    /// Half-extent along the sum coordinate; default 5·(2/w₀).
    pub sum_extent: Option<T>,
    /// Half-extent along the difference coordinate; default 5·√(4πk̄/L).
    pub diff_extent: Option<T>,
    pub memory_budget_bytes: usize,
}

impl<T: Real> Default for GridSpec<T> {
    fn default() -> Self {
        Self {
            n: DEFAULT_GRID_N,
            layout: GridLayout::RidgeAligned,
            sum_extent: None,
            diff_extent: None,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
        }
    }
}

impl<T: Real> GridSpec<T> {
    pub fn with_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    /// Default half-extents from the pump waist and the main sinc lobe.
    pub fn default_extents(waist: T, k_mean: T, length: T) -> (T, T) {
        let f = T::lit(EXTENT_FACTOR);
        (
            f * T::lit(2.0) / waist,
            f * (T::lit(4.0) * T::PI() * k_mean / length).sqrt(),
        )
    }

    /// Momentum lattice for the given physical scales.
    pub fn lattice(&self, waist: T, k_mean: T, length: T) -> Result<Lattice<T>> {
        if self.n < 2 {
            return Err(Error::Invalid(format!("grid size {} must be at least 2", self.n)));
        }
        let (du, dv) = Self::default_extents(waist, k_mean, length);
        let half_u = self.sum_extent.unwrap_or(du);
        let half_v = self.diff_extent.unwrap_or(dv);
        if !(half_u > T::zero() && half_v > T::zero()) {
            return Err(Error::Invalid("grid extents must be positive".into()));
        }
        match self.layout {
            GridLayout::RidgeAligned => Lattice::ridge_aligned(self.n, half_u, half_v),
            GridLayout::Rectangular => {
                // a square window wide enough for the difference coordinate
                let half = half_v.max(half_u) * T::FRAC_1_SQRT_2();
                let d = half * T::lit(2.0) / T::from_count(self.n);
                Lattice::centered_rectangular(self.n, self.n, d, d)
            }
        }
    }

    /// Fails when `bytes_per_point · n²` exceeds the budget.
    pub fn check_budget(&self, bytes_per_point: usize) -> Result<()> {
        let required = self
            .n
            .checked_mul(self.n)
            .and_then(|p| p.checked_mul(bytes_per_point))
            .unwrap_or(usize::MAX);
        if required > self.memory_budget_bytes {
            return Err(Error::Resource {
                rows: self.n,
                cols: self.n,
                required,
                budget: self.memory_budget_bytes,
            });
        }
        Ok(())
    }
}
