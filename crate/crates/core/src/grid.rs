//! Uniform cell-centered lattices and scalar fields on them.

use crate::error::{invalid, Result};

/// Uniform cell-centered lattice on `[lo, hi]` with `n` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return invalid(format!("grid bounds [{lo}, {hi}] must be finite and increasing"));
        }
        if n == 0 {
            return invalid("grid needs at least one cell");
        }
        Ok(Grid { lo, hi, n })
    }

    /// Symmetric lattice on `[-r, r]`.
    pub fn symmetric(r: f64, n: usize) -> Result<Self> {
        Grid::new(-r, r, n)
    }

    /// Lattice on `[lo, hi]` with spacing `h`; `hi` is moved up to a whole cell.
    pub fn with_spacing(lo: f64, hi: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return invalid("grid spacing must be positive");
        }
        let n = ((hi - lo) / h - 1e-9).ceil().max(1.0) as usize;
        Grid::new(lo, lo + n as f64 * h, n)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }
    pub fn hi(&self) -> f64 {
        self.hi
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }
    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.spacing()
    }
    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Fractional cell coordinate: 0 at the first center, 1 at the second.
    pub fn coordinate(&self, x: f64) -> f64 {
        (x - self.lo) / self.spacing() - 0.5
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.lo == other.lo && self.hi == other.hi
    }
}

/// Scalar field sampled at the cell centers of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return invalid(format!("non-finite grid value {v}"));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        GridFunction { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction { grid, values: vec![0.0; grid.len()] }
    }

    pub fn dx(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.dx()
    }

    /// `∫|u|^p dx`.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * self.dx()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l1_distance(&self, other: &GridFunction) -> f64 {
        debug_assert!(self.grid.same_as(&other.grid));
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.dx()
    }

    /// Indices of the first and last cell with `|u| > threshold`.
    pub fn support(&self, threshold: f64) -> Option<(usize, usize)> {
        let first = self.values.iter().position(|v| v.abs() > threshold)?;
        let last = self.values.iter().rposition(|v| v.abs() > threshold)?;
        Some((first, last))
    }

    /// Linear interpolation between centers; zero beyond the outer centers' half cells.
    pub fn sample(&self, x: f64) -> f64 {
        let s = self.grid.coordinate(x);
        let n = self.values.len();
        if s < -0.5 || s > n as f64 - 0.5 {
            return 0.0;
        }
        if s <= 0.0 {
            return self.values[0];
        }
        if s >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let k = s.floor() as usize;
        let w = s - k as f64;
        (1.0 - w) * self.values[k] + w * self.values[k + 1]
    }

    /// `x ↦ u(x - shift)` on the same grid, linear interpolation with zero padding.
    pub fn shifted(&self, shift: f64) -> GridFunction {
        let dx = self.dx();
        let s = shift / dx;
        let k = s.floor();
        let w = s - k;
        let k = k as i64;
        let n = self.values.len() as i64;
        let at = |j: i64| {
            if j >= 0 && j < n {
                self.values[j as usize]
            } else {
                0.0
            }
        };
        let values = (0..n)
            .map(|i| {
                let j = i - k;
                // u(x_i - shift) sits between cells j-1 and j
                (1.0 - w) * at(j) + w * at(j - 1)
            })
            .collect();
        GridFunction { grid: self.grid, values }
    }
}
