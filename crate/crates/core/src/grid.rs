//! The fixed midpoint quadrature grid on `[−L, L]^d`.

use crate::error::{Error, Result};
use crate::kernel::Vec3;

/// Uniform tensor grid of cell midpoints. Cell `l` has multi-index
/// `(i_0, .., i_{d-1})` with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    dim: usize,
    half_width: f64,
    cells_per_dim: usize,
    spacing: f64,
    axis: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(dim: usize, half_width: f64, cells_per_dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "domain half-width must be positive, got {half_width}"
            )));
        }
        if cells_per_dim == 0 {
            return Err(Error::InvalidParameter("cells_per_dim must be at least 1".into()));
        }
        let spacing = 2.0 * half_width / cells_per_dim as f64;
        let axis = (0..cells_per_dim)
            .map(|i| -half_width + (i as f64 + 0.5) * spacing)
            .collect();
        Ok(Self {
            dim,
            half_width,
            cells_per_dim,
            spacing,
            axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cells_per_dim(&self) -> usize {
        self.cells_per_dim
    }

    /// `h = 2L/n`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Midpoint coordinates along one axis (identical for every axis).
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_dim.pow(self.dim as u32)
    }

    pub fn center(&self, l: usize) -> Vec3 {
        let n = self.cells_per_dim;
        match self.dim {
            2 => [self.axis[l / n], self.axis[l % n], 0.0],
            _ => [
                self.axis[l / (n * n)],
                self.axis[(l / n) % n],
                self.axis[l % n],
            ],
        }
    }

    pub fn centers(&self) -> Vec<Vec3> {
        (0..self.num_cells()).map(|l| self.center(l)).collect()
    }

    /// Whether `v` lies in the closed box `[−L, L]^d`.
    pub fn contains(&self, v: &Vec3) -> bool {
        v[..self.dim].iter().all(|c| c.abs() <= self.half_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_are_cell_midpoints() {
        let g = QuadratureGrid::new(2, 4.0, 8).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.num_cells(), 64);
        assert_eq!(g.center(0), [-3.5, -3.5, 0.0]);
        assert_eq!(g.center(1), [-3.5, -2.5, 0.0]);
        assert_eq!(g.center(63), [3.5, 3.5, 0.0]);
        let g3 = QuadratureGrid::new(3, 1.0, 4).unwrap();
        assert_eq!(g3.center(1), [-0.75, -0.75, -0.25]);
        assert_eq!(g3.center(4), [-0.75, -0.25, -0.75]);
        assert_eq!(g3.center(16), [-0.25, -0.75, -0.75]);
        assert!((g3.cell_volume() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid() {
        assert!(QuadratureGrid::new(1, 1.0, 4).is_err());
        assert!(QuadratureGrid::new(2, 0.0, 4).is_err());
        assert!(QuadratureGrid::new(2, 1.0, 0).is_err());
    }
}
