//! Uniform 1D position grids.

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Infinite walls at `x_min` and `x_max`; grid point 0 lies on the wall
    /// and carries zero amplitude.
    HardWall,
    /// `x_max` is identified with `x_min`.
    Periodic,
}

/// `n` equally spaced points starting at `x_min` with spacing `(x_max - x_min)/n`.
///
/// The point at `x_max` itself is excluded, which makes the same sampling
/// usable for both boundary conditions. Positions are in internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(CoreError::domain(format!(
                "Grid: need x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(CoreError::domain(format!(
                "Grid: n must be a power of two >= 8, got {n}"
            )));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn span(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.span() / self.n as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Angular wavenumbers matching the FFT ordering of this grid.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = std::f64::consts::TAU / self.span();
        (0..self.n)
            .map(|i| {
                let j = if i <= self.n / 2 - 1 { i as isize } else { i as isize - self.n as isize };
                j as f64 * dk
            })
            .collect()
    }

    /// Same domain with twice the points.
    pub fn refined(&self) -> Self {
        Self { x_min: self.x_min, x_max: self.x_max, n: self.n * 2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spacing_and_points() {
        let g = Grid::new(-2.0, 2.0, 16).unwrap();
        assert_relative_eq!(g.dx(), 0.25);
        assert_relative_eq!(g.point(0), -2.0);
        assert_relative_eq!(g.point(15), 1.75);
        assert_eq!(g.points().len(), 16);
    }

    #[test]
    fn wavenumber_ordering() {
        let g = Grid::new(0.0, 1.0, 8).unwrap();
        let k = g.wavenumbers();
        let dk = std::f64::consts::TAU;
        assert_relative_eq!(k[0], 0.0);
        assert_relative_eq!(k[1], dk);
        assert_relative_eq!(k[3], 3.0 * dk);
        assert_relative_eq!(k[4], -4.0 * dk);
        assert_relative_eq!(k[7], -dk);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1.0, 0.0, 16).is_err());
        assert!(Grid::new(0.0, 1.0, 12).is_err());
        assert!(Grid::new(0.0, 1.0, 4).is_err());
    }
}
