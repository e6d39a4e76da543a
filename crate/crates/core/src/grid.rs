//! Uniform cell-centered grids and the fields that live on them.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Uniform partition of `[x_left, x_right]` into `n_cells` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_left: f64,
    x_right: f64,
    n_cells: usize,
}

impl Grid {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells, got {n_cells}")));
        }
        if !(x_left.is_finite() && x_right.is_finite()) || x_right <= x_left {
            return Err(Error::InvalidGrid(format!(
                "domain [{x_left}, {x_right}] must be finite with positive length"
            )));
        }
        Ok(Self { x_left, x_right, n_cells })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn len(&self) -> usize {
        self.n_cells
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        (self.x_right - self.x_left) / self.n_cells as f64
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_left + (i as f64 + 0.5) * self.h()
    }

    /// Face `i` is the left face of cell `i`; faces run `0..=n_cells`.
    pub fn face(&self, i: usize) -> f64 {
        self.x_left + i as f64 * self.h()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.center(i))
    }

    /// Discrete L¹ norm `h·Σ|v_i|`.
    pub fn l1(&self, v: &[f64]) -> f64 {
        self.h() * v.iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn l1_diff(&self, a: &[f64], b: &[f64]) -> f64 {
        self.h() * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    /// `h·Σ(a_i - b_i)⁺`.
    pub fn l1_positive_diff(&self, a: &[f64], b: &[f64]) -> f64 {
        self.h() * a.iter().zip(b).map(|(x, y)| (x - y).max(0.0)).sum::<f64>()
    }

    pub fn integral(&self, v: &[f64]) -> f64 {
        self.h() * v.iter().sum::<f64>()
    }
}

/// Values attached to the cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: alloc::vec![c; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: grid.centers().map(f).collect() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, f64> {
        self.values.iter()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn l1(&self) -> f64 {
        self.grid.l1(&self.values)
    }

    pub fn l1_distance(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.grid.l1_diff(&self.values, &other.values))
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl IndexMut<usize> for Field {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let g = Grid::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.center(0), 0.125);
        assert_eq!(g.face(4), 1.0);
        let c: Vec<f64> = g.centers().collect();
        assert!(c.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        assert!(Grid::new(1.0, 1.0, 4).is_err());
        assert!(Grid::new(0.0, f64::NAN, 4).is_err());
    }

    #[test]
    fn norms() {
        let g = Grid::new(0.0, 2.0, 4).unwrap();
        let a = [1.0, -1.0, 2.0, 0.0];
        let b = [0.0, 0.0, 0.0, 1.0];
        assert_eq!(g.l1(&a), 2.0);
        assert_eq!(g.l1_diff(&a, &b), 2.5);
        assert_eq!(g.l1_positive_diff(&a, &b), 1.5);
        assert!(Field::new(g, alloc::vec![0.0; 3]).is_err());
    }
}
