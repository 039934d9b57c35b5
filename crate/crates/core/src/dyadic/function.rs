use std::ops::{Add, Mul, Neg, Sub};

use crate::dyadic::grid::{CellSet, DyadicCube, DyadicGrid};
use crate::error::{Error, Result};

/// A real function that is constant on every finest cell of a grid.
///
/// Values are stored row-major and never mutated; arithmetic returns new
/// instances. Combining functions from different grids panics.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: DyadicGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: DyadicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::Invalid(format!(
                "function has {} values, grid has {} cells",
                values.len(),
                grid.cell_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite value {} at cell {i}", values[i])));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn constant(grid: DyadicGrid, c: f64) -> Self {
        GridFunction { grid, values: vec![c; grid.cell_count()] }
    }

    pub fn zeros(grid: DyadicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Builds a function cell by cell from its row-major id.
    pub fn from_cell_fn(grid: DyadicGrid, f: impl Fn(usize) -> f64) -> Self {
        GridFunction { grid, values: (0..grid.cell_count()).map(f).collect() }
    }

    /// Samples `f` at cell midpoints (padded with a zero second coordinate
    /// in 1D).
    pub fn from_center_fn(grid: DyadicGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::from_cell_fn(grid, |c| f(grid.cell_center(c)))
    }

    pub fn indicator(set: &CellSet) -> Self {
        let grid = set.grid();
        Self::from_cell_fn(grid, |c| if set.contains(c) { 1.0 } else { 0.0 })
    }

    pub fn indicator_cube(grid: DyadicGrid, cube: &DyadicCube) -> Self {
        Self::indicator(&CellSet::from_cube(grid, cube))
    }

    /// Builds a function from Morton-ordered values.
    pub(crate) fn from_morton(grid: DyadicGrid, morton: &[f64]) -> Self {
        GridFunction { grid, values: grid.from_morton(morton) }
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values rearranged into Morton layout (contiguous cubes).
    pub fn morton_values(&self) -> Vec<f64> {
        self.grid.to_morton(&self.values)
    }

    /// Values of the cells inside `cube`.
    pub fn cube_values(&self, cube: &DyadicCube) -> Vec<f64> {
        self.grid.cells(cube).map(|c| self.values[c]).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "functions live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        GridFunction { grid: self.grid, values }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// Pointwise `|f|^e`.
    pub fn abs_pow(&self, e: f64) -> Self {
        self.map(|v| v.abs().powf(e))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn restrict(&self, set: &CellSet) -> Self {
        Self::from_cell_fn(self.grid, |c| if set.contains(c) { self.values[c] } else { 0.0 })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lebesgue integral over the whole grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `sum f * g * cell_volume`.
    pub fn inner(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.grid, other.grid, "functions live on different grids");
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: &GridFunction) -> GridFunction {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: f64) -> GridFunction {
        self.scale(rhs)
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_builds_new_instances() {
        let g = DyadicGrid::new(1, 2, 2).unwrap();
        let f = GridFunction::new(g, vec![3.0, -1.0, 2.0, 5.0]).unwrap();
        let h = GridFunction::constant(g, 1.0);
        assert_eq!((&f + &h).values(), &[4.0, 0.0, 3.0, 6.0]);
        assert_eq!((&f - &h).values(), &[2.0, -2.0, 1.0, 4.0]);
        assert_eq!((&f * 2.0).values(), &[6.0, -2.0, 4.0, 10.0]);
        assert_eq!(f.abs().values(), &[3.0, 1.0, 2.0, 5.0]);
        assert_eq!(f.values(), &[3.0, -1.0, 2.0, 5.0]);
        assert_eq!(f.integral(), 9.0);
    }

    #[test]
    fn rejects_bad_input() {
        let g = DyadicGrid::new(1, 0, 2).unwrap();
        assert!(GridFunction::new(g, vec![1.0; 3]).is_err());
        assert!(GridFunction::new(g, vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn cube_values_follow_cells() {
        let g = DyadicGrid::new(2, 0, 2).unwrap();
        let f = GridFunction::from_cell_fn(g, |c| c as f64);
        let q = g.cube(1, [1, 0]).unwrap();
        let mut v = f.cube_values(&q);
        v.sort_by(f64::total_cmp);
        assert_eq!(v, vec![8.0, 9.0, 12.0, 13.0]);
    }
}
