//! Dyadic grids, cubes, piecewise-constant functions and weights.

mod csv_io;
mod function;
mod grid;
pub(crate) mod quadrature;
mod weight;

pub use csv_io::{depth_for_rows, read_values, write_values, CSV_HEADER};
pub use function::GridFunction;
pub use grid::{CellSet, CubeGeometry, DyadicCube, DyadicGrid, Pyramid, MAX_LOG2_CELLS};
pub use weight::{Weight, POWER_QUADRATURE_TOL};

pub(crate) use weight::power_mass_1d;
