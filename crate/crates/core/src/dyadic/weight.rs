use crate::dyadic::function::GridFunction;
use crate::dyadic::grid::{CellSet, DyadicCube, DyadicGrid, Pyramid};
use crate::dyadic::quadrature::{adaptive_1d, adaptive_2d};
use crate::error::{Error, Result};

/// Relative tolerance of the 2D power-weight quadrature.
pub const POWER_QUADRATURE_TOL: f64 = 1e-10;

/// A strictly positive, cellwise-constant density.
///
/// Cube masses `w(Q)` are exact sums of cell masses and are precomputed for
/// every dyadic cube, so `mass(Q)` equals the sum of its children's masses
/// by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    grid: DyadicGrid,
    density: Vec<f64>,
    masses: Pyramid,
}

impl Weight {
    pub fn from_density(grid: DyadicGrid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.cell_count() {
            return Err(Error::Invalid(format!(
                "weight has {} densities, grid has {} cells",
                density.len(),
                grid.cell_count()
            )));
        }
        if let Some(i) = density.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Domain(format!(
                "weight density must be positive and finite, got {} at cell {i}",
                density[i]
            )));
        }
        let vol = grid.cell_volume();
        let cell_masses: Vec<f64> = density.iter().map(|d| d * vol).collect();
        let masses = Pyramid::from_cells(&grid, &cell_masses);
        Ok(Weight { grid, density, masses })
    }

    /// Builds a weight from exact cell masses; densities are mass/volume.
    pub fn from_cell_masses(grid: DyadicGrid, cell_masses: Vec<f64>) -> Result<Self> {
        if cell_masses.len() != grid.cell_count() {
            return Err(Error::Invalid("cell mass vector has the wrong length".into()));
        }
        if let Some(i) = cell_masses.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::Domain(format!(
                "cell mass must be positive and finite, got {} at cell {i}",
                cell_masses[i]
            )));
        }
        let vol = grid.cell_volume();
        let density = cell_masses.iter().map(|m| m / vol).collect();
        let masses = Pyramid::from_cells(&grid, &cell_masses);
        Ok(Weight { grid, density, masses })
    }

    /// Lebesgue measure, `w = 1`.
    pub fn lebesgue(grid: DyadicGrid) -> Self {
        Self::from_density(grid, vec![1.0; grid.cell_count()]).expect("unit density is valid")
    }

    /// The power weight `|x|^alpha`.
    ///
    /// In 1D the cell masses are exact antiderivative differences; in 2D
    /// they come from adaptive Gauss–Legendre quadrature with relative
    /// tolerance [`POWER_QUADRATURE_TOL`], with a polar formula on the four
    /// cells touching the origin.
    pub fn power(grid: DyadicGrid, alpha: f64) -> Result<Self> {
        let n = f64::from(grid.dim());
        if !alpha.is_finite() || alpha <= -n {
            return Err(Error::Domain(format!(
                "|x|^{alpha} is not locally integrable in dimension {}",
                grid.dim()
            )));
        }
        let masses = if grid.dim() == 1 { power_masses_1d(&grid, alpha) } else { power_masses_2d(&grid, alpha) };
        Self::from_cell_masses(grid, masses)
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn cell_mass(&self, cell: usize) -> f64 {
        self.masses.level(self.grid.depth())[self.grid.cell_to_morton(cell)]
    }

    /// `w(Q)`.
    pub fn mass(&self, cube: &DyadicCube) -> f64 {
        self.masses.get(&self.grid, cube)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass(&self.grid.root())
    }

    pub fn mass_of(&self, set: &CellSet) -> f64 {
        set.iter().map(|c| self.cell_mass(c)).sum()
    }

    /// Per-level cube masses in Morton order.
    pub fn masses(&self) -> &Pyramid {
        &self.masses
    }

    /// Finest-cell masses in Morton order.
    pub fn morton_cell_masses(&self) -> &[f64] {
        self.masses.level(self.grid.depth())
    }

    pub fn as_function(&self) -> GridFunction {
        GridFunction::new(self.grid, self.density.clone()).expect("densities are finite")
    }

    /// Cellwise power of the density, `w^e`.
    pub fn pow(&self, e: f64) -> Result<Weight> {
        Weight::from_density(self.grid, self.density.iter().map(|d| d.powf(e)).collect())
    }

    /// The dual weight `w^{-1/(q-1)}` of the `A_q` condition.
    pub fn dual(&self, q: f64) -> Result<Weight> {
        if q <= 1.0 {
            return Err(Error::Domain(format!("dual weight needs q > 1, got {q}")));
        }
        self.pow(-1.0 / (q - 1.0))
    }

    /// Weight from a positive grid function.
    pub fn from_function(f: &GridFunction) -> Result<Weight> {
        Weight::from_density(f.grid(), f.values().to_vec())
    }
}

/// `int_a^b x^alpha dx` for `0 <= a < b`, accurate for narrow far cells.
fn power_integral_positive(a: f64, b: f64, alpha: f64) -> f64 {
    let e = alpha + 1.0;
    if a == 0.0 {
        b.powf(e) / e
    } else {
        a.powf(e) * (e * ((b - a) / a).ln_1p()).exp_m1() / e
    }
}

/// Exact `int_a^b |x|^alpha dx` for `alpha > -1`.
pub(crate) fn power_mass_1d(a: f64, b: f64, alpha: f64) -> f64 {
    if a >= 0.0 {
        power_integral_positive(a, b, alpha)
    } else if b <= 0.0 {
        power_integral_positive(-b, -a, alpha)
    } else {
        power_integral_positive(0.0, -a, alpha) + power_integral_positive(0.0, b, alpha)
    }
}

fn power_masses_1d(grid: &DyadicGrid, alpha: f64) -> Vec<f64> {
    let h = grid.cell_side();
    let origin = -0.5 * grid.root_side();
    (0..grid.cell_count())
        .map(|i| power_mass_1d(origin + i as f64 * h, origin + (i + 1) as f64 * h, alpha))
        .collect()
}

/// `int_{[0,h]^2} |x|^alpha dx = 2 h^{alpha+2}/(alpha+2) int_0^{pi/4} sec^{alpha+2}`.
fn corner_cell_mass(h: f64, alpha: f64) -> f64 {
    let s = alpha + 2.0;
    let angular = adaptive_1d(&|t: f64| t.cos().powf(-s), 0.0, std::f64::consts::FRAC_PI_4, 1e-14);
    2.0 * h.powf(s) / s * angular
}

fn power_masses_2d(grid: &DyadicGrid, alpha: f64) -> Vec<f64> {
    let n = grid.cells_per_axis();
    let half = n / 2;
    let h = grid.cell_side();
    let f = |x: f64, y: f64| (x * x + y * y).powf(0.5 * alpha);
    // First-quadrant cells (a, b) with a >= b cover everything by symmetry.
    let mut quadrant = vec![0.0; half * half];
    for a in 0..half {
        for b in 0..=a {
            let m = if a == 0 && b == 0 {
                corner_cell_mass(h, alpha)
            } else {
                let (x0, y0) = (a as f64 * h, b as f64 * h);
                adaptive_2d(&f, x0, x0 + h, y0, y0 + h, POWER_QUADRATURE_TOL)
            };
            quadrant[a * half + b] = m;
            quadrant[b * half + a] = m;
        }
    }
    let fold = |i: usize| if i >= half { i - half } else { half - 1 - i };
    let mut masses = vec![0.0; grid.cell_count()];
    for i0 in 0..n {
        for i1 in 0..n {
            masses[grid.cell_id([i0, i1])] = quadrant[fold(i0) * half + fold(i1)];
        }
    }
    masses
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_weight_examples() {
        let g = DyadicGrid::new(1, 2, 2).unwrap();
        let w0 = Weight::power(g, 0.0).unwrap();
        assert!(w0.density().iter().all(|&d| (d - 1.0).abs() < 1e-15));

        let w1 = Weight::power(g, 1.0).unwrap();
        let cell = g.cube(2, [2, 0]).unwrap(); // [0, 1)
        assert!((w1.mass(&cell) - 0.5).abs() < 1e-15);
        assert!((w1.total_mass() - 4.0).abs() < 1e-14);

        assert!(matches!(Weight::power(g, -1.0), Err(Error::Domain(_))));
        let g2 = DyadicGrid::new(2, 0, 2).unwrap();
        assert!(matches!(Weight::power(g2, -2.0), Err(Error::Domain(_))));
        assert!(Weight::power(g2, -1.5).is_ok());
    }

    #[test]
    fn weight_mass_examples() {
        let g = DyadicGrid::new(1, 2, 3).unwrap();
        let w = Weight::lebesgue(g);
        let q = g.cube(1, [0, 0]).unwrap();
        assert_eq!(w.mass(&q), 2.0);
        assert_eq!(w.total_mass(), 4.0);
        let total: f64 = (0..g.cell_count()).map(|c| w.cell_mass(c)).sum();
        assert_eq!(total, w.total_mass());
    }

    #[test]
    fn rejects_non_positive_density() {
        let g = DyadicGrid::new(1, 0, 2).unwrap();
        assert!(Weight::from_density(g, vec![1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(Weight::from_density(g, vec![1.0, -2.0, 1.0, 1.0]).is_err());
        assert!(Weight::from_density(g, vec![1.0; 2]).is_err());
    }

    #[test]
    fn far_cells_are_accurate() {
        // narrow cell far from the origin: compare with a Taylor-accurate value
        let a = 1000.0;
        let h = 1e-3;
        let exact = ((a + h) as f64).powf(1.5) / 1.5 - (a as f64).powf(1.5) / 1.5;
        let got = power_mass_1d(a, a + h, 0.5);
        assert!(((got - exact) / got).abs() < 1e-9);
        // symmetric straddling cell
        assert!((power_mass_1d(-1.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_d_power_masses_match_radial_total() {
        // Total mass of |x|^alpha on [-1,1]^2 against four corner integrals;
        // all but the origin cells come from the adaptive rule.
        let g = DyadicGrid::new(2, 1, 4).unwrap();
        for &alpha in &[-1.5, -0.5, 0.0, 1.0, 2.5] {
            let w = Weight::power(g, alpha).unwrap();
            let square = 4.0 * corner_cell_mass(1.0, alpha);
            assert!(((w.total_mass() - square) / square).abs() < 1e-9, "alpha {alpha}");
        }
        let w = Weight::power(g, 0.0).unwrap();
        assert!(w.density().iter().all(|&d| (d - 1.0).abs() < 1e-12));
    }
}
