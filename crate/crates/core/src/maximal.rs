//! Dyadic maximal operators, sharp maximal operators and the Rubio de
//! Francia iteration.
//!
//! All suprema run over the dyadic ancestors of a cell inside the grid. A
//! per-cube quantity is computed once and the pointwise supremum comes from
//! a single top-down pass that carries the running maximum.
//!
//! ```
//! use morreylab::{maximal, DyadicGrid, GridFunction};
//!
//! let grid = DyadicGrid::new(1, 2, 2).unwrap(); // [-2, 2), unit cells
//! let f = GridFunction::new(grid, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
//! let mf = maximal::hl_maximal(&f);
//! assert_eq!(mf.values(), &[0.25, 0.25, 1.0, 0.5]);
//! ```

use crate::dyadic::{DyadicCube, DyadicGrid, GridFunction, Pyramid, Weight};
use crate::error::{Error, Result};
use crate::rearrange::{for_each_sorted_cube, morton_block, oscillation_sorted};

/// Pointwise max over ancestors inside `q0` of a per-cube quantity.
///
/// `per_level[i]` holds the values of the cubes of `D(q0)` at level
/// `q0.level + i`, in local Morton order. Returns finest-level values in
/// local Morton order.
pub(crate) fn ancestor_max(dim: u32, per_level: &[Vec<f64>]) -> Vec<f64> {
    let mut running = per_level[0].clone();
    for vals in &per_level[1..] {
        running = vals.iter().enumerate().map(|(m, &v)| v.max(running[m >> dim])).collect();
    }
    running
}

/// Scatters local-Morton values of `D(q0)` into a function vanishing off `q0`.
pub(crate) fn scatter(grid: DyadicGrid, q0: &DyadicCube, local: &[f64]) -> GridFunction {
    let mut values = vec![0.0; grid.cell_count()];
    for (pos, &v) in grid.morton_range(q0).zip(local) {
        values[grid.morton_to_cell(pos)] = v;
    }
    GridFunction::new(grid, values).expect("finite values")
}

/// Lebesgue averages of `|f|` per level, in Morton order.
fn abs_averages(f: &GridFunction) -> Vec<Vec<f64>> {
    let g = f.grid();
    let leaves: Vec<f64> = g.to_morton(f.values()).iter().map(|v| v.abs()).collect();
    let sums = Pyramid::from_morton(&g, leaves);
    (0..=g.depth())
        .map(|l| {
            let n = (g.cell_count() >> (g.dim() * l)) as f64;
            sums.level(l).iter().map(|s| s / n).collect()
        })
        .collect()
}

/// Dyadic Hardy–Littlewood maximal function
/// `Mf(x) = max_{Q ∋ x} (1/|Q|) ∫_Q |f|`.
pub fn hl_maximal(f: &GridFunction) -> GridFunction {
    let g = f.grid();
    let local = ancestor_max(g.dim(), &abs_averages(f));
    GridFunction::from_morton(g, &local)
}

/// `M^{(η)} f = (M |f|^η)^{1/η}`.
pub fn powered_maximal(f: &GridFunction, eta: f64) -> Result<GridFunction> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("powered maximal needs η > 0, got {eta}")));
    }
    if eta == 1.0 {
        return Ok(hl_maximal(f));
    }
    Ok(hl_maximal(&f.abs_pow(eta)).map(|v| v.powf(1.0 / eta)))
}

/// `M_w f(x) = max_{Q ∋ x} (1/w(Q)) ∫_Q |f| dw`.
///
/// # Panics
///
/// Panics if `f` and `w` live on different grids.
pub fn weighted_maximal(f: &GridFunction, w: &Weight) -> GridFunction {
    let g = f.grid();
    assert_eq!(g, w.grid(), "function and weight live on different grids");
    let leaves: Vec<f64> = g
        .to_morton(f.values())
        .iter()
        .zip(w.morton_cell_masses())
        .map(|(v, m)| v.abs() * m)
        .collect();
    let sums = Pyramid::from_morton(&g, leaves);
    let averages: Vec<Vec<f64>> = (0..=g.depth())
        .map(|l| sums.level(l).iter().zip(w.masses().level(l)).map(|(s, m)| s / m).collect())
        .collect();
    GridFunction::from_morton(g, &ancestor_max(g.dim(), &averages))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Domain(format!("λ must lie in (0, 1/2), got {lambda}")));
    }
    Ok(())
}

/// `ω_λ(f; Q)` for every `Q ∈ D(q0)`, per level in local Morton order.
pub(crate) fn oscillation_pyramid(f: &GridFunction, q0: &DyadicCube, lambda: f64) -> Vec<Vec<f64>> {
    let g = f.grid();
    let mut per_level: Vec<Vec<f64>> =
        (q0.level..=g.depth()).map(|l| vec![0.0; 1usize << (g.dim() * (l - q0.level))]).collect();
    let base = g.morton(q0);
    for_each_sorted_cube(&g, q0, morton_block(f, q0), |v| *v, |cube, sorted| {
        let local = g.morton(&cube) - (base << (g.dim() * (cube.level - q0.level)));
        per_level[(cube.level - q0.level) as usize][local] = oscillation_sorted(sorted, lambda);
    });
    per_level
}

/// `M^{♯,d}_{λ;Q₀} f(x) = max_{Q ∈ D(Q₀), Q ∋ x} ω_λ(f; Q)` on `Q₀`, zero
/// elsewhere.
pub fn local_sharp(f: &GridFunction, q0: &DyadicCube, lambda: f64) -> Result<GridFunction> {
    check_lambda(lambda)?;
    let g = f.grid();
    if !g.is_valid(q0) {
        return Err(Error::Invalid(format!("cube {q0:?} is not on the grid")));
    }
    let per_level = oscillation_pyramid(f, q0, lambda);
    Ok(scatter(g, q0, &ancestor_max(g.dim(), &per_level)))
}

/// `M^{♯,d}_λ f(x) = max_{Q ∋ x} ω_λ(f; Q)` over all cubes of the grid.
pub fn global_sharp(f: &GridFunction, lambda: f64) -> Result<GridFunction> {
    local_sharp(f, &f.grid().root(), lambda)
}

/// Fefferman–Stein sharp function
/// `max_{Q ∋ x} ((1/|Q|) ∫_Q |f − f_Q|^η)^{1/η}`.
pub fn fs_sharp(f: &GridFunction, eta: f64) -> Result<GridFunction> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("sharp function needs η > 0, got {eta}")));
    }
    let g = f.grid();
    let per_level = mean_oscillations(&g.to_morton(f.values()), g, eta);
    Ok(GridFunction::from_morton(g, &ancestor_max(g.dim(), &per_level)))
}

/// `((1/|Q|) ∫_Q |f − f_Q|^η)^{1/η}` for every cube, from Morton values.
pub(crate) fn mean_oscillations(morton: &[f64], g: DyadicGrid, eta: f64) -> Vec<Vec<f64>> {
    (0..=g.depth())
        .map(|l| {
            let size = 1usize << (g.dim() * (g.depth() - l));
            morton
                .chunks(size)
                .map(|block| {
                    let n = block.len() as f64;
                    let mean = block.iter().sum::<f64>() / n;
                    let dev = block.iter().map(|v| (v - mean).abs().powf(eta)).sum::<f64>() / n;
                    dev.powf(1.0 / eta)
                })
                .collect()
        })
        .collect()
}

/// Truncated Rubio de Francia sum and its `A₁` tail bounds.
#[derive(Debug, Clone)]
pub struct RubioIteration {
    /// `R_K f = Σ_{k=0}^{K} M^k f / (2α)^k`.
    pub function: GridFunction,
    /// `max_x M^{K+1} f(x) / ((2α)^K R_K f(x))`; `[R_K f]_{A₁} ≤ 2α + tail`.
    pub tail: f64,
    /// `2 ∥M^K f∥_∞ / (2α)^K`.
    pub sup_tail: f64,
}

/// Rubio de Francia iteration with `K` maximal steps.
///
/// Sublinearity gives `M(R_K f) ≤ 2α R_K f + M^{K+1} f / (2α)^K`, which is
/// where [`RubioIteration::tail`] comes from.
pub fn rubio_iteration(f: &GridFunction, alpha: f64, k: u32) -> Result<RubioIteration> {
    if !f.is_nonnegative() {
        return Err(Error::Domain("Rubio de Francia iteration needs f >= 0".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("need α > 0, got {alpha}")));
    }
    let ratio = 2.0 * alpha;
    let mut term = f.clone();
    let mut sum = f.clone();
    let mut scale = 1.0;
    for _ in 0..k {
        term = hl_maximal(&term);
        scale /= ratio;
        sum = sum.zip_with(&term, |s, t| s + scale * t);
    }
    let sup_tail = 2.0 * term.max_abs() * scale;
    let next = hl_maximal(&term);
    let tail = next
        .values()
        .iter()
        .zip(sum.values())
        .map(|(&n, &s)| if n == 0.0 { 0.0 } else { n * scale / s })
        .fold(0.0, f64::max);
    Ok(RubioIteration { function: sum, tail, sup_tail })
}
