//! Dyadic Hausdorff content, Choquet integrals, candidate functions of the
//! class `𝔅_α`, and two-sided bounds for block-space norms.
//!
//! ```
//! use morreylab::{content, CellSet, DyadicGrid};
//!
//! let grid = DyadicGrid::new(1, 0, 4).unwrap();
//! let one_cell = CellSet::from_cells(grid, [3]).unwrap();
//! let h = content::hausdorff_content(&one_cell, 0.5).unwrap();
//! assert!((h - (1.0f64 / 16.0).sqrt()).abs() < 1e-15);
//! ```

use rayon::prelude::*;

use crate::dyadic::{power_mass_1d, CellSet, DyadicCube, DyadicGrid, GridFunction, Weight};
use crate::error::{Error, Result};
use crate::maximal::hl_maximal;
use crate::morrey::{morrey_norm, MorreyParams};
use crate::weights::a1_constant;

fn check_alpha(grid: &DyadicGrid, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= f64::from(grid.dim())) {
        return Err(Error::Domain(format!("content dimension must lie in (0, {}], got {alpha}", grid.dim())));
    }
    Ok(())
}

/// Content DP over Morton-ordered membership flags.
fn content_of_mask(grid: &DyadicGrid, morton_mask: &[bool], alpha: f64) -> f64 {
    let b = grid.branching();
    let leaf = grid.cell_side().powf(alpha);
    let mut cur: Vec<f64> = morton_mask.iter().map(|&m| if m { leaf } else { 0.0 }).collect();
    for level in (0..grid.depth()).rev() {
        let cover = grid.side(&DyadicCube { level, index: [0, 0] }).powf(alpha);
        cur = cur
            .chunks_exact(b)
            .map(|c| {
                let s: f64 = c.iter().sum();
                if s == 0.0 {
                    0.0
                } else {
                    s.min(cover)
                }
            })
            .collect();
    }
    cur[0]
}

/// `α`-dimensional Hausdorff content of a cell set over dyadic covers:
/// `c(Q) = min(ℓ(Q)^α, Σ c(children))`, with 0 on cubes missing the set.
pub fn hausdorff_content(e: &CellSet, alpha: f64) -> Result<f64> {
    let g = e.grid();
    check_alpha(&g, alpha)?;
    let mut mask = vec![false; g.cell_count()];
    for c in e.iter() {
        mask[g.cell_to_morton(c)] = true;
    }
    Ok(content_of_mask(&g, &mask, alpha))
}

/// `∫ φ dH^α = Σ_i (t_{i+1} − t_i) H^α({φ > t_i})` over the sorted distinct
/// values `0 = t_0 < t_1 < …` of `φ`.
pub fn choquet_integral(phi: &GridFunction, alpha: f64) -> Result<f64> {
    let g = phi.grid();
    check_alpha(&g, alpha)?;
    if !phi.is_nonnegative() {
        return Err(Error::Domain("Choquet integrals need φ >= 0".into()));
    }
    let morton = g.to_morton(phi.values());
    let mut levels: Vec<f64> = morton.iter().copied().filter(|&v| v > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let terms: Vec<f64> = (0..levels.len())
        .into_par_iter()
        .map(|i| {
            let below = if i == 0 { 0.0 } else { levels[i - 1] };
            let mask: Vec<bool> = morton.iter().map(|&v| v > below).collect();
            (levels[i] - below) * content_of_mask(&g, &mask, alpha)
        })
        .collect();
    Ok(terms.iter().sum())
}

/// A positive function normalized into `𝔅_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateB {
    pub b: GridFunction,
    /// `[b]_{A_1}` over the grid.
    pub a1_const: f64,
    /// `∫_{support} b dH^α` after normalization; at most 1.
    pub choquet: f64,
    /// The cube carrying the Choquet measurement.
    pub support: DyadicCube,
    /// The content dimension `α`.
    pub dimension: f64,
}

impl CandidateB {
    /// Divides by the Choquet integral over `support` when it exceeds 1.
    fn normalized(b: GridFunction, support: DyadicCube, dimension: f64) -> Result<Self> {
        let g = b.grid();
        let on_support = b.restrict(&CellSet::from_cube(g, &support));
        let c = choquet_integral(&on_support, dimension)?;
        let (b, choquet) = if c > 1.0 { (b.scale(1.0 / c), choquet_integral(&on_support.scale(1.0 / c), dimension)?) } else { (b, c) };
        let a1_const = a1_constant(&Weight::from_function(&b)?);
        Ok(CandidateB { b, a1_const, choquet, support, dimension })
    }
}

/// `b = (M χ_Q)^{α/n + ε} / ℓ(Q)^α`, measured over the whole grid.
pub fn candidate_b_maximal(grid: DyadicGrid, q: &DyadicCube, alpha: f64, eps: f64) -> Result<CandidateB> {
    check_alpha(&grid, alpha)?;
    let n = f64::from(grid.dim());
    if !(eps > 0.0 && eps < 1.0 - alpha / n) {
        return Err(Error::Domain(format!("ε must lie in (0, {}), got {eps}", 1.0 - alpha / n)));
    }
    if !grid.is_valid(q) {
        return Err(Error::Invalid(format!("cube {q:?} is not on the grid")));
    }
    let m = hl_maximal(&GridFunction::indicator_cube(grid, q));
    let side = grid.side(q);
    let b = m.map(|v| v.powf(alpha / n + eps) / side.powf(alpha));
    CandidateB::normalized(b, grid.root(), alpha)
}

/// The admissible exponent `β` of the power candidate: the midpoint of
/// `((α − n(q−1))/n, 1 − q/p) ∩ (0, 1 − q/p)`.
pub fn power_candidate_beta(p: f64, q: f64, alpha: f64, n: u32) -> Result<f64> {
    let n = f64::from(n);
    let upper = 1.0 - q / p;
    let lower = ((alpha - n * (q - 1.0)) / n).max(0.0);
    if !(lower < upper) {
        return Err(Error::Domain(format!("no admissible β: interval ({lower}, {upper}) is empty")));
    }
    Ok(0.5 * (lower + upper))
}

/// `b = |Q₀|^{β − (1 − q/p)} |x|^{−β}` (one dimension) with exact cell
/// averages, measured over `Q₀`.
pub fn candidate_b_power(grid: DyadicGrid, q0: &DyadicCube, p: f64, q: f64, alpha: f64) -> Result<CandidateB> {
    if grid.dim() != 1 {
        return Err(Error::Invalid("power candidates are one-dimensional".into()));
    }
    if !(q > 1.0 && q <= p && p.is_finite()) {
        return Err(Error::Domain(format!("need 1 < q <= p < inf, got p={p}, q={q}")));
    }
    if !(alpha >= -q / p && alpha < q - q / p) {
        return Err(Error::Domain(format!("α = {alpha} outside [{}, {})", -q / p, q - q / p)));
    }
    if !grid.is_valid(q0) {
        return Err(Error::Invalid(format!("cube {q0:?} is not on the grid")));
    }
    let beta = power_candidate_beta(p, q, alpha, 1)?;
    let scale = grid.volume(q0).powf(beta - (1.0 - q / p));
    let h = grid.cell_side();
    let o = -0.5 * grid.root_side();
    let b = GridFunction::from_cell_fn(grid, |c| {
        let a = o + c as f64 * h;
        scale * power_mass_1d(a, a + h, -beta) / h
    });
    CandidateB::normalized(b, *q0, 1.0 - q / p)
}

fn check_block(p: f64, q: f64) -> Result<f64> {
    if !(q > 1.0 && q <= p && p.is_finite()) {
        return Err(Error::Domain(format!("need 1 < q <= p < inf, got p={p}, q={q}")));
    }
    Ok(q / (q - 1.0))
}

/// Upper bound `min_b (∫ |g|^{q′} b^{−q′/q})^{1/q′}` on the block norm.
pub fn block_norm_upper(g: &GridFunction, p: f64, q: f64, candidates: &[CandidateB]) -> Result<f64> {
    let qp = check_block(p, q)?;
    if candidates.is_empty() {
        return Err(Error::Invalid("candidate list is empty".into()));
    }
    let vol = g.grid().cell_volume();
    let mut best = f64::INFINITY;
    for cand in candidates {
        if cand.b.grid() != g.grid() {
            return Err(Error::Invalid("candidate and function live on different grids".into()));
        }
        let s: f64 = g
            .values()
            .iter()
            .zip(cand.b.values())
            .map(|(v, b)| if *v == 0.0 { 0.0 } else { v.abs().powf(qp) * b.powf(-qp / q) })
            .sum();
        best = best.min((s * vol).powf(1.0 / qp));
    }
    Ok(best)
}

/// Lower bound `max_f ∫ |f g| / ∥f∥_{M^p_q}` on the block norm, up to the
/// dimensional constant of the duality.
pub fn block_norm_lower(g: &GridFunction, p: f64, q: f64, test_fs: &[GridFunction]) -> Result<f64> {
    check_block(p, q)?;
    let one = Weight::lebesgue(g.grid());
    let params = MorreyParams::samko(p, q, &one)?;
    let mut best = 0.0f64;
    for f in test_fs {
        if f.grid() != g.grid() {
            return Err(Error::Invalid("test function and g live on different grids".into()));
        }
        let norm = morrey_norm(f, &params);
        if norm > 0.0 {
            best = best.max(f.abs().inner(&g.abs()) / norm);
        }
    }
    Ok(best)
}
