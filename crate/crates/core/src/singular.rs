//! Discrete Hilbert and Riesz transforms, Calderón–Zygmund kernels,
//! commutators and BMO norms.
//!
//! Transforms are evaluated at cell midpoints. The cell holding the target
//! point contributes nothing: the kernels are odd and the target sits at the
//! cell's center, so the principal value over that cell vanishes.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dyadic::{DyadicGrid, GridFunction, Weight};
use crate::error::{Error, Result};
use crate::maximal::mean_oscillations;

/// Refinement depth for source cells adjacent to the target cell.
pub const NEAR_REFINEMENT_DEPTH: u32 = 3;

const VALIDATION_SAMPLES: usize = 4096;

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `K(d) = ∫ over the cell at offset d of dy/(x − y)` for unit cells and the
/// target at the origin cell's midpoint.
fn hilbert_stencil(d: i64) -> f64 {
    match d.cmp(&0) {
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Greater => (2.0 / (2.0 * d as f64 - 1.0)).ln_1p(),
        std::cmp::Ordering::Less => -(2.0 / (-2.0 * d as f64 - 1.0)).ln_1p(),
    }
}

/// Discrete Hilbert transform `Hf(x) = ∫ f(y)/(x − y) dy` at every cell
/// midpoint, integrating the kernel exactly over each source cell.
pub fn hilbert(f: &GridFunction) -> Result<GridFunction> {
    let g = f.grid();
    if g.dim() != 1 {
        return Err(Error::Invalid("the Hilbert transform is one-dimensional".into()));
    }
    let n = g.cell_count() as i64;
    let stencil: Vec<f64> = (-(n - 1)..n).map(hilbert_stencil).collect();
    let vals = f.values();
    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| neumaier_sum((0..n).map(|j| vals[j as usize] * stencil[(i - j + n - 1) as usize])))
        .collect();
    GridFunction::new(g, out)
}

pub type KernelFn = dyn Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync;

/// A Calderón–Zygmund kernel with its size constant and Hörmander exponent.
///
/// Points are `[x0, x1]`; in one dimension the second coordinate is 0.
#[derive(Clone)]
pub struct CZKernelSpec {
    kernel: Arc<KernelFn>,
    size_constant: f64,
    theta: f64,
    translation_invariant: bool,
}

impl fmt::Debug for CZKernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CZKernelSpec")
            .field("size_constant", &self.size_constant)
            .field("theta", &self.theta)
            .field("translation_invariant", &self.translation_invariant)
            .finish_non_exhaustive()
    }
}

impl CZKernelSpec {
    pub fn new(
        kernel: impl Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync + 'static,
        size_constant: f64,
        theta: f64,
    ) -> Self {
        CZKernelSpec { kernel: Arc::new(kernel), size_constant, theta, translation_invariant: false }
    }

    /// Declares `K(x, y) = k(x − y)`, letting [`cz_apply`] precompute a
    /// stencil instead of evaluating every pair.
    pub fn translation_invariant(mut self) -> Self {
        self.translation_invariant = true;
        self
    }

    /// `1/(x − y)` in one dimension.
    pub fn hilbert_kernel() -> Self {
        Self::new(|x, y| 1.0 / (x[0] - y[0]), 1.0, 1.0).translation_invariant()
    }

    /// `(x_i − y_i)/|x − y|^3` in two dimensions, `i ∈ {1, 2}`.
    pub fn riesz_kernel(i: usize) -> Result<Self> {
        if !(1..=2).contains(&i) {
            return Err(Error::Invalid(format!("Riesz index must be 1 or 2, got {i}")));
        }
        let k = i - 1;
        Ok(Self::new(
            move |x, y| {
                let (d0, d1) = (x[0] - y[0], x[1] - y[1]);
                let r2 = d0 * d0 + d1 * d1;
                [d0, d1][k] / (r2 * r2.sqrt())
            },
            1.0,
            1.0,
        )
        .translation_invariant())
    }

    pub fn size_constant(&self) -> f64 {
        self.size_constant
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        (self.kernel)(x, y)
    }

    /// Samples seeded random off-diagonal pairs in the root cube and checks
    /// finiteness and `|K(x, y)| ≤ C/|x − y|^dim`.
    pub fn validate(&self, grid: &DyadicGrid) -> Result<()> {
        if !(self.size_constant > 0.0 && self.size_constant.is_finite()) {
            return Err(Error::Validation(format!("size constant {} is not positive", self.size_constant)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Validation(format!("Hörmander exponent {} not in (0, 1]", self.theta)));
        }
        let half = 0.5 * grid.root_side();
        let dim = grid.dim() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c2);
        for _ in 0..VALIDATION_SAMPLES {
            let mut x = [0.0; 2];
            let mut y = [0.0; 2];
            for k in 0..dim {
                x[k] = rng.gen_range(-half..half);
                y[k] = rng.gen_range(-half..half);
            }
            let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
            if r == 0.0 {
                continue;
            }
            let k = self.eval(x, y);
            if !k.is_finite() {
                return Err(Error::Validation(format!("kernel is not finite at {x:?}, {y:?}")));
            }
            let bound = self.size_constant / r.powi(dim as i32);
            if k.abs() > bound * (1.0 + 1e-12) {
                return Err(Error::Validation(format!(
                    "size condition fails at {x:?}, {y:?}: |K| = {} > {bound}",
                    k.abs()
                )));
            }
        }
        Ok(())
    }
}

/// Quadrature of `K(x, ·)` over the box with lower corner `lo` and side `h`,
/// subdividing boxes that touch the target box `[tlo, tlo + th)`.
fn near_quadrature(
    spec: &CZKernelSpec,
    dim: usize,
    x: [f64; 2],
    lo: [f64; 2],
    h: f64,
    tlo: [f64; 2],
    th: f64,
    depth: u32,
) -> f64 {
    let touches = (0..dim).all(|k| lo[k] <= tlo[k] + th && tlo[k] <= lo[k] + h);
    if depth == 0 || !touches {
        let mut c = [0.0; 2];
        for k in 0..dim {
            c[k] = lo[k] + 0.5 * h;
        }
        return spec.eval(x, c) * h.powi(dim as i32);
    }
    let half = 0.5 * h;
    let children = 1usize << dim;
    neumaier_sum((0..children).map(|c| {
        let mut clo = lo;
        for k in 0..dim {
            if (c >> (dim - 1 - k)) & 1 == 1 {
                clo[k] += half;
            }
        }
        near_quadrature(spec, dim, x, clo, half, tlo, th, depth - 1)
    }))
}

fn lower_corner(g: &DyadicGrid, idx: [usize; 2]) -> [f64; 2] {
    let h = g.cell_side();
    let o = -0.5 * g.root_side();
    let mut lo = [0.0; 2];
    for k in 0..g.dim() as usize {
        lo[k] = o + idx[k] as f64 * h;
    }
    lo
}

/// Weight of the source cell `src` for the target cell `tgt`.
fn cell_weight(spec: &CZKernelSpec, g: &DyadicGrid, tgt: [usize; 2], src: [usize; 2], depth: u32) -> f64 {
    if tgt == src {
        return 0.0;
    }
    let dim = g.dim() as usize;
    let h = g.cell_side();
    let adjacent = (0..dim).all(|k| tgt[k].abs_diff(src[k]) <= 1);
    let x = {
        let lo = lower_corner(g, tgt);
        let mut x = [0.0; 2];
        for k in 0..dim {
            x[k] = lo[k] + 0.5 * h;
        }
        x
    };
    if adjacent {
        near_quadrature(spec, dim, x, lower_corner(g, src), h, lower_corner(g, tgt), h, depth)
    } else {
        let lo = lower_corner(g, src);
        let mut y = [0.0; 2];
        for k in 0..dim {
            y[k] = lo[k] + 0.5 * h;
        }
        spec.eval(x, y) * g.cell_volume()
    }
}

/// Applies the kernel by midpoint quadrature, refining source cells next to
/// the target; the target's own cell contributes 0.
pub fn cz_apply(spec: &CZKernelSpec, f: &GridFunction) -> Result<GridFunction> {
    cz_apply_with_depth(spec, f, NEAR_REFINEMENT_DEPTH)
}

pub(crate) fn cz_apply_with_depth(spec: &CZKernelSpec, f: &GridFunction, depth: u32) -> Result<GridFunction> {
    let g = f.grid();
    spec.validate(&g)?;
    let n = g.cells_per_axis();
    let dim = g.dim() as usize;
    let idx = |c: usize| g.cell_index(c);
    let vals = f.values();
    let out: Vec<f64> = if spec.translation_invariant {
        // stencil over offsets d = src − tgt + (n − 1) per axis
        let span = 2 * n - 1;
        let base = [n - 1, if dim == 2 { n - 1 } else { 0 }];
        let rows = if dim == 2 { span } else { 1 };
        let stencil: Vec<f64> = (0..span * rows)
            .into_par_iter()
            .map(|s| {
                let src = [s / rows, s % rows];
                cell_weight(spec, &g, base, src, depth)
            })
            .collect();
        (0..g.cell_count())
            .into_par_iter()
            .map(|t| {
                let ti = idx(t);
                neumaier_sum((0..g.cell_count()).map(|s| {
                    let si = idx(s);
                    let d0 = si[0] + n - 1 - ti[0];
                    let d1 = if dim == 2 { si[1] + n - 1 - ti[1] } else { 0 };
                    vals[s] * stencil[d0 * rows + d1]
                }))
            })
            .collect()
    } else {
        (0..g.cell_count())
            .into_par_iter()
            .map(|t| {
                let ti = idx(t);
                neumaier_sum((0..g.cell_count()).map(|s| vals[s] * cell_weight(spec, &g, ti, idx(s), depth)))
            })
            .collect()
    };
    GridFunction::new(g, out)
}

/// Riesz transform `R_i f(x) = ∫ (x_i − y_i)/|x − y|^3 f(y) dy` in 2D.
pub fn riesz(f: &GridFunction, i: usize) -> Result<GridFunction> {
    if f.grid().dim() != 2 {
        return Err(Error::Invalid("Riesz transforms are implemented in two dimensions".into()));
    }
    cz_apply(&CZKernelSpec::riesz_kernel(i)?, f)
}

/// An operator usable in a commutator.
#[derive(Debug, Clone, Copy)]
pub enum Operator<'a> {
    Hilbert,
    Riesz(usize),
    Kernel(&'a CZKernelSpec),
}

impl Operator<'_> {
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        match self {
            Operator::Hilbert => hilbert(f),
            Operator::Riesz(i) => riesz(f, *i),
            Operator::Kernel(spec) => cz_apply(spec, f),
        }
    }
}

/// `[b, T] f = b · Tf − T(b · f)`.
pub fn commutator(b: &GridFunction, t: Operator, f: &GridFunction) -> Result<GridFunction> {
    if b.grid() != f.grid() {
        return Err(Error::Invalid("b and f live on different grids".into()));
    }
    let tf = t.apply(f)?;
    let tbf = t.apply(&(b * f))?;
    Ok(&(b * &tf) - &tbf)
}

/// `max_Q (1/|Q|) ∫_Q |b − b_Q|` over all dyadic cubes.
pub fn bmo_norm(b: &GridFunction) -> f64 {
    let g = b.grid();
    mean_oscillations(&g.to_morton(b.values()), g, 1.0)
        .iter()
        .flatten()
        .copied()
        .fold(0.0, f64::max)
}

/// `max_Q ((1/w(Q)) ∫_Q |b − b_Q|^q dw)^{1/q} / ∥b∥_BMO`, or 0 for constant
/// `b`.
pub fn weighted_bmo_ratio(b: &GridFunction, w: &Weight, q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Domain(format!("need q > 0, got {q}")));
    }
    let g = b.grid();
    if g != w.grid() {
        return Err(Error::Invalid("function and weight live on different grids".into()));
    }
    let bmo = bmo_norm(b);
    if bmo == 0.0 {
        return Ok(0.0);
    }
    let vals = g.to_morton(b.values());
    let cell_masses = w.morton_cell_masses();
    let mut best = 0.0f64;
    for level in 0..=g.depth() {
        let size = 1usize << (g.dim() * (g.depth() - level));
        let masses = w.masses().level(level);
        for (m, (block, mb)) in vals.chunks(size).zip(cell_masses.chunks(size)).enumerate() {
            let mean = block.iter().sum::<f64>() / size as f64;
            let dev: f64 = block.iter().zip(mb).map(|(v, cm)| (v - mean).abs().powf(q) * cm).sum();
            best = best.max((dev / masses[m]).powf(1.0 / q));
        }
    }
    Ok(best / bmo)
}
