//! Sparse families of dyadic cubes.
//!
//! Two constructions live here. [`cz_sparse`] runs the Calderón–Zygmund
//! stopping time on the averages of a weight, and [`lerner_decompose`]
//! runs the median decomposition of a function. Both produce a
//! [`SparseFamily`], which [`validate_sparse`] checks with exact cell
//! counting.
//!
//! ```
//! use morreylab::{sparse, DyadicGrid, Weight};
//!
//! let grid = DyadicGrid::new(1, 4, 4).unwrap();
//! let mut density = vec![1.0; 16];
//! density[5] = 1000.0;
//! let w = Weight::from_density(grid, density).unwrap();
//! let family = sparse::cz_sparse(&w, &grid.root(), 8.0).unwrap();
//! assert_eq!(family.level(1), &[grid.cell_cube(5)]);
//! assert!(sparse::validate_sparse(&family, 0.25).passes());
//! ```

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{CellSet, DyadicCube, DyadicGrid, GridFunction, Weight};
use crate::error::{Error, Result};
use crate::maximal::{local_sharp, oscillation_pyramid, scatter};
use crate::rearrange::{
    cell_count_for, for_each_sorted_cube, median_sorted, morton_block, oscillation,
    rearrangement_desc,
};
use crate::weights::reverse_holder_epsilon;

/// Levels of cubes `Q^k_j` with `Ω_k = ∪_j Q^k_j` and a sparsity `η`.
///
/// Serialized as `{"grid", "sparsity", "levels"}` where each level is a list
/// of `[level, [i0, i1]]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FamilyRepr", try_from = "FamilyRepr")]
pub struct SparseFamily {
    grid: DyadicGrid,
    levels: Vec<Vec<DyadicCube>>,
    sparsity: f64,
}

#[derive(Serialize, Deserialize)]
struct FamilyRepr {
    grid: DyadicGrid,
    sparsity: f64,
    levels: Vec<Vec<(u32, [u32; 2])>>,
}

impl From<SparseFamily> for FamilyRepr {
    fn from(f: SparseFamily) -> Self {
        FamilyRepr {
            grid: f.grid,
            sparsity: f.sparsity,
            levels: f
                .levels
                .iter()
                .map(|l| l.iter().map(|q| (q.level, q.index)).collect())
                .collect(),
        }
    }
}

impl TryFrom<FamilyRepr> for SparseFamily {
    type Error = Error;

    fn try_from(r: FamilyRepr) -> Result<Self> {
        let levels = r
            .levels
            .into_iter()
            .map(|l| l.into_iter().map(|(level, index)| DyadicCube { level, index }).collect())
            .collect();
        SparseFamily::new(r.grid, levels, r.sparsity)
    }
}

impl SparseFamily {
    /// Wraps levels of cubes. Only grid membership and `η > 0` are checked;
    /// use [`validate_sparse`] for the structural properties.
    pub fn new(grid: DyadicGrid, levels: Vec<Vec<DyadicCube>>, sparsity: f64) -> Result<Self> {
        if !(sparsity > 0.0 && sparsity.is_finite()) {
            return Err(Error::Domain(format!("sparsity must be positive, got {sparsity}")));
        }
        if let Some(q) = levels.iter().flatten().find(|q| !grid.is_valid(q)) {
            return Err(Error::Invalid(format!("cube {q:?} is not on the grid")));
        }
        Ok(SparseFamily { grid, levels, sparsity })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn sparsity(&self) -> f64 {
        self.sparsity
    }

    pub fn levels(&self) -> &[Vec<DyadicCube>] {
        &self.levels
    }

    /// Cubes of level `k`; empty past the last level.
    pub fn level(&self, k: usize) -> &[DyadicCube] {
        self.levels.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn cube_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// `(k, Q^k_j)` for every cube.
    pub fn cubes(&self) -> impl Iterator<Item = (usize, &DyadicCube)> + '_ {
        self.levels.iter().enumerate().flat_map(|(k, l)| l.iter().map(move |q| (k, q)))
    }

    /// `Ω_k` as a cell set.
    pub fn omega(&self, k: usize) -> CellSet {
        let mut s = CellSet::empty(self.grid);
        for q in self.level(k) {
            for c in self.grid.cells(q) {
                s.insert(c);
            }
        }
        s
    }

    /// `Σ_j |Q^k_j|`.
    pub fn level_measure(&self, k: usize) -> f64 {
        self.level(k).iter().map(|q| self.grid.volume(q)).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Half-open finest-cell Morton ranges of `cubes`, sorted by start.
fn morton_intervals(grid: &DyadicGrid, cubes: &[DyadicCube]) -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = cubes
        .iter()
        .map(|q| {
            let r = grid.morton_range(q);
            (r.start, r.end)
        })
        .collect();
    v.sort_unstable();
    v
}

/// Disjoint union of sorted intervals and the number of cells counted twice.
fn merge_intervals(sorted: &[(usize, usize)]) -> (Vec<(usize, usize)>, usize) {
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(sorted.len());
    let mut overlap = 0;
    for &(s, e) in sorted {
        match out.last_mut() {
            Some(last) if s < last.1 => {
                overlap += e.min(last.1) - s;
                last.1 = last.1.max(e);
            }
            _ => out.push((s, e)),
        }
    }
    (out, overlap)
}

/// Cells of `[s, e)` covered by a disjoint sorted union.
fn covered_in(union: &[(usize, usize)], s: usize, e: usize) -> usize {
    let first = union.partition_point(|iv| iv.1 <= s);
    union[first..]
        .iter()
        .take_while(|iv| iv.0 < e)
        .map(|iv| iv.1.min(e) - iv.0.max(s))
        .sum()
}

/// Worst-case margins of the three sparse-family properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SparseReport {
    /// Largest measure covered twice within one level (0 when disjoint).
    pub overlap_measure: f64,
    /// Largest `|Ω_{k+1} ∖ Ω_k|` (0 when nested).
    pub escape_measure: f64,
    /// Largest `|Ω_{k+1} ∩ Q^k_j| / |Q^k_j|`.
    pub worst_ratio: f64,
    /// `η − worst_ratio`.
    pub packing_slack: f64,
}

impl SparseReport {
    pub fn disjoint(&self) -> bool {
        self.overlap_measure == 0.0
    }

    pub fn nested(&self) -> bool {
        self.escape_measure == 0.0
    }

    pub fn packed(&self) -> bool {
        self.packing_slack >= 0.0
    }

    pub fn passes(&self) -> bool {
        self.disjoint() && self.nested() && self.packed()
    }
}

/// Checks disjointness within levels, nesting across levels and the
/// packing bound `|Ω_{k+1} ∩ Q^k_j| ≤ η |Q^k_j|` by counting cells.
pub fn validate_sparse(family: &SparseFamily, eta: f64) -> SparseReport {
    let g = family.grid();
    let vol = g.cell_volume();
    let unions: Vec<(Vec<(usize, usize)>, usize)> = family
        .levels()
        .iter()
        .map(|l| merge_intervals(&morton_intervals(&g, l)))
        .collect();
    let overlap = unions.iter().map(|u| u.1).max().unwrap_or(0);
    let mut escape = 0usize;
    let mut worst = 0.0f64;
    for k in 1..unions.len() {
        let (outer, inner) = (&unions[k - 1].0, &unions[k].0);
        let inside: usize = inner.iter().map(|&(s, e)| covered_in(outer, s, e)).sum();
        let total: usize = inner.iter().map(|&(s, e)| e - s).sum();
        escape = escape.max(total - inside);
        for q in family.level(k - 1) {
            let r = g.morton_range(q);
            let ratio = covered_in(inner, r.start, r.end) as f64 / r.len() as f64;
            worst = worst.max(ratio);
        }
    }
    SparseReport {
        overlap_measure: overlap as f64 * vol,
        escape_measure: escape as f64 * vol,
        worst_ratio: worst,
        packing_slack: eta - worst,
    }
}

/// Stopping-time family of a weight on `Q₀`.
///
/// With `γ₀ = w(Q₀)/|Q₀|`, level `k ≥ 1` holds the maximal dyadic cubes of
/// `Q₀` whose average exceeds `a^k γ₀`. The sparsity is `2^dim / a`.
pub fn cz_sparse(w: &Weight, q0: &DyadicCube, a: f64) -> Result<SparseFamily> {
    let g = w.grid();
    if !g.is_valid(q0) {
        return Err(Error::Invalid(format!("cube {q0:?} is not on the grid")));
    }
    let branching = g.branching() as f64;
    if !(a > branching && a.is_finite()) {
        return Err(Error::Domain(format!("need a > 2^dim = {branching}, got {a}")));
    }
    let avg = |q: &DyadicCube| w.masses().get(&g, q) / g.volume(q);
    let gamma0 = avg(q0);
    let mut levels = vec![vec![*q0]];
    for k in 1.. {
        let tau = gamma0 * a.powi(k);
        let mut next = Vec::new();
        let mut stack: Vec<DyadicCube> = levels.last().expect("level 0 exists").clone();
        while let Some(q) = stack.pop() {
            if avg(&q) > tau {
                next.push(q);
            } else if q.level < g.depth() {
                stack.extend(q.children(g.dim()));
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_by_key(|q| (q.level, g.morton(q) << (g.dim() * (g.depth() - q.level))));
        levels.push(next);
    }
    SparseFamily::new(g, levels, branching / a)
}

/// Which sparse regime a Lerner parameter `λ` certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LambdaRegime {
    /// `λ ≤ λ_w`: the family is w-sparse for the given parameters.
    WSparse,
    /// `λ_w < λ ≤ 2^{−dim−2}`: plain sparsity only.
    Lerner,
    /// `λ > 2^{−dim−2}`: outside the decomposition's range.
    Outside,
}

/// Parameters of the w-sparse regime, kept in base-2 logarithms because
/// `λ_w′` underflows for any realistic `[w]_{A∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WSparseParams {
    pub dim: u32,
    pub a_inf: f64,
    pub slack: f64,
    pub epsilon: f64,
    pub log2_lambda_prime: f64,
    pub log2_lambda: f64,
    pub c_w: f64,
}

impl WSparseParams {
    /// `λ_w′`, which may round to 0.
    pub fn lambda_prime(&self) -> f64 {
        self.log2_lambda_prime.exp2()
    }

    /// `λ_w = 2^{−dim−2} λ_w′`, which may round to 0.
    pub fn lambda(&self) -> f64 {
        self.log2_lambda.exp2()
    }

    /// Whether `λ_w |Q₀|` is below one finest cell, where every
    /// oscillation degenerates to half the range of `f`.
    pub fn is_degenerate_on(&self, grid: &DyadicGrid, q0: &DyadicCube) -> bool {
        let cells = (grid.dim() * (grid.depth() - q0.level)) as f64;
        self.log2_lambda + cells < 0.0
    }
}

/// `λ_n = 2^{−dim−2}`, the parameter of the plain Lerner decomposition.
pub fn lerner_lambda(dim: u32) -> f64 {
    (-(dim as f64) - 2.0).exp2()
}

/// w-sparse parameters for `[w]_{A∞} = a_inf`.
///
/// `λ_w′ = slack · 2^{−1−2^{n+3} a_inf}`, `ε = 2^{−n−3}/a_inf` and
/// `C_w = (1 − 2 λ_w′^{ε/(1+ε)})^{−1}`. The last simplifies to
/// `(1 − slack^{1/(1+2^{n+3} a_inf)})^{−1}`, which is how it is evaluated.
pub fn wsparse_params(a_inf: f64, n: u32, slack: f64) -> Result<WSparseParams> {
    if !(n == 1 || n == 2) {
        return Err(Error::Domain(format!("dimension must be 1 or 2, got {n}")));
    }
    if !(a_inf >= 1.0 && a_inf.is_finite()) {
        return Err(Error::Domain(format!("[w]_A∞ must be at least 1, got {a_inf}")));
    }
    if !(slack > 0.0 && slack < 1.0) {
        return Err(Error::Domain(format!("slack must lie in (0, 1), got {slack}")));
    }
    let big = (n as f64 + 3.0).exp2() * a_inf;
    let log2_lambda_prime = slack.log2() - 1.0 - big;
    let c_w = 1.0 / -(slack.ln() / (1.0 + big)).exp_m1();
    if !c_w.is_finite() {
        return Err(Error::Degenerate(format!("C_w overflows for a_inf={a_inf}, slack={slack}")));
    }
    Ok(WSparseParams {
        dim: n,
        a_inf,
        slack,
        epsilon: 1.0 / big,
        log2_lambda_prime,
        log2_lambda: log2_lambda_prime - n as f64 - 2.0,
        c_w,
    })
}

/// Classifies `λ` against the w-sparse threshold (if given) and `λ_n`.
pub fn lambda_regime(lambda: f64, dim: u32, params: Option<&WSparseParams>) -> LambdaRegime {
    if params.is_some_and(|p| lambda.log2() <= p.log2_lambda) {
        LambdaRegime::WSparse
    } else if lambda <= lerner_lambda(dim) {
        LambdaRegime::Lerner
    } else {
        LambdaRegime::Outside
    }
}

/// Outcome of the `w(Q) ≤ C_w w(Q ∖ Ω_{k+1})` check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CwCertificate {
    /// Largest `w(Q^k_j) / w(Q^k_j ∖ Ω_{k+1})`; infinite on failure.
    pub worst_ratio: f64,
    pub c_w: f64,
    /// Reverse Hölder exponent of the weight.
    pub epsilon: f64,
    /// Whether that exponent reaches the parameters' `ε`.
    pub epsilon_certified: bool,
    /// A cube whose complement carries no mass.
    pub failure: Option<DyadicCube>,
}

impl CwCertificate {
    pub fn within_bound(&self) -> bool {
        self.failure.is_none() && self.worst_ratio <= self.c_w
    }

    /// The bound is only claimed when `ε` is certified.
    pub fn holds(&self) -> bool {
        !self.epsilon_certified || self.within_bound()
    }
}

pub fn cw_certificate(w: &Weight, family: &SparseFamily, params: &WSparseParams) -> Result<CwCertificate> {
    let g = w.grid();
    if family.grid() != g {
        return Err(Error::Invalid("family and weight live on different grids".into()));
    }
    let masses = w.morton_cell_masses();
    let mut worst = 1.0f64;
    let mut failure = None;
    for k in 0..family.depth() {
        let (inner, _) = merge_intervals(&morton_intervals(&g, family.level(k + 1)));
        for q in family.level(k) {
            let r = g.morton_range(q);
            let mut free = 0.0;
            let mut pos = r.start;
            let first = inner.partition_point(|iv| iv.1 <= r.start);
            for &(s, e) in inner[first..].iter().take_while(|iv| iv.0 < r.end) {
                free += masses[pos..s.max(pos)].iter().sum::<f64>();
                pos = pos.max(e);
            }
            free += masses[pos.min(r.end)..r.end].iter().sum::<f64>();
            let total = w.masses().get(&g, q);
            if free > 0.0 {
                worst = worst.max(total / free);
            } else if failure.is_none() {
                failure = Some(*q);
                worst = f64::INFINITY;
            }
        }
    }
    let epsilon = reverse_holder_epsilon(w);
    Ok(CwCertificate {
        worst_ratio: worst,
        c_w: params.c_w,
        epsilon,
        epsilon_certified: epsilon >= params.epsilon,
        failure,
    })
}

/// Growth of `w` along dyadic ancestor chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AncestorGrowth {
    pub epsilon: f64,
    pub l_w: u32,
    pub alpha_w: f64,
    /// `α_w ≤ 1`: the growth statement is empty.
    pub degenerate: bool,
    /// `min (w(Q^{(L_w)}) / w(Q) − α_w)` over cubes with an `L_w`-th
    /// ancestor; `None` when the grid is too shallow.
    pub worst_slack: Option<f64>,
}

/// `L_w` is the smallest integer above `(1 + 1/ε)/dim` and
/// `α_w = 2^{dim L_w ε/(1+ε) − 1}`, with `ε` the reverse Hölder exponent.
pub fn ancestor_growth_certificate(w: &Weight) -> AncestorGrowth {
    let g = w.grid();
    let dim = g.dim();
    let epsilon = reverse_holder_epsilon(w);
    let x = (1.0 + 1.0 / epsilon) / dim as f64;
    let l_w = if x >= u32::MAX as f64 { u32::MAX } else { x.floor() as u32 + 1 };
    let alpha_w = (dim as f64 * l_w as f64 * epsilon / (1.0 + epsilon) - 1.0).exp2();
    let worst_slack = (l_w <= g.depth()).then(|| {
        (l_w..=g.depth())
            .flat_map(|l| {
                let fine = w.masses().level(l);
                let coarse = w.masses().level(l - l_w);
                let shift = dim * l_w;
                fine.iter().enumerate().map(move |(m, v)| coarse[m >> shift] / v)
            })
            .fold(f64::INFINITY, f64::min)
            - alpha_w
    });
    AncestorGrowth { epsilon, l_w, alpha_w, degenerate: alpha_w <= 1.0, worst_slack }
}

/// `Σ_{k,j} ω_λ(f; Q^k_j) χ_{Q^k_j}`.
pub fn sparse_oscillation_sum(f: &GridFunction, family: &SparseFamily, lambda: f64) -> Result<GridFunction> {
    let g = f.grid();
    if family.grid() != g {
        return Err(Error::Invalid("family and function live on different grids".into()));
    }
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Domain(format!("λ must lie in (0, 1/2), got {lambda}")));
    }
    let mut out = vec![0.0; g.cell_count()];
    for (_, q) in family.cubes() {
        let w = oscillation(f, q, lambda);
        for c in g.cells(q) {
            out[c] += w;
        }
    }
    GridFunction::new(g, out)
}

/// Median decomposition `f − m_f(Q₀) = g + Σ α_Q χ_Q` over a sparse family.
#[derive(Debug, Clone)]
pub struct LernerDecomposition {
    pub base: DyadicCube,
    pub lambda: f64,
    /// Lower median `m_f(Q₀)`.
    pub median: f64,
    /// Level 0 is `{Q₀}`; level `k` holds the cubes selected inside level
    /// `k − 1`. Sparsity is `2^{dim+2} λ`.
    pub family: SparseFamily,
    /// `α_Q = m_f(Q) − m_f(P)` with `P` the generating cube one level up.
    pub alphas: BTreeMap<DyadicCube, f64>,
    /// Stopping threshold `t` used inside each generating cube.
    pub thresholds: BTreeMap<DyadicCube, f64>,
    /// Sum of the pieces `(f − m_f(P)) χ_{P ∖ Ω(P)}`; zero off `Q₀`.
    pub g: GridFunction,
    /// `max |f − m₀ − g − Σ α_Q χ_Q|` over `Q₀`.
    pub residual_max: f64,
}

impl LernerDecomposition {
    /// `m₀ + g + Σ α_Q χ_Q` on `Q₀`, zero elsewhere.
    pub fn reconstruction(&self) -> GridFunction {
        let grid = self.g.grid();
        let mut v = self.g.values().to_vec();
        for c in grid.cells(&self.base) {
            v[c] += self.median;
        }
        for (q, a) in &self.alphas {
            for c in grid.cells(q) {
                v[c] += a;
            }
        }
        GridFunction::new(grid, v).expect("finite terms")
    }

    /// `Σ_j |Q^k_j|` for every level.
    pub fn level_measures(&self) -> Vec<f64> {
        (0..self.family.depth()).map(|k| self.family.level_measure(k)).collect()
    }
}

struct Step {
    median: f64,
    threshold: f64,
    /// `f − m` off the selected cubes, 0 on them; local Morton order.
    residual: Vec<f64>,
    selected: Vec<(DyadicCube, f64)>,
}

/// One stopping step inside `gen`, whose values arrive in Morton order.
fn lerner_step(grid: &DyadicGrid, gen: &DyadicCube, block: &[f64], lambda: f64) -> Step {
    let dim = grid.dim();
    let depth = grid.depth() - gen.level;
    let mut sorted = block.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = median_sorted(&sorted);
    let f1: Vec<f64> = block.iter().map(|v| v - median).collect();
    let mut mags: Vec<f64> = f1.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let threshold = rearrangement_desc(&mags, cell_count_for(lambda * block.len() as f64, 1.0));

    let base = grid.morton(gen);
    let mut medians: Vec<Vec<f64>> = (0..=depth).map(|r| vec![0.0; 1usize << (dim * r)]).collect();
    for_each_sorted_cube(grid, gen, f1.clone(), |v| *v, |cube, s| {
        let r = cube.level - gen.level;
        let local = grid.morton(&cube) - (base << (dim * r));
        medians[r as usize][local] = median_sorted(s);
    });

    let mut residual = f1;
    let mut selected = Vec::new();
    let b = 1usize << dim;
    let mut covered = vec![false];
    for r in 1..depth {
        let len = 1usize << (dim * (depth - r));
        let cov: Vec<bool> = (0..1usize << (dim * r))
            .map(|c| {
                if covered[c >> dim] {
                    return true;
                }
                let children = &medians[r as usize + 1][c * b..(c + 1) * b];
                let score = children.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                if score > threshold {
                    let cube = grid.cube_from_morton(gen.level + r, (base << (dim * r)) + c);
                    selected.push((cube, medians[r as usize][c]));
                    residual[c * len..(c + 1) * len].fill(0.0);
                    true
                } else {
                    false
                }
            })
            .collect();
        covered = cov;
    }
    Step { median, threshold, residual, selected }
}

/// Iterated median decomposition of `f` on `Q₀` with parameter
/// `0 < λ ≤ 2^{−dim−2}`.
///
/// Inside each generating cube `P` with `f₁ = f − m_f(P)`, the selected
/// cubes are the maximal strict subcubes having a child `R` with
/// `|m_{f₁}(R)| > (f₁ χ_P)*(λ|P|)`. Each selected cube generates the next
/// level. The recursion stops on its own once no cube qualifies.
pub fn lerner_decompose(f: &GridFunction, q0: &DyadicCube, lambda: f64) -> Result<LernerDecomposition> {
    let g = f.grid();
    if !g.is_valid(q0) {
        return Err(Error::Invalid(format!("cube {q0:?} is not on the grid")));
    }
    let top = lerner_lambda(g.dim());
    if !(lambda > 0.0 && lambda <= top) {
        return Err(Error::Domain(format!("λ must lie in (0, {top}], got {lambda}")));
    }
    let dim = g.dim();
    let vals = morton_block(f, q0);
    let base = g.morton(q0);
    let local_range = |q: &DyadicCube| {
        let len = 1usize << (dim * (g.depth() - q.level));
        let start = (g.morton(q) - (base << (dim * (q.level - q0.level)))) * len;
        start..start + len
    };

    let mut levels = vec![vec![*q0]];
    let mut alphas = BTreeMap::new();
    let mut thresholds = BTreeMap::new();
    let mut gvals = vec![0.0; vals.len()];
    let mut median = 0.0;
    loop {
        let gens = levels.last().expect("level 0 exists");
        let steps: Vec<Step> =
            gens.par_iter().map(|p| lerner_step(&g, p, &vals[local_range(p)], lambda)).collect();
        let mut next = Vec::new();
        for (p, step) in gens.iter().zip(steps) {
            if p == q0 {
                median = step.median;
            }
            thresholds.insert(*p, step.threshold);
            gvals[local_range(p)].copy_from_slice(&step.residual);
            for (q, a) in step.selected {
                alphas.insert(q, a);
                next.push(q);
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_by_key(|q| local_range(q).start);
        levels.push(next);
    }

    let mut acc = gvals.clone();
    for (q, a) in &alphas {
        for v in &mut acc[local_range(q)] {
            *v += a;
        }
    }
    let residual_max =
        vals.iter().zip(&acc).map(|(v, r)| (v - median - r).abs()).fold(0.0, f64::max);
    let sparsity = lambda * (dim as f64 + 2.0).exp2();
    Ok(LernerDecomposition {
        base: *q0,
        lambda,
        median,
        family: SparseFamily::new(g, levels, sparsity)?,
        alphas,
        thresholds,
        g: scatter(g, q0, &gvals),
        residual_max,
    })
}

/// Margins of the pointwise and per-level bounds of a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LernerCertificate {
    /// `min (4 M♯f + 2 Σ ω χ − |f − m₀|)` over `Q₀`.
    pub pointwise_slack: f64,
    /// `min (2 M♯f − |g|)` over `Q₀`.
    pub g_slack: f64,
    /// `min (2 ω_λ(f; P) − |α_Q|)` with `P` the generator of `Q`.
    pub alpha_slack: f64,
    pub level_measures: Vec<f64>,
    /// `(2^{dim+2} λ)^k |Q₀|`.
    pub level_bounds: Vec<f64>,
    pub residual_max: f64,
}

impl LernerCertificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.pointwise_slack >= -tol
            && self.g_slack >= -tol
            && self.alpha_slack >= -tol
            && self.residual_max <= tol
            && self.level_measures.iter().zip(&self.level_bounds).all(|(m, b)| *m <= *b)
    }
}

/// Replays the decomposition's bounds against `M♯_{λ;Q₀}` and the
/// oscillations of the family cubes.
pub fn lerner_certificate(f: &GridFunction, dec: &LernerDecomposition) -> Result<LernerCertificate> {
    let g = f.grid();
    let q0 = dec.base;
    let dim = g.dim();
    let sharp = local_sharp(f, &q0, dec.lambda)?;
    let pyramid = oscillation_pyramid(f, &q0, dec.lambda);
    let omega = |q: &DyadicCube| {
        let r = q.level - q0.level;
        pyramid[r as usize][g.morton(q) - (g.morton(&q0) << (dim * r))]
    };
    let mut sum = vec![0.0; g.cell_count()];
    for (_, q) in dec.family.cubes() {
        let w = omega(q);
        for c in g.cells(q) {
            sum[c] += w;
        }
    }
    let mut pointwise = f64::INFINITY;
    let mut g_slack = f64::INFINITY;
    for c in g.cells(&q0) {
        let m = sharp.value(c);
        pointwise = pointwise.min(4.0 * m + 2.0 * sum[c] - (f.value(c) - dec.median).abs());
        g_slack = g_slack.min(2.0 * m - dec.g.value(c).abs());
    }
    let mut alpha_slack = f64::INFINITY;
    for k in 1..dec.family.depth() {
        let parents: HashSet<DyadicCube> = dec.family.level(k - 1).iter().copied().collect();
        for q in dec.family.level(k) {
            let parent = (1..=q.level - q0.level)
                .filter_map(|i| q.ancestor(i))
                .find(|p| parents.contains(p))
                .ok_or_else(|| Error::Validation(format!("cube {q:?} has no generator")))?;
            alpha_slack = alpha_slack.min(2.0 * omega(&parent) - dec.alphas[q].abs());
        }
    }
    let ratio = dec.family.sparsity();
    let level_measures = dec.level_measures();
    let level_bounds =
        (0..level_measures.len()).map(|k| ratio.powi(k as i32) * g.volume(&q0)).collect();
    Ok(LernerCertificate {
        pointwise_slack: pointwise,
        g_slack,
        alpha_slack,
        level_measures,
        level_bounds,
        residual_max: dec.residual_max,
    })
}
