#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use morreylab::weights::RH_GRID;
use morreylab::{DyadicCube, DyadicGrid, GridFunction, Weight};
use proptest::prelude::*;
use rand::Rng;

pub fn grid(dim: u32, depth: u32) -> DyadicGrid {
    DyadicGrid::new(dim, 1, depth).unwrap()
}

/// Small grids in both dimensions.
pub fn arb_grid(max_cells_log2: u32) -> impl Strategy<Value = DyadicGrid> {
    (1u32..=2).prop_flat_map(move |dim| {
        (1..=max_cells_log2 / dim).prop_map(move |depth| grid(dim, depth))
    })
}

/// Values mixing a continuous range with a few repeated levels, so ties
/// and medians on plateaus get exercised.
pub fn arb_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![
            3 => -10.0f64..10.0,
            1 => prop::sample::select(vec![-1.0, 0.0, 0.5, 2.0]),
        ],
        n,
    )
}

pub fn arb_function(max_cells_log2: u32) -> impl Strategy<Value = GridFunction> {
    arb_grid(max_cells_log2)
        .prop_flat_map(|g| arb_values(g.cell_count()).prop_map(move |v| GridFunction::new(g, v).unwrap()))
}

pub fn arb_densities(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-4.0f64..4.0).prop_map(f64::exp2), n)
}

pub fn arb_weight(max_cells_log2: u32) -> impl Strategy<Value = Weight> {
    arb_grid(max_cells_log2)
        .prop_flat_map(|g| arb_densities(g.cell_count()).prop_map(move |d| Weight::from_density(g, d).unwrap()))
}

/// A cube of the grid chosen by two raw numbers.
pub fn pick_cube(g: &DyadicGrid, a: u64, b: u64) -> DyadicCube {
    let level = (a % u64::from(g.depth() + 1)) as u32;
    let m = (b % g.cube_count(level) as u64) as usize;
    g.cube_from_morton(level, m)
}

/// Random values of one of several shapes: uniform noise, a few large
/// spikes, a step function or a smooth bump.
pub fn random_function(rng: &mut impl Rng, g: DyadicGrid) -> GridFunction {
    let n = g.cell_count();
    let values: Vec<f64> = match rng.gen_range(0..4) {
        0 => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        1 => {
            let mut v = vec![0.0; n];
            for _ in 0..rng.gen_range(1..=4) {
                v[rng.gen_range(0..n)] = rng.gen_range(-50.0..50.0);
            }
            v
        }
        2 => {
            let cut = rng.gen_range(0..n);
            let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            (0..n).map(|i| if i < cut { a } else { b }).collect()
        }
        _ => {
            let c = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let s = rng.gen_range(0.05..1.0);
            (0..n)
                .map(|i| {
                    let x = g.cell_center(i);
                    let r2 = (x[0] - c[0]).powi(2) + if g.dim() == 2 { (x[1] - c[1]).powi(2) } else { 0.0 };
                    (-r2 / s).exp()
                })
                .collect()
        }
    };
    GridFunction::new(g, values).unwrap()
}

/// Random positive densities: log-uniform, a spike, or a power-like profile.
pub fn random_weight(rng: &mut impl Rng, g: DyadicGrid) -> Weight {
    let n = g.cell_count();
    let density: Vec<f64> = match rng.gen_range(0..3) {
        0 => (0..n).map(|_| rng.gen_range(-6.0f64..6.0).exp2()).collect(),
        1 => {
            let mut d = vec![1.0; n];
            for _ in 0..rng.gen_range(1..=3) {
                d[rng.gen_range(0..n)] = rng.gen_range(10.0..1e4);
            }
            d
        }
        _ => {
            let alpha = rng.gen_range(-0.9..2.0) * f64::from(g.dim());
            (0..n)
                .map(|i| {
                    let x = g.cell_center(i);
                    x[0].hypot(x[1]).powf(alpha)
                })
                .collect()
        }
    };
    Weight::from_density(g, density).unwrap()
}

/// All cells of a cube, by direct coordinate test rather than Morton ranges.
pub fn cells_by_geometry(g: &DyadicGrid, q: &DyadicCube) -> Vec<usize> {
    let shift = g.depth() - q.level;
    (0..g.cell_count())
        .filter(|&c| {
            let idx = g.cell_index(c);
            (idx[0] >> shift) as u32 == q.index[0] && (g.dim() == 1 || (idx[1] >> shift) as u32 == q.index[1])
        })
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Average of a weight on a cube from its densities.
pub fn direct_average(w: &Weight, q: &DyadicCube) -> f64 {
    let cells = cells_by_geometry(&w.grid(), q);
    cells.iter().map(|&c| w.density()[c]).sum::<f64>() / cells.len() as f64
}

/// The cube at `level` holding `cell`, from its axis indices.
pub fn container(g: &DyadicGrid, cell: usize, level: u32) -> DyadicCube {
    let idx = g.cell_index(cell);
    let shift = g.depth() - level;
    DyadicCube { level, index: [(idx[0] >> shift) as u32, (idx[1] >> shift) as u32] }
}

/// Density sums of every cube, accumulated cell by cell into ancestors.
pub fn direct_sums(w: &Weight) -> HashMap<DyadicCube, (f64, usize)> {
    let g = w.grid();
    let mut out: HashMap<DyadicCube, (f64, usize)> = HashMap::new();
    for c in 0..g.cell_count() {
        for level in 0..=g.depth() {
            let e = out.entry(container(&g, c, level)).or_insert((0.0, 0));
            e.0 += w.density()[c];
            e.1 += 1;
        }
    }
    out
}

/// Outcome of replaying a stopping-time family against a weight.
#[derive(Debug, Default)]
pub struct CzReplay {
    /// Selected cubes violating `a^k γ₀ < avg ≤ 2^dim a^k γ₀`.
    pub bound_violations: usize,
    /// Cubes `Q^k_j` with `|Ω_{k+1} ∩ Q^k_j| > (2^dim/a) |Q^k_j|`, decided
    /// on exact cell counts.
    pub packing_violations: usize,
    /// Cubes where the family and the brute-force selection disagree
    /// away from a float tie.
    pub selection_mismatches: usize,
    pub cubes: usize,
}

/// Recomputes every average of `D(q0)` from densities, selects the maximal
/// cubes above each threshold, and checks the family's bounds and packing
/// by counting cells. Averages within `tie_tol` relative of a threshold
/// count as ties and may fall on either side.
pub fn replay_cz(w: &Weight, q0: &DyadicCube, a: f64, levels: &[Vec<DyadicCube>], tie_tol: f64) -> CzReplay {
    let g = w.grid();
    let dim = g.dim();
    let sums = direct_sums(w);
    let avg = |q: &DyadicCube| {
        let (s, n) = sums[q];
        s / n as f64
    };
    let gamma0 = avg(q0);
    let sub: Vec<DyadicCube> = g.subcubes(*q0).collect();
    let tie = |x: f64, t: f64| (x - t).abs() <= tie_tol * t.abs();
    let mut out = CzReplay::default();
    for k in 1..=levels.len() {
        let tau = gamma0 * a.powi(k as i32);
        let empty = Vec::new();
        let level = levels.get(k).unwrap_or(&empty);
        for q in level {
            out.cubes += 1;
            let x = avg(q);
            let upper = f64::from(1u32 << dim) * tau;
            if !(x > tau || tie(x, tau)) || !(x <= upper || tie(x, upper)) {
                out.bound_violations += 1;
            }
        }
        let want: HashSet<DyadicCube> = sub
            .iter()
            .filter(|q| avg(q) > tau && (1..=q.level - q0.level).all(|m| avg(&q.ancestor(m).unwrap()) <= tau))
            .copied()
            .collect();
        let got: HashSet<DyadicCube> = level.iter().copied().collect();
        out.selection_mismatches += want.symmetric_difference(&got).filter(|q| !tie(avg(q), tau)).count();
    }
    for k in 0..levels.len().saturating_sub(1) {
        let outer: HashSet<DyadicCube> = levels[k].iter().copied().collect();
        let inner: HashSet<DyadicCube> = levels[k + 1].iter().copied().collect();
        let mut covered: HashMap<DyadicCube, usize> = HashMap::new();
        for c in 0..g.cell_count() {
            let in_inner = (0..=g.depth()).any(|l| inner.contains(&container(&g, c, l)));
            if !in_inner {
                continue;
            }
            if let Some(q) = (0..=g.depth()).map(|l| container(&g, c, l)).find(|q| outer.contains(q)) {
                *covered.entry(q).or_default() += 1;
            }
        }
        for q in &levels[k] {
            let cells = 1usize << (dim * (g.depth() - q.level));
            let inside = covered.get(q).copied().unwrap_or(0);
            // inside / cells <= 2^dim / a
            if inside as f64 * a > (cells << dim) as f64 {
                out.packing_violations += 1;
            }
        }
    }
    out
}

fn densities_on(w: &Weight, cells: &[usize]) -> Vec<f64> {
    cells.iter().map(|&c| w.density()[c]).collect()
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

pub fn aq_oracle(w: &Weight, q: f64) -> f64 {
    let g = w.grid();
    g.cubes()
        .map(|cube| {
            let d = densities_on(w, &cells_by_geometry(&g, &cube));
            let n = d.len();
            mean(d.iter().copied(), n) * mean(d.iter().map(|x| x.powf(-1.0 / (q - 1.0))), n).powf(q - 1.0)
        })
        .fold(0.0, f64::max)
}

pub fn a1_oracle(w: &Weight) -> f64 {
    let g = w.grid();
    let avgs: Vec<(Vec<usize>, f64)> = g
        .cubes()
        .map(|cube| {
            let cells = cells_by_geometry(&g, &cube);
            let avg = mean(cells.iter().map(|&c| w.density()[c]), cells.len());
            (cells, avg)
        })
        .collect();
    (0..g.cell_count())
        .map(|c| {
            let m = avgs.iter().filter(|(cells, _)| cells.contains(&c)).map(|(_, a)| *a).fold(0.0, f64::max);
            m / w.density()[c]
        })
        .fold(0.0, f64::max)
}

fn rh_holds_on(d: &[f64], eps: f64) -> bool {
    let n = d.len();
    let e = 1.0 + eps;
    mean(d.iter().map(|x| x.powf(e)), n).powf(1.0 / e) <= 2.0 * mean(d.iter().copied(), n)
}

/// Largest admissible `k / RH_GRID` per cube, then the minimum.
pub fn rh_oracle(w: &Weight) -> f64 {
    let g = w.grid();
    let at = |k: u32| f64::from(k) / f64::from(RH_GRID);
    let cubes: Vec<Vec<f64>> = g.cubes().map(|q| densities_on(w, &cells_by_geometry(&g, &q))).collect();
    let per_cube = |d: &Vec<f64>| {
        if rh_holds_on(d, 1.0) {
            return RH_GRID;
        }
        let (mut lo, mut hi) = (0u32, RH_GRID);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if rh_holds_on(d, at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let k = cubes.iter().map(per_cube).min().unwrap();
    if k > 0 {
        return at(k);
    }
    let mut eps = at(1);
    while eps > 2f64.powi(-60) {
        eps *= 0.5;
        if cubes.iter().all(|d| rh_holds_on(d, eps)) {
            return eps;
        }
    }
    2f64.powi(-60)
}
