//! Decreasing rearrangement, medians and local mean oscillation on cubes.
//!
//! Every cell of a grid has the same volume, so all three quantities reduce
//! to order statistics of the cell values inside a cube. A measure `t` is
//! converted to a cell count with `floor(t / cell_volume)`; a tiny guard
//! absorbs the rounding of `t` when it is an exact multiple.
//!
//! ```
//! use morreylab::{rearrange, DyadicGrid, GridFunction};
//!
//! let grid = DyadicGrid::new(1, 2, 2).unwrap();
//! let f = GridFunction::new(grid, vec![3.0, 1.0, 2.0, 5.0]).unwrap();
//! let root = grid.root();
//! assert_eq!(rearrange::rearrangement_at(&f, &root, 1.2), 3.0);
//! assert_eq!(rearrange::median(&f, &root), 2.0);
//! ```

use crate::dyadic::{DyadicCube, DyadicGrid, GridFunction};

const COUNT_GUARD: f64 = 1e-9;

/// Number of whole cells covered by measure `t`.
pub(crate) fn cell_count_for(t: f64, cell_volume: f64) -> usize {
    let k = (t / cell_volume + COUNT_GUARD).floor();
    if k <= 0.0 {
        0
    } else if k >= usize::MAX as f64 {
        usize::MAX
    } else {
        k as usize
    }
}

/// `f*(t)` of `f χ_Q`: the smallest `ρ ≥ 0` with `|{x ∈ Q : |f(x)| > ρ}| ≤ t`.
pub fn rearrangement_at(f: &GridFunction, q: &DyadicCube, t: f64) -> f64 {
    let mut a: Vec<f64> = f.cube_values(q).into_iter().map(f64::abs).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    rearrangement_desc(&a, cell_count_for(t.max(0.0), f.grid().cell_volume()))
}

/// The `k`-th largest entry (0-based) of values sorted in decreasing order,
/// or 0 when fewer than `k + 1` values exist.
pub(crate) fn rearrangement_desc(sorted_desc: &[f64], k: usize) -> f64 {
    sorted_desc.get(k).copied().unwrap_or(0.0).max(0.0)
}

/// Lower median of `f` on `Q`.
pub fn median(f: &GridFunction, q: &DyadicCube) -> f64 {
    let mut v = f.cube_values(q);
    v.sort_by(f64::total_cmp);
    median_sorted(&v)
}

/// Lower median of values sorted in increasing order.
pub(crate) fn median_sorted(sorted: &[f64]) -> f64 {
    sorted[(sorted.len() - 1) / 2]
}

/// `ω_λ(f; Q) = inf_c ((f − c) χ_Q)*(λ|Q|)`.
///
/// # Panics
///
/// Panics unless `0 < λ < 1/2`.
pub fn oscillation(f: &GridFunction, q: &DyadicCube, lambda: f64) -> f64 {
    assert!(lambda > 0.0 && lambda < 0.5, "oscillation needs 0 < λ < 1/2, got {lambda}");
    let mut v = f.cube_values(q);
    v.sort_by(f64::total_cmp);
    oscillation_sorted(&v, lambda)
}

/// Oscillation of equally weighted values sorted in increasing order.
///
/// With `k = floor(λ m)` values allowed outside, the optimal center sits in
/// the middle of the narrowest window holding `m − k` consecutive values.
pub(crate) fn oscillation_sorted(sorted: &[f64], lambda: f64) -> f64 {
    let m = sorted.len();
    let k = cell_count_for(lambda * m as f64, 1.0);
    if k >= m {
        return 0.0;
    }
    let width = m - k;
    (0..=k)
        .map(|i| sorted[i + width - 1] - sorted[i])
        .fold(f64::INFINITY, f64::min)
        * 0.5
}

/// Visits every cube of `D(q0)` from the finest level up, handing the
/// visitor the items of that cube sorted by `key`.
///
/// `items` holds one entry per cell of `q0` in Morton order. Blocks are
/// merged pairwise, so the whole sweep costs `O(|q0| · levels)`.
pub(crate) fn for_each_sorted_cube<T: Copy>(
    grid: &DyadicGrid,
    q0: &DyadicCube,
    items: Vec<T>,
    key: impl Fn(&T) -> f64,
    mut visit: impl FnMut(DyadicCube, &[T]),
) {
    let dim = grid.dim();
    let depth = grid.depth();
    let base = grid.morton(q0);
    debug_assert_eq!(items.len(), 1usize << (dim * (depth - q0.level)));
    let mut cur = items;
    let mut next = cur.clone();
    let mut block = 1usize;
    let mut level = depth;
    loop {
        let offset = base << (dim * (level - q0.level));
        for (j, chunk) in cur.chunks(block).enumerate() {
            visit(grid.cube_from_morton(level, offset + j), chunk);
        }
        if level == q0.level {
            break;
        }
        for _ in 0..dim {
            for (pair, out) in cur.chunks(2 * block).zip(next.chunks_mut(2 * block)) {
                merge(&pair[..block], &pair[block..], out, &key);
            }
            std::mem::swap(&mut cur, &mut next);
            block *= 2;
        }
        level -= 1;
    }
}

fn merge<T: Copy>(a: &[T], b: &[T], out: &mut [T], key: &impl Fn(&T) -> f64) {
    let (mut i, mut j) = (0, 0);
    for slot in out.iter_mut() {
        if j >= b.len() || (i < a.len() && key(&a[i]).total_cmp(&key(&b[j])).is_le()) {
            *slot = a[i];
            i += 1;
        } else {
            *slot = b[j];
            j += 1;
        }
    }
}

/// Morton-ordered values of `f` restricted to `q`.
pub(crate) fn morton_block(f: &GridFunction, q: &DyadicCube) -> Vec<f64> {
    let g = f.grid();
    g.morton_range(q).map(|pos| f.value(g.morton_to_cell(pos))).collect()
}
