mod common;

use common::{arb_values, grid};
use morreylab::singular::{bmo_norm, commutator, hilbert, riesz, weighted_bmo_ratio, CZKernelSpec, Operator};
use morreylab::{DyadicGrid, GridFunction, Weight};
use proptest::prelude::*;

fn line(depth: u32) -> impl Strategy<Value = (GridFunction, GridFunction)> {
    let g = grid(1, depth);
    (arb_values(g.cell_count()), arb_values(g.cell_count()))
        .prop_map(move |(a, b)| (GridFunction::new(g, a).unwrap(), GridFunction::new(g, b).unwrap()))
}

proptest! {
    #[test]
    fn hilbert_of_interval_matches_closed_form(depth in 3u32..11, a in any::<u64>(), len in any::<u64>()) {
        let g = grid(1, depth);
        let n = g.cell_count() as u64;
        let start = (a % n) as usize;
        let end = start + 1 + (len % (n - start as u64)) as usize;
        let chi = GridFunction::from_cell_fn(g, |c| if (start..end).contains(&c) { 1.0 } else { 0.0 });
        let h = hilbert(&chi).unwrap();
        let origin = -0.5 * g.root_side();
        let (xa, xb) = (origin + start as f64 * g.cell_side(), origin + end as f64 * g.cell_side());
        for c in (0..start).chain(end..g.cell_count()) {
            let x = g.cell_center(c)[0];
            let want = ((x - xa) / (x - xb)).abs().ln();
            prop_assert!((h.value(c) - want).abs() <= 1e-12, "cell {}: {} vs {}", c, h.value(c), want);
        }
    }

    #[test]
    fn hilbert_is_antisymmetric((f, g) in line(8)) {
        let lhs = f.inner(&hilbert(&g).unwrap());
        let rhs = -g.inner(&hilbert(&f).unwrap());
        let scale: f64 = f.abs().inner(&hilbert(&g).unwrap().abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn commutator_with_constant_vanishes((f, _) in line(7), c in -5.0f64..5.0) {
        let b = GridFunction::constant(f.grid(), c);
        let out = commutator(&b, Operator::Hilbert, &f).unwrap();
        let scale = hilbert(&f).unwrap().max_abs().max(1.0) * c.abs().max(1.0);
        prop_assert!(out.max_abs() <= 1e-12 * scale);
    }
}

#[test]
fn riesz_is_odd_on_even_functions() {
    let g = grid(2, 4);
    let f = GridFunction::from_center_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
    let r = riesz(&f, 1).unwrap();
    let n = g.cells_per_axis();
    for i in 0..n {
        for j in 0..n {
            let a = r.value(g.cell_id([i, j]));
            let b = r.value(g.cell_id([n - 1 - i, j]));
            assert!((a + b).abs() <= 1e-9 * a.abs().max(1e-6), "({i},{j}): {a} vs {b}");
        }
    }
    assert!(riesz(&f, 0).is_err());
    assert!(riesz(&f, 3).is_err());
}

#[test]
fn riesz_commutator_with_constant_vanishes() {
    let g = grid(2, 3);
    let f = GridFunction::from_cell_fn(g, |c| (c % 7) as f64 - 3.0);
    let b = GridFunction::constant(g, 2.5);
    let out = commutator(&b, Operator::Riesz(2), &f).unwrap();
    assert!(out.max_abs() <= 1e-12 * riesz(&f, 2).unwrap().max_abs().max(1.0) * 2.5);
}

#[test]
fn kernel_specs_validate() {
    let g = grid(1, 6);
    assert!(CZKernelSpec::hilbert_kernel().validate(&g).is_ok());
    let g2 = grid(2, 4);
    assert!(CZKernelSpec::riesz_kernel(1).unwrap().validate(&g2).is_ok());
}

/// `max(log|x|, log h)` sampled at cell centers.
fn clamped_log(g: DyadicGrid) -> GridFunction {
    let h = g.cell_side();
    GridFunction::from_center_fn(g, |x| x[0].abs().max(h).ln())
}

#[test]
fn bmo_of_log_is_bounded_across_depths() {
    let norms: Vec<f64> = (6..=12).map(|l| bmo_norm(&clamped_log(grid(1, l)))).collect();
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = norms.iter().copied().fold(0.0, f64::max);
    assert!(lo > 0.0 && hi / lo < 1.25, "{norms:?}");
}

#[test]
fn weighted_bmo_ratio_is_zero_for_constants() {
    let g = grid(1, 5);
    let w = Weight::power(g, 0.5).unwrap();
    assert_eq!(weighted_bmo_ratio(&GridFunction::constant(g, 3.0), &w, 2.0).unwrap(), 0.0);
    let r = weighted_bmo_ratio(&clamped_log(g), &Weight::lebesgue(g), 1.0).unwrap();
    assert!((r - 1.0).abs() < 1e-12);
}
