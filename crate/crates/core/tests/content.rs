mod common;

use common::{cells_by_geometry, grid, rel_close};
use morreylab::content::{candidate_b_power, choquet_integral, hausdorff_content, power_candidate_beta};
use morreylab::morrey::{morrey_norm, MorreyParams};
use morreylab::{CellSet, DyadicGrid, GridFunction, Weight};
use proptest::prelude::*;

/// Cell masks and `ℓ(Q)^α` of every cube, for grids with at most 64 cells.
fn cube_table(g: &DyadicGrid, alpha: f64) -> Vec<(u64, f64)> {
    g.cubes()
        .map(|q| {
            let mask = cells_by_geometry(g, &q).iter().fold(0u64, |m, &c| m | 1 << c);
            (mask, g.side(&q).powf(alpha))
        })
        .collect()
}

/// Minimum cost over every subset of grid cubes covering `target`.
fn content_oracle(table: &[(u64, f64)], target: u64) -> f64 {
    let n = table.len();
    assert!(n <= 21);
    let mut best = f64::INFINITY;
    let mut cover = vec![0u64; 1 << n];
    let mut cost = vec![0.0f64; 1 << n];
    for s in 1usize..1 << n {
        let i = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        cover[s] = cover[rest] | table[i].0;
        cost[s] = cost[rest] + table[i].1;
        if cover[s] & target == target {
            best = best.min(cost[s]);
        }
    }
    if target == 0 {
        0.0
    } else {
        best
    }
}

fn small_grid() -> impl Strategy<Value = DyadicGrid> {
    prop_oneof![Just(grid(1, 3)), Just(grid(2, 2)), Just(grid(2, 1))]
}

fn mask_of(set: &CellSet) -> u64 {
    set.iter().fold(0u64, |m, c| m | 1 << c)
}

fn arb_set(g: DyadicGrid) -> impl Strategy<Value = CellSet> {
    prop::collection::vec(any::<bool>(), g.cell_count()).prop_map(move |m| CellSet::from_mask(g, m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn content_matches_cover_enumeration((g, e) in small_grid().prop_flat_map(|g| (Just(g), arb_set(g))), t in 0.05f64..1.0) {
        let alpha = t * f64::from(g.dim());
        let table = cube_table(&g, alpha);
        let want = content_oracle(&table, mask_of(&e));
        prop_assert!(rel_close(hausdorff_content(&e, alpha).unwrap(), want, 1e-12));
    }
}

proptest! {
    #[test]
    fn content_is_monotone_and_subadditive(
        (a, b) in (1u32..=2).prop_flat_map(|d| {
            let g = grid(d, 8 / d);
            (arb_set(g), arb_set(g))
        }),
        t in 0.05f64..1.0,
    ) {
        let alpha = t * f64::from(a.grid().dim());
        let h = |s: &CellSet| hausdorff_content(s, alpha).unwrap();
        let u = a.union(&b);
        prop_assert!(h(&a.intersection(&b)) <= h(&a) * (1.0 + 1e-12));
        prop_assert!(h(&a) <= h(&u) * (1.0 + 1e-12));
        prop_assert!(h(&u) <= (h(&a) + h(&b)) * (1.0 + 1e-12));
    }

    #[test]
    fn choquet_is_a_layer_integral(v in prop::collection::vec(0u8..5, 16), c in 0.1f64..4.0, t in 0.05f64..1.0) {
        let g = grid(1, 4);
        let phi = GridFunction::new(g, v.iter().map(|&x| f64::from(x)).collect()).unwrap();
        // ∫ φ dH = Σ_{t ≥ 1} H({φ ≥ t}) for integer values
        let want: f64 = (1..5u8)
            .map(|s| hausdorff_content(&CellSet::from_cells(g, (0..16).filter(|&i| v[i] >= s)).unwrap(), t).unwrap())
            .sum();
        let got = choquet_integral(&phi, t).unwrap();
        prop_assert!(rel_close(got, want, 1e-12) || (got == 0.0 && want == 0.0));
        prop_assert!(rel_close(choquet_integral(&phi.scale(c), t).unwrap(), c * got, 1e-12) || got == 0.0);
        let bigger = phi.map(|x| x + 0.5);
        prop_assert!(choquet_integral(&bigger, t).unwrap() >= got);
    }

    #[test]
    fn morrey_choquet_duality(f in common::arb_function(8), phi in prop::collection::vec(0.0f64..3.0, 256), (q, p) in (1.0f64..3.0, 1.2f64..4.0).prop_map(|(q, r)| (q, q * r))) {
        let g = f.grid();
        let phi = GridFunction::new(g, phi[..g.cell_count()].to_vec()).unwrap();
        let lhs: f64 = f.values().iter().zip(phi.values()).map(|(v, w)| v.abs().powf(q) * w).sum::<f64>() * g.cell_volume();
        let norm = morrey_norm(&f, &MorreyParams::samko(p, q, &Weight::lebesgue(g)).unwrap());
        let dim = f64::from(g.dim());
        let rhs = norm.powf(q) * choquet_integral(&phi, dim * (1.0 - q / p)).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10), "{} > {}", lhs, rhs);
    }
}

#[test]
fn power_candidates_are_normalized() {
    let g = DyadicGrid::new(1, 3, 10).unwrap();
    for alpha in [-0.5, 0.0, 0.7] {
        let c = candidate_b_power(g, &g.root(), 4.0, 2.0, alpha).unwrap();
        assert!(c.choquet <= 1.0 + 1e-12);
        assert!(c.a1_const.is_finite() && c.a1_const >= 1.0);
        assert!(c.b.values().iter().all(|&v| v > 0.0));
    }
    assert!(power_candidate_beta(4.0, 2.0, 3.0, 1).is_err());
    assert!(candidate_b_power(grid(2, 3), &grid(2, 3).root(), 4.0, 2.0, 0.0).is_err());
}

#[test]
fn invalid_dimensions_are_rejected() {
    let g = grid(1, 3);
    let phi = GridFunction::constant(g, 1.0);
    assert!(choquet_integral(&phi, 0.0).is_err());
    assert!(choquet_integral(&phi, 1.5).is_err());
    assert!(choquet_integral(&phi.scale(-1.0), 0.5).is_err());
}
