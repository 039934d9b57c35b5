mod common;

use common::{arb_function, cells_by_geometry, pick_cube};
use morreylab::rearrange::{median, oscillation, rearrangement_at};
use morreylab::{DyadicCube, GridFunction};
use proptest::prelude::*;

fn cube_values(f: &GridFunction, q: &DyadicCube) -> Vec<f64> {
    cells_by_geometry(&f.grid(), q).into_iter().map(|c| f.value(c)).collect()
}

/// Smallest candidate `ρ ∈ {0} ∪ |values|` leaving at most `k` values above.
fn rearrangement_oracle(values: &[f64], k: usize) -> f64 {
    let mut candidates: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    candidates.push(0.0);
    candidates
        .into_iter()
        .filter(|&r| values.iter().filter(|v| v.abs() > r).count() <= k)
        .fold(f64::INFINITY, f64::min)
}

/// `min_c` of the rearrangement of `values − c`, over all pair midpoints.
fn oscillation_oracle(values: &[f64], k: usize) -> f64 {
    let mut best = f64::INFINITY;
    for a in values {
        for b in values {
            let c = 0.5 * (a + b);
            let shifted: Vec<f64> = values.iter().map(|v| v - c).collect();
            best = best.min(rearrangement_oracle(&shifted, k));
        }
    }
    best
}

proptest! {
    #[test]
    fn rearrangement_matches_oracle(f in arb_function(8), a in any::<u64>(), b in any::<u64>(), u in 0.1f64..0.9) {
        let g = f.grid();
        let q = pick_cube(&g, a, b);
        let vals = cube_values(&f, &q);
        let vol = g.cell_volume();
        for k in 0..=vals.len() {
            let exact = rearrangement_at(&f, &q, k as f64 * vol);
            prop_assert_eq!(exact, rearrangement_oracle(&vals, k));
            let between = rearrangement_at(&f, &q, (k as f64 + u) * vol);
            prop_assert_eq!(between, rearrangement_oracle(&vals, k));
        }
    }

    #[test]
    fn rearrangement_is_nonincreasing(f in arb_function(10), a in any::<u64>(), b in any::<u64>(), mut ts in prop::collection::vec(0.0f64..1.0, 2..20)) {
        let g = f.grid();
        let q = pick_cube(&g, a, b);
        ts.sort_by(f64::total_cmp);
        let vol = g.volume(&q);
        let vals: Vec<f64> = ts.iter().map(|t| rearrangement_at(&f, &q, t * vol)).collect();
        prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn median_splits_the_cube(f in arb_function(10), a in any::<u64>(), b in any::<u64>()) {
        let g = f.grid();
        let q = pick_cube(&g, a, b);
        let vals = cube_values(&f, &q);
        let m = median(&f, &q);
        prop_assert!(vals.contains(&m));
        let n = vals.len();
        prop_assert!(2 * vals.iter().filter(|&&v| v > m).count() <= n);
        prop_assert!(2 * vals.iter().filter(|&&v| v < m).count() <= n);
        // lower median: nothing smaller also splits
        prop_assert!(vals.iter().filter(|&&v| v < m).all(|&v| 2 * vals.iter().filter(|&&x| x > v).count() > n));
    }

    #[test]
    fn oscillation_matches_oracle(f in arb_function(6), a in any::<u64>(), b in any::<u64>(), lambda in 0.01f64..0.49) {
        let g = f.grid();
        let q = pick_cube(&g, a, b);
        let vals = cube_values(&f, &q);
        let k = (lambda * vals.len() as f64 + 1e-9).floor() as usize;
        let got = oscillation(&f, &q, lambda);
        let want = oscillation_oracle(&vals, k);
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn median_and_oscillation_sandwich(f in arb_function(10), a in any::<u64>(), b in any::<u64>(), lambda in 0.001f64..0.4999) {
        let g = f.grid();
        let q = pick_cube(&g, a, b);
        let t = lambda * g.volume(&q);
        let m = median(&f, &q);
        prop_assert!(m.abs() <= rearrangement_at(&f, &q, t));
        let omega = oscillation(&f, &q, lambda);
        let centered = rearrangement_at(&f.map(|v| v - m), &q, t);
        prop_assert!(omega <= centered);
        prop_assert!(centered <= 2.0 * omega);
    }

    #[test]
    fn oscillation_ignores_constants_and_scales(f in arb_function(8), a in any::<u64>(), b in any::<u64>(), c in -100.0f64..100.0, s in -8.0f64..8.0, lambda in 0.01f64..0.49) {
        let g = f.grid();
        let q = pick_cube(&g, a, b);
        let w = oscillation(&f, &q, lambda);
        let shifted = oscillation(&f.map(|v| v + c), &q, lambda);
        let tol = 1e-12 * (w + c.abs()).max(1.0) * 8.0;
        prop_assert!((shifted - w).abs() <= tol, "{} vs {}", shifted, w);
        let scaled = oscillation(&f.scale(s), &q, lambda);
        prop_assert!((scaled - s.abs() * w).abs() <= 1e-12 * (s.abs() * w).max(1.0));
    }
}
