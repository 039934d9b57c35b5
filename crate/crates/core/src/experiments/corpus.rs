use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicCube, DyadicGrid, GridFunction};

/// Test-function families. Random choices are drawn in physical
/// coordinates, so an item describes the same function at every depth up to
/// discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `χ_Q` for cubes touching the origin and for random cubes.
    Indicators,
    /// `|x|^{−γ n/p}` sampled at cell centers, `γ = 1, 0.9, …`.
    PowerCusps,
    /// Random `±1` on the cubes of depth 6 (or the finest depth if smaller).
    RandomSigns,
    /// `log |x − c|` with `c = 0` first and random depth-4 nodes after.
    BmoLogs,
    /// Indicators of single finest cells, the first one at the origin.
    Spikes,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::Indicators, Family::PowerCusps, Family::RandomSigns, Family::BmoLogs, Family::Spikes];

    fn tag(self) -> u64 {
        match self {
            Family::Indicators => 1,
            Family::PowerCusps => 2,
            Family::RandomSigns => 3,
            Family::BmoLogs => 4,
            Family::Spikes => 5,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Family::Indicators => "indicators",
            Family::PowerCusps => "power_cusps",
            Family::RandomSigns => "random_signs",
            Family::BmoLogs => "bmo_logs",
            Family::Spikes => "spikes",
        }
    }
}

const SIGN_DEPTH: u32 = 6;
const NODE_DEPTH: u32 = 4;
const MAX_RANDOM_LEVEL: u32 = 4;

/// A deterministic list of test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCorpus {
    pub family: Family,
    pub seed: u64,
    pub count: usize,
}

impl TestCorpus {
    /// The items on `grid`; cusps use the exponent `p`.
    pub fn generate(&self, grid: &DyadicGrid, p: f64) -> Vec<GridFunction> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ self.family.tag());
        (0..self.count).map(|i| self.item(grid, p, i, &mut rng)).collect()
    }

    fn item(&self, grid: &DyadicGrid, p: f64, i: usize, rng: &mut ChaCha8Rng) -> GridFunction {
        let g = *grid;
        let n = f64::from(g.dim());
        match self.family {
            Family::Indicators => {
                let cube = if i % 2 == 0 {
                    cube_containing(&g, (1 + i as u32 / 2).min(g.depth()), &origin_point(&g))
                } else {
                    let level = rng.gen_range(1..=MAX_RANDOM_LEVEL).min(g.depth());
                    cube_containing(&g, level, &random_point(&g, rng))
                };
                GridFunction::indicator_cube(g, &cube)
            }
            Family::PowerCusps => {
                let gamma = (1.0 - 0.1 * i as f64).max(0.1);
                GridFunction::from_cell_fn(g, |c| norm(&g.cell_center(c)).powf(-gamma * n / p))
            }
            Family::RandomSigns => {
                let depth = SIGN_DEPTH.min(g.depth());
                let signs: Vec<f64> = (0..1usize << (g.dim() * depth))
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                GridFunction::from_cell_fn(g, |c| {
                    let cube = g.cell_cube(c).ancestor(g.depth() - depth).expect("ancestor in range");
                    signs[g.morton(&cube)]
                })
            }
            Family::BmoLogs => {
                let c = if i == 0 { [0.0, 0.0] } else { random_node(&g, rng) };
                GridFunction::from_cell_fn(g, |cell| {
                    let x = g.cell_center(cell);
                    norm(&[x[0] - c[0], x[1] - c[1]]).ln()
                })
            }
            Family::Spikes => {
                let point = if i == 0 { origin_point(&g) } else { random_point(&g, rng) };
                GridFunction::indicator_cube(g, &cube_containing(&g, g.depth(), &point))
            }
        }
    }
}

fn norm(x: &[f64; 2]) -> f64 {
    x[0].hypot(x[1])
}

/// A point just inside the cell whose lower corner is the origin.
pub(crate) fn origin_point(g: &DyadicGrid) -> [f64; 2] {
    let eps = 0.25 * g.cell_side();
    if g.dim() == 1 {
        [eps, 0.0]
    } else {
        [eps, eps]
    }
}

fn random_point(g: &DyadicGrid, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let half = 0.5 * g.root_side();
    let x = rng.gen_range(-half..half);
    let y = rng.gen_range(-half..half);
    if g.dim() == 1 {
        [x, 0.0]
    } else {
        [x, y]
    }
}

/// A random vertex of the depth-4 subdivision, never on a cell center.
/// Coarser grids snap it down to one of their own cell corners.
fn random_node(g: &DyadicGrid, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let k = 1u32 << NODE_DEPTH;
    let snap = NODE_DEPTH.saturating_sub(g.depth());
    let step = g.root_side() / f64::from(k);
    let half = 0.5 * g.root_side();
    let mut pick = || -half + step * f64::from(rng.gen_range(0..=k) >> snap << snap);
    let x = pick();
    let y = pick();
    if g.dim() == 1 {
        [x, 0.0]
    } else {
        [x, y]
    }
}

pub(crate) fn cube_containing(g: &DyadicGrid, level: u32, x: &[f64; 2]) -> DyadicCube {
    let per_axis = 1u32 << level;
    let side = g.root_side() / f64::from(per_axis);
    let half = 0.5 * g.root_side();
    let idx = |v: f64| (((v + half) / side).floor().max(0.0) as u32).min(per_axis - 1);
    let index = if g.dim() == 1 { [idx(x[0]), 0] } else { [idx(x[0]), idx(x[1])] };
    g.cube(level, index).expect("index clamped into the grid")
}
