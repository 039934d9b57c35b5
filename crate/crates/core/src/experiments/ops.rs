use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, WeightSource};
use super::corpus::{cube_containing, origin_point, Family, TestCorpus};
use super::{ExperimentOutput, Row};
use crate::content::{candidate_b_maximal, candidate_b_power};
use crate::dyadic::{DyadicCube, DyadicGrid, GridFunction, Pyramid, Weight};
use crate::error::{Error, Result};
use crate::maximal::{fs_sharp, global_sharp, hl_maximal, powered_maximal};
use crate::morrey::{local_average_term, morrey_norm, phi, phi_pyramid, weak_morrey_norm, MorreyParams};
use crate::rearrange::median;
use crate::singular::{bmo_norm, hilbert, riesz};
use crate::weights::{power_weight_classifier, weighted_integral_check};

/// Growth per refinement step below which a trend counts as bounded.
pub const BOUNDED_GROWTH: f64 = 1.1;
/// Growth per refinement step above which a trend counts as unbounded.
pub const UNBOUNDED_GROWTH: f64 = 1.5;

/// Verdict on a sequence of growth factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Bounded,
    Growing,
    Inconclusive,
}

impl Trend {
    /// CSV encoding: 1 bounded, −1 growing, 0 inconclusive.
    pub fn code(self) -> f64 {
        match self {
            Trend::Bounded => 1.0,
            Trend::Growing => -1.0,
            Trend::Inconclusive => 0.0,
        }
    }

    pub fn from_code(v: f64) -> Self {
        if v > 0.5 {
            Trend::Bounded
        } else if v < -0.5 {
            Trend::Growing
        } else {
            Trend::Inconclusive
        }
    }
}

/// Bounded if every step grows by less than [`BOUNDED_GROWTH`], growing if
/// every step exceeds [`UNBOUNDED_GROWTH`].
pub fn classify(growth: &[f64]) -> Trend {
    if growth.is_empty() {
        Trend::Inconclusive
    } else if growth.iter().all(|g| *g < BOUNDED_GROWTH) {
        Trend::Bounded
    } else if growth.iter().all(|g| *g > UNBOUNDED_GROWTH) {
        Trend::Growing
    } else {
        Trend::Inconclusive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Maximal,
    Hilbert,
    Riesz,
}

impl Op {
    fn name(self) -> &'static str {
        match self {
            Op::Maximal => "M",
            Op::Hilbert => "H",
            Op::Riesz => "R1",
        }
    }

    fn apply(self, f: &GridFunction) -> Result<GridFunction> {
        match self {
            Op::Maximal => Ok(hl_maximal(f)),
            Op::Hilbert => hilbert(f),
            Op::Riesz => riesz(f, 1),
        }
    }
}

struct Labeled {
    label: String,
    f: GridFunction,
}

fn corpus_on(cfg: &ExperimentConfig, grid: &DyadicGrid) -> Vec<Labeled> {
    cfg.corpus
        .corpora()
        .iter()
        .flat_map(|c| {
            c.generate(grid, cfg.exponents.p)
                .into_iter()
                .enumerate()
                .map(move |(i, f)| Labeled { label: format!("{}#{i}", c.family.id()), f })
        })
        .collect()
}

fn check_pq_strict(p: f64, q: f64) -> Result<()> {
    if !(q > 1.0 && q <= p) {
        return Err(Error::Domain(format!("need 1 < q <= p, got p={p}, q={q}")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Domain(format!("λ must lie in (0, 1/2), got {lambda}")));
    }
    Ok(())
}

fn pairs(alphas: &[f64], levels: &[u32]) -> Vec<(f64, u32)> {
    alphas.iter().flat_map(|&a| levels.iter().map(move |&l| (a, l))).collect()
}

fn fmt_alpha(a: f64) -> String {
    if a.is_nan() {
        "file".into()
    } else {
        format!("{a}")
    }
}

struct Builder {
    kind: ExperimentKind,
    rows: Vec<Row>,
    summary: Vec<String>,
    notes: Vec<String>,
}

impl Builder {
    fn new(kind: ExperimentKind) -> Self {
        Builder { kind, rows: Vec::new(), summary: Vec::new(), notes: Vec::new() }
    }

    fn row(&mut self, alpha: f64, level: u32, metric: impl Into<String>, value: f64) {
        self.rows.push(Row { alpha, level, metric: metric.into(), value });
    }

    fn finish(self) -> ExperimentOutput {
        ExperimentOutput { kind: self.kind, rows: self.rows, summary: self.summary, notes: self.notes }
    }
}

/// Growth factors of consecutive values.
fn growth(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] / w[0]).collect()
}

fn is_boundary(alpha: f64, p: f64, q: f64, n: f64) -> bool {
    let close = |x: f64| (alpha - x).abs() <= 1e-12 * (1.0 + x.abs());
    close(-q * n / p) || close(n * (q - q / p))
}

pub(super) fn boundedness_sweep(cfg: &ExperimentConfig, src: &WeightSource) -> Result<ExperimentOutput> {
    let ops: &[Op] = match (cfg.experiment, cfg.grid.dim) {
        (ExperimentKind::MaximalBoundednessSweep, _) => &[Op::Maximal],
        (_, 1) => &[Op::Maximal, Op::Hilbert],
        _ => &[Op::Maximal, Op::Riesz],
    };
    let (p, q) = (cfg.exponents.p, cfg.exponents.q);
    check_pq_strict(p, q)?;
    let n = cfg.grid.dim;
    let alphas = src.alphas();
    let levels = &cfg.grid.levels;

    type Cell = (Vec<f64>, Vec<String>);
    let cells: Vec<Cell> = pairs(&alphas, levels)
        .par_iter()
        .map(|&(alpha, level)| -> Result<Cell> {
            let grid = cfg.grid_at(level)?;
            let w = src.weight(grid, alpha)?;
            let params = MorreyParams::samko(p, q, &w)?;
            let corpus = corpus_on(cfg, &grid);
            let per_item: Vec<Option<Vec<f64>>> = corpus
                .par_iter()
                .map(|item| -> Result<Option<Vec<f64>>> {
                    let base = morrey_norm(&item.f, &params);
                    if base == 0.0 {
                        return Ok(None);
                    }
                    ops.iter()
                        .map(|op| Ok(morrey_norm(&op.apply(&item.f)?, &params) / base))
                        .collect::<Result<Vec<f64>>>()
                        .map(Some)
                })
                .collect::<Result<_>>()?;
            let mut best = vec![0.0f64; ops.len()];
            let mut skipped = Vec::new();
            for (item, r) in corpus.iter().zip(&per_item) {
                match r {
                    Some(r) => best.iter_mut().zip(r).for_each(|(b, v)| *b = b.max(*v)),
                    None => skipped.push(format!("alpha={} L={level}: {} has zero norm", fmt_alpha(alpha), item.label)),
                }
            }
            Ok((best, skipped))
        })
        .collect::<Result<_>>()?;

    let mut out = Builder::new(cfg.experiment);
    for (ai, &alpha) in alphas.iter().enumerate() {
        let block = &cells[ai * levels.len()..(ai + 1) * levels.len()];
        for (&level, (best, skipped)) in levels.iter().zip(block) {
            out.notes.extend(skipped.iter().cloned());
            let mut line = format!("alpha={} L={level}", fmt_alpha(alpha));
            for (op, v) in ops.iter().zip(best) {
                out.row(alpha, level, format!("ratio_{}", op.name()), *v);
                line.push_str(&format!(" ratio_{}={v:.6}", op.name()));
            }
            out.summary.push(line);
        }
        let last = *levels.last().expect("validated");
        for (k, op) in ops.iter().enumerate() {
            let series: Vec<f64> = block.iter().map(|c| c.0[k]).collect();
            let steps = growth(&series);
            for (&level, g) in levels[1..].iter().zip(&steps) {
                out.row(alpha, level, format!("growth_{}", op.name()), *g);
            }
            let trend = classify(&steps);
            out.row(alpha, last, format!("class_{}", op.name()), trend.code());
            if alpha.is_nan() {
                continue;
            }
            let class = power_weight_classifier(alpha, p, q, n)?;
            let bounded = if *op == Op::Maximal { class.hlm } else { class.sio_bounded };
            let expected = if bounded { Trend::Bounded } else { Trend::Growing };
            out.row(alpha, last, format!("expected_{}", op.name()), expected.code());
            let boundary = is_boundary(alpha, p, q, f64::from(n));
            out.row(alpha, last, format!("boundary_{}", op.name()), f64::from(u8::from(boundary)));
            out.row(alpha, last, format!("agree_{}", op.name()), f64::from(u8::from(trend == expected)));
        }
    }
    Ok(out.finish())
}

/// Two-sided ratios of the sharp maximal equivalences for one function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpRatios {
    /// `∥f∥ / (∥M♯f∥ + sup_Q Φ(Q) ⟨|f|^s⟩_{w,Q}^{1/s})` in the Samko norm.
    pub samko: f64,
    /// `∥f∥ / (∥M♯f∥ + ∥f∥_{ℳ^p_s(w,w)})` in the Komori–Shirai norm.
    pub komori_shirai: f64,
    /// `∥M♯f∥ / ∥f∥` in the Samko norm.
    pub sharp_over_norm: f64,
}

/// Evaluates both sharp-maximal equivalences for `f` with `M♯ = M♯,d_λ`.
pub fn sharp_equivalence_ratios(f: &GridFunction, p: f64, q: f64, s: f64, lambda: f64, w: &Weight) -> Result<SharpRatios> {
    if !(s > 0.0 && s <= q && q <= p) {
        return Err(Error::Domain(format!("need 0 < s <= q <= p, got s={s}, q={q}, p={p}")));
    }
    let sharp = global_sharp(f, lambda)?;
    let samko = MorreyParams::samko(p, q, w)?;
    let ks = MorreyParams::komori_shirai(p, q, w)?;
    let ks_s = MorreyParams::komori_shirai(p, s, w)?;
    let lhs = morrey_norm(f, &samko);
    let sharp_norm = morrey_norm(&sharp, &samko);
    Ok(SharpRatios {
        samko: lhs / (sharp_norm + local_average_term(f, p, q, s, w)?),
        komori_shirai: morrey_norm(f, &ks) / (morrey_norm(&sharp, &ks) + morrey_norm(f, &ks_s)),
        sharp_over_norm: sharp_norm / lhs,
    })
}

pub(super) fn sharp_maximal_equivalence(cfg: &ExperimentConfig, src: &WeightSource) -> Result<ExperimentOutput> {
    let e = cfg.exponents;
    if !(e.s > 0.0 && e.s <= e.q && e.q <= e.p) {
        return Err(Error::Domain(format!("need 0 < s <= q <= p, got s={}, q={}, p={}", e.s, e.q, e.p)));
    }
    check_lambda(e.lambda)?;
    if !(e.eta > 0.0) {
        return Err(Error::Domain(format!("η must be positive, got {}", e.eta)));
    }
    let alphas = src.alphas();
    let levels = &cfg.grid.levels;
    let cells: Vec<Vec<(SharpRatios, f64)>> = pairs(&alphas, levels)
        .par_iter()
        .map(|&(alpha, level)| -> Result<Vec<(SharpRatios, f64)>> {
            let grid = cfg.grid_at(level)?;
            let w = src.weight(grid, alpha)?;
            let samko = MorreyParams::samko(e.p, e.q, &w)?;
            corpus_on(cfg, &grid)
                .par_iter()
                .filter(|item| morrey_norm(&item.f, &samko) > 0.0)
                .map(|item| {
                    let r = sharp_equivalence_ratios(&item.f, e.p, e.q, e.s, e.lambda, &w)?;
                    let m_eta = morrey_norm(&powered_maximal(&item.f, e.eta)?, &samko) / morrey_norm(&item.f, &samko);
                    Ok((r, m_eta))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let factor = (1.0 + 1.0 / e.eta).exp2() * e.lambda.powf(-1.0 / e.eta);
    let mut out = Builder::new(cfg.experiment);
    for ((alpha, level), rs) in pairs(&alphas, levels).into_iter().zip(&cells) {
        let fold = |f: fn(f64, f64) -> f64, init: f64, get: &dyn Fn(&(SharpRatios, f64)) -> f64| {
            rs.iter().map(get).fold(init, f)
        };
        let samko_min = fold(f64::min, f64::INFINITY, &|r| r.0.samko);
        let samko_max = fold(f64::max, 0.0, &|r| r.0.samko);
        let ks_min = fold(f64::min, f64::INFINITY, &|r| r.0.komori_shirai);
        let ks_max = fold(f64::max, 0.0, &|r| r.0.komori_shirai);
        let upper = fold(f64::max, 0.0, &|r| r.0.sharp_over_norm);
        let bound = factor * fold(f64::max, 0.0, &|r| r.1);
        for (m, v) in [
            ("samko_min", samko_min),
            ("samko_max", samko_max),
            ("ks_min", ks_min),
            ("ks_max", ks_max),
            ("sharp_upper", upper),
            ("sharp_upper_bound", bound),
        ] {
            out.row(alpha, level, m, v);
        }
        out.summary.push(format!(
            "alpha={} L={level} samko=[{samko_min:.4}, {samko_max:.4}] ks=[{ks_min:.4}, {ks_max:.4}] sharp={upper:.4}<={bound:.4}",
            fmt_alpha(alpha)
        ));
    }
    Ok(out.finish())
}

pub(super) fn sharp_failure_demo(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let e = cfg.exponents;
    if !(e.p > e.q && e.q > 0.0) {
        return Err(Error::Domain(format!("the counterexample needs p > q > 0, got p={}, q={}", e.p, e.q)));
    }
    check_lambda(e.lambda)?;
    if !(e.eta > 0.0) {
        return Err(Error::Domain(format!("η must be positive, got {}", e.eta)));
    }
    let n = f64::from(cfg.grid.dim);
    let alpha0 = -e.q * n / e.p;
    let levels = &cfg.grid.levels;
    let cells: Vec<[f64; 5]> = levels
        .par_iter()
        .map(|&level| -> Result<[f64; 5]> {
            let grid = cfg.grid_at(level)?;
            let w0 = Weight::power(grid, alpha0)?;
            let f0 = GridFunction::constant(grid, 1.0);
            let mf = hl_maximal(&f0);
            let deviation = mf.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            let fs = fs_sharp(&f0, e.eta)?.max_abs();
            let sharp = global_sharp(&f0, e.lambda)?.max_abs();
            let norm = morrey_norm(&mf, &MorreyParams::samko(e.p, e.q, &w0)?);
            let wic = weighted_integral_check(&w0, e.p, e.q)?;
            Ok([deviation, fs, sharp, norm, wic])
        })
        .collect::<Result<_>>()?;
    let mut out = Builder::new(cfg.experiment);
    if cfg.weight.file.is_some() || cfg.weight.powers != [0.0] {
        out.notes.push(format!("weight spec ignored: the demo always uses |x|^{alpha0}"));
    }
    for (&level, c) in levels.iter().zip(&cells) {
        for (m, v) in ["mf_deviation", "fs_sharp_max", "sharp_max", "norm_mf0", "wic"].iter().zip(c) {
            out.row(alpha0, level, *m, *v);
        }
        out.summary.push(format!(
            "alpha={alpha0} L={level} |Mf0-1|={} f0#={} norm={:.6} wic={:.6}",
            c[0], c[1], c[3], c[4]
        ));
    }
    let wics: Vec<f64> = cells.iter().map(|c| c[4]).collect();
    for (&level, g) in levels[1..].iter().zip(growth(&wics)) {
        out.row(alpha0, level, "wic_growth", g);
    }
    Ok(out.finish())
}

/// Whether `0 ∈ 3Q` for a one-dimensional cube.
fn origin_in_triple(grid: &DyadicGrid, q: &DyadicCube) -> bool {
    let a = grid.lower_corner(q)[0];
    let l = grid.side(q);
    a - l <= 0.0 && 0.0 < a + 2.0 * l
}

/// `max_{Q ⊆ Q₀} (1/|Q|) Φ(Q)^q ⟨(b w)^{−1/(q−1)}⟩_Q^{q−1} / (|Q₀|/|Q|)^{1−q/p}`.
pub fn candidate_condition_constant(b: &GridFunction, w: &Weight, p: f64, q: f64, q0: &DyadicCube) -> Result<f64> {
    check_pq_strict(p, q)?;
    let g = w.grid();
    if b.grid() != g {
        return Err(Error::Invalid("candidate and weight live on different grids".into()));
    }
    let vol = g.cell_volume();
    let leaves: Vec<f64> = g
        .to_morton(b.values())
        .iter()
        .zip(g.to_morton(w.density()))
        .map(|(bv, d)| (bv * d).powf(-1.0 / (q - 1.0)) * vol)
        .collect();
    let sums = Pyramid::from_morton(&g, leaves);
    let v0 = g.volume(q0);
    Ok(g.subcubes(*q0)
        .map(|cube| {
            let v = g.volume(&cube);
            let avg = sums.get(&g, &cube) / v;
            phi(p, q, w, &cube).powf(q) / v * avg.powf(q - 1.0) / (v0 / v).powf(1.0 - q / p)
        })
        .fold(0.0, f64::max))
}

const BASE_LEVELS: u32 = 3;

pub(super) fn weak_type_with_candidates(cfg: &ExperimentConfig, src: &WeightSource) -> Result<ExperimentOutput> {
    let e = cfg.exponents;
    if cfg.grid.dim != 1 {
        return Err(Error::Config("weak_type_with_candidates is one-dimensional".into()));
    }
    check_pq_strict(e.p, e.q)?;
    let WeightSource::Powers(alphas) = src else {
        return Err(Error::Config("weak_type_with_candidates needs power weights".into()));
    };
    if let Some(a) = alphas.iter().find(|a| !(**a >= -e.q / e.p && **a < e.q - e.q / e.p)) {
        return Err(Error::Domain(format!("α = {a} outside [{}, {})", -e.q / e.p, e.q - e.q / e.p)));
    }
    let levels = &cfg.grid.levels;
    let content_dim = 1.0 - e.q / e.p;
    let eps = 0.5 * e.q / e.p;
    let cells: Vec<[f64; 4]> = pairs(alphas, levels)
        .par_iter()
        .map(|&(alpha, level)| -> Result<[f64; 4]> {
            let grid = cfg.grid_at(level)?;
            let w = Weight::power(grid, alpha)?;
            let bases: Vec<DyadicCube> = (0..=BASE_LEVELS.min(level - 1)).flat_map(|l| grid.cubes_at(l)).collect();
            let consts: Vec<(bool, f64)> = bases
                .par_iter()
                .map(|q0| {
                    let near = origin_in_triple(&grid, q0);
                    let cand = if near {
                        candidate_b_power(grid, q0, e.p, e.q, alpha)?
                    } else {
                        candidate_b_maximal(grid, q0, content_dim, eps)?
                    };
                    Ok((near, candidate_condition_constant(&cand.b, &w, e.p, e.q, q0)?))
                })
                .collect::<Result<_>>()?;
            let near = consts.iter().filter(|c| c.0).map(|c| c.1).fold(0.0, f64::max);
            let far = consts.iter().filter(|c| !c.0).map(|c| c.1).fold(0.0, f64::max);
            let samko = MorreyParams::samko(e.p, e.q, &w)?;
            let ratios: Vec<(f64, f64)> = corpus_on(cfg, &grid)
                .par_iter()
                .filter(|item| morrey_norm(&item.f, &samko) > 0.0)
                .map(|item| {
                    let strong = morrey_norm(&item.f, &samko);
                    let weak_m = weak_morrey_norm(&hl_maximal(&item.f), e.p, e.q, &w)?;
                    let weak_f = weak_morrey_norm(&item.f, e.p, e.q, &w)?;
                    Ok((weak_m / strong, weak_f / strong))
                })
                .collect::<Result<_>>()?;
            let weak = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
            let cheb = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
            Ok([near, far, weak, cheb])
        })
        .collect::<Result<_>>()?;
    let mut out = Builder::new(cfg.experiment);
    for ((alpha, level), c) in pairs(alphas, levels).into_iter().zip(&cells) {
        for (m, v) in ["near_const", "far_const", "weak_ratio", "chebyshev"].iter().zip(c) {
            out.row(alpha, level, *m, *v);
        }
        out.summary.push(format!(
            "alpha={alpha} L={level} near={:.4} far={:.4} weak={:.4} chebyshev={:.4}",
            c[0], c[1], c[2], c[3]
        ));
    }
    Ok(out.finish())
}

/// `sup_Q ∥(b − b_Q) χ_Q∥_{ℳ^p_q(dx,w)} / Φ_{p,q,w}(Q)` over dyadic cubes,
/// with `b_Q` the Lebesgue average.
///
/// Cubes containing `Q` never beat `Q` itself because `1/p − 1/q ≤ 0`, so
/// each inner norm is a maximum over the subcubes of `Q`.
pub fn generalized_bmo_norm(b: &GridFunction, p: f64, q: f64, w: &Weight) -> Result<f64> {
    if !(q > 0.0 && q <= p && p.is_finite()) {
        return Err(Error::Domain(format!("need 0 < q <= p < inf, got p={p}, q={q}")));
    }
    let g = b.grid();
    if g != w.grid() {
        return Err(Error::Invalid("function and weight live on different grids".into()));
    }
    let vals = g.to_morton(b.values());
    let masses = w.morton_cell_masses();
    let phis = phi_pyramid(p, q, w);
    let e = 1.0 / p - 1.0 / q;
    let branching = g.branching();
    let best = (0..=g.depth())
        .into_par_iter()
        .map(|level| {
            let size = 1usize << (g.dim() * (g.depth() - level));
            vals.par_chunks(size)
                .zip(masses.par_chunks(size))
                .enumerate()
                .map(|(m, (block, mb))| {
                    let mean = block.iter().sum::<f64>() / size as f64;
                    let mut sums: Vec<f64> =
                        block.iter().zip(mb).map(|(v, cm)| (v - mean).abs().powf(q) * cm).collect();
                    let mut sub = g.depth();
                    let mut inner = 0.0f64;
                    loop {
                        let scale = g.volume(&DyadicCube { level: sub, index: [0, 0] }).powf(e);
                        inner = sums.iter().fold(inner, |acc, s| acc.max(scale * s.powf(1.0 / q)));
                        if sub == level {
                            break;
                        }
                        sums = sums.chunks(branching).map(|c| c.iter().sum()).collect();
                        sub -= 1;
                    }
                    inner / phis[level as usize][m]
                })
                .reduce(|| 0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

pub(super) fn bmo_equivalence(cfg: &ExperimentConfig, src: &WeightSource) -> Result<ExperimentOutput> {
    let e = cfg.exponents;
    check_pq_strict(e.p, e.q)?;
    let corpus = TestCorpus { family: Family::BmoLogs, seed: cfg.corpus.seed, count: cfg.corpus.count };
    let alphas = src.alphas();
    let levels = &cfg.grid.levels;
    let cells: Vec<Vec<Option<f64>>> = pairs(&alphas, levels)
        .par_iter()
        .map(|&(alpha, level)| -> Result<Vec<Option<f64>>> {
            let grid = cfg.grid_at(level)?;
            let w = src.weight(grid, alpha)?;
            corpus
                .generate(&grid, e.p)
                .par_iter()
                .map(|b| {
                    let base = bmo_norm(b);
                    if base == 0.0 {
                        return Ok(None);
                    }
                    Ok(Some(generalized_bmo_norm(b, e.p, e.q, &w)? / base))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out = Builder::new(cfg.experiment);
    if !cfg.corpus.families.contains(&Family::BmoLogs) {
        out.notes.push("the bmo_logs family is always used".into());
    }
    for (ai, &alpha) in alphas.iter().enumerate() {
        let block = &cells[ai * levels.len()..(ai + 1) * levels.len()];
        for (&level, ratios) in levels.iter().zip(block) {
            let mut line = format!("alpha={} L={level}", fmt_alpha(alpha));
            for (i, r) in ratios.iter().enumerate() {
                match r {
                    Some(r) => {
                        out.row(alpha, level, format!("ratio_b{i}"), *r);
                        line.push_str(&format!(" b{i}={r:.4}"));
                    }
                    None => out.notes.push(format!("alpha={} L={level}: b{i} is constant", fmt_alpha(alpha))),
                }
            }
            out.summary.push(line);
        }
        let last = *levels.last().expect("validated");
        for i in 0..corpus.count {
            let series: Vec<f64> = block.iter().filter_map(|c| c[i]).collect();
            if series.len() == levels.len() {
                let hi = series.iter().copied().fold(0.0, f64::max);
                let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
                out.row(alpha, last, format!("band_b{i}"), hi / lo);
            }
        }
    }
    Ok(out.finish())
}

const MEDIAN_LAMBDA: f64 = 0.25;

pub(super) fn median_decay_check(cfg: &ExperimentConfig, src: &WeightSource) -> Result<ExperimentOutput> {
    let e = cfg.exponents;
    if !(e.q > 0.0 && e.q <= e.p) {
        return Err(Error::Domain(format!("need 0 < q <= p, got p={}, q={}", e.p, e.q)));
    }
    let alphas = src.alphas();
    let levels = &cfg.grid.levels;
    struct Cell {
        slack: f64,
        profile: f64,
        medians: Vec<f64>,
        inv_phi: Vec<f64>,
    }
    let cells: Vec<Cell> = pairs(&alphas, levels)
        .par_iter()
        .map(|&(alpha, level)| -> Result<Cell> {
            let grid = cfg.grid_at(level)?;
            let w = src.weight(grid, alpha)?;
            let samko = MorreyParams::samko(e.p, e.q, &w)?;
            let base = cube_containing(&grid, grid.depth(), &origin_point(&grid));
            let chain: Vec<DyadicCube> = (0..=grid.depth()).filter_map(|l| base.ancestor(l)).collect();
            let inv_phi: Vec<f64> = chain.iter().map(|c| 1.0 / phi(e.p, e.q, &w, c)).collect();
            let per_item: Vec<(f64, f64, Vec<f64>)> = corpus_on(cfg, &grid)
                .par_iter()
                .map(|item| {
                    let mf = hl_maximal(&item.f);
                    let norm = morrey_norm(&mf, &samko);
                    let mut slack = f64::INFINITY;
                    let mut profile = 0.0f64;
                    let mut meds = Vec::with_capacity(chain.len());
                    for (c, ip) in chain.iter().zip(&inv_phi) {
                        let m = median(&item.f, c).abs();
                        let inf = grid.cells(c).map(|x| mf.value(x)).fold(f64::INFINITY, f64::min);
                        slack = slack.min(inf / MEDIAN_LAMBDA - m);
                        if norm > 0.0 {
                            profile = profile.max(m * MEDIAN_LAMBDA / (norm * ip));
                        }
                        meds.push(m);
                    }
                    (slack, profile, meds)
                })
                .collect();
            let medians = (0..chain.len())
                .map(|l| per_item.iter().map(|r| r.2[l]).fold(0.0, f64::max))
                .collect();
            Ok(Cell {
                slack: per_item.iter().map(|r| r.0).fold(f64::INFINITY, f64::min),
                profile: per_item.iter().map(|r| r.1).fold(0.0, f64::max),
                medians,
                inv_phi,
            })
        })
        .collect::<Result<_>>()?;
    let mut out = Builder::new(cfg.experiment);
    for ((alpha, level), c) in pairs(&alphas, levels).into_iter().zip(&cells) {
        out.row(alpha, level, "bound_slack", c.slack);
        out.row(alpha, level, "profile_max", c.profile);
        for (l, (m, ip)) in c.medians.iter().zip(&c.inv_phi).enumerate() {
            out.row(alpha, level, format!("median_l{l}"), *m);
            out.row(alpha, level, format!("inv_phi_l{l}"), *ip);
        }
        out.summary.push(format!(
            "alpha={} L={level} slack={:.6} profile={:.6}",
            fmt_alpha(alpha),
            c.slack,
            c.profile
        ));
    }
    Ok(out.finish())
}
