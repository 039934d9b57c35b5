//! Weight-class constants and condition checks.
//!
//! On a finite grid every supremum condition holds with some constant, so
//! the checks return constants; boundedness is read from how a constant
//! behaves as the grid is refined.

use serde::{Serialize, Serializer};

use crate::content::CandidateB;
use crate::dyadic::{DyadicCube, Pyramid, Weight};
use crate::error::{Error, Result};
use crate::maximal::hl_maximal;
use crate::morrey::phi_pyramid;

/// The `q` values of the `A_q` ladder behind [`ainf_estimate`].
pub const AQ_LADDER: [f64; 6] = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

/// Search grid of [`reverse_holder_epsilon`]: `ε = k / RH_GRID`, `k ≤ RH_GRID`.
pub const RH_GRID: u32 = 1 << 14;

const RH_FLOOR: f64 = 1.0 / (1u64 << 60) as f64;

/// Cube masses of `φ(density) · cell volume`.
pub(crate) fn derived_masses(w: &Weight, phi: impl Fn(f64) -> f64) -> Pyramid {
    let g = w.grid();
    let vol = g.cell_volume();
    let leaves = g.to_morton(w.density()).into_iter().map(|d| phi(d) * vol).collect();
    Pyramid::from_morton(&g, leaves)
}

fn level_volume(w: &Weight, level: u32) -> f64 {
    w.grid().volume(&DyadicCube { level, index: [0, 0] })
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(q > 0.0 && q <= p && p.is_finite()) {
        return Err(Error::Domain(format!("need 0 < q <= p < inf, got p={p}, q={q}")));
    }
    Ok(())
}

/// `[w]_{A_q} = max_Q (w(Q)/|Q|) ((1/|Q|) ∫_Q w^{−1/(q−1)})^{q−1}`.
pub fn aq_constant(w: &Weight, q: f64) -> Result<f64> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Domain(format!("A_q needs q > 1, got {q}")));
    }
    let dual = derived_masses(w, |d| d.powf(-1.0 / (q - 1.0)));
    let g = w.grid();
    let mut best = 0.0f64;
    for level in 0..=g.depth() {
        let vol = level_volume(w, level);
        for (m, s) in w.masses().level(level).iter().zip(dual.level(level)) {
            best = best.max((m / vol) * (s / vol).powf(q - 1.0));
        }
    }
    Ok(best)
}

/// `[w]_{A_1} = max_x Mw(x) / w(x)`.
pub fn a1_constant(w: &Weight) -> f64 {
    let mw = hl_maximal(&w.as_function());
    mw.values().iter().zip(w.density()).map(|(m, d)| m / d).fold(0.0, f64::max)
}

/// `A_∞` estimate: the `A_q` constant at the top of [`AQ_LADDER`], with the
/// whole ladder alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AinfEstimate {
    pub value: f64,
    pub ladder: Vec<(f64, f64)>,
}

pub fn ainf_estimate(w: &Weight) -> AinfEstimate {
    let ladder: Vec<(f64, f64)> =
        AQ_LADDER.iter().map(|&q| (q, aq_constant(w, q).expect("ladder exponents exceed 1"))).collect();
    AinfEstimate { value: ladder[ladder.len() - 1].1, ladder }
}

/// Whether `((1/|Q|) ∫_Q w^{1+ε})^{1/(1+ε)} ≤ 2 w(Q)/|Q|` on every cube.
pub(crate) fn reverse_holder_holds(w: &Weight, eps: f64) -> bool {
    let e = 1.0 + eps;
    let powered = derived_masses(w, |d| d.powf(e));
    let g = w.grid();
    (0..=g.depth()).all(|level| {
        let vol = level_volume(w, level);
        w.masses().level(level).iter().zip(powered.level(level)).all(|(m, s)| (s / vol).powf(1.0 / e) <= 2.0 * m / vol)
    })
}

/// Largest `ε = k / RH_GRID ≤ 1` for which the reverse Hölder inequality
/// with constant 2 holds on every dyadic cube.
///
/// The left side increases with `ε`, so the admissible `ε` form an interval
/// and bisection over `k` is exact. If even `k = 1` fails, `ε` is halved
/// until the inequality holds, down to a floor of `2^-60`.
pub fn reverse_holder_epsilon(w: &Weight) -> f64 {
    let at = |k: u32| f64::from(k) / f64::from(RH_GRID);
    if reverse_holder_holds(w, 1.0) {
        return 1.0;
    }
    if !reverse_holder_holds(w, at(1)) {
        let mut eps = at(1);
        while eps > RH_FLOOR {
            eps *= 0.5;
            if reverse_holder_holds(w, eps) {
                return eps;
            }
        }
        return RH_FLOOR;
    }
    let (mut lo, mut hi) = (1u32, RH_GRID);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reverse_holder_holds(w, at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

/// `max w(2Q)/w(Q)` over cubes whose concentric double is grid-aligned and
/// inside the root.
///
/// `2Q` is the union of `4^dim` cubes one level finer than `Q`, which gives
/// its mass without touching cells.
pub fn doubling_constant(w: &Weight) -> Result<f64> {
    let g = w.grid();
    let dim = g.dim() as usize;
    let mut best: Option<f64> = None;
    for level in 1..g.depth() {
        let last = (1u32 << level) - 2;
        for q in g.cubes_at(level) {
            if (0..dim).any(|k| q.index[k] < 1 || q.index[k] > last) {
                continue;
            }
            let mut mass = 0.0;
            let span1 = if dim == 2 { 4 } else { 1 };
            for a in 0..4u32 {
                for b in 0..span1 {
                    let idx = [2 * q.index[0] + a - 1, if dim == 2 { 2 * q.index[1] + b - 1 } else { 0 }];
                    mass += w.mass(&DyadicCube { level: level + 1, index: idx });
                }
            }
            let r = mass / w.mass(&q);
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best.ok_or_else(|| Error::Degenerate("no cube has an aligned concentric double inside the root".into()))
}

/// Per-level maxima of a per-cube quantity over each cube's subtree.
pub(crate) fn subtree_max(dim: u32, per_level: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = per_level.to_vec();
    for l in (0..out.len() - 1).rev() {
        let b = 1usize << dim;
        let finer = out[l + 1].clone();
        for (m, v) in out[l].iter_mut().enumerate() {
            *v = finer[m * b..(m + 1) * b].iter().copied().fold(*v, f64::max);
        }
    }
    out
}

/// Best constant in `Φ(Q) ≤ C Φ(Q₀)` over dyadic `Q ⊆ Q₀`.
pub fn bpq_check(w: &Weight, p: f64, q: f64) -> Result<f64> {
    check_pq(p, q)?;
    let phis = phi_pyramid(p, q, w);
    let sub = subtree_max(w.grid().dim(), &phis);
    Ok(phis
        .iter()
        .zip(&sub)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| y / x))
        .fold(1.0, f64::max))
}

/// `max_Q Φ(Q) Σ_{k≥1} c(k) / Φ(Q^{(k)})` over existing ancestors.
fn ancestor_sum_constant(w: &Weight, p: f64, q: f64, coeff: impl Fn(u32) -> f64) -> f64 {
    let phis = phi_pyramid(p, q, w);
    let g = w.grid();
    let dim = g.dim();
    let mut best = 0.0f64;
    for level in 1..=g.depth() {
        for (m, &ph) in phis[level as usize].iter().enumerate() {
            let s: f64 = (1..=level).map(|k| coeff(k) / phis[(level - k) as usize][m >> (dim * k)]).sum();
            best = best.max(ph * s);
        }
    }
    best
}

/// Discrete weighted integral condition with dyadic ancestors standing in
/// for the dilates `2^k Q`: `max_Q Φ(Q) Σ_{k≥1} 1/Φ(Q^{(k)})`.
pub fn weighted_integral_check(w: &Weight, p: f64, q: f64) -> Result<f64> {
    check_pq(p, q)?;
    Ok(ancestor_sum_constant(w, p, q, |_| 1.0))
}

/// Outcome of [`phi_growth_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiGrowth {
    pub holds: bool,
    /// `min_Q Φ(Q^{(m)}) / Φ(Q)`; the condition needs at least 2, up to a
    /// relative rounding allowance of `1e-12`.
    pub worst_ratio: f64,
    /// No cube has an `m`-th ancestor.
    pub degenerate: bool,
}

/// Checks `2 Φ(Q) ≤ Φ(cQ)` with `cQ` realized as the `m`-th ancestor,
/// `c = 2^m`.
pub fn phi_growth_check(w: &Weight, p: f64, q: f64, c: u32) -> Result<PhiGrowth> {
    check_pq(p, q)?;
    if c < 2 || !c.is_power_of_two() {
        return Err(Error::Domain(format!("c must be a power of two >= 2, got {c}")));
    }
    let m = c.trailing_zeros();
    let phis = phi_pyramid(p, q, w);
    let g = w.grid();
    let dim = g.dim();
    let mut worst = f64::INFINITY;
    for level in m..=g.depth() {
        for (i, &ph) in phis[level as usize].iter().enumerate() {
            worst = worst.min(phis[(level - m) as usize][i >> (dim * m)] / ph);
        }
    }
    if worst.is_infinite() {
        return Ok(PhiGrowth { holds: true, worst_ratio: f64::INFINITY, degenerate: true });
    }
    Ok(PhiGrowth { holds: worst >= 2.0 * (1.0 - 1e-12), worst_ratio: worst, degenerate: false })
}

/// Constants of the self-improved integral condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NakaiConstants {
    /// `max_Q Φ(Q) Σ_k 2^{kδ} / Φ(Q^{(k)})`.
    pub power: f64,
    /// `max_Q Φ(Q) Σ_k k / Φ(Q^{(k)})`.
    pub log: f64,
}

pub fn nakai_self_improve_check(w: &Weight, p: f64, q: f64, delta: f64) -> Result<NakaiConstants> {
    check_pq(p, q)?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("need δ >= 0, got {delta}")));
    }
    Ok(NakaiConstants {
        power: ancestor_sum_constant(w, p, q, |k| (f64::from(k) * delta).exp2()),
        log: ancestor_sum_constant(w, p, q, f64::from),
    })
}

fn check_candidates(w: &Weight, cands: &[CandidateB]) -> Result<()> {
    if cands.is_empty() {
        return Err(Error::Invalid("candidate list is empty".into()));
    }
    if cands.iter().any(|c| c.b.grid() != w.grid()) {
        return Err(Error::Invalid("candidate and weight live on different grids".into()));
    }
    Ok(())
}

/// Masses of `(b w)^{−e}` for a candidate `b`.
fn bw_masses(w: &Weight, b: &CandidateB, e: f64) -> Pyramid {
    let g = w.grid();
    let vol = g.cell_volume();
    let leaves = g
        .to_morton(w.density())
        .iter()
        .zip(g.to_morton(b.b.values()))
        .map(|(d, bv)| (d * bv).powf(-e) * vol)
        .collect();
    Pyramid::from_morton(&g, leaves)
}

/// Upper estimate of `max_Q (1/|Q|) ∥w^{1/q} χ_Q∥_{M^p_q} ∥w^{−1/q} χ_Q∥_H`,
/// the block norm bounded above by the best supplied candidate.
///
/// `∥w^{1/q} χ_Q∥_{M^p_q(dx,dx)}` equals the largest `Φ_{p,q,w}` over the
/// subcubes of `Q`.
pub fn block_duality_check(w: &Weight, p: f64, q: f64, candidates: &[CandidateB]) -> Result<f64> {
    check_pq(p, q)?;
    if q <= 1.0 {
        return Err(Error::Domain(format!("need q > 1, got {q}")));
    }
    check_candidates(w, candidates)?;
    let qp = q / (q - 1.0);
    let g = w.grid();
    let sub = subtree_max(g.dim(), &phi_pyramid(p, q, w));
    let duals: Vec<Pyramid> = candidates.iter().map(|b| bw_masses(w, b, qp / q)).collect();
    let mut best = 0.0f64;
    for level in 0..=g.depth() {
        let vol = level_volume(w, level);
        for (m, &morrey) in sub[level as usize].iter().enumerate() {
            let block = duals.iter().map(|d| d.level(level)[m].powf(1.0 / qp)).fold(f64::INFINITY, f64::min);
            best = best.max(morrey * block / vol);
        }
    }
    Ok(best)
}

/// Which sufficient condition [`tanaka_condition_check`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TanakaVariant {
    /// `sup_{Q ⊆ Q₀} (1/σ(Q)) ∫_Q M[σ χ_Q]^q w` with `σ = (bw)^{−q′/q}`.
    Testing,
    /// `sup_{Q ⊆ Q₀} (w(Q)/|Q|) ((1/|Q|) ∫_Q (bw)^{−a q′/q})^{q/(a q′)}`.
    Bump { a: f64 },
}

/// `max_{Q₀} ℓ(Q₀)^{−n(1−q/p)} sup_{Q ⊆ Q₀} I(Q)` for the chosen variant's
/// inner quantity `I` and a single candidate `b`.
pub fn tanaka_condition_check(
    w: &Weight,
    p: f64,
    q: f64,
    b: &CandidateB,
    variant: TanakaVariant,
) -> Result<f64> {
    check_pq(p, q)?;
    if q <= 1.0 {
        return Err(Error::Domain(format!("need q > 1, got {q}")));
    }
    check_candidates(w, std::slice::from_ref(b))?;
    let g = w.grid();
    let dim = g.dim();
    let qp = q / (q - 1.0);
    let inner: Vec<Vec<f64>> = match variant {
        TanakaVariant::Testing => {
            let sigma = bw_masses(w, b, qp / q);
            let cell_w = w.morton_cell_masses();
            let avg: Vec<Vec<f64>> = (0..=g.depth())
                .map(|l| {
                    let vol = level_volume(w, l);
                    sigma.level(l).iter().map(|s| s / vol).collect()
                })
                .collect();
            let mut out = Vec::with_capacity(avg.len());
            for level in 0..=g.depth() {
                let mut row = Vec::with_capacity(avg[level as usize].len());
                for (m, &smass) in sigma.level(level).iter().enumerate() {
                    if !(smass > 0.0) {
                        return Err(Error::Degenerate("σ has zero mass on a cube".into()));
                    }
                    // local maximal function of σ inside the cube, top-down
                    let mut running = vec![avg[level as usize][m]];
                    for l in level + 1..=g.depth() {
                        let start = m << (dim * (l - level));
                        running = (0..running.len() << dim)
                            .map(|j| running[j >> dim].max(avg[l as usize][start + j]))
                            .collect();
                    }
                    let start = m << (dim * (g.depth() - level));
                    let integral: f64 = running
                        .iter()
                        .zip(&cell_w[start..start + running.len()])
                        .map(|(mx, cw)| mx.powf(q) * cw)
                        .sum();
                    row.push(integral / smass);
                }
                out.push(row);
            }
            out
        }
        TanakaVariant::Bump { a } => {
            if !(a > 1.0 && a.is_finite()) {
                return Err(Error::Domain(format!("bump exponent needs a > 1, got {a}")));
            }
            let e = a * qp / q;
            let bumped = bw_masses(w, b, e);
            (0..=g.depth())
                .map(|l| {
                    let vol = level_volume(w, l);
                    w.masses()
                        .level(l)
                        .iter()
                        .zip(bumped.level(l))
                        .map(|(m, s)| (m / vol) * (s / vol).powf(1.0 / e))
                        .collect()
                })
                .collect()
        }
    };
    let sub = subtree_max(dim, &inner);
    let n = f64::from(dim);
    let mut best = 0.0f64;
    for level in 0..=g.depth() {
        let side = g.side(&DyadicCube { level, index: [0, 0] });
        let scale = side.powf(n * (1.0 - q / p));
        for v in &sub[level as usize] {
            best = best.max(v / scale);
        }
    }
    Ok(best)
}

/// Analytic membership of `|x|^α` in each class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PowerWeightClass {
    /// `−n < α < n(q−1)`.
    pub in_aq: bool,
    /// `M` bounded on `M^p_q(dx, w)`: `−qn/p ≤ α < n(q − q/p)`.
    pub hlm: bool,
    /// Weighted integral condition: `α > −qn/p`.
    pub wic: bool,
    /// Riesz transforms bounded: `−qn/p < α < n(q − q/p)`.
    pub sio_bounded: bool,
    /// `α > −n`.
    pub locally_integrable: bool,
}

pub fn power_weight_classifier(alpha: f64, p: f64, q: f64, n: u32) -> Result<PowerWeightClass> {
    if !(q > 1.0 && q <= p && p.is_finite()) {
        return Err(Error::Domain(format!("need 1 < q <= p < inf, got p={p}, q={q}")));
    }
    if !(1..=2).contains(&n) {
        return Err(Error::Domain(format!("dimension must be 1 or 2, got {n}")));
    }
    let n = f64::from(n);
    let lower = -q * n / p;
    let upper = n * (q - q / p);
    Ok(PowerWeightClass {
        in_aq: -n < alpha && alpha < n * (q - 1.0),
        hlm: lower <= alpha && alpha < upper,
        wic: alpha > lower,
        sio_bounded: lower < alpha && alpha < upper,
        locally_integrable: alpha > -n,
    })
}

fn ladder_as_map<S: Serializer>(ladder: &[(f64, f64)], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(ladder.iter().map(|(q, v)| (format!("{q}"), *v)))
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Every diagnostic of a weight for exponents `p, q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightReport {
    #[serde(serialize_with = "ladder_as_map")]
    pub a_q_constants: Vec<(f64, f64)>,
    pub a1_const: f64,
    pub a_inf_est: f64,
    pub rh_epsilon: f64,
    /// `None` when no cube has an aligned concentric double.
    pub doubling_const: Option<f64>,
    pub bpq_const: f64,
    /// Serialized as `null` if not finite.
    #[serde(serialize_with = "finite_or_null")]
    pub wic_const: f64,
    /// Smallest `c = 2^m` passing [`phi_growth_check`] non-degenerately.
    pub phi_growth_c: Option<f64>,
}

pub fn weight_report(w: &Weight, p: f64, q: f64) -> Result<WeightReport> {
    check_pq(p, q)?;
    let ((ainf, a1), ((rh, dbl), (bpq, wic))) = rayon::join(
        || (ainf_estimate(w), a1_constant(w)),
        || {
            rayon::join(
                || (reverse_holder_epsilon(w), doubling_constant(w).ok()),
                || (bpq_check(w, p, q), weighted_integral_check(w, p, q)),
            )
        },
    );
    let mut phi_growth_c = None;
    for m in 1..=w.grid().depth() {
        let c = 1u32 << m;
        let r = phi_growth_check(w, p, q, c)?;
        if r.holds && !r.degenerate {
            phi_growth_c = Some(f64::from(c));
            break;
        }
    }
    Ok(WeightReport {
        a_q_constants: ainf.ladder,
        a1_const: a1,
        a_inf_est: ainf.value,
        rh_epsilon: rh,
        doubling_const: dbl,
        bpq_const: bpq?,
        wic_const: wic?,
        phi_growth_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicGrid;

    fn weight(d: Vec<f64>) -> Weight {
        let l = d.len().trailing_zeros();
        Weight::from_density(DyadicGrid::new(1, l as i32, l).unwrap(), d).unwrap()
    }

    #[test]
    fn aq_examples() {
        let w = weight(vec![1.0, 4.0]);
        assert!((aq_constant(&w, 2.0).unwrap() - 1.5625).abs() < 1e-15);
        let one = weight(vec![1.0; 8]);
        for q in [1.5, 2.0, 7.0] {
            assert!((aq_constant(&one, q).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!(aq_constant(&one, 1.0).is_err());
    }

    #[test]
    fn a1_examples() {
        let w = weight(vec![1.0, 1.0, 1.0, 9.0]);
        let mw = hl_maximal(&w.as_function());
        assert_eq!(mw.value(0) / w.density()[0], 3.0);
        // the pair [1, 9] averages 5 over the unit density at cell 2
        assert_eq!(a1_constant(&w), 5.0);
        assert_eq!(a1_constant(&weight(vec![2.0; 4])), 1.0);
    }

    #[test]
    fn reverse_holder_examples() {
        assert_eq!(reverse_holder_epsilon(&weight(vec![1.0; 8])), 1.0);
        // max <= 2 avg on two cells, so the inequality never fails there
        assert_eq!(reverse_holder_epsilon(&weight(vec![1.0, 9.0])), 1.0);
        let mut d = vec![1.0; 8];
        d[7] = 100.0;
        let eps = reverse_holder_epsilon(&weight(d));
        let lhs = |e: f64| ((7.0 + 100f64.powf(1.0 + e)) / 8.0).powf(1.0 / (1.0 + e));
        assert!(lhs(eps) <= 2.0 * 107.0 / 8.0);
        assert!(lhs(eps + 1.0 / f64::from(RH_GRID)) > 2.0 * 107.0 / 8.0);
        let mut d = vec![1.0; 8];
        d[7] = 1000.0;
        assert!(reverse_holder_epsilon(&weight(d)) < eps);
    }

    #[test]
    fn doubling_examples() {
        let g = DyadicGrid::new(2, 0, 4).unwrap();
        assert_eq!(doubling_constant(&Weight::lebesgue(g)).unwrap(), 4.0);
        let g = DyadicGrid::new(1, 0, 2).unwrap();
        assert!(doubling_constant(&Weight::lebesgue(g)).is_err());
    }

    #[test]
    fn integral_condition_for_lebesgue() {
        let g = DyadicGrid::new(1, 0, 12).unwrap();
        let w = Weight::lebesgue(g);
        let p = 4.0;
        let c = weighted_integral_check(&w, p, 2.0).unwrap();
        assert!(c <= 1.0 / (2f64.powf(1.0 / p) - 1.0));
        let nk = nakai_self_improve_check(&w, p, 2.0, 0.0).unwrap();
        assert!((nk.power - c).abs() < 1e-12 * c);
        assert!(nk.log >= c);
        assert_eq!(bpq_check(&w, p, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn phi_growth_for_lebesgue() {
        let g = DyadicGrid::new(1, 0, 8).unwrap();
        let w = Weight::lebesgue(g);
        assert!(!phi_growth_check(&w, 4.0, 2.0, 8).unwrap().holds);
        let r = phi_growth_check(&w, 4.0, 2.0, 16).unwrap();
        assert!(r.holds && !r.degenerate);
        assert!((r.worst_ratio - 2.0).abs() < 1e-12);
        let small = Weight::lebesgue(DyadicGrid::new(1, 0, 2).unwrap());
        assert!(phi_growth_check(&small, 4.0, 2.0, 16).unwrap().degenerate);
    }

    #[test]
    fn classifier_examples() {
        let c = power_weight_classifier(-0.5, 4.0, 2.0, 1).unwrap();
        assert!(c.hlm && !c.sio_bounded && !c.wic);
        let c = power_weight_classifier(0.0, 4.0, 2.0, 1).unwrap();
        assert!(c.in_aq && c.hlm && c.wic && c.sio_bounded && c.locally_integrable);
        assert!(!power_weight_classifier(1.5, 4.0, 2.0, 1).unwrap().hlm);
    }
}
