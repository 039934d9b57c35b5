//! `Φ_{p,q,w}` and Morrey-type norms.
//!
//! Every supremum runs over the dyadic cubes of the grid, and every integral
//! is an exact cell sum, so each norm is an exact optimum over a finite
//! family.

use crate::dyadic::{DyadicCube, DyadicGrid, GridFunction, Pyramid, Weight};
use crate::error::{Error, Result};
use crate::rearrange::for_each_sorted_cube;

/// `Φ_{p,q,w}(Q) = |Q|^{1/p} (w(Q)/|Q|)^{1/q}`.
pub fn phi(p: f64, q: f64, w: &Weight, cube: &DyadicCube) -> f64 {
    let vol = w.grid().volume(cube);
    phi_from(p, q, vol, w.mass(cube))
}

pub(crate) fn phi_from(p: f64, q: f64, volume: f64, mass: f64) -> f64 {
    volume.powf(1.0 / p) * (mass / volume).powf(1.0 / q)
}

/// `Φ_{p,q,w}` for every cube, per level in Morton order.
pub(crate) fn phi_pyramid(p: f64, q: f64, w: &Weight) -> Vec<Vec<f64>> {
    let g = w.grid();
    (0..=g.depth())
        .map(|l| {
            let vol = g.volume(&DyadicCube { level: l, index: [0, 0] });
            w.masses().level(l).iter().map(|&m| phi_from(p, q, vol, m)).collect()
        })
        .collect()
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(q > 0.0 && q <= p && p.is_finite()) {
        return Err(Error::Domain(format!("Morrey exponents need 0 < q <= p < inf, got p={p}, q={q}")));
    }
    Ok(())
}

/// Which measures play the roles of `w₁` (scale) and `w₂` (integral).
#[derive(Debug, Clone, Copy)]
pub enum Flavor<'a> {
    /// `w₁ = dx`, `w₂ = w`.
    Samko(&'a Weight),
    /// `w₁ = w₂ = w`.
    KomoriShirai(&'a Weight),
    General { w1: &'a Weight, w2: &'a Weight },
}

#[derive(Debug, Clone, Copy)]
pub struct MorreyParams<'a> {
    p: f64,
    q: f64,
    flavor: Flavor<'a>,
}

impl<'a> MorreyParams<'a> {
    pub fn new(p: f64, q: f64, flavor: Flavor<'a>) -> Result<Self> {
        check_exponents(p, q)?;
        if let Flavor::General { w1, w2 } = flavor {
            if w1.grid() != w2.grid() {
                return Err(Error::Invalid("w1 and w2 live on different grids".into()));
            }
        }
        Ok(MorreyParams { p, q, flavor })
    }

    pub fn samko(p: f64, q: f64, w: &'a Weight) -> Result<Self> {
        Self::new(p, q, Flavor::Samko(w))
    }

    pub fn komori_shirai(p: f64, q: f64, w: &'a Weight) -> Result<Self> {
        Self::new(p, q, Flavor::KomoriShirai(w))
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn flavor(&self) -> Flavor<'a> {
        self.flavor
    }

    /// The integrating weight `w₂`.
    pub fn w2(&self) -> &'a Weight {
        match self.flavor {
            Flavor::Samko(w) | Flavor::KomoriShirai(w) => w,
            Flavor::General { w2, .. } => w2,
        }
    }

    /// `w₁(Q)` for a cube at `level` with Morton index `m`.
    fn scale_mass(&self, grid: &DyadicGrid, level: u32, m: usize) -> f64 {
        match self.flavor {
            Flavor::Samko(_) => grid.volume(&DyadicCube { level, index: [0, 0] }),
            Flavor::KomoriShirai(w) => w.masses().level(level)[m],
            Flavor::General { w1, .. } => w1.masses().level(level)[m],
        }
    }
}

/// `max_Q w₁(Q)^{1/p−1/q} (∫_Q |f|^q dw₂)^{1/q}` over all dyadic cubes.
///
/// # Panics
///
/// Panics if `f` and the weights live on different grids.
pub fn morrey_norm(f: &GridFunction, params: &MorreyParams) -> f64 {
    let g = f.grid();
    let w2 = params.w2();
    assert_eq!(g, w2.grid(), "function and weight live on different grids");
    let (p, q) = (params.p, params.q);
    let leaves: Vec<f64> = g
        .to_morton(f.values())
        .iter()
        .zip(w2.morton_cell_masses())
        .map(|(v, m)| v.abs().powf(q) * m)
        .collect();
    let integrals = Pyramid::from_morton(&g, leaves);
    let e = 1.0 / p - 1.0 / q;
    let mut best = 0.0f64;
    for level in 0..=g.depth() {
        for (m, &int) in integrals.level(level).iter().enumerate() {
            if int > 0.0 {
                let v = params.scale_mass(&g, level, m).powf(e) * int.powf(1.0 / q);
                best = best.max(v);
            }
        }
    }
    best
}

/// Samko-type weak Morrey norm
/// `max_Q max_t |Q|^{1/p−1/q} t w({x ∈ Q : |f| ≥ t})^{1/q}`.
///
/// The thresholds `t` range over the attained values of `|f|`, where the
/// supremum over `t` is reached as `t` increases to a value.
pub fn weak_morrey_norm(f: &GridFunction, p: f64, q: f64, w: &Weight) -> Result<f64> {
    check_exponents(p, q)?;
    let g = f.grid();
    if g != w.grid() {
        return Err(Error::Invalid("function and weight live on different grids".into()));
    }
    let items: Vec<(f64, f64)> = g
        .to_morton(f.values())
        .iter()
        .zip(w.morton_cell_masses())
        .map(|(v, &m)| (v.abs(), m))
        .collect();
    let e = 1.0 / p - 1.0 / q;
    let mut best = 0.0f64;
    for_each_sorted_cube(&g, &g.root(), items, |it| it.0, |cube, sorted| {
        let scale = g.volume(&cube).powf(e);
        let mut mass = 0.0;
        for &(t, m) in sorted.iter().rev() {
            mass += m;
            if t > 0.0 {
                best = best.max(scale * t * mass.powf(1.0 / q));
            }
        }
    });
    Ok(best)
}

/// `max_Q Φ_{p,q,w}(Q) ((1/w(Q)) ∫_Q |f|^s dw)^{1/s}`.
pub fn local_average_term(f: &GridFunction, p: f64, q: f64, s: f64, w: &Weight) -> Result<f64> {
    check_exponents(p, q)?;
    if !(s > 0.0 && s <= q) {
        return Err(Error::Domain(format!("need 0 < s <= q, got s={s}, q={q}")));
    }
    let g = f.grid();
    if g != w.grid() {
        return Err(Error::Invalid("function and weight live on different grids".into()));
    }
    let leaves: Vec<f64> = g
        .to_morton(f.values())
        .iter()
        .zip(w.morton_cell_masses())
        .map(|(v, m)| v.abs().powf(s) * m)
        .collect();
    let integrals = Pyramid::from_morton(&g, leaves);
    let phis = phi_pyramid(p, q, w);
    let mut best = 0.0f64;
    for level in 0..=g.depth() {
        let masses = w.masses().level(level);
        for (m, &int) in integrals.level(level).iter().enumerate() {
            best = best.max(phis[level as usize][m] * (int / masses[m]).powf(1.0 / s));
        }
    }
    Ok(best)
}
