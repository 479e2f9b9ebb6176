//! Free energies `E(ρ) = ∫F(ρ) + ∫V dρ + ½∫(W*ρ) dρ`, their first variations and dissipations.

mod kernel;
mod potential;
mod table;

pub(crate) use kernel::Convolver;
pub use kernel::{BumpProfile, BumpSpec, HkKernel, Kernel, NONCONVEX_SHIFT};
pub use potential::Potential;
pub use table::Table;

use crate::error::{Error, Result};
use crate::measures::{Domain, GridMeasure, MeasureRef, ParticleMeasure};

/// Internal energy density `F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Internal {
    None,
    /// `scale · ρ log ρ`.
    Entropy { scale: f64 },
    /// `scale · ρ^m`.
    Power { m: f64, scale: f64 },
}

impl Internal {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Internal::None => 0.0,
            Internal::Entropy { scale } => {
                if r > 0.0 { scale * r * r.ln() } else { 0.0 }
            }
            Internal::Power { m, scale } => scale * r.powf(m),
        }
    }

    /// `F'(ρ)`; `−∞` for the entropy at vacuum.
    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            Internal::None => 0.0,
            Internal::Entropy { scale } => scale * (r.ln() + 1.0),
            Internal::Power { m, scale } => {
                if r > 0.0 { scale * m * r.powf(m - 1.0) } else if m == 1.0 { scale } else { 0.0 }
            }
        }
    }

    /// `ρ F''(ρ)`, the effective diffusivity.
    pub fn diffusivity(&self, r: f64) -> f64 {
        match *self {
            Internal::None => 0.0,
            Internal::Entropy { scale } => scale,
            Internal::Power { m, scale } => {
                if r > 0.0 { scale * m * (m - 1.0) * r.powf(m - 1.0) } else { 0.0 }
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Internal::None)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyModel {
    pub internal: Internal,
    pub potential: Potential,
    pub interaction: Kernel,
    wasserstein_p: f64,
    conjugate_q: f64,
}

impl EnergyModel {
    /// `wasserstein_p` is the metric exponent; the velocity law uses its conjugate.
    pub fn new(internal: Internal, potential: Potential, interaction: Kernel, wasserstein_p: f64) -> Result<Self> {
        if !(wasserstein_p > 1.0 && wasserstein_p.is_finite()) {
            return Err(Error::InvalidExponent(wasserstein_p));
        }
        match internal {
            Internal::Entropy { scale } if !(scale > 0.0) => {
                return Err(Error::InvalidModel(format!("entropy scale must be positive, got {scale}")));
            }
            Internal::Power { m, .. } if !(m >= 1.0) => {
                return Err(Error::InvalidModel(format!("power exponent m must be at least 1, got {m}")));
            }
            Internal::Power { scale, .. } if !(scale > 0.0) => {
                return Err(Error::InvalidModel(format!("power scale must be positive, got {scale}")));
            }
            _ => {}
        }
        let conjugate_q = wasserstein_p / (wasserstein_p - 1.0);
        Ok(EnergyModel { internal, potential, interaction, wasserstein_p, conjugate_q })
    }

    /// Quadratic-cost model.
    pub fn quadratic(internal: Internal, potential: Potential, interaction: Kernel) -> Result<Self> {
        Self::new(internal, potential, interaction, 2.0)
    }

    pub fn wasserstein_p(&self) -> f64 {
        self.wasserstein_p
    }

    pub fn conjugate_q(&self) -> f64 {
        self.conjugate_q
    }
}

fn require_particle_compatible(model: &EnergyModel) -> Result<()> {
    if model.internal.is_none() {
        Ok(())
    } else {
        Err(Error::Unsupported("internal energy needs a density, not atoms".into()))
    }
}

pub fn energy<'a>(model: &EnergyModel, mu: impl Into<MeasureRef<'a>>) -> Result<f64> {
    match mu.into() {
        MeasureRef::Grid(g) => Ok(grid_energy(model, g)),
        MeasureRef::Particles(p) => {
            require_particle_compatible(model)?;
            Ok(particle_energy(model, p.domain(), p.positions(), p.weights()))
        }
    }
}

fn grid_energy(model: &EnergyModel, g: &GridMeasure) -> f64 {
    let h = g.cell_width();
    let rho = g.density();
    let mut internal = 0.0;
    let mut external = 0.0;
    for (i, &r) in rho.iter().enumerate() {
        internal += model.internal.value(r);
        if !model.potential.is_zero() {
            external += model.potential.value(g.center(i)) * r;
        }
    }
    let interaction = if model.interaction.is_zero() {
        0.0
    } else {
        0.5 * model.interaction.convolve(g).iter().zip(rho).map(|(c, r)| c * r).sum::<f64>()
    };
    (internal + external + interaction) * h
}

pub(crate) fn particle_energy(model: &EnergyModel, domain: &Domain, xs: &[f64], ws: &[f64]) -> f64 {
    let mut e = 0.0;
    for (&x, &w) in xs.iter().zip(ws) {
        e += w * model.potential.value(x);
        if !model.interaction.is_zero() {
            let mut row = 0.0;
            for (&y, &v) in xs.iter().zip(ws) {
                row += v * model.interaction.value(domain.displacement(x, y));
            }
            e += 0.5 * w * row;
        }
    }
    e
}

/// `ξ_i = F'(ρ_i) + V(x_i) + (W*ρ)_i`, the exact gradient of the discrete energy divided by the cell width.
pub fn first_variation(model: &EnergyModel, g: &GridMeasure) -> Vec<f64> {
    let conv = if model.interaction.is_zero() { None } else { Some(model.interaction.convolve(g)) };
    g.density()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut xi = model.internal.derivative(r);
            if !model.potential.is_zero() {
                xi += model.potential.value(g.center(i));
            }
            if let Some(c) = &conv {
                xi += c[i];
            }
            xi
        })
        .collect()
}

/// Centered difference of `ξ` at every cell, one-sided at interval ends and next to vacuum.
fn centered_gradient(domain: &Domain, xi: &[f64], h: f64) -> Vec<f64> {
    let n = xi.len();
    let torus = domain.is_torus();
    (0..n)
        .map(|i| {
            let prev = if i > 0 { Some(i - 1) } else if torus { Some(n - 1) } else { None };
            let next = if i + 1 < n { Some(i + 1) } else if torus { Some(0) } else { None };
            let usable = |k: Option<usize>| k.filter(|&k| xi[k].is_finite());
            if !xi[i].is_finite() {
                return 0.0;
            }
            match (usable(prev), usable(next)) {
                (Some(a), Some(b)) if a != b => (xi[b] - xi[a]) / (2.0 * h),
                (Some(a), _) if a != i => (xi[i] - xi[a]) / h,
                (_, Some(b)) if b != i => (xi[b] - xi[i]) / h,
                _ => 0.0,
            }
        })
        .collect()
}

/// `G^q`: `Σ ρ_i |Dξ_i|^q h` on grids, `Σ ω_i |v_i|^q` for atoms.
pub fn dissipation<'a>(model: &EnergyModel, mu: impl Into<MeasureRef<'a>>) -> Result<f64> {
    let q = model.conjugate_q();
    match mu.into() {
        MeasureRef::Grid(g) => {
            let xi = first_variation(model, g);
            let d = centered_gradient(g.domain(), &xi, g.cell_width());
            Ok(g.density()
                .iter()
                .zip(&d)
                .filter(|(r, _)| **r > 0.0)
                .map(|(r, d)| r * d.abs().powf(q))
                .sum::<f64>()
                * g.cell_width())
        }
        MeasureRef::Particles(p) => {
            require_particle_compatible(model)?;
            let v = particle_velocities(model, p.domain(), p.positions(), p.weights());
            Ok(p.weights().iter().zip(&v).map(|(w, v)| w * v.abs().powf(q)).sum())
        }
    }
}

/// Velocities `−V'(x_i) − Σ_j ω_j W'(x_i − x_j)` of a particle system.
pub fn particle_velocities(model: &EnergyModel, domain: &Domain, xs: &[f64], ws: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let mut f = model.potential.derivative(x);
            if !model.interaction.is_zero() {
                for (&y, &w) in xs.iter().zip(ws) {
                    f += w * model.interaction.derivative(domain.displacement(x, y));
                }
            }
            -f
        })
        .collect()
}

pub fn particle_measure_velocities(model: &EnergyModel, p: &ParticleMeasure) -> Vec<f64> {
    particle_velocities(model, p.domain(), p.positions(), p.weights())
}

/// Face velocities `u = −sign(Dξ) |Dξ|^{q−1}`. On the torus face `k` sits between cells
/// `k` and `k+1 (mod n)`; on intervals only the `n − 1` interior faces are returned.
/// Faces next to a cell with non-finite `ξ` carry no velocity.
pub fn face_velocities(domain: &Domain, xi: &[f64], h: f64, conjugate_q: f64) -> Vec<f64> {
    let n = xi.len();
    let faces = if domain.is_torus() { n } else { n.saturating_sub(1) };
    (0..faces)
        .map(|k| {
            let (a, b) = (xi[k], xi[(k + 1) % n]);
            if !(a.is_finite() && b.is_finite()) {
                return 0.0;
            }
            let d = (b - a) / h;
            -d.signum() * d.abs().powf(conjugate_q - 1.0)
        })
        .collect()
}

pub fn velocity_field(model: &EnergyModel, g: &GridMeasure) -> Vec<f64> {
    face_velocities(g.domain(), &first_variation(model, g), g.cell_width(), model.conjugate_q())
}
