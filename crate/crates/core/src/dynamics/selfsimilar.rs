use super::{evolve_grid, GridControls, TrajectoryRecord};
use crate::energetics::{EnergyModel, Internal, Kernel, Potential};
use crate::equilibria::barenblatt_support;
use crate::error::{Error, Result};
use crate::measures::GridMeasure;

/// `τ = log t`, `y = x / t^α`, `ρ(t, x) = t^{−α} ρ̂(τ, y)` with `α = 1/(m + 1)` in one dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfSimilarTransform {
    pub m: f64,
    pub alpha: f64,
}

impl SelfSimilarTransform {
    pub fn new(m: f64) -> Result<Self> {
        if !(m >= 1.0) {
            return Err(Error::InvalidModel(format!("porous-medium exponent must be at least 1, got {m}")));
        }
        Ok(SelfSimilarTransform { m, alpha: 1.0 / ((m - 1.0) + 2.0) })
    }

    pub fn to_physical(&self, tau: f64, y: f64) -> (f64, f64) {
        let t = tau.exp();
        (t, y * t.powf(self.alpha))
    }

    pub fn to_rescaled(&self, t: f64, x: f64) -> (f64, f64) {
        (t.ln(), x / t.powf(self.alpha))
    }

    /// Physical density from the rescaled one at the same point.
    pub fn physical_density(&self, t: f64, rescaled: f64) -> f64 {
        t.powf(-self.alpha) * rescaled
    }

    /// Energy model of the rescaled flow: `∫ρ^m/(m−1) + (α/2)∫|y|²ρ`.
    pub fn model(&self) -> Result<EnergyModel> {
        EnergyModel::quadratic(
            Internal::Power { m: self.m, scale: 1.0 / (self.m - 1.0) },
            Potential::Confinement { alpha: self.alpha },
            Kernel::Zero,
        )
    }
}

/// Porous-medium flow in self-similar variables, returned in `τ`-time.
pub fn evolve_selfsimilar_pme(m: f64, rho0_hat: &GridMeasure, tau_end: f64, controls: &GridControls) -> Result<TrajectoryRecord> {
    if !(m > 1.0) {
        return Err(Error::InvalidModel(format!("porous-medium exponent must exceed 1, got {m}")));
    }
    let tr = SelfSimilarTransform::new(m)?;
    let domain = rho0_hat.domain();
    if domain.is_torus() {
        return Err(Error::Unsupported("the self-similar flow lives on an interval".into()));
    }
    let support = barenblatt_support(m, tr.alpha)?;
    let half = domain.left().abs().min(domain.right().abs());
    if half < 1.2 * support {
        return Err(Error::SupportOverflow(format!(
            "half-width {half} does not hold the stationary support {support} plus 20%; use at least {}",
            1.2 * support
        )));
    }
    let mut controls = controls.clone();
    controls.guard_support = true;
    evolve_grid(&tr.model()?, rho0_hat, tau_end, &controls)
}
