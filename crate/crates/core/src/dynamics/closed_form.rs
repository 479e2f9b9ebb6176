use crate::error::{Error, Result};
use crate::measures::{Domain, ParticleMeasure};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonUniqueCurve {
    /// Stays at `½(δ_{−1/2} + δ_{1/2})` forever.
    Stationary,
    /// Leaves the same initial measure and collapses onto `δ_0`.
    Collapsing,
}

/// Separation `x_2 − x_1` along the collapsing curve.
pub fn collapsing_gap(t: f64) -> f64 {
    if t <= 2.0 / 3.0 {
        1.0 - 9.0 / 16.0 * t * t
    } else {
        0.75 * (-(t - 2.0 / 3.0)).exp()
    }
}

/// The two explicit curves of maximal slope that start from `½(δ_{−1/2} + δ_{1/2})`
/// under the non-convex interaction.
pub fn closed_form_nonuniq(which: NonUniqueCurve, domain: Domain, t: f64) -> Result<ParticleMeasure> {
    if !(t >= 0.0) {
        return Err(Error::InvalidModel(format!("time must be non-negative, got {t}")));
    }
    let half_gap = match which {
        NonUniqueCurve::Stationary => 0.5,
        NonUniqueCurve::Collapsing => 0.5 * collapsing_gap(t),
    };
    ParticleMeasure::new(domain, vec![-half_gap, half_gap], vec![0.5, 0.5])
}
