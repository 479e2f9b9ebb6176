//! Time integration: a positivity-preserving finite-volume scheme for densities, RK4 for
//! particle systems, the self-similar porous-medium rescaling and the explicit
//! non-unique curves of the non-convex interaction.

mod closed_form;
mod grid;
mod particles;
mod selfsimilar;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

pub use closed_form::{closed_form_nonuniq, collapsing_gap, NonUniqueCurve};
pub use grid::{evolve_grid, GridControls};
pub use particles::{evolve_particles, ParticleControls};
pub use selfsimilar::{evolve_selfsimilar_pme, SelfSimilarTransform};

use crate::energetics::{dissipation, energy, EnergyModel};
use crate::error::{Error, Result};
use crate::measures::{moments, wasserstein_p, Measure, MeasureRef};

/// When diagnostics rows are written.
#[derive(Clone, Debug, PartialEq)]
pub enum RecordSchedule {
    /// `count` equally spaced times ending at `t_end`.
    Uniform { count: usize },
    /// Log-spaced from `first` to `t_end`, denser early.
    Geometric { first: f64, count: usize },
    /// Explicit times; values beyond `t_end` are dropped and `t_end` is appended.
    Times(Vec<f64>),
}

impl Default for RecordSchedule {
    fn default() -> Self {
        RecordSchedule::Uniform { count: 200 }
    }
}

impl RecordSchedule {
    /// Strictly increasing positive times, the last one equal to `t_end`.
    pub fn times(&self, t_end: f64) -> Vec<f64> {
        let mut ts: Vec<f64> = match self {
            RecordSchedule::Uniform { count } => {
                let c = (*count).max(1);
                (1..=c).map(|k| t_end * k as f64 / c as f64).collect()
            }
            RecordSchedule::Geometric { first, count } => {
                let c = (*count).max(2);
                let first = first.min(t_end);
                let ratio = (t_end / first).ln() / (c - 1) as f64;
                (0..c).map(|k| first * (ratio * k as f64).exp()).collect()
            }
            RecordSchedule::Times(v) => v.iter().copied().filter(|&t| t > 0.0 && t < t_end).collect(),
        };
        ts.retain(|t| *t > 0.0 && *t < t_end * (1.0 - 1e-12));
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
        ts.push(t_end);
        ts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParticleStats {
    pub diameter: f64,
    pub min_gap: f64,
    pub center_of_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub energy: f64,
    /// `G^q`.
    pub dissipation: f64,
    /// Metric speed estimate; NaN where no snapshot is available.
    pub metric_derivative: f64,
    pub mean: f64,
    pub second_moment: f64,
    pub mass_defect: f64,
    pub particles: Option<ParticleStats>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub row: usize,
    pub measure: Measure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    /// Exponent of the Wasserstein metric the curve is measured in.
    pub metric_p: f64,
    pub rows: Vec<DiagnosticsRow>,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    /// Mesh width for grid flows.
    pub cell_width: Option<f64>,
    pub warnings: Vec<String>,
    /// Time after which a grid flow stopped stepping at a discrete fixed point.
    pub steady_from: Option<f64>,
}

pub(crate) fn particle_stats(xs: &[f64], ws: &[f64]) -> ParticleStats {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let total: f64 = ws.iter().sum();
    ParticleStats {
        diameter: sorted[sorted.len() - 1] - sorted[0],
        min_gap,
        center_of_mass: xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / total,
    }
}

pub(crate) fn diagnostics_row(model: &EnergyModel, t: f64, mu: MeasureRef<'_>) -> Result<DiagnosticsRow> {
    let (mom, mass, particles) = match mu {
        MeasureRef::Grid(g) => (moments(g), g.mass(), None),
        MeasureRef::Particles(p) => {
            (moments(p), p.total_weight(), Some(particle_stats(p.positions(), p.weights())))
        }
    };
    Ok(DiagnosticsRow {
        t,
        energy: energy(model, mu)?,
        dissipation: dissipation(model, mu)?,
        metric_derivative: f64::NAN,
        mean: mom.mean,
        second_moment: mom.second_moment,
        mass_defect: (1.0 - mass).abs(),
        particles,
    })
}

impl TrajectoryRecord {
    /// Builds a record from an explicit curve, every sample kept as a snapshot.
    pub fn from_curve(model: &EnergyModel, times: &[f64], measures: Vec<Measure>) -> Result<Self> {
        if times.len() != measures.len() {
            return Err(Error::InvalidMeasure("one measure per time is required".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMeasure("times must be strictly increasing".into()));
        }
        let rows = times
            .par_iter()
            .zip(measures.par_iter())
            .map(|(&t, m)| diagnostics_row(model, t, m.into()))
            .collect::<Result<Vec<_>>>()?;
        let snapshots = measures.into_iter().enumerate().map(|(row, measure)| Snapshot { row, measure }).collect();
        let mut rec = TrajectoryRecord {
            metric_p: model.wasserstein_p(),
            rows,
            snapshots,
            steps: times.len().saturating_sub(1),
            cell_width: None,
            warnings: Vec::new(),
            steady_from: None,
        };
        rec.fill_metric_derivatives()?;
        Ok(rec)
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.energy).collect()
    }

    pub fn snapshot_time(&self, index: usize) -> f64 {
        self.rows[self.snapshots[index].row].t
    }

    pub fn final_measure(&self) -> Option<&Measure> {
        self.snapshots.last().map(|s| &s.measure)
    }

    /// Writes metric-derivative estimates into every snapshot row.
    pub fn fill_metric_derivatives(&mut self) -> Result<()> {
        if self.snapshots.len() < 2 {
            return Ok(());
        }
        let estimates = (0..self.snapshots.len())
            .into_par_iter()
            .map(|k| metric_derivative_estimate(self, k))
            .collect::<Result<Vec<_>>>()?;
        for (k, v) in estimates.into_iter().enumerate() {
            let row = self.snapshots[k].row;
            self.rows[row].metric_derivative = v;
        }
        Ok(())
    }

    /// Diagnostics as CSV with columns `t,E,Gq,metric_deriv,mean,M2,mass_defect`.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("t,E,Gq,metric_deriv,mean,M2,mass_defect\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.t, r.energy, r.dissipation, r.metric_derivative, r.mean, r.second_moment, r.mass_defect
            );
        }
        out
    }
}

/// `W_p(ρ(t_{k+1}), ρ(t_{k−1})) / (t_{k+1} − t_{k−1})` over snapshots, one-sided at the ends.
pub fn metric_derivative_estimate(record: &TrajectoryRecord, index: usize) -> Result<f64> {
    let n = record.snapshots.len();
    if n < 2 || index >= n {
        return Err(Error::InvalidMeasure(format!("no neighbouring snapshots around index {index}")));
    }
    let (a, b) = if index == 0 {
        (0, 1)
    } else if index == n - 1 {
        (n - 2, n - 1)
    } else {
        (index - 1, index + 1)
    };
    let dt = record.snapshot_time(b) - record.snapshot_time(a);
    if !(dt > 0.0) {
        return Err(Error::InvalidMeasure("degenerate time step in metric derivative".into()));
    }
    let w = wasserstein_p(&record.snapshots[b].measure, &record.snapshots[a].measure, record.metric_p)?;
    Ok(w / dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_end_at_t_end() {
        for s in [
            RecordSchedule::Uniform { count: 10 },
            RecordSchedule::Geometric { first: 1e-3, count: 30 },
            RecordSchedule::Times(vec![0.5, 0.1, 3.0]),
        ] {
            let ts = s.times(2.0);
            assert_eq!(*ts.last().unwrap(), 2.0);
            assert!(ts.windows(2).all(|w| w[1] > w[0]));
            assert!(ts[0] > 0.0);
        }
    }
}
