//! Numerical LaSalle harness: energy decay, maximal-slope balance, omega-limits and
//! convergence to the stationary set, evaluated on trajectory records.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::TrajectoryRecord;
use crate::energetics::{energy, EnergyModel};
use crate::equilibria::{distance_to_set, EquilibriumSet, Metric};
use crate::error::{Error, Result};
use crate::measures::{bounded_lipschitz, Measure};

/// Per-step energy slack `factor · (Δt · max G^q + Δx² · max|E|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlackRule {
    pub factor: f64,
    pub cell_width: Option<f64>,
}

impl Default for SlackRule {
    fn default() -> Self {
        SlackRule { factor: 10.0, cell_width: None }
    }
}

impl SlackRule {
    pub fn for_record(record: &TrajectoryRecord) -> Self {
        SlackRule { factor: 10.0, cell_width: record.cell_width }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyMonotone {
    pub pass: bool,
    /// Largest increase `E_{k+1} − E_k` (0 when the energy never rises).
    pub worst_step: f64,
    pub worst_index: Option<usize>,
    /// First row at which the increase exceeds its slack.
    pub failed_index: Option<usize>,
}

pub fn check_energy_monotone(record: &TrajectoryRecord, slack: &SlackRule) -> EnergyMonotone {
    let rows = &record.rows;
    let e_scale = rows.iter().map(|r| r.energy.abs()).fold(0.0, f64::max);
    let dx = slack.cell_width.or(record.cell_width).unwrap_or(0.0);
    let mut worst_step = 0.0;
    let mut worst_index = None;
    let mut failed_index = None;
    for k in 0..rows.len().saturating_sub(1) {
        let rise = rows[k + 1].energy - rows[k].energy;
        let dt = rows[k + 1].t - rows[k].t;
        let g = rows[k].dissipation.max(rows[k + 1].dissipation);
        let allowed = slack.factor * (dt * g + dx * dx * e_scale) + 1e-13 * (1.0 + e_scale);
        if rise > worst_step {
            worst_step = rise;
            worst_index = Some(k + 1);
        }
        if rise > allowed && failed_index.is_none() {
            failed_index = Some(k + 1);
        }
    }
    EnergyMonotone { pass: failed_index.is_none() && rows.len() >= 2, worst_step, worst_index, failed_index }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MsResidual {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub sup: f64,
    /// Largest snapshot spacing used by the metric-derivative estimates.
    pub h: f64,
}

/// `r_k = (E_{k+1} − E_k)/Δt + |ρ'|^p(t_k)/p + G^q(t_k)/q` on rows with a metric-derivative estimate.
pub fn ms_residual(record: &TrajectoryRecord, p: f64, window: Option<(f64, f64)>) -> Result<MsResidual> {
    let q = p / (p - 1.0);
    let rows = &record.rows;
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut times = Vec::new();
    let mut values = Vec::new();
    for k in 0..rows.len().saturating_sub(1) {
        let r = &rows[k];
        if !r.metric_derivative.is_finite() || r.t < lo || r.t > hi {
            continue;
        }
        let dt = rows[k + 1].t - r.t;
        let de = (rows[k + 1].energy - r.energy) / dt;
        times.push(r.t);
        values.push(de + r.metric_derivative.powf(p) / p + r.dissipation / q);
    }
    if values.is_empty() {
        return Err(Error::InvalidMeasure("record carries no metric-derivative estimates in the window".into()));
    }
    let h = record
        .snapshots
        .windows(2)
        .map(|w| rows[w[1].row].t - rows[w[0].row].t)
        .fold(0.0, f64::max);
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(MsResidual { times, values, sup, h })
}

/// Trapezoidal estimate of `∫ G^q dt` over the record.
pub fn gq_integral(record: &TrajectoryRecord) -> f64 {
    record
        .rows
        .windows(2)
        .map(|w| 0.5 * (w[0].dissipation + w[1].dissipation) * (w[1].t - w[0].t))
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaLimit {
    pub representatives: Vec<Measure>,
    /// Time of each representative snapshot.
    pub times: Vec<f64>,
    pub cluster_count: usize,
    /// Largest distance between two snapshots of the same cluster.
    pub scatter: f64,
    pub cluster_tol: f64,
    pub tail_size: usize,
}

fn tail_indices(n: usize, fraction: f64) -> std::ops::Range<usize> {
    let len = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
    n - len..n
}

/// Single-linkage clusters of the tail snapshots under the bounded-Lipschitz distance. The
/// default `cluster_tol` is five times the largest nearest-neighbour distance in the tail.
pub fn extract_omega_limit(record: &TrajectoryRecord, tail_fraction: f64, cluster_tol: Option<f64>) -> Result<OmegaLimit> {
    let range = tail_indices(record.snapshots.len(), tail_fraction);
    if range.len() < 10 {
        return Err(Error::InvalidMeasure(format!(
            "tail holds {} snapshots, at least 10 are needed",
            range.len()
        )));
    }
    let tail: Vec<&Measure> = record.snapshots[range.clone()].iter().map(|s| &s.measure).collect();
    let m = tail.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let dist: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| bounded_lipschitz(tail[i], tail[j]))
        .collect::<Result<_>>()?;
    let mut matrix = vec![vec![0.0; m]; m];
    for (&(i, j), &d) in pairs.iter().zip(&dist) {
        matrix[i][j] = d;
        matrix[j][i] = d;
    }
    // late-time self-scatter: the largest nearest-neighbour distance among tail snapshots
    let tol = cluster_tol.unwrap_or_else(|| {
        let nn = (0..m)
            .map(|i| (0..m).filter(|&j| j != i).map(|j| matrix[i][j]).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        (5.0 * nn).max(1e-10)
    });
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut i = i;
        while parent[i] != r {
            let next = parent[i];
            parent[i] = r;
            i = next;
        }
        r
    }
    for (&(i, j), &d) in pairs.iter().zip(&dist) {
        if d <= tol {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..m {
        let r = find(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => clusters[k].push(i),
            None => {
                roots.push(r);
                clusters.push(vec![i]);
            }
        }
    }
    let mut scatter = 0.0f64;
    let mut representatives = Vec::new();
    let mut times = Vec::new();
    for c in &clusters {
        for &i in c {
            for &j in c {
                scatter = scatter.max(matrix[i][j]);
            }
        }
        let medoid = *c
            .iter()
            .min_by(|&&i, &&j| {
                let si: f64 = c.iter().map(|&k| matrix[i][k]).sum();
                let sj: f64 = c.iter().map(|&k| matrix[j][k]).sum();
                si.total_cmp(&sj).then(i.cmp(&j))
            })
            .unwrap();
        representatives.push(tail[medoid].clone());
        times.push(record.snapshot_time(range.start + medoid));
    }
    Ok(OmegaLimit { representatives, times, cluster_count: clusters.len(), scatter, cluster_tol: tol, tail_size: m })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Convergence {
    pub pass: bool,
    pub metric: String,
    pub final_distance: f64,
    /// `(t, distance)` over the checked window.
    pub distances: Vec<(f64, f64)>,
}

/// Distance to the set stays below `tol` over the final `window` fraction of snapshots, with
/// non-increasing maxima over consecutive thirds of the window.
pub fn check_convergence_to_set(
    record: &TrajectoryRecord,
    eqs: &EquilibriumSet,
    metric: Metric,
    tol: f64,
    window: f64,
    translation_quotient: bool,
) -> Result<Convergence> {
    let range = tail_indices(record.snapshots.len(), window);
    let distances = record.snapshots[range.clone()]
        .par_iter()
        .map(|s| distance_to_set(&s.measure, eqs, metric, translation_quotient))
        .collect::<Result<Vec<_>>>()?;
    let times: Vec<f64> = range.map(|k| record.snapshot_time(k)).collect();
    let below = distances.iter().all(|d| *d < tol);
    let third = distances.len().div_ceil(3).max(1);
    let maxima: Vec<f64> = distances.chunks(third).map(|c| c.iter().copied().fold(0.0, f64::max)).collect();
    let settled = maxima.windows(2).all(|w| w[1] <= w[0] + 1e-10 + 1e-6 * w[0]);
    Ok(Convergence {
        pass: below && settled,
        metric: metric.name(),
        final_distance: *distances.last().unwrap_or(&f64::NAN),
        distances: times.into_iter().zip(distances).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    /// Coefficient of determination of the log-linear fit.
    pub goodness: f64,
    pub points: usize,
}

/// Least-squares slope of `log d(t)` over `window`; values below `1e-13` are ignored.
pub fn fit_exponential_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, d)| *t >= window.0 && *t <= window.1 && *d >= 1e-13)
        .map(|&(t, d)| (t, d.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidMeasure("fewer than two usable points for the rate fit".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stl: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let sll: f64 = pts.iter().map(|p| (p.1 - ml).powi(2)).sum();
    if stt <= 0.0 {
        return Err(Error::InvalidMeasure("rate window has no time spread".into()));
    }
    let slope = stl / stt;
    let goodness = if sll > 0.0 { (stl * stl) / (stt * sll) } else { 1.0 };
    Ok(RateFit { rate: -slope, goodness, points: pts.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyLimit {
    /// Mean energy over the last tenth of the rows.
    pub e_infinity: f64,
    /// Energy of the known stationary state nearest to the final snapshot.
    pub e_representative: f64,
    pub pass: bool,
    pub note: String,
}

pub fn check_energy_limit(
    record: &TrajectoryRecord,
    eqs: &EquilibriumSet,
    model: &EnergyModel,
    tol: f64,
    continuous: bool,
) -> Result<EnergyLimit> {
    let range = tail_indices(record.rows.len(), 0.1);
    let tail = &record.rows[range];
    let e_infinity = tail.iter().map(|r| r.energy).sum::<f64>() / tail.len() as f64;
    let last = record.final_measure().ok_or_else(|| Error::InvalidMeasure("record has no snapshots".into()))?;
    let nearest = eqs
        .members
        .iter()
        .map(|m| bounded_lipschitz(last, &m.measure).map(|d| (d, m)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(Error::EmptySet)?;
    let e_representative = energy(model, &nearest.1.measure)?;
    let spread = tail.iter().map(|r| (r.energy - e_infinity).abs()).fold(0.0, f64::max);
    if spread > tol {
        return Ok(EnergyLimit {
            e_infinity,
            e_representative,
            pass: false,
            note: format!("tail energy still varies by {spread:e}; record not converged"),
        });
    }
    let pass = if continuous {
        (e_representative - e_infinity).abs() <= tol
    } else {
        e_representative <= e_infinity + tol
    };
    Ok(EnergyLimit { e_infinity, e_representative, pass, note: nearest.1.label.clone() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentCheck {
    pub name: String,
    pub pass: bool,
    pub worst: f64,
    pub failed_index: Option<usize>,
}

/// `M₂(t_{k+1}) ≤ M₂(t_k) + tol` at every row.
pub fn check_second_moment_monotone(record: &TrajectoryRecord, tol: f64) -> MomentCheck {
    let mut worst = 0.0f64;
    let mut failed_index = None;
    for (k, w) in record.rows.windows(2).enumerate() {
        let rise = w[1].second_moment - w[0].second_moment;
        worst = worst.max(rise);
        if rise > tol && failed_index.is_none() {
            failed_index = Some(k + 1);
        }
    }
    MomentCheck { name: "second_moment_monotone".into(), pass: failed_index.is_none(), worst, failed_index }
}

/// Recorded mass defect and the mass of every snapshot stay within `bound`.
pub fn check_mass_conservation(record: &TrajectoryRecord, bound: f64) -> MomentCheck {
    let mut worst = 0.0f64;
    let mut failed_index = None;
    for (k, r) in record.rows.iter().enumerate() {
        worst = worst.max(r.mass_defect);
        if r.mass_defect > bound && failed_index.is_none() {
            failed_index = Some(k);
        }
    }
    for s in &record.snapshots {
        let d = (1.0 - s.measure.mass()).abs();
        worst = worst.max(d);
        if d > bound && failed_index.is_none() {
            failed_index = Some(s.row);
        }
    }
    MomentCheck { name: "mass_conservation".into(), pass: failed_index.is_none(), worst, failed_index }
}

/// Largest drift of the center of mass from its initial value.
pub fn check_center_of_mass(record: &TrajectoryRecord, tol: f64) -> MomentCheck {
    let m0 = record.rows.first().map(|r| r.mean).unwrap_or(0.0);
    let mut worst = 0.0f64;
    let mut failed_index = None;
    for (k, r) in record.rows.iter().enumerate() {
        let d = (r.mean - m0).abs();
        worst = worst.max(d);
        if d > tol && failed_index.is_none() {
            failed_index = Some(k);
        }
    }
    MomentCheck { name: "center_of_mass".into(), pass: failed_index.is_none(), worst, failed_index }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LasalleReport {
    pub energy_monotone: Option<EnergyMonotone>,
    pub ms_residual_sup: Option<f64>,
    pub gq_integral: Option<f64>,
    pub convergence: Option<Convergence>,
    pub omega_limit_clusters: Option<usize>,
    pub omega_limit_scatter: Option<f64>,
    pub energy_limit: Option<EnergyLimit>,
    pub moment_checks: Vec<MomentCheck>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

impl LasalleReport {
    pub fn record(&mut self, check: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict { check: check.into(), pass, detail: detail.into() });
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            let _ = writeln!(out, "  {} {:<28} {}", if v.pass { "PASS" } else { "FAIL" }, v.check, v.detail);
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }
}
