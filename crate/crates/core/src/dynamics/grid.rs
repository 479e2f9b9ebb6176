use rayon::prelude::*;

use super::{diagnostics_row, RecordSchedule, Snapshot, TrajectoryRecord};
use crate::energetics::{energy, Convolver, EnergyModel, Internal};
use crate::error::{Error, Result};
use crate::measures::{Domain, GridMeasure, Measure};

#[derive(Clone, Debug, PartialEq)]
pub struct GridControls {
    /// `Δt ≤ cfl · h / max|u|`.
    pub cfl: f64,
    /// `Δt ≤ diffusion_number · h² / max(ρF''(ρ))`.
    pub diffusion_number: f64,
    pub max_steps: usize,
    pub schedule: RecordSchedule,
    /// Keep a snapshot at every `snapshot_stride`-th record (the last one is always kept).
    pub snapshot_stride: usize,
    pub mass_defect_bound: f64,
    /// Constant `C` in the per-step energy slack `C · Δt · Δx`.
    pub energy_slack: f64,
    /// Steps between energy/positivity/support monitors.
    pub monitor_stride: usize,
    pub min_dt: f64,
    pub max_dt: Option<f64>,
    /// Abort when mass reaches the outermost cells of an interval (compactly supported flows).
    pub guard_support: bool,
    /// Stop stepping once `‖dρ/dt‖₁` drops below this value; later records repeat the
    /// reached discrete fixed point.
    pub steady_tol: Option<f64>,
}

impl Default for GridControls {
    fn default() -> Self {
        GridControls {
            cfl: 0.4,
            diffusion_number: 0.4,
            max_steps: 50_000_000,
            schedule: RecordSchedule::default(),
            snapshot_stride: 1,
            mass_defect_bound: 1e-6,
            energy_slack: 10.0,
            monitor_stride: 50,
            min_dt: 1e-14,
            max_dt: None,
            guard_support: false,
            steady_tol: None,
        }
    }
}

/// Everything about the semi-discrete operator that does not change between steps.
struct Operator {
    torus: bool,
    n: usize,
    h: f64,
    q: f64,
    internal: Internal,
    potential: Vec<f64>,
    convolver: Option<Convolver>,
}

struct Rates {
    max_speed: f64,
    max_diffusivity: f64,
}

impl Operator {
    fn new(model: &EnergyModel, g: &GridMeasure) -> Self {
        let domain = g.domain();
        let potential = if model.potential.is_zero() {
            vec![0.0; g.n_cells()]
        } else {
            g.centers().iter().map(|&x| model.potential.value(x)).collect()
        };
        let convolver =
            (!model.interaction.is_zero()).then(|| Convolver::new(&model.interaction, domain, g.n_cells()));
        Operator {
            torus: domain.is_torus(),
            n: g.n_cells(),
            h: g.cell_width(),
            q: model.conjugate_q(),
            internal: model.internal,
            potential,
            convolver,
        }
    }

    /// Writes `dρ/dt` into `out` and reports the quantities that limit the step.
    fn rhs(&self, rho: &[f64], out: &mut [f64], xi: &mut Vec<f64>, flux: &mut Vec<f64>) -> Rates {
        let n = self.n;
        xi.clear();
        xi.extend(rho.iter().zip(&self.potential).map(|(&r, &v)| self.internal.derivative(r) + v));
        if let Some(c) = &self.convolver {
            for (x, c) in xi.iter_mut().zip(c.apply(rho)) {
                *x += c;
            }
        }
        let faces = if self.torus { n } else { n - 1 };
        flux.clear();
        let mut max_speed = 0.0f64;
        let mut max_diffusivity = 0.0f64;
        for k in 0..faces {
            let r = (k + 1) % n;
            let (a, b) = (xi[k], xi[r]);
            if !(a.is_finite() && b.is_finite()) {
                flux.push(0.0);
                continue;
            }
            let d = (b - a) / self.h;
            let u = if self.q == 2.0 { -d } else { -d.signum() * d.abs().powf(self.q - 1.0) };
            max_speed = max_speed.max(u.abs());
            let local = self.internal.diffusivity(rho[k]).max(self.internal.diffusivity(rho[r]));
            let eff = if self.q == 2.0 { local } else { (self.q - 1.0) * d.abs().max(1e-12).powf(self.q - 2.0) * local };
            max_diffusivity = max_diffusivity.max(eff);
            flux.push(if u > 0.0 { u * rho[k] } else { u * rho[r] });
        }
        for i in 0..n {
            let right = if i < faces { flux[i] } else { 0.0 };
            let left = if i > 0 {
                flux[i - 1]
            } else if self.torus {
                flux[n - 1]
            } else {
                0.0
            };
            out[i] = -(right - left) / self.h;
        }
        Rates { max_speed, max_diffusivity }
    }
}

fn abort(step: usize, time: f64, reason: impl Into<String>) -> Error {
    Error::NumericalAbort { step, time, reason: reason.into() }
}

/// Upwind finite volumes with SSP-RK2 stepping; periodic on the torus, zero-flux on intervals.
pub fn evolve_grid(model: &EnergyModel, rho0: &GridMeasure, t_end: f64, controls: &GridControls) -> Result<TrajectoryRecord> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidModel(format!("t_end must be positive, got {t_end}")));
    }
    if rho0.n_cells() < 3 {
        return Err(Error::InvalidMeasure("the scheme needs at least three cells".into()));
    }
    let domain: Domain = *rho0.domain();
    let op = Operator::new(model, rho0);
    let h = op.h;
    let n = op.n;
    let record_times = controls.schedule.times(t_end);
    let stride = controls.snapshot_stride.max(1);
    let mass0 = rho0.mass();

    let mut rho = rho0.density().to_vec();
    let mut stage = vec![0.0; n];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut xi = Vec::with_capacity(n);
    let mut flux = Vec::with_capacity(n);

    let mut kept: Vec<(f64, GridMeasure)> = vec![(0.0, rho0.clone())];
    let mut t = 0.0;
    let mut step = 0usize;
    let mut next_record = 0;
    let mut monitor_energy = energy(model, rho0)?;
    let mut elapsed_since_monitor = 0.0;
    let mut warnings = Vec::new();
    let mut steady_from = None;

    while next_record < record_times.len() {
        if step >= controls.max_steps {
            return Err(abort(step, t, format!("step budget of {} exhausted", controls.max_steps)));
        }
        let target = record_times[next_record];
        let rates = op.rhs(&rho, &mut k1, &mut xi, &mut flux);
        if let Some(tol) = controls.steady_tol {
            if step % controls.monitor_stride.max(1) == 0 && k1.iter().map(|v| v.abs()).sum::<f64>() * h < tol {
                steady_from = Some(t);
                warnings.push(format!("discrete steady state reached at t = {t}; later records repeat it"));
                for &tr in &record_times[next_record..] {
                    kept.push((tr, GridMeasure::unchecked(domain, rho.clone())?));
                }
                break;
            }
        }
        let mut dt = target - t;
        if rates.max_speed > 0.0 {
            dt = dt.min(controls.cfl * h / rates.max_speed);
        }
        if rates.max_diffusivity > 0.0 {
            dt = dt.min(controls.diffusion_number * h * h / rates.max_diffusivity);
        }
        if let Some(m) = controls.max_dt {
            dt = dt.min(m);
        }
        let mut accepted = false;
        for _ in 0..40 {
            if dt < controls.min_dt && dt < target - t {
                return Err(abort(step, t, format!("time step collapsed to {dt:e}")));
            }
            for i in 0..n {
                stage[i] = rho[i] + dt * k1[i];
            }
            if stage.iter().any(|&r| r < 0.0) {
                dt *= 0.5;
                continue;
            }
            op.rhs(&stage, &mut k2, &mut xi, &mut flux);
            let mut ok = true;
            for i in 0..n {
                let v = 0.5 * rho[i] + 0.5 * (stage[i] + dt * k2[i]);
                if v < 0.0 {
                    ok = false;
                    break;
                }
                k2[i] = v;
            }
            if ok {
                accepted = true;
                break;
            }
            dt *= 0.5;
        }
        if !accepted {
            return Err(abort(step, t, "positivity could not be restored by step halving"));
        }
        std::mem::swap(&mut rho, &mut k2);
        let hit = (target - (t + dt)).abs() <= 1e-12 * target.max(1.0);
        t = if hit { target } else { t + dt };
        step += 1;
        elapsed_since_monitor += dt;

        if step % controls.monitor_stride.max(1) == 0 || hit {
            let g = GridMeasure::unchecked(domain, rho.clone())?;
            let defect = (g.mass() - mass0).abs();
            if defect > controls.mass_defect_bound {
                return Err(abort(step, t, format!("mass defect {defect:e} exceeds {:e}", controls.mass_defect_bound)));
            }
            let e = energy(model, &g)?;
            let slack = controls.energy_slack * elapsed_since_monitor * h + 1e-12 * (1.0 + e.abs());
            if e > monitor_energy + slack {
                return Err(abort(step, t, format!("energy rose from {monitor_energy} to {e}")));
            }
            if controls.guard_support && !domain.is_torus() {
                let edge = rho[..2].iter().chain(&rho[n - 2..]).fold(0.0f64, |m, &r| m.max(r));
                if edge > 1e-10 {
                    return Err(Error::SupportOverflow(format!(
                        "mass reached the boundary of [{}, {}] at t = {t}; enlarge the domain",
                        domain.left(),
                        domain.right()
                    )));
                }
            }
            monitor_energy = e;
            elapsed_since_monitor = 0.0;
        }

        if hit {
            kept.push((t, GridMeasure::unchecked(domain, rho.clone())?));
            next_record += 1;
        }
    }
    if step == 0 {
        warnings.push("no time steps were taken".to_string());
    }

    let rows = kept
        .par_iter()
        .map(|(t, g)| diagnostics_row(model, *t, g.into()))
        .collect::<Result<Vec<_>>>()?;
    let snapshots = kept
        .into_iter()
        .enumerate()
        .filter(|(k, _)| k % stride == 0 || *k == rows.len() - 1)
        .map(|(row, (_, g))| Snapshot { row, measure: Measure::Grid(g) })
        .collect();
    let mut record = TrajectoryRecord {
        metric_p: model.wasserstein_p(),
        rows,
        snapshots,
        steps: step,
        cell_width: Some(h),
        warnings,
        steady_from,
    };
    record.fill_metric_derivatives()?;
    Ok(record)
}
