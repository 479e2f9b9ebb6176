use super::{particle_stats, RecordSchedule, Snapshot, TrajectoryRecord};
use crate::energetics::{dissipation, particle_energy, particle_velocities, EnergyModel, Kernel};
use crate::error::{Error, Result};
use crate::measures::{moments, Measure, ParticleMeasure};

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleControls {
    /// Fixed RK4 step; defaults to `1e-3 · R / max|ψ'|` for bounded-confidence kernels, `1e-3` otherwise.
    pub dt: Option<f64>,
    pub schedule: RecordSchedule,
    pub snapshot_stride: usize,
    /// For two atoms resting at a separation where the interaction gradient is only Hölder
    /// continuous, follow the explicit departing solution for this long before switching to RK4.
    pub departure: Option<f64>,
}

impl Default for ParticleControls {
    fn default() -> Self {
        ParticleControls { dt: None, schedule: RecordSchedule::default(), snapshot_stride: 1, departure: None }
    }
}

fn default_dt(model: &EnergyModel) -> f64 {
    match &model.interaction {
        Kernel::Hk(k) => {
            let r = k.spec().radius;
            let max_slope = (0..=2000)
                .map(|i| k.derivative(r * i as f64 / 2000.0).abs())
                .fold(0.0, f64::max);
            if max_slope > 0.0 { 1e-3 * r / max_slope } else { 1e-3 }
        }
        _ => 1e-3,
    }
}

/// Solution leaving a Hölder equilibrium: with `|W'| ≈ c u^γ` at gap change `u`,
/// `u(t) = ((1 − γ) c t)^{1/(1 − γ)}`.
fn departure_offsets(c: f64, gamma: f64, t: f64) -> f64 {
    ((1.0 - gamma) * c * t).powf(1.0 / (1.0 - gamma))
}

/// Classic RK4 with a fixed step for `dx_i/dt = −V'(x_i) − Σ_j ω_j W'(x_i − x_j)`.
pub fn evolve_particles(
    model: &EnergyModel,
    x0: &ParticleMeasure,
    t_end: f64,
    controls: &ParticleControls,
) -> Result<TrajectoryRecord> {
    if !model.internal.is_none() {
        return Err(Error::Unsupported("particle flows cannot carry internal energy".into()));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidModel(format!("t_end must be positive, got {t_end}")));
    }
    let domain = *x0.domain();
    let ws = x0.weights().to_vec();
    let mut xs = x0.positions().to_vec();
    let n = xs.len();
    let dt = controls.dt.unwrap_or_else(|| default_dt(model));
    if !(dt > 0.0) {
        return Err(Error::InvalidModel(format!("time step must be positive, got {dt}")));
    }
    let total_steps = (t_end / dt).round().max(1.0) as usize;
    let dt = t_end / total_steps as f64;
    let mut record_steps: Vec<usize> = controls
        .schedule
        .times(t_end)
        .iter()
        .map(|t| ((t / dt).round() as usize).clamp(1, total_steps))
        .collect();
    record_steps.dedup();

    let departure = match (controls.departure, n) {
        (Some(duration), 2) => {
            let gap = xs[1] - xs[0];
            model.interaction.departure_profile(gap).map(|(c, g)| (duration, c, g, xs.clone()))
        }
        _ => None,
    };

    let velocity = |x: &[f64]| particle_velocities(model, &domain, x, &ws);
    let mut warnings = Vec::new();
    let mut states: Vec<(f64, Vec<f64>)> = vec![(0.0, xs.clone())];
    let mut energy_prev = particle_energy(model, &domain, &xs, &ws);
    let mut order_warned = false;
    let mut next = 0;
    let mut k = vec![vec![0.0; n]; 4];
    let mut tmp = vec![0.0; n];
    for step in 1..=total_steps {
        let t = step as f64 * dt;
        match &departure {
            Some((duration, c, gamma, start)) if t <= *duration + 1e-15 => {
                let u = departure_offsets(*c, *gamma, t);
                let wsum = ws[0] + ws[1];
                xs[0] = start[0] + ws[1] / wsum * u;
                xs[1] = start[1] - ws[0] / wsum * u;
            }
            _ => {
                k[0] = velocity(&xs);
                for i in 0..n {
                    tmp[i] = xs[i] + 0.5 * dt * k[0][i];
                }
                k[1] = velocity(&tmp);
                for i in 0..n {
                    tmp[i] = xs[i] + 0.5 * dt * k[1][i];
                }
                k[2] = velocity(&tmp);
                for i in 0..n {
                    tmp[i] = xs[i] + dt * k[2][i];
                }
                k[3] = velocity(&tmp);
                for i in 0..n {
                    xs[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
                }
            }
        }
        if !order_warned && xs.windows(2).any(|w| w[1] < w[0]) {
            warnings.push(format!("particle order changed at t = {t}"));
            order_warned = true;
        }
        let e = particle_energy(model, &domain, &xs, &ws);
        if e > energy_prev + 10.0 * dt.powi(4) * (1.0 + e.abs()) + 1e-13 * (1.0 + e.abs()) {
            warnings.push(format!("energy increased by {:e} at t = {t}; consider a smaller step", e - energy_prev));
        }
        energy_prev = e;
        if next < record_steps.len() && record_steps[next] == step {
            let t_rec = if step == total_steps { t_end } else { t };
            states.push((t_rec, xs.clone()));
            next += 1;
        }
    }

    let stride = controls.snapshot_stride.max(1);
    let last = states.len() - 1;
    let mut rows = Vec::with_capacity(states.len());
    let mut snapshots = Vec::new();
    for (row, (t, x)) in states.into_iter().enumerate() {
        let stats = particle_stats(&x, &ws);
        let e = particle_energy(model, &domain, &x, &ws);
        let pm = ParticleMeasure::normalized(domain, x, ws.clone())?;
        let mom = moments(&pm);
        rows.push(super::DiagnosticsRow {
            t,
            energy: e,
            dissipation: dissipation(model, &pm)?,
            metric_derivative: f64::NAN,
            mean: mom.mean,
            second_moment: mom.second_moment,
            mass_defect: (1.0 - ws.iter().sum::<f64>()).abs(),
            particles: Some(stats),
        });
        if row % stride == 0 || row == last {
            snapshots.push(Snapshot { row, measure: Measure::Particles(pm) });
        }
    }
    let mut record = TrajectoryRecord {
        metric_p: model.wasserstein_p(),
        rows,
        snapshots,
        steps: total_steps,
        cell_width: None,
        warnings,
        steady_from: None,
    };
    record.fill_metric_derivatives()?;
    Ok(record)
}

