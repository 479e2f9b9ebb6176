//! Browser bindings for three small experiments: noisy Kuramoto relaxation, porous-medium
//! relaxation to the Barenblatt profile, and the two curves of maximal slope leaving the same
//! pair of atoms. Every entry point returns a JSON string for the page to plot.

use std::f64::consts::PI;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use wgf::dynamics::{
    closed_form_nonuniq, evolve_grid, evolve_particles, evolve_selfsimilar_pme, GridControls, NonUniqueCurve,
    ParticleControls, RecordSchedule, TrajectoryRecord,
};
use wgf::energetics::{energy, EnergyModel, Internal, Kernel, Potential};
use wgf::equilibria::{barenblatt, kuramoto_sigma, kuramoto_state, uniform_state};
use wgf::measures::{bounded_lipschitz, Domain, GridMeasure};

fn js(e: wgf::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

#[derive(Serialize)]
struct Series {
    t: Vec<f64>,
    energy: Vec<f64>,
    distance: Vec<f64>,
}

fn series(rec: &TrajectoryRecord, target: &GridMeasure) -> Result<Series, JsError> {
    let mut out = Series { t: Vec::new(), energy: Vec::new(), distance: Vec::new() };
    for s in &rec.snapshots {
        let g = s.measure.as_grid().ok_or_else(|| JsError::new("expected a density"))?;
        out.t.push(rec.rows[s.row].t);
        out.energy.push(rec.rows[s.row].energy);
        out.distance.push(bounded_lipschitz(g, target).map_err(js)?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct DensityRun {
    x: Vec<f64>,
    initial: Vec<f64>,
    last: Vec<f64>,
    target: Vec<f64>,
    target_label: String,
    series: Series,
    note: String,
}

/// Noisy Kuramoto flow on the unit circle from `1 + amplitude·cos(2π(x − ½))`.
#[wasm_bindgen]
pub fn kuramoto(kappa: f64, amplitude: f64, t_end: f64, cells: usize) -> Result<String, JsError> {
    if !(amplitude.abs() < 1.0) {
        return Err(JsError::new("amplitude must lie in (-1, 1)"));
    }
    let torus = Domain::unit_torus();
    let model = EnergyModel::quadratic(Internal::Entropy { scale: 1.0 }, Potential::Zero, Kernel::Kuramoto { kappa }).map_err(js)?;
    let rho0 = GridMeasure::from_fn(torus, cells, |x| 1.0 + amplitude * (2.0 * PI * (x - 0.5)).cos()).map_err(js)?;
    let controls = GridControls {
        schedule: RecordSchedule::Geometric { first: 1e-3, count: 80 },
        steady_tol: Some(1e-9),
        ..Default::default()
    };
    let rec = evolve_grid(&model, &rho0, t_end, &controls).map_err(js)?;
    let (target, target_label, note) = if kappa > 2.0 {
        let sigma = kuramoto_sigma(kappa, 1e-12, true).map_err(js)?;
        let star = kuramoto_state(kappa, 0.5, cells).map_err(js)?;
        let e = energy(&model, &star).map_err(js)?;
        (star, "synchronized state".to_string(), format!("kappa > 2: sigma = {sigma:.10}, E(rho*) = {e:.6} < 0 = E(uniform)"))
    } else {
        (uniform_state(torus, cells).map_err(js)?, "uniform state".to_string(), "kappa <= 2: the uniform state is the only stationary state".to_string())
    };
    let last = rec.final_measure().and_then(|m| m.as_grid()).ok_or_else(|| JsError::new("empty record"))?;
    to_json(&DensityRun {
        x: rho0.centers(),
        initial: rho0.density().to_vec(),
        last: last.density().to_vec(),
        target: target.density().to_vec(),
        target_label,
        series: series(&rec, &target)?,
        note,
    })
}

/// Porous-medium flow (`m = 2`) in self-similar variables from a centred box of the given width.
#[wasm_bindgen]
pub fn porous_medium(width: f64, tau_end: f64, cells: usize) -> Result<String, JsError> {
    if !(width > 0.0 && width < 4.0) {
        return Err(JsError::new("box width must lie in (0, 4)"));
    }
    let line = Domain::interval(-3.0, 3.0, true).map_err(js)?;
    let rho0 = GridMeasure::from_fn(line, cells, |x| if x.abs() <= 0.5 * width { 1.0 } else { 0.0 }).map_err(js)?;
    let controls = GridControls { schedule: RecordSchedule::Uniform { count: 60 }, ..Default::default() };
    let rec = evolve_selfsimilar_pme(2.0, &rho0, tau_end, &controls).map_err(js)?;
    let target = barenblatt(2.0, cells, 3.0).map_err(js)?;
    let last = rec.final_measure().and_then(|m| m.as_grid()).ok_or_else(|| JsError::new("empty record"))?;
    to_json(&DensityRun {
        x: rho0.centers(),
        initial: rho0.density().to_vec(),
        last: last.density().to_vec(),
        target: target.density().to_vec(),
        target_label: "Barenblatt profile".into(),
        series: series(&rec, &target)?,
        note: format!("C = 3^(1/3)/4 = {:.10}", 3f64.cbrt() / 4.0),
    })
}

#[derive(Serialize)]
struct Curves {
    t: Vec<f64>,
    stationary: Vec<[f64; 2]>,
    collapsing: Vec<[f64; 2]>,
    simulated: Vec<[f64; 2]>,
    energy_stationary: Vec<f64>,
    energy_collapsing: Vec<f64>,
}

/// The resting pair `½(δ_{−1/2} + δ_{1/2})` under the non-convex kernel: the stationary curve,
/// the collapsing closed form and an RK4 run that follows the explicit departure.
#[wasm_bindgen]
pub fn nonunique_curves(t_end: f64, samples: usize) -> Result<String, JsError> {
    if !(t_end > 0.0) || samples < 2 {
        return Err(JsError::new("need a positive horizon and at least two samples"));
    }
    let line = Domain::interval(-2.0, 2.0, false).map_err(js)?;
    let model = EnergyModel::quadratic(Internal::None, Potential::Zero, Kernel::NonConvex).map_err(js)?;
    let times: Vec<f64> = (0..=samples).map(|k| t_end * k as f64 / samples as f64).collect();
    let mut out = Curves {
        t: times.clone(),
        stationary: Vec::new(),
        collapsing: Vec::new(),
        simulated: Vec::new(),
        energy_stationary: Vec::new(),
        energy_collapsing: Vec::new(),
    };
    for &t in &times {
        let s = closed_form_nonuniq(NonUniqueCurve::Stationary, line, t).map_err(js)?;
        let c = closed_form_nonuniq(NonUniqueCurve::Collapsing, line, t).map_err(js)?;
        out.stationary.push([s.positions()[0], s.positions()[1]]);
        out.energy_stationary.push(energy(&model, &s).map_err(js)?);
        // a collapsed pair is a single atom
        let p = c.positions();
        out.collapsing.push([p[0], *p.last().unwrap_or(&p[0])]);
        out.energy_collapsing.push(energy(&model, &c).map_err(js)?);
    }
    let start = closed_form_nonuniq(NonUniqueCurve::Stationary, line, 0.0).map_err(js)?;
    let controls = ParticleControls {
        dt: Some(1e-3),
        schedule: RecordSchedule::Times(times[1..].to_vec()),
        departure: Some(0.05),
        ..Default::default()
    };
    let rec = evolve_particles(&model, &start, t_end, &controls).map_err(js)?;
    for s in &rec.snapshots {
        let p = s.measure.as_particles().ok_or_else(|| JsError::new("expected atoms"))?.positions();
        out.simulated.push([p[0], *p.last().unwrap_or(&p[0])]);
    }
    to_json(&out)
}
