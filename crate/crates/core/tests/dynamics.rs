use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wgf::dynamics::{
    closed_form_nonuniq, collapsing_gap, evolve_grid, evolve_particles, evolve_selfsimilar_pme, metric_derivative_estimate,
    GridControls, NonUniqueCurve, ParticleControls, RecordSchedule, SelfSimilarTransform, TrajectoryRecord,
};
use wgf::energetics::{BumpSpec, EnergyModel, Internal, Kernel, Potential};
use wgf::equilibria::barenblatt;
use wgf::measures::{bounded_lipschitz, wasserstein_1, Domain, GridMeasure, Measure, ParticleMeasure};

fn heat() -> EnergyModel {
    EnergyModel::quadratic(Internal::Entropy { scale: 1.0 }, Potential::Zero, Kernel::Zero).unwrap()
}

fn bounded_confidence(radius: f64) -> EnergyModel {
    EnergyModel::quadratic(Internal::None, Potential::Zero, Kernel::hk(BumpSpec::smooth(radius)).unwrap()).unwrap()
}

fn nonconvex() -> EnergyModel {
    EnergyModel::quadratic(Internal::None, Potential::Zero, Kernel::NonConvex).unwrap()
}

fn grid(m: &Measure) -> &GridMeasure {
    m.as_grid().unwrap()
}

#[test]
fn heat_flow_on_the_circle_flattens_and_dissipates() {
    let rho0 = GridMeasure::from_fn(Domain::unit_torus(), 64, |x| 1.0 + 0.8 * (2.0 * PI * x).sin() + 0.1 * (6.0 * PI * x).cos()).unwrap();
    let controls = GridControls { schedule: RecordSchedule::Uniform { count: 50 }, ..Default::default() };
    let rec = evolve_grid(&heat(), &rho0, 1.0, &controls).unwrap();
    for w in rec.rows.windows(2) {
        assert!(w[1].energy <= w[0].energy + 1e-14, "energy rose at t = {}", w[1].t);
        assert!(w[1].mass_defect <= 1e-10 * w[1].t.max(1.0));
    }
    for s in &rec.snapshots {
        assert!(grid(&s.measure).density().iter().all(|r| *r >= 0.0));
    }
    let last = grid(rec.final_measure().unwrap());
    let uniform = GridMeasure::uniform(Domain::unit_torus(), 64).unwrap();
    assert!(last.l1_distance(&uniform).unwrap() < 1e-12);
    assert!(rec.rows.last().unwrap().energy.abs() < 1e-12);
}

#[test]
fn two_bounded_confidence_agents_contract_to_their_midpoint() {
    let d = Domain::interval(-2.0, 2.0, false).unwrap();
    let x0 = ParticleMeasure::new(d, vec![-0.3, 0.3], vec![0.5, 0.5]).unwrap();
    let controls = ParticleControls { schedule: RecordSchedule::Uniform { count: 400 }, ..Default::default() };
    let rec = evolve_particles(&bounded_confidence(1.0), &x0, 80.0, &controls).unwrap();
    let mut last = f64::INFINITY;
    for r in &rec.rows {
        let p = r.particles.unwrap();
        assert!(p.diameter <= last);
        assert!(p.center_of_mass.abs() <= 1e-12);
        last = p.diameter;
    }
    assert!(last < 1e-6, "final diameter {last}");
    assert!(rec.warnings.is_empty());
}

#[test]
fn random_cloud_keeps_its_center_and_never_collides() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = Domain::interval(-3.0, 3.0, false).unwrap();
    let xs: Vec<f64> = (0..16).map(|_| rng.gen_range(-0.4..0.4)).collect();
    let ws: Vec<f64> = (0..16).map(|_| rng.gen_range(0.5..1.5)).collect();
    let x0 = ParticleMeasure::normalized(d, xs, ws).unwrap();
    let model = bounded_confidence(1.0);
    let Kernel::Hk(k) = &model.interaction else { unreachable!() };
    let lipschitz = k.lipschitz();
    let dt = 5e-3;
    let t_end = 10.0;
    let steps = (t_end / dt) as usize;
    let controls = ParticleControls { dt: Some(dt), schedule: RecordSchedule::Uniform { count: steps }, ..Default::default() };
    let rec = evolve_particles(&model, &x0, t_end, &controls).unwrap();
    assert_eq!(rec.rows.len(), steps + 1);
    let first = rec.rows[0].particles.unwrap();
    for w in rec.rows.windows(2) {
        let (a, b) = (w[0].particles.unwrap(), w[1].particles.unwrap());
        assert!((b.center_of_mass - first.center_of_mass).abs() <= 1e-10);
        assert!(w[1].second_moment <= w[0].second_moment + 1e-12);
        let floor = first.min_gap * (-lipschitz * w[1].t).exp() * (1.0 - 1e-6);
        assert!(b.min_gap >= floor, "gap {} below {floor} at t = {}", b.min_gap, w[1].t);
        assert!(b.diameter <= a.diameter + 1e-12);
    }
    assert!(rec.warnings.is_empty(), "{:?}", rec.warnings);
}

#[test]
fn separated_clusters_do_not_move() {
    let d = Domain::interval(-5.0, 5.0, false).unwrap();
    let x0 = ParticleMeasure::new(d, vec![-3.0, -0.5, 2.5], vec![0.2, 0.5, 0.3]).unwrap();
    let rec = evolve_particles(&bounded_confidence(1.0), &x0, 5.0, &ParticleControls::default()).unwrap();
    for s in &rec.snapshots {
        assert_eq!(s.measure.as_particles().unwrap().positions(), x0.positions());
    }
    assert!(rec.rows.iter().all(|r| r.dissipation == 0.0));
}

#[test]
fn self_similar_exponent() {
    let t = SelfSimilarTransform::new(2.0).unwrap();
    assert!((t.alpha - 1.0 / 3.0).abs() < 1e-15);
    assert!((SelfSimilarTransform::new(3.0).unwrap().alpha - 0.25).abs() < 1e-15);
    let (tau, y) = t.to_rescaled(8.0, 4.0);
    let (back_t, back_x) = t.to_physical(tau, y);
    assert!((back_t - 8.0).abs() < 1e-12 && (back_x - 4.0).abs() < 1e-12);
    assert!((y - 2.0).abs() < 1e-12);
}

#[test]
fn barenblatt_is_held_in_place() {
    let n = 256;
    let b = barenblatt(2.0, n, 3.0).unwrap();
    let controls = GridControls { schedule: RecordSchedule::Uniform { count: 10 }, ..Default::default() };
    let rec = evolve_selfsimilar_pme(2.0, &b, 10.0, &controls).unwrap();
    let h = b.cell_width();
    for s in &rec.snapshots {
        assert!(grid(&s.measure).l1_distance(&b).unwrap() < 5.0 * h * h);
    }
}

#[test]
fn nonunique_curve_examples() {
    let d = Domain::interval(-1.0, 1.0, false).unwrap();
    let pair = ParticleMeasure::new(d, vec![-0.5, 0.5], vec![0.5, 0.5]).unwrap();
    for which in [NonUniqueCurve::Stationary, NonUniqueCurve::Collapsing] {
        assert_eq!(closed_form_nonuniq(which, d, 0.0).unwrap(), pair);
    }
    assert_eq!(closed_form_nonuniq(NonUniqueCurve::Stationary, d, 7.0).unwrap(), pair);
    assert!((collapsing_gap(2.0 / 3.0) - 0.75).abs() < 1e-15);
    let c = closed_form_nonuniq(NonUniqueCurve::Collapsing, d, 2.0 / 3.0).unwrap();
    assert!((c.positions()[1] - c.positions()[0] - 0.75).abs() < 1e-15);
    let late = closed_form_nonuniq(NonUniqueCurve::Collapsing, d, 40.0).unwrap();
    assert!(wasserstein_1(&late, &ParticleMeasure::dirac(d, 0.0).unwrap()).unwrap() < 1e-16);
    for t in [0.1f64, 0.5, 1.0, 3.0] {
        let x1: f64 = if t <= 2.0 / 3.0 { -0.5 + 9.0 / 32.0 * t * t } else { -0.375 * (-(t - 2.0f64 / 3.0)).exp() };
        let p = closed_form_nonuniq(NonUniqueCurve::Collapsing, d, t).unwrap();
        assert!((p.positions()[0] - x1).abs() < 1e-15 && (p.positions()[1] + x1).abs() < 1e-15);
    }
    assert!(closed_form_nonuniq(NonUniqueCurve::Collapsing, d, -1.0).is_err());
}

#[test]
fn metric_speed_on_the_collapsing_curve() {
    let d = Domain::interval(-1.0, 1.0, false).unwrap();
    let h = 1e-4;
    let t = 1.0 / 3.0;
    let times = [t - h, t, t + h];
    let curve = times.iter().map(|&s| closed_form_nonuniq(NonUniqueCurve::Collapsing, d, s).unwrap().into()).collect();
    let rec = TrajectoryRecord::from_curve(&nonconvex(), &times, curve).unwrap();
    let gap = collapsing_gap(t);
    let expected = 0.5 * Kernel::NonConvex.derivative(gap).abs();
    assert!((metric_derivative_estimate(&rec, 1).unwrap() - expected).abs() < 1e-4);
}

#[test]
fn metric_speed_of_a_stationary_curve_is_zero() {
    let d = Domain::interval(-1.0, 1.0, false).unwrap();
    let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.25).collect();
    let curve = times.iter().map(|&s| closed_form_nonuniq(NonUniqueCurve::Stationary, d, s).unwrap().into()).collect();
    let rec = TrajectoryRecord::from_curve(&nonconvex(), &times, curve).unwrap();
    for k in 0..times.len() {
        assert_eq!(metric_derivative_estimate(&rec, k).unwrap(), 0.0);
    }
    assert!(rec.rows.iter().all(|r| r.dissipation == 0.0));
}

#[test]
fn metric_speed_of_a_translating_profile() {
    let n = 400;
    let d = Domain::interval(-2.0, 2.0, false).unwrap();
    let bump = |x: f64| if x.abs() < 0.5 { (PI * x).cos().powi(2) } else { 0.0 };
    let c = 0.3;
    let step = 2.0 * 4.0 / n as f64 / c;
    let times: Vec<f64> = (0..6).map(|k| k as f64 * step).collect();
    let curve = times.iter().map(|&s| GridMeasure::from_fn(d, n, |x| bump(x - c * s)).unwrap().into()).collect();
    let rec = TrajectoryRecord::from_curve(&heat(), &times, curve).unwrap();
    for k in 0..times.len() {
        let v = metric_derivative_estimate(&rec, k).unwrap();
        assert!((v - c).abs() < 1e-6, "index {k}: {v}");
    }
}

fn kuramoto_symmetric_run(n: usize, t_end: f64) -> TrajectoryRecord {
    let model = EnergyModel::quadratic(Internal::Entropy { scale: 1.0 }, Potential::Zero, Kernel::Kuramoto { kappa: 4.0 }).unwrap();
    let rho0 = GridMeasure::from_fn(Domain::unit_torus(), n, |x| 1.0 + 0.5 * (2.0 * PI * (x - 0.5)).cos()).unwrap();
    let controls = GridControls { schedule: RecordSchedule::Uniform { count: 10 }, ..Default::default() };
    evolve_grid(&model, &rho0, t_end, &controls).unwrap()
}

#[test]
fn reflection_symmetry_is_preserved() {
    let rec = kuramoto_symmetric_run(128, 1.0);
    for s in &rec.snapshots {
        let d = grid(&s.measure).density();
        let worst = (0..d.len()).map(|i| (d[i] - d[d.len() - 1 - i]).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-10, "asymmetry {worst:e}");
    }
}

#[test]
fn refinement_shrinks_the_self_distance_at_first_order() {
    let finals: Vec<GridMeasure> = [128, 256, 512]
        .iter()
        .map(|&n| grid(kuramoto_symmetric_run(n, 0.25).final_measure().unwrap()).clone())
        .collect();
    let coarse = bounded_lipschitz(&finals[0], &finals[1]).unwrap();
    let fine = bounded_lipschitz(&finals[1], &finals[2]).unwrap();
    let order = (coarse / fine).log2();
    assert!(order >= 1.0, "observed order {order} ({coarse:e} then {fine:e})");
}

#[test]
fn interval_flows_conserve_mass() {
    let model = EnergyModel::quadratic(
        Internal::Entropy { scale: 0.25 },
        Potential::Bistable { a: 1.0, b: 1.0 },
        Kernel::QuadraticAttraction { kappa: 1.0 },
    )
    .unwrap();
    let d = Domain::interval(-3.0, 3.0, true).unwrap();
    let rho0 = GridMeasure::from_fn(d, 128, |x| (-(x - 0.4) * (x - 0.4) / 0.2).exp()).unwrap();
    let controls = GridControls { schedule: RecordSchedule::Uniform { count: 20 }, ..Default::default() };
    let rec = evolve_grid(&model, &rho0, 2.0, &controls).unwrap();
    for r in &rec.rows {
        assert!(r.mass_defect <= 1e-10 * r.t.max(1.0));
    }
    for w in rec.rows.windows(2) {
        assert!(w[1].energy <= w[0].energy + 1e-12);
    }
}
