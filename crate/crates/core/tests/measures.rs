use minilp::{ComparisonOp, OptimizationDirection, Problem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wgf::measures::{
    bounded_lipschitz, cdf, grid_from_particles, moments, quantile, wasserstein_1, wasserstein_p, Domain, GridMeasure,
    ParticleMeasure,
};

fn unit() -> Domain {
    Domain::interval(0.0, 1.0, false).unwrap()
}

fn atoms(domain: Domain, pts: &[(f64, f64)]) -> ParticleMeasure {
    let xs = pts.iter().map(|p| p.0).collect();
    let ws = pts.iter().map(|p| p.1).collect();
    ParticleMeasure::normalized(domain, xs, ws).unwrap()
}

fn atom_list() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..1.0f64, 0.05..1.0f64), 1..=16)
}

/// Generalized inverse of an atomic CDF evaluated strictly inside a flat piece.
fn atomic_quantile(xs: &[f64], ws: &[f64], s: f64) -> f64 {
    let mut acc = 0.0;
    for (x, w) in xs.iter().zip(ws) {
        acc += w;
        if s < acc {
            return *x;
        }
    }
    *xs.last().unwrap()
}

/// `∫₀¹ |Q_a(s) − Q̃_b(s + θ)|^p ds` with the periodic lift `Q̃(u + k) = Q(u) + kL`.
fn lifted_cost(a: &ParticleMeasure, b: &ParticleMeasure, theta: f64, p: f64, period: f64) -> f64 {
    let mut cuts = vec![0.0, 1.0];
    let mut acc = 0.0;
    for w in a.weights() {
        acc += w;
        cuts.push(acc.min(1.0));
    }
    let mut acc = 0.0;
    for w in b.weights() {
        acc += w;
        for k in -2..=2 {
            let c = acc + k as f64 - theta;
            if c > 0.0 && c < 1.0 {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let s = 0.5 * (w[0] + w[1]);
        let u = s + theta;
        let k = u.floor();
        let qb = atomic_quantile(b.positions(), b.weights(), u - k) + k * period;
        let qa = atomic_quantile(a.positions(), a.weights(), s);
        total += len * (qa - qb).abs().powf(p);
    }
    total
}

/// Exact LP over function values at the merged support; `circle` adds the wrap-around constraint.
fn bl_by_lp(a: &ParticleMeasure, b: &ParticleMeasure, circle: Option<f64>) -> f64 {
    let mut pts: Vec<(f64, f64)> = a.positions().iter().zip(a.weights()).map(|(x, w)| (*x, *w)).collect();
    pts.extend(b.positions().iter().zip(b.weights()).map(|(x, w)| (*x, -*w)));
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (x, c) in pts {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += c,
            _ => merged.push((x, c)),
        }
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = merged.iter().map(|(_, c)| lp.add_var(*c, (-1.0, 1.0))).collect();
    let mut link = |i: usize, j: usize, d: f64| {
        lp.add_constraint(&[(vars[i], 1.0), (vars[j], -1.0)], ComparisonOp::Le, d);
        lp.add_constraint(&[(vars[j], 1.0), (vars[i], -1.0)], ComparisonOp::Le, d);
    };
    for i in 1..merged.len() {
        let d = merged[i].0 - merged[i - 1].0;
        link(i - 1, i, circle.map_or(d, |l| d.min(l - d)));
    }
    if let (Some(l), true) = (circle, merged.len() > 2) {
        let n = merged.len() - 1;
        let d = merged[n].0 - merged[0].0;
        link(0, n, d.min(l - d));
    }
    lp.solve().unwrap().objective()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn wasserstein_axioms_on_the_interval(a in atom_list(), b in atom_list(), c in atom_list()) {
        let (a, b, c) = (atoms(unit(), &a), atoms(unit(), &b), atoms(unit(), &c));
        for p in [1.5, 2.0, 3.0] {
            let ab = wasserstein_p(&a, &b, p).unwrap();
            prop_assert_eq!(ab, wasserstein_p(&b, &a, p).unwrap());
            prop_assert!(wasserstein_p(&a, &a, p).unwrap() <= 1e-10);
            let ac = wasserstein_p(&a, &c, p).unwrap();
            let cb = wasserstein_p(&c, &b, p).unwrap();
            prop_assert!(ab <= ac + cb + 1e-10, "p={} {} > {} + {}", p, ab, ac, cb);
        }
        let w1 = wasserstein_1(&a, &b).unwrap();
        prop_assert_eq!(w1, wasserstein_1(&b, &a).unwrap());
        prop_assert!(w1 <= wasserstein_1(&a, &c).unwrap() + wasserstein_1(&c, &b).unwrap() + 1e-10);
    }

    #[test]
    fn wasserstein_is_monotone_in_p(a in atom_list(), b in atom_list()) {
        let (a, b) = (atoms(unit(), &a), atoms(unit(), &b));
        let mut last = wasserstein_1(&a, &b).unwrap();
        for p in [1.25, 1.5, 2.0, 3.0, 6.0] {
            let w = wasserstein_p(&a, &b, p).unwrap();
            prop_assert!(last <= w + 1e-10, "W at p={} is {} below {}", p, w, last);
            last = w;
        }
    }

    #[test]
    fn bl_axioms_and_bound_by_w1(a in atom_list(), b in atom_list(), c in atom_list()) {
        let (a, b, c) = (atoms(unit(), &a), atoms(unit(), &b), atoms(unit(), &c));
        let ab = bounded_lipschitz(&a, &b).unwrap();
        prop_assert!((ab - bounded_lipschitz(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert!(bounded_lipschitz(&a, &a).unwrap() <= 1e-10);
        prop_assert!(ab <= bounded_lipschitz(&a, &c).unwrap() + bounded_lipschitz(&c, &b).unwrap() + 1e-10);
        prop_assert!(ab <= wasserstein_1(&a, &b).unwrap() + 1e-10);
    }

    #[test]
    fn bl_is_bounded_by_w1_on_wide_intervals(a in atom_list(), b in atom_list()) {
        let wide = Domain::interval(-5.0, 5.0, false).unwrap();
        let stretch = |v: &[(f64, f64)]| v.iter().map(|(x, w)| (10.0 * x - 5.0, *w)).collect::<Vec<_>>();
        let (a, b) = (atoms(wide, &stretch(&a)), atoms(wide, &stretch(&b)));
        prop_assert!(bounded_lipschitz(&a, &b).unwrap() <= wasserstein_1(&a, &b).unwrap() + 1e-10);
    }

    #[test]
    fn torus_distance_never_exceeds_the_lift(a in atom_list(), b in atom_list()) {
        let t = Domain::unit_torus();
        let (ta, tb) = (atoms(t, &a), atoms(t, &b));
        let (ia, ib) = (atoms(unit(), &a), atoms(unit(), &b));
        for p in [1.5, 2.0] {
            prop_assert!(wasserstein_p(&ta, &tb, p).unwrap() <= wasserstein_p(&ia, &ib, p).unwrap() + 1e-10);
        }
        prop_assert!(bounded_lipschitz(&ta, &tb).unwrap() <= bounded_lipschitz(&ia, &ib).unwrap() + 1e-10);
    }

    #[test]
    fn torus_distance_is_symmetric(a in atom_list(), b in atom_list()) {
        let t = Domain::unit_torus();
        let (a, b) = (atoms(t, &a), atoms(t, &b));
        let d = wasserstein_p(&a, &b, 2.0).unwrap();
        prop_assert!((d - wasserstein_p(&b, &a, 2.0).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn quantile_inverts_cdf_at_points_of_increase(a in atom_list()) {
        let a = atoms(unit(), &a);
        for &x in a.positions() {
            prop_assert_eq!(quantile(&a, cdf(&a, x)).unwrap(), x);
        }
    }

    #[test]
    fn binning_preserves_mass(a in prop::collection::vec((0.0..1.0f64, 0.05..1.0f64), 10), n in 1usize..200) {
        let a = atoms(unit(), &a);
        let g = grid_from_particles(&a, n).unwrap();
        prop_assert!((g.mass() - 1.0).abs() <= 1e-12);
        prop_assert!((moments(&g).mean - moments(&a).mean).abs() <= 1.0 / n as f64);
    }
}

#[test]
fn quantile_inverts_cdf_on_grids() {
    let g = GridMeasure::from_fn(unit(), 64, |x| 1.0 + x * x).unwrap();
    for i in 0..64 {
        let x = g.center(i);
        assert!((quantile(&g, cdf(&g, x)).unwrap() - x).abs() < 1e-12);
    }
}

#[test]
fn torus_shift_minimization_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let torus = Domain::unit_torus();
    let random = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(1..=12);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let mut units: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=40)).collect();
        let total: u32 = units.iter().sum();
        // weights on the 1/2048 lattice so every kink of the shift cost lies on the scan grid
        let mut ws: Vec<f64> = units.iter_mut().map(|u| (*u * 2048 / total) as f64 / 2048.0).collect();
        let rest = 1.0 - ws.iter().sum::<f64>();
        ws[0] += rest;
        ParticleMeasure::new(torus, xs, ws).unwrap()
    };
    for _ in 0..50 {
        let (a, b) = (random(&mut rng), random(&mut rng));
        let brute = (0..=4096)
            .map(|k| lifted_cost(&a, &b, -1.0 + k as f64 / 2048.0, 2.0, 1.0))
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        let fast = wasserstein_p(&a, &b, 2.0).unwrap();
        assert!((fast - brute).abs() <= 1e-8, "{fast} vs {brute}");
    }
}

#[test]
fn interval_wasserstein_matches_the_quantile_integral() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let pts = |rng: &mut ChaCha8Rng| (0..rng.gen_range(1..=16)).map(|_| (rng.gen::<f64>(), rng.gen_range(0.05..1.0))).collect::<Vec<_>>();
        let (a, b) = (atoms(unit(), &pts(&mut rng)), atoms(unit(), &pts(&mut rng)));
        for p in [1.5, 2.0, 4.0] {
            let oracle = lifted_cost(&a, &b, 0.0, p, 1.0).powf(1.0 / p);
            assert!((wasserstein_p(&a, &b, p).unwrap() - oracle).abs() < 1e-12);
        }
    }
}

#[test]
fn bl_agrees_with_linear_program() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..60 {
        let circle = trial % 2 == 1;
        let (domain, scale) = if circle { (Domain::torus(3.0).unwrap(), 3.0) } else { (Domain::interval(0.0, 4.0, false).unwrap(), 4.0) };
        let pts = |rng: &mut ChaCha8Rng| {
            (0..rng.gen_range(1..=16)).map(|_| (scale * rng.gen::<f64>(), rng.gen_range(0.05..1.0))).collect::<Vec<_>>()
        };
        let (a, b) = (atoms(domain, &pts(&mut rng)), atoms(domain, &pts(&mut rng)));
        let lp = bl_by_lp(&a, &b, circle.then_some(3.0));
        let fast = bounded_lipschitz(&a, &b).unwrap();
        assert!((fast - lp).abs() <= 1e-6, "trial {trial}: {fast} vs LP {lp}");
    }
}

#[test]
fn single_atom_and_symmetric_pair_examples() {
    let d = Domain::interval(-2.0, 2.0, false).unwrap();
    let a = ParticleMeasure::dirac(d, -0.3).unwrap();
    let b = ParticleMeasure::dirac(d, 0.9).unwrap();
    assert!((wasserstein_p(&a, &b, 2.0).unwrap() - 1.2).abs() < 1e-15);
    let pair = ParticleMeasure::new(d, vec![-0.5, 0.5], vec![0.5, 0.5]).unwrap();
    let origin = ParticleMeasure::dirac(d, 0.0).unwrap();
    assert!((wasserstein_p(&pair, &origin, 2.0).unwrap() - 0.5).abs() < 1e-15);
    for h in [1e-3, 0.5, 1.9] {
        let shifted = ParticleMeasure::dirac(d, h).unwrap();
        assert!((bounded_lipschitz(&origin, &shifted).unwrap() - h).abs() < 1e-12);
    }
}

#[test]
fn uniform_second_moment_on_symmetric_interval() {
    let g = GridMeasure::uniform(Domain::interval(-1.0, 1.0, false).unwrap(), 50).unwrap();
    let m = moments(&g);
    assert!((m.second_moment - 1.0 / 3.0).abs() < 1e-14);
    assert!(m.variance >= -1e-12);
}
