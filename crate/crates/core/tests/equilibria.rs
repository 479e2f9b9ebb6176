use std::f64::consts::PI;

use wgf::energetics::{dissipation, energy, BumpSpec, EnergyModel, Internal, Kernel, Potential};
use wgf::equilibria::{
    barenblatt, barenblatt_constant, barenblatt_support, dirac_lattice, distance_to_set, kuramoto_order_ratio,
    kuramoto_sigma, kuramoto_state, mckean_vlasov_fixed_point, uniform_state, weak_confinement_state, Equilibrium,
    EquilibriumSet, Metric, Provenance, SymmetryClass,
};
use wgf::measures::{bounded_lipschitz, moments, Domain, GridMeasure, ParticleMeasure};
use wgf::Error;

fn kuramoto(kappa: f64) -> EnergyModel {
    EnergyModel::quadratic(Internal::Entropy { scale: 1.0 }, Potential::Zero, Kernel::Kuramoto { kappa }).unwrap()
}

/// `I₁(σ)/I₀(σ)` from the power series of the modified Bessel functions.
fn bessel_ratio(sigma: f64) -> f64 {
    let x = 0.5 * sigma;
    let (mut i0, mut i1) = (0.0, 0.0);
    let mut term = 1.0;
    for k in 0..200 {
        let k = k as f64;
        if k > 0.0 {
            term *= x * x / (k * k);
        }
        i0 += term;
        i1 += term * x / (k + 1.0);
    }
    i1 / i0
}

fn closed(measure: impl Into<wgf::measures::Measure>, label: &str) -> Equilibrium {
    Equilibrium { measure: measure.into(), provenance: Provenance::ClosedForm, label: label.into() }
}

#[test]
fn uniform_state_examples() {
    let u = uniform_state(Domain::unit_torus(), 4).unwrap();
    assert_eq!(u.density(), &[1.0, 1.0, 1.0, 1.0]);
    let wide = uniform_state(Domain::torus(2.0).unwrap(), 8).unwrap();
    assert!(wide.density().iter().all(|r| (r - 0.5).abs() < 1e-15));
    assert!(uniform_state(Domain::interval(0.0, 1.0, false).unwrap(), 4).is_err());
    for kappa in [0.5, 2.0, 7.0] {
        let u = uniform_state(Domain::unit_torus(), 128).unwrap();
        assert!(dissipation(&kuramoto(kappa), &u).unwrap() <= 1e-24);
        assert!(energy(&kuramoto(kappa), &u).unwrap().abs() <= 1e-14);
    }
}

#[test]
fn order_ratio_matches_bessel_functions() {
    for sigma in [0.1, 1.0, 3.3, 10.0, 30.0] {
        assert!((kuramoto_order_ratio(sigma) - bessel_ratio(sigma)).abs() <= 1e-12, "sigma {sigma}");
    }
}

#[test]
fn kuramoto_sigma_examples() {
    assert_eq!(kuramoto_sigma(2.0, 1e-12, false).unwrap(), 0.0);
    assert_eq!(kuramoto_sigma(1.0, 1e-12, false).unwrap(), 0.0);
    assert!(matches!(kuramoto_sigma(2.0, 1e-12, true), Err(Error::NoNontrivialSolution(_))));
    let s4 = kuramoto_sigma(4.0, 1e-12, true).unwrap();
    assert!((s4 - 4.0 * bessel_ratio(s4)).abs() <= 1e-10);
    assert!((s4 / 4.0 - kuramoto_order_ratio(s4)).abs() <= 1e-10);
    // regression constant, independently reproduced from the Bessel-ratio root
    assert!((s4 - 3.325_848_099_017_03).abs() <= 1e-9, "{s4}");
    let mut last = 0.0;
    for k in 0..40 {
        let kappa = 2.05 + 0.5 * k as f64;
        let s = kuramoto_sigma(kappa, 1e-12, true).unwrap();
        assert!(s > last, "sigma not increasing at kappa {kappa}");
        last = s;
    }
    let (s8, s16) = (kuramoto_sigma(8.0, 1e-12, true).unwrap(), kuramoto_sigma(16.0, 1e-12, true).unwrap());
    assert!(s16 > s8 && s8 > s4);
}

#[test]
fn kuramoto_state_examples() {
    let model = kuramoto(4.0);
    for center in [0.5, 0.1, 0.87] {
        let rho = kuramoto_state(4.0, center, 1024).unwrap();
        // mean-zero identity in the chart centred at x*
        let first: f64 = rho
            .centers()
            .iter()
            .zip(rho.density())
            .map(|(&x, r)| {
                let d = (x - center + 0.5).rem_euclid(1.0) - 0.5;
                d * r * rho.cell_width()
            })
            .sum();
        // exact when x* is a symmetry point of the grid, O(h²) otherwise
        let aligned = (center * 2048.0f64).fract() == 0.0;
        let tol = if aligned { 1e-12 } else { 10.0 * rho.cell_width().powi(2) };
        assert!(first.abs() <= tol, "center {center}: {first:e}");
        assert!(dissipation(&model, &rho).unwrap() <= 1e-6);
        assert!(energy(&model, &rho).unwrap() < 0.0);
    }
    let base = dissipation(&model, &kuramoto_state(4.0, 0.0, 256).unwrap()).unwrap();
    for k in 1..8 {
        let shifted = kuramoto_state(4.0, k as f64 / 8.0, 256).unwrap();
        assert!((dissipation(&model, &shifted).unwrap() - base).abs() <= 1e-20);
    }
    assert!(kuramoto_state(1.5, 0.0, 64).is_err());
}

#[test]
fn barenblatt_examples() {
    let c = barenblatt_constant(2.0).unwrap();
    assert!((c - 3f64.cbrt() / 4.0).abs() <= 1e-10, "{c}");
    let alpha = 1.0 / 3.0;
    let r = barenblatt_support(2.0, alpha).unwrap();
    assert!((r - (2.0 * 2.0 * c / alpha).sqrt()).abs() <= 1e-12);
    let b = barenblatt(2.0, 1024, 3.0).unwrap();
    assert!((b.mass() - 1.0).abs() <= 1e-12);
    let d = b.density();
    assert!((0..d.len()).all(|i| (d[i] - d[d.len() - 1 - i]).abs() <= 1e-14));
    assert_eq!(d[0], 0.0);
    assert_eq!(d[d.len() - 1], 0.0);
    let pme = EnergyModel::quadratic(Internal::Power { m: 2.0, scale: 1.0 }, Potential::Confinement { alpha }, Kernel::Zero).unwrap();
    assert!(dissipation(&pme, &b).unwrap() <= 1e-6);
    assert!(matches!(barenblatt(2.0, 128, 1.0), Err(Error::SupportOverflow(_))));
    // other exponents keep unit mass on the exact profile
    for m in [1.5, 3.0] {
        assert!((barenblatt(m, 512, 4.0).unwrap().mass() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn weak_confinement_examples() {
    let s = weak_confinement_state(1, 2048, 16.0).unwrap();
    let exact_tail = 1.0 - 2.0 / PI * 16f64.atan();
    assert!((s.tail_mass - exact_tail).abs() <= 1e-12);
    assert!((s.tail_mass - 2.0 / (PI * 16.0)).abs() <= 1e-3);
    assert!(!s.in_p2);
    let model = EnergyModel::quadratic(Internal::Entropy { scale: 1.0 }, Potential::WeakLog { dim: 1 }, Kernel::Zero).unwrap();
    assert!(dissipation(&model, &s.measure).unwrap() <= 1e-6);
    assert!(weak_confinement_state(2, 256, 8.0).unwrap().in_p2);
}

#[test]
fn gibbs_iteration_without_interaction_is_one_step() {
    let d = Domain::interval(-3.0, 3.0, true).unwrap();
    let model = EnergyModel::quadratic(Internal::Entropy { scale: 0.5 }, Potential::Bistable { a: 1.0, b: 1.0 }, Kernel::Zero).unwrap();
    let init = GridMeasure::uniform(d, 200).unwrap();
    let eq = mckean_vlasov_fixed_point(&model, &init, 1.0, 50).unwrap();
    let Provenance::FixedPoint { iterations, residual } = eq.provenance else { panic!() };
    assert!(iterations <= 2 && residual <= 1e-12);
    let gibbs = GridMeasure::from_fn(d, 200, |x| (-(0.25 * x.powi(4) - 0.5 * x * x) / 0.5).exp()).unwrap();
    assert!(eq.measure.as_grid().unwrap().l1_distance(&gibbs).unwrap() <= 1e-12);
}

#[test]
fn desai_zwanzig_fixed_points_split_at_large_coupling() {
    let d = Domain::interval(-3.0, 3.0, true).unwrap();
    let solve = |kappa: f64, seed: f64| {
        let model = EnergyModel::quadratic(
            Internal::Entropy { scale: 0.25 },
            Potential::Bistable { a: 1.0, b: 1.0 },
            Kernel::QuadraticAttraction { kappa },
        )
        .unwrap();
        let init = GridMeasure::from_fn(d, 256, |x| (-(x - seed) * (x - seed) / 0.1).exp()).unwrap();
        let eq = mckean_vlasov_fixed_point(&model, &init, 0.5, 20_000).unwrap();
        let Provenance::FixedPoint { residual, .. } = eq.provenance else { panic!() };
        assert!(residual <= 1e-8, "residual {residual:e}");
        assert!(dissipation(&model, &eq.measure).unwrap() <= 1e-6);
        eq.measure.as_grid().unwrap().clone()
    };
    let strong: Vec<GridMeasure> = [0.0, 0.8, -0.8].iter().map(|&s| solve(2.0, s)).collect();
    assert!(bounded_lipschitz(&strong[0], &strong[1]).unwrap() > 0.05);
    assert!(bounded_lipschitz(&strong[1], &strong[2]).unwrap() > 0.05);
    assert!(moments(&strong[0]).mean.abs() < 1e-8);
    assert!((moments(&strong[1]).mean + moments(&strong[2]).mean).abs() < 1e-6);
    let weak: Vec<GridMeasure> = [0.0, 0.8, -0.8].iter().map(|&s| solve(0.1, s)).collect();
    assert!(bounded_lipschitz(&weak[0], &weak[1]).unwrap() < 1e-4);
    assert!(bounded_lipschitz(&weak[0], &weak[2]).unwrap() < 1e-4);
}

#[test]
fn dirac_lattice_examples() {
    let d = Domain::interval(-5.0, 5.0, false).unwrap();
    let hk = Kernel::hk(BumpSpec::smooth(1.0)).unwrap();
    let single = dirac_lattice(d, &[1.0], &[0.3], &hk).unwrap();
    assert_eq!(single.provenance, Provenance::DiracLattice);
    for k in [Kernel::NonConvex, Kernel::QuadraticAttraction { kappa: 2.0 }] {
        assert!(dirac_lattice(d, &[1.0], &[-1.0], &k).is_ok());
    }
    assert!(dirac_lattice(d, &[0.3, 0.7], &[-1.25, 1.25], &hk).is_ok());
    assert!(matches!(dirac_lattice(d, &[0.3, 0.7], &[-0.75, 0.75], &hk), Err(Error::NotStationary(_))));
    assert!(dirac_lattice(d, &[0.3, 0.6], &[-2.0, 2.0], &hk).is_err());
}

#[test]
fn distance_to_set_examples() {
    let torus = Domain::unit_torus();
    let star = kuramoto_state(4.0, 0.5, 256).unwrap();
    let u = uniform_state(torus, 256).unwrap();
    let mut set = EquilibriumSet::new(SymmetryClass::Translates);
    set.push(closed(star.clone(), "kuramoto"));
    assert_eq!(distance_to_set(&star, &set, Metric::BoundedLipschitz, false).unwrap(), 0.0);
    let plain = bounded_lipschitz(&u, &star).unwrap();
    let quotient = distance_to_set(&u, &set, Metric::BoundedLipschitz, true).unwrap();
    // fractional translates are interpolated, which smooths the member slightly
    assert!((plain - quotient).abs() <= 1e-4, "{plain} vs {quotient}");
    // a translate of a member is at distance zero modulo translations
    let moved = star.translate(0.25).unwrap();
    assert!(distance_to_set(&moved, &set, Metric::BoundedLipschitz, true).unwrap() <= 1e-8);
    assert!(distance_to_set(&moved, &set, Metric::BoundedLipschitz, false).unwrap() > 0.1);

    let line = Domain::interval(-2.0, 2.0, false).unwrap();
    let a = ParticleMeasure::dirac(line, 0.0).unwrap();
    let b = ParticleMeasure::dirac(line, 1.0).unwrap();
    let mu = ParticleMeasure::new(line, vec![0.2, 0.7], vec![0.5, 0.5]).unwrap();
    let mut pair = EquilibriumSet::new(SymmetryClass::LatticeFamily);
    pair.push(closed(a.clone(), "a"));
    pair.push(closed(b.clone(), "b"));
    for metric in [Metric::BoundedLipschitz, Metric::W1, Metric::Wp(2.0)] {
        let d = distance_to_set(&mu, &pair, metric, false).unwrap();
        assert!(d <= metric.distance(&mu, &a).unwrap() && d <= metric.distance(&mu, &b).unwrap());
    }
    assert!(matches!(
        distance_to_set(&mu, &EquilibriumSet::new(SymmetryClass::Singleton), Metric::W1, false),
        Err(Error::EmptySet)
    ));
}

#[test]
fn kuramoto_ordering_of_energies() {
    let model = kuramoto(4.0);
    let star = kuramoto_state(4.0, 0.5, 512).unwrap();
    let u = uniform_state(Domain::unit_torus(), 512).unwrap();
    assert!(energy(&model, &star).unwrap() < energy(&model, &u).unwrap());
    let set = EquilibriumSet::singleton(closed(star, "kuramoto"));
    assert!(set.max_dissipation(&model).unwrap() <= 1e-6);
}
