//! Candidate stationary states: closed forms, fixed-point solves and Dirac lattices.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use crate::energetics::{dissipation, energy, Convolver, EnergyModel, Internal, Kernel};
use crate::error::{Error, Result};
use crate::measures::{
    bounded_lipschitz, wasserstein_1, wasserstein_p, write_measure_csv, Distribution, Domain, GridMeasure, Measure,
    ParticleMeasure,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    FixedPoint { iterations: usize, residual: f64 },
    DiracLattice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryClass {
    Singleton,
    Translates,
    LatticeFamily,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    pub measure: Measure,
    pub provenance: Provenance,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumSet {
    pub members: Vec<Equilibrium>,
    pub symmetry_class: SymmetryClass,
}

impl EquilibriumSet {
    pub fn new(symmetry_class: SymmetryClass) -> Self {
        EquilibriumSet { members: Vec::new(), symmetry_class }
    }

    pub fn singleton(member: Equilibrium) -> Self {
        EquilibriumSet { members: vec![member], symmetry_class: SymmetryClass::Singleton }
    }

    pub fn push(&mut self, member: Equilibrium) {
        self.members.push(member);
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Largest dissipation over the members.
    pub fn max_dissipation(&self, model: &EnergyModel) -> Result<f64> {
        self.members
            .iter()
            .map(|m| dissipation(model, &m.measure))
            .try_fold(0.0f64, |acc, d| Ok(acc.max(d?)))
    }

    /// One CSV per member plus `manifest.json` with label, provenance, dissipation and energy.
    pub fn write_dir(&self, dir: &Path, model: &EnergyModel) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        #[derive(Serialize)]
        struct Entry<'a> {
            label: &'a str,
            file: String,
            provenance: &'a Provenance,
            dissipation: f64,
            energy: f64,
        }
        #[derive(Serialize)]
        struct Manifest<'a> {
            symmetry_class: SymmetryClass,
            note: &'static str,
            members: Vec<Entry<'a>>,
        }
        let mut members = Vec::new();
        for (k, m) in self.members.iter().enumerate() {
            let file = format!("member_{k:02}.csv");
            write_measure_csv(&dir.join(&file), &m.measure)?;
            members.push(Entry {
                label: &m.label,
                file,
                provenance: &m.provenance,
                dissipation: dissipation(model, &m.measure)?,
                energy: energy(model, &m.measure)?,
            });
        }
        let manifest = Manifest {
            symmetry_class: self.symmetry_class,
            note: "distances are to known candidate states, not to a certified complete stationary set",
            members,
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .map_err(|e| Error::io(path.display().to_string(), e))
    }
}

pub fn uniform_state(domain: Domain, n_cells: usize) -> Result<GridMeasure> {
    if !domain.is_torus() {
        return Err(Error::Unsupported("the uniform state is only stationary on the torus".into()));
    }
    GridMeasure::uniform(domain, n_cells)
}

const SIGMA_NODES: usize = 2048;

/// `∫cos(2πx) e^{σ cos(2πx)} dx / ∫e^{σ cos(2πx)} dx` by the periodic trapezoid rule.
pub fn kuramoto_order_ratio(sigma: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..SIGMA_NODES {
        let c = (2.0 * PI * k as f64 / SIGMA_NODES as f64).cos();
        let w = (sigma * (c - 1.0)).exp();
        num += c * w;
        den += w;
    }
    num / den
}

/// Positive root of `σ = κ · ratio(σ)`; zero when `κ ≤ 2` unless `strict`.
pub fn kuramoto_sigma(kappa: f64, tol: f64, strict: bool) -> Result<f64> {
    if !(kappa > 2.0) {
        return if strict { Err(Error::NoNontrivialSolution(kappa)) } else { Ok(0.0) };
    }
    let f = |s: f64| kappa * kuramoto_order_ratio(s) - s;
    let (mut lo, mut hi) = (tol, 10.0 * kappa);
    if f(lo) <= 0.0 {
        return Err(Error::NoNontrivialSolution(kappa));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let sigma = 0.5 * (lo + hi);
    let residual = f(sigma).abs();
    if residual > tol {
        return Err(Error::NotStationary(format!("sigma residual {residual:e} above {tol:e}")));
    }
    Ok(sigma)
}

/// `Z⁻¹ exp(σ(κ) cos(2π(x − x*)))` on the unit torus, normalized on the grid.
pub fn kuramoto_state(kappa: f64, center: f64, n_cells: usize) -> Result<GridMeasure> {
    let sigma = kuramoto_sigma(kappa, 1e-12, true)?;
    GridMeasure::from_fn(Domain::unit_torus(), n_cells, |x| (sigma * ((2.0 * PI * (x - center)).cos() - 1.0)).exp())
}

/// Gauss–Legendre rule on [−1, 1], 8 nodes.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

fn gauss(f: &impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    let w = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let mid = a + (k as f64 + 0.5) * w;
            GL8.iter().map(|(t, wt)| wt * f(mid + 0.5 * w * t)).sum::<f64>() * 0.5 * w
        })
        .sum()
}

/// Stationary profile `(C − b (y − c)²)₊^{1/(m−1)}` of `scale·ρ^m` against the quadratic
/// potential `a (y − c)²/2`, where `b = a / (2 · scale · m)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompactPowerProfile {
    pub m: f64,
    pub b: f64,
    pub c: f64,
    pub center: f64,
}

impl CompactPowerProfile {
    /// Unit-mass profile; `C` is found by bisection on the exact mass.
    pub fn new(m: f64, scale: f64, a: f64, center: f64) -> Result<Self> {
        if !(m > 1.0 && scale > 0.0 && a > 0.0) {
            return Err(Error::InvalidModel(format!(
                "compact power profile needs m > 1, scale > 0 and a > 0 (got {m}, {scale}, {a})"
            )));
        }
        let b = a / (2.0 * scale * m);
        let k = 1.0 / (m - 1.0);
        // ∫(C − b y²)₊^k dy = C^k · sqrt(C/b) · 2∫_0^{π/2} cos^{2k+1}θ dθ
        let j = gauss(&|t: f64| t.cos().powf(2.0 * k + 1.0), 0.0, 0.5 * PI, 256);
        let mass = |c: f64| c.powf(k) * (c / b).sqrt() * 2.0 * j;
        let (mut lo, mut hi) = (0.0, 1.0);
        while mass(hi) < 1.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        Ok(CompactPowerProfile { m, b, c: 0.5 * (lo + hi), center })
    }

    pub fn support_radius(&self) -> f64 {
        (self.c / self.b).sqrt()
    }

    pub fn value(&self, y: f64) -> f64 {
        let d = y - self.center;
        (self.c - self.b * d * d).max(0.0).powf(1.0 / (self.m - 1.0))
    }

    /// Exact cell averages on the grid, renormalized.
    pub fn on_grid(&self, domain: Domain, n_cells: usize) -> Result<GridMeasure> {
        let r = self.support_radius();
        if self.center - r < domain.left() || self.center + r > domain.right() {
            return Err(Error::SupportOverflow(format!(
                "support [{}, {}] leaves the domain [{}, {}]",
                self.center - r,
                self.center + r,
                domain.left(),
                domain.right()
            )));
        }
        let h = domain.length() / n_cells as f64;
        let (lo, hi) = (self.center - r, self.center + r);
        let values = (0..n_cells)
            .map(|i| {
                let a = (domain.left() + i as f64 * h).max(lo);
                let b = (domain.left() + (i + 1) as f64 * h).min(hi);
                if b <= a { 0.0 } else { gauss(&|y| self.value(y), a, b, 2) / h }
            })
            .collect();
        GridMeasure::normalized(domain, values)
    }
}

/// Support radius of the unit-mass stationary state of the rescaled porous-medium flow.
pub fn barenblatt_support(m: f64, alpha: f64) -> Result<f64> {
    Ok(CompactPowerProfile::new(m, 1.0 / (m - 1.0), alpha, 0.0)?.support_radius())
}

/// The constant `C` of `(C − α(m−1)/(2m) y²)₊^{1/(m−1)}`.
pub fn barenblatt_constant(m: f64) -> Result<f64> {
    let alpha = 1.0 / (m + 1.0);
    Ok(CompactPowerProfile::new(m, 1.0 / (m - 1.0), alpha, 0.0)?.c)
}

/// Unit-mass stationary state of the rescaled porous-medium flow on `[−half_width, half_width]`.
pub fn barenblatt(m: f64, n_cells: usize, half_width: f64) -> Result<GridMeasure> {
    let alpha = 1.0 / (m + 1.0);
    let profile = CompactPowerProfile::new(m, 1.0 / (m - 1.0), alpha, 0.0)?;
    profile.on_grid(Domain::interval(-half_width, half_width, true)?, n_cells)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakConfinementState {
    pub measure: GridMeasure,
    /// Mass of the untruncated state outside the domain.
    pub tail_mass: f64,
    /// Whether the untruncated state has a finite second moment.
    pub in_p2: bool,
}

/// Truncation of `Z⁻¹/(1 + x^{2d})` to `[−half_width, half_width]`.
pub fn weak_confinement_state(dim: u32, n_cells: usize, half_width: f64) -> Result<WeakConfinementState> {
    if dim == 0 {
        return Err(Error::InvalidModel("dimension parameter must be at least 1".into()));
    }
    let k = 2 * dim as i32;
    let f = |x: f64| 1.0 / (1.0 + x.abs().powi(k));
    let domain = Domain::interval(-half_width, half_width, true)?;
    let measure = GridMeasure::from_fn(domain, n_cells, f)?;
    let total = PI / dim as f64 / (PI / (2.0 * dim as f64)).sin();
    let inside = if dim == 1 { 2.0 * half_width.atan() } else { 2.0 * gauss(&f, 0.0, half_width, 4096) };
    Ok(WeakConfinementState { measure, tail_mass: 1.0 - inside / total, in_p2: 2 * dim as i32 - 2 > 1 })
}

/// Damped Picard iteration `ρ ← (1 − θ)ρ + θ Z⁻¹ exp(−(V + W*ρ)/s)` for entropy scale `s`.
pub fn mckean_vlasov_fixed_point(
    model: &EnergyModel,
    init: &GridMeasure,
    damping: f64,
    max_iter: usize,
) -> Result<Equilibrium> {
    let Internal::Entropy { scale } = model.internal else {
        return Err(Error::InvalidModel("fixed-point solve needs an entropic model".into()));
    };
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidModel(format!("damping must lie in (0, 1], got {damping}")));
    }
    let domain = *init.domain();
    let n = init.n_cells();
    let h = init.cell_width();
    let v: Vec<f64> = init.centers().iter().map(|&x| model.potential.value(x)).collect();
    let conv = Convolver::new(&model.interaction, &domain, n);
    let gibbs = |rho: &[f64]| -> Vec<f64> {
        let w = conv.apply(rho);
        let expo: Vec<f64> = v.iter().zip(&w).map(|(a, b)| -(a + b) / scale).collect();
        let top = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = expo.iter().map(|e| (e - top).exp()).collect();
        let z: f64 = raw.iter().sum::<f64>() * h;
        raw.into_iter().map(|r| r / z).collect()
    };
    let mut rho = init.density().to_vec();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let g = gibbs(&rho);
        residual = rho.iter().zip(&g).map(|(a, b)| (a - b).abs()).sum::<f64>() * h;
        iterations += 1;
        for (r, g) in rho.iter_mut().zip(&g) {
            *r = (1.0 - damping) * *r + damping * g;
        }
        if damping * residual < 1e-10 {
            break;
        }
    }
    let g = gibbs(&rho);
    residual = residual.min(rho.iter().zip(&g).map(|(a, b)| (a - b).abs()).sum::<f64>() * h);
    Ok(Equilibrium {
        measure: GridMeasure::normalized(domain, rho)?.into(),
        provenance: Provenance::FixedPoint { iterations, residual },
        label: "fixed point".into(),
    })
}

/// Separated Dirac masses; stationary when no two atoms interact.
pub fn dirac_lattice(domain: Domain, masses: &[f64], positions: &[f64], kernel: &Kernel) -> Result<Equilibrium> {
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidMeasure(format!("lattice masses sum to {total}")));
    }
    let pm = ParticleMeasure::new(domain, positions.to_vec(), masses.to_vec())?;
    if let Kernel::Hk(k) = kernel {
        let r = k.spec().radius;
        let gap = pm.positions().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if pm.len() > 1 && !(gap > 2.0 * r) {
            return Err(Error::NotStationary(format!("atoms {gap} apart interact (need more than {})", 2.0 * r)));
        }
    }
    let model = EnergyModel::quadratic(Internal::None, crate::energetics::Potential::Zero, kernel.clone())?;
    let d = dissipation(&model, &pm)?;
    if d > 1e-20 {
        return Err(Error::NotStationary(format!("lattice dissipation {d:e}")));
    }
    Ok(Equilibrium { measure: pm.into(), provenance: Provenance::DiracLattice, label: "dirac lattice".into() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    BoundedLipschitz,
    W1,
    Wp(f64),
}

impl Metric {
    pub fn name(&self) -> String {
        match self {
            Metric::BoundedLipschitz => "BL".into(),
            Metric::W1 => "W1".into(),
            Metric::Wp(p) => format!("W{p}"),
        }
    }

    pub fn distance<A, B>(&self, a: &A, b: &B) -> Result<f64>
    where
        A: Distribution + ?Sized,
        B: Distribution + ?Sized,
    {
        match *self {
            Metric::BoundedLipschitz => bounded_lipschitz(a, b),
            Metric::W1 => wasserstein_1(a, b),
            Metric::Wp(p) => wasserstein_p(a, b, p),
        }
    }
}

fn translated(m: &Measure, shift: f64) -> Result<Measure> {
    Ok(match m {
        Measure::Grid(g) => g.translate(shift)?.into(),
        Measure::Particles(p) => {
            let xs = p.positions().iter().map(|x| x + shift).collect();
            ParticleMeasure::new(*p.domain(), xs, p.weights().to_vec())?.into()
        }
    })
}

/// `min` over members of the metric distance; with `translation_quotient` each member is also
/// translated around the circle.
pub fn distance_to_set<D: Distribution + ?Sized>(
    mu: &D,
    eqs: &EquilibriumSet,
    metric: Metric,
    translation_quotient: bool,
) -> Result<f64> {
    if eqs.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut best = f64::INFINITY;
    for member in &eqs.members {
        let d = match (*mu.domain(), translation_quotient) {
            (Domain::Torus { period }, true) => {
                let cost = |s: f64| translated(&member.measure, s).and_then(|m| metric.distance(mu, &m)).unwrap_or(f64::INFINITY);
                crate::measures::minimize_shift(cost, 0.0, period)
            }
            _ => metric.distance(mu, &member.measure)?,
        };
        best = best.min(d);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_is_zero_at_the_bifurcation_and_grows() {
        assert_eq!(kuramoto_sigma(2.0, 1e-10, false).unwrap(), 0.0);
        assert!(kuramoto_sigma(2.0, 1e-10, true).is_err());
        let s4 = kuramoto_sigma(4.0, 1e-10, true).unwrap();
        let s8 = kuramoto_sigma(8.0, 1e-10, true).unwrap();
        let s16 = kuramoto_sigma(16.0, 1e-10, true).unwrap();
        assert!(s4 > 0.0 && s8 > s4 && s16 > s8);
        assert!((s4 / 4.0 - kuramoto_order_ratio(s4)).abs() < 1e-10);
    }

    #[test]
    fn barenblatt_constant_for_m2() {
        let c = barenblatt_constant(2.0).unwrap();
        assert!((c - 3f64.cbrt() / 4.0).abs() < 1e-12);
        let b = barenblatt(2.0, 512, 3.0).unwrap();
        assert!((b.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_gap_rule() {
        let d = Domain::interval(-5.0, 5.0, true).unwrap();
        let k = Kernel::hk(crate::energetics::BumpSpec::smooth(1.0)).unwrap();
        assert!(dirac_lattice(d, &[0.3, 0.7], &[0.0, 2.5], &k).is_ok());
        assert!(matches!(dirac_lattice(d, &[0.3, 0.7], &[0.0, 1.5], &k), Err(Error::NotStationary(_))));
        assert!(dirac_lattice(d, &[1.0], &[0.0], &k).is_ok());
    }

    #[test]
    fn weak_confinement_tail() {
        let s = weak_confinement_state(1, 256, 16.0).unwrap();
        assert!((s.tail_mass - (1.0 - 2.0 / PI * 16f64.atan())).abs() < 1e-14);
        assert!(!s.in_p2);
        assert!(weak_confinement_state(2, 256, 16.0).unwrap().in_p2);
    }
}
