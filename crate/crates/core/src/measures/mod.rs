//! Probability measures on the circle and on bounded intervals.
//!
//! Two representations are supported: cell-averaged densities on a uniform
//! mesh ([`GridMeasure`]) and finite sums of weighted atoms
//! ([`ParticleMeasure`]). Everything downstream (distances, moments,
//! quantiles) works on a common piecewise-linear view of the quantile
//! function, so grids and atoms can be mixed freely.

mod bl;
mod io;
mod transport;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bl::bounded_lipschitz;
pub use io::{measure_from_csv, measure_to_csv, read_measure_csv, write_measure_csv};
pub use transport::{minimize_shift, wasserstein_1, wasserstein_p};

const MASS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Torus { period: f64 },
    Interval { left: f64, right: f64, truncation_of_line: bool },
}

impl Domain {
    pub fn torus(period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidDomain(format!("torus period must be positive, got {period}")));
        }
        Ok(Domain::Torus { period })
    }

    pub fn interval(left: f64, right: f64, truncation_of_line: bool) -> Result<Self> {
        if !(left.is_finite() && right.is_finite() && right > left) {
            return Err(Error::InvalidDomain(format!("need left < right, got [{left}, {right}]")));
        }
        Ok(Domain::Interval { left, right, truncation_of_line })
    }

    pub fn unit_torus() -> Self {
        Domain::Torus { period: 1.0 }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Domain::Torus { .. })
    }

    pub fn left(&self) -> f64 {
        match *self {
            Domain::Torus { .. } => 0.0,
            Domain::Interval { left, .. } => left,
        }
    }

    pub fn right(&self) -> f64 {
        self.left() + self.length()
    }

    pub fn length(&self) -> f64 {
        match *self {
            Domain::Torus { period } => period,
            Domain::Interval { left, right, .. } => right - left,
        }
    }

    /// Geometric diameter: half the period on the circle.
    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Torus { period } => 0.5 * period,
            Domain::Interval { left, right, .. } => right - left,
        }
    }

    pub fn center(&self) -> f64 {
        self.left() + 0.5 * self.length()
    }

    /// Maps a point into the fundamental chart `[0, period)` on the circle; identity on intervals.
    pub fn wrap(&self, x: f64) -> f64 {
        match *self {
            Domain::Torus { period } => {
                let w = x.rem_euclid(period);
                if w >= period { 0.0 } else { w }
            }
            Domain::Interval { .. } => x,
        }
    }

    /// Signed difference `x - y`, using the minimal image on the circle.
    pub fn displacement(&self, x: f64, y: f64) -> f64 {
        let d = x - y;
        match *self {
            Domain::Torus { period } => d - period * (d / period).round(),
            Domain::Interval { .. } => d,
        }
    }

    pub fn same_as(&self, other: &Domain) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        match (*self, *other) {
            (Domain::Torus { period: a }, Domain::Torus { period: b }) => close(a, b),
            (
                Domain::Interval { left: l1, right: r1, .. },
                Domain::Interval { left: l2, right: r2, .. },
            ) => close(l1, l2) && close(r1, r2),
            _ => false,
        }
    }

    pub(crate) fn check_same(&self, other: &Domain) -> Result<()> {
        if self.same_as(other) { Ok(()) } else { Err(Error::DomainMismatch) }
    }

    fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::Torus { .. } => x.is_finite(),
            Domain::Interval { left, right, .. } => x >= left && x <= right,
        }
    }
}

/// Cell-averaged density on a uniform mesh of the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMeasure {
    domain: Domain,
    density: Vec<f64>,
    cell_width: f64,
}

impl GridMeasure {
    /// Builds a grid measure from cell averages that must already carry unit mass.
    pub fn new(domain: Domain, density: Vec<f64>) -> Result<Self> {
        let g = Self::unchecked(domain, density)?;
        let mass = g.mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {mass} differs from 1")));
        }
        Ok(g)
    }

    /// Rescales non-negative cell values to unit mass.
    pub fn normalized(domain: Domain, density: Vec<f64>) -> Result<Self> {
        let mut g = Self::unchecked(domain, density)?;
        let mass = g.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidMeasure("density has no mass".into()));
        }
        g.density.iter_mut().for_each(|r| *r /= mass);
        Ok(g)
    }

    /// Uniform density over the whole domain.
    pub fn uniform(domain: Domain, n_cells: usize) -> Result<Self> {
        let h = domain.length() / n_cells as f64;
        Self::normalized(domain, vec![1.0 / (h * n_cells as f64); n_cells])
    }

    /// Samples `f` at cell centers and normalizes.
    pub fn from_fn(domain: Domain, n_cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = domain.length() / n_cells as f64;
        let left = domain.left();
        let values = (0..n_cells).map(|i| f(left + (i as f64 + 0.5) * h)).collect();
        Self::normalized(domain, values)
    }

    /// Accepts densities whose mass has drifted by round-off, as produced by time stepping.
    pub(crate) fn unchecked(domain: Domain, density: Vec<f64>) -> Result<Self> {
        if density.is_empty() {
            return Err(Error::InvalidMeasure("grid needs at least one cell".into()));
        }
        if let Some(bad) = density.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("density value {bad} is not a non-negative number")));
        }
        let cell_width = domain.length() / density.len() as f64;
        Ok(GridMeasure { domain, density, cell_width })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn n_cells(&self) -> usize {
        self.density.len()
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn center(&self, i: usize) -> f64 {
        self.domain.left() + (i as f64 + 0.5) * self.cell_width
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells()).map(|i| self.center(i)).collect()
    }

    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_width
    }

    /// L1 distance between densities on the same mesh.
    pub fn l1_distance(&self, other: &GridMeasure) -> Result<f64> {
        self.domain.check_same(&other.domain)?;
        if self.n_cells() != other.n_cells() {
            return Err(Error::InvalidMeasure("grids have different resolutions".into()));
        }
        Ok(self.density.iter().zip(&other.density).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.cell_width)
    }

    /// Translation by `shift` on the circle, exact for multiples of the cell width and
    /// linearly interpolated between cells otherwise.
    pub fn translate(&self, shift: f64) -> Result<GridMeasure> {
        let Domain::Torus { .. } = self.domain else {
            return Err(Error::Unsupported("translation is only defined on the torus".into()));
        };
        let n = self.n_cells() as isize;
        let s = shift / self.cell_width;
        let k = s.floor();
        let frac = s - k;
        let k = k as isize;
        let density = (0..n)
            .map(|i| {
                let a = self.density[(i - k).rem_euclid(n) as usize];
                let b = self.density[(i - k - 1).rem_euclid(n) as usize];
                (1.0 - frac) * a + frac * b
            })
            .collect();
        GridMeasure::unchecked(self.domain, density)
    }
}

/// Finite combination of weighted atoms, kept sorted with coincident atoms merged.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleMeasure {
    domain: Domain,
    positions: Vec<f64>,
    weights: Vec<f64>,
}

impl ParticleMeasure {
    pub fn new(domain: Domain, positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let pm = Self::canonical(domain, positions, weights)?;
        let total: f64 = pm.weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(pm)
    }

    pub fn normalized(domain: Domain, positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let mut pm = Self::canonical(domain, positions, weights)?;
        let total: f64 = pm.weights.iter().sum();
        pm.weights.iter_mut().for_each(|w| *w /= total);
        Ok(pm)
    }

    pub fn dirac(domain: Domain, x: f64) -> Result<Self> {
        Self::new(domain, vec![x], vec![1.0])
    }

    /// Equal weights on the given positions.
    pub fn empirical(domain: Domain, positions: Vec<f64>) -> Result<Self> {
        let n = positions.len();
        Self::normalized(domain, positions, vec![1.0; n])
    }

    fn canonical(domain: Domain, positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        let mut atoms = Vec::with_capacity(positions.len());
        for (x, w) in positions.into_iter().zip(weights) {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
            }
            if !domain.contains(x) {
                return Err(Error::InvalidMeasure(format!("atom at {x} lies outside the domain")));
            }
            atoms.push((domain.wrap(x), w));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut positions: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match positions.last() {
                Some(&last) if last == x => *weights.last_mut().unwrap() += w,
                _ => {
                    positions.push(x);
                    weights.push(w);
                }
            }
        }
        Ok(ParticleMeasure { domain, positions, weights })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Measure {
    Grid(GridMeasure),
    Particles(ParticleMeasure),
}

impl From<GridMeasure> for Measure {
    fn from(g: GridMeasure) -> Self {
        Measure::Grid(g)
    }
}

impl From<ParticleMeasure> for Measure {
    fn from(p: ParticleMeasure) -> Self {
        Measure::Particles(p)
    }
}

impl Measure {
    pub fn as_grid(&self) -> Option<&GridMeasure> {
        match self {
            Measure::Grid(g) => Some(g),
            Measure::Particles(_) => None,
        }
    }

    pub fn as_particles(&self) -> Option<&ParticleMeasure> {
        match self {
            Measure::Particles(p) => Some(p),
            Measure::Grid(_) => None,
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            Measure::Grid(g) => g.mass(),
            Measure::Particles(p) => p.total_weight(),
        }
    }
}

/// Borrowed view of either measure type.
#[derive(Clone, Copy, Debug)]
pub enum MeasureRef<'a> {
    Grid(&'a GridMeasure),
    Particles(&'a ParticleMeasure),
}

impl<'a> From<&'a GridMeasure> for MeasureRef<'a> {
    fn from(g: &'a GridMeasure) -> Self {
        MeasureRef::Grid(g)
    }
}

impl<'a> From<&'a ParticleMeasure> for MeasureRef<'a> {
    fn from(p: &'a ParticleMeasure) -> Self {
        MeasureRef::Particles(p)
    }
}

impl<'a> From<&'a Measure> for MeasureRef<'a> {
    fn from(m: &'a Measure) -> Self {
        match m {
            Measure::Grid(g) => MeasureRef::Grid(g),
            Measure::Particles(p) => MeasureRef::Particles(p),
        }
    }
}

/// A piece of mass spread uniformly over `[a, b]`; an atom when `a == b`.
#[doc(hidden)]
#[derive(Clone, Copy, Debug)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub mass: f64,
}

/// Common view of every measure type used by the distance routines.
pub trait Distribution {
    fn domain(&self) -> &Domain;
    #[doc(hidden)]
    fn segments(&self) -> Vec<Segment>;
}

impl Distribution for GridMeasure {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn segments(&self) -> Vec<Segment> {
        let h = self.cell_width;
        let left = self.domain.left();
        self.density
            .iter()
            .enumerate()
            .filter(|(_, r)| **r > 0.0)
            .map(|(i, r)| Segment { a: left + i as f64 * h, b: left + (i + 1) as f64 * h, mass: r * h })
            .collect()
    }
}

impl Distribution for ParticleMeasure {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn segments(&self) -> Vec<Segment> {
        self.positions
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| Segment { a: x, b: x, mass: w })
            .collect()
    }
}

impl Distribution for Measure {
    fn domain(&self) -> &Domain {
        match self {
            Measure::Grid(g) => g.domain(),
            Measure::Particles(p) => p.domain(),
        }
    }

    fn segments(&self) -> Vec<Segment> {
        match self {
            Measure::Grid(g) => g.segments(),
            Measure::Particles(p) => p.segments(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

/// Mean and second moment. On the circle the chart `[0, period)` is used.
pub fn moments<D: Distribution + ?Sized>(mu: &D) -> Moments {
    let mut mass = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for s in mu.segments() {
        let c = 0.5 * (s.a + s.b);
        let w = s.b - s.a;
        mass += s.mass;
        m1 += s.mass * c;
        m2 += s.mass * (c * c + w * w / 12.0);
    }
    let mean = m1 / mass;
    let second_moment = m2 / mass;
    Moments { mean, second_moment, variance: second_moment - mean * mean }
}

/// Right-continuous distribution function; on the circle `F(x) = mu([0, x])` in the chart.
pub fn cdf<D: Distribution + ?Sized>(mu: &D, x: f64) -> f64 {
    let domain = mu.domain();
    let x = if domain.is_torus() { domain.wrap(x) } else { x };
    let segs = mu.segments();
    let total: f64 = segs.iter().map(|s| s.mass).sum();
    let mut acc = 0.0;
    for s in &segs {
        if s.b <= x {
            acc += s.mass;
        } else if s.a < x {
            acc += s.mass * (x - s.a) / (s.b - s.a);
        } else {
            break;
        }
    }
    (acc / total).clamp(0.0, 1.0)
}

/// Generalized inverse `inf { x : F(x) >= s }`; `s = 0` gives the left end of the support.
pub fn quantile<D: Distribution + ?Sized>(mu: &D, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::QuantileOutOfRange(s));
    }
    let pieces = transport::quantile_pieces(&mu.segments());
    let idx = pieces.partition_point(|p| p.s1 < s).min(pieces.len() - 1);
    Ok(pieces[idx].eval(s))
}

/// Bins atoms into cells; an atom on a cell edge goes to the cell on its right.
pub fn grid_from_particles(pm: &ParticleMeasure, n_cells: usize) -> Result<GridMeasure> {
    if n_cells == 0 {
        return Err(Error::InvalidMeasure("grid needs at least one cell".into()));
    }
    let domain = *pm.domain();
    let h = domain.length() / n_cells as f64;
    let mut density = vec![0.0; n_cells];
    for (&x, &w) in pm.positions().iter().zip(pm.weights()) {
        let i = (((x - domain.left()) / h).floor().max(0.0) as usize).min(n_cells - 1);
        density[i] += w / h;
    }
    GridMeasure::unchecked(domain, density)
}
