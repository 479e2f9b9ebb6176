use std::f64::consts::PI;

use super::Table;
use crate::error::{Error, Result};
use crate::measures::{Domain, GridMeasure};

/// Gauss–Legendre rule on [−1, 1], 8 nodes.
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

const HK_INTERVALS: usize = 4096;

/// Constant that makes the inner parabola of the non-convex kernel meet the outer branch in a C¹ way.
pub const NONCONVEX_SHIFT: f64 = 13.0 / 32.0;

#[derive(Clone, Debug, PartialEq)]
pub enum BumpProfile {
    /// `exp(−1/(1 − (x/R)²))` on `(−R, R)`.
    SmoothBump,
    /// Samples of the profile on `[0, R]`, extended evenly.
    Tabulated(Table),
}

/// Influence function `φ` of the bounded-confidence interaction.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpSpec {
    pub radius: f64,
    pub profile: BumpProfile,
    pub normalization: f64,
}

impl BumpSpec {
    pub fn smooth(radius: f64) -> Self {
        BumpSpec { radius, profile: BumpProfile::SmoothBump, normalization: 1.0 }
    }

    pub fn phi(&self, x: f64) -> f64 {
        let r = x.abs() / self.radius;
        if r >= 1.0 {
            return 0.0;
        }
        self.normalization
            * match &self.profile {
                BumpProfile::SmoothBump => (-1.0 / (1.0 - r * r)).exp(),
                BumpProfile::Tabulated(t) => t.value(x.abs()).max(0.0),
            }
    }

    pub fn phi_derivative(&self, x: f64) -> f64 {
        let r = x.abs() / self.radius;
        if r >= 1.0 {
            return 0.0;
        }
        match &self.profile {
            BumpProfile::SmoothBump => {
                let s = 1.0 - r * r;
                self.phi(x) * (-2.0 * x / (self.radius * self.radius)) / (s * s)
            }
            BumpProfile::Tabulated(t) => self.normalization * t.derivative(x.abs()) * x.signum(),
        }
    }

    /// `δ = 2 inf_{[−D, D]} φ`, the consensus rate bound for a cloud of diameter `D`.
    pub fn consensus_rate(&self, diameter: f64) -> f64 {
        let n = 4000;
        let m = (0..=n)
            .map(|k| self.phi(diameter * k as f64 / n as f64))
            .fold(f64::INFINITY, f64::min);
        2.0 * m
    }
}

/// `ψ(x) = ∫_{−∞}^x y φ(y) dy`, tabulated on `[−R, 0]` and mirrored.
#[derive(Clone, Debug, PartialEq)]
pub struct HkKernel {
    spec: BumpSpec,
    step: f64,
    psi: Vec<f64>,
    max_second: f64,
}

impl HkKernel {
    pub fn new(spec: BumpSpec) -> Result<Self> {
        if !(spec.radius > 0.0 && spec.radius.is_finite()) {
            return Err(Error::InvalidModel(format!("bump radius must be positive, got {}", spec.radius)));
        }
        if !(spec.normalization > 0.0) {
            return Err(Error::InvalidModel("bump normalization must be positive".into()));
        }
        let r = spec.radius;
        let step = r / HK_INTERVALS as f64;
        let mut psi = Vec::with_capacity(HK_INTERVALS + 1);
        psi.push(0.0);
        let mut acc = 0.0;
        for j in 0..HK_INTERVALS {
            let a = -r + j as f64 * step;
            let mid = a + 0.5 * step;
            let piece: f64 = GL_NODES
                .iter()
                .zip(GL_WEIGHTS)
                .map(|(t, w)| {
                    let y = mid + 0.5 * step * t;
                    w * y * spec.phi(y)
                })
                .sum();
            acc += 0.5 * step * piece;
            psi.push(acc);
        }
        let samples = 20_000;
        let max_second = (0..=samples)
            .map(|k| {
                let x = -r + 2.0 * r * k as f64 / samples as f64;
                (spec.phi(x) + x * spec.phi_derivative(x)).abs()
            })
            .fold(0.0, f64::max);
        Ok(HkKernel { spec, step, psi, max_second })
    }

    pub fn spec(&self) -> &BumpSpec {
        &self.spec
    }

    pub fn value(&self, x: f64) -> f64 {
        let r = self.spec.radius;
        let y = -x.abs();
        if y <= -r {
            return 0.0;
        }
        let s = (y + r) / self.step;
        let j = (s.floor() as usize).min(HK_INTERVALS - 1);
        let t = s - j as f64;
        let x0 = -r + j as f64 * self.step;
        let x1 = x0 + self.step;
        let (p0, p1) = (self.psi[j], self.psi[j + 1]);
        let (m0, m1) = (x0 * self.spec.phi(x0) * self.step, x1 * self.spec.phi(x1) * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1
    }

    pub fn derivative(&self, x: f64) -> f64 {
        x * self.spec.phi(x)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.spec.phi(x) + x * self.spec.phi_derivative(x)
    }

    /// `K = max |ψ''|`, the Lipschitz constant of the particle velocity field.
    pub fn lipschitz(&self) -> f64 {
        self.max_second
    }

    /// Nodes of the cached table with `(x, ψ(x), ψ'(x))`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.psi.iter().enumerate().map(|(j, &p)| {
            let x = -self.spec.radius + j as f64 * self.step;
            (x, p, x * self.spec.phi(x))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    Zero,
    /// `−κ cos(2πx)`.
    Kuramoto { kappa: f64 },
    /// `κ x² / 2`.
    QuadraticAttraction { kappa: f64 },
    Hk(Box<HkKernel>),
    /// `sign(|x|−1) ||x|−1|^{3/2}` for `|x| > 3/4`, a parabola inside.
    NonConvex,
    /// Samples on `[0, X]`, extended evenly.
    Tabulated(Table),
}

impl Kernel {
    pub fn hk(spec: BumpSpec) -> Result<Self> {
        Ok(Kernel::Hk(Box::new(HkKernel::new(spec)?)))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Kernel::Zero => 0.0,
            Kernel::Kuramoto { kappa } => -kappa * (2.0 * PI * x).cos(),
            Kernel::QuadraticAttraction { kappa } => 0.5 * kappa * x * x,
            Kernel::Hk(k) => k.value(x),
            Kernel::NonConvex => {
                let a = x.abs();
                if a > 0.75 {
                    (a - 1.0).signum() * (a - 1.0).abs().powf(1.5)
                } else {
                    0.5 * a * a - NONCONVEX_SHIFT
                }
            }
            Kernel::Tabulated(t) => t.value(x.abs()),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Kernel::Zero => 0.0,
            Kernel::Kuramoto { kappa } => 2.0 * PI * kappa * (2.0 * PI * x).sin(),
            Kernel::QuadraticAttraction { kappa } => kappa * x,
            Kernel::Hk(k) => k.derivative(x),
            Kernel::NonConvex => {
                let a = x.abs();
                if a > 0.75 {
                    x.signum() * 1.5 * (a - 1.0).abs().sqrt()
                } else {
                    x
                }
            }
            Kernel::Tabulated(t) => t.derivative(x.abs()) * x.signum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Kernel::Zero)
    }

    /// For kernels whose gradient is only Hölder at separation `gap`, returns `(c, γ)` with
    /// `|W'(gap ± u)| ≈ c u^γ` pointing inwards. Used to leave such equilibria explicitly.
    pub fn departure_profile(&self, gap: f64) -> Option<(f64, f64)> {
        match self {
            Kernel::NonConvex if (gap.abs() - 1.0).abs() < 1e-12 => Some((1.5, 0.5)),
            _ => None,
        }
    }

    /// Discrete convolution `(W*ρ)_i = Σ_j W(x_i − x_j) ρ_j h`; circular on the torus,
    /// zero-padded on intervals.
    pub fn convolve(&self, grid: &GridMeasure) -> Vec<f64> {
        Convolver::new(self, grid.domain(), grid.n_cells()).apply(grid.density())
    }

    /// Rows `x,W(x),W'(x)` for inspection.
    pub fn to_csv(&self, xs: &[f64]) -> String {
        let mut out = String::from("x,W,dW\n");
        for &x in xs {
            out.push_str(&format!("{x},{},{}\n", self.value(x), self.derivative(x)));
        }
        out
    }
}

/// Precomputed evaluation plan for repeated convolutions on one mesh.
#[derive(Clone, Debug)]
pub(crate) enum Convolver {
    Zero { n: usize },
    Cosine { kappa: f64, cos: Vec<f64>, sin: Vec<f64>, h: f64 },
    Quadratic { kappa: f64, xs: Vec<f64>, h: f64 },
    Toeplitz { table: Vec<f64>, h: f64 },
}

impl Convolver {
    pub fn new(kernel: &Kernel, domain: &Domain, n: usize) -> Self {
        let h = domain.length() / n as f64;
        let centers: Vec<f64> = (0..n).map(|i| domain.left() + (i as f64 + 0.5) * h).collect();
        match kernel {
            Kernel::Zero => Convolver::Zero { n },
            Kernel::Kuramoto { kappa } if matches!(*domain, Domain::Torus { period } if period == 1.0) => {
                Convolver::Cosine {
                    kappa: *kappa,
                    cos: centers.iter().map(|x| (2.0 * PI * x).cos()).collect(),
                    sin: centers.iter().map(|x| (2.0 * PI * x).sin()).collect(),
                    h,
                }
            }
            Kernel::QuadraticAttraction { kappa } if !domain.is_torus() => {
                Convolver::Quadratic { kappa: *kappa, xs: centers, h }
            }
            _ => Convolver::Toeplitz {
                table: (0..2 * n - 1)
                    .map(|k| kernel.value(domain.displacement((k as f64 - (n - 1) as f64) * h, 0.0)))
                    .collect(),
                h,
            },
        }
    }

    pub fn apply(&self, rho: &[f64]) -> Vec<f64> {
        match self {
            Convolver::Zero { n } => vec![0.0; *n],
            Convolver::Cosine { kappa, cos, sin, h } => {
                let c: f64 = cos.iter().zip(rho).map(|(a, r)| a * r).sum::<f64>() * h;
                let s: f64 = sin.iter().zip(rho).map(|(a, r)| a * r).sum::<f64>() * h;
                cos.iter().zip(sin).map(|(a, b)| -kappa * (a * c + b * s)).collect()
            }
            Convolver::Quadratic { kappa, xs, h } => {
                let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
                for (x, r) in xs.iter().zip(rho) {
                    m0 += r * h;
                    m1 += x * r * h;
                    m2 += x * x * r * h;
                }
                xs.iter().map(|x| 0.5 * kappa * (x * x * m0 - 2.0 * x * m1 + m2)).collect()
            }
            Convolver::Toeplitz { table, h } => {
                let n = rho.len();
                (0..n)
                    .map(|i| {
                        let row = &table[i..i + n];
                        row.iter().rev().zip(rho).map(|(w, r)| w * r).sum::<f64>() * h
                    })
                    .collect()
            }
        }
    }
}
