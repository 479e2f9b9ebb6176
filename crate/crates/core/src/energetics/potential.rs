use super::Table;

#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Zero,
    /// `log(1 + |x|^{2 dim})`.
    WeakLog { dim: u32 },
    /// `a x² / 2`.
    Quadratic { a: f64 },
    /// `a x⁴/4 − b x²/2`.
    Bistable { a: f64, b: f64 },
    /// `α |y|² / 2`, the confinement created by the self-similar rescaling.
    Confinement { alpha: f64 },
    Tabulated(Table),
}

impl Potential {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::WeakLog { dim } => x.abs().powi(2 * *dim as i32).ln_1p(),
            Potential::Quadratic { a } => 0.5 * a * x * x,
            Potential::Bistable { a, b } => 0.25 * a * x.powi(4) - 0.5 * b * x * x,
            Potential::Confinement { alpha } => 0.5 * alpha * x * x,
            Potential::Tabulated(t) => t.value(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::WeakLog { dim } => {
                let k = 2 * *dim as i32;
                let xk = x.abs().powi(k);
                k as f64 * xk / x.abs().max(f64::MIN_POSITIVE) * x.signum() / (1.0 + xk)
            }
            Potential::Quadratic { a } => a * x,
            Potential::Bistable { a, b } => a * x.powi(3) - b * x,
            Potential::Confinement { alpha } => alpha * x,
            Potential::Tabulated(t) => t.derivative(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_central_differences() {
        let cases = [
            Potential::WeakLog { dim: 1 },
            Potential::WeakLog { dim: 2 },
            Potential::Bistable { a: 1.0, b: 1.0 },
            Potential::Confinement { alpha: 1.0 / 3.0 },
        ];
        for v in &cases {
            for x in [-2.3, -0.4, 0.15, 1.7] {
                let h = 1e-6;
                let fd = (v.value(x + h) - v.value(x - h)) / (2.0 * h);
                assert!((fd - v.derivative(x)).abs() < 1e-7, "{v:?} at {x}");
            }
        }
        assert_eq!(Potential::WeakLog { dim: 1 }.derivative(0.0), 0.0);
    }
}
