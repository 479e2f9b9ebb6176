use super::{Distribution, Segment};
use crate::error::{Error, Result};

/// Affine piece of a quantile function: `Q(s)` runs from `x0` to `x1` as `s` runs over `[s0, s1]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Piece {
    pub s0: f64,
    pub s1: f64,
    pub x0: f64,
    pub x1: f64,
}

impl Piece {
    pub fn eval(&self, s: f64) -> f64 {
        if self.s1 <= self.s0 {
            return self.x0;
        }
        let t = ((s - self.s0) / (self.s1 - self.s0)).clamp(0.0, 1.0);
        self.x0 + t * (self.x1 - self.x0)
    }
}

/// Quantile function of the mass-normalized measure; the last piece ends at exactly 1.
pub(crate) fn quantile_pieces(segs: &[Segment]) -> Vec<Piece> {
    let total: f64 = segs.iter().map(|s| s.mass).sum();
    let mut pieces = Vec::with_capacity(segs.len());
    let mut raw = 0.0;
    let mut cum = 0.0;
    for s in segs.iter().filter(|s| s.mass > 0.0) {
        // same rounding as `cdf`, so quantile(cdf(x)) lands back on x
        raw += s.mass;
        let next = raw / total;
        pieces.push(Piece { s0: cum, s1: next, x0: s.a, x1: s.b });
        cum = next;
    }
    if let Some(last) = pieces.last_mut() {
        last.s1 = 1.0;
    }
    pieces
}

/// `∫_{s0}^{s1} |d(s)|^p ds` for `d` affine from `d0` to `d1`.
fn affine_power_integral(d0: f64, d1: f64, ds: f64, p: f64) -> f64 {
    if ds <= 0.0 {
        return 0.0;
    }
    if d0 * d1 < 0.0 {
        let (u0, u1) = (d0.abs(), d1.abs());
        let split = u0 / (u0 + u1);
        return ds * (split * u0.powf(p) + (1.0 - split) * u1.powf(p)) / (p + 1.0);
    }
    let (u0, u1) = (d0.abs(), d1.abs());
    let hi = u0.max(u1);
    if (u1 - u0).abs() <= 1e-6 * hi {
        let um = 0.5 * (u0 + u1);
        return ds * (u0.powf(p) + 4.0 * um.powf(p) + u1.powf(p)) / 6.0;
    }
    ds * (u1.powf(p + 1.0) - u0.powf(p + 1.0)) / ((p + 1.0) * (u1 - u0))
}

/// `∫_0^1 |Q_a(s) - Q_b(s)|^p ds` by merging the two piece lists.
fn merged_cost(a: &[Piece], b: &[Piece], p: f64) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut s = 0.0;
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let end = a[i].s1.min(b[j].s1);
        if end > s {
            let d0 = a[i].eval(s) - b[j].eval(s);
            let d1 = a[i].eval(end) - b[j].eval(end);
            total += affine_power_integral(d0, d1, end - s, p);
            s = end;
        }
        if a[i].s1 <= end {
            i += 1;
        }
        if j < b.len() && b[j].s1 <= end {
            j += 1;
        }
    }
    total
}

/// Quantile pieces of the periodic lift `Q(u + k) = Q(u) + k L`, read over `s ∈ [0, 1]` at `u = s + θ`.
fn lifted_pieces(b: &[Piece], theta: f64, period: f64) -> Vec<Piece> {
    let k0 = theta.floor() as i64;
    let mut out = Vec::with_capacity(2 * b.len());
    for k in k0..=k0 + 1 {
        let kf = k as f64;
        for piece in b {
            let s0 = piece.s0 + kf - theta;
            let s1 = piece.s1 + kf - theta;
            let lo = s0.max(0.0);
            let hi = s1.min(1.0);
            if hi <= lo {
                continue;
            }
            let at = |s: f64| piece.eval(s - kf + theta) + kf * period;
            out.push(Piece { s0: lo, s1: hi, x0: at(lo), x1: at(hi) });
        }
    }
    if let Some(last) = out.last_mut() {
        last.s1 = 1.0;
    }
    out
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}

pub(crate) fn scan_then_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const SCAN: usize = 64;
    let step = (hi - lo) / (SCAN - 1) as f64;
    let (best_k, best_v) = (0..SCAN)
        .map(|k| (k, f(lo + k as f64 * step)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let a = lo + best_k.saturating_sub(1) as f64 * step;
    let b = (lo + (best_k + 1) as f64 * step).min(hi);
    let (x, v) = golden_min(&f, a, b, tol);
    if v <= best_v { (x, v) } else { (lo + best_k as f64 * step, best_v) }
}

/// Minimum of `f` over `[lo, hi]` by a 64-point scan refined with golden-section search.
pub fn minimize_shift(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    scan_then_golden(f, lo, hi, 1e-10).1
}

fn transport_cost<A, B>(mu: &A, nu: &B, p: f64) -> Result<f64>
where
    A: Distribution + ?Sized,
    B: Distribution + ?Sized,
{
    mu.domain().check_same(nu.domain())?;
    let a = quantile_pieces(&mu.segments());
    let b = quantile_pieces(&nu.segments());
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidMeasure("measure has no mass".into()));
    }
    let cost = if let super::Domain::Torus { period } = *mu.domain() {
        let f = |theta: f64| merged_cost(&a, &lifted_pieces(&b, theta, period), p);
        scan_then_golden(f, -1.0, 1.0, 1e-10).1
    } else {
        merged_cost(&a, &b, p)
    };
    Ok(cost.max(0.0))
}

/// p-Wasserstein distance for `1 < p < ∞`, exact on intervals and by shift minimization on the circle.
pub fn wasserstein_p<A, B>(mu: &A, nu: &B, p: f64) -> Result<f64>
where
    A: Distribution + ?Sized,
    B: Distribution + ?Sized,
{
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(transport_cost(mu, nu, p)?.powf(1.0 / p))
}

/// 1-Wasserstein distance, `∫|F_μ − F_ν|` on intervals.
pub fn wasserstein_1<A, B>(mu: &A, nu: &B) -> Result<f64>
where
    A: Distribution + ?Sized,
    B: Distribution + ?Sized,
{
    transport_cost(mu, nu, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Domain, GridMeasure, ParticleMeasure};

    #[test]
    fn power_integral_matches_quadrature() {
        for &(d0, d1, p) in &[(0.3, 1.7, 2.0), (-0.4, 0.9, 1.5), (1.0, 1.0 + 1e-9, 3.0), (0.0, 2.0, 1.0)] {
            let n = 200_000;
            let q: f64 = (0..n)
                .map(|k| {
                    let t = (k as f64 + 0.5) / n as f64;
                    (d0 + t * (d1 - d0)).abs().powf(p)
                })
                .sum::<f64>()
                / n as f64;
            assert!((affine_power_integral(d0, d1, 1.0, p) - q).abs() < 1e-9, "{d0} {d1} {p}");
        }
    }

    #[test]
    fn symmetric_pair_to_origin() {
        let d = Domain::interval(-1.0, 1.0, false).unwrap();
        let mu = ParticleMeasure::new(d, vec![-0.5, 0.5], vec![0.5, 0.5]).unwrap();
        let nu = ParticleMeasure::dirac(d, 0.0).unwrap();
        assert!((wasserstein_p(&mu, &nu, 2.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_grid_against_itself_on_circle() {
        let u = GridMeasure::uniform(Domain::unit_torus(), 64).unwrap();
        assert!(wasserstein_p(&u, &u, 2.0).unwrap() < 1e-9);
    }

    #[test]
    fn circle_wraps_around() {
        let t = Domain::unit_torus();
        let a = ParticleMeasure::dirac(t, 0.05).unwrap();
        let b = ParticleMeasure::dirac(t, 0.95).unwrap();
        assert!((wasserstein_p(&a, &b, 2.0).unwrap() - 0.1).abs() < 1e-9);
    }
}
