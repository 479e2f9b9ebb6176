use std::collections::VecDeque;

use super::{transport, Distribution, Domain, Segment};
use crate::error::{Error, Result};

/// Sub-atoms per continuous segment when the capped dual has to be solved.
const ATOMIZE: usize = 4;

/// Bounded-Lipschitz distance `sup { ∫ f d(μ − ν) : |f| ≤ 1, Lip f ≤ 1 }`.
///
/// When the uncapped optimizer `f' = −sign(F_μ − F_ν)` already fits in the band the
/// value equals `∫|F_μ − F_ν|`; otherwise the capped dual is solved by dynamic
/// programming over the merged support. On the circle this needs period ≤ 4, in
/// which case the cap never binds.
pub fn bounded_lipschitz<A, B>(mu: &A, nu: &B) -> Result<f64>
where
    A: Distribution + ?Sized,
    B: Distribution + ?Sized,
{
    mu.domain().check_same(nu.domain())?;
    let a = normalized(mu.segments());
    let b = normalized(nu.segments());
    let profile = CdfDifference::new(&a, &b);
    match *mu.domain() {
        Domain::Torus { period } => {
            if period > 4.0 {
                return Err(Error::Unsupported(format!(
                    "bounded-Lipschitz distance on a circle of period {period} > 4"
                )));
            }
            Ok(profile.centered_l1(period))
        }
        Domain::Interval { .. } => {
            let (w1, osc) = profile.l1_and_oscillation();
            if osc <= 2.0 {
                Ok(w1)
            } else {
                Ok(capped_dual(&signed_atoms(&a, &b)).max(0.0))
            }
        }
    }
}

fn normalized(mut segs: Vec<Segment>) -> Vec<Segment> {
    let total: f64 = segs.iter().map(|s| s.mass).sum();
    segs.iter_mut().for_each(|s| s.mass /= total);
    segs
}

/// `g = F_μ − F_ν` sampled at every breakpoint, left and right limits.
struct CdfDifference {
    xs: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

fn cdf_limits(segs: &[Segment], xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut left = Vec::with_capacity(xs.len());
    let mut right = Vec::with_capacity(xs.len());
    let mut done = 0.0;
    let mut k = 0;
    for &x in xs {
        while k < segs.len() && segs[k].b < x {
            done += segs[k].mass;
            k += 1;
        }
        let mut below = done;
        let mut at = 0.0;
        for s in &segs[k..] {
            if s.a > x {
                break;
            }
            if s.a == s.b {
                at += s.mass;
            } else if s.b <= x {
                below += s.mass;
            } else {
                below += s.mass * (x - s.a) / (s.b - s.a);
            }
        }
        left.push(below);
        right.push(below + at);
    }
    (left, right)
}

impl CdfDifference {
    fn new(a: &[Segment], b: &[Segment]) -> Self {
        let mut xs: Vec<f64> = a.iter().chain(b).flat_map(|s| [s.a, s.b]).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let (la, ra) = cdf_limits(a, &xs);
        let (lb, rb) = cdf_limits(b, &xs);
        let left = la.iter().zip(&lb).map(|(p, q)| p - q).collect();
        let right = ra.iter().zip(&rb).map(|(p, q)| p - q).collect();
        CdfDifference { xs, left, right }
    }

    /// Linear stretches of `g` as `(width, start value, end value)`.
    fn stretches(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.xs.len().saturating_sub(1))
            .map(move |k| (self.xs[k + 1] - self.xs[k], self.right[k], self.left[k + 1]))
    }

    /// `∫|g|` together with the oscillation of `−∫ sign g`.
    fn l1_and_oscillation(&self) -> (f64, f64) {
        let mut l1 = 0.0;
        let (mut h, mut lo, mut hi) = (0.0f64, 0.0f64, 0.0f64);
        for (w, g0, g1) in self.stretches() {
            let mut walk = |len: f64, g: f64| {
                if g > 0.0 {
                    h -= len;
                } else if g < 0.0 {
                    h += len;
                }
                lo = lo.min(h);
                hi = hi.max(h);
            };
            if g0 * g1 < 0.0 {
                let t = g0.abs() / (g0.abs() + g1.abs());
                l1 += 0.5 * w * (t * g0.abs() + (1.0 - t) * g1.abs());
                walk(t * w, g0);
                walk((1.0 - t) * w, g1);
            } else {
                l1 += 0.5 * w * (g0.abs() + g1.abs());
                walk(w, g0 + g1);
            }
        }
        (l1, hi - lo)
    }

    /// `min_α ∫_0^L |g − α|` with `g` extended by zero over the uncovered part of the chart.
    fn centered_l1(&self, period: f64) -> f64 {
        let covered: f64 = self.stretches().map(|(w, _, _)| w).sum();
        let gap = (period - covered).max(0.0);
        let cost = |alpha: f64| {
            let mut total = gap * alpha.abs();
            for (w, g0, g1) in self.stretches() {
                let (d0, d1) = (g0 - alpha, g1 - alpha);
                total += if d0 * d1 < 0.0 {
                    let t = d0.abs() / (d0.abs() + d1.abs());
                    0.5 * w * (t * d0.abs() + (1.0 - t) * d1.abs())
                } else {
                    0.5 * w * (d0.abs() + d1.abs())
                };
            }
            total
        };
        let values = self.left.iter().chain(&self.right).copied().chain([0.0]);
        let lo = values.clone().fold(f64::INFINITY, f64::min);
        let hi = values.fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= 0.0 {
            return cost(lo);
        }
        let (_, v) = transport::scan_then_golden(cost, lo, hi, 1e-15);
        v
    }
}

/// Signed atoms of `μ − ν`, with continuous segments split into equal sub-atoms.
fn signed_atoms(a: &[Segment], b: &[Segment]) -> Vec<(f64, f64)> {
    let mut atoms = Vec::new();
    for (segs, sign) in [(a, 1.0), (b, -1.0)] {
        for s in segs {
            if s.a == s.b {
                atoms.push((s.a, sign * s.mass));
            } else {
                let w = (s.b - s.a) / ATOMIZE as f64;
                for k in 0..ATOMIZE {
                    atoms.push((s.a + (k as f64 + 0.5) * w, sign * s.mass / ATOMIZE as f64));
                }
            }
        }
    }
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (x, m) in atoms {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += m,
            _ => merged.push((x, m)),
        }
    }
    merged
}

#[derive(Clone, Copy)]
struct Piece {
    len: f64,
    raw_slope: f64,
}

/// Concave piecewise-linear function on `[−1, 1]`, split at its maximizer. Slopes are
/// stored relative to a shared offset so adding a linear term is O(1).
struct ConcaveValue {
    rising: VecDeque<Piece>,
    falling: VecDeque<Piece>,
    offset: f64,
    at_left: f64,
}

impl ConcaveValue {
    fn zero() -> Self {
        let mut rising = VecDeque::new();
        rising.push_back(Piece { len: 2.0, raw_slope: 0.0 });
        ConcaveValue { rising, falling: VecDeque::new(), offset: 0.0, at_left: 0.0 }
    }

    fn slope(&self, p: &Piece) -> f64 {
        p.raw_slope + self.offset
    }

    fn add_linear(&mut self, m: f64) {
        self.offset += m;
        self.at_left -= m;
        while let Some(p) = self.rising.back() {
            if self.slope(p) >= 0.0 {
                break;
            }
            let p = self.rising.pop_back().unwrap();
            self.falling.push_front(p);
        }
        while let Some(p) = self.falling.front() {
            if self.slope(p) <= 0.0 {
                break;
            }
            let p = self.falling.pop_front().unwrap();
            self.rising.push_back(p);
        }
    }

    /// `V(y) ← max_{|y'−y| ≤ d} V(y')`, restricted back to `[−1, 1]`.
    fn dilate(&mut self, d: f64) {
        if d <= 0.0 {
            return;
        }
        self.rising.push_back(Piece { len: 2.0 * d, raw_slope: -self.offset });
        let mut remaining = d;
        while remaining > 0.0 {
            let front = if self.rising.is_empty() { &mut self.falling } else { &mut self.rising };
            let Some(p) = front.front_mut() else { break };
            let slope = p.raw_slope + self.offset;
            if p.len <= remaining {
                self.at_left += slope * p.len;
                remaining -= p.len;
                front.pop_front();
            } else {
                self.at_left += slope * remaining;
                p.len -= remaining;
                remaining = 0.0;
            }
        }
        let mut remaining = d;
        while remaining > 0.0 {
            let back = if self.falling.is_empty() { &mut self.rising } else { &mut self.falling };
            let Some(p) = back.back_mut() else { break };
            if p.len <= remaining {
                remaining -= p.len;
                back.pop_back();
            } else {
                p.len -= remaining;
                remaining = 0.0;
            }
        }
    }

    fn maximum(&self) -> f64 {
        self.at_left + self.rising.iter().map(|p| self.slope(p).max(0.0) * p.len).sum::<f64>()
    }
}

/// `max Σ m_k f_k` subject to `|f_k| ≤ 1` and `|f_{k+1} − f_k| ≤ x_{k+1} − x_k`.
fn capped_dual(atoms: &[(f64, f64)]) -> f64 {
    let mut v = ConcaveValue::zero();
    for (k, &(x, m)) in atoms.iter().enumerate() {
        if k > 0 {
            v.dilate(x - atoms[k - 1].0);
        }
        v.add_linear(m);
    }
    v.maximum()
}
