//! Legendre–Fenchel machinery for the weight law.
//!
//! * [`cramer_transform`]: `Λ*(x) = sup_t [t x - Λ(t)]`, solved through the
//!   first-order condition `Λ'(t) = x` by monotone bisection.
//! * [`conjugate_point`]: `a* = inf { s >= 0 : Λ'(s) = a }`.
//! * [`h_cost`] / [`CostAt`]: the one-level cost
//!   `h(a, z) = c a / z - sup_{1 <= s <= a} [c s / z - Λ*(s)]`, evaluated
//!   through its closed piecewise form
//!
//! ```text
//! h(a, z) = Λ*(a)                    if z <= c / a*
//!         = c a / z - Λ(c / z)       if z >= c / a*
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::wmodel::{WeightKind, WeightModel};

/// Largest |t| explored when bracketing the root of `Λ'(t) = x`.
const T_MAX: f64 = 1e12;

/// Value and maximizer of `t ↦ t x - Λ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateResult {
    pub value: f64,
    /// `±∞` when the supremum is only approached at the edge of the domain.
    pub argmax_t: f64,
}

impl ConjugateResult {
    fn infinite(direction: f64) -> Self {
        Self { value: f64::INFINITY, argmax_t: direction }
    }
}

fn ess_inf(model: &WeightModel) -> f64 {
    match model.kind() {
        WeightKind::Degenerate => 1.0,
        WeightKind::TwoPoint { p_zero } if p_zero == 0.0 => 1.0,
        _ => 0.0,
    }
}

fn atom_at_ess_inf(model: &WeightModel) -> f64 {
    match model.kind() {
        WeightKind::Degenerate => 1.0,
        WeightKind::TwoPoint { p_zero } if p_zero == 0.0 => 1.0,
        WeightKind::TwoPoint { p_zero } => p_zero,
        _ => 0.0,
    }
}

/// Cramér transform `Λ*(x)` with its maximizing `t`.
pub fn cramer_transform(model: &WeightModel, x: f64) -> ConjugateResult {
    if x.is_nan() {
        return ConjugateResult { value: f64::NAN, argmax_t: f64::NAN };
    }
    if x == 1.0 {
        return ConjugateResult { value: 0.0, argmax_t: 0.0 };
    }
    let lo_edge = ess_inf(model);
    let hi_edge = model.ess_sup();
    if x < lo_edge {
        return ConjugateResult::infinite(f64::NEG_INFINITY);
    }
    if x == lo_edge {
        return ConjugateResult { value: -atom_at_ess_inf(model).ln(), argmax_t: f64::NEG_INFINITY };
    }
    if x > hi_edge {
        return ConjugateResult::infinite(f64::INFINITY);
    }
    if x == hi_edge {
        return ConjugateResult { value: -model.p_ess_sup().ln(), argmax_t: f64::INFINITY };
    }

    match derivative_root(model, x) {
        Some(t) => ConjugateResult { value: (t * x - model.cgf(t)).max(0.0), argmax_t: t },
        None => {
            // root not bracketed inside [-T_MAX, min(c, T_MAX)): maximize directly
            let (lo, hi) = if x > 1.0 {
                (0.0, if model.c().is_finite() { model.c() } else { T_MAX })
            } else {
                (-T_MAX, 0.0)
            };
            let f = |t: f64| t * x - model.cgf(t);
            let t = golden_section_max(f, lo, hi, 300);
            ConjugateResult { value: f(t).max(0.0), argmax_t: t }
        }
    }
}

/// Convenience wrapper returning only `Λ*(x)`.
pub fn lambda_star(model: &WeightModel, x: f64) -> f64 {
    cramer_transform(model, x).value
}

/// Root of the increasing map `t ↦ Λ'(t)` at level `x`, or `None` when it
/// cannot be bracketed.
fn derivative_root(model: &WeightModel, x: f64) -> Option<f64> {
    let d = |t: f64| model.cgf_derivative_unchecked(t);
    let c = model.c();
    let (mut lo, mut hi);
    if x > 1.0 {
        lo = 0.0;
        if c.is_finite() {
            // approach c geometrically from below
            let mut gap = c;
            loop {
                gap *= 0.5;
                let t = c - gap;
                if t >= c || gap < f64::MIN_POSITIVE {
                    return None;
                }
                if d(t) >= x {
                    hi = t;
                    break;
                }
                lo = t;
            }
        } else {
            hi = 1.0;
            while d(hi) < x {
                lo = hi;
                hi *= 2.0;
                if hi > T_MAX {
                    return None;
                }
            }
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        while d(lo) > x {
            hi = lo;
            lo *= 2.0;
            if lo < -T_MAX {
                return None;
            }
        }
    }
    Some(bisect_increasing(d, x, lo, hi))
}

/// Bisection for an increasing function with `f(lo) <= target <= f(hi)`,
/// run until the bracket stops shrinking in floating point.
pub(crate) fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}

/// `a* = inf { s >= 0 : Λ'(s) = a }`, `+∞` past the range of `Λ'`.
pub fn conjugate_point(model: &WeightModel, a: f64) -> Result<f64> {
    if !(a >= 1.0) {
        return Err(CascadeError::domain(format!("conjugate point needs a >= 1, got {a}")));
    }
    if a == 1.0 {
        return Ok(0.0);
    }
    if a >= model.cgf_derivative_sup() {
        return Ok(f64::INFINITY);
    }
    Ok(derivative_root(model, a).unwrap_or(f64::INFINITY))
}

/// Cost `h(a, ·)` frozen at one value of `a`.
///
/// Precomputes `Λ*(a)` and the branch point `c / a*` so that scanning many
/// `z` values costs one `Λ` evaluation each.
#[derive(Debug, Clone, Copy)]
pub struct CostAt {
    a: f64,
    c: f64,
    lambda_star_a: f64,
    branch_point: f64,
}

impl CostAt {
    pub fn new(model: &WeightModel, a: f64) -> Result<Self> {
        let c = model.c();
        let lambda_star_a = lambda_star(model, a);
        let branch_point = if c.is_infinite() {
            f64::INFINITY
        } else {
            let a_star = conjugate_point(model, a)?;
            if a_star == 0.0 {
                f64::INFINITY
            } else {
                c / a_star
            }
        };
        Ok(Self { a, c, lambda_star_a, branch_point })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `z = c / a*`, where the two branches meet.
    pub fn branch_point(&self) -> f64 {
        self.branch_point
    }

    pub fn lambda_star_a(&self) -> f64 {
        self.lambda_star_a
    }

    /// `h(a, z)`; the caller guarantees `1 <= z <= a`.
    pub fn eval(&self, model: &WeightModel, z: f64) -> f64 {
        if z <= self.branch_point {
            self.lambda_star_a
        } else {
            // c / z < a* < c here, so Λ(c / z) is finite and the unconstrained
            // maximizer Λ'(c / z) lies in [1, a].
            self.c * self.a / z - model.cgf(self.c / z)
        }
    }
}

/// `h(a, z)` for `1 <= z <= a`.
pub fn h_cost(model: &WeightModel, a: f64, z: f64) -> Result<f64> {
    if !(a >= 1.0) || !(1.0..=a).contains(&z) {
        return Err(CascadeError::domain(format!("h(a, z) needs 1 <= z <= a, got a = {a}, z = {z}")));
    }
    Ok(CostAt::new(model, a)?.eval(model, z))
}

/// `a_W = inf { a >= 1 : a a* >= c }` and `ρ = Λ*(a_W)`.
///
/// Beyond `a_W` the cost of the last level is bounded below by `ρ`, which is
/// what forces the breakpoints to keep moving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchThreshold {
    pub a_w: f64,
    pub rho: f64,
}

pub fn branch_threshold(model: &WeightModel) -> BranchThreshold {
    let c = model.c();
    if c.is_infinite() {
        return BranchThreshold { a_w: f64::INFINITY, rho: f64::INFINITY };
    }
    let g = |a: f64| match conjugate_point(model, a) {
        Ok(s) => a * s - c,
        Err(_) => f64::NEG_INFINITY,
    };
    let mut lo = 1.0;
    let mut hi = 2.0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return BranchThreshold { a_w: f64::INFINITY, rho: f64::INFINITY };
        }
    }
    let a_w = bisect_increasing(g, 0.0, lo, hi);
    BranchThreshold { a_w, rho: lambda_star(model, a_w) }
}
