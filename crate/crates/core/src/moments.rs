//! Exact moments of the cascade mass.
//!
//! For the infinite tree (`r > exp E[W log W]`, `2 <= h < χ(r)`):
//!
//! ```text
//! E[Z_r^h] = h! r! / (r^h (1 - E[W^h] / r^{h-1}))
//!            · Σ_{m} Π_{k=0}^{h-1} (1/m_k!) (E[W^k] E[Z_r^k] / k!)^{m_k}
//! ```
//!
//! where `m = (m_0, ..., m_{h-1})` ranges over the multiplicity vectors of
//! compositions of `h` into `r` parts of size at most `h - 1`. The finite tree
//! uses the same one-level identity with parts up to `h`, no denominator, and
//! the previous level's moments on the right-hand side.
//!
//! Two arithmetic modes are offered: log-space `f64` and exact rationals.

mod partition;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

pub use partition::{partitions, Part};

use crate::conjugate::bisect_increasing;
use crate::error::{CascadeError, Result};
use crate::ratefn::Level;
use crate::wmodel::WeightModel;

/// Default cap on the moment order.
pub const DEFAULT_H_MAX: u32 = 40;

/// Orders past which a bounded law is declared to have `χ(r) = ∞`.
const CHI_SEARCH_LIMIT: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArithmeticMode {
    ExactRational,
    HighPrecisionFloat,
}

/// `E[Z^h]` for `h = 0..=h_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub r: u64,
    pub level: Level,
    pub model_id: String,
    pub mode: ArithmeticMode,
    pub values: Vec<f64>,
    /// `log E[Z^h]`, kept so large orders do not overflow.
    pub ln_values: Vec<f64>,
    /// Exact values in rational mode.
    pub exact: Option<Vec<BigRational>>,
}

impl MomentTable {
    pub fn h_max(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    pub fn get(&self, h: u32) -> Option<f64> {
        self.values.get(h as usize).copied()
    }

    pub fn exact(&self, h: u32) -> Option<&BigRational> {
        self.exact.as_ref().and_then(|v| v.get(h as usize))
    }

    /// `Var(Z) = E[Z²] - 1`, exact in rational mode.
    pub fn variance_exact(&self) -> Option<BigRational> {
        self.exact(2).map(|m2| m2 - BigRational::one())
    }

    fn from_exact(r: u64, level: Level, model: &WeightModel, exact: Vec<BigRational>) -> Self {
        let values: Vec<f64> = exact.iter().map(|q| q.to_f64().unwrap_or(f64::INFINITY)).collect();
        let ln_values = exact.iter().map(ln_rational).collect();
        Self {
            r,
            level,
            model_id: model.id(),
            mode: ArithmeticMode::ExactRational,
            values,
            ln_values,
            exact: Some(exact),
        }
    }

    fn from_logs(r: u64, level: Level, model: &WeightModel, ln_values: Vec<f64>) -> Self {
        Self {
            r,
            level,
            model_id: model.id(),
            mode: ArithmeticMode::HighPrecisionFloat,
            values: ln_values.iter().map(|l| l.exp()).collect(),
            ln_values,
            exact: None,
        }
    }
}

fn ln_rational(q: &BigRational) -> f64 {
    // log of numerator and denominator separately to survive huge magnitudes
    fn ln_big(x: &BigInt) -> f64 {
        let bits = x.bits();
        if bits < 1000 {
            return x.to_f64().expect("finite").ln();
        }
        let shift = bits - 900;
        let top: BigInt = x >> shift;
        top.to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
    }
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_big(q.numer()) - ln_big(q.denom())
}

/// `χ(r) = sup { h >= 1 : E[W^h] < r^{h-1} }`.
pub fn chi(model: &WeightModel, r: u64) -> Result<f64> {
    model.check_branching(r)?;
    let ln_r = (r as f64).ln();
    let g = |h: f64| model.ln_raw_moment(h) - (h - 1.0) * ln_r;
    let bounded = model.ess_sup().is_finite();
    let mut lo = 1.0;
    let mut hi = 2.0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if (bounded && hi > CHI_SEARCH_LIMIT) || hi > 1e15 {
            return Ok(f64::INFINITY);
        }
    }
    // g is convex with g(1) = 0 and g < 0 on (1, χ)
    Ok(bisect_increasing(|h| if g(h) < 0.0 { -1.0 } else { 1.0 }, 0.0, lo, hi))
}

/// `log(1 - E[W^h] / r^{h-1})`, or `None` when the factor is not positive.
fn ln_denominator(model: &WeightModel, r: u64, h: u32) -> Option<f64> {
    let g = model.ln_raw_moment(f64::from(h)) - f64::from(h - 1) * (r as f64).ln();
    if g >= 0.0 {
        None
    } else {
        Some((-g.exp_m1()).ln())
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `log Σ_m r!/(m_0! Π m_k!) Π b_k^{m_k}` with `ln_b[k] = log b_k`.
fn ln_multiplicity_sum(parts: &[Vec<Part>], r: u64, ln_b: &[f64]) -> f64 {
    let ln_r_fact = ln_factorial(r);
    log_sum_exp(parts.iter().map(|p| {
        let used: u64 = p.iter().map(|x| u64::from(x.mult)).sum();
        let mut t = ln_r_fact - ln_factorial(r - used);
        for x in p {
            t += f64::from(x.mult) * ln_b[x.size as usize] - ln_factorial(u64::from(x.mult));
        }
        t
    }))
}

fn factorial_big(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn falling_factorial_big(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, j| acc * (n - j))
}

fn multiplicity_sum_exact(parts: &[Vec<Part>], r: u64, b: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    for p in parts {
        let used: u64 = p.iter().map(|x| u64::from(x.mult)).sum();
        let mut coeff = falling_factorial_big(r, used);
        let mut term = BigRational::one();
        for x in p {
            coeff /= factorial_big(u64::from(x.mult));
            term *= num_traits::pow(b[x.size as usize].clone(), x.mult as usize);
        }
        acc += term * BigRational::from_integer(coeff);
    }
    acc
}

/// `E[Z_r^h]` for the infinite tree, `h = 0..=h_max`.
pub fn cascade_moments(model: &WeightModel, r: u64, h_max: u32, mode: ArithmeticMode) -> Result<MomentTable> {
    model.check_branching(r)?;
    for h in 2..=h_max {
        if ln_denominator(model, r, h).is_none() {
            return Err(CascadeError::MomentDivergence { r, h });
        }
    }
    match mode {
        ArithmeticMode::HighPrecisionFloat => {
            let mut ln_z = vec![0.0; h_max as usize + 1];
            let mut ln_b = vec![0.0; h_max as usize + 1];
            ln_b[1] = 0.0;
            let ln_r = (r as f64).ln();
            for h in 2..=h_max {
                let parts = partitions(h, h - 1, r);
                let s = ln_multiplicity_sum(&parts, r, &ln_b);
                let den = ln_denominator(model, r, h).expect("checked above");
                let v = ln_factorial(u64::from(h)) - f64::from(h) * ln_r - den + s;
                ln_z[h as usize] = v;
                ln_b[h as usize] =
                    model.ln_raw_moment(f64::from(h)) + v - ln_factorial(u64::from(h));
            }
            Ok(MomentTable::from_logs(r, Level::Infinite, model, ln_z))
        }
        ArithmeticMode::ExactRational => {
            let rq = BigRational::from_integer(BigInt::from(r));
            let mut z = vec![BigRational::one(); h_max as usize + 1];
            let mut b = vec![BigRational::one(); h_max as usize + 1];
            for h in 2..=h_max {
                let parts = partitions(h, h - 1, r);
                let s = multiplicity_sum_exact(&parts, r, &b);
                let ew = model.exact_raw_moment(h);
                let den = num_traits::pow(rq.clone(), h as usize) - &rq * &ew;
                if !den.is_positive() {
                    return Err(CascadeError::MomentDivergence { r, h });
                }
                let hf = BigRational::from_integer(factorial_big(u64::from(h)));
                let v = &hf * s / den;
                b[h as usize] = &ew * &v / &hf;
                z[h as usize] = v;
            }
            Ok(MomentTable::from_exact(r, Level::Infinite, model, z))
        }
    }
}

/// `E[(Z_r^n)^h]` for the depth-`n` tree, `h = 0..=h_max`.
pub fn finite_tree_moments(
    model: &WeightModel,
    r: u64,
    n: u32,
    h_max: u32,
    mode: ArithmeticMode,
) -> Result<MomentTable> {
    if r < 2 {
        return Err(CascadeError::domain(format!("branching number r = {r} must be >= 2")));
    }
    if n == 0 {
        return Err(CascadeError::domain("level n must be >= 1"));
    }
    let table: Vec<Vec<Vec<Part>>> = (0..=h_max).map(|h| partitions(h, h, r)).collect();
    match mode {
        ArithmeticMode::HighPrecisionFloat => {
            let ln_w: Vec<f64> = (0..=h_max).map(|h| model.ln_raw_moment(f64::from(h))).collect();
            let ln_r = (r as f64).ln();
            let mut ln_z = vec![0.0; h_max as usize + 1];
            for _ in 0..n {
                let ln_b: Vec<f64> = (0..=h_max as usize)
                    .map(|k| ln_w[k] + ln_z[k] - ln_factorial(k as u64))
                    .collect();
                let mut next = vec![0.0; h_max as usize + 1];
                for h in 2..=h_max {
                    let s = ln_multiplicity_sum(&table[h as usize], r, &ln_b);
                    next[h as usize] = ln_factorial(u64::from(h)) - f64::from(h) * ln_r + s;
                }
                ln_z = next;
            }
            Ok(MomentTable::from_logs(r, Level::Finite(n), model, ln_z))
        }
        ArithmeticMode::ExactRational => {
            let w: Vec<BigRational> = (0..=h_max).map(|h| model.exact_raw_moment(h)).collect();
            let rq = BigRational::from_integer(BigInt::from(r));
            let fact: Vec<BigRational> =
                (0..=h_max).map(|h| BigRational::from_integer(factorial_big(u64::from(h)))).collect();
            let mut z = vec![BigRational::one(); h_max as usize + 1];
            for _ in 0..n {
                let b: Vec<BigRational> =
                    (0..=h_max as usize).map(|k| &w[k] * &z[k] / &fact[k]).collect();
                let mut next = vec![BigRational::one(); h_max as usize + 1];
                for h in 2..=h_max as usize {
                    let s = multiplicity_sum_exact(&table[h], r, &b);
                    next[h] = &fact[h] * s / num_traits::pow(rq.clone(), h);
                }
                z = next;
            }
            Ok(MomentTable::from_exact(r, Level::Finite(n), model, z))
        }
    }
}

/// Upper bound `exp{ h²/(2(r-h)) (Var W + δ + C/h) }` with `C = 2 E[W²] + 13/12`.
pub fn moment_upper_bound(model: &WeightModel, r: u64, h: u32, delta: f64) -> Result<f64> {
    if u64::from(h) >= r || h == 0 {
        return Err(CascadeError::domain(format!("moment bound needs 1 <= h < r, got h = {h}, r = {r}")));
    }
    if !(delta > 0.0) {
        return Err(CascadeError::domain(format!("delta must be positive, got {delta}")));
    }
    let h = f64::from(h);
    let c = 2.0 * model.second_moment() + 13.0 / 12.0;
    Ok((h * h / (2.0 * (r as f64 - h)) * (model.variance() + delta + c / h)).exp())
}

/// Finite-`r` proxy `(1/r) log E[Z_r^{⌊η r⌋}]` for one `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaPoint {
    pub r: u64,
    pub order: u32,
    pub value: f64,
}

/// Finite-`r` values of `(1/r) log E[Z_r^{⌊η r⌋}]`; these are raw values,
/// not the lim sup.
pub fn kappa_estimate(model: &WeightModel, eta: f64, r_list: &[u64]) -> Result<Vec<KappaPoint>> {
    let upper = model.c() * std::f64::consts::E;
    if !(eta > 0.0 && eta < upper) {
        return Err(CascadeError::domain(format!("eta must lie in (0, c e) = (0, {upper}), got {eta}")));
    }
    r_list
        .iter()
        .map(|&r| {
            let order = (eta * r as f64).floor() as u32;
            let value = if order <= 1 {
                model.check_branching(r)?;
                0.0
            } else {
                let t = cascade_moments(model, r, order, ArithmeticMode::HighPrecisionFloat)?;
                t.ln_values[order as usize] / r as f64
            };
            Ok(KappaPoint { r, order, value })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn chi_examples() {
        let e = WeightModel::exponential();
        let x = chi(&e, 10).unwrap();
        assert!(x > 21.0 && x < 22.0, "{x}");
        let x = chi(&e, 10_000).unwrap();
        assert!((x / 1e4 / std::f64::consts::E - 1.0).abs() < 0.15, "{x}");
        assert_eq!(chi(&WeightModel::two_point(0.5).unwrap(), 3).unwrap(), f64::INFINITY);
        assert!(matches!(chi(&WeightModel::two_point(0.5).unwrap(), 2), Err(CascadeError::Domain(_))));
    }

    #[test]
    fn chi_monotone_in_r() {
        let e = WeightModel::exponential();
        let rs = [3u64, 5, 10, 100, 1000, 10_000];
        let xs: Vec<f64> = rs.iter().map(|&r| chi(&e, r).unwrap()).collect();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        let ratios: Vec<f64> = rs[2..].iter().zip(&xs[2..]).map(|(&r, x)| x / r as f64).collect();
        assert!(ratios.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cascade_moment_examples() {
        let e = WeightModel::exponential();
        let t = cascade_moments(&e, 4, 3, ArithmeticMode::ExactRational).unwrap();
        assert_eq!(t.exact(2).unwrap(), &q(3, 2));
        assert_eq!(t.exact(3).unwrap(), &q(33, 10));
        let t = cascade_moments(&e, 10, 2, ArithmeticMode::ExactRational).unwrap();
        assert_eq!(t.exact(2).unwrap(), &q(9, 8));
        let t = cascade_moments(&e, 4, 3, ArithmeticMode::HighPrecisionFloat).unwrap();
        assert!((t.values[2] - 1.5).abs() < 1e-13);
        assert!((t.values[3] - 3.3).abs() < 1e-13);
        assert!(matches!(
            cascade_moments(&e, 2, 2, ArithmeticMode::HighPrecisionFloat),
            Err(CascadeError::MomentDivergence { r: 2, h: 2 })
        ));
        assert!(matches!(
            cascade_moments(&e, 2, 2, ArithmeticMode::ExactRational),
            Err(CascadeError::MomentDivergence { .. })
        ));
    }

    #[test]
    fn second_moment_closed_form() {
        for m in [WeightModel::exponential(), WeightModel::gamma(2.0).unwrap(), WeightModel::two_point(0.25).unwrap()] {
            for r in [3u64, 5, 17] {
                let t = cascade_moments(&m, r, 2, ArithmeticMode::HighPrecisionFloat).unwrap();
                let w2 = m.second_moment();
                let expect = (r as f64 - 1.0) / (r as f64 - w2);
                assert!((t.values[2] - expect).abs() < 1e-13 * expect);
            }
        }
    }

    #[test]
    fn table_invariants() {
        let e = WeightModel::exponential();
        let t = cascade_moments(&e, 30, 20, ArithmeticMode::HighPrecisionFloat).unwrap();
        assert_eq!(t.values[0], 1.0);
        assert_eq!(t.values[1], 1.0);
        assert!(t.values.windows(2).all(|w| w[1] >= w[0]));
        assert!(matches!(
            cascade_moments(&e, 10, 22, ArithmeticMode::HighPrecisionFloat),
            Err(CascadeError::MomentDivergence { h: 22, .. })
        ));
        assert!(cascade_moments(&e, 10, 21, ArithmeticMode::HighPrecisionFloat).is_ok());
    }

    #[test]
    fn float_matches_exact() {
        let e = WeightModel::exponential();
        let a = cascade_moments(&e, 12, 9, ArithmeticMode::HighPrecisionFloat).unwrap();
        let b = cascade_moments(&e, 12, 9, ArithmeticMode::ExactRational).unwrap();
        for h in 0..=9 {
            assert!((a.values[h] / b.values[h] - 1.0).abs() < 1e-12, "h={h}");
        }
    }

    #[test]
    fn finite_tree_examples() {
        let e = WeightModel::exponential();
        let t = finite_tree_moments(&e, 4, 1, 2, ArithmeticMode::ExactRational).unwrap();
        assert_eq!(t.exact(2).unwrap(), &q(5, 4));
        let t = finite_tree_moments(&e, 4, 2, 2, ArithmeticMode::ExactRational).unwrap();
        assert_eq!(t.exact(2).unwrap(), &q(11, 8));
        for n in 1..5 {
            let t = finite_tree_moments(&e, 7, n, 5, ArithmeticMode::HighPrecisionFloat).unwrap();
            assert!((t.values[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn finite_tree_converges_geometrically() {
        let e = WeightModel::exponential();
        let limit = 1.5;
        let mut prev_gap = f64::INFINITY;
        for n in 1..16 {
            let t = finite_tree_moments(&e, 4, n, 2, ArithmeticMode::HighPrecisionFloat).unwrap();
            let gap = limit - t.values[2];
            assert!(gap > 0.0 && gap < prev_gap);
            if prev_gap.is_finite() {
                assert!((gap / prev_gap - 0.5).abs() < 1e-6);
            }
            prev_gap = gap;
        }
    }

    #[test]
    fn finite_tree_float_matches_exact() {
        let tp = WeightModel::two_point(0.5).unwrap();
        let a = finite_tree_moments(&tp, 3, 4, 8, ArithmeticMode::HighPrecisionFloat).unwrap();
        let b = finite_tree_moments(&tp, 3, 4, 8, ArithmeticMode::ExactRational).unwrap();
        for h in 0..=8 {
            assert!((a.values[h] / b.values[h] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn upper_bound_examples() {
        let e = WeightModel::exponential();
        let b = moment_upper_bound(&e, 200, 10, 0.5).unwrap();
        let c: f64 = 4.0 + 13.0 / 12.0;
        let expect = (100.0 / 380.0 * (1.5 + c / 10.0)).exp();
        assert!((b - expect).abs() < 1e-14);
        assert!((b - 1.696).abs() < 1e-3);
        let b1 = moment_upper_bound(&e, 50, 1, 1.0).unwrap();
        assert!((b1 - (1.0 / 98.0 * (2.0 + c)).exp()).abs() < 1e-14);
        assert!(moment_upper_bound(&e, 10, 10, 0.5).is_err());
        let t = cascade_moments(&e, 200, 10, ArithmeticMode::HighPrecisionFloat).unwrap();
        assert!(b >= t.values[10]);
    }

    #[test]
    fn kappa_examples() {
        let e = WeightModel::exponential();
        let k = kappa_estimate(&e, 0.2, &[10]).unwrap();
        assert_eq!(k[0].order, 2);
        assert!((k[0].value - (9.0f64 / 8.0).ln() / 10.0).abs() < 1e-15);
        assert!((k[0].value - 0.01178).abs() < 1e-5);
        let k = kappa_estimate(&e, 0.2, &[10, 20, 40]).unwrap();
        assert!(k.iter().all(|p| p.value > 0.0 && p.value <= 5.0 * 0.04));
        let k = kappa_estimate(&e, 0.15, &[10]).unwrap();
        assert_eq!(k[0].value, 0.0);
        assert!(kappa_estimate(&e, 3.0, &[10]).is_err());
    }

    #[test]
    fn inverse_moment_ratio_peaks_at_two() {
        let e = WeightModel::exponential();
        for r in [50u64, 200] {
            let top = (0.2 * r as f64).floor() as u32;
            let ratio = |h: u32| (e.ln_raw_moment(f64::from(h)) - f64::from(h - 1) * (r as f64).ln()).exp();
            let best = (2..=top).map(ratio).fold(0.0, f64::max);
            assert!((best - 2.0 / r as f64).abs() < 1e-15);
        }
    }

    fn compositions(total: u32, slots: u64, cap: u32, out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>) {
        if cur.len() as u64 == slots {
            if total == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for i in 0..=total.min(cap) {
            cur.push(i);
            compositions(total - i, slots, cap, out, cur);
            cur.pop();
        }
    }

    /// Direct multinomial expansion of `E[(Σ W_i Z_i)^h]` over ordered compositions.
    fn direct_oracle(model: &WeightModel, r: u64, h_max: u32) -> Vec<BigRational> {
        let rq = BigRational::from_integer(BigInt::from(r));
        let mut z = vec![BigRational::one(); h_max as usize + 1];
        for h in 2..=h_max {
            let mut comps = Vec::new();
            compositions(h, r, h - 1, &mut comps, &mut Vec::new());
            let mut s = BigRational::zero();
            for c in comps {
                let mut t = BigRational::from_integer(factorial_big(u64::from(h)));
                for &i in &c {
                    t = t * model.exact_raw_moment(i) * &z[i as usize]
                        / BigRational::from_integer(factorial_big(u64::from(i)));
                }
                s += t;
            }
            let den = num_traits::pow(rq.clone(), h as usize) - &rq * model.exact_raw_moment(h);
            z[h as usize] = s / den;
        }
        z
    }

    #[test]
    fn multiplicity_form_matches_direct_expansion() {
        for m in [WeightModel::exponential(), WeightModel::gamma(3.0).unwrap(), WeightModel::two_point(0.5).unwrap()] {
            for r in 3..=6u64 {
                let top = (2..=6).take_while(|&h| ln_denominator(&m, r, h).is_some()).last().unwrap_or(1);
                let t = cascade_moments(&m, r, top, ArithmeticMode::ExactRational).unwrap();
                assert_eq!(t.exact.unwrap(), direct_oracle(&m, r, top), "{} r={r}", m.id());
            }
        }
    }

    #[test]
    fn variance_anchor() {
        // Var(Z_r) = (E W^2 - 1) / (r - E W^2)
        let e = WeightModel::exponential();
        let t = cascade_moments(&e, 3, 2, ArithmeticMode::ExactRational).unwrap();
        assert_eq!(t.variance_exact().unwrap(), BigRational::one());
    }

    proptest::proptest! {
        #[test]
        fn moments_log_convex(r in 5u64..40, shape in 0.5f64..4.0) {
            let m = WeightModel::gamma(shape).unwrap();
            let top = (2..=12).take_while(|&h| ln_denominator(&m, r, h).is_some()).last().unwrap_or(1);
            proptest::prop_assume!(top >= 4);
            let t = cascade_moments(&m, r, top, ArithmeticMode::HighPrecisionFloat).unwrap();
            for h in 1..top as usize {
                let l = &t.ln_values;
                proptest::prop_assert!(l[h - 1] + l[h + 1] >= 2.0 * l[h] - 1e-12);
            }
        }

        #[test]
        fn finite_tree_increases_to_limit(r in 3u64..20, n in 1u32..6) {
            let m = WeightModel::exponential();
            let top = (2..=5).take_while(|&h| ln_denominator(&m, r, h).is_some()).last().unwrap_or(1);
            proptest::prop_assume!(top >= 2);
            let a = finite_tree_moments(&m, r, n, top, ArithmeticMode::HighPrecisionFloat).unwrap();
            let b = finite_tree_moments(&m, r, n + 1, top, ArithmeticMode::HighPrecisionFloat).unwrap();
            let lim = cascade_moments(&m, r, top, ArithmeticMode::HighPrecisionFloat).unwrap();
            for h in 2..=top as usize {
                proptest::prop_assert!(a.values[h] <= b.values[h] * (1.0 + 1e-12));
                proptest::prop_assert!(b.values[h] <= lim.values[h] * (1.0 + 1e-12));
            }
        }
    }
}
