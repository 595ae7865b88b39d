//! Law of the cascade weight `W`.
//!
//! Every supported law is nonnegative with mean exactly one and has closed
//! forms for its cumulant generating function, derivative, raw moments and
//! `E[W log W]`. Those closed forms are what make the downstream oracles exact.
//!
//! | kind          | tail rate `c` | ess sup        | `P(W = 0)` |
//! |---------------|---------------|----------------|------------|
//! | `Degenerate`  | ∞             | 1              | 0          |
//! | `Exponential` | 1             | ∞              | 0          |
//! | `Gamma(k)`    | k             | ∞              | 0          |
//! | `TwoPoint(p)` | ∞             | 1/(1-p)        | p          |
//!
//! A law with `c = ∞` and unbounded support is not among these kinds.
//!
//! Extended reals are plain `f64` with IEEE infinities: `f64::INFINITY` is the
//! value `+∞` and obeys `∞ + x = ∞`, `min(∞, x) = x`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, gamma_lr, ln_gamma};

use crate::error::{CascadeError, Result};

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// The four supported weight laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// `W ≡ 1`.
    Degenerate,
    /// Exponential with mean 1.
    Exponential,
    /// Gamma with the given shape and rate equal to the shape (mean 1).
    Gamma { shape: f64 },
    /// `P(W = 0) = p_zero`, otherwise `W = 1/(1 - p_zero)`.
    TwoPoint { p_zero: f64 },
}

/// A validated weight law together with its sampler.
#[derive(Debug, Clone)]
pub struct WeightModel {
    kind: WeightKind,
    gamma: Option<Gamma<f64>>,
}

impl WeightModel {
    pub fn new(kind: WeightKind) -> Result<Self> {
        let gamma = match kind {
            WeightKind::Gamma { shape } => {
                if !(shape.is_finite() && shape > 0.0) {
                    return Err(CascadeError::config(format!(
                        "gamma shape must be positive and finite, got {shape}"
                    )));
                }
                Some(
                    Gamma::new(shape, 1.0 / shape)
                        .map_err(|e| CascadeError::config(format!("gamma law: {e}")))?,
                )
            }
            WeightKind::TwoPoint { p_zero } => {
                if !(0.0..1.0).contains(&p_zero) {
                    return Err(CascadeError::config(format!(
                        "two-point p_zero must lie in [0, 1), got {p_zero}"
                    )));
                }
                None
            }
            WeightKind::Degenerate | WeightKind::Exponential => None,
        };
        Ok(Self { kind, gamma })
    }

    pub fn degenerate() -> Self {
        Self::new(WeightKind::Degenerate).expect("valid")
    }

    pub fn exponential() -> Self {
        Self::new(WeightKind::Exponential).expect("valid")
    }

    pub fn gamma(shape: f64) -> Result<Self> {
        Self::new(WeightKind::Gamma { shape })
    }

    pub fn two_point(p_zero: f64) -> Result<Self> {
        Self::new(WeightKind::TwoPoint { p_zero })
    }

    /// Builds a model from the `w.kind`, `w.shape`, `w.p_zero` configuration keys.
    pub fn from_spec(kind: &str, shape: Option<f64>, p_zero: Option<f64>) -> Result<Self> {
        let kind = match kind.trim().to_ascii_lowercase().as_str() {
            "degenerate" | "const" | "one" => WeightKind::Degenerate,
            "exp" | "exponential" => WeightKind::Exponential,
            "gamma" => WeightKind::Gamma {
                shape: shape.ok_or_else(|| CascadeError::config("w.shape is required for gamma"))?,
            },
            "two_point" | "twopoint" | "two-point" => WeightKind::TwoPoint {
                p_zero: p_zero
                    .ok_or_else(|| CascadeError::config("w.p_zero is required for two_point"))?,
            },
            other => {
                return Err(CascadeError::config(format!("unknown weight kind `{other}`")));
            }
        };
        Self::new(kind)
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// Short stable identifier, used in file metadata.
    pub fn id(&self) -> String {
        match self.kind {
            WeightKind::Degenerate => "degenerate".to_string(),
            WeightKind::Exponential => "exp".to_string(),
            WeightKind::Gamma { shape } => format!("gamma(shape={shape})"),
            WeightKind::TwoPoint { p_zero } => format!("two_point(p_zero={p_zero})"),
        }
    }

    /// Tail rate `c = sup dom(cgf)`.
    pub fn c(&self) -> f64 {
        match self.kind {
            WeightKind::Degenerate | WeightKind::TwoPoint { .. } => f64::INFINITY,
            WeightKind::Exponential => 1.0,
            WeightKind::Gamma { shape } => shape,
        }
    }

    pub fn p_zero(&self) -> f64 {
        match self.kind {
            WeightKind::TwoPoint { p_zero } => p_zero,
            _ => 0.0,
        }
    }

    pub fn ess_sup(&self) -> f64 {
        match self.kind {
            WeightKind::Degenerate => 1.0,
            WeightKind::Exponential | WeightKind::Gamma { .. } => f64::INFINITY,
            WeightKind::TwoPoint { p_zero } => 1.0 / (1.0 - p_zero),
        }
    }

    /// Probability of the atom at the essential supremum (zero for continuous laws).
    pub fn p_ess_sup(&self) -> f64 {
        match self.kind {
            WeightKind::Degenerate => 1.0,
            WeightKind::Exponential | WeightKind::Gamma { .. } => 0.0,
            WeightKind::TwoPoint { p_zero } => 1.0 - p_zero,
        }
    }

    pub fn variance(&self) -> f64 {
        match self.kind {
            WeightKind::Degenerate => 0.0,
            WeightKind::Exponential => 1.0,
            WeightKind::Gamma { shape } => 1.0 / shape,
            WeightKind::TwoPoint { p_zero } => p_zero / (1.0 - p_zero),
        }
    }

    pub fn second_moment(&self) -> f64 {
        1.0 + self.variance()
    }

    /// `log E[exp(tW)]`, `+∞` outside the domain.
    pub fn cgf(&self, t: f64) -> f64 {
        match self.kind {
            WeightKind::Degenerate => t,
            WeightKind::Exponential => {
                if t < 1.0 {
                    -(-t).ln_1p()
                } else {
                    f64::INFINITY
                }
            }
            WeightKind::Gamma { shape } => {
                if t < shape {
                    -shape * (-t / shape).ln_1p()
                } else {
                    f64::INFINITY
                }
            }
            WeightKind::TwoPoint { p_zero } => {
                let v = 1.0 / (1.0 - p_zero);
                if p_zero == 0.0 {
                    v * t
                } else {
                    log_add_exp(p_zero.ln(), (-p_zero).ln_1p() + v * t)
                }
            }
        }
    }

    /// Derivative of the cgf; defined for `t < c`.
    pub fn cgf_derivative(&self, t: f64) -> Result<f64> {
        if t >= self.c() || t.is_nan() {
            return Err(CascadeError::domain(format!(
                "cgf derivative requested at t = {t} outside the domain (c = {})",
                self.c()
            )));
        }
        Ok(self.cgf_derivative_unchecked(t))
    }

    pub(crate) fn cgf_derivative_unchecked(&self, t: f64) -> f64 {
        match self.kind {
            WeightKind::Degenerate => 1.0,
            WeightKind::Exponential => 1.0 / (1.0 - t),
            WeightKind::Gamma { shape } => shape / (shape - t),
            WeightKind::TwoPoint { p_zero } => {
                let v = 1.0 / (1.0 - p_zero);
                if p_zero == 0.0 {
                    v
                } else {
                    // v * logistic(v t + log((1-p)/p))
                    let x = v * t + ((-p_zero).ln_1p() - p_zero.ln());
                    v * logistic(x)
                }
            }
        }
    }

    /// `lim_{t -> c^-} cgf'(t)`.
    pub fn cgf_derivative_sup(&self) -> f64 {
        match self.kind {
            WeightKind::Degenerate => 1.0,
            WeightKind::Exponential | WeightKind::Gamma { .. } => f64::INFINITY,
            WeightKind::TwoPoint { .. } => self.ess_sup(),
        }
    }

    /// `E[W^h]` for real `h >= 0`.
    pub fn raw_moment(&self, h: f64) -> f64 {
        if h == 0.0 {
            return 1.0;
        }
        if h.fract() == 0.0 && h <= 170.0 {
            let k = h as u32;
            match self.kind {
                WeightKind::Exponential => return (1..=k).map(f64::from).product(),
                WeightKind::Gamma { shape } => {
                    return (0..k).map(|j| (shape + f64::from(j)) / shape).product();
                }
                WeightKind::TwoPoint { p_zero } => {
                    return (1.0 - p_zero) * (1.0 / (1.0 - p_zero)).powi(k as i32);
                }
                WeightKind::Degenerate => return 1.0,
            }
        }
        self.ln_raw_moment(h).exp()
    }

    /// `log E[W^h]`; finite for every supported kind and `h >= 0`.
    pub fn ln_raw_moment(&self, h: f64) -> f64 {
        if h == 0.0 {
            return 0.0;
        }
        match self.kind {
            WeightKind::Degenerate => 0.0,
            WeightKind::Exponential => ln_gamma(h + 1.0),
            WeightKind::Gamma { shape } => {
                ln_gamma(shape + h) - ln_gamma(shape) - h * shape.ln()
            }
            WeightKind::TwoPoint { p_zero } => (-p_zero).ln_1p() - h * (-p_zero).ln_1p(),
        }
    }

    /// `E[W^h]` for integer `h` as an exact rational.
    ///
    /// Floating-point parameters are converted exactly (every finite `f64` is
    /// a dyadic rational), so the result is the exact moment of the law the
    /// model actually represents.
    pub fn exact_raw_moment(&self, h: u32) -> BigRational {
        if h == 0 {
            return BigRational::one();
        }
        match self.kind {
            WeightKind::Degenerate => BigRational::one(),
            WeightKind::Exponential => {
                BigRational::from_integer((1..=h).fold(BigInt::one(), |acc, j| acc * j))
            }
            WeightKind::Gamma { shape } => {
                let k = BigRational::from_float(shape).expect("finite shape");
                (0..h).fold(BigRational::one(), |acc, j| {
                    acc * (&k + BigRational::from_integer(j.into())) / &k
                })
            }
            WeightKind::TwoPoint { p_zero } => {
                let p = BigRational::from_float(p_zero).expect("finite p_zero");
                let q = BigRational::one() - p;
                let v = q.recip();
                let mut out = q;
                for _ in 0..h {
                    out *= &v;
                }
                out
            }
        }
    }

    /// `E[W log W]`, the quantity behind the nondegeneracy threshold `r > exp E[W log W]`.
    pub fn w_log_w_mean(&self) -> f64 {
        match self.kind {
            WeightKind::Degenerate => 0.0,
            WeightKind::Exponential => 1.0 - EULER_GAMMA,
            WeightKind::Gamma { shape } => digamma(shape + 1.0) - shape.ln(),
            WeightKind::TwoPoint { p_zero } => -(-p_zero).ln_1p(),
        }
    }

    /// Checks `r > exp E[W log W]`, which makes `E[Z_r^∞] = 1`.
    pub fn check_branching(&self, r: u64) -> Result<()> {
        if r < 2 {
            return Err(CascadeError::domain(format!("branching number r = {r} must be >= 2")));
        }
        if (r as f64).ln() <= self.w_log_w_mean() {
            return Err(CascadeError::domain(format!(
                "r = {r} does not exceed exp E[W log W] = {:.6}",
                self.w_log_w_mean().exp()
            )));
        }
        Ok(())
    }

    pub fn cdf(&self, w: f64) -> f64 {
        if w < 0.0 {
            return 0.0;
        }
        match self.kind {
            WeightKind::Degenerate => {
                if w < 1.0 {
                    0.0
                } else {
                    1.0
                }
            }
            WeightKind::Exponential => -(-w).exp_m1(),
            WeightKind::Gamma { shape } => gamma_lr(shape, shape * w),
            WeightKind::TwoPoint { p_zero } => {
                if w < self.ess_sup() {
                    p_zero
                } else {
                    1.0
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            WeightKind::Degenerate => 1.0,
            WeightKind::Exponential => Exp1.sample(rng),
            WeightKind::Gamma { .. } => self.gamma.as_ref().expect("gamma sampler").sample(rng),
            WeightKind::TwoPoint { p_zero } => {
                if rng.random::<f64>() < p_zero {
                    0.0
                } else {
                    1.0 / (1.0 - p_zero)
                }
            }
        }
    }
}

impl fmt::Display for WeightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl PartialEq for WeightModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;

    fn all_models() -> Vec<WeightModel> {
        vec![
            WeightModel::degenerate(),
            WeightModel::exponential(),
            WeightModel::gamma(2.0).unwrap(),
            WeightModel::gamma(0.7).unwrap(),
            WeightModel::two_point(0.5).unwrap(),
            WeightModel::two_point(0.2).unwrap(),
        ]
    }

    #[test]
    fn mean_is_one() {
        for m in all_models() {
            let d = m.cgf_derivative(0.0).unwrap();
            assert!((d - 1.0).abs() < 1e-12, "{m}: {d}");
            assert_relative_eq!(m.raw_moment(1.0), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn two_point_mean_identity() {
        for p in [0.0, 0.1, 0.5, 0.75] {
            let m = WeightModel::two_point(p).unwrap();
            assert_eq!((1.0 - p) * m.ess_sup(), 1.0);
        }
    }

    #[test]
    fn cgf_examples() {
        let e = WeightModel::exponential();
        assert_eq!(e.cgf(0.0), 0.0);
        assert_relative_eq!(e.cgf(0.5), 2f64.ln(), max_relative = 1e-15);
        assert_eq!(e.cgf(1.0), f64::INFINITY);
        let tp = WeightModel::two_point(0.5).unwrap();
        let expect = ((1.0 + 2f64.exp()) / 2.0).ln();
        assert_relative_eq!(tp.cgf(1.0), expect, max_relative = 1e-14);
        assert!((expect - 1.4338).abs() < 1e-4);
    }

    #[test]
    fn cgf_derivative_examples() {
        let e = WeightModel::exponential();
        assert_eq!(e.cgf_derivative(0.0).unwrap(), 1.0);
        assert_eq!(e.cgf_derivative(0.5).unwrap(), 2.0);
        assert!(matches!(e.cgf_derivative(1.0), Err(CascadeError::Domain(_))));
        assert_eq!(WeightModel::degenerate().cgf_derivative(7.0).unwrap(), 1.0);
    }

    #[test]
    fn raw_moment_examples() {
        assert_eq!(WeightModel::exponential().raw_moment(2.0), 2.0);
        assert_eq!(WeightModel::two_point(0.5).unwrap().raw_moment(3.0), 4.0);
        for m in all_models() {
            assert_eq!(m.raw_moment(0.0), 1.0);
        }
        // non-integer order through log-gamma
        let e = WeightModel::exponential();
        assert_relative_eq!(e.raw_moment(0.5), std::f64::consts::PI.sqrt() / 2.0, max_relative = 1e-12);
        let g = WeightModel::gamma(2.0).unwrap();
        // Γ(2 + 1.5) / (Γ(2) 2^1.5)
        let expect = (2.5 * 1.5 * 0.5 * std::f64::consts::PI.sqrt()) / 2f64.powf(1.5);
        assert_relative_eq!(g.raw_moment(1.5), expect, max_relative = 1e-12);
    }

    #[test]
    fn exact_moments_match_float() {
        use num_traits::ToPrimitive;
        for m in all_models() {
            for h in 0..12u32 {
                let exact = m.exact_raw_moment(h).to_f64().unwrap();
                assert_relative_eq!(exact, m.raw_moment(f64::from(h)), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn w_log_w_examples() {
        assert_eq!(WeightModel::degenerate().w_log_w_mean(), 0.0);
        assert!((WeightModel::exponential().w_log_w_mean() - 0.42278).abs() < 1e-5);
        assert_relative_eq!(
            WeightModel::two_point(0.5).unwrap().w_log_w_mean(),
            2f64.ln(),
            max_relative = 1e-15
        );
        // gamma(1) is the exponential law
        assert_relative_eq!(
            WeightModel::gamma(1.0).unwrap().w_log_w_mean(),
            1.0 - EULER_GAMMA,
            max_relative = 1e-10
        );
    }

    #[test]
    fn w_log_w_gamma_quadrature() {
        // midpoint rule on the density of Gamma(k, rate k)
        let k: f64 = 2.5;
        let n = 400_000;
        let upper = 40.0;
        let dw = upper / n as f64;
        let ln_norm = k * k.ln() - ln_gamma(k);
        let mut acc = 0.0;
        for i in 0..n {
            let w = (i as f64 + 0.5) * dw;
            let dens = (ln_norm + (k - 1.0) * w.ln() - k * w).exp();
            acc += w * w.ln() * dens * dw;
        }
        let m = WeightModel::gamma(k).unwrap();
        assert!((acc - m.w_log_w_mean()).abs() < 1e-6, "{acc} vs {}", m.w_log_w_mean());
    }

    #[test]
    fn tail_rate_is_domain_edge() {
        for m in all_models() {
            let c = m.c();
            if c.is_finite() {
                assert!(m.cgf(c * (1.0 - 1e-9)).is_finite());
                assert_eq!(m.cgf(c), f64::INFINITY);
            } else {
                assert!(m.cgf(50.0).is_finite());
            }
        }
    }

    #[test]
    fn cgf_is_convex_on_grid() {
        for m in all_models() {
            let hi = if m.c().is_finite() { m.c() * 0.999 } else { 20.0 };
            let lo = -10.0;
            let ts: Vec<f64> = (0..40).map(|i| lo + (hi - lo) * i as f64 / 39.0).collect();
            for (i, &t1) in ts.iter().enumerate() {
                for &t2 in &ts[i + 1..] {
                    for lam in [0.1, 0.3, 0.5, 0.9] {
                        let mid = m.cgf(lam * t1 + (1.0 - lam) * t2);
                        let chord = lam * m.cgf(t1) + (1.0 - lam) * m.cgf(t2);
                        assert!(mid <= chord + 1e-10, "{m}: t1={t1} t2={t2}");
                    }
                }
            }
        }
    }

    #[test]
    fn cgf_derivative_strictly_increasing() {
        for m in all_models() {
            if m.kind() == WeightKind::Degenerate {
                continue;
            }
            let hi = m.c().min(10.0);
            let mut prev = f64::NEG_INFINITY;
            for i in 0..100 {
                let t = -10.0 + (hi + 10.0) * (i as f64 + 0.5) / 100.0;
                let d = m.cgf_derivative(t).unwrap();
                assert!(d > prev, "{m} at {t}");
                prev = d;
            }
        }
    }

    #[test]
    fn raw_moment_log_convex() {
        for m in all_models() {
            for h in 1..30 {
                let h = f64::from(h);
                let mid = m.ln_raw_moment(h);
                let avg = 0.5 * (m.ln_raw_moment(h - 1.0) + m.ln_raw_moment(h + 1.0));
                assert!(mid <= avg + 1e-9, "{m} h={h}");
            }
        }
    }

    #[test]
    fn exponential_moment_growth_matches_tail_rate() {
        let e = WeightModel::exponential();
        for h in 1..60 {
            let h = f64::from(h);
            let v = (e.ln_raw_moment(h) - ln_gamma(h + 1.0)) / h;
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn sample_examples() {
        let d = WeightModel::degenerate();
        let mut rng = RngStream::new(3, 0);
        assert_eq!(d.sample(&mut rng), 1.0);

        let n = 1_000_000;
        let e = WeightModel::exponential();
        let mut rng = RngStream::new(11, 0);
        let mean = (0..n).map(|_| e.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "{mean}");

        let tp = WeightModel::two_point(0.5).unwrap();
        let mut rng = RngStream::new(12, 0);
        let zeros = (0..n).filter(|_| tp.sample(&mut rng) == 0.0).count();
        let frac = zeros as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * se);
    }

    fn atom_mass(m: &WeightModel, x: f64) -> f64 {
        match m.kind() {
            WeightKind::Degenerate if x == 1.0 => 1.0,
            WeightKind::TwoPoint { p_zero } if x == 0.0 => p_zero,
            WeightKind::TwoPoint { p_zero } if x == m.ess_sup() => 1.0 - p_zero,
            _ => 0.0,
        }
    }

    #[test]
    fn empirical_cdf_matches_law() {
        // Kolmogorov–Smirnov at level 1e-3: critical value ≈ 1.95 / sqrt(n)
        let n = 100_000;
        let crit = 1.949 / (n as f64).sqrt();
        for m in all_models() {
            let mut rng = RngStream::new(99, 1);
            let mut xs: Vec<f64> = (0..n).map(|_| m.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let mut d: f64 = 0.0;
            let mut i = 0;
            while i < n {
                let x = xs[i];
                let mut j = i;
                while j < n && xs[j] == x {
                    j += 1;
                }
                let f = m.cdf(x);
                let f_minus = f - atom_mass(&m, x);
                d = d.max((j as f64 / n as f64 - f).abs());
                d = d.max((i as f64 / n as f64 - f_minus).abs());
                i = j;
            }
            assert!(d < crit, "{m}: KS distance {d} >= {crit}");
        }
    }

    #[test]
    fn from_spec_parses_and_rejects() {
        assert_eq!(WeightModel::from_spec("exp", None, None).unwrap(), WeightModel::exponential());
        assert!(WeightModel::from_spec("gamma", Some(2.0), None).is_ok());
        assert!(matches!(WeightModel::from_spec("gamma", None, None), Err(CascadeError::Config(_))));
        assert!(matches!(WeightModel::from_spec("lognormal", None, None), Err(CascadeError::Config(_))));
        assert!(matches!(WeightModel::two_point(1.0), Err(CascadeError::Config(_))));
        assert!(matches!(WeightModel::gamma(-1.0), Err(CascadeError::Config(_))));
    }

    #[test]
    fn branching_threshold() {
        let tp = WeightModel::two_point(0.5).unwrap();
        assert!(tp.check_branching(2).is_err());
        assert!(tp.check_branching(3).is_ok());
        assert!(WeightModel::exponential().check_branching(2).is_ok());
    }
}
