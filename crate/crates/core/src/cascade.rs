//! Sampling of cascade masses and exact zero-mass probabilities.
//!
//! Finite-tree masses are drawn exactly by depth-first recursion of
//! `Z^n = (1/r) Σ W_i Z_i^{n-1}`. The infinite-tree mass is approximated by
//! population dynamics on the distributional fixed point
//! `Z = (1/r) Σ W_i Z_i`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::ratefn::Level;
use crate::rng::RngStream;
use crate::wmodel::WeightModel;

/// Largest number of leaves allowed in one finite-tree draw.
pub const MAX_LEAVES: u64 = 1 << 26;

pub const DEFAULT_POOL_SIZE: usize = 100_000;
pub const DEFAULT_ITERATIONS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum GenParams {
    Exact { n: u32 },
    Population { pool_size: usize, iterations: u32, renormalized: bool },
}

/// Summary statistics of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub count: usize,
    #[serde(with = "crate::io::ext_real")]
    pub mean: f64,
    #[serde(with = "crate::io::ext_real")]
    pub sd: f64,
    #[serde(with = "crate::io::ext_real")]
    pub second_moment: f64,
    #[serde(with = "crate::io::ext_real")]
    pub third_moment: f64,
    #[serde(with = "crate::io::ext_real")]
    pub min: f64,
    #[serde(with = "crate::io::ext_real")]
    pub max: f64,
    #[serde(with = "crate::io::ext_real")]
    pub zero_fraction: f64,
    /// Set when the mean sits more than five standard errors from 1.
    pub mean_drift_flag: bool,
}

impl BatchStats {
    pub fn from_samples(xs: &[f64]) -> Self {
        let count = xs.len();
        let nf = count as f64;
        let (mut s1, mut s2, mut s3, mut zeros) = (0.0, 0.0, 0.0, 0usize);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in xs {
            s1 += x;
            s2 += x * x;
            s3 += x * x * x;
            min = min.min(x);
            max = max.max(x);
            if x == 0.0 {
                zeros += 1;
            }
        }
        let mean = s1 / nf;
        let var = if count > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)
        } else {
            0.0
        };
        let sd = var.sqrt();
        let se = sd / nf.sqrt();
        Self {
            count,
            mean,
            sd,
            second_moment: s2 / nf,
            third_moment: s3 / nf,
            min,
            max,
            zero_fraction: zeros as f64 / nf,
            mean_drift_flag: (mean - 1.0).abs() > 5.0 * se,
        }
    }
}

/// Standard error of the empirical `k`-th raw moment.
pub fn moment_se(xs: &[f64], k: i32) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().map(|x| x.powi(k)).sum::<f64>() / n;
    let v = xs.iter().map(|x| (x.powi(k) - m).powi(2)).sum::<f64>() / (n - 1.0);
    (v / n).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSampleBatch {
    pub model_id: String,
    pub r: u64,
    pub level: Level,
    pub seed: u64,
    pub gen_params: GenParams,
    pub samples: Vec<f64>,
}

impl CascadeSampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn stats(&self) -> BatchStats {
        BatchStats::from_samples(&self.samples)
    }
}

fn check_r(r: u64) -> Result<()> {
    if r < 2 {
        return Err(CascadeError::domain(format!("branching number r = {r} must be >= 2")));
    }
    Ok(())
}

fn draw_subtree<R: Rng + ?Sized>(model: &WeightModel, r: u64, depth: u32, rng: &mut R) -> f64 {
    let inv_r = 1.0 / r as f64;
    if depth == 1 {
        return (0..r).map(|_| model.sample(rng)).sum::<f64>() * inv_r;
    }
    let mut acc = 0.0;
    for _ in 0..r {
        let w = model.sample(rng);
        acc += w * draw_subtree(model, r, depth - 1, rng);
    }
    acc * inv_r
}

/// One exact draw of `Z_r^n`.
pub fn draw_finite<R: Rng + ?Sized>(model: &WeightModel, r: u64, n: u32, rng: &mut R) -> f64 {
    draw_subtree(model, r, n, rng)
}

/// `count` independent draws of `Z_r^n`; sample `i` uses stream `(seed, i)`.
pub fn sample_finite(model: &WeightModel, r: u64, n: u32, count: usize, seed: u64) -> Result<CascadeSampleBatch> {
    check_r(r)?;
    if n == 0 {
        return Err(CascadeError::domain("level n must be >= 1"));
    }
    let leaves = (r as f64).powi(n as i32);
    if leaves > MAX_LEAVES as f64 {
        return Err(CascadeError::Resource(format!(
            "r^n = {r}^{n} leaves exceeds the per-sample limit of 2^26"
        )));
    }
    let samples = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            draw_finite(model, r, n, &mut rng)
        })
        .collect();
    Ok(CascadeSampleBatch {
        model_id: model.id(),
        r,
        level: Level::Finite(n),
        seed,
        gen_params: GenParams::Exact { n },
        samples,
    })
}

/// One generation of population dynamics: each new member is
/// `(1/r) Σ W_i Z_i` with `Z_i` drawn uniformly from `pool`.
fn population_step(model: &WeightModel, r: u64, pool: &[f64], seed: u64, generation: u64) -> Vec<f64> {
    let n = pool.len();
    let inv_r = 1.0 / r as f64;
    (0..n)
        .into_par_iter()
        .map(|j| {
            let mut rng = RngStream::new(seed, generation * n as u64 + j as u64);
            let mut acc = 0.0;
            for _ in 0..r {
                let w = model.sample(&mut rng);
                let z = pool[rng.random_range(0..n)];
                acc += w * z;
            }
            acc * inv_r
        })
        .collect()
}

/// Population-dynamics approximation of the law of `Z_r^∞`.
///
/// With `renormalize`, generations `1..T-1` are rescaled to mean one before
/// being resampled; the final generation is returned as drawn.
pub fn sample_infinite(
    model: &WeightModel,
    r: u64,
    pool_size: usize,
    iterations: u32,
    seed: u64,
    renormalize: bool,
) -> Result<CascadeSampleBatch> {
    model.check_branching(r)?;
    if pool_size == 0 || iterations == 0 {
        return Err(CascadeError::domain("pool size and iteration count must be positive"));
    }
    let mut pool = vec![1.0; pool_size];
    for t in 0..iterations {
        pool = population_step(model, r, &pool, seed, u64::from(t));
        if renormalize && t + 1 < iterations {
            let mean = pool.iter().sum::<f64>() / pool_size as f64;
            if mean > 0.0 {
                pool.iter_mut().for_each(|z| *z /= mean);
            }
        }
    }
    Ok(CascadeSampleBatch {
        model_id: model.id(),
        r,
        level: Level::Infinite,
        seed,
        gen_params: GenParams::Population { pool_size, iterations, renormalized: renormalize },
        samples: pool,
    })
}

/// Builds `(1/r) Σ W_i Z_i` from a converged pool, for self-consistency checks.
pub fn fixed_point_image(model: &WeightModel, batch: &CascadeSampleBatch, seed: u64) -> Vec<f64> {
    population_step(model, batch.r, &batch.samples, seed, 0)
}

/// `P(Z_r^n = 0)` from `q^1 = p^r`, `q^n = (p + (1-p) q^{n-1})^r`.
pub fn zero_mass_finite(model: &WeightModel, r: u64, n: u32) -> Result<f64> {
    check_r(r)?;
    if n == 0 {
        return Err(CascadeError::domain("level n must be >= 1"));
    }
    let p = model.p_zero();
    let mut q = 0.0;
    for _ in 0..n {
        q = (p + (1.0 - p) * q).powf(r as f64);
    }
    Ok(q)
}

/// `P(Z_r^∞ = 0)`: the smallest fixed point of `x ↦ (p + (1-p) x)^r`.
pub fn zero_mass_infinite(model: &WeightModel, r: u64) -> Result<f64> {
    model.check_branching(r)?;
    let p = model.p_zero();
    if p == 0.0 {
        return Ok(0.0);
    }
    let f = |x: f64| (p + (1.0 - p) * x).powf(r as f64);
    let mut q = 0.0;
    for _ in 0..1_000_000 {
        let next = f(q);
        if next <= q || (next - q) <= f64::EPSILON * next {
            return Ok(next.max(q));
        }
        q = next;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_is_exactly_one() {
        let d = WeightModel::degenerate();
        let b = sample_finite(&d, 3, 4, 50, 1).unwrap();
        assert!(b.samples.iter().all(|&x| x == 1.0));
        let b = sample_infinite(&d, 5, 100, 5, 1, true).unwrap();
        assert!(b.samples.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn finite_sampler_matches_moments() {
        let e = WeightModel::exponential();
        let b = sample_finite(&e, 4, 2, 100_000, 7).unwrap();
        let s = b.stats();
        let se1 = moment_se(&b.samples, 1);
        let se2 = moment_se(&b.samples, 2);
        assert!((s.mean - 1.0).abs() < 3.0 * se1, "{s:?}");
        assert!((s.second_moment - 1.375).abs() < 3.0 * se2, "{s:?}");
        assert!(!s.mean_drift_flag);
    }

    #[test]
    fn two_point_zero_fraction() {
        let tp = WeightModel::two_point(0.5).unwrap();
        let b = sample_finite(&tp, 3, 1, 100_000, 3).unwrap();
        let p = b.stats().zero_fraction;
        let se = (0.125f64 * 0.875 / 1e5).sqrt();
        assert!((p - 0.125).abs() < 3.0 * se, "{p}");
        assert!(b.samples.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn resource_guard() {
        let e = WeightModel::exponential();
        assert!(matches!(sample_finite(&e, 2, 27, 1, 0), Err(CascadeError::Resource(_))));
        assert!(matches!(sample_finite(&e, 1, 2, 1, 0), Err(CascadeError::Domain(_))));
        assert!(matches!(sample_infinite(&e, 1, 10, 2, 0, true), Err(CascadeError::Domain(_))));
    }

    #[test]
    fn reproducible_batches() {
        let e = WeightModel::exponential();
        let a = sample_finite(&e, 5, 3, 300, 11).unwrap();
        let b = sample_finite(&e, 5, 3, 300, 11).unwrap();
        assert_eq!(a, b);
        let c = sample_finite(&e, 5, 3, 300, 12).unwrap();
        assert_ne!(a.samples, c.samples);
        let a = sample_infinite(&e, 4, 500, 4, 11, true).unwrap();
        let b = sample_infinite(&e, 4, 500, 4, 11, true).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn population_matches_fixed_point() {
        let e = WeightModel::exponential();
        let b = sample_infinite(&e, 10, 100_000, 30, 5, true).unwrap();
        let s = b.stats();
        assert!((s.mean - 1.0).abs() < 5.0 * moment_se(&b.samples, 1));
        assert!((s.second_moment - 1.125).abs() < 5.0 * moment_se(&b.samples, 2), "{s:?}");
    }

    #[test]
    fn distributional_residual() {
        let e = WeightModel::exponential();
        let b = sample_infinite(&e, 6, 100_000, 30, 21, true).unwrap();
        let x = fixed_point_image(&e, &b, 22);
        for k in 1..=3 {
            let m_pool = b.samples.iter().map(|z| z.powi(k)).sum::<f64>() / b.len() as f64;
            let m_x = x.iter().map(|z| z.powi(k)).sum::<f64>() / x.len() as f64;
            let se = (moment_se(&b.samples, k).powi(2) + moment_se(&x, k).powi(2)).sqrt();
            assert!((m_pool - m_x).abs() < 5.0 * se, "k={k}: {m_pool} vs {m_x}");
        }
    }

    #[test]
    fn zero_mass_examples() {
        let tp = WeightModel::two_point(0.5).unwrap();
        assert_eq!(zero_mass_finite(&tp, 3, 1).unwrap(), 0.125);
        assert!((zero_mass_finite(&tp, 3, 2).unwrap() - 0.5625f64.powi(3)).abs() < 1e-15);
        assert_eq!(zero_mass_finite(&WeightModel::exponential(), 5, 3).unwrap(), 0.0);
        assert_eq!(zero_mass_infinite(&WeightModel::exponential(), 5).unwrap(), 0.0);

        let inf = zero_mass_infinite(&tp, 3).unwrap();
        let mut prev = 0.0;
        for n in 1..200 {
            let q = zero_mass_finite(&tp, 3, n).unwrap();
            assert!(q >= prev && q <= inf + 1e-15 && q >= 0.125);
            prev = q;
        }
        assert!((prev - inf).abs() < 1e-12);
        let q = zero_mass_infinite(&tp, 64).unwrap();
        let rate = q.ln() / 64.0;
        assert!((rate / -std::f64::consts::LN_2 - 1.0).abs() < 0.1, "{rate}");
    }

    #[test]
    fn zero_mass_is_a_fixed_point() {
        for (p, r) in [(0.3, 3u64), (0.5, 3), (0.6, 4), (0.5, 10)] {
            let tp = WeightModel::two_point(p).unwrap();
            let q = zero_mass_infinite(&tp, r).unwrap();
            assert!((q - (p + (1.0 - p) * q).powi(r as i32)).abs() < 1e-13);
            assert!(q < 1.0);
        }
    }
}
