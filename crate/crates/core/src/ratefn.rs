//! Rate functions of the cascade mass as `r → ∞`.
//!
//! The large-deviation rate of the depth-`n` mass is built level by level:
//!
//! ```text
//! I^1 = Λ*
//! I^n(a) = min_{1 <= z <= a} [ I^{n-1}(z) + h(a, z) ]      (a >= 1)
//! I^n(a) = Λ*(a)                                           (a <= 1)
//! ```
//!
//! and `I^∞` is the decreasing limit in `n`. Each level is evaluated on a
//! fixed grid (linear on `[0, 1]`, geometric on `[1, a_max]`): a discrete
//! minimum over grid nodes `z`, then a golden-section pass around the discrete
//! argmin against the piecewise-linear interpolant of the previous level. The
//! previous level's argmin is always re-tried as a candidate, which makes the
//! computed family exactly nonincreasing in `n`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::conjugate::{golden_section_max, lambda_star, CostAt};
use crate::error::{CascadeError, Result};
use crate::wmodel::WeightModel;

/// Hard cap on the number of grid points.
const MAX_GRID_POINTS: usize = 1_000_000;

/// Depth of a tree: a finite level `n >= 1` or the infinite tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(n) => write!(f, "{n}"),
            Level::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Level {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinite" | "∞" => Ok(Level::Infinite),
            other => match other.parse::<u32>() {
                Ok(n) if n >= 1 => Ok(Level::Finite(n)),
                _ => Err(CascadeError::config(format!("invalid level `{other}`"))),
            },
        }
    }
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Level::Finite(n) => s.serialize_u32(*n),
            Level::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) if n >= 1 => Ok(Level::Finite(n)),
            Raw::Num(n) => Err(serde::de::Error::custom(format!("invalid level {n}"))),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Grid layout: linear step on `[0, 1]`, geometric ratio on `[1, a_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub linear_step: f64,
    pub geometric_ratio: f64,
    pub a_max: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { linear_step: 0.01, geometric_ratio: 1.02, a_max: 50.0 }
    }
}

impl GridParams {
    pub fn with_a_max(a_max: f64) -> Self {
        Self { a_max, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let steps = 1.0 / self.linear_step;
        if !(self.linear_step > 0.0 && self.linear_step <= 1.0) || (steps - steps.round()).abs() > 1e-9 {
            return Err(CascadeError::config(format!(
                "linear step must divide [0, 1] evenly, got {}",
                self.linear_step
            )));
        }
        if !(self.geometric_ratio > 1.0 && self.geometric_ratio.is_finite()) {
            return Err(CascadeError::config(format!(
                "geometric ratio must exceed 1, got {}",
                self.geometric_ratio
            )));
        }
        if !(self.a_max > 1.0 && self.a_max.is_finite()) {
            return Err(CascadeError::config(format!("a_max must be finite and > 1, got {}", self.a_max)));
        }
        let n_geo = (self.a_max.ln() / self.geometric_ratio.ln()).ceil();
        if steps.round() + n_geo + 2.0 > MAX_GRID_POINTS as f64 {
            return Err(CascadeError::config("grid too large"));
        }
        Ok(())
    }

    /// Grid points, strictly increasing, with `1.0` and `a_max` included exactly.
    pub fn points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n_lin = (1.0 / self.linear_step).round() as u32;
        let mut pts: Vec<f64> = (0..=n_lin).map(|i| f64::from(i) / f64::from(n_lin)).collect();
        let mut k = 1;
        loop {
            let a = self.geometric_ratio.powi(k);
            if a >= self.a_max * (1.0 - 1e-12) {
                break;
            }
            pts.push(a);
            k += 1;
        }
        pts.push(self.a_max);
        Ok(pts)
    }
}

/// A rate function sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateGrid {
    pub level: Level,
    pub model_id: String,
    pub grid: GridParams,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    /// Stabilization tolerance (infinite level only).
    pub tol: Option<f64>,
    /// Last level computed before the sup-norm stopping rule fired.
    pub terminal_n: Option<u32>,
    /// Interval on which convergence is asserted only by the sup-norm test
    /// (values still moved, by less than `tol`, at the terminal level).
    pub sup_norm_only: Option<(f64, f64)>,
}

impl RateGrid {
    pub fn a_max(&self) -> f64 {
        self.grid.a_max
    }

    /// Index of the grid point `a = 1`.
    pub fn index_of_one(&self) -> usize {
        self.points.iter().position(|&a| a == 1.0).expect("grid contains 1")
    }

    /// Piecewise-linear interpolant; `+∞` next to any infinite node.
    pub fn value_at(&self, a: f64) -> f64 {
        interpolate(&self.points, &self.values, a)
    }
}

pub(crate) fn interpolate(points: &[f64], values: &[f64], x: f64) -> f64 {
    let idx = points.partition_point(|&p| p < x);
    if idx < points.len() && points[idx] == x {
        return values[idx];
    }
    if idx == 0 || idx == points.len() {
        return f64::NAN;
    }
    let (x0, x1) = (points[idx - 1], points[idx]);
    let (y0, y1) = (values[idx - 1], values[idx]);
    if y0.is_infinite() || y1.is_infinite() {
        return f64::INFINITY;
    }
    let w = (x - x0) / (x1 - x0);
    y0 + w * (y1 - y0)
}

/// Level-recursion engine on a fixed grid.
///
/// Holds the costs `h(a, z)` for every pair of grid nodes `1 <= z <= a`.
struct LevelSolver<'m> {
    model: &'m WeightModel,
    points: Vec<f64>,
    one: usize,
    costs: Vec<CostAt>,
    /// `cost_rows[i - one][j - one] = h(points[i], points[j])`.
    cost_rows: Vec<Vec<f64>>,
    first_level: Vec<f64>,
}

/// One level of the recursion, with the minimizing `z` per grid point.
#[derive(Debug, Clone)]
struct LevelValues {
    values: Vec<f64>,
    argmin: Vec<f64>,
}

impl<'m> LevelSolver<'m> {
    fn new(model: &'m WeightModel, grid: &GridParams) -> Result<Self> {
        let points = grid.points()?;
        let one = points.iter().position(|&a| a == 1.0).expect("grid contains 1");
        let costs = points[one..]
            .par_iter()
            .map(|&a| CostAt::new(model, a))
            .collect::<Result<Vec<_>>>()?;
        let cost_rows = costs
            .par_iter()
            .enumerate()
            .map(|(i, cost)| (0..=i).map(|j| cost.eval(model, points[one + j])).collect())
            .collect();
        let first_level = points.par_iter().map(|&a| lambda_star(model, a)).collect();
        Ok(Self { model, points, one, costs, cost_rows, first_level })
    }

    fn level_one(&self) -> LevelValues {
        let mut argmin = vec![1.0; self.points.len()];
        for (i, a) in argmin.iter_mut().zip(&self.points).take(self.one) {
            *i = *a;
        }
        LevelValues { values: self.first_level.clone(), argmin }
    }

    /// Minimize `I^{n-1}(z) + h(a, z)` over `z ∈ [1, a]` for one grid point.
    fn minimize_at(&self, prev: &LevelValues, i: usize) -> (f64, f64) {
        let row = &self.cost_rows[i - self.one];
        let mut best = f64::INFINITY;
        let mut best_j = 0;
        for (j, h) in row.iter().enumerate() {
            let v = prev.values[self.one + j] + h;
            if v < best {
                best = v;
                best_j = j;
            }
        }
        let mut best_z = self.points[self.one + best_j];
        if best.is_infinite() {
            return (best, best_z);
        }
        let cost = &self.costs[i - self.one];
        let objective = |z: f64| interpolate(&self.points, &prev.values, z) + cost.eval(self.model, z);

        if row.len() > 1 {
            let lo = self.points[self.one + best_j.saturating_sub(1)];
            let hi = self.points[self.one + (best_j + 1).min(row.len() - 1)];
            let z = golden_section_max(|z| -objective(z), lo, hi, 80);
            let v = objective(z);
            if v < best {
                best = v;
                best_z = z;
            }
        }
        let z_prev = prev.argmin[i];
        if (1.0..=self.points[i]).contains(&z_prev) {
            let v = objective(z_prev);
            if v < best {
                best = v;
                best_z = z_prev;
            }
        }
        (best, best_z)
    }

    /// Next level; points below `frozen` are copied from `prev`.
    fn next_level(&self, prev: &LevelValues, frozen: usize) -> LevelValues {
        let frozen = frozen.max(self.one + 1);
        let tail: Vec<(f64, f64)> = (frozen..self.points.len())
            .into_par_iter()
            .map(|i| self.minimize_at(prev, i))
            .collect();
        let mut values = prev.values[..frozen].to_vec();
        let mut argmin = prev.argmin[..frozen].to_vec();
        for (v, z) in tail {
            values.push(v);
            argmin.push(z);
        }
        LevelValues { values, argmin }
    }

    /// Evaluates the next level at an arbitrary `a >= 1` from the grid values of `prev`.
    fn eval_off_grid(&self, prev: &LevelValues, a: f64) -> Result<f64> {
        if a == 1.0 {
            return Ok(0.0);
        }
        let cost = CostAt::new(self.model, a)?;
        let objective = |z: f64| interpolate(&self.points, &prev.values, z) + cost.eval(self.model, z);
        let mut best = objective(a);
        let mut best_z = a;
        let end = self.points.partition_point(|&p| p <= a);
        for j in self.one..end {
            let v = prev.values[j] + cost.eval(self.model, self.points[j]);
            if v < best {
                best = v;
                best_z = self.points[j];
            }
        }
        if best.is_finite() {
            let k = self.points.partition_point(|&p| p < best_z);
            let lo = self.points[k.saturating_sub(1).max(self.one)];
            let hi = self.points.get(k + 1).copied().unwrap_or(a).min(a);
            if hi > lo {
                let z = golden_section_max(|z| -objective(z), lo, hi, 80);
                best = best.min(objective(z));
            }
        }
        Ok(best)
    }

    fn to_grid(&self, level: Level, grid: &GridParams, lv: &LevelValues) -> RateGrid {
        RateGrid {
            level,
            model_id: self.model.id(),
            grid: *grid,
            points: self.points.clone(),
            values: lv.values.clone(),
            tol: None,
            terminal_n: None,
            sup_norm_only: None,
        }
    }
}

/// Pointwise drop `prev - next`, with `∞ - ∞` read as no change.
fn drop_between(prev: f64, next: f64) -> f64 {
    if prev == next {
        0.0
    } else {
        prev - next
    }
}

/// `I^n` on the grid.
pub fn rate_finite(model: &WeightModel, n: u32, grid: &GridParams) -> Result<RateGrid> {
    Ok(rate_levels(model, n, grid)?.pop().expect("n >= 1 levels"))
}

/// `I^1, ..., I^{n_max}` on a shared grid.
pub fn rate_levels(model: &WeightModel, n_max: u32, grid: &GridParams) -> Result<Vec<RateGrid>> {
    if n_max == 0 {
        return Err(CascadeError::domain("level n must be >= 1"));
    }
    let solver = LevelSolver::new(model, grid)?;
    let mut lv = solver.level_one();
    let mut out = vec![solver.to_grid(Level::Finite(1), grid, &lv)];
    for n in 2..=n_max {
        lv = solver.next_level(&lv, 0);
        out.push(solver.to_grid(Level::Finite(n), grid, &lv));
    }
    Ok(out)
}

/// Settings for the `I^∞` iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfiniteSettings {
    pub tol: f64,
    pub max_levels: u32,
}

impl Default for InfiniteSettings {
    fn default() -> Self {
        Self { tol: 1e-6, max_levels: 64 }
    }
}

/// `I^∞ = lim I^n` on the grid.
///
/// Levels are iterated until the sup-norm change drops below `tol`. Once two
/// consecutive levels agree on `[1, a]`, the next level cannot differ there
/// either, so that prefix of the grid is frozen and no longer recomputed.
pub fn rate_infinite(model: &WeightModel, grid: &GridParams, settings: InfiniteSettings) -> Result<RateGrid> {
    if !(settings.tol > 0.0) {
        return Err(CascadeError::config(format!("tol must be positive, got {}", settings.tol)));
    }
    let solver = LevelSolver::new(model, grid)?;
    let mut prev = solver.level_one();
    let mut frozen = 0;
    let mut unstable = (1.0, grid.a_max);
    for n in 2..=settings.max_levels.max(2) {
        let next = solver.next_level(&prev, frozen);
        let drops: Vec<f64> =
            prev.values.iter().zip(&next.values).map(|(&p, &q)| drop_between(p, q)).collect();
        let sup = drops.iter().fold(0.0f64, |m, &d| m.max(d));
        let first_moved = drops.iter().position(|&d| d > settings.tol);
        if sup < settings.tol {
            let mut out = solver.to_grid(Level::Infinite, grid, &next);
            out.tol = Some(settings.tol);
            out.terminal_n = Some(n);
            out.sup_norm_only = drops
                .iter()
                .position(|&d| d > 0.0)
                .map(|i| (solver.points[i], grid.a_max));
            return Ok(out);
        }
        let first = first_moved.expect("sup >= tol");
        let last = drops.iter().rposition(|&d| d > settings.tol).expect("sup >= tol");
        unstable = (solver.points[first], solver.points[last]);
        frozen = first;
        prev = next;
    }
    Err(CascadeError::NonConvergence { levels: settings.max_levels, lo: unstable.0, hi: unstable.1 })
}

/// Breakpoints `a_n = inf { a >= 1 : I^{n+1}(a) < I^n(a) }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoints {
    /// `estimates[k]` is `a_{k+1}`; `+∞` when no drop is found on `[1, a_max]`.
    pub estimates: Vec<f64>,
    /// Half-width of the final bisection bracket for each estimate.
    pub half_widths: Vec<f64>,
    /// Drop size that counts as a strict decrease.
    pub tol: f64,
}

impl Breakpoints {
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|k| self.estimates.get(k).copied())
    }
}

/// Breakpoints `a_1, ..., a_{n_max - 1}`.
pub fn breakpoints(model: &WeightModel, n_max: u32, grid: &GridParams, tol: f64) -> Result<Breakpoints> {
    if n_max < 2 {
        return Err(CascadeError::domain("breakpoints need n_max >= 2"));
    }
    let count = (n_max - 1) as usize;
    if model.c().is_infinite() {
        return Ok(Breakpoints {
            estimates: vec![f64::INFINITY; count],
            half_widths: vec![0.0; count],
            tol,
        });
    }
    let solver = LevelSolver::new(model, grid)?;
    let mut levels = vec![solver.level_one()];
    for _ in 1..n_max {
        let next = solver.next_level(levels.last().expect("nonempty"), 0);
        levels.push(next);
    }
    let mut estimates = Vec::with_capacity(count);
    let mut half_widths = Vec::with_capacity(count);
    for n in 1..n_max as usize {
        let (lower, upper) = (&levels[n - 1], &levels[n]);
        let hit = (solver.one..solver.points.len())
            .find(|&i| upper.values[i] < lower.values[i] - tol);
        let Some(i) = hit else {
            estimates.push(f64::INFINITY);
            half_widths.push(0.0);
            continue;
        };
        // I^n(a) uses level n-1 values, I^{n+1}(a) uses level n values.
        let below = |a: f64| -> Result<bool> {
            let current = if n == 1 {
                lambda_star(model, a)
            } else {
                solver.eval_off_grid(&levels[n - 2], a)?
            };
            let refined = solver.eval_off_grid(lower, a)?;
            Ok(refined < current - tol)
        };
        let (mut lo, mut hi) = (solver.points[i - 1], solver.points[i]);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if below(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        estimates.push(0.5 * (lo + hi));
        half_widths.push(0.5 * (hi - lo).max(0.0));
    }
    Ok(Breakpoints { estimates, half_widths, tol })
}

/// Moderate-deviation rate `J(a) = a² / (2 Var W)`.
pub fn moderate_rate(model: &WeightModel, a: f64) -> Result<f64> {
    let var = model.variance();
    if !(var > 0.0 && var.is_finite()) {
        return Err(CascadeError::domain(format!("moderate rate needs 0 < Var(W) < ∞ ({model})")));
    }
    Ok(a * a / (2.0 * var))
}

/// Very-large-deviation rate on the depth-`n` tree: `c n a^{1/n}` for `a >= 0`.
pub fn very_large_rate_finite(model: &WeightModel, n: u32, a: f64) -> Result<f64> {
    if n == 0 {
        return Err(CascadeError::domain("level n must be >= 1"));
    }
    Ok(if a < 0.0 {
        f64::INFINITY
    } else if a == 0.0 {
        0.0
    } else {
        model.c() * f64::from(n) * a.powf(1.0 / f64::from(n))
    })
}

/// Very-large-deviation rate on the infinite tree: `c α e` for `a > 0`.
pub fn very_large_rate_infinite(model: &WeightModel, alpha: f64, a: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(CascadeError::domain(format!("alpha must be positive, got {alpha}")));
    }
    Ok(if a < 0.0 {
        f64::INFINITY
    } else if a == 0.0 {
        0.0
    } else {
        model.c() * alpha * std::f64::consts::E
    })
}

/// Left rate `Λ*(a)` on `[0, 1]`.
pub fn left_rate(model: &WeightModel, a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(CascadeError::domain(format!("left rate needs a in [0, 1], got {a}")));
    }
    Ok(lambda_star(model, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> GridParams {
        GridParams { linear_step: 0.05, geometric_ratio: 1.05, a_max: 20.0 }
    }

    #[test]
    fn grid_layout() {
        let pts = GridParams::default().points().unwrap();
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[100], 1.0);
        assert_eq!(*pts.last().unwrap(), 50.0);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert!(GridParams { linear_step: 0.03, ..Default::default() }.points().is_err());
        assert!(GridParams { geometric_ratio: 1.0, ..Default::default() }.points().is_err());
        assert!(GridParams { a_max: 0.5, ..Default::default() }.points().is_err());
    }

    #[test]
    fn level_one_is_cramer() {
        let e = WeightModel::exponential();
        let g = rate_finite(&e, 1, &small_grid()).unwrap();
        assert!((g.value_at(2.0) - (1.0 - 2f64.ln())).abs() < 1e-3);
        let i = g.points.iter().position(|&a| a > 1.9).unwrap();
        let a = g.points[i];
        assert!((g.values[i] - (a - 1.0 - a.ln())).abs() < 1e-12);
    }

    #[test]
    fn value_at_one_is_zero_and_left_side_is_cramer() {
        let e = WeightModel::exponential();
        let g = rate_finite(&e, 3, &small_grid()).unwrap();
        let one = g.index_of_one();
        assert_eq!(g.values[one], 0.0);
        for i in 0..one {
            assert_eq!(g.values[i], lambda_star(&e, g.points[i]));
        }
        for w in g.values[one..].windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn two_point_collapse() {
        let tp = WeightModel::two_point(0.5).unwrap();
        let g = rate_finite(&tp, 4, &small_grid()).unwrap();
        for (a, v) in g.points.iter().zip(&g.values) {
            let l = lambda_star(&tp, *a);
            assert!(v == &l || (v - l).abs() < 1e-12, "a={a}");
        }
        let inf = rate_infinite(&tp, &small_grid(), InfiniteSettings::default()).unwrap();
        assert_eq!(inf.terminal_n, Some(2));
    }

    #[test]
    fn degenerate_infinite_rate() {
        let d = WeightModel::degenerate();
        let g = rate_infinite(&d, &small_grid(), InfiniteSettings::default()).unwrap();
        for (a, v) in g.points.iter().zip(&g.values) {
            if *a == 1.0 {
                assert_eq!(*v, 0.0);
            } else {
                assert_eq!(*v, f64::INFINITY);
            }
        }
    }

    #[test]
    fn family_is_nonincreasing() {
        let e = WeightModel::exponential();
        let levels = rate_levels(&e, 6, &small_grid()).unwrap();
        for pair in levels.windows(2) {
            for (u, v) in pair[1].values.iter().zip(&pair[0].values) {
                assert!(*u <= *v + 1e-9);
            }
        }
    }

    #[test]
    fn slope_bounded_by_tail_rate() {
        let e = WeightModel::exponential();
        let levels = rate_levels(&e, 4, &small_grid()).unwrap();
        for g in &levels {
            let one = g.index_of_one();
            for k in one..g.points.len() - 1 {
                let jump = g.values[k + 1] - g.values[k];
                assert!(jump >= 0.0);
                assert!(jump <= e.c() * (g.points[k + 1] - g.points[k]) + 1e-9);
            }
        }
    }

    #[test]
    fn second_level_matches_dense_scan() {
        // minimize c (a - s)/z + Λ*(z) + Λ*(s) over 1 <= z, s <= a with w = (a - s)/z
        let e = WeightModel::exponential();
        let grid = GridParams { linear_step: 0.01, geometric_ratio: 1.01, a_max: 6.0 };
        let g = rate_finite(&e, 2, &grid).unwrap();
        let n = 600;
        for a in [1.3, 2.2, 2.9, 3.7, 4.4, 5.0] {
            let mut best = f64::INFINITY;
            for i in 0..=n {
                let z = 1.0 + (a - 1.0) * i as f64 / n as f64;
                let lz = lambda_star(&e, z);
                for k in 0..=n {
                    let s = 1.0 + (a - 1.0) * k as f64 / n as f64;
                    best = best.min((a - s) / z + lz + lambda_star(&e, s));
                }
            }
            let v = g.value_at(a);
            assert!((v - best).abs() < 2e-3, "a={a}: grid {v} vs scan {best}");
        }
    }

    #[test]
    fn breakpoints_above_threshold() {
        let e = WeightModel::exponential();
        let bp = breakpoints(&e, 3, &GridParams::with_a_max(200.0), 1e-9).unwrap();
        let a1 = bp.get(1).unwrap();
        let a2 = bp.get(2).unwrap();
        assert!(a1 >= 2.0, "{a1}");
        assert!(a2 + bp.half_widths[1] >= a1 - bp.half_widths[0]);
        let tp = WeightModel::two_point(0.5).unwrap();
        let bp = breakpoints(&tp, 4, &small_grid(), 1e-9).unwrap();
        assert!(bp.estimates.iter().all(|a| a.is_infinite()));
    }

    #[test]
    fn closed_form_rates() {
        let e = WeightModel::exponential();
        assert_eq!(moderate_rate(&e, 0.0).unwrap(), 0.0);
        assert_eq!(moderate_rate(&e, 2.0).unwrap(), 2.0);
        assert!((moderate_rate(&WeightModel::gamma(2.0).unwrap(), 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(moderate_rate(&WeightModel::degenerate(), 1.0), Err(CascadeError::Domain(_))));

        assert_eq!(very_large_rate_finite(&e, 2, 4.0).unwrap(), 4.0);
        assert_eq!(very_large_rate_finite(&e, 3, 0.0).unwrap(), 0.0);
        assert_eq!(very_large_rate_finite(&e, 1, -1.0).unwrap(), f64::INFINITY);
        let tp = WeightModel::two_point(0.5).unwrap();
        assert_eq!(very_large_rate_finite(&tp, 2, 1.0).unwrap(), f64::INFINITY);

        assert!((very_large_rate_infinite(&e, 1.0, 3.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert!((very_large_rate_infinite(&e, 2.0, 0.1).unwrap() - 2.0 * std::f64::consts::E).abs() < 1e-15);
        assert_eq!(very_large_rate_infinite(&e, 1.0, -0.5).unwrap(), f64::INFINITY);
        assert_eq!(very_large_rate_infinite(&e, 1.0, 0.0).unwrap(), 0.0);

        assert!((left_rate(&e, 0.5).unwrap() - 0.19315).abs() < 1e-5);
        assert!((left_rate(&tp, 0.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(left_rate(&e, 1.0).unwrap(), 0.0);
        assert!(left_rate(&e, 1.5).is_err());
    }

    #[test]
    fn level_serde() {
        assert_eq!(serde_json::to_string(&Level::Finite(3)).unwrap(), "3");
        assert_eq!(serde_json::to_string(&Level::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::from_str::<Level>("\"inf\"").unwrap(), Level::Infinite);
        assert_eq!(serde_json::from_str::<Level>("7").unwrap(), Level::Finite(7));
        assert!(serde_json::from_str::<Level>("0").is_err());
    }
}
