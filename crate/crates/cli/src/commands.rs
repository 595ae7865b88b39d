use std::path::{Path, PathBuf};

use cascade_ldp::cascade::{
    sample_finite, sample_infinite, zero_mass_finite, zero_mass_infinite, DEFAULT_ITERATIONS, DEFAULT_POOL_SIZE,
};
use cascade_ldp::devlab::{verify_suite, CheckStatus, DeviationReport, ModelSpec, SuiteConfig, SuiteReport};
use cascade_ldp::io::{
    fmt_f64, read_json_file, read_rate_grid, write_batch, write_batch_csv, write_breakpoints, write_json_file,
    write_moment_table, write_rate_grid, write_rows, write_suite_report,
};
use cascade_ldp::moments::{
    cascade_moments, chi, finite_tree_moments, kappa_estimate, moment_upper_bound, ArithmeticMode,
};
use cascade_ldp::ratefn::{breakpoints, rate_finite, rate_infinite, GridParams, InfiniteSettings, Level};
use cascade_ldp::{CascadeError, Result};
use serde_json::json;

use crate::config::Config;
use crate::manifest::{ConfigEntry, Manifest};
use crate::{Cli, Command, ModelArgs, MomentsArgs, PlotdataArgs, RateArgs, SimulateArgs, VerifyArgs};

struct Outcome {
    files: Vec<PathBuf>,
    params: serde_json::Value,
    seeds: Vec<u64>,
    ok: bool,
}

fn to_u32(x: u64, what: &str) -> Result<u32> {
    u32::try_from(x).map_err(|_| CascadeError::Config(format!("{what} = {x} is too large")))
}

fn model_spec(cfg: &Config, args: &ModelArgs) -> Result<ModelSpec> {
    Ok(ModelSpec {
        kind: cfg.string("w", "kind", args.kind.clone())?.unwrap_or_else(|| "exp".into()),
        shape: cfg.f64("w", "shape", args.shape)?,
        p_zero: cfg.f64("w", "p_zero", args.p_zero)?,
    })
}

fn level(s: Option<String>, default: Level) -> Result<Level> {
    s.map(|s| s.parse()).transpose().map(|l| l.unwrap_or(default))
}

fn required<T>(x: Option<T>, what: &str) -> Result<T> {
    x.ok_or_else(|| CascadeError::Config(format!("missing required parameter `{what}`")))
}

/// Runs one subcommand; `Ok(false)` means a verification failure.
pub fn run(cli: Cli, argv: Vec<String>) -> Result<bool> {
    let cfg = Config::load(cli.config.as_deref())?;
    let out = cfg
        .string("", "out", cli.out.map(|p| p.display().to_string()))?
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Some(t) = cfg.u64("", "threads", cli.threads)? {
        if t == 0 {
            return Err(CascadeError::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t as usize)
            .build_global()
            .map_err(|e| CascadeError::Config(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&out)?;

    let (name, outcome) = match cli.command {
        Command::Rate(a) => ("rate", rate(&cfg, a, &out)?),
        Command::Moments(a) => ("moments", moments(&cfg, a, &out)?),
        Command::Simulate(a) => ("simulate", simulate(&cfg, a, &out)?),
        Command::Verify(a) => ("verify", verify(&cfg, a, &out)?),
        Command::Plotdata(a) => ("plotdata", plotdata(&cfg, a, &out)?),
    };

    let manifest = Manifest {
        tool: "cascade".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        argv,
        config: cfg
            .source
            .as_ref()
            .map(|(p, h)| ConfigEntry { path: p.display().to_string(), sha256: h.clone() }),
        params: outcome.params,
        seeds: outcome.seeds,
        files: Vec::new(),
    };
    let path = manifest.write(&out, &outcome.files)?;
    println!("wrote {} files, manifest {}", outcome.files.len(), path.display());
    Ok(outcome.ok)
}

fn rate(cfg: &Config, a: RateArgs, out: &Path) -> Result<Outcome> {
    let spec = model_spec(cfg, &a.model)?;
    let model = spec.build()?;
    let lvl = level(cfg.string("rate", "n", a.n)?, Level::Finite(1))?;
    let defaults = GridParams::default();
    let grid = GridParams {
        linear_step: cfg.f64("rate", "linear_step", a.linear_step)?.unwrap_or(defaults.linear_step),
        geometric_ratio: cfg.f64("rate", "geometric_ratio", a.geometric_ratio)?.unwrap_or(defaults.geometric_ratio),
        a_max: cfg.f64("rate", "amax", a.amax)?.unwrap_or(defaults.a_max),
    };
    grid.validate()?;
    let settings = InfiniteSettings {
        tol: cfg.f64("rate", "tol", a.tol)?.unwrap_or(InfiniteSettings::default().tol),
        max_levels: to_u32(
            cfg.u64("rate", "max_levels", a.max_levels)?
                .unwrap_or(u64::from(InfiniteSettings::default().max_levels)),
            "max_levels",
        )?,
    };
    let g = match lvl {
        Level::Finite(n) => rate_finite(&model, n, &grid)?,
        Level::Infinite => rate_infinite(&model, &grid, settings)?,
    };
    let mut files = write_rate_grid(&g, &out.join(format!("rate_n{lvl}.csv")))?;
    println!("{} level {lvl}: {} grid points, value at a=1 is {}", model, g.points.len(), g.value_at(1.0));

    let bp_n = cfg.u64("rate", "breakpoints", a.breakpoints)?;
    let bp_tol = cfg.f64("rate", "bp_tol", a.bp_tol)?.unwrap_or(1e-9);
    if let Some(n_max) = bp_n {
        let bp = breakpoints(&model, to_u32(n_max, "breakpoints")?, &grid, bp_tol)?;
        for (i, e) in bp.estimates.iter().enumerate() {
            println!("a_{} = {}", i + 1, fmt_f64(*e));
        }
        files.push(write_breakpoints(&bp, &out.join("breakpoints.csv"))?);
    }
    Ok(Outcome {
        files,
        params: json!({
            "model": spec,
            "level": lvl,
            "grid": grid,
            "tol": settings.tol,
            "max_levels": settings.max_levels,
            "breakpoints": bp_n,
            "bp_tol": bp_tol,
        }),
        seeds: Vec::new(),
        ok: true,
    })
}

fn moments(cfg: &Config, a: MomentsArgs, out: &Path) -> Result<Outcome> {
    let spec = model_spec(cfg, &a.model)?;
    let model = spec.build()?;
    let r = required(cfg.u64("moments", "r", a.r)?, "r")?;
    let h_max = to_u32(cfg.u64("moments", "hmax", a.hmax)?.unwrap_or(10), "hmax")?;
    let lvl = level(cfg.string("moments", "level", a.level)?, Level::Infinite)?;
    let mode = if cfg.flag("moments", "exact", a.exact)? {
        ArithmeticMode::ExactRational
    } else {
        ArithmeticMode::HighPrecisionFloat
    };
    let table = match lvl {
        Level::Infinite => cascade_moments(&model, r, h_max, mode)?,
        Level::Finite(n) => finite_tree_moments(&model, r, n, h_max, mode)?,
    };
    for h in 0..=h_max {
        match table.exact(h) {
            Some(q) => println!("E[Z^{h}] = {} = {q}", table.values[h as usize]),
            None => println!("E[Z^{h}] = {}", table.values[h as usize]),
        }
    }
    let mut files = write_moment_table(&table, &out.join(format!("moments_r{r}_n{lvl}.csv")))?;

    let chi_value = if r >= 2 && model.check_branching(r).is_ok() { Some(chi(&model, r)?) } else { None };
    if let Some(x) = chi_value {
        println!("chi({r}) = {}", fmt_f64(x));
    }
    let delta = cfg.f64("moments", "delta", a.delta)?.unwrap_or(0.5);
    let bound_h = cfg.u64("moments", "bound_h", a.bound_h)?;
    let bounds = match bound_h {
        Some(top) => (1..=to_u32(top, "bound_h")?)
            .map(|h| moment_upper_bound(&model, r, h, delta).map(|b| json!({"h": h, "bound": fmt_f64(b)})))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let eta = cfg.f64("moments", "kappa_eta", a.kappa_eta)?;
    let kappa_r = cfg.u64_list("moments", "kappa_r", a.kappa_r)?;
    let kappa = match eta {
        Some(eta) => kappa_estimate(&model, eta, &kappa_r.clone().unwrap_or_else(|| vec![r]))?
            .into_iter()
            .map(|p| json!({"r": p.r, "order": p.order, "value": fmt_f64(p.value)}))
            .collect(),
        None => Vec::new(),
    };
    let summary = json!({
        "model": model.id(),
        "r": r,
        "chi": chi_value.map(fmt_f64),
        "upper_bound": { "delta": delta, "values": bounds },
        "kappa": { "eta": eta, "note": "finite-r values of (1/r) log E[Z^floor(eta r)]", "values": kappa },
    });
    files.push(write_json_file(&out.join("moments_summary.json"), &summary)?);
    Ok(Outcome {
        files,
        params: json!({
            "model": spec, "r": r, "hmax": h_max, "level": lvl, "mode": mode,
            "bound_h": bound_h, "delta": delta, "kappa_eta": eta, "kappa_r": kappa_r,
        }),
        seeds: Vec::new(),
        ok: true,
    })
}

fn simulate(cfg: &Config, a: SimulateArgs, out: &Path) -> Result<Outcome> {
    let spec = model_spec(cfg, &a.model)?;
    let model = spec.build()?;
    let r = required(cfg.u64("simulate", "r", a.r)?, "r")?;
    let lvl = level(cfg.string("simulate", "n", a.n)?, Level::Finite(1))?;
    let seed = match cfg.u64("simulate", "seed", a.seed)? {
        Some(s) => s,
        None => required(cfg.u64("", "seed", None)?, "seed")?,
    };
    let count = cfg.u64("simulate", "count", a.count)?.unwrap_or(DEFAULT_POOL_SIZE as u64) as usize;
    let pool = cfg.u64("simulate", "pool", a.pool)?.unwrap_or(DEFAULT_POOL_SIZE as u64) as usize;
    let iters = to_u32(cfg.u64("simulate", "iters", a.iters)?.unwrap_or(u64::from(DEFAULT_ITERATIONS)), "iters")?;
    let renormalize = !cfg.flag("simulate", "no_renormalize", a.no_renormalize)?;
    let batch = match lvl {
        Level::Finite(n) => sample_finite(&model, r, n, count, seed)?,
        Level::Infinite => sample_infinite(&model, r, pool, iters, seed, renormalize)?,
    };
    let stats = batch.stats();
    println!(
        "{} r={r} level {lvl}: {} samples, mean {:.6}, E[Z^2] {:.6}, P(Z=0) {:.6}{}",
        model,
        stats.count,
        stats.mean,
        stats.second_moment,
        stats.zero_fraction,
        if stats.mean_drift_flag { " (mean drift flagged)" } else { "" }
    );
    let stem = out.join(format!("batch_r{r}_n{lvl}.bin"));
    let mut files = write_batch(&batch, &stem)?;
    if cfg.flag("simulate", "csv", a.csv)? {
        files.push(write_batch_csv(&batch, &stem.with_extension("csv"))?);
    }
    let q_fin = match lvl {
        Level::Finite(n) => Some(zero_mass_finite(&model, r, n)?),
        Level::Infinite => None,
    };
    let q_inf = zero_mass_infinite(&model, r).ok();
    files.push(write_json_file(
        &out.join("zero_mass.json"),
        &json!({ "r": r, "level": lvl, "finite": q_fin.map(fmt_f64), "infinite": q_inf.map(fmt_f64) }),
    )?);
    Ok(Outcome {
        files,
        params: json!({
            "model": spec, "r": r, "level": lvl, "count": count, "pool": pool,
            "iters": iters, "renormalize": renormalize, "seed": seed,
        }),
        seeds: vec![seed],
        ok: true,
    })
}

fn verify(cfg: &Config, a: VerifyArgs, out: &Path) -> Result<Outcome> {
    let preset = cfg.string("verify", "preset", a.preset)?.unwrap_or_else(|| "desk".into());
    let mut suite = SuiteConfig::preset(&preset)?;
    if a.model.kind.is_some() || cfg.string("w", "kind", None)?.is_some() {
        suite.model = model_spec(cfg, &a.model)?;
    }
    let seed = cfg.u64("verify", "seed", a.seed)?.or(cfg.u64("", "seed", None)?);
    if let Some(s) = seed {
        suite.seed = s;
    }
    if let Some(n) = cfg.u64("verify", "samples", a.samples)? {
        suite.samples_per_r = n as usize;
    }
    if let Some(n) = cfg.u64("verify", "pool", a.pool)? {
        suite.pool_size = n as usize;
    }
    if let Some(n) = cfg.u64("verify", "iters", a.iters)? {
        suite.pool_iterations = to_u32(n, "iters")?;
    }
    if let Some(rs) = cfg.u64_list("verify", "infinite_r", a.infinite_r)? {
        suite.infinite_r_values = rs;
    }
    let report = verify_suite(&suite)?;
    print_suite(&report);
    let files = write_suite_report(&report, &out.join("suite.json"))?;
    let seeds = report.checks.iter().flat_map(|c| c.seeds.iter().copied()).collect();
    Ok(Outcome { files, params: json!({ "preset": preset, "suite": suite }), seeds, ok: report.passed })
}

fn print_suite(report: &SuiteReport) {
    for c in &report.checks {
        let status = match c.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Inconclusive => "INCONCLUSIVE",
            CheckStatus::Errored => "ERROR",
        };
        let tag = if c.advisory { " (advisory)" } else { "" };
        println!("{status:<12} {}{tag}: {}", c.name, c.detail);
    }
    for e in &report.excluded {
        println!("{:<12} {e}", "EXCLUDED");
    }
    println!("suite {}", if report.passed { "passed" } else { "failed" });
}

fn plotdata(cfg: &Config, a: PlotdataArgs, out: &Path) -> Result<Outcome> {
    let rate_path = cfg.string("plotdata", "rate", a.rate.map(|p| p.display().to_string()))?.map(PathBuf::from);
    let report_path =
        cfg.string("plotdata", "report", a.report.map(|p| p.display().to_string()))?.map(PathBuf::from);
    if rate_path.is_none() && report_path.is_none() {
        return Err(CascadeError::Config("plotdata needs --rate and/or --report".into()));
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    if let Some(p) = &rate_path {
        let g = read_rate_grid(p)?;
        let key = format!("n={}", g.level);
        for (x, y) in g.points.iter().zip(&g.values) {
            rows.push(vec!["rate".into(), key.clone(), fmt_f64(*x), fmt_f64(*y), String::new(), String::new()]);
        }
    }
    if let Some(p) = &report_path {
        let reports: Vec<(String, DeviationReport)> = match read_json_file::<DeviationReport>(p) {
            Ok(r) => vec![(String::new(), r)],
            Err(_) => read_json_file::<SuiteReport>(p)?
                .checks
                .into_iter()
                .filter_map(|c| c.report.map(|r| (format!("{}:", c.name), r)))
                .collect(),
        };
        for (prefix, rep) in reports {
            for i in 0..rep.r_values.len() {
                let key = format!("{prefix}{}:r={}", rep.regime.name(), rep.r_values[i]);
                let x = rep.speed_values[i];
                rows.push(vec![
                    "empirical".into(),
                    key.clone(),
                    fmt_f64(x),
                    fmt_f64(-rep.log_prob_estimates[i]),
                    fmt_f64(-rep.ci_high[i]),
                    fmt_f64(-rep.ci_low[i]),
                ]);
                rows.push(vec![
                    "theory".into(),
                    key,
                    fmt_f64(x),
                    fmt_f64(rep.theory_value * x),
                    String::new(),
                    String::new(),
                ]);
            }
        }
    }
    let path = write_rows(&out.join("plotdata.csv"), &["series", "key", "x", "y", "y_low", "y_high"], rows)?;
    Ok(Outcome {
        files: vec![path],
        params: json!({
            "rate": rate_path.map(|p| p.display().to_string()),
            "report": report_path.map(|p| p.display().to_string()),
        }),
        seeds: Vec::new(),
        ok: true,
    })
}
