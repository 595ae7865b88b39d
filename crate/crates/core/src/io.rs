//! Persistence: CSV tables, JSON sidecars and binary sample arrays.
//!
//! Reals are written with 17 significant digits so that a write/read cycle
//! reproduces every `f64` bit for bit. Infinities are spelled `inf`/`-inf`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::cascade::{BatchStats, CascadeSampleBatch, GenParams};
use crate::devlab::{DeviationReport, SuiteReport};
use crate::error::{CascadeError, Result};
use crate::moments::{ArithmeticMode, MomentTable};
use crate::ratefn::{Breakpoints, GridParams, Level, RateGrid};

/// Formats a real with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
        "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
        "nan" | "NaN" => Ok(f64::NAN),
        t => t
            .parse()
            .map_err(|_| CascadeError::config(format!("cannot parse `{t}` as a number"))),
    }
}

/// Serde adapter writing non-finite reals as strings.
pub mod ext_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::fmt_f64(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(s) => super::parse_f64(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// [`ext_real`] for vectors.
pub mod ext_real_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    struct Wrap(#[serde(with = "super::ext_real")] f64);

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            if x.is_finite() {
                seq.serialize_element(x)?;
            } else {
                seq.serialize_element(&super::fmt_f64(*x))?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Reads a CSV with a header row into its header and data rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CascadeError::config(format!("{} has no `{name}` column", path.display())))
}

/// Sidecar path: same stem, `.json` extension.
pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateGridMeta {
    pub level: Level,
    pub model_id: String,
    pub grid: GridParams,
    pub points: usize,
    pub tol: Option<f64>,
    pub terminal_n: Option<u32>,
    pub sup_norm_only: Option<(f64, f64)>,
}

/// Writes `a,value` rows to `csv_path` and metadata to its JSON sidecar.
pub fn write_rate_grid(grid: &RateGrid, csv_path: &Path) -> Result<Vec<PathBuf>> {
    let mut w = csv_writer(csv_path)?;
    w.write_record(["a", "value"])?;
    for (a, v) in grid.points.iter().zip(&grid.values) {
        w.write_record([fmt_f64(*a), fmt_f64(*v)])?;
    }
    w.flush()?;
    let meta = RateGridMeta {
        level: grid.level,
        model_id: grid.model_id.clone(),
        grid: grid.grid,
        points: grid.points.len(),
        tol: grid.tol,
        terminal_n: grid.terminal_n,
        sup_norm_only: grid.sup_norm_only,
    };
    let json = sidecar(csv_path);
    write_json(&json, &meta)?;
    Ok(vec![csv_path.to_path_buf(), json])
}

pub fn read_rate_grid(csv_path: &Path) -> Result<RateGrid> {
    let meta: RateGridMeta = read_json(&sidecar(csv_path))?;
    let (header, rows) = read_csv(csv_path)?;
    let (ia, iv) = (column(&header, "a", csv_path)?, column(&header, "value", csv_path)?);
    let mut points = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for row in &rows {
        points.push(parse_f64(&row[ia])?);
        values.push(parse_f64(&row[iv])?);
    }
    if points.len() != meta.points {
        return Err(CascadeError::config(format!(
            "{}: sidecar lists {} points, file has {}",
            csv_path.display(),
            meta.points,
            points.len()
        )));
    }
    Ok(RateGrid {
        level: meta.level,
        model_id: meta.model_id,
        grid: meta.grid,
        points,
        values,
        tol: meta.tol,
        terminal_n: meta.terminal_n,
        sup_norm_only: meta.sup_norm_only,
    })
}

/// Writes `n,estimate,half_width` rows; unresolved breakpoints are `inf`.
pub fn write_breakpoints(bp: &Breakpoints, csv_path: &Path) -> Result<PathBuf> {
    let mut w = csv_writer(csv_path)?;
    w.write_record(["n", "estimate", "half_width"])?;
    for (i, (e, h)) in bp.estimates.iter().zip(&bp.half_widths).enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(*e), fmt_f64(*h)])?;
    }
    w.flush()?;
    Ok(csv_path.to_path_buf())
}

/// Writes a header and string rows as CSV.
pub fn write_rows<I, R>(csv_path: &Path, header: &[&str], rows: I) -> Result<PathBuf>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(csv_path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(csv_path.to_path_buf())
}

/// Writes any serializable value as pretty JSON.
pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    write_json(path, value)?;
    Ok(path.to_path_buf())
}

pub fn read_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    read_json(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTableMeta {
    pub r: u64,
    pub level: Level,
    pub model_id: String,
    pub mode: ArithmeticMode,
    pub h_max: u32,
    /// Exact values as `p/q` strings in rational mode.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<Vec<String>>,
}

/// Writes `h,value,exact_flag` rows and a JSON sidecar.
pub fn write_moment_table(table: &MomentTable, csv_path: &Path) -> Result<Vec<PathBuf>> {
    let mut w = csv_writer(csv_path)?;
    w.write_record(["h", "value", "exact_flag"])?;
    let exact_flag = u8::from(table.exact.is_some()).to_string();
    for (h, v) in table.values.iter().enumerate() {
        w.write_record([h.to_string(), fmt_f64(*v), exact_flag.clone()])?;
    }
    w.flush()?;
    let meta = MomentTableMeta {
        r: table.r,
        level: table.level,
        model_id: table.model_id.clone(),
        mode: table.mode,
        h_max: table.h_max(),
        exact: table.exact.as_ref().map(|v| v.iter().map(BigRational::to_string).collect()),
    };
    let json = sidecar(csv_path);
    write_json(&json, &meta)?;
    Ok(vec![csv_path.to_path_buf(), json])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchHeader {
    pub model_id: String,
    pub r: u64,
    pub level: Level,
    pub seed: u64,
    pub gen_params: GenParams,
    pub count: usize,
    pub encoding: String,
    pub stats: BatchStats,
}

/// Writes samples as little-endian `f64` to `bin_path` and a JSON header.
pub fn write_batch(batch: &CascadeSampleBatch, bin_path: &Path) -> Result<Vec<PathBuf>> {
    let mut w = create(bin_path)?;
    for x in &batch.samples {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    let header = BatchHeader {
        model_id: batch.model_id.clone(),
        r: batch.r,
        level: batch.level,
        seed: batch.seed,
        gen_params: batch.gen_params,
        count: batch.samples.len(),
        encoding: "f64-le".into(),
        stats: batch.stats(),
    };
    let json = sidecar(bin_path);
    write_json(&json, &header)?;
    Ok(vec![bin_path.to_path_buf(), json])
}

pub fn read_batch(bin_path: &Path) -> Result<CascadeSampleBatch> {
    let header: BatchHeader = read_json(&sidecar(bin_path))?;
    let mut bytes = Vec::new();
    File::open(bin_path)?.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * header.count {
        return Err(CascadeError::config(format!(
            "{}: expected {} samples, found {} bytes",
            bin_path.display(),
            header.count,
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(CascadeSampleBatch {
        model_id: header.model_id,
        r: header.r,
        level: header.level,
        seed: header.seed,
        gen_params: header.gen_params,
        samples,
    })
}

/// One sample per line under a `z` header.
pub fn write_batch_csv(batch: &CascadeSampleBatch, csv_path: &Path) -> Result<PathBuf> {
    let mut w = csv_writer(csv_path)?;
    w.write_record(["z"])?;
    for x in &batch.samples {
        w.write_record([fmt_f64(*x)])?;
    }
    w.flush()?;
    Ok(csv_path.to_path_buf())
}

const REPORT_COLUMNS: [&str; 16] = [
    "regime", "level", "a", "alpha", "r", "speed", "threshold", "hits", "log_prob", "ci_low", "ci_high",
    "half_width", "fitted_slope", "slope_se", "theory", "verdict",
];

fn label<T: Serialize>(x: T) -> Result<String> {
    Ok(serde_json::to_value(x)?.as_str().unwrap_or_default().to_string())
}

fn report_rows(rep: &DeviationReport) -> Result<Vec<Vec<String>>> {
    let verdict = label(rep.verdict)?;
    Ok((0..rep.r_values.len())
        .map(|i| {
            vec![
                rep.regime.name().to_string(),
                rep.level.to_string(),
                fmt_f64(rep.a),
                rep.alpha.map(fmt_f64).unwrap_or_default(),
                rep.r_values[i].to_string(),
                fmt_f64(rep.speed_values[i]),
                fmt_f64(rep.thresholds[i]),
                rep.hits[i].to_string(),
                fmt_f64(rep.log_prob_estimates[i]),
                fmt_f64(rep.ci_low[i]),
                fmt_f64(rep.ci_high[i]),
                fmt_f64(rep.ci_half_widths[i]),
                fmt_f64(rep.fitted_slope),
                fmt_f64(rep.slope_se),
                fmt_f64(rep.theory_value),
                verdict.clone(),
            ]
        })
        .collect())
}

/// Writes the report as JSON and as one CSV row per `r`.
pub fn write_deviation_report(rep: &DeviationReport, json_path: &Path) -> Result<Vec<PathBuf>> {
    write_json(json_path, rep)?;
    let csv = json_path.with_extension("csv");
    let mut w = csv_writer(&csv)?;
    w.write_record(REPORT_COLUMNS)?;
    for row in report_rows(rep)? {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(vec![json_path.to_path_buf(), csv])
}

pub fn read_deviation_report(json_path: &Path) -> Result<DeviationReport> {
    read_json(json_path)
}

/// Writes the suite report as JSON and a flat CSV of its slope experiments.
pub fn write_suite_report(rep: &SuiteReport, json_path: &Path) -> Result<Vec<PathBuf>> {
    write_json(json_path, rep)?;
    let csv = json_path.with_extension("csv");
    let mut w = csv_writer(&csv)?;
    w.write_record(["check", "status"].into_iter().chain(REPORT_COLUMNS))?;
    for c in &rep.checks {
        let status = label(c.status)?;
        let rows = match &c.report {
            Some(d) => report_rows(d)?,
            None => vec![vec![String::new(); REPORT_COLUMNS.len()]],
        };
        for row in rows {
            w.write_record([c.name.clone(), status.clone()].into_iter().chain(row))?;
        }
    }
    w.flush()?;
    Ok(vec![json_path.to_path_buf(), csv])
}
