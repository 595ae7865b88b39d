//! TOML run configuration. Every command-line flag has a key of the same name
//! (dashes become underscores) in the section of its subcommand; the weight
//! law lives under `[w]`. Flags override the file.

use std::path::{Path, PathBuf};

use cascade_ldp::{CascadeError, Result};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

const KNOWN: &[(&str, &[&str])] = &[
    ("", &["out", "threads", "seed"]),
    ("w", &["kind", "shape", "p_zero"]),
    (
        "rate",
        &["n", "amax", "linear_step", "geometric_ratio", "breakpoints", "bp_tol", "tol", "max_levels"],
    ),
    ("moments", &["r", "hmax", "level", "exact", "bound_h", "delta", "kappa_eta", "kappa_r"]),
    ("simulate", &["r", "n", "count", "pool", "iters", "seed", "csv", "no_renormalize"]),
    ("verify", &["preset", "seed", "samples", "pool", "iters", "infinite_r"]),
    ("plotdata", &["rate", "report"]),
];

#[derive(Debug, Default)]
pub struct Config {
    table: Table,
    pub source: Option<(PathBuf, String)>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CascadeError::Config(format!("cannot read {}: {e}", path.display())))?;
        let table: Table = text
            .parse()
            .map_err(|e| CascadeError::Config(format!("{}: {e}", path.display())))?;
        check_keys(&table)?;
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(Self { table, source: Some((path.to_path_buf(), digest)) })
    }

    fn lookup(&self, section: &str, key: &str) -> Option<&Value> {
        if section.is_empty() {
            self.table.get(key)
        } else {
            self.table.get(section)?.as_table()?.get(key)
        }
    }

    fn bad(section: &str, key: &str, want: &str) -> CascadeError {
        CascadeError::Config(format!("config key `{section}.{key}` must be {want}"))
    }

    pub fn f64(&self, section: &str, key: &str, flag: Option<f64>) -> Result<Option<f64>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.lookup(section, key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(Self::bad(section, key, "a number")),
        }
    }

    pub fn u64(&self, section: &str, key: &str, flag: Option<u64>) -> Result<Option<u64>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.lookup(section, key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(Self::bad(section, key, "a nonnegative integer")),
        }
    }

    pub fn string(&self, section: &str, key: &str, flag: Option<String>) -> Result<Option<String>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.lookup(section, key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Integer(i)) => Ok(Some(i.to_string())),
            Some(_) => Err(Self::bad(section, key, "a string")),
        }
    }

    /// A flag given on the command line wins; otherwise the config value.
    pub fn flag(&self, section: &str, key: &str, flag: bool) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.lookup(section, key) {
            None => Ok(false),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(Self::bad(section, key, "a boolean")),
        }
    }

    pub fn u64_list(&self, section: &str, key: &str, flag: Option<Vec<u64>>) -> Result<Option<Vec<u64>>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.lookup(section, key) {
            None => Ok(None),
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                    _ => Err(Self::bad(section, key, "a list of nonnegative integers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(Self::bad(section, key, "a list of nonnegative integers")),
        }
    }
}

fn check_keys(table: &Table) -> Result<()> {
    let allowed = |section: &str| KNOWN.iter().find(|(s, _)| *s == section).map(|(_, keys)| *keys);
    for (key, value) in table {
        match value {
            Value::Table(inner) => {
                let keys = allowed(key)
                    .filter(|_| !key.is_empty())
                    .ok_or_else(|| CascadeError::Config(format!("unknown config section `{key}`")))?;
                for k in inner.keys() {
                    if !keys.contains(&k.as_str()) {
                        return Err(CascadeError::Config(format!("unknown config key `{key}.{k}`")));
                    }
                }
            }
            _ => {
                if !allowed("").expect("top level").contains(&key.as_str()) {
                    return Err(CascadeError::Config(format!("unknown config key `{key}`")));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Config> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, text).unwrap();
        Config::load(Some(&p))
    }

    #[test]
    fn dotted_and_sectioned_keys() {
        let c = parse("seed = 3\nw.kind = \"gamma\"\nw.shape = 2\n[rate]\nn = 2\namax = 20.5\n").unwrap();
        assert_eq!(c.string("w", "kind", None).unwrap().as_deref(), Some("gamma"));
        assert_eq!(c.f64("w", "shape", None).unwrap(), Some(2.0));
        assert_eq!(c.string("rate", "n", None).unwrap().as_deref(), Some("2"));
        assert_eq!(c.f64("rate", "amax", Some(5.0)).unwrap(), Some(5.0));
        assert_eq!(c.u64("", "seed", None).unwrap(), Some(3));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse("[rate]\nbogus = 1\n").is_err());
        assert!(parse("[nope]\nn = 1\n").is_err());
        assert!(parse("speed = 1\n").is_err());
        assert!(parse("[rate]\namax = \"x\"\n").unwrap().f64("rate", "amax", None).is_err());
    }
}
