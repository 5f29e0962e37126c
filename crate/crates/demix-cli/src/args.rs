//! Minimal `--key value` flag parsing with typed getters.

use crate::CliError;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct Args {
    values: BTreeMap<String, String>,
    flags: Vec<String>,
}

/// Boolean switches that take no value.
const SWITCHES: &[&str] = &["halfline", "clip", "weights-none"];

impl Args {
    pub fn parse(argv: &[String]) -> Result<Args, String> {
        let mut out = Args::default();
        let mut i = 0;
        while i < argv.len() {
            let arg = &argv[i];
            let Some(name) = arg.strip_prefix("--") else {
                return Err(format!("unexpected positional argument `{arg}`"));
            };
            if SWITCHES.contains(&name) {
                out.flags.push(name.to_string());
                i += 1;
                continue;
            }
            let Some(value) = argv.get(i + 1) else {
                return Err(format!("flag --{name} needs a value"));
            };
            out.values.insert(name.to_string(), value.clone());
            i += 2;
        }
        Ok(out)
    }

    pub fn has_flag(&self, name: &str) -> bool {
        self.flags.iter().any(|f| f == name)
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(|s| s.as_str())
    }

    pub fn require(&self, name: &str) -> Result<&str, CliError> {
        self.get(name)
            .ok_or_else(|| CliError::Validation(format!("missing required flag --{name}")))
    }

    pub fn require_f64(&self, name: &str) -> Result<f64, CliError> {
        self.require(name)?
            .parse()
            .map_err(|_| CliError::Validation(format!("--{name} must be a number")))
    }

    pub fn require_u64(&self, name: &str) -> Result<u64, CliError> {
        self.require(name)?
            .parse()
            .map_err(|_| CliError::Validation(format!("--{name} must be a nonnegative integer")))
    }

    pub fn opt_f64(&self, name: &str) -> Result<Option<f64>, CliError> {
        self.get(name)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Validation(format!("--{name} must be a number")))
            })
            .transpose()
    }

    pub fn opt_u64(&self, name: &str) -> Result<Option<u64>, CliError> {
        self.get(name)
            .map(|v| {
                v.parse().map_err(|_| {
                    CliError::Validation(format!("--{name} must be a nonnegative integer"))
                })
            })
            .transpose()
    }

    pub fn opt_i64(&self, name: &str) -> Result<Option<i64>, CliError> {
        self.get(name)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Validation(format!("--{name} must be an integer")))
            })
            .transpose()
    }

    /// Inclusive range written LO..HI.
    pub fn require_range(&self, name: &str) -> Result<(usize, usize), CliError> {
        let raw = self.require(name)?;
        let parts: Vec<&str> = raw.split("..").collect();
        if parts.len() != 2 {
            return Err(CliError::Validation(format!(
                "--{name} must look like LO..HI, got `{raw}`"
            )));
        }
        let lo = parts[0]
            .parse()
            .map_err(|_| CliError::Validation(format!("bad range start in --{name}")))?;
        let hi = parts[1]
            .parse()
            .map_err(|_| CliError::Validation(format!("bad range end in --{name}")))?;
        if lo > hi {
            return Err(CliError::Validation(format!("--{name}: empty range")));
        }
        Ok((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_pairs_and_switches() {
        let a = Args::parse(&sv(&["--m", "5", "--clip", "--a", "0.5"])).unwrap();
        assert_eq!(a.require_u64("m").unwrap(), 5);
        assert!(a.has_flag("clip"));
        assert_eq!(a.require_f64("a").unwrap(), 0.5);
        assert!(a.require("missing").is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Args::parse(&sv(&["m", "5"])).is_err());
        assert!(Args::parse(&sv(&["--m"])).is_err());
        let a = Args::parse(&sv(&["--m-scan", "3..1"])).unwrap();
        assert!(a.require_range("m-scan").is_err());
        let a = Args::parse(&sv(&["--m-scan", "1..8"])).unwrap();
        assert_eq!(a.require_range("m-scan").unwrap(), (1, 8));
    }
}
