//! Flat key=value simulation configs.
//!
//! Recognized keys: scenario, family, shape, a, b, true_f, noise, kmin,
//! kmax, n_grid, replicates, seed, bandwidth, tau, beta, lambda1, alpha, m,
//! out. Unknown keys are errors. Lines starting with `#` are comments.
//!
//! Value forms:
//!   scenario   power-series | deconv | uniform
//!   family     poisson | negbinomial        (power-series only)
//!   true_f     uniform                      (power-series: density on [a,b])
//!              pmf:V:P,V:P,...              (deconv / uniform scenarios)
//!   noise      pmf:V:P,...                  (deconv only)
//!   n_grid     comma-separated increasing sample sizes
//!   bandwidth  fixed | poisson | finite-r | halfline | uniform

use crate::CliError;
use demix::mixands::{NoisePmf, PowerSeriesFamily};
use demix::orthopoly::MeasureSpec;
use demix::simlab::{MRule, Scenario, SimConfig};
use demix::uniformmix::ThetaPmf;
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

const KNOWN_KEYS: &[&str] = &[
    "scenario",
    "family",
    "shape",
    "a",
    "b",
    "true_f",
    "noise",
    "kmin",
    "kmax",
    "n_grid",
    "replicates",
    "seed",
    "bandwidth",
    "tau",
    "beta",
    "lambda1",
    "alpha",
    "m",
    "out",
];

/// Parsed config: the simulation request plus the raw key/value echo for
/// report summaries.
pub struct ParsedConfig {
    pub sim: SimConfig,
    pub echo: BTreeMap<String, String>,
}

pub fn parse_config_file(path: &Path) -> Result<ParsedConfig, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&raw)
}

pub fn parse_config(raw: &str) -> Result<ParsedConfig, CliError> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    for line in raw.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Validation(format!(
                "config line is not key=value: `{line}`"
            )));
        };
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Validation(format!("unknown config key `{key}`")));
        }
        if kv.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Validation(format!(
                "duplicate config key `{key}`"
            )));
        }
    }
    let get = |k: &str| -> Result<&str, CliError> {
        kv.get(k)
            .map(|s| s.as_str())
            .ok_or_else(|| CliError::Validation(format!("config key `{k}` is required")))
    };
    let parse_f64 = |k: &str| -> Result<f64, CliError> {
        get(k)?
            .parse()
            .map_err(|_| CliError::Validation(format!("config key `{k}` must be a number")))
    };
    let parse_u64 = |k: &str| -> Result<u64, CliError> {
        get(k)?
            .parse()
            .map_err(|_| CliError::Validation(format!("config key `{k}` must be an integer")))
    };

    let scenario = match get("scenario")? {
        "power-series" => {
            let family = match get("family")? {
                "poisson" => PowerSeriesFamily::poisson(),
                "negbinomial" => PowerSeriesFamily::neg_binomial(parse_f64("shape")?)?,
                other => return Err(CliError::Validation(format!("unknown family `{other}`"))),
            };
            let measure = MeasureSpec::lebesgue(parse_f64("a")?, parse_f64("b")?)?;
            let true_f = match get("true_f")? {
                "uniform" => {
                    let (a, b) = (parse_f64("a")?, parse_f64("b")?);
                    let h = 1.0 / (b - a);
                    Arc::new(move |t: f64| if (a..=b).contains(&t) { h } else { 0.0 })
                        as demix::smoothness::DensityFn
                }
                other => {
                    return Err(CliError::Validation(format!(
                        "power-series true_f must be `uniform`, got `{other}`"
                    )))
                }
            };
            Scenario::PowerSeries {
                family,
                measure,
                true_f,
                halfline: matches!(kv.get("bandwidth").map(|s| s.as_str()), Some("halfline")),
            }
        }
        "deconv" => {
            let true_f = parse_pmf_spec(get("true_f")?)?;
            let noise = parse_pmf_spec(get("noise")?)?;
            let kmin: i64 = get("kmin")?
                .parse()
                .map_err(|_| CliError::Validation("kmin must be an integer".into()))?;
            let kmax: i64 = get("kmax")?
                .parse()
                .map_err(|_| CliError::Validation("kmax must be an integer".into()))?;
            Scenario::Deconv {
                noise,
                true_f,
                k_range: (kmin, kmax),
            }
        }
        "uniform" => {
            let pmf = parse_pmf_spec(get("true_f")?)?;
            let entries: Vec<(u64, f64)> = pmf
                .support()
                .map(|(k, p)| {
                    if k < 1 {
                        Err(CliError::Validation(
                            "uniform-scenario pmf needs support on {1, 2, ...}".into(),
                        ))
                    } else {
                        Ok((k as u64, p))
                    }
                })
                .collect::<Result<_, _>>()?;
            Scenario::Uniform {
                true_f: ThetaPmf::new(entries)?,
            }
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown scenario `{other}` (power-series | deconv | uniform)"
            )))
        }
    };

    let m_rule = match kv.get("bandwidth").map(|s| s.as_str()) {
        None | Some("fixed") => MRule::Fixed(parse_u64("m")?),
        Some("poisson") => MRule::Poisson {
            tau: kv
                .get("tau")
                .map(|t| {
                    t.parse()
                        .map_err(|_| CliError::Validation("tau must be a number".into()))
                })
                .transpose()?
                .unwrap_or(1.0),
        },
        Some("finite-r") => MRule::FiniteR {
            tau: kv
                .get("tau")
                .map(|t| {
                    t.parse()
                        .map_err(|_| CliError::Validation("tau must be a number".into()))
                })
                .transpose()?,
        },
        Some("halfline") => MRule::Halfline {
            lambda1: parse_f64("lambda1")?,
            alpha: parse_f64("alpha")?,
        },
        Some("uniform") => MRule::Uniform {
            tau: parse_f64("tau")?,
            beta: parse_f64("beta")?,
        },
        Some(other) => {
            return Err(CliError::Validation(format!(
                "unknown bandwidth rule `{other}`"
            )))
        }
    };

    let n_grid: Vec<u64> = get("n_grid")?
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("bad n_grid entry `{s}`")))
        })
        .collect::<Result<_, _>>()?;

    let sim = SimConfig {
        scenario,
        m_rule,
        n_grid,
        replicates: parse_u64("replicates")?,
        seed: parse_u64("seed")?,
        out: kv.get("out").cloned(),
    };
    Ok(ParsedConfig { sim, echo: kv })
}

/// `pmf:V:P,V:P,...` with integer support points.
fn parse_pmf_spec(spec: &str) -> Result<NoisePmf, CliError> {
    let Some(body) = spec.strip_prefix("pmf:") else {
        return Err(CliError::Validation(format!(
            "expected pmf:V:P,... got `{spec}`"
        )));
    };
    let mut entries: Vec<(i64, f64)> = Vec::new();
    for item in body.split(',') {
        let mut parts = item.split(':');
        let (Some(vs), Some(ps), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(CliError::Validation(format!("bad pmf item `{item}`")));
        };
        let v: i64 = vs
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("bad pmf support `{vs}`")))?;
        let p: f64 = ps
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("bad pmf probability `{ps}`")))?;
        entries.push((v, p));
    }
    entries.sort_by_key(|e| e.0);
    let offset = entries[0].0;
    let len = (entries.last().unwrap().0 - offset + 1) as usize;
    let mut probs = vec![0.0; len];
    for (v, p) in entries {
        probs[(v - offset) as usize] += p;
    }
    NoisePmf::new(offset, probs).map_err(CliError::from)
}
