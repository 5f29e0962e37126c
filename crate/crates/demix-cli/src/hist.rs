//! Histogram and noise-pmf file ingestion.

use crate::CliError;
use demix::mixands::{EmpiricalCounts, NoisePmf};
use std::collections::BTreeMap;
use std::path::Path;

/// Reads a histogram file: either CSV with a `k,count` header or raw
/// newline-separated integer observations (auto-detected from the first
/// nonempty line).
pub fn parse_histogram(path: &Path) -> Result<EmpiricalCounts, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .peekable();
    let Some(first) = lines.peek() else {
        return Err(CliError::Validation(format!(
            "{}: empty histogram file",
            path.display()
        )));
    };
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let header = first.to_ascii_lowercase().replace(' ', "");
    if header == "k,count" {
        lines.next();
        for line in lines {
            let mut parts = line.split(',');
            let (Some(ks), Some(cs), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(CliError::Validation(format!(
                    "{}: expected `k,count`, got `{line}`",
                    path.display()
                )));
            };
            let k: u64 = ks.trim().parse().map_err(|_| {
                CliError::Validation(format!(
                    "{}: bad value `{ks}` (need a nonnegative integer)",
                    path.display()
                ))
            })?;
            let c: u64 = cs.trim().parse().map_err(|_| {
                CliError::Validation(format!(
                    "{}: bad count `{cs}` (need a nonnegative integer)",
                    path.display()
                ))
            })?;
            *counts.entry(k).or_insert(0) += c;
        }
    } else {
        for line in lines {
            let k: u64 = line.parse().map_err(|_| {
                CliError::Validation(format!(
                    "{}: bad observation `{line}` (need a nonnegative integer)",
                    path.display()
                ))
            })?;
            *counts.entry(k).or_insert(0) += 1;
        }
    }
    EmpiricalCounts::from_counts(counts).map_err(CliError::from)
}

/// Serializes a histogram in the `k,count` CSV form that `parse_histogram`
/// reads back identically.
pub fn write_histogram(counts: &EmpiricalCounts) -> String {
    let mut out = String::from("k,count\n");
    for (k, c) in counts.iter() {
        out.push_str(&format!("{k},{c}\n"));
    }
    out
}

/// Reads a noise pmf file: CSV with a `k,prob` header.
pub fn parse_noise(path: &Path) -> Result<NoisePmf, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut entries: Vec<(i64, f64)> = Vec::new();
    for (idx, line) in raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
    {
        if idx == 0 && line.to_ascii_lowercase().replace(' ', "") == "k,prob" {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(ks), Some(ps), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(CliError::Validation(format!(
                "{}: expected `k,prob`, got `{line}`",
                path.display()
            )));
        };
        let k: i64 = ks.trim().parse().map_err(|_| {
            CliError::Validation(format!("{}: bad support point `{ks}`", path.display()))
        })?;
        let p: f64 = ps.trim().parse().map_err(|_| {
            CliError::Validation(format!("{}: bad probability `{ps}`", path.display()))
        })?;
        entries.push((k, p));
    }
    if entries.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: empty noise file",
            path.display()
        )));
    }
    entries.sort_by_key(|e| e.0);
    let offset = entries[0].0;
    let len = (entries.last().unwrap().0 - offset + 1) as usize;
    let mut probs = vec![0.0; len];
    for (k, p) in entries {
        probs[(k - offset) as usize] += p;
    }
    NoisePmf::new(offset, probs).map_err(CliError::from)
}
