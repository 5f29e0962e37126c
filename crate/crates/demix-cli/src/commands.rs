//! Subcommand implementations.

use crate::args::Args;
use crate::{config, fmt_float, hist, worker_count, write_output, CliError};
use demix::mixands::PowerSeriesFamily;
use demix::orthopoly::{coeff_growth, orthonormal_coeffs, recurrence_for, MeasureSpec};
use demix::projector::{estimate_halfline, estimate_projection, variance_bound};
use demix::smoothness::{
    lower_bound_rhs, matched_class_params, smooth_density_factory, SmoothnessSeq,
};
use demix::uniformmix::estimate_uniform;
use std::path::Path;
use std::time::Instant;

fn family_from(args: &Args) -> Result<PowerSeriesFamily, CliError> {
    match args.require("family")? {
        "poisson" => Ok(PowerSeriesFamily::poisson()),
        "negbinomial" => {
            let shape = args.require_f64("shape")?;
            Ok(PowerSeriesFamily::neg_binomial(shape)?)
        }
        other => Err(CliError::Validation(format!(
            "unknown family `{other}` (poisson | negbinomial)"
        ))),
    }
}

/// `poly`: the orthonormal coefficient table of a reference measure as CSV
/// (columns k, l, q). With `--weights factorial` the coefficients are
/// divided by a_l = 1/l!, the weighting the estimator matrices use.
pub fn run_poly(args: &Args) -> Result<(), CliError> {
    let measure = match args.require("measure")? {
        "legendre" => MeasureSpec::lebesgue(-1.0, 1.0)?,
        "lebesgue" => MeasureSpec::lebesgue(args.require_f64("a")?, args.require_f64("b")?)?,
        "laguerre" => MeasureSpec::exp_weight(1)?,
        "laguerre2" => MeasureSpec::exp_weight(2)?,
        other => {
            return Err(CliError::Validation(format!(
                "unknown measure `{other}` (legendre | lebesgue | laguerre | laguerre2)"
            )))
        }
    };
    let m = args.require_u64("m")? as usize;
    let rec = recurrence_for(measure)?;
    let q = orthonormal_coeffs(&rec, m)?;
    let weights = match args.get("weights") {
        None => None,
        Some("factorial") => {
            let mut inv_fact = Vec::with_capacity(m);
            let mut f = 1.0f64;
            for l in 0..m {
                if l > 0 {
                    f *= l as f64;
                }
                inv_fact.push(1.0 / f);
            }
            Some(inv_fact)
        }
        Some(other) => {
            return Err(CliError::Validation(format!(
                "unknown weights `{other}` (factorial)"
            )))
        }
    };
    let mut out = String::from("k,l,q\n");
    for k in 0..m {
        for l in 0..=k {
            let v = match &weights {
                Some(w) => q.entry(k, l) / w[l],
                None => q.entry(k, l),
            };
            out.push_str(&format!("{k},{l},{}\n", fmt_float(v)));
        }
    }
    // growth diagnostic rides along on stderr for quick inspection
    if let Ok(s) = coeff_growth(&q, weights.as_deref()) {
        if let Some(last) = s.last() {
            eprintln!("row norm at k = {}: {:.6e}", m - 1, last.sqrt());
        }
    }
    write_output(args.get("out"), &out)?;
    Ok(())
}

/// `estimate`: the projection estimator from a histogram; writes the
/// coefficient vector and a 200-point grid evaluation as one CSV
/// (columns kind, x, value).
pub fn run_estimate(args: &Args) -> Result<(), CliError> {
    let family = family_from(args)?;
    let m = args.require_u64("m")? as usize;
    let counts = hist::parse_histogram(Path::new(args.require("data")?))?;
    let halfline = args.has_flag("halfline");
    let (est, grid_lo, grid_hi) = if halfline {
        if family.name() != "poisson" {
            return Err(CliError::Validation(
                "--halfline supports the poisson family only".into(),
            ));
        }
        let hi = args.opt_f64("grid-max")?.unwrap_or(8.0);
        (estimate_halfline(&counts, m)?, 0.0, hi)
    } else {
        let a = args.require_f64("a")?;
        let b = args.require_f64("b")?;
        let measure = MeasureSpec::lebesgue(a, b)?;
        (estimate_projection(&counts, &family, measure, m)?, a, b)
    };
    let grid: Vec<f64> = (0..200)
        .map(|i| grid_lo + (grid_hi - grid_lo) * i as f64 / 199.0)
        .collect();
    let values = if args.has_flag("clip") {
        est.clip_renormalized(&grid)?
    } else {
        est.eval_grid(&grid)?
    };
    let mut out = String::from("kind,x,value\n");
    for (k, c) in est.coeffs().iter().enumerate() {
        out.push_str(&format!("coeff,{k},{}\n", fmt_float(*c)));
    }
    for (x, v) in grid.iter().zip(&values) {
        out.push_str(&format!("grid,{},{}\n", fmt_float(*x), fmt_float(*v)));
    }
    write_output(args.get("out"), &out)?;
    Ok(())
}

/// `deconv`: translation-mixture estimator on a k range; CSV (k, fhat).
pub fn run_deconv(args: &Args) -> Result<(), CliError> {
    let noise = hist::parse_noise(Path::new(args.require("noise")?))?;
    let counts = hist::parse_histogram(Path::new(args.require("data")?))?;
    let kmin = args
        .opt_i64("kmin")?
        .ok_or_else(|| CliError::Validation("missing required flag --kmin".into()))?;
    let kmax = args
        .opt_i64("kmax")?
        .ok_or_else(|| CliError::Validation("missing required flag --kmax".into()))?;
    let est = demix::deconv::estimate_deconv(&counts, &noise, (kmin, kmax), None)?;
    let mut out = String::from("k,fhat\n");
    for (k, v) in est {
        out.push_str(&format!("{k},{}\n", fmt_float(v)));
    }
    write_output(args.get("out"), &out)?;
    Ok(())
}

/// `uniform`: uniform-mixture estimator; CSV (theta, fhat).
pub fn run_uniform(args: &Args) -> Result<(), CliError> {
    let m = args.require_u64("m")?;
    let counts = hist::parse_histogram(Path::new(args.require("data")?))?;
    let est = estimate_uniform(&counts, m)?;
    let mut out = String::from("theta,fhat\n");
    for (i, v) in est.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, fmt_float(*v)));
    }
    write_output(args.get("out"), &out)?;
    Ok(())
}

/// `bounds`: per-order minimax lower bound and projection-estimator upper
/// bound for a smoothness class, centered at the constructive smooth
/// density; CSV (m, lower, upper).
pub fn run_bounds(args: &Args) -> Result<(), CliError> {
    let family = family_from(args)?;
    let a = args.require_f64("a")?;
    let b = args.require_f64("b")?;
    let measure = MeasureSpec::lebesgue(a, b)?;
    let alpha = args.require_f64("alpha")?;
    let c = args.require_f64("C")?;
    let r = args.require_u64("r")? as usize;
    if r == 0 {
        return Err(CliError::Validation(
            "--r must be >= 1 (the class center construction needs a free zeroth coefficient)"
                .into(),
        ));
    }
    let n = args.require_u64("n")?;
    let k_sup = args.opt_f64("K")?.unwrap_or(1.0);
    let (m_lo, m_hi) = args.require_range("m-scan")?;
    let u = SmoothnessSeq::power(alpha)?;
    let factory = smooth_density_factory(&family, measure, &u, r, 60, None)?;
    let f0 = factory.as_fn();
    // matched upper-bound class via the inclusion construction (center
    // compared to itself, so the sup ratio is 1)
    let (k_prime, c_prime) = matched_class_params(k_sup, c, factory.c_constructive, 1.0);
    let mut out = String::from("m,lower,upper\n");
    for m in m_lo.max(r.max(1))..=m_hi {
        let lower = lower_bound_rhs(f0.as_ref(), k_sup, &u, c, r.max(1), &family, measure, m, n)?;
        let upper = (c_prime * u.value(m)).powi(2)
            + variance_bound(f0.as_ref(), k_prime, &family, measure, m, n)?;
        out.push_str(&format!("{m},{},{}\n", fmt_float(lower), fmt_float(upper)));
    }
    write_output(args.get("out"), &out)?;
    Ok(())
}

/// `simulate`: runs the Monte Carlo harness from a key=value config file.
/// The report CSV goes to the configured output (or stdout); a JSON summary
/// with the config echo, wall time and oracle-agreement indicators goes to
/// `<out>.summary.json` (or stderr when writing to stdout). Only the CSV is
/// part of the determinism contract; the summary carries wall time.
pub fn run_simulate(args: &Args) -> Result<(), CliError> {
    let parsed = config::parse_config_file(Path::new(args.require("config")?))?;
    let mut sim = parsed.sim;
    if let Some(seed) = args.opt_u64("seed")? {
        sim.seed = seed;
    }
    let out_path = args
        .get("out")
        .map(str::to_string)
        .or_else(|| sim.out.clone());
    let workers = worker_count();
    let start = Instant::now();
    let report = demix::simlab::empirical_mise(&sim, workers)?;
    let wall = start.elapsed().as_secs_f64();

    let mut csv = String::from("n,m,empirical_mise,standard_error,exact_bias_sq,exact_variance\n");
    let blank = String::new();
    for row in &report.rows {
        let se = row
            .standard_error
            .map(fmt_float)
            .unwrap_or_else(|| blank.clone());
        let eb = row
            .exact_bias_sq
            .map(fmt_float)
            .unwrap_or_else(|| blank.clone());
        let ev = row
            .exact_variance
            .map(fmt_float)
            .unwrap_or_else(|| blank.clone());
        csv.push_str(&format!(
            "{},{},{},{se},{eb},{ev}\n",
            row.n,
            row.m,
            fmt_float(row.empirical_mise)
        ));
    }
    write_output(out_path.as_deref(), &csv)?;

    // JSON summary: config echo, wall time, oracle-agreement indicators
    let mut json = String::from("{\n  \"config\": {");
    let mut first = true;
    for (k, v) in &parsed.echo {
        if !first {
            json.push(',');
        }
        first = false;
        json.push_str(&format!("\n    \"{k}\": \"{v}\""));
    }
    json.push_str("\n  },\n");
    json.push_str(&format!("  \"seed\": {},\n", sim.seed));
    json.push_str(&format!("  \"workers\": {workers},\n"));
    json.push_str(&format!("  \"wall_time_s\": {wall:.3},\n"));
    json.push_str(&format!("  \"note\": \"{}\",\n", report.note));
    json.push_str("  \"within_3se_of_exact\": [");
    let mut first = true;
    for row in &report.rows {
        if !first {
            json.push_str(", ");
        }
        first = false;
        match (row.exact_bias_sq, row.exact_variance, row.standard_error) {
            (Some(b), Some(v), Some(se)) => {
                let ok = (row.empirical_mise - (b + v)).abs() <= 3.0 * se;
                json.push_str(if ok { "true" } else { "false" });
            }
            _ => json.push_str("null"),
        }
    }
    json.push_str("]\n}\n");
    match &out_path {
        Some(p) => std::fs::write(format!("{p}.summary.json"), json)?,
        None => eprintln!("{json}"),
    }
    Ok(())
}
