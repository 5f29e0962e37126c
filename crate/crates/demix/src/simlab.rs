//! Reproducible Monte Carlo measurement of estimator risk.
//!
//! Sampling, estimation and loss evaluation for the three scenario kinds
//! (power-series mixtures, discrete deconvolution, uniform mixtures), with a
//! determinism contract: replicate i always draws from a stream seeded by
//! `seed ⊕ mix(i)`, and reductions run in replicate-index order, so a
//! configuration produces bit-identical reports regardless of how many
//! worker threads execute it.
//!
//! Exact risk oracles exist for all three scenarios (the MISE decomposition
//! for power-series mixtures, the closed one-observation second moment for
//! deconvolution, coordinatewise variances for uniform mixtures) and are
//! attached to every report row.
//!
//! The logarithmic minimax rate claims for mixture estimators are not
//! quantitatively verifiable at desk scale (log n barely moves across
//! feasible n); reports therefore carry monotone-decay and bound-inequality
//! checks only, and say so in their note field.

use crate::deconv::{estimate_deconv, exact_n_mise, FourierGrid};
use crate::error::{DemixError, Result};
use crate::mixands::{EmpiricalCounts, NoisePmf, PowerSeriesFamily};
use crate::orthopoly::MeasureSpec;
use crate::projector::{
    dist_sq_to_density, exact_mise, phi_matrix, phi_matrix_halfline, PhiMatrix,
};
use crate::quadrature::{rule_halfline_exp, rule_on_interval, Rule, INTERVAL_NODES};
use crate::smoothness::DensityFn;
use crate::uniformmix::{estimate_uniform, exact_mise_uniform, ThetaPmf};
use crate::{bandwidth, uniformmix};
use std::collections::BTreeMap;

/// Number of envelope cells for rejection sampling.
const ENVELOPE_CELLS: usize = 1024;
/// Envelope inflation factor over the observed cell maxima.
const ENVELOPE_INFLATION: f64 = 1.01;
/// Tail cutoff for inverse-CDF sampling of the mixand pmf.
const PMF_TAIL: f64 = 1e-12;

// -- deterministic RNG ------------------------------------------------------

/// SplitMix64: small, fast, and fully determined by its seed. Statistical
/// quality is ample for Monte Carlo means.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

fn splitmix_step(z: u64) -> u64 {
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        splitmix_step(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Stream seed of replicate i: seed ⊕ mix(i). Part of the determinism
/// contract, never dependent on worker assignment.
pub fn stream_seed(seed: u64, replicate: u64) -> u64 {
    seed ^ splitmix_step(replicate.wrapping_add(0x9E37_79B9_7F4A_7C15))
}

// -- scenarios and configuration --------------------------------------------

/// What is being simulated and estimated.
#[derive(Clone)]
pub enum Scenario {
    /// Power-series mixture on an interval: θ ~ f (density on [a,b]),
    /// X | θ ~ π_θ. With `halfline` set, estimation uses the half-line
    /// Poisson basis and the loss integrates over [0, ∞).
    PowerSeries {
        family: PowerSeriesFamily,
        measure: MeasureSpec,
        true_f: DensityFn,
        halfline: bool,
    },
    /// Translation mixture: X = U + ε with U ~ f and ε ~ p, both on the
    /// nonnegative integers.
    Deconv {
        noise: NoisePmf,
        true_f: NoisePmf,
        k_range: (i64, i64),
    },
    /// Uniform mixture: θ ~ f on {1, 2, ...}, X | θ uniform on {0..θ-1}.
    Uniform { true_f: ThetaPmf },
}

/// Order selection rule applied per sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MRule {
    Fixed(u64),
    Poisson { tau: f64 },
    FiniteR { tau: Option<f64> },
    Halfline { lambda1: f64, alpha: f64 },
    Uniform { tau: f64, beta: f64 },
}

/// A full simulation request.
#[derive(Clone)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub m_rule: MRule,
    pub n_grid: Vec<u64>,
    pub replicates: u64,
    pub seed: u64,
    /// Output destination; carried for the CLI, ignored by the engine.
    pub out: Option<String>,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(DemixError::Config("replicates must be >= 1".into()));
        }
        if self.n_grid.is_empty() {
            return Err(DemixError::Config("n_grid must be nonempty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DemixError::Config("n_grid must be increasing".into()));
        }
        Ok(())
    }
}

/// One (n, m) row of a Monte Carlo report.
#[derive(Debug, Clone, PartialEq)]
pub struct MiseRow {
    pub n: u64,
    pub m: u64,
    pub empirical_mise: f64,
    /// Absent when a single replicate leaves no variance estimate.
    pub standard_error: Option<f64>,
    pub exact_bias_sq: Option<f64>,
    pub exact_variance: Option<f64>,
}

/// Monte Carlo risk report.
#[derive(Debug, Clone, PartialEq)]
pub struct MiseReport {
    pub rows: Vec<MiseRow>,
    /// Scope statement attached to every report.
    pub note: String,
}

/// Full per-cell results, including per-replicate losses and coefficient
/// statistics (used by the unbiasedness checks).
#[derive(Debug, Clone)]
pub struct CellResult {
    pub n: u64,
    pub m: u64,
    pub losses: Vec<f64>,
    pub coeff_mean: Vec<f64>,
    pub coeff_se: Vec<f64>,
    pub empirical_mise: f64,
    pub standard_error: Option<f64>,
}

// -- sampling ----------------------------------------------------------------

/// Piecewise-constant envelope for rejection sampling on [a, b].
struct Envelope {
    a: f64,
    width: f64,
    heights: Vec<f64>,
    cdf: Vec<f64>,
}

impl Envelope {
    /// Builds the piecewise-constant majorant. The expected acceptance rate
    /// is 1/(envelope mass) since the density integrates to one; when it
    /// falls below 1%, the grid is refined (more cells, more probe points)
    /// before sampling starts.
    fn build(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        cells: usize,
        inflation: f64,
    ) -> Result<Envelope> {
        let mut cells = cells;
        let mut probes = 8usize;
        for _ in 0..3 {
            let width = (b - a) / cells as f64;
            let mut heights = Vec::with_capacity(cells);
            for j in 0..cells {
                let lo = a + j as f64 * width;
                let mut peak = 0.0f64;
                for s in 0..=probes {
                    let x = lo + width * s as f64 / probes as f64;
                    peak = peak.max(f(x));
                }
                heights.push(peak * inflation + 1e-300);
            }
            let mut cdf = Vec::with_capacity(cells);
            let mut acc = 0.0;
            for h in &heights {
                acc += h * width;
                cdf.push(acc);
            }
            let total = acc;
            if total <= 100.0 {
                for c in &mut cdf {
                    *c /= total;
                }
                return Ok(Envelope {
                    a,
                    width,
                    heights,
                    cdf,
                });
            }
            // rejection rate would exceed 99%: refine and retry
            cells *= 4;
            probes *= 2;
        }
        Err(DemixError::Envelope(
            "acceptance rate stays below 1% after refinement".into(),
        ))
    }

    fn draw(&self, f: &dyn Fn(f64) -> f64, rng: &mut Rng) -> Result<f64> {
        let mut rejections = 0u64;
        loop {
            let u = rng.next_f64();
            let cell = self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1);
            let x = self.a + (cell as f64 + rng.next_f64()) * self.width;
            let fx = f(x);
            if fx > self.heights[cell] * (1.0 + 1e-9) {
                return Err(DemixError::Envelope(format!(
                    "density exceeds envelope at θ = {x}: {fx} > {}",
                    self.heights[cell]
                )));
            }
            if rng.next_f64() * self.heights[cell] <= fx {
                return Ok(x);
            }
            rejections += 1;
            if rejections > 100_000 {
                return Err(DemixError::Envelope(
                    "rejection rate above 99.999%; envelope degenerate".into(),
                ));
            }
        }
    }
}

/// Inverse-CDF table over a discrete support.
struct DiscreteCdf {
    values: Vec<u64>,
    cum: Vec<f64>,
}

impl DiscreteCdf {
    fn from_pairs(pairs: impl Iterator<Item = (u64, f64)>) -> DiscreteCdf {
        let mut values = Vec::new();
        let mut cum = Vec::new();
        let mut acc = 0.0;
        for (v, p) in pairs {
            acc += p;
            values.push(v);
            cum.push(acc);
        }
        DiscreteCdf { values, cum }
    }

    fn draw(&self, rng: &mut Rng) -> u64 {
        let u = rng.next_f64() * self.cum.last().copied().unwrap_or(1.0);
        let i = self
            .cum
            .partition_point(|&c| c <= u)
            .min(self.values.len() - 1);
        self.values[i]
    }
}

/// Sampling plan, built once per cell and shared read-only by the workers.
enum Plan {
    PowerSeries {
        family: PowerSeriesFamily,
        true_f: DensityFn,
        envelope: Envelope,
    },
    Deconv {
        u_cdf: DiscreteCdf,
        eps_cdf: DiscreteCdf,
    },
    Uniform {
        theta_cdf: DiscreteCdf,
    },
}

fn build_plan(scenario: &Scenario) -> Result<Plan> {
    match scenario {
        Scenario::PowerSeries {
            family,
            measure,
            true_f,
            ..
        } => {
            let (a, b) = crate::mixands::interval_in_radius(family, *measure)?;
            let envelope =
                Envelope::build(true_f.as_ref(), a, b, ENVELOPE_CELLS, ENVELOPE_INFLATION)?;
            Ok(Plan::PowerSeries {
                family: family.clone(),
                true_f: true_f.clone(),
                envelope,
            })
        }
        Scenario::Deconv { noise, true_f, .. } => {
            if true_f.min_support() < 0 || noise.min_support() < 0 {
                return Err(DemixError::Config(
                    "deconv simulation needs nonnegative supports (observations are counts)".into(),
                ));
            }
            let u_cdf = DiscreteCdf::from_pairs(true_f.support().map(|(k, p)| (k as u64, p)));
            let eps_cdf = DiscreteCdf::from_pairs(noise.support().map(|(k, p)| (k as u64, p)));
            Ok(Plan::Deconv { u_cdf, eps_cdf })
        }
        Scenario::Uniform { true_f } => Ok(Plan::Uniform {
            theta_cdf: DiscreteCdf::from_pairs(true_f.support()),
        }),
    }
}

fn draw_power_series_x(family: &PowerSeriesFamily, theta: f64, rng: &mut Rng) -> Result<u64> {
    let mut p = family.z_tilde(theta)?;
    let mut cum = p;
    let u = rng.next_f64();
    let mut k = 0u64;
    while u >= cum && cum < 1.0 - PMF_TAIL {
        let ratio = family.coeff(k as usize + 1) / family.coeff(k as usize);
        p *= ratio * theta;
        cum += p;
        k += 1;
        if k > 10_000 {
            return Err(DemixError::NumericalRange {
                what: "mixand inverse-CDF tail".into(),
                k: k as usize,
            });
        }
    }
    Ok(k)
}

fn sample_with_plan(plan: &Plan, n: u64, stream: u64) -> Result<EmpiricalCounts> {
    let mut rng = Rng::new(stream);
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    match plan {
        Plan::PowerSeries {
            family,
            true_f,
            envelope,
        } => {
            for _ in 0..n {
                let theta = envelope.draw(true_f.as_ref(), &mut rng)?;
                let x = draw_power_series_x(family, theta, &mut rng)?;
                *counts.entry(x).or_insert(0) += 1;
            }
        }
        Plan::Deconv { u_cdf, eps_cdf } => {
            for _ in 0..n {
                let u = u_cdf.draw(&mut rng);
                let e = eps_cdf.draw(&mut rng);
                *counts.entry(u + e).or_insert(0) += 1;
            }
        }
        Plan::Uniform { theta_cdf } => {
            for _ in 0..n {
                let theta = theta_cdf.draw(&mut rng);
                let x = (rng.next_f64() * theta as f64) as u64;
                *counts.entry(x.min(theta - 1)).or_insert(0) += 1;
            }
        }
    }
    EmpiricalCounts::from_counts(counts)
}

/// Draws one dataset of size n for the scenario, fully determined by the
/// stream seed.
pub fn sample_dataset(scenario: &Scenario, n: u64, stream: u64) -> Result<EmpiricalCounts> {
    sample_with_plan(&build_plan(scenario)?, n, stream)
}

// -- loss ---------------------------------------------------------------------

/// Squared L²(ν) distance between an estimate's values and the truth. For
/// interval domains this is Gauss-Legendre quadrature of the squared
/// difference; for discrete domains an exact sum with the estimate extended
/// by zero and the truth's tail included.
pub fn l2_dist(est: &ScenarioEstimate, scenario: &Scenario) -> Result<f64> {
    match (est, scenario) {
        (
            ScenarioEstimate::PowerSeries(e),
            Scenario::PowerSeries {
                measure,
                true_f,
                halfline,
                ..
            },
        ) => {
            let rule = if *halfline {
                halfline_loss_rule(*measure)?
            } else {
                let MeasureSpec::LebesgueInterval { a, b } = measure else {
                    return Err(DemixError::InvalidMeasure(
                        "power-series loss needs an interval".into(),
                    ));
                };
                rule_on_interval(*a, *b, INTERVAL_NODES)
            };
            dist_sq_to_density(e, true_f.as_ref(), &rule)
        }
        (ScenarioEstimate::Deconv(map), Scenario::Deconv { true_f, .. }) => {
            let mut acc = 0.0;
            for (&k, &v) in map {
                let d = v - true_f.prob(k);
                acc += d * d;
            }
            for (k, p) in true_f.support() {
                if !map.contains_key(&k) {
                    acc += p * p;
                }
            }
            Ok(acc)
        }
        (ScenarioEstimate::Uniform(vals), Scenario::Uniform { true_f }) => {
            let m = vals.len() as u64;
            let mut acc = 0.0;
            for (i, &v) in vals.iter().enumerate() {
                let d = v - true_f.prob(i as u64 + 1);
                acc += d * d;
            }
            for (t, p) in true_f.support() {
                if t > m {
                    acc += p * p;
                }
            }
            Ok(acc)
        }
        _ => Err(DemixError::Config("estimate/scenario mismatch".into())),
    }
}

/// Quadrature over [0, ∞) for half-line losses: the truth lives on the
/// scenario interval and the estimate's tail decays exponentially.
fn halfline_loss_rule(measure: MeasureSpec) -> Result<Rule> {
    let MeasureSpec::LebesgueInterval { b, .. } = measure else {
        return Err(DemixError::InvalidMeasure(
            "half-line scenario still needs the sampling interval".into(),
        ));
    };
    let mut rule = rule_halfline_exp(1.0, 60);
    // the weight is part of the integrand here, so undo it
    for (w, x) in rule.weights.iter_mut().zip(&rule.nodes) {
        *w *= x.exp();
    }
    let cutoff = b + 60.0;
    let keep: Vec<(f64, f64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .filter(|(&x, _)| x <= cutoff)
        .map(|(&x, &w)| (x, w))
        .collect();
    Ok(Rule {
        nodes: keep.iter().map(|p| p.0).collect(),
        weights: keep.iter().map(|p| p.1).collect(),
    })
}

/// An estimate in whichever form the scenario produces.
pub enum ScenarioEstimate {
    PowerSeries(Box<crate::projector::Estimate>),
    Deconv(BTreeMap<i64, f64>),
    Uniform(Vec<f64>),
}

impl ScenarioEstimate {
    /// Flat coefficient vector for moment statistics across replicates.
    fn flat(&self) -> Vec<f64> {
        match self {
            ScenarioEstimate::PowerSeries(e) => e.coeffs().to_vec(),
            ScenarioEstimate::Deconv(m) => m.values().copied().collect(),
            ScenarioEstimate::Uniform(v) => v.clone(),
        }
    }
}

/// Estimation machinery prepared once per cell.
enum EstPlan {
    PowerSeries {
        phi: Box<PhiMatrix>,
        m: usize,
    },
    Deconv {
        noise: NoisePmf,
        k_range: (i64, i64),
        grid: FourierGrid,
    },
    Uniform {
        m: u64,
    },
}

impl EstPlan {
    fn run(&self, counts: &EmpiricalCounts) -> Result<ScenarioEstimate> {
        match self {
            EstPlan::PowerSeries { phi, m } => Ok(ScenarioEstimate::PowerSeries(Box::new(
                phi.estimate(counts, *m),
            ))),
            EstPlan::Deconv {
                noise,
                k_range,
                grid,
            } => Ok(ScenarioEstimate::Deconv(estimate_deconv(
                counts,
                noise,
                *k_range,
                Some(*grid),
            )?)),
            EstPlan::Uniform { m } => Ok(ScenarioEstimate::Uniform(estimate_uniform(counts, *m)?)),
        }
    }
}

fn build_est_plan(scenario: &Scenario, m: u64) -> Result<EstPlan> {
    match scenario {
        Scenario::PowerSeries {
            family,
            measure,
            halfline,
            ..
        } => {
            let phi = if *halfline {
                phi_matrix_halfline(m.max(1) as usize)?
            } else {
                phi_matrix(family, *measure, m.max(1) as usize)?
            };
            Ok(EstPlan::PowerSeries {
                phi: Box::new(phi),
                m: m as usize,
            })
        }
        Scenario::Deconv { noise, k_range, .. } => Ok(EstPlan::Deconv {
            noise: noise.clone(),
            k_range: *k_range,
            grid: FourierGrid::auto(
                (k_range.1 - k_range.0).unsigned_abs() as usize
                    + noise.max_support().unsigned_abs() as usize
                    + 64,
            ),
        }),
        Scenario::Uniform { .. } => Ok(EstPlan::Uniform { m }),
    }
}

// -- the Monte Carlo engine ----------------------------------------------------

/// Resolves the order rule at a sample size.
pub fn resolve_m(scenario: &Scenario, rule: MRule, n: u64) -> Result<u64> {
    match rule {
        MRule::Fixed(m) => Ok(m),
        MRule::Poisson { tau } => bandwidth::poisson_mn(n, tau),
        MRule::FiniteR { tau } => match scenario {
            Scenario::PowerSeries {
                family, measure, ..
            } => {
                let MeasureSpec::LebesgueInterval { a, b } = measure else {
                    return Err(DemixError::InvalidMeasure(
                        "finite-R rule needs an interval".into(),
                    ));
                };
                Ok(bandwidth::finite_r_rule(family, *a, *b, n, tau)?.m_n.max(1))
            }
            _ => Err(DemixError::Config(
                "finite-R rule applies to power-series scenarios".into(),
            )),
        },
        MRule::Halfline { lambda1, alpha } => {
            let u = crate::smoothness::SmoothnessSeq::power(alpha)?;
            bandwidth::halfline_mn(n, lambda1, &u)
        }
        MRule::Uniform { tau, beta } => uniformmix::bandwidth_uniform(n, tau, beta),
    }
}

/// Runs all replicates of one (n, m) cell. Replicates are distributed over
/// `workers` threads; results are merged and reduced in replicate order, so
/// the output is independent of the worker count.
pub fn run_cell(
    scenario: &Scenario,
    m: u64,
    n: u64,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<CellResult> {
    let plan = build_plan(scenario)?;
    let est_plan = build_est_plan(scenario, m)?;
    let workers = workers.max(1).min(replicates as usize);
    let chunk = replicates.div_ceil(workers as u64);
    let mut slots: Vec<Option<(f64, Vec<f64>)>> = vec![None; replicates as usize];
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for w in 0..workers as u64 {
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(replicates);
            if lo >= hi {
                break;
            }
            let plan = &plan;
            let est_plan = &est_plan;
            handles.push(scope.spawn(move || -> Result<Vec<(u64, f64, Vec<f64>)>> {
                let mut out = Vec::with_capacity((hi - lo) as usize);
                for i in lo..hi {
                    let counts = sample_with_plan(plan, n, stream_seed(seed, i))?;
                    let est = est_plan.run(&counts)?;
                    let loss = l2_dist(&est, scenario)?;
                    out.push((i, loss, est.flat()));
                }
                Ok(out)
            }));
        }
        for h in handles {
            let batch = h.join().expect("worker panicked")?;
            for (i, loss, coeffs) in batch {
                slots[i as usize] = Some((loss, coeffs));
            }
        }
        Ok(())
    })?;
    // index-ordered reductions
    let mut losses = Vec::with_capacity(replicates as usize);
    let dim = slots[0].as_ref().map_or(0, |s| s.1.len());
    let mut coeff_sum = vec![0.0; dim];
    let mut coeff_sq = vec![0.0; dim];
    for slot in &slots {
        let (loss, coeffs) = slot.as_ref().expect("missing replicate");
        losses.push(*loss);
        for (j, &c) in coeffs.iter().enumerate() {
            coeff_sum[j] += c;
            coeff_sq[j] += c * c;
        }
    }
    let r = replicates as f64;
    let empirical_mise = losses.iter().sum::<f64>() / r;
    let standard_error = if replicates > 1 {
        let var = losses
            .iter()
            .map(|l| (l - empirical_mise) * (l - empirical_mise))
            .sum::<f64>()
            / (r - 1.0);
        Some((var / r).sqrt())
    } else {
        None
    };
    let coeff_mean: Vec<f64> = coeff_sum.iter().map(|s| s / r).collect();
    let coeff_se: Vec<f64> = coeff_sq
        .iter()
        .zip(&coeff_mean)
        .map(|(&sq, &mean)| {
            if replicates > 1 {
                (((sq - r * mean * mean).max(0.0) / (r - 1.0)) / r).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(CellResult {
        n,
        m,
        losses,
        coeff_mean,
        coeff_se,
        empirical_mise,
        standard_error,
    })
}

/// Exact MISE columns for a scenario, where the oracle applies.
fn exact_columns(scenario: &Scenario, m: u64, n: u64) -> Result<Option<(f64, f64)>> {
    match scenario {
        Scenario::PowerSeries {
            family,
            measure,
            true_f,
            halfline,
        } => {
            if *halfline {
                return Ok(None);
            }
            let d = exact_mise(true_f.as_ref(), family, *measure, m as usize, n)?;
            Ok(Some((d.bias_sq, d.variance)))
        }
        Scenario::Deconv { noise, true_f, .. } => {
            let grid = FourierGrid::auto(64);
            let nm = exact_n_mise(true_f, noise, grid)?;
            Ok(Some((0.0, nm / n as f64)))
        }
        Scenario::Uniform { true_f } => {
            let total = exact_mise_uniform(true_f, m, n)?;
            let bias: f64 = true_f
                .support()
                .filter(|&(t, _)| t > m)
                .map(|(_, p)| p * p)
                .sum();
            Ok(Some((bias, total - bias)))
        }
    }
}

/// Runs the full configuration: one report row per n in the grid.
pub fn empirical_mise(config: &SimConfig, workers: usize) -> Result<MiseReport> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let m = resolve_m(&config.scenario, config.m_rule, n)?;
        let cell = run_cell(
            &config.scenario,
            m,
            n,
            config.replicates,
            config.seed,
            workers,
        )?;
        let exact = exact_columns(&config.scenario, m, n)?;
        rows.push(MiseRow {
            n,
            m,
            empirical_mise: cell.empirical_mise,
            standard_error: cell.standard_error,
            exact_bias_sq: exact.map(|e| e.0),
            exact_variance: exact.map(|e| e.1),
        });
    }
    Ok(MiseReport {
        rows,
        note: "logarithmic rate claims are not quantitatively verifiable at this scale; \
               this report checks monotone decay and bound inequalities only"
            .into(),
    })
}

/// A rate-normalized view of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: u64,
    pub m: u64,
    pub empirical_mise: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Fraction of consecutive decreases in the raw empirical MISE.
    pub decrease_fraction: f64,
}

/// Appends the column empirical_mise / rate(n) and the monotone-trend
/// statistic.
pub fn rate_table(report: &MiseReport, rate: impl Fn(u64) -> f64) -> Result<RateTable> {
    if report.rows.is_empty() {
        return Err(DemixError::Domain("empty report".into()));
    }
    let rows: Vec<RateRow> = report
        .rows
        .iter()
        .map(|r| RateRow {
            n: r.n,
            m: r.m,
            empirical_mise: r.empirical_mise,
            normalized: r.empirical_mise / rate(r.n),
        })
        .collect();
    let mut decreases = 0usize;
    for w in report.rows.windows(2) {
        if w[1].empirical_mise < w[0].empirical_mise {
            decreases += 1;
        }
    }
    let pairs = (report.rows.len() - 1).max(1);
    Ok(RateTable {
        rows,
        decrease_fraction: decreases as f64 / pairs as f64,
    })
}
