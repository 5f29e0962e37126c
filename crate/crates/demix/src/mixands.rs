//! Mixand families: power-series distributions, discrete uniforms and
//! translation noise, together with their integrals against the reference
//! measure.
//!
//! A power-series family has pmf `π_θ(k) = a_k θ^k Z̃(θ)` with `Z(t) = Σ a_k
//! t^k`, `Z̃ = 1/Z` and radius of convergence R. Poisson corresponds to
//! `a_k = 1/k!` (R = ∞), the negative binomial with shape s to
//! `a_k = C(s+k-1, k)` (R = 1).

use crate::error::{DemixError, Result};
use crate::orthopoly::MeasureSpec;
use crate::quadrature::{integrate_interval, INTERVAL_NODES};
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

/// Relative tail tolerance for series evaluation of Z in custom families.
const Z_TAIL_TOL: f64 = 1e-14;
/// Hard cap on series terms before flagging a runaway sum.
const SERIES_CAP: usize = 10_000;

type CoeffFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

#[derive(Clone)]
enum FamilyKind {
    Poisson,
    NegBinomial { shape: f64 },
    Custom { a: CoeffFn, radius: f64 },
}

/// A power-series mixand family.
///
/// Immutable after construction except for a monotone cache of custom
/// coefficient values; the cache fill is idempotent, so concurrent readers
/// always observe the same values.
pub struct PowerSeriesFamily {
    name: String,
    kind: FamilyKind,
    cache: Mutex<Vec<f64>>,
}

impl Clone for PowerSeriesFamily {
    fn clone(&self) -> Self {
        PowerSeriesFamily {
            name: self.name.clone(),
            kind: self.kind.clone(),
            cache: Mutex::new(self.cache.lock().unwrap().clone()),
        }
    }
}

impl std::fmt::Debug for PowerSeriesFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PowerSeriesFamily({})", self.name)
    }
}

impl PowerSeriesFamily {
    /// Poisson mixands: a_k = 1/k!, Z = exp, infinite radius.
    pub fn poisson() -> Self {
        PowerSeriesFamily {
            name: "poisson".into(),
            kind: FamilyKind::Poisson,
            cache: Mutex::new(Vec::new()),
        }
    }

    /// Negative binomial mixands with the given shape: a_k = C(shape+k-1, k),
    /// Z(t) = (1-t)^{-shape}, radius 1. Shape 1 is the geometric family.
    pub fn neg_binomial(shape: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(DemixError::Domain(format!(
                "negative binomial shape must be positive, got {shape}"
            )));
        }
        Ok(PowerSeriesFamily {
            name: format!("negbinomial({shape})"),
            kind: FamilyKind::NegBinomial { shape },
            cache: Mutex::new(Vec::new()),
        })
    }

    /// A custom family from a coefficient callable and a declared radius;
    /// requires a(0) = 1 and positive coefficients.
    pub fn custom(
        name: impl Into<String>,
        a: impl Fn(usize) -> f64 + Send + Sync + 'static,
        radius: f64,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(DemixError::Domain(format!(
                "radius must be positive, got {radius}"
            )));
        }
        let a0 = a(0);
        if (a0 - 1.0).abs() > 1e-12 {
            return Err(DemixError::Domain(format!(
                "power series requires a(0) = 1, got {a0}"
            )));
        }
        Ok(PowerSeriesFamily {
            name: name.into(),
            kind: FamilyKind::Custom {
                a: Arc::new(a),
                radius,
            },
            cache: Mutex::new(Vec::new()),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Radius of convergence of Z (may be infinite).
    pub fn radius(&self) -> f64 {
        match self.kind {
            FamilyKind::Poisson => f64::INFINITY,
            FamilyKind::NegBinomial { .. } => 1.0,
            FamilyKind::Custom { radius, .. } => radius,
        }
    }

    /// Coefficient a_k. Built-ins use closed forms; custom callables are
    /// cached monotonically up to the largest requested index.
    pub fn coeff(&self, k: usize) -> f64 {
        match &self.kind {
            FamilyKind::Poisson => {
                let mut v = 1.0;
                for j in 1..=k {
                    v /= j as f64;
                }
                v
            }
            FamilyKind::NegBinomial { shape } => {
                let mut v = 1.0;
                for j in 1..=k {
                    v *= (shape + j as f64 - 1.0) / j as f64;
                }
                v
            }
            FamilyKind::Custom { a, .. } => {
                let mut cache = self.cache.lock().unwrap();
                while cache.len() <= k {
                    let next = cache.len();
                    cache.push(a(next));
                }
                cache[k]
            }
        }
    }

    /// The normalizing series Z(t) = Σ a_k t^k for 0 <= t < R.
    pub fn z(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        match &self.kind {
            FamilyKind::Poisson => Ok(t.exp()),
            FamilyKind::NegBinomial { shape } => Ok((1.0 - t).powf(-shape)),
            FamilyKind::Custom { .. } => {
                if t == 0.0 {
                    return Ok(1.0);
                }
                let mut sum = 1.0;
                for k in 1..SERIES_CAP {
                    let term = self.coeff(k) * t.powi(k as i32);
                    sum += term;
                    if term < Z_TAIL_TOL * sum {
                        return Ok(sum);
                    }
                }
                Err(DemixError::NumericalRange {
                    what: format!("series Z({t}) did not converge"),
                    k: SERIES_CAP,
                })
            }
        }
    }

    /// Z̃(t) = 1/Z(t), the pmf normalizer.
    pub fn z_tilde(&self, t: f64) -> Result<f64> {
        Ok(1.0 / self.z(t)?)
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(0.0..self.radius()).contains(&t) {
            return Err(DemixError::Domain(format!(
                "t = {t} outside [0, {}) for family {}",
                self.radius(),
                self.name
            )));
        }
        Ok(())
    }
}

/// Mixand pmf value π_θ(k) = a_k θ^k Z̃(θ).
pub fn ps_pmf(family: &PowerSeriesFamily, theta: f64, k: usize) -> Result<f64> {
    let zt = family.z_tilde(theta)?;
    Ok(family.coeff(k) * theta.powi(k as i32) * zt)
}

/// The integral νΠ1_k = ∫_a^b a_k θ^k Z̃(θ) dθ.
pub fn nu_pi(family: &PowerSeriesFamily, measure: MeasureSpec, k: usize) -> Result<f64> {
    let (a, b) = interval_in_radius(family, measure)?;
    let ak = family.coeff(k);
    Ok(integrate_interval(a, b, INTERVAL_NODES, |t| {
        ak * t.powi(k as i32) * family.z_tilde(t).unwrap_or(0.0)
    }))
}

/// Validates that the measure is an interval [a, b] with 0 <= a < b < R.
pub(crate) fn interval_in_radius(
    family: &PowerSeriesFamily,
    measure: MeasureSpec,
) -> Result<(f64, f64)> {
    match measure {
        MeasureSpec::LebesgueInterval { a, b } => {
            if a < 0.0 {
                return Err(DemixError::Domain(format!(
                    "power-series parameter interval must start at a >= 0, got {a}"
                )));
            }
            if b >= family.radius() {
                return Err(DemixError::Domain(format!(
                    "interval end b = {b} must be below the radius {} of {}",
                    family.radius(),
                    family.name
                )));
            }
            Ok((a, b))
        }
        other => Err(DemixError::InvalidMeasure(format!(
            "power-series operations need a Lebesgue interval, got {other:?}"
        ))),
    }
}

/// Upper bound c₀ a_m ∫ t^m ν(dt) on the mass tail Σ_{k>=m} νΠ1_k, valid
/// under the submultiplicativity condition with constant c₀.
pub fn tail_bound(
    family: &PowerSeriesFamily,
    measure: MeasureSpec,
    m: usize,
    c0: f64,
) -> Result<f64> {
    let (a, b) = interval_in_radius(family, measure)?;
    if !(c0 > 0.0) {
        return Err(DemixError::Domain("c0 must be positive".into()));
    }
    let p = (m + 1) as f64;
    let moment = (b.powi(m as i32 + 1) - a.powi(m as i32 + 1)) / p;
    Ok(c0 * family.coeff(m) * moment)
}

/// Result of the submultiplicativity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A2Report {
    /// Whether a_{k+l} <= c0 a_k a_l held for all k + l <= kmax.
    pub holds: bool,
    /// Partial infimum of n^{-1}(log c0 + log a_n) over 1 <= n <= kmax;
    /// relates to the radius through R e^L = 1 when the true infimum is
    /// attained.
    pub l_partial: f64,
}

/// Checks a_{k+l} <= c0 a_k a_l for all k + l <= kmax and reports the partial
/// infimum L.
pub fn check_a2(family: &PowerSeriesFamily, c0: f64, kmax: usize) -> Result<A2Report> {
    if !(c0 > 0.0) {
        return Err(DemixError::Domain("c0 must be positive".into()));
    }
    if kmax < 2 {
        return Err(DemixError::Domain("kmax must be at least 2".into()));
    }
    let coeffs: Vec<f64> = (0..=kmax).map(|k| family.coeff(k)).collect();
    let mut holds = true;
    'outer: for k in 0..=kmax {
        for l in 0..=kmax - k {
            // tiny relative slack absorbs rounding in the coefficient values
            if coeffs[k + l] > c0 * coeffs[k] * coeffs[l] * (1.0 + 1e-12) {
                holds = false;
                break 'outer;
            }
        }
    }
    let l_partial = (1..=kmax)
        .map(|n| (c0.ln() + coeffs[n].ln()) / n as f64)
        .fold(f64::INFINITY, f64::min);
    Ok(A2Report { holds, l_partial })
}

/// Discrete uniform mixand pmf: π_θ(k) = 1/θ for 0 <= k <= θ-1, else 0.
pub fn uniform_pmf(theta: u64, k: u64) -> Result<f64> {
    if theta < 1 {
        return Err(DemixError::Domain(format!(
            "uniform mixand needs theta >= 1, got {theta}"
        )));
    }
    Ok(if k < theta { 1.0 / theta as f64 } else { 0.0 })
}

/// A fixed, known noise pmf on the integers with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePmf {
    offset: i64,
    probs: Vec<f64>,
}

impl NoisePmf {
    /// Builds from the support offset and the probabilities at offset,
    /// offset+1, ...; they must be nonnegative and sum to 1 within 1e-12.
    pub fn new(offset: i64, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(DemixError::Domain("noise pmf needs support".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(DemixError::Domain(format!(
                "noise probabilities must be nonnegative, got {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DemixError::Domain(format!(
                "noise probabilities must sum to 1, got {total}"
            )));
        }
        Ok(NoisePmf { offset, probs })
    }

    /// Point mass at the given integer.
    pub fn point_mass(at: i64) -> Self {
        NoisePmf {
            offset: at,
            probs: vec![1.0],
        }
    }

    pub fn prob(&self, k: i64) -> f64 {
        let idx = k - self.offset;
        if idx < 0 || idx as usize >= self.probs.len() {
            0.0
        } else {
            self.probs[idx as usize]
        }
    }

    pub fn support(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.offset + i as i64, p))
    }

    pub fn min_support(&self) -> i64 {
        self.offset
    }

    pub fn max_support(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }
}

/// Histogram of observed nonnegative integers: the sole data input to every
/// estimator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalCounts {
    counts: BTreeMap<u64, u64>,
    n: u64,
}

impl EmpiricalCounts {
    pub fn from_counts(counts: BTreeMap<u64, u64>) -> Result<Self> {
        let counts: BTreeMap<u64, u64> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let n = counts.values().sum();
        if n == 0 {
            return Err(DemixError::EmptyCounts);
        }
        Ok(EmpiricalCounts { counts, n })
    }

    pub fn from_observations(obs: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for x in obs {
            *counts.entry(x).or_insert(0) += 1;
        }
        Self::from_counts(counts)
    }

    /// Total number of observations (>= 1).
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Iterates (value, count) in increasing value order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&k, &c)| (k, c))
    }

    /// Empirical frequency of value k.
    pub fn freq(&self, k: u64) -> f64 {
        *self.counts.get(&k).unwrap_or(&0) as f64 / self.n as f64
    }

    pub fn max_value(&self) -> u64 {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }
}
