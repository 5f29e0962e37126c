//! Bandwidth (estimator order) rules and the growth-condition checkers that
//! justify them.
//!
//! The order m_n must grow slowly enough that the variance envelope
//! λ₁^{2m} max_k b^k/a_k stays o(n), and fast enough that the mass of the
//! mixture beyond the order vanishes; the rules here package the schedules
//! under which both hold for finite-radius and Poisson families.

use crate::error::{DemixError, Result};
use crate::mixands::{interval_in_radius, nu_pi, tail_bound, PowerSeriesFamily};
use crate::orthopoly::MeasureSpec;
use crate::smoothness::SmoothnessSeq;

/// λ = γ + sqrt(γ² + 1) with γ = (2 + a + b)/(b - a): the coefficient growth
/// base of the interval [a, b].
pub fn lambda_ab(a: f64, b: f64) -> Result<f64> {
    if !(0.0 <= a && a < b) {
        return Err(DemixError::Domain(format!(
            "need 0 <= a < b, got [{a}, {b}]"
        )));
    }
    let gamma = (2.0 + a + b) / (b - a);
    Ok(gamma + (gamma * gamma + 1.0).sqrt())
}

/// Poisson order rule m_n = ⌈τ log n / log log n⌉ for 0 < τ <= 1; needs
/// n >= 16 so the double logarithm exceeds one.
pub fn poisson_mn(n: u64, tau: f64) -> Result<u64> {
    if n < 16 {
        return Err(DemixError::Domain(format!("rule needs n >= 16, got {n}")));
    }
    if !(0.0 < tau && tau <= 1.0) {
        return Err(DemixError::Domain(format!(
            "τ must lie in (0, 1], got {tau}"
        )));
    }
    let ln = (n as f64).ln();
    Ok((tau * ln / ln.ln()).ceil() as u64)
}

/// The finite-radius rule: m_n = ⌈τ log n⌉ with τ below
/// 1/log(λ²·max(1, bR)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteRadiusRule {
    pub tau_max: f64,
    pub tau_used: f64,
    pub m_n: u64,
}

/// Order rule for families with finite radius R; the default τ is half the
/// admissible maximum.
pub fn finite_r_rule(
    family: &PowerSeriesFamily,
    a: f64,
    b: f64,
    n: u64,
    tau: Option<f64>,
) -> Result<FiniteRadiusRule> {
    let radius = family.radius();
    if !radius.is_finite() {
        return Err(DemixError::Domain(format!(
            "family {} has infinite radius; use the Poisson rule",
            family.name()
        )));
    }
    if !(b < radius) {
        return Err(DemixError::Domain(format!(
            "need b < R, got b = {b}, R = {radius}"
        )));
    }
    let lam = lambda_ab(a, b)?;
    let tau_max = 1.0 / (lam * lam * (b * radius).max(1.0)).ln();
    let tau_used = match tau {
        Some(t) => {
            if !(0.0 < t && t < tau_max) {
                return Err(DemixError::Domain(format!(
                    "τ must lie in (0, {tau_max}), got {t}"
                )));
            }
            t
        }
        None => tau_max / 2.0,
    };
    if n < 1 {
        return Err(DemixError::Domain("need n >= 1".into()));
    }
    let m_n = (tau_used * (n as f64).ln()).ceil().max(0.0) as u64;
    Ok(FiniteRadiusRule {
        tau_max,
        tau_used,
        m_n,
    })
}

/// The variance-envelope quantity (1/n) λ₁^{2m} max_{0<=k<m} b^k/a_k for a
/// single (m, n); schedules are validated by checking its decay along n.
/// The caller is responsible for λ₁ exceeding the interval's λ.
pub fn cond45(family: &PowerSeriesFamily, b: f64, lambda1: f64, m: u64, n: u64) -> Result<f64> {
    if m < 1 {
        return Err(DemixError::Domain("m must be >= 1".into()));
    }
    if !(lambda1 > 1.0) {
        return Err(DemixError::Domain("λ₁ must exceed 1".into()));
    }
    if n < 1 {
        return Err(DemixError::Domain("need n >= 1".into()));
    }
    let mut max_ratio = 0.0f64;
    for k in 0..m {
        let ratio = b.powi(k as i32) / family.coeff(k as usize);
        max_ratio = max_ratio.max(ratio);
    }
    Ok(lambda1.powi(2 * m as i32) * max_ratio / n as f64)
}

/// The tail-mass quantity w_n = n Σ_{k >= m} νΠ1_k, along with the
/// submultiplicative bound c₀ a_m ∫ t^m dt reported alongside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WnReport {
    pub value: f64,
    pub lemma_bound: f64,
}

/// Directly sums the mass tail (relative cutoff 1e-12) and scales by n.
pub fn wn(
    family: &PowerSeriesFamily,
    measure: MeasureSpec,
    m: u64,
    n: u64,
    c0: f64,
) -> Result<WnReport> {
    interval_in_radius(family, measure)?;
    if n < 1 {
        return Err(DemixError::Domain("need n >= 1".into()));
    }
    let mut tail = 0.0;
    let mut k = m;
    loop {
        let term = nu_pi(family, measure, k as usize)?;
        tail += term;
        if term < 1e-12 * tail.max(1e-300) || k > m + 600 {
            break;
        }
        k += 1;
    }
    let lemma_bound = n as f64 * tail_bound(family, measure, m as usize, c0)?;
    Ok(WnReport {
        value: n as f64 * tail,
        lemma_bound,
    })
}

/// Half-line Poisson order rule: the largest m with λ₁^m / u_m <= 0.1 sqrt n
/// (0 when no positive m qualifies). λ₁ must exceed the computed growth root
/// 2 + sqrt 5.
pub fn halfline_mn(n: u64, lambda1: f64, u: &SmoothnessSeq) -> Result<u64> {
    let root = 2.0 + 5.0f64.sqrt();
    if !(lambda1 > root) {
        return Err(DemixError::Domain(format!(
            "λ₁ must exceed {root:.6}, got {lambda1}"
        )));
    }
    let budget = 0.1 * (n as f64).sqrt();
    let mut best = 0u64;
    let mut m = 0u64;
    loop {
        let value = lambda1.powi(m as i32) / u.value(m as usize);
        if value <= budget {
            best = m;
        } else if m > 0 {
            break;
        }
        m += 1;
        if m > 10_000 {
            break;
        }
    }
    Ok(best)
}
