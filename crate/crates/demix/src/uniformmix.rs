//! Estimation for mixtures of discrete uniform distributions.
//!
//! Here Θ = {1, 2, ...}, the mixands are uniform on {0, .., θ-1}, and the
//! natural basis Π h_k with h_k = (k+1)(1_k - 1_{k+1}) is already
//! orthonormal, so the projection estimator has the closed form
//!
//! ```text
//! f̂(k) = k (P_n 1_{k-1} - P_n 1_k)   for 1 <= k <= m.
//! ```
//!
//! The estimator is exactly unbiased for k <= m and may take negative
//! values; it is returned raw.

use crate::error::{DemixError, Result};
use crate::mixands::EmpiricalCounts;
use std::collections::BTreeMap;

/// A pmf on Θ = {1, 2, ...} with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPmf {
    probs: BTreeMap<u64, f64>,
}

impl ThetaPmf {
    /// Builds from (θ, probability) pairs; θ >= 1, nonnegative, summing to 1
    /// within 1e-12.
    pub fn new(entries: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut probs = BTreeMap::new();
        for (theta, p) in entries {
            if theta < 1 {
                return Err(DemixError::Domain("θ must be >= 1".into()));
            }
            if !(p >= 0.0) {
                return Err(DemixError::Domain(format!(
                    "probability at θ={theta} is negative"
                )));
            }
            if p > 0.0 {
                *probs.entry(theta).or_insert(0.0) += p;
            }
        }
        let total: f64 = probs.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DemixError::Domain(format!(
                "θ-pmf must sum to 1, got {total}"
            )));
        }
        Ok(ThetaPmf { probs })
    }

    pub fn point_mass(theta: u64) -> Result<Self> {
        Self::new([(theta, 1.0)])
    }

    pub fn prob(&self, theta: u64) -> f64 {
        *self.probs.get(&theta).unwrap_or(&0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs.iter().map(|(&t, &p)| (t, p))
    }

    pub fn max_support(&self) -> u64 {
        self.probs.keys().next_back().copied().unwrap_or(1)
    }

    /// Mixture pmf π_f(k) = Σ_{θ > k} f(θ)/θ.
    pub fn mixture_pmf(&self, k: u64) -> f64 {
        self.probs
            .iter()
            .filter(|(&t, _)| t > k)
            .map(|(&t, &p)| p / t as f64)
            .sum()
    }
}

/// The uniform-mixture projection estimator on {1..m}; entry k-1 holds
/// f̂(k) = k (n_{k-1} - n_k)/n.
pub fn estimate_uniform(counts: &EmpiricalCounts, m: u64) -> Result<Vec<f64>> {
    if m < 1 {
        return Err(DemixError::Domain("order m must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(m as usize);
    for k in 1..=m {
        let d = counts.freq(k - 1) - counts.freq(k);
        out.push(k as f64 * d);
    }
    Ok(out)
}

/// Total-mass identity of the estimator: Σ_{k<=m} f̂(k) telescopes to
/// P_n{0..m-1} - m P_n 1_m. Returns (lhs, rhs) for verification.
pub fn telescoped_mass(counts: &EmpiricalCounts, m: u64) -> Result<(f64, f64)> {
    let est = estimate_uniform(counts, m)?;
    let lhs: f64 = est.iter().sum();
    let below: f64 = (0..m).map(|k| counts.freq(k)).sum();
    let rhs = below - m as f64 * counts.freq(m);
    Ok((lhs, rhs))
}

/// MISE bound: Σ_{θ>m} f²(θ) + (1/n) Σ_{k<m} (k+1)² (π_f(k) + π_f(k+1)).
pub fn mise_bound_uniform(f: &ThetaPmf, m: u64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(DemixError::Domain("need n >= 1".into()));
    }
    let bias: f64 = f
        .support()
        .filter(|&(t, _)| t > m)
        .map(|(_, p)| p * p)
        .sum();
    let mut var = 0.0;
    for k in 0..m {
        var += ((k + 1) * (k + 1)) as f64 * (f.mixture_pmf(k) + f.mixture_pmf(k + 1));
    }
    Ok(bias + var / n as f64)
}

/// Exact MISE of the estimator: coordinatewise variances (the estimator is
/// unbiased on {1..m}) plus the squared tail of f beyond m.
pub fn exact_mise_uniform(f: &ThetaPmf, m: u64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(DemixError::Domain("need n >= 1".into()));
    }
    let bias: f64 = f
        .support()
        .filter(|&(t, _)| t > m)
        .map(|(_, p)| p * p)
        .sum();
    let mut var = 0.0;
    for k in 1..=m {
        let a = f.mixture_pmf(k - 1);
        let b = f.mixture_pmf(k);
        var += (k * k) as f64 * (a + b - (a - b) * (a - b));
    }
    Ok(bias + var / n as f64)
}

/// The three-point perturbation of the lower-bound construction, supported
/// on {m, m+1, m+2} with Σ g = 0, Σ g(θ)/θ = 0 and ‖g‖ = C·u_next/2; the
/// companion density puts |g| at those points and the rest of the mass at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureG {
    /// g values at θ = m, m+1, m+2.
    pub g: [f64; 3],
    pub m: u64,
    /// The companion density f₀.
    pub f0: ThetaPmf,
}

pub fn fixture_g(m: u64, c: f64, u_next: f64) -> Result<FixtureG> {
    if m < 2 {
        return Err(DemixError::Domain("fixture needs m >= 2".into()));
    }
    if !(c > 0.0) || !(u_next > 0.0) {
        return Err(DemixError::Domain("need positive C and u".into()));
    }
    // direction solving the two constraints, first coordinate positive
    let mf = m as f64;
    let dir = [mf, -2.0 * (mf + 1.0), mf + 2.0];
    let dir_norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let target = 0.5 * c * u_next;
    let g = [
        dir[0] / dir_norm * target,
        dir[1] / dir_norm * target,
        dir[2] / dir_norm * target,
    ];
    let abs_mass: f64 = g.iter().map(|v| v.abs()).sum();
    if abs_mass > 1.0 {
        return Err(DemixError::Infeasible(format!(
            "C·u too large: |g| mass {abs_mass} exceeds 1, no room at θ = 1"
        )));
    }
    let f0 = ThetaPmf::new([
        (1, 1.0 - abs_mass),
        (m, g[0].abs()),
        (m + 1, g[1].abs()),
        (m + 2, g[2].abs()),
    ])?;
    Ok(FixtureG { g, m, f0 })
}

/// Minimax lower bound for the class with constant C at perturbation order
/// m: (C·u_{m+1}/2)² (1 - (√5/2m) C·u_{m+1})^n, the value realized by the
/// three-point fixture.
pub fn minimax_lower_uniform(c: f64, u_next: f64, m: u64, n: u64) -> Result<f64> {
    if m < 2 || !(c > 0.0) || !(u_next > 0.0) {
        return Err(DemixError::Domain("need m >= 2 and positive C, u".into()));
    }
    let amp = 0.5 * c * u_next;
    let mass = (1.0 - 5.0f64.sqrt() / (2.0 * m as f64) * c * u_next).max(0.0);
    Ok(amp * amp * mass.powi(n.min(i32::MAX as u64) as i32))
}

/// Worst-case MISE upper bound of the order-m estimator over the class:
/// (C·u_m)² + 2m²/n.
pub fn mise_upper_uniform(c: f64, u_m: f64, m: u64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(DemixError::Domain("need n >= 1".into()));
    }
    Ok((c * u_m) * (c * u_m) + 2.0 * (m * m) as f64 / n as f64)
}

/// Order rule m_n = ⌈τ n^β⌉ with τ > 0 and 0 < β < 1/2.
pub fn bandwidth_uniform(n: u64, tau: f64, beta: f64) -> Result<u64> {
    if !(tau > 0.0) {
        return Err(DemixError::Domain("τ must be positive".into()));
    }
    if !(0.0 < beta && beta < 0.5) {
        return Err(DemixError::Domain(format!(
            "β must lie in (0, 1/2), got {beta}"
        )));
    }
    Ok((tau * (n as f64).powf(beta)).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn estimator_hand_example() {
        let counts = EmpiricalCounts::from_observations([0, 0, 1, 2]).unwrap();
        let est = estimate_uniform(&counts, 3).unwrap();
        assert!((est[0] - 0.25).abs() < 1e-15);
        assert!(est[1].abs() < 1e-15);
        assert!((est[2] - 0.75).abs() < 1e-15);
        assert!((est.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_mass_recovery_and_negativity() {
        let all_zero = EmpiricalCounts::from_observations([0, 0, 0]).unwrap();
        let est = estimate_uniform(&all_zero, 4).unwrap();
        assert_eq!(est[0], 1.0);
        assert!(est[1..].iter().all(|&v| v == 0.0));
        // all observations >= 1 push f̂(1) negative; returned raw
        let shifted = EmpiricalCounts::from_observations([1, 1, 2]).unwrap();
        let est = estimate_uniform(&shifted, 1).unwrap();
        assert!((est[0] + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unbiasedness_identity_random_pmfs() {
        // k (π_f(k-1) - π_f(k)) = f(k), checked over pseudo-random pmfs
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let mut ws: Vec<(u64, f64)> = (1..=8).map(|t| (t, next() + 1e-3)).collect();
            let total: f64 = ws.iter().map(|(_, w)| w).sum();
            for w in &mut ws {
                w.1 /= total;
            }
            let f = ThetaPmf::new(ws).unwrap();
            for k in 1..=8u64 {
                let lhs = k as f64 * (f.mixture_pmf(k - 1) - f.mixture_pmf(k));
                assert!((lhs - f.prob(k)).abs() < 1e-14, "k={k}");
            }
        }
    }

    #[test]
    fn mise_bound_point_mass() {
        let f = ThetaPmf::point_mass(1).unwrap();
        // π_f(0) = 1, π_f(1) = 0: bound is exactly 1/n
        let b = mise_bound_uniform(&f, 1, 50).unwrap();
        assert!((b - 1.0 / 50.0).abs() < 1e-15);
        // bound vanishes as n grows with full support coverage
        let f2 = ThetaPmf::new([(1, 0.5), (3, 0.5)]).unwrap();
        let b = mise_bound_uniform(&f2, 3, 1_000_000_000).unwrap();
        assert!(b < 1e-7);
    }

    #[test]
    fn exact_mise_below_bound() {
        let f = ThetaPmf::new([(1, 0.5), (3, 0.5)]).unwrap();
        for m in 1..=4 {
            for n in [10u64, 500] {
                let exact = exact_mise_uniform(&f, m, n).unwrap();
                let bound = mise_bound_uniform(&f, m, n).unwrap();
                assert!(exact <= bound + 1e-15, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn fixture_constraints() {
        let f = fixture_g(2, 1.0, 0.25).unwrap();
        // direction (1, -3, 2)/sqrt(14) scaled to C u /2
        let scale = 0.125 / 14.0f64.sqrt();
        assert!((f.g[0] - scale).abs() < 1e-15);
        assert!((f.g[1] + 3.0 * scale).abs() < 1e-15);
        assert!((f.g[2] - 2.0 * scale).abs() < 1e-15);
        for m in [2u64, 5, 9] {
            let fx = fixture_g(m, 1.2, 0.1).unwrap();
            let sum: f64 = fx.g.iter().sum();
            let weighted: f64 =
                fx.g.iter()
                    .enumerate()
                    .map(|(i, v)| v / (m + i as u64) as f64)
                    .sum();
            assert!(sum.abs() < 1e-12, "Σg = {sum:e}");
            assert!(weighted.abs() < 1e-12, "Σg/θ = {weighted:e}");
            let norm: f64 = fx.g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 0.5 * 1.2 * 0.1).abs() < 1e-14);
            // f0 ± g are valid pmfs
            let mut plus_mass = 0.0;
            for (i, &gv) in fx.g.iter().enumerate() {
                let theta = m + i as u64;
                assert!(fx.f0.prob(theta) + gv >= -1e-15);
                assert!(fx.f0.prob(theta) - gv >= -1e-15);
                plus_mass += fx.f0.prob(theta) + gv;
            }
            plus_mass += fx.f0.prob(1);
            assert!((plus_mass - 1.0).abs() < 1e-12);
        }
        // infeasible when the perturbation mass exceeds 1
        assert!(matches!(
            fixture_g(2, 40.0, 1.0),
            Err(DemixError::Infeasible(_))
        ));
        assert!(fixture_g(1, 1.0, 0.1).is_err());
    }

    #[test]
    fn lower_bound_below_upper_bound() {
        // at the fixture's order, with matched class parameters and large n,
        // the realized lower bound sits below the estimator's upper bound
        let c = 1.0;
        for m in [2u64, 4, 8] {
            let u_m = (1.0 + m as f64).ln().recip();
            let u_next = (2.0 + m as f64).ln().recip();
            for n in [10_000u64, 1_000_000] {
                let lo = minimax_lower_uniform(c, u_next, m, n).unwrap();
                let hi = mise_upper_uniform(c, u_m, m, n).unwrap();
                assert!(lo <= hi, "m={m} n={n}: {lo} > {hi}");
            }
        }
        assert!(minimax_lower_uniform(1.0, 0.1, 1, 10).is_err());
    }

    #[test]
    fn bandwidth_rule() {
        assert_eq!(bandwidth_uniform(10_000, 1.0, 0.4).unwrap(), 40);
        assert_eq!(bandwidth_uniform(1, 2.5, 0.3).unwrap(), 3); // ⌈τ⌉
        assert!(bandwidth_uniform(100, 1.0, 0.5).is_err());
        assert!(bandwidth_uniform(100, 0.0, 0.4).is_err());
    }

    proptest! {
        /// The telescoping mass identity holds on every dataset.
        #[test]
        fn telescoping_mass_identity(values in prop::collection::vec(0u64..12, 1..60), m in 1u64..10) {
            let counts = EmpiricalCounts::from_observations(values).unwrap();
            let (lhs, rhs) = telescoped_mass(&counts, m).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
