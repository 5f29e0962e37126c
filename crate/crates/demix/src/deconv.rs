//! Discrete deconvolution on the integers.
//!
//! Observations are X = U + ε with U ~ f (the target pmf) and ε ~ p (known
//! noise). On the Fourier side the model is a product, so the estimator
//! divides the empirical Fourier series by p* and inverts:
//!
//! ```text
//! f̂(k) = (1/2π) ∫ (P*_n(λ)/p*(λ)) e^{ikλ} dλ.
//! ```
//!
//! The estimator is well defined when K_p = ∫ 1/|p*|² dλ is finite; a noise
//! series that nearly vanishes on the grid is flagged as divergent and the
//! estimator refuses to run. Integrals over the circle use the trapezoid
//! rule on a uniform grid, which is exact for trigonometric polynomials once
//! the grid exceeds their span and spectrally accurate otherwise.

use crate::error::{DemixError, Result};
use crate::mixands::{EmpiricalCounts, NoisePmf};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Threshold on min |p*|² below which K_p is reported divergent.
const DIVERGENCE_THRESHOLD: f64 = 1e-12;

/// Default Fourier grid size.
pub const DEFAULT_GRID: usize = 8192;

/// Complex value as a pair of reals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

#[allow(clippy::should_implement_trait)] // plain value methods, no operator sugar
impl Cx {
    pub const ONE: Cx = Cx { re: 1.0, im: 0.0 };

    /// e^{iθ}.
    pub fn cis(theta: f64) -> Cx {
        Cx {
            re: theta.cos(),
            im: theta.sin(),
        }
    }

    pub fn mul(self, o: Cx) -> Cx {
        Cx {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    pub fn add(self, o: Cx) -> Cx {
        Cx {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }

    pub fn scale(self, s: f64) -> Cx {
        Cx {
            re: self.re * s,
            im: self.im * s,
        }
    }

    pub fn div(self, o: Cx) -> Cx {
        let d = o.abs_sq();
        Cx {
            re: (self.re * o.re + self.im * o.im) / d,
            im: (self.im * o.re - self.re * o.im) / d,
        }
    }

    pub fn abs_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Uniform grid of G points on (-π, π] for circle integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierGrid {
    g: usize,
}

impl FourierGrid {
    /// G must be even and at least 2.
    pub fn new(g: usize) -> Result<Self> {
        if g < 2 || !g.is_multiple_of(2) {
            return Err(DemixError::Domain(format!(
                "Fourier grid size must be even and >= 2, got {g}"
            )));
        }
        Ok(FourierGrid { g })
    }

    /// Default size, enlarged when the combined support span calls for more
    /// points (trapezoid sums are then exact for the trigonometric
    /// polynomials the identity cases produce).
    pub fn auto(span: usize) -> FourierGrid {
        let need = 2 * span + 2;
        let g = DEFAULT_GRID.max(need.next_multiple_of(2));
        FourierGrid { g }
    }

    pub fn len(&self) -> usize {
        self.g
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// λ_j for j < G, covering (-π, π].
    pub fn node(&self, j: usize) -> f64 {
        -PI + 2.0 * PI * (j + 1) as f64 / self.g as f64
    }
}

/// Finite Fourier series Σ_k c_k e^{-ikλ}.
pub fn fourier_series(coeffs: &BTreeMap<i64, f64>, lambda: f64) -> Cx {
    let mut acc = Cx::default();
    for (&k, &c) in coeffs {
        acc = acc.add(Cx::cis(-(k as f64) * lambda).scale(c));
    }
    acc
}

fn noise_series(p: &NoisePmf, lambda: f64) -> Cx {
    let mut acc = Cx::default();
    for (k, prob) in p.support() {
        acc = acc.add(Cx::cis(-(k as f64) * lambda).scale(prob));
    }
    acc
}

/// Result of the K_p quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpReport {
    /// Trapezoid value of ∫ 1/|p*|² dλ.
    pub value: f64,
    /// Set when |p*|² dips below the divergence threshold on the grid; the
    /// deconvolution estimator is then undefined.
    pub divergent: bool,
}

/// Quadrature of K_p = ∫_{-π}^{π} 1/|p*(λ)|² dλ with divergence detection.
pub fn kp(p: &NoisePmf, grid: FourierGrid) -> KpReport {
    let g = grid.len();
    let w = 2.0 * PI / g as f64;
    let mut value = 0.0;
    let mut divergent = false;
    for j in 0..g {
        let sq = noise_series(p, grid.node(j)).abs_sq();
        if sq < DIVERGENCE_THRESHOLD {
            divergent = true;
        }
        value += w / sq;
    }
    KpReport { value, divergent }
}

/// The deconvolution estimator f̂(k) for k in the inclusive range, by
/// trapezoid inversion of P*_n/p*.
pub fn estimate_deconv(
    counts: &EmpiricalCounts,
    p: &NoisePmf,
    k_range: (i64, i64),
    grid: Option<FourierGrid>,
) -> Result<BTreeMap<i64, f64>> {
    let (k_min, k_max) = k_range;
    if k_min > k_max {
        return Err(DemixError::Domain(format!(
            "empty k range [{k_min}, {k_max}]"
        )));
    }
    let span = (counts.max_value() as i64 - p.min_support())
        .max(p.max_support() - p.min_support())
        .max(k_max - k_min)
        .max(k_max.abs())
        .max(k_min.abs()) as usize;
    let grid = grid.unwrap_or_else(|| FourierGrid::auto(span));
    let report = kp(p, grid);
    if report.divergent {
        return Err(DemixError::DivergentKp);
    }
    let g = grid.len();
    let n = counts.n() as f64;
    // ratio_j = P*_n(λ_j) / p*(λ_j)
    let mut ratios = Vec::with_capacity(g);
    for j in 0..g {
        let lam = grid.node(j);
        let mut pn = Cx::default();
        for (x, c) in counts.iter() {
            pn = pn.add(Cx::cis(-(x as f64) * lam).scale(c as f64 / n));
        }
        ratios.push(pn.div(noise_series(p, lam)));
    }
    // accumulate (1/G) Σ_j ratio_j e^{ikλ_j} with incremental rotations
    let mut rot: Vec<Cx> = (0..g)
        .map(|j| Cx::cis(k_min as f64 * grid.node(j)))
        .collect();
    let steps: Vec<Cx> = (0..g).map(|j| Cx::cis(grid.node(j))).collect();
    let mut out = BTreeMap::new();
    for k in k_min..=k_max {
        let mut acc = 0.0;
        for j in 0..g {
            let prod = ratios[j].mul(rot[j]);
            acc += prod.re;
            rot[j] = rot[j].mul(steps[j]);
        }
        out.insert(k, acc / g as f64);
    }
    Ok(out)
}

/// Expected value of the estimator under mixing pmf f: the estimator
/// integrand with P*_n replaced by f*·p*. Returns f(k) up to quadrature
/// accuracy, which realizes the unbiasedness identity numerically.
pub fn expected_deconv(f: &NoisePmf, p: &NoisePmf, k: i64, grid: FourierGrid) -> f64 {
    let g = grid.len();
    let mut acc = 0.0;
    for j in 0..g {
        let lam = grid.node(j);
        let fstar = noise_series(f, lam);
        let pstar = noise_series(p, lam);
        let ratio = fstar.mul(pstar).div(pstar);
        acc += ratio.mul(Cx::cis(k as f64 * lam)).re;
    }
    acc / g as f64
}

/// Convolution f ⋆ p as an explicit map.
pub fn convolve(f: &NoisePmf, p: &NoisePmf) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    for (u, fu) in f.support() {
        for (e, pe) in p.support() {
            *out.entry(u + e).or_insert(0.0) += fu * pe;
        }
    }
    out
}

/// The two-point separation constants and the asymptotic minimax lower
/// constant c₀/(2c₁); `asymptotic_lower` is None when the pair is not
/// identifiable through the noise (c₁ = 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationReport {
    pub c0: f64,
    pub c1: f64,
    pub asymptotic_lower: Option<f64>,
}

/// c₀ = Σ (f₁-f₀)², c₁ = Σ |π_{f₁}-π_{f₀}| and their ratio c₀/(2c₁).
pub fn separation_constants(f0: &NoisePmf, f1: &NoisePmf, p: &NoisePmf) -> SeparationReport {
    let mut keys: Vec<i64> = f0.support().map(|(k, _)| k).collect();
    keys.extend(f1.support().map(|(k, _)| k));
    keys.sort_unstable();
    keys.dedup();
    let c0 = keys
        .iter()
        .map(|&k| (f1.prob(k) - f0.prob(k)).powi(2))
        .sum::<f64>();
    let pi0 = convolve(f0, p);
    let pi1 = convolve(f1, p);
    let mut conv_keys: Vec<i64> = pi0.keys().chain(pi1.keys()).copied().collect();
    conv_keys.sort_unstable();
    conv_keys.dedup();
    let c1 = conv_keys
        .iter()
        .map(|&k| (pi1.get(&k).unwrap_or(&0.0) - pi0.get(&k).unwrap_or(&0.0)).abs())
        .sum::<f64>();
    let asymptotic_lower = if c1 > 0.0 {
        Some(c0 / (2.0 * c1))
    } else {
        None
    };
    SeparationReport {
        c0,
        c1,
        asymptotic_lower,
    }
}

/// Fisher information of the two-point mixture path w ↦ (1-w) f₀ + w f₁
/// observed through the noise, with the 0/0 = 0 convention.
pub fn fisher_info(w: f64, f0: &NoisePmf, f1: &NoisePmf, p: &NoisePmf) -> Result<f64> {
    if !(0.0 < w && w < 1.0) {
        return Err(DemixError::Domain(format!(
            "mixture weight must be inside (0,1), got {w}"
        )));
    }
    let pi0 = convolve(f0, p);
    let pi1 = convolve(f1, p);
    let mut keys: Vec<i64> = pi0.keys().chain(pi1.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let mut acc = 0.0;
    for k in keys {
        let a = *pi0.get(&k).unwrap_or(&0.0);
        let b = *pi1.get(&k).unwrap_or(&0.0);
        let diff = b - a;
        let den = 0.5 * (a + b) + (w - 0.5) * diff;
        if diff == 0.0 && den == 0.0 {
            continue;
        }
        acc += diff * diff / den;
    }
    Ok(acc)
}

/// Exact n·MISE of the deconvolution estimator: K_p/(2π) - Σ_k f(k)². The
/// estimator is unbiased and E|P*_1|² = 1, so the one-observation second
/// moment is exactly K_p/(2π).
pub fn exact_n_mise(f: &NoisePmf, p: &NoisePmf, grid: FourierGrid) -> Result<f64> {
    let report = kp(p, grid);
    if report.divergent {
        return Err(DemixError::DivergentKp);
    }
    let norm_sq: f64 = f.support().map(|(_, v)| v * v).sum();
    Ok(report.value / (2.0 * PI) - norm_sq)
}
