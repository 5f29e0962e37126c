//! The projection estimator for power-series mixtures.
//!
//! The estimator lives in V_m = span{Π1_k : k < m} = {p Z̃ : deg p < m}. An
//! orthonormal basis is φ_k = q_k Z̃ where (q_k) are orthonormal polynomials
//! for the weighted measure ν' with dν' = Z̃² dν; the estimator's coordinates
//! are Φ·(empirical frequencies) with Φ_{k,l} = Q^{ν'}_{k,l}/a_l.
//!
//! Two independent computational routes are provided: the Φ route above and
//! a Gram-matrix route solving R_m x = (empirical frequencies) in the Π1_k
//! coordinates. They coincide in exact arithmetic and their agreement in the
//! L²(ν) norm is a standing oracle for both.
//!
//! For the weighted measure ν' no closed recurrence exists in general (for
//! Poisson on [a, b] it is a truncated squared-exponential weight), so the
//! recurrence coefficients are derived numerically by the discretized
//! Stieltjes procedure over the ν-quadrature nodes reweighted by Z̃². A
//! built-in orthonormality self-check guards the construction.

use crate::dd::Dd;
use crate::error::{DemixError, Result};
use crate::mixands::{interval_in_radius, EmpiricalCounts, PowerSeriesFamily};
use crate::orthopoly::{
    eval_orthonormal, orthonormal_coeffs_with_ceiling, orthonormal_rows_dd, recurrence_for,
    recurrence_tables_dd, stieltjes_recurrence_dd, CoeffMatrix, MeasureSpec, RecurrenceCoeffs,
    M_MAX,
};
use crate::quadrature::{rule_on_interval, Rule, INTERVAL_NODES};

/// Gram solves are refused beyond this estimated condition number of the
/// equilibrated system. Refinement with double-double residuals converges
/// whenever the condition stays well below 1/eps of the working precision,
/// so the refusal threshold sits at 1e14; for Poisson on [0,1] the
/// equilibrated condition passes 1e12 already at order 10.
pub const COND_LIMIT: f64 = 1e14;

/// Parameter domain of an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Θ = [a, b] with ν Lebesgue.
    Interval { a: f64, b: f64 },
    /// Θ = [0, ∞) with ν Lebesgue (Poisson only).
    HalfLine,
}

/// Discretization of ν' = Z̃² ν over the ν-quadrature nodes, with weights in
/// double-double. Shared by the basis construction and the Gram matrix so
/// both computational routes refer to the same discrete measure.
fn nu_prime_discrete(family: &PowerSeriesFamily, a: f64, b: f64) -> Result<(Vec<f64>, Vec<Dd>)> {
    let base = rule_on_interval(a, b, INTERVAL_NODES);
    let mut weights = Vec::with_capacity(base.nodes.len());
    for (&x, &w) in base.nodes.iter().zip(&base.weights) {
        let zt = family.z_tilde(x)?;
        weights.push(Dd::from_f64(w).mul_f64(zt).mul_f64(zt));
    }
    Ok((base.nodes, weights))
}

/// Orthonormal basis handle: the family, the parameter domain and the
/// coefficients of the ν'-orthonormal polynomials.
///
/// Coefficient rows are carried in double-double internally: their norms
/// grow geometrically with the degree, and the absolute accuracy of every
/// estimator coordinate is the orthonormality defect of the stored rows
/// times those norms.
#[derive(Debug, Clone)]
pub struct Basis {
    family: PowerSeriesFamily,
    domain: Domain,
    q: CoeffMatrix,
    q_dd: Vec<Vec<Dd>>,
    // recurrence form for stable pointwise evaluation
    rec: RecurrenceCoeffs,
}

impl Basis {
    /// Basis of V_m for a power-series family on an interval measure.
    pub fn power_series(
        family: &PowerSeriesFamily,
        measure: MeasureSpec,
        m: usize,
    ) -> Result<Self> {
        let (a, b) = interval_in_radius(family, measure)?;
        let rows = m.max(1);
        if rows > M_MAX {
            return Err(DemixError::PrecisionCeiling {
                m: rows,
                m_max: M_MAX,
            });
        }
        let (nodes, weights) = nu_prime_discrete(family, a, b)?;
        let (alpha, beta) = stieltjes_recurrence_dd(&nodes, &weights, rows + 1)?;
        let q_dd = orthonormal_rows_dd(&alpha, &beta, rows, M_MAX)?;
        check_discrete_orthonormality(&q_dd, &nodes, &weights)?;
        let rec = RecurrenceCoeffs::from_tables(
            alpha.iter().map(|v| v.to_f64()).collect(),
            beta.iter().map(|v| v.to_f64()).collect(),
        )?;
        Ok(Basis {
            family: family.clone(),
            domain: Domain::Interval { a, b },
            q: CoeffMatrix::from_dd_rows(&q_dd),
            q_dd,
            rec,
        })
    }

    /// Basis of V_m for Poisson mixands on the half line; ν' is the
    /// squared-exponential weight with its closed recurrence.
    pub fn poisson_halfline(m: usize) -> Result<Self> {
        let rows = m.max(1);
        let rec = recurrence_for(MeasureSpec::exp_weight(2)?)?;
        let (alpha, beta) = recurrence_tables_dd(&rec, rows + 1);
        let q_dd = orthonormal_rows_dd(&alpha, &beta, rows, M_MAX)?;
        let rec_tbl = RecurrenceCoeffs::from_tables(
            alpha.iter().map(|v| v.to_f64()).collect(),
            beta.iter().map(|v| v.to_f64()).collect(),
        )?;
        Ok(Basis {
            family: PowerSeriesFamily::poisson(),
            domain: Domain::HalfLine,
            q: CoeffMatrix::from_dd_rows(&q_dd),
            q_dd,
            rec: rec_tbl,
        })
    }

    pub fn m(&self) -> usize {
        self.q.m()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn family(&self) -> &PowerSeriesFamily {
        &self.family
    }

    /// Monomial coefficient view of the ν'-orthonormal polynomials.
    pub fn coeff_matrix(&self) -> &CoeffMatrix {
        &self.q
    }

    /// Evaluates the basis element φ_k(θ) = q_k(θ) Z̃(θ).
    pub fn phi_eval(&self, k: usize, theta: f64) -> Result<f64> {
        if k >= self.m() {
            return Err(DemixError::Domain(format!(
                "basis index {k} out of range (m = {})",
                self.m()
            )));
        }
        let mut vals = vec![0.0; k + 1];
        eval_orthonormal(&self.rec, theta, &mut vals);
        Ok(vals[k] * self.family.z_tilde(theta)?)
    }

    /// Values q_0(θ)..q_{m-1}(θ) in one recurrence sweep.
    pub(crate) fn eval_q_all(&self, theta: f64, out: &mut [f64]) {
        eval_orthonormal(&self.rec, theta, out);
    }

    fn compatible(&self, other: &Basis) -> bool {
        self.family.name() == other.family.name() && self.domain == other.domain
    }
}

fn check_discrete_orthonormality(q: &[Vec<Dd>], nodes: &[f64], weights: &[Dd]) -> Result<()> {
    let m = q.len();
    // dd Horner at the quadrature nodes
    let vals: Vec<Vec<Dd>> = (0..m)
        .map(|k| {
            nodes
                .iter()
                .map(|&x| {
                    let mut acc = Dd::ZERO;
                    for c in q[k].iter().rev() {
                        acc = acc.mul_f64(x).add(*c);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    for k in 0..m {
        for l in 0..=k {
            let mut ip = Dd::ZERO;
            for (i, &w) in weights.iter().enumerate() {
                ip = ip.add(w.mul(vals[k][i]).mul(vals[l][i]));
            }
            let target = if k == l { 1.0 } else { 0.0 };
            let defect = (ip.to_f64() - target).abs();
            if defect > 1e-8 {
                return Err(DemixError::NumericalRange {
                    what: format!("weighted-basis orthonormality defect {defect:.2e}"),
                    k,
                });
            }
        }
    }
    Ok(())
}

/// Lower-triangular matrix Φ with Φ_{k,l} = Q^{ν'}_{k,l} / a_l: maps
/// empirical frequencies to coordinates in the orthonormal basis.
#[derive(Debug, Clone)]
pub struct PhiMatrix {
    basis: Basis,
    rows_dd: Vec<Vec<Dd>>,
    rows: Vec<Vec<f64>>,
}

impl PhiMatrix {
    fn from_basis(basis: Basis) -> Self {
        let m = basis.m();
        let mut rows_dd = Vec::with_capacity(m);
        for k in 0..m {
            let row: Vec<Dd> = (0..=k)
                .map(|l| basis.q_dd[k][l].div(Dd::from_f64(basis.family.coeff(l))))
                .collect();
            rows_dd.push(row);
        }
        let rows = rows_dd
            .iter()
            .map(|r| r.iter().map(|c| c.to_f64()).collect())
            .collect();
        PhiMatrix {
            basis,
            rows_dd,
            rows,
        }
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Φ_{k,l}, zero for l > k.
    pub fn entry(&self, k: usize, l: usize) -> f64 {
        if l > k {
            0.0
        } else {
            self.rows[k][l]
        }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// Σ_{k<m} Φ²_{k,l} for a column l (zero for l >= m).
    pub fn col_sq_sum(&self, l: usize) -> f64 {
        (l..self.m())
            .map(|k| self.rows[k][l] * self.rows[k][l])
            .sum()
    }

    /// Σ_{l<=k<m} Φ²_{k,l}, the one-observation variance envelope.
    pub fn total_sq(&self) -> f64 {
        (0..self.m()).map(|l| self.col_sq_sum(l)).sum()
    }

    /// Projection-estimator coordinates from a histogram: c_k = Σ_l Φ_{k,l}
    /// (n_l/n). Observations at or beyond m contribute nothing (the Φ row
    /// support ends at the row index).
    pub fn estimate(&self, counts: &EmpiricalCounts, m: usize) -> Estimate {
        let m = m.min(self.m());
        let mut acc = vec![Dd::ZERO; m];
        for (x, c) in counts.iter() {
            let l = x as usize;
            if l >= m {
                continue;
            }
            let p = c as f64 / counts.n() as f64;
            for k in l..m {
                acc[k] = acc[k].add(self.rows_dd[k][l].mul_f64(p));
            }
        }
        Estimate {
            coeffs: acc.iter().map(|c| c.to_f64()).collect(),
            basis: self.basis.clone(),
        }
    }
}

/// Builds Φ for a power-series family on an interval measure.
pub fn phi_matrix(family: &PowerSeriesFamily, measure: MeasureSpec, m: usize) -> Result<PhiMatrix> {
    Ok(PhiMatrix::from_basis(Basis::power_series(
        family, measure, m,
    )?))
}

/// Builds Φ for the half-line Poisson estimator.
pub fn phi_matrix_halfline(m: usize) -> Result<PhiMatrix> {
    Ok(PhiMatrix::from_basis(Basis::poisson_halfline(m)?))
}

/// A mixing-density estimate as coordinates in the orthonormal basis (φ_k).
#[derive(Debug, Clone)]
pub struct Estimate {
    coeffs: Vec<f64>,
    basis: Basis,
}

impl Estimate {
    /// Assembles an estimate from explicit basis coordinates.
    pub fn from_coeffs(coeffs: Vec<f64>, basis: Basis) -> Estimate {
        Estimate { coeffs, basis }
    }

    /// Basis coordinates c_0..c_{m-1}.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// Pointwise value Σ_k c_k φ_k(θ). The estimate may be negative; it is
    /// returned raw.
    pub fn eval(&self, theta: f64) -> Result<f64> {
        let zt = self.basis.family.z_tilde(theta)?;
        let mut vals = vec![0.0; self.coeffs.len()];
        self.basis.eval_q_all(theta, &mut vals);
        let acc: f64 = self.coeffs.iter().zip(&vals).map(|(c, q)| c * q).sum();
        Ok(acc * zt)
    }

    /// L²(ν) norm via Parseval in the orthonormal basis.
    pub fn h_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// L²(ν) distance to another estimate over the same basis family and
    /// domain; coefficient vectors of different orders are nested.
    pub fn h_dist(&self, other: &Estimate) -> Result<f64> {
        if !self.basis.compatible(&other.basis) {
            return Err(DemixError::Domain(
                "estimates live in different bases".into(),
            ));
        }
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut acc = 0.0;
        for k in 0..n {
            let a = self.coeffs.get(k).copied().unwrap_or(0.0);
            let b = other.coeffs.get(k).copied().unwrap_or(0.0);
            acc += (a - b) * (a - b);
        }
        Ok(acc.sqrt())
    }

    /// Values on a θ grid.
    pub fn eval_grid(&self, grid: &[f64]) -> Result<Vec<f64>> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }

    /// Optional post-processing outside the estimator's own analysis: clips
    /// negative values at 0 and renormalizes so the trapezoid integral over
    /// the grid is 1. Returns the processed grid values.
    pub fn clip_renormalized(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let mut vals = self.eval_grid(grid)?;
        for v in &mut vals {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let mut mass = 0.0;
        for i in 1..grid.len() {
            mass += 0.5 * (vals[i] + vals[i - 1]) * (grid[i] - grid[i - 1]);
        }
        if mass > 0.0 {
            for v in &mut vals {
                *v /= mass;
            }
        }
        Ok(vals)
    }
}

/// The projection estimator of order m from a histogram.
pub fn estimate_projection(
    counts: &EmpiricalCounts,
    family: &PowerSeriesFamily,
    measure: MeasureSpec,
    m: usize,
) -> Result<Estimate> {
    let phi = phi_matrix(family, measure, m.max(1))?;
    let mut est = phi.estimate(counts, m);
    est.coeffs.truncate(m);
    Ok(est)
}

/// The half-line Poisson projection estimator of order m.
pub fn estimate_halfline(counts: &EmpiricalCounts, m: usize) -> Result<Estimate> {
    let phi = phi_matrix_halfline(m.max(1))?;
    let mut est = phi.estimate(counts, m);
    est.coeffs.truncate(m);
    Ok(est)
}

/// The companion estimator in Ṽ_m = {p Z : deg p < m}, expressed through the
/// ν-orthonormal polynomials q^ν (which do not depend on the coefficient
/// sequence). Its projection onto V_m recovers the projection estimator.
#[derive(Debug, Clone)]
pub struct CheckEstimate {
    /// Coordinates in the q^ν basis of Z̃ f̌.
    coeffs: Vec<f64>,
    family: PowerSeriesFamily,
    measure: MeasureSpec,
    // recurrence form of ν for stable q^ν evaluation
    nu_rec: RecurrenceCoeffs,
}

impl CheckEstimate {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn measure(&self) -> MeasureSpec {
        self.measure
    }

    /// Pointwise value f̌(θ) = Z(θ) Σ_k d_k q^ν_k(θ).
    pub fn eval(&self, theta: f64) -> Result<f64> {
        let z = self.family.z(theta)?;
        let mut vals = vec![0.0; self.coeffs.len()];
        eval_orthonormal(&self.nu_rec, theta, &mut vals);
        let acc: f64 = self.coeffs.iter().zip(&vals).map(|(d, q)| d * q).sum();
        Ok(acc * z)
    }

    /// Coordinates of Proj_{V_m} f̌ in the given basis, by quadrature of
    /// (f̌, φ_k).
    pub fn project_to(&self, basis: &Basis) -> Result<Vec<f64>> {
        let Domain::Interval { a, b } = basis.domain else {
            return Err(DemixError::Domain(
                "check estimator projection needs an interval domain".into(),
            ));
        };
        let rule = rule_on_interval(a, b, INTERVAL_NODES);
        let mut coeffs = vec![0.0; basis.m()];
        let mut qvals = vec![0.0; basis.m()];
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let fx = self.eval(x)?;
            let zt = basis.family.z_tilde(x)?;
            basis.eval_q_all(x, &mut qvals);
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c += w * fx * qvals[k] * zt;
            }
        }
        Ok(coeffs)
    }
}

/// The f̌ estimator: element of Ṽ_m matching the empirical expectations.
/// The per-observation weight is Q^ν_{k,x}/a_x (denominator indexed by the
/// observation).
pub fn estimate_check(
    counts: &EmpiricalCounts,
    family: &PowerSeriesFamily,
    measure: MeasureSpec,
    m: usize,
) -> Result<CheckEstimate> {
    interval_in_radius(family, measure)?;
    let rows = m.max(1);
    let rec = recurrence_for(measure)?;
    let qnu = orthonormal_coeffs_with_ceiling(&rec, rows, M_MAX)?;
    let mut coeffs = vec![0.0; m];
    for (x, c) in counts.iter() {
        let l = x as usize;
        if l >= m {
            continue;
        }
        let p = c as f64 / counts.n() as f64;
        let w = p / family.coeff(l);
        for (k, ck) in coeffs.iter_mut().enumerate().skip(l) {
            *ck += qnu.entry(k, l) * w;
        }
    }
    Ok(CheckEstimate {
        coeffs,
        family: family.clone(),
        measure,
        nu_rec: rec,
    })
}

/// The Gram matrix R_m with R_{k,l} = (Π1_k, Π1_l)_H, with its equilibrated
/// Cholesky factorization and a condition estimate. Entries are kept in
/// double-double for the refinement residuals.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries_dd: Vec<Vec<Dd>>,
    entries: Vec<Vec<f64>>,
    scale: Vec<f64>,
    chol: Vec<Vec<f64>>,
    cond: f64,
}

impl GramMatrix {
    pub fn m(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, k: usize, l: usize) -> f64 {
        self.entries[k][l]
    }

    /// 1-norm condition estimate of the equilibrated system.
    pub fn cond_estimate(&self) -> f64 {
        self.cond
    }

    fn check_cond(&self) -> Result<()> {
        if self.cond > COND_LIMIT {
            return Err(DemixError::IllConditioned { cond: self.cond });
        }
        Ok(())
    }

    /// Solves R x = rhs by the equilibrated Cholesky factor plus iterative
    /// refinement with double-double residuals. The refinement carries the
    /// iterate in double-double, so the returned coordinates are accurate to
    /// far below f64 roundoff of the true solution. This matters because the
    /// Π1-basis coordinates are large with massive cancellation and the
    /// estimates built from them are compared at absolute tolerances.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_dd(rhs)?.iter().map(|x| x.to_f64()).collect())
    }

    pub(crate) fn solve_dd(&self, rhs: &[f64]) -> Result<Vec<Dd>> {
        self.check_cond()?;
        let m = self.m();
        if rhs.len() != m {
            return Err(DemixError::Domain(format!(
                "rhs length {} != m = {m}",
                rhs.len()
            )));
        }
        let mut x: Vec<Dd> = self
            .solve_scaled(rhs)
            .into_iter()
            .map(Dd::from_f64)
            .collect();
        for _ in 0..4 {
            // residual r = rhs - R x accumulated in double-double
            let mut resid = vec![0.0; m];
            let mut worst = 0.0f64;
            for i in 0..m {
                let mut acc = Dd::from_f64(rhs[i]);
                for j in 0..m {
                    acc = acc.sub(self.entries_dd[i][j].mul(x[j]));
                }
                resid[i] = acc.to_f64();
                worst = worst.max(resid[i].abs());
            }
            if worst == 0.0 {
                break;
            }
            let corr = self.solve_scaled(&resid);
            for j in 0..m {
                x[j] = x[j].add(Dd::from_f64(corr[j]));
            }
        }
        Ok(x)
    }

    fn solve_scaled(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.m();
        // scale rhs, forward/back substitution, unscale
        let mut y: Vec<f64> = (0..m).map(|i| rhs[i] * self.scale[i]).collect();
        for i in 0..m {
            let mut s = y[i];
            for j in 0..i {
                s -= self.chol[i][j] * y[j];
            }
            y[i] = s / self.chol[i][i];
        }
        for i in (0..m).rev() {
            let mut s = y[i];
            for j in i + 1..m {
                s -= self.chol[j][i] * y[j];
            }
            y[i] = s / self.chol[i][i];
        }
        (0..m).map(|i| y[i] * self.scale[i]).collect()
    }

    /// Diagonal of R_m^{-1}.
    pub fn inverse_diagonal(&self) -> Result<Vec<f64>> {
        let inv = self.inverse()?;
        Ok((0..self.m()).map(|i| inv[i][i]).collect())
    }

    /// Full R_m^{-1} via refined solves on unit vectors (small m only; used
    /// by bound evaluators and tests).
    pub fn inverse(&self) -> Result<Vec<Vec<f64>>> {
        self.check_cond()?;
        let m = self.m();
        let mut out = vec![vec![0.0; m]; m];
        let mut e = vec![0.0; m];
        for j in 0..m {
            e[j] = 1.0;
            let col = self.solve(&e)?;
            e[j] = 0.0;
            for i in 0..m {
                out[i][j] = col[i];
            }
        }
        Ok(out)
    }

    fn inverse_scaled(&self) -> Vec<Vec<f64>> {
        let m = self.m();
        // L^{-1} by forward substitution, then R̃^{-1} = L^{-T} L^{-1}
        let mut linv = vec![vec![0.0; m]; m];
        for k in 0..m {
            linv[k][k] = 1.0 / self.chol[k][k];
            for i in k + 1..m {
                let mut s = 0.0;
                for j in k..i {
                    s += self.chol[i][j] * linv[j][k];
                }
                linv[i][k] = -s / self.chol[i][i];
            }
        }
        let mut inv = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let mut s = 0.0;
                for k in i..m {
                    s += linv[k][i] * linv[k][j];
                }
                inv[i][j] = s;
                inv[j][i] = s;
            }
        }
        inv
    }
}

/// Builds the Gram matrix by quadrature of the mixand products and
/// factorizes it. Failure to factorize reports the conditioning estimate.
pub fn gram_matrix(
    family: &PowerSeriesFamily,
    measure: MeasureSpec,
    m: usize,
) -> Result<GramMatrix> {
    let (a, b) = interval_in_radius(family, measure)?;
    if m == 0 {
        return Err(DemixError::Domain("gram matrix needs m >= 1".into()));
    }
    if m > M_MAX {
        return Err(DemixError::PrecisionCeiling { m, m_max: M_MAX });
    }
    // R_{k,l} = a_k a_l ∫ t^{k+l} Z̃²(t) dt: one pass over shared moments
    let (nodes, weighted) = nu_prime_discrete(family, a, b)?;
    let mut moments = vec![Dd::ZERO; 2 * m - 1];
    for (i, &x) in nodes.iter().enumerate() {
        let mut p = weighted[i];
        for mom in moments.iter_mut() {
            *mom = mom.add(p);
            p = p.mul_f64(x);
        }
    }
    let coeffs: Vec<f64> = (0..m).map(|k| family.coeff(k)).collect();
    let mut entries_dd = vec![vec![Dd::ZERO; m]; m];
    let mut entries = vec![vec![0.0; m]; m];
    for k in 0..m {
        for l in 0..m {
            entries_dd[k][l] = moments[k + l].mul_f64(coeffs[k]).mul_f64(coeffs[l]);
            entries[k][l] = entries_dd[k][l].to_f64();
        }
    }
    // equilibrate to unit diagonal before factorizing
    let scale: Vec<f64> = (0..m).map(|k| 1.0 / entries[k][k].sqrt()).collect();
    if scale.iter().any(|s| !s.is_finite()) {
        return Err(DemixError::IllConditioned {
            cond: f64::INFINITY,
        });
    }
    let mut chol = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = entries[i][j] * scale[i] * scale[j];
            for p in 0..j {
                s -= chol[i][p] * chol[j][p];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(DemixError::IllConditioned {
                        cond: f64::INFINITY,
                    });
                }
                chol[i][i] = s.sqrt();
            } else {
                chol[i][j] = s / chol[j][j];
            }
        }
    }
    let mut g = GramMatrix {
        entries_dd,
        entries,
        scale,
        chol,
        cond: 1.0,
    };
    // 1-norm condition number of the equilibrated matrix
    let inv = g.inverse_scaled();
    let norm1 = |mat: &Vec<Vec<f64>>| -> f64 {
        (0..m)
            .map(|j| (0..m).map(|i| mat[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let scaled: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| g.entries[i][j] * g.scale[i] * g.scale[j])
                .collect()
        })
        .collect();
    g.cond = norm1(&scaled) * norm1(&inv);
    Ok(g)
}

/// The Gram-route estimator: solve R_m x = (n_k/n)_{k<m} and express the
/// result in the orthonormal basis. Serves as the independent oracle for
/// [`estimate_projection`].
pub fn estimate_gram(
    counts: &EmpiricalCounts,
    family: &PowerSeriesFamily,
    measure: MeasureSpec,
    m: usize,
) -> Result<Estimate> {
    let basis = Basis::power_series(family, measure, m)?;
    if m == 0 {
        return Ok(Estimate {
            coeffs: vec![],
            basis,
        });
    }
    let gram = gram_matrix(family, measure, m)?;
    let rhs: Vec<f64> = (0..m).map(|k| counts.freq(k as u64)).collect();
    let x = gram.solve_dd(&rhs)?;
    // convert Π1-coordinates to φ-coordinates: solve Q^T g = (a_l x_l).
    // The Π1 coordinates are huge and nearly cancelling, so the back
    // substitution stays in double-double as well.
    let mut g = vec![Dd::ZERO; m];
    for j in (0..m).rev() {
        let mut s = x[j].mul_f64(family.coeff(j));
        for k in j + 1..m {
            s = s.sub(g[k].mul(basis.q_dd[k][j]));
        }
        g[j] = s.div(basis.q_dd[j][j]);
    }
    Ok(Estimate {
        coeffs: g.iter().map(|c| c.to_f64()).collect(),
        basis,
    })
}

/// Projection of a density onto V_m: basis coefficients and the residual
/// norm sqrt(‖f‖² - Σ c_k²) clamped at zero.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub coeffs: Vec<f64>,
    pub residual_norm: f64,
}

/// Computes (f, φ_k)_H by quadrature for k < m together with the residual.
pub fn project_density(
    f: &dyn Fn(f64) -> f64,
    family: &PowerSeriesFamily,
    measure: MeasureSpec,
    m: usize,
) -> Result<ProjectionResult> {
    let (a, b) = interval_in_radius(family, measure)?;
    let basis = Basis::power_series(family, measure, m)?;
    let rule = rule_on_interval(a, b, INTERVAL_NODES);
    let mut coeffs = vec![0.0; m];
    let mut qvals = vec![0.0; m];
    let mut norm_sq = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let fx = f(x);
        norm_sq += w * fx * fx;
        let zt = family.z_tilde(x)?;
        basis.eval_q_all(x, &mut qvals);
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c += w * fx * qvals[k] * zt;
        }
    }
    let proj_sq: f64 = coeffs.iter().map(|c| c * c).sum();
    let residual_norm = (norm_sq - proj_sq).max(0.0).sqrt();
    Ok(ProjectionResult {
        coeffs,
        residual_norm,
    })
}

/// π_f(x) = (f, Π1_x)_H: the mixture pmf at x induced by mixing density f.
pub fn pi_f(
    f: &dyn Fn(f64) -> f64,
    family: &PowerSeriesFamily,
    measure: MeasureSpec,
    x: usize,
) -> Result<f64> {
    let (a, b) = interval_in_radius(family, measure)?;
    let ax = family.coeff(x);
    let rule = rule_on_interval(a, b, INTERVAL_NODES);
    let mut acc = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * f(t) * ax * t.powi(x as i32) * family.z_tilde(t)?;
    }
    Ok(acc)
}

/// Exact MISE decomposition of the order-m projection estimator at sample
/// size n: squared bias, variance and their total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiseDecomposition {
    pub bias_sq: f64,
    pub variance: f64,
    pub total: f64,
}

/// Exact bias², variance and MISE of the projection estimator for a known
/// mixing density f. The variance is
/// (1/n)(Σ_{x<m} π_f(x) Σ_k Φ²_{k,x} - ‖Proj_{V_m} f‖²); only x < m enter
/// because the Φ columns vanish beyond the row index.
pub fn exact_mise(
    f: &dyn Fn(f64) -> f64,
    family: &PowerSeriesFamily,
    measure: MeasureSpec,
    m: usize,
    n: u64,
) -> Result<MiseDecomposition> {
    if n == 0 {
        return Err(DemixError::Domain("need n >= 1".into()));
    }
    let proj = project_density(f, family, measure, m.max(1))?;
    let (bias_sq, variance) = if m == 0 {
        let norm_sq = proj.residual_norm.powi(2) + proj.coeffs.iter().map(|c| c * c).sum::<f64>();
        (norm_sq, 0.0)
    } else {
        let phi = phi_matrix(family, measure, m)?;
        let mut second_moment = 0.0;
        for x in 0..m {
            second_moment += pi_f(f, family, measure, x)? * phi.col_sq_sum(x);
        }
        let proj_sq: f64 = proj.coeffs.iter().map(|c| c * c).sum();
        (
            proj.residual_norm.powi(2),
            (second_moment - proj_sq) / n as f64,
        )
    };
    Ok(MiseDecomposition {
        bias_sq,
        variance,
        total: bias_sq + variance,
    })
}

/// The trace-form variance bound (K/n) Σ_k (R_m^{-1})_{kk} π_{f∞}(k).
pub fn variance_bound(
    f_inf: &dyn Fn(f64) -> f64,
    k_bound: f64,
    family: &PowerSeriesFamily,
    measure: MeasureSpec,
    m: usize,
    n: u64,
) -> Result<f64> {
    if !(k_bound >= 0.0) {
        return Err(DemixError::Domain("K must be nonnegative".into()));
    }
    if k_bound == 0.0 {
        return Ok(0.0);
    }
    if n == 0 {
        return Err(DemixError::Domain("need n >= 1".into()));
    }
    let gram = gram_matrix(family, measure, m)?;
    let diag = gram.inverse_diagonal()?;
    let mut acc = 0.0;
    for (k, d) in diag.iter().enumerate() {
        acc += d * pi_f(f_inf, family, measure, k)?;
    }
    Ok(k_bound * acc / n as f64)
}

/// Helper shared with simlab: squared L²(ν) distance between an estimate and
/// a density callable on an interval domain.
pub fn dist_sq_to_density(estimate: &Estimate, f: &dyn Fn(f64) -> f64, rule: &Rule) -> Result<f64> {
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let d = estimate.eval(x)? - f(x);
        acc += w * d * d;
    }
    Ok(acc)
}
