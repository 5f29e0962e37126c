//! Orthonormal polynomial sequences for the reference measures.
//!
//! Four measures are supported with closed-form three-term recurrences:
//! Lebesgue measure on an interval (Legendre and translated-scaled Legendre),
//! and the exponential weights e^{-t} and e^{-2t} on the half line (Laguerre
//! and squared-Laguerre). Monic polynomials r_k satisfy
//!
//! ```text
//! r_{k+1}(t) = (t - alpha_k) r_k(t) - beta_k r_{k-1}(t),   r_{-1} = 0, r_0 = 1,
//! ```
//!
//! with `beta_0` the total mass of the measure, and the orthonormal
//! coefficients are the monic ones divided by `N_k = sqrt(beta_0 ... beta_k)`.
//!
//! Two independent construction routes are provided: the recurrence above and
//! a classical Gram-Schmidt on the monomial moment matrix
//! ([`gram_schmidt_oracle`]), which serves as a test oracle. A discretized
//! Stieltjes procedure ([`stieltjes_recurrence`]) derives recurrence
//! coefficients for measures given only through a quadrature rule.

use crate::dd::Dd;
use crate::error::{DemixError, Result};
use crate::quadrature::{rule_halfline_exp, rule_on_interval, Rule, INTERVAL_NODES};

/// Default ceiling on the polynomial degree count. Coefficient norms grow
/// geometrically with the row index, so double precision degrades past this
/// point; construction beyond it requires an explicit override.
pub const M_MAX: usize = 30;

/// A reference measure on the parameter space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureSpec {
    /// Lebesgue measure on [a, b].
    LebesgueInterval { a: f64, b: f64 },
    /// The measure e^{-rate t} dt on (0, ∞); rate must be 1 or 2.
    ExpWeight { rate: u8 },
}

impl MeasureSpec {
    /// Lebesgue measure on [a, b]; requires a < b.
    pub fn lebesgue(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(DemixError::InvalidMeasure(format!(
                "interval requires finite a < b, got [{a}, {b}]"
            )));
        }
        Ok(MeasureSpec::LebesgueInterval { a, b })
    }

    /// Exponential weight e^{-rate t} on the half line; rate must be 1 or 2.
    pub fn exp_weight(rate: u8) -> Result<Self> {
        if rate != 1 && rate != 2 {
            return Err(DemixError::InvalidMeasure(format!(
                "exp-weight rate must be 1 or 2, got {rate}"
            )));
        }
        Ok(MeasureSpec::ExpWeight { rate })
    }

    /// Total mass of the measure (this is also `beta_0`).
    pub fn total_mass(&self) -> f64 {
        match *self {
            MeasureSpec::LebesgueInterval { a, b } => b - a,
            MeasureSpec::ExpWeight { rate } => 1.0 / rate as f64,
        }
    }

    /// Quadrature rule representing the measure, adequate for integrands that
    /// are polynomials of degree at most `max_degree` times a smooth factor.
    pub fn rule_for_degree(&self, max_degree: usize) -> Rule {
        match *self {
            MeasureSpec::LebesgueInterval { a, b } => {
                let n = INTERVAL_NODES.max(max_degree / 2 + 8);
                rule_on_interval(a, b, n)
            }
            MeasureSpec::ExpWeight { rate } => rule_halfline_exp(rate as f64, max_degree),
        }
    }

    /// Monomial moments ∫ t^j dν₀ for j < count, in closed form.
    pub fn moments(&self, count: usize) -> Vec<f64> {
        match *self {
            MeasureSpec::LebesgueInterval { a, b } => (0..count)
                .map(|j| {
                    let p = (j + 1) as f64;
                    (b.powi(j as i32 + 1) - a.powi(j as i32 + 1)) / p
                })
                .collect(),
            MeasureSpec::ExpWeight { rate } => {
                // ∫ t^j e^{-rt} dt = j! / r^{j+1}
                let r = rate as f64;
                let mut out = Vec::with_capacity(count);
                let mut v = 1.0 / r;
                out.push(v);
                for j in 1..count {
                    v *= j as f64 / r;
                    out.push(v);
                }
                out
            }
        }
    }

    /// Monomial moments carried in double-double precision. The oracle
    /// comparison at higher degrees needs moments accurate beyond f64:
    /// Hankel conditioning amplifies input rounding exponentially in the
    /// order, so f64 moments alone cap the attainable row accuracy.
    pub(crate) fn moments_dd(&self, count: usize) -> Vec<Dd> {
        match *self {
            MeasureSpec::LebesgueInterval { a, b } => {
                let mut out = Vec::with_capacity(count);
                let mut pa = Dd::from_f64(a);
                let mut pb = Dd::from_f64(b);
                for j in 0..count {
                    let diff = pb.sub(pa);
                    out.push(diff.div(Dd::from_f64((j + 1) as f64)));
                    pa = pa.mul_f64(a);
                    pb = pb.mul_f64(b);
                }
                out
            }
            MeasureSpec::ExpWeight { rate } => {
                let r = rate as f64;
                let mut out = Vec::with_capacity(count);
                let mut v = Dd::ONE.div(Dd::from_f64(r));
                out.push(v);
                for j in 1..count {
                    v = v.mul_f64(j as f64).div(Dd::from_f64(r));
                    out.push(v);
                }
                out
            }
        }
    }
}

/// Three-term recurrence coefficients (alpha_k, beta_k) of a measure, with
/// the convention that beta_0 is the total mass.
#[derive(Debug, Clone)]
pub struct RecurrenceCoeffs {
    kind: RecKind,
}

#[derive(Debug, Clone)]
enum RecKind {
    /// Lebesgue on an interval with midpoint mu and half-width delta.
    Interval { mu: f64, delta: f64 },
    /// Weight e^{-t} on the half line.
    Laguerre,
    /// Weight e^{-2t} on the half line.
    SquaredLaguerre,
    /// Explicit tables, e.g. from the Stieltjes procedure.
    Table { alpha: Vec<f64>, beta: Vec<f64> },
}

impl RecurrenceCoeffs {
    /// Builds from explicit coefficient tables; every beta must be positive.
    pub fn from_tables(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if let Some(k) = beta.iter().position(|b| !(*b > 0.0)) {
            return Err(DemixError::NumericalRange {
                what: "recurrence beta".into(),
                k,
            });
        }
        Ok(RecurrenceCoeffs {
            kind: RecKind::Table { alpha, beta },
        })
    }

    pub fn alpha(&self, k: usize) -> f64 {
        match &self.kind {
            // The recurrence center of an interval is its midpoint. (The
            // printed sign convention elsewhere disagrees; orthonormality of
            // the resulting sequence settles it, see the module tests.)
            RecKind::Interval { mu, .. } => *mu,
            RecKind::Laguerre => 2.0 * k as f64 + 1.0,
            RecKind::SquaredLaguerre => k as f64 + 0.5,
            RecKind::Table { alpha, .. } => alpha[k],
        }
    }

    pub fn beta(&self, k: usize) -> f64 {
        match &self.kind {
            RecKind::Interval { delta, .. } => {
                if k == 0 {
                    2.0 * delta
                } else {
                    let kf = k as f64;
                    delta * delta / (4.0 - 1.0 / (kf * kf))
                }
            }
            RecKind::Laguerre => {
                if k == 0 {
                    1.0
                } else {
                    (k as f64) * (k as f64)
                }
            }
            RecKind::SquaredLaguerre => {
                if k == 0 {
                    0.5
                } else {
                    (k as f64) * (k as f64) / 4.0
                }
            }
            RecKind::Table { beta, .. } => beta[k],
        }
    }
}

/// Recurrence coefficients for one of the supported measures.
pub fn recurrence_for(measure: MeasureSpec) -> Result<RecurrenceCoeffs> {
    match measure {
        MeasureSpec::LebesgueInterval { a, b } => {
            if !(a < b) {
                return Err(DemixError::InvalidMeasure(format!(
                    "interval requires a < b, got [{a}, {b}]"
                )));
            }
            Ok(RecurrenceCoeffs {
                kind: RecKind::Interval {
                    mu: 0.5 * (a + b),
                    delta: 0.5 * (b - a),
                },
            })
        }
        MeasureSpec::ExpWeight { rate: 1 } => Ok(RecurrenceCoeffs {
            kind: RecKind::Laguerre,
        }),
        MeasureSpec::ExpWeight { rate: 2 } => Ok(RecurrenceCoeffs {
            kind: RecKind::SquaredLaguerre,
        }),
        MeasureSpec::ExpWeight { rate } => Err(DemixError::InvalidMeasure(format!(
            "unsupported exp-weight rate {rate}"
        ))),
    }
}

/// Lower-triangular matrix of orthonormal polynomial coefficients; row k
/// holds the monomial coefficients of the degree-k orthonormal polynomial.
#[derive(Debug, Clone)]
pub struct CoeffMatrix {
    rows: Vec<Vec<f64>>,
}

impl CoeffMatrix {
    /// Number of rows (polynomials of degree 0 .. m-1).
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Coefficient Q_{k,l}; zero for l > k.
    pub fn entry(&self, k: usize, l: usize) -> f64 {
        if l > k {
            0.0
        } else {
            self.rows[k][l]
        }
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    /// Horner evaluation of the degree-k polynomial at t.
    pub fn eval(&self, k: usize, t: f64) -> Result<f64> {
        if k >= self.rows.len() {
            return Err(DemixError::Domain(format!(
                "polynomial index {k} out of range (m = {})",
                self.rows.len()
            )));
        }
        Ok(horner(&self.rows[k], t))
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * t + c;
    }
    acc
}

impl CoeffMatrix {
    /// f64 view of double-double coefficient rows.
    pub(crate) fn from_dd_rows(rows: &[Vec<Dd>]) -> CoeffMatrix {
        CoeffMatrix {
            rows: rows
                .iter()
                .map(|r| r.iter().map(|c| c.to_f64()).collect())
                .collect(),
        }
    }
}

/// Lifts closed-form (or tabulated) recurrence coefficients into dd tables.
pub(crate) fn recurrence_tables_dd(coeffs: &RecurrenceCoeffs, m: usize) -> (Vec<Dd>, Vec<Dd>) {
    let alpha = (0..m).map(|k| Dd::from_f64(coeffs.alpha(k))).collect();
    let beta = (0..m).map(|k| Dd::from_f64(coeffs.beta(k))).collect();
    (alpha, beta)
}

/// Orthonormal coefficient rows 0..m-1 from a recurrence, under the default
/// precision ceiling [`M_MAX`].
pub fn orthonormal_coeffs(coeffs: &RecurrenceCoeffs, m: usize) -> Result<CoeffMatrix> {
    orthonormal_coeffs_with_ceiling(coeffs, m, M_MAX)
}

/// Same as [`orthonormal_coeffs`] but with an explicit ceiling override.
pub fn orthonormal_coeffs_with_ceiling(
    coeffs: &RecurrenceCoeffs,
    m: usize,
    ceiling: usize,
) -> Result<CoeffMatrix> {
    if m == 0 {
        return Err(DemixError::Domain("need m >= 1".into()));
    }
    if m > ceiling {
        return Err(DemixError::PrecisionCeiling { m, m_max: ceiling });
    }
    // monic rows
    let mut prev: Vec<f64> = vec![];
    let mut cur: Vec<f64> = vec![1.0];
    let mut norm = coeffs.beta(0).sqrt();
    if !(norm > 0.0) {
        return Err(DemixError::NumericalRange {
            what: "beta_0".into(),
            k: 0,
        });
    }
    let mut rows = Vec::with_capacity(m);
    rows.push(vec![1.0 / norm]);
    for k in 0..m - 1 {
        let ak = coeffs.alpha(k);
        let bk = if k == 0 { 0.0 } else { coeffs.beta(k) };
        let mut next = vec![0.0; k + 2];
        for l in 0..=k + 1 {
            let shift = if l >= 1 { cur[l - 1] } else { 0.0 };
            let same = if l <= k { cur[l] } else { 0.0 };
            let lower = if k >= 1 && l < prev.len() {
                prev[l]
            } else {
                0.0
            };
            next[l] = shift - ak * same - bk * lower;
        }
        norm *= coeffs.beta(k + 1).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(DemixError::NumericalRange {
                what: "norm N_k".into(),
                k: k + 1,
            });
        }
        let row: Vec<f64> = next.iter().map(|c| c / norm).collect();
        if row.iter().any(|c| !c.is_finite()) {
            return Err(DemixError::NumericalRange {
                what: "recurrence coefficients".into(),
                k: k + 1,
            });
        }
        rows.push(row);
        prev = cur;
        cur = next;
    }
    Ok(CoeffMatrix { rows })
}

/// Evaluates the degree-k orthonormal polynomial at t by Horner on its
/// monomial coefficients.
///
/// Coefficient norms grow geometrically with k while the polynomial values
/// stay at unit scale on the support, so this form loses roughly
/// `eps · ‖Q_k‖` absolutely; beyond degree ~12 on an interval prefer
/// [`eval_orthonormal`], which is stable at any degree.
pub fn eval_orthopoly(q: &CoeffMatrix, k: usize, t: f64) -> Result<f64> {
    q.eval(k, t)
}

/// Evaluates q_0(x)..q_{out.len()-1}(x) by the normalized three-term
/// recurrence
///
/// ```text
/// sqrt(beta_{k+1}) q_{k+1}(x) = (x - alpha_k) q_k(x) - sqrt(beta_k) q_{k-1}(x),
/// ```
///
/// whose intermediates stay at the scale of the results.
pub fn eval_orthonormal(coeffs: &RecurrenceCoeffs, x: f64, out: &mut [f64]) {
    let m = out.len();
    if m == 0 {
        return;
    }
    out[0] = 1.0 / coeffs.beta(0).sqrt();
    let mut prev = 0.0;
    let mut cur = out[0];
    for k in 0..m - 1 {
        let next = ((x - coeffs.alpha(k)) * cur - coeffs.beta(k).sqrt() * prev)
            / coeffs.beta(k + 1).sqrt();
        prev = cur;
        cur = next;
        out[k + 1] = cur;
    }
}

/// Classical Gram-Schmidt on the monomial moment matrix: an independent
/// construction of the orthonormal coefficient rows from raw moments.
///
/// `moments[j]` must hold ∫ t^j dν₀ for j < 2m-1. Internally the monomials
/// are rescaled to unit norm before the triangular factorization, which is a
/// mathematical identity but avoids the worst of the Hankel grading; the
/// result is still exponentially ill-conditioned in m, and a non-positive
/// pivot reports the failing order.
pub fn gram_schmidt_oracle(moments: &[f64], m: usize) -> Result<CoeffMatrix> {
    if m == 0 {
        return Err(DemixError::Domain("need m >= 1".into()));
    }
    if moments.len() < 2 * m - 1 {
        return Err(DemixError::Domain(format!(
            "need {} moments for m = {m}, got {}",
            2 * m - 1,
            moments.len()
        )));
    }
    // column scales c_l = sqrt(moment_{2l}) equilibrate the Hankel matrix
    let mut scale = Vec::with_capacity(m);
    for l in 0..m {
        let mu = moments[2 * l];
        if !(mu > 0.0) {
            return Err(DemixError::NonPositiveDefiniteMoments { order: l });
        }
        scale.push(mu.sqrt());
    }
    let mut h = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            h[i][j] = moments[i + j] / (scale[i] * scale[j]);
        }
    }
    // Cholesky H = L L^T
    let mut l = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = h[i][j];
            for p in 0..j {
                s -= l[i][p] * l[j][p];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(DemixError::NonPositiveDefiniteMoments { order: i });
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // rows of L^{-1} give the orthonormal coefficients in the scaled basis
    let mut rows = Vec::with_capacity(m);
    for k in 0..m {
        let mut row = vec![0.0; k + 1];
        row[k] = 1.0 / l[k][k];
        for j in (0..k).rev() {
            let mut s = 0.0;
            for p in j + 1..=k {
                s += l[p][j] * row[p];
            }
            row[j] = -s / l[j][j];
        }
        for (li, r) in row.iter_mut().enumerate() {
            *r /= scale[li];
        }
        // leading coefficient positive by construction (Cholesky pivots > 0)
        rows.push(row);
    }
    Ok(CoeffMatrix { rows })
}

/// The moment Gram-Schmidt route carried out in double-double arithmetic on
/// extended-precision moments supplied by the measure. This is the oracle
/// used for dual-route comparisons at degrees where the Hankel condition
/// number (about 1e18 for Lebesgue on [0,1] at order 13) exceeds what f64
/// inputs can support.
pub fn gram_schmidt_oracle_dd(measure: MeasureSpec, m: usize) -> Result<CoeffMatrix> {
    if m == 0 {
        return Err(DemixError::Domain("need m >= 1".into()));
    }
    let moments = measure.moments_dd(2 * m - 1);
    let mut scale = Vec::with_capacity(m);
    for l in 0..m {
        let mu = moments[2 * l];
        if !mu.is_positive() {
            return Err(DemixError::NonPositiveDefiniteMoments { order: l });
        }
        scale.push(mu.sqrt());
    }
    let mut h = vec![vec![Dd::ZERO; m]; m];
    for i in 0..m {
        for j in 0..m {
            h[i][j] = moments[i + j].div(scale[i].mul(scale[j]));
        }
    }
    let mut l = vec![vec![Dd::ZERO; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = h[i][j];
            for p in 0..j {
                s = s.sub(l[i][p].mul(l[j][p]));
            }
            if i == j {
                if !s.is_positive() {
                    return Err(DemixError::NonPositiveDefiniteMoments { order: i });
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s.div(l[j][j]);
            }
        }
    }
    let mut rows = Vec::with_capacity(m);
    for k in 0..m {
        let mut row = vec![Dd::ZERO; k + 1];
        row[k] = Dd::ONE.div(l[k][k]);
        for j in (0..k).rev() {
            let mut s = Dd::ZERO;
            for p in j + 1..=k {
                s = s.add(l[p][j].mul(row[p]));
            }
            row[j] = Dd::ZERO.sub(s.div(l[j][j]));
        }
        rows.push(
            row.iter()
                .zip(&scale)
                .map(|(r, c)| r.div(*c).to_f64())
                .collect(),
        );
    }
    Ok(CoeffMatrix { rows })
}

/// Iterates of the growth-bound recursion behind the half-line growth lemma:
///
/// ```text
/// x_{k+1} = ((r_k + |alpha_k|)/sqrt(beta_{k+1})) x_k
///           + sqrt(beta_k/beta_{k+1}) x_{k-1},
/// ```
///
/// with `r_k = max_{1 <= l <= k+1} a_{l-1}/a_l` and `x_0 = 1/(a_0
/// sqrt(beta_0))`. The iterates dominate the weighted row norms
/// `sqrt(s_k)` from [`coeff_growth`], and their consecutive ratio converges
/// to the positive root of the limiting characteristic equation (for the
/// squared-Laguerre measure with factorial weights, `x² - 4x - 1 = 0`, root
/// `2 + sqrt(5)`). The actual row-norm ratio converges more slowly than the
/// majorant's, so growth assertions belong on these iterates.
pub fn growth_majorant(
    coeffs: &RecurrenceCoeffs,
    weights: Option<&[f64]>,
    m: usize,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(DemixError::Domain("need m >= 1".into()));
    }
    if let Some(w) = weights {
        if w.len() < m {
            return Err(DemixError::Domain(format!(
                "weights must cover indices < m = {m}, got {}",
                w.len()
            )));
        }
    }
    let a = |l: usize| weights.map_or(1.0, |w| w[l]);
    let mut out = Vec::with_capacity(m);
    let mut x_prev = 0.0;
    let mut x_cur = 1.0 / (a(0) * coeffs.beta(0).sqrt());
    out.push(x_cur);
    for k in 0..m - 1 {
        let r_k = (1..=k + 1)
            .map(|l| a(l - 1) / a(l))
            .fold(f64::MIN, f64::max);
        let c = (r_k + coeffs.alpha(k).abs()) / coeffs.beta(k + 1).sqrt();
        let d = if k == 0 {
            0.0
        } else {
            (coeffs.beta(k) / coeffs.beta(k + 1)).sqrt()
        };
        let x_next = c * x_cur + d * x_prev;
        x_prev = x_cur;
        x_cur = x_next;
        out.push(x_cur);
    }
    Ok(out)
}

/// Per-row weighted squared coefficient norms `s_k = Σ_l (Q_{k,l}/a_l)²`,
/// the growth diagnostic. With no weights, `a_l = 1`.
pub fn coeff_growth(q: &CoeffMatrix, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    if let Some(w) = weights {
        if w.len() < q.m() {
            return Err(DemixError::Domain(format!(
                "weights must cover indices < m = {}, got {}",
                q.m(),
                w.len()
            )));
        }
        if let Some(bad) = w.iter().position(|x| !(*x > 0.0)) {
            return Err(DemixError::Domain(format!(
                "weights must be positive, weight[{bad}] = {}",
                w[bad]
            )));
        }
    }
    let mut out = Vec::with_capacity(q.m());
    for k in 0..q.m() {
        let mut s = 0.0;
        for (l, &c) in q.row(k).iter().enumerate() {
            let a = weights.map_or(1.0, |w| w[l]);
            let v = c / a;
            s += v * v;
        }
        out.push(s);
    }
    Ok(out)
}

/// Stieltjes procedure carried in double-double arithmetic over a discrete
/// measure with double-double weights. Returns recurrence tables.
///
/// The basis coefficients this feeds are exponentially graded, and the
/// dual-route estimator comparisons are sensitive to the orthonormality
/// defect of the *stored* coefficients times the coefficient magnitudes, so
/// the whole pipeline from here to the estimator coordinates stays in
/// double-double.
pub(crate) fn stieltjes_recurrence_dd(
    nodes: &[f64],
    weights: &[Dd],
    m: usize,
) -> Result<(Vec<Dd>, Vec<Dd>)> {
    if nodes.len() != weights.len() || nodes.is_empty() {
        return Err(DemixError::Domain(
            "stieltjes needs matching nonempty nodes/weights".into(),
        ));
    }
    let n = nodes.len();
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut p_prev = vec![Dd::ZERO; n];
    let mut p_cur = vec![Dd::ONE; n];
    let mut nsq_prev = Dd::ZERO;
    for k in 0..m {
        let mut nsq = Dd::ZERO;
        let mut xnsq = Dd::ZERO;
        for i in 0..n {
            let w = weights[i].mul(p_cur[i]).mul(p_cur[i]);
            nsq = nsq.add(w);
            xnsq = xnsq.add(w.mul_f64(nodes[i]));
        }
        if !nsq.is_positive() || !nsq.to_f64().is_finite() {
            return Err(DemixError::NumericalRange {
                what: "stieltjes norm".into(),
                k,
            });
        }
        alpha.push(xnsq.div(nsq));
        beta.push(if k == 0 { nsq } else { nsq.div(nsq_prev) });
        let (ak, bk) = (alpha[k], if k == 0 { Dd::ZERO } else { beta[k] });
        for i in 0..n {
            let next = Dd::from_f64(nodes[i])
                .sub(ak)
                .mul(p_cur[i])
                .sub(bk.mul(p_prev[i]));
            p_prev[i] = p_cur[i];
            p_cur[i] = next;
        }
        nsq_prev = nsq;
    }
    Ok((alpha, beta))
}

/// Monic-to-orthonormal coefficient expansion in double-double from
/// recurrence tables; companion to [`stieltjes_recurrence_dd`].
pub(crate) fn orthonormal_rows_dd(
    alpha: &[Dd],
    beta: &[Dd],
    m: usize,
    ceiling: usize,
) -> Result<Vec<Vec<Dd>>> {
    if m == 0 {
        return Err(DemixError::Domain("need m >= 1".into()));
    }
    if m > ceiling {
        return Err(DemixError::PrecisionCeiling { m, m_max: ceiling });
    }
    if alpha.len() < m || beta.len() < m {
        return Err(DemixError::Domain(
            "recurrence tables shorter than requested order".into(),
        ));
    }
    let mut prev: Vec<Dd> = vec![];
    let mut cur: Vec<Dd> = vec![Dd::ONE];
    let mut norm = beta[0].sqrt();
    let mut rows = Vec::with_capacity(m);
    rows.push(vec![Dd::ONE.div(norm)]);
    for k in 0..m - 1 {
        let ak = alpha[k];
        let bk = if k == 0 { Dd::ZERO } else { beta[k] };
        let mut next = vec![Dd::ZERO; k + 2];
        for (l, slot) in next.iter_mut().enumerate() {
            let shift = if l >= 1 { cur[l - 1] } else { Dd::ZERO };
            let same = if l <= k { cur[l] } else { Dd::ZERO };
            let lower = if k >= 1 && l < prev.len() {
                prev[l]
            } else {
                Dd::ZERO
            };
            *slot = shift.sub(ak.mul(same)).sub(bk.mul(lower));
        }
        norm = norm.mul(beta[k + 1].sqrt());
        if !norm.to_f64().is_finite() || norm.to_f64() == 0.0 {
            return Err(DemixError::NumericalRange {
                what: "norm N_k".into(),
                k: k + 1,
            });
        }
        let row: Vec<Dd> = next.iter().map(|c| c.div(norm)).collect();
        if row.iter().any(|c| !c.to_f64().is_finite()) {
            return Err(DemixError::NumericalRange {
                what: "recurrence coefficients".into(),
                k: k + 1,
            });
        }
        rows.push(row);
        prev = cur;
        cur = next;
    }
    Ok(rows)
}

/// Derives recurrence coefficients (alpha_0..alpha_{m-1}, beta_0..beta_{m-1})
/// for the discrete measure Σ w_i δ_{x_i} by the Stieltjes procedure. When
/// the rule integrates polynomials of degree 2m-1 exactly against a target
/// measure, the output matches that measure's coefficients.
pub fn stieltjes_recurrence(nodes: &[f64], weights: &[f64], m: usize) -> Result<RecurrenceCoeffs> {
    if nodes.len() != weights.len() || nodes.is_empty() {
        return Err(DemixError::Domain(
            "stieltjes needs matching nonempty nodes/weights".into(),
        ));
    }
    let n = nodes.len();
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut p_prev = vec![0.0; n];
    let mut p_cur = vec![1.0; n];
    let mut nsq_prev = 0.0;
    for k in 0..m {
        let mut nsq = 0.0;
        let mut xnsq = 0.0;
        for i in 0..n {
            let w = weights[i] * p_cur[i] * p_cur[i];
            nsq += w;
            xnsq += nodes[i] * w;
        }
        if !(nsq > 0.0) || !nsq.is_finite() {
            return Err(DemixError::NumericalRange {
                what: "stieltjes norm".into(),
                k,
            });
        }
        alpha.push(xnsq / nsq);
        beta.push(if k == 0 { nsq } else { nsq / nsq_prev });
        let (ak, bk) = (alpha[k], if k == 0 { 0.0 } else { beta[k] });
        for i in 0..n {
            let next = (nodes[i] - ak) * p_cur[i] - bk * p_prev[i];
            p_prev[i] = p_cur[i];
            p_cur[i] = next;
        }
        nsq_prev = nsq;
    }
    RecurrenceCoeffs::from_tables(alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legendre_sym() -> RecurrenceCoeffs {
        recurrence_for(MeasureSpec::lebesgue(-1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn recurrence_values_match_reference() {
        let leg = legendre_sym();
        assert_eq!(leg.alpha(1), 0.0);
        assert!((leg.beta(1) - 1.0 / 3.0).abs() < 1e-15);
        let lag = recurrence_for(MeasureSpec::exp_weight(1).unwrap()).unwrap();
        assert_eq!(lag.alpha(2), 5.0);
        assert_eq!(lag.beta(2), 4.0);
        let sql = recurrence_for(MeasureSpec::exp_weight(2).unwrap()).unwrap();
        assert_eq!(sql.alpha(1), 1.5);
        assert_eq!(sql.beta(1), 0.25);
        assert_eq!(sql.beta(0), 0.5);
    }

    #[test]
    fn unsupported_measures_rejected() {
        assert!(MeasureSpec::lebesgue(1.0, 1.0).is_err());
        assert!(MeasureSpec::lebesgue(2.0, 1.0).is_err());
        assert!(MeasureSpec::exp_weight(3).is_err());
    }

    #[test]
    fn legendre_normalized_coefficients() {
        let q = orthonormal_coeffs(&legendre_sym(), 2).unwrap();
        assert!((q.entry(0, 0) - 1.0 / 2.0f64.sqrt()).abs() < 1e-14);
        assert!((q.entry(1, 1) - (1.5f64).sqrt()).abs() < 1e-14);
        assert_eq!(q.entry(0, 1), 0.0);
    }

    #[test]
    fn shifted_legendre_row_one() {
        // on [0,1] the degree-1 orthonormal polynomial is sqrt(12) (t - 1/2)
        let rec = recurrence_for(MeasureSpec::lebesgue(0.0, 1.0).unwrap()).unwrap();
        let q = orthonormal_coeffs(&rec, 2).unwrap();
        assert!((q.entry(1, 1) - 12.0f64.sqrt()).abs() < 1e-12);
        let at_one = q.eval(1, 1.0).unwrap();
        assert!((at_one - 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn eval_examples() {
        let q = orthonormal_coeffs(&legendre_sym(), 2).unwrap();
        assert!((q.eval(0, 0.37).unwrap() - 0.7071067811865475).abs() < 1e-14);
        assert!((q.eval(1, 1.0).unwrap() - 1.224744871391589).abs() < 1e-14);
        assert!(q.eval(5, 0.0).is_err());
    }

    #[test]
    fn gram_schmidt_matches_hand_computation() {
        let moments = [2.0, 0.0, 2.0 / 3.0, 0.0, 2.0 / 5.0];
        let q = gram_schmidt_oracle(&moments, 2).unwrap();
        assert!((q.entry(0, 0) - 0.7071067811865475).abs() < 1e-13);
        assert!(q.entry(1, 0).abs() < 1e-13);
        assert!((q.entry(1, 1) - 1.224744871391589).abs() < 1e-13);
        // m = 1 is pure normalization
        let q1 = gram_schmidt_oracle(&[2.0], 1).unwrap();
        assert!((q1.entry(0, 0) - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
    }

    /// Dual-route agreement (relative, per row, sign-free) for k <= 12 on all
    /// four reference measures, against the extended-precision oracle.
    #[test]
    fn gram_schmidt_agrees_with_recurrence() {
        let measures = [
            MeasureSpec::lebesgue(-1.0, 1.0).unwrap(),
            MeasureSpec::lebesgue(0.0, 1.0).unwrap(),
            MeasureSpec::exp_weight(1).unwrap(),
            MeasureSpec::exp_weight(2).unwrap(),
        ];
        for meas in measures {
            let m = 13;
            let rec = recurrence_for(meas).unwrap();
            let qa = orthonormal_coeffs(&rec, m).unwrap();
            let qb = gram_schmidt_oracle_dd(meas, m).unwrap();
            for k in 0..m {
                let (mut num, mut den) = (0.0, 0.0);
                for l in 0..=k {
                    num += (qa.entry(k, l) - qb.entry(k, l)).powi(2);
                    den += qa.entry(k, l).powi(2);
                }
                let rel = (num / den).sqrt();
                assert!(rel < 1e-6, "{meas:?} row {k}: rel dev {rel:.2e}");
            }
        }
    }

    /// The plain f64 oracle is adequate at moderate degrees on the symmetric
    /// interval; on [0,1] the Hankel matrix is the Hilbert matrix and the
    /// factorization must eventually report a non-positive pivot.
    #[test]
    fn f64_oracle_limits() {
        let meas = MeasureSpec::lebesgue(-1.0, 1.0).unwrap();
        let m = 13;
        let qa = orthonormal_coeffs(&recurrence_for(meas).unwrap(), m).unwrap();
        let qb = gram_schmidt_oracle(&meas.moments(2 * m - 1), m).unwrap();
        for k in 0..m {
            let (mut num, mut den) = (0.0, 0.0);
            for l in 0..=k {
                num += (qa.entry(k, l) - qb.entry(k, l)).powi(2);
                den += qa.entry(k, l).powi(2);
            }
            assert!((num / den).sqrt() < 1e-6, "row {k}");
        }
        let hilbert = MeasureSpec::lebesgue(0.0, 1.0).unwrap();
        let res = gram_schmidt_oracle(&hilbert.moments(2 * 20 - 1), 20);
        assert!(matches!(
            res,
            Err(DemixError::NonPositiveDefiniteMoments { .. })
        ));
    }

    #[test]
    fn orthonormality_under_module_quadrature() {
        let measures = [
            MeasureSpec::lebesgue(-1.0, 1.0).unwrap(),
            MeasureSpec::lebesgue(0.0, 1.0).unwrap(),
            MeasureSpec::exp_weight(1).unwrap(),
            MeasureSpec::exp_weight(2).unwrap(),
        ];
        let m = 10;
        for meas in measures {
            let rec = recurrence_for(meas).unwrap();
            let q = orthonormal_coeffs(&rec, m).unwrap();
            let rule = meas.rule_for_degree(2 * m);
            let vals: Vec<Vec<f64>> = (0..m)
                .map(|k| rule.nodes.iter().map(|&x| q.eval(k, x).unwrap()).collect())
                .collect();
            for k in 0..m {
                for l in 0..=k {
                    let mut ip = 0.0;
                    for (i, &w) in rule.weights.iter().enumerate() {
                        ip += w * vals[k][i] * vals[l][i];
                    }
                    let target = if k == l { 1.0 } else { 0.0 };
                    assert!((ip - target).abs() < 1e-10, "{meas:?} ({k},{l}): {ip}");
                }
            }
        }
    }

    /// Degree exactness through the sign-change surrogate: the degree-k
    /// polynomial changes sign exactly k times inside the support.
    #[test]
    fn sign_changes_match_degree() {
        let cases = [
            (MeasureSpec::lebesgue(-1.0, 1.0).unwrap(), -1.0, 1.0),
            (MeasureSpec::lebesgue(0.0, 1.0).unwrap(), 0.0, 1.0),
            (MeasureSpec::exp_weight(1).unwrap(), 0.0, 60.0),
            (MeasureSpec::exp_weight(2).unwrap(), 0.0, 30.0),
        ];
        for (meas, lo, hi) in cases {
            let rec = recurrence_for(meas).unwrap();
            let q = orthonormal_coeffs(&rec, 11).unwrap();
            for k in 0..11usize {
                let grid = 20_000;
                let mut changes = 0;
                let mut last = q.eval(k, lo + 1e-9).unwrap();
                for i in 1..=grid {
                    let t = lo + (hi - lo) * i as f64 / grid as f64;
                    let v = q.eval(k, t).unwrap();
                    if v * last < 0.0 {
                        changes += 1;
                    }
                    if v != 0.0 {
                        last = v;
                    }
                }
                assert_eq!(changes, k, "{meas:?} degree {k}");
            }
        }
    }

    #[test]
    fn growth_diagnostics() {
        // unweighted growth rate on [-1,1] stays under log(1.05 * lambda)
        let q = orthonormal_coeffs(&legendre_sym(), 26).unwrap();
        let s = coeff_growth(&q, None).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-15); // 1/beta_0
        let lam = 1.0 + 2.0f64.sqrt();
        let k = 25;
        assert!(s[k].ln() / (2.0 * k as f64) <= (1.05 * lam).ln());
    }

    #[test]
    fn weighted_growth_squared_laguerre() {
        // With a_l = 1/l! the weighted row norms grow like 3^k: the squared
        // norms are 2 Σ_l C(k,l)² 4^l = 2 · 3^k P_k(5/3), and P_k(5/3) grows
        // like 3^k up to algebraic factors. The bound recursion majorizes
        // them and its ratio approaches 2 + sqrt(5), the root of x²-4x-1.
        let rec = recurrence_for(MeasureSpec::exp_weight(2).unwrap()).unwrap();
        let q = orthonormal_coeffs(&rec, 27).unwrap();
        let mut inv_fact = Vec::with_capacity(27);
        let mut f = 1.0f64;
        for l in 0..27usize {
            if l > 0 {
                f *= l as f64;
            }
            inv_fact.push(1.0 / f);
        }
        let s = coeff_growth(&q, Some(&inv_fact)).unwrap();
        let ratio = (s[26] / s[25]).sqrt();
        assert!((2.9..3.05).contains(&ratio), "actual ratio {ratio}");

        let root = 2.0 + 5.0f64.sqrt();
        let x = growth_majorant(&rec, Some(&inv_fact), 27).unwrap();
        for k in 0..27 {
            assert!(
                s[k].sqrt() <= x[k] * (1.0 + 1e-12),
                "majorant fails at k={k}: {} > {}",
                s[k].sqrt(),
                x[k]
            );
        }
        let major_ratio = x[26] / x[25];
        assert!(
            (major_ratio - root).abs() / root < 0.05,
            "majorant ratio {major_ratio} vs {root}"
        );
        // the actual growth also respects the one-sided bound
        assert!(ratio < root);
    }

    #[test]
    fn precision_ceiling_enforced() {
        let rec = legendre_sym();
        assert!(matches!(
            orthonormal_coeffs(&rec, 31),
            Err(DemixError::PrecisionCeiling { m: 31, m_max: 30 })
        ));
        assert!(orthonormal_coeffs_with_ceiling(&rec, 31, 40).is_ok());
    }

    #[test]
    fn stieltjes_recovers_closed_recurrences() {
        // interval measure
        let meas = MeasureSpec::lebesgue(0.0, 1.0).unwrap();
        let rule = meas.rule_for_degree(40);
        let tab = stieltjes_recurrence(&rule.nodes, &rule.weights, 15).unwrap();
        let closed = recurrence_for(meas).unwrap();
        for k in 0..15 {
            assert!((tab.alpha(k) - closed.alpha(k)).abs() < 1e-12, "alpha {k}");
            assert!(
                (tab.beta(k) - closed.beta(k)).abs() / closed.beta(k) < 1e-12,
                "beta {k}"
            );
        }
        // squared-Laguerre via its quadrature rule
        let meas = MeasureSpec::exp_weight(2).unwrap();
        let rule = meas.rule_for_degree(40);
        let tab = stieltjes_recurrence(&rule.nodes, &rule.weights, 15).unwrap();
        let closed = recurrence_for(meas).unwrap();
        for k in 0..15 {
            assert!((tab.alpha(k) - closed.alpha(k)).abs() < 1e-10, "alpha {k}");
            assert!(
                (tab.beta(k) - closed.beta(k)).abs() / closed.beta(k) < 1e-10,
                "beta {k}"
            );
        }
    }
}
