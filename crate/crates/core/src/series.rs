//! Leading expansion coefficients of 1 − F(γ, ε) and reference polynomials.
//!
//! Mixed coefficients are separated along rays ε = rγ: on each ray
//! 1 − F = s(r)γ² + O(γ³) with s(r) = a + c·r + b·r², so three rays
//! r ∈ {0, ½, 1} determine the γ², εγ and ε² coefficients a, c and b.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::GadParams;
use crate::codes::{build_code, CodeName};
use crate::fidelity::{default_max_weight, entanglement_fidelity, FidelityError};
use crate::linalg::{hermitian_eig, DenseMatrix, LinalgError};
use crate::recovery::{build_recovery, default_correctable_set, Regime, RecoveryOptions};

pub const MAX_CONDITION: f64 = 1e12;
/// Relative tolerance for coefficients compared with reference values.
pub const COEFFICIENT_TOL: f64 = 0.05;
/// Absolute tolerance for a coefficient whose reference value is zero.
pub const ZERO_COEFFICIENT_TOL: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("design matrix is ill-conditioned (condition {0:e})")]
    IllConditioned(f64),
    #[error("fit needs at least as many samples ({samples}) as basis terms ({terms})")]
    TooFewSamples { samples: usize, terms: usize },
    #[error("invalid sample box: {0}")]
    InvalidBox(String),
    #[error("no reference coefficients for code '{0}'")]
    NoReference(String),
    #[error("evaluator failed: {0}")]
    Evaluator(String),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// Monomial γ^a ε^b.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Monomial {
    pub gamma: u32,
    pub epsilon: u32,
}

impl Monomial {
    pub const fn new(gamma: u32, epsilon: u32) -> Self {
        Self { gamma, epsilon }
    }

    pub fn eval(&self, g: f64, e: f64) -> f64 {
        g.powi(self.gamma as i32) * e.powi(self.epsilon as i32)
    }
}

/// Sample points: `points` log-spaced γ values in [γ_min, γ_max], with ε = ratio · γ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleBox {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub points: usize,
    pub eps_ratio: f64,
}

impl Default for SampleBox {
    fn default() -> Self {
        Self { gamma_min: 1e-3, gamma_max: 2e-2, points: 8, eps_ratio: 0.0 }
    }
}

impl SampleBox {
    pub fn with_ratio(self, eps_ratio: f64) -> Self {
        Self { eps_ratio, ..self }
    }

    /// Same shape with γ_max halved.
    pub fn halved(self) -> Self {
        Self { gamma_max: self.gamma_max / 2.0, ..self }
    }

    pub fn samples(&self) -> Result<Vec<(f64, f64)>> {
        if !(self.gamma_min > 0.0 && self.gamma_max > self.gamma_min && self.points >= 2) {
            return Err(SeriesError::InvalidBox(format!(
                "gamma in [{}, {}] with {} points",
                self.gamma_min, self.gamma_max, self.points
            )));
        }
        let (lo, hi) = (self.gamma_min.ln(), self.gamma_max.ln());
        Ok((0..self.points)
            .map(|i| {
                let g = (lo + (hi - lo) * i as f64 / (self.points - 1) as f64).exp();
                (g, self.eps_ratio * g)
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub basis: Vec<Monomial>,
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// Condition number of the column-scaled design matrix.
    pub condition: f64,
}

impl FitReport {
    pub fn coefficient(&self, m: Monomial) -> Option<f64> {
        self.basis.iter().position(|&b| b == m).map(|i| self.coefficients[i])
    }
}

/// Least-squares solution with Householder QR; columns are pre-scaled to unit norm.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m < n || n == 0 {
        return Err(SeriesError::TooFewSamples { samples: m, terms: n });
    }
    let scale: Vec<f64> = (0..n).map(|j| rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt()).collect();
    if scale.iter().any(|&s| s == 0.0) {
        return Err(SeriesError::IllConditioned(f64::INFINITY));
    }
    let mut a: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&scale).map(|(x, s)| x / s).collect()).collect();

    let mut gram = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let s: f64 = a.iter().map(|r| r[i] * r[j]).sum();
            gram.set(i, j, s.into());
        }
    }
    let (ev, _) = hermitian_eig(&gram)?;
    let (hi, lo) = (ev[0], ev[n - 1]);
    let condition = if lo > 0.0 { (hi / lo).sqrt() } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(SeriesError::IllConditioned(condition));
    }

    let mut b = rhs.to_vec();
    for k in 0..n {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                a[i][j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..m {
            b[i] -= f * v[i - k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok((x.iter().zip(&scale).map(|(v, s)| v / s).collect(), condition))
}

/// Fits 1 − F against `basis` over the samples of `sample_box`.
pub fn fit_expansion<F>(evaluator: F, basis: &[Monomial], sample_box: SampleBox) -> Result<FitReport>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let samples = sample_box.samples()?;
    let values: Vec<f64> = samples.par_iter().map(|&(g, e)| evaluator(g, e)).collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = samples.iter().map(|&(g, e)| basis.iter().map(|m| m.eval(g, e)).collect()).collect();
    let rhs: Vec<f64> = values.iter().map(|f| 1.0 - f).collect();
    let (coefficients, condition) = least_squares(&rows, &rhs)?;
    let ss: f64 = rows
        .iter()
        .zip(&rhs)
        .map(|(r, y)| {
            let fit: f64 = r.iter().zip(&coefficients).map(|(a, c)| a * c).sum();
            (fit - y).powi(2)
        })
        .sum();
    Ok(FitReport { basis: basis.to_vec(), coefficients, residual: (ss / rows.len() as f64).sqrt(), condition })
}

/// γ² coefficient of 1 − F(γ, 0) from three-point extrapolation at h, 2h, 4h.
///
/// With g(h) = (1 − F(h))/h² = a + b·h + c·h² + …, the combination
/// (8g(h) − 6g(2h) + g(4h))/3 cancels the linear and quadratic terms.
pub fn finite_difference_gamma2<F>(evaluator: F, h: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let g = |x: f64| -> Result<f64> { Ok((1.0 - evaluator(x, 0.0)?) / (x * x)) };
    Ok((8.0 * g(h)? - 6.0 * g(2.0 * h)? + g(4.0 * h)?) / 3.0)
}

/// Reference expansion 1 − F ≈ γ2·γ² + γ3·γ³ + ε2·ε² + εγ·εγ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReferenceCoefficients {
    pub gamma2: f64,
    pub gamma3: Option<f64>,
    pub eps2: Option<f64>,
    pub eps_gamma: Option<f64>,
}

/// Published leading coefficients for each code, where one exists.
pub fn reference_coefficients(code: CodeName) -> Option<ReferenceCoefficients> {
    let full = |g: f64, e: f64| ReferenceCoefficients { gamma2: g, gamma3: None, eps2: Some(e), eps_gamma: Some(e) };
    let gamma_only = |g: f64| ReferenceCoefficients { gamma2: g, gamma3: None, eps2: None, eps_gamma: None };
    Some(match code {
        CodeName::FiveQubit => full(2.5, 10.0),
        CodeName::CssSeven => full(5.25, 21.0),
        CodeName::EightConcat => full(2.0, 28.0),
        CodeName::SixDegenerate => full(2.0, 15.0),
        CodeName::ShorNine => ReferenceCoefficients { gamma2: 0.0, gamma3: Some(1.5), eps2: Some(36.0), eps_gamma: Some(36.0) },
        CodeName::Nonadd11_2_3 => full(13.75, 55.0),
        CodeName::Nonadd9_12_3 => full(9.0, 36.0),
        CodeName::Nonadd6_5 => gamma_only(4.2),
        CodeName::Nonadd8_12 => gamma_only(7.5),
        CodeName::Gottesman833 => gamma_only(7.0),
        CodeName::LeungFour => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientCheck {
    pub term: String,
    pub fitted: f64,
    pub reference: f64,
    /// Relative error, or absolute error when the reference is zero.
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CoefficientCheck {
    pub fn new(term: &str, fitted: f64, reference: f64) -> Self {
        let (error, tolerance) = if reference == 0.0 {
            (fitted.abs(), ZERO_COEFFICIENT_TOL)
        } else {
            (((fitted - reference) / reference).abs(), COEFFICIENT_TOL)
        };
        Self { term: term.to_string(), fitted, reference, error, tolerance, pass: error <= tolerance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub code: String,
    pub reference: ReferenceCoefficients,
    pub checks: Vec<CoefficientCheck>,
    /// One fit per ray ε = rγ.
    pub rays: Vec<(f64, FitReport)>,
}

impl ExpansionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, term: &str) -> Option<&CoefficientCheck> {
        self.checks.iter().find(|c| c.term == term)
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<16} {:<6} {:>14} {:>10} {:>10}  result\n", "code", "term", "fitted", "reference", "error");
        for c in &self.checks {
            out.push_str(&format!(
                "{:<16} {:<6} {:>14.6} {:>10.4} {:>10.4}  {}\n",
                self.code,
                c.term,
                c.fitted,
                c.reference,
                c.error,
                if c.pass { "PASS" } else { "FAIL" }
            ));
        }
        out
    }
}

pub const RAYS: [f64; 3] = [0.0, 0.5, 1.0];

/// Splits γ² coefficients s(0), s(½), s(1) along the three rays into (γ², εγ, ε²).
pub fn split_rays(s0: f64, s_half: f64, s1: f64) -> (f64, f64, f64) {
    let d_half = s_half - s0;
    let d1 = s1 - s0;
    (s0, 4.0 * d_half - d1, 2.0 * d1 - 4.0 * d_half)
}

/// Numeric fidelity of a registry code under its default recovery.
pub fn code_fidelity(code: CodeName, gamma: f64, epsilon: f64, max_weight: Option<usize>) -> Result<f64> {
    let c = build_code(code);
    let set = default_correctable_set(code, Regime::Gad);
    let params = GadParams::new(gamma, epsilon).map_err(|e| SeriesError::Evaluator(e.to_string()))?;
    let rec = build_recovery(&c, &set, params, RecoveryOptions::default()).map_err(FidelityError::from)?;
    let w = max_weight.unwrap_or_else(|| default_max_weight(c.n()));
    Ok(entanglement_fidelity(&c, &rec, params, Some(w))?.value)
}

fn gamma_powers(from: u32, to: u32) -> Vec<Monomial> {
    (from..=to).map(|a| Monomial::new(a, 0)).collect()
}

/// Fits the leading coefficients of a registry code and compares them with the reference values.
pub fn verify_reference_coefficients(code: CodeName, sample_box: SampleBox) -> Result<ExpansionReport> {
    let reference = reference_coefficients(code).ok_or_else(|| SeriesError::NoReference(code.as_str().into()))?;
    let eval = |g: f64, e: f64| code_fidelity(code, g, e, None);
    let ray0_basis = if reference.gamma3.is_some() { gamma_powers(2, 5) } else { gamma_powers(2, 4) };
    let mut rays = vec![(0.0, fit_expansion(eval, &ray0_basis, sample_box.with_ratio(0.0))?)];
    let gamma2 = rays[0].1.coefficients[0];
    let mut checks = vec![CoefficientCheck::new("g^2", gamma2, reference.gamma2)];
    if let Some(g3) = reference.gamma3 {
        checks.push(CoefficientCheck::new("g^3", rays[0].1.coefficients[1], g3));
    }
    if reference.eps2.is_some() || reference.eps_gamma.is_some() {
        for &r in &RAYS[1..] {
            rays.push((r, fit_expansion(eval, &gamma_powers(2, 4), sample_box.with_ratio(r))?));
        }
        let (_, eg, e2) = split_rays(gamma2, rays[1].1.coefficients[0], rays[2].1.coefficients[0]);
        if let Some(v) = reference.eps2 {
            checks.push(CoefficientCheck::new("e^2", e2, v));
        }
        if let Some(v) = reference.eps_gamma {
            checks.push(CoefficientCheck::new("e*g", eg, v));
        }
    }
    Ok(ExpansionReport { code: code.as_str().to_string(), reference, checks, rays })
}

/// Univariate polynomial Σ c_k x^k given by (exponent, coefficient) pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferencePolynomial {
    pub code: String,
    pub variable: String,
    pub terms: Vec<(u32, f64)>,
}

/// Horner evaluation.
pub fn evaluate_reference_polynomial(poly: &ReferencePolynomial, x: f64) -> f64 {
    let degree = poly.terms.iter().map(|t| t.0).max().unwrap_or(0) as usize;
    let mut dense = vec![0.0; degree + 1];
    for &(e, c) in &poly.terms {
        dense[e as usize] += c;
    }
    dense.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Taylor series through γ⁹ of the seven-qubit fidelity at ε = 0.
pub fn css_seven_taylor() -> ReferencePolynomial {
    ReferencePolynomial {
        code: CodeName::CssSeven.as_str().into(),
        variable: "gamma".into(),
        terms: vec![
            (0, 1.0),
            (2, -21.0 / 4.0),
            (3, 35.0 / 4.0),
            (4, -63.0 / 8.0),
            (5, 609.0 / 128.0),
            (6, -315.0 / 256.0),
            (7, -51.0 / 256.0),
            (8, -63.0 / 256.0),
            (9, 1701.0 / 8192.0),
        ],
    }
}

/// Closed form of the seven-qubit fidelity at ε = 0.
pub fn css_seven_closed_form(gamma: f64) -> f64 {
    let s = 1.0 - gamma;
    let a = ((1.0 + 7.0 * s.powi(4)) / 8.0).sqrt() + ((s.powi(7) + 7.0 * s.powi(3)) / 8.0).sqrt();
    let b = (4.0 * gamma * s.powi(3) / 8.0).sqrt() + ((gamma * s.powi(6) + 3.0 * gamma * s * s) / 8.0).sqrt();
    0.25 * a * a + 1.75 * b * b
}

/// Full-summation fidelity polynomial of the nine-qubit Shor code at ε = 0.
pub fn shor_nine_polynomial() -> ReferencePolynomial {
    ReferencePolynomial {
        code: CodeName::ShorNine.as_str().into(),
        variable: "gamma".into(),
        terms: vec![
            (0, 1.0),
            (3, -3.0 / 2.0),
            (4, -135.0 / 8.0),
            (5, 513.0 / 8.0),
            (6, -201.0 / 2.0),
            (7, 675.0 / 8.0),
            (8, -297.0 / 8.0),
            (9, 53.0 / 8.0),
        ],
    }
}

/// Truncated reference expansion 1 − γ2·γ² − γ3·γ³ − ε2·ε² − εγ·εγ, with missing terms omitted.
pub fn reference_series(r: &ReferenceCoefficients, gamma: f64, epsilon: f64) -> f64 {
    1.0 - r.gamma2 * gamma * gamma
        - r.gamma3.unwrap_or(0.0) * gamma.powi(3)
        - r.eps2.unwrap_or(0.0) * epsilon * epsilon
        - r.eps_gamma.unwrap_or(0.0) * epsilon * gamma
}
