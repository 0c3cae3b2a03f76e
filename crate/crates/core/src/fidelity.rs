//! Entanglement fidelity of recovery ∘ channel on the code space.
//!
//! F = (1/K²) Σ_A [ Σ_r |Σᵢ ⟨v_rⁱ|A|i⟩|² + |Σᵢ ⟨i|Ô A|i⟩|² ], summed over
//! error words weight-major in lexicographic order. Words are processed in
//! fixed chunks whose partial sums are reduced in chunk order, so results do
//! not depend on the number of worker threads.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{
    errors_of_weight, map_basis, nonzero_digits, weight_distribution, ChannelError, ErrorIndex, GadParams, KrausTable,
};
use crate::codes::QuantumCode;
use crate::linalg::C64;
use crate::recovery::{build_recovery, CorrectableSet, RecoveryError, RecoveryOptions, RecoverySet};

pub const CHUNK: usize = 1024;
/// Upper bound on the entries of the conjugated recovery table.
pub const MAX_TABLE_ENTRIES: usize = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FidelityError {
    #[error("recovery acts on {recovery} qubits, code has {code}")]
    QubitMismatch { code: usize, recovery: usize },
    #[error("max_weight {max_weight} exceeds block length {n}")]
    MaxWeight { n: usize, max_weight: usize },
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error("recovery table would hold {0} entries")]
    TableTooLarge(usize),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

pub type Result<T> = std::result::Result<T, FidelityError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityMode {
    Full,
    Truncated { max_weight: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityResult {
    pub value: f64,
    /// Contribution of each summed weight.
    pub per_weight: Vec<(usize, f64)>,
    /// Probability mass of the weights left out.
    pub remainder_bound: f64,
    pub mode: FidelityMode,
}

/// Conjugated recovery vectors laid out as table[i][out · cols + c], with the Ô images as the last column.
struct Kernel {
    k: usize,
    cols: usize,
    table: Vec<Vec<C64>>,
    codewords: Vec<Vec<(usize, C64)>>,
    amps: KrausTable,
}

impl Kernel {
    fn new(code: &QuantumCode, recovery: &RecoverySet, params: GadParams) -> Result<Self> {
        let k = code.k_dim();
        let dim = code.dim();
        let cols = recovery.operators().len() + 1;
        let entries = k * dim * cols;
        if entries > MAX_TABLE_ENTRIES {
            return Err(FidelityError::TableTooLarge(entries));
        }
        let mut table = vec![vec![C64::new(0.0, 0.0); dim * cols]; k];
        for (c, op) in recovery.operators().iter().enumerate() {
            for (i, v) in op.vectors.iter().enumerate() {
                for &(idx, a) in v.terms() {
                    table[i][idx * cols + c] = a.conj();
                }
            }
        }
        for (i, o) in recovery.ohat_images().iter().enumerate() {
            for &(idx, a) in o.terms() {
                table[i][idx * cols + cols - 1] = a.conj();
            }
        }
        Ok(Self {
            k,
            cols,
            table,
            codewords: code.codewords().iter().map(|c| c.terms().to_vec()).collect(),
            amps: KrausTable::amplitudes(params),
        })
    }

    /// Σ over recovery columns of |Σᵢ ⟨colᵢ|A|i⟩|², without the 1/K² factor.
    fn error_terms(&self, err: ErrorIndex, acc: &mut [C64]) -> f64 {
        acc.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        let mut touched = false;
        for (i, word) in self.codewords.iter().enumerate() {
            let row = &self.table[i];
            for &(idx, amp) in word {
                if let Some((out, f)) = map_basis(err, &self.amps, idx) {
                    touched = true;
                    let z = amp * f;
                    let slice = &row[out * self.cols..(out + 1) * self.cols];
                    for (a, t) in acc.iter_mut().zip(slice) {
                        *a += z * t;
                    }
                }
            }
        }
        if !touched {
            return 0.0;
        }
        acc.iter().map(|a| a.norm_sqr()).sum()
    }

    fn ohat_term(&self, err: ErrorIndex) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for (i, word) in self.codewords.iter().enumerate() {
            for &(idx, amp) in word {
                if let Some((out, f)) = map_basis(err, &self.amps, idx) {
                    acc += amp * f * self.table[i][out * self.cols + self.cols - 1];
                }
            }
        }
        acc.norm_sqr()
    }

    fn sum(&self, errors: &[ErrorIndex]) -> f64 {
        let partials: Vec<f64> = errors
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![C64::new(0.0, 0.0); self.cols];
                chunk.iter().map(|&e| self.error_terms(e, &mut acc)).sum::<f64>()
            })
            .collect();
        let kk = (self.k * self.k) as f64;
        partials.iter().sum::<f64>() / kk
    }
}

fn check_inputs(code: &QuantumCode, recovery: &RecoverySet, params: GadParams) -> Result<()> {
    if recovery.n() != code.n() {
        return Err(FidelityError::QubitMismatch { code: code.n(), recovery: recovery.n() });
    }
    recovery.check_params(params)?;
    Ok(())
}

/// Default truncation weight: min(n, 4).
pub fn default_max_weight(n: usize) -> usize {
    n.min(4)
}

/// Entanglement fidelity under `recovery`, summed over error weights up to
/// `max_weight` (all weights when `None`).
pub fn entanglement_fidelity(
    code: &QuantumCode,
    recovery: &RecoverySet,
    params: GadParams,
    max_weight: Option<usize>,
) -> Result<FidelityResult> {
    check_inputs(code, recovery, params)?;
    let n = code.n();
    let w = max_weight.unwrap_or(n);
    if w > n {
        return Err(FidelityError::MaxWeight { n, max_weight: w });
    }
    let kernel = Kernel::new(code, recovery, params)?;
    let digits = nonzero_digits(params);
    let mut per_weight = Vec::with_capacity(w + 1);
    for q in 0..=w {
        let errors = errors_of_weight(n, q, &digits)?;
        per_weight.push((q, kernel.sum(&errors)));
    }
    let value = per_weight.iter().map(|p| p.1).sum();
    let dist = weight_distribution(code, params);
    let remainder_bound = dist.iter().skip(w + 1).sum::<f64>().max(0.0);
    let mode = if w == n { FidelityMode::Full } else { FidelityMode::Truncated { max_weight: w } };
    Ok(FidelityResult { value, per_weight, remainder_bound, mode })
}

/// Contribution of a single error word to the fidelity, all recovery operators included.
pub fn error_contribution(code: &QuantumCode, recovery: &RecoverySet, err: ErrorIndex, params: GadParams) -> Result<f64> {
    check_inputs(code, recovery, params)?;
    let kernel = Kernel::new(code, recovery, params)?;
    let mut acc = vec![C64::new(0.0, 0.0); kernel.cols];
    let k = code.k_dim() as f64;
    Ok(kernel.error_terms(err, &mut acc) / (k * k))
}

/// The Ô term (1/K²)|Σᵢ ⟨i|Ô A|i⟩|² of a single error word.
pub fn ohat_contribution(code: &QuantumCode, recovery: &RecoverySet, err: ErrorIndex, params: GadParams) -> Result<f64> {
    check_inputs(code, recovery, params)?;
    let kernel = Kernel::new(code, recovery, params)?;
    let k = code.k_dim() as f64;
    Ok(kernel.ohat_term(err) / (k * k))
}

/// Fidelity of n unprotected qubits: (1/N²) Σ_k |Tr A_k|² over the n-fold channel.
///
/// Traces factor over qubits, so the sum is the n-th power of the single-qubit sum.
pub fn fidelity_no_qec(params: GadParams, n_qubits: usize) -> f64 {
    let table = KrausTable::amplitudes(params);
    let single: f64 = (0..4u8)
        .map(|d| {
            let tr: f64 = (0..2u8)
                .map(|b| {
                    let (a, out) = table.act(d, b);
                    if out == b {
                        a
                    } else {
                        0.0
                    }
                })
                .sum();
            tr * tr
        })
        .sum::<f64>()
        / 4.0;
    single.powi(n_qubits as i32)
}

/// F^{1/log₂K}.
pub fn normalized_fidelity(f: f64, k_dim: usize) -> f64 {
    f.powf(1.0 / (k_dim as f64).log2())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsRule {
    Fixed(f64),
    /// ε = c·γ.
    Proportional(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepGrid {
    pub gammas: Vec<f64>,
    pub rule: EpsRule,
}

impl SweepGrid {
    /// `count` evenly spaced values from `start` to `end` inclusive.
    pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..count).map(|i| start + (end - start) * i as f64 / (count - 1) as f64).collect(),
        }
    }

    pub fn points(&self) -> Result<Vec<GadParams>> {
        if self.gammas.is_empty() {
            return Err(FidelityError::InvalidGrid("no gamma values".into()));
        }
        self.gammas
            .iter()
            .map(|&g| {
                let eps = match self.rule {
                    EpsRule::Fixed(e) => e,
                    EpsRule::Proportional(c) => c * g,
                };
                GadParams::new(g, eps).map_err(|e| FidelityError::InvalidGrid(e.to_string()))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub code: String,
    pub gamma: f64,
    pub epsilon: f64,
    pub max_weight: usize,
    pub fidelity: f64,
    pub remainder_bound: f64,
}

/// Fidelity at each point, rebuilding the recovery per point.
pub fn run_points(
    code: &QuantumCode,
    set: &CorrectableSet,
    points: &[GadParams],
    max_weight: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let w = max_weight.unwrap_or_else(|| default_max_weight(code.n()));
    points
        .iter()
        .map(|&params| {
            let recovery = build_recovery(code, set, params, RecoveryOptions::default())?;
            let f = entanglement_fidelity(code, &recovery, params, Some(w))?;
            Ok(SweepRow {
                code: code.name().to_string(),
                gamma: params.gamma(),
                epsilon: params.epsilon(),
                max_weight: w,
                fidelity: f.value,
                remainder_bound: f.remainder_bound,
            })
        })
        .collect()
}

pub fn run_sweep(
    code: &QuantumCode,
    set: &CorrectableSet,
    grid: &SweepGrid,
    max_weight: Option<usize>,
) -> Result<Vec<SweepRow>> {
    run_points(code, set, &grid.points()?, max_weight)
}
