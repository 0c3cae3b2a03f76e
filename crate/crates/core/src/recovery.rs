//! Correctable sets, approximate Knill–Laflamme recovery, diagnostics and the
//! transpose-channel recovery.
//!
//! A recovery operator for error A is stored as the pairs (i, |vᵢ⟩) with
//! R = Σᵢ |i⟩⟨vᵢ|; it is never expanded into a 2ⁿ × 2ⁿ matrix.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::channel::{apply_with_table, errors_of_weight, ChannelError, ErrorIndex, GadParams, KrausTable};
use crate::codes::{CodeName, QuantumCode};
use crate::linalg::{
    gram_schmidt_complete, hermitian_eig, inner, inv_sqrt_psd, orthonormality_defect, DenseMatrix, LinalgError,
    SparseState, C64,
};

pub const ORTHO_TOL: f64 = 1e-8;
pub const NORM_TOL: f64 = 1e-12;
/// Smallest Gram eigenvalue for a block of images to count as full rank.
pub const RANK_TOL: f64 = 1e-8;
/// Residual norm below which an image lies inside the span already recovered.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Offset used in place of the γ = 1 endpoint, where some images vanish.
pub const ENDPOINT_OFFSET: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("no default correctable set for code '{0}'")]
    UnknownCode(String),
    #[error("error {error} annihilates codeword {codeword} (norm {norm:e})")]
    VanishingImage { error: ErrorIndex, codeword: usize, norm: f64 },
    #[error("images of {error} overlap those of {other} by {overlap:e}, above the orthogonality tolerance")]
    Orthogonality { error: ErrorIndex, other: ErrorIndex, overlap: f64 },
    #[error("error {error} acts on {got} qubits, code has {n}")]
    ErrorLength { error: ErrorIndex, n: usize, got: usize },
    #[error("recovery was built at (gamma {built_gamma}, epsilon {built_epsilon}), evaluation requested at (gamma {gamma}, epsilon {epsilon})")]
    ParamsMismatch { built_gamma: f64, built_epsilon: f64, gamma: f64, epsilon: f64 },
    #[error("corrupted codespace has rank zero")]
    RankDeficient,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, RecoveryError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionReason {
    OverlapWithWeightZero,
    IncompatiblePair,
    Truncated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    Gad,
    AdOnly,
}

/// Errors that receive dedicated recovery operators, and those left out.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectableSet {
    pub code: String,
    pub accepted: Vec<ErrorIndex>,
    pub excluded: Vec<(ErrorIndex, ExclusionReason)>,
}

impl CorrectableSet {
    /// Keeps only accepted errors of weight at most `max_weight`.
    pub fn restricted_to_weight(&self, max_weight: usize) -> Self {
        Self {
            code: self.code.clone(),
            accepted: self.accepted.iter().copied().filter(|e| e.weight() <= max_weight).collect(),
            excluded: self.excluded.clone(),
        }
    }

    /// Accepted errors with `err` removed, for ablation studies.
    pub fn without(&self, err: ErrorIndex) -> Self {
        Self { accepted: self.accepted.iter().copied().filter(|&e| e != err).collect(), ..self.clone() }
    }

    /// Accepted errors with `err` appended.
    pub fn with_forced(&self, err: ErrorIndex) -> Self {
        let mut accepted = self.accepted.clone();
        accepted.push(err);
        Self { accepted, excluded: self.excluded.iter().copied().filter(|(e, _)| *e != err).collect(), ..self.clone() }
    }

    pub fn excluded_indices(&self) -> Vec<ErrorIndex> {
        self.excluded.iter().map(|(e, _)| *e).collect()
    }
}

fn word(s: &str) -> ErrorIndex {
    s.parse().expect("static error literal")
}

fn singles(n: usize, digit: u8) -> Vec<ErrorIndex> {
    errors_of_weight(n, 1, &[digit]).expect("valid size")
}

fn a1_words(n: usize, q: usize) -> Vec<ErrorIndex> {
    errors_of_weight(n, q, &[1]).expect("valid size")
}

fn tagged(errs: Vec<ErrorIndex>, reason: ExclusionReason) -> Vec<(ErrorIndex, ExclusionReason)> {
    errs.into_iter().map(|e| (e, reason)).collect()
}

/// The correctable set used for each registry code.
pub fn default_correctable_set(code: CodeName, regime: Regime) -> CorrectableSet {
    use ExclusionReason::*;
    let n = match code {
        CodeName::FiveQubit => 5,
        CodeName::CssSeven => 7,
        CodeName::SixDegenerate | CodeName::Nonadd6_5 => 6,
        CodeName::ShorNine | CodeName::Nonadd9_12_3 => 9,
        CodeName::EightConcat | CodeName::Nonadd8_12 | CodeName::Gottesman833 => 8,
        CodeName::LeungFour => 4,
        CodeName::Nonadd11_2_3 => 11,
    };
    let identity = ErrorIndex::identity(n).expect("valid size");
    let mut accepted = vec![identity];
    let mut excluded = Vec::new();
    let weight_one_ad_and_excitation = |accepted: &mut Vec<ErrorIndex>, excluded: &mut Vec<_>| {
        accepted.extend(singles(n, 1));
        accepted.extend(singles(n, 3));
        excluded.extend(tagged(singles(n, 2), OverlapWithWeightZero));
    };
    match code {
        CodeName::FiveQubit => {
            weight_one_ad_and_excitation(&mut accepted, &mut excluded);
            excluded.extend(tagged(a1_words(5, 2), IncompatiblePair));
        }
        CodeName::CssSeven | CodeName::Nonadd11_2_3 | CodeName::Nonadd9_12_3 => {
            weight_one_ad_and_excitation(&mut accepted, &mut excluded);
        }
        CodeName::EightConcat => {
            weight_one_ad_and_excitation(&mut accepted, &mut excluded);
            let bad: Vec<ErrorIndex> = [
                "11000000", "10100000", "01010000", "00110000", "00001100", "00001010", "00000101", "00000011",
            ]
            .iter()
            .map(|s| word(s))
            .collect();
            accepted.extend(a1_words(8, 2).into_iter().filter(|e| !bad.contains(e)));
            excluded.extend(tagged(bad, IncompatiblePair));
        }
        CodeName::SixDegenerate => {
            weight_one_ad_and_excitation(&mut accepted, &mut excluded);
            accepted.extend(
                ["100100", "100001", "010100", "010001", "001100", "001001", "000110", "000011"].iter().map(|s| word(s)),
            );
            excluded.extend(tagged(
                ["110000", "100010", "011000", "001010", "000101"].iter().map(|s| word(s)).collect(),
                IncompatiblePair,
            ));
            excluded.extend(tagged(["101000", "010010"].iter().map(|s| word(s)).collect(), OverlapWithWeightZero));
        }
        CodeName::ShorNine => {
            weight_one_ad_and_excitation(&mut accepted, &mut excluded);
            accepted.extend(a1_words(9, 2));
            let bad: Vec<ErrorIndex> = ["111000000", "000111000", "000000111"].iter().map(|s| word(s)).collect();
            accepted.extend(a1_words(9, 3).into_iter().filter(|e| !bad.contains(e)));
            excluded.extend(tagged(bad, IncompatiblePair));
        }
        CodeName::Nonadd6_5 | CodeName::Nonadd8_12 | CodeName::Gottesman833 | CodeName::LeungFour => {
            accepted.extend(singles(n, 1));
            excluded.extend(tagged(singles(n, 2), Truncated));
            excluded.extend(tagged(singles(n, 3), Truncated));
        }
    }
    if regime == Regime::AdOnly {
        accepted.retain(|e| e.uses_only(&[1]));
        excluded.retain(|(e, _)| e.uses_only(&[1]));
    }
    CorrectableSet { code: code.as_str().to_string(), accepted, excluded }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BuildMode {
    /// Löwdin-orthonormalize each error's images, project out earlier errors,
    /// and skip errors whose images are already recovered.
    Polar,
    /// Use the normalized images as they are and fail when any two overlap beyond the tolerance.
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecoveryOptions {
    pub mode: BuildMode,
    pub ortho_tol: f64,
    pub norm_tol: f64,
    /// Build operators for errors whose Kraus prefactor vanishes at these parameters,
    /// using the direction of their images in the limit.
    pub include_zero_amplitude: bool,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self { mode: BuildMode::Polar, ortho_tol: ORTHO_TOL, norm_tol: NORM_TOL, include_zero_amplitude: false }
    }
}

impl RecoveryOptions {
    pub fn strict() -> Self {
        Self { mode: BuildMode::Strict, include_zero_amplitude: true, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    /// The Kraus prefactor is zero at these parameters.
    ZeroAmplitude,
    /// Every image already lies in the span of earlier recovery vectors.
    Degenerate,
    /// Some, but not all, images lie in the span of earlier recovery vectors.
    PartiallyDegenerate,
    /// The images of distinct codewords are linearly dependent.
    RankDeficient,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedError {
    pub error: ErrorIndex,
    pub reason: SkipReason,
}

/// One recovery operator R = Σᵢ |i⟩⟨vᵢ|.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryOperator {
    pub error: Option<ErrorIndex>,
    pub vectors: Vec<SparseState>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RecoveryKind {
    KnillLaflamme,
    TransposeChannel,
}

/// A trace-preserving recovery {R_r} ∪ {Ô} built at one channel point.
#[derive(Debug)]
pub struct RecoverySet {
    kind: RecoveryKind,
    n: usize,
    params: GadParams,
    operators: Vec<RecoveryOperator>,
    skipped: Vec<SkippedError>,
    /// Ô|i⟩ for each codeword.
    ohat_images: Vec<SparseState>,
    ohat_basis: OnceLock<std::result::Result<Vec<SparseState>, LinalgError>>,
}

impl RecoverySet {
    pub fn kind(&self) -> RecoveryKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> GadParams {
        self.params
    }

    pub fn operators(&self) -> &[RecoveryOperator] {
        &self.operators
    }

    pub fn skipped(&self) -> &[SkippedError] {
        &self.skipped
    }

    /// Ô applied to each codeword.
    pub fn ohat_images(&self) -> &[SparseState] {
        &self.ohat_images
    }

    /// All recovery vectors, operator-major.
    pub fn recovery_vectors(&self) -> impl Iterator<Item = &SparseState> {
        self.operators.iter().flat_map(|op| op.vectors.iter())
    }

    /// Orthonormal basis {|o_b⟩} of the complement of the recovery vectors, computed on first use.
    pub fn ohat_basis(&self) -> std::result::Result<&[SparseState], LinalgError> {
        let cached = self.ohat_basis.get_or_init(|| {
            let given: Vec<SparseState> = self.recovery_vectors().cloned().collect();
            let tol = match self.kind {
                RecoveryKind::KnillLaflamme => ORTHO_TOL,
                RecoveryKind::TransposeChannel => 1e-6,
            };
            gram_schmidt_complete(&given, 1 << self.n, tol)
        });
        cached.as_deref().map_err(Clone::clone)
    }

    /// Deviation of Σ R†R + Ô†Ô from the identity.
    ///
    /// Both sums are projectors onto spans of the stored vectors, so the
    /// deviation is measured on the union of recovery vectors and the Ô basis:
    /// entrywise on the dense sum for up to 256 dimensions, and through the
    /// Gram matrix of the (square) vector family beyond that.
    pub fn trace_preservation_defect(&self) -> std::result::Result<f64, LinalgError> {
        let dim = 1usize << self.n;
        let mut all: Vec<SparseState> = self.recovery_vectors().cloned().collect();
        let ohat_start = all.len();
        all.extend(self.ohat_basis()?.iter().cloned());
        if self.kind == RecoveryKind::TransposeChannel {
            return Ok(self.projector_defect(&all[..ohat_start], &all[ohat_start..]));
        }
        if all.len() != dim {
            return Ok(f64::INFINITY);
        }
        if dim <= 256 {
            let mut sum = vec![C64::new(0.0, 0.0); dim * dim];
            for v in &all {
                for &(i, a) in v.terms() {
                    for &(j, b) in v.terms() {
                        sum[i * dim + j] += a * b.conj();
                    }
                }
            }
            let mut worst: f64 = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((sum[i * dim + j] - target).norm());
                }
            }
            Ok(worst)
        } else {
            orthonormality_defect(&all)
        }
    }

    /// Entrywise deviation of Σ|r⟩⟨r| + Σ|o⟩⟨o| from I for a non-orthonormal recovery family.
    fn projector_defect(&self, recovery: &[SparseState], ohat: &[SparseState]) -> f64 {
        let dim = 1usize << self.n;
        let mut sum = vec![C64::new(0.0, 0.0); dim * dim];
        for v in recovery.iter().chain(ohat) {
            for &(i, a) in v.terms() {
                for &(j, b) in v.terms() {
                    sum[i * dim + j] += a * b.conj();
                }
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((sum[i * dim + j] - target).norm());
            }
        }
        worst
    }

    /// Checks that this recovery was built at `params`.
    pub fn check_params(&self, params: GadParams) -> Result<()> {
        if self.params != params {
            return Err(RecoveryError::ParamsMismatch {
                built_gamma: self.params.gamma(),
                built_epsilon: self.params.epsilon(),
                gamma: params.gamma(),
                epsilon: params.epsilon(),
            });
        }
        Ok(())
    }
}

fn check_length(err: ErrorIndex, n: usize) -> Result<()> {
    if err.n() != n {
        return Err(RecoveryError::ErrorLength { error: err, n, got: err.n() });
    }
    Ok(())
}

fn to_dense(v: &SparseState) -> Vec<C64> {
    v.to_dense()
}

fn dense_dot(q: &SparseState, r: &[C64]) -> C64 {
    q.terms().iter().map(|&(i, a)| a.conj() * r[i]).sum()
}

/// Gram matrix ⟨bᵢ|bⱼ⟩ of a family of sparse vectors.
fn gram(vs: &[SparseState]) -> Result<DenseMatrix> {
    let k = vs.len();
    let mut g = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let z = inner(&vs[i], &vs[j])?;
            g.set(i, j, z);
            g.set(j, i, z.conj());
        }
    }
    Ok(g)
}

/// wᵢ = Σⱼ bⱼ Lⱼᵢ.
fn combine(vs: &[SparseState], l: &DenseMatrix) -> Result<Vec<SparseState>> {
    let dim = vs[0].dim();
    (0..l.cols())
        .map(|i| {
            let terms = vs.iter().enumerate().flat_map(|(j, v)| {
                let c = l.get(j, i);
                v.terms().iter().map(move |&(idx, a)| (idx, a * c))
            });
            Ok(SparseState::from_terms(dim, terms.collect::<Vec<_>>())?)
        })
        .collect()
}

/// Smallest eigenvalue of a Gram matrix.
fn min_eigenvalue(g: &DenseMatrix) -> Result<f64> {
    Ok(hermitian_eig(g)?.0.last().copied().unwrap_or(0.0))
}

/// Normalized images of the codewords under `err` with unit-prefactor Kraus shapes.
pub fn shape_images(code: &QuantumCode, err: ErrorIndex, gamma: f64, norm_tol: f64) -> Result<Vec<SparseState>> {
    check_length(err, code.n())?;
    let table = KrausTable::shapes(gamma);
    code.codewords()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let img = apply_with_table(err, &table, c)?;
            let norm = img.norm();
            if norm < norm_tol {
                return Err(RecoveryError::VanishingImage { error: err, codeword: i, norm });
            }
            Ok(img.scaled(C64::new(1.0 / norm, 0.0)))
        })
        .collect()
}

/// Accepted errors sorted by decreasing probability on the code space; ties keep list order.
///
/// When two accepted errors map the code space onto the same subspace only one
/// of them can own it, and it goes to the more likely error.
fn build_order(code: &QuantumCode, accepted: &[ErrorIndex], params: GadParams) -> Result<Vec<ErrorIndex>> {
    let table = KrausTable::amplitudes(params);
    let mut keyed = Vec::with_capacity(accepted.len());
    for &err in accepted {
        check_length(err, code.n())?;
        let mut prob = 0.0;
        for c in code.codewords() {
            prob += apply_with_table(err, &table, c)?.norm_sqr();
        }
        keyed.push((err, prob));
    }
    keyed.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(keyed.into_iter().map(|k| k.0).collect())
}

fn has_zero_amplitude(err: ErrorIndex, params: GadParams) -> bool {
    (0..err.n()).any(|q| KrausTable::prefactor(err.digit(q), params) == 0.0)
}

/// Builds the approximate Knill–Laflamme recovery for `set` at `params`.
pub fn build_recovery(
    code: &QuantumCode,
    set: &CorrectableSet,
    params: GadParams,
    options: RecoveryOptions,
) -> Result<RecoverySet> {
    let n = code.n();
    let dim = code.dim();
    let shape_gamma = if params.gamma() >= 1.0 { 1.0 - ENDPOINT_OFFSET } else { params.gamma() };
    let mut operators: Vec<RecoveryOperator> = Vec::new();
    let mut skipped = Vec::new();
    let mut basis: Vec<SparseState> = Vec::new();
    let mut owner: Vec<ErrorIndex> = Vec::new();

    for err in build_order(code, &set.accepted, params)? {
        if !options.include_zero_amplitude && has_zero_amplitude(err, params) {
            skipped.push(SkippedError { error: err, reason: SkipReason::ZeroAmplitude });
            continue;
        }
        let images = shape_images(code, err, shape_gamma, options.norm_tol)?;
        match options.mode {
            BuildMode::Strict => {
                for (a, v) in images.iter().enumerate() {
                    for (b, w) in images.iter().enumerate().skip(a + 1) {
                        let overlap = inner(v, w)?.norm();
                        if overlap > options.ortho_tol {
                            let _ = b;
                            return Err(RecoveryError::Orthogonality { error: err, other: err, overlap });
                        }
                    }
                    for (q, other) in basis.iter().zip(&owner) {
                        let overlap = inner(q, v)?.norm();
                        if overlap > options.ortho_tol {
                            return Err(RecoveryError::Orthogonality { error: err, other: *other, overlap });
                        }
                    }
                }
                for v in &images {
                    basis.push(v.clone());
                    owner.push(err);
                }
                operators.push(RecoveryOperator { error: Some(err), vectors: images });
            }
            BuildMode::Polar => {
                let g = gram(&images)?;
                if min_eigenvalue(&g)? < RANK_TOL {
                    skipped.push(SkippedError { error: err, reason: SkipReason::RankDeficient });
                    continue;
                }
                let block = combine(&images, &inv_sqrt_psd(&g, RANK_TOL)?)?;
                let mut residuals = Vec::with_capacity(block.len());
                for w in &block {
                    let mut r = to_dense(w);
                    for _pass in 0..2 {
                        for q in &basis {
                            let c = dense_dot(q, &r);
                            if c.norm() == 0.0 {
                                continue;
                            }
                            for &(i, a) in q.terms() {
                                r[i] -= c * a;
                            }
                        }
                    }
                    residuals.push(SparseState::from_dense(&r));
                }
                let norms: Vec<f64> = residuals.iter().map(SparseState::norm).collect();
                let small = norms.iter().filter(|&&x| x < DEGENERACY_TOL).count();
                if small == norms.len() {
                    skipped.push(SkippedError { error: err, reason: SkipReason::Degenerate });
                    continue;
                }
                if small > 0 {
                    skipped.push(SkippedError { error: err, reason: SkipReason::PartiallyDegenerate });
                    continue;
                }
                let g = gram(&residuals)?;
                if min_eigenvalue(&g)? < RANK_TOL {
                    skipped.push(SkippedError { error: err, reason: SkipReason::RankDeficient });
                    continue;
                }
                let vectors = combine(&residuals, &inv_sqrt_psd(&g, RANK_TOL)?)?;
                for v in &vectors {
                    basis.push(v.clone());
                    owner.push(err);
                }
                operators.push(RecoveryOperator { error: Some(err), vectors });
            }
        }
    }

    let ohat_images = complement_images(code, &basis, dim);
    Ok(RecoverySet {
        kind: RecoveryKind::KnillLaflamme,
        n,
        params,
        operators,
        skipped,
        ohat_images,
        ohat_basis: OnceLock::new(),
    })
}

/// Ô|i⟩ = |i⟩ − Σ_v |v⟩⟨v|i⟩ for an orthonormal family v.
fn complement_images(code: &QuantumCode, basis: &[SparseState], dim: usize) -> Vec<SparseState> {
    code.codewords()
        .iter()
        .map(|c| {
            let mut r = vec![C64::new(0.0, 0.0); dim];
            for &(i, a) in c.terms() {
                r[i] = a;
            }
            for q in basis {
                let coeff = inner(q, c).expect("matching dimension");
                if coeff.norm() == 0.0 {
                    continue;
                }
                for &(i, a) in q.terms() {
                    r[i] -= coeff * a;
                }
            }
            SparseState::from_dense(&r)
        })
        .collect()
}

/// Builds the default recovery for a registry code.
pub fn build_default_recovery(code: &QuantumCode, name: CodeName, params: GadParams) -> Result<RecoverySet> {
    build_recovery(code, &default_correctable_set(name, Regime::Gad), params, RecoveryOptions::default())
}

/// Transpose-channel recovery R_k = P_C A_k† Λ(P_C)^{−1/2} over the given errors.
///
/// With B the matrix whose columns are the corrupted codewords A_k|i⟩ and
/// G = B†B, Λ(P_C)^{−1/2} B = B G^{−1/2}, so each operator is again
/// Σᵢ |i⟩⟨r_kⁱ| with r_kⁱ = Σ_b B_b (G^{−1/2})_{b,(k,i)}. The complement
/// I − Σ_k R_k†R_k is the projector onto the orthogonal complement of range(B).
pub fn transpose_channel_recovery(
    code: &QuantumCode,
    errors: &[ErrorIndex],
    params: GadParams,
    rank_tol: f64,
) -> Result<RecoverySet> {
    let n = code.n();
    let k = code.k_dim();
    let table = KrausTable::amplitudes(params);
    let mut columns = Vec::with_capacity(errors.len() * k);
    for &err in errors {
        check_length(err, n)?;
        for c in code.codewords() {
            columns.push(apply_with_table(err, &table, c)?);
        }
    }
    let g = gram(&columns)?;
    let (values, _) = hermitian_eig(&g)?;
    if values.first().map_or(true, |&v| v < rank_tol) {
        return Err(RecoveryError::RankDeficient);
    }
    let l = inv_sqrt_psd(&g, rank_tol)?;
    let r = combine(&columns, &l)?;
    let operators = errors
        .iter()
        .enumerate()
        .map(|(e, &err)| RecoveryOperator { error: Some(err), vectors: r[e * k..(e + 1) * k].to_vec() })
        .collect();
    // Orthonormal basis of range(B) from the eigenvectors of G with nonnegligible eigenvalues.
    let (vals, vecs) = hermitian_eig(&g)?;
    let mut range_basis = Vec::new();
    for (j, &lam) in vals.iter().enumerate() {
        if lam < rank_tol {
            continue;
        }
        let mut col = DenseMatrix::zeros(vals.len(), 1);
        for b in 0..vals.len() {
            col.set(b, 0, vecs.get(b, j) / lam.sqrt());
        }
        range_basis.extend(combine(&columns, &col)?);
    }
    let ohat_images = complement_images(code, &range_basis, code.dim());
    let set = RecoverySet {
        kind: RecoveryKind::TransposeChannel,
        n,
        params,
        operators,
        skipped: Vec::new(),
        ohat_images,
        ohat_basis: OnceLock::new(),
    };
    let completion = gram_schmidt_complete(&range_basis, code.dim(), 1e-6);
    let _ = set.ohat_basis.set(completion);
    Ok(set)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KlPair {
    pub l: ErrorIndex,
    pub m: ErrorIndex,
    /// Largest |⟨i|A_l†A_m|j⟩| over entries that exact correction requires to vanish.
    pub max_off_diagonal: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KlSingle {
    pub error: ErrorIndex,
    /// ⟨i|A†A|i⟩ for each codeword.
    pub diagonal: Vec<f64>,
    /// max − min of the diagonal.
    pub diagonal_spread: f64,
    /// Square root of the largest eigenvalue of the restricted A†A.
    pub p: f64,
    /// Ratio of the square roots of the smallest and largest eigenvalues.
    pub lambda: f64,
    /// p − λp, the size of the deformation.
    pub residue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KlReport {
    pub pairs: Vec<KlPair>,
    pub singles: Vec<KlSingle>,
}

impl KlReport {
    pub fn max_off_diagonal(&self) -> f64 {
        self.pairs.iter().map(|p| p.max_off_diagonal).fold(0.0, f64::max)
    }

    pub fn max_diagonal_spread(&self) -> f64 {
        self.singles.iter().map(|s| s.diagonal_spread).fold(0.0, f64::max)
    }
}

/// Evaluates the Knill–Laflamme matrices ⟨i|A_l†A_m|j⟩ on the codespace.
pub fn check_kl_conditions(code: &QuantumCode, errors: &[ErrorIndex], params: GadParams) -> Result<KlReport> {
    let table = KrausTable::amplitudes(params);
    let k = code.k_dim();
    let images: Vec<Vec<SparseState>> = errors
        .iter()
        .map(|&e| {
            check_length(e, code.n())?;
            code.codewords().iter().map(|c| Ok(apply_with_table(e, &table, c)?)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    let mut singles = Vec::new();
    for (a, la) in images.iter().enumerate() {
        for (b, mb) in images.iter().enumerate().skip(a) {
            let mut worst: f64 = 0.0;
            let mut block = DenseMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    let z = inner(&la[i], &mb[j])?;
                    block.set(i, j, z);
                    if a != b || i != j {
                        worst = worst.max(z.norm());
                    }
                }
            }
            pairs.push(KlPair { l: errors[a], m: errors[b], max_off_diagonal: worst });
            if a == b {
                let diagonal: Vec<f64> = (0..k).map(|i| block.get(i, i).re).collect();
                let hi = diagonal.iter().copied().fold(f64::MIN, f64::max);
                let lo = diagonal.iter().copied().fold(f64::MAX, f64::min);
                let (vals, _) = hermitian_eig(&block)?;
                let lmax = vals.first().copied().unwrap_or(0.0).max(0.0);
                let lmin = vals.last().copied().unwrap_or(0.0).max(0.0);
                let p = lmax.sqrt();
                let lambda = if p > 0.0 { lmin.sqrt() / p } else { 0.0 };
                singles.push(KlSingle {
                    error: errors[a],
                    diagonal,
                    diagonal_spread: hi - lo,
                    p,
                    lambda,
                    residue: p - lambda * p,
                });
            }
        }
    }
    Ok(KlReport { pairs, singles })
}

/// Why the audit rejects a candidate error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditReason {
    VanishingImage,
    SelfOverlap,
    OverlapWithWeightZero,
    IncompatiblePair,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditFinding {
    pub error: ErrorIndex,
    pub reason: AuditReason,
    /// The accepted lower-weight error it collides with, if any.
    pub against: Option<ErrorIndex>,
    /// Largest normalized overlap at the first sample point.
    pub overlap: f64,
    /// Estimated power of γ with which that overlap vanishes.
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub code: String,
    pub candidate_count: usize,
    pub derived_accepted: Vec<ErrorIndex>,
    pub derived_excluded: Vec<AuditFinding>,
    /// Exclusions found at weights the static list makes no claim about.
    pub informational: Vec<AuditFinding>,
    pub static_excluded: Vec<(ErrorIndex, ExclusionReason)>,
    /// In the static list but not derived.
    pub missing: Vec<ErrorIndex>,
    /// Derived but not in the static list.
    pub unexpected: Vec<ErrorIndex>,
    /// Largest overlap among derived-accepted images at the first sample point.
    pub max_accepted_overlap: f64,
    pub kl: KlReport,
}

impl AuditReport {
    pub fn matches(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty()
    }
}

/// The two damping values at which overlap scaling is measured.
pub const AUDIT_GAMMAS: (f64, f64) = (1e-3, 2e-3);
const AUDIT_ZERO: f64 = 1e-13;

struct AuditScope {
    compared: Vec<usize>,
    informational: Vec<usize>,
}

fn audit_scope(code: CodeName) -> AuditScope {
    match code {
        CodeName::FiveQubit | CodeName::SixDegenerate | CodeName::EightConcat => {
            AuditScope { compared: vec![1, 2], informational: vec![] }
        }
        CodeName::ShorNine => AuditScope { compared: vec![1, 2, 3], informational: vec![] },
        CodeName::Nonadd9_12_3 => AuditScope { compared: vec![1], informational: vec![2] },
        _ => AuditScope { compared: vec![1], informational: vec![] },
    }
}

fn audit_candidates(n: usize, weight: usize) -> Vec<ErrorIndex> {
    if weight == 1 {
        let mut v = singles(n, 1);
        v.extend(singles(n, 2));
        v.extend(singles(n, 3));
        v
    } else {
        a1_words(n, weight)
    }
}

/// Largest |⟨aᵢ|bⱼ⟩| over (i, j), split by whether i = j.
fn max_overlaps(a: &[SparseState], b: &[SparseState], skip_diagonal: bool) -> Result<(f64, f64)> {
    let mut same: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for (i, u) in a.iter().enumerate() {
        for (j, w) in b.iter().enumerate() {
            if skip_diagonal && i == j {
                continue;
            }
            let o = inner(u, w)?.norm();
            if i == j {
                same = same.max(o);
            } else {
                cross = cross.max(o);
            }
        }
    }
    Ok((same, cross))
}

fn scaling_exponent(o1: f64, o2: f64) -> f64 {
    (o2 / o1).log2() * (AUDIT_GAMMAS.0 / (AUDIT_GAMMAS.1 - AUDIT_GAMMAS.0))
}

/// Re-derives the exclusion list of a registry code from overlaps of corrupted codewords.
///
/// Images are evaluated with unit-prefactor Kraus shapes at two small damping
/// values. A candidate is rejected when one of its images vanishes, when the
/// images of different codewords overlap without vanishing as γ → 0, or when
/// an image overlaps that of an accepted lower-weight error at an order in γ
/// lower than the weight difference.
pub fn audit_exclusions(name: CodeName, code: &QuantumCode, kl_params: GadParams) -> Result<AuditReport> {
    let n = code.n();
    let scope = audit_scope(name);
    let (g1, g2) = AUDIT_GAMMAS;
    let identity = ErrorIndex::identity(n)?;
    let mut accepted: Vec<(ErrorIndex, Vec<SparseState>, Vec<SparseState>)> =
        vec![(identity, shape_images(code, identity, g1, NORM_TOL)?, shape_images(code, identity, g2, NORM_TOL)?)];
    let mut excluded = Vec::new();
    let mut informational = Vec::new();
    let mut candidate_count = 0;
    let weights: Vec<(usize, bool)> = scope
        .compared
        .iter()
        .map(|&w| (w, true))
        .chain(scope.informational.iter().map(|&w| (w, false)))
        .collect();

    for (weight, compared) in weights {
        let mut newly_accepted = Vec::new();
        for err in audit_candidates(n, weight) {
            candidate_count += 1;
            let finding = audit_one(code, err, &accepted)?;
            match finding {
                Some(f) if compared => excluded.push(f),
                Some(f) => informational.push(f),
                None if compared => {
                    newly_accepted.push((err, shape_images(code, err, g1, NORM_TOL)?, shape_images(code, err, g2, NORM_TOL)?))
                }
                None => {}
            }
        }
        accepted.extend(newly_accepted);
    }

    let static_set = default_correctable_set(name, Regime::Gad);
    let static_excluded: Vec<(ErrorIndex, ExclusionReason)> =
        static_set.excluded.iter().copied().filter(|(_, r)| *r != ExclusionReason::Truncated).collect();
    let truncated: Vec<ErrorIndex> =
        static_set.excluded.iter().filter(|(_, r)| *r == ExclusionReason::Truncated).map(|(e, _)| *e).collect();
    let derived: Vec<ErrorIndex> =
        excluded.iter().map(|f: &AuditFinding| f.error).filter(|e| !truncated.contains(e)).collect();
    let static_idx: Vec<ErrorIndex> = static_excluded.iter().map(|(e, _)| *e).collect();
    let missing = static_idx.iter().copied().filter(|e| !derived.contains(e)).collect();
    let unexpected = derived.iter().copied().filter(|e| !static_idx.contains(e)).collect();

    let mut max_accepted_overlap: f64 = 0.0;
    for (a, (_, ia, _)) in accepted.iter().enumerate() {
        for (_, ib, _) in accepted.iter().skip(a + 1) {
            let (s, c) = max_overlaps(ia, ib, false)?;
            max_accepted_overlap = max_accepted_overlap.max(s.max(c));
        }
    }
    let low: Vec<ErrorIndex> = accepted.iter().map(|(e, _, _)| *e).filter(|e| e.weight() <= 1).collect();
    let kl = check_kl_conditions(code, &low, kl_params)?;
    Ok(AuditReport {
        code: name.as_str().to_string(),
        candidate_count,
        derived_accepted: accepted.iter().map(|(e, _, _)| *e).collect(),
        derived_excluded: excluded,
        informational,
        static_excluded,
        missing,
        unexpected,
        max_accepted_overlap,
        kl,
    })
}

fn audit_one(
    code: &QuantumCode,
    err: ErrorIndex,
    accepted: &[(ErrorIndex, Vec<SparseState>, Vec<SparseState>)],
) -> Result<Option<AuditFinding>> {
    let (g1, g2) = AUDIT_GAMMAS;
    let (im1, im2) = match (shape_images(code, err, g1, NORM_TOL), shape_images(code, err, g2, NORM_TOL)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(RecoveryError::VanishingImage { .. }), _) | (_, Err(RecoveryError::VanishingImage { .. })) => {
            return Ok(Some(AuditFinding {
                error: err,
                reason: AuditReason::VanishingImage,
                against: None,
                overlap: 0.0,
                exponent: f64::NAN,
            }));
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let (_, s1) = max_overlaps(&im1, &im1, true)?;
    let (_, s2) = max_overlaps(&im2, &im2, true)?;
    if s1 > AUDIT_ZERO && s2 > AUDIT_ZERO {
        let e = scaling_exponent(s1, s2);
        if e < 0.5 {
            return Ok(Some(AuditFinding { error: err, reason: AuditReason::SelfOverlap, against: None, overlap: s1, exponent: e }));
        }
    }
    for (a, a1, a2) in accepted {
        if a.weight() >= err.weight() {
            continue;
        }
        if exactly_degenerate(a1, &im1)? && exactly_degenerate(a2, &im2)? {
            continue;
        }
        let threshold = (err.weight() - a.weight()) as f64 + 0.5;
        for (i, u1) in a1.iter().enumerate() {
            for (j, w1) in im1.iter().enumerate() {
                let o1 = inner(u1, w1)?.norm();
                let o2 = inner(&a2[i], &im2[j])?.norm();
                if o1 <= AUDIT_ZERO || o2 <= AUDIT_ZERO {
                    continue;
                }
                let e = scaling_exponent(o1, o2);
                if e < threshold {
                    let reason = if i == j && a.weight() == 0 {
                        AuditReason::OverlapWithWeightZero
                    } else {
                        AuditReason::IncompatiblePair
                    };
                    return Ok(Some(AuditFinding { error: err, reason, against: Some(*a), overlap: o1, exponent: e }));
                }
            }
        }
    }
    Ok(None)
}

/// True when the images of `b` equal those of `a` up to one common phase, so one recovery operator serves both.
fn exactly_degenerate(a: &[SparseState], b: &[SparseState]) -> Result<bool> {
    let mut phase: Option<C64> = None;
    for (i, u) in a.iter().enumerate() {
        for (j, w) in b.iter().enumerate() {
            let z = inner(u, w)?;
            if i != j {
                if z.norm() > AUDIT_ZERO {
                    return Ok(false);
                }
                continue;
            }
            if (z.norm() - 1.0).abs() > 1e-10 {
                return Ok(false);
            }
            match phase {
                None => phase = Some(z),
                Some(p) if (p - z).norm() > 1e-10 => return Ok(false),
                Some(_) => {}
            }
        }
    }
    Ok(true)
}

/// Audit findings grouped by reason, for reports.
pub fn findings_by_reason(findings: &[AuditFinding]) -> BTreeMap<AuditReason, Vec<ErrorIndex>> {
    let mut out: BTreeMap<AuditReason, Vec<ErrorIndex>> = BTreeMap::new();
    for f in findings {
        out.entry(f.reason).or_default().push(f.error);
    }
    out
}

