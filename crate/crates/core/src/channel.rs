//! Generalized amplitude damping channel and its n-qubit tensor extensions.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::codes::QuantumCode;
use crate::linalg::{expm, expm_error_bound, hermitian_eig, DenseMatrix, LinalgError, SparseState, C64, PRUNE_TOL};

/// Largest supported qubit count for packed error words.
pub const MAX_QUBITS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("gamma {0} outside [0, 1]")]
    GammaOutOfRange(f64),
    #[error("epsilon {0} outside [0, 1/2]")]
    EpsilonOutOfRange(f64),
    #[error("p {0} outside [0, 1]")]
    POutOfRange(f64),
    #[error("invalid temperature point: {0}")]
    InvalidTemperature(String),
    #[error("infinite temperature gives epsilon = 1/2 and gamma = 1; pass allow_infinite to accept it")]
    InfiniteTemperature,
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("max weight {max_weight} exceeds qubit count {n}")]
    MaxWeight { n: usize, max_weight: usize },
    #[error("invalid error digit {0}")]
    InvalidDigit(char),
    #[error("state dimension {got} does not match 2^{n}")]
    StateDimension { n: usize, got: usize },
    #[error("Fock truncation {got} too small; need at least {need} photons per mode")]
    TruncationTooSmall { got: usize, need: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// A point (γ, ε) of the channel; `p = 1 − ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GadParams {
    gamma: f64,
    epsilon: f64,
}

impl GadParams {
    pub fn new(gamma: f64, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(ChannelError::GammaOutOfRange(gamma));
        }
        if !(0.0..=0.5).contains(&epsilon) {
            return Err(ChannelError::EpsilonOutOfRange(epsilon));
        }
        Ok(Self { gamma, epsilon })
    }

    /// Builds from (γ, p) with `p ∈ [1/2, 1]`.
    pub fn from_p(gamma: f64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ChannelError::POutOfRange(p));
        }
        Self::new(gamma, 1.0 - p)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn p(&self) -> f64 {
        1.0 - self.epsilon
    }
}

/// Physical description of a thermal bath.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TemperaturePoint {
    pub gamma0: f64,
    pub t: f64,
    pub hbar_omega_over_kbt: f64,
}

impl TemperaturePoint {
    /// Planck occupation; infinite when the energy ratio is zero.
    pub fn n_th(&self) -> f64 {
        if self.hbar_omega_over_kbt == f64::INFINITY {
            0.0
        } else {
            1.0 / self.hbar_omega_over_kbt.exp_m1()
        }
    }
}

/// Converts a bath description to channel parameters.
///
/// `allow_infinite` admits the infinite-temperature limit (ratio 0), which
/// maps to ε = 1/2 and, for `t > 0`, γ = 1.
pub fn params_from_temperature(tp: TemperaturePoint, allow_infinite: bool) -> Result<GadParams> {
    let TemperaturePoint { gamma0, t, hbar_omega_over_kbt: x } = tp;
    if !(gamma0 >= 0.0 && gamma0.is_finite()) || !(t >= 0.0 && t.is_finite()) || !(x >= 0.0) || x.is_nan() {
        return Err(ChannelError::InvalidTemperature(format!("{tp:?}")));
    }
    if x == 0.0 {
        if !allow_infinite {
            return Err(ChannelError::InfiniteTemperature);
        }
        let gamma = if gamma0 * t > 0.0 { 1.0 } else { 0.0 };
        return GadParams::new(gamma, 0.5);
    }
    // ε = N/(2N+1) = 1/(1+e^x); 2N+1 = coth(x/2).
    let epsilon = if x == f64::INFINITY { 0.0 } else { 1.0 / (1.0 + x.exp()) };
    let rate = if x == f64::INFINITY { 1.0 } else { 1.0 / (0.5 * x).tanh() };
    let gamma = -(-gamma0 * t * rate).exp_m1();
    GadParams::new(gamma.clamp(0.0, 1.0), epsilon)
}

/// γ reached after a dimensionless time `gamma0_t` at temperature parameter ε.
pub fn gamma_at_epsilon(gamma0_t: f64, epsilon: f64) -> f64 {
    -(-gamma0_t / (1.0 - 2.0 * epsilon)).exp_m1()
}

/// The four Kraus matrices A₀…A₃.
pub fn gad_kraus(params: GadParams) -> [DenseMatrix; 4] {
    let t = KrausTable::amplitudes(params);
    t.matrices()
}

/// Single-qubit action of the four Kraus operators.
///
/// Every factor maps each basis bit to at most one output bit, so an operator
/// is described by an amplitude per (digit, input bit) and a fixed output bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrausTable {
    amp: [[f64; 2]; 4],
}

const OUT_BIT: [[u8; 2]; 4] = [[0, 1], [0, 0], [0, 1], [1, 1]];

impl KrausTable {
    pub fn amplitudes(params: GadParams) -> Self {
        Self::from_gamma_p(params.gamma(), params.p())
    }

    /// Amplitudes for any p ∈ [0, 1], including the ε > ½ half used in entanglement analysis.
    pub fn from_gamma_p(g: f64, p: f64) -> Self {
        let sp = p.sqrt();
        let sq = (1.0 - p).max(0.0).sqrt();
        let s1g = (1.0 - g).sqrt();
        let sg = g.sqrt();
        Self { amp: [[sp, sp * s1g], [0.0, sp * sg], [sq * s1g, sq], [sq * sg, 0.0]] }
    }

    /// Kraus operators with the scalar prefactors √p, √(1−p), √γ removed.
    ///
    /// Their images are parallel to the true images whenever the latter are nonzero.
    pub fn shapes(gamma: f64) -> Self {
        let s1g = (1.0 - gamma).max(0.0).sqrt();
        Self { amp: [[1.0, s1g], [0.0, 1.0], [s1g, 1.0], [1.0, 0.0]] }
    }

    /// Amplitude and output bit of digit `d` acting on input bit `b`.
    #[inline]
    pub fn act(&self, d: u8, b: u8) -> (f64, u8) {
        (self.amp[d as usize][b as usize], OUT_BIT[d as usize][b as usize])
    }

    /// Overall scalar prefactor of digit `d` at `params` (zero when the operator vanishes).
    pub fn prefactor(d: u8, params: GadParams) -> f64 {
        let (g, p) = (params.gamma(), params.p());
        match d {
            0 => p.sqrt(),
            1 => (p * g).sqrt(),
            2 => (1.0 - p).max(0.0).sqrt(),
            _ => ((1.0 - p).max(0.0) * g).sqrt(),
        }
    }

    pub fn matrices(&self) -> [DenseMatrix; 4] {
        std::array::from_fn(|d| {
            let mut m = DenseMatrix::zeros(2, 2);
            for b in 0..2u8 {
                let (a, out) = self.act(d as u8, b);
                m.set(out as usize, b as usize, C64::new(a, 0.0));
            }
            m
        })
    }

    /// |amplitude|² of the identity-like digit 0, and the summed |amplitude|² of digits 1–3, per input bit.
    pub fn weight_split(&self, b: u8) -> (f64, f64) {
        let b = b as usize;
        let s0 = self.amp[0][b].powi(2);
        let snz = (1..4).map(|d| self.amp[d][b].powi(2)).sum();
        (s0, snz)
    }
}

/// Digits that carry a nonzero Kraus operator at `params`, excluding 0.
pub fn nonzero_digits(params: GadParams) -> Vec<u8> {
    (1..4u8).filter(|&d| KrausTable::prefactor(d, params) > 0.0).collect()
}

/// A tensor-product error word A_{d₁} ⊗ … ⊗ A_{dₙ}; qubit 1 is the leftmost digit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ErrorIndex {
    // Digit of qubit 1 in the most significant position so numeric order is lexicographic order.
    packed: u32,
    n: u8,
}

impl ErrorIndex {
    pub fn new(digits: &[u8]) -> Result<Self> {
        let n = digits.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(ChannelError::QubitCount(n));
        }
        let mut packed = 0u32;
        for &d in digits {
            if d > 3 {
                return Err(ChannelError::InvalidDigit(char::from(b'0' + d.min(9))));
            }
            packed = (packed << 2) | u32::from(d);
        }
        Ok(Self { packed, n: n as u8 })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(&vec![0; n])
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// Digit on qubit `q` (0-based from the left).
    #[inline]
    pub fn digit(&self, q: usize) -> u8 {
        ((self.packed >> (2 * (self.n as usize - 1 - q))) & 3) as u8
    }

    pub fn digits(&self) -> Vec<u8> {
        (0..self.n()).map(|q| self.digit(q)).collect()
    }

    pub fn weight(&self) -> usize {
        (0..self.n()).filter(|&q| self.digit(q) != 0).count()
    }

    pub fn uses_only(&self, allowed: &[u8]) -> bool {
        (0..self.n()).all(|q| {
            let d = self.digit(q);
            d == 0 || allowed.contains(&d)
        })
    }
}

impl fmt::Display for ErrorIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n() {
            write!(f, "{}", self.digit(q))?;
        }
        Ok(())
    }
}

impl fmt::Debug for ErrorIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{self}")
    }
}

impl FromStr for ErrorIndex {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .chars()
            .map(|c| match c {
                '0'..='3' => Ok(c as u8 - b'0'),
                _ => Err(ChannelError::InvalidDigit(c)),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(&digits)
    }
}

impl Serialize for ErrorIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// An error word bound to a channel point.
#[derive(Clone, Debug, PartialEq)]
pub struct EnlargedError {
    pub index: ErrorIndex,
    table: KrausTable,
}

impl EnlargedError {
    pub fn new(index: ErrorIndex, params: GadParams) -> Self {
        Self { index, table: KrausTable::amplitudes(params) }
    }

    /// The per-qubit 2×2 factors, qubit 1 first.
    pub fn factors(&self) -> Vec<DenseMatrix> {
        let mats = self.table.matrices();
        self.index.digits().iter().map(|&d| mats[d as usize].clone()).collect()
    }

    pub fn apply(&self, state: &SparseState) -> Result<SparseState> {
        apply_with_table(self.index, &self.table, state)
    }
}

/// Applies the error word to a state.
pub fn apply_enlarged_error(err: ErrorIndex, params: GadParams, state: &SparseState) -> Result<SparseState> {
    apply_with_table(err, &KrausTable::amplitudes(params), state)
}

/// Applies the error word using an explicit single-qubit table.
pub fn apply_with_table(err: ErrorIndex, table: &KrausTable, state: &SparseState) -> Result<SparseState> {
    let n = err.n();
    if state.dim() != 1usize << n {
        return Err(ChannelError::StateDimension { n, got: state.dim() });
    }
    let mut terms = Vec::with_capacity(state.len());
    for &(idx, amp) in state.terms() {
        if let Some((out, factor)) = map_basis(err, table, idx) {
            let a = amp * factor;
            if a.norm() >= PRUNE_TOL {
                terms.push((out, a));
            }
        }
    }
    terms.sort_unstable_by_key(|t| t.0);
    Ok(SparseState::from_sorted_unchecked(state.dim(), terms))
}

/// Image of basis state `idx` under the word: output index and amplitude, or `None` if annihilated.
#[inline]
pub fn map_basis(err: ErrorIndex, table: &KrausTable, idx: usize) -> Option<(usize, f64)> {
    let n = err.n();
    let mut out = 0usize;
    let mut factor = 1.0;
    for q in 0..n {
        let shift = n - 1 - q;
        let bit = ((idx >> shift) & 1) as u8;
        let (a, ob) = table.act(err.digit(q), bit);
        if a == 0.0 {
            return None;
        }
        factor *= a;
        out |= (ob as usize) << shift;
    }
    Some((out, factor))
}

/// Error words of exactly weight `q`, in lexicographic order of their digit strings.
pub fn errors_of_weight(n: usize, q: usize, allowed: &[u8]) -> Result<Vec<ErrorIndex>> {
    if n == 0 || n > MAX_QUBITS {
        return Err(ChannelError::QubitCount(n));
    }
    if q > n {
        return Err(ChannelError::MaxWeight { n, max_weight: q });
    }
    let mut allowed: Vec<u8> = allowed.iter().copied().filter(|d| (1..=3).contains(d)).collect();
    allowed.sort_unstable();
    allowed.dedup();
    let mut out = Vec::new();
    let mut digits = vec![0u8; n];
    fn rec(pos: usize, left: usize, digits: &mut Vec<u8>, allowed: &[u8], out: &mut Vec<ErrorIndex>) {
        let n = digits.len();
        if pos == n {
            if left == 0 {
                out.push(ErrorIndex::new(digits).expect("valid digits"));
            }
            return;
        }
        if n - pos > left {
            digits[pos] = 0;
            rec(pos + 1, left, digits, allowed, out);
        }
        if left > 0 {
            for &d in allowed {
                digits[pos] = d;
                rec(pos + 1, left - 1, digits, allowed, out);
            }
            digits[pos] = 0;
        }
    }
    if q == 0 || !allowed.is_empty() {
        rec(0, q, &mut digits, &allowed, &mut out);
    }
    Ok(out)
}

/// All error words of weight at most `max_weight`, weight-major then lexicographic.
pub fn enumerate_errors(n: usize, max_weight: usize, allowed: &[u8]) -> Result<impl Iterator<Item = ErrorIndex>> {
    if max_weight > n {
        return Err(ChannelError::MaxWeight { n, max_weight });
    }
    let mut all = Vec::new();
    for q in 0..=max_weight {
        all.extend(errors_of_weight(n, q, allowed)?);
    }
    Ok(all.into_iter())
}

/// Probability mass of each error weight 0..=n, averaged over the codewords.
///
/// Each tensor factor is injective on its support, so the squared norm of an
/// image splits over basis terms and the per-weight sums factor into a
/// polynomial in a marker variable counting non-identity digits.
pub fn weight_distribution(code: &QuantumCode, params: GadParams) -> Vec<f64> {
    let n = code.n();
    let table = KrausTable::amplitudes(params);
    let splits = [table.weight_split(0), table.weight_split(1)];
    let mut total = vec![0.0; n + 1];
    let mut poly = vec![0.0; n + 1];
    for word in code.codewords() {
        for &(idx, amp) in word.terms() {
            poly.iter_mut().for_each(|c| *c = 0.0);
            poly[0] = 1.0;
            for q in 0..n {
                let bit = ((idx >> (n - 1 - q)) & 1) as usize;
                let (s0, snz) = splits[bit];
                for k in (0..=q + 1).rev() {
                    let keep = poly[k] * s0;
                    let promote = if k > 0 { poly[k - 1] * snz } else { 0.0 };
                    poly[k] = keep + promote;
                }
            }
            let w = amp.norm_sqr();
            for (t, c) in total.iter_mut().zip(&poly) {
                *t += w * c;
            }
        }
    }
    let k = code.k_dim() as f64;
    total.iter_mut().for_each(|t| *t /= k);
    total
}

/// Probability that an error of weight exactly `q` occurs.
pub fn weight_probability(code: &QuantumCode, params: GadParams, q: usize) -> Result<f64> {
    if q > code.n() {
        return Err(ChannelError::MaxWeight { n: code.n(), max_weight: q });
    }
    Ok(weight_distribution(code, params)[q])
}

/// Beam-splitter derivation of the channel on a truncated two-mode Fock space.
///
/// `n_truncation` is the largest photon number kept per mode. The returned
/// operators are A₀₀, A₀₁, A₁₁, A₁₀ restricted to the 0/1-photon system space,
/// in the order matching A₀, A₁, A₂, A₃.
pub fn beam_splitter_kraus(chi: f64, p: f64, n_truncation: usize) -> Result<[DenseMatrix; 4]> {
    if n_truncation < 2 {
        return Err(ChannelError::TruncationTooSmall { got: n_truncation, need: 2 });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(ChannelError::POutOfRange(p));
    }
    let u = beam_splitter_unitary(chi, n_truncation)?;
    let levels = n_truncation + 1;
    let idx = |sys: usize, env: usize| sys * levels + env;
    let q = [p, 1.0 - p];
    let op = |j: usize, k: usize| {
        let mut m = DenseMatrix::zeros(2, 2);
        for out in 0..2 {
            for inp in 0..2 {
                m.set(out, inp, u.get(idx(out, k), idx(inp, j)) * q[j].sqrt());
            }
        }
        m
    };
    Ok([op(0, 0), op(0, 1), op(1, 1), op(1, 0)])
}

/// Annihilation operator on a single mode with levels 0..=n_max.
fn annihilation(n_max: usize) -> DenseMatrix {
    let levels = n_max + 1;
    let mut a = DenseMatrix::zeros(levels, levels);
    for k in 1..levels {
        a.set(k - 1, k, C64::new((k as f64).sqrt(), 0.0));
    }
    a
}

/// Mode operators (a ⊗ I, I ⊗ b) with the system mode first.
pub fn mode_operators(n_truncation: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    let single = annihilation(n_truncation);
    let id = DenseMatrix::identity(n_truncation + 1);
    Ok((crate::linalg::tensor_product(&single, &id)?, crate::linalg::tensor_product(&id, &single)?))
}

/// U = exp(χ(a†b − b†a)) on the truncated space.
pub fn beam_splitter_unitary(chi: f64, n_truncation: usize) -> Result<DenseMatrix> {
    let (a, b) = mode_operators(n_truncation)?;
    let gen = a.adjoint().matmul(&b)?.sub(&b.adjoint().matmul(&a)?)?.scale(C64::new(chi, 0.0));
    Ok(expm(&gen)?)
}

/// Error bound of the matrix exponential used for [`beam_splitter_unitary`].
pub fn beam_splitter_expm_bound(chi: f64, n_truncation: usize) -> Result<f64> {
    let (a, b) = mode_operators(n_truncation)?;
    let gen = a.adjoint().matmul(&b)?.sub(&b.adjoint().matmul(&a)?)?.scale(C64::new(chi, 0.0));
    Ok(expm_error_bound(gen.norm_one()))
}

/// Concurrence of (Λ ⊗ I)(|β⟩⟨β|) for the Bell state |β⟩ = (|00⟩+|11⟩)/√2.
pub fn concurrence_gad(gamma: f64, p: f64) -> f64 {
    let c = p * (1.0 - p) * gamma * gamma;
    let x = 2.0 * (1.0 - gamma) + c;
    let y = ((1.0 - gamma) * ((1.0 - gamma) + c)).max(0.0).sqrt();
    let value = 0.5 * ((x + 2.0 * y).max(0.0).sqrt() - (x - 2.0 * y).max(0.0).sqrt() - 2.0 * c.max(0.0).sqrt());
    value.max(0.0)
}

/// Closed-form eigenvalues of the partial transpose of (Λ ⊗ I)(|β⟩⟨β|).
pub fn ppt_eigenvalues(gamma: f64, p: f64) -> [f64; 4] {
    let g = gamma;
    let root = (0.25 * g * g - g - p * g * g + p * p * g * g + 1.0).max(0.0).sqrt();
    [0.5 * g * p + 0.5 * (1.0 - g), 0.5 * (1.0 - p * g), 0.25 * g - 0.5 * root, 0.25 * g + 0.5 * root]
}

/// The two-qubit state (Λ ⊗ I)(|β⟩⟨β|) in the basis |00⟩, |01⟩, |10⟩, |11⟩.
pub fn choi_state(gamma: f64, p: f64) -> Result<DenseMatrix> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(ChannelError::GammaOutOfRange(gamma));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(ChannelError::POutOfRange(p));
    }
    let s = 1.0 / 2f64.sqrt();
    let beta = DenseMatrix::from_real(4, 1, &[s, 0.0, 0.0, s])?;
    let id = DenseMatrix::identity(2);
    let mut rho = DenseMatrix::zeros(4, 4);
    for k in KrausTable::from_gamma_p(gamma, p).matrices() {
        let big = crate::linalg::tensor_product(&k, &id)?;
        let v = big.matmul(&beta)?;
        rho = rho.add(&v.matmul(&v.adjoint())?)?;
    }
    Ok(rho)
}

/// Eigenvalues (descending) of the partial transpose on the second qubit, computed numerically.
pub fn ppt_eigenvalues_numeric(gamma: f64, p: f64) -> Result<Vec<f64>> {
    let rho = choi_state(gamma, p)?;
    let mut pt = DenseMatrix::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    pt.set(2 * a + d, 2 * c + b, rho.get(2 * a + b, 2 * c + d));
                }
            }
        }
    }
    Ok(hermitian_eig(&pt)?.0)
}

/// The interval [p_min, p_max] on which the channel is entanglement breaking, if any.
pub fn entanglement_breaking_region(gamma: f64) -> Option<(f64, f64)> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return None;
    }
    // γ⁴+4γ³−4γ² = γ²(γ²+4γ−4); the factored form avoids cancellation near the root.
    let reduced = gamma * gamma + 4.0 * gamma - 4.0;
    if reduced < 0.0 {
        return None;
    }
    let half_width = 0.5 * reduced.sqrt() / gamma;
    Some(((0.5 - half_width).max(0.0), (0.5 + half_width).min(1.0)))
}

/// The smallest γ with a nonempty entanglement-breaking region, 2√2 − 2.
pub fn entanglement_breaking_threshold() -> f64 {
    2.0 * 2f64.sqrt() - 2.0
}
