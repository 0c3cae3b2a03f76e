//! Code registry, graph states and structural checks.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{inner, LinalgError, SparseState, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("unknown code '{0}'")]
    UnknownCode(String),
    #[error("code '{0}' has no stabilizer generators")]
    NotAdditive(String),
    #[error("invalid Pauli string '{0}'")]
    BadPauli(String),
    #[error("Pauli string acts on {pauli} qubits, state has {state}")]
    PauliLength { pauli: usize, state: usize },
    #[error("invalid graph: {0}")]
    BadGraph(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, CodeError>;

/// Stable identifiers of the registry codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeName {
    FiveQubit,
    CssSeven,
    SixDegenerate,
    ShorNine,
    EightConcat,
    LeungFour,
    Gottesman833,
    #[serde(rename = "nonadd_11_2_3")]
    Nonadd11_2_3,
    #[serde(rename = "nonadd_9_12_3")]
    Nonadd9_12_3,
    #[serde(rename = "nonadd_6_5")]
    Nonadd6_5,
    #[serde(rename = "nonadd_8_12")]
    Nonadd8_12,
}

impl CodeName {
    pub const ALL: [CodeName; 11] = [
        CodeName::FiveQubit,
        CodeName::CssSeven,
        CodeName::SixDegenerate,
        CodeName::ShorNine,
        CodeName::EightConcat,
        CodeName::LeungFour,
        CodeName::Gottesman833,
        CodeName::Nonadd11_2_3,
        CodeName::Nonadd9_12_3,
        CodeName::Nonadd6_5,
        CodeName::Nonadd8_12,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CodeName::FiveQubit => "five_qubit",
            CodeName::CssSeven => "css_seven",
            CodeName::SixDegenerate => "six_degenerate",
            CodeName::ShorNine => "shor_nine",
            CodeName::EightConcat => "eight_concat",
            CodeName::LeungFour => "leung_four",
            CodeName::Gottesman833 => "gottesman_833",
            CodeName::Nonadd11_2_3 => "nonadd_11_2_3",
            CodeName::Nonadd9_12_3 => "nonadd_9_12_3",
            CodeName::Nonadd6_5 => "nonadd_6_5",
            CodeName::Nonadd8_12 => "nonadd_8_12",
        }
    }
}

impl fmt::Display for CodeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeName {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self> {
        CodeName::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| CodeError::UnknownCode(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

/// A signed tensor product of Pauli matrices; letter 0 acts on qubit 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PauliString {
    letters: Vec<PauliLetter>,
    negative: bool,
}

impl PauliString {
    pub fn new(letters: Vec<PauliLetter>, negative: bool) -> Self {
        Self { letters, negative }
    }

    /// Builds from (letter, 1-based qubit) pairs on `n` qubits.
    pub fn from_sparse(n: usize, negative: bool, factors: &[(PauliLetter, usize)]) -> Result<Self> {
        let mut letters = vec![PauliLetter::I; n];
        for &(l, q) in factors {
            if q == 0 || q > n {
                return Err(CodeError::BadPauli(format!("qubit {q} on {n} qubits")));
            }
            letters[q - 1] = l;
        }
        Ok(Self { letters, negative })
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn negated(&self) -> Self {
        Self { letters: self.letters.clone(), negative: !self.negative }
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&l| l != PauliLetter::I).count()
    }

    /// Applies the operator to a state without forming a matrix.
    pub fn apply(&self, state: &SparseState) -> Result<SparseState> {
        let n = self.n();
        if state.dim() != 1usize << n {
            return Err(CodeError::PauliLength { pauli: n, state: state.dim().trailing_zeros() as usize });
        }
        let mut flip = 0usize;
        let mut zmask = 0usize;
        let mut ycount = 0u32;
        for (q, l) in self.letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match l {
                PauliLetter::I => {}
                PauliLetter::X => flip |= bit,
                PauliLetter::Z => zmask |= bit,
                PauliLetter::Y => {
                    flip |= bit;
                    zmask |= bit;
                    ycount += 1;
                }
            }
        }
        // Y = iXZ, so each Y contributes a factor i and a Z sign taken before the flip.
        let mut global = C64::new(1.0, 0.0);
        for _ in 0..ycount {
            global *= C64::new(0.0, 1.0);
        }
        if self.negative {
            global = -global;
        }
        let terms = state.terms().iter().map(|&(idx, a)| {
            let sign = if (idx & zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            (idx ^ flip, a * global * sign)
        });
        Ok(SparseState::from_terms(state.dim(), terms)?)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.negative { "-" } else { "+" })?;
        for l in &self.letters {
            write!(f, "{l:?}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = CodeError;

    /// Parses strings such as `+XZZXI` or `-ZZIIZZII`; the sign is optional.
    fn from_str(s: &str) -> Result<Self> {
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let letters = body
            .chars()
            .map(|c| match c {
                'I' => Ok(PauliLetter::I),
                'X' => Ok(PauliLetter::X),
                'Y' => Ok(PauliLetter::Y),
                'Z' => Ok(PauliLetter::Z),
                _ => Err(CodeError::BadPauli(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(CodeError::BadPauli(s.to_string()));
        }
        Ok(Self { letters, negative })
    }
}

/// A code: K orthonormal codewords on n qubits plus metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumCode {
    name: String,
    n: usize,
    codewords: Vec<SparseState>,
    generators: Option<Vec<PauliString>>,
    distance: Option<u32>,
}

impl QuantumCode {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        codewords: Vec<SparseState>,
        generators: Option<Vec<PauliString>>,
        distance: Option<u32>,
    ) -> Self {
        Self { name: name.into(), n, codewords, generators, distance }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Codespace dimension K.
    pub fn k_dim(&self) -> usize {
        self.codewords.len()
    }

    /// Number of encoded qubits log₂K; fractional for nonadditive codes.
    pub fn k(&self) -> f64 {
        (self.codewords.len() as f64).log2()
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn codewords(&self) -> &[SparseState] {
        &self.codewords
    }

    pub fn is_additive(&self) -> bool {
        self.generators.is_some()
    }

    pub fn stabilizer_generators(&self) -> Option<&[PauliString]> {
        self.generators.as_deref()
    }

    pub fn distance(&self) -> Option<u32> {
        self.distance
    }

    /// Copy of the code with different generators, for negative tests.
    pub fn with_generators(&self, generators: Vec<PauliString>) -> Self {
        Self { generators: Some(generators), ..self.clone() }
    }

    /// Largest |⟨i|j⟩ − δᵢⱼ| over codeword pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.codewords.iter().enumerate() {
            for (j, b) in self.codewords.iter().enumerate().skip(i) {
                let d = inner(a, b).map(|z| z - if i == j { 1.0 } else { 0.0 }).map(|z| z.norm());
                worst = worst.max(d.unwrap_or(f64::INFINITY));
            }
        }
        worst
    }

    pub fn to_dump(&self) -> CodewordDump {
        let terms = self
            .codewords
            .iter()
            .map(|c| c.terms().iter().map(|&(i, a)| (format!("{:0width$b}", i, width = self.n), a.re, a.im)).collect())
            .collect();
        CodewordDump { name: self.name.clone(), n: self.n, k: self.k_dim(), terms }
    }
}

/// JSON-friendly listing of the codewords.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodewordDump {
    pub name: String,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub terms: Vec<Vec<(String, f64, f64)>>,
}

fn bits(s: &str) -> usize {
    usize::from_str_radix(s, 2).expect("binary literal")
}

/// Normalized codeword from signed bit strings.
fn codeword(n: usize, terms: &[(f64, &str)]) -> SparseState {
    debug_assert!(terms.iter().all(|(_, s)| s.len() == n));
    let raw = SparseState::from_terms(1 << n, terms.iter().map(|&(c, s)| (bits(s), C64::new(c, 0.0))))
        .expect("indices within range");
    raw.normalized().expect("nonzero codeword")
}

fn complement(s: &str) -> String {
    s.chars().map(|c| if c == '0' { '1' } else { '0' }).collect()
}

fn self_complementary_code(name: &str, n: usize, seeds: &[&str], distance: Option<u32>) -> QuantumCode {
    let words = seeds.iter().map(|a| codeword(n, &[(1.0, a), (1.0, &complement(a))])).collect();
    QuantumCode::new(name, n, words, None, distance)
}

fn gens(list: &[&str]) -> Vec<PauliString> {
    list.iter().map(|s| s.parse().expect("valid generator literal")).collect()
}

fn five_qubit() -> QuantumCode {
    let zero = codeword(
        5,
        &[
            (-1.0, "00000"),
            (1.0, "01111"),
            (-1.0, "10011"),
            (1.0, "11100"),
            (1.0, "00110"),
            (1.0, "01001"),
            (1.0, "10101"),
            (1.0, "11010"),
        ],
    );
    let one = codeword(
        5,
        &[
            (-1.0, "11111"),
            (1.0, "10000"),
            (1.0, "01100"),
            (-1.0, "00011"),
            (1.0, "11001"),
            (1.0, "10110"),
            (-1.0, "01010"),
            (-1.0, "00101"),
        ],
    );
    // Generators of the group fixing these codewords; they differ from the
    // cyclic XZZXI family by a local Clifford frame.
    let g = gens(&["+IZZZZ", "+IXXYY", "+XIYZY", "+YXYIZ"]);
    QuantumCode::new(CodeName::FiveQubit.as_str(), 5, vec![zero, one], Some(g), Some(3))
}

/// The cyclic generator set XZZXI, IXZZX, XIXZZ, ZXIXZ of the textbook five-qubit code.
pub fn five_qubit_cyclic_generators() -> Vec<PauliString> {
    gens(&["+XZZXI", "+IXZZX", "+XIXZZ", "+ZXIXZ"])
}

fn css_seven() -> QuantumCode {
    let zero: Vec<(f64, &str)> = ["0000000", "0110011", "1010101", "1100110", "0001111", "0111100", "1011010", "1101001"]
        .iter()
        .map(|s| (1.0, *s))
        .collect();
    let one: Vec<(f64, &str)> = ["1111111", "1001100", "0101010", "0011001", "1110000", "1000011", "0100101", "0010110"]
        .iter()
        .map(|s| (1.0, *s))
        .collect();
    let g = gens(&["+IIIXXXX", "+IXXIIXX", "+XIXIXIX", "+IIIZZZZ", "+IZZIIZZ", "+ZIZIZIZ"]);
    QuantumCode::new(CodeName::CssSeven.as_str(), 7, vec![codeword(7, &zero), codeword(7, &one)], Some(g), Some(3))
}

/// The ket printed with seven characters in the six-qubit |1_L⟩, and its replacement.
pub const SIX_QUBIT_TYPO: &str = "1000010";
pub const SIX_QUBIT_TYPO_FIX: &str = "100010";

/// Six-qubit |1_L⟩ with the fourth ket replaced by `fourth`.
pub fn six_qubit_one(fourth: &str) -> SparseState {
    codeword(
        6,
        &[
            (1.0, "001010"),
            (1.0, "101101"),
            (1.0, "000101"),
            (1.0, fourth),
            (-1.0, "011000"),
            (-1.0, "111111"),
            (1.0, "010111"),
            (1.0, "110000"),
        ],
    )
}

/// Six-qubit generators with g₂ = Z¹X²X⁵Z⁶ taken with the sign under which it fixes the codewords.
pub fn six_qubit_generators() -> Vec<PauliString> {
    gens(&["+YIZXXY", "-ZXIIXZ", "+IZXXXX", "+IIIZIZ", "+ZZZIZI"])
}

fn six_degenerate() -> QuantumCode {
    let zero = codeword(
        6,
        &[
            (1.0, "000000"),
            (-1.0, "100111"),
            (1.0, "001111"),
            (-1.0, "101000"),
            (-1.0, "010010"),
            (1.0, "110101"),
            (1.0, "011101"),
            (-1.0, "111010"),
        ],
    );
    let one = six_qubit_one(SIX_QUBIT_TYPO_FIX);
    QuantumCode::new(CodeName::SixDegenerate.as_str(), 6, vec![zero, one], Some(six_qubit_generators()), Some(3))
}

fn shor_nine() -> QuantumCode {
    let block = |sign: f64| [(1.0, 0usize), (sign, 7usize)];
    let word = |sign: f64| {
        let mut terms = Vec::new();
        for &(a, i) in &block(sign) {
            for &(b, j) in &block(sign) {
                for &(c, k) in &block(sign) {
                    terms.push(((i << 6) | (j << 3) | k, C64::new(a * b * c, 0.0)));
                }
            }
        }
        SparseState::from_terms(512, terms).expect("in range").normalized().expect("nonzero")
    };
    let g = gens(&[
        "+ZZIIIIIII",
        "+ZIZIIIIII",
        "+IIIZZIIII",
        "+IIIZIZIII",
        "+IIIIIIZZI",
        "+IIIIIIZIZ",
        "+XXXXXXIII",
        "+XXXIIIXXX",
    ]);
    QuantumCode::new(CodeName::ShorNine.as_str(), 9, vec![word(1.0), word(-1.0)], Some(g), Some(3))
}

/// Eight-qubit concatenated-code generators; the last one carries a minus sign.
pub fn eight_concat_generators() -> Vec<PauliString> {
    gens(&["+XXXXIIII", "+IIIIXXXX", "+ZIIZIIII", "+IIIIZIIZ", "+IZZIIIII", "+IIIIIZZI", "-ZZIIZZII"])
}

fn eight_concat() -> QuantumCode {
    let zero = codeword(8, &[(1.0, "00000110"), (1.0, "00001001"), (1.0, "11110110"), (1.0, "11111001")]);
    let one = codeword(8, &[(1.0, "01100000"), (1.0, "01101111"), (1.0, "10010000"), (1.0, "10011111")]);
    QuantumCode::new(CodeName::EightConcat.as_str(), 8, vec![zero, one], Some(eight_concat_generators()), Some(2))
}

fn leung_four() -> QuantumCode {
    let zero = codeword(4, &[(1.0, "0000"), (1.0, "1111")]);
    let one = codeword(4, &[(1.0, "0011"), (1.0, "1100")]);
    let g = gens(&["+XXXX", "+ZZII", "+IIZZ"]);
    QuantumCode::new(CodeName::LeungFour.as_str(), 4, vec![zero, one], Some(g), None)
}

/// The four-qubit erasure code spanned by (|0000⟩+|1111⟩)/√2 and (|0110⟩+|1001⟩)/√2.
pub fn erasure_code() -> QuantumCode {
    let zero = codeword(4, &[(1.0, "0000"), (1.0, "1111")]);
    let one = codeword(4, &[(1.0, "0110"), (1.0, "1001")]);
    let g = gens(&["+XXXX", "+ZIIZ", "+IZZI"]);
    QuantumCode::new("erasure_four", 4, vec![zero, one], Some(g), None)
}

fn gottesman_833() -> QuantumCode {
    let g = gens(&["+XXXXXXXX", "+ZZZZZZZZ", "+IXIXYZYZ", "+IXZYIXZY", "+IYXZXZIY"]);
    let logical_x = gens(&["+XXIIIZIZ", "+XIXZIIZI", "+XIIZXZII"]);
    // Σ_{s∈S} s|0…0⟩ over the 32 group elements.
    let zero_state = SparseState::basis(256, 0).expect("in range");
    let mut sum = SparseState::zero(256);
    for mask in 0u32..32 {
        let mut v = zero_state.clone();
        for (j, gen) in g.iter().enumerate() {
            if mask >> j & 1 == 1 {
                v = gen.apply(&v).expect("matching size");
            }
        }
        sum = sum.add_scaled(&v, C64::new(1.0, 0.0)).expect("matching size");
    }
    let base = sum.normalized().expect("nonzero projection of |0…0⟩");
    let mut words = Vec::with_capacity(8);
    for label in 0..8u32 {
        let mut v = base.clone();
        for (j, x) in logical_x.iter().enumerate().rev() {
            if label >> (2 - j) & 1 == 1 {
                v = x.apply(&v).expect("matching size");
            }
        }
        words.push(v);
    }
    QuantumCode::new(CodeName::Gottesman833.as_str(), 8, words, Some(g), Some(3))
}

const NONADD_11_ROWS: [&str; 12] = [
    "00000000000",
    "10100011101",
    "11010001110",
    "01101000111",
    "10110100011",
    "11011010001",
    "11101101000",
    "01110110100",
    "00111011010",
    "00011101101",
    "10001110110",
    "01000111011",
];

fn nonadd_11_2_3() -> QuantumCode {
    let zero: Vec<(f64, &str)> = NONADD_11_ROWS.iter().map(|r| (1.0, *r)).collect();
    let flipped: Vec<String> = NONADD_11_ROWS.iter().map(|r| complement(r)).collect();
    let one: Vec<(f64, &str)> = flipped.iter().map(|r| (1.0, r.as_str())).collect();
    QuantumCode::new(CodeName::Nonadd11_2_3.as_str(), 11, vec![codeword(11, &zero), codeword(11, &one)], None, Some(3))
}

/// A simple undirected graph given by its adjacency matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphSpec {
    adjacency: Vec<Vec<u8>>,
}

impl GraphSpec {
    pub fn new(adjacency: Vec<Vec<u8>>) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 || n > 20 {
            return Err(CodeError::BadGraph(format!("{n} vertices")));
        }
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != n {
                return Err(CodeError::BadGraph(format!("row {i} has length {}", row.len())));
            }
            if row[i] != 0 {
                return Err(CodeError::BadGraph(format!("self-loop at vertex {}", i + 1)));
            }
            for (j, &a) in row.iter().enumerate() {
                if a > 1 || a != adjacency[j][i] {
                    return Err(CodeError::BadGraph(format!("entry ({}, {}) is not symmetric 0/1", i + 1, j + 1)));
                }
            }
        }
        Ok(Self { adjacency })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![vec![0u8; n]; n];
        for &(a, b) in edges {
            if a == 0 || b == 0 || a > n || b > n {
                return Err(CodeError::BadGraph(format!("edge ({a}, {b}) out of range")));
            }
            adjacency[a - 1][b - 1] = 1;
            adjacency[b - 1][a - 1] = 1;
        }
        Self::new(adjacency)
    }

    /// Cycle graph on `n` vertices.
    pub fn cycle(n: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (1..=n).map(|i| (i, i % n + 1)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn adjacency(&self) -> &[Vec<u8>] {
        &self.adjacency
    }
}

/// |G⟩ = 2^{−n/2} Σ_μ (−1)^{edges inside μ} |μ⟩.
pub fn graph_state(g: &GraphSpec) -> SparseState {
    let n = g.n();
    let dim = 1usize << n;
    let masks: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| j > i && g.adjacency[i][j] == 1).fold(0usize, |m, j| m | 1 << (n - 1 - j)))
        .collect();
    let amp = (dim as f64).sqrt().recip();
    let terms = (0..dim)
        .map(|mu| {
            let mut parity = 0u32;
            for (i, &m) in masks.iter().enumerate() {
                if mu >> (n - 1 - i) & 1 == 1 {
                    parity += (mu & m).count_ones();
                }
            }
            let s = if parity % 2 == 0 { amp } else { -amp };
            (mu, C64::new(s, 0.0))
        })
        .collect();
    SparseState::from_sorted_unchecked(dim, terms)
}

/// Vertex sets V₁…V₁₂ whose Z products map the loop-graph state to the twelve codewords.
pub const NONADD_9_12_SETS: [&[usize]; 12] = [
    &[],
    &[2, 6, 7],
    &[4, 5, 9],
    &[2, 3, 6, 8],
    &[3, 5, 8, 9],
    &[2, 3, 4, 5, 6, 7, 8, 9],
    &[1, 4, 7],
    &[1, 2, 4, 6],
    &[1, 5, 7, 9],
    &[1, 2, 3, 4, 6, 7, 8],
    &[1, 3, 4, 5, 7, 8, 9],
    &[1, 2, 3, 5, 6, 8, 9],
];

/// Z_{V} applied to a state of `n` qubits.
pub fn apply_z_set(state: &SparseState, n: usize, set: &[usize]) -> SparseState {
    let mask = set.iter().fold(0usize, |m, &q| m | 1 << (n - q));
    let terms = state
        .terms()
        .iter()
        .map(|&(i, a)| (i, if (i & mask).count_ones() % 2 == 1 { -a } else { a }))
        .collect();
    SparseState::from_sorted_unchecked(state.dim(), terms)
}

/// The twelve codewords Z_{Vᵢ}|L₉⟩.
pub fn build_9_12_3_codewords() -> Vec<SparseState> {
    let loop_state = graph_state(&GraphSpec::cycle(9).expect("valid cycle"));
    NONADD_9_12_SETS.iter().map(|set| apply_z_set(&loop_state, 9, set)).collect()
}

pub fn build_code(name: CodeName) -> QuantumCode {
    match name {
        CodeName::FiveQubit => five_qubit(),
        CodeName::CssSeven => css_seven(),
        CodeName::SixDegenerate => six_degenerate(),
        CodeName::ShorNine => shor_nine(),
        CodeName::EightConcat => eight_concat(),
        CodeName::LeungFour => leung_four(),
        CodeName::Gottesman833 => gottesman_833(),
        CodeName::Nonadd11_2_3 => nonadd_11_2_3(),
        CodeName::Nonadd9_12_3 => QuantumCode::new(name.as_str(), 9, build_9_12_3_codewords(), None, Some(3)),
        CodeName::Nonadd6_5 => {
            self_complementary_code(name.as_str(), 6, &["000000", "110000", "001100", "000011", "010101"], Some(2))
        }
        CodeName::Nonadd8_12 => self_complementary_code(
            name.as_str(),
            8,
            &[
                "00000000", "00000011", "00001100", "00110000", "11000000", "10101000", "01011000", "01100100",
                "10010100", "11110000", "11001100", "00111100",
            ],
            Some(2),
        ),
    }
}

/// Looks a code up by its string identifier.
pub fn build_code_by_name(name: &str) -> Result<QuantumCode> {
    Ok(build_code(name.parse()?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilizerFailure {
    pub generator: usize,
    pub codeword: usize,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilizerReport {
    pub generator_passes: Vec<bool>,
    pub failures: Vec<StabilizerFailure>,
}

impl StabilizerReport {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks ‖g·c − c‖ < 1e-10 for every generator g and codeword c.
pub fn verify_stabilizer(code: &QuantumCode) -> Result<StabilizerReport> {
    let generators = code.stabilizer_generators().ok_or_else(|| CodeError::NotAdditive(code.name().to_string()))?;
    let mut report = StabilizerReport { generator_passes: vec![true; generators.len()], failures: Vec::new() };
    for (gi, g) in generators.iter().enumerate() {
        for (ci, c) in code.codewords().iter().enumerate() {
            let moved = g.apply(c)?;
            let deviation = moved.add_scaled(c, C64::new(-1.0, 0.0))?.norm();
            if deviation >= 1e-10 {
                report.generator_passes[gi] = false;
                report.failures.push(StabilizerFailure { generator: gi, codeword: ci, deviation });
            }
        }
    }
    Ok(report)
}

/// True when every codeword is (|a⟩ + |ā⟩)/√2 up to `tol`.
pub fn is_self_complementary(code: &QuantumCode, tol: f64) -> bool {
    let full = code.dim() - 1;
    code.codewords().iter().all(|c| match c.terms() {
        [(i, a), (j, b)] => *i ^ *j == full && (a - b).norm() <= tol && (a.norm() - 0.5f64.sqrt()).abs() <= tol,
        _ => false,
    })
}

/// Whether 2^k Σ_{j≤t} 3^j C(n, j) ≤ 2^n, evaluated exactly.
pub fn hamming_bound_satisfiable(n: u32, k: u32, t: u32) -> bool {
    let mut sum = BigUint::from(0u32);
    let mut binom = BigUint::from(1u32);
    let mut three = BigUint::from(1u32);
    for j in 0..=t.min(n) {
        if j > 0 {
            binom = binom * BigUint::from(n - j + 1) / BigUint::from(j);
            three *= 3u32;
        }
        sum += &binom * &three;
    }
    (sum << k as usize) <= (BigUint::from(1u32) << n as usize)
}
