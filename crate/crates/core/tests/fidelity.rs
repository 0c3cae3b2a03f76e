use approx::assert_abs_diff_eq;
use gadqec_core::channel::{apply_enlarged_error, enumerate_errors, gad_kraus, ErrorIndex, GadParams};
use gadqec_core::codes::{build_code, CodeName, QuantumCode};
use gadqec_core::fidelity::*;
use gadqec_core::linalg::{inner, tensor_product, DenseMatrix, SparseState, C64};
use gadqec_core::recovery::*;

fn e(s: &str) -> ErrorIndex {
    s.parse().unwrap()
}

fn fidelity(name: CodeName, g: f64, eps: f64, max_weight: Option<usize>) -> FidelityResult {
    let code = build_code(name);
    let params = GadParams::new(g, eps).unwrap();
    let rec = build_default_recovery(&code, name, params).unwrap();
    entanglement_fidelity(&code, &rec, params, max_weight).unwrap()
}

/// Dense evaluation of (1/K²) Σ_k [Σ_r |Σᵢ ⟨vᵣⁱ|A_k|i⟩|² + |Σᵢ ⟨i|(I − Σ|v⟩⟨v|)A_k|i⟩|²]
/// over every Kraus word, with each A_k built as a Kronecker product.
fn dense_oracle(code: &QuantumCode, rec: &RecoverySet, params: GadParams) -> f64 {
    let n = code.n();
    let dim = code.dim();
    let ks = gad_kraus(params);
    let words: Vec<Vec<C64>> = code.codewords().iter().map(|c| c.to_dense()).collect();
    let ops: Vec<Vec<Vec<C64>>> =
        rec.operators().iter().map(|op| op.vectors.iter().map(|v| v.to_dense()).collect()).collect();
    let all: Vec<&Vec<C64>> = ops.iter().flatten().collect();
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let mut total = 0.0;
    for err in enumerate_errors(n, n, &[1, 2, 3]).unwrap() {
        let mut m = ks[err.digit(0) as usize].clone();
        for q in 1..n {
            m = tensor_product(&m, &ks[err.digit(q) as usize]).unwrap();
        }
        let images: Vec<Vec<C64>> = words.iter().map(|w| m.apply(w).unwrap()).collect();
        for op in &ops {
            let t: C64 = op.iter().zip(&images).map(|(v, img)| dot(v, img)).sum();
            total += t.norm_sqr();
        }
        let mut t = C64::new(0.0, 0.0);
        for (w, img) in words.iter().zip(&images) {
            let mut projected = img.clone();
            for v in &all {
                let c = dot(v, img);
                for x in 0..dim {
                    projected[x] -= v[x] * c;
                }
            }
            t += dot(w, &projected);
        }
        total += t.norm_sqr();
    }
    total / (code.k_dim() * code.k_dim()) as f64
}

#[test]
fn identity_channel_gives_unit_fidelity() {
    for name in CodeName::ALL {
        let f = fidelity(name, 0.0, 0.0, None);
        assert_abs_diff_eq!(f.value, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn full_sum_matches_dense_oracle() {
    for (name, g, eps) in [
        (CodeName::FiveQubit, 0.05, 0.005),
        (CodeName::LeungFour, 0.2, 0.1),
        (CodeName::SixDegenerate, 0.1, 0.03),
        (CodeName::Nonadd6_5, 0.08, 0.0),
    ] {
        let code = build_code(name);
        let params = GadParams::new(g, eps).unwrap();
        let rec = build_default_recovery(&code, name, params).unwrap();
        let fast = entanglement_fidelity(&code, &rec, params, None).unwrap();
        assert_eq!(fast.mode, FidelityMode::Full);
        assert_abs_diff_eq!(fast.value, dense_oracle(&code, &rec, params), epsilon = 1e-12);
    }
}

#[test]
fn five_qubit_leading_coefficient() {
    let gammas = [0.001, 0.002, 0.005];
    let ys: Vec<f64> = gammas.iter().map(|&g| (1.0 - fidelity(CodeName::FiveQubit, g, 0.0, None).value) / (g * g)).collect();
    // (1 − F)/γ² = c₂ + c₃γ, fitted through the first two points and checked on the third.
    let c3 = (ys[1] - ys[0]) / (gammas[1] - gammas[0]);
    let c2 = ys[0] - c3 * gammas[0];
    assert!((c2 - 2.5).abs() / 2.5 < 0.03, "c2 = {c2}");
    assert_abs_diff_eq!(c2 + c3 * gammas[2], ys[2], epsilon = 0.01);
}

#[test]
fn truncation_stays_within_remainder() {
    for name in [CodeName::FiveQubit, CodeName::SixDegenerate, CodeName::LeungFour, CodeName::Nonadd6_5] {
        let n = build_code(name).n();
        for (g, eps) in [(0.05, 0.005), (0.1, 0.05)] {
            let full = fidelity(name, g, eps, None).value;
            for w in 1..n {
                let t = fidelity(name, g, eps, Some(w));
                assert_eq!(t.mode, FidelityMode::Truncated { max_weight: w });
                let gap = full - t.value;
                assert!(gap >= -1e-15 && gap <= t.remainder_bound + 1e-15, "{name} w={w}: {gap} vs {}", t.remainder_bound);
                assert!(t.value + t.remainder_bound <= 1.0 + 1e-9);
            }
        }
    }
}

#[test]
fn per_weight_contributions_are_nonnegative_and_sum_to_value() {
    let f = fidelity(CodeName::CssSeven, 0.08, 0.02, Some(4));
    assert!(f.per_weight.iter().all(|&(_, c)| c >= 0.0));
    assert_abs_diff_eq!(f.per_weight.iter().map(|p| p.1).sum::<f64>(), f.value, epsilon = 1e-15);
    assert!((0.0..=1.0).contains(&f.value));
}

#[test]
fn max_weight_above_length_is_rejected() {
    let code = build_code(CodeName::LeungFour);
    let params = GadParams::new(0.1, 0.0).unwrap();
    let rec = build_default_recovery(&code, CodeName::LeungFour, params).unwrap();
    assert!(matches!(entanglement_fidelity(&code, &rec, params, Some(5)), Err(FidelityError::MaxWeight { .. })));
}

#[test]
fn unprotected_baselines() {
    for g in [0.0f64, 0.05, 0.3] {
        let s = (1.0 - g).sqrt();
        let p = GadParams::new(g, 0.0).unwrap();
        assert_abs_diff_eq!(fidelity_no_qec(p, 1), (1.0 + s).powi(2) / 4.0, epsilon = 1e-15);
        let three = (1.0 + 3.0 * s + 3.0 * (1.0 - g) + (1.0 - g) * s).powi(2) / 64.0;
        assert_abs_diff_eq!(fidelity_no_qec(p, 3), three, epsilon = 1e-14);
    }
    for n in 1..10 {
        assert_abs_diff_eq!(fidelity_no_qec(GadParams::new(0.0, 0.3).unwrap(), n), 1.0, epsilon = 1e-14);
    }
}

#[test]
fn normalized_fidelity_examples() {
    assert_eq!(normalized_fidelity(0.93, 2), 0.93);
    assert_eq!(normalized_fidelity(1.0, 12), 1.0);
    assert_abs_diff_eq!(normalized_fidelity(0.99, 12), 0.99720, epsilon = 5e-6);
}

#[test]
fn accepted_errors_leave_nothing_for_the_complement() {
    let code = build_code(CodeName::FiveQubit);
    let params = GadParams::new(0.1, 0.02).unwrap();
    let rec = build_default_recovery(&code, CodeName::FiveQubit, params).unwrap();
    for err in default_correctable_set(CodeName::FiveQubit, Regime::Gad).accepted {
        assert!(ohat_contribution(&code, &rec, err, params).unwrap() < 1e-14, "{err}");
    }
}

#[test]
fn complement_projector_misses_a_damping_pair_entirely() {
    // A₁₁ lowers the Hamming weight by two, so neither the codewords nor any
    // recovery vector overlapping them can meet its image.
    let code = build_code(CodeName::CssSeven);
    for g in [0.01, 0.05, 0.1] {
        let params = GadParams::new(g, 0.0).unwrap();
        let rec = build_default_recovery(&code, CodeName::CssSeven, params).unwrap();
        assert!(ohat_contribution(&code, &rec, e("1100000"), params).unwrap() < 1e-30);
    }
}

#[test]
fn single_complement_vector_recovers_a_damping_pair_at_fourth_order() {
    let code = build_code(CodeName::CssSeven);
    let zero = &code.codewords()[0];
    let term = |g: f64| {
        let params = GadParams::new(g, 0.0).unwrap();
        let s = (1.0 - g) * (1.0 - g);
        let v = SparseState::from_terms(
            128,
            [("0000110", 1.0), ("1100000", -1.0), ("0110011", 1.0), ("0000000", -s)]
                .iter()
                .map(|&(b, a)| (usize::from_str_radix(b, 2).unwrap(), C64::new(a, 0.0))),
        )
        .unwrap()
        .normalized()
        .unwrap();
        let img = apply_enlarged_error(e("1100000"), params, zero).unwrap();
        (inner(zero, &v).unwrap() * inner(&v, &img).unwrap()).norm_sqr() / 4.0
    };
    let (lo, hi) = (0.01, 0.1);
    let exponent = (term(hi) / term(lo)).ln() / (hi / lo).ln();
    assert!((exponent - 4.0).abs() <= 0.2, "exponent {exponent}");
}

#[test]
fn complement_term_respects_crude_bound() {
    let code = build_code(CodeName::CssSeven);
    for g in [0.01, 0.05, 0.1] {
        let params = GadParams::new(g, 0.0).unwrap();
        let rec = build_default_recovery(&code, CodeName::CssSeven, params).unwrap();
        for err in ["1100000", "1010000", "0000011"] {
            let c = ohat_contribution(&code, &rec, e(err), params).unwrap();
            let bound = 2f64.powi(14) / 2.0 * g.powi(4);
            assert!(c <= bound, "{err} at {g}: {c} > {bound}");
        }
    }
}

#[test]
fn error_contribution_includes_complement() {
    let code = build_code(CodeName::CssSeven);
    let params = GadParams::new(0.05, 0.0).unwrap();
    let rec = build_default_recovery(&code, CodeName::CssSeven, params).unwrap();
    let err = e("1100000");
    assert!(error_contribution(&code, &rec, err, params).unwrap() >= ohat_contribution(&code, &rec, err, params).unwrap());
}

#[test]
fn dropping_a_correctable_error_never_helps() {
    let code = build_code(CodeName::FiveQubit);
    let set = default_correctable_set(CodeName::FiveQubit, Regime::Gad);
    for (g, eps) in [(0.05, 0.0), (0.1, 0.02)] {
        let params = GadParams::new(g, eps).unwrap();
        let base = build_recovery(&code, &set, params, RecoveryOptions::default()).unwrap();
        let f = entanglement_fidelity(&code, &base, params, None).unwrap().value;
        for drop in ["10000", "00100", "00003"] {
            let rec = build_recovery(&code, &set.without(e(drop)), params, RecoveryOptions::default()).unwrap();
            let ablated = entanglement_fidelity(&code, &rec, params, None).unwrap().value;
            assert!(ablated <= f + 1e-14, "{drop}: {ablated} > {f}");
        }
    }
}

#[test]
fn fidelity_decreases_with_excitation() {
    let code = build_code(CodeName::FiveQubit);
    let set = default_correctable_set(CodeName::FiveQubit, Regime::Gad);
    let gammas = SweepGrid::linspace(0.01, 0.1, 4);
    let curves: Vec<Vec<SweepRow>> = [0.0, 0.1, 0.3]
        .iter()
        .map(|&c| run_sweep(&code, &set, &SweepGrid { gammas: gammas.clone(), rule: EpsRule::Proportional(c) }, None).unwrap())
        .collect();
    for i in 0..gammas.len() {
        assert!(curves[0][i].fidelity >= curves[1][i].fidelity);
        assert!(curves[1][i].fidelity >= curves[2][i].fidelity);
    }
}

#[test]
fn sweep_is_deterministic_and_matches_single_points() {
    let code = build_code(CodeName::SixDegenerate);
    let set = default_correctable_set(CodeName::SixDegenerate, Regime::Gad);
    let grid = SweepGrid { gammas: vec![0.0, 0.05, 0.1], rule: EpsRule::Fixed(0.01) };
    let a = run_sweep(&code, &set, &grid, None).unwrap();
    let b = run_sweep(&code, &set, &grid, None).unwrap();
    assert_eq!(a, b);
    let params = GadParams::new(0.05, 0.01).unwrap();
    let rec = build_recovery(&code, &set, params, RecoveryOptions::default()).unwrap();
    let f = entanglement_fidelity(&code, &rec, params, Some(4)).unwrap();
    assert_eq!(a[1].fidelity, f.value);
    assert_eq!(a[1].max_weight, 4);
    assert!(a.iter().all(|r| (0.0..=1.0).contains(&r.fidelity)));
}

#[test]
fn sweep_grid_validation() {
    assert_eq!(SweepGrid::linspace(0.0, 0.1, 3), vec![0.0, 0.05, 0.1]);
    let empty = SweepGrid { gammas: vec![], rule: EpsRule::Fixed(0.0) };
    assert!(matches!(empty.points(), Err(FidelityError::InvalidGrid(_))));
    let bad = SweepGrid { gammas: vec![0.5], rule: EpsRule::Proportional(2.0) };
    assert!(bad.points().is_err());
    assert_eq!(default_max_weight(3), 3);
    assert_eq!(default_max_weight(11), 4);
}

#[test]
fn dense_kraus_words_are_consistent() {
    // Sanity check for the oracle: Σ_k A_k†A_k = I on two qubits.
    let ks = gad_kraus(GadParams::new(0.3, 0.2).unwrap());
    let mut sum = DenseMatrix::zeros(4, 4);
    for a in &ks {
        for b in &ks {
            let m = tensor_product(a, b).unwrap();
            sum = sum.add(&m.adjoint().matmul(&m).unwrap()).unwrap();
        }
    }
    assert!(sum.max_abs_diff(&DenseMatrix::identity(4)) < 1e-14);
}
