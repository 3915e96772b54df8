use fracharm::green_ball::{green_kernel, GreenParams, KernelPath};
use fracharm::par;
use fracharm::span_harness::{
    degenerate_dictionary, jet_matrix, kprime, monomial, multi_indices, ode_kernel, random_dictionary, rescaled_monomial,
    solve_jet, span_rank, BlockContext, BuildingBlock, DictOptions, JetMatrix, OperatorSpec,
};
use fracharm::specfun::{mittag_leffler, SeriesControl};
use proptest::prelude::*;
use std::sync::OnceLock;

const K: usize = 3;
const DIM: usize = 3;

fn toy_jets() -> &'static (Vec<BuildingBlock>, JetMatrix) {
    static CELL: OnceLock<(Vec<BuildingBlock>, JetMatrix)> = OnceLock::new();
    CELL.get_or_init(|| {
        let ctx = BlockContext::new(OperatorSpec::toy()).unwrap();
        let blocks = random_dictionary(&ctx, 4 * kprime(DIM, K), &DictOptions::default()).unwrap();
        let jm = jet_matrix(&blocks, K).unwrap();
        (blocks, jm)
    })
}

fn ball_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-1.0f64..1.0, n), 0.0f64..0.98).prop_map(|(v, r)| {
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3);
        v.iter().map(|a| a / nv * r).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rescaling_leaves_monomials_fixed(
        eta in 1e-3f64..1.0,
        z in prop::collection::vec(-1.0f64..1.0, 3),
        i0 in 0usize..4,
        i1 in 0usize..3,
        i2 in 0usize..3,
    ) {
        let op = OperatorSpec::toy();
        let iota = [i0, i1, i2];
        let a = rescaled_monomial(&op, &iota, eta, &z).unwrap();
        let b = monomial(&z, &iota);
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300) + 1e-15);
    }

    #[test]
    fn ode_kernel_jets_are_unit_and_solve_the_equation(
        r in prop::collection::vec(1usize..4, 1..3),
        neg in any::<bool>(),
        x in prop::collection::vec(-0.5f64..0.5, 2),
    ) {
        let sign = if neg { -1.0 } else { 1.0 };
        let v = ode_kernel(&r, sign).unwrap();
        let zero = vec![0.0; r.len()];
        for beta in multi_indices(r.len(), 4) {
            let j = v.jet(&beta);
            prop_assert!(j.abs() == 1.0);
            prop_assert!((v.deriv(&zero, &beta) - j).abs() < 1e-14);
        }
        let x = &x[..r.len()];
        let lhs = v.deriv(x, &r);
        prop_assert!((lhs - sign * v.value(x)).abs() < 1e-12 * v.value(x).abs().max(1.0));
    }

    #[test]
    fn multi_indices_are_distinct_and_graded(dim in 1usize..4, k in 0usize..6) {
        let idx = multi_indices(dim, k);
        prop_assert_eq!(idx.len(), kprime(dim, k));
        let orders: Vec<usize> = idx.iter().map(|i| i.iter().sum()).collect();
        prop_assert!(orders.windows(2).all(|w| w[0] <= w[1]));
        let mut sorted = idx.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), idx.len());
    }

    #[test]
    fn green_kernel_is_symmetric_and_positive(
        (x, y) in (1usize..3).prop_flat_map(|n| (ball_point(n), ball_point(n))),
        s in 0.15f64..1.0,
    ) {
        let n = x.len();
        prop_assume!(x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() > 1e-6);
        let gp = GreenParams::new(n, s).unwrap();
        let a = green_kernel(&x, &y, &gp, KernelPath::Quadrature).unwrap();
        let b = green_kernel(&y, &x, &gp, KernelPath::Quadrature).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn mittag_leffler_recurrence(alpha in 0.3f64..2.0, beta in 0.5f64..2.5, z in -2.0f64..2.0) {
        // E_{α,β}(z) = 1/Γ(β) + z E_{α,α+β}(z)
        let ctl = SeriesControl::default();
        let lhs = mittag_leffler(alpha, beta, z, &ctl);
        let rhs = mittag_leffler(alpha, alpha + beta, z, &ctl);
        if let (Ok(l), Ok(r)) = (lhs, rhs) {
            let g = fracharm::specfun::gamma(beta).unwrap();
            // accepted results carry at most max_cancellation relative loss
            let scale = l.abs().max((z * r).abs()).max(1.0 / g.abs());
            prop_assert!((l - (1.0 / g + z * r)).abs() < 4.0 * ctl.max_cancellation * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jet_solve_is_linear(
        t1 in prop::collection::vec(-1.0f64..1.0, 20),
        t2 in prop::collection::vec(-1.0f64..1.0, 20),
        c in -3.0f64..3.0,
    ) {
        let (_, jm) = toy_jets();
        let combo: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| a + c * b).collect();
        let s1 = solve_jet(jm, &t1).unwrap();
        let s2 = solve_jet(jm, &t2).unwrap();
        let s3 = solve_jet(jm, &combo).unwrap();
        let scale = s1.coeffs.iter().chain(&s2.coeffs).fold(0.0f64, |m, v| m.max(v.abs())) * (1.0 + c.abs());
        for i in 0..s3.coeffs.len() {
            let lin = s1.coeffs[i] + c * s2.coeffs[i];
            prop_assert!((s3.coeffs[i] - lin).abs() <= 1e-8 * scale);
        }
        prop_assert!(s3.residual < 1e-9);
    }
}

#[test]
fn toy_dictionary_spans_the_jets() {
    let (_, jm) = toy_jets();
    let rep = span_rank(jm);
    assert_eq!(rep.rows, kprime(DIM, K));
    assert!(rep.full, "rank {} of {}", rep.rank, rep.rows);
}

#[test]
fn duplicated_block_has_rank_one() {
    let ctx = BlockContext::new(OperatorSpec::toy()).unwrap();
    let blocks = degenerate_dictionary(&ctx, 30, &DictOptions::default()).unwrap();
    let rep = span_rank(&jet_matrix(&blocks, K).unwrap());
    assert_eq!(rep.rank, 1);
    assert!(!rep.full);
}

#[test]
fn duplicating_columns_keeps_the_rank() {
    let (blocks, jm) = toy_jets();
    let mut doubled = blocks.clone();
    doubled.extend(blocks.iter().take(7).cloned());
    let rep = span_rank(&jet_matrix(&doubled, K).unwrap());
    assert_eq!(rep.rank, span_rank(jm).rank);
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let (blocks, jm) = toy_jets();
    par::force_sequential(true);
    let seq = jet_matrix(blocks, K).unwrap();
    par::force_sequential(false);
    assert_eq!(seq.entries, jm.entries);
}
