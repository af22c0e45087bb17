//! Cross-module checks on fixed instances.

use ncdomain::berezin::{build_kernel_with_table, model_monomial, transform};
use ncdomain::coefficients::weights_recursive;
use ncdomain::dilation::{dilate, wold_shift_check, DilationOptions};
use ncdomain::domain::defect_decay;
use ncdomain::fock::{build_left_model, poly_operator};
use ncdomain::linalg::{self, c, CMat, C64};
use ncdomain::sampling::{random_commuting_member, random_member, random_row_coisometry};
use ncdomain::variety::{compress_models, constrained_kernel, symmetric_basis, ConstraintSet};
use ncdomain::words::Word;
use ncdomain::{FreePolynomial, OperatorTuple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn w(letters: &[u32]) -> Word {
    Word::new(letters.to_vec())
}

fn block2(a: &[CMat; 4]) -> CMat {
    let d = a[0].nrows();
    let mut out = CMat::zeros(2 * d, 2 * d);
    for (k, m) in a.iter().enumerate() {
        out.view_mut(((k / 2) * d, (k % 2) * d), (d, d)).copy_from(m);
    }
    out
}

#[test]
fn berezin_transform_is_completely_contractive() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let f = FreePolynomial::linear_sum(2);
    let table = weights_recursive(&f, 2, 6).unwrap();
    let models = build_left_model(&table);
    let words = [w(&[]), w(&[1]), w(&[2]), w(&[1, 2]), w(&[2, 2])];
    for _ in 0..10 {
        let t = random_member(&f, 2, 3, rng.random_range(0.1..0.9), &mut rng).unwrap();
        let k = build_kernel_with_table(&table, &t).unwrap();
        let mut g = Vec::new();
        let mut bg = Vec::new();
        for _ in 0..4 {
            let a = &words[rng.random_range(0..words.len())];
            let b = &words[rng.random_range(0..words.len())];
            let coeff = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let op = model_monomial(&models, a, b).scale(coeff);
            bg.push(transform(&k, &op).unwrap());
            g.push(op.to_dense());
        }
        let lhs = linalg::op_norm(&block2(&[bg[0].clone(), bg[1].clone(), bg[2].clone(), bg[3].clone()]));
        let rhs = linalg::op_norm(&block2(&[g[0].clone(), g[1].clone(), g[2].clone(), g[3].clone()]));
        assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
    }
}

#[test]
fn berezin_transform_is_multiplicative_on_analytic_polynomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let f = FreePolynomial::from_real(2, &[(&[1], 1.0), (&[2], 1.0), (&[2, 1], 1.0)]).unwrap();
    let big_n = 10;
    let table = weights_recursive(&f, 1, big_n).unwrap();
    let models = build_left_model(&table);
    let g = FreePolynomial::from_real(2, &[(&[], 0.5), (&[1], 1.0), (&[1, 2], -0.4)]).unwrap();
    let h = FreePolynomial::from_real(2, &[(&[2], 0.7), (&[2, 1], 0.3)]).unwrap();
    let l1 = |p: &FreePolynomial| p.terms().map(|(_, c)| c.norm()).sum::<f64>();
    for _ in 0..4 {
        let t = random_member(&f, 1, 3, 0.02, &mut rng).unwrap();
        let k = build_kernel_with_table(&table, &t).unwrap();
        assert!(k.tail_certified());
        let bg = transform(&k, &poly_operator(&g, &models)).unwrap();
        let bh = transform(&k, &poly_operator(&h, &models)).unwrap();
        let bgh = transform(&k, &poly_operator(&g.mul(&h), &models)).unwrap();
        let err = linalg::op_norm(&(bgh - &bg * &bh));
        let allowance = 4.0 * l1(&g) * l1(&h) * k.tail_bound_from(big_n - 4) + 1e-12;
        assert!(err <= allowance, "{err:e} > {allowance:e}");
        // and B[g] = g(T) for pure T
        let direct = t.eval(&g).unwrap();
        assert!(linalg::op_norm(&(bg - direct)) <= 2.0 * l1(&g) * k.tail_bound_from(big_n - 2) + 1e-12);
    }
}

#[test]
fn commuting_members_have_symmetric_kernel_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let f = FreePolynomial::linear_sum(2);
    let q = ConstraintSet::commutators(2);
    let big_n = 6;
    let table = weights_recursive(&f, 2, big_n).unwrap();
    let sym = symmetric_basis(&table);
    let b = compress_models(&build_left_model(&table), &sym.basis);
    for _ in 0..4 {
        let t = random_commuting_member(&f, 2, 3, 0.3, &mut rng).unwrap();
        let k = build_kernel_with_table(&table, &t).unwrap();
        let kq = constrained_kernel(&k, &sym.basis, &t, &q, 1e-9).unwrap();
        assert!(kq.range_residual <= 1e-12, "{}", kq.range_residual);
        assert!(kq.norm_loss <= 1e-12);
        assert!(kq.intertwining_residual(&t, &b, &sym.basis, big_n) <= 1e-12);
    }
    // a non-commuting tuple is refused
    let t = random_member(&f, 2, 3, 0.3, &mut rng).unwrap();
    let k = build_kernel_with_table(&table, &t).unwrap();
    assert!(constrained_kernel(&k, &sym.basis, &t, &q, 1e-9).is_err());
}

#[test]
fn shift_multiplicity_classifies_shifts() {
    let f = FreePolynomial::linear_sum(2);
    let q = ConstraintSet::commutators(2);
    let table = weights_recursive(&f, 2, 3).unwrap();
    let sym = symmetric_basis(&table);
    let b = OperatorTuple::new(compress_models(&build_left_model(&table), &sym.basis)).unwrap();
    let mult: Vec<usize> = (1..=3)
        .map(|d| {
            let r = wold_shift_check(&f, 2, &b.tensor_identity(d), &q, 3, 1e-9).unwrap();
            assert!(r.all_agree && r.pure);
            r.multiplicity
        })
        .collect();
    assert_eq!(mult, vec![1, 2, 3]);
}

#[test]
fn defect_powers_decay_on_pure_members() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let f = FreePolynomial::from_real(1, &[(&[1], 1.0)]).unwrap();
    for m in 2..=3 {
        let t = random_member(&f, m, 3, 0.5, &mut rng).unwrap();
        for k in 1..m {
            let early = defect_decay(&f, &t, k, 4).unwrap();
            let late = defect_decay(&f, &t, k, 200).unwrap();
            assert!(late < 1e-6 && late <= early, "k={k}: {early:e} -> {late:e}");
        }
    }
}

#[test]
fn boundary_condition_transfers_to_dilation() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let f = FreePolynomial::linear_sum(2);
    let q = ConstraintSet::empty(2);
    let opts = DilationOptions::default();
    let coisometry = random_row_coisometry(&f, 2, &mut rng).unwrap();
    let d = dilate(&f, 1, &coisometry, &q, &opts).unwrap();
    assert!(d.phi_t_deviation <= 1e-12 && d.phi_v_deviation <= 1e-9);
    let pure = random_member(&f, 1, 2, 0.02, &mut rng).unwrap();
    let d = dilate(&f, 1, &pure, &q, &opts).unwrap();
    assert!(d.phi_t_deviation > 1e-9 && d.phi_v_deviation > 1e-9);
    assert_eq!(d.k_dim, 0);
}

#[test]
fn generator_transform_of_scalar_point() {
    // B_lambda[W_i] = lambda_i; a degree-one symbol also loses shell N
    let f = FreePolynomial::linear_sum(2);
    let lam = [C64::new(0.3, 0.1), C64::new(-0.2, 0.4)];
    let t = OperatorTuple::scalar(&lam);
    let table = weights_recursive(&f, 1, 12).unwrap();
    let k = build_kernel_with_table(&table, &t).unwrap();
    let models = build_left_model(&table);
    for i in 0..2 {
        let v = transform(&k, &models[i]).unwrap();
        let err = (v[(0, 0)] - lam[i]).norm();
        assert!(err <= k.tail_bound_from(11) + 1e-12, "{err:e}");
    }
    let id = transform(&k, &model_monomial(&models, &w(&[]), &w(&[]))).unwrap();
    assert!((id[(0, 0)] - c(1.0)).norm() <= k.tail_bound() + 1e-12);
}
