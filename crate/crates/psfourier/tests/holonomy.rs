use nalgebra::DMatrix;
use proptest::prelude::*;
use psfourier::holonomy::{
    decompose, factorize_product, lambda_fn, lambda_linear, linearization_error, linearization_suite, phi_closed_form,
    property_suite, tau_closed_form, HolonomyInput,
};
use psfourier::hyperbolic::{random_rotation, rotation2, GroupElement, ModelParams};
use psfourier::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn input(v: &[f64], w: &[f64], m: DMatrix<f64>, tau: f64) -> HolonomyInput {
    HolonomyInput::new(v.to_vec(), w.to_vec(), m, tau).unwrap()
}

#[test]
fn lambda_examples() {
    assert_eq!(lambda_fn(&[0.0, 0.0], &[0.3, 0.1]), 1.0);
    assert_eq!(lambda_fn(&[0.5, 0.0], &[0.0, 0.5]), 1.015625);
    let (v, w) = ([0.2, -0.3, 0.1], [0.4, 0.05, -0.2]);
    assert_eq!(lambda_fn(&v, &w), lambda_fn(&w, &v));
    let gap = lambda_fn(&v, &w) - lambda_linear(&v, &w);
    let expect = 0.25 * (0.04 + 0.09 + 0.01) * (0.16 + 0.0025 + 0.04);
    assert!((gap - expect).abs() < 1e-15);
}

#[test]
fn closed_form_special_cases() {
    let id = DMatrix::identity(2, 2);
    let v = [0.3, -0.2];
    let h = input(&v, &[0.0, 0.0], id.clone(), 0.0);
    assert_eq!(phi_closed_form(&h).unwrap(), v.to_vec());
    let h = input(&v, &[0.0, 0.0], id.clone(), 0.7);
    let phi = phi_closed_form(&h).unwrap();
    for (p, x) in phi.iter().zip(v) {
        assert!((p - (-0.7f64).exp() * x).abs() < 1e-15);
    }
    let h = input(&[0.0, 0.0], &[0.2, 0.4], id, 1.3);
    assert_eq!(tau_closed_form(&h).unwrap(), 1.3);
}

#[test]
fn trivial_factorizations() {
    let m = rotation2(0.0);
    let f = factorize_product(&[0.0, 0.0], &[0.0, 0.0], 0.4, &m).unwrap();
    assert_eq!(f.y_out, vec![0.0, 0.0]);
    assert_eq!(f.phi, vec![0.0, 0.0]);
    assert!((f.t_out - 0.4).abs() < 1e-15);
    assert!((&f.m_out - &m).amax() < 1e-15);
    assert!(f.residual < 1e-15);

    let m = rotation2(0.9);
    let x = [0.3, 0.1];
    let f = factorize_product(&x, &[0.0, 0.0], 0.6, &m).unwrap();
    let expect = m.transpose() * DMatrix::from_column_slice(2, 1, &x) * (-0.6f64).exp();
    for i in 0..2 {
        assert!((f.phi[i] - expect[i]).abs() < 1e-14);
        assert!(f.y_out[i].abs() < 1e-14);
    }
    assert!((f.t_out - 0.6).abs() < 1e-14);
}

#[test]
fn regime_is_enforced() {
    let m = rotation2(0.1);
    assert!(matches!(
        factorize_product(&[0.6, 0.0], &[0.0, 0.0], 0.0, &m),
        Err(Error::Validation(_))
    ));
    assert!(HolonomyInput::new(vec![0.1, 0.1], vec![0.0, 0.51], m.clone(), 0.0).is_err());
    assert!(HolonomyInput::new(vec![0.1], vec![0.0, 0.1], m.clone(), 0.0).is_err());
    let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    assert!(HolonomyInput::new(vec![0.1, 0.1], vec![0.0, 0.1], bad, 0.0).is_err());
}

#[test]
fn outside_the_cell_is_reported() {
    let p = ModelParams::with_dim(1).unwrap();
    // Weyl element swapping e_0 and e_2 has zero leading entry
    let mut w = DMatrix::<f64>::zeros(3, 3);
    w[(0, 2)] = 1.0;
    w[(2, 0)] = 1.0;
    w[(1, 1)] = -1.0;
    let g = GroupElement::from_matrix(&w, 1e-9).unwrap();
    assert!(matches!(decompose(&p, &g), Err(Error::Decomposition(_))));
}

#[test]
fn round_trip_suite() {
    for d in 1..=3 {
        let r = property_suite(d, 2000, 11 + d as u64, false).unwrap();
        assert!(
            r.all_passed(),
            "d={d} phi {:.2e} tau {:.2e} res {:.2e}",
            r.max_phi_err,
            r.max_tau_err,
            r.max_residual
        );
        assert!(r.max_phi_err < 1e-10 && r.max_tau_err < 1e-10);
    }
}

#[test]
fn injected_sign_bug_is_caught() {
    let r = property_suite(2, 200, 5, true).unwrap();
    assert!(!r.all_passed());
    assert!(r.max_tau_err > 1e-3);
}

#[test]
fn factor_blocks_are_group_elements() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = ModelParams::with_dim(3).unwrap();
    for _ in 0..200 {
        let h = HolonomyInput::random(3, &mut rng);
        let f = factorize_product(&h.v, &h.w, h.tau, &h.m).unwrap();
        let blocks = [
            p.unipotent_minus(&f.y_out).unwrap(),
            p.rotation_embed(&f.m_out).unwrap(),
            p.geodesic_flow(f.t_out),
            p.unipotent_plus(&f.phi).unwrap(),
        ];
        for b in &blocks {
            assert!(b.invariant_residual() < 1e-12);
        }
        let mtm = f.m_out.transpose() * &f.m_out - DMatrix::<f64>::identity(3, 3);
        assert!(mtm.amax() < 1e-12);
    }
}

#[test]
fn cocycle_composition() {
    // factoring n+(x1) * P agrees with factoring n+(x1) * (rebuilt factors)
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = ModelParams::with_dim(2).unwrap();
    for _ in 0..200 {
        let h = HolonomyInput::random(2, &mut rng);
        let x1 = HolonomyInput::random(2, &mut rng).v;
        let prod = p
            .unipotent_plus(&h.v)
            .unwrap()
            .compose(&p.unipotent_minus(&h.w).unwrap())
            .compose(&p.geodesic_flow(h.tau))
            .compose(&p.rotation_embed(&h.m).unwrap());
        let first = decompose(&p, &prod).unwrap();
        let rebuilt = p
            .unipotent_minus(&first.y_out)
            .unwrap()
            .compose(&p.rotation_embed(&first.m_out).unwrap())
            .compose(&p.geodesic_flow(first.t_out))
            .compose(&p.unipotent_plus(&first.phi).unwrap());
        let shift = p.unipotent_plus(&x1).unwrap();
        let a = decompose(&p, &shift.compose(&rebuilt)).unwrap();
        let b = decompose(&p, &shift.compose(&prod)).unwrap();
        assert!((a.t_out - b.t_out).abs() < 1e-8);
        for i in 0..2 {
            assert!((a.phi[i] - b.phi[i]).abs() < 1e-8);
            assert!((a.y_out[i] - b.y_out[i]).abs() < 1e-8);
        }
        assert!((&a.m_out - &b.m_out).amax() < 1e-8);
    }
}

#[test]
fn linearization_is_exact_without_w() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let mut h = HolonomyInput::random(2, &mut rng);
        h.w = vec![0.0, 0.0];
        for t in [0.0, 3.0, 10.0] {
            assert!(linearization_error(&h, &[3.0, -7.0], t).unwrap() < 1e-12);
        }
    }
}

#[test]
fn linearization_decays_exponentially() {
    let r = linearization_suite(2, 100, 17, 5.0, 10.0).unwrap();
    assert!(r.passed(), "max ratio {:.3e} bound {:.3e}", r.max_ratio, r.bound);
    assert_eq!(r.ratios.len(), 100);
}

#[test]
fn linearization_shrinks_with_w() {
    let m = random_rotation(2, &mut ChaCha8Rng::seed_from_u64(2));
    let errs: Vec<f64> = [0.4, 0.2, 0.1]
        .iter()
        .map(|s| {
            let h = input(&[0.3, 0.35], &[*s * 0.6, *s * 0.8], m.clone(), 0.5);
            linearization_error(&h, &[20.0, 5.0], 1.0).unwrap()
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(linearization_error(&input(&[0.1, 0.1], &[0.1, 0.1], m.clone(), 0.0), &[1.0, 1.0], -1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn closed_forms_match_factorization(seed in any::<u64>(), d in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = HolonomyInput::random(d, &mut rng);
        let f = factorize_product(&h.v, &h.w, h.tau, &h.m).unwrap();
        prop_assert!(f.residual < 1e-10);
        prop_assert!((tau_closed_form(&h).unwrap() - f.t_out).abs() < 1e-10);
        for (a, b) in phi_closed_form(&h).unwrap().iter().zip(&f.phi) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
