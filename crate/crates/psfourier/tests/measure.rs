use psfourier::measure::{
    conformality_residual, group_conformality_residual, local_dimension_estimate, patterson_orbit_measure, resolution,
    synthetic, unstable_conditional, AtomicMeasure, PsSettings, TestFunction,
};
use psfourier::schottky::{symmetric_group, word_count, SchottkyGroup};
use psfourier::Error;

const DELTA_REF: f64 = 0.750_26;

fn reference() -> SchottkyGroup {
    symmetric_group(1, 2, 2.0).unwrap().validated().unwrap()
}

#[test]
fn depth_zero_is_a_single_atom() {
    let g = reference();
    let m = patterson_orbit_measure(&g, DELTA_REF, &PsSettings::top_shell(0)).unwrap();
    assert_eq!(m.measure.len(), 1);
    assert_eq!(m.measure.point(0), &[0.0]);
    assert_eq!(m.measure.mass(), 1.0);
    let m = patterson_orbit_measure(&g, DELTA_REF, &PsSettings::orbit_sum(0, 0.05)).unwrap();
    assert_eq!(m.measure.len(), 1);
}

#[test]
fn atom_counts_and_mass() {
    let g = reference();
    let top = patterson_orbit_measure(&g, DELTA_REF, &PsSettings::top_shell(5)).unwrap();
    assert_eq!(top.measure.len() as u64, word_count(2, 5) - word_count(2, 4));
    let orbit = patterson_orbit_measure(&g, DELTA_REF, &PsSettings::orbit_sum(5, 0.05)).unwrap();
    assert_eq!(orbit.measure.len() as u64, word_count(2, 5));
    for m in [&top, &orbit] {
        assert!((m.measure.mass() - 1.0).abs() < 1e-14);
        assert_eq!(m.dropped, 0);
    }
}

#[test]
fn atoms_sit_in_their_nested_balls() {
    let g = reference();
    let m = patterson_orbit_measure(&g, DELTA_REF, &PsSettings::orbit_sum(4, 0.05)).unwrap();
    for (i, w) in m.words.iter().enumerate() {
        if w.is_empty() {
            continue;
        }
        let ball = g.word_ball(w).unwrap();
        assert!(ball.contains(m.measure.point(i)), "word {w}");
    }
}

#[test]
fn divergent_orbit_sum_is_refused() {
    let g = reference();
    let r = patterson_orbit_measure(&g, 0.3, &PsSettings::orbit_sum(8, 0.05));
    assert!(matches!(r, Err(Error::Divergence(_))));
}

#[test]
fn identity_has_zero_residual() {
    let g = reference();
    let m = patterson_orbit_measure(&g, DELTA_REF, &PsSettings::top_shell(6))
        .unwrap()
        .measure;
    let tests = TestFunction::standard_family(&m);
    assert_eq!(tests.len(), 20);
    let id = g.params().identity();
    let r = conformality_residual(&m, &id, DELTA_REF, &tests, &g.params().basepoint(), 1e-9);
    assert_eq!(r, 0.0);
}

#[test]
fn conformality_refines_and_is_sign_sensitive() {
    let g = reference();
    let m8 = patterson_orbit_measure(&g, DELTA_REF, &PsSettings::top_shell(8))
        .unwrap()
        .measure;
    let m10 = patterson_orbit_measure(&g, DELTA_REF, &PsSettings::top_shell(10))
        .unwrap()
        .measure;
    let r8 = group_conformality_residual(&g, &m8, DELTA_REF, 1.0);
    let r10 = group_conformality_residual(&g, &m10, DELTA_REF, 1.0);
    let flipped = group_conformality_residual(&g, &m10, DELTA_REF, -1.0);
    assert!(r10 * 1.5 <= r8, "{r8:.3e} {r10:.3e}");
    assert!(flipped >= 10.0 * r10, "{flipped:.3e} {r10:.3e}");
}

#[test]
fn segment_local_dimension_is_one() {
    let seg = synthetic::segment_in_plane(20_000, 0.4);
    let radii: Vec<f64> = (0..9).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect();
    let ld = local_dimension_estimate(&seg, &radii, 500, 1).unwrap();
    assert!((ld.slope - 1.0).abs() < 0.1, "{}", ld.slope);
}

#[test]
fn point_mass_has_dimension_zero() {
    let m = AtomicMeasure::point_mass(&[0.3, 0.2]);
    let ld = local_dimension_estimate(&m, &[1e-3, 1e-2, 1e-1], 10, 0).unwrap();
    assert_eq!(ld.slope, 0.0);
    assert!(local_dimension_estimate(&m, &[1e-2, 1e-1], 10, 0).is_err());
}

#[test]
fn local_dimension_is_seed_deterministic() {
    let seg = synthetic::uniform_square(2000, 4);
    let radii = [0.03, 0.1, 0.3, 1.0];
    let a = local_dimension_estimate(&seg, &radii, 50, 9).unwrap();
    let b = local_dimension_estimate(&seg, &radii, 50, 9).unwrap();
    assert_eq!(a.slope.to_bits(), b.slope.to_bits());
}

#[test]
fn reference_local_dimension_tracks_delta() {
    let g = reference();
    let m = patterson_orbit_measure(&g, DELTA_REF, &PsSettings::top_shell(10))
        .unwrap()
        .measure;
    let eta = resolution(&m);
    let radii: Vec<f64> = (0..10).map(|k| 20.0 * eta * 10f64.powf(k as f64 / 4.0)).collect();
    let ld = local_dimension_estimate(&m, &radii, 400, 3).unwrap();
    assert!((ld.slope - DELTA_REF).abs() < 0.05, "slope {} eta {eta:.2e}", ld.slope);
}

#[test]
fn identity_frame_conditional() {
    let g = reference();
    let p = g.params();
    let m = patterson_orbit_measure(&g, DELTA_REF, &PsSettings::top_shell(6))
        .unwrap()
        .measure;
    let c = unstable_conditional(&m, &p.identity(), 100.0, DELTA_REF, &p.basepoint(), p.tol).unwrap();
    assert_eq!(c.measure.len(), m.len());
    assert_eq!(c.excluded + c.outside_window, 0);
    for i in 0..m.len() {
        assert!((c.measure.point(i)[0] + m.point(i)[0]).abs() < 1e-12);
        let x = m.point(i)[0];
        let expect = m.weight(i) * (1.0 + 0.5 * x * x).powf(DELTA_REF);
        assert!((c.measure.weight(i) / expect - 1.0).abs() < 1e-9);
    }
    let small = unstable_conditional(&m, &p.identity(), 1.0, DELTA_REF, &p.basepoint(), p.tol).unwrap();
    assert!(small.measure.mass() < c.measure.mass());
}

#[test]
fn flow_scales_mass_by_exp_delta_t() {
    let g = reference();
    let p = g.params();
    let m = patterson_orbit_measure(&g, DELTA_REF, &PsSettings::top_shell(8))
        .unwrap()
        .measure;
    let o = p.basepoint();
    let base = unstable_conditional(&m, &p.identity(), 10.0, DELTA_REF, &o, p.tol).unwrap();
    let m0 = base.measure.mass_in_box(&[-0.5], &[0.5]);
    for t in [0.5, 1.0] {
        let ct = unstable_conditional(&m, &p.geodesic_flow(t), 10.0, DELTA_REF, &o, p.tol).unwrap();
        let half = 0.5 * f64::exp(t);
        let mt = ct.measure.mass_in_box(&[-half], &[half]);
        let ratio = mt / m0 / (DELTA_REF * t).exp();
        assert!((ratio - 1.0).abs() < 1e-9, "t={t} ratio {ratio}");
    }
}

#[test]
fn unipotent_and_rotation_equivariance() {
    let g = symmetric_group(2, 3, 2.5).unwrap().validated().unwrap();
    let p = *g.params();
    let m = patterson_orbit_measure(&g, 0.5, &PsSettings::top_shell(4))
        .unwrap()
        .measure;
    let o = p.basepoint();
    let x = p.unipotent_minus(&[0.2, -0.1]).unwrap().compose(&p.geodesic_flow(0.3));
    let base = unstable_conditional(&m, &x, 1e6, 0.5, &o, p.tol).unwrap();
    let y = [0.37, -0.81];
    let shifted = unstable_conditional(&m, &p.unipotent_plus(&y).unwrap().compose(&x), 1e6, 0.5, &o, p.tol).unwrap();
    let rot = psfourier::hyperbolic::rotation2(1.1);
    let rotated = unstable_conditional(&m, &p.rotation_embed(&rot).unwrap().compose(&x), 1e6, 0.5, &o, p.tol).unwrap();
    assert_eq!(base.measure.len(), shifted.measure.len());
    for i in 0..base.measure.len() {
        let v = base.measure.point(i);
        let w = shifted.measure.point(i);
        let scale = 1.0 + v[0].abs() + v[1].abs();
        assert!((w[0] - (v[0] - y[0])).abs() < 1e-9 * scale && (w[1] - (v[1] - y[1])).abs() < 1e-9 * scale);
        assert!((shifted.measure.weight(i) / base.measure.weight(i) - 1.0).abs() < 1e-9);
        let r = rotated.measure.point(i);
        let mv = [
            rot[(0, 0)] * v[0] + rot[(0, 1)] * v[1],
            rot[(1, 0)] * v[0] + rot[(1, 1)] * v[1],
        ];
        assert!((r[0] - mv[0]).abs() < 1e-9 * scale && (r[1] - mv[1]).abs() < 1e-9 * scale);
        assert!((rotated.measure.weight(i) / base.measure.weight(i) - 1.0).abs() < 1e-9);
    }
}
