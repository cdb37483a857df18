use proptest::prelude::*;
use psfourier::hyperbolic::{random_rotation, BoundaryPoint, GroupElement, HyperbolicPoint, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_element(p: &ModelParams, rng: &mut ChaCha8Rng, scale: f64) -> GroupElement {
    let x: Vec<f64> = (0..p.d).map(|_| rng.random_range(-scale..scale)).collect();
    let y: Vec<f64> = (0..p.d).map(|_| rng.random_range(-scale..scale)).collect();
    let t = rng.random_range(-scale..scale);
    let m = random_rotation(p.d, rng);
    p.unipotent_plus(&x)
        .unwrap()
        .compose(&p.unipotent_minus(&y).unwrap())
        .compose(&p.geodesic_flow(t))
        .compose(&p.rotation_embed(&m).unwrap())
}

fn random_point(p: &ModelParams, rng: &mut ChaCha8Rng) -> HyperbolicPoint {
    random_element(p, rng, 1.5).act_point(&p.basepoint())
}

fn random_boundary(p: &ModelParams, rng: &mut ChaCha8Rng) -> BoundaryPoint {
    let x: Vec<f64> = (0..p.d).map(|_| rng.random_range(-3.0..3.0)).collect();
    p.chart_to_boundary(&x).unwrap()
}

#[test]
fn busemann_cocycle_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for d in 1..=3 {
        let p = ModelParams::with_dim(d).unwrap();
        for _ in 0..1000 {
            let xi = random_boundary(&p, &mut rng);
            let (x, y, z) = (
                random_point(&p, &mut rng),
                random_point(&p, &mut rng),
                random_point(&p, &mut rng),
            );
            let lhs = p.busemann(&xi, &x, &z).unwrap();
            let rhs = p.busemann(&xi, &x, &y).unwrap() + p.busemann(&xi, &y, &z).unwrap();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    assert!(worst < 1e-8, "{worst:.3e}");
}

#[test]
fn busemann_is_bounded_by_distance_and_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = ModelParams::with_dim(2).unwrap();
    for _ in 0..300 {
        let xi = random_boundary(&p, &mut rng);
        let x = random_point(&p, &mut rng);
        let y = random_point(&p, &mut rng);
        let b = p.busemann(&xi, &x, &y).unwrap();
        assert!(b.abs() <= p.distance(&x, &y).unwrap() + 1e-9);
        let g = random_element(&p, &mut rng, 1.0);
        let gb = p
            .busemann(&g.act_boundary(&xi), &g.act_point(&x), &g.act_point(&y))
            .unwrap();
        assert!((b - gb).abs() < 1e-8);
    }
}

#[test]
fn distance_is_invariant_and_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = ModelParams::with_dim(3).unwrap();
    for _ in 0..300 {
        let x = random_point(&p, &mut rng);
        let y = random_point(&p, &mut rng);
        let g = random_element(&p, &mut rng, 1.0);
        let dxy = p.distance(&x, &y).unwrap();
        assert!((dxy - p.distance(&y, &x).unwrap()).abs() < 1e-12);
        assert!((dxy - p.distance(&g.act_point(&x), &g.act_point(&y)).unwrap()).abs() < 1e-9);
        assert_eq!(p.distance(&x, &x).unwrap(), 0.0);
    }
}

#[test]
fn boundary_action_matches_chart_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = ModelParams::with_dim(2).unwrap();
    for _ in 0..200 {
        let g = random_element(&p, &mut rng, 0.5);
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let Ok(gx) = g.act_chart(&x, p.tol) else { continue };
        let via = g.act_boundary(&p.chart_to_boundary(&x).unwrap());
        assert!(via.approx_eq(&p.chart_to_boundary(&gx).unwrap(), 1e-9));
    }
}

proptest! {
    #[test]
    fn inverse_and_form_preservation(seed in any::<u64>(), d in 1usize..=4) {
        let p = ModelParams::with_dim(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_element(&p, &mut rng, 2.0);
        prop_assert!(g.invariant_residual() < 1e-12);
        prop_assert!(g.compose(&g.inverse()).max_abs_diff(&p.identity()) < 1e-12);
        prop_assert!((g.det() - 1.0).abs() < 1e-9);
        let x = random_point(&p, &mut rng);
        let q = p.quadratic_form(g.act_point(&x).coords()).unwrap();
        prop_assert!((q - p.quadratic_form(x.coords()).unwrap()).abs() < 1e-9 * (1.0 + x.coords()[0].abs()).powi(2));
    }

    #[test]
    fn flow_conjugates_unipotents(seed in any::<u64>(), t in -3.0f64..3.0) {
        let p = ModelParams::with_dim(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs = p.geodesic_flow(t).compose(&p.unipotent_plus(&x).unwrap()).compose(&p.geodesic_flow(-t));
        let ex: Vec<f64> = x.iter().map(|v| v * t.exp()).collect();
        prop_assert!(lhs.max_abs_diff(&p.unipotent_plus(&ex).unwrap()) < 1e-12 * (1.0 + (2.0 * t).exp()));
    }
}
