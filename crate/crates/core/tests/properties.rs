//! Property tests for the algebraic and metric invariants.

use nalgebra::DVector;
use proptest::prelude::*;

use finsler_core::{
    catalog, FinslerStructure, InnerProduct, InvariantVectorField, PhiFunction,
};

fn vec3(range: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-range..range, 3).prop_map(DVector::from_vec)
}

fn make_structure(phi: PhiFunction, x3: f64) -> FinslerStructure {
    let alg = catalog("abelian3").unwrap().algebra;
    let ip = InnerProduct::identity(3);
    let x = InvariantVectorField::new(DVector::from_vec(vec![0.0, 0.0, x3])).unwrap();
    FinslerStructure::new(alg, ip, x, phi, false).unwrap()
}

// constructed once: the admissibility scan is the expensive part
static RANDERS: std::sync::LazyLock<FinslerStructure> =
    std::sync::LazyLock::new(|| make_structure(PhiFunction::randers(), 0.5));
static MATSUMOTO: std::sync::LazyLock<FinslerStructure> =
    std::sync::LazyLock::new(|| make_structure(PhiFunction::matsumoto(), 0.4));
static RIEMANNIAN: std::sync::LazyLock<FinslerStructure> =
    std::sync::LazyLock::new(|| make_structure(PhiFunction::series(vec![1.0], 1.0).unwrap(), 0.0));

proptest! {
    #[test]
    fn bracket_bilinear_and_antisymmetric(
        x in vec3(5.0), y in vec3(5.0), z in vec3(5.0), a in -3.0..3.0f64, b in -3.0..3.0f64
    ) {
        for name in ["heisenberg3", "so3", "aff1"] {
            let alg = catalog(name).unwrap().algebra;
            let n = alg.dim();
            let x = DVector::from_fn(n, |i, _| x[i.min(2)]);
            let y = DVector::from_fn(n, |i, _| y[i.min(2)]);
            let z = DVector::from_fn(n, |i, _| z[i.min(2)]);
            let lin = alg.bracket(&(&x * a + &y * b), &z).unwrap();
            let split = alg.bracket(&x, &z).unwrap() * a + alg.bracket(&y, &z).unwrap() * b;
            prop_assert!((lin - split).amax() < 1e-10);
            let anti = alg.bracket(&x, &y).unwrap() + alg.bracket(&y, &x).unwrap();
            prop_assert!(anti.amax() < 1e-12);
        }
    }

    #[test]
    fn pullback_inverts_translation(g_coords in vec3(2.0), y in vec3(2.0)) {
        for name in ["heisenberg3", "abelian3"] {
            let entry = catalog(name).unwrap();
            let model = entry.model.unwrap();
            let h = model.exp_coords(&g_coords).unwrap();
            let y_mat = model.algebra_matrix(&y).unwrap();
            let y_h = model.differential_left_translate(&h, &y_mat).unwrap();
            let back = model.pull_to_identity(&h, &y_h).unwrap();
            prop_assert!((back - &y).amax() <= 1e-10, "model {name}");
        }
    }

    #[test]
    fn minkowski_norm_positive_and_homogeneous(
        y in vec3(3.0), lambda in 0.05..20.0f64
    ) {
        prop_assume!(y.norm() > 1e-3);
        for fs in [&*RANDERS, &*MATSUMOTO] {
            let kind = fs.phi().kind_name();
            let f = fs.minkowski_norm(&y).unwrap();
            prop_assert!(f > 0.0, "{kind}: F = {f}");
            let res = fs.homogeneity_check(&y, lambda).unwrap();
            prop_assert!(res <= 1e-10, "{kind}: residual {res:.3e}");
        }
    }

    #[test]
    fn riemannian_degeneration(y in vec3(3.0)) {
        prop_assume!(y.norm() > 1e-3);
        let f = RIEMANNIAN.minkowski_norm(&y).unwrap();
        prop_assert!((f - y.norm()).abs() <= 1e-12);
    }

    #[test]
    fn randers_two_route_agreement(y in vec3(3.0)) {
        prop_assume!(y.norm() > 1e-3);
        let via_phi = RANDERS.minkowski_norm(&y).unwrap();
        let direct = y.norm() + 0.5 * y[2];
        prop_assert!((via_phi - direct).abs() <= 1e-12);
    }

    #[test]
    fn margin_at_zero_is_phi_at_zero(c0 in 0.1..5.0f64, c1 in -1.0..1.0f64) {
        let phi = PhiFunction::series(vec![c0, c1], 1.0).unwrap();
        let m = finsler_core::regularity_margin(&phi, 0.0).unwrap();
        prop_assert!((m - c0).abs() < 1e-12);
    }
}
