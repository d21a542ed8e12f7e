//! Convergence and structural identities of the discrete operators.

use std::sync::Arc;

use proptest::prelude::*;
use solitonkit::discrete_ops::ops::{self, Twist};
use solitonkit::discrete_ops::quadrature::max_norm;
use solitonkit::discrete_ops::{eigensolve, inner, random_field, ChartAtlas, Field, FieldKind, Geometry};
use solitonkit::soliton_core::GridModel;

fn ratio_ok(coarse: f64, fine: f64) -> bool {
    (3.0..=5.0).contains(&(coarse / fine))
}

fn sphere(res: usize, radius_sq: f64) -> Geometry {
    Geometry::new(GridModel::RoundSphere { radius_sq }.metric(res).unwrap())
}

/// The ambient `x` coordinate has the same formula in both stereographic charts.
fn ambient_x(atlas: &Arc<ChartAtlas>) -> Field {
    Field::from_fn(atlas.clone(), FieldKind::Scalar, |_, u| [2.0 * u[0] / (1.0 + u[0] * u[0] + u[1] * u[1]), 0.0, 0.0])
}

/// Max-norm errors of closed-form identities on the unit sphere, where
/// `x` satisfies `Delta x = -2x`, `dd x = -x g`, `delta dd x = -dx`, `R(g) = g`
/// and `Delta (x g) = -2x g`.
fn sphere_errors(res: usize) -> Vec<(&'static str, f64)> {
    let geo = sphere(res, 1.0);
    let x = ambient_x(geo.atlas());
    let g = geo.metric().field().clone();
    let xg = g.times(&x).unwrap();
    let dx = ops::differential(&geo).apply_field(&x).unwrap();
    let hess = ops::hessian(&geo).apply_field(&x).unwrap();
    let err = |a: Field, b: Field| max_norm(&geo, &a.sub(&b).unwrap()).unwrap();
    let scalar = Field::new(geo.atlas().clone(), FieldKind::Scalar, geo.nodes().iter().map(|n| n.scalar).collect()).unwrap();
    vec![
        ("laplacian", err(ops::laplacian(&geo, None).apply_field(&x).unwrap(), x.scaled(-2.0))),
        ("hessian", err(hess.clone(), xg.scaled(-1.0))),
        ("divergence", err(ops::divergence(&geo, None).apply_field(&hess).unwrap(), dx.scaled(-1.0))),
        ("curvature_action", err(ops::curvature_action(&geo).apply_field(&g).unwrap(), g.clone())),
        ("sym2_laplacian", err(ops::sym2_laplacian(&geo, None).apply_field(&xg).unwrap(), xg.scaled(-2.0))),
        ("scalar_curvature", err(scalar, Field::constant(geo.atlas().clone(), 2.0))),
    ]
}

#[test]
fn operators_converge_at_second_order_on_the_sphere() {
    let coarse = sphere_errors(32);
    let fine = sphere_errors(64);
    for ((name, c), (_, f)) in coarse.iter().zip(&fine) {
        assert!(ratio_ok(*c, *f), "{name}: {c:.3e} -> {f:.3e}");
    }
}

#[test]
fn torus_laplacian_of_a_trigonometric_mode() {
    let errs: Vec<f64> = [32, 64]
        .iter()
        .map(|&res| {
            let geo = Geometry::new(GridModel::standard_torus().metric(res).unwrap());
            let f = Field::from_fn(geo.atlas().clone(), FieldKind::Scalar, |_, u| [u[0].sin() * (2.0 * u[1]).cos(), 0.0, 0.0]);
            let lap = ops::laplacian(&geo, None).apply_field(&f).unwrap();
            max_norm(&geo, &lap.add(&f.scaled(5.0)).unwrap()).unwrap()
        })
        .collect();
    assert!(ratio_ok(errs[0], errs[1]), "{errs:?}");
}

/// `<alpha(X), h>_f + 2 <delta_f h, X^flat>_f`, relative to the first term.
fn adjoint_defect(res: usize, seed: u64) -> f64 {
    let geo = sphere(res, 1.0);
    let atlas = geo.atlas();
    let f = random_field(atlas, FieldKind::Scalar, seed);
    let h = random_field(atlas, FieldKind::Sym2, seed + 1);
    let x = random_field(atlas, FieldKind::Vector, seed + 2);
    let tw = Twist::new(&geo, &f).unwrap();
    let lhs = inner(&geo, &ops::lie_metric(&geo).apply_field(&x).unwrap(), &h, Some(&f)).unwrap();
    let div = ops::divergence(&geo, Some(&tw)).apply_field(&h).unwrap();
    let rhs = -2.0 * inner(&geo, &div, &ops::flat(&geo).apply_field(&x).unwrap(), Some(&f)).unwrap();
    (lhs - rhs).abs() / lhs.abs()
}

#[test]
fn twisted_divergence_is_adjoint_to_half_lie_derivative() {
    let (c, f) = (adjoint_defect(32, 5), adjoint_defect(64, 5));
    assert!(f < 1e-2 && (f < 1e-10 || c / f > 3.0), "{c:.3e} -> {f:.3e}");
}

fn symmetry_defect(res: usize, seed: u64) -> f64 {
    let geo = sphere(res, 1.0);
    let atlas = geo.atlas();
    let f = random_field(atlas, FieldKind::Scalar, seed);
    let (h, k) = (random_field(atlas, FieldKind::Sym2, seed + 1), random_field(atlas, FieldKind::Sym2, seed + 2));
    let lap = ops::sym2_laplacian(&geo, Some(&Twist::new(&geo, &f).unwrap()));
    let a = inner(&geo, &lap.apply_field(&h).unwrap(), &k, Some(&f)).unwrap();
    let b = inner(&geo, &h, &lap.apply_field(&k).unwrap(), Some(&f)).unwrap();
    (a - b).abs() / a.abs().max(b.abs())
}

#[test]
fn twisted_rough_laplacian_is_symmetric() {
    let (c, f) = (symmetry_defect(32, 9), symmetry_defect(64, 9));
    assert!(f < 1e-2 && (f < 1e-10 || c / f > 3.0), "{c:.3e} -> {f:.3e}");
}

/// Smallest nonzero eigenvalue of `-Delta`, from the shift-invert solver.
fn first_eigenvalue(geo: &Geometry) -> f64 {
    let pairs = eigensolve(&ops::laplacian(geo, None).matrix, 6, -0.05, 1e-10, 300, 3).unwrap();
    pairs.iter().map(|p| -p.value).filter(|v| *v > 1e-6).fold(f64::INFINITY, f64::min)
}

#[test]
fn sphere_spectrum_matches_closed_form() {
    // -Delta on S^2(r) has first eigenvalue 2 / r^2.
    let errs: Vec<f64> = [32, 64].iter().map(|&r| (first_eigenvalue(&sphere(r, 1.0)) - 2.0).abs()).collect();
    assert!(ratio_ok(errs[0], errs[1]), "{errs:?}");
    let scaled = first_eigenvalue(&sphere(32, 4.0));
    assert!((scaled * 4.0 - first_eigenvalue(&sphere(32, 1.0))).abs() < 1e-9, "rescaling divides eigenvalues");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn operators_are_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let geo = Geometry::new(GridModel::ConformalTorus { seed, amplitude: 0.3 }.metric(16).unwrap());
        let atlas = geo.atlas();
        let (h, k) = (random_field(atlas, FieldKind::Sym2, seed + 1), random_field(atlas, FieldKind::Sym2, seed + 2));
        let op = ops::divergence(&geo, None);
        let lhs = op.apply_field(&h.scaled(a).axpy(b, &k).unwrap()).unwrap();
        let rhs = op.apply_field(&h).unwrap().scaled(a).axpy(b, &op.apply_field(&k).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-10 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn trace_of_metric_is_dimension(seed in 0u64..1000) {
        let geo = Geometry::new(GridModel::ConformalTorus { seed, amplitude: 0.3 }.metric(16).unwrap());
        let tr = ops::trace(&geo).apply_field(geo.metric().field()).unwrap();
        prop_assert!(tr.data().iter().all(|v| (v - 2.0).abs() < 1e-12));
    }
}
