//! Normalization, residuals, the Bianchi identity and the linearization.

use std::sync::Arc;

use proptest::prelude::*;
use solitonkit::discrete_ops::quadrature::max_norm;
use solitonkit::discrete_ops::{random_field, Field, FieldKind, Geometry};
use solitonkit::error::Error;
use solitonkit::soliton_core::linearization::linearized_ds_at;
use solitonkit::soliton_core::{
    bianchi_residual, einstein_base, entropy_w, fd_linearization, model_pair, residual_s, DeformationPair, GridModel, SolitonPair,
    CONSTRAINT_TOL,
};

fn torus_geo(seed: u64, res: usize) -> Arc<Geometry> {
    Arc::new(Geometry::new(GridModel::ConformalTorus { seed, amplitude: 0.3 }.metric(res).unwrap()))
}

#[test]
fn unnormalized_weight_is_rejected() {
    let geo = Arc::new(Geometry::new(GridModel::unit_sphere().metric(24).unwrap()));
    let zero = Field::zeros(geo.atlas().clone(), FieldKind::Scalar);
    // Vol(S^2) / 2 pi = 2.
    match SolitonPair::new(geo.clone(), zero.clone()) {
        Err(Error::ConstraintViolated { measured }) => assert!((measured - 2.0).abs() < 1e-2, "{measured}"),
        other => panic!("expected a constraint violation, got {other:?}"),
    }
    let pair = SolitonPair::normalized(geo, zero).unwrap();
    assert!((pair.constraint() - 1.0).abs() < CONSTRAINT_TOL);
}

#[test]
fn sphere_model_is_a_soliton_at_second_order() {
    let norms: Vec<f64> = [32, 64]
        .iter()
        .map(|&r| {
            let pair = model_pair(&GridModel::unit_sphere(), r).unwrap();
            assert!(pair.f_is_constant());
            let [a, b] = residual_s(&pair).unwrap().max_norms(pair.geometry()).unwrap();
            a.max(b)
        })
        .collect();
    assert!((3.0..=5.0).contains(&(norms[0] / norms[1])), "{norms:?}");
    let w = entropy_w(&model_pair(&GridModel::unit_sphere(), 64).unwrap()).unwrap();
    assert!((w - (2f64.ln() - 1.0)).abs() < 5e-3, "W = {w}");
}

#[test]
fn labels_parse_back() {
    let models = [
        GridModel::standard_torus(),
        GridModel::FlatTorus { periods: [1.5, 2.5] },
        GridModel::ConformalTorus { seed: 3, amplitude: 0.25 },
        GridModel::unit_sphere(),
        GridModel::killing_sphere(),
    ];
    for m in models {
        assert_eq!(GridModel::parse(&m.label()).unwrap(), m, "{}", m.label());
    }
}

#[test]
fn flat_torus_is_not_a_shrinker() {
    match einstein_base(&GridModel::standard_torus(), 32) {
        Err(Error::Precondition(_)) => {}
        other => panic!("expected a precondition failure, got {:?}", other.map(|b| b.certificate)),
    }
}

#[test]
fn bianchi_identity_holds_on_the_sphere_for_any_weight() {
    let norms: Vec<f64> = [32, 64]
        .iter()
        .map(|&r| {
            let geo = Geometry::new(GridModel::unit_sphere().metric(r).unwrap());
            let f = random_field(geo.atlas(), FieldKind::Scalar, 21);
            max_norm(&geo, &bianchi_residual(&geo, &f).unwrap()).unwrap()
        })
        .collect();
    assert!((3.0..=5.0).contains(&(norms[0] / norms[1])), "{norms:?}");
}

/// Scaling `g` by `1 + s` leaves `Ric` alone and changes `S1` by `-s g` when
/// `f` is constant, so `dS1(g, 0) = -g`. Finite differences see this exactly;
/// the assembled formula only up to discretization error.
fn scaling_errors(res: usize) -> (f64, f64) {
    let pair = model_pair(&GridModel::unit_sphere(), res).unwrap();
    let geo = pair.geometry();
    let g = geo.metric().field().clone();
    let d = DeformationPair::new(g.clone(), Field::zeros(geo.atlas().clone(), FieldKind::Scalar)).unwrap().made_tangent(&pair).unwrap();
    assert!(d.tangency_defect(&pair).unwrap().abs() < 1e-10);
    let (ds1, _) = linearized_ds_at(&pair).unwrap().apply(&d).unwrap();
    let fd = fd_linearization(&pair, &d, 1e-3).unwrap();
    (max_norm(geo, &ds1.add(&g).unwrap()).unwrap(), max_norm(geo, &fd.s1.add(&g).unwrap()).unwrap())
}

#[test]
fn linearization_along_scaling() {
    let (coarse, fd_coarse) = scaling_errors(32);
    let (fine, fd_fine) = scaling_errors(64);
    assert!((3.0..=5.0).contains(&(coarse / fine)), "{coarse:e} -> {fine:e}");
    assert!(fd_coarse.max(fd_fine) < 1e-9, "{fd_coarse:e} {fd_fine:e}");
}

#[test]
fn non_tangent_direction_is_refused() {
    let pair = model_pair(&GridModel::unit_sphere(), 24).unwrap();
    let atlas = pair.geometry().atlas().clone();
    let d = DeformationPair::new(Field::zeros(atlas.clone(), FieldKind::Sym2), Field::constant(atlas, 1.0)).unwrap();
    assert!(matches!(fd_linearization(&pair, &d, 1e-3), Err(Error::Precondition(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn normalization_restores_the_constraint(seed in 0u64..10_000, amp in 0.1f64..3.0) {
        let geo = torus_geo(seed, 16);
        let f = random_field(geo.atlas(), FieldKind::Scalar, seed + 1).scaled(amp);
        let pair = SolitonPair::normalized(geo, f).unwrap();
        prop_assert!((pair.constraint() - 1.0).abs() < CONSTRAINT_TOL);
    }

    #[test]
    fn made_tangent_kills_the_defect(seed in 0u64..10_000) {
        let geo = torus_geo(seed, 16);
        let pair = SolitonPair::normalized(geo.clone(), random_field(geo.atlas(), FieldKind::Scalar, seed + 1)).unwrap();
        let d = DeformationPair::new(random_field(geo.atlas(), FieldKind::Sym2, seed + 2), random_field(geo.atlas(), FieldKind::Scalar, seed + 3))
            .unwrap()
            .made_tangent(&pair)
            .unwrap();
        prop_assert!(d.tangency_defect(&pair).unwrap().abs() < 1e-10);
    }

    #[test]
    fn bianchi_residual_shrinks_under_refinement(seed in 0u64..10_000) {
        let norm = |res: usize| {
            let geo = torus_geo(seed, res);
            let f = random_field(geo.atlas(), FieldKind::Scalar, seed + 1);
            max_norm(&geo, &bianchi_residual(&geo, &f).unwrap()).unwrap()
        };
        let (coarse, fine) = (norm(32), norm(64));
        prop_assert!(fine < coarse / 2.0, "{coarse:e} -> {fine:e}");
    }
}
