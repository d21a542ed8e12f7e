//! Kernel bases, the trace gap and the slice projector.

use proptest::prelude::*;
use solitonkit::deformation_kernel::family::family_residuals;
use solitonkit::deformation_kernel::{cp_family, weighted_laplacian_gap, SliceProjector};
use solitonkit::discrete_ops::{random_field, FieldKind};
use solitonkit::soliton_core::{model_pair, GridModel};

#[test]
fn sphere_trace_gap_is_two() {
    for model in [GridModel::unit_sphere(), GridModel::killing_sphere()] {
        let gap = weighted_laplacian_gap(&model_pair(&model, 32).unwrap()).unwrap();
        assert!((gap.value - 2.0).abs() < 1e-2, "{}: {}", model.label(), gap.value);
        assert!(gap.exceeds_one && !gap.boundary);
    }
}

#[test]
fn family_residuals_match_generators() {
    let basis = cp_family(64).unwrap();
    assert_eq!(basis.dimension(), Some(3));
    let geo = solitonkit::discrete_ops::Geometry::new(GridModel::killing_sphere().metric(64).unwrap());
    for ((f, recorded), element) in basis.generators.iter().zip(&basis.residual_norms).zip(&basis.elements) {
        let (h, table) = family_residuals(&geo, f).unwrap();
        assert_eq!(&table, recorded);
        assert_eq!(h.data(), element.h.data());
    }
}

fn torus_projector(seed: u64) -> SliceProjector {
    let pair = model_pair(&GridModel::ConformalTorus { seed, amplitude: 0.3 }, 16).unwrap();
    SliceProjector::new(&pair).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn slice_projection_is_linear_and_idempotent(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let proj = torus_projector(seed);
        let atlas = GridModel::ConformalTorus { seed, amplitude: 0.3 }.atlas(16).unwrap();
        let (h, k) = (random_field(&atlas, FieldKind::Sym2, seed + 1), random_field(&atlas, FieldKind::Sym2, seed + 2));
        let (ph, pk) = (proj.project(&h).unwrap(), proj.project(&k).unwrap());
        let combined = proj.project(&h.scaled(a).axpy(b, &k).unwrap()).unwrap();
        let expected = ph.h1.scaled(a).axpy(b, &pk.h1).unwrap();
        let scale = 1.0 + expected.max_abs();
        prop_assert!(combined.h1.sub(&expected).unwrap().max_abs() < 1e-8 * scale);
        prop_assert!(proj.idempotence(&ph).unwrap() < 1e-8);
        prop_assert!(ph.diagnostics.divergence_residual < 1e-8);
    }
}
