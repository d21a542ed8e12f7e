//! Weight bookkeeping and closed-form spectra.

use proptest::prelude::*;
use solitonkit::error::Error;
use solitonkit::model_spaces::{closed_form_spectrum, make_model, spectrum_contains, MetricTag, ModelName, Rational};
use solitonkit::rep_weights::{
    adjoint_module, dim_z_cpn, hom_count, irreducible_weights, isotropy_module, k_decompose, sym2_dual_isotropy, weyl_dimension, KModule,
    Weight,
};

fn modules(n: usize) -> Vec<KModule> {
    vec![adjoint_module(n).unwrap(), isotropy_module(n).unwrap(), sym2_dual_isotropy(n).unwrap()]
}

#[test]
fn module_dimensions() {
    for n in 2..=8usize {
        let [g, m, s2]: [KModule; 3] = modules(n).try_into().unwrap();
        let n = n as u64;
        assert_eq!(g.dim(), (n + 1) * (n + 1) - 1);
        assert_eq!(m.dim(), 2 * n);
        assert_eq!(s2.dim(), n * (2 * n + 1));
    }
}

#[test]
fn cpn_counts() {
    for n in 2..=5 {
        let d = dim_z_cpn(n).unwrap();
        assert_eq!(d.m, 2, "n = {n}");
        assert_eq!(d.dim_z, ((n + 1) * (n + 1) - 1) as u64);
        assert_eq!(d.dim_ker_t, d.dim_im_psi1 + d.dim_im_psi2);
    }
}

#[test]
fn killing_and_normalized_spectra_differ_by_two() {
    let cp1 = closed_form_spectrum(&make_model(ModelName::Cp1Killing).unwrap(), 8).unwrap();
    let sphere = closed_form_spectrum(&make_model(ModelName::unit_sphere(2)).unwrap(), 8).unwrap();
    assert_eq!(cp1.metric_tag, MetricTag::Killing);
    let normalized = cp1.renormalized(MetricTag::Normalized).unwrap();
    let vals = |t: &solitonkit::model_spaces::SpectrumTable| t.rows.iter().map(|r| r.eigenvalue).collect::<Vec<_>>();
    assert_eq!(vals(&normalized), vals(&sphere));
    assert_eq!(normalized.renormalized(MetricTag::Killing).unwrap().rows, cp1.rows);
}

fn dominant(n: usize) -> impl Strategy<Value = Weight> {
    prop::collection::vec(-3i64..=3, n).prop_map(|mut v| {
        v.sort_unstable_by(|a, b| b.cmp(a));
        Weight(v)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn modules_are_weyl_symmetric_and_decompose_exactly(n in 2usize..=6) {
        for module in modules(n) {
            prop_assert!(module.is_weyl_symmetric());
            let parts = k_decompose(&module).unwrap();
            prop_assert_eq!(parts.iter().map(|c| c.dim * c.multiplicity).sum::<u64>(), module.dim());
            for c in &parts {
                prop_assert_eq!(c.dim, weyl_dimension(&c.highest_weight));
            }
        }
    }

    #[test]
    fn hom_is_symmetric(n in 2usize..=6, i in 0usize..3, j in 0usize..3) {
        let ms = modules(n);
        prop_assert_eq!(hom_count(&ms[i], &ms[j]).unwrap().multiplicity, hom_count(&ms[j], &ms[i]).unwrap().multiplicity);
        let self_hom = hom_count(&ms[i], &ms[i]).unwrap();
        let squares: u64 = k_decompose(&ms[i]).unwrap().iter().map(|c| c.multiplicity * c.multiplicity).sum();
        prop_assert_eq!(self_hom.multiplicity, squares);
    }

    #[test]
    fn irreducibles_match_weyl_dimension(lambda in (2usize..=4).prop_flat_map(dominant)) {
        let weights = irreducible_weights(&lambda).unwrap();
        let module = KModule::from_weights("irrep", lambda.rank(), weights.iter().flat_map(|(w, &m)| std::iter::repeat_n(w.clone(), m as usize)));
        prop_assert_eq!(module.dim(), weyl_dimension(&lambda));
        prop_assert!(module.is_weyl_symmetric());
        let parts = k_decompose(&module).unwrap();
        prop_assert_eq!(parts.len(), 1);
        prop_assert_eq!(&parts[0].highest_weight, &lambda);
    }

    #[test]
    fn sphere_eigenvalues_scale_inversely(n in 1u32..=8, p in 1i64..50, q in 1i64..50, k in 0u64..12) {
        let r2 = Rational::new(p, q);
        let t = closed_form_spectrum(&make_model(ModelName::round_sphere(n, r2)).unwrap(), 12).unwrap();
        let ki = k as i64;
        prop_assert_eq!(t.rows[k as usize].eigenvalue * r2, Rational::from_integer(ki * (ki + n as i64 - 1)));
    }

    /// Once decided, membership never changes as the table grows; an
    /// undecided query names a length that decides it.
    #[test]
    fn membership_is_monotone(n in 2u32..=4, num in 0i64..400, den in 1i64..20, k in 1u64..10) {
        let model = make_model(ModelName::HpnSpectral { n }).unwrap();
        let lambda = Rational::new(num, den);
        let short = spectrum_contains(&closed_form_spectrum(&model, k).unwrap(), lambda);
        let long = spectrum_contains(&closed_form_spectrum(&model, 4 * k + 60).unwrap(), lambda).unwrap();
        match short {
            Ok(v) => prop_assert_eq!(v, long),
            Err(Error::TableTooShort { needed }) => {
                prop_assert!(needed > k);
                prop_assert_eq!(spectrum_contains(&closed_form_spectrum(&model, needed).unwrap(), lambda).unwrap(), long);
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
