//! Refinement studies behind the checking commands.
//!
//! Each study evaluates one identity over resolutions and seeded inputs and
//! returns plain serializable rows; pass/fail thresholds are left to callers.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deformation_kernel::SliceProjector;
use crate::discrete_ops::ops::{self, Twist};
use crate::discrete_ops::quadrature::max_norm;
use crate::discrete_ops::{random_field, Field, FieldKind, Geometry};
use crate::error::Result;
use crate::model_spaces::Rational;
use crate::rigidity::diameter_functional_grid;
use crate::soliton_core::auxiliary::CompCalibration;
use crate::soliton_core::{
    bianchi_residual, calibrate_comp, comm_check, einstein_base_with, entropy_w, fd_linearization, linearized_ds,
    model_pair, residual_s, residual_unchecked, BaseCertificate, DeformationPair, GridModel, SolitonBase, SolitonPair,
    COMM_KAPPA, COMP_KAPPA_CALIBRATED, COMP_KAPPA_LITERAL,
};

/// Successive ratios `values[k] / values[k + 1]`.
pub fn refinement_ratios(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[0] / w[1]).collect()
}

fn seeded_direction(pair: &SolitonPair, seed: u64) -> Result<DeformationPair> {
    let atlas = pair.geometry().atlas();
    let h = random_field(atlas, FieldKind::Sym2, seed);
    let a = random_field(atlas, FieldKind::Scalar, seed ^ 0x5eed);
    DeformationPair::new(h, a)?.made_tangent(pair)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BianchiRow {
    pub resolution: usize,
    /// `max |delta_f S1 - d q|`.
    pub residual: f64,
    /// `max |delta_f S1|`, the size of either side.
    pub scale: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BianchiStudy {
    pub model: String,
    pub f_seed: u64,
    pub rows: Vec<BianchiRow>,
    pub ratios: Vec<f64>,
}

/// The twisted Bianchi identity for a seeded random `f` on `model`.
pub fn bianchi_study(model: &GridModel, resolutions: &[usize], f_seed: u64) -> Result<BianchiStudy> {
    let rows: Vec<BianchiRow> = resolutions
        .par_iter()
        .map(|&res| {
            let geo = Geometry::new(model.metric(res)?);
            let f = random_field(geo.atlas(), FieldKind::Scalar, f_seed);
            let residual = max_norm(&geo, &bianchi_residual(&geo, &f)?)?;
            let s1 = residual_unchecked(&geo, &f)?.s1;
            let scale = max_norm(&geo, &ops::divergence(&geo, Some(&Twist::new(&geo, &f)?)).apply_field(&s1)?)?;
            Ok(BianchiRow { resolution: res, residual, scale, relative: residual / scale.max(f64::MIN_POSITIVE) })
        })
        .collect::<Result<_>>()?;
    let ratios = refinement_ratios(&rows.iter().map(|r| r.residual).collect::<Vec<_>>());
    Ok(BianchiStudy { model: model.label(), f_seed, rows, ratios })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizationRow {
    pub resolution: usize,
    pub eps: f64,
    /// `max(|dS1 - fd S1|, |dS2 - fd S2|) / max(|fd S1|, |fd S2|)` over directions.
    pub worst: f64,
    pub mean: f64,
    /// Largest `|fd dW|`.
    pub dw_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AltRow {
    pub resolution: usize,
    /// `max |dS1 - dS1_alt| / max |dS1|` over directions.
    pub worst: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizationStudy {
    pub model: String,
    pub samples: usize,
    pub seed: u64,
    pub certificates: Vec<BaseCertificate>,
    pub rows: Vec<LinearizationRow>,
    pub alt_rows: Vec<AltRow>,
}

/// Linearization against central differences at the certified base.
pub fn linearization_study(
    model: &GridModel,
    resolutions: &[usize],
    eps: &[f64],
    samples: usize,
    seed: u64,
    base_factor: f64,
) -> Result<LinearizationStudy> {
    let mut rows = Vec::new();
    let mut alt_rows = Vec::new();
    let mut certificates = Vec::new();
    for &res in resolutions {
        let base = einstein_base_with(model, res, base_factor)?;
        let pair = &base.pair;
        let geo = pair.geometry();
        let lin = linearized_ds(&base)?;
        let dirs: Vec<DeformationPair> = (0..samples).map(|s| seeded_direction(pair, seed + s as u64)).collect::<Result<_>>()?;
        let mut alt_worst: f64 = 0.0;
        let mut exact = Vec::with_capacity(samples);
        for d in &dirs {
            let (s1, s2) = lin.apply(d)?;
            let alt = lin.apply_alt(d)?;
            alt_worst = alt_worst.max(max_norm(geo, &s1.sub(&alt)?)? / max_norm(geo, &s1)?.max(f64::MIN_POSITIVE));
            exact.push((s1, s2));
        }
        alt_rows.push(AltRow { resolution: res, worst: alt_worst });
        for &e in eps {
            let errs: Vec<(f64, f64)> = dirs
                .par_iter()
                .zip(&exact)
                .map(|(d, (s1, s2))| {
                    let fd = fd_linearization(pair, d, e)?;
                    let num = max_norm(geo, &s1.sub(&fd.s1)?)?.max(max_norm(geo, &s2.sub(&fd.s2)?)?);
                    let den = max_norm(geo, &fd.s1)?.max(max_norm(geo, &fd.s2)?).max(f64::MIN_POSITIVE);
                    Ok((num / den, fd.dw.abs()))
                })
                .collect::<Result<_>>()?;
            rows.push(LinearizationRow {
                resolution: res,
                eps: e,
                worst: errs.iter().map(|x| x.0).fold(0.0, f64::max),
                mean: errs.iter().map(|x| x.0).sum::<f64>() / errs.len() as f64,
                dw_max: errs.iter().map(|x| x.1).fold(0.0, f64::max),
            });
        }
        certificates.push(base.certificate);
    }
    Ok(LinearizationStudy { model: model.label(), samples, seed, certificates, rows, alt_rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyCheck {
    pub model: String,
    pub resolution: usize,
    pub f_value: f64,
    pub w: f64,
    /// `f - n/2`, the entropy of a normalized Einstein pair.
    pub expected_w: f64,
    pub w_error: f64,
    pub residual: [f64; 2],
    pub certificate: BaseCertificate,
    /// `|dW|` along seeded tangent directions, by central differences.
    pub dw: Vec<f64>,
    pub eps: f64,
}

/// Entropy, residual and first variation of `W` at the normalized base.
pub fn entropy_check(model: &GridModel, resolution: usize, samples: usize, seed: u64, base_factor: f64) -> Result<EntropyCheck> {
    let base = einstein_base_with(model, resolution, base_factor)?;
    let pair = &base.pair;
    let w = entropy_w(pair)?;
    let f_value = pair.f().value(0);
    let expected_w = f_value - pair.n() as f64 / 2.0;
    let residual = residual_s(pair)?.max_norms(pair.geometry())?;
    let eps = 1e-4;
    let dw = (0..samples)
        .into_par_iter()
        .map(|s| Ok(fd_linearization(pair, &seeded_direction(pair, seed + s as u64)?, eps)?.dw.abs()))
        .collect::<Result<_>>()?;
    Ok(EntropyCheck {
        model: model.label(),
        resolution,
        f_value,
        w,
        expected_w,
        w_error: (w - expected_w).abs(),
        residual,
        certificate: base.certificate,
        dw,
        eps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommRow {
    pub resolution: usize,
    /// `(k, worst relative mismatch)` for each candidate coefficient.
    pub candidates: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompStudy {
    /// Metrics and weights the constant was fitted on.
    pub pairs: Vec<String>,
    pub calibration: CompCalibration,
    pub comm_model: String,
    pub comm_rows: Vec<CommRow>,
    /// Refinement ratios of the calibrated linear identity.
    pub comm_ratios: Vec<f64>,
    pub finding: String,
}

/// Fits the coefficient of `d S2` on `samples` random pairs and tests the
/// resulting linear identity at the certified base of `comm_model`.
pub fn comp_study(
    samples: usize,
    seed: u64,
    resolution: usize,
    comm_model: &GridModel,
    comm_resolutions: &[usize],
    base_factor: f64,
) -> Result<CompStudy> {
    let inputs: Vec<(String, Geometry, Field)> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let model = GridModel::ConformalTorus { seed: seed + s, amplitude: 0.3 };
            let geo = Geometry::new(model.metric(resolution)?);
            let f = random_field(geo.atlas(), FieldKind::Scalar, seed + 100 + s);
            Ok((format!("{} res {resolution}, f seed {}", model.label(), seed + 100 + s), geo, f))
        })
        .collect::<Result<_>>()?;
    let pairs = inputs.iter().map(|x| x.0.clone()).collect();
    let calibration = calibrate_comp(&inputs.into_iter().map(|x| (x.1, x.2)).collect::<Vec<_>>())?;
    let mut comm_rows = Vec::new();
    for &res in comm_resolutions {
        let base: SolitonBase = einstein_base_with(comm_model, res, base_factor)?;
        let mut worst: Vec<(f64, f64)> = vec![(COMP_KAPPA_LITERAL, 0.0), (COMP_KAPPA_CALIBRATED, 0.0), (COMM_KAPPA, 0.0)];
        for s in 0..3 {
            let d = seeded_direction(&base.pair, seed + s)?;
            for (slot, (k, rel)) in worst.iter_mut().zip(comm_check(&base, &d.h, &d.a)?.candidates) {
                debug_assert_eq!(slot.0, k);
                slot.1 = slot.1.max(rel);
            }
        }
        comm_rows.push(CommRow { resolution: res, candidates: worst });
    }
    let calibrated: Vec<f64> =
        comm_rows.iter().map(|r| r.candidates.iter().find(|c| c.0 == COMM_KAPPA).map(|c| c.1).unwrap_or(f64::NAN)).collect();
    let comm_ratios = refinement_ratios(&calibrated);
    let finding = format!(
        "delta_f S1 = k d S2 holds with k = {} (worst relative residual {:.3e} over {samples} pairs); the literal k = {} leaves {:.3e}. \
         The linear identity beta o F = G o delta_f then holds with coefficient {} on d, with refinement ratios {:?}.",
        calibration.selected_kappa,
        calibration.calibrated_worst,
        COMP_KAPPA_LITERAL,
        calibration.literal_worst,
        COMM_KAPPA,
        comm_ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>(),
    );
    Ok(CompStudy { pairs, calibration, comm_model: comm_model.label(), comm_rows, comm_ratios, finding })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceRow {
    pub seed: u64,
    pub divergence: f64,
    pub idempotence: f64,
    pub orthogonality: f64,
    pub reconstruction: f64,
    pub kernel_share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceStudy {
    pub model: String,
    pub resolution: usize,
    pub deflated: usize,
    pub exact_null: usize,
    pub rows: Vec<SliceRow>,
}

impl SliceStudy {
    pub fn worst(&self, pick: impl Fn(&SliceRow) -> f64) -> f64 {
        self.rows.iter().map(pick).fold(0.0, f64::max)
    }
}

/// Slice projection of `samples` seeded symmetric tensors at the
/// normalized pair of `model`.
pub fn slice_study(model: &GridModel, resolution: usize, samples: usize, seed: u64) -> Result<SliceStudy> {
    let pair = model_pair(model, resolution)?;
    let projector = SliceProjector::new(&pair)?;
    let atlas = Arc::clone(pair.geometry().atlas());
    let rows = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let h = random_field(&atlas, FieldKind::Sym2, seed + s);
            let split = projector.project(&h)?;
            let d = &split.diagnostics;
            Ok(SliceRow {
                seed: seed + s,
                divergence: d.divergence_residual,
                idempotence: projector.idempotence(&split)?,
                orthogonality: d.orthogonality,
                reconstruction: d.reconstruction,
                kernel_share: d.kernel_share,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SliceStudy {
        model: model.label(),
        resolution,
        deflated: projector.deflated(),
        exact_null: projector.exact_null(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterRow {
    pub radius_sq: f64,
    pub resolution: usize,
    pub value: f64,
    pub diameter: f64,
    pub mean_scalar: f64,
}

/// Grid `D` on round spheres of several radii.
pub fn diameter_scaling(radii_sq: &[f64], resolutions: &[usize]) -> Result<Vec<DiameterRow>> {
    let jobs: Vec<(f64, usize)> = radii_sq.iter().flat_map(|&r| resolutions.iter().map(move |&n| (r, n))).collect();
    jobs.par_iter()
        .map(|&(radius_sq, resolution)| {
            let geo = Geometry::new(GridModel::RoundSphere { radius_sq }.metric(resolution)?);
            let v = diameter_functional_grid(&geo)?;
            Ok(DiameterRow { radius_sq, resolution, value: v.value, diameter: v.diameter, mean_scalar: v.mean_scalar })
        })
        .collect()
}

/// Twenty `(n, K_min, K_max)` cases on both sides of each pinching condition.
pub fn pinching_table() -> Vec<(u32, Rational, Rational)> {
    let r = Rational::new;
    vec![
        (4, r(3, 10), r(1, 1)),
        (4, r(1, 5), r(1, 1)),
        (4, r(1, 4), r(1, 1)),
        (4, r(1, 4), r(3, 2)),
        (4, r(1, 4), r(2, 1)),
        (2, r(1, 2), r(50, 1)),
        (2, r(49, 100), r(1, 2)),
        (2, r(1, 1), r(1, 1)),
        (3, r(1, 3), r(1, 1)),
        (3, r(1, 3), r(3, 1)),
        (3, r(1, 3), r(4, 1)),
        (3, r(33, 100), r(1, 1)),
        (5, r(1, 5), r(1, 1)),
        (5, r(1, 5), r(3, 4)),
        (5, r(1, 4), r(5, 4)),
        (5, r(1, 4), r(6, 5)),
        (6, r(1, 6), r(2, 3)),
        (6, r(1, 6), r(3, 4)),
        (8, r(1, 8), r(1, 2)),
        (8, r(1, 2), r(1, 1)),
    ]
}
