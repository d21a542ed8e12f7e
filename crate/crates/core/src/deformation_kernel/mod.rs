//! Kernels of the deformation equations.
//!
//! * `Z = {(h, a) : delta_f h = 0, Delta_f h / 2 + R(h) = 0, a = tr h / 2}`,
//! * `E = {(h, 0) : delta h = 0, tr h = 0, Delta h + 2 R(h) = 0}` at constant `f`.
//!
//! Both are computed as the near kernel of the stacked system acting on
//! `h`, so the divergence condition is a hard constraint and not a penalty.
//! A dimension is accepted when the weighted singular values show a gap at
//! the working resolution and the same dimension is visible at half
//! resolution; otherwise the basis is marked undecided.

pub mod family;
pub mod slice;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::discrete_ops::assembly::AssembledOperator;
use crate::discrete_ops::linalg::{decide_gap, smallest_singular, SingularSpectrum};
use crate::discrete_ops::ops;
use crate::discrete_ops::quadrature::{integrate, max_norm, norm};
use crate::discrete_ops::{eigensolve, Field, FieldKind, GapCertificate, Geometry, KernelOptions};
use crate::error::{Error, Result};
use crate::soliton_core::{einstein_base, model_pair, BaseCertificate, DeformationPair, GridModel, SolitonBase, SolitonPair};

pub use family::{cp_family, cp_family_with, span_residuals};
pub use slice::{slice_project, SliceProjector, SliceSplit};

#[derive(Clone, Debug)]
pub struct KernelSettings {
    pub kernel: KernelOptions,
    /// Gap ratio that confirms the dimension at the coarse resolution.
    pub confirm_ratio: f64,
}

impl Default for KernelSettings {
    fn default() -> Self {
        KernelSettings { kernel: KernelOptions::default(), confirm_ratio: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpace {
    Z,
    E,
    /// `{dd f + f g / 2 : -Delta f = f}` on the Killing-normalized sphere.
    CpFamily,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum KernelStatus {
    Certified,
    Undecided { reason: String },
}

/// Singular values a solve cannot tell from zero, relative to the largest.
const SOLVE_FLOOR: f64 = 1e-8;

/// Outcome of the two-resolution dimension rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionDecision {
    pub dimension: Option<usize>,
    pub coarse_dimension: Option<usize>,
    pub certificate: Option<GapCertificate>,
    /// Stand-in for the largest kept value when the kernel is empty.
    pub noise_floor: f64,
    pub status: KernelStatus,
}

/// Decides a kernel dimension from the smallest singular values at two
/// resolutions.
///
/// An exact kernel shows up as values of size `C h^2`, so the
/// Richardson estimate `|s_fine - s_coarse| / (r^2 - 1)` of the error in
/// the smallest value is used as the noise floor when deciding dimension
/// zero. The coarse level only confirms the dimension, with the looser
/// `confirm_ratio`.
pub fn decide_dimension(
    fine: &SingularSpectrum,
    res_fine: usize,
    coarse: &SingularSpectrum,
    res_coarse: usize,
    settings: &KernelSettings,
) -> DimensionDecision {
    let r2 = (res_fine as f64 / res_coarse as f64).powi(2);
    let estimate = match (fine.values.first(), coarse.values.first()) {
        (Some(f), Some(c)) => (c - f).abs() / (r2 - 1.0),
        _ => 0.0,
    };
    let floor = estimate.max(SOLVE_FLOOR * fine.scale).max(settings.kernel.noise_floor.unwrap_or(0.0));
    let fine_pick = decide_gap(&fine.values, &fine.converged, settings.kernel.gap_ratio, Some(floor));
    let coarse_floor = (floor * r2).max(SOLVE_FLOOR * coarse.scale);
    let coarse_pick = decide_gap(&coarse.values, &coarse.converged, settings.confirm_ratio, Some(coarse_floor));
    let dimension = fine_pick.map(|(k, _)| k);
    let coarse_dimension = coarse_pick.map(|(k, _)| k);
    let status = match (dimension, coarse_dimension) {
        (None, _) => KernelStatus::Undecided {
            reason: format!("no singular-value gap of ratio {:e} at resolution {res_fine}", settings.kernel.gap_ratio),
        },
        (Some(d), c) if c != Some(d) => KernelStatus::Undecided {
            reason: format!("dimension {d} at resolution {res_fine} but {c:?} at resolution {res_coarse}"),
        },
        _ => KernelStatus::Certified,
    };
    DimensionDecision { dimension, coarse_dimension, certificate: fine_pick.map(|(_, c)| c), noise_floor: floor, status }
}

/// Smallest weighted singular values of `op` for the mass norms of `geo`.
pub fn spectrum_of(op: &AssembledOperator, geo: &Geometry, opts: &KernelOptions) -> Result<SingularSpectrum> {
    let row = crate::discrete_ops::MassFactor::new(geo, &op.codomain);
    let col = crate::discrete_ops::MassFactor::new(geo, &op.domain);
    smallest_singular(&op.matrix, &row, &col, opts.count, opts.tol, opts.max_iter, opts.seed)
}

/// A computed kernel with its evidence.
#[derive(Clone, Debug, Serialize)]
pub struct KernelBasis {
    pub space: KernelSpace,
    pub model: String,
    pub resolution: usize,
    pub coarse_resolution: usize,
    pub decision: DimensionDecision,
    pub singular_values: Vec<f64>,
    pub coarse_singular_values: Vec<f64>,
    /// Per element, max-norms of its defining equations.
    pub residual_norms: Vec<BTreeMap<String, f64>>,
    pub base: Option<BaseCertificate>,
    /// Elements, each normalized to unit twisted L2 norm of `h`.
    #[serde(skip)]
    pub elements: Vec<DeformationPair>,
    /// Functions generating the elements, for the sphere family.
    #[serde(skip)]
    pub generators: Vec<Field>,
}

impl KernelBasis {
    pub fn dimension(&self) -> Option<usize> {
        self.decision.dimension
    }

    pub fn is_certified(&self) -> bool {
        self.decision.status == KernelStatus::Certified
    }

    pub fn gap_ratio(&self) -> Option<f64> {
        self.decision.certificate.map(|c| c.ratio())
    }

    /// Converts an undecided result into [`Error::Undecidable`].
    pub fn require_certified(self) -> Result<Self> {
        match &self.decision.status {
            KernelStatus::Certified => Ok(self),
            KernelStatus::Undecided { reason } => Err(Error::Undecidable(reason.clone())),
        }
    }
}

/// Builds the operator whose kernel is sought at one pair.
pub type OperatorBuilder<'a> = &'a dyn Fn(&SolitonPair) -> Result<AssembledOperator>;

/// `h -> (Delta_f h / 2 + R(h), delta_f h)`.
pub fn z_operator(pair: &SolitonPair) -> Result<AssembledOperator> {
    let geo = pair.geometry();
    let tw = pair.twist();
    let lich = ops::sym2_laplacian(geo, Some(&tw)).scaled(0.5).add(&ops::curvature_action(geo))?;
    let div = ops::divergence(geo, Some(&tw));
    AssembledOperator::block(&[vec![Some(&lich)], vec![Some(&div)]], "Z")
}

/// `h -> (Delta h + 2 R(h), delta h, tr h)`.
pub fn e_operator(pair: &SolitonPair) -> Result<AssembledOperator> {
    let geo = pair.geometry();
    let lich = ops::sym2_laplacian(geo, None).add(&ops::curvature_action(geo).scaled(2.0))?;
    let div = ops::divergence(geo, None);
    let tr = ops::trace(geo);
    AssembledOperator::block(&[vec![Some(&lich)], vec![Some(&div)], vec![Some(&tr)]], "E")
}

/// Max-norms of the equations defining `Z`.
pub fn z_residuals(pair: &SolitonPair, d: &DeformationPair) -> Result<BTreeMap<String, f64>> {
    let geo = pair.geometry();
    let tw = pair.twist();
    let lich = ops::sym2_laplacian(geo, Some(&tw)).apply_field(&d.h)?.scaled(0.5).add(&ops::curvature_action(geo).apply_field(&d.h)?)?;
    let div = ops::divergence(geo, Some(&tw)).apply_field(&d.h)?;
    let gap = d.trace_gap(geo)?;
    Ok(BTreeMap::from([
        ("z_equation".to_string(), max_norm(geo, &lich)?),
        ("z_divergence".to_string(), max_norm(geo, &div)?),
        ("trace_gap".to_string(), max_norm(geo, &gap)?),
    ]))
}

/// Max-norms of the equations defining `E`, together with those of `Z`.
pub fn e_residuals(pair: &SolitonPair, d: &DeformationPair) -> Result<BTreeMap<String, f64>> {
    let geo = pair.geometry();
    let lich = ops::sym2_laplacian(geo, None).apply_field(&d.h)?.add(&ops::curvature_action(geo).apply_field(&d.h)?.scaled(2.0))?;
    let div = ops::divergence(geo, None).apply_field(&d.h)?;
    let tr = ops::trace(geo).apply_field(&d.h)?;
    let mut out = z_residuals(pair, d)?;
    out.insert("e_equation".into(), max_norm(geo, &lich)?);
    out.insert("e_divergence".into(), max_norm(geo, &div)?);
    out.insert("trace".into(), max_norm(geo, &tr)?);
    Ok(out)
}

/// Coarse resolution used to confirm a kernel dimension.
pub fn coarse_resolution(model: &GridModel, resolution: usize) -> Result<usize> {
    let coarse = resolution / 2;
    if coarse < model.min_resolution() {
        return Err(Error::InvalidParameter(format!(
            "resolution {resolution} too small for a kernel computation on {}; need at least {}",
            model.label(),
            2 * model.min_resolution()
        )));
    }
    Ok(coarse)
}

fn sym2_vector(pair: &SolitonPair, v: &[f64]) -> Result<Field> {
    let h = Field::new(pair.geometry().atlas().clone(), FieldKind::Sym2, v.to_vec())?;
    let n = norm(pair.geometry(), &h, Some(pair.f()))?;
    Ok(h.scaled(1.0 / n.max(f64::MIN_POSITIVE)))
}

/// Runs the two-level kernel computation for `Z` or `E`.
fn kernel_basis(
    space: KernelSpace,
    model: &GridModel,
    base: &SolitonBase,
    coarse: &SolitonPair,
    build: OperatorBuilder,
    settings: &KernelSettings,
) -> Result<KernelBasis> {
    let pair = &base.pair;
    if space == KernelSpace::E && !pair.f_is_constant() {
        return Err(Error::Precondition("E is defined only at Einstein points; f is not constant".into()));
    }
    let res_f = pair.geometry().atlas().resolution();
    let res_c = coarse.geometry().atlas().resolution();
    let fine = spectrum_of(&build(pair)?, pair.geometry(), &settings.kernel)?;
    let coarse_spec = spectrum_of(&build(coarse)?, coarse.geometry(), &settings.kernel)?;
    let decision = decide_dimension(&fine, res_f, &coarse_spec, res_c, settings);
    let dim = decision.dimension.unwrap_or(0);
    let mut elements = Vec::with_capacity(dim);
    let mut residual_norms = Vec::with_capacity(dim);
    for v in &fine.vectors[..dim] {
        let h = sym2_vector(pair, v)?;
        let a = match space {
            KernelSpace::E => Field::zeros(h.atlas().clone(), FieldKind::Scalar),
            _ => ops::trace(pair.geometry()).apply_field(&h)?.scaled(0.5),
        };
        let d = DeformationPair::new(h, a)?;
        residual_norms.push(match space {
            KernelSpace::E => e_residuals(pair, &d)?,
            _ => z_residuals(pair, &d)?,
        });
        elements.push(d);
    }
    Ok(KernelBasis {
        space,
        model: model.label(),
        resolution: res_f,
        coarse_resolution: res_c,
        decision,
        singular_values: fine.values,
        coarse_singular_values: coarse_spec.values,
        residual_norms,
        base: Some(base.certificate.clone()),
        elements,
        generators: Vec::new(),
    })
}

/// `Z` at a certified base, confirmed against `coarse`, with a custom
/// operator source (e.g. a cache).
pub fn compute_z_with(
    model: &GridModel,
    base: &SolitonBase,
    coarse: &SolitonPair,
    build: OperatorBuilder,
    settings: &KernelSettings,
) -> Result<KernelBasis> {
    kernel_basis(KernelSpace::Z, model, base, coarse, build, settings)
}

/// `E` at a certified Einstein base; see [`compute_z_with`].
pub fn compute_e_with(
    model: &GridModel,
    base: &SolitonBase,
    coarse: &SolitonPair,
    build: OperatorBuilder,
    settings: &KernelSettings,
) -> Result<KernelBasis> {
    kernel_basis(KernelSpace::E, model, base, coarse, build, settings)
}

fn bases(model: &GridModel, resolution: usize) -> Result<(SolitonBase, SolitonPair)> {
    let coarse = coarse_resolution(model, resolution)?;
    Ok((einstein_base(model, resolution)?, model_pair(model, coarse)?))
}

/// Essential infinitesimal solitonic deformations of the normalized model.
pub fn compute_z(model: &GridModel, resolution: usize, settings: &KernelSettings) -> Result<KernelBasis> {
    let (base, coarse) = bases(model, resolution)?;
    compute_z_with(model, &base, &coarse, &z_operator, settings)
}

/// Essential Einstein deformations of the normalized model.
pub fn compute_e(model: &GridModel, resolution: usize, settings: &KernelSettings) -> Result<KernelBasis> {
    let (base, coarse) = bases(model, resolution)?;
    compute_e_with(model, &base, &coarse, &e_operator, settings)
}

/// Smallest eigenvalue of `-Delta_f` on weighted-mean-zero functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceGap {
    pub value: f64,
    /// Nonzero eigenvalues of `-Delta_f` found, ascending.
    pub eigenvalues: Vec<f64>,
    /// `value > 1`, which forces `tr h = 2a` on `Z`.
    pub exceeds_one: bool,
    /// `|value - 1| < BOUNDARY_TOL`.
    pub boundary: bool,
}

/// Distance from 1 below which the trace gap is flagged as a boundary case.
pub const BOUNDARY_TOL: f64 = 1e-2;

/// [`weighted_laplacian_gap`] at a certified soliton.
pub fn trace_spectral_gap(base: &SolitonBase) -> Result<TraceGap> {
    weighted_laplacian_gap(&base.pair)
}

/// Smallest eigenvalue of `-Delta_f` on `{u : int u e^(-f) mu = 0}` for any
/// normalized pair.
pub fn weighted_laplacian_gap(pair: &SolitonPair) -> Result<TraceGap> {
    let geo = pair.geometry();
    let lap = ops::laplacian(geo, Some(&pair.twist()));
    let pairs = eigensolve(&lap.matrix, 6, -0.05, 1e-9, 300, 5)?;
    let atlas = geo.atlas();
    let mut eigenvalues = Vec::new();
    for p in pairs {
        let v = Field::new(atlas.clone(), FieldKind::Scalar, p.vector)?;
        let mean = integrate(geo, &v, Some(pair.f()))? / integrate(geo, &Field::constant(atlas.clone(), 1.0), Some(pair.f()))?;
        let spread = v.map(|x| x - mean).max_abs();
        // Constants span the kernel; everything else has mean zero.
        if spread > 1e-6 * v.max_abs() {
            eigenvalues.push(-p.value);
        }
    }
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let value = *eigenvalues.first().ok_or_else(|| Error::Solver("no nonconstant eigenfunction found".into()))?;
    Ok(TraceGap { value, eigenvalues, exceeds_one: value > 1.0, boundary: (value - 1.0).abs() < BOUNDARY_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(values: &[f64]) -> SingularSpectrum {
        SingularSpectrum {
            values: values.to_vec(),
            vectors: vec![],
            converged: vec![true; values.len()],
            residuals: vec![0.0; values.len()],
            iterations: 1,
            scale: 1e4,
        }
    }

    #[test]
    fn clear_gap_is_certified() {
        let s = KernelSettings::default();
        let d = decide_dimension(&spectrum(&[1e-4, 1e-4, 1e-4, 0.9]), 64, &spectrum(&[4e-4, 4e-4, 4e-4, 0.9]), 32, &s);
        assert_eq!(d.dimension, Some(3));
        assert_eq!(d.status, KernelStatus::Certified);
    }

    #[test]
    fn stable_positive_spectrum_is_empty_kernel() {
        let s = KernelSettings::default();
        let d = decide_dimension(&spectrum(&[0.5, 0.7]), 64, &spectrum(&[0.5001, 0.7]), 32, &s);
        assert_eq!(d.dimension, Some(0));
        assert!(d.certificate.unwrap().ratio() >= 1e3);
    }

    #[test]
    fn dimension_change_is_undecided() {
        let s = KernelSettings::default();
        let d = decide_dimension(&spectrum(&[1e-5, 0.5]), 64, &spectrum(&[0.2, 0.5]), 32, &s);
        assert!(matches!(d.status, KernelStatus::Undecided { .. }));
    }
}
