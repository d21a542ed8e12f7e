//! Entropy, the soliton equations and their linearization.
//!
//! A pair `(g, f)` is normalized when `int e^(-f) mu_g = (2 pi)^(n/2)`.
//! The residual of the soliton equations is
//!
//! * `S1 = Ric + dd f - g`,
//! * `S2 = Delta f - |df|^2 / 2 + s / 2 + f - n - W(g, f)`,
//!
//! with `W = (2 pi)^(-n/2) int (|df|^2 / 2 + s / 2 + f - n) e^(-f) mu_g`.

pub mod auxiliary;
pub mod grid;
pub mod linearization;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discrete_ops::ops::{self, Twist};
use crate::discrete_ops::quadrature::{integrate, max_norm};
use crate::discrete_ops::{Field, FieldKind, Geometry, MetricField};
use crate::error::{Error, Result};

pub use auxiliary::{
    calibrate_comp, comm_check, op_beta, op_f, op_g, CommCheck, CompCalibration, COMM_KAPPA, COMP_KAPPA_CALIBRATED,
    COMP_KAPPA_LITERAL,
};
pub use grid::GridModel;
pub use linearization::{fd_linearization, linearized_ds, DeformationPair, FdLinearization, Linearization, DS2_SCALE};

/// Relative tolerance of the normalization constraint.
pub const CONSTRAINT_TOL: f64 = 1e-6;

/// `(2 pi)^(-n/2) int e^(-f) mu_g`.
pub fn constraint_value(geo: &Geometry, f: &Field) -> Result<f64> {
    let n = geo.dim() as f64;
    Ok(integrate(geo, &Field::constant(geo.atlas().clone(), 1.0), Some(f))? / (2.0 * PI).powf(n / 2.0))
}

/// The constant `c` for which `f + c` is normalized.
pub fn normalizing_shift(geo: &Geometry, f: &Field) -> Result<f64> {
    Ok(constraint_value(geo, f)?.ln())
}

/// A metric and weight function satisfying the normalization constraint.
#[derive(Clone, Debug)]
pub struct SolitonPair {
    geo: Arc<Geometry>,
    f: Field,
}

impl SolitonPair {
    pub fn new(geo: Arc<Geometry>, f: Field) -> Result<Self> {
        f.expect_kind(FieldKind::Scalar)?;
        f.expect_atlas(geo.atlas())?;
        let c = constraint_value(&geo, &f)?;
        if !((c - 1.0).abs() <= CONSTRAINT_TOL) {
            return Err(Error::ConstraintViolated { measured: c });
        }
        Ok(SolitonPair { geo, f })
    }

    /// Shifts `f` by the constant that restores the constraint.
    pub fn normalized(geo: Arc<Geometry>, f: Field) -> Result<Self> {
        f.expect_kind(FieldKind::Scalar)?;
        f.expect_atlas(geo.atlas())?;
        let c = normalizing_shift(&geo, &f)?;
        Self::new(geo, f.map(|x| x + c))
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geo
    }

    pub fn metric(&self) -> &MetricField {
        self.geo.metric()
    }

    pub fn f(&self) -> &Field {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.geo.dim()
    }

    pub fn constraint(&self) -> f64 {
        constraint_value(&self.geo, &self.f).expect("validated pair")
    }

    pub fn twist(&self) -> Twist {
        Twist::new(&self.geo, &self.f).expect("validated pair")
    }

    /// Whether `f` is constant to rounding.
    pub fn f_is_constant(&self) -> bool {
        let d = self.f.data();
        let (lo, hi) = d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        hi - lo <= 1e-12 * (1.0 + hi.abs())
    }
}

/// `|df|^2 / 2 + s / 2 + f - n` at every node.
fn entropy_density(geo: &Geometry, f: &Field) -> Result<Vec<f64>> {
    let jets = geo.scalar_jets(f)?;
    let n = geo.dim() as f64;
    Ok(jets.iter().zip(geo.nodes()).map(|(j, ng)| 0.5 * j.grad_sq() + 0.5 * ng.scalar + j.value - n).collect())
}

fn entropy_unchecked(geo: &Geometry, f: &Field) -> Result<f64> {
    let density = Field::new(geo.atlas().clone(), FieldKind::Scalar, entropy_density(geo, f)?)?;
    let n = geo.dim() as f64;
    Ok(integrate(geo, &density, Some(f))? / (2.0 * PI).powf(n / 2.0))
}

/// Perelman's entropy `W(g, f)`.
pub fn entropy_w(pair: &SolitonPair) -> Result<f64> {
    entropy_unchecked(&pair.geo, &pair.f)
}

/// Turns `g` with `Ric = c g` into the normalized pair `(c g, log(Vol(c g) / (2 pi)^(n/2)))`.
///
/// `tol` bounds the pointwise norm of `Ric - c g`.
pub fn normalize_einstein(g: &MetricField, c: f64, tol: f64) -> Result<SolitonPair> {
    if !(c > 0.0) {
        return Err(Error::Precondition(format!("Einstein constant {c} is not positive; not a shrinking soliton")));
    }
    let geo = Geometry::new(g.clone());
    let dev = einstein_deviation(&geo, c)?;
    if dev > tol {
        return Err(Error::Precondition(format!("metric is not Einstein with constant {c}: max |Ric - c g| = {dev:e} > {tol:e}")));
    }
    let geo = Arc::new(Geometry::new(g.scaled(c)?));
    let n = geo.dim() as f64;
    let vol = integrate(&geo, &Field::constant(geo.atlas().clone(), 1.0), None)?;
    let f = Field::constant(geo.atlas().clone(), (vol / (2.0 * PI).powf(n / 2.0)).ln());
    SolitonPair::new(geo, f)
}

/// `max |Ric - c g|_g`.
pub fn einstein_deviation(geo: &Geometry, c: f64) -> Result<f64> {
    let ric = geo.curvature_pack().ricci;
    let dev = ric.axpy(-c, geo.metric().field())?;
    max_norm(geo, &dev)
}

/// The residual `(S1, S2)` together with `W`.
#[derive(Clone, Debug)]
pub struct ResidualPair {
    pub s1: Field,
    pub s2: Field,
    pub w: f64,
}

impl ResidualPair {
    pub fn max_norms(&self, geo: &Geometry) -> Result<[f64; 2]> {
        Ok([max_norm(geo, &self.s1)?, max_norm(geo, &self.s2)?])
    }
}

/// `S1`, `S2` and `W` for any metric and weight, normalized or not.
pub fn residual_unchecked(geo: &Geometry, f: &Field) -> Result<ResidualPair> {
    let w = entropy_unchecked(geo, f)?;
    let jets = geo.scalar_jets(f)?;
    let n = geo.dim() as f64;
    let mut s1 = Vec::with_capacity(3 * jets.len());
    let mut s2 = Vec::with_capacity(jets.len());
    for (j, ng) in jets.iter().zip(geo.nodes()) {
        for (a, b) in [(0, 0), (0, 1), (1, 1)] {
            s1.push(ng.ricci[a][b] + j.hess[a][b] - ng.g[a][b]);
        }
        s2.push(j.laplacian(ng) - 0.5 * j.grad_sq() + 0.5 * ng.scalar + j.value - n - w);
    }
    let atlas = geo.atlas().clone();
    Ok(ResidualPair { s1: Field::new(atlas.clone(), FieldKind::Sym2, s1)?, s2: Field::new(atlas, FieldKind::Scalar, s2)?, w })
}

pub fn residual_s(pair: &SolitonPair) -> Result<ResidualPair> {
    residual_unchecked(&pair.geo, &pair.f)
}

/// `delta_f(Ric + dd f - g) - d(2 Delta f - |df|^2 + s + 2 f) / 2`, which
/// vanishes for every `(g, f)`.
pub fn bianchi_residual(geo: &Geometry, f: &Field) -> Result<Field> {
    let twist = Twist::new(geo, f)?;
    let jets = twist.jets();
    let mut t = Vec::with_capacity(3 * jets.len());
    let mut q = Vec::with_capacity(jets.len());
    for (j, ng) in jets.iter().zip(geo.nodes()) {
        for (a, b) in [(0, 0), (0, 1), (1, 1)] {
            t.push(ng.ricci[a][b] + j.hess[a][b] - ng.g[a][b]);
        }
        q.push(0.5 * (2.0 * j.laplacian(ng) - j.grad_sq() + ng.scalar + 2.0 * j.value));
    }
    let atlas = geo.atlas().clone();
    let lhs = ops::divergence(geo, Some(&twist)).apply_field(&Field::new(atlas.clone(), FieldKind::Sym2, t)?)?;
    let rhs = ops::differential(geo).apply_field(&Field::new(atlas, FieldKind::Scalar, q)?)?;
    lhs.sub(&rhs)
}

/// Evidence that a pair solves the soliton equations at its resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseCertificate {
    pub resolution: usize,
    pub coarse_resolution: usize,
    /// Max-norms of `S1` and `S2` at the working resolution.
    pub residual: [f64; 2],
    pub coarse_residual: [f64; 2],
    /// Discretization error estimated from the two resolutions.
    pub error_estimate: f64,
    /// `factor * error_estimate`.
    pub tolerance: f64,
}

/// A pair certified to be a soliton within its discretization error.
#[derive(Clone, Debug)]
pub struct SolitonBase {
    pub pair: SolitonPair,
    pub certificate: BaseCertificate,
}

/// Absolute floor below which residuals count as exact.
const EXACT_FLOOR: f64 = 1e-10;

/// Default multiple of the discretization error a base residual may reach.
pub const BASE_FACTOR: f64 = 10.0;

/// Accepts `fine` when its residual is below ten times the discretization
/// error, estimated from the second-order drop between `coarse` and `fine`.
pub fn certify_base(fine: SolitonPair, coarse: &SolitonPair) -> Result<SolitonBase> {
    certify_base_with(fine, coarse, BASE_FACTOR)
}

/// [`certify_base`] with a custom multiple of the error estimate.
pub fn certify_base_with(fine: SolitonPair, coarse: &SolitonPair, factor: f64) -> Result<SolitonBase> {
    let rf = residual_s(&fine)?.max_norms(fine.geometry())?;
    let rc = residual_s(coarse)?.max_norms(coarse.geometry())?;
    let res_f = fine.geometry().atlas().resolution();
    let res_c = coarse.geometry().atlas().resolution();
    if res_c >= res_f {
        return Err(Error::InvalidParameter("coarse resolution must be below the working resolution".into()));
    }
    let fine_max = rf[0].max(rf[1]);
    let coarse_max = rc[0].max(rc[1]);
    let ratio = (res_f as f64 / res_c as f64).powi(2);
    let estimate = ((coarse_max - fine_max) / (ratio - 1.0)).max(0.0);
    let tolerance = factor * estimate + EXACT_FLOOR;
    let certificate = BaseCertificate {
        resolution: res_f,
        coarse_resolution: res_c,
        residual: rf,
        coarse_residual: rc,
        error_estimate: estimate,
        tolerance,
    };
    if fine_max > tolerance {
        return Err(Error::Precondition(format!(
            "base is not a normalized shrinking soliton: residual {fine_max:e} exceeds tolerance {tolerance:e} (coarse residual {coarse_max:e})"
        )));
    }
    Ok(SolitonBase { pair: fine, certificate })
}

/// The normalized pair of a grid model without certification: Einstein
/// models get constant `f`, others `f = 0` shifted onto the constraint.
pub fn model_pair(model: &GridModel, resolution: usize) -> Result<SolitonPair> {
    let g = model.metric(resolution)?;
    match model.einstein_constant() {
        Some(c) if c > 0.0 => normalize_einstein(&g, c, f64::INFINITY),
        _ => SolitonPair::normalized(Arc::new(Geometry::new(g.clone())), Field::zeros(g.atlas().clone(), FieldKind::Scalar)),
    }
}

/// Certified normalized base for a grid model, using `resolution / 2` (or
/// the smallest admissible resolution) as the comparison grid.
pub fn einstein_base(model: &GridModel, resolution: usize) -> Result<SolitonBase> {
    einstein_base_with(model, resolution, BASE_FACTOR)
}

pub fn einstein_base_with(model: &GridModel, resolution: usize, factor: f64) -> Result<SolitonBase> {
    let coarse = (resolution / 2).max(model.min_resolution());
    if coarse >= resolution {
        return Err(Error::InvalidParameter(format!("resolution {resolution} too small to certify a base")));
    }
    let fine = model_pair(model, resolution)?;
    let coarse = model_pair(model, coarse)?;
    certify_base_with(fine, &coarse, factor)
}
