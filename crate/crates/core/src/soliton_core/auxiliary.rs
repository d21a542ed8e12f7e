//! The operators `beta`, `F`, `G` and the compatibility identity.
//!
//! * `beta_k(h, v) = delta_f h - k dv`,
//! * `F(h, u) = (-Delta_f h / 2 - R(h) - dd u / 2, Delta_f u + u)`,
//! * `G_k(w) = -delta_f L_(w#) g / 2 - k d delta_f w`.
//!
//! The residual satisfies `delta_f S1 = d S2` for every pair, so
//! `beta_k o S = 0` holds with `k = 1`, not with the printed `k = 1/2`.
//! Linearizing at a soliton, and using that the second component of `F` is
//! the derivative of `S2` divided by `DS2_SCALE`, gives
//! `beta_k o F(h, tr h - 2a) = G_k(delta_f h)` with `k = DS2_SCALE`.

use serde::{Deserialize, Serialize};

use crate::discrete_ops::assembly::{identity, AssembledOperator};
use crate::discrete_ops::ops;
use crate::discrete_ops::quadrature::norm;
use crate::discrete_ops::{Field, FieldKind, Geometry};
use crate::error::Result;

use super::linearization::DS2_SCALE;
use super::{residual_unchecked, SolitonBase, SolitonPair};

/// Coefficient of `d` that annihilates `beta o S`.
pub const COMP_KAPPA_CALIBRATED: f64 = 1.0;
/// The coefficient as printed in the source formula.
pub const COMP_KAPPA_LITERAL: f64 = 0.5;
/// Coefficient of `d` in `beta` and `G` for the linear identity with `F`.
pub const COMM_KAPPA: f64 = COMP_KAPPA_CALIBRATED * DS2_SCALE;

/// `beta_k : (h, v) -> delta_f h - k dv`.
pub fn op_beta(pair: &SolitonPair, kappa: f64) -> Result<AssembledOperator> {
    let geo = pair.geometry();
    let tw = pair.twist();
    let div = ops::divergence(geo, Some(&tw));
    let d = ops::differential(geo).scaled(-kappa);
    AssembledOperator::block(&[vec![Some(&div), Some(&d)]], "beta")
}

/// `F : (h, u) -> (-Delta_f h / 2 - R(h) - dd u / 2, Delta_f u + u)`.
pub fn op_f(base: &SolitonBase) -> Result<AssembledOperator> {
    let pair = &base.pair;
    let geo = pair.geometry();
    let tw = pair.twist();
    let hh = ops::sym2_laplacian(geo, Some(&tw)).scaled(-0.5).sub(&ops::curvature_action(geo))?;
    let hu = ops::hessian(geo).scaled(-0.5);
    let uu = ops::laplacian(geo, Some(&tw)).add(&identity(geo.atlas(), FieldKind::Scalar))?;
    AssembledOperator::block(&[vec![Some(&hh), Some(&hu)], vec![None, Some(&uu)]], "F")
}

/// `G_k : w -> -delta_f L_(w#) g / 2 - k d delta_f w`.
pub fn op_g(pair: &SolitonPair, kappa: f64) -> Result<AssembledOperator> {
    let geo = pair.geometry();
    let tw = pair.twist();
    let a = ops::divergence(geo, Some(&tw)).compose(&ops::lie_metric(geo))?.compose(&ops::sharp(geo))?.scaled(-0.5);
    let b = ops::differential(geo).compose(&ops::covector_divergence(geo, Some(&tw)))?.scaled(-kappa);
    Ok(a.add(&b)?.with_label("G"))
}

/// Outcome of testing `delta_f S1 - k d S2 = 0` on one pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompSample {
    /// `|delta_f S1|` in the `L^2` norm.
    pub div_s1: f64,
    /// `|delta_f S1 - k d S2| / |delta_f S1|` for the literal and calibrated `k`.
    pub literal_rel: f64,
    pub calibrated_rel: f64,
    /// Least-squares `k = <delta_f S1, d S2> / |d S2|^2`.
    pub fitted_kappa: f64,
}

/// Aggregate of [`CompSample`]s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompCalibration {
    pub samples: Vec<CompSample>,
    /// The candidate with the smaller worst-case residual.
    pub selected_kappa: f64,
    pub literal_worst: f64,
    pub calibrated_worst: f64,
}

/// Evaluates both candidate constants on one `(g, f)`.
pub fn comp_sample(geo: &Geometry, f: &Field) -> Result<CompSample> {
    let r = residual_unchecked(geo, f)?;
    let tw = ops::Twist::new(geo, f)?;
    let div_s1 = ops::divergence(geo, Some(&tw)).apply_field(&r.s1)?;
    let d_s2 = ops::differential(geo).apply_field(&r.s2)?;
    let nd = norm(geo, &div_s1, None)?;
    let rel = |k: f64| -> Result<f64> { Ok(norm(geo, &div_s1.axpy(-k, &d_s2)?, None)? / nd) };
    let ip = crate::discrete_ops::inner(geo, &div_s1, &d_s2, None)?;
    let n2 = norm(geo, &d_s2, None)?.powi(2);
    Ok(CompSample {
        div_s1: nd,
        literal_rel: rel(COMP_KAPPA_LITERAL)?,
        calibrated_rel: rel(COMP_KAPPA_CALIBRATED)?,
        fitted_kappa: ip / n2,
    })
}

/// Runs [`comp_sample`] on every pair and selects the constant.
pub fn calibrate_comp(pairs: &[(Geometry, Field)]) -> Result<CompCalibration> {
    let samples: Vec<CompSample> = pairs.iter().map(|(g, f)| comp_sample(g, f)).collect::<Result<_>>()?;
    let literal_worst = samples.iter().map(|s| s.literal_rel).fold(0.0, f64::max);
    let calibrated_worst = samples.iter().map(|s| s.calibrated_rel).fold(0.0, f64::max);
    let selected_kappa = if calibrated_worst <= literal_worst { COMP_KAPPA_CALIBRATED } else { COMP_KAPPA_LITERAL };
    Ok(CompCalibration { samples, selected_kappa, literal_worst, calibrated_worst })
}

/// `beta_k(F(h, tr h - 2a))` and `G_k(delta_f h)` for one direction.
pub fn comm_sides(base: &SolitonBase, h: &Field, a: &Field, kappa: f64) -> Result<(Field, Field)> {
    let pair = &base.pair;
    let geo = pair.geometry();
    let u = ops::trace(geo).apply_field(h)?.axpy(-2.0, a)?;
    let mut x = h.data().to_vec();
    x.extend_from_slice(u.data());
    let fx = op_f(base)?.apply(&x);
    let lhs = op_beta(pair, kappa)?.apply(&fx);
    let tw = pair.twist();
    let w = ops::divergence(geo, Some(&tw)).apply_field(h)?;
    let rhs = op_g(pair, kappa)?.apply_field(&w)?;
    Ok((Field::new(h.atlas().clone(), FieldKind::Covector, lhs)?, rhs))
}

/// Relative mismatch of the linear identity for several coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommCheck {
    /// `(k, |beta_k F - G_k delta_f h| / |G_k delta_f h|)` in the max norm.
    pub candidates: Vec<(f64, f64)>,
}

pub fn comm_check(base: &SolitonBase, h: &Field, a: &Field) -> Result<CommCheck> {
    let geo = base.pair.geometry();
    let mut candidates = Vec::new();
    for k in [COMP_KAPPA_LITERAL, COMP_KAPPA_CALIBRATED, COMM_KAPPA] {
        let (l, r) = comm_sides(base, h, a, k)?;
        let scale = crate::discrete_ops::quadrature::max_norm(geo, &r)?.max(f64::MIN_POSITIVE);
        candidates.push((k, crate::discrete_ops::quadrature::max_norm(geo, &l.sub(&r)?)? / scale));
    }
    Ok(CommCheck { candidates })
}
