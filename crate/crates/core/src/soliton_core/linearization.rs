//! The linearization of the soliton residual and its finite-difference oracle.
//!
//! With `u = tr h - 2a`, the linearization at a normalized soliton is
//!
//! * `dS1 = -Delta_f h / 2 - R(h) - dd u / 2 + L_(delta_f h)# g / 2`,
//! * `dS2 = DS2_SCALE * (Delta_f u + u - delta_f delta_f h)`.
//!
//! The bracket in `dS2` is the usual normalization; differentiating `S2`
//! directly (and checking against finite differences) gives the factor
//! [`DS2_SCALE`]. Kernels do not depend on it.
//!
//! Before using the soliton equation the first component reads
//! `2 dS1 = -Delta h - dd tr h + L_(delta h)# g - 2 R(h) + Ric.h + h.Ric - 2h
//! + 2 dd a + nabla_(grad f) h - [nabla h . nabla f]`; both forms are assembled.

use std::sync::Arc;

use crate::discrete_ops::assembly::{identity, AssembledOperator};
use crate::discrete_ops::ops;
use crate::discrete_ops::quadrature::integrate;
use crate::discrete_ops::{Field, FieldKind, Geometry};
use crate::error::{Error, Result};

use super::{normalizing_shift, residual_unchecked, SolitonBase, SolitonPair};

/// Derivative of `S2` divided by `Delta_f u + u - delta_f delta_f h`.
pub const DS2_SCALE: f64 = -0.5;

/// A first-order variation `(h, a)` of `(g, f)`.
#[derive(Clone, Debug)]
pub struct DeformationPair {
    pub h: Field,
    pub a: Field,
}

impl DeformationPair {
    pub fn new(h: Field, a: Field) -> Result<Self> {
        h.expect_kind(FieldKind::Sym2)?;
        a.expect_kind(FieldKind::Scalar)?;
        a.expect_atlas(h.atlas())?;
        Ok(DeformationPair { h, a })
    }

    /// `int (tr h - 2a) e^(-f) mu_g`; zero for directions tangent to the constraint.
    pub fn tangency_defect(&self, pair: &SolitonPair) -> Result<f64> {
        let u = self.trace_gap(pair.geometry())?;
        integrate(pair.geometry(), &u, Some(pair.f()))
    }

    /// `u = tr h - 2a`.
    pub fn trace_gap(&self, geo: &Geometry) -> Result<Field> {
        ops::trace(geo).apply_field(&self.h)?.axpy(-2.0, &self.a)
    }

    /// Shifts `a` by the constant that makes the direction tangent.
    pub fn made_tangent(self, pair: &SolitonPair) -> Result<Self> {
        let defect = self.tangency_defect(pair)?;
        let mass = integrate(pair.geometry(), &Field::constant(pair.geometry().atlas().clone(), 1.0), Some(pair.f()))?;
        let shift = defect / (2.0 * mass);
        Ok(DeformationPair { a: self.a.map(|x| x + shift), h: self.h })
    }

    /// Stacked coefficient vector `[h; a]`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut v = self.h.data().to_vec();
        v.extend_from_slice(self.a.data());
        v
    }

    pub fn from_stacked(atlas: &Arc<crate::discrete_ops::ChartAtlas>, v: &[f64]) -> Result<Self> {
        let m = 3 * atlas.owned_count();
        if v.len() != m + atlas.owned_count() {
            return Err(Error::InvalidParameter("stacked deformation has the wrong length".into()));
        }
        DeformationPair::new(
            Field::new(atlas.clone(), FieldKind::Sym2, v[..m].to_vec())?,
            Field::new(atlas.clone(), FieldKind::Scalar, v[m..].to_vec())?,
        )
    }
}

/// Both assembled forms of the linearization.
#[derive(Clone, Debug)]
pub struct Linearization {
    /// `(h, a) -> (dS1, dS2)`.
    pub op: AssembledOperator,
    /// `(h, a) -> dS1` through the unsimplified form, halved.
    pub alt_s1: AssembledOperator,
}

impl Linearization {
    pub fn apply(&self, d: &DeformationPair) -> Result<(Field, Field)> {
        let out = self.op.apply(&d.stacked());
        let atlas = d.h.atlas();
        let m = 3 * atlas.owned_count();
        Ok((
            Field::new(atlas.clone(), FieldKind::Sym2, out[..m].to_vec())?,
            Field::new(atlas.clone(), FieldKind::Scalar, out[m..].to_vec())?,
        ))
    }

    pub fn apply_alt(&self, d: &DeformationPair) -> Result<Field> {
        Field::new(d.h.atlas().clone(), FieldKind::Sym2, self.alt_s1.apply(&d.stacked()))
    }
}

/// Assembles the linearization at a certified soliton.
pub fn linearized_ds(base: &SolitonBase) -> Result<Linearization> {
    linearized_ds_at(&base.pair)
}

/// Assembles the linearization formulas at any normalized pair. They only
/// describe the derivative of the residual when the pair is a soliton.
pub fn linearized_ds_at(pair: &SolitonPair) -> Result<Linearization> {
    let geo = pair.geometry();
    let atlas = geo.atlas();
    let tw = pair.twist();
    let lap_f = ops::sym2_laplacian(geo, Some(&tw));
    let lap_fs = ops::laplacian(geo, Some(&tw));
    let curv = ops::curvature_action(geo);
    let hess = ops::hessian(geo);
    let tr = ops::trace(geo);
    let div_f = ops::divergence(geo, Some(&tw));
    let cdiv_f = ops::covector_divergence(geo, Some(&tw));
    let alpha_sharp = ops::lie_metric(geo).compose(&ops::sharp(geo))?;
    let id_s = identity(atlas, FieldKind::Scalar);

    let hess_tr = hess.compose(&tr)?;
    let s1_h = lap_f
        .scaled(-0.5)
        .sub(&curv)?
        .sub(&hess_tr.scaled(0.5))?
        .add(&alpha_sharp.compose(&div_f)?.scaled(0.5))?;
    let s1_a = hess.clone();
    let lap_u = lap_fs.add(&id_s)?;
    let s2_h = lap_u.compose(&tr)?.sub(&cdiv_f.compose(&div_f)?)?.scaled(DS2_SCALE);
    let s2_a = lap_u.scaled(-2.0 * DS2_SCALE);
    let op = AssembledOperator::block(&[vec![Some(&s1_h), Some(&s1_a)], vec![Some(&s2_h), Some(&s2_a)]], "dS")?;

    let lap = ops::sym2_laplacian(geo, None);
    let div = ops::divergence(geo, None);
    let alt_h = lap
        .scaled(-1.0)
        .sub(&hess_tr)?
        .add(&alpha_sharp.compose(&div)?)?
        .sub(&curv.scaled(2.0))?
        .add(&ops::ricci_anticommutator(geo))?
        .sub(&identity(atlas, FieldKind::Sym2).scaled(2.0))?
        .add(&ops::directional_along_grad(geo, &tw))?
        .sub(&ops::grad_bracket(geo, &tw))?
        .scaled(0.5);
    let alt = AssembledOperator::block(&[vec![Some(&alt_h), Some(&hess)]], "dS1_alt")?;
    Ok(Linearization { op, alt_s1: alt })
}

/// Central-difference derivative of the residual, and of `W`.
#[derive(Clone, Debug)]
pub struct FdLinearization {
    pub s1: Field,
    pub s2: Field,
    pub dw: f64,
}

/// `(S(g + eps h, f + eps a + c+) - S(g - eps h, f - eps a + c-)) / (2 eps)`,
/// the constants `c+-` restoring the constraint at each endpoint.
pub fn fd_linearization(pair: &SolitonPair, d: &DeformationPair, eps: f64) -> Result<FdLinearization> {
    let geo = pair.geometry();
    let scale = 1.0 + d.h.max_abs() + d.a.max_abs();
    let defect = d.tangency_defect(pair)?;
    if defect.abs() > 1e-8 * scale {
        return Err(Error::Precondition(format!("direction not tangent to the constraint: defect {defect:e}")));
    }
    let endpoint = |s: f64| -> Result<super::ResidualPair> {
        let g = geo.metric().perturbed(s * eps, &d.h).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::Precondition(format!("endpoint metric not positive definite at eps {eps:e}: {e}")),
            other => other,
        })?;
        let geo_s = Geometry::new(g);
        let f = pair.f().axpy(s * eps, &d.a)?;
        let c = normalizing_shift(&geo_s, &f)?;
        residual_unchecked(&geo_s, &f.map(|x| x + c))
    };
    let plus = endpoint(1.0)?;
    let minus = endpoint(-1.0)?;
    let k = 0.5 / eps;
    Ok(FdLinearization {
        s1: plus.s1.sub(&minus.s1)?.scaled(k),
        s2: plus.s2.sub(&minus.s2)?.scaled(k),
        dw: (plus.w - minus.w) * k,
    })
}
