//! Quadrature on atlases: trapezoid rule with the partition of unity.
//!
//! On the periodic torus and on the smooth blended sphere charts the rule
//! converges faster than any power of `h`; accuracy is limited by the
//! metric itself.

use super::atlas::FieldKind;
use super::field::Field;
use super::geometry::Geometry;
use crate::error::Result;

fn weight_factors(geo: &Geometry, weight: Option<&Field>) -> Result<Vec<f64>> {
    let w = geo.quadrature_weights();
    match weight {
        None => Ok(w.to_vec()),
        Some(f) => {
            f.expect_kind(FieldKind::Scalar)?;
            f.expect_atlas(geo.atlas())?;
            Ok(w.iter().zip(f.data()).map(|(w, f)| w * (-f).exp()).collect())
        }
    }
}

/// `int u mu_g`, or `int u e^(-f) mu_g` when `weight = Some(f)`.
pub fn integrate(geo: &Geometry, u: &Field, weight: Option<&Field>) -> Result<f64> {
    u.expect_kind(FieldKind::Scalar)?;
    u.expect_atlas(geo.atlas())?;
    let w = weight_factors(geo, weight)?;
    Ok(u.data().iter().zip(&w).map(|(u, w)| u * w).sum())
}

/// `<h, k>_g = int g(h, k) mu_g`, twisted by `e^(-f)` when `weight = Some(f)`.
pub fn inner(geo: &Geometry, h: &Field, k: &Field, weight: Option<&Field>) -> Result<f64> {
    h.expect_atlas(geo.atlas())?;
    k.expect_kind(h.kind())?;
    k.expect_atlas(geo.atlas())?;
    let w = weight_factors(geo, weight)?;
    let m = h.kind().components();
    let mut s = 0.0;
    for (p, wp) in w.iter().enumerate() {
        // Each term is symmetric in (h, k), so the sum is exactly symmetric.
        s += wp * geo.node(p).dot(h.kind(), &h.data()[p * m..p * m + m], &k.data()[p * m..p * m + m]);
    }
    Ok(s)
}

/// `sqrt(<h, h>)`.
pub fn norm(geo: &Geometry, h: &Field, weight: Option<&Field>) -> Result<f64> {
    Ok(inner(geo, h, h, weight)?.max(0.0).sqrt())
}

/// Pointwise `|h|_g` as a scalar field.
pub fn pointwise_norm(geo: &Geometry, h: &Field) -> Result<Field> {
    h.expect_atlas(geo.atlas())?;
    let m = h.kind().components();
    let data = (0..h.node_count())
        .map(|p| {
            let x = &h.data()[p * m..p * m + m];
            geo.node(p).dot(h.kind(), x, x).max(0.0).sqrt()
        })
        .collect();
    Field::new(h.atlas().clone(), FieldKind::Scalar, data)
}

/// Max of `|h|_g` over the nodes where the partition of unity is positive.
///
/// On the sphere the remaining nodes repeat points owned by the other chart
/// and carry its interpolation error, so they are left out.
pub fn max_norm(geo: &Geometry, h: &Field) -> Result<f64> {
    let pw = pointwise_norm(geo, h)?;
    let blend = geo.atlas().blend();
    Ok(pw.data().iter().zip(blend).filter(|(_, b)| **b > 0.0).fold(0.0, |m, (x, _)| m.max(x.abs())))
}
