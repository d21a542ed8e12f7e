//! The family `h = dd f + f g / 2`, `-Delta f = f`, on the Killing-normalized
//! sphere `S^2(sqrt 2)`.
//!
//! On this sphere every first harmonic satisfies `dd f = -f g / 2`, so the
//! family vanishes identically; the residuals below then measure how well
//! the discrete operators reproduce that. The ratio `|h| / |dd f|` is
//! reported to make the degeneracy visible.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::discrete_ops::assembly::identity;
use crate::discrete_ops::ops;
use crate::discrete_ops::linalg::small_sym_eigen;
use crate::discrete_ops::quadrature::{inner, max_norm, norm};
use crate::discrete_ops::{Field, FieldKind, Geometry};
use crate::error::Result;
use crate::soliton_core::{DeformationPair, GridModel};

use super::{coarse_resolution, decide_dimension, spectrum_of, KernelBasis, KernelSettings, KernelSpace};

/// Residual fields of one family element generated by `f`, with `h`.
fn residual_fields(geo: &Geometry, f: &Field) -> Result<(Field, Field, Vec<(&'static str, Field)>)> {
    let hess = ops::hessian(geo).apply_field(f)?;
    let g = geo.metric().field();
    let h = hess.add(&g.times(f)?.scaled(0.5))?;
    let df = ops::differential(geo).apply_field(f)?;
    let div = ops::divergence(geo, None);
    let lich = |k: &Field| -> Result<Field> {
        ops::sym2_laplacian(geo, None).apply_field(k)?.add(&ops::curvature_action(geo).apply_field(k)?.scaled(2.0))
    };
    let fields = vec![
        ("eigen_equation", ops::laplacian(geo, None).apply_field(f)?.add(f)?),
        ("divergence", div.apply_field(&h)?),
        ("lichnerowicz", lich(&h)?),
        ("hessian_divergence", div.apply_field(&hess)?.axpy(0.5, &df)?),
        ("hessian_lichnerowicz", lich(&hess)?),
    ];
    Ok((h, hess, fields))
}

/// Residual table of one family element generated by `f`.
pub fn family_residuals(geo: &Geometry, f: &Field) -> Result<(Field, BTreeMap<String, f64>)> {
    let (h, hess, fields) = residual_fields(geo, f)?;
    let mut table = BTreeMap::new();
    for (name, r) in &fields {
        table.insert(name.to_string(), max_norm(geo, r)?);
    }
    table.insert("h_over_hessian".into(), max_norm(geo, &h)? / max_norm(geo, &hess)?.max(f64::MIN_POSITIVE));
    Ok((h, table))
}

/// Per equation, the largest `L2` residual over unit-norm generators in
/// the span of `generators`. Unlike per-element norms this does not depend
/// on which basis of the span the eigensolver returned.
pub fn span_residuals(geo: &Geometry, generators: &[Field]) -> Result<BTreeMap<String, f64>> {
    // Orthonormalize in L2; residuals are linear in the generator.
    let mut basis: Vec<Field> = Vec::with_capacity(generators.len());
    for f in generators {
        let mut v = f.clone();
        for b in &basis {
            v = v.axpy(-inner(geo, &v, b, None)?, b)?;
        }
        let n = norm(geo, &v, None)?;
        if n > 1e-12 * norm(geo, f, None)? {
            basis.push(v.scaled(1.0 / n));
        }
    }
    let per: Vec<Vec<(&str, Field)>> = basis.iter().map(|f| residual_fields(geo, f).map(|x| x.2)).collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    let Some(first) = per.first() else { return Ok(out) };
    for (slot, (name, _)) in first.iter().enumerate() {
        let gram: Vec<Vec<f64>> = (0..per.len())
            .map(|i| (0..per.len()).map(|j| inner(geo, &per[i][slot].1, &per[j][slot].1, None)).collect())
            .collect::<Result<_>>()?;
        let top = small_sym_eigen(&gram)?.0.first().copied().unwrap_or(0.0);
        out.insert(name.to_string(), top.max(0.0).sqrt());
    }
    Ok(out)
}

/// The family at `resolution`, with `F = ker(Delta + 1)` gap-certified
/// against half resolution.
pub fn cp_family_with(resolution: usize, settings: &KernelSettings) -> Result<KernelBasis> {
    let model = GridModel::killing_sphere();
    let res_c = coarse_resolution(&model, resolution)?;
    let geometry = |res: usize| -> Result<Arc<Geometry>> { Ok(Arc::new(Geometry::new(model.metric(res)?))) };
    let operator = |geo: &Geometry| ops::laplacian(geo, None).add(&identity(geo.atlas(), FieldKind::Scalar));
    let (geo, geo_c) = (geometry(resolution)?, geometry(res_c)?);
    let fine = spectrum_of(&operator(&geo)?, &geo, &settings.kernel)?;
    let coarse = spectrum_of(&operator(&geo_c)?, &geo_c, &settings.kernel)?;
    let decision = decide_dimension(&fine, resolution, &coarse, res_c, settings);
    let dim = decision.dimension.unwrap_or(0);
    let mut generators = Vec::with_capacity(dim);
    let mut elements = Vec::with_capacity(dim);
    let mut residual_norms = Vec::with_capacity(dim);
    for v in &fine.vectors[..dim] {
        let f = Field::new(geo.atlas().clone(), FieldKind::Scalar, v.clone())?;
        let f = f.scaled(1.0 / norm(&geo, &f, None)?);
        let (h, table) = family_residuals(&geo, &f)?;
        let a = ops::trace(&geo).apply_field(&h)?.scaled(0.5);
        elements.push(DeformationPair::new(h, a)?);
        residual_norms.push(table);
        generators.push(f);
    }
    Ok(KernelBasis {
        space: KernelSpace::CpFamily,
        model: model.label(),
        resolution,
        coarse_resolution: res_c,
        decision,
        singular_values: fine.values,
        coarse_singular_values: coarse.values,
        residual_norms,
        base: None,
        elements,
        generators,
    })
}

pub fn cp_family(resolution: usize) -> Result<KernelBasis> {
    cp_family_with(resolution, &KernelSettings::default())
}
