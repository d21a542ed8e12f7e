//! The twisted slice decomposition `h = L_X g + h1` with `delta_f h1 = 0`.
//!
//! `X` solves `(delta_f o alpha)(X) = delta_f h` by a direct sparse solve.
//! The operator has a near kernel: discrete Killing fields, and on uniform
//! periodic grids exact null modes of the central-difference stencils. The
//! near kernel is the cluster of smallest weighted singular values below
//! the widest gap. Exact null modes are removed by bordering the system.
//!
//! The solution `X_full` is used for `h1 = h - L_(X_full) g`, so
//! `delta_f h1` vanishes to solver accuracy. The reported `X` is its
//! minimum-norm representative, with the near-kernel part removed. On the
//! sphere the discrete Killing fields are not exactly Killing, so
//! `h - L_X g - h1` is of the size of their discretization error and is
//! reported as `reconstruction`.

use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::discrete_ops::assembly::{spmv, AssembledOperator};
use crate::discrete_ops::linalg::{smallest_singular, SparseLu};
use crate::discrete_ops::ops;
use crate::discrete_ops::quadrature::{inner, max_norm, norm};
use crate::discrete_ops::{Field, FieldKind, MassFactor};
use crate::error::{Error, Result};
use crate::soliton_core::SolitonPair;

/// Number of small singular values inspected for the near kernel.
const PROBE: usize = 16;
/// Consecutive singular-value ratio that separates the near kernel.
const NEAR_GAP: f64 = 100.0;
/// Weighted `|A v|`, relative to the largest singular value, below which
/// `v` is an exact null mode.
const EXACT_REL: f64 = 1e-11;

/// Number of leading values below the widest consecutive ratio, if that
/// ratio exceeds `min_ratio`.
pub fn widest_gap(values: &[f64], min_ratio: f64) -> usize {
    let mut best = (0, min_ratio);
    for k in 1..values.len() {
        let r = values[k] / values[k - 1].max(f64::MIN_POSITIVE);
        if r > best.1 {
            best = (k, r);
        }
    }
    best.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceDiagnostics {
    /// `max |delta_f h1| / max |h|`.
    pub divergence_residual: f64,
    /// `max |h - L_X g - h1| / max |h|`.
    pub reconstruction: f64,
    /// `|<L_X g, h1>_f| / (|L_X g|_f |h1|_f)`, zero when either part vanishes.
    pub orthogonality: f64,
    /// Number of deflated kernel directions of `delta_f o alpha`.
    pub deflated: usize,
    /// `max |X_full - X| / max |X_full|`, the share of the near kernel.
    pub kernel_share: f64,
}

/// The decomposition of one field.
#[derive(Clone, Debug)]
pub struct SliceSplit {
    pub input: Field,
    pub x: Field,
    pub h1: Field,
    pub diagnostics: SliceDiagnostics,
}

/// Factorized projector for one pair, reusable across fields.
pub struct SliceProjector {
    pair: SolitonPair,
    alpha: AssembledOperator,
    div_f: AssembledOperator,
    lu: SparseLu,
    n: usize,
    exact: usize,
    near: Vec<Vec<f64>>,
    mass_upper: CsMat<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SliceProjector {
    pub fn new(pair: &SolitonPair) -> Result<Self> {
        let geo = pair.geometry();
        let alpha = ops::lie_metric(geo);
        let div_f = ops::divergence(geo, Some(&pair.twist()));
        let a = div_f.compose(&alpha)?;
        let row = MassFactor::new(geo, &a.codomain);
        let col = MassFactor::new(geo, &a.domain);
        let probe = smallest_singular(&a.matrix, &row, &col, PROBE, 1e-6, 60, 17)?;
        // Recompute the singular values from the vectors: Ritz values of
        // exact null modes are only accurate to the regularization level.
        let row_up = row.upper();
        let sigma: Vec<f64> = probe.vectors.iter().map(|v| spmv(&row_up, &a.apply(v)).iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
        let mut order: Vec<usize> = (0..sigma.len()).collect();
        order.sort_by(|&i, &j| sigma[i].partial_cmp(&sigma[j]).unwrap());
        let sorted: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
        let near_dim = widest_gap(&sorted, NEAR_GAP);
        if near_dim == sorted.len() && near_dim > 0 {
            return Err(Error::Solver(format!("near kernel of delta_f o alpha exceeds {PROBE} probed directions")));
        }
        let near: Vec<Vec<f64>> = order[..near_dim].iter().map(|&i| probe.vectors[i].clone()).collect();
        let exact = sorted[..near_dim].iter().filter(|s| **s <= EXACT_REL * probe.scale).count();
        let mass_upper = col.upper();
        let n = a.cols();
        // [[A, M E], [(M E)^T, 0]] fixes X orthogonal to the exact null modes E.
        let mut tri = TriMat::new((n + exact, n + exact));
        for (v, (i, j)) in a.matrix.iter() {
            tri.add_triplet(i, j, *v);
        }
        for (k, e) in near[..exact].iter().enumerate() {
            let me = spmv(&mass_upper.transpose_view().to_csr(), &spmv(&mass_upper, e));
            for (i, x) in me.iter().enumerate() {
                if *x != 0.0 {
                    tri.add_triplet(i, n + k, *x);
                    tri.add_triplet(n + k, i, *x);
                }
            }
        }
        let lu = SparseLu::new(&tri.to_csc())?;
        Ok(SliceProjector { pair: pair.clone(), alpha, div_f, lu, n, exact, near, mass_upper })
    }

    /// Number of near-kernel directions removed from `X`.
    pub fn deflated(&self) -> usize {
        self.near.len()
    }

    /// Number of exact null modes among them.
    pub fn exact_null(&self) -> usize {
        self.exact
    }

    /// `(X_full, X)`: a solution of `delta_f L_X g = delta_f h` and its
    /// minimum-norm representative.
    pub fn solve_x(&self, h: &Field) -> Result<(Field, Field)> {
        h.expect_kind(FieldKind::Sym2)?;
        h.expect_atlas(self.pair.geometry().atlas())?;
        let mut rhs = self.div_f.apply(h.data());
        rhs.resize(self.n + self.exact, 0.0);
        let full = self.lu.solve(&rhs)[..self.n].to_vec();
        let mut x = full.clone();
        for v in &self.near {
            let c = dot(&spmv(&self.mass_upper, &x), &spmv(&self.mass_upper, v));
            x.iter_mut().zip(v).for_each(|(xi, vi)| *xi -= c * vi);
        }
        let atlas = h.atlas().clone();
        Ok((Field::new(atlas.clone(), FieldKind::Vector, full)?, Field::new(atlas, FieldKind::Vector, x)?))
    }

    pub fn project(&self, h: &Field) -> Result<SliceSplit> {
        let geo = self.pair.geometry();
        let (full, x) = self.solve_x(h)?;
        let h1 = h.sub(&self.alpha.apply_field(&full)?)?;
        let image = self.alpha.apply_field(&x)?;
        let scale = max_norm(geo, h)?.max(f64::MIN_POSITIVE);
        let div = self.div_f.apply_field(&h1)?;
        let recon = h.sub(&image)?.sub(&h1)?;
        let full_max = max_norm(geo, &full)?;
        let kernel_share = if full_max > 0.0 { max_norm(geo, &full.sub(&x)?)? / full_max } else { 0.0 };
        let (ni, nh) = (norm(geo, &image, Some(self.pair.f()))?, norm(geo, &h1, Some(self.pair.f()))?);
        let orthogonality = if ni * nh > 0.0 { inner(geo, &image, &h1, Some(self.pair.f()))?.abs() / (ni * nh) } else { 0.0 };
        Ok(SliceSplit {
            input: h.clone(),
            x,
            h1,
            diagnostics: SliceDiagnostics {
                divergence_residual: max_norm(geo, &div)? / scale,
                reconstruction: max_norm(geo, &recon)? / scale,
                orthogonality,
                deflated: self.deflated(),
                kernel_share,
            },
        })
    }

    /// `max |X(h1)| / max |h|`, which vanishes for an idempotent projection.
    pub fn idempotence(&self, split: &SliceSplit) -> Result<f64> {
        let geo = self.pair.geometry();
        let (_, x2) = self.solve_x(&split.h1)?;
        Ok(max_norm(geo, &x2)? / max_norm(geo, &split.input)?.max(f64::MIN_POSITIVE))
    }
}

/// Splits `h` into its image part `L_X g` and its slice part `h1`.
pub fn slice_project(pair: &SolitonPair, h: &Field) -> Result<SliceSplit> {
    SliceProjector::new(pair)?.project(h)
}
