//! Sparse factorizations, eigen solves and gap-certified kernels.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use super::assembly::{spmv, Space};
use super::geometry::Geometry;
use crate::error::{Error, Result};

/// Sparse LU factorization of a square matrix.
pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

fn to_faer(a: &CsMat<f64>) -> Result<SparseColMat<usize, f64>> {
    let mut t = Vec::with_capacity(a.nnz());
    for (v, (i, j)) in a.iter() {
        t.push(Triplet::new(i, j, *v));
    }
    SparseColMat::try_new_from_triplets(a.rows(), a.cols(), &t).map_err(|e| Error::Solver(format!("{e:?}")))
}

impl SparseLu {
    pub fn new(a: &CsMat<f64>) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::Solver(format!("LU needs a square matrix, got {}x{}", a.rows(), a.cols())));
        }
        let lu = to_faer(a)?.sp_lu().map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;
        Ok(SparseLu { lu, n: a.rows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_columns(&[b.to_vec()]).pop().unwrap()
    }

    pub fn solve_columns(&self, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let rhs = Mat::<f64>::from_fn(self.n, cols.len(), |i, j| cols[j][i]);
        let x = self.lu.solve(&rhs);
        (0..cols.len()).map(|j| (0..self.n).map(|i| x[(i, j)]).collect()).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += s * x);
}

/// Modified Gram-Schmidt, applied twice. Drops numerically dependent columns.
pub fn orthonormalize(cols: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut v in cols.drain(..) {
        let n0 = norm(&v);
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &v);
                axpy(&mut v, -c, q);
            }
        }
        let n1 = norm(&v);
        if n1 > 1e-12 * n0.max(f64::MIN_POSITIVE) {
            v.iter_mut().for_each(|x| *x /= n1);
            out.push(v);
        }
    }
    *cols = out;
}

fn random_columns(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..p).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect()
}

/// Symmetric eigen decomposition of a small dense matrix, descending.
pub(crate) fn small_sym_eigen(h: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = h.len();
    let m = Mat::<f64>::from_fn(p, p, |i, j| 0.5 * (h[i][j] + h[j][i]));
    let e = m.self_adjoint_eigen(faer::Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
    let s = e.S().column_vector();
    let u = e.U();
    let mut idx: Vec<usize> = (0..p).collect();
    // Descending magnitude: exact null directions of the inverted operator
    // can come out with either sign at the regularization level.
    idx.sort_by(|&a, &b| s[b].abs().partial_cmp(&s[a].abs()).unwrap());
    let vals = idx.iter().map(|&k| s[k]).collect();
    let vecs = idx.iter().map(|&k| (0..p).map(|i| u[(i, k)]).collect()).collect();
    Ok((vals, vecs))
}

fn combine(basis: &[Vec<f64>], coef: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (b, c) in basis.iter().zip(coef) {
        axpy(&mut out, *c, b);
    }
    out
}

/// Block factor of a quadrature-weighted Gram matrix.
///
/// Stores, per node and block, the lower Cholesky factor `L` of
/// `w_p G_p`, where `G_p` is the pointwise Gram matrix of the field kind.
#[derive(Clone, Debug)]
pub struct MassFactor {
    space: Space,
    /// Lower-triangular factors, one per (block, node).
    factors: Vec<[[f64; 3]; 3]>,
}

fn cholesky3(a: &[[f64; 3]; 3], m: usize) -> [[f64; 3]; 3] {
    let mut l = [[0.0; 3]; 3];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][i] = s.max(1e-300).sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    l
}

impl MassFactor {
    /// Uses the unblended cell volumes, so the norm counts overlap regions
    /// from both charts and stays positive definite on every owned value.
    pub fn new(geo: &Geometry, space: &Space) -> Self {
        let mut factors = Vec::with_capacity(space.blocks.len() * space.nodes);
        for kind in &space.blocks {
            for (p, w) in geo.mass_weights().iter().enumerate() {
                let mut g = geo.node(p).gram(*kind);
                g.iter_mut().for_each(|r| r.iter_mut().for_each(|x| *x *= w));
                factors.push(cholesky3(&g, kind.components()));
            }
        }
        MassFactor { space: space.clone(), factors }
    }

    /// Sparse `L^T` (so that `|L^T x|^2 = x^T M x`), or its inverse.
    fn matrix(&self, inverse: bool) -> CsMat<f64> {
        let n = self.space.len();
        let mut tri = TriMat::new((n, n));
        let mut at = 0;
        let mut fi = 0;
        for kind in &self.space.blocks {
            let m = kind.components();
            for _ in 0..self.space.nodes {
                let l = &self.factors[fi];
                let lt = transpose_tri(l, m);
                let block = if inverse { invert_upper(&lt, m) } else { lt };
                for a in 0..m {
                    for b in 0..m {
                        if block[a][b] != 0.0 {
                            tri.add_triplet(at + a, at + b, block[a][b]);
                        }
                    }
                }
                at += m;
                fi += 1;
            }
        }
        tri.to_csr()
    }

    pub fn upper(&self) -> CsMat<f64> {
        self.matrix(false)
    }

    pub fn upper_inverse(&self) -> CsMat<f64> {
        self.matrix(true)
    }

    /// `x^T M x`.
    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        let y = spmv(&self.upper(), x);
        dot(&y, &y)
    }
}

fn transpose_tri(l: &[[f64; 3]; 3], m: usize) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for i in 0..m {
        for j in 0..m {
            t[i][j] = l[j][i];
        }
    }
    t
}

fn invert_upper(u: &[[f64; 3]; 3], m: usize) -> [[f64; 3]; 3] {
    let mut inv = [[0.0; 3]; 3];
    for col in 0..m {
        for i in (0..m).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in i + 1..m {
                s -= u[i][k] * inv[k][col];
            }
            inv[i][col] = s / u[i][i];
        }
    }
    inv
}

/// Ratio of the smallest rejected to the largest kept singular value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    /// Largest kept singular value, or the noise floor when nothing is kept.
    pub kept_max: f64,
    pub rejected_min: f64,
}

impl GapCertificate {
    pub fn ratio(&self) -> f64 {
        if self.kept_max > 0.0 {
            self.rejected_min / self.kept_max
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug)]
pub struct KernelOptions {
    pub gap_ratio: f64,
    /// Number of smallest singular values to resolve.
    pub count: usize,
    /// Estimated size of discretization noise for an exact kernel, used to
    /// certify dimension zero.
    pub noise_floor: Option<f64>,
    /// Relative Ritz residual. The augmented solves bottom out near 1e-7;
    /// singular-value errors scale with its square.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { gap_ratio: 1e-3, count: 6, noise_floor: None, tol: 1e-6, max_iter: 300, seed: 11 }
    }
}

/// Smallest singular triplets of a weighted operator.
#[derive(Clone, Debug)]
pub struct SingularSpectrum {
    /// Ascending weighted singular values.
    pub values: Vec<f64>,
    /// Right singular vectors in original coordinates, unit mass norm.
    pub vectors: Vec<Vec<f64>>,
    /// Whether each pair met the residual tolerance.
    pub converged: Vec<bool>,
    /// Relative Ritz residuals of the inverse operator.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// Estimate of the largest weighted singular value.
    pub scale: f64,
}

/// Result of a kernel computation.
#[derive(Clone, Debug)]
pub struct NearKernel {
    pub dim: usize,
    pub basis: Vec<Vec<f64>>,
    pub certificate: GapCertificate,
    pub spectrum: SingularSpectrum,
}

/// `sigma_min` of `R B C` for block weights `R = L_row^T` and
/// `C = L_col^{-T}`, by subspace iteration on `(B~^T B~ + tau)^{-1}`.
pub fn smallest_singular(
    b: &CsMat<f64>,
    row: &MassFactor,
    col: &MassFactor,
    count: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SingularSpectrum> {
    let r = row.upper();
    let c = col.upper_inverse();
    let bt: CsMat<f64> = &(&r * b) * &c;
    let (m, n) = (bt.rows(), bt.cols());
    let btt: CsMat<f64> = bt.transpose_view().to_csr();
    // Largest singular value by a few power steps, for scaling.
    let mut v = random_columns(n, 1, seed ^ 0x5eed).pop().unwrap();
    let mut smax: f64 = 1.0;
    for _ in 0..30 {
        let w = spmv(&btt, &spmv(&bt, &v));
        let nw = norm(&w);
        if nw == 0.0 {
            break;
        }
        smax = (nw / norm(&v)).sqrt();
        v = w.iter().map(|x| x / nw).collect();
    }
    let s = smax;
    let tau = (1e-9 * s) * (1e-9 * s);
    // [[s I, -B~], [B~^T, (tau/s) I]] [r; y] = [0; s v]  gives  (B~^T B~ + tau) y = s^2 v / s.
    let mut tri = TriMat::new((m + n, m + n));
    for i in 0..m {
        tri.add_triplet(i, i, s);
    }
    for (val, (i, j)) in bt.iter() {
        tri.add_triplet(i, m + j, -*val);
        tri.add_triplet(m + j, i, *val);
    }
    for j in 0..n {
        tri.add_triplet(m + j, m + j, tau / s);
    }
    let lu = SparseLu::new(&tri.to_csc())?;
    let apply = |cols: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let rhs: Vec<Vec<f64>> = cols
            .iter()
            .map(|x| {
                let mut z = vec![0.0; m + n];
                z[m..].copy_from_slice(x);
                z
            })
            .collect();
        lu.solve_columns(&rhs).into_iter().map(|z| z[m..].to_vec()).collect()
    };
    let p = (count + 4).min(n);
    let mut q = random_columns(n, p, seed);
    orthonormalize(&mut q);
    let mut theta: Vec<f64> = Vec::new();
    let mut ritz: Vec<Vec<f64>> = Vec::new();
    let mut converged = vec![false; p];
    let mut residuals = vec![f64::INFINITY; p];
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let z = apply(&q);
        let h: Vec<Vec<f64>> = (0..q.len()).map(|i| (0..q.len()).map(|j| dot(&q[i], &z[j])).collect()).collect();
        let (vals, vecs) = small_sym_eigen(&h)?;
        ritz = vecs.iter().map(|w| combine(&q, w)).collect();
        let zw: Vec<Vec<f64>> = vecs.iter().map(|w| combine(&z, w)).collect();
        for k in 0..vals.len() {
            let mut res = zw[k].clone();
            axpy(&mut res, -vals[k], &ritz[k]);
            residuals[k] = norm(&res) / vals[k].abs().max(f64::MIN_POSITIVE);
            // Below the solve accuracy the residual stops improving while
            // the Ritz value is already fixed to working precision.
            let stalled = theta.get(k).is_some_and(|t| ((t - vals[k]) / vals[k]).abs() < 1e-9) && residuals[k] <= tol.sqrt();
            converged[k] = vals[k] > 0.0 && (residuals[k] <= tol || stalled);
        }
        theta = vals;
        if converged.iter().take(count.min(q.len())).all(|&c| c) {
            break;
        }
        q = zw;
        orthonormalize(&mut q);
        if q.len() < p {
            let mut extra = random_columns(n, p - q.len(), seed.wrapping_add(it as u64 + 1));
            q.append(&mut extra);
            orthonormalize(&mut q);
        }
    }
    let take = count.min(theta.len());
    let values = theta[..take].iter().map(|t| (s / t.abs() - tau).max(0.0).sqrt()).collect();
    let vectors = ritz[..take]
        .iter()
        .map(|x| {
            let y = spmv(&c, x);
            let nm = col.norm_sq(&y).sqrt();
            y.into_iter().map(|v| v / nm).collect()
        })
        .collect();
    Ok(SingularSpectrum { values, vectors, converged: converged[..take].to_vec(), residuals: residuals[..take].to_vec(), iterations, scale: s })
}

/// Decides the kernel dimension from an ascending list of singular values.
///
/// A dimension `k` qualifies when `sigma_(k-1) < gap_ratio * sigma_k`, with
/// the noise floor standing in for `sigma_(-1)`. The qualifying `k` with
/// the widest gap is returned.
pub fn decide_gap(values: &[f64], converged: &[bool], gap_ratio: f64, noise_floor: Option<f64>) -> Option<(usize, GapCertificate)> {
    let mut best: Option<(usize, GapCertificate)> = None;
    for k in 0..values.len() {
        if !converged[k] || (k > 0 && !converged[k - 1]) {
            continue;
        }
        let below = if k == 0 {
            match noise_floor {
                Some(f) => f,
                None => continue,
            }
        } else {
            values[k - 1]
        };
        if below < gap_ratio * values[k] {
            let cert = GapCertificate { kept_max: below, rejected_min: values[k] };
            if best.map(|(_, b)| cert.ratio() > b.ratio()).unwrap_or(true) {
                best = Some((k, cert));
            }
        }
    }
    best
}

/// Gap-certified numerical kernel of `b` for the given weights.
pub fn near_kernel(b: &CsMat<f64>, row: &MassFactor, col: &MassFactor, opts: &KernelOptions) -> Result<NearKernel> {
    let spectrum = smallest_singular(b, row, col, opts.count, opts.tol, opts.max_iter, opts.seed)?;
    match decide_gap(&spectrum.values, &spectrum.converged, opts.gap_ratio, opts.noise_floor) {
        Some((dim, certificate)) => Ok(NearKernel {
            dim,
            basis: spectrum.vectors[..dim].to_vec(),
            certificate,
            spectrum,
        }),
        None => Err(Error::Undecidable(format!(
            "no singular-value gap of ratio {:e}; smallest values {:?} (noise floor {:?})",
            opts.gap_ratio, spectrum.values, opts.noise_floor
        ))),
    }
}

/// One eigenpair of a real non-symmetric operator.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub imag: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// Eigenvalues nearest `shift` by shift-invert subspace iteration,
/// returned in order of increasing magnitude.
pub fn eigensolve(a: &CsMat<f64>, count: usize, shift: f64, tol: f64, max_iter: usize, seed: u64) -> Result<Vec<EigenPair>> {
    let n = a.rows();
    let mut shifted = a.to_csr();
    let eye: CsMat<f64> = CsMat::eye(n);
    shifted = &shifted - &eye.map(|v| v * shift);
    let lu = SparseLu::new(&shifted.to_csc())?;
    let p = (count + 4).min(n);
    let mut q = random_columns(n, p, seed);
    orthonormalize(&mut q);
    let mut pairs = Vec::new();
    for it in 0..max_iter {
        let aq: Vec<Vec<f64>> = q.iter().map(|x| spmv(a, x)).collect();
        let k = q.len();
        let h = Mat::<f64>::from_fn(k, k, |i, j| dot(&q[i], &aq[j]));
        let ev = h.eigen().map_err(|e| Error::Solver(format!("{e:?}")))?;
        let s = ev.S().column_vector();
        let u = ev.U();
        let mut cand: Vec<EigenPair> = (0..k)
            .map(|j| {
                let w: Vec<f64> = (0..k).map(|i| u[(i, j)].re).collect();
                let mut x = combine(&q, &w);
                let nx = norm(&x);
                x.iter_mut().for_each(|v| *v /= nx);
                let mut r = spmv(a, &x);
                axpy(&mut r, -s[j].re, &x);
                EigenPair { value: s[j].re, imag: s[j].im, vector: x, residual: norm(&r) }
            })
            .collect();
        cand.sort_by(|x, y| (x.value - shift).abs().partial_cmp(&(y.value - shift).abs()).unwrap());
        cand.truncate(count);
        let done = cand.iter().all(|c| c.residual <= tol * (1.0 + c.value.abs()));
        pairs = cand;
        if done || it + 1 == max_iter {
            break;
        }
        q = lu.solve_columns(&q);
        orthonormalize(&mut q);
    }
    pairs.sort_by(|x, y| x.value.abs().partial_cmp(&y.value.abs()).unwrap());
    Ok(pairs)
}

/// Regularized least squares `min |A x - b|^2 + tau |x|^2` with
/// `tau = (rel * |A|)^2`; for consistent systems this tends to the
/// minimum-norm solution.
pub struct LeastSquares {
    lu: SparseLu,
    a: CsMat<f64>,
    at: CsMat<f64>,
    scale: f64,
    tau: f64,
}

impl LeastSquares {
    pub fn new(a: &CsMat<f64>, rel: f64) -> Result<Self> {
        let a = a.to_csr();
        let at: CsMat<f64> = a.transpose_view().to_csr();
        let (m, n) = (a.rows(), a.cols());
        let mut v = random_columns(n, 1, 3).pop().unwrap();
        let mut smax: f64 = 1.0;
        for _ in 0..30 {
            let w = spmv(&at, &spmv(&a, &v));
            let nw = norm(&w);
            if nw == 0.0 {
                break;
            }
            smax = (nw / norm(&v)).sqrt();
            v = w.iter().map(|x| x / nw).collect();
        }
        let s = smax;
        let tau = (rel * s).powi(2);
        // [[s I, A], [A^T, -(tau/s) I]] [r; x] = [b; 0]
        let mut tri = TriMat::new((m + n, m + n));
        for i in 0..m {
            tri.add_triplet(i, i, s);
        }
        for (val, (i, j)) in a.iter() {
            tri.add_triplet(i, m + j, *val);
            tri.add_triplet(m + j, i, *val);
        }
        for j in 0..n {
            tri.add_triplet(m + j, m + j, -tau / s);
        }
        Ok(LeastSquares { lu: SparseLu::new(&tri.to_csc())?, a, at, scale: s, tau })
    }

    fn raw(&self, b: &[f64], c: &[f64]) -> Vec<f64> {
        let m = self.a.rows();
        let mut z = b.to_vec();
        z.extend_from_slice(c);
        let _ = self.scale;
        self.lu.solve(&z)[m..].to_vec()
    }

    /// Solves with two steps of iterative refinement on the normal equations.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.raw(b, &vec![0.0; self.a.cols()]);
        for _ in 0..2 {
            // Residual of (A^T A + tau) x = A^T b, fed back through the second block.
            let r = {
                let ax = spmv(&self.a, &x);
                let mut rb: Vec<f64> = b.iter().zip(&ax).map(|(b, y)| b - y).collect();
                let atr = spmv(&self.at, &rb);
                rb.clear();
                atr.iter().zip(&x).map(|(g, x)| g - self.tau * x).collect::<Vec<f64>>()
            };
            let dx = self.raw(&vec![0.0; self.a.rows()], &r.iter().map(|v| -v).collect::<Vec<_>>());
            axpy(&mut x, 1.0, &dx);
        }
        x
    }
}
