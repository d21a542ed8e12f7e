//! Sparse assembly of local differential operators.
//!
//! A local operator gives, at each owned node, the coefficient of every
//! input jet slot in every output component. Assembly turns this into
//! `C * E`, where `E` extends owned data to ghost nodes and `C` applies the
//! stencils.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use super::atlas::{stencil, ChartAtlas, FieldKind, JET};
use super::field::Field;
use crate::error::{Error, Result};

/// Coefficients of one node: `coef[(out * m_in + inp) * JET + slot]`.
#[derive(Clone, Debug)]
pub struct LocalCoefs {
    pub m_in: usize,
    pub m_out: usize,
    coef: Vec<f64>,
}

impl LocalCoefs {
    pub fn new(m_in: usize, m_out: usize) -> Self {
        LocalCoefs { m_in, m_out, coef: vec![0.0; m_in * m_out * JET] }
    }

    #[inline]
    pub fn add(&mut self, out: usize, inp: usize, slot: usize, v: f64) {
        self.coef[(out * self.m_in + inp) * JET + slot] += v;
    }

    #[inline]
    pub fn get(&self, out: usize, inp: usize, slot: usize) -> f64 {
        self.coef[(out * self.m_in + inp) * JET + slot]
    }

    fn clear(&mut self) {
        self.coef.iter_mut().for_each(|c| *c = 0.0);
    }
}

/// Assembles a local operator between single field kinds.
pub fn assemble_local<F>(atlas: &ChartAtlas, input: FieldKind, output: FieldKind, build: F) -> CsMat<f64>
where
    F: Fn(usize, &mut LocalCoefs) + Sync,
{
    let (m_in, m_out) = (input.components(), output.components());
    let n = atlas.owned_count();
    let stencils: Vec<Vec<Vec<(isize, isize, f64)>>> = (0..atlas.charts().len())
        .map(|c| (0..JET).map(|s| stencil(s, atlas.spacing(c))).collect())
        .collect();
    let chunk = 256;
    let parts: Vec<Vec<(usize, usize, f64)>> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|ci| {
            let mut local = LocalCoefs::new(m_in, m_out);
            let mut trip = Vec::new();
            for p in ci * chunk..((ci + 1) * chunk).min(n) {
                local.clear();
                build(p, &mut local);
                let st = &stencils[atlas.owned_nodes()[p].chart];
                for a in 0..m_out {
                    for b in 0..m_in {
                        for (slot, pts) in st.iter().enumerate() {
                            let c = local.get(a, b, slot);
                            if c == 0.0 {
                                continue;
                            }
                            for &(di, dj, w) in pts {
                                trip.push((p * m_out + a, atlas.neighbor(p, di, dj) * m_in + b, c * w));
                            }
                        }
                    }
                }
            }
            trip
        })
        .collect();
    let mut tri = TriMat::new((n * m_out, atlas.padded_count() * m_in));
    for part in parts {
        for (r, c, v) in part {
            tri.add_triplet(r, c, v);
        }
    }
    let c: CsMat<f64> = tri.to_csr();
    match atlas.extension(input) {
        Some(e) => &c * &e,
        None => c,
    }
}

/// Which inner product an operator is symmetric for, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    None,
    /// Self-adjoint for `<h, k>_g`.
    Plain,
    /// Self-adjoint for `<h, k>_(g, f)`.
    Twisted,
}

/// Domain or codomain: a list of field blocks on one atlas.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Space {
    pub blocks: Vec<FieldKind>,
    pub nodes: usize,
    pub atlas_hash: String,
}

impl Space {
    pub fn single(atlas: &ChartAtlas, kind: FieldKind) -> Self {
        Self::blocks(atlas, vec![kind])
    }

    pub fn blocks(atlas: &ChartAtlas, blocks: Vec<FieldKind>) -> Self {
        Space { blocks, nodes: atlas.owned_count(), atlas_hash: hex(&atlas.descriptor_hash()) }
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|k| k.components() * self.nodes).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Start offset of each block.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut at = 0;
        for k in &self.blocks {
            out.push(at);
            at += k.components() * self.nodes;
        }
        out
    }

    pub fn describe(&self) -> String {
        self.blocks.iter().map(|k| k.name()).collect::<Vec<_>>().join("+")
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Sparse linear map between discretized field spaces.
#[derive(Clone, Debug)]
pub struct AssembledOperator {
    pub matrix: CsMat<f64>,
    pub domain: Space,
    pub codomain: Space,
    pub symmetry: Symmetry,
    pub label: String,
}

impl AssembledOperator {
    pub fn new(matrix: CsMat<f64>, domain: Space, codomain: Space, label: impl Into<String>) -> Self {
        assert_eq!(matrix.rows(), codomain.len(), "codomain size");
        assert_eq!(matrix.cols(), domain.len(), "domain size");
        AssembledOperator { matrix, domain, codomain, symmetry: Symmetry::None, label: label.into() }
    }

    pub fn local<F>(atlas: &ChartAtlas, input: FieldKind, output: FieldKind, label: &str, build: F) -> Self
    where
        F: Fn(usize, &mut LocalCoefs) + Sync,
    {
        let m = assemble_local(atlas, input, output, build);
        Self::new(m, Space::single(atlas, input), Space::single(atlas, output), label)
    }

    pub fn with_symmetry(mut self, s: Symmetry) -> Self {
        self.symmetry = s;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        spmv(&self.matrix, x)
    }

    /// Applies to a single-block field and wraps the result.
    pub fn apply_field(&self, x: &Field) -> Result<Field> {
        if self.domain.blocks != [x.kind()] || self.codomain.blocks.len() != 1 {
            return Err(Error::KindMismatch { expected: self.domain.describe(), found: x.kind().name().into() });
        }
        if self.domain.atlas_hash != hex(&x.atlas().descriptor_hash()) {
            return Err(Error::AtlasMismatch(format!("operator {} applied to a field on another atlas", self.label)));
        }
        Field::new(x.atlas().clone(), self.codomain.blocks[0], self.apply(x.data()))
    }

    /// `self o other`.
    pub fn compose(&self, other: &AssembledOperator) -> Result<AssembledOperator> {
        if other.codomain != self.domain {
            return Err(Error::KindMismatch { expected: self.domain.describe(), found: other.codomain.describe() });
        }
        Ok(AssembledOperator::new(
            &self.matrix * &other.matrix,
            other.domain.clone(),
            self.codomain.clone(),
            format!("({})o({})", self.label, other.label),
        ))
    }

    pub fn lin_comb(&self, a: f64, other: &AssembledOperator, b: f64) -> Result<AssembledOperator> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::KindMismatch {
                expected: format!("{} -> {}", self.domain.describe(), self.codomain.describe()),
                found: format!("{} -> {}", other.domain.describe(), other.codomain.describe()),
            });
        }
        let m = &self.matrix.map(|v| a * v) + &other.matrix.map(|v| b * v);
        Ok(AssembledOperator::new(m, self.domain.clone(), self.codomain.clone(), format!("{a}*{}+{b}*{}", self.label, other.label)))
    }

    pub fn add(&self, other: &AssembledOperator) -> Result<AssembledOperator> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &AssembledOperator) -> Result<AssembledOperator> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn scaled(&self, s: f64) -> AssembledOperator {
        AssembledOperator {
            matrix: self.matrix.map(|v| s * v),
            label: format!("{s}*{}", self.label),
            ..self.clone()
        }
    }

    /// Block operator from a grid of optional blocks. Every row needs at
    /// least one block to fix its codomain and every column one for its domain.
    pub fn block(grid: &[Vec<Option<&AssembledOperator>>], label: &str) -> Result<AssembledOperator> {
        let rows = grid.len();
        let cols = grid.first().map(|r| r.len()).unwrap_or(0);
        let mut row_space: Vec<Option<Space>> = vec![None; rows];
        let mut col_space: Vec<Option<Space>> = vec![None; cols];
        for (i, r) in grid.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::InvalidParameter("ragged block grid".into()));
            }
            for (j, b) in r.iter().enumerate() {
                if let Some(op) = b {
                    for (slot, space) in [(&mut row_space[i], &op.codomain), (&mut col_space[j], &op.domain)] {
                        match slot {
                            Some(s) if s != space => {
                                return Err(Error::KindMismatch { expected: s.describe(), found: space.describe() })
                            }
                            _ => *slot = Some(space.clone()),
                        }
                    }
                }
            }
        }
        let row_space: Vec<Space> = row_space
            .into_iter()
            .map(|s| s.ok_or_else(|| Error::InvalidParameter("empty block row".into())))
            .collect::<Result<_>>()?;
        let col_space: Vec<Space> = col_space
            .into_iter()
            .map(|s| s.ok_or_else(|| Error::InvalidParameter("empty block column".into())))
            .collect::<Result<_>>()?;
        let views: Vec<Vec<Option<sprs::CsMatView<f64>>>> =
            grid.iter().map(|r| r.iter().map(|b| b.map(|op| op.matrix.view())).collect()).collect();
        let m: CsMat<f64> = sprs::bmat(&views);
        let join = |spaces: &[Space]| Space {
            blocks: spaces.iter().flat_map(|s| s.blocks.clone()).collect(),
            nodes: spaces[0].nodes,
            atlas_hash: spaces[0].atlas_hash.clone(),
        };
        Ok(AssembledOperator::new(m.to_csr(), join(&col_space), join(&row_space), label))
    }

    pub fn transpose(&self) -> AssembledOperator {
        AssembledOperator {
            matrix: self.matrix.transpose_view().to_csr(),
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            symmetry: self.symmetry,
            label: format!("({})^T", self.label),
        }
    }
}

/// `y = A x` for a CSR matrix.
pub fn spmv(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.cols(), x.len(), "spmv dimension");
    let a = if a.is_csr() { std::borrow::Cow::Borrowed(a) } else { std::borrow::Cow::Owned(a.to_csr()) };
    a.outer_iterator()
        .map(|row| row.iter().map(|(j, v)| v * x[j]).sum())
        .collect()
}

/// Identity on a field kind.
pub fn identity(atlas: &ChartAtlas, kind: FieldKind) -> AssembledOperator {
    let n = atlas.owned_count() * kind.components();
    AssembledOperator::new(CsMat::eye(n), Space::single(atlas, kind), Space::single(atlas, kind), "id")
}

/// Diagonal matrix.
pub fn diag(d: &[f64]) -> CsMat<f64> {
    let n = d.len();
    CsMat::new((n, n), (0..=n).collect(), (0..n).collect(), d.to_vec())
}
