use std::sync::Arc;

use crate::error::{Error, Result};

use super::atlas::{sym_index, ChartAtlas, FieldKind, JET};

/// Component array over the owned nodes of an atlas.
///
/// Layout is node-major, component-minor; nodes follow the atlas order
/// (chart-major, then row-major within the chart).
#[derive(Clone, Debug)]
pub struct Field {
    atlas: Arc<ChartAtlas>,
    kind: FieldKind,
    data: Vec<f64>,
}

impl Field {
    pub fn new(atlas: Arc<ChartAtlas>, kind: FieldKind, data: Vec<f64>) -> Result<Self> {
        let want = atlas.owned_count() * kind.components();
        if data.len() != want {
            return Err(Error::InvalidParameter(format!(
                "{} field needs {want} values, got {}",
                kind.name(),
                data.len()
            )));
        }
        Ok(Field { atlas, kind, data })
    }

    pub fn zeros(atlas: Arc<ChartAtlas>, kind: FieldKind) -> Self {
        let len = atlas.owned_count() * kind.components();
        Field { atlas, kind, data: vec![0.0; len] }
    }

    /// Samples `f(chart, coords)`, which returns the components of each node.
    pub fn from_fn<F: Fn(usize, [f64; 2]) -> [f64; 3]>(atlas: Arc<ChartAtlas>, kind: FieldKind, f: F) -> Self {
        let m = kind.components();
        let mut data = Vec::with_capacity(atlas.owned_count() * m);
        for p in 0..atlas.owned_count() {
            let v = f(atlas.owned_nodes()[p].chart, atlas.coord(p));
            data.extend_from_slice(&v[..m]);
        }
        Field { atlas, kind, data }
    }

    pub fn constant(atlas: Arc<ChartAtlas>, value: f64) -> Self {
        let len = atlas.owned_count();
        Field { atlas, kind: FieldKind::Scalar, data: vec![value; len] }
    }

    pub fn atlas(&self) -> &Arc<ChartAtlas> {
        &self.atlas
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn node_count(&self) -> usize {
        self.atlas.owned_count()
    }

    /// Full 2x2 matrix of a symmetric tensor at node `p`.
    pub fn tensor(&self, p: usize) -> [[f64; 2]; 2] {
        debug_assert_eq!(self.kind, FieldKind::Sym2);
        let d = &self.data[3 * p..3 * p + 3];
        [[d[0], d[1]], [d[1], d[2]]]
    }

    pub fn vector(&self, p: usize) -> [f64; 2] {
        [self.data[2 * p], self.data[2 * p + 1]]
    }

    pub fn value(&self, p: usize) -> f64 {
        self.data[p * self.kind.components()]
    }

    pub fn expect_kind(&self, kind: FieldKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::KindMismatch { expected: kind.name().into(), found: self.kind.name().into() });
        }
        Ok(())
    }

    pub fn expect_atlas(&self, atlas: &ChartAtlas) -> Result<()> {
        if !self.atlas.same_as(atlas) {
            return Err(Error::AtlasMismatch(format!(
                "{} field lives on a different atlas",
                self.kind.name()
            )));
        }
        Ok(())
    }

    fn expect_compatible(&self, other: &Field) -> Result<()> {
        other.expect_kind(self.kind)?;
        other.expect_atlas(&self.atlas)
    }

    pub fn padded(&self) -> Vec<f64> {
        self.atlas.pad(self.kind, &self.data)
    }

    /// Jets of every component at every owned node.
    pub fn jets(&self) -> Vec<[f64; JET]> {
        self.atlas.jets(self.kind, &self.padded())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { atlas: self.atlas.clone(), kind: self.kind, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn scaled(&self, s: f64) -> Field {
        self.map(|x| s * x)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Field) -> Result<Field> {
        self.expect_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect();
        Ok(Field { atlas: self.atlas.clone(), kind: self.kind, data })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(-1.0, other)
    }

    /// Pointwise product with a scalar field.
    pub fn times(&self, u: &Field) -> Result<Field> {
        u.expect_kind(FieldKind::Scalar)?;
        u.expect_atlas(&self.atlas)?;
        let m = self.kind.components();
        let data = self.data.iter().enumerate().map(|(k, x)| x * u.data[k / m]).collect();
        Ok(Field { atlas: self.atlas.clone(), kind: self.kind, data })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn with_data(&self, data: Vec<f64>) -> Result<Field> {
        Field::new(self.atlas.clone(), self.kind, data)
    }
}

/// A symmetric 2-tensor certified positive definite at every node.
#[derive(Clone, Debug)]
pub struct MetricField(Field);

impl MetricField {
    pub fn new(field: Field) -> Result<Self> {
        field.expect_kind(FieldKind::Sym2)?;
        for p in 0..field.node_count() {
            let [[a, b], [_, c]] = field.tensor(p);
            let tr = a + c;
            let det = a * c - b * b;
            let min_eig = 0.5 * (tr - ((a - c) * (a - c) + 4.0 * b * b).sqrt());
            if !(det > 0.0 && tr > 0.0) || !(min_eig > 0.0) {
                let r = field.atlas.owned_nodes()[p];
                return Err(Error::NotPositiveDefinite { chart: r.chart, node: p, min_eig });
            }
        }
        Ok(MetricField(field))
    }

    pub fn field(&self) -> &Field {
        &self.0
    }

    pub fn atlas(&self) -> &Arc<ChartAtlas> {
        self.0.atlas()
    }

    pub fn tensor(&self, p: usize) -> [[f64; 2]; 2] {
        self.0.tensor(p)
    }

    /// `self + s * h`, re-certified.
    pub fn perturbed(&self, s: f64, h: &Field) -> Result<MetricField> {
        MetricField::new(self.0.axpy(s, h)?)
    }

    pub fn scaled(&self, c: f64) -> Result<MetricField> {
        MetricField::new(self.0.scaled(c))
    }
}

/// Packs a full symmetric matrix as `(xx, xy, yy)`.
pub fn pack_sym(m: [[f64; 2]; 2]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for a in 0..2 {
        for b in a..2 {
            out[sym_index(a, b)] = if a == b { m[a][b] } else { 0.5 * (m[a][b] + m[b][a]) };
        }
    }
    out
}
