//! Structured chart atlases in two dimensions.
//!
//! Two atlases are supported. The periodic torus is a single chart whose
//! nodes are all owned. The sphere uses two stereographic charts
//! `u = (x, y)/(1 + z)` and `v = (x, y)/(1 - z)`, related by `v = u/|u|^2`.
//! Each sphere chart is a square grid whose outer ring of nodes are ghosts,
//! filled by bicubic interpolation from the owned nodes of the other chart
//! followed by the tensor transformation law. Stencils are 3x3, so every
//! owned node only touches owned or ghost nodes of its own chart.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};

/// Space dimension of every grid atlas.
pub const DIM: usize = 2;

pub const MIN_RESOLUTION: usize = 8;

/// Stereographic half width used by [`ChartAtlas::sphere`].
pub const SPHERE_HALF_WIDTH: f64 = 1.5;

/// Blend zone `|z| < BLEND_Z` of the sphere partition of unity.
pub const BLEND_Z: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AtlasKind {
    PeriodicTorus { periods: [f64; 2] },
    StereographicSphere { half_width: f64 },
}

/// Everything needed to rebuild an atlas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasDescriptor {
    pub kind: AtlasKind,
    pub resolution: usize,
}

/// A coordinate box with a uniform node lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub nodes: [usize; 2],
    pub periodic: [bool; 2],
}

impl Chart {
    pub fn spacing(&self) -> [f64; 2] {
        let mut h = [0.0; 2];
        for a in 0..2 {
            let cells = if self.periodic[a] { self.nodes[a] } else { self.nodes[a] - 1 };
            h[a] = (self.upper[a] - self.lower[a]) / cells as f64;
        }
        h
    }

    pub fn coord(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.spacing();
        [self.lower[0] + i as f64 * h[0], self.lower[1] + j as f64 * h[1]]
    }

    pub fn node_count(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }
}

/// Owned grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeRef {
    pub chart: usize,
    pub i: usize,
    pub j: usize,
}

/// How a ghost node is reconstructed from the other chart.
#[derive(Clone, Debug)]
struct GhostLink {
    padded: usize,
    sources: Vec<(usize, f64)>,
    /// `d(other)/d(this)` at the ghost point: `jac[a][i] = dv^a/du^i`.
    jac: [[f64; 2]; 2],
}

/// Field component kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Scalar,
    /// Contravariant components `X^i`.
    Vector,
    /// Covariant components `w_i`.
    Covector,
    /// Symmetric 2-tensor, components `(xx, xy, yy)`.
    Sym2,
}

impl FieldKind {
    pub fn components(self) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector | FieldKind::Covector => 2,
            FieldKind::Sym2 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Scalar => "scalar",
            FieldKind::Vector => "vector",
            FieldKind::Covector => "covector",
            FieldKind::Sym2 => "sym2",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            FieldKind::Scalar => 0,
            FieldKind::Vector => 1,
            FieldKind::Covector => 2,
            FieldKind::Sym2 => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => FieldKind::Scalar,
            1 => FieldKind::Vector,
            2 => FieldKind::Covector,
            3 => FieldKind::Sym2,
            _ => return None,
        })
    }
}

/// Index of the `(a, b)` entry of a symmetric 2-tensor.
#[inline]
pub fn sym_index(a: usize, b: usize) -> usize {
    a + b
}

/// Jet slot of `d_a` (first derivative).
#[inline]
pub fn d1_slot(a: usize) -> usize {
    1 + a
}

/// Jet slot of `d_a d_b`.
#[inline]
pub fn d2_slot(a: usize, b: usize) -> usize {
    3 + a + b
}

/// Number of jet slots: value, `d_x`, `d_y`, `d_xx`, `d_xy`, `d_yy`.
pub const JET: usize = 6;

/// Structured atlas with owned/ghost bookkeeping.
#[derive(Debug)]
pub struct ChartAtlas {
    kind: AtlasKind,
    resolution: usize,
    charts: Vec<Chart>,
    padded_offset: Vec<usize>,
    padded_total: usize,
    owned_of_padded: Vec<Option<usize>>,
    owned_nodes: Vec<NodeRef>,
    ghosts: Vec<GhostLink>,
    blend: Vec<f64>,
    descriptor_hash: [u8; 32],
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, `S(t) + S(1 - t) = 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Unit-sphere point of stereographic chart coordinates.
pub fn stereo_embed(chart: usize, u: [f64; 2]) -> [f64; 3] {
    let r2 = u[0] * u[0] + u[1] * u[1];
    let d = 1.0 + r2;
    let z = (1.0 - r2) / d;
    [2.0 * u[0] / d, 2.0 * u[1] / d, if chart == 0 { z } else { -z }]
}

/// `dX^alpha/du^i` of [`stereo_embed`].
pub fn stereo_embed_jacobian(chart: usize, u: [f64; 2]) -> [[f64; 2]; 3] {
    let r2 = u[0] * u[0] + u[1] * u[1];
    let d = 1.0 + r2;
    let d2 = d * d;
    let mut jac = [[0.0; 2]; 3];
    for i in 0..2 {
        for a in 0..2 {
            let delta = if a == i { 1.0 } else { 0.0 };
            jac[a][i] = 2.0 * delta / d - 4.0 * u[a] * u[i] / d2;
        }
        let dz = -4.0 * u[i] / d2;
        jac[2][i] = if chart == 0 { dz } else { -dz };
    }
    jac
}

/// `dv/du` for the inversion `v = u/|u|^2`.
pub fn inversion_jacobian(u: [f64; 2]) -> [[f64; 2]; 2] {
    let r2 = u[0] * u[0] + u[1] * u[1];
    let r4 = r2 * r2;
    let mut j = [[0.0; 2]; 2];
    for a in 0..2 {
        for i in 0..2 {
            let delta = if a == i { 1.0 } else { 0.0 };
            j[a][i] = (delta * r2 - 2.0 * u[a] * u[i]) / r4;
        }
    }
    j
}

fn lagrange4(t: f64) -> [f64; 4] {
    // Nodes at 0, 1, 2, 3.
    let mut w = [0.0; 4];
    for (k, wk) in w.iter_mut().enumerate() {
        let mut p = 1.0;
        for m in 0..4 {
            if m != k {
                p *= (t - m as f64) / (k as f64 - m as f64);
            }
        }
        *wk = p;
    }
    w
}

impl ChartAtlas {
    /// Single periodic chart `[0, P1) x [0, P2)` with `resolution` nodes per axis.
    pub fn torus(periods: [f64; 2], resolution: usize) -> Result<Self> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::InvalidParameter(format!("resolution {resolution} below {MIN_RESOLUTION}")));
        }
        if periods.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::InvalidParameter("torus periods must be positive".into()));
        }
        let chart = Chart { lower: [0.0, 0.0], upper: periods, nodes: [resolution; 2], periodic: [true, true] };
        let count = chart.node_count();
        let owned_nodes = (0..count).map(|p| NodeRef { chart: 0, i: p / resolution, j: p % resolution }).collect();
        Ok(Self::finish(ChartAtlas {
            kind: AtlasKind::PeriodicTorus { periods },
            resolution,
            charts: vec![chart],
            padded_offset: vec![0],
            padded_total: count,
            owned_of_padded: (0..count).map(Some).collect(),
            owned_nodes,
            ghosts: Vec::new(),
            blend: vec![1.0; count],
            descriptor_hash: [0; 32],
        }))
    }

    /// Flat torus with both periods `2*pi`.
    pub fn standard_torus(resolution: usize) -> Result<Self> {
        Self::torus([2.0 * PI; 2], resolution)
    }

    /// Two-chart stereographic atlas of `S^2` with `resolution` nodes per
    /// axis on each chart (ghost ring included).
    pub fn sphere(resolution: usize) -> Result<Self> {
        Self::sphere_with_width(resolution, SPHERE_HALF_WIDTH)
    }

    pub fn sphere_with_width(resolution: usize, half_width: f64) -> Result<Self> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::InvalidParameter(format!("resolution {resolution} below {MIN_RESOLUTION}")));
        }
        let n = resolution;
        let chart = Chart {
            lower: [-half_width; 2],
            upper: [half_width; 2],
            nodes: [n, n],
            periodic: [false, false],
        };
        let charts = vec![chart.clone(), chart];
        let per = n * n;
        let mut owned_of_padded = vec![None; 2 * per];
        let mut owned_nodes = Vec::new();
        for c in 0..2 {
            for i in 1..n - 1 {
                for j in 1..n - 1 {
                    owned_of_padded[c * per + i * n + j] = Some(owned_nodes.len());
                    owned_nodes.push(NodeRef { chart: c, i, j });
                }
            }
        }
        let mut atlas = ChartAtlas {
            kind: AtlasKind::StereographicSphere { half_width },
            resolution,
            charts,
            padded_offset: vec![0, per],
            padded_total: 2 * per,
            owned_of_padded,
            owned_nodes,
            ghosts: Vec::new(),
            blend: Vec::new(),
            descriptor_hash: [0; 32],
        };
        let mut ghosts = Vec::new();
        for c in 0..2 {
            for i in 0..n {
                for j in 0..n {
                    if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                        ghosts.push(atlas.ghost_link(c, i, j)?);
                    }
                }
            }
        }
        atlas.ghosts = ghosts;
        let mut blend = Vec::with_capacity(atlas.owned_nodes.len());
        for p in &atlas.owned_nodes {
            let u = atlas.charts[p.chart].coord(p.i, p.j);
            let z = stereo_embed(p.chart, u)[2];
            let north = smooth_step((z + BLEND_Z) / (2.0 * BLEND_Z));
            blend.push(if p.chart == 0 { north } else { 1.0 - north });
        }
        // Any node carrying weight must be interior to its chart.
        let edge = half_width - chart_spacing(&atlas.charts[0])[0];
        let r2 = edge * edge;
        let z_edge = (1.0 - r2) / (1.0 + r2);
        if z_edge > -BLEND_Z {
            return Err(Error::InvalidParameter(format!(
                "half width {half_width} too small for the blend zone at resolution {resolution}"
            )));
        }
        atlas.blend = blend;
        Ok(Self::finish(atlas))
    }

    fn finish(mut self) -> Self {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.kind).expect("serializable"));
        h.update((self.resolution as u64).to_le_bytes());
        self.descriptor_hash = h.finalize().into();
        self
    }

    fn ghost_link(&self, c: usize, i: usize, j: usize) -> Result<GhostLink> {
        let other = 1 - c;
        let u = self.charts[c].coord(i, j);
        let r2 = u[0] * u[0] + u[1] * u[1];
        let v = [u[0] / r2, u[1] / r2];
        let ch = &self.charts[other];
        let h = ch.spacing();
        let n = ch.nodes[0];
        let mut start = [0usize; 2];
        let mut weights = [[0.0; 4]; 2];
        for a in 0..2 {
            let t = (v[a] - ch.lower[a]) / h[a];
            let base = t.floor() as isize - 1;
            if base < 1 || base + 3 > n as isize - 2 {
                return Err(Error::InvalidParameter(format!(
                    "ghost node ({i},{j}) of chart {c} interpolates outside owned nodes; use a larger resolution or width"
                )));
            }
            start[a] = base as usize;
            weights[a] = lagrange4(t - base as f64);
        }
        let mut sources = Vec::with_capacity(16);
        for (di, wi) in weights[0].iter().enumerate() {
            for (dj, wj) in weights[1].iter().enumerate() {
                let padded = self.padded_offset[other] + (start[0] + di) * n + start[1] + dj;
                let owned = self.owned_of_padded[padded].expect("interior node");
                sources.push((owned, wi * wj));
            }
        }
        Ok(GhostLink { padded: self.padded_offset[c] + i * n + j, sources, jac: inversion_jacobian(u) })
    }

    pub fn kind(&self) -> &AtlasKind {
        &self.kind
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.kind, AtlasKind::StereographicSphere { .. })
    }

    pub fn owned_count(&self) -> usize {
        self.owned_nodes.len()
    }

    pub fn padded_count(&self) -> usize {
        self.padded_total
    }

    pub fn owned_nodes(&self) -> &[NodeRef] {
        &self.owned_nodes
    }

    /// Partition-of-unity weight of each owned node.
    pub fn blend(&self) -> &[f64] {
        &self.blend
    }

    /// Coordinates of an owned node in its chart.
    pub fn coord(&self, p: usize) -> [f64; 2] {
        let r = self.owned_nodes[p];
        self.charts[r.chart].coord(r.i, r.j)
    }

    pub fn spacing(&self, chart: usize) -> [f64; 2] {
        self.charts[chart].spacing()
    }

    /// Content hash of the atlas descriptor.
    pub fn descriptor_hash(&self) -> [u8; 32] {
        self.descriptor_hash
    }

    pub fn descriptor(&self) -> AtlasDescriptor {
        AtlasDescriptor { kind: self.kind.clone(), resolution: self.resolution }
    }

    pub fn from_descriptor(d: &AtlasDescriptor) -> Result<Self> {
        match d.kind {
            AtlasKind::PeriodicTorus { periods } => Self::torus(periods, d.resolution),
            AtlasKind::StereographicSphere { half_width } => Self::sphere_with_width(d.resolution, half_width),
        }
    }

    pub fn same_as(&self, other: &ChartAtlas) -> bool {
        self.descriptor_hash == other.descriptor_hash
    }

    /// Padded index of the node at offset `(di, dj)` from owned node `p`.
    #[inline]
    pub fn neighbor(&self, p: usize, di: isize, dj: isize) -> usize {
        let r = self.owned_nodes[p];
        let ch = &self.charts[r.chart];
        let wrap = |x: usize, d: isize, n: usize, periodic: bool| -> usize {
            let y = x as isize + d;
            if periodic {
                y.rem_euclid(n as isize) as usize
            } else {
                debug_assert!(y >= 0 && (y as usize) < n);
                y as usize
            }
        };
        let i = wrap(r.i, di, ch.nodes[0], ch.periodic[0]);
        let j = wrap(r.j, dj, ch.nodes[1], ch.periodic[1]);
        self.padded_offset[r.chart] + i * ch.nodes[1] + j
    }

    /// Sparse extension from owned degrees of freedom to padded ones.
    ///
    /// `None` means the identity (periodic torus).
    pub fn extension(&self, kind: FieldKind) -> Option<CsMat<f64>> {
        if !self.is_sphere() {
            return None;
        }
        let m = kind.components();
        let mut tri = TriMat::new((self.padded_total * m, self.owned_count() * m));
        for (padded, owned) in self.owned_of_padded.iter().enumerate() {
            if let Some(o) = owned {
                for a in 0..m {
                    tri.add_triplet(padded * m + a, o * m + a, 1.0);
                }
            }
        }
        for g in &self.ghosts {
            let t = transform_matrix(kind, &g.jac);
            for &(src, w) in &g.sources {
                for a in 0..m {
                    for b in 0..m {
                        let v = w * t[a][b];
                        if v != 0.0 {
                            tri.add_triplet(g.padded * m + a, src * m + b, v);
                        }
                    }
                }
            }
        }
        Some(tri.to_csr())
    }

    /// Padded values of an owned data vector.
    pub fn pad(&self, kind: FieldKind, data: &[f64]) -> Vec<f64> {
        let m = kind.components();
        if !self.is_sphere() {
            return data.to_vec();
        }
        let mut out = vec![0.0; self.padded_total * m];
        for (padded, owned) in self.owned_of_padded.iter().enumerate() {
            if let Some(o) = owned {
                out[padded * m..padded * m + m].copy_from_slice(&data[o * m..o * m + m]);
            }
        }
        for g in &self.ghosts {
            let t = transform_matrix(kind, &g.jac);
            let mut src = [0.0; 3];
            for &(s, w) in &g.sources {
                for b in 0..m {
                    src[b] += w * data[s * m + b];
                }
            }
            for a in 0..m {
                out[g.padded * m + a] = (0..m).map(|b| t[a][b] * src[b]).sum();
            }
        }
        out
    }

    /// Jets `[value, d_x, d_y, d_xx, d_xy, d_yy]` of every component at
    /// every owned node, from padded data.
    pub fn jets(&self, kind: FieldKind, padded: &[f64]) -> Vec<[f64; JET]> {
        let m = kind.components();
        let mut out = vec![[0.0; JET]; self.owned_count() * m];
        let stencils: Vec<Vec<Vec<(isize, isize, f64)>>> = (0..self.charts.len())
            .map(|c| (0..JET).map(|slot| stencil(slot, self.spacing(c))).collect())
            .collect();
        for p in 0..self.owned_count() {
            let st = &stencils[self.owned_nodes[p].chart];
            for a in 0..m {
                let mut jet = [0.0; JET];
                for (slot, entry) in jet.iter_mut().enumerate() {
                    *entry = st[slot]
                        .iter()
                        .map(|&(di, dj, w)| w * padded[self.neighbor(p, di, dj) * m + a])
                        .sum();
                }
                out[p * m + a] = jet;
            }
        }
        out
    }

    /// Evaluates a function of chart coordinates at owned nodes.
    pub fn sample<F: Fn(usize, [f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.owned_count()).map(|p| f(self.owned_nodes[p].chart, self.coord(p))).collect()
    }
}

fn chart_spacing(ch: &Chart) -> [f64; 2] {
    ch.spacing()
}

/// Second-order central stencil for jet slot `slot` as `(di, dj, weight)`.
pub fn stencil(slot: usize, h: [f64; 2]) -> Vec<(isize, isize, f64)> {
    match slot {
        0 => vec![(0, 0, 1.0)],
        1 => vec![(1, 0, 0.5 / h[0]), (-1, 0, -0.5 / h[0])],
        2 => vec![(0, 1, 0.5 / h[1]), (0, -1, -0.5 / h[1])],
        3 => {
            let c = 1.0 / (h[0] * h[0]);
            vec![(1, 0, c), (0, 0, -2.0 * c), (-1, 0, c)]
        }
        4 => {
            let c = 0.25 / (h[0] * h[1]);
            vec![(1, 1, c), (1, -1, -c), (-1, 1, -c), (-1, -1, c)]
        }
        5 => {
            let c = 1.0 / (h[1] * h[1]);
            vec![(0, 1, c), (0, 0, -2.0 * c), (0, -1, c)]
        }
        _ => unreachable!("jet slot {slot}"),
    }
}

/// Maps components in the source chart to the ghost chart.
///
/// `jac[a][i] = dv^a/du^i` where `u` are ghost-chart and `v` source-chart
/// coordinates.
fn transform_matrix(kind: FieldKind, jac: &[[f64; 2]; 2]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    match kind {
        FieldKind::Scalar => t[0][0] = 1.0,
        FieldKind::Covector => {
            for i in 0..2 {
                for a in 0..2 {
                    t[i][a] = jac[a][i];
                }
            }
        }
        FieldKind::Vector => {
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            t[0][0] = jac[1][1] / det;
            t[0][1] = -jac[0][1] / det;
            t[1][0] = -jac[1][0] / det;
            t[1][1] = jac[0][0] / det;
        }
        FieldKind::Sym2 => {
            // h_ij = J_ai J_bj k_ab, with k in packed (xx, xy, yy) form.
            let pairs = [(0, 0), (0, 1), (1, 1)];
            for (row, &(i, j)) in pairs.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        t[row][sym_index(a, b)] += jac[a][i] * jac[b][j];
                    }
                }
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blend_sums_to_one_on_the_sphere() {
        let atlas = ChartAtlas::sphere(24).unwrap();
        // Pair each chart-0 node with the same sphere point in chart 1.
        for (p, r) in atlas.owned_nodes().iter().enumerate() {
            let u = atlas.coord(p);
            let x = stereo_embed(r.chart, u);
            let z = x[2];
            let north = smooth_step((z + BLEND_Z) / (2.0 * BLEND_Z));
            let south = smooth_step((BLEND_Z - z) / (2.0 * BLEND_Z));
            assert!((north + south - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inversion_jacobian_is_an_involution() {
        let u = [0.7, -0.4];
        let r2 = u[0] * u[0] + u[1] * u[1];
        let v = [u[0] / r2, u[1] / r2];
        let a = inversion_jacobian(u);
        let b = inversion_jacobian(v);
        for i in 0..2 {
            for j in 0..2 {
                let prod: f64 = (0..2).map(|k| b[i][k] * a[k][j]).sum();
                assert!((prod - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ghosts_interpolate_smooth_scalars() {
        let atlas = ChartAtlas::sphere(32).unwrap();
        let f = |c: usize, u: [f64; 2]| {
            let x = stereo_embed(c, u);
            x[0] + 0.5 * x[1] * x[2]
        };
        let data = atlas.sample(f);
        let padded = atlas.pad(FieldKind::Scalar, &data);
        let n = atlas.resolution();
        let mut worst: f64 = 0.0;
        for c in 0..2 {
            for j in 0..n {
                let exact = f(c, atlas.charts()[c].coord(0, j));
                worst = worst.max((padded[c * n * n + j] - exact).abs());
            }
        }
        assert!(worst < 1e-3, "ghost interpolation error {worst}");
    }
}
