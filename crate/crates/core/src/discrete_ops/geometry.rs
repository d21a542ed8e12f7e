//! Pointwise metric data: Christoffel symbols and curvature from jets.
//!
//! Conventions, with all indices in chart coordinates:
//!
//! * `Gamma^a_bc = g^ae (d_b g_ec + d_c g_eb - d_e g_bc) / 2`
//! * `R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb`
//! * `Ric_bd = R^a_bad`, `s = g^bd Ric_bd`
//!
//! With these the unit round sphere has `Ric = g`.

use std::sync::Arc;

use rayon::prelude::*;

use super::atlas::{d1_slot, d2_slot, sym_index, ChartAtlas, FieldKind, JET};
use super::field::{pack_sym, Field, MetricField};
use crate::error::Result;

pub type Mat2 = [[f64; 2]; 2];
pub type Tensor3 = [[[f64; 2]; 2]; 2];
pub type Tensor4 = [[[[f64; 2]; 2]; 2]; 2];

/// Metric, inverse, connection and curvature at one node.
#[derive(Clone, Debug)]
pub struct NodeGeometry {
    pub g: Mat2,
    pub ginv: Mat2,
    pub sqrt_det: f64,
    /// `dg[k][i][j] = d_k g_ij`.
    pub dg: Tensor3,
    /// `gamma[a][b][c] = Gamma^a_bc`.
    pub gamma: Tensor3,
    /// `dgamma[d][a][b][c] = d_d Gamma^a_bc`.
    pub dgamma: Tensor4,
    /// `riemann[a][b][c][d] = R^a_bcd`.
    pub riemann: Tensor4,
    pub ricci: Mat2,
    pub scalar: f64,
}

pub fn inverse(m: &Mat2) -> Mat2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

impl NodeGeometry {
    /// Builds from the jets of the three packed metric components.
    pub fn from_jets(jets: &[[f64; JET]]) -> Self {
        let comp = |a: usize, b: usize, slot: usize| jets[sym_index(a, b)][slot];
        let mut g = [[0.0; 2]; 2];
        let mut dg = [[[0.0; 2]; 2]; 2];
        let mut ddg = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] = comp(i, j, 0);
                for k in 0..2 {
                    dg[k][i][j] = comp(i, j, d1_slot(k));
                    for l in 0..2 {
                        ddg[k][l][i][j] = comp(i, j, d2_slot(k, l));
                    }
                }
            }
        }
        let ginv = inverse(&g);
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        // First-kind symbols and their derivatives.
        let mut first = [[[0.0; 2]; 2]; 2];
        let mut dfirst = [[[[0.0; 2]; 2]; 2]; 2];
        for e in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    first[e][b][c] = 0.5 * (dg[b][e][c] + dg[c][e][b] - dg[e][b][c]);
                    for d in 0..2 {
                        dfirst[d][e][b][c] = 0.5 * (ddg[d][b][e][c] + ddg[d][c][e][b] - ddg[d][e][b][c]);
                    }
                }
            }
        }
        // d_d g^ae = -g^ap d_d g_pq g^qe
        let mut dginv = [[[0.0; 2]; 2]; 2];
        for d in 0..2 {
            for a in 0..2 {
                for e in 0..2 {
                    let mut s = 0.0;
                    for p in 0..2 {
                        for q in 0..2 {
                            s -= ginv[a][p] * dg[d][p][q] * ginv[q][e];
                        }
                    }
                    dginv[d][a][e] = s;
                }
            }
        }
        let mut gamma = [[[0.0; 2]; 2]; 2];
        let mut dgamma = [[[[0.0; 2]; 2]; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    gamma[a][b][c] = (0..2).map(|e| ginv[a][e] * first[e][b][c]).sum();
                    for d in 0..2 {
                        dgamma[d][a][b][c] =
                            (0..2).map(|e| dginv[d][a][e] * first[e][b][c] + ginv[a][e] * dfirst[d][e][b][c]).sum();
                    }
                }
            }
        }
        let mut riemann = [[[[0.0; 2]; 2]; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        let mut r = dgamma[c][a][d][b] - dgamma[d][a][c][b];
                        for e in 0..2 {
                            r += gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b];
                        }
                        riemann[a][b][c][d] = r;
                    }
                }
            }
        }
        let mut ricci = [[0.0; 2]; 2];
        for b in 0..2 {
            for d in 0..2 {
                ricci[b][d] = (0..2).map(|a| riemann[a][b][a][d]).sum();
            }
        }
        let scalar = (0..2).flat_map(|b| (0..2).map(move |d| (b, d))).map(|(b, d)| ginv[b][d] * ricci[b][d]).sum();
        NodeGeometry { g, ginv, sqrt_det: det.sqrt(), dg, gamma, dgamma, riemann, ricci, scalar }
    }

    /// `g(h, k) = g^ia g^jb h_ij k_ab`.
    pub fn sym2_dot(&self, h: &Mat2, k: &Mat2) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        s += self.ginv[i][a] * self.ginv[j][b] * h[i][j] * k[a][b];
                    }
                }
            }
        }
        s
    }

    /// Raises an index: `g^ij w_j`.
    pub fn raise(&self, w: [f64; 2]) -> [f64; 2] {
        [
            self.ginv[0][0] * w[0] + self.ginv[0][1] * w[1],
            self.ginv[1][0] * w[0] + self.ginv[1][1] * w[1],
        ]
    }

    /// Pointwise inner product of two fields of the same kind at this node.
    pub fn dot(&self, kind: FieldKind, x: &[f64], y: &[f64]) -> f64 {
        match kind {
            FieldKind::Scalar => x[0] * y[0],
            FieldKind::Vector => (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| self.g[i][j] * x[i] * y[j]).sum(),
            FieldKind::Covector => {
                (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| self.ginv[i][j] * x[i] * y[j]).sum()
            }
            FieldKind::Sym2 => {
                let h = [[x[0], x[1]], [x[1], x[2]]];
                let k = [[y[0], y[1]], [y[1], y[2]]];
                self.sym2_dot(&h, &k)
            }
        }
    }

    /// Pointwise Gram matrix of the packed components of `kind`.
    pub fn gram(&self, kind: FieldKind) -> [[f64; 3]; 3] {
        let m = kind.components();
        let mut out = [[0.0; 3]; 3];
        for a in 0..m {
            for b in 0..m {
                let mut x = [0.0; 3];
                let mut y = [0.0; 3];
                x[a] = 1.0;
                y[b] = 1.0;
                out[a][b] = self.dot(kind, &x, &y);
            }
        }
        out
    }
}

/// Pointwise derivatives of a scalar function `f` relative to a metric.
#[derive(Clone, Debug)]
pub struct ScalarJet {
    pub value: f64,
    pub d: [f64; 2],
    pub dd: Mat2,
    /// `grad^k f = g^kl d_l f`.
    pub grad: [f64; 2],
    /// Covariant Hessian `d_i d_j f - Gamma^k_ij d_k f`.
    pub hess: Mat2,
}

impl ScalarJet {
    pub fn new(jet: &[f64; JET], ng: &NodeGeometry) -> Self {
        let d = [jet[1], jet[2]];
        let dd = [[jet[3], jet[4]], [jet[4], jet[5]]];
        let mut hess = dd;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    hess[i][j] -= ng.gamma[k][i][j] * d[k];
                }
            }
        }
        ScalarJet { value: jet[0], d, dd, grad: ng.raise(d), hess }
    }

    pub fn laplacian(&self, ng: &NodeGeometry) -> f64 {
        (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| ng.ginv[i][j] * self.hess[i][j]).sum()
    }

    pub fn grad_sq(&self) -> f64 {
        self.d[0] * self.grad[0] + self.d[1] * self.grad[1]
    }
}

/// Metric together with its per-node geometry and quadrature weights.
#[derive(Clone, Debug)]
pub struct Geometry {
    metric: MetricField,
    nodes: Arc<Vec<NodeGeometry>>,
    /// `blend * sqrt(det g) * cell area`: quadrature weights.
    quad: Arc<Vec<f64>>,
    /// `sqrt(det g) * cell area` without the blend; solver norms.
    mass: Arc<Vec<f64>>,
}

impl Geometry {
    pub fn new(metric: MetricField) -> Self {
        let atlas = metric.atlas().clone();
        let jets = metric.field().jets();
        let nodes: Vec<NodeGeometry> = (0..atlas.owned_count())
            .into_par_iter()
            .map(|p| NodeGeometry::from_jets(&jets[3 * p..3 * p + 3]))
            .collect();
        let mut quad = Vec::with_capacity(nodes.len());
        let mut mass = Vec::with_capacity(nodes.len());
        for (p, ng) in nodes.iter().enumerate() {
            let h = atlas.spacing(atlas.owned_nodes()[p].chart);
            let cell = h[0] * h[1] * ng.sqrt_det;
            mass.push(cell);
            quad.push(cell * atlas.blend()[p]);
        }
        Geometry { metric, nodes: Arc::new(nodes), quad: Arc::new(quad), mass: Arc::new(mass) }
    }

    pub fn from_field(g: Field) -> Result<Self> {
        Ok(Self::new(MetricField::new(g)?))
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn atlas(&self) -> &Arc<ChartAtlas> {
        self.metric.atlas()
    }

    pub fn nodes(&self) -> &[NodeGeometry] {
        &self.nodes
    }

    pub fn node(&self, p: usize) -> &NodeGeometry {
        &self.nodes[p]
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quad
    }

    pub fn mass_weights(&self) -> &[f64] {
        &self.mass
    }

    pub fn dim(&self) -> usize {
        2
    }

    /// Scalar jets of `f` relative to this metric.
    pub fn scalar_jets(&self, f: &Field) -> Result<Vec<ScalarJet>> {
        f.expect_kind(FieldKind::Scalar)?;
        f.expect_atlas(self.atlas())?;
        let jets = f.jets();
        Ok(jets.iter().zip(self.nodes.iter()).map(|(j, ng)| ScalarJet::new(j, ng)).collect())
    }

    pub fn curvature_pack(&self) -> CurvaturePack {
        let atlas = self.atlas().clone();
        CurvaturePack {
            christoffel: self.nodes.iter().map(|n| n.gamma).collect(),
            riemann: self.nodes.iter().map(|n| n.riemann).collect(),
            ricci: Field::from_fn(atlas.clone(), FieldKind::Sym2, |_, _| [0.0; 3])
                .with_data(self.nodes.iter().flat_map(|n| pack_sym(n.ricci)).collect())
                .expect("sized"),
            scalar: Field::new(atlas, FieldKind::Scalar, self.nodes.iter().map(|n| n.scalar).collect()).expect("sized"),
        }
    }
}

/// Curvature quantities at every owned node.
#[derive(Clone, Debug)]
pub struct CurvaturePack {
    pub christoffel: Vec<Tensor3>,
    pub riemann: Vec<Tensor4>,
    pub ricci: Field,
    pub scalar: Field,
}

impl CurvaturePack {
    /// Largest violation of `R^a_bcd = -R^a_bdc`, `R_abcd = -R_bacd` and the
    /// first Bianchi identity. Needs the metric for lowering.
    pub fn symmetry_defect(&self, geo: &Geometry) -> f64 {
        let mut worst: f64 = 0.0;
        for (r, ng) in self.riemann.iter().zip(geo.nodes()) {
            let mut low = [[[[0.0; 2]; 2]; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        for d in 0..2 {
                            low[a][b][c][d] = (0..2).map(|e| ng.g[a][e] * r[e][b][c][d]).sum();
                        }
                    }
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        for d in 0..2 {
                            worst = worst.max((low[a][b][c][d] + low[a][b][d][c]).abs());
                            worst = worst.max((low[a][b][c][d] + low[b][a][c][d]).abs());
                            worst = worst.max((r[a][b][c][d] + r[a][c][d][b] + r[a][d][b][c]).abs());
                        }
                    }
                }
            }
        }
        worst
    }
}
