//! Differential operators as assembled sparse maps.
//!
//! Component formulas (indices in chart coordinates, summation implied):
//!
//! * Hessian `(ddf)_ij = d_i d_j f - Gamma^k_ij d_k f`, Laplacian its trace.
//! * `Delta_f u = Delta u - g(grad f, grad u)`.
//! * `alpha(X)_ij = (L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k`.
//! * `(delta h)_k = g^ij (nabla_i h)_jk`, `delta_f h = delta h - h(grad f, .)`.
//! * `delta_f w = g^ij (nabla_i w)_j - w(grad f)` on 1-forms.
//! * `R(h)_jl = -R^a_ljk g^km h_am`, symmetrized; `R(g) = Ric`.
//! * `Delta_f h = g^ij (nabla^2 h)_ij.. - nabla_(grad f) h` on 2-tensors.
//!
//! With these signs `-delta_f` is the formal adjoint of `alpha / 2` for the
//! weighted product `<., .>_(g, f)`.

use super::assembly::{AssembledOperator, LocalCoefs, Symmetry};
use super::atlas::{d1_slot, d2_slot, sym_index, FieldKind};
use super::field::Field;
use super::geometry::{Geometry, NodeGeometry, ScalarJet};
use crate::error::Result;

use FieldKind::{Covector, Scalar, Sym2, Vector};

const PAIRS: [(usize, usize); 3] = [(0, 0), (0, 1), (1, 1)];

/// Optional weight function `f` of the twisted calculus.
#[derive(Clone, Debug)]
pub struct Twist {
    jets: Vec<ScalarJet>,
    f: Field,
}

impl Twist {
    pub fn new(geo: &Geometry, f: &Field) -> Result<Self> {
        Ok(Twist { jets: geo.scalar_jets(f)?, f: f.clone() })
    }

    pub fn jets(&self) -> &[ScalarJet] {
        &self.jets
    }

    pub fn field(&self) -> &Field {
        &self.f
    }

    fn grad(&self, p: usize) -> [f64; 2] {
        self.jets[p].grad
    }
}

fn grad_of(tw: Option<&Twist>, p: usize) -> [f64; 2] {
    tw.map(|t| t.grad(p)).unwrap_or([0.0; 2])
}

/// Adds `c * (nabla_j h)_ab` for a `Sym2` input.
fn add_nabla_h(op: &mut LocalCoefs, out: usize, c: f64, ng: &NodeGeometry, j: usize, a: usize, b: usize) {
    op.add(out, sym_index(a, b), d1_slot(j), c);
    for m in 0..2 {
        op.add(out, sym_index(m, b), 0, -c * ng.gamma[m][j][a]);
        op.add(out, sym_index(a, m), 0, -c * ng.gamma[m][j][b]);
    }
}

/// Adds `c * d_i (nabla_j h)_ab`.
fn add_d_nabla_h(op: &mut LocalCoefs, out: usize, c: f64, ng: &NodeGeometry, i: usize, j: usize, a: usize, b: usize) {
    op.add(out, sym_index(a, b), d2_slot(i, j), c);
    for m in 0..2 {
        op.add(out, sym_index(m, b), 0, -c * ng.dgamma[i][m][j][a]);
        op.add(out, sym_index(m, b), d1_slot(i), -c * ng.gamma[m][j][a]);
        op.add(out, sym_index(a, m), 0, -c * ng.dgamma[i][m][j][b]);
        op.add(out, sym_index(a, m), d1_slot(i), -c * ng.gamma[m][j][b]);
    }
}

/// Adds `c * (nabla^2_ij h)_ab`.
fn add_nabla2_h(op: &mut LocalCoefs, out: usize, c: f64, ng: &NodeGeometry, i: usize, j: usize, a: usize, b: usize) {
    add_d_nabla_h(op, out, c, ng, i, j, a, b);
    for m in 0..2 {
        add_nabla_h(op, out, -c * ng.gamma[m][i][j], ng, m, a, b);
        add_nabla_h(op, out, -c * ng.gamma[m][i][a], ng, j, m, b);
        add_nabla_h(op, out, -c * ng.gamma[m][i][b], ng, j, a, m);
    }
}

/// `d u` on functions.
pub fn differential(geo: &Geometry) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Scalar, Covector, "d", |_, op| {
        for i in 0..2 {
            op.add(i, 0, d1_slot(i), 1.0);
        }
    })
}

/// `grad u = (du)^sharp`.
pub fn gradient(geo: &Geometry) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Scalar, Vector, "grad", |p, op| {
        let ng = geo.node(p);
        for k in 0..2 {
            for l in 0..2 {
                op.add(k, 0, d1_slot(l), ng.ginv[k][l]);
            }
        }
    })
}

/// Covariant Hessian `nabla d u`.
pub fn hessian(geo: &Geometry) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Scalar, Sym2, "hess", |p, op| {
        let ng = geo.node(p);
        for (out, &(i, j)) in PAIRS.iter().enumerate() {
            op.add(out, 0, d2_slot(i, j), 1.0);
            for k in 0..2 {
                op.add(out, 0, d1_slot(k), -ng.gamma[k][i][j]);
            }
        }
    })
}

/// `Delta u` or, with a twist, `Delta_f u`.
pub fn laplacian(geo: &Geometry, twist: Option<&Twist>) -> AssembledOperator {
    let op = AssembledOperator::local(geo.atlas(), Scalar, Scalar, "lap", |p, op| {
        let ng = geo.node(p);
        let gf = grad_of(twist, p);
        for i in 0..2 {
            for j in 0..2 {
                op.add(0, 0, d2_slot(i, j), ng.ginv[i][j]);
                for k in 0..2 {
                    op.add(0, 0, d1_slot(k), -ng.ginv[i][j] * ng.gamma[k][i][j]);
                }
            }
            op.add(0, 0, d1_slot(i), -gf[i]);
        }
    });
    op.with_symmetry(if twist.is_some() { Symmetry::Twisted } else { Symmetry::Plain })
}

/// `alpha_g(X) = L_X g`.
pub fn lie_metric(geo: &Geometry) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Vector, Sym2, "alpha", |p, op| {
        let ng = geo.node(p);
        for (out, &(i, j)) in PAIRS.iter().enumerate() {
            for k in 0..2 {
                op.add(out, k, 0, ng.dg[k][i][j]);
                op.add(out, k, d1_slot(i), ng.g[k][j]);
                op.add(out, k, d1_slot(j), ng.g[i][k]);
            }
        }
    })
}

/// `delta h` or `delta_f h = delta h - h(grad f, .)`.
pub fn divergence(geo: &Geometry, twist: Option<&Twist>) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Sym2, Covector, "div", |p, op| {
        let ng = geo.node(p);
        let gf = grad_of(twist, p);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    add_nabla_h(op, k, ng.ginv[i][j], ng, i, j, k);
                }
                if twist.is_some() {
                    op.add(k, sym_index(i, k), 0, -gf[i]);
                }
            }
        }
    })
}

/// `delta w` or `delta_f w = delta w - w(grad f)` on 1-forms.
pub fn covector_divergence(geo: &Geometry, twist: Option<&Twist>) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Covector, Scalar, "div1", |p, op| {
        let ng = geo.node(p);
        let gf = grad_of(twist, p);
        for i in 0..2 {
            for j in 0..2 {
                op.add(0, j, d1_slot(i), ng.ginv[i][j]);
                for k in 0..2 {
                    op.add(0, k, 0, -ng.ginv[i][j] * ng.gamma[k][i][j]);
                }
            }
            if twist.is_some() {
                op.add(0, i, 0, -gf[i]);
            }
        }
    })
}

/// Curvature action `R(h)`.
pub fn curvature_action(geo: &Geometry) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Sym2, Sym2, "Rh", |p, op| {
        let ng = geo.node(p);
        for (out, &(j, l)) in PAIRS.iter().enumerate() {
            for (jj, ll) in [(j, l), (l, j)] {
                for a in 0..2 {
                    for k in 0..2 {
                        for m in 0..2 {
                            op.add(out, sym_index(a, m), 0, -0.5 * ng.riemann[a][ll][jj][k] * ng.ginv[k][m]);
                        }
                    }
                }
            }
        }
    })
    .with_symmetry(Symmetry::Plain)
}

/// Rough Laplacian `Delta h` or `Delta_f h` on symmetric 2-tensors.
pub fn sym2_laplacian(geo: &Geometry, twist: Option<&Twist>) -> AssembledOperator {
    let op = AssembledOperator::local(geo.atlas(), Sym2, Sym2, "lap2", |p, op| {
        let ng = geo.node(p);
        let gf = grad_of(twist, p);
        for (out, &(a, b)) in PAIRS.iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    add_nabla2_h(op, out, ng.ginv[i][j], ng, i, j, a, b);
                }
                if twist.is_some() {
                    add_nabla_h(op, out, -gf[i], ng, i, a, b);
                }
            }
        }
    });
    op.with_symmetry(if twist.is_some() { Symmetry::Twisted } else { Symmetry::Plain })
}

/// `nabla_(grad f) h`.
pub fn directional_along_grad(geo: &Geometry, twist: &Twist) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Sym2, Sym2, "nabla_gradf", |p, op| {
        let ng = geo.node(p);
        let gf = twist.grad(p);
        for (out, &(a, b)) in PAIRS.iter().enumerate() {
            for k in 0..2 {
                add_nabla_h(op, out, gf[k], ng, k, a, b);
            }
        }
    })
}

/// `[nabla h . nabla f](X, Y) = (nabla_X h)(grad f, Y) + (nabla_Y h)(grad f, X)`.
pub fn grad_bracket(geo: &Geometry, twist: &Twist) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Sym2, Sym2, "bracket", |p, op| {
        let ng = geo.node(p);
        let gf = twist.grad(p);
        for (out, &(i, j)) in PAIRS.iter().enumerate() {
            for k in 0..2 {
                add_nabla_h(op, out, gf[k], ng, i, k, j);
                add_nabla_h(op, out, gf[k], ng, j, k, i);
            }
        }
    })
}

/// `Ric o h + h o Ric`, i.e. `Ric_ik g^kl h_lj + h_ik g^kl Ric_lj`.
pub fn ricci_anticommutator(geo: &Geometry) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Sym2, Sym2, "Ric.h", |p, op| {
        let ng = geo.node(p);
        for (out, &(i, j)) in PAIRS.iter().enumerate() {
            for k in 0..2 {
                for l in 0..2 {
                    op.add(out, sym_index(l, j), 0, ng.ricci[i][k] * ng.ginv[k][l]);
                    op.add(out, sym_index(i, k), 0, ng.ginv[k][l] * ng.ricci[l][j]);
                }
            }
        }
    })
}

/// `tr_g h = g^ij h_ij`.
pub fn trace(geo: &Geometry) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Sym2, Scalar, "tr", |p, op| {
        let ng = geo.node(p);
        for i in 0..2 {
            for j in 0..2 {
                op.add(0, sym_index(i, j), 0, ng.ginv[i][j]);
            }
        }
    })
}

/// `u -> u g`.
pub fn times_metric(geo: &Geometry) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Scalar, Sym2, "ug", |p, op| {
        let ng = geo.node(p);
        for (out, &(i, j)) in PAIRS.iter().enumerate() {
            op.add(out, 0, 0, ng.g[i][j]);
        }
    })
}

/// Index raising on 1-forms.
pub fn sharp(geo: &Geometry) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Covector, Vector, "sharp", |p, op| {
        let ng = geo.node(p);
        for k in 0..2 {
            for l in 0..2 {
                op.add(k, l, 0, ng.ginv[k][l]);
            }
        }
    })
}

/// Index lowering on vector fields.
pub fn flat(geo: &Geometry) -> AssembledOperator {
    AssembledOperator::local(geo.atlas(), Vector, Covector, "flat", |p, op| {
        let ng = geo.node(p);
        for k in 0..2 {
            for l in 0..2 {
                op.add(k, l, 0, ng.g[k][l]);
            }
        }
    })
}

/// Pointwise multiplication by a scalar function on any kind.
pub fn multiply(geo: &Geometry, kind: FieldKind, u: &[f64]) -> AssembledOperator {
    let m = kind.components();
    AssembledOperator::local(geo.atlas(), kind, kind, "mul", |p, op| {
        for a in 0..m {
            op.add(a, a, 0, u[p]);
        }
    })
}
