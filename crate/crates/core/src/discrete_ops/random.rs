//! Seeded smooth random fields.
//!
//! Torus fields are trigonometric polynomials of bandwidth at most 3. Sphere
//! fields are restrictions of ambient polynomials in `R^3`, so they are
//! smooth across both charts by construction.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::atlas::{stereo_embed, stereo_embed_jacobian, AtlasKind, ChartAtlas, FieldKind};
use super::field::Field;
use super::geometry::inverse;

const BAND: i32 = 3;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller.
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}

/// Quadratic ambient polynomial: `c + b.x + x.A.x`, with gradient.
#[derive(Clone, Debug)]
struct Poly {
    c: f64,
    b: [f64; 3],
    a: [[f64; 3]; 3],
}

impl Poly {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                a[i][j] = 0.5 * normal(rng);
                a[j][i] = a[i][j];
            }
        }
        Poly { c: normal(rng), b: [normal(rng), normal(rng), normal(rng)], a }
    }

    fn eval(&self, x: &[f64; 3]) -> f64 {
        let mut s = self.c;
        for i in 0..3 {
            s += self.b[i] * x[i];
            for j in 0..3 {
                s += self.a[i][j] * x[i] * x[j];
            }
        }
        s
    }
}

/// Trig polynomial on the torus.
#[derive(Clone, Debug)]
struct Trig {
    terms: Vec<([i32; 2], f64, f64)>,
    periods: [f64; 2],
}

impl Trig {
    fn random(rng: &mut ChaCha8Rng, periods: [f64; 2]) -> Self {
        let mut terms = Vec::new();
        for k1 in -BAND..=BAND {
            for k2 in 0..=BAND {
                if k2 == 0 && k1 < 0 {
                    continue;
                }
                let decay = 1.0 / (1.0 + (k1 * k1 + k2 * k2) as f64);
                terms.push(([k1, k2], decay * normal(rng), decay * normal(rng)));
            }
        }
        Trig { terms, periods }
    }

    fn eval(&self, u: [f64; 2]) -> f64 {
        self.terms
            .iter()
            .map(|(k, a, b)| {
                let t = 2.0 * PI * (k[0] as f64 * u[0] / self.periods[0] + k[1] as f64 * u[1] / self.periods[1]);
                a * t.cos() + b * t.sin()
            })
            .sum()
    }
}

/// A smooth random field of the given kind, reproducible from `seed`.
pub fn random_field(atlas: &Arc<ChartAtlas>, kind: FieldKind, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match atlas.kind().clone() {
        AtlasKind::PeriodicTorus { periods } => {
            let comps: Vec<Trig> = (0..kind.components()).map(|_| Trig::random(&mut rng, periods)).collect();
            Field::from_fn(atlas.clone(), kind, |_, u| {
                let mut out = [0.0; 3];
                for (o, t) in out.iter_mut().zip(&comps) {
                    *o = t.eval(u);
                }
                out
            })
        }
        AtlasKind::StereographicSphere { .. } => {
            // Ambient data: 1 polynomial for scalars, 3 for vector fields,
            // 6 for symmetric tensors.
            let count = match kind {
                FieldKind::Scalar => 1,
                FieldKind::Vector | FieldKind::Covector => 3,
                FieldKind::Sym2 => 6,
            };
            let polys: Vec<Poly> = (0..count).map(|_| Poly::random(&mut rng)).collect();
            Field::from_fn(atlas.clone(), kind, |chart, u| {
                let x = stereo_embed(chart, u);
                let jac = stereo_embed_jacobian(chart, u);
                let vals: Vec<f64> = polys.iter().map(|p| p.eval(&x)).collect();
                match kind {
                    FieldKind::Scalar => [vals[0], 0.0, 0.0],
                    FieldKind::Covector | FieldKind::Vector => {
                        let mut w = [0.0; 2];
                        for (i, wi) in w.iter_mut().enumerate() {
                            *wi = (0..3).map(|a| jac[a][i] * vals[a]).sum();
                        }
                        if kind == FieldKind::Vector {
                            // Tangential part: (J^T J)^{-1} J^T V.
                            let mut jtj = [[0.0; 2]; 2];
                            for i in 0..2 {
                                for j in 0..2 {
                                    jtj[i][j] = (0..3).map(|a| jac[a][i] * jac[a][j]).sum();
                                }
                            }
                            let inv = inverse(&jtj);
                            let v = [inv[0][0] * w[0] + inv[0][1] * w[1], inv[1][0] * w[0] + inv[1][1] * w[1]];
                            [v[0], v[1], 0.0]
                        } else {
                            [w[0], w[1], 0.0]
                        }
                    }
                    FieldKind::Sym2 => {
                        let idx = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
                        let mut h = [0.0; 3];
                        for (s, (i, j)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
                            let mut acc = 0.0;
                            for a in 0..3 {
                                for b in 0..3 {
                                    acc += jac[a][i] * jac[b][j] * vals[idx[a][b]];
                                }
                            }
                            h[s] = acc;
                        }
                        h
                    }
                }
            })
        }
    }
}
