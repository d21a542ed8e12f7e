//! Metrics on grid atlases used as bases and test inputs.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discrete_ops::random::random_field;
use crate::discrete_ops::{ChartAtlas, Field, FieldKind, MetricField};
use crate::error::{Error, Result};

/// A metric family that can be sampled at any resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridModel {
    /// Flat torus `[0, P1) x [0, P2)`.
    FlatTorus { periods: [f64; 2] },
    /// `e^(2 phi) (dx^2 + dy^2)` on the standard torus, `phi` a seeded
    /// trigonometric polynomial scaled to `amplitude`.
    ConformalTorus { seed: u64, amplitude: f64 },
    /// Round sphere of squared radius `radius_sq` on the stereographic atlas.
    RoundSphere { radius_sq: f64 },
}

impl GridModel {
    pub fn unit_sphere() -> Self {
        GridModel::RoundSphere { radius_sq: 1.0 }
    }

    /// `S^2(sqrt 2)`, the Killing-normalized `CP^1`.
    pub fn killing_sphere() -> Self {
        GridModel::RoundSphere { radius_sq: 2.0 }
    }

    pub fn standard_torus() -> Self {
        GridModel::FlatTorus { periods: [2.0 * PI; 2] }
    }

    /// Parses `sphere`, `sphere:R2`, `cp1`, `torus`, `torus:P1,P2` and
    /// `conformal-torus:SEED[,AMPLITUDE]`.
    pub fn parse(s: &str) -> Result<Self> {
        let (head, tail) = s.split_once(':').map(|(a, b)| (a, Some(b))).unwrap_or((s, None));
        let nums = |t: &str| -> Result<Vec<f64>> {
            t.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad number '{x}' in model '{s}'")))).collect()
        };
        match (head, tail) {
            ("sphere" | "s2", None) => Ok(Self::unit_sphere()),
            ("sphere" | "s2", Some(t)) => Ok(GridModel::RoundSphere { radius_sq: nums(t)?[0] }),
            ("cp1" | "cp1-killing", None) => Ok(Self::killing_sphere()),
            ("torus" | "torus2", None) => Ok(Self::standard_torus()),
            ("torus" | "torus2", Some(t)) => {
                let v = nums(t)?;
                if v.len() != 2 {
                    return Err(Error::InvalidParameter(format!("torus needs two periods, got '{t}'")));
                }
                Ok(GridModel::FlatTorus { periods: [v[0], v[1]] })
            }
            ("conformal-torus", t) => {
                let v = match t {
                    Some(t) => nums(t)?,
                    None => vec![1.0],
                };
                Ok(GridModel::ConformalTorus { seed: v[0] as u64, amplitude: v.get(1).copied().unwrap_or(0.3) })
            }
            _ => Err(Error::InvalidParameter(format!("unknown grid model '{s}'"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            GridModel::FlatTorus { periods } if *periods == [2.0 * PI; 2] => "torus".into(),
            GridModel::FlatTorus { periods } => format!("torus:{},{}", periods[0], periods[1]),
            GridModel::ConformalTorus { seed, amplitude } => format!("conformal-torus:{seed},{amplitude}"),
            GridModel::RoundSphere { radius_sq } => format!("sphere:{radius_sq}"),
        }
    }

    pub fn atlas(&self, resolution: usize) -> Result<Arc<ChartAtlas>> {
        Ok(Arc::new(match self {
            GridModel::FlatTorus { periods } => ChartAtlas::torus(*periods, resolution)?,
            GridModel::ConformalTorus { .. } => ChartAtlas::standard_torus(resolution)?,
            GridModel::RoundSphere { .. } => ChartAtlas::sphere(resolution)?,
        }))
    }

    pub fn metric_on(&self, atlas: &Arc<ChartAtlas>) -> Result<MetricField> {
        let field = match self {
            GridModel::FlatTorus { .. } => Field::from_fn(atlas.clone(), FieldKind::Sym2, |_, _| [1.0, 0.0, 1.0]),
            GridModel::ConformalTorus { seed, amplitude } => {
                let phi = random_field(atlas, FieldKind::Scalar, *seed);
                let scale = amplitude / phi.max_abs().max(f64::MIN_POSITIVE);
                let data = phi.data().iter().flat_map(|p| {
                    let c = (2.0 * scale * p).exp();
                    [c, 0.0, c]
                });
                Field::new(atlas.clone(), FieldKind::Sym2, data.collect())?
            }
            GridModel::RoundSphere { radius_sq } => {
                if !(*radius_sq > 0.0) {
                    return Err(Error::InvalidParameter("sphere radius must be positive".into()));
                }
                Field::from_fn(atlas.clone(), FieldKind::Sym2, |_, u| {
                    let s = u[0] * u[0] + u[1] * u[1];
                    let c = radius_sq * 4.0 / ((1.0 + s) * (1.0 + s));
                    [c, 0.0, c]
                })
            }
        };
        MetricField::new(field)
    }

    /// Smallest resolution the model's atlas accepts.
    pub fn min_resolution(&self) -> usize {
        match self {
            GridModel::RoundSphere { .. } => 12,
            _ => crate::discrete_ops::atlas::MIN_RESOLUTION,
        }
    }

    pub fn metric(&self, resolution: usize) -> Result<MetricField> {
        self.metric_on(&self.atlas(resolution)?)
    }

    /// `c` with `Ric = c g`, when the model is Einstein.
    pub fn einstein_constant(&self) -> Option<f64> {
        match self {
            GridModel::FlatTorus { .. } => Some(0.0),
            GridModel::ConformalTorus { .. } => None,
            GridModel::RoundSphere { radius_sq } => Some(1.0 / radius_sq),
        }
    }
}
