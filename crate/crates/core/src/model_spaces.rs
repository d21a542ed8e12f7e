//! Closed-form model geometries and their exact Laplace spectra.
//!
//! Eigenvalues are exact rationals. Tables start at `k = 0` with the
//! constant eigenfunction. The projective spaces `HP^n` and `CaP^2` are
//! tabulated for the metric induced by the Cartan-Killing form, where
//! `Ric = g/2`; their multiplicities are left unknown.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use num_integer::binomial;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational used for spectra and curvature constants.
pub type Rational = Ratio<i64>;

pub const MAX_SPHERE_DIM: u32 = 8;
pub const MAX_CPN_DIM: u32 = 8;
pub const MAX_HPN_DIM: u32 = 4;
pub const MAX_TORUS_DIM: u32 = 4;

/// Which Einstein normalization a spectrum refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricTag {
    /// `Ric = g`.
    Normalized,
    /// `Ric = g/2`, the Cartan-Killing metric of a compact symmetric space.
    Killing,
    /// Any other scale (flat tori, spheres of arbitrary radius).
    Raw,
}

impl fmt::Display for MetricTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricTag::Normalized => "normalized",
            MetricTag::Killing => "killing",
            MetricTag::Raw => "raw",
        })
    }
}

/// Named closed-form geometry.
///
/// Sphere radii are stored through their exact square and torus periods
/// as `2*pi*q` with rational `q`, so every spectrum stays rational.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelName {
    RoundSphere { n: u32, radius_sq: Rational },
    FlatTorus { n: u32, period_over_2pi: Vec<Rational> },
    Cp1Killing,
    CpnSymbolic { n: u32 },
    HpnSpectral { n: u32 },
    Cap2Spectral,
}

impl ModelName {
    pub fn round_sphere(n: u32, radius_sq: Rational) -> Self {
        ModelName::RoundSphere { n, radius_sq }
    }

    pub fn unit_sphere(n: u32) -> Self {
        Self::round_sphere(n, Rational::from_integer(1))
    }

    /// Flat torus with every period equal to `2*pi`.
    pub fn standard_torus(n: u32) -> Self {
        ModelName::FlatTorus { n, period_over_2pi: vec![Rational::from_integer(1); n as usize] }
    }

    /// Short label used in reports and CLI selectors.
    pub fn label(&self) -> String {
        match self {
            ModelName::RoundSphere { n, radius_sq } => format!("S^{n}(r^2={radius_sq})"),
            ModelName::FlatTorus { n, .. } => format!("T^{n}"),
            ModelName::Cp1Killing => "CP^1(killing)".into(),
            ModelName::CpnSymbolic { n } => format!("CP^{n}"),
            ModelName::HpnSpectral { n } => format!("HP^{n}"),
            ModelName::Cap2Spectral => "CaP^2".into(),
        }
    }
}

/// Fully populated descriptor for a model geometry.
///
/// `volume` and `diameter` are `None` where no closed form is carried
/// (the projective spaces). Curvature bounds are sectional curvatures in
/// units of 1/length^2 for the stored normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpace {
    pub name: ModelName,
    pub real_dim: u32,
    pub einstein_constant: Option<Rational>,
    pub volume: Option<f64>,
    pub diameter: Option<f64>,
    pub curv_min: Option<Rational>,
    pub curv_max: Option<Rational>,
}

/// Volume of the unit round sphere `S^n`.
pub fn unit_sphere_volume(n: u32) -> f64 {
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * unit_sphere_volume(n - 2),
    }
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// Builds the descriptor for `name`, validating parameters.
pub fn make_model(name: ModelName) -> Result<ModelSpace> {
    match name.clone() {
        ModelName::RoundSphere { n, radius_sq } => {
            if !(1..=MAX_SPHERE_DIM).contains(&n) {
                return Err(Error::Unsupported(format!("sphere dimension {n} outside 1..={MAX_SPHERE_DIM}")));
            }
            if radius_sq <= Rational::zero() {
                return Err(Error::InvalidParameter("sphere radius must be positive".into()));
            }
            let r = radius_sq.to_f64().unwrap().sqrt();
            let k = radius_sq.recip();
            Ok(ModelSpace {
                real_dim: n,
                einstein_constant: Some(Rational::from_integer(n as i64 - 1) * k),
                volume: Some(unit_sphere_volume(n) * r.powi(n as i32)),
                diameter: Some(PI * r),
                curv_min: Some(k),
                curv_max: Some(k),
                name,
            })
        }
        ModelName::FlatTorus { n, period_over_2pi } => {
            if !(1..=MAX_TORUS_DIM).contains(&n) {
                return Err(Error::Unsupported(format!("torus dimension {n} outside 1..={MAX_TORUS_DIM}")));
            }
            if period_over_2pi.len() != n as usize {
                return Err(Error::InvalidParameter(format!(
                    "torus of dimension {n} needs {n} periods, got {}",
                    period_over_2pi.len()
                )));
            }
            if period_over_2pi.iter().any(|q| *q <= Rational::zero()) {
                return Err(Error::InvalidParameter("torus periods must be positive".into()));
            }
            let periods: Vec<f64> = period_over_2pi.iter().map(|q| 2.0 * PI * q.to_f64().unwrap()).collect();
            Ok(ModelSpace {
                real_dim: n,
                einstein_constant: Some(Rational::zero()),
                volume: Some(periods.iter().product()),
                diameter: Some(0.5 * periods.iter().map(|p| p * p).sum::<f64>().sqrt()),
                curv_min: Some(Rational::zero()),
                curv_max: Some(Rational::zero()),
                name,
            })
        }
        ModelName::Cp1Killing => {
            let mut m = make_model(ModelName::round_sphere(2, Rational::from_integer(2)))?;
            m.name = name;
            Ok(m)
        }
        // Killing metric, Ric = g/2. Sectional curvature lies in [kappa, 4 kappa]
        // with Ric = 2(n+1) kappa (CP^n), 4(n+2) kappa (HP^n), 36 kappa (CaP^2).
        ModelName::CpnSymbolic { n } => {
            if !(1..=MAX_CPN_DIM).contains(&n) {
                return Err(Error::Unsupported(format!("CP^n needs 1 <= n <= {MAX_CPN_DIM}, got {n}")));
            }
            let kappa = rat(1, 4 * (n as i64 + 1));
            Ok(projective(name, 2 * n, kappa))
        }
        ModelName::HpnSpectral { n } => {
            if !(1..=MAX_HPN_DIM).contains(&n) {
                return Err(Error::Unsupported(format!("HP^n needs 1 <= n <= {MAX_HPN_DIM}, got {n}")));
            }
            let kappa = rat(1, 8 * (n as i64 + 2));
            Ok(projective(name, 4 * n, kappa))
        }
        ModelName::Cap2Spectral => Ok(projective(name, 16, rat(1, 72))),
    }
}

fn projective(name: ModelName, real_dim: u32, kappa: Rational) -> ModelSpace {
    ModelSpace {
        name,
        real_dim,
        einstein_constant: Some(rat(1, 2)),
        volume: None,
        diameter: None,
        curv_min: Some(kappa),
        curv_max: Some(kappa * 4),
    }
}

/// One row of a spectrum table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub k: u64,
    pub eigenvalue: Rational,
    /// `None` when the multiplicity is not known in closed form.
    pub multiplicity: Option<u64>,
}

/// Exact eigenvalues of `-Delta` on functions, strictly increasing in `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub model: ModelName,
    pub metric_tag: MetricTag,
    pub rows: Vec<SpectrumRow>,
}

fn metric_tag_for(einstein: Option<Rational>) -> MetricTag {
    match einstein {
        Some(c) if c == Rational::from_integer(1) => MetricTag::Normalized,
        Some(c) if c == rat(1, 2) => MetricTag::Killing,
        _ => MetricTag::Raw,
    }
}

/// `k`-th eigenvalue and multiplicity for families indexed by a degree.
fn degree_eigenvalue(name: &ModelName, k: u64) -> Option<(Rational, Option<u64>)> {
    let ki = k as i64;
    match name {
        ModelName::RoundSphere { n, radius_sq } => {
            let n = *n as i64;
            let mult = if n == 1 {
                if k == 0 { 1 } else { 2 }
            } else {
                let top = binomial(n + ki, ki);
                let low = if ki >= 2 { binomial(n + ki - 2, ki - 2) } else { 0 };
                (top - low) as u64
            };
            Some((Rational::from_integer(ki * (ki + n - 1)) / radius_sq, Some(mult)))
        }
        ModelName::Cp1Killing => Some((rat(ki * (ki + 1), 2), Some(2 * k + 1))),
        ModelName::HpnSpectral { n } => {
            let n = *n as i64;
            Some((rat(ki * ki + ki * (2 * n + 1), 2 * (n + 2)), None))
        }
        ModelName::Cap2Spectral => Some((rat(ki * ki + 11 * ki, 18), None)),
        _ => None,
    }
}

/// Distinct torus eigenvalues `sum m_i^2 / q_i^2` with lattice counts.
fn torus_rows(q: &[Rational], k_max: u64) -> Vec<SpectrumRow> {
    let inv_sq: Vec<Rational> = q.iter().map(|q| (q * q).recip()).collect();
    let min_step = inv_sq.iter().copied().min().unwrap();
    let mut bound: i64 = 2;
    loop {
        let mut counts: std::collections::BTreeMap<Rational, u64> = Default::default();
        let dim = q.len();
        let side = (2 * bound + 1) as usize;
        let total = side.pow(dim as u32);
        for code in 0..total {
            let mut c = code;
            let mut lam = Rational::zero();
            for w in &inv_sq {
                let m = (c % side) as i64 - bound;
                c /= side;
                lam += w * Rational::from_integer(m * m);
            }
            *counts.entry(lam).or_default() += 1;
        }
        // Any lattice point outside the box has eigenvalue >= (bound+1)^2 * min_step.
        let safe = min_step * Rational::from_integer((bound + 1) * (bound + 1));
        let rows: Vec<SpectrumRow> = counts
            .into_iter()
            .take_while(|(lam, _)| *lam < safe)
            .enumerate()
            .map(|(k, (eigenvalue, m))| SpectrumRow { k: k as u64, eigenvalue, multiplicity: Some(m) })
            .collect();
        if rows.len() as u64 > k_max {
            return rows.into_iter().take(k_max as usize + 1).collect();
        }
        bound *= 2;
    }
}

/// Exact spectrum of `-Delta` for indices `0..=k_max`.
pub fn closed_form_spectrum(model: &ModelSpace, k_max: u64) -> Result<SpectrumTable> {
    if k_max < 1 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let tag = match &model.name {
        ModelName::HpnSpectral { .. } | ModelName::Cap2Spectral | ModelName::Cp1Killing => MetricTag::Killing,
        _ => metric_tag_for(model.einstein_constant),
    };
    let rows = match &model.name {
        ModelName::CpnSymbolic { n } => {
            return Err(Error::NoClosedForm(format!("CP^{n}")));
        }
        ModelName::FlatTorus { period_over_2pi, .. } => torus_rows(period_over_2pi, k_max),
        name => (0..=k_max)
            .map(|k| {
                let (eigenvalue, multiplicity) = degree_eigenvalue(name, k).expect("degree family");
                SpectrumRow { k, eigenvalue, multiplicity }
            })
            .collect(),
    };
    Ok(SpectrumTable { model: model.name.clone(), metric_tag: tag, rows })
}

impl SpectrumTable {
    /// Rescales to another normalization. Only `Killing <-> Normalized` is
    /// defined: halving the metric doubles every eigenvalue.
    pub fn renormalized(&self, to: MetricTag) -> Result<SpectrumTable> {
        let factor = match (self.metric_tag, to) {
            (a, b) if a == b => Rational::from_integer(1),
            (MetricTag::Killing, MetricTag::Normalized) => Rational::from_integer(2),
            (MetricTag::Normalized, MetricTag::Killing) => rat(1, 2),
            (a, b) => return Err(Error::InvalidParameter(format!("cannot convert {a} spectrum to {b}"))),
        };
        Ok(SpectrumTable {
            model: self.model.clone(),
            metric_tag: to,
            rows: self
                .rows
                .iter()
                .map(|r| SpectrumRow { eigenvalue: r.eigenvalue * factor, ..r.clone() })
                .collect(),
        })
    }

    /// Writes `k,eigenvalue_num,eigenvalue_den,multiplicity,metric_tag`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,eigenvalue_num,eigenvalue_den,multiplicity,metric_tag")?;
        for r in &self.rows {
            let mult = r.multiplicity.map(|m| m.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", r.k, r.eigenvalue.numer(), r.eigenvalue.denom(), mult, self.metric_tag)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }

    /// Smallest table length that would decide membership of `lambda`.
    fn required_k_max(&self, lambda: Rational) -> u64 {
        let scale = self.rows.get(1).and_then(|r1| {
            degree_eigenvalue(&self.model, 1).map(|(base, _)| r1.eigenvalue / base)
        });
        match scale {
            Some(s) => {
                let mut k = self.rows.len() as u64;
                while degree_eigenvalue(&self.model, k).map(|(e, _)| e * s <= lambda).unwrap_or(false) {
                    k += 1;
                }
                k
            }
            None => 2 * self.rows.len() as u64,
        }
    }
}

/// Exact membership of `lambda` in the tabulated spectrum.
///
/// Decides as soon as a tabulated eigenvalue reaches `lambda`; otherwise
/// reports how many rows are needed.
pub fn spectrum_contains(table: &SpectrumTable, lambda: Rational) -> Result<bool> {
    for r in &table.rows {
        if r.eigenvalue == lambda {
            return Ok(true);
        }
        if r.eigenvalue > lambda {
            return Ok(false);
        }
    }
    Err(Error::TableTooShort { needed: table.required_k_max(lambda) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_multiplicities_match_harmonic_dimensions() {
        let m = make_model(ModelName::unit_sphere(3)).unwrap();
        let t = closed_form_spectrum(&m, 3).unwrap();
        let mults: Vec<u64> = t.rows.iter().map(|r| r.multiplicity.unwrap()).collect();
        assert_eq!(mults, vec![1, 4, 9, 16]);
    }

    #[test]
    fn torus_spectrum_counts_lattice_points() {
        let m = make_model(ModelName::standard_torus(2)).unwrap();
        let t = closed_form_spectrum(&m, 4).unwrap();
        let vals: Vec<i64> = t.rows.iter().map(|r| r.eigenvalue.to_integer()).collect();
        let mults: Vec<u64> = t.rows.iter().map(|r| r.multiplicity.unwrap()).collect();
        assert_eq!(vals, vec![0, 1, 2, 4, 5]);
        assert_eq!(mults, vec![1, 4, 4, 4, 8]);
    }

    #[test]
    fn short_table_reports_needed_length() {
        let m = make_model(ModelName::HpnSpectral { n: 2 }).unwrap();
        let t = closed_form_spectrum(&m, 1).unwrap();
        match spectrum_contains(&t, Rational::from_integer(5)) {
            Err(Error::TableTooShort { needed }) => {
                // (k^2 + 5k)/8 first exceeds 5 at k = 5.
                assert_eq!(needed, 5);
                let t = closed_form_spectrum(&m, needed).unwrap();
                assert!(spectrum_contains(&t, Rational::from_integer(5)).is_ok());
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
