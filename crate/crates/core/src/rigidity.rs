//! Rigidity criteria as decision procedures.
//!
//! Each criterion yields a [`CriterionRecord`] with one of three outcomes.
//! Mathematical inputs that are cited rather than computed enter as
//! [`EvidenceKind::External`] so a verdict always separates the two.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::f64::consts::PI;

use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete_ops::geometry::Mat2;
use crate::discrete_ops::atlas::{inversion_jacobian, NodeRef};
use crate::discrete_ops::Geometry;
use crate::error::{Error, Result};
use crate::model_spaces::{closed_form_spectrum, spectrum_contains, MetricTag, ModelName, ModelSpace, Rational};
use crate::rep_weights::dim_z_cpn;
use crate::soliton_core::GridModel;

/// `x` to ten significant digits.
pub fn sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 9 - x.abs().log10().floor() as i32;
    format!("{:.*}", digits.max(0) as usize, x)
}

/// `2 (sqrt 2 - 1) pi`, the diameter threshold for weak rigidity.
pub fn diameter_threshold() -> f64 {
    2.0 * (2f64.sqrt() - 1.0) * PI
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Certifies,
    FailsToCertify,
    Inapplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceKind {
    /// Exact rational arithmetic.
    Exact,
    /// A discrete computation with a stated error estimate.
    Numerical,
    /// A cited theorem, taken as an assumption.
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub kind: EvidenceKind,
    pub statement: String,
}

impl Evidence {
    fn exact(s: impl Into<String>) -> Self {
        Evidence { kind: EvidenceKind::Exact, statement: s.into() }
    }

    fn numerical(s: impl Into<String>) -> Self {
        Evidence { kind: EvidenceKind::Numerical, statement: s.into() }
    }

    fn external(s: impl Into<String>) -> Self {
        Evidence { kind: EvidenceKind::External, statement: format!("external: {}", s.into()) }
    }
}

/// What a certifying criterion establishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    SolRigid,
    WeaklyRigid,
    /// `Z = E`; sol-rigidity needs `E = 0` in addition.
    ZEqualsE,
    /// `E = 0`.
    ETrivial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionRecord {
    pub name: String,
    /// Inputs, with rationals in exact `p/q` form.
    pub inputs: BTreeMap<String, String>,
    pub outcome: Outcome,
    pub conclusion: Conclusion,
    pub evidence: Vec<Evidence>,
}

impl CriterionRecord {
    fn new(name: &str, conclusion: Conclusion, outcome: Outcome) -> Self {
        CriterionRecord { name: name.into(), inputs: BTreeMap::new(), outcome, conclusion, evidence: Vec::new() }
    }

    fn input(mut self, key: &str, value: impl ToString) -> Self {
        self.inputs.insert(key.into(), value.to_string());
        self
    }

    fn with(mut self, e: Evidence) -> Self {
        self.evidence.push(e);
        self
    }

    pub fn certifies(&self) -> bool {
        self.outcome == Outcome::Certifies
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    SolRigidCertified,
    WeaklyRigidCertified,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityVerdict {
    pub model: ModelSpace,
    pub criteria: Vec<CriterionRecord>,
    pub overall: Overall,
}

/// Combines criteria. Only certifying records count, so a failing
/// criterion never removes another one's conclusion.
pub fn combine(criteria: &[CriterionRecord]) -> Overall {
    let has = |c: Conclusion| criteria.iter().any(|r| r.certifies() && r.conclusion == c);
    if has(Conclusion::SolRigid) || (has(Conclusion::ZEqualsE) && has(Conclusion::ETrivial)) {
        Overall::SolRigidCertified
    } else if has(Conclusion::WeaklyRigid) {
        Overall::WeaklyRigidCertified
    } else {
        Overall::Undecided
    }
}

/// Exact test of `2 c` in the spectrum of a model with `Ric = c g`.
///
/// For `c = 1` this is `2 in Spec`; for the Killing metric (`c = 1/2`) it
/// is `1 in Spec`. Absence certifies `Z = E`.
pub fn spectral_z_equals_e(model: &ModelSpace) -> CriterionRecord {
    let base = CriterionRecord::new("spectral_z_equals_e", Conclusion::ZEqualsE, Outcome::Inapplicable)
        .input("model", model.name.label());
    let c = match model.einstein_constant {
        Some(c) if c.is_positive() => c,
        _ => return base.with(Evidence::exact("no positive Einstein constant")),
    };
    let lambda = c * Rational::from_integer(2);
    let mut k_max = 20;
    let (table, present) = loop {
        let table = match closed_form_spectrum(model, k_max) {
            Ok(t) => t,
            Err(e) => return base.with(Evidence::exact(e.to_string())),
        };
        match spectrum_contains(&table, lambda) {
            Ok(p) => break (table, p),
            Err(Error::TableTooShort { needed }) if needed > k_max => k_max = needed,
            Err(e) => return base.with(Evidence::exact(format!("membership undecided: {e}"))),
        }
    };
    let mut rec = CriterionRecord {
        outcome: if present { Outcome::FailsToCertify } else { Outcome::Certifies },
        ..base
    }
    .input("einstein_constant", c)
    .input("metric_tag", table.metric_tag)
    .input("lambda", lambda);
    let below = table.rows.iter().rfind(|r| r.eigenvalue < lambda);
    let above = table.rows.iter().find(|r| r.eigenvalue >= lambda);
    let fmt_row = |r: Option<&crate::model_spaces::SpectrumRow>| {
        r.map(|r| format!("lambda_{} = {}", r.k, r.eigenvalue)).unwrap_or_else(|| "none".into())
    };
    rec = rec.with(Evidence::exact(format!(
        "{lambda} {} Spec(-Delta) [{}]: nearest eigenvalues {} and {}",
        if present { "in" } else { "not in" },
        table.metric_tag,
        fmt_row(below),
        fmt_row(above),
    )));
    // The same question in the other normalization.
    let other = match table.metric_tag {
        MetricTag::Killing => Some(MetricTag::Normalized),
        MetricTag::Normalized => Some(MetricTag::Killing),
        MetricTag::Raw => None,
    };
    if let Some(tag) = other {
        let factor = if tag == MetricTag::Normalized { Rational::from_integer(2) } else { Rational::new(1, 2) };
        if let Ok(t) = table.renormalized(tag) {
            let agree = spectrum_contains(&t, lambda * factor).ok() == Some(present);
            rec = rec.with(Evidence::exact(format!(
                "{}: membership of {} in the {tag} spectrum",
                if agree { "consistent" } else { "inconsistent" },
                lambda * factor,
            )));
        }
    }
    rec
}

/// Pinching criterion for `Ric = g`: certifies iff `K_min >= 1/n` and
/// `K_min / K_max > (n - 2) / (3n)`.
pub fn pinching_test(n: u32, k_min: Rational, k_max: Rational) -> Result<CriterionRecord> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("pinching needs n >= 2, got {n}")));
    }
    let rec = CriterionRecord::new("pinching", Conclusion::SolRigid, Outcome::Inapplicable)
        .input("n", n)
        .input("k_min", k_min)
        .input("k_max", k_max);
    if !k_min.is_positive() || !k_max.is_positive() {
        return Ok(rec.with(Evidence::exact("curvature bounds must be positive")));
    }
    if k_min > k_max {
        return Err(Error::InvalidParameter(format!("k_min {k_min} exceeds k_max {k_max}")));
    }
    let n_r = Rational::from_integer(n as i64);
    let delta = k_min / k_max;
    let floor = n_r.recip();
    let threshold = (n_r - 2) / (n_r * 3);
    let first = k_min >= floor;
    let second = delta > threshold;
    Ok(CriterionRecord { outcome: if first && second { Outcome::Certifies } else { Outcome::FailsToCertify }, ..rec }
        .input("delta", delta)
        .with(Evidence::exact(format!("k_min = {k_min} {} 1/n = {floor}", if first { ">=" } else { "<" })))
        .with(Evidence::exact(format!("delta = {delta} {} (n-2)/(3n) = {threshold}", if second { ">" } else { "<=" }))))
}

/// `D = d * sqrt(avg(s) / n)` with an error estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterValue {
    pub value: f64,
    pub diameter: f64,
    pub mean_scalar: f64,
    pub dim: u32,
    /// Zero for closed forms.
    pub uncertainty: f64,
    pub method: String,
}

/// Closed-form `D` of a model. `None` if the model carries no diameter or
/// has nonpositive scalar curvature.
pub fn diameter_functional_model(model: &ModelSpace) -> Option<DiameterValue> {
    let d = model.diameter?;
    let c = model.einstein_constant?;
    if !c.is_positive() {
        return None;
    }
    let n = model.real_dim;
    let mean_scalar = (c * Rational::from_integer(n as i64)).to_f64()?;
    Some(DiameterValue {
        value: d * c.to_f64()?.sqrt(),
        diameter: d,
        mean_scalar,
        dim: n,
        uncertainty: 0.0,
        method: "closed form".into(),
    })
}

#[derive(Clone, Copy, PartialEq)]
struct Visit(f64, usize);

impl Eq for Visit {}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| self.1.cmp(&other.1))
    }
}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Weighted graph on the owned nodes of an atlas.
pub struct GridGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

/// Largest offset, in cells, of a graph edge. Primitive offsets up to this
/// size keep the direction bias of the path metric below half a percent.
const REACH: isize = 3;

fn metric_length(g: &Mat2, d: [f64; 2]) -> f64 {
    (g[0][0] * d[0] * d[0] + 2.0 * g[0][1] * d[0] * d[1] + g[1][1] * d[1] * d[1]).sqrt()
}

fn avg(a: &Mat2, b: &Mat2) -> Mat2 {
    [[0.5 * (a[0][0] + b[0][0]), 0.5 * (a[0][1] + b[0][1])], [0.5 * (a[1][0] + b[1][0]), 0.5 * (a[1][1] + b[1][1])]]
}

impl GridGraph {
    /// Edges to all primitive offsets within [`REACH`] cells in each chart,
    /// weighted by the endpoint-averaged metric. On the sphere each node is
    /// also joined to the nodes of the other chart within the same reach.
    pub fn new(geo: &Geometry) -> Self {
        let atlas = geo.atlas();
        let nodes = atlas.owned_nodes();
        let charts = atlas.charts();
        let mut index: Vec<Vec<usize>> = charts.iter().map(|c| vec![usize::MAX; c.node_count()]).collect();
        for (p, r) in nodes.iter().enumerate() {
            index[r.chart][r.i * charts[r.chart].nodes[1] + r.j] = p;
        }
        let lookup = |chart: usize, i: isize, j: isize| -> Option<usize> {
            let ch = &charts[chart];
            let (ni, nj) = (ch.nodes[0] as isize, ch.nodes[1] as isize);
            let i = if ch.periodic[0] { i.rem_euclid(ni) } else { i };
            let j = if ch.periodic[1] { j.rem_euclid(nj) } else { j };
            if i < 0 || j < 0 || i >= ni || j >= nj {
                return None;
            }
            let q = index[chart][(i * nj + j) as usize];
            (q != usize::MAX).then_some(q)
        };
        let mut offsets = Vec::new();
        for di in -REACH..=REACH {
            for dj in -REACH..=REACH {
                if num_integer::gcd(di, dj) == 1 {
                    offsets.push((di, dj));
                }
            }
        }
        let mut adjacency: Vec<Vec<(usize, f64)>> = (0..nodes.len())
            .into_par_iter()
            .map(|p| {
                let NodeRef { chart, i, j } = nodes[p];
                let h = atlas.spacing(chart);
                offsets
                    .iter()
                    .filter_map(|&(di, dj)| {
                        let q = lookup(chart, i as isize + di, j as isize + dj)?;
                        let g = avg(&geo.node(p).g, &geo.node(q).g);
                        Some((q, metric_length(&g, [di as f64 * h[0], dj as f64 * h[1]])))
                    })
                    .collect()
            })
            .collect();
        if atlas.is_sphere() {
            for p in 0..nodes.len() {
                let r = nodes[p];
                let u = atlas.coord(p);
                let s = u[0] * u[0] + u[1] * u[1];
                if s == 0.0 {
                    continue;
                }
                let other = 1 - r.chart;
                let ch = &charts[other];
                let h = ch.spacing();
                let v = [u[0] / s, u[1] / s];
                // Metric of p in the other chart: g_v = J^T g_u J with J = du/dv.
                let jac = inversion_jacobian(v);
                let gu = &geo.node(p).g;
                let mut gv = [[0.0; 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        gv[a][b] = (0..2).flat_map(|k| (0..2).map(move |l| (k, l))).map(|(k, l)| jac[k][a] * gu[k][l] * jac[l][b]).sum();
                    }
                }
                let i0 = ((v[0] - ch.lower[0]) / h[0]).round() as isize;
                let j0 = ((v[1] - ch.lower[1]) / h[1]).round() as isize;
                for di in -REACH..=REACH {
                    for dj in -REACH..=REACH {
                        if let Some(q) = lookup(other, i0 + di, j0 + dj) {
                            let c = atlas.coord(q);
                            let w = metric_length(&avg(&gv, &geo.node(q).g), [c[0] - v[0], c[1] - v[1]]);
                            adjacency[p].push((q, w));
                        }
                    }
                }
            }
        }
        GridGraph { adjacency }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Shortest-path distances from `source`.
    pub fn distances(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Visit(0.0, source));
        while let Some(Visit(d, p)) = heap.pop() {
            if d > dist[p] {
                continue;
            }
            for &(q, w) in &self.adjacency[p] {
                let nd = d + w;
                if nd < dist[q] {
                    dist[q] = nd;
                    heap.push(Visit(nd, q));
                }
            }
        }
        dist
    }

    /// Graph diameter by repeated double sweeps from `starts` seeds
    /// spread over the node list. Exact on graphs where the farthest point
    /// of a farthest point realizes the diameter.
    pub fn diameter(&self, starts: usize) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        let farthest = |d: &[f64]| -> (usize, f64) {
            d.iter().copied().enumerate().fold((0, 0.0), |best, (i, x)| if x > best.1 { (i, x) } else { best })
        };
        (0..starts.max(1))
            .into_par_iter()
            .map(|s| {
                let mut src = s * n / starts.max(1);
                let mut best = 0.0f64;
                for _ in 0..3 {
                    let (far, ecc) = farthest(&self.distances(src));
                    best = best.max(ecc);
                    src = far;
                }
                best
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Graph-geodesic `D` of a grid metric, without an error estimate.
pub fn diameter_functional_grid(geo: &Geometry) -> Result<DiameterValue> {
    let weights = geo.quadrature_weights();
    let volume: f64 = weights.iter().sum();
    let total: f64 = geo.nodes().iter().zip(weights).map(|(ng, w)| ng.scalar * w).sum();
    let mean_scalar = total / volume;
    let dim = geo.dim() as u32;
    if !(mean_scalar > 0.0) {
        return Err(Error::Precondition(format!("average scalar curvature {mean_scalar:.6e} is not positive")));
    }
    let diameter = GridGraph::new(geo).diameter(4);
    Ok(DiameterValue {
        value: diameter * (mean_scalar / dim as f64).sqrt(),
        diameter,
        mean_scalar,
        dim,
        uncertainty: 0.0,
        method: format!("shortest paths on the weighted grid graph, resolution {}", geo.atlas().resolution()),
    })
}

/// Grid `D` at `resolution`, with the difference to half resolution as its
/// first-order error estimate.
pub fn diameter_functional_refined(model: &GridModel, resolution: usize) -> Result<DiameterValue> {
    let coarse = (resolution / 2).max(model.min_resolution());
    let fine = diameter_functional_grid(&Geometry::new(model.metric(resolution)?))?;
    let rough = diameter_functional_grid(&Geometry::new(model.metric(coarse)?))?;
    Ok(DiameterValue {
        uncertainty: (fine.value - rough.value).abs(),
        method: format!("{}, error estimate from resolution {coarse}", fine.method),
        ..fine
    })
}

/// Certifies weak rigidity iff `D + uncertainty < 2 (sqrt 2 - 1) pi`.
pub fn diameter_test(value: Option<&DiameterValue>) -> CriterionRecord {
    let threshold = diameter_threshold();
    let rec = CriterionRecord::new("diameter", Conclusion::WeaklyRigid, Outcome::Inapplicable)
        .input("threshold", sig10(threshold));
    let Some(v) = value else {
        return rec.with(Evidence::exact("no diameter or nonpositive average scalar curvature"));
    };
    if !(v.mean_scalar > 0.0) {
        return rec.with(Evidence::exact("nonpositive average scalar curvature"));
    }
    let certifies = v.value + v.uncertainty < threshold;
    let kind = if v.uncertainty == 0.0 { Evidence::exact } else { Evidence::numerical };
    CriterionRecord { outcome: if certifies { Outcome::Certifies } else { Outcome::FailsToCertify }, ..rec }
        .input("d", sig10(v.diameter))
        .input("mean_scalar", sig10(v.mean_scalar))
        .input("n", v.dim)
        .with(kind(format!(
            "D = {} (+/- {:.3e}, {}) {} 2(sqrt 2 - 1) pi = {}",
            sig10(v.value),
            v.uncertainty,
            v.method,
            if certifies { "<" } else { ">=" },
            sig10(threshold)
        )))
}

/// Pinching in the `Ric = g` scale of an Einstein model.
fn normalized_pinching(model: &ModelSpace) -> Result<CriterionRecord> {
    match (model.einstein_constant, model.curv_min, model.curv_max) {
        (Some(c), Some(lo), Some(hi)) if c.is_positive() => {
            // Scaling g to c g keeps Ric and divides sectional curvature by c.
            pinching_test(model.real_dim, lo / c, hi / c)
        }
        _ => Ok(CriterionRecord::new("pinching", Conclusion::SolRigid, Outcome::Inapplicable)
            .input("model", model.name.label())
            .with(Evidence::exact("no positive Einstein constant or curvature bounds"))),
    }
}

/// Case analysis for the compact rank-one symmetric spaces.
pub fn rank_one_verdict(model: &ModelSpace) -> Result<RigidityVerdict> {
    let mut criteria = Vec::new();
    let sphere_like = matches!(model.name, ModelName::RoundSphere { n, .. } if n >= 2)
        || matches!(model.name, ModelName::Cp1Killing | ModelName::CpnSymbolic { n: 1 });
    match &model.name {
        _ if sphere_like => {
            criteria.push(
                CriterionRecord::new("two_positive_curvature", Conclusion::SolRigid, Outcome::Certifies)
                    .input("model", model.name.label())
                    .with(Evidence::external(
                        "2-positive curvature; shrinking solitons with 2-positive curvature are round (Bohm-Wilking)",
                    )),
            );
            criteria.push(spectral_z_equals_e(model));
        }
        ModelName::HpnSpectral { .. } | ModelName::Cap2Spectral => {
            criteria.push(
                CriterionRecord::new("e_trivial", Conclusion::ETrivial, Outcome::Certifies)
                    .input("model", model.name.label())
                    .with(Evidence::external("E = 0 for the symmetric metric (Koiso)")),
            );
            criteria.push(spectral_z_equals_e(model));
        }
        ModelName::CpnSymbolic { n } => {
            let dims = dim_z_cpn(*n as usize)?;
            criteria.push(
                CriterionRecord::new("e_trivial", Conclusion::ETrivial, Outcome::Certifies)
                    .input("model", model.name.label())
                    .with(Evidence::external("E = 0 for the symmetric metric (Koiso)")),
            );
            criteria.push(spectral_z_equals_e(model));
            criteria.push(
                CriterionRecord::new("z_dimension", Conclusion::ZEqualsE, Outcome::FailsToCertify)
                    .input("n", n)
                    .input("dim_z", dims.dim_z)
                    .with(Evidence::exact(format!(
                        "dim Z = {} = dim su({}) from K-weight multisets, hom multiplicity {}",
                        dims.dim_z,
                        n + 1,
                        dims.m
                    )))
                    .with(Evidence::exact(format!("dim Z = {} > dim E = 0", dims.dim_z))),
            );
        }
        other => return Err(Error::Unsupported(format!("rank-one verdict for {}", other.label()))),
    }
    criteria.push(normalized_pinching(model)?);
    criteria.push(diameter_test(diameter_functional_model(model).as_ref()));
    let overall = combine(&criteria);
    Ok(RigidityVerdict { model: model.clone(), criteria, overall })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_spaces::make_model;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn pinching_examples() {
        assert!(pinching_test(4, r(3, 10), r(1, 1)).unwrap().certifies());
        assert_eq!(pinching_test(4, r(1, 5), r(1, 1)).unwrap().outcome, Outcome::FailsToCertify);
        assert!(pinching_test(2, r(1, 2), r(100, 1)).unwrap().certifies());
        assert_eq!(pinching_test(2, r(49, 100), r(1, 2)).unwrap().outcome, Outcome::FailsToCertify);
        assert_eq!(pinching_test(3, r(0, 1), r(1, 1)).unwrap().outcome, Outcome::Inapplicable);
        assert!(pinching_test(3, r(1, 2), r(1, 3)).is_err());
    }

    #[test]
    fn spectral_examples() {
        let hp2 = make_model(ModelName::HpnSpectral { n: 2 }).unwrap();
        let cap2 = make_model(ModelName::Cap2Spectral).unwrap();
        let s2 = make_model(ModelName::unit_sphere(2)).unwrap();
        let cp3 = make_model(ModelName::CpnSymbolic { n: 3 }).unwrap();
        assert!(spectral_z_equals_e(&hp2).certifies());
        assert!(spectral_z_equals_e(&cap2).certifies());
        assert_eq!(spectral_z_equals_e(&s2).outcome, Outcome::FailsToCertify);
        assert_eq!(spectral_z_equals_e(&cp3).outcome, Outcome::Inapplicable);
        assert!(spectral_z_equals_e(&hp2).evidence.iter().all(|e| !e.statement.starts_with("inconsistent")));
    }

    #[test]
    fn verdict_examples() {
        let hp2 = rank_one_verdict(&make_model(ModelName::HpnSpectral { n: 2 }).unwrap()).unwrap();
        assert_eq!(hp2.overall, Overall::SolRigidCertified);
        let cp3 = rank_one_verdict(&make_model(ModelName::CpnSymbolic { n: 3 }).unwrap()).unwrap();
        assert_eq!(cp3.overall, Overall::Undecided);
        assert!(cp3.criteria.iter().any(|c| c.inputs.get("dim_z").map(String::as_str) == Some("15")));
        let s5 = rank_one_verdict(&make_model(ModelName::unit_sphere(5)).unwrap()).unwrap();
        assert_eq!(s5.overall, Overall::SolRigidCertified);
        assert!(s5.criteria[0].evidence[0].statement.starts_with("external: 2-positive curvature"));
        assert!(rank_one_verdict(&make_model(ModelName::standard_torus(2)).unwrap()).is_err());
    }

    #[test]
    fn unit_sphere_diameter_fails() {
        let s2 = make_model(ModelName::unit_sphere(2)).unwrap();
        let v = diameter_functional_model(&s2).unwrap();
        assert!((v.value - PI).abs() < 1e-15);
        let rec = diameter_test(Some(&v));
        assert_eq!(rec.outcome, Outcome::FailsToCertify);
        assert_eq!(rec.inputs["threshold"], "2.602580569");
    }

    #[test]
    fn failing_criterion_keeps_certification() {
        let good = CriterionRecord::new("a", Conclusion::SolRigid, Outcome::Certifies);
        let bad = CriterionRecord::new("b", Conclusion::WeaklyRigid, Outcome::FailsToCertify);
        assert_eq!(combine(&[good.clone(), bad.clone()]), Overall::SolRigidCertified);
        assert_eq!(combine(&[bad, good]), Overall::SolRigidCertified);
    }

    proptest! {
        #[test]
        fn pinching_is_monotone(n in 2u32..9, a in 1i64..60, b in 0i64..60, up in 0i64..40) {
            let k_max = r(a + b, 60);
            let k_min = r(a, 60);
            let raised = (k_min + r(up, 60)).min(k_max);
            let before = pinching_test(n, k_min, k_max).unwrap();
            let after = pinching_test(n, raised, k_max).unwrap();
            prop_assert!(!(before.certifies() && !after.certifies()));
        }

        #[test]
        fn sphere_diameter_never_certifies(n in 2u32..9, num in 1i64..50, den in 1i64..50) {
            let m = make_model(ModelName::round_sphere(n, r(num, den))).unwrap();
            let v = diameter_functional_model(&m).unwrap();
            prop_assert!((v.value - PI * ((n - 1) as f64).sqrt()).abs() < 1e-12 * v.value);
            prop_assert_eq!(diameter_test(Some(&v)).outcome, Outcome::FailsToCertify);
        }
    }
}
