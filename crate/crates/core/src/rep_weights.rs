//! Weight multisets for `CP^n = SU(n+1)/S(U(1) x U(n))`.
//!
//! The isotropy group `K = S(U(1) x U(n))` is identified with `U(n)` via
//! `(det A^{-1}, A) <- A`. A `K`-weight is therefore an integer vector
//! `m = (m_1, .., m_n)` in the standard torus of `U(n)`; its central charge
//! is `m_1 + .. + m_n`. On the torus of `SU(n+1)` with coordinates
//! `eps_0, .., eps_n` (summing to zero) the restriction is
//! `eps_0 -> -(e_1 + .. + e_n)` and `eps_a -> e_a`.
//!
//! Irreducible `K`-modules are indexed by non-increasing highest weights;
//! their weight multiplicities come from Freudenthal's formula on the
//! `gl(n)` root system with the standard inner product.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_N: usize = 2;
pub const MAX_N: usize = 8;

/// Integer weight in `U(n)` torus coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Weight(pub Vec<i64>);

impl Weight {
    pub fn zero(n: usize) -> Self {
        Weight(vec![0; n])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Charge under the centre of `U(n)`.
    pub fn central_charge(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn is_dominant(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }

    fn sorted_desc(&self) -> Weight {
        let mut v = self.0.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        Weight(v)
    }

    fn add(&self, other: &Weight) -> Weight {
        Weight(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn neg(&self) -> Weight {
        Weight(self.0.iter().map(|a| -a).collect())
    }
}

/// A finite `K`-module given by its weight multiset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KModule {
    pub name: String,
    pub n: usize,
    pub weights: BTreeMap<Weight, u64>,
}

impl KModule {
    pub fn from_weights(name: impl Into<String>, n: usize, weights: impl IntoIterator<Item = Weight>) -> Self {
        let mut map = BTreeMap::new();
        for w in weights {
            assert_eq!(w.rank(), n, "weight rank");
            *map.entry(w).or_insert(0) += 1;
        }
        KModule { name: name.into(), n, weights: map }
    }

    pub fn dim(&self) -> u64 {
        self.weights.values().sum()
    }

    /// True when the multiset is invariant under permuting coordinates.
    pub fn is_weyl_symmetric(&self) -> bool {
        self.weights.iter().all(|(w, &m)| {
            (0..self.n.saturating_sub(1)).all(|i| {
                let mut s = w.clone();
                s.0.swap(i, i + 1);
                self.weights.get(&s) == Some(&m)
            })
        })
    }
}

fn check_n(n: usize) -> Result<()> {
    if !(MIN_N..=MAX_N).contains(&n) {
        return Err(Error::InvalidParameter(format!("n = {n} outside {MIN_N}..={MAX_N}")));
    }
    Ok(())
}

fn unit(n: usize, a: usize) -> Weight {
    let mut v = vec![0; n];
    v[a] = 1;
    Weight(v)
}

/// Weights `1 + e_b` of the charge-`(+)` half of the isotropy module.
fn isotropy_plus(n: usize) -> Vec<Weight> {
    (0..n).map(|b| Weight(vec![1; n]).add(&unit(n, b))).collect()
}

/// Restriction of `sl(n+1, C)` to `K`.
pub fn adjoint_module(n: usize) -> Result<KModule> {
    check_n(n)?;
    let mut ws = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                ws.push(Weight(unit(n, a).0.iter().zip(&unit(n, b).0).map(|(x, y)| x - y).collect()));
            }
        }
    }
    for w in isotropy_plus(n) {
        ws.push(w.neg());
        ws.push(w);
    }
    ws.extend(std::iter::repeat_n(Weight::zero(n), n));
    Ok(KModule::from_weights(format!("sl({})", n + 1), n, ws))
}

/// Complexified tangent space `m^C`.
pub fn isotropy_module(n: usize) -> Result<KModule> {
    check_n(n)?;
    let plus = isotropy_plus(n);
    let ws = plus.iter().map(Weight::neg).chain(plus.iter().cloned());
    Ok(KModule::from_weights("m", n, ws))
}

/// Symmetric square of the dual isotropy module.
pub fn sym2_dual_isotropy(n: usize) -> Result<KModule> {
    let m = isotropy_module(n)?;
    let dual: Vec<Weight> = m
        .weights
        .iter()
        .flat_map(|(w, &k)| std::iter::repeat_n(w.neg(), k as usize))
        .collect();
    let mut ws = Vec::new();
    for i in 0..dual.len() {
        for j in i..dual.len() {
            ws.push(dual[i].add(&dual[j]));
        }
    }
    Ok(KModule::from_weights("S2(m*)", n, ws))
}

/// Twice the Weyl vector of `gl(n)`: `(n-1, n-3, .., 1-n)`.
fn two_rho(n: usize) -> Vec<i64> {
    (0..n).map(|i| n as i64 - 1 - 2 * i as i64).collect()
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `mu` (dominant) lies in the weight hull of `lambda` iff it is majorized.
fn majorized(mu: &Weight, lambda: &Weight) -> bool {
    let (mut sm, mut sl) = (0, 0);
    for (a, b) in mu.0.iter().zip(&lambda.0) {
        sm += a;
        sl += b;
        if sm > sl {
            return false;
        }
    }
    sm == sl
}

fn dominant_below(lambda: &Weight) -> Vec<Weight> {
    fn rec(prefix: &mut Vec<i64>, n: usize, hi: i64, lo: i64, lambda: &Weight, out: &mut Vec<Weight>) {
        if prefix.len() == n {
            let w = Weight(prefix.clone());
            if majorized(&w, lambda) {
                out.push(w);
            }
            return;
        }
        let top = prefix.last().copied().unwrap_or(hi);
        for v in (lo..=top).rev() {
            prefix.push(v);
            rec(prefix, n, hi, lo, lambda, out);
            prefix.pop();
        }
    }
    let n = lambda.rank();
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), n, lambda.0[0], lambda.0[n - 1], lambda, &mut out);
    out
}

fn distinct_permutations(w: &Weight) -> Vec<Weight> {
    let mut v = w.0.clone();
    v.sort_unstable();
    let mut out = vec![Weight(v.clone())];
    // Lexicographic next-permutation walk visits each arrangement once.
    loop {
        let Some(i) = (0..v.len().saturating_sub(1)).rev().find(|&i| v[i] < v[i + 1]) else {
            return out;
        };
        let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
        v.swap(i, j);
        v[i + 1..].reverse();
        out.push(Weight(v.clone()));
    }
}

/// Weight multiplicities of the irreducible `K`-module with highest weight
/// `lambda`, by Freudenthal's recursion in exact integers.
pub fn irreducible_weights(lambda: &Weight) -> Result<BTreeMap<Weight, u64>> {
    if !lambda.is_dominant() {
        return Err(Error::InvalidParameter(format!("{:?} is not dominant", lambda.0)));
    }
    let n = lambda.rank();
    let rho2 = two_rho(n);
    let shifted = |w: &Weight| -> i64 {
        let v: Vec<i64> = w.0.iter().zip(&rho2).map(|(a, r)| 2 * a + r).collect();
        dot(&v, &v)
    };
    let mut dominant = dominant_below(lambda);
    dominant.sort_by_key(|mu| {
        let diff: Vec<i64> = lambda.0.iter().zip(&mu.0).map(|(a, b)| a - b).collect();
        dot(&diff, &rho2)
    });
    let members: BTreeSet<Weight> = dominant.iter().cloned().collect();
    let top = shifted(lambda);
    let mut mult: BTreeMap<Weight, i64> = BTreeMap::new();
    for mu in &dominant {
        if mu == lambda {
            mult.insert(mu.clone(), 1);
            continue;
        }
        // 4 (|l+rho|^2 - |mu+rho|^2) m(mu) = 8 sum_{alpha>0, k>=1} (mu + k alpha, alpha) m(mu + k alpha)
        let mut rhs = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                let mut nu = mu.clone();
                loop {
                    nu.0[i] += 1;
                    nu.0[j] -= 1;
                    let key = nu.sorted_desc();
                    if !members.contains(&key) {
                        break;
                    }
                    let m = *mult.get(&key).expect("higher weights processed first");
                    rhs += (nu.0[i] - nu.0[j]) * m;
                }
            }
        }
        let denom = top - shifted(mu);
        let num = 8 * rhs;
        if denom <= 0 || num % denom != 0 {
            return Err(Error::Integrity(format!("Freudenthal recursion not integral at {:?}", mu.0)));
        }
        mult.insert(mu.clone(), num / denom);
    }
    let mut out = BTreeMap::new();
    for (mu, m) in mult {
        if m > 0 {
            for w in distinct_permutations(&mu) {
                out.insert(w, m as u64);
            }
        }
    }
    Ok(out)
}

/// Weyl dimension formula for the `U(n)` irreducible with highest weight `lambda`.
pub fn weyl_dimension(lambda: &Weight) -> u64 {
    let n = lambda.rank();
    let (mut num, mut den) = (1i128, 1i128);
    for i in 0..n {
        for j in i + 1..n {
            num *= (lambda.0[i] - lambda.0[j] + (j - i) as i64) as i128;
            den *= (j - i) as i128;
        }
    }
    (num / den) as u64
}

/// One constituent of a decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constituent {
    pub highest_weight: Weight,
    pub multiplicity: u64,
    pub dim: u64,
    pub central_charge: i64,
}

/// Greedy highest-weight decomposition.
///
/// The lexicographically largest weight of a Weyl-symmetric multiset is
/// dominant and maximal in the dominance order, so it is the highest weight
/// of some constituent.
pub fn k_decompose(module: &KModule) -> Result<Vec<Constituent>> {
    let mut rest: BTreeMap<Weight, i64> = module.weights.iter().map(|(w, &m)| (w.clone(), m as i64)).collect();
    let mut out = Vec::new();
    while let Some((top, &count)) = rest.iter().next_back() {
        let top = top.clone();
        if count <= 0 {
            return Err(Error::Integrity(format!("non-positive multiplicity at {:?}", top.0)));
        }
        if !top.is_dominant() {
            return Err(Error::Integrity(format!("{}: leading weight {:?} is not dominant", module.name, top.0)));
        }
        let irrep = irreducible_weights(&top)?;
        for (w, m) in &irrep {
            let slot = rest.entry(w.clone()).or_insert(0);
            *slot -= count * *m as i64;
            if *slot < 0 {
                return Err(Error::Integrity(format!(
                    "{}: subtracting {:?} drives weight {:?} negative",
                    module.name, top.0, w.0
                )));
            }
            if *slot == 0 {
                rest.remove(w);
            }
        }
        out.push(Constituent {
            dim: irrep.values().sum(),
            central_charge: top.central_charge(),
            highest_weight: top,
            multiplicity: count as u64,
        });
    }
    Ok(out)
}

/// A constituent shared by two modules.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedConstituent {
    pub highest_weight: Weight,
    pub dim: u64,
    pub mult_a: u64,
    pub mult_b: u64,
}

/// `dim Hom_K(A, B)` together with the constituents that contribute.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomCount {
    pub multiplicity: u64,
    pub shared: Vec<SharedConstituent>,
}

pub fn hom_count(a: &KModule, b: &KModule) -> Result<HomCount> {
    if a.n != b.n {
        return Err(Error::InvalidParameter(format!("rank mismatch {} vs {}", a.n, b.n)));
    }
    let da = k_decompose(a)?;
    let db: BTreeMap<Weight, u64> = k_decompose(b)?.into_iter().map(|c| (c.highest_weight, c.multiplicity)).collect();
    let shared: Vec<SharedConstituent> = da
        .into_iter()
        .filter_map(|c| {
            db.get(&c.highest_weight).map(|&mb| SharedConstituent {
                highest_weight: c.highest_weight,
                dim: c.dim,
                mult_a: c.multiplicity,
                mult_b: mb,
            })
        })
        .collect();
    Ok(HomCount { multiplicity: shared.iter().map(|s| s.mult_a * s.mult_b).sum(), shared })
}

/// `sum_pi mult_A(pi) mult_B(pi)` over `K`-irreducibles.
pub fn hom_multiplicity(a: &KModule, b: &KModule) -> Result<u64> {
    Ok(hom_count(a, b)?.multiplicity)
}

/// Deformation-space bookkeeping for `CP^n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpnDimensions {
    pub n: usize,
    /// `dim su(n+1)`.
    pub dim_g: u64,
    /// `m = dim Hom_K(g^C, S2(m*)^C)`.
    pub m: u64,
    pub dim_z: u64,
    /// `dim ker T = m * dim g`, split evenly between the images of the two intertwiners.
    pub dim_ker_t: u64,
    pub dim_im_psi1: u64,
    pub dim_im_psi2: u64,
    pub shared_constituents: Vec<SharedConstituent>,
}

/// `dim Z = (n+1)^2 - 1` with the supporting multiplicity count.
pub fn dim_z_cpn(n: usize) -> Result<CpnDimensions> {
    let g = adjoint_module(n)?;
    let s2 = sym2_dual_isotropy(n)?;
    let hom = hom_count(&g, &s2)?;
    let dim_g = ((n + 1) * (n + 1) - 1) as u64;
    Ok(CpnDimensions {
        n,
        dim_g,
        m: hom.multiplicity,
        dim_z: dim_g,
        dim_ker_t: hom.multiplicity * dim_g,
        dim_im_psi1: dim_g,
        dim_im_psi2: dim_g,
        shared_constituents: hom.shared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjoint_of_gl_n_restricted() {
        let d = k_decompose(&adjoint_module(3).unwrap()).unwrap();
        let dims: Vec<u64> = d.iter().map(|c| c.dim * c.multiplicity).collect();
        assert_eq!(dims.iter().sum::<u64>(), 15);
        // sl(3) adjoint, trivial, and the two charged triples.
        assert_eq!(d.len(), 4);
        assert!(d.iter().any(|c| c.highest_weight == Weight(vec![0, 0, 0]) && c.multiplicity == 1));
    }

    #[test]
    fn permutations_are_distinct() {
        assert_eq!(distinct_permutations(&Weight(vec![1, 0, 0])).len(), 3);
        assert_eq!(distinct_permutations(&Weight(vec![2, 1, 0])).len(), 6);
        assert_eq!(distinct_permutations(&Weight(vec![1, 1])).len(), 1);
    }
}
