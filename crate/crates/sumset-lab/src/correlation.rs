//! Joint distributions, maximal correlation, and the rho = 1 dichotomy.
//!
//! Masses are exact rationals end to end; only the correlation value itself
//! goes through floating point. The rho = 1 verdict never does: it is the
//! connectivity of the bipartite support graph, decided combinatorially.

// Indexed loops below mirror the matrix algebra they implement.
#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{FiniteAbelianGroup, GroupSubset};
use crate::rat::{rat, rat_from_counts, rat_to_f64, Rat};

/// Probability distribution on Ω_1 x ... x Ω_d with exact rational masses.
/// Flat index = mixed radix over the coordinates, first most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    sizes: Vec<usize>,
    place: Vec<usize>,
    mass: Vec<Rat>,
}

impl JointDistribution {
    pub fn new(sizes: Vec<usize>, mass: Vec<Rat>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidInput("alphabet sizes must be positive".into()));
        }
        let mut place = vec![1usize; sizes.len()];
        for i in (0..sizes.len() - 1).rev() {
            place[i] = place[i + 1]
                .checked_mul(sizes[i + 1])
                .ok_or_else(|| Error::CapacityExceeded("distribution tensor too large".into()))?;
        }
        let len = place[0]
            .checked_mul(sizes[0])
            .ok_or_else(|| Error::CapacityExceeded("distribution tensor too large".into()))?;
        if mass.len() != len {
            return Err(Error::InvalidInput(format!(
                "mass tensor has {} entries, expected {len}",
                mass.len()
            )));
        }
        if mass.iter().any(|m| *m < rat(0, 1)) {
            return Err(Error::InvalidInput("negative mass".into()));
        }
        let total: Rat = mass.iter().sum();
        if total != rat(1, 1) {
            return Err(Error::InvalidInput(format!("masses sum to {total}, not 1")));
        }
        Ok(JointDistribution { sizes, place, mass })
    }

    pub fn arity(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn mass(&self) -> &[Rat] {
        &self.mass
    }

    pub fn flat_index(&self, point: &[u64]) -> usize {
        debug_assert_eq!(point.len(), self.sizes.len());
        point
            .iter()
            .zip(&self.place)
            .map(|(&d, &p)| d as usize * p)
            .sum()
    }

    pub fn mass_at(&self, point: &[u64]) -> &Rat {
        &self.mass[self.flat_index(point)]
    }

    fn digit(&self, flat: usize, j: usize) -> usize {
        flat / self.place[j] % self.sizes[j]
    }

    /// Exact marginal of coordinate j.
    pub fn marginal(&self, j: usize) -> Vec<Rat> {
        let mut out = vec![rat(0, 1); self.sizes[j]];
        for (flat, m) in self.mass.iter().enumerate() {
            if *m != rat(0, 1) {
                out[self.digit(flat, j)] += *m;
            }
        }
        out
    }

    /// Pair distribution (U_j, U_rest): coordinate j against all remaining
    /// coordinates flattened into one alphabet, mixed radix in original order.
    pub fn flatten_to_pair(&self, j: usize) -> Result<JointDistribution> {
        if j >= self.sizes.len() {
            return Err(Error::InvalidInput(format!("no coordinate {j}")));
        }
        if self.sizes.len() < 2 {
            return Err(Error::InvalidInput("need at least two coordinates".into()));
        }
        let rest_size: usize = self
            .sizes
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &s)| s)
            .product();
        let mut mass = vec![rat(0, 1); self.sizes[j] * rest_size];
        for (flat, m) in self.mass.iter().enumerate() {
            if *m == rat(0, 1) {
                continue;
            }
            let u = self.digit(flat, j);
            let mut rest = 0usize;
            for k in 0..self.sizes.len() {
                if k != j {
                    rest = rest * self.sizes[k] + self.digit(flat, k);
                }
            }
            mass[u * rest_size + rest] += *m;
        }
        JointDistribution::new(vec![self.sizes[j], rest_size], mass)
    }
}

/// Uniform distribution on d-tuples of group elements whose sum lies in Z_0;
/// each such tuple has mass 1 / (|G|^{d-1} |Z_0|). Marginals are verified
/// uniform before returning.
pub fn avoidance_coupling(
    g: &FiniteAbelianGroup,
    z0: &GroupSubset,
    d: usize,
) -> Result<JointDistribution> {
    if z0.is_empty() {
        return Err(Error::InvalidInput("Z_0 must be non-empty".into()));
    }
    if z0.group() != g {
        return Err(Error::ShapeMismatch("Z_0 lives in a different group".into()));
    }
    if d < 2 {
        return Err(Error::InvalidInput("coupling needs d >= 2".into()));
    }
    let order = g.order() as usize;
    let len = order
        .checked_pow(d as u32)
        .filter(|&l| l <= 1 << 30)
        .ok_or_else(|| Error::CapacityExceeded(format!("|G|^d = {order}^{d} too large")))?;

    let denom = (g.order() as i128).pow(d as u32 - 1) * z0.len() as i128;
    let tuple_mass = rat(1, denom);
    let mut mass = vec![rat(0, 1); len];
    for (flat, m) in mass.iter_mut().enumerate() {
        let mut digits = vec![0u64; d];
        let mut acc = flat;
        for k in (0..d).rev() {
            digits[k] = (acc % order) as u64;
            acc /= order;
        }
        let mut sum = 0u64;
        for &dg in &digits {
            sum = g.add(sum, dg);
        }
        if z0.contains(sum) {
            *m = tuple_mass;
        }
    }

    let p = JointDistribution::new(vec![order; d], mass)?;
    let uniform = rat_from_counts(1, g.order() as u128)?;
    for j in 0..d {
        if p.marginal(j).iter().any(|m| *m != uniform) {
            return Err(Error::InternalInvariant(format!(
                "coupling marginal {j} is not uniform"
            )));
        }
    }
    Ok(p)
}

/// Correlation value with the achieving functions, embedded back into the
/// full alphabets (0 off support).
#[derive(Clone, Debug)]
pub struct CorrelationWitness {
    /// Spectral value: second singular value of the normalized mass matrix.
    pub value: f64,
    /// The same value from the alternating conditional-expectation iteration.
    pub ace_value: f64,
    /// Top singular value; equals 1 up to numerical error for any valid P.
    pub top_singular_value: f64,
    pub lambda: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Coordinate j achieving the max in the d > 2 reduction; 0 for pairs.
    pub achieving_index: usize,
}

struct SupportPair {
    u_syms: Vec<usize>,
    v_syms: Vec<usize>,
    /// Joint masses restricted to support, as f64, row-major u x v.
    p: Vec<f64>,
    pu: Vec<f64>,
    pv: Vec<f64>,
}

fn restrict_to_support(p: &JointDistribution) -> Result<SupportPair> {
    if p.arity() != 2 {
        return Err(Error::InvalidInput("pair operation needs d = 2".into()));
    }
    let mu = p.marginal(0);
    let mv = p.marginal(1);
    let u_syms: Vec<usize> = (0..p.sizes[0]).filter(|&u| mu[u] != rat(0, 1)).collect();
    let v_syms: Vec<usize> = (0..p.sizes[1]).filter(|&v| mv[v] != rat(0, 1)).collect();
    if u_syms.is_empty() || v_syms.is_empty() {
        return Err(Error::InvalidInput("distribution has empty support".into()));
    }
    let mut pm = vec![0f64; u_syms.len() * v_syms.len()];
    for (i, &u) in u_syms.iter().enumerate() {
        for (k, &v) in v_syms.iter().enumerate() {
            pm[i * v_syms.len() + k] =
                rat_to_f64(&p.mass[u * p.sizes[1] + v]);
        }
    }
    let pu = u_syms.iter().map(|&u| rat_to_f64(&mu[u])).collect();
    let pv = v_syms.iter().map(|&v| rat_to_f64(&mv[v])).collect();
    Ok(SupportPair { u_syms, v_syms, p: pm, pu, pv })
}

/// Spectral maximal correlation of a pair distribution, with the alternating
/// iteration run alongside as a cross-check.
pub fn maximal_correlation_pair(p: &JointDistribution) -> Result<CorrelationWitness> {
    let sp = restrict_to_support(p)?;
    let (su, sv) = (sp.u_syms.len(), sp.v_syms.len());
    let mut lambda_full = vec![0f64; p.sizes[0]];
    let mut sigma_full = vec![0f64; p.sizes[1]];

    if su == 1 || sv == 1 {
        // No non-constant function of a one-point support.
        return Ok(CorrelationWitness {
            value: 0.0,
            ace_value: 0.0,
            top_singular_value: 1.0,
            lambda: lambda_full,
            sigma: sigma_full,
            achieving_index: 0,
        });
    }

    let m = DMatrix::from_fn(su, sv, |i, k| {
        sp.p[i * sv + k] / (sp.pu[i] * sp.pv[k]).sqrt()
    });
    let svd = m.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let top = svd.singular_values[order[0]];
    let second = order.get(1).map_or(0.0, |&i| svd.singular_values[i]);
    let idx = order.get(1).copied().unwrap_or(order[0]);

    let mut lambda: Vec<f64> = (0..su).map(|i| u[(i, idx)] / sp.pu[i].sqrt()).collect();
    let mut sigma: Vec<f64> = (0..sv).map(|k| v_t[(idx, k)] / sp.pv[k].sqrt()).collect();
    let mut cov = 0.0;
    for i in 0..su {
        for k in 0..sv {
            cov += sp.p[i * sv + k] * lambda[i] * sigma[k];
        }
    }
    if cov < 0.0 {
        for s in sigma.iter_mut() {
            *s = -*s;
        }
    }
    if order.len() < 2 {
        lambda.iter_mut().for_each(|x| *x = 0.0);
        sigma.iter_mut().for_each(|x| *x = 0.0);
    }

    let ace = ace_correlation(&sp);

    for (i, &sym) in sp.u_syms.iter().enumerate() {
        lambda_full[sym] = lambda[i];
    }
    for (k, &sym) in sp.v_syms.iter().enumerate() {
        sigma_full[sym] = sigma[k];
    }
    Ok(CorrelationWitness {
        value: second.clamp(0.0, 1.0 + 1e-12).min(1.0),
        ace_value: ace,
        top_singular_value: top,
        lambda: lambda_full,
        sigma: sigma_full,
        achieving_index: 0,
    })
}

/// Alternating conditional expectations: power iteration on the centered
/// conditional-expectation operator, reported through the Rayleigh quotient.
fn ace_correlation(sp: &SupportPair) -> f64 {
    let (su, sv) = (sp.u_syms.len(), sp.v_syms.len());
    if su == 1 || sv == 1 {
        return 0.0;
    }
    // Deterministic pseudo-random start, spread across all directions.
    let mut lambda: Vec<f64> = (0..su)
        .map(|i| {
            let h = (i as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15);
            (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let mut sigma = vec![0f64; sv];

    let center_scale = |f: &mut [f64], w: &[f64]| -> bool {
        let mean: f64 = f.iter().zip(w).map(|(x, p)| x * p).sum();
        for x in f.iter_mut() {
            *x -= mean;
        }
        let var: f64 = f.iter().zip(w).map(|(x, p)| x * x * p).sum();
        if var < 1e-28 {
            return false;
        }
        let s = var.sqrt();
        for x in f.iter_mut() {
            *x /= s;
        }
        true
    };

    if !center_scale(&mut lambda, &sp.pu) {
        return 0.0;
    }
    let mut prev = -1.0;
    for _ in 0..100_000 {
        // sigma(v) = E[lambda(U) | V = v], then standardized.
        for k in 0..sv {
            let mut acc = 0.0;
            for i in 0..su {
                acc += sp.p[i * sv + k] * lambda[i];
            }
            sigma[k] = acc / sp.pv[k];
        }
        if !center_scale(&mut sigma, &sp.pv) {
            return 0.0;
        }
        for i in 0..su {
            let mut acc = 0.0;
            for k in 0..sv {
                acc += sp.p[i * sv + k] * sigma[k];
            }
            lambda[i] = acc / sp.pu[i];
        }
        if !center_scale(&mut lambda, &sp.pu) {
            return 0.0;
        }
        let mut cov = 0.0;
        for i in 0..su {
            for k in 0..sv {
                cov += sp.p[i * sv + k] * lambda[i] * sigma[k];
            }
        }
        if (cov - prev).abs() < 1e-14 {
            return cov.clamp(0.0, 1.0);
        }
        prev = cov;
    }
    prev.clamp(0.0, 1.0)
}

/// rho(P) = max over coordinates j of the pair correlation between U_j and
/// the flattened rest. For d = 2 this is maximal_correlation_pair exactly.
pub fn rho(p: &JointDistribution) -> Result<CorrelationWitness> {
    if p.arity() < 2 {
        return Err(Error::InvalidInput("rho needs d >= 2".into()));
    }
    let witnesses: Vec<CorrelationWitness> = (0..p.arity())
        .into_par_iter()
        .map(|j| {
            let pair = p.flatten_to_pair(j)?;
            let mut w = maximal_correlation_pair(&pair)?;
            w.achieving_index = j;
            Ok(w)
        })
        .collect::<Result<_>>()?;
    Ok(witnesses
        .into_iter()
        .reduce(|best, w| if w.value > best.value { w } else { best })
        .expect("at least one coordinate"))
}

/// Exact rho = 1 dichotomy for pairs.
#[derive(Clone, Debug)]
pub struct RhoOneVerdict {
    pub rho_is_one: bool,
    /// Connected components of the bipartite support graph.
    pub components: usize,
    /// Standardized component labels on the full alphabets when rho = 1:
    /// non-constant, lambda(U) = sigma(V) almost surely, variance 1.
    pub lambda: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
}

/// rho(P) = 1 iff the bipartite graph on supp(U) + supp(V), with edges at
/// positive-mass pairs, is disconnected. Decided exactly; no floating point.
pub fn is_rho_one(p: &JointDistribution) -> Result<RhoOneVerdict> {
    let sp = restrict_to_support(p)?;
    let (su, sv) = (sp.u_syms.len(), sp.v_syms.len());

    let mut parent: Vec<usize> = (0..su + sv).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for i in 0..su {
        for k in 0..sv {
            if sp.p[i * sv + k] > 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, su + k));
                parent[a] = b;
            }
        }
    }
    let mut roots: Vec<usize> = (0..su + sv).map(|x| find(&mut parent, x)).collect();
    let mut uniq = roots.clone();
    uniq.sort_unstable();
    uniq.dedup();
    let components = uniq.len();
    if components == 1 {
        return Ok(RhoOneVerdict { rho_is_one: false, components, lambda: None, sigma: None });
    }

    // Component label as a function; standardize with the exact component
    // masses so Cov(lambda, sigma) = 1 literally.
    for r in roots.iter_mut() {
        *r = uniq.binary_search(r).unwrap();
    }
    let mut comp_mass = vec![0f64; components];
    for i in 0..su {
        for k in 0..sv {
            comp_mass[roots[i]] += sp.p[i * sv + k];
        }
    }
    let mean: f64 = comp_mass
        .iter()
        .enumerate()
        .map(|(c, &m)| c as f64 * m)
        .sum();
    let var: f64 = comp_mass
        .iter()
        .enumerate()
        .map(|(c, &m)| (c as f64 - mean).powi(2) * m)
        .sum();
    let scale = var.sqrt();

    let mut lambda = vec![0f64; p.sizes()[0]];
    let mut sigma = vec![0f64; p.sizes()[1]];
    for (i, &sym) in sp.u_syms.iter().enumerate() {
        lambda[sym] = (roots[i] as f64 - mean) / scale;
    }
    for (k, &sym) in sp.v_syms.iter().enumerate() {
        sigma[sym] = (roots[su + k] as f64 - mean) / scale;
    }
    Ok(RhoOneVerdict { rho_is_one: true, components, lambda: Some(lambda), sigma: Some(sigma) })
}

/// Conditions on fixed values for coordinates 3..d (indices 2..), returning
/// the exact pair distribution of the first two coordinates.
pub fn conditional_pair(p: &JointDistribution, fixed: &[u64]) -> Result<JointDistribution> {
    if p.arity() < 2 {
        return Err(Error::InvalidInput("need at least two coordinates".into()));
    }
    if fixed.len() != p.arity() - 2 {
        return Err(Error::InvalidInput(format!(
            "expected {} fixed values, got {}",
            p.arity() - 2,
            fixed.len()
        )));
    }
    for (k, &x) in fixed.iter().enumerate() {
        if x as usize >= p.sizes[k + 2] {
            return Err(Error::InvalidElement { element: x, order: p.sizes[k + 2] as u64 });
        }
    }
    if fixed.is_empty() {
        return Ok(p.clone());
    }

    let (s0, s1) = (p.sizes[0], p.sizes[1]);
    let mut slice = vec![rat(0, 1); s0 * s1];
    let mut event_mass = rat(0, 1);
    for u in 0..s0 {
        for v in 0..s1 {
            let mut point: Vec<u64> = vec![u as u64, v as u64];
            point.extend_from_slice(fixed);
            let m = *p.mass_at(&point);
            event_mass += m;
            slice[u * s1 + v] = m;
        }
    }
    if event_mass == rat(0, 1) {
        return Err(Error::InvalidConditioning);
    }
    for m in slice.iter_mut() {
        *m /= event_mass;
    }
    JointDistribution::new(vec![s0, s1], slice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;

    fn subset(g: &FiniteAbelianGroup, elems: &[u64]) -> GroupSubset {
        GroupSubset::from_elements(g, elems).unwrap()
    }

    #[test]
    fn coupling_examples() {
        let z2 = make_group(&[2]).unwrap();
        let p = avoidance_coupling(&z2, &GroupSubset::full(&z2), 2).unwrap();
        assert!(p.mass().iter().all(|m| *m == rat(1, 4)));

        let p = avoidance_coupling(&z2, &subset(&z2, &[0]), 2).unwrap();
        assert_eq!(*p.mass_at(&[0, 0]), rat(1, 2));
        assert_eq!(*p.mass_at(&[1, 1]), rat(1, 2));
        assert_eq!(*p.mass_at(&[0, 1]), rat(0, 1));

        let z3 = make_group(&[3]).unwrap();
        let p = avoidance_coupling(&z3, &subset(&z3, &[0, 1]), 2).unwrap();
        let positive = p.mass().iter().filter(|m| **m == rat(1, 6)).count();
        assert_eq!(positive, 6);
        assert!(avoidance_coupling(&z3, &subset(&z3, &[]), 2).is_err());
    }

    #[test]
    fn product_distribution_has_zero_rho() {
        // (1/2,1/2) x (1/3,2/3).
        let mass = vec![rat(1, 6), rat(2, 6), rat(1, 6), rat(2, 6)];
        let p = JointDistribution::new(vec![2, 2], mass).unwrap();
        let w = maximal_correlation_pair(&p).unwrap();
        assert!(w.value < 1e-9, "rho = {}", w.value);
        assert!(w.ace_value < 1e-9);
        assert!((w.top_singular_value - 1.0).abs() < 1e-12);
        assert!(!is_rho_one(&p).unwrap().rho_is_one);
    }

    #[test]
    fn diagonal_has_rho_one() {
        let mass = vec![rat(1, 2), rat(0, 1), rat(0, 1), rat(1, 2)];
        let p = JointDistribution::new(vec![2, 2], mass).unwrap();
        let w = maximal_correlation_pair(&p).unwrap();
        assert!((w.value - 1.0).abs() < 1e-9);
        assert!((w.ace_value - 1.0).abs() < 1e-9);
        let v = is_rho_one(&p).unwrap();
        assert!(v.rho_is_one);
        assert_eq!(v.components, 2);
        let lambda = v.lambda.unwrap();
        let sigma = v.sigma.unwrap();
        assert!((lambda[0] - sigma[0]).abs() < 1e-12);
        assert!((lambda[1] - sigma[1]).abs() < 1e-12);
        assert!((lambda[0] - lambda[1]).abs() > 0.1);
    }

    #[test]
    fn strict_coset_coupling_has_rho_one() {
        let z4 = make_group(&[4]).unwrap();
        let p = avoidance_coupling(&z4, &subset(&z4, &[0, 2]), 2).unwrap();
        let w = maximal_correlation_pair(&p).unwrap();
        assert!((w.value - 1.0).abs() < 1e-9);
        assert!(is_rho_one(&p).unwrap().rho_is_one);

        // {0,1} generates Z_4: connected, rho < 1.
        let p = avoidance_coupling(&z4, &subset(&z4, &[0, 1]), 2).unwrap();
        assert!(!is_rho_one(&p).unwrap().rho_is_one);
        let w = maximal_correlation_pair(&p).unwrap();
        assert!(w.value < 1.0 - 1e-9);
    }

    #[test]
    fn rho_reduces_to_pair_for_d2() {
        let z3 = make_group(&[3]).unwrap();
        let p = avoidance_coupling(&z3, &subset(&z3, &[0, 1]), 2).unwrap();
        let a = maximal_correlation_pair(&p).unwrap();
        let b = rho(&p).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
    }

    #[test]
    fn independent_triple_has_zero_rho() {
        let mass = vec![rat(1, 8); 8];
        let p = JointDistribution::new(vec![2, 2, 2], mass).unwrap();
        let w = rho(&p).unwrap();
        assert!(w.value < 1e-9);
    }

    #[test]
    fn determined_coordinate_forces_rho_one() {
        let z2 = make_group(&[2]).unwrap();
        let p = avoidance_coupling(&z2, &subset(&z2, &[0]), 3).unwrap();
        let w = rho(&p).unwrap();
        assert!((w.value - 1.0).abs() < 1e-9);
        let pair = p.flatten_to_pair(0).unwrap();
        assert!(is_rho_one(&pair).unwrap().rho_is_one);
    }

    #[test]
    fn conditional_pair_translates_z0() {
        let z3 = make_group(&[3]).unwrap();
        let p3 = avoidance_coupling(&z3, &subset(&z3, &[0, 1]), 3).unwrap();
        let cond = conditional_pair(&p3, &[1]).unwrap();
        let expect = avoidance_coupling(&z3, &subset(&z3, &[2, 0]), 2).unwrap();
        assert_eq!(cond, expect);

        let p2 = avoidance_coupling(&z3, &subset(&z3, &[0, 1]), 2).unwrap();
        assert_eq!(conditional_pair(&p2, &[]).unwrap(), p2);
    }

    #[test]
    fn zero_mass_conditioning_is_an_error() {
        let mut mass = vec![rat(0, 1); 8];
        mass[0] = rat(1, 1); // all mass on (0,0,0)
        let p = JointDistribution::new(vec![2, 2, 2], mass).unwrap();
        assert!(matches!(
            conditional_pair(&p, &[1]),
            Err(Error::InvalidConditioning)
        ));
    }

    #[test]
    fn witness_functions_standardized() {
        let z5 = make_group(&[5]).unwrap();
        let p = avoidance_coupling(&z5, &subset(&z5, &[0, 1]), 2).unwrap();
        let w = maximal_correlation_pair(&p).unwrap();
        assert!(w.value > 1e-3 && w.value < 1.0 - 1e-6);
        let pu = p.marginal(0);
        let mean: f64 = w
            .lambda
            .iter()
            .zip(&pu)
            .map(|(l, m)| l * rat_to_f64(m))
            .sum();
        let var: f64 = w
            .lambda
            .iter()
            .zip(&pu)
            .map(|(l, m)| l * l * rat_to_f64(m))
            .sum();
        assert!(mean.abs() < 1e-9);
        assert!((var - 1.0).abs() < 1e-9);
        assert!((w.value - w.ace_value).abs() < 1e-6);
    }

    #[test]
    fn marginals_and_flatten() {
        let z2 = make_group(&[2]).unwrap();
        let p = avoidance_coupling(&z2, &subset(&z2, &[0]), 3).unwrap();
        for j in 0..3 {
            assert!(p.marginal(j).iter().all(|m| *m == rat(1, 2)));
        }
        let pair = p.flatten_to_pair(1).unwrap();
        assert_eq!(pair.sizes(), &[2, 4]);
        // (u2; (u1,u3)) with u1+u2+u3=0: u2=0 pairs with (0,0),(1,1).
        assert_eq!(*pair.mass_at(&[0, 0]), rat(1, 4));
        assert_eq!(*pair.mass_at(&[0, 3]), rat(1, 4));
        assert_eq!(*pair.mass_at(&[1, 1]), rat(1, 4));
        assert_eq!(*pair.mass_at(&[1, 2]), rat(1, 4));
    }
}
