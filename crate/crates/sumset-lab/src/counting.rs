//! Tuple counting over sumsets: how many (x^1,...,x^d) in E_1 x ... x E_d
//! have x^1 + ... + x^d inside Z_0^n. A brute-force route and a transform
//! route coexist deliberately; every avoidance verdict can be cross-checked.

use num::bigint::BigUint;
use num::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{FiniteAbelianGroup, GroupSubset};
use crate::ntt::{find_transform_primes, mul_mod, pow_mod, NttPlan};
use crate::tensor::{PowerShape, TensorSet};

/// Exact tuple count together with the ambient total
/// |S| = |Z_0|^n * |G|^{n(d-1)}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountResult {
    pub count: u128,
    pub tuple_space: u128,
}

/// Keep brute force below ~4M tuples when choosing automatically.
const BRUTE_MAX_TUPLES: u128 = 1 << 22;
/// Transforms allocate a few u64 vectors of |G|^n entries.
const TRANSFORM_MAX_POINTS: u64 = 1 << 22;

pub(crate) fn check_instance(
    g: &FiniteAbelianGroup,
    sets: &[TensorSet],
    z0: &GroupSubset,
) -> Result<PowerShape> {
    if sets.is_empty() {
        return Err(Error::InvalidInput("need at least one summand set".into()));
    }
    if z0.group() != g {
        return Err(Error::ShapeMismatch("Z_0 lives in a different group".into()));
    }
    let n = sets[0].n();
    for s in sets {
        if s.alphabet() as u64 != g.order() || s.n() != n {
            return Err(Error::ShapeMismatch(format!(
                "summand over |X|={} n={} does not match group order {} n={}",
                s.alphabet(),
                s.n(),
                g.order(),
                n
            )));
        }
    }
    PowerShape::new(g.order() as usize, n)
}

fn tuple_space_size(g: &FiniteAbelianGroup, n: usize, d: usize, z0: &GroupSubset) -> Result<u128> {
    let err = || Error::Overflow("tuple space size exceeds 128 bits".into());
    let z_part = (z0.len() as u128).checked_pow(n as u32).ok_or_else(err)?;
    let g_part = (g.order() as u128)
        .checked_pow((n * (d - 1)) as u32)
        .ok_or_else(err)?;
    z_part.checked_mul(g_part).ok_or_else(err)
}

/// Direct enumeration of the full product E_1 x ... x E_d, checking each
/// tuple's sum coordinatewise against Z_0. The oracle route.
pub fn count_tuples_brute(
    g: &FiniteAbelianGroup,
    sets: &[TensorSet],
    z0: &GroupSubset,
) -> Result<CountResult> {
    let shape = check_instance(g, sets, z0)?;
    let tuple_space = tuple_space_size(g, shape.n(), sets.len(), z0)?;

    let points: Vec<Vec<u64>> = sets.iter().map(|s| s.iter().collect()).collect();
    if points.iter().any(|p| p.is_empty()) {
        return Ok(CountResult { count: 0, tuple_space });
    }

    let in_z0: Vec<bool> = (0..g.order()).map(|e| z0.contains(e)).collect();
    let sum_in_power = |p: u64| -> bool {
        (0..shape.n()).all(|i| in_z0[shape.digit(p, i) as usize])
    };

    let rest = &points[1..];
    let count: u128 = points[0]
        .par_iter()
        .map(|&x1| {
            let mut local: u128 = 0;
            // Odometer over the remaining summands with running partial sums.
            let mut idx = vec![0usize; rest.len()];
            let mut partial = Vec::with_capacity(rest.len() + 1);
            partial.push(x1);
            for (lvl, pts) in rest.iter().enumerate() {
                let prev = partial[lvl];
                partial.push(shape.add_points(g, prev, pts[0]));
            }
            loop {
                if sum_in_power(*partial.last().unwrap()) {
                    local += 1;
                }
                // Advance the odometer, rebuilding partial sums from the
                // first level that moved.
                let mut lvl = rest.len();
                loop {
                    if lvl == 0 {
                        return local;
                    }
                    lvl -= 1;
                    idx[lvl] += 1;
                    if idx[lvl] < rest[lvl].len() {
                        break;
                    }
                    idx[lvl] = 0;
                }
                for l in lvl..rest.len() {
                    partial[l + 1] = shape.add_points(g, partial[l], rest[l][idx[l]]);
                }
            }
        })
        .sum();

    Ok(CountResult { count, tuple_space })
}

/// Per-point representation counts of the iterated sumset: entry z holds
/// #{(x^1,...,x^d) in prod E_i : sum = z}, reconstructed exactly by CRT.
pub fn convolve_counts(g: &FiniteAbelianGroup, sets: &[TensorSet]) -> Result<Vec<u128>> {
    if sets.is_empty() {
        return Err(Error::InvalidInput("need at least one summand set".into()));
    }
    let n = sets[0].n();
    let shape = PowerShape::new(g.order() as usize, n)?;
    for s in sets {
        if s.alphabet() as u64 != g.order() || s.n() != n {
            return Err(Error::ShapeMismatch("summand shape mismatch".into()));
        }
    }

    // Any single point's representation count is at most prod_{j != i} |E_j|
    // for every i; the smallest such product is the CRT bound.
    let sizes: Vec<u128> = sets.iter().map(|s| s.len() as u128).collect();
    if sizes.contains(&0) {
        return Ok(vec![0; shape.size() as usize]);
    }
    let mut bound: Option<u128> = None;
    for i in 0..sizes.len() {
        let mut p = Some(1u128);
        for (j, &s) in sizes.iter().enumerate() {
            if j != i {
                p = p.and_then(|acc| acc.checked_mul(s));
            }
        }
        if let Some(p) = p {
            bound = Some(bound.map_or(p, |b| b.min(p)));
        }
    }
    let bound = bound
        .ok_or_else(|| Error::Overflow("representation count bound exceeds 128 bits".into()))?;

    let l = g.factor_orders().iter().fold(1u64, |acc, &m| num::integer::lcm(acc, m));
    let primes = find_transform_primes(l, bound)?;

    let residue_vecs: Vec<Vec<u64>> = primes
        .par_iter()
        .map(|&prime| {
            let plan = NttPlan::new(g, n, prime);
            let mut acc: Vec<u64> = Vec::new();
            for s in sets {
                let mut data = vec![0u64; plan.n_points()];
                for p in s.iter() {
                    data[p as usize] = 1;
                }
                plan.forward(&mut data);
                if acc.is_empty() {
                    acc = data;
                } else {
                    for (a, b) in acc.iter_mut().zip(&data) {
                        *a = mul_mod(*a, *b, plan.prime());
                    }
                }
            }
            plan.inverse(&mut acc);
            acc
        })
        .collect();

    let moduli: Vec<u64> = primes.iter().map(|p| p.q).collect();
    let mut out = vec![0u128; shape.size() as usize];
    if moduli.len() == 1 {
        for (o, &r) in out.iter_mut().zip(&residue_vecs[0]) {
            *o = r as u128;
        }
    } else if moduli.len() == 2 {
        let (q1, q2) = (moduli[0], moduli[1]);
        let q1_inv = pow_mod(q1 % q2, q2 - 2, q2);
        for (z, o) in out.iter_mut().enumerate() {
            let (r1, r2) = (residue_vecs[0][z], residue_vecs[1][z]);
            let diff = (r2 + q2 - r1 % q2) % q2;
            let t = mul_mod(diff, q1_inv, q2);
            *o = r1 as u128 + q1 as u128 * t as u128;
        }
    } else {
        for (z, o) in out.iter_mut().enumerate() {
            let mut x = BigUint::from(0u32);
            let mut m = BigUint::from(1u32);
            for (k, &q) in moduli.iter().enumerate() {
                let qb = BigUint::from(q);
                let cur = (&x % &qb).to_u64().unwrap();
                let diff = (residue_vecs[k][z] + q - cur) % q;
                let m_mod = (&m % &qb).to_u64().unwrap();
                let t = mul_mod(diff, pow_mod(m_mod, q - 2, q), q);
                x += &m * BigUint::from(t);
                m *= qb;
            }
            *o = x
                .to_u128()
                .ok_or_else(|| Error::Overflow("CRT value exceeds 128 bits".into()))?;
        }
    }
    Ok(out)
}

/// Transform-route count: convolve the indicators, then sum the entries that
/// land in Z_0^n.
pub fn count_tuples_via_transform(
    g: &FiniteAbelianGroup,
    sets: &[TensorSet],
    z0: &GroupSubset,
) -> Result<CountResult> {
    let shape = check_instance(g, sets, z0)?;
    let tuple_space = tuple_space_size(g, shape.n(), sets.len(), z0)?;
    let conv = convolve_counts(g, sets)?;

    let in_z0: Vec<bool> = (0..g.order()).map(|e| z0.contains(e)).collect();
    let mut count: u128 = 0;
    'point: for (z, &c) in conv.iter().enumerate() {
        if c == 0 {
            continue;
        }
        for i in 0..shape.n() {
            if !in_z0[shape.digit(z as u64, i) as usize] {
                continue 'point;
            }
        }
        count = count
            .checked_add(c)
            .ok_or_else(|| Error::Overflow("tuple count exceeds 128 bits".into()))?;
    }
    Ok(CountResult { count, tuple_space })
}

/// Chooses the cheaper route: brute force below ~4M tuples, transforms when
/// |G|^n stays in memory, brute force otherwise.
pub fn count_tuples(
    g: &FiniteAbelianGroup,
    sets: &[TensorSet],
    z0: &GroupSubset,
) -> Result<CountResult> {
    let shape = check_instance(g, sets, z0)?;
    let brute_cost = sets
        .iter()
        .try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128));
    match brute_cost {
        Some(c) if c <= BRUTE_MAX_TUPLES => count_tuples_brute(g, sets, z0),
        _ if shape.size() <= TRANSFORM_MAX_POINTS => count_tuples_via_transform(g, sets, z0),
        _ => count_tuples_brute(g, sets, z0),
    }
}

/// True iff (E_1 + ... + E_d) misses Z_0^n, decided by counting, never by
/// materializing the sumset.
pub fn avoids(g: &FiniteAbelianGroup, sets: &[TensorSet], z0: &GroupSubset) -> Result<bool> {
    Ok(count_tuples(g, sets, z0)?.count == 0)
}

/// Materialized sumset by folding pairwise double loops.
pub fn sumset_via_pairwise(g: &FiniteAbelianGroup, sets: &[TensorSet]) -> Result<TensorSet> {
    if sets.is_empty() {
        return Err(Error::InvalidInput("need at least one summand set".into()));
    }
    let n = sets[0].n();
    let mut acc = sets[0].clone();
    for s in &sets[1..] {
        if s.alphabet() != acc.alphabet() || s.n() != n {
            return Err(Error::ShapeMismatch("summand shape mismatch".into()));
        }
        let mut next = TensorSet::empty(acc.alphabet(), n)?;
        for a in acc.iter() {
            for b in s.iter() {
                next.insert(next.shape().add_points(g, a, b));
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// Materialized sumset as the support of the representation counts.
pub fn sumset_via_transform(g: &FiniteAbelianGroup, sets: &[TensorSet]) -> Result<TensorSet> {
    let conv = convolve_counts(g, sets)?;
    let mut out = TensorSet::empty(g.order() as usize, sets[0].n())?;
    for (z, &c) in conv.iter().enumerate() {
        if c > 0 {
            out.insert(z as u64);
        }
    }
    Ok(out)
}

/// Exact coordinatewise sumset E_1 + ... + E_d.
pub fn sumset(g: &FiniteAbelianGroup, sets: &[TensorSet]) -> Result<TensorSet> {
    if sets.is_empty() {
        return Err(Error::InvalidInput("need at least one summand set".into()));
    }
    let pair_cost = sets
        .iter()
        .try_fold(1u128, |acc, s| acc.checked_mul(s.len().max(1) as u128));
    let small = matches!(pair_cost, Some(c) if c <= BRUTE_MAX_TUPLES);
    let shape = PowerShape::new(g.order() as usize, sets[0].n())?;
    if !small && shape.size() <= TRANSFORM_MAX_POINTS {
        sumset_via_transform(g, sets)
    } else {
        sumset_via_pairwise(g, sets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;

    fn subset(g: &FiniteAbelianGroup, elems: &[u64]) -> GroupSubset {
        GroupSubset::from_elements(g, elems).unwrap()
    }

    #[test]
    fn two_summands_over_z2() {
        let g = make_group(&[2]).unwrap();
        let full = TensorSet::full(2, 1).unwrap();
        let z0 = subset(&g, &[0]);
        let r = count_tuples_brute(&g, &[full.clone(), full.clone()], &z0).unwrap();
        assert_eq!(r.count, 2);
        assert_eq!(r.tuple_space, 2);
        let t = count_tuples_via_transform(&g, &[full.clone(), full], &z0).unwrap();
        assert_eq!(t, r);
    }

    #[test]
    fn avoidance_family_over_z3() {
        // E = {2} x Z_3, F = {0} x Z_3, Z_0 = {0,1}: E + F = {2} x Z_3 misses
        // Z_0^2 even though both sets are fairly dense.
        let g = make_group(&[3]).unwrap();
        let e = TensorSet::from_points(3, 2, &[6, 7, 8]).unwrap();
        let f = TensorSet::from_points(3, 2, &[0, 1, 2]).unwrap();
        let z0 = subset(&g, &[0, 1]);

        let r = count_tuples_brute(&g, &[e.clone(), f.clone()], &z0).unwrap();
        assert_eq!(r.count, 0);
        assert_eq!(r.tuple_space, 4 * 9);
        let t = count_tuples_via_transform(&g, &[e.clone(), f.clone()], &z0).unwrap();
        assert_eq!(t, r);
        assert!(avoids(&g, &[e.clone(), f.clone()], &z0).unwrap());

        let s = sumset(&g, &[e.clone(), f.clone()]).unwrap();
        assert_eq!(s, e);
        assert_eq!(sumset_via_pairwise(&g, &[e.clone(), f.clone()]).unwrap(), s);
        assert_eq!(sumset_via_transform(&g, &[e, f]).unwrap(), s);
    }

    #[test]
    fn empty_summand_kills_everything() {
        let g = make_group(&[2, 2]).unwrap();
        let e = TensorSet::empty(4, 2).unwrap();
        let f = TensorSet::full(4, 2).unwrap();
        let z0 = subset(&g, &[0, 3]);
        let r = count_tuples(&g, &[e.clone(), f.clone()], &z0).unwrap();
        assert_eq!(r.count, 0);
        assert!(avoids(&g, &[e.clone(), f.clone()], &z0).unwrap());
        assert!(sumset(&g, &[e, f]).unwrap().is_empty());
    }

    #[test]
    fn full_sets_never_avoid() {
        let g = make_group(&[2, 3]).unwrap();
        let full = TensorSet::full(6, 2).unwrap();
        let z0 = subset(&g, &[1]);
        assert!(!avoids(&g, &[full.clone(), full.clone()], &z0).unwrap());
        let s = sumset(&g, &[full.clone(), full]).unwrap();
        assert!(s.is_full());
    }

    #[test]
    fn three_summands_routes_agree() {
        let g = make_group(&[4]).unwrap();
        let e1 = TensorSet::from_points(4, 2, &[0, 5, 9, 14]).unwrap();
        let e2 = TensorSet::from_points(4, 2, &[3, 4, 11]).unwrap();
        let e3 = TensorSet::from_points(4, 2, &[1, 2, 6, 12, 15]).unwrap();
        for z0 in [subset(&g, &[0]), subset(&g, &[1, 3]), subset(&g, &[0, 2])] {
            let sets = [e1.clone(), e2.clone(), e3.clone()];
            let b = count_tuples_brute(&g, &sets, &z0).unwrap();
            let t = count_tuples_via_transform(&g, &sets, &z0).unwrap();
            assert_eq!(b, t);
            assert_eq!(b.tuple_space, (z0.len() as u128).pow(2) * 16u128.pow(2));
        }
        let sets = [e1, e2, e3];
        assert_eq!(
            sumset_via_pairwise(&g, &sets).unwrap(),
            sumset_via_transform(&g, &sets).unwrap()
        );
    }

    #[test]
    fn single_summand_counts_intersection() {
        let g = make_group(&[3]).unwrap();
        let e = TensorSet::from_points(3, 2, &[0, 1, 4, 8]).unwrap();
        let z0 = subset(&g, &[0, 1]);
        let r = count_tuples(&g, std::slice::from_ref(&e), &z0).unwrap();
        // Z_0^2 = {0,1,3,4}; intersection with E = {0,1,4}.
        assert_eq!(r.count, 3);
        assert_eq!(r.tuple_space, 4);
        assert!(!avoids(&g, std::slice::from_ref(&e), &z0).unwrap());
        assert_eq!(sumset(&g, std::slice::from_ref(&e)).unwrap(), e);
    }

    #[test]
    fn representation_counts_are_exact() {
        let g = make_group(&[2]).unwrap();
        let e = TensorSet::from_points(2, 2, &[0, 1, 2]).unwrap();
        let conv = convolve_counts(&g, &[e.clone(), e]).unwrap();
        // (x+y) over {00,01,10}^2: 00 appears 3 ways (00+00, 01+01, 10+10).
        assert_eq!(conv, vec![3, 2, 2, 2]);
    }
}
