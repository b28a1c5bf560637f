//! Finite abelian groups as lists of cyclic factors, with subgroup closure,
//! quotients, and the strict-coset test on difference sets.

use crate::bitset::Bits;
use crate::error::{Error, Result};

/// Direct product of cyclic groups Z_{m_1} x ... x Z_{m_t}.
///
/// Elements are dense indices in [0, |G|); the digit tuple (g_1,...,g_t)
/// with 0 <= g_i < m_i maps to an index with g_1 most significant.
/// Representations are not canonicalized: [2,3] and [6] stay distinct.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FiniteAbelianGroup {
    orders: Vec<u64>,
    /// place[i] = m_{i+1} * ... * m_t, so index = sum digit_i * place[i].
    place: Vec<u64>,
    order: u64,
}

/// Builds the group Z_{m_1} x ... x Z_{m_t}. Every order must be >= 2.
pub fn make_group(orders: &[u64]) -> Result<FiniteAbelianGroup> {
    if orders.is_empty() {
        return Err(Error::InvalidGroup("factor list is empty".into()));
    }
    if let Some(&m) = orders.iter().find(|&&m| m < 2) {
        return Err(Error::InvalidGroup(format!("cyclic factor order {m} < 2")));
    }
    Ok(FiniteAbelianGroup::from_orders(orders.to_vec()))
}

impl FiniteAbelianGroup {
    fn from_orders(orders: Vec<u64>) -> Self {
        let mut place = vec![1u64; orders.len()];
        for i in (0..orders.len().saturating_sub(1)).rev() {
            place[i] = place[i + 1]
                .checked_mul(orders[i + 1])
                .expect("group order exceeds u64");
        }
        let order = place[0].checked_mul(orders[0]).expect("group order exceeds u64");
        FiniteAbelianGroup { orders, place, order }
    }

    /// The one-element group. Only reachable as a quotient image; `make_group`
    /// rejects factor orders below 2.
    pub fn trivial() -> Self {
        FiniteAbelianGroup { orders: vec![1], place: vec![1], order: 1 }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn factor_orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    pub fn check_element(&self, a: u64) -> Result<()> {
        if a < self.order {
            Ok(())
        } else {
            Err(Error::InvalidElement { element: a, order: self.order })
        }
    }

    pub fn zero(&self) -> u64 {
        0
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.order && b < self.order);
        let mut out = 0;
        for (&m, &p) in self.orders.iter().zip(&self.place) {
            let da = a / p % m;
            let db = b / p % m;
            out += (da + db) % m * p;
        }
        out
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        debug_assert!(a < self.order);
        let mut out = 0;
        for (&m, &p) in self.orders.iter().zip(&self.place) {
            let da = a / p % m;
            out += (m - da) % m * p;
        }
        out
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    pub fn decode(&self, a: u64) -> Vec<u64> {
        debug_assert!(a < self.order);
        self.orders.iter().zip(&self.place).map(|(&m, &p)| a / p % m).collect()
    }

    pub fn encode(&self, digits: &[u64]) -> Result<u64> {
        if digits.len() != self.orders.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} digits, got {}",
                self.orders.len(),
                digits.len()
            )));
        }
        let mut out = 0;
        for ((&d, &m), &p) in digits.iter().zip(&self.orders).zip(&self.place) {
            if d >= m {
                return Err(Error::InvalidElement { element: d, order: m });
            }
            out += d * p;
        }
        Ok(out)
    }

    pub fn elements(&self) -> impl Iterator<Item = u64> {
        0..self.order
    }
}

impl std::fmt::Display for FiniteAbelianGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.orders.iter().map(|m| format!("Z_{m}")).collect();
        write!(f, "{}", parts.join(" x "))
    }
}

impl std::fmt::Debug for FiniteAbelianGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self}")
    }
}

/// Subset of a group, stored as a bitset over element indices.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupSubset {
    group: FiniteAbelianGroup,
    members: Bits,
}

impl GroupSubset {
    pub fn empty(group: &FiniteAbelianGroup) -> Self {
        GroupSubset { group: group.clone(), members: Bits::new(group.order() as usize) }
    }

    pub fn full(group: &FiniteAbelianGroup) -> Self {
        GroupSubset { group: group.clone(), members: Bits::full(group.order() as usize) }
    }

    pub fn from_elements(group: &FiniteAbelianGroup, elements: &[u64]) -> Result<Self> {
        let mut s = Self::empty(group);
        for &e in elements {
            group.check_element(e)?;
            s.members.set(e as usize, true);
        }
        Ok(s)
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn contains(&self, e: u64) -> bool {
        e < self.group.order() && self.members.get(e as usize)
    }

    pub fn insert(&mut self, e: u64) {
        debug_assert!(e < self.group.order());
        self.members.set(e as usize, true);
    }

    pub fn len(&self) -> u64 {
        self.members.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty_set()
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.group.order()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.members.iter_ones().map(|i| i as u64)
    }

    pub fn min_element(&self) -> Option<u64> {
        self.iter().next()
    }

    /// The translate {a + by : a in self}.
    pub fn translate(&self, by: u64) -> GroupSubset {
        let mut out = Self::empty(&self.group);
        for a in self.iter() {
            out.insert(self.group.add(a, by));
        }
        out
    }

    /// The pairwise difference set {a - b : a, b in self}.
    pub fn difference_set(&self) -> GroupSubset {
        let mut out = Self::empty(&self.group);
        for a in self.iter() {
            for b in self.iter() {
                out.insert(self.group.sub(a, b));
            }
        }
        out
    }

    /// Checks 0 membership and closure under addition; closure under negation
    /// follows in a finite group.
    pub fn is_subgroup(&self) -> bool {
        if !self.contains(0) {
            return false;
        }
        for a in self.iter() {
            for b in self.iter() {
                if !self.contains(self.group.add(a, b)) {
                    return false;
                }
            }
        }
        true
    }

}

impl std::fmt::Debug for GroupSubset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Smallest subgroup containing S: closure of {0} under adding generators and
/// their negatives.
pub fn subgroup_generated(group: &FiniteAbelianGroup, s: &GroupSubset) -> GroupSubset {
    let mut gens: Vec<u64> = s.iter().collect();
    let negs: Vec<u64> = gens.iter().map(|&g| group.neg(g)).collect();
    gens.extend(negs);
    gens.sort_unstable();
    gens.dedup();

    let mut members = GroupSubset::empty(group);
    members.insert(0);
    let mut frontier = vec![0u64];
    while let Some(a) = frontier.pop() {
        for &g in &gens {
            let b = group.add(a, g);
            if !members.contains(b) {
                members.insert(b);
                frontier.push(b);
            }
        }
    }
    members
}

/// Proof that Z_0 sits inside H + {shift} for a strict subgroup H.
#[derive(Clone, Debug)]
pub struct StrictCosetWitness {
    pub subgroup: GroupSubset,
    pub shift: u64,
}

/// Tests whether Z_0 is contained in a coset of a strict subgroup.
///
/// Uses the shift z = min(Z_0); the verdict does not depend on that choice
/// because any two shifted closures are translates of one another.
pub fn is_in_strict_coset(
    group: &FiniteAbelianGroup,
    z0: &GroupSubset,
) -> Result<Option<StrictCosetWitness>> {
    let z = z0
        .min_element()
        .ok_or_else(|| Error::InvalidInput("strict-coset test needs a non-empty set".into()))?;
    let shifted = z0.translate(group.neg(z));
    let h = subgroup_generated(group, &shifted);
    if h.is_full() {
        Ok(None)
    } else {
        Ok(Some(StrictCosetWitness { subgroup: h, shift: z }))
    }
}

/// Surjection pi: G -> K with kernel H, tabulated on all of G.
#[derive(Clone, Debug)]
pub struct QuotientMap {
    pub group: FiniteAbelianGroup,
    pub subgroup: GroupSubset,
    pub image: FiniteAbelianGroup,
    table: Vec<u64>,
}

impl QuotientMap {
    #[inline]
    pub fn apply(&self, a: u64) -> u64 {
        self.table[a as usize]
    }
}

/// Quotient G/H via the Smith normal form of the relation lattice.
///
/// Rows of the relation matrix are the cyclic-factor relations diag(m_i)
/// plus the digit vectors of a reduced generating set of H. With U*A*V = D
/// diagonal, x lies in the row lattice iff (x*V)_i = 0 mod d_i, so
/// pi(x) = (x*V mod d) is constant exactly on H-cosets.
pub fn quotient(group: &FiniteAbelianGroup, h: &GroupSubset) -> Result<QuotientMap> {
    if h.group() != group {
        return Err(Error::InvalidSubgroup("subgroup belongs to a different group".into()));
    }
    if !h.is_subgroup() {
        return Err(Error::InvalidSubgroup(
            "set is not closed under addition or misses 0".into(),
        ));
    }

    let t = group.factor_orders().len();
    let gens = reduce_generators(group, h);

    let mut rel: Vec<Vec<i128>> = Vec::with_capacity(t + gens.len());
    for (i, &m) in group.factor_orders().iter().enumerate() {
        let mut row = vec![0i128; t];
        row[i] = m as i128;
        rel.push(row);
    }
    for &g in &gens {
        rel.push(group.decode(g).iter().map(|&d| d as i128).collect());
    }

    let (diag, v) = smith_diagonalize(&mut rel, t);
    debug_assert!(diag.iter().all(|&d| d > 0), "relation lattice has full rank");

    let image_orders: Vec<u64> = diag.iter().filter(|&&d| d >= 2).map(|&d| d as u64).collect();
    let image = if image_orders.is_empty() {
        FiniteAbelianGroup::trivial()
    } else {
        FiniteAbelianGroup::from_orders(image_orders)
    };

    if image.order() * h.len() != group.order() {
        return Err(Error::InternalInvariant(format!(
            "quotient size mismatch: |K|={} |H|={} |G|={}",
            image.order(),
            h.len(),
            group.order()
        )));
    }

    let kept: Vec<usize> = (0..t).filter(|&j| diag[j] >= 2).collect();
    let mut table = Vec::with_capacity(group.order() as usize);
    for a in group.elements() {
        let x: Vec<i128> = group.decode(a).iter().map(|&d| d as i128).collect();
        let mut digits = Vec::with_capacity(kept.len());
        for &j in &kept {
            let y: i128 = (0..t).map(|i| x[i] * v[i][j]).sum();
            digits.push(y.rem_euclid(diag[j]) as u64);
        }
        let k = if kept.is_empty() { 0 } else { image.encode(&digits)? };
        table.push(k);
    }

    let q = QuotientMap { group: group.clone(), subgroup: h.clone(), image, table };
    for g in h.iter() {
        if q.apply(g) != 0 {
            return Err(Error::InternalInvariant("subgroup not in quotient kernel".into()));
        }
    }
    Ok(q)
}

/// Greedy generating set: scan H, keep elements outside the closure so far.
/// At most log2|H| generators survive.
fn reduce_generators(group: &FiniteAbelianGroup, h: &GroupSubset) -> Vec<u64> {
    let mut gens = Vec::new();
    let mut closed = GroupSubset::empty(group);
    closed.insert(0);
    for e in h.iter() {
        if !closed.contains(e) {
            gens.push(e);
            closed = subgroup_generated(group, &GroupSubset::from_elements(group, &gens).unwrap());
            if closed.len() == h.len() {
                break;
            }
        }
    }
    gens
}

/// Diagonalizes the integer matrix by row and column operations, returning
/// the first `cols` diagonal entries and the accumulated column transform V.
/// Only V is tracked; callers never need the row transform.
#[allow(clippy::needless_range_loop)] // row/column index arithmetic
fn smith_diagonalize(a: &mut [Vec<i128>], cols: usize) -> (Vec<i128>, Vec<Vec<i128>>) {
    let rows = a.len();
    let mut v: Vec<Vec<i128>> = (0..cols)
        .map(|i| (0..cols).map(|j| i128::from(i == j)).collect())
        .collect();

    let mut k = 0;
    while k < cols && k < rows {
        'pivot: loop {
            let mut best: Option<(usize, usize)> = None;
            for i in k..rows {
                for j in k..cols {
                    if a[i][j] != 0
                        && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break 'pivot };
            a.swap(k, pi);
            if pj != k {
                for row in a.iter_mut() {
                    row.swap(k, pj);
                }
                for row in v.iter_mut() {
                    row.swap(k, pj);
                }
            }

            let d = a[k][k];
            let mut clean = true;
            for i in k + 1..rows {
                let q = a[i][k].div_euclid(d);
                if q != 0 {
                    for j in k..cols {
                        a[i][j] -= q * a[k][j];
                    }
                }
                if a[i][k] != 0 {
                    clean = false;
                }
            }
            for j in k + 1..cols {
                let q = a[k][j].div_euclid(d);
                if q != 0 {
                    for row in a.iter_mut() {
                        row[j] -= q * row[k];
                    }
                    for row in v.iter_mut() {
                        row[j] -= q * row[k];
                    }
                }
                if a[k][j] != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue 'pivot;
            }

            // Fold any non-divisible remainder into row k so the diagonal
            // ends up with the divisibility chain d_1 | d_2 | ...
            for i in k + 1..rows {
                if (k..cols).any(|j| a[i][j] % d != 0) {
                    for j in k..cols {
                        a[k][j] += a[i][j];
                    }
                    continue 'pivot;
                }
            }
            break 'pivot;
        }

        if a[k][k] < 0 {
            for j in k..cols {
                a[k][j] = -a[k][j];
            }
        }
        k += 1;
    }

    let diag = (0..cols).map(|i| if i < rows { a[i][i] } else { 0 }).collect();
    (diag, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subset(g: &FiniteAbelianGroup, elems: &[u64]) -> GroupSubset {
        GroupSubset::from_elements(g, elems).unwrap()
    }

    #[test]
    fn make_group_validates() {
        assert_eq!(make_group(&[3]).unwrap().order(), 3);
        assert_eq!(make_group(&[2, 2]).unwrap().order(), 4);
        assert_eq!(make_group(&[2, 3]).unwrap().order(), 6);
        assert!(make_group(&[]).is_err());
        assert!(make_group(&[1, 2]).is_err());
        assert!(make_group(&[0]).is_err());
    }

    #[test]
    fn arithmetic_examples() {
        let z3 = make_group(&[3]).unwrap();
        assert_eq!(z3.add(1, 2), 0);

        // Klein group digits: index = 2*g1 + g2.
        let klein = make_group(&[2, 2]).unwrap();
        let a = klein.encode(&[1, 0]).unwrap();
        let b = klein.encode(&[1, 1]).unwrap();
        assert_eq!(klein.decode(klein.add(a, b)), vec![0, 1]);

        let g = make_group(&[2, 3, 4]).unwrap();
        for x in g.elements() {
            assert_eq!(g.add(x, g.zero()), x);
            assert_eq!(g.add(x, g.neg(x)), 0);
            assert_eq!(g.encode(&g.decode(x)).unwrap(), x);
        }
    }

    #[test]
    fn codec_is_most_significant_first() {
        let g = make_group(&[2, 3]).unwrap();
        assert_eq!(g.encode(&[1, 0]).unwrap(), 3);
        assert_eq!(g.encode(&[0, 2]).unwrap(), 2);
        assert_eq!(g.decode(5), vec![1, 2]);
    }

    #[test]
    fn subgroup_closure() {
        let z4 = make_group(&[4]).unwrap();
        let h = subgroup_generated(&z4, &subset(&z4, &[2]));
        assert_eq!(h.iter().collect::<Vec<_>>(), vec![0, 2]);
        assert!(subgroup_generated(&z4, &subset(&z4, &[1])).is_full());
        assert_eq!(subgroup_generated(&z4, &subset(&z4, &[])).len(), 1);

        let klein = make_group(&[2, 2]).unwrap();
        assert!(subgroup_generated(&klein, &subset(&klein, &[2, 1])).is_full());

        // Closure includes negatives: 1 in Z_3 must generate 2.
        let z3 = make_group(&[3]).unwrap();
        assert!(subgroup_generated(&z3, &subset(&z3, &[1])).is_full());
    }

    #[test]
    fn strict_coset_examples() {
        let z4 = make_group(&[4]).unwrap();
        let w = is_in_strict_coset(&z4, &subset(&z4, &[0, 2])).unwrap().unwrap();
        assert_eq!(w.shift, 0);
        assert_eq!(w.subgroup.iter().collect::<Vec<_>>(), vec![0, 2]);
        assert!(is_in_strict_coset(&z4, &subset(&z4, &[0, 1])).unwrap().is_none());
        assert!(is_in_strict_coset(&z4, &subset(&z4, &[])).is_err());

        // Over a prime, any two distinct elements already spread out.
        let z5 = make_group(&[5]).unwrap();
        for a in 0..5 {
            for b in (a + 1)..5 {
                assert!(is_in_strict_coset(&z5, &subset(&z5, &[a, b])).unwrap().is_none());
            }
        }
        // A singleton is a coset of {0} whenever |G| > 1.
        let w = is_in_strict_coset(&z5, &subset(&z5, &[3])).unwrap().unwrap();
        assert_eq!(w.subgroup.len(), 1);
        assert_eq!(w.shift, 3);
    }

    #[test]
    fn strict_coset_shift_independent() {
        let g = make_group(&[2, 4]).unwrap();
        for mask in 1u32..(1 << 8) {
            let elems: Vec<u64> = (0..8).filter(|&e| mask >> e & 1 == 1).collect();
            let z0 = subset(&g, &elems);
            let base = is_in_strict_coset(&g, &z0).unwrap().is_some();
            for &z in &elems {
                let shifted = z0.translate(g.neg(z));
                let h = subgroup_generated(&g, &shifted);
                assert_eq!(!h.is_full(), base);
            }
        }
    }

    #[test]
    fn quotient_examples() {
        let z4 = make_group(&[4]).unwrap();
        let q = quotient(&z4, &subset(&z4, &[0, 2])).unwrap();
        assert_eq!(q.image.order(), 2);
        assert_eq!(q.apply(1), q.apply(3));
        assert_ne!(q.apply(0), q.apply(1));

        let q = quotient(&z4, &subset(&z4, &[0])).unwrap();
        assert_eq!(q.image.order(), 4);
        let mut seen: Vec<u64> = z4.elements().map(|a| q.apply(a)).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);

        let q = quotient(&z4, &GroupSubset::full(&z4)).unwrap();
        assert!(q.image.is_trivial());
        assert!(z4.elements().all(|a| q.apply(a) == 0));

        assert!(quotient(&z4, &subset(&z4, &[0, 1])).is_err());
        assert!(quotient(&z4, &subset(&z4, &[2])).is_err());
    }

    #[test]
    fn quotient_homomorphism_small() {
        let g = make_group(&[2, 4]).unwrap();
        let h = subgroup_generated(&g, &subset(&g, &[g.encode(&[1, 2]).unwrap()]));
        let q = quotient(&g, &h).unwrap();
        assert_eq!(q.image.order() * h.len(), g.order());
        for a in g.elements() {
            for b in g.elements() {
                assert_eq!(q.apply(g.add(a, b)), q.image.add(q.apply(a), q.apply(b)));
            }
        }
        // Fibers of pi all have size |H|.
        for k in q.image.elements() {
            let fiber = g.elements().filter(|&a| q.apply(a) == k).count() as u64;
            assert_eq!(fiber, h.len());
        }
    }
}
