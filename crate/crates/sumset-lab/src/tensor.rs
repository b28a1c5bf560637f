//! Exact subsets of X^n: densities, restrictions, cylinders, and generic
//! coordinatewise combiners. Counting and sumsets live in the counting
//! module; this one is pure set algebra.

use crate::bitset::Bits;
use crate::error::{Error, Result};
use crate::group::FiniteAbelianGroup;
use crate::rat::{rat_from_counts, Rat};

/// Materialized sets cap: |X|^n must fit in 30 bits.
pub const MAX_POINT_BITS: u32 = 30;

/// Index codec for X^n. Point index = base-|X| integer, coordinate 0 most
/// significant. n = 0 is the one-point space X^0, reachable by restricting
/// on every coordinate.
#[derive(Clone, PartialEq, Eq)]
pub struct PowerShape {
    alphabet: usize,
    n: usize,
    /// place[i] = |X|^(n-1-i).
    place: Vec<u64>,
}

impl PowerShape {
    pub fn new(alphabet: usize, n: usize) -> Result<Self> {
        if alphabet == 0 {
            return Err(Error::InvalidInput("alphabet size must be positive".into()));
        }
        let mut place = vec![1u64; n];
        let mut size: u64 = 1;
        for i in (0..n).rev() {
            place[i] = size;
            size = size
                .checked_mul(alphabet as u64)
                .filter(|&s| s <= 1 << MAX_POINT_BITS)
                .ok_or_else(|| {
                    Error::CapacityExceeded(format!(
                        "|X|^n = {alphabet}^{n} exceeds 2^{MAX_POINT_BITS}"
                    ))
                })?;
        }
        Ok(PowerShape { alphabet, n, place })
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> u64 {
        if self.n == 0 {
            1
        } else {
            self.place[0] * self.alphabet as u64
        }
    }

    #[inline]
    pub fn digit(&self, point: u64, i: usize) -> u64 {
        point / self.place[i] % self.alphabet as u64
    }

    pub fn decode(&self, point: u64) -> Vec<u64> {
        (0..self.n).map(|i| self.digit(point, i)).collect()
    }

    pub fn encode(&self, digits: &[u64]) -> Result<u64> {
        if digits.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "expected {} coordinates, got {}",
                self.n,
                digits.len()
            )));
        }
        let mut out = 0;
        for (&d, &p) in digits.iter().zip(&self.place) {
            if d >= self.alphabet as u64 {
                return Err(Error::InvalidElement { element: d, order: self.alphabet as u64 });
            }
            out += d * p;
        }
        Ok(out)
    }

    pub fn points(&self) -> impl Iterator<Item = u64> {
        0..self.size()
    }

    /// Coordinatewise group addition on point indices. The group must match
    /// the alphabet.
    #[inline]
    pub fn add_points(&self, g: &FiniteAbelianGroup, a: u64, b: u64) -> u64 {
        debug_assert_eq!(g.order() as usize, self.alphabet);
        let mut out = 0;
        for &p in &self.place {
            let da = a / p % self.alphabet as u64;
            let db = b / p % self.alphabet as u64;
            out += g.add(da, db) * p;
        }
        out
    }

    #[inline]
    pub fn neg_point(&self, g: &FiniteAbelianGroup, a: u64) -> u64 {
        debug_assert_eq!(g.order() as usize, self.alphabet);
        let mut out = 0;
        for &p in &self.place {
            out += g.neg(a / p % self.alphabet as u64) * p;
        }
        out
    }
}

impl std::fmt::Debug for PowerShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "X^{} (|X|={})", self.n, self.alphabet)
    }
}

/// Sorted list of distinct coordinates, 0-based. Reports and file formats
/// print coordinates 1-based; the library API stays 0-based throughout.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CoordinateSet {
    coords: Vec<usize>,
}

impl CoordinateSet {
    pub fn new(coords: &[usize], n: usize) -> Result<Self> {
        let mut c = coords.to_vec();
        c.sort_unstable();
        if c.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate coordinate".into()));
        }
        if let Some(&bad) = c.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidInput(format!(
                "coordinate {bad} out of range for n = {n}"
            )));
        }
        Ok(CoordinateSet { coords: c })
    }

    pub fn empty() -> Self {
        CoordinateSet { coords: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        CoordinateSet { coords: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.coords.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.coords.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.coords
    }

    pub fn complement(&self, n: usize) -> CoordinateSet {
        CoordinateSet { coords: (0..n).filter(|i| !self.contains(*i)).collect() }
    }

    /// Union, for growing the conditioned set across refinement steps.
    pub fn union(&self, other: &CoordinateSet) -> CoordinateSet {
        let mut c = self.coords.clone();
        c.extend(other.iter());
        c.sort_unstable();
        c.dedup();
        CoordinateSet { coords: c }
    }

    /// 1-based copy for reports.
    pub fn to_one_based(&self) -> Vec<usize> {
        self.coords.iter().map(|&i| i + 1).collect()
    }
}

/// Subset of X^n as a dense bitset over point indices.
#[derive(Clone, PartialEq, Eq)]
pub struct TensorSet {
    shape: PowerShape,
    bits: Bits,
}

impl TensorSet {
    pub fn empty(alphabet: usize, n: usize) -> Result<Self> {
        let shape = PowerShape::new(alphabet, n)?;
        let bits = Bits::new(shape.size() as usize);
        Ok(TensorSet { shape, bits })
    }

    pub fn full(alphabet: usize, n: usize) -> Result<Self> {
        let shape = PowerShape::new(alphabet, n)?;
        let bits = Bits::full(shape.size() as usize);
        Ok(TensorSet { shape, bits })
    }

    pub fn from_points(alphabet: usize, n: usize, points: &[u64]) -> Result<Self> {
        let mut s = Self::empty(alphabet, n)?;
        for &p in points {
            if p >= s.shape.size() {
                return Err(Error::InvalidInput(format!(
                    "point index {p} out of range {}",
                    s.shape.size()
                )));
            }
            s.bits.set(p as usize, true);
        }
        Ok(s)
    }

    /// All points whose every coordinate lies in `symbols`: the n-th power of
    /// a symbol set, e.g. Z_0^n.
    pub fn symbol_power(alphabet: usize, n: usize, symbols: &[u64]) -> Result<Self> {
        let mut allowed = vec![false; alphabet];
        for &s in symbols {
            if s >= alphabet as u64 {
                return Err(Error::InvalidElement { element: s, order: alphabet as u64 });
            }
            allowed[s as usize] = true;
        }
        let mut out = Self::empty(alphabet, n)?;
        'point: for p in out.shape.points() {
            for i in 0..n {
                if !allowed[out.shape.digit(p, i) as usize] {
                    continue 'point;
                }
            }
            out.bits.set(p as usize, true);
        }
        Ok(out)
    }

    pub fn shape(&self) -> &PowerShape {
        &self.shape
    }

    pub fn alphabet(&self) -> usize {
        self.shape.alphabet
    }

    pub fn n(&self) -> usize {
        self.shape.n
    }

    pub fn space_size(&self) -> u64 {
        self.shape.size()
    }

    pub fn len(&self) -> u64 {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty_set()
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.space_size()
    }

    pub fn contains(&self, point: u64) -> bool {
        point < self.space_size() && self.bits.get(point as usize)
    }

    pub fn insert(&mut self, point: u64) {
        debug_assert!(point < self.space_size());
        self.bits.set(point as usize, true);
    }

    pub fn remove(&mut self, point: u64) {
        debug_assert!(point < self.space_size());
        self.bits.set(point as usize, false);
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter_ones().map(|i| i as u64)
    }

    /// Exact |E| / |X|^n.
    pub fn density(&self) -> Rat {
        rat_from_counts(self.len() as u128, self.space_size() as u128)
            .expect("space size is positive")
    }

    fn check_same_shape(&self, other: &TensorSet) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn union(&self, other: &TensorSet) -> Result<TensorSet> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        out.bits.union_with(&other.bits);
        Ok(out)
    }

    pub fn intersect(&self, other: &TensorSet) -> Result<TensorSet> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        out.bits.intersect_with(&other.bits);
        Ok(out)
    }

    pub fn subtract(&self, other: &TensorSet) -> Result<TensorSet> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        out.bits.subtract(&other.bits);
        Ok(out)
    }

    pub fn complement(&self) -> TensorSet {
        let mut out = self.clone();
        out.bits.invert();
        out
    }

    pub fn is_subset_of(&self, other: &TensorSet) -> Result<bool> {
        self.check_same_shape(other)?;
        Ok(self.bits.is_subset_of(&other.bits))
    }

    /// Translate by a point under coordinatewise group addition.
    pub fn translate(&self, g: &FiniteAbelianGroup, by: u64) -> Result<TensorSet> {
        if g.order() as usize != self.alphabet() {
            return Err(Error::ShapeMismatch(format!(
                "group order {} vs alphabet {}",
                g.order(),
                self.alphabet()
            )));
        }
        let mut out = Self::empty(self.alphabet(), self.n())?;
        for p in self.iter() {
            out.insert(self.shape.add_points(g, p, by));
        }
        Ok(out)
    }

}

impl std::fmt::Debug for TensorSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TensorSet[{:?}; ", self.shape)?;
        f.debug_set().entries(self.iter()).finish()?;
        write!(f, "]")
    }
}

/// Checks that `y_digits` is a valid assignment on I for this alphabet.
fn check_assignment(alphabet: usize, i_set: &CoordinateSet, y_digits: &[u64]) -> Result<()> {
    if y_digits.len() != i_set.len() {
        return Err(Error::InvalidInput(format!(
            "assignment has {} symbols for {} coordinates",
            y_digits.len(),
            i_set.len()
        )));
    }
    for &d in y_digits {
        if d >= alphabet as u64 {
            return Err(Error::InvalidElement { element: d, order: alphabet as u64 });
        }
    }
    Ok(())
}

/// The restriction E_{I -> y}: points x over X^{I^c} whose merge with y on I
/// lies in E. Density is relative to X^{I^c}. Empty I returns E unchanged.
pub fn restrict(e: &TensorSet, i_set: &CoordinateSet, y_digits: &[u64]) -> Result<TensorSet> {
    if let Some(&bad) = i_set.as_slice().iter().find(|&&c| c >= e.n()) {
        return Err(Error::InvalidInput(format!(
            "coordinate {bad} out of range for n = {}",
            e.n()
        )));
    }
    check_assignment(e.alphabet(), i_set, y_digits)?;
    if i_set.is_empty() {
        return Ok(e.clone());
    }

    let comp = i_set.complement(e.n());
    let mut out = TensorSet::empty(e.alphabet(), comp.len())?;
    let base: u64 = i_set
        .iter()
        .zip(y_digits)
        .map(|(c, &d)| d * e.shape.place[c])
        .sum();
    for r in out.shape.points() {
        let mut full = base;
        for (k, c) in comp.iter().enumerate() {
            full += out.shape.digit(r, k) * e.shape.place[c];
        }
        if e.contains(full) {
            out.insert(r);
        }
    }
    Ok(out)
}

/// |E_{I -> y}| for every assignment y over X^I in one pass over E.
/// Index of the result vector = assignment index (digits in I order, first
/// coordinate of I most significant).
pub fn fiber_counts(e: &TensorSet, i_set: &CoordinateSet) -> Result<Vec<u64>> {
    if let Some(&bad) = i_set.as_slice().iter().find(|&&c| c >= e.n()) {
        return Err(Error::InvalidInput(format!(
            "coordinate {bad} out of range for n = {}",
            e.n()
        )));
    }
    let y_shape = PowerShape::new(e.alphabet(), i_set.len())?;
    let mut counts = vec![0u64; y_shape.size() as usize];
    for p in e.iter() {
        let mut y = 0;
        for (k, c) in i_set.iter().enumerate() {
            y += e.shape.digit(p, c) * y_shape.place[k];
        }
        counts[y as usize] += 1;
    }
    Ok(counts)
}

/// All restrictions E_{I -> y} at once, indexed by assignment, in one pass
/// over E. Equivalent to calling `restrict` for every y.
pub fn fibers(e: &TensorSet, i_set: &CoordinateSet) -> Result<Vec<TensorSet>> {
    if let Some(&bad) = i_set.as_slice().iter().find(|&&c| c >= e.n()) {
        return Err(Error::InvalidInput(format!(
            "coordinate {bad} out of range for n = {}",
            e.n()
        )));
    }
    let y_shape = PowerShape::new(e.alphabet(), i_set.len())?;
    let comp = i_set.complement(e.n());
    let rest_proto = TensorSet::empty(e.alphabet(), comp.len())?;
    let mut out = vec![rest_proto; y_shape.size() as usize];
    for p in e.iter() {
        let mut y = 0;
        for (k, c) in i_set.iter().enumerate() {
            y += e.shape.digit(p, c) * y_shape.place[k];
        }
        let mut rest = 0;
        for (k, c) in comp.iter().enumerate() {
            rest += e.shape.digit(p, c) * out[0].shape.place[k];
        }
        out[y as usize].insert(rest);
    }
    Ok(out)
}

/// Cylinder extension E' x X^{I^c}: points of X^n whose I-projection lies in
/// E'. Preserves density.
pub fn cylinder(e_prime: &TensorSet, i_set: &CoordinateSet, n: usize) -> Result<TensorSet> {
    if e_prime.n() != i_set.len() {
        return Err(Error::ShapeMismatch(format!(
            "set over X^{} cannot fill {} coordinates",
            e_prime.n(),
            i_set.len()
        )));
    }
    if let Some(&bad) = i_set.as_slice().iter().find(|&&c| c >= n) {
        return Err(Error::InvalidInput(format!(
            "coordinate {bad} out of range for n = {n}"
        )));
    }
    let mut out = TensorSet::empty(e_prime.alphabet(), n)?;
    let comp = i_set.complement(n);
    let rest_shape = PowerShape::new(e_prime.alphabet(), comp.len())?;
    for yp in e_prime.iter() {
        let base: u64 = i_set
            .iter()
            .enumerate()
            .map(|(k, c)| e_prime.shape.digit(yp, k) * out.shape.place[c])
            .sum();
        for r in rest_shape.points() {
            let mut full = base;
            for (k, c) in comp.iter().enumerate() {
                full += rest_shape.digit(r, k) * out.shape.place[c];
            }
            out.insert(full);
        }
    }
    Ok(out)
}

/// Projection of E onto the coordinates in I: {x|_I : x in E}, over X^I.
pub fn project(e: &TensorSet, i_set: &CoordinateSet) -> Result<TensorSet> {
    let counts = fiber_counts(e, i_set)?;
    let mut out = TensorSet::empty(e.alphabet(), i_set.len())?;
    for (y, &c) in counts.iter().enumerate() {
        if c > 0 {
            out.insert(y as u64);
        }
    }
    Ok(out)
}

/// Tabulated combiner f: X x Y -> Z, applied coordinatewise.
#[derive(Clone, Debug)]
pub struct CombinerTable {
    x_size: usize,
    y_size: usize,
    z_size: usize,
    table: Vec<u64>,
}

impl CombinerTable {
    pub fn new(x_size: usize, y_size: usize, z_size: usize, table: Vec<u64>) -> Result<Self> {
        if table.len() != x_size * y_size {
            return Err(Error::InvalidInput(format!(
                "table has {} entries for a {}x{} domain",
                table.len(),
                x_size,
                y_size
            )));
        }
        if let Some(&bad) = table.iter().find(|&&z| z >= z_size as u64) {
            return Err(Error::InvalidElement { element: bad, order: z_size as u64 });
        }
        Ok(CombinerTable { x_size, y_size, z_size, table })
    }

    pub fn from_fn(
        x_size: usize,
        y_size: usize,
        z_size: usize,
        f: impl Fn(u64, u64) -> u64,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(x_size * y_size);
        for x in 0..x_size as u64 {
            for y in 0..y_size as u64 {
                table.push(f(x, y));
            }
        }
        Self::new(x_size, y_size, z_size, table)
    }

    /// Group addition as a combiner; generic_avoids then specializes to the
    /// two-set avoidance predicate.
    pub fn from_group_addition(g: &FiniteAbelianGroup) -> Self {
        let s = g.order() as usize;
        Self::from_fn(s, s, s, |a, b| g.add(a, b)).expect("addition table is closed")
    }

    #[inline]
    pub fn apply(&self, x: u64, y: u64) -> u64 {
        self.table[x as usize * self.y_size + y as usize]
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn z_size(&self) -> usize {
        self.z_size
    }
}

fn check_combiner_shapes(f: &CombinerTable, e: &TensorSet, fset: &TensorSet) -> Result<()> {
    if e.alphabet() != f.x_size || fset.alphabet() != f.y_size || e.n() != fset.n() {
        return Err(Error::ShapeMismatch(format!(
            "combiner {}x{} -> {} against sets over |X|={} and |Y|={} with n {} vs {}",
            f.x_size,
            f.y_size,
            f.z_size,
            e.alphabet(),
            fset.alphabet(),
            e.n(),
            fset.n()
        )));
    }
    Ok(())
}

/// True iff no pair (x, y) in E x F has f(x_i, y_i) in Z0 for every i.
/// Brute force with a per-coordinate early exit.
pub fn generic_avoids(
    f: &CombinerTable,
    e: &TensorSet,
    fset: &TensorSet,
    z0_symbols: &[u64],
) -> Result<bool> {
    check_combiner_shapes(f, e, fset)?;
    let mut in_z0 = vec![false; f.z_size];
    for &s in z0_symbols {
        if s >= f.z_size as u64 {
            return Err(Error::InvalidElement { element: s, order: f.z_size as u64 });
        }
        in_z0[s as usize] = true;
    }
    let n = e.n();
    for x in e.iter() {
        'pair: for y in fset.iter() {
            for i in 0..n {
                let z = f.apply(e.shape.digit(x, i), fset.shape.digit(y, i));
                if !in_z0[z as usize] {
                    continue 'pair;
                }
            }
            return Ok(false);
        }
    }
    Ok(true)
}

/// The image f^{(x)n}(E, F) = {(f(x_1,y_1),...,f(x_n,y_n))} over Z^n.
pub fn generic_image(f: &CombinerTable, e: &TensorSet, fset: &TensorSet) -> Result<TensorSet> {
    check_combiner_shapes(f, e, fset)?;
    let n = e.n();
    let mut out = TensorSet::empty(f.z_size, n)?;
    for x in e.iter() {
        for y in fset.iter() {
            let mut z = 0;
            for i in 0..n {
                z += f.apply(e.shape.digit(x, i), fset.shape.digit(y, i)) * out.shape.place[i];
            }
            out.insert(z);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn coords(c: &[usize], n: usize) -> CoordinateSet {
        CoordinateSet::new(c, n).unwrap()
    }

    #[test]
    fn density_examples() {
        assert_eq!(TensorSet::full(3, 2).unwrap().density(), rat(1, 1));
        assert_eq!(TensorSet::empty(3, 2).unwrap().density(), rat(0, 1));

        // x_1 = 0 over Z_2^3: coordinate 0 is the most significant bit.
        let mut e = TensorSet::empty(2, 3).unwrap();
        for p in 0..4 {
            e.insert(p);
        }
        assert_eq!(e.density(), rat(1, 2));
    }

    #[test]
    fn capacity_cap() {
        assert!(TensorSet::empty(2, 30).is_ok());
        assert!(matches!(
            TensorSet::empty(2, 31),
            Err(crate::error::Error::CapacityExceeded(_))
        ));
    }

    #[test]
    fn restrict_examples() {
        let full = TensorSet::full(2, 3).unwrap();
        let r = restrict(&full, &coords(&[0, 1], 3), &[0, 1]).unwrap();
        assert!(r.is_full());
        assert_eq!(r.n(), 1);

        let mut e = TensorSet::empty(2, 2).unwrap();
        e.insert(0);
        e.insert(1); // x_1 = 0
        assert!(restrict(&e, &coords(&[0], 2), &[1]).unwrap().is_empty());
        let r = restrict(&e, &coords(&[1], 2), &[0]).unwrap();
        assert_eq!(r.iter().collect::<Vec<_>>(), vec![0]);
        assert_eq!(r.density(), rat(1, 2));

        // Empty I is the identity.
        assert_eq!(restrict(&e, &CoordinateSet::empty(), &[]).unwrap(), e);

        // Restricting on every coordinate lands in X^0.
        let r = restrict(&e, &coords(&[0, 1], 2), &[0, 1]).unwrap();
        assert_eq!(r.n(), 0);
        assert_eq!(r.density(), rat(1, 1));
    }

    #[test]
    fn restriction_law_of_total_probability() {
        let e = TensorSet::from_points(3, 3, &[0, 4, 7, 13, 14, 22, 26]).unwrap();
        for i_coords in [vec![0], vec![1], vec![2], vec![0, 2], vec![0, 1, 2]] {
            let i_set = coords(&i_coords, 3);
            let y_shape = PowerShape::new(3, i_set.len()).unwrap();
            let mut total = rat(0, 1);
            for y in y_shape.points() {
                let digits = y_shape.decode(y);
                total += restrict(&e, &i_set, &digits).unwrap().density();
            }
            assert_eq!(total / rat(y_shape.size() as i128, 1), e.density());
        }
    }

    #[test]
    fn fiber_counts_match_restrictions() {
        let e = TensorSet::from_points(2, 3, &[0, 1, 3, 6, 7]).unwrap();
        let i_set = coords(&[0, 2], 3);
        let counts = fiber_counts(&e, &i_set).unwrap();
        let all = fibers(&e, &i_set).unwrap();
        let y_shape = PowerShape::new(2, 2).unwrap();
        for y in y_shape.points() {
            let r = restrict(&e, &i_set, &y_shape.decode(y)).unwrap();
            assert_eq!(counts[y as usize], r.len());
            assert_eq!(all[y as usize], r);
        }
        assert_eq!(counts.iter().sum::<u64>(), e.len());
    }

    #[test]
    fn cylinder_examples() {
        let e_prime = TensorSet::from_points(3, 1, &[2]).unwrap();
        let c = cylinder(&e_prime, &coords(&[0], 2), 2).unwrap();
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![6, 7, 8]);
        assert_eq!(c.density(), rat(1, 3));

        let none = cylinder(&TensorSet::empty(3, 1).unwrap(), &coords(&[0], 2), 2).unwrap();
        assert!(none.is_empty());
        let all = cylinder(&TensorSet::full(3, 1).unwrap(), &coords(&[1], 2), 2).unwrap();
        assert!(all.is_full());
    }

    #[test]
    fn cylinder_then_restrict_is_full() {
        let e_prime = TensorSet::from_points(2, 2, &[1, 2]).unwrap();
        let i_set = coords(&[0, 2], 3);
        let c = cylinder(&e_prime, &i_set, 3).unwrap();
        for yp in e_prime.iter() {
            let digits = e_prime.shape().decode(yp);
            assert!(restrict(&c, &i_set, &digits).unwrap().is_full());
        }
        assert_eq!(project(&c, &i_set).unwrap(), e_prime);
    }

    #[test]
    fn symbol_power_builds_z0n() {
        let z0n = TensorSet::symbol_power(3, 2, &[0, 1]).unwrap();
        assert_eq!(z0n.iter().collect::<Vec<_>>(), vec![0, 1, 3, 4]);
        assert_eq!(z0n.density(), rat(4, 9));
    }

    #[test]
    fn generic_min_combiner() {
        // Alphabet [4] written 0-indexed; top half as the forbidden zone.
        let f = CombinerTable::from_fn(4, 4, 4, |a, b| a.min(b)).unwrap();
        let low = TensorSet::symbol_power(4, 2, &[0, 1]).unwrap();
        let mid = TensorSet::symbol_power(4, 2, &[0, 1, 2]).unwrap();
        assert!(generic_avoids(&f, &low, &low, &[2, 3]).unwrap());
        assert!(!generic_avoids(&f, &mid, &mid, &[2, 3]).unwrap());
        assert!(generic_avoids(
            &f,
            &TensorSet::empty(4, 2).unwrap(),
            &mid,
            &[2, 3]
        )
        .unwrap());

        let img = generic_image(&f, &low, &low).unwrap();
        assert_eq!(img, TensorSet::symbol_power(4, 2, &[0, 1]).unwrap());
    }

    #[test]
    fn group_addition_combiner_matches_point_addition() {
        let g = crate::group::make_group(&[2, 3]).unwrap();
        let f = CombinerTable::from_group_addition(&g);
        let shape = PowerShape::new(6, 2).unwrap();
        for a in [0u64, 7, 20, 35] {
            for b in [1u64, 11, 30] {
                let mut z = 0;
                for i in 0..2 {
                    z += f.apply(shape.digit(a, i), shape.digit(b, i)) * shape.place[i];
                }
                assert_eq!(z, shape.add_points(&g, a, b));
            }
        }
    }

    #[test]
    fn coordinate_set_validation() {
        assert!(CoordinateSet::new(&[0, 0], 3).is_err());
        assert!(CoordinateSet::new(&[3], 3).is_err());
        let c = coords(&[2, 0], 3);
        assert_eq!(c.as_slice(), &[0, 2]);
        assert_eq!(c.complement(3).as_slice(), &[1]);
        assert_eq!(c.to_one_based(), vec![1, 3]);
    }
}
