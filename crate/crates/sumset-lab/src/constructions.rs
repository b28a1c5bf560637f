//! Generators for the explicit avoidance families: coset preimages, level
//! sets of a digitwise quotient sum, planted cylinders, tribe-like sets, and
//! the sharp two-set family over Z_p. Large instances stay implicit behind a
//! membership predicate with an exact closed-form density.

use num::{BigRational, One};

use crate::counting::avoids;
use crate::error::{Error, Result};
use crate::group::{make_group, quotient, FiniteAbelianGroup, GroupSubset, QuotientMap};
use crate::ntt::is_prime_u64;
use crate::rat::{big_pow, rat, rat_to_f64, to_big, Rat};
use crate::structure::StructureCertificate;
use crate::tensor::{CombinerTable, CoordinateSet, PowerShape, TensorSet};

/// Materialization ceiling for implicit sets.
pub const MATERIALIZE_MAX_POINTS: u64 = 1 << 20;

/// Membership rule of an implicit set, evaluated on digit strings.
#[derive(Clone, Debug)]
pub enum Predicate {
    /// Every block of r coordinates has a digit in the member set.
    TribesAllBlocks { members: Vec<bool>, r: usize, s: usize },
    /// Some block of r coordinates is entirely inside the member set.
    TribesSomeBlock { members: Vec<bool>, r: usize, s: usize },
    /// The digitwise quotient images sum to the target element.
    LevelSet { pi: QuotientMap, target: u64 },
    /// The projection to the planted coordinates lies in the core set.
    Cylinder { coords: CoordinateSet, core: TensorSet },
    /// The first k digits are not all in {0, 1}.
    OutsideCube { k: usize },
    /// The first k digits are all zero.
    ZeroPrefix { k: usize },
}

impl Predicate {
    fn eval(&self, digits: &[u64]) -> bool {
        match self {
            Predicate::TribesAllBlocks { members, r, s } => (0..*s)
                .all(|t| (0..*r).any(|i| members[digits[t * r + i] as usize])),
            Predicate::TribesSomeBlock { members, r, s } => (0..*s)
                .any(|t| (0..*r).all(|i| members[digits[t * r + i] as usize])),
            Predicate::LevelSet { pi, target } => {
                let k = &pi.image;
                let sum = digits.iter().fold(0, |acc, &d| k.add(acc, pi.apply(d)));
                sum == *target
            }
            Predicate::Cylinder { coords, core } => {
                let sel: Vec<u64> = coords.iter().map(|c| digits[c]).collect();
                let point = core.shape().encode(&sel).expect("projection digits in range");
                core.contains(point)
            }
            Predicate::OutsideCube { k } => !digits[..*k].iter().all(|&d| d <= 1),
            Predicate::ZeroPrefix { k } => digits[..*k].iter().all(|&d| d == 0),
        }
    }
}

/// A subset of X^n given by a predicate and an exact density, usable at n
/// far beyond what a bit-per-point set can hold.
#[derive(Clone, Debug)]
pub struct ImplicitSet {
    alphabet: usize,
    n: usize,
    predicate: Predicate,
    density: BigRational,
}

impl ImplicitSet {
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    /// Closed-form density, exact.
    pub fn density(&self) -> &BigRational {
        &self.density
    }

    pub fn contains_digits(&self, digits: &[u64]) -> Result<bool> {
        if digits.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "{} digits for n = {}",
                digits.len(),
                self.n
            )));
        }
        if let Some(&bad) = digits.iter().find(|&&d| d >= self.alphabet as u64) {
            return Err(Error::InvalidElement { element: bad, order: self.alphabet as u64 });
        }
        Ok(self.predicate.eval(digits))
    }

    /// Enumerates X^n into an explicit set. The popcount is checked against
    /// the closed-form density, so a successful materialization certifies
    /// the density formula for this instance.
    pub fn materialize(&self) -> Result<TensorSet> {
        let shape = PowerShape::new(self.alphabet, self.n)?;
        if shape.size() > MATERIALIZE_MAX_POINTS {
            return Err(Error::CapacityExceeded(format!(
                "{} points exceed the materialization cap {}",
                shape.size(),
                MATERIALIZE_MAX_POINTS
            )));
        }
        let mut out = TensorSet::empty(self.alphabet, self.n)?;
        let mut digits = vec![0u64; self.n];
        for p in shape.points() {
            for (i, d) in digits.iter_mut().enumerate() {
                *d = shape.digit(p, i);
            }
            if self.predicate.eval(&digits) {
                out.insert(p);
            }
        }
        if to_big(&out.density()) != self.density {
            return Err(Error::InternalInvariant(format!(
                "materialized density {} differs from closed form {}",
                out.density(),
                self.density
            )));
        }
        Ok(out)
    }
}

/// E_j = C_j x G^{I^c} for cores C_j over the planted coordinates. The cores
/// must jointly avoid Z_0 on those coordinates, which forces the cylinders
/// to avoid Z_0^n for every ambient n.
pub fn cylinder_family(
    g: &FiniteAbelianGroup,
    z0: &GroupSubset,
    coords: &CoordinateSet,
    cores: &[TensorSet],
    n: usize,
) -> Result<Vec<ImplicitSet>> {
    if z0.group() != g {
        return Err(Error::ShapeMismatch("Z_0 lives in a different group".into()));
    }
    if z0.is_empty() {
        return Err(Error::InvalidConstruction("Z_0 must be non-empty".into()));
    }
    if coords.is_empty() {
        return Err(Error::InvalidConstruction("need at least one planted coordinate".into()));
    }
    if cores.is_empty() {
        return Err(Error::InvalidConstruction("need at least one core set".into()));
    }
    if let Some(&bad) = coords.as_slice().iter().find(|&&c| c >= n) {
        return Err(Error::ShapeMismatch(format!(
            "planted coordinate {bad} out of range for n = {n}"
        )));
    }
    for c in cores {
        if c.alphabet() as u64 != g.order() || c.n() != coords.len() {
            return Err(Error::ShapeMismatch(format!(
                "core over |X|={} n={} does not match |G|={} planted {}",
                c.alphabet(),
                c.n(),
                g.order(),
                coords.len()
            )));
        }
    }
    if !avoids(g, cores, z0)? {
        return Err(Error::InvalidConstruction(
            "core sums reach Z_0 on the planted coordinates".into(),
        ));
    }
    Ok(cores
        .iter()
        .map(|c| ImplicitSet {
            alphabet: g.order() as usize,
            n,
            predicate: Predicate::Cylinder { coords: coords.clone(), core: c.clone() },
            density: to_big(&c.density()),
        })
        .collect())
}

/// Full preimages of avoiding sets in the quotient G/H: with Z_0 inside the
/// coset H + {x} and kappa the image of x, any E_K + F_K missing {kappa}^n
/// lifts to preimages whose sumset misses Z_0^n.
pub fn coset_counterexample(
    g: &FiniteAbelianGroup,
    z0: &GroupSubset,
    h: &GroupSubset,
    x: u64,
    e_k: &TensorSet,
    f_k: &TensorSet,
) -> Result<(TensorSet, TensorSet)> {
    g.check_element(x)?;
    if z0.group() != g || h.group() != g {
        return Err(Error::ShapeMismatch("Z_0 and H must live in G".into()));
    }
    if z0.is_empty() {
        return Err(Error::InvalidConstruction("Z_0 must be non-empty".into()));
    }
    if !h.is_subgroup() {
        return Err(Error::InvalidConstruction("H is not a subgroup".into()));
    }
    if h.is_full() {
        return Err(Error::InvalidConstruction("H must be a proper subgroup".into()));
    }
    if let Some(z) = z0.iter().find(|&z| !h.contains(g.sub(z, x))) {
        return Err(Error::InvalidConstruction(format!(
            "Z_0 element {z} lies outside the coset H + {{{x}}}"
        )));
    }
    let pi = quotient(g, h)?;
    let k_order = pi.image.order();
    if e_k.alphabet() as u64 != k_order || f_k.alphabet() as u64 != k_order {
        return Err(Error::ShapeMismatch(format!(
            "quotient sets must use alphabet |K| = {k_order}"
        )));
    }
    if e_k.n() != f_k.n() {
        return Err(Error::ShapeMismatch("quotient sets differ in n".into()));
    }
    let n = e_k.n();
    let kappa = pi.apply(x);
    let kappa_set = GroupSubset::from_elements(&pi.image, &[kappa])?;
    if !avoids(&pi.image, &[e_k.clone(), f_k.clone()], &kappa_set)? {
        return Err(Error::InvalidConstruction(format!(
            "E_K + F_K reaches {{{kappa}}}^n in the quotient"
        )));
    }

    let shape = PowerShape::new(g.order() as usize, n)?;
    let k_shape = PowerShape::new(k_order as usize, n)?;
    let mut e = TensorSet::empty(g.order() as usize, n)?;
    let mut f = TensorSet::empty(g.order() as usize, n)?;
    let mut image_digits = vec![0u64; n];
    for p in shape.points() {
        for (i, d) in image_digits.iter_mut().enumerate() {
            *d = pi.apply(shape.digit(p, i));
        }
        let q = k_shape.encode(&image_digits)?;
        if e_k.contains(q) {
            e.insert(p);
        }
        if f_k.contains(q) {
            f.insert(p);
        }
    }
    if !avoids(g, &[e.clone(), f.clone()], z0)? {
        return Err(Error::InternalInvariant(
            "lifted preimages fail the avoidance they were built for".into(),
        ));
    }
    Ok((e, f))
}

/// Level sets E_i = {x : sum_j pi(x_j) = a_i} of the digitwise quotient sum,
/// each of density exactly 1/|K|. When the targets do not sum to n*kappa,
/// representative sums can never land in Z_0^n.
pub fn level_set_family(
    g: &FiniteAbelianGroup,
    z0: &GroupSubset,
    h: &GroupSubset,
    targets: &[u64],
    n: usize,
) -> Result<Vec<ImplicitSet>> {
    if z0.group() != g || h.group() != g {
        return Err(Error::ShapeMismatch("Z_0 and H must live in G".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("need n >= 1".into()));
    }
    if targets.is_empty() {
        return Err(Error::InvalidConstruction("need at least one level target".into()));
    }
    if !h.is_subgroup() {
        return Err(Error::InvalidConstruction("H is not a subgroup".into()));
    }
    if h.is_full() {
        return Err(Error::InvalidConstruction("H must be a proper subgroup".into()));
    }
    let z = z0
        .min_element()
        .ok_or_else(|| Error::InvalidConstruction("Z_0 must be non-empty".into()))?;
    if let Some(w) = z0.iter().find(|&w| !h.contains(g.sub(w, z))) {
        return Err(Error::InvalidConstruction(format!(
            "Z_0 elements {z} and {w} lie in different H-cosets"
        )));
    }
    let pi = quotient(g, h)?;
    let k = pi.image.clone();
    for &a in targets {
        k.check_element(a)?;
    }
    let kappa = pi.apply(z);
    let n_kappa = (0..n).fold(0, |acc, _| k.add(acc, kappa));
    let target_sum = targets.iter().fold(0, |acc, &a| k.add(acc, a));
    if target_sum == n_kappa {
        return Err(Error::InvalidConstruction(format!(
            "level targets sum to n*kappa = {n_kappa}, sums can reach Z_0^n"
        )));
    }
    let density = to_big(&rat(1, k.order() as i128));
    Ok(targets
        .iter()
        .map(|&a| ImplicitSet {
            alphabet: g.order() as usize,
            n,
            predicate: Predicate::LevelSet { pi: pi.clone(), target: a },
            density: density.clone(),
        })
        .collect())
}

/// Tribe-like pair over a combiner f: E asks every block of r coordinates
/// for a digit in A, F asks some block to be all-B. Any pair (x, y) then
/// shares a block position with (x_i, y_i) in A x B, and f(A x B) misses
/// Z_0, so the combined string misses Z_0^n. Densities are exactly
/// (1 - (1-a)^r)^s and 1 - (1 - b^r)^s.
pub fn tribes(
    f: &CombinerTable,
    z0: &[u64],
    a_set: &[u64],
    b_set: &[u64],
    r: usize,
    s: usize,
) -> Result<(ImplicitSet, ImplicitSet)> {
    if r == 0 || s == 0 {
        return Err(Error::InvalidInput("need r >= 1 and s >= 1".into()));
    }
    let mut a_members = vec![false; f.x_size()];
    for &a in a_set {
        *a_members
            .get_mut(a as usize)
            .ok_or(Error::InvalidElement { element: a, order: f.x_size() as u64 })? = true;
    }
    let mut b_members = vec![false; f.y_size()];
    for &b in b_set {
        *b_members
            .get_mut(b as usize)
            .ok_or(Error::InvalidElement { element: b, order: f.y_size() as u64 })? = true;
    }
    let mut z_members = vec![false; f.z_size()];
    for &z in z0 {
        *z_members
            .get_mut(z as usize)
            .ok_or(Error::InvalidElement { element: z, order: f.z_size() as u64 })? = true;
    }
    for a in 0..f.x_size() as u64 {
        for b in 0..f.y_size() as u64 {
            if a_members[a as usize] && b_members[b as usize] && z_members[f.apply(a, b) as usize]
            {
                return Err(Error::InvalidConstruction(format!(
                    "f({a}, {b}) lands in Z_0"
                )));
            }
        }
    }
    let count = |m: &[bool]| m.iter().filter(|&&v| v).count() as i128;
    let a_frac = to_big(&rat(count(&a_members), f.x_size() as i128));
    let b_frac = to_big(&rat(count(&b_members), f.y_size() as i128));
    if a_frac.clone() + b_frac.clone() <= BigRational::one() {
        return Err(Error::InvalidConstruction(
            "|A|/|X| + |B|/|Y| must exceed 1".into(),
        ));
    }
    let n = r
        .checked_mul(s)
        .ok_or_else(|| Error::Overflow("r * s exceeds usize".into()))?;
    let one = BigRational::one();
    let r32 = u32::try_from(r).map_err(|_| Error::Overflow("r exceeds u32".into()))?;
    let s32 = u32::try_from(s).map_err(|_| Error::Overflow("s exceeds u32".into()))?;
    let e_density = big_pow(&(one.clone() - big_pow(&(one.clone() - a_frac), r32)), s32);
    let f_density = one.clone() - big_pow(&(one.clone() - big_pow(&b_frac, r32)), s32);
    Ok((
        ImplicitSet {
            alphabet: f.x_size(),
            n,
            predicate: Predicate::TribesAllBlocks { members: a_members, r, s },
            density: e_density,
        },
        ImplicitSet {
            alphabet: f.y_size(),
            n,
            predicate: Predicate::TribesSomeBlock { members: b_members, r, s },
            density: f_density,
        },
    ))
}

/// Picks (r, s) making the tribe-like pair epsilon-dense: the smallest r
/// with ((1-a)/b)^r < epsilon, then s = ceil((1/b)^r * ln(1/epsilon)).
/// Guarantees 1 - d(F_n) <= epsilon.
pub fn tribes_parameters(a: &Rat, b: &Rat, epsilon: &Rat) -> Result<(usize, usize)> {
    let zero = rat(0, 1);
    let one = rat(1, 1);
    if *a <= zero || *a > one || *b <= zero || *b > one {
        return Err(Error::InvalidInput("densities must lie in (0, 1]".into()));
    }
    if *epsilon <= zero || *epsilon >= one {
        return Err(Error::InvalidInput("epsilon must lie in (0, 1)".into()));
    }
    if *a + *b <= one {
        return Err(Error::InvalidConstruction(
            "|A|/|X| + |B|/|Y| must exceed 1".into(),
        ));
    }
    // (1-a)/b < 1 exactly because a + b > 1, so the loop terminates.
    let ratio = to_big(&((one - *a) / *b));
    let eps_big = to_big(epsilon);
    let mut r = 1usize;
    let mut cur = ratio.clone();
    while cur >= eps_big {
        cur *= &ratio;
        r += 1;
    }
    let r32 = u32::try_from(r).map_err(|_| Error::Overflow("r exceeds u32".into()))?;
    let inv_b_pow = big_pow(&to_big(&(one / *b)), r32);
    let ln_inv_eps = -rat_to_f64(epsilon).ln();
    let s_float = (crate::rat::big_to_f64(&inv_b_pow) * ln_inv_eps).ceil();
    if !s_float.is_finite() || s_float > usize::MAX as f64 {
        return Err(Error::Overflow("s does not fit in usize".into()));
    }
    let s = (s_float as usize).max(1);
    Ok((r, s))
}

/// The sharp two-set family over Z_p with Z_0 = {0, 1}.
#[derive(Clone, Debug)]
pub struct OptimalityExample {
    pub group: FiniteAbelianGroup,
    pub z0: GroupSubset,
    /// (Z_p^k \ {0,1}^k) x Z_p^{n-k}, density 1 - (2/p)^k.
    pub e: ImplicitSet,
    /// {0}^k x Z_p^{n-k}, density p^{-k}.
    pub f: ImplicitSet,
}

pub fn optimality_example(p: u64, k: usize, n: usize) -> Result<OptimalityExample> {
    if p < 3 || !is_prime_u64(p) {
        return Err(Error::InvalidConstruction("p must be a prime >= 3".into()));
    }
    if k == 0 || n == 0 {
        return Err(Error::InvalidInput("need k >= 1 and n >= 1".into()));
    }
    if k > n {
        return Err(Error::ShapeMismatch(format!("k = {k} exceeds n = {n}")));
    }
    let group = make_group(&[p])?;
    let z0 = GroupSubset::from_elements(&group, &[0, 1])?;
    let k32 = u32::try_from(k).map_err(|_| Error::Overflow("k exceeds u32".into()))?;
    let two_over_p = big_pow(&to_big(&rat(2, p as i128)), k32);
    let e = ImplicitSet {
        alphabet: p as usize,
        n,
        predicate: Predicate::OutsideCube { k },
        density: BigRational::one() - two_over_p,
    };
    let f = ImplicitSet {
        alphabet: p as usize,
        n,
        predicate: Predicate::ZeroPrefix { k },
        density: big_pow(&to_big(&rat(1, p as i128)), k32),
    };
    Ok(OptimalityExample { group, z0, e, f })
}

/// Numeric replay of the sharpness argument for the family above. A valid
/// certificate for (E, F) must keep F' non-empty and E' proper, and its
/// error mass on E is then at least p^{-|I|} - (2/p)^k; together with the
/// epsilon bound that forces |I| to grow linearly in k.
#[derive(Clone, Debug)]
pub struct OptimalityDiagnostic {
    pub i_len: usize,
    pub f_prime_nonempty: bool,
    pub e_prime_proper: bool,
    /// The chain below only binds when the certificate claims avoidance and
    /// keeps F' non-empty.
    pub premises_hold: bool,
    pub error_mass_e: Rat,
    /// p^{-|I|} - (2/p)^k, possibly negative (then vacuous).
    pub lower_bound: BigRational,
    /// premises_hold implies error_mass_e >= lower_bound.
    pub consistent: bool,
    /// Smallest |I| compatible with mass <= epsilon: least m with
    /// p^{-m} - (2/p)^k <= epsilon.
    pub min_i_len: usize,
}

pub fn optimality_diagnostic(
    p: u64,
    k: usize,
    cert: &StructureCertificate,
) -> Result<OptimalityDiagnostic> {
    if p < 3 || !is_prime_u64(p) {
        return Err(Error::InvalidConstruction("p must be a prime >= 3".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("need k >= 1".into()));
    }
    if cert.primes.len() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "diagnostic applies to two-set certificates, got {}",
            cert.primes.len()
        )));
    }
    let i_len = cert.i_set.len();
    let f_prime_nonempty = !cert.primes[1].is_empty();
    let e_prime_proper = !cert.primes[0].is_full();
    let premises_hold = cert.avoidance_on_i && f_prime_nonempty;

    let k32 = u32::try_from(k).map_err(|_| Error::Overflow("k exceeds u32".into()))?;
    let i_exp = u32::try_from(i_len).map_err(|_| Error::Overflow("|I| exceeds u32".into()))?;
    let inv_p = to_big(&rat(1, p as i128));
    let two_over_p_k = big_pow(&to_big(&rat(2, p as i128)), k32);
    let lower_bound = big_pow(&inv_p, i_exp) - two_over_p_k.clone();
    let consistent = !premises_hold || to_big(&cert.error_masses[0]) >= lower_bound;

    let threshold = to_big(&cert.params.epsilon) + two_over_p_k;
    let mut min_i_len = 1usize;
    let mut p_pow = inv_p.clone();
    while p_pow > threshold {
        p_pow *= &inv_p;
        min_i_len += 1;
    }

    Ok(OptimalityDiagnostic {
        i_len,
        f_prime_nonempty,
        e_prime_proper,
        premises_hold,
        error_mass_e: cert.error_masses[0],
        lower_bound,
        consistent,
        min_i_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::big_to_f64;
    use num::Zero;
    use crate::structure::{extract_structure, StructureParams};
    use crate::tensor::generic_avoids;

    fn min_combiner() -> CombinerTable {
        CombinerTable::from_fn(3, 3, 3, |x, y| x.min(y)).unwrap()
    }

    #[test]
    fn tribes_worked_example_densities() {
        let f = min_combiner();
        // A = B = {1, 2}, Z_0 = {0}: min(A x B) >= 1 misses 0, a = b = 2/3.
        let (e, fl) = tribes(&f, &[0], &[1, 2], &[1, 2], 2, 2).unwrap();
        assert_eq!(e.n(), 4);
        assert_eq!(*e.density(), to_big(&rat(64, 81)));
        assert_eq!(*fl.density(), to_big(&rat(56, 81)));
        // materialize() checks popcount against the closed form.
        let em = e.materialize().unwrap();
        let fm = fl.materialize().unwrap();
        assert_eq!(em.len(), 64);
        assert_eq!(fm.len(), 56);
        assert!(generic_avoids(&f, &em, &fm, &[0]).unwrap());
    }

    #[test]
    fn tribes_degenerate_single_block() {
        let f = min_combiner();
        let (e, fl) = tribes(&f, &[0], &[1, 2], &[1, 2], 1, 1).unwrap();
        let em = e.materialize().unwrap();
        let fm = fl.materialize().unwrap();
        assert_eq!(em.iter().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(fm.iter().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn tribes_hypothesis_violations() {
        let f = min_combiner();
        // min(1, 1) = 1 inside Z_0.
        assert!(matches!(
            tribes(&f, &[1], &[1, 2], &[1, 2], 2, 2),
            Err(Error::InvalidConstruction(_))
        ));
        // a = b = 1/3 sums below 1.
        assert!(matches!(
            tribes(&f, &[0], &[2], &[2], 2, 2),
            Err(Error::InvalidConstruction(_))
        ));
        assert!(tribes(&f, &[0], &[1, 3], &[1, 2], 2, 2).is_err());
    }

    #[test]
    fn tribes_predicate_blocks() {
        let f = min_combiner();
        let (e, fl) = tribes(&f, &[0], &[1, 2], &[1, 2], 2, 2).unwrap();
        // Blocks are (coords 0,1) and (coords 2,3).
        assert!(e.contains_digits(&[1, 0, 0, 2]).unwrap());
        assert!(!e.contains_digits(&[1, 2, 0, 0]).unwrap());
        assert!(fl.contains_digits(&[1, 2, 0, 0]).unwrap());
        assert!(!fl.contains_digits(&[1, 0, 0, 2]).unwrap());
        assert!(e.contains_digits(&[1, 0, 0]).is_err());
        assert!(e.contains_digits(&[3, 0, 0, 0]).is_err());
    }

    #[test]
    fn tribes_parameters_examples() {
        let (r, s) = tribes_parameters(&rat(2, 3), &rat(2, 3), &rat(1, 10)).unwrap();
        assert_eq!((r, s), (4, 12));
        let (r, s) = tribes_parameters(&rat(2, 3), &rat(2, 3), &rat(1, 100)).unwrap();
        assert_eq!((r, s), (7, 79));
        // Loose epsilon: ratio 1/2 already beats 9/10.
        let (r, s) = tribes_parameters(&rat(2, 3), &rat(2, 3), &rat(9, 10)).unwrap();
        assert_eq!(r, 1);
        assert!(s >= 1);
        assert!(tribes_parameters(&rat(1, 3), &rat(1, 3), &rat(1, 10)).is_err());
        assert!(tribes_parameters(&rat(2, 3), &rat(2, 3), &rat(1, 1)).is_err());
    }

    #[test]
    fn tribes_parameters_meet_density_bounds() {
        let f = min_combiner();
        for eps in [rat(1, 10), rat(1, 100)] {
            let (r, s) = tribes_parameters(&rat(2, 3), &rat(2, 3), &eps).unwrap();
            let (e, fl) = tribes(&f, &[0], &[1, 2], &[1, 2], r, s).unwrap();
            let one = BigRational::one();
            // 1 - d(F) <= eps, exactly.
            assert!(one.clone() - fl.density() <= to_big(&eps));
            // 1 - d(E) <= 2 eps ln(1/eps), the proof's estimate.
            let slack = 2.0 * rat_to_f64(&eps) * -rat_to_f64(&eps).ln();
            assert!(big_to_f64(&(one - e.density())) <= slack);
        }
    }

    #[test]
    fn level_sets_z4_mod_h() {
        let g = make_group(&[4]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[1, 3]).unwrap();
        let h = GroupSubset::from_elements(&g, &[0, 2]).unwrap();
        // K is Z_2 and kappa = 1, so at n = 2 the targets must not sum to 0.
        let sets = level_set_family(&g, &z0, &h, &[0, 1], 2).unwrap();
        assert_eq!(*sets[0].density(), to_big(&rat(1, 2)));
        assert_eq!(*sets[1].density(), to_big(&rat(1, 2)));
        let e0 = sets[0].materialize().unwrap();
        let e1 = sets[1].materialize().unwrap();
        assert_eq!(e0.len(), e1.len());
        assert!(avoids(&g, &[e0, e1], &z0).unwrap());

        // a_1 = a_2 = 0 sums to 2 * kappa = 0, which the hypothesis forbids.
        assert!(matches!(
            level_set_family(&g, &z0, &h, &[0, 0], 2),
            Err(Error::InvalidConstruction(_))
        ));
        // At n = 3 the forbidden sum is kappa = 1, so zero targets work.
        let sets = level_set_family(&g, &z0, &h, &[0, 0], 3).unwrap();
        let e0 = sets[0].materialize().unwrap();
        let e1 = sets[1].materialize().unwrap();
        assert_eq!(to_big(&e0.density()), *sets[0].density());
        assert!(avoids(&g, &[e0, e1], &z0).unwrap());
    }

    #[test]
    fn level_sets_respect_quotient_sum() {
        let g = make_group(&[4]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[1, 3]).unwrap();
        let h = GroupSubset::from_elements(&g, &[0, 2]).unwrap();
        let sets = level_set_family(&g, &z0, &h, &[1], 2).unwrap();
        let pi = quotient(&g, &h).unwrap();
        let m = sets[0].materialize().unwrap();
        let shape = PowerShape::new(4, 2).unwrap();
        for p in shape.points() {
            let sum = (0..2).fold(0, |acc, i| pi.image.add(acc, pi.apply(shape.digit(p, i))));
            assert_eq!(m.contains(p), sum == 1);
        }
    }

    #[test]
    fn coset_counterexample_z4() {
        let g = make_group(&[4]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[1, 3]).unwrap();
        let h = GroupSubset::from_elements(&g, &[0, 2]).unwrap();
        // K = Z_2, kappa = 1. E_K = {(0,0)}, F_K = {(0,0),(0,1)} keep all
        // sums out of {(1,1)}.
        let e_k = TensorSet::from_points(2, 2, &[0]).unwrap();
        let f_k = TensorSet::from_points(2, 2, &[0, 1]).unwrap();
        let (e, f) = coset_counterexample(&g, &z0, &h, 1, &e_k, &f_k).unwrap();
        assert_eq!(e.len(), 4);
        assert_eq!(f.len(), 8);
        assert!(avoids(&g, &[e, f], &z0).unwrap());
    }

    #[test]
    fn coset_counterexample_trivial_kernel() {
        let g = make_group(&[5]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[2]).unwrap();
        let h = GroupSubset::from_elements(&g, &[0]).unwrap();
        // pi is an isomorphism, so avoidance reduces to avoidance in G.
        let e_k = TensorSet::from_points(5, 1, &[0]).unwrap();
        let f_k = TensorSet::from_points(5, 1, &[1]).unwrap();
        let (e, f) = coset_counterexample(&g, &z0, &h, 2, &e_k, &f_k).unwrap();
        assert_eq!(e.iter().collect::<Vec<_>>(), vec![0]);
        assert_eq!(f.iter().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn coset_counterexample_empty_input_set() {
        let g = make_group(&[4]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[1, 3]).unwrap();
        let h = GroupSubset::from_elements(&g, &[0, 2]).unwrap();
        let e_k = TensorSet::empty(2, 2).unwrap();
        let f_k = TensorSet::full(2, 2).unwrap();
        let (e, f) = coset_counterexample(&g, &z0, &h, 1, &e_k, &f_k).unwrap();
        assert!(e.is_empty());
        assert_eq!(f.len(), 16);
    }

    #[test]
    fn coset_counterexample_hypothesis_violations() {
        let g = make_group(&[4]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[1, 3]).unwrap();
        let h = GroupSubset::from_elements(&g, &[0, 2]).unwrap();
        let e_k = TensorSet::from_points(2, 2, &[0]).unwrap();
        let full_h = GroupSubset::full(&g);
        assert!(matches!(
            coset_counterexample(&g, &z0, &full_h, 1, &e_k, &e_k),
            Err(Error::InvalidConstruction(_))
        ));
        // Z_0 = {1, 2} straddles two H-cosets.
        let bad_z0 = GroupSubset::from_elements(&g, &[1, 2]).unwrap();
        assert!(matches!(
            coset_counterexample(&g, &bad_z0, &h, 1, &e_k, &e_k),
            Err(Error::InvalidConstruction(_))
        ));
        // Full quotient sets reach every sum, including {kappa}^n.
        let full_k = TensorSet::full(2, 2).unwrap();
        assert!(matches!(
            coset_counterexample(&g, &z0, &h, 1, &full_k, &full_k),
            Err(Error::InvalidConstruction(_))
        ));
    }

    #[test]
    fn cylinder_family_planted_instance() {
        let g = make_group(&[2]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[0]).unwrap();
        let coords = CoordinateSet::new(&[0, 1], 3).unwrap();
        let c1 = TensorSet::from_points(2, 2, &[1, 2]).unwrap();
        let c2 = TensorSet::from_points(2, 2, &[0]).unwrap();
        let sets = cylinder_family(&g, &z0, &coords, &[c1, c2], 3).unwrap();
        let e = sets[0].materialize().unwrap();
        let f = sets[1].materialize().unwrap();
        assert_eq!(e.len(), 4);
        assert_eq!(f.len(), 2);
        assert!(avoids(&g, &[e, f], &z0).unwrap());

        // Cores whose sums hit Z_0 on the planted coordinates are rejected.
        let c_bad = TensorSet::from_points(2, 2, &[0]).unwrap();
        let c_bad2 = TensorSet::from_points(2, 2, &[0]).unwrap();
        assert!(matches!(
            cylinder_family(&g, &z0, &coords, &[c_bad, c_bad2], 3),
            Err(Error::InvalidConstruction(_))
        ));
    }

    #[test]
    fn optimality_example_small() {
        let ex = optimality_example(3, 1, 2).unwrap();
        let e = ex.e.materialize().unwrap();
        let f = ex.f.materialize().unwrap();
        assert_eq!(e.iter().collect::<Vec<_>>(), vec![6, 7, 8]);
        assert_eq!(f.iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(*ex.e.density(), to_big(&rat(1, 3)));
        assert_eq!(*ex.f.density(), to_big(&rat(1, 3)));
        assert!(avoids(&ex.group, &[e, f], &ex.z0).unwrap());
    }

    #[test]
    fn optimality_example_avoidance_p3_k2_n3() {
        let ex = optimality_example(3, 2, 3).unwrap();
        let e = ex.e.materialize().unwrap();
        let f = ex.f.materialize().unwrap();
        assert_eq!(*ex.f.density(), to_big(&rat(1, 9)));
        assert_eq!(*ex.e.density(), to_big(&rat(5, 9)));
        assert!(avoids(&ex.group, &[e, f], &ex.z0).unwrap());
    }

    #[test]
    fn optimality_example_validation() {
        assert!(matches!(optimality_example(3, 3, 2), Err(Error::ShapeMismatch(_))));
        assert!(optimality_example(4, 1, 2).is_err());
        assert!(optimality_example(2, 1, 2).is_err());
    }

    #[test]
    fn optimality_diagnostic_on_extracted_certificate() {
        let ex = optimality_example(3, 1, 2).unwrap();
        let e = ex.e.materialize().unwrap();
        let f = ex.f.materialize().unwrap();
        // epsilon = p^{-(k+1)} = 1/9.
        let params = StructureParams::new(rat(1, 9), 1, rat(1, 10)).unwrap();
        let cert = extract_structure(&ex.group, &ex.z0, &[e, f], &params).unwrap();
        assert!(cert.avoidance_on_i);
        let diag = optimality_diagnostic(3, 1, &cert).unwrap();
        assert!(diag.premises_hold);
        assert!(diag.f_prime_nonempty);
        assert!(diag.e_prime_proper);
        assert!(diag.consistent);
        // 3^{-1} - (2/3)^1 < 0: vacuous bound at k = 1.
        assert!(diag.lower_bound < BigRational::zero());
        assert_eq!(diag.min_i_len, 1);
    }

    #[test]
    fn optimality_diagnostic_flags_impossible_certificate() {
        let ex = optimality_example(3, 1, 2).unwrap();
        let e = ex.e.materialize().unwrap();
        let f = ex.f.materialize().unwrap();
        let params = StructureParams::new(rat(1, 9), 1, rat(1, 10)).unwrap();
        let mut cert = extract_structure(&ex.group, &ex.z0, &[e, f], &params).unwrap();
        // Pretend the same shape certified k = 3 with zero error mass: the
        // bound p^{-1} - (2/3)^3 = 1/27 > 0 then contradicts mass 0.
        cert.params = StructureParams::new(rat(1, 81), 1, rat(1, 10)).unwrap();
        let diag = optimality_diagnostic(3, 3, &cert).unwrap();
        assert!(diag.premises_hold);
        assert!(!diag.consistent);
        assert_eq!(diag.min_i_len, 2);
    }

    #[test]
    fn materialization_cap() {
        let f = min_combiner();
        // n = 13 gives 3^13 > 2^20 points.
        let (e, _) = tribes(&f, &[0], &[1, 2], &[1, 2], 13, 1).unwrap();
        assert!(matches!(e.materialize(), Err(Error::CapacityExceeded(_))));
    }
}
