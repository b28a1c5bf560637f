//! (r, beta)-pseudorandomness and the simultaneous energy-increment
//! decomposition. All densities and thresholds are exact rationals; no
//! verdict here depends on floating point.

use num::Signed;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rat::{rat, rat_from_counts, Rat};
use crate::tensor::{fiber_counts, fibers, CoordinateSet, PowerShape, TensorSet};

/// r: restriction budget; beta: density deviation bound; alpha: allowed
/// fraction of non-pseudorandom fibers.
#[derive(Clone, Debug)]
pub struct RegularityParams {
    pub r: usize,
    pub beta: Rat,
    pub alpha: Rat,
}

impl RegularityParams {
    pub fn new(r: usize, beta: Rat, alpha: Rat) -> Result<Self> {
        if beta <= rat(0, 1) {
            return Err(Error::InvalidInput("beta must be positive".into()));
        }
        if alpha <= rat(0, 1) {
            return Err(Error::InvalidInput("alpha must be positive".into()));
        }
        Ok(RegularityParams { r, beta, alpha })
    }
}

/// A restriction that moves the density by more than beta.
#[derive(Clone, Debug)]
pub struct PsrWitness {
    pub i_set: CoordinateSet,
    pub y_digits: Vec<u64>,
    pub deviation: Rat,
}

#[derive(Clone, Debug)]
pub struct PseudorandomnessVerdict {
    pub pseudorandom: bool,
    pub witness: Option<PsrWitness>,
}

/// Subsets of `items` of each size 1..=r, sizes ascending, lexicographic
/// within a size. `items` must be sorted.
fn subsets_up_to(items: &[usize], r: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut out = Vec::new();
    for k in 1..=r.min(n) {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.iter().map(|&i| items[i]).collect());
            let mut i = k;
            while i > 0 && idx[i - 1] == n - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

/// Exhaustive test over every I with |I| <= r and every y in X^I. The first
/// violation in (|I|, I, y) order becomes the witness.
pub fn is_pseudorandom(e: &TensorSet, r: usize, beta: &Rat) -> PseudorandomnessVerdict {
    let d0 = e.density();
    let all_coords: Vec<usize> = (0..e.n()).collect();
    for coords in subsets_up_to(&all_coords, r) {
        let i_set = CoordinateSet::new(&coords, e.n()).expect("coords in range");
        let counts = fiber_counts(e, &i_set).expect("shape checked");
        let fiber_space =
            (e.alphabet() as u128).pow((e.n() - i_set.len()) as u32);
        let y_shape = PowerShape::new(e.alphabet(), i_set.len()).expect("within cap");
        for (y, &c) in counts.iter().enumerate() {
            let dev = (rat_from_counts(c as u128, fiber_space).unwrap() - d0).abs();
            if dev > *beta {
                return PseudorandomnessVerdict {
                    pseudorandom: false,
                    witness: Some(PsrWitness {
                        i_set,
                        y_digits: y_shape.decode(y as u64),
                        deviation: dev,
                    }),
                };
            }
        }
    }
    PseudorandomnessVerdict { pseudorandom: true, witness: None }
}

/// E_{y in X^I} d(E_{I->y})^2, exactly.
pub fn energy(e: &TensorSet, i_set: &CoordinateSet) -> Result<Rat> {
    let counts = fiber_counts(e, i_set)?;
    let fiber_space = (e.alphabet() as u128).pow((e.n() - i_set.len()) as u32);
    let sum_sq: u128 = counts.iter().map(|&c| c as u128 * c as u128).sum();
    let total = counts.len() as u128 * fiber_space * fiber_space;
    rat_from_counts(sum_sq, total)
}

/// Exact fraction of y in X^I whose fiber fails is_pseudorandom(r, beta).
pub fn fiber_psr_fraction(
    e: &TensorSet,
    i_set: &CoordinateSet,
    r: usize,
    beta: &Rat,
) -> Result<Rat> {
    let fibs = fibers(e, i_set)?;
    let bad = fibs
        .par_iter()
        .filter(|f| !is_pseudorandom(f, r, beta).pseudorandom)
        .count();
    rat_from_counts(bad as u128, fibs.len() as u128)
}

/// One executed refinement step.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub step: usize,
    pub i_before: CoordinateSet,
    /// E_{I_s}(E_j) for every input set, before the step.
    pub energies_before: Vec<Rat>,
    /// Fraction of non-pseudorandom fibers per set, before the step.
    pub bad_fractions: Vec<Rat>,
    /// Index of the set whose fiber bound failed; None on a forced first
    /// step with nothing to fix.
    pub trigger: Option<usize>,
    /// Coordinates joined into I by this step.
    pub added: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub i_set: CoordinateSet,
    pub trace: Vec<TraceStep>,
    /// Final fiber_psr_fraction per set, recomputed after the loop.
    pub fiber_report: Vec<Rat>,
    pub energies_final: Vec<Rat>,
    /// I grew to all of [n].
    pub exhausted: bool,
}

/// Iteration guard: each triggered step raises the triggering set's energy by
/// at least |X|^{-r} * alpha * beta^2 and energies cap at 1 per set, so d
/// sets allow d * |X|^r / (alpha beta^2) triggers, plus the forced first
/// step. Structurally each step also adds a coordinate, so n + 1 caps it too.
fn iteration_guard(d: usize, alphabet: usize, n: usize, params: &RegularityParams) -> u64 {
    let structural = n as u64 + 1;
    let Some(pow) = (alphabet as i128).checked_pow(params.r as u32) else {
        return structural;
    };
    let per_set =
        rat(pow, 1) / (params.alpha * params.beta * params.beta);
    let energy_bound = (d as i128).saturating_mul(per_set.ceil().to_integer()) + 1;
    u64::try_from(energy_bound.max(1)).map_or(structural, |b| b.min(structural))
}

/// Simultaneous refinement: grow I until every set's restrictions are mostly
/// pseudorandom. The first iteration always executes, so I is never empty.
pub fn decompose(sets: &[TensorSet], params: &RegularityParams) -> Result<DecompositionResult> {
    if sets.is_empty() {
        return Err(Error::InvalidInput("need at least one set".into()));
    }
    let n = sets[0].n();
    if n == 0 {
        return Err(Error::InvalidInput("decomposition needs n >= 1".into()));
    }
    for s in sets {
        if s.alphabet() != sets[0].alphabet() || s.n() != n {
            return Err(Error::ShapeMismatch("input sets share one shape".into()));
        }
    }
    if params.beta <= rat(0, 1) || params.alpha <= rat(0, 1) {
        return Err(Error::InvalidInput("alpha and beta must be positive".into()));
    }

    let guard = iteration_guard(sets.len(), sets[0].alphabet(), n, params);
    let mut i_set = CoordinateSet::empty();
    let mut trace = Vec::new();
    let mut steps: u64 = 0;

    loop {
        let energies: Vec<Rat> = sets
            .iter()
            .map(|s| energy(s, &i_set))
            .collect::<Result<_>>()?;
        let fractions: Vec<Rat> = sets
            .iter()
            .map(|s| fiber_psr_fraction(s, &i_set, params.r, &params.beta))
            .collect::<Result<_>>()?;
        let trigger = fractions.iter().position(|f| *f > params.alpha);

        if trigger.is_none() && steps > 0 {
            break;
        }
        if steps >= guard {
            return Err(Error::InternalInvariant(format!(
                "refinement exceeded {guard} iterations"
            )));
        }

        let added: Vec<usize> = match trigger {
            Some(j) => {
                let comp = i_set.complement(n);
                let fibs = fibers(&sets[j], &i_set)?;
                let mut new_coords: Vec<usize> = fibs
                    .par_iter()
                    .flat_map_iter(|f| {
                        let verdict = is_pseudorandom(f, params.r, &params.beta);
                        let global: Vec<usize> = match verdict.witness {
                            Some(w) => {
                                w.i_set.iter().map(|rel| comp.as_slice()[rel]).collect()
                            }
                            None => Vec::new(),
                        };
                        global
                    })
                    .collect();
                new_coords.sort_unstable();
                new_coords.dedup();
                new_coords.retain(|c| !i_set.contains(*c));
                if new_coords.is_empty() {
                    return Err(Error::InternalInvariant(
                        "triggered step produced no witness coordinates".into(),
                    ));
                }
                new_coords
            }
            // Nothing violates the bounds on the forced first step; commit
            // the first coordinate with a zero increment.
            None => vec![0],
        };

        trace.push(TraceStep {
            step: steps as usize,
            i_before: i_set.clone(),
            energies_before: energies,
            bad_fractions: fractions,
            trigger,
            added: added.clone(),
        });
        i_set = i_set.union(&CoordinateSet::new(&added, n)?);
        steps += 1;
        if i_set.len() == n {
            break;
        }
    }

    let fiber_report: Vec<Rat> = sets
        .iter()
        .map(|s| fiber_psr_fraction(s, &i_set, params.r, &params.beta))
        .collect::<Result<_>>()?;
    let energies_final: Vec<Rat> = sets
        .iter()
        .map(|s| energy(s, &i_set))
        .collect::<Result<_>>()?;
    let exhausted = i_set.len() == n;
    if !exhausted {
        if let Some(bad) = fiber_report.iter().position(|f| *f > params.alpha) {
            return Err(Error::InternalInvariant(format!(
                "set {bad} still violates its fiber bound after refinement"
            )));
        }
    }

    Ok(DecompositionResult { i_set, trace, fiber_report, energies_final, exhausted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_space(n: usize) -> TensorSet {
        // {x in Z_2^n : x_1 = 0}: the first 2^{n-1} indices.
        let mut e = TensorSet::empty(2, n).unwrap();
        for p in 0..1u64 << (n - 1) {
            e.insert(p);
        }
        e
    }

    #[test]
    fn subset_enumeration_order() {
        assert_eq!(
            subsets_up_to(&[0, 1, 2], 2),
            vec![vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert!(subsets_up_to(&[0, 1], 0).is_empty());
    }

    #[test]
    fn pseudorandomness_examples() {
        let beta = rat(2, 5);
        let full = TensorSet::full(3, 3).unwrap();
        assert!(is_pseudorandom(&full, 2, &beta).pseudorandom);

        let e = half_space(2);
        let v = is_pseudorandom(&e, 1, &beta);
        assert!(!v.pseudorandom);
        let w = v.witness.unwrap();
        assert_eq!(w.i_set.as_slice(), &[0]);
        assert_eq!(w.y_digits, vec![0]);
        assert_eq!(w.deviation, rat(1, 2));

        assert!(is_pseudorandom(&e, 0, &beta).pseudorandom);
    }

    #[test]
    fn energy_examples() {
        let e = half_space(2);
        assert_eq!(energy(&e, &CoordinateSet::empty()).unwrap(), rat(1, 4));
        assert_eq!(energy(&e, &CoordinateSet::new(&[0], 2).unwrap()).unwrap(), rat(1, 2));
        let full = TensorSet::full(2, 2).unwrap();
        for coords in [vec![], vec![0], vec![0, 1]] {
            let i_set = CoordinateSet::new(&coords, 2).unwrap();
            assert_eq!(energy(&full, &i_set).unwrap(), rat(1, 1));
        }
    }

    #[test]
    fn fiber_fraction_examples() {
        let e = half_space(3);
        let i_set = CoordinateSet::new(&[0], 3).unwrap();
        assert_eq!(fiber_psr_fraction(&e, &i_set, 1, &rat(1, 10)).unwrap(), rat(0, 1));
        let full = TensorSet::full(2, 3).unwrap();
        assert_eq!(fiber_psr_fraction(&full, &i_set, 2, &rat(1, 100)).unwrap(), rat(0, 1));
    }

    #[test]
    fn decompose_half_space() {
        let params = RegularityParams::new(1, rat(1, 10), rat(1, 10)).unwrap();
        let sets = vec![half_space(3), TensorSet::full(2, 3).unwrap()];
        let r = decompose(&sets, &params).unwrap();
        assert_eq!(r.i_set.as_slice(), &[0]);
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace[0].trigger, Some(0));
        assert!(r.fiber_report.iter().all(|f| *f == rat(0, 1)));
        assert!(!r.exhausted);
        // Energy of the half space jumps from 1/4 to 1/2 on the step.
        assert_eq!(r.trace[0].energies_before[0], rat(1, 4));
        assert_eq!(r.energies_final[0], rat(1, 2));
    }

    #[test]
    fn decompose_full_sets_forced_step() {
        let params = RegularityParams::new(1, rat(1, 10), rat(1, 10)).unwrap();
        let sets = vec![TensorSet::full(2, 3).unwrap(), TensorSet::full(2, 3).unwrap()];
        let r = decompose(&sets, &params).unwrap();
        assert_eq!(r.i_set.as_slice(), &[0]);
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace[0].trigger, None);
        assert_eq!(r.trace[0].energies_before, r.energies_final);
    }

    #[test]
    fn decompose_respects_degenerate_thresholds() {
        // beta >= 1 can never be violated: only the forced step runs.
        let params = RegularityParams::new(2, rat(3, 2), rat(1, 2)).unwrap();
        let sets = vec![TensorSet::from_points(3, 2, &[0, 2, 3, 7]).unwrap()];
        let r = decompose(&sets, &params).unwrap();
        assert_eq!(r.i_set.as_slice(), &[0]);
        assert_eq!(r.trace[0].trigger, None);
    }

    #[test]
    fn decompose_output_contract_on_structured_set() {
        // x_1 + x_2 = 0 over Z_3^4: no single-coordinate restriction moves
        // the density, but pairs on {0,1} do.
        let shape = PowerShape::new(3, 4).unwrap();
        let mut e = TensorSet::empty(3, 4).unwrap();
        for p in shape.points() {
            if (shape.digit(p, 0) + shape.digit(p, 1)).is_multiple_of(3) {
                e.insert(p);
            }
        }
        let params = RegularityParams::new(2, rat(1, 10), rat(1, 10)).unwrap();
        let r = decompose(&[e.clone()], &params).unwrap();
        assert!(r.i_set.contains(0) && r.i_set.contains(1));
        let check = fiber_psr_fraction(&e, &r.i_set, 2, &params.beta).unwrap();
        assert!(check <= params.alpha);
        // Monotone energies along the trace.
        let mut prev = r.trace[0].energies_before.clone();
        for step in &r.trace[1..] {
            for (a, b) in prev.iter().zip(&step.energies_before) {
                assert!(b >= a);
            }
            prev = step.energies_before.clone();
        }
        for (a, b) in prev.iter().zip(&r.energies_final) {
            assert!(b >= a);
        }
    }
}
