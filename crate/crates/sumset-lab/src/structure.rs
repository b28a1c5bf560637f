//! End-to-end structure extraction. Decomposes the coordinates, keeps the
//! dense pseudorandom fibers of each set, and emits a certificate recording
//! the kept sets over G^I, the exact error masses, and whether the kept sets
//! still avoid Z_0^I. Verification recomputes every claim from scratch.

use serde::{Deserialize, Serialize};

use crate::counting::{check_instance, count_tuples};
use crate::error::{Error, Result};
use crate::group::{FiniteAbelianGroup, GroupSubset};
use crate::rat::{fmt_rat, parse_rat, rat, rat_from_counts, Rat};
use crate::regularity::{decompose, is_pseudorandom, DecompositionResult, RegularityParams};
use crate::setfile::{parse_set_file, write_set_file};
use crate::tensor::{cylinder, fibers, restrict, CoordinateSet, PowerShape, TensorSet};

/// Pipeline parameters. The pseudorandomness pair (r, beta) is user-supplied;
/// no claim is made that it suffices for the target epsilon, which is why the
/// avoidance verdict on I is computed instead of assumed.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureParams {
    pub epsilon: Rat,
    pub r: usize,
    pub beta: Rat,
    /// Tolerated fraction of non-pseudorandom fibers per set.
    pub alpha: Rat,
}

impl StructureParams {
    /// alpha defaults to epsilon/2.
    pub fn new(epsilon: Rat, r: usize, beta: Rat) -> Result<Self> {
        let alpha = epsilon / rat(2, 1);
        Self::with_alpha(epsilon, r, beta, alpha)
    }

    pub fn with_alpha(epsilon: Rat, r: usize, beta: Rat, alpha: Rat) -> Result<Self> {
        if epsilon <= rat(0, 1) || epsilon > rat(1, 1) {
            return Err(Error::InvalidInput(format!(
                "epsilon must lie in (0, 1], got {}",
                fmt_rat(&epsilon)
            )));
        }
        RegularityParams::new(r, beta, alpha)?;
        Ok(StructureParams { epsilon, r, beta, alpha })
    }

    pub fn regularity(&self) -> RegularityParams {
        RegularityParams::new(self.r, self.beta, self.alpha)
            .expect("validated at construction")
    }

    /// Density threshold for keeping a fiber.
    pub fn half_epsilon(&self) -> Rat {
        self.epsilon / rat(2, 1)
    }
}

/// Output of the pipeline: coordinates I, one kept set E'_j over G^I per
/// input set, the exact mass |E_j \ (E'_j x G^{I^c})| / |G|^n each, and the
/// avoidance verdict for the kept sets on I.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureCertificate {
    pub i_set: CoordinateSet,
    pub primes: Vec<TensorSet>,
    pub error_masses: Vec<Rat>,
    pub avoidance_on_i: bool,
    pub sparse_branch: bool,
    pub params: StructureParams,
}

/// Certificate plus the decomposition trace when one ran.
#[derive(Clone, Debug)]
pub struct ExtractionOutcome {
    pub certificate: StructureCertificate,
    /// None on the sparse branch, which needs no decomposition.
    pub decomposition: Option<DecompositionResult>,
}

fn check_pipeline_inputs(
    g: &FiniteAbelianGroup,
    sets: &[TensorSet],
    z0: &GroupSubset,
) -> Result<PowerShape> {
    if z0.is_empty() {
        return Err(Error::InvalidInput("Z_0 must be non-empty".into()));
    }
    check_instance(g, sets, z0)
}

/// Runs the full pipeline and keeps the decomposition trace.
///
/// If some input set has density <= epsilon the sparse branch fires: I = {1},
/// the kept set of the first sparse input is empty and every other kept set
/// is all of G^I, which makes the certificate valid outright. Otherwise the
/// coordinates are decomposed at (r, beta, alpha) and a fiber of E_j is kept
/// when it is (r, beta)-pseudorandom with density strictly above epsilon/2.
pub fn extract_structure_traced(
    g: &FiniteAbelianGroup,
    z0: &GroupSubset,
    sets: &[TensorSet],
    params: &StructureParams,
) -> Result<ExtractionOutcome> {
    check_pipeline_inputs(g, sets, z0)?;
    let n = sets[0].n();
    let alphabet = g.order() as usize;

    if let Some(j) = sets.iter().position(|e| e.density() <= params.epsilon) {
        let i_set = CoordinateSet::new(&[0], n)?;
        let mut primes = Vec::with_capacity(sets.len());
        let mut error_masses = Vec::with_capacity(sets.len());
        for (k, e) in sets.iter().enumerate() {
            if k == j {
                primes.push(TensorSet::empty(alphabet, 1)?);
                error_masses.push(e.density());
            } else {
                primes.push(TensorSet::full(alphabet, 1)?);
                error_masses.push(rat(0, 1));
            }
        }
        let avoidance_on_i = count_tuples(g, &primes, z0)?.count == 0;
        return Ok(ExtractionOutcome {
            certificate: StructureCertificate {
                i_set,
                primes,
                error_masses,
                avoidance_on_i,
                sparse_branch: true,
                params: params.clone(),
            },
            decomposition: None,
        });
    }

    let dec = decompose(sets, &params.regularity())?;
    let i_set = dec.i_set.clone();
    let threshold = params.half_epsilon();

    let mut primes = Vec::with_capacity(sets.len());
    let mut error_masses = Vec::with_capacity(sets.len());
    for e in sets {
        let mut kept = TensorSet::empty(alphabet, i_set.len())?;
        for (y, fiber) in fibers(e, &i_set)?.iter().enumerate() {
            if is_pseudorandom(fiber, params.r, &params.beta).pseudorandom
                && fiber.density() > threshold
            {
                kept.insert(y as u64);
            }
        }
        let covered = cylinder(&kept, &i_set, n)?;
        let outside = e.subtract(&covered)?;
        error_masses.push(rat_from_counts(outside.len() as u128, e.space_size() as u128)?);
        primes.push(kept);
    }
    let avoidance_on_i = count_tuples(g, &primes, z0)?.count == 0;

    Ok(ExtractionOutcome {
        certificate: StructureCertificate {
            i_set,
            primes,
            error_masses,
            avoidance_on_i,
            sparse_branch: false,
            params: params.clone(),
        },
        decomposition: Some(dec),
    })
}

pub fn extract_structure(
    g: &FiniteAbelianGroup,
    z0: &GroupSubset,
    sets: &[TensorSet],
    params: &StructureParams,
) -> Result<StructureCertificate> {
    Ok(extract_structure_traced(g, z0, sets, params)?.certificate)
}

/// Independent re-check of a certificate against the original sets.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub recomputed_masses: Vec<Rat>,
    /// Per set: recomputed mass <= epsilon.
    pub mass_ok: Vec<bool>,
    /// Recomputed verdict: kept sets avoid Z_0^I.
    pub avoidance_ok: bool,
    /// Recomputed masses and avoidance verdict equal the certificate fields.
    pub consistent: bool,
    /// Every mass bound holds and avoidance holds.
    pub all_ok: bool,
}

/// Recomputes the error masses and the avoidance verdict from the sets and
/// the certificate's I and kept sets alone, then compares against the bound
/// epsilon and against what the certificate recorded.
pub fn verify_certificate(
    g: &FiniteAbelianGroup,
    z0: &GroupSubset,
    sets: &[TensorSet],
    cert: &StructureCertificate,
    epsilon: &Rat,
) -> Result<VerificationReport> {
    check_pipeline_inputs(g, sets, z0)?;
    let n = sets[0].n();
    if cert.primes.len() != sets.len() {
        return Err(Error::ShapeMismatch(format!(
            "certificate has {} kept sets for {} inputs",
            cert.primes.len(),
            sets.len()
        )));
    }
    if cert.i_set.is_empty() {
        return Err(Error::InvalidInput("certificate coordinate set is empty".into()));
    }
    if let Some(&bad) = cert.i_set.as_slice().iter().find(|&&c| c >= n) {
        return Err(Error::ShapeMismatch(format!(
            "certificate coordinate {bad} out of range for n = {n}"
        )));
    }
    for p in &cert.primes {
        if p.alphabet() as u64 != g.order() || p.n() != cert.i_set.len() {
            return Err(Error::ShapeMismatch(format!(
                "kept set over |X|={} n={} does not match |G|={} |I|={}",
                p.alphabet(),
                p.n(),
                g.order(),
                cert.i_set.len()
            )));
        }
    }

    let mut recomputed_masses = Vec::with_capacity(sets.len());
    let mut mass_ok = Vec::with_capacity(sets.len());
    for (e, kept) in sets.iter().zip(&cert.primes) {
        let covered = cylinder(kept, &cert.i_set, n)?;
        let outside = e.subtract(&covered)?;
        let mass = rat_from_counts(outside.len() as u128, e.space_size() as u128)?;
        mass_ok.push(mass <= *epsilon);
        recomputed_masses.push(mass);
    }
    let avoidance_ok = count_tuples(g, &cert.primes, z0)?.count == 0;
    let consistent =
        recomputed_masses == cert.error_masses && avoidance_ok == cert.avoidance_on_i;
    let all_ok = mass_ok.iter().all(|&b| b) && avoidance_ok;

    Ok(VerificationReport { recomputed_masses, mass_ok, avoidance_ok, consistent, all_ok })
}

/// |S cap prod E_i| / |S| for S = {tuples summing into Z_0^n}, exact.
pub fn empirical_count_ratio(
    g: &FiniteAbelianGroup,
    z0: &GroupSubset,
    sets: &[TensorSet],
) -> Result<Rat> {
    let res = count_tuples(g, sets, z0)?;
    if res.tuple_space == 0 {
        return Err(Error::InvalidInput("empty Z_0 leaves no tuples to count".into()));
    }
    rat_from_counts(res.count, res.tuple_space)
}

/// One assignment tuple over G^I whose digitwise sum lands in Z_0^I, together
/// with the exact tuple ratio of the corresponding fibers on I^c.
#[derive(Clone, Debug)]
pub struct ReplayFinding {
    /// Per set: the assignment digits over the certificate's I.
    pub assignments: Vec<Vec<u64>>,
    /// Ratio of the restricted sets on the complementary coordinates.
    pub ratio: Rat,
    /// A tuple of full points (one per set, each in its set) whose sum lies
    /// in Z_0^n, present exactly when the ratio is positive and the fiber
    /// product is small enough to search.
    pub global_witness: Option<Vec<u64>>,
}

const REPLAY_SEARCH_MAX: u128 = 1 << 22;

fn witness_in_fibers(
    g: &FiniteAbelianGroup,
    fiber_sets: &[TensorSet],
    z0: &GroupSubset,
) -> Option<Vec<u64>> {
    let points: Vec<Vec<u64>> = fiber_sets.iter().map(|f| f.iter().collect()).collect();
    let mut total: u128 = 1;
    for p in &points {
        total = total.saturating_mul(p.len() as u128);
    }
    if total == 0 || total > REPLAY_SEARCH_MAX {
        return None;
    }
    let shape = fiber_sets[0].shape();
    let m = shape.n();
    let mut idx = vec![0usize; points.len()];
    loop {
        let sum = points
            .iter()
            .zip(&idx)
            .map(|(p, &i)| p[i])
            .fold(0u64, |acc, q| shape.add_points(g, acc, q));
        if (0..m).all(|k| z0.contains(shape.digit(sum, k))) {
            return Some(points.iter().zip(&idx).map(|(p, &i)| p[i]).collect());
        }
        let mut pos = points.len();
        loop {
            if pos == 0 {
                return None;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < points[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Replays the counting step behind a failed avoidance verdict.
///
/// Enumerates assignment tuples from the certificate's kept sets whose sum
/// lands in Z_0^I (each one witnesses the failure) and computes the exact
/// tuple ratio of the corresponding fibers on I^c. A positive ratio merges
/// into a full tuple violating global avoidance, which the finding carries;
/// all-zero ratios mean the inputs avoid Z_0^n globally and the chosen
/// (r, beta, epsilon) were too weak to see it. At most `limit` findings are
/// returned (0 = no cap), in lexicographic assignment order.
pub fn contradiction_replay(
    g: &FiniteAbelianGroup,
    z0: &GroupSubset,
    sets: &[TensorSet],
    cert: &StructureCertificate,
    limit: usize,
) -> Result<Vec<ReplayFinding>> {
    check_pipeline_inputs(g, sets, z0)?;
    let n = sets[0].n();
    if cert.primes.len() != sets.len() {
        return Err(Error::ShapeMismatch(format!(
            "certificate has {} kept sets for {} inputs",
            cert.primes.len(),
            sets.len()
        )));
    }
    let i_set = &cert.i_set;
    let y_shape = PowerShape::new(g.order() as usize, i_set.len())?;
    let comp = i_set.complement(n);

    let kept_points: Vec<Vec<u64>> = cert.primes.iter().map(|p| p.iter().collect()).collect();
    if kept_points.iter().any(|p| p.is_empty()) {
        return Ok(Vec::new());
    }

    let mut findings = Vec::new();
    let mut idx = vec![0usize; kept_points.len()];
    'outer: loop {
        let ys: Vec<u64> = kept_points.iter().zip(&idx).map(|(p, &i)| p[i]).collect();
        let sum = ys.iter().fold(0u64, |acc, &q| y_shape.add_points(g, acc, q));
        if (0..i_set.len()).all(|k| z0.contains(y_shape.digit(sum, k))) {
            let mut fiber_sets = Vec::with_capacity(sets.len());
            for (e, &y) in sets.iter().zip(&ys) {
                fiber_sets.push(restrict(e, i_set, &y_shape.decode(y))?);
            }
            let (ratio, witness) = if comp.is_empty() {
                // Every fiber is a point of X^0; the empty sum lies in Z_0^0.
                if fiber_sets.iter().all(|f| !f.is_empty()) {
                    (rat(1, 1), Some(vec![0u64; sets.len()]))
                } else {
                    (rat(0, 1), None)
                }
            } else {
                let r = empirical_count_ratio(g, z0, &fiber_sets)?;
                let w = if r > rat(0, 1) {
                    witness_in_fibers(g, &fiber_sets, z0)
                } else {
                    None
                };
                (r, w)
            };
            let global_witness = witness.map(|rest_points| {
                let ambient = sets[0].shape();
                let rest_shape = fiber_sets[0].shape();
                rest_points
                    .iter()
                    .zip(&ys)
                    .map(|(&rp, &y)| {
                        let mut digits = vec![0u64; n];
                        for (k, c) in i_set.iter().enumerate() {
                            digits[c] = y_shape.digit(y, k);
                        }
                        for (k, c) in comp.iter().enumerate() {
                            digits[c] = rest_shape.digit(rp, k);
                        }
                        ambient.encode(&digits).expect("digits from valid points")
                    })
                    .collect()
            });
            findings.push(ReplayFinding {
                assignments: ys.iter().map(|&y| y_shape.decode(y)).collect(),
                ratio,
                global_witness,
            });
            if limit != 0 && findings.len() >= limit {
                break 'outer;
            }
        }
        let mut pos = kept_points.len();
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < kept_points[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
    Ok(findings)
}

#[derive(Serialize, Deserialize)]
struct ParamsJson {
    epsilon: String,
    r: usize,
    beta: String,
    alpha: String,
}

#[derive(Serialize, Deserialize)]
struct CertificateJson {
    #[serde(rename = "I")]
    i: Vec<usize>,
    primes: Vec<String>,
    error_masses: Vec<String>,
    #[serde(rename = "avoidance_on_I")]
    avoidance_on_i: bool,
    sparse_branch: bool,
    params: ParamsJson,
}

impl StructureCertificate {
    /// JSON with 1-based coordinates and kept sets in the set-file format.
    pub fn to_json(&self) -> String {
        let json = CertificateJson {
            i: self.i_set.to_one_based(),
            primes: self.primes.iter().map(write_set_file).collect(),
            error_masses: self.error_masses.iter().map(fmt_rat).collect(),
            avoidance_on_i: self.avoidance_on_i,
            sparse_branch: self.sparse_branch,
            params: ParamsJson {
                epsilon: fmt_rat(&self.params.epsilon),
                r: self.params.r,
                beta: fmt_rat(&self.params.beta),
                alpha: fmt_rat(&self.params.alpha),
            },
        };
        serde_json::to_string_pretty(&json).expect("plain struct serializes")
    }

    /// Parses the JSON form; n is the ambient number of coordinates, which
    /// the JSON does not carry.
    pub fn from_json(text: &str, n: usize) -> Result<Self> {
        let json: CertificateJson = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("certificate JSON: {e}")))?;
        let mut coords = Vec::with_capacity(json.i.len());
        for &c in &json.i {
            if c == 0 {
                return Err(Error::Parse("coordinates are 1-based".into()));
            }
            coords.push(c - 1);
        }
        let i_set = CoordinateSet::new(&coords, n)?;
        let mut primes = Vec::with_capacity(json.primes.len());
        for text in &json.primes {
            let p = parse_set_file(text)?;
            if p.n() != i_set.len() {
                return Err(Error::ShapeMismatch(format!(
                    "kept set over n={} does not match |I|={}",
                    p.n(),
                    i_set.len()
                )));
            }
            if let Some(prev) = primes.last() {
                let prev: &TensorSet = prev;
                if prev.alphabet() != p.alphabet() {
                    return Err(Error::ShapeMismatch(
                        "kept sets use different alphabets".into(),
                    ));
                }
            }
            primes.push(p);
        }
        let mut error_masses = Vec::with_capacity(json.error_masses.len());
        for s in &json.error_masses {
            error_masses.push(parse_rat(s)?);
        }
        if error_masses.len() != primes.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} error masses for {} kept sets",
                error_masses.len(),
                primes.len()
            )));
        }
        let params = StructureParams::with_alpha(
            parse_rat(&json.params.epsilon)?,
            json.params.r,
            parse_rat(&json.params.beta)?,
            parse_rat(&json.params.alpha)?,
        )?;
        Ok(StructureCertificate {
            i_set,
            primes,
            error_masses,
            avoidance_on_i: json.avoidance_on_i,
            sparse_branch: json.sparse_branch,
            params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;

    fn z3_worked_example() -> (FiniteAbelianGroup, GroupSubset, Vec<TensorSet>, StructureParams)
    {
        let g = make_group(&[3]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[0, 1]).unwrap();
        // E = {2} x Z_3, F = {0} x Z_3; the first coordinate is the most
        // significant digit.
        let e = TensorSet::from_points(3, 2, &[6, 7, 8]).unwrap();
        let f = TensorSet::from_points(3, 2, &[0, 1, 2]).unwrap();
        let params = StructureParams::new(rat(1, 10), 1, rat(1, 10)).unwrap();
        (g, z0, vec![e, f], params)
    }

    #[test]
    fn params_default_alpha_and_validation() {
        let p = StructureParams::new(rat(1, 10), 1, rat(1, 10)).unwrap();
        assert_eq!(p.alpha, rat(1, 20));
        assert_eq!(p.half_epsilon(), rat(1, 20));
        assert!(StructureParams::new(rat(0, 1), 1, rat(1, 10)).is_err());
        assert!(StructureParams::new(rat(3, 2), 1, rat(1, 10)).is_err());
        assert!(StructureParams::with_alpha(rat(1, 2), 1, rat(1, 10), rat(0, 1)).is_err());
    }

    #[test]
    fn worked_example_certificate() {
        let (g, z0, sets, params) = z3_worked_example();
        let out = extract_structure_traced(&g, &z0, &sets, &params).unwrap();
        let cert = &out.certificate;
        assert!(!cert.sparse_branch);
        assert_eq!(cert.i_set.as_slice(), &[0]);
        assert_eq!(cert.primes[0].iter().collect::<Vec<_>>(), vec![2]);
        assert_eq!(cert.primes[1].iter().collect::<Vec<_>>(), vec![0]);
        assert_eq!(cert.error_masses, vec![rat(0, 1), rat(0, 1)]);
        assert!(cert.avoidance_on_i);
        assert!(out.decomposition.is_some());

        let report = verify_certificate(&g, &z0, &sets, cert, &params.epsilon).unwrap();
        assert!(report.all_ok);
        assert!(report.consistent);
        assert_eq!(report.recomputed_masses, cert.error_masses);
    }

    #[test]
    fn sparse_branch_on_empty_set() {
        let g = make_group(&[3]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[0, 1]).unwrap();
        let e = TensorSet::empty(3, 2).unwrap();
        let f = TensorSet::full(3, 2).unwrap();
        let params = StructureParams::new(rat(1, 10), 1, rat(1, 10)).unwrap();
        let cert = extract_structure(&g, &z0, &[e.clone(), f.clone()], &params).unwrap();
        assert!(cert.sparse_branch);
        assert_eq!(cert.i_set.as_slice(), &[0]);
        assert!(cert.primes[0].is_empty());
        assert!(cert.primes[1].is_full());
        assert_eq!(cert.error_masses, vec![rat(0, 1), rat(0, 1)]);
        assert!(cert.avoidance_on_i);

        let report = verify_certificate(&g, &z0, &[e, f], &cert, &params.epsilon).unwrap();
        assert!(report.all_ok && report.consistent);
    }

    #[test]
    fn sparse_branch_picks_first_sparse_index_and_records_its_mass() {
        let g = make_group(&[3]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[0]).unwrap();
        let mut e = TensorSet::empty(3, 2).unwrap();
        e.insert(4);
        let f = TensorSet::full(3, 2).unwrap();
        let params = StructureParams::new(rat(1, 2), 1, rat(1, 10)).unwrap();
        // d(E) = 1/9 <= 1/2 fires the sparse branch; its mass is d(E).
        let cert = extract_structure(&g, &z0, &[e, f], &params).unwrap();
        assert!(cert.sparse_branch);
        assert_eq!(cert.error_masses, vec![rat(1, 9), rat(0, 1)]);
        assert!(cert.avoidance_on_i);
    }

    #[test]
    fn tampered_certificate_fails_avoidance() {
        let (g, z0, sets, params) = z3_worked_example();
        let mut cert = extract_structure(&g, &z0, &sets, &params).unwrap();
        cert.primes[0] = TensorSet::full(3, 1).unwrap();
        let report = verify_certificate(&g, &z0, &sets, &cert, &params.epsilon).unwrap();
        // full + {0} covers Z_0 on I, so the recomputed verdict flips.
        assert!(!report.avoidance_ok);
        assert!(!report.all_ok);
        assert!(!report.consistent);
    }

    #[test]
    fn epsilon_one_masses_trivially_pass() {
        let (g, z0, sets, params) = z3_worked_example();
        let mut cert = extract_structure(&g, &z0, &sets, &params).unwrap();
        // Wreck the kept sets; mass bounds still hold at epsilon = 1.
        cert.primes[0] = TensorSet::empty(3, 1).unwrap();
        cert.primes[1] = TensorSet::empty(3, 1).unwrap();
        let report = verify_certificate(&g, &z0, &sets, &cert, &rat(1, 1)).unwrap();
        assert!(report.mass_ok.iter().all(|&b| b));
        assert!(report.avoidance_ok);
    }

    #[test]
    fn planted_cylinder_instance_verifies() {
        // E = C_1 x Z_2, F = C_2 x Z_2 over Z_2^3 with C_1 + C_2 avoiding
        // {0}^2 on the planted coordinates {0, 1}.
        let g = make_group(&[2]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[0]).unwrap();
        let mut e = TensorSet::empty(2, 3).unwrap();
        for digits in [[0u64, 1], [1, 0]] {
            for last in 0..2u64 {
                e.insert(digits[0] * 4 + digits[1] * 2 + last);
            }
        }
        let mut f = TensorSet::empty(2, 3).unwrap();
        for last in 0..2u64 {
            f.insert(last);
        }
        let params = StructureParams::new(rat(1, 5), 1, rat(1, 10)).unwrap();
        let cert = extract_structure(&g, &z0, &[e.clone(), f.clone()], &params).unwrap();
        assert!(!cert.sparse_branch);
        let report = verify_certificate(&g, &z0, &[e, f], &cert, &params.epsilon).unwrap();
        assert!(report.all_ok, "masses {:?}", report.recomputed_masses);
        assert!(report.consistent);
        assert!(cert.error_masses.iter().all(|m| *m <= params.epsilon));
    }

    #[test]
    fn empirical_ratio_full_and_empty() {
        let g = make_group(&[3]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[0, 1]).unwrap();
        let full = TensorSet::full(3, 2).unwrap();
        let empty = TensorSet::empty(3, 2).unwrap();
        assert_eq!(
            empirical_count_ratio(&g, &z0, &[full.clone(), full.clone()]).unwrap(),
            rat(1, 1)
        );
        assert_eq!(empirical_count_ratio(&g, &z0, &[full, empty]).unwrap(), rat(0, 1));
    }

    #[test]
    fn replay_on_global_failure_yields_positive_ratios_and_witnesses() {
        let g = make_group(&[3]).unwrap();
        let z0 = GroupSubset::from_elements(&g, &[0, 1]).unwrap();
        let full = TensorSet::full(3, 1).unwrap();
        let sets = vec![full.clone(), full];
        let params = StructureParams::new(rat(1, 10), 1, rat(1, 10)).unwrap();
        let cert = extract_structure(&g, &z0, &sets, &params).unwrap();
        assert!(!cert.avoidance_on_i);
        let findings = contradiction_replay(&g, &z0, &sets, &cert, 3).unwrap();
        assert_eq!(findings.len(), 3);
        for fd in &findings {
            assert_eq!(fd.ratio, rat(1, 1));
            let w = fd.global_witness.as_ref().expect("positive ratio has a witness");
            let sum = w.iter().fold(0u64, |acc, &p| sets[0].shape().add_points(&g, acc, p));
            assert!(z0.contains(sets[0].shape().digit(sum, 0)));
            for (set, &p) in sets.iter().zip(w) {
                assert!(set.contains(p));
            }
        }
    }

    #[test]
    fn replay_under_global_avoidance_sees_only_zero_ratios() {
        let (g, z0, sets, params) = z3_worked_example();
        let mut cert = extract_structure(&g, &z0, &sets, &params).unwrap();
        // Sabotage F' so the kept sums reach Z_0 on I while the true sets
        // still avoid Z_0^n globally.
        let mut bad = TensorSet::empty(3, 1).unwrap();
        bad.insert(1);
        cert.primes[1] = bad;
        let report = verify_certificate(&g, &z0, &sets, &cert, &params.epsilon).unwrap();
        assert!(!report.avoidance_ok);
        let findings = contradiction_replay(&g, &z0, &sets, &cert, 0).unwrap();
        assert!(!findings.is_empty());
        for fd in &findings {
            assert_eq!(fd.ratio, rat(0, 1));
            assert!(fd.global_witness.is_none());
        }
    }

    #[test]
    fn certificate_json_golden() {
        let (g, z0, sets, params) = z3_worked_example();
        let cert = extract_structure(&g, &z0, &sets, &params).unwrap();
        let expected = r#"{
  "I": [
    1
  ],
  "primes": [
    "alphabet 3\nn 1\nindices\n2\n",
    "alphabet 3\nn 1\nindices\n0\n"
  ],
  "error_masses": [
    "0/1",
    "0/1"
  ],
  "avoidance_on_I": true,
  "sparse_branch": false,
  "params": {
    "epsilon": "1/10",
    "r": 1,
    "beta": "1/10",
    "alpha": "1/20"
  }
}"#;
        assert_eq!(cert.to_json(), expected);
    }

    #[test]
    fn certificate_json_roundtrip() {
        let (g, z0, sets, params) = z3_worked_example();
        let cert = extract_structure(&g, &z0, &sets, &params).unwrap();
        let back = StructureCertificate::from_json(&cert.to_json(), sets[0].n()).unwrap();
        assert_eq!(back, cert);
    }

    #[test]
    fn certificate_json_rejects_bad_coordinates() {
        let (g, z0, sets, params) = z3_worked_example();
        let cert = extract_structure(&g, &z0, &sets, &params).unwrap();
        let zero_based = cert.to_json().replace("\n    1\n", "\n    0\n");
        assert!(StructureCertificate::from_json(&zero_based, 2).is_err());
        // Coordinate beyond the ambient n.
        assert!(StructureCertificate::from_json(&cert.to_json(), 0).is_err());
    }
}
