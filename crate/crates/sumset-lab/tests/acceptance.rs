//! End-to-end acceptance checks. Each test exercises one criterion across a
//! seeded random corpus and prints a single PASS line; a failure panics with
//! the offending instance.

use std::io::Write;
use std::time::Instant;

use num::{BigRational, One};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sumset_lab::constructions::{cylinder_family, tribes, tribes_parameters};
use sumset_lab::correlation::{avoidance_coupling, is_rho_one, rho, JointDistribution};
use sumset_lab::counting::{avoids, count_tuples_brute, count_tuples_via_transform};
use sumset_lab::group::{is_in_strict_coset, make_group, FiniteAbelianGroup, GroupSubset};
use sumset_lab::rat::{big_pow, big_to_f64, rat, to_big, Rat};
use sumset_lab::regularity::{energy, fiber_psr_fraction};
use sumset_lab::structure::{extract_structure, verify_certificate, StructureParams};
use sumset_lab::tensor::{
    cylinder, fibers, project, restrict, CombinerTable, CoordinateSet, PowerShape, TensorSet,
};

/// All factor-order multisets with product <= max: one per isomorphism
/// class of abelian groups of order <= max.
fn group_orders_up_to(max: u64) -> Vec<Vec<u64>> {
    fn go(product: u64, max_factor: u64, max: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        for f in (2..=max_factor).rev() {
            if product.saturating_mul(f) > max {
                continue;
            }
            cur.push(f);
            out.push(cur.clone());
            go(product * f, f, max, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(1, max, max, &mut Vec::new(), &mut out);
    out
}

fn random_set(rng: &mut ChaCha8Rng, alphabet: usize, n: usize, density: f64) -> TensorSet {
    let space = (alphabet as u64).pow(n as u32);
    let points: Vec<u64> = (0..space).filter(|_| rng.gen_bool(density)).collect();
    TensorSet::from_points(alphabet, n, &points).unwrap()
}

fn random_nonempty_subset(rng: &mut ChaCha8Rng, g: &FiniteAbelianGroup) -> GroupSubset {
    loop {
        let elems: Vec<u64> = (0..g.order()).filter(|_| rng.gen_bool(0.5)).collect();
        if !elems.is_empty() {
            return GroupSubset::from_elements(g, &elems).unwrap();
        }
    }
}

fn pass(criterion: usize, label: &str, detail: String, started: Instant) {
    // Raw handle: libtest captures the print macros, and these lines should
    // survive a plain `cargo test` run.
    let line = format!(
        "CRITERION {criterion} ({label}): PASS ({detail}, {:.2}s)\n",
        started.elapsed().as_secs_f64()
    );
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
}

#[test]
fn criterion_1_counting_routes_agree() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut instances = 0usize;
    for orders in group_orders_up_to(6) {
        let g = make_group(&orders).unwrap();
        let alphabet = g.order() as usize;
        for n in 1..=3usize {
            for d in 1..=3usize {
                for _ in 0..12 {
                    let density = [0.25, 0.5, 0.75][rng.gen_range(0..3)];
                    let sets: Vec<TensorSet> =
                        (0..d).map(|_| random_set(&mut rng, alphabet, n, density)).collect();
                    let z0 = random_nonempty_subset(&mut rng, &g);
                    let brute = count_tuples_brute(&g, &sets, &z0).unwrap();
                    let transform = count_tuples_via_transform(&g, &sets, &z0).unwrap();
                    assert_eq!(
                        brute, transform,
                        "route mismatch: orders {orders:?} n {n} d {d}"
                    );
                    assert_eq!(avoids(&g, &sets, &z0).unwrap(), brute.count == 0);
                    instances += 1;
                }
            }
        }
    }
    assert!(instances >= 100 * 7);
    assert!(started.elapsed().as_secs() < 60, "criterion 1 exceeded one minute");
    pass(1, "transform vs brute counting", format!("{instances} instances"), started);
}

#[test]
fn criterion_2_rho_one_iff_strict_coset() {
    let started = Instant::now();
    let mut checked = 0usize;
    for orders in group_orders_up_to(8) {
        let g = make_group(&orders).unwrap();
        for mask in 1u64..(1u64 << g.order()) {
            let elems: Vec<u64> = (0..g.order()).filter(|i| mask >> i & 1 == 1).collect();
            let z0 = GroupSubset::from_elements(&g, &elems).unwrap();
            let coset = is_in_strict_coset(&g, &z0).unwrap().is_some();
            let p = avoidance_coupling(&g, &z0, 2).unwrap();
            let combinatorial = is_rho_one(&p).unwrap().rho_is_one;
            assert_eq!(
                combinatorial, coset,
                "verdicts differ: orders {orders:?} Z_0 {elems:?}"
            );
            let spectral = rho(&p).unwrap().value;
            assert_eq!(
                (1.0 - spectral).abs() <= 1e-9,
                coset,
                "spectral value {spectral} disagrees: orders {orders:?} Z_0 {elems:?}"
            );
            checked += 1;
        }
    }
    assert!(started.elapsed().as_secs() < 120, "criterion 2 exceeded two minutes");
    pass(2, "rho = 1 iff Z_0 in a strict coset", format!("{checked} couplings"), started);
}

#[test]
fn criterion_3_decomposition_contract_on_random_families() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (r, beta, alpha) = (1usize, rat(1, 10), rat(1, 10));
    let params = sumset_lab::regularity::RegularityParams::new(r, beta, alpha).unwrap();
    let mut instances = 0usize;
    for (q, n) in [(2usize, 6usize), (3, 5)] {
        for d in [2usize, 3] {
            for _ in 0..13 {
                let density = [0.3, 0.5, 0.7][rng.gen_range(0..3)];
                let sets: Vec<TensorSet> =
                    (0..d).map(|_| random_set(&mut rng, q, n, density)).collect();
                let result = sumset_lab::regularity::decompose(&sets, &params).unwrap();

                assert!(!result.i_set.is_empty());
                let bound = rat(2 * (q as i128).pow(r as u32), 1) / (alpha * beta * beta);
                assert!(rat(result.trace.len() as i128, 1) <= bound);

                for (s, step) in result.trace.iter().enumerate() {
                    let i_after = if s + 1 < result.trace.len() {
                        result.trace[s + 1].i_before.clone()
                    } else {
                        result.i_set.clone()
                    };
                    for e in &sets {
                        assert!(
                            energy(e, &i_after).unwrap() >= energy(e, &step.i_before).unwrap(),
                            "energy dropped while I grew"
                        );
                    }
                }
                for (j, e) in sets.iter().enumerate() {
                    let frac = fiber_psr_fraction(e, &result.i_set, r, &beta).unwrap();
                    assert_eq!(frac, result.fiber_report[j]);
                    assert!(frac <= alpha, "final bad-fiber fraction above alpha");
                }
                instances += 1;
            }
        }
    }
    assert!(instances >= 50);
    assert!(started.elapsed().as_secs() < 300, "criterion 3 exceeded five minutes");
    pass(3, "decomposition contract", format!("{instances} families"), started);
}

/// Z_0 choices that are proper and not inside any strict coset, so planted
/// cylinder instances exist and the structure guarantee applies.
fn usable_z0(rng: &mut ChaCha8Rng, g: &FiniteAbelianGroup) -> GroupSubset {
    loop {
        let z0 = random_nonempty_subset(rng, g);
        if !z0.is_full() && is_in_strict_coset(g, &z0).unwrap().is_none() {
            return z0;
        }
    }
}

#[test]
fn criterion_4_planted_cylinders_yield_verified_certificates() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let eps = rat(1, 10);
    let params = StructureParams::new(eps, 1, rat(1, 10)).unwrap();
    let groups = [vec![3u64], vec![4], vec![2, 2]];
    let mut instances = 0usize;
    while instances < 30 {
        let orders = &groups[rng.gen_range(0..groups.len())];
        let g = make_group(orders).unwrap();
        let alphabet = g.order() as usize;
        let n = rng.gen_range(1..=3usize);
        let z0 = usable_z0(&mut rng, &g);

        let planted: Vec<usize> = {
            let mut coords: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            if coords.is_empty() {
                coords.push(rng.gen_range(0..n));
            }
            coords
        };
        let i0 = CoordinateSet::new(&planted, n).unwrap();
        let d = if rng.gen_bool(0.8) { 2 } else { 3 };

        // Random cores that avoid, falling back to aligned singletons whose
        // digit sums land outside Z_0.
        let mut cores: Option<Vec<TensorSet>> = None;
        for _ in 0..300 {
            let cand: Vec<TensorSet> = (0..d)
                .map(|_| random_set(&mut rng, alphabet, i0.len(), 0.3))
                .collect();
            if cand.iter().any(|c| c.is_empty()) {
                continue;
            }
            if avoids(&g, &cand, &z0).unwrap() {
                cores = Some(cand);
                break;
            }
        }
        let cores = cores.unwrap_or_else(|| {
            let w = (0..g.order()).find(|&w| !z0.contains(w)).unwrap();
            let shape = PowerShape::new(alphabet, i0.len()).unwrap();
            let all_w = shape.encode(&vec![w; i0.len()]).unwrap();
            let zero = 0u64;
            let mut cs =
                vec![TensorSet::from_points(alphabet, i0.len(), &[all_w]).unwrap()];
            for _ in 1..d {
                cs.push(TensorSet::from_points(alphabet, i0.len(), &[zero]).unwrap());
            }
            cs
        });

        let family = cylinder_family(&g, &z0, &i0, &cores, n).unwrap();
        let sets: Vec<TensorSet> = family.iter().map(|s| s.materialize().unwrap()).collect();

        let cert = extract_structure(&g, &z0, &sets, &params).unwrap();
        let report = verify_certificate(&g, &z0, &sets, &cert, &eps).unwrap();
        assert!(
            report.all_ok && report.consistent,
            "certificate failed verification: orders {orders:?} n {n} planted {planted:?} \
             masses {:?} avoidance {}",
            report.recomputed_masses,
            report.avoidance_ok
        );
        instances += 1;
    }
    assert!(started.elapsed().as_secs() < 120, "criterion 4 exceeded two minutes");
    pass(4, "planted cylinders verify", format!("{instances} instances"), started);
}

#[test]
fn criterion_5_tribes_closed_forms_and_parameters() {
    let started = Instant::now();
    // min on {0, 1, 2} with A = B = {1, 2}: every combined value is >= 1,
    // so Z_0 = {0} is dodged and a = b = 2/3.
    let f = CombinerTable::from_fn(3, 3, 3, |x, y| x.min(y)).unwrap();
    let (e, fl) = tribes(&f, &[0], &[1, 2], &[1, 2], 2, 2).unwrap();

    let third = to_big(&rat(1, 3));
    let expect_e = big_pow(&(BigRational::one() - big_pow(&third, 2)), 2);
    let expect_f =
        BigRational::one() - big_pow(&(BigRational::one() - big_pow(&(third.clone() + third), 2)), 2);
    assert_eq!(*e.density(), expect_e);
    assert_eq!(*fl.density(), expect_f);
    assert_eq!(expect_e, to_big(&rat(64, 81)));
    assert_eq!(expect_f, to_big(&rat(56, 81)));

    // Materialization certifies the closed form against a popcount.
    let em = e.materialize().unwrap();
    let fm = fl.materialize().unwrap();
    assert_eq!(em.len(), 64);
    assert_eq!(fm.len(), 56);
    assert!(sumset_lab::tensor::generic_avoids(&f, &em, &fm, &[0]).unwrap());

    // Parameter picker: closed-form densities of the sized-up families meet
    // the advertised bounds for both target precisions.
    let (a, b) = (rat(2, 3), rat(2, 3));
    for eps in [rat(1, 10), rat(1, 100)] {
        let (r, s) = tribes_parameters(&a, &b, &eps).unwrap();
        let big = |x: &Rat| to_big(x);
        let density_f = BigRational::one()
            - big_pow(&(BigRational::one() - big_pow(&big(&b), r as u32)), s as u32);
        let density_e =
            big_pow(&(BigRational::one() - big_pow(&(BigRational::one() - big(&a)), r as u32)), s as u32);

        // 1 - d(F) <= eps exactly.
        assert!(BigRational::one() - density_f <= big(&eps), "F density bound missed");
        // 1 - d(E) <= 2 eps log(1/eps), evaluated in floating point.
        let missing_e = big_to_f64(&(BigRational::one() - density_e));
        let eps_f = big_to_f64(&big(&eps));
        assert!(
            missing_e <= 2.0 * eps_f * (1.0 / eps_f).ln() + 1e-12,
            "E density bound missed: 1 - d(E) = {missing_e}"
        );
    }
    pass(5, "tribes densities and parameters", "r=2 s=2 worked pair, eps 1/10 and 1/100".into(), started);
}

#[test]
fn criterion_6_spectral_vs_ace_and_product_distributions() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut full_support = 0usize;
    while full_support < 100 {
        let su = rng.gen_range(2..=5usize);
        let sv = rng.gen_range(2..=5usize);
        let weights: Vec<i128> = (0..su * sv).map(|_| rng.gen_range(1..=99i128)).collect();
        let total: i128 = weights.iter().sum();
        let mass: Vec<Rat> = weights.iter().map(|&w| rat(w, total)).collect();
        let p = JointDistribution::new(vec![su, sv], mass).unwrap();
        let w = rho(&p).unwrap();
        assert!(
            (w.value - w.ace_value).abs() <= 1e-6,
            "spectral {} vs ace {} differ", w.value, w.ace_value
        );
        assert!((w.top_singular_value - 1.0).abs() <= 1e-12);
        full_support += 1;
    }

    let mut products = 0usize;
    while products < 100 {
        let su = rng.gen_range(2..=5usize);
        let sv = rng.gen_range(2..=5usize);
        let mu: Vec<i128> = (0..su).map(|_| rng.gen_range(1..=99i128)).collect();
        let nu: Vec<i128> = (0..sv).map(|_| rng.gen_range(1..=99i128)).collect();
        let tm: i128 = mu.iter().sum();
        let tn: i128 = nu.iter().sum();
        let mass: Vec<Rat> = (0..su * sv)
            .map(|idx| rat(mu[idx / sv] * nu[idx % sv], tm * tn))
            .collect();
        let p = JointDistribution::new(vec![su, sv], mass).unwrap();
        let w = rho(&p).unwrap();
        assert!(w.value <= 1e-9, "independent coordinates scored rho = {}", w.value);
        products += 1;
    }
    assert!(started.elapsed().as_secs() < 60, "criterion 6 exceeded one minute");
    pass(
        6,
        "spectral vs ACE correlation",
        format!("{full_support} full-support + {products} product distributions"),
        started,
    );
}

#[test]
fn criterion_7_fiber_calculus_round_trips() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let groups = group_orders_up_to(6);
    let mut checked = 0usize;
    while checked < 100 {
        let orders = &groups[rng.gen_range(0..groups.len())];
        let g = make_group(orders).unwrap();
        let alphabet = g.order() as usize;
        let n = rng.gen_range(1..=3usize);
        let e = random_set(&mut rng, alphabet, n, 0.5);

        let mask = rng.gen_range(1..(1u64 << n));
        let coords: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let i_set = CoordinateSet::new(&coords, n).unwrap();

        // Law of total probability: fiber counts sum to |E| and average
        // density reproduces d(E) exactly.
        let fibs = fibers(&e, &i_set).unwrap();
        assert_eq!(fibs.iter().map(|f| f.len()).sum::<u64>(), e.len());
        let assignments = (alphabet as i128).pow(i_set.len() as u32);
        let mut acc = rat(0, 1);
        for f in &fibs {
            acc += f.density() / rat(assignments, 1);
        }
        assert_eq!(acc, e.density());

        // Cylinder round trip: a random core survives cylinder + project,
        // and restriction recovers full or empty fibers pointwise.
        let core = random_set(&mut rng, alphabet, i_set.len(), 0.5);
        let cyl = cylinder(&core, &i_set, n).unwrap();
        assert_eq!(project(&cyl, &i_set).unwrap(), core);
        let shape = PowerShape::new(alphabet, i_set.len()).unwrap();
        for y in 0..shape.size() {
            let fib = restrict(&cyl, &i_set, &shape.decode(y)).unwrap();
            assert_eq!(!fib.is_empty(), core.contains(y));
            if core.contains(y) {
                assert!(fib.is_full());
            }
        }

        // Restriction of E itself glues back under cylinder as a superset.
        let kept = project(&e, &i_set).unwrap();
        let hull = cylinder(&kept, &i_set, n).unwrap();
        for p in e.iter() {
            assert!(hull.contains(p));
        }
        checked += 1;
    }
    pass(7, "fiber calculus round trips", format!("{checked} sets"), started);
}
