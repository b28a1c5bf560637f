//! Exact cyclic transforms modulo primes q = c * 2^a * L + 1, where L is the
//! lcm of the group's factor orders. Every factor order m divides q - 1, so
//! each axis of G^n carries an order-m root of unity and convolution counts
//! come out exactly after CRT across enough primes.

use crate::error::{Error, Result};
use crate::group::FiniteAbelianGroup;

#[inline]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    (a as u128 * b as u128 % q as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let s = d.trailing_zeros();
    d >>= s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors by trial division; intended for n <= 2^40 where the
/// loop to sqrt(n) stays cheap.
pub fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut push = |p: u64, n: &mut u64| {
        if (*n).is_multiple_of(p) {
            out.push(p);
            while (*n).is_multiple_of(p) {
                *n /= p;
            }
        }
    };
    push(2, &mut n);
    let mut p = 3;
    while p * p <= n {
        push(p, &mut n);
        p += 2;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Smallest generator of the multiplicative group mod prime q.
pub fn primitive_root(q: u64, q_minus_1_factors: &[u64]) -> u64 {
    'cand: for g in 2.. {
        for &p in q_minus_1_factors {
            if pow_mod(g, (q - 1) / p, q) == 1 {
                continue 'cand;
            }
        }
        return g;
    }
    unreachable!()
}

/// Prime with q ≡ 1 mod l, paired with a primitive root.
#[derive(Clone, Copy, Debug)]
pub struct TransformPrime {
    pub q: u64,
    pub root: u64,
}

/// Finds primes q = c * (l * 2^a) + 1 until their product exceeds `bound`.
/// The base l * 2^a is pushed to ~2^40 so a handful of primes covers any
/// count the rest of the crate can represent.
pub fn find_transform_primes(l: u64, bound: u128) -> Result<Vec<TransformPrime>> {
    debug_assert!(l >= 1);
    let mut base = l;
    while base < 1 << 40 {
        base <<= 1;
    }
    let mut factors = distinct_prime_factors(l);
    if !factors.contains(&2) {
        factors.push(2);
    }
    factors.sort_unstable();

    let mut primes = Vec::new();
    let mut product: u128 = 1;
    for c in 1u64..1 << 21 {
        let q = match c.checked_mul(base).and_then(|cb| cb.checked_add(1)) {
            Some(q) if q < 1 << 62 => q,
            _ => break,
        };
        if !is_prime_u64(q) {
            continue;
        }
        let mut qf = factors.clone();
        for p in distinct_prime_factors(c) {
            if !qf.contains(&p) {
                qf.push(p);
            }
        }
        let root = primitive_root(q, &qf);
        primes.push(TransformPrime { q, root });
        product = product.saturating_mul(q as u128);
        if product > bound {
            return Ok(primes);
        }
    }
    Err(Error::InternalInvariant(format!(
        "could not cover count bound {bound} with primes over base {base}"
    )))
}

struct Axis {
    radix: usize,
    stride: usize,
}

/// Transform plan for G^n modulo one prime: a length-m DFT per digit axis,
/// n axes per tensor coordinate.
pub struct NttPlan {
    q: u64,
    n_points: usize,
    axes: Vec<Axis>,
    /// omega_pows[i][j] = (order-m_i root)^j for axis i.
    omega_pows: Vec<Vec<u64>>,
    omega_inv_pows: Vec<Vec<u64>>,
    n_inv: u64,
}

impl NttPlan {
    pub fn new(g: &FiniteAbelianGroup, n: usize, prime: TransformPrime) -> Self {
        let q = prime.q;
        let orders = g.factor_orders();
        let mut axes = Vec::with_capacity(n * orders.len());
        let mut stride = 1usize;
        // Build axes from least significant digit up: coordinate n-1's last
        // factor first. Axis order does not matter for a tensor transform.
        for _ in 0..n {
            for &m in orders.iter().rev() {
                axes.push(Axis { radix: m as usize, stride });
                stride *= m as usize;
            }
        }
        let n_points = stride;

        let mut omega_pows = Vec::with_capacity(axes.len());
        let mut omega_inv_pows = Vec::with_capacity(axes.len());
        for axis in &axes {
            let m = axis.radix as u64;
            debug_assert_eq!((q - 1) % m, 0, "factor order divides q - 1");
            let omega = pow_mod(prime.root, (q - 1) / m, q);
            let omega_inv = pow_mod(omega, m - 1, q);
            let mut fwd = Vec::with_capacity(axis.radix);
            let mut inv = Vec::with_capacity(axis.radix);
            let (mut wf, mut wi) = (1u64, 1u64);
            for _ in 0..axis.radix {
                fwd.push(wf);
                inv.push(wi);
                wf = mul_mod(wf, omega, q);
                wi = mul_mod(wi, omega_inv, q);
            }
            omega_pows.push(fwd);
            omega_inv_pows.push(inv);
        }

        let n_inv = pow_mod(n_points as u64, q - 2, q);
        NttPlan { q, n_points, axes, omega_pows, omega_inv_pows, n_inv }
    }

    pub fn prime(&self) -> u64 {
        self.q
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    fn dft_axis(&self, data: &mut [u64], axis: usize, inverse: bool) {
        let m = self.axes[axis].radix;
        if m == 1 {
            return;
        }
        let stride = self.axes[axis].stride;
        let w = if inverse { &self.omega_inv_pows[axis] } else { &self.omega_pows[axis] };
        let q = self.q;
        let span = stride * m;
        let mut scratch = vec![0u64; m];
        for base0 in (0..data.len()).step_by(span) {
            for lo in 0..stride {
                let base = base0 + lo;
                for k in 0..m {
                    let mut acc: u128 = 0;
                    for j in 0..m {
                        let v = data[base + j * stride];
                        if v != 0 {
                            acc += v as u128 * w[j * k % m] as u128;
                        }
                    }
                    scratch[k] = (acc % q as u128) as u64;
                }
                for (k, &v) in scratch.iter().enumerate() {
                    data[base + k * stride] = v;
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [u64]) {
        debug_assert_eq!(data.len(), self.n_points);
        for axis in 0..self.axes.len() {
            self.dft_axis(data, axis, false);
        }
    }

    /// Inverse transform including the 1/N normalization.
    pub fn inverse(&self, data: &mut [u64]) {
        debug_assert_eq!(data.len(), self.n_points);
        for axis in 0..self.axes.len() {
            self.dft_axis(data, axis, true);
        }
        for v in data.iter_mut() {
            *v = mul_mod(*v, self.n_inv, self.q);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;
    use crate::tensor::PowerShape;

    #[test]
    fn primality_basics() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64(998244353));
        assert!(is_prime_u64((1 << 61) - 1));
        assert!(!is_prime_u64(1));
        assert!(!is_prime_u64(998244353u64 * 7));
    }

    #[test]
    fn factorization_and_roots() {
        assert_eq!(distinct_prime_factors(360), vec![2, 3, 5]);
        assert_eq!(distinct_prime_factors(1), Vec::<u64>::new());
        assert_eq!(distinct_prime_factors(1 << 20), vec![2]);

        let g = primitive_root(7, &[2, 3]);
        assert_eq!(g, 3);
        let g = primitive_root(998244353, &distinct_prime_factors(998244352));
        assert_eq!(pow_mod(g, 998244352, 998244353), 1);
        for p in distinct_prime_factors(998244352) {
            assert_ne!(pow_mod(g, 998244352 / p, 998244353), 1);
        }
    }

    #[test]
    fn finds_primes_congruent_to_one() {
        for l in [1u64, 2, 6, 12, 30, 7 * 9 * 4] {
            let primes = find_transform_primes(l, u128::from(u64::MAX)).unwrap();
            let product: u128 = primes.iter().map(|p| p.q as u128).product();
            assert!(product > u128::from(u64::MAX));
            for p in &primes {
                assert!(is_prime_u64(p.q));
                assert_eq!((p.q - 1) % l, 0);
                assert_eq!(pow_mod(p.root, p.q - 1, p.q), 1);
            }
        }
    }

    #[test]
    fn forward_inverse_round_trip() {
        let g = make_group(&[2, 3]).unwrap();
        let prime = find_transform_primes(6, 1).unwrap()[0];
        let plan = NttPlan::new(&g, 2, prime);
        assert_eq!(plan.n_points(), 36);
        let orig: Vec<u64> = (0..36u64).map(|i| i * i % 17).collect();
        let mut data = orig.clone();
        plan.forward(&mut data);
        plan.inverse(&mut data);
        assert_eq!(data, orig);
    }

    #[test]
    fn transform_diagonalizes_convolution() {
        let g = make_group(&[4]).unwrap();
        let prime = find_transform_primes(4, 1).unwrap()[0];
        let plan = NttPlan::new(&g, 2, prime);
        let shape = PowerShape::new(4, 2).unwrap();

        let f: Vec<u64> = (0..16).map(|i| (3 * i + 1) % 5).collect();
        let h: Vec<u64> = (0..16).map(|i| (7 * i + 2) % 4).collect();
        let mut conv = vec![0u64; 16];
        for a in 0..16u64 {
            for b in 0..16u64 {
                let z = shape.add_points(&g, a, b);
                conv[z as usize] += f[a as usize] * h[b as usize];
            }
        }

        let (mut fh, mut hh) = (f.clone(), h.clone());
        plan.forward(&mut fh);
        plan.forward(&mut hh);
        let mut prod: Vec<u64> = fh
            .iter()
            .zip(&hh)
            .map(|(&a, &b)| mul_mod(a, b, plan.prime()))
            .collect();
        plan.inverse(&mut prod);
        assert_eq!(prod, conv);
    }
}
