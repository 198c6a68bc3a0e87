//! Modular arithmetic over a prime field: primality, primitive roots,
//! index (discrete log) and inverse tables, roots of unity, Mobius values.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Multiplies mod m without overflow.
#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Computes b^e mod m by binary exponentiation.
pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, valid for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        r += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors by trial division.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Smallest primitive root of a prime p.
pub fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let factors = prime_factors(p - 1);
    'cand: for g in 2..p {
        for &q in &factors {
            if pow_mod(g, (p - 1) / q, p) == 1 {
                continue 'cand;
            }
        }
        return g;
    }
    unreachable!("every prime has a primitive root")
}

/// Mobius function; n >= 1.
pub fn mobius(n: u64) -> i8 {
    assert!(n >= 1, "mobius needs n >= 1");
    let mut n = n;
    let mut k = 0u32;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            n /= d;
            if n % d == 0 {
                return 0;
            }
            k += 1;
        }
        d += 1;
    }
    if n > 1 {
        k += 1;
    }
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Mobius values mu(0..=n) by a linear sieve; mu(0) set to 0.
pub fn mobius_sieve(n: usize) -> Vec<i8> {
    let mut mu = vec![0i8; n + 1];
    if n >= 1 {
        mu[1] = 1;
    }
    let mut primes: Vec<usize> = Vec::new();
    let mut composite = vec![false; n + 1];
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &pr in &primes {
            let m = i * pr;
            if m > n {
                break;
            }
            composite[m] = true;
            if i % pr == 0 {
                mu[m] = 0;
                break;
            }
            mu[m] = -mu[i];
        }
    }
    mu
}

/// Precomputed tables for one prime modulus.
///
/// `ind` is the index map against the smallest primitive root g:
/// g^ind[u] = u for units u, and `inv` the multiplicative inverse table.
/// `e_p` and `e_pm1` hold the roots of unity e(a/p) and e(a/(p-1)).
pub struct PrimeContext {
    p: u64,
    g: u64,
    ind: Vec<u32>,
    pow_g: Vec<u32>,
    inv: Vec<u32>,
    e_p: Vec<Complex64>,
    e_pm1: Vec<Complex64>,
}

impl PrimeContext {
    /// Builds tables for prime p >= 3. O(p) time and memory.
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 {
            return Err(Error::TooSmall(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        assert!(p < (1 << 31), "tables sized for p < 2^31");
        let g = primitive_root(p);
        let n = p as usize;
        let order = n - 1;

        let mut ind = vec![0u32; n];
        let mut pow_g = vec![0u32; order];
        let mut val = 1u64;
        for k in 0..order {
            ind[val as usize] = k as u32;
            pow_g[k] = val as u32;
            val = mul_mod(val, g, p);
        }

        let mut inv = vec![0u32; n];
        inv[1] = 1;
        for u in 2..p {
            // inv[u] = -(p/u) * inv[p mod u] mod p
            let q = p / u;
            let r = (p % u) as usize;
            inv[u as usize] = (p - mul_mod(q, inv[r] as u64, p)) as u32;
        }

        let e_p = roots_of_unity(p);
        let e_pm1 = roots_of_unity(p - 1);

        Ok(PrimeContext {
            p,
            g,
            ind,
            pow_g,
            inv,
            e_p,
            e_pm1,
        })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn generator(&self) -> u64 {
        self.g
    }

    /// Number of even primitive characters, (p-3)/2.
    pub fn even_primitive_count(&self) -> u64 {
        (self.p - 3) / 2
    }

    /// True when the even primitive family is empty (p = 3).
    pub fn family_is_empty(&self) -> bool {
        self.p == 3
    }

    /// Index of u against g; errors on u = 0 mod p.
    pub fn discrete_log(&self, u: u64) -> Result<u64> {
        let r = (u % self.p) as usize;
        if r == 0 {
            return Err(Error::ZeroResidue);
        }
        Ok(self.ind[r] as u64)
    }

    /// Inverse of u mod p; errors on u = 0 mod p.
    pub fn inv_mod(&self, u: u64) -> Result<u64> {
        let r = (u % self.p) as usize;
        if r == 0 {
            return Err(Error::NonInvertible(u));
        }
        Ok(self.inv[r] as u64)
    }

    /// Raw index table, ind[u] valid for units u in 1..p.
    #[inline]
    pub fn ind_table(&self) -> &[u32] {
        &self.ind
    }

    /// Raw inverse table, inv[u] valid for units u in 1..p.
    #[inline]
    pub fn inv_table(&self) -> &[u32] {
        &self.inv
    }

    /// g^k mod p for k in 0..p-1.
    #[inline]
    pub fn power_of_g(&self, k: usize) -> u64 {
        self.pow_g[k] as u64
    }

    /// e(a/p), a reduced mod p.
    #[inline]
    pub fn root_p(&self, a: u64) -> Complex64 {
        self.e_p[(a % self.p) as usize]
    }

    /// e(a/(p-1)), a reduced mod p-1.
    #[inline]
    pub fn root_pm1(&self, a: u64) -> Complex64 {
        self.e_pm1[(a % (self.p - 1)) as usize]
    }
}

fn roots_of_unity(n: u64) -> Vec<Complex64> {
    (0..n)
        .map(|a| Complex64::from_polar(1.0, TAU * a as f64 / n as f64))
        .collect()
}
