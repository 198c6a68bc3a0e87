//! Dirichlet characters mod a prime p, indexed by exponent against the
//! smallest primitive root g: chi_j(g^k) = e(jk/(p-1)).
//!
//! Family sums over all characters at once go through one length-(p-1)
//! discrete Fourier transform; the naive per-character path is kept as an
//! oracle.

use crate::arith::PrimeContext;
use crate::error::{Error, Result};
use crate::sums::Accumulator;
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// Character chi_j; even iff j is even, primitive iff j != 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirichletCharacter {
    j: u64,
}

impl DirichletCharacter {
    /// Character with index j mod p-1.
    pub fn new(ctx: &PrimeContext, j: u64) -> Self {
        DirichletCharacter { j: j % (ctx.p() - 1) }
    }

    #[inline]
    pub fn index(&self) -> u64 {
        self.j
    }

    #[inline]
    pub fn is_even(&self) -> bool {
        self.j % 2 == 0
    }

    #[inline]
    pub fn is_principal(&self) -> bool {
        self.j == 0
    }

    /// Prime modulus: primitive exactly when nonprincipal.
    #[inline]
    pub fn is_primitive(&self) -> bool {
        self.j != 0
    }

    /// Index of the conjugate character.
    pub fn conjugate(&self, ctx: &PrimeContext) -> Self {
        let order = ctx.p() - 1;
        DirichletCharacter {
            j: (order - self.j) % order,
        }
    }
}

/// chi_j(n); zero when p divides n. n is reduced mod p.
pub fn char_eval(ctx: &PrimeContext, chi: DirichletCharacter, n: i64) -> Complex64 {
    let p = ctx.p() as i64;
    let r = n.rem_euclid(p) as u64;
    if r == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let k = ctx.ind_table()[r as usize] as u64;
    ctx.root_pm1(chi.index() * k)
}

/// The even primitive characters in canonical order j = 2, 4, ..., p-3.
pub fn enumerate_even_primitive(ctx: &PrimeContext) -> Vec<DirichletCharacter> {
    let p = ctx.p();
    if p == 3 {
        return Vec::new();
    }
    (1..=(p - 3) / 2)
        .map(|t| DirichletCharacter { j: 2 * t })
        .collect()
}

/// Gauss sum tau(chi) = sum over units a of chi(a) e(a/p), direct O(p).
pub fn gauss_sum(ctx: &PrimeContext, chi: DirichletCharacter) -> Complex64 {
    let p = ctx.p();
    let mut acc = Accumulator::new();
    for a in 1..p {
        acc.push(char_eval(ctx, chi, a as i64) * ctx.root_p(a));
    }
    acc.finish()
}

/// Sums  S_j = sum_n a_n chi_j(n)  for every j in 0..p-1 with one DFT.
///
/// Terms with p | n drop out. Folds a_n into classes by ind[n], then
/// S_j = sum_k c_k e(jk/(p-1)) is an unnormalized inverse DFT of length p-1.
pub fn all_character_sums<I>(ctx: &PrimeContext, terms: I) -> Vec<Complex64>
where
    I: IntoIterator<Item = (u64, Complex64)>,
{
    let p = ctx.p();
    let order = (p - 1) as usize;
    let ind = ctx.ind_table();
    let mut classes = vec![Complex64::new(0.0, 0.0); order];
    for (n, a) in terms {
        let r = (n % p) as usize;
        if r == 0 {
            continue;
        }
        classes[ind[r] as usize] += a;
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(order, FftDirection::Inverse);
    fft.process(&mut classes);
    classes
}

/// Oracle: S_j by direct evaluation.
pub fn character_sum_naive(
    ctx: &PrimeContext,
    terms: &[(u64, Complex64)],
    chi: DirichletCharacter,
) -> Complex64 {
    let mut acc = Accumulator::new();
    for &(n, a) in terms {
        acc.push(a * char_eval(ctx, chi, n as i64));
    }
    acc.finish()
}

/// Gauss sums for every character index at once.
pub fn gauss_sums_all(ctx: &PrimeContext) -> Vec<Complex64> {
    let p = ctx.p();
    all_character_sums(ctx, (1..p).map(|a| (a, ctx.root_p(a))))
}

/// A prime's character family with its Gauss sums cached.
pub struct CharacterFamily<'a> {
    ctx: &'a PrimeContext,
    taus: Vec<Complex64>,
}

impl<'a> CharacterFamily<'a> {
    pub fn new(ctx: &'a PrimeContext) -> Self {
        let taus = gauss_sums_all(ctx);
        CharacterFamily { ctx, taus }
    }

    #[inline]
    pub fn ctx(&self) -> &PrimeContext {
        self.ctx
    }

    /// Cached tau(chi_j).
    #[inline]
    pub fn tau(&self, chi: DirichletCharacter) -> Complex64 {
        self.taus[chi.index() as usize]
    }

    /// (2/p) sum over even primitive chi of chi(n1) conj(chi(n2)),
    /// by enumeration. Requires units n1, n2.
    pub fn even_pair_average(&self, n1: u64, n2: u64) -> Result<Complex64> {
        let ctx = self.ctx;
        check_unit(ctx, n1)?;
        check_unit(ctx, n2)?;
        let mut acc = Accumulator::new();
        for chi in enumerate_even_primitive(ctx) {
            acc.push(char_eval(ctx, chi, n1 as i64) * char_eval(ctx, chi, n2 as i64).conj());
        }
        let s: Complex64 = acc.finish();
        Ok(s * (2.0 / ctx.p() as f64))
    }

    /// (1/p) sum over even primitive chi of tau(chi) chi(n1), by enumeration.
    pub fn gauss_twisted_average(&self, n1: u64) -> Result<Complex64> {
        let ctx = self.ctx;
        check_unit(ctx, n1)?;
        let mut acc = Accumulator::new();
        for chi in enumerate_even_primitive(ctx) {
            acc.push(self.tau(chi) * char_eval(ctx, chi, n1 as i64));
        }
        let s: Complex64 = acc.finish();
        Ok(s / ctx.p() as f64)
    }
}

/// Closed form ((p-1)[n1 = +-n2 mod p] - 2) / p for the even pair average.
pub fn even_pair_average_closed(ctx: &PrimeContext, n1: u64, n2: u64) -> Result<f64> {
    let p = ctx.p();
    check_unit(ctx, n1)?;
    check_unit(ctx, n2)?;
    let r1 = n1 % p;
    let r2 = n2 % p;
    let matched = r1 == r2 || r1 == p - r2;
    let indicator = if matched { (p - 1) as f64 } else { 0.0 };
    Ok((indicator - 2.0) / p as f64)
}

/// Closed form ((p-1) cos(2 pi inv[n1] / p) + 1) / p for the twisted average.
pub fn gauss_twisted_average_closed(ctx: &PrimeContext, n1: u64) -> Result<f64> {
    let p = ctx.p();
    check_unit(ctx, n1)?;
    let inv = ctx.inv_mod(n1)?;
    let angle = std::f64::consts::TAU * inv as f64 / p as f64;
    Ok(((p - 1) as f64 * angle.cos() + 1.0) / p as f64)
}

fn check_unit(ctx: &PrimeContext, n: u64) -> Result<()> {
    if n % ctx.p() == 0 {
        return Err(Error::NotCoprime(n));
    }
    Ok(())
}
