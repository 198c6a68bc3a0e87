//! Central values L(1/2, chi), the two-piece mollifier, the mollified
//! moments S1 and S2 over the even primitive family, and the dyadic
//! bilinear form with its exact mod-p Poisson dual.
//!
//! All family sums run twice: a naive per-character enumeration and the
//! DFT fast path. The two must agree to 1e-9 relative.

use crate::arith::{mobius_sieve, PrimeContext};
use crate::characters::{
    all_character_sums, char_eval, character_sum_naive, enumerate_even_primitive, gauss_sum,
    gauss_sums_all, DirichletCharacter,
};
use crate::error::{Error, Result};
use crate::expsums::RowCache;
use crate::specfun::{bump, v_sum_cutoff, w_sum_cutoff, weight_w, KernelConfig, KernelQuadrature, VTable};
use crate::sums::{pairwise_sum, Accumulator};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use serde::Serialize;

/// Coefficients y_m = mu(m) log(L/m)/log(L) for 1 <= m < L, indexed by m.
pub fn mollifier_coeffs(len: u64) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::LengthTooSmall(len));
    }
    Ok(piece_coeffs(len))
}

/// Same table with the degenerate convention piece_coeffs(1) = [0, 1]:
/// a length-1 piece is the constant mollifier y_1 = 1.
fn piece_coeffs(len: u64) -> Vec<f64> {
    if len == 1 {
        return vec![0.0, 1.0];
    }
    let l = len as usize;
    let mu = mobius_sieve(l);
    let ln_l = (len as f64).ln();
    let mut y = vec![0.0; l];
    for m in 1..l {
        y[m] = mu[m] as f64 * ((len as f64 / m as f64).ln() / ln_l);
    }
    y
}

/// Two-piece mollifier data: long piece of length floor(p^(theta+alpha))
/// weighted c1, short piece of length floor(p^theta) weighted c2.
#[derive(Debug, Clone)]
pub struct MollifierParams {
    pub theta: f64,
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub long_len: u64,
    pub short_len: u64,
    y_long: Vec<f64>,
    y_short: Vec<f64>,
}

impl MollifierParams {
    pub fn new(p: u64, theta: f64, alpha: f64, c1: f64, c2: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::NonpositiveTheta(format!("{theta}")));
        }
        if !(alpha >= 0.0) {
            return Err(Error::RangeViolation(format!("alpha {alpha} is negative")));
        }
        if !(c1 >= 0.0 && c2 >= 0.0 && c1 + c2 > 0.0) {
            return Err(Error::DegenerateWeights(c1, c2));
        }
        let pf = p as f64;
        let long_len = pf.powf(theta + alpha).floor() as u64;
        let short_len = pf.powf(theta).floor() as u64;
        Ok(MollifierParams {
            theta,
            alpha,
            c1,
            c2,
            long_len,
            short_len,
            y_long: piece_coeffs(long_len),
            y_short: piece_coeffs(short_len),
        })
    }

    /// Weights proportional to the piece lengths' exponents,
    /// c1 : c2 = (theta+alpha) : theta, normalized to c1 + c2 = 1.
    pub fn with_optimal_weights(p: u64, theta: f64, alpha: f64) -> Result<Self> {
        let denom = 2.0 * theta + alpha;
        Self::new(p, theta, alpha, (theta + alpha) / denom, theta / denom)
    }

    /// Long-piece coefficients indexed by m; zero at and past the length.
    pub fn y_long(&self) -> &[f64] {
        &self.y_long
    }

    pub fn y_short(&self) -> &[f64] {
        &self.y_short
    }

    /// True when a piece reaches past p^(1/2), where the main-term
    /// analysis stops applying. Reported, never rejected.
    pub fn length_warning(&self, p: u64) -> bool {
        self.long_len as f64 > (p as f64).sqrt()
    }
}

/// L(1/2, chi) through the exact functional-equation sums:
/// sum chi(n) n^{-1/2} W(n/sqrt p) + (tau/sqrt p) sum conj chi(n) n^{-1/2} W(n/sqrt p).
pub fn central_value(ctx: &PrimeContext, chi: DirichletCharacter, cfg: &KernelConfig) -> Result<Complex64> {
    if !chi.is_even() {
        return Err(Error::OddCharacter(chi.index()));
    }
    let p = ctx.p();
    let sp = (p as f64).sqrt();
    let nmax = w_sum_cutoff(p, cfg);
    let mut acc = Accumulator::new();
    for n in 1..=nmax {
        let a = weight_w(n as f64 / sp)? / (n as f64).sqrt();
        acc.push(char_eval(ctx, chi, n as i64) * a);
    }
    let a: Complex64 = acc.finish();
    let tau = gauss_sum(ctx, chi);
    Ok(a + tau / sp * a.conj())
}

/// |L(1/2, chi)|^2 via the second-moment kernel, tabulated per prime.
pub struct AfeEngine<'a> {
    ctx: &'a PrimeContext,
    /// V(v/p) for v = 1..=vmax, by direct quadrature.
    v_of: Vec<f64>,
}

impl<'a> AfeEngine<'a> {
    pub fn new(ctx: &'a PrimeContext, cfg: &KernelConfig) -> Self {
        let quad = KernelQuadrature::new(cfg);
        let table = VTable::build(&quad);
        let vmax = v_sum_cutoff(ctx.p(), &table);
        let pf = ctx.p() as f64;
        let v_of: Vec<f64> = (1..=vmax)
            .into_par_iter()
            .map(|v| quad.v(v as f64 / pf).expect("v > 0"))
            .collect();
        AfeEngine { ctx, v_of }
    }

    /// 2 sum_{n1,n2} chi(n1) conj(chi(n2)) (n1 n2)^{-1/2} V(n1 n2 / p).
    pub fn central_value_squared(&self, chi: DirichletCharacter) -> Result<f64> {
        if !chi.is_even() {
            return Err(Error::OddCharacter(chi.index()));
        }
        let ctx = self.ctx;
        let p = ctx.p();
        let vmax = self.v_of.len() as u64;
        // character values on residues 1..p
        let chi_of: Vec<Complex64> = (1..p).map(|r| char_eval(ctx, chi, r as i64)).collect();
        let chi_at = |n: u64| {
            let r = n % p;
            if r == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                chi_of[(r - 1) as usize]
            }
        };
        let mut acc = Accumulator::new();
        for n1 in 1..=vmax {
            if n1 % p == 0 {
                continue;
            }
            let c1 = chi_at(n1);
            for n2 in 1..=vmax / n1 {
                let c = c1 * chi_at(n2).conj();
                let v = self.v_of[(n1 * n2 - 1) as usize];
                acc.push(c * (v / ((n1 * n2) as f64).sqrt()));
            }
        }
        let total: Complex64 = acc.finish();
        debug_assert!(
            total.im.abs() < 1e-9 * (1.0 + total.re.abs()),
            "squared value imaginary part {}",
            total.im
        );
        Ok(2.0 * total.re)
    }
}

/// One-shot |L(1/2, chi)|^2; builds the kernel table each call.
pub fn central_value_squared(
    ctx: &PrimeContext,
    chi: DirichletCharacter,
    cfg: &KernelConfig,
) -> Result<f64> {
    AfeEngine::new(ctx, cfg).central_value_squared(chi)
}

/// M(chi) = c1 sum_{m} y1_m chi(m)/sqrt m + c2 (conj tau / sqrt p) sum_m y2_m conj(chi)(m)/sqrt m.
pub fn mollifier_value(
    ctx: &PrimeContext,
    chi: DirichletCharacter,
    params: &MollifierParams,
) -> Complex64 {
    let sp = (ctx.p() as f64).sqrt();
    let tau = gauss_sum(ctx, chi);
    let piece = |y: &[f64], conj: bool| {
        let mut acc = Accumulator::new();
        for (m, &ym) in y.iter().enumerate().skip(1) {
            if ym == 0.0 {
                continue;
            }
            let c = char_eval(ctx, chi, m as i64);
            let c = if conj { c.conj() } else { c };
            acc.push(c * (ym / (m as f64).sqrt()));
        }
        acc.finish()
    };
    let long: Complex64 = piece(&params.y_long, false);
    let short: Complex64 = piece(&params.y_short, true);
    params.c1 * long + params.c2 * tau.conj() / sp * short
}

/// Balanced single-length variant: both pieces of length floor(p^theta),
/// unit weights.
pub fn mollifier0_value(
    ctx: &PrimeContext,
    chi: DirichletCharacter,
    theta: f64,
) -> Result<Complex64> {
    if !(theta > 0.0) {
        return Err(Error::NonpositiveTheta(format!("{theta}")));
    }
    let p = ctx.p();
    let len = (p as f64).powf(theta).floor() as u64;
    let y = piece_coeffs(len);
    let sp = (p as f64).sqrt();
    let tau = gauss_sum(ctx, chi);
    let mut direct = Accumulator::new();
    let mut dual = Accumulator::new();
    for (m, &ym) in y.iter().enumerate().skip(1) {
        if ym == 0.0 {
            continue;
        }
        let c = char_eval(ctx, chi, m as i64);
        let w = ym / (m as f64).sqrt();
        direct.push(c * w);
        dual.push(c.conj() * w);
    }
    let d: Complex64 = direct.finish();
    let u: Complex64 = dual.finish();
    Ok(d + tau.conj() / sp * u)
}

/// Which evaluation route the family sums take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SumPath {
    Naive,
    Dft,
}

impl std::fmt::Display for SumPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SumPath::Naive => write!(f, "naive"),
            SumPath::Dft => write!(f, "dft"),
        }
    }
}

/// Per-character data over the even primitive family, canonical order
/// j = 2, 4, ..., p-3.
pub struct FamilyValues {
    pub js: Vec<u64>,
    pub l_values: Vec<Complex64>,
    pub m_values: Vec<Complex64>,
    pub taus: Vec<Complex64>,
    pub p_long: Vec<Complex64>,
    pub p_short: Vec<Complex64>,
}

/// Computes L, M, tau and the two mollifier pieces for every even
/// primitive character.
pub fn family_values(
    ctx: &PrimeContext,
    params: &MollifierParams,
    cfg: &KernelConfig,
    path: SumPath,
) -> FamilyValues {
    let p = ctx.p();
    let sp = (p as f64).sqrt();
    let nmax = w_sum_cutoff(p, cfg);
    let a_terms: Vec<(u64, Complex64)> = (1..=nmax)
        .map(|n| {
            let a = weight_w(n as f64 / sp).expect("n > 0") / (n as f64).sqrt();
            (n, Complex64::new(a, 0.0))
        })
        .collect();
    let piece_terms = |y: &[f64]| -> Vec<(u64, Complex64)> {
        y.iter()
            .enumerate()
            .skip(1)
            .map(|(m, &ym)| (m as u64, Complex64::new(ym / (m as f64).sqrt(), 0.0)))
            .collect()
    };
    let long_terms = piece_terms(&params.y_long);
    let short_terms = piece_terms(&params.y_short);

    let chis = enumerate_even_primitive(ctx);
    let js: Vec<u64> = chis.iter().map(|c| c.index()).collect();

    let (a_of, tau_of, p1_of, p2_of): (Vec<_>, Vec<_>, Vec<_>, Vec<_>) = match path {
        SumPath::Dft => {
            let a = all_character_sums(ctx, a_terms.iter().copied());
            let taus = gauss_sums_all(ctx);
            let p1 = all_character_sums(ctx, long_terms.iter().copied());
            let p2 = all_character_sums(ctx, short_terms.iter().copied());
            let pick = |v: &Vec<Complex64>| js.iter().map(|&j| v[j as usize]).collect::<Vec<_>>();
            (pick(&a), pick(&taus), pick(&p1), pick(&p2))
        }
        SumPath::Naive => {
            let rows: Vec<(Complex64, Complex64, Complex64, Complex64)> = chis
                .par_iter()
                .map(|&chi| {
                    (
                        character_sum_naive(ctx, &a_terms, chi),
                        gauss_sum(ctx, chi),
                        character_sum_naive(ctx, &long_terms, chi),
                        character_sum_naive(ctx, &short_terms, chi),
                    )
                })
                .collect();
            let mut a = Vec::with_capacity(rows.len());
            let mut t = Vec::with_capacity(rows.len());
            let mut p1 = Vec::with_capacity(rows.len());
            let mut p2 = Vec::with_capacity(rows.len());
            for (ra, rt, r1, r2) in rows {
                a.push(ra);
                t.push(rt);
                p1.push(r1);
                p2.push(r2);
            }
            (a, t, p1, p2)
        }
    };

    let n = js.len();
    let mut l_values = Vec::with_capacity(n);
    let mut m_values = Vec::with_capacity(n);
    for i in 0..n {
        let a = a_of[i];
        let tau = tau_of[i];
        l_values.push(a + tau / sp * a.conj());
        m_values.push(params.c1 * p1_of[i] + params.c2 * tau.conj() / sp * p2_of[i].conj());
    }
    FamilyValues {
        js,
        l_values,
        m_values,
        taus: tau_of,
        p_long: p1_of,
        p_short: p2_of,
    }
}

/// The second moment with its cross/squares decomposition.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SecondMomentParts {
    pub total: f64,
    /// 2 c1 c2 (2/p) sum |L|^2 Re[(tau/sqrt p) P1 P2].
    pub cross: f64,
    /// (2/p) sum |L|^2 (c1^2 |P1|^2 + c2^2 |P2|^2).
    pub squares: f64,
}

/// Everything one moments run reports.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub p: u64,
    pub theta: f64,
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub long_len: u64,
    pub short_len: u64,
    pub family_size: u64,
    pub path: SumPath,
    pub s1_re: f64,
    pub s1_im: f64,
    pub s1_predicted: f64,
    pub s1_deviation: f64,
    pub s2: f64,
    pub s2_cross: f64,
    pub s2_squares: f64,
    pub s2_predicted: f64,
    pub s2_ratio: f64,
    /// |S1|^2 / S2; at most 1 by Cauchy-Schwarz.
    pub cs_ratio: f64,
    /// (2 theta + alpha) / (1 + 2 theta + alpha), the asymptotic
    /// nonvanishing proportion at optimal weights.
    pub proportion_predicted: f64,
    pub min_abs_l: f64,
    pub nonvanishing_threshold: f64,
    pub nonvanishing_count: u64,
    pub length_warning: bool,
}

/// S1 = (2/p) sum over even primitive chi of L(1/2,chi) M(chi).
pub fn first_moment(
    ctx: &PrimeContext,
    params: &MollifierParams,
    cfg: &KernelConfig,
    path: SumPath,
) -> Complex64 {
    let fam = family_values(ctx, params, cfg, path);
    first_moment_from(ctx, &fam)
}

fn first_moment_from(ctx: &PrimeContext, fam: &FamilyValues) -> Complex64 {
    let terms: Vec<Complex64> = fam
        .l_values
        .iter()
        .zip(&fam.m_values)
        .map(|(&l, &m)| l * m)
        .collect();
    pairwise_sum(&terms) * (2.0 / ctx.p() as f64)
}

/// S2 = (2/p) sum |L M|^2, decomposed.
pub fn second_moment(
    ctx: &PrimeContext,
    params: &MollifierParams,
    cfg: &KernelConfig,
    path: SumPath,
) -> SecondMomentParts {
    let fam = family_values(ctx, params, cfg, path);
    second_moment_from(ctx, params, &fam)
}

fn second_moment_from(
    ctx: &PrimeContext,
    params: &MollifierParams,
    fam: &FamilyValues,
) -> SecondMomentParts {
    let sp = (ctx.p() as f64).sqrt();
    let scale = 2.0 / ctx.p() as f64;
    let n = fam.js.len();
    let mut total_terms = Vec::with_capacity(n);
    let mut cross_terms = Vec::with_capacity(n);
    let mut square_terms = Vec::with_capacity(n);
    for i in 0..n {
        let l2 = fam.l_values[i].norm_sqr();
        let m2 = fam.m_values[i].norm_sqr();
        total_terms.push(l2 * m2);
        let p1 = fam.p_long[i];
        let p2 = fam.p_short[i];
        cross_terms.push(
            2.0 * params.c1 * params.c2 * l2 * (fam.taus[i] / sp * p1 * p2).re,
        );
        square_terms.push(
            l2 * (params.c1 * params.c1 * p1.norm_sqr() + params.c2 * params.c2 * p2.norm_sqr()),
        );
    }
    SecondMomentParts {
        total: scale * pairwise_sum(&total_terms),
        cross: scale * pairwise_sum(&cross_terms),
        squares: scale * pairwise_sum(&square_terms),
    }
}

/// Runs the family once and assembles the full report.
pub fn moment_report(
    ctx: &PrimeContext,
    params: &MollifierParams,
    cfg: &KernelConfig,
    path: SumPath,
) -> MomentReport {
    let p = ctx.p();
    let fam = family_values(ctx, params, cfg, path);
    let s1 = first_moment_from(ctx, &fam);
    let s2 = second_moment_from(ctx, params, &fam);
    let s1_predicted = params.c1 + params.c2;
    let s2_predicted = params.c1 * params.c1 / (params.theta + params.alpha)
        + params.c2 * params.c2 / params.theta
        + s1_predicted * s1_predicted;
    let threshold = 1e-8 * (p as f64).powf(0.25);
    let mut min_abs_l = f64::INFINITY;
    let mut count = 0u64;
    for &l in &fam.l_values {
        let a = l.norm();
        min_abs_l = min_abs_l.min(a);
        if a > threshold {
            count += 1;
        }
    }
    let combined = 2.0 * params.theta + params.alpha;
    MomentReport {
        p,
        theta: params.theta,
        alpha: params.alpha,
        c1: params.c1,
        c2: params.c2,
        long_len: params.long_len,
        short_len: params.short_len,
        family_size: fam.js.len() as u64,
        path,
        s1_re: s1.re,
        s1_im: s1.im,
        s1_predicted,
        s1_deviation: (s1 - s1_predicted).norm(),
        s2: s2.total,
        s2_cross: s2.cross,
        s2_squares: s2.squares,
        s2_predicted,
        s2_ratio: s2.total / s2_predicted,
        cs_ratio: s1.norm_sqr() / s2.total,
        proportion_predicted: combined / (1.0 + combined),
        min_abs_l,
        nonvanishing_threshold: threshold,
        nonvanishing_count: count,
        length_warning: params.length_warning(p),
    }
}

/// One dyadic block of the bilinear form. The m-windows are [M1, 2 M1)
/// and [M2, 2 M2) with coefficients cut from the mollifier tables; the
/// n-windows are the supports of the bumps f(n/N).
#[derive(Debug, Clone, Serialize)]
pub struct BilinearSpec {
    pub m1_start: u64,
    pub m2_start: u64,
    pub n1_scale: f64,
    pub n2_scale: f64,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    /// Mollifier piece lengths, kept for range validation.
    pub long_len: u64,
    pub short_len: u64,
}

impl BilinearSpec {
    /// Cuts the coefficient windows out of the mollifier tables.
    pub fn from_mollifier(
        params: &MollifierParams,
        m1_start: u64,
        m2_start: u64,
        n1_scale: f64,
        n2_scale: f64,
    ) -> Self {
        let cut = |table: &[f64], start: u64| -> Vec<f64> {
            (start..2 * start)
                .map(|m| table.get(m as usize).copied().unwrap_or(0.0))
                .collect()
        };
        BilinearSpec {
            m1_start,
            m2_start,
            n1_scale,
            n2_scale,
            y1: cut(&params.y_long, m1_start),
            y2: cut(&params.y_short, m2_start),
            long_len: params.long_len,
            short_len: params.short_len,
        }
    }

    /// Checks the block constraints; `slack` is the exponent of the
    /// p^slack allowance on N1 N2.
    pub fn validate(&self, p: u64, slack: f64) -> Result<()> {
        let pf = p as f64;
        if self.n1_scale * self.n2_scale > pf.powf(1.0 + slack) {
            return Err(Error::RangeViolation(format!(
                "N1 N2 = {} exceeds p^(1+slack) = {}",
                self.n1_scale * self.n2_scale,
                pf.powf(1.0 + slack)
            )));
        }
        if 2 * self.m1_start > self.long_len + 1 {
            return Err(Error::RangeViolation(format!(
                "M1 = {} reaches past the long piece (length {})",
                self.m1_start, self.long_len
            )));
        }
        if 2 * self.m2_start > self.short_len + 1 {
            return Err(Error::RangeViolation(format!(
                "M2 = {} reaches past the short piece (length {})",
                self.m2_start, self.short_len
            )));
        }
        if (self.m1_start * self.m2_start) as f64 * self.n1_scale < 1.0 {
            return Err(Error::RangeViolation(format!(
                "M1 M2 N1 = {} is below 1",
                (self.m1_start * self.m2_start) as f64 * self.n1_scale
            )));
        }
        if self.m1_start == 0 || self.m2_start == 0 {
            return Err(Error::RangeViolation("M blocks start at 1".to_string()));
        }
        Ok(())
    }

    fn n_window(scale: f64) -> std::ops::RangeInclusive<u64> {
        let lo = (1.25 * scale).floor().max(0.0) as u64 + 1;
        let hi = (1.75 * scale).ceil() as u64;
        lo..=hi.saturating_sub(1)
    }

    fn normalizer(&self, p: u64) -> f64 {
        1.0 / (p as f64
            * self.m1_start as f64
            * self.m2_start as f64
            * self.n1_scale
            * self.n2_scale)
            .sqrt()
    }
}

/// Direct evaluation of the normalized quadruple sum.
pub fn bilinear_form(
    ctx: &PrimeContext,
    spec: &BilinearSpec,
    table: &VTable,
    slack: f64,
) -> Result<Complex64> {
    spec.validate(ctx.p(), slack)?;
    let p = ctx.p();
    let pf = p as f64;
    let inv = ctx.inv_table();
    let n1s: Vec<u64> = BilinearSpec::n_window(spec.n1_scale)
        .filter(|&n| n % p != 0)
        .collect();
    let n2s: Vec<u64> = BilinearSpec::n_window(spec.n2_scale).collect();
    let mut acc = Accumulator::new();
    for &n1 in &n1s {
        let f1 = bump(n1 as f64 / spec.n1_scale);
        if f1 == 0.0 {
            continue;
        }
        let inv_n1 = inv[(n1 % p) as usize] as u64;
        // f(n1, n2) for the whole n2 window
        let fvals: Vec<f64> = n2s
            .iter()
            .map(|&n2| {
                let v = table.eval((n1 * n2) as f64 / pf).expect("positive");
                v * f1 * bump(n2 as f64 / spec.n2_scale)
            })
            .collect();
        for (i1, &ym1) in spec.y1.iter().enumerate() {
            let m1 = spec.m1_start + i1 as u64;
            if ym1 == 0.0 || m1 % p == 0 {
                continue;
            }
            let c1 = inv_n1 * inv[(m1 % p) as usize] as u64 % p;
            for (i2, &ym2) in spec.y2.iter().enumerate() {
                let m2 = spec.m2_start + i2 as u64;
                if ym2 == 0.0 || m2 % p == 0 {
                    continue;
                }
                let c = c1 * inv[(m2 % p) as usize] as u64 % p;
                let w = ym1 * ym2;
                for (k, &n2) in n2s.iter().enumerate() {
                    if fvals[k] == 0.0 {
                        continue;
                    }
                    acc.push(ctx.root_p(n2 % p * c % p) * (w * fvals[k]));
                }
            }
        }
    }
    let total: Complex64 = acc.finish();
    Ok(total * spec.normalizer(p))
}

/// The Poisson dual of the bilinear form with its k-spectrum.
#[derive(Debug, Clone)]
pub struct BilinearDual {
    pub value: Complex64,
    /// Contribution magnitude per dual residue k (index 0..p).
    pub spectrum: Vec<f64>,
}

impl BilinearDual {
    pub fn k_zero_magnitude(&self) -> f64 {
        self.spectrum[0]
    }

    /// Largest contribution among k != 0.
    pub fn k_nonzero_max(&self) -> f64 {
        self.spectrum[1..].iter().cloned().fold(0.0, f64::max)
    }

    /// Spectrum keyed by the signed dual variable, k and -k embedded as
    /// k and p - k.
    pub fn spectrum_signed(&self, p: u64) -> Vec<(i64, f64)> {
        let half = (p - 1) / 2;
        let mut out: Vec<(i64, f64)> = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(r, &m)| {
                let k = if r as u64 <= half {
                    r as i64
                } else {
                    r as i64 - p as i64
                };
                (k, m)
            })
            .collect();
        out.sort_by_key(|&(k, _)| k);
        out
    }
}

/// Rewrites the quadruple sum by splitting n1 into residue classes mod p
/// and applying finite Poisson summation: an exact identity at finite p.
/// The dual kernel D(k, n2) = sum_{n1} f(n1, n2) e(-k n1 / p) is one
/// forward DFT per n2; the n1-sum then reappears as S(k n2, 1/(m1 m2); p).
pub fn bilinear_poisson_dual(
    ctx: &PrimeContext,
    spec: &BilinearSpec,
    table: &VTable,
    cache: &RowCache,
    slack: f64,
) -> Result<BilinearDual> {
    spec.validate(ctx.p(), slack)?;
    let p = ctx.p();
    let pf = p as f64;
    let n1s: Vec<u64> = BilinearSpec::n_window(spec.n1_scale)
        .filter(|&n| n % p != 0)
        .collect();
    let n2s: Vec<u64> = BilinearSpec::n_window(spec.n2_scale).collect();

    // per-k complex contributions, summed over (n2, m1, m2)
    let mut by_k = vec![Complex64::new(0.0, 0.0); p as usize];
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(p as usize, FftDirection::Forward);

    for &n2 in &n2s {
        let f2 = bump(n2 as f64 / spec.n2_scale);
        if f2 == 0.0 {
            continue;
        }
        // fold the n1 window into residue classes, then DFT
        let mut d = vec![Complex64::new(0.0, 0.0); p as usize];
        for &n1 in &n1s {
            let f1 = bump(n1 as f64 / spec.n1_scale);
            if f1 == 0.0 {
                continue;
            }
            let v = table.eval((n1 * n2) as f64 / pf).expect("positive");
            d[(n1 % p) as usize] += Complex64::new(v * f1 * f2, 0.0);
        }
        fft.process(&mut d);

        let n2r = n2 % p;
        for (i1, &ym1) in spec.y1.iter().enumerate() {
            let m1 = spec.m1_start + i1 as u64;
            if ym1 == 0.0 || m1 % p == 0 {
                continue;
            }
            for (i2, &ym2) in spec.y2.iter().enumerate() {
                let m2 = spec.m2_start + i2 as u64;
                if ym2 == 0.0 || m2 % p == 0 {
                    continue;
                }
                let y = ctx.inv_mod(m1 % p * (m2 % p) % p)?;
                let row = cache.row(ctx, y);
                let w = ym1 * ym2;
                // S(k n2, y; p) = row[k n2 mod p], strided walk in k
                let mut idx = 0usize;
                for (k, &dk) in d.iter().enumerate() {
                    by_k[k] += dk * (w * row[idx]);
                    idx += n2r as usize;
                    if idx >= p as usize {
                        idx -= p as usize;
                    }
                }
            }
        }
    }

    let norm = spec.normalizer(p) / pf;
    let value = pairwise_sum(&by_k) * norm;
    let spectrum: Vec<f64> = by_k.iter().map(|c| (c * norm).norm()).collect();
    Ok(BilinearDual { value, spectrum })
}

/// Deterministic random block specs within the range constraints.
pub fn random_bilinear_specs(
    ctx: &PrimeContext,
    params: &MollifierParams,
    count: usize,
    seed: u64,
    slack: f64,
) -> Vec<BilinearSpec> {
    let p = ctx.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m1_cap = (params.long_len + 1) / 2;
    let m2_cap = (params.short_len + 1) / 2;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let m1 = rng.gen_range(1..=m1_cap.max(1));
        let m2 = rng.gen_range(1..=m2_cap.max(1));
        // dyadic scales at least 2 so the bump windows contain integers
        let n2 = (1u64 << rng.gen_range(1..=2u32)) as f64;
        let n1 = (1u64 << rng.gen_range(1..=7u32)) as f64;
        let spec = BilinearSpec::from_mollifier(params, m1, m2, n1, n2);
        if spec.validate(p, slack).is_ok() {
            out.push(spec);
        }
    }
    out
}
