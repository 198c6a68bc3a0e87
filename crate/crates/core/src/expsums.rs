//! Kloosterman sums S(x,y;p) = sum over units u of e((xu + y/u)/p),
//! complete rows over all x at once, products of four sums, and the
//! nu-statistics plus Holder stages of the trilinear bound.

use crate::arith::PrimeContext;
use crate::error::{Error, Result};
use crate::sums::{pairwise_sum, Accumulator};
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use std::collections::{HashMap, VecDeque};
use std::ops::RangeInclusive;
use std::sync::{Arc, Mutex};

/// S(x,y;p) by direct enumeration, O(p).
pub fn kloosterman(ctx: &PrimeContext, x: u64, y: u64) -> f64 {
    let p = ctx.p();
    let inv = ctx.inv_table();
    let mut acc = Accumulator::new();
    for u in 1..p {
        let e = x % p * u % p + y % p * inv[u as usize] as u64 % p;
        acc.push(ctx.root_p(e).re);
    }
    acc.finish()
}

/// The row (S(h,y;p))_{h=0..p-1} by direct enumeration, O(p^2).
pub fn kloosterman_row_naive(ctx: &PrimeContext, y: u64) -> Vec<f64> {
    (0..ctx.p()).map(|h| kloosterman(ctx, h, y)).collect()
}

/// The row (S(h,y;p))_{h=0..p-1} as one length-p DFT of u -> e(y/u / p).
///
/// Entries are real in exact arithmetic; imaginary parts are asserted
/// below 1e-9 and dropped.
pub fn kloosterman_row(ctx: &PrimeContext, y: u64) -> Vec<f64> {
    let p = ctx.p();
    let inv = ctx.inv_table();
    let mut buf = vec![Complex64::new(0.0, 0.0); p as usize];
    for u in 1..p {
        buf[u as usize] = ctx.root_p(y % p * inv[u as usize] as u64 % p);
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(p as usize, FftDirection::Inverse);
    fft.process(&mut buf);
    buf.into_iter()
        .map(|z| {
            debug_assert!(z.im.abs() < 1e-9, "row entry imaginary part {}", z.im);
            z.re
        })
        .collect()
}

/// FIFO row cache keyed by y mod p; safe for concurrent use.
pub struct RowCache {
    cap: usize,
    inner: Mutex<(HashMap<u64, Arc<Vec<f64>>>, VecDeque<u64>)>,
}

impl RowCache {
    pub fn new(cap: usize) -> Self {
        RowCache {
            cap: cap.max(1),
            inner: Mutex::new((HashMap::new(), VecDeque::new())),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached row for y; computes outside the lock on a miss.
    pub fn row(&self, ctx: &PrimeContext, y: u64) -> Arc<Vec<f64>> {
        let key = y % ctx.p();
        if let Some(r) = self.inner.lock().unwrap().0.get(&key) {
            return Arc::clone(r);
        }
        let fresh = Arc::new(kloosterman_row(ctx, key));
        let mut guard = self.inner.lock().unwrap();
        let (map, order) = &mut *guard;
        if !map.contains_key(&key) {
            map.insert(key, Arc::clone(&fresh));
            order.push_back(key);
            while map.len() > self.cap {
                if let Some(old) = order.pop_front() {
                    map.remove(&old);
                }
            }
        }
        fresh
    }
}

impl Default for RowCache {
    fn default() -> Self {
        RowCache::new(256)
    }
}

/// sum over h mod p of the product of S(h, inv[m_i]; p), via cached rows.
pub fn four_product_sum(ctx: &PrimeContext, cache: &RowCache, m: [u64; 4]) -> Result<f64> {
    let mut rows = Vec::with_capacity(4);
    for &mi in &m {
        let y = ctx.inv_mod(mi)?;
        rows.push(cache.row(ctx, y));
    }
    let p = ctx.p() as usize;
    let products: Vec<f64> = (0..p)
        .map(|h| rows[0][h] * rows[1][h] * rows[2][h] * rows[3][h])
        .collect();
    Ok(pairwise_sum(&products))
}

/// Independent oracle for the four-product sum:
/// sum_h prod_i S(h, y_i; p) = p * sum over units u1..u4 with
/// u1+u2+u3+u4 = 0 of e((y1/u1 + y2/u2 + y3/u3 + y4/u4)/p).  O(p^3).
pub fn four_product_identity(ctx: &PrimeContext, m: [u64; 4]) -> Result<f64> {
    let p = ctx.p();
    let inv = ctx.inv_table();
    // phase[i][u] = y_i * inv[u] mod p
    let mut phase = Vec::with_capacity(4);
    for &mi in &m {
        let y = ctx.inv_mod(mi)?;
        let row: Vec<u64> = (0..p)
            .map(|u| {
                if u == 0 {
                    0
                } else {
                    y * inv[u as usize] as u64 % p
                }
            })
            .collect();
        phase.push(row);
    }
    let mut acc = Accumulator::new();
    for u1 in 1..p {
        for u2 in 1..p {
            let s12 = (u1 + u2) % p;
            for u3 in 1..p {
                let u4 = (2 * p - s12 - u3) % p;
                if u4 == 0 {
                    continue;
                }
                let e = (phase[0][u1 as usize]
                    + phase[1][u2 as usize]
                    + phase[2][u3 as usize]
                    + phase[3][u4 as usize])
                    % p;
                acc.push(ctx.root_p(e));
            }
        }
    }
    let total: Complex64 = acc.finish();
    debug_assert!(total.im.abs() < 1e-6, "identity sum imaginary part");
    Ok(p as f64 * total.re)
}

/// Histogram of nu(h) = #{(a,b,c) in w1 x w2 x w3 : a b / c = h mod p}.
#[derive(Debug, Clone)]
pub struct NuStats {
    pub histogram: Vec<u64>,
    pub sum: u64,
    pub sum_sq: u64,
    pub sum_four_thirds: f64,
    pub max: u64,
}

/// Budget on enumerated tuples for the quadratic/cubic sweeps.
const TUPLE_BUDGET: u64 = 1_000_000_000;

fn window_len(w: &RangeInclusive<u64>, name: &str) -> Result<u64> {
    if w.is_empty() {
        return Err(Error::WindowEmpty(name.to_string()));
    }
    Ok(w.end() - w.start() + 1)
}

/// Exact nu histogram by enumeration; the c-window is inverted mod p.
pub fn nu_statistics(
    ctx: &PrimeContext,
    w1: &RangeInclusive<u64>,
    w2: &RangeInclusive<u64>,
    w3: &RangeInclusive<u64>,
) -> Result<NuStats> {
    let p = ctx.p();
    let l1 = window_len(w1, "w1")?;
    let l2 = window_len(w2, "w2")?;
    let l3 = window_len(w3, "w3")?;
    let tuples = l1
        .checked_mul(l2)
        .and_then(|t| t.checked_mul(l3))
        .unwrap_or(u64::MAX);
    if tuples > TUPLE_BUDGET {
        return Err(Error::ScaleExceeded(tuples));
    }
    let mut inv3 = Vec::with_capacity(l3 as usize);
    for c in w3.clone() {
        inv3.push(ctx.inv_mod(c)?);
    }
    let mut hist = vec![0u64; p as usize];
    for a in w1.clone() {
        let ra = a % p;
        for b in w2.clone() {
            let rab = ra * (b % p) % p;
            for &ic in &inv3 {
                hist[(rab * ic % p) as usize] += 1;
            }
        }
    }
    let sum: u64 = hist.iter().sum();
    let sum_sq: u64 = hist.iter().map(|&v| v * v).sum();
    let four_thirds: Vec<f64> = hist
        .iter()
        .filter(|&&v| v > 0)
        .map(|&v| (v as f64).powf(4.0 / 3.0))
        .collect();
    let sum_four_thirds = pairwise_sum(&four_thirds);
    let max = hist.iter().copied().max().unwrap_or(0);
    Ok(NuStats {
        histogram: hist,
        sum,
        sum_sq,
        sum_four_thirds,
        max,
    })
}

/// Integer-only count of solutions of a b c' = a' b' c over
/// w1 x w2 x w3 squared; equals sum of nu^2 when all products stay
/// below p.
pub fn divisor_equation_count(
    w1: &RangeInclusive<u64>,
    w2: &RangeInclusive<u64>,
    w3: &RangeInclusive<u64>,
) -> Result<u64> {
    let l1 = window_len(w1, "w1")?;
    let l2 = window_len(w2, "w2")?;
    let l3 = window_len(w3, "w3")?;
    let tuples = l1
        .checked_mul(l2)
        .and_then(|t| t.checked_mul(l3))
        .unwrap_or(u64::MAX);
    if tuples > TUPLE_BUDGET {
        return Err(Error::ScaleExceeded(tuples));
    }
    let mut products: HashMap<u64, u64> = HashMap::new();
    for a in w1.clone() {
        for b in w2.clone() {
            for c in w3.clone() {
                *products.entry(a * b * c).or_insert(0) += 1;
            }
        }
    }
    Ok(products.values().map(|&v| v * v).sum())
}

/// Windows and coefficients of one Holder-pipeline run. k ranges over
/// 1 <= |k| <= k_max with -k embedded as p - k; y1, y2 align with the
/// m1, m2 windows and must stay within [-1, 1].
#[derive(Debug, Clone)]
pub struct HolderSpec {
    pub k_max: u64,
    pub n2: RangeInclusive<u64>,
    pub m1: RangeInclusive<u64>,
    pub y1: Vec<f64>,
    pub m2: RangeInclusive<u64>,
    pub y2: Vec<f64>,
    /// Exponent of the p^slack factor in the envelope stage.
    pub slack: f64,
}

/// The three stages of the trilinear estimate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct HolderReport {
    /// (a): |sum_h w(h) T(h)| with w the glued coefficient histogram.
    pub glued_abs: f64,
    /// (b): (sum nu^{4/3})^{3/4} (sum_h T(h)^4)^{1/4}.
    pub holder_bound: f64,
    /// (c): p^slack (K N2 M1)^{3/4} (M2 p^{5/8} + sqrt(M2) p^{3/4}).
    pub envelope: f64,
    pub ratio_a_over_b: f64,
    pub ratio_b_over_c: f64,
    pub nu_sum: u64,
    pub nu_sum_sq: u64,
    pub nu_sum_four_thirds: f64,
    pub t_fourth_moment: f64,
}

/// Runs the glue-then-Holder pipeline for a trilinear sum
/// sum_{k,n2,m1,m2} y1(m1) y2(m2) S(k n2 / m1, 1/m2; p).
pub fn holder_pipeline(
    ctx: &PrimeContext,
    cache: &RowCache,
    spec: &HolderSpec,
) -> Result<HolderReport> {
    let p = ctx.p();
    if spec.k_max == 0 || spec.k_max > (p - 1) / 2 {
        return Err(Error::RangeViolation(format!(
            "k_max {} outside 1..=(p-1)/2",
            spec.k_max
        )));
    }
    let ln2 = window_len(&spec.n2, "n2")?;
    let lm1 = window_len(&spec.m1, "m1")?;
    let lm2 = window_len(&spec.m2, "m2")?;
    if spec.y1.len() as u64 != lm1 || spec.y2.len() as u64 != lm2 {
        return Err(Error::RangeViolation(
            "coefficient slices must match their windows".to_string(),
        ));
    }
    for &y in spec.y1.iter().chain(&spec.y2) {
        if !(y.abs() <= 1.0 + 1e-12) {
            return Err(Error::RangeViolation(format!(
                "coefficient {y} outside [-1, 1]"
            )));
        }
    }
    let tuples = (2 * spec.k_max)
        .checked_mul(ln2)
        .and_then(|t| t.checked_mul(lm1))
        .unwrap_or(u64::MAX);
    if tuples > TUPLE_BUDGET {
        return Err(Error::ScaleExceeded(tuples));
    }

    let mut inv_m1 = Vec::with_capacity(lm1 as usize);
    for m in spec.m1.clone() {
        inv_m1.push(ctx.inv_mod(m)?);
    }

    // glued histogram w(h) and its unweighted count nu(h)
    let mut w = vec![0.0f64; p as usize];
    let mut nu = vec![0u64; p as usize];
    for k in 1..=spec.k_max {
        for kr in [k % p, p - k % p] {
            for n2 in spec.n2.clone() {
                let t = kr * (n2 % p) % p;
                for (i, &im) in inv_m1.iter().enumerate() {
                    let h = (t * im % p) as usize;
                    w[h] += spec.y1[i];
                    nu[h] += 1;
                }
            }
        }
    }

    // T(h) = sum_m2 y2(m2) S(h, 1/m2; p)
    let mut t_of = vec![0.0f64; p as usize];
    for (i, m) in spec.m2.clone().enumerate() {
        let y = ctx.inv_mod(m)?;
        let row = cache.row(ctx, y);
        for (th, rh) in t_of.iter_mut().zip(row.iter()) {
            *th += spec.y2[i] * rh;
        }
    }

    let paired: Vec<f64> = (0..p as usize).map(|h| w[h] * t_of[h]).collect();
    let glued_abs = pairwise_sum(&paired).abs();

    let nu_terms: Vec<f64> = nu
        .iter()
        .filter(|&&v| v > 0)
        .map(|&v| (v as f64).powf(4.0 / 3.0))
        .collect();
    let nu_sum_four_thirds = pairwise_sum(&nu_terms);
    let fourth: Vec<f64> = t_of.iter().map(|&t| t * t * t * t).collect();
    let t_fourth_moment = pairwise_sum(&fourth);
    let holder_bound = nu_sum_four_thirds.powf(0.75) * t_fourth_moment.powf(0.25);

    let pf = p as f64;
    let envelope = pf.powf(spec.slack)
        * ((2 * spec.k_max * ln2 * lm1) as f64).powf(0.75)
        * (lm2 as f64 * pf.powf(0.625) + (lm2 as f64).sqrt() * pf.powf(0.75));

    Ok(HolderReport {
        glued_abs,
        holder_bound,
        envelope,
        ratio_a_over_b: glued_abs / holder_bound,
        ratio_b_over_c: holder_bound / envelope,
        nu_sum: nu.iter().sum(),
        nu_sum_sq: nu.iter().map(|&v| v * v).sum(),
        nu_sum_four_thirds,
        t_fourth_moment,
    })
}
