//! Exact-rational optimization of the mollifier exponents: the
//! nonvanishing-proportion functional, the linear feasibility region in
//! (theta, alpha), and maximization of the combined length 2 theta + alpha.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

/// Small literal rational.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Nonvanishing proportion for piece exponents (theta, theta + alpha)
/// and weights (c1, c2):
/// 1 / (w1^2/(theta+alpha) + w2^2/theta + 1) with w = c/(c1+c2).
/// A zero weight drops its term.
pub fn proportion(
    theta: &BigRational,
    alpha: &BigRational,
    c1: &BigRational,
    c2: &BigRational,
) -> Result<BigRational> {
    if *theta <= BigRational::zero() || theta + alpha <= BigRational::zero() {
        return Err(Error::NonpositiveTheta(theta.to_string()));
    }
    if c1.is_negative() || c2.is_negative() {
        return Err(Error::DegenerateWeights(
            c1.to_f64().unwrap_or(f64::NAN),
            c2.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let total = c1 + c2;
    if total.is_zero() {
        return Err(Error::DegenerateWeights(0.0, 0.0));
    }
    let w1 = c1 / &total;
    let w2 = c2 / &total;
    let mut q = BigRational::one();
    if !w1.is_zero() {
        q += &w1 * &w1 / (theta + alpha);
    }
    if !w2.is_zero() {
        q += &w2 * &w2 / theta;
    }
    Ok(q.recip())
}

/// Weights c1 : c2 = (theta + alpha) : theta, normalized to sum 1; they
/// maximize the proportion at fixed exponents.
pub fn optimal_weights(
    theta: &BigRational,
    alpha: &BigRational,
) -> Result<(BigRational, BigRational)> {
    if *theta <= BigRational::zero() {
        return Err(Error::NonpositiveTheta(theta.to_string()));
    }
    if alpha.is_negative() {
        return Err(Error::RangeViolation(format!("alpha {alpha} is negative")));
    }
    let denom = rat(2, 1) * theta + alpha;
    Ok(((theta + alpha) / &denom, theta / &denom))
}

/// a theta + b alpha <= c; margined constraints shrink by delta and are
/// strict at delta = 0.
struct Constraint {
    a: BigRational,
    b: BigRational,
    c: BigRational,
    margined: bool,
    name: &'static str,
}

fn region() -> Vec<Constraint> {
    let c = |a: (i64, i64), b: (i64, i64), bound: (i64, i64), margined, name| Constraint {
        a: rat(a.0, a.1),
        b: rat(b.0, b.1),
        c: rat(bound.0, bound.1),
        margined,
        name,
    };
    vec![
        c((-1, 1), (0, 1), (0, 1), true, "theta positive"),
        c((1, 1), (0, 1), (1, 2), true, "theta below 1/2"),
        c((1, 1), (1, 1), (1, 2), true, "theta + alpha below 1/2"),
        c((3, 1), (2, 1), (1, 1), true, "3 theta + 2 alpha below 1"),
        c((10, 1), (4, 1), (3, 1), true, "10 theta + 4 alpha below 3"),
        c((0, 1), (-1, 1), (0, 1), false, "alpha nonnegative"),
    ]
}

/// Feasibility verdict with the names of any violated constraints.
#[derive(Debug, Clone, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violated: Vec<String>,
}

/// Tests the six region constraints at margin delta. Margined
/// constraints must hold strictly and with slack at least delta; the
/// alpha >= 0 face is closed.
pub fn feasible(theta: &BigRational, alpha: &BigRational, delta: &BigRational) -> Feasibility {
    let mut violated = Vec::new();
    for con in region() {
        let lhs = &con.a * theta + &con.b * alpha;
        let ok = if con.margined {
            lhs < con.c && lhs <= &con.c - delta
        } else {
            lhs <= con.c
        };
        if !ok {
            violated.push(con.name.to_string());
        }
    }
    Feasibility {
        feasible: violated.is_empty(),
        violated,
    }
}

/// Outcome of maximizing 2 theta + alpha over the delta-shrunken closure.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub theta: BigRational,
    pub alpha: BigRational,
    pub c1: BigRational,
    pub c2: BigRational,
    pub combined: BigRational,
    pub proportion: BigRational,
    pub grid_theta: f64,
    pub grid_alpha: f64,
    pub grid_combined: f64,
}

/// Serialization form: exact rationals as strings plus float shadows.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationRecord {
    pub theta: String,
    pub alpha: String,
    pub c1: String,
    pub c2: String,
    pub combined: String,
    pub proportion: String,
    pub theta_f64: f64,
    pub alpha_f64: f64,
    pub proportion_f64: f64,
    pub grid_theta: f64,
    pub grid_alpha: f64,
    pub grid_combined: f64,
}

impl OptimizationResult {
    pub fn record(&self) -> OptimizationRecord {
        OptimizationRecord {
            theta: self.theta.to_string(),
            alpha: self.alpha.to_string(),
            c1: self.c1.to_string(),
            c2: self.c2.to_string(),
            combined: self.combined.to_string(),
            proportion: self.proportion.to_string(),
            theta_f64: self.theta.to_f64().unwrap_or(f64::NAN),
            alpha_f64: self.alpha.to_f64().unwrap_or(f64::NAN),
            proportion_f64: self.proportion.to_f64().unwrap_or(f64::NAN),
            grid_theta: self.grid_theta,
            grid_alpha: self.grid_alpha,
            grid_combined: self.grid_combined,
        }
    }
}

const GRID_STEP: f64 = 1e-4;

/// Float grid sweep over the closed shrunken region, argmax of
/// 2 theta + alpha with lexicographic tie-breaking.
fn grid_search(delta: f64, force_alpha_zero: bool) -> (f64, f64, f64) {
    const FUZZ: f64 = 1e-9;
    let ok = |theta: f64, alpha: f64| {
        theta >= delta - FUZZ
            && theta <= 0.5 - delta + FUZZ
            && theta + alpha <= 0.5 - delta + FUZZ
            && 3.0 * theta + 2.0 * alpha <= 1.0 - delta + FUZZ
            && 10.0 * theta + 4.0 * alpha <= 3.0 - delta + FUZZ
    };
    let n = (0.5 / GRID_STEP).round() as i64;
    let better = |x: (f64, f64, f64), y: (f64, f64, f64)| {
        // larger objective wins; ties take the smaller (theta, alpha)
        if (y.2, x.0, x.1) > (x.2, y.0, y.1) {
            y
        } else {
            x
        }
    };
    (0..=n)
        .into_par_iter()
        .filter_map(|i| {
            let theta = i as f64 * GRID_STEP;
            let mut best: Option<(f64, f64, f64)> = None;
            let kmax = if force_alpha_zero { 0 } else { n };
            for k in 0..=kmax {
                let alpha = k as f64 * GRID_STEP;
                if ok(theta, alpha) {
                    best = Some((theta, alpha, 2.0 * theta + alpha));
                } else if best.is_some() {
                    break;
                }
            }
            best
        })
        .reduce_with(better)
        .unwrap_or((f64::NAN, f64::NAN, f64::NEG_INFINITY))
}

/// Maximizes 2 theta + alpha over the closed delta-shrunken region, by
/// exact vertex enumeration cross-checked against the grid sweep. The
/// margin must stay below 1/8, the gap the optimum sits in.
pub fn maximize_combined_length(
    delta: &BigRational,
    force_alpha_zero: bool,
) -> Result<OptimizationResult> {
    if delta.is_negative() {
        return Err(Error::RangeViolation(format!("margin {delta} is negative")));
    }
    if *delta >= rat(1, 8) {
        return Err(Error::EmptyRegion(format!(
            "{delta}; margins of 1/8 or more reach the optimum's boundary gap"
        )));
    }
    let mut cons = region();
    if force_alpha_zero {
        cons.push(Constraint {
            a: rat(0, 1),
            b: rat(1, 1),
            c: rat(0, 1),
            margined: false,
            name: "alpha zero",
        });
    }
    let rhs: Vec<BigRational> = cons
        .iter()
        .map(|c| if c.margined { &c.c - delta } else { c.c.clone() })
        .collect();
    let satisfied = |theta: &BigRational, alpha: &BigRational| {
        cons.iter()
            .zip(&rhs)
            .all(|(c, r)| &c.a * theta + &c.b * alpha <= *r)
    };

    let mut best: Option<(BigRational, BigRational, BigRational)> = None;
    for i in 0..cons.len() {
        for j in i + 1..cons.len() {
            let det = &cons[i].a * &cons[j].b - &cons[j].a * &cons[i].b;
            if det.is_zero() {
                continue;
            }
            let theta = (&rhs[i] * &cons[j].b - &rhs[j] * &cons[i].b) / &det;
            let alpha = (&cons[i].a * &rhs[j] - &cons[j].a * &rhs[i]) / &det;
            if !satisfied(&theta, &alpha) {
                continue;
            }
            let obj = rat(2, 1) * &theta + &alpha;
            let replace = match &best {
                None => true,
                Some((b_obj, b_t, b_a)) => {
                    obj > *b_obj || (obj == *b_obj && (&theta, &alpha) < (b_t, b_a))
                }
            };
            if replace {
                best = Some((obj, theta, alpha));
            }
        }
    }
    let (combined, theta, alpha) =
        best.ok_or_else(|| Error::EmptyRegion(format!("no vertex at margin {delta}")))?;

    let (grid_theta, grid_alpha, grid_combined) =
        grid_search(delta.to_f64().unwrap_or(f64::NAN), force_alpha_zero);
    let gap = (combined.to_f64().unwrap_or(f64::NAN) - grid_combined).abs();
    assert!(
        gap <= 3.0 * GRID_STEP + 1e-9,
        "vertex and grid optima disagree by {gap}"
    );

    let (c1, c2) = optimal_weights(&theta, &alpha)?;
    let prop = proportion(&theta, &alpha, &c1, &c2)?;
    Ok(OptimizationResult {
        theta,
        alpha,
        c1,
        c2,
        combined,
        proportion: prop,
        grid_theta,
        grid_alpha,
        grid_combined,
    })
}
