//! Closed-form evaluation of `D_g(r, d, ω)` as a finite sum over regular
//! points of the level-`(r+k)` torus, rounded to a verified integer.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{DoubleDouble, Precision, Real};
use crate::unity::{delta_norm, eval_points, precision_error, schur_at, EvalPoint, UnityContext};
use crate::weights::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Bound on residuals of the character-sum identities.
    pub identity: f64,
    /// Bound on the distance of a raw sum from its rounded integer.
    pub rounding: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: 1e-9,
            rounding: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConfig {
    pub tolerances: Tolerances,
    pub start: Precision,
    /// Retry in the next precision when the first attempt is inconclusive.
    pub escalate: bool,
    /// Evaluate terms on the rayon pool. Terms are still summed in
    /// lexicographic order, so the result is bit-identical either way.
    pub parallel: bool,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        AnalyticConfig {
            tolerances: Tolerances::default(),
            start: Precision::Double,
            escalate: true,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticResult {
    pub value: BigInt,
    /// Distance of the raw complex sum from `value`.
    pub residual: f64,
    /// Number of torus points summed; zero when divisibility fails.
    pub terms: usize,
    pub precision: Precision,
}

/// Raw evaluation before rounding.
#[derive(Debug, Clone, Copy)]
pub struct RawSum<R> {
    pub value: Complex<R>,
    /// Rounding-error estimate for `value`.
    pub bound: f64,
    pub terms: usize,
}

/// `(-1)^{d(r-1)} (k/r)^g (r(r+k)^{r-1})^{g-1}`.
pub fn prefactor(inst: &ProblemInstance) -> BigRational {
    let r = BigInt::from(inst.rank);
    let k = BigInt::from(inst.level);
    let n = BigInt::from(inst.rank as u64 + inst.level as u64);
    let g = inst.genus as i32;
    let base = BigRational::new(k, r.clone());
    let vol = BigRational::from_integer(r * num_traits::pow(n, inst.rank - 1));
    let mut out = pow_rational(&base, g) * pow_rational(&vol, g - 1);
    if (inst.degree * (inst.rank as i64 - 1)).rem_euclid(2) == 1 {
        out = -out;
    }
    out
}

fn pow_rational(x: &BigRational, e: i32) -> BigRational {
    let p = num_traits::pow(x.clone(), e.unsigned_abs() as usize);
    if e < 0 {
        p.recip()
    } else {
        p
    }
}

fn rational_to<R: Real>(q: &BigRational) -> R {
    R::from_bigint(q.numer()) / R::from_bigint(q.denom())
}

fn term<R: Real>(ctx: &UnityContext<R>, inst: &ProblemInstance, p: &EvalPoint) -> Result<Complex<R>> {
    let n = ctx.modulus() as i128;
    let exponent = (inst.degree as i128 * n - inst.total_boxes() as i128) * p.sum() as i128;
    let mut t = ctx.phase(exponent);
    for lambda in &inst.points {
        t = t * schur_at(ctx, lambda, p)?;
    }
    let (_, sines) = delta_norm(ctx, p);
    let g = inst.genus;
    let scale = match g {
        0 => sines,
        1 => R::one(),
        _ => R::one() / num_traits::pow(sines, g as usize - 1),
    };
    Ok(t * Complex::new(scale, R::zero()))
}

/// The prefactor times the torus sum, without the divisibility shortcut.
pub fn raw_sum<R: Real>(inst: &ProblemInstance, parallel: bool) -> Result<RawSum<R>> {
    let ctx = UnityContext::<R>::new(inst.rank, inst.level);
    let points = eval_points(inst.rank, inst.level);
    let terms: Vec<Complex<R>> = if parallel {
        points
            .par_iter()
            .map(|p| term(&ctx, inst, p))
            .collect::<Result<_>>()?
    } else {
        points.iter().map(|p| term(&ctx, inst, p)).collect::<Result<_>>()?
    };
    let mut sum = Complex::<R>::zero();
    let mut magnitude = 0.0;
    for t in &terms {
        sum = sum + *t;
        magnitude += t.re.to_f64().hypot(t.im.to_f64());
    }
    let pre = prefactor(inst);
    let pre_r: R = rational_to(&pre);
    let value = sum * Complex::new(pre_r, R::zero());
    let pre_abs = pre.abs().to_f64().unwrap_or(f64::INFINITY);
    let c = 8.0 * ((inst.rank * inst.rank + inst.points.len() + 2) as f64);
    let bound = R::UNIT_ROUNDOFF * pre_abs * magnitude * c;
    Ok(RawSum {
        value,
        bound,
        terms: terms.len(),
    })
}

fn round_checked<R: Real>(raw: &RawSum<R>, tol: f64) -> Result<AnalyticResult> {
    let (value, dist) = raw.value.re.nearest_integer();
    let residual = dist.hypot(raw.value.im.to_f64().abs());
    if !residual.is_finite() || residual > tol || !(raw.bound <= tol) {
        return Err(precision_error(residual, raw.bound, tol, R::PRECISION));
    }
    Ok(AnalyticResult {
        value,
        residual,
        terms: raw.terms,
        precision: R::PRECISION,
    })
}

fn attempt(inst: &ProblemInstance, precision: Precision, cfg: &AnalyticConfig) -> Result<AnalyticResult> {
    let tol = cfg.tolerances.rounding;
    match precision {
        Precision::Double => round_checked(&raw_sum::<f64>(inst, cfg.parallel)?, tol),
        Precision::DoubleDouble => round_checked(&raw_sum::<DoubleDouble>(inst, cfg.parallel)?, tol),
    }
}

pub fn verlinde_analytic(inst: &ProblemInstance) -> Result<AnalyticResult> {
    verlinde_analytic_with(inst, &AnalyticConfig::default())
}

pub fn verlinde_analytic_with(inst: &ProblemInstance, cfg: &AnalyticConfig) -> Result<AnalyticResult> {
    if !inst.divisible() {
        return Ok(AnalyticResult {
            value: BigInt::zero(),
            residual: 0.0,
            terms: 0,
            precision: cfg.start,
        });
    }
    let mut precision = cfg.start;
    loop {
        match attempt(inst, precision, cfg) {
            Ok(res) => return Ok(res),
            Err(err @ Error::PrecisionExceeded { .. }) => match precision.next() {
                Some(next) if cfg.escalate => precision = next,
                _ => return Err(err),
            },
            Err(err) => return Err(err),
        }
    }
}

/// Convenience wrapper returning only the integer.
pub fn analytic_value(inst: &ProblemInstance) -> Result<BigInt> {
    Ok(verlinde_analytic(inst)?.value)
}
