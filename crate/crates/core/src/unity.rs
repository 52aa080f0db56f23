//! Schur polynomials and Vandermonde factors evaluated at regular points
//! of the level-`(r+k)` torus, and the character-sum identities they
//! satisfy.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Precision, Real};
use crate::weights::{enumerate_weights, Partition, WeightSet};

/// Regular torus point `0 = v_r < … < v_1 < r + k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvalPoint {
    v: Vec<u32>,
    modulus: u32,
}

impl EvalPoint {
    pub fn new(v: Vec<u32>, modulus: u32) -> Result<Self> {
        let strictly = v.windows(2).all(|w| w[0] > w[1]);
        if v.is_empty() || !strictly || *v.last().unwrap() != 0 || v[0] >= modulus {
            return Err(Error::OutOfRange(format!(
                "{v:?} is not a strictly decreasing vector in [0, {modulus}) ending in 0"
            )));
        }
        Ok(EvalPoint { v, modulus })
    }

    pub fn coords(&self) -> &[u32] {
        &self.v
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn rank(&self) -> usize {
        self.v.len()
    }

    /// `|v⃗| = Σ v_i`.
    pub fn sum(&self) -> u64 {
        self.v.iter().map(|&x| x as u64).sum()
    }
}

/// All evaluation points for `(r, k)` in lexicographic order of `v⃗`.
pub fn eval_points(rank: usize, level: u32) -> Vec<EvalPoint> {
    fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, left: usize, below: u32) {
        if left == 0 {
            let mut v = cur.clone();
            v.push(0);
            out.push(v);
            return;
        }
        for x in left as u32..below {
            cur.push(x);
            fill(out, cur, left - 1, x);
            cur.pop();
        }
    }
    let n = rank as u32 + level;
    let mut raw = Vec::new();
    fill(&mut raw, &mut Vec::new(), rank - 1, n);
    raw.sort();
    raw.into_iter()
        .map(|v| EvalPoint { v, modulus: n })
        .collect()
}

/// Roots of unity of order `r(r+k)`, shared by every evaluation at `(r, k)`.
/// `zeta(e)` is `exp(2πi e/(r+k))`, `phase(e)` is `exp(2πi e/(r(r+k)))`.
#[derive(Debug, Clone)]
pub struct UnityContext<R: Real> {
    rank: usize,
    level: u32,
    roots: Vec<Complex<R>>,
}

impl<R: Real> UnityContext<R> {
    pub fn new(rank: usize, level: u32) -> Self {
        let order = rank as u64 * (rank as u64 + level as u64);
        let roots = (0..order).map(|j| R::unit_root(j, order)).collect();
        UnityContext { rank, level, roots }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn modulus(&self) -> u32 {
        self.rank as u32 + self.level
    }

    pub fn phase(&self, e: i128) -> Complex<R> {
        let order = self.roots.len() as i128;
        self.roots[e.rem_euclid(order) as usize]
    }

    pub fn zeta(&self, e: i128) -> Complex<R> {
        self.phase(e * self.rank as i128)
    }
}

/// `exp(2πi·e/n)` in double precision.
pub fn root_power(n: u64, e: i64) -> Complex<f64> {
    f64::unit_root(e.rem_euclid(n as i64) as u64, n)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn determinant<R: Real>(mut a: Vec<Vec<Complex<R>>>) -> Complex<R> {
    let n = a.len();
    let mut det = Complex::<R>::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .norm_sqr()
                    .partial_cmp(&a[j][col].norm_sqr())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot][col].is_zero() {
            return Complex::zero();
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col];
        det = det * p;
        for row in col + 1..n {
            let factor = a[row][col] / p;
            if factor.is_zero() {
                continue;
            }
            for c in col..n {
                let t = a[col][c] * factor;
                a[row][c] = a[row][c] - t;
            }
        }
    }
    det
}

/// `(Δ(v⃗), Π_{i<j} (2 sin π(v_i - v_j)/N)²)`.
pub fn delta_norm<R: Real>(ctx: &UnityContext<R>, p: &EvalPoint) -> (Complex<R>, R) {
    let v = p.coords();
    let two = R::from_f64(2.0);
    let mut delta = Complex::<R>::one();
    let mut sines = R::one();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            delta = delta * (ctx.zeta(v[i] as i128) - ctx.zeta(v[j] as i128));
            // (2 sin πt/N)² = 2 - 2 cos 2πt/N
            let c = ctx.zeta(v[i] as i128 - v[j] as i128).re;
            sines = sines * (two - two * c);
        }
    }
    (delta, sines)
}

/// `S_λ(ζ^{v_1}, …, ζ^{v_r})` as a ratio of alternants. `λ` may be any
/// weakly decreasing vector of the right rank; it need not be normalized.
pub fn schur_at<R: Real>(ctx: &UnityContext<R>, lambda: &Partition, p: &EvalPoint) -> Result<Complex<R>> {
    let r = p.rank();
    lambda.check_rank(r)?;
    let e = lambda.entries();
    let rows: Vec<Vec<Complex<R>>> = (0..r)
        .map(|i| {
            let exponent = e[i] as i128 + (r - 1 - i) as i128;
            p.coords()
                .iter()
                .map(|&vj| ctx.zeta(vj as i128 * exponent))
                .collect()
        })
        .collect();
    let numerator = determinant(rows);
    let (delta, sines) = delta_norm(ctx, p);
    let floor = R::from_f64(1e-200);
    if !(sines > floor) {
        return Err(precision_error(0.0, f64::INFINITY, 0.0, R::PRECISION));
    }
    let value = numerator / delta;
    if !value.re.to_f64().is_finite() || !value.im.to_f64().is_finite() {
        return Err(precision_error(f64::INFINITY, f64::INFINITY, 0.0, R::PRECISION));
    }
    Ok(value)
}

pub(crate) fn precision_error(residual: f64, bound: f64, tolerance: f64, p: Precision) -> Error {
    Error::PrecisionExceeded {
        residual,
        bound,
        tolerance,
        precision: p.name(),
    }
}

/// The three character-sum identities over level-`k` weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    /// `Σ_{μ∈P_k} S_μ S_{μ*} = e^{2πi k|v|/N} k N^{r-1} / Π(2 sin)²`.
    SumStrict,
    /// `Σ_{μ∈W_k} S_μ S_{μ*} = e^{2πi k|v|/N} r N^{r-1} / Π(2 sin)²`.
    SumNormalized,
    /// Twisted orthogonality between distinct points; the sum vanishes.
    Orthogonality,
}

/// `|LHS - RHS|` of the chosen identity at `p` (and `q` for
/// orthogonality).
pub fn identity_residual<R: Real>(
    ctx: &UnityContext<R>,
    kind: Identity,
    p: &EvalPoint,
    q: Option<&EvalPoint>,
) -> Result<f64> {
    let (r, k) = (ctx.rank(), ctx.level());
    let n = ctx.modulus() as i128;
    let dual = |mu: &Partition| mu.dual(k);
    let (lhs, rhs) = match kind {
        Identity::SumStrict | Identity::SumNormalized => {
            let (set, factor) = if kind == Identity::SumStrict {
                (WeightSet::Strict, k as i64)
            } else {
                (WeightSet::Normalized, r as i64)
            };
            let mut lhs = Complex::<R>::zero();
            for mu in enumerate_weights(r, k, set) {
                lhs = lhs + schur_at(ctx, &mu, p)? * schur_at(ctx, &dual(&mu)?, p)?;
            }
            let (_, sines) = delta_norm(ctx, p);
            let scale = R::from_i64(factor * (n as i64).pow(r as u32 - 1)) / sines;
            let phase = ctx.zeta(k as i128 * p.sum() as i128);
            (lhs, phase * Complex::new(scale, R::zero()))
        }
        Identity::Orthogonality => {
            let q = q.ok_or_else(|| Error::Precondition("orthogonality needs two points".into()))?;
            if p == q {
                return Err(Error::Precondition("orthogonality needs distinct points".into()));
            }
            let mut lhs = Complex::<R>::zero();
            for mu in enumerate_weights(r, k, WeightSet::Normalized) {
                let star = dual(&mu)?;
                let e = -(mu.size() as i128) * p.sum() as i128 - (star.size() as i128) * q.sum() as i128;
                lhs = lhs + ctx.phase(e) * schur_at(ctx, &mu, p)? * schur_at(ctx, &star, q)?;
            }
            (lhs, Complex::zero())
        }
    };
    let diff = lhs - rhs;
    Ok(diff.re.abs().to_f64().hypot(diff.im.abs().to_f64()))
}
