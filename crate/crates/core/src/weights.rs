//! Level-`k` weights of `sl(r)`: partitions, parabolic flag data, and the
//! maps between them.
//!
//! A weight is carried as a dense partition of length `r`. Two partitions
//! that differ by a constant vector describe the same parabolic structure,
//! so most entry points normalize (last entry zero) before doing anything
//! else.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidPartition("rank must be at least 1".into()));
        }
        if let Some(w) = entries.windows(2).find(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition(format!(
                "entries must be weakly decreasing, found {} before {}",
                w[0], w[1]
            )));
        }
        Ok(Partition(entries))
    }

    /// The zero weight of rank `r`.
    pub fn vacuum(rank: usize) -> Self {
        Partition(vec![0; rank])
    }

    /// The fundamental weight `ω_s = (1^s, 0^{r-s})`.
    pub fn fundamental(rank: usize, s: usize) -> Self {
        let mut entries = vec![0; rank];
        entries[..s.min(rank)].fill(1);
        Partition(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Number of boxes `|λ|`.
    pub fn size(&self) -> u64 {
        self.0.iter().map(|&e| e as u64).sum()
    }

    pub fn first(&self) -> u32 {
        self.0[0]
    }

    pub fn last(&self) -> u32 {
        self.0[self.0.len() - 1]
    }

    pub fn is_normalized(&self) -> bool {
        self.last() == 0
    }

    /// True when all entries agree, i.e. the weight is equivalent to zero.
    pub fn is_trivial(&self) -> bool {
        self.first() == self.last()
    }

    pub fn normalize(&self) -> Partition {
        let shift = self.last();
        Partition(self.0.iter().map(|&e| e - shift).collect())
    }

    /// `λ* = (k-λ_r, …, k-λ_1)`.
    pub fn dual(&self, level: u32) -> Result<Partition> {
        if self.first() > level {
            return Err(Error::EntryExceedsLevel {
                entry: self.first(),
                level,
            });
        }
        Ok(Partition(self.0.iter().rev().map(|&e| level - e).collect()))
    }

    /// Normalized dual; the representative used whenever a dual weight is
    /// attached to a marked point.
    pub fn dual_normalized(&self, level: u32) -> Result<Partition> {
        Ok(self.normalize().dual(level)?.normalize())
    }

    /// `λ ~ μ` iff `λ - μ` is a constant vector.
    pub fn equivalent(&self, other: &Partition) -> Result<bool> {
        if self.rank() != other.rank() {
            return Err(Error::RankMismatch {
                expected: self.rank(),
                found: other.rank(),
            });
        }
        let offset = self.0[0] as i64 - other.0[0] as i64;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .all(|(&a, &b)| a as i64 - b as i64 == offset))
    }

    /// `(s(λ), m(λ))`: the last row index followed by a strict descent and
    /// the number of boxes in the first `s` rows.
    pub fn stats(&self) -> (usize, u64) {
        let s = (1..self.rank())
            .rev()
            .find(|&i| self.0[i - 1] > self.0[i])
            .unwrap_or(0);
        let m = self.0[..s].iter().map(|&e| e as u64).sum();
        (s, m)
    }

    pub fn check_level(&self, level: u32) -> Result<()> {
        let spread = self.first() - self.last();
        if spread > level {
            return Err(Error::EntryExceedsLevel {
                entry: spread,
                level,
            });
        }
        Ok(())
    }

    pub fn check_rank(&self, rank: usize) -> Result<()> {
        if self.rank() != rank {
            return Err(Error::RankMismatch {
                expected: rank,
                found: self.rank(),
            });
        }
        Ok(())
    }

    /// Checked `λ - ω_s`. Fails unless rows `1..=s` can each lose a box.
    pub fn remove_column(&self, s: usize) -> Result<Partition> {
        if s == 0 || s >= self.rank() || self.0[s - 1] <= self.0[s] {
            return Err(Error::OutOfRange(format!(
                "cannot remove a column of height {s} from {self}"
            )));
        }
        let mut entries = self.0.clone();
        entries[..s].iter_mut().for_each(|e| *e -= 1);
        Ok(Partition(entries))
    }
}

impl TryFrom<Vec<u32>> for Partition {
    type Error = Error;

    fn try_from(entries: Vec<u32>) -> Result<Self> {
        Partition::new(entries)
    }
}

impl From<Partition> for Vec<u32> {
    fn from(p: Partition) -> Self {
        p.0
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_list(f, &self.0)
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Partition::new(parse_list(s)?)
    }
}

/// Flag type `n⃗` and increasing weights `a⃗` of one marked point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParabolicPoint {
    flag_type: Vec<usize>,
    weights: Vec<u32>,
}

impl ParabolicPoint {
    pub fn new(flag_type: Vec<usize>, weights: Vec<u32>) -> Result<Self> {
        if flag_type.is_empty() || flag_type.len() != weights.len() {
            return Err(Error::InvalidParabolic(format!(
                "flag type has {} blocks but {} weights were given",
                flag_type.len(),
                weights.len()
            )));
        }
        if flag_type.contains(&0) {
            return Err(Error::InvalidParabolic("flag blocks must be positive".into()));
        }
        if weights.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParabolic("weights must be strictly increasing".into()));
        }
        Ok(ParabolicPoint { flag_type, weights })
    }

    pub fn flag_type(&self) -> &[usize] {
        &self.flag_type
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn rank(&self) -> usize {
        self.flag_type.iter().sum()
    }

    /// Number of proper steps `l` of the flag.
    pub fn steps(&self) -> usize {
        self.flag_type.len() - 1
    }

    pub fn check_level(&self, level: u32) -> Result<()> {
        let top = *self.weights.last().unwrap();
        if top > level {
            return Err(Error::InvalidParabolic(format!(
                "weight {top} exceeds level {level}"
            )));
        }
        Ok(())
    }

    /// `Σ_i d_i r_i` with `d_i = a_{i+1} - a_i` and `r_i = n_1 + … + n_i`.
    pub fn flag_sum(&self) -> i64 {
        let mut partial = 0i64;
        let mut total = 0i64;
        for i in 0..self.steps() {
            partial += self.flag_type[i] as i64;
            total += (self.weights[i + 1] as i64 - self.weights[i] as i64) * partial;
        }
        total
    }
}

impl fmt::Display for ParabolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("n=")?;
        write_list(f, &self.flag_type)?;
        f.write_str(";a=")?;
        write_list(f, &self.weights)
    }
}

impl FromStr for ParabolicPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, a) = s
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("expected `n=…;a=…`, got `{s}`")))?;
        let n = n
            .trim()
            .strip_prefix("n=")
            .ok_or_else(|| Error::Parse(format!("missing `n=` in `{s}`")))?;
        let a = a
            .trim()
            .strip_prefix("a=")
            .ok_or_else(|| Error::Parse(format!("missing `a=` in `{s}`")))?;
        ParabolicPoint::new(parse_list(n)?, parse_list(a)?)
    }
}

/// `λ_i = k - a_i` repeated `n_i` times.
pub fn omega_to_partition(point: &ParabolicPoint, level: u32) -> Result<Partition> {
    point.check_level(level)?;
    let entries = point
        .flag_type
        .iter()
        .zip(&point.weights)
        .flat_map(|(&n, &a)| std::iter::repeat(level - a).take(n))
        .collect();
    Partition::new(entries)
}

pub fn partition_to_omega(lambda: &Partition, level: u32) -> Result<ParabolicPoint> {
    if lambda.first() > level {
        return Err(Error::EntryExceedsLevel {
            entry: lambda.first(),
            level,
        });
    }
    let mut flag_type = Vec::new();
    let mut weights = Vec::new();
    for (i, &e) in lambda.entries().iter().enumerate() {
        if i > 0 && lambda.entries()[i - 1] == e {
            *flag_type.last_mut().unwrap() += 1;
        } else {
            flag_type.push(1);
            weights.push(level - e);
        }
    }
    ParabolicPoint::new(flag_type, weights)
}

/// Parabolic data at the two preimages of a node, determined by
/// `μ ∈ P_k`. The first point carries a weight equivalent to `μ`, the
/// second carries `μ*`.
pub fn nodal_point_data(mu: &Partition, level: u32) -> Result<(ParabolicPoint, ParabolicPoint)> {
    if mu.first() >= level {
        return Err(Error::OutOfRange(format!(
            "node weight {mu} must have entries below the level {level}"
        )));
    }
    let r = mu.rank();
    let e = mu.entries();
    // (r_i, d_i) for the nonzero gaps, in increasing r_i
    let gaps: Vec<(usize, u32)> = (1..r)
        .filter(|&i| e[i - 1] > e[i])
        .map(|i| (i, e[i - 1] - e[i]))
        .collect();
    let base = mu.last();
    let build = |steps: &[(usize, u32)]| {
        let mut weights = vec![base];
        let mut flag_type = Vec::with_capacity(steps.len() + 1);
        let mut prev = 0;
        for &(ri, di) in steps {
            weights.push(weights.last().unwrap() + di);
            flag_type.push(ri - prev);
            prev = ri;
        }
        flag_type.push(r - prev);
        ParabolicPoint::new(flag_type, weights)
    };
    let first = build(&gaps)?;
    let mirrored: Vec<(usize, u32)> = gaps.iter().rev().map(|&(ri, di)| (r - ri, di)).collect();
    let second = build(&mirrored)?;
    Ok((first, second))
}

/// Index sets of level-`k` weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSet {
    /// `P_k`: `0 ≤ μ_r ≤ … ≤ μ_1 < k`.
    Strict,
    /// `W_k`: `0 = λ_r ≤ … ≤ λ_1 ≤ k`.
    Normalized,
    /// `λ ∈ W_k` with `|λ| ≡ ρ (mod r)`.
    Residue(usize),
}

/// Materialized weight set in lexicographic order.
pub fn enumerate_weights(rank: usize, level: u32, set: WeightSet) -> Vec<Partition> {
    fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, len: usize, max: u32) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        let bound = cur.last().copied().unwrap_or(max).min(max);
        for v in 0..=bound {
            cur.push(v);
            fill(out, cur, len, max);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    match set {
        WeightSet::Strict => {
            if level > 0 {
                fill(&mut raw, &mut Vec::new(), rank, level - 1);
            }
        }
        WeightSet::Normalized | WeightSet::Residue(_) => {
            fill(&mut raw, &mut Vec::new(), rank - 1, level);
            raw.iter_mut().for_each(|v| v.push(0));
        }
    }
    if let WeightSet::Residue(rho) = set {
        raw.retain(|v| v.iter().map(|&e| e as u64).sum::<u64>() % rank as u64 == rho as u64);
    }
    raw.sort();
    raw.into_iter().map(Partition).collect()
}

/// Hecke transformation `H^m` on weights with entries in `[0, k]`.
pub fn hecke(mu: &Partition, m: usize, level: u32) -> Result<Partition> {
    let r = mu.rank();
    if m == 0 || m > r {
        return Err(Error::OutOfRange(format!("hecke power {m} not in 1..={r}")));
    }
    if mu.first() > level {
        return Err(Error::EntryExceedsLevel {
            entry: mu.first(),
            level,
        });
    }
    if m == r {
        return Ok(mu.normalize());
    }
    let e = mu.entries();
    // 1-indexed pivot μ_{r-m}
    let pivot = e[r - m - 1];
    let entries = (1..=r)
        .map(|j| {
            if j <= m {
                level - pivot + e[r - m + j - 1]
            } else {
                e[j - m - 1] - pivot
            }
        })
        .collect();
    Partition::new(entries)
}

/// The map `φ(μ) = H^{r-i^μ}(μ)` on `{μ ∈ P_k : k | A + |μ|}` where
/// `A = k·n_1^ω`.
pub fn phi(mu: &Partition, offset: i64, rank: usize, level: u32) -> Result<Partition> {
    mu.check_rank(rank)?;
    if mu.first() >= level {
        return Err(Error::Precondition(format!("{mu} is not in P_{level}")));
    }
    let total = offset + mu.size() as i64;
    if total.mod_floor(&(level as i64)) != 0 {
        return Err(Error::Precondition(format!(
            "{level} does not divide {offset} + |{mu}|"
        )));
    }
    let d1 = total / level as i64 - rank as i64;
    let i = d1.mod_floor(&(rank as i64)) as usize;
    hecke(mu, rank - i, level)
}

/// Hecke transformation of a marked point in flag language: rotates the
/// first flag block to the end and lowers the degree by `n_1`. Requires
/// `a_1 = 0` and, unless there is a single block, `a_{l+1} < k`. Returns the new point and the degree drop.
pub fn hecke_point(point: &ParabolicPoint, level: u32) -> Result<(ParabolicPoint, i64)> {
    point.check_level(level)?;
    let (n, a) = (point.flag_type(), point.weights());
    if a[0] != 0 || (a.len() > 1 && *a.last().unwrap() >= level) {
        return Err(Error::Precondition(
            "hecke_point needs a_1 = 0 and a_{l+1} < k".into(),
        ));
    }
    if n.len() == 1 {
        return Ok((point.clone(), n[0] as i64));
    }
    let mut flag_type = n[1..].to_vec();
    flag_type.push(n[0]);
    let mut weights = vec![0];
    weights.extend(a[2..].iter().map(|&x| x - a[1]));
    weights.push(level - a[1]);
    Ok((ParabolicPoint::new(flag_type, weights)?, n[0] as i64))
}

/// Split variant: peels `m` directions off the first flag block into a new
/// top block of weight `k`, lowering the degree by `m`. Requires `a_1 = 0`,
/// `a_{l+1} < k` and `1 ≤ m < n_1`.
pub fn hecke_split_point(point: &ParabolicPoint, m: usize, level: u32) -> Result<ParabolicPoint> {
    point.check_level(level)?;
    let (n, a) = (point.flag_type(), point.weights());
    if a[0] != 0 || *a.last().unwrap() >= level {
        return Err(Error::Precondition(
            "hecke_split_point needs a_1 = 0 and a_{l+1} < k".into(),
        ));
    }
    if m == 0 || m >= n[0] {
        return Err(Error::OutOfRange(format!("split size {m} not in 1..{}", n[0])));
    }
    let mut flag_type = n.to_vec();
    flag_type[0] -= m;
    flag_type.push(m);
    let mut weights = a.to_vec();
    weights.push(level);
    ParabolicPoint::new(flag_type, weights)
}

/// Full input to `D_g(r, d, ω)`, with every point normalized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub genus: u32,
    pub rank: usize,
    pub degree: i64,
    pub level: u32,
    pub points: Vec<Partition>,
}

impl ProblemInstance {
    pub fn new(genus: u32, rank: usize, degree: i64, level: u32, points: Vec<Partition>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidInstance("rank must be positive".into()));
        }
        if level == 0 {
            return Err(Error::InvalidInstance("level must be positive".into()));
        }
        let points = points
            .into_iter()
            .map(|p| {
                p.check_rank(rank)?;
                p.check_level(level)?;
                Ok(p.normalize())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProblemInstance {
            genus,
            rank,
            degree,
            level,
            points,
        })
    }

    /// `|ω| = Σ_x |λ_x|`.
    pub fn total_boxes(&self) -> u64 {
        self.points.iter().map(Partition::size).sum()
    }

    /// `k·d ≡ Σ|λ_x| (mod r)`; the integrality condition on the theta level
    /// for normalized data.
    pub fn divisible(&self) -> bool {
        let r = self.rank as i64;
        (self.level as i64 * self.degree - self.total_boxes() as i64).mod_floor(&r) == 0
    }

    /// `χ = d + r(1-g)`.
    pub fn euler_characteristic(&self) -> i64 {
        self.degree + self.rank as i64 * (1 - self.genus as i64)
    }

    /// Theta level `ℓ = (kχ - Σ_x Σ_i d_i(x) r_i(x)) / r`, computed through
    /// the flag form of each point.
    pub fn level_ell(&self) -> Result<Ratio<i64>> {
        let flags = self
            .points
            .iter()
            .map(|p| partition_to_omega(p, self.level))
            .collect::<Result<Vec<_>>>()?;
        Ok(level_ell_flags(
            self.level,
            self.euler_characteristic(),
            self.rank,
            &flags,
        ))
    }

    /// Points sorted into canonical order; the value is independent of it.
    pub fn canonical(&self) -> ProblemInstance {
        let mut out = self.clone();
        out.points.sort();
        out
    }
}

impl fmt::Display for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "g={} r={} d={} k={} [{}]",
            self.genus,
            self.rank,
            self.degree,
            self.level,
            format_points(&self.points)
        )
    }
}

/// `ℓ` for raw flag data.
pub fn level_ell_flags(level: u32, chi: i64, rank: usize, points: &[ParabolicPoint]) -> Ratio<i64> {
    let flag_total: i64 = points.iter().map(ParabolicPoint::flag_sum).sum();
    Ratio::new(level as i64 * chi - flag_total, rank as i64)
}

/// Parses `"3,1,0;2,1,0"`; a point may also be given as `n=…;a=…`, which is
/// converted to its partition at `level`.
pub fn parse_points(text: &str, level: u32) -> Result<Vec<Partition>> {
    let tokens: Vec<&str> = text
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect();
    let mut points = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].starts_with("n=") {
            let a = tokens
                .get(i + 1)
                .filter(|t| t.starts_with("a="))
                .ok_or_else(|| Error::Parse(format!("`{}` must be followed by `a=…`", tokens[i])))?;
            let point: ParabolicPoint = format!("{};{}", tokens[i], a).parse()?;
            points.push(omega_to_partition(&point, level)?);
            i += 2;
        } else {
            points.push(tokens[i].parse()?);
            i += 1;
        }
    }
    Ok(points)
}

pub fn format_points(points: &[Partition]) -> String {
    points
        .iter()
        .map(Partition::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer `{}` in `{s}`", t.trim())))
        })
        .collect()
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}
