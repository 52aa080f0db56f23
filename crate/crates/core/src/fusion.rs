//! Integer-only three-point genus-zero numbers (fusion coefficients),
//! computed from single-column Pieri sets by induction on `m(λ) - s(λ)`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use dashmap::DashMap;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{enumerate_weights, Partition, WeightSet};

pub const CACHE_VERSION: u64 = 1;
pub const DEFAULT_DEPTH_LIMIT: usize = 256;

/// `λ` plus `s` boxes in distinct rows, kept only when weakly decreasing.
/// Results are not normalized.
pub fn pieri_raw(lambda: &Partition, s: usize) -> Vec<Partition> {
    let r = lambda.rank();
    let e = lambda.entries();
    let mut out = Vec::new();
    let mut rows = Vec::with_capacity(s);
    fn choose(start: usize, r: usize, s: usize, rows: &mut Vec<usize>, e: &[u32], out: &mut Vec<Partition>) {
        if rows.len() == s {
            let mut v = e.to_vec();
            rows.iter().for_each(|&i| v[i] += 1);
            if let Ok(p) = Partition::new(v) {
                out.push(p);
            }
            return;
        }
        for i in start..r {
            rows.push(i);
            choose(i + 1, r, s, rows, e, out);
            rows.pop();
        }
    }
    choose(0, r, s, &mut rows, e, &mut out);
    out
}

/// `Y(λ, ω_s)` normalized and cut down to level `k`, sorted and
/// duplicate-free.
pub fn pieri_set(lambda: &Partition, s: usize, level: u32) -> Result<Vec<Partition>> {
    let r = lambda.rank();
    if s == 0 || s >= r {
        return Err(Error::OutOfRange(format!("column height {s} not in 1..{r}")));
    }
    let mut out: Vec<Partition> = pieri_raw(lambda, s)
        .into_iter()
        .map(|p| p.normalize())
        .filter(|p| p.first() <= level)
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Three-point number with one point equal to `ω_s`: one when `λ_z*` is
/// equivalent to a member of `Y(λ_y, ω_s)`.
pub fn fusion_base3(s: usize, lambda_y: &Partition, lambda_z: &Partition, level: u32) -> Result<u32> {
    let r = lambda_y.rank();
    if s == 0 || s >= r {
        return Err(Error::OutOfRange(format!("column height {s} not in 1..{r}")));
    }
    lambda_z.check_rank(r)?;
    let dual = lambda_z.normalize().dual(level)?;
    for mu in pieri_raw(lambda_y, s) {
        if mu.equivalent(&dual)? {
            return Ok(1);
        }
    }
    Ok(0)
}

/// Sorted normalized triple; `(r, k)` is fixed per engine.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FusionKey([Partition; 3]);

impl FusionKey {
    pub fn new(a: &Partition, b: &Partition, c: &Partition) -> Self {
        let mut t = [a.normalize(), b.normalize(), c.normalize()];
        t.sort();
        FusionKey(t)
    }

    pub fn parts(&self) -> &[Partition; 3] {
        &self.0
    }

    fn encode(&self) -> String {
        format!("a={}|b={}|c={}", self.0[0], self.0[1], self.0[2])
    }

    fn decode(s: &str) -> Result<Self> {
        let bad = || Error::CacheCorrupt(format!("bad key `{s}`"));
        let parts: Vec<&str> = s.split('|').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let mut out = Vec::with_capacity(3);
        for (part, tag) in parts.iter().zip(["a=", "b=", "c="]) {
            let body = part.strip_prefix(tag).ok_or_else(bad)?;
            out.push(body.parse::<Partition>().map_err(|_| bad())?);
        }
        Ok(FusionKey::new(&out[0], &out[1], &out[2]))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheFile {
    version: u64,
    rank: usize,
    level: u32,
    entries: BTreeMap<String, String>,
}

/// Memoized fusion coefficients at fixed `(r, k)`. Lookups and inserts may
/// run concurrently; the same key always maps to the same value.
#[derive(Debug)]
pub struct FusionEngine {
    rank: usize,
    level: u32,
    depth_limit: usize,
    memo: DashMap<FusionKey, BigInt>,
}

impl FusionEngine {
    pub fn new(rank: usize, level: u32) -> Self {
        FusionEngine {
            rank,
            level,
            depth_limit: DEFAULT_DEPTH_LIMIT,
            memo: DashMap::new(),
        }
    }

    pub fn with_depth_limit(mut self, limit: usize) -> Self {
        self.depth_limit = limit;
        self
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    pub fn clear(&self) {
        self.memo.clear();
    }

    fn check(&self, p: &Partition) -> Result<Partition> {
        p.check_rank(self.rank)?;
        p.check_level(self.level)?;
        Ok(p.normalize())
    }

    /// `D_0(r, 0, {λ1, λ2, λ3})`.
    pub fn fusion_coeff(&self, a: &Partition, b: &Partition, c: &Partition) -> Result<BigInt> {
        let (a, b, c) = (self.check(a)?, self.check(b)?, self.check(c)?);
        self.coeff(&a, &b, &c, 0)
    }

    fn coeff(&self, a: &Partition, b: &Partition, c: &Partition, depth: usize) -> Result<BigInt> {
        if depth > self.depth_limit {
            return Err(Error::RecursionLimit(self.depth_limit));
        }
        let key = FusionKey::new(a, b, c);
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let value = self.compute(&key, depth)?;
        self.memo.insert(key, value.clone());
        Ok(value)
    }

    fn compute(&self, key: &FusionKey, depth: usize) -> Result<BigInt> {
        let (r, k) = (self.rank, self.level);
        let pts = key.parts();
        let total: u64 = pts.iter().map(Partition::size).sum();
        if total % r as u64 != 0 {
            return Ok(BigInt::zero());
        }
        let indicator = |b: bool| if b { BigInt::one() } else { BigInt::zero() };
        for i in 0..3 {
            let (y, z) = (&pts[(i + 1) % 3], &pts[(i + 2) % 3]);
            if pts[i].is_trivial() {
                return Ok(indicator(y.equivalent(&z.dual(k)?)?));
            }
        }
        for i in 0..3 {
            let (y, z) = (&pts[(i + 1) % 3], &pts[(i + 2) % 3]);
            let (s, _) = pts[i].stats();
            if pts[i] == Partition::fundamental(r, s) {
                return Ok(BigInt::from(fusion_base3(s, y, z, k)?));
            }
        }
        // pivot on the point with least m - s; ties go to the first in
        // canonical order
        let pivot = (0..3)
            .min_by_key(|&i| {
                let (s, m) = pts[i].stats();
                m - s as u64
            })
            .unwrap();
        let x = &pts[pivot];
        let (y, z) = (&pts[(pivot + 1) % 3], &pts[(pivot + 2) % 3]);
        let (s, _) = x.stats();
        let stripped = x.remove_column(s)?;
        let four = self.four_point_at_depth(&Partition::fundamental(r, s), y, &stripped, z, depth + 1)?;
        let mut others = BigInt::zero();
        for mu in pieri_set(&stripped, s, k)? {
            if &mu != x {
                others += self.coeff(&mu, y, z, depth + 1)?;
            }
        }
        Ok(four - others)
    }

    /// Four-point genus-zero number through the split `{a, b} | {c, d}`.
    pub fn four_point(&self, a: &Partition, b: &Partition, c: &Partition, d: &Partition) -> Result<BigInt> {
        let (a, b, c, d) = (self.check(a)?, self.check(b)?, self.check(c)?, self.check(d)?);
        self.four_point_at_depth(&a, &b, &c, &d, 0)
    }

    fn four_point_at_depth(
        &self,
        a: &Partition,
        b: &Partition,
        c: &Partition,
        d: &Partition,
        depth: usize,
    ) -> Result<BigInt> {
        let r = self.rank as u64;
        let rho = (r - (a.size() + b.size()) % r) % r;
        let mut total = BigInt::zero();
        for nu in enumerate_weights(self.rank, self.level, WeightSet::Residue(rho as usize)) {
            let left = self.coeff(a, b, &nu, depth)?;
            if left.is_zero() {
                continue;
            }
            let right = self.coeff(&nu.dual(self.level)?, c, d, depth)?;
            total += left * right;
        }
        Ok(total)
    }

    /// Computes every triple from `W_k` and returns the memo size.
    pub fn fill(&self) -> Result<usize> {
        let ws = enumerate_weights(self.rank, self.level, WeightSet::Normalized);
        for (i, a) in ws.iter().enumerate() {
            for (j, b) in ws.iter().enumerate().skip(i) {
                for c in ws.iter().skip(j) {
                    self.coeff(a, b, c, 0)?;
                }
            }
        }
        Ok(self.len())
    }

    /// Writes the memo table; returns the number of entries written.
    pub fn store(&self, path: &Path) -> Result<usize> {
        let entries: BTreeMap<String, String> = self
            .memo
            .iter()
            .map(|e| (e.key().encode(), e.value().to_string()))
            .collect();
        let n = entries.len();
        let file = CacheFile {
            version: CACHE_VERSION,
            rank: self.rank,
            level: self.level,
            entries,
        };
        let text = serde_json::to_string_pretty(&file).map_err(|e| Error::CacheCorrupt(e.to_string()))?;
        fs::write(path, text)?;
        Ok(n)
    }

    /// Builds an engine for whatever `(r, k)` a stored table was written for
    /// and loads it. `None` for an empty file.
    pub fn from_file(path: &Path) -> Result<Option<(FusionEngine, usize)>> {
        let Some(file) = read_cache(path)? else {
            return Ok(None);
        };
        let engine = FusionEngine::new(file.rank, file.level);
        let n = engine.absorb(file)?;
        Ok(Some((engine, n)))
    }

    /// Merges a stored table into the memo; returns the number of entries
    /// read. An empty file holds no entries.
    pub fn load(&self, path: &Path) -> Result<usize> {
        match read_cache(path)? {
            Some(file) => self.absorb(file),
            None => Ok(0),
        }
    }

    fn absorb(&self, file: CacheFile) -> Result<usize> {
        if file.rank != self.rank || file.level != self.level {
            return Err(Error::CacheParameters {
                found_rank: file.rank,
                found_level: file.level,
                rank: self.rank,
                level: self.level,
            });
        }
        let mut parsed = Vec::with_capacity(file.entries.len());
        for (k, v) in &file.entries {
            let key = FusionKey::decode(k)?;
            for p in key.parts() {
                p.check_rank(self.rank)
                    .and_then(|_| p.check_level(self.level))
                    .map_err(|e| Error::CacheCorrupt(format!("key `{k}`: {e}")))?;
            }
            let value: BigInt = v
                .parse()
                .map_err(|_| Error::CacheCorrupt(format!("bad value `{v}` for `{k}`")))?;
            parsed.push((key, value));
        }
        let n = parsed.len();
        for (key, value) in parsed {
            self.memo.insert(key, value);
        }
        Ok(n)
    }
}

fn read_cache(path: &Path) -> Result<Option<CacheFile>> {
    let text = fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Ok(None);
    }
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::CacheCorrupt(e.to_string()))?;
    let version = doc
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::CacheCorrupt("missing version".into()))?;
    if version != CACHE_VERSION {
        return Err(Error::CacheVersion {
            found: version,
            expected: CACHE_VERSION,
        });
    }
    let file: CacheFile = serde_json::from_value(doc).map_err(|e| Error::CacheCorrupt(e.to_string()))?;
    if file.rank == 0 || file.level == 0 {
        return Err(Error::CacheCorrupt("rank and level must be positive".into()));
    }
    Ok(Some(file))
}
