//! Exact evaluation of `D_g(r, d, ω)` by degree normalization, genus
//! reduction and point splitting down to fusion coefficients, plus the
//! factorization checks that tie the two engines together.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use dashmap::DashMap;
use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::analytic::analytic_value;
use crate::error::{Error, Result};
use crate::fusion::FusionEngine;
use crate::weights::{
    enumerate_weights, hecke, nodal_point_data, omega_to_partition, partition_to_omega, Partition,
    ProblemInstance, WeightSet,
};

/// Moves the degree to zero. A nonzero residue `d mod r` is absorbed by a
/// Hecke transformation of the lexicographically largest point; with no
/// points a trivial one is added first.
pub fn reduce_degree(inst: &ProblemInstance) -> ProblemInstance {
    let r = inst.rank;
    let residue = inst.degree.rem_euclid(r as i64) as usize;
    let mut out = inst.clone();
    out.degree = 0;
    if residue == 0 {
        return out;
    }
    if out.points.is_empty() {
        out.points.push(Partition::vacuum(r));
    }
    let (idx, _) = out
        .points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .unwrap();
    // points are normalized and within the level, so this cannot fail
    out.points[idx] = hecke(&out.points[idx], r - residue, inst.level)
        .expect("normalized point within level")
        .normalize();
    out
}

/// One handle removed: a term for each `μ ∈ P_k`, carrying `μ` and `μ*` as
/// two new points.
pub fn reduce_genus_once(inst: &ProblemInstance) -> Result<Vec<ProblemInstance>> {
    if inst.genus == 0 {
        return Err(Error::Precondition("genus reduction needs g ≥ 1".into()));
    }
    enumerate_weights(inst.rank, inst.level, WeightSet::Strict)
        .into_iter()
        .map(|mu| {
            let mut points = inst.points.clone();
            points.push(mu.normalize());
            points.push(mu.dual_normalized(inst.level)?);
            ProblemInstance::new(inst.genus - 1, inst.rank, inst.degree, inst.level, points)
        })
        .collect()
}

/// Splits the points indexed by `i1` onto a genus-zero, degree-zero
/// component. Each pair is `(I1 ∪ {ν}, I2 ∪ {ν*})` for `ν ∈ W_k` in the
/// residue class making the first side divisible; genus and degree stay on
/// the second side.
pub fn split_points_once(
    inst: &ProblemInstance,
    i1: &[usize],
) -> Result<Vec<(ProblemInstance, ProblemInstance)>> {
    let n = inst.points.len();
    let mut chosen = vec![false; n];
    for &i in i1 {
        if i >= n || chosen[i] {
            return Err(Error::OutOfRange(format!("bad split index set {i1:?} for {n} points")));
        }
        chosen[i] = true;
    }
    if i1.is_empty() || i1.len() >= n {
        return Err(Error::Precondition(format!(
            "split needs a nonempty proper subset of the {n} points"
        )));
    }
    let (r, k) = (inst.rank, inst.level);
    let left: Vec<Partition> = (0..n).filter(|&i| chosen[i]).map(|i| inst.points[i].clone()).collect();
    let right: Vec<Partition> = (0..n).filter(|&i| !chosen[i]).map(|i| inst.points[i].clone()).collect();
    let boxes: u64 = left.iter().map(Partition::size).sum();
    let rho = ((r as u64 - boxes % r as u64) % r as u64) as usize;
    enumerate_weights(r, k, WeightSet::Residue(rho))
        .into_iter()
        .map(|nu| {
            let mut a = left.clone();
            a.push(nu.clone());
            let mut b = right.clone();
            b.push(nu.dual_normalized(k)?);
            Ok((
                ProblemInstance::new(0, r, 0, k, a)?,
                ProblemInstance::new(inst.genus, r, inst.degree, k, b)?,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Degree,
    Genus,
    Split,
    Base,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Degree => "degree",
            Rule::Genus => "genus",
            Rule::Split => "split",
            Rule::Base => "base",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub rule: Rule,
    pub params: String,
    pub instance: ProblemInstance,
    pub subproblems: usize,
    pub value: BigInt,
}

/// Reduction steps in post-order; the last step is the root.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub steps: Vec<TraceStep>,
}

impl ReductionTrace {
    pub fn total_subproblems(&self) -> usize {
        self.steps.iter().map(|s| s.subproblems).sum()
    }

    pub fn root_value(&self) -> Option<&BigInt> {
        self.steps.last().map(|s| &s.value)
    }

    /// Re-applies every recorded rule, checking each step's value against
    /// the values recorded for its subproblems. Returns the root value.
    pub fn replay(&self, fusion: &FusionEngine) -> Result<BigInt> {
        let mut known: HashMap<&ProblemInstance, &BigInt> = HashMap::new();
        let lookup = |known: &HashMap<&ProblemInstance, &BigInt>, i: &ProblemInstance| -> Result<BigInt> {
            known
                .get(&i.canonical())
                .map(|v| (*v).clone())
                .ok_or_else(|| Error::Precondition(format!("trace has no step for {i}")))
        };
        for step in &self.steps {
            let inst = &step.instance;
            let value = match step.rule {
                Rule::Base => base_value(inst, fusion)?,
                Rule::Degree => lookup(&known, &reduce_degree(inst))?,
                Rule::Genus => {
                    let mut total = BigInt::zero();
                    for sub in reduce_genus_once(inst)? {
                        total += lookup(&known, &sub)?;
                    }
                    total
                }
                Rule::Split => {
                    let mut total = BigInt::zero();
                    for (a, b) in split_points_once(inst, &[0, 1])? {
                        let left = lookup(&known, &a)?;
                        if !left.is_zero() {
                            total += left * lookup(&known, &b)?;
                        }
                    }
                    total
                }
            };
            if value != step.value {
                return Err(Error::Precondition(format!(
                    "replay of {} step on {inst} gave {value}, trace says {}",
                    step.rule, step.value
                )));
            }
            known.insert(inst, &step.value);
        }
        self.root_value()
            .cloned()
            .ok_or_else(|| Error::Precondition("empty trace".into()))
    }
}

/// Genus-zero, degree-zero instances with at most three points.
fn base_value(inst: &ProblemInstance, fusion: &FusionEngine) -> Result<BigInt> {
    let k = inst.level;
    let indicator = |b: bool| if b { BigInt::one() } else { BigInt::zero() };
    match inst.points.as_slice() {
        [] => Ok(BigInt::one()),
        [a] => Ok(indicator(a.is_trivial())),
        [a, b] => Ok(indicator(a.equivalent(&b.dual(k)?)?)),
        [a, b, c] => fusion.fusion_coeff(a, b, c),
        _ => Err(Error::Precondition(format!("{inst} is not a base case"))),
    }
}

/// Recursive engine with a memo of canonical instances and one fusion
/// engine per `(r, k)`.
#[derive(Debug, Default)]
pub struct Evaluator {
    memo: DashMap<ProblemInstance, BigInt>,
    fusion: DashMap<(usize, u32), Arc<FusionEngine>>,
}

impl Evaluator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Shared process-wide evaluator.
    pub fn global() -> &'static Evaluator {
        static GLOBAL: OnceLock<Evaluator> = OnceLock::new();
        GLOBAL.get_or_init(Evaluator::new)
    }

    pub fn fusion_engine(&self, rank: usize, level: u32) -> Arc<FusionEngine> {
        self.fusion
            .entry((rank, level))
            .or_insert_with(|| Arc::new(FusionEngine::new(rank, level)))
            .clone()
    }

    pub fn evaluate(&self, inst: &ProblemInstance) -> Result<BigInt> {
        self.eval(&inst.canonical(), None)
    }

    /// Evaluates without the instance memo so that every step is recorded.
    pub fn evaluate_traced(&self, inst: &ProblemInstance) -> Result<(BigInt, ReductionTrace)> {
        let mut trace = ReductionTrace::default();
        let mut seen = HashMap::new();
        let value = self.eval(&inst.canonical(), Some((&mut trace, &mut seen)))?;
        Ok((value, trace))
    }

    fn eval(
        &self,
        inst: &ProblemInstance,
        mut trace: Option<(&mut ReductionTrace, &mut HashMap<ProblemInstance, BigInt>)>,
    ) -> Result<BigInt> {
        match &trace {
            Some((_, seen)) => {
                if let Some(v) = seen.get(inst) {
                    return Ok(v.clone());
                }
            }
            None => {
                if let Some(v) = self.memo.get(inst) {
                    return Ok(v.clone());
                }
            }
        }
        let (r, k) = (inst.rank, inst.level);
        let (rule, params, subproblems, value) = if inst.degree != 0 {
            let sub = reduce_degree(inst).canonical();
            let v = self.eval(&sub, trace.as_mut().map(|(t, s)| (&mut **t, &mut **s)))?;
            (Rule::Degree, format!("d={}", inst.degree), 1, v)
        } else if inst.genus > 0 {
            let subs = reduce_genus_once(inst)?;
            let mut total = BigInt::zero();
            for sub in &subs {
                total += self.eval(&sub.canonical(), trace.as_mut().map(|(t, s)| (&mut **t, &mut **s)))?;
            }
            (Rule::Genus, format!("g={}", inst.genus), subs.len(), total)
        } else if inst.points.len() > 3 {
            let pairs = split_points_once(inst, &[0, 1])?;
            let mut total = BigInt::zero();
            for (a, b) in &pairs {
                let left = self.eval(&a.canonical(), trace.as_mut().map(|(t, s)| (&mut **t, &mut **s)))?;
                if left.is_zero() {
                    continue;
                }
                let right = self.eval(&b.canonical(), trace.as_mut().map(|(t, s)| (&mut **t, &mut **s)))?;
                total += left * right;
            }
            (Rule::Split, "I1={0,1}".to_string(), 2 * pairs.len(), total)
        } else {
            let fusion = self.fusion_engine(r, k);
            (Rule::Base, format!("n={}", inst.points.len()), 0, base_value(inst, &fusion)?)
        };
        match trace {
            Some((t, seen)) => {
                seen.insert(inst.clone(), value.clone());
                t.steps.push(TraceStep {
                    rule,
                    params,
                    instance: inst.clone(),
                    subproblems,
                    value: value.clone(),
                });
            }
            None => {
                self.memo.insert(inst.clone(), value.clone());
            }
        }
        Ok(value)
    }
}

/// `D_g(r, d, ω)` by the recursive engine, on the shared evaluator.
pub fn verlinde_recursive(inst: &ProblemInstance) -> Result<BigInt> {
    Evaluator::global().evaluate(inst)
}

/// Both sides of the degree-varying factorization for a reducible
/// degeneration into genera `g1 + g2` carrying points `I1` and its
/// complement, with theta level split in the ratio `c1 : c2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSplit {
    pub lhs: BigInt,
    pub rhs: BigInt,
    /// Node weights `μ` for which both degrees are integral.
    pub terms: usize,
}

pub fn degree_varying_split(
    inst: &ProblemInstance,
    g1: u32,
    g2: u32,
    i1: &[usize],
    c1: u32,
    c2: u32,
) -> Result<DegreeSplit> {
    if g1 + g2 != inst.genus {
        return Err(Error::Precondition(format!("{g1} + {g2} ≠ g = {}", inst.genus)));
    }
    if c1 == 0 || c2 == 0 {
        return Err(Error::Precondition("c1 and c2 must be positive".into()));
    }
    let n = inst.points.len();
    if i1.iter().any(|&i| i >= n) || (1..i1.len()).any(|j| i1[..j].contains(&i1[j])) {
        return Err(Error::OutOfRange(format!("bad index set {i1:?} for {n} points")));
    }
    let (r, k) = (inst.rank as i64, inst.level);
    let ell = inst.level_ell()?;
    let parts = [c1 as i64, c2 as i64].map(|c| ell * Ratio::from_integer(c) / Ratio::from_integer((c1 + c2) as i64));
    if parts.iter().any(|l| !l.is_integer()) {
        return Err(Error::Precondition(format!(
            "ℓ = {ell} does not split into integers in ratio {c1}:{c2}"
        )));
    }
    let side = |pick: bool| -> Vec<Partition> {
        (0..n)
            .filter(|i| i1.contains(i) == pick)
            .map(|i| inst.points[i].clone())
            .collect()
    };
    let (p1, p2) = (side(true), side(false));
    let flag_total = |pts: &[Partition]| -> Result<i64> {
        pts.iter()
            .map(|p| Ok(partition_to_omega(p, k)?.flag_sum()))
            .sum()
    };
    let n1 = (Ratio::from_integer(r) * parts[0] + Ratio::from_integer(flag_total(&p1)?)) / Ratio::from_integer(k as i64);

    let lhs = analytic_value(inst)?;
    let mut rhs = BigInt::zero();
    let mut terms = 0;
    for mu in enumerate_weights(inst.rank, k, WeightSet::Strict) {
        let d1 = n1 + Ratio::new(mu.size() as i64, k as i64) + Ratio::from_integer(r * (g1 as i64 - 1));
        if !d1.is_integer() {
            continue;
        }
        let d1 = d1.to_integer();
        let d2 = inst.degree - d1;
        let (x1, x2) = nodal_point_data(&mu, k)?;
        let mut a = p1.clone();
        a.push(omega_to_partition(&x1, k)?);
        let mut b = p2.clone();
        b.push(omega_to_partition(&x2, k)?);
        let left = analytic_value(&ProblemInstance::new(g1, inst.rank, d1, k, a)?)?;
        let right = analytic_value(&ProblemInstance::new(g2, inst.rank, d2, k, b)?)?;
        rhs += left * right;
        terms += 1;
    }
    Ok(DegreeSplit { lhs, rhs, terms })
}

/// True when the degree-varying factorization holds exactly.
pub fn check_degree_varying_split(
    inst: &ProblemInstance,
    g1: u32,
    g2: u32,
    i1: &[usize],
    c1: u32,
    c2: u32,
) -> Result<bool> {
    let s = degree_varying_split(inst, g1, g2, i1, c1, c2)?;
    Ok(s.lhs == s.rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(e: &[u32]) -> Partition {
        Partition::new(e.to_vec()).unwrap()
    }

    fn inst(g: u32, r: usize, d: i64, k: u32, pts: &[&[u32]]) -> ProblemInstance {
        ProblemInstance::new(g, r, d, k, pts.iter().map(|e| p(e)).collect()).unwrap()
    }

    fn int(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn reduce_degree_examples() {
        assert_eq!(reduce_degree(&inst(1, 2, 1, 1, &[&[1, 0]])), inst(1, 2, 0, 1, &[&[0, 0]]));
        let same = inst(2, 3, 0, 2, &[&[2, 1, 0]]);
        assert_eq!(reduce_degree(&same), same);
        assert_eq!(reduce_degree(&inst(0, 2, 1, 1, &[])), inst(0, 2, 0, 1, &[&[1, 0]]));
        assert_eq!(reduce_degree(&inst(0, 2, 4, 1, &[&[1, 0]])).degree, 0);
    }

    #[test]
    fn reduce_degree_preserves_value() {
        for r in 2..=3 {
            for k in 1..=3 {
                let ws = enumerate_weights(r, k, WeightSet::Normalized);
                for d in -(r as i64)..2 * r as i64 {
                    for w in &ws {
                        for g in 0..=1 {
                            let i = inst(g, r, d, k, &[w.entries()]);
                            let j = reduce_degree(&i);
                            assert_eq!(analytic_value(&i).unwrap(), analytic_value(&j).unwrap(), "{i}");
                        }
                    }
                    let i = inst(0, r, d, k, &[]);
                    assert_eq!(
                        analytic_value(&i).unwrap(),
                        analytic_value(&reduce_degree(&i)).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn reduce_genus_examples() {
        let subs = reduce_genus_once(&inst(1, 2, 0, 1, &[])).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(analytic_value(&subs[0]).unwrap(), int(1));

        let subs = reduce_genus_once(&inst(1, 2, 0, 2, &[])).unwrap();
        let vals: Vec<BigInt> = subs.iter().map(|s| analytic_value(s).unwrap()).collect();
        assert_eq!(vals, vec![int(1), int(1), int(1)]);

        let subs = reduce_genus_once(&inst(2, 1, 0, 3, &[])).unwrap();
        assert_eq!(subs.len(), 3);
        for s in &subs {
            assert_eq!(s.genus, 1);
            assert_eq!(analytic_value(s).unwrap(), int(3));
        }
        assert!(reduce_genus_once(&inst(0, 2, 0, 2, &[])).is_err());
    }

    #[test]
    fn split_examples() {
        let sum = |i: &ProblemInstance| -> BigInt {
            split_points_once(i, &[0, 1])
                .unwrap()
                .iter()
                .map(|(a, b)| analytic_value(a).unwrap() * analytic_value(b).unwrap())
                .sum()
        };
        let four = inst(0, 2, 0, 2, &[&[1, 0], &[1, 0], &[1, 0], &[1, 0]]);
        assert_eq!(split_points_once(&four, &[0, 1]).unwrap().len(), 2);
        assert_eq!(sum(&four), int(2));
        assert_eq!(analytic_value(&four).unwrap(), int(2));

        let vac = inst(0, 3, 0, 2, &[&[0, 0, 0], &[0, 0, 0], &[0, 0, 0], &[0, 0, 0]]);
        assert_eq!(sum(&vac), int(1));

        let k1 = inst(0, 2, 0, 1, &[&[1, 0], &[1, 0], &[1, 0], &[1, 0]]);
        assert_eq!(sum(&k1), int(1));
        assert_eq!(analytic_value(&k1).unwrap(), int(1));

        assert!(split_points_once(&four, &[]).is_err());
        assert!(split_points_once(&four, &[0, 0]).is_err());
        assert!(split_points_once(&four, &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn recursive_examples() {
        assert_eq!(verlinde_recursive(&inst(0, 2, 0, 1, &[])).unwrap(), int(1));
        assert_eq!(verlinde_recursive(&inst(2, 1, 0, 2, &[])).unwrap(), int(4));
        assert_eq!(verlinde_recursive(&inst(1, 2, 0, 2, &[])).unwrap(), int(3));
        assert_eq!(
            verlinde_recursive(&inst(0, 3, 0, 1, &[&[1, 0, 0], &[1, 0, 0], &[1, 0, 0]])).unwrap(),
            int(1)
        );
    }

    #[test]
    fn trace_replays() {
        let ev = Evaluator::new();
        for i in [
            inst(1, 2, 1, 2, &[&[1, 0]]),
            inst(0, 3, 0, 2, &[&[1, 0, 0], &[2, 1, 0], &[1, 1, 0], &[2, 0, 0]]),
            inst(2, 2, 0, 3, &[]),
        ] {
            let (v, trace) = ev.evaluate_traced(&i).unwrap();
            assert_eq!(v, ev.evaluate(&i).unwrap());
            assert_eq!(trace.root_value(), Some(&v));
            let fusion = ev.fusion_engine(i.rank, i.level);
            assert_eq!(trace.replay(&fusion).unwrap(), v);
            assert!(trace.total_subproblems() > 0);
        }
    }

    #[test]
    fn tampered_trace_fails_replay() {
        let ev = Evaluator::new();
        let i = inst(1, 2, 0, 2, &[&[1, 0], &[1, 0]]);
        let (_, mut trace) = ev.evaluate_traced(&i).unwrap();
        let last = trace.steps.len() - 1;
        trace.steps[last].value += 1;
        assert!(trace.replay(&ev.fusion_engine(2, 2)).is_err());
    }

    #[test]
    fn degree_split_examples() {
        let i = inst(1, 2, 0, 2, &[]);
        let s = degree_varying_split(&i, 0, 1, &[], 1, 1).unwrap();
        assert_eq!(s.lhs, int(3));
        assert_eq!(s.lhs, s.rhs);

        let i = inst(0, 2, 0, 4, &[&[2, 0], &[2, 0]]);
        assert_eq!(i.level_ell().unwrap(), Ratio::from_integer(2));
        assert!(check_degree_varying_split(&i, 0, 0, &[], 1, 1).unwrap());
        assert!(check_degree_varying_split(&i, 0, 0, &[0], 1, 1).unwrap());

        // ℓ = 1 cannot be halved
        let i = inst(0, 2, 0, 1, &[]);
        assert_eq!(i.level_ell().unwrap(), Ratio::from_integer(1));
        assert!(matches!(
            check_degree_varying_split(&i, 0, 0, &[], 1, 1),
            Err(Error::Precondition(_))
        ));
        assert!(check_degree_varying_split(&i, 1, 0, &[], 1, 1).is_err());
    }
}
