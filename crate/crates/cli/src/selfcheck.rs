use std::collections::BTreeSet;
use std::io::Write;

use clap::Args;
use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use verlinde::evaluator::degree_varying_split;
use verlinde::scalar::DoubleDouble;
use verlinde::unity::{eval_points, identity_residual, Identity, UnityContext};
use verlinde::weights::{enumerate_weights, hecke, phi};
use verlinde::{
    reduce_genus_once, split_points_once, verlinde_analytic_with, AnalyticConfig, Error, Evaluator, Partition,
    ProblemInstance, WeightSet,
};

use crate::Failure;

#[derive(Args, Debug)]
pub struct SelfcheckArgs {
    #[arg(long, default_value_t = 3)]
    max_rank: usize,
    #[arg(long, default_value_t = 3)]
    max_level: u32,
    #[arg(long, default_value_t = 2)]
    max_genus: u32,
    /// Number of sampled instances for the cross-engine and identity suites.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

struct Suite {
    name: &'static str,
    checks: usize,
    worst: Option<f64>,
    failures: Vec<(ProblemInstance, String)>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite {
            name,
            checks: 0,
            worst: None,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, inst: &ProblemInstance, why: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push((inst.clone(), why()));
        }
    }

    fn report(&self, out: &mut impl Write) -> std::io::Result<bool> {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        let worst = self
            .worst
            .map(|w| format!(", max residual {w:.3e}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{:<14} {status}  {} checks, {} failures{worst}",
            self.name,
            self.checks,
            self.failures.len()
        )?;
        // smallest failing instance first
        if let Some((inst, why)) = self.failures.iter().min_by_key(|(i, _)| {
            (i.genus, i.points.len(), i.rank, i.level, i.total_boxes(), i.to_string())
        }) {
            writeln!(out, "  minimal failing instance: {inst}: {why}")?;
        }
        Ok(self.failures.is_empty())
    }
}

fn sample(args: &SelfcheckArgs, rng: &mut ChaCha8Rng) -> Vec<ProblemInstance> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let max_rank = args.max_rank.max(2);
    let mut attempts = 0;
    while out.len() < args.trials && attempts < 50 * args.trials.max(1) {
        attempts += 1;
        let r = rng.gen_range(2..=max_rank);
        let k = rng.gen_range(1..=args.max_level.max(1));
        let g = rng.gen_range(0..=args.max_genus);
        let d = rng.gen_range(0..r as i64);
        let ws = enumerate_weights(r, k, WeightSet::Normalized);
        let n = rng.gen_range(0..=3usize);
        let pts: Vec<Partition> = (0..n).map(|_| ws.choose(rng).unwrap().clone()).collect();
        let inst = ProblemInstance::new(g, r, d, k, pts).expect("sampled instance is valid");
        if seen.insert(inst.to_string()) {
            out.push(inst);
        }
    }
    out
}

fn residual_sweep(args: &SelfcheckArgs, tol: f64) -> Result<Suite, Error> {
    let mut suite = Suite::new("residuals");
    let mut worst: f64 = 0.0;
    for r in 2..=args.max_rank.max(2) {
        for k in 1..=args.max_level.max(1) {
            let fast = UnityContext::<f64>::new(r, k);
            let slow = UnityContext::<DoubleDouble>::new(r, k);
            let pts = eval_points(r, k);
            for a in &pts {
                let mut cases: Vec<(Identity, Option<&_>)> =
                    vec![(Identity::SumStrict, None), (Identity::SumNormalized, None)];
                cases.extend(pts.iter().filter(|b| *b != a).map(|b| (Identity::Orthogonality, Some(b))));
                for (kind, b) in cases {
                    let mut res = identity_residual(&fast, kind, a, b)?;
                    if res >= tol {
                        res = identity_residual(&slow, kind, a, b)?;
                    }
                    if res >= tol {
                        return Err(Error::PrecisionExceeded {
                            residual: res,
                            bound: res,
                            tolerance: tol,
                            precision: "double-double",
                        });
                    }
                    worst = worst.max(res);
                    suite.checks += 1;
                }
            }
        }
    }
    suite.worst = Some(worst);
    Ok(suite)
}

pub fn run(config: &AnalyticConfig, args: &SelfcheckArgs, out: &mut impl Write) -> Result<(), Failure> {
    if args.max_rank == 0 || args.max_level == 0 {
        return Err(Failure::Validation("max rank and max level must be positive".into()));
    }
    writeln!(
        out,
        "selfcheck seed={} max-rank={} max-level={} max-genus={} trials={}",
        args.seed, args.max_rank, args.max_level, args.max_genus, args.trials
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let analytic = |i: &ProblemInstance| -> Result<BigInt, Error> { Ok(verlinde_analytic_with(i, config)?.value) };
    let mut all_ok = true;

    let suite = match residual_sweep(args, config.tolerances.identity) {
        Ok(s) => s,
        Err(e) => {
            writeln!(out, "{:<14} PRECISION  {e}", "residuals")?;
            return Err(e.into());
        }
    };
    all_ok &= suite.report(out)?;

    let grid = sample(args, &mut rng);
    let evaluator = Evaluator::new();
    let mut values = Vec::with_capacity(grid.len());
    let mut cross = Suite::new("cross-engine");
    for inst in &grid {
        let a = match analytic(inst) {
            Ok(v) => v,
            Err(e @ Error::PrecisionExceeded { .. }) => {
                writeln!(out, "{:<14} PRECISION  {inst}: {e}", "cross-engine")?;
                return Err(e.into());
            }
            Err(e) => return Err(e.into()),
        };
        let b = evaluator.evaluate(inst)?;
        cross.record(a == b, inst, || format!("analytic {a}, recursive {b}"));
        values.push(a);
    }
    all_ok &= cross.report(out)?;

    let mut genus = Suite::new("genus");
    let mut split = Suite::new("split");
    let mut varying = Suite::new("degree-split");
    let mut hecke_suite = Suite::new("hecke");
    for (inst, lhs) in grid.iter().zip(&values) {
        if inst.genus > 0 {
            let mut rhs = BigInt::from(0);
            for sub in reduce_genus_once(inst)? {
                rhs += analytic(&sub)?;
            }
            genus.record(&rhs == lhs, inst, || format!("{lhs} vs {rhs}"));
        }
        let n = inst.points.len();
        if n >= 3 {
            for a in 0..n {
                for b in a + 1..n {
                    let mut rhs = BigInt::from(0);
                    for (x, y) in split_points_once(inst, &[a, b])? {
                        rhs += analytic(&x)? * analytic(&y)?;
                    }
                    split.record(&rhs == lhs, inst, || format!("I1={{{a},{b}}}: {lhs} vs {rhs}"));
                }
            }
        }
        if inst.divisible() {
            for g1 in 0..=inst.genus {
                for mask in 0..(1usize << n) {
                    let i1: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).collect();
                    for (c1, c2) in [(1, 1), (1, 2), (2, 1)] {
                        match degree_varying_split(inst, g1, inst.genus - g1, &i1, c1, c2) {
                            Ok(s) => varying.record(s.lhs == s.rhs, inst, || {
                                format!("g1={g1} I1={i1:?} c={c1}:{c2}: {} vs {}", s.lhs, s.rhs)
                            }),
                            Err(Error::Precondition(_)) => {}
                            Err(e) => return Err(e.into()),
                        }
                    }
                }
            }
        }
        if n > 0 {
            let z = rng.gen_range(0..n);
            let m = rng.gen_range(1..=inst.rank);
            let mut moved = inst.clone();
            moved.points[z] = hecke(&inst.points[z], m, inst.level)?.normalize();
            moved.degree += m as i64;
            let after = analytic(&moved)?;
            hecke_suite.record(&after == lhs, inst, || format!("z={z} m={m}: {lhs} vs {after}"));
        }
    }
    for s in [&genus, &split, &varying, &hecke_suite] {
        all_ok &= s.report(out)?;
    }

    let mut phi_suite = Suite::new("phi");
    for r in 2..=args.max_rank.max(2) {
        for k in 1..=args.max_level {
            for a in 0..=(r as i64 * k as i64) {
                let domain: Vec<Partition> = enumerate_weights(r, k, WeightSet::Strict)
                    .into_iter()
                    .filter(|mu| (a + mu.size() as i64) % k as i64 == 0)
                    .collect();
                let image = domain
                    .iter()
                    .map(|mu| phi(mu, a, r, k))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                let target: BTreeSet<Partition> =
                    enumerate_weights(r, k, WeightSet::Residue((-a).rem_euclid(r as i64) as usize))
                        .into_iter()
                        .collect();
                let label = ProblemInstance::new(0, r, 0, k, vec![]).expect("valid");
                phi_suite.record(image.len() == domain.len() && image == target, &label, || {
                    format!("A={a}: {} preimages, {} images, {} targets", domain.len(), image.len(), target.len())
                });
            }
        }
    }
    all_ok &= phi_suite.report(out)?;

    if all_ok {
        writeln!(out, "all suites passed")?;
        Ok(())
    } else {
        writeln!(out, "some suites failed")?;
        Err(Failure::Check)
    }
}
