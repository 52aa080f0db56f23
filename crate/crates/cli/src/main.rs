mod selfcheck;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use verlinde::weights::{format_points, parse_points};
use verlinde::{
    verlinde_checked_with, AnalyticConfig, AnalyticEngine, EngineRegistry, EngineSelector, Error, Evaluator,
    FusionEngine, Partition, ProblemInstance, RecursiveEngine, Tolerances,
};

const CACHE_ENV: &str = "VERLINDE_CACHE";
const DEFAULT_CACHE: &str = "verlinde-cache.json";

#[derive(Parser, Debug)]
#[command(name = "verlinde", version, about = "Exact Verlinde numbers for parabolic sl(r) data")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, value_enum, default_value_t = Format::Plain, global = true)]
    format: Format,

    /// Largest accepted distance between a raw sum and its integer.
    #[arg(long, default_value_t = Tolerances::default().rounding, global = true)]
    tolerance: f64,

    /// Largest accepted residual for the character-sum identities.
    #[arg(long, default_value_t = Tolerances::default().identity, global = true)]
    identity_tolerance: f64,

    /// Fusion cache file; overrides $VERLINDE_CACHE.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute one Verlinde number.
    Compute(ComputeArgs),
    /// Compute one fusion coefficient.
    Fusion(FusionArgs),
    /// Tabulate over ranges of genus, level and degree as CSV.
    Table(TableArgs),
    /// Run the verification suites.
    Selfcheck(selfcheck::SelfcheckArgs),
    /// Manage the fusion cache file.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Args, Debug)]
struct ComputeArgs {
    #[arg(long)]
    genus: u32,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    level: u32,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    degree: i64,
    /// Points as "3,1,0;2,1,0"; a point may also be written "n=1,2;a=0,3".
    #[arg(long, default_value = "")]
    weights: String,
    #[arg(long, default_value = "analytic")]
    engine: String,
}

#[derive(Args, Debug)]
struct FusionArgs {
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    level: u32,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long)]
    c: String,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long)]
    rank: usize,
    /// Inclusive range "a..b" or a single value.
    #[arg(long, value_parser = parse_range)]
    genus: (i64, i64),
    #[arg(long, value_parser = parse_range)]
    level: (i64, i64),
    #[arg(long, value_parser = parse_range, default_value = "0", allow_hyphen_values = true)]
    degree: (i64, i64),
    #[arg(long, default_value = "")]
    weights: String,
    #[arg(long, default_value = "analytic")]
    engine: String,
}

#[derive(Subcommand, Debug)]
enum CacheAction {
    /// Compute every fusion coefficient at (rank, level) and write them.
    Export {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        level: u32,
    },
    /// Validate a cache file and report its size.
    Import,
    /// Delete the cache file.
    Clear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Json,
    Csv,
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let bad = || format!("`{s}` is not an integer or a range a..b");
    match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        }
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            Ok((v, v))
        }
    }
}

/// Failures that map to exit codes.
enum Failure {
    Validation(String),
    Mismatch(String),
    Precision(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::EngineMismatch { ref trace, .. } => {
                let steps = trace.as_ref().map_or(0, |t| t.steps.len());
                Failure::Mismatch(format!("{e} (recursive trace has {steps} steps)"))
            }
            Error::PrecisionExceeded { .. } => Failure::Precision(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

struct Context {
    config: AnalyticConfig,
    evaluator: Arc<Evaluator>,
    registry: EngineRegistry,
    cache: PathBuf,
}

impl Context {
    fn new(cli: &Cli) -> Result<Self, Failure> {
        if !(cli.tolerance > 0.0) || !(cli.identity_tolerance > 0.0) {
            return Err(Failure::Validation("tolerances must be positive".into()));
        }
        let config = AnalyticConfig {
            tolerances: Tolerances {
                identity: cli.identity_tolerance,
                rounding: cli.tolerance,
            },
            ..AnalyticConfig::default()
        };
        let evaluator = Arc::new(Evaluator::new());
        let mut registry = EngineRegistry::new();
        registry.register(Arc::new(AnalyticEngine::new(config)));
        registry.register(Arc::new(RecursiveEngine::new(evaluator.clone()).traced()));
        let cache = cli
            .cache
            .clone()
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE));
        Ok(Context {
            config,
            evaluator,
            registry,
            cache,
        })
    }

    /// Loads the cache into the fusion engine for `(r, k)` when the file
    /// exists and was written for those parameters.
    fn warm(&self, rank: usize, level: u32) -> Result<Arc<FusionEngine>, Failure> {
        let engine = self.evaluator.fusion_engine(rank, level);
        if self.cache.exists() {
            match engine.load(&self.cache) {
                Ok(_) | Err(Error::CacheParameters { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(engine)
    }
}

fn selector(name: &str) -> Result<EngineSelector, Failure> {
    name.parse().map_err(|e: Error| Failure::Validation(e.to_string()))
}

fn parse_partition(text: &str, level: u32) -> Result<Partition, Failure> {
    let mut pts = parse_points(text, level)?;
    if pts.len() != 1 {
        return Err(Failure::Validation(format!("expected one weight, got `{text}`")));
    }
    Ok(pts.remove(0))
}

fn run_compute(cli: &Cli, ctx: &Context, args: &ComputeArgs, out: &mut impl Write) -> Result<(), Failure> {
    let points = parse_points(&args.weights, args.level)?;
    let inst = ProblemInstance::new(args.genus, args.rank, args.degree, args.level, points)?;
    let sel = selector(&args.engine)?;
    ctx.warm(inst.rank, inst.level)?;
    let start = Instant::now();
    let eval = verlinde_checked_with(&ctx.registry, &inst, &sel)?;
    let millis = start.elapsed().as_millis() as u64;
    match cli.format {
        Format::Plain => writeln!(out, "{}", eval.value)?,
        Format::Json => {
            let doc = json!({
                "genus": inst.genus,
                "rank": inst.rank,
                "degree": inst.degree,
                "level": inst.level,
                "weights": format_points(&inst.points),
                "value": eval.value.to_string(),
                "engine": eval.engine,
                "residual": eval.residual,
                "millis": millis,
            });
            writeln!(out, "{doc}")?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            write_csv(&mut w, &["genus", "rank", "degree", "level", "weights", "value", "engine"])?;
            write_csv(
                &mut w,
                &[
                    &inst.genus.to_string(),
                    &inst.rank.to_string(),
                    &inst.degree.to_string(),
                    &inst.level.to_string(),
                    &format_points(&inst.points),
                    &eval.value.to_string(),
                    &eval.engine,
                ],
            )?;
            out.write_all(&finish_csv(w)?)?;
        }
    }
    Ok(())
}

fn run_fusion(cli: &Cli, ctx: &Context, args: &FusionArgs, out: &mut impl Write) -> Result<(), Failure> {
    let (r, k) = (args.rank, args.level);
    if r == 0 || k == 0 {
        return Err(Failure::Validation("rank and level must be positive".into()));
    }
    let a = parse_partition(&args.a, k)?;
    let b = parse_partition(&args.b, k)?;
    let c = parse_partition(&args.c, k)?;
    let engine = ctx.warm(r, k)?;
    let value = engine.fusion_coeff(&a, &b, &c)?;
    match cli.format {
        Format::Plain => writeln!(out, "{value}")?,
        Format::Json => {
            let doc = json!({
                "rank": r,
                "level": k,
                "a": a.normalize().to_string(),
                "b": b.normalize().to_string(),
                "c": c.normalize().to_string(),
                "value": value.to_string(),
            });
            writeln!(out, "{doc}")?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            write_csv(&mut w, &["rank", "level", "a", "b", "c", "value"])?;
            write_csv(
                &mut w,
                &[
                    &r.to_string(),
                    &k.to_string(),
                    &a.normalize().to_string(),
                    &b.normalize().to_string(),
                    &c.normalize().to_string(),
                    &value.to_string(),
                ],
            )?;
            out.write_all(&finish_csv(w)?)?;
        }
    }
    Ok(())
}

fn run_table(cli: &Cli, ctx: &Context, args: &TableArgs, out: &mut impl Write) -> Result<(), Failure> {
    let sel = selector(&args.engine)?;
    let span = |(a, b): (i64, i64)| a..=b;
    let mut rows = Vec::new();
    for g in span(args.genus) {
        for k in span(args.level) {
            for d in span(args.degree) {
                if g < 0 || k <= 0 {
                    return Err(Failure::Validation(format!("genus {g} or level {k} out of range")));
                }
                let (g, k) = (g as u32, k as u32);
                let points = parse_points(&args.weights, k)?;
                let inst = ProblemInstance::new(g, args.rank, d, k, points)?;
                ctx.warm(inst.rank, k)?;
                let value = verlinde_checked_with(&ctx.registry, &inst, &sel)?.value;
                rows.push((inst, value));
            }
        }
    }
    if cli.format == Format::Json {
        let doc: Vec<_> = rows
            .iter()
            .map(|(i, v)| {
                json!({
                    "genus": i.genus,
                    "rank": i.rank,
                    "degree": i.degree,
                    "level": i.level,
                    "weights": format_points(&i.points),
                    "value": v.to_string(),
                })
            })
            .collect();
        writeln!(out, "{}", serde_json::Value::Array(doc))?;
        return Ok(());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    write_csv(&mut w, &["genus", "rank", "degree", "level", "weights", "value"])?;
    for (i, v) in &rows {
        write_csv(
            &mut w,
            &[
                &i.genus.to_string(),
                &i.rank.to_string(),
                &i.degree.to_string(),
                &i.level.to_string(),
                &format_points(&i.points),
                &v.to_string(),
            ],
        )?;
    }
    out.write_all(&finish_csv(w)?)?;
    Ok(())
}

fn run_cache(ctx: &Context, action: &CacheAction, out: &mut impl Write) -> Result<(), Failure> {
    let path: &Path = &ctx.cache;
    match action {
        CacheAction::Export { rank, level } => {
            if *rank == 0 || *level == 0 {
                return Err(Failure::Validation("rank and level must be positive".into()));
            }
            let engine = FusionEngine::new(*rank, *level);
            engine.fill()?;
            let n = engine.store(path)?;
            writeln!(out, "wrote {n} entries for rank {rank} level {level} to {}", path.display())?;
        }
        CacheAction::Import => match FusionEngine::from_file(path)? {
            Some((engine, n)) => writeln!(
                out,
                "read {n} entries for rank {} level {} from {}",
                engine.rank(),
                engine.level(),
                path.display()
            )?,
            None => writeln!(out, "read 0 entries from {}", path.display())?,
        },
        CacheAction::Clear => {
            if path.exists() {
                std::fs::remove_file(path)?;
                writeln!(out, "removed {}", path.display())?;
            } else {
                writeln!(out, "no cache at {}", path.display())?;
            }
        }
    }
    Ok(())
}

fn write_csv(w: &mut csv::Writer<Vec<u8>>, row: &[&str]) -> Result<(), Failure> {
    w.write_record(row).map_err(|e| Failure::Validation(e.to_string()))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, Failure> {
    w.into_inner().map_err(|e| Failure::Validation(e.to_string()))
}

fn run(cli: &Cli, out: &mut impl Write) -> Result<(), Failure> {
    let ctx = Context::new(cli)?;
    match &cli.command {
        Command::Compute(args) => run_compute(cli, &ctx, args, out),
        Command::Fusion(args) => run_fusion(cli, &ctx, args, out),
        Command::Table(args) => run_table(cli, &ctx, args, out),
        Command::Selfcheck(args) => selfcheck::run(&ctx.config, args, out),
        Command::Cache { action } => run_cache(&ctx, action, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = run(&cli, &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Mismatch(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Precision(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}
