//! Named evaluation strategies behind one trait, and the cross-checking
//! entry point used by the CLI.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::Serialize;

use crate::analytic::{verlinde_analytic_with, AnalyticConfig};
use crate::error::{Error, Result};
use crate::evaluator::{Evaluator, ReductionTrace};
use crate::weights::ProblemInstance;

#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub engine: String,
    pub value: BigInt,
    /// Rounding residual for floating-point engines; zero for exact ones.
    pub residual: f64,
    /// Number of summands or subproblems the engine touched.
    pub terms: usize,
    #[serde(skip)]
    pub trace: Option<ReductionTrace>,
}

pub trait Engine: Send + Sync {
    fn name(&self) -> &str;
    fn evaluate(&self, inst: &ProblemInstance) -> Result<Evaluation>;
}

#[derive(Debug, Clone, Default)]
pub struct AnalyticEngine {
    pub config: AnalyticConfig,
}

impl AnalyticEngine {
    pub fn new(config: AnalyticConfig) -> Self {
        AnalyticEngine { config }
    }
}

impl Engine for AnalyticEngine {
    fn name(&self) -> &str {
        "analytic"
    }

    fn evaluate(&self, inst: &ProblemInstance) -> Result<Evaluation> {
        let res = verlinde_analytic_with(inst, &self.config)?;
        Ok(Evaluation {
            engine: self.name().to_string(),
            value: res.value,
            residual: res.residual,
            terms: res.terms,
            trace: None,
        })
    }
}

pub struct RecursiveEngine {
    evaluator: Arc<Evaluator>,
    traced: bool,
}

impl RecursiveEngine {
    pub fn new(evaluator: Arc<Evaluator>) -> Self {
        RecursiveEngine {
            evaluator,
            traced: false,
        }
    }

    /// Records a reduction trace with every evaluation.
    pub fn traced(mut self) -> Self {
        self.traced = true;
        self
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }
}

impl Default for RecursiveEngine {
    fn default() -> Self {
        RecursiveEngine::new(Arc::new(Evaluator::new()))
    }
}

impl Engine for RecursiveEngine {
    fn name(&self) -> &str {
        "recursive"
    }

    fn evaluate(&self, inst: &ProblemInstance) -> Result<Evaluation> {
        let (value, trace) = if self.traced {
            let (v, t) = self.evaluator.evaluate_traced(inst)?;
            (v, Some(t))
        } else {
            (self.evaluator.evaluate(inst)?, None)
        };
        Ok(Evaluation {
            engine: self.name().to_string(),
            value,
            residual: 0.0,
            terms: trace.as_ref().map_or(0, ReductionTrace::total_subproblems),
            trace,
        })
    }
}

/// Engines by name.
#[derive(Default)]
pub struct EngineRegistry {
    engines: BTreeMap<String, Arc<dyn Engine>>,
}

impl EngineRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The analytic and recursive engines.
    pub fn with_defaults(config: AnalyticConfig) -> Self {
        let mut reg = EngineRegistry::new();
        reg.register(Arc::new(AnalyticEngine::new(config)));
        reg.register(Arc::new(RecursiveEngine::default().traced()));
        reg
    }

    pub fn register(&mut self, engine: Arc<dyn Engine>) {
        self.engines.insert(engine.name().to_string(), engine);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Engine>> {
        self.engines
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownEngine(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.engines.keys().map(String::as_str).collect()
    }
}

impl fmt::Debug for EngineRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.engines.keys()).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngineSelector {
    Analytic,
    Recursive,
    Both,
    Named(String),
}

impl FromStr for EngineSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "analytic" => EngineSelector::Analytic,
            "recursive" => EngineSelector::Recursive,
            "both" => EngineSelector::Both,
            "" => return Err(Error::UnknownEngine(String::new())),
            other => EngineSelector::Named(other.to_string()),
        })
    }
}

impl fmt::Display for EngineSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineSelector::Analytic => f.write_str("analytic"),
            EngineSelector::Recursive => f.write_str("recursive"),
            EngineSelector::Both => f.write_str("both"),
            EngineSelector::Named(n) => f.write_str(n),
        }
    }
}

/// Runs the selected engine(s). With [`EngineSelector::Both`] the two
/// values must agree exactly; the returned evaluation is the analytic one
/// with the recursive trace attached.
pub fn verlinde_checked_with(
    registry: &EngineRegistry,
    inst: &ProblemInstance,
    selector: &EngineSelector,
) -> Result<Evaluation> {
    match selector {
        EngineSelector::Analytic => registry.get("analytic")?.evaluate(inst),
        EngineSelector::Recursive => registry.get("recursive")?.evaluate(inst),
        EngineSelector::Named(name) => registry.get(name)?.evaluate(inst),
        EngineSelector::Both => {
            let a = registry.get("analytic")?.evaluate(inst)?;
            let b = registry.get("recursive")?.evaluate(inst)?;
            if a.value != b.value {
                return Err(Error::EngineMismatch {
                    left_engine: a.engine,
                    left: a.value,
                    right_engine: b.engine,
                    right: b.value,
                    trace: b.trace.map(Box::new),
                });
            }
            Ok(Evaluation {
                engine: "both".to_string(),
                value: a.value,
                residual: a.residual,
                terms: a.terms + b.terms,
                trace: b.trace,
            })
        }
    }
}

/// [`verlinde_checked_with`] on a default registry.
pub fn verlinde_checked(inst: &ProblemInstance, selector: &EngineSelector) -> Result<BigInt> {
    let registry = EngineRegistry::with_defaults(AnalyticConfig::default());
    Ok(verlinde_checked_with(&registry, inst, selector)?.value)
}
