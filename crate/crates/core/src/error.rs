use num_bigint::BigInt;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("entry {entry} exceeds level {level}")]
    EntryExceedsLevel { entry: u32, level: u32 },

    #[error("invalid parabolic point: {0}")]
    InvalidParabolic(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("precision exceeded: residual {residual:e} (error bound {bound:e}) above tolerance {tolerance:e} in {precision} mode")]
    PrecisionExceeded {
        residual: f64,
        bound: f64,
        tolerance: f64,
        precision: &'static str,
    },

    #[error("engine mismatch: {left_engine}={left} but {right_engine}={right}")]
    EngineMismatch {
        left_engine: String,
        left: BigInt,
        right_engine: String,
        right: BigInt,
        trace: Option<Box<crate::evaluator::ReductionTrace>>,
    },

    #[error("recursion depth {0} exceeded")]
    RecursionLimit(usize),

    #[error("unknown engine `{0}`")]
    UnknownEngine(String),

    #[error("corrupt cache file: {0}")]
    CacheCorrupt(String),

    #[error("cache version mismatch: found {found}, expected {expected}")]
    CacheVersion { found: u64, expected: u64 },

    #[error("cache is for rank {found_rank} level {found_level}, not rank {rank} level {level}")]
    CacheParameters {
        found_rank: usize,
        found_level: u32,
        rank: usize,
        level: u32,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
