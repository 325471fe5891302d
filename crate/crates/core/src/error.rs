use thiserror::Error;

/// Errors raised by the geometric and variational routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("surface needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },

    #[error("degenerate edge between nodes {index} and {next}")]
    DegenerateEdge { index: usize, next: usize },

    #[error("curve self-intersects between edges {first} and {second}")]
    SelfIntersection { first: usize, second: usize },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("pole handling failed at node {0}")]
    Pole(usize),

    #[error("graph amplitude too large at node {index}: |s f| max|A| = {value:.3e}")]
    AmplitudeTooLarge { index: usize, value: f64 },

    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("truncation tail bound {tail:.3e} exceeds tolerance {tol:.3e}")]
    Truncation { tail: f64, tol: f64 },

    #[error("surface is not a self-shrinker (max residual {max:.3e}, weighted L2 {l2:.3e})")]
    NotShrinker { max: f64, l2: f64 },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("no sign change of the closure defect in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("flow step rejected at t = {time}: {reason}")]
    StepRejected { time: f64, reason: String },

    #[error("{0}")]
    Flow(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
