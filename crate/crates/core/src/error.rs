use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("triangle {triangle} references node {index} but the mesh has {nodes} nodes")]
    IndexOutOfRange { triangle: usize, index: usize, nodes: usize },
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("triangle {triangle} is degenerate (zero area)")]
    Degenerate { triangle: usize },
    #[error("invalid mesh parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot read mesh: {0}")]
    Io(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("triangle {triangle} is degenerate (zero area)")]
    Degenerate { triangle: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("attractant must be positive, got v[{node}] = {value}")]
    NonPositiveV { node: usize, value: f64 },
    #[error("invalid scheme parameter: {0}")]
    InvalidParams(String),
}

/// Which admissibility bound a rejected candidate violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    UNonNegative,
    VPositive,
    VMax,
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Bound::UNonNegative => "u >= 0",
            Bound::VPositive => "v > 0",
            Bound::VMax => "v <= Vmax",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("step failure at t = {t}: bound {bound} violated at node {node} (value {value}) with dt = {dt}")]
    StepFailure { t: f64, dt: f64, node: usize, bound: Bound, value: f64 },
    #[error("invalid step control: {0}")]
    InvalidControl(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read configuration: {0}")]
    Io(String),
}
