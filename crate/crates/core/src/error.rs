use std::fmt;

use thiserror::Error;

/// Geometric regimes of the slope bound under which a construction is
/// guaranteed to be unique and unblocked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// The sphere/ground curve has no double point (slope below 30°).
    GammaSimple,
    /// Chord march along the curve cannot block and stays monotone (slope at most 14.47°).
    UnblockedMarch,
    /// No three mutually orthogonal nearly-horizontal chords (slope below 35.264°).
    OrthogonalTriple,
    /// A vertical half circle around a foot meets the ground once (slope below 45°).
    HalfCircle,
    /// Latitudes on the curve stay below twice the slope bound.
    LatitudeBound,
    /// Sampled invariants of a motion (rigidity, contact, continuity).
    MotionInvariant,
}

impl Condition {
    pub fn threshold_deg(self) -> Option<f64> {
        use crate::geometry::Thresholds as T;
        let t = T::get();
        match self {
            Condition::GammaSimple => Some(t.theta_gamma_simple.to_degrees()),
            Condition::UnblockedMarch => Some(t.theta_motion_a.to_degrees()),
            Condition::OrthogonalTriple => Some(t.theta_motion_b.to_degrees()),
            Condition::HalfCircle => Some(t.theta_halfcircle.to_degrees()),
            Condition::LatitudeBound | Condition::MotionInvariant => None,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Condition::GammaSimple => "simple sphere-ground curve",
            Condition::UnblockedMarch => "unblocked monotone chord march",
            Condition::OrthogonalTriple => "orthogonal-triple inclination",
            Condition::HalfCircle => "half-circle uniqueness",
            Condition::LatitudeBound => "latitude bound",
            Condition::MotionInvariant => "motion invariant",
        };
        match self.threshold_deg() {
            Some(t) => write!(f, "{name} (slope limit {t:.4}°)"),
            None => f.write_str(name),
        }
    }
}

#[derive(Debug, Error)]
pub enum WobbleError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("degenerate configuration: tetrahedron volume {volume:e} below threshold {threshold:e}")]
    Degenerate { volume: f64, threshold: f64 },
    #[error("condition violated: {condition}: {detail}")]
    ConditionViolation { condition: Condition, detail: String },
    #[error("geometry violation: {0}")]
    GeometryViolation(String),
    #[error("motion blocked: {0}")]
    BlockedMotion(String),
    #[error("numerical failure: {detail} (last residual {residual:e})")]
    NumericalFailure { detail: String, residual: f64 },
    #[error("at motion sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<WobbleError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WobbleError {
    pub fn condition(condition: Condition, detail: impl Into<String>) -> Self {
        WobbleError::ConditionViolation {
            condition,
            detail: detail.into(),
        }
    }

    pub fn at_sample(self, index: usize) -> Self {
        match self {
            e @ WobbleError::AtSample { .. } => e,
            e => WobbleError::AtSample {
                index,
                source: Box::new(e),
            },
        }
    }

    /// The error with any sample-index wrapping removed.
    pub fn root_cause(&self) -> &WobbleError {
        match self {
            WobbleError::AtSample { source, .. } => source.root_cause(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, WobbleError>;
