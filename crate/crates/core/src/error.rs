use thiserror::Error;

/// Failures of the geometric pipeline.
///
/// Most of these are per-point conditions: a grid run records them as
/// exclusions instead of aborting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("degenerate jet: {0}")]
    DegenerateJet(&'static str),
    #[error("rank deficient input to Gram-Schmidt (vector {index})")]
    RankDeficient { index: usize },
    #[error("map is not an immersion at ({x}, {y})")]
    NotImmersion { x: f64, y: f64 },
    #[error("osculating rank drops at ({x}, {y}): {what}")]
    NotRegular { x: f64, y: f64, what: &'static str },
    #[error("degenerate curvature ellipse of order {order}")]
    DegenerateEllipse { order: usize },
    #[error("pedal surface degenerate at ({x}, {y})")]
    PedalDegenerate { x: f64, y: f64 },
    #[error("point too close to the inversion center")]
    PoleProximity,
    #[error("isotropy violated: relative residual {residual:e}")]
    IsotropyViolation { residual: f64 },
    #[error("jet order {have} is insufficient, {need} required")]
    InsufficientOrder { have: usize, need: usize },
    #[error("invalid curve spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
