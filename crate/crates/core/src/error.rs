use thiserror::Error;

/// Errors raised across the geometry, potential, field and evolution layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-manifold surface: {0}")]
    NonManifold(String),

    #[error("inverted orientation: {0}")]
    InvertedOrientation(String),

    #[error("degenerate face {face}: area {area:e} below threshold {threshold:e}")]
    DegenerateFace { face: usize, area: f64, threshold: f64 },

    #[error("insufficient neighborhood at vertex {vertex}: {found} usable neighbors, {required} required")]
    InsufficientNeighborhood { vertex: usize, found: usize, required: usize },

    #[error("layer operator is ill-conditioned (estimated condition number {0:e})")]
    IllConditioned(f64),

    #[error("evaluation point {index} is {distance:e} from the boundary, local spacing {spacing:e}")]
    PointTooClose { index: usize, distance: f64, spacing: f64 },

    #[error("coincident points")]
    CoincidentPoints,

    #[error("point lies outside the ball of radius {radius}")]
    OutsideBall { radius: f64 },

    #[error("grid too coarse: {cells_across:.2} cells across the minimal feature (need at least 10)")]
    ResolutionTooCoarse { cells_across: f64 },

    #[error("linear solver did not converge: {iterations} iterations, relative residual {residual:e}")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("Taylor sign quantity degenerate at vertex {vertex}: |grad p| = {gradient:e}")]
    TaylorDegenerate { vertex: usize, gradient: f64 },

    #[error("records unusable for time integration: {0}")]
    UnsortedRecords(String),

    #[error("time step {dt} exceeds the CFL bound {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("mesh quality {aspect:.4} below floor {floor:.4}")]
    MeshQualityFailure { aspect: f64, floor: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("run directory {0} already exists (use --force to overwrite)")]
    OutputExists(String),

    #[error("run directory {0} not found")]
    MissingRunDir(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
