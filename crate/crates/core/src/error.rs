use thiserror::Error;

/// Errors produced anywhere in the modelling pipeline.
#[derive(Debug, Error)]
pub enum FcmError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("triangle {triangle} references vertex {vertex} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        vertex: usize,
        vertex_count: usize,
    },

    #[error("triangle {triangle} is degenerate (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("edge ({a}, {b}) is shared by more than two triangles")]
    NonManifoldEdge { a: usize, b: usize },

    #[error("triangles sharing edge ({a}, {b}) have inconsistent winding")]
    InconsistentOrientation { a: usize, b: usize },

    #[error("dual graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("mesh combinatorics do not match the reference: {0}")]
    CombinatoricsMismatch(String),

    #[error("orientation violation at triangle {triangle}: deformation gradient has det {det:e}")]
    OrientationViolation { triangle: usize, det: f64 },

    #[error("ill-conditioned matrix{}: {message}", .triangle.map(|t| format!(" at triangle {t}")).unwrap_or_default())]
    IllConditioned {
        triangle: Option<usize>,
        message: String,
    },

    #[error("rotation angle {angle} is at the cut locus; logarithm is ambiguous")]
    CutLocus { angle: f64 },

    #[error("matrix is not symmetric positive-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("representation is bound to reference {found}, expected {expected}")]
    ReferenceMismatch { expected: String, found: String },

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("surface is closed; flattening requires an open (cut) mesh")]
    ClosedSurface,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl FcmError {
    /// Attaches a triangle index to kernel errors raised without one.
    pub fn at_triangle(self, index: usize) -> Self {
        match self {
            FcmError::OrientationViolation { det, .. } => FcmError::OrientationViolation {
                triangle: index,
                det,
            },
            FcmError::IllConditioned { message, .. } => FcmError::IllConditioned {
                triangle: Some(index),
                message,
            },
            other => other,
        }
    }

    /// Stable machine-readable category, used by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            FcmError::Io(_) => "io",
            FcmError::Parse { .. } | FcmError::Json(_) | FcmError::Csv(_) => "parse",
            FcmError::IndexOutOfRange { .. }
            | FcmError::DegenerateTriangle { .. }
            | FcmError::NonManifoldEdge { .. }
            | FcmError::InconsistentOrientation { .. }
            | FcmError::Disconnected { .. } => "mesh",
            FcmError::CombinatoricsMismatch(_) | FcmError::ReferenceMismatch { .. } => "mismatch",
            FcmError::OrientationViolation { .. } => "orientation",
            FcmError::IllConditioned { .. }
            | FcmError::NotPositiveDefinite { .. }
            | FcmError::Factorization(_) => "conditioning",
            FcmError::CutLocus { .. } => "cut-locus",
            FcmError::NonConvergence { .. } => "convergence",
            FcmError::ClosedSurface => "closed-surface",
            FcmError::InvalidArgument(_) => "argument",
        }
    }
}

pub type Result<T, E = FcmError> = std::result::Result<T, E>;
