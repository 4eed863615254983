use std::path::PathBuf;

use crate::choquard::GroundState;
use crate::report::Witness;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dual point of the center is undefined")]
    DualOfCenter,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("half-space normal has norm {norm}, expected 1 within 1e-9")]
    NotUnitNormal { norm: f64 },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("function values must be positive and finite (index {index}, value {value})")]
    Positivity { index: usize, value: f64 },

    #[error("function is constant within tolerance")]
    ConstantFunction,

    #[error("function is not separable: {0}")]
    NotSeparable(Box<Witness>),

    #[error("extremal set is not a cap: {0}")]
    CapFit(String),

    #[error("symmetry structure check failed: {what} residual {residual:.3e} exceeds {tolerance:.3e}")]
    Structure {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("shell axes {shell_a} and {shell_b} are not collinear ({angle_deg:.3} deg)")]
    AxisMismatch {
        shell_a: usize,
        shell_b: usize,
        angle_deg: f64,
    },

    #[error("profile samples increase at index {index} by {increase:.3e}")]
    Monotonicity { index: usize, increase: f64 },

    #[error("affine plane is tangent to or misses the unit sphere (distance {distance})")]
    TangentOrEmpty { distance: f64 },

    #[error("probe sphere of radius {radius} is constant; try another radius")]
    RadialProbe { radius: f64 },

    #[error("sample is not even: |f(x) - f(-x)| = {residual:.3e} at index {index}")]
    NotEven { index: usize, residual: f64 },

    #[error("not radially symmetric: relative spread {spread:.3e} at radius {radius}")]
    NotRadial { radius: f64, spread: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("grid is not paired under the half-space reflection: {0}")]
    UnpairedGrid(String),

    #[error("point lies outside the ball of radius {radius} (|x| = {norm})")]
    OutsideBall { radius: f64, norm: f64 },

    #[error("points must lie in the open half-space")]
    PointsNotInH,

    #[error("function is identically zero")]
    ZeroFunction,

    #[error("nonlocal term vanishes; Nehari scaling undefined")]
    DegenerateD,

    #[error("iterate collapsed to zero (norm {norm:.3e})")]
    CollapseToZero { norm: f64 },

    #[error("solver did not converge in {iterations} iterations (last relative change {last_change:.3e})")]
    NonConvergence {
        iterations: usize,
        last_change: f64,
        best: Box<GroundState>,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
