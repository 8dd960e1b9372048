//! Crate-wide error type. Variant names follow the failure conditions of the
//! individual pipeline stages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("behind-camera: point has non-positive depth")]
    BehindCamera,
    #[error("no-intersection: ray is parallel to the plane")]
    NoIntersection,
    #[error("behind-origin: intersection lies at t <= 0 along the ray")]
    BehindOrigin,
    #[error("degenerate: lines coincide")]
    DegenerateLines,
    #[error("insufficient-structure: segments span fewer than two orientation clusters")]
    InsufficientStructure,
    #[error("degenerate-calibration: fewer than two finite vanishing points")]
    DegenerateCalibration,
    #[error("no-hypothesis: no feasible layout combination")]
    NoHypothesis,
    #[error("dimension-mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate-mesh: bounding box has a zero-extent axis")]
    DegenerateMesh,
    #[error("no-models: no models available for category `{0}`")]
    NoModels(String),
    #[error("image-too-small: need at least {min}x{min}, got {width}x{height}")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("unplaceable: a bottom-corner ray misses the ground plane in front of the camera")]
    Unplaceable,
    #[error("above-horizon: bottom pixel lies on or above the horizon line")]
    AboveHorizon,
    #[error("window-unassigned: bounding box overlaps no wall")]
    WindowUnassigned,
    #[error("infeasible-start: initial point violates the constraints")]
    InfeasibleStart,
    #[error("budget-too-small: need at least {need} evaluations, got {got}")]
    BudgetTooSmall { need: usize, got: usize },
    #[error("empty-mask")]
    EmptyMask,
    #[error("empty-grid: no effective voxels")]
    EmptyGrid,
    #[error("undefined-map: ground truth contains no objects")]
    UndefinedMap,
    #[error("camera-mismatch: {0}")]
    CameraMismatch(String),
    #[error("unknown-model: `{0}` is not in the model library")]
    UnknownModel(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("image: {0}")]
    Image(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by unreadable or malformed inputs, as opposed
    /// to failures inside a pipeline stage.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::Io(_) | Error::Image(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
