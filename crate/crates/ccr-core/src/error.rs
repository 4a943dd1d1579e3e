use thiserror::Error;

/// Errors produced while validating robot descriptions or running either solver.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or routing file could not be parsed.
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    /// An input violated a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// The 6x6 strain-rate system of the rod model lost rank.
    #[error("singular strain-rate system at s = {arclength:.6e} m (condition estimate {condition:.3e})")]
    SingularSystem { arclength: f64, condition: f64 },

    /// The shooting iteration ran out of Newton steps.
    #[error(
        "shooting did not converge after {iterations} iterations \
         (best residual {best_residual:.3e}); consider tension continuation"
    )]
    ShootingFailed { iterations: usize, best_residual: f64 },

    /// The finite-difference shooting Jacobian was singular.
    #[error("singular shooting Jacobian at residual {residual:.3e}; consider tension continuation")]
    SingularJacobian { residual: f64 },

    /// Tension continuation failed partway up the load ramp.
    #[error("continuation failed at ramp fraction {fraction:.3}: {source}")]
    ContinuationFailed {
        fraction: f64,
        #[source]
        source: Box<Error>,
    },

    /// The requested cable shortening is geometrically infeasible.
    #[error(
        "over-actuation in segment {segment}: deformed cable length {cable_length:.6e} m \
         is below the feasible bound {bound:.6e} m"
    )]
    OverActuation {
        segment: usize,
        cable_length: f64,
        bound: f64,
    },

    /// The virtual-point cross product vanished.
    #[error("degenerate virtual point: hole direction is parallel to the segment direction")]
    DegenerateVirtualPoint,

    /// A difference vector needed by the coupler objective had zero length.
    #[error("zero-length link vector in coupler objective")]
    ZeroLengthLink,

    /// The segment optimizer stopped short of its tolerances.
    #[error(
        "segment optimization did not converge: objective {objective:.6e}, \
         constraint violation {violation:.3e}, stationarity {stationarity:.3e}"
    )]
    SegmentFailed {
        objective: f64,
        violation: f64,
        stationarity: f64,
    },

    /// A segment failure, tagged with its position along the backbone.
    #[error("segment {segment}: {source}")]
    Segment {
        segment: usize,
        #[source]
        source: Box<Error>,
    },

    /// A named solver failed inside a model comparison.
    #[error("{solver} solver failed: {source}")]
    Solver {
        solver: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// Too many grid points failed during workspace sampling.
    #[error("workspace sampling failed for {failed} of {total} grid points")]
    WorkspaceFailed { failed: usize, total: usize },
}

impl Error {
    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    pub(crate) fn in_segment(self, segment: usize) -> Self {
        Error::Segment {
            segment,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
