use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("potential violates a structural hypothesis: {0}")]
    Structure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent mobility: {0}")]
    InconsistentMobility(String),

    #[error("lattice vector {0:?} is not primitive and nonzero")]
    NonPrimitive(Vec<i64>),

    #[error("{what} = {value} outside [{lo}, {hi})")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("smoothing cap K = {k} reached with sup error {achieved:.3e} > {target:.3e}")]
    InsufficientSmoothness {
        k: usize,
        achieved: f64,
        target: f64,
    },

    #[error("linear solver degeneracy: {0}")]
    SolverDegeneracy(String),

    #[error("discretization too coarse: {0}")]
    Refinement(String),

    #[error("under-resolved interface: eps = {eps} < 3h = {min}")]
    UnderResolved { eps: f64, min: f64 },

    #[error("time step {dt:.3e} exceeds the stability limit {limit:.3e}")]
    Stability { dt: f64, limit: f64 },

    #[error("no sign change: the interface is empty")]
    EmptyInterface,

    #[error("ball extinct at t = {extinction:.6} (requested t = {t:.6})")]
    Extinction { t: f64, extinction: f64 },

    #[error("eps = {eps} too large: {clause} fails")]
    EpsTooLarge { eps: f64, clause: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the numerical state of a computation rather than by
    /// malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InsufficientSmoothness { .. }
                | Error::SolverDegeneracy(_)
                | Error::Refinement(_)
                | Error::Stability { .. }
                | Error::EmptyInterface
                | Error::Extinction { .. }
                | Error::EpsTooLarge { .. }
                | Error::InconsistentMobility(_)
        )
    }
}
