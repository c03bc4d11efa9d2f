use thiserror::Error;

/// Errors raised across synthesis, evaluation and simulation.
///
/// The `Display` strings start with a stable snake_case code so scripts can
/// match on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dare_diverged: Riccati iteration did not converge after {0} iterations")]
    DareDiverged(usize),
    #[error("dare_unstabilizable: (A, B) is not stabilizable")]
    DareUnstabilizable,
    #[error("lqr_unstable: closed-loop spectral radius {0} >= 1")]
    LqrUnstable(f64),
    #[error("qp_cycling: active-set iteration cap of {0} exceeded")]
    QpCycling(usize),
    #[error("hull_degenerate: input points do not span a full-dimensional hull")]
    HullDegenerate,
    #[error("unbounded_polytope: the polytope is unbounded")]
    UnboundedPolytope,
    #[error("empty_polytope: the polytope is empty")]
    EmptyPolytope,
    #[error("mpi_not_converged: pre-set iteration exceeded {0} steps")]
    MpiNotConverged(usize),
    #[error("outside_flat_domain: v3 = {v3} < -g = {neg_g}")]
    OutsideFlatDomain { v3: f64, neg_g: f64 },
    #[error("tracking_box_empty: origin is not interior to the shrunken input set")]
    TrackingBoxEmpty,
    #[error("empty_feasible_set: no feasible seed parameter found")]
    EmptyFeasibleSet,
    #[error("region_budget_exceeded: more than {0} critical regions")]
    RegionBudgetExceeded(usize),
    #[error("synthesis_failed: axis {axis}: {source}")]
    Synthesis {
        axis: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("controller_corrupt: {0}")]
    ControllerCorrupt(String),
    #[error("controller_version: expected schema {expected}, found {found}")]
    ControllerVersion { expected: u32, found: u32 },
    #[error("infeasible_state: axis {axis} state ({p}, {v}) is outside every critical region")]
    InfeasibleState { axis: usize, p: f64, v: f64 },
    #[error("controller_mismatch: {0}")]
    ControllerMismatch(String),
    #[error("reference_inconsistent: {0}")]
    ReferenceInconsistent(String),
    #[error("dimension_mismatch: {0}")]
    Dimension(String),
    #[error("config_error: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
