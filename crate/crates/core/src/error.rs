use thiserror::Error;

/// Membership conditions for the admissible set of boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    /// The trace is injective with nonvanishing derivative.
    Injectivity,
    /// The relative velocity coefficient `A` does not vanish.
    VelocityNonvanishing,
    /// The boundary is a polar graph, `Re(w phi'/phi) > 0`.
    PolarGraph,
    /// The two patches are separated.
    Separation,
    /// The patch scale is positive.
    PositiveScale,
}

impl std::fmt::Display for Predicate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Predicate::Injectivity => "injectivity",
            Predicate::VelocityNonvanishing => "velocity_nonvanishing",
            Predicate::PolarGraph => "polar_graph",
            Predicate::Separation => "separation",
            Predicate::PositiveScale => "positive_scale",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid of {m} nodes cannot resolve {n} modes (need an even count >= {min})")]
    Aliasing { m: usize, n: usize, min: usize },

    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),

    #[error("grid data has {energy:.3e} energy outside the allowed modes")]
    DisallowedModes { energy: f64 },

    #[error("boundary nearly self-intersects (min chord {0:.3e})")]
    NearSelfIntersection(f64),

    #[error("patches touching (separation {0:.3e})")]
    PatchesTouching(f64),

    #[error("degenerate speed normalization (denominator {0:.3e})")]
    DegenerateNormalization(f64),

    #[error("loss of x-axis symmetry ({0:.3e})")]
    SymmetryViolation(f64),

    #[error("the A-formulation is singular at eps = 0")]
    SingularFormulation,

    #[error("boundary left the admissible set: {predicate} (margin {value:.3e})")]
    NotAdmissible { predicate: Predicate, value: f64 },

    #[error("newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("line search failed at iteration {iteration} (residual {residual:.3e})")]
    LineSearchFailed { iteration: usize, residual: f64 },

    #[error("jacobian is singular to working precision")]
    SingularJacobian,

    #[error("argument jump of {0:.3} rad between adjacent nodes; grid too coarse")]
    UnwrapJump(f64),

    #[error("function vanishes on the grid (min modulus {0:.3e})")]
    VanishingFunction(f64),

    #[error("winding number {0} is not zero")]
    NonzeroWinding(i64),

    #[error("branch points coincide")]
    CoincidentPoints,

    #[error("local curve failed at index {index} (eps = {eps}): {source}")]
    LocalCurve {
        index: usize,
        eps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("query point {0} too close to a patch boundary")]
    QueryTooClose(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
