use thiserror::Error;

/// Errors raised by the geometry, identity, flow and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("metric is singular at the sampled point (det = {det:e})")]
    SingularMetric { det: f64 },

    #[error("gradient norm {norm:e} is below the floor {floor:e}")]
    DegenerateGradient { norm: f64, floor: f64 },

    #[error("finite-difference stencil of step {h:e} leaves the chart")]
    DomainMargin { h: f64 },

    #[error("slice is not spacelike: {detail}")]
    NotSpacelike { detail: String },

    #[error("sampled radius {r} is at or inside the horizon 2m = {two_m}")]
    HorizonContact { r: f64, two_m: f64 },

    #[error("{what} is not positive (value {value:e})")]
    NonPositive { what: &'static str, value: f64 },

    #[error("both directions lie in the r-t plane; identity is not asserted there")]
    InadmissibleDirections,

    #[error("tortoise coordinate is undefined for m = 0")]
    MassZeroTortoise,

    #[error("sources violate the PDE by {mismatch:e} (limit {limit:e})")]
    SourceMismatch { mismatch: f64, limit: f64 },

    #[error("vector field has divergence {div:e}")]
    NotDivergenceFree { div: f64 },

    #[error("level-set normals are opposite (nu_u = -nu_v); eta is undefined")]
    ParallelOppositeNormals,

    #[error("surface quadrature not converged: relative change {change:e} exceeds {tol:e}")]
    QuadratureUnderResolved { change: f64, tol: f64 },

    #[error("radius {r} outside the data range [{lo}, {hi}]")]
    OutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("mean curvature {h:e} is not positive at r = {r}")]
    HorizonInterior { r: f64, h: f64 },

    #[error("flow is degenerate at r = {r}: {detail}")]
    FlowDegenerate { r: f64, detail: String },

    #[error("no horizon found in the data")]
    NoHorizon,

    #[error("tridiagonal system is singular at row {row}")]
    SingularSystem { row: usize },

    #[error("seed is not positive at node {node} (value {value:e})")]
    NonPositiveSeed { node: usize, value: f64 },

    #[error("source evaluation produced a non-finite value at node {node}")]
    NaNSource { node: usize },

    #[error("no convergence on leg σ = {sigma}, ε = {eps:e} after {iterations} iterations (last step {last_step:e})")]
    NoConvergence {
        sigma: f64,
        eps: f64,
        iterations: usize,
        last_step: f64,
    },

    #[error("maximum-principle bound violated by {margin:e} on leg σ = {sigma}, ε = {eps:e}")]
    BoundsViolation { sigma: f64, eps: f64, margin: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
