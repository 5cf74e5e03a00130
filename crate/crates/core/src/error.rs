use thiserror::Error;

/// Lattice location `(i, j, k)` with `i` along y1, `j` along y2, `k` along y3.
pub type Location = (usize, usize, usize);

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {what} at lattice point {at:?}")]
    NonFinite { what: &'static str, at: Location },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported Sobolev order s = {order} for {domain} norm")]
    UnsupportedOrder { order: f64, domain: &'static str },

    #[error("smoothing length must be positive, got kappa = {0}")]
    InvalidKappa(f64),

    #[error(
        "degenerate flow map: det[d eta] = {det:.3e} <= floor {floor:.1e} at lattice point {at:?}"
    )]
    DegenerateMap { det: f64, floor: f64, at: Location },

    #[error(
        "CFL violation: dt = {dt:.4e} exceeds bound {bound:.4e} \
         (cfl_safety {safety} * h3 {h3:.4e} * min sqrt(rho0 r / J) {speed_factor:.4e})"
    )]
    Cfl { dt: f64, bound: f64, safety: f64, h3: f64, speed_factor: f64 },

    #[error(
        "implicit diffusion solve did not converge: {iterations} iterations, \
         relative residual {residual:.3e}"
    )]
    DiffusionSolve { iterations: usize, residual: f64 },

    #[error(
        "non-contraction: Picard differences increased for 3 consecutive iterates \
         (last iterate {iterate}, d = {last:.3e}); reduce T"
    )]
    NonContraction { iterate: usize, last: f64 },

    #[error("Picard iterate {iterate}: {source}")]
    PicardStep { iterate: usize, source: Box<Error> },

    #[error("kappa-sweep member kappa = {kappa}: {source}")]
    SweepMember { kappa: f64, source: Box<Error> },

    #[error("initial data rejected: ({condition}) violated: {detail}")]
    InitialData { condition: &'static str, detail: String },

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error (line {line}): {message}")]
    Config { line: usize, message: String },

    #[error("checkpoint refused: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
