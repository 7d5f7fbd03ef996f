use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("nonphysical state: {0}")]
    NonPhysical(String),

    #[error("vacuum (rho = {rho:e}) in cell {cell} at t = {time}")]
    Vacuum { cell: usize, time: f64, rho: f64 },

    #[error("non-finite value in cell {cell} at t = {time}")]
    NotFinite { cell: usize, time: f64 },

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("no admissible shock: {0}")]
    NoShock(String),

    #[error("sonic or subsonic upstream state: u = {u}, c = {c}")]
    Sonic { u: f64, c: f64 },

    #[error("profile is not monotone near xi = {xi}")]
    NotMonotone { xi: f64 },

    #[error("profile did not reach its end states within L = {half_length} (residual {residual:e}); increase L")]
    IncreaseL { half_length: f64, residual: f64 },

    #[error("no heteroclinic connection found (last miss distance {miss:e})")]
    ShootingFailed { miss: f64 },

    #[error("relaxation parameter eps = {eps} too large: subcharacteristic condition fails at U = {u}")]
    EpsTooLarge { eps: f64, u: f64 },

    #[error("rest point is not hyperbolic (eigenvalue {eigenvalue:e})")]
    NonHyperbolic { eigenvalue: f64 },

    #[error("no consistent splitting at lambda = {re} + {im}i")]
    Splitting { re: f64, im: f64 },

    #[error("singular linear solve: {0}")]
    Singular(String),

    #[error("ODE integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("contour refinement cap exceeded near parameter {t}")]
    Refinement { t: f64 },

    #[error("Evans function vanishes on the contour at lambda = {re} + {im}i")]
    ZeroOnContour { re: f64, im: f64 },

    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
