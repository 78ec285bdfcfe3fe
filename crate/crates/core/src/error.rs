use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Im tau = {im} is below the series floor {floor}")]
    TauBelowFloor { im: f64, floor: f64 },

    #[error("q-series did not converge within {terms} terms")]
    SeriesNonconvergence { terms: usize },

    #[error("argument is a lattice point (pole of the Weierstrass functions)")]
    Pole,

    #[error("(r, s) = ({r}, {s}) lies in (1/2)Z^2")]
    InvalidPoint { r: String, s: String },

    #[error("r + s*tau is a 2-torsion point of the curve")]
    SingularConfiguration,

    #[error("numerical breakdown at level {level}: {detail}")]
    NumericalBreakdown { level: usize, detail: String },

    #[error("level {requested} exceeds the cap {cap} for this precision; switch to the extended backend")]
    LevelCap { requested: usize, cap: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Okamoto transformation {0} hits a vanishing denominator")]
    SingularTransformation(&'static str),

    #[error("sample at tau = {tau} is too close to a pole of lambda; pick another tau")]
    PoleProximity { tau: String },

    #[error("order fit inconclusive: residual {residual:.3e}, rounding distance {distance:.3}")]
    InconclusiveOrder { residual: f64, distance: f64 },

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("contour passes too close to a zero after {attempts} nudges")]
    BoundaryTooClose { attempts: usize },

    #[error("winding number {value:.3} is not close to an integer")]
    NonIntegerWinding { value: f64 },

    #[error("Newton refinement failed: {0}")]
    NewtonFailure(String),

    #[error("suspected multiple zero at tau = {tau}: |f'| = {derivative:.3e} vs scale {scale:.3e}")]
    SuspectedMultipleZero { tau: String, derivative: f64, scale: f64 },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("no zero of the designated factor near tau0 = {tau}")]
    NoZeroNearby { tau: String },
}
