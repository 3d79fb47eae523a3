use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("potential evaluated at singular center {index}")]
    EvaluationAtSingularity { index: usize },

    #[error("no virial radius found below {ceiling} at E = {energy}")]
    NoVirialRadius { energy: f64, ceiling: f64 },

    #[error("contour grid too coarse ({resolution} cells per axis)")]
    ResolutionTooCoarse { resolution: usize },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("energy drift {drift:e} exceeds tolerance {tol:e}")]
    EnergyDriftExceeded { drift: f64, tol: f64 },

    #[error("exponent {alpha} is not of the form 2n/(n+1)")]
    NotRegularizable { alpha: f64 },

    #[error("no turning point for l = {l} at E = {energy}")]
    NoPericentre { energy: f64, l: f64 },

    #[error("launch radius {radius} lies inside the interaction zone (R_vir = {r_vir})")]
    LaunchInsideInteractionZone { radius: f64, r_vir: f64 },

    #[error("refinement budget exceeded after {samples} samples")]
    RefinementBudgetExceeded { samples: usize },

    #[error("final-direction map is discontinuous near u = {u}")]
    DiscontinuityDetected { u: f64 },

    #[error("mesh too coarse: image edge of {angle} rad after refinement")]
    MeshTooCoarse { angle: f64 },

    #[error("more than {budget} preimages found")]
    RootBudgetExceeded { budget: usize },

    #[error("target is not a regular value after {retries} perturbations")]
    SingularJacobian { retries: usize },

    #[error("no bracket found for symbol {level} of the itinerary")]
    BracketNotFound { level: usize },

    #[error("bracket width {width:e} at symbol {level} is below floating-point resolution")]
    PrecisionExhausted { level: usize, width: f64 },

    #[error("trapped orbits present at E = {energy}")]
    TrappingDetected { energy: f64 },

    #[error("disks {0:?} violate the non-shadowing condition")]
    ShadowingViolation([usize; 3]),
}

impl Error {
    /// Errors caused by bad input rather than by the dynamics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::NotRegularizable { .. }
                | Error::LaunchInsideInteractionZone { .. }
                | Error::ShadowingViolation(_)
        )
    }
}
