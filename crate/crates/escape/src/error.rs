use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for the library.
///
/// Numerical routines return errors instead of NaN so that callers can tell a
/// physical boundary (pull-in, separatrix) from a plain bug.
#[derive(Debug, Error)]
pub enum Error {
    /// The electrostatic well has no stable equilibrium at this load.
    #[error("no stable equilibrium: load nu = {nu} is at or beyond pull-in nu_pi = {nu_pi}")]
    PullIn { nu: f64, nu_pi: f64 },

    /// The potential has no finite barrier, so "escape" is undefined.
    #[error("potential has no finite escape barrier for these coefficients")]
    NoBarrier,

    /// Requested an oscillation at an energy outside the trapped range.
    #[error("energy {e} outside the oscillatory range (0, {e_max})")]
    EnergyOutOfRange { e: f64, e_max: f64 },

    /// Orbit so close to the separatrix that the closed forms degrade.
    #[error("orbit too close to the separatrix (k = {k}); closed forms lose accuracy")]
    NearSeparatrix { k: f64 },

    #[error("singular {what} system (determinant {det})")]
    Singular { what: &'static str, det: f64 },

    #[error("{what} did not converge after {iters} iterations")]
    NoConvergence { what: &'static str, iters: usize },

    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            why: why.into(),
        }
    }
}
