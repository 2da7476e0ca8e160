use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integration failed at t = {t_last} ps: {reason}")]
    Integration { t_last: f64, reason: String },

    #[error("underdetermined problem: {points} points for {params} free parameters")]
    Underdetermined { points: usize, params: usize },

    #[error("no convergence after {iterations} iterations (best chi2 = {best_chi2})")]
    NonConvergence {
        iterations: usize,
        best_chi2: f64,
        best_params: Vec<f64>,
    },

    #[error("degenerate estimator: {0}")]
    DegenerateEstimator(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Integration { .. } | Error::NonConvergence { .. })
    }
}
