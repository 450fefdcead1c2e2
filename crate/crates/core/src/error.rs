use thiserror::Error;

/// Failures raised by the analytical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("transfer rate is zero; use the transfer-free classification")]
    TransferFree,
    #[error("coexistence denominator vanishes (dormancy and transfer balance exactly)")]
    DegenerateDenominator,
    #[error("trait {0} is unfit as a resident (birth rate does not exceed death rate)")]
    ResidentUnfit(u8),
    #[error("invasion fitness {value:e} of trait {trait_id} is critical")]
    Critical { trait_id: u8, value: f64 },
    #[error("invasion fitness {value:e} of trait {trait_id} is not positive")]
    NotSupercritical { trait_id: u8, value: f64 },
    #[error("parameters lie on a critical line")]
    Boundary,
    #[error("no resident can persist: both traits are unfit")]
    NoClassification,
    #[error("extinction probability iteration did not converge in {0} steps")]
    NoConvergence(usize),
    #[error("invalid state: {0}")]
    InvalidState(&'static str),
    #[error("ode integration failed: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
