use thiserror::Error;

/// Rejected model, strategy or grid parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Invalid {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("strategy `{strategy}` requires parameter `{name}`")]
    Missing {
        strategy: &'static str,
        name: &'static str,
    },
    #[error("strategy `{strategy}` does not accept parameter `{name}`")]
    Unexpected { strategy: &'static str, name: String },
    #[error("series of length {len} is shorter than the required {required}")]
    TooShort { len: usize, required: usize },
    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ParamError::Invalid {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ParamError::Invalid {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ParamError::Invalid {
            name,
            value,
            reason: "must be finite",
        })
    }
}
