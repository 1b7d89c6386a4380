use thiserror::Error;

/// Precondition failures shared by the statistical models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("{0}")]
    Domain(String),
}

impl ModelError {
    pub(crate) fn invalid(name: &'static str, value: impl Into<f64>, reason: &'static str) -> Self {
        ModelError::InvalidParameter {
            name,
            value: value.into(),
            reason,
        }
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ModelError::invalid(name, value, "must lie in [0, 1]"))
    }
}
