use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("envelope fit failed: {0}")]
    FitFailure(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure_finite<T: num_traits::Float>(field: &'static str, value: T) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be finite"))
    }
}

pub(crate) fn ensure_non_negative<T: num_traits::Float>(field: &'static str, value: T) -> Result<()> {
    ensure_finite(field, value)?;
    if value < T::zero() {
        Err(Error::invalid(field, "must be non-negative"))
    } else {
        Ok(())
    }
}
