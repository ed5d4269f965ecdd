use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("{function}: argument out of domain ({reason})")]
    Domain {
        function: &'static str,
        reason: String,
    },

    #[error(
        "receiver at ({x}, {y}) m is outside the tagged attocell (|z_x|, |z_y| <= {half_width} m)"
    )]
    OutsideCell { x: f64, y: f64, half_width: f64 },

    #[error("empty reuse-factor range {min}..={max}")]
    EmptyRange { min: u32, max: u32 },

    #[error(
        "closed-form {moment} is non-positive ({value:e}) at series order ({x_terms}, {y_terms}); \
         raise the order or use adaptive truncation"
    )]
    SeriesNotConverged {
        moment: &'static str,
        value: f64,
        x_terms: u32,
        y_terms: u32,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(function: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            function,
            reason: reason.into(),
        }
    }
}
