use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation K={k} needs M_0..M_{} but only {available} branching factors were given", k.saturating_sub(1))]
    TruncationTooDeep { k: usize, available: usize },

    #[error(
        "relative side ratio rho_{k} = {rho} is not below 1/2; the smallest branching factor that restores it is M_{k} = {min_branching}"
    )]
    RatioTooLarge {
        k: usize,
        rho: f64,
        min_branching: u64,
    },

    #[error("vertex {0} does not exist in the tree")]
    NoSuchVertex(usize),

    #[error("vertex {0} is not expanded at this truncation")]
    NotExpanded(usize),

    #[error("child cube {child} escapes its parent cube along axis {axis}")]
    Containment { child: usize, axis: usize },

    #[error("measure has no atom for vertex {0}; expansion order violated")]
    MissingAtom(usize),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error(
        "no realization accepted after {} trials (best L_p^p = {}, L_p1^p1 = {})",
        .0.rejections, .0.norm_p, .0.norm_p1
    )]
    SelectionExhausted(Box<crate::selection::Selection>),

    #[error("malformed measure: atom {index}: {reason}")]
    MalformedAtom { index: usize, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence(_))
    }
}
