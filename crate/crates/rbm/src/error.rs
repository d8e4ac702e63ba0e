//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("evaluation point lies on the cut (real axis beyond theta2_plus)")]
    OnCut,
    #[error("evaluation at a pole: {0}")]
    AtPole(String),
    #[error("point outside the evaluation domain: {0}")]
    OutsideDomain(String),
    #[error("point too close to the contour: distance {dist:.3e} < margin {margin:.3e}")]
    TooCloseToContour { dist: f64, margin: f64 },
    #[error("integral tail bound not met: achieved {achieved:.3e}, requested {requested:.3e}")]
    TailBound { achieved: f64, requested: f64 },
    #[error("cross-check failed: {0}")]
    CrossCheck(String),
    #[error("kernel vanishes at the evaluation point")]
    KernelZero,
    #[error("parameters are not skew-symmetric")]
    NotSkewSymmetric,
    #[error("reflection matrix is not the identity")]
    NotOrthogonal,
    #[error("wrong asymptotic case: {0}")]
    WrongCase(String),
    #[error("complementarity step infeasible")]
    LcpInfeasible,
    #[error("numeric overflow in {0}")]
    Overflow(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
