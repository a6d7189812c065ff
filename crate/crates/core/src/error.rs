use thiserror::Error;

/// Errors raised by the library. Precondition violations that the theory
/// only *recommends* against are reported as [`crate::estimators::Flags`]
/// on the result instead.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid point clouds: {0}")]
    InvalidClouds(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {achieved:e} > tolerance {tolerance:e}")]
    Quadrature {
        a: f64,
        b: f64,
        achieved: f64,
        tolerance: f64,
    },

    #[error("kernel `{kernel}` is not differentiable")]
    NonDifferentiableKernel { kernel: &'static str },

    #[error("kernel `{kernel}` does not have the required compact support: {reason}")]
    KernelSupport {
        kernel: &'static str,
        reason: String,
    },

    #[error("kernel `{kernel}` has no Fourier transform")]
    MissingFourier { kernel: &'static str },

    #[error("no offspring observed; estimator normalises by |Y|")]
    EmptyOffspring,

    #[error("no parents observed")]
    EmptyParents,

    #[error("parent and offspring clouds must have equal size (got {parents} and {offspring})")]
    SizeMismatch { parents: usize, offspring: usize },

    #[error("sigma = {sigma} violates the small-scale precondition sigma < 1/8")]
    SmallScalePrecondition { sigma: f64 },

    #[error("z0 = {z0} outside the domain [0, {upper})")]
    Domain { z0: f64, upper: f64 },

    #[error("intervals B1 = [{b1_lo}, {b1_hi}] and B2 = [{b2_lo}, {b2_hi}] overlap")]
    OverlappingIntervals {
        b1_lo: f64,
        b1_hi: f64,
        b2_lo: f64,
        b2_hi: f64,
    },

    #[error("characteristic function too small: |phi_p(u/sigma)| = {modulus:e} at u = {u}")]
    IllPosed { u: f64, modulus: f64 },

    #[error("parent distribution `{0}` has a vanishing characteristic function")]
    UnsupportedParent(String),

    #[error(
        "inverse Fourier transform is not real: imaginary part {imag:e} vs real part {real:e}"
    )]
    ComplexWeight { real: f64, imag: f64 },

    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl Error {
    /// Whether the error stems from invalid user input rather than a
    /// failure while computing.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::InvalidClouds(_)
                | Error::NonDifferentiableKernel { .. }
                | Error::KernelSupport { .. }
                | Error::MissingFourier { .. }
                | Error::SizeMismatch { .. }
                | Error::SmallScalePrecondition { .. }
                | Error::Domain { .. }
                | Error::OverlappingIntervals { .. }
                | Error::UnsupportedParent(_)
                | Error::Parse(_)
        )
    }
}
