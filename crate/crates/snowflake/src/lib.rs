//! Random conformal snowflakes and certified lower bounds for the average
//! integral-means spectrum β̄(t).
//!
//! The pipeline: a straight-slit building block ([`complexmaps::SlitBlock`])
//! is turned into a random fractal map by iterated Koebe-root composition
//! ([`snowflake`]); the growth exponent of its derivative integral means is
//! bounded from below through the spectral radius of a transfer-type operator
//! on a radial interval ([`operator`]); parameter sweeps and the spectrum
//! table live in [`search`]; [`cli`] ties everything to files.

pub mod cli;
pub mod complexmaps;
pub mod error;
pub mod operator;
pub mod search;
pub mod snowflake;

pub use complexmaps::{ComplexValue, DerivativeBounds, SlitBlock};
pub use error::{Error, Result};
pub use operator::{
    BoundCertificate, CertificateMode, DiscretizedOperator, EigenResult, QuadratureSpec,
    RadialGrid, RationalTestFunction, SpectrumParams,
};
pub use snowflake::{McEstimate, RotationSequence, SnowflakeRealization};
pub use search::{SpectrumTable, SweepResult};
