//! Private and resource-bounded locally decodable codes for insertion-deletion channels.

pub mod bits;
pub mod block_code;
pub mod channels;
pub mod composed;
pub mod error;
pub mod game;
pub mod insdel_compiler;
pub mod local_codes;
pub mod metrics;
pub mod private_ldc;
pub mod prp;
pub mod scalar;
pub mod stats;

pub use bits::{BitString, SymbolString};
pub use error::{Error, Resource, Result};
pub use scalar::{Exact, Fraction, Scalar};

pub type PrivateCodeParams64 = private_ldc::PrivateCodeParams<f64>;
pub type PrivateCodeParamsExact = private_ldc::PrivateCodeParams<Exact>;
pub type ComposedParams64 = composed::ComposedParams<f64>;
pub type ComposedParamsExact = composed::ComposedParams<Exact>;
pub type LocalCodeSpec64 = local_codes::LocalCodeSpec<f64>;
pub type LocalCodeSpecExact = local_codes::LocalCodeSpec<Exact>;
