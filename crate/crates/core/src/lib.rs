//! Achievable rates of multihop virtual full-duplex relay channels.
//!
//! A virtual full-duplex stage is a pair of half-duplex relays that alternate
//! transmit/receive roles every slot, so each stage behaves like one
//! full-duplex relay at the cost of inter-relay cross talk within the stage.
//! Each stage can decode-and-forward (DF) or quantize-map-and-forward (QMF),
//! and DF stages may use rate-splitting so the interfered relay can cancel
//! the common part of the cross signal.
//!
//! The crate computes the symmetric rate achieved by such a mixed DF/QMF
//! chain over Gaussian hops ([`engine`]), searches over relay-mode subsets
//! and power splits ([`optimizer`]), evaluates reference schemes
//! ([`baselines`]), evaluates the general finite-alphabet rate region
//! ([`dm`]), and runs deterministic Monte Carlo ensemble sweeps ([`sweep`]).

pub mod baselines;
pub mod channel;
pub mod dm;
pub mod engine;
pub mod error;
pub mod info;
pub mod optimizer;
pub mod rng;
pub mod sweep;

pub use channel::{ChannelInstance, EnsembleSpec};
pub use dm::{DmModes, DmNetworkSpec, DmRateResult, JointPmf};
pub use engine::{Decoder, FormulaVariant, ModeConfig, RateBreakdown, Segmentation};
pub use error::Error;
pub use info::RateValue;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Version string recorded in sweep metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
