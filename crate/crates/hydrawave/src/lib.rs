//! Joint multi-group multicast scheduling and hybrid precoding for mmWave
//! links.
//!
//! A transmitter with a few RF chains and many phase shifters serves
//! several multicast groups at once. This crate builds the whole pipeline
//! around that setting:
//!
//! - [`channel`]: geometric mmWave channel realizations, group topology,
//!   and the inter-group correlation (IGC) statistic.
//! - [`sdp`]: the complex-Hermitian semidefinite feasibility solver that
//!   every precoder stage reduces to.
//! - [`precoder`]: max-min equalized-SINR design of the analog precoder,
//!   digital precoder, and per-receiver analog combiners by alternating
//!   semidefinite relaxations with bisection and randomized
//!   constant-modulus recovery.
//! - [`scheduler`]: exact window scheduling that trades window count
//!   against aggregate IGC, plus `SING`/`RAND`/`XHAUS` baselines.
//! - [`metrics`]: capped-rate latency, r-SINR/e-SINR quantities, and the
//!   transmitter energy model.
//! - [`config`] and [`sim`]: the experiment front end used by the
//!   `hydrawave` binary.
//!
//! # Quick start
//!
//! ```
//! use hydrawave::channel::generate_channel_set;
//! use hydrawave::precoder::{design_window, PrecoderConfig, PrecoderMode};
//! use hydrawave::rng::Rng;
//!
//! // Two groups of one single-antenna receiver each, four transmit antennas.
//! let mut rng = Rng::from_seed(7);
//! let chs = generate_channel_set(4, 1, 3, 2, 2, 4.0e6, &mut rng);
//! let pcfg = PrecoderConfig {
//!     n_rf: 2,
//!     l_tx: 2,
//!     d_f: 4,
//!     mode: PrecoderMode::Hybrid,
//!     ..PrecoderConfig::default()
//! };
//! let design = design_window(&chs, &[0, 1], &pcfg, 1).unwrap();
//! assert!(design.min_esinr > 0.0);
//! assert!(design.transmit_power() <= pcfg.p_tx_max * (1.0 + 1e-9));
//! ```

pub mod channel;
pub mod config;
pub mod linalg;
pub mod metrics;
pub mod precoder;
pub mod rng;
pub mod scheduler;
pub mod sdp;
pub mod sim;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// Incompatible matrix or vector dimensions.
    DimensionMismatch(String),
    /// A group index referenced no receivers.
    EmptyGroup(usize),
    /// A group's mean channel vector has zero norm.
    DegenerateGroup(usize),
    /// A matrix expected to be PSD is indefinite beyond tolerance.
    NotPsd(String),
    /// A precondition on an argument failed.
    InvalidArgument(String),
    /// A scheduling window holds more groups than RF chains.
    WindowTooLarge {
        window: usize,
        n_rf: usize,
    },
    /// Exhaustive scheduling would enumerate too many partitions.
    PartitionCapExceeded {
        count: u128,
        cap: usize,
    },
    /// Configuration parse or validation failure.
    Config {
        line: Option<usize>,
        key: String,
        message: String,
    },
    Io(std::io::Error),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::EmptyGroup(g) => write!(f, "group {g} is empty or out of range"),
            Error::DegenerateGroup(g) => {
                write!(f, "group {g} has a zero mean channel vector")
            }
            Error::NotPsd(msg) => write!(f, "matrix is not positive semidefinite: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::WindowTooLarge { window, n_rf } => {
                write!(
                    f,
                    "window holds {window} groups but only {n_rf} RF chains are available"
                )
            }
            Error::PartitionCapExceeded { count, cap } => {
                write!(
                    f,
                    "{count} partitions exceed the exhaustive-search cap of {cap}"
                )
            }
            Error::Config {
                line: Some(line),
                key,
                message,
            } => {
                write!(f, "config error at line {line}, key '{key}': {message}")
            }
            Error::Config {
                line: None,
                key,
                message,
            } => {
                write!(f, "config error for key '{key}': {message}")
            }
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

// The guide's code blocks compile and run as doctests, keeping the book in
// lockstep with the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel-model.md")]
    mod channel_model {}
    #[doc = include_str!("../../../book/src/sdp-solver.md")]
    mod sdp_solver {}
    #[doc = include_str!("../../../book/src/precoder.md")]
    mod precoder {}
    #[doc = include_str!("../../../book/src/scheduling.md")]
    mod scheduling {}
    #[doc = include_str!("../../../book/src/latency-and-energy.md")]
    mod latency_and_energy {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
