//! Secrecy sum-rate bounds and a desk-scale layered nested-lattice scheme for
//! the K-user Gaussian many-to-one interference channel with confidential
//! messages.
//!
//! Receivers `1..K-1` each hear only their own transmitter; receiver `K` hears
//! every transmitter and is also the eavesdropper for messages `1..K-1`.
//!
//! * [`model`]: channel configuration, validation and the Gaussian capacity
//!   function.
//! * [`layering`]: layer delimiters and the aligned per-layer power split.
//! * [`bounds`]: achievable and converse secrecy sum rates, constant-gap
//!   budgets, per-layer accounting and secure-DoF sweeps.
//! * [`lattice`]: exact integer nested-lattice arithmetic, carry indices and
//!   exhaustive leakage computation.
//! * [`sim`]: Monte Carlo sequential decoding at every receiver.
//! * [`io`]: config parsing, report manifests and number formatting.
//!
//! Data-parallel loops go through [`Exec`], which uses rayon when the
//! `parallel` feature is enabled and runs sequentially otherwise.

pub mod bounds;
pub mod exec;
pub mod io;
pub mod lattice;
pub mod layering;
pub mod model;
pub mod rng;
pub mod scan;
pub mod sim;

pub use exec::Exec;
pub use model::{cap, max_gain_c, ChannelConfig, GaussianNoiseSpec, ValidationError};
