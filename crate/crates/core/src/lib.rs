//! Affine frequency division multiplexing (AFDM) link-level simulation.
//!
//! The crate covers the full single-frame chain: DAFT-domain frame layouts
//! with pilot and guard slots, the inverse/forward discrete affine Fourier
//! transform with chirp-periodic prefix, a doubly dispersive channel with
//! integer delay and Doppler, threshold-based pilot-aided estimation of the
//! delay-Doppler profile, LMMSE detection and a seeded Monte Carlo BER
//! harness.

pub mod channel;
pub mod detector;
pub mod error;
pub mod estimator;
pub mod layout;
pub mod params;
pub mod plot;
pub mod sim;
pub mod transform;

pub use num_complex::Complex64;

pub use channel::{ChannelPath, DDProfile, EffectiveChannel, PowerDelayProfile};
pub use error::{AfdmError, Result};
pub use layout::{FrameLayout, PilotSpec, Scheme, SlotRole};
pub use params::AfdmParams;
pub use transform::{DaftFrame, TimeSignal};
