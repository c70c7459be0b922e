//! Photon-level simulation of the avalanche-photodiode backflash side channel
//! in polarization-encoded BB84 receivers.
//!
//! Geiger-mode silicon APDs emit broadband photons during the detection
//! avalanche. In a passive-basis-choice polarization analyzer those photons
//! back-propagate through the channel-discriminating optics and leave the
//! receiver carrying the polarization of the channel that clicked, so an
//! eavesdropper tapping the quantum channel can learn which detector fired
//! without disturbing the signal states. This crate models that physics end
//! to end:
//!
//! - [`optics`]: Jones-vector polarization states and finite-extinction
//!   polarizing beamsplitters, waveplates, and spectral filters.
//! - [`devices`]: statistical single-photon detector models (APD with
//!   backflash emission, PMT, SPCM) with dark counts and dead time.
//! - [`receiver`]: forward routing of signal photons to four detectors and
//!   reverse routing of backflash photons back into the channel.
//! - [`eavesdropper`]: a channel tap with polarization analysis, detector
//!   gating, and coincidence pairing.
//! - [`engine`]: deterministic, seed-reproducible Monte Carlo orchestration
//!   producing ground-truth-tagged event logs.
//! - [`analysis`]: coincidence histograms, peak detection, backflash
//!   probability and leakage estimators, and the tagged-signal secret key
//!   rate.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the companion
//! `backflash-cli` crate carries configuration files, CSV output, and the
//! command-line front end.

#![cfg_attr(not(feature = "std"), no_std)]
// Validation guards use `!(x > 0.0)` so NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod devices;
pub mod eavesdropper;
pub mod engine;
pub mod event;
pub mod optics;
pub mod receiver;
pub mod rng;

pub use event::{ClickCause, ClickRecord, DetectorId, EventRef, PhotonEvent, PhotonOrigin};
pub use optics::JonesVector;
