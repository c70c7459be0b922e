//! Photon and click event records with ground-truth genealogy.
//!
//! Timestamps are 64-bit integer picoseconds: the features of interest are
//! nanosecond-scale and integer arithmetic keeps event logs free of float
//! drift, so reruns with the same seed are byte-identical.

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::optics::JonesVector;
use crate::receiver::Channel;
use core::fmt;

/// Picoseconds per nanosecond.
pub const PS_PER_NS: i64 = 1_000;

/// Convert a nanosecond quantity to integer picoseconds (round to nearest).
pub fn ns_to_ps(ns: f64) -> i64 {
    (ns * PS_PER_NS as f64).round() as i64
}

/// A detector in the simulated apparatus.
///
/// `BobH..BobA` are the four channels of the QKD receiver and `Eve` is the
/// eavesdropper's counting module. `Dut`/`Spcm` are the two facing detectors
/// of the backflash characterization bench.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorId {
    BobH,
    BobV,
    BobD,
    BobA,
    Eve,
    Dut,
    Spcm,
}

impl DetectorId {
    pub fn from_channel(channel: Channel) -> Self {
        match channel {
            Channel::H => DetectorId::BobH,
            Channel::V => DetectorId::BobV,
            Channel::D => DetectorId::BobD,
            Channel::A => DetectorId::BobA,
        }
    }

    pub fn channel(self) -> Option<Channel> {
        match self {
            DetectorId::BobH => Some(Channel::H),
            DetectorId::BobV => Some(Channel::V),
            DetectorId::BobD => Some(Channel::D),
            DetectorId::BobA => Some(Channel::A),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DetectorId::BobH => "H",
            DetectorId::BobV => "V",
            DetectorId::BobD => "D",
            DetectorId::BobA => "A",
            DetectorId::Eve => "EVE",
            DetectorId::Dut => "DUT",
            DetectorId::Spcm => "SPCM",
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Ground-truth origin of a photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonOrigin {
    /// Emitted within source pulse `pulse_id`.
    Pulse { pulse_id: u64 },
    /// Backflash emission triggered by click `click_id` on `detector`.
    Backflash { click_id: u64, detector: DetectorId },
    /// Reflection of a pulse photon off an optical surface inside the
    /// receiver (`tap` indexes the configured reflection taps).
    Reflection { pulse_id: u64, tap: usize },
}

/// A single photon in flight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonEvent {
    pub time_ps: i64,
    pub wavelength_nm: f64,
    pub polarization: JonesVector,
    pub origin: PhotonOrigin,
}

/// What caused a click. Ground truth: never visible to the simulated
/// parties, only to the analysis layer for validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClickCause {
    /// A signal photon from a source pulse.
    Signal,
    /// A dark count.
    Dark,
    /// A pulse photon reflected off receiver optics.
    Reflection,
    /// A backflash photon emitted by another detector.
    Backflash,
}

impl ClickCause {
    pub fn label(self) -> &'static str {
        match self {
            ClickCause::Signal => "signal",
            ClickCause::Dark => "dark",
            ClickCause::Reflection => "reflection",
            ClickCause::Backflash => "backflash",
        }
    }
}

impl fmt::Display for ClickCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Genealogy link of a click to the event that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventRef {
    /// Source pulse index.
    Pulse(u64),
    /// Another click (backflash parent).
    Click(u64),
}

/// One detector click.
///
/// `time_ps` is the recorded timestamp, i.e. physical detection time plus
/// the detector's configured electronic delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClickRecord {
    pub id: u64,
    pub detector: DetectorId,
    pub time_ps: i64,
    pub cause: ClickCause,
    pub parent: Option<EventRef>,
}
