//! Deterministic Monte Carlo orchestration.
//!
//! Two apparatus topologies share the same event machinery:
//!
//! - [`Apparatus::QkdReceiver`]: a pulsed source fires BB84 states into
//!   Bob's receiver; detector clicks emit backflash photons that reverse
//!   through the receiver and on to Eve, alongside reflections of the
//!   source pulses off internal optics and dark counts everywhere.
//! - [`Apparatus::DetectorPair`]: two detectors face each other through a
//!   fiber; dark counts (or induced triggers) in either detector emit
//!   backflash toward the other, the coincidence bench used to measure the
//!   backflash probability.
//!
//! All randomness comes from [`RngStreamKey`] substreams, so a run is a
//! pure function of `(seed, trial_index, config)` and event logs are
//! byte-identical across reruns. Within one
//! run every detector consumes its photon arrivals and dark counts in
//! strict time order, so dead-time interaction between signal and dark
//! events is exact.

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::devices::{
    apd_detect, backflash_emit, ApdParams, Detection, DetectorState, DeviceError,
};
use crate::eavesdropper::{EveError, EveSetup};
use crate::event::{
    ns_to_ps, ClickCause, ClickRecord, DetectorId, PhotonEvent, PhotonOrigin,
};
use crate::optics::{filter_transmission, FilterSpec, JonesVector, OpticsError};
use crate::receiver::{forward_route, reverse_route, Channel, ReceiverModel, ReceiverError};
use crate::rng::{RngStreamKey, StreamDomain, StreamRng};
use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Reverse;
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid scenario config `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("scenario has no eavesdropper configured")]
    MissingEve,
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
    #[error(transparent)]
    Eve(#[from] EveError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

fn invalid(field: impl core::fmt::Display, reason: impl core::fmt::Display) -> EngineError {
    EngineError::InvalidConfig {
        field: alloc::format!("{field}"),
        reason: alloc::format!("{reason}"),
    }
}

/// Per-pulse polarization policy of the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolarizationPolicy {
    /// Every pulse carries this linear polarization (degrees).
    FixedLinear(f64),
    /// Uniform random choice among H, V, D, A per pulse.
    RandomBb84,
}

/// Angles of the four BB84 states, degrees.
pub const BB84_ANGLES_DEG: [f64; 4] = [0.0, 90.0, 45.0, 135.0];

/// The pulsed source standing in for Alice.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrainConfig {
    pub period_ns: f64,
    pub width_ns: f64,
    pub count: u64,
    pub mean_photons_per_pulse: f64,
    pub polarization: PolarizationPolicy,
    pub wavelength_nm: f64,
}

impl PulseTrainConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.width_ns > 0.0) {
            return Err(invalid("pulse_train.width_ns", "must be positive"));
        }
        if !(self.period_ns > self.width_ns) {
            return Err(invalid(
                "pulse_train.period_ns",
                "must exceed the pulse width",
            ));
        }
        if !(self.mean_photons_per_pulse >= 0.0) {
            return Err(invalid(
                "pulse_train.mean_photons_per_pulse",
                "must be non-negative",
            ));
        }
        if !(self.wavelength_nm > 0.0) {
            return Err(invalid("pulse_train.wavelength_nm", "must be positive"));
        }
        Ok(())
    }
}

/// One generated source pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub pulse_id: u64,
    pub epoch_ps: i64,
    pub polarization_deg: f64,
    pub photon_count: u32,
}

/// The QKD eavesdropping topology.
#[derive(Debug, Clone, PartialEq)]
pub struct QkdReceiverConfig {
    pub pulse_train: PulseTrainConfig,
    pub receiver: ReceiverModel,
    /// Detector per channel, indexed H, V, D, A.
    pub detectors: [ApdParams; 4],
    pub eve: Option<EveSetup>,
}

/// The two-detector coincidence bench topology.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorPairConfig {
    pub dut: ApdParams,
    pub spcm: ApdParams,
    /// Extra Poisson rate of externally induced DUT clicks (weak laser),
    /// on top of the DUT's dark counts.
    pub induced_rate_hz: f64,
    /// Stop once the DUT has registered this many clicks.
    pub clicks_target: u64,
    /// Coupling transmission of the fiber between the two detectors.
    pub channel_transmission: f64,
    /// One-way optical delay between the detectors.
    pub optical_delay_ns: f64,
    /// Optional narrowpass filter in the path between the detectors.
    pub filter: Option<FilterSpec>,
}

impl DetectorPairConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        self.dut.validate().map_err(|e| wrap_device("dut", e))?;
        self.spcm.validate().map_err(|e| wrap_device("spcm", e))?;
        if !(self.induced_rate_hz >= 0.0) {
            return Err(invalid("induced_rate_hz", "must be non-negative"));
        }
        if self.clicks_target == 0 {
            return Err(invalid("clicks_target", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.channel_transmission) {
            return Err(invalid("channel_transmission", "must be in [0, 1]"));
        }
        if !(self.optical_delay_ns >= 0.0) {
            return Err(invalid("optical_delay_ns", "must be non-negative"));
        }
        if self.dut.dark_count_rate_hz + self.induced_rate_hz <= 0.0 {
            return Err(invalid(
                "dut.dark_count_rate_hz",
                "DUT needs a positive dark or induced click rate to trigger",
            ));
        }
        Ok(())
    }
}

fn wrap_device(prefix: &str, e: DeviceError) -> EngineError {
    match e {
        DeviceError::InvalidParam { field, reason } => {
            invalid(alloc::format!("{prefix}.{field}"), reason)
        }
        other => EngineError::Device(other),
    }
}

/// Simulated apparatus.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Apparatus {
    QkdReceiver(QkdReceiverConfig),
    DetectorPair(DetectorPairConfig),
}

/// Full experiment description. A run is a pure function of this value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Separates independent runs sharing a seed (sweep points, scan
    /// angles).
    pub trial_index: u64,
    pub apparatus: Apparatus,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        match &self.apparatus {
            Apparatus::QkdReceiver(qkd) => {
                qkd.pulse_train.validate()?;
                qkd.receiver.validate()?;
                for (channel, det) in Channel::ALL.iter().zip(&qkd.detectors) {
                    det.validate().map_err(|e| {
                        wrap_device(&alloc::format!("detectors.{channel}"), e)
                    })?;
                }
                if let Some(eve) = &qkd.eve {
                    eve.validate()?;
                }
                Ok(())
            }
            Apparatus::DetectorPair(pair) => pair.validate(),
        }
    }

    pub fn eve(&self) -> Option<&EveSetup> {
        match &self.apparatus {
            Apparatus::QkdReceiver(qkd) => qkd.eve.as_ref(),
            Apparatus::DetectorPair(_) => None,
        }
    }

    pub fn eve_mut(&mut self) -> Option<&mut EveSetup> {
        match &mut self.apparatus {
            Apparatus::QkdReceiver(qkd) => qkd.eve.as_mut(),
            Apparatus::DetectorPair(_) => None,
        }
    }

    fn stream(&self, domain: StreamDomain, event: u64) -> StreamRng {
        RngStreamKey::new(self.seed, self.trial_index, domain, event).stream()
    }
}

/// Time-ordered click record of one run, with ground-truth genealogy.
///
/// For the detector-pair bench, `bob_clicks` holds the DUT and
/// `eve_clicks` the facing SPCM.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub bob_clicks: Vec<ClickRecord>,
    pub eve_clicks: Vec<ClickRecord>,
    pub pulse_count: u64,
    pub duration_ps: i64,
}

impl EventLog {
    pub fn bob_channel_counts(&self) -> [u64; 4] {
        let mut counts = [0u64; 4];
        for click in &self.bob_clicks {
            if let Some(channel) = click.detector.channel() {
                counts[channel.index()] += 1;
            }
        }
        counts
    }

    /// Look up a click by id across both sides.
    pub fn click_by_id(&self, id: u64) -> Option<&ClickRecord> {
        self.bob_clicks
            .iter()
            .chain(self.eve_clicks.iter())
            .find(|c| c.id == id)
    }
}

/// Generate the source pulse train: per-pulse Poisson photon counts and
/// the polarization policy, each pulse on its own rng substream.
pub fn generate_pulse_train(
    train: &PulseTrainConfig,
    seed: u64,
    trial_index: u64,
) -> Result<Vec<Pulse>, EngineError> {
    train.validate()?;
    let mut pulses = Vec::with_capacity(train.count as usize);
    for pulse_id in 0..train.count {
        let mut rng = RngStreamKey::new(seed, trial_index, StreamDomain::Pulse, pulse_id).stream();
        pulses.push(sample_pulse(train, pulse_id, &mut rng));
    }
    Ok(pulses)
}

fn sample_pulse(train: &PulseTrainConfig, pulse_id: u64, rng: &mut StreamRng) -> Pulse {
    let polarization_deg = match train.polarization {
        PolarizationPolicy::FixedLinear(angle) => angle,
        PolarizationPolicy::RandomBb84 => BB84_ANGLES_DEG[rng.random_range(0..4usize)],
    };
    let photon_count = if train.mean_photons_per_pulse > 0.0 {
        Poisson::new(train.mean_photons_per_pulse)
            .expect("validated mean")
            .sample(rng) as u32
    } else {
        0
    };
    Pulse {
        pulse_id,
        epoch_ps: pulse_id as i64 * ns_to_ps(train.period_ns),
        polarization_deg,
        photon_count,
    }
}

/// Run the full causal simulation described by `config`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<EventLog, EngineError> {
    config.validate()?;
    match &config.apparatus {
        Apparatus::QkdReceiver(qkd) => run_qkd(config, qkd),
        Apparatus::DetectorPair(pair) => run_pair(config, pair),
    }
}

/// Homogeneous Poisson arrival stream, advanced lazily.
struct ArrivalStream {
    rng: StreamRng,
    exp: Option<Exp<f64>>,
    next_s: f64,
}

impl ArrivalStream {
    fn new(rate_hz: f64, rng: StreamRng) -> Self {
        let mut stream = Self {
            rng,
            exp: if rate_hz > 0.0 {
                Some(Exp::new(rate_hz).expect("positive rate"))
            } else {
                None
            },
            next_s: f64::INFINITY,
        };
        stream.advance();
        stream
    }

    fn peek_ps(&self) -> i64 {
        if self.next_s.is_finite() {
            (self.next_s * 1e12).round() as i64
        } else {
            i64::MAX
        }
    }

    fn advance(&mut self) {
        match &self.exp {
            Some(exp) => {
                if !self.next_s.is_finite() {
                    self.next_s = 0.0;
                }
                self.next_s += exp.sample(&mut self.rng);
            }
            None => self.next_s = f64::INFINITY,
        }
    }
}

/// Chronological per-detector click registration: merges photon arrivals
/// (already time-sorted) with the detector's dark counts, applying
/// efficiency and dead time in exact time order.
struct DetectorFeed<'a> {
    params: &'a ApdParams,
    detector: DetectorId,
    state: DetectorState,
    darks: Vec<i64>,
    next_dark: usize,
    detect_rng: StreamRng,
}

impl<'a> DetectorFeed<'a> {
    fn new(
        params: &'a ApdParams,
        detector: DetectorId,
        duration_s: f64,
        detect_rng: StreamRng,
        mut dark_rng: StreamRng,
    ) -> Self {
        let darks =
            crate::devices::dark_count_times(params.dark_count_rate_hz, duration_s, &mut dark_rng);
        Self {
            params,
            detector,
            state: DetectorState::live(),
            darks,
            next_dark: 0,
            detect_rng,
        }
    }

    /// Register pending dark counts up to `time_ps` (inclusive).
    fn drain_darks_until(
        &mut self,
        time_ps: i64,
        next_id: &mut u64,
        out: &mut Vec<Detection>,
    ) {
        while self.next_dark < self.darks.len() && self.darks[self.next_dark] <= time_ps {
            let t = self.darks[self.next_dark];
            self.next_dark += 1;
            if let Some(detection) = crate::devices::register_dark(
                t,
                self.params,
                &mut self.state,
                self.detector,
                *next_id,
                &mut self.detect_rng,
            ) {
                *next_id += 1;
                out.push(detection);
            }
        }
    }

    fn offer_photon(
        &mut self,
        photon: &PhotonEvent,
        next_id: &mut u64,
        out: &mut Vec<Detection>,
    ) {
        self.drain_darks_until(photon.time_ps, next_id, out);
        if let Some(detection) = apd_detect(
            photon,
            self.params,
            &mut self.state,
            self.detector,
            *next_id,
            &mut self.detect_rng,
        ) {
            *next_id += 1;
            out.push(detection);
        }
    }

    fn finish(&mut self, next_id: &mut u64, out: &mut Vec<Detection>) {
        self.drain_darks_until(i64::MAX, next_id, out);
    }
}

fn run_qkd(config: &ScenarioConfig, qkd: &QkdReceiverConfig) -> Result<EventLog, EngineError> {
    let train = &qkd.pulse_train;
    let duration_ps = train.count as i64 * ns_to_ps(train.period_ns);
    // Dark-count horizon: run length plus the longest causal tail.
    let dark_horizon_s = (duration_ps as f64) * 1e-12 + 1e-6;

    let mut bob_feeds: Vec<DetectorFeed> = Channel::ALL
        .iter()
        .map(|&channel| {
            DetectorFeed::new(
                &qkd.detectors[channel.index()],
                DetectorId::from_channel(channel),
                dark_horizon_s,
                config.stream(StreamDomain::Detection, channel.index() as u64),
                config.stream(StreamDomain::DarkCounts, channel.index() as u64),
            )
        })
        .collect();

    let mut next_id: u64 = 0;
    let mut bob_detections: Vec<Detection> = Vec::new();
    // Photons bound for Eve's analysis unit, resolved up to her counter.
    let mut eve_bound: Vec<(PhotonEvent, u64)> = Vec::new();
    let mut eve_seq: u64 = 0;

    let mut pulse_arrivals: [Vec<PhotonEvent>; 4] = Default::default();
    // An empty source leaves the pulse loop with nothing to do; the train
    // then only sets the run duration (dark-driven scenarios).
    let pulse_range = if train.mean_photons_per_pulse > 0.0 {
        0..train.count
    } else {
        0..0
    };
    for pulse_id in pulse_range {
        let mut pulse_rng = config.stream(StreamDomain::Pulse, pulse_id);
        let pulse = sample_pulse(train, pulse_id, &mut pulse_rng);
        if pulse.photon_count == 0 {
            continue;
        }
        let polarization = JonesVector::linear_deg(pulse.polarization_deg);
        for arrivals in pulse_arrivals.iter_mut() {
            arrivals.clear();
        }
        for _ in 0..pulse.photon_count {
            let offset_ns: f64 = pulse_rng.random_range(0.0..train.width_ns);
            let photon = PhotonEvent {
                time_ps: pulse.epoch_ps + ns_to_ps(offset_ns),
                wavelength_nm: train.wavelength_nm,
                polarization,
                origin: PhotonOrigin::Pulse { pulse_id },
            };
            // Internal reflections back toward the channel. Reflectances are
            // effective round-trip values seen at the entrance; forward
            // depletion at these magnitudes is ignored.
            for (tap_index, tap) in qkd.receiver.reflection_taps.iter().enumerate() {
                if pulse_rng.random::<f64>() < tap.reflectance {
                    eve_bound.push((
                        PhotonEvent {
                            time_ps: photon.time_ps + 2 * ns_to_ps(tap.delay_ns),
                            origin: PhotonOrigin::Reflection {
                                pulse_id,
                                tap: tap_index,
                            },
                            ..photon
                        },
                        eve_seq,
                    ));
                    eve_seq += 1;
                }
            }
            if let Some((channel, arrival_ps)) =
                forward_route(&photon, &qkd.receiver, &mut pulse_rng)?
            {
                pulse_arrivals[channel.index()].push(PhotonEvent {
                    time_ps: arrival_ps,
                    ..photon
                });
            }
        }
        for (channel, arrivals) in Channel::ALL.iter().zip(pulse_arrivals.iter_mut()) {
            if arrivals.is_empty() {
                continue;
            }
            arrivals.sort_by_key(|p| p.time_ps);
            for photon in arrivals.iter() {
                bob_feeds[channel.index()].offer_photon(photon, &mut next_id, &mut bob_detections);
            }
        }
    }
    for feed in bob_feeds.iter_mut() {
        feed.finish(&mut next_id, &mut bob_detections);
    }

    // Backflash chains: each Bob click emits photons that reverse through
    // the receiver and propagate to Eve's counter input.
    if let Some(eve) = &qkd.eve {
        for detection in &bob_detections {
            let channel = detection
                .record
                .detector
                .channel()
                .expect("bob detection has a channel");
            let params = &qkd.detectors[channel.index()];
            if params.backflash_prob <= 0.0 {
                continue;
            }
            let mut chain_rng = config.stream(StreamDomain::Backflash, detection.record.id);
            let photons = backflash_emit(detection, params, &mut chain_rng)?;
            for photon in photons {
                if let Some(escaped) =
                    reverse_route(&photon, channel, &qkd.receiver, &mut chain_rng)?
                {
                    if let Some(at_counter) =
                        eve_reach_counter(&escaped, eve, &mut chain_rng)?
                    {
                        eve_bound.push((at_counter, eve_seq));
                        eve_seq += 1;
                    }
                }
            }
        }
    }

    let mut eve_clicks = Vec::new();
    if let Some(eve) = &qkd.eve {
        // Reflections still have to reach the counter through tap,
        // throughput, and her analysis PBS.
        let mut tap_rng = config.stream(StreamDomain::Intercept, 0);
        let mut arrivals: Vec<(PhotonEvent, u64)> = Vec::with_capacity(eve_bound.len());
        for (photon, seq) in eve_bound {
            match photon.origin {
                PhotonOrigin::Reflection { .. } => {
                    if let Some(at_counter) = eve_reach_counter(&photon, eve, &mut tap_rng)? {
                        arrivals.push((at_counter, seq));
                    }
                }
                _ => arrivals.push((photon, seq)),
            }
        }
        arrivals.sort_by_key(|(p, seq)| (p.time_ps, *seq));

        let mut eve_feed = DetectorFeed::new(
            &eve.spcm,
            DetectorId::Eve,
            dark_horizon_s,
            config.stream(StreamDomain::Detection, 4),
            config.stream(StreamDomain::DarkCounts, 4),
        );
        let mut eve_detections = Vec::new();
        for (photon, _) in &arrivals {
            eve_feed.offer_photon(photon, &mut next_id, &mut eve_detections);
        }
        eve_feed.finish(&mut next_id, &mut eve_detections);
        eve_clicks = eve_detections.into_iter().map(|d| d.record).collect();
    }

    let mut bob_clicks: Vec<ClickRecord> = bob_detections.into_iter().map(|d| d.record).collect();
    bob_clicks.sort_by_key(|c| (c.time_ps, c.id));
    eve_clicks.sort_by_key(|c| (c.time_ps, c.id));

    Ok(EventLog {
        bob_clicks,
        eve_clicks,
        pulse_count: train.count,
        duration_ps,
    })
}

/// Pre-detection half of the interception: tap and throughput survival,
/// distortion, and the analysis PBS draw. Survivors arrive at the counter
/// input after Eve's path delay.
fn eve_reach_counter(
    photon: &PhotonEvent,
    eve: &EveSetup,
    rng: &mut StreamRng,
) -> Result<Option<PhotonEvent>, EngineError> {
    let reach = eve.tap_to_eve * eve.measurement_throughput;
    if rng.random::<f64>() >= reach {
        return Ok(None);
    }
    let distorted = crate::optics::waveplate_apply(&photon.polarization, &eve.distortion)
        .map_err(EveError::Optics)?;
    let projection = crate::optics::pbs_project(&distorted, &eve.analysis_pbs)
        .map_err(EveError::Optics)?;
    if rng.random::<f64>() >= projection.p_transmit {
        return Ok(None);
    }
    Ok(Some(PhotonEvent {
        time_ps: photon.time_ps + ns_to_ps(eve.path_delay_ns),
        polarization: projection.transmitted,
        ..*photon
    }))
}

/// Heap entry for the detector-pair event loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct PendingArrival {
    time_ps: i64,
    seq: u64,
    target_is_spcm: bool,
}

fn run_pair(config: &ScenarioConfig, pair: &DetectorPairConfig) -> Result<EventLog, EngineError> {
    let optical_delay = ns_to_ps(pair.optical_delay_ns);
    // Margin past the terminating click that lets in-flight chains land.
    let drain_margin = optical_delay + ns_to_ps(pair.dut.profile.quench_ns) + ns_to_ps(200.0);

    let mut dut_state = DetectorState::live();
    let mut spcm_state = DetectorState::live();
    let mut dut_detect_rng = config.stream(StreamDomain::Detection, 0);
    let mut spcm_detect_rng = config.stream(StreamDomain::Detection, 1);

    let mut dut_darks =
        ArrivalStream::new(pair.dut.dark_count_rate_hz, config.stream(StreamDomain::DarkCounts, 0));
    let mut spcm_darks =
        ArrivalStream::new(pair.spcm.dark_count_rate_hz, config.stream(StreamDomain::DarkCounts, 1));
    let mut induced =
        ArrivalStream::new(pair.induced_rate_hz, config.stream(StreamDomain::DarkCounts, 2));

    let mut heap: BinaryHeap<Reverse<(PendingArrival, PhotonKey)>> = BinaryHeap::new();
    let mut photons_in_flight: Vec<PhotonEvent> = Vec::new();
    let mut next_id: u64 = 0;
    let mut seq: u64 = 0;
    let mut dut_clicks: Vec<ClickRecord> = Vec::new();
    let mut spcm_clicks: Vec<ClickRecord> = Vec::new();
    let mut end_time_ps: Option<i64> = None;

    // Emit a click's backflash burst toward the facing detector.
    macro_rules! chain {
        ($detection:expr, $params:expr, $target_is_spcm:expr) => {{
            let detection: &Detection = $detection;
            let params: &ApdParams = $params;
            if params.backflash_prob > 0.0 {
                let mut chain_rng = config.stream(StreamDomain::Backflash, detection.record.id);
                for photon in backflash_emit(detection, params, &mut chain_rng)? {
                    let transmission = pair.channel_transmission
                        * pair
                            .filter
                            .as_ref()
                            .map_or(1.0, |f| filter_transmission(photon.wavelength_nm, f));
                    if chain_rng.random::<f64>() >= transmission {
                        continue;
                    }
                    let arrival = PhotonEvent {
                        time_ps: photon.time_ps + optical_delay,
                        ..photon
                    };
                    let key = PhotonKey(photons_in_flight.len());
                    photons_in_flight.push(arrival);
                    heap.push(Reverse((
                        PendingArrival {
                            time_ps: arrival.time_ps,
                            seq,
                            target_is_spcm: $target_is_spcm,
                        },
                        key,
                    )));
                    seq += 1;
                }
            }
        }};
    }

    loop {
        let next_dut_dark = dut_darks.peek_ps();
        let next_induced = induced.peek_ps();
        let next_spcm_dark = spcm_darks.peek_ps();
        let next_arrival = heap
            .peek()
            .map(|entry| entry.0 .0.time_ps)
            .unwrap_or(i64::MAX);

        let now = next_dut_dark
            .min(next_induced)
            .min(next_spcm_dark)
            .min(next_arrival);
        if now == i64::MAX {
            break;
        }
        if let Some(end) = end_time_ps {
            if now > end + drain_margin {
                break;
            }
        }

        let dut_done = end_time_ps.is_some();
        if next_arrival == now {
            let Reverse((pending, key)) = heap.pop().expect("peeked");
            let photon = photons_in_flight[key.0];
            if pending.target_is_spcm {
                if let Some(detection) = apd_detect(
                    &photon,
                    &pair.spcm,
                    &mut spcm_state,
                    DetectorId::Spcm,
                    next_id,
                    &mut spcm_detect_rng,
                ) {
                    next_id += 1;
                    spcm_clicks.push(detection.record);
                    chain!(&detection, &pair.spcm, false);
                }
            } else if !dut_done {
                if let Some(detection) = apd_detect(
                    &photon,
                    &pair.dut,
                    &mut dut_state,
                    DetectorId::Dut,
                    next_id,
                    &mut dut_detect_rng,
                ) {
                    next_id += 1;
                    dut_clicks.push(detection.record);
                    chain!(&detection, &pair.dut, true);
                    if dut_clicks.len() as u64 >= pair.clicks_target {
                        end_time_ps = Some(detection.avalanche_time_ps);
                    }
                }
            }
        } else if next_spcm_dark == now {
            spcm_darks.advance();
            if let Some(detection) = crate::devices::register_dark(
                now,
                &pair.spcm,
                &mut spcm_state,
                DetectorId::Spcm,
                next_id,
                &mut spcm_detect_rng,
            ) {
                next_id += 1;
                spcm_clicks.push(detection.record);
                chain!(&detection, &pair.spcm, false);
            }
        } else if next_dut_dark == now || next_induced == now {
            let cause = if next_dut_dark == now {
                dut_darks.advance();
                ClickCause::Dark
            } else {
                induced.advance();
                ClickCause::Signal
            };
            if dut_done {
                continue;
            }
            if let Some(detection) = crate::devices::register_forced_click(
                now,
                &pair.dut,
                &mut dut_state,
                DetectorId::Dut,
                next_id,
                cause,
                None,
                &mut dut_detect_rng,
            ) {
                next_id += 1;
                dut_clicks.push(detection.record);
                chain!(&detection, &pair.dut, true);
                if dut_clicks.len() as u64 >= pair.clicks_target {
                    end_time_ps = Some(detection.avalanche_time_ps);
                }
            }
        }
    }

    dut_clicks.sort_by_key(|c| (c.time_ps, c.id));
    spcm_clicks.sort_by_key(|c| (c.time_ps, c.id));
    let duration_ps = end_time_ps.unwrap_or(0);
    Ok(EventLog {
        bob_clicks: dut_clicks,
        eve_clicks: spcm_clicks,
        pulse_count: 0,
        duration_ps,
    })
}

/// Index into the in-flight photon store; ordering ties are broken by the
/// arrival sequence number, never by this key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct PhotonKey(usize);
