//! Eve's interception apparatus: channel tap, polarization analysis, and
//! gated coincidence counting.
//!
//! A photon leaving the receiver reaches Eve's analysis PBS with
//! probability `tap_to_eve * measurement_throughput`, passes an optional
//! distortion waveplate (phase errors picked up on her reflective optics),
//! projects on the rotatable analysis PBS, and is finally registered by her
//! counting module. Coincidences are clicks inside a fixed time gate
//! relative to Bob's detection (or to the source pulse epoch when
//! characterizing timing).

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::devices::{apd_detect, ApdParams, Detection, DetectorState};
use crate::event::{ns_to_ps, ClickRecord, DetectorId, PhotonEvent};
use crate::optics::{pbs_project, waveplate_apply, OpticsError, PbsSpec, WaveplateSpec};
use crate::rng::StreamRng;
use alloc::vec::Vec;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EveError {
    #[error("invalid eavesdropper parameter `{field}`: {reason}")]
    InvalidParam {
        field: &'static str,
        reason: &'static str,
    },
    #[error("click list `{which}` is not time-sorted")]
    UnsortedClicks { which: &'static str },
    #[error("gate window start must not exceed end")]
    InvalidGateWindow,
    #[error("angle scan needs at least one angle")]
    EmptyAngleList,
    #[error("optics error: {0}")]
    Optics(#[from] OpticsError),
}

/// Time reference for the coincidence gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateReference {
    /// Gate relative to Bob's detection (attack mode).
    BobClick,
    /// Gate relative to the source pulse epoch (timing characterization).
    AlicePulse,
}

/// Eve's apparatus.
#[derive(Debug, Clone, PartialEq)]
pub struct EveSetup {
    /// Fraction of reverse-propagating light the channel tap diverts to
    /// Eve.
    pub tap_to_eve: f64,
    /// Throughput of her measurement unit after the tap (T_e).
    pub measurement_throughput: f64,
    /// Rotatable analysis PBS; its transmit port feeds the counter.
    pub analysis_pbs: PbsSpec,
    /// Polarization distortion of her reflective optics.
    pub distortion: WaveplateSpec,
    /// Her counting module. Backflash emission of this detector is
    /// ignored.
    pub spcm: ApdParams,
    /// Coincidence gate, ns relative to the gate reference.
    pub gate_window_ns: (f64, f64),
    pub gate_reference: GateReference,
    /// Optical delay from the receiver entrance to her counter, ns.
    pub path_delay_ns: f64,
}

impl EveSetup {
    /// Calibration-sheet setup: 90:10 tap, T_e = 0.60, ideal distortion-free
    /// analysis PBS at 0 deg, and a 25-30 ns gate after Bob's detection.
    pub fn calibration_default() -> Self {
        Self {
            tap_to_eve: 0.9,
            measurement_throughput: 0.60,
            analysis_pbs: PbsSpec::ideal(0.0),
            distortion: WaveplateSpec::identity(),
            spcm: ApdParams::silicon_apd(),
            gate_window_ns: (25.0, 30.0),
            gate_reference: GateReference::BobClick,
            path_delay_ns: 12.5,
        }
    }

    pub fn validate(&self) -> Result<(), EveError> {
        if !(0.0..=1.0).contains(&self.tap_to_eve) {
            return Err(EveError::InvalidParam {
                field: "tap_to_eve",
                reason: "must be in [0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&self.measurement_throughput) {
            return Err(EveError::InvalidParam {
                field: "measurement_throughput",
                reason: "must be in [0, 1]",
            });
        }
        if !(self.gate_window_ns.0 < self.gate_window_ns.1) {
            return Err(EveError::InvalidParam {
                field: "gate_window_ns",
                reason: "start must be before end",
            });
        }
        if !(self.path_delay_ns >= 0.0) {
            return Err(EveError::InvalidParam {
                field: "path_delay_ns",
                reason: "must be non-negative",
            });
        }
        self.spcm.validate().map_err(|_| EveError::InvalidParam {
            field: "spcm",
            reason: "invalid detector parameters",
        })
    }

    pub fn gate_window_ps(&self) -> (i64, i64) {
        (ns_to_ps(self.gate_window_ns.0), ns_to_ps(self.gate_window_ns.1))
    }
}

/// Intercept one photon propagating toward Eve.
///
/// Returns her counter's click, if any. `state` tracks her counter's dead
/// time across the run.
pub fn eve_intercept(
    photon: &PhotonEvent,
    setup: &EveSetup,
    state: &mut DetectorState,
    click_id: u64,
    rng: &mut StreamRng,
) -> Result<Option<Detection>, EveError> {
    let reach = setup.tap_to_eve * setup.measurement_throughput;
    if rng.random::<f64>() >= reach {
        return Ok(None);
    }
    let distorted = waveplate_apply(&photon.polarization, &setup.distortion)?;
    let projection = pbs_project(&distorted, &setup.analysis_pbs)?;
    if rng.random::<f64>() >= projection.p_transmit {
        return Ok(None);
    }
    let at_counter = PhotonEvent {
        time_ps: photon.time_ps + ns_to_ps(setup.path_delay_ns),
        polarization: projection.transmitted,
        ..*photon
    };
    Ok(apd_detect(
        &at_counter,
        &setup.spcm,
        state,
        DetectorId::Eve,
        click_id,
        rng,
    ))
}

fn ensure_sorted(clicks: &[ClickRecord], which: &'static str) -> Result<(), EveError> {
    if clicks.windows(2).any(|w| w[1].time_ps < w[0].time_ps) {
        Err(EveError::UnsortedClicks { which })
    } else {
        Ok(())
    }
}

/// Pair Eve clicks with Bob clicks inside the gate window.
///
/// A pair requires `eve.time - bob.time` within `window_ps` (both edges
/// inclusive). Each Eve click pairs with at most one Bob click: the
/// closest in time, ties broken by the earlier Bob click. Bob clicks may
/// appear in several pairs. Both inputs must be time-sorted.
pub fn gate_coincidences(
    bob_clicks: &[ClickRecord],
    eve_clicks: &[ClickRecord],
    window_ps: (i64, i64),
) -> Result<Vec<(ClickRecord, ClickRecord)>, EveError> {
    if window_ps.0 > window_ps.1 {
        return Err(EveError::InvalidGateWindow);
    }
    ensure_sorted(bob_clicks, "bob")?;
    ensure_sorted(eve_clicks, "eve")?;

    let mut pairs = Vec::new();
    let mut window_start = 0usize;
    for eve in eve_clicks {
        let lo = eve.time_ps - window_ps.1;
        let hi = eve.time_ps - window_ps.0;
        while window_start < bob_clicks.len() && bob_clicks[window_start].time_ps < lo {
            window_start += 1;
        }
        let mut best: Option<&ClickRecord> = None;
        for bob in &bob_clicks[window_start..] {
            if bob.time_ps > hi {
                break;
            }
            let delta = (eve.time_ps - bob.time_ps).abs();
            best = match best {
                None => Some(bob),
                Some(current) => {
                    let current_delta = (eve.time_ps - current.time_ps).abs();
                    if delta < current_delta
                        || (delta == current_delta && bob.time_ps < current.time_ps)
                    {
                        Some(bob)
                    } else {
                        Some(current)
                    }
                }
            };
        }
        if let Some(bob) = best {
            pairs.push((*bob, *eve));
        }
    }
    Ok(pairs)
}

/// Coincidence rate of one scan angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRate {
    pub angle_deg: f64,
    pub coincidences: u64,
    pub bob_clicks: u64,
    /// Coincidences per Bob click.
    pub rate: f64,
}

/// Result of scanning Eve's analysis PBS over a list of angles.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleScanResult {
    pub rates: Vec<AngleRate>,
    pub argmax_deg: f64,
    pub argmin_deg: f64,
}

/// Run the scenario once per PBS angle on independent rng streams and
/// report the gated coincidence rate at each angle.
///
/// Angle `i` runs with `trial_index = i`, so the scan is reproducible and
/// order-independent.
pub fn angle_scan(
    config: &crate::engine::ScenarioConfig,
    angles_deg: &[f64],
) -> Result<AngleScanResult, crate::engine::EngineError> {
    if angles_deg.is_empty() {
        return Err(crate::engine::EngineError::Eve(EveError::EmptyAngleList));
    }
    let mut rates = Vec::with_capacity(angles_deg.len());
    for (i, &angle) in angles_deg.iter().enumerate() {
        rates.push(scan_point(config, i as u64, angle)?);
    }
    let argmax = rates
        .iter()
        .fold(rates[0], |best, r| if r.rate > best.rate { *r } else { best });
    let argmin = rates
        .iter()
        .fold(rates[0], |best, r| if r.rate < best.rate { *r } else { best });
    Ok(AngleScanResult {
        rates,
        argmax_deg: argmax.angle_deg,
        argmin_deg: argmin.angle_deg,
    })
}

/// Evaluate one scan angle. Exposed so callers can distribute scan points
/// over threads; results are identical to [`angle_scan`] for the same
/// `trial_index`.
pub fn scan_point(
    config: &crate::engine::ScenarioConfig,
    trial_index: u64,
    angle_deg: f64,
) -> Result<AngleRate, crate::engine::EngineError> {
    let mut trial_config = config.clone();
    trial_config.trial_index = trial_index;
    let eve = trial_config
        .eve_mut()
        .ok_or(crate::engine::EngineError::MissingEve)?;
    eve.analysis_pbs = PbsSpec::new(angle_deg, eve.analysis_pbs.extinction_ratio())
        .map_err(EveError::Optics)?;
    let window = eve.gate_window_ps();
    let log = crate::engine::run_scenario(&trial_config)?;
    let pairs = gate_coincidences(&log.bob_clicks, &log.eve_clicks, window)?;
    let bob_clicks = log.bob_clicks.len() as u64;
    Ok(AngleRate {
        angle_deg,
        coincidences: pairs.len() as u64,
        bob_clicks,
        rate: if bob_clicks == 0 {
            0.0
        } else {
            pairs.len() as f64 / bob_clicks as f64
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{ClickCause, PhotonOrigin, PS_PER_NS};
    use crate::optics::JonesVector;
    use crate::rng::{RngStreamKey, StreamDomain};

    fn test_rng(event: u64) -> StreamRng {
        RngStreamKey::new(0xEE, 0, StreamDomain::Intercept, event).stream()
    }

    fn click(id: u64, detector: DetectorId, time_ps: i64) -> ClickRecord {
        ClickRecord {
            id,
            detector,
            time_ps,
            cause: ClickCause::Signal,
            parent: None,
        }
    }

    fn channel_photon(state: JonesVector) -> PhotonEvent {
        PhotonEvent {
            time_ps: 0,
            wavelength_nm: 808.0,
            polarization: state,
            origin: PhotonOrigin::Backflash {
                click_id: 0,
                detector: DetectorId::BobH,
            },
        }
    }

    #[test]
    fn intercept_click_probability_is_the_documented_product() {
        let mut setup = EveSetup::calibration_default();
        setup.spcm.dead_time_ns = 0.0;
        let expected = 0.9 * 0.6 * 1.0 * 0.6;
        let n = 100_000u32;
        let mut state = DetectorState::live();
        let mut rng = test_rng(1);
        let mut clicks = 0u32;
        for i in 0..n {
            if eve_intercept(
                &channel_photon(JonesVector::horizontal()),
                &setup,
                &mut state,
                i as u64,
                &mut rng,
            )
            .unwrap()
            .is_some()
            {
                clicks += 1;
            }
        }
        let sigma = (expected * (1.0 - expected) * n as f64).sqrt();
        assert!(
            (clicks as f64 - expected * n as f64).abs() <= 3.0 * sigma,
            "clicks {clicks} vs {}",
            expected * n as f64
        );
    }

    #[test]
    fn orthogonal_photon_leaks_at_inverse_extinction() {
        let mut setup = EveSetup::calibration_default();
        setup.tap_to_eve = 1.0;
        setup.measurement_throughput = 1.0;
        setup.analysis_pbs = PbsSpec::new(0.0, 167.0).unwrap();
        setup.spcm.efficiency = crate::devices::EfficiencyCurve::flat(1.0).unwrap();
        setup.spcm.dead_time_ns = 0.0;
        let expected = 1.0 / 168.0;
        let n = 200_000u32;
        let mut state = DetectorState::live();
        let mut rng = test_rng(2);
        let mut clicks = 0u32;
        for i in 0..n {
            if eve_intercept(
                &channel_photon(JonesVector::vertical()),
                &setup,
                &mut state,
                i as u64,
                &mut rng,
            )
            .unwrap()
            .is_some()
            {
                clicks += 1;
            }
        }
        let sigma = (expected * (1.0 - expected) * n as f64).sqrt();
        assert!(
            (clicks as f64 - expected * n as f64).abs() <= 3.0 * sigma,
            "clicks {clicks} vs {}",
            expected * n as f64
        );
    }

    #[test]
    fn gate_pairs_click_inside_window() {
        let bob = [click(0, DetectorId::BobH, 0)];
        let eve = [click(1, DetectorId::Eve, 27 * PS_PER_NS)];
        let window = (25 * PS_PER_NS, 30 * PS_PER_NS);
        let pairs = gate_coincidences(&bob, &eve, window).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].0.id, 0);
        assert_eq!(pairs[0].1.id, 1);
    }

    #[test]
    fn gate_window_edges_are_inclusive() {
        let bob = [click(0, DetectorId::BobH, 0)];
        let window = (25 * PS_PER_NS, 30 * PS_PER_NS);
        for (time, expected) in [
            (25 * PS_PER_NS, 1),
            (30 * PS_PER_NS, 1),
            (25 * PS_PER_NS - 1, 0),
            (30 * PS_PER_NS + 1, 0),
        ] {
            let eve = [click(1, DetectorId::Eve, time)];
            assert_eq!(
                gate_coincidences(&bob, &eve, window).unwrap().len(),
                expected,
                "eve at {time}"
            );
        }
    }

    #[test]
    fn empty_eve_list_yields_no_pairs() {
        let bob = [click(0, DetectorId::BobH, 0)];
        assert!(gate_coincidences(&bob, &[], (0, 100)).unwrap().is_empty());
    }

    #[test]
    fn unsorted_input_is_an_error() {
        let bob = [
            click(0, DetectorId::BobH, 100),
            click(1, DetectorId::BobH, 50),
        ];
        assert!(matches!(
            gate_coincidences(&bob, &[], (0, 10)),
            Err(EveError::UnsortedClicks { which: "bob" })
        ));
        let eve = [click(2, DetectorId::Eve, 9), click(3, DetectorId::Eve, 3)];
        assert!(matches!(
            gate_coincidences(&[], &eve, (0, 10)),
            Err(EveError::UnsortedClicks { which: "eve" })
        ));
    }

    /// Exhaustive all-pairs pairing with the same window and tie rule.
    fn brute_force_pairs(
        bob: &[ClickRecord],
        eve: &[ClickRecord],
        window: (i64, i64),
    ) -> Vec<(ClickRecord, ClickRecord)> {
        let mut pairs = Vec::new();
        for e in eve {
            let mut best: Option<&ClickRecord> = None;
            for b in bob {
                let delta = e.time_ps - b.time_ps;
                if delta < window.0 || delta > window.1 {
                    continue;
                }
                best = match best {
                    None => Some(b),
                    Some(current) => {
                        let d_new = delta.abs();
                        let d_cur = (e.time_ps - current.time_ps).abs();
                        if d_new < d_cur || (d_new == d_cur && b.time_ps < current.time_ps) {
                            Some(b)
                        } else {
                            Some(current)
                        }
                    }
                };
            }
            if let Some(b) = best {
                pairs.push((*b, *e));
            }
        }
        pairs
    }

    #[test]
    fn gating_matches_brute_force_oracle_on_random_instances() {
        use rand::Rng;
        for instance in 0..1000u64 {
            let mut rng = test_rng(10_000 + instance);
            let n_bob = rng.random_range(0..40);
            let n_eve = rng.random_range(0..40);
            let mut bob: Vec<ClickRecord> = (0..n_bob)
                .map(|i| click(i, DetectorId::BobH, rng.random_range(0..2_000)))
                .collect();
            let mut eve: Vec<ClickRecord> = (0..n_eve)
                .map(|i| click(1_000 + i, DetectorId::Eve, rng.random_range(0..2_000)))
                .collect();
            bob.sort_by_key(|c| c.time_ps);
            eve.sort_by_key(|c| c.time_ps);
            let a = rng.random_range(-200..200);
            let b = a + rng.random_range(0..300);
            let window = (a, b);
            let fast = gate_coincidences(&bob, &eve, window).unwrap();
            let slow = brute_force_pairs(&bob, &eve, window);
            assert_eq!(fast, slow, "instance {instance} window {window:?}");
            // Gating soundness: window predicate holds, no eve click twice.
            let mut seen = Vec::new();
            for (b, e) in &fast {
                let delta = e.time_ps - b.time_ps;
                assert!(delta >= window.0 && delta <= window.1);
                assert!(!seen.contains(&e.id));
                seen.push(e.id);
            }
        }
    }

    #[test]
    fn distortion_on_v_axis_degrades_da_but_not_hv() {
        // Analytic scan of the distorted eigenstates: the max/min rate
        // ratio over the analyzer angle falls monotonically with the
        // retardance for D, and stays flat for H.
        let scan_ratio = |state: &JonesVector, retardance: f64| {
            let distortion = WaveplateSpec::new(retardance, 90.0);
            let distorted = waveplate_apply(state, &distortion).unwrap();
            let mut max: f64 = 0.0;
            let mut min: f64 = 1.0;
            for i in 0..720 {
                let pbs = PbsSpec::new(i as f64 * 0.25, 1e9).unwrap();
                let p = pbs_project(&distorted, &pbs).unwrap().p_transmit;
                max = max.max(p);
                min = min.min(p);
            }
            max / min.max(1e-15)
        };
        let retardances = [0.0, 0.3, 0.6, 0.9, 1.2, core::f64::consts::FRAC_PI_2];
        let ratio_h_undistorted = scan_ratio(&JonesVector::horizontal(), 0.0);
        let mut previous = f64::INFINITY;
        for &r in &retardances {
            let ratio_d = scan_ratio(&JonesVector::diagonal(), r);
            assert!(
                ratio_d < previous || (r == 0.0),
                "D ratio not decreasing at retardance {r}: {ratio_d} vs {previous}"
            );
            previous = ratio_d;

            // H is an eigenvector of a V-axis retarder: its ratio stays at
            // the analyzer's own extinction bound.
            let ratio_h = scan_ratio(&JonesVector::horizontal(), r);
            assert!(
                (ratio_h / ratio_h_undistorted - 1.0).abs() < 1e-6,
                "H ratio changed at retardance {r}: {ratio_h}"
            );
        }
        // Quarter-wave distortion makes D fully circular: flat response.
        assert!((previous - 1.0).abs() < 1e-6);
    }

    #[test]
    fn setup_validation_names_fields() {
        let mut setup = EveSetup::calibration_default();
        setup.tap_to_eve = -0.1;
        assert!(matches!(
            setup.validate(),
            Err(EveError::InvalidParam {
                field: "tap_to_eve",
                ..
            })
        ));
        let mut setup = EveSetup::calibration_default();
        setup.gate_window_ns = (30.0, 25.0);
        assert!(setup.validate().is_err());
    }
}
