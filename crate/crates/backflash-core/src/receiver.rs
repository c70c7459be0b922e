//! Passive-basis-choice polarization analyzer.
//!
//! Forward direction: an incoming photon passes the entrance filter and
//! insertion loss, a beamsplitter picks the measurement basis, and the
//! basis PBS routes it to one of four detector channels (H, V, D, A).
//!
//! Reverse direction: a backflash photon emitted by a detector exits
//! through its channel's PBS port, so a survivor leaves the receiver in
//! that channel's eigenstate, attenuated by the per-channel reverse
//! transmission and the entrance filter. The configured reverse
//! transmission is the polarization-aligned value; the factor-1/2 cost of
//! unpolarized emission arises from the PBS projection itself.

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::event::{ns_to_ps, PhotonEvent};
use crate::optics::{
    filter_transmission, pbs_project, FilterSpec, JonesVector, OpticsError, PbsSpec,
};
use crate::rng::StreamRng;
use alloc::vec::Vec;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReceiverError {
    #[error("invalid receiver parameter `{field}`: {reason}")]
    InvalidParam {
        field: &'static str,
        reason: &'static str,
    },
    #[error("optics error: {0}")]
    Optics(#[from] OpticsError),
    #[error("output power exceeds input power")]
    GainInReverseMeasurement,
    #[error("input power must be positive")]
    NonPositiveInputPower,
}

/// One of the four detector channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    H,
    V,
    D,
    A,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::H, Channel::V, Channel::D, Channel::A];

    pub fn index(self) -> usize {
        match self {
            Channel::H => 0,
            Channel::V => 1,
            Channel::D => 2,
            Channel::A => 3,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            Channel::H | Channel::V => Basis::HV,
            Channel::D | Channel::A => Basis::DA,
        }
    }

    /// The orthogonal channel within the same basis.
    pub fn conjugate(self) -> Channel {
        match self {
            Channel::H => Channel::V,
            Channel::V => Channel::H,
            Channel::D => Channel::A,
            Channel::A => Channel::D,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Channel::H => "H",
            Channel::V => "V",
            Channel::D => "D",
            Channel::A => "A",
        }
    }
}

impl core::fmt::Display for Channel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

/// Measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    HV,
    DA,
}

/// A point reflector inside the receiver, modeled by its one-way optical
/// delay from the entrance and an effective round-trip reflectance seen at
/// the entrance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionTap {
    pub delay_ns: f64,
    pub reflectance: f64,
}

/// Bob's receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverModel {
    /// Probability that the basis beamsplitter sends a photon to the HV
    /// basis arm.
    pub basis_bs_ratio: f64,
    /// PBS of the HV arm; its axis is the H channel axis, V is +90 deg.
    pub hv_pbs: PbsSpec,
    /// PBS of the DA arm; its axis is the D channel axis, A is +90 deg.
    pub da_pbs: PbsSpec,
    /// Forward insertion transmission of the receiver optics.
    pub forward_transmission: f64,
    /// Aligned-polarization reverse transmission per channel (H, V, D, A).
    pub reverse_transmission: [f64; 4],
    pub entrance_filter: Option<FilterSpec>,
    /// One-way optical delay from entrance to each detector, ns.
    pub channel_delays_ns: [f64; 4],
    pub reflection_taps: Vec<ReflectionTap>,
}

/// Average measured reverse transmission (range 0.088 to 0.094).
pub const REVERSE_TRANSMISSION_DEFAULT: f64 = 0.091;

impl ReceiverModel {
    /// Ideal-extinction receiver with a 50:50 basis split, lossless
    /// forward path, and the default reverse transmission on each channel.
    pub fn ideal() -> Self {
        Self {
            basis_bs_ratio: 0.5,
            hv_pbs: PbsSpec::ideal(0.0),
            da_pbs: PbsSpec::ideal(45.0),
            forward_transmission: 1.0,
            reverse_transmission: [REVERSE_TRANSMISSION_DEFAULT; 4],
            entrance_filter: None,
            channel_delays_ns: [12.5; 4],
            reflection_taps: Vec::new(),
        }
    }

    /// Default internal reflector set: front optics, fiber splice, and
    /// detector facet. Reflectances are placeholders for configuration.
    pub fn default_taps() -> Vec<ReflectionTap> {
        alloc::vec![
            ReflectionTap {
                delay_ns: 2.0,
                reflectance: 1e-4,
            },
            ReflectionTap {
                delay_ns: 5.0,
                reflectance: 1e-4,
            },
            ReflectionTap {
                delay_ns: 12.5,
                reflectance: 1e-4,
            },
        ]
    }

    pub fn validate(&self) -> Result<(), ReceiverError> {
        if !(0.0..=1.0).contains(&self.basis_bs_ratio) {
            return Err(ReceiverError::InvalidParam {
                field: "basis_bs_ratio",
                reason: "must be in [0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&self.forward_transmission) {
            return Err(ReceiverError::InvalidParam {
                field: "forward_transmission",
                reason: "must be in [0, 1]",
            });
        }
        if self
            .reverse_transmission
            .iter()
            .any(|t| !(0.0..=1.0).contains(t))
        {
            return Err(ReceiverError::InvalidParam {
                field: "reverse_transmission",
                reason: "must be in [0, 1]",
            });
        }
        if self.channel_delays_ns.iter().any(|d| !(*d >= 0.0)) {
            return Err(ReceiverError::InvalidParam {
                field: "channel_delays_ns",
                reason: "must be non-negative",
            });
        }
        for tap in &self.reflection_taps {
            if !(0.0..=1.0).contains(&tap.reflectance) || !(tap.delay_ns >= 0.0) {
                return Err(ReceiverError::InvalidParam {
                    field: "reflection_taps",
                    reason: "delay must be non-negative and reflectance in [0, 1]",
                });
            }
        }
        Ok(())
    }

    /// Polarization axis of a channel, degrees.
    pub fn channel_axis_deg(&self, channel: Channel) -> f64 {
        match channel {
            Channel::H => self.hv_pbs.axis_deg(),
            Channel::V => crate::optics::normalize_angle_deg(self.hv_pbs.axis_deg() + 90.0),
            Channel::D => self.da_pbs.axis_deg(),
            Channel::A => crate::optics::normalize_angle_deg(self.da_pbs.axis_deg() + 90.0),
        }
    }

    /// PBS eigenstate a reverse photon from `channel` carries out of the
    /// receiver.
    pub fn channel_eigenstate(&self, channel: Channel) -> JonesVector {
        match channel {
            Channel::H => self.hv_pbs.transmit_eigenstate(),
            Channel::V => self.hv_pbs.reflect_eigenstate(),
            Channel::D => self.da_pbs.transmit_eigenstate(),
            Channel::A => self.da_pbs.reflect_eigenstate(),
        }
    }

    fn filter_factor(&self, wavelength_nm: f64) -> f64 {
        self.entrance_filter
            .as_ref()
            .map_or(1.0, |f| filter_transmission(wavelength_nm, f))
    }

    /// Probability that a photon entering `channel`'s PBS exits through
    /// that channel's port.
    fn port_exit_probability(
        &self,
        state: &JonesVector,
        channel: Channel,
    ) -> Result<f64, OpticsError> {
        let pbs = match channel.basis() {
            Basis::HV => &self.hv_pbs,
            Basis::DA => &self.da_pbs,
        };
        let projection = pbs_project(state, pbs)?;
        Ok(match channel {
            Channel::H | Channel::D => projection.p_transmit,
            Channel::V | Channel::A => projection.p_reflect(),
        })
    }
}

/// Analytic forward routing probabilities for one polarization state and
/// wavelength. Channel probabilities plus `loss` sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardProbabilities {
    pub per_channel: [f64; 4],
    pub loss: f64,
}

pub fn forward_probabilities(
    state: &JonesVector,
    wavelength_nm: f64,
    model: &ReceiverModel,
) -> Result<ForwardProbabilities, ReceiverError> {
    let survival = model.forward_transmission * model.filter_factor(wavelength_nm);
    let hv = pbs_project(state, &model.hv_pbs)?;
    let da = pbs_project(state, &model.da_pbs)?;
    let p_hv_arm = model.basis_bs_ratio;
    let per_channel = [
        survival * p_hv_arm * hv.p_transmit,
        survival * p_hv_arm * hv.p_reflect(),
        survival * (1.0 - p_hv_arm) * da.p_transmit,
        survival * (1.0 - p_hv_arm) * da.p_reflect(),
    ];
    Ok(ForwardProbabilities {
        per_channel,
        loss: 1.0 - survival,
    })
}

/// Route one photon forward through the receiver.
///
/// Returns the channel it lands on and the arrival time at that channel's
/// detector, or `None` if the photon is lost.
pub fn forward_route(
    photon: &PhotonEvent,
    model: &ReceiverModel,
    rng: &mut StreamRng,
) -> Result<Option<(Channel, i64)>, ReceiverError> {
    let survival = model.forward_transmission * model.filter_factor(photon.wavelength_nm);
    if survival < 1.0 && rng.random::<f64>() >= survival {
        return Ok(None);
    }
    let basis = if rng.random::<f64>() < model.basis_bs_ratio {
        Basis::HV
    } else {
        Basis::DA
    };
    let pbs = match basis {
        Basis::HV => &model.hv_pbs,
        Basis::DA => &model.da_pbs,
    };
    let projection = pbs_project(&photon.polarization, pbs)?;
    let transmitted = rng.random::<f64>() < projection.p_transmit;
    let channel = match (basis, transmitted) {
        (Basis::HV, true) => Channel::H,
        (Basis::HV, false) => Channel::V,
        (Basis::DA, true) => Channel::D,
        (Basis::DA, false) => Channel::A,
    };
    let arrival = photon.time_ps + ns_to_ps(model.channel_delays_ns[channel.index()]);
    Ok(Some((channel, arrival)))
}

/// Route a backflash photon emitted at `origin_channel`'s detector back out
/// of the receiver.
///
/// Survival probability is the photon's projection onto the origin
/// channel's PBS port, times that channel's reverse transmission, times
/// the entrance filter. A single uniform decides survival, so tightening
/// any factor on the same rng stream can only remove survivors. Survivors
/// leave in the channel eigenstate with the channel delay added.
pub fn reverse_route(
    photon: &PhotonEvent,
    origin_channel: Channel,
    model: &ReceiverModel,
    rng: &mut StreamRng,
) -> Result<Option<PhotonEvent>, ReceiverError> {
    let p_exit = model.port_exit_probability(&photon.polarization, origin_channel)?;
    let survival = p_exit
        * model.reverse_transmission[origin_channel.index()]
        * model.filter_factor(photon.wavelength_nm);
    if rng.random::<f64>() >= survival {
        return Ok(None);
    }
    Ok(Some(PhotonEvent {
        time_ps: photon.time_ps + ns_to_ps(model.channel_delays_ns[origin_channel.index()]),
        wavelength_nm: photon.wavelength_nm,
        polarization: model.channel_eigenstate(origin_channel),
        origin: photon.origin,
    }))
}

/// Reverse transmission efficiency from a power-meter measurement:
/// `T_b = p_out / p_in`.
pub fn reverse_transmission_estimate(p_in: f64, p_out: f64) -> Result<f64, ReceiverError> {
    if !(p_in > 0.0) {
        return Err(ReceiverError::NonPositiveInputPower);
    }
    if p_out > p_in {
        return Err(ReceiverError::GainInReverseMeasurement);
    }
    Ok(p_out / p_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{PhotonOrigin, PS_PER_NS};
    use crate::optics::FilterSpec;
    use crate::rng::{RngStreamKey, StreamDomain};
    use num_complex::Complex64;

    fn test_rng(event: u64) -> StreamRng {
        RngStreamKey::new(0xBB, 0, StreamDomain::Pulse, event).stream()
    }

    fn photon(state: JonesVector) -> PhotonEvent {
        PhotonEvent {
            time_ps: 1_000,
            wavelength_nm: 785.0,
            polarization: state,
            origin: PhotonOrigin::Pulse { pulse_id: 0 },
        }
    }

    fn table_extinction_model() -> ReceiverModel {
        let mut model = ReceiverModel::ideal();
        model.hv_pbs = PbsSpec::new(0.0, 167.0).unwrap();
        model.da_pbs = PbsSpec::new(45.0, 10.7).unwrap();
        model
    }

    #[test]
    fn ideal_routing_probabilities_for_h_photon() {
        let model = ReceiverModel::ideal();
        let probs =
            forward_probabilities(&JonesVector::horizontal(), 785.0, &model).unwrap();
        assert!((probs.per_channel[0] - 0.5).abs() < 1e-12);
        assert!(probs.per_channel[1].abs() < 1e-12);
        assert!((probs.per_channel[2] - 0.25).abs() < 1e-12);
        assert!((probs.per_channel[3] - 0.25).abs() < 1e-12);
        assert!(probs.loss.abs() < 1e-12);
    }

    #[test]
    fn ideal_routing_probabilities_for_d_photon() {
        let model = ReceiverModel::ideal();
        let probs = forward_probabilities(&JonesVector::diagonal(), 785.0, &model).unwrap();
        assert!((probs.per_channel[2] - 0.5).abs() < 1e-12);
        assert!(probs.per_channel[3].abs() < 1e-12);
        assert!((probs.per_channel[0] - 0.25).abs() < 1e-12);
        assert!((probs.per_channel[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn forward_probability_closure_for_random_states() {
        use rand::Rng;
        let mut model = table_extinction_model();
        model.forward_transmission = 0.83;
        model.entrance_filter = Some(FilterSpec::top_hat(785.0, 10.0, 0.9).unwrap());
        let mut rng = test_rng(1);
        for _ in 0..100 {
            let state = JonesVector::new_normalized(
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
            )
            .unwrap();
            let probs = forward_probabilities(&state, 785.0, &model).unwrap();
            let total: f64 = probs.per_channel.iter().sum::<f64>() + probs.loss;
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_extinction_leaks_h_photons_into_v() {
        let model = table_extinction_model();
        let n = 1_000_000u32;
        let mut rng = test_rng(2);
        let mut counts = [0u32; 4];
        for _ in 0..n {
            if let Some((ch, _)) =
                forward_route(&photon(JonesVector::horizontal()), &model, &mut rng).unwrap()
            {
                counts[ch.index()] += 1;
            }
        }
        // Within the HV arm an H photon exits V with probability 1/168.
        let hv_total = (counts[0] + counts[1]) as f64;
        let v_fraction = counts[1] as f64 / hv_total;
        let expected = 1.0 / 168.0;
        let sigma = (expected * (1.0 - expected) / hv_total).sqrt();
        assert!(
            (v_fraction - expected).abs() <= 3.0 * sigma,
            "v fraction {v_fraction} vs {expected}"
        );
        // And the count ratio V/H approximates 1/167.
        let ratio = counts[1] as f64 / counts[0] as f64;
        assert!((ratio - 1.0 / 167.0).abs() <= 4.0 * sigma, "ratio {ratio}");
    }

    #[test]
    fn sampled_routing_matches_analytic_probabilities() {
        let mut model = table_extinction_model();
        model.forward_transmission = 0.9;
        model.basis_bs_ratio = 0.4;
        let state = JonesVector::linear_deg(30.0);
        let probs = forward_probabilities(&state, 785.0, &model).unwrap();
        let n = 200_000u32;
        let mut rng = test_rng(3);
        let mut counts = [0u32; 4];
        let mut lost = 0u32;
        for _ in 0..n {
            match forward_route(&photon(state), &model, &mut rng).unwrap() {
                Some((ch, _)) => counts[ch.index()] += 1,
                None => lost += 1,
            }
        }
        for ch in Channel::ALL {
            let expected = probs.per_channel[ch.index()] * n as f64;
            let sigma = (probs.per_channel[ch.index()]
                * (1.0 - probs.per_channel[ch.index()])
                * n as f64)
                .sqrt();
            assert!(
                (counts[ch.index()] as f64 - expected).abs() <= 3.5 * sigma,
                "{ch}: {} vs {expected}",
                counts[ch.index()]
            );
        }
        let sigma_loss = (probs.loss * (1.0 - probs.loss) * n as f64).sqrt();
        assert!((lost as f64 - probs.loss * n as f64).abs() <= 3.5 * sigma_loss);
    }

    #[test]
    fn arrival_time_includes_channel_delay() {
        let mut model = ReceiverModel::ideal();
        model.channel_delays_ns = [10.0, 11.0, 12.0, 13.0];
        let mut rng = test_rng(4);
        let (ch, arrival) =
            forward_route(&photon(JonesVector::horizontal()), &model, &mut rng)
                .unwrap()
                .unwrap();
        let expected = 1_000 + (model.channel_delays_ns[ch.index()] * PS_PER_NS as f64) as i64;
        assert_eq!(arrival, expected);
    }

    fn random_linear_photon(rng: &mut StreamRng, channel: Channel, click_id: u64) -> PhotonEvent {
        use rand::Rng;
        PhotonEvent {
            time_ps: 0,
            wavelength_nm: 808.0,
            polarization: JonesVector::linear_deg(rng.random_range(0.0..180.0)),
            origin: PhotonOrigin::Backflash {
                click_id,
                detector: crate::event::DetectorId::from_channel(channel),
            },
        }
    }

    #[test]
    fn unpolarized_reverse_survival_is_half_at_unit_transmission() {
        let mut model = ReceiverModel::ideal();
        model.reverse_transmission = [1.0; 4];
        let n = 100_000u32;
        let mut rng = test_rng(5);
        let mut survived = 0u32;
        for i in 0..n {
            let p = random_linear_photon(&mut rng, Channel::H, i as u64);
            if reverse_route(&p, Channel::H, &model, &mut rng).unwrap().is_some() {
                survived += 1;
            }
        }
        let sigma = (0.25f64 * n as f64).sqrt();
        assert!(
            (survived as f64 - 0.5 * n as f64).abs() <= 3.0 * sigma,
            "survived {survived}"
        );
    }

    #[test]
    fn unpolarized_reverse_survival_scales_with_reverse_transmission() {
        let model = ReceiverModel::ideal(); // T_b = 0.091 everywhere
        let n = 100_000u32;
        let mut rng = test_rng(6);
        let mut survived = 0u32;
        for i in 0..n {
            let p = random_linear_photon(&mut rng, Channel::V, i as u64);
            if reverse_route(&p, Channel::V, &model, &mut rng).unwrap().is_some() {
                survived += 1;
            }
        }
        let expected = 0.5 * 0.091;
        let sigma = (expected * (1.0 - expected) * n as f64).sqrt();
        assert!(
            (survived as f64 - expected * n as f64).abs() <= 3.0 * sigma,
            "survived {survived} vs {}",
            expected * n as f64
        );
    }

    #[test]
    fn survivors_carry_the_channel_eigenstate() {
        let model = ReceiverModel::ideal();
        let mut rng = test_rng(7);
        for channel in Channel::ALL {
            let eigen = model.channel_eigenstate(channel);
            let mut seen = 0;
            for i in 0..2_000 {
                let p = random_linear_photon(&mut rng, channel, i);
                if let Some(out) = reverse_route(&p, channel, &model, &mut rng).unwrap() {
                    seen += 1;
                    assert!((out.polarization.overlap_probability(&eigen) - 1.0).abs() < 1e-12);
                    assert_eq!(out.origin, p.origin);
                }
            }
            assert!(seen > 0);
        }
    }

    #[test]
    fn filter_can_only_remove_reverse_survivors() {
        // Single-draw survival: on identical streams, the filtered model's
        // survivor set is a subset of the unfiltered one.
        let unfiltered = ReceiverModel::ideal();
        let mut filtered = ReceiverModel::ideal();
        filtered.entrance_filter = Some(FilterSpec::top_hat(808.0, 3.0, 0.8).unwrap());
        let mut survivors_unfiltered = alloc::vec::Vec::new();
        let mut survivors_filtered = alloc::vec::Vec::new();
        for i in 0..20_000u64 {
            let mut gen_rng = test_rng(1_000_000 + i);
            use rand::Rng;
            let photon = PhotonEvent {
                time_ps: 0,
                wavelength_nm: 800.0 + gen_rng.random::<f64>() * 16.0,
                polarization: JonesVector::linear_deg(gen_rng.random_range(0.0..180.0)),
                origin: PhotonOrigin::Backflash {
                    click_id: i,
                    detector: crate::event::DetectorId::BobH,
                },
            };
            let mut rng_a = test_rng(2_000_000 + i);
            let mut rng_b = test_rng(2_000_000 + i);
            if reverse_route(&photon, Channel::H, &unfiltered, &mut rng_a)
                .unwrap()
                .is_some()
            {
                survivors_unfiltered.push(i);
            }
            if reverse_route(&photon, Channel::H, &filtered, &mut rng_b)
                .unwrap()
                .is_some()
            {
                survivors_filtered.push(i);
            }
        }
        assert!(survivors_filtered.len() <= survivors_unfiltered.len());
        assert!(survivors_filtered
            .iter()
            .all(|i| survivors_unfiltered.contains(i)));
        assert!(!survivors_filtered.is_empty());
    }

    #[test]
    fn reverse_photons_distinguish_origin_at_measured_extinction() {
        // Reverse survivors are pure eigenstates; measuring them through a
        // PBS with the measured extinction misidentifies H vs V with
        // probability 1/(1+167), D vs A with 1/(1+10.7).
        let model = ReceiverModel::ideal();
        let cases = [
            (Channel::H, Channel::V, PbsSpec::new(0.0, 167.0).unwrap()),
            (Channel::D, Channel::A, PbsSpec::new(45.0, 10.7).unwrap()),
        ];
        let mut rng = test_rng(8);
        for (aligned, orthogonal, pbs) in cases {
            let n = 100_000u32;
            let mut errors = 0u32;
            use rand::Rng;
            for _ in 0..n {
                let channel = if rng.random::<bool>() { aligned } else { orthogonal };
                let state = model.channel_eigenstate(channel);
                let p_transmit = pbs_project(&state, &pbs).unwrap().p_transmit;
                let transmitted = rng.random::<f64>() < p_transmit;
                let guess = if transmitted { aligned } else { orthogonal };
                if guess != channel {
                    errors += 1;
                }
            }
            let expected = 1.0 / (1.0 + pbs.extinction_ratio());
            let sigma = (expected * (1.0 - expected) * n as f64).sqrt();
            assert!(
                (errors as f64 - expected * n as f64).abs() <= 3.0 * sigma,
                "{aligned}/{orthogonal}: errors {errors} vs {}",
                expected * n as f64
            );
        }
    }

    #[test]
    fn reverse_transmission_estimate_values() {
        assert!((reverse_transmission_estimate(40.0, 3.64).unwrap() - 0.091).abs() < 1e-12);
        assert_eq!(reverse_transmission_estimate(5.0, 5.0).unwrap(), 1.0);
        assert_eq!(reverse_transmission_estimate(5.0, 0.0).unwrap(), 0.0);
        assert!(matches!(
            reverse_transmission_estimate(1.0, 2.0),
            Err(ReceiverError::GainInReverseMeasurement)
        ));
        assert!(reverse_transmission_estimate(0.0, 0.0).is_err());
    }

    #[test]
    fn model_validation_names_fields() {
        let mut model = ReceiverModel::ideal();
        model.basis_bs_ratio = 1.2;
        assert!(matches!(
            model.validate(),
            Err(ReceiverError::InvalidParam {
                field: "basis_bs_ratio",
                ..
            })
        ));
        let mut model = ReceiverModel::ideal();
        model.reverse_transmission[2] = -0.1;
        assert!(model.validate().is_err());
    }
}
