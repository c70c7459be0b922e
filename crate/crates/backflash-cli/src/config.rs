//! Scenario configuration files.
//!
//! Scenarios are TOML with units embedded in every field name (`period_ns`,
//! `dark_count_rate_hz`) so a value can never be read in the wrong unit.
//! The full schema, defaults included, is documented in `docs/formats.md`.

use backflash_core::devices::{ApdParams, BackflashProfile, EfficiencyCurve, SpectralDensity};
use backflash_core::eavesdropper::{EveSetup, GateReference};
use backflash_core::engine::{
    Apparatus, DetectorPairConfig, PolarizationPolicy, PulseTrainConfig, QkdReceiverConfig,
    ScenarioConfig,
};
use backflash_core::optics::{FilterProfile, FilterSpec, PbsSpec, WaveplateSpec};
use backflash_core::receiver::{ReceiverModel, ReflectionTap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: impl Into<String>, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.to_string(),
    }
}

/// Top-level scenario file. Also used verbatim inside run manifests.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: u64,
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_train: Option<PulseTrainFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver: Option<ReceiverFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detectors: Option<DetectorsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve: Option<EveFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_pair: Option<DetectorPairFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    QkdReceiver,
    DetectorPair,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PulseTrainFile {
    pub period_ns: f64,
    pub width_ns: f64,
    pub count: u64,
    pub mean_photons_per_pulse: f64,
    /// `"h" | "v" | "d" | "a" | "random-bb84"` or `{ fixed_deg = <angle> }`.
    pub polarization: PolarizationField,
    pub wavelength_nm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PolarizationField {
    Named(String),
    Fixed { fixed_deg: f64 },
}

impl PolarizationField {
    fn to_policy(&self) -> Result<PolarizationPolicy, ConfigError> {
        Ok(match self {
            PolarizationField::Fixed { fixed_deg } => PolarizationPolicy::FixedLinear(*fixed_deg),
            PolarizationField::Named(name) => match name.as_str() {
                "h" | "H" => PolarizationPolicy::FixedLinear(0.0),
                "v" | "V" => PolarizationPolicy::FixedLinear(90.0),
                "d" | "D" => PolarizationPolicy::FixedLinear(45.0),
                "a" | "A" => PolarizationPolicy::FixedLinear(135.0),
                "random-bb84" => PolarizationPolicy::RandomBb84,
                other => {
                    return Err(invalid(
                        "pulse_train.polarization",
                        format!("unknown polarization `{other}`"),
                    ))
                }
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReceiverFile {
    #[serde(default = "default_half")]
    pub basis_bs_ratio: f64,
    #[serde(default = "default_one")]
    pub forward_transmission: f64,
    #[serde(default)]
    pub h_axis_deg: f64,
    #[serde(default = "default_d_axis")]
    pub d_axis_deg: f64,
    /// `inf` selects an ideal PBS. The defaults assume forward extinction
    /// equals the measured reverse values (an assumption, not a measured
    /// forward figure).
    #[serde(default = "default_hv_extinction")]
    pub hv_extinction_ratio: f64,
    #[serde(default = "default_da_extinction")]
    pub da_extinction_ratio: f64,
    /// Aligned-polarization reverse transmission per channel (H, V, D, A).
    #[serde(default = "default_reverse_transmission")]
    pub reverse_transmission: [f64; 4],
    #[serde(default = "default_channel_delays")]
    pub channel_delays_ns: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entrance_filter: Option<FilterFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reflection_taps: Vec<TapFile>,
}

fn default_half() -> f64 {
    0.5
}
fn default_one() -> f64 {
    1.0
}
fn default_d_axis() -> f64 {
    45.0
}
fn default_inf() -> f64 {
    f64::INFINITY
}
fn default_hv_extinction() -> f64 {
    167.0
}
fn default_da_extinction() -> f64 {
    10.7
}
fn default_reverse_transmission() -> [f64; 4] {
    [backflash_core::receiver::REVERSE_TRANSMISSION_DEFAULT; 4]
}
fn default_channel_delays() -> [f64; 4] {
    [12.5; 4]
}

impl Default for ReceiverFile {
    fn default() -> Self {
        Self {
            basis_bs_ratio: default_half(),
            forward_transmission: default_one(),
            h_axis_deg: 0.0,
            d_axis_deg: default_d_axis(),
            hv_extinction_ratio: default_hv_extinction(),
            da_extinction_ratio: default_da_extinction(),
            reverse_transmission: default_reverse_transmission(),
            channel_delays_ns: default_channel_delays(),
            entrance_filter: None,
            reflection_taps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TapFile {
    pub delay_ns: f64,
    pub reflectance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FilterFile {
    pub center_nm: f64,
    pub bandwidth_fwhm_nm: f64,
    #[serde(default = "default_one")]
    pub peak_transmission: f64,
    #[serde(default)]
    pub profile: FilterProfileField,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FilterProfileField {
    #[default]
    TopHat,
    Gaussian,
}

impl FilterFile {
    fn to_spec(&self, key: &str) -> Result<FilterSpec, ConfigError> {
        let profile = match self.profile {
            FilterProfileField::TopHat => FilterProfile::TopHat,
            FilterProfileField::Gaussian => FilterProfile::Gaussian,
        };
        FilterSpec::new(
            self.center_nm,
            self.bandwidth_fwhm_nm,
            self.peak_transmission,
            profile,
        )
        .map_err(|e| invalid(key, e))
    }
}

/// One detector parameter table.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DetectorFile {
    /// `[[wavelength_nm, efficiency], ...]`; a single pair means a flat
    /// curve.
    #[serde(default = "default_efficiency")]
    pub efficiency: Vec<[f64; 2]>,
    #[serde(default = "default_dark_rate")]
    pub dark_count_rate_hz: f64,
    #[serde(default = "default_dead_time")]
    pub dead_time_ns: f64,
    #[serde(default = "default_backflash_prob")]
    pub backflash_prob: f64,
    #[serde(default = "default_electrons")]
    pub electrons_per_avalanche: f64,
    #[serde(default)]
    pub jitter_sigma_ps: f64,
    #[serde(default)]
    pub electronic_delay_ns: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backflash_profile: Option<ProfileFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumFile>,
}

fn default_efficiency() -> Vec<[f64; 2]> {
    vec![[785.0, 0.6]]
}
fn default_dark_rate() -> f64 {
    500.0
}
fn default_dead_time() -> f64 {
    50.0
}
fn default_backflash_prob() -> f64 {
    0.065
}
fn default_electrons() -> f64 {
    2.7e8
}

impl Default for DetectorFile {
    fn default() -> Self {
        Self {
            efficiency: default_efficiency(),
            dark_count_rate_hz: default_dark_rate(),
            dead_time_ns: default_dead_time(),
            backflash_prob: default_backflash_prob(),
            electrons_per_avalanche: default_electrons(),
            jitter_sigma_ps: 0.0,
            electronic_delay_ns: 0.0,
            backflash_profile: None,
            spectrum: None,
        }
    }
}

impl DetectorFile {
    pub fn to_params(&self, key: &str) -> Result<ApdParams, ConfigError> {
        let efficiency = EfficiencyCurve::new(
            self.efficiency.iter().map(|p| (p[0], p[1])).collect(),
        )
        .map_err(|e| invalid(format!("{key}.efficiency"), e))?;
        let profile = match &self.backflash_profile {
            Some(p) => BackflashProfile {
                rise_ns: p.rise_ns,
                decay_ns: p.decay_ns,
                quench_ns: p.quench_ns,
                residual_after_quench: p.residual_after_quench,
            },
            None => BackflashProfile::default(),
        };
        let spectrum = match &self.spectrum {
            Some(s) => s.to_density(&format!("{key}.spectrum"))?,
            None => SpectralDensity::broadband_default(),
        };
        let params = ApdParams {
            efficiency,
            dark_count_rate_hz: self.dark_count_rate_hz,
            dead_time_ns: self.dead_time_ns,
            backflash_prob: self.backflash_prob,
            electrons_per_avalanche: self.electrons_per_avalanche,
            profile,
            spectrum,
            jitter_sigma_ps: self.jitter_sigma_ps,
            electronic_delay_ns: self.electronic_delay_ns,
        };
        params
            .validate()
            .map_err(|e| invalid(key, e))?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub rise_ns: f64,
    pub decay_ns: f64,
    pub quench_ns: f64,
    pub residual_after_quench: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectrumFile {
    /// `[[wavelength_nm, relative_density], ...]`.
    pub points: Vec<[f64; 2]>,
    /// Optional plateau calibration: rescale the band so it carries the
    /// stated fraction of the total emission.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrated_band: Option<CalibratedBand>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CalibratedBand {
    pub lo_nm: f64,
    pub hi_nm: f64,
    pub fraction: f64,
}

impl SpectrumFile {
    fn to_density(&self, key: &str) -> Result<SpectralDensity, ConfigError> {
        let base = SpectralDensity::new(self.points.iter().map(|p| (p[0], p[1])).collect())
            .map_err(|e| invalid(key, e))?;
        match self.calibrated_band {
            Some(band) => base
                .with_band_fraction(band.lo_nm, band.hi_nm, band.fraction)
                .map_err(|e| invalid(format!("{key}.calibrated_band"), e)),
            None => Ok(base),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DetectorsFile {
    pub h: DetectorFile,
    pub v: DetectorFile,
    pub d: DetectorFile,
    pub a: DetectorFile,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EveFile {
    #[serde(default = "default_tap")]
    pub tap_to_eve: f64,
    #[serde(default = "default_throughput")]
    pub measurement_throughput: f64,
    #[serde(default)]
    pub analysis_angle_deg: f64,
    #[serde(default = "default_inf")]
    pub analysis_extinction_ratio: f64,
    #[serde(default)]
    pub distortion_retardance_rad: f64,
    #[serde(default = "default_distortion_axis")]
    pub distortion_axis_deg: f64,
    #[serde(default = "default_gate")]
    pub gate_window_ns: [f64; 2],
    #[serde(default)]
    pub gate_reference: GateReferenceField,
    #[serde(default = "default_path_delay")]
    pub path_delay_ns: f64,
    #[serde(default)]
    pub spcm: DetectorFile,
}

fn default_tap() -> f64 {
    0.9
}
fn default_throughput() -> f64 {
    0.6
}
fn default_distortion_axis() -> f64 {
    90.0
}
fn default_gate() -> [f64; 2] {
    [25.0, 30.0]
}
fn default_path_delay() -> f64 {
    12.5
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GateReferenceField {
    #[default]
    BobClick,
    AlicePulse,
}

impl EveFile {
    fn to_setup(&self) -> Result<EveSetup, ConfigError> {
        let analysis_pbs = if self.analysis_extinction_ratio.is_infinite() {
            PbsSpec::ideal(self.analysis_angle_deg)
        } else {
            PbsSpec::new(self.analysis_angle_deg, self.analysis_extinction_ratio)
                .map_err(|e| invalid("eve.analysis_extinction_ratio", e))?
        };
        let setup = EveSetup {
            tap_to_eve: self.tap_to_eve,
            measurement_throughput: self.measurement_throughput,
            analysis_pbs,
            distortion: WaveplateSpec::new(self.distortion_retardance_rad, self.distortion_axis_deg),
            spcm: self.spcm.to_params("eve.spcm")?,
            gate_window_ns: (self.gate_window_ns[0], self.gate_window_ns[1]),
            gate_reference: match self.gate_reference {
                GateReferenceField::BobClick => GateReference::BobClick,
                GateReferenceField::AlicePulse => GateReference::AlicePulse,
            },
            path_delay_ns: self.path_delay_ns,
        };
        setup.validate().map_err(|e| invalid("eve", e))?;
        Ok(setup)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DetectorPairFile {
    pub dut: DetectorFile,
    pub spcm: DetectorFile,
    pub clicks_target: u64,
    #[serde(default = "default_pair_transmission")]
    pub channel_transmission: f64,
    #[serde(default = "default_pair_delay")]
    pub optical_delay_ns: f64,
    #[serde(default)]
    pub induced_rate_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterFile>,
}

fn default_pair_transmission() -> f64 {
    0.97
}
fn default_pair_delay() -> f64 {
    10.0
}

/// What `analyze` computes from a run directory. Echoed in run manifests,
/// so a pipeline is reproducible from its outputs alone.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<HistogramSpec>,
    /// Peak detection threshold on the histogram, in background sigmas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_threshold_sigma: Option<f64>,
    /// Coincidence gate used for estimates, ns in the recorded timebase.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coincidence_window_ns: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pb_estimator: Option<PbEstimatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_leakage: Option<ExpectedLeakageSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HistogramSpec {
    pub bin_ns: f64,
    pub range_ns: [f64; 2],
    /// `bob-click`: start-stop intervals from the latest Bob/DUT click.
    /// `alice-pulse`: Eve click times folded by the pulse period.
    pub reference: GateReferenceField,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PbEstimatorSpec {
    pub efficiency: f64,
    pub channel_transmission: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExpectedLeakageSpec {
    pub efficiency: f64,
    pub eve_throughput: f64,
    pub reverse_transmission: f64,
    pub backflash_prob: f64,
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Build the engine scenario, applying an optional seed override.
    pub fn to_scenario(&self, seed_override: Option<u64>) -> Result<ScenarioConfig, ConfigError> {
        let seed = seed_override.unwrap_or(self.seed);
        let apparatus = match self.kind {
            ScenarioKind::QkdReceiver => {
                let train_file = self
                    .pulse_train
                    .as_ref()
                    .ok_or_else(|| invalid("pulse_train", "required for kind = \"qkd-receiver\""))?;
                let receiver_file = self.receiver.clone().unwrap_or_default();
                let detectors_file = self.detectors.clone().unwrap_or_default();
                if self.detector_pair.is_some() {
                    return Err(invalid(
                        "detector_pair",
                        "not allowed for kind = \"qkd-receiver\"",
                    ));
                }

                let pulse_train = PulseTrainConfig {
                    period_ns: train_file.period_ns,
                    width_ns: train_file.width_ns,
                    count: train_file.count,
                    mean_photons_per_pulse: train_file.mean_photons_per_pulse,
                    polarization: train_file.polarization.to_policy()?,
                    wavelength_nm: train_file.wavelength_nm,
                };

                let hv_pbs = if receiver_file.hv_extinction_ratio.is_infinite() {
                    PbsSpec::ideal(receiver_file.h_axis_deg)
                } else {
                    PbsSpec::new(receiver_file.h_axis_deg, receiver_file.hv_extinction_ratio)
                        .map_err(|e| invalid("receiver.hv_extinction_ratio", e))?
                };
                let da_pbs = if receiver_file.da_extinction_ratio.is_infinite() {
                    PbsSpec::ideal(receiver_file.d_axis_deg)
                } else {
                    PbsSpec::new(receiver_file.d_axis_deg, receiver_file.da_extinction_ratio)
                        .map_err(|e| invalid("receiver.da_extinction_ratio", e))?
                };
                let entrance_filter = receiver_file
                    .entrance_filter
                    .as_ref()
                    .map(|f| f.to_spec("receiver.entrance_filter"))
                    .transpose()?;
                let receiver = ReceiverModel {
                    basis_bs_ratio: receiver_file.basis_bs_ratio,
                    hv_pbs,
                    da_pbs,
                    forward_transmission: receiver_file.forward_transmission,
                    reverse_transmission: receiver_file.reverse_transmission,
                    entrance_filter,
                    channel_delays_ns: receiver_file.channel_delays_ns,
                    reflection_taps: receiver_file
                        .reflection_taps
                        .iter()
                        .map(|t| ReflectionTap {
                            delay_ns: t.delay_ns,
                            reflectance: t.reflectance,
                        })
                        .collect(),
                };
                receiver.validate().map_err(|e| invalid("receiver", e))?;

                let detectors = [
                    detectors_file.h.to_params("detectors.h")?,
                    detectors_file.v.to_params("detectors.v")?,
                    detectors_file.d.to_params("detectors.d")?,
                    detectors_file.a.to_params("detectors.a")?,
                ];
                let eve = self.eve.as_ref().map(|e| e.to_setup()).transpose()?;
                Apparatus::QkdReceiver(QkdReceiverConfig {
                    pulse_train,
                    receiver,
                    detectors,
                    eve,
                })
            }
            ScenarioKind::DetectorPair => {
                let pair_file = self.detector_pair.as_ref().ok_or_else(|| {
                    invalid("detector_pair", "required for kind = \"detector-pair\"")
                })?;
                for (key, present) in [
                    ("pulse_train", self.pulse_train.is_some()),
                    ("receiver", self.receiver.is_some()),
                    ("detectors", self.detectors.is_some()),
                    ("eve", self.eve.is_some()),
                ] {
                    if present {
                        return Err(invalid(key, "not allowed for kind = \"detector-pair\""));
                    }
                }
                let filter = pair_file
                    .filter
                    .as_ref()
                    .map(|f| f.to_spec("detector_pair.filter"))
                    .transpose()?;
                Apparatus::DetectorPair(DetectorPairConfig {
                    dut: pair_file.dut.to_params("detector_pair.dut")?,
                    spcm: pair_file.spcm.to_params("detector_pair.spcm")?,
                    induced_rate_hz: pair_file.induced_rate_hz,
                    clicks_target: pair_file.clicks_target,
                    channel_transmission: pair_file.channel_transmission,
                    optical_delay_ns: pair_file.optical_delay_ns,
                    filter,
                })
            }
        };
        let scenario = ScenarioConfig {
            seed,
            trial_index: 0,
            apparatus,
        };
        scenario
            .validate()
            .map_err(|e| invalid("scenario", e))?;
        Ok(scenario)
    }
}
