//! Bundled preset experiments.
//!
//! Each preset binds a ready-to-run configuration:
//!
//! - `fig2-backflash-prob`: two-detector coincidence bench measuring the
//!   backflash probability of a silicon APD from 10^6 dark-count-triggered
//!   clicks.
//! - `filter-backflash-prob`: the same bench with an 808 nm / 3 nm
//!   narrowpass filter in the path and a band-calibrated emission
//!   spectrum.
//! - `table1-extinction`: deterministic reverse-beam polarizer scans of
//!   the four receiver channels, reproducing the measured extinction
//!   ratios.
//! - `fig6-timing`: pulsed timing characterization; the backflash peak in
//!   Eve's arrival-time histogram stands well above the internal
//!   reflection peaks.
//! - `attack-hv`: the two-setting interception attack on the H/V basis,
//!   yielding the coincidence-ratio matrix and the observed leakage.
//! - `keyrate-sweep`: tagged-signal secret key rate swept over the tagged
//!   fraction.

use crate::config::{
    AnalysisSpec, CalibratedBand, ConfigFile, DetectorFile, DetectorPairFile, DetectorsFile,
    EveFile, ExpectedLeakageSpec, FilterFile, GateReferenceField, HistogramSpec, PbEstimatorSpec,
    PolarizationField, PulseTrainFile, ReceiverFile, ScenarioKind, SpectrumFile, TapFile,
};

/// Default seed shared by all presets.
pub const PRESET_SEED: u64 = 7;

/// In-band emission fraction calibrated against the ratio of the filtered
/// and unfiltered backflash probability measurements.
pub const CALIBRATED_BAND_FRACTION: f64 = (2_306.0 / (0.62 * 0.83)) / (37_643.0 / (0.6 * 0.97));

/// One simulated run bound by a preset.
#[derive(Debug, Clone)]
pub struct PresetRun {
    /// Subdirectory label when a preset spans several runs.
    pub label: Option<String>,
    /// Channel Eve's analyzer targets in this run, if any.
    pub eve_target: Option<char>,
    pub config: ConfigFile,
}

/// A deterministic reverse-beam polarizer scan of one receiver channel.
#[derive(Debug, Clone, Copy)]
pub struct ExtinctionScanChannel {
    pub channel: char,
    /// Polarization angle of the reverse beam in Eve's frame, degrees.
    pub beam_angle_deg: f64,
    /// Effective extinction ratio of the reverse path plus analyzer.
    pub extinction_ratio: f64,
    /// Laser power injected into the channel fiber, microwatts.
    pub source_power_uw: f64,
    pub reverse_transmission: f64,
}

/// Key-rate sweep specification.
#[derive(Debug, Clone, Copy)]
pub struct KeyRateSweepSpec {
    pub p_det: f64,
    pub qber: f64,
    pub ec_inefficiency: f64,
    pub steps: usize,
    /// Extra single point: the worst-case tagged fraction from the
    /// filtered backflash measurement, `P_E = P_b * T_b`.
    pub worst_case_backflash_prob: f64,
    pub worst_case_reverse_transmission: f64,
}

#[derive(Debug, Clone)]
pub enum Preset {
    MonteCarlo {
        runs: Vec<PresetRun>,
        analysis: AnalysisSpec,
    },
    ExtinctionScan {
        channels: Vec<ExtinctionScanChannel>,
        eve_throughput: f64,
        scan_step_deg: f64,
    },
    KeyRateSweep(KeyRateSweepSpec),
}

pub const PRESET_NAMES: [&str; 6] = [
    "fig2-backflash-prob",
    "filter-backflash-prob",
    "table1-extinction",
    "fig6-timing",
    "attack-hv",
    "keyrate-sweep",
];

pub fn describe(name: &str) -> &'static str {
    match name {
        "fig2-backflash-prob" => "two-detector bench: backflash probability from 10^6 DUT clicks",
        "filter-backflash-prob" => "backflash probability behind an 808 nm / 3 nm narrowpass filter",
        "table1-extinction" => "reverse-beam polarizer scans: per-channel extinction ratios",
        "fig6-timing" => "pulsed timing characterization: backflash vs reflection peaks",
        "attack-hv" => "H/V interception attack: coincidence ratios and observed leakage",
        "keyrate-sweep" => "tagged-signal secret key rate swept over the tagged fraction",
        _ => "",
    }
}

pub fn lookup(name: &str) -> Option<Preset> {
    match name {
        "fig2-backflash-prob" => Some(fig2_backflash_prob()),
        "filter-backflash-prob" => Some(filter_backflash_prob()),
        "table1-extinction" => Some(table1_extinction()),
        "fig6-timing" => Some(fig6_timing()),
        "attack-hv" => Some(attack_hv()),
        "keyrate-sweep" => Some(keyrate_sweep()),
        _ => None,
    }
}

fn flat_efficiency(value: f64) -> Vec<[f64; 2]> {
    vec![[785.0, value]]
}

/// Silicon APD table used throughout: measured backflash probability and
/// the 500-900 nm band-average counting efficiency.
fn silicon_apd_file() -> DetectorFile {
    DetectorFile {
        efficiency: flat_efficiency(0.6),
        dark_count_rate_hz: 500.0,
        dead_time_ns: 50.0,
        backflash_prob: 0.065,
        electrons_per_avalanche: 2.7e8,
        ..DetectorFile::default()
    }
}

/// Detector slot with nothing attached (terminated fiber).
fn absent_detector() -> DetectorFile {
    DetectorFile {
        efficiency: flat_efficiency(0.0),
        dark_count_rate_hz: 0.0,
        backflash_prob: 0.0,
        ..DetectorFile::default()
    }
}

fn fig2_backflash_prob() -> Preset {
    // The DUT trigger rate is raised well above a real dark rate to keep
    // the bench quick; the estimator is trigger-rate independent. The
    // facing counter is modeled backflash-free so every one of the 10^6
    // denominator clicks is an independent trigger.
    let mut dut = silicon_apd_file();
    dut.dark_count_rate_hz = 25_000.0;
    let mut spcm = silicon_apd_file();
    spcm.backflash_prob = 0.0;
    spcm.electronic_delay_ns = 40.0;
    let config = ConfigFile {
        seed: PRESET_SEED,
        kind: ScenarioKind::DetectorPair,
        pulse_train: None,
        receiver: None,
        detectors: None,
        eve: None,
        detector_pair: Some(DetectorPairFile {
            dut,
            spcm,
            clicks_target: 1_000_000,
            channel_transmission: 0.97,
            optical_delay_ns: 10.0,
            induced_rate_hz: 0.0,
            filter: None,
        }),
        analysis: None,
    };
    Preset::MonteCarlo {
        runs: vec![PresetRun {
            label: None,
            eve_target: None,
            config,
        }],
        analysis: AnalysisSpec {
            histogram: Some(HistogramSpec {
                bin_ns: 0.25,
                range_ns: [0.0, 100.0],
                reference: GateReferenceField::BobClick,
            }),
            peak_threshold_sigma: Some(5.0),
            // Emission peak: 10 ns optical delay + 40 ns electronic
            // delay. The end of the counting window captures the fraction
            // g* = ln(1 - P_b*eta*T) / (eta*T*ln(1 - P_b)) of the emission
            // profile, which makes the lower-bound estimator C/(eta*T*N)
            // unbiased under the Poisson multi-photon emission model.
            coincidence_window_ns: Some([50.0, 66.4]),
            pb_estimator: Some(PbEstimatorSpec {
                efficiency: 0.6,
                channel_transmission: 0.97,
            }),
            expected_leakage: None,
        },
    }
}

fn filter_backflash_prob() -> Preset {
    let mut dut = silicon_apd_file();
    dut.dark_count_rate_hz = 25_000.0;
    dut.spectrum = Some(SpectrumFile {
        points: vec![[550.0, 0.2], [900.0, 1.0], [1000.0, 0.8]],
        calibrated_band: Some(CalibratedBand {
            lo_nm: 806.5,
            hi_nm: 809.5,
            fraction: CALIBRATED_BAND_FRACTION,
        }),
    });
    let mut spcm = silicon_apd_file();
    spcm.backflash_prob = 0.0;
    spcm.electronic_delay_ns = 40.0;
    // Counting efficiency at 808 nm.
    spcm.efficiency = flat_efficiency(0.62);
    let config = ConfigFile {
        seed: PRESET_SEED,
        kind: ScenarioKind::DetectorPair,
        pulse_train: None,
        receiver: None,
        detectors: None,
        eve: None,
        detector_pair: Some(DetectorPairFile {
            dut,
            spcm,
            clicks_target: 1_000_000,
            channel_transmission: 0.83,
            optical_delay_ns: 10.0,
            induced_rate_hz: 0.0,
            filter: Some(FilterFile {
                center_nm: 808.0,
                bandwidth_fwhm_nm: 3.0,
                peak_transmission: 1.0,
                profile: crate::config::FilterProfileField::TopHat,
            }),
        }),
        analysis: None,
    };
    Preset::MonteCarlo {
        runs: vec![PresetRun {
            label: None,
            eve_target: None,
            config,
        }],
        analysis: AnalysisSpec {
            histogram: Some(HistogramSpec {
                bin_ns: 0.25,
                range_ns: [0.0, 100.0],
                reference: GateReferenceField::BobClick,
            }),
            peak_threshold_sigma: Some(5.0),
            // Same bias-free counting window as the unfiltered bench.
            coincidence_window_ns: Some([50.0, 66.4]),
            pb_estimator: Some(PbEstimatorSpec {
                efficiency: 0.62,
                channel_transmission: 0.83,
            }),
            expected_leakage: None,
        },
    }
}

fn table1_extinction() -> Preset {
    // Beam angles are the measured per-channel optima in the analyzer
    // frame; source powers are scaled so the scan maxima land on the
    // measured values.
    let channels = vec![
        ExtinctionScanChannel {
            channel: 'H',
            beam_angle_deg: 3.0,
            extinction_ratio: 167.0,
            source_power_uw: scan_source_power(25.0, 167.0),
            reverse_transmission: 0.091,
        },
        ExtinctionScanChannel {
            channel: 'V',
            beam_angle_deg: 94.0,
            extinction_ratio: 660.0,
            source_power_uw: scan_source_power(19.8, 660.0),
            reverse_transmission: 0.091,
        },
        ExtinctionScanChannel {
            channel: 'D',
            beam_angle_deg: 315.0,
            extinction_ratio: 10.7,
            source_power_uw: scan_source_power(20.7, 10.7),
            reverse_transmission: 0.091,
        },
        ExtinctionScanChannel {
            channel: 'A',
            beam_angle_deg: 49.0,
            extinction_ratio: 6.4,
            source_power_uw: scan_source_power(23.5, 6.4),
            reverse_transmission: 0.091,
        },
    ];
    Preset::ExtinctionScan {
        channels,
        eve_throughput: 0.6,
        scan_step_deg: 1.0,
    }
}

/// Source power that makes the scan maximum equal `max_power_uw` for a
/// channel at the given extinction ratio (with T_b = 0.091, T_e = 0.6).
fn scan_source_power(max_power_uw: f64, er: f64) -> f64 {
    max_power_uw / (0.091 * 0.6 * (er / (er + 1.0)))
}

fn fig6_timing() -> Preset {
    let mut spcm = silicon_apd_file();
    spcm.backflash_prob = 0.0;
    spcm.dark_count_rate_hz = 20.0;
    let config = ConfigFile {
        seed: PRESET_SEED,
        kind: ScenarioKind::QkdReceiver,
        pulse_train: Some(PulseTrainFile {
            period_ns: 200.0,
            width_ns: 3.0,
            count: 1_000_000,
            // Bright timing pulses: the receiver clicks on nearly every
            // pulse.
            mean_photons_per_pulse: 10.0,
            polarization: PolarizationField::Named("h".into()),
            wavelength_nm: 785.0,
        }),
        receiver: Some(ReceiverFile {
            // Effective round-trip reflectances, scaled for fiber-coupled
            // collection on the analyzer side.
            reflection_taps: vec![
                TapFile {
                    delay_ns: 2.0,
                    reflectance: 4e-6,
                },
                TapFile {
                    delay_ns: 5.0,
                    reflectance: 3e-6,
                },
                TapFile {
                    delay_ns: 12.5,
                    reflectance: 1e-6,
                },
            ],
            ..ReceiverFile::default()
        }),
        detectors: Some(DetectorsFile {
            h: silicon_apd_file(),
            v: absent_detector(),
            d: absent_detector(),
            a: absent_detector(),
        }),
        eve: Some(EveFile {
            gate_window_ns: [37.5, 57.5],
            gate_reference: GateReferenceField::AlicePulse,
            spcm,
            ..default_eve_file()
        }),
        detector_pair: None,
        analysis: None,
    };
    Preset::MonteCarlo {
        runs: vec![PresetRun {
            label: None,
            eve_target: None,
            config,
        }],
        analysis: AnalysisSpec {
            histogram: Some(HistogramSpec {
                bin_ns: 0.25,
                range_ns: [0.0, 100.0],
                reference: GateReferenceField::AlicePulse,
            }),
            peak_threshold_sigma: Some(5.0),
            coincidence_window_ns: None,
            pb_estimator: None,
            expected_leakage: None,
        },
    }
}

fn default_eve_file() -> EveFile {
    EveFile {
        tap_to_eve: 0.9,
        measurement_throughput: 0.6,
        analysis_angle_deg: 0.0,
        analysis_extinction_ratio: f64::INFINITY,
        distortion_retardance_rad: 0.0,
        distortion_axis_deg: 90.0,
        gate_window_ns: [25.0, 30.0],
        gate_reference: GateReferenceField::BobClick,
        path_delay_ns: 12.5,
        spcm: {
            let mut spcm = silicon_apd_file();
            spcm.backflash_prob = 0.0;
            spcm
        },
    }
}

fn attack_hv() -> Preset {
    let base = ConfigFile {
        seed: PRESET_SEED,
        kind: ScenarioKind::QkdReceiver,
        pulse_train: Some(PulseTrainFile {
            period_ns: 200.0,
            width_ns: 3.0,
            count: 8_000_000,
            mean_photons_per_pulse: 0.2,
            polarization: PolarizationField::Named("random-bb84".into()),
            wavelength_nm: 785.0,
        }),
        receiver: Some(ReceiverFile::default()),
        detectors: Some(DetectorsFile {
            h: silicon_apd_file(),
            v: silicon_apd_file(),
            d: silicon_apd_file(),
            a: silicon_apd_file(),
        }),
        eve: Some(default_eve_file()),
        detector_pair: None,
        analysis: None,
    };
    let mut run_h = base.clone();
    run_h.eve.as_mut().unwrap().analysis_angle_deg = 0.0;
    let mut run_v = base;
    run_v.eve.as_mut().unwrap().analysis_angle_deg = 90.0;
    // Independent rng streams per run.
    run_v.seed = PRESET_SEED;
    Preset::MonteCarlo {
        runs: vec![
            PresetRun {
                label: Some("angle-h".into()),
                eve_target: Some('H'),
                config: run_h,
            },
            PresetRun {
                label: Some("angle-v".into()),
                eve_target: Some('V'),
                config: run_v,
            },
        ],
        analysis: AnalysisSpec {
            histogram: None,
            peak_threshold_sigma: None,
            coincidence_window_ns: Some([25.0, 30.0]),
            pb_estimator: None,
            expected_leakage: Some(ExpectedLeakageSpec {
                efficiency: 0.6,
                eve_throughput: 0.6,
                reverse_transmission: 0.091,
                backflash_prob: 0.065,
            }),
        },
    }
}

fn keyrate_sweep() -> Preset {
    Preset::KeyRateSweep(KeyRateSweepSpec {
        p_det: 0.1,
        qber: 0.05,
        ec_inefficiency: 1.2,
        steps: 1000,
        worst_case_backflash_prob: 4.5e-3,
        worst_case_reverse_transmission: 0.091,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves_and_validates() {
        for name in PRESET_NAMES {
            let preset = lookup(name).unwrap_or_else(|| panic!("missing preset {name}"));
            if let Preset::MonteCarlo { runs, .. } = preset {
                for run in runs {
                    run.config
                        .to_scenario(None)
                        .unwrap_or_else(|e| panic!("{name}: {e}"));
                }
            }
            assert!(!describe(name).is_empty());
        }
        assert!(lookup("nope").is_none());
    }

    #[test]
    fn preset_configs_round_trip_through_toml() {
        for name in PRESET_NAMES {
            if let Some(Preset::MonteCarlo { runs, .. }) = lookup(name) {
                for run in runs {
                    let text = run.config.to_toml();
                    let parsed = ConfigFile::from_toml(&text).unwrap();
                    assert_eq!(parsed, run.config, "{name}");
                }
            }
        }
    }

    #[test]
    fn attack_runs_differ_only_in_the_analyzer_angle() {
        let Some(Preset::MonteCarlo { runs, .. }) = lookup("attack-hv") else {
            panic!("attack-hv must be a Monte Carlo preset");
        };
        assert_eq!(runs.len(), 2);
        let mut h = runs[0].config.clone();
        let v = runs[1].config.clone();
        h.eve.as_mut().unwrap().analysis_angle_deg = 90.0;
        assert_eq!(h, v);
    }
}
