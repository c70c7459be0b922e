//! Analyzer angle scans over dark-driven backflash emission: the
//! coincidence rate traces a Malus curve over the analyzer angle, and the
//! scan's max/min ratio reproduces the analyzer's extinction ratio.

use backflash_core::devices::{ApdParams, EfficiencyCurve};
use backflash_core::eavesdropper::{angle_scan, EveSetup};
use backflash_core::engine::{
    Apparatus, PolarizationPolicy, PulseTrainConfig, QkdReceiverConfig, ScenarioConfig,
};
use backflash_core::optics::PbsSpec;
use backflash_core::receiver::ReceiverModel;

/// Dark-driven scan scenario: only the H detector clicks (200 kHz over
/// 50 ms) and every coupling factor is lossless so the scan statistics are
/// strong.
fn scan_scenario(analyzer: PbsSpec) -> ScenarioConfig {
    let mut h = ApdParams::silicon_apd();
    h.dark_count_rate_hz = 400_000.0;
    h.backflash_prob = 0.1;
    let quiet = || {
        let mut det = ApdParams::silicon_apd();
        det.dark_count_rate_hz = 0.0;
        det.backflash_prob = 0.0;
        det
    };
    let mut receiver = ReceiverModel::ideal();
    receiver.reverse_transmission = [1.0; 4];
    let mut eve = EveSetup::calibration_default();
    eve.tap_to_eve = 1.0;
    eve.measurement_throughput = 1.0;
    eve.analysis_pbs = analyzer;
    eve.gate_window_ns = (20.0, 55.0);
    eve.spcm.efficiency = EfficiencyCurve::flat(1.0).unwrap();
    eve.spcm.dark_count_rate_hz = 0.0;
    ScenarioConfig {
        seed: 0x5CA4,
        trial_index: 0,
        apparatus: Apparatus::QkdReceiver(QkdReceiverConfig {
            pulse_train: PulseTrainConfig {
                period_ns: 200.0,
                width_ns: 3.0,
                count: 250_000,
                mean_photons_per_pulse: 0.0,
                polarization: PolarizationPolicy::FixedLinear(0.0),
                wavelength_nm: 785.0,
            },
            receiver,
            detectors: [h, quiet(), quiet(), quiet()],
            eve: Some(eve),
        }),
    }
}

/// Least-squares fit of `a0 + a1*cos(2 theta) + a2*sin(2 theta)` (the
/// linearized Malus curve) and its coefficient of determination.
fn malus_fit_r_squared(points: &[(f64, f64)]) -> f64 {
    let basis = |theta_deg: f64| {
        let t = 2.0 * theta_deg.to_radians();
        [1.0, t.cos(), t.sin()]
    };
    // Normal equations for the 3-parameter linear model.
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for &(theta, y) in points {
        let b = basis(theta);
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += b[i] * b[j];
            }
            aty[i] += b[i] * y;
        }
    }
    // Gaussian elimination on the 3x3 system.
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&ata[i]);
        m[i][3] = aty[i];
    }
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let factor = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= factor * m[col][k];
                }
            }
        }
    }
    let coeffs = [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]];

    let mean = points.iter().map(|&(_, y)| y).sum::<f64>() / points.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(theta, y) in points {
        let b = basis(theta);
        let model = coeffs[0] * b[0] + coeffs[1] * b[1] + coeffs[2] * b[2];
        ss_res += (y - model).powi(2);
        ss_tot += (y - mean).powi(2);
    }
    1.0 - ss_res / ss_tot
}

#[test]
fn one_degree_scan_traces_a_malus_curve() {
    let config = scan_scenario(PbsSpec::ideal(0.0));
    let angles: Vec<f64> = (0..180).map(|i| i as f64).collect();
    let scan = angle_scan(&config, &angles).unwrap();

    let points: Vec<(f64, f64)> = scan
        .rates
        .iter()
        .map(|r| (r.angle_deg, r.coincidences as f64))
        .collect();
    let r_squared = malus_fit_r_squared(&points);
    assert!(r_squared > 0.99, "R^2 = {r_squared}");

    // The emission is H polarized, so the extremes sit near the axes; the
    // curve is flat at the extremes, so neighbors tie within noise.
    let circular_distance = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(180.0);
        d.min(180.0 - d)
    };
    assert!(
        circular_distance(scan.argmax_deg, 0.0) <= 5.0,
        "argmax at {}",
        scan.argmax_deg
    );
    assert!(
        circular_distance(scan.argmin_deg, 90.0) <= 5.0,
        "argmin at {}",
        scan.argmin_deg
    );
}

#[test]
fn scan_ratio_recovers_the_analyzer_extinction() {
    let er = 50.0;
    let config = scan_scenario(PbsSpec::new(0.0, er).unwrap());
    let scan = angle_scan(&config, &[0.0, 90.0]).unwrap();
    let max = scan.rates[0].coincidences as f64;
    let min = scan.rates[1].coincidences as f64;
    assert!(min > 0.0, "orthogonal angle saw no counts");
    let ratio = max / min;
    let sigma_ratio = ratio * (1.0 / max + 1.0 / min).sqrt();
    assert!(
        (ratio - er).abs() <= 3.0 * sigma_ratio,
        "ratio {ratio:.1} vs ER {er} (3 sigma {:.1})",
        3.0 * sigma_ratio
    );
}
