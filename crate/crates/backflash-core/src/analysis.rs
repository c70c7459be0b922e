//! Estimators and security math.
//!
//! Coincidence histograms and peak detection characterize the timing of
//! the backflash emission; the probability estimators turn coincidence
//! counts into a lower bound on the backflash probability
//! `P_b >= C / (eta * T * N)`; the coincidence-ratio matrix `R_ij =
//! E_ij / B_i` quantifies what an eavesdropper actually learns; and the
//! tagged-signal key rate
//!
//! ```text
//! l >= A * P_det * (1 - h(e / A)) - leak_EC,    A = (P_det - P_E) / P_det
//! ```
//!
//! prices the remaining leakage `P_E = P_b * T_b` into privacy
//! amplification.

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::eavesdropper::{gate_coincidences, EveError};
use crate::engine::EventLog;
use crate::receiver::Channel;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("bin width must be positive")]
    NonPositiveBinWidth,
    #[error("histogram range must be non-empty")]
    EmptyHistogramRange,
    #[error("peak threshold must be positive")]
    NonPositiveThreshold,
    #[error("`{name}` must be a probability in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("`{name}` must be in (0, 1], got {value}")]
    OutOfUnitInterval { name: &'static str, value: f64 },
    #[error("click count N must be positive")]
    ZeroClickCount,
    #[error("matrix cell {cell} has no Bob clicks")]
    EmptyMatrixCell { cell: String },
    #[error("matrix is missing cell {cell}")]
    MissingMatrixCell { cell: String },
    #[error("detection probability must be positive")]
    ZeroDetectionProbability,
    #[error(transparent)]
    Eve(#[from] EveError),
}

/// Fixed-bin histogram of time intervals.
///
/// Bins are half-open `[origin + k*w, origin + (k+1)*w)`; intervals below
/// the origin or at/after the last edge land in the underflow/overflow
/// bins, so the total count is conserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidenceHistogram {
    pub bin_width_ps: i64,
    pub origin_ps: i64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl CoincidenceHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn bin_start_ps(&self, index: usize) -> i64 {
        self.origin_ps + index as i64 * self.bin_width_ps
    }

    pub fn bin_end_ps(&self, index: usize) -> i64 {
        self.bin_start_ps(index) + self.bin_width_ps
    }
}

/// Histogram the intervals `t_click - t_ref` of `pairs` over `range_ps`.
pub fn build_histogram(
    pairs: &[(i64, i64)],
    bin_width_ps: i64,
    range_ps: (i64, i64),
) -> Result<CoincidenceHistogram, AnalysisError> {
    if bin_width_ps <= 0 {
        return Err(AnalysisError::NonPositiveBinWidth);
    }
    if range_ps.1 <= range_ps.0 {
        return Err(AnalysisError::EmptyHistogramRange);
    }
    let span = range_ps.1 - range_ps.0;
    let bins = ((span + bin_width_ps - 1) / bin_width_ps) as usize;
    let mut hist = CoincidenceHistogram {
        bin_width_ps,
        origin_ps: range_ps.0,
        counts: alloc::vec![0; bins],
        underflow: 0,
        overflow: 0,
    };
    for &(t_ref, t_click) in pairs {
        let delta = t_click - t_ref;
        if delta < range_ps.0 {
            hist.underflow += 1;
        } else {
            let bin = ((delta - range_ps.0) / bin_width_ps) as usize;
            if bin >= bins {
                hist.overflow += 1;
            } else {
                hist.counts[bin] += 1;
            }
        }
    }
    Ok(hist)
}

/// A contiguous run of bins above the detection threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub start_ps: i64,
    pub end_ps: i64,
    /// Inclusive bin index range.
    pub first_bin: usize,
    pub last_bin: usize,
    /// Counts above background, summed over the run.
    pub area: f64,
    /// Area over the Poisson fluctuation scale of the background.
    pub significance: f64,
}

/// Find contiguous bin runs exceeding `background + threshold_sigma *
/// sqrt(background)`, where the background is the median bin count.
pub fn detect_peaks(
    hist: &CoincidenceHistogram,
    threshold_sigma: f64,
) -> Result<Vec<Peak>, AnalysisError> {
    if !(threshold_sigma > 0.0) {
        return Err(AnalysisError::NonPositiveThreshold);
    }
    if hist.counts.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted = hist.counts.clone();
    sorted.sort_unstable();
    let background = sorted[sorted.len() / 2] as f64;
    let threshold = background + threshold_sigma * background.sqrt();

    let mut peaks = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, &count) in hist.counts.iter().enumerate() {
        let above = count as f64 > threshold;
        match (above, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(start)) => {
                peaks.push(finish_peak(hist, background, start, i - 1));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(start) = run_start {
        peaks.push(finish_peak(hist, background, start, hist.counts.len() - 1));
    }
    Ok(peaks)
}

fn finish_peak(
    hist: &CoincidenceHistogram,
    background: f64,
    first_bin: usize,
    last_bin: usize,
) -> Peak {
    let area: f64 = hist.counts[first_bin..=last_bin]
        .iter()
        .map(|&c| c as f64 - background)
        .sum();
    let bins = (last_bin - first_bin + 1) as f64;
    let noise_scale = (background * bins).max(1.0).sqrt();
    Peak {
        start_ps: hist.bin_start_ps(first_bin),
        end_ps: hist.bin_end_ps(last_bin),
        first_bin,
        last_bin,
        area,
        significance: area / noise_scale,
    }
}

/// Lower-bound backflash probability estimate, clamped to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbEstimate {
    pub value: f64,
    /// Set when the raw estimate exceeded 1 and was clamped.
    pub clamped: bool,
}

/// Estimate the backflash probability from a coincidence measurement:
/// `P_b >= C / (eta * T * N)`.
///
/// This is a lower bound: the counting detector only covers part of the
/// emission spectrum.
pub fn estimate_pb(
    coincidences: u64,
    efficiency: f64,
    channel_transmission: f64,
    clicks: u64,
) -> Result<PbEstimate, AnalysisError> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(AnalysisError::OutOfUnitInterval {
            name: "efficiency",
            value: efficiency,
        });
    }
    if !(channel_transmission > 0.0 && channel_transmission <= 1.0) {
        return Err(AnalysisError::OutOfUnitInterval {
            name: "channel_transmission",
            value: channel_transmission,
        });
    }
    if clicks == 0 {
        return Err(AnalysisError::ZeroClickCount);
    }
    let raw = coincidences as f64 / (efficiency * channel_transmission * clicks as f64);
    Ok(PbEstimate {
        value: raw.min(1.0),
        clamped: raw > 1.0,
    })
}

/// Per-run gated coincidence counts, split by Bob channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GatedCounts {
    pub bob_clicks: [u64; 4],
    pub coincidences: [u64; 4],
}

/// Count Bob clicks and gated Eve coincidences per Bob channel in one run.
pub fn gated_counts(log: &EventLog, window_ps: (i64, i64)) -> Result<GatedCounts, AnalysisError> {
    let mut counts = GatedCounts::default();
    for click in &log.bob_clicks {
        if let Some(channel) = click.detector.channel() {
            counts.bob_clicks[channel.index()] += 1;
        }
    }
    for (bob, _eve) in gate_coincidences(&log.bob_clicks, &log.eve_clicks, window_ps)? {
        if let Some(channel) = bob.detector.channel() {
            counts.coincidences[channel.index()] += 1;
        }
    }
    Ok(counts)
}

/// One cell of the coincidence-ratio matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RMatrixCell {
    /// `B_i`: Bob clicks on channel `i` during the run at Eve setting `j`.
    pub bob_clicks: u64,
    /// `E_ij`: Eve's gated coincidences with those clicks.
    pub coincidences: u64,
}

/// Coincidence-ratio matrix `R_ij = E_ij / B_i`.
///
/// Row `i` is Bob's detection channel; column `j` is the channel Eve's
/// analyzer was optimized for during that run.
#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix {
    channels: Vec<Channel>,
    cells: Vec<RMatrixCell>,
}

impl RMatrix {
    /// Assemble the matrix from per-setting runs: `runs[j]` holds the Eve
    /// target channel and the gated counts of that run.
    pub fn from_runs(
        channels: &[Channel],
        runs: &[(Channel, GatedCounts)],
    ) -> Result<Self, AnalysisError> {
        let mut cells = Vec::with_capacity(channels.len() * channels.len());
        for &bob_channel in channels {
            for &eve_channel in channels {
                let run = runs
                    .iter()
                    .find(|(target, _)| *target == eve_channel)
                    .ok_or_else(|| AnalysisError::MissingMatrixCell {
                        cell: cell_name(bob_channel, eve_channel),
                    })?;
                let cell = RMatrixCell {
                    bob_clicks: run.1.bob_clicks[bob_channel.index()],
                    coincidences: run.1.coincidences[bob_channel.index()],
                };
                if cell.bob_clicks == 0 {
                    return Err(AnalysisError::EmptyMatrixCell {
                        cell: cell_name(bob_channel, eve_channel),
                    });
                }
                cells.push(cell);
            }
        }
        Ok(Self {
            channels: channels.to_vec(),
            cells,
        })
    }

    /// Build directly from known cells (row-major over `channels`).
    pub fn from_cells(channels: &[Channel], cells: &[RMatrixCell]) -> Result<Self, AnalysisError> {
        assert_eq!(cells.len(), channels.len() * channels.len());
        for (idx, cell) in cells.iter().enumerate() {
            if cell.bob_clicks == 0 {
                let i = channels[idx / channels.len()];
                let j = channels[idx % channels.len()];
                return Err(AnalysisError::EmptyMatrixCell {
                    cell: cell_name(i, j),
                });
            }
        }
        Ok(Self {
            channels: channels.to_vec(),
            cells: cells.to_vec(),
        })
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn cell(&self, bob: Channel, eve: Channel) -> Option<&RMatrixCell> {
        let i = self.channels.iter().position(|&c| c == bob)?;
        let j = self.channels.iter().position(|&c| c == eve)?;
        self.cells.get(i * self.channels.len() + j)
    }

    /// `R_ij = E_ij / B_i`.
    pub fn ratio(&self, bob: Channel, eve: Channel) -> Option<f64> {
        self.cell(bob, eve)
            .map(|c| c.coincidences as f64 / c.bob_clicks as f64)
    }
}

fn cell_name(bob: Channel, eve: Channel) -> String {
    alloc::format!("R_{}{}", bob.label(), eve.label())
}

/// Information Eve gains about channel `i` detections: the correct-guess
/// ratio less the wrong-guess ratio against the orthogonal channel of the
/// same basis, `R_ii - R_i,conjugate(i)`.
///
/// Negative values are returned as-is; they are statistically consistent
/// with zero and clamping would bias parameter sweeps.
pub fn observed_leakage(matrix: &RMatrix, channel: Channel) -> Result<f64, AnalysisError> {
    let correct = matrix
        .ratio(channel, channel)
        .ok_or_else(|| AnalysisError::MissingMatrixCell {
            cell: cell_name(channel, channel),
        })?;
    let conjugate = channel.conjugate();
    let wrong = matrix
        .ratio(channel, conjugate)
        .ok_or_else(|| AnalysisError::MissingMatrixCell {
            cell: cell_name(channel, conjugate),
        })?;
    Ok(correct - wrong)
}

fn check_probability(name: &'static str, value: f64) -> Result<(), AnalysisError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(AnalysisError::InvalidProbability { name, value })
    }
}

/// Calibration-based expectation of the observed leakage:
/// `eta * T_e * T_b * P_b / 2`.
pub fn expected_leakage(
    efficiency: f64,
    eve_throughput: f64,
    reverse_transmission: f64,
    backflash_prob: f64,
) -> Result<f64, AnalysisError> {
    check_probability("efficiency", efficiency)?;
    check_probability("eve_throughput", eve_throughput)?;
    check_probability("reverse_transmission", reverse_transmission)?;
    check_probability("backflash_prob", backflash_prob)?;
    Ok(efficiency * eve_throughput * reverse_transmission * backflash_prob / 2.0)
}

/// Worst-case fraction of Bob's detections tagged by Eve: `P_E = P_b *
/// T_b`, assuming she distinguishes every escaped backflash photon with
/// certainty.
pub fn worst_case_tag_fraction(
    backflash_prob: f64,
    reverse_transmission: f64,
) -> Result<f64, AnalysisError> {
    check_probability("backflash_prob", backflash_prob)?;
    check_probability("reverse_transmission", reverse_transmission)?;
    Ok(backflash_prob * reverse_transmission)
}

/// Binary Shannon entropy in bits; `h(0) = h(1) = 0` by limit.
pub fn binary_entropy(x: f64) -> Result<f64, AnalysisError> {
    check_probability("x", x)?;
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Why the key rate collapsed to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyRateAbort {
    /// All detections tagged: `A <= 0`.
    FullyTagged,
    /// Error rate outside the entropy domain: `e / A > 1/2`.
    EntropyDomain,
}

impl KeyRateAbort {
    pub fn label(self) -> &'static str {
        match self {
            KeyRateAbort::FullyTagged => "fully_tagged",
            KeyRateAbort::EntropyDomain => "entropy_domain",
        }
    }
}

/// Inputs of the tagged-signal key rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateInput {
    /// Detection probability per signal sent.
    pub p_det: f64,
    /// Quantum bit error rate of the sifted key.
    pub qber: f64,
    /// Key fraction disclosed during error correction, bits per signal.
    pub leak_ec: f64,
    /// Tagged fraction `P_E`.
    pub tag_fraction: f64,
}

/// Key-rate evaluation result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateResult {
    /// Secret bits per signal sent, clamped at zero.
    pub rate: f64,
    pub abort: Option<KeyRateAbort>,
}

/// Secret key rate per signal with tagged-signal privacy amplification:
/// `l = A * P_det * (1 - h(e/A)) - leak_EC` with `A = (P_det - P_E) /
/// P_det`, clamped at zero.
pub fn key_rate(input: &KeyRateInput) -> Result<KeyRateResult, AnalysisError> {
    if !(input.p_det > 0.0) {
        return Err(AnalysisError::ZeroDetectionProbability);
    }
    check_probability("p_det", input.p_det)?;
    check_probability("qber", input.qber)?;
    check_probability("tag_fraction", input.tag_fraction)?;
    if !(input.leak_ec >= 0.0) {
        return Err(AnalysisError::InvalidProbability {
            name: "leak_ec",
            value: input.leak_ec,
        });
    }

    let correction = (input.p_det - input.tag_fraction) / input.p_det;
    if correction <= 0.0 {
        return Ok(KeyRateResult {
            rate: 0.0,
            abort: Some(KeyRateAbort::FullyTagged),
        });
    }
    let effective_error = input.qber / correction;
    if effective_error > 0.5 {
        return Ok(KeyRateResult {
            rate: 0.0,
            abort: Some(KeyRateAbort::EntropyDomain),
        });
    }
    let rate = correction * input.p_det * (1.0 - binary_entropy(effective_error)?)
        - input.leak_ec;
    Ok(KeyRateResult {
        rate: rate.max(0.0),
        abort: None,
    })
}

/// Error-correction leakage helper: `f * h(e) * P_det` for an
/// error-correction inefficiency `f` (1.2 is a typical value).
pub fn ec_leakage(inefficiency: f64, qber: f64, p_det: f64) -> Result<f64, AnalysisError> {
    if !(inefficiency >= 1.0) {
        return Err(AnalysisError::InvalidProbability {
            name: "inefficiency",
            value: inefficiency,
        });
    }
    check_probability("qber", qber)?;
    check_probability("p_det", p_det)?;
    Ok(inefficiency * binary_entropy(qber)? * p_det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{ClickCause, ClickRecord, DetectorId, EventRef, PS_PER_NS};
    use crate::rng::{RngStreamKey, StreamDomain};
    use rand::Rng;

    #[test]
    fn empty_histogram_is_all_zero() {
        let hist = build_histogram(&[], 100, (0, 1_000)).unwrap();
        assert_eq!(hist.counts.len(), 10);
        assert!(hist.counts.iter().all(|&c| c == 0));
        assert_eq!(hist.total(), 0);
    }

    #[test]
    fn bin_edges_go_to_the_higher_bin() {
        let hist = build_histogram(&[(0, 200)], 100, (0, 1_000)).unwrap();
        assert_eq!(hist.counts[2], 1);
        assert_eq!(hist.counts[1], 0);
    }

    #[test]
    fn out_of_range_intervals_are_conserved() {
        let pairs = [(0, -50), (0, 500), (0, 2_000)];
        let hist = build_histogram(&pairs, 100, (0, 1_000)).unwrap();
        assert_eq!(hist.underflow, 1);
        assert_eq!(hist.overflow, 1);
        assert_eq!(hist.total(), 3);
    }

    #[test]
    fn histogram_of_profile_delays_matches_expectation_by_chi_squared() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let profile = crate::devices::BackflashProfile::default();
        let n = 100_000usize;
        let mut rng = RngStreamKey::new(0xA11, 0, StreamDomain::Backflash, 0).stream();
        let pairs: Vec<(i64, i64)> = (0..n)
            .map(|_| {
                let delay_ns = profile.sample_delay_ns(&mut rng);
                (0, (delay_ns * PS_PER_NS as f64).round() as i64)
            })
            .collect();
        let bin_ns = 0.4;
        let hist =
            build_histogram(&pairs, (bin_ns * PS_PER_NS as f64) as i64, (0, 20 * PS_PER_NS))
                .unwrap();

        let mut chi2 = 0.0;
        let mut dof = 0usize;
        for (i, &observed) in hist.counts.iter().enumerate() {
            let lo_ns = hist.bin_start_ps(i) as f64 / PS_PER_NS as f64;
            let hi_ns = hist.bin_end_ps(i) as f64 / PS_PER_NS as f64;
            let expected = (profile.cdf(hi_ns) - profile.cdf(lo_ns)) * n as f64;
            if expected >= 10.0 {
                chi2 += (observed as f64 - expected).powi(2) / expected;
                dof += 1;
            }
        }
        let dist = ChiSquared::new((dof - 1) as f64).unwrap();
        let p_value = 1.0 - dist.cdf(chi2);
        assert!(p_value > 0.01, "chi2 {chi2} with {dof} bins: p {p_value}");
    }

    #[test]
    fn flat_poisson_background_has_no_peaks_at_five_sigma() {
        let runs = 500;
        let mut false_positive_runs = 0;
        for run in 0..runs {
            let mut rng = RngStreamKey::new(0xA12, run, StreamDomain::Backflash, 0).stream();
            let counts: Vec<u64> = (0..200)
                .map(|_| {
                    // Poisson(100) via devices sampler
                    let mut events = 0u64;
                    let mut acc: f64 = rng.random::<f64>().ln();
                    while acc > -100.0 {
                        events += 1;
                        acc += rng.random::<f64>().ln();
                    }
                    events
                })
                .collect();
            let hist = CoincidenceHistogram {
                bin_width_ps: 100,
                origin_ps: 0,
                counts,
                underflow: 0,
                overflow: 0,
            };
            if !detect_peaks(&hist, 5.0).unwrap().is_empty() {
                false_positive_runs += 1;
            }
        }
        // Well under a 1% per-run false positive rate.
        assert!(
            false_positive_runs <= 4,
            "{false_positive_runs} of {runs} runs had spurious peaks"
        );
    }

    #[test]
    fn delta_spike_on_zero_background_is_one_full_peak() {
        let mut counts = alloc::vec![0u64; 100];
        counts[40] = 10_000;
        let hist = CoincidenceHistogram {
            bin_width_ps: 1_000,
            origin_ps: 0,
            counts,
            underflow: 0,
            overflow: 0,
        };
        let peaks = detect_peaks(&hist, 5.0).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].area, 10_000.0);
        assert_eq!(peaks[0].first_bin, 40);
        assert_eq!(peaks[0].last_bin, 40);
        assert_eq!(peaks[0].start_ps, 40_000);
    }

    #[test]
    fn pb_estimates_match_the_measured_values() {
        let unfiltered = estimate_pb(37_643, 0.6, 0.97, 1_000_000).unwrap();
        assert!((unfiltered.value - 0.0646786941580756).abs() < 1e-12);
        assert!((unfiltered.value - 0.0647).abs() < 1e-4);
        assert!(!unfiltered.clamped);

        let filtered = estimate_pb(2_306, 0.62, 0.83, 1_000_000).unwrap();
        assert!((filtered.value - 0.004481150408083949).abs() < 1e-12);
        assert!((filtered.value - 4.48e-3).abs() < 0.01e-3);

        let ratio = unfiltered.value / filtered.value;
        assert!((ratio - 14.4335).abs() < 1e-3);
    }

    #[test]
    fn pb_estimate_edge_cases() {
        assert_eq!(estimate_pb(0, 0.6, 0.97, 100).unwrap().value, 0.0);
        let clamped = estimate_pb(1_000, 0.5, 0.5, 100).unwrap();
        assert_eq!(clamped.value, 1.0);
        assert!(clamped.clamped);
        assert!(matches!(
            estimate_pb(1, 0.6, 0.97, 0),
            Err(AnalysisError::ZeroClickCount)
        ));
        assert!(estimate_pb(1, 0.0, 0.97, 10).is_err());
        assert!(estimate_pb(1, 0.6, 1.5, 10).is_err());
    }

    fn hv_matrix(r_hh: (u64, u64), r_hv: (u64, u64), r_vh: (u64, u64), r_vv: (u64, u64)) -> RMatrix {
        // Cells row-major over [H, V]: (H,H), (H,V), (V,H), (V,V) where the
        // column is Eve's analyzer target.
        RMatrix::from_cells(
            &[Channel::H, Channel::V],
            &[
                RMatrixCell {
                    bob_clicks: r_hh.0,
                    coincidences: r_hh.1,
                },
                RMatrixCell {
                    bob_clicks: r_hv.0,
                    coincidences: r_hv.1,
                },
                RMatrixCell {
                    bob_clicks: r_vh.0,
                    coincidences: r_vh.1,
                },
                RMatrixCell {
                    bob_clicks: r_vv.0,
                    coincidences: r_vv.1,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn ratio_is_exactly_coincidences_over_clicks() {
        let matrix = hv_matrix(
            (1_000_000, 5_000),
            (1_000_000, 1_450),
            (1_000_000, 3_660),
            (1_000_000, 5_690),
        );
        assert!((matrix.ratio(Channel::H, Channel::H).unwrap() - 5.00e-3).abs() < 1e-12);
        assert!((matrix.ratio(Channel::V, Channel::V).unwrap() - 5.69e-3).abs() < 1e-12);
    }

    #[test]
    fn observed_leakage_matches_reported_values() {
        let matrix = hv_matrix(
            (1_000_000, 5_000),
            (1_000_000, 1_450),
            (1_000_000, 3_660),
            (1_000_000, 5_690),
        );
        let leak_h = observed_leakage(&matrix, Channel::H).unwrap();
        assert!((leak_h - 3.55e-3).abs() < 1e-12, "leak_h {leak_h}");
        let leak_v = observed_leakage(&matrix, Channel::V).unwrap();
        assert!((leak_v - 2.03e-3).abs() < 1e-12, "leak_v {leak_v}");
    }

    #[test]
    fn symmetric_matrix_leaks_nothing() {
        let matrix = hv_matrix((1000, 7), (1000, 7), (1000, 3), (1000, 3));
        assert_eq!(observed_leakage(&matrix, Channel::H).unwrap(), 0.0);
        // Negative estimates pass through unclamped.
        let noisy = hv_matrix((1000, 2), (1000, 5), (1000, 0), (1000, 0));
        assert!(observed_leakage(&noisy, Channel::H).unwrap() < 0.0);
    }

    #[test]
    fn empty_cell_error_names_the_cell() {
        let err = RMatrix::from_cells(
            &[Channel::H, Channel::V],
            &[
                RMatrixCell {
                    bob_clicks: 10,
                    coincidences: 1,
                },
                RMatrixCell {
                    bob_clicks: 0,
                    coincidences: 0,
                },
                RMatrixCell {
                    bob_clicks: 10,
                    coincidences: 1,
                },
                RMatrixCell {
                    bob_clicks: 10,
                    coincidences: 1,
                },
            ],
        )
        .unwrap_err();
        match err {
            AnalysisError::EmptyMatrixCell { cell } => assert_eq!(cell, "R_HV"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gated_counts_agree_with_ground_truth_tags() {
        // Synthetic log: three H clicks, one V click; eve clicks placed so
        // that exactly the backflash-tagged ones fall inside the gate.
        let bob = |id, det, t_ns: i64| ClickRecord {
            id,
            detector: det,
            time_ps: t_ns * PS_PER_NS,
            cause: ClickCause::Signal,
            parent: Some(EventRef::Pulse(id)),
        };
        let log = EventLog {
            bob_clicks: alloc::vec![
                bob(0, DetectorId::BobH, 0),
                bob(1, DetectorId::BobV, 200),
                bob(2, DetectorId::BobH, 400),
                bob(3, DetectorId::BobH, 600),
            ],
            eve_clicks: alloc::vec![
                ClickRecord {
                    id: 10,
                    detector: DetectorId::Eve,
                    time_ps: 27 * PS_PER_NS,
                    cause: ClickCause::Backflash,
                    parent: Some(EventRef::Click(0)),
                },
                ClickRecord {
                    id: 11,
                    detector: DetectorId::Eve,
                    time_ps: 228 * PS_PER_NS,
                    cause: ClickCause::Backflash,
                    parent: Some(EventRef::Click(1)),
                },
                // Outside the gate: a dark count in dead time between gates.
                ClickRecord {
                    id: 12,
                    detector: DetectorId::Eve,
                    time_ps: 450 * PS_PER_NS,
                    cause: ClickCause::Dark,
                    parent: None,
                },
            ],
            pulse_count: 4,
            duration_ps: 800 * PS_PER_NS,
        };
        let counts = gated_counts(&log, (25 * PS_PER_NS, 30 * PS_PER_NS)).unwrap();
        assert_eq!(counts.bob_clicks, [3, 1, 0, 0]);
        // Tag oracle: count eve clicks whose parent click is channel i and
        // whose interval lies in the gate.
        assert_eq!(counts.coincidences, [1, 1, 0, 0]);
    }

    #[test]
    fn expected_leakage_matches_calibration_number() {
        let leak = expected_leakage(0.6, 0.60, 0.091, 0.065).unwrap();
        assert!((leak - 0.0010647).abs() < 1e-12);
        // Two significant figures: 1.1e-3.
        assert!((leak * 1e3).round() / 1e3 - 1.1e-3 < 1e-12);
        assert_eq!(expected_leakage(0.0, 0.6, 0.091, 0.065).unwrap(), 0.0);
        assert_eq!(expected_leakage(1.0, 1.0, 1.0, 1.0).unwrap(), 0.5);
        assert!(expected_leakage(1.5, 0.6, 0.091, 0.065).is_err());
    }

    #[test]
    fn worst_case_tag_fraction_products() {
        let filtered = worst_case_tag_fraction(4.5e-3, 0.091).unwrap();
        assert!((filtered - 4.095e-4).abs() < 1e-12);
        assert!((filtered - 4.1e-4).abs() < 1e-5);
        let unfiltered = worst_case_tag_fraction(0.065, 0.091).unwrap();
        assert!((unfiltered - 5.915e-3).abs() < 1e-12);
        assert!((unfiltered - 5.9e-3).abs() < 2e-5);
        assert_eq!(worst_case_tag_fraction(0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.11).unwrap() - 0.499915958164528).abs() < 1e-12);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn key_rate_perfect_channel_is_one_bit() {
        let result = key_rate(&KeyRateInput {
            p_det: 1.0,
            qber: 0.0,
            leak_ec: 0.0,
            tag_fraction: 0.0,
        })
        .unwrap();
        assert_eq!(result.rate, 1.0);
        assert!(result.abort.is_none());
    }

    #[test]
    fn key_rate_matches_independent_evaluation() {
        let leak_ec = ec_leakage(1.2, 0.05, 0.1).unwrap();
        assert!((leak_ec - 0.034367634853914746).abs() < 1e-15);
        let result = key_rate(&KeyRateInput {
            p_det: 0.1,
            qber: 0.05,
            leak_ec,
            tag_fraction: 0.001,
        })
        .unwrap();
        assert!(
            (result.rate - 0.03606705229033864).abs() < 1e-12,
            "rate {}",
            result.rate
        );
        assert!((result.rate - 0.0361).abs() < 1e-4);
    }

    #[test]
    fn fully_tagged_key_aborts_to_zero() {
        let result = key_rate(&KeyRateInput {
            p_det: 0.1,
            qber: 0.01,
            leak_ec: 0.0,
            tag_fraction: 0.1,
        })
        .unwrap();
        assert_eq!(result.rate, 0.0);
        assert_eq!(result.abort, Some(KeyRateAbort::FullyTagged));
    }

    #[test]
    fn entropy_domain_violation_aborts() {
        // A = 0.1, e/A = 0.6 > 1/2.
        let result = key_rate(&KeyRateInput {
            p_det: 0.1,
            qber: 0.06,
            leak_ec: 0.0,
            tag_fraction: 0.09,
        })
        .unwrap();
        assert_eq!(result.rate, 0.0);
        assert_eq!(result.abort, Some(KeyRateAbort::EntropyDomain));
    }

    #[test]
    fn zero_tag_fraction_reduces_to_plain_bb84_rate() {
        for (p_det, qber) in [(0.1, 0.05), (0.8, 0.02), (1.0, 0.11)] {
            let leak_ec = ec_leakage(1.2, qber, p_det).unwrap();
            let tagged = key_rate(&KeyRateInput {
                p_det,
                qber,
                leak_ec,
                tag_fraction: 0.0,
            })
            .unwrap();
            let plain = p_det * (1.0 - binary_entropy(qber).unwrap()) - leak_ec;
            assert!(
                (tagged.rate - plain.max(0.0)).abs() < 1e-12,
                "p_det {p_det} qber {qber}"
            );
        }
    }

    #[test]
    fn key_rate_is_monotone_in_tag_fraction_and_error() {
        let p_det = 0.1;
        let leak_ec = 0.0;
        let mut previous = f64::INFINITY;
        for step in 0..=1000 {
            let tag_fraction = p_det * step as f64 / 1000.0;
            let result = key_rate(&KeyRateInput {
                p_det,
                qber: 0.03,
                leak_ec,
                tag_fraction,
            })
            .unwrap();
            assert!(
                result.rate <= previous + 1e-15,
                "rate rose at step {step}: {} > {previous}",
                result.rate
            );
            previous = result.rate;
        }
        assert_eq!(
            key_rate(&KeyRateInput {
                p_det,
                qber: 0.03,
                leak_ec,
                tag_fraction: p_det,
            })
            .unwrap()
            .rate,
            0.0
        );

        let mut previous = f64::INFINITY;
        for step in 0..=1000 {
            let qber = 0.5 * step as f64 / 1000.0;
            let result = key_rate(&KeyRateInput {
                p_det,
                qber,
                leak_ec,
                tag_fraction: 0.001,
            })
            .unwrap();
            assert!(result.rate <= previous + 1e-15, "rate rose at qber {qber}");
            previous = result.rate;
        }
    }
}
