//! Statistical models of single-photon detectors.
//!
//! An avalanche click emits backflash photons: the photon count is Poisson
//! with mean `mu = -ln(1 - P_b)`, so the probability of at least one emitted
//! photon per click is exactly the configured `P_b`. Emission delays follow
//! a three-region temporal profile (avalanche build-up, capacitive decay,
//! quench), wavelengths follow a configurable piecewise-linear spectral
//! density, and the polarization of each emitted photon is an independent
//! uniformly random linear state.

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::event::{ns_to_ps, ClickCause, ClickRecord, DetectorId, EventRef, PhotonEvent, PhotonOrigin};
use crate::optics::JonesVector;
use crate::rng::StreamRng;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("invalid detector parameter `{field}`: {reason}")]
    InvalidParam {
        field: &'static str,
        reason: &'static str,
    },
    #[error("backflash probability of 1 leaves the Poisson mean undefined")]
    BackflashProbSaturated,
    #[error("electron count must be positive")]
    NonPositiveElectronCount,
}

/// Temporal profile of backflash emission delays after an avalanche.
///
/// The delay density on `[0, quench_ns]` is
/// `(1 - exp(-t/rise)) * exp(-t/decay)`: an exponential build-up of
/// avalanche current followed by a capacitive-discharge decay. At
/// `quench_ns` the quenching circuit drops emission to near zero; a
/// `residual_after_quench` fraction of delays falls in an exponential tail
/// beyond the quench point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackflashProfile {
    pub rise_ns: f64,
    pub decay_ns: f64,
    pub quench_ns: f64,
    pub residual_after_quench: f64,
}

impl Default for BackflashProfile {
    /// Qualitative defaults: build-up over a few ns, ~10 ns decay region,
    /// quench at 17 ns. Not measured values; configure to taste.
    fn default() -> Self {
        Self {
            rise_ns: 1.0,
            decay_ns: 8.0,
            quench_ns: 17.0,
            residual_after_quench: 1e-3,
        }
    }
}

impl BackflashProfile {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.rise_ns > 0.0) {
            return Err(DeviceError::InvalidParam {
                field: "backflash_profile.rise_ns",
                reason: "must be positive",
            });
        }
        if !(self.decay_ns > 0.0) {
            return Err(DeviceError::InvalidParam {
                field: "backflash_profile.decay_ns",
                reason: "must be positive",
            });
        }
        if !(self.quench_ns > 0.0) {
            return Err(DeviceError::InvalidParam {
                field: "backflash_profile.quench_ns",
                reason: "must be positive",
            });
        }
        if !(0.0..1.0).contains(&self.residual_after_quench) {
            return Err(DeviceError::InvalidParam {
                field: "backflash_profile.residual_after_quench",
                reason: "must be in [0, 1)",
            });
        }
        Ok(())
    }

    /// Antiderivative of the unnormalized main-region density at `t`.
    fn primitive(&self, t: f64) -> f64 {
        let r = self.rise_ns;
        let d = self.decay_ns;
        let combined = r * d / (r + d);
        d * (1.0 - (-t / d).exp()) - combined * (1.0 - (-t / combined).exp())
    }

    /// Cumulative distribution of the emission delay in ns.
    pub fn cdf(&self, t_ns: f64) -> f64 {
        if t_ns <= 0.0 {
            return 0.0;
        }
        let main_mass = 1.0 - self.residual_after_quench;
        let norm = self.primitive(self.quench_ns);
        if t_ns <= self.quench_ns {
            main_mass * self.primitive(t_ns) / norm
        } else {
            main_mass
                + self.residual_after_quench
                    * (1.0 - (-(t_ns - self.quench_ns) / self.decay_ns).exp())
        }
    }

    /// Draw one emission delay in ns by inverting the CDF.
    pub fn sample_delay_ns(&self, rng: &mut StreamRng) -> f64 {
        let u: f64 = rng.random();
        let main_mass = 1.0 - self.residual_after_quench;
        if u < main_mass {
            let target = u / main_mass * self.primitive(self.quench_ns);
            // Bisection; the primitive is strictly increasing on [0, quench].
            let mut lo = 0.0;
            let mut hi = self.quench_ns;
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if self.primitive(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        } else {
            let tail_u = (u - main_mass) / self.residual_after_quench;
            self.quench_ns - self.decay_ns * (1.0 - tail_u).ln()
        }
    }
}

/// Piecewise-linear relative spectral density over a wavelength support.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    /// (wavelength nm, relative density) nodes with strictly increasing
    /// wavelengths.
    points: Vec<(f64, f64)>,
    /// Cumulative unnormalized mass up to each node.
    cumulative: Vec<f64>,
    total: f64,
}

impl SpectralDensity {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, DeviceError> {
        if points.len() < 2 {
            return Err(DeviceError::InvalidParam {
                field: "spectrum.points",
                reason: "need at least two nodes",
            });
        }
        for pair in points.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(DeviceError::InvalidParam {
                    field: "spectrum.points",
                    reason: "wavelengths must be strictly increasing",
                });
            }
        }
        if points.iter().any(|&(_, y)| !(y >= 0.0) || !y.is_finite()) {
            return Err(DeviceError::InvalidParam {
                field: "spectrum.points",
                reason: "densities must be finite and non-negative",
            });
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        let mut total = 0.0;
        for pair in points.windows(2) {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            total += 0.5 * (y0 + y1) * (x1 - x0);
            cumulative.push(total);
        }
        if !(total > 0.0) {
            return Err(DeviceError::InvalidParam {
                field: "spectrum.points",
                reason: "density must have positive total mass",
            });
        }
        Ok(Self {
            points,
            cumulative,
            total,
        })
    }

    /// Broadband emission rising from 550 nm to a gentle 900 nm peak and
    /// falling toward 1000 nm. Qualitative shape, not calibrated.
    pub fn broadband_default() -> Self {
        Self::new(alloc::vec![(550.0, 0.2), (900.0, 1.0), (1000.0, 0.8)])
            .expect("default spectrum is valid")
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn min_nm(&self) -> f64 {
        self.points[0].0
    }

    pub fn max_nm(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    /// Normalized density at `wavelength_nm` (zero outside the support).
    pub fn pdf(&self, wavelength_nm: f64) -> f64 {
        if wavelength_nm < self.min_nm() || wavelength_nm > self.max_nm() {
            return 0.0;
        }
        let idx = match self
            .points
            .binary_search_by(|&(x, _)| x.partial_cmp(&wavelength_nm).unwrap())
        {
            Ok(i) => return self.points[i].1 / self.total,
            Err(i) => i - 1,
        };
        let (x0, y0) = self.points[idx];
        let (x1, y1) = self.points[idx + 1];
        let t = (wavelength_nm - x0) / (x1 - x0);
        (y0 + t * (y1 - y0)) / self.total
    }

    /// Cumulative probability up to `wavelength_nm`.
    pub fn cdf(&self, wavelength_nm: f64) -> f64 {
        if wavelength_nm <= self.min_nm() {
            return 0.0;
        }
        if wavelength_nm >= self.max_nm() {
            return 1.0;
        }
        let idx = self
            .points
            .partition_point(|&(x, _)| x <= wavelength_nm)
            - 1;
        let (x0, y0) = self.points[idx];
        let (x1, y1) = self.points[idx + 1];
        let slope = (y1 - y0) / (x1 - x0);
        let dt = wavelength_nm - x0;
        (self.cumulative[idx] + y0 * dt + 0.5 * slope * dt * dt) / self.total
    }

    /// Exact probability mass in `[lo_nm, hi_nm]`.
    pub fn band_fraction(&self, lo_nm: f64, hi_nm: f64) -> f64 {
        if hi_nm <= lo_nm {
            return 0.0;
        }
        self.cdf(hi_nm) - self.cdf(lo_nm)
    }

    /// Draw one wavelength by inverting the CDF (exact within segments).
    pub fn sample_nm(&self, rng: &mut StreamRng) -> f64 {
        let target = rng.random::<f64>() * self.total;
        let idx = self
            .cumulative
            .partition_point(|&c| c <= target)
            .saturating_sub(1)
            .min(self.points.len() - 2);
        let (x0, y0) = self.points[idx];
        let (x1, y1) = self.points[idx + 1];
        let slope = (y1 - y0) / (x1 - x0);
        let remaining = target - self.cumulative[idx];
        let dt = if slope.abs() < 1e-300 {
            if y0 > 0.0 {
                remaining / y0
            } else {
                0.0
            }
        } else {
            let disc = (y0 * y0 + 2.0 * slope * remaining).max(0.0);
            (disc.sqrt() - y0) / slope
        };
        (x0 + dt).clamp(x0, x1)
    }

    /// Rebuild this density with a flat plateau over `[band_lo, band_hi]`
    /// whose height is solved so that the band carries exactly `fraction`
    /// of the total mass. Used to calibrate the in-band emission against a
    /// measured filtered/unfiltered probability ratio.
    pub fn with_band_fraction(
        &self,
        band_lo_nm: f64,
        band_hi_nm: f64,
        fraction: f64,
    ) -> Result<Self, DeviceError> {
        const RAMP_NM: f64 = 0.5;
        let width = band_hi_nm - band_lo_nm;
        if !(width > 0.0) || !(0.0..1.0).contains(&fraction) {
            return Err(DeviceError::InvalidParam {
                field: "spectrum.band",
                reason: "band must be non-empty and fraction in [0, 1)",
            });
        }
        let lo_anchor = band_lo_nm - RAMP_NM;
        let hi_anchor = band_hi_nm + RAMP_NM;
        if lo_anchor <= self.min_nm() || hi_anchor >= self.max_nm() {
            return Err(DeviceError::InvalidParam {
                field: "spectrum.band",
                reason: "band plus ramps must lie inside the support",
            });
        }
        let base_lo = self.pdf(lo_anchor) * self.total;
        let base_hi = self.pdf(hi_anchor) * self.total;

        let mut points: Vec<(f64, f64)> = self
            .points
            .iter()
            .copied()
            .filter(|&(x, _)| x < lo_anchor)
            .collect();
        points.push((lo_anchor, base_lo));
        // Plateau height placeholder, solved below.
        points.push((band_lo_nm, 0.0));
        points.push((band_hi_nm, 0.0));
        points.push((hi_anchor, base_hi));
        points.extend(self.points.iter().copied().filter(|&(x, _)| x > hi_anchor));

        // Mass outside the plateau region is independent of the height h;
        // the plateau contributes h*width inside the band and
        // h*RAMP_NM + RAMP_NM*(base_lo + base_hi)/2 through the two ramps.
        let outside: f64 = points
            .windows(2)
            .filter(|pair| pair[1].0 <= lo_anchor || pair[0].0 >= hi_anchor)
            .map(|pair| 0.5 * (pair[0].1 + pair[1].1) * (pair[1].0 - pair[0].0))
            .sum();
        let constant = outside + RAMP_NM * 0.5 * (base_lo + base_hi);
        let denom = width - fraction * (width + RAMP_NM);
        if denom <= 0.0 {
            return Err(DeviceError::InvalidParam {
                field: "spectrum.band",
                reason: "requested band fraction is too large for this band",
            });
        }
        let height = fraction * constant / denom;
        for point in points.iter_mut() {
            if point.0 >= band_lo_nm && point.0 <= band_hi_nm {
                point.1 = height;
            }
        }
        Self::new(points)
    }
}

/// Wavelength-dependent detection efficiency, piecewise linear with
/// constant extrapolation beyond the endpoints. A single node means a flat
/// curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyCurve {
    points: Vec<(f64, f64)>,
}

impl EfficiencyCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, DeviceError> {
        if points.is_empty() {
            return Err(DeviceError::InvalidParam {
                field: "efficiency",
                reason: "need at least one node",
            });
        }
        for pair in points.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(DeviceError::InvalidParam {
                    field: "efficiency",
                    reason: "wavelengths must be strictly increasing",
                });
            }
        }
        if points.iter().any(|&(_, e)| !(0.0..=1.0).contains(&e)) {
            return Err(DeviceError::InvalidParam {
                field: "efficiency",
                reason: "efficiencies must be in [0, 1]",
            });
        }
        Ok(Self { points })
    }

    pub fn flat(efficiency: f64) -> Result<Self, DeviceError> {
        Self::new(alloc::vec![(0.0, efficiency)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn at(&self, wavelength_nm: f64) -> f64 {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if wavelength_nm <= first.0 {
            return first.1;
        }
        if wavelength_nm >= last.0 {
            return last.1;
        }
        let idx = self.points.partition_point(|&(x, _)| x <= wavelength_nm) - 1;
        let (x0, y0) = self.points[idx];
        let (x1, y1) = self.points[idx + 1];
        y0 + (wavelength_nm - x0) / (x1 - x0) * (y1 - y0)
    }
}

/// Parameters of one single-photon detector.
///
/// `backflash_prob` is `P_b`: the probability that a click emits at least
/// one photon out of the detector, before any receiver loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ApdParams {
    pub efficiency: EfficiencyCurve,
    pub dark_count_rate_hz: f64,
    pub dead_time_ns: f64,
    pub backflash_prob: f64,
    pub electrons_per_avalanche: f64,
    pub profile: BackflashProfile,
    pub spectrum: SpectralDensity,
    /// Gaussian timestamp jitter applied to recorded click times.
    pub jitter_sigma_ps: f64,
    /// Fixed electronic delay added to recorded click times.
    pub electronic_delay_ns: f64,
}

impl ApdParams {
    /// Actively quenched silicon APD module: flat 0.6 efficiency over the
    /// broadband emission window, 500 Hz dark counts, 50 ns dead time, and
    /// the measured backflash probability of 0.065.
    pub fn silicon_apd() -> Self {
        Self {
            efficiency: EfficiencyCurve::flat(0.6).unwrap(),
            dark_count_rate_hz: 500.0,
            dead_time_ns: 50.0,
            backflash_prob: 0.065,
            electrons_per_avalanche: 2.7e8,
            profile: BackflashProfile::default(),
            spectrum: SpectralDensity::broadband_default(),
            jitter_sigma_ps: 0.0,
            electronic_delay_ns: 0.0,
        }
    }

    /// Photomultiplier tube: peak efficiency 0.4 at 580 nm, low dark rate,
    /// and no backflash emission.
    pub fn pmt() -> Self {
        Self {
            efficiency: EfficiencyCurve::new(alloc::vec![
                (430.0, 0.25),
                (580.0, 0.4),
                (700.0, 0.1),
            ])
            .unwrap(),
            dark_count_rate_hz: 50.0,
            dead_time_ns: 50.0,
            backflash_prob: 0.0,
            electrons_per_avalanche: 1e6,
            profile: BackflashProfile::default(),
            spectrum: SpectralDensity::broadband_default(),
            jitter_sigma_ps: 0.0,
            electronic_delay_ns: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.dark_count_rate_hz >= 0.0) {
            return Err(DeviceError::InvalidParam {
                field: "dark_count_rate_hz",
                reason: "must be non-negative",
            });
        }
        if !(self.dead_time_ns >= 0.0) {
            return Err(DeviceError::InvalidParam {
                field: "dead_time_ns",
                reason: "must be non-negative",
            });
        }
        if !(0.0..=1.0).contains(&self.backflash_prob) {
            return Err(DeviceError::InvalidParam {
                field: "backflash_prob",
                reason: "must be in [0, 1]",
            });
        }
        if !(self.electrons_per_avalanche > 0.0) {
            return Err(DeviceError::InvalidParam {
                field: "electrons_per_avalanche",
                reason: "must be positive",
            });
        }
        if !(self.jitter_sigma_ps >= 0.0) {
            return Err(DeviceError::InvalidParam {
                field: "jitter_sigma_ps",
                reason: "must be non-negative",
            });
        }
        self.profile.validate()
    }

    fn dead_time_ps(&self) -> i64 {
        ns_to_ps(self.dead_time_ns)
    }

    fn electronic_delay_ps(&self) -> i64 {
        ns_to_ps(self.electronic_delay_ns)
    }
}

/// Per-detector dead-time state, owned by exactly one simulation trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorState {
    dead_until_ps: i64,
}

impl DetectorState {
    pub fn live() -> Self {
        Self {
            dead_until_ps: i64::MIN,
        }
    }

    /// Dead-time gate: a detector hit at exactly `dead_until_ps` is live
    /// again (non-paralyzable dead time).
    pub fn is_dead(&self, time_ps: i64) -> bool {
        time_ps < self.dead_until_ps
    }
}

/// A registered detection: the avalanche time drives downstream physics
/// (backflash emission, dead time); the click record carries the recorded
/// timestamp including jitter and electronic delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub record: ClickRecord,
    pub avalanche_time_ps: i64,
}

fn cause_of(origin: PhotonOrigin) -> (ClickCause, Option<EventRef>) {
    match origin {
        PhotonOrigin::Pulse { pulse_id } => (ClickCause::Signal, Some(EventRef::Pulse(pulse_id))),
        PhotonOrigin::Reflection { pulse_id, .. } => {
            (ClickCause::Reflection, Some(EventRef::Pulse(pulse_id)))
        }
        PhotonOrigin::Backflash { click_id, .. } => {
            (ClickCause::Backflash, Some(EventRef::Click(click_id)))
        }
    }
}

fn recorded_time(params: &ApdParams, avalanche_ps: i64, rng: &mut StreamRng) -> i64 {
    let mut time = avalanche_ps + params.electronic_delay_ps();
    if params.jitter_sigma_ps > 0.0 {
        let jitter = Normal::new(0.0, params.jitter_sigma_ps)
            .expect("validated sigma")
            .sample(rng);
        time += jitter.round() as i64;
    }
    time
}

/// Register a photon on a detector.
///
/// A live detector clicks with probability `efficiency(wavelength)`;
/// clicking makes it dead for `dead_time_ns`. Deterministic given the rng
/// stream.
pub fn apd_detect(
    photon: &PhotonEvent,
    params: &ApdParams,
    state: &mut DetectorState,
    detector: DetectorId,
    click_id: u64,
    rng: &mut StreamRng,
) -> Option<Detection> {
    if state.is_dead(photon.time_ps) {
        return None;
    }
    let efficiency = params.efficiency.at(photon.wavelength_nm);
    if efficiency < 1.0 && rng.random::<f64>() >= efficiency {
        return None;
    }
    state.dead_until_ps = photon.time_ps + params.dead_time_ps();
    let (cause, parent) = cause_of(photon.origin);
    Some(Detection {
        record: ClickRecord {
            id: click_id,
            detector,
            time_ps: recorded_time(params, photon.time_ps, rng),
            cause,
            parent,
        },
        avalanche_time_ps: photon.time_ps,
    })
}

/// Photomultiplier-tube detection: identical to [`apd_detect`]; PMT
/// parameter sets pin `backflash_prob` to zero so [`backflash_emit`] never
/// produces photons for their clicks.
pub fn pmt_detect(
    photon: &PhotonEvent,
    params: &ApdParams,
    state: &mut DetectorState,
    detector: DetectorId,
    click_id: u64,
    rng: &mut StreamRng,
) -> Option<Detection> {
    debug_assert_eq!(params.backflash_prob, 0.0);
    apd_detect(photon, params, state, detector, click_id, rng)
}

/// Register a click that needs no efficiency draw (dark counts, externally
/// induced triggers). The dead-time gate still applies and the click makes
/// the detector dead like any other.
#[allow(clippy::too_many_arguments)]
pub fn register_forced_click(
    time_ps: i64,
    params: &ApdParams,
    state: &mut DetectorState,
    detector: DetectorId,
    click_id: u64,
    cause: ClickCause,
    parent: Option<EventRef>,
    rng: &mut StreamRng,
) -> Option<Detection> {
    if state.is_dead(time_ps) {
        return None;
    }
    state.dead_until_ps = time_ps + params.dead_time_ps();
    Some(Detection {
        record: ClickRecord {
            id: click_id,
            detector,
            time_ps: recorded_time(params, time_ps, rng),
            cause,
            parent,
        },
        avalanche_time_ps: time_ps,
    })
}

/// Register a dark count on a detector.
pub fn register_dark(
    time_ps: i64,
    params: &ApdParams,
    state: &mut DetectorState,
    detector: DetectorId,
    click_id: u64,
    rng: &mut StreamRng,
) -> Option<Detection> {
    register_forced_click(
        time_ps,
        params,
        state,
        detector,
        click_id,
        ClickCause::Dark,
        None,
        rng,
    )
}

/// Emit the backflash photons of one click.
///
/// The photon count is Poisson with mean `-ln(1 - P_b)` so that
/// `P(>=1 photon) = P_b`. Each photon draws an independent delay from the
/// temporal profile, a wavelength from the spectral density, and a uniform
/// random linear polarization.
pub fn backflash_emit(
    click: &Detection,
    params: &ApdParams,
    rng: &mut StreamRng,
) -> Result<Vec<PhotonEvent>, DeviceError> {
    if params.backflash_prob >= 1.0 {
        return Err(DeviceError::BackflashProbSaturated);
    }
    if params.backflash_prob <= 0.0 {
        return Ok(Vec::new());
    }
    let mean = -(1.0 - params.backflash_prob).ln();
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
    let mut photons = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let delay_ns = params.profile.sample_delay_ns(rng);
        let wavelength = params.spectrum.sample_nm(rng);
        let angle = rng.random_range(0.0..180.0);
        photons.push(PhotonEvent {
            time_ps: click.avalanche_time_ps + ns_to_ps(delay_ns),
            wavelength_nm: wavelength,
            polarization: JonesVector::linear_deg(angle),
            origin: PhotonOrigin::Backflash {
                click_id: click.record.id,
                detector: click.record.detector,
            },
        });
    }
    Ok(photons)
}

/// Lower-bound probability of backflash emission per avalanche electron:
/// `P_b / n_electrons`.
pub fn per_electron_probability(p_b: f64, n_electrons: f64) -> Result<f64, DeviceError> {
    if !(n_electrons > 0.0) {
        return Err(DeviceError::NonPositiveElectronCount);
    }
    Ok(p_b / n_electrons)
}

/// Dark count arrival times of a homogeneous Poisson process, in ps.
pub fn dark_count_times(rate_hz: f64, duration_s: f64, rng: &mut StreamRng) -> Vec<i64> {
    let mut times = Vec::new();
    if rate_hz <= 0.0 || duration_s <= 0.0 {
        return times;
    }
    let exp = Exp::new(rate_hz).expect("positive rate");
    let mut t_s = 0.0;
    loop {
        t_s += exp.sample(rng);
        if t_s >= duration_s {
            return times;
        }
        times.push((t_s * 1e12).round() as i64);
    }
}
