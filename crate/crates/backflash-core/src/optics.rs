//! Polarization states and optical element transforms.
//!
//! States are normalized Jones vectors in the H/V basis. Polarizing
//! beamsplitters have a finite extinction ratio `ER` and split a state with
//! overlap `a = |<axis|state>|^2` on the transmit eigenstate as
//!
//! ```text
//! p_transmit = (ER * a + (1 - a)) / (ER + 1)
//! ```
//!
//! which reduces to Malus' law `cos^2` for `ER -> inf` and reproduces a
//! measured max/min power ratio of exactly `ER` when scanned over angle.
//! For linear states `a = cos^2(delta)` with `delta` the angle between the
//! state's polarization ellipse major axis and the PBS axis; elliptical
//! states go through the same full Jones projection.

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use core::f64::consts::PI;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("polarization state is not normalized (|amplitude|^2 = {norm_sqr})")]
    UnnormalizedState { norm_sqr: f64 },
    #[error("extinction ratio must be > 1, got {value}")]
    InvalidExtinctionRatio { value: f64 },
    #[error("filter is invalid: {reason}")]
    InvalidFilter { reason: &'static str },
    #[error("angle scan is empty")]
    EmptyScan,
    #[error("angle scan contains a negative power")]
    NegativeScanPower,
}

/// Tolerance for rejecting unnormalized input states.
const NORM_TOLERANCE: f64 = 1e-9;

/// Two-component complex polarization state in the H/V basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub amplitude_h: Complex64,
    pub amplitude_v: Complex64,
}

impl JonesVector {
    /// Build a state from raw amplitudes, normalizing to unit intensity.
    /// Returns `None` for the zero vector.
    pub fn new_normalized(amplitude_h: Complex64, amplitude_v: Complex64) -> Option<Self> {
        let norm_sqr = amplitude_h.norm_sqr() + amplitude_v.norm_sqr();
        if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
            return None;
        }
        let scale = 1.0 / norm_sqr.sqrt();
        Some(Self {
            amplitude_h: amplitude_h * scale,
            amplitude_v: amplitude_v * scale,
        })
    }

    pub fn horizontal() -> Self {
        Self::linear_deg(0.0)
    }

    pub fn vertical() -> Self {
        Self::linear_deg(90.0)
    }

    pub fn diagonal() -> Self {
        Self::linear_deg(45.0)
    }

    pub fn antidiagonal() -> Self {
        Self::linear_deg(135.0)
    }

    /// Linear polarization at `angle` degrees from horizontal.
    pub fn linear_deg(angle: f64) -> Self {
        let rad = angle.to_radians();
        Self {
            amplitude_h: Complex64::new(rad.cos(), 0.0),
            amplitude_v: Complex64::new(rad.sin(), 0.0),
        }
    }

    /// Left circular polarization.
    pub fn circular_left() -> Self {
        let inv_sqrt2 = core::f64::consts::FRAC_1_SQRT_2;
        Self {
            amplitude_h: Complex64::new(inv_sqrt2, 0.0),
            amplitude_v: Complex64::new(0.0, inv_sqrt2),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitude_h.norm_sqr() + self.amplitude_v.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    fn require_normalized(&self) -> Result<(), OpticsError> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(OpticsError::UnnormalizedState {
                norm_sqr: self.norm_sqr(),
            })
        }
    }

    /// `|<other|self>|^2`, the probability of projecting onto `other`.
    pub fn overlap_probability(&self, other: &JonesVector) -> f64 {
        let inner = other.amplitude_h.conj() * self.amplitude_h
            + other.amplitude_v.conj() * self.amplitude_v;
        inner.norm_sqr()
    }

    /// Orientation of the polarization ellipse major axis, in degrees in
    /// `[0, 180)`. Degenerate (circular) states report 0.
    pub fn major_axis_deg(&self) -> f64 {
        let s1 = self.amplitude_h.norm_sqr() - self.amplitude_v.norm_sqr();
        let s2 = 2.0 * (self.amplitude_h * self.amplitude_v.conj()).re;
        let psi = 0.5 * s2.atan2(s1);
        let mut deg = psi.to_degrees();
        if deg < 0.0 {
            deg += 180.0;
        }
        deg % 180.0
    }
}

/// Normalize an angle in degrees to `[0, 360)`.
pub fn normalize_angle_deg(angle: f64) -> f64 {
    let a = angle % 360.0;
    if a < 0.0 {
        a + 360.0
    } else {
        a
    }
}

/// A polarizing beamsplitter with finite extinction.
///
/// `extinction_ratio` is the transmitted-power ratio between a beam aligned
/// with the axis and one orthogonal to it; `f64::INFINITY` selects an ideal
/// PBS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbsSpec {
    axis_deg: f64,
    extinction_ratio: f64,
}

impl PbsSpec {
    pub fn new(axis_deg: f64, extinction_ratio: f64) -> Result<Self, OpticsError> {
        if !(extinction_ratio > 1.0) {
            return Err(OpticsError::InvalidExtinctionRatio {
                value: extinction_ratio,
            });
        }
        Ok(Self {
            axis_deg: normalize_angle_deg(axis_deg),
            extinction_ratio,
        })
    }

    pub fn ideal(axis_deg: f64) -> Self {
        Self {
            axis_deg: normalize_angle_deg(axis_deg),
            extinction_ratio: f64::INFINITY,
        }
    }

    pub fn axis_deg(&self) -> f64 {
        self.axis_deg
    }

    pub fn extinction_ratio(&self) -> f64 {
        self.extinction_ratio
    }

    /// Eigenstate of the transmitted port.
    pub fn transmit_eigenstate(&self) -> JonesVector {
        JonesVector::linear_deg(self.axis_deg)
    }

    /// Eigenstate of the reflected port.
    pub fn reflect_eigenstate(&self) -> JonesVector {
        JonesVector::linear_deg(self.axis_deg + 90.0)
    }
}

/// Result of projecting a state on a PBS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbsProjection {
    pub p_transmit: f64,
    /// Output state of the transmitted port (PBS eigenstate).
    pub transmitted: JonesVector,
    /// Output state of the reflected port (PBS eigenstate).
    pub reflected: JonesVector,
}

impl PbsProjection {
    pub fn p_reflect(&self) -> f64 {
        1.0 - self.p_transmit
    }
}

/// Transmit/reflect probabilities of `state` on `pbs`.
pub fn pbs_project(state: &JonesVector, pbs: &PbsSpec) -> Result<PbsProjection, OpticsError> {
    state.require_normalized()?;
    let transmitted = pbs.transmit_eigenstate();
    let aligned = state.overlap_probability(&transmitted);
    let er = pbs.extinction_ratio;
    let p_transmit = if er.is_infinite() {
        aligned
    } else {
        (er * aligned + (1.0 - aligned)) / (er + 1.0)
    };
    Ok(PbsProjection {
        p_transmit,
        transmitted,
        reflected: pbs.reflect_eigenstate(),
    })
}

/// A waveplate (linear retarder).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveplateSpec {
    /// Phase retardance between fast and slow axes, radians.
    pub retardance_rad: f64,
    /// Fast axis orientation, degrees from horizontal.
    pub fast_axis_deg: f64,
}

impl WaveplateSpec {
    pub fn new(retardance_rad: f64, fast_axis_deg: f64) -> Self {
        Self {
            retardance_rad,
            fast_axis_deg: normalize_angle_deg(fast_axis_deg),
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn half_wave(fast_axis_deg: f64) -> Self {
        Self::new(PI, fast_axis_deg)
    }

    pub fn quarter_wave(fast_axis_deg: f64) -> Self {
        Self::new(PI / 2.0, fast_axis_deg)
    }
}

/// Apply the unitary Jones matrix of `wp` to `state`. Norm is preserved.
pub fn waveplate_apply(
    state: &JonesVector,
    wp: &WaveplateSpec,
) -> Result<JonesVector, OpticsError> {
    state.require_normalized()?;
    let theta = wp.fast_axis_deg.to_radians();
    let (sin_t, cos_t) = theta.sin_cos();
    let half = wp.retardance_rad / 2.0;
    let fast = Complex64::from_polar(1.0, -half);
    let slow = Complex64::from_polar(1.0, half);

    // R(theta) * diag(fast, slow) * R(-theta)
    let j00 = fast * cos_t * cos_t + slow * sin_t * sin_t;
    let j01 = (fast - slow) * cos_t * sin_t;
    let j11 = fast * sin_t * sin_t + slow * cos_t * cos_t;

    Ok(JonesVector {
        amplitude_h: j00 * state.amplitude_h + j01 * state.amplitude_v,
        amplitude_v: j01 * state.amplitude_h + j11 * state.amplitude_v,
    })
}

/// Spectral filter passband profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterProfile {
    /// Full transmission inside `center +- fwhm/2`, zero outside.
    TopHat,
    /// Gaussian with the given FWHM, truncated to zero beyond
    /// `GAUSSIAN_SUPPORT_FWHM` widths from center.
    Gaussian,
}

/// Half-support of the Gaussian profile, in units of FWHM.
pub const GAUSSIAN_SUPPORT_FWHM: f64 = 5.0;

/// A bandpass spectral filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub center_nm: f64,
    pub bandwidth_fwhm_nm: f64,
    pub peak_transmission: f64,
    pub profile: FilterProfile,
}

impl FilterSpec {
    pub fn top_hat(
        center_nm: f64,
        bandwidth_fwhm_nm: f64,
        peak_transmission: f64,
    ) -> Result<Self, OpticsError> {
        Self::new(center_nm, bandwidth_fwhm_nm, peak_transmission, FilterProfile::TopHat)
    }

    pub fn new(
        center_nm: f64,
        bandwidth_fwhm_nm: f64,
        peak_transmission: f64,
        profile: FilterProfile,
    ) -> Result<Self, OpticsError> {
        if !(center_nm > 0.0) {
            return Err(OpticsError::InvalidFilter {
                reason: "center wavelength must be positive",
            });
        }
        if !(bandwidth_fwhm_nm > 0.0) {
            return Err(OpticsError::InvalidFilter {
                reason: "bandwidth must be positive",
            });
        }
        if !(0.0..=1.0).contains(&peak_transmission) {
            return Err(OpticsError::InvalidFilter {
                reason: "peak transmission must be in [0, 1]",
            });
        }
        Ok(Self {
            center_nm,
            bandwidth_fwhm_nm,
            peak_transmission,
            profile,
        })
    }

    /// Lower and upper edge of the nonzero support.
    pub fn support_nm(&self) -> (f64, f64) {
        let half = match self.profile {
            FilterProfile::TopHat => self.bandwidth_fwhm_nm / 2.0,
            FilterProfile::Gaussian => GAUSSIAN_SUPPORT_FWHM * self.bandwidth_fwhm_nm,
        };
        (self.center_nm - half, self.center_nm + half)
    }
}

/// Deterministic transmission of `filter` at `wavelength_nm`.
///
/// Top-hat passbands include both edges.
pub fn filter_transmission(wavelength_nm: f64, filter: &FilterSpec) -> f64 {
    let offset = wavelength_nm - filter.center_nm;
    match filter.profile {
        FilterProfile::TopHat => {
            if offset.abs() <= filter.bandwidth_fwhm_nm / 2.0 {
                filter.peak_transmission
            } else {
                0.0
            }
        }
        FilterProfile::Gaussian => {
            if offset.abs() > GAUSSIAN_SUPPORT_FWHM * filter.bandwidth_fwhm_nm {
                0.0
            } else {
                let ratio = offset / filter.bandwidth_fwhm_nm;
                filter.peak_transmission * (-4.0 * core::f64::consts::LN_2 * ratio * ratio).exp()
            }
        }
    }
}

/// Extremes of a polarizer angle scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanExtrema {
    pub max_angle_deg: f64,
    pub max_power: f64,
    pub min_angle_deg: f64,
    pub min_power: f64,
    /// `max_power / min_power`; `f64::INFINITY` when the minimum is zero.
    pub ratio: f64,
}

/// Locate the power extremes of an angle scan and their ratio.
///
/// Ties are broken by the smallest angle.
pub fn extinction_ratio_from_scan(
    scan: &[(f64, f64)],
) -> Result<ScanExtrema, OpticsError> {
    if scan.is_empty() {
        return Err(OpticsError::EmptyScan);
    }
    if scan.iter().any(|&(_, p)| p < 0.0) {
        return Err(OpticsError::NegativeScanPower);
    }
    let (mut max_angle, mut max_power) = scan[0];
    let (mut min_angle, mut min_power) = scan[0];
    for &(angle, power) in &scan[1..] {
        if power > max_power || (power == max_power && angle < max_angle) {
            max_angle = angle;
            max_power = power;
        }
        if power < min_power || (power == min_power && angle < min_angle) {
            min_angle = angle;
            min_power = power;
        }
    }
    let ratio = if min_power == 0.0 {
        f64::INFINITY
    } else {
        max_power / min_power
    };
    Ok(ScanExtrema {
        max_angle_deg: max_angle,
        max_power,
        min_angle_deg: min_angle,
        min_power,
        ratio,
    })
}
