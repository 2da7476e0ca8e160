//! Gaussian pulses stretched by group-delay dispersion.
//!
//! A transform-limited pulse of spectral width `1/σ` picks up the quadratic
//! spectral phase `D (ω − Δ)² / 2`. In the time domain this gives a Gaussian
//! of stretched width `σ_D² = (σ⁴ + D²) / σ²`, a linear chirp of rate
//! `δ² = D / (σ⁴ + D²)` and a complex amplitude `Ω₀ / √(σ² + iD)`.
//!
//! [`ChirpedPulse::envelope`] returns the field in the frame rotating at the
//! carrier `Δ`; the fast `e^{−iΔt}` factor is never sampled.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Speed of light in nm/ps.
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 2.997_924_58e5;

pub const DEFAULT_WAVELENGTH_NM: f64 = 393.0;

/// `2√(2 ln 2)`, the intensity FWHM of a Gaussian with width parameter 1.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// An unchirped Gaussian pulse together with the dispersion applied to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PulseSpecRepr", into = "PulseSpecRepr")]
pub struct PulseSpec {
    /// Transform-limited width σ, ps.
    pub sigma: f64,
    /// Group-delay dispersion D, ps². Negative values give a down-chirp.
    pub gdd: f64,
    /// Spectral amplitude scale Ω₀.
    pub omega0: f64,
    /// Carrier wavelength, nm.
    pub wavelength: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseSpecRepr {
    sigma_ps: f64,
    gdd_ps2: f64,
    omega0: f64,
    #[serde(default = "default_wavelength")]
    wavelength_nm: f64,
}

fn default_wavelength() -> f64 {
    DEFAULT_WAVELENGTH_NM
}

impl TryFrom<PulseSpecRepr> for PulseSpec {
    type Error = Error;

    fn try_from(r: PulseSpecRepr) -> Result<Self> {
        PulseSpec::new(r.sigma_ps, r.gdd_ps2, r.omega0, r.wavelength_nm)
    }
}

impl From<PulseSpec> for PulseSpecRepr {
    fn from(p: PulseSpec) -> Self {
        PulseSpecRepr {
            sigma_ps: p.sigma,
            gdd_ps2: p.gdd,
            omega0: p.omega0,
            wavelength_nm: p.wavelength,
        }
    }
}

impl PulseSpec {
    pub fn new(sigma: f64, gdd: f64, omega0: f64, wavelength: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma_ps", format!("must be > 0, got {sigma}")));
        }
        if !gdd.is_finite() {
            return Err(Error::invalid("gdd_ps2", "must be finite"));
        }
        if !(omega0 >= 0.0 && omega0.is_finite()) {
            return Err(Error::invalid("omega0", format!("must be >= 0, got {omega0}")));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid(
                "wavelength_nm",
                format!("must be > 0, got {wavelength}"),
            ));
        }
        Ok(PulseSpec {
            sigma,
            gdd,
            omega0,
            wavelength,
        })
    }

    /// Pulse at the default 393 nm carrier.
    pub fn at_default_wavelength(sigma: f64, gdd: f64, omega0: f64) -> Result<Self> {
        Self::new(sigma, gdd, omega0, DEFAULT_WAVELENGTH_NM)
    }

    /// Carrier angular frequency Δ = 2πc/λ, rad/ps.
    pub fn carrier_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT_NM_PER_PS / self.wavelength
    }

    /// `σ⁴ + D²`, the quantity every chirp relation is built from.
    fn spread(&self) -> f64 {
        self.sigma.powi(4) + self.gdd * self.gdd
    }
}

/// Time-domain parameters of a linearly chirped Gaussian pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpedPulse {
    /// Stretched width σ_D, ps.
    pub sigma_d: f64,
    /// Chirp rate δ², rad/ps².
    pub chirp_rate: f64,
    /// Peak amplitude |Ω_D|, rad/ps.
    pub omega_d: f64,
    /// Constant phase of the envelope, rad. Holds arg(Ω_D) and any
    /// propagation-direction or interferometer phase.
    pub carrier_phase: f64,
    /// Arrival time of the envelope peak, ps.
    pub center_time: f64,
}

pub fn chirp_transform(spec: &PulseSpec) -> ChirpedPulse {
    let s2 = spec.sigma * spec.sigma;
    let spread = spec.spread();
    // arg(1/√(σ² + iD)) = −½ atan2(D, σ²)
    let phase = -0.5 * spec.gdd.atan2(s2);
    ChirpedPulse {
        sigma_d: (spread / s2).sqrt(),
        chirp_rate: spec.gdd / spread,
        omega_d: spec.omega0 / spread.sqrt().sqrt(),
        carrier_phase: phase,
        center_time: 0.0,
    }
}

impl ChirpedPulse {
    /// Rotating-frame field `Ω_D exp(−τ²/2σ_D² − iδ²τ²/2 + iφ)`, `τ = t − center_time`.
    #[inline]
    pub fn envelope(&self, t: f64) -> Complex64 {
        let tau = t - self.center_time;
        let mag = self.omega_d * self.gaussian(tau);
        let arg = self.carrier_phase - 0.5 * self.chirp_rate * tau * tau;
        Complex64::from_polar(mag, arg)
    }

    /// Real Gaussian profile `w(τ) = exp(−τ²/2σ_D²)`.
    #[inline]
    pub fn gaussian(&self, tau: f64) -> f64 {
        (-0.5 * (tau / self.sigma_d).powi(2)).exp()
    }

    /// Instantaneous rotating-frame frequency `δ² τ`.
    pub fn instantaneous_frequency(&self, t: f64) -> f64 {
        self.chirp_rate * (t - self.center_time)
    }

    pub fn fwhm(&self) -> f64 {
        FWHM_PER_SIGMA * self.sigma_d
    }

    pub fn centered_at(mut self, t: f64) -> Self {
        self.center_time = t;
        self
    }

    pub fn phase_shifted(mut self, phi: f64) -> Self {
        self.carrier_phase += phi;
        self
    }

    pub fn with_amplitude(mut self, omega_d: f64) -> Self {
        self.omega_d = omega_d;
        self
    }

    /// Time-integrated intensity `∫|Ω(t)|² dt = |Ω_D|² σ_D √π`.
    pub fn fluence(&self) -> f64 {
        self.omega_d * self.omega_d * self.sigma_d * PI.sqrt()
    }
}

pub fn fwhm_from_width(sigma_d: f64) -> Result<f64> {
    if !(sigma_d > 0.0) {
        return Err(Error::invalid("sigma_d", format!("must be > 0, got {sigma_d}")));
    }
    Ok(FWHM_PER_SIGMA * sigma_d)
}

/// Stretched FWHM from the transform-limited FWHM `t₀`, in the `2√(2 ln 2)·σ` convention:
/// `√((t₀⁴ + 64 D² ln²2) / t₀²)`. Equals `fwhm_from_width(σ_D)` exactly.
pub fn fwhm_stretch(fwhm0: f64, gdd: f64) -> Result<f64> {
    if !(fwhm0 > 0.0) {
        return Err(Error::invalid("fwhm0", format!("must be > 0, got {fwhm0}")));
    }
    let t2 = fwhm0 * fwhm0;
    Ok(((t2 * t2 + 64.0 * gdd * gdd * LN_2 * LN_2) / t2).sqrt())
}
