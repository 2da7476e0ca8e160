//! Photon recoil and phonon bookkeeping for the pulse kicks.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// CODATA 2018 values.
pub mod constants {
    /// Reduced Planck constant, J·s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Atomic mass constant, kg.
    pub const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;
    /// Speed of light, m/s (exact).
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
}

use constants::{ATOMIC_MASS, HBAR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonSpec {
    /// Mass in atomic mass units.
    #[serde(default = "default_mass")]
    pub mass: f64,
    /// Secular angular frequency, rad/s.
    pub nu: f64,
    /// Transition wavelength, nm.
    #[serde(default = "default_wavelength")]
    pub wavelength: f64,
    #[serde(default)]
    pub nbar0: f64,
}

fn default_mass() -> f64 {
    40.0
}

fn default_wavelength() -> f64 {
    393.0
}

impl IonSpec {
    pub fn new(mass: f64, nu: f64, wavelength: f64, nbar0: f64) -> Result<Self> {
        let ion = IonSpec { mass, nu, wavelength, nbar0 };
        ion.validate()?;
        Ok(ion)
    }

    /// ⁴⁰Ca⁺ on the 393 nm line at trap frequency `freq_hz`.
    pub fn calcium(freq_hz: f64) -> Result<Self> {
        IonSpec::new(default_mass(), TAU * freq_hz, default_wavelength(), 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be > 0, got {x}")))
            }
        };
        positive("mass", self.mass)?;
        positive("nu", self.nu)?;
        positive("wavelength", self.wavelength)?;
        if !(self.nbar0 >= 0.0) {
            return Err(Error::invalid("nbar0", format!("must be >= 0, got {}", self.nbar0)));
        }
        Ok(())
    }

    fn wavenumber(&self) -> f64 {
        TAU / (self.wavelength * 1e-9)
    }

    fn mass_kg(&self) -> f64 {
        self.mass * ATOMIC_MASS
    }
}

/// `E_rec = (ħk)²/2m`, J.
pub fn recoil_energy(ion: &IonSpec) -> f64 {
    let p = HBAR * ion.wavenumber();
    p * p / (2.0 * ion.mass_kg())
}

/// `η = k √(ħ / 2mν)`.
pub fn lamb_dicke(ion: &IonSpec) -> f64 {
    ion.wavenumber() * (HBAR / (2.0 * ion.mass_kg() * ion.nu)).sqrt()
}

/// Relative timing of the kicks delivered by two chirped pulse pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickTiming {
    /// Momenta add: four photon recoils in one direction.
    Aligned,
    /// The second pair undoes the first.
    Opposed,
}

/// Phonon gain `16 E_rec / ħν` of two aligned pulse pairs.
pub fn delta_n_two_cpp(ion: &IonSpec) -> f64 {
    16.0 * recoil_energy(ion) / (HBAR * ion.nu)
}

/// Ideal phonon gain for either kick timing; opposed kicks cancel.
pub fn delta_n_for(ion: &IonSpec, timing: KickTiming) -> f64 {
    match timing {
        KickTiming::Aligned => delta_n_two_cpp(ion),
        KickTiming::Opposed => 0.0,
    }
}

/// Sideband-ratio estimate `p_red / (p_blue − p_red)`, valid for thermal states only.
pub fn mean_phonon_from_sidebands(p_red: f64, p_blue: f64) -> Result<f64> {
    for (name, p) in [("p_red", p_red), ("p_blue", p_blue)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(name, format!("must lie in [0, 1], got {p}")));
        }
    }
    if p_blue <= p_red {
        return Err(Error::DegenerateEstimator(format!(
            "p_blue ({p_blue}) must exceed p_red ({p_red})"
        )));
    }
    Ok(p_red / (p_blue - p_red))
}
