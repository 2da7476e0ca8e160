//! Spin-echo contrast: the motional revival model and the mapping from
//! two-pulse return probability to fringe visibility.
//!
//! Times are in ps and angular frequencies in rad/ps throughout, so a trap
//! frequency of 2π×890 kHz is `5.59e-6` rad/ps.

use crate::dynamics::{interference_profile, IntegratorConfig};
use crate::error::{Error, Result};
use crate::pulse::{chirp_transform, ChirpedPulse, PulseSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// rad/ps per kHz of ordinary frequency.
pub const RAD_PER_PS_PER_KHZ: f64 = TAU * 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoModelParams {
    /// Baseline contrast `C₀`.
    pub c0: f64,
    /// Thermal mean phonon number.
    pub nbar: f64,
    /// Lamb-Dicke factor of the S↔P transition.
    pub eta_ld: f64,
    /// Secular angular frequency, rad/ps.
    pub nu: f64,
}

impl EchoModelParams {
    pub fn new(c0: f64, nbar: f64, eta_ld: f64, nu: f64) -> Result<Self> {
        let p = EchoModelParams { c0, nbar, eta_ld, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.c0) {
            return Err(Error::invalid("c0", format!("must lie in [0, 1], got {}", self.c0)));
        }
        if !(self.nbar >= 0.0 && self.nbar.is_finite()) {
            return Err(Error::invalid("nbar", format!("must be >= 0, got {}", self.nbar)));
        }
        if !(self.eta_ld > 0.0 && self.eta_ld.is_finite()) {
            return Err(Error::invalid("eta_ld", format!("must be > 0, got {}", self.eta_ld)));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::invalid("nu", format!("must be > 0, got {}", self.nu)));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        TAU / self.nu
    }
}

/// Trap phase `ντ` reduced to `[0, 2π)`, so whole periods contribute no rounding.
fn trap_phase(tau_d: f64, nu: f64) -> f64 {
    let periods = tau_d * nu / TAU;
    (periods - periods.floor()) * TAU
}

/// `α(τ) = 8η²(1 − cos ντ)`.
pub fn displacement_mismatch(tau_d: f64, params: &EchoModelParams) -> f64 {
    let half = 0.5 * trap_phase(tau_d, params.nu);
    16.0 * params.eta_ld.powi(2) * half.sin().powi(2)
}

/// `C(τ) = ½ (1 + C₀ e^{−α²(n̄+½)} cos(4η² sin ντ))`.
pub fn echo_contrast(tau_d: f64, params: &EchoModelParams) -> f64 {
    let alpha = displacement_mismatch(tau_d, params);
    let theta = trap_phase(tau_d, params.nu);
    let damping = (-alpha * alpha * (params.nbar + 0.5)).exp();
    let phase = 4.0 * params.eta_ld.powi(2) * theta.sin();
    0.5 * (1.0 + params.c0 * damping * phase.cos())
}

/// Fringe visibility `p₂·⟨cos²δξ⟩` and background `(1 − p₂)/2`.
///
/// `δξ` is zero-mean Gaussian with the given rms, for which
/// `⟨cos²δξ⟩ = ½(1 + e^{−2 rms²})`.
pub fn echo_visibility_from_p2(p2: f64, phase_jitter_rms: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p2) {
        return Err(Error::invalid("p2", format!("must lie in [0, 1], got {p2}")));
    }
    if !(phase_jitter_rms >= 0.0) {
        return Err(Error::invalid(
            "phase_jitter_rms",
            format!("must be >= 0, got {phase_jitter_rms}"),
        ));
    }
    let mean_cos2 = 0.5 * (1.0 + (-2.0 * phase_jitter_rms * phase_jitter_rms).exp());
    Ok((p2 * mean_cos2, 0.5 * (1.0 - p2)))
}

/// Parameters of the autocorrelation forward model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutocorrParams {
    /// `I = |Ω_D|²`, (rad/ps)².
    pub intensity: f64,
    /// Transform-limited width σ, ps.
    pub sigma: f64,
    /// Group-delay dispersion D, ps².
    pub gdd: f64,
    /// Overall contrast factor.
    pub contrast_scale: f64,
}

impl AutocorrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(Error::invalid("intensity", format!("must be >= 0, got {}", self.intensity)));
        }
        if !(0.0..=1.0).contains(&self.contrast_scale) {
            return Err(Error::invalid(
                "contrast_scale",
                format!("must lie in [0, 1], got {}", self.contrast_scale),
            ));
        }
        PulseSpec::at_default_wavelength(self.sigma, self.gdd, 0.0).map(|_| ())
    }

    /// The chirped pulse with peak amplitude `|Ω_D| = √I`, centred at zero.
    pub fn to_chirped(&self) -> Result<ChirpedPulse> {
        self.validate()?;
        let stretch = (self.sigma.powi(4) + self.gdd * self.gdd).powf(0.25);
        let spec = PulseSpec::at_default_wavelength(self.sigma, self.gdd, self.intensity.sqrt() * stretch)?;
        Ok(chirp_transform(&spec))
    }
}

/// Phase-averaged return probability to `|S⟩` at each delay.
///
/// The profile is even in the delay, so each distinct `|T_D|` is integrated once.
pub fn return_probabilities(
    params: &AutocorrParams,
    delays: &[f64],
    n_phase: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let pulse = params.to_chirped()?;
    let mut unique: Vec<f64> = delays.iter().map(|d| d.abs()).collect();
    unique.sort_by(f64::total_cmp);
    unique.dedup();
    let profile = interference_profile(&pulse, &unique, n_phase, cfg)?;
    Ok(delays
        .iter()
        .map(|d| {
            let i = unique.binary_search_by(|u| u.total_cmp(&d.abs())).expect("delay present");
            profile.points[i].1
        })
        .collect())
}

/// Echo contrast versus pulse-pair delay: `scale · visibility(p_return)`.
pub fn autocorr_contrast_curve(
    params: &AutocorrParams,
    delays: &[f64],
    n_phase: usize,
    phase_jitter_rms: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, f64)>> {
    let returns = return_probabilities(params, delays, n_phase, cfg)?;
    delays
        .iter()
        .zip(returns)
        .map(|(&d, p)| {
            let (vis, _) = echo_visibility_from_p2(p.clamp(0.0, 1.0), phase_jitter_rms)?;
            Ok((d, params.contrast_scale * vis))
        })
        .collect()
}
