//! Two-level dynamics under one or two chirped pulses.
//!
//! Single pulses are integrated in the chirp frame, where the Hamiltonian is
//! `−(δ²τ/2) σᶻ + Ω_D w(τ) σˣ` with `σᶻ = |P⟩⟨P| − |S⟩⟨S|` and the standard
//! `σˣ = |S⟩⟨P| + |P⟩⟨S|`. Pulse pairs are integrated in the frame rotating
//! at the carrier, with coupling `A(t) = Σ Ω_j(t)` on `σ⁺ = |P⟩⟨S|`, because
//! two delayed pulses do not share a chirp frame.
//!
//! All returned states are expressed in the carrier-rotating frame at the end
//! of the integration window, so results from both routes compare directly.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::exec::{self, Execution};
use crate::ode::{self, State2, StepControl};
use crate::pulse::{chirp_transform, ChirpedPulse, PulseSpec};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelState {
    pub c_s: Complex64,
    pub c_p: Complex64,
}

impl TwoLevelState {
    pub fn ground() -> Self {
        TwoLevelState {
            c_s: Complex64::new(1.0, 0.0),
            c_p: ZERO,
        }
    }

    pub fn excited() -> Self {
        TwoLevelState {
            c_s: ZERO,
            c_p: Complex64::new(1.0, 0.0),
        }
    }

    /// Rejects states whose norm deviates from one by more than 1e-9.
    pub fn new(c_s: Complex64, c_p: Complex64) -> Result<Self> {
        let s = TwoLevelState { c_s, c_p };
        if (s.norm_sqr() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("state", format!("norm² = {}", s.norm_sqr())));
        }
        Ok(s)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_s.norm_sqr() + self.c_p.norm_sqr()
    }

    pub fn conj(&self) -> Self {
        TwoLevelState {
            c_s: self.c_s.conj(),
            c_p: self.c_p.conj(),
        }
    }

    fn as_array(&self) -> State2 {
        [self.c_s, self.c_p]
    }

    fn from_array(a: State2) -> Self {
        TwoLevelState { c_s: a[0], c_p: a[1] }
    }
}

/// Population of `|P⟩`.
pub fn excitation_probability(state: &TwoLevelState) -> f64 {
    state.c_p.norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Half-width of the integration window around each pulse, in units of σ_D.
    pub t_span_sigmas: f64,
    /// Upper bound on the step, ps. A quarter of σ_D is always enforced as well.
    pub max_step: f64,
    /// Scheduling of independent integrations inside sweeps.
    #[serde(default)]
    pub execution: Execution,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-11,
            t_span_sigmas: 6.0,
            max_step: 1.0,
            execution: Execution::default(),
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-3) {
                return Err(Error::invalid(name, format!("must lie in (0, 1e-3], got {v}")));
            }
        }
        if !(self.t_span_sigmas >= 4.0) {
            return Err(Error::invalid(
                "t_span_sigmas",
                format!("must be >= 4, got {}", self.t_span_sigmas),
            ));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::invalid("max_step", "must be > 0"));
        }
        Ok(())
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn step_control(&self, sigma_d: f64) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step.min(0.25 * sigma_d),
            ..StepControl::default()
        }
    }
}

/// Single pulse, integrated in its chirp frame.
pub fn propagate_single(
    pulse: &ChirpedPulse,
    cfg: &IntegratorConfig,
    initial: TwoLevelState,
) -> Result<TwoLevelState> {
    cfg.validate()?;
    let half = cfg.t_span_sigmas * pulse.sigma_d;
    let (t0, t1) = (pulse.center_time - half, pulse.center_time + half);
    let rate = pulse.chirp_rate;
    let coupling = Complex64::from_polar(pulse.omega_d, pulse.carrier_phase);

    // |ψ⟩ = exp(−iθσᶻ/2)|χ⟩ with θ(τ) = δ²τ²/2 removes the chirp from the coupling.
    let to_chirp = |tau: f64, s: State2| {
        let half_theta = 0.25 * rate * tau * tau;
        [
            s[0] * Complex64::from_polar(1.0, -half_theta),
            s[1] * Complex64::from_polar(1.0, half_theta),
        ]
    };
    let from_chirp = |tau: f64, s: State2| {
        let half_theta = 0.25 * rate * tau * tau;
        [
            s[0] * Complex64::from_polar(1.0, half_theta),
            s[1] * Complex64::from_polar(1.0, -half_theta),
        ]
    };

    let rhs = |t: f64, y: &State2| {
        let tau = t - pulse.center_time;
        let detuning = 0.5 * rate * tau;
        let g = coupling * pulse.gaussian(tau);
        // i dy/dt = H y,  H_SS = +δ²τ/2, H_PP = −δ²τ/2, H_PS = g, H_SP = g*.
        [
            -I * (y[0] * detuning + g.conj() * y[1]),
            -I * (g * y[0] - y[1] * detuning),
        ]
    };
    let y0 = to_chirp(-half, initial.as_array());
    let (y1, _) = ode::integrate(rhs, t0, t1, y0, &cfg.step_control(pulse.sigma_d))?;
    Ok(TwoLevelState::from_array(from_chirp(half, y1)))
}

/// Any number of pulses, summed coherently in the carrier-rotating frame.
pub fn propagate_superposition(
    pulses: &[ChirpedPulse],
    cfg: &IntegratorConfig,
    initial: TwoLevelState,
) -> Result<TwoLevelState> {
    cfg.validate()?;
    let first = pulses
        .first()
        .ok_or_else(|| Error::invalid("pulses", "at least one pulse required"))?;
    let mut t0 = f64::INFINITY;
    let mut t1 = f64::NEG_INFINITY;
    let mut min_sigma = first.sigma_d;
    for p in pulses {
        t0 = t0.min(p.center_time - cfg.t_span_sigmas * p.sigma_d);
        t1 = t1.max(p.center_time + cfg.t_span_sigmas * p.sigma_d);
        min_sigma = min_sigma.min(p.sigma_d);
    }
    let rhs = |t: f64, y: &State2| {
        let a: Complex64 = pulses.iter().map(|p| p.envelope(t)).sum();
        [-I * a.conj() * y[1], -I * a * y[0]]
    };
    let (y1, _) = ode::integrate(rhs, t0, t1, initial.as_array(), &cfg.step_control(min_sigma))?;
    Ok(TwoLevelState::from_array(y1))
}

/// Two identical copies of one chirped pulse, delayed by `delay` and offset in phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsePairConfig {
    pub pulse_a: ChirpedPulse,
    pub pulse_b: ChirpedPulse,
    /// `center_time_b − center_time_a`, ps.
    pub delay: f64,
    /// `carrier_phase_b − carrier_phase_a`, rad. Includes the position-dependent kick phase.
    pub relative_phase: f64,
}

impl PulsePairConfig {
    /// Places the copies symmetrically at `template.center_time ∓ delay/2`.
    pub fn new(template: &ChirpedPulse, delay: f64, relative_phase: f64) -> Self {
        let mid = template.center_time;
        PulsePairConfig {
            pulse_a: template.centered_at(mid - 0.5 * delay),
            pulse_b: template
                .centered_at(mid + 0.5 * delay)
                .phase_shifted(relative_phase),
            delay,
            relative_phase,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (&self.pulse_a, &self.pulse_b);
        let same = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-300);
        if !(same(a.sigma_d, b.sigma_d) && same(a.chirp_rate, b.chirp_rate) && same(a.omega_d, b.omega_d)) {
            return Err(Error::invalid(
                "pulse_pair",
                "pulses must share sigma_d, chirp_rate and omega_d",
            ));
        }
        let d = b.center_time - a.center_time;
        if (d - self.delay).abs() > 1e-9 * d.abs().max(1.0) {
            return Err(Error::invalid("delay", "does not match the pulse centres"));
        }
        let ph = b.carrier_phase - a.carrier_phase;
        if (ph - self.relative_phase).abs() > 1e-9 {
            return Err(Error::invalid("relative_phase", "does not match the pulse phases"));
        }
        Ok(())
    }
}

pub fn propagate_pair(
    pair: &PulsePairConfig,
    cfg: &IntegratorConfig,
    initial: TwoLevelState,
) -> Result<TwoLevelState> {
    pair.validate()?;
    propagate_superposition(&[pair.pulse_a, pair.pulse_b], cfg, initial)
}

/// Excitation after two pulses that do not overlap, `4 cos²(φ/2) p₁ (1 − p₁)`.
///
/// `phi` is the effective relative phase of the two rotations; see
/// [`SinglePulseMap::effective_phase`] for its relation to the laser phase.
pub fn compose_nonoverlapping(p1: f64, phi: f64) -> Result<f64> {
    check_probability("p1", p1)?;
    Ok(4.0 * (0.5 * phi).cos().powi(2) * p1 * (1.0 - p1))
}

/// Average of [`compose_nonoverlapping`] over a uniformly distributed phase.
pub fn compose_phase_averaged(p1: f64) -> Result<f64> {
    check_probability("p1", p1)?;
    Ok(2.0 * p1 * (1.0 - p1))
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(name, format!("must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// The SU(2) map of one isolated pulse, `|S⟩ ↦ u_ss |S⟩ + u_ps |P⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePulseMap {
    pub u_ss: Complex64,
    pub u_ps: Complex64,
}

impl SinglePulseMap {
    pub fn compute(pulse: &ChirpedPulse, cfg: &IntegratorConfig) -> Result<Self> {
        let out = propagate_single(pulse, cfg, TwoLevelState::ground())?;
        Ok(SinglePulseMap {
            u_ss: out.c_s,
            u_ps: out.c_p,
        })
    }

    pub fn excitation(&self) -> f64 {
        self.u_ps.norm_sqr()
    }

    /// Effective rotation phase of a well-separated pair whose laser phases
    /// differ by `laser_phase`: `φ_laser + 2 arg(u_ss)`.
    ///
    /// Two copies `U` and `Z(φ) U Z(φ)†` compose to the excitation amplitude
    /// `u_ps (u_ss e^{iφ} + u_ss*)`, so the pulse's own dynamical phase simply
    /// offsets the laser phase.
    pub fn effective_phase(&self, laser_phase: f64) -> f64 {
        laser_phase + 2.0 * self.u_ss.arg()
    }

    /// Laser phase that realises a given effective phase.
    pub fn laser_phase_for(&self, effective_phase: f64) -> f64 {
        effective_phase - 2.0 * self.u_ss.arg()
    }
}

/// Mean probability of returning to `|S⟩` after a pulse pair, averaged over
/// `n_phase` equally spaced relative phases `2πk/n_phase`.
pub fn phase_averaged_return(
    template: &ChirpedPulse,
    delay: f64,
    n_phase: usize,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let profile = interference_profile(template, &[delay], n_phase, cfg)?;
    Ok(profile.points[0].1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceProfile {
    /// `(T_d, phase-averaged return probability)` in input order.
    pub points: Vec<(f64, f64)>,
    /// Full width at half depth of the dip around its minimum, ps.
    pub dip_fwhm: Option<f64>,
}

pub fn check_n_phase(n_phase: usize) -> Result<()> {
    if n_phase < 8 {
        return Err(Error::invalid("n_phase", format!("must be >= 8, got {n_phase}")));
    }
    Ok(())
}

fn phases(n_phase: usize) -> impl Iterator<Item = f64> {
    (0..n_phase).map(move |k| 2.0 * PI * k as f64 / n_phase as f64)
}

/// Phase-averaged return probability on a delay grid.
///
/// The `delays × phases` grid is evaluated through [`exec::map`]; averages are
/// reduced in a fixed order so sequential and parallel runs agree bit for bit.
pub fn interference_profile(
    template: &ChirpedPulse,
    delays: &[f64],
    n_phase: usize,
    cfg: &IntegratorConfig,
) -> Result<InterferenceProfile> {
    check_n_phase(n_phase)?;
    cfg.validate()?;
    let jobs: Vec<(f64, f64)> = delays
        .iter()
        .flat_map(|&d| phases(n_phase).map(move |phi| (d, phi)))
        .collect();
    let results = exec::map(cfg.execution, &jobs, |&(d, phi)| {
        let pair = PulsePairConfig::new(template, d, phi);
        propagate_pair(&pair, cfg, TwoLevelState::ground()).map(|s| s.c_s.norm_sqr())
    });
    let mut points = Vec::with_capacity(delays.len());
    for (i, &d) in delays.iter().enumerate() {
        let mut acc = 0.0;
        for r in &results[i * n_phase..(i + 1) * n_phase] {
            acc += r.clone()?;
        }
        points.push((d, acc / n_phase as f64));
    }
    let dip_fwhm = dip_fwhm(&points);
    Ok(InterferenceProfile { points, dip_fwhm })
}

/// Width of the dip at half its depth below the baseline.
///
/// The baseline is the mean of the two outermost samples; `points` must be
/// sorted by delay. Returns `None` when the dip is shallower than 1e-6 or a
/// half-depth crossing is missing on either side.
pub fn dip_fwhm(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let baseline = 0.5 * (points[0].1 + points[points.len() - 1].1);
    let (imin, &(_, pmin)) = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;
    let depth = baseline - pmin;
    if !(depth > 1e-6) {
        return None;
    }
    let half = baseline - 0.5 * depth;
    let crossing = |i: usize, j: usize| {
        let (x0, y0) = points[i];
        let (x1, y1) = points[j];
        x0 + (half - y0) * (x1 - x0) / (y1 - y0)
    };
    let left = (0..imin).rev().find(|&i| points[i].1 >= half).map(|i| crossing(i, i + 1))?;
    let right = (imin + 1..points.len())
        .find(|&i| points[i].1 >= half)
        .map(|i| crossing(i - 1, i))?;
    Some(right - left)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyScanPoint {
    pub omega0: f64,
    pub p1: Result<f64>,
}

impl EnergyScanPoint {
    pub fn omega0_sq(&self) -> f64 {
        self.omega0 * self.omega0
    }
}

fn check_sorted(amplitudes: &[f64]) -> Result<()> {
    if amplitudes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("amplitudes", "must be sorted ascending"));
    }
    if amplitudes.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::invalid("amplitudes", "must be >= 0"));
    }
    Ok(())
}

/// Single-pulse excitation as a function of the spectral amplitude Ω₀.
///
/// A failed integration is recorded in its point and does not stop the scan.
pub fn energy_scan(spec: &PulseSpec, amplitudes: &[f64], cfg: &IntegratorConfig) -> Result<Vec<EnergyScanPoint>> {
    check_sorted(amplitudes)?;
    cfg.validate()?;
    let unit = chirp_transform(&PulseSpec { omega0: 1.0, ..*spec });
    let p1s = exec::map(cfg.execution, amplitudes, |&a| {
        let pulse = unit.with_amplitude(a * unit.omega_d);
        propagate_single(&pulse, cfg, TwoLevelState::ground()).map(|s| excitation_probability(&s))
    });
    Ok(amplitudes
        .iter()
        .zip(p1s)
        .map(|(&omega0, p1)| EnergyScanPoint { omega0, p1 })
        .collect())
}

/// Phase-averaged excitation left after two copies separated by `delay`.
pub fn double_pulse_scan(
    spec: &PulseSpec,
    amplitudes: &[f64],
    delay: f64,
    n_phase: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<EnergyScanPoint>> {
    check_sorted(amplitudes)?;
    check_n_phase(n_phase)?;
    cfg.validate()?;
    let unit = chirp_transform(&PulseSpec { omega0: 1.0, ..*spec });
    let jobs: Vec<(f64, f64)> = amplitudes
        .iter()
        .flat_map(|&a| phases(n_phase).map(move |phi| (a, phi)))
        .collect();
    let results = exec::map(cfg.execution, &jobs, |&(a, phi)| {
        let pair = PulsePairConfig::new(&unit.with_amplitude(a * unit.omega_d), delay, phi);
        propagate_pair(&pair, cfg, TwoLevelState::ground()).map(|s| excitation_probability(&s))
    });
    Ok(amplitudes
        .iter()
        .enumerate()
        .map(|(i, &omega0)| {
            let chunk = &results[i * n_phase..(i + 1) * n_phase];
            let p1 = chunk
                .iter()
                .try_fold(0.0, |acc, r| r.clone().map(|p| acc + p))
                .map(|s| s / n_phase as f64);
            EnergyScanPoint { omega0, p1 }
        })
        .collect())
}

/// Peak amplitude |Ω_D| at which a single pulse first reaches excitation `target`.
///
/// Brackets by doubling from `0.05 rad/ps`, then bisects to 1e-12 in amplitude.
pub fn amplitude_for_excitation(template: &ChirpedPulse, target: f64, cfg: &IntegratorConfig) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::invalid("target", format!("must lie in (0, 1), got {target}")));
    }
    let p1_at = |a: f64| -> Result<f64> {
        propagate_single(&template.with_amplitude(a), cfg, TwoLevelState::ground())
            .map(|s| excitation_probability(&s))
    };
    let mut lo = 0.0;
    let mut hi = 0.05;
    while p1_at(hi)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::invalid("target", "excitation not reached below |Ω_D| = 1e3"));
        }
    }
    // Restrict to the first rise: refine the bracket on a coarse grid.
    let n = 16;
    let mut prev = lo;
    for k in 1..=n {
        let a = lo + (hi - lo) * k as f64 / n as f64;
        if p1_at(a)? >= target {
            lo = prev;
            hi = a;
            break;
        }
        prev = a;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if p1_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn template() -> ChirpedPulse {
        chirp_transform(&PulseSpec::at_default_wavelength(1.5, 5.8, 1.0).unwrap())
    }

    #[test]
    fn excitation_of_basis_and_superposition() {
        assert_eq!(excitation_probability(&TwoLevelState::ground()), 0.0);
        assert_eq!(excitation_probability(&TwoLevelState::excited()), 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = TwoLevelState::new(Complex64::new(h, 0.0), Complex64::new(0.0, h)).unwrap();
        assert_relative_eq!(excitation_probability(&s), 0.5, epsilon = 1e-15);
        assert!(TwoLevelState::new(Complex64::new(1.0, 0.0), Complex64::new(0.1, 0.0)).is_err());
    }

    #[test]
    fn composition_closed_form() {
        assert_relative_eq!(compose_nonoverlapping(0.5, 0.0).unwrap(), 1.0);
        for p in [0.0, 0.2, 0.7, 1.0] {
            assert!(compose_nonoverlapping(p, PI).unwrap().abs() < 1e-15);
        }
        let n = 64;
        let mean: f64 = phases(n).map(|phi| compose_nonoverlapping(0.5, phi).unwrap()).sum::<f64>() / n as f64;
        assert_relative_eq!(mean, 0.5, epsilon = 1e-14);
        assert_relative_eq!(compose_phase_averaged(0.5).unwrap(), 0.5);
        assert!(compose_nonoverlapping(1.2, 0.0).is_err());
        assert!(compose_phase_averaged(-0.1).is_err());
    }

    #[test]
    fn uniform_phase_average_of_cos_squared_is_exact() {
        for n in [3usize, 8, 16] {
            let mean: f64 = phases(n).map(|p| (0.5 * p).cos().powi(2)).sum::<f64>() / n as f64;
            assert_relative_eq!(mean, 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn config_validation() {
        let ok = IntegratorConfig::default();
        assert!(ok.validate().is_ok());
        assert!(IntegratorConfig { rel_tol: 1e-2, ..ok }.validate().is_err());
        assert!(IntegratorConfig { abs_tol: 0.0, ..ok }.validate().is_err());
        assert!(IntegratorConfig { t_span_sigmas: 3.0, ..ok }.validate().is_err());
        assert!(check_n_phase(7).is_err());
        assert!(check_n_phase(8).is_ok());
    }

    #[test]
    fn asymmetric_pair_rejected() {
        let t = template().with_amplitude(0.2);
        let mut pair = PulsePairConfig::new(&t, 10.0, 0.3);
        assert!(pair.validate().is_ok());
        pair.pulse_b.omega_d *= 1.1;
        assert!(propagate_pair(&pair, &IntegratorConfig::default(), TwoLevelState::ground()).is_err());
        let mut pair = PulsePairConfig::new(&t, 10.0, 0.3);
        pair.delay = 11.0;
        assert!(pair.validate().is_err());
    }

    #[test]
    fn scans_validate_amplitudes() {
        let spec = PulseSpec::at_default_wavelength(1.5, 5.8, 1.0).unwrap();
        let cfg = IntegratorConfig::default();
        assert!(energy_scan(&spec, &[0.2, 0.1], &cfg).is_err());
        assert!(energy_scan(&spec, &[-0.1, 0.1], &cfg).is_err());
        let zero = energy_scan(&spec, &[0.0], &cfg).unwrap();
        assert_eq!(zero[0].p1, Ok(0.0));
        assert!(double_pulse_scan(&spec, &[0.1], 50.0, 4, &cfg).is_err());
    }

    #[test]
    fn dip_width_of_triangle() {
        // V-shaped dip from 1 down to 0 over ±2: half depth at ±1.
        let pts: Vec<(f64, f64)> = (-8..=8)
            .map(|i| {
                let x = i as f64 * 0.5;
                (x, (x.abs() / 2.0).min(1.0))
            })
            .collect();
        assert_relative_eq!(dip_fwhm(&pts).unwrap(), 2.0, epsilon = 1e-12);
        let flat: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 1.0)).collect();
        assert_eq!(dip_fwhm(&flat), None);
    }

    #[test]
    fn effective_phase_round_trip() {
        let map = SinglePulseMap {
            u_ss: Complex64::from_polar(0.6, 0.4),
            u_ps: Complex64::from_polar(0.8, -1.0),
        };
        assert_relative_eq!(map.effective_phase(map.laser_phase_for(1.3)), 1.3, epsilon = 1e-15);
        assert_relative_eq!(map.excitation(), 0.64, epsilon = 1e-15);
    }
}
