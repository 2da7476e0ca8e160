//! Least-squares recovery of pulse parameters from contrast-versus-delay data,
//! and of the thermal revival parameters from echo-contrast data.

use crate::contrast::{
    echo_contrast, echo_visibility_from_p2, return_probabilities, AutocorrParams, EchoModelParams,
};
use crate::dynamics::{dip_fwhm, IntegratorConfig};
use crate::error::{Error, Result};
use crate::pulse::{fwhm_stretch, FWHM_PER_SIGMA};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::HashMap;

pub const MIN_POINTS: usize = 8;

/// Error bar assigned to noiseless synthetic points.
pub const NOISELESS_SIGMA_ERR: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub delay: f64,
    pub contrast: f64,
    pub sigma_err: f64,
}

/// Contrast samples with strictly increasing delays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrDataset {
    points: Vec<DataPoint>,
    /// Seed of the generator, for synthetic data.
    seed: Option<u64>,
}

impl AutocorrDataset {
    pub fn new(points: Vec<DataPoint>, seed: Option<u64>) -> Result<Self> {
        if points.len() < MIN_POINTS {
            return Err(Error::Dataset(format!(
                "need at least {MIN_POINTS} points, got {}",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.delay.is_finite() && p.contrast.is_finite() && p.sigma_err.is_finite()) {
                return Err(Error::Dataset(format!("point {i}: non-finite value")));
            }
            if !(0.0..=1.0).contains(&p.contrast) {
                return Err(Error::Dataset(format!("point {i}: contrast must lie in [0, 1], got {}", p.contrast)));
            }
            if !(p.sigma_err > 0.0) {
                return Err(Error::Dataset(format!("point {i}: sigma_err must be > 0, got {}", p.sigma_err)));
            }
            if i > 0 && p.delay <= points[i - 1].delay {
                return Err(Error::Dataset(format!(
                    "point {i}: delays must be strictly increasing ({} after {})",
                    p.delay,
                    points[i - 1].delay
                )));
            }
        }
        Ok(AutocorrDataset { points, seed })
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn delays(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delay).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Reduced χ², `Σ((model − y)/σ)² / (N − k)`.
pub fn chi_squared(model_curve: &[(f64, f64)], data: &AutocorrDataset, free_params: usize) -> Result<f64> {
    let n = data.len();
    if n <= free_params {
        return Err(Error::Underdetermined { points: n, params: free_params });
    }
    if model_curve.len() != n {
        return Err(Error::invalid(
            "model_curve",
            format!("has {} samples for {n} data points", model_curve.len()),
        ));
    }
    let mut sum = 0.0;
    for (&(t, m), p) in model_curve.iter().zip(data.points()) {
        if (t - p.delay).abs() > 1e-9 * p.delay.abs().max(1.0) {
            return Err(Error::invalid("model_curve", format!("delay {t} does not match data delay {}", p.delay)));
        }
        sum += ((m - p.contrast) / p.sigma_err).powi(2);
    }
    Ok(sum / (n - free_params) as f64)
}

/// Which of `(I, σ, D, scale)` are held at their initial values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedMask {
    #[serde(default)]
    pub intensity: bool,
    #[serde(default)]
    pub sigma: bool,
    #[serde(default)]
    pub gdd: bool,
    #[serde(default)]
    pub contrast_scale: bool,
}

impl FixedMask {
    pub fn gdd_only() -> Self {
        FixedMask { gdd: true, ..Default::default() }
    }

    pub fn pulse_only() -> Self {
        FixedMask { intensity: true, sigma: true, gdd: true, contrast_scale: false }
    }

    fn as_array(&self) -> [bool; 4] {
        [self.intensity, self.sigma, self.gdd, self.contrast_scale]
    }

    pub fn free_count(&self) -> usize {
        self.as_array().iter().filter(|f| !**f).count()
    }
}

/// 1σ uncertainties; `None` for fixed parameters or a singular Hessian.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamErrors {
    pub intensity: Option<f64>,
    pub sigma: Option<f64>,
    pub gdd: Option<f64>,
    pub contrast_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitWarning {
    /// The scaled χ² Hessian is close to singular: some parameter combination is unconstrained.
    IllConditioned { condition_number: f64 },
    /// A free parameter finished on its bound.
    AtBound { parameter: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub integrator: IntegratorConfig,
    pub n_phase: usize,
    pub max_iterations: usize,
    /// rms of the echo phase jitter folded into the visibility.
    pub phase_jitter_rms: f64,
    /// Condition number above which the result carries an ill-conditioned warning.
    pub condition_warn: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            integrator: IntegratorConfig::default(),
            n_phase: 16,
            max_iterations: 200,
            phase_jitter_rms: 0.0,
            condition_warn: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub intensity: f64,
    pub sigma: f64,
    pub gdd: f64,
    pub contrast_scale: f64,
    pub chi2_reduced: f64,
    /// `fwhm_stretch(2.3548·σ, D)`.
    pub fwhm_chirped: f64,
    /// Width of the fitted interference dip, sampled on a fine delay grid.
    pub fwhm_profile: Option<f64>,
    pub param_errors: ParamErrors,
    pub fixed_mask: FixedMask,
    pub iterations: usize,
    pub condition_number: f64,
    pub warnings: Vec<FitWarning>,
    pub seed: Option<u64>,
    /// Total χ² after each accepted optimizer step, starting at the initial guess.
    pub chi2_history: Vec<f64>,
    /// Fitted model at the data delays.
    pub curve: Vec<(f64, f64)>,
}

impl FitResult {
    pub fn params(&self) -> AutocorrParams {
        AutocorrParams {
            intensity: self.intensity,
            sigma: self.sigma,
            gdd: self.gdd,
            contrast_scale: self.contrast_scale,
        }
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.warnings.iter().any(|w| matches!(w, FitWarning::IllConditioned { .. }))
    }
}

pub const SIGMA_BOUNDS: (f64, f64) = (0.2, 10.0);
pub const GDD_BOUNDS: (f64, f64) = (-30.0, 30.0);
pub const SCALE_BOUNDS: (f64, f64) = (0.0, 1.0);
/// Upper bound on `I`; far beyond any regime where the pair model is informative.
pub const INTENSITY_MAX: f64 = 100.0;

const PARAM_NAMES: [&str; 4] = ["intensity", "sigma", "gdd", "contrast_scale"];

fn autocorr_bounds() -> ([f64; 4], [f64; 4]) {
    (
        [1e-9, SIGMA_BOUNDS.0, GDD_BOUNDS.0, SCALE_BOUNDS.0],
        [INTENSITY_MAX, SIGMA_BOUNDS.1, GDD_BOUNDS.1, SCALE_BOUNDS.1],
    )
}

fn check_in_bounds(x: &[f64], lo: &[f64], hi: &[f64], names: &[&'static str]) -> Result<()> {
    for i in 0..x.len() {
        if !(x[i] >= lo[i] && x[i] <= hi[i]) {
            return Err(Error::invalid(
                names[i],
                format!("initial value {} outside [{}, {}]", x[i], lo[i], hi[i]),
            ));
        }
    }
    Ok(())
}

/// Rounds to seven significant digits, i.e. about 1e-6 relative.
fn quantize(x: f64) -> f64 {
    format!("{x:.6e}").parse().expect("formatted float parses")
}

/// Return-probability curve on the dataset delays, memoized on rounded `(I, σ, D)`.
///
/// The model is always evaluated at the rounded point, so a cache hit and a
/// fresh evaluation give the same numbers.
struct ForwardModel<'a> {
    delays: Vec<f64>,
    cfg: &'a FitConfig,
    cache: RefCell<HashMap<[u64; 3], Vec<f64>>>,
}

impl<'a> ForwardModel<'a> {
    fn new(delays: Vec<f64>, cfg: &'a FitConfig) -> Self {
        ForwardModel { delays, cfg, cache: RefCell::new(HashMap::new()) }
    }

    fn returns(&self, intensity: f64, sigma: f64, gdd: f64) -> Result<Vec<f64>> {
        let q = [quantize(intensity), quantize(sigma), quantize(gdd)];
        let key = q.map(f64::to_bits);
        if let Some(v) = self.cache.borrow().get(&key) {
            return Ok(v.clone());
        }
        let params = AutocorrParams { intensity: q[0], sigma: q[1], gdd: q[2], contrast_scale: 1.0 };
        let v = return_probabilities(&params, &self.delays, self.cfg.n_phase, &self.cfg.integrator)?;
        self.cache.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    /// Contrast curve; `scale` enters linearly and is not bounded here so that
    /// difference stencils may step past 1.
    fn contrast(&self, x: &[f64; 4]) -> Result<Vec<f64>> {
        let returns = self.returns(x[0], x[1], x[2])?;
        returns
            .into_iter()
            .map(|p| {
                let (vis, _) = echo_visibility_from_p2(p.clamp(0.0, 1.0), self.cfg.phase_jitter_rms)?;
                Ok(x[3] * vis)
            })
            .collect()
    }
}

/// Outcome of the bounded Levenberg–Marquardt loop.
#[derive(Debug, Clone)]
struct LmOutcome {
    x: Vec<f64>,
    iterations: usize,
    /// χ² after every accepted step, starting with the initial point.
    history: Vec<f64>,
}

/// Bounded Levenberg–Marquardt with a forward-difference Jacobian.
///
/// Trial points are projected onto the box. A step is accepted only if it
/// lowers χ², so the accepted χ² sequence is non-increasing.
fn levenberg_marquardt<F>(
    residuals: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    typical: &[f64],
    max_iterations: usize,
) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let k = x0.len();
    let mut x = x0.to_vec();
    let mut r = residuals(&x)?;
    let mut chi2 = sum_sq(&r);
    let mut history = vec![chi2];
    let mut lambda = 1e-3;
    let mut nu = 2.0;

    for iter in 1..=max_iterations {
        if chi2 == 0.0 {
            return Ok(LmOutcome { x, iterations: iter - 1, history });
        }
        let jac = jacobian(&residuals, &x, &r, lo, hi, typical)?;
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let diag_floor = 1e-12 * (0..k).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-300);

        // Parameters on a bound with the descent direction pointing outwards sit out this step.
        let active: Vec<bool> = (0..k)
            .map(|i| (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0))
            .collect();
        let mut rhs = -&g;
        for i in (0..k).filter(|&i| active[i]) {
            rhs[i] = 0.0;
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..k {
                a[(i, i)] += lambda * jtj[(i, i)].max(diag_floor);
            }
            for i in (0..k).filter(|&i| active[i]) {
                a.row_mut(i).fill(0.0);
                a.column_mut(i).fill(0.0);
                a[(i, i)] = 1.0;
            }
            let Some(step) = a.lu().solve(&rhs) else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let trial: Vec<f64> = (0..k).map(|i| (x[i] + step[i]).clamp(lo[i], hi[i])).collect();
            let moved = (0..k).any(|i| (trial[i] - x[i]).abs() > 1e-10 * typical[i].max(x[i].abs()));
            if !moved {
                return Ok(LmOutcome { x, iterations: iter, history });
            }
            let rt = residuals(&trial)?;
            let ct = sum_sq(&rt);
            if ct < chi2 {
                // Damping follows the ratio of actual to predicted reduction.
                let d = DVector::from_iterator(k, (0..k).map(|i| trial[i] - x[i]));
                let predicted = -(2.0 * g.dot(&d) + (&jtj * &d).dot(&d));
                let rho = if predicted > 0.0 { (chi2 - ct) / predicted } else { 0.0 };
                lambda = (lambda * (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0)).max(1e-12);
                nu = 2.0;
                let gain = (chi2 - ct) / chi2;
                let rel_step = (0..k)
                    .map(|i| d[i].abs() / typical[i].max(x[i].abs()))
                    .fold(0.0, f64::max);
                x = trial;
                r = rt;
                chi2 = ct;
                history.push(chi2);
                accepted = true;
                if gain < 1e-10 || rel_step < 1e-6 {
                    return Ok(LmOutcome { x, iterations: iter, history });
                }
                break;
            }
            lambda *= nu;
            nu *= 2.0;
        }
        if !accepted {
            // No downhill step at any damping: a local minimum to the model's resolution.
            return Ok(LmOutcome { x, iterations: iter, history });
        }
    }
    Err(Error::NonConvergence { iterations: max_iterations, best_chi2: chi2, best_params: x })
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian<F>(residuals: &F, x: &[f64], r0: &[f64], lo: &[f64], hi: &[f64], typical: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let (n, k) = (r0.len(), x.len());
    let mut jac = DMatrix::zeros(n, k);
    for j in 0..k {
        let mut h = 1e-4 * x[j].abs().max(typical[j]);
        if x[j] + h > hi[j] {
            h = -h;
        }
        let mut xp = x.to_vec();
        xp[j] = (x[j] + h).clamp(lo[j].min(x[j] + h), hi[j].max(x[j] + h));
        let rp = residuals(&xp)?;
        for i in 0..n {
            jac[(i, j)] = (rp[i] - r0[i]) / h;
        }
    }
    Ok(jac)
}

/// Central-difference Hessian of `f` with relative step `rel`.
fn hessian<F>(f: &F, x: &[f64], typical: &[f64], rel: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let k = x.len();
    let h: Vec<f64> = (0..k).map(|i| rel * x[i].abs().max(typical[i])).collect();
    let at = |d: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in d {
            y[i] += s * h[i];
        }
        f(&y)
    };
    let f0 = f(x)?;
    let mut hess = DMatrix::zeros(k, k);
    for i in 0..k {
        let fp = at(&[(i, 1.0)])?;
        let fm = at(&[(i, -1.0)])?;
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let fpp = at(&[(i, 1.0), (j, 1.0)])?;
            let fpm = at(&[(i, 1.0), (j, -1.0)])?;
            let fmp = at(&[(i, -1.0), (j, 1.0)])?;
            let fmm = at(&[(i, -1.0), (j, -1.0)])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// 1σ errors from `cov = 2 H⁻¹` and the condition number of `H` in units of the parameters.
fn error_analysis(hess: &DMatrix<f64>, x: &[f64], typical: &[f64]) -> (Option<Vec<f64>>, f64) {
    let k = x.len();
    let s: Vec<f64> = (0..k).map(|i| x[i].abs().max(typical[i])).collect();
    let scaled = DMatrix::from_fn(k, k, |i, j| hess[(i, j)] * s[i] * s[j]);
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    let errors = hess.clone().try_inverse().and_then(|inv| {
        let e: Vec<f64> = (0..k).map(|i| 2.0 * inv[(i, i)]).collect();
        e.iter().all(|v| *v > 0.0 && v.is_finite()).then(|| e.iter().map(|v| v.sqrt()).collect())
    });
    (errors, cond)
}

fn residual_vector(model: &[f64], data: &AutocorrDataset) -> Vec<f64> {
    model
        .iter()
        .zip(data.points())
        .map(|(m, p)| (m - p.contrast) / p.sigma_err)
        .collect()
}

/// Fits `(I, σ, D, scale)` of the autocorrelation model to `data`.
///
/// Fixed parameters keep their values from `init`.
pub fn fit_autocorrelation(
    data: &AutocorrDataset,
    init: &AutocorrParams,
    fixed: FixedMask,
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.integrator.validate()?;
    let free_count = fixed.free_count();
    if data.len() <= free_count {
        return Err(Error::Underdetermined { points: data.len(), params: free_count });
    }
    let full0 = [init.intensity, init.sigma, init.gdd, init.contrast_scale];
    let (lo_all, hi_all) = autocorr_bounds();
    check_in_bounds(&full0, &lo_all, &hi_all, &PARAM_NAMES)?;
    let free: Vec<usize> = (0..4).filter(|&i| !fixed.as_array()[i]).collect();
    let typical_all = [1e-3, 0.1, 0.1, 0.01];

    let model = ForwardModel::new(data.delays(), cfg);
    let expand = |y: &[f64]| {
        let mut full = full0;
        for (slot, &i) in free.iter().enumerate() {
            full[i] = y[slot];
        }
        full
    };
    let residuals = |y: &[f64]| model.contrast(&expand(y)).map(|m| residual_vector(&m, data));

    let pick = |a: &[f64; 4]| free.iter().map(|&i| a[i]).collect::<Vec<f64>>();
    let (lo, hi, typical) = (pick(&lo_all), pick(&hi_all), pick(&typical_all));
    let y0 = pick(&full0);

    let outcome = if free.is_empty() {
        LmOutcome { x: vec![], iterations: 0, history: vec![sum_sq(&residuals(&[])?)] }
    } else {
        levenberg_marquardt(residuals, &y0, &lo, &hi, &typical, cfg.max_iterations).map_err(|e| match e {
            Error::NonConvergence { iterations, best_chi2, best_params } => {
                Error::NonConvergence { iterations, best_chi2, best_params: expand(&best_params).to_vec() }
            }
            other => other,
        })?
    };
    let best = expand(&outcome.x);

    let mut warnings = Vec::new();
    let mut param_errors = ParamErrors::default();
    let mut condition_number = 1.0;
    if !free.is_empty() {
        let chi2_total = |y: &[f64]| residuals(y).map(|r| sum_sq(&r));
        let hess = hessian(&chi2_total, &outcome.x, &typical, 1e-3)?;
        let (errors, cond) = error_analysis(&hess, &outcome.x, &typical);
        condition_number = cond;
        if !(cond <= cfg.condition_warn) {
            warnings.push(FitWarning::IllConditioned { condition_number: cond });
        }
        if let Some(e) = errors {
            let mut all = [None; 4];
            for (slot, &i) in free.iter().enumerate() {
                all[i] = Some(e[slot]);
            }
            param_errors = ParamErrors {
                intensity: all[0],
                sigma: all[1],
                gdd: all[2],
                contrast_scale: all[3],
            };
        }
        for (slot, &i) in free.iter().enumerate() {
            if outcome.x[slot] <= lo[slot] || outcome.x[slot] >= hi[slot] {
                warnings.push(FitWarning::AtBound { parameter: PARAM_NAMES[i].to_string() });
            }
        }
    }

    let values = model.contrast(&best)?;
    let curve: Vec<(f64, f64)> = data.delays().into_iter().zip(values).collect();
    let chi2_reduced = chi_squared(&curve, data, free_count)?;
    let params = AutocorrParams {
        intensity: best[0],
        sigma: best[1],
        gdd: best[2],
        contrast_scale: best[3],
    };
    Ok(FitResult {
        intensity: best[0],
        sigma: best[1],
        gdd: best[2],
        contrast_scale: best[3],
        chi2_reduced,
        fwhm_chirped: fwhm_stretch(FWHM_PER_SIGMA * best[1], best[2])?,
        fwhm_profile: profile_fwhm(&params, cfg)?,
        param_errors,
        fixed_mask: fixed,
        iterations: outcome.iterations,
        condition_number,
        warnings,
        seed: data.seed(),
        chi2_history: outcome.history,
        curve,
    })
}

/// Dip width of the model's return-probability profile on a 161-point grid over ±4 chirped FWHM.
pub fn profile_fwhm(params: &AutocorrParams, cfg: &FitConfig) -> Result<Option<f64>> {
    let span = 4.0 * params.to_chirped()?.fwhm();
    let delays: Vec<f64> = (0..=160).map(|i| -span + 2.0 * span * i as f64 / 160.0).collect();
    let returns = return_probabilities(params, &delays, cfg.n_phase, &cfg.integrator)?;
    let points: Vec<(f64, f64)> = delays.into_iter().zip(returns).collect();
    Ok(dip_fwhm(&points))
}

/// Forward model plus seeded Gaussian noise, clamped to `[0, 1]`.
///
/// Every point carries `sigma_err = noise_rms`, or [`NOISELESS_SIGMA_ERR`] when the noise is zero.
pub fn generate_synthetic(
    truth: &AutocorrParams,
    delays: &[f64],
    noise_rms: f64,
    seed: u64,
    cfg: &FitConfig,
) -> Result<AutocorrDataset> {
    truth.validate()?;
    let model = ForwardModel::new(delays.to_vec(), cfg);
    let clean = model.contrast(&[truth.intensity, truth.sigma, truth.gdd, truth.contrast_scale])?;
    noisy_dataset(delays, &clean, noise_rms, seed)
}

fn noisy_dataset(delays: &[f64], clean: &[f64], noise_rms: f64, seed: u64) -> Result<AutocorrDataset> {
    if !(noise_rms >= 0.0 && noise_rms.is_finite()) {
        return Err(Error::invalid("noise_rms", format!("must be >= 0, got {noise_rms}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_rms.max(f64::MIN_POSITIVE)).expect("positive sd");
    let sigma_err = if noise_rms > 0.0 { noise_rms } else { NOISELESS_SIGMA_ERR };
    let points = delays
        .iter()
        .zip(clean)
        .map(|(&delay, &c)| {
            let noise = if noise_rms > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            DataPoint { delay, contrast: (c + noise).clamp(0.0, 1.0), sigma_err }
        })
        .collect();
    AutocorrDataset::new(points, Some(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevivalFit {
    pub c0: f64,
    pub nbar: f64,
    pub c0_err: Option<f64>,
    pub nbar_err: Option<f64>,
    pub chi2_reduced: f64,
    pub iterations: usize,
    pub condition_number: f64,
    pub warnings: Vec<FitWarning>,
    pub seed: Option<u64>,
    pub chi2_history: Vec<f64>,
    pub curve: Vec<(f64, f64)>,
}

impl RevivalFit {
    pub fn is_ill_conditioned(&self) -> bool {
        self.warnings.iter().any(|w| matches!(w, FitWarning::IllConditioned { .. }))
    }
}

pub const NBAR_MAX: f64 = 1e4;

/// Fits `C₀` and `n̄` of the echo revival model; `η` and `ν` are taken from `init`.
pub fn fit_contrast_revival(data: &AutocorrDataset, init: &EchoModelParams, cfg: &FitConfig) -> Result<RevivalFit> {
    init.validate()?;
    if data.len() <= 2 {
        return Err(Error::Underdetermined { points: data.len(), params: 2 });
    }
    let (lo, hi) = ([0.0, 0.0], [1.0, NBAR_MAX]);
    let x0 = [init.c0, init.nbar];
    check_in_bounds(&x0, &lo, &hi, &["c0", "nbar"])?;
    let typical = [0.01, 0.1];
    let curve_at = |y: &[f64]| -> Vec<f64> {
        // c0 may step above 1 inside difference stencils; the model stays well defined.
        let p = EchoModelParams { c0: y[0], nbar: y[1], ..*init };
        data.points().iter().map(|pt| echo_contrast(pt.delay, &p)).collect()
    };
    let residuals = |y: &[f64]| Ok(residual_vector(&curve_at(y), data));
    let outcome = levenberg_marquardt(residuals, &x0, &lo, &hi, &typical, cfg.max_iterations)?;
    let chi2_total = |y: &[f64]| residuals(y).map(|r| sum_sq(&r));
    let hess = hessian(&chi2_total, &outcome.x, &typical, 1e-3)?;
    let (errors, cond) = error_analysis(&hess, &outcome.x, &typical);
    let mut warnings = Vec::new();
    if !(cond <= cfg.condition_warn) {
        warnings.push(FitWarning::IllConditioned { condition_number: cond });
    }
    for (i, name) in ["c0", "nbar"].iter().enumerate() {
        if outcome.x[i] <= lo[i] || outcome.x[i] >= hi[i] {
            warnings.push(FitWarning::AtBound { parameter: name.to_string() });
        }
    }
    let curve: Vec<(f64, f64)> = data.delays().into_iter().zip(curve_at(&outcome.x)).collect();
    Ok(RevivalFit {
        c0: outcome.x[0],
        nbar: outcome.x[1],
        c0_err: errors.as_ref().map(|e| e[0]),
        nbar_err: errors.as_ref().map(|e| e[1]),
        chi2_reduced: chi_squared(&curve, data, 2)?,
        iterations: outcome.iterations,
        condition_number: cond,
        warnings,
        seed: data.seed(),
        chi2_history: outcome.history,
        curve,
    })
}

/// Echo-contrast samples from the revival model plus seeded Gaussian noise.
pub fn generate_revival_synthetic(
    truth: &EchoModelParams,
    delays: &[f64],
    noise_rms: f64,
    seed: u64,
) -> Result<AutocorrDataset> {
    truth.validate()?;
    let clean: Vec<f64> = delays.iter().map(|&t| echo_contrast(t, truth)).collect();
    noisy_dataset(delays, &clean, noise_rms, seed)
}
