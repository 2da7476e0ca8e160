use ion_autocorr::contrast::{autocorr_contrast_curve, echo_contrast, AutocorrParams, EchoModelParams, RAD_PER_PS_PER_KHZ};
use ion_autocorr::dynamics::IntegratorConfig;
use ion_autocorr::fit::{
    fit_autocorrelation, fit_contrast_revival, generate_revival_synthetic, generate_synthetic, AutocorrDataset,
    DataPoint, FitConfig, FixedMask,
};
use ion_autocorr::pulse::{fwhm_from_width, fwhm_stretch};
use ion_autocorr::Error;

const TRUTH: AutocorrParams = AutocorrParams { intensity: 0.05, sigma: 1.5, gdd: 5.8, contrast_scale: 0.79 };

fn cfg() -> FitConfig {
    FitConfig { n_phase: 8, ..FitConfig::default() }
}

fn delays(truth: &AutocorrParams, n: usize) -> Vec<f64> {
    let fw = truth.to_chirped().unwrap().fwhm();
    (0..n).map(|i| -3.0 * fw + 6.0 * fw * i as f64 / (n - 1) as f64).collect()
}

fn off_by(p: &AutocorrParams, f: f64) -> AutocorrParams {
    AutocorrParams {
        intensity: p.intensity * f,
        sigma: p.sigma / f,
        gdd: p.gdd,
        contrast_scale: (p.contrast_scale * f).min(1.0),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn noiseless_round_trip_from_perturbed_starts() {
    let cfg = cfg();
    let data = generate_synthetic(&TRUTH, &delays(&TRUTH, 30), 0.0, 0, &cfg).unwrap();
    let truth_fwhm = TRUTH.to_chirped().unwrap().fwhm();
    for f in [0.8, 1.2] {
        let fit = fit_autocorrelation(&data, &off_by(&TRUTH, f), FixedMask::gdd_only(), &cfg).unwrap();
        assert!((fit.sigma - 1.5).abs() / 1.5 < 0.01, "start ×{f}: σ = {}", fit.sigma);
        assert!((fit.fwhm_chirped - truth_fwhm).abs() / truth_fwhm < 0.01);
        assert!(fit.chi2_reduced < 1e-4, "{}", fit.chi2_reduced);
        assert!(!fit.is_ill_conditioned(), "{:?}", fit.warnings);
    }
}

#[test]
fn chi2_history_never_increases() {
    let cfg = cfg();
    let data = generate_synthetic(&TRUTH, &delays(&TRUTH, 24), 0.04, 5, &cfg).unwrap();
    let fit = fit_autocorrelation(&data, &off_by(&TRUTH, 0.85), FixedMask::gdd_only(), &cfg).unwrap();
    assert!(fit.chi2_history.len() >= 2);
    for w in fit.chi2_history.windows(2) {
        assert!(w[1] <= w[0], "{:?}", fit.chi2_history);
    }
    assert_eq!(fit.seed, Some(5));
}

#[test]
fn fits_are_deterministic() {
    let cfg = cfg();
    let data = generate_synthetic(&TRUTH, &delays(&TRUTH, 20), 0.04, 9, &cfg).unwrap();
    let a = fit_autocorrelation(&data, &off_by(&TRUTH, 1.1), FixedMask::gdd_only(), &cfg).unwrap();
    let seq = FitConfig { integrator: cfg.integrator.with_execution(ion_autocorr::exec::Execution::Sequential), ..cfg };
    let b = fit_autocorrelation(&data, &off_by(&TRUTH, 1.1), FixedMask::gdd_only(), &seq).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reported_fwhm_is_the_stretch_formula() {
    let cfg = cfg();
    let data = generate_synthetic(&TRUTH, &delays(&TRUTH, 20), 0.04, 2, &cfg).unwrap();
    let fit = fit_autocorrelation(&data, &TRUTH, FixedMask::gdd_only(), &cfg).unwrap();
    let expect = fwhm_stretch(fwhm_from_width(fit.sigma).unwrap(), fit.gdd).unwrap();
    assert!((fit.fwhm_chirped - expect).abs() <= 1e-9 * expect);
    let dip = fit.fwhm_profile.expect("dip present");
    assert!(dip > 0.0 && dip < fit.fwhm_chirped);
}

#[test]
fn scale_only_fit_is_linear() {
    let cfg = cfg();
    let data = generate_synthetic(&TRUTH, &delays(&TRUTH, 16), 0.0, 0, &cfg).unwrap();
    let start = AutocorrParams { contrast_scale: 0.4, ..TRUTH };
    let fit = fit_autocorrelation(&data, &start, FixedMask::pulse_only(), &cfg).unwrap();
    assert!((fit.contrast_scale - 0.79).abs() < 1e-6, "{}", fit.contrast_scale);
    assert_eq!((fit.sigma, fit.gdd, fit.intensity), (1.5, 5.8, 0.05));
    assert!(fit.param_errors.sigma.is_none());
    assert!(fit.param_errors.contrast_scale.unwrap() > 0.0);
}

#[test]
fn underdetermined_and_out_of_bounds_rejected() {
    let cfg = cfg();
    let points: Vec<DataPoint> =
        (0..8).map(|i| DataPoint { delay: i as f64, contrast: 0.5, sigma_err: 0.04 }).collect();
    let data = AutocorrDataset::new(points, None).unwrap();
    let start = AutocorrParams { sigma: 50.0, ..TRUTH };
    assert!(fit_autocorrelation(&data, &start, FixedMask::gdd_only(), &cfg).is_err());
}

#[test]
fn error_shrinks_with_noise() {
    let cfg = cfg();
    let grid = delays(&TRUTH, 30);
    let mut medians = Vec::new();
    for noise in [0.04, 0.01, 0.0025] {
        let errs: Vec<f64> = (0..8u64)
            .map(|seed| {
                let data = generate_synthetic(&TRUTH, &grid, noise, seed, &cfg).unwrap();
                let fit = fit_autocorrelation(&data, &off_by(&TRUTH, 0.9), FixedMask::gdd_only(), &cfg).unwrap();
                (fit.sigma - 1.5).abs() / 1.5
            })
            .collect();
        medians.push(median(errs));
    }
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
    assert!(medians[2] < 0.02, "{medians:?}");
}

#[test]
fn non_convergence_carries_best_so_far() {
    let cfg = FitConfig { max_iterations: 1, ..cfg() };
    let data = generate_synthetic(&TRUTH, &delays(&TRUTH, 20), 0.04, 1, &cfg).unwrap();
    match fit_autocorrelation(&data, &off_by(&TRUTH, 0.7), FixedMask::gdd_only(), &cfg) {
        Err(Error::NonConvergence { best_params, .. }) => {
            assert_eq!(best_params.len(), 4);
            assert_eq!(best_params[2], 5.8);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

fn revival_reference() -> EchoModelParams {
    EchoModelParams::new(0.56, 21.0, 0.19, 890.0 * RAD_PER_PS_PER_KHZ).unwrap()
}

fn revival_delays(p: &EchoModelParams) -> Vec<f64> {
    (0..60).map(|i| 2.5 * p.period() * i as f64 / 59.0).collect()
}

#[test]
fn revival_round_trip() {
    let truth = revival_reference();
    let start = EchoModelParams { c0: 0.4, nbar: 10.0, ..truth };
    let mut c0_err = Vec::new();
    let mut nbar_err = Vec::new();
    for seed in 0..8 {
        let data = generate_revival_synthetic(&truth, &revival_delays(&truth), 0.03, seed).unwrap();
        let fit = fit_contrast_revival(&data, &start, &cfg()).unwrap();
        assert!(!fit.is_ill_conditioned());
        // Reported standard errors cover the scatter.
        assert!((fit.nbar - 21.0).abs() < 3.5 * fit.nbar_err.unwrap(), "seed {seed}: {fit:?}");
        assert!((fit.c0 - 0.56).abs() < 3.5 * fit.c0_err.unwrap(), "seed {seed}: {fit:?}");
        c0_err.push((fit.c0 - 0.56).abs());
        nbar_err.push((fit.nbar - 21.0).abs() / 21.0);
    }
    assert!(median(c0_err.clone()) < 0.05, "{c0_err:?}");
    assert!(median(nbar_err.clone()) < 0.15, "{nbar_err:?}");
}

#[test]
fn ground_state_revival_gives_small_nbar() {
    let truth = EchoModelParams { nbar: 0.0, ..revival_reference() };
    let start = EchoModelParams { c0: 0.4, nbar: 10.0, ..truth };
    let data = generate_revival_synthetic(&truth, &revival_delays(&truth), 0.0, 0).unwrap();
    let fit = fit_contrast_revival(&data, &start, &cfg()).unwrap();
    assert!(fit.nbar < 0.5, "{}", fit.nbar);
}

#[test]
fn vanishing_lamb_dicke_flags_nbar_unidentifiable() {
    let truth = EchoModelParams { eta_ld: 1e-6, ..revival_reference() };
    let start = EchoModelParams { c0: 0.4, nbar: 10.0, ..truth };
    let data = generate_revival_synthetic(&truth, &revival_delays(&revival_reference()), 0.03, 0).unwrap();
    let fit = fit_contrast_revival(&data, &start, &cfg()).unwrap();
    assert!(fit.is_ill_conditioned(), "{:?}", fit.warnings);
    assert!((fit.c0 - 0.56).abs() < 0.05);
}

#[test]
fn revival_model_on_grid_matches_generator() {
    let truth = revival_reference();
    let grid = revival_delays(&truth);
    let data = generate_revival_synthetic(&truth, &grid, 0.0, 0).unwrap();
    for p in data.points() {
        assert_eq!(p.contrast, echo_contrast(p.delay, &truth));
    }
}

#[test]
fn contrast_curve_shape() {
    let icfg = IntegratorConfig::default();
    let curve = autocorr_contrast_curve(&TRUTH, &[-40.0, -3.0, 0.0, 3.0, 40.0], 16, 0.0, &icfg).unwrap();
    let at = |i: usize| curve[i].1;
    // Overlapping pulses return almost every ion to |S⟩ only weakly.
    assert!(at(2) > 0.08 && at(2) < 0.2, "{}", at(2));
    assert!((at(1) - at(3)).abs() < 1e-6);
    assert!((at(0) - at(4)).abs() < 1e-6);
    assert!(at(4) > at(1) && at(0) < TRUTH.contrast_scale);
    let jittered = autocorr_contrast_curve(&TRUTH, &[40.0], 16, 0.5, &icfg).unwrap();
    assert!(jittered[0].1 < at(4));
}
