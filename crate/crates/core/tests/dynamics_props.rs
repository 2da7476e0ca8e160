use ion_autocorr::dynamics::*;
use ion_autocorr::exec::Execution;
use ion_autocorr::pulse::{chirp_transform, ChirpedPulse, PulseSpec};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

fn template(sigma: f64, gdd: f64) -> ChirpedPulse {
    chirp_transform(&PulseSpec::at_default_wavelength(sigma, gdd, 1.0).unwrap())
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn p1(p: &ChirpedPulse, c: &IntegratorConfig) -> f64 {
    excitation_probability(&propagate_single(p, c, TwoLevelState::ground()).unwrap())
}

#[test]
fn no_coupling_keeps_ground_state() {
    let p = template(1.5, 5.8).with_amplitude(0.0);
    let out = propagate_single(&p, &cfg(), TwoLevelState::ground()).unwrap();
    assert!((out.c_s.norm() - 1.0).abs() < 1e-9);
    assert_eq!(out.c_p.norm(), 0.0);
}

#[test]
fn strong_chirped_pulse_inverts() {
    let p = template(1.5, 5.8).with_amplitude(0.3);
    assert!(p1(&p, &cfg()) > 0.99);
}

#[test]
fn weak_field_matches_first_order_amplitude() {
    let p = template(1.5, 5.8).with_amplitude(0.01);
    let numeric = p1(&p, &cfg());
    assert!(numeric < 0.01);
    // |∫ Ω_D w(τ) e^{−iδ²τ²/2} dτ|² by the trapezoid rule over ±10 σ_D.
    let n = 40_000;
    let h = 20.0 * p.sigma_d / n as f64;
    let amp: Complex64 = (0..=n)
        .map(|i| {
            let tau = -10.0 * p.sigma_d + i as f64 * h;
            let wgt = if i == 0 || i == n { 0.5 } else { 1.0 };
            Complex64::from_polar(p.omega_d * p.gaussian(tau), -0.5 * p.chirp_rate * tau * tau) * wgt
        })
        .sum::<Complex64>()
        * h;
    let first_order = amp.norm_sqr();
    assert!((numeric - first_order).abs() / first_order < 0.05, "{numeric} vs {first_order}");
}

#[test]
fn frames_agree() {
    let c = cfg();
    for &(s, d, a) in &[(1.5, 5.8, 0.12), (1.5, 5.8, 0.3), (1.0, -3.0, 0.5), (2.0, 0.0, 0.2)] {
        let p = template(s, d).with_amplitude(a).phase_shifted(0.7);
        let single = p1(&p, &c);
        let silent = p.with_amplitude(0.0).centered_at(40.0);
        let both = propagate_superposition(&[p, silent], &c, TwoLevelState::ground()).unwrap();
        let direct = propagate_superposition(&[p], &c, TwoLevelState::ground()).unwrap();
        assert!((excitation_probability(&direct) - single).abs() < 1e-8);
        assert!((excitation_probability(&both) - single).abs() < 1e-8);
    }
}

#[test]
fn chirp_sign_flip_conjugates_dynamics() {
    let c = cfg();
    let up = template(1.5, 5.8).with_amplitude(0.15);
    // Conjugating i∂ψ = Hψ gives i∂ψ* = −H*ψ*: flip the detuning and map the coupling g ↦ −g*.
    let mut down = up;
    down.chirp_rate = -up.chirp_rate;
    down.carrier_phase = PI - up.carrier_phase;
    let init = TwoLevelState::new(Complex64::new(0.6, 0.3), Complex64::new(0.0, -0.741_619_848_709_566_3)).unwrap();
    let a = propagate_single(&up, &c, init).unwrap();
    let b = propagate_single(&down, &c, init.conj()).unwrap();
    assert!((a.c_s.conj() - b.c_s).norm() < 1e-8);
    assert!((a.c_p.conj() - b.c_p).norm() < 1e-8);
    let flipped = template(1.5, -5.8).with_amplitude(0.15);
    assert!((p1(&up, &c) - p1(&flipped, &c)).abs() < 1e-9);
}

#[test]
fn norm_preserved_at_default_tolerance() {
    let c = cfg();
    for &(s, d) in &[(1.5, 5.8), (1.0, 10.0), (3.0, -2.0), (0.5, 0.0)] {
        for a in [0.05, 0.2, 0.5, 1.5] {
            let out = propagate_single(&template(s, d).with_amplitude(a), &c, TwoLevelState::ground()).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < 1e-9, "σ={s} D={d} Ω={a}");
            let pair = PulsePairConfig::new(&template(s, d).with_amplitude(a), 5.0, 1.0);
            let out = propagate_pair(&pair, &c, TwoLevelState::ground()).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < 1e-9, "pair σ={s} D={d} Ω={a}");
        }
    }
}

#[test]
fn opposite_phase_at_zero_delay_cancels() {
    let t = template(1.5, 5.8).with_amplitude(0.3);
    let init = TwoLevelState::new(Complex64::new(0.8, 0.0), Complex64::new(0.0, 0.6)).unwrap();
    let out = propagate_pair(&PulsePairConfig::new(&t, 0.0, PI), &cfg(), init).unwrap();
    assert!((out.c_s - init.c_s).norm() < 1e-12);
    assert!((out.c_p - init.c_p).norm() < 1e-12);
}

#[test]
fn in_phase_at_zero_delay_doubles_amplitude() {
    let t = template(1.5, 5.8).with_amplitude(0.1);
    let c = cfg();
    let pair = propagate_pair(&PulsePairConfig::new(&t, 0.0, 0.0), &c, TwoLevelState::ground()).unwrap();
    let doubled = propagate_single(&t.with_amplitude(0.2), &c, TwoLevelState::ground()).unwrap();
    assert!((excitation_probability(&pair) - excitation_probability(&doubled)).abs() < 1e-8);
}

#[test]
fn separated_pair_follows_composition_law() {
    let c = cfg();
    let t = template(1.5, 5.8);
    for target in [0.1, 0.5, 0.9] {
        let a = amplitude_for_excitation(&t, target, &c).unwrap();
        let pulse = t.with_amplitude(a);
        let map = SinglePulseMap::compute(&pulse, &c).unwrap();
        assert!((map.excitation() - target).abs() < 1e-9);
        for phi in [0.0, FRAC_PI_2, PI] {
            let pair = PulsePairConfig::new(&pulse, 12.0 * pulse.sigma_d, map.laser_phase_for(phi));
            let out = propagate_pair(&pair, &c, TwoLevelState::ground()).unwrap();
            let analytic = compose_nonoverlapping(target, phi).unwrap();
            assert!((excitation_probability(&out) - analytic).abs() < 1e-3, "p1={target} φ={phi}");
            assert!((out.c_s.norm_sqr() - (1.0 - analytic)).abs() < 1e-3);
        }
    }
}

#[test]
fn phase_averaged_limits() {
    let c = cfg();
    let t = template(1.5, 5.8);
    assert!((phase_averaged_return(&t.with_amplitude(0.0), 0.0, 8, &c).unwrap() - 1.0).abs() < 1e-14);
    let a = amplitude_for_excitation(&t, 0.5, &c).unwrap();
    let far = phase_averaged_return(&t.with_amplitude(a), 12.0 * t.sigma_d, 16, &c).unwrap();
    assert!((far - 0.5).abs() < 1e-3, "{far}");
}

#[test]
fn profile_is_even_in_delay() {
    let c = cfg();
    let t = template(1.5, 5.8).with_amplitude(0.25);
    let delays = [-9.0, -4.0, -1.5, 1.5, 4.0, 9.0];
    let prof = interference_profile(&t, &delays, 8, &c).unwrap();
    for i in 0..3 {
        assert!((prof.points[i].1 - prof.points[5 - i].1).abs() < 1e-6);
    }
}

#[test]
fn weak_pulses_leave_no_dip() {
    let c = cfg();
    let t = template(1.5, 5.8).with_amplitude(1e-4);
    let delays: Vec<f64> = (-10..=10).map(|i| i as f64 * 2.0).collect();
    let prof = interference_profile(&t, &delays, 8, &c).unwrap();
    assert!(prof.points.iter().all(|&(_, p)| (1.0 - p) < 1e-6));
    assert_eq!(prof.dip_fwhm, None);
}

#[test]
fn sequential_and_parallel_profiles_identical() {
    let t = template(1.5, 5.8).with_amplitude(0.2);
    let delays = [-6.0, -2.0, 0.0, 2.0, 6.0];
    let seq = interference_profile(&t, &delays, 8, &cfg().with_execution(Execution::Sequential)).unwrap();
    let par = interference_profile(&t, &delays, 8, &cfg().with_execution(Execution::Parallel)).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn halving_tolerance_changes_little() {
    let t = template(1.5, 5.8);
    let c = cfg();
    let fine = IntegratorConfig { rel_tol: 0.5 * c.rel_tol, ..c };
    for a in [0.05, 0.15, 0.3, 0.6] {
        let p = t.with_amplitude(a);
        assert!((p1(&p, &c) - p1(&p, &fine)).abs() < 1e-6);
        let pair = PulsePairConfig::new(&p, 3.0, 0.4);
        let x = propagate_pair(&pair, &c, TwoLevelState::ground()).unwrap();
        let y = propagate_pair(&pair, &fine, TwoLevelState::ground()).unwrap();
        assert!((excitation_probability(&x) - excitation_probability(&y)).abs() < 1e-6);
    }
}

#[test]
fn energy_scan_saturates() {
    let spec = PulseSpec::at_default_wavelength(1.5, 5.8, 1.0).unwrap();
    let unit = chirp_transform(&spec).omega_d;
    let amps: Vec<f64> = (0..=24).map(|i| i as f64 * 0.025 / unit).collect();
    let scan = energy_scan(&spec, &amps, &cfg()).unwrap();
    let p: Vec<f64> = scan.iter().map(|s| s.p1.clone().unwrap()).collect();
    assert_eq!(p[0], 0.0);
    let first = p.iter().position(|&x| x > 0.99).expect("reaches inversion");
    assert!(p[first..].iter().all(|&x| x > 0.95));
    assert!(p[..=first].windows(2).all(|w| w[1] > w[0]));
}
