use fluctwave_core::fluctuating_wave::{
    ensemble_samples, euclidean_multiplicative_step, euclidean_sde_step, expectation_recovery, martingale_sweep,
    real_time_impulse, real_time_multiplicative_step, Branch, GradientClosure, VelocityParam,
};
use fluctwave_core::stats::{chi_squared_variance_interval, ComplexMoments, Moments};
use fluctwave_core::stochastic_core::{sample_wiener_increment, RngStream, WienerIncrement};
use fluctwave_core::{Complex64, EnsembleSettings, ModelPotential, PhysicalConstants};

fn gaussian(x: f64) -> Complex64 {
    Complex64::new((-0.5 * x * x).exp(), 0.0)
}

#[test]
fn clause2_obeys_ito_isometry() {
    let c = PhysicalConstants::new(0.8, 1.0, 1.0).unwrap();
    let grad = Complex64::new(1.5, 0.0);
    let closure = |_t: f64| grad;
    let settings = EnsembleSettings { t0: 0.25, t1: 1.5, n_steps: 25, n_paths: 10_000, seed: 21 };
    let samples = ensemble_samples(
        &c,
        &ModelPotential::Zero,
        &gaussian,
        GradientClosure::Function(&closure),
        0.0,
        &settings,
        Branch::Euclidean,
    )
    .unwrap();
    let c2: Vec<Complex64> = samples.iter().map(|s| s.clause2).collect();
    let var = ComplexMoments::of(&c2).variance;
    let expected = grad.norm_sqr() * c.hbar / c.mass * (settings.t1 - settings.t0);
    let (lo, hi) = chi_squared_variance_interval(expected, c2.len());
    assert!(lo <= var && var <= hi, "{var} outside [{lo}, {hi}]");
}

#[test]
fn real_time_clause2_squares_to_minus_i() {
    let c = PhysicalConstants::natural();
    let closure = |_t: f64| Complex64::new(0.7, 0.0);
    let settings = EnsembleSettings { t0: 0.0, t1: 1.0, n_steps: 10, n_paths: 2_000, seed: 4 };
    let samples = ensemble_samples(
        &c,
        &ModelPotential::Zero,
        &gaussian,
        GradientClosure::Function(&closure),
        0.0,
        &settings,
        Branch::RealTime,
    )
    .unwrap();
    let sq: Vec<Complex64> = samples.iter().map(|s| s.clause2 * s.clause2).collect();
    let arg = ComplexMoments::of(&sq).mean.arg();
    assert!((arg + std::f64::consts::FRAC_PI_2).abs() < 1e-12, "{arg}");
}

#[test]
fn real_time_is_continuation_of_euclidean() {
    // constant potential, no gradient: exp(-V T/hbar) becomes exp(-i V T/hbar)
    let c = PhysicalConstants::natural();
    let zero = |_t: f64| Complex64::new(0.0, 0.0);
    let settings = EnsembleSettings { t0: 0.0, t1: 1.0, n_steps: 40, n_paths: 4, seed: 8 };
    for v0 in [0.0, 0.3, 1.0, std::f64::consts::PI, 5.5] {
        let v = ModelPotential::Constant { v0 };
        let run = |branch| {
            ensemble_samples(
                &c,
                &v,
                &|_| Complex64::new(1.0, 0.0),
                GradientClosure::Function(&zero),
                0.0,
                &settings,
                branch,
            )
            .unwrap()[0]
                .psi
        };
        let e = run(Branch::Euclidean);
        let r = run(Branch::RealTime);
        assert!((e.re - (-v0).exp()).abs() < 1e-12 && e.im == 0.0);
        assert!((r - Complex64::new(0.0, -v0).exp()).norm() < 1e-12, "{v0}: {r}");
    }
}

#[test]
fn multiplicative_step_agrees_with_sde_to_first_order() {
    let c = PhysicalConstants::natural();
    let vel = VelocityParam::new(2.0).unwrap();
    let (v, psi) = (0.9, Complex64::new(0.6, -0.3));
    let curvature = 0.5 * (v * c.path_sigma() / (c.hbar * vel.v_x())).powi(2) * psi.norm();
    let mut prev = f64::INFINITY;
    // the relative gap closes like sqrt(dt)
    for dt in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7] {
        let dw = WienerIncrement::from_normal(-dt, 1.0).unwrap();
        let closure = -(v / (c.hbar * vel.v_x())) * psi;
        let sde = euclidean_sde_step(psi, closure, v, &c, &dw).unwrap();
        let mult = euclidean_multiplicative_step(psi, v, &c, vel, &dw, dt);
        let gap = ((mult - sde).norm() / dt - curvature).abs() / curvature;
        assert!(gap < prev, "dt {dt}: {gap}");
        prev = gap;
    }
    assert!(prev < 1e-2);
}

#[test]
fn multiplicative_steps_are_log_normal() {
    let c = PhysicalConstants::natural();
    let vel = VelocityParam::new(1.3).unwrap();
    let (v, dt, n) = (0.8, 0.01, 100_000);
    let mut s = RngStream::new(33, 0);
    let draws: Vec<WienerIncrement> = (0..n).map(|_| sample_wiener_increment(dt, &mut s).unwrap()).collect();
    let one = Complex64::new(1.0, 0.0);

    let logs: Vec<f64> =
        draws.iter().map(|w| euclidean_multiplicative_step(one, v, &c, vel, &w.flipped(), dt).norm().ln()).collect();
    let m = Moments::of(&logs);
    let slope = v * c.path_sigma() / (c.hbar * vel.v_x());
    assert!((m.mean + v * dt / c.hbar).abs() < 3.0 * m.std_error);
    let (lo, hi) = chi_squared_variance_interval(slope * slope * dt, n);
    assert!(lo <= m.variance && m.variance <= hi);

    let half = slope / std::f64::consts::SQRT_2;
    let steps: Vec<Complex64> =
        draws.iter().map(|w| real_time_multiplicative_step(one, v, &c, vel, w, dt).unwrap()).collect();
    let logs: Vec<f64> = steps.iter().map(|z| z.norm().ln()).collect();
    let m = Moments::of(&logs);
    assert!(m.mean.abs() < 3.0 * m.std_error);
    let (lo, hi) = chi_squared_variance_interval(half * half * dt, n);
    assert!(lo <= m.variance && m.variance <= hi);
    let moduli: Vec<f64> = steps.iter().map(|z| z.norm()).collect();
    let mm = Moments::of(&moduli);
    assert!((mm.mean - (0.5 * half * half * dt).exp()).abs() < 3.0 * mm.std_error);
    for (z, l) in steps.iter().zip(&logs) {
        // modulus and phase share one draw
        assert!((z.arg() + v * dt / c.hbar - l).abs() < 1e-12);
    }
}

#[test]
fn impulse_spread_matches_half_sigma() {
    let c = PhysicalConstants::new(2.0, 0.5, 1.0).unwrap();
    let vel = VelocityParam::new(3.0).unwrap();
    let (dv, dt, n) = (1.7, 0.02, 100_000);
    let mut s = RngStream::new(2, 0);
    let ps: Vec<f64> = (0..n)
        .map(|_| real_time_impulse(dv, &c, vel, &sample_wiener_increment(dt, &mut s).unwrap(), dt).unwrap().p_y)
        .collect();
    let m = Moments::of(&ps);
    let sd = dv * (c.hbar / (2.0 * c.mass)).sqrt() / vel.v_x() * dt.sqrt();
    let (lo, hi) = chi_squared_variance_interval(sd * sd, n);
    assert!(lo <= m.variance && m.variance <= hi);
    assert!((m.mean + dv * dt).abs() < 3.0 * m.std_error);
}

#[test]
fn averaging_recovers_feynman_kac() {
    let c = PhysicalConstants::natural();
    let settings = EnsembleSettings { t0: 0.0, t1: 1.0, n_steps: 50, n_paths: 10_000, seed: 77 };
    let vel = VelocityParam::new(1.0).unwrap();
    for v in [ModelPotential::Constant { v0: 0.5 }, ModelPotential::Harmonic { k: 1.0 }] {
        let report = expectation_recovery(&c, &v, &gaussian, 0.3, vel, &settings).unwrap();
        assert!(report.passed(), "{v}: {report:?}");
    }
    let report = expectation_recovery(&c, &ModelPotential::Zero, &gaussian, 0.3, vel, &settings).unwrap();
    assert_eq!(report.max_abs_clause2, 0.0);
}

#[test]
fn clause2_mean_shrinks_with_ensemble_size() {
    let c = PhysicalConstants::natural();
    let base = EnsembleSettings { t0: 0.0, t1: 1.0, n_steps: 20, n_paths: 0, seed: 99 };
    let sweep = martingale_sweep(
        &c,
        &ModelPotential::Harmonic { k: 1.0 },
        &gaussian,
        0.3,
        VelocityParam::new(1.0).unwrap(),
        &base,
        &[100, 1_000, 10_000],
        16,
    )
    .unwrap();
    assert!(sweep.passed(), "{sweep:?}");
}
