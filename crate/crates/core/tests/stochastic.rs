use fluctwave_core::stats::{chi_squared_variance_interval, pearson_correlation, Moments};
use fluctwave_core::stochastic_core::{
    euler_maruyama_step, ito_lemma_coefficients, sample_wiener_increment, substream_seed, ItoProcessSpec, NormalSource,
    RngStream, WienerIncrement,
};
use proptest::prelude::*;

#[test]
fn substreams_are_uncorrelated() {
    let n = 1_000_000;
    let mut a = RngStream::new(42, 0);
    let mut b = RngStream::new(42, 1);
    let xs: Vec<f64> = (0..n).map(|_| a.next_normal()).collect();
    let ys: Vec<f64> = (0..n).map(|_| b.next_normal()).collect();
    let bound = 3.0 / (n as f64).sqrt();
    let rho = pearson_correlation(&xs, &ys);
    assert!(rho.abs() < bound, "cross-stream correlation {rho}");
    let lag = pearson_correlation(&xs[..n - 1], &xs[1..]);
    assert!(lag.abs() < bound, "lag-1 correlation {lag}");
}

#[test]
fn wiener_variance_inside_chi_squared_interval() {
    let dt = 0.01;
    let n = 100_000;
    let mut s = RngStream::new(9, 0);
    let xs: Vec<f64> = (0..n).map(|_| sample_wiener_increment(dt, &mut s).unwrap().value).collect();
    let var = Moments::of(&xs).variance;
    let (lo, hi) = chi_squared_variance_interval(dt, n);
    assert!(lo <= var && var <= hi, "{var} outside [{lo}, {hi}]");
}

#[test]
fn squared_brownian_mean_grows_linearly() {
    let square = |x: f64, _t: f64| x * x;
    let bm = ItoProcessSpec::constant(0.0, 1.0);
    for x in [-2.0, 0.0, 0.5, 3.0] {
        let (drift, _) = ito_lemma_coefficients(&square, &bm, x, 0.0).unwrap();
        assert!((drift - 1.0).abs() < 1e-6, "{drift}");
    }
    // E[X_T^2] = X0^2 + T by integrating the unit drift
    let (x0, t_end, steps, n) = (0.5, 1.0, 50, 100_000u64);
    let dt = t_end / steps as f64;
    let finals: Vec<f64> = (0..n)
        .map(|i| {
            let mut s = RngStream::new(3, i);
            let mut x = x0;
            for k in 0..steps {
                let dw = sample_wiener_increment(dt, &mut s).unwrap();
                x = euler_maruyama_step(x, k as f64 * dt, &bm, &dw).unwrap();
            }
            x * x
        })
        .collect();
    let m = Moments::of(&finals);
    assert!((m.mean - (x0 * x0 + t_end)).abs() < 3.0 * m.std_error, "{} +- {}", m.mean, m.std_error);
}

proptest! {
    #[test]
    fn flipping_twice_is_identity(dt in -10.0f64..10.0, xi in -5.0f64..5.0) {
        prop_assume!(dt != 0.0);
        let w = WienerIncrement::from_normal(dt, xi).unwrap();
        prop_assert_eq!(w.flipped().flipped(), w);
        prop_assert_eq!(w.flipped().value, w.value);
        prop_assert_eq!(w.conjugate, dt < 0.0);
    }

    #[test]
    fn noiseless_step_is_linear(x in -10.0f64..10.0, a in -3.0f64..3.0, dt in 1e-6f64..0.1, xi in -4.0f64..4.0) {
        let spec = ItoProcessSpec::constant(a, 0.0);
        let dw = WienerIncrement::from_normal(dt, xi).unwrap();
        prop_assert_eq!(euler_maruyama_step(x, 0.0, &spec, &dw).unwrap(), x + a * dt);
    }

    #[test]
    fn streams_replay(master in any::<u64>(), index in any::<u64>()) {
        let mut a = RngStream::new(master, index);
        let mut b = RngStream::new(master, index);
        for _ in 0..16 {
            prop_assert_eq!(a.next_normal().to_bits(), b.next_normal().to_bits());
        }
        prop_assert_ne!(substream_seed(master, index), substream_seed(master, index.wrapping_add(1)));
    }

    #[test]
    fn ito_diffusion_is_chain_rule(x in -3.0f64..3.0, b in 0.1f64..2.0) {
        let spec = ItoProcessSpec::constant(0.0, b);
        let cube = |x: f64, _t: f64| x * x * x;
        let (drift, diffusion) = ito_lemma_coefficients(&cube, &spec, x, 0.0).unwrap();
        prop_assert!((diffusion - 3.0 * x * x * b).abs() < 1e-5 * (1.0 + 3.0 * x * x * b));
        prop_assert!((drift - 3.0 * x * b * b).abs() < 1e-4 * (1.0 + 3.0 * x.abs() * b * b));
    }
}
