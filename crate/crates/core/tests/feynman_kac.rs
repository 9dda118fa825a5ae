use fluctwave_core::feynman_kac::{
    feynman_kac_expectation, sample_path, sampled_uncertainty_product, solve_euclidean_pde, uncertainty_product,
    UniformGrid,
};
use fluctwave_core::stats::{ks_critical_1pct, ks_statistic_normal, Moments};
use fluctwave_core::stochastic_core::RngStream;
use fluctwave_core::{Complex64, EnsembleSettings, ModelPotential, PhysicalConstants, PotentialField};
use proptest::prelude::*;

fn gaussian(x: f64) -> f64 {
    (-0.5 * x * x).exp()
}

fn endpoints(c: &PhysicalConstants, t: f64, n: u64) -> Vec<f64> {
    (0..n).map(|i| sample_path(c, 0.0, t, 20, &mut RngStream::new(11, i), 0.0).unwrap().endpoint()).collect()
}

#[test]
fn endpoint_variance_is_hbar_over_m_times_t() {
    for (hbar, t) in [(1.0, 1.0), (4.0, 0.25)] {
        let c = PhysicalConstants::new(hbar, 1.0, 1.0).unwrap();
        let xs = endpoints(&c, t, 100_000);
        let var = Moments::of(&xs).variance;
        assert!((var - 1.0).abs() <= 0.02, "hbar/m = {hbar}: {var}");
    }
}

#[test]
fn endpoints_pass_normality() {
    let c = PhysicalConstants::natural();
    let xs = endpoints(&c, 1.0, 20_000);
    let d = ks_statistic_normal(&xs, 0.0, 1.0);
    assert!(d < ks_critical_1pct(xs.len()), "KS {d}");
}

#[test]
fn monte_carlo_matches_finite_differences() {
    let c = PhysicalConstants::natural();
    let settings = EnsembleSettings { t0: 0.0, t1: 1.0, n_steps: 500, n_paths: 100_000, seed: 5 };
    let xg = UniformGrid::new(-12.0, 12.0, 961).unwrap();
    let tg = UniformGrid::new(0.0, 1.0, 2001).unwrap();
    for v in [ModelPotential::Zero, ModelPotential::Constant { v0: 0.5 }, ModelPotential::Harmonic { k: 1.0 }] {
        let grid = solve_euclidean_pde(&c, &v, &gaussian, xg, tg).unwrap();
        for x in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let mc = feynman_kac_expectation(&c, &v, &|x| Complex64::new(gaussian(x), 0.0), x, &settings).unwrap();
            let oracle = grid.interpolate_final(x).unwrap();
            assert!(
                (mc.mean.re - oracle).abs() <= 3.0 * mc.std_error,
                "{v} at {x}: {} vs {oracle} (se {})",
                mc.mean.re,
                mc.std_error
            );
        }
    }
}

#[test]
fn free_solution_is_heat_kernel_spread() {
    // a Gaussian of variance s^2 spreads to variance s^2 + (hbar/m) T
    let c = PhysicalConstants::new(0.5, 1.0, 1.0).unwrap();
    let (s2, t) = (0.3f64, 1.2);
    let xg = UniformGrid::new(-10.0, 10.0, 801).unwrap();
    let tg = UniformGrid::new(0.0, t, 4001).unwrap();
    let psi0 = |x: f64| (-x * x / (2.0 * s2)).exp();
    let grid = solve_euclidean_pde(&c, &ModelPotential::Zero, &psi0, xg, tg).unwrap();
    let v = s2 + c.hbar / c.mass * t;
    let exact = |x: f64| (s2 / v).sqrt() * (-x * x / (2.0 * v)).exp();
    let (mut err, mut norm) = (0.0, 0.0);
    for (x, u) in xg.points().into_iter().zip(grid.final_row()) {
        err += (u - exact(x)).powi(2);
        norm += exact(x).powi(2);
    }
    assert!((err / norm).sqrt() < 0.01, "{}", (err / norm).sqrt());
}

#[test]
fn uncertainty_product_is_hbar() {
    let c = PhysicalConstants::electron_si();
    for dt in [1e-15, 1e-9, 1.0] {
        let p = uncertainty_product(&c, dt).unwrap();
        assert!(((p - c.hbar) / c.hbar).abs() <= 1e-12);
    }
    let p = sampled_uncertainty_product(&c, 1e-9, 100_000, 17).unwrap();
    assert!(((p - c.hbar) / c.hbar).abs() <= 0.01, "{p}");
}

fn small(seed: u64) -> EnsembleSettings {
    EnsembleSettings { t0: 0.0, t1: 0.5, n_steps: 10, n_paths: 200, seed }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn expectation_is_linear_in_initial_data(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>(), x in -1.0f64..1.0) {
        let c = PhysicalConstants::natural();
        let v = ModelPotential::Harmonic { k: 0.7 };
        let f = |x: f64| Complex64::new(gaussian(x), 0.0);
        let g = |x: f64| Complex64::new(x.sin(), 0.0);
        let mix = |x: f64| a * f(x) + b * g(x);
        let s = small(seed);
        let lhs = feynman_kac_expectation(&c, &v, &mix, x, &s).unwrap().mean;
        let rhs = a * feynman_kac_expectation(&c, &v, &f, x, &s).unwrap().mean
            + b * feynman_kac_expectation(&c, &v, &g, x, &s).unwrap().mean;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + a.abs() + b.abs()));
    }

    #[test]
    fn larger_potential_gives_smaller_expectation(v0 in 0.0f64..2.0, dv in 0.0f64..2.0, seed in any::<u64>()) {
        let c = PhysicalConstants::natural();
        let psi0 = |x: f64| Complex64::new(gaussian(x), 0.0);
        let s = small(seed);
        let lo = feynman_kac_expectation(&c, &ModelPotential::Constant { v0 }, &psi0, 0.2, &s).unwrap().mean.re;
        let hi = feynman_kac_expectation(&c, &ModelPotential::Constant { v0: v0 + dv }, &psi0, 0.2, &s).unwrap().mean.re;
        prop_assert!(hi <= lo);
    }

    #[test]
    fn weight_never_exceeds_bound(k in 0.0f64..3.0, seed in any::<u64>()) {
        let c = PhysicalConstants::natural();
        let v = ModelPotential::Harmonic { k };
        let mut p = sample_path(&c, 0.0, 1.0, 16, &mut RngStream::new(seed, 0), 0.0).unwrap();
        let w = p.weigh(&c, &v).unwrap();
        prop_assert!(w > 0.0 && w <= (-v.lower_bound()).exp());
        prop_assert_eq!(v.value(0.0, 0.0), 0.0);
    }
}
