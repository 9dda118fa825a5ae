use fluctwave_core::biprism::{
    bright_spot_position, monte_carlo_fringe_distribution, spread_sigma, transverse_wavenumber, BiprismConfig, WavePair,
};
use fluctwave_core::stochastic_core::RngStream;
use fluctwave_core::{ModelPotential, PhysicalConstants};
use proptest::prelude::*;
use statrs::function::erf::erf;

fn setup() -> (PhysicalConstants, BiprismConfig) {
    let c = PhysicalConstants::electron_si();
    (c, BiprismConfig::reference(&c))
}

#[test]
fn peak_sign_follows_wavenumber_difference() {
    let (_, cfg) = setup();
    let env = cfg.envelope();
    let k = cfg.nominal_k_x();
    let mut s = RngStream::new(1, 0);
    for i in 0..1000 {
        let kl = k * (0.5 + s.next_uniform());
        let kr = if i % 10 == 0 { kl } else { k * (0.5 + s.next_uniform()) };
        let peak = bright_spot_position(&WavePair { k_x_left: kl, k_x_right: kr }, &cfg, &env).unwrap();
        let expected = (kl - kr).partial_cmp(&0.0).unwrap();
        assert_eq!(peak.partial_cmp(&0.0).unwrap(), expected, "kl {kl} kr {kr} peak {peak}");
    }
}

#[test]
fn peak_moves_left_as_right_wavenumber_grows() {
    let (_, cfg) = setup();
    let env = cfg.envelope();
    let k = cfg.nominal_k_x();
    let peaks: Vec<f64> = (-20..=20)
        .map(|j| {
            let pair = WavePair { k_x_left: k, k_x_right: k * (1.0 + 1e-5 * j as f64) };
            bright_spot_position(&pair, &cfg, &env).unwrap()
        })
        .collect();
    assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");
}

#[test]
fn coverage_and_mode_of_sampled_peaks() {
    let (c, cfg) = setup();
    let d = monte_carlo_fringe_distribution(&c, &cfg, 10_000, 2024).unwrap();
    let sigma = spread_sigma(&c, &cfg);
    // the peak is the fringe maximum nearest the envelope centre, and the
    // fringe offset varies per sample: centre ~ N(0, sigma^2) plus a uniform
    // jitter over one fringe period
    let p = cfg.fringe_width_theoretical;
    let cells = 1000;
    let expected = (0..cells)
        .map(|j| {
            let u = p * ((j as f64 + 0.5) / cells as f64 - 0.5);
            let z = |x: f64| 0.5 * (1.0 + erf(x / (sigma * std::f64::consts::SQRT_2)));
            z(sigma - u) - z(-sigma - u)
        })
        .sum::<f64>()
        / cells as f64;
    let se = (expected * (1.0 - expected) / 10_000.0).sqrt();
    assert!((d.fraction_within_sigma - expected).abs() < 4.0 * se, "{} vs {expected}", d.fraction_within_sigma);
    assert!((0.6..0.8).contains(&d.fraction_within_sigma));
    assert_eq!(d.mode_bin_center, 0.0);
    assert!(d.stats.fringe_count >= 17 && d.stats.fringe_count <= 20, "{}", d.stats.fringe_count);
    assert_eq!(d.fringe_count_spread, 18);
    assert_eq!(d.fringe_count_probwave, 400);
    let sd = d.stats.sigma_estimate;
    let jittered = (sigma * sigma + p * p / 12.0).sqrt();
    assert!((sd / jittered - 1.0).abs() < 4.0 / (2.0f64 * 10_000.0).sqrt(), "{sd} vs {jittered}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_matches_gaussian_closed_form(
        v0 in 0.1f64..100.0,
        w in 0.3e-6f64..3e-6,
        l in 20e-6f64..100e-6,
        a in 0.1e-6f64..2e-6,
    ) {
        let (c, base) = setup();
        let cfg = BiprismConfig { filament_half_gap: a, filament: ModelPotential::Gaussian { v0, w, l }, ..base };
        let numeric = transverse_wavenumber(&cfg.filament, &c, &cfg).unwrap();
        let coeff = c.mass * c.charge / (c.hbar * c.hbar * cfg.k_z);
        let closed = coeff * v0 * 2.0 * a / (w * w) * (-(a * a) / (w * w)).exp() * std::f64::consts::PI.sqrt() * l;
        prop_assert!(((numeric - closed) / closed).abs() <= 1e-6, "{} vs {}", numeric, closed);
    }

    #[test]
    fn intensity_stays_in_range(kl in 1e6f64..1e8, kr in 1e6f64..1e8, x in -1e-5f64..1e-5) {
        let (_, cfg) = setup();
        let i = WavePair { k_x_left: kl, k_x_right: kr }.intensity(x, cfg.filament_half_gap);
        prop_assert!((0.0..=4.0).contains(&i));
    }
}
