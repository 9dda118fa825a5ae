//! Electron biprism: deflected waves, two-wave interference, the Fraunhofer
//! envelope and the statistics of a fluctuating bright spot.
//!
//! The filament potential `V(x, z)` is an electrostatic potential in volts;
//! the electron's potential energy is `-e V` and the deflection phase is
//! `(m e / hbar^2 k_z) int V dz`. The model filament is a Gaussian ridge
//! (`ModelPotential::Gaussian`), whose z-integrals have closed forms.
//!
//! # Unequal wavenumbers
//!
//! With `k_x(L) != k_x(R)` a plane-wave superposition alone keeps its maximum
//! at the centre, so the two waves are given source geometry: the left wave
//! is `exp(i k_L (x - a))` and the right wave `exp(-i k_R (x + a))`, giving
//!
//! ```text
//! I(x) = 2 + 2 cos((k_L + k_R) x - (k_L - k_R) a)
//! ```
//!
//! which is `4 cos^2(k x)` when `k_L = k_R = k`. The diffraction envelope
//! follows the mean transverse direction of the pair and is centred at
//! `L (k_L - k_R) / (2 k_z)`. The bright spot is the argmax of envelope times
//! intensity; with this reference choice a larger `k_R` moves it left and a
//! larger `k_L` moves it right.
//!
//! # Spread estimate
//!
//! The peak spread is `sigma = sqrt(hbar/2m) sqrt(dt)` with `dt = L / v_z`
//! the slit-to-screen transit time; `sqrt(hbar/2m)` carries m/sqrt(s), so
//! sigma is a length. The quoted range is `2 sigma`, one sigma either side.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feynman_kac::PhysicalConstants;
use crate::fluctuating_wave::{real_time_impulse, ImpulseSample, VelocityParam};
use crate::potential::{ModelPotential, PotentialField};
use crate::stats::{ks_critical_1pct, ks_statistic_normal, Moments};
use crate::stochastic_core::{sample_wiener_increment, NormalSource, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiprismConfig {
    /// longitudinal wavenumber, 1/m
    pub k_z: f64,
    /// m/s
    pub v_z: f64,
    /// m
    pub slit_to_screen: f64,
    /// plane-wave fringe spacing, m
    pub fringe_width_theoretical: f64,
    /// observed fringe spacing, m
    pub fringe_width_experimental: f64,
    /// transverse coherence length (one side), m
    pub coherence_length: f64,
    /// filament half gap `a`, m
    pub filament_half_gap: f64,
    /// when set, the envelope half-width is `lambda L / aperture` instead of
    /// the coherence length
    pub aperture_width: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
    /// multiplier on the sigma-scaled wavenumber noise; 0 disables it
    pub noise: f64,
    pub filament: ModelPotential,
    /// quadrature runs over `[-z_extent, z_extent]`
    pub z_extent: f64,
    /// steps used to accumulate the impulse through the filament field
    pub z_steps: usize,
}

impl BiprismConfig {
    /// 50 kV electrons, 1.5 m to the screen, 900 Å / 7000 Å fringes and a
    /// 140 µm coherence length. The filament is a Gaussian ridge of width
    /// 1 µm and length 100 µm whose height gives the 900 Å fringes.
    pub fn reference(constants: &PhysicalConstants) -> Self {
        let v_z = 1.3e8;
        let mut config = Self {
            k_z: constants.mass * v_z / constants.hbar,
            v_z,
            slit_to_screen: 1.5,
            fringe_width_theoretical: 900e-10,
            fringe_width_experimental: 7000e-10,
            coherence_length: 140e-6,
            filament_half_gap: 0.5e-6,
            aperture_width: None,
            n_samples: 10_000,
            seed: 20_240_601,
            noise: 1.0,
            filament: ModelPotential::Zero,
            z_extent: 1e-3,
            z_steps: 200,
        };
        config.filament = gaussian_filament(constants, &config, 1e-6, 100e-6);
        config
    }

    pub fn validate(&self, constants: &PhysicalConstants) -> Result<()> {
        let lengths = [
            ("L", self.slit_to_screen),
            ("fringe_width_th", self.fringe_width_theoretical),
            ("fringe_width_exp", self.fringe_width_experimental),
            ("coherence", self.coherence_length),
            ("a", self.filament_half_gap),
            ("z_extent", self.z_extent),
            ("kz", self.k_z),
            ("vz", self.v_z),
        ];
        for (name, v) in lengths {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Configuration(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(d) = self.aperture_width {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Configuration(format!("aperture must be positive, got {d}")));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Configuration(format!("noise must be non-negative, got {}", self.noise)));
        }
        if self.z_steps == 0 || self.n_samples == 0 {
            return Err(Error::Configuration("z_steps and n must be at least 1".into()));
        }
        let implied = constants.hbar * self.k_z / constants.mass;
        if ((implied - self.v_z) / self.v_z).abs() > 1e-12 {
            return Err(Error::Configuration(format!("vz = {} disagrees with hbar kz / m = {implied}", self.v_z)));
        }
        Ok(())
    }

    /// `m e / (hbar^2 k_z)`, the phase per volt-metre.
    fn deflection_coefficient(&self, constants: &PhysicalConstants) -> f64 {
        constants.mass * constants.charge / (constants.hbar * constants.hbar * self.k_z)
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k_z
    }

    pub fn envelope(&self) -> FraunhoferEnvelope {
        let half_width = match self.aperture_width {
            Some(d) => self.wavelength() * self.slit_to_screen / d,
            None => self.coherence_length,
        };
        FraunhoferEnvelope { half_width, center: 0.0 }
    }

    /// `pi / fringe_width_theoretical`.
    pub fn nominal_k_x(&self) -> f64 {
        std::f64::consts::PI / self.fringe_width_theoretical
    }
}

/// Gaussian ridge `V0 exp(-x^2/w^2) exp(-z^2/l^2)` with `V0` chosen so the
/// deflection at `x = a` produces the configured plane-wave fringe spacing.
pub fn gaussian_filament(constants: &PhysicalConstants, config: &BiprismConfig, w: f64, l: f64) -> ModelPotential {
    let a = config.filament_half_gap;
    let per_volt = config.deflection_coefficient(constants)
        * (2.0 * a / (w * w))
        * (-(a * a) / (w * w)).exp()
        * std::f64::consts::PI.sqrt()
        * l;
    ModelPotential::Gaussian { v0: config.nominal_k_x() / per_volt, w, l }
}

const QUAD_PANELS: usize = 16;

/// `int_a^b f`, split into equal panels integrated by tanh-sinh.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let span = b - a;
    let scale = (0..=64).map(|j| f(a + span * j as f64 / 64.0).abs()).fold(0.0, f64::max) * span.abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    if !scale.is_finite() {
        return Err(Error::Tolerance("integrand is not finite".into()));
    }
    let target = 1e-13 * scale / QUAD_PANELS as f64;
    let mut total = 0.0;
    let mut error = 0.0;
    for p in 0..QUAD_PANELS {
        let lo = a + span * p as f64 / QUAD_PANELS as f64;
        let hi = if p + 1 == QUAD_PANELS { b } else { a + span * (p + 1) as f64 / QUAD_PANELS as f64 };
        let out = quadrature::integrate(&f, lo, hi, target);
        total += out.integral;
        error += out.error_estimate;
    }
    if !(error <= 1e-9 * scale) || !total.is_finite() {
        return Err(Error::Tolerance(format!("quadrature error estimate {error:e} against scale {scale:e}")));
    }
    Ok(total)
}

/// `exp i(k_z z - (m e / hbar^2 k_z) int_{-z_extent}^{z} V(x, z') dz')`.
pub fn deflected_wave(
    potential: &dyn PotentialField,
    constants: &PhysicalConstants,
    config: &BiprismConfig,
    x: f64,
    z: f64,
) -> Result<Complex64> {
    let integral = integrate(|zp| potential.value(x, zp), -config.z_extent, z)?;
    let phase = config.k_z * z - config.deflection_coefficient(constants) * integral;
    Ok(Complex64::from_polar(1.0, phase))
}

/// `k_x = -(m e / hbar^2 k_z) int dV/dx(a, z) dz` over the full z range.
pub fn transverse_wavenumber(
    potential: &dyn PotentialField,
    constants: &PhysicalConstants,
    config: &BiprismConfig,
) -> Result<f64> {
    let a = config.filament_half_gap;
    let integral = integrate(|z| potential.partial_x(a, z), -config.z_extent, config.z_extent)?;
    Ok(-config.deflection_coefficient(constants) * integral)
}

/// Transverse wavenumbers of the waves leaving the left and right sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePair {
    pub k_x_left: f64,
    pub k_x_right: f64,
}

impl WavePair {
    pub fn symmetric(k_x: f64) -> Self {
        Self { k_x_left: k_x, k_x_right: k_x }
    }

    /// `|exp(i k_L (x - a)) + exp(-i k_R (x + a))|^2`.
    pub fn intensity(&self, x: f64, half_gap: f64) -> f64 {
        let (kl, kr) = (self.k_x_left, self.k_x_right);
        2.0 + 2.0 * ((kl + kr) * x - (kl - kr) * half_gap).cos()
    }

    /// Where the diffraction envelope is centred on a screen `distance` away.
    pub fn envelope_center(&self, distance: f64, k_z: f64) -> f64 {
        distance * (self.k_x_left - self.k_x_right) / (2.0 * k_z)
    }
}

/// Interference intensity of the pair on the screen; `4 cos^2(k_x x)` for a
/// symmetric pair.
pub fn interference_intensity(pair: &WavePair, x: f64, half_gap: f64) -> f64 {
    pair.intensity(x, half_gap)
}

/// `sinc^2(pi (x - center) / half_width)`, first zeros at `center +- half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FraunhoferEnvelope {
    pub half_width: f64,
    pub center: f64,
}

impl FraunhoferEnvelope {
    pub fn value(&self, x: f64) -> f64 {
        if !self.half_width.is_finite() {
            return 1.0;
        }
        let u = std::f64::consts::PI * (x - self.center) / self.half_width;
        if u == 0.0 {
            1.0
        } else {
            let s = u.sin() / u;
            s * s
        }
    }

    pub fn shifted(&self, center: f64) -> Self {
        Self { center, ..*self }
    }

    pub fn full_width(&self) -> f64 {
        2.0 * self.half_width
    }

    /// Fringes of spacing `fringe_width` fitting between the first zeros.
    pub fn fringes_under(&self, fringe_width: f64) -> usize {
        (self.full_width() / fringe_width).round() as usize
    }
}

pub fn fraunhofer_envelope(config: &BiprismConfig, x: f64) -> f64 {
    config.envelope().value(x)
}

/// One impulse through a slab `dz` at field gradient `dv_dx` (volts/m):
/// `-e dV/dx (dt + (1/v_z) sqrt(hbar/2m) dW)` with `dt = dz / v_z`.
pub fn sample_fluctuating_impulse<S: NormalSource + ?Sized>(
    dv_dx: f64,
    constants: &PhysicalConstants,
    config: &BiprismConfig,
    dz: f64,
    stream: &mut S,
) -> Result<ImpulseSample> {
    let dt = dz / config.v_z;
    let dw = sample_wiener_increment(dt, stream)?;
    real_time_impulse(constants.charge * dv_dx, constants, VelocityParam::new(config.v_z)?, &dw, dt)
}

/// Draws `(k_x(L), k_x(R))` by accumulating fluctuating impulses through the
/// filament field on each side.
///
/// The raw Brownian impulse is rescaled by `gain` so that each wavenumber has
/// standard deviation `noise * sqrt(2) k_z sigma / L`; with that spread the
/// envelope centre `L (k_L - k_R) / 2 k_z` has standard deviation
/// `noise * sigma`, sigma being the transit-time spread.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePairSampler {
    left_gradient: Vec<f64>,
    right_gradient: Vec<f64>,
    dz: f64,
    gain: f64,
    target_sd: f64,
}

impl WavePairSampler {
    pub fn new(constants: &PhysicalConstants, config: &BiprismConfig) -> Result<Self> {
        config.validate(constants)?;
        let a = config.filament_half_gap;
        let dz = 2.0 * config.z_extent / config.z_steps as f64;
        let nodes: Vec<f64> = (0..config.z_steps).map(|k| -config.z_extent + (k as f64 + 0.5) * dz).collect();
        let left_gradient: Vec<f64> = nodes.iter().map(|&z| config.filament.partial_x(a, z)).collect();
        let right_gradient: Vec<f64> = nodes.iter().map(|&z| config.filament.partial_x(-a, z)).collect();

        let dt = dz / config.v_z;
        let raw_sd = constants.charge / config.v_z
            * (constants.hbar / (2.0 * constants.mass)).sqrt()
            * (left_gradient.iter().map(|g| g * g * dt).sum::<f64>()).sqrt();
        let sigma = spread_sigma(constants, config);
        let target_sd = config.noise * std::f64::consts::SQRT_2 * config.k_z * sigma / config.slit_to_screen;
        let gain = if raw_sd > 0.0 { target_sd * constants.hbar / raw_sd } else { 0.0 };
        if target_sd > 0.0 && gain == 0.0 {
            return Err(Error::Configuration("filament has no transverse field at x = a; cannot scale noise".into()));
        }
        Ok(Self { left_gradient, right_gradient, dz, gain, target_sd })
    }

    /// Standard deviation of each sampled wavenumber.
    pub fn wavenumber_sd(&self) -> f64 {
        self.target_sd
    }

    pub fn sample<S: NormalSource + ?Sized>(
        &self,
        constants: &PhysicalConstants,
        config: &BiprismConfig,
        stream: &mut S,
    ) -> Result<WavePair> {
        let mut side = |gradient: &[f64]| -> Result<f64> {
            let (mut det, mut fl) = (0.0, 0.0);
            for &g in gradient {
                let p = sample_fluctuating_impulse(g, constants, config, self.dz, stream)?;
                det += p.deterministic_part;
                fl += p.fluctuating_part;
            }
            Ok((det + self.gain * fl) / constants.hbar)
        };
        let k_x_left = side(&self.left_gradient)?;
        // the right wave leaves with transverse wavevector -k_R
        let k_x_right = -side(&self.right_gradient)?;
        Ok(WavePair { k_x_left, k_x_right })
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Argmax over the screen of `envelope(x - x_env) * I(x)`.
///
/// A grid at `10^-3` of the fringe period scans two periods either side of
/// the envelope centre, where the brightest fringe must lie, and the best
/// node is refined by golden-section search. The refined point replaces the
/// node only if it is strictly brighter.
pub fn bright_spot_position(pair: &WavePair, config: &BiprismConfig, envelope: &FraunhoferEnvelope) -> Result<f64> {
    let a = config.filament_half_gap;
    let centre = pair.envelope_center(config.slit_to_screen, config.k_z);
    let env = envelope.shifted(envelope.center + centre);
    let sum = (pair.k_x_left + pair.k_x_right).abs();
    if !(sum.is_finite() && env.center.is_finite()) {
        return Err(Error::Domain("non-finite wavenumbers".into()));
    }
    if sum == 0.0 {
        if !env.half_width.is_finite() {
            return Err(Error::AmbiguousPeak);
        }
        return Ok(env.center);
    }
    let period = 2.0 * std::f64::consts::PI / sum;
    let h = 1e-3 * period;
    let steps = 2000i64;
    let f = |x: f64| env.value(x) * pair.intensity(x, a);

    let (mut best_x, mut best) = (env.center, f64::NEG_INFINITY);
    let mut lowest = f64::INFINITY;
    for j in -steps..=steps {
        let x = env.center + j as f64 * h;
        let v = f(x);
        lowest = lowest.min(v);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    if best - lowest <= 0.0 {
        return Err(Error::AmbiguousPeak);
    }

    let (mut lo, mut hi) = (best_x - h, best_x + h);
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-10 * h {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        }
    }
    let refined = 0.5 * (lo + hi);
    Ok(if f(refined) > best { refined } else { best_x })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightSpot {
    pub position: f64,
    pub pair: WavePair,
}

pub fn sample_bright_spot<S: NormalSource + ?Sized>(
    constants: &PhysicalConstants,
    config: &BiprismConfig,
    sampler: &WavePairSampler,
    envelope: &FraunhoferEnvelope,
    stream: &mut S,
) -> Result<BrightSpot> {
    let pair = sampler.sample(constants, config, stream)?;
    Ok(BrightSpot { position: bright_spot_position(&pair, config, envelope)?, pair })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub center: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeStatistics {
    pub peak_positions: Vec<f64>,
    pub sigma_estimate: f64,
    /// `2 sigma`
    pub spread_range: f64,
    pub fringe_count: usize,
    pub histogram: Vec<HistogramBin>,
}

/// Transit-time peak spread `sqrt(hbar/2m) sqrt(L / v_z)`, metres.
pub fn spread_sigma(constants: &PhysicalConstants, config: &BiprismConfig) -> f64 {
    let transit = config.slit_to_screen / config.v_z;
    (constants.hbar / (2.0 * constants.mass)).sqrt() * transit.sqrt()
}

/// `sigma`, the `2 sigma` range and how many plane-wave fringes it spans.
pub fn estimate_fringe_count(constants: &PhysicalConstants, config: &BiprismConfig) -> FringeStatistics {
    let sigma = spread_sigma(constants, config);
    let range = 2.0 * sigma;
    FringeStatistics {
        peak_positions: Vec::new(),
        sigma_estimate: sigma,
        spread_range: range,
        fringe_count: ((range / config.fringe_width_theoretical).floor() as usize).max(1),
        histogram: Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeDistribution {
    pub stats: FringeStatistics,
    /// `noise * sigma`
    pub sigma_predicted: f64,
    /// fraction of peaks with `|x| <= sigma_predicted`
    pub fraction_within_sigma: f64,
    /// centre of the most populated bin of a `sigma_predicted`-wide histogram
    pub mode_bin_center: f64,
    pub ks_statistic: f64,
    pub ks_critical_1pct: f64,
    /// fringe bins holding at least one peak
    pub occupied_bins: usize,
    pub fringe_count_spread: usize,
    pub fringe_count_probwave: usize,
    pub warnings: Vec<String>,
}

/// Samples `n` bright spots, substream `i` for sample `i`, and bins them in
/// fringe-wide bins centred on multiples of the plane-wave fringe spacing.
///
/// `stats.fringe_count` is the number of fringes spanned by the central
/// 68.27% of peaks (at least 1).
pub fn monte_carlo_fringe_distribution(
    constants: &PhysicalConstants,
    config: &BiprismConfig,
    n_samples: usize,
    seed: u64,
) -> Result<FringeDistribution> {
    let mut warnings = Vec::new();
    if n_samples < 100 {
        let w = format!("insufficient statistics: n = {n_samples} < 100");
        log::warn!("{w}");
        warnings.push(w);
    }
    if n_samples == 0 {
        return Err(Error::Configuration("n must be at least 1".into()));
    }
    let sampler = WavePairSampler::new(constants, config)?;
    let envelope = config.envelope();
    let peaks: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(seed, i);
            sample_bright_spot(constants, config, &sampler, &envelope, &mut stream).map(|s| s.position)
        })
        .collect::<Result<_>>()?;

    let width = config.fringe_width_theoretical;
    let histogram = bin(&peaks, width);
    let occupied_bins = histogram.iter().filter(|b| b.count > 0).count();

    let mut sorted = peaks.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| sorted[((p * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1)];
    let central = q(0.841_344_746) - q(0.158_655_254);
    let fringe_count = ((central / width).round() as usize).max(1);

    let moments = Moments::of(&peaks);
    let sigma_predicted = config.noise * spread_sigma(constants, config);
    let within = peaks.iter().filter(|x| x.abs() <= sigma_predicted).count();
    let mode_width = sigma_predicted.max(width);
    let coarse = bin(&peaks, mode_width);
    let mode_bin_center =
        coarse.iter().fold((0.0, 0usize), |(c, n), b| if b.count > n { (b.center, b.count) } else { (c, n) }).0;
    let sd = moments.std_dev();
    let ks_statistic = if sd > 0.0 { ks_statistic_normal(&peaks, 0.0, sd) } else { 0.0 };

    Ok(FringeDistribution {
        sigma_predicted,
        fraction_within_sigma: within as f64 / n_samples as f64,
        mode_bin_center,
        ks_statistic,
        ks_critical_1pct: ks_critical_1pct(n_samples),
        occupied_bins,
        fringe_count_spread: estimate_fringe_count(constants, config).fringe_count,
        fringe_count_probwave: envelope.fringes_under(config.fringe_width_experimental),
        warnings,
        stats: FringeStatistics {
            sigma_estimate: sd,
            spread_range: 2.0 * sd,
            fringe_count,
            histogram,
            peak_positions: peaks,
        },
    })
}

/// Counts in bins `[(j - 1/2) w, (j + 1/2) w)` from the lowest to the highest occupied `j`.
fn bin(xs: &[f64], width: f64) -> Vec<HistogramBin> {
    let index = |x: f64| (x / width).round() as i64;
    let lo = xs.iter().map(|&x| index(x)).min().unwrap_or(0);
    let hi = xs.iter().map(|&x| index(x)).max().unwrap_or(0);
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &x in xs {
        counts[(index(x) - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(j, count)| HistogramBin { center: (lo + j as i64) as f64 * width, count })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic_core::ForcedDraws;
    use approx::assert_relative_eq;

    fn electron() -> PhysicalConstants {
        PhysicalConstants::electron_si()
    }

    #[test]
    fn reference_config_is_consistent() {
        let c = electron();
        let cfg = BiprismConfig::reference(&c);
        cfg.validate(&c).unwrap();
        let bad = BiprismConfig { v_z: 1.31e8, ..cfg };
        assert!(bad.validate(&c).is_err());
        let bad = BiprismConfig { coherence_length: -1.0, ..cfg };
        assert!(bad.validate(&c).is_err());
    }

    #[test]
    fn free_wave_is_plane() {
        let c = electron();
        let cfg = BiprismConfig::reference(&c);
        let z = 3.7e-4;
        let w = deflected_wave(&ModelPotential::Zero, &c, &cfg, 1e-6, z).unwrap();
        assert_relative_eq!(w.norm(), 1.0, max_relative = 1e-15);
        let expected = Complex64::from_polar(1.0, cfg.k_z * z);
        assert!((w - expected).norm() < 1e-12);
    }

    #[test]
    fn deflected_wave_is_unimodular() {
        let c = electron();
        let cfg = BiprismConfig::reference(&c);
        for (x, z) in [(0.0, 0.0), (3e-7, -2e-4), (-1e-6, 9e-4)] {
            let w = deflected_wave(&cfg.filament, &c, &cfg, x, z).unwrap();
            assert_relative_eq!(w.norm(), 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn x_independent_potential_has_no_kx() {
        let c = electron();
        let cfg = BiprismConfig::reference(&c);
        assert_eq!(transverse_wavenumber(&ModelPotential::Constant { v0: 3.0 }, &c, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn kx_is_linear_in_charge() {
        let c = electron();
        let cfg = BiprismConfig::reference(&c);
        let k1 = transverse_wavenumber(&cfg.filament, &c, &cfg).unwrap();
        let c2 = PhysicalConstants { charge: 2.0 * c.charge, ..c };
        let k2 = transverse_wavenumber(&cfg.filament, &c2, &cfg).unwrap();
        assert_relative_eq!(k2, 2.0 * k1, max_relative = 1e-14);
    }

    #[test]
    fn calibrated_filament_gives_nominal_fringes() {
        let c = electron();
        let cfg = BiprismConfig::reference(&c);
        let k = transverse_wavenumber(&cfg.filament, &c, &cfg).unwrap();
        assert_relative_eq!(k, cfg.nominal_k_x(), max_relative = 1e-9);
    }

    #[test]
    fn symmetric_intensity() {
        let pair = WavePair::symmetric(1.0);
        assert_eq!(pair.intensity(0.0, 0.3), 4.0);
        assert_eq!(pair.intensity(std::f64::consts::FRAC_PI_2, 0.3), 0.0);
        for x in [0.1, 0.7, 2.5] {
            assert_eq!(pair.intensity(x, 0.3), pair.intensity(-x, 0.3));
            assert_relative_eq!(pair.intensity(x, 0.3), 4.0 * x.cos().powi(2), max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn envelope_shape() {
        let c = electron();
        let cfg = BiprismConfig::reference(&c);
        assert_eq!(fraunhofer_envelope(&cfg, 0.0), 1.0);
        for x in [1e-6, 3.3e-5, 1.2e-4] {
            assert_eq!(fraunhofer_envelope(&cfg, x), fraunhofer_envelope(&cfg, -x));
        }
        assert!(fraunhofer_envelope(&cfg, 140e-6) < 1e-20);
        assert_eq!(cfg.envelope().fringes_under(cfg.fringe_width_experimental), 400);
        let with_aperture = BiprismConfig { aperture_width: Some(cfg.wavelength() * 1.5 / 70e-6), ..cfg };
        assert_relative_eq!(with_aperture.envelope().half_width, 70e-6, max_relative = 1e-12);
    }

    #[test]
    fn impulse_parts() {
        let c = electron();
        let cfg = BiprismConfig::reference(&c);
        let dz = 1e-5;
        let p = sample_fluctuating_impulse(0.0, &c, &cfg, dz, &mut ForcedDraws::constant(1.2)).unwrap();
        assert_eq!(p.p_y, 0.0);
        let p = sample_fluctuating_impulse(2.5e4, &c, &cfg, dz, &mut ForcedDraws::constant(0.0)).unwrap();
        assert_relative_eq!(p.p_y, -c.charge * 2.5e4 * dz / cfg.v_z, max_relative = 1e-14);
    }

    #[test]
    fn bright_spot_follows_larger_wavenumber() {
        let c = electron();
        let cfg = BiprismConfig::reference(&c);
        let env = cfg.envelope();
        let k = cfg.nominal_k_x();
        assert_eq!(bright_spot_position(&WavePair::symmetric(k), &cfg, &env).unwrap(), 0.0);
        let left = bright_spot_position(&WavePair { k_x_left: k, k_x_right: 1.01 * k }, &cfg, &env).unwrap();
        assert!(left < 0.0);
        let right = bright_spot_position(&WavePair { k_x_left: 1.01 * k, k_x_right: k }, &cfg, &env).unwrap();
        assert!(right > 0.0);
    }

    #[test]
    fn flat_screen_is_ambiguous() {
        let c = electron();
        let cfg = BiprismConfig::reference(&c);
        let flat = FraunhoferEnvelope { half_width: f64::INFINITY, center: 0.0 };
        assert_eq!(bright_spot_position(&WavePair::symmetric(0.0), &cfg, &flat), Err(Error::AmbiguousPeak));
    }

    #[test]
    fn spread_estimate() {
        let c = electron();
        let cfg = BiprismConfig::reference(&c);
        let s = estimate_fringe_count(&c, &cfg);
        assert!((0.81e-6..=0.83e-6).contains(&s.sigma_estimate), "{}", s.sigma_estimate);
        assert_eq!(s.fringe_count, 18);
        let fast = BiprismConfig { v_z: 4.0 * cfg.v_z, k_z: 4.0 * cfg.k_z, ..cfg };
        assert_relative_eq!(spread_sigma(&c, &fast), 0.5 * s.sigma_estimate, max_relative = 1e-14);
    }

    #[test]
    fn zero_noise_pins_every_peak() {
        let c = electron();
        let cfg = BiprismConfig { noise: 0.0, ..BiprismConfig::reference(&c) };
        let d = monte_carlo_fringe_distribution(&c, &cfg, 200, 1).unwrap();
        assert!(d.stats.peak_positions.iter().all(|&x| x == 0.0));
        assert_eq!(d.stats.fringe_count, 1);
        assert_eq!(d.occupied_bins, 1);
        assert!(d.warnings.is_empty());
        let d = monte_carlo_fringe_distribution(&c, &cfg, 10, 1).unwrap();
        assert_eq!(d.warnings.len(), 1);
    }
}
