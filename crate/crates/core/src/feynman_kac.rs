//! Euclidean path integrals under `dx = sqrt(hbar/m) dW`.
//!
//! After the Wick rotation the Schrödinger equation becomes the diffusion
//! equation
//!
//! ```text
//! dpsi/dt = (hbar/2m) d2psi/dx2 - (V/hbar) psi
//! ```
//!
//! whose solution is the Feynman–Kac expectation
//! `psi(x, t1) = E[exp(-(1/hbar) int V dt) psi0(X_end)]` over Brownian paths
//! with variance rate `hbar/m` launched from `x` and run back to `t0`.
//! Paths are simulated forward in Euclidean time with `dt > 0`; the conjugate
//! increment `dW* = sqrt(-dt) xi` of the rotated clock is the same real
//! number, and [`PathRealization::conjugate_increments`] recovers the
//! `dt < 0` bookkeeping when it is needed. The Gaussian kernel is symmetric
//! under the reversal, so the expectation does not depend on the direction.
//!
//! The averaging measure is the normalised Gaussian path measure; the
//! constant `sqrt(m / 2 pi hbar dt)` of the kinetic kernel is absorbed into it.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialField;
use crate::stats::{ComplexMoments, Moments};
use crate::stochastic_core::{sample_wiener_increment, NormalSource, RngStream, WienerIncrement};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// J s
    pub hbar: f64,
    /// kg
    pub mass: f64,
    /// elementary charge magnitude, C
    pub charge: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64, charge: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("mass", mass), ("charge", charge)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Configuration(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { hbar, mass, charge })
    }

    /// `hbar = m = e = 1`.
    pub fn natural() -> Self {
        Self { hbar: 1.0, mass: 1.0, charge: 1.0 }
    }

    /// Electron in SI units with `hbar = 1.0546e-34 J s`, `m = 9.109e-31 kg`.
    pub fn electron_si() -> Self {
        Self { hbar: 1.0546e-34, mass: 9.109e-31, charge: 1.602_176_634e-19 }
    }

    /// `sqrt(hbar/m)`: the diffusion coefficient of the path measure.
    pub fn path_sigma(&self) -> f64 {
        (self.hbar / self.mass).sqrt()
    }

    /// `hbar / 2m`: the diffusivity of the Euclidean equation.
    pub fn diffusivity(&self) -> f64 {
        self.hbar / (2.0 * self.mass)
    }
}

/// One Brownian trajectory with `x_{k+1} - x_k = sqrt(hbar/m) dW_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRealization {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub increments: Vec<WienerIncrement>,
    /// `exp(-(1/hbar) sum V(x_k, t_k) dt)`; 1 until [`Self::weigh`] is called.
    pub weight: f64,
    pub substream_index: u64,
}

impl PathRealization {
    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn endpoint(&self) -> f64 {
        *self.positions.last().expect("path has at least one point")
    }

    /// The increments re-expressed as conjugate increments `dW*` with `dt < 0`.
    pub fn conjugate_increments(&self) -> Vec<WienerIncrement> {
        self.increments.iter().map(|w| if w.conjugate { *w } else { w.flipped() }).collect()
    }

    /// Accumulate the Euclidean potential weight along the path, left-endpoint rule.
    pub fn weigh(&mut self, constants: &PhysicalConstants, potential: &dyn PotentialField) -> Result<f64> {
        let mut action = 0.0;
        for k in 0..self.n_steps() {
            action += potential.value(self.positions[k], self.times[k]) * self.increments[k].elapsed();
        }
        let weight = (-action / constants.hbar).exp();
        if !weight.is_finite() {
            return Err(Error::Divergence { path: self.substream_index });
        }
        self.weight = weight;
        Ok(weight)
    }
}

fn check_span(t0: f64, t1: f64, n_steps: usize) -> Result<f64> {
    if n_steps == 0 {
        return Err(Error::EmptyPath);
    }
    if !(t1 > t0) {
        return Err(Error::Configuration(format!("need t1 > t0, got t0 = {t0}, t1 = {t1}")));
    }
    Ok((t1 - t0) / n_steps as f64)
}

pub fn sample_path<S: NormalSource + ?Sized>(
    constants: &PhysicalConstants,
    t0: f64,
    t1: f64,
    n_steps: usize,
    stream: &mut S,
    x0: f64,
) -> Result<PathRealization> {
    let dt = check_span(t0, t1, n_steps)?;
    let sigma = constants.path_sigma();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut positions = Vec::with_capacity(n_steps + 1);
    let mut increments = Vec::with_capacity(n_steps);
    times.push(t0);
    positions.push(x0);
    let mut x = x0;
    for k in 0..n_steps {
        let dw = sample_wiener_increment(dt, stream)?;
        x += sigma * dw.value;
        increments.push(dw);
        positions.push(x);
        times.push(if k + 1 == n_steps { t1 } else { t0 + (k + 1) as f64 * dt });
    }
    Ok(PathRealization { times, positions, increments, weight: 1.0, substream_index: stream.substream_index() })
}

/// Ensemble settings shared by the Monte Carlo estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSettings {
    pub t0: f64,
    pub t1: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
}

/// Monte Carlo estimate with its standard error.
pub type McEstimate = ComplexMoments;

/// `E[exp(-(1/hbar) int V dt) psi0(X_end)]` over paths launched from `x_target`.
///
/// Path `i` draws from `RngStream::new(seed, i)`; `V` is read at the left end
/// of each step with the clock running back from `t1` to `t0`.
pub fn feynman_kac_expectation(
    constants: &PhysicalConstants,
    potential: &dyn PotentialField,
    psi0: &(dyn Fn(f64) -> Complex64 + Sync),
    x_target: f64,
    settings: &EnsembleSettings,
) -> Result<McEstimate> {
    let dt = check_span(settings.t0, settings.t1, settings.n_steps)?;
    let sigma = constants.path_sigma();
    let samples: Vec<Complex64> = (0..settings.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(settings.seed, i);
            let mut x = x_target;
            let mut action = 0.0;
            for k in 0..settings.n_steps {
                let clock = settings.t1 - k as f64 * dt;
                action += potential.value(x, clock) * dt;
                x += sigma * sample_wiener_increment(dt, &mut stream)?.value;
            }
            let weight = (-action / constants.hbar).exp();
            let value = weight * psi0(x);
            if !(weight.is_finite() && value.re.is_finite() && value.im.is_finite()) {
                return Err(Error::Divergence { path: i });
            }
            Ok(value)
        })
        .collect::<Result<_>>()?;
    Ok(ComplexMoments::of(&samples))
}

/// Uniform mesh with `n_points` nodes on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub end: f64,
    pub n_points: usize,
}

impl UniformGrid {
    pub fn new(start: f64, end: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 || !(end > start) {
            return Err(Error::Configuration(format!(
                "grid needs end > start and at least 2 points, got [{start}, {end}] with {n_points}"
            )));
        }
        Ok(Self { start, end, n_points })
    }

    pub fn spacing(&self) -> f64 {
        (self.end - self.start) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.end
        } else {
            self.start + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }
}

/// Explicit solution of the Euclidean equation; `values[[n, i]]` is psi at
/// `t_grid.point(n)`, `x_grid.point(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub x_grid: UniformGrid,
    pub t_grid: UniformGrid,
    pub values: Array2<f64>,
}

impl GridSolution {
    pub fn final_row(&self) -> Vec<f64> {
        self.values.row(self.t_grid.n_points - 1).to_vec()
    }

    /// Linear interpolation in x of the row at time index `n`.
    pub fn interpolate(&self, n: usize, x: f64) -> Result<f64> {
        let g = &self.x_grid;
        if !(x >= g.start && x <= g.end) {
            return Err(Error::Domain(format!("x = {x} outside [{}, {}]", g.start, g.end)));
        }
        let pos = (x - g.start) / g.spacing();
        let i = (pos.floor() as usize).min(g.n_points - 2);
        let frac = pos - i as f64;
        let row = self.values.row(n);
        Ok(row[i] * (1.0 - frac) + row[i + 1] * frac)
    }

    pub fn interpolate_final(&self, x: f64) -> Result<f64> {
        self.interpolate(self.t_grid.n_points - 1, x)
    }
}

/// Forward-time, central-space solver for `dpsi/dt = (hbar/2m) psi_xx - (V/hbar) psi`
/// with zero Dirichlet boundaries.
///
/// Each step applies the explicit diffusion update and then the exact
/// potential factor `exp(-V dt / hbar)` node by node, so a constant potential
/// factors out of the free solution to rounding.
pub fn solve_euclidean_pde(
    constants: &PhysicalConstants,
    potential: &dyn PotentialField,
    psi0: &dyn Fn(f64) -> f64,
    x_grid: UniformGrid,
    t_grid: UniformGrid,
) -> Result<GridSolution> {
    let dx = x_grid.spacing();
    let dt = t_grid.spacing();
    let ratio = constants.diffusivity() * dt / (dx * dx);
    if ratio > 0.5 {
        return Err(Error::Stability { ratio });
    }

    let nx = x_grid.n_points;
    let xs = x_grid.points();
    let initial: Vec<f64> = xs.iter().map(|&x| psi0(x)).collect();
    let peak = initial.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = initial[0].abs().max(initial[nx - 1].abs());
    if edge > 1e-8 * peak {
        return Err(Error::Configuration(format!(
            "initial data at the boundary ({edge:e}) exceeds 1e-8 of its peak ({peak:e}); widen the x grid"
        )));
    }

    let mut values = Array2::<f64>::zeros((t_grid.n_points, nx));
    let mut current = initial;
    current[0] = 0.0;
    current[nx - 1] = 0.0;
    values.row_mut(0).assign(&ndarray::ArrayView1::from(&current));
    let mut next = vec![0.0; nx];
    for n in 1..t_grid.n_points {
        let clock = t_grid.point(n - 1);
        for i in 1..nx - 1 {
            let diffused = current[i] + ratio * (current[i + 1] - 2.0 * current[i] + current[i - 1]);
            next[i] = diffused * (-potential.value(xs[i], clock) * dt / constants.hbar).exp();
        }
        std::mem::swap(&mut current, &mut next);
        values.row_mut(n).assign(&ndarray::ArrayView1::from(&current));
    }
    Ok(GridSolution { x_grid, t_grid, values })
}

/// Density of `x - x0` for `dx = mu dt + sigma dW` over one step.
pub fn normal_increment_density(displacement: f64, drift: f64, sigma: f64, dt: f64) -> f64 {
    let var = sigma * sigma * dt;
    let d = displacement - drift * dt;
    (-(d * d) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Euclidean kinetic kernel `sqrt(m / 2 pi hbar dt) exp(-(1/hbar) (1/2) m dx^2 / dt)`.
pub fn kinetic_energy_kernel(constants: &PhysicalConstants, displacement: f64, dt: f64) -> f64 {
    let PhysicalConstants { hbar, mass, .. } = *constants;
    (mass / (2.0 * std::f64::consts::PI * hbar * dt)).sqrt()
        * (-(0.5 * mass * displacement * displacement / dt) / hbar).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrespondencePoint {
    pub displacement: f64,
    pub normal_density: f64,
    pub kinetic_kernel: f64,
    pub relative_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceReport {
    pub sigma: f64,
    pub dt: f64,
    pub points: Vec<CorrespondencePoint>,
    pub max_relative_discrepancy: f64,
}

impl CorrespondenceReport {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn passed(&self) -> bool {
        self.max_relative_discrepancy <= Self::TOLERANCE
    }
}

/// Compare the normal step density with `sigma = sqrt(hbar/m)`, `mu = 0`
/// against the kinetic kernel on 81 displacements spanning `+-6 sigma sqrt(dt)`.
pub fn normal_correspondence_check(constants: &PhysicalConstants, dt: f64) -> Result<CorrespondenceReport> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let sigma = constants.path_sigma();
    let spread = sigma * dt.sqrt();
    let points: Vec<CorrespondencePoint> = (-40..=40)
        .map(|j| {
            let displacement = spread * 6.0 * j as f64 / 40.0;
            let normal_density = normal_increment_density(displacement, 0.0, sigma, dt);
            let kinetic_kernel = kinetic_energy_kernel(constants, displacement, dt);
            CorrespondencePoint {
                displacement,
                normal_density,
                kinetic_kernel,
                relative_discrepancy: (normal_density - kinetic_kernel).abs() / normal_density.abs(),
            }
        })
        .collect();
    let max_relative_discrepancy = points.iter().map(|p| p.relative_discrepancy).fold(0.0, f64::max);
    Ok(CorrespondenceReport { sigma, dt, points, max_relative_discrepancy })
}

/// `Delta x Delta p` with `Delta x = sqrt(hbar dt / m)` and `Delta p = sqrt(hbar m / dt)`.
pub fn uncertainty_product(constants: &PhysicalConstants, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let dx = (constants.hbar * dt / constants.mass).sqrt();
    let dp = (constants.hbar * constants.mass / dt).sqrt();
    Ok(dx * dp)
}

/// As [`uncertainty_product`], with `Delta x` replaced by the sample standard
/// deviation of `n` simulated position increments.
pub fn sampled_uncertainty_product(constants: &PhysicalConstants, dt: f64, n: usize, seed: u64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let sigma = constants.path_sigma();
    let mut stream = RngStream::new(seed, 0);
    let steps: Vec<f64> =
        (0..n).map(|_| sample_wiener_increment(dt, &mut stream).map(|w| sigma * w.value)).collect::<Result<_>>()?;
    let dp = (constants.hbar * constants.mass / dt).sqrt();
    Ok(Moments::of(&steps).std_dev() * dp)
}
