//! Fluctuating solutions of the Euclidean and real-time wave equations.
//!
//! Along a Brownian path the Euclidean amplitude obeys the linear SDE
//!
//! ```text
//! dpsi = -(V/hbar) psi dt + (dpsi/dx) sqrt(hbar/m) dW*
//! ```
//!
//! solved by variation of constants:
//!
//! ```text
//! psi(t) = exp(-(1/hbar) int_t0^t V) psi0                                   (clause 1)
//!        + int_t0^t exp(-(1/hbar) int_u^t V) (dpsi/dx)(u) sqrt(hbar/m) dW*(u)  (clause 2)
//! ```
//!
//! The real-time solution replaces `1/hbar` by `i/hbar` in the exponents and
//! multiplies clause 2 by `exp(-i pi/4)`.
//!
//! # Path orientation
//!
//! A path is read backward from the evaluation point `(x, t)`, as in the
//! Feynman–Kac estimator: node `k` sits at clock `t - k dt` and
//! `A_k = (1/hbar) sum_{j<k} V_j dt` accumulates from the evaluation point, so
//! the discount `exp(-(1/hbar) int_u^t V)` at node `k` is `exp(-A_k)`. Then
//!
//! ```text
//! clause 1 = exp(-A_n) psi0(x_n)
//! clause 2 = sum_{k<n} exp(-A_k) g_k sqrt(hbar/m) dW*_k
//! ```
//!
//! and every factor of the `k`-th term is fixed before `dW*_k` is drawn.
//! Clause 2 is therefore a mean-zero Itô sum for any potential and
//! `E[psi] = E[clause 1]`, the Feynman–Kac expectation.
//!
//! # The gradient along a path
//!
//! `dpsi/dx` is not defined for a single trajectory. [`GradientClosure`]
//! offers explicit values, a function of time, or the potential closure
//! `dpsi/dx = -(V/hbar)(dt/dx) psi` with `dt/dx = 1/v_x`, read path-wise with
//! the running amplitude (in an ensemble, with the initial data read at the
//! path's current position). In real time the closure picks up the factor `i`
//! (`-(i V / hbar v_x) psi`), which makes the linearised real-time
//! multiplicative step agree with clause 2.
//!
//! The real-time multiplicative step and the real-time impulse use
//! `sqrt(hbar/2m)`, the Euclidean ones `sqrt(hbar/m)`: `sqrt(-i) = (1 - i)/sqrt 2`
//! splits the rotated noise into equal real and imaginary parts.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feynman_kac::{
    feynman_kac_expectation, sample_path, EnsembleSettings, McEstimate, PathRealization, PhysicalConstants,
};
use crate::potential::PotentialField;
use crate::stats::ComplexMoments;
use crate::stochastic_core::{substream_seed, RngStream, WienerIncrement};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `exp(-i pi / 4)`.
pub fn eighth_turn() -> Complex64 {
    Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)
}

/// Beam velocity standing in for `dx/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityParam {
    v_x: f64,
}

impl VelocityParam {
    pub fn new(v_x: f64) -> Result<Self> {
        if v_x == 0.0 || !v_x.is_finite() {
            return Err(Error::Configuration(format!("beam velocity must be non-zero and finite, got {v_x}")));
        }
        Ok(Self { v_x })
    }

    pub fn v_x(&self) -> f64 {
        self.v_x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpulseSample {
    pub p_y: f64,
    pub deterministic_part: f64,
    pub fluctuating_part: f64,
}

impl ImpulseSample {
    fn from_parts(deterministic_part: f64, fluctuating_part: f64) -> Self {
        Self { p_y: deterministic_part + fluctuating_part, deterministic_part, fluctuating_part }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Euclidean,
    RealTime,
}

/// How `dpsi/dx` is obtained along a path.
#[derive(Clone, Copy)]
pub enum GradientClosure<'a> {
    /// One value per step, read at the step's left end.
    Samples(&'a [Complex64]),
    /// A function of the path clock.
    Function(&'a (dyn Fn(f64) -> Complex64 + Sync)),
    /// `-(V / hbar v_x) psi`, times `i` in real time.
    Potential(VelocityParam),
}

impl GradientClosure<'_> {
    fn check(&self, n_steps: usize) -> Result<()> {
        match self {
            Self::Samples(s) if s.len() != n_steps => {
                Err(Error::Configuration(format!("gradient has {} samples but the path has {n_steps} steps", s.len())))
            }
            _ => Ok(()),
        }
    }

    fn at(&self, k: usize, t: f64, v: f64, psi: Complex64, constants: &PhysicalConstants, branch: Branch) -> Complex64 {
        match *self {
            Self::Samples(s) => s[k],
            Self::Function(f) => f(t),
            Self::Potential(vel) => {
                let g = -(v / (constants.hbar * vel.v_x())) * psi;
                match branch {
                    Branch::Euclidean => g,
                    Branch::RealTime => I * g,
                }
            }
        }
    }
}

/// One Euler–Maruyama step of the Euclidean amplitude SDE.
///
/// The conjugate increment carries `dt < 0`; the drift uses the elapsed
/// Euclidean time `|dt|`.
pub fn euclidean_sde_step(
    psi: Complex64,
    dpsi_dx: Complex64,
    v: f64,
    constants: &PhysicalConstants,
    dw_star: &WienerIncrement,
) -> Result<Complex64> {
    if !dw_star.conjugate {
        return Err(Error::Configuration("the Euclidean step needs a conjugate increment (dt < 0)".into()));
    }
    let next =
        psi + (-(v / constants.hbar) * psi * dw_star.elapsed() + dpsi_dx * constants.path_sigma() * dw_star.value);
    if !(next.re.is_finite() && next.im.is_finite()) {
        return Err(Error::NumericDomain { what: "psi", x: v, t: dw_star.dt });
    }
    Ok(next)
}

/// `psi = clause1 + clause2` at the end of a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuatingSolutionSample {
    pub psi: Complex64,
    pub clause1: Complex64,
    pub clause2: Complex64,
    pub path_index: u64,
}

/// The clauses at every node of a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuatingTrajectory {
    pub path_index: u64,
    pub branch: Branch,
    pub times: Vec<f64>,
    pub clause1: Vec<Complex64>,
    pub clause2: Vec<Complex64>,
}

impl FluctuatingTrajectory {
    pub fn psi(&self, k: usize) -> Complex64 {
        self.clause1[k] + self.clause2[k]
    }

    pub fn final_sample(&self) -> FluctuatingSolutionSample {
        let k = self.times.len() - 1;
        FluctuatingSolutionSample {
            psi: self.psi(k),
            clause1: self.clause1[k],
            clause2: self.clause2[k],
            path_index: self.path_index,
        }
    }
}

/// Clause-by-clause integration along `path`, read backward from its start
/// (see the module docs). `times[k]` is the clock at node `k`.
pub fn fluctuating_trajectory(
    constants: &PhysicalConstants,
    potential: &dyn PotentialField,
    psi0: Complex64,
    closure: GradientClosure<'_>,
    path: &PathRealization,
    branch: Branch,
) -> Result<FluctuatingTrajectory> {
    integrate_clauses(constants, potential, psi0, None, closure, path, branch)
}

/// As [`fluctuating_trajectory`]. When `local` is given, the potential
/// closure reads the running amplitude as `exp(-A_k) local(x_k) + c2_k`
/// instead of `c1_k + c2_k`: with `psi0` taken at the far end of the path,
/// `c1_k` depends on increments not yet drawn.
fn integrate_clauses(
    constants: &PhysicalConstants,
    potential: &dyn PotentialField,
    psi0: Complex64,
    local: Option<&(dyn Fn(f64) -> Complex64 + Sync)>,
    closure: GradientClosure<'_>,
    path: &PathRealization,
    branch: Branch,
) -> Result<FluctuatingTrajectory> {
    let n = path.n_steps();
    if n == 0 {
        return Err(Error::EmptyPath);
    }
    closure.check(n)?;
    let increments = match branch {
        Branch::Euclidean => path.conjugate_increments(),
        Branch::RealTime => {
            if path.increments.iter().any(|w| w.conjugate) {
                return Err(Error::Configuration("the real-time solution needs ordinary increments (dt > 0)".into()));
            }
            path.increments.clone()
        }
    };
    let sigma = constants.path_sigma();
    let noise_phase = match branch {
        Branch::Euclidean => Complex64::new(1.0, 0.0),
        Branch::RealTime => eighth_turn(),
    };

    let clock = |k: usize| path.times[n] + path.times[0] - path.times[k];
    let mut times = Vec::with_capacity(n + 1);
    let mut c1 = Vec::with_capacity(n + 1);
    let mut c2 = Vec::with_capacity(n + 1);
    times.push(clock(0));
    c1.push(psi0);
    c2.push(Complex64::new(0.0, 0.0));
    let mut discount = Complex64::new(1.0, 0.0);
    for (k, dw) in increments.iter().enumerate() {
        let (x, t) = (path.positions[k], clock(k));
        let v = potential.value(x, t);
        let exponent = -(v * dw.elapsed()) / constants.hbar;
        let factor = match branch {
            Branch::Euclidean => Complex64::new(exponent.exp(), 0.0),
            Branch::RealTime => Complex64::from_polar(1.0, exponent),
        };
        let psi_k = match local {
            Some(f) => discount * f(x) + c2[k],
            None => c1[k] + c2[k],
        };
        let g = closure.at(k, t, v, psi_k, constants, branch);
        let next2 = c2[k] + noise_phase * discount * g * sigma * dw.value;
        discount *= factor;
        let next1 = discount * psi0;
        if !(next1.re.is_finite() && next1.im.is_finite() && next2.re.is_finite() && next2.im.is_finite()) {
            return Err(Error::Divergence { path: path.substream_index });
        }
        times.push(clock(k + 1));
        c1.push(next1);
        c2.push(next2);
    }
    Ok(FluctuatingTrajectory { path_index: path.substream_index, branch, times, clause1: c1, clause2: c2 })
}

/// Euclidean fluctuating solution at the end of `path`.
pub fn euclidean_solution(
    constants: &PhysicalConstants,
    potential: &dyn PotentialField,
    psi0: Complex64,
    closure: GradientClosure<'_>,
    path: &PathRealization,
) -> Result<FluctuatingSolutionSample> {
    fluctuating_trajectory(constants, potential, psi0, closure, path, Branch::Euclidean).map(|t| t.final_sample())
}

/// Real-time fluctuating solution at the end of `path`.
pub fn real_time_solution(
    constants: &PhysicalConstants,
    potential: &dyn PotentialField,
    psi0: Complex64,
    closure: GradientClosure<'_>,
    path: &PathRealization,
) -> Result<FluctuatingSolutionSample> {
    fluctuating_trajectory(constants, potential, psi0, closure, path, Branch::RealTime).map(|t| t.final_sample())
}

/// Trajectories for `settings.n_paths` paths launched from `x0`, each with
/// its own substream `(seed, i)`. Clause 1 starts from `psi0(X_end)`, the
/// backward reading used by the Feynman–Kac estimator.
pub fn simulate_ensemble(
    constants: &PhysicalConstants,
    potential: &dyn PotentialField,
    psi0: &(dyn Fn(f64) -> Complex64 + Sync),
    closure: GradientClosure<'_>,
    x0: f64,
    settings: &EnsembleSettings,
    branch: Branch,
) -> Result<Vec<FluctuatingTrajectory>> {
    (0..settings.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(settings.seed, i);
            let path = sample_path(constants, settings.t0, settings.t1, settings.n_steps, &mut stream, x0)?;
            integrate_clauses(constants, potential, psi0(path.endpoint()), Some(psi0), closure, &path, branch)
        })
        .collect()
}

/// Final samples only; avoids keeping whole trajectories.
pub fn ensemble_samples(
    constants: &PhysicalConstants,
    potential: &dyn PotentialField,
    psi0: &(dyn Fn(f64) -> Complex64 + Sync),
    closure: GradientClosure<'_>,
    x0: f64,
    settings: &EnsembleSettings,
    branch: Branch,
) -> Result<Vec<FluctuatingSolutionSample>> {
    (0..settings.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(settings.seed, i);
            let path = sample_path(constants, settings.t0, settings.t1, settings.n_steps, &mut stream, x0)?;
            integrate_clauses(constants, potential, psi0(path.endpoint()), Some(psi0), closure, &path, branch)
                .map(|t| t.final_sample())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub mean_re: f64,
    pub mean_im: f64,
    pub se: f64,
    pub variance: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

impl EnsembleSummary {
    pub fn new(m: &ComplexMoments, seed: u64) -> Self {
        Self { mean_re: m.mean.re, mean_im: m.mean.im, se: m.std_error, variance: m.variance, n: m.n, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub clause1: ComplexMoments,
    pub clause2: ComplexMoments,
    pub psi: ComplexMoments,
    pub feynman_kac: McEstimate,
    /// `|mean(clause2)| <= 3 SE`
    pub clause2_vanishes: bool,
    /// `|mean(psi) - FK| <= 3 SE`, SEs combined in quadrature
    pub psi_matches_feynman_kac: bool,
    pub max_abs_clause2: f64,
}

impl RecoveryReport {
    pub fn passed(&self) -> bool {
        self.clause2_vanishes && self.psi_matches_feynman_kac
    }
}

/// Checks that averaging the Euclidean fluctuating solution removes clause 2
/// and reproduces the Feynman–Kac expectation at `x_target`.
pub fn expectation_recovery(
    constants: &PhysicalConstants,
    potential: &dyn PotentialField,
    psi0: &(dyn Fn(f64) -> Complex64 + Sync),
    x_target: f64,
    velocity: VelocityParam,
    settings: &EnsembleSettings,
) -> Result<RecoveryReport> {
    let samples = ensemble_samples(
        constants,
        potential,
        psi0,
        GradientClosure::Potential(velocity),
        x_target,
        settings,
        Branch::Euclidean,
    )?;
    let c1: Vec<Complex64> = samples.iter().map(|s| s.clause1).collect();
    let c2: Vec<Complex64> = samples.iter().map(|s| s.clause2).collect();
    let psi: Vec<Complex64> = samples.iter().map(|s| s.psi).collect();
    let clause2 = ComplexMoments::of(&c2);
    let psi = ComplexMoments::of(&psi);
    let feynman_kac = feynman_kac_expectation(constants, potential, psi0, x_target, settings)?;
    let combined_se = psi.std_error.hypot(feynman_kac.std_error);
    Ok(RecoveryReport {
        clause1: ComplexMoments::of(&c1),
        clause2_vanishes: clause2.mean.norm() <= 3.0 * clause2.std_error,
        psi_matches_feynman_kac: (psi.mean - feynman_kac.mean).norm() <= 3.0 * combined_se,
        max_abs_clause2: c2.iter().map(|z| z.norm()).fold(0.0, f64::max),
        clause2,
        psi,
        feynman_kac,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleRow {
    pub n: usize,
    /// `|mean(clause2)|` of the first replicate ensemble
    pub abs_mean: f64,
    pub std_error: f64,
    pub within_3se: bool,
    /// root-mean-square of `|mean(clause2)|` over the replicate ensembles
    pub rms_abs_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSweep {
    pub replicates: usize,
    pub rows: Vec<MartingaleRow>,
    /// `rms_abs_mean` strictly decreasing in `n`, or zero throughout
    pub decreasing: bool,
    /// the single-ensemble `abs_mean` sequence, for reference
    pub single_ensemble_decreasing: bool,
}

impl MartingaleSweep {
    pub fn passed(&self) -> bool {
        self.decreasing && self.rows.last().is_some_and(|r| r.within_3se)
    }
}

/// `|mean(clause2)|` at each ensemble size, each size averaged over
/// `replicates` independent ensembles so the `1/sqrt(N)` trend is measured
/// rather than one draw of it.
#[allow(clippy::too_many_arguments)]
pub fn martingale_sweep(
    constants: &PhysicalConstants,
    potential: &dyn PotentialField,
    psi0: &(dyn Fn(f64) -> Complex64 + Sync),
    x_target: f64,
    velocity: VelocityParam,
    base: &EnsembleSettings,
    sizes: &[usize],
    replicates: usize,
) -> Result<MartingaleSweep> {
    if replicates == 0 || sizes.is_empty() {
        return Err(Error::Configuration("martingale sweep needs sizes and at least one replicate".into()));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut first = None;
        let mut sq = Vec::with_capacity(replicates);
        for r in 0..replicates {
            let settings =
                EnsembleSettings { n_paths: n, seed: substream_seed(base.seed ^ n as u64, r as u64), ..*base };
            let samples = ensemble_samples(
                constants,
                potential,
                psi0,
                GradientClosure::Potential(velocity),
                x_target,
                &settings,
                Branch::Euclidean,
            )?;
            let c2: Vec<Complex64> = samples.iter().map(|s| s.clause2).collect();
            let m = ComplexMoments::of(&c2);
            sq.push(m.mean.norm_sqr());
            first.get_or_insert(m);
        }
        let m = first.expect("replicates > 0");
        rows.push(MartingaleRow {
            n,
            abs_mean: m.mean.norm(),
            std_error: m.std_error,
            within_3se: m.mean.norm() <= 3.0 * m.std_error,
            rms_abs_mean: (crate::stats::pairwise_sum(&sq) / replicates as f64).sqrt(),
        });
    }
    // an identically zero clause 2 counts as decreasing
    let shrinks = |a: f64, b: f64| b < a || (a == 0.0 && b == 0.0);
    let decreasing = rows.windows(2).all(|w| shrinks(w[0].rms_abs_mean, w[1].rms_abs_mean));
    let single_ensemble_decreasing = rows.windows(2).all(|w| shrinks(w[0].abs_mean, w[1].abs_mean));
    Ok(MartingaleSweep { replicates, rows, decreasing, single_ensemble_decreasing })
}

/// `exp(-(V/hbar)[dt + (1/v_x) sqrt(hbar/m) dW*]) psi_prev`.
pub fn euclidean_multiplicative_step(
    psi_prev: Complex64,
    v: f64,
    constants: &PhysicalConstants,
    velocity: VelocityParam,
    dw_star: &WienerIncrement,
    dt: f64,
) -> Complex64 {
    let shoulder = dt + constants.path_sigma() / velocity.v_x() * dw_star.value;
    (-(v / constants.hbar) * shoulder).exp() * psi_prev
}

/// The real-time multiplicative step: a real modulus factor
/// `exp(-(V/hbar)(1/v_x) sqrt(hbar/2m) dW)` times the phase
/// `exp(-(iV/hbar)[dt + (1/v_x) sqrt(hbar/2m) dW])`, both driven by the same draw.
pub fn real_time_multiplicative_step(
    psi_prev: Complex64,
    v: f64,
    constants: &PhysicalConstants,
    velocity: VelocityParam,
    dw: &WienerIncrement,
    dt: f64,
) -> Result<Complex64> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("real-time step needs dt > 0, got {dt}")));
    }
    let noise = half_sigma(constants) / velocity.v_x() * dw.value;
    let modulus = (-(v / constants.hbar) * noise).exp();
    let phase = -(v / constants.hbar) * (dt + noise);
    Ok(Complex64::from_polar(modulus, phase) * psi_prev)
}

fn half_sigma(constants: &PhysicalConstants) -> f64 {
    (constants.hbar / (2.0 * constants.mass)).sqrt()
}

/// `p_y = -(dV/dy)[dt + (1/v_x) sqrt(hbar/m) dW*]`.
pub fn euclidean_impulse(
    dv_dy: f64,
    constants: &PhysicalConstants,
    velocity: VelocityParam,
    dw_star: &WienerIncrement,
    dt: f64,
) -> ImpulseSample {
    ImpulseSample::from_parts(-dv_dy * dt, -dv_dy * constants.path_sigma() / velocity.v_x() * dw_star.value)
}

/// `p_y = -(dV/dy)[dt + (1/v_x) sqrt(hbar/2m) dW]`.
pub fn real_time_impulse(
    dv_dy: f64,
    constants: &PhysicalConstants,
    velocity: VelocityParam,
    dw: &WienerIncrement,
    dt: f64,
) -> Result<ImpulseSample> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("real-time impulse needs dt > 0, got {dt}")));
    }
    Ok(ImpulseSample::from_parts(-dv_dy * dt, -dv_dy * half_sigma(constants) / velocity.v_x() * dw.value))
}

/// Transverse kick `exp(p_y dy / hbar)` (Euclidean) or
/// `exp(-(1/hbar)(dV/dy)[(1/v_x) sqrt(hbar/2m) dW] dy) exp(i p_y dy / hbar)` (real time).
#[allow(clippy::too_many_arguments)]
pub fn transverse_phase_update(
    psi_prev: Complex64,
    impulse: &ImpulseSample,
    dy: f64,
    dv_dy: f64,
    constants: &PhysicalConstants,
    velocity: VelocityParam,
    dw: &WienerIncrement,
    branch: Branch,
) -> Complex64 {
    let hbar = constants.hbar;
    match branch {
        Branch::Euclidean => (impulse.p_y * dy / hbar).exp() * psi_prev,
        Branch::RealTime => {
            let damping = -(dv_dy / hbar) * (half_sigma(constants) / velocity.v_x() * dw.value) * dy;
            Complex64::from_polar(damping.exp(), impulse.p_y * dy / hbar) * psi_prev
        }
    }
}
