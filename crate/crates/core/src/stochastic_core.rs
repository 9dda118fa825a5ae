//! Random streams, Wiener increments, Euler–Maruyama stepping and Itô's lemma.
//!
//! # Random numbers
//!
//! Every stream is a xoshiro256++ generator. Its 64-bit seed is derived from
//! `(master_seed, substream_index)` by two rounds of the SplitMix64 finalizer:
//!
//! ```text
//! seed = fmix(fmix(master_seed ^ 0x6A09E667F3BCC909) ^ substream_index)
//! fmix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!          z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
//! ```
//!
//! and the generator state is expanded from that seed with SplitMix64
//! (`SeedableRng::seed_from_u64`). Uniforms use the top 53 bits of each
//! output, `u = (next_u64 >> 11) * 2^-53`. Standard normals use the
//! Marsaglia polar method on `2u - 1` pairs, returning the first variate
//! and caching the second. Because `fmix` is a bijection, distinct substream
//! indices under one master seed never share a generator seed.
//!
//! # Time direction
//!
//! A conjugate increment `dW* = sqrt(-dt) xi` is carried with `dt < 0` and the
//! `conjugate` flag set. Its real value is the same `sqrt(|dt|) xi` as an
//! ordinary increment driven by the same draw; only the bookkeeping differs.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};

const MASTER_SALT: u64 = 0x6A09_E667_F3BC_C909;

fn fmix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator seed for a `(master_seed, substream_index)` pair.
pub fn substream_seed(master_seed: u64, substream_index: u64) -> u64 {
    fmix64(fmix64(master_seed ^ MASTER_SALT) ^ substream_index)
}

/// Anything that can hand out standard normal draws.
pub trait NormalSource {
    fn next_normal(&mut self) -> f64;

    /// Identity recorded on paths drawn from this source.
    fn substream_index(&self) -> u64 {
        0
    }
}

/// A single-owner random stream identified by `(master_seed, substream_index)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    substream_index: u64,
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl RngStream {
    pub fn new(master_seed: u64, substream_index: u64) -> Self {
        Self {
            master_seed,
            substream_index,
            rng: Xoshiro256PlusPlus::seed_from_u64(substream_seed(master_seed, substream_index)),
            spare: None,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn substream_index(&self) -> u64 {
        self.substream_index
    }

    /// Uniform draw on `[0, 1)` with 53 bits of resolution.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl NormalSource for RngStream {
    fn substream_index(&self) -> u64 {
        self.substream_index
    }

    fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_uniform() - 1.0;
            let v = 2.0 * self.next_uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }
}

/// A fixed, cycling sequence of normal draws. Used to force specific
/// increments in tests and worked examples.
#[derive(Debug, Clone)]
pub struct ForcedDraws {
    draws: Vec<f64>,
    pos: usize,
}

impl ForcedDraws {
    pub fn new(draws: Vec<f64>) -> Self {
        assert!(!draws.is_empty(), "ForcedDraws needs at least one value");
        Self { draws, pos: 0 }
    }

    pub fn constant(xi: f64) -> Self {
        Self::new(vec![xi])
    }
}

impl NormalSource for ForcedDraws {
    fn next_normal(&mut self) -> f64 {
        let xi = self.draws[self.pos % self.draws.len()];
        self.pos += 1;
        xi
    }
}

/// A Brownian increment over a step of signed length `dt`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WienerIncrement {
    pub value: f64,
    pub dt: f64,
    pub conjugate: bool,
}

impl WienerIncrement {
    /// `sqrt(|dt|) * xi`, flagged conjugate iff `dt < 0`.
    pub fn from_normal(dt: f64, xi: f64) -> Result<Self> {
        if dt == 0.0 || !dt.is_finite() {
            return Err(Error::DegenerateStep);
        }
        Ok(Self { value: dt.abs().sqrt() * xi, dt, conjugate: dt < 0.0 })
    }

    /// The zero increment over `dt`.
    pub fn zero(dt: f64) -> Result<Self> {
        Self::from_normal(dt, 0.0)
    }

    /// Elapsed time `|dt|`.
    pub fn elapsed(&self) -> f64 {
        self.dt.abs()
    }

    /// The same draw viewed with the opposite time orientation.
    pub fn flipped(&self) -> Self {
        Self { value: self.value, dt: -self.dt, conjugate: !self.conjugate }
    }
}

pub fn sample_wiener_increment<S: NormalSource + ?Sized>(dt: f64, stream: &mut S) -> Result<WienerIncrement> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(Error::DegenerateStep);
    }
    WienerIncrement::from_normal(dt, stream.next_normal())
}

type Coefficient = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `dX = a(X,t) dt + b(X,t) dW`.
pub struct ItoProcessSpec {
    drift: Coefficient,
    diffusion: Coefficient,
    max_step: f64,
}

impl std::fmt::Debug for ItoProcessSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ItoProcessSpec").field("max_step", &self.max_step).finish_non_exhaustive()
    }
}

impl ItoProcessSpec {
    pub fn new(
        drift: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        diffusion: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { drift: Box::new(drift), diffusion: Box::new(diffusion), max_step: f64::INFINITY }
    }

    pub fn constant(a: f64, b: f64) -> Self {
        Self::new(move |_, _| a, move |_, _| b)
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn max_step(&self) -> f64 {
        self.max_step
    }

    pub fn drift(&self, x: f64, t: f64) -> f64 {
        (self.drift)(x, t)
    }

    pub fn diffusion(&self, x: f64, t: f64) -> f64 {
        (self.diffusion)(x, t)
    }

    fn coefficients(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        let a = self.drift(x, t);
        if !a.is_finite() {
            return Err(Error::NumericDomain { what: "drift", x, t });
        }
        let b = self.diffusion(x, t);
        if !b.is_finite() {
            return Err(Error::NumericDomain { what: "diffusion", x, t });
        }
        Ok((a, b))
    }
}

/// One Euler–Maruyama step `X + a dt + b dW`, with `dt` taken from the increment.
pub fn euler_maruyama_step(x: f64, t: f64, spec: &ItoProcessSpec, dw: &WienerIncrement) -> Result<f64> {
    if dw.elapsed() > spec.max_step {
        return Err(Error::StepTooLarge { dt: dw.elapsed(), max: spec.max_step });
    }
    let (a, b) = spec.coefficients(x, t)?;
    Ok(x + a * dw.dt + b * dw.value)
}

/// Central-difference step `max(abs, rel * |x|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdStep {
    pub abs: f64,
    pub rel: f64,
}

impl FdStep {
    pub fn at(&self, x: f64) -> f64 {
        self.abs.max(self.rel * x.abs())
    }
}

/// Finite-difference steps used by [`ito_lemma_coefficients_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItoLemmaSteps {
    pub space: FdStep,
    /// Second differences lose `eps / h^2` to round-off, so they get a coarser step.
    pub space_second: FdStep,
    pub time: FdStep,
}

impl Default for ItoLemmaSteps {
    fn default() -> Self {
        Self {
            space: FdStep { abs: 1e-6, rel: 1e-6 },
            space_second: FdStep { abs: 1e-4, rel: 1e-4 },
            time: FdStep { abs: 1e-6, rel: 1e-6 },
        }
    }
}

/// Drift and diffusion of `df` for `f(X, t)` under `spec`:
/// `(a f_X + f_t + 1/2 f_XX b^2, f_X b)`.
pub fn ito_lemma_coefficients(
    f: &dyn Fn(f64, f64) -> f64,
    spec: &ItoProcessSpec,
    x: f64,
    t: f64,
) -> Result<(f64, f64)> {
    ito_lemma_coefficients_with(f, spec, x, t, ItoLemmaSteps::default())
}

pub fn ito_lemma_coefficients_with(
    f: &dyn Fn(f64, f64) -> f64,
    spec: &ItoProcessSpec,
    x: f64,
    t: f64,
    steps: ItoLemmaSteps,
) -> Result<(f64, f64)> {
    let hx = checked_step(x, steps.space.at(x))?;
    let hxx = checked_step(x, steps.space_second.at(x))?;
    let ht = checked_step(t, steps.time.at(t))?;

    let f0 = f(x, t);
    let f_x = (f(x + hx, t) - f(x - hx, t)) / (2.0 * hx);
    let f_xx = (f(x + hxx, t) - 2.0 * f0 + f(x - hxx, t)) / (hxx * hxx);
    let f_t = (f(x, t + ht) - f(x, t - ht)) / (2.0 * ht);
    if !(f0.is_finite() && f_x.is_finite() && f_xx.is_finite() && f_t.is_finite()) {
        return Err(Error::NumericDomain { what: "f derivatives", x, t });
    }

    let (a, b) = spec.coefficients(x, t)?;
    Ok((a * f_x + f_t + 0.5 * f_xx * b * b, f_x * b))
}

fn checked_step(at: f64, h: f64) -> Result<f64> {
    // the step actually realised in floating point
    let realised = (at + h) - at;
    if !(h > 0.0) || realised == 0.0 || !realised.is_finite() {
        return Err(Error::Tolerance(format!("finite-difference step {h:e} underflows at {at:e}")));
    }
    Ok(h)
}
