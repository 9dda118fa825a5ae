//! One function per subcommand, each reading a resolved configuration and
//! writing its tables and summaries.

use serde::Serialize;
use serde_json::json;

use fluctwave_core::biprism::{
    estimate_fringe_count, gaussian_filament, monte_carlo_fringe_distribution, BiprismConfig,
};
use fluctwave_core::feynman_kac::{
    feynman_kac_expectation, normal_correspondence_check, sampled_uncertainty_product, solve_euclidean_pde,
    uncertainty_product, UniformGrid,
};
use fluctwave_core::fluctuating_wave::{
    ensemble_samples, expectation_recovery, martingale_sweep, simulate_ensemble, Branch, EnsembleSummary,
    GradientClosure, VelocityParam,
};
use fluctwave_core::stats::{chi_squared_variance_interval, ComplexMoments};
use fluctwave_core::stochastic_core::{ito_lemma_coefficients, ItoProcessSpec};
use fluctwave_core::{Complex64, EnsembleSettings, ModelPotential, PhysicalConstants};

use crate::config::{invalid, key, KeySpec, Resolved, Values};
use crate::output::{OutputDir, Table};
use crate::CliError;

const COMMON: &[KeySpec] = &[
    key("seed", "2024"),
    key("format", "csv"),
    key("natural", "false"),
    key("hbar", "auto"),
    key("mass", "auto"),
    key("charge", "auto"),
];

const PATHS: &[KeySpec] = &[
    key("potential", "zero"),
    key("psi0", "constant:1"),
    key("dpsi_dx", "closure"),
    key("v_x", "1"),
    key("t0", "0"),
    key("t", "1"),
    key("n_steps", "100"),
    key("n_paths", "100"),
    key("x0", "0"),
    key("branch", "euclidean"),
];

const VERIFY: &[KeySpec] = &[
    key("check", "all"),
    key("n", "100,1000,10000"),
    key("n_paths", "10000"),
    key("replicates", "16"),
    key("dt", "0.001"),
];

const FEYNMAN_KAC: &[KeySpec] = &[
    key("potential", "zero"),
    key("psi0", "gaussian:1"),
    key("t", "1"),
    key("n_steps", "500"),
    key("n_paths", "100000"),
    key("probes", "-1,-0.5,0,0.5,1"),
    key("pde_half_width", "auto"),
    key("pde_nx", "961"),
    key("pde_nt", "auto"),
];

const OPTICS: &[KeySpec] = &[
    key("kz", "auto"),
    key("vz", "1.3e8"),
    key("L", "1.5"),
    key("fringe_width_th", "9e-8"),
    key("fringe_width_exp", "7e-7"),
    key("coherence", "1.4e-4"),
    key("aperture", "none"),
];

const BIPRISM: &[KeySpec] = &[
    key("a", "5e-7"),
    key("n", "10000"),
    key("noise", "1"),
    key("filament", "auto"),
    key("z_extent", "1e-3"),
    key("z_steps", "200"),
];

pub const COMMANDS: &[&str] = &["paths", "verify", "feynman-kac", "biprism", "estimate"];

pub fn specs(command: &str) -> Option<Vec<KeySpec>> {
    let own: Vec<KeySpec> = match command {
        "paths" => PATHS.to_vec(),
        "verify" => VERIFY.iter().copied().chain([key("natural", "true")]).collect(),
        "feynman-kac" => FEYNMAN_KAC.to_vec(),
        "biprism" => OPTICS.iter().chain(BIPRISM).copied().collect(),
        "estimate" => OPTICS.to_vec(),
        _ => return None,
    };
    let mut all: Vec<KeySpec> = COMMON.iter().copied().filter(|c| !own.iter().any(|o| o.name == c.name)).collect();
    all.extend(own);
    Some(all)
}

fn number(v: f64) -> String {
    format!("{v:?}")
}

/// Replaces every `auto` value with the concrete value it stands for, so
/// the manifest records exactly what ran.
pub fn finalize(command: &str, r: &mut Resolved) -> Result<(), CliError> {
    let natural: bool = Values(r).parse("natural")?;
    let si = PhysicalConstants::electron_si();
    for (k, nat, phys) in [("hbar", 1.0, si.hbar), ("mass", 1.0, si.mass), ("charge", 1.0, si.charge)] {
        if Values(r).is_auto(k) {
            r.insert(k.into(), number(if natural { nat } else { phys }));
        }
    }
    let c = constants(&Values(r))?;
    match command {
        "biprism" | "estimate" => {
            if Values(r).is_auto("kz") {
                let vz = Values(r).positive("vz")?;
                r.insert("kz".into(), number(c.mass * vz / c.hbar));
            }
            if command == "biprism" && Values(r).is_auto("filament") {
                let cfg = biprism_config(&Values(r), &c, ModelPotential::Zero)?;
                r.insert("filament".into(), gaussian_filament(&c, &cfg, 1e-6, 1e-4).to_string());
            }
        }
        "feynman-kac" => {
            let v = Values(r);
            let t = v.positive("t")?;
            let width = InitialData::parse(&v, "psi0")?.width();
            if v.is_auto("pde_half_width") {
                let reach = v.list::<f64>("probes")?.iter().fold(0.0f64, |m, p| m.max(p.abs()));
                let spread = (width * width + c.hbar / c.mass * t).sqrt();
                let hw = reach + 12.0 * spread.max(width);
                r.insert("pde_half_width".into(), number(hw));
            }
            let v = Values(r);
            if v.is_auto("pde_nt") {
                let hw = v.positive("pde_half_width")?;
                let nx: usize = v.parse("pde_nx")?;
                let dx = 2.0 * hw / (nx.max(2) - 1) as f64;
                let stable = (c.diffusivity() * t / (0.4 * dx * dx)).ceil() as usize;
                r.insert("pde_nt".into(), (stable.max(1000) + 1).to_string());
            }
        }
        _ => {}
    }
    Ok(())
}

fn constants(v: &Values) -> Result<PhysicalConstants, CliError> {
    Ok(PhysicalConstants::new(v.positive("hbar")?, v.positive("mass")?, v.positive("charge")?)?)
}

/// Initial data: `constant:c` or `gaussian:s` for `exp(-x^2 / 2 s^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    Constant(f64),
    Gaussian(f64),
}

impl InitialData {
    fn parse(v: &Values, key: &str) -> Result<Self, CliError> {
        let raw = v.str(key);
        let bad = || invalid(key, raw);
        let (name, arg) = raw.split_once(':').ok_or_else(bad)?;
        let x: f64 = arg.trim().parse().map_err(|_| bad())?;
        match name.trim() {
            "constant" if x.is_finite() => Ok(Self::Constant(x)),
            "gaussian" if x > 0.0 && x.is_finite() => Ok(Self::Gaussian(x)),
            _ => Err(bad()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::Gaussian(s) => (-x * x / (2.0 * s * s)).exp(),
        }
    }

    fn width(&self) -> f64 {
        match *self {
            Self::Constant(_) => 1.0,
            Self::Gaussian(s) => s,
        }
    }
}

fn potential(v: &Values, key: &str) -> Result<ModelPotential, CliError> {
    v.str(key).parse().map_err(|_| invalid(key, v.str(key)))
}

fn settings(v: &Values, t0: f64) -> Result<EnsembleSettings, CliError> {
    Ok(EnsembleSettings {
        t0,
        t1: v.parse("t")?,
        n_steps: v.parse("n_steps")?,
        n_paths: v.parse("n_paths")?,
        seed: v.parse("seed")?,
    })
}

/// Runs `command`; `Ok(false)` means a requested check failed.
pub fn execute(command: &str, v: &Values, out: &mut OutputDir) -> Result<bool, CliError> {
    match command {
        "paths" => paths(v, out),
        "verify" => verify(v, out),
        "feynman-kac" => feynman_kac(v, out),
        "biprism" => biprism(v, out),
        "estimate" => estimate(v, out),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
    .map(|passed| passed.unwrap_or(true))
}

#[derive(Serialize)]
struct PathsSummary {
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    branch: Branch,
    psi: EnsembleSummary,
    clause1: EnsembleSummary,
    clause2: EnsembleSummary,
    max_abs_clause2: f64,
}

fn paths(v: &Values, out: &mut OutputDir) -> Result<Option<bool>, CliError> {
    let c = constants(v)?;
    let pot = potential(v, "potential")?;
    let psi0 = InitialData::parse(v, "psi0")?;
    let s = settings(v, v.parse("t0")?)?;
    let x0: f64 = v.parse("x0")?;
    let branch = match v.str("branch") {
        "euclidean" => Branch::Euclidean,
        "real_time" => Branch::RealTime,
        other => return Err(invalid("branch", other)),
    };
    let raw = v.str("dpsi_dx");
    let slope = match raw {
        "closure" | "zero" => 0.0,
        other => match other.split_once(':') {
            Some(("constant", g)) => g.trim().parse::<f64>().map_err(|_| invalid("dpsi_dx", raw))?,
            _ => return Err(invalid("dpsi_dx", raw)),
        },
    };
    let fixed = move |_t: f64| Complex64::new(slope, 0.0);
    let closure = if raw == "closure" {
        GradientClosure::Potential(VelocityParam::new(v.parse("v_x")?)?)
    } else {
        GradientClosure::Function(&fixed)
    };
    let initial = move |x: f64| Complex64::new(psi0.eval(x), 0.0);
    let trajectories = simulate_ensemble(&c, &pot, &initial, closure, x0, &s, branch)?;

    let mut traj = Table::new(&["path_id", "t", "re_psi", "im_psi", "re_clause2", "im_clause2"]);
    let mut finals =
        Table::new(&["path_id", "re_psi", "im_psi", "re_clause1", "im_clause1", "re_clause2", "im_clause2"]);
    let (mut psi, mut c1, mut c2) = (Vec::new(), Vec::new(), Vec::new());
    for tr in &trajectories {
        for (k, &t) in tr.times.iter().enumerate() {
            let p = tr.psi(k);
            traj.push(vec![
                tr.path_index.into(),
                t.into(),
                p.re.into(),
                p.im.into(),
                tr.clause2[k].re.into(),
                tr.clause2[k].im.into(),
            ]);
        }
        let f = tr.final_sample();
        finals.push(vec![
            f.path_index.into(),
            f.psi.re.into(),
            f.psi.im.into(),
            f.clause1.re.into(),
            f.clause1.im.into(),
            f.clause2.re.into(),
            f.clause2.im.into(),
        ]);
        psi.push(f.psi);
        c1.push(f.clause1);
        c2.push(f.clause2);
    }
    out.table("trajectories", &traj)?;
    out.table("finals", &finals)?;
    out.json(
        "summary",
        &PathsSummary {
            n_paths: s.n_paths,
            n_steps: s.n_steps,
            seed: s.seed,
            branch,
            psi: EnsembleSummary::new(&ComplexMoments::of(&psi), s.seed),
            clause1: EnsembleSummary::new(&ComplexMoments::of(&c1), s.seed),
            clause2: EnsembleSummary::new(&ComplexMoments::of(&c2), s.seed),
            max_abs_clause2: c2.iter().map(|z| z.norm()).fold(0.0, f64::max),
        },
    )?;
    Ok(None)
}

fn feynman_kac(v: &Values, out: &mut OutputDir) -> Result<Option<bool>, CliError> {
    let c = constants(v)?;
    let pot = potential(v, "potential")?;
    let psi0 = InitialData::parse(v, "psi0")?;
    let s = settings(v, 0.0)?;
    let hw = v.positive("pde_half_width")?;
    let xg = UniformGrid::new(-hw, hw, v.parse("pde_nx")?)?;
    let tg = UniformGrid::new(0.0, s.t1, v.parse("pde_nt")?)?;
    let grid = solve_euclidean_pde(&c, &pot, &|x| psi0.eval(x), xg, tg)?;
    let initial = move |x: f64| Complex64::new(psi0.eval(x), 0.0);

    let mut table = Table::new(&["probe_x", "mc_mean_re", "mc_mean_im", "mc_se", "oracle_re", "oracle_im"]);
    let mut rows = Vec::new();
    for x in v.list::<f64>("probes")? {
        let mc = feynman_kac_expectation(&c, &pot, &initial, x, &s)?;
        let oracle = grid.interpolate_final(x)?;
        let within = (mc.mean - Complex64::new(oracle, 0.0)).norm() <= 3.0 * mc.std_error;
        table.push(vec![
            x.into(),
            mc.mean.re.into(),
            mc.mean.im.into(),
            mc.std_error.into(),
            oracle.into(),
            0.0.into(),
        ]);
        rows.push(
            json!({ "probe_x": x, "deviation_in_se": (mc.mean.re - oracle) / mc.std_error, "within_3se": within }),
        );
    }
    out.table("feynman_kac", &table)?;
    let all = rows.iter().all(|r| r["within_3se"] == true);
    out.json(
        "summary",
        &json!({
            "potential": pot.to_string(),
            "n_paths": s.n_paths,
            "n_steps": s.n_steps,
            "seed": s.seed,
            "probes": rows,
            "all_within_3se": all,
        }),
    )?;
    Ok(None)
}

fn biprism_config(v: &Values, c: &PhysicalConstants, filament: ModelPotential) -> Result<BiprismConfig, CliError> {
    let aperture = match v.str("aperture") {
        "none" => None,
        _ => Some(v.positive("aperture")?),
    };
    let cfg = BiprismConfig {
        k_z: v.positive("kz")?,
        v_z: v.positive("vz")?,
        slit_to_screen: v.positive("L")?,
        fringe_width_theoretical: v.positive("fringe_width_th")?,
        fringe_width_experimental: v.positive("fringe_width_exp")?,
        coherence_length: v.positive("coherence")?,
        aperture_width: aperture,
        filament,
        ..BiprismConfig::reference(c)
    };
    if v.0.contains_key("a") {
        return Ok(BiprismConfig {
            filament_half_gap: v.positive("a")?,
            n_samples: v.parse("n")?,
            seed: v.parse("seed")?,
            noise: v.parse("noise")?,
            z_extent: v.positive("z_extent")?,
            z_steps: v.parse("z_steps")?,
            ..cfg
        });
    }
    Ok(cfg)
}

fn biprism(v: &Values, out: &mut OutputDir) -> Result<Option<bool>, CliError> {
    let c = constants(v)?;
    let cfg = biprism_config(v, &c, potential(v, "filament")?)?;
    cfg.validate(&c)?;
    let d = monte_carlo_fringe_distribution(&c, &cfg, cfg.n_samples, cfg.seed)?;

    let mut hist = Table::new(&["bin_center_m", "count"]);
    for b in &d.stats.histogram {
        hist.push(vec![b.center.into(), b.count.into()]);
    }
    let mut peaks = Table::new(&["sample_id", "peak_m"]);
    for (i, &p) in d.stats.peak_positions.iter().enumerate() {
        peaks.push(vec![i.into(), p.into()]);
    }
    out.table("histogram", &hist)?;
    out.table("peaks", &peaks)?;
    out.json(
        "summary",
        &json!({
            "sigma_m": d.sigma_predicted,
            "sigma_observed_m": d.stats.sigma_estimate,
            "fringe_count_spread": d.fringe_count_spread,
            "fringe_count_probwave": d.fringe_count_probwave,
            "fringe_count_observed": d.stats.fringe_count,
            "occupied_bins": d.occupied_bins,
            "fraction_within_sigma": d.fraction_within_sigma,
            "mode_bin_center_m": d.mode_bin_center,
            "ks_statistic": d.ks_statistic,
            "ks_critical_1pct": d.ks_critical_1pct,
            "n": cfg.n_samples,
            "seed": cfg.seed,
            "noise": cfg.noise,
            "warnings": d.warnings,
        }),
    )?;
    Ok(None)
}

fn estimate(v: &Values, out: &mut OutputDir) -> Result<Option<bool>, CliError> {
    let c = constants(v)?;
    let cfg = biprism_config(v, &c, ModelPotential::Zero)?;
    cfg.validate(&c)?;
    let s = estimate_fringe_count(&c, &cfg);
    let env = cfg.envelope();
    out.json(
        "estimate",
        &json!({
            "sigma_m": s.sigma_estimate,
            "transit_time_s": cfg.slit_to_screen / cfg.v_z,
            "range_m": s.spread_range,
            "fringe_count_spread": s.fringe_count,
            "envelope_full_width_m": env.full_width(),
            "fringe_count_probwave": env.fringes_under(cfg.fringe_width_experimental),
        }),
    )?;
    Ok(None)
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    passed: bool,
    details: serde_json::Value,
}

const CHECKS: &[&str] = &["uncertainty", "correspondence", "ito", "isometry", "recovery", "martingale"];

fn verify(v: &Values, out: &mut OutputDir) -> Result<Option<bool>, CliError> {
    let raw = v.str("check");
    let selected: Vec<&str> = if raw == "all" { CHECKS.to_vec() } else { raw.split(',').map(str::trim).collect() };
    if let Some(bad) = selected.iter().find(|s| !CHECKS.contains(s)) {
        return Err(CliError::Usage(format!("unknown check `{bad}`; known: {}", CHECKS.join(", "))));
    }
    let c = constants(v)?;
    let seed: u64 = v.parse("seed")?;
    let n_paths: usize = v.parse("n_paths")?;
    let dt = v.positive("dt")?;
    let gaussian = |x: f64| Complex64::new((-0.5 * x * x).exp(), 0.0);

    let mut results = Vec::new();
    for name in selected {
        let (passed, details) = match name {
            "uncertainty" => {
                let p = uncertainty_product(&c, dt)?;
                let rel = ((p - c.hbar) / c.hbar).abs();
                let sampled = sampled_uncertainty_product(&c, dt, 100_000, seed)?;
                let srel = ((sampled - c.hbar) / c.hbar).abs();
                (
                    rel <= 1e-12 && srel <= 0.01,
                    json!({ "hbar": c.hbar, "product": p, "relative_error": rel, "bound": 1e-12,
                            "sampled_product": sampled, "sampled_relative_error": srel, "sampled_bound": 0.01, "samples": 100_000 }),
                )
            }
            "correspondence" => {
                let r = normal_correspondence_check(&c, dt)?;
                (
                    r.passed(),
                    json!({ "max_relative_discrepancy": r.max_relative_discrepancy, "bound": 1e-12, "points": r.points.len() }),
                )
            }
            "ito" => {
                let bm = ItoProcessSpec::constant(0.0, 1.0);
                let mut worst: f64 = 0.0;
                for x in [-1.0, 0.0, 0.5, 2.0] {
                    let (d, b) = ito_lemma_coefficients(&|x, _| x * x, &bm, x, 0.0)?;
                    worst = worst.max((d - 1.0).abs()).max((b - 2.0 * x).abs());
                    let (d, b) = ito_lemma_coefficients(&|x: f64, _| x.exp(), &bm, x, 0.0)?;
                    worst = worst.max(((d - 0.5 * x.exp()) / x.exp()).abs()).max(((b - x.exp()) / x.exp()).abs());
                }
                (worst <= 1e-6, json!({ "max_error": worst, "bound": 1e-6 }))
            }
            "isometry" => {
                let grad = 1.5;
                let f = move |_t: f64| Complex64::new(grad, 0.0);
                let s = EnsembleSettings { t0: 0.0, t1: 1.0, n_steps: 20, n_paths, seed };
                let samples = ensemble_samples(
                    &c,
                    &ModelPotential::Zero,
                    &gaussian,
                    GradientClosure::Function(&f),
                    0.0,
                    &s,
                    Branch::Euclidean,
                )?;
                let c2: Vec<Complex64> = samples.iter().map(|x| x.clause2).collect();
                let var = ComplexMoments::of(&c2).variance;
                let expected = grad * grad * c.hbar / c.mass * (s.t1 - s.t0);
                let (lo, hi) = chi_squared_variance_interval(expected, c2.len());
                (lo <= var && var <= hi, json!({ "variance": var, "expected": expected, "interval_99": [lo, hi] }))
            }
            "recovery" => {
                let s = EnsembleSettings { t0: 0.0, t1: 1.0, n_steps: 50, n_paths, seed };
                let vel = VelocityParam::new(1.0)?;
                let mut ok = true;
                let mut rows = Vec::new();
                for pot in
                    [ModelPotential::Zero, ModelPotential::Constant { v0: 0.5 }, ModelPotential::Harmonic { k: 1.0 }]
                {
                    let r = expectation_recovery(&c, &pot, &gaussian, 0.3, vel, &s)?;
                    ok &= r.passed();
                    rows.push(json!({
                        "potential": pot.to_string(),
                        "clause2_mean_abs": r.clause2.mean.norm(),
                        "clause2_se": r.clause2.std_error,
                        "psi_mean": r.psi.mean.re,
                        "feynman_kac_mean": r.feynman_kac.mean.re,
                        "passed": r.passed(),
                    }));
                }
                (ok, json!({ "potentials": rows, "n_paths": n_paths }))
            }
            "martingale" => {
                let sizes: Vec<usize> = v.list("n")?;
                let base = EnsembleSettings { t0: 0.0, t1: 1.0, n_steps: 20, n_paths: 0, seed };
                let sweep = martingale_sweep(
                    &c,
                    &ModelPotential::Harmonic { k: 1.0 },
                    &gaussian,
                    0.3,
                    VelocityParam::new(1.0)?,
                    &base,
                    &sizes,
                    v.parse("replicates")?,
                )?;
                (sweep.passed(), serde_json::to_value(&sweep).map_err(|e| CliError::Io(e.to_string()))?)
            }
            _ => unreachable!("checked above"),
        };
        results.push(CheckResult { name: name.to_string(), passed, details });
    }
    let all = results.iter().all(|r| r.passed);
    out.json("verify", &json!({ "passed": all, "checks": results }))?;
    Ok(Some(all))
}
