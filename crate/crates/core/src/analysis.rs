//! Monte Carlo statistics over sample ensembles.
//!
//! Samples are independent and keyed by their stream id. Work runs on the
//! current rayon pool; results are collected in stream order and reduced
//! sequentially, so aggregates do not depend on the worker count.

use rayon::prelude::*;

use crate::coefficients::{Multiplier, Nemytskii};
use crate::error::{invalid, Error, Result};
use crate::modes::Damping;
use crate::noise::{BridgeRefined, NoiseSource, NoiseStream};
use crate::simulate::{
    ControlSpec, ControlledSimulator, ConvolutionSimulator, CoupledRun, HeatSimulator, PhaseState,
    SimConfig, Trajectory, WaveSimulator,
};
use crate::spectral::{ModeVector, SpectralOperator};

/// Sample mean with its standard error `s/√n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    /// Two-pass mean and standard error in slice order.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr, n }
    }
}

/// Runs `f` for stream ids `0..count` in parallel and returns the results in
/// stream order, separating failed samples.
pub fn run_samples<T, F>(count: usize, f: F) -> (Vec<(u64, T)>, Vec<(u64, Error)>)
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let results: Vec<(u64, Result<T>)> = (0..count as u64)
        .into_par_iter()
        .map(|id| (id, f(id)))
        .collect();
    let mut ok = Vec::with_capacity(count);
    let mut failed = Vec::new();
    for (id, r) in results {
        match r {
            Ok(v) => ok.push((id, v)),
            Err(e) => failed.push((id, e)),
        }
    }
    (ok, failed)
}

/// Default fraction of samples that must survive.
pub const MIN_SURVIVAL: f64 = 0.9;

pub fn require_survival(survived: usize, total: usize, fraction: f64) -> Result<()> {
    let required = (fraction * total as f64).ceil() as usize;
    if survived < required {
        Err(Error::InsufficientSurvivors {
            survived,
            total,
            required,
        })
    } else {
        Ok(())
    }
}

/// `M` trajectories on a common record grid, each tagged with its stream id.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub fingerprint: String,
    pub samples: Vec<(u64, Trajectory)>,
}

impl PathEnsemble {
    pub fn new(fingerprint: impl Into<String>, samples: Vec<(u64, Trajectory)>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| invalid("samples", "an ensemble needs at least one sample"))?;
        let times = &first.1.times;
        let modes = first.1.states.first().map_or(0, |s| s.len());
        for (_, t) in &samples {
            if &t.times != times {
                return Err(invalid("samples", "record times differ between samples"));
            }
            if let Some(bad) = t.states.iter().find(|s| s.len() != modes) {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: bad.len(),
                });
            }
        }
        Ok(PathEnsemble {
            fingerprint: fingerprint.into(),
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// `max_t |a(t) - b(t)|_H ∧ 1` over the shared record times.
pub fn sup_path_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.times != b.times {
        return Err(invalid("b", "record times differ"));
    }
    let mut sup = 0.0f64;
    for (x, y) in a.states.iter().zip(&b.states) {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        sup = sup.max(x.distance(y));
        if sup >= 1.0 {
            return Ok(1.0);
        }
    }
    Ok(sup)
}

/// Mean capped sup-distance over explicitly paired trajectories.
pub fn paired_distance_bound(pairs: &[(&Trajectory, &Trajectory)]) -> Result<Estimate> {
    let d = pairs
        .iter()
        .map(|(a, b)| sup_path_distance(a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_values(&d))
}

/// Upper bound on the Wasserstein distance of the two path laws under the
/// coupling that pairs equal stream ids.
pub fn wasserstein_upper_bound(a: &PathEnsemble, b: &PathEnsemble) -> Result<Estimate> {
    if a.len() != b.len() || a.samples.iter().zip(&b.samples).any(|(x, y)| x.0 != y.0) {
        return Err(Error::Unpaired);
    }
    let pairs: Vec<_> = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (&x.1, &y.1))
        .collect();
    paired_distance_bound(&pairs)
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(invalid("lambda_grid", "a slope needs at least two points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(invalid("estimates", "log-log fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("lambda_grid", "points must not coincide"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Parameters of a λ-scaling study of `E sup_t |Π₁Γ^{μ,λ}(t)|_H^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    pub sim: SimConfig,
    pub lambdas: Vec<f64>,
    pub p: f64,
    pub eta: f64,
    pub samples: usize,
    /// Pass level for the fitted slope.
    pub slope_threshold: f64,
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub lambdas: Vec<f64>,
    pub estimates: Vec<Estimate>,
    pub slope: f64,
    pub intercept: f64,
    pub p: f64,
    pub eta: f64,
    /// `-ηp/2`.
    pub predicted_slope: f64,
    pub slope_threshold: f64,
    /// Paired differences between neighbouring λ are all negative.
    pub strictly_decreasing: bool,
}

impl ScalingFit {
    pub fn slope_passes(&self) -> bool {
        self.slope <= self.slope_threshold
    }
}

/// Estimates the moments for every λ with common random numbers and fits
/// the log-log slope.
pub fn convolution_scaling_study(op: &SpectralOperator, study: &ScalingStudy) -> Result<ScalingFit> {
    if study.lambdas.len() < 2 {
        return Err(invalid("lambda_grid", "a slope needs at least two points"));
    }
    if !(study.p > 0.0) {
        return Err(invalid("p", "moment order must be positive"));
    }
    let n = study.sim.modes;
    let weights = study.weights.clone().unwrap_or_else(|| vec![1.0; n]);
    let sims = study
        .lambdas
        .iter()
        .map(|&lam| {
            let mut cfg = study.sim.clone();
            cfg.lambda = lam;
            ConvolutionSimulator::new(op, &cfg, &weights)
        })
        .collect::<Result<Vec<_>>>()?;
    let seed = study.sim.seed;
    let (ok, failed) = run_samples(study.samples, |id| {
        let noise = NoiseStream::new(seed, id);
        let row: Vec<f64> = sims.iter().map(|s| s.sup_norm(&noise).powf(study.p)).collect();
        if row.iter().all(|v| v.is_finite()) {
            Ok(row)
        } else {
            Err(Error::NonFinite { step: 0, time: 0.0 })
        }
    });
    require_survival(ok.len(), ok.len() + failed.len(), MIN_SURVIVAL)?;
    let per_lambda: Vec<Vec<f64>> = (0..sims.len())
        .map(|j| ok.iter().map(|(_, row)| row[j]).collect())
        .collect();
    let estimates: Vec<Estimate> = per_lambda.iter().map(|v| Estimate::from_values(v)).collect();
    let strictly_decreasing = estimates.windows(2).all(|w| w[1].mean < w[0].mean);
    let means: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
    let (slope, intercept) = log_log_fit(&study.lambdas, &means)?;
    Ok(ScalingFit {
        lambdas: study.lambdas.clone(),
        estimates,
        slope,
        intercept,
        p: study.p,
        eta: study.eta,
        predicted_slope: -study.eta * study.p / 2.0,
        slope_threshold: study.slope_threshold,
        strictly_decreasing,
    })
}

/// Paired standard errors of neighbouring differences, for monotonicity
/// assertions on common random numbers.
pub fn paired_differences(a: &[f64], b: &[f64]) -> Estimate {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Estimate::from_values(&d)
}

/// Parameters of a small-mass sweep comparing wave and heat paths.
#[derive(Debug, Clone, PartialEq)]
pub struct SkStudy {
    /// Shared grid, step and horizon; `mu` and `damping` are overridden.
    pub sim: SimConfig,
    pub mu_grid: Vec<f64>,
    pub samples: usize,
    pub u0: ModeVector,
    pub v0: ModeVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkRow {
    pub mu: f64,
    /// Capped sup-distance between the wave and heat paths.
    pub distance: Estimate,
    /// `|u_μ(T)|²_H`.
    pub energy: Estimate,
    /// `⟨u_μ(T), e_1⟩`.
    pub first_mode: Estimate,
    /// Paired `|u_μ(T)|² - |u(T)|²`.
    pub energy_gap: Estimate,
    /// Paired `⟨u_μ(T) - u(T), e_1⟩`.
    pub first_mode_gap: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkReport {
    pub rows: Vec<SkRow>,
    pub heat_energy: Estimate,
    pub heat_first_mode: Estimate,
    pub survived: usize,
    pub total: usize,
}

struct SkSample {
    heat_energy: f64,
    heat_first: f64,
    // per μ: (distance, energy, first mode)
    wave: Vec<(f64, f64, f64)>,
}

/// Runs the heat equation and the damped wave equation for each `μ` on
/// shared noise streams.
pub fn sk_study(
    op: &SpectralOperator,
    b: &dyn Nemytskii,
    g: &dyn Nemytskii,
    study: &SkStudy,
) -> Result<SkReport> {
    if study.mu_grid.is_empty() {
        return Err(invalid("mu_grid", "at least one mass is required"));
    }
    let heat = HeatSimulator::new(op, &study.sim)?;
    let waves = study
        .mu_grid
        .iter()
        .map(|&mu| {
            let mut cfg = study.sim.clone();
            cfg.mu = mu;
            cfg.damping = Damping::Damped;
            WaveSimulator::new(op, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let z0 = PhaseState::new(study.u0.clone(), study.v0.clone())?;
    let seed = study.sim.seed;
    let (ok, failed) = run_samples(study.samples, |id| {
        let noise = NoiseStream::new(seed, id);
        let path = heat.run(b, g, &study.u0, &noise)?;
        let last = path.last().expect("nonempty path");
        let heat_energy = last.iter().map(|x| x * x).sum::<f64>();
        let heat_first = last[0];
        let mut wave = Vec::with_capacity(waves.len());
        for sim in &waves {
            let mut sup = 0.0f64;
            let mut final_u = Vec::new();
            sim.run_observed(b, g, &z0, &noise, &mut |r, _, u, _| {
                let d: f64 = u
                    .iter()
                    .zip(path.states[r].iter())
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                sup = sup.max(d);
                final_u = u.to_vec();
            })?;
            let energy = final_u.iter().map(|x| x * x).sum::<f64>();
            wave.push((sup.min(1.0), energy, final_u[0]));
        }
        Ok(SkSample {
            heat_energy,
            heat_first,
            wave,
        })
    });
    let total = ok.len() + failed.len();
    require_survival(ok.len(), total, MIN_SURVIVAL)?;
    let heat_e: Vec<f64> = ok.iter().map(|(_, s)| s.heat_energy).collect();
    let heat_f: Vec<f64> = ok.iter().map(|(_, s)| s.heat_first).collect();
    let rows = study
        .mu_grid
        .iter()
        .enumerate()
        .map(|(j, &mu)| {
            let col = |f: &dyn Fn(&SkSample) -> f64| -> Vec<f64> { ok.iter().map(|(_, s)| f(s)).collect() };
            let dist = col(&|s| s.wave[j].0);
            let energy = col(&|s| s.wave[j].1);
            let first = col(&|s| s.wave[j].2);
            SkRow {
                mu,
                distance: Estimate::from_values(&dist),
                energy: Estimate::from_values(&energy),
                first_mode: Estimate::from_values(&first),
                energy_gap: paired_differences(&energy, &heat_e),
                first_mode_gap: paired_differences(&first, &heat_f),
            }
        })
        .collect();
    Ok(SkReport {
        rows,
        heat_energy: Estimate::from_values(&heat_e),
        heat_first_mode: Estimate::from_values(&heat_f),
        survived: ok.len(),
        total,
    })
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `λ = Δ^{γ_c - 1}`.
pub fn control_strength(threshold: f64, gamma_c: f64) -> f64 {
    threshold.powf(gamma_c - 1.0)
}

/// `λ²Δ²T/floor²`, the largest Girsanov cost a run stopped at level `Δ` can
/// accumulate.
pub fn cost_ceiling(threshold: f64, lambda: f64, horizon: f64, floor: f64) -> f64 {
    (lambda * threshold).powi(2) * horizon / (floor * floor)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub samples: usize,
    pub stopped: usize,
    pub p_stop: f64,
    pub p_stop_interval: (f64, f64),
    pub max_cost: f64,
    pub mean_cost: Estimate,
    pub ceiling: f64,
    pub within_ceiling: bool,
    /// `√(cost/2)` per sample.
    pub tv_budget: Estimate,
    pub tv_budget_max: f64,
    /// `√(E cost / 2)`.
    pub tv_budget_of_mean: f64,
    /// `(s, P(sup_{t ≤ T∧τ} |u - ũ|_H ≥ s))`.
    pub tails: Vec<(f64, f64)>,
}

/// Summarises controlled-pair runs made with `λ = Δ^{γ_c-1}`.
pub fn coupling_report(
    runs: &[CoupledRun],
    threshold: f64,
    gamma_c: f64,
    horizon: f64,
    floor: f64,
    tail_fractions: &[f64],
) -> Result<CouplingReport> {
    if runs.is_empty() {
        return Err(invalid("runs", "no runs to summarise"));
    }
    let n = runs.len();
    let stopped = runs.iter().filter(|r| r.stopped).count();
    let lambda = control_strength(threshold, gamma_c);
    let ceiling = cost_ceiling(threshold, lambda, horizon, floor);
    let costs: Vec<f64> = runs.iter().map(|r| r.girsanov_cost).collect();
    let tv: Vec<f64> = costs.iter().map(|c| (c / 2.0).sqrt()).collect();
    let mean_cost = Estimate::from_values(&costs);
    let tails = tail_fractions
        .iter()
        .map(|f| {
            let s = f * threshold;
            let hits = runs.iter().filter(|r| r.sup_gap >= s).count();
            (s, hits as f64 / n as f64)
        })
        .collect();
    Ok(CouplingReport {
        samples: n,
        stopped,
        p_stop: stopped as f64 / n as f64,
        p_stop_interval: wilson_interval(stopped, n, 1.96),
        max_cost: costs.iter().cloned().fold(0.0, f64::max),
        within_ceiling: costs.iter().all(|&c| c <= ceiling),
        ceiling,
        tv_budget: Estimate::from_values(&tv),
        tv_budget_max: tv.iter().cloned().fold(0.0, f64::max),
        tv_budget_of_mean: (mean_cost.mean / 2.0).sqrt(),
        mean_cost,
        tails,
    })
}

/// Runs `samples` controlled pairs on streams `0..samples`.
#[allow(clippy::too_many_arguments)]
pub fn coupling_ensemble(
    op: &SpectralOperator,
    cfg: &SimConfig,
    b: &dyn Nemytskii,
    g: &dyn Nemytskii,
    g_n: &dyn Multiplier,
    control: ControlSpec,
    z0: &PhaseState,
    samples: usize,
) -> Result<Vec<CoupledRun>> {
    let sim = ControlledSimulator::new(op, cfg, control)?;
    let (ok, failed) = run_samples(samples, |id| {
        sim.run(b, g, g_n, z0, &NoiseStream::new(cfg.seed, id))
    });
    require_survival(ok.len(), ok.len() + failed.len(), MIN_SURVIVAL)?;
    Ok(ok.into_iter().map(|(_, r)| r).collect())
}

/// Wave ensemble of positions on streams `0..samples`.
pub fn wave_ensemble(
    op: &SpectralOperator,
    cfg: &SimConfig,
    b: &dyn Nemytskii,
    g: &dyn Nemytskii,
    z0: &PhaseState,
    samples: usize,
) -> Result<PathEnsemble> {
    let sim = WaveSimulator::new(op, cfg)?;
    let (ok, failed) = run_samples(samples, |id| {
        Ok(sim.run(b, g, z0, &NoiseStream::new(cfg.seed, id))?.positions)
    });
    require_survival(ok.len(), ok.len() + failed.len(), MIN_SURVIVAL)?;
    PathEnsemble::new(format!("wave mu={} seed={}", cfg.mu, cfg.seed), ok)
}

/// Heat ensemble on streams `0..samples`.
pub fn heat_ensemble(
    op: &SpectralOperator,
    cfg: &SimConfig,
    b: &dyn Nemytskii,
    g: &dyn Nemytskii,
    u0: &ModeVector,
    samples: usize,
) -> Result<PathEnsemble> {
    let sim = HeatSimulator::new(op, cfg)?;
    let (ok, failed) = run_samples(samples, |id| sim.run(b, g, u0, &NoiseStream::new(cfg.seed, id)));
    require_survival(ok.len(), ok.len() + failed.len(), MIN_SURVIVAL)?;
    PathEnsemble::new(format!("heat seed={}", cfg.seed), ok)
}

/// One row of a time-step refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementLevel {
    pub dt: f64,
    /// `E sup_t |u_dt - u_{dt/2}|_H` on the coarse record grid.
    pub distance: Estimate,
}

/// Sup-distances between successive halvings of `cfg.dt`, with the finer
/// noise obtained by Brownian-bridge refinement of the coarser one.
/// Returns one row per level and the fitted order `d ln E / d ln dt`.
pub fn self_convergence(
    op: &SpectralOperator,
    cfg: &SimConfig,
    b: &dyn Nemytskii,
    g: &dyn Nemytskii,
    z0: &PhaseState,
    levels: usize,
    samples: usize,
) -> Result<(Vec<RefinementLevel>, f64)> {
    if levels < 2 {
        return Err(invalid("levels", "need at least two refinements"));
    }
    let sims = (0..=levels)
        .map(|l| {
            let mut c = cfg.clone();
            c.dt = cfg.dt / (1u64 << l) as f64;
            c.record_every = cfg.record_every << l;
            WaveSimulator::new(op, &c)
        })
        .collect::<Result<Vec<_>>>()?;
    let (ok, failed) = run_samples(samples, |id| {
        let mut noise: Box<dyn NoiseSource> = Box::new(NoiseStream::new(cfg.seed, id));
        let mut paths = Vec::with_capacity(levels + 1);
        for (l, sim) in sims.iter().enumerate() {
            if l > 0 {
                let salt = cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(l as u64));
                noise = Box::new(BridgeRefined::new(noise, salt));
            }
            paths.push(sim.run(b, g, z0, noise.as_ref())?.positions);
        }
        let mut d = Vec::with_capacity(levels);
        for w in paths.windows(2) {
            let mut sup = 0.0f64;
            for (x, y) in w[0].states.iter().zip(&w[1].states) {
                sup = sup.max(x.distance(y));
            }
            d.push(sup);
        }
        Ok(d)
    });
    require_survival(ok.len(), ok.len() + failed.len(), MIN_SURVIVAL)?;
    let rows: Vec<RefinementLevel> = (0..levels)
        .map(|l| {
            let col: Vec<f64> = ok.iter().map(|(_, d)| d[l]).collect();
            RefinementLevel {
                dt: cfg.dt / (1u64 << l) as f64,
                distance: Estimate::from_values(&col),
            }
        })
        .collect();
    let dts: Vec<f64> = rows.iter().map(|r| r.dt).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.distance.mean).collect();
    let (order, _) = log_log_fit(&dts, &means)?;
    Ok((rows, order))
}
