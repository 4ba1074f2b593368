//! Exponential time stepping of the Galerkin wave system, the heat equation,
//! the controlled pair used for coupling, and the linear stochastic
//! convolution.
//!
//! Every scheme freezes the coefficients at the left end of the step and
//! integrates the linear part exactly with the per-mode kernels, so zero
//! coefficients incur no time-discretisation error. Nonlinear coefficients
//! act on the physical grid `x_j = j/(G+1)` through the sine transform.

use crate::coefficients::{Multiplier, Nemytskii};
use crate::error::{invalid, Error, Result};
use crate::modes::{heat_kernel, step_kernel, Damping, HeatKernel, ModePropagator, StepKernel};
use crate::noise::{NoiseSource, NORMALS_PER_MODE};
use crate::spectral::{grid_points, ModeVector, SineTransform, SpectralOperator};

/// States larger than this abort the sample as an overflow.
pub const OVERFLOW_LIMIT: f64 = 1e150;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Galerkin modes `N`.
    pub modes: usize,
    /// Physical grid size `G ≥ N`.
    pub grid: usize,
    pub dt: f64,
    pub horizon: f64,
    pub mu: f64,
    /// Shift `λ ≥ 0` of the operator.
    pub lambda: f64,
    pub damping: Damping,
    pub seed: u64,
    /// Record every this many steps; must divide the step count.
    pub record_every: usize,
}

impl SimConfig {
    /// Defaults to `G = 4N`, `λ = 0`, damped, recording every step.
    pub fn new(modes: usize, dt: f64, horizon: f64, mu: f64) -> Self {
        SimConfig {
            modes,
            grid: 4 * modes,
            dt,
            horizon,
            mu,
            lambda: 0.0,
            damping: Damping::Damped,
            seed: 0,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(invalid("modes", "at least one mode is required"));
        }
        if self.grid < self.modes {
            return Err(invalid("grid", format!("G = {} is below N = {}", self.grid, self.modes)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("{} must be positive", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(invalid("horizon", format!("T = {} is below dt", self.horizon)));
        }
        let steps = (self.horizon / self.dt).round();
        if (steps * self.dt - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(invalid("dt", "T must be an integer multiple of dt"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(invalid("mu", format!("{} must be positive", self.mu)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", format!("{} must be nonnegative", self.lambda)));
        }
        if self.record_every == 0 || !self.steps().is_multiple_of(self.record_every) {
            return Err(invalid("record_every", "must divide the number of steps"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn record_times(&self) -> Vec<f64> {
        (0..=self.steps() / self.record_every)
            .map(|r| (r * self.record_every) as f64 * self.dt)
            .collect()
    }

    fn check_operator(&self, op: &SpectralOperator) -> Result<()> {
        self.validate()?;
        if op.len() < self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: op.len(),
            });
        }
        Ok(())
    }
}

/// Position and velocity coefficients at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub u: ModeVector,
    pub v: ModeVector,
    pub t: f64,
}

impl PhaseState {
    pub fn new(u: ModeVector, v: ModeVector) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                found: v.len(),
            });
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(invalid("z0", "initial state must be finite"));
        }
        Ok(PhaseState { u, v, t: 0.0 })
    }

    pub fn zeros(n: usize) -> Self {
        PhaseState {
            u: ModeVector::zeros(n),
            v: ModeVector::zeros(n),
            t: 0.0,
        }
    }
}

/// Mode vectors sampled at the record times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ModeVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&ModeVector> {
        self.states.last()
    }

    fn push(&mut self, t: f64, x: &[f64]) {
        self.times.push(t);
        self.states.push(ModeVector::from(x.to_vec()));
    }
}

/// Recorded positions and velocities of a wave run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WavePath {
    pub positions: Trajectory,
    pub velocities: Trajectory,
}

impl WavePath {
    pub fn state(&self, r: usize) -> PhaseState {
        PhaseState {
            u: self.positions.states[r].clone(),
            v: self.velocities.states[r].clone(),
            t: self.positions.times[r],
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn check_finite(step: usize, time: f64, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.abs() <= OVERFLOW_LIMIT) {
        Ok(())
    } else {
        Err(Error::NonFinite { step, time })
    }
}

/// How a pointwise field acts at the current step.
enum Action {
    Zero,
    Scale(f64),
    /// Values are in the grid buffer.
    Grid,
}

/// Transform and scratch space shared by the steppers.
struct Galerkin {
    tr: SineTransform,
    xs: Vec<f64>,
    phys: Vec<f64>,
}

impl Galerkin {
    fn new(modes: usize, grid: usize) -> Result<Self> {
        Ok(Galerkin {
            tr: SineTransform::new(modes, grid)?,
            xs: grid_points(grid),
            phys: vec![0.0; grid],
        })
    }

    /// Evaluates `f(t, x_j, u_j)` into `out` unless the field is constant.
    fn evaluate(&self, f: &dyn Nemytskii, t: f64, u_phys: &[f64], out: &mut [f64]) -> Action {
        match f.constant() {
            Some(0.0) => Action::Zero,
            Some(c) => Action::Scale(c),
            None => {
                for ((o, &x), &u) in out.iter_mut().zip(&self.xs).zip(u_phys) {
                    *o = f.eval(t, x, u);
                }
                Action::Grid
            }
        }
    }

    /// `spec ← P_N[vals · spec]`.
    fn multiply(&mut self, action: &Action, vals: &[f64], spec: &mut [f64]) {
        match action {
            Action::Zero => spec.iter_mut().for_each(|s| *s = 0.0),
            Action::Scale(c) => spec.iter_mut().for_each(|s| *s *= c),
            Action::Grid => {
                self.tr.to_physical_into(spec, &mut self.phys);
                for (p, g) in self.phys.iter_mut().zip(vals) {
                    *p *= g;
                }
                self.tr.to_spectral_into(&self.phys, spec);
            }
        }
    }

    /// `out ← P_N[vals]` for a drift; returns false for the zero field.
    fn project(&self, action: &Action, vals: &mut [f64], out: &mut [f64]) -> bool {
        match action {
            Action::Zero => false,
            Action::Scale(c) => {
                vals.iter_mut().for_each(|v| *v = *c);
                self.tr.to_spectral_into(vals, out);
                true
            }
            Action::Grid => {
                self.tr.to_spectral_into(vals, out);
                true
            }
        }
    }
}

fn wave_kernels(op: &SpectralOperator, cfg: &SimConfig, extra_shift: f64) -> Result<Vec<StepKernel>> {
    op.eigenvalues()[..cfg.modes]
        .iter()
        .map(|&a| {
            let p = ModePropagator::new(cfg.mu, cfg.damping, a + cfg.lambda + extra_shift)?;
            step_kernel(&p, cfg.dt)
        })
        .collect()
}

/// Draws `(X_k, Y_k)` from the joint factor of each kernel.
fn kernel_noise(kernels: &[StepKernel], z: &[f64], x: &mut [f64], y: &mut [f64]) {
    for (k, kern) in kernels.iter().enumerate() {
        let l = &kern.joint_factor;
        let (z1, z2, z3) = (
            z[NORMALS_PER_MODE * k],
            z[NORMALS_PER_MODE * k + 1],
            z[NORMALS_PER_MODE * k + 2],
        );
        x[k] = l[1][0] * z1 + l[1][1] * z2;
        y[k] = l[2][0] * z1 + l[2][1] * z2 + l[2][2] * z3;
    }
}

/// `(u, v) ← Φ(u, v) + F·B + (X, Y)`.
fn advance(
    kernels: &[StepKernel],
    u: &mut [f64],
    v: &mut [f64],
    drift: Option<&[f64]>,
    x: &[f64],
    y: &[f64],
) {
    for (k, kern) in kernels.iter().enumerate() {
        let (uk, vk) = (u[k], v[k]);
        let b = drift.map_or(0.0, |d| d[k]);
        let phi = &kern.phi;
        u[k] = phi[0][0] * uk + phi[0][1] * vk + kern.forcing[0] * b + x[k];
        v[k] = phi[1][0] * uk + phi[1][1] * vk + kern.forcing[1] * b + y[k];
    }
}

/// Precomputed kernels for repeated wave runs with one configuration.
pub struct WaveSimulator {
    cfg: SimConfig,
    kernels: Vec<StepKernel>,
}

impl WaveSimulator {
    pub fn new(op: &SpectralOperator, cfg: &SimConfig) -> Result<Self> {
        cfg.check_operator(op)?;
        Ok(WaveSimulator {
            cfg: cfg.clone(),
            kernels: wave_kernels(op, cfg, 0.0)?,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn kernels(&self) -> &[StepKernel] {
        &self.kernels
    }

    /// Runs one sample and calls `observe(record_index, t, u, v)` at every
    /// record time.
    pub fn run_observed(
        &self,
        b: &dyn Nemytskii,
        g: &dyn Nemytskii,
        z0: &PhaseState,
        noise: &dyn NoiseSource,
        observe: &mut dyn FnMut(usize, f64, &[f64], &[f64]),
    ) -> Result<()> {
        let cfg = &self.cfg;
        let n = cfg.modes;
        check_len(n, z0.u.len())?;
        check_len(n, z0.v.len())?;
        let mut ws = Galerkin::new(n, cfg.grid)?;
        let mut u = z0.u.to_vec();
        let mut v = z0.v.to_vec();
        let mut z = vec![0.0; NORMALS_PER_MODE * n];
        let mut u_phys = vec![0.0; cfg.grid];
        let mut b_vals = vec![0.0; cfg.grid];
        let mut g_vals = vec![0.0; cfg.grid];
        let mut drift = vec![0.0; n];
        let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
        let need_phys = b.constant().is_none() || g.constant().is_none();
        let steps = cfg.steps();
        for m in 0..steps {
            let t = m as f64 * cfg.dt;
            if m % cfg.record_every == 0 {
                observe(m / cfg.record_every, t, &u, &v);
            }
            if need_phys {
                ws.tr.to_physical_into(&u, &mut u_phys);
            }
            let b_action = ws.evaluate(b, t, &u_phys, &mut b_vals);
            let has_drift = ws.project(&b_action, &mut b_vals, &mut drift);
            let g_action = ws.evaluate(g, t, &u_phys, &mut g_vals);
            noise.fill_step(m as u64, &mut z);
            kernel_noise(&self.kernels, &z, &mut x, &mut y);
            ws.multiply(&g_action, &g_vals, &mut x);
            ws.multiply(&g_action, &g_vals, &mut y);
            advance(&self.kernels, &mut u, &mut v, has_drift.then_some(&drift[..]), &x, &y);
            let t1 = (m + 1) as f64 * cfg.dt;
            check_finite(m + 1, t1, &u)?;
            check_finite(m + 1, t1, &v)?;
        }
        observe(steps / cfg.record_every, steps as f64 * cfg.dt, &u, &v);
        Ok(())
    }

    pub fn run(
        &self,
        b: &dyn Nemytskii,
        g: &dyn Nemytskii,
        z0: &PhaseState,
        noise: &dyn NoiseSource,
    ) -> Result<WavePath> {
        let mut path = WavePath::default();
        self.run_observed(b, g, z0, noise, &mut |_, t, u, v| {
            path.positions.push(t, u);
            path.velocities.push(t, v);
        })?;
        Ok(path)
    }
}

/// One wave sample recorded at `cfg.record_times()`.
pub fn simulate_wave(
    op: &SpectralOperator,
    cfg: &SimConfig,
    b: &dyn Nemytskii,
    g: &dyn Nemytskii,
    z0: &PhaseState,
    noise: &dyn NoiseSource,
) -> Result<WavePath> {
    WaveSimulator::new(op, cfg)?.run(b, g, z0, noise)
}

/// Precomputed kernels for the heat equation `du = (A - λ)u dt + b dt + g dW`.
///
/// The heat step consumes the first two normals of each mode triple, so a
/// heat and a wave run fed by the same stream share their Brownian increments.
pub struct HeatSimulator {
    cfg: SimConfig,
    kernels: Vec<HeatKernel>,
}

impl HeatSimulator {
    /// `cfg.mu` and `cfg.damping` are ignored.
    pub fn new(op: &SpectralOperator, cfg: &SimConfig) -> Result<Self> {
        cfg.check_operator(op)?;
        let kernels = op.eigenvalues()[..cfg.modes]
            .iter()
            .map(|&a| heat_kernel(a + cfg.lambda, cfg.dt))
            .collect::<Result<_>>()?;
        Ok(HeatSimulator {
            cfg: cfg.clone(),
            kernels,
        })
    }

    pub fn kernels(&self) -> &[HeatKernel] {
        &self.kernels
    }

    pub fn run_observed(
        &self,
        b: &dyn Nemytskii,
        g: &dyn Nemytskii,
        u0: &ModeVector,
        noise: &dyn NoiseSource,
        observe: &mut dyn FnMut(usize, f64, &[f64]),
    ) -> Result<()> {
        let cfg = &self.cfg;
        let n = cfg.modes;
        check_len(n, u0.len())?;
        let mut ws = Galerkin::new(n, cfg.grid)?;
        let mut u = u0.to_vec();
        let mut z = vec![0.0; NORMALS_PER_MODE * n];
        let mut u_phys = vec![0.0; cfg.grid];
        let mut b_vals = vec![0.0; cfg.grid];
        let mut g_vals = vec![0.0; cfg.grid];
        let mut drift = vec![0.0; n];
        let mut x = vec![0.0; n];
        let need_phys = b.constant().is_none() || g.constant().is_none();
        let steps = cfg.steps();
        for m in 0..steps {
            let t = m as f64 * cfg.dt;
            if m % cfg.record_every == 0 {
                observe(m / cfg.record_every, t, &u);
            }
            if need_phys {
                ws.tr.to_physical_into(&u, &mut u_phys);
            }
            let b_action = ws.evaluate(b, t, &u_phys, &mut b_vals);
            let has_drift = ws.project(&b_action, &mut b_vals, &mut drift);
            let g_action = ws.evaluate(g, t, &u_phys, &mut g_vals);
            noise.fill_step(m as u64, &mut z);
            for (k, kern) in self.kernels.iter().enumerate() {
                let l = &kern.joint_factor;
                x[k] = l[1][0] * z[NORMALS_PER_MODE * k] + l[1][1] * z[NORMALS_PER_MODE * k + 1];
            }
            ws.multiply(&g_action, &g_vals, &mut x);
            for (k, kern) in self.kernels.iter().enumerate() {
                let bk = if has_drift { drift[k] } else { 0.0 };
                u[k] = kern.decay * u[k] + kern.forcing * bk + x[k];
            }
            check_finite(m + 1, (m + 1) as f64 * cfg.dt, &u)?;
        }
        observe(steps / cfg.record_every, steps as f64 * cfg.dt, &u);
        Ok(())
    }

    pub fn run(
        &self,
        b: &dyn Nemytskii,
        g: &dyn Nemytskii,
        u0: &ModeVector,
        noise: &dyn NoiseSource,
    ) -> Result<Trajectory> {
        let mut path = Trajectory::default();
        self.run_observed(b, g, u0, noise, &mut |_, t, u| path.push(t, u))?;
        Ok(path)
    }
}

pub fn simulate_heat(
    op: &SpectralOperator,
    cfg: &SimConfig,
    b: &dyn Nemytskii,
    g: &dyn Nemytskii,
    u0: &ModeVector,
    noise: &dyn NoiseSource,
) -> Result<Trajectory> {
    HeatSimulator::new(op, cfg)?.run(b, g, u0, noise)
}

/// Parameters of the controlled pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSpec {
    /// Stopping level `Δ` for `|u - ũ|_H`.
    pub threshold: f64,
    /// Control strength `λ_c ≥ 0`.
    pub lambda: f64,
}

/// A primary path, its controlled companion and the coupling diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun {
    pub primary: Trajectory,
    pub auxiliary: Trajectory,
    /// First grid time with `|u - ũ|_H ≥ Δ`, or `T`.
    pub tau: f64,
    /// Whether the threshold was reached before the horizon.
    pub stopped: bool,
    /// Left-point sum of `dt |G_n(ũ)^{-1} λ_c (u - ũ)|²` over steps before `τ`.
    pub girsanov_cost: f64,
    /// Largest gap at grid times strictly before `τ`.
    pub max_gap_before_tau: f64,
    /// Largest gap at grid times up to and including `τ ∧ T`.
    pub sup_gap: f64,
    pub stream_id: u64,
}

/// Runs `u` with `(b, g)` and `ũ` with `(b, g_n)` plus the control
/// `λ_c (u - ũ)` until the stopping time, both driven by one noise stream.
///
/// The difference `e = u - ũ` obeys the wave equation with operator shifted
/// by `λ_c` while the control is on, forcing `b(u) - b(ũ)` and noise
/// coefficient `g(u) - g_n(ũ)`; it is advanced with the shifted kernels and
/// `ũ = u - e`. With `g_n = g` and equal initial data `e` stays exactly zero.
#[allow(clippy::too_many_arguments)]
pub fn simulate_controlled_pair(
    op: &SpectralOperator,
    cfg: &SimConfig,
    b: &dyn Nemytskii,
    g: &dyn Nemytskii,
    g_n: &dyn Multiplier,
    control: ControlSpec,
    z0: &PhaseState,
    noise: &dyn NoiseSource,
) -> Result<CoupledRun> {
    ControlledSimulator::new(op, cfg, control)?.run(b, g, g_n, z0, noise)
}

/// Kernels for repeated controlled-pair runs.
pub struct ControlledSimulator {
    cfg: SimConfig,
    control: ControlSpec,
    kernels: Vec<StepKernel>,
    shifted: Vec<StepKernel>,
}

impl ControlledSimulator {
    pub fn new(op: &SpectralOperator, cfg: &SimConfig, control: ControlSpec) -> Result<Self> {
        cfg.check_operator(op)?;
        if !(control.threshold > 0.0) {
            return Err(invalid("threshold", format!("{} must be positive", control.threshold)));
        }
        if !(control.lambda >= 0.0 && control.lambda.is_finite()) {
            return Err(invalid("lambda_control", format!("{} must be nonnegative", control.lambda)));
        }
        Ok(ControlledSimulator {
            cfg: cfg.clone(),
            control,
            kernels: wave_kernels(op, cfg, 0.0)?,
            shifted: wave_kernels(op, cfg, control.lambda)?,
        })
    }

    pub fn run(
        &self,
        b: &dyn Nemytskii,
        g: &dyn Nemytskii,
        g_n: &dyn Multiplier,
        z0: &PhaseState,
        noise: &dyn NoiseSource,
    ) -> Result<CoupledRun> {
        let cfg = &self.cfg;
        let n = cfg.modes;
        let gsz = cfg.grid;
        check_len(n, z0.u.len())?;
        check_len(n, z0.v.len())?;
        let floor = g_n.floor();
        if !(floor > 0.0) {
            return Err(Error::FloorViolation { value: floor, floor });
        }
        let lam = self.control.lambda;
        let threshold = self.control.threshold;
        let mut ws = Galerkin::new(n, gsz)?;
        let (mut u, mut v) = (z0.u.to_vec(), z0.v.to_vec());
        let (mut e, mut ev) = (vec![0.0; n], vec![0.0; n]);
        let mut z = vec![0.0; NORMALS_PER_MODE * n];
        let mut u_phys = vec![0.0; gsz];
        let mut e_phys = vec![0.0; gsz];
        let mut aux_phys = vec![0.0; gsz];
        let mut b_u = vec![0.0; gsz];
        let mut b_aux = vec![0.0; gsz];
        let mut g_u = vec![0.0; gsz];
        let mut g_aux = vec![0.0; gsz];
        let (mut drift_u, mut drift_e) = (vec![0.0; n], vec![0.0; n]);
        let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
        let (mut xe, mut ye) = (vec![0.0; n], vec![0.0; n]);

        let mut run = CoupledRun {
            primary: Trajectory::default(),
            auxiliary: Trajectory::default(),
            tau: cfg.horizon,
            stopped: false,
            girsanov_cost: 0.0,
            max_gap_before_tau: 0.0,
            sup_gap: 0.0,
            stream_id: noise.stream_id(),
        };
        let mut active = true;
        let steps = cfg.steps();
        let record = |run: &mut CoupledRun, t: f64, u: &[f64], e: &[f64]| {
            let aux: Vec<f64> = u.iter().zip(e).map(|(a, d)| a - d).collect();
            run.primary.push(t, u);
            run.auxiliary.push(t, &aux);
        };
        for m in 0..=steps {
            let t = m as f64 * cfg.dt;
            ws.tr.to_physical_into(&u, &mut u_phys);
            ws.tr.to_physical_into(&e, &mut e_phys);
            let gap = ws.tr.grid_norm(&e_phys);
            if active {
                if gap >= threshold {
                    active = false;
                    run.sup_gap = run.sup_gap.max(gap);
                    if m < steps {
                        run.tau = t;
                        run.stopped = true;
                    }
                } else {
                    run.max_gap_before_tau = run.max_gap_before_tau.max(gap);
                    run.sup_gap = run.sup_gap.max(gap);
                }
            }
            if m % cfg.record_every == 0 {
                record(&mut run, t, &u, &e);
            }
            if m == steps {
                break;
            }
            for ((a, p), d) in aux_phys.iter_mut().zip(&u_phys).zip(&e_phys) {
                *a = p - d;
            }
            let g_action = ws.evaluate(g, t, &u_phys, &mut g_u);
            for ((o, &xj), &a) in g_aux.iter_mut().zip(&ws.xs).zip(&aux_phys) {
                *o = g_n.eval(t, xj, a);
            }
            if active && lam > 0.0 {
                let mut sq = 0.0;
                for (d, gv) in e_phys.iter().zip(&g_aux) {
                    let w = lam * d / gv;
                    sq += w * w;
                }
                run.girsanov_cost += cfg.dt * sq / (gsz as f64 + 1.0);
            }

            let b_action = ws.evaluate(b, t, &u_phys, &mut b_u);
            let has_drift = ws.project(&b_action, &mut b_u, &mut drift_u);
            if has_drift {
                for ((o, &xj), &a) in b_aux.iter_mut().zip(&ws.xs).zip(&aux_phys) {
                    *o = b.eval(t, xj, a);
                }
                // b(u) - b(ũ) on the grid, reusing b_u's projection buffer
                if matches!(b_action, Action::Scale(_)) {
                    drift_e.iter_mut().for_each(|d| *d = 0.0);
                } else {
                    for (o, a) in b_aux.iter_mut().zip(&b_u) {
                        *o = a - *o;
                    }
                    ws.tr.to_spectral_into(&b_aux, &mut drift_e);
                }
            }

            noise.fill_step(m as u64, &mut z);
            let diff_kernels = if active { &self.shifted } else { &self.kernels };
            kernel_noise(&self.kernels, &z, &mut x, &mut y);
            kernel_noise(diff_kernels, &z, &mut xe, &mut ye);
            ws.multiply(&g_action, &g_u, &mut x);
            ws.multiply(&g_action, &g_u, &mut y);
            // noise coefficient of e is g(u) - g_n(ũ)
            for (o, gu) in g_aux.iter_mut().zip(&g_u) {
                let gu = match g_action {
                    Action::Grid => *gu,
                    Action::Scale(c) => c,
                    Action::Zero => 0.0,
                };
                *o = gu - *o;
            }
            ws.multiply(&Action::Grid, &g_aux, &mut xe);
            ws.multiply(&Action::Grid, &g_aux, &mut ye);

            advance(&self.kernels, &mut u, &mut v, has_drift.then_some(&drift_u[..]), &x, &y);
            advance(diff_kernels, &mut e, &mut ev, has_drift.then_some(&drift_e[..]), &xe, &ye);
            let t1 = (m + 1) as f64 * cfg.dt;
            for s in [&u, &v, &e, &ev] {
                check_finite(m + 1, t1, s)?;
            }
        }
        Ok(run)
    }
}

/// Kernels for the linear stochastic convolution `Π₁Γ` with diagonal weights.
pub struct ConvolutionSimulator {
    cfg: SimConfig,
    kernels: Vec<StepKernel>,
    weights: Vec<f64>,
}

impl ConvolutionSimulator {
    pub fn new(op: &SpectralOperator, cfg: &SimConfig, weights: &[f64]) -> Result<Self> {
        cfg.check_operator(op)?;
        check_len(cfg.modes, weights.len())?;
        Ok(ConvolutionSimulator {
            cfg: cfg.clone(),
            kernels: wave_kernels(op, cfg, 0.0)?,
            weights: weights.to_vec(),
        })
    }

    pub fn run_observed(&self, noise: &dyn NoiseSource, observe: &mut dyn FnMut(usize, f64, &[f64])) {
        let cfg = &self.cfg;
        let n = cfg.modes;
        let (mut u, mut v) = (vec![0.0; n], vec![0.0; n]);
        let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
        let mut z = vec![0.0; NORMALS_PER_MODE * n];
        let steps = cfg.steps();
        for m in 0..steps {
            if m % cfg.record_every == 0 {
                observe(m / cfg.record_every, m as f64 * cfg.dt, &u);
            }
            noise.fill_step(m as u64, &mut z);
            kernel_noise(&self.kernels, &z, &mut x, &mut y);
            for ((xk, yk), w) in x.iter_mut().zip(y.iter_mut()).zip(&self.weights) {
                *xk *= w;
                *yk *= w;
            }
            advance(&self.kernels, &mut u, &mut v, None, &x, &y);
        }
        observe(steps / cfg.record_every, steps as f64 * cfg.dt, &u);
    }

    pub fn run(&self, noise: &dyn NoiseSource) -> Trajectory {
        let mut path = Trajectory::default();
        self.run_observed(noise, &mut |_, t, u| path.push(t, u));
        path
    }

    /// `max` over record times of `|Π₁Γ(t)|_H`, without storing the path.
    pub fn sup_norm(&self, noise: &dyn NoiseSource) -> f64 {
        let mut sup = 0.0f64;
        self.run_observed(noise, &mut |_, _, u| {
            sup = sup.max(u.iter().map(|x| x * x).sum::<f64>().sqrt());
        });
        sup
    }
}

/// `Π₁Γ^{μ,λ}` sampled at the record times (`Φ = diag(weights)`).
pub fn stochastic_convolution(
    op: &SpectralOperator,
    cfg: &SimConfig,
    weights: &[f64],
    noise: &dyn NoiseSource,
) -> Result<Trajectory> {
    Ok(ConvolutionSimulator::new(op, cfg, weights)?.run(noise))
}
