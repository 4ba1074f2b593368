//! Fixtures shared by the benchmarks.

use skwave_core::{make_operator, Family, PhaseState, SimConfig, SpectralOperator};

pub fn laplacian(modes: usize) -> SpectralOperator {
    make_operator(Family::DirichletLaplacian, modes, 0.5, 1.0).expect("valid operator")
}

/// A short damped run: `steps` steps of size `1e-3` at mass `mu`.
pub fn short_run(modes: usize, steps: usize, mu: f64) -> SimConfig {
    let dt = 1e-3;
    let mut cfg = SimConfig::new(modes, dt, dt * steps as f64, mu);
    cfg.record_every = steps;
    cfg
}

pub fn first_mode_state(modes: usize, amplitude: f64) -> PhaseState {
    let mut u = vec![0.0; modes];
    u[0] = amplitude;
    PhaseState::new(u.into(), vec![0.0; modes].into()).expect("matching lengths")
}
