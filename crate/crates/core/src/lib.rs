//! Spectral Galerkin simulation of damped stochastic wave equations with
//! Hölder coefficients, their first-order (heat) limit, and the coupling
//! diagnostics built on them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod analysis;
pub mod coefficients;
pub mod error;
pub mod modes;
pub mod noise;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use modes::{
    bound_oracle, bound_quantity, heat_kernel, mode_limit_gap, operator_norm_check, propagate,
    semigroup_suprema, step_kernel, BoundId, Damping, HeatKernel, LimitCase, ModePropagator,
    Regime, Roots, SemigroupCheck, StepKernel,
};
pub use spectral::{
    make_operator, Family, ModeVector, NormSpec, SineTransform, SpectralOperator,
};
pub use coefficients::{
    apply_drift, apply_multiplier, inverse_multiplier, mollify_1d, mollify_drift,
    ravsky_approximate, HolderDrift, HolderMultiplier, LipschitzApprox, Multiplier,
    MultiplierForm, Nemytskii, RavskyApprox,
};
pub use noise::{BridgeRefined, NoiseSource, NoiseStream, NORMALS_PER_MODE};
pub use simulate::{
    simulate_controlled_pair, simulate_heat, simulate_wave, stochastic_convolution, ControlSpec,
    ControlledSimulator, ConvolutionSimulator, CoupledRun, HeatSimulator, PhaseState, SimConfig,
    Trajectory, WavePath, WaveSimulator,
};
pub use analysis::{
    convolution_scaling_study, coupling_ensemble, coupling_report, sk_study,
    sup_path_distance, wasserstein_upper_bound, CouplingReport, Estimate, PathEnsemble,
    ScalingFit, ScalingStudy, SkReport, SkRow, SkStudy,
};
