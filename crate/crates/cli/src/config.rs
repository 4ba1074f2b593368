//! Experiment configuration: TOML with dotted sections, experiment-specific
//! defaults merged under the user's keys, unknown keys rejected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use skwave_core::{
    make_operator, Damping, Family, HolderDrift, HolderMultiplier, SimConfig, SpectralOperator,
};

/// The only environment variable consulted: overrides `seed`.
pub const SEED_ENV: &str = "SKWAVE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VerifySemigroup,
    VerifyBounds,
    SkSweep,
    Coupling,
    ConvolutionScaling,
    SelfConvergence,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::VerifySemigroup,
        Experiment::VerifyBounds,
        Experiment::SkSweep,
        Experiment::Coupling,
        Experiment::ConvolutionScaling,
        Experiment::SelfConvergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifySemigroup => "verify-semigroup",
            Experiment::VerifyBounds => "verify-bounds",
            Experiment::SkSweep => "sk-sweep",
            Experiment::Coupling => "coupling",
            Experiment::ConvolutionScaling => "convolution-scaling",
            Experiment::SelfConvergence => "self-convergence",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::VerifySemigroup => {
                "per-mode estimates and operator-norm bounds of the damped wave semigroup"
            }
            Experiment::VerifyBounds => {
                "per-mode estimates, undamped energy conservation and small-mass mode limits"
            }
            Experiment::SkSweep => "wave-vs-heat path distance and law statistics across a mass grid",
            Experiment::Coupling => "controlled pairs: stopping probability, Girsanov cost, TV budget",
            Experiment::ConvolutionScaling => "decay of E sup |stochastic convolution|^p in the shift",
            Experiment::SelfConvergence => "strong self-convergence under Brownian-bridge refinement",
        }
    }

    /// Defaults layered under the user's configuration.
    fn defaults(self) -> &'static str {
        match self {
            Experiment::VerifySemigroup | Experiment::VerifyBounds => {
                "samples = 0\n\
                 [operator]\nmodes = 512\n\
                 [sweep]\nmu_grid = [1e-4, 1e-3, 1e-2, 1e-1, 1.0]\nlambda_grid = [0.0, 1.0, 10.0, 100.0]\n"
            }
            Experiment::SkSweep => {
                "samples = 200\n\
                 [operator]\nmodes = 64\n\
                 [coefficients]\nmultiplier = \"power\"\ndrift = \"power\"\nmollify = 64\n\
                 [sim]\ngrid = 256\ndt = 1e-4\nhorizon = 1.0\nrecord_every = 100\nu0_amplitude = 0.5\n\
                 [sweep]\nmu_grid = [1e-1, 1e-2, 1e-3, 1e-4]\n"
            }
            Experiment::Coupling => {
                "samples = 500\n\
                 [operator]\nmodes = 32\n\
                 [coefficients]\nmultiplier = \"power\"\n\
                 [sim]\ngrid = 128\ndt = 1e-3\nhorizon = 1.0\nmu = 0.1\nrecord_every = 10\n\
                 [sweep]\nn_grid = [16, 64, 256]\n"
            }
            Experiment::ConvolutionScaling => {
                "samples = 400\n\
                 [operator]\nmodes = 128\n\
                 [sim]\ndt = 1e-3\nhorizon = 1.0\nmu = 1e-3\n\
                 [sweep]\nlambda_grid = [1.0, 4.0, 16.0, 64.0, 256.0]\n"
            }
            Experiment::SelfConvergence => {
                "samples = 50\n\
                 [operator]\nmodes = 32\n\
                 [coefficients]\nmultiplier = \"power\"\ndrift = \"power\"\n\
                 [sim]\ngrid = 128\ndt = 1e-2\nhorizon = 1.0\nmu = 0.1\nu0_amplitude = 0.5\n"
            }
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorSection {
    pub family: String,
    pub modes: usize,
    pub eta0: f64,
    pub scale: f64,
}

impl Default for OperatorSection {
    fn default() -> Self {
        OperatorSection {
            family: "dirichlet_laplacian".into(),
            modes: 64,
            eta0: 0.5,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientSection {
    /// `constant` or `power`.
    pub multiplier: String,
    /// Value of the constant multiplier.
    pub value: f64,
    pub beta: f64,
    pub floor: f64,
    pub growth: f64,
    /// `zero` or `power`.
    pub drift: String,
    pub kappa: f64,
    pub alpha: f64,
    /// Lattice refinement `n` of the Lipschitz approximation; 0 keeps the raw fields.
    pub mollify: usize,
}

impl Default for CoefficientSection {
    fn default() -> Self {
        CoefficientSection {
            multiplier: "constant".into(),
            value: 1.0,
            beta: 0.8,
            floor: 1.0,
            growth: 2.0,
            drift: "zero".into(),
            kappa: 0.5,
            alpha: 0.8,
            mollify: 0,
        }
    }
}

impl CoefficientSection {
    pub fn multiplier(&self) -> Result<HolderMultiplier, String> {
        match self.multiplier.as_str() {
            "constant" => HolderMultiplier::constant(self.value).map_err(|e| e.to_string()),
            "power" => HolderMultiplier::power(self.beta, self.floor, self.growth)
                .map_err(|e| e.to_string()),
            other => Err(format!("unknown multiplier form `{other}`")),
        }
    }

    pub fn drift(&self) -> Result<HolderDrift, String> {
        match self.drift.as_str() {
            "zero" => Ok(HolderDrift::Zero),
            "power" => HolderDrift::power(self.kappa, self.alpha).map_err(|e| e.to_string()),
            other => Err(format!("unknown drift form `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    /// Physical grid size; 0 selects `4N`.
    pub grid: usize,
    pub dt: f64,
    pub horizon: f64,
    pub mu: f64,
    pub lambda: f64,
    pub zeta: u8,
    pub record_every: usize,
    /// Initial position `a·e_1`.
    pub u0_amplitude: f64,
    /// Initial velocity `a·e_1`.
    pub v0_amplitude: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            grid: 0,
            dt: 1e-3,
            horizon: 1.0,
            mu: 0.1,
            lambda: 0.0,
            zeta: 1,
            record_every: 1,
            u0_amplitude: 0.0,
            v0_amplitude: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub mu_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// Points of the time grid on `[0, t_max]` for the deterministic suites.
    pub t_points: usize,
    pub t_max: f64,
    /// Moment order and target exponent of the scaling study.
    pub p: f64,
    pub eta: f64,
    pub slope_threshold: f64,
    /// Refinement levels of the coupling experiment.
    pub n_grid: Vec<usize>,
    pub gamma_c: f64,
    /// Stopping level is `threshold_factor · c_n`.
    pub threshold_factor: f64,
    /// Stopping level is at least `enlargement / n`; 0 disables.
    pub enlargement: f64,
    pub tail_fractions: Vec<f64>,
    /// Largest admissible mean wave-vs-heat distance at the smallest mass.
    pub distance_threshold: f64,
    /// Also run the raw Hölder coefficients for the law-level statistics.
    pub raw_distribution: bool,
    /// Halvings of the time step in the self-convergence study.
    pub levels: usize,
    /// Smallest admissible fitted self-convergence order.
    pub min_order: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            mu_grid: vec![0.1],
            lambda_grid: vec![0.0],
            t_points: 200,
            t_max: 5.0,
            p: 2.0,
            eta: 0.5,
            slope_threshold: -0.30,
            n_grid: vec![16, 64, 256],
            gamma_c: 0.1,
            threshold_factor: 1.0,
            enlargement: 0.0,
            tail_fractions: vec![0.25, 0.5, 0.75, 1.0],
            distance_threshold: 0.05,
            raw_distribution: true,
            levels: 3,
            min_order: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub samples: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub operator: OperatorSection,
    #[serde(default)]
    pub coefficients: CoefficientSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn default_workers() -> usize {
    1
}

fn default_output() -> String {
    "skwave-out".into()
}

/// Failure to read, parse or validate a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl ExperimentConfig {
    /// Parses `text`, layers it over the experiment defaults and validates.
    /// `seed_override` replaces the seed (the value of [`SEED_ENV`]).
    pub fn parse(text: &str, seed_override: Option<&str>) -> Result<Self, ConfigError> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError(e.to_string()))?;
        let experiment: Experiment = user
            .get("experiment")
            .and_then(|v| v.as_str())
            .ok_or_else(|| ConfigError("missing `experiment`".into()))?
            .parse()
            .map_err(ConfigError)?;
        let mut merged: toml::Table = experiment.defaults().parse().expect("valid defaults");
        merge(&mut merged, user);
        let mut cfg: ExperimentConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError(e.to_string()))?;
        if let Some(s) = seed_override {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| ConfigError(format!("{SEED_ENV} = `{s}` is not an unsigned integer")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("serialisable config")
    }

    pub fn operator(&self) -> Result<SpectralOperator, ConfigError> {
        let family: Family = self.operator.family.parse().map_err(|e: skwave_core::Error| ConfigError(e.to_string()))?;
        make_operator(family, self.operator.modes, self.operator.eta0, self.operator.scale)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn damping(&self) -> Result<Damping, ConfigError> {
        Damping::from_zeta(self.sim.zeta).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn sim_config(&self) -> Result<SimConfig, ConfigError> {
        let n = self.operator.modes;
        let cfg = SimConfig {
            modes: n,
            grid: if self.sim.grid == 0 { 4 * n } else { self.sim.grid },
            dt: self.sim.dt,
            horizon: self.sim.horizon,
            mu: self.sim.mu,
            lambda: self.sim.lambda,
            damping: self.damping()?,
            seed: self.seed,
            record_every: self.sim.record_every,
        };
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        self.operator()?;
        self.coefficients.multiplier().map_err(ConfigError)?;
        self.coefficients.drift().map_err(ConfigError)?;
        if self.workers == 0 {
            return err("workers must be at least 1".into());
        }
        let sweep = &self.sweep;
        let stochastic = !matches!(
            self.experiment,
            Experiment::VerifyBounds | Experiment::VerifySemigroup
        );
        if stochastic {
            self.sim_config()?;
            if self.samples < 2 {
                return err("stochastic experiments need at least 2 samples".into());
            }
        }
        match self.experiment {
            Experiment::VerifyBounds | Experiment::VerifySemigroup => {
                if sweep.t_points < 2 || !(sweep.t_max > 0.0) {
                    return err("the time grid needs t_points ≥ 2 and t_max > 0".into());
                }
                if sweep.mu_grid.is_empty() || sweep.mu_grid.iter().any(|m| !(*m > 0.0)) {
                    return err("mu_grid must hold positive masses".into());
                }
                if sweep.lambda_grid.is_empty() || sweep.lambda_grid.iter().any(|l| !(*l >= 0.0)) {
                    return err("lambda_grid must hold nonnegative shifts".into());
                }
            }
            Experiment::SkSweep => {
                if sweep.mu_grid.is_empty() || sweep.mu_grid.iter().any(|m| !(*m > 0.0)) {
                    return err("mu_grid must hold positive masses".into());
                }
            }
            Experiment::Coupling => {
                if sweep.n_grid.is_empty() || sweep.n_grid.contains(&0) {
                    return err("n_grid must hold positive refinement levels".into());
                }
                if self.coefficients.multiplier != "power" {
                    return err("coupling needs the power multiplier".into());
                }
                if !(sweep.gamma_c > 0.0 && sweep.gamma_c < 1.0) {
                    return err("gamma_c must lie in (0, 1)".into());
                }
                if !(sweep.threshold_factor > 0.0) || !(sweep.enlargement >= 0.0) {
                    return err("threshold_factor must be positive and enlargement nonnegative".into());
                }
            }
            Experiment::ConvolutionScaling => {
                if sweep.lambda_grid.len() < 2 {
                    return err("lambda_grid needs at least two shifts for a slope".into());
                }
                if sweep.lambda_grid.iter().any(|l| !(*l > 0.0)) {
                    return err("lambda_grid must be positive for a log-log fit".into());
                }
                if !(sweep.p > 0.0) {
                    return err("p must be positive".into());
                }
            }
            Experiment::SelfConvergence => {
                if sweep.levels < 2 {
                    return err("levels must be at least 2".into());
                }
            }
        }
        Ok(())
    }
}

/// Human-readable description of every key, printed by `print-schema`.
pub const SCHEMA: &str = r#"# skwave experiment configuration (TOML)
# Keys not listed here are rejected. Experiment-specific defaults apply to
# keys that are left out; `run` records the fully resolved file in the manifest.
# The environment variable SKWAVE_SEED, when set, replaces `seed`.

experiment = "verify-semigroup"   # verify-semigroup | verify-bounds | sk-sweep | coupling
                                  # | convolution-scaling | self-convergence
seed = 0                          # u64; noise for sample i is stream i of this seed
samples = 0                       # Monte Carlo sample count M
workers = 1                       # worker threads; results do not depend on it
output = "skwave-out"             # output directory

[operator]
family = "dirichlet_laplacian"    # dirichlet_laplacian | bilaplacian_1d | power_law
modes = 64                        # Galerkin modes N
eta0 = 0.5                        # trace-class exponent (pinned for the named families)
scale = 1.0                       # power_law: alpha_k = scale * k^(1/(1-eta0))

[coefficients]
multiplier = "constant"           # constant | power: g(u) = min(floor + |u|^beta, growth (1 + |u|))
value = 1.0                       # constant multiplier value
beta = 0.8                        # in (3/4, 1]
floor = 1.0                       # > 0
growth = 2.0                      # >= floor
drift = "zero"                    # zero | power: b(u) = kappa sign(u) |u|^alpha
kappa = 0.5
alpha = 0.8                       # in (0, 1]
mollify = 0                       # lattice refinement n of the Lipschitz approximation; 0 = raw

[sim]
grid = 0                          # physical grid G >= N; 0 selects 4N
dt = 1e-3
horizon = 1.0                     # T, an integer multiple of dt
mu = 0.1
lambda = 0.0                      # operator shift
zeta = 1                          # 0 undamped, 1 damped
record_every = 1                  # steps between recorded states
u0_amplitude = 0.0                # u0 = a e_1
v0_amplitude = 0.0                # v0 = a e_1

[sweep]
mu_grid = [0.1]
lambda_grid = [0.0]
t_points = 200                    # deterministic suites: time grid on [0, t_max]
t_max = 5.0
p = 2.0                           # convolution-scaling moment order
eta = 0.5                         # predicted slope is -eta p / 2
slope_threshold = -0.30           # fitted slope must not exceed this
n_grid = [16, 64, 256]            # coupling refinement levels
gamma_c = 0.1                     # coupling exponent; control lambda = Delta^(gamma_c - 1)
threshold_factor = 1.0            # stopping level Delta = threshold_factor * c_n
enlargement = 0.0                 # Delta = max(Delta, enlargement / n); 0 disables
tail_fractions = [0.25, 0.5, 0.75, 1.0]
distance_threshold = 0.05         # sk-sweep: bound on the mean distance at the smallest mass
raw_distribution = true           # sk-sweep: also run the raw Hölder coefficients
levels = 3                        # self-convergence halvings
min_order = 0.4                   # smallest admissible fitted self-convergence order
"#;
