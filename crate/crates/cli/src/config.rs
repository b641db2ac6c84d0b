//! JSON experiment configuration with strict parsing and semantic checks.

use std::path::{Path, PathBuf};

use poro_core::analysis::NormKind;
use poro_core::forcing::{experiment_41, experiment_42_coefficients, experiment_42_with, experiment_43, Experiment, ProblemData};
use poro_core::stepper::{Scheme, StepperConfig};
use poro_core::{Coefficients, PermeabilityModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.into(), message: message.into() }
}

/// Shape of the pressure history used by the delay path.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HistoryConfig {
    /// `Phi(t) = p0`
    #[default]
    Constant,
    /// `Phi(t) = p0 + amplitude sin(pi t / tau) b` with a fixed interior bump `b`.
    Oscillating { amplitude: f64 },
}

fn default_picard_max() -> usize {
    10
}

fn default_picard_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeConfig {
    SemiExplicit {},
    ImplicitPicard {
        #[serde(default = "default_picard_max")]
        picard_max: usize,
        #[serde(default = "default_picard_tol")]
        picard_tol: f64,
    },
    DelayImplicit {
        #[serde(default)]
        history: HistoryConfig,
    },
}

impl SchemeConfig {
    pub fn scheme(&self) -> Scheme {
        match self {
            SchemeConfig::SemiExplicit {} => Scheme::SemiExplicit,
            SchemeConfig::ImplicitPicard { .. } => Scheme::ImplicitPicard,
            SchemeConfig::DelayImplicit { .. } => Scheme::DelayImplicit,
        }
    }

    /// Label used in the `scheme` column.
    pub fn label(&self) -> String {
        match self {
            SchemeConfig::SemiExplicit {} => "semi_explicit".into(),
            SchemeConfig::ImplicitPicard { picard_max, .. } => format!("implicit_picard_max{picard_max}"),
            SchemeConfig::DelayImplicit { history: HistoryConfig::Constant } => "delay_implicit".into(),
            SchemeConfig::DelayImplicit { history: HistoryConfig::Oscillating { .. } } => {
                "delay_implicit_oscillating".into()
            }
        }
    }

    /// Stepper configuration; the delay history is attached by the driver,
    /// which knows the mesh.
    pub fn stepper(&self, tau: f64, final_time: f64, linear_tol: f64) -> StepperConfig {
        let mut cfg = match *self {
            SchemeConfig::SemiExplicit {} => StepperConfig::semi_explicit(tau, final_time),
            SchemeConfig::ImplicitPicard { picard_max, picard_tol } => {
                StepperConfig::implicit_picard(tau, final_time, picard_max, picard_tol)
            }
            SchemeConfig::DelayImplicit { .. } => StepperConfig::delay_implicit(tau, final_time, None),
        };
        cfg.linear_tol = linear_tol;
        cfg
    }

    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        match *self {
            SchemeConfig::ImplicitPicard { picard_max, picard_tol } => {
                if picard_max == 0 {
                    return Err(invalid(format!("{path}.picard_max"), "must be at least 1"));
                }
                if !(picard_tol > 0.0 && picard_tol < 1.0) {
                    return Err(invalid(format!("{path}.picard_tol"), "must lie in (0, 1)"));
                }
            }
            SchemeConfig::DelayImplicit { history: HistoryConfig::Oscillating { amplitude } } => {
                if !amplitude.is_finite() {
                    return Err(invalid(format!("{path}.history.amplitude"), "must be finite"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Coefficient overrides applied on top of the named experiment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub biot_modulus: Option<f64>,
    pub mobility_scale: Option<f64>,
    pub permeability: Option<PermeabilityModel>,
}

impl Overrides {
    pub fn apply(&self, c: &mut Coefficients) {
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if let Some(v) = self.mu {
            c.mu = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.biot_modulus {
            c.biot_modulus = v;
        }
        if let Some(v) = self.mobility_scale {
            c.mobility_scale = v;
        }
        if let Some(p) = self.permeability {
            c.permeability = p;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub scheme: SchemeConfig,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub n_ref: usize,
    pub tau_ref: f64,
    pub scheme: SchemeConfig,
}

fn default_norms() -> Vec<NormKind> {
    vec![NormKind::A, NormKind::HV, NormKind::C, NormKind::Q, NormKind::HQ, NormKind::Triple]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_repeats() -> usize {
    1
}

fn default_linear_tol() -> f64 {
    poro_core::linsolve::DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `ex41`, `ex42`, `ex43` or `zero` (vanishing data, exact solution 0).
    pub experiment: String,
    #[serde(default)]
    pub overrides: Overrides,
    /// Defaults to the experiment's final time.
    #[serde(default)]
    pub final_time: Option<f64>,
    #[serde(default)]
    pub schemes: Vec<SchemeConfig>,
    #[serde(default)]
    pub mesh_levels: Vec<usize>,
    #[serde(default)]
    pub tau_levels: Vec<f64>,
    /// Couples the step size to the mesh, `tau = h`, instead of crossing
    /// mesh and tau levels.
    #[serde(default)]
    pub coupled: bool,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub pairs: Vec<PairConfig>,
    #[serde(default)]
    pub reference: Option<ReferenceConfig>,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormKind>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Reserved; no numerical path draws random numbers.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Repetitions per timed run in `compare`; the median is reported.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_linear_tol")]
    pub linear_tol: f64,
}

/// Subcommand a configuration is validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Convergence,
    SweepAlpha,
    Compare,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(if path.is_empty() || path == "." { "<root>".to_string() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    /// Base experiment with overrides applied and an optional alpha.
    pub fn experiment_with_alpha(&self, alpha: Option<f64>) -> Result<Experiment, ConfigError> {
        let mut base = match self.experiment.as_str() {
            "ex41" => experiment_41(),
            "ex42" => experiment_42_with(experiment_42_coefficients()),
            "ex43" => experiment_43(1.0),
            "zero" => Experiment {
                name: "zero",
                coefficients: experiment_42_coefficients(),
                final_time: 1.0,
                data: ProblemData::zero(),
            },
            other => {
                return Err(invalid("experiment", format!("unknown experiment {other:?}; expected ex41, ex42, ex43 or zero")))
            }
        };
        let mut coeffs = base.coefficients;
        self.overrides.apply(&mut coeffs);
        if let Some(a) = alpha {
            coeffs.alpha = a;
        }
        coeffs.validate().map_err(|e| invalid("overrides", e.to_string()))?;
        let mut experiment = if base.name == "ex42" {
            // manufactured forcing depends on the coefficients
            experiment_42_with(coeffs)
        } else {
            base.coefficients = coeffs;
            base
        };
        if let Some(t) = self.final_time {
            experiment.final_time = t;
        }
        Ok(experiment)
    }

    pub fn experiment(&self) -> Result<Experiment, ConfigError> {
        self.experiment_with_alpha(None)
    }

    pub fn final_time(&self) -> Result<f64, ConfigError> {
        Ok(self.experiment()?.final_time)
    }

    fn check_tau(&self, path: String, tau: f64, final_time: f64) -> Result<(), ConfigError> {
        StepperConfig::semi_explicit(tau, final_time).steps().map(|_| ()).map_err(|e| invalid(path, e.to_string()))
    }

    /// Semantic checks for one subcommand; errors carry the offending path.
    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        self.experiment()?;
        let t = self.final_time()?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid("final_time", "must be finite and nonnegative"));
        }
        if !(self.linear_tol > 0.0 && self.linear_tol < 1.0) {
            return Err(invalid("linear_tol", "must lie in (0, 1)"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        if self.repeats == 0 {
            return Err(invalid("repeats", "must be at least 1"));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            s.validate(&format!("schemes[{i}]"))?;
        }
        for (i, &n) in self.mesh_levels.iter().enumerate() {
            if n == 0 {
                return Err(invalid(format!("mesh_levels[{i}]"), "must be positive"));
            }
        }
        if !self.coupled {
            for (i, &tau) in self.tau_levels.iter().enumerate() {
                self.check_tau(format!("tau_levels[{i}]"), tau, t)?;
            }
        }
        for (i, pair) in self.pairs.iter().enumerate() {
            pair.scheme.validate(&format!("pairs[{i}].scheme"))?;
            self.check_tau(format!("pairs[{i}].tau"), pair.tau, t)?;
        }
        for (i, &a) in self.alphas.iter().enumerate() {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(invalid(format!("alphas[{i}]"), "must be finite and nonnegative"));
            }
        }
        if let Some(r) = &self.reference {
            if r.n_ref == 0 {
                return Err(invalid("reference.n_ref", "must be positive"));
            }
            self.check_tau("reference.tau_ref".into(), r.tau_ref, t)?;
            r.scheme.validate("reference.scheme")?;
        }
        if self.norms.is_empty() {
            return Err(invalid("norms", "at least one norm is required"));
        }

        match command {
            Command::Run => {
                if self.schemes.len() != 1 {
                    return Err(invalid("schemes", "run needs exactly one scheme"));
                }
                if self.mesh_levels.len() != 1 {
                    return Err(invalid("mesh_levels", "run needs exactly one mesh level"));
                }
                if self.coupled {
                    return Err(invalid("coupled", "run takes an explicit tau level"));
                }
                if self.tau_levels.len() != 1 {
                    return Err(invalid("tau_levels", "run needs exactly one tau level"));
                }
            }
            Command::Convergence => {
                if self.schemes.is_empty() {
                    return Err(invalid("schemes", "at least one scheme is required"));
                }
                if self.coupled {
                    if self.mesh_levels.len() < 2 {
                        return Err(invalid("mesh_levels", "a coupled study needs at least two mesh levels"));
                    }
                    for (i, &n) in self.mesh_levels.iter().enumerate() {
                        self.check_tau(format!("mesh_levels[{i}]"), 1.0 / n as f64, t)?;
                    }
                } else {
                    if self.mesh_levels.is_empty() {
                        return Err(invalid("mesh_levels", "at least one mesh level is required"));
                    }
                    if self.tau_levels.len() < 2 {
                        return Err(invalid("tau_levels", "a convergence study needs at least two tau levels"));
                    }
                }
            }
            Command::SweepAlpha => {
                if self.alphas.is_empty() {
                    return Err(invalid("alphas", "at least one alpha is required"));
                }
                if self.mesh_levels.len() != 1 {
                    return Err(invalid("mesh_levels", "sweep-alpha needs exactly one mesh level"));
                }
                if self.tau_levels.is_empty() || self.coupled {
                    return Err(invalid("tau_levels", "sweep-alpha needs explicit tau levels"));
                }
                let semi = self.schemes.iter().filter(|s| s.scheme() == Scheme::SemiExplicit).count();
                let implicit = self.schemes.iter().filter(|s| s.scheme() == Scheme::ImplicitPicard).count();
                if self.schemes.len() != 2 || semi != 1 || implicit != 1 {
                    return Err(invalid(
                        "schemes",
                        "sweep-alpha needs one semi_explicit scheme and one implicit_picard reference",
                    ));
                }
            }
            Command::Compare => {
                if self.pairs.is_empty() {
                    return Err(invalid("pairs", "at least one (scheme, tau) pair is required"));
                }
                if self.mesh_levels.len() != 1 {
                    return Err(invalid("mesh_levels", "compare needs exactly one mesh level"));
                }
            }
        }

        let needs_reference = matches!(command, Command::Run | Command::Convergence | Command::Compare)
            && self.experiment()?.data.exact.is_none();
        if needs_reference {
            let r = self
                .reference
                .as_ref()
                .ok_or_else(|| invalid("reference", "this experiment has no exact solution; a reference run is required"))?;
            let n_levels: Vec<usize> = self.mesh_levels.clone();
            for (i, &n) in n_levels.iter().enumerate() {
                if r.n_ref % n != 0 {
                    return Err(invalid(format!("mesh_levels[{i}]"), format!("{n} does not divide reference.n_ref = {}", r.n_ref)));
                }
            }
            let taus: Vec<(String, f64)> = match command {
                Command::Compare => self.pairs.iter().enumerate().map(|(i, p)| (format!("pairs[{i}].tau"), p.tau)).collect(),
                _ if self.coupled => {
                    self.mesh_levels.iter().enumerate().map(|(i, &n)| (format!("mesh_levels[{i}]"), 1.0 / n as f64)).collect()
                }
                _ => self.tau_levels.iter().enumerate().map(|(i, &tau)| (format!("tau_levels[{i}]"), tau)).collect(),
            };
            for (path, tau) in taus {
                let ratio = tau / r.tau_ref;
                if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
                    return Err(invalid(path, format!("{tau} is not a multiple of reference.tau_ref = {}", r.tau_ref)));
                }
            }
        }
        Ok(())
    }
}
