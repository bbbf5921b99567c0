//! Run configuration in TOML.
//!
//! Top-level keys describe the problem (`dim`, `n`, `f_minus`, `f_plus`,
//! `lambda`, `zeta`); the `[flow]`, `[initial]`, `[output]` and
//! `[validation]` tables are optional and fall back to [`DEFAULTS_TOML`].

use std::path::{Path, PathBuf};

use curveflow::energy::FlowParams;
use curveflow::flow::{DtMode, FlowConfig, Integrator, VelocityMode};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

/// Documented defaults, printed by `run --print-defaults`.
pub const DEFAULTS_TOML: &str = r#"# required: lambda; dim, n, f_minus, f_plus unless initial.kind = "file"
# dim = 2
# n = 64
# f_minus = [0.0, 0.0]
# f_plus = [1.0, 0.0]
# lambda = 1.0
# zeta = [0.0, 0.0]            # default: zero vector

[flow]
integrator = "semi_implicit"   # or "explicit"
velocity_mode = "normal"       # or "gradient"
# dt = 1e-4                    # fixed step; omit for CFL stepping
# safety = 1.0                 # CFL safety; 1.0 semi-implicit, 0.05 explicit
t_end = inf
max_steps = 100000
# stationarity_tol = ...       # default 1e-6 * (1 + W(f_0))
# redistribute_every = ...     # default 50 (normal), 0 (gradient)
h_min_factor = 1e-3

[initial]
kind = "line"                  # "arc" (bulge), "perturbed_line" (amplitude, mode, seed), "file" (path)

[output]
dir = "out"                    # relative to the config file; CURVEFLOW_OUTPUT overrides
snapshot_every = 0             # 0 keeps only the first and last state

[validation]
validate_bc0 = false
bc0_tol = 1e-3
"#;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Line,
    Arc {
        bulge: f64,
    },
    PerturbedLine {
        amplitude: f64,
        mode: u32,
        seed: Option<u64>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub dim: Option<usize>,
    pub n: Option<usize>,
    pub f_minus: Option<Vec<f64>>,
    pub f_plus: Option<Vec<f64>>,
    pub initial: InitialSpec,
    pub flow: FlowConfig,
    pub output_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dim: Option<usize>,
    n: Option<usize>,
    f_minus: Option<Vec<f64>>,
    f_plus: Option<Vec<f64>>,
    lambda: Option<f64>,
    zeta: Option<Vec<f64>>,
    #[serde(default)]
    flow: RawFlow,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    validation: RawValidation,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    integrator: Option<Integrator>,
    velocity_mode: Option<VelocityMode>,
    dt: Option<f64>,
    safety: Option<f64>,
    t_end: Option<f64>,
    max_steps: Option<usize>,
    stationarity_tol: Option<f64>,
    redistribute_every: Option<usize>,
    h_min_factor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawInitial {
    #[default]
    Line,
    Arc {
        bulge: f64,
    },
    PerturbedLine {
        amplitude: f64,
        #[serde(default = "one")]
        mode: u32,
        seed: Option<u64>,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> u32 {
    1
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    snapshot_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValidation {
    validate_bc0: Option<bool>,
    bc0_tol: Option<f64>,
}

pub const OUTPUT_ENV: &str = "CURVEFLOW_OUTPUT";

pub fn parse_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut config = parse_config_str(&text, path, base)?;
    if let Some(dir) = std::env::var_os(OUTPUT_ENV) {
        config.output_dir = PathBuf::from(dir);
    }
    Ok(config)
}

/// Parses `text`; relative paths are resolved against `base`.
pub fn parse_config_str(text: &str, path: &Path, base: &Path) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        line: e
            .span()
            .map_or(0, |s| text[..s.start].matches('\n').count() + 1),
        message: e.message().to_string(),
    })?;
    resolve(raw, base)
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Validation(msg.into()))
}

fn resolve(raw: RawConfig, base: &Path) -> Result<Config, ConfigError> {
    let initial = match raw.initial {
        RawInitial::Line => InitialSpec::Line,
        RawInitial::Arc { bulge } => InitialSpec::Arc { bulge },
        RawInitial::PerturbedLine {
            amplitude,
            mode,
            seed,
        } => InitialSpec::PerturbedLine {
            amplitude,
            mode,
            seed,
        },
        RawInitial::File { path } => InitialSpec::File {
            path: base.join(path),
        },
    };
    let from_file = matches!(initial, InitialSpec::File { .. });

    let Some(lambda) = raw.lambda else {
        return invalid("lambda is required");
    };
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return invalid(format!("lambda >= 0 is required (length weight), got {lambda}"));
    }
    if !from_file {
        for (name, present) in [
            ("dim", raw.dim.is_some()),
            ("n", raw.n.is_some()),
            ("f_minus", raw.f_minus.is_some()),
            ("f_plus", raw.f_plus.is_some()),
        ] {
            if !present {
                return invalid(format!("{name} is required for a generated initial curve"));
            }
        }
    }
    if let Some(dim) = raw.dim {
        if dim < 2 {
            return invalid(format!("dim >= 2 is required, got {dim}"));
        }
        for (name, p) in [("f_minus", &raw.f_minus), ("f_plus", &raw.f_plus), ("zeta", &raw.zeta)] {
            if let Some(p) = p {
                if p.len() != dim {
                    return invalid(format!("{name} has {} entries, dim is {dim}", p.len()));
                }
            }
        }
    }
    if let Some(n) = raw.n {
        if n < 4 {
            return invalid(format!("n >= 4 is required, got {n}"));
        }
    }
    if let (Some(a), Some(b)) = (&raw.f_minus, &raw.f_plus) {
        if a.len() != b.len() {
            return invalid("f_minus and f_plus have different dimensions");
        }
        if a == b {
            return invalid("endpoints must differ: f_plus != f_minus is required");
        }
        if a.iter().chain(b).any(|v| !v.is_finite()) {
            return invalid("endpoints must be finite");
        }
    }
    match &initial {
        InitialSpec::PerturbedLine { amplitude, mode, .. } => {
            if !(*amplitude >= 0.0) {
                return invalid(format!("amplitude >= 0 is required, got {amplitude}"));
            }
            if *mode == 0 {
                return invalid("perturbation mode must be >= 1");
            }
        }
        InitialSpec::Arc { bulge } if !bulge.is_finite() => return invalid("bulge must be finite"),
        _ => {}
    }

    let dim = raw.dim.or(raw.f_minus.as_ref().map(Vec::len));
    let zeta = match (raw.zeta, dim) {
        (Some(z), _) => z,
        (None, Some(d)) => vec![0.0; d],
        // Filled in once the file's dimension is known.
        (None, None) => Vec::new(),
    };
    let params = FlowParams {
        lambda,
        zeta,
    };

    let f = raw.flow;
    let integrator = f.integrator.unwrap_or(Integrator::SemiImplicit);
    let dt_mode = match (f.dt, f.safety) {
        (Some(_), Some(_)) => return invalid("set either flow.dt or flow.safety, not both"),
        (Some(dt), None) => DtMode::Fixed(dt),
        (None, s) => DtMode::Cfl {
            safety: s.unwrap_or(integrator.default_safety()),
        },
    };
    let mut flow = FlowConfig::new(params);
    flow.integrator = integrator;
    flow.velocity_mode = f.velocity_mode.unwrap_or(VelocityMode::Normal);
    flow.dt_mode = dt_mode;
    flow.t_end = f.t_end.unwrap_or(f64::INFINITY);
    flow.max_steps = f.max_steps.unwrap_or(100_000);
    flow.stationarity_tol = f.stationarity_tol;
    flow.redistribute_every = f.redistribute_every;
    flow.h_min_factor = f.h_min_factor.unwrap_or(1e-3);
    flow.snapshot_every = raw.output.snapshot_every.unwrap_or(0);
    flow.validate_bc0 = raw.validation.validate_bc0.unwrap_or(false);
    flow.bc0_tol = raw.validation.bc0_tol.unwrap_or(1e-3);
    if !flow.params.zeta.is_empty() {
        flow.validate().map_err(|e| ConfigError::Validation(e.to_string()))?;
    }

    Ok(Config {
        dim,
        n: raw.n,
        f_minus: raw.f_minus,
        f_plus: raw.f_plus,
        initial,
        flow,
        output_dir: base.join(raw.output.dir.unwrap_or_else(|| PathBuf::from("out"))),
    })
}
