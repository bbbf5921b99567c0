//! Subcommand implementations. Each returns a process exit code:
//! 0 success, 1 failed audit, 2 step limit reached, 3 failed run,
//! 4 bad input or I/O failure.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use curveflow::diagnostics::{
    bounds_audit, corpus, curvature_norm_series, dissipation_audit, identity_residuals,
    interpolation_audit, sup_bound_audit, AuditReport, BoundsReport, CurvatureNormTable,
    DissipationReport, IdentityReport, RunReport, RunSummary, Termination,
};
use curveflow::flow::{dissipation_tolerance, run, FlowError, VelocityMode};
use curveflow::geometry::{build_cache, DiscreteCurve};
use curveflow::io::{
    list_snapshots, read_json, read_series_csv, read_snapshot, write_json, write_series_csv,
    write_snapshot, IoError,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{parse_config, parse_config_str, ConfigError, OUTPUT_ENV};
use crate::initial::{build_initial, InitialError};
use crate::svg;

pub const EXIT_OK: u8 = 0;
pub const EXIT_AUDIT_FAIL: u8 = 1;
pub const EXIT_MAX_STEPS: u8 = 2;
pub const EXIT_RUN_ERROR: u8 = 3;
pub const EXIT_INPUT: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Initial(#[from] InitialError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("invalid audit spec: {0}")]
    Spec(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Flow(_) => EXIT_RUN_ERROR,
            _ => EXIT_INPUT,
        }
    }
}

pub fn exit_code(termination: &Termination) -> u8 {
    match termination {
        Termination::Stationary | Termination::TEnd => EXIT_OK,
        Termination::MaxSteps => EXIT_MAX_STEPS,
        Termination::Error(_) => EXIT_RUN_ERROR,
    }
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Fs {
        path: path.to_path_buf(),
        source,
    }
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunFile {
    #[serde(flatten)]
    pub summary: RunSummary,
    pub dim: usize,
    pub num_edges: usize,
    pub snapshot_steps: Vec<usize>,
    pub curvature_norms: Option<CurvatureNormTable>,
}

pub fn cmd_run(config_path: &Path) -> u8 {
    match parse_config(config_path)
        .map_err(CliError::from)
        .and_then(|c| run_config(&c))
    {
        Ok(report) => {
            let code = exit_code(&report.termination);
            let last = report.series.last().expect("series is never empty");
            println!(
                "{}: {} after {} steps, W = {:.12e}, |V| = {:.3e}",
                config_path.display(),
                report.termination.as_str(),
                last.step,
                last.total,
                last.v_l2
            );
            if let Termination::Error(e) = &report.termination {
                eprintln!("error: {e}");
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

/// Runs a parsed config and writes all outputs into its output directory.
pub fn run_config(config: &crate::config::Config) -> Result<RunReport, CliError> {
    let initial = build_initial(config)?;
    let mut flow = config.flow.clone();
    if flow.params.zeta.is_empty() {
        flow.params.zeta = vec![0.0; initial.dim()];
    }
    flow.validate()?;
    let report = run(initial, &flow)?;
    write_outputs(&config.output_dir, &report)?;
    Ok(report)
}

pub fn write_outputs(dir: &Path, report: &RunReport) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(fs_err(dir))?;
    for step in list_snapshots(dir)? {
        let stem = curveflow::io::snapshot_stem(step);
        for ext in ["csv", "json"] {
            let p = dir.join(format!("{stem}.{ext}"));
            if p.exists() {
                std::fs::remove_file(&p).map_err(fs_err(&p))?;
            }
        }
    }
    write_series_csv(&dir.join("series.csv"), &report.series)?;
    for snap in &report.snapshots {
        write_snapshot(dir, snap)?;
    }
    let curves: Vec<DiscreteCurve> = report.snapshots.iter().map(|s| s.curve.clone()).collect();
    let l_max = curves
        .iter()
        .map(|c| build_cache(c).stencil_budget())
        .min()
        .unwrap_or(0)
        .min(2);
    let file = RunFile {
        summary: report.summary(),
        dim: report.final_curve.dim(),
        num_edges: report.final_curve.num_edges(),
        snapshot_steps: report.snapshots.iter().map(|s| s.step).collect(),
        curvature_norms: curvature_norm_series(&curves, l_max).ok(),
    };
    write_json(&dir.join("report.json"), &file)?;
    let labelled: Vec<(String, &DiscreteCurve)> = svg::pick(&report.snapshots, 8)
        .into_iter()
        .map(|s| (format!("step {} t = {:.4e}", s.step, s.t), &s.curve))
        .collect();
    let refs: Vec<(&str, &DiscreteCurve)> =
        labelled.iter().map(|(l, c)| (l.as_str(), *c)).collect();
    let path = dir.join("curves.svg");
    std::fs::write(&path, svg::render(&refs)).map_err(fs_err(&path))?;
    Ok(())
}

/// Contents of `check.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckFile {
    pub pass: bool,
    pub dissipation: Option<DissipationReport>,
    pub bounds: BoundsReport,
    pub identities: Vec<IdentityReport>,
    pub curvature_norms: Option<CurvatureNormTable>,
}

pub fn cmd_check(dir: &Path) -> u8 {
    match check_dir(dir) {
        Ok(c) => {
            let violations = c.bounds.violations.len()
                + c.dissipation.as_ref().map_or(0, |d| d.violations.len());
            println!(
                "{}: {} ({violations} violations, {} identity pairs)",
                dir.display(),
                if c.pass { "pass" } else { "fail" },
                c.identities.len()
            );
            for v in c
                .dissipation
                .iter()
                .flat_map(|d| &d.violations)
                .chain(&c.bounds.violations)
            {
                println!("  step {} {} {:e}", v.step, v.invariant, v.magnitude);
            }
            if c.pass {
                EXIT_OK
            } else {
                EXIT_AUDIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

pub fn check_dir(dir: &Path) -> Result<CheckFile, CliError> {
    let series_path = dir.join("series.csv");
    let report_path = dir.join("report.json");
    if !series_path.is_file() || !report_path.is_file() {
        return Err(CliError::MissingData(format!(
            "{} needs series.csv and report.json",
            dir.display()
        )));
    }
    let series = read_series_csv(&series_path)?;
    if series.is_empty() {
        return Err(CliError::MissingData("series.csv has no rows".into()));
    }
    let run: RunFile = read_json(&report_path)?;
    let s = &run.summary;
    let params = curveflow::energy::FlowParams {
        lambda: s.lambda,
        zeta: s.zeta.clone(),
    };
    let dissipation = if series.len() >= 2 {
        Some(
            dissipation_audit(&series, dissipation_tolerance(s.velocity_mode), &s.remesh_steps)
                .map_err(|e| CliError::MissingData(e.to_string()))?,
        )
    } else {
        None
    };
    let bounds = bounds_audit(&series, &params, s.initial_energy, s.chord)
        .map_err(|e| CliError::MissingData(e.to_string()))?;

    let steps = list_snapshots(dir)?;
    let mut curves = Vec::with_capacity(steps.len());
    let mut times = Vec::with_capacity(steps.len());
    for &step in &steps {
        let (curve, meta) = read_snapshot(dir, step)?;
        curves.push(curve);
        times.push(meta.t);
    }
    let mut identities = Vec::new();
    if s.velocity_mode == VelocityMode::Normal {
        for k in 1..steps.len() {
            if steps[k] != steps[k - 1] + 1 || s.remesh_steps.contains(&steps[k]) {
                continue;
            }
            if let Ok(r) = identity_residuals(&curves[k - 1], &curves[k], times[k] - times[k - 1]) {
                identities.push(r);
            }
        }
    }
    let l_max = curves
        .iter()
        .map(|c| build_cache(c).stencil_budget())
        .min()
        .unwrap_or(0)
        .min(2);
    let curvature_norms = curvature_norm_series(&curves, l_max).ok();

    let pass = dissipation.as_ref().is_none_or(|d| d.violations.is_empty())
        && bounds.violations.is_empty()
        && curvature_norms.as_ref().is_none_or(|t| t.bounded);
    let out = CheckFile {
        pass,
        dissipation,
        bounds,
        identities,
        curvature_norms,
    };
    write_json(&dir.join("check.json"), &out)?;
    Ok(out)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "inequality", rename_all = "snake_case", deny_unknown_fields)]
pub enum AuditSpec {
    SupBound {
        seed: u64,
        corpus_size: usize,
        #[serde(default = "default_samples")]
        n: usize,
        #[serde(default = "default_degree")]
        degree: usize,
        output: Option<PathBuf>,
    },
    Interpolation {
        seed: u64,
        corpus_size: usize,
        #[serde(default = "default_edges")]
        n: usize,
        k: usize,
        i: usize,
        #[serde(default = "default_p")]
        p: f64,
        output: Option<PathBuf>,
    },
}

fn default_samples() -> usize {
    256
}
fn default_degree() -> usize {
    8
}
fn default_edges() -> usize {
    64
}
fn default_p() -> f64 {
    2.0
}

/// Relative drift of the interpolation constant allowed under `n -> 2n`.
pub const REFINEMENT_RTOL: f64 = 0.2;

pub fn cmd_audit(spec_path: &Path) -> u8 {
    match audit_from_file(spec_path) {
        Ok((report, path)) => {
            println!(
                "{}: {} constant {:.6} worst {} -> {}",
                report.id,
                if report.pass { "pass" } else { "fail" },
                report.empirical_constant,
                report.worst_case,
                path.display()
            );
            if report.pass {
                EXIT_OK
            } else {
                EXIT_AUDIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn audit_from_file(spec_path: &Path) -> Result<(AuditReport, PathBuf), CliError> {
    let text = std::fs::read_to_string(spec_path).map_err(fs_err(spec_path))?;
    let spec: AuditSpec = toml::from_str(&text).map_err(|e| CliError::Spec(e.to_string()))?;
    let report = run_audit(&spec)?;
    let name = match &spec {
        AuditSpec::SupBound { output, .. } | AuditSpec::Interpolation { output, .. } => output
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.json", report.id))),
    };
    let base = match std::env::var_os(OUTPUT_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => spec_path.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    std::fs::create_dir_all(&base).map_err(fs_err(&base))?;
    let path = base.join(name);
    write_json(&path, &report)?;
    Ok((report, path))
}

pub fn run_audit(spec: &AuditSpec) -> Result<AuditReport, CliError> {
    let spec_err = |e: curveflow::diagnostics::AuditError| CliError::Spec(e.to_string());
    match *spec {
        AuditSpec::SupBound {
            seed,
            corpus_size,
            n,
            degree,
            ..
        } => {
            if corpus_size == 0 || n < 1 {
                return Err(CliError::Spec("corpus_size and n must be positive".into()));
            }
            let polys = corpus::random_trig_polynomials(seed, corpus_size, degree);
            sup_bound_audit(&corpus::sample_fields(&polys, n)).map_err(spec_err)
        }
        AuditSpec::Interpolation {
            seed,
            corpus_size,
            n,
            k,
            i,
            p,
            ..
        } => {
            if corpus_size == 0 {
                return Err(CliError::Spec("corpus_size must be positive".into()));
            }
            let arcs = corpus::random_arcs(seed, corpus_size);
            let sample = |n| corpus::sample_arcs(&arcs, n).map_err(|e| CliError::Spec(e.to_string()));
            let mut report = interpolation_audit(&sample(n)?, k, i, p).map_err(spec_err)?;
            let refined = interpolation_audit(&sample(2 * n)?, k, i, p).map_err(spec_err)?;
            let drift = (refined.empirical_constant - report.empirical_constant).abs()
                / report.empirical_constant;
            report.pass &= refined.pass && drift <= REFINEMENT_RTOL;
            report.details.push(serde_json::json!({
                "case": "refinement",
                "n": n,
                "refined_n": 2 * n,
                "refined_constant": refined.empirical_constant,
                "relative_drift": drift,
            }));
            Ok(report)
        }
    }
}

pub fn cmd_sweep(pattern: &str) -> u8 {
    let paths: Vec<PathBuf> = match glob::glob(pattern) {
        Ok(it) => it.filter_map(Result::ok).collect(),
        Err(e) => {
            eprintln!("error: bad pattern: {e}");
            return EXIT_INPUT;
        }
    };
    if paths.is_empty() {
        eprintln!("error: no config matches {pattern}");
        return EXIT_INPUT;
    }
    let env_base = std::env::var_os(OUTPUT_ENV).map(PathBuf::from);
    let mut configs = Vec::new();
    for path in &paths {
        let parsed = std::fs::read_to_string(path)
            .map_err(fs_err(path))
            .and_then(|text| {
                let base = path.parent().unwrap_or(Path::new("."));
                parse_config_str(&text, path, base).map_err(CliError::from)
            });
        match parsed {
            Ok(mut c) => {
                if let Some(b) = &env_base {
                    let stem = path.file_stem().unwrap_or_default();
                    c.output_dir = b.join(stem);
                }
                configs.push((path.clone(), c));
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
        }
    }
    let mut seen = HashSet::new();
    for (path, c) in &configs {
        if !seen.insert(c.output_dir.clone()) {
            eprintln!(
                "error: {} shares output directory {} with another config",
                path.display(),
                c.output_dir.display()
            );
            return EXIT_INPUT;
        }
    }
    let codes: Vec<u8> = configs
        .par_iter()
        .map(|(path, c)| match run_config(c) {
            Ok(r) => {
                println!("{}: {}", path.display(), r.termination.as_str());
                exit_code(&r.termination)
            }
            Err(e) => {
                eprintln!("{}: error: {e}", path.display());
                e.code()
            }
        })
        .collect();
    codes.into_iter().max().unwrap_or(EXIT_OK)
}
