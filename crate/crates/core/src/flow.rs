//! Time integration of the mass-lumped gradient flow with clamped endpoints.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::{BandedError, SymBanded};
use crate::diagnostics::{
    bounds_audit, dissipation_audit, RunReport, SeriesRow, Snapshot, Termination, Violation,
};
use crate::energy::{
    energy_from_cache, gradient_from_cache, natural_bc_residual_from_cache,
    stationarity_residual_from_cache, EnergyError, FlowParams,
};
use crate::geometry::{
    build_cache, dot, lp_norm_interior, project_rows, reparametrize_arclength, DiscreteCurve,
    GeometryCache, GeometryError, VertexField,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("edge {edge} shrank to {length:e}, below the guard {guard:e}")]
    MeshCollapse { edge: usize, length: f64, guard: f64 },
    #[error("vertex {0} left the finite range")]
    NonFinite(usize),
    #[error("linear solve failed: {0}")]
    SolverSingular(#[from] BandedError),
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("initial boundary residual {residual:e} exceeds tolerance {tol:e}")]
    IncompatibleInitialData { residual: f64, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityMode {
    /// Tangential part of the discrete gradient removed at every vertex.
    Normal,
    /// Full mass-lumped discrete gradient.
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtMode {
    Fixed(f64),
    Cfl { safety: f64 },
}

impl Integrator {
    /// Default CFL safety factor. Forward Euler loses stability slightly
    /// above 0.125 on uniform meshes.
    pub fn default_safety(self) -> f64 {
        match self {
            Integrator::Explicit => 0.05,
            Integrator::SemiImplicit => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub params: FlowParams,
    pub integrator: Integrator,
    pub velocity_mode: VelocityMode,
    pub dt_mode: DtMode,
    pub t_end: f64,
    pub max_steps: usize,
    /// `None` means `1e-6 (1 + W(f_0))`.
    pub stationarity_tol: Option<f64>,
    /// `None` picks 50 in normal mode and 0 (never) in gradient mode.
    pub redistribute_every: Option<usize>,
    pub h_min_factor: f64,
    /// Keep every k-th state in the report; 0 keeps only the first and last.
    pub snapshot_every: usize,
    pub validate_bc0: bool,
    pub bc0_tol: f64,
}

impl FlowConfig {
    pub fn new(params: FlowParams) -> Self {
        let integrator = Integrator::SemiImplicit;
        Self {
            params,
            integrator,
            velocity_mode: VelocityMode::Normal,
            dt_mode: DtMode::Cfl {
                safety: integrator.default_safety(),
            },
            t_end: f64::INFINITY,
            max_steps: 100_000,
            stationarity_tol: None,
            redistribute_every: None,
            h_min_factor: 1e-3,
            snapshot_every: 0,
            validate_bc0: false,
            bc0_tol: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        self.params.validate()?;
        let bad = |m: &str| Err(FlowError::InvalidConfig(m.to_string()));
        match self.dt_mode {
            DtMode::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => return bad("dt must be positive"),
            DtMode::Cfl { safety } if !(safety > 0.0 && safety <= 1.0) => {
                return bad("safety must lie in (0, 1]")
            }
            _ => {}
        }
        if !(self.t_end > 0.0) {
            return bad("t_end must be positive");
        }
        if self.max_steps == 0 && self.t_end.is_infinite() {
            return bad("either t_end or max_steps must bound the run");
        }
        if let Some(tol) = self.stationarity_tol {
            if !(tol > 0.0) {
                return bad("stationarity_tol must be positive");
            }
        }
        if !(self.h_min_factor >= 0.0 && self.h_min_factor < 1.0) {
            return bad("h_min_factor must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn redistribute_interval(&self) -> usize {
        self.redistribute_every.unwrap_or(match self.velocity_mode {
            VelocityMode::Normal => 50,
            VelocityMode::Gradient => 0,
        })
    }

    pub fn resolved_stationarity_tol(&self, initial_energy: f64) -> f64 {
        self.stationarity_tol
            .unwrap_or(1e-6 * (1.0 + initial_energy.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub step_index: usize,
    pub curve: DiscreteCurve,
    pub cache: GeometryCache,
    /// Velocity of the last step, or the descent velocity for a fresh state.
    pub velocity: VertexField,
    pub mode: VelocityMode,
}

impl FlowState {
    pub fn new(curve: DiscreteCurve, config: &FlowConfig) -> Result<Self, FlowError> {
        config.params.check_dim(curve.dim())?;
        let cache = build_cache(&curve);
        let mut state = Self {
            t: 0.0,
            step_index: 0,
            velocity: VertexField::zeros(curve.num_vertices(), curve.dim()),
            curve,
            cache,
            mode: config.velocity_mode,
        };
        state.velocity = compute_velocity(&state, config);
        Ok(state)
    }

    fn advanced(&self, delta: Array2<f64>, dt: f64, config: &FlowConfig) -> Result<Self, FlowError> {
        let mut x = self.curve.vertices().to_owned();
        let n = self.curve.num_edges();
        for i in 1..n {
            for c in 0..x.ncols() {
                x[[i, c]] += delta[[i, c]];
            }
            if x.row(i).iter().any(|v| !v.is_finite()) {
                return Err(FlowError::NonFinite(i));
            }
        }
        let curve = DiscreteCurve::new(x)?;
        let cache = build_cache(&curve);
        check_mesh(&cache, config.h_min_factor)?;
        Ok(Self {
            t: self.t + dt,
            step_index: self.step_index + 1,
            velocity: VertexField::from_array(delta / dt),
            curve,
            cache,
            mode: self.mode,
        })
    }

    /// Replaces the curve by its equal-arc-length resampling.
    pub fn redistribute(&mut self, config: &FlowConfig) -> Result<(), FlowError> {
        self.curve = reparametrize_arclength(&self.curve, self.curve.num_edges())?;
        self.cache = build_cache(&self.curve);
        self.velocity = compute_velocity(self, config);
        Ok(())
    }
}

fn check_mesh(cache: &GeometryCache, factor: f64) -> Result<(), FlowError> {
    let guard = factor * cache.total_length() / cache.num_edges() as f64;
    for (edge, &length) in cache.edge_lengths().iter().enumerate() {
        if length < guard {
            return Err(FlowError::MeshCollapse { edge, length, guard });
        }
    }
    Ok(())
}

/// Mass-lumped descent velocity `-g_i / ds_i`, optionally projected onto the
/// normal space; endpoint rows are zero.
pub fn compute_velocity(state: &FlowState, config: &FlowConfig) -> VertexField {
    let g = gradient_from_cache(&state.cache, &config.params).into_field();
    let mut v = g.into_array();
    let w = state.cache.vertex_weights();
    for (i, mut row) in v.outer_iter_mut().enumerate() {
        row.mapv_inplace(|x| -x / w[i]);
    }
    apply_mode(&mut v, &state.cache, config.velocity_mode);
    VertexField::from_array(v)
}

fn apply_mode(v: &mut Array2<f64>, cache: &GeometryCache, mode: VelocityMode) {
    if mode == VelocityMode::Normal {
        project_rows(v, cache);
    }
    let n = cache.num_edges();
    v.row_mut(0).fill(0.0);
    v.row_mut(n).fill(0.0);
}

pub fn explicit_step(state: &FlowState, config: &FlowConfig, dt: f64) -> Result<FlowState, FlowError> {
    check_dt(dt)?;
    let v = compute_velocity(state, config);
    state.advanced(v.into_array() * dt, dt, config)
}

/// Linearly implicit Euler step: the bending part is treated through its
/// Hessian with edge lengths frozen, which is the same scalar pentadiagonal
/// matrix for every coordinate.
pub fn semi_implicit_step(
    state: &FlowState,
    config: &FlowConfig,
    dt: f64,
) -> Result<FlowState, FlowError> {
    check_dt(dt)?;
    let cache = &state.cache;
    let n = cache.num_edges();
    let h = cache.edge_lengths();
    let w = cache.vertex_weights();
    let unknowns = n - 1;

    let mut a = SymBanded::zeros(unknowns, 2);
    for j in 1..n {
        a.add(j - 1, j - 1, w[j] / dt);
    }
    for i in 1..n {
        let coeff = [1.0 / h[i - 1], -1.0 / h[i] - 1.0 / h[i - 1], 1.0 / h[i]];
        let scale = 2.0 / (h[i - 1] + h[i]);
        for (p, cp) in coeff.iter().enumerate() {
            let vp = i + p - 1;
            if vp == 0 || vp == n {
                continue;
            }
            for (q, cq) in coeff.iter().enumerate().take(p + 1) {
                let vq = i + q - 1;
                if vq == 0 || vq == n {
                    continue;
                }
                a.add(vp - 1, vq - 1, scale * cp * cq);
            }
        }
    }
    let chol = a.factor()?;

    let g = gradient_from_cache(cache, &config.params);
    let dim = cache.dim();
    let mut delta = Array2::zeros((n + 1, dim));
    let mut rhs = vec![0.0; unknowns];
    for c in 0..dim {
        for j in 1..n {
            rhs[j - 1] = -g.values()[[j, c]];
        }
        chol.solve_in_place(&mut rhs)?;
        for j in 1..n {
            delta[[j, c]] = rhs[j - 1];
        }
    }
    apply_mode(&mut delta, cache, config.velocity_mode);
    state.advanced(delta, dt, config)
}

fn check_dt(dt: f64) -> Result<(), FlowError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(FlowError::InvalidConfig(format!("time step must be positive, got {dt}")))
    }
}

/// CFL time step for the configured integrator; the fixed step otherwise.
pub fn select_dt(state: &FlowState, config: &FlowConfig) -> f64 {
    let safety = match config.dt_mode {
        DtMode::Fixed(dt) => return dt,
        DtMode::Cfl { safety } => safety,
    };
    cfl_dt(&state.cache, config.integrator, safety)
}

pub fn cfl_dt(cache: &GeometryCache, integrator: Integrator, safety: f64) -> f64 {
    let h = cache.min_edge();
    match integrator {
        Integrator::Explicit => {
            let k = cache.curvature_field().max_norm();
            let l = cache.total_length();
            safety * h.powi(4) / (1.0 + k * k * l * l)
        }
        Integrator::SemiImplicit => safety * h * h,
    }
}

pub fn step(state: &FlowState, config: &FlowConfig, dt: f64) -> Result<FlowState, FlowError> {
    match config.integrator {
        Integrator::Explicit => explicit_step(state, config, dt),
        Integrator::SemiImplicit => semi_implicit_step(state, config, dt),
    }
}

/// `||V||_{L2}` used for termination and the dissipation identity: the
/// stencil evaluation of the continuum velocity when the mesh supports it,
/// otherwise the discrete descent velocity.
pub fn velocity_l2(state: &FlowState, config: &FlowConfig) -> f64 {
    match stationarity_residual_from_cache(&state.cache, &config.params) {
        Ok((_, v)) => v,
        Err(_) => lp_norm_interior(&compute_velocity(state, config), &state.cache, 2.0),
    }
}

pub fn series_row(state: &FlowState, config: &FlowConfig) -> SeriesRow {
    let e = energy_from_cache(&state.cache, &config.params);
    let bc = natural_bc_residual_from_cache(&state.cache, &config.params);
    SeriesRow {
        step: state.step_index,
        t: state.t,
        total: e.total,
        bending: e.bending,
        coupling: e.coupling,
        length: e.length,
        v_l2: velocity_l2(state, config),
        bc0: bc[0],
        bc1: bc[1],
        min_h: state.cache.min_edge(),
    }
}

/// Per-step energy increase tolerance relative to `|W|`.
pub fn dissipation_tolerance(mode: VelocityMode) -> f64 {
    match mode {
        VelocityMode::Gradient => 1e-12,
        VelocityMode::Normal => 1e-8,
    }
}

/// Runs the flow until stationarity, `t_end`, `max_steps` or a step failure.
pub fn run(initial: DiscreteCurve, config: &FlowConfig) -> Result<RunReport, FlowError> {
    config.validate()?;
    let mut state = FlowState::new(initial, config)?;
    let bc0 = natural_bc_residual_from_cache(&state.cache, &config.params);
    if config.validate_bc0 {
        let residual = bc0[0].max(bc0[1]);
        if !(residual <= config.bc0_tol) {
            return Err(FlowError::IncompatibleInitialData {
                residual,
                tol: config.bc0_tol,
            });
        }
    }
    let chord = state.curve.chord();
    let first = series_row(&state, config);
    let w0 = first.total;
    let tol = config.resolved_stationarity_tol(w0);
    let remesh_every = config.redistribute_interval();

    let mut series = vec![first];
    let mut snapshots = vec![Snapshot::of(&state, &series[0])];
    let mut remesh_steps = Vec::new();

    let termination = loop {
        let last = series.last().expect("series is never empty");
        if last.v_l2 <= tol {
            break Termination::Stationary;
        }
        if state.t >= config.t_end {
            break Termination::TEnd;
        }
        if state.step_index >= config.max_steps {
            break Termination::MaxSteps;
        }
        let mut dt = select_dt(&state, config);
        if state.t + dt > config.t_end {
            dt = config.t_end - state.t;
        }
        let mut next = match step(&state, config, dt) {
            Ok(s) => s,
            Err(e) => break Termination::Error(e.to_string()),
        };
        if next.t > config.t_end * (1.0 - 4.0 * f64::EPSILON) {
            next.t = config.t_end;
        }
        if remesh_every > 0 && next.step_index % remesh_every == 0 {
            if let Err(e) = next.redistribute(config) {
                break Termination::Error(e.to_string());
            }
            remesh_steps.push(next.step_index);
        }
        state = next;
        let row = series_row(&state, config);
        if !row.total.is_finite() || !row.v_l2.is_finite() {
            series.push(row);
            break Termination::Error(FlowError::NonFinite(0).to_string());
        }
        if config.snapshot_every > 0 && state.step_index % config.snapshot_every == 0 {
            snapshots.push(Snapshot::of(&state, &row));
        }
        series.push(row);
    };

    let last_row = series.last().expect("series is never empty");
    if snapshots.last().map(|s| s.step) != Some(last_row.step) {
        snapshots.push(Snapshot::of(&state, last_row));
    }
    let mut violations: Vec<Violation> = Vec::new();
    if let Ok(d) = dissipation_audit(
        &series,
        dissipation_tolerance(config.velocity_mode),
        &remesh_steps,
    ) {
        violations.extend(d.violations);
    }
    if let Ok(b) = bounds_audit(&series, &config.params, w0, chord) {
        violations.extend(b.violations);
    }
    Ok(RunReport {
        series,
        violations,
        termination,
        final_curve: state.curve,
        snapshots,
        remesh_steps,
        initial_energy: w0,
        chord,
        stationarity_tol: tol,
        params: config.params.clone(),
        integrator: config.integrator,
        velocity_mode: config.velocity_mode,
    })
}

/// Tangential component of a velocity field at interior vertices, largest
/// absolute value.
pub fn max_tangential(v: &VertexField, cache: &GeometryCache) -> f64 {
    (1..cache.num_edges())
        .map(|i| dot(&v.row(i), &cache.tangent(i)).abs())
        .fold(0.0, f64::max)
}
