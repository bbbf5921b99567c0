//! Trajectory audits, curvature norm series and inequality audits over
//! random corpora. Every audit is a pure function of recorded data.

pub mod corpus;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::energy::FlowParams;
use crate::flow::{FlowState, Integrator, VelocityMode};
use crate::geometry::{
    build_cache, dot, lp_norm, lp_norm_interior, nabla_s, nabla_s_pow, norm, partial_s,
    partial_s_pow, scale_invariant_norm, scaled_derivative_norm, DiscreteCurve, GeometryCache,
    GeometryError, VertexField,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("curve {0} has zero curvature; the ratio is undefined")]
    ZeroCurvature(String),
    #[error("evolution identities assume normal motion, got a gradient-mode state")]
    ModeMismatch,
    #[error("states have {before} and {after} edges")]
    VertexCountMismatch { before: usize, after: usize },
    #[error("invalid audit parameters: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One line of `series.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub step: usize,
    pub t: f64,
    pub total: f64,
    pub bending: f64,
    pub coupling: f64,
    pub length: f64,
    pub v_l2: f64,
    pub bc0: f64,
    pub bc1: f64,
    pub min_h: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Stationary,
    TEnd,
    MaxSteps,
    Error(String),
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Stationary => "stationary",
            Termination::TEnd => "t_end",
            Termination::MaxSteps => "max_steps",
            Termination::Error(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub step: usize,
    pub invariant: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub curve: DiscreteCurve,
    pub row: SeriesRow,
}

impl Snapshot {
    pub fn of(state: &FlowState, row: &SeriesRow) -> Self {
        Self {
            step: state.step_index,
            t: state.t,
            curve: state.curve.clone(),
            row: *row,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub series: Vec<SeriesRow>,
    pub violations: Vec<Violation>,
    pub termination: Termination,
    pub final_curve: DiscreteCurve,
    pub snapshots: Vec<Snapshot>,
    pub remesh_steps: Vec<usize>,
    pub initial_energy: f64,
    pub chord: f64,
    pub stationarity_tol: f64,
    pub params: FlowParams,
    pub integrator: Integrator,
    pub velocity_mode: VelocityMode,
}

/// Everything in a [`RunReport`] except curves and the series, for `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub termination: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub steps: usize,
    pub t: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_v_l2: f64,
    pub final_bc_residual: [f64; 2],
    pub chord: f64,
    pub stationarity_tol: f64,
    pub lambda: f64,
    pub zeta: Vec<f64>,
    pub integrator: Integrator,
    pub velocity_mode: VelocityMode,
    pub remesh_steps: Vec<usize>,
    pub violations: Vec<Violation>,
}

impl RunReport {
    pub fn summary(&self) -> RunSummary {
        let last = self.series.last().expect("series is never empty");
        RunSummary {
            termination: self.termination.as_str().to_string(),
            error: match &self.termination {
                Termination::Error(e) => Some(e.clone()),
                _ => None,
            },
            steps: last.step,
            t: last.t,
            initial_energy: self.initial_energy,
            final_energy: last.total,
            final_v_l2: last.v_l2,
            final_bc_residual: [last.bc0, last.bc1],
            chord: self.chord,
            stationarity_tol: self.stationarity_tol,
            lambda: self.params.lambda,
            zeta: self.params.zeta.clone(),
            integrator: self.integrator,
            velocity_mode: self.velocity_mode,
            remesh_steps: self.remesh_steps.clone(),
            violations: self.violations.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub steps_checked: usize,
    pub violations: Vec<Violation>,
    pub max_increase: f64,
    /// `max_k |(W_k - W_{k-1}) / dt_k + v_l2_{k-1}^2|` over non-remesh steps.
    pub max_identity_residual: f64,
}

/// Flags every step whose energy rises by more than `rel_tol |W|`; steps in
/// `exempt` (redistributions) are skipped.
pub fn dissipation_audit(
    series: &[SeriesRow],
    rel_tol: f64,
    exempt: &[usize],
) -> Result<DissipationReport, AuditError> {
    if series.len() < 2 {
        return Err(AuditError::InsufficientData(format!(
            "dissipation audit needs two rows, got {}",
            series.len()
        )));
    }
    let mut violations = Vec::new();
    let mut max_increase: f64 = 0.0;
    let mut max_identity: f64 = 0.0;
    let mut checked = 0;
    for pair in series.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if exempt.contains(&b.step) {
            continue;
        }
        checked += 1;
        let dw = b.total - a.total;
        max_increase = max_increase.max(dw);
        if !(dw <= rel_tol * a.total.abs()) {
            violations.push(Violation {
                step: b.step,
                invariant: "energy_decrease".into(),
                magnitude: dw,
            });
        }
        let dt = b.t - a.t;
        if dt > 0.0 {
            max_identity = max_identity.max((dw / dt + a.v_l2 * a.v_l2).abs());
        }
    }
    Ok(DissipationReport {
        steps_checked: checked,
        violations,
        max_increase,
        max_identity_residual: max_identity,
    })
}

/// Reduction factor of the dissipation identity residual between a coarse
/// and a refined series.
pub fn dissipation_refinement(
    coarse: &[SeriesRow],
    fine: &[SeriesRow],
    exempt_coarse: &[usize],
    exempt_fine: &[usize],
) -> Result<f64, AuditError> {
    let a = dissipation_audit(coarse, f64::INFINITY, exempt_coarse)?;
    let b = dissipation_audit(fine, f64::INFINITY, exempt_fine)?;
    Ok(a.max_identity_residual / b.max_identity_residual)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub steps_checked: usize,
    pub violations: Vec<Violation>,
    pub min_length_margin: f64,
    /// `None` when `lambda = 0` and no upper length bound exists.
    pub max_length_over_bound: Option<f64>,
    pub max_curvature_over_bound: f64,
}

/// Relative slack on `L >= chord`, covering rounding of the edge sum.
pub const LENGTH_LOWER_RTOL: f64 = 1e-12;
pub const LENGTH_UPPER_TOL: f64 = 1e-8;
pub const CURVATURE_TOL: f64 = 1e-6;

/// Checks `L >= chord`, `L <= W0 / lambda` and
/// `int |kappa|^2 <= 2 (W0 + |<tau, zeta>|_0^1|)` at every row.
pub fn bounds_audit(
    series: &[SeriesRow],
    params: &FlowParams,
    w0: f64,
    chord: f64,
) -> Result<BoundsReport, AuditError> {
    if series.is_empty() {
        return Err(AuditError::InsufficientData("empty series".into()));
    }
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut max_len: Option<f64> = None;
    let mut max_curv = f64::NEG_INFINITY;
    for row in series {
        let margin = row.length - chord;
        min_margin = min_margin.min(margin);
        if margin < -LENGTH_LOWER_RTOL * chord {
            violations.push(Violation {
                step: row.step,
                invariant: "length_lower".into(),
                magnitude: -margin,
            });
        }
        if params.lambda > 0.0 {
            let over = row.length - w0 / params.lambda;
            max_len = Some(max_len.map_or(over, |m: f64| m.max(over)));
            if over > LENGTH_UPPER_TOL {
                violations.push(Violation {
                    step: row.step,
                    invariant: "length_upper".into(),
                    magnitude: over,
                });
            }
        }
        let over = 2.0 * row.bending - 2.0 * (w0 + row.coupling.abs());
        max_curv = max_curv.max(over);
        if over > CURVATURE_TOL {
            violations.push(Violation {
                step: row.step,
                invariant: "curvature_l2".into(),
                magnitude: over,
            });
        }
    }
    Ok(BoundsReport {
        steps_checked: series.len(),
        violations,
        min_length_margin: min_margin,
        max_length_over_bound: max_len,
        max_curvature_over_bound: max_curv,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureNormRow {
    pub nabla_l2: Vec<f64>,
    pub partial_l2: Vec<f64>,
    pub partial_linf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureNormTable {
    pub l_max: usize,
    pub rows: Vec<CurvatureNormRow>,
    pub max_nabla_l2: Vec<f64>,
    pub max_partial_l2: Vec<f64>,
    pub max_partial_linf: Vec<f64>,
    pub bounded: bool,
}

/// `||nabla_s^l kappa||_{L2}`, `||d_s^l kappa||_{L2}` and `||d_s^l kappa||_inf`
/// for `l = 0..=l_max` on every curve.
pub fn curvature_norm_series(
    curves: &[DiscreteCurve],
    l_max: usize,
) -> Result<CurvatureNormTable, AuditError> {
    let mut rows = Vec::with_capacity(curves.len());
    let mut max_n = vec![0.0f64; l_max + 1];
    let mut max_p = vec![0.0f64; l_max + 1];
    let mut max_i = vec![0.0f64; l_max + 1];
    for curve in curves {
        let cache = build_cache(curve);
        cache.check_order(l_max)?;
        let mut nab = cache.curvature_field();
        let mut par = nab.clone();
        let mut row = CurvatureNormRow {
            nabla_l2: Vec::new(),
            partial_l2: Vec::new(),
            partial_linf: Vec::new(),
        };
        for l in 0..=l_max {
            if l > 0 {
                nab = nabla_s(&nab, &cache)?;
                par = partial_s(&par, &cache)?;
            }
            row.nabla_l2.push(lp_norm(&nab, &cache, 2.0));
            row.partial_l2.push(lp_norm(&par, &cache, 2.0));
            row.partial_linf.push(lp_norm(&par, &cache, f64::INFINITY));
            max_n[l] = max_n[l].max(row.nabla_l2[l]);
            max_p[l] = max_p[l].max(row.partial_l2[l]);
            max_i[l] = max_i[l].max(row.partial_linf[l]);
        }
        rows.push(row);
    }
    let bounded = max_n
        .iter()
        .chain(&max_p)
        .chain(&max_i)
        .all(|v| v.is_finite());
    Ok(CurvatureNormTable {
        l_max,
        rows,
        max_nabla_l2: max_n,
        max_partial_l2: max_p,
        max_partial_linf: max_i,
        bounded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub id: String,
    pub corpus_size: usize,
    pub empirical_constant: f64,
    pub worst_case: String,
    pub pass: bool,
    pub details: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedCurve {
    pub name: String,
    pub curve: DiscreteCurve,
}

/// Exponent `alpha = (i + 1/2 - 1/p) / k` of the interpolation inequality.
pub fn interpolation_exponent(k: usize, i: usize, p: f64) -> f64 {
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    (i as f64 + 0.5 - inv_p) / k as f64
}

/// `||nabla_s^i kappa||_p / (||kappa||_2^(1-alpha) ||kappa||_{k,2}^alpha)` in
/// scale-invariant norms.
pub fn interpolation_ratio(
    cache: &GeometryCache,
    k: usize,
    i: usize,
    p: f64,
) -> Result<f64, GeometryError> {
    let alpha = interpolation_exponent(k, i, p);
    let lhs = scaled_derivative_norm(cache, i, p)?;
    let base = scale_invariant_norm(cache, 0, 2.0)?;
    let top = scale_invariant_norm(cache, k, 2.0)?;
    Ok(lhs / (base.powf(1.0 - alpha) * top.powf(alpha)))
}

pub const SCALE_INVARIANCE_RTOL: f64 = 1e-8;

pub fn interpolation_audit(
    corpus: &[NamedCurve],
    k: usize,
    i: usize,
    p: f64,
) -> Result<AuditReport, AuditError> {
    if i >= k {
        return Err(AuditError::InvalidSpec(format!("need i < k, got i = {i}, k = {k}")));
    }
    if !(p >= 2.0) {
        return Err(AuditError::InvalidSpec(format!("need p >= 2, got {p}")));
    }
    if corpus.is_empty() {
        return Err(AuditError::InsufficientData("empty corpus".into()));
    }
    let mut worst = (f64::NEG_INFINITY, String::new());
    let mut details = Vec::with_capacity(corpus.len());
    let mut invariant = true;
    for member in corpus {
        let cache = build_cache(&member.curve);
        if scale_invariant_norm(&cache, 0, 2.0)? == 0.0 {
            return Err(AuditError::ZeroCurvature(member.name.clone()));
        }
        let ratio = interpolation_ratio(&cache, k, i, p)?;
        let mut drift: f64 = 0.0;
        for alpha in [0.5, 2.0] {
            let scaled = member.curve.scaled(alpha)?;
            let r = interpolation_ratio(&build_cache(&scaled), k, i, p)?;
            drift = drift.max((r - ratio).abs() / ratio);
        }
        invariant &= drift <= SCALE_INVARIANCE_RTOL;
        if ratio > worst.0 {
            worst = (ratio, member.name.clone());
        }
        details.push(json!({ "case": member.name, "ratio": ratio, "scale_drift": drift }));
    }
    let constant = worst.0;
    Ok(AuditReport {
        id: format!("interpolation_k{k}_i{i}_p{p}"),
        corpus_size: corpus.len(),
        empirical_constant: constant,
        worst_case: worst.1,
        pass: constant.is_finite() && constant > 0.0 && invariant,
        details,
    })
}

/// Samples of a scalar function on a grid of an interval `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSample {
    pub name: String,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

impl ScalarSample {
    /// `(||g||_inf, ||g'||_{L1}, ||g||_{L1})` of the piecewise-linear interpolant.
    pub fn norms(&self) -> (f64, f64, f64) {
        let g = &self.values;
        let sup = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut var = 0.0;
        let mut l1 = 0.0;
        for j in 0..g.len().saturating_sub(1) {
            let (a, b) = (g[j], g[j + 1]);
            let h = self.x[j + 1] - self.x[j];
            var += (b - a).abs();
            l1 += if a * b >= 0.0 {
                0.5 * (a.abs() + b.abs()) * h
            } else {
                0.5 * (a * a + b * b) / (a.abs() + b.abs()) * h
            };
        }
        (sup, var, l1)
    }
}

/// Relative quadrature slack of the sup bound.
pub const SUP_BOUND_RTOL: f64 = 1e-3;

/// `||g||_inf <= ||g'||_{L1} + ||g||_{L1} / |J|` with constant exactly 1.
pub fn sup_bound_audit(corpus: &[ScalarSample]) -> Result<AuditReport, AuditError> {
    if corpus.is_empty() {
        return Err(AuditError::InsufficientData("empty corpus".into()));
    }
    let mut worst = (f64::NEG_INFINITY, String::new());
    let mut details = Vec::new();
    let mut violations = 0;
    for s in corpus {
        if s.x.len() != s.values.len() || s.x.len() < 2 {
            return Err(AuditError::InvalidSpec(format!("sample {} is malformed", s.name)));
        }
        let width = s.x[s.x.len() - 1] - s.x[0];
        let (sup, var, l1) = s.norms();
        let rhs = var + l1 / width;
        let ratio = if rhs > 0.0 { sup / rhs } else { 0.0 };
        let ok = sup <= rhs + SUP_BOUND_RTOL * sup;
        if !ok {
            violations += 1;
        }
        if ratio > worst.0 {
            worst = (ratio, s.name.clone());
        }
        details.push(json!({ "case": s.name, "sup": sup, "rhs": rhs, "ratio": ratio, "ok": ok }));
    }
    Ok(AuditReport {
        id: "sup_bound_c1".into(),
        corpus_size: corpus.len(),
        empirical_constant: worst.0,
        worst_case: worst.1,
        pass: violations == 0,
        details,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub dt: f64,
    pub num_edges: usize,
    /// `d_t ds + <kappa, V> ds`, interior L2.
    pub arclength: f64,
    /// `d_t |f_x| + <kappa, V> |f_x|` per edge, L2 over edges.
    pub edge_speed: f64,
    /// `d_t tau - nabla_s V`, interior L2.
    pub tangent: f64,
    /// `nabla_t kappa - nabla_s^2 V - <kappa, V> kappa`, interior L2.
    pub curvature: f64,
    /// `d_s kappa - nabla_s kappa + |kappa|^2 tau`, L2 over all vertices.
    pub full_derivative: f64,
    pub full_derivative_max: f64,
}

impl IdentityReport {
    pub fn residuals(&self) -> [(&'static str, f64); 5] {
        [
            ("arclength", self.arclength),
            ("edge_speed", self.edge_speed),
            ("tangent", self.tangent),
            ("curvature", self.curvature),
            ("full_derivative", self.full_derivative),
        ]
    }
}

/// Time-difference check of the evolution identities of a normal flow
/// between two consecutive states.
pub fn identity_audit(
    before: &FlowState,
    after: &FlowState,
    dt: f64,
) -> Result<IdentityReport, AuditError> {
    if before.mode != VelocityMode::Normal || after.mode != VelocityMode::Normal {
        return Err(AuditError::ModeMismatch);
    }
    identity_residuals(&before.curve, &after.curve, dt)
}

/// Identity residuals between two curves a time `dt` apart, assuming normal motion.
pub fn identity_residuals(
    before: &DiscreteCurve,
    after: &DiscreteCurve,
    dt: f64,
) -> Result<IdentityReport, AuditError> {
    let (nb, na) = (before.num_edges(), after.num_edges());
    if nb != na {
        return Err(AuditError::VertexCountMismatch { before: nb, after: na });
    }
    if !(dt > 0.0) {
        return Err(AuditError::InvalidSpec(format!("dt must be positive, got {dt}")));
    }
    let g0 = build_cache(before);
    let g1 = build_cache(after);
    g0.check_order(2)?;
    let n = nb;
    let dim = before.dim();
    let v = VertexField::from_array((after.vertices().to_owned() - before.vertices()) / dt);
    let k0 = g0.curvature();
    let kv: Vec<f64> = (0..=n).map(|i| dot(&k0.row(i), &v.row(i))).collect();

    let w0 = g0.vertex_weights();
    let w1 = g1.vertex_weights();
    let mut ra = VertexField::zeros(n + 1, 1);
    for i in 1..n {
        ra.values_mut()[[i, 0]] = (w1[i] - w0[i]) / (dt * w0[i]) + kv[i];
    }

    let h0 = g0.edge_lengths();
    let h1 = g1.edge_lengths();
    let mut edge_sq = 0.0;
    for j in 0..n {
        let r = (h1[j] - h0[j]) / (dt * h0[j]) + 0.5 * (kv[j] + kv[j + 1]);
        edge_sq += r * r * h0[j];
    }

    let nab_v = nabla_s(&v, &g0)?;
    let rc = VertexField::from_array(
        (g1.vertex_tangents().to_owned() - g0.vertex_tangents()) / dt - nab_v.values(),
    );

    let nab2_v = nabla_s(&nab_v, &g0)?;
    let mut dk = (g1.curvature().to_owned() - k0) / dt;
    crate::geometry::project_rows(&mut dk, &g0);
    for i in 0..=n {
        for c in 0..dim {
            dk[[i, c]] -= nab2_v.values()[[i, c]] + kv[i] * k0[[i, c]];
        }
    }
    let re = VertexField::from_array(dk);

    let q = full_derivative_residual(&g0)?;

    Ok(IdentityReport {
        dt,
        num_edges: n,
        arclength: lp_norm_interior(&ra, &g0, 2.0),
        edge_speed: edge_sq.sqrt(),
        tangent: lp_norm_interior(&rc, &g0, 2.0),
        curvature: lp_norm_interior(&re, &g0, 2.0),
        full_derivative: lp_norm(&q, &g0, 2.0),
        full_derivative_max: q.max_norm(),
    })
}

/// Pointwise `d_s kappa - (nabla_s kappa - |kappa|^2 tau)`.
pub fn full_derivative_residual(cache: &GeometryCache) -> Result<VertexField, GeometryError> {
    let kappa = cache.curvature_field();
    let d = partial_s_pow(&kappa, cache, 1)?;
    let nab = nabla_s_pow(&kappa, cache, 1)?;
    let mut r = d.into_array() - nab.values();
    for i in 0..cache.num_vertices() {
        let kk = norm(&kappa.row(i)).powi(2);
        let tau = cache.tangent(i);
        for c in 0..cache.dim() {
            r[[i, c]] += kk * tau[c];
        }
    }
    Ok(VertexField::from_array(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn row(step: usize, t: f64, total: f64, v: f64) -> SeriesRow {
        SeriesRow {
            step,
            t,
            total,
            bending: 0.0,
            coupling: 0.0,
            length: 1.0,
            v_l2: v,
            bc0: 0.0,
            bc1: 0.0,
            min_h: 0.1,
        }
    }

    fn arc(n: usize, radius: f64) -> DiscreteCurve {
        let pts: Vec<Vec<f64>> = (0..=n)
            .map(|i| {
                let th = 0.4 + 2.0 * i as f64 / n as f64;
                vec![radius * th.cos(), radius * th.sin()]
            })
            .collect();
        DiscreteCurve::from_points(&pts).unwrap()
    }

    #[test]
    fn constant_series_is_clean() {
        let s: Vec<SeriesRow> = (0..5).map(|k| row(k, k as f64, 2.0, 0.0)).collect();
        let r = dissipation_audit(&s, 1e-12, &[]).unwrap();
        assert!(r.violations.is_empty());
        assert_eq!(r.max_identity_residual, 0.0);
        assert!(matches!(
            dissipation_audit(&s[..1], 1e-12, &[]),
            Err(AuditError::InsufficientData(_))
        ));
    }

    #[test]
    fn injected_bump_is_flagged_once() {
        let mut s: Vec<SeriesRow> = (0..10).map(|k| row(k, k as f64, 10.0 - k as f64 * 0.1, 0.3)).collect();
        s[6].total += 0.5;
        let r = dissipation_audit(&s, 1e-12, &[]).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].step, 6);
        let r = dissipation_audit(&s, 1e-12, &[6]).unwrap();
        assert!(r.violations.is_empty());
    }

    #[test]
    fn bounds_branches() {
        let params = FlowParams::new(0.0, vec![0.0, 0.0]).unwrap();
        let mut s = vec![row(0, 0.0, 1.2, 0.0)];
        s[0].length = 1.0;
        let r = bounds_audit(&s, &params, 1.2, 1.0).unwrap();
        assert!(r.violations.is_empty());
        assert_eq!(r.max_length_over_bound, None);
        assert_eq!(r.min_length_margin, 0.0);

        let params = FlowParams::new(1.0, vec![0.0, 0.0]).unwrap();
        s[0].length = 1.5;
        let r = bounds_audit(&s, &params, 1.2, 1.0).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].invariant, "length_upper");
        s[0].length = 0.9;
        s[0].bending = 5.0;
        let r = bounds_audit(&s, &params, 1.2, 1.0).unwrap();
        let names: Vec<&str> = r.violations.iter().map(|v| v.invariant.as_str()).collect();
        assert_eq!(names, vec!["length_lower", "curvature_l2"]);
    }

    #[test]
    fn curvature_norms_on_arc() {
        let radius = 1.3;
        let curve = arc(128, radius);
        let table = curvature_norm_series(std::slice::from_ref(&curve), 2).unwrap();
        let r = &table.rows[0];
        assert!(r.nabla_l2[1] <= 1e-2);
        let l = build_cache(&curve).total_length();
        let want = l.sqrt() / (radius * radius);
        assert!((r.partial_l2[1] - want).abs() <= 2e-2 * want, "{} vs {want}", r.partial_l2[1]);
        assert!(table.bounded);

        let seg: Vec<Vec<f64>> = (0..=8).map(|i| vec![i as f64, 0.0]).collect();
        let seg = DiscreteCurve::from_points(&seg).unwrap();
        let t = curvature_norm_series(std::slice::from_ref(&seg), 2).unwrap();
        assert!(t.max_nabla_l2.iter().chain(&t.max_partial_linf).all(|&v| v == 0.0));
        assert!(curvature_norm_series(&[seg], 5).is_err());
    }

    #[test]
    fn degenerate_interpolation_exponent() {
        let corpus = vec![NamedCurve {
            name: "arc".into(),
            curve: arc(40, 0.7),
        }];
        let r = interpolation_audit(&corpus, 1, 0, 2.0).unwrap();
        assert_eq!(r.empirical_constant, 1.0);
        assert!(r.pass);
        assert!(interpolation_audit(&corpus, 1, 1, 2.0).is_err());
        let seg: Vec<Vec<f64>> = (0..=8).map(|i| vec![i as f64, 0.0]).collect();
        let flat = vec![NamedCurve {
            name: "flat".into(),
            curve: DiscreteCurve::from_points(&seg).unwrap(),
        }];
        assert!(matches!(
            interpolation_audit(&flat, 2, 1, 2.0),
            Err(AuditError::ZeroCurvature(_))
        ));
    }

    fn sample(name: &str, f: impl Fn(f64) -> f64, n: usize) -> ScalarSample {
        let x: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
        ScalarSample {
            name: name.into(),
            values: x.iter().map(|&t| f(t)).collect(),
            x,
        }
    }

    #[test]
    fn sup_bound_examples() {
        let r = sup_bound_audit(&[sample("x", |t| t, 64)]).unwrap();
        assert!((r.empirical_constant - 1.0 / 1.5).abs() <= 1e-12);
        assert!(r.pass);
        let r = sup_bound_audit(&[sample("c", |_| -2.5, 16)]).unwrap();
        assert!((r.empirical_constant - 1.0).abs() <= 1e-15);
        assert!(r.pass);
        assert!(sup_bound_audit(&[]).is_err());
        let s = sample("sine", |t| (2.0 * PI * t).sin(), 7);
        let (_, _, l1) = s.norms();
        assert!(l1 > 0.0);
    }

    #[test]
    fn identities_vanish_at_rest() {
        let seg: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64 / 10.0, 0.0]).collect();
        let seg = DiscreteCurve::from_points(&seg).unwrap();
        let r = identity_residuals(&seg, &seg, 1e-3).unwrap();
        for (name, v) in r.residuals() {
            assert!(v <= 1e-10, "{name} {v}");
        }
    }

    #[test]
    fn full_derivative_identity_on_arc() {
        let a = full_derivative_residual(&build_cache(&arc(128, 1.0))).unwrap();
        let b = full_derivative_residual(&build_cache(&arc(256, 1.0))).unwrap();
        assert!(a.max_norm() <= 1e-2);
        assert!(a.max_norm() / b.max_norm() >= 3.0);
    }
}
