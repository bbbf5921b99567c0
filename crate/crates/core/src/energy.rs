//! Discrete Willmore-Helfrich energy
//! `W = 1/2 int |kappa|^2 ds - int <kappa, zeta> ds + lambda L`,
//! its exact vertex gradient and the boundary and stationarity residuals.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    build_cache, dot, lp_norm_interior, nabla_s_pow, norm, DiscreteCurve, GeometryCache,
    GeometryError, VertexField,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("zeta has dimension {found}, curve has dimension {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("length weight must satisfy lambda >= 0, got {0}")]
    NegativeLambda(f64),
    #[error("parameter {0} is not finite")]
    NonFinite(&'static str),
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
}

/// Length weight `lambda` and spontaneous-curvature vector `zeta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub lambda: f64,
    pub zeta: Vec<f64>,
}

impl FlowParams {
    pub fn new(lambda: f64, zeta: Vec<f64>) -> Result<Self, EnergyError> {
        let p = Self { lambda, zeta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        if !self.lambda.is_finite() {
            return Err(EnergyError::NonFinite("lambda"));
        }
        if self.lambda < 0.0 {
            return Err(EnergyError::NegativeLambda(self.lambda));
        }
        if self.zeta.iter().any(|z| !z.is_finite()) {
            return Err(EnergyError::NonFinite("zeta"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.zeta.len()
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<(), EnergyError> {
        if self.zeta.len() != dim {
            Err(EnergyError::DimMismatch {
                expected: dim,
                found: self.zeta.len(),
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub bending: f64,
    pub coupling: f64,
    pub length: f64,
    pub total: f64,
}

/// Per-vertex `dW/dx_i`; both endpoint rows are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField(VertexField);

impl GradientField {
    pub fn field(&self) -> &VertexField {
        &self.0
    }

    pub fn into_field(self) -> VertexField {
        self.0
    }

    pub fn values(&self) -> ndarray::ArrayView2<'_, f64> {
        self.0.values()
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.0.values().fold(0.0, |a: f64, &b| a.max(b.abs()))
    }
}

pub fn energy(curve: &DiscreteCurve, params: &FlowParams) -> Result<EnergyBreakdown, EnergyError> {
    params.check_dim(curve.dim())?;
    Ok(energy_from_cache(&build_cache(curve), params))
}

/// Energy of an already built cache. The caller guarantees matching dimensions.
pub fn energy_from_cache(cache: &GeometryCache, params: &FlowParams) -> EnergyBreakdown {
    let n = cache.num_edges();
    let k = cache.curvature();
    let w = cache.vertex_weights();
    let mut bending = 0.0;
    for i in 1..n {
        let ki = k.row(i);
        bending += 0.5 * dot(&ki, &ki) * w[i];
    }
    let t = cache.edge_tangents();
    let zeta = Array1::from(params.zeta.clone());
    let coupling = dot(&t.row(n - 1), &zeta.view()) - dot(&t.row(0), &zeta.view());
    let length = cache.total_length();
    EnergyBreakdown {
        bending,
        coupling,
        length,
        total: bending - coupling + params.lambda * length,
    }
}

pub fn gradient(curve: &DiscreteCurve, params: &FlowParams) -> Result<GradientField, EnergyError> {
    params.check_dim(curve.dim())?;
    Ok(gradient_from_cache(&build_cache(curve), params))
}

/// Exact derivative of the discrete energy with respect to the free vertices.
pub fn gradient_from_cache(cache: &GeometryCache, params: &FlowParams) -> GradientField {
    let n = cache.num_edges();
    let dim = cache.dim();
    let h = cache.edge_lengths();
    let t = cache.edge_tangents();
    // Derivative with respect to the edge vectors e_j = x_{j+1} - x_j.
    let mut ge = Array2::<f64>::zeros((n, dim));
    let mut d = vec![0.0; dim];

    for i in 1..n {
        let (ta, tb) = (t.row(i - 1), t.row(i));
        let s = h[i - 1] + h[i];
        for c in 0..dim {
            d[c] = tb[c] - ta[c];
        }
        let dd: f64 = d.iter().map(|v| v * v).sum();
        let d_tb: f64 = d.iter().zip(tb.iter()).map(|(a, b)| a * b).sum();
        let d_ta: f64 = d.iter().zip(ta.iter()).map(|(a, b)| a * b).sum();
        let q = dd / (s * s);
        for c in 0..dim {
            ge[[i, c]] += 2.0 / s * (d[c] - d_tb * tb[c]) / h[i] - q * tb[c];
            ge[[i - 1, c]] += -2.0 / s * (d[c] - d_ta * ta[c]) / h[i - 1] - q * ta[c];
        }
    }

    let zeta = &params.zeta;
    let (t0, tn) = (t.row(0), t.row(n - 1));
    let z0: f64 = zeta.iter().zip(t0.iter()).map(|(a, b)| a * b).sum();
    let zn: f64 = zeta.iter().zip(tn.iter()).map(|(a, b)| a * b).sum();
    for c in 0..dim {
        ge[[0, c]] += (zeta[c] - z0 * t0[c]) / h[0];
        ge[[n - 1, c]] -= (zeta[c] - zn * tn[c]) / h[n - 1];
    }

    if params.lambda != 0.0 {
        for j in 0..n {
            for c in 0..dim {
                ge[[j, c]] += params.lambda * t[[j, c]];
            }
        }
    }

    let mut g = Array2::zeros((n + 1, dim));
    for i in 1..n {
        for c in 0..dim {
            g[[i, c]] = ge[[i - 1, c]] - ge[[i, c]];
        }
    }
    GradientField(VertexField::from_array(g))
}

/// Central-difference gradient with per-coordinate step `step * (1 + |x|)`.
pub fn fd_gradient(
    curve: &DiscreteCurve,
    params: &FlowParams,
    step: f64,
) -> Result<GradientField, EnergyError> {
    if step <= 0.0 || !step.is_finite() {
        return Err(EnergyError::BadStep(step));
    }
    params.check_dim(curve.dim())?;
    let n = curve.num_edges();
    let dim = curve.dim();
    let mut x = curve.vertices().to_owned();
    let mut g = Array2::zeros((n + 1, dim));
    for i in 1..n {
        for c in 0..dim {
            let orig = x[[i, c]];
            let hstep = step * (1.0 + orig.abs());
            x[[i, c]] = orig + hstep;
            let plus = energy(&DiscreteCurve::new(x.clone())?, params)?.total;
            x[[i, c]] = orig - hstep;
            let minus = energy(&DiscreteCurve::new(x.clone())?, params)?.total;
            x[[i, c]] = orig;
            g[[i, c]] = (plus - minus) / (2.0 * hstep);
        }
    }
    Ok(GradientField(VertexField::from_array(g)))
}

/// `|kappa - (zeta - <zeta, tau> tau)|` at the first and last vertex.
pub fn natural_bc_residual(curve: &DiscreteCurve, params: &FlowParams) -> Result<[f64; 2], EnergyError> {
    params.check_dim(curve.dim())?;
    Ok(natural_bc_residual_from_cache(&build_cache(curve), params))
}

pub fn natural_bc_residual_from_cache(cache: &GeometryCache, params: &FlowParams) -> [f64; 2] {
    let zeta = Array1::from(params.zeta.clone());
    let end = |i: usize| {
        let tau = cache.tangent(i);
        let target = &zeta - &(&tau * dot(&zeta.view(), &tau));
        let r = &cache.curvature().row(i) - &target;
        norm(&r.view())
    };
    [end(0), end(cache.num_edges())]
}

/// Continuum velocity `V = -nabla_s^2 kappa - 1/2 |kappa|^2 kappa + lambda kappa`
/// at interior vertices (endpoint rows are zero) and its interior L2 norm.
pub fn stationarity_residual(
    curve: &DiscreteCurve,
    params: &FlowParams,
) -> Result<(VertexField, f64), EnergyError> {
    params.check_dim(curve.dim())?;
    Ok(stationarity_residual_from_cache(&build_cache(curve), params)?)
}

pub fn stationarity_residual_from_cache(
    cache: &GeometryCache,
    params: &FlowParams,
) -> Result<(VertexField, f64), GeometryError> {
    cache.check_order(2)?;
    let kappa = cache.curvature_field();
    let d2 = nabla_s_pow(&kappa, cache, 2)?;
    let k = kappa.values();
    let n = cache.num_edges();
    let mut v = Array2::zeros(k.raw_dim());
    for i in 1..n {
        let kk = dot(&k.row(i), &k.row(i));
        for c in 0..cache.dim() {
            v[[i, c]] = -d2.values()[[i, c]] - 0.5 * kk * k[[i, c]] + params.lambda * k[[i, c]];
        }
    }
    let field = VertexField::from_array(v);
    let l2 = lp_norm_interior(&field, cache, 2.0);
    Ok((field, l2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn curve(points: &[[f64; 2]]) -> DiscreteCurve {
        let pts: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
        DiscreteCurve::from_points(&pts).unwrap()
    }

    fn segment(n: usize, a: [f64; 2], b: [f64; 2]) -> DiscreteCurve {
        let pts: Vec<[f64; 2]> = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            })
            .collect();
        curve(&pts)
    }

    fn semicircle(n: usize) -> DiscreteCurve {
        let pts: Vec<[f64; 2]> = (0..=n)
            .map(|i| {
                let th = PI * i as f64 / n as f64;
                [th.cos(), th.sin()]
            })
            .collect();
        curve(&pts)
    }

    fn arc(n: usize, radius: f64) -> DiscreteCurve {
        let pts: Vec<[f64; 2]> = (0..=n)
            .map(|i| {
                let th = 0.3 + 1.8 * i as f64 / n as f64;
                [radius * th.cos(), radius * th.sin()]
            })
            .collect();
        curve(&pts)
    }

    fn wiggly(n: usize) -> DiscreteCurve {
        let pts: Vec<[f64; 2]> = (0..=n)
            .map(|i| {
                let s = i as f64 / n as f64;
                [s + 0.03 * (5.0 * s).sin(), 0.2 * (PI * s).sin() + 0.05 * (3.0 * PI * s).cos()]
            })
            .collect();
        curve(&pts)
    }

    #[test]
    fn params_are_validated() {
        assert_eq!(
            FlowParams::new(-1.0, vec![0.0, 0.0]),
            Err(EnergyError::NegativeLambda(-1.0))
        );
        assert!(FlowParams::new(f64::NAN, vec![0.0, 0.0]).is_err());
        let p = FlowParams::new(1.0, vec![0.0; 3]).unwrap();
        assert!(matches!(
            energy(&segment(4, [0.0, 0.0], [1.0, 0.0]), &p),
            Err(EnergyError::DimMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn straight_segment_energy() {
        let p = FlowParams::new(0.5, vec![0.0, 0.0]).unwrap();
        let e = energy(&segment(8, [0.0, 0.0], [2.0, 0.0]), &p).unwrap();
        assert_eq!(e.bending, 0.0);
        assert_eq!(e.coupling, 0.0);
        assert_abs_diff_eq!(e.length, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn semicircle_telescoped_coupling() {
        let p = FlowParams::new(0.0, vec![0.0, 1.0]).unwrap();
        let c = semicircle(64);
        let e = energy(&c, &p).unwrap();
        // Edge tangents at the ends are (sin(h/2), cos(h/2)) and its mirror,
        // so the discrete coupling is -2 cos(pi / 128).
        let exact = -2.0 * (PI / 128.0).cos();
        assert_abs_diff_eq!(e.coupling, exact, epsilon = 4.0 * f64::EPSILON);
        assert_abs_diff_eq!(e.coupling, -2.0, epsilon = 1e-3);
        assert_eq!(e.total, e.bending - e.coupling);
    }

    #[test]
    fn aligned_segment_is_critical() {
        let p = FlowParams::new(0.7, vec![3.0, 0.0]).unwrap();
        let c = segment(10, [0.0, 0.0], [1.0, 0.0]);
        let e = energy(&c, &p).unwrap();
        assert_eq!(e.coupling, 0.0);
        assert_abs_diff_eq!(e.total, 0.7, epsilon = 1e-15);
        assert!(gradient(&c, &p).unwrap().max_abs() <= 1e-12 * 0.7);
        let r = natural_bc_residual(&c, &p).unwrap();
        assert!(r[0] <= 1e-12 && r[1] <= 1e-12);
    }

    #[test]
    fn collinear_interior_vertex_has_zero_gradient() {
        let p = FlowParams::new(1.0, vec![0.0, 0.0]).unwrap();
        let c = segment(4, [0.0, 0.0], [4.0, 0.0]);
        assert_eq!(gradient(&c, &p).unwrap().max_abs(), 0.0);
        assert!(fd_gradient(&c, &p, 1e-6).unwrap().max_abs() <= 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = FlowParams::new(0.8, vec![0.3, -0.5]).unwrap();
        let c = wiggly(16);
        let g = gradient(&c, &p).unwrap();
        let mut prev = f64::INFINITY;
        for step in [1e-4, 1e-5, 1e-6] {
            let fd = fd_gradient(&c, &p, step).unwrap();
            let err = (g.values().to_owned() - fd.values()).fold(0.0, |a: f64, &b| a.max(b.abs()));
            assert!(err < prev / 50.0, "step {step}: {err} after {prev}");
            prev = err;
        }
        assert!(prev / g.max_abs().max(1.0) <= 1e-6, "{prev}");
        assert_eq!(g.values().row(0).to_vec(), vec![0.0, 0.0]);
        assert_eq!(g.values().row(16).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn fd_error_is_second_order_in_step() {
        let p = FlowParams::new(0.8, vec![0.3, -0.5]).unwrap();
        let c = wiggly(12);
        let g = gradient(&c, &p).unwrap();
        let err = |step: f64| {
            let fd = fd_gradient(&c, &p, step).unwrap();
            (g.values().to_owned() - fd.values()).fold(0.0, |a: f64, &b| a.max(b.abs()))
        };
        let e1 = err(1e-3);
        let e2 = err(5e-4);
        let rate = (e1 / e2).log2();
        assert!((1.8..2.2).contains(&rate), "rate {rate}");
        assert!(fd_gradient(&c, &p, 0.0).is_err());
    }

    #[test]
    fn bc_residuals() {
        let zero = FlowParams::new(0.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(
            natural_bc_residual(&segment(6, [0.0, 0.0], [2.0, 0.0]), &zero).unwrap(),
            [0.0, 0.0]
        );
        let r = natural_bc_residual(&segment(6, [0.0, 0.0], [1.0, 1.0]), &zero).unwrap();
        assert!(r[0] <= 1e-12 && r[1] <= 1e-12);
        let r = natural_bc_residual(&semicircle(128), &zero).unwrap();
        assert!((r[0] - 1.0).abs() <= 1e-2 && (r[1] - 1.0).abs() <= 1e-2);
    }

    #[test]
    fn stationarity_examples() {
        let p = FlowParams::new(2.0, vec![1.0, 4.0]).unwrap();
        let (_, v) = stationarity_residual(&segment(8, [0.0, 0.0], [1.0, 2.0]), &p).unwrap();
        assert!(v <= 1e-12);

        let radius = 1.5;
        let p = FlowParams::new(0.5 / (radius * radius), vec![0.0, 0.0]).unwrap();
        let (_, v128) = stationarity_residual(&arc(128, radius), &p).unwrap();
        let (_, v256) = stationarity_residual(&arc(256, radius), &p).unwrap();
        assert!(v128 <= 1e-2, "{v128}");
        assert!(v256 <= 0.5 * v128 * 1.05, "{v128} -> {v256}");

        let short = segment(5, [0.0, 0.0], [1.0, 0.0]);
        assert!(matches!(
            stationarity_residual(&short, &p),
            Err(EnergyError::Geometry(GeometryError::StencilExhausted { .. }))
        ));
    }

    #[test]
    fn quadrature_coupling_agrees_with_telescoped() {
        let p = FlowParams::new(0.0, vec![0.4, 0.9]).unwrap();
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let c = wiggly(n);
            let cache = build_cache(&c);
            let k = cache.curvature();
            let w = cache.vertex_weights();
            let z = Array1::from(p.zeta.clone());
            let quad: f64 = (1..n).map(|i| dot(&k.row(i), &z.view()) * w[i]).sum();
            errs.push((quad - energy_from_cache(&cache, &p).coupling).abs());
        }
        // The interior sum telescopes exactly: 2(T_i - T_{i-1})/S * S/2.
        for e in errs {
            assert!(e <= 1e-13, "{e}");
        }
    }

    #[test]
    fn tangential_motion_is_nearly_free() {
        let p = FlowParams::new(1.0, vec![0.2, 0.1]).unwrap();
        let mut prev = f64::INFINITY;
        for n in [32, 64, 128, 256] {
            let c = wiggly(n);
            let cache = build_cache(&c);
            let g = gradient_from_cache(&cache, &p);
            let s = cache.arclength();
            let l = cache.total_length();
            let mut d = 0.0;
            for i in 1..n {
                let amp = (PI * s[i] / l).sin().powi(2);
                d += amp * dot(&g.values().row(i), &cache.tangent(i));
            }
            assert!(d.abs() < prev / 3.0, "n {n}: {d} vs {prev}");
            prev = d.abs();
        }
    }
}
