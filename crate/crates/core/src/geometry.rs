//! Discrete arc-length calculus on open polylines.
//!
//! A curve is stored as an `(N+1) x n` array of vertices. Edge quantities
//! (lengths `h_i`, unit tangents `T_i`) live on the `N` segments, vertex
//! quantities (dual weights `ds_i`, chord tangents `tau_i`, curvature
//! vectors `kappa_i`) on the `N+1` vertices. All derivative stencils are
//! second order on smoothly graded meshes.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("curves live in R^n with n >= 2, got n = {0}")]
    DimTooSmall(usize),
    #[error("a curve needs at least {min} edges, got {found}")]
    TooFewEdges { min: usize, found: usize },
    #[error("edge {0} has zero length")]
    DegenerateEdge(usize),
    #[error("first and last vertex coincide")]
    CoincidentEndpoints,
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("field has {found} vertices but the curve has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("field dimension {found} does not match curve dimension {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("derivative order {order} is not available on a curve with {edges} edges")]
    StencilExhausted { order: usize, edges: usize },
}

/// Polyline `x_0, ..., x_N` in `R^n` whose endpoints are held fixed by the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    vertices: Array2<f64>,
}

impl DiscreteCurve {
    /// Smallest edge count for which the fourth-order stencils are defined.
    pub const MIN_EDGES: usize = 4;

    pub fn new(vertices: Array2<f64>) -> Result<Self, GeometryError> {
        let (rows, dim) = vertices.dim();
        if dim < 2 {
            return Err(GeometryError::DimTooSmall(dim));
        }
        let edges = rows.saturating_sub(1);
        if edges < Self::MIN_EDGES {
            return Err(GeometryError::TooFewEdges {
                min: Self::MIN_EDGES,
                found: edges,
            });
        }
        for (i, row) in vertices.outer_iter().enumerate() {
            if row.iter().any(|c| !c.is_finite()) {
                return Err(GeometryError::NonFinite(i));
            }
        }
        for i in 0..edges {
            if vertices.row(i + 1) == vertices.row(i) {
                return Err(GeometryError::DegenerateEdge(i));
            }
        }
        if vertices.row(0) == vertices.row(edges) {
            return Err(GeometryError::CoincidentEndpoints);
        }
        Ok(Self { vertices })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, GeometryError> {
        let dim = points.first().map_or(0, Vec::len);
        let mut vertices = Array2::zeros((points.len(), dim));
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(GeometryError::DimMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            vertices.row_mut(i).assign(&ArrayView1::from(p.as_slice()));
        }
        Self::new(vertices)
    }

    pub fn dim(&self) -> usize {
        self.vertices.ncols()
    }

    pub fn num_edges(&self) -> usize {
        self.vertices.nrows() - 1
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.nrows()
    }

    pub fn vertices(&self) -> ArrayView2<'_, f64> {
        self.vertices.view()
    }

    pub fn vertex(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vertices.row(i)
    }

    pub fn into_vertices(self) -> Array2<f64> {
        self.vertices
    }

    /// `|x_N - x_0|`, the length of the straight competitor.
    pub fn chord(&self) -> f64 {
        norm(&(&self.vertex(self.num_edges()) - &self.vertex(0)).view())
    }

    /// Applies `map` to every vertex and revalidates.
    pub fn map_points<F>(&self, map: F) -> Result<Self, GeometryError>
    where
        F: Fn(ArrayView1<'_, f64>) -> Array1<f64>,
    {
        let mut out = Array2::zeros(self.vertices.raw_dim());
        for (i, row) in self.vertices.outer_iter().enumerate() {
            out.row_mut(i).assign(&map(row));
        }
        Self::new(out)
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self, GeometryError> {
        self.map_points(|p| &p * alpha)
    }
}

/// Per-vertex vector field on a curve (`phi`, `V`, `nabla_s^k kappa`, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct VertexField {
    values: Array2<f64>,
}

impl VertexField {
    pub fn zeros(num_vertices: usize, dim: usize) -> Self {
        Self {
            values: Array2::zeros((num_vertices, dim)),
        }
    }

    pub fn from_array(values: Array2<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn into_array(self) -> Array2<f64> {
        self.values
    }

    /// Pointwise Euclidean magnitudes `|phi_i|`.
    pub fn magnitudes(&self) -> Array1<f64> {
        self.values
            .outer_iter()
            .map(|r| norm(&r))
            .collect::<Vec<_>>()
            .into()
    }

    /// Largest pointwise magnitude.
    pub fn max_norm(&self) -> f64 {
        self.magnitudes().fold(0.0, |a: f64, &b| a.max(b))
    }
}

/// Cached edge and vertex geometry of a [`DiscreteCurve`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryCache {
    edge_lengths: Array1<f64>,
    edge_tangents: Array2<f64>,
    vertex_weights: Array1<f64>,
    vertex_tangents: Array2<f64>,
    curvature: Array2<f64>,
    arclength: Array1<f64>,
    total_length: f64,
}

impl GeometryCache {
    pub fn new(curve: &DiscreteCurve) -> Self {
        build_cache(curve)
    }

    pub fn num_edges(&self) -> usize {
        self.edge_lengths.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.edge_lengths.len() + 1
    }

    pub fn dim(&self) -> usize {
        self.edge_tangents.ncols()
    }

    /// `h_i = |x_{i+1} - x_i|`.
    pub fn edge_lengths(&self) -> ArrayView1<'_, f64> {
        self.edge_lengths.view()
    }

    /// `T_i = (x_{i+1} - x_i) / h_i`.
    pub fn edge_tangents(&self) -> ArrayView2<'_, f64> {
        self.edge_tangents.view()
    }

    /// Lumped arc-length weights `ds_i`; they sum to the total length.
    pub fn vertex_weights(&self) -> ArrayView1<'_, f64> {
        self.vertex_weights.view()
    }

    pub fn vertex_tangents(&self) -> ArrayView2<'_, f64> {
        self.vertex_tangents.view()
    }

    pub fn tangent(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vertex_tangents.row(i)
    }

    /// Curvature vectors. Interior rows use the turning stencil, the two
    /// endpoint rows are extrapolated and serve only as diagnostics.
    pub fn curvature(&self) -> ArrayView2<'_, f64> {
        self.curvature.view()
    }

    pub fn curvature_field(&self) -> VertexField {
        VertexField::from_array(self.curvature.clone())
    }

    /// Cumulative arc length `s_i` with `s_0 = 0` and `s_N = L`.
    pub fn arclength(&self) -> ArrayView1<'_, f64> {
        self.arclength.view()
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_lengths.fold(f64::INFINITY, |a, &b| a.min(b))
    }

    fn check_field(&self, field: &VertexField) -> Result<(), GeometryError> {
        if field.len() != self.num_vertices() {
            return Err(GeometryError::LengthMismatch {
                expected: self.num_vertices(),
                found: field.len(),
            });
        }
        if field.dim() != self.dim() {
            return Err(GeometryError::DimMismatch {
                expected: self.dim(),
                found: field.dim(),
            });
        }
        Ok(())
    }

    /// Highest derivative order of `kappa` the stencils support, `N - 4`.
    pub fn stencil_budget(&self) -> usize {
        self.num_edges() - DiscreteCurve::MIN_EDGES
    }

    pub(crate) fn check_order(&self, order: usize) -> Result<(), GeometryError> {
        if order > self.stencil_budget() {
            Err(GeometryError::StencilExhausted {
                order,
                edges: self.num_edges(),
            })
        } else {
            Ok(())
        }
    }
}

pub(crate) fn dot(a: &ArrayView1<'_, f64>, b: &ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &ArrayView1<'_, f64>) -> f64 {
    dot(a, a).sqrt()
}

/// Weights of the quadratic Lagrange interpolant through `nodes`
/// evaluated at `at`.
fn lagrange_value_weights(nodes: [f64; 3], at: f64) -> [f64; 3] {
    let [a, b, c] = nodes;
    [
        (at - b) * (at - c) / ((a - b) * (a - c)),
        (at - a) * (at - c) / ((b - a) * (b - c)),
        (at - a) * (at - b) / ((c - a) * (c - b)),
    ]
}

/// Weights of the derivative of the quadratic Lagrange interpolant.
fn lagrange_slope_weights(nodes: [f64; 3], at: f64) -> [f64; 3] {
    let [a, b, c] = nodes;
    [
        ((at - b) + (at - c)) / ((a - b) * (a - c)),
        ((at - a) + (at - c)) / ((b - a) * (b - c)),
        ((at - a) + (at - b)) / ((c - a) * (c - b)),
    ]
}

fn combine(rows: [ArrayView1<'_, f64>; 3], w: [f64; 3]) -> Array1<f64> {
    &rows[0] * w[0] + &rows[1] * w[1] + &rows[2] * w[2]
}

fn unit_or(v: Array1<f64>, fallback: ArrayView1<'_, f64>) -> Array1<f64> {
    let len = norm(&v.view());
    if len > 0.0 && len.is_finite() {
        v / len
    } else {
        fallback.to_owned()
    }
}

pub fn build_cache(curve: &DiscreteCurve) -> GeometryCache {
    let x = curve.vertices();
    let n_edges = curve.num_edges();
    let dim = curve.dim();

    let mut edge_lengths = Array1::zeros(n_edges);
    let mut edge_tangents = Array2::zeros((n_edges, dim));
    for i in 0..n_edges {
        let e = &x.row(i + 1) - &x.row(i);
        let h = norm(&e.view());
        edge_lengths[i] = h;
        edge_tangents.row_mut(i).assign(&(e / h));
    }

    let mut arclength = Array1::zeros(n_edges + 1);
    for i in 0..n_edges {
        arclength[i + 1] = arclength[i] + edge_lengths[i];
    }
    let total_length = edge_lengths.sum();

    let mut vertex_weights = Array1::zeros(n_edges + 1);
    vertex_weights[0] = 0.5 * edge_lengths[0];
    vertex_weights[n_edges] = 0.5 * edge_lengths[n_edges - 1];
    for i in 1..n_edges {
        vertex_weights[i] = 0.5 * (edge_lengths[i - 1] + edge_lengths[i]);
    }

    let mut vertex_tangents = Array2::zeros((n_edges + 1, dim));
    let s = &arclength;
    let m = n_edges;
    let w0 = lagrange_slope_weights([s[0], s[1], s[2]], s[0]);
    let t0 = combine([x.row(0), x.row(1), x.row(2)], w0);
    let wn = lagrange_slope_weights([s[m], s[m - 1], s[m - 2]], s[m]);
    let tn = combine([x.row(m), x.row(m - 1), x.row(m - 2)], wn);
    vertex_tangents.row_mut(0).assign(&unit_or(t0, edge_tangents.row(0)));
    vertex_tangents.row_mut(m).assign(&unit_or(tn, edge_tangents.row(m - 1)));
    for i in 1..n_edges {
        let chord = &x.row(i + 1) - &x.row(i - 1);
        let len = norm(&chord.view());
        // A hairpin collapses the chord; fall back to the incoming edge.
        if len > 1e-14 * (edge_lengths[i - 1] + edge_lengths[i]) {
            vertex_tangents.row_mut(i).assign(&(chord / len));
        } else {
            vertex_tangents.row_mut(i).assign(&edge_tangents.row(i - 1));
        }
    }

    let mut curvature = Array2::zeros((n_edges + 1, dim));
    for i in 1..n_edges {
        let turn = &edge_tangents.row(i) - &edge_tangents.row(i - 1);
        let k = turn * (2.0 / (edge_lengths[i - 1] + edge_lengths[i]));
        curvature.row_mut(i).assign(&k);
    }
    let w0 = lagrange_value_weights([s[1], s[2], s[3]], s[0]);
    let k0 = combine([curvature.row(1), curvature.row(2), curvature.row(3)], w0);
    let wn = lagrange_value_weights([s[m - 1], s[m - 2], s[m - 3]], s[m]);
    let kn = combine(
        [curvature.row(m - 1), curvature.row(m - 2), curvature.row(m - 3)],
        wn,
    );
    curvature.row_mut(0).assign(&k0);
    curvature.row_mut(m).assign(&kn);

    GeometryCache {
        edge_lengths,
        edge_tangents,
        vertex_weights,
        vertex_tangents,
        curvature,
        arclength,
        total_length,
    }
}

/// Removes the component of `v` along the unit vector `tau`.
pub fn normal_project(v: ArrayView1<'_, f64>, tau: ArrayView1<'_, f64>) -> Array1<f64> {
    let c = dot(&v, &tau);
    &v - &(&tau * c)
}

/// Arc-length derivative `d/ds` with central differences inside and
/// one-sided quadratic differences at the two endpoints.
pub fn partial_s(field: &VertexField, cache: &GeometryCache) -> Result<VertexField, GeometryError> {
    cache.check_field(field)?;
    let phi = field.values();
    let s = cache.arclength();
    let m = cache.num_edges();
    let mut out = Array2::zeros(phi.raw_dim());
    for i in 1..m {
        let d = (&phi.row(i + 1) - &phi.row(i - 1)) / (s[i + 1] - s[i - 1]);
        out.row_mut(i).assign(&d);
    }
    let w0 = lagrange_slope_weights([s[0], s[1], s[2]], s[0]);
    out.row_mut(0)
        .assign(&combine([phi.row(0), phi.row(1), phi.row(2)], w0));
    let wn = lagrange_slope_weights([s[m], s[m - 1], s[m - 2]], s[m]);
    out.row_mut(m)
        .assign(&combine([phi.row(m), phi.row(m - 1), phi.row(m - 2)], wn));
    Ok(VertexField::from_array(out))
}

/// Normal arc-length derivative `nabla_s phi = d_s phi - <d_s phi, tau> tau`.
pub fn nabla_s(field: &VertexField, cache: &GeometryCache) -> Result<VertexField, GeometryError> {
    let mut d = partial_s(field, cache)?;
    project_rows(d.values_mut(), cache);
    Ok(d)
}

pub(crate) fn project_rows(values: &mut Array2<f64>, cache: &GeometryCache) {
    for (mut row, tau) in values
        .axis_iter_mut(Axis(0))
        .zip(cache.vertex_tangents().outer_iter())
    {
        let c = dot(&row.view(), &tau);
        row.scaled_add(-c, &tau);
    }
}

/// `nabla_s^k phi`; `k = 0` returns the field unchanged.
pub fn nabla_s_pow(
    field: &VertexField,
    cache: &GeometryCache,
    k: usize,
) -> Result<VertexField, GeometryError> {
    cache.check_field(field)?;
    let mut out = field.clone();
    for _ in 0..k {
        out = nabla_s(&out, cache)?;
    }
    Ok(out)
}

/// `d_s^k phi`; `k = 0` returns the field unchanged.
pub fn partial_s_pow(
    field: &VertexField,
    cache: &GeometryCache,
    k: usize,
) -> Result<VertexField, GeometryError> {
    cache.check_field(field)?;
    let mut out = field.clone();
    for _ in 0..k {
        out = partial_s(&out, cache)?;
    }
    Ok(out)
}

/// Resamples the polyline at `m + 1` points equally spaced in arc length.
/// Endpoints are copied bitwise; targets that land on an input vertex
/// (up to rounding) copy that vertex exactly.
pub fn reparametrize_arclength(
    curve: &DiscreteCurve,
    m: usize,
) -> Result<DiscreteCurve, GeometryError> {
    if m < DiscreteCurve::MIN_EDGES {
        return Err(GeometryError::TooFewEdges {
            min: DiscreteCurve::MIN_EDGES,
            found: m,
        });
    }
    let cache = build_cache(curve);
    let x = curve.vertices();
    let s = cache.arclength();
    let total = cache.total_length();
    let n = curve.num_edges();
    let snap = 64.0 * f64::EPSILON * total;

    let mut out = Array2::zeros((m + 1, curve.dim()));
    out.row_mut(0).assign(&x.row(0));
    out.row_mut(m).assign(&x.row(n));
    let mut seg = 0;
    for k in 1..m {
        let target = total * (k as f64) / (m as f64);
        while seg + 1 < n && s[seg + 1] <= target {
            seg += 1;
        }
        if (target - s[seg]).abs() <= snap {
            out.row_mut(k).assign(&x.row(seg));
        } else if (s[seg + 1] - target).abs() <= snap {
            out.row_mut(k).assign(&x.row(seg + 1));
        } else {
            let t = (target - s[seg]) / cache.edge_lengths[seg];
            let p = &x.row(seg) + &((&x.row(seg + 1) - &x.row(seg)) * t);
            out.row_mut(k).assign(&p);
        }
    }
    DiscreteCurve::new(out)
}

/// `(sum_i |phi_i|^p ds_i)^(1/p)`, or `max_i |phi_i|` for `p = inf`.
pub fn lp_norm(field: &VertexField, cache: &GeometryCache, p: f64) -> f64 {
    weighted_norm(field, cache.vertex_weights(), p, 0..field.len())
}

/// Same as [`lp_norm`] restricted to interior vertices `1..N`.
pub fn lp_norm_interior(field: &VertexField, cache: &GeometryCache, p: f64) -> f64 {
    weighted_norm(field, cache.vertex_weights(), p, 1..field.len() - 1)
}

fn weighted_norm(
    field: &VertexField,
    weights: ArrayView1<'_, f64>,
    p: f64,
    range: std::ops::Range<usize>,
) -> f64 {
    debug_assert!(p >= 1.0, "norm exponent must be >= 1");
    let mags = range.map(|i| (norm(&field.row(i)), weights[i]));
    if p.is_infinite() {
        mags.fold(0.0, |a, (m, _)| a.max(m))
    } else if p == 2.0 {
        mags.map(|(m, w)| m * m * w).sum::<f64>().sqrt()
    } else {
        mags.map(|(m, w)| m.powf(p) * w).sum::<f64>().powf(1.0 / p)
    }
}

/// Length-weighted norm `L^(i+1-1/p) ||nabla_s^i kappa||_{L^p}` of a single
/// derivative order; invariant under uniform rescaling of the curve.
pub fn scaled_derivative_norm(
    cache: &GeometryCache,
    i: usize,
    p: f64,
) -> Result<f64, GeometryError> {
    cache.check_order(i)?;
    let d = nabla_s_pow(&cache.curvature_field(), cache, i)?;
    Ok(scale_factor(cache.total_length(), i, p) * lp_norm(&d, cache, p))
}

fn scale_factor(length: f64, i: usize, p: f64) -> f64 {
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    length.powf(i as f64 + 1.0 - inv_p)
}

/// `||kappa||_{k,p} = sum_{i=0}^k L^(i+1-1/p) ||nabla_s^i kappa||_{L^p}`.
pub fn scale_invariant_norm(cache: &GeometryCache, k: usize, p: f64) -> Result<f64, GeometryError> {
    cache.check_order(k)?;
    let mut d = cache.curvature_field();
    let length = cache.total_length();
    let mut total = 0.0;
    for i in 0..=k {
        if i > 0 {
            d = nabla_s(&d, cache)?;
        }
        total += scale_factor(length, i, p) * lp_norm(&d, cache, p);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn arc(n: usize, from: f64, to: f64, radius: f64) -> DiscreteCurve {
        let pts: Vec<Vec<f64>> = (0..=n)
            .map(|i| {
                let th = from + (to - from) * i as f64 / n as f64;
                vec![radius * th.cos(), radius * th.sin()]
            })
            .collect();
        DiscreteCurve::from_points(&pts).unwrap()
    }

    fn line(n: usize) -> DiscreteCurve {
        let pts: Vec<Vec<f64>> = (0..=n).map(|i| vec![i as f64 / n as f64, 0.0]).collect();
        DiscreteCurve::from_points(&pts).unwrap()
    }

    #[test]
    fn rejects_invalid_curves() {
        let short = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
        assert!(matches!(
            DiscreteCurve::from_points(&short),
            Err(GeometryError::TooFewEdges { .. })
        ));
        let dup = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![2.0, 0.0],
            vec![3.0, 0.0],
        ];
        assert_eq!(
            DiscreteCurve::from_points(&dup),
            Err(GeometryError::DegenerateEdge(1))
        );
        let closed = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![0.0, 0.0],
        ];
        assert_eq!(
            DiscreteCurve::from_points(&closed),
            Err(GeometryError::CoincidentEndpoints)
        );
        let flat = Array2::zeros((6, 1));
        assert_eq!(DiscreteCurve::new(flat), Err(GeometryError::DimTooSmall(1)));
    }

    #[test]
    fn straight_segment_has_no_curvature() {
        let c = build_cache(&line(4));
        assert_abs_diff_eq!(c.total_length(), 1.0, epsilon = 1e-15);
        for i in 0..=4 {
            assert_eq!(c.curvature().row(i).to_vec(), vec![0.0, 0.0]);
            assert_eq!(c.tangent(i).to_vec(), vec![1.0, 0.0]);
        }
    }

    #[test]
    fn semicircle_curvature_is_unit() {
        let c = build_cache(&arc(64, 0.0, PI, 1.0));
        let worst = c
            .curvature_field()
            .magnitudes()
            .iter()
            .map(|k| (k - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 5e-3, "worst {worst}");
    }

    #[test]
    fn corner_stencil() {
        // Edges (1,0) and (0,1) of unit length: kappa_1 = 2((0,1)-(1,0))/2.
        let pts = vec![
            vec![-1.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 2.0],
            vec![1.0, 3.0],
        ];
        let c = build_cache(&DiscreteCurve::from_points(&pts).unwrap());
        assert_eq!(c.curvature().row(2).to_vec(), vec![-1.0, 1.0]);
        assert_eq!(c.curvature().row(1).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn weights_sum_to_length() {
        let c = build_cache(&arc(37, 0.2, 2.9, 1.7));
        let sum: f64 = c.vertex_weights().sum();
        let n = c.num_edges() as f64;
        assert!((sum - c.total_length()).abs() <= 16.0 * f64::EPSILON * n * c.total_length());
        for t in c.vertex_tangents().outer_iter() {
            assert!((norm(&t) - 1.0).abs() <= 8.0 * f64::EPSILON);
        }
        for t in c.edge_tangents().outer_iter() {
            assert!((norm(&t) - 1.0).abs() <= 8.0 * f64::EPSILON);
        }
    }

    #[test]
    fn projection_examples() {
        let p = normal_project(
            ArrayView1::from(&[1.0, 1.0]),
            ArrayView1::from(&[1.0, 0.0]),
        );
        assert_eq!(p.to_vec(), vec![0.0, 1.0]);
        let p = normal_project(
            ArrayView1::from(&[3.0, 0.0]),
            ArrayView1::from(&[1.0, 0.0]),
        );
        assert_eq!(p.to_vec(), vec![0.0, 0.0]);
        let p = normal_project(
            ArrayView1::from(&[0.0, -2.5]),
            ArrayView1::from(&[1.0, 0.0]),
        );
        assert_eq!(p.to_vec(), vec![0.0, -2.5]);
    }

    #[test]
    fn derivative_of_constant_and_linear_fields() {
        let curve = line(8);
        let c = build_cache(&curve);
        let constant = VertexField::from_array(Array2::from_elem((9, 2), 0.7));
        assert!(partial_s(&constant, &c).unwrap().max_norm() < 1e-13);

        let mut lin = Array2::zeros((9, 2));
        for i in 0..9 {
            lin[[i, 0]] = 3.0 * c.arclength()[i];
            lin[[i, 1]] = -2.0 * c.arclength()[i] + 1.0;
        }
        let d = partial_s(&VertexField::from_array(lin), &c).unwrap();
        for i in 1..8 {
            assert_abs_diff_eq!(d.row(i)[0], 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(d.row(i)[1], -2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_of_position_is_tangent() {
        let curve = arc(64, 0.0, PI, 1.0);
        let c = build_cache(&curve);
        let pos = VertexField::from_array(curve.vertices().to_owned());
        let d = partial_s(&pos, &c).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=64 {
            let th = PI * i as f64 / 64.0;
            let exact = [-th.sin(), th.cos()];
            worst = worst
                .max((d.row(i)[0] - exact[0]).abs())
                .max((d.row(i)[1] - exact[1]).abs());
        }
        assert!(worst <= 5e-3, "worst {worst}");
    }

    #[test]
    fn nabla_of_circle_curvature_vanishes() {
        let c = build_cache(&arc(128, 0.3, 2.4, 1.3));
        let d = nabla_s(&c.curvature_field(), &c).unwrap();
        assert!(d.max_norm() <= 1e-2, "{}", d.max_norm());
        let zero = VertexField::zeros(129, 2);
        assert_eq!(nabla_s(&zero, &c).unwrap(), zero);
    }

    #[test]
    fn nabla_output_is_normal() {
        let curve = arc(40, 0.0, 2.0, 1.0);
        let c = build_cache(&curve);
        let field = VertexField::from_array(curve.vertices().mapv(|v| v.powi(3)));
        let d = nabla_s(&field, &c).unwrap();
        for i in 0..=40 {
            assert!(dot(&d.row(i), &c.tangent(i)).abs() <= 1e-14 * (1.0 + norm(&d.row(i))));
        }
    }

    #[test]
    fn length_mismatch_is_reported() {
        let c = build_cache(&line(6));
        let field = VertexField::zeros(5, 2);
        assert_eq!(
            partial_s(&field, &c),
            Err(GeometryError::LengthMismatch {
                expected: 7,
                found: 5
            })
        );
    }

    #[test]
    fn reparametrize_line_and_segments() {
        let curve = line(8);
        let same = reparametrize_arclength(&curve, 8).unwrap();
        assert_eq!(same, curve);

        let pts: Vec<Vec<f64>> = [0.0, 0.1, 0.5, 0.9, 1.0]
            .iter()
            .map(|&x| vec![x, 0.0])
            .collect();
        let uneven = DiscreteCurve::from_points(&pts).unwrap();
        let even = reparametrize_arclength(&uneven, 4).unwrap();
        for (i, want) in [0.0, 0.25, 0.5, 0.75, 1.0].iter().enumerate() {
            assert_abs_diff_eq!(even.vertex(i)[0], *want, epsilon = 1e-15);
        }
        assert!(reparametrize_arclength(&uneven, 3).is_err());
    }

    #[test]
    fn reparametrize_semicircle_equal_spacing() {
        let curve = arc(64, 0.0, PI, 1.0);
        let out = reparametrize_arclength(&curve, 32).unwrap();
        assert_eq!(out.vertex(0), curve.vertex(0));
        assert_eq!(out.vertex(32), curve.vertex(64));
        let c = build_cache(&out);
        let h0 = c.edge_lengths()[0];
        for h in c.edge_lengths() {
            assert!((h - h0).abs() <= 1e-10 * h0);
        }
        let before = build_cache(&curve).total_length();
        // Resampling a polyline cuts corners; length is preserved to the
        // chord error, and exactly when no corner is cut.
        assert!(c.total_length() <= before * (1.0 + 1e-12));
        let again = reparametrize_arclength(&curve, 64).unwrap();
        let l2 = build_cache(&again).total_length();
        assert!((l2 - before).abs() <= 1e-12 * before);
    }

    #[test]
    fn norm_examples() {
        let curve = arc(64, 0.0, PI, 1.0);
        let c = build_cache(&curve);
        let mut ones = Array2::zeros((65, 2));
        ones.column_mut(1).fill(1.0);
        let l = c.total_length();
        assert_abs_diff_eq!(
            lp_norm(&VertexField::from_array(ones), &c, 2.0),
            l.sqrt(),
            epsilon = 1e-14
        );
        assert_eq!(lp_norm(&VertexField::zeros(65, 2), &c, 3.0), 0.0);
        assert_abs_diff_eq!(
            lp_norm(&c.curvature_field(), &c, 2.0),
            PI.sqrt(),
            epsilon = 1e-2
        );
        assert_abs_diff_eq!(
            lp_norm(&c.curvature_field(), &c, f64::INFINITY),
            1.0,
            epsilon = 5e-3
        );
    }

    #[test]
    fn scale_invariant_norm_examples() {
        let c = build_cache(&line(10));
        for k in 0..=6 {
            assert_eq!(scale_invariant_norm(&c, k, 2.0).unwrap(), 0.0);
        }
        assert!(matches!(
            scale_invariant_norm(&c, 7, 2.0),
            Err(GeometryError::StencilExhausted { order: 7, edges: 10 })
        ));

        let semi = arc(64, 0.0, PI, 1.0);
        let c = build_cache(&semi);
        assert_abs_diff_eq!(scale_invariant_norm(&c, 0, 2.0).unwrap(), PI, epsilon = 2e-2);

        let bumpy = arc(48, 0.1, 2.5, 0.8)
            .map_points(|p| {
                let mut q = p.to_owned();
                q[1] += 0.05 * (7.0 * p[0]).sin();
                q
            })
            .unwrap();
        let base = build_cache(&bumpy);
        for alpha in [0.5, 2.0, 10.0] {
            let scaled = build_cache(&bumpy.scaled(alpha).unwrap());
            for (k, p) in [(0, 2.0), (2, 2.0), (3, 4.0), (1, f64::INFINITY)] {
                let a = scale_invariant_norm(&base, k, p).unwrap();
                let b = scale_invariant_norm(&scaled, k, p).unwrap();
                assert!((a - b).abs() <= 1e-10 * a, "alpha {alpha} k {k}: {a} vs {b}");
            }
        }
    }
}
