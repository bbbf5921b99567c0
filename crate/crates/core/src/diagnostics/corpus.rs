//! Seeded random corpora of smooth curves and scalar fields.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NamedCurve, ScalarSample};
use crate::geometry::{DiscreteCurve, GeometryError};

/// Circular arc with a smooth radial perturbation
/// `r(u) = R (1 + sum_k a_k sin(k pi u + phi_k))`, `u in [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothArcSpec {
    pub radius: f64,
    pub start: f64,
    pub span: f64,
    /// `(k, a_k, phi_k)`
    pub modes: Vec<(u32, f64, f64)>,
}

impl SmoothArcSpec {
    pub fn sample(&self, n: usize) -> Result<DiscreteCurve, GeometryError> {
        let pts: Vec<Vec<f64>> = (0..=n)
            .map(|j| {
                let u = j as f64 / n as f64;
                let bump: f64 = self
                    .modes
                    .iter()
                    .map(|&(k, a, phi)| a * (k as f64 * PI * u + phi).sin())
                    .sum();
                let r = self.radius * (1.0 + bump);
                let th = self.start + self.span * u;
                vec![r * th.cos(), r * th.sin()]
            })
            .collect();
        DiscreteCurve::from_points(&pts)
    }
}

pub fn random_arcs(seed: u64, count: usize) -> Vec<SmoothArcSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let modes = (1..=rng.gen_range(1..=4u32))
                .map(|k| (k, rng.gen_range(-0.05..0.05), rng.gen_range(0.0..2.0 * PI)))
                .collect();
            SmoothArcSpec {
                radius: rng.gen_range(0.5..2.0),
                start: rng.gen_range(0.0..2.0 * PI),
                span: rng.gen_range(0.5..2.5),
                modes,
            }
        })
        .collect()
}

pub fn sample_arcs(specs: &[SmoothArcSpec], n: usize) -> Result<Vec<NamedCurve>, GeometryError> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(NamedCurve {
                name: format!("arc_{i:03}"),
                curve: s.sample(n)?,
            })
        })
        .collect()
}

/// `g(x) = c_0 + sum_k (a_k cos(2 pi k x) + b_k sin(2 pi k x))` on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigPolynomial {
    pub fn eval(&self, x: f64) -> f64 {
        let mut g = self.constant;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = 2.0 * PI * (k + 1) as f64 * x;
            g += a * w.cos() + b * w.sin();
        }
        g
    }

    pub fn sample(&self, name: String, n: usize) -> ScalarSample {
        let x: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
        ScalarSample {
            name,
            values: x.iter().map(|&t| self.eval(t)).collect(),
            x,
        }
    }
}

pub fn random_trig_polynomials(seed: u64, count: usize, max_degree: usize) -> Vec<TrigPolynomial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let degree = rng.gen_range(0..=max_degree);
            TrigPolynomial {
                constant: rng.gen_range(-1.0..1.0),
                cos: (0..degree).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                sin: (0..degree).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            }
        })
        .collect()
}

pub fn sample_fields(polys: &[TrigPolynomial], n: usize) -> Vec<ScalarSample> {
    polys
        .iter()
        .enumerate()
        .map(|(i, p)| p.sample(format!("trig_{i:03}"), n))
        .collect()
}
