//! Initial curves: straight line, circular arc, perturbed line, or a file.

use std::f64::consts::PI;

use curveflow::geometry::{DiscreteCurve, GeometryError};
use curveflow::io::{read_curve_csv, IoError};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{Config, InitialSpec};

#[derive(Debug, Error)]
pub enum InitialError {
    #[error(transparent)]
    File(#[from] IoError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("initial curve does not match the configuration: {0}")]
    Validation(String),
}

pub fn build_initial(config: &Config) -> Result<DiscreteCurve, InitialError> {
    if let InitialSpec::File { path } = &config.initial {
        let curve = read_curve_csv(path)?;
        check_file_curve(&curve, config)?;
        return Ok(curve);
    }
    let (Some(n), Some(a), Some(b)) = (config.n, &config.f_minus, &config.f_plus) else {
        return Err(InitialError::Validation("n, f_minus and f_plus are required".into()));
    };
    let a = Array1::from(a.clone());
    let b = Array1::from(b.clone());
    let offsets = match &config.initial {
        InitialSpec::Line => None,
        InitialSpec::Arc { bulge } => return arc(&a, &b, n, *bulge),
        InitialSpec::PerturbedLine {
            amplitude,
            mode,
            seed,
        } => Some(mode_profile(n, *amplitude, *mode, *seed)),
        InitialSpec::File { .. } => unreachable!("handled above"),
    };
    let normal = unit_normal(&(&b - &a));
    let mut x = Array2::zeros((n + 1, a.len()));
    for i in 0..=n {
        let s = i as f64 / n as f64;
        let mut p = &a + &((&b - &a) * s);
        if let Some(off) = &offsets {
            p = p + &normal * off[i];
        }
        x.row_mut(i).assign(&p);
    }
    x.row_mut(0).assign(&a);
    x.row_mut(n).assign(&b);
    Ok(DiscreteCurve::new(x)?)
}

fn check_file_curve(curve: &DiscreteCurve, config: &Config) -> Result<(), InitialError> {
    let bad = |m: String| Err(InitialError::Validation(m));
    if let Some(dim) = config.dim {
        if curve.dim() != dim {
            return bad(format!("file has dimension {}, config says {dim}", curve.dim()));
        }
    }
    if let Some(n) = config.n {
        if curve.num_edges() != n {
            return bad(format!("file has {} edges, config says {n}", curve.num_edges()));
        }
    }
    let last = curve.num_edges();
    for (name, want, got) in [
        ("f_minus", &config.f_minus, curve.vertex(0)),
        ("f_plus", &config.f_plus, curve.vertex(last)),
    ] {
        if let Some(w) = want {
            if w.as_slice() != got.to_vec().as_slice() {
                return bad(format!("{name} does not match the file's endpoint"));
            }
        }
    }
    Ok(())
}

/// Unit vector normal to `d`: the +90 degree rotation in the plane, otherwise
/// the coordinate axis least aligned with `d`, orthogonalized.
pub fn unit_normal(d: &Array1<f64>) -> Array1<f64> {
    let len = d.dot(d).sqrt();
    let u = d / len;
    if d.len() == 2 {
        return Array1::from(vec![-u[1], u[0]]);
    }
    let axis = (0..u.len())
        .min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs()))
        .expect("dim >= 2");
    let mut e = Array1::zeros(u.len());
    e[axis] = 1.0;
    let v = &e - &(&u * u[axis]);
    let vl = v.dot(&v).sqrt();
    v / vl
}

/// Offsets along the normal: `amplitude sin(mode pi s)` without a seed; with
/// a seed, a random combination of modes `1..=mode` scaled so the weights'
/// absolute values sum to `amplitude`.
fn mode_profile(n: usize, amplitude: f64, mode: u32, seed: Option<u64>) -> Vec<f64> {
    let weights: Vec<(u32, f64)> = match seed {
        None => vec![(mode, amplitude)],
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<f64> = (0..mode).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let total: f64 = raw.iter().map(|w| w.abs()).sum();
            (1..=mode)
                .zip(raw)
                .map(|(k, w)| (k, amplitude * w / total.max(f64::MIN_POSITIVE)))
                .collect()
        }
    };
    (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            weights
                .iter()
                .map(|&(k, w)| w * (k as f64 * PI * s).sin())
                .sum()
        })
        .collect()
}

/// Circular arc through `a` and `b` whose midpoint sits `bulge` away from
/// the chord midpoint along [`unit_normal`]; vertices are equally spaced.
fn arc(a: &Array1<f64>, b: &Array1<f64>, n: usize, bulge: f64) -> Result<DiscreteCurve, InitialError> {
    let d = b - a;
    let c = d.dot(&d).sqrt();
    let u = &d / c;
    let normal = unit_normal(&d) * bulge.signum();
    let sag = bulge.abs();
    let mid = (a + b) * 0.5;
    let mut x = Array2::zeros((n + 1, a.len()));
    if sag == 0.0 {
        for i in 0..=n {
            x.row_mut(i).assign(&(a + &(&d * (i as f64 / n as f64))));
        }
    } else {
        let radius = (c * c / 4.0 + sag * sag) / (2.0 * sag);
        let center = &mid + &(&normal * (sag - radius));
        let half = (c / 2.0).atan2(radius - sag);
        for i in 0..=n {
            let phi = -half + 2.0 * half * i as f64 / n as f64;
            let p = &center + &(&u * (radius * phi.sin())) + &(&normal * (radius * phi.cos()));
            x.row_mut(i).assign(&p);
        }
    }
    x.row_mut(0).assign(a);
    x.row_mut(n).assign(b);
    Ok(DiscreteCurve::new(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;
    use curveflow::geometry::build_cache;
    use std::path::Path;

    fn config(extra: &str, a: &str, b: &str, n: usize) -> Config {
        let text = format!("dim = 2\nn = {n}\nf_minus = {a}\nf_plus = {b}\nlambda = 1.0\n{extra}");
        parse_config_str(&text, Path::new("t.toml"), Path::new(".")).unwrap()
    }

    #[test]
    fn line_spacing() {
        let c = build_initial(&config("", "[0.0, 0.0]", "[1.0, 0.0]", 8)).unwrap();
        assert_eq!(c.num_vertices(), 9);
        for i in 0..=8 {
            assert!((c.vertex(i)[0] - i as f64 / 8.0).abs() <= 1e-16);
            assert_eq!(c.vertex(i)[1], 0.0);
        }
    }

    #[test]
    fn semicircle_from_bulge() {
        let cfg = config("[initial]\nkind = \"arc\"\nbulge = 1.0\n", "[-1.0, 0.0]", "[1.0, 0.0]", 64);
        let c = build_initial(&cfg).unwrap();
        assert!((c.vertex(32)[0]).abs() <= 1e-15 && (c.vertex(32)[1] - 1.0).abs() <= 1e-15);
        let l = build_cache(&c).total_length();
        assert!((l - PI).abs() <= 1e-2);
        assert_eq!(c.vertex(0).to_vec(), vec![-1.0, 0.0]);
        assert_eq!(c.vertex(64).to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn zero_amplitude_is_the_line() {
        let line = build_initial(&config("", "[0.0, 1.0]", "[2.0, 3.0]", 16)).unwrap();
        for seed in ["", "seed = 4\n"] {
            let extra = format!("[initial]\nkind = \"perturbed_line\"\namplitude = 0.0\nmode = 3\n{seed}");
            let p = build_initial(&config(&extra, "[0.0, 1.0]", "[2.0, 3.0]", 16)).unwrap();
            assert_eq!(p, line);
        }
    }

    #[test]
    fn seeded_profile_is_bounded_and_reproducible() {
        let a = mode_profile(64, 0.1, 4, Some(9));
        assert_eq!(a, mode_profile(64, 0.1, 4, Some(9)));
        assert_ne!(a, mode_profile(64, 0.1, 4, Some(10)));
        assert!(a.iter().all(|v| v.abs() <= 0.1 + 1e-15));
        assert_eq!(a[0], 0.0);
    }

    #[test]
    fn normals() {
        let n = unit_normal(&Array1::from(vec![1.0, 0.0]));
        assert_eq!(n.to_vec(), vec![0.0, 1.0]);
        let d = Array1::from(vec![1.0, 2.0, 0.5]);
        let n = unit_normal(&d);
        assert!(n.dot(&d).abs() <= 1e-15);
        assert!((n.dot(&n) - 1.0).abs() <= 1e-15);
    }
}
