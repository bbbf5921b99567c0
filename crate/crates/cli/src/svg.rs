//! Polyline overlay of selected snapshots, projected onto the first two
//! coordinates.

use std::fmt::Write;

use curveflow::geometry::DiscreteCurve;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;

/// At most `max` curves, evenly spread and always including first and last.
pub fn pick<T>(items: &[T], max: usize) -> Vec<&T> {
    if items.len() <= max || max < 2 {
        return items.iter().collect();
    }
    (0..max)
        .map(|k| &items[k * (items.len() - 1) / (max - 1)])
        .collect()
}

pub fn render(curves: &[(&str, &DiscreteCurve)]) -> String {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for (_, c) in curves {
        for p in c.vertices().outer_iter() {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let height = (hi[1] - lo[1]) * scale + 2.0 * MARGIN;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{height:.1}" viewBox="0 0 {SIZE} {height:.1}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let count = curves.len().max(2) - 1;
    for (k, (label, c)) in curves.iter().enumerate() {
        let shade = 200 - (200 * k / count) as u32;
        let pts: Vec<String> = c
            .vertices()
            .outer_iter()
            .map(|p| {
                let x = MARGIN + (p[0] - lo[0]) * scale;
                let y = height - MARGIN - (p[1] - lo[1]) * scale;
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="rgb({shade},{shade},255)" stroke-width="1.5" points="{}"><title>{label}</title></polyline>"#,
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_ends() {
        let v: Vec<usize> = (0..20).collect();
        let p: Vec<usize> = pick(&v, 5).into_iter().copied().collect();
        assert_eq!(p.first(), Some(&0));
        assert_eq!(p.last(), Some(&19));
        assert_eq!(p.len(), 5);
        assert_eq!(pick(&v[..3], 5).len(), 3);
    }

    #[test]
    fn renders_polylines() {
        let pts: Vec<Vec<f64>> = (0..=4).map(|i| vec![i as f64, (i * i) as f64, 7.0]).collect();
        let c = DiscreteCurve::from_points(&pts).unwrap();
        let svg = render(&[("a", &c), ("b", &c)]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg"));
    }
}
