//! Self-contained SVG charts: training curves with confidence bands and
//! CKA heatmap grids.

use std::collections::BTreeMap;
use std::fmt::Write;

use qdiv_core::similarity::SimilarityHeatmap;

use crate::output::TrainRow;

#[derive(Debug, Clone, PartialEq)]
pub struct BandPoint {
    pub step: u64,
    pub mean: f64,
    /// `1.96 · s / √n` with the sample standard deviation `s`; 0 for one seed.
    pub half_width: f64,
}

/// Aggregates per-seed curves at the steps they share.
pub fn aggregate(curves: &[Vec<(u64, f64)>]) -> Vec<BandPoint> {
    let mut by_step: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for c in curves {
        for &(s, v) in c {
            by_step.entry(s).or_default().push(v);
        }
    }
    by_step
        .into_iter()
        .filter(|(_, v)| v.len() == curves.len())
        .map(|(step, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let half_width = if v.len() < 2 {
                0.0
            } else {
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                1.96 * var.sqrt() / n.sqrt()
            };
            BandPoint { step, mean, half_width }
        })
        .collect()
}

pub fn return_curve(rows: &[TrainRow]) -> Vec<(u64, f64)> {
    rows.iter().map(|r| (r.step, r.return_mean)).collect()
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of mean return per method with a shaded band.
pub fn curves_svg(title: &str, series: &[(String, Vec<BandPoint>)]) -> String {
    let (w, h, pad) = (720.0, 420.0, 60.0);
    let pts = series.iter().flat_map(|(_, s)| s.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pts {
        x0 = x0.min(p.step as f64);
        x1 = x1.max(p.step as f64);
        y0 = y0.min(p.mean - p.half_width);
        y1 = y1.max(p.mean + p.half_width);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        (y0, y1) = (y0 - 1.0, y1 + 1.0);
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#, w / 2.0, escape(title)).unwrap();
    writeln!(
        s,
        r#"<g stroke="black" fill="none"><line x1="{pad}" y1="{}" x2="{}" y2="{}"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{}"/></g>"#,
        h - pad,
        w - pad,
        h - pad,
        h - pad
    )
    .unwrap();
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        writeln!(s, r#"<text x="{}" y="{y:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.3}</text>"#, pad - 4.0).unwrap();
    }
    for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
        writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{v}</text>"#, h - pad + 16.0).unwrap();
    }
    for (k, (label, pts)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        if pts.is_empty() {
            continue;
        }
        let upper: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.step as f64), sy(p.mean + p.half_width))).collect();
        let lower: Vec<String> = pts.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.step as f64), sy(p.mean - p.half_width))).collect();
        writeln!(s, r#"<polygon class="band" points="{} {}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#, upper.join(" "), lower.join(" ")).unwrap();
        let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.step as f64), sy(p.mean))).collect();
        writeln!(s, r#"<polyline class="mean" points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, line.join(" ")).unwrap();
        let ly = pad + 16.0 * k as f64;
        writeln!(s, r#"<text x="{}" y="{ly:.2}" font-family="sans-serif" font-size="12" fill="{colour}">{}</text>"#, w - pad - 150.0, escape(label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Cell grid coloured by CKA (white 0, dark blue 1); missing cells are grey.
pub fn heatmap_svg(title: &str, h: &SimilarityHeatmap) -> String {
    let cell = 48.0;
    let (left, top) = (70.0, 50.0);
    let (rows, cols) = (h.row_labels.len(), h.col_labels.len());
    let w = left + cell * cols as f64 + 20.0;
    let ht = top + cell * rows as f64 + 40.0;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{ht}" viewBox="0 0 {w} {ht}">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{ht}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#, w / 2.0, escape(title)).unwrap();
    for (i, r) in h.row_labels.iter().enumerate() {
        // first row label at the bottom, so corresponding layers run bottom-left to top-right
        let y = top + cell * (rows - 1 - i) as f64;
        writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#, left - 4.0, y + cell / 2.0 + 4.0, escape(r)).unwrap();
        for (j, v) in h.values[i].iter().enumerate() {
            let x = left + cell * j as f64;
            let (fill, text) = match v {
                Some(v) => {
                    let t = v.clamp(0.0, 1.0);
                    let c = |lo: f64, hi: f64| (lo + (hi - lo) * t).round() as u8;
                    (format!("#{:02x}{:02x}{:02x}", c(255.0, 8.0), c(255.0, 48.0), c(255.0, 107.0)), format!("{v:.2}"))
                }
                None => ("#bbbbbb".to_string(), "–".to_string()),
            };
            writeln!(s, r#"<rect class="cell" x="{x:.1}" y="{y:.1}" width="{cell}" height="{cell}" fill="{fill}" stroke="white"/>"#).unwrap();
            let ink = if v.is_some_and(|v| v > 0.5) { "white" } else { "black" };
            writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="10" fill="{ink}">{text}</text>"#, x + cell / 2.0, y + cell / 2.0 + 3.0).unwrap();
        }
    }
    for (j, c) in h.col_labels.iter().enumerate() {
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#, left + cell * j as f64 + cell / 2.0, top + cell * rows as f64 + 16.0, escape(c)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_seed_band_collapses() {
        let band = aggregate(&[vec![(1, 2.0), (2, 3.0)]]);
        assert!(band.iter().all(|b| b.half_width == 0.0));
        assert_eq!(band[1].mean, 3.0);
    }

    #[test]
    fn five_seed_half_width() {
        let vals = [1.0, 2.0, 3.0, 4.0, 5.0];
        let curves: Vec<_> = vals.iter().map(|&v| vec![(10, v)]).collect();
        let b = &aggregate(&curves)[0];
        // sample std of 1..5 is √2.5
        assert!((b.half_width - 1.96 * 2.5f64.sqrt() / 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(b.mean, 3.0);
    }

    #[test]
    fn heatmap_has_one_cell_per_entry() {
        let h = SimilarityHeatmap {
            row_labels: vec!["a".into(), "b".into(), "c".into()],
            col_labels: vec!["x".into(), "y".into()],
            values: vec![vec![Some(0.1), None], vec![Some(1.0), Some(0.5)], vec![Some(0.0), Some(0.9)]],
        };
        let svg = heatmap_svg("t", &h);
        assert_eq!(svg.matches(r#"class="cell""#).count(), 6);
    }

    #[test]
    fn curves_contain_one_line_per_series() {
        let pts = aggregate(&[vec![(1, 0.0), (2, 1.0)], vec![(1, 1.0), (2, 2.0)]]);
        let svg = curves_svg("r", &[("a".into(), pts.clone()), ("b<".into(), pts)]);
        assert_eq!(svg.matches(r#"class="mean""#).count(), 2);
        assert!(svg.contains("b&lt;"));
    }
}
