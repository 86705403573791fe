//! Static SVG: row-normalized confusion heatmap beside top-k importance bars.

use std::fmt::Write;

const CELL: f64 = 70.0;
const BAR_W: f64 = 260.0;
const BAR_H: f64 = 16.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// White-to-blue ramp for a rate in [0, 1].
fn shade(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let r = (255.0 - 200.0 * v).round() as u8;
    let g = (255.0 - 150.0 * v).round() as u8;
    format!("rgb({r},{g},255)")
}

pub fn render(classes: &[String], row_normalized: &[Vec<f64>], importances: &[(String, f64)]) -> String {
    let k = classes.len() as f64;
    let left = 60.0;
    let top = 50.0;
    let grid = CELL * k;
    let bars_x = left + grid + 200.0;
    let max_imp = importances.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let width = bars_x + BAR_W + 80.0;
    let height = (top + grid + 60.0).max(top + BAR_H * 1.25 * importances.len() as f64 + 40.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="24" font-size="14">Confusion (row-normalized)</text>"#);
    for (i, row) in row_normalized.iter().enumerate() {
        let y = top + CELL * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + CELL / 2.0 + 4.0,
            escape(&classes[i])
        );
        for (j, &v) in row.iter().enumerate() {
            let x = left + CELL * j as f64;
            let _ = writeln!(
                s,
                r##"<rect x="{x:.1}" y="{y:.1}" width="{CELL}" height="{CELL}" fill="{}" stroke="#666"/>"##,
                shade(v)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.1}%</text>"#,
                x + CELL / 2.0,
                y + CELL / 2.0 + 4.0,
                v * 100.0
            );
        }
    }
    for (j, c) in classes.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + CELL * j as f64 + CELL / 2.0,
            top + grid + 18.0,
            escape(c)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">predicted</text>"#,
        left + grid / 2.0,
        top + grid + 36.0
    );

    let _ = writeln!(s, r#"<text x="{bars_x}" y="24" font-size="14">Top {} features</text>"#, importances.len());
    for (i, (name, v)) in importances.iter().enumerate() {
        let y = top + BAR_H * 1.25 * i as f64;
        let w = if max_imp > 0.0 { BAR_W * v / max_imp } else { 0.0 };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            bars_x - 6.0,
            y + BAR_H - 4.0,
            escape(name)
        );
        let _ = writeln!(s, r##"<rect x="{bars_x}" y="{y:.1}" width="{w:.1}" height="{BAR_H}" fill="#4a7bd0"/>"##);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{v:.3}</text>"#, bars_x + w + 4.0, y + BAR_H - 4.0);
    }
    s.push_str("</svg>\n");
    s
}
