//! Plain SVG rendering with rectangles, polylines and text.

use std::fmt::Write;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Blue (−1) to white (0) to red (+1).
fn diverging(r: f64) -> String {
    let r = r.clamp(-1.0, 1.0);
    let fade = |x: f64| (255.0 * (1.0 - x)).round() as u8;
    if r >= 0.0 {
        format!("#ff{:02x}{:02x}", fade(r), fade(r))
    } else {
        format!("#{:02x}{:02x}ff", fade(-r), fade(-r))
    }
}

fn short(name: &str) -> &str {
    name.strip_prefix("original_").unwrap_or(name)
}

/// Correlation heatmap with feature labels on both axes.
pub fn heatmap(names: &[String], r: &[Vec<f64>]) -> String {
    let n = names.len();
    let cell = 18.0;
    let margin = 260.0;
    let size = margin + cell * n as f64 + 20.0;
    let mut s = header(size, size);
    for (i, name) in names.iter().enumerate() {
        let y = margin + cell * i as f64;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{}</text>",
            margin - 4.0,
            y + cell * 0.7,
            escape(short(name))
        );
        let x = margin + cell * i as f64;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" transform=\"rotate(-90 {:.1} {:.1})\">{}</text>",
            x + cell * 0.7,
            margin - 4.0,
            x + cell * 0.7,
            margin - 4.0,
            escape(short(name))
        );
        for (j, v) in r[i].iter().enumerate() {
            let _ = writeln!(
                s,
                "<rect x=\"{:.1}\" y=\"{y:.1}\" width=\"{cell}\" height=\"{cell}\" fill=\"{}\" stroke=\"#dddddd\"><title>{:.3}</title></rect>",
                margin + cell * j as f64,
                diverging(*v),
                v
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// One panel per feature; each course is a polyline of relative change (in
/// percent) over F1..F5, with F1 at zero.
pub fn small_multiples(panels: &[(String, Vec<[f64; 4]>)]) -> String {
    let cols = 4usize;
    let (pw, ph) = (220.0, 160.0);
    let rows = panels.len().div_ceil(cols).max(1);
    let mut s = header(pw * cols as f64, ph * rows as f64);
    for (p, (feature, lines)) in panels.iter().enumerate() {
        let ox = pw * (p % cols) as f64;
        let oy = ph * (p / cols) as f64;
        let (l, t, w, h) = (ox + 35.0, oy + 22.0, pw - 50.0, ph - 50.0);
        let lim = lines
            .iter()
            .flatten()
            .fold(1.0f64, |m, v| m.max(100.0 * v.abs()))
            .min(1000.0);
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\">{}</text>",
            ox + 8.0,
            oy + 14.0,
            escape(short(feature))
        );
        let _ = writeln!(s, "<rect x=\"{l:.1}\" y=\"{t:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"none\" stroke=\"#999999\"/>");
        let zero = t + h / 2.0;
        let _ = writeln!(s, "<line x1=\"{l:.1}\" y1=\"{zero:.1}\" x2=\"{:.1}\" y2=\"{zero:.1}\" stroke=\"#cccccc\"/>", l + w);
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"8\" text-anchor=\"end\">{lim:.0}%</text>",
            l - 2.0,
            t + 8.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"8\" text-anchor=\"end\">-{lim:.0}%</text>",
            l - 2.0,
            t + h
        );
        for (k, lbl) in ["F1", "F2", "F3", "F4", "F5"].iter().enumerate() {
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"8\" text-anchor=\"middle\">{lbl}</text>",
                l + w * k as f64 / 4.0,
                t + h + 10.0
            );
        }
        for (c, line) in lines.iter().enumerate() {
            let mut pts = vec![format!("{l:.1},{zero:.1}")];
            for (k, v) in line.iter().enumerate() {
                let y = zero - (100.0 * v).clamp(-lim, lim) / lim * h / 2.0;
                pts.push(format!("{:.1},{y:.1}", l + w * (k + 1) as f64 / 4.0));
            }
            let _ = writeln!(
                s,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\" opacity=\"0.7\"/>",
                pts.join(" "),
                PALETTE[c % PALETTE.len()]
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Kaplan-Meier step curves, one per group.
pub fn km_plot(title: &str, curves: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h) = (520.0, 360.0);
    let (l, t, pw, ph) = (55.0, 35.0, 420.0, 270.0);
    let tmax = curves
        .iter()
        .flat_map(|(_, c)| c.iter().map(|p| p.0))
        .fold(1.0f64, f64::max);
    let x = |v: f64| l + pw * v / tmax;
    let y = |v: f64| t + ph * (1.0 - v);
    let mut s = header(w, h);
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(s, "<rect x=\"{l}\" y=\"{t}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#999999\"/>");
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\" text-anchor=\"end\">{v:.2}</text>",
            l - 4.0,
            y(v) + 3.0
        );
        let tv = tmax * v;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\" text-anchor=\"middle\">{tv:.0}</text>",
            x(tv),
            t + ph + 14.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">days</text>",
        l + pw / 2.0,
        h - 12.0
    );
    for (g, (label, pts)) in curves.iter().enumerate() {
        let colour = PALETTE[g % PALETTE.len()];
        let mut path = String::new();
        let mut prev = 1.0;
        let _ = write!(path, "{:.1},{:.1}", x(0.0), y(1.0));
        for &(tt, sv) in pts {
            let _ = write!(
                path,
                " {:.1},{:.1} {:.1},{:.1}",
                x(tt),
                y(prev),
                x(tt),
                y(sv)
            );
            prev = sv;
        }
        let _ = write!(path, " {:.1},{:.1}", x(tmax), y(prev));
        let _ = writeln!(
            s,
            "<polyline points=\"{path}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"/>"
        );
        let ly = t + 14.0 + 14.0 * g as f64;
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{ly:.1}\" font-size=\"10\" fill=\"{colour}\" text-anchor=\"end\">{}</text>", l + pw - 6.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}
