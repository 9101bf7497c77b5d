//! Plain SVG rendering of an experiment: faint per-trial traces and bold
//! trial means, dynamic against static.

use std::fmt::Write;

use hdgame::experiment::{Dataset, Model};

use crate::experiment::Summary;

const WIDTH: f64 = 720.0;
const PANEL: f64 = 260.0;
const MARGIN: f64 = 48.0;
/// Traces drawn per model; means always use every trial.
const MAX_TRACES: usize = 40;

const DYNAMIC_COLOR: &str = "#1f77b4";
const STATIC_COLOR: &str = "#d62728";

struct Panel {
    top: f64,
    y_max: f64,
    horizon: usize,
}

impl Panel {
    fn x(&self, t: usize) -> f64 {
        let span = (self.horizon.max(2) - 1) as f64;
        MARGIN + (WIDTH - 2.0 * MARGIN) * t as f64 / span
    }

    fn y(&self, v: f64) -> f64 {
        self.top + PANEL - PANEL * (v / self.y_max).clamp(0.0, 1.0)
    }

    fn polyline(&self, out: &mut String, values: impl Iterator<Item = f64>, style: &str) {
        let pts: Vec<String> = values
            .enumerate()
            .map(|(t, v)| format!("{:.2},{:.2}", self.x(t), self.y(v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" {style} points="{}"/>"#,
            pts.join(" ")
        );
    }

    fn frame(&self, out: &mut String, title: &str, y_label: &str) {
        let (x0, x1) = (MARGIN, WIDTH - MARGIN);
        let (y0, y1) = (self.top, self.top + PANEL);
        let _ = writeln!(
            out,
            r##"<rect x="{x0}" y="{y0}" width="{}" height="{PANEL}" fill="none" stroke="#444"/>"##,
            x1 - x0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x0}" y="{}" font-size="13">{title}</text>"#,
            y0 - 8.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x0}" y="{}" font-size="11">0</text>"#,
            y1 + 14.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">t = {}</text>"#,
            x1,
            y1 + 14.0,
            self.horizon - 1
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            y0 + 4.0,
            fmt_tick(self.y_max)
        );
        let _ = writeln!(
            out,
            r#"<text x="12" y="{}" font-size="11" transform="rotate(-90 12 {})">{y_label}</text>"#,
            y0 + PANEL / 2.0,
            y0 + PANEL / 2.0
        );
    }
}

fn fmt_tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

pub fn render(data: &Dataset, summary: &Summary) -> String {
    let with_infection = summary.dynamic.mean_infected.is_some();
    let panels = if with_infection { 2.0 } else { 1.0 };
    let height = panels * (PANEL + 2.0 * MARGIN);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let counts = Panel {
        top: MARGIN,
        y_max: data.n as f64,
        horizon: data.horizon,
    };
    counts.frame(
        &mut out,
        "Agents playing 1 (blue: history-dependent, red: static reference)",
        "count",
    );
    for (model, color) in [
        (Model::Static, STATIC_COLOR),
        (Model::Dynamic, DYNAMIC_COLOR),
    ] {
        for r in data.of(model).take(MAX_TRACES) {
            let style = format!(r#"stroke="{color}" stroke-opacity="0.12" stroke-width="1""#);
            counts.polyline(&mut out, r.count_ones.iter().map(|c| *c as f64), &style);
        }
    }
    for (series, color) in [
        (&summary.reference, STATIC_COLOR),
        (&summary.dynamic, DYNAMIC_COLOR),
    ] {
        let style = format!(r#"stroke="{color}" stroke-width="2.5""#);
        counts.polyline(&mut out, series.mean_count.iter().copied(), &style);
    }

    if let Some(mean) = &summary.dynamic.mean_infected {
        let infection = Panel {
            top: MARGIN * 3.0 + PANEL,
            y_max: 1.0,
            horizon: data.horizon,
        };
        infection.frame(&mut out, "Infected fraction", "I(t)");
        for r in data.of(Model::Dynamic).take(MAX_TRACES) {
            if let Some(i) = &r.infected {
                let style =
                    format!(r#"stroke="{DYNAMIC_COLOR}" stroke-opacity="0.12" stroke-width="1""#);
                infection.polyline(&mut out, i.iter().copied(), &style);
            }
        }
        let style = format!(r#"stroke="{DYNAMIC_COLOR}" stroke-width="2.5""#);
        infection.polyline(&mut out, mean.iter().copied(), &style);
        if let Some(t) = summary.entry_time {
            let x = infection.x(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#888" stroke-dasharray="4 3"/>"##,
                infection.top,
                infection.top + PANEL
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
