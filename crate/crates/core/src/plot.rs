//! Dependency-free SVG line charts of sweep rows.
//!
//! Output is a pure function of the rows and axes: coordinates are printed
//! with fixed precision and series are ordered by key, so identical input
//! gives identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::SweepRow;
use crate::model::Alpha;
use crate::report::round_sig6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variable {
    Gamma,
    K,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    AccessProb,
    MeanWr,
    MeanDec,
    MeanPeakStorage,
}

impl Metric {
    fn value(self, row: &SweepRow) -> f64 {
        match self {
            Metric::AccessProb => row.access_prob,
            Metric::MeanWr => row.mean_wr,
            Metric::MeanDec => row.mean_dec,
            Metric::MeanPeakStorage => row.mean_peak_storage,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::AccessProb => "access probability",
            Metric::MeanWr => "C_wr (mean write-read ops)",
            Metric::MeanDec => "C_dec (mean decoding ops)",
            Metric::MeanPeakStorage => "C_sto (mean peak storage)",
        }
    }

    fn log_scale(self) -> bool {
        self != Metric::AccessProb
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxesSpec {
    pub x: Variable,
    /// Variables identifying a series, in legend order.
    pub series: Vec<Variable>,
    /// One panel per metric.
    pub panels: Vec<Metric>,
}

impl AxesSpec {
    /// Access probability against load, one line per (K, alpha).
    pub fn by_gamma() -> Self {
        AxesSpec {
            x: Variable::Gamma,
            series: vec![Variable::K, Variable::Alpha],
            panels: vec![Metric::AccessProb],
        }
    }

    /// Access probability and the three mean counters against alpha, one
    /// line per (K, gamma).
    pub fn by_alpha() -> Self {
        AxesSpec {
            x: Variable::Alpha,
            series: vec![Variable::K, Variable::Gamma],
            panels: vec![Metric::AccessProb, Metric::MeanWr, Metric::MeanDec, Metric::MeanPeakStorage],
        }
    }
}

impl FromStr for AxesSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(AxesSpec::by_gamma()),
            "alpha" => Ok(AxesSpec::by_alpha()),
            other => Err(Error::Parse(format!("unknown plot axis '{other}' (expected gamma or alpha)"))),
        }
    }
}

/// Totally ordered key for a grid coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Coord {
    Int(u64),
    Micro(i64),
    Inf,
}

impl Coord {
    fn of(var: Variable, row: &SweepRow) -> Coord {
        match var {
            Variable::Gamma => Coord::Micro((round_sig6(row.gamma) * 1e6).round() as i64),
            Variable::K => Coord::Int(row.k as u64),
            Variable::Alpha => match row.alpha {
                Alpha::Finite(a) => Coord::Int(u64::from(a)),
                Alpha::Unbounded => Coord::Inf,
            },
        }
    }

    fn position(self) -> Option<f64> {
        match self {
            Coord::Int(v) => Some(v as f64),
            Coord::Micro(v) => Some(v as f64 / 1e6),
            Coord::Inf => None,
        }
    }

    fn label(self) -> String {
        match self {
            Coord::Int(v) => v.to_string(),
            Coord::Micro(v) => format!("{}", v as f64 / 1e6),
            Coord::Inf => "inf".into(),
        }
    }
}

fn var_name(var: Variable) -> &'static str {
    match var {
        Variable::Gamma => "gamma",
        Variable::K => "K",
        Variable::Alpha => "alpha",
    }
}

const PALETTE: [&str; 12] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939",
];
const DASHES: [&str; 3] = ["", "6,3", "2,2"];

const PANEL_W: f64 = 460.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const LEGEND_W: f64 = 170.0;

type Grid = BTreeMap<Vec<Coord>, BTreeMap<Coord, SweepRow>>;

fn build_grid(rows: &[SweepRow], axes: &AxesSpec) -> Result<(Grid, Vec<Coord>)> {
    if rows.len() < 2 {
        return Err(Error::Plot("at least two rows are needed to draw a line".into()));
    }
    if axes.panels.is_empty() {
        return Err(Error::Plot("no panels requested".into()));
    }
    let mut grid: Grid = BTreeMap::new();
    for row in rows {
        let x = Coord::of(axes.x, row);
        if x == Coord::Inf {
            return Err(Error::Plot(format!("{} = inf cannot be placed on the x axis", var_name(axes.x))));
        }
        let key: Vec<Coord> = axes.series.iter().map(|v| Coord::of(*v, row)).collect();
        if grid.entry(key).or_default().insert(x, row.clone()).is_some() {
            return Err(Error::Plot("duplicate rows for one grid cell".into()));
        }
    }
    let xs: BTreeSet<Coord> = grid.values().flat_map(|s| s.keys().copied()).collect();
    if xs.len() < 2 {
        return Err(Error::Plot("the x axis needs at least two distinct values".into()));
    }
    if grid.values().any(|s| s.len() != xs.len()) {
        return Err(Error::Plot("rows do not form a complete grid".into()));
    }
    Ok((grid, xs.into_iter().collect()))
}

fn num(v: f64) -> String {
    format!("{v:.2}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct YScale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl YScale {
    fn for_metric(metric: Metric, values: impl Iterator<Item = f64>) -> YScale {
        if !metric.log_scale() {
            return YScale { lo: 0.0, hi: 1.0, log: false };
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let t = (1.0 + v.max(0.0)).log10();
            lo = lo.min(t);
            hi = hi.max(t);
        }
        let lo = lo.floor();
        let hi = hi.ceil().max(lo + 1.0);
        YScale { lo, hi, log: true }
    }

    fn fraction(&self, v: f64) -> f64 {
        let t = if self.log { (1.0 + v.max(0.0)).log10() } else { v };
        ((t - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (lo, hi) = (self.lo as i32, self.hi as i32);
            (lo..=hi)
                .map(|e| ((e as f64 - self.lo) / (self.hi - self.lo), format!("1e{e}")))
                .collect()
        } else {
            (0..=5).map(|i| (i as f64 / 5.0, format!("{:.1}", i as f64 / 5.0))).collect()
        }
    }
}

fn series_label(axes: &AxesSpec, key: &[Coord]) -> String {
    axes.series
        .iter()
        .zip(key)
        .map(|(v, c)| format!("{}={}", var_name(*v), c.label()))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Renders the chart. Rows must form a full grid over (series, x).
pub fn render_svg(rows: &[SweepRow], axes: &AxesSpec) -> Result<String> {
    let (grid, xs) = build_grid(rows, axes)?;
    let x_positions: Vec<f64> = xs.iter().filter_map(|c| c.position()).collect();
    let (x_lo, x_hi) = (x_positions[0], x_positions[x_positions.len() - 1]);
    let cols = if axes.panels.len() > 1 { 2 } else { 1 };
    let rows_n = axes.panels.len().div_ceil(cols);
    let width = cols as f64 * PANEL_W + LEGEND_W;
    let height = rows_n as f64 * PANEL_H;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
        w = num(width),
        h = num(height)
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (p, metric) in axes.panels.iter().enumerate() {
        let ox = (p % cols) as f64 * PANEL_W;
        let oy = (p / cols) as f64 * PANEL_H;
        let (px0, px1) = (ox + MARGIN_L, ox + PANEL_W - MARGIN_R);
        let (py0, py1) = (oy + MARGIN_T, oy + PANEL_H - MARGIN_B);
        let scale = YScale::for_metric(*metric, grid.values().flat_map(|s| s.values().map(|r| metric.value(r))));
        let sx = |x: f64| px0 + (x - x_lo) / (x_hi - x_lo) * (px1 - px0);
        let sy = |v: f64| py1 - scale.fraction(v) * (py1 - py0);

        let _ = writeln!(svg, r#"<g class="panel" id="panel-{p}">"#);
        let _ = writeln!(
            svg,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
            num(px0),
            num(py0),
            num(px1 - px0),
            num(py1 - py0)
        );
        for (frac, label) in scale.ticks() {
            let y = py1 - frac * (py1 - py0);
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{label}</text>"##,
                num(px0),
                num(px1),
                num(px0 - 6.0),
                num(y + 4.0),
                y = num(y)
            );
        }
        for c in &xs {
            let x = sx(c.position().unwrap_or(x_hi));
            let _ = writeln!(
                svg,
                r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#333"/><text x="{x}" y="{}" text-anchor="middle">{}</text>"##,
                num(py1),
                num(py1 + 4.0),
                num(py1 + 16.0),
                c.label(),
                x = num(x)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num((px0 + px1) / 2.0),
            num(py1 + 36.0),
            var_name(axes.x)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" text-anchor="middle" transform="rotate(-90 {x} {y})">{}</text>"#,
            escape(metric.label()),
            x = num(ox + 16.0),
            y = num((py0 + py1) / 2.0)
        );
        for (s, series) in grid.values().enumerate() {
            let points: Vec<String> = series
                .iter()
                .filter_map(|(c, row)| c.position().map(|x| format!("{},{}", num(sx(x)), num(sy(metric.value(row))))))
                .collect();
            let dash = DASHES[(s / PALETTE.len()) % DASHES.len()];
            let dash_attr = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
            let _ = writeln!(
                svg,
                r#"<polyline class="series" fill="none" stroke="{}" stroke-width="1.5"{dash_attr} points="{}"/>"#,
                PALETTE[s % PALETTE.len()],
                points.join(" ")
            );
        }
        let _ = writeln!(svg, "</g>");
    }

    let lx = cols as f64 * PANEL_W + 10.0;
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (s, key) in grid.keys().enumerate() {
        let y = MARGIN_T + 16.0 * s as f64;
        let dash = DASHES[(s / PALETTE.len()) % DASHES.len()];
        let dash_attr = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"{dash_attr}/><text x="{}" y="{}">{}</text>"#,
            num(lx),
            num(lx + 24.0),
            PALETTE[s % PALETTE.len()],
            num(lx + 30.0),
            num(y + 4.0),
            escape(&series_label(axes, key)),
            y = num(y)
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(rows: &[SweepRow], axes: &AxesSpec, path: &Path) -> Result<()> {
    let svg = render_svg(rows, axes)?;
    std::fs::write(path, svg).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
