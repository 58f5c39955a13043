//! CSV and SVG renderings of evaluation results.
//!
//! Output is a pure function of the input: no timestamps, fixed float
//! formatting, fixed colours. SVG files are self-contained.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::IoError;
use crate::eval::stats::{LengthHistogram, TokenHistogram, TOKEN_BINS};
use crate::eval::{Band, EvalError, PassAtKReport, UnionReport};

#[derive(Debug, Error)]
pub enum PlotError {
    #[error(transparent)]
    Empty(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy)]
pub enum Artifact<'a> {
    PassAtK(&'a PassAtKReport),
    Union(&'a UnionReport),
    Lengths(&'a [LengthHistogram]),
    Tokens(&'a [TokenHistogram]),
}

impl Artifact<'_> {
    pub fn render(&self, format: Format) -> Result<String, PlotError> {
        match (self, format) {
            (Artifact::PassAtK(r), Format::Csv) => pass_at_k_csv(r),
            (Artifact::PassAtK(r), Format::Svg) => pass_at_k_svg(r),
            (Artifact::Union(r), Format::Csv) => union_csv(r),
            (Artifact::Union(r), Format::Svg) => Ok(union_svg(r)),
            (Artifact::Lengths(h), Format::Csv) => lengths_csv(h),
            (Artifact::Lengths(h), Format::Svg) => lengths_svg(h),
            (Artifact::Tokens(h), Format::Csv) => tokens_csv(h),
            (Artifact::Tokens(h), Format::Svg) => tokens_svg(h),
        }
    }
}

/// Renders `artifact` and writes it to `out`. Nothing is written when
/// rendering fails.
pub fn emit_plot(artifact: Artifact<'_>, format: Format, out: &Path) -> Result<(), PlotError> {
    let text = artifact.render(format)?;
    fs::write(out, text).map_err(|e| IoError::io(out, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PassAtKRow {
    k: usize,
    solve_rate: f64,
    band_min: Option<f64>,
    band_max: Option<f64>,
    theorems: usize,
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, PlotError> {
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn pass_at_k_csv(r: &PassAtKReport) -> Result<String, PlotError> {
    if r.k_values.is_empty() {
        return Err(EvalError::NoKValues.into());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, &k) in r.k_values.iter().enumerate() {
        w.serialize(PassAtKRow {
            k,
            solve_rate: r.solve_rate[i],
            band_min: r.bands[i].map(|b| b.min),
            band_max: r.bands[i].map(|b| b.max),
            theorems: r.theorems,
        })?;
    }
    finish(w)
}

pub fn read_pass_at_k_csv(text: &str) -> Result<PassAtKReport, PlotError> {
    let mut report = PassAtKReport {
        theorems: 0,
        k_values: Vec::new(),
        solve_rate: Vec::new(),
        bands: Vec::new(),
    };
    for row in csv::Reader::from_reader(text.as_bytes()).deserialize() {
        let row: PassAtKRow = row?;
        report.theorems = row.theorems;
        report.k_values.push(row.k);
        report.solve_rate.push(row.solve_rate);
        report.bands.push(match (row.band_min, row.band_max) {
            (Some(min), Some(max)) => Some(Band { min, max }),
            _ => None,
        });
    }
    if report.k_values.is_empty() {
        return Err(EvalError::NoKValues.into());
    }
    Ok(report)
}

pub fn union_csv(r: &UnionReport) -> Result<String, PlotError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config", "rate"])?;
    for (i, rate) in r.rates.iter().enumerate() {
        w.write_record([i.to_string(), rate.to_string()])?;
    }
    w.write_record(["union".to_string(), r.rate.to_string()])?;
    finish(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthRow {
    pub round: usize,
    pub bin: usize,
    pub count: usize,
}

pub fn lengths_csv(h: &[LengthHistogram]) -> Result<String, PlotError> {
    if h.is_empty() {
        return Err(EvalError::NoData.into());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for hist in h {
        for (&bin, &count) in &hist.bins {
            w.serialize(LengthRow {
                round: hist.round,
                bin,
                count,
            })?;
        }
    }
    finish(w)
}

pub fn read_lengths_csv(text: &str) -> Result<Vec<LengthRow>, PlotError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(PlotError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRow {
    pub round: usize,
    pub bin: String,
    pub count: usize,
    pub percent: f64,
}

pub fn tokens_csv(h: &[TokenHistogram]) -> Result<String, PlotError> {
    if h.is_empty() {
        return Err(EvalError::NoData.into());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for hist in h {
        for (i, label) in TOKEN_BINS.iter().enumerate() {
            w.serialize(TokenRow {
                round: hist.round,
                bin: label.to_string(),
                count: hist.counts[i],
                percent: hist.percent[i],
            })?;
        }
    }
    finish(w)
}

pub fn read_tokens_csv(text: &str) -> Result<Vec<TokenRow>, PlotError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(PlotError::from))
        .collect()
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn colour(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Plot area with linear mapping from data coordinates.
struct Canvas {
    out: String,
    x: (f64, f64),
    y: (f64, f64),
}

impl Canvas {
    fn new(title: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - LEFT - RIGHT,
            HEIGHT - TOP - BOTTOM
        );
        let widen = |(a, b): (f64, f64)| if a == b { (a - 0.5, b + 0.5) } else { (a, b) };
        Canvas {
            out,
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn x_tick(&mut self, x: f64, label: &str) {
        let px = self.px(x);
        let base = HEIGHT - BOTTOM;
        let _ = writeln!(
            self.out,
            r#"<line x1="{px:.2}" y1="{base}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            base + 5.0,
            base + 18.0,
            escape(label)
        );
    }

    fn y_tick(&mut self, y: f64, label: &str) {
        let py = self.py(y);
        let _ = writeln!(
            self.out,
            r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            escape(label)
        );
    }

    fn axis_labels(&mut self, x: &str, y: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
            HEIGHT - 15.0,
            escape(x)
        );
        let _ = writeln!(
            self.out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
            TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
            escape(y)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str) {
        let _ = writeln!(
            self.out,
            r#"<polyline fill="none" stroke="{stroke}" stroke-width="2" points="{}"/>"#,
            self.points(pts)
        );
        for &(x, y) in pts {
            let _ = writeln!(
                self.out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{stroke}"/>"#,
                self.px(x),
                self.py(y)
            );
        }
    }

    fn polygon(&mut self, pts: &[(f64, f64)], fill: &str) {
        let _ = writeln!(
            self.out,
            r#"<polygon fill="{fill}" fill-opacity="0.25" stroke="none" points="{}"/>"#,
            self.points(pts)
        );
    }

    fn segment(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str) {
        let _ = writeln!(
            self.out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{stroke}"/>"#,
            self.px(a.0),
            self.py(a.1),
            self.px(b.0),
            self.py(b.1)
        );
    }

    fn bar(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, fill: &str) {
        let (top, bottom) = (self.py(y1), self.py(y0));
        let _ = writeln!(
            self.out,
            r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            self.px(x0),
            self.px(x1) - self.px(x0),
            bottom - top
        );
    }

    fn legend(&mut self, entries: &[String]) {
        for (i, e) in entries.iter().enumerate() {
            let y = TOP + 15.0 + 16.0 * i as f64;
            let x = WIDTH - RIGHT - 110.0;
            let _ = writeln!(
                self.out,
                r#"<rect x="{x}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{y}">{}</text>"#,
                y - 10.0,
                colour(i),
                x + 18.0,
                escape(e)
            );
        }
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Solve rate against k on a log-scaled x axis, with shaded min–max bands.
pub fn pass_at_k_svg(r: &PassAtKReport) -> Result<String, PlotError> {
    if r.k_values.is_empty() {
        return Err(EvalError::NoKValues.into());
    }
    let mut order: Vec<usize> = (0..r.k_values.len()).collect();
    order.sort_by_key(|&i| r.k_values[i]);
    let lx = |i: usize| (r.k_values[i] as f64).log10();
    let xs = (lx(order[0]), lx(*order.last().expect("non-empty")));
    let mut c = Canvas::new("pass@K", xs, (0.0, 1.0));
    for i in 0..=4 {
        let y = i as f64 / 4.0;
        c.y_tick(y, &format!("{:.0}%", y * 100.0));
    }
    for &i in &order {
        c.x_tick(lx(i), &r.k_values[i].to_string());
    }
    c.axis_labels("K (passes, log scale)", "solve rate");
    let banded: Vec<(usize, Band)> = order
        .iter()
        .filter_map(|&i| r.bands[i].map(|b| (i, b)))
        .collect();
    if banded.len() == order.len() && banded.len() > 1 {
        let mut poly: Vec<(f64, f64)> = banded.iter().map(|&(i, b)| (lx(i), b.max)).collect();
        poly.extend(banded.iter().rev().map(|&(i, b)| (lx(i), b.min)));
        c.polygon(&poly, colour(0));
    } else {
        for &(i, b) in &banded {
            c.segment((lx(i), b.min), (lx(i), b.max), colour(0));
        }
    }
    let pts: Vec<(f64, f64)> = order.iter().map(|&i| (lx(i), r.solve_rate[i])).collect();
    c.polyline(&pts, colour(0));
    Ok(c.finish())
}

/// Share of proofs per length, one line per round.
pub fn lengths_svg(h: &[LengthHistogram]) -> Result<String, PlotError> {
    if h.is_empty() {
        return Err(EvalError::NoData.into());
    }
    let max_len = h
        .iter()
        .filter_map(|x| x.bins.keys().next_back().copied())
        .max()
        .unwrap_or(1);
    let mut c = Canvas::new("proof length by round", (0.0, max_len as f64), (0.0, 1.0));
    let step = (max_len / 10).max(1);
    for l in (0..=max_len).step_by(step) {
        c.x_tick(l as f64, &l.to_string());
    }
    for i in 0..=4 {
        let y = i as f64 / 4.0;
        c.y_tick(y, &format!("{:.0}%", y * 100.0));
    }
    c.axis_labels("proof length (tactics)", "share of proofs");
    for (i, hist) in h.iter().enumerate() {
        let pts: Vec<(f64, f64)> = (0..=max_len)
            .map(|l| {
                let n = hist.bins.get(&l).copied().unwrap_or(0);
                (l as f64, n as f64 / hist.count as f64)
            })
            .collect();
        c.polyline(&pts, colour(i));
    }
    let legend: Vec<String> = h
        .iter()
        .map(|x| format!("round {} (mean {:.2})", x.round, x.mean))
        .collect();
    c.legend(&legend);
    Ok(c.finish())
}

/// Grouped bars per token bin, percentages on a log-scaled y axis
/// (0.01% to 100%). Empty bins are not drawn.
pub fn tokens_svg(h: &[TokenHistogram]) -> Result<String, PlotError> {
    if h.is_empty() {
        return Err(EvalError::NoData.into());
    }
    let (lo, hi) = (-2.0, 2.0);
    let mut c = Canvas::new("tactic length by round", (0.0, TOKEN_BINS.len() as f64), (lo, hi));
    for e in -2..=2 {
        c.y_tick(e as f64, &format!("{}%", 10f64.powi(e)));
    }
    for (b, label) in TOKEN_BINS.iter().enumerate() {
        c.x_tick(b as f64 + 0.5, label);
    }
    c.axis_labels("tokens per tactic", "share of tactics (log scale)");
    let width = 0.8 / h.len() as f64;
    for (i, hist) in h.iter().enumerate() {
        for (b, lp) in hist.log_percent().iter().enumerate() {
            if let Some(v) = lp {
                let x0 = b as f64 + 0.1 + width * i as f64;
                c.bar(x0, x0 + width, lo, v.clamp(lo, hi), colour(i));
            }
        }
    }
    let legend: Vec<String> = h.iter().map(|x| format!("round {}", x.round)).collect();
    c.legend(&legend);
    Ok(c.finish())
}

/// One bar per configuration plus the union.
pub fn union_svg(r: &UnionReport) -> String {
    let n = r.rates.len() + 1;
    let mut c = Canvas::new("accumulative union", (0.0, n as f64), (0.0, 1.0));
    for i in 0..=4 {
        let y = i as f64 / 4.0;
        c.y_tick(y, &format!("{:.0}%", y * 100.0));
    }
    for (i, rate) in r.rates.iter().chain([&r.rate]).enumerate() {
        let label = if i + 1 == n { "union".to_string() } else { format!("config {i}") };
        c.x_tick(i as f64 + 0.5, &label);
        c.bar(i as f64 + 0.15, i as f64 + 0.85, 0.0, *rate, colour(i));
    }
    c.axis_labels("configuration", "solve rate");
    c.finish()
}
