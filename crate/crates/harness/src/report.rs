//! CSV tables and the SVG decay chart derived from a summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rfim_core::experiments::{DecayFit, Summary};
use serde_json::{Map, Value};

use crate::error::{HarnessError, Result};
use crate::output::SummaryFile;

pub const TABLE_FILE: &str = "table.csv";
pub const FIT_FILE: &str = "fit.csv";
pub const CHART_FILE: &str = "decay.svg";

/// Flatten nested objects into dotted keys; arrays stay as JSON text.
fn flatten(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => {
            out.insert(prefix.to_owned(), other.clone());
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_csv(path: &Path, rows: &[Map<String, Value>]) -> Result<()> {
    let mut columns: Vec<String> = vec!["epsilon".into()];
    for row in rows {
        for k in row.keys() {
            if !columns.contains(k) {
                columns.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(&columns).map_err(|e| csv_error(path, e))?;
    for row in rows {
        let line: Vec<String> = columns.iter().map(|c| row.get(c).map(cell).unwrap_or_default()).collect();
        w.write_record(&line).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(HarnessError::io(path))
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    HarnessError::io(path)(std::io::Error::other(e))
}

type Rows = Vec<Map<String, Value>>;

/// Per-size rows and whole-run fit rows, each tagged with its epsilon.
fn tables(summary: &SummaryFile) -> (Rows, Rows) {
    let (mut per_size, mut fits) = (Vec::new(), Vec::new());
    for run in &summary.runs {
        let Value::Object(mut top) = serde_json::to_value(&run.summary).expect("summaries serialize") else {
            continue;
        };
        top.remove("kind");
        let sizes = top.remove("points").or_else(|| top.remove("per_n"));
        for item in sizes.as_ref().and_then(Value::as_array).into_iter().flatten() {
            let mut row = Map::new();
            row.insert("epsilon".into(), run.epsilon.into());
            flatten("", item, &mut row);
            per_size.push(row);
        }
        if !top.is_empty() {
            let mut row = Map::new();
            row.insert("epsilon".into(), run.epsilon.into());
            flatten("", &Value::Object(top), &mut row);
            fits.push(row);
        }
    }
    (per_size, fits)
}

pub fn write_report(dir: &Path, summary: &SummaryFile) -> Result<()> {
    let (per_size, fits) = tables(summary);
    write_csv(&dir.join(TABLE_FILE), &per_size)?;
    if !fits.is_empty() {
        write_csv(&dir.join(FIT_FILE), &fits)?;
    }
    let decays: Vec<&DecayFit> = summary
        .runs
        .iter()
        .filter_map(|r| match &r.summary {
            Summary::Mn(fit) => Some(fit),
            _ => None,
        })
        .collect();
    if !decays.is_empty() {
        let path = dir.join(CHART_FILE);
        fs::write(&path, decay_chart(&decays)).map_err(HarnessError::io(&path))?;
    }
    Ok(())
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 30.0, 30.0, 55.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Axis {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, from: f64, to: f64) -> Self {
        let (lo, hi) = if hi - lo < 1e-9 { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
        let pad = (hi - lo) * 0.06;
        Self { lo: lo - pad, hi: hi + pad, from, to }
    }

    fn map(&self, x: f64) -> f64 {
        self.from + (x - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }

    fn ticks(&self) -> Vec<f64> {
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let mut t = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= self.hi + 1e-12 {
            out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
            t += step;
        }
        out
    }
}

/// `ln m_N` against `N` with delta-method error bars and the fitted line.
pub fn decay_chart(fits: &[&DecayFit]) -> String {
    let points: Vec<(f64, f64, f64)> = fits
        .iter()
        .flat_map(|f| f.points.iter())
        .filter(|p| p.m_hat.estimate > 0.0)
        .map(|p| (f64::from(p.n), p.m_hat.estimate.ln(), p.m_hat.se / p.m_hat.estimate))
        .collect();
    let (left, right, top, bottom) = MARGIN;
    let min = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    let (x_lo, x_hi, y_lo, y_hi) = if points.is_empty() {
        (0.0, 1.0, -1.0, 0.0)
    } else {
        (
            min(&mut points.iter().map(|p| p.0)),
            max(&mut points.iter().map(|p| p.0)),
            min(&mut points.iter().map(|p| p.1 - p.2)),
            max(&mut points.iter().map(|p| p.1 + p.2)),
        )
    };
    let x = Axis::new(x_lo, x_hi, left, WIDTH - right);
    let y = Axis::new(y_lo, y_hi, HEIGHT - bottom, top);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (left, WIDTH - right, HEIGHT - bottom, top);
    let _ = writeln!(s, r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#);
    for t in x.ticks() {
        let px = x.map(t);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            y0 + 5.0,
            y0 + 18.0
        );
    }
    for t in y.ticks() {
        let py = y.map(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            trim(t)
        );
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">N</text>"#, (x0 + x1) / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        s,
        r#"<text transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle">ln m_N</text>"#,
        (y0 + y1) / 2.0
    );

    for (k, fit) in fits.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        for p in fit.points.iter().filter(|p| p.m_hat.estimate > 0.0) {
            let (px, ly, err) = (x.map(f64::from(p.n)), p.m_hat.estimate.ln(), p.m_hat.se / p.m_hat.estimate);
            let (ya, yb) = (y.map(ly - err), y.map(ly + err));
            let _ = writeln!(
                s,
                r#"<line x1="{px:.2}" y1="{ya:.2}" x2="{px:.2}" y2="{yb:.2}" stroke="{color}"/><line x1="{:.2}" y1="{ya:.2}" x2="{:.2}" y2="{ya:.2}" stroke="{color}"/><line x1="{:.2}" y1="{yb:.2}" x2="{:.2}" y2="{yb:.2}" stroke="{color}"/><circle cx="{px:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                px - 4.0,
                px + 4.0,
                px - 4.0,
                px + 4.0,
                y.map(ly)
            );
        }
        let mut label = format!("eps = {}", fit.epsilon);
        if let Some(rate) = &fit.rate {
            let (na, nb) = (x.lo, x.hi);
            let line = |n: f64| rate.intercept - rate.c_hat * n;
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="6,4" clip-path="url(#plot)"/>"#,
                x.map(na),
                y.map(line(na)),
                x.map(nb),
                y.map(line(nb))
            );
            let _ = write!(label, ", slope = {} +/- {}", trim(-rate.c_hat), trim(rate.c_se));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="{color}">{label}</text>"#,
            x1 - 4.0,
            y1 + 14.0 + 16.0 * k as f64
        );
    }
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{x0}" y="{y1}" width="{:.2}" height="{:.2}"/></clipPath></defs>"#,
        x1 - x0,
        y0 - y1
    );
    s.push_str("</svg>\n");
    s
}

fn trim(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::EpsilonSummary;
    use rfim_core::experiments::{run, ExperimentKind, ExperimentParams, RunOptions};

    fn mn_summary() -> SummaryFile {
        let p = ExperimentParams::new(ExperimentKind::Mn, vec![0, 2, 4], 2.0, 300, 3);
        let summary = run(&p, RunOptions::default()).unwrap().summary;
        SummaryFile { experiment: ExperimentKind::Mn, master_seed: 3, runs: vec![EpsilonSummary { epsilon: 2.0, summary }] }
    }

    #[test]
    fn ticks_are_round() {
        let a = Axis { lo: 0.0, hi: 32.0, from: 0.0, to: 1.0 };
        assert_eq!(a.ticks(), vec![0.0, 10.0, 20.0, 30.0]);
        assert_eq!(trim(-0.25), "-0.25");
        assert_eq!(trim(2.0), "2");
    }

    #[test]
    fn tables_have_one_row_per_size() {
        let (rows, fits) = tables(&mn_summary());
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].get("N"), Some(&Value::from(2)));
        assert!(rows[0].contains_key("m_hat.estimate"));
        assert_eq!(fits.len(), 1);
        assert!(fits[0].contains_key("strictly_decreasing"));
    }

    #[test]
    fn chart_has_points_and_line() {
        let s = mn_summary();
        let Summary::Mn(fit) = &s.runs[0].summary else { unreachable!() };
        let svg = decay_chart(&[fit]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.contains("stroke-dasharray"), fit.rate.is_some());
    }
}
