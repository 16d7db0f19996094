//! Persistence of run artifacts: the diagnostics CSV (fixed column
//! contract), the summary JSON, sweep tables, and static SVG line charts
//! rendered straight from persisted data.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::Error;
use crate::flow::{FlowDiagnostics, FlowSample};
use crate::scenario::Scenario;

pub const CSV_HEADER: &str = "step,time,sup_dev,l2_dev,det_drift,trace_residual,min_eig,cond,energy";

pub fn write_diagnostics_csv(path: &Path, diag: &FlowDiagnostics) -> Result<(), Error> {
    let mut out = String::with_capacity(64 * (diag.samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &diag.samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.step,
            s.time,
            s.sup_dev,
            s.l2_dev,
            s.det_drift,
            s.trace_residual,
            s.min_eig,
            s.cond,
            s.energy
        ));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<FlowSample>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Scenario(format!(
                "unexpected diagnostics header: {other:?}"
            )))
        }
    }
    let mut samples = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Scenario(format!(
                "diagnostics line {} has {} fields",
                lineno + 2,
                fields.len()
            )));
        }
        let f = |i: usize| -> Result<f64, Error> {
            fields[i]
                .parse::<f64>()
                .map_err(|e| Error::Scenario(format!("line {}: {e}", lineno + 2)))
        };
        samples.push(FlowSample {
            step: fields[0]
                .parse::<u64>()
                .map_err(|e| Error::Scenario(format!("line {}: {e}", lineno + 2)))?,
            time: f(1)?,
            sup_dev: f(2)?,
            l2_dev: f(3)?,
            det_drift: f(4)?,
            trace_residual: f(5)?,
            min_eig: f(6)?,
            cond: f(7)?,
            energy: f(8)?,
        });
    }
    Ok(samples)
}

/// Run summary persisted next to the diagnostics; echoes the resolved
/// scenario for provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    pub final_sup_dev: f64,
    pub classification: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_prediction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_certificate: Option<String>,
    pub termination: String,
    pub steps: u64,
    pub wall_time_seconds: f64,
    pub scenario: Scenario,
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<(), Error> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(serde_json::to_string_pretty(summary).unwrap().as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<RunSummary, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Scenario(e.to_string()))
}

/// Minimal SVG polyline chart of one series; log10 ordinate when every value
/// is positive and the range spans more than two decades.
pub fn render_series_svg(
    path: &Path,
    title: &str,
    xs: &[f64],
    ys: &[f64],
) -> Result<(), Error> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::Scenario("empty or mismatched series for chart".into()));
    }
    let w = 720.0f64;
    let h = 440.0f64;
    let ml = 70.0;
    let mr = 20.0;
    let mt = 40.0;
    let mb = 50.0;
    let positive = ys.iter().all(|v| *v > 0.0);
    let (ymin_raw, ymax_raw) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    let log_scale = positive && ymax_raw / ymin_raw.max(1e-300) > 100.0;
    let ty = |v: f64| if log_scale { v.log10() } else { v };
    let (ymin, ymax) = (ty(ymin_raw), ty(ymax_raw));
    let yspan = (ymax - ymin).max(1e-12);
    let (xmin, xmax) = (xs[0], xs[xs.len() - 1]);
    let xspan = (xmax - xmin).max(1e-12);
    let px = |x: f64| ml + (x - xmin) / xspan * (w - ml - mr);
    let py = |y: f64| h - mb - (ty(y) - ymin) / yspan * (h - mt - mb);

    let mut points = String::new();
    for (x, y) in xs.iter().zip(ys.iter()) {
        points.push_str(&format!("{:.2},{:.2} ", px(*x), py(*y)));
    }
    let ylabel = if log_scale {
        format!("log10 [{:.3e}, {:.3e}]", ymin_raw, ymax_raw)
    } else {
        format!("[{:.3e}, {:.3e}]", ymin_raw, ymax_raw)
    };
    let svg = format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"24\" font-family=\"monospace\" font-size=\"16\">{title}</text>\n",
            "<line x1=\"{ml}\" y1=\"{hb}\" x2=\"{wr}\" y2=\"{hb}\" stroke=\"black\"/>\n",
            "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{hb}\" stroke=\"black\"/>\n",
            "<text x=\"{ml}\" y=\"{hx}\" font-family=\"monospace\" font-size=\"12\">t = {xmin:.4} .. {xmax:.4}</text>\n",
            "<text x=\"8\" y=\"{mt}\" font-family=\"monospace\" font-size=\"12\">{ylabel}</text>\n",
            "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{points}\"/>\n",
            "</svg>\n"
        ),
        w = w,
        h = h,
        tx = ml,
        title = title,
        ml = ml,
        mt = mt,
        hb = h - mb,
        wr = w - mr,
        hx = h - mb + 30.0,
        xmin = xmin,
        xmax = xmax,
        ylabel = ylabel,
        points = points.trim_end(),
    );
    std::fs::File::create(path)?.write_all(svg.as_bytes())?;
    Ok(())
}

/// One grid level of a refinement sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub curvature_residual: f64,
    pub relation_residual: f64,
    pub curvature_order: Option<f64>,
    pub relation_order: Option<f64>,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), Error> {
    let mut out = String::from("n,curvature_residual,relation_residual,curvature_order,relation_order\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            r.curvature_residual,
            r.relation_residual,
            r.curvature_order.map(|v| v.to_string()).unwrap_or_default(),
            r.relation_order.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}
