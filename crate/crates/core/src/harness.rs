//! Run configurations, convergence studies and their CSV / JSON output.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assemble::{AssemblyReport, ElementCounts};
use crate::curve::integrate_curve_report;
use crate::error::{QuadError, Result};
use crate::expr::Expression;
use crate::geometry::BoxDomain;
use crate::mesh::{displace_vertices, tetrahedralize_box, triangulate_rectangle, DisplacementConfig, MeshValidationReport};
use crate::region::{integrate_region2d_report, integrate_region3d_report};
use crate::surface::integrate_surface_report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Curve,
    Surface,
    Region,
}

impl std::str::FromStr for Mode {
    type Err = QuadError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curve" => Ok(Mode::Curve),
            "surface" => Ok(Mode::Surface),
            "region" => Ok(Mode::Region),
            _ => Err(QuadError::Config(format!("unknown mode {s:?}"))),
        }
    }
}

fn default_integrand() -> String {
    "1".to_string()
}

fn default_c() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    pub dim: usize,
    pub mode: Mode,
    pub levelset: String,
    #[serde(default = "default_integrand")]
    pub integrand: String,
    #[serde(rename = "box")]
    pub bounds: Vec<f64>,
    pub n: usize,
    pub q: usize,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 2 || self.dim == 3) {
            return Err(QuadError::Config(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        match (self.dim, self.mode) {
            (2, Mode::Surface) => return Err(QuadError::Config("surface mode needs dim 3".into())),
            (3, Mode::Curve) => return Err(QuadError::Config("curve mode needs dim 2".into())),
            _ => {}
        }
        if self.n == 0 {
            return Err(QuadError::Config("n must be at least 1".into()));
        }
        if self.q == 0 {
            return Err(QuadError::OrderOutOfRange(0));
        }
        if self.bounds.len() != 2 * self.dim {
            return Err(QuadError::Config(format!(
                "box needs {} numbers for dim {}, got {}",
                2 * self.dim,
                self.dim,
                self.bounds.len()
            )));
        }
        DisplacementConfig::new(self.c, 3)?;
        Ok(())
    }

    fn displacement(&self) -> Result<DisplacementConfig> {
        DisplacementConfig::new(self.c, DisplacementConfig::default().max_passes)
    }
}

/// Result of one run. Wall time is kept out of the serialized form so that
/// identical runs produce identical output.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunResult {
    pub config: RunConfig,
    pub value: f64,
    pub abs_error: Option<f64>,
    pub h: f64,
    pub element_counts: ElementCounts,
    pub min_cut_weight: Option<f64>,
    pub validation: MeshValidationReport,
    #[serde(skip)]
    pub wall_time: f64,
}

fn parse_pair(config: &RunConfig) -> Result<(Expression, Expression)> {
    Ok((
        Expression::parse(&config.levelset, config.dim)?,
        Expression::parse(&config.integrand, config.dim)?,
    ))
}

pub fn run(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let (f, g) = parse_pair(config)?;
    let cfg = config.displacement()?;
    let start = Instant::now();
    let report: AssemblyReport = match (config.dim, config.mode) {
        (2, mode) => {
            let b = BoxDomain::<2>::from_flat(&config.bounds)?;
            match mode {
                Mode::Curve => integrate_curve_report(&b, config.n, &f, &g, config.q, &cfg)?,
                _ => integrate_region2d_report(&b, config.n, &f, &g, config.q, &cfg)?,
            }
        }
        (_, mode) => {
            let b = BoxDomain::<3>::from_flat(&config.bounds)?;
            match mode {
                Mode::Surface => integrate_surface_report(&b, config.n, &f, &g, config.q, &cfg)?,
                _ => integrate_region3d_report(&b, config.n, &f, &g, config.q, &cfg)?,
            }
        }
    };
    let wall_time = start.elapsed().as_secs_f64();
    if !report.value.is_finite() {
        return Err(QuadError::NonFinite(vec![report.value]));
    }
    Ok(RunResult {
        config: config.clone(),
        value: report.value,
        abs_error: config.exact.map(|e| (report.value - e).abs()),
        h: report.h,
        element_counts: report.counts,
        min_cut_weight: report.min_cut_weight.is_finite().then_some(report.min_cut_weight),
        validation: report.validation,
        wall_time,
    })
}

/// Writes the displaced mesh of a run in the text dump format.
pub fn dump_mesh(config: &RunConfig, mut out: impl Write) -> Result<()> {
    config.validate()?;
    let (f, _) = parse_pair(config)?;
    let cfg = config.displacement()?;
    if config.dim == 2 {
        let mesh = triangulate_rectangle(&BoxDomain::from_flat(&config.bounds)?, config.n)?;
        displace_vertices(&mesh, &f, &cfg)?.write_text(&mut out)?;
    } else {
        let mesh = tetrahedralize_box(&BoxDomain::from_flat(&config.bounds)?, config.n)?;
        displace_vertices(&mesh, &f, &cfg)?.write_text(&mut out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub q: usize,
    pub value: f64,
    pub abs_error: f64,
    /// `log2(e[k-1] / e[k])`; absent on the first row or when an error is zero.
    pub observed_order: Option<f64>,
    /// Error below `100 eps |exact|`.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub exact: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn from_runs(exact: f64, runs: &[(usize, f64, usize, f64)]) -> Result<Self> {
        if runs.is_empty() {
            return Err(QuadError::EmptyStudy);
        }
        let floor = 100.0 * f64::EPSILON * exact.abs();
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(runs.len());
        for &(n, h, q, value) in runs {
            let abs_error = (value - exact).abs();
            let observed_order = rows.last().and_then(|prev| {
                (prev.abs_error > 0.0 && abs_error > 0.0).then(|| (prev.abs_error / abs_error).log2())
            });
            rows.push(ConvergenceRow {
                n,
                h,
                q,
                value,
                abs_error,
                observed_order,
                saturated: abs_error < floor,
            });
        }
        Ok(ConvergenceReport { exact, rows })
    }

    /// Orders that enter the statistics: those measured from a row that was
    /// not yet saturated.
    pub fn usable_orders(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .filter(|w| !w[0].saturated)
            .filter_map(|w| w[1].observed_order)
            .collect()
    }

    pub fn median_order(&self) -> Option<f64> {
        let mut v = self.usable_orders();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
    }
}

pub fn convergence(config: &RunConfig, n_list: &[usize]) -> Result<ConvergenceReport> {
    if n_list.is_empty() {
        return Err(QuadError::EmptyStudy);
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QuadError::Config("n-list must be strictly increasing".into()));
    }
    let exact = config
        .exact
        .ok_or_else(|| QuadError::Config("a convergence study needs an exact value".into()))?;
    let mut runs = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let r = run(&RunConfig { n, ..config.clone() })?;
        runs.push((n, r.h, config.q, r.value));
    }
    ConvergenceReport::from_runs(exact, &runs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = QuadError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(QuadError::Config(format!("unknown format {s:?}"))),
        }
    }
}

pub const CSV_HEADER: [&str; 6] = ["n", "h", "q", "value", "abs_error", "observed_order"];

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_report(report: &ConvergenceReport, format: Format, out: impl Write) -> Result<()> {
    if report.rows.is_empty() {
        return Err(QuadError::EmptyStudy);
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in &report.rows {
                w.write_record([
                    r.n.to_string(),
                    sci(r.h),
                    r.q.to_string(),
                    sci(r.value),
                    sci(r.abs_error),
                    r.observed_order.map(sci).unwrap_or_default(),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// One run in the report layout: a single CSV row (empty error and order
/// columns without an exact value) or the full JSON record.
pub fn write_run(result: &RunResult, format: Format, out: impl Write) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            w.write_record([
                result.config.n.to_string(),
                sci(result.h),
                result.config.q.to_string(),
                sci(result.value),
                result.abs_error.map(sci).unwrap_or_default(),
                String::new(),
            ])?;
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, result)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Writes the report to `path`, or to standard output when `path` is `None`.
pub fn emit(report: &ConvergenceReport, format: Format, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_report(report, format, std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => write_report(report, format, std::io::stdout().lock()),
    }
}

/// Reads a CSV report back; `exact` is not stored in the CSV.
pub fn read_csv_report(text: &str, exact: f64) -> Result<ConvergenceReport> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(QuadError::Config(format!("unexpected CSV header {header:?}")));
    }
    let floor = 100.0 * f64::EPSILON * exact.abs();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| QuadError::Config(format!("bad number {:?}", &rec[i])))
        };
        let int = |i: usize| -> Result<usize> {
            rec[i]
                .parse()
                .map_err(|_| QuadError::Config(format!("bad integer {:?}", &rec[i])))
        };
        let abs_error = num(4)?;
        rows.push(ConvergenceRow {
            n: int(0)?,
            h: num(1)?,
            q: int(2)?,
            value: num(3)?,
            abs_error,
            observed_order: if rec[5].is_empty() { None } else { Some(num(5)?) },
            saturated: abs_error < floor,
        });
    }
    Ok(ConvergenceReport { exact, rows })
}
