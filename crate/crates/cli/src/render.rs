//! Output formatting. Tables print four decimals; JSON and CSV carry full
//! double precision (shortest round-trip form).

use std::fmt::Write;

use clap::ValueEnum;
use serde::Serialize;

use mlphillips::dataio::AveragedPoint;
use mlphillips::fitting::{CellSource, DemoTarget, FitReport, ReproductionReport};
use mlphillips::models::ModelParams;

#[derive(Copy, Clone, Debug, Default, PartialEq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn xy_csv(rows: &[(f64, f64)]) -> String {
    let body: Vec<Vec<String>> = rows.iter().map(|(x, y)| vec![x.to_string(), y.to_string()]).collect();
    csv_text(&["x", "y"], &body)
}

#[derive(Serialize)]
struct FitJson<'a> {
    model: &'static str,
    dataset: &'a str,
    params: &'a ModelParams,
    sse_average: f64,
    sse_original: f64,
    converged: bool,
    iterations: usize,
    start_index: usize,
    n_average: usize,
    n_original: usize,
    rounded_averages: bool,
}

fn fit_json(r: &FitReport) -> FitJson<'_> {
    FitJson {
        model: r.model.short_name(),
        dataset: &r.dataset,
        params: &r.params,
        sse_average: r.sse_average,
        sse_original: r.sse_original,
        converged: r.converged,
        iterations: r.iterations,
        start_index: r.start_index,
        n_average: r.n_average,
        n_original: r.n_original,
        rounded_averages: r.rounded_averages,
    }
}

fn fit_table(out: &mut String, r: &FitReport) {
    let _ = writeln!(
        out,
        "{} model, {} ({} averaged points, {} observations)",
        r.model, r.dataset, r.n_average, r.n_original
    );
    let params: Vec<String> = r.params.named().iter().map(|(n, v)| format!("{n} = {v:.4}")).collect();
    let _ = writeln!(out, "  {}", params.join("  "));
    let _ = writeln!(out, "  LS error to average data-set:  {:.4}", r.sse_average);
    let _ = writeln!(out, "  LS error to original data-set: {:.4}", r.sse_original);
    let _ = writeln!(
        out,
        "  converged: {} ({} iterations, start {})",
        if r.converged { "yes" } else { "no" },
        r.iterations,
        r.start_index
    );
}

pub fn fit_reports(reports: &[FitReport], format: Format) -> String {
    match format {
        Format::Json => {
            let items: Vec<FitJson> = reports.iter().map(fit_json).collect();
            if items.len() == 1 {
                json(&items[0])
            } else {
                json(&items)
            }
        }
        Format::Csv => {
            let header = [
                "model", "dataset", "alpha", "beta", "a", "b", "c", "C", "sse_average", "sse_original", "converged",
            ];
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    let named = r.params.named();
                    let get = |n: &str| {
                        named
                            .iter()
                            .find(|(k, _)| *k == n)
                            .map(|(_, v)| v.to_string())
                            .unwrap_or_default()
                    };
                    vec![
                        r.model.short_name().to_string(),
                        r.dataset.clone(),
                        get("alpha"),
                        get("beta"),
                        get("a"),
                        get("b"),
                        get("c"),
                        get("C"),
                        r.sse_average.to_string(),
                        r.sse_original.to_string(),
                        r.converged.to_string(),
                    ]
                })
                .collect();
            csv_text(&header, &rows)
        }
        Format::Table => {
            let mut out = String::new();
            for (i, r) in reports.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                fit_table(&mut out, r);
            }
            out
        }
    }
}

fn source_name(s: CellSource) -> &'static str {
    match s {
        CellSource::Fitted => "fitted",
        CellSource::Published => "published",
    }
}

fn opt4(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

pub fn reproduction(report: &ReproductionReport, format: Format) -> String {
    match format {
        Format::Json => json(report),
        Format::Csv => {
            let header = [
                "country",
                "model",
                "source",
                "published_sse_average",
                "sse_average",
                "published_sse_original",
                "sse_original",
                "passed",
                "error",
            ];
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            let rows: Vec<Vec<String>> = report
                .cells
                .iter()
                .map(|c| {
                    vec![
                        c.country.clone(),
                        c.model.short_name().to_string(),
                        source_name(c.source).to_string(),
                        c.published_sse_average.to_string(),
                        opt(c.sse_average),
                        c.published_sse_original.to_string(),
                        opt(c.sse_original),
                        c.passed.to_string(),
                        c.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            csv_text(&header, &rows)
        }
        Format::Table => {
            let mut out = String::from("cell: published average -> computed | published original -> computed | result\n");
            for c in &report.cells {
                let _ = write!(
                    out,
                    "{} / {} / {}: {:.4} -> {} | {:.4} -> {} | {}",
                    c.country,
                    c.model.short_name(),
                    source_name(c.source),
                    c.published_sse_average,
                    opt4(c.sse_average),
                    c.published_sse_original,
                    opt4(c.sse_original),
                    if c.passed { "PASS" } else { "FAIL" }
                );
                if let Some(e) = &c.error {
                    let _ = write!(out, " ({e})");
                }
                out.push('\n');
            }
            let passed = report.cells.iter().filter(|c| c.passed).count();
            let _ = writeln!(out, "{passed}/{} cells within tolerance", report.cells.len());
            out
        }
    }
}

pub fn ml_values(rows: &[(f64, f64)], format: Format) -> String {
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                z: f64,
                value: f64,
            }
            let items: Vec<Row> = rows.iter().map(|&(z, value)| Row { z, value }).collect();
            json(&items)
        }
        Format::Csv => {
            let body: Vec<Vec<String>> = rows.iter().map(|(z, v)| vec![z.to_string(), v.to_string()]).collect();
            csv_text(&["z", "value"], &body)
        }
        // function values are not table entries; keep every digit
        Format::Table => rows.iter().map(|(z, v)| format!("{z}\t{v}\n")).collect(),
    }
}

pub fn bins(points: &[AveragedPoint], format: Format) -> String {
    match format {
        Format::Json => json(points),
        // three decimals, the precision of the published averaged table
        Format::Csv => {
            let body: Vec<Vec<String>> = points
                .iter()
                .map(|p| {
                    // decimal rounding: 5.7265 is stored just below the half
                    let p = p.rounded();
                    vec![
                        p.level_low.to_string(),
                        p.level_high.to_string(),
                        format!("{:.3}", p.mean_unemployment),
                        format!("{:.3}", p.mean_inflation),
                        p.count.to_string(),
                    ]
                })
                .collect();
            csv_text(
                &["level_low", "level_high", "mean_unemployment", "mean_inflation", "count"],
                &body,
            )
        }
        Format::Table => {
            let mut out = String::from("level      unemployment  inflation  count\n");
            for p in points.iter().map(AveragedPoint::rounded) {
                let level = format!("{}-{}", p.level_low, p.level_high);
                let _ = writeln!(
                    out,
                    "{level:<10} {:>12.3}  {:>9.3}  {:>5}",
                    p.mean_unemployment, p.mean_inflation, p.count
                );
            }
            out
        }
    }
}

pub fn demo(target: &DemoTarget, range: (f64, f64), report: &FitReport, format: Format) -> String {
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct DemoJson<'a> {
                target: &'a DemoTarget,
                x_range: (f64, f64),
                n_points: usize,
                #[serde(flatten)]
                fit: FitJson<'a>,
            }
            json(&DemoJson {
                target,
                x_range: range,
                n_points: report.n_average,
                fit: fit_json(report),
            })
        }
        Format::Csv => {
            let (ta, tb) = match *target {
                DemoTarget::DampedCos { alpha, beta } => (alpha.to_string(), beta.to_string()),
                _ => (String::new(), String::new()),
            };
            let named = report.params.named();
            let mut row = vec![target.name().to_string(), ta, tb, range.0.to_string(), range.1.to_string()];
            row.extend(named.iter().map(|(_, v)| v.to_string()));
            row.extend([report.sse_average.to_string(), report.converged.to_string()]);
            csv_text(
                &[
                    "target", "target_alpha", "target_beta", "x_lo", "x_hi", "alpha", "beta", "a", "C", "sse", "converged",
                ],
                &[row],
            )
        }
        Format::Table => {
            let mut out = String::new();
            let _ = match *target {
                DemoTarget::DampedCos { alpha, beta } => {
                    writeln!(out, "target: damped_cos (alpha = {alpha}, beta = {beta}) on [{:.4}, {:.4}]", range.0, range.1)
                }
                _ => writeln!(out, "target: {} on [{:.4}, {:.4}]", target.name(), range.0, range.1),
            };
            fit_table(&mut out, report);
            out
        }
    }
}
