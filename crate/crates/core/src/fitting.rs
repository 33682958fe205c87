//! Least-squares fits of the regression models to binned Phillips-curve
//! data, the published parameter sets for comparison, and synthetic demos.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{bin_average, embedded_dataset, DataSet};
use crate::error::{Error, Result};
use crate::models::{sse, ExpParams, MLModelParams, ModelKind, ModelParams, PowerParams};
use crate::optimizer::{multi_start, SimplexConfig};
use crate::special::SeriesPolicy;

/// Objective value for parameter vectors the model cannot evaluate.
pub const PENALTY: f64 = 1e10;

pub type StartGrid = Vec<Vec<f64>>;

/// Series settings for fitting. Trial points whose series cancel beyond
/// double precision are penalized rather than resummed in multiprecision,
/// which keeps a multi-start fit to well under a second.
pub fn fitting_policy() -> SeriesPolicy {
    SeriesPolicy::double_only()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ModelKind,
    pub dataset: String,
    pub params: ModelParams,
    /// SSE over the points the model was fitted to.
    pub sse_average: f64,
    /// SSE of the same curve over every yearly observation.
    pub sse_original: f64,
    pub n_average: usize,
    pub n_original: usize,
    pub converged: bool,
    pub iterations: usize,
    pub start_index: usize,
    pub rounded_averages: bool,
}

impl FitReport {
    /// Model values at `xs`.
    pub fn curve(&self, xs: &[f64], policy: &SeriesPolicy) -> Result<Vec<(f64, f64)>> {
        xs.iter()
            .map(|&x| self.params.eval(x, policy).map(|y| (x, y)))
            .collect()
    }
}

/// Averaged (x, y) points of `data` with unit-width bins.
pub fn averaged_points(data: &DataSet, rounded: bool) -> Result<Vec<(f64, f64)>> {
    Ok(bin_average(data, 1.0)?
        .into_iter()
        .map(|p| if rounded { p.rounded() } else { p }.point())
        .collect())
}

/// Least-squares line through (u, v); None when u has no spread.
fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mu = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mu).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mu) * (p.1 - mv)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((mv - slope * mu, slope))
}

pub fn default_starts(kind: ModelKind, points: &[(f64, f64)]) -> Result<StartGrid> {
    if points.len() < 3 {
        return Err(Error::DegenerateData {
            got: points.len(),
            required: 3,
        });
    }
    let max_y = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let positive: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 > 0.0).collect();
    let mut starts = Vec::new();
    match kind {
        ModelKind::Power => {
            // y = b·x^c - a  =>  ln(y + a) = ln b + c·ln x
            let min_y = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let shift = if min_y > 0.0 { 0.0 } else { 1.0 - min_y };
            if shift > 0.0 {
                let logs: Vec<(f64, f64)> = points.iter().map(|p| (p.0.ln(), (p.1 + shift).ln())).collect();
                if let Some((ln_b, c)) = linear_fit(&logs) {
                    starts.push(vec![shift, ln_b.exp(), c]);
                }
            }
            let logs: Vec<(f64, f64)> = positive.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
            if let Some((ln_b, c)) = linear_fit(&logs) {
                starts.push(vec![0.0, ln_b.exp(), c]);
            }
            if starts.is_empty() {
                starts.push(vec![-mean_y, 1.0, -1.0]);
            }
        }
        ModelKind::Exponential => {
            let logs: Vec<(f64, f64)> = positive.iter().map(|p| (p.0, p.1.ln())).collect();
            if let Some((ln_b, c)) = linear_fit(&logs) {
                starts.push(vec![0.0, ln_b.exp(), c]);
            }
            starts.push(vec![0.0, max_y, -0.5]);
        }
        ModelKind::MittagLeffler => {
            for alpha in [0.5, 1.0, 1.5, 2.0] {
                for beta in [1.0, 1.5, 2.0] {
                    starts.push(vec![alpha, beta, -0.3, max_y]);
                }
            }
        }
    }
    Ok(starts)
}

fn objective<'a>(
    kind: ModelKind,
    points: &'a [(f64, f64)],
    policy: &'a SeriesPolicy,
) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    move |v: &[f64]| {
        if kind == ModelKind::MittagLeffler {
            // distance to the feasible region keeps the simplex moving back
            let infeasible = (-v[0]).max(0.0) + (-v[1]).max(0.0);
            if v[0] <= 0.0 || v[1] <= 0.0 {
                return PENALTY + infeasible;
            }
        }
        let Ok(params) = ModelParams::from_slice(kind, v) else {
            return PENALTY;
        };
        match sse(|x| params.eval(x, policy), points) {
            Ok(s) => s,
            Err(_) => PENALTY,
        }
    }
}

fn fit_points(
    kind: ModelKind,
    label: &str,
    fit_to: &[(f64, f64)],
    original: &[(f64, f64)],
    config: &SimplexConfig,
    policy: &SeriesPolicy,
) -> Result<FitReport> {
    let starts = default_starts(kind, fit_to)?;
    let best = multi_start(objective(kind, fit_to, policy), &starts, config)?;
    let params = ModelParams::from_slice(kind, &best.best_params)?;
    let sse_average = sse(|x| params.eval(x, policy), fit_to)?;
    let sse_original = sse(|x| params.eval(x, policy), original)?;
    Ok(FitReport {
        model: kind,
        dataset: label.to_string(),
        params,
        sse_average,
        sse_original,
        n_average: fit_to.len(),
        n_original: original.len(),
        converged: best.converged,
        iterations: best.iterations,
        start_index: best.start_index,
        rounded_averages: false,
    })
}

/// Fit `kind` to the unit-bin averages of `data` and report the error over
/// both the averages and the full series.
pub fn fit_model(
    kind: ModelKind,
    data: &DataSet,
    config: &SimplexConfig,
    policy: &SeriesPolicy,
    use_rounded_averages: bool,
) -> Result<FitReport> {
    let avg = averaged_points(data, use_rounded_averages)?;
    let mut report = fit_points(kind, &data.label, &avg, &data.points(), config, policy)?;
    report.rounded_averages = use_rounded_averages;
    Ok(report)
}

/// (sse_average, sse_original) of fixed parameters; no optimization.
pub fn evaluate_published(
    params: &ModelParams,
    data: &DataSet,
    policy: &SeriesPolicy,
) -> Result<(f64, f64)> {
    evaluate_curve(|x| params.eval(x, policy), data)
}

/// (sse_average, sse_original) of an arbitrary curve: one evaluation per
/// averaged point plus one per record.
pub fn evaluate_curve<F>(curve: F, data: &DataSet) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let avg = averaged_points(data, false)?;
    let a = sse(&curve, &avg)?;
    let o = sse(&curve, &data.points())?;
    Ok((a, o))
}

/// A parameter set with the error figures it was reported with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedFit {
    pub country: &'static str,
    pub params: ModelParams,
    pub sse_average: f64,
    pub sse_original: f64,
}

/// The fitted parameters and errors of the original study, country by
/// country in the order ML, exponential, power.
pub fn published_fits() -> [PublishedFit; 6] {
    let ml = |alpha, beta, a, c| ModelParams::MittagLeffler(MLModelParams { alpha, beta, a, c });
    let ex = |a, b, c| ModelParams::Exponential(ExpParams { a, b, c });
    let pw = |a, b, c| ModelParams::Power(PowerParams { a, b, c });
    let f = |country, params, sse_average, sse_original| PublishedFit {
        country,
        params,
        sse_average,
        sse_original,
    };
    [
        f("france", ml(1.5317, 1.9470, -0.3209, 13.9419), 1.1843, 189.1845),
        f("france", ex(-0.1507, 220.3057, -0.4449), 1.5780, 195.9090),
        f("france", pw(1.7578, 1933.2, -2.6297), 1.7704, 198.3482),
        f("germany", ml(1.382, 1.7055, -0.3167, 4.6929), 6.0313, 45.6200),
        f("germany", ex(0.0381, 12.1022, -0.2007), 7.0219, 48.1316),
        f("germany", pw(32.1245, 43.8469, -0.1141), 7.3879, 49.7545),
    ]
}

/// Allowed excess of a fresh fit over the published average error.
pub const FIT_SLACK: f64 = 1.02;
/// Relative tolerance when re-evaluating published parameters.
pub const PUBLISHED_RTOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellSource {
    Fitted,
    Published,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproductionCell {
    pub country: String,
    pub model: ModelKind,
    pub source: CellSource,
    pub published_sse_average: f64,
    pub published_sse_original: f64,
    pub sse_average: Option<f64>,
    pub sse_original: Option<f64>,
    /// Parameters used: the fitted ones or the published ones.
    pub params: Option<ModelParams>,
    pub converged: Option<bool>,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproductionReport {
    pub cells: Vec<ReproductionCell>,
}

impl ReproductionReport {
    pub fn all_passed(&self) -> bool {
        self.cells.iter().all(|c| c.passed)
    }

    pub fn cell(&self, country: &str, model: ModelKind, source: CellSource) -> Option<&ReproductionCell> {
        self.cells
            .iter()
            .find(|c| c.country == country && c.model == model && c.source == source)
    }
}

fn rel_close(got: f64, want: f64, rtol: f64) -> bool {
    (got - want).abs() <= rtol * want.abs()
}

/// Fit all three models to both countries and re-evaluate the published
/// parameters, comparing everything with the published errors.
pub fn reproduce_tables(config: &SimplexConfig, policy: &SeriesPolicy) -> Result<ReproductionReport> {
    let fr = embedded_dataset("france").expect("embedded");
    let de = embedded_dataset("germany").expect("embedded");
    reproduce_tables_with(&fr, &de, config, policy)
}

/// As [`reproduce_tables`] with caller-supplied series in place of the
/// embedded ones.
pub fn reproduce_tables_with(
    france: &DataSet,
    germany: &DataSet,
    config: &SimplexConfig,
    policy: &SeriesPolicy,
) -> Result<ReproductionReport> {
    config.validate()?;
    policy.validate()?;
    let jobs: Vec<(PublishedFit, CellSource)> = published_fits()
        .into_iter()
        .flat_map(|p| [(p, CellSource::Fitted), (p, CellSource::Published)])
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(pub_fit, source)| {
            let data = if pub_fit.country == "france" { france } else { germany };
            let model = pub_fit.params.kind();
            let mut cell = ReproductionCell {
                country: pub_fit.country.to_string(),
                model,
                source,
                published_sse_average: pub_fit.sse_average,
                published_sse_original: pub_fit.sse_original,
                sse_average: None,
                sse_original: None,
                params: None,
                converged: None,
                passed: false,
                error: None,
            };
            match source {
                CellSource::Fitted => match fit_model(model, data, config, policy, false) {
                    Ok(r) => {
                        cell.passed = r.sse_average <= FIT_SLACK * pub_fit.sse_average;
                        cell.sse_average = Some(r.sse_average);
                        cell.sse_original = Some(r.sse_original);
                        cell.params = Some(r.params);
                        cell.converged = Some(r.converged);
                    }
                    Err(e) => cell.error = Some(e.to_string()),
                },
                CellSource::Published => match evaluate_published(&pub_fit.params, data, policy) {
                    Ok((a, o)) => {
                        cell.passed = rel_close(a, pub_fit.sse_average, PUBLISHED_RTOL)
                            && rel_close(o, pub_fit.sse_original, PUBLISHED_RTOL);
                        cell.sse_average = Some(a);
                        cell.sse_original = Some(o);
                        cell.params = Some(pub_fit.params);
                    }
                    Err(e) => cell.error = Some(e.to_string()),
                },
            }
            cell
        })
        .collect();
    Ok(ReproductionReport { cells })
}

/// Generating functions for the synthetic fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DemoTarget {
    /// e^x·erfc(√x)
    ExpErfc,
    /// e^(-αx)·cos(βx)
    DampedCos { alpha: f64, beta: f64 },
    /// sin(x)
    Sine,
}

impl DemoTarget {
    pub const DAMPED_COS_DEFAULT: DemoTarget = DemoTarget::DampedCos { alpha: 0.3, beta: 2.0 };

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            DemoTarget::ExpErfc => exp_erfc_sqrt(x),
            DemoTarget::DampedCos { alpha, beta } => (-alpha * x).exp() * (beta * x).cos(),
            DemoTarget::Sine => x.sin(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DemoTarget::ExpErfc => "exp_erfc",
            DemoTarget::DampedCos { .. } => "damped_cos",
            DemoTarget::Sine => "sine",
        }
    }

    /// Sampling interval used when none is given.
    pub fn default_range(&self) -> (f64, f64) {
        match self {
            DemoTarget::ExpErfc => (0.1, 5.0),
            DemoTarget::DampedCos { .. } => (0.0, 10.0),
            DemoTarget::Sine => (0.0, 2.0 * std::f64::consts::PI),
        }
    }
}

/// e^x·erfc(√x), x >= 0.
fn exp_erfc_sqrt(x: f64) -> f64 {
    (x + statrs::function::erf::erfc(x.sqrt()).ln()).exp()
}

/// `n` evenly spaced cell midpoints of [lo, hi]; the model needs x > 0, so
/// a range starting at 0 is never sampled at 0 itself.
pub fn sample_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

/// Fit the ML model to `n_points` samples of `target` over `x_range`.
pub fn synthetic_demo(
    target: DemoTarget,
    x_range: (f64, f64),
    n_points: usize,
    config: &SimplexConfig,
    policy: &SeriesPolicy,
) -> Result<FitReport> {
    if n_points < 8 {
        return Err(Error::DegenerateData {
            got: n_points,
            required: 8,
        });
    }
    let (lo, hi) = x_range;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Config(format!("invalid sample range [{lo}, {hi}]")));
    }
    let samples: Vec<(f64, f64)> = sample_grid(lo, hi, n_points)
        .into_iter()
        .map(|x| (x, target.eval(x)))
        .collect();
    fit_points(ModelKind::MittagLeffler, target.name(), &samples, &samples, config, policy)
}
