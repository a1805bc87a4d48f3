//! Paired comparison of per-date fit errors of the two models.

use std::fmt::Write as _;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{paired_t_test, shapiro_wilk, summarize, wilcoxon_signed_rank, StatsError, SummaryStats, TestResult};
use crate::calibration::FitResult;
use crate::curve_models::Model;

const MIN_PAIRS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    NelsonSiegel,
    Svensson,
    Tie,
}

impl Selection {
    pub fn label(self) -> &'static str {
        match self {
            Selection::NelsonSiegel => "Nelson-Siegel",
            Selection::Svensson => "Svensson",
            Selection::Tie => "tie",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelErrors {
    pub model: Model,
    /// Per-date RMSE, aligned with [`ComparisonReport::dates`].
    pub rmse: Vec<f64>,
    pub summary: SummaryStats,
    /// `None` when the normality test could not be run (see `normality_note`).
    pub normality: Option<TestResult>,
    pub normality_note: Option<String>,
}

impl ModelErrors {
    fn is_normal(&self, alpha: f64) -> bool {
        self.normality.is_some_and(|t| t.p_value >= alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub model: Model,
    pub symbol: String,
    pub stats: SummaryStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub dates: Vec<NaiveDate>,
    pub ns: ModelErrors,
    pub sv: ModelErrors,
    pub parameters: Vec<ParamSummary>,
    /// `None` when the paired differences leave nothing to test.
    pub comparison: Option<TestResult>,
    pub selected: Selection,
    pub rationale: String,
}

fn model_errors(model: Model, fits: &[FitResult]) -> Result<ModelErrors, StatsError> {
    let rmse: Vec<f64> = fits.iter().map(|f| f.rmse).collect();
    let summary = summarize(&rmse)?;
    let (normality, normality_note) = match shapiro_wilk(&rmse) {
        Ok(t) => (Some(t), None),
        Err(e @ StatsError::DegenerateSample) => (None, Some(format!("normality not testable: {e}"))),
        Err(e) => return Err(e),
    };
    Ok(ModelErrors { model, rmse, summary, normality, normality_note })
}

fn parameter_summaries(model: Model, fits: &[FitResult]) -> Result<Vec<ParamSummary>, StatsError> {
    let vectors: Vec<Vec<f64>> = fits.iter().map(|f| f.params.to_vec()).collect();
    model
        .param_symbols()
        .iter()
        .enumerate()
        .map(|(k, sym)| {
            let column: Vec<f64> = vectors.iter().map(|v| v[k]).collect();
            Ok(ParamSummary { model, symbol: sym.to_string(), stats: summarize(&column)? })
        })
        .collect()
}

/// Pairs the two fit series by date and decides which model fits better.
///
/// The normality of both error series picks the test: paired t when both
/// pass Shapiro-Wilk at `alpha`, signed-rank otherwise. A significant result
/// selects the model with the smaller median RMSE; anything else is a tie.
pub fn compare_models(ns: &[FitResult], sv: &[FitResult], alpha: f64) -> Result<ComparisonReport, StatsError> {
    if ns.iter().any(|f| f.model != Model::NelsonSiegel) {
        return Err(StatsError::ModelMismatch("Nelson-Siegel"));
    }
    if sv.iter().any(|f| f.model != Model::Svensson) {
        return Err(StatsError::ModelMismatch("Svensson"));
    }
    if let Some(index) = ns.iter().zip(sv).position(|(a, b)| a.date != b.date) {
        return Err(StatsError::DateMismatch { index });
    }
    if ns.len() != sv.len() {
        return Err(StatsError::DateMismatch { index: ns.len().min(sv.len()) });
    }
    if ns.len() < MIN_PAIRS {
        return Err(StatsError::InsufficientPairs { n: ns.len(), min: MIN_PAIRS });
    }

    let ns_err = model_errors(Model::NelsonSiegel, ns)?;
    let sv_err = model_errors(Model::Svensson, sv)?;
    let mut parameters = parameter_summaries(Model::NelsonSiegel, ns)?;
    parameters.extend(parameter_summaries(Model::Svensson, sv)?);

    let both_normal = ns_err.is_normal(alpha) && sv_err.is_normal(alpha);
    let test = if both_normal {
        paired_t_test(&ns_err.rmse, &sv_err.rmse)
    } else {
        wilcoxon_signed_rank(&ns_err.rmse, &sv_err.rmse)
    };

    let (comparison, selected, rationale) = match test {
        Ok(t) => {
            let (m_ns, m_sv) = (ns_err.summary.median, sv_err.summary.median);
            let medians = format!("median RMSE {m_ns:.6} (Nelson-Siegel) vs {m_sv:.6} (Svensson)");
            if t.p_value < alpha {
                let selected = if m_ns < m_sv {
                    Selection::NelsonSiegel
                } else if m_sv < m_ns {
                    Selection::Svensson
                } else {
                    Selection::Tie
                };
                let verdict = match selected {
                    Selection::Tie => "medians are equal, no model preferred".to_string(),
                    s => format!("{} has the smaller median", s.label()),
                };
                (Some(t), selected, format!("{} p = {:.4e} < {alpha}; {medians}; {verdict}", t.method.label(), t.p_value))
            } else {
                let r = format!("{} p = {:.4e} >= {alpha}; no significant difference; {medians}", t.method.label(), t.p_value);
                (Some(t), Selection::Tie, r)
            }
        }
        Err(e @ (StatsError::AllZeroDifferences | StatsError::ZeroVariance)) => {
            (None, Selection::Tie, format!("models indistinguishable: {e}"))
        }
        Err(e) => return Err(e),
    };

    Ok(ComparisonReport {
        alpha,
        dates: ns.iter().map(|f| f.date).collect(),
        ns: ns_err,
        sv: sv_err,
        parameters,
        comparison,
        selected,
        rationale,
    })
}

fn stats_cells(s: &SummaryStats) -> String {
    format!("{:>12.5} {:>12.5} {:>12.5} {:>12.5} {:>12.5}", s.median, s.mean, s.q1, s.q3, s.variance)
}

/// Plain-text tables: parameter summaries, error summaries, normality tests,
/// the comparison test and the selection.
pub fn render_text(r: &ComparisonReport) -> String {
    let mut out = String::new();
    let head = format!("{:>12} {:>12} {:>12} {:>12} {:>12}", "Median", "Mean", "Q.1", "Q.3", "Variance");
    let _ = writeln!(out, "Parameter summaries ({} dates)", r.dates.len());
    let _ = writeln!(out, "{:<14} {:<10} {head}", "Model", "Parameter");
    for p in &r.parameters {
        let _ = writeln!(out, "{:<14} {:<10} {}", p.model.name(), p.symbol, stats_cells(&p.stats));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Error summaries (RMSE, percent)");
    let _ = writeln!(out, "{:<14} {head}", "Model");
    for e in [&r.ns, &r.sv] {
        let _ = writeln!(out, "{:<14} {}", e.model.name(), stats_cells(&e.summary));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Shapiro-Wilk normality test");
    let _ = writeln!(out, "{:<14} {:>12} {:>12}", "Model", "W", "p-value");
    for e in [&r.ns, &r.sv] {
        match (&e.normality, &e.normality_note) {
            (Some(t), _) => {
                let _ = writeln!(out, "{:<14} {:>12.5} {:>12.4e}", e.model.name(), t.statistic, t.p_value);
            }
            (None, note) => {
                let _ = writeln!(out, "{:<14} {}", e.model.name(), note.as_deref().unwrap_or("not run"));
            }
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Model comparison (alpha = {})", r.alpha);
    match &r.comparison {
        Some(t) => {
            let _ = writeln!(out, "{:<22} {:>12} {:>12} {:>6}", "Test", "Statistic", "p-value", "n");
            let _ = writeln!(out, "{:<22} {:>12.5} {:>12.4e} {:>6}", t.method.label(), t.statistic, t.p_value, t.n);
        }
        None => {
            let _ = writeln!(out, "no test run");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Selected model: {}", r.selected.label());
    let _ = writeln!(out, "Rationale: {}", r.rationale);
    out
}

/// CSV `model,quantity,n,median,mean,q1,q3,variance` covering every
/// parameter and the RMSE series.
pub fn write_summary_csv<W: Write>(r: &ComparisonReport, sink: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["model", "quantity", "n", "median", "mean", "q1", "q3", "variance"])?;
    let mut row = |model: Model, quantity: &str, s: &SummaryStats| {
        w.write_record([
            model.key().to_string(),
            quantity.to_string(),
            s.n.to_string(),
            s.median.to_string(),
            s.mean.to_string(),
            s.q1.to_string(),
            s.q3.to_string(),
            s.variance.to_string(),
        ])
    };
    for p in &r.parameters {
        row(p.model, &p.symbol, &p.stats)?;
    }
    row(Model::NelsonSiegel, "rmse", &r.ns.summary)?;
    row(Model::Svensson, "rmse", &r.sv.summary)?;
    w.flush()?;
    Ok(())
}
