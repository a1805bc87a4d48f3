use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;
use termfit_core::bond_math::write_zero_curves_csv;
use termfit_core::calibration::{calibrate_batch, read_fits_jsonl, write_fits_csv, write_fits_jsonl, CalibrationError, DateFailure};
use termfit_core::market_data::{drop_incomplete, Diagnostic, MarketDataError, Provenance};
use termfit_core::stats::{render_text, write_summary_csv, StatsError};
use termfit_core::synthetic::NsScenario;
use termfit_core::{
    bootstrap_zero_curve, compare_models, group_by_date, impute_forward, parse_auctions, Dataset, FitResult, MaturityGrid, Model,
    ZeroCurve,
};

use crate::config::{file_or_in_dir, Format, RunConfig};
use crate::error::CliError;

pub const DATASET_FILE: &str = "dataset.json";
pub const INGEST_REPORT_FILE: &str = "ingest_report.json";
pub const FITS_JSONL_FILE: &str = "fits.jsonl";
pub const FITS_CSV_FILE: &str = "fits.csv";
pub const ZERO_CURVES_CSV_FILE: &str = "zero_curves.csv";
pub const ZERO_CURVES_JSON_FILE: &str = "zero_curves.json";
pub const FIT_REPORT_FILE: &str = "fit_report.json";
pub const PLOTS_DIR: &str = "plots";

fn create_dir(p: &Path) -> Result<(), CliError> {
    fs::create_dir_all(p).map_err(|e| CliError::io(p, e))
}

fn write_bytes(p: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(p, bytes).map_err(|e| CliError::io(p, e))
}

fn write_json<T: Serialize>(p: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::io(p, e))?;
    s.push('\n');
    write_bytes(p, s.as_bytes())
}

fn market_error_kind(e: &MarketDataError) -> &'static str {
    match e {
        MarketDataError::Schema { .. } => "Schema",
        MarketDataError::MalformedRow { .. } => "MalformedRow",
        MarketDataError::InvariantViolation { .. } => "InvariantViolation",
        MarketDataError::DuplicateTenor { .. } => "DuplicateTenor",
        MarketDataError::InvalidGrid(_) => "InvalidGrid",
        MarketDataError::EmptyAfterImputation => "EmptyAfterImputation",
        MarketDataError::Csv(_) => "Csv",
    }
}

#[derive(Debug, Serialize)]
struct ReportError {
    kind: &'static str,
    message: String,
}

#[derive(Debug, Serialize)]
struct ImputedDate {
    date: NaiveDate,
    tenors: Vec<String>,
}

#[derive(Debug, Serialize)]
struct IngestReport {
    status: &'static str,
    records: usize,
    dates_kept: usize,
    provenance: Option<Provenance>,
    imputed: Vec<ImputedDate>,
    diagnostics: Vec<Diagnostic>,
    error: Option<ReportError>,
}

/// Parses, grids and completes an auction CSV.
fn build_dataset(bytes: &[u8], impute: bool) -> Result<(usize, Dataset, Vec<Diagnostic>), (Vec<Diagnostic>, MarketDataError)> {
    let records = parse_auctions(bytes).map_err(|e| (Vec::new(), e))?;
    let (ds, mut diags) = group_by_date(&records, &MaturityGrid::default()).map_err(|e| (Vec::new(), e))?;
    let (ds, dropped) = if impute {
        impute_forward(&ds).map_err(|e| (diags.clone(), e))?
    } else {
        drop_incomplete(&ds)
    };
    diags.extend(dropped);
    if ds.observations.is_empty() {
        return Err((diags, MarketDataError::EmptyAfterImputation));
    }
    Ok((records.len(), ds, diags))
}

/// `ingest`: auction CSV to `dataset.json` plus `ingest_report.json`.
/// Diagnostics also go to stderr, one JSON object per line.
pub fn ingest(cfg: &RunConfig) -> Result<(), CliError> {
    let bytes = fs::read(&cfg.input).map_err(|e| CliError::io(&cfg.input, e))?;
    create_dir(&cfg.out)?;
    let result = build_dataset(&bytes, cfg.impute);
    let diags = match &result {
        Ok((_, _, d)) | Err((d, _)) => d,
    };
    for d in diags {
        eprintln!("{d}");
    }
    let report_path = cfg.out_file(INGEST_REPORT_FILE);
    match result {
        Ok((records, ds, diags)) => {
            let imputed = ds
                .observations
                .iter()
                .filter(|o| !o.imputed_tenors.is_empty())
                .map(|o| ImputedDate { date: o.date, tenors: o.imputed_tenors.iter().map(|t| t.to_string()).collect() })
                .collect();
            write_json(&cfg.out_file(DATASET_FILE), &ds)?;
            write_json(
                &report_path,
                &IngestReport {
                    status: "ok",
                    records,
                    dates_kept: ds.observations.len(),
                    provenance: Some(ds.provenance),
                    imputed,
                    diagnostics: diags,
                    error: None,
                },
            )?;
            println!("ingested {records} records, {} dates", ds.observations.len());
            Ok(())
        }
        Err((diags, e)) => {
            let message = e.to_string();
            eprintln!("{}", serde_json::json!({ "kind": market_error_kind(&e), "message": message }));
            write_json(
                &report_path,
                &IngestReport {
                    status: "failed",
                    records: 0,
                    dates_kept: 0,
                    provenance: None,
                    imputed: Vec::new(),
                    diagnostics: diags,
                    error: Some(ReportError { kind: market_error_kind(&e), message: message.clone() }),
                },
            )?;
            Err(CliError::validation(message))
        }
    }
}

/// A `dataset.json` from `ingest`, or a raw auction CSV ingested on the fly.
fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let path = file_or_in_dir(&cfg.input, DATASET_FILE);
    let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
    let ds = if path.extension().is_some_and(|e| e == "json") {
        let ds: Dataset = serde_json::from_slice(&bytes).map_err(|e| CliError::io(&path, e))?;
        if !ds.is_complete() {
            return Err(CliError::validation(format!("{}: dataset has incomplete dates", path.display())));
        }
        ds
    } else {
        let (_, ds, diags) = build_dataset(&bytes, cfg.impute).map_err(|(_, e)| CliError::validation(e.to_string()))?;
        for d in diags {
            eprintln!("{d}");
        }
        ds
    };
    if ds.observations.is_empty() {
        return Err(CliError::validation("dataset has no dates"));
    }
    Ok(ds)
}

#[derive(Debug, Serialize)]
struct FitFailure {
    stage: &'static str,
    date: NaiveDate,
    reason: String,
}

#[derive(Debug, Serialize)]
struct FitReport {
    dates: usize,
    curves_bootstrapped: usize,
    fitted: BTreeMap<&'static str, usize>,
    seed: u64,
    de: termfit_core::DeConfig,
    failures: Vec<FitFailure>,
}

fn plot_csv(curve: &ZeroCurve, models: &[Model], fits: &BTreeMap<(Model, NaiveDate), &FitResult>) -> String {
    let mut s = String::from("tenor,zero_rate");
    for m in models {
        s.push_str(match m {
            Model::NelsonSiegel => ",ns_rate",
            Model::Svensson => ",sv_rate",
        });
    }
    s.push('\n');
    for (tenor, z) in &curve.zero_rates_pct {
        s.push_str(&format!("{tenor},{z}"));
        for m in models {
            s.push(',');
            if let Some(f) = fits.get(&(*m, curve.date)) {
                if let Ok(r) = f.params.rate(tenor.years()) {
                    s.push_str(&r.to_string());
                }
            }
        }
        s.push('\n');
    }
    s
}

/// `fit`: bootstrap every date, calibrate the selected models and write
/// fits, zero curves, per-date plot data and a failure report.
pub fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load_dataset(cfg)?;
    let mut failures = Vec::new();
    let mut curves = Vec::new();
    for obs in &ds.observations {
        match bootstrap_zero_curve(obs, &ds.grid) {
            Ok(c) => curves.push(c),
            Err(e) => failures.push(FitFailure { stage: "bootstrap", date: obs.date, reason: e.to_string() }),
        }
    }
    create_dir(&cfg.out)?;
    let mut buf = Vec::new();
    write_zero_curves_csv(&curves, &mut buf).map_err(|e| CliError::validation(e.to_string()))?;
    write_bytes(&cfg.out_file(ZERO_CURVES_CSV_FILE), &buf)?;
    write_json(&cfg.out_file(ZERO_CURVES_JSON_FILE), &curves)?;

    let models = cfg.model.models();
    let batch: Vec<Result<ZeroCurve, DateFailure>> = curves.iter().cloned().map(Ok).collect();
    let mut all_fits: Vec<FitResult> = Vec::new();
    let mut fitted = BTreeMap::new();
    let mut fatal = None;
    for &m in models {
        match calibrate_batch(&batch, m, &cfg.de) {
            Ok(out) => {
                fitted.insert(m.key(), out.results.len());
                failures.extend(out.failures.into_iter().map(|f| FitFailure { stage: m.key(), date: f.date, reason: f.reason }));
                all_fits.extend(out.results);
            }
            Err(e) => {
                fitted.insert(m.key(), 0);
                if let CalibrationError::AllFailed { .. } = e {
                    for c in &curves {
                        failures.push(FitFailure { stage: m.key(), date: c.date, reason: e.to_string() });
                    }
                }
                fatal.get_or_insert(format!("{m}: {e}"));
            }
        }
    }

    let mut buf = Vec::new();
    write_fits_jsonl(&all_fits, &mut buf).map_err(|e| CliError::validation(e.to_string()))?;
    write_bytes(&cfg.out_file(FITS_JSONL_FILE), &buf)?;
    let mut buf = Vec::new();
    write_fits_csv(&all_fits, &mut buf).map_err(|e| CliError::validation(e.to_string()))?;
    write_bytes(&cfg.out_file(FITS_CSV_FILE), &buf)?;

    let plots = cfg.out.join(PLOTS_DIR);
    create_dir(&plots)?;
    let by_key: BTreeMap<(Model, NaiveDate), &FitResult> = all_fits.iter().map(|f| ((f.model, f.date), f)).collect();
    for c in &curves {
        write_bytes(&plots.join(format!("{}.csv", c.date)), plot_csv(c, models, &by_key).as_bytes())?;
    }

    write_json(
        &cfg.out_file(FIT_REPORT_FILE),
        &FitReport {
            dates: ds.observations.len(),
            curves_bootstrapped: curves.len(),
            fitted: fitted.clone(),
            seed: cfg.de.seed,
            de: cfg.de.clone(),
            failures,
        },
    )?;
    for (k, n) in &fitted {
        println!("{k}: fitted {n} of {} dates", ds.observations.len());
    }
    match fatal {
        Some(msg) => Err(CliError::calibration(msg)),
        None => Ok(()),
    }
}

/// `compare`: pair the two models' fits by date and report the selection.
pub fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let path = file_or_in_dir(&cfg.input, FITS_JSONL_FILE);
    let file = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let fits = read_fits_jsonl(BufReader::new(file)).map_err(|e| CliError::validation(e.to_string()))?;

    let pick = |m: Model| -> BTreeMap<NaiveDate, FitResult> { fits.iter().filter(|f| f.model == m).map(|f| (f.date, f.clone())).collect() };
    let (ns, sv) = (pick(Model::NelsonSiegel), pick(Model::Svensson));
    if ns.is_empty() || sv.is_empty() {
        return Err(CliError::comparison("fit results for both models are required"));
    }
    let ns_dates: BTreeSet<&NaiveDate> = ns.keys().collect();
    let paired: Vec<NaiveDate> = sv.keys().filter(|d| ns_dates.contains(d)).copied().collect();
    let ns_fits: Vec<FitResult> = paired.iter().map(|d| ns[d].clone()).collect();
    let sv_fits: Vec<FitResult> = paired.iter().map(|d| sv[d].clone()).collect();
    let report = compare_models(&ns_fits, &sv_fits, cfg.alpha).map_err(|e| match e {
        StatsError::InsufficientPairs { n, min } => CliError::comparison(format!("{n} paired dates, at least {min} required")),
        e => CliError::comparison(e.to_string()),
    })?;

    create_dir(&cfg.out)?;
    match cfg.format {
        Format::Json => write_json(&cfg.out_file("comparison.json"), &report)?,
        Format::Text => write_bytes(&cfg.out_file("comparison.txt"), render_text(&report).as_bytes())?,
        Format::Csv => {
            let p = cfg.out_file("comparison.csv");
            let mut buf = Vec::new();
            write_summary_csv(&report, &mut buf).map_err(|e| CliError::io(&p, e))?;
            write_bytes(&p, &buf)?;
        }
    }
    println!("selected: {} ({})", report.selected.label(), report.rationale);
    Ok(())
}

/// `synth`: an auction CSV priced off noisy Nelson-Siegel curves.
pub fn synth(out: &Path, seed: u64, dates: usize, noise_sd_pct: f64) -> Result<(), CliError> {
    if dates == 0 || !(noise_sd_pct >= 0.0) {
        return Err(CliError::validation("dates must be positive and noise non-negative"));
    }
    let scenario = NsScenario { dates, noise_sd_pct, seed, ..NsScenario::default() };
    let recs = scenario.auctions(&MaturityGrid::default()).map_err(|e| CliError::validation(e.to_string()))?;
    let mut buf = Vec::new();
    termfit_core::market_data::write_auctions(&recs, &mut buf).map_err(|e| CliError::validation(e.to_string()))?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut f = fs::File::create(out).map_err(|e| CliError::io(out, e))?;
    f.write_all(&buf).map_err(|e| CliError::io(out, e))?;
    println!("wrote {} records for {dates} dates", recs.len());
    Ok(())
}
