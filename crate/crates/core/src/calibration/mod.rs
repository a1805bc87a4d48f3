//! Per-date fitting of Nelson-Siegel / Svensson parameters to bootstrapped
//! zero curves by RMSE minimization with Differential Evolution.

pub mod de;
mod projection;

use std::io::{BufRead, Write};

use chrono::{Datelike, NaiveDate};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bond_math::{bootstrap_zero_curve, ZeroCurve};
use crate::curve_models::{CurveError, CurveParams, Model};
use crate::exec::{map_slice, Execution};
use crate::market_data::Dataset;

pub use de::{de_minimize, de_minimize_observed, reflect, Bounds, DeConfig, DeError, DeOutcome};

/// Added to the objective when the instantaneous short rate is not positive.
pub const SHORT_RATE_PENALTY: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error(transparent)]
    Config(#[from] DeError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("objective was not finite ({count} evaluations)")]
    NonFinite { count: usize },
    #[error("curve has no points")]
    EmptyCurve,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("every date failed; first: {first}")]
    AllFailed { first: String },
    #[error("fit io: {0}")]
    Io(String),
}

/// Root mean square difference between model and zero rates over the
/// curve's grid.
pub fn objective_rmse(params: &CurveParams, curve: &ZeroCurve) -> Result<f64, CalibrationError> {
    let points = curve.points();
    if points.is_empty() {
        return Err(CalibrationError::EmptyCurve);
    }
    let mut sse = 0.0;
    for (t, z) in &points {
        let r = params.rate(*t)?;
        sse += (r - z).powi(2);
    }
    Ok((sse / points.len() as f64).sqrt())
}

/// Default search box in percent / years: level in [0, 25], slope and
/// curvature loadings in [-25, 25], decays in [0.05, 10].
pub fn default_bounds(model: Model) -> Bounds {
    let level = (0.0, 25.0);
    let loading = (-25.0, 25.0);
    let decay = (0.05, 10.0);
    Bounds(match model {
        Model::NelsonSiegel => vec![level, loading, loading, decay],
        Model::Svensson => vec![level, loading, loading, loading, decay, decay],
    })
}

/// The fitting problem for one curve with the betas projected out: DE
/// sees only the decays.
struct Projected<'a> {
    model: Model,
    times: Vec<f64>,
    rates: DVector<f64>,
    beta_lo: Vec<f64>,
    beta_hi: Vec<f64>,
    decay_bounds: &'a [(f64, f64)],
}

impl<'a> Projected<'a> {
    fn new(model: Model, pts: &[(f64, f64)], bounds: &'a Bounds) -> Self {
        let k = model.dimension() - model.decay_count();
        let (betas, decays) = bounds.0.split_at(k);
        Projected {
            model,
            times: pts.iter().map(|p| p.0).collect(),
            rates: DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1)),
            beta_lo: betas.iter().map(|b| b.0).collect(),
            beta_hi: betas.iter().map(|b| b.1).collect(),
            decay_bounds: decays,
        }
    }

    /// Best betas for the given decays and their RMSE.
    fn solve(&self, decays: &[f64]) -> (Vec<f64>, f64) {
        let a = projection::design(&self.times, decays);
        let (betas, sse) = projection::box_least_squares(&a, &self.rates, &self.beta_lo, &self.beta_hi);
        (betas, (sse / self.times.len() as f64).sqrt())
    }

    /// RMSE plus [`SHORT_RATE_PENALTY`] when the level or the short rate is
    /// not positive, or a reordered decay leaves its own bound.
    fn objective(&self, decays: &[f64]) -> f64 {
        if decays.iter().zip(self.decay_bounds).any(|(d, (lo, hi))| d < lo || d > hi) {
            return SHORT_RATE_PENALTY * 2.0;
        }
        let (b, rmse) = self.solve(decays);
        if !rmse.is_finite() {
            return f64::NAN;
        }
        if b[0] <= 0.0 || b[0] + b[1] <= 0.0 {
            rmse + SHORT_RATE_PENALTY
        } else {
            rmse
        }
    }

    fn params(&self, decays: &[f64]) -> Result<CurveParams, CurveError> {
        let (mut x, _) = self.solve(decays);
        x.extend_from_slice(decays);
        CurveParams::from_slice(self.model, &x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub date: NaiveDate,
    pub model: Model,
    pub params: CurveParams,
    pub rmse: f64,
    pub generations_used: usize,
    pub converged: bool,
    pub seed: u64,
}

/// Fits `model` to one curve over the default box.
pub fn calibrate(model: Model, curve: &ZeroCurve, cfg: &DeConfig) -> Result<FitResult, CalibrationError> {
    calibrate_in(model, curve, cfg, &default_bounds(model))
}

/// Fits `model` to one curve within `bounds`, given in parameter order.
///
/// DE searches the decays; for each candidate the betas are the least
/// squares solution inside their bounds. Svensson is searched once per
/// ordering of its two decays (the second run seeded from the first seed)
/// and the better fit is kept. The population is ten per model parameter
/// unless `cfg` fixes it.
pub fn calibrate_in(model: Model, curve: &ZeroCurve, cfg: &DeConfig, bounds: &Bounds) -> Result<FitResult, CalibrationError> {
    if bounds.dim() != model.dimension() {
        return Err(CurveError::WrongDimension { expected: model.dimension(), got: bounds.dim() }.into());
    }
    let pts = curve.points();
    if pts.is_empty() {
        return Err(CalibrationError::EmptyCurve);
    }
    let problem = Projected::new(model, &pts, bounds);
    let search = Bounds(problem.decay_bounds.to_vec());
    let orientations: &[bool] = match model {
        Model::NelsonSiegel => &[false],
        Model::Svensson => &[false, true],
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut generations = 0;
    let mut converged = true;
    for (k, &descending) in orientations.iter().enumerate() {
        let run_cfg = DeConfig {
            population_size: Some(cfg.population_for(model.dimension())),
            seed: if k == 0 { cfg.seed } else { splitmix64(cfg.seed) },
            ..cfg.clone()
        };
        let out = de_minimize(|x| problem.objective(&projection::oriented(model, x, descending)), &search, &run_cfg)?;
        if out.non_finite_evaluations > 0 {
            return Err(CalibrationError::NonFinite { count: out.non_finite_evaluations });
        }
        generations += out.generations;
        converged &= out.converged;
        if best.as_ref().map_or(true, |(_, v)| out.value < *v) {
            best = Some((projection::oriented(model, &out.best, descending), out.value));
        }
    }
    let (decays, _) = best.expect("at least one orientation");
    let params = problem.params(&decays)?;
    Ok(FitResult {
        date: curve.date,
        model,
        rmse: objective_rmse(&params, curve)?,
        params,
        generations_used: generations,
        converged,
        seed: cfg.seed,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one date of a batch, a pure function of the batch seed and the date.
pub fn date_seed(batch_seed: u64, date: NaiveDate) -> u64 {
    splitmix64(batch_seed ^ splitmix64(date.num_days_from_ce() as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateFailure {
    pub date: NaiveDate,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub results: Vec<FitResult>,
    pub failures: Vec<DateFailure>,
}

/// Bootstraps and fits every date of a completed dataset.
///
/// A failing date is recorded and the batch continues; the batch itself
/// fails only when it is empty or no date succeeds.
pub fn calibrate_all(ds: &Dataset, model: Model, cfg: &DeConfig) -> Result<BatchOutcome, CalibrationError> {
    let curves: Vec<Result<ZeroCurve, DateFailure>> = ds
        .observations
        .iter()
        .map(|o| bootstrap_zero_curve(o, &ds.grid).map_err(|e| DateFailure { date: o.date, reason: e.to_string() }))
        .collect();
    calibrate_batch(&curves, model, cfg)
}

/// Like [`calibrate_all`] for already bootstrapped curves; `Err` entries are
/// upstream failures passed through in order.
pub fn calibrate_batch(
    curves: &[Result<ZeroCurve, DateFailure>],
    model: Model,
    cfg: &DeConfig,
) -> Result<BatchOutcome, CalibrationError> {
    if curves.is_empty() {
        return Err(CalibrationError::EmptyBatch);
    }
    // Fan out across dates; each date's DE then runs sequentially.
    let inner = DeConfig { execution: Execution::Sequential, ..cfg.clone() };
    let fits = map_slice(cfg.execution, curves, |c| match c {
        Ok(curve) => {
            let date_cfg = inner.clone().with_seed(date_seed(cfg.seed, curve.date));
            calibrate(model, curve, &date_cfg).map_err(|e| DateFailure { date: curve.date, reason: e.to_string() })
        }
        Err(f) => Err(f.clone()),
    });

    let mut out = BatchOutcome::default();
    for f in fits {
        match f {
            Ok(r) => out.results.push(r),
            Err(e) => out.failures.push(e),
        }
    }
    if out.results.is_empty() {
        let first = out.failures.first().map(|f| format!("{}: {}", f.date, f.reason)).unwrap_or_default();
        return Err(CalibrationError::AllFailed { first });
    }
    Ok(out)
}

/// Header of the flat fit-results CSV.
pub const FIT_CSV_HEADER: [&str; 10] =
    ["date", "model", "beta0", "beta1", "beta2", "beta3", "tau1", "tau2", "rmse", "converged"];

/// One JSON object per line.
pub fn write_fits_jsonl<W: Write>(fits: &[FitResult], mut sink: W) -> Result<(), CalibrationError> {
    for f in fits {
        let line = serde_json::to_string(f).map_err(|e| CalibrationError::Io(e.to_string()))?;
        writeln!(sink, "{line}").map_err(|e| CalibrationError::Io(e.to_string()))?;
    }
    Ok(())
}

pub fn read_fits_jsonl<R: BufRead>(source: R) -> Result<Vec<FitResult>, CalibrationError> {
    let mut out = Vec::new();
    for line in source.lines() {
        let line = line.map_err(|e| CalibrationError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fit: FitResult = serde_json::from_str(&line).map_err(|e| CalibrationError::Io(e.to_string()))?;
        if fit.params.model() != fit.model {
            return Err(CalibrationError::Io(format!("{}: parameters do not match model {}", fit.date, fit.model)));
        }
        out.push(fit);
    }
    Ok(out)
}

/// Flat CSV; Nelson-Siegel rows leave `beta3`/`tau2` empty and put `tau` in `tau1`.
pub fn write_fits_csv<W: Write>(fits: &[FitResult], sink: W) -> Result<(), CalibrationError> {
    let io = |e: csv::Error| CalibrationError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(FIT_CSV_HEADER).map_err(io)?;
    for f in fits {
        let (b0, b1, b2, b3, t1, t2) = match f.params {
            CurveParams::NelsonSiegel(p) => (p.beta0, p.beta1, p.beta2, None, p.tau, None),
            CurveParams::Svensson(p) => (p.beta0, p.beta1, p.beta2, Some(p.beta3), p.tau1, Some(p.tau2)),
        };
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            f.date.to_string(),
            f.model.to_string(),
            b0.to_string(),
            b1.to_string(),
            b2.to_string(),
            opt(b3),
            t1.to_string(),
            opt(t2),
            f.rmse.to_string(),
            f.converged.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CalibrationError::Io(e.to_string()))
}

/// A CSV row of fitted parameters; diagnostics beyond `converged` are not
/// part of the flat format.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub date: NaiveDate,
    pub params: CurveParams,
    pub rmse: f64,
    pub converged: bool,
}

pub fn read_fits_csv<R: std::io::Read>(source: R) -> Result<Vec<FitRow>, CalibrationError> {
    let io = |e: String| CalibrationError::Io(e);
    let mut rdr = csv::Reader::from_reader(source);
    let header: Vec<String> = rdr.headers().map_err(|e| io(e.to_string()))?.iter().map(str::to_string).collect();
    if header != FIT_CSV_HEADER {
        return Err(io(format!("unexpected header {}", header.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| io(e.to_string()))?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| io(format!("{}: {e}", FIT_CSV_HEADER[i])));
        let date: NaiveDate = rec[0].parse().map_err(|e| io(format!("date: {e}")))?;
        let model: Model = rec[1].parse().map_err(io)?;
        let x = match model {
            Model::NelsonSiegel => vec![num(2)?, num(3)?, num(4)?, num(6)?],
            Model::Svensson => vec![num(2)?, num(3)?, num(4)?, num(5)?, num(6)?, num(7)?],
        };
        out.push(FitRow {
            date,
            params: CurveParams::from_slice(model, &x)?,
            rmse: num(8)?,
            converged: rec[9].parse().map_err(|e| io(format!("converged: {e}")))?,
        });
    }
    Ok(out)
}
