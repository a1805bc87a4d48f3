//! Annual-compounding bond arithmetic: pricing, yield to maturity and the
//! sequential bootstrap of zero-coupon spot rates.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{DateObservation, MaturityGrid, Tenor};
use crate::root::{brent, RootError};

/// Initial yield bracket in percent.
const BRACKET_LO: f64 = -99.0;
const BRACKET_HI: f64 = 1000.0;
const BRACKET_EXPANSIONS: usize = 6;
/// Absolute price tolerance for every root solve.
const PRICE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BondMathError {
    #[error("rate {rate_pct}% is at or below -100%")]
    Domain { rate_pct: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no yield in [{lo}%, {hi}%] reproduces the price")]
    NoBracket { lo: f64, hi: f64 },
    #[error("bootstrap failed at tenor {tenor}: {reason}")]
    BootstrapFailure { tenor: Tenor, reason: String },
    #[error("observation on {date} is missing tenors {missing:?}")]
    Incomplete { date: NaiveDate, missing: Vec<Tenor> },
    #[error("zero curve io: {0}")]
    Io(String),
}

/// `(1 + r)^(-t)` with `r = rate_pct / 100`.
pub fn discount_factor(rate_pct: f64, t: f64) -> Result<f64, BondMathError> {
    if !(rate_pct > -100.0) {
        return Err(BondMathError::Domain { rate_pct });
    }
    if !(t >= 0.0) {
        return Err(BondMathError::InvalidArgument(format!("negative horizon {t}")));
    }
    Ok((1.0 + rate_pct / 100.0).powf(-t))
}

/// Dated cash flows of a bond; the last amount carries the principal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashflowSchedule {
    times: Vec<f64>,
    amounts: Vec<f64>,
}

impl CashflowSchedule {
    pub fn new(times: Vec<f64>, amounts: Vec<f64>) -> Result<Self, BondMathError> {
        if times.len() != amounts.len() || times.is_empty() {
            return Err(BondMathError::InvalidArgument("times and amounts must be non-empty and equal length".into()));
        }
        if times[0] <= 0.0 || times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BondMathError::InvalidArgument("payment times must be positive and increasing".into()));
        }
        Ok(CashflowSchedule { times, amounts })
    }

    /// Annual coupons at whole years after issue, principal with the last
    /// payment. A fractional maturity gets its final payment at maturity.
    pub fn annual(coupon: f64, face: f64, maturity_years: f64) -> Result<Self, BondMathError> {
        if !(maturity_years > 0.0) {
            return Err(BondMathError::InvalidArgument(format!("maturity {maturity_years}")));
        }
        let whole = maturity_years.ceil() as usize;
        let mut times: Vec<f64> = (1..whole).map(|k| k as f64).collect();
        times.push(maturity_years);
        let mut amounts = vec![coupon; times.len()];
        *amounts.last_mut().unwrap() += face;
        CashflowSchedule::new(times, amounts)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn amounts(&self) -> &[f64] {
        &self.amounts
    }

    /// Present value with a single flat yield.
    pub fn pv_flat(&self, rate_pct: f64) -> Result<f64, BondMathError> {
        self.pv_with(|_| rate_pct)
    }

    /// Present value with each flow discounted at its own zero rate.
    pub fn pv_with<F: FnMut(f64) -> f64>(&self, mut zero_rate_pct: F) -> Result<f64, BondMathError> {
        self.times
            .iter()
            .zip(&self.amounts)
            .map(|(&t, &a)| discount_factor(zero_rate_pct(t), t).map(|df| a * df))
            .sum()
    }
}

/// Price of an `n`-year bond paying `coupon` annually and `face` at maturity.
pub fn price_bond(coupon: f64, face: f64, n: u32, rate_pct: f64) -> Result<f64, BondMathError> {
    if n == 0 {
        return Err(BondMathError::InvalidArgument("maturity must be at least one year".into()));
    }
    if !(rate_pct > -100.0) {
        return Err(BondMathError::Domain { rate_pct });
    }
    let v = 1.0 / (1.0 + rate_pct / 100.0);
    let mut df = 1.0;
    let mut pv = 0.0;
    for _ in 0..n {
        df *= v;
        pv += coupon * df;
    }
    Ok(pv + face * df)
}

/// Solves `pv(r) = target` on the yield bracket, widening it geometrically
/// before giving up. `pv` must be decreasing in `r`.
fn solve_rate<F>(mut pv: F, target: f64) -> Result<f64, BondMathError>
where
    F: FnMut(f64) -> Result<f64, BondMathError>,
{
    let (mut lo, mut hi) = (BRACKET_LO, BRACKET_HI);
    for _ in 0..=BRACKET_EXPANSIONS {
        let mut inner_err = None;
        let res = brent(
            |r| match pv(r) {
                Ok(p) => p - target,
                Err(e) => {
                    inner_err.get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            PRICE_TOL,
        );
        if let Some(e) = inner_err {
            return Err(e);
        }
        match res {
            Ok(r) => return Ok(r),
            Err(RootError::NoBracket { .. }) | Err(RootError::NonFinite { .. }) => {
                lo = -100.0 + (lo + 100.0) / 10.0;
                hi *= 2.0;
            }
            Err(RootError::MaxIterations) => {
                return Err(BondMathError::InvalidArgument("root solve did not converge".into()));
            }
        }
    }
    Err(BondMathError::NoBracket { lo: BRACKET_LO, hi: BRACKET_HI })
}

/// Yield to maturity in percent of an annual-coupon bond.
pub fn yield_to_maturity(price: f64, coupon: f64, face: f64, n: u32) -> Result<f64, BondMathError> {
    if !(price > 0.0) {
        return Err(BondMathError::InvalidArgument(format!("price {price} must be positive")));
    }
    if n == 0 {
        return Err(BondMathError::InvalidArgument("maturity must be at least one year".into()));
    }
    solve_rate(|r| price_bond(coupon, face, n, r), price)
}

/// Yield to maturity of an arbitrary schedule.
pub fn schedule_yield(price: f64, schedule: &CashflowSchedule) -> Result<f64, BondMathError> {
    if !(price > 0.0) {
        return Err(BondMathError::InvalidArgument(format!("price {price} must be positive")));
    }
    solve_rate(|r| schedule.pv_flat(r), price)
}

/// Linear interpolation in zero rate against maturity over sorted `(years,
/// rate)` knots, flat beyond either end.
pub fn interpolate_linear(knots: &[(f64, f64)], t: f64) -> f64 {
    debug_assert!(!knots.is_empty());
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|k| k.0 <= t);
    let (t0, r0) = knots[i - 1];
    let (t1, r1) = knots[i];
    if t == t0 {
        return r0;
    }
    r0 + (r1 - r0) * (t - t0) / (t1 - t0)
}

/// Bootstrapped spot curve for one date, annually compounded percent rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCurve {
    pub date: NaiveDate,
    pub grid: MaturityGrid,
    pub zero_rates_pct: BTreeMap<Tenor, f64>,
}

impl ZeroCurve {
    pub fn new(date: NaiveDate, grid: MaturityGrid, zero_rates_pct: BTreeMap<Tenor, f64>) -> Result<Self, BondMathError> {
        for t in grid.tenors() {
            match zero_rates_pct.get(t) {
                None => return Err(BondMathError::Incomplete { date, missing: vec![*t] }),
                Some(&r) if !(r > -100.0) || !r.is_finite() => return Err(BondMathError::Domain { rate_pct: r }),
                _ => {}
            }
        }
        if zero_rates_pct.len() != grid.len() {
            return Err(BondMathError::InvalidArgument("rates present for tenors outside the grid".into()));
        }
        Ok(ZeroCurve { date, grid, zero_rates_pct })
    }

    /// `(years, rate_pct)` in grid order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.grid.tenors().iter().map(|t| (t.years(), self.zero_rates_pct[t])).collect()
    }

    pub fn rate_at(&self, years: f64) -> f64 {
        interpolate_linear(&self.points(), years)
    }
}

/// Strips the zero curve out of one complete date of auctions.
///
/// Zero-coupon instruments give their rate directly; coupon bonds are solved
/// shortest first, discounting earlier coupons on the rates already found.
/// A coupon falling between known tenors uses the linearly interpolated
/// rate, including the segment that ends at the tenor being solved.
pub fn bootstrap_zero_curve(obs: &DateObservation, grid: &MaturityGrid) -> Result<ZeroCurve, BondMathError> {
    let missing = obs.missing(grid);
    if !missing.is_empty() {
        return Err(BondMathError::Incomplete { date: obs.date, missing });
    }

    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(grid.len());
    let mut rates = BTreeMap::new();
    for tenor in grid.tenors() {
        let rec = &obs.records[tenor];
        let maturity = tenor.years();
        let fail = |reason: String| BondMathError::BootstrapFailure { tenor: *tenor, reason };

        let z = if rec.coupon_rate_pct == 0.0 {
            let growth = rec.face_value / rec.clean_price;
            (growth.powf(1.0 / maturity) - 1.0) * 100.0
        } else {
            let schedule = CashflowSchedule::annual(rec.coupon_amount(), rec.face_value, maturity)
                .map_err(|e| fail(e.to_string()))?;
            let mut trial = knots.clone();
            trial.push((maturity, 0.0));
            let last = trial.len() - 1;
            solve_rate(
                |z| {
                    trial[last].1 = z;
                    schedule.pv_with(|t| interpolate_linear(&trial, t))
                },
                rec.clean_price,
            )
            .map_err(|e| fail(e.to_string()))?
        };
        if !z.is_finite() || z <= -100.0 {
            return Err(fail(format!("inadmissible zero rate {z}")));
        }
        knots.push((maturity, z));
        rates.insert(*tenor, z);
    }
    ZeroCurve::new(obs.date, grid.clone(), rates)
}

#[derive(Debug, Serialize, Deserialize)]
struct ZeroRow {
    date: NaiveDate,
    tenor_years: Tenor,
    zero_rate_pct: f64,
}

/// CSV `date,tenor_years,zero_rate_pct`, one row per curve point.
pub fn write_zero_curves_csv<W: Write>(curves: &[ZeroCurve], sink: W) -> Result<(), BondMathError> {
    let io = |e: csv::Error| BondMathError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(sink);
    for c in curves {
        for t in c.grid.tenors() {
            w.serialize(ZeroRow { date: c.date, tenor_years: *t, zero_rate_pct: c.zero_rates_pct[t] }).map_err(io)?;
        }
    }
    w.flush().map_err(|e| BondMathError::Io(e.to_string()))
}

/// Reads curves written by [`write_zero_curves_csv`]; each date's grid is the
/// set of tenors present for it.
pub fn read_zero_curves_csv<R: Read>(source: R) -> Result<Vec<ZeroCurve>, BondMathError> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut by_date: BTreeMap<NaiveDate, BTreeMap<Tenor, f64>> = BTreeMap::new();
    for row in rdr.deserialize::<ZeroRow>() {
        let row = row.map_err(|e| BondMathError::Io(e.to_string()))?;
        by_date.entry(row.date).or_default().insert(row.tenor_years, row.zero_rate_pct);
    }
    by_date
        .into_iter()
        .map(|(date, rates)| {
            let grid = MaturityGrid::new(rates.keys().copied().collect()).map_err(|e| BondMathError::Io(e.to_string()))?;
            ZeroCurve::new(date, grid, rates)
        })
        .collect()
}
