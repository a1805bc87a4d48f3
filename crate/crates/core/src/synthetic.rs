//! Auction datasets priced off known zero curves, for fixtures and
//! self-consistency checks.

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bond_math::{discount_factor, interpolate_linear, schedule_yield, BondMathError, CashflowSchedule};
use crate::curve_models::{ns_rate, NelsonSiegelParams};
use crate::market_data::{AuctionRecord, Instrument, MaturityGrid};

/// Prices one auction date so that bootstrapping it returns `zero_rates_pct`
/// on `grid` exactly: tenors up to one year become bills, longer ones annual
/// coupon bonds whose coupon is the zero rate rounded to a quarter point.
pub fn auctions_from_zero_rates(
    date: NaiveDate,
    grid: &MaturityGrid,
    zero_rates_pct: &[f64],
) -> Result<Vec<AuctionRecord>, BondMathError> {
    if zero_rates_pct.len() != grid.len() {
        return Err(BondMathError::InvalidArgument("one zero rate per grid tenor required".into()));
    }
    let knots: Vec<(f64, f64)> = grid.years().into_iter().zip(zero_rates_pct.iter().copied()).collect();
    grid.tenors()
        .iter()
        .zip(zero_rates_pct)
        .map(|(tenor, &z)| {
            let t = tenor.years();
            let (instrument, coupon_pct) = if t <= 1.0 { (Instrument::Bill, 0.0) } else { (Instrument::Bond, (z * 4.0).round() / 4.0) };
            let face = 100.0;
            let schedule = CashflowSchedule::annual(face * coupon_pct / 100.0, face, t)?;
            let price = if coupon_pct == 0.0 {
                face * discount_factor(z, t)?
            } else {
                schedule.pv_with(|s| interpolate_linear(&knots, s))?
            };
            Ok(AuctionRecord {
                auction_date: date,
                maturity: *tenor,
                instrument,
                clean_price: price,
                face_value: face,
                coupon_rate_pct: coupon_pct.max(0.0),
                reported_yield_pct: schedule_yield(price, &schedule)?,
            })
        })
        .collect()
}

/// Weekly auction dates whose zero curves are Nelson-Siegel with per-date
/// parameter jitter plus independent Gaussian noise on every rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsScenario {
    pub start: NaiveDate,
    pub dates: usize,
    pub truth: NelsonSiegelParams,
    /// Standard deviation of the per-date shift of beta0, beta1, beta2.
    pub beta_jitter: f64,
    /// Standard deviation of the noise added to each zero rate, in percent.
    pub noise_sd_pct: f64,
    pub seed: u64,
}

impl Default for NsScenario {
    fn default() -> Self {
        NsScenario {
            start: NaiveDate::from_ymd_opt(2017, 1, 4).unwrap(),
            dates: 30,
            truth: NelsonSiegelParams { beta0: 9.5, beta1: -6.0, beta2: -3.0, tau: 1.3 },
            beta_jitter: 0.5,
            noise_sd_pct: 0.05,
            seed: 1,
        }
    }
}

impl NsScenario {
    /// The noisy zero rates for every date, in grid order.
    pub fn zero_rates(&self, grid: &MaturityGrid) -> Vec<(NaiveDate, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let jitter = Normal::new(0.0, self.beta_jitter.max(0.0)).expect("finite jitter");
        let noise = Normal::new(0.0, self.noise_sd_pct.max(0.0)).expect("finite noise");
        (0..self.dates)
            .map(|k| {
                let date = self.start + Days::new(7 * k as u64);
                let p = NelsonSiegelParams {
                    beta0: self.truth.beta0 + jitter.sample(&mut rng),
                    beta1: self.truth.beta1 + jitter.sample(&mut rng),
                    beta2: self.truth.beta2 + jitter.sample(&mut rng),
                    tau: self.truth.tau,
                };
                let rates = grid
                    .years()
                    .into_iter()
                    .map(|t| ns_rate(&p, t).expect("positive tenor and decay") + noise.sample(&mut rng))
                    .collect();
                (date, rates)
            })
            .collect()
    }

    pub fn auctions(&self, grid: &MaturityGrid) -> Result<Vec<AuctionRecord>, BondMathError> {
        let mut out = Vec::with_capacity(self.dates * grid.len());
        for (date, rates) in self.zero_rates(grid) {
            out.extend(auctions_from_zero_rates(date, grid, &rates)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bond_math::bootstrap_zero_curve;
    use crate::market_data::group_by_date;

    #[test]
    fn generated_auctions_bootstrap_back() {
        let grid = MaturityGrid::default();
        let rates = [7.1, 7.6, 8.3, 9.4, 10.2, 10.9, 11.3];
        let date = NaiveDate::from_ymd_opt(2019, 3, 6).unwrap();
        let recs = auctions_from_zero_rates(date, &grid, &rates).unwrap();
        assert!(recs.iter().all(|r| r.check().is_ok()));
        let (ds, _) = group_by_date(&recs, &grid).unwrap();
        let curve = bootstrap_zero_curve(&ds.observations[0], &grid).unwrap();
        for (got, want) in curve.points().iter().zip(rates) {
            assert!((got.1 - want).abs() < 1e-8);
        }
    }

    #[test]
    fn scenario_is_reproducible() {
        let grid = MaturityGrid::default();
        let s = NsScenario { dates: 3, ..NsScenario::default() };
        assert_eq!(s.auctions(&grid).unwrap(), s.auctions(&grid).unwrap());
        assert_eq!(s.auctions(&grid).unwrap().len(), 21);
    }
}
