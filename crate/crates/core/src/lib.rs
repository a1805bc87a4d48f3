//! Term-structure toolkit: bootstraps zero-coupon curves from treasury
//! auction results, fits Nelson-Siegel and Svensson curves to them with
//! Differential Evolution, and compares the two models' fit errors.
//!
//! The data-parallel loops (trial evaluation inside DE, per-date batch
//! calibration) run on rayon when the `parallel` feature is enabled and
//! [`Execution::Parallel`] is selected. Results are bit-identical either way.

pub mod bond_math;
pub mod calibration;
pub mod curve_models;
pub mod exec;
pub mod market_data;
pub mod root;
pub mod stats;
pub mod synthetic;

pub use bond_math::{bootstrap_zero_curve, discount_factor, price_bond, yield_to_maturity, ZeroCurve};
pub use calibration::{calibrate, calibrate_all, de_minimize, objective_rmse, Bounds, DeConfig, FitResult};
pub use curve_models::{ns_rate, sv_rate, CurveParams, Model, NelsonSiegelParams, SvenssonParams};
pub use exec::Execution;
pub use market_data::{group_by_date, impute_forward, parse_auctions, AuctionRecord, Dataset, MaturityGrid, Tenor};
pub use stats::{compare_models, ComparisonReport, Selection};
