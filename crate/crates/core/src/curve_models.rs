//! Nelson-Siegel and Svensson spot-rate functions.
//!
//! All level parameters and returned rates are percent per annum; decay
//! parameters are in years.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("maturity must be positive, got {0}")]
    NonPositiveMaturity(f64),
    #[error("decay parameter must be positive, got {0}")]
    NonPositiveDecay(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("expected {expected} parameters, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("io: {0}")]
    Io(String),
}

/// Below this argument the slope loading switches to its Taylor expansion.
pub const SERIES_THRESHOLD: f64 = 1e-6;

/// Slope loading `(1 - e^-x) / x`.
pub fn slope_loading(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        1.0 - x / 2.0 + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Below this argument the curvature loading uses its series, which avoids
/// the cancellation between its two terms.
const CURVATURE_SERIES_THRESHOLD: f64 = 1e-3;

/// Curvature loading `(1 - e^-x) / x - e^-x`.
pub fn curvature_loading(x: f64) -> f64 {
    if x.abs() < CURVATURE_SERIES_THRESHOLD {
        // x/2 - x^2/3 + x^3/8 - x^4/30
        x * (0.5 + x * (-1.0 / 3.0 + x * (0.125 - x / 30.0)))
    } else {
        slope_loading(x) - (-x).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Model {
    #[serde(rename = "ns")]
    NelsonSiegel,
    #[serde(rename = "svensson")]
    Svensson,
}

impl Model {
    pub fn dimension(self) -> usize {
        match self {
            Model::NelsonSiegel => 4,
            Model::Svensson => 6,
        }
    }

    /// Number of decay parameters, which come last in parameter order.
    pub fn decay_count(self) -> usize {
        match self {
            Model::NelsonSiegel => 1,
            Model::Svensson => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::NelsonSiegel => "Nelson-Siegel",
            Model::Svensson => "Svensson",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Model::NelsonSiegel => "ns",
            Model::Svensson => "svensson",
        }
    }

    pub fn param_symbols(self) -> &'static [&'static str] {
        match self {
            Model::NelsonSiegel => &["beta0", "beta1", "beta2", "tau"],
            Model::Svensson => &["beta0", "beta1", "beta2", "beta3", "tau1", "tau2"],
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ns" | "nelson-siegel" | "nelson_siegel" => Ok(Model::NelsonSiegel),
            "sv" | "svensson" => Ok(Model::Svensson),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NelsonSiegelParams {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    #[serde(alias = "tau1")]
    pub tau: f64,
}

impl NelsonSiegelParams {
    /// Validated constructor: `tau > 0`, `beta0 > 0`, `beta0 + beta1 > 0`.
    pub fn new(beta0: f64, beta1: f64, beta2: f64, tau: f64) -> Result<Self, CurveError> {
        let p = NelsonSiegelParams { beta0, beta1, beta2, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        validate_common(&[self.beta0, self.beta1, self.beta2, self.tau], self.beta0, self.beta1, &[self.tau])
    }

    pub fn short_rate(&self) -> f64 {
        self.beta0 + self.beta1
    }

    /// The equivalent Svensson parameter set with a zero second hump.
    pub fn as_svensson(&self, tau2: f64) -> SvenssonParams {
        SvenssonParams {
            beta0: self.beta0,
            beta1: self.beta1,
            beta2: self.beta2,
            beta3: 0.0,
            tau1: self.tau,
            tau2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvenssonParams {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl SvenssonParams {
    pub fn new(beta0: f64, beta1: f64, beta2: f64, beta3: f64, tau1: f64, tau2: f64) -> Result<Self, CurveError> {
        let p = SvenssonParams { beta0, beta1, beta2, beta3, tau1, tau2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        validate_common(
            &[self.beta0, self.beta1, self.beta2, self.beta3, self.tau1, self.tau2],
            self.beta0,
            self.beta1,
            &[self.tau1, self.tau2],
        )
    }

    pub fn short_rate(&self) -> f64 {
        self.beta0 + self.beta1
    }
}

fn validate_common(all: &[f64], beta0: f64, beta1: f64, taus: &[f64]) -> Result<(), CurveError> {
    if all.iter().any(|v| !v.is_finite()) {
        return Err(CurveError::InvalidParams("non-finite parameter".into()));
    }
    if let Some(&t) = taus.iter().find(|&&t| t <= 0.0) {
        return Err(CurveError::NonPositiveDecay(t));
    }
    if beta0 <= 0.0 {
        return Err(CurveError::InvalidParams(format!("long-term rate beta0 = {beta0} must be positive")));
    }
    if beta0 + beta1 <= 0.0 {
        return Err(CurveError::InvalidParams(format!("short rate beta0 + beta1 = {} must be positive", beta0 + beta1)));
    }
    Ok(())
}

/// Nelson-Siegel spot rate at maturity `t` years.
pub fn ns_rate(p: &NelsonSiegelParams, t: f64) -> Result<f64, CurveError> {
    if !(t > 0.0) {
        return Err(CurveError::NonPositiveMaturity(t));
    }
    if !(p.tau > 0.0) {
        return Err(CurveError::NonPositiveDecay(p.tau));
    }
    let x = t / p.tau;
    Ok(p.beta0 + p.beta1 * slope_loading(x) + p.beta2 * curvature_loading(x))
}

/// Svensson spot rate: the Nelson-Siegel body on `tau1` plus a second
/// curvature term on `tau2`.
pub fn sv_rate(p: &SvenssonParams, t: f64) -> Result<f64, CurveError> {
    if !(t > 0.0) {
        return Err(CurveError::NonPositiveMaturity(t));
    }
    if !(p.tau1 > 0.0) {
        return Err(CurveError::NonPositiveDecay(p.tau1));
    }
    if !(p.tau2 > 0.0) {
        return Err(CurveError::NonPositiveDecay(p.tau2));
    }
    let x1 = t / p.tau1;
    let x2 = t / p.tau2;
    Ok(p.beta0 + p.beta1 * slope_loading(x1) + p.beta2 * curvature_loading(x1) + p.beta3 * curvature_loading(x2))
}

/// A parameter set of either model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveParams {
    // Svensson first: its required beta3/tau2 keep an NS document from matching.
    Svensson(SvenssonParams),
    NelsonSiegel(NelsonSiegelParams),
}

impl CurveParams {
    pub fn model(&self) -> Model {
        match self {
            CurveParams::NelsonSiegel(_) => Model::NelsonSiegel,
            CurveParams::Svensson(_) => Model::Svensson,
        }
    }

    pub fn rate(&self, t: f64) -> Result<f64, CurveError> {
        match self {
            CurveParams::NelsonSiegel(p) => ns_rate(p, t),
            CurveParams::Svensson(p) => sv_rate(p, t),
        }
    }

    /// Parameters in [`Model::param_symbols`] order.
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            CurveParams::NelsonSiegel(p) => vec![p.beta0, p.beta1, p.beta2, p.tau],
            CurveParams::Svensson(p) => vec![p.beta0, p.beta1, p.beta2, p.beta3, p.tau1, p.tau2],
        }
    }

    /// Inverse of [`CurveParams::to_vec`]; no economic validation.
    pub fn from_slice(model: Model, x: &[f64]) -> Result<Self, CurveError> {
        if x.len() != model.dimension() {
            return Err(CurveError::WrongDimension { expected: model.dimension(), got: x.len() });
        }
        Ok(match model {
            Model::NelsonSiegel => {
                CurveParams::NelsonSiegel(NelsonSiegelParams { beta0: x[0], beta1: x[1], beta2: x[2], tau: x[3] })
            }
            Model::Svensson => CurveParams::Svensson(SvenssonParams {
                beta0: x[0],
                beta1: x[1],
                beta2: x[2],
                beta3: x[3],
                tau1: x[4],
                tau2: x[5],
            }),
        })
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        match self {
            CurveParams::NelsonSiegel(p) => p.validate(),
            CurveParams::Svensson(p) => p.validate(),
        }
    }

    pub fn short_rate(&self) -> f64 {
        match self {
            CurveParams::NelsonSiegel(p) => p.short_rate(),
            CurveParams::Svensson(p) => p.short_rate(),
        }
    }
}

/// Evaluates the model at each tenor, preserving order.
pub fn curve_samples(params: &CurveParams, tenors: &[f64]) -> Result<Vec<(f64, f64)>, CurveError> {
    tenors.iter().map(|&t| params.rate(t).map(|r| (t, r))).collect()
}

/// CSV `tenor_years,rate_pct` for plotting.
pub fn write_samples_csv<W: Write>(samples: &[(f64, f64)], sink: W) -> Result<(), CurveError> {
    let io = |e: csv::Error| CurveError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["tenor_years", "rate_pct"]).map_err(io)?;
    for (t, r) in samples {
        w.write_record([t.to_string(), r.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| CurveError::Io(e.to_string()))
}

/// One row of the economic reading of a parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDescriptor {
    pub symbol: &'static str,
    pub value: f64,
    pub meaning: &'static str,
    /// Set when the value sits on the edge of its admissible region.
    pub boundary: bool,
}

pub fn describe_params(params: &CurveParams) -> Vec<ParamDescriptor> {
    let row = |symbol, value: f64, meaning| ParamDescriptor { symbol, value, meaning, boundary: false };
    let (beta0, beta1, beta2) = match *params {
        CurveParams::NelsonSiegel(p) => (p.beta0, p.beta1, p.beta2),
        CurveParams::Svensson(p) => (p.beta0, p.beta1, p.beta2),
    };
    let mut rows = vec![
        ParamDescriptor { boundary: beta0 <= 0.0, ..row("beta0", beta0, "long-term rate (limit as maturity grows)") },
        ParamDescriptor {
            boundary: beta0 + beta1 <= 0.0,
            ..row("beta0+beta1", beta0 + beta1, "instantaneous short rate (limit at zero maturity)")
        },
        row("beta1", beta1, "slope: spread between the short and long end"),
        row("beta2", beta2, "curvature: size and sign of the medium-term hump"),
    ];
    match *params {
        CurveParams::NelsonSiegel(p) => {
            rows.push(ParamDescriptor { boundary: p.tau <= 0.0, ..row("tau", p.tau, "decay: speed of convergence to the long-term rate") });
        }
        CurveParams::Svensson(p) => {
            rows.push(row("beta3", p.beta3, "second curvature: extra hump on the tau2 scale"));
            rows.push(ParamDescriptor { boundary: p.tau1 <= 0.0, ..row("tau1", p.tau1, "first decay: convergence speed of slope and first hump") });
            rows.push(ParamDescriptor { boundary: p.tau2 <= 0.0, ..row("tau2", p.tau2, "second decay: position of the second hump") });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ns(b0: f64, b1: f64, b2: f64, tau: f64) -> NelsonSiegelParams {
        NelsonSiegelParams { beta0: b0, beta1: b1, beta2: b2, tau }
    }

    #[test]
    fn ns_closed_form_at_one_year() {
        // 10 - 5 (1 - e^-1)
        assert_abs_diff_eq!(ns_rate(&ns(10.0, -5.0, 0.0, 1.0), 1.0).unwrap(), 6.839_397_205_857_212, epsilon = 1e-12);
    }

    #[test]
    fn small_argument_curvature_loading() {
        // 50-digit references
        for (x, want) in [(1e-9, 4.999999996666667e-10), (1e-7, 4.9999996666666793e-08), (1e-5, 4.999966666791666e-06)] {
            let got = curvature_loading(x);
            assert!(((got - want) / want).abs() < 1e-12, "{x}: {got}");
        }
        // both branches agree at the switch
        let t = CURVATURE_SERIES_THRESHOLD;
        let direct = slope_loading(t) - (-t).exp();
        assert!(((curvature_loading(t * (1.0 - 1e-12)) - direct) / direct).abs() < 1e-11);
    }

    #[test]
    fn ns_limits() {
        let p = ns(10.0, -5.0, 3.0, 1.0);
        assert_abs_diff_eq!(ns_rate(&p, 1e6).unwrap(), 10.0, epsilon = 1e-4);
        assert_abs_diff_eq!(ns_rate(&p, 1e-8).unwrap(), 5.0, epsilon = 1e-4);
    }

    #[test]
    fn nonpositive_maturity_is_domain_error() {
        assert_eq!(ns_rate(&ns(10.0, -5.0, 3.0, 1.0), 0.0), Err(CurveError::NonPositiveMaturity(0.0)));
        assert!(ns_rate(&ns(10.0, -5.0, 3.0, 0.0), 1.0).is_err());
        let sv = SvenssonParams { beta0: 10.0, beta1: -5.0, beta2: 0.0, beta3: 0.0, tau1: 1.0, tau2: 1.0 };
        assert!(sv_rate(&sv, -1.0).is_err());
    }

    #[test]
    fn sv_reduces_to_ns() {
        let sv = SvenssonParams { beta0: 10.0, beta1: -5.0, beta2: 0.0, beta3: 0.0, tau1: 1.0, tau2: 1.0 };
        assert_abs_diff_eq!(sv_rate(&sv, 1.0).unwrap(), 6.839_397_205_857_212, epsilon = 1e-12);
    }

    #[test]
    fn sv_pinned_value() {
        // arbitrary-precision evaluation of the closed form
        let sv = SvenssonParams { beta0: 9.5, beta1: -6.0, beta2: -3.0, beta3: 0.93, tau1: 1.35, tau2: 0.76 };
        assert_abs_diff_eq!(sv_rate(&sv, 5.0).unwrap(), 7.343_623_998_595_691, epsilon = 1e-12);
    }

    #[test]
    fn samples_preserve_order_and_handle_empty() {
        let p = CurveParams::NelsonSiegel(ns(10.0, -5.0, 0.0, 1.0));
        let s = curve_samples(&p, &[1.0]).unwrap();
        assert_eq!(s.len(), 1);
        assert_abs_diff_eq!(s[0].1, 6.839_397_205_857_212, epsilon = 1e-12);
        assert!(curve_samples(&p, &[]).unwrap().is_empty());
        assert!(curve_samples(&p, &[1.0, -1.0]).is_err());
    }

    #[test]
    fn sv_samples_match_ns_when_hump_vanishes() {
        let n = ns(8.81, -5.99, -1.93, 1.03);
        let grid = [0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0];
        let a = curve_samples(&CurveParams::NelsonSiegel(n), &grid).unwrap();
        let b = curve_samples(&CurveParams::Svensson(n.as_svensson(0.7)), &grid).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn describe_ns_medians() {
        let rows = describe_params(&CurveParams::NelsonSiegel(ns(8.81, -5.99, -1.93, 1.03)));
        let get = |s: &str| rows.iter().find(|r| r.symbol == s).unwrap().value;
        assert_eq!(get("beta0"), 8.81);
        assert_abs_diff_eq!(get("beta0+beta1"), 2.82, epsilon = 1e-12);
        assert!(rows.iter().all(|r| !r.boundary));
    }

    #[test]
    fn describe_flags_zero_short_rate() {
        let rows = describe_params(&CurveParams::NelsonSiegel(ns(10.0, -10.0, 0.0, 1.0)));
        let short = rows.iter().find(|r| r.symbol == "beta0+beta1").unwrap();
        assert_eq!(short.value, 0.0);
        assert!(short.boundary);
    }

    #[test]
    fn describe_svensson_has_second_hump() {
        let sv = SvenssonParams { beta0: 8.796, beta1: -6.306, beta2: -1.932, beta3: 0.93, tau1: 1.0182, tau2: 0.76 };
        let rows = describe_params(&CurveParams::Svensson(sv));
        let symbols: Vec<_> = rows.iter().map(|r| r.symbol).collect();
        assert!(symbols.contains(&"beta3") && symbols.contains(&"tau2"));
    }

    #[test]
    fn validated_constructor_rejects_violations() {
        assert!(NelsonSiegelParams::new(5.0, -5.0, 0.0, 1.0).is_err());
        assert!(NelsonSiegelParams::new(-1.0, 5.0, 0.0, 1.0).is_err());
        assert!(NelsonSiegelParams::new(5.0, 1.0, 0.0, 0.0).is_err());
        assert!(SvenssonParams::new(5.0, 1.0, 0.0, 1.0, 1.0, -0.5).is_err());
        assert!(NelsonSiegelParams::new(5.0, -1.0, 2.0, 1.0).is_ok());
    }

    #[test]
    fn params_json_keys() {
        let n = CurveParams::NelsonSiegel(ns(8.0, -2.0, 1.0, 1.5));
        let json = serde_json::to_string(&n).unwrap();
        assert_eq!(json, r#"{"beta0":8.0,"beta1":-2.0,"beta2":1.0,"tau":1.5}"#);
        assert_eq!(serde_json::from_str::<CurveParams>(&json).unwrap(), n);
        let aliased: CurveParams = serde_json::from_str(r#"{"beta0":8.0,"beta1":-2.0,"beta2":1.0,"tau1":1.5}"#).unwrap();
        assert_eq!(aliased, n);
        let s = CurveParams::Svensson(ns(8.0, -2.0, 1.0, 1.5).as_svensson(0.5));
        let back: CurveParams = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn ns_is_continuous_on_fine_grid() {
        let p = ns(9.5, -6.0, -3.0, 1.3);
        let h = 1e-4;
        let mut prev = ns_rate(&p, h).unwrap();
        let mut t = 2.0 * h;
        while t < 10.0 {
            let r = ns_rate(&p, t).unwrap();
            let slope = (ns_rate(&p, t + h).unwrap() - r).abs();
            assert!((r - prev).abs() <= 10.0 * slope.max(1e-12) + 1e-12, "jump at {t}");
            prev = r;
            t += h;
        }
    }

    proptest! {
        #[test]
        fn sv_reduction_is_exact(b0 in 0.1..25.0f64, b1 in -25.0..25.0f64, b2 in -25.0..25.0f64,
                                 tau in 0.05..10.0f64, tau2 in 0.05..10.0f64, t in 0.01..30.0f64) {
            let n = ns(b0, b1, b2, tau);
            prop_assert_eq!(ns_rate(&n, t).unwrap(), sv_rate(&n.as_svensson(tau2), t).unwrap());
        }
    }
}
