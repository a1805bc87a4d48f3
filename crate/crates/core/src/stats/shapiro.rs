//! Shapiro-Wilk W test with Royston's (AS R94) coefficient and p-value
//! approximations, complete samples only.

use statrs::distribution::{ContinuousCDF, Normal};

use super::{StatsError, TestMethod, TestResult};

const MIN_N: usize = 3;
const MAX_N: usize = 5000;

// Polynomial coefficients, lowest order first.
const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Weights for the lower half of the order statistics (positive values;
/// the upper half mirrors them with opposite sign).
fn coefficients(n: usize, std_normal: &Normal) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an25 = n as f64 + 0.25;
    let m: Vec<f64> = (1..=half).map(|i| std_normal.inverse_cdf((i as f64 - 0.375) / an25)).collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let mut a = vec![0.0; half];
    let first_scaled;
    let fac;
    if n > 5 {
        first_scaled = 2;
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        fac = ((summ2 - 2.0 * m[0].powi(2) - 2.0 * m[1].powi(2)) / (1.0 - 2.0 * a1.powi(2) - 2.0 * a2.powi(2))).sqrt();
        a[1] = a2;
    } else {
        first_scaled = 1;
        fac = ((summ2 - 2.0 * m[0].powi(2)) / (1.0 - 2.0 * a1.powi(2))).sqrt();
    }
    a[0] = a1;
    for i in first_scaled..half {
        a[i] = -m[i] / fac;
    }
    a
}

pub fn shapiro_wilk(xs: &[f64]) -> Result<TestResult, StatsError> {
    let n = xs.len();
    if !(MIN_N..=MAX_N).contains(&n) {
        return Err(StatsError::SampleSize { n, min: MIN_N, max: MAX_N });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut x = xs.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range < 1e-19 * x[n - 1].abs().max(1.0) {
        return Err(StatsError::DegenerateSample);
    }

    let std_normal = Normal::standard();
    let a = coefficients(n, &std_normal);

    // Rescale by the range before forming sums of squares.
    let x: Vec<f64> = x.iter().map(|v| (v - x[0]) / range).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let ssx: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let b: f64 = a.iter().enumerate().map(|(i, ai)| ai * (x[n - 1 - i] - x[i])).sum();
    let w = (b * b / ssx).min(1.0);

    let p = if n == 3 {
        let w = w.max(0.75);
        (1.0 - 6.0 / std::f64::consts::PI * w.sqrt().acos()).max(0.0)
    } else {
        let y = (1.0 - w).ln();
        let nf = n as f64;
        if n <= 11 {
            let gamma = poly(&G, nf);
            if y >= gamma {
                1e-99
            } else {
                let y = -(gamma - y).ln();
                let m = poly(&C3, nf);
                let s = poly(&C4, nf).exp();
                std_normal.sf((y - m) / s)
            }
        } else {
            let ln_n = nf.ln();
            let m = poly(&C5, ln_n);
            let s = poly(&C6, ln_n).exp();
            std_normal.sf((y - m) / s)
        }
    };

    Ok(TestResult { method: TestMethod::ShapiroWilk, statistic: w, p_value: p.clamp(0.0, 1.0), n })
}
