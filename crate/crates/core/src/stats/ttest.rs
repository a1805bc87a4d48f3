use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{StatsError, TestMethod, TestResult};

/// Two-sided paired t-test on `a - b` with `n - 1` degrees of freedom.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(StatsError::SampleSize { n, min: 2, max: usize::MAX });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if d.iter().all(|v| *v == d[0]) || var == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TestResult { method: TestMethod::PairedT, statistic: t, p_value: p, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_to_five() {
        let r = paired_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert!((r.statistic - 4.242_640_687_119_285).abs() < 1e-12);
        assert!((r.p_value - 0.013_235_599_563_682_695).abs() < 1e-9);
    }

    #[test]
    fn identical_series_have_zero_variance() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(paired_t_test(&a, &a), Err(StatsError::ZeroVariance));
    }

    #[test]
    fn symmetric_differences_give_unit_p() {
        let r = paired_t_test(&[-1.0, 1.0, -2.0, 2.0], &[0.0; 4]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(paired_t_test(&[1.0, 2.0], &[1.0]), Err(StatsError::LengthMismatch { a: 2, b: 1 }));
    }

    proptest! {
        #[test]
        fn swapping_samples_negates_t(a in proptest::collection::vec(-10.0..10.0f64, 3..20), shift in -1.0..1.0f64) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x * 0.9 + shift + (i as f64) * 0.01).collect();
            if let (Ok(x), Ok(y)) = (paired_t_test(&a, &b), paired_t_test(&b, &a)) {
                prop_assert_eq!(x.statistic, -y.statistic);
                prop_assert_eq!(x.p_value, y.p_value);
            }
        }
    }
}
