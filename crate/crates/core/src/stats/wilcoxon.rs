//! Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped, tied magnitudes share their average rank.
//! Up to [`EXACT_MAX`] non-zero pairs the two-sided p-value is exact: the
//! null distribution counts all 2^m equally likely sign assignments, built
//! by dynamic programming over doubled (integer) rank sums. Beyond that a
//! normal approximation with continuity and tie corrections is used.

use statrs::distribution::{ContinuousCDF, Normal};

use super::{StatsError, TestMethod, TestResult};

pub const EXACT_MAX: usize = 25;

/// Average ranks of `|d|`, doubled so that half-ranks stay integral.
fn doubled_ranks(abs: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let m = abs.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| abs[i].total_cmp(&abs[j]));
    let mut ranks = vec![0u64; m];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && abs[order[end]] == abs[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share rank (start+1+end)/2
        let doubled = (start + 1 + end) as u64;
        for &k in &order[start..end] {
            ranks[k] = doubled;
        }
        tie_sizes.push(end - start);
        start = end;
    }
    (ranks, tie_sizes)
}

/// Number of sign assignments reaching each doubled rank sum.
fn null_counts(ranks: &[u64]) -> Vec<u64> {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    counts
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let m = d.len();
    if m == 0 {
        return Err(StatsError::AllZeroDifferences);
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, tie_sizes) = doubled_ranks(&abs);
    let w2: u64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| *r).sum();
    let statistic = w2 as f64 / 2.0;

    let p = if m <= EXACT_MAX {
        let counts = null_counts(&ranks);
        let at_most: u64 = counts[..=w2 as usize].iter().sum();
        let at_least: u64 = counts[w2 as usize..].iter().sum();
        let assignments = 1u64 << m;
        (2 * at_most.min(at_least)).min(assignments) as f64 / assignments as f64
    } else {
        let mf = m as f64;
        let mean = mf * (mf + 1.0) / 4.0;
        let tie_term: f64 = tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term;
        let dev = statistic - mean;
        let corrected = (dev.abs() - 0.5).max(0.0);
        if var <= 0.0 {
            1.0
        } else {
            (2.0 * Normal::standard().sf(corrected / var.sqrt())).min(1.0)
        }
    };

    Ok(TestResult { method: TestMethod::WilcoxonSignedRank, statistic, p_value: p, n: m })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_positive_pairs() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert_eq!(r.statistic, 15.0);
        // 2 / 32 from enumerating all sign assignments
        assert_eq!(r.p_value, 0.0625);
    }

    #[test]
    fn tied_pair_of_opposite_signs() {
        let r = wilcoxon_signed_rank(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(r.statistic, 1.5);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn zeros_are_dropped() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0, 7.0], &[0.0, 0.0, 0.0, 0.0, 0.0, 7.0]).unwrap();
        assert_eq!(r.n, 5);
        assert_eq!(r.p_value, 0.0625);
    }

    #[test]
    fn all_zero_differences() {
        assert_eq!(wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::AllZeroDifferences));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]), Err(StatsError::LengthMismatch { .. })));
    }

    #[test]
    fn doubled_ranks_average_ties() {
        let (r, ties) = doubled_ranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![7, 2, 7, 4]);
        assert_eq!(ties, vec![1, 1, 2]);
    }

    #[test]
    fn null_counts_sum_to_all_assignments() {
        let counts = null_counts(&[2, 4, 6, 8]);
        assert_eq!(counts.iter().sum::<u64>(), 16);
        assert_eq!(counts[0], 1);
        assert_eq!(counts[20], 1);
    }

    #[test]
    fn normal_branch_tracks_exact_distribution() {
        // 30 pairs forces the approximation; the exact tail from the same
        // counting routine must agree closely.
        let a: Vec<f64> = (1..=30).map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 }).collect();
        let approx = wilcoxon_signed_rank(&a, &vec![0.0; 30]).unwrap();
        let (ranks, _) = doubled_ranks(&a.iter().map(|v| v.abs()).collect::<Vec<_>>());
        let counts = null_counts(&ranks);
        let w2 = (approx.statistic * 2.0) as usize;
        let tail: u64 = counts[w2..].iter().sum::<u64>().min(counts[..=w2].iter().sum());
        let exact = 2.0 * tail as f64 / (1u64 << 30) as f64;
        assert!((approx.p_value - exact).abs() < 5e-3, "{} vs {}", approx.p_value, exact);
    }

    #[test]
    fn large_sample_normal_approximation() {
        // 40 positive, distinct: z is far in the tail
        let a: Vec<f64> = (1..=40).map(f64::from).collect();
        let r = wilcoxon_signed_rank(&a, &vec![0.0; 40]).unwrap();
        assert_eq!(r.statistic, 820.0);
        assert!(r.p_value < 1e-6);
    }
}
