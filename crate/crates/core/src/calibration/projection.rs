//! Variable projection for the linear loadings.
//!
//! Both curve families are linear in their betas once the decays are fixed,
//! so the DE search runs over the decays alone and each candidate's betas
//! are the exact box-constrained least-squares solution.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::curve_models::{curvature_loading, slope_loading, Model};

/// Columns: level, slope(tau1), curvature(tau1) and, for Svensson,
/// curvature(tau2).
pub(crate) fn design(times: &[f64], decays: &[f64]) -> DMatrix<f64> {
    let k = 2 + decays.len();
    DMatrix::from_fn(times.len(), k, |i, j| {
        let t = times[i];
        match j {
            0 => 1.0,
            1 => slope_loading(t / decays[0]),
            2 => curvature_loading(t / decays[0]),
            _ => curvature_loading(t / decays[1]),
        }
    })
}

fn sse(a: &DMatrix<f64>, b: &DVector<f64>, z: &DVector<f64>) -> f64 {
    (a * b - z).norm_squared()
}

/// All {free, at low, at high} assignments of `k` coordinates (base-3
/// digits), fewest bound coordinates first.
fn active_sets(k: usize) -> &'static [u32] {
    static SETS: OnceLock<Vec<Vec<u32>>> = OnceLock::new();
    let all = SETS.get_or_init(|| {
        (0..=4u32)
            .map(|k| {
                let mut v: Vec<u32> = (0..3u32.pow(k)).collect();
                v.sort_by_key(|&c| (bound_count(c, k), c));
                v
            })
            .collect()
    });
    &all[k]
}

fn bound_count(mut code: u32, k: u32) -> u32 {
    let mut n = 0;
    for _ in 0..k {
        n += u32::from(code % 3 != 0);
        code /= 3;
    }
    n
}

/// Minimizer with the bound coordinates of `code` pinned, from the normal
/// equations restricted to the free coordinates. `None` if that block is
/// not positive definite.
fn solve_pinned(g: &DMatrix<f64>, h: &DVector<f64>, code: u32, lo: &[f64], hi: &[f64]) -> Option<(DVector<f64>, Vec<usize>)> {
    let k = g.ncols();
    let mut b = DVector::zeros(k);
    let mut free = Vec::with_capacity(k);
    let mut c = code;
    for j in 0..k {
        match c % 3 {
            0 => free.push(j),
            1 => b[j] = lo[j],
            _ => b[j] = hi[j],
        }
        c /= 3;
    }
    if !free.is_empty() {
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| h[i] - (0..k).map(|j| g[(i, j)] * b[j]).sum::<f64>()));
        let block = g.select_rows(&free).select_columns(&free);
        let sol = block.cholesky()?.solve(&rhs);
        for (&j, v) in free.iter().zip(sol.iter()) {
            b[j] = *v;
        }
    }
    Some((b, free))
}

/// `min |A b - z|^2` subject to `lo <= b <= hi`.
///
/// A convex quadratic over a box: its minimizer solves the normal equations
/// on the free coordinates of some active set and satisfies the sign
/// conditions on the pinned ones. Active sets are tried from fewest pinned
/// coordinates up, returning the first that passes; with at most four
/// columns the full list is 81 entries.
pub(crate) fn box_least_squares(a: &DMatrix<f64>, z: &DVector<f64>, lo: &[f64], hi: &[f64]) -> (Vec<f64>, f64) {
    let k = a.ncols();
    let g = a.tr_mul(a);
    let h = a.tr_mul(z);
    let scale = h.amax().max(g.amax()) * 1e-9;
    let mut best: Option<(DVector<f64>, f64)> = None;
    for &code in active_sets(k) {
        let Some((b, free)) = solve_pinned(&g, &h, code, lo, hi) else { continue };
        if free.iter().any(|&j| b[j] < lo[j] || b[j] > hi[j]) {
            continue;
        }
        let s = sse(a, &b, z);
        let grad = &g * &b - &h;
        let mut c = code;
        let mut optimal = true;
        for j in 0..k {
            match c % 3 {
                1 => optimal &= grad[j] >= -scale,
                2 => optimal &= grad[j] <= scale,
                _ => {}
            }
            c /= 3;
        }
        if optimal {
            return (b.iter().copied().collect(), s);
        }
        if best.as_ref().map_or(true, |(_, bs)| s < *bs) {
            best = Some((b, s));
        }
    }
    let (b, s) = best.expect("the all-pinned assignment is always feasible");
    (b.iter().copied().collect(), s)
}

/// Maps a DE point to the decays in one of the two orderings. Svensson's
/// two humps trade places under `tau1 <-> tau2` almost exactly on short
/// grids, which gives its objective two mirror valleys; searching each
/// ordering separately keeps DE from settling in the wrong one.
pub(crate) fn oriented(model: Model, x: &[f64], descending: bool) -> Vec<f64> {
    match model {
        Model::NelsonSiegel => x.to_vec(),
        Model::Svensson => {
            let (lo, hi) = if x[0] <= x[1] { (x[0], x[1]) } else { (x[1], x[0]) };
            if descending {
                vec![hi, lo]
            } else {
                vec![lo, hi]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_when_feasible() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let z = DVector::from_vec(vec![1.0, 3.0, 5.0]);
        let (b, s) = box_least_squares(&a, &z, &[-10.0, -10.0], &[10.0, 10.0]);
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
        assert!(s < 1e-20);
    }

    #[test]
    fn clamps_to_the_box_optimum() {
        // line z = 1 + 2x, slope capped at 1: best intercept is then mean(z - x) = 2
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let z = DVector::from_vec(vec![1.0, 3.0, 5.0]);
        let (b, s) = box_least_squares(&a, &z, &[-10.0, -10.0], &[10.0, 1.0]);
        assert_eq!(b[1], 1.0);
        assert!((b[0] - 2.0).abs() < 1e-12);
        // residuals (-1, 0, 1)
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_columns_do_not_break_the_solve() {
        let times = [0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0];
        let a = design(&times, &[1.5, 1.5]);
        let z = DVector::from_fn(times.len(), |i, _| 5.0 + times[i]);
        let (b, s) = box_least_squares(&a, &z, &[0.0, -25.0, -25.0, -25.0], &[25.0; 4]);
        assert!(b.iter().all(|v| v.is_finite()));
        assert!(s.is_finite());
    }

    #[test]
    fn orientation_orders_svensson_decays() {
        assert_eq!(oriented(Model::Svensson, &[3.0, 1.0], false), vec![1.0, 3.0]);
        assert_eq!(oriented(Model::Svensson, &[3.0, 1.0], true), vec![3.0, 1.0]);
        assert_eq!(oriented(Model::NelsonSiegel, &[2.0], true), vec![2.0]);
    }
}
