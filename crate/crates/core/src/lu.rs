//! Banded LU factorization without pivoting, and batched triangular solves.
//!
//! The nodal matrix is an irreducibly diagonally dominant M-matrix, so
//! Gaussian elimination in natural order is stable and all fill-in stays
//! inside the band. Factoring costs about `k b^2` multiply-adds; each solve
//! costs about `2 k b`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{build_rhs, BandedSystem};
use crate::band::BandMatrix;
use crate::crossbar::{InputBatch, NodeOrdering};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Pivots smaller than this multiple of the largest diagonal abort the factorization.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// `G = L U` in band form. The strictly lower part of `factors` holds the
/// multipliers of unit-lower `L`; the diagonal and upper part hold `U`.
#[derive(Clone, Debug)]
pub struct BandedLU {
    factors: BandMatrix,
    pivot_min: f64,
}

impl BandedLU {
    pub fn order(&self) -> usize {
        self.factors.order()
    }

    pub fn half_bandwidth(&self) -> usize {
        self.factors.half_bandwidth()
    }

    /// Smallest `|pivot|` encountered.
    pub fn pivot_min(&self) -> f64 {
        self.pivot_min
    }

    /// Entry `(p, q)` of `L`, including the implicit unit diagonal.
    pub fn l(&self, p: usize, q: usize) -> f64 {
        match p.cmp(&q) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Greater => self.factors.get(p, q),
        }
    }

    pub fn u(&self, p: usize, q: usize) -> f64 {
        if p <= q {
            self.factors.get(p, q)
        } else {
            0.0
        }
    }

    /// Solves `G x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.order() {
            return Err(Error::mismatch("rhs length", self.order(), rhs.len()));
        }
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let k = self.order();
        let b = self.half_bandwidth();
        let a = &self.factors;

        // L y = rhs
        for p in 1..k {
            let first = p.saturating_sub(b);
            let row = &a.row(p)[first + b - p..b];
            x[p] -= dot(row, &x[first..p]);
        }
        // U x = y
        for p in (0..k).rev() {
            let last = (p + b).min(k - 1);
            let row = a.row(p);
            x[p] = (x[p] - dot(&row[b + 1..=last + b - p], &x[p + 1..=last])) / row[b];
        }
    }
}

/// Four independent partial sums; a single running sum is latency bound.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let (a4, b4) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = a4.remainder().iter().zip(b4.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in a4.zip(b4) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Factors `system.matrix` in place of a copy of its band.
pub fn factor(system: &BandedSystem) -> Result<BandedLU> {
    factor_matrix(&system.matrix)
}

pub fn factor_matrix(matrix: &BandMatrix) -> Result<BandedLU> {
    let mut a = matrix.clone();
    let k = a.order();
    let b = a.half_bandwidth();
    let max_diag = a.diagonal().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    let threshold = PIVOT_THRESHOLD * max_diag;
    let mut pivot_min = f64::INFINITY;

    for p in 0..k {
        let pivot = a.row(p)[b];
        if !(pivot.abs() >= threshold && pivot.abs() > 0.0) {
            return Err(Error::PivotBreakdown {
                row: p,
                pivot,
                threshold,
            });
        }
        pivot_min = pivot_min.min(pivot.abs());
        let last = (p + b).min(k - 1);
        for r in p + 1..=last {
            let (prow, rrow) = a.row_pair_mut(p, r);
            // Column c sits at c + b - p in row p and c + b - r in row r.
            let shift = r - p;
            let l = rrow[b - shift] / pivot;
            if l == 0.0 {
                continue;
            }
            rrow[b - shift] = l;
            let span = last - p;
            let src = &prow[b + 1..=b + span];
            let dst = &mut rrow[b + 1 - shift..=b + span - shift];
            for (d, s) in dst.iter_mut().zip(src) {
                *d -= l * s;
            }
        }
    }

    Ok(BandedLU { factors: a, pivot_min })
}

/// Multiply-add count of factoring an order-`k` band of half-width `b`.
pub fn factor_flops(order: usize, half_bandwidth: usize) -> u64 {
    (0..order)
        .map(|p| {
            let below = half_bandwidth.min(order - 1 - p) as u64;
            below * (below + 1)
        })
        .sum()
}

/// Wall-clock split between decomposition and substitution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub decompose_seconds: f64,
    pub solve_seconds_total: f64,
    pub solve_seconds_per_sample: f64,
    pub batch_size: usize,
    pub repeats: usize,
    /// Times are means over `repeats` runs.
    pub mean_over_repeats: bool,
}

impl TimingReport {
    pub fn new(decompose: f64, solve_total: f64, batch_size: usize, repeats: usize) -> Self {
        Self {
            decompose_seconds: decompose,
            solve_seconds_total: solve_total,
            solve_seconds_per_sample: solve_total / batch_size.max(1) as f64,
            batch_size,
            repeats,
            mean_over_repeats: repeats > 1,
        }
    }

    pub fn total_seconds(&self) -> f64 {
        self.decompose_seconds + self.solve_seconds_total
    }

    /// Decompose plus solve time amortized over the batch.
    pub fn wall_seconds_per_sample(&self) -> f64 {
        self.total_seconds() / self.batch_size.max(1) as f64
    }

    pub fn decompose_fraction(&self) -> f64 {
        let total = self.total_seconds();
        if total > 0.0 {
            self.decompose_seconds / total
        } else {
            0.0
        }
    }

    pub fn record(&self, rows: usize, cols: usize, ordering: NodeOrdering) -> TimingRecord {
        TimingRecord {
            m: rows,
            n: cols,
            batch: self.batch_size,
            ordering,
            decompose_s: self.decompose_seconds,
            solve_s: self.solve_seconds_total,
            per_sample_s: self.solve_seconds_per_sample,
            repeats: self.repeats,
        }
    }
}

/// Serialized form of a [`TimingReport`], one JSON object or CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub m: usize,
    pub n: usize,
    pub batch: usize,
    pub ordering: NodeOrdering,
    pub decompose_s: f64,
    pub solve_s: f64,
    pub per_sample_s: f64,
    pub repeats: usize,
}

impl TimingRecord {
    pub const CSV_HEADER: &'static str = "m,n,batch,ordering,decompose_s,solve_s,per_sample_s,repeats";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:e},{:e},{}",
            self.m, self.n, self.batch, self.ordering, self.decompose_s, self.solve_s, self.per_sample_s, self.repeats
        )
    }

    pub fn json_line(&self) -> String {
        serde_json::to_string(self).expect("timing record serializes")
    }
}

/// Solves every right-hand side with the same factors. Members are
/// independent; output order follows input order.
pub fn solve_batch(lu: &BandedLU, rhs_set: &[Vec<f64>], exec: Execution) -> Result<(Vec<Vec<f64>>, TimingReport)> {
    if let Some(bad) = rhs_set.iter().find(|r| r.len() != lu.order()) {
        return Err(Error::mismatch("rhs length", lu.order(), bad.len()));
    }
    let start = Instant::now();
    let solutions = exec.map(rhs_set, |rhs| {
        let mut x = rhs.clone();
        lu.solve_in_place(&mut x);
        x
    });
    let elapsed = start.elapsed().as_secs_f64();
    Ok((solutions, TimingReport::new(0.0, elapsed, rhs_set.len(), 1)))
}

/// Factor and solve the whole batch `repeats` times; times are means.
pub fn timed_run(
    system: &BandedSystem,
    inputs: &InputBatch,
    repeats: usize,
    exec: Execution,
) -> Result<(Vec<Vec<f64>>, TimingReport)> {
    if repeats == 0 {
        return Err(Error::InvalidParameter {
            field: "repeats",
            reason: "must be at least 1".into(),
        });
    }
    let rhs = build_rhs(system, inputs)?;
    let mut decompose = 0.0;
    let mut solve = 0.0;
    let mut voltages = Vec::new();
    for _ in 0..repeats {
        let start = Instant::now();
        let lu = factor(system)?;
        decompose += start.elapsed().as_secs_f64();
        let (v, t) = solve_batch(&lu, &rhs, exec)?;
        solve += t.solve_seconds_total;
        voltages = v;
    }
    let r = repeats as f64;
    Ok((
        voltages,
        TimingReport::new(decompose / r, solve / r, inputs.len(), repeats),
    ))
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, resolve_ordering};
    use crate::crossbar::{generate_random, CrossbarConfig, DeviceGrid, RandomSpec};
    use proptest::prelude::*;

    fn band(rows: &[Vec<f64>], b: usize) -> BandMatrix {
        let mut a = BandMatrix::zeros(rows.len(), b);
        for (p, row) in rows.iter().enumerate() {
            for (q, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    a.set(p, q, v);
                }
            }
        }
        a
    }

    fn system(m: usize, n: usize, seed: u64) -> (BandedSystem, InputBatch) {
        let (config, inputs) = generate_random(m, n, 4, &RandomSpec::with_seed(seed)).unwrap();
        (assemble(&config, &resolve_ordering(&config)).unwrap(), inputs)
    }

    /// Textbook dense elimination without pivoting, used only to check the factors.
    fn dense_lu(mut a: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let k = a.len();
        let mut l = vec![vec![0.0; k]; k];
        for p in 0..k {
            l[p][p] = 1.0;
            for r in p + 1..k {
                let f = a[r][p] / a[p][p];
                l[r][p] = f;
                for c in p..k {
                    a[r][c] -= f * a[p][c];
                }
            }
        }
        (l, a)
    }

    #[test]
    fn two_by_two_factors() {
        let lu = factor_matrix(&band(&[vec![2.0, -1.0], vec![-1.0, 2.0]], 1)).unwrap();
        assert_eq!([lu.l(0, 0), lu.l(0, 1), lu.l(1, 0), lu.l(1, 1)], [1.0, 0.0, -0.5, 1.0]);
        assert_eq!([lu.u(0, 0), lu.u(0, 1), lu.u(1, 0), lu.u(1, 1)], [2.0, -1.0, 0.0, 1.5]);
        let x = lu.solve(&[1.0, 0.0]).unwrap();
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-16 && (x[1] - 1.0 / 3.0).abs() < 1e-16);
        let x2 = lu.solve(&[2.0, 0.0]).unwrap();
        assert_eq!(x2, vec![2.0 * x[0], 2.0 * x[1]]);
        assert!(lu.solve(&[1.0]).is_err());
    }

    #[test]
    fn diagonal_system_is_already_triangular() {
        let lu = factor_matrix(&band(
            &[vec![3.0, 0.0, 0.0], vec![0.0, 4.0, 0.0], vec![0.0, 0.0, 5.0]],
            1,
        ))
        .unwrap();
        for p in 0..3 {
            for q in 0..3 {
                assert_eq!(lu.l(p, q), f64::from(u8::from(p == q)));
            }
        }
        assert_eq!([lu.u(0, 0), lu.u(1, 1), lu.u(2, 2), lu.u(0, 1)], [3.0, 4.0, 5.0, 0.0]);
        assert_eq!(lu.pivot_min(), 3.0);
    }

    #[test]
    fn factors_match_dense_elimination_and_reconstruct() {
        let (sys, _) = system(4, 4, 21);
        let lu = factor(&sys).unwrap();
        let dense = sys.matrix.to_dense();
        let (l_ref, u_ref) = dense_lu(dense.clone());
        let k = sys.order();
        let scale = sys.matrix.diagonal().fold(0.0, f64::max);
        for p in 0..k {
            for q in 0..k {
                assert!((lu.l(p, q) - l_ref[p][q]).abs() <= 1e-12, "L({p},{q})");
                assert!((lu.u(p, q) - u_ref[p][q]).abs() <= 1e-12 * scale, "U({p},{q})");
                let prod: f64 = (0..k).map(|s| lu.l(p, s) * lu.u(s, q)).sum();
                assert!((prod - dense[p][q]).abs() <= 1e-12 * scale, "LU({p},{q})");
                if p.abs_diff(q) > sys.half_bandwidth() {
                    assert_eq!(lu.l(p, q), 0.0);
                    assert_eq!(lu.u(p, q), 0.0);
                }
            }
        }
    }

    #[test]
    fn pivot_breakdown_is_reported() {
        let err = factor_matrix(&band(&[vec![1.0, 1.0], vec![1.0, 1.0]], 1)).unwrap_err();
        assert!(matches!(err, Error::PivotBreakdown { row: 1, .. }), "{err}");
        assert!(err.is_numerical());
    }

    #[test]
    fn residual_bound_on_crossbar() {
        let (sys, inputs) = system(6, 9, 2);
        let lu = factor(&sys).unwrap();
        for rhs in build_rhs(&sys, &inputs).unwrap() {
            let x = lu.solve(&rhs).unwrap();
            let res = sys.residual(&x, &rhs).iter().fold(0.0_f64, |a, r| a.max(r.abs()));
            let scale = rhs.iter().fold(1.0_f64, |a, r| a.max(r.abs()));
            assert!(res <= 1e-10 * scale, "{res}");
        }
    }

    #[test]
    fn batch_matches_single_solves() {
        let (sys, inputs) = system(5, 3, 8);
        let lu = factor(&sys).unwrap();
        let rhs = build_rhs(&sys, &inputs).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let (batch, timing) = solve_batch(&lu, &rhs, exec).unwrap();
            assert_eq!(timing.batch_size, 4);
            assert_eq!(timing.decompose_seconds, 0.0);
            for (x, r) in batch.iter().zip(&rhs) {
                assert_eq!(x, &lu.solve(r).unwrap());
            }
        }
        let doubled: Vec<f64> = rhs[0].iter().map(|v| 2.0 * v).collect();
        let (pair, _) = solve_batch(&lu, &[rhs[0].clone(), doubled], Execution::default()).unwrap();
        for (a, b) in pair[0].iter().zip(&pair[1]) {
            assert_eq!(2.0 * a, *b);
        }
        let err = solve_batch(&lu, &[rhs[0].clone(), vec![0.0; 3]], Execution::default());
        assert!(err.is_err());
    }

    #[test]
    fn timed_run_values_do_not_depend_on_repeats() {
        let (sys, inputs) = system(4, 5, 3);
        let (once, t1) = timed_run(&sys, &inputs, 1, Execution::default()).unwrap();
        let (ten, t10) = timed_run(&sys, &inputs, 10, Execution::default()).unwrap();
        assert_eq!(once, ten);
        assert_eq!((t1.repeats, t10.repeats), (1, 10));
        assert!(!t1.mean_over_repeats && t10.mean_over_repeats);
        assert!(t10.decompose_seconds >= 0.0 && t10.solve_seconds_total >= 0.0);
        assert_eq!(t10.solve_seconds_per_sample, t10.solve_seconds_total / 4.0);
        assert!(timed_run(&sys, &inputs, 0, Execution::default()).is_err());
    }

    #[test]
    fn factor_reuse_equals_refactoring() {
        let (sys, inputs) = system(3, 7, 4);
        let lu = factor(&sys).unwrap();
        for rhs in build_rhs(&sys, &inputs).unwrap() {
            assert_eq!(lu.solve(&rhs).unwrap(), factor(&sys).unwrap().solve(&rhs).unwrap());
        }
    }

    #[test]
    fn flop_count() {
        // k = 3, b = 1: rows 0 and 1 each eliminate one row updating one column... plus the multiplier.
        assert_eq!(factor_flops(3, 1), 2 + 2);
        assert_eq!(factor_flops(2, 5), 2);
        assert_eq!(
            factor_flops(1000, 10),
            990 * 110 + (0..10).map(|x: u64| x * (x + 1)).sum::<u64>()
        );
    }

    #[test]
    fn timing_record_formats() {
        let t = TimingReport::new(0.5, 0.25, 5, 10);
        let rec = t.record(4, 3, NodeOrdering::RowMajor);
        assert_eq!(rec.csv_row(), "4,3,5,row-major,5e-1,2.5e-1,5e-2,10");
        let json: serde_json::Value = serde_json::from_str(&rec.json_line()).unwrap();
        assert_eq!(json["ordering"], "row-major");
        assert_eq!(json["per_sample_s"], 0.05);
        assert!((t.decompose_fraction() - 2.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn factorization_never_breaks_down(m in 1usize..=12, n in 1usize..=12, seed in any::<u64>(), log_r in -9.0f64..2.0) {
            let grid = RandomSpec::with_seed(seed).random_devices(m, n).unwrap();
            let config = CrossbarConfig::new(grid, 1.0, 1.0).unwrap().with_wire_resistance(10f64.powf(log_r));
            let sys = assemble(&config, &resolve_ordering(&config)).unwrap();
            let lu = factor(&sys).unwrap();
            prop_assert!(lu.pivot_min() > 0.0);
        }
    }

    #[test]
    fn wide_device_range_factors() {
        let grid = DeviceGrid::from_rows(&[vec![1e-9, 1e3], vec![1e3, 1e-9]]).unwrap();
        let config = CrossbarConfig::new(grid, 1e-3, 1e-3).unwrap();
        factor(&assemble(&config, &resolve_ordering(&config)).unwrap()).unwrap();
    }
}
