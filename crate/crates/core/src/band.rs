//! Dense-in-band storage for square matrices.

use std::fmt::Write as _;

/// Square matrix of order `order` whose entries satisfy `|p - q| <= half_bandwidth`.
///
/// Row `p` stores columns `p - b ..= p + b` contiguously, so both the
/// elimination update and the triangular solves walk memory linearly.
/// Slots that fall outside the matrix stay zero.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    order: usize,
    half_bandwidth: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(order: usize, half_bandwidth: usize) -> Self {
        let width = 2 * half_bandwidth + 1;
        Self {
            order,
            half_bandwidth,
            data: vec![0.0; order * width],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    #[inline]
    pub fn width(&self) -> usize {
        2 * self.half_bandwidth + 1
    }

    pub fn in_band(&self, p: usize, q: usize) -> bool {
        p < self.order && q < self.order && p.abs_diff(q) <= self.half_bandwidth
    }

    #[inline]
    fn offset(&self, p: usize, q: usize) -> usize {
        debug_assert!(self.in_band(p, q), "({p},{q}) outside band {}", self.half_bandwidth);
        p * self.width() + q + self.half_bandwidth - p
    }

    /// Entry `(p, q)`; zero outside the band.
    #[inline]
    pub fn get(&self, p: usize, q: usize) -> f64 {
        if self.in_band(p, q) {
            self.data[self.offset(p, q)]
        } else {
            0.0
        }
    }

    /// Panics if `(p, q)` lies outside the band.
    #[inline]
    pub fn set(&mut self, p: usize, q: usize, value: f64) {
        assert!(self.in_band(p, q), "({p},{q}) outside band {}", self.half_bandwidth);
        let o = self.offset(p, q);
        self.data[o] = value;
    }

    #[inline]
    pub fn add(&mut self, p: usize, q: usize, value: f64) {
        assert!(self.in_band(p, q), "({p},{q}) outside band {}", self.half_bandwidth);
        let o = self.offset(p, q);
        self.data[o] += value;
    }

    /// The stored row `p`, indexed by `q + b - p`.
    #[inline]
    pub fn row(&self, p: usize) -> &[f64] {
        let w = self.width();
        &self.data[p * w..(p + 1) * w]
    }

    /// Mutable access to rows `p` and `r > p` at once.
    #[inline]
    pub(crate) fn row_pair_mut(&mut self, p: usize, r: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(p < r);
        let w = self.width();
        let (head, tail) = self.data.split_at_mut(r * w);
        (&mut head[p * w..(p + 1) * w], &mut tail[..w])
    }

    /// Column range of row `p` that lies inside both the band and the matrix.
    #[inline]
    pub fn row_span(&self, p: usize) -> std::ops::RangeInclusive<usize> {
        p.saturating_sub(self.half_bandwidth)..=(p + self.half_bandwidth).min(self.order - 1)
    }

    pub fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.order).map(|p| self.data[self.offset(p, p)])
    }

    pub fn count_nonzeros(&self) -> usize {
        (0..self.order)
            .map(|p| self.row_span(p).filter(|&q| self.get(p, q) != 0.0).count())
            .sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.order);
        (0..self.order)
            .map(|p| {
                let b = self.half_bandwidth;
                let row = self.row(p);
                self.row_span(p).map(|q| row[q + b - p] * x[q]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.order)
            .map(|p| (0..self.order).map(|q| self.get(p, q)).collect())
            .collect()
    }

    /// Bit patterns of the stored band, for exact comparisons.
    pub fn bits(&self) -> Vec<u64> {
        self.data.iter().map(|x| x.to_bits()).collect()
    }

    /// `row,col,value` triplets of the nonzero entries.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,value\n");
        for p in 0..self.order {
            for q in self.row_span(p) {
                let v = self.get(p, q);
                if v != 0.0 {
                    writeln!(out, "{p},{q},{v:e}").unwrap();
                }
            }
        }
        out
    }
}
