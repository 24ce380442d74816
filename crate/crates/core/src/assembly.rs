//! Nodal-conductance system `G V = I` of a crossbar.
//!
//! Every device `(i, j)` owns two unknowns: the word-line node `WL(i,j)` and
//! the bit-line node `BL(i,j)`. The two are numbered next to each other and
//! cells are walked either row by row or column by column, which keeps every
//! coupling inside a narrow band around the diagonal:
//!
//! * row-major: `WL(i,j) = 2 (i n + j)`, bit-line neighbours are `2n` apart;
//! * col-major: `WL(i,j) = 2 (j m + i)`, word-line neighbours are `2m` apart.
//!
//! Word line `i` is driven at its left end by source `V_i` through one
//! word-line segment; bit line `j` is terminated to ground at its bottom end
//! through one bit-line segment. The source term moves to the right-hand side.

use crate::band::BandMatrix;
use crate::crossbar::{CrossbarConfig, InputBatch, NodeOrdering};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    WordLine,
    BitLine,
}

/// Bijection between `(side, i, j)` and the unknowns `0..2mn`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeIndexMap {
    rows: usize,
    cols: usize,
    ordering: NodeOrdering,
}

impl NodeIndexMap {
    /// `ordering` must be resolved; `Auto` is treated as row-major.
    pub fn new(rows: usize, cols: usize, ordering: NodeOrdering) -> Self {
        let ordering = match ordering {
            NodeOrdering::Auto => NodeOrdering::RowMajor,
            o => o,
        };
        Self { rows, cols, ordering }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Always `RowMajor` or `ColMajor`.
    pub fn ordering(&self) -> NodeOrdering {
        self.ordering
    }

    pub fn order(&self) -> usize {
        2 * self.rows * self.cols
    }

    #[inline]
    fn cell(&self, i: usize, j: usize) -> usize {
        match self.ordering {
            NodeOrdering::ColMajor => j * self.rows + i,
            _ => i * self.cols + j,
        }
    }

    #[inline]
    pub fn wl(&self, i: usize, j: usize) -> usize {
        2 * self.cell(i, j)
    }

    #[inline]
    pub fn bl(&self, i: usize, j: usize) -> usize {
        2 * self.cell(i, j) + 1
    }

    pub fn index(&self, side: Side, i: usize, j: usize) -> usize {
        match side {
            Side::WordLine => self.wl(i, j),
            Side::BitLine => self.bl(i, j),
        }
    }

    /// Inverse of [`index`](Self::index).
    pub fn node(&self, p: usize) -> (Side, usize, usize) {
        assert!(p < self.order());
        let side = if p.is_multiple_of(2) {
            Side::WordLine
        } else {
            Side::BitLine
        };
        let cell = p / 2;
        let (i, j) = match self.ordering {
            NodeOrdering::ColMajor => (cell % self.rows, cell / self.rows),
            _ => (cell / self.cols, cell % self.cols),
        };
        (side, i, j)
    }

    /// Netlist name of unknown `p`: `w_<i>_<j>` or `b_<i>_<j>`, 1-based.
    pub fn node_name(&self, p: usize) -> String {
        let (side, i, j) = self.node(p);
        let prefix = match side {
            Side::WordLine => 'w',
            Side::BitLine => 'b',
        };
        format!("{prefix}_{}_{}", i + 1, j + 1)
    }

    /// Largest `|p - q|` over all structural couplings.
    pub fn half_bandwidth(&self) -> usize {
        let (m, n) = (self.rows, self.cols);
        let (wl_step, bl_step) = match self.ordering {
            NodeOrdering::ColMajor => (2 * m, 2),
            _ => (2, 2 * n),
        };
        let wl = if n > 1 { wl_step } else { 0 };
        let bl = if m > 1 { bl_step } else { 0 };
        wl.max(bl).max(1)
    }
}

/// Picks the node numbering. `Auto` numbers along the longer dimension so
/// the band is `2 min(m, n)` wide; ties go to row-major.
pub fn resolve_ordering(config: &CrossbarConfig) -> NodeIndexMap {
    let ordering = match config.ordering {
        NodeOrdering::Auto if config.cols > config.rows => NodeOrdering::ColMajor,
        NodeOrdering::Auto => NodeOrdering::RowMajor,
        explicit => explicit,
    };
    NodeIndexMap::new(config.rows, config.cols, ordering)
}

/// Assembled nodal system of one crossbar.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedSystem {
    pub map: NodeIndexMap,
    pub matrix: BandMatrix,
    /// Right-hand side for unit source voltages; sample `b` uses `V_i * template`.
    pub rhs_template: Vec<f64>,
    /// Structural nonzeros of `matrix`.
    pub nnz: usize,
}

impl BandedSystem {
    pub fn order(&self) -> usize {
        self.matrix.order()
    }

    pub fn half_bandwidth(&self) -> usize {
        self.matrix.half_bandwidth()
    }

    /// Right-hand side for one sample of source voltages.
    pub fn rhs(&self, voltages: &[f64]) -> Result<Vec<f64>> {
        let map = &self.map;
        if voltages.len() != map.rows() {
            return Err(Error::mismatch("input width", map.rows(), voltages.len()));
        }
        let mut rhs = vec![0.0; self.order()];
        for (i, &v) in voltages.iter().enumerate() {
            let p = map.wl(i, 0);
            rhs[p] = v * self.rhs_template[p];
        }
        Ok(rhs)
    }

    /// `G V - rhs`.
    pub fn residual(&self, voltages: &[f64], rhs: &[f64]) -> Vec<f64> {
        let mut r = self.matrix.mul_vec(voltages);
        for (r, b) in r.iter_mut().zip(rhs) {
            *r -= b;
        }
        r
    }
}

/// Expected structural nonzero count, `8mn - 2m - 2n`.
pub fn expected_nnz(rows: usize, cols: usize) -> usize {
    8 * rows * cols - 2 * rows - 2 * cols
}

/// Builds the system row by row from the per-node KCL stencils.
pub fn assemble(config: &CrossbarConfig, map: &NodeIndexMap) -> Result<BandedSystem> {
    config.validate()?;
    check_map(config, map)?;
    let (m, n) = (config.rows, config.cols);
    let (g_wl, g_bl) = (config.g_wl, config.g_bl);
    let mut matrix = BandMatrix::zeros(map.order(), map.half_bandwidth());
    let mut rhs_template = vec![0.0; map.order()];
    let mut nnz = 0;
    let mut put = |p: usize, q: usize, v: f64| {
        matrix.set(p, q, v);
        nnz += 1;
    };

    for i in 0..m {
        for j in 0..n {
            let g = config.devices.get(i, j);
            let (w, b) = (map.wl(i, j), map.bl(i, j));

            // Word-line node: segment to the left (or the source), segment to the right.
            let wl_segments = if j + 1 < n { 2.0 } else { 1.0 };
            put(w, w, wl_segments * g_wl + g);
            if j > 0 {
                put(w, map.wl(i, j - 1), -g_wl);
            }
            if j + 1 < n {
                put(w, map.wl(i, j + 1), -g_wl);
            }
            put(w, b, -g);

            // Bit-line node: segment above (if any), segment below (or the termination).
            let bl_segments = if i > 0 { 2.0 } else { 1.0 };
            put(b, b, bl_segments * g_bl + g);
            if i > 0 {
                put(b, map.bl(i - 1, j), -g_bl);
            }
            if i + 1 < m {
                put(b, map.bl(i + 1, j), -g_bl);
            }
            put(b, w, -g);
        }
        rhs_template[map.wl(i, 0)] = g_wl;
    }

    Ok(BandedSystem {
        map: *map,
        matrix,
        rhs_template,
        nnz,
    })
}

/// One end of a two-terminal conductance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terminal {
    Node(usize),
    Ground,
    /// Ideal voltage source of word line `i`.
    Source(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element {
    pub a: Terminal,
    pub b: Terminal,
    pub conductance: f64,
}

/// Every resistor of the circuit: `3mn` in total.
///
/// Order: source segments, word-line segments, bit-line segments,
/// terminations, devices. Stamping wires before devices makes each diagonal
/// accumulate as `(wire sum) + G`, the same rounding as the stencil path.
pub fn elements(config: &CrossbarConfig, map: &NodeIndexMap) -> Vec<Element> {
    use Terminal::*;
    let (m, n) = (config.rows, config.cols);
    let mut out = Vec::with_capacity(3 * m * n);
    let mut push = |a, b, conductance| out.push(Element { a, b, conductance });
    for i in 0..m {
        push(Source(i), Node(map.wl(i, 0)), config.g_wl);
    }
    for i in 0..m {
        for j in 0..n - 1 {
            push(Node(map.wl(i, j)), Node(map.wl(i, j + 1)), config.g_wl);
        }
    }
    for i in 0..m - 1 {
        for j in 0..n {
            push(Node(map.bl(i, j)), Node(map.bl(i + 1, j)), config.g_bl);
        }
    }
    for j in 0..n {
        push(Node(map.bl(m - 1, j)), Ground, config.g_bl);
    }
    for i in 0..m {
        for j in 0..n {
            push(Node(map.wl(i, j)), Node(map.bl(i, j)), config.devices.get(i, j));
        }
    }
    out
}

/// Builds the same system by stamping each resistor of [`elements`].
pub fn stamp_assemble(config: &CrossbarConfig, map: &NodeIndexMap) -> Result<BandedSystem> {
    config.validate()?;
    check_map(config, map)?;
    let mut matrix = BandMatrix::zeros(map.order(), map.half_bandwidth());
    let mut rhs_template = vec![0.0; map.order()];

    for e in elements(config, map) {
        let g = e.conductance;
        match (e.a, e.b) {
            (Terminal::Node(p), Terminal::Node(q)) => {
                matrix.add(p, p, g);
                matrix.add(q, q, g);
                matrix.add(p, q, -g);
                matrix.add(q, p, -g);
            }
            (Terminal::Node(p), Terminal::Ground) | (Terminal::Ground, Terminal::Node(p)) => {
                matrix.add(p, p, g);
            }
            (Terminal::Node(p), Terminal::Source(_)) | (Terminal::Source(_), Terminal::Node(p)) => {
                matrix.add(p, p, g);
                rhs_template[p] += g;
            }
            (a, b) => unreachable!("element between {a:?} and {b:?}"),
        }
    }

    let nnz = matrix.count_nonzeros();
    Ok(BandedSystem {
        map: *map,
        matrix,
        rhs_template,
        nnz,
    })
}

/// One right-hand side per input sample, in batch order.
pub fn build_rhs(system: &BandedSystem, inputs: &InputBatch) -> Result<Vec<Vec<f64>>> {
    inputs.samples().map(|v| system.rhs(v)).collect()
}

fn check_map(config: &CrossbarConfig, map: &NodeIndexMap) -> Result<()> {
    if (map.rows(), map.cols()) != (config.rows, config.cols) {
        return Err(Error::mismatch(
            "node map shape",
            format!("{}x{}", config.rows, config.cols),
            format!("{}x{}", map.rows(), map.cols()),
        ));
    }
    Ok(())
}
