//! Crossbar instances: geometry, device conductances, wire parasitics and
//! input voltage batches.
//!
//! Conductances are the canonical unit everywhere in this crate. Indices in
//! error messages are 1-based (word line `i`, bit line `j`); all in-memory
//! indexing is 0-based.

use std::fmt::Write as _;
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wire segment resistance used when none is given, in ohms.
pub const DEFAULT_WIRE_RESISTANCE: f64 = 5.0;

/// Node numbering used when assembling the nodal system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeOrdering {
    /// Row-major when `cols <= rows`, column-major otherwise.
    #[default]
    Auto,
    RowMajor,
    ColMajor,
}

impl NodeOrdering {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeOrdering::Auto => "auto",
            NodeOrdering::RowMajor => "row-major",
            NodeOrdering::ColMajor => "col-major",
        }
    }
}

impl std::str::FromStr for NodeOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(NodeOrdering::Auto),
            "row-major" => Ok(NodeOrdering::RowMajor),
            "col-major" => Ok(NodeOrdering::ColMajor),
            other => Err(Error::InvalidParameter {
                field: "ordering",
                reason: format!("expected auto, row-major or col-major, got {other:?}"),
            }),
        }
    }
}

impl std::fmt::Display for NodeOrdering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Row-major `rows x cols` matrix of device conductances in siemens.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceGrid {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DeviceGrid {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::mismatch("device grid length", rows * cols, values.len()));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn filled(rows: usize, cols: usize, g: f64) -> Self {
        Self {
            rows,
            cols,
            values: vec![g; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::mismatch(
                    "device grid row width",
                    cols,
                    format!("{} (row {})", row.len(), r + 1),
                ));
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Copies the sub-grid `rows x cols`.
    pub fn slice(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for i in rows.clone() {
            values.extend_from_slice(&self.row(i)[cols.clone()]);
        }
        Self {
            rows: rows.len(),
            cols: cols.len(),
            values,
        }
    }

    fn check(&self) -> Result<()> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let g = self.get(i, j);
                if !g.is_finite() {
                    return Err(Error::NonFinite {
                        field: "devices",
                        row: i + 1,
                        col: j + 1,
                    });
                }
                if g <= 0.0 {
                    return Err(Error::NonpositiveConductance {
                        row: i + 1,
                        col: j + 1,
                        value: g,
                    });
                }
            }
        }
        Ok(())
    }
}

/// A crossbar of `rows` word lines and `cols` bit lines.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossbarConfig {
    pub rows: usize,
    pub cols: usize,
    /// Word-line segment conductance, siemens.
    pub g_wl: f64,
    /// Bit-line segment conductance, siemens.
    pub g_bl: f64,
    pub devices: DeviceGrid,
    pub ordering: NodeOrdering,
}

impl CrossbarConfig {
    /// Builds a validated config whose geometry is taken from `devices`.
    pub fn new(devices: DeviceGrid, g_wl: f64, g_bl: f64) -> Result<Self> {
        let config = Self {
            rows: devices.rows(),
            cols: devices.cols(),
            g_wl,
            g_bl,
            devices,
            ordering: NodeOrdering::Auto,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_ordering(mut self, ordering: NodeOrdering) -> Self {
        self.ordering = ordering;
        self
    }

    /// Replaces both wire conductances with `1 / r` for a segment resistance `r` in ohms.
    pub fn with_wire_resistance(mut self, r: f64) -> Self {
        self.g_wl = 1.0 / r;
        self.g_bl = 1.0 / r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::InvalidParameter {
                field: "rows",
                reason: "must be at least 1".into(),
            });
        }
        if self.cols == 0 {
            return Err(Error::InvalidParameter {
                field: "cols",
                reason: "must be at least 1".into(),
            });
        }
        for (field, g) in [("g_wl", self.g_wl), ("g_bl", self.g_bl)] {
            if !g.is_finite() || g <= 0.0 {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("wire conductance must be positive and finite, got {g}"),
                });
            }
        }
        if self.devices.rows() != self.rows || self.devices.cols() != self.cols {
            return Err(Error::mismatch(
                "devices shape",
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", self.devices.rows(), self.devices.cols()),
            ));
        }
        self.devices.check()
    }
}

/// `B x m` source voltages, one row per input sample.
#[derive(Clone, Debug, PartialEq)]
pub struct InputBatch {
    width: usize,
    values: Vec<f64>,
}

impl InputBatch {
    pub fn new(width: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || values.is_empty() || !values.len().is_multiple_of(width) {
            return Err(Error::mismatch(
                "input batch length",
                format!("a nonzero multiple of {width}"),
                values.len(),
            ));
        }
        let batch = Self { width, values };
        batch.check()?;
        Ok(batch)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if let Some((r, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(Error::mismatch(
                "input row width",
                width,
                format!("{} (row {})", row.len(), r + 1),
            ));
        }
        Self::new(width, rows.concat())
    }

    pub fn single(voltages: &[f64]) -> Result<Self> {
        Self::new(voltages.len(), voltages.to_vec())
    }

    /// Number of samples `B`.
    pub fn len(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of sources per sample `m`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn sample(&self, b: usize) -> &[f64] {
        &self.values[b * self.width..(b + 1) * self.width]
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.width)
    }

    /// Restricts every sample to the sources in `rows`.
    pub fn select(&self, rows: std::ops::Range<usize>) -> Self {
        let values = self.samples().flat_map(|s| s[rows.clone()].iter().copied()).collect();
        Self {
            width: rows.len(),
            values,
        }
    }

    pub fn first(&self, count: usize) -> Self {
        Self {
            width: self.width,
            values: self.values[..count.min(self.len()) * self.width].to_vec(),
        }
    }

    fn check(&self) -> Result<()> {
        for (b, sample) in self.samples().enumerate() {
            if let Some(i) = sample.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    field: "inputs",
                    row: b + 1,
                    col: i + 1,
                });
            }
        }
        Ok(())
    }
}

/// Parameters for random instance generation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomSpec {
    pub seed: u64,
    pub g_min: f64,
    pub g_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            g_min: 1e-6,
            g_max: 1e-4,
            v_min: 0.0,
            v_max: 1.0,
        }
    }
}

impl RandomSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_min.is_finite() && self.g_max.is_finite() && self.g_min > 0.0) {
            return Err(Error::InvalidParameter {
                field: "g_min",
                reason: format!("must be positive and finite, got {}", self.g_min),
            });
        }
        if self.g_min > self.g_max {
            return Err(Error::InvalidParameter {
                field: "g_max",
                reason: format!("must be >= g_min ({} < {})", self.g_max, self.g_min),
            });
        }
        if !(self.v_min.is_finite() && self.v_max.is_finite()) || self.v_min > self.v_max {
            return Err(Error::InvalidParameter {
                field: "v_max",
                reason: format!("need finite v_min <= v_max, got [{}, {}]", self.v_min, self.v_max),
            });
        }
        Ok(())
    }

    // Devices and inputs draw from separate ChaCha streams so that changing
    // the batch size never perturbs the device grid.
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    pub fn random_devices(&self, rows: usize, cols: usize) -> Result<DeviceGrid> {
        self.validate()?;
        let dist = Uniform::new_inclusive(self.g_min, self.g_max);
        let mut rng = self.rng(0);
        DeviceGrid::new(rows, cols, dist.sample_iter(&mut rng).take(rows * cols).collect())
    }

    pub fn random_inputs(&self, width: usize, batch: usize) -> Result<InputBatch> {
        self.validate()?;
        if batch == 0 {
            return Err(Error::InvalidParameter {
                field: "batch",
                reason: "must be at least 1".into(),
            });
        }
        let dist = Uniform::new_inclusive(self.v_min, self.v_max);
        let mut rng = self.rng(1);
        InputBatch::new(width, dist.sample_iter(&mut rng).take(width * batch).collect())
    }
}

/// Random crossbar with default 5 ohm wire segments plus a batch of inputs.
pub fn generate_random(
    rows: usize,
    cols: usize,
    batch: usize,
    spec: &RandomSpec,
) -> Result<(CrossbarConfig, InputBatch)> {
    let devices = spec.random_devices(rows, cols)?;
    let g_wire = 1.0 / DEFAULT_WIRE_RESISTANCE;
    let config = CrossbarConfig::new(devices, g_wire, g_wire)?;
    let inputs = spec.random_inputs(rows, batch)?;
    Ok((config, inputs))
}

/// Parasitic-free bit-line currents: `out[b][j] = sum_i inputs[b][i] * G[i][j]`.
pub fn ideal_mvm(devices: &DeviceGrid, inputs: &InputBatch) -> Result<Vec<Vec<f64>>> {
    if inputs.width() != devices.rows() {
        return Err(Error::mismatch("input width", devices.rows(), inputs.width()));
    }
    let out = inputs
        .samples()
        .map(|v| {
            let mut acc = vec![0.0; devices.cols()];
            for (i, &vi) in v.iter().enumerate() {
                for (a, &g) in acc.iter_mut().zip(devices.row(i)) {
                    *a += vi * g;
                }
            }
            acc
        })
        .collect();
    Ok(out)
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (r, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(c, field)| {
                let field = field.trim();
                field.parse::<f64>().map_err(|e| Error::Parse {
                    row: r + 1,
                    col: c + 1,
                    reason: format!("{field:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn format_matrix<'a>(rows: impl Iterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    for row in rows {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            // `{:e}` prints the shortest representation that round-trips.
            write!(out, "{v:e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_devices_csv(text: &str) -> Result<DeviceGrid> {
    let rows = parse_matrix(text)?;
    for (r, row) in rows.iter().enumerate() {
        if let Some(c) = row.iter().position(|v| *v < 0.0) {
            return Err(Error::NegativeValue {
                row: r + 1,
                col: c + 1,
                value: row[c],
            });
        }
    }
    DeviceGrid::from_rows(&rows)
}

pub fn format_devices_csv(grid: &DeviceGrid) -> String {
    format_matrix((0..grid.rows()).map(|i| grid.row(i)))
}

pub fn load_devices_csv(path: impl AsRef<Path>) -> Result<DeviceGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_devices_csv(&text)
}

pub fn save_devices_csv(grid: &DeviceGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_devices_csv(grid)).map_err(|e| Error::io(path, e))
}

pub fn parse_inputs_csv(text: &str) -> Result<InputBatch> {
    InputBatch::from_rows(&parse_matrix(text)?)
}

pub fn format_inputs_csv(inputs: &InputBatch) -> String {
    format_matrix(inputs.samples())
}

pub fn load_inputs_csv(path: impl AsRef<Path>) -> Result<InputBatch> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_inputs_csv(&text)
}

pub fn save_inputs_csv(inputs: &InputBatch, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_inputs_csv(inputs)).map_err(|e| Error::io(path, e))
}
