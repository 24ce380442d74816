//! Slow-path checks for the banded solver: dense Gaussian elimination with
//! partial pivoting, branch currents from Ohm's law, and conservation laws.

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, resolve_ordering, BandedSystem};
use crate::crossbar::{ideal_mvm, CrossbarConfig, InputBatch};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lu::{factor, solve_batch};

/// Largest system the dense oracle accepts by default (a 16x16 crossbar).
pub const DEFAULT_ORACLE_LIMIT: usize = 2 * 16 * 16;

/// Solves a dense square system by Gaussian elimination with partial pivoting.
pub fn dense_solve_matrix(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let k = a.len();
    if b.len() != k {
        return Err(Error::mismatch("rhs length", k, b.len()));
    }
    if let Some(row) = a.iter().find(|r| r.len() != k) {
        return Err(Error::mismatch("matrix row length", k, row.len()));
    }
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("nonempty range");
        if a[pivot_row][col] == 0.0 {
            return Err(Error::Singular { col });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let (head, tail) = a.split_at_mut(col + 1);
        let pivot = &head[col];
        for (offset, row) in tail.iter_mut().enumerate() {
            let f = row[col] / pivot[col];
            if f == 0.0 {
                continue;
            }
            for c in col..k {
                row[c] -= f * pivot[c];
            }
            b[col + 1 + offset] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for p in (0..k).rev() {
        let s: f64 = (p + 1..k).map(|q| a[p][q] * x[q]).sum();
        x[p] = (b[p] - s) / a[p][p];
    }
    Ok(x)
}

/// Dense solve of an assembled system, limited to `DEFAULT_ORACLE_LIMIT` unknowns.
pub fn dense_solve(system: &BandedSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    dense_solve_with_limit(system, rhs, DEFAULT_ORACLE_LIMIT)
}

pub fn dense_solve_with_limit(system: &BandedSystem, rhs: &[f64], limit: usize) -> Result<Vec<f64>> {
    if system.order() > limit {
        return Err(Error::OracleLimit {
            order: system.order(),
            limit,
        });
    }
    dense_solve_matrix(system.matrix.to_dense(), rhs.to_vec())
}

/// Everything derived from one solved sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Volts, indexed by the system's node map.
    pub node_voltages: Vec<f64>,
    /// Source voltages `V_i` of this sample.
    pub source_voltages: Vec<f64>,
    /// Current into ground through each bit-line termination, amperes.
    pub output_currents: Vec<f64>,
    /// Row-major `m x n`, word-line side to bit-line side.
    pub device_currents: Vec<f64>,
    /// Current delivered by each source into its word line.
    pub input_currents: Vec<f64>,
    /// `sum_i V_i I_in(i)`, watts.
    pub total_source_power: f64,
    /// `sum g dV^2` over every resistor, watts.
    pub dissipated_power: f64,
    /// `max |G V - rhs|`.
    pub kcl_residual_inf: f64,
}

impl SolveResult {
    /// `|sum I_in - sum I_out|` relative to the larger of the two sums.
    pub fn conservation_error(&self) -> f64 {
        let i_in: f64 = self.input_currents.iter().sum();
        let i_out: f64 = self.output_currents.iter().sum();
        relative_gap(i_in, i_out)
    }

    pub fn power_balance_error(&self) -> f64 {
        relative_gap(self.total_source_power, self.dissipated_power)
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Applies Ohm's law to every branch of the solved circuit.
pub fn post_process(
    config: &CrossbarConfig,
    system: &BandedSystem,
    voltages: &[f64],
    inputs: &[f64],
) -> Result<SolveResult> {
    let map = &system.map;
    let (m, n) = (config.rows, config.cols);
    if voltages.len() != map.order() {
        return Err(Error::mismatch("voltage vector length", map.order(), voltages.len()));
    }
    let rhs = system.rhs(inputs)?;
    let kcl_residual_inf = system
        .residual(voltages, &rhs)
        .iter()
        .fold(0.0_f64, |acc, r| acc.max(r.abs()));

    let v = |p: usize| voltages[p];
    let mut dissipated = 0.0;
    let mut burn = |g: f64, dv: f64| dissipated += g * dv * dv;

    let input_currents: Vec<f64> = (0..m)
        .map(|i| {
            let dv = inputs[i] - v(map.wl(i, 0));
            burn(config.g_wl, dv);
            dv * config.g_wl
        })
        .collect();
    let output_currents: Vec<f64> = (0..n)
        .map(|j| {
            let vb = v(map.bl(m - 1, j));
            burn(config.g_bl, vb);
            vb * config.g_bl
        })
        .collect();
    let mut device_currents = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let dv = v(map.wl(i, j)) - v(map.bl(i, j));
            let g = config.devices.get(i, j);
            burn(g, dv);
            device_currents.push(dv * g);
            if j + 1 < n {
                burn(config.g_wl, v(map.wl(i, j)) - v(map.wl(i, j + 1)));
            }
            if i + 1 < m {
                burn(config.g_bl, v(map.bl(i, j)) - v(map.bl(i + 1, j)));
            }
        }
    }
    let total_source_power = inputs.iter().zip(&input_currents).map(|(v, i)| v * i).sum();

    Ok(SolveResult {
        node_voltages: voltages.to_vec(),
        source_voltages: inputs.to_vec(),
        output_currents,
        device_currents,
        input_currents,
        total_source_power,
        dissipated_power: dissipated,
        kcl_residual_inf,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPoint {
    pub wire_resistance: f64,
    /// Largest `|I_out - I_ideal| / |I_ideal|` over samples and bit lines.
    pub max_rel_error: f64,
}

/// Solves the crossbar for each wire resistance and measures how far the
/// bit-line currents are from the parasitic-free product.
pub fn ideal_limit_check(
    config: &CrossbarConfig,
    inputs: &InputBatch,
    wire_r_sequence: &[f64],
) -> Result<Vec<LimitPoint>> {
    if wire_r_sequence.iter().any(|r| !(r.is_finite() && *r > 0.0)) || wire_r_sequence.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidParameter {
            field: "wire_r_sequence",
            reason: "must be strictly decreasing positive resistances".into(),
        });
    }
    let ideal = ideal_mvm(&config.devices, inputs)?;
    wire_r_sequence
        .iter()
        .map(|&r| {
            let config = config.clone().with_wire_resistance(r);
            let outputs = output_currents(&config, inputs)?;
            let mut worst = 0.0_f64;
            for (got, want) in outputs.iter().zip(&ideal) {
                let scale = want.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
                for (g, w) in got.iter().zip(want) {
                    let denom = if *w != 0.0 { w.abs() } else { scale };
                    if denom > 0.0 {
                        worst = worst.max((g - w).abs() / denom);
                    }
                }
            }
            Ok(LimitPoint {
                wire_resistance: r,
                max_rel_error: worst,
            })
        })
        .collect()
}

/// Bit-line output currents of every sample (banded path).
pub fn output_currents(config: &CrossbarConfig, inputs: &InputBatch) -> Result<Vec<Vec<f64>>> {
    let system = assemble(config, &resolve_ordering(config))?;
    let lu = factor(&system)?;
    let rhs = crate::assembly::build_rhs(&system, inputs)?;
    let (voltages, _) = solve_batch(&lu, &rhs, Execution::default())?;
    voltages
        .iter()
        .zip(inputs.samples())
        .map(|(v, s)| post_process(config, &system, v, s).map(|r| r.output_currents))
        .collect()
}
