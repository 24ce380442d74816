//! Tiling a crossbar into electrically independent sub-crossbars.
//!
//! Each tile gets its own word-line drivers (the global `V_i` of its rows)
//! and its own bit-line terminations. The global current of bit line `j` is
//! the sum of the tile currents of column `j`, reduced in increasing row
//! order so the result does not depend on which tile finished first.

use std::ops::Range;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::crossbar::{CrossbarConfig, InputBatch};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lu::TimingReport;
use crate::oracle::SolveResult;
use crate::simulate::simulate;

#[derive(Clone, Debug, PartialEq)]
pub struct Tile {
    pub index: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub config: CrossbarConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionPlan {
    pub tile_rows: usize,
    pub tile_cols: usize,
    /// Row-major over the tile grid. Edge tiles keep their smaller size.
    pub tiles: Vec<Tile>,
}

pub fn plan(config: &CrossbarConfig, tile_rows: usize, tile_cols: usize) -> Result<PartitionPlan> {
    config.validate()?;
    for (field, size, limit) in [
        ("tile_rows", tile_rows, config.rows),
        ("tile_cols", tile_cols, config.cols),
    ] {
        if size == 0 || size > limit {
            return Err(Error::InvalidParameter {
                field,
                reason: format!("must be in 1..={limit}, got {size}"),
            });
        }
    }
    let mut tiles = Vec::new();
    for r0 in (0..config.rows).step_by(tile_rows) {
        for c0 in (0..config.cols).step_by(tile_cols) {
            let rows = r0..(r0 + tile_rows).min(config.rows);
            let cols = c0..(c0 + tile_cols).min(config.cols);
            let tile_config = CrossbarConfig {
                rows: rows.len(),
                cols: cols.len(),
                g_wl: config.g_wl,
                g_bl: config.g_bl,
                devices: config.devices.slice(rows.clone(), cols.clone()),
                ordering: config.ordering,
            };
            tiles.push(Tile {
                index: tiles.len(),
                rows,
                cols,
                config: tile_config,
            });
        }
    }
    Ok(PartitionPlan {
        tile_rows,
        tile_cols,
        tiles,
    })
}

#[derive(Clone, Debug)]
pub struct TileRun {
    pub tile: usize,
    pub results: Vec<SolveResult>,
    pub timing: TimingReport,
}

/// Sums of per-tile times, plus the wall time of the whole run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PartitionTiming {
    pub tiles: usize,
    pub total_decompose_s: f64,
    pub total_solve_s: f64,
    pub wall_s: f64,
}

impl PartitionTiming {
    pub fn total_s(&self) -> f64 {
        self.total_decompose_s + self.total_solve_s
    }
}

#[derive(Clone, Debug)]
pub struct PartitionedRun {
    /// In plan order.
    pub tiles: Vec<TileRun>,
    /// `B x n` global bit-line currents.
    pub outputs: Vec<Vec<f64>>,
    pub timing: PartitionTiming,
}

pub fn simulate_partitioned(
    config: &CrossbarConfig,
    inputs: &InputBatch,
    plan: &PartitionPlan,
    repeats: usize,
    exec: Execution,
) -> Result<PartitionedRun> {
    if inputs.width() != config.rows {
        return Err(Error::mismatch("input width", config.rows, inputs.width()));
    }
    let start = Instant::now();
    let runs = exec.map(&plan.tiles, |tile| {
        let tile_inputs = inputs.select(tile.rows.clone());
        simulate(&tile.config, &tile_inputs, repeats, Execution::Sequential).map(|sim| TileRun {
            tile: tile.index,
            results: sim.results,
            timing: sim.timing,
        })
    });
    let wall_s = start.elapsed().as_secs_f64();
    let runs = runs
        .into_iter()
        .zip(&plan.tiles)
        .map(|(run, tile)| {
            run.map_err(|e| Error::Tile {
                tile: tile.index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..plan.tiles.len()).collect();
    order.sort_by_key(|&t| (plan.tiles[t].rows.start, plan.tiles[t].cols.start));
    let mut outputs = vec![vec![0.0; config.cols]; inputs.len()];
    for &t in &order {
        let tile = &plan.tiles[t];
        for (out, result) in outputs.iter_mut().zip(&runs[t].results) {
            for (slot, &current) in out[tile.cols.clone()].iter_mut().zip(&result.output_currents) {
                if tile.rows.start == 0 {
                    *slot = current;
                } else {
                    *slot += current;
                }
            }
        }
    }

    let timing = PartitionTiming {
        tiles: runs.len(),
        total_decompose_s: runs.iter().map(|r| r.timing.decompose_seconds).sum(),
        total_solve_s: runs.iter().map(|r| r.timing.solve_seconds_total).sum(),
        wall_s,
    };
    Ok(PartitionedRun {
        tiles: runs,
        outputs,
        timing,
    })
}
