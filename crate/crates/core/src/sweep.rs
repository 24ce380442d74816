//! Size/batch benchmark and partition sweeps over random instances.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::crossbar::{generate_random, CrossbarConfig, InputBatch, NodeOrdering, RandomSpec};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lu::TimingRecord;
use crate::partition::{plan, simulate_partitioned};
use crate::simulate::simulate;

pub const DEFAULT_BENCH_SEED: u64 = 0x5eed_c0de;

/// Seed for one benchmark row, so each row can be reproduced on its own.
pub fn derive_seed(base: u64, rows: usize, cols: usize, batch: usize) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for x in [rows as u64, cols as u64, batch as u64] {
        h = (h ^ x).wrapping_mul(0x0100_0000_01b3).rotate_left(29);
    }
    h
}

pub fn bench_instance(
    rows: usize,
    cols: usize,
    batch: usize,
    ordering: NodeOrdering,
    base_seed: u64,
) -> Result<(CrossbarConfig, InputBatch)> {
    let spec = RandomSpec::with_seed(derive_seed(base_seed, rows, cols, batch));
    let (config, inputs) = generate_random(rows, cols, batch, &spec)?;
    Ok((config.with_ordering(ordering), inputs))
}

/// Mean decompose/solve times for one `(size, batch)` cell.
pub fn bench_row(
    rows: usize,
    cols: usize,
    batch: usize,
    ordering: NodeOrdering,
    repeats: usize,
    base_seed: u64,
    exec: Execution,
) -> Result<TimingRecord> {
    let (config, inputs) = bench_instance(rows, cols, batch, ordering, base_seed)?;
    let sim = simulate(&config, &inputs, repeats, exec)?;
    Ok(sim.timing.record(rows, cols, sim.system.map.ordering()))
}

pub fn run_bench(
    sizes: &[(usize, usize)],
    batches: &[usize],
    ordering: NodeOrdering,
    repeats: usize,
    base_seed: u64,
    exec: Execution,
) -> Result<Vec<TimingRecord>> {
    if sizes.is_empty() || batches.is_empty() {
        return Err(Error::InvalidParameter {
            field: "sizes",
            reason: "need at least one size and one batch size".into(),
        });
    }
    let mut rows = Vec::with_capacity(sizes.len() * batches.len());
    for &(m, n) in sizes {
        for &b in batches {
            rows.push(bench_row(m, n, b, ordering, repeats, base_seed, exec)?);
        }
    }
    Ok(rows)
}

pub fn bench_csv(records: &[TimingRecord]) -> String {
    let mut out = format!("{}\n", TimingRecord::CSV_HEADER);
    for r in records {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// The whole crossbar solved directly.
    Baseline,
    Tiled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: SweepKind,
    pub p: usize,
    pub q: usize,
    pub tiles: usize,
    pub total_decompose_s: f64,
    pub total_solve_s: f64,
    pub total_s: f64,
    /// Fastest tiled row; ties go to the smaller tile.
    pub best: bool,
}

/// Times the unpartitioned crossbar and every tile size. Tile times are
/// summed over tiles, so the comparison does not depend on thread count.
pub fn partition_sweep(
    config: &CrossbarConfig,
    inputs: &InputBatch,
    tile_sizes: &[(usize, usize)],
    repeats: usize,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    let base = simulate(config, inputs, repeats, exec)?;
    let mut rows = vec![SweepRow {
        kind: SweepKind::Baseline,
        p: config.rows,
        q: config.cols,
        tiles: 1,
        total_decompose_s: base.timing.decompose_seconds,
        total_solve_s: base.timing.solve_seconds_total,
        total_s: base.timing.total_seconds(),
        best: false,
    }];
    for &(p, q) in tile_sizes {
        let tiling = plan(config, p, q)?;
        let run = simulate_partitioned(config, inputs, &tiling, repeats, exec)?;
        rows.push(SweepRow {
            kind: SweepKind::Tiled,
            p,
            q,
            tiles: run.timing.tiles,
            total_decompose_s: run.timing.total_decompose_s,
            total_solve_s: run.timing.total_solve_s,
            total_s: run.timing.total_s(),
            best: false,
        });
    }
    let best = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.kind == SweepKind::Tiled)
        .min_by(|(_, a), (_, b)| a.total_s.total_cmp(&b.total_s).then((a.p * a.q).cmp(&(b.p * b.q))))
        .map(|(i, _)| i);
    if let Some(i) = best {
        rows[i].best = true;
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("kind,p,q,tiles,total_decompose_s,total_solve_s,total_s,best\n");
    for r in rows {
        let kind = match r.kind {
            SweepKind::Baseline => "baseline",
            SweepKind::Tiled => "tiled",
        };
        writeln!(
            out,
            "{kind},{},{},{},{:e},{:e},{:e},{}",
            r.p,
            r.q,
            r.tiles,
            r.total_decompose_s,
            r.total_solve_s,
            r.total_s,
            u8::from(r.best)
        )
        .unwrap();
    }
    out
}
