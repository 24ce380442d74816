//! Assemble, factor, solve and post-process in one call.

use crate::assembly::{assemble, resolve_ordering, BandedSystem};
use crate::crossbar::{CrossbarConfig, InputBatch};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lu::{timed_run, TimingReport};
use crate::oracle::{post_process, SolveResult};

#[derive(Clone, Debug)]
pub struct Simulation {
    pub system: BandedSystem,
    /// One per input sample, in batch order.
    pub results: Vec<SolveResult>,
    pub timing: TimingReport,
}

impl Simulation {
    /// `B x n` bit-line currents.
    pub fn output_currents(&self) -> Vec<Vec<f64>> {
        self.results.iter().map(|r| r.output_currents.clone()).collect()
    }
}

pub fn simulate(config: &CrossbarConfig, inputs: &InputBatch, repeats: usize, exec: Execution) -> Result<Simulation> {
    if inputs.width() != config.rows {
        return Err(Error::mismatch("input width", config.rows, inputs.width()));
    }
    let system = assemble(config, &resolve_ordering(config))?;
    let (voltages, timing) = timed_run(&system, inputs, repeats, exec)?;
    let samples: Vec<&[f64]> = inputs.samples().collect();
    let results = exec
        .map_range(samples.len(), |b| {
            post_process(config, &system, &voltages[b], samples[b])
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(Simulation {
        system,
        results,
        timing,
    })
}
