//! Circuit-level simulation of memristive crossbar arrays.
//!
//! A crossbar of `m` word lines and `n` bit lines, with a resistive wire
//! segment between neighbouring devices, is reduced to a symmetric banded
//! nodal system of order `2mn`. The system is factored once by banded LU
//! and the factors are reused for every input vector of a batch.
//!
//! ```
//! use crossbar_core::{generate_random, simulate, Execution, RandomSpec};
//!
//! let (config, inputs) = generate_random(8, 8, 4, &RandomSpec::with_seed(1)).unwrap();
//! let sim = simulate(&config, &inputs, 1, Execution::default()).unwrap();
//! assert_eq!(sim.results.len(), 4);
//! assert_eq!(sim.results[0].output_currents.len(), 8);
//! ```

pub mod assembly;
pub mod band;
pub mod crossbar;
pub mod error;
pub mod exec;
pub mod lu;
pub mod oracle;
pub mod partition;
pub mod simulate;
pub mod spice;
pub mod sweep;

pub use assembly::{assemble, build_rhs, resolve_ordering, stamp_assemble, BandedSystem, NodeIndexMap, Side};
pub use band::BandMatrix;
pub use crossbar::{generate_random, ideal_mvm, CrossbarConfig, DeviceGrid, InputBatch, NodeOrdering, RandomSpec};
pub use error::{Error, Result};
pub use exec::Execution;
pub use lu::{factor, solve_batch, timed_run, BandedLU, TimingRecord, TimingReport};
pub use oracle::{dense_solve, ideal_limit_check, post_process, SolveResult};
pub use partition::{plan, simulate_partitioned, PartitionPlan, PartitionedRun};
pub use simulate::{simulate, Simulation};
pub use spice::{compare_voltages, emit_netlist, DeviationReport, Netlist};
