mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use crossbar_core::spice::{compare_voltages, node_table, parse_voltage_table, DEFAULT_COMPARE_TOLERANCE};
use crossbar_core::sweep::{bench_csv, bench_instance, partition_sweep, run_bench, sweep_csv, DEFAULT_BENCH_SEED};
use crossbar_core::{emit_netlist, simulate, Execution, NodeOrdering};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "crossbar", version, about = "Memristive crossbar circuit simulator")]
struct Cli {
    /// Solve batch members and tiles on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one crossbar for every input sample.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `run.out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Time decomposition and solves over crossbar sizes and batch sizes.
    Bench {
        /// Sizes as `MxN` (or `N` for square), comma separated.
        #[arg(long, value_delimiter = ',', required_unless_present = "dims")]
        sizes: Vec<String>,
        /// Every `m x n` pair drawn from these dimensions.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        batches: Vec<usize>,
        #[arg(long, default_value = "auto")]
        ordering: NodeOrdering,
        #[arg(long, default_value_t = config::default_repeats())]
        repeats: usize,
        #[arg(long, default_value_t = DEFAULT_BENCH_SEED)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Time a crossbar split into tiles of several sizes.
    PartitionSweep {
        /// Crossbar size `MxN`.
        #[arg(long)]
        size: String,
        /// Tile sizes as `PxQ` (or `P` for square), comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        tiles: Vec<String>,
        #[arg(long, default_value_t = 1)]
        batch: usize,
        #[arg(long, default_value = "auto")]
        ordering: NodeOrdering,
        #[arg(long, default_value_t = config::default_repeats())]
        repeats: usize,
        #[arg(long, default_value_t = DEFAULT_BENCH_SEED)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write the SPICE netlist of a configured crossbar.
    ExportSpice {
        #[arg(long)]
        config: PathBuf,
        /// Netlist file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare `voltages.csv` against an external `node_name,volts` table.
    Compare {
        voltages: PathBuf,
        external: PathBuf,
        /// 1-based row of `voltages.csv`.
        #[arg(long, default_value_t = 1)]
        sample: usize,
        #[arg(long, default_value_t = DEFAULT_COMPARE_TOLERANCE)]
        tolerance: f64,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failures that map to exit code 2.
#[derive(Debug)]
struct Numerical(String);

impl std::fmt::Display for Numerical {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Numerical {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match run(cli.command, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_numerical(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn is_numerical(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<Numerical>().is_some()
            || c.downcast_ref::<crossbar_core::Error>()
                .is_some_and(|e| e.is_numerical())
    })
}

fn run(command: Command, exec: Execution) -> Result<()> {
    match command {
        Command::Simulate {
            config,
            out,
            seed,
            repeats,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.override_seed(seed);
            }
            if let Some(r) = repeats {
                cfg.override_repeats(r)?;
            }
            let out = out.or_else(|| cfg.out_dir()).unwrap_or_else(|| PathBuf::from("."));
            cmd_simulate(&cfg, &out, exec)
        }
        Command::Bench {
            sizes,
            dims,
            batches,
            ordering,
            repeats,
            seed,
            out,
        } => {
            let mut list = sizes.iter().map(|s| parse_size(s)).collect::<Result<Vec<_>>>()?;
            for &m in &dims {
                for &n in &dims {
                    list.push((m, n));
                }
            }
            if repeats == 0 {
                bail!("--repeats must be at least 1");
            }
            let records = run_bench(&list, &batches, ordering, repeats, seed, exec)?;
            write(&out.join("bench.csv"), &bench_csv(&records))
        }
        Command::PartitionSweep {
            size,
            tiles,
            batch,
            ordering,
            repeats,
            seed,
            out,
        } => {
            let (m, n) = parse_size(&size)?;
            let tiles = tiles.iter().map(|s| parse_size(s)).collect::<Result<Vec<_>>>()?;
            if let Some(t) = tiles.iter().find(|(p, q)| *p > m || *q > n) {
                bail!("tile {}x{} exceeds crossbar {m}x{n}", t.0, t.1);
            }
            if repeats == 0 {
                bail!("--repeats must be at least 1");
            }
            let (config, inputs) = bench_instance(m, n, batch, ordering, seed)?;
            let rows = partition_sweep(&config, &inputs, &tiles, repeats, exec)?;
            if let Some(best) = rows.iter().find(|r| r.best) {
                println!("fastest tile: {}x{} ({:.6} s)", best.p, best.q, best.total_s);
            }
            write(&out.join("sweep.csv"), &sweep_csv(&rows))
        }
        Command::ExportSpice { config, out, seed } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.override_seed(seed);
            }
            let netlist = emit_netlist(&cfg.crossbar()?, &cfg.inputs()?)?;
            write(&out, &netlist.text)
        }
        Command::Compare {
            voltages,
            external,
            sample,
            tolerance,
            out,
        } => cmd_compare(&voltages, &external, sample, tolerance, out.as_deref()),
    }
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let parse = |x: &str| {
        x.trim()
            .parse::<usize>()
            .ok()
            .filter(|v| *v > 0)
            .with_context(|| format!("invalid size {s:?}"))
    };
    match s.split_once(['x', 'X']) {
        Some((m, n)) => Ok((parse(m)?, parse(n)?)),
        None => {
            let k = parse(s)?;
            Ok((k, k))
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_simulate(cfg: &RunConfig, out: &Path, exec: Execution) -> Result<()> {
    let config = cfg.crossbar()?;
    let inputs = cfg.inputs()?;
    let sim = simulate(&config, &inputs, cfg.run.repeats, exec)?;
    let map = &sim.system.map;

    let tables: Vec<_> = sim.results.iter().map(|r| node_table(map, r)).collect();
    let mut voltages = tables[0]
        .iter()
        .map(|(name, _)| name.as_str())
        .collect::<Vec<_>>()
        .join(",");
    voltages.push('\n');
    let mut currents = (1..=config.cols)
        .map(|j| format!("bl_{j}"))
        .collect::<Vec<_>>()
        .join(",");
    currents.push('\n');
    for (table, r) in tables.iter().zip(&sim.results) {
        push_row(&mut voltages, &table.iter().map(|(_, v)| *v).collect::<Vec<_>>());
        push_row(&mut currents, &r.output_currents);
    }
    let record = sim.timing.record(config.rows, config.cols, map.ordering());

    write(&out.join("voltages.csv"), &voltages)?;
    write(&out.join("currents.csv"), &currents)?;
    write(&out.join("timing.json"), &(record.json_line() + "\n"))
}

fn push_row(out: &mut String, values: &[f64]) {
    for (c, v) in values.iter().enumerate() {
        if c > 0 {
            out.push(',');
        }
        write!(out, "{v:e}").unwrap();
    }
    out.push('\n');
}

fn cmd_compare(voltages: &Path, external: &Path, sample: usize, tolerance: f64, out: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(voltages).with_context(|| format!("reading {}", voltages.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().context("voltages file is empty")?.split(',').collect();
    let row = lines
        .nth(sample.checked_sub(1).context("--sample is 1-based")?)
        .with_context(|| format!("voltages file has no sample {sample}"))?;
    let values = row
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad voltage {v:?}")))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != header.len() {
        bail!(
            "sample {sample} has {} values for {} columns",
            values.len(),
            header.len()
        );
    }
    let ours: Vec<(String, f64)> = header.iter().map(|h| h.trim().to_string()).zip(values).collect();

    let ext_text = fs::read_to_string(external).with_context(|| format!("reading {}", external.display()))?;
    let theirs = parse_voltage_table(&ext_text)?;
    let report = compare_voltages(&ours, &theirs, tolerance)?;
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(path) = out {
        write(path, &(json + "\n"))?;
    }
    if !report.within_tolerance {
        return Err(Numerical(format!(
            "max relative deviation {:e} exceeds tolerance {tolerance:e}",
            report.max_rel
        ))
        .into());
    }
    Ok(())
}
