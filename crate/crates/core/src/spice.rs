//! SPICE netlist export and comparison against externally computed node
//! voltages.
//!
//! Node names: `in_<i>` for source terminals, `w_<i>_<j>` and `b_<i>_<j>` for
//! the word-line and bit-line side of device `(i, j)`, all 1-based.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assembly::NodeIndexMap;
use crate::crossbar::{CrossbarConfig, InputBatch};
use crate::error::{Error, Result};
use crate::oracle::SolveResult;

/// Relative tolerance used by [`compare_voltages`] callers by default.
pub const DEFAULT_COMPARE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Netlist {
    pub text: String,
    pub resistors: usize,
    pub sources: usize,
}

/// Lowercase scientific notation with 9 significant digits, e.g. `5.00000000e+00`.
pub fn format_number(x: f64) -> String {
    let s = format!("{x:.8e}");
    let (mantissa, exp) = s.split_once('e').expect("LowerExp output has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn emit_netlist(config: &CrossbarConfig, inputs: &InputBatch) -> Result<Netlist> {
    config.validate()?;
    let (m, n) = (config.rows, config.cols);
    if inputs.width() != m {
        return Err(Error::mismatch("input width", m, inputs.width()));
    }
    let batch = inputs.len();
    let r_wl = format_number(1.0 / config.g_wl);
    let r_bl = format_number(1.0 / config.g_bl);
    let mut t = String::new();
    let mut resistors = 0;

    writeln!(t, "* memristive crossbar {m}x{n}, batch {batch}").unwrap();
    if batch > 1 {
        for (i, v) in inputs.sample(0).iter().enumerate() {
            writeln!(t, ".PARAM vin_{}={}", i + 1, format_number(*v)).unwrap();
        }
    }
    for (i, v) in inputs.sample(0).iter().enumerate() {
        let value = if batch > 1 {
            format!("vin_{}", i + 1)
        } else {
            format_number(*v)
        };
        writeln!(t, "V{0} in_{0} 0 DC {value}", i + 1).unwrap();
    }
    let mut resistor = |card: String| {
        t.push_str(&card);
        t.push('\n');
        resistors += 1;
    };
    for i in 1..=m {
        resistor(format!("RWIN_{i} in_{i} w_{i}_1 {r_wl}"));
    }
    for i in 1..=m {
        for j in 1..n {
            resistor(format!("RW_{i}_{j} w_{i}_{j} w_{i}_{} {r_wl}", j + 1));
        }
    }
    for i in 1..=m {
        for j in 1..=n {
            let r = format_number(1.0 / config.devices.get(i - 1, j - 1));
            resistor(format!("RD_{i}_{j} w_{i}_{j} b_{i}_{j} {r}"));
        }
    }
    for i in 1..m {
        for j in 1..=n {
            resistor(format!("RB_{i}_{j} b_{i}_{j} b_{}_{j} {r_bl}", i + 1));
        }
    }
    for j in 1..=n {
        resistor(format!("RBT_{j} b_{m}_{j} 0 {r_bl}"));
    }

    t.push_str(".option post=2 POST_VERSION=2001\n");
    if batch == 1 {
        t.push_str(".op\n");
    } else {
        t.push_str(".DATA inputs");
        for i in 1..=m {
            write!(t, " vin_{i}").unwrap();
        }
        t.push('\n');
        for sample in inputs.samples() {
            let row: Vec<String> = sample.iter().map(|v| format_number(*v)).collect();
            writeln!(t, "{}", row.join(" ")).unwrap();
        }
        t.push_str(".ENDDATA\n.DC DATA=inputs\n");
    }
    t.push_str(".end\n");

    Ok(Netlist {
        text: t,
        resistors,
        sources: m,
    })
}

/// `(node_name, volts)` for every named node of a solved sample, sources first.
pub fn node_table(map: &NodeIndexMap, result: &SolveResult) -> Vec<(String, f64)> {
    let sources = result
        .source_voltages
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("in_{}", i + 1), *v));
    let nodes = result
        .node_voltages
        .iter()
        .enumerate()
        .map(|(p, v)| (map.node_name(p), *v));
    sources.chain(nodes).collect()
}

/// Parses `node_name,volts` rows. A leading header row is skipped.
pub fn parse_voltage_table(text: &str) -> Result<Vec<(String, f64)>> {
    let mut table = Vec::new();
    for (r, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (name, value) = line.split_once(',').ok_or_else(|| Error::Parse {
            row: r + 1,
            col: 1,
            reason: "expected node_name,volts".into(),
        })?;
        let value = value.trim();
        match value.parse::<f64>() {
            Ok(v) => table.push((name.trim().to_string(), v)),
            Err(_) if table.is_empty() && r == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    row: r + 1,
                    col: 2,
                    reason: format!("{value:?}: {e}"),
                })
            }
        }
    }
    Ok(table)
}

pub fn format_voltage_table(table: &[(String, f64)]) -> String {
    let mut out = String::from("node_name,volts\n");
    for (name, v) in table {
        writeln!(out, "{name},{v:e}").unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub max_abs: f64,
    pub max_rel: f64,
    pub worst_node: Option<String>,
    pub matched: usize,
    /// Our nodes missing from the external table.
    pub unmatched: usize,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

/// Compares our node voltages with an external table. Relative deviation is
/// taken against the larger magnitude of the two values.
pub fn compare_voltages(ours: &[(String, f64)], external: &[(String, f64)], tolerance: f64) -> Result<DeviationReport> {
    if external.is_empty() {
        return Err(Error::EmptyTable);
    }
    let index: HashMap<&str, f64> = ours.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let mut report = DeviationReport {
        max_abs: 0.0,
        max_rel: 0.0,
        worst_node: None,
        matched: 0,
        unmatched: 0,
        tolerance,
        within_tolerance: true,
    };
    let mut seen = std::collections::HashSet::new();
    for (name, theirs) in external {
        let mine = *index
            .get(name.as_str())
            .ok_or_else(|| Error::UnknownNode(name.clone()))?;
        if !seen.insert(name.as_str()) {
            continue;
        }
        report.matched += 1;
        let abs = (mine - theirs).abs();
        let scale = mine.abs().max(theirs.abs());
        let rel = if scale > 0.0 { abs / scale } else { 0.0 };
        if report.worst_node.is_none() || abs > report.max_abs {
            report.max_abs = abs;
            report.worst_node = Some(name.clone());
        }
        report.max_rel = report.max_rel.max(rel);
    }
    report.unmatched = ours.len() - report.matched;
    report.within_tolerance = report.max_rel <= tolerance;
    Ok(report)
}
