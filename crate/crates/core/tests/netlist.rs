//! Netlist export: golden files, and a round trip through an independent
//! reader that rebuilds the circuit from the netlist text alone.

use std::collections::HashMap;

use crossbar_core::oracle::dense_solve_matrix;
use crossbar_core::spice::{compare_voltages, format_voltage_table, node_table, parse_voltage_table};
use crossbar_core::{
    emit_netlist, generate_random, simulate, CrossbarConfig, DeviceGrid, Execution, InputBatch, RandomSpec,
};

fn golden(name: &str) -> String {
    let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn graded_4x3() -> CrossbarConfig {
    let rows: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..3).map(|j| 1e-5 * (3 * i + j + 1) as f64).collect())
        .collect();
    CrossbarConfig::new(DeviceGrid::from_rows(&rows).unwrap(), 0.2, 0.2).unwrap()
}

#[test]
fn unit_netlist_matches_golden() {
    let config = CrossbarConfig::new(DeviceGrid::filled(1, 1, 1.0), 1.0, 1.0).unwrap();
    let net = emit_netlist(&config, &InputBatch::single(&[1.0]).unwrap()).unwrap();
    assert_eq!(net.text, golden("crossbar_1x1.sp"));
}

#[test]
fn four_by_three_netlists_match_golden() {
    let config = graded_4x3();
    let single = InputBatch::single(&[0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!(emit_netlist(&config, &single).unwrap().text, golden("crossbar_4x3.sp"));
    let batch = InputBatch::from_rows(&[
        vec![0.1, 0.2, 0.3, 0.4],
        vec![1.0, 0.0, 1.0, 0.0],
        vec![0.5, 0.5, 0.5, 0.5],
    ])
    .unwrap();
    let net = emit_netlist(&config, &batch).unwrap();
    assert_eq!(net.text, golden("crossbar_4x3_batch3.sp"));
    assert_eq!(net.resistors, 36);
    assert_eq!(net.sources, 4);
}

#[test]
fn emission_is_deterministic() {
    let (config, inputs) = generate_random(5, 6, 4, &RandomSpec::with_seed(77)).unwrap();
    assert_eq!(
        emit_netlist(&config, &inputs).unwrap(),
        emit_netlist(&config, &inputs).unwrap()
    );
}

/// Minimal DC reader for the dialect we emit: resistors, grounded DC
/// sources, `.PARAM` and one `.DATA` block.
struct ParsedNetlist {
    resistors: Vec<(String, String, f64)>,
    sources: Vec<(String, String)>,
    params: HashMap<String, f64>,
    data: Vec<HashMap<String, f64>>,
}

fn read_netlist(text: &str) -> ParsedNetlist {
    let mut parsed = ParsedNetlist {
        resistors: Vec::new(),
        sources: Vec::new(),
        params: HashMap::new(),
        data: Vec::new(),
    };
    let mut lines = text.lines().skip(1);
    while let Some(line) = lines.next() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            ".PARAM" => {
                let (k, v) = fields[1].split_once('=').unwrap();
                parsed.params.insert(k.to_string(), v.parse().unwrap());
            }
            ".DATA" => {
                let names: Vec<&str> = fields[2..].to_vec();
                for row in lines.by_ref() {
                    if row == ".ENDDATA" {
                        break;
                    }
                    let values = row.split_whitespace().map(|v| v.parse().unwrap());
                    parsed
                        .data
                        .push(names.iter().map(|n| n.to_string()).zip(values).collect());
                }
            }
            card if card.starts_with('V') => {
                assert_eq!((fields[2], fields[3]), ("0", "DC"));
                parsed.sources.push((fields[1].to_string(), fields[4].to_string()));
            }
            card if card.starts_with('R') => {
                parsed
                    .resistors
                    .push((fields[1].to_string(), fields[2].to_string(), fields[3].parse().unwrap()));
            }
            _ => {}
        }
    }
    parsed
}

/// Nodal analysis of the parsed circuit for one parameter assignment.
fn solve_netlist(net: &ParsedNetlist, params: &HashMap<String, f64>) -> HashMap<String, f64> {
    let fixed: HashMap<&str, f64> = net
        .sources
        .iter()
        .map(|(node, value)| {
            let v = value.parse().unwrap_or_else(|_| params[value.as_str()]);
            (node.as_str(), v)
        })
        .chain([("0", 0.0)])
        .collect();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (a, b, _) in &net.resistors {
        for node in [a, b] {
            if !fixed.contains_key(node.as_str()) {
                let next = index.len();
                index.entry(node.as_str()).or_insert(next);
            }
        }
    }
    let k = index.len();
    let mut g = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for (a, b, r) in &net.resistors {
        let c = 1.0 / r;
        match (index.get(a.as_str()), index.get(b.as_str())) {
            (Some(&p), Some(&q)) => {
                g[p][p] += c;
                g[q][q] += c;
                g[p][q] -= c;
                g[q][p] -= c;
            }
            (Some(&p), None) => {
                g[p][p] += c;
                rhs[p] += c * fixed[b.as_str()];
            }
            (None, Some(&q)) => {
                g[q][q] += c;
                rhs[q] += c * fixed[a.as_str()];
            }
            (None, None) => {}
        }
    }
    let x = dense_solve_matrix(g, rhs).unwrap();
    let mut out: HashMap<String, f64> = index.into_iter().map(|(n, p)| (n.to_string(), x[p])).collect();
    for (node, v) in fixed {
        if node != "0" {
            out.insert(node.to_string(), v);
        }
    }
    out
}

#[test]
fn netlist_describes_the_simulated_circuit() {
    // Resistances are printed to 9 significant digits, so agreement is limited to ~1e-8.
    for (m, n, batch, seed) in [(1, 1, 1, 0), (4, 3, 3, 1), (6, 5, 1, 2), (3, 7, 4, 3)] {
        let (config, inputs) = generate_random(m, n, batch, &RandomSpec::with_seed(seed)).unwrap();
        let net = read_netlist(&emit_netlist(&config, &inputs).unwrap().text);
        assert_eq!(net.resistors.len(), 3 * m * n);
        let sim = simulate(&config, &inputs, 1, Execution::default()).unwrap();
        let assignments = if batch == 1 {
            vec![net.params.clone()]
        } else {
            net.data.clone()
        };
        assert_eq!(assignments.len(), batch);
        for (b, params) in assignments.iter().enumerate() {
            let theirs = solve_netlist(&net, params);
            let ours = node_table(&sim.system.map, &sim.results[b]);
            assert_eq!(theirs.len(), ours.len());
            let table: Vec<(String, f64)> = theirs.into_iter().collect();
            let report = compare_voltages(&ours, &table, 1e-6).unwrap();
            assert_eq!(report.unmatched, 0);
            assert!(report.max_rel < 1e-7, "{m}x{n} sample {b}: {report:?}");
        }
    }
}

#[test]
fn dense_oracle_table_round_trip() {
    let (config, inputs) = generate_random(5, 4, 1, &RandomSpec::with_seed(9)).unwrap();
    let sim = simulate(&config, &inputs, 1, Execution::default()).unwrap();
    let system = &sim.system;
    let rhs = system.rhs(inputs.sample(0)).unwrap();
    let dense = crossbar_core::dense_solve(system, &rhs).unwrap();
    let mut oracle = sim.results[0].clone();
    oracle.node_voltages = dense;
    let exported = format_voltage_table(&node_table(&system.map, &oracle));
    let table = parse_voltage_table(&exported).unwrap();
    let report = compare_voltages(&node_table(&system.map, &sim.results[0]), &table, 1e-6).unwrap();
    assert!(report.within_tolerance);
    assert!(report.max_rel < 1e-10, "{report:?}");
    assert_eq!(report.matched, 5 + 40);
}

#[test]
fn injected_fault_is_located() {
    let (config, inputs) = generate_random(3, 3, 1, &RandomSpec::with_seed(4)).unwrap();
    let sim = simulate(&config, &inputs, 1, Execution::default()).unwrap();
    let ours = node_table(&sim.system.map, &sim.results[0]);
    let mut theirs = ours.clone();
    let victim = theirs.iter().position(|(n, _)| n == "b_2_3").unwrap();
    theirs[victim].1 += 1e-3;
    let report = compare_voltages(&ours, &theirs, 1e-6).unwrap();
    assert_eq!(report.worst_node.as_deref(), Some("b_2_3"));
    assert!(!report.within_tolerance);
}
