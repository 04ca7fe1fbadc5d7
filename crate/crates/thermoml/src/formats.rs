//! Readers and writers for the on-disk formats.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thermoml_core::activeinf::{DiscreteMDP, GenerativeModel, RewardSign};
use thermoml_core::bm::BoltzmannMachine;
use thermoml_core::boost::WeightedDataset;
use thermoml_core::digest::DoubleDigestInstance;
use thermoml_core::ising::CouplingGraph;
use thermoml_core::DiscreteDistribution;

use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn bad(what: &str, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{what} line {line}: {msg}"))
}

fn num<T: std::str::FromStr>(what: &str, line: usize, tok: &str) -> Result<T, CliError> {
    tok.parse().map_err(|_| bad(what, line, format!("cannot parse {tok:?}")))
}

/// Edge list: a line holding `n_sites`, then `i j J` couplings and
/// `h i value` fields. `#` starts a comment.
pub fn parse_graph(text: &str) -> Result<CouplingGraph, CliError> {
    const WHAT: &str = "graph";
    let mut lines = content_lines(text);
    let (first, header) = lines.next().ok_or_else(|| CliError::Validation("graph file is empty".into()))?;
    let n: usize = num(WHAT, first, header)?;
    let mut edges = Vec::new();
    let mut fields = vec![0.0; n];
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["h", i, v] => {
                let i: usize = num(WHAT, ln, i)?;
                if i >= n {
                    return Err(bad(WHAT, ln, format!("site {i} outside 0..{n}")));
                }
                fields[i] = num(WHAT, ln, v)?;
            }
            [i, j, c] => edges.push((num(WHAT, ln, i)?, num(WHAT, ln, j)?, num(WHAT, ln, c)?)),
            _ => return Err(bad(WHAT, ln, "expected `i j J` or `h i value`")),
        }
    }
    Ok(CouplingGraph::new(n, edges, fields)?)
}

pub fn format_graph(graph: &CouplingGraph) -> String {
    let mut s = format!("{}\n", graph.n_sites());
    for (i, j, c) in graph.edges() {
        let _ = writeln!(s, "{i} {j} {c}");
    }
    for (i, h) in graph.fields().iter().enumerate() {
        if *h != 0.0 {
            let _ = writeln!(s, "h {i} {h}");
        }
    }
    s
}

/// Three lines `a: …`, `b: …`, `c: …` of fragment lengths.
pub fn parse_digest(text: &str) -> Result<DoubleDigestInstance, CliError> {
    const WHAT: &str = "digest";
    let mut parts: [Option<Vec<u64>>; 3] = [None, None, None];
    for (ln, line) in content_lines(text) {
        let (name, rest) = line.split_once(':').ok_or_else(|| bad(WHAT, ln, "expected `a:`, `b:` or `c:`"))?;
        let slot = match name.trim() {
            "a" => 0,
            "b" => 1,
            "c" => 2,
            other => return Err(bad(WHAT, ln, format!("unknown list {other:?}"))),
        };
        if parts[slot].is_some() {
            return Err(bad(WHAT, ln, format!("list {} given twice", name.trim())));
        }
        parts[slot] = Some(rest.split_whitespace().map(|t| num(WHAT, ln, t)).collect::<Result<_, _>>()?);
    }
    let [a, b, c] = parts;
    let missing = |n: &str| CliError::Validation(format!("digest file has no `{n}:` line"));
    Ok(DoubleDigestInstance::new(a.ok_or_else(|| missing("a"))?, b.ok_or_else(|| missing("b"))?, c.ok_or_else(|| missing("c"))?)?)
}

pub fn format_digest(instance: &DoubleDigestInstance) -> String {
    let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    format!("a: {}\nb: {}\nc: {}\n", join(instance.a()), join(instance.b()), join(instance.c()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineFile {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
}

pub fn parse_machine(text: &str) -> Result<BoltzmannMachine, CliError> {
    let m: MachineFile = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("machine file: {e}")))?;
    Ok(BoltzmannMachine::new(m.a, m.b, m.w)?)
}

pub fn machine_file(machine: &BoltzmannMachine) -> MachineFile {
    MachineFile {
        a: machine.visible_bias().to_vec(),
        b: machine.hidden_bias().to_vec(),
        w: machine.weights(),
    }
}

/// One training vector per line, written as `0`/`1` characters.
pub fn parse_training_data(text: &str) -> Result<Vec<Vec<u8>>, CliError> {
    let mut out: Vec<Vec<u8>> = Vec::new();
    for (ln, line) in content_lines(text) {
        let v: Vec<u8> = line
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(bad("training data", ln, format!("unexpected character {other:?}"))),
            })
            .collect::<Result<_, _>>()?;
        if let Some(first) = out.first() {
            if first.len() != v.len() {
                return Err(bad("training data", ln, format!("{} units, earlier lines have {}", v.len(), first.len())));
            }
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Validation("training data is empty".into()));
    }
    Ok(out)
}

/// CSV rows `x,y` with `y` in {0, 1}; a non-numeric first row is a header.
pub fn parse_dataset(text: &str) -> Result<WeightedDataset, CliError> {
    const WHAT: &str = "dataset";
    let mut items = Vec::new();
    for (k, (ln, line)) in content_lines(text).enumerate() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(bad(WHAT, ln, "expected two columns x,y"));
        }
        if k == 0 && cols[0].parse::<f64>().is_err() {
            continue;
        }
        let x: f64 = num(WHAT, ln, cols[0])?;
        let y: u8 = num(WHAT, ln, cols[1])?;
        items.push((x, y));
    }
    if items.is_empty() {
        return Err(CliError::Validation("dataset has no rows".into()));
    }
    Ok(WeightedDataset::uniform(items)?)
}

/// Comma-separated values on one or more lines, or a one-column CSV with
/// an optional header.
pub fn parse_coefficients(text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for (k, (ln, line)) in content_lines(text).enumerate() {
        for tok in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ if k == 0 && out.is_empty() && !line.contains(',') => break,
                _ => return Err(bad("coefficients", ln, format!("cannot parse {tok:?}"))),
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Validation("coefficient file has no values".into()));
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
}

/// `transition[s][a][s′]` and `reward[s][a]`.
pub fn parse_mdp(text: &str) -> Result<DiscreteMDP, CliError> {
    let f: MdpFile = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("MDP file: {e}")))?;
    let mdp = DiscreteMDP::new(f.transition, f.reward, f.gamma)?;
    if mdp.n_states() != f.n_states || mdp.n_actions() != f.n_actions {
        return Err(CliError::Validation(format!(
            "MDP declares {}x{} but tables are {}x{}",
            f.n_states,
            f.n_actions,
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    Ok(mdp)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub prior: Vec<f64>,
    pub likelihood: Vec<Vec<f64>>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    #[serde(default)]
    pub reward_sign: Option<String>,
}

/// `likelihood[s][o]`, `transition[a][s][s′]`, `reward[s][o]`, and an
/// optional `reward_sign` of `"as_given"` or `"negated"`.
pub fn parse_model(text: &str) -> Result<GenerativeModel, CliError> {
    let f: ModelFile = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("model file: {e}")))?;
    let sign = match f.reward_sign.as_deref() {
        None | Some("as_given") => RewardSign::AsGiven,
        Some("negated") => RewardSign::Negated,
        Some(other) => return Err(CliError::Validation(format!("model file: unknown reward_sign {other:?}"))),
    };
    let prior = DiscreteDistribution::new(f.prior)?;
    Ok(GenerativeModel::new(prior, f.likelihood, f.transition, f.reward, sign)?)
}

/// Header plus rows, fields joined by commas.
pub fn csv<R: AsRef<[String]>>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.as_ref().join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_round_trip() {
        let g = parse_graph("3\n0 1 1.0\n1 2 -0.5 # comment\nh 2 0.25\n").unwrap();
        assert_eq!(g.n_sites(), 3);
        assert_eq!(g.fields(), &[0.0, 0.0, 0.25]);
        assert_eq!(parse_graph(&format_graph(&g)).unwrap(), g);
        assert!(parse_graph("2\n0 0 1\n").is_err());
        assert!(parse_graph("2\nh 5 1\n").is_err());
    }

    #[test]
    fn digest_file() {
        let d = parse_digest("a: 3 5\nb: 2 6\nc: 2 1 5\n").unwrap();
        assert_eq!(d.total_length(), 8);
        assert_eq!(parse_digest(&format_digest(&d)).unwrap(), d);
        assert!(parse_digest("a: 3 5\nb: 2 6\nc: 2 1 4\n").is_err());
        assert!(parse_digest("a: 3 5\nb: 2 6\n").is_err());
    }

    #[test]
    fn coefficient_forms() {
        assert_eq!(parse_coefficients("1, 2.5,-3\n").unwrap(), vec![1.0, 2.5, -3.0]);
        assert_eq!(parse_coefficients("value\n1\n2\n").unwrap(), vec![1.0, 2.0]);
        assert!(parse_coefficients("1,x\n").is_err());
    }

    #[test]
    fn dataset_and_training_data() {
        let d = parse_dataset("x,y\n0.1,0\n0.9,1\n").unwrap();
        assert_eq!(d.items(), &[(0.1, 0), (0.9, 1)]);
        assert!(parse_dataset("0.1,2\n").is_err());
        assert_eq!(parse_training_data("01\n10\n").unwrap(), vec![vec![0, 1], vec![1, 0]]);
        assert!(parse_training_data("01\n1\n").is_err());
        assert!(parse_training_data("0a\n").is_err());
    }

    #[test]
    fn json_inputs() {
        let m = parse_machine(r#"{"a":[0.5],"b":[-0.25],"W":[[1.0]]}"#).unwrap();
        assert_eq!(m.weight(0, 0), 1.0);
        let mdp = parse_mdp(r#"{"n_states":1,"n_actions":1,"gamma":0.5,"transition":[[[1.0]]],"reward":[[1.0]]}"#).unwrap();
        assert_eq!(mdp.gamma(), 0.5);
        assert!(parse_mdp(r#"{"n_states":2,"n_actions":1,"gamma":0.5,"transition":[[[1.0]]],"reward":[[1.0]]}"#).is_err());
        let model = parse_model(
            r#"{"prior":[1.0],"likelihood":[[1.0]],"transition":[[[1.0]]],"reward":[[2.0]],"reward_sign":"negated"}"#,
        )
        .unwrap();
        assert_eq!(model.step_cost(0, 0), -2.0);
    }
}
