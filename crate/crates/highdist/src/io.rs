//! Instance files: JSON (an object or an array of objects) or plain `key: value` text
//! with blank lines between instances.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
pub struct InstanceRecord {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub probs: Option<Vec<f64>>,
    #[serde(default)]
    pub values: Option<Vec<usize>>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub a: Option<usize>,
    /// Truth table as a string of `0`/`1`, index 0 first.
    #[serde(default)]
    pub table: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub id: String,
    pub probs: Vec<f64>,
    pub a: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Array {
    pub id: String,
    pub values: Vec<usize>,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Function {
    pub id: String,
    pub table: Vec<bool>,
}

pub fn read_records(path: &Path) -> Result<Vec<InstanceRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    parse_records(&text)
}

pub fn parse_records(text: &str) -> Result<Vec<InstanceRecord>, CliError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    if trimmed.starts_with('{') {
        return Ok(vec![serde_json::from_str(trimmed)?]);
    }
    let mut out = Vec::new();
    let mut cur = InstanceRecord::default();
    let mut touched = false;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if touched {
                out.push(std::mem::take(&mut cur));
                touched = false;
            }
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .or_else(|| line.split_once('='))
            .ok_or_else(|| CliError::Input(format!("line {}: expected `key: value`", no + 1)))?;
        let value = value.trim();
        let bad = |what: &str| CliError::Input(format!("line {}: cannot parse {what} from `{value}`", no + 1));
        match key.trim() {
            "id" => cur.id = Some(value.to_string()),
            "probs" => cur.probs = Some(list(value).map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("probabilities"))?),
            "values" => cur.values = Some(list(value).map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("values"))?),
            "m" => cur.m = Some(value.parse().map_err(|_| bad("m"))?),
            "a" => cur.a = Some(value.parse().map_err(|_| bad("a"))?),
            "table" => cur.table = Some(value.split_whitespace().collect()),
            other => return Err(CliError::Input(format!("line {}: unknown key `{other}`", no + 1))),
        }
        touched = true;
    }
    if touched {
        out.push(cur);
    }
    Ok(out)
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty())
}

fn record_id(r: &InstanceRecord, i: usize) -> String {
    r.id.clone().unwrap_or_else(|| format!("file-{i}"))
}

pub fn distributions(records: &[InstanceRecord]) -> Result<Vec<Distribution>, CliError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if let Some(p) = &r.probs {
                Ok(Distribution { id: record_id(r, i), probs: p.clone(), a: r.a.unwrap_or(0) })
            } else if let Some(v) = &r.values {
                let m = r.m.ok_or_else(|| CliError::Input(format!("instance {i}: `values` needs `m`")))?;
                let n = v.len() as f64;
                let mut probs = vec![0.0; m];
                for &x in v {
                    *probs.get_mut(x).ok_or_else(|| CliError::Input(format!("instance {i}: value {x} not below m = {m}")))? += 1.0 / n;
                }
                Ok(Distribution { id: record_id(r, i), probs, a: r.a.unwrap_or(0) })
            } else {
                Err(CliError::Input(format!("instance {i}: needs `probs` or `values`")))
            }
        })
        .collect()
}

pub fn arrays(records: &[InstanceRecord]) -> Result<Vec<Array>, CliError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let values = r.values.clone().ok_or_else(|| CliError::Input(format!("instance {i}: needs `values`")))?;
            let m = r.m.unwrap_or_else(|| values.iter().max().map_or(1, |v| (v + 1).next_power_of_two()));
            Ok(Array { id: record_id(r, i), values, m })
        })
        .collect()
}

pub fn functions(records: &[InstanceRecord]) -> Result<Vec<Function>, CliError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let t = r.table.as_deref().ok_or_else(|| CliError::Input(format!("instance {i}: needs `table`")))?;
            Ok(Function { id: record_id(r, i), table: parse_table(t)? })
        })
        .collect()
}

/// `and2`, `xor2`, `or2`, `const0`, or a `0`/`1` truth table.
pub fn named_function(name: &str) -> Result<Vec<bool>, CliError> {
    match name {
        "and2" => Ok(vec![false, false, false, true]),
        "or2" => Ok(vec![false, true, true, true]),
        "xor2" => Ok(vec![false, true, true, false]),
        "const0" => Ok(vec![false; 4]),
        other => parse_table(other),
    }
}

fn parse_table(t: &str) -> Result<Vec<bool>, CliError> {
    t.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CliError::Input(format!("truth table `{t}` must contain only 0 and 1"))),
        })
        .collect()
}

pub fn random_distribution(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>().powi(3)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

pub fn random_array(rng: &mut impl Rng, n: usize, m: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..m)).collect()
}

pub fn random_table(rng: &mut impl Rng, bits: usize) -> Vec<bool> {
    (0..1usize << bits).map(|_| rng.gen()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_format_blocks() {
        let recs = parse_records("# two instances\nid: a\nprobs: 0.5, 0.5\n\nvalues: 1 2 2 3\nm = 4\n").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].probs.as_deref(), Some(&[0.5, 0.5][..]));
        let d = distributions(&recs).unwrap();
        assert_eq!(d[1].probs, vec![0.0, 0.25, 0.5, 0.25]);
        assert_eq!(d[1].id, "file-1");
    }

    #[test]
    fn json_format() {
        let recs = parse_records(r#"[{"values": [0, 0, 1, 3], "m": 4}, {"table": "0001"}]"#).unwrap();
        assert_eq!(arrays(&recs[..1]).unwrap()[0].m, 4);
        assert_eq!(functions(&recs[1..]).unwrap()[0].table, vec![false, false, false, true]);
        assert!(parse_records("probs 0.5").is_err());
        assert!(named_function("01x1").is_err());
    }
}
