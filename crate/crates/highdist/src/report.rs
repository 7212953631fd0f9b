use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use highdist_core::state::QueryCounter;
use serde::Serialize;

use crate::CliError;

/// One report line per instance.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub id: String,
    pub problem: String,
    /// `key=value` pairs separated by `;`.
    pub params: String,
    /// Decision or estimate.
    pub result: String,
    pub success_probability: f64,
    pub truth: String,
    /// `label:forward/inverse/controlled` per oracle, separated by `;`.
    pub queries: String,
    pub total_queries: u64,
    pub backend: String,
    pub qubits: usize,
    /// Empty unless `--timing` is set.
    pub wall_ms: Option<f64>,
    #[serde(skip)]
    pub mismatch: bool,
}

impl Row {
    pub fn new(id: &str, problem: &str) -> Self {
        Row {
            id: id.to_string(),
            problem: problem.to_string(),
            params: String::new(),
            result: String::new(),
            success_probability: f64::NAN,
            truth: String::new(),
            queries: String::new(),
            total_queries: 0,
            backend: String::new(),
            qubits: 0,
            wall_ms: None,
            mismatch: false,
        }
    }

    pub fn with_queries(mut self, q: &QueryCounter) -> Self {
        self.queries = format_queries(q);
        self.total_queries = q.grand_total();
        self
    }
}

pub fn format_queries(q: &QueryCounter) -> String {
    q.iter().map(|(label, t)| format!("{label}:{}/{}/{}", t.forward, t.inverse, t.controlled)).collect::<Vec<_>>().join(";")
}

pub fn params(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

pub fn to_csv(rows: &[Row]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Input(e.to_string()))
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// CSV to `out` (or stdout) and, with a file, the run parameters to `<out>.json`.
pub fn emit(rows: &[Row], out: Option<&Path>, sidecar: &serde_json::Value) -> Result<(), CliError> {
    let csv = to_csv(rows)?;
    match out {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| CliError::Io(path.display().to_string(), e))?;
            let side = sidecar_path(path);
            let mut text = serde_json::to_string_pretty(sidecar)?;
            text.push('\n');
            fs::write(&side, text).map_err(|e| CliError::Io(side.display().to_string(), e))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&csv).map_err(|e| CliError::Io("stdout".into(), e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_empty_timing() {
        let mut q = QueryCounter::new();
        q.record_n("O_D", false, false, 3);
        q.record("O_D", true, true);
        let mut r = Row::new("x", "highdist").with_queries(&q);
        r.success_probability = 0.5;
        let text = String::from_utf8(to_csv(&[r]).unwrap()).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("id,problem,params"));
        let line = lines.next().unwrap();
        assert!(line.contains("O_D:3/0/1"), "{line}");
        assert!(line.ends_with(','));
        assert_eq!(sidecar_path(Path::new("a/b.csv")), PathBuf::from("a/b.csv.json"));
    }
}
