//! CSV files with a commented header echoing the configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentSpec;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Nine significant digits, exponent notation, locale independent.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.8e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Text(String),
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Num(x)
    }
}

impl From<&str> for Field {
    fn from(s: &str) -> Self {
        Field::Text(s.into())
    }
}

impl From<String> for Field {
    fn from(s: String) -> Self {
        Field::Text(s)
    }
}

impl From<bool> for Field {
    fn from(b: bool) -> Self {
        Field::Text(if b { "pass" } else { "fail" }.into())
    }
}

impl From<u64> for Field {
    fn from(n: u64) -> Self {
        Field::Text(n.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Field>>,
    /// Extra `# key: value` header lines.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.notes.push((key.into(), value.into()));
    }
}

#[derive(Serialize)]
struct Echo<'a> {
    command: &'a str,
    realizations: usize,
    area_cells: usize,
    sweep: &'a Option<crate::config::SweepSpec>,
    simulation: &'a pilotgeom::simulate::SimulationConfig,
}

pub fn config_echo(spec: &ExperimentSpec) -> String {
    serde_json::to_string(&Echo {
        command: spec.command.name(),
        realizations: spec.n_realizations,
        area_cells: spec.area_cells,
        sweep: &spec.sweep,
        simulation: &spec.simulation,
    })
    .expect("configuration serializes")
}

pub fn file_name(experiment: &str, kappa: f64, seed: u64, ext: &str) -> String {
    format!("{experiment}_{kappa:.3}_{seed}.{ext}")
}

pub fn render(spec: &ExperimentSpec, table: &Table) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# pilotgeom {VERSION}");
    let _ = writeln!(s, "# seed: {}", spec.seed);
    let _ = writeln!(s, "# config: {}", config_echo(spec));
    for (k, v) in &table.notes {
        let _ = writeln!(s, "# {k}: {v}");
    }
    let _ = writeln!(s, "{}", table.columns.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|f| match f {
                Field::Num(x) => fmt_num(*x),
                Field::Text(t) => t.clone(),
            })
            .collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes `<experiment>_<kappa>_<seed>.csv` into the output directory.
pub fn write_table(
    spec: &ExperimentSpec,
    experiment: &str,
    table: &Table,
) -> Result<PathBuf, CliError> {
    let path = spec
        .output_dir
        .join(file_name(experiment, spec.kappa(), spec.seed, "csv"));
    write_file(&path, &render(spec, table))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(
    spec: &ExperimentSpec,
    experiment: &str,
    value: &T,
) -> Result<PathBuf, CliError> {
    let path = spec
        .output_dir
        .join(file_name(experiment, spec.kappa(), spec.seed, "json"));
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    write_file(&path, &text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_nine_significant_digits() {
        assert_eq!(fmt_num(0.123456789123), "1.23456789e-1");
        assert_eq!(fmt_num(-2.5e6), "-2.50000000e6");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn names_follow_the_pattern() {
        assert_eq!(
            file_name("coverage_cc", 0.6, 7, "csv"),
            "coverage_cc_0.600_7.csv"
        );
    }
}
