//! Deterministic CSV output: `#` metadata lines, a column row, then values
//! with 17 significant digits and `\n` line endings.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::report::Provenance;

/// Column name and unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
}

pub const fn col(name: &'static str, unit: &'static str) -> Column {
    Column { name, unit }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Short description of the plot the data reproduces.
    pub figure: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

/// `{:.16e}` keeps 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

impl Table {
    pub fn new(figure: impl Into<String>, columns: Vec<Column>) -> Self {
        Self {
            figure: figure.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn render(&self, experiment: &str, provenance: &Provenance) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# experiment: {experiment}");
        let _ = writeln!(s, "# figure: {}", self.figure);
        let units: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{} [{}]", c.name, c.unit))
            .collect();
        let _ = writeln!(s, "# columns: {}", units.join(", "));
        let _ = writeln!(s, "# provenance: {}", provenance.inline());
        let names: Vec<&str> = self.columns.iter().map(|c| c.name).collect();
        let _ = writeln!(s, "{}", names.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn save(&self, path: &Path, experiment: &str, provenance: &Provenance) -> Result<()> {
        std::fs::write(path, self.render(experiment, provenance)).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5440903e-300, 6.02e23, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn render_layout() {
        let mut t = Table::new(
            "bound-state energies against detuning",
            vec![col("Omega", "J"), col("omega_plus", "J")],
        );
        t.push(vec![0.0, 2.5]);
        let s = t.render("x", &Provenance::default());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[2], "# columns: Omega [J], omega_plus [J]");
        assert_eq!(lines[4], "Omega,omega_plus");
        assert_eq!(lines[5], "0.0000000000000000e0,2.5000000000000000e0");
        assert!(!s.contains('\r'));
    }
}
