//! Comparison reports and the provenance block attached to every output.

use std::fmt::Write as _;
use std::path::Path;

use crate::csv::fmt_f64;
use crate::error::{HarnessError, Result};

/// Numerical knobs behind an output. Unused knobs stay `None` and are
/// printed as `-`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub eta: Option<f64>,
    pub order: Option<usize>,
    pub dt: Option<f64>,
    pub n: Option<usize>,
    pub krylov_dim: Option<usize>,
    /// Further settings in insertion order.
    pub extra: Vec<(String, String)>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

impl Provenance {
    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    pub fn entries(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("eta".to_string(), opt(self.eta.map(fmt_f64))),
            ("order".to_string(), opt(self.order)),
            ("dt".to_string(), opt(self.dt.map(fmt_f64))),
            ("N".to_string(), opt(self.n)),
            ("krylovDim".to_string(), opt(self.krylov_dim)),
        ];
        v.extend(self.extra.iter().cloned());
        v
    }

    pub fn inline(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonPoint {
    pub label: String,
    pub analytic: f64,
    pub simulated: f64,
}

impl ComparisonPoint {
    pub fn abs_deviation(&self) -> f64 {
        (self.analytic - self.simulated).abs()
    }

    pub fn rel_deviation(&self) -> f64 {
        let scale = self.analytic.abs().max(self.simulated.abs());
        if scale == 0.0 {
            0.0
        } else {
            self.abs_deviation() / scale
        }
    }
}

/// Analytic-versus-lattice comparison judged on the maximum absolute deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub experiment: String,
    pub points: Vec<ComparisonPoint>,
    pub tolerance: f64,
    pub provenance: Provenance,
}

impl ComparisonReport {
    pub fn max_deviation(&self) -> f64 {
        self.points
            .iter()
            .map(ComparisonPoint::abs_deviation)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_deviation() <= self.tolerance
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[report]");
        let _ = writeln!(s, "experiment = {}", self.experiment);
        let _ = writeln!(s, "tolerance = {}", fmt_f64(self.tolerance));
        let _ = writeln!(s, "max_abs_deviation = {}", fmt_f64(self.max_deviation()));
        let _ = writeln!(s, "pass = {}", self.passed());
        let _ = writeln!(s, "\n[provenance]");
        for (k, v) in self.provenance.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "\n[points]");
        let _ = writeln!(s, "# label, analytic, simulated, abs_deviation, rel_deviation");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{} = {}, {}, {}, {}",
                p.label,
                fmt_f64(p.analytic),
                fmt_f64(p.simulated),
                fmt_f64(p.abs_deviation()),
                fmt_f64(p.rel_deviation())
            );
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// `Err(Tolerance)` when the report failed.
    pub fn require(&self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(HarnessError::Tolerance {
                experiment: self.experiment.clone(),
                deviation: self.max_deviation(),
                tolerance: self.tolerance,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_and_fail() {
        let mut r = ComparisonReport {
            experiment: "t".into(),
            points: vec![ComparisonPoint {
                label: "R(k0=1)".into(),
                analytic: 0.2,
                simulated: 0.21,
            }],
            tolerance: 0.02,
            provenance: Provenance {
                eta: Some(1e-6),
                ..Default::default()
            },
        };
        assert!(r.passed());
        assert!(r.render().contains("eta = 9.9999999999999995e-7"));
        r.tolerance = 0.005;
        assert_eq!(r.require().unwrap_err().exit_code(), 4);
    }
}
