//! INI experiment configuration.
//!
//! ```ini
//! [experiment]
//! kind = b2b
//! id = b2b-weak
//!
//! [model]
//! J = 1
//! Omega = 0
//! g_prime = 0.5
//!
//! [packet]
//! s = 12
//! k0_list = 0.5236, 0.7854, 1.0472
//!
//! [vertex]
//! order = 1
//! ```
//!
//! Every key is parsed and range-checked before anything is computed. Unknown
//! sections and keys are errors, so a typo cannot silently fall back to a
//! default.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use wqed_core::resolvent::Branch;
use wqed_core::smatrix::{ShellGrid, WavepacketSpec};
use wqed_core::vertex::{QuadratureConfig, VertexOrder};
use wqed_core::ModelParams;

use crate::error::{HarnessError, Result};
use crate::scenarios::{LatticeSettings, PACKET_OFFSET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    BoundEnergies,
    BoundProfile,
    Emission,
    OnePhotonRt,
    B2b,
    F2b,
    F2f,
    Simulate,
    Compare,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::BoundEnergies,
        Kind::BoundProfile,
        Kind::Emission,
        Kind::OnePhotonRt,
        Kind::B2b,
        Kind::F2b,
        Kind::F2f,
        Kind::Simulate,
        Kind::Compare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::BoundEnergies => "bound-energies",
            Kind::BoundProfile => "bound-profile",
            Kind::Emission => "emission",
            Kind::OnePhotonRt => "one-photon-rt",
            Kind::B2b => "b2b",
            Kind::F2b => "f2b",
            Kind::F2f => "f2f",
            Kind::Simulate => "simulate",
            Kind::Compare => "compare",
        }
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

/// Channel compared by a `compare` experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    OnePhoton,
    B2b,
    F2b,
}

/// Initial state of a `simulate` experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initial {
    Emitter,
    OnePhoton,
    TwoPhoton,
    BoundProduct,
}

/// Kind-specific `[scan]` settings.
#[derive(Debug, Clone, PartialEq)]
pub enum Scan {
    BoundEnergies {
        g_primes: Vec<f64>,
        omega_min: f64,
        omega_max: f64,
        points: usize,
    },
    BoundProfile {
        x_max: i64,
    },
    Emission {
        t_max: f64,
        points: usize,
    },
    OnePhotonRt {
        points: usize,
    },
    B2b {
        branch: Branch,
    },
    F2b {
        grid: ShellGrid,
    },
    F2f {
        p_min: f64,
        p_max: f64,
        points: usize,
    },
    Simulate {
        initial: Initial,
        branch: Branch,
    },
    Compare {
        channel: Channel,
        branch: Branch,
        tolerance: f64,
        grid: ShellGrid,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub id: String,
    pub out: Option<PathBuf>,
    pub params: ModelParams,
    /// One packet per entry of `k0_list` (or the single `k0`).
    pub packets: Vec<WavepacketSpec>,
    pub order: VertexOrder,
    pub quadrature: QuadratureConfig,
    pub sim: Option<LatticeSettings>,
    pub scan: Scan,
}

/// Reads values out of an [`Ini`], remembering which keys were consumed.
struct Reader<'a> {
    ini: &'a Ini,
    used: BTreeSet<(String, String)>,
}

impl<'a> Reader<'a> {
    fn raw(&mut self, section: &str, key: &str) -> Option<&'a str> {
        let v = self.ini.section(Some(section))?.get(key)?;
        self.used.insert((section.to_string(), key.to_string()));
        Some(v.trim())
    }

    fn parse<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|e| HarnessError::config(format!("{section}.{key}"), format!("cannot parse `{s}`: {e}"))),
        }
    }

    fn get<T: FromStr>(&mut self, section: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse(section, key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&mut self, section: &str, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parse(section, key)?
            .ok_or_else(|| HarnessError::config(format!("{section}.{key}"), "missing required key"))
    }

    fn list(&mut self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(s) = self.raw(section, key) else {
            return Ok(None);
        };
        s.split(',')
            .map(|t| parse_number(t.trim()))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Some)
            .map_err(|e| HarnessError::config(format!("{section}.{key}"), e))
    }

    fn number(&mut self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(s) => parse_number(s)
                .map(Some)
                .map_err(|e| HarnessError::config(format!("{section}.{key}"), e)),
        }
    }

    fn finish(&self) -> Result<()> {
        for (sec, props) in self.ini.iter() {
            let Some(sec) = sec else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(HarnessError::config(k, "key outside any section"));
                }
                continue;
            };
            if props.is_empty() && !KNOWN_SECTIONS.contains(&sec) {
                return Err(HarnessError::config(sec, "unknown section"));
            }
            for (k, _) in props.iter() {
                if !self.used.contains(&(sec.to_string(), k.to_string())) {
                    return Err(HarnessError::config(
                        format!("{sec}.{k}"),
                        "unknown or unused key for this experiment kind",
                    ));
                }
            }
        }
        Ok(())
    }
}

const KNOWN_SECTIONS: [&str; 7] = ["experiment", "model", "packet", "vertex", "quadrature", "sim", "scan"];

/// Numbers may be written as plain floats or as multiples of `pi`
/// (`pi/6`, `2pi/3`, `0.5*pi`).
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    use std::f64::consts::PI;
    let t = s.replace(' ', "").to_ascii_lowercase();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let Some(pos) = t.find("pi") else {
        return Err(format!("`{s}` is not a number"));
    };
    let (pre, post) = (&t[..pos], &t[pos + 2..]);
    let coef = match pre.trim_end_matches('*') {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?,
    };
    let div = match post {
        "" => 1.0,
        d if d.starts_with('/') => d[1..].parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?,
        _ => return Err(format!("`{s}` is not a number")),
    };
    Ok(coef * PI / div)
}

fn branch(s: &str, key: &str) -> Result<Branch> {
    match s {
        "minus" | "-" => Ok(Branch::Minus),
        "plus" | "+" => Ok(Branch::Plus),
        _ => Err(HarnessError::config(
            key,
            format!("expected `minus` or `plus`, found `{s}`"),
        )),
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(HarnessError::config(
            key,
            format!("must be positive and finite, found {v}"),
        ))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<usize> {
    if v >= min {
        Ok(v)
    } else {
        Err(HarnessError::config(key, format!("must be at least {min}, found {v}")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| HarnessError::config("<file>", e.to_string()))?;
        let mut r = Reader {
            ini: &ini,
            used: BTreeSet::new(),
        };

        let kind: Kind = r.require("experiment", "kind")?;
        let id = r.get("experiment", "id", kind.name().to_string())?;
        if id.is_empty() || id.contains(['/', '\\']) {
            return Err(HarnessError::config(
                "experiment.id",
                "must be a non-empty file-name-safe string",
            ));
        }
        let out = r.raw("experiment", "out").map(PathBuf::from);

        let j = r.number("model", "J")?.unwrap_or(1.0);
        let omega = r.number("model", "Omega")?.unwrap_or(0.0);
        let g_prime = r.number("model", "g_prime")?;
        let g_prime = match (kind, g_prime) {
            (Kind::BoundEnergies, Some(_)) => {
                return Err(HarnessError::config(
                    "model.g_prime",
                    "bound-energies takes scan.g_prime_list instead",
                ))
            }
            (Kind::BoundEnergies, None) => 1.0,
            (_, Some(g)) => g,
            (_, None) => return Err(HarnessError::config("model.g_prime", "missing required key")),
        };
        let params = ModelParams::new(j, omega, g_prime).map_err(|e| model_key(e))?;

        let order = VertexOrder(r.get("vertex", "order", 1usize)?);
        if order.0 > 6 {
            return Err(HarnessError::config("vertex.order", "orders above 6 are not supported"));
        }

        let mut quadrature = QuadratureConfig::default();
        if let Some(v) = r.number("quadrature", "eta")? {
            quadrature.eta = positive("quadrature.eta", v)?;
        }
        if let Some(v) = r.number("quadrature", "rel_tol")? {
            quadrature.rel_tol = positive("quadrature.rel_tol", v)?;
        }
        if let Some(v) = r.number("quadrature", "abs_tol")? {
            quadrature.abs_tol = positive("quadrature.abs_tol", v)?;
        }
        quadrature.max_depth = at_least(
            "quadrature.max_depth",
            r.get("quadrature", "max_depth", quadrature.max_depth)?,
            1,
        )?;
        quadrature.principal_value = r.get("quadrature", "principal_value", quadrature.principal_value)?;

        let needs_packets = matches!(kind, Kind::B2b | Kind::F2b | Kind::F2f | Kind::Compare | Kind::Simulate);
        let packets = read_packets(&mut r, needs_packets)?;

        let scan = read_scan(&mut r, kind)?;
        if let Scan::Simulate { initial, .. } = &scan {
            if matches!(initial, Initial::Emitter) && !packets.is_empty() {
                return Err(HarnessError::config("packet", "an emitter run takes no packet"));
            }
            if !matches!(initial, Initial::Emitter) && packets.len() != 1 {
                return Err(HarnessError::config(
                    "packet.k0",
                    "a simulation takes exactly one packet",
                ));
            }
        }

        let sim_needed = matches!(kind, Kind::Simulate) || matches!(scan, Scan::Compare { .. });
        let sim = if sim_needed {
            Some(read_sim(&mut r, &params)?)
        } else {
            None
        };

        r.finish()?;
        Ok(Self {
            kind,
            id,
            out,
            params,
            packets,
            order,
            quadrature,
            sim,
            scan,
        })
    }
}

fn model_key(e: wqed_core::Error) -> HarnessError {
    let key = match &e {
        wqed_core::Error::InvalidParameter { name, .. } => match *name {
            "j" | "J" => "model.J",
            "omega" | "Omega" => "model.Omega",
            _ => "model.g_prime",
        },
        _ => "model",
    };
    HarnessError::config(key, e.to_string())
}

fn read_packets(r: &mut Reader, needed: bool) -> Result<Vec<WavepacketSpec>> {
    let k0 = r.number("packet", "k0")?;
    let list = r.list("packet", "k0_list")?;
    let s = r.number("packet", "s")?;
    let xc = r.number("packet", "xc")?;
    let ks = match (k0, list) {
        (Some(_), Some(_)) => {
            return Err(HarnessError::config(
                "packet.k0_list",
                "give either k0 or k0_list, not both",
            ))
        }
        (Some(k), None) => vec![k],
        (None, Some(l)) if l.is_empty() => return Err(HarnessError::config("packet.k0_list", "empty list")),
        (None, Some(l)) => l,
        (None, None) if needed => return Err(HarnessError::config("packet.k0", "missing required key")),
        (None, None) => {
            if let Some(key) = s.map(|_| "packet.s").or(xc.map(|_| "packet.xc")) {
                return Err(HarnessError::config(key, "no packet is configured"));
            }
            return Ok(Vec::new());
        }
    };
    let s = positive(
        "packet.s",
        s.ok_or_else(|| HarnessError::config("packet.s", "missing required key"))?,
    )?;
    ks.into_iter()
        .map(|k0| {
            let spec = WavepacketSpec::new(k0, s, xc.unwrap_or(-PACKET_OFFSET * s)).map_err(|e| {
                let key = if matches!(e, wqed_core::Error::PacketTruncation { .. }) {
                    "packet.s"
                } else {
                    "packet.k0"
                };
                HarnessError::config(key, e.to_string())
            })?;
            spec.check_truncation()
                .map_err(|e| HarnessError::config("packet.s", e.to_string()))?;
            Ok(spec)
        })
        .collect()
}

fn read_grid(r: &mut Reader) -> Result<ShellGrid> {
    let d = ShellGrid::default();
    Ok(ShellGrid {
        energy_nodes: at_least("scan.energy_nodes", r.get("scan", "energy_nodes", d.energy_nodes)?, 2)?,
        delta_nodes: at_least("scan.delta_nodes", r.get("scan", "delta_nodes", d.delta_nodes)?, 2)?,
        momentum_nodes: at_least(
            "scan.momentum_nodes",
            r.get("scan", "momentum_nodes", d.momentum_nodes)?,
            2,
        )?,
        tolerance: positive(
            "scan.grid_tolerance",
            r.number("scan", "grid_tolerance")?.unwrap_or(d.tolerance),
        )?,
    })
}

fn read_scan(r: &mut Reader, kind: Kind) -> Result<Scan> {
    Ok(match kind {
        Kind::BoundEnergies => {
            let g_primes = r.list("scan", "g_prime_list")?.unwrap_or_else(|| vec![1.0, 2.0]);
            for &g in &g_primes {
                positive("scan.g_prime_list", g)?;
            }
            let omega_min = r.number("scan", "omega_min")?.unwrap_or(-3.0);
            let omega_max = r.number("scan", "omega_max")?.unwrap_or(3.0);
            if !(omega_min < omega_max) {
                return Err(HarnessError::config("scan.omega_max", "must exceed scan.omega_min"));
            }
            Scan::BoundEnergies {
                g_primes,
                omega_min,
                omega_max,
                points: at_least("scan.points", r.get("scan", "points", 121usize)?, 2)?,
            }
        }
        Kind::BoundProfile => Scan::BoundProfile {
            x_max: r.get("scan", "x_max", 20i64)?.max(0),
        },
        Kind::Emission => Scan::Emission {
            t_max: positive("scan.t_max", r.number("scan", "t_max")?.unwrap_or(60.0))?,
            points: at_least("scan.points", r.get("scan", "points", 601usize)?, 2)?,
        },
        Kind::OnePhotonRt => Scan::OnePhotonRt {
            points: at_least("scan.points", r.get("scan", "points", 201usize)?, 2)?,
        },
        Kind::B2b => Scan::B2b {
            branch: branch(&r.get("scan", "branch", "minus".to_string())?, "scan.branch")?,
        },
        Kind::F2b => Scan::F2b { grid: read_grid(r)? },
        Kind::F2f => {
            let p_min = r.number("scan", "p_min")?.unwrap_or(-std::f64::consts::PI);
            let p_max = r.number("scan", "p_max")?.unwrap_or(std::f64::consts::PI);
            if !(p_min < p_max) {
                return Err(HarnessError::config("scan.p_max", "must exceed scan.p_min"));
            }
            Scan::F2f {
                p_min,
                p_max,
                points: at_least("scan.points", r.get("scan", "points", 64usize)?, 2)?,
            }
        }
        Kind::Simulate => {
            let initial = match r.get("scan", "initial", "two-photon".to_string())?.as_str() {
                "emitter" => Initial::Emitter,
                "one-photon" => Initial::OnePhoton,
                "two-photon" => Initial::TwoPhoton,
                "bound-product" => Initial::BoundProduct,
                other => {
                    return Err(HarnessError::config(
                        "scan.initial",
                        format!("expected emitter, one-photon, two-photon or bound-product, found `{other}`"),
                    ))
                }
            };
            Scan::Simulate {
                initial,
                branch: branch(&r.get("scan", "branch", "minus".to_string())?, "scan.branch")?,
            }
        }
        Kind::Compare => {
            let channel = match r.require::<String>("scan", "channel")?.as_str() {
                "one-photon" => Channel::OnePhoton,
                "b2b" => Channel::B2b,
                "f2b" => Channel::F2b,
                other => {
                    return Err(HarnessError::config(
                        "scan.channel",
                        format!("expected one-photon, b2b or f2b, found `{other}`"),
                    ))
                }
            };
            Scan::Compare {
                channel,
                branch: branch(&r.get("scan", "branch", "minus".to_string())?, "scan.branch")?,
                tolerance: positive("scan.tolerance", r.number("scan", "tolerance")?.unwrap_or(0.02))?,
                grid: if channel == Channel::F2b {
                    read_grid(r)?
                } else {
                    ShellGrid::default()
                },
            }
        }
    })
}

fn read_sim(r: &mut Reader, params: &ModelParams) -> Result<LatticeSettings> {
    let n: usize = r.get("sim", "N", 601)?;
    if n < 3 || n % 2 == 0 {
        return Err(HarnessError::config(
            "sim.N",
            format!("must be odd and at least 3, found {n}"),
        ));
    }
    let mut s = LatticeSettings::new(n);
    if let Some(v) = r.number("sim", "dt")? {
        s.dt = positive("sim.dt", v)?;
    }
    s.krylov_dim = at_least("sim.krylov_dim", r.get("sim", "krylov_dim", s.krylov_dim)?, 2)?;
    if let Some(v) = r.number("sim", "step_tolerance")? {
        s.step_tolerance = positive("sim.step_tolerance", v)?;
    }
    if let Some(v) = r.number("sim", "flux_tolerance")? {
        s.flux_tolerance = positive("sim.flux_tolerance", v)?;
    }
    if let Some(v) = r.number("sim", "quiet_window")? {
        s.quiet_window = positive("sim.quiet_window", v)?;
    }
    if let Some(v) = r.number("sim", "total_time")? {
        s.total_time = Some(positive("sim.total_time", v)?);
    }
    let cfg = s.sim_config(params);
    cfg.validate().map_err(|e| HarnessError::config("sim", e.to_string()))?;
    cfg.check_wall_echo(params)
        .map_err(|e| HarnessError::config("sim.total_time", e.to_string()))?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_multiples() {
        assert_eq!(parse_number("pi/6").unwrap(), PI / 6.0);
        assert_eq!(parse_number("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_number("0.5*pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_number("-pi").unwrap(), -PI);
        assert_eq!(parse_number("1.25").unwrap(), 1.25);
        assert!(parse_number("pie").is_err());
    }

    #[test]
    fn minimal_config() {
        let c = ExperimentConfig::parse("[experiment]\nkind = emission\n[model]\ng_prime = 2\n").unwrap();
        assert_eq!(c.kind, Kind::Emission);
        assert_eq!(c.id, "emission");
        assert!(c.packets.is_empty());
        assert_eq!(
            c.scan,
            Scan::Emission {
                t_max: 60.0,
                points: 601
            }
        );
    }
}
