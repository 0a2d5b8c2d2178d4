//! Plain `key = value` run configuration.
//!
//! ```text
//! # retrieval at the paper's coupling
//! decay.model = cold_linear
//! decay.a = 0.001
//! l0 = 5
//! ell = 20
//! total_time = 100
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{default_z_max, DecayModel, Grid, PhysicalParams, SimulationConfig};

pub const DEFAULT_DZ: f64 = 0.05;
pub const DEFAULT_CFL: f64 = 1.0;
/// Snapshot spacing used when `snapshot_stride` is omitted, in `1/Γ`.
pub const DEFAULT_SNAPSHOT_INTERVAL: f64 = 0.5;

const KEYS: &[&str] = &[
    "gamma",
    "omega_c",
    "g2n",
    "decay.model",
    "decay.a",
    "decay.k_c",
    "decay.v_s",
    "decay.hbar_over_m",
    "decay.length",
    "decay.table",
    "l0",
    "ell",
    "z_max",
    "dz",
    "cfl",
    "total_time",
    "snapshot_stride",
    "output_dir",
];

const REQUIRED: &[&str] = &["l0", "ell", "total_time"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every problem found in a configuration text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid configuration")?;
        for d in &self.diagnostics {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigFile {
    pub simulation: SimulationConfig,
    pub output_dir: Option<PathBuf>,
}

struct Entry {
    line: usize,
    value: String,
}

struct Parser {
    entries: BTreeMap<&'static str, Entry>,
    diagnostics: Vec<Diagnostic>,
}

impl Parser {
    fn new(text: &str) -> Self {
        let mut p = Parser {
            entries: BTreeMap::new(),
            diagnostics: Vec::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                p.error(Some(line), format!("expected `key = value`, got `{content}`"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                p.error(Some(line), format!("unknown key `{key}`"));
                continue;
            };
            if value.is_empty() {
                p.error(Some(line), format!("`{key}` has no value"));
                continue;
            }
            if let Some(prev) = p.entries.get(known) {
                let msg = format!("duplicate key `{key}` (first set on line {})", prev.line);
                p.error(Some(line), msg);
                continue;
            }
            p.entries.insert(
                known,
                Entry {
                    line,
                    value: value.to_string(),
                },
            );
        }
        p
    }

    fn error(&mut self, line: Option<usize>, message: String) {
        self.diagnostics.push(Diagnostic { line, message });
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn number(&mut self, key: &'static str) -> Option<f64> {
        let entry = self.entries.get(key)?;
        match entry.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                let (line, msg) = (entry.line, format!("`{key}` must be a finite number, got `{}`", entry.value));
                self.error(Some(line), msg);
                None
            }
        }
    }

    fn count(&mut self, key: &'static str) -> Option<usize> {
        let entry = self.entries.get(key)?;
        match entry.value.parse::<usize>() {
            Ok(v) => Some(v),
            Err(_) => {
                let (line, msg) = (entry.line, format!("`{key}` must be a non-negative integer, got `{}`", entry.value));
                self.error(Some(line), msg);
                None
            }
        }
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn decay(&mut self) -> Option<DecayModel> {
        let model = match self.entries.get("decay.model") {
            Some(e) => e.value.clone(),
            None if self.has("decay.a") => "cold_linear".to_string(),
            None => {
                self.error(None, "missing decay: set `decay.model` or `decay.a`".into());
                return None;
            }
        };
        let needs: &[&'static str] = match model.as_str() {
            "zero" => &[],
            "cold_linear" => &["decay.a"],
            "laser_cooled" => &["decay.k_c", "decay.v_s"],
            "bec" => &["decay.k_c", "decay.hbar_over_m", "decay.length"],
            "table" => &["decay.table"],
            other => {
                let line = self.line_of("decay.model");
                self.error(
                    line,
                    format!("unknown decay.model `{other}` (expected zero, cold_linear, laser_cooled, bec or table)"),
                );
                return None;
            }
        };
        let mut ok = true;
        for key in KEYS.iter().filter(|k| k.starts_with("decay.") && **k != "decay.model") {
            let used = needs.contains(key);
            if used && !self.has(key) {
                self.error(None, format!("decay.model = {model} requires `{key}`"));
                ok = false;
            } else if !used && self.has(key) {
                let line = self.line_of(key);
                self.error(line, format!("`{key}` is not used by decay.model = {model}"));
                ok = false;
            }
        }
        if !ok {
            return None;
        }
        let model = match model.as_str() {
            "zero" => DecayModel::Zero,
            "cold_linear" => DecayModel::ColdLinear {
                a: self.number("decay.a")?,
            },
            "laser_cooled" => {
                let k_c = self.number("decay.k_c");
                let v_s = self.number("decay.v_s");
                DecayModel::LaserCooledEstimate { k_c: k_c?, v_s: v_s? }
            }
            "bec" => {
                let k_c = self.number("decay.k_c");
                let hbar_over_m = self.number("decay.hbar_over_m");
                let length = self.number("decay.length");
                DecayModel::BecEstimate {
                    k_c: k_c?,
                    hbar_over_m: hbar_over_m?,
                    length: length?,
                }
            }
            _ => {
                let entry = &self.entries["decay.table"];
                let line = entry.line;
                let parsed: std::result::Result<Vec<f64>, _> =
                    entry.value.split(',').map(|v| v.trim().parse::<f64>()).collect();
                match parsed {
                    Ok(t) => DecayModel::CustomTable(t),
                    Err(_) => {
                        self.error(Some(line), "`decay.table` must be a comma-separated list of numbers".into());
                        return None;
                    }
                }
            }
        };
        if let Err(e) = model.validate() {
            let line = self.line_of("decay.model").or(self.line_of("decay.a"));
            self.error(line, e.to_string());
            return None;
        }
        Some(model)
    }
}

/// Parses and validates a configuration, reporting every problem at once.
pub fn parse_config_file(text: &str) -> Result<ConfigFile, ConfigError> {
    let mut p = Parser::new(text);

    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|k| !p.has(k)).collect();
    if !missing.is_empty() {
        p.error(None, format!("missing required keys: {}", missing.join(", ")));
    }

    let defaults = PhysicalParams::paper();
    let gamma = p.number("gamma").unwrap_or(defaults.gamma());
    let omega_c = p.number("omega_c").unwrap_or(defaults.omega_c());
    let g2n = p.number("g2n").unwrap_or(defaults.g2n());
    let decay = p.decay();
    let l0 = p.number("l0");
    let ell = p.count("ell");
    let total_time = p.number("total_time");
    let z_max = p.number("z_max");
    let dz = p.number("dz").unwrap_or(DEFAULT_DZ);
    let cfl = p.number("cfl").unwrap_or(DEFAULT_CFL);
    let stride = p.count("snapshot_stride");
    let output_dir = p.entries.get("output_dir").map(|e| PathBuf::from(&e.value));

    let params = match PhysicalParams::new(gamma, omega_c, g2n) {
        Ok(params) => Some(params),
        Err(e) => {
            let line = ["gamma", "omega_c", "g2n"].iter().find_map(|k| p.line_of(k));
            p.error(line, e.to_string());
            None
        }
    };
    if let Some(0) = stride {
        let line = p.line_of("snapshot_stride");
        p.error(line, "`snapshot_stride` must be >= 1".into());
    }
    if cfl > 1.0 {
        let line = p.line_of("cfl");
        p.error(line, format!("cfl = {cfl} violates the CFL condition (must be <= 1)"));
    }
    if !p.diagnostics.is_empty() {
        return Err(ConfigError {
            diagnostics: p.diagnostics,
        });
    }

    let (params, decay, l0, ell, total_time) = (
        params.unwrap(),
        decay.unwrap(),
        l0.unwrap(),
        ell.unwrap(),
        total_time.unwrap(),
    );
    let z_max = z_max.unwrap_or_else(|| default_z_max(&params, l0.abs(), total_time.abs()));
    let build = || -> Result<SimulationConfig> {
        let stride = match stride {
            Some(s) => s,
            None => {
                let probe = Grid::resolve(&params, z_max, dz, cfl, total_time, 1)?;
                ((DEFAULT_SNAPSHOT_INTERVAL / probe.dt()).round() as usize).max(1)
            }
        };
        let grid = Grid::resolve(&params, z_max, dz, cfl, total_time, stride)?;
        SimulationConfig::new(params, decay, l0, ell, grid)
    };
    match build() {
        Ok(simulation) => Ok(ConfigFile {
            simulation,
            output_dir,
        }),
        Err(e) => {
            let line = match &e {
                Error::InvalidParameter { name, .. } => p.line_of(name),
                Error::Cfl { .. } => p.line_of("cfl").or(p.line_of("dz")),
                _ => None,
            };
            Err(ConfigError {
                diagnostics: vec![Diagnostic {
                    line,
                    message: e.to_string(),
                }],
            })
        }
    }
}

pub fn parse_config(text: &str) -> Result<SimulationConfig, ConfigError> {
    parse_config_file(text).map(|c| c.simulation)
}

pub fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_config_file(&text)?)
}

/// Text that parses back to exactly `config`.
pub fn render_config(config: &SimulationConfig, output_dir: Option<&Path>) -> String {
    let p = &config.params;
    let g = &config.grid;
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&value);
        out.push('\n');
    };
    put("gamma", format!("{:?}", p.gamma()));
    put("omega_c", format!("{:?}", p.omega_c()));
    put("g2n", format!("{:?}", p.g2n()));
    match &config.decay {
        DecayModel::Zero => put("decay.model", "zero".into()),
        DecayModel::ColdLinear { a } => {
            put("decay.model", "cold_linear".into());
            put("decay.a", format!("{a:?}"));
        }
        DecayModel::LaserCooledEstimate { k_c, v_s } => {
            put("decay.model", "laser_cooled".into());
            put("decay.k_c", format!("{k_c:?}"));
            put("decay.v_s", format!("{v_s:?}"));
        }
        DecayModel::BecEstimate {
            k_c,
            hbar_over_m,
            length,
        } => {
            put("decay.model", "bec".into());
            put("decay.k_c", format!("{k_c:?}"));
            put("decay.hbar_over_m", format!("{hbar_over_m:?}"));
            put("decay.length", format!("{length:?}"));
        }
        DecayModel::CustomTable(table) => {
            put("decay.model", "table".into());
            let items: Vec<String> = table.iter().map(|v| format!("{v:?}")).collect();
            put("decay.table", items.join(", "));
        }
    }
    put("l0", format!("{:?}", config.l0));
    put("ell", config.ell.to_string());
    put("z_max", format!("{:?}", g.z_max()));
    put("dz", format!("{:?}", g.dz()));
    put("cfl", format!("{:?}", g.courant(p).min(1.0)));
    put("total_time", format!("{:?}", g.total_time()));
    put("snapshot_stride", g.snapshot_stride().to_string());
    if let Some(dir) = output_dir {
        put("output_dir", dir.display().to_string());
    }
    out
}
