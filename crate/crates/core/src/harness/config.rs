use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::environment::{TaskGenConfig, WorldConfig};
use crate::error::ConfigError;
use crate::lyapunov::DppConfig;
use crate::model::{QecParams, QuantumHardwareParams};
use crate::policy::{DqnHyper, PolicyContext, PolicyKind};

/// Policy selection and learner settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub name: PolicyKind,
    pub dqn: DqnHyper,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            name: PolicyKind::LyapunovExact,
            dqn: DqnHyper::default(),
        }
    }
}

/// A parameter sweep: one numeric config path and the values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub path: String,
    pub values: Vec<f64>,
    /// Policies to compare; empty means `policy.name` only.
    #[serde(default)]
    pub policies: Vec<PolicyKind>,
}

/// Complete experiment description. Every key is optional in the JSON
/// document; absent keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub taskgen: TaskGenConfig,
    pub quantum: QuantumHardwareParams,
    pub qec: QecParams,
    pub dpp: DppConfig,
    pub policy: PolicyConfig,
    pub horizon_slots: usize,
    /// Training episodes for learning policies.
    pub epochs: usize,
    pub seeds: Vec<u64>,
    pub sweep: Option<SweepSpec>,
    /// Measure wall-clock time per run. Off by default so output files are
    /// byte-identical across repeated runs.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            world: WorldConfig::default(),
            taskgen: TaskGenConfig::default(),
            quantum: QuantumHardwareParams::default(),
            qec: QecParams::default(),
            dpp: DppConfig::default(),
            policy: PolicyConfig::default(),
            horizon_slots: 500,
            epochs: 350,
            seeds: vec![1, 2, 3, 4, 5],
            sweep: None,
            record_wall_time: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.world.validate()?;
        self.taskgen.validate()?;
        self.quantum.validate()?;
        self.qec.validate()?;
        validate_dpp(&self.dpp)?;
        self.policy.dqn.validate()?;
        if self.horizon_slots == 0 {
            return Err(ConfigError::invalid("horizon_slots", "must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(ConfigError::invalid("epochs", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::invalid("seeds", "must not be empty"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(ConfigError::invalid("sweep.values", "must not be empty"));
            }
            if let Some(v) = sweep.values.iter().find(|v| !v.is_finite()) {
                return Err(ConfigError::invalid(
                    "sweep.values",
                    format!("{v} is not finite"),
                ));
            }
            resolve_path(self, &sweep.path)?;
        }
        Ok(())
    }

    pub fn context(&self) -> PolicyContext {
        PolicyContext {
            qhw: self.quantum,
            qec: self.qec,
            dpp: self.dpp,
        }
    }

    /// Parse a JSON document, fill defaults, reject unknown keys and
    /// validate.
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, ConfigError> {
        let cfg: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let key = e.path().to_string();
            ConfigError::invalid(key, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Copy with the numeric parameter at `path` set to `value`.
    pub fn with_param(&self, path: &str, value: f64) -> Result<Self, ConfigError> {
        let targets = resolve_path(self, path)?;
        let mut doc = serde_json::to_value(self).expect("config serializes");
        for target in targets {
            let slot = pointer_mut(&mut doc, &target).expect("resolved path exists");
            *slot = number_like(slot, value, &target)?;
        }
        Self::from_value(doc)
    }
}

fn validate_dpp(d: &DppConfig) -> Result<(), ConfigError> {
    if !(d.v_param > 0.0 && d.v_param.is_finite()) {
        return Err(ConfigError::invalid(
            "dpp.v_param",
            "must be strictly positive",
        ));
    }
    if !(d.c_additive >= 0.0 && d.c_additive.is_finite()) {
        return Err(ConfigError::invalid(
            "dpp.c_additive",
            "must be non-negative",
        ));
    }
    if !(0.0..=1.0).contains(&d.delta) {
        return Err(ConfigError::invalid("dpp.delta", "must be in [0, 1]"));
    }
    if !(d.min_offload_fraction > 0.0 && d.min_offload_fraction <= 1.0) {
        return Err(ConfigError::invalid(
            "dpp.min_offload_fraction",
            "must be in (0, 1]",
        ));
    }
    Ok(())
}

/// Read and validate a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            ConfigError::Missing {
                path: path.to_path_buf(),
            }
        } else {
            ConfigError::Read {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    ExperimentConfig::from_json_str(&text)
}

/// Shorthands that set a range's minimum and maximum together.
const ALIASES: [(&str, [&str; 2]); 6] = [
    (
        "taskgen.datasize_mb",
        ["taskgen.datasize_min_mb", "taskgen.datasize_max_mb"],
    ),
    (
        "taskgen.deadline_s",
        ["taskgen.deadline_min_s", "taskgen.deadline_max_s"],
    ),
    (
        "world.leased_qubits",
        ["world.leased_qubits_min", "world.leased_qubits_max"],
    ),
    (
        "world.leased_cpu_hz",
        ["world.leased_cpu_hz_min", "world.leased_cpu_hz_max"],
    ),
    (
        "world.tx_power_dbm",
        ["world.tx_power_min_dbm", "world.tx_power_max_dbm"],
    ),
    (
        "world.mean_speed",
        ["world.mean_speed_min", "world.mean_speed_max"],
    ),
];

fn pointer(path: &str) -> String {
    format!("/{}", path.replace('.', "/"))
}

fn pointer_mut<'a>(doc: &'a mut Value, path: &str) -> Option<&'a mut Value> {
    doc.pointer_mut(&pointer(path))
}

fn collect_numeric(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Number(_) => out.push(prefix.to_string()),
        Value::Object(map) => {
            for (k, child) in map {
                let p = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                collect_numeric(&p, child, out);
            }
        }
        _ => {}
    }
}

/// Every dotted path accepted by [`ExperimentConfig::with_param`].
pub fn valid_paths(cfg: &ExperimentConfig) -> Vec<String> {
    let mut doc = serde_json::to_value(cfg).expect("config serializes");
    if let Value::Object(map) = &mut doc {
        map.remove("sweep");
    }
    let mut out = Vec::new();
    collect_numeric("", &doc, &mut out);
    // Optional numeric fields serialize as null when unset.
    out.push("world.server_switched_cap_rho".into());
    out.push("world.server_exponent_zeta".into());
    out.push("policy.dqn.value_scale".into());
    out.extend(ALIASES.iter().map(|(a, _)| a.to_string()));
    out.sort();
    out.dedup();
    out
}

fn resolve_path(cfg: &ExperimentConfig, path: &str) -> Result<Vec<String>, ConfigError> {
    let valid = valid_paths(cfg);
    if !valid.iter().any(|p| p == path) {
        return Err(ConfigError::UnknownPath {
            path: path.to_string(),
            valid,
        });
    }
    Ok(match ALIASES.iter().find(|(a, _)| *a == path) {
        Some((_, targets)) => targets.iter().map(|t| t.to_string()).collect(),
        None => vec![path.to_string()],
    })
}

/// `value` as a JSON number of the same kind as `slot` (integers stay
/// integers).
fn number_like(slot: &Value, value: f64, path: &str) -> Result<Value, ConfigError> {
    let is_int = matches!(slot, Value::Number(n) if !n.is_f64());
    if is_int {
        if value.fract() != 0.0 || value < 0.0 {
            return Err(ConfigError::invalid(
                path,
                format!("{value} is not a non-negative integer"),
            ));
        }
        return Ok(Value::from(value as u64));
    }
    serde_json::Number::from_f64(value)
        .map(Value::Number)
        .ok_or_else(|| ConfigError::invalid(path, format!("{value} is not finite")))
}
