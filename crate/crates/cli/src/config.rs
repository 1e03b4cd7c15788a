//! Experiment configuration: a line-oriented `key = value` document with
//! `[sim]`, `[attack]`, `[sweep]`, and `[output]` sections. Unknown keys are
//! rejected; missing keys take documented defaults. [`render_config`] is the
//! canonical emitter, and `parse_config(render_config(spec))` round-trips.

use std::fmt;

use thiserror::Error;

use tanglesim_core::metrics::MetricsParams;
use tanglesim_core::sim::{AnchorPolicy, AttackConfig, SimConfig};
use tanglesim_core::TsaKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` expects {expected}")]
    TypeMismatch {
        line: usize,
        key: String,
        expected: &'static str,
    },
    #[error("line {line}: key `{key}` out of range: {message}")]
    Range {
        line: usize,
        key: String,
        message: String,
    },
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

/// A sweepable numeric field of the simulation config.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepField {
    Rate,
    Latency,
    Duration,
    Alpha,
    Nodes,
    AdversaryRate,
    AcceptWeight,
    EvalHorizon,
}

impl SweepField {
    pub fn key(self) -> &'static str {
        match self {
            SweepField::Rate => "rate",
            SweepField::Latency => "latency",
            SweepField::Duration => "duration",
            SweepField::Alpha => "alpha",
            SweepField::Nodes => "nodes",
            SweepField::AdversaryRate => "adversary_rate",
            SweepField::AcceptWeight => "accept_weight",
            SweepField::EvalHorizon => "eval_horizon",
        }
    }

    fn from_key(key: &str) -> Option<Self> {
        Some(match key {
            "rate" => SweepField::Rate,
            "latency" => SweepField::Latency,
            "duration" => SweepField::Duration,
            "alpha" => SweepField::Alpha,
            "nodes" => SweepField::Nodes,
            "adversary_rate" => SweepField::AdversaryRate,
            "accept_weight" => SweepField::AcceptWeight,
            "eval_horizon" => SweepField::EvalHorizon,
            _ => return None,
        })
    }

    /// Set this field on a config. The caller has validated applicability.
    pub fn apply(self, config: &mut SimConfig, value: f64) {
        match self {
            SweepField::Rate => config.honest_rate = value,
            SweepField::Latency => config.latency = value,
            SweepField::Duration => config.duration = value,
            SweepField::Alpha => config.tsa = TsaKind::Mcmc { alpha: value },
            SweepField::Nodes => config.node_count = value as u32,
            SweepField::AdversaryRate => {
                config.attack.as_mut().unwrap().adversary_rate = value;
            }
            SweepField::AcceptWeight => {
                config.attack.as_mut().unwrap().accept_weight = value as u64;
            }
            SweepField::EvalHorizon => {
                config.attack.as_mut().unwrap().eval_horizon = value;
            }
        }
    }

    fn needs_attack(self) -> bool {
        matches!(
            self,
            SweepField::AdversaryRate | SweepField::AcceptWeight | SweepField::EvalHorizon
        )
    }
}

impl fmt::Display for SweepField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub field: SweepField,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputOptions {
    pub dir: String,
    pub trace: bool,
    pub dot: bool,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions {
            dir: "results".into(),
            trace: false,
            dot: false,
            csv: true,
            json: true,
        }
    }
}

/// Everything one invocation of the runner needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub base: SimConfig,
    pub sweep: Vec<SweepAxis>,
    pub replications: u32,
    pub metrics: MetricsParams,
    pub output: OutputOptions,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            base: SimConfig::default(),
            sweep: Vec::new(),
            replications: 1,
            metrics: MetricsParams::default(),
            output: OutputOptions::default(),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Sim,
    Attack,
    Sweep,
    Output,
}

pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let mut spec = ExperimentSpec::default();
    let mut section = Section::None;
    let mut tsa_name: Option<String> = None;
    let mut alpha: Option<f64> = None;
    let mut attack: Option<AttackConfig> = None;
    let mut attack_seen = false;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(ConfigError::Parse {
                line,
                message: "unterminated section header".into(),
            })?;
            section = match name {
                "sim" => Section::Sim,
                "attack" => {
                    attack_seen = true;
                    if attack.is_none() {
                        attack = Some(AttackConfig::default());
                    }
                    Section::Attack
                }
                "sweep" => Section::Sweep,
                "output" => Section::Output,
                other => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("unknown section `{other}`"),
                    })
                }
            };
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                message: "expected `key = value`".into(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        match section {
            Section::None => {
                return Err(ConfigError::Parse {
                    line,
                    message: "key outside any section".into(),
                })
            }
            Section::Sim => parse_sim_key(&mut spec, &mut tsa_name, &mut alpha, line, key, value)?,
            Section::Attack => {
                parse_attack_key(attack.as_mut().unwrap(), line, key, value)?;
            }
            Section::Sweep => parse_sweep_key(&mut spec, line, key, value)?,
            Section::Output => parse_output_key(&mut spec, line, key, value)?,
        }
    }

    spec.base.tsa = match tsa_name.as_deref() {
        None | Some("two-step") => TsaKind::TwoStep,
        Some("uniform") => TsaKind::Uniform,
        Some("mcmc") => TsaKind::Mcmc {
            alpha: alpha.unwrap_or(1.0),
        },
        Some(_) => unreachable!("validated at parse"),
    };
    if alpha.is_some() && !matches!(spec.base.tsa, TsaKind::Mcmc { .. }) {
        return Err(ConfigError::Invalid("`alpha` requires `tsa = mcmc`".into()));
    }
    if attack_seen {
        spec.base.attack = attack;
    }

    for axis in &spec.sweep {
        if axis.field.needs_attack() && spec.base.attack.is_none() {
            return Err(ConfigError::Invalid(format!(
                "sweep axis `{}` requires an [attack] section",
                axis.field
            )));
        }
        if axis.field == SweepField::Alpha && !matches!(spec.base.tsa, TsaKind::Mcmc { .. }) {
            return Err(ConfigError::Invalid(
                "sweep axis `alpha` requires `tsa = mcmc`".into(),
            ));
        }
    }
    spec.base
        .validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(spec)
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|_| ConfigError::TypeMismatch {
        line,
        key: key.into(),
        expected: "a number",
    })
}

fn parse_positive(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let v = parse_f64(line, key, value)?;
    if v <= 0.0 {
        return Err(ConfigError::Range {
            line,
            key: key.into(),
            message: "must be positive".into(),
        });
    }
    Ok(v)
}

fn parse_nonnegative(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let v = parse_f64(line, key, value)?;
    if v < 0.0 {
        return Err(ConfigError::Range {
            line,
            key: key.into(),
            message: "must be nonnegative".into(),
        });
    }
    Ok(v)
}

fn parse_u64(line: usize, key: &str, value: &str) -> Result<u64, ConfigError> {
    value.parse::<u64>().map_err(|_| ConfigError::TypeMismatch {
        line,
        key: key.into(),
        expected: "a nonnegative integer",
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::TypeMismatch {
            line,
            key: key.into(),
            expected: "true or false",
        }),
    }
}

fn parse_sim_key(
    spec: &mut ExperimentSpec,
    tsa_name: &mut Option<String>,
    alpha: &mut Option<f64>,
    line: usize,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    match key {
        "rate" => spec.base.honest_rate = parse_positive(line, key, value)?,
        "latency" => spec.base.latency = parse_nonnegative(line, key, value)?,
        "duration" => spec.base.duration = parse_positive(line, key, value)?,
        "seed" => spec.base.seed = parse_u64(line, key, value)?,
        "nodes" => {
            let v = parse_u64(line, key, value)?;
            if v == 0 || v > u32::MAX as u64 {
                return Err(ConfigError::Range {
                    line,
                    key: key.into(),
                    message: "must be a positive node count".into(),
                });
            }
            spec.base.node_count = v as u32;
        }
        "tsa" => match value {
            "uniform" | "mcmc" | "two-step" => *tsa_name = Some(value.into()),
            _ => {
                return Err(ConfigError::TypeMismatch {
                    line,
                    key: key.into(),
                    expected: "one of uniform, mcmc, two-step",
                })
            }
        },
        "alpha" => *alpha = Some(parse_nonnegative(line, key, value)?),
        _ => {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.into(),
            })
        }
    }
    Ok(())
}

fn parse_attack_key(
    attack: &mut AttackConfig,
    line: usize,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    match key {
        "adversary_rate" => attack.adversary_rate = parse_positive(line, key, value)?,
        "accept_weight" => {
            let v = parse_u64(line, key, value)?;
            if v == 0 {
                return Err(ConfigError::Range {
                    line,
                    key: key.into(),
                    message: "must be at least 1".into(),
                });
            }
            attack.accept_weight = v;
        }
        "eval_horizon" => attack.eval_horizon = parse_nonnegative(line, key, value)?,
        "reveal_at" => attack.reveal_at = Some(parse_nonnegative(line, key, value)?),
        "anchor" => {
            attack.anchor_policy = match value {
                "target-parent" => AnchorPolicy::TargetParent,
                "genesis" => AnchorPolicy::Genesis,
                _ => {
                    return Err(ConfigError::TypeMismatch {
                        line,
                        key: key.into(),
                        expected: "target-parent or genesis",
                    })
                }
            }
        }
        _ => {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.into(),
            })
        }
    }
    Ok(())
}

fn parse_sweep_key(
    spec: &mut ExperimentSpec,
    line: usize,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    let field = SweepField::from_key(key).ok_or_else(|| ConfigError::UnknownKey {
        line,
        key: key.into(),
    })?;
    let mut values = Vec::new();
    for part in value.split(',') {
        let v = parse_f64(line, key, part.trim())?;
        if matches!(field, SweepField::Nodes | SweepField::AcceptWeight)
            && (v.fract() != 0.0 || v < 1.0)
        {
            return Err(ConfigError::Range {
                line,
                key: key.into(),
                message: "must be positive integers".into(),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(ConfigError::Parse {
            line,
            message: "sweep axis needs at least one value".into(),
        });
    }
    spec.sweep.push(SweepAxis { field, values });
    Ok(())
}

fn parse_output_key(
    spec: &mut ExperimentSpec,
    line: usize,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    match key {
        "dir" => spec.output.dir = value.into(),
        "replications" => {
            let v = parse_u64(line, key, value)?;
            if v == 0 {
                return Err(ConfigError::Range {
                    line,
                    key: key.into(),
                    message: "must be at least 1".into(),
                });
            }
            spec.replications = v as u32;
        }
        "sample_interval" => spec.metrics.sample_interval = parse_positive(line, key, value)?,
        "cooldown" => spec.metrics.cooldown = parse_positive(line, key, value)?,
        "weight_threshold" => {
            let v = parse_u64(line, key, value)?;
            if v == 0 {
                return Err(ConfigError::Range {
                    line,
                    key: key.into(),
                    message: "must be at least 1".into(),
                });
            }
            spec.metrics.weight_threshold = v;
        }
        "trace" => spec.output.trace = parse_bool(line, key, value)?,
        "dot" => spec.output.dot = parse_bool(line, key, value)?,
        "csv" => spec.output.csv = parse_bool(line, key, value)?,
        "json" => spec.output.json = parse_bool(line, key, value)?,
        _ => {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.into(),
            })
        }
    }
    Ok(())
}

pub fn tsa_name(tsa: &TsaKind) -> &'static str {
    match tsa {
        TsaKind::Uniform => "uniform",
        TsaKind::Mcmc { .. } => "mcmc",
        TsaKind::TwoStep => "two-step",
    }
}

/// Canonical emitter: `parse_config(render_config(spec))` equals `spec`.
pub fn render_config(spec: &ExperimentSpec) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let base = &spec.base;
    writeln!(out, "[sim]").unwrap();
    writeln!(out, "rate = {}", base.honest_rate).unwrap();
    writeln!(out, "latency = {}", base.latency).unwrap();
    writeln!(out, "duration = {}", base.duration).unwrap();
    writeln!(out, "tsa = {}", tsa_name(&base.tsa)).unwrap();
    if let TsaKind::Mcmc { alpha } = base.tsa {
        writeln!(out, "alpha = {alpha}").unwrap();
    }
    writeln!(out, "seed = {}", base.seed).unwrap();
    writeln!(out, "nodes = {}", base.node_count).unwrap();
    if let Some(attack) = &base.attack {
        writeln!(out, "\n[attack]").unwrap();
        writeln!(out, "adversary_rate = {}", attack.adversary_rate).unwrap();
        writeln!(out, "accept_weight = {}", attack.accept_weight).unwrap();
        writeln!(out, "eval_horizon = {}", attack.eval_horizon).unwrap();
        if let Some(at) = attack.reveal_at {
            writeln!(out, "reveal_at = {at}").unwrap();
        }
        let anchor = match attack.anchor_policy {
            AnchorPolicy::TargetParent => "target-parent",
            AnchorPolicy::Genesis => "genesis",
        };
        writeln!(out, "anchor = {anchor}").unwrap();
    }
    if !spec.sweep.is_empty() {
        writeln!(out, "\n[sweep]").unwrap();
        for axis in &spec.sweep {
            let values: Vec<String> = axis.values.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{} = {}", axis.field, values.join(",")).unwrap();
        }
    }
    writeln!(out, "\n[output]").unwrap();
    writeln!(out, "dir = {}", spec.output.dir).unwrap();
    writeln!(out, "replications = {}", spec.replications).unwrap();
    writeln!(out, "sample_interval = {}", spec.metrics.sample_interval).unwrap();
    writeln!(out, "cooldown = {}", spec.metrics.cooldown).unwrap();
    writeln!(out, "weight_threshold = {}", spec.metrics.weight_threshold).unwrap();
    writeln!(out, "trace = {}", spec.output.trace).unwrap();
    writeln!(out, "dot = {}", spec.output.dot).unwrap();
    writeln!(out, "csv = {}", spec.output.csv).unwrap();
    writeln!(out, "json = {}", spec.output.json).unwrap();
    out
}
