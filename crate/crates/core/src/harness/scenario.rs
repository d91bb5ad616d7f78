//! Scenario files: flat `key = value` lines, `#` comments.
//!
//! Every key is optional; missing keys keep their defaults and unknown keys
//! are rejected. [`ScenarioConfig::to_text`] writes every key, so a written
//! file parses back to an identical config.

use crate::control::{AvrConfig, GovernorConfig, PowerControlConfig, PowerSetpoint};
use crate::error::{Error, Result};
use crate::plant::{ExciterParams, GeneratorParams, GridSource, GridStep, DEFAULT_CLOSE_DELAY};
use crate::protection::ProtectionSettings;
use crate::synchronizer::SyncConfig;
use crate::waveform::{PhaseSequence, DEFAULT_SAMPLE_RATE, DEFAULT_WINDOW};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub duration: f64,
    pub dt: f64,
    pub control_period: f64,
    pub sample_rate: f64,
    pub window: f64,
    /// 0 disables measurement noise.
    pub rng_seed: u64,
    /// Uniform noise half-width as a fraction of the nominal phase peak.
    pub noise_level: f64,
    pub precision: usize,

    pub generator: GeneratorParams,
    /// Sequence of the generator terminals as wired to the relay.
    pub generator_sequence: PhaseSequence,
    pub initial_rpm: f64,
    pub initial_angle: f64,
    pub initial_field: f64,

    pub exciter: ExciterParams,
    pub grid: GridSource,
    pub breaker_close_delay: f64,

    pub governor: GovernorConfig,
    /// Added to the governor frequency target; used to force a standing slip.
    pub freq_offset: f64,
    pub avr: AvrConfig,

    pub power: PowerControlConfig,
    pub setpoint: PowerSetpoint,

    pub sync: SyncConfig,
    pub protection: ProtectionSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration: 120.0,
            dt: 0.001,
            control_period: 0.01,
            sample_rate: DEFAULT_SAMPLE_RATE,
            window: DEFAULT_WINDOW,
            rng_seed: 0,
            noise_level: 0.01,
            precision: 6,
            generator: GeneratorParams::default(),
            generator_sequence: PhaseSequence::Positive,
            initial_rpm: 0.0,
            initial_angle: 0.0,
            initial_field: 0.0,
            exciter: ExciterParams::default(),
            grid: GridSource::default(),
            breaker_close_delay: DEFAULT_CLOSE_DELAY,
            governor: GovernorConfig::default(),
            freq_offset: 0.0,
            avr: AvrConfig::default(),
            power: PowerControlConfig::default(),
            setpoint: PowerSetpoint::default(),
            sync: SyncConfig::default(),
            protection: ProtectionSettings::default(),
        }
    }
}

type Getter = fn(&ScenarioConfig) -> String;
type Setter = fn(&mut ScenarioConfig, &str) -> std::result::Result<(), String>;

struct Field {
    key: &'static str,
    get: Getter,
    set: Setter,
}

fn num(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("expected a number, got `{s}`"))
}

fn int<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse::<T>().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

fn boolean(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

fn sequence(s: &str) -> std::result::Result<PhaseSequence, String> {
    PhaseSequence::parse(s).ok_or_else(|| format!("expected positive or negative, got `{s}`"))
}

fn schedule_text(steps: &[GridStep]) -> String {
    steps.iter().map(|s| format!("{} {} {}", s.t, s.v_ll, s.frequency)).collect::<Vec<_>>().join("; ")
}

fn parse_schedule(s: &str) -> std::result::Result<Vec<GridStep>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let v: Vec<&str> = p.split_whitespace().collect();
            if v.len() != 3 {
                return Err(format!("schedule entry `{p}` must be `t v_ll frequency`"));
            }
            Ok(GridStep { t: num(v[0])?, v_ll: num(v[1])?, frequency: num(v[2])? })
        })
        .collect()
}

macro_rules! f {
    ($key:literal, $($p:ident).+) => {
        Field {
            key: $key,
            get: |c| format!("{}", c.$($p).+),
            set: |c, v| { c.$($p).+ = num(v)?; Ok(()) },
        }
    };
}

macro_rules! delay {
    ($key:literal, $i:expr) => {
        Field {
            key: $key,
            get: |c| format!("{}", c.protection.delays[$i]),
            set: |c, v| { c.protection.delays[$i] = num(v)?; Ok(()) },
        }
    };
}

fn fields() -> Vec<Field> {
    vec![
        f!("duration", duration),
        f!("dt", dt),
        f!("control_period", control_period),
        f!("sample_rate", sample_rate),
        f!("window", window),
        Field {
            key: "rng_seed",
            get: |c| c.rng_seed.to_string(),
            set: |c, v| { c.rng_seed = int(v)?; Ok(()) },
        },
        f!("noise.level", noise_level),
        Field {
            key: "precision",
            get: |c| c.precision.to_string(),
            set: |c, v| { c.precision = int(v)?; Ok(()) },
        },
        f!("generator.rated_power", generator.rated_power),
        f!("generator.v_ll", generator.v_ll_nominal),
        f!("generator.v_ln", generator.v_ln_nominal),
        f!("generator.i_rated", generator.i_rated),
        f!("generator.frequency", generator.f_nominal),
        Field {
            key: "generator.poles",
            get: |c| c.generator.poles.to_string(),
            set: |c, v| { c.generator.poles = int(v)?; Ok(()) },
        },
        f!("generator.exciter_i_rated", generator.exciter_i_rated),
        f!("generator.inertia", generator.inertia),
        f!("generator.damping", generator.damping),
        f!("generator.friction", generator.friction),
        f!("generator.k_emf", generator.k_emf),
        f!("generator.x_sync", generator.x_sync),
        Field {
            key: "generator.phase_sequence",
            get: |c| c.generator_sequence.name().to_string(),
            set: |c, v| { c.generator_sequence = sequence(v)?; Ok(()) },
        },
        f!("generator.initial_rpm", initial_rpm),
        f!("generator.initial_angle", initial_angle),
        f!("generator.initial_field", initial_field),
        f!("exciter.slew", exciter.slew),
        f!("exciter.field_max", exciter.field_max),
        f!("grid.v_ll", grid.v_ll),
        f!("grid.frequency", grid.frequency),
        f!("grid.phase0", grid.phase0_deg),
        Field {
            key: "grid.schedule",
            get: |c| schedule_text(&c.grid.schedule),
            set: |c, v| { c.grid.schedule = parse_schedule(v)?; Ok(()) },
        },
        f!("breaker.close_delay", breaker_close_delay),
        f!("governor.kp", governor.pid.kp),
        f!("governor.ki", governor.pid.ki),
        f!("governor.kd", governor.pid.kd),
        f!("governor.t_max", governor.pid.out_max),
        f!("governor.freq_offset", freq_offset),
        f!("avr.deadband", avr.deadband_v),
        f!("avr.min_pulse_gap", avr.min_pulse_gap),
        Field {
            key: "power.enabled",
            get: |c| c.setpoint.enabled.to_string(),
            set: |c, v| { c.setpoint.enabled = boolean(v)?; Ok(()) },
        },
        f!("power.p_set", setpoint.p_set),
        f!("power.q_set", setpoint.q_set),
        f!("power.q_deadband", power.q_deadband),
        f!("power.kp", power.pid.kp),
        f!("power.ki", power.pid.ki),
        f!("power.kd", power.pid.kd),
        f!("power.t_max", power.pid.out_max),
        f!("sync.dv_max", sync.dv_max),
        f!("sync.slip_max", sync.slip_max),
        f!("sync.angle_window", sync.angle_window_deg),
        f!("sync.hold_time", sync.hold_time),
        f!("sync.slip_target", sync.slip_target),
        f!("sync.max_skew", sync.max_skew),
        f!("sync.excite_at_speed", sync.excite_at_speed),
        Field {
            key: "sync.phase_sequence",
            get: |c| c.sync.seq_required.name().to_string(),
            set: |c, v| { c.sync.seq_required = sequence(v)?; Ok(()) },
        },
        f!("protection.i_pickup", protection.i_pickup),
        f!("protection.v_over", protection.v_over),
        f!("protection.v_under", protection.v_under),
        f!("protection.f_over", protection.f_over),
        f!("protection.f_under", protection.f_under),
        delay!("protection.delay_oc", 0),
        delay!("protection.delay_ov", 1),
        delay!("protection.delay_uv", 2),
        delay!("protection.delay_of", 3),
        delay!("protection.delay_uf", 4),
        f!("protection.uv_arm", protection.uv_armed_above),
        f!("protection.f_block_v", protection.f_block_below_v),
    ]
}

/// All recognised keys in file order.
pub fn scenario_keys() -> Vec<&'static str> {
    fields().iter().map(|f| f.key).collect()
}

/// Scenario key for a field name reported by a component `validate`.
fn key_for(prefix: &str, field: &str) -> String {
    let field = match field {
        "v_ll_nominal" => "v_ll",
        "v_ln_nominal" => "v_ln",
        "f_nominal" => "frequency",
        "out_max" | "out_min" => "t_max",
        "seq_required" => "phase_sequence",
        other => other,
    };
    format!("{prefix}.{field}")
}

fn bad(key: &str, msg: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), msg: msg.into() }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(key, format!("must be > 0, got {v}")))
    }
}

impl ScenarioConfig {
    /// Check every cross-field and per-type invariant, naming the first
    /// offending key.
    pub fn validate(&self) -> Result<()> {
        positive("duration", self.duration)?;
        positive("dt", self.dt)?;
        if self.dt > 0.005 {
            return Err(bad("dt", format!("must be <= 0.005, got {}", self.dt)));
        }
        positive("control_period", self.control_period)?;
        let ratio = self.control_period / self.dt;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-6 {
            return Err(bad("control_period", "must be a whole multiple of dt"));
        }
        positive("sample_rate", self.sample_rate)?;
        let spp = self.sample_rate * self.dt;
        if spp < 1.0 - 1e-9 || (spp - spp.round()).abs() > 1e-6 {
            return Err(bad("sample_rate", "must give a whole number of samples per dt"));
        }
        positive("window", self.window)?;
        if self.window * self.sample_rate < 16.0 {
            return Err(bad("window", "must hold at least 16 samples"));
        }
        if !(self.noise_level.is_finite() && (0.0..=0.2).contains(&self.noise_level)) {
            return Err(bad("noise.level", format!("must be in [0, 0.2], got {}", self.noise_level)));
        }
        if self.precision > 15 {
            return Err(bad("precision", "must be <= 15"));
        }
        self.generator.validate().map_err(|(k, m)| bad(&key_for("generator", k), m))?;
        if self.generator_sequence == PhaseSequence::Indeterminate {
            return Err(bad("generator.phase_sequence", "must be positive or negative"));
        }
        if !(self.initial_rpm.is_finite() && self.initial_rpm >= 0.0) {
            return Err(bad("generator.initial_rpm", "must be >= 0"));
        }
        if !self.initial_angle.is_finite() {
            return Err(bad("generator.initial_angle", "must be finite"));
        }
        if !(self.initial_field.is_finite() && (0.0..=self.exciter.field_max).contains(&self.initial_field)) {
            return Err(bad("generator.initial_field", "must be in [0, exciter.field_max]"));
        }
        positive("exciter.slew", self.exciter.slew)?;
        positive("exciter.field_max", self.exciter.field_max)?;
        self.grid.validate().map_err(|(k, m)| bad(&key_for("grid", k), m))?;
        if self.grid.v_ll <= 0.0 {
            return Err(bad("grid.v_ll", "must be > 0"));
        }
        if !(self.breaker_close_delay.is_finite() && self.breaker_close_delay >= 0.0) {
            return Err(bad("breaker.close_delay", "must be >= 0"));
        }
        self.governor.pid.validate().map_err(|(k, m)| bad(&key_for("governor", k), m))?;
        if !self.freq_offset.is_finite() {
            return Err(bad("governor.freq_offset", "must be finite"));
        }
        if !(self.avr.deadband_v.is_finite() && self.avr.deadband_v >= 0.0) {
            return Err(bad("avr.deadband", "must be >= 0"));
        }
        if !(self.avr.min_pulse_gap.is_finite() && self.avr.min_pulse_gap >= 0.0) {
            return Err(bad("avr.min_pulse_gap", "must be >= 0"));
        }
        self.power.pid.validate().map_err(|(k, m)| bad(&key_for("power", k), m))?;
        if !(self.power.q_deadband.is_finite() && self.power.q_deadband >= 0.0) {
            return Err(bad("power.q_deadband", "must be >= 0"));
        }
        if !(self.setpoint.p_set.is_finite() && self.setpoint.p_set >= 0.0) {
            return Err(bad("power.p_set", "must be >= 0"));
        }
        if !self.setpoint.q_set.is_finite() {
            return Err(bad("power.q_set", "must be finite"));
        }
        self.sync_config().validate().map_err(|(k, m)| bad(&key_for("sync", k), m))?;
        self.protection.validate().map_err(|(k, m)| bad(&key_for("protection", k), m))?;
        Ok(())
    }

    /// Sync tolerances with the breaker delay taken from the breaker itself.
    pub fn sync_config(&self) -> SyncConfig {
        SyncConfig { breaker_delay: self.breaker_close_delay, ..self.sync }
    }

    /// Every key with its current value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in fields() {
            out.push_str(f.key);
            out.push_str(" = ");
            out.push_str(&(f.get)(self));
            out.push('\n');
        }
        out
    }

    /// Current value of `key` in scenario-file syntax.
    pub fn get(&self, key: &str) -> Option<String> {
        fields().iter().find(|f| f.key == key).map(|f| (f.get)(self))
    }

    /// Set one key from its scenario-file text. The whole configuration is
    /// not re-validated; [`ScenarioConfig::validate`] does that.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let table = fields();
        let field = table.iter().find(|f| f.key == key).ok_or_else(|| bad(key, "unknown key"))?;
        (field.set)(self, value.trim()).map_err(|msg| bad(key, msg))
    }
}

/// Parse and validate a scenario document.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig> {
    let table = fields();
    let mut cfg = ScenarioConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(Error::Parse { line, msg: format!("expected `key = value`, got `{body}`") });
        };
        let key = key.trim();
        let value = value.trim();
        let field = table
            .iter()
            .find(|f| f.key == key)
            .ok_or_else(|| Error::Parse { line, msg: format!("unknown key `{key}`") })?;
        if !seen.insert(key) {
            return Err(Error::Parse { line, msg: format!("duplicate key `{key}`") });
        }
        (field.set)(&mut cfg, value).map_err(|msg| Error::Parse { line, msg: format!("`{key}`: {msg}") })?;
    }
    cfg.validate()?;
    Ok(cfg)
}
