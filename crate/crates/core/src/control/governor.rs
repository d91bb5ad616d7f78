use super::pid::{pid_step, PidParams, PidState};
use crate::error::Result;
use crate::plant::rpm_from_frequency;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorConfig {
    /// Error in rpm, output in N·m; `out_max` is the prime-mover torque limit.
    pub pid: PidParams,
}

impl Default for GovernorConfig {
    fn default() -> Self {
        Self { pid: PidParams { kp: 0.2, ki: 0.05, kd: 0.0, out_min: 0.0, out_max: 6.4 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorOutput {
    pub torque_command: f64,
    pub setpoint_rpm: f64,
    pub state: PidState,
}

/// Speed loop: the setpoint is the synchronous speed for `target_freq`.
pub fn governor_step(
    cfg: &GovernorConfig,
    state: &PidState,
    target_freq: f64,
    gen_speed_rpm: f64,
    poles: u32,
    dt: f64,
) -> Result<GovernorOutput> {
    let setpoint_rpm = rpm_from_frequency(target_freq, poles)?;
    let (out, state) = pid_step(&cfg.pid, state, setpoint_rpm, gen_speed_rpm, dt)?;
    Ok(GovernorOutput {
        torque_command: out.clamp(0.0f64.max(cfg.pid.out_min), cfg.pid.out_max),
        setpoint_rpm,
        state,
    })
}
