use super::avr::{gated, pulse_decision, AvrConfig, AvrState};
use super::pid::{pid_step, PidParams, PidState};
use crate::error::{Error, Result};
use crate::plant::{ExciterCommand, ExciterState};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerSetpoint {
    pub p_set: f64,
    pub q_set: f64,
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerControlConfig {
    /// Error in W, output in N·m.
    pub pid: PidParams,
    pub q_deadband: f64,
}

impl Default for PowerControlConfig {
    fn default() -> Self {
        Self {
            pid: PidParams { kp: 0.0002, ki: 0.002, kd: 0.0, out_min: 0.0, out_max: 6.4 },
            q_deadband: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerControlOutput {
    pub torque_command: f64,
    pub exciter_command: ExciterCommand,
    pub pid_state: PidState,
    pub avr_state: AvrState,
}

/// Grid-connected regulation: prime-mover torque tracks `p_set`, exciter
/// pulses track `q_set` with a var deadband.
#[allow(clippy::too_many_arguments)]
pub fn power_control_step(
    sp: &PowerSetpoint,
    measured_p: f64,
    measured_q: f64,
    cfg: &PowerControlConfig,
    pid_state: &PidState,
    avr_cfg: &AvrConfig,
    avr_state: &AvrState,
    exciter: &ExciterState,
    breaker_closed: bool,
    t: f64,
    dt: f64,
) -> Result<PowerControlOutput> {
    if !breaker_closed {
        return Err(Error::InvalidState("power control needs the breaker closed".into()));
    }
    if !sp.enabled {
        return Err(Error::InvalidState("power setpoint is disabled".into()));
    }
    let (torque, pid_state) = pid_step(&cfg.pid, pid_state, sp.p_set, measured_p, dt)?;
    let wanted = pulse_decision(sp.q_set, measured_q, cfg.q_deadband);
    let (exciter_command, avr_state) = gated(avr_cfg, avr_state, exciter, t, wanted);
    Ok(PowerControlOutput {
        torque_command: torque.max(0.0),
        exciter_command,
        pid_state,
        avr_state,
    })
}
