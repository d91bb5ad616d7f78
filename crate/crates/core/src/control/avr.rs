use crate::plant::{ExciterCommand, ExciterState, PULSE_DURATION};

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvrConfig {
    /// L-L volts; wider than the voltage change of one pulse.
    pub deadband_v: f64,
    /// Quiet time after a pulse ends before the next may start.
    pub min_pulse_gap: f64,
}

impl Default for AvrConfig {
    fn default() -> Self {
        Self { deadband_v: 5.0, min_pulse_gap: 0.25 }
    }
}

impl AvrConfig {
    pub fn pulse_duration(&self) -> f64 {
        PULSE_DURATION
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AvrState {
    pub last_command_at: Option<f64>,
}

impl AvrState {
    fn ready(&self, cfg: &AvrConfig, t: f64) -> bool {
        self.last_command_at
            .is_none_or(|last| t - last + TIME_EPS >= PULSE_DURATION + cfg.min_pulse_gap)
    }
}

/// Raise when the target exceeds the measurement by more than the deadband,
/// lower in the mirror case.
pub fn pulse_decision(target: f64, measured: f64, deadband: f64) -> ExciterCommand {
    if target - measured > deadband {
        ExciterCommand::PulseUp
    } else if measured - target > deadband {
        ExciterCommand::PulseDown
    } else {
        ExciterCommand::None
    }
}

/// Voltage matching before synchronization: pulse the exciter toward the
/// grid voltage.
pub fn avr_step(
    cfg: &AvrConfig,
    state: &AvrState,
    gen_v_ll: f64,
    grid_v_ll: f64,
    exciter: &ExciterState,
    t: f64,
) -> (ExciterCommand, AvrState) {
    gated(cfg, state, exciter, t, pulse_decision(grid_v_ll, gen_v_ll, cfg.deadband_v))
}

pub(crate) fn gated(
    cfg: &AvrConfig,
    state: &AvrState,
    exciter: &ExciterState,
    t: f64,
    wanted: ExciterCommand,
) -> (ExciterCommand, AvrState) {
    if wanted == ExciterCommand::None
        || !exciter.enabled
        || exciter.active_pulse.is_some()
        || !state.ready(cfg, t)
    {
        return (ExciterCommand::None, *state);
    }
    (wanted, AvrState { last_command_at: Some(t) })
}
