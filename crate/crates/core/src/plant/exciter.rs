use log::debug;

/// Every raise/lower pulse lasts exactly this long.
pub const PULSE_DURATION: f64 = 0.25;

/// Remaining pulse time below this counts as finished (float residue of
/// repeated `remaining -= dt`).
const PULSE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExciterParams {
    /// Field ramp rate while a pulse is active, V/s.
    pub slew: f64,
    pub field_max: f64,
}

impl Default for ExciterParams {
    fn default() -> Self {
        Self { slew: 2.0, field_max: 60.0 }
    }
}

impl ExciterParams {
    /// Field change produced by one full pulse.
    pub fn pulse_step(&self) -> f64 {
        self.slew * PULSE_DURATION
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivePulse {
    pub direction: PulseDirection,
    pub remaining: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExciterState {
    pub enabled: bool,
    pub field_voltage: f64,
    pub active_pulse: Option<ActivePulse>,
}

/// The four module pins plus "no action".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExciterCommand {
    On,
    Off,
    PulseUp,
    PulseDown,
    None,
}

/// Apply `cmd`, then advance the field by `dt`.
///
/// Pulses are ignored while the module is off or another pulse is running.
/// While off, the field decays toward zero at the slew rate.
pub fn step_exciter(
    state: &ExciterState,
    cmd: ExciterCommand,
    params: &ExciterParams,
    dt: f64,
) -> ExciterState {
    let mut next = *state;
    match cmd {
        ExciterCommand::On => next.enabled = true,
        ExciterCommand::Off => {
            next.enabled = false;
            next.active_pulse = None;
        }
        ExciterCommand::PulseUp | ExciterCommand::PulseDown => {
            if !next.enabled {
                debug!("exciter pulse {cmd:?} ignored: module off");
            } else if next.active_pulse.is_some() {
                debug!("exciter pulse {cmd:?} ignored: pulse already active");
            } else {
                let direction = if cmd == ExciterCommand::PulseUp {
                    PulseDirection::Up
                } else {
                    PulseDirection::Down
                };
                next.active_pulse = Some(ActivePulse { direction, remaining: PULSE_DURATION });
            }
        }
        ExciterCommand::None => {}
    }

    if !(dt > 0.0) {
        return next;
    }

    if let Some(mut pulse) = next.active_pulse {
        let ramp = params.slew * dt.min(pulse.remaining);
        let delta = match pulse.direction {
            PulseDirection::Up => ramp,
            PulseDirection::Down => -ramp,
        };
        next.field_voltage = (next.field_voltage + delta).clamp(0.0, params.field_max);
        pulse.remaining -= dt;
        next.active_pulse = (pulse.remaining > PULSE_EPS).then_some(pulse);
    } else if !next.enabled {
        next.field_voltage = (next.field_voltage - params.slew * dt).max(0.0);
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn enabled(field: f64) -> ExciterState {
        ExciterState { enabled: true, field_voltage: field, active_pulse: None }
    }

    #[test]
    fn one_pulse_raises_field_by_half_volt() {
        let p = ExciterParams::default();
        let mut s = step_exciter(&enabled(10.0), ExciterCommand::PulseUp, &p, 1e-3);
        let mut increments = vec![s.field_voltage - 10.0];
        let mut steps = 1;
        while s.active_pulse.is_some() {
            let before = s.field_voltage;
            s = step_exciter(&s, ExciterCommand::None, &p, 1e-3);
            increments.push(s.field_voltage - before);
            steps += 1;
        }
        assert_eq!(steps, 250);
        let total: f64 = increments.iter().sum();
        assert!((total - 0.5).abs() < 1e-9, "{total}");
        assert!((s.field_voltage - 10.5).abs() < 1e-9);
        // idle afterwards
        let idle = step_exciter(&s, ExciterCommand::None, &p, 1e-3);
        assert_eq!(idle.field_voltage, s.field_voltage);
    }

    #[test]
    fn overlapping_pulse_is_ignored() {
        let p = ExciterParams::default();
        let s = step_exciter(&enabled(10.0), ExciterCommand::PulseUp, &p, 1e-3);
        let remaining = s.active_pulse.unwrap().remaining;
        let t = step_exciter(&s, ExciterCommand::PulseDown, &p, 1e-3);
        let pulse = t.active_pulse.unwrap();
        assert_eq!(pulse.direction, PulseDirection::Up);
        assert!((pulse.remaining - (remaining - 1e-3)).abs() < 1e-12);
    }

    #[test]
    fn lower_pulse_clamps_at_zero() {
        let p = ExciterParams::default();
        let mut s = step_exciter(&enabled(0.0), ExciterCommand::PulseDown, &p, 1e-3);
        while s.active_pulse.is_some() {
            assert_eq!(s.field_voltage, 0.0);
            s = step_exciter(&s, ExciterCommand::None, &p, 1e-3);
        }
        assert_eq!(s.field_voltage, 0.0);
    }

    #[test]
    fn pulses_need_module_on_and_off_decays() {
        let p = ExciterParams::default();
        let off = ExciterState { enabled: false, field_voltage: 1.0, active_pulse: None };
        let s = step_exciter(&off, ExciterCommand::PulseUp, &p, 0.1);
        assert!(s.active_pulse.is_none());
        assert!((s.field_voltage - 0.8).abs() < 1e-12);
        let s = step_exciter(&enabled(1.0), ExciterCommand::Off, &p, 1.0);
        assert!(!s.enabled);
        assert_eq!(s.field_voltage, 0.0);
        let s = step_exciter(&s, ExciterCommand::On, &p, 1.0);
        assert!(s.enabled);
    }

    proptest! {
        #[test]
        fn field_stays_in_range(cmds in proptest::collection::vec(0u8..5, 1..2000), start in 0.0f64..60.0) {
            let p = ExciterParams::default();
            let mut s = enabled(start);
            let mut pulse_steps = 0usize;
            for c in cmds {
                let cmd = match c {
                    0 => ExciterCommand::On,
                    1 => ExciterCommand::PulseUp,
                    2 => ExciterCommand::PulseDown,
                    3 => ExciterCommand::None,
                    _ => ExciterCommand::None,
                };
                let was_active = s.active_pulse.is_some();
                s = step_exciter(&s, cmd, &p, 1e-3);
                prop_assert!(s.field_voltage >= 0.0 && s.field_voltage <= p.field_max);
                if let Some(pulse) = s.active_pulse {
                    prop_assert!(pulse.remaining > 0.0 && pulse.remaining <= PULSE_DURATION);
                    pulse_steps = if was_active { pulse_steps + 1 } else { 1 };
                } else if was_active {
                    // pulse covered exactly 250 ms of steps
                    prop_assert_eq!(pulse_steps + 1, 250);
                    pulse_steps = 0;
                }
            }
        }
    }
}
