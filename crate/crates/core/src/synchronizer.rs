//! Sync-check relay.
//!
//! The auto-synchronization flowchart as an explicit state machine:
//!
//! ```text
//! Idle → ExciterOn → Matching ⇄ HoldWindow → CloseIssued → Synchronized
//!   (any) → Aborted
//! ```
//!
//! The relay closes only after voltage, slip, predicted angle and phase
//! sequence have all been within tolerance for `hold_time` of continuous
//! simulated time.

use crate::error::{Error, Result};
use crate::waveform::{phase_difference, wrap_deg_180, MeasurementSnapshot, PhaseSequence};

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncConfig {
    /// L-L volts.
    pub dv_max: f64,
    /// Hz.
    pub slip_max: f64,
    pub angle_window_deg: f64,
    pub hold_time: f64,
    /// Breaker closing time, used to advance the angle prediction.
    pub breaker_delay: f64,
    pub seq_required: PhaseSequence,
    /// Frequency offset the governor is biased by while hunting for the
    /// phase window, Hz.
    pub slip_target: f64,
    /// Largest timestamp difference between the two snapshots.
    pub max_skew: f64,
    /// Excitation is switched on once the rotor reaches this fraction of the
    /// target speed.
    pub excite_at_speed: f64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            dv_max: 10.0,
            slip_max: 0.1,
            angle_window_deg: 10.0,
            hold_time: 0.2,
            breaker_delay: crate::plant::DEFAULT_CLOSE_DELAY,
            seq_required: PhaseSequence::Positive,
            slip_target: 0.05,
            max_skew: 0.01,
            excite_at_speed: 0.95,
        }
    }
}

impl SyncConfig {
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        for (name, v) in [
            ("dv_max", self.dv_max),
            ("slip_max", self.slip_max),
            ("angle_window", self.angle_window_deg),
            ("hold_time", self.hold_time),
            ("slip_target", self.slip_target),
            ("max_skew", self.max_skew),
            ("excite_at_speed", self.excite_at_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err((name, format!("must be > 0, got {v}")));
            }
        }
        if self.angle_window_deg > 30.0 {
            return Err(("angle_window", format!("must be <= 30°, got {}", self.angle_window_deg)));
        }
        if self.slip_target >= self.slip_max {
            return Err(("slip_target", "must be below slip_max".into()));
        }
        if !(self.breaker_delay.is_finite() && self.breaker_delay >= 0.0) {
            return Err(("breaker_delay", format!("must be >= 0, got {}", self.breaker_delay)));
        }
        if self.seq_required == PhaseSequence::Indeterminate {
            return Err(("seq_required", "must be positive or negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyncPhase {
    Idle,
    ExciterOn,
    Matching,
    HoldWindow,
    CloseIssued,
    Synchronized,
    Aborted,
}

impl SyncPhase {
    pub const ALL: [SyncPhase; 7] = [
        SyncPhase::Idle,
        SyncPhase::ExciterOn,
        SyncPhase::Matching,
        SyncPhase::HoldWindow,
        SyncPhase::CloseIssued,
        SyncPhase::Synchronized,
        SyncPhase::Aborted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyncPhase::Idle => "Idle",
            SyncPhase::ExciterOn => "ExciterOn",
            SyncPhase::Matching => "Matching",
            SyncPhase::HoldWindow => "HoldWindow",
            SyncPhase::CloseIssued => "CloseIssued",
            SyncPhase::Synchronized => "Synchronized",
            SyncPhase::Aborted => "Aborted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Flowchart edges. Staying put is always legal.
    pub fn can_move_to(self, to: SyncPhase) -> bool {
        use SyncPhase::*;
        if self == to {
            return true;
        }
        matches!(
            (self, to),
            (Idle, ExciterOn)
                | (ExciterOn, Matching)
                | (Matching, HoldWindow)
                | (HoldWindow, Matching)
                | (HoldWindow, CloseIssued)
                | (CloseIssued, Synchronized)
        ) || (to == Aborted && self != Aborted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncState {
    pub phase: SyncPhase,
    pub hold_elapsed: f64,
    pub t_entered: f64,
    /// Phase-sequence verdict latched on entry to Matching.
    pub sequence_ok: Option<bool>,
    /// Time of the last step.
    pub t: f64,
}

impl Default for SyncState {
    fn default() -> Self {
        Self { phase: SyncPhase::Idle, hold_elapsed: 0.0, t_entered: 0.0, sequence_ok: None, t: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncStatus {
    pub dv: f64,
    pub slip: f64,
    pub dphi_deg: f64,
    pub dphi_predicted_deg: f64,
    pub sequence: PhaseSequence,
    pub seq_ok: bool,
    pub conditions_met: bool,
}

/// Compare generator and grid snapshots against the sync-check tolerances.
///
/// The angle is advanced by the slip over the breaker closing time, so the
/// window test applies to the angle at which the poles will actually touch.
pub fn evaluate_conditions(
    gen: &MeasurementSnapshot,
    grid: &MeasurementSnapshot,
    seq: PhaseSequence,
    cfg: &SyncConfig,
) -> Result<SyncStatus> {
    if (gen.t - grid.t).abs() > cfg.max_skew + TIME_EPS {
        return Err(Error::StaleMeasurement { gen_t: gen.t, grid_t: grid.t });
    }
    let dv = gen.v_rms_ll - grid.v_rms_ll;
    let slip = gen.frequency - grid.frequency;
    let dphi = phase_difference(gen.phase_deg, grid.phase_deg);
    let predicted = wrap_deg_180(dphi + 360.0 * slip * cfg.breaker_delay);
    let seq_ok = seq == cfg.seq_required;
    let conditions_met = dv.abs() <= cfg.dv_max
        && slip.abs() <= cfg.slip_max
        && predicted.abs() <= cfg.angle_window_deg
        && seq_ok;
    Ok(SyncStatus { dv, slip, dphi_deg: dphi, dphi_predicted_deg: predicted, sequence: seq, seq_ok, conditions_met })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncInputs {
    /// `None` while the generator voltage is too small to measure.
    pub status: Option<SyncStatus>,
    pub speed_ready: bool,
    pub breaker_closed: bool,
    pub trip: bool,
}

/// Advance the state machine by `dt`. Returns the new state and whether the
/// breaker close command is issued on this step.
pub fn sync_step(state: &SyncState, inputs: &SyncInputs, cfg: &SyncConfig, dt: f64) -> (SyncState, bool) {
    let t = state.t + dt;
    let mut next = SyncState { t, ..*state };
    let mut close = false;
    let met = |s: &SyncState| {
        s.sequence_ok == Some(true) && inputs.status.is_some_and(|st| st.conditions_met)
    };

    let target = if inputs.trip {
        SyncPhase::Aborted
    } else {
        match state.phase {
            SyncPhase::Idle if inputs.speed_ready => SyncPhase::ExciterOn,
            SyncPhase::ExciterOn => match inputs.status {
                Some(st) if st.sequence != PhaseSequence::Indeterminate => {
                    next.sequence_ok = Some(st.seq_ok);
                    if met(&next) { SyncPhase::HoldWindow } else { SyncPhase::Matching }
                }
                _ => SyncPhase::ExciterOn,
            },
            SyncPhase::Matching if met(&next) => SyncPhase::HoldWindow,
            SyncPhase::HoldWindow => {
                if met(&next) {
                    next.hold_elapsed = (next.hold_elapsed + dt).min(cfg.hold_time);
                    if next.hold_elapsed + TIME_EPS >= cfg.hold_time {
                        close = true;
                        SyncPhase::CloseIssued
                    } else {
                        SyncPhase::HoldWindow
                    }
                } else {
                    SyncPhase::Matching
                }
            }
            SyncPhase::CloseIssued if inputs.breaker_closed => SyncPhase::Synchronized,
            other => other,
        }
    };

    // ExciterOn with conditions already met still passes through Matching
    let target = if state.phase == SyncPhase::ExciterOn && target == SyncPhase::HoldWindow {
        SyncPhase::Matching
    } else {
        target
    };

    if target != state.phase {
        debug_assert!(state.phase.can_move_to(target), "{:?} -> {:?}", state.phase, target);
        next.phase = target;
        next.t_entered = t;
        if target != SyncPhase::HoldWindow && target != SyncPhase::CloseIssued {
            next.hold_elapsed = 0.0;
        }
        if target == SyncPhase::HoldWindow {
            next.hold_elapsed = 0.0;
        }
    }
    (next, close)
}

/// Governor frequency bias while the relay is hunting for the phase window.
///
/// With the generator exactly at grid frequency the angle between them never
/// changes, so a small constant slip is imposed. Its sign moves the machine
/// toward nominal frequency.
pub fn slip_bias(state: &SyncState, grid_frequency: f64, f_nominal: f64, cfg: &SyncConfig) -> f64 {
    match state.phase {
        SyncPhase::Matching | SyncPhase::HoldWindow | SyncPhase::CloseIssued => {
            if grid_frequency <= f_nominal {
                cfg.slip_target
            } else {
                -cfg.slip_target
            }
        }
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn snap(v: f64, f: f64, phase: f64, t: f64) -> MeasurementSnapshot {
        MeasurementSnapshot { v_rms_ll: v, frequency: f, phase_deg: phase, i_rms: 0.0, t }
    }

    fn status(met: bool) -> SyncStatus {
        SyncStatus {
            dv: 0.0,
            slip: 0.0,
            dphi_deg: 0.0,
            dphi_predicted_deg: 0.0,
            sequence: PhaseSequence::Positive,
            seq_ok: true,
            conditions_met: met,
        }
    }

    fn inputs(status: Option<SyncStatus>) -> SyncInputs {
        SyncInputs { status, speed_ready: true, breaker_closed: false, trip: false }
    }

    fn in_matching() -> SyncState {
        SyncState { phase: SyncPhase::Matching, sequence_ok: Some(true), ..SyncState::default() }
    }

    #[test]
    fn identical_snapshots_meet_conditions() {
        let s = snap(400.0, 50.0, 123.0, 1.0);
        let st = evaluate_conditions(&s, &s, PhaseSequence::Positive, &SyncConfig::default()).unwrap();
        assert!(st.conditions_met);
        assert_eq!(st.dphi_deg, 0.0);
    }

    #[test]
    fn large_slip_fails() {
        let st = evaluate_conditions(
            &snap(400.0, 50.5, 0.0, 1.0),
            &snap(400.0, 50.0, 0.0, 1.0),
            PhaseSequence::Positive,
            &SyncConfig::default(),
        )
        .unwrap();
        assert!(!st.conditions_met);
    }

    #[test]
    fn predicted_angle_compensates_breaker_delay() {
        let cfg = SyncConfig { breaker_delay: 0.06, ..SyncConfig::default() };
        let st = evaluate_conditions(
            &snap(400.0, 50.06, 358.7, 1.0),
            &snap(400.0, 50.0, 0.0, 1.0),
            PhaseSequence::Positive,
            &cfg,
        )
        .unwrap();
        assert!((st.dphi_deg + 1.3).abs() < 1e-9);
        // brute force: advance both angles over the delay in 1 µs steps
        let (mut g, mut r) = (358.7f64, 0.0f64);
        for _ in 0..60_000 {
            g += 360.0 * 50.06 * 1e-6;
            r += 360.0 * 50.0 * 1e-6;
        }
        let brute = phase_difference(g, r);
        assert!((st.dphi_predicted_deg - brute).abs() < 1e-6);
        assert!(st.dphi_predicted_deg.abs() < 0.01, "{}", st.dphi_predicted_deg);
    }

    #[test]
    fn wrong_sequence_or_stale_snapshot() {
        let s = snap(400.0, 50.0, 0.0, 1.0);
        let st = evaluate_conditions(&s, &s, PhaseSequence::Negative, &SyncConfig::default()).unwrap();
        assert!(!st.seq_ok && !st.conditions_met);
        let old = snap(400.0, 50.0, 0.0, 0.5);
        assert!(matches!(
            evaluate_conditions(&s, &old, PhaseSequence::Positive, &SyncConfig::default()),
            Err(Error::StaleMeasurement { .. })
        ));
    }

    #[test]
    fn continuous_hold_closes_once() {
        let cfg = SyncConfig::default();
        let mut s = in_matching();
        let mut closes = 0;
        let mut first_met = None;
        for k in 0..100 {
            let (n, c) = sync_step(&s, &inputs(Some(status(true))), &cfg, 0.01);
            if first_met.is_none() {
                first_met = Some(k);
            }
            if c {
                closes += 1;
                // conditions held from step 0 to step k: k·dt ≥ hold_time
                assert!(k as f64 * 0.01 >= cfg.hold_time - 1e-9);
                assert_eq!(k, 20);
            }
            s = n;
        }
        assert_eq!(closes, 1);
        assert_eq!(s.phase, SyncPhase::CloseIssued);
        let (s, _) = sync_step(&s, &SyncInputs { breaker_closed: true, ..inputs(Some(status(true))) }, &cfg, 0.01);
        assert_eq!(s.phase, SyncPhase::Synchronized);
    }

    #[test]
    fn flicker_resets_hold() {
        let cfg = SyncConfig::default();
        let mut s = in_matching();
        for k in 0..40 {
            let met = k != 10;
            let (n, c) = sync_step(&s, &inputs(Some(status(met))), &cfg, 0.01);
            assert!(!c || k >= 31, "closed at {k}");
            if k == 10 {
                assert_eq!(n.phase, SyncPhase::Matching);
                assert_eq!(n.hold_elapsed, 0.0);
            }
            s = n;
        }
    }

    #[test]
    fn wrong_sequence_never_leaves_matching() {
        let cfg = SyncConfig::default();
        let mut s = SyncState { phase: SyncPhase::ExciterOn, ..SyncState::default() };
        let unknown = SyncStatus { sequence: PhaseSequence::Indeterminate, seq_ok: false, ..status(false) };
        s = sync_step(&s, &inputs(Some(unknown)), &cfg, 0.01).0;
        assert_eq!(s.phase, SyncPhase::ExciterOn, "waits for a determinate sequence");
        let bad = SyncStatus { sequence: PhaseSequence::Negative, seq_ok: false, conditions_met: false, ..status(true) };
        s = sync_step(&s, &inputs(Some(bad)), &cfg, 0.01).0;
        assert_eq!(s.phase, SyncPhase::Matching);
        // even if later statuses claim all is well, the latched verdict holds
        for _ in 0..100 {
            s = sync_step(&s, &inputs(Some(status(true))), &cfg, 0.01).0;
            assert_eq!(s.phase, SyncPhase::Matching);
        }
    }

    #[test]
    fn trip_aborts_from_anywhere() {
        for phase in SyncPhase::ALL {
            let s = SyncState { phase, ..SyncState::default() };
            let (n, c) = sync_step(&s, &SyncInputs { trip: true, ..inputs(None) }, &SyncConfig::default(), 0.01);
            assert_eq!(n.phase, SyncPhase::Aborted);
            assert!(!c);
        }
    }

    #[test]
    fn transition_table() {
        use SyncPhase::*;
        let legal = [
            (Idle, ExciterOn),
            (ExciterOn, Matching),
            (Matching, HoldWindow),
            (HoldWindow, Matching),
            (HoldWindow, CloseIssued),
            (CloseIssued, Synchronized),
        ];
        for from in SyncPhase::ALL {
            for to in SyncPhase::ALL {
                let expected = from == to || legal.contains(&(from, to)) || (to == Aborted && from != Aborted);
                assert_eq!(from.can_move_to(to), expected, "{from:?} -> {to:?}");
            }
        }
        assert_eq!(SyncPhase::parse("HoldWindow"), Some(HoldWindow));
    }

    #[test]
    fn bias_points_toward_nominal() {
        let cfg = SyncConfig::default();
        let s = in_matching();
        assert_eq!(slip_bias(&s, 49.6, 50.0, &cfg), 0.05);
        assert_eq!(slip_bias(&s, 50.4, 50.0, &cfg), -0.05);
        assert_eq!(slip_bias(&SyncState::default(), 49.6, 50.0, &cfg), 0.0);
    }

    proptest! {
        #[test]
        fn random_inputs_follow_flowchart(
            steps in proptest::collection::vec((any::<bool>(), any::<bool>(), any::<bool>(), 0u8..20), 1..400)
        ) {
            let cfg = SyncConfig::default();
            let mut s = SyncState::default();
            let mut closes = 0;
            let mut held_since: Option<f64> = None;
            for (live, met, closed, trip) in steps {
                let inp = SyncInputs {
                    status: live.then_some(status(met)),
                    speed_ready: true,
                    breaker_closed: closed,
                    trip: trip == 0,
                };
                let (n, c) = sync_step(&s, &inp, &cfg, 0.01);
                prop_assert!(s.phase.can_move_to(n.phase));
                prop_assert!(n.hold_elapsed <= cfg.hold_time);
                let met_now = live && met && n.sequence_ok == Some(true);
                if met_now { held_since.get_or_insert(s.t); } else { held_since = None; }
                if c {
                    closes += 1;
                    let since = held_since.unwrap();
                    prop_assert!(n.t - since >= cfg.hold_time - 1e-9);
                }
                s = n;
            }
            prop_assert!(closes <= 1);
        }
    }
}
