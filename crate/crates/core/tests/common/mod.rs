#![allow(dead_code)]

use sync_relay::harness::{EventKind, SimulationLog};
use sync_relay::plant::PULSE_DURATION;
use sync_relay::synchronizer::SyncPhase;
use sync_relay::{load_scenario, run_scenario, ScenarioConfig};

pub const HOLD_TIME: f64 = 0.2;

pub fn scenario(text: &str) -> ScenarioConfig {
    load_scenario(text).unwrap_or_else(|e| panic!("bad scenario: {e}\n{text}"))
}

pub fn run(text: &str) -> (ScenarioConfig, SimulationLog) {
    let cfg = scenario(text);
    let log = run_scenario(&cfg).unwrap_or_else(|e| panic!("run failed: {e}\n{text}"));
    (cfg, log)
}

fn first_time(log: &SimulationLog, kind: EventKind) -> Option<f64> {
    log.events_of(kind).next().map(|e| e.t)
}

/// Pulse contract: every pulse ramps the field for 250 ms ± 1 step, pulses
/// never overlap and Up/Down are never issued together. Pulses cut short by
/// an abort are not judged. Returns the number of pulses checked.
pub fn audit_pulses(log: &SimulationLog, dt: f64) -> Result<usize, String> {
    let abort = first_time(log, EventKind::Aborted).unwrap_or(f64::INFINITY);
    let pulses: Vec<(f64, f64)> = log
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::PulseUp => Some((e.t, 1.0)),
            EventKind::PulseDown => Some((e.t, -1.0)),
            _ => None,
        })
        .collect();

    for w in pulses.windows(2) {
        if (w[1].0 - w[0].0).abs() < dt / 2.0 {
            return Err(format!("two pulses at t={}", w[0].0));
        }
        if w[1].0 < w[0].0 + PULSE_DURATION - dt / 2.0 {
            return Err(format!("pulse at t={} starts before the one at t={} ends", w[1].0, w[0].0));
        }
    }

    // runs of consecutive rows over which the field moves in one direction
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    for k in 1..log.rows.len() {
        let d = log.rows[k].field_v - log.rows[k - 1].field_v;
        if d == 0.0 {
            continue;
        }
        let s = d.signum();
        match runs.last_mut() {
            Some((_, end, sign)) if *end == k - 1 && *sign == s => *end = k,
            _ => runs.push((k, k, s)),
        }
    }
    let judged: Vec<_> = runs.iter().filter(|r| log.rows[r.0].t < abort).collect();

    let mut checked = 0;
    for &(t, sign) in &pulses {
        if t + PULSE_DURATION > abort {
            continue;
        }
        let k0 = (t / dt).round() as usize;
        let Some(&&(start, end, s)) = judged.iter().find(|r| r.0 + 1 >= k0 && r.0 <= k0 + 2) else {
            return Err(format!("pulse at t={t} moved no field"));
        };
        if s != sign {
            return Err(format!("pulse at t={t} moved the field the wrong way"));
        }
        let len = (end + 1 - start) as f64 * dt;
        if (len - PULSE_DURATION).abs() > dt + 1e-9 {
            return Err(format!("pulse at t={t} lasted {len:.4} s"));
        }
        checked += 1;
    }
    let explained = judged.iter().filter(|r| {
        pulses.iter().any(|&(t, _)| {
            let k0 = (t / dt).round() as usize;
            r.0 + 1 >= k0 && r.0 <= k0 + 2
        })
    });
    if explained.count() != judged.len() {
        return Err("field moved without a pulse".into());
    }
    Ok(checked)
}

/// Sync-check audit of every closure: a continuous hold of at least 200 ms
/// inside the tolerances before the command, and the true angle, slip and
/// voltage difference within tolerance when the poles close.
pub fn audit_closures(log: &SimulationLog, cfg: &ScenarioConfig) -> Result<usize, String> {
    let sync = &cfg.sync;
    let commands: Vec<_> = log.events_of(EventKind::CloseCommand).collect();
    let closes: Vec<_> = log.events_of(EventKind::BreakerClosed).collect();
    if closes.len() > commands.len() {
        return Err("breaker closed more often than commanded".into());
    }
    for cmd in &commands {
        let start = log
            .events
            .iter()
            .filter(|e| e.t <= cmd.t && matches!(e.kind, EventKind::HoldStart | EventKind::HoldReset))
            .last()
            .ok_or_else(|| format!("close at t={} without a hold", cmd.t))?;
        if start.kind != EventKind::HoldStart {
            return Err(format!("close at t={} right after a hold reset", cmd.t));
        }
        if cmd.t - start.t < HOLD_TIME - 1e-6 {
            return Err(format!("hold of {:.4} s before close at t={}", cmd.t - start.t, cmd.t));
        }
        for r in log.rows.iter().filter(|r| r.t > start.t + 1e-9 && r.t < cmd.t - 1e-9) {
            if r.sync_phase != SyncPhase::HoldWindow {
                return Err(format!("phase {} during the hold at t={}", r.sync_phase.name(), r.t));
            }
        }
        let pred = cmd.number("dphi_pred").ok_or("no predicted angle")?;
        let slip = cmd.number("slip").ok_or("no slip")?;
        let dv = cmd.number("dv").ok_or("no dv")?;
        if pred.abs() > sync.angle_window_deg || slip.abs() > sync.slip_max || dv.abs() > sync.dv_max {
            return Err(format!("command at t={} outside tolerance: {}", cmd.t, cmd.detail));
        }
    }
    for c in &closes {
        let dphi = c.number("dphi").ok_or("no dphi")?;
        let slip = c.number("slip").ok_or("no slip")?;
        let dv = c.number("dv").ok_or("no dv")?;
        if dphi.abs() > sync.angle_window_deg || slip.abs() > sync.slip_max || dv.abs() > sync.dv_max {
            return Err(format!("closure at t={} outside tolerance: {}", c.t, c.detail));
        }
    }
    Ok(closes.len())
}

/// Flowchart order of events plus breaker behaviour around trips.
pub fn audit_event_order(log: &SimulationLog, dt: f64) -> Result<(), String> {
    let mut exciter_on = false;
    let mut holding = false;
    let mut commanded = false;
    let mut closed = false;
    let mut aborted = false;
    let mut last_t = f64::NEG_INFINITY;
    for e in &log.events {
        if e.t < last_t {
            return Err(format!("events out of time order at t={}", e.t));
        }
        last_t = e.t;
        let bad = |why: &str| Err(format!("{} at t={}: {why}", e.kind.name(), e.t));
        match e.kind {
            EventKind::ExciterOn => {
                if exciter_on {
                    return bad("twice");
                }
                exciter_on = true;
            }
            EventKind::PulseUp | EventKind::PulseDown => {
                if !exciter_on || aborted {
                    return bad("exciter not running");
                }
            }
            EventKind::HoldStart => {
                if !exciter_on || holding || commanded || aborted {
                    return bad("not hunting");
                }
                holding = true;
            }
            EventKind::HoldReset => {
                if !holding {
                    return bad("no hold");
                }
                holding = false;
            }
            EventKind::CloseCommand => {
                if !holding || commanded {
                    return bad("no hold in progress");
                }
                holding = false;
                commanded = true;
            }
            EventKind::BreakerClosed => {
                if !commanded || closed || aborted {
                    return bad("not commanded");
                }
                closed = true;
            }
            EventKind::Trip => {}
            EventKind::Aborted => {
                if aborted {
                    return bad("twice");
                }
                aborted = true;
                holding = false;
            }
            EventKind::Diverged => {}
        }
    }
    if let Some(t_trip) = first_time(log, EventKind::Trip) {
        let k = (t_trip / dt).round() as usize;
        for r in log.rows.iter().skip(k + 1) {
            if r.breaker {
                return Err(format!("breaker closed at t={} after trip at t={t_trip}", r.t));
            }
        }
        let aborted_at = first_time(log, EventKind::Aborted).ok_or("trip without abort")?;
        if aborted_at - t_trip > dt + 1e-9 {
            return Err(format!("abort {aborted_at} long after trip {t_trip}"));
        }
    }
    Ok(())
}
