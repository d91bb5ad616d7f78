mod common;

use common::{audit_closures, audit_event_order, audit_pulses, run};
use sync_relay::harness::{parse_csv, parse_events_csv, summarize, write_csv, write_events_csv, EventKind};
use sync_relay::plant::open_circuit_emf;
use sync_relay::protection::Element;
use sync_relay::synchronizer::SyncPhase;
use sync_relay::{run_scenario, RunError};

/// Syncs, then the grid drops to 49 Hz.
const UF_AFTER_SYNC: &str = "duration = 75\ngrid.schedule = 65 400 49.0\n";

#[test]
fn default_black_start_connects() {
    let (cfg, log) = run("");
    let s = summarize(&log);
    assert!(s.synced, "{s:?}");
    let t_close = s.t_close.unwrap();
    assert!(t_close < 120.0);
    assert!(s.close_dphi.unwrap().abs() <= 10.0);
    assert!(s.close_slip.unwrap().abs() <= 0.1);
    assert!(s.close_dv.unwrap().abs() <= 10.0);
    assert!((s.final_rpm.unwrap() - 1500.0).abs() <= 1.0);
    assert!((s.final_v_ll.unwrap() - 400.0).abs() <= 5.0);
    assert!((s.final_field.unwrap() - 45.0).abs() <= 1.0);
    assert_eq!(audit_closures(&log, &cfg), Ok(1));
    audit_event_order(&log, cfg.dt).unwrap();
    assert!(audit_pulses(&log, cfg.dt).unwrap() > 0);
    let last = log.rows.last().unwrap();
    assert_eq!(last.sync_phase, SyncPhase::Synchronized);
    assert!(last.breaker);
}

#[test]
fn rows_follow_dt_exactly() {
    let (cfg, log) = run("duration = 3\n");
    assert_eq!(log.rows.len(), 3001);
    let text = write_csv(&log, cfg.precision);
    let rows = parse_csv(&text).unwrap();
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(format!("{:.6}", r.t), format!("{:.6}", k as f64 * cfg.dt));
    }
}

#[test]
fn csv_round_trip_of_a_full_run() {
    let (cfg, log) = run("duration = 60\nrng_seed = 5\n");
    let text = write_csv(&log, cfg.precision);
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), log.rows.len());
    let back = sync_relay::SimulationLog { rows, events: parse_events_csv(&write_events_csv(&log, 6)).unwrap() };
    assert_eq!(write_csv(&back, cfg.precision), text);
    assert_eq!(write_events_csv(&back, 6), write_events_csv(&log, 6));
}

#[test]
fn repeated_runs_are_identical() {
    for text in ["duration = 50\n", "duration = 50\nrng_seed = 11\n"] {
        let (_, a) = run(text);
        let (_, b) = run(text);
        assert_eq!(write_csv(&a, 6), write_csv(&b, 6));
        assert_eq!(write_events_csv(&a, 6), write_events_csv(&b, 6));
    }
}

#[test]
fn seeds_change_the_noise() {
    let (_, a) = run("duration = 2\nrng_seed = 1\n");
    let (_, b) = run("duration = 2\nrng_seed = 2\n");
    assert_ne!(write_csv(&a, 6), write_csv(&b, 6));
}

#[test]
fn grid_underfrequency_after_sync_trips_and_opens() {
    let (cfg, log) = run(UF_AFTER_SYNC);
    audit_event_order(&log, cfg.dt).unwrap();
    let s = summarize(&log);
    assert!(!s.synced);
    assert!(s.t_close.is_some());
    assert_eq!(s.trips.len(), 1, "{:?}", s.trips);
    assert_eq!(s.trips[0].element, Element::UF);
    // 0.5 s definite time after the frequency falls through 49.5 Hz, plus the
    // estimator window
    let t = s.trips[0].t_trip;
    assert!(t > 65.5 && t < 65.7, "{t}");
    let k = (t / cfg.dt).round() as usize;
    assert!(!log.rows[k].breaker || !log.rows[k + 1].breaker);
    assert_eq!(log.rows[k].sync_phase, SyncPhase::Aborted);
    let last = log.rows.last().unwrap();
    assert!(last.trip_flags.contains(Element::UF));
    assert_eq!(last.torque_cmd, 0.0);
}

#[test]
fn field_collapses_after_abort() {
    let (_, log) = run(UF_AFTER_SYNC);
    let last = log.rows.last().unwrap();
    assert!(last.field_v < 45.0);
    assert!(log.events_of(EventKind::PulseUp).all(|e| e.t < 65.6));
}

#[test]
fn wrong_phase_sequence_never_closes() {
    let (cfg, log) = run("duration = 80\ngenerator.phase_sequence = negative\n");
    audit_event_order(&log, cfg.dt).unwrap();
    assert_eq!(log.events_of(EventKind::CloseCommand).count(), 0);
    assert!(log.rows.iter().all(|r| !r.breaker));
}

#[test]
fn forced_slip_never_closes() {
    let (_, log) = run("duration = 90\ngrid.frequency = 49.7\ngovernor.freq_offset = 0.45\n");
    assert_eq!(log.events_of(EventKind::CloseCommand).count(), 0);
    let tail = &log.rows[log.rows.len() - 1000..];
    assert!(tail.iter().all(|r| (r.gen_freq - r.grid_freq).abs() > 0.4));
}

#[test]
fn power_mode_conserves_energy() {
    let (cfg, log) = run("duration = 100\npower.enabled = true\npower.p_set = 500\n");
    let p = &cfg.generator;
    let r = log.rows.last().unwrap();
    assert_eq!(r.sync_phase, SyncPhase::Synchronized);
    assert!((r.p_w - 500.0).abs() < 5.0, "{}", r.p_w);
    let w = r.gen_rpm * std::f64::consts::PI / 30.0;
    let w_sync = 1500.0 * std::f64::consts::PI / 30.0;
    let losses = p.damping * (w - w_sync) * w + p.friction * w * w;
    let shaft = r.torque_cmd * w;
    assert!((shaft - r.p_w - losses).abs() <= 0.02 * shaft, "{shaft} vs {} + {losses}", r.p_w);
}

#[test]
fn power_angle_matches_measured_angle() {
    let (cfg, log) = run("duration = 100\npower.enabled = true\npower.p_set = 600\n");
    let r = log.rows.last().unwrap();
    let e = open_circuit_emf(r.field_v, r.gen_rpm, &cfg.generator);
    let delta = (r.p_w * cfg.generator.x_sync / (e * cfg.grid.v_ll)).asin().to_degrees();
    assert!((delta - r.dphi_deg).abs() < 0.5, "{delta} vs {}", r.dphi_deg);
}

#[test]
fn divergence_keeps_the_partial_log() {
    let cfg = common::scenario("duration = 5\ngenerator.inertia = 1e-300\n");
    match run_scenario(&cfg) {
        Err(RunError::Diverged { log, .. }) => {
            assert!(!log.rows.is_empty());
            let last = log.events.last().unwrap();
            assert_eq!(last.kind, EventKind::Diverged);
        }
        other => panic!("expected divergence, got {:?}", other.map(|l| l.rows.len())),
    }
}
