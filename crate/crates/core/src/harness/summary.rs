use super::log::{EventKind, SimulationLog};
use crate::protection::{Element, TripRecord};

/// Headline metrics of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub synced: bool,
    /// Time the breaker poles closed.
    pub t_close: Option<f64>,
    /// Plant-side angle, slip and voltage difference at the close instant.
    pub close_dphi: Option<f64>,
    pub close_slip: Option<f64>,
    pub close_dv: Option<f64>,
    pub trips: Vec<TripRecord>,
    /// Time after which the speed stays within 1 rpm of its final value.
    pub settle_time: Option<f64>,
    pub final_rpm: Option<f64>,
    pub final_v_ll: Option<f64>,
    pub final_field: Option<f64>,
}

pub fn summarize(log: &SimulationLog) -> Summary {
    let mut s = Summary::default();
    if let Some(e) = log.events_of(EventKind::BreakerClosed).next() {
        s.t_close = Some(e.t);
        s.close_dphi = e.number("dphi");
        s.close_slip = e.number("slip");
        s.close_dv = e.number("dv");
    }
    s.trips = log
        .events_of(EventKind::Trip)
        .filter_map(|e| {
            Some(TripRecord {
                element: Element::parse(e.field("element")?)?,
                t_trip: e.t,
                measured_value: e.number("measured")?,
                threshold: e.number("threshold")?,
            })
        })
        .collect();
    s.synced = s.t_close.is_some() && s.trips.is_empty();

    if let Some(last) = log.rows.last() {
        s.final_rpm = Some(last.gen_rpm);
        s.final_v_ll = Some(last.gen_v_ll);
        s.final_field = Some(last.field_v);
        let outside = log.rows.iter().rposition(|r| (r.gen_rpm - last.gen_rpm).abs() > 1.0);
        s.settle_time = match outside {
            None => log.rows.first().map(|r| r.t),
            Some(i) => log.rows.get(i + 1).map(|r| r.t),
        };
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::log::{EventRecord, LogRow, TripFlags};
    use crate::synchronizer::SyncPhase;

    fn row(t: f64, rpm: f64) -> LogRow {
        LogRow {
            t,
            gen_rpm: rpm,
            gen_freq: 0.0,
            grid_freq: 50.0,
            gen_v_ll: 0.0,
            grid_v_ll: 400.0,
            dphi_deg: 0.0,
            field_v: 0.0,
            torque_cmd: 0.0,
            breaker: false,
            sync_phase: SyncPhase::Idle,
            p_w: 0.0,
            q_var: 0.0,
            trip_flags: TripFlags::default(),
        }
    }

    #[test]
    fn no_close_means_not_synced() {
        let log = SimulationLog { rows: vec![row(0.0, 0.0), row(0.001, 10.0)], events: vec![] };
        let s = summarize(&log);
        assert!(!s.synced);
        assert_eq!(s.t_close, None);
        assert_eq!(s.settle_time, Some(0.001));
    }

    #[test]
    fn trip_is_reported() {
        let log = SimulationLog {
            rows: vec![row(0.0, 1500.0)],
            events: vec![EventRecord {
                t: 3.0,
                kind: EventKind::Trip,
                detail: "element=UF measured=49.400000 threshold=49.500000".into(),
            }],
        };
        let s = summarize(&log);
        assert!(!s.synced);
        assert_eq!(s.trips.len(), 1);
        assert_eq!(s.trips[0].element, Element::UF);
        assert_eq!(s.trips[0].t_trip, 3.0);
    }

    #[test]
    fn close_metrics_from_event() {
        let log = SimulationLog {
            rows: vec![row(0.0, 1500.0)],
            events: vec![EventRecord { t: 50.0, kind: EventKind::BreakerClosed, detail: "dphi=-4.5 slip=0.05 dv=1.2".into() }],
        };
        let s = summarize(&log);
        assert!(s.synced);
        assert_eq!(s.close_dphi, Some(-4.5));
        assert_eq!(s.close_slip, Some(0.05));
    }
}
