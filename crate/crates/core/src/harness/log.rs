use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::protection::Element;
use crate::synchronizer::SyncPhase;

pub const CSV_HEADER: &str =
    "t,gen_rpm,gen_freq,grid_freq,gen_v_ll,grid_v_ll,dphi_deg,field_v,torque_cmd,breaker,sync_phase,p_w,q_var,trip_flags";
pub const EVENTS_HEADER: &str = "t,kind,detail";

/// Set of latched protection elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct TripFlags(u8);

impl TripFlags {
    pub fn insert(&mut self, e: Element) {
        self.0 |= 1 << e.index();
    }

    pub fn contains(self, e: Element) -> bool {
        self.0 & (1 << e.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Element> {
        Element::ALL.into_iter().filter(move |e| self.contains(*e))
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut out = TripFlags::default();
        for name in s.split(';').filter(|n| !n.is_empty()) {
            out.insert(Element::parse(name)?);
        }
        Some(out)
    }
}

impl FromIterator<Element> for TripFlags {
    fn from_iter<I: IntoIterator<Item = Element>>(iter: I) -> Self {
        let mut out = TripFlags::default();
        for e in iter {
            out.insert(e);
        }
        out
    }
}

impl fmt::Display for TripFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Element::name).collect();
        f.write_str(&names.join(";"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub gen_rpm: f64,
    pub gen_freq: f64,
    pub grid_freq: f64,
    pub gen_v_ll: f64,
    pub grid_v_ll: f64,
    pub dphi_deg: f64,
    pub field_v: f64,
    pub torque_cmd: f64,
    pub breaker: bool,
    pub sync_phase: SyncPhase,
    pub p_w: f64,
    pub q_var: f64,
    pub trip_flags: TripFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    ExciterOn,
    PulseUp,
    PulseDown,
    HoldStart,
    HoldReset,
    CloseCommand,
    BreakerClosed,
    Trip,
    Aborted,
    /// The rotor integration or a controller failed; the log ends here.
    Diverged,
}

impl EventKind {
    pub const ALL: [EventKind; 10] = [
        EventKind::ExciterOn,
        EventKind::PulseUp,
        EventKind::PulseDown,
        EventKind::HoldStart,
        EventKind::HoldReset,
        EventKind::CloseCommand,
        EventKind::BreakerClosed,
        EventKind::Trip,
        EventKind::Aborted,
        EventKind::Diverged,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::ExciterOn => "ExciterOn",
            EventKind::PulseUp => "PulseUp",
            EventKind::PulseDown => "PulseDown",
            EventKind::HoldStart => "HoldStart",
            EventKind::HoldReset => "HoldReset",
            EventKind::CloseCommand => "CloseCommand",
            EventKind::BreakerClosed => "BreakerClosed",
            EventKind::Trip => "Trip",
            EventKind::Aborted => "Aborted",
            EventKind::Diverged => "Diverged",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// One event. `detail` is a space-separated list of `key=value` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

impl EventRecord {
    /// Value of `key` in the detail text.
    pub fn field(&self, key: &str) -> Option<&str> {
        self.detail
            .split_whitespace()
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.field(key)?.parse().ok()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationLog {
    pub rows: Vec<LogRow>,
    pub events: Vec<EventRecord>,
}

impl SimulationLog {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &EventRecord> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

/// Fixed-point with `precision` decimals; negative zero prints as zero.
pub fn fmt_fixed(x: f64, precision: usize) -> String {
    let s = format!("{x:.precision$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

pub fn write_csv(log: &SimulationLog, precision: usize) -> String {
    let mut out = String::with_capacity(log.rows.len() * 140 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &log.rows {
        for x in [r.t, r.gen_rpm, r.gen_freq, r.grid_freq, r.gen_v_ll, r.grid_v_ll, r.dphi_deg, r.field_v, r.torque_cmd] {
            out.push_str(&fmt_fixed(x, precision));
            out.push(',');
        }
        let _ = write!(
            out,
            "{},{},{},{},{}\n",
            u8::from(r.breaker),
            r.sync_phase.name(),
            fmt_fixed(r.p_w, precision),
            fmt_fixed(r.q_var, precision),
            r.trip_flags
        );
    }
    out
}

pub fn write_events_csv(log: &SimulationLog, precision: usize) -> String {
    let mut out = String::from(EVENTS_HEADER);
    out.push('\n');
    for e in &log.events {
        let _ = writeln!(out, "{},{},{}", fmt_fixed(e.t, precision), e.kind.name(), e.detail);
    }
    out
}

fn parse_num(s: &str, line: usize, col: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse { line, msg: format!("column `{col}`: bad number `{s}`") })
}

/// Parse text produced by [`write_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<LogRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse { line: 1, msg: "unexpected header".into() });
    }
    let cols: Vec<&str> = CSV_HEADER.split(',').collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let line = i + 2;
        let v: Vec<&str> = l.split(',').collect();
        if v.len() != cols.len() {
            return Err(Error::Parse { line, msg: format!("expected {} fields, got {}", cols.len(), v.len()) });
        }
        let n = |j: usize| parse_num(v[j], line, cols[j]);
        rows.push(LogRow {
            t: n(0)?,
            gen_rpm: n(1)?,
            gen_freq: n(2)?,
            grid_freq: n(3)?,
            gen_v_ll: n(4)?,
            grid_v_ll: n(5)?,
            dphi_deg: n(6)?,
            field_v: n(7)?,
            torque_cmd: n(8)?,
            breaker: match v[9] {
                "0" => false,
                "1" => true,
                other => return Err(Error::Parse { line, msg: format!("breaker must be 0 or 1, got `{other}`") }),
            },
            sync_phase: SyncPhase::parse(v[10])
                .ok_or_else(|| Error::Parse { line, msg: format!("unknown sync phase `{}`", v[10]) })?,
            p_w: n(11)?,
            q_var: n(12)?,
            trip_flags: TripFlags::parse(v[13])
                .ok_or_else(|| Error::Parse { line, msg: format!("bad trip flags `{}`", v[13]) })?,
        });
    }
    Ok(rows)
}

/// Parse text produced by [`write_events_csv`].
pub fn parse_events_csv(text: &str) -> Result<Vec<EventRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(EVENTS_HEADER) {
        return Err(Error::Parse { line: 1, msg: "unexpected header".into() });
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let line = i + 2;
            let mut it = l.splitn(3, ',');
            let t = parse_num(it.next().unwrap_or(""), line, "t")?;
            let kind_s = it.next().unwrap_or("");
            let kind = EventKind::parse(kind_s)
                .ok_or_else(|| Error::Parse { line, msg: format!("unknown event kind `{kind_s}`") })?;
            Ok(EventRecord { t, kind, detail: it.next().unwrap_or("").to_string() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> LogRow {
        LogRow {
            t,
            gen_rpm: 1500.0,
            gen_freq: 50.0,
            grid_freq: 50.0,
            gen_v_ll: 400.0,
            grid_v_ll: 400.0,
            dphi_deg: -0.0,
            field_v: 45.0,
            torque_cmd: 0.25,
            breaker: true,
            sync_phase: SyncPhase::Synchronized,
            p_w: 1.0 / 3.0,
            q_var: -2.0,
            trip_flags: [Element::OV, Element::UF].into_iter().collect(),
        }
    }

    #[test]
    fn two_rows_three_lines() {
        let log = SimulationLog { rows: vec![row(0.0), row(0.001)], events: vec![] };
        let text = write_csv(&log, 6);
        assert_eq!(text.lines().count(), 3);
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        let second = text.lines().nth(1).unwrap();
        assert_eq!(
            second,
            "0.000000,1500.000000,50.000000,50.000000,400.000000,400.000000,0.000000,45.000000,0.250000,1,Synchronized,0.333333,-2.000000,OV;UF"
        );
    }

    #[test]
    fn fixed_formatting() {
        assert_eq!(fmt_fixed(50.0, 6), "50.000000");
        assert_eq!(fmt_fixed(-0.0, 3), "0.000");
        assert_eq!(fmt_fixed(-0.0000001, 3), "0.000");
        assert_eq!(fmt_fixed(-1.5, 1), "-1.5");
        assert_eq!(fmt_fixed(2.5, 0), "2");
    }

    #[test]
    fn csv_round_trip() {
        let mut r2 = row(0.001);
        r2.trip_flags = TripFlags::default();
        r2.breaker = false;
        r2.sync_phase = SyncPhase::HoldWindow;
        let log = SimulationLog { rows: vec![row(0.0), r2], events: vec![] };
        for precision in [0, 3, 6, 9] {
            let text = write_csv(&log, precision);
            let back = SimulationLog { rows: parse_csv(&text).unwrap(), events: vec![] };
            assert_eq!(write_csv(&back, precision), text);
        }
    }

    #[test]
    fn events_round_trip() {
        let log = SimulationLog {
            rows: vec![],
            events: vec![EventRecord { t: 1.5, kind: EventKind::Trip, detail: "element=UF measured=49.4 threshold=49.5".into() }],
        };
        let text = write_events_csv(&log, 3);
        assert_eq!(text, "t,kind,detail\n1.500,Trip,element=UF measured=49.4 threshold=49.5\n");
        let back = parse_events_csv(&text).unwrap();
        assert_eq!(back[0].field("element"), Some("UF"));
        assert_eq!(back[0].number("threshold"), Some(49.5));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_csv("nope\n").is_err());
        let bad = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(matches!(parse_csv(&bad), Err(Error::Parse { line: 2, .. })));
    }
}
