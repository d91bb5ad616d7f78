/// Contactor closing time; a closing command takes this long to make contact.
pub const DEFAULT_CLOSE_DELAY: f64 = 0.06;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BreakerPosition {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakerState {
    pub position: BreakerPosition,
    pub close_delay: f64,
    pub pending_close_at: Option<f64>,
}

impl BreakerState {
    pub fn open(close_delay: f64) -> Self {
        Self { position: BreakerPosition::Open, close_delay, pending_close_at: None }
    }

    pub fn is_closed(&self) -> bool {
        self.position == BreakerPosition::Closed
    }
}

impl Default for BreakerState {
    fn default() -> Self {
        Self::open(DEFAULT_CLOSE_DELAY)
    }
}

/// Advance the breaker to time `t`. A trip opens immediately and cancels any
/// pending close; it takes priority over a close command in the same call.
pub fn breaker_step(state: &BreakerState, close_command: bool, trip: bool, t: f64) -> BreakerState {
    let mut next = *state;
    if trip {
        next.position = BreakerPosition::Open;
        next.pending_close_at = None;
        return next;
    }
    if next.position == BreakerPosition::Open {
        if close_command && next.pending_close_at.is_none() {
            next.pending_close_at = Some(t + next.close_delay);
        }
        if let Some(at) = next.pending_close_at {
            if t + TIME_EPS >= at {
                next.position = BreakerPosition::Closed;
                next.pending_close_at = None;
            }
        }
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closes_after_delay() {
        let dt = 1e-3;
        let mut s = BreakerState::open(0.06);
        let mut closed_at = None;
        for k in 10_000..10_200 {
            let t = k as f64 * dt;
            s = breaker_step(&s, k == 10_000, false, t);
            if s.is_closed() && closed_at.is_none() {
                closed_at = Some(t);
            }
        }
        let at = closed_at.unwrap();
        assert!((at - 10.06).abs() <= 1e-3 + 1e-12, "{at}");
    }

    #[test]
    fn closed_is_idempotent() {
        let s = BreakerState { position: BreakerPosition::Closed, close_delay: 0.06, pending_close_at: None };
        assert_eq!(breaker_step(&s, true, false, 5.0), s);
    }

    #[test]
    fn trip_cancels_pending_close() {
        let s = breaker_step(&BreakerState::open(0.06), true, false, 1.0);
        assert_eq!(s.pending_close_at, Some(1.06));
        let s = breaker_step(&s, false, true, 1.01);
        assert_eq!(s.position, BreakerPosition::Open);
        assert_eq!(s.pending_close_at, None);
        // no spontaneous close later
        let s = breaker_step(&s, false, false, 2.0);
        assert!(!s.is_closed());
    }

    #[test]
    fn zero_delay_closes_immediately() {
        let s = breaker_step(&BreakerState::open(0.0), true, false, 3.0);
        assert!(s.is_closed());
    }
}
