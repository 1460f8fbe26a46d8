use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use parking_lot::Mutex;

pub trait Clock: Send + Sync {
    fn now(&self) -> NaiveDateTime;

    fn today(&self) -> NaiveDate {
        self.now().date()
    }
}

/// Local wall-clock time, truncated to whole seconds so timestamps
/// serialize compactly.
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> NaiveDateTime {
        let now = chrono::Local::now().naive_local();
        now.with_nanosecond(0).unwrap_or(now)
    }
}

/// Settable clock for tests and replays. Each reading advances it by one
/// second so consecutive events keep distinct, ordered timestamps.
pub struct ManualClock {
    now: Mutex<NaiveDateTime>,
}

impl ManualClock {
    pub fn new(start: NaiveDateTime) -> Self {
        ManualClock {
            now: Mutex::new(start),
        }
    }

    pub fn set(&self, t: NaiveDateTime) {
        *self.now.lock() = t;
    }

    pub fn advance(&self, d: Duration) {
        *self.now.lock() += d;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> NaiveDateTime {
        let mut g = self.now.lock();
        let t = *g;
        *g += Duration::seconds(1);
        t
    }

    fn today(&self) -> NaiveDate {
        self.now.lock().date()
    }
}
