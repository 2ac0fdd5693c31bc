use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Time source, swappable so tests can run without sleeping.
pub trait Clock: Send + Sync {
    /// Monotonic time since an arbitrary origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// A clock that only moves when slept on.
#[derive(Clone, Default)]
pub struct ManualClock {
    now: Arc<Mutex<Duration>>,
    sleeps: Arc<Mutex<Vec<Duration>>>,
}

impl ManualClock {
    pub fn advance(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.sleeps.lock().unwrap().clone()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, d: Duration) {
        self.sleeps.lock().unwrap().push(d);
        self.advance(d);
    }
}

/// Token bucket: at most `burst` requests at once, refilled at `rate` per second.
pub struct TokenBucket {
    rate: f64,
    burst: f64,
    state: Mutex<BucketState>,
}

struct BucketState {
    tokens: f64,
    last: Duration,
}

impl TokenBucket {
    pub fn new(rate: f64, burst: u32, clock: &dyn Clock) -> Self {
        assert!(rate > 0.0, "rate must be positive");
        let burst = f64::from(burst.max(1));
        TokenBucket {
            rate,
            burst,
            state: Mutex::new(BucketState {
                tokens: burst,
                last: clock.now(),
            }),
        }
    }

    /// Blocks on `clock` until a token is available, then takes it.
    pub fn acquire(&self, clock: &dyn Clock) {
        let mut state = self.state.lock().unwrap();
        loop {
            let now = clock.now();
            let elapsed = now.saturating_sub(state.last).as_secs_f64();
            state.tokens = (state.tokens + elapsed * self.rate).min(self.burst);
            state.last = now;
            if state.tokens >= 1.0 {
                state.tokens -= 1.0;
                return;
            }
            let wait = (1.0 - state.tokens) / self.rate;
            clock.sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_exceeds_budget() {
        let clock = ManualClock::default();
        let bucket = TokenBucket::new(5.0, 1, &clock);
        let mut stamps = Vec::new();
        for _ in 0..50 {
            bucket.acquire(&clock);
            stamps.push(clock.now());
        }
        // Any window of length T holds at most burst + rate*T requests.
        for (i, a) in stamps.iter().enumerate() {
            for (j, b) in stamps.iter().enumerate().skip(i) {
                let window = (*b - *a).as_secs_f64();
                let count = (j - i + 1) as f64;
                assert!(count <= 1.0 + 5.0 * window + 1e-9, "{count} in {window}s");
            }
        }
        let total = stamps.last().unwrap().as_secs_f64();
        assert!((total - 49.0 / 5.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn burst_is_immediate() {
        let clock = ManualClock::default();
        let bucket = TokenBucket::new(1.0, 3, &clock);
        for _ in 0..3 {
            bucket.acquire(&clock);
        }
        assert!(clock.sleeps().is_empty());
        bucket.acquire(&clock);
        assert_eq!(clock.sleeps().len(), 1);
    }
}
