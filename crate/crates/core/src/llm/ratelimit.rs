use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

/// Client-side token bucket shared by concurrent requests.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    refill_per_sec: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    /// Panics unless both arguments are positive and finite.
    pub fn new(capacity: f64, refill_per_sec: f64) -> Self {
        assert!(capacity.is_finite() && capacity >= 1.0, "capacity must be >= 1");
        assert!(refill_per_sec.is_finite() && refill_per_sec > 0.0, "refill rate must be positive");
        TokenBucket {
            capacity,
            refill_per_sec,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    fn refill(&self, state: &mut (f64, Instant)) {
        let now = Instant::now();
        let elapsed = now.duration_since(state.1).as_secs_f64();
        state.0 = (state.0 + elapsed * self.refill_per_sec).min(self.capacity);
        state.1 = now;
    }

    pub fn try_acquire(&self) -> bool {
        let mut state = self.state.lock().expect("rate limiter poisoned");
        self.refill(&mut state);
        if state.0 >= 1.0 {
            state.0 -= 1.0;
            true
        } else {
            false
        }
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("rate limiter poisoned");
                self.refill(&mut state);
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    return;
                }
                (1.0 - state.0) / self.refill_per_sec
            };
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}
