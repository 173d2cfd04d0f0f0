use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

/// Per-client sliding-window log: a request is granted iff fewer than
/// `limit` requests were granted in the preceding `window_ms`. Unlike a
/// token bucket this bounds grants in *every* window of that length, not
/// just on average. Time is passed in so tests and simulations control it.
#[derive(Debug)]
pub struct SlidingWindowLimiter {
    limit: u32,
    window_ms: u64,
    clients: Mutex<HashMap<String, VecDeque<u64>>>,
}

impl SlidingWindowLimiter {
    pub fn new(limit: u32, window_ms: u64) -> Self {
        Self { limit, window_ms: window_ms.max(1), clients: Mutex::default() }
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    pub fn window_ms(&self) -> u64 {
        self.window_ms
    }

    /// Records and grants the request at `now_ms` if allowed. Timestamps are
    /// expected to be non-decreasing per client.
    pub fn try_acquire(&self, client: &str, now_ms: u64) -> bool {
        let mut clients = self.clients.lock().expect("limiter lock");
        let log = clients.entry(client.to_string()).or_default();
        while log.front().is_some_and(|&t| t + self.window_ms <= now_ms) {
            log.pop_front();
        }
        if log.len() < self.limit as usize {
            log.push_back(now_ms);
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eleventh_request_in_window_is_refused() {
        let l = SlidingWindowLimiter::new(10, 60_000);
        for i in 0..10 {
            assert!(l.try_acquire("a", i * 1000));
        }
        assert!(!l.try_acquire("a", 59_999));
        assert!(l.try_acquire("b", 59_999));
        assert!(l.try_acquire("a", 60_000));
    }

    #[test]
    fn zero_limit_refuses_everything() {
        let l = SlidingWindowLimiter::new(0, 10);
        assert!(!l.try_acquire("a", 0));
    }

    proptest! {
        #[test]
        fn never_more_than_limit_in_any_window(
            limit in 1u32..6,
            window in 1u64..50,
            gaps in proptest::collection::vec(0u64..20, 1..200),
        ) {
            let l = SlidingWindowLimiter::new(limit, window);
            let mut now = 0;
            let mut granted = Vec::new();
            for g in gaps {
                now += g;
                if l.try_acquire("c", now) {
                    granted.push(now);
                }
            }
            for (i, &start) in granted.iter().enumerate() {
                let in_window = granted[i..].iter().take_while(|&&t| t < start + window).count();
                prop_assert!(in_window <= limit as usize);
            }
        }
    }
}
