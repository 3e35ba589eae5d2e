//! Time source abstraction so the core stays free of `std::time`.

/// Monotonic seconds since an arbitrary origin.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// A clock that never advances. Time budgets never fire and wall times read 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}
