//! Fixed-point durations.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use serde::{Serialize, Serializer};

/// A duration held as whole microseconds.
///
/// Per-task times are rounded to the microsecond once, where they are derived
/// from `size × rate`. Everything built on top of them (site sums, running
/// times, block counts) is then exact integer arithmetic: a billing boundary
/// cannot flip on rounding error and sums do not depend on evaluation order.
///
/// Serialized as floating-point seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time(i64);

impl Time {
    pub const ZERO: Time = Time(0);
    pub const MICROS_PER_SEC: i64 = 1_000_000;

    pub const fn from_micros(micros: i64) -> Self {
        Time(micros)
    }

    /// Rounds to the nearest microsecond (ties away from zero).
    pub fn from_secs_f64(secs: f64) -> Self {
        Time((secs * Self::MICROS_PER_SEC as f64).round() as i64)
    }

    pub const fn as_micros(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / Self::MICROS_PER_SEC as f64
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplies by a non-negative factor, rounding to the microsecond.
    pub fn scale(self, factor: f64) -> Self {
        Time((self.0 as f64 * factor).round() as i64)
    }

    /// Number of `block`-long periods needed to cover `self` (ceiling division).
    ///
    /// `block` must be positive; `self` must be non-negative.
    pub fn blocks_of(self, block: Time) -> u64 {
        debug_assert!(block.0 > 0 && self.0 >= 0);
        (self.0 as u64).div_ceil(block.0 as u64)
    }

    /// Remainder of `self` modulo `block`.
    pub fn rem_of(self, block: Time) -> Time {
        Time(self.0.rem_euclid(block.0))
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl AddAssign for Time {
    fn add_assign(&mut self, rhs: Time) {
        self.0 += rhs.0;
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl SubAssign for Time {
    fn sub_assign(&mut self, rhs: Time) {
        self.0 -= rhs.0;
    }
}

impl Sum for Time {
    fn sum<I: Iterator<Item = Time>>(iter: I) -> Time {
        iter.fold(Time::ZERO, Add::add)
    }
}

impl fmt::Display for Time {
    /// Exact decimal seconds with six fractional digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let per = Self::MICROS_PER_SEC as u64;
        write!(f, "{sign}{}.{:06}", abs / per, abs % per)
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_secs_f64())
    }
}
