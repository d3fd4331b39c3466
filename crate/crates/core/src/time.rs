//! Integer time, half-open intervals and AGV identifiers.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A point in time measured in integer ticks, or [`TimePoint::INFINITY`].
///
/// Arithmetic saturates at infinity: `INFINITY + x == INFINITY`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimePoint(u64);

impl TimePoint {
    pub const ZERO: TimePoint = TimePoint(0);
    pub const INFINITY: TimePoint = TimePoint(u64::MAX);

    /// Finite time point. `u64::MAX` is reserved for infinity and is clamped
    /// one tick below it.
    #[inline]
    pub const fn new(ticks: u64) -> Self {
        if ticks == u64::MAX {
            TimePoint(u64::MAX - 1)
        } else {
            TimePoint(ticks)
        }
    }

    #[inline]
    pub const fn is_infinite(self) -> bool {
        self.0 == u64::MAX
    }

    #[inline]
    pub const fn is_finite(self) -> bool {
        self.0 != u64::MAX
    }

    /// Tick count, `None` for infinity.
    #[inline]
    pub const fn ticks(self) -> Option<u64> {
        if self.is_infinite() {
            None
        } else {
            Some(self.0)
        }
    }

    /// Raw representation; infinity maps to `u64::MAX`.
    #[inline]
    pub const fn raw(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn saturating_sub(self, ticks: u64) -> Self {
        if self.is_infinite() {
            self
        } else {
            TimePoint(self.0.saturating_sub(ticks))
        }
    }
}

impl Add<u64> for TimePoint {
    type Output = TimePoint;

    #[inline]
    fn add(self, rhs: u64) -> TimePoint {
        if self.is_infinite() {
            return self;
        }
        match self.0.checked_add(rhs) {
            Some(v) if v != u64::MAX => TimePoint(v),
            _ => TimePoint::INFINITY,
        }
    }
}

impl Sub for TimePoint {
    type Output = u64;

    /// Duration between two points; `INFINITY - finite` is `u64::MAX`.
    #[inline]
    fn sub(self, rhs: TimePoint) -> u64 {
        self.0.saturating_sub(rhs.0)
    }
}

impl From<u64> for TimePoint {
    fn from(ticks: u64) -> Self {
        TimePoint::new(ticks)
    }
}

impl fmt::Debug for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ticks() {
            Some(t) => write!(f, "{t}"),
            None => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid time point `{0}`")]
pub struct ParseTimeError(String);

impl FromStr for TimePoint {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(TimePoint::INFINITY);
        }
        s.parse::<u64>().ok().filter(|&t| t != u64::MAX).map(TimePoint).ok_or_else(|| ParseTimeError(s.to_string()))
    }
}

/// Finite points serialize as JSON integers, infinity as the string `"inf"`.
impl Serialize for TimePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.ticks() {
            Some(t) => serializer.serialize_u64(t),
            None => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for TimePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Ticks(u64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Ticks(t) if t != u64::MAX => Ok(TimePoint(t)),
            Repr::Ticks(t) => Err(serde::de::Error::custom(ParseTimeError(t.to_string()))),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Half-open time interval `[start, end)` with a finite start.
///
/// Empty intervals (`start == end`) are representable because time-path
/// steps may have zero duration; reservation stores ignore them.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: TimePoint,
    pub end: TimePoint,
}

impl Interval {
    /// # Panics
    ///
    /// If `start` is infinite or `start > end`.
    #[inline]
    pub fn new(start: impl Into<TimePoint>, end: impl Into<TimePoint>) -> Self {
        let (start, end) = (start.into(), end.into());
        assert!(start.is_finite(), "interval start must be finite");
        assert!(start <= end, "interval start {start} exceeds end {end}");
        Interval { start, end }
    }

    #[inline]
    pub fn try_new(start: TimePoint, end: TimePoint) -> Option<Self> {
        (start.is_finite() && start <= end).then_some(Interval { start, end })
    }

    /// `[start, INFINITY)`.
    #[inline]
    pub fn starting_at(start: impl Into<TimePoint>) -> Self {
        Interval::new(start, TimePoint::INFINITY)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    #[inline]
    pub fn contains(&self, t: TimePoint) -> bool {
        self.start <= t && t < self.end
    }

    #[inline]
    pub fn covers(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    #[inline]
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Duration in ticks, `u64::MAX` when unbounded.
    #[inline]
    pub fn len(&self) -> u64 {
        if self.end.is_infinite() {
            u64::MAX
        } else {
            self.end - self.start
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start < end).then_some(Interval { start, end })
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Identifier of one AGV within a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgvId(pub u32);

impl AgvId {
    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AgvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
