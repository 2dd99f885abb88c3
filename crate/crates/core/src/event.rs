//! Events and event streams.
//!
//! An event is a signed brightness change at one pixel, timestamped in
//! integer microseconds. Streams keep their events in a canonical total
//! order, `(t, y, x, p)` ascending, so every downstream pass is
//! deterministic.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Sign of a log-intensity change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn from_i8(p: i8) -> Result<Self> {
        Self::from_i64(p as i64)
    }

    pub fn from_i64(p: i64) -> Result<Self> {
        match p {
            -1 => Ok(Polarity::Negative),
            1 => Ok(Polarity::Positive),
            other => Err(Error::BadPolarity(other)),
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Polarity::Negative => -1,
            Polarity::Positive => 1,
        }
    }

    pub fn sign(self) -> f64 {
        self.as_i8() as f64
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Negative => Polarity::Positive,
            Polarity::Positive => Polarity::Negative,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    /// Microseconds.
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, p: Polarity) -> Self {
        Self { t, x, y, p }
    }

    /// Builds an event from a raw integer polarity, rejecting anything but ±1.
    pub fn from_raw(t: u64, x: u16, y: u16, p: i64) -> Result<Self> {
        Ok(Self::new(t, x, y, Polarity::from_i64(p)?))
    }

    fn sort_key(&self) -> (u64, u16, u16, Polarity) {
        (self.t, self.y, self.x, self.p)
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Events over a fixed sensor geometry and time span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventStream {
    width: usize,
    height: usize,
    t_begin: u64,
    t_end: u64,
    events: Vec<Event>,
}

impl EventStream {
    /// Sorts and validates `events`; the span is the min/max timestamp, or
    /// `[0, 0]` for an empty stream.
    pub fn new(width: usize, height: usize, events: Vec<Event>) -> Result<Self> {
        let t_begin = events.iter().map(|e| e.t).min().unwrap_or(0);
        let t_end = events.iter().map(|e| e.t).max().unwrap_or(0);
        Self::with_span(width, height, t_begin, t_end, events)
    }

    /// Like [`EventStream::new`] with an explicit span that must cover every event.
    pub fn with_span(width: usize, height: usize, t_begin: u64, t_end: u64, mut events: Vec<Event>) -> Result<Self> {
        check_geometry(width, height)?;
        if t_begin > t_end {
            return Err(Error::BadSpan { t_begin, t_end });
        }
        for e in &events {
            if e.x as usize >= width || e.y as usize >= height {
                return Err(Error::OutOfBounds {
                    x: e.x as usize,
                    y: e.y as usize,
                    width,
                    height,
                });
            }
            if e.t < t_begin || e.t > t_end {
                return Err(Error::EventOutOfSpan { t: e.t, t_begin, t_end });
            }
        }
        events.sort_unstable();
        Ok(Self {
            width,
            height,
            t_begin,
            t_end,
            events,
        })
    }

    /// Constructor for readers: the events must already be in canonical order.
    pub fn from_sorted(width: usize, height: usize, t_begin: u64, t_end: u64, events: Vec<Event>) -> Result<Self> {
        if let Some(i) = events.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::Unsorted(i + 1));
        }
        Self::with_span(width, height, t_begin, t_end, events)
    }

    pub fn empty(width: usize, height: usize, t_begin: u64, t_end: u64) -> Result<Self> {
        Self::with_span(width, height, t_begin, t_end, Vec::new())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn t_begin(&self) -> u64 {
        self.t_begin
    }

    pub fn t_end(&self) -> u64 {
        self.t_end
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Events with `lo <= t <= hi`.
    pub fn between(&self, lo: u64, hi: u64) -> &[Event] {
        let start = self.events.partition_point(|e| e.t < lo);
        let end = self.events.partition_point(|e| e.t <= hi);
        if start >= end {
            &[]
        } else {
            &self.events[start..end]
        }
    }

    /// Union of two streams over the same geometry; the span covers both.
    pub fn merge(&self, other: &EventStream) -> Result<EventStream> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::GeometryMismatch {
                expected: (self.width, self.height),
                found: (other.width, other.height),
            });
        }
        let mut events = Vec::with_capacity(self.len() + other.len());
        events.extend_from_slice(&self.events);
        events.extend_from_slice(&other.events);
        Self::with_span(
            self.width,
            self.height,
            self.t_begin.min(other.t_begin),
            self.t_end.max(other.t_end),
            events,
        )
    }

    /// Groups events with `lo <= t <= hi` by pixel (row-major), each list in time order.
    pub fn per_pixel(&self, lo: u64, hi: u64) -> Vec<Vec<Event>> {
        let mut buckets = vec![Vec::new(); self.width * self.height];
        for e in self.between(lo, hi) {
            buckets[e.y as usize * self.width + e.x as usize].push(*e);
        }
        buckets
    }
}

fn check_geometry(width: usize, height: usize) -> Result<()> {
    let max = u16::MAX as usize;
    if width == 0 || height == 0 || width > max || height > max {
        return Err(Error::BadParam(format!(
            "sensor geometry {width}x{height} must be within 1..=65535"
        )));
    }
    Ok(())
}
