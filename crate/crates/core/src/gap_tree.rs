//! Non-overlapping reservation store with per-AGV gap queries.
//!
//! All AGVs' reservations on one resource live in a single ordered map of
//! disjoint segments. Each segment carries the set of AGVs holding it, so
//! reservations of different AGVs may overlap while the stored segments never
//! do. A gap for AGV `a` is any stretch of time where no *other* AGV holds
//! the resource; an AGV's own reservations read as free time.
//!
//! Segments are kept canonical: no empty sets, and no two touching segments
//! with equal sets. Two trees holding the same reservations therefore compare
//! equal regardless of the operation history that produced them.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::ops::Bound::{Excluded, Included, Unbounded};
use std::sync::atomic::{AtomicU64, Ordering};

use smallvec::SmallVec;

use crate::time::{AgvId, Interval, TimePoint};

/// Bit set of AGV identifiers with O(1) membership.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct AgvSet {
    // Invariant: no trailing zero words, so equal sets have equal storage.
    words: SmallVec<[u64; 1]>,
}

impl AgvSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(agv: AgvId) -> Self {
        let mut set = Self::new();
        set.insert(agv);
        set
    }

    #[inline]
    pub fn contains(&self, agv: AgvId) -> bool {
        let (w, b) = (agv.index() / 64, agv.index() % 64);
        self.words.get(w).is_some_and(|word| word & (1 << b) != 0)
    }

    pub fn insert(&mut self, agv: AgvId) {
        let (w, b) = (agv.index() / 64, agv.index() % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << b;
    }

    pub fn remove(&mut self, agv: AgvId) {
        let (w, b) = (agv.index() / 64, agv.index() % 64);
        if let Some(word) = self.words.get_mut(w) {
            *word &= !(1 << b);
        }
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// True when some AGV other than `agv` is a member.
    #[inline]
    pub fn blocks(&self, agv: AgvId) -> bool {
        let (w, b) = (agv.index() / 64, agv.index() % 64);
        self.words.iter().enumerate().any(|(i, &word)| {
            let other = if i == w { word & !(1 << b) } else { word };
            other != 0
        })
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = AgvId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &word)| {
            (0..64).filter(move |b| word & (1 << b) != 0).map(move |b| AgvId((i * 64 + b) as u32))
        })
    }
}

impl fmt::Debug for AgvSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<AgvId> for AgvSet {
    fn from_iter<I: IntoIterator<Item = AgvId>>(iter: I) -> Self {
        let mut set = AgvSet::new();
        for agv in iter {
            set.insert(agv);
        }
        set
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Segment {
    end: TimePoint,
    holders: AgvSet,
}

/// Per-resource reservation store. See the module docs.
#[derive(Default)]
pub struct GapTree {
    segments: BTreeMap<TimePoint, Segment>,
    touched: AtomicU64,
}

impl Clone for GapTree {
    fn clone(&self) -> Self {
        GapTree { segments: self.segments.clone(), touched: AtomicU64::new(0) }
    }
}

impl PartialEq for GapTree {
    fn eq(&self, other: &Self) -> bool {
        self.segments == other.segments
    }
}

impl Eq for GapTree {}

impl fmt::Debug for GapTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.segments.iter().map(|(s, seg)| (Interval { start: *s, end: seg.end }, &seg.holders)))
            .finish()
    }
}

enum Edit {
    Insert,
    Remove,
}

impl GapTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of stored segments.
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Stored segments in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (Interval, &AgvSet)> + '_ {
        self.segments.iter().map(|(s, seg)| (Interval { start: *s, end: seg.end }, &seg.holders))
    }

    /// Cumulative count of segments visited by all operations; used to check
    /// that work depends on local density, not on tree size.
    pub fn touched(&self) -> u64 {
        self.touched.load(Ordering::Relaxed)
    }

    pub fn reset_touched(&self) {
        self.touched.store(0, Ordering::Relaxed);
    }

    #[inline]
    fn touch(&self, n: usize) {
        self.touched.fetch_add(n as u64, Ordering::Relaxed);
    }

    /// Reserves `ivl` for `agv`. Overlap with the AGV's existing reservations
    /// is idempotent. Empty intervals are ignored.
    pub fn insert(&mut self, agv: AgvId, ivl: Interval) {
        self.edit(agv, ivl, Edit::Insert);
    }

    /// Releases `agv`'s hold on every tick of `ivl`. Ticks the AGV does not
    /// hold are left untouched.
    pub fn remove(&mut self, agv: AgvId, ivl: Interval) {
        self.edit(agv, ivl, Edit::Remove);
    }

    fn edit(&mut self, agv: AgvId, ivl: Interval, edit: Edit) {
        if ivl.is_empty() {
            return;
        }
        let (s, e) = (ivl.start, ivl.end);

        // Affected segments: anything overlapping [s, e) plus the immediate
        // neighbours touching either endpoint, which may need re-merging.
        let mut keys: SmallVec<[TimePoint; 8]> = SmallVec::new();
        if let Some((&k, seg)) = self.segments.range(..s).next_back() {
            if seg.end >= s {
                keys.push(k);
            }
        }
        keys.extend(self.segments.range((Included(s), Included(e))).map(|(k, _)| *k));

        let old: SmallVec<[(TimePoint, Segment); 8]> =
            keys.iter().map(|k| (*k, self.segments.remove(k).expect("key collected above"))).collect();

        let mut out: SmallVec<[(TimePoint, Segment); 8]> = SmallVec::new();
        let mut push = |start: TimePoint, end: TimePoint, holders: AgvSet| {
            if start < end && !holders.is_empty() {
                out.push((start, Segment { end, holders }));
            }
        };

        let mut cursor = s;
        for (start, seg) in &old {
            let (start, end) = (*start, seg.end);
            if matches!(edit, Edit::Insert) {
                let upto = start.min(e);
                if cursor < upto {
                    push(cursor, upto, AgvSet::singleton(agv));
                    cursor = upto;
                }
            }
            if start < s {
                push(start, end.min(s), seg.holders.clone());
            }
            let (os, oe) = (start.max(s), end.min(e));
            if os < oe {
                let mut holders = seg.holders.clone();
                match edit {
                    Edit::Insert => holders.insert(agv),
                    Edit::Remove => holders.remove(agv),
                }
                push(os, oe, holders);
                cursor = cursor.max(oe);
            }
            if end > e {
                push(start.max(e), end, seg.holders.clone());
            }
        }
        if matches!(edit, Edit::Insert) && cursor < e {
            push(cursor, e, AgvSet::singleton(agv));
        }

        // Coalesce touching segments with equal holder sets.
        let mut merged: SmallVec<[(TimePoint, Segment); 8]> = SmallVec::new();
        for (start, seg) in out {
            match merged.last_mut() {
                Some((_, prev)) if prev.end == start && prev.holders == seg.holders => {
                    prev.end = seg.end;
                }
                _ => merged.push((start, seg)),
            }
        }

        self.touch(old.len() + merged.len());
        self.segments.extend(merged);
    }

    /// Segments overlapping `window` in ascending order.
    fn overlapping(&self, window: Interval) -> impl Iterator<Item = (TimePoint, &Segment)> + '_ {
        let pred = self.segments.range(..window.start).next_back().filter(|(_, seg)| seg.end > window.start);
        pred.into_iter()
            .chain(self.segments.range((Included(window.start), Excluded(window.end))))
            .map(|(k, seg)| (*k, seg))
    }

    /// Maximal sub-intervals of `window` in which no AGV other than `agv`
    /// holds the resource, clipped to `window`, ascending and non-touching.
    pub fn gap_query(&self, agv: AgvId, window: Interval) -> Vec<Interval> {
        let mut gaps = Vec::new();
        if window.is_empty() {
            return gaps;
        }
        let mut cursor = window.start;
        let mut visited = 0;
        for (start, seg) in self.overlapping(window) {
            visited += 1;
            if !seg.holders.blocks(agv) {
                continue;
            }
            if start > cursor {
                gaps.push(Interval { start: cursor, end: start });
            }
            cursor = cursor.max(seg.end);
        }
        if cursor < window.end {
            gaps.push(Interval { start: cursor, end: window.end });
        }
        self.touch(visited + 1);
        gaps
    }

    /// Like [`gap_query`](Self::gap_query) but each returned gap keeps its
    /// full extent instead of being clipped to `window`.
    pub fn gaps_overlapping(&self, agv: AgvId, window: Interval) -> Vec<Interval> {
        let mut gaps = self.gap_query(agv, window);
        let mut visited = 0;
        if let Some(first) = gaps.first_mut() {
            if first.start == window.start && window.start > TimePoint::ZERO {
                first.start = TimePoint::ZERO;
                for (_, seg) in self.segments.range(..window.start).rev() {
                    visited += 1;
                    if seg.holders.blocks(agv) {
                        first.start = seg.end;
                        break;
                    }
                }
            }
        }
        if let Some(last) = gaps.last_mut() {
            if last.end == window.end && window.end.is_finite() {
                last.end = TimePoint::INFINITY;
                for (start, seg) in self.segments.range((Included(window.end), Unbounded)) {
                    visited += 1;
                    if seg.holders.blocks(agv) {
                        last.end = *start;
                        break;
                    }
                }
            }
        }
        self.touch(visited);
        gaps
    }

    /// The maximal gap for `agv` containing tick `t`, if `t` is free.
    pub fn gap_containing(&self, agv: AgvId, t: TimePoint) -> Option<Interval> {
        if t.is_infinite() {
            return None;
        }
        self.gaps_overlapping(agv, Interval { start: t, end: t + 1 }).into_iter().next()
    }

    /// Segments overlapping `window` that are held by someone other than
    /// `agv`, clipped to `window`.
    pub fn conflicts(&self, agv: AgvId, window: Interval) -> Vec<(Interval, AgvSet)> {
        if window.is_empty() {
            return Vec::new();
        }
        self.overlapping(window)
            .filter(|(_, seg)| seg.holders.blocks(agv))
            .map(|(start, seg)| {
                let ivl = Interval { start: start.max(window.start), end: seg.end.min(window.end) };
                (ivl, seg.holders.clone())
            })
            .collect()
    }

    /// Every AGV's reservations, merged per AGV, sorted by (agv, start).
    pub fn reservations(&self) -> Vec<(AgvId, Interval)> {
        let mut open: BTreeMap<AgvId, Interval> = BTreeMap::new();
        let mut out = Vec::new();
        for (ivl, holders) in self.iter() {
            for agv in holders.iter() {
                match open.get_mut(&agv) {
                    Some(cur) if cur.end == ivl.start => cur.end = ivl.end,
                    Some(cur) => {
                        out.push((agv, *cur));
                        *cur = ivl;
                    }
                    None => {
                        open.insert(agv, ivl);
                    }
                }
            }
        }
        out.extend(open);
        out.sort();
        out
    }

    /// Full-scan check of the canonical-form invariants.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut prev: Option<(Interval, &AgvSet)> = None;
        for (ivl, holders) in self.iter() {
            if ivl.start >= ivl.end {
                return Err(format!("empty or inverted segment {ivl}"));
            }
            if holders.is_empty() {
                return Err(format!("segment {ivl} has no holders"));
            }
            if let Some((p, ph)) = prev {
                if p.end > ivl.start {
                    return Err(format!("segments {p} and {ivl} overlap"));
                }
                if p.end == ivl.start && ph == holders {
                    return Err(format!("segments {p} and {ivl} touch with equal holders"));
                }
            }
            prev = Some((ivl, holders));
        }
        Ok(())
    }

    /// Canonical text form: one `start end id,id,...` line per segment.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (ivl, holders) in self.iter() {
            let ids: Vec<String> = holders.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(out, "{} {} {}", ivl.start, ivl.end, ids.join(","));
        }
        out
    }

    /// Parses the output of [`dump`](Self::dump).
    pub fn from_dump(text: &str) -> Result<Self, String> {
        let mut tree = GapTree::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut parts = line.split_whitespace();
            let (Some(s), Some(e), Some(ids), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(format!("malformed line `{line}`"));
            };
            let start: TimePoint = s.parse().map_err(|e| format!("{e}"))?;
            let end: TimePoint = e.parse().map_err(|e| format!("{e}"))?;
            let ivl = Interval::try_new(start, end).ok_or_else(|| format!("bad interval in `{line}`"))?;
            for id in ids.split(',') {
                let id: u32 = id.parse().map_err(|_| format!("bad agv id `{id}`"))?;
                tree.insert(AgvId(id), ivl);
            }
        }
        Ok(tree)
    }
}

/// Shorthand used by tests and dumps.
pub fn agv_set(ids: &[u32]) -> AgvSet {
    ids.iter().map(|&i| AgvId(i)).collect()
}
