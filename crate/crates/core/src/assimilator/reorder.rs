//! Watermark reorder buffer for out-of-order frame delivery.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::frames::{ItemKey, StreamItem};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReorderStats {
    pub released: u64,
    pub late: u64,
    pub duplicates: u64,
}

/// Holds items until no earlier frame can still arrive. With the highest
/// frame index seen so far at `m`, everything at or below `m - max_lag` is
/// released in key order. Items at or below an already released index are
/// late and dropped; repeated keys are dropped as duplicates.
#[derive(Debug, Clone)]
pub struct ReorderBuffer {
    max_lag: u64,
    pending: BTreeMap<ItemKey, StreamItem>,
    max_seen: Option<u64>,
    released_upto: Option<u64>,
    stats: ReorderStats,
}

impl ReorderBuffer {
    pub fn new(max_lag: u64) -> Self {
        ReorderBuffer {
            max_lag,
            pending: BTreeMap::new(),
            max_seen: None,
            released_upto: None,
            stats: ReorderStats::default(),
        }
    }

    pub fn stats(&self) -> ReorderStats {
        self.stats
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Accept one item and append whatever became releasable to `out`.
    pub fn push(&mut self, item: StreamItem, out: &mut Vec<StreamItem>) {
        let key = item.key();
        if self.released_upto.is_some_and(|r| key.frame_index <= r) {
            self.stats.late += 1;
            return;
        }
        if self.pending.contains_key(&key) {
            self.stats.duplicates += 1;
            return;
        }
        self.pending.insert(key, item);
        let max_seen = self.max_seen.map_or(key.frame_index, |m| m.max(key.frame_index));
        self.max_seen = Some(max_seen);
        if let Some(watermark) = max_seen.checked_sub(self.max_lag) {
            self.release_through(watermark, out);
        }
    }

    /// Release everything still held.
    pub fn flush(&mut self, out: &mut Vec<StreamItem>) {
        if let Some(m) = self.max_seen {
            self.release_through(m, out);
        }
    }

    fn release_through(&mut self, watermark: u64, out: &mut Vec<StreamItem>) {
        if self.released_upto.is_some_and(|r| r >= watermark) {
            return;
        }
        while let Some(entry) = self.pending.first_entry() {
            if entry.key().frame_index > watermark {
                break;
            }
            out.push(entry.remove());
            self.stats.released += 1;
        }
        self.released_upto = Some(watermark);
    }
}

/// Reorder a whole stream at once.
pub fn reorder_all(items: impl IntoIterator<Item = StreamItem>, max_lag: u64) -> (Vec<StreamItem>, ReorderStats) {
    let mut buf = ReorderBuffer::new(max_lag);
    let mut out = Vec::new();
    for item in items {
        buf.push(item, &mut out);
    }
    buf.flush(&mut out);
    (out, buf.stats())
}
