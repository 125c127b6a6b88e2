//! Ping-Pong traffic monitor.
//!
//! Sits beside the memory controller and watches the Access stream (LLC
//! misses fetched from memory). Every Access is recorded in the cuckoo
//! filter; when a line's re-access count reaches the threshold it is
//! captured and tagged in the LLC. Evictions of tagged lines (pEvict) are
//! answered with a delayed prefetch that brings the line back, hiding the
//! victim's true access pattern from a probing attacker. A tagged line that
//! is evicted again without having been demand-accessed since its last
//! prefetch is dropped from the registry instead of prefetched, so a line
//! nobody uses cannot be prefetched endlessly.
//!
//! The monitor runs logically in parallel with memory fetches: nothing here
//! contributes to demand latency.

use crate::filter::{AutoCuckooFilter, FilterConfigError, FilterResponse, FilterStatus};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonitorConfig {
    /// Cycles to wait after a pEvict before the prefetch is issued, so the
    /// prefetch does not contend with the writeback of the same line.
    pub prefetch_delay: u64,
    pub filter_config: crate::filter::FilterConfig,
}

impl Default for MonitorConfig {
    /// The 200-cycle default delay covers one full DRAM access, so the
    /// prefetch never contends with the evicted line's writeback, and it is
    /// long enough not to land while an attacker is still walking the set it
    /// targets.
    fn default() -> Self {
        Self {
            prefetch_delay: 200,
            filter_config: crate::filter::FilterConfig::default(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MonitorError {
    #[error("pEvict for line {0:#x} which is not in the Ping-Pong registry")]
    UntrackedPevict(u64),
}

/// What the monitor asks the system to do after an Access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorAction {
    None,
    /// Tag the line as Ping-Pong when it installs in the LLC.
    Capture,
}

#[derive(Debug, Clone, Copy, Default)]
struct TagState {
    accessed_since_tag: bool,
    /// The first eviction after tagging prefetches unconditionally.
    first_evict_pending: bool,
}

/// Per-line tag bookkeeping, keyed by cache-line address. Presence means the
/// line is tagged Ping-Pong; the flags record whether it has been
/// demand-accessed since the last tag or prefetch.
#[derive(Debug, Clone, Default)]
pub struct PingPongRegistry {
    lines: BTreeMap<u64, TagState>,
}

impl PingPongRegistry {
    pub fn is_tagged(&self, addr: u64) -> bool {
        self.lines.contains_key(&addr)
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    fn get_mut(&mut self, addr: u64) -> Option<&mut TagState> {
        self.lines.get_mut(&addr)
    }

    fn tag(&mut self, addr: u64) {
        self.lines.entry(addr).or_insert(TagState {
            accessed_since_tag: false,
            first_evict_pending: true,
        });
    }

    fn drop_tag(&mut self, addr: u64) {
        self.lines.remove(&addr);
    }
}

/// A scheduled obfuscation prefetch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefetchRequest {
    pub addr: u64,
    pub due_cycle: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MonitorStats {
    pub accesses: u64,
    pub captures: u64,
    pub pevicts: u64,
    pub prefetches_scheduled: u64,
    pub tags_dropped: u64,
    /// Stale requests discarded at tick time because the guard dropped the
    /// tag while they were pending.
    pub prefetches_cancelled: u64,
}

/// Registry of tagged lines plus the delayed prefetch queue.
#[derive(Debug, Clone)]
pub struct Monitor {
    config: MonitorConfig,
    filter: AutoCuckooFilter,
    registry: PingPongRegistry,
    queue: VecDeque<PrefetchRequest>,
    stats: MonitorStats,
}

impl Monitor {
    pub fn new(config: MonitorConfig) -> Result<Self, FilterConfigError> {
        Ok(Self {
            filter: AutoCuckooFilter::new(config.filter_config)?,
            config,
            registry: PingPongRegistry::default(),
            queue: VecDeque::new(),
            stats: MonitorStats::default(),
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    pub fn filter(&self) -> &AutoCuckooFilter {
        &self.filter
    }

    pub fn stats(&self) -> &MonitorStats {
        &self.stats
    }

    pub fn registry(&self) -> &PingPongRegistry {
        &self.registry
    }

    pub fn is_tagged(&self, addr: u64) -> bool {
        self.registry.is_tagged(addr)
    }

    pub fn registry_len(&self) -> usize {
        self.registry.len()
    }

    /// Handles one memory Access. Runs in parallel with the fetch, so it
    /// never delays the demand path. Returns `Capture` exactly when the
    /// filter reports a Ping-Pong pattern.
    pub fn on_access(&mut self, addr: u64, _cycle: u64) -> (MonitorAction, FilterResponse) {
        self.stats.accesses += 1;
        if let Some(tag) = self.registry.get_mut(addr) {
            // A fetch of a tagged line is a demand access of it.
            tag.accessed_since_tag = true;
        }
        let response = self.filter.query_and_update(addr);
        let action = if response.status == FilterStatus::PingPong {
            MonitorAction::Capture
        } else {
            MonitorAction::None
        };
        (action, response)
    }

    /// Registers a captured line. Idempotent for already-tagged lines.
    pub fn on_capture(&mut self, addr: u64) {
        self.stats.captures += 1;
        self.registry.tag(addr);
    }

    /// Called by the system when a demand access is served by the LLC, the
    /// only cache level whose hits the hardware tag bits can observe.
    pub fn note_llc_touch(&mut self, addr: u64) {
        if let Some(tag) = self.registry.get_mut(addr) {
            tag.accessed_since_tag = true;
        }
    }

    /// Handles eviction of a tagged line. Schedules a prefetch on the first
    /// post-capture eviction or whenever the line was demand-accessed since
    /// the last tag/prefetch; otherwise drops the tag (endless-prefetch
    /// guard). A pEvict for an untracked line means cache and monitor have
    /// desynchronized.
    pub fn on_pevict(
        &mut self,
        addr: u64,
        cycle: u64,
    ) -> Result<Option<PrefetchRequest>, MonitorError> {
        self.stats.pevicts += 1;
        let tag = self
            .registry
            .get_mut(addr)
            .ok_or(MonitorError::UntrackedPevict(addr))?;
        if tag.first_evict_pending || tag.accessed_since_tag {
            tag.first_evict_pending = false;
            tag.accessed_since_tag = false;
            let req = PrefetchRequest {
                addr,
                due_cycle: cycle + self.config.prefetch_delay,
            };
            // Prefetch-install cascades report evictions at the parent
            // request's due cycle, which can trail already queued demand
            // pEvicts, so keep the queue due-ordered by stable insertion.
            let pos = self
                .queue
                .iter()
                .rposition(|q| q.due_cycle <= req.due_cycle)
                .map_or(0, |p| p + 1);
            self.queue.insert(pos, req);
            self.stats.prefetches_scheduled += 1;
            Ok(Some(req))
        } else {
            self.registry.drop_tag(addr);
            self.stats.tags_dropped += 1;
            Ok(None)
        }
    }

    /// Releases every request due at or before `cycle`, in scheduling order.
    /// Requests whose tag was dropped while they waited are discarded.
    pub fn tick(&mut self, cycle: u64) -> Vec<PrefetchRequest> {
        let mut due = Vec::new();
        while self.queue.front().is_some_and(|r| r.due_cycle <= cycle) {
            let req = self.queue.pop_front().expect("checked front");
            if self.registry.is_tagged(req.addr) {
                due.push(req);
            } else {
                self.stats.prefetches_cancelled += 1;
            }
        }
        due
    }

    /// Late cancellation: a cascade earlier in the same tick batch may have
    /// guard-dropped this request's tag after it was released. Returns true
    /// (and counts the cancellation) when the install must be skipped.
    pub fn cancel_if_untagged(&mut self, addr: u64) -> bool {
        if self.registry.is_tagged(addr) {
            false
        } else {
            self.stats.prefetches_cancelled += 1;
            true
        }
    }
}
