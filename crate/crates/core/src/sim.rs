//! System simulator: cache hierarchy plus optional monitor, driven by an
//! explicit cycle-ordered access stream.
//!
//! Produces a structured event log (one record per Access, Capture, pEvict
//! and Prefetch) with CSV columns `{cycle, event, addr_hex, security,
//! detail}`; `security` is -1 where no filter response is involved. Also
//! accepts text traces with one access per line: `{cycle} {core} {R|W}
//! {addr_hex}`.

use crate::cachesim::{AccessResult, CacheGeometry, CacheHierarchy, GeometryError, HitLevel};
use crate::filter::FilterConfigError;
use crate::monitor::{Monitor, MonitorAction, MonitorConfig, MonitorError};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Filter(#[from] FilterConfigError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: expected '{{cycle}} {{core}} {{R|W}} {{addr_hex}}', got {found:?}")]
    Malformed { line: usize, found: String },
    #[error("line {line}: cycles must be non-decreasing")]
    CycleOrder { line: usize },
    #[error("line {line}: core {core} out of range")]
    CoreRange { line: usize, core: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Access,
    Capture,
    PEvict,
    Prefetch,
}

impl EventKind {
    fn name(self) -> &'static str {
        match self {
            EventKind::Access => "access",
            EventKind::Capture => "capture",
            EventKind::PEvict => "pevict",
            EventKind::Prefetch => "prefetch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub cycle: u64,
    pub kind: EventKind,
    pub addr: u64,
    /// Filter response security, -1 when not applicable.
    pub security: i8,
    pub detail: &'static str,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

impl EventLog {
    fn push(&mut self, cycle: u64, kind: EventKind, addr: u64, security: i8, detail: &'static str) {
        self.records.push(EventRecord {
            cycle,
            kind,
            addr,
            security,
            detail,
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,event,addr_hex,security,detail\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{},{:#x},{},{}",
                r.cycle,
                r.kind.name(),
                r.addr,
                r.security,
                r.detail
            )
            .expect("write to string");
        }
        out
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }
}

/// One parsed trace access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceAccess {
    pub cycle: u64,
    pub core: usize,
    pub write: bool,
    pub addr: u64,
}

/// Parses `{cycle} {core} {R|W} {addr_hex}` lines. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<TraceAccess>, TraceError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let (Some(c), Some(k), Some(rw), Some(a)) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(TraceError::Malformed {
                line,
                found: trimmed.to_string(),
            });
        };
        let malformed = || TraceError::Malformed {
            line,
            found: trimmed.to_string(),
        };
        let cycle: u64 = c.parse().map_err(|_| malformed())?;
        let core: usize = k.parse().map_err(|_| malformed())?;
        let write = match rw {
            "R" | "r" => false,
            "W" | "w" => true,
            _ => return Err(malformed()),
        };
        let addr = u64::from_str_radix(a.trim_start_matches("0x"), 16).map_err(|_| malformed())?;
        out.push(TraceAccess {
            cycle,
            core,
            write,
            addr,
        });
    }
    Ok(out)
}

/// Hierarchy plus optional monitor, with event logging.
#[derive(Debug, Clone)]
pub struct Simulator {
    hierarchy: CacheHierarchy,
    monitor: Option<Monitor>,
    log: EventLog,
    last_cycle: u64,
}

impl Simulator {
    pub fn new(geometry: CacheGeometry, monitor: Option<MonitorConfig>) -> Result<Self, SimError> {
        Ok(Self {
            hierarchy: CacheHierarchy::new(geometry)?,
            monitor: monitor.map(Monitor::new).transpose()?,
            log: EventLog::default(),
            last_cycle: 0,
        })
    }

    pub fn hierarchy(&self) -> &CacheHierarchy {
        &self.hierarchy
    }

    pub fn monitor(&self) -> Option<&Monitor> {
        self.monitor.as_ref()
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn monitor_enabled(&self) -> bool {
        self.monitor.is_some()
    }

    /// One demand access at `cycle`. Due prefetches are installed first;
    /// monitor processing happens off the demand path and never changes the
    /// returned latency.
    pub fn access(&mut self, core: usize, addr: u64, cycle: u64) -> Result<AccessResult, SimError> {
        debug_assert!(cycle >= self.last_cycle, "cycles must be non-decreasing");
        self.last_cycle = cycle;
        self.service_due_prefetches(cycle)?;

        let result = self.hierarchy.access(core, addr);
        if self.monitor.is_none() {
            if result.memory_access {
                self.log.push(cycle, EventKind::Access, addr, -1, "memory");
            }
            return Ok(result);
        }

        if result.hit_level == HitLevel::Llc {
            self.monitor.as_mut().unwrap().note_llc_touch(addr & !63);
        }
        if result.memory_access {
            let line = addr & !63;
            let (action, response) = self.monitor.as_mut().unwrap().on_access(line, cycle);
            self.log.push(
                cycle,
                EventKind::Access,
                line,
                response.security as i8,
                match response.status {
                    crate::filter::FilterStatus::Inserted => "insert",
                    crate::filter::FilterStatus::ReAccess => "reaccess",
                    crate::filter::FilterStatus::PingPong => "pingpong",
                },
            );
            if action == MonitorAction::Capture {
                self.monitor.as_mut().unwrap().on_capture(line);
                self.hierarchy.set_pingpong_tag(line);
                self.log.push(
                    cycle,
                    EventKind::Capture,
                    line,
                    response.security as i8,
                    "tagged",
                );
            }
        }
        for &victim in &result.pevicts {
            self.handle_pevict(victim, cycle)?;
        }
        Ok(result)
    }

    fn handle_pevict(&mut self, victim: u64, cycle: u64) -> Result<(), SimError> {
        let scheduled = self.monitor.as_mut().unwrap().on_pevict(victim, cycle)?;
        self.log.push(
            cycle,
            EventKind::PEvict,
            victim,
            -1,
            if scheduled.is_some() {
                "prefetch_scheduled"
            } else {
                "tag_dropped"
            },
        );
        Ok(())
    }

    fn service_due_prefetches(&mut self, cycle: u64) -> Result<(), SimError> {
        let Some(monitor) = self.monitor.as_mut() else {
            return Ok(());
        };
        let due = monitor.tick(cycle);
        for req in due {
            if self.monitor.as_mut().unwrap().cancel_if_untagged(req.addr) {
                continue;
            }
            let install = self.hierarchy.install_prefetch(req.addr);
            self.log.push(
                req.due_cycle,
                EventKind::Prefetch,
                req.addr,
                -1,
                if install.installed {
                    "install"
                } else {
                    "refresh"
                },
            );
            for victim in install.pevicts {
                self.handle_pevict(victim, req.due_cycle)?;
            }
        }
        Ok(())
    }

    /// Flushes prefetches that fall due after the last demand access.
    pub fn drain_prefetches(&mut self, cycle: u64) -> Result<(), SimError> {
        self.service_due_prefetches(cycle)
    }

    /// Replays a parsed trace in order.
    pub fn run_trace(&mut self, trace: &[TraceAccess]) -> Result<Vec<AccessResult>, SimRunError> {
        let cores = self.hierarchy.geometry().cores;
        let mut last = 0u64;
        let mut results = Vec::with_capacity(trace.len());
        for (idx, acc) in trace.iter().enumerate() {
            let line = idx + 1;
            if acc.cycle < last {
                return Err(SimRunError::Trace(TraceError::CycleOrder { line }));
            }
            last = acc.cycle;
            if acc.core >= cores {
                return Err(SimRunError::Trace(TraceError::CoreRange {
                    line,
                    core: acc.core,
                }));
            }
            results.push(self.access(acc.core, acc.addr, acc.cycle)?);
        }
        Ok(results)
    }
}

#[derive(Debug, Error)]
pub enum SimRunError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cachesim::LevelGeometry;
    use crate::filter::FilterConfig;

    fn toy_geometry() -> CacheGeometry {
        CacheGeometry {
            l1: LevelGeometry {
                size: 2 * 64,
                ways: 1,
                latency: 2,
            },
            l2: LevelGeometry {
                size: 8 * 64,
                ways: 2,
                latency: 18,
            },
            llc: LevelGeometry {
                size: 16 * 64,
                ways: 2,
                latency: 35,
            },
            dram_latency: 200,
            cores: 2,
        }
    }

    fn monitored() -> Simulator {
        Simulator::new(toy_geometry(), Some(MonitorConfig::default())).unwrap()
    }

    fn line_in_llc_set(set: u64, k: u64) -> u64 {
        (set + k * 8) * 64
    }

    #[test]
    fn parse_trace_accepts_documented_format() {
        let text = "# comment\n0 0 R 0x40\n10 1 W ff80\n\n20 0 R 0x40\n";
        let t = parse_trace(text).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(
            t[0],
            TraceAccess {
                cycle: 0,
                core: 0,
                write: false,
                addr: 0x40
            }
        );
        assert_eq!(
            t[1],
            TraceAccess {
                cycle: 10,
                core: 1,
                write: true,
                addr: 0xff80
            }
        );
    }

    #[test]
    fn parse_trace_rejects_garbage() {
        assert!(matches!(
            parse_trace("0 0 R"),
            Err(TraceError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_trace("0 0 X 0x40"),
            Err(TraceError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn run_trace_enforces_cycle_order_and_core_range() {
        let mut sim = monitored();
        let t = parse_trace("10 0 R 0x40\n5 0 R 0x80").unwrap();
        assert!(matches!(
            sim.run_trace(&t),
            Err(SimRunError::Trace(TraceError::CycleOrder { line: 2 }))
        ));
        let mut sim = monitored();
        let t = parse_trace("0 7 R 0x40").unwrap();
        assert!(matches!(
            sim.run_trace(&t),
            Err(SimRunError::Trace(TraceError::CoreRange {
                line: 1,
                core: 7
            }))
        ));
    }

    #[test]
    fn monitor_does_not_change_demand_latency() {
        // Same trace with and without the monitor, kept below the capture
        // threshold so no prefetch ever mutates cache state.
        let mut tr = String::new();
        for i in 0..120u64 {
            tr.push_str(&format!("{} {} R {:x}\n", i * 10, i % 2, (i % 40) * 64));
        }
        let trace = parse_trace(&tr).unwrap();
        let mut plain = Simulator::new(toy_geometry(), None).unwrap();
        let mut watched = monitored();
        let a = plain.run_trace(&trace).unwrap();
        let b = watched.run_trace(&trace).unwrap();
        let lat_a: Vec<u64> = a.iter().map(|r| r.latency).collect();
        let lat_b: Vec<u64> = b.iter().map(|r| r.latency).collect();
        assert_eq!(lat_a, lat_b);
        assert_eq!(watched.log().count(EventKind::Prefetch), 0);
    }

    #[test]
    fn deterministic_replay_produces_identical_logs() {
        let mut tr = String::new();
        let mut rng = crate::rng::SimRng::new(12);
        for i in 0..500u64 {
            tr.push_str(&format!(
                "{} {} R {:x}\n",
                i * 7,
                rng.gen_index(2),
                (rng.next_u64() % 24) * 64
            ));
        }
        let trace = parse_trace(&tr).unwrap();
        let mut a = monitored();
        let mut b = monitored();
        a.run_trace(&trace).unwrap();
        b.run_trace(&trace).unwrap();
        assert_eq!(a.log(), b.log());
        assert_eq!(a.log().to_csv(), b.log().to_csv());
    }

    #[test]
    fn pingpong_line_is_captured_tagged_and_prefetched() {
        let mut sim = monitored();
        let hot = line_in_llc_set(1, 0);
        let thrash = [line_in_llc_set(1, 1), line_in_llc_set(1, 2)];
        let mut cycle = 0u64;
        // Alternate hot-line fetches with set-thrashing so every hot access
        // goes to memory.
        for _ in 0..6u64 {
            sim.access(0, hot, cycle).unwrap();
            cycle += 300;
            for &t in &thrash {
                sim.access(1, t, cycle).unwrap();
                cycle += 300;
            }
        }
        sim.drain_prefetches(cycle + 10_000).unwrap();
        let log = sim.log();
        assert!(log.count(EventKind::Capture) >= 1, "hot line captured");
        assert!(log.count(EventKind::PEvict) >= 1);
        assert!(log.count(EventKind::Prefetch) >= 1);
        // No prefetch for a line that was never captured.
        for (i, r) in log.records.iter().enumerate() {
            if r.kind == EventKind::Prefetch {
                assert!(
                    log.records[..i]
                        .iter()
                        .any(|e| e.kind == EventKind::Capture && e.addr == r.addr),
                    "prefetch of {:#x} without prior capture",
                    r.addr
                );
            }
        }
        let csv = log.to_csv();
        assert!(csv.starts_with("cycle,event,addr_hex,security,detail\n"));
        assert!(csv.contains("capture"));
    }

    #[test]
    fn prefetched_line_answers_next_probe_from_llc() {
        let mut sim = monitored();
        let hot = line_in_llc_set(3, 0);
        let thrash = [line_in_llc_set(3, 1), line_in_llc_set(3, 2)];
        let mut cycle = 0u64;
        // Four rounds: the fourth hot fetch is captured, and the round's
        // thrashing then evicts the tagged line (first post-capture pEvict).
        for _ in 0..4 {
            sim.access(0, hot, cycle).unwrap();
            cycle += 500;
            for &t in &thrash {
                sim.access(1, t, cycle).unwrap();
                cycle += 500;
            }
        }
        cycle += 5_000;
        let r = sim.access(1, hot, cycle).unwrap();
        assert_eq!(r.hit_level, HitLevel::Llc, "probe sees the prefetched line");
        assert!(sim.hierarchy().llc_filled_by_prefetch(hot));
    }

    #[test]
    fn guard_integration_drops_then_retags() {
        let mut sim = Simulator::new(
            toy_geometry(),
            Some(MonitorConfig {
                prefetch_delay: 10,
                filter_config: FilterConfig::default(),
            }),
        )
        .unwrap();
        let hot = line_in_llc_set(5, 0);
        let thrash = [line_in_llc_set(5, 1), line_in_llc_set(5, 2)];
        let mut cycle = 0u64;
        // Capture the hot line.
        for _ in 0..4 {
            sim.access(0, hot, cycle).unwrap();
            cycle += 100;
            for &t in &thrash {
                sim.access(1, t, cycle).unwrap();
                cycle += 100;
            }
        }
        // The tagged line keeps being prefetched and evicted with no demand
        // access; eventually a pEvict hits the guard and drops the tag.
        for _ in 0..4 {
            for &t in &thrash {
                sim.access(1, t, cycle).unwrap();
                cycle += 100;
            }
        }
        sim.drain_prefetches(cycle + 1_000).unwrap();
        let drops = sim
            .log()
            .records
            .iter()
            .filter(|r| r.kind == EventKind::PEvict && r.detail == "tag_dropped")
            .count();
        assert!(
            drops >= 1,
            "endless-prefetch guard fired\n{}",
            sim.log().to_csv()
        );
    }
}
