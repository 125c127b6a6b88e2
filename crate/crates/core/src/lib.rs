//! Deterministic model of a multi-core inclusive cache hierarchy guarded by
//! a Ping-Pong traffic monitor.
//!
//! The monitor watches LLC-to-memory fetches, records them in an
//! auto-deleting cuckoo filter, tags lines whose re-access count crosses a
//! threshold, and re-prefetches tagged lines after they are evicted to spoil
//! cross-core Prime+Probe observations. Scripted attacker/victim agents and
//! an experiment harness reproduce the filter-behavior curves and the
//! security analysis at desk scale.
//!
//! ```
//! use pipomon::{CacheGeometry, HitLevel, MonitorConfig, Simulator};
//!
//! let mut sim = Simulator::new(CacheGeometry::default(), Some(MonitorConfig::default())).unwrap();
//! let cold = sim.access(0, 0x51_0000, 0).unwrap();
//! assert!(cold.memory_access);
//! assert_eq!(cold.latency, 255);
//!
//! let warm = sim.access(1, 0x51_0000, 400).unwrap();
//! assert_eq!(warm.hit_level, HitLevel::Llc);
//! ```

pub mod attacks;
pub mod cachesim;
pub mod config;
pub mod experiments;
pub mod filter;
pub mod monitor;
pub mod rng;
pub mod sim;

pub use cachesim::{AccessResult, CacheGeometry, CacheHierarchy, HitLevel};
pub use filter::{theoretical_fpr, AutoCuckooFilter, FilterConfig, FilterResponse, FilterStatus};
pub use monitor::{Monitor, MonitorConfig, PingPongRegistry, PrefetchRequest};
pub use rng::SimRng;
pub use sim::{EventKind, EventLog, Simulator};
