//! Benign synthetic workloads: every capture is a false positive because no
//! attacker is present.

use super::report::CsvReport;
use crate::cachesim::{CacheGeometry, LINE_SIZE};
use crate::monitor::MonitorConfig;
use crate::rng::SimRng;
use crate::sim::{EventKind, SimError, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workload {
    /// Fresh line every access; nothing is ever reused.
    Streaming,
    /// Loop over a working set that fits in the LLC.
    HotSetResident,
    /// Loop over a working set larger than the LLC, so every access misses.
    /// With a working set this much larger than the filter, records are
    /// churned out before their next reuse, so captures stay rare: the
    /// filter's observation window ignores bulk thrash.
    HotSetThrash,
    /// A small working set that thrashes a handful of LLC sets: ways+1
    /// lines per set, so every access misses while the filter sees each
    /// line again and again. The benign pattern most prone to captures.
    SetThrash,
    /// Uniform random lines from a large pool.
    Uniform,
}

impl Workload {
    pub fn name(self) -> &'static str {
        match self {
            Workload::Streaming => "streaming",
            Workload::HotSetResident => "hotset_resident",
            Workload::HotSetThrash => "hotset_thrash",
            Workload::SetThrash => "set_thrash",
            Workload::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticParams {
    pub geometry: CacheGeometry,
    pub monitor: MonitorConfig,
    pub accesses: u64,
    pub seed: u64,
    pub workloads: Vec<Workload>,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            geometry: CacheGeometry::default(),
            monitor: MonitorConfig::default(),
            accesses: 200_000,
            seed: 5,
            workloads: vec![
                Workload::Streaming,
                Workload::HotSetResident,
                Workload::HotSetThrash,
                Workload::SetThrash,
                Workload::Uniform,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SyntheticPoint {
    pub workload: Workload,
    pub captures: u64,
    pub captures_per_million: f64,
    pub prefetches_issued: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticOutcome {
    pub report: CsvReport,
    pub points: Vec<SyntheticPoint>,
}

fn line_for(workload: Workload, n: u64, geometry: &CacheGeometry, rng: &mut SimRng) -> u64 {
    let llc_lines = geometry.llc.size / LINE_SIZE;
    match workload {
        Workload::Streaming => n * LINE_SIZE,
        // Working set at half the LLC so reuse always hits some level.
        Workload::HotSetResident => (n % (llc_lines / 2)) * LINE_SIZE,
        // 5/4 of the LLC: the reuse distance exceeds capacity under LRU.
        Workload::HotSetThrash => (n % (llc_lines + llc_lines / 4)) * LINE_SIZE,
        // Eight sets, ways+1 lanes each, visited round-robin.
        Workload::SetThrash => {
            let sets = geometry.llc.sets() as u64;
            let lanes = geometry.llc.ways as u64 + 1;
            let set = n % 8;
            let lane = (n / 8) % lanes;
            (set + lane * sets) * LINE_SIZE
        }
        Workload::Uniform => (rng.next_u64() % (1 << 22)) * LINE_SIZE,
    }
}

pub fn run_synthetic(params: &SyntheticParams) -> Result<SyntheticOutcome, SimError> {
    let mut report = CsvReport::new(vec![
        "workload",
        "captures_per_million_accesses",
        "prefetches_issued",
    ]);
    let mut points = Vec::new();
    for &workload in &params.workloads {
        let mut sim = Simulator::new(params.geometry, Some(params.monitor))?;
        let mut rng = SimRng::new(params.seed);
        let mut cycle = 0u64;
        let cores = params.geometry.cores as u64;
        for n in 0..params.accesses {
            let core = (n % cores) as usize;
            let addr = line_for(workload, n, &params.geometry, &mut rng);
            let result = sim.access(core, addr, cycle)?;
            cycle += result.latency;
        }
        sim.drain_prefetches(cycle + 1_000_000)?;
        let captures = sim.log().count(EventKind::Capture) as u64;
        let prefetches = sim.log().count(EventKind::Prefetch) as u64;
        let point = SyntheticPoint {
            workload,
            captures,
            captures_per_million: captures as f64 * 1e6 / params.accesses as f64,
            prefetches_issued: prefetches,
        };
        report.push_row(vec![
            workload.name().to_string(),
            format!("{:.3}", point.captures_per_million),
            prefetches.to_string(),
        ]);
        points.push(point);
    }
    Ok(SyntheticOutcome { report, points })
}
