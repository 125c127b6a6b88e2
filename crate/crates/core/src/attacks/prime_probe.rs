//! Cross-core Prime+Probe against the square-and-multiply victim.
//!
//! Every probe period the attacker primes one eviction set per target
//! address, lets the victim run its key bit, then re-accesses the sets and
//! classifies each line by latency. A set with a slow line means the victim
//! touched the matching target. Priming walks the set in ascending order and
//! probing in descending order, which keeps LRU self-interference to the one
//! line the victim displaced. The attacker also times the targets directly
//! at the end of each window, which is how prefetch obfuscation becomes
//! visible in the trace.

use super::victim::SquareMultiplyVictim;
use super::AttackError;
use crate::cachesim::{CacheGeometry, LINE_SIZE};
use crate::monitor::MonitorConfig;
use crate::sim::{EventLog, SimError, Simulator};

const VICTIM_CORE: usize = 0;
const ATTACKER_CORE: usize = 1;
/// Gap between consecutive attacker accesses within a phase.
const ACCESS_STRIDE: u64 = 7;

/// Returns `ways` distinct addresses, none equal to the target, that all map
/// to the target's LLC set.
pub fn build_eviction_set(
    target_addr: u64,
    geometry: &CacheGeometry,
) -> Result<Vec<u64>, AttackError> {
    let sets = geometry.llc.sets() as u64;
    let stride = sets * LINE_SIZE;
    let ways = geometry.llc.ways as u64;
    if stride
        .checked_mul(ways + 1)
        .and_then(|span| target_addr.checked_add(span))
        .is_none()
    {
        return Err(AttackError::AddressSpaceExhausted {
            needed: ways as usize,
        });
    }
    Ok((1..=ways).map(|k| target_addr + k * stride).collect())
}

/// Lines the attacker touches to flush its own L1/L2 copies of an eviction
/// set. They share the set's private-cache sets but land in other LLC sets,
/// so probe loads reach the LLC (whose LRU state the attack manipulates)
/// instead of being absorbed by the private levels.
fn build_scrub_set(target_addr: u64, geometry: &CacheGeometry) -> Vec<u64> {
    let l2_stride = geometry.l2.sets() as u64 * LINE_SIZE;
    let llc_sets = geometry.llc.sets() as u64;
    let mut out = Vec::with_capacity(geometry.l2.ways);
    let mut k = 1u64;
    while out.len() < geometry.l2.ways && k < 64 {
        // Skip strides that stay inside the target's LLC set.
        if !(k * geometry.l2.sets() as u64).is_multiple_of(llc_sets) {
            if let Some(addr) = target_addr.checked_add(k * l2_stride) {
                out.push(addr);
            }
        }
        k += 1;
    }
    out
}

/// One attacker, two targets, pre-built eviction sets.
#[derive(Debug, Clone)]
pub struct PrimeProbeAttacker {
    pub square_set: Vec<u64>,
    pub multiply_set: Vec<u64>,
    /// Cycles between attack iterations.
    pub probe_period: u64,
    /// Latency above which a probe counts as a miss; midpoint of the LLC and
    /// memory latencies.
    pub threshold: u64,
}

impl PrimeProbeAttacker {
    pub fn new(
        square_addr: u64,
        multiply_addr: u64,
        probe_period: u64,
        geometry: &CacheGeometry,
    ) -> Result<Self, AttackError> {
        Ok(Self {
            square_set: build_eviction_set(square_addr, geometry)?,
            multiply_set: build_eviction_set(multiply_addr, geometry)?,
            probe_period,
            threshold: (geometry.llc.latency + geometry.memory_latency()) / 2,
        })
    }
}

/// A full Prime+Probe run description.
#[derive(Debug, Clone)]
pub struct AttackScenario {
    pub geometry: CacheGeometry,
    /// `Some` runs with the monitor guarding the LLC.
    pub monitor: Option<MonitorConfig>,
    pub victim: SquareMultiplyVictim,
    pub probe_period: u64,
}

impl AttackScenario {
    pub fn new(
        geometry: CacheGeometry,
        monitor: Option<MonitorConfig>,
        victim: SquareMultiplyVictim,
    ) -> Self {
        Self {
            geometry,
            monitor,
            victim,
            probe_period: 5000,
        }
    }
}

/// Per-iteration observations of both targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationObservation {
    pub square_miss: bool,
    pub multiply_miss: bool,
    pub victim_square: bool,
    pub victim_multiply: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ProbeTrace {
    pub iterations: Vec<IterationObservation>,
}

#[derive(Debug, Clone)]
pub struct KeyRecoveryResult {
    pub inferred_bits: Vec<bool>,
    pub true_bits: Vec<bool>,
    pub accuracy: f64,
}

/// Direct timing of the target lines at the end of a window.
#[derive(Debug, Clone, Copy)]
pub struct TargetProbe {
    pub iteration: usize,
    pub square_latency: u64,
    pub multiply_latency: u64,
    /// True when the target sat in the LLC via a monitor prefetch when the
    /// probe was issued.
    pub square_prefetch_live: bool,
    pub multiply_prefetch_live: bool,
}

#[derive(Debug, Clone)]
pub struct PrimeProbeOutcome {
    pub trace: ProbeTrace,
    pub recovery: KeyRecoveryResult,
    pub target_probes: Vec<TargetProbe>,
    pub threshold: u64,
    pub log: EventLog,
}

/// Runs the scenario for one iteration per key bit and decodes the key from
/// the square-set observations (the multiply routine fires every iteration
/// and carries no information).
pub fn run_prime_probe(scenario: &AttackScenario) -> Result<PrimeProbeOutcome, AttackError> {
    if scenario.geometry.cores < 2 {
        return Err(AttackError::NeedTwoCores);
    }
    let victim = &scenario.victim;
    let attacker = PrimeProbeAttacker::new(
        victim.square_addr,
        victim.multiply_addr,
        scenario.probe_period,
        &scenario.geometry,
    )?;
    let mut sim = Simulator::new(scenario.geometry, scenario.monitor)
        .map_err(|e| AttackError::Sim(e.to_string()))?;

    let period = attacker.probe_period;
    let mut trace = ProbeTrace::default();
    let mut target_probes = Vec::with_capacity(victim.len());
    let mut inferred = Vec::with_capacity(victim.len());

    let access =
        |sim: &mut Simulator, core: usize, addr: u64, cycle: u64| -> Result<u64, SimError> {
            Ok(sim.access(core, addr, cycle)?.latency)
        };

    let scrub: Vec<u64> = build_scrub_set(victim.square_addr, &scenario.geometry)
        .into_iter()
        .chain(build_scrub_set(victim.multiply_addr, &scenario.geometry))
        .collect();

    for (i, &bit) in victim.secret_bits.iter().enumerate() {
        let t0 = i as u64 * period;

        // Flush private copies left by the previous probe, then prime the
        // LLC sets in ascending order.
        let mut t = t0;
        for &a in &scrub {
            access(&mut sim, ATTACKER_CORE, a, t).map_err(AttackError::from_sim)?;
            t += ACCESS_STRIDE;
        }
        let mut t = t0 + period / 5;
        for &a in attacker.square_set.iter().chain(&attacker.multiply_set) {
            access(&mut sim, ATTACKER_CORE, a, t).map_err(AttackError::from_sim)?;
            t += ACCESS_STRIDE;
        }

        // Victim runs its bit mid-window.
        let mut tv = t0 + period / 2;
        for addr in victim.accesses_for_bit(i) {
            access(&mut sim, VICTIM_CORE, addr, tv).map_err(AttackError::from_sim)?;
            tv += 20;
        }

        // Flush again so probe loads reach the LLC, then probe descending,
        // classifying by latency.
        let mut t = t0 + period * 3 / 5;
        for &a in &scrub {
            access(&mut sim, ATTACKER_CORE, a, t).map_err(AttackError::from_sim)?;
            t += ACCESS_STRIDE;
        }
        let mut tp = t0 + period * 7 / 10;
        let mut set_miss = [false; 2];
        for (which, set) in [&attacker.square_set, &attacker.multiply_set]
            .into_iter()
            .enumerate()
        {
            for &a in set.iter().rev() {
                let lat = access(&mut sim, ATTACKER_CORE, a, tp).map_err(AttackError::from_sim)?;
                set_miss[which] |= lat > attacker.threshold;
                tp += ACCESS_STRIDE;
            }
        }

        // Direct target probes close the window.
        let td = t0 + period * 9 / 10;
        sim.drain_prefetches(td).map_err(AttackError::from_sim)?;
        let square_live = sim.hierarchy().llc_filled_by_prefetch(victim.square_addr);
        let square_latency = access(&mut sim, ATTACKER_CORE, victim.square_addr, td)
            .map_err(AttackError::from_sim)?;
        let multiply_live = sim.hierarchy().llc_filled_by_prefetch(victim.multiply_addr);
        let multiply_latency = access(&mut sim, ATTACKER_CORE, victim.multiply_addr, td + 20)
            .map_err(AttackError::from_sim)?;
        target_probes.push(TargetProbe {
            iteration: i,
            square_latency,
            multiply_latency,
            square_prefetch_live: square_live,
            multiply_prefetch_live: multiply_live,
        });

        trace.iterations.push(IterationObservation {
            square_miss: set_miss[0],
            multiply_miss: set_miss[1],
            victim_square: bit,
            victim_multiply: true,
        });
        inferred.push(set_miss[0]);
    }

    let matches = inferred
        .iter()
        .zip(&victim.secret_bits)
        .filter(|(a, b)| a == b)
        .count();
    let recovery = KeyRecoveryResult {
        accuracy: matches as f64 / victim.len().max(1) as f64,
        inferred_bits: inferred,
        true_bits: victim.secret_bits.clone(),
    };
    Ok(PrimeProbeOutcome {
        trace,
        recovery,
        target_probes,
        threshold: attacker.threshold,
        log: sim.log().clone(),
    })
}

/// The two probe targets placed in distinct LLC sets, straddling nothing
/// else the scenarios use.
pub fn default_targets(geometry: &CacheGeometry) -> (u64, u64) {
    let _ = geometry;
    let square = 0x51_0000u64;
    let multiply = square + LINE_SIZE;
    (square, multiply)
}
