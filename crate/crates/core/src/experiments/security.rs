//! Security experiments: brute-force eviction cost, reverse-attack scaling,
//! and the end-to-end Prime+Probe run.

use super::report::{summarize, CsvReport, Summary};
use crate::attacks::{
    default_targets, fill_to_capacity, run_brute_force_evict, run_prime_probe, run_reverse_attack,
    AttackError, AttackScenario, ReverseAttackConfig, ReverseAttackReport, SquareMultiplyVictim,
};
use crate::cachesim::CacheGeometry;
use crate::filter::{AutoCuckooFilter, FilterConfig};
use crate::monitor::MonitorConfig;
use crate::rng::SimRng;

#[derive(Debug, Clone)]
pub struct BruteForceParams {
    pub l: u32,
    pub b: usize,
    pub trials: u64,
    pub seed: u64,
}

impl Default for BruteForceParams {
    fn default() -> Self {
        Self {
            l: 1024,
            b: 8,
            trials: 300,
            seed: 5150,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BruteForceOutcome {
    pub report: CsvReport,
    pub fills: Vec<u64>,
    pub summary: Summary,
    /// The analytical expectation `b * l`.
    pub expected_mean: f64,
}

/// Repeated brute-force evictions of one target from a full filter; the
/// filter stays full across trials, the target is re-primed each time.
pub fn run_brute_force_experiment(
    params: &BruteForceParams,
) -> Result<BruteForceOutcome, AttackError> {
    let config = FilterConfig {
        l: params.l,
        b: params.b,
        rng_seed: params.seed ^ 0xB0,
        ..FilterConfig::default()
    };
    let mut filter =
        AutoCuckooFilter::new(config).map_err(|e| AttackError::Filter(e.to_string()))?;
    fill_to_capacity(&mut filter, params.seed ^ 0xF1);
    let target = 0xDEAD_BEEF_0000u64;
    let mut rng = SimRng::new(params.seed);
    let mut report = CsvReport::new(vec!["trial", "fills"]);
    let mut fills = Vec::with_capacity(params.trials as usize);
    for trial in 0..params.trials {
        while !filter.contains(target) {
            filter.query_and_update(target);
        }
        let n = run_brute_force_evict(&mut filter, target, &mut rng)?;
        report.push_row(vec![trial.to_string(), n.to_string()]);
        fills.push(n);
    }
    let values: Vec<f64> = fills.iter().map(|&v| v as f64).collect();
    Ok(BruteForceOutcome {
        report,
        summary: summarize(&values),
        expected_mean: (params.b as u64 * params.l as u64) as f64,
        fills,
    })
}

#[derive(Debug, Clone)]
pub struct ReverseParams {
    /// `(b, mnk)` cases to drive.
    pub cases: Vec<(usize, u32)>,
    pub l: u32,
    pub seed: u64,
}

impl Default for ReverseParams {
    fn default() -> Self {
        Self {
            cases: vec![(2, 0), (2, 1), (2, 2), (8, 4)],
            l: 1024,
            seed: 23,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReverseOutcome {
    pub report: CsvReport,
    pub reports: Vec<(usize, u32, ReverseAttackReport)>,
}

pub fn run_reverse_experiment(params: &ReverseParams) -> Result<ReverseOutcome, AttackError> {
    let mut report = CsvReport::new(vec![
        "b",
        "mnk",
        "l",
        "eviction_set_size",
        "setup_inserts",
        "fills_issued",
        "success",
    ]);
    let mut reports = Vec::new();
    for &(b, mnk) in &params.cases {
        let config = FilterConfig {
            l: params.l,
            b,
            mnk,
            rng_seed: params.seed ^ ((b as u64) << 8) ^ mnk as u64,
            ..FilterConfig::default()
        };
        let mut rc = ReverseAttackConfig::new(config, 0xBEEF40);
        rc.prefill_seed = params.seed;
        let r = run_reverse_attack(&rc)?;
        report.push_row(vec![
            b.to_string(),
            mnk.to_string(),
            params.l.to_string(),
            r.eviction_set_size_used.to_string(),
            r.setup_inserts.to_string(),
            r.fills_issued.to_string(),
            (r.success as u8).to_string(),
        ]);
        reports.push((b, mnk, r));
    }
    Ok(ReverseOutcome { report, reports })
}

#[derive(Debug, Clone)]
pub struct PrimeProbeParams {
    pub geometry: CacheGeometry,
    pub monitor: MonitorConfig,
    pub key_len: usize,
    pub key_seed: u64,
    /// Explicit key bits override `key_len`/`key_seed` when given.
    pub key_bits: Option<Vec<bool>>,
    /// Cycles between attack iterations.
    pub probe_period: u64,
    /// Run with the monitor off, on, or both.
    pub modes: PrimeProbeModes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimeProbeModes {
    Off,
    On,
    Both,
}

impl Default for PrimeProbeParams {
    fn default() -> Self {
        Self {
            geometry: CacheGeometry::default(),
            monitor: MonitorConfig::default(),
            key_len: 100,
            key_seed: 0xACCE55,
            key_bits: None,
            probe_period: 5000,
            modes: PrimeProbeModes::Both,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrimeProbeExperimentOutcome {
    pub report: CsvReport,
    /// `(monitor_enabled, accuracy)` per executed mode.
    pub accuracies: Vec<(bool, f64)>,
}

pub fn run_primeprobe_experiment(
    params: &PrimeProbeParams,
) -> Result<PrimeProbeExperimentOutcome, AttackError> {
    let (square, multiply) = default_targets(&params.geometry);
    let victim = match &params.key_bits {
        Some(bits) => SquareMultiplyVictim::new(bits.clone(), square, multiply),
        None => {
            SquareMultiplyVictim::with_random_key(params.key_len, params.key_seed, square, multiply)
        }
    };
    let mut report = CsvReport::new(vec![
        "monitor",
        "iteration",
        "square_miss",
        "multiply_miss",
        "victim_square",
        "victim_multiply",
        "inferred_bit",
        "true_bit",
    ]);
    let mut accuracies = Vec::new();
    let modes: &[bool] = match params.modes {
        PrimeProbeModes::Off => &[false],
        PrimeProbeModes::On => &[true],
        PrimeProbeModes::Both => &[false, true],
    };
    for &enabled in modes {
        let mut scenario = AttackScenario::new(
            params.geometry,
            enabled.then_some(params.monitor),
            victim.clone(),
        );
        scenario.probe_period = params.probe_period;
        let outcome = run_prime_probe(&scenario)?;
        for (i, obs) in outcome.trace.iterations.iter().enumerate() {
            report.push_row(vec![
                (enabled as u8).to_string(),
                i.to_string(),
                (obs.square_miss as u8).to_string(),
                (obs.multiply_miss as u8).to_string(),
                (obs.victim_square as u8).to_string(),
                (obs.victim_multiply as u8).to_string(),
                (outcome.recovery.inferred_bits[i] as u8).to_string(),
                (outcome.recovery.true_bits[i] as u8).to_string(),
            ]);
        }
        accuracies.push((enabled, outcome.recovery.accuracy));
    }
    Ok(PrimeProbeExperimentOutcome { report, accuracies })
}
