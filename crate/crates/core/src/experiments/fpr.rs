//! Fingerprint-collision (merge) measurement across fingerprint widths.
//!
//! Tracks, per live record, how many distinct addresses have merged into it.
//! A record is identified by its fingerprint plus canonical candidate pair,
//! which survives relocation; autonomic deletion retires the whole record
//! and its merge count with it.

use super::report::CsvReport;
use crate::filter::{
    theoretical_fpr, AutoCuckooFilter, FilterConfig, FilterConfigError, FilterStatus,
};
use crate::rng::mix64;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct FprParams {
    pub l: u32,
    pub b: usize,
    pub f_list: Vec<u32>,
    pub insertions: u64,
    pub seed: u64,
}

impl Default for FprParams {
    fn default() -> Self {
        Self {
            l: 1024,
            b: 8,
            f_list: vec![8, 10, 12, 14, 16],
            insertions: 100_000,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FprPoint {
    pub f: u32,
    /// Fraction of entries holding >= 2 merged addresses.
    pub collision_entry_ratio: f64,
    /// Fraction of entries holding > 2 merged addresses.
    pub multi_collision_ratio: f64,
    pub theoretical_eps: f64,
}

#[derive(Debug, Clone)]
pub struct FprOutcome {
    pub report: CsvReport,
    pub points: Vec<FprPoint>,
}

pub fn run_fpr(params: &FprParams) -> Result<FprOutcome, FilterConfigError> {
    let mut report = CsvReport::new(vec![
        "f",
        "collision_entry_ratio",
        "multi_collision_ratio",
        "theoretical_eps",
    ]);
    let mut points = Vec::new();
    for &f in &params.f_list {
        let config = FilterConfig {
            l: params.l,
            b: params.b,
            f,
            rng_seed: params.seed,
            ..FilterConfig::default()
        };
        let mut filter = AutoCuckooFilter::new(config)?;
        // Record key -> number of distinct addresses merged into it.
        let mut shadow: HashMap<(u16, u32, u32), u32> = HashMap::new();
        let key_of = |filter: &AutoCuckooFilter, addr: u64| {
            let fp = filter.fingerprint_of(addr);
            let (mu, sigma) = filter.candidate_buckets(addr);
            (fp.0, mu.min(sigma), mu.max(sigma))
        };
        for n in 0..params.insertions {
            let addr = mix64(n ^ mix64(params.seed ^ 0xF9));
            let key = key_of(&filter, addr);
            let response = filter.query_and_update(addr);
            match response.status {
                FilterStatus::Inserted => {
                    shadow.insert(key, 1);
                }
                _ => *shadow.entry(key).or_insert(1) += 1,
            }
            if let Some(ev) = response.evicted {
                let alt = filter.alternate_bucket(ev.bucket, ev.fingerprint);
                shadow.remove(&(ev.fingerprint.0, ev.bucket.min(alt), ev.bucket.max(alt)));
            }
        }
        let total = config.capacity() as f64;
        let mut collided = 0u64;
        let mut multi = 0u64;
        for (bucket, _slot, entry) in filter.valid_entries() {
            let alt = filter.alternate_bucket(bucket, entry.f_print);
            let count = shadow
                .get(&(entry.f_print.0, bucket.min(alt), bucket.max(alt)))
                .copied()
                .unwrap_or(1);
            if count >= 2 {
                collided += 1;
            }
            if count > 2 {
                multi += 1;
            }
        }
        let point = FprPoint {
            f,
            collision_entry_ratio: collided as f64 / total,
            multi_collision_ratio: multi as f64 / total,
            theoretical_eps: theoretical_fpr(&config),
        };
        report.push_row(vec![
            f.to_string(),
            format!("{:.6}", point.collision_entry_ratio),
            format!("{:.6}", point.multi_collision_ratio),
            format!("{:.6}", point.theoretical_eps),
        ]);
        points.push(point);
    }
    Ok(FprOutcome { report, points })
}
