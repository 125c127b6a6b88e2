//! Filter occupancy versus insertion count for different MNK values.

use super::report::CsvReport;
use crate::filter::{AutoCuckooFilter, FilterConfig, FilterConfigError};
use crate::rng::mix64;

#[derive(Debug, Clone)]
pub struct OccupancyParams {
    pub l: u32,
    pub b: usize,
    pub f: u32,
    pub mnk_list: Vec<u32>,
    pub insertions: u64,
    pub sample_interval: u64,
    pub seed: u64,
}

impl Default for OccupancyParams {
    fn default() -> Self {
        let d = FilterConfig::default();
        Self {
            l: d.l,
            b: d.b,
            f: d.f,
            mnk_list: vec![2, 4, 8],
            insertions: 14_000,
            sample_interval: 500,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OccupancyOutcome {
    pub report: CsvReport,
    /// Insertion count at which each MNK first reached full occupancy, when
    /// it did within the run.
    pub first_full: Vec<(u32, Option<u64>)>,
    /// Occupancy per MNK at each sample point, for direct comparisons.
    pub samples: Vec<(u32, Vec<(u64, f64)>)>,
}

/// Inserts the same stream of distinct addresses into one filter per MNK,
/// sampling occupancy at fixed intervals.
pub fn run_occupancy(params: &OccupancyParams) -> Result<OccupancyOutcome, FilterConfigError> {
    let mut report = CsvReport::new(vec!["mnk", "insertions", "occupancy"]);
    let mut first_full = Vec::new();
    let mut samples = Vec::new();
    for &mnk in &params.mnk_list {
        let config = FilterConfig {
            l: params.l,
            b: params.b,
            f: params.f,
            mnk,
            rng_seed: params.seed,
            ..FilterConfig::default()
        };
        let mut filter = AutoCuckooFilter::new(config)?;
        let mut full_at = None;
        let mut series = Vec::new();
        for n in 1..=params.insertions {
            // Distinct by construction: mix64 is a bijection.
            filter.query_and_update(mix64(n ^ mix64(params.seed)));
            if full_at.is_none() && filter.occupancy() >= 1.0 {
                full_at = Some(n);
            }
            if n % params.sample_interval == 0 || n == params.insertions {
                report.push_row(vec![
                    mnk.to_string(),
                    n.to_string(),
                    format!("{:.6}", filter.occupancy()),
                ]);
                series.push((n, filter.occupancy()));
            }
        }
        first_full.push((mnk, full_at));
        samples.push((mnk, series));
    }
    Ok(OccupancyOutcome {
        report,
        first_full,
        samples,
    })
}
