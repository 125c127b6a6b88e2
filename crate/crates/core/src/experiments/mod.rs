//! Named experiments reproducing the filter-behavior curves and the
//! security analysis, with CSV reports.

mod fpr;
mod occupancy;
mod report;
mod security;
mod synthetic;

pub use fpr::{run_fpr, FprOutcome, FprParams, FprPoint};
pub use occupancy::{run_occupancy, OccupancyOutcome, OccupancyParams};
pub use report::{summarize, CsvReport, Summary};
pub use security::{
    run_brute_force_experiment, run_primeprobe_experiment, run_reverse_experiment,
    BruteForceOutcome, BruteForceParams, PrimeProbeExperimentOutcome, PrimeProbeModes,
    PrimeProbeParams, ReverseOutcome, ReverseParams,
};
pub use synthetic::{run_synthetic, SyntheticOutcome, SyntheticParams, SyntheticPoint, Workload};

use std::str::FromStr;

/// The named experiments the harness can run. Unknown names are rejected
/// before any work starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentName {
    Occupancy,
    Fpr,
    BruteForce,
    Reverse,
    PrimeProbe,
    Synthetic,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::Occupancy,
        ExperimentName::Fpr,
        ExperimentName::BruteForce,
        ExperimentName::Reverse,
        ExperimentName::PrimeProbe,
        ExperimentName::Synthetic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Occupancy => "occupancy",
            ExperimentName::Fpr => "fpr",
            ExperimentName::BruteForce => "brute-force",
            ExperimentName::Reverse => "reverse",
            ExperimentName::PrimeProbe => "primeprobe",
            ExperimentName::Synthetic => "synthetic",
        }
    }
}

impl FromStr for ExperimentName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}
