//! Scripted attacker and victim agents: Prime+Probe key extraction against a
//! square-and-multiply victim, brute-force filter flushing, and white-box
//! reverse-engineering of filter eviction sets.

mod filter_attack;
mod prime_probe;
mod victim;

pub use filter_attack::{
    fill_to_capacity, run_brute_force_evict, run_reverse_attack, ReverseAttackConfig,
    ReverseAttackReport,
};
pub use prime_probe::{
    build_eviction_set, default_targets, run_prime_probe, AttackScenario, IterationObservation,
    KeyRecoveryResult, PrimeProbeAttacker, PrimeProbeOutcome, ProbeTrace, TargetProbe,
};
pub use victim::SquareMultiplyVictim;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("target {0:#x} has no record in the filter")]
    TargetNotRecorded(u64),
    #[error("address space cannot supply {needed} congruent lines")]
    AddressSpaceExhausted { needed: usize },
    #[error("prime+probe needs the victim and attacker on different cores")]
    NeedTwoCores,
    #[error("filter error: {0}")]
    Filter(String),
    #[error("simulator error: {0}")]
    Sim(String),
}

impl AttackError {
    pub(crate) fn from_sim(e: crate::sim::SimError) -> Self {
        AttackError::Sim(e.to_string())
    }
}
