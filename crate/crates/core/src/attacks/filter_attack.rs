//! Attacks on the recording filter itself: brute-force flushing and
//! reverse-engineered eviction trees.
//!
//! Brute force fills the filter with fresh random addresses until the
//! target record is autonomically deleted; with uniform victim selection
//! each fill evicts the target with probability `1/(b*l)`, so the expected
//! cost is `b*l` fills.
//!
//! The reverse attack is white-box: the adversary knows the hash family and
//! geometry (but not the victim-selection stream) and mines addresses whose
//! candidate pairs form a layered tree rooted at the target's bucket. A fill
//! into a depth-`d` leaf bucket displaces a relay, which hops one level
//! toward the root per kick; after exactly `MNK` kicks the displaced record
//! is dropped, so only a tree of depth `MNK` can steer deletions into the
//! target's bucket. The leaf layer has `b^(MNK+1)` addresses, which is the
//! eviction-set size the defense forces on the adversary.

use super::AttackError;
use crate::filter::{AutoCuckooFilter, BucketIndex, FilterConfig, FilterHasher};
use crate::rng::{mix64, SimRng};

/// Fills the filter with fresh random addresses until the target's record is
/// gone; returns the number of fills. The target must be recorded, and the
/// filter should be full so every fill evicts something.
pub fn run_brute_force_evict(
    filter: &mut AutoCuckooFilter,
    target_addr: u64,
    rng: &mut SimRng,
) -> Result<u64, AttackError> {
    if !filter.contains(target_addr) {
        return Err(AttackError::TargetNotRecorded(target_addr));
    }
    let mut fills = 0u64;
    loop {
        let addr = rng.next_u64();
        if addr == target_addr {
            continue;
        }
        filter.query_and_update(addr);
        fills += 1;
        if !filter.contains(target_addr) {
            return Ok(fills);
        }
    }
}

/// Fills a filter to 100% occupancy with a deterministic address stream.
pub fn fill_to_capacity(filter: &mut AutoCuckooFilter, stream_seed: u64) -> u64 {
    let mut n = 0u64;
    let cap = 200 * filter.config().capacity() as u64;
    while filter.occupancy() < 1.0 {
        n += 1;
        assert!(n <= cap, "filter failed to reach full occupancy");
        filter.query_and_update(mix64(n ^ mix64(stream_seed)));
    }
    n
}

#[derive(Debug, Clone)]
pub struct ReverseAttackConfig {
    pub filter_config: FilterConfig,
    pub target_addr: u64,
    /// Tree depth; `None` matches the filter's MNK, which is the depth a
    /// successful attack requires. Smaller values model an under-provisioned
    /// adversary.
    pub depth: Option<u32>,
    /// Fill budget; `None` means `10 * b^(MNK+1)`.
    pub fill_budget: Option<u64>,
    /// Seed for the background fill that brings the filter to capacity.
    pub prefill_seed: u64,
}

impl ReverseAttackConfig {
    pub fn new(filter_config: FilterConfig, target_addr: u64) -> Self {
        Self {
            filter_config,
            target_addr,
            depth: None,
            fill_budget: None,
            prefill_seed: 0x5EED_F111,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReverseAttackReport {
    /// Leaf-layer size `b^(depth+1)`: distinct fill addresses the adversary
    /// must be able to supply.
    pub eviction_set_size_used: u64,
    /// Relay records planted below the leaf layer before filling starts.
    pub setup_inserts: u64,
    /// Queries issued during the drive phase.
    pub fills_issued: u64,
    pub success: bool,
}

/// One tree edge: addresses inserted at `bucket` whose alternate bucket is
/// the edge's parent, so a displacement hops them one level rootward. The
/// cursor lets the adversary mine fresh addresses for the edge forever.
struct TreeEdge {
    bucket: BucketIndex,
    /// `None` for depth-0 feeders, which need no pair constraint.
    parent: Option<BucketIndex>,
    cursor: u64,
}

impl TreeEdge {
    /// Mines the next unused address for this edge by walking the bucket
    /// hash preimages of `bucket`.
    fn next_address(&mut self, hasher: &FilterHasher, avoid: u64) -> u64 {
        loop {
            let addr = hasher.address_in_bucket(self.bucket, self.cursor);
            self.cursor += 1;
            if addr == avoid {
                continue;
            }
            match self.parent {
                Some(p) => {
                    if hasher.candidate_buckets(addr) == (self.bucket, p) {
                        return addr;
                    }
                }
                None => {
                    if hasher.bucket_of(addr) == self.bucket {
                        return addr;
                    }
                }
            }
        }
    }
}

/// The mined tree: relay edges (rootward levels first) and leaf edges.
struct EvictionTree {
    relay_edges: Vec<TreeEdge>,
    leaf_edges: Vec<TreeEdge>,
    /// `b^(depth+1)`: concurrent leaf-layer records the structure needs.
    leaf_set_size: u64,
}

fn build_tree(
    hasher: &FilterHasher,
    config: &FilterConfig,
    root: BucketIndex,
    depth: u32,
) -> EvictionTree {
    let b = config.b as u64;
    let l = config.l;
    // Not every XOR offset is reachable by some fingerprint, so a child
    // bucket is only usable if addresses with pair {child, parent} exist.
    let mut offset_ok = vec![false; l as usize];
    for fp in 0..=((1u32 << config.f) - 1) as u16 {
        offset_ok[hasher.tag_offset(crate::filter::Fingerprint(fp)) as usize] = true;
    }
    // Node buckets are dealt round-robin from every usable bucket except the
    // root; when the tree outgrows the filter they repeat, which only blurs
    // the levels statistically.
    let mut next_bucket = 0u32;
    let mut deal = |parent: BucketIndex| -> BucketIndex {
        loop {
            let bucket = next_bucket % l;
            next_bucket += 1;
            if bucket != root && bucket != parent && offset_ok[(bucket ^ parent) as usize] {
                return bucket;
            }
        }
    };

    let mut relay_edges = Vec::new();
    let mut parents = vec![root];
    // Levels 1..depth-1 hold relays pointing one level rootward.
    for _level in 1..depth {
        let mut children = Vec::new();
        for &parent in &parents {
            for _ in 0..config.b {
                let child = deal(parent);
                relay_edges.push(TreeEdge {
                    bucket: child,
                    parent: Some(parent),
                    cursor: 0,
                });
                children.push(child);
            }
        }
        parents = children;
    }

    // Leaf layer: b child buckets per deepest node. Depth 0 feeds the root
    // bucket directly.
    let mut leaf_edges = Vec::new();
    if depth == 0 {
        leaf_edges.push(TreeEdge {
            bucket: root,
            parent: None,
            cursor: 0,
        });
    } else {
        for &parent in &parents {
            for _ in 0..config.b {
                leaf_edges.push(TreeEdge {
                    bucket: deal(parent),
                    parent: Some(parent),
                    cursor: 0,
                });
            }
        }
    }
    EvictionTree {
        relay_edges,
        leaf_edges,
        leaf_set_size: b.pow(depth + 1),
    }
}

/// Runs the white-box reverse attack against a freshly filled filter.
pub fn run_reverse_attack(
    config: &ReverseAttackConfig,
) -> Result<ReverseAttackReport, AttackError> {
    let fc = config.filter_config;
    let mut filter = AutoCuckooFilter::new(fc).map_err(|e| AttackError::Filter(e.to_string()))?;
    let hasher = *filter.hasher();
    let b = fc.b as u64;
    let depth = config.depth.unwrap_or(fc.mnk);
    let set_size = b.pow(depth + 1);
    let budget = config.fill_budget.unwrap_or_else(|| 10 * b.pow(fc.mnk + 1));

    fill_to_capacity(&mut filter, config.prefill_seed);

    // The adversary derives the target's resident bucket from the hash
    // family: in a full filter a fresh record installs in its first
    // candidate bucket.
    let root = hasher.bucket_of(config.target_addr);
    let mut tree = build_tree(&hasher, &fc, root, depth);
    debug_assert_eq!(tree.leaf_set_size, set_size);

    // Stock the relay buckets before the target is primed: each insert
    // lands in its first candidate bucket, so repeated passes saturate the
    // bucket with relays. Driving top-ups later would be self-defeating,
    // because a top-up's own kick chain can displace the target at a kick
    // below MNK and relocate it out of the tree's sights.
    let mut setup_inserts = 0u64;
    for _pass in 0..3 {
        for edge in &mut tree.relay_edges {
            for _ in 0..fc.b {
                let relay = edge.next_address(&hasher, config.target_addr);
                filter.query_and_update(relay);
                setup_inserts += 1;
            }
        }
    }
    // The priming insert's own kick chain can circle back and drop the
    // target; retry until the record sticks.
    for _ in 0..64 {
        filter.query_and_update(config.target_addr);
        if filter.contains(config.target_addr) {
            break;
        }
    }
    if !filter.contains(config.target_addr) {
        return Err(AttackError::TargetNotRecorded(config.target_addr));
    }

    // Drive in rounds of one full leaf layer of fresh fills. Addresses are
    // never reused, so every fill inserts and starts a kick chain.
    let mut fills_issued = 0u64;
    let mut success = false;
    'drive: loop {
        for idx in 0..tree.leaf_edges.len() {
            for _ in 0..fc.b {
                if fills_issued >= budget {
                    break 'drive;
                }
                let addr = tree.leaf_edges[idx].next_address(&hasher, config.target_addr);
                filter.query_and_update(addr);
                fills_issued += 1;
                if !filter.contains(config.target_addr) {
                    success = true;
                    break 'drive;
                }
            }
        }
    }

    Ok(ReverseAttackReport {
        eviction_set_size_used: set_size,
        setup_inserts,
        fills_issued,
        success,
    })
}
