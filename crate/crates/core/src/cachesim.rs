//! Inclusive three-level cache model.
//!
//! Private L1/L2 per core, one shared LLC, strict LRU everywhere, 64-byte
//! lines. Latency is additive over the traversed levels; there is no
//! bandwidth or coherence-message modeling. Coherence is abstracted to
//! valid/invalid plus inclusive back-invalidation: evicting an LLC line
//! removes every private copy of it. LLC lines carry a Ping-Pong tag bit;
//! evicting a tagged line is reported as a pEvict so the monitor can react.

use thiserror::Error;

/// Cache line size in bytes.
pub const LINE_SIZE: u64 = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("{level}: set count {sets} is not a non-zero power of two")]
    SetsNotPowerOfTwo { level: &'static str, sets: u64 },
    #[error("core count must be non-zero")]
    NoCores,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelGeometry {
    pub size: u64,
    pub ways: usize,
    pub latency: u64,
}

impl LevelGeometry {
    pub fn sets(&self) -> usize {
        (self.size / (LINE_SIZE * self.ways as u64)) as usize
    }
}

/// Full hierarchy geometry. Defaults model a quad-core part: 64 KB 4-way L1
/// (2 cycles), 256 KB 8-way L2 (18 cycles), shared 4 MB 16-way LLC
/// (35 cycles), 200-cycle DRAM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheGeometry {
    pub l1: LevelGeometry,
    pub l2: LevelGeometry,
    pub llc: LevelGeometry,
    pub dram_latency: u64,
    pub cores: usize,
}

impl Default for CacheGeometry {
    fn default() -> Self {
        Self {
            l1: LevelGeometry {
                size: 64 * 1024,
                ways: 4,
                latency: 2,
            },
            l2: LevelGeometry {
                size: 256 * 1024,
                ways: 8,
                latency: 18,
            },
            llc: LevelGeometry {
                size: 4 * 1024 * 1024,
                ways: 16,
                latency: 35,
            },
            dram_latency: 200,
            cores: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheLevel {
    L1,
    L2,
    Llc,
}

impl CacheGeometry {
    pub fn validate(&self) -> Result<(), GeometryError> {
        for (name, lvl) in [("l1", &self.l1), ("l2", &self.l2), ("llc", &self.llc)] {
            let sets = lvl.sets() as u64;
            if sets == 0 || !sets.is_power_of_two() {
                return Err(GeometryError::SetsNotPowerOfTwo { level: name, sets });
            }
        }
        if self.cores == 0 {
            return Err(GeometryError::NoCores);
        }
        Ok(())
    }

    pub fn level(&self, level: CacheLevel) -> &LevelGeometry {
        match level {
            CacheLevel::L1 => &self.l1,
            CacheLevel::L2 => &self.l2,
            CacheLevel::Llc => &self.llc,
        }
    }

    /// Set index of an address at a level: `(addr / 64) mod sets`.
    pub fn set_index(&self, addr: u64, level: CacheLevel) -> usize {
        ((addr / LINE_SIZE) % self.level(level).sets() as u64) as usize
    }

    /// Memory latency as seen from a core: every level plus DRAM.
    pub fn memory_latency(&self) -> u64 {
        self.l1.latency + self.l2.latency + self.llc.latency + self.dram_latency
    }

    /// Latency of an access served by the LLC.
    pub fn llc_hit_latency(&self) -> u64 {
        self.l1.latency + self.l2.latency + self.llc.latency
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Line {
    addr: u64,
    valid: bool,
    lru: u64,
    pingpong_tag: bool,
    accessed_since_tag: bool,
    filled_by_prefetch: bool,
}

#[derive(Debug, Clone)]
struct CacheArray {
    sets: Vec<Vec<Line>>,
    set_mask: u64,
    tick: u64,
}

impl CacheArray {
    fn new(geom: &LevelGeometry) -> Self {
        Self {
            sets: vec![vec![Line::default(); geom.ways]; geom.sets()],
            set_mask: geom.sets() as u64 - 1,
            tick: 0,
        }
    }

    fn set_of(&self, addr: u64) -> usize {
        ((addr / LINE_SIZE) & self.set_mask) as usize
    }

    fn find(&self, addr: u64) -> Option<usize> {
        let set = self.set_of(addr);
        self.sets[set]
            .iter()
            .position(|l| l.valid && l.addr == addr)
    }

    fn touch(&mut self, addr: u64) -> Option<&mut Line> {
        self.tick += 1;
        let tick = self.tick;
        let set = self.set_of(addr);
        let line = self.sets[set]
            .iter_mut()
            .find(|l| l.valid && l.addr == addr)?;
        line.lru = tick;
        Some(line)
    }

    /// Installs a line, evicting the LRU occupant when the set is full.
    fn insert(&mut self, line: Line) -> Option<Line> {
        self.tick += 1;
        let tick = self.tick;
        let set = self.set_of(line.addr);
        let slot = match self.sets[set].iter().position(|l| !l.valid) {
            Some(s) => s,
            None => {
                let (s, _) = self.sets[set]
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, l)| l.lru)
                    .expect("non-empty set");
                s
            }
        };
        let victim = self.sets[set][slot];
        self.sets[set][slot] = Line { lru: tick, ..line };
        victim.valid.then_some(victim)
    }

    fn invalidate(&mut self, addr: u64) -> bool {
        if let Some(w) = self.find(addr) {
            let set = self.set_of(addr);
            self.sets[set][w].valid = false;
            true
        } else {
            false
        }
    }
}

/// Which level served a demand access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitLevel {
    L1,
    L2,
    Llc,
    Memory,
}

/// Everything one demand access did to the hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessResult {
    pub hit_level: HitLevel,
    pub latency: u64,
    /// Private copies invalidated by an inclusive LLC eviction, as
    /// `(core, line_addr)` pairs.
    pub back_invalidations: Vec<(usize, u64)>,
    /// True exactly when the line was fetched from memory.
    pub memory_access: bool,
    /// Tagged LLC lines evicted by this access.
    pub pevicts: Vec<u64>,
}

/// Effect of a monitor-issued prefetch install.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefetchInstall {
    /// False when the line was already resident and only refreshed.
    pub installed: bool,
    pub back_invalidations: Vec<(usize, u64)>,
    pub pevicts: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct CacheHierarchy {
    geometry: CacheGeometry,
    l1: Vec<CacheArray>,
    l2: Vec<CacheArray>,
    llc: CacheArray,
}

impl CacheHierarchy {
    pub fn new(geometry: CacheGeometry) -> Result<Self, GeometryError> {
        geometry.validate()?;
        Ok(Self {
            l1: (0..geometry.cores)
                .map(|_| CacheArray::new(&geometry.l1))
                .collect(),
            l2: (0..geometry.cores)
                .map(|_| CacheArray::new(&geometry.l2))
                .collect(),
            llc: CacheArray::new(&geometry.llc),
            geometry,
        })
    }

    pub fn geometry(&self) -> &CacheGeometry {
        &self.geometry
    }

    /// Demand access: walks L1 -> L2 -> LLC -> memory, fills every level on
    /// the path, and reports LLC-eviction side effects.
    pub fn access(&mut self, core: usize, addr: u64) -> AccessResult {
        assert!(core < self.geometry.cores, "core {core} out of range");
        let line = addr & !(LINE_SIZE - 1);
        let mut latency = self.geometry.l1.latency;

        if self.l1[core].touch(line).is_some() {
            return AccessResult {
                hit_level: HitLevel::L1,
                latency,
                back_invalidations: Vec::new(),
                memory_access: false,
                pevicts: Vec::new(),
            };
        }

        latency += self.geometry.l2.latency;
        if self.l2[core].touch(line).is_some() {
            self.fill_l1(core, line);
            return AccessResult {
                hit_level: HitLevel::L2,
                latency,
                back_invalidations: Vec::new(),
                memory_access: false,
                pevicts: Vec::new(),
            };
        }

        latency += self.geometry.llc.latency;
        if let Some(l) = self.llc.touch(line) {
            if l.pingpong_tag {
                l.accessed_since_tag = true;
            }
            self.fill_l2(core, line);
            self.fill_l1(core, line);
            return AccessResult {
                hit_level: HitLevel::Llc,
                latency,
                back_invalidations: Vec::new(),
                memory_access: false,
                pevicts: Vec::new(),
            };
        }

        latency += self.geometry.dram_latency;
        let mut back_invalidations = Vec::new();
        let mut pevicts = Vec::new();
        let victim = self.llc.insert(Line {
            addr: line,
            valid: true,
            ..Line::default()
        });
        if let Some(v) = victim {
            self.back_invalidate(v.addr, &mut back_invalidations);
            if v.pingpong_tag {
                pevicts.push(v.addr);
            }
        }
        self.fill_l2(core, line);
        self.fill_l1(core, line);
        AccessResult {
            hit_level: HitLevel::Memory,
            latency,
            back_invalidations,
            memory_access: true,
            pevicts,
        }
    }

    /// Installs a prefetched line in the LLC only, tagged, with the accessed
    /// flag cleared. A resident line is refreshed instead of reinstalled.
    pub fn install_prefetch(&mut self, addr: u64) -> PrefetchInstall {
        let line = addr & !(LINE_SIZE - 1);
        if let Some(l) = self.llc.touch(line) {
            l.pingpong_tag = true;
            l.accessed_since_tag = false;
            l.filled_by_prefetch = true;
            return PrefetchInstall {
                installed: false,
                back_invalidations: Vec::new(),
                pevicts: Vec::new(),
            };
        }
        let mut back_invalidations = Vec::new();
        let mut pevicts = Vec::new();
        let victim = self.llc.insert(Line {
            addr: line,
            valid: true,
            pingpong_tag: true,
            filled_by_prefetch: true,
            ..Line::default()
        });
        if let Some(v) = victim {
            self.back_invalidate(v.addr, &mut back_invalidations);
            if v.pingpong_tag {
                pevicts.push(v.addr);
            }
        }
        PrefetchInstall {
            installed: true,
            back_invalidations,
            pevicts,
        }
    }

    /// Marks a resident LLC line as Ping-Pong; no-op when absent.
    pub fn set_pingpong_tag(&mut self, addr: u64) {
        let line = addr & !(LINE_SIZE - 1);
        if let Some(w) = self.llc.find(line) {
            let set = self.llc.set_of(line);
            self.llc.sets[set][w].pingpong_tag = true;
        }
    }

    pub fn is_pingpong_tagged(&self, addr: u64) -> bool {
        let line = addr & !(LINE_SIZE - 1);
        self.llc
            .find(line)
            .map(|w| self.llc.sets[self.llc.set_of(line)][w].pingpong_tag)
            .unwrap_or(false)
    }

    pub fn llc_contains(&self, addr: u64) -> bool {
        self.llc.find(addr & !(LINE_SIZE - 1)).is_some()
    }

    /// True when the resident LLC copy was brought in by a prefetch rather
    /// than a demand fill.
    pub fn llc_filled_by_prefetch(&self, addr: u64) -> bool {
        let line = addr & !(LINE_SIZE - 1);
        self.llc
            .find(line)
            .map(|w| self.llc.sets[self.llc.set_of(line)][w].filled_by_prefetch)
            .unwrap_or(false)
    }

    pub fn set_index(&self, addr: u64, level: CacheLevel) -> usize {
        self.geometry.set_index(addr, level)
    }

    /// Panics if any private line is missing from the LLC. Test support.
    pub fn assert_inclusion(&self) {
        for core in 0..self.geometry.cores {
            for (name, arr) in [("l1", &self.l1[core]), ("l2", &self.l2[core])] {
                for set in &arr.sets {
                    for l in set.iter().filter(|l| l.valid) {
                        assert!(
                            self.llc.find(l.addr).is_some(),
                            "inclusion violated: core {core} {name} line {:#x} absent from LLC",
                            l.addr
                        );
                    }
                }
            }
        }
    }

    fn fill_l1(&mut self, core: usize, line: u64) {
        self.l1[core].insert(Line {
            addr: line,
            valid: true,
            ..Line::default()
        });
        // L1 victims are clean copies; the LLC still holds them.
    }

    fn fill_l2(&mut self, core: usize, line: u64) {
        if let Some(v) = self.l2[core].insert(Line {
            addr: line,
            valid: true,
            ..Line::default()
        }) {
            // Private L2 is inclusive of its L1.
            self.l1[core].invalidate(v.addr);
        }
    }

    fn back_invalidate(&mut self, line: u64, out: &mut Vec<(usize, u64)>) {
        for core in 0..self.geometry.cores {
            let in_l1 = self.l1[core].invalidate(line);
            let in_l2 = self.l2[core].invalidate(line);
            if in_l1 || in_l2 {
                out.push((core, line));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;

    fn toy() -> CacheGeometry {
        CacheGeometry {
            l1: LevelGeometry {
                size: 2 * 64,
                ways: 1,
                latency: 2,
            },
            l2: LevelGeometry {
                size: 4 * 2 * 64,
                ways: 2,
                latency: 18,
            },
            llc: LevelGeometry {
                size: 8 * 2 * 64,
                ways: 2,
                latency: 35,
            },
            dram_latency: 200,
            cores: 2,
        }
    }

    /// Address landing in a given LLC set of the toy geometry.
    fn in_set(geom: &CacheGeometry, set: usize, k: u64) -> u64 {
        (set as u64 + k * geom.llc.sets() as u64) * LINE_SIZE
    }

    #[test]
    fn default_geometry_is_valid_and_sized() {
        let g = CacheGeometry::default();
        assert!(g.validate().is_ok());
        assert_eq!(g.l1.sets(), 256);
        assert_eq!(g.l2.sets(), 512);
        assert_eq!(g.llc.sets(), 4096);
        assert_eq!(g.memory_latency(), 255);
        assert_eq!(g.llc_hit_latency(), 55);
    }

    #[test]
    fn bad_geometry_rejected() {
        let mut g = CacheGeometry::default();
        g.llc.size = 3 * 1024 * 1024; // 3072 sets
        assert!(g.validate().is_err());
        let coreless = CacheGeometry {
            cores: 0,
            ..CacheGeometry::default()
        };
        assert!(coreless.validate().is_err());
    }

    #[test]
    fn cold_access_costs_full_path() {
        let mut h = CacheHierarchy::new(CacheGeometry::default()).unwrap();
        let r = h.access(0, 0x4000);
        assert_eq!(r.hit_level, HitLevel::Memory);
        assert_eq!(r.latency, 2 + 18 + 35 + 200);
        assert!(r.memory_access);
    }

    #[test]
    fn immediate_reaccess_hits_l1() {
        let mut h = CacheHierarchy::new(CacheGeometry::default()).unwrap();
        h.access(0, 0x4000);
        let r = h.access(0, 0x4001); // same line
        assert_eq!(r.hit_level, HitLevel::L1);
        assert_eq!(r.latency, 2);
        assert!(!r.memory_access);
    }

    #[test]
    fn other_core_hits_shared_llc() {
        let mut h = CacheHierarchy::new(CacheGeometry::default()).unwrap();
        h.access(0, 0x4000);
        let r = h.access(1, 0x4000);
        assert_eq!(r.hit_level, HitLevel::Llc);
        assert_eq!(r.latency, 55);
    }

    #[test]
    fn set_index_arithmetic() {
        let g = CacheGeometry::default();
        assert_eq!(g.set_index(0, CacheLevel::L1), 0);
        assert_eq!(g.set_index(0, CacheLevel::Llc), 0);
        // Differ only above the index bits -> same set.
        let a = 0x40u64 * 7;
        let b = a + 4096 * LINE_SIZE;
        assert_eq!(
            g.set_index(a, CacheLevel::Llc),
            g.set_index(b, CacheLevel::Llc)
        );
        assert_eq!(g.set_index(64, CacheLevel::Llc), 1);
    }

    #[test]
    fn lru_eviction_back_invalidates_private_copies() {
        let g = toy();
        let mut h = CacheHierarchy::new(g).unwrap();
        let a = in_set(&g, 3, 0);
        let b = in_set(&g, 3, 1);
        let c = in_set(&g, 3, 2);
        h.access(0, a);
        h.access(0, b);
        // Third fill of the 2-way set evicts LRU line a everywhere.
        let r = h.access(1, c);
        assert_eq!(r.back_invalidations, vec![(0, a)]);
        assert!(!h.llc_contains(a));
        let again = h.access(0, a);
        assert_eq!(
            again.hit_level,
            HitLevel::Memory,
            "private copy was invalidated"
        );
        h.assert_inclusion();
    }

    #[test]
    fn untagged_evictions_emit_no_pevict() {
        let g = toy();
        let mut h = CacheHierarchy::new(g).unwrap();
        for k in 0..3 {
            let r = h.access(0, in_set(&g, 1, k));
            assert!(r.pevicts.is_empty());
        }
    }

    #[test]
    fn tagged_eviction_emits_pevict() {
        let g = toy();
        let mut h = CacheHierarchy::new(g).unwrap();
        let a = in_set(&g, 2, 0);
        h.access(0, a);
        h.set_pingpong_tag(a);
        assert!(h.is_pingpong_tagged(a));
        h.access(0, in_set(&g, 2, 1));
        let r = h.access(0, in_set(&g, 2, 2)); // evicts a
        assert_eq!(r.pevicts, vec![a]);
    }

    #[test]
    fn prefetch_into_vacancy_evicts_nothing() {
        let g = toy();
        let mut h = CacheHierarchy::new(g).unwrap();
        let r = h.install_prefetch(in_set(&g, 5, 0));
        assert!(r.installed);
        assert!(r.pevicts.is_empty() && r.back_invalidations.is_empty());
        assert!(h.is_pingpong_tagged(in_set(&g, 5, 0)));
        assert!(h.llc_filled_by_prefetch(in_set(&g, 5, 0)));
    }

    #[test]
    fn prefetched_line_serves_probes_at_llc_latency() {
        let g = toy();
        let mut h = CacheHierarchy::new(g).unwrap();
        let a = in_set(&g, 5, 0);
        h.install_prefetch(a);
        let r = h.access(1, a);
        assert_eq!(r.hit_level, HitLevel::Llc);
        assert_eq!(r.latency, 55);
    }

    #[test]
    fn prefetch_cascade_can_evict_another_tagged_line() {
        let g = toy();
        let mut h = CacheHierarchy::new(g).unwrap();
        let a = in_set(&g, 6, 0);
        let b = in_set(&g, 6, 1);
        let c = in_set(&g, 6, 2);
        h.install_prefetch(a);
        h.install_prefetch(b);
        let r = h.install_prefetch(c); // set full of tagged lines
        assert!(r.installed);
        assert_eq!(r.pevicts, vec![a]);
    }

    #[test]
    fn prefetch_of_resident_line_refreshes_instead_of_installing() {
        let g = toy();
        let mut h = CacheHierarchy::new(g).unwrap();
        let a = in_set(&g, 4, 0);
        h.access(0, a);
        assert!(!h.llc_filled_by_prefetch(a));
        let r = h.install_prefetch(a);
        assert!(!r.installed);
        assert!(h.is_pingpong_tagged(a));
        assert!(h.llc_filled_by_prefetch(a));
    }

    #[test]
    fn inclusion_holds_under_random_traffic() {
        let g = toy();
        let mut h = CacheHierarchy::new(g).unwrap();
        let mut rng = SimRng::new(99);
        for i in 0..5_000 {
            let core = rng.gen_index(2);
            let addr = (rng.next_u64() % 64) * LINE_SIZE;
            h.access(core, addr);
            if i % 64 == 0 {
                h.assert_inclusion();
            }
        }
        h.assert_inclusion();
    }
}
