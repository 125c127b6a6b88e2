//! Deterministic pseudo-randomness and 64-bit avalanche mixing.
//!
//! Everything in the simulator that needs randomness goes through [`SimRng`]
//! (xorshift64*), and everything that needs hashing goes through [`mix64`].
//! Both are seedable, platform-stable and dependency-free, so identical
//! seeds reproduce identical runs bit for bit.

/// Deterministic RNG with a single 64-bit state (xorshift64*).
///
/// Not cryptographically secure; used for victim selection, address
/// generation and experiment trial plans.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimRng {
    state: u64,
}

impl SimRng {
    /// A zero seed is remapped to a non-zero constant to avoid the
    /// xorshift lockup state.
    pub fn new(seed: u64) -> Self {
        let s = if seed == 0 {
            0x9E37_79B9_7F4A_7C15
        } else {
            seed
        };
        Self { state: s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform index in `[0, bound)`. `bound` must be non-zero.
    #[inline]
    pub fn gen_index(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        (self.next_u64() % bound as u64) as usize
    }

    /// Derive an independent child generator; used to give each subsystem
    /// its own stream from one experiment seed.
    pub fn fork(&mut self, tag: u64) -> SimRng {
        SimRng::new(mix64(self.next_u64() ^ mix64(tag)))
    }
}

/// 64-bit finalizer (multiply-xorshift family). Bijective, so it can be
/// inverted with [`mix64_inv`]; uniform enough for bucket indexing and
/// fingerprinting.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}

/// Exact inverse of [`mix64`].
#[inline]
pub fn mix64_inv(mut x: u64) -> u64 {
    x ^= (x >> 31) ^ (x >> 62);
    x = x.wrapping_mul(0x3196_42B2_D24D_8EC3);
    x ^= (x >> 27) ^ (x >> 54);
    x = x.wrapping_mul(0x96DE_1B17_3F11_9089);
    x ^= (x >> 30) ^ (x >> 60);
    x
}
