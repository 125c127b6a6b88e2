//! Square-and-multiply victim model.
//!
//! The victim processes a secret key one bit per iteration, high to low.
//! A 1-bit executes both the square and the multiply routine; a 0-bit only
//! the multiply. The instruction lines of the two routines are the
//! attacker's probe targets: the sequence of square-line accesses exposes
//! the key.

use crate::rng::SimRng;

#[derive(Debug, Clone)]
pub struct SquareMultiplyVictim {
    pub secret_bits: Vec<bool>,
    pub square_addr: u64,
    pub multiply_addr: u64,
}

impl SquareMultiplyVictim {
    pub fn new(secret_bits: Vec<bool>, square_addr: u64, multiply_addr: u64) -> Self {
        Self {
            secret_bits,
            square_addr,
            multiply_addr,
        }
    }

    /// Random key of `len` bits.
    pub fn with_random_key(len: usize, seed: u64, square_addr: u64, multiply_addr: u64) -> Self {
        let mut rng = SimRng::new(seed);
        let bits = (0..len).map(|_| rng.next_u64() & 1 == 1).collect();
        Self::new(bits, square_addr, multiply_addr)
    }

    /// Line addresses touched while processing bit `i`.
    pub fn accesses_for_bit(&self, i: usize) -> Vec<u64> {
        if self.secret_bits[i] {
            vec![self.square_addr, self.multiply_addr]
        } else {
            vec![self.multiply_addr]
        }
    }

    pub fn len(&self) -> usize {
        self.secret_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.secret_bits.is_empty()
    }
}
