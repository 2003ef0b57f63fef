//! Keyed pseudorandom permutation over `[0, n)`: a balanced Feistel network on
//! the smallest even-width power-of-two domain covering `n`, restricted to
//! `[0, n)` by cycle walking. Round functions are SHA-256 keyed by the seed.

use sha2::{Digest, Sha256};

const ROUNDS: u8 = 6;

#[derive(Clone)]
pub struct FeistelPermutation {
    domain: u64,
    half_bits: u32,
    keyed: Sha256,
}

impl std::fmt::Debug for FeistelPermutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeistelPermutation").field("domain", &self.domain).finish_non_exhaustive()
    }
}

impl FeistelPermutation {
    pub fn new(seed: &[u8], domain: u64) -> Self {
        assert!(domain >= 1, "empty permutation domain");
        let bits = 64 - (domain.max(2) - 1).leading_zeros();
        let half_bits = bits.div_ceil(2).max(1);
        let mut keyed = Sha256::new();
        keyed.update(b"idlc/feistel/v1");
        keyed.update((seed.len() as u64).to_le_bytes());
        keyed.update(seed);
        keyed.update(domain.to_le_bytes());
        Self { domain, half_bits, keyed }
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    fn round(&self, round: u8, value: u64) -> u64 {
        let mut h = self.keyed.clone();
        h.update([round]);
        h.update(value.to_le_bytes());
        let out = h.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&out[..8]);
        u64::from_le_bytes(word) & self.mask()
    }

    fn mask(&self) -> u64 {
        (1u64 << self.half_bits) - 1
    }

    fn encrypt_block(&self, x: u64) -> u64 {
        let mask = self.mask();
        let (mut left, mut right) = (x >> self.half_bits, x & mask);
        for r in 0..ROUNDS {
            let next = left ^ self.round(r, right);
            left = right;
            right = next;
        }
        (left << self.half_bits) | right
    }

    fn decrypt_block(&self, x: u64) -> u64 {
        let mask = self.mask();
        let (mut left, mut right) = (x >> self.half_bits, x & mask);
        for r in (0..ROUNDS).rev() {
            let prev = right ^ self.round(r, left);
            right = left;
            left = prev;
        }
        (left << self.half_bits) | right
    }

    pub fn permute(&self, x: u64) -> u64 {
        assert!(x < self.domain, "{x} outside permutation domain {}", self.domain);
        let mut y = self.encrypt_block(x);
        while y >= self.domain {
            y = self.encrypt_block(y);
        }
        y
    }

    pub fn invert(&self, y: u64) -> u64 {
        assert!(y < self.domain, "{y} outside permutation domain {}", self.domain);
        let mut x = self.decrypt_block(y);
        while x >= self.domain {
            x = self.decrypt_block(x);
        }
        x
    }

    /// The full table `x -> permute(x)`.
    pub fn table(&self) -> Vec<u32> {
        assert!(self.domain <= u32::MAX as u64);
        (0..self.domain).map(|x| self.permute(x) as u32).collect()
    }
}
