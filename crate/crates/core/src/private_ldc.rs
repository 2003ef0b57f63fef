//! One-time private Hamming LDC: the message is split into blocks, each block
//! is Reed-Solomon encoded, and the concatenation is hidden behind a keyed
//! permutation of positions and a keyed pad.

use std::fmt;

use rand::rngs::OsRng;
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::block_code::{BlockCode, ReedSolomon};
use crate::error::{Error, Result};
use crate::local_codes::{BitOracle, LocalCodeSpec, LocalDecoder};
use crate::prp::FeistelPermutation;
use crate::scalar::Scalar;

pub const MIN_LAMBDA: u32 = 16;
pub const KEY_VERSION: u8 = 0x01;
pub const KEY_BYTES: usize = 1 + 4 + 32 + 32;
/// Block-code expansion factor, the inverse of the inner rate.
pub const EXPANSION: usize = 4;

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    lambda: u32,
    perm_seed: [u8; 32],
    pad_seed: [u8; 32],
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey(lambda={}, fp={})", self.lambda, self.fingerprint())
    }
}

fn check_lambda(lambda: u32) -> Result<()> {
    if lambda < MIN_LAMBDA {
        return Err(Error::LambdaTooSmall { lambda, min: MIN_LAMBDA });
    }
    Ok(())
}

impl SecretKey {
    /// Fresh key from the operating system's randomness source.
    pub fn gen(lambda: u32) -> Result<Self> {
        Self::gen_with(lambda, &mut OsRng)
    }

    /// Key drawn from a caller-supplied cryptographic generator (seeded runs).
    pub fn gen_with<R: RngCore + CryptoRng + ?Sized>(lambda: u32, rng: &mut R) -> Result<Self> {
        check_lambda(lambda)?;
        let used = Self::seed_bytes_for(lambda);
        let mut perm_seed = [0u8; 32];
        let mut pad_seed = [0u8; 32];
        rng.try_fill_bytes(&mut perm_seed[..used]).map_err(|e| Error::InsufficientEntropy(e.to_string()))?;
        rng.try_fill_bytes(&mut pad_seed[..used]).map_err(|e| Error::InsufficientEntropy(e.to_string()))?;
        Ok(Self { lambda, perm_seed, pad_seed })
    }

    /// Deterministic key from secret material, e.g. the output of a key-derivation step.
    pub fn from_material(lambda: u32, material: &[u8]) -> Result<Self> {
        check_lambda(lambda)?;
        let used = Self::seed_bytes_for(lambda);
        let derive = |label: &[u8]| {
            let mut seed = [0u8; 32];
            let digest = Sha256::new().chain_update(label).chain_update(material).finalize();
            seed[..used].copy_from_slice(&digest[..used]);
            seed
        };
        Ok(Self { lambda, perm_seed: derive(b"perm"), pad_seed: derive(b"pad") })
    }

    /// Independent-looking key for round `round` of a multi-use schedule.
    pub fn derive_round(&self, round: u64) -> Self {
        let mut material = Vec::with_capacity(72);
        material.extend_from_slice(&self.perm_seed);
        material.extend_from_slice(&self.pad_seed);
        material.extend_from_slice(&round.to_le_bytes());
        Self::from_material(self.lambda, &material).expect("lambda already validated")
    }

    fn seed_bytes_for(lambda: u32) -> usize {
        (lambda as usize).div_ceil(8).min(32)
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    /// Entropy carried by each seed.
    pub fn seed_bits(&self) -> u32 {
        self.lambda.min(256)
    }

    pub(crate) fn perm_seed(&self) -> &[u8; 32] {
        &self.perm_seed
    }

    pub(crate) fn pad_seed(&self) -> &[u8; 32] {
        &self.pad_seed
    }

    pub fn to_bytes(&self) -> [u8; KEY_BYTES] {
        let mut out = [0u8; KEY_BYTES];
        out[0] = KEY_VERSION;
        out[1..5].copy_from_slice(&self.lambda.to_le_bytes());
        out[5..37].copy_from_slice(&self.perm_seed);
        out[37..69].copy_from_slice(&self.pad_seed);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != KEY_BYTES {
            return Err(Error::Format(format!("key is {} bytes, expected {KEY_BYTES}", bytes.len())));
        }
        if bytes[0] != KEY_VERSION {
            return Err(Error::Format(format!("unsupported key version {}", bytes[0])));
        }
        let lambda = u32::from_le_bytes(bytes[1..5].try_into().unwrap());
        check_lambda(lambda)?;
        Ok(Self {
            lambda,
            perm_seed: bytes[5..37].try_into().unwrap(),
            pad_seed: bytes[37..69].try_into().unwrap(),
        })
    }

    /// Short public identifier; reveals nothing usable about the seeds.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::new().chain_update(b"fingerprint").chain_update(self.to_bytes()).finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Default block payload: `4 * ceil(log2 lambda) * 8` bits.
pub fn default_block_payload(lambda: u32) -> usize {
    let log = 32 - (lambda.max(2) - 1).leading_zeros();
    4 * log as usize * 8
}

/// Block structure of the private code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BlockLayout {
    /// Message length in bits.
    pub k: usize,
    /// Payload bits per block.
    pub m: usize,
    pub blocks: usize,
    /// Encoded bits per block, which is also the locality.
    pub ell: usize,
}

impl BlockLayout {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyInput);
        }
        if m == 0 || m % 8 != 0 || EXPANSION * m / 8 > 255 {
            return Err(Error::InvalidParams(format!("block payload {m} must be a positive multiple of 8 with 4m/8 <= 255")));
        }
        Ok(Self { k, m, blocks: k.div_ceil(m), ell: EXPANSION * m })
    }

    pub fn codeword_len(&self) -> usize {
        self.blocks * self.ell
    }

    /// Message length after zero padding to whole blocks.
    pub fn padded_len(&self) -> usize {
        self.blocks * self.m
    }

    pub fn block_code(&self) -> ReedSolomon {
        ReedSolomon::new(self.m / 8, self.ell / 8)
    }

    /// Worst-case bit errors corrected per block.
    pub fn radius_bits(&self) -> usize {
        self.block_code().radius_bits()
    }
}

/// Parameters of the private code, generic over the scalar used for `rho`, `p` and `eps`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrivateCodeParams<T> {
    pub lambda: u32,
    pub layout: BlockLayout,
    pub rho: T,
    pub p: T,
    pub eps: T,
}

impl<T: Scalar> PrivateCodeParams<T> {
    pub fn new(k: usize, lambda: u32) -> Result<Self> {
        Self::with_block_payload(k, lambda, default_block_payload(lambda))
    }

    /// `rho` is a quarter of the per-block correctable fraction; `p = 0.99`, `eps = 0.01`.
    pub fn with_block_payload(k: usize, lambda: u32, m: usize) -> Result<Self> {
        check_lambda(lambda)?;
        let layout = BlockLayout::new(k, m)?;
        let radius = layout.radius_bits() as u64;
        Ok(Self {
            lambda,
            layout,
            rho: T::from_ratio(radius, 4 * layout.ell as u64),
            p: T::from_ratio(99, 100),
            eps: T::from_ratio(1, 100),
        })
    }

    pub fn inner_rate(&self) -> T {
        T::from_ratio(1, EXPANSION as u64)
    }

    /// Fraction of bit errors each block tolerates.
    pub fn delta_b(&self) -> T {
        T::from_ratio(self.layout.radius_bits() as u64, self.layout.ell as u64)
    }

    pub fn codeword_len(&self) -> usize {
        self.layout.codeword_len()
    }

    pub fn locality(&self) -> usize {
        self.layout.ell
    }

    pub fn spec(&self) -> LocalCodeSpec<T> {
        LocalCodeSpec {
            k: self.layout.k,
            codeword_len: self.codeword_len(),
            q1: 2,
            q2: 2,
            ell: self.layout.ell,
            rho: self.rho,
            p: self.p,
        }
    }
}

/// The private code instantiated under one key: permutation table and pad precomputed.
#[derive(Clone)]
pub struct KeyedPrivateCode {
    layout: BlockLayout,
    rs: ReedSolomon,
    /// Pre-permutation position to codeword position.
    positions: Vec<u32>,
    pad: BitString,
    fingerprint: String,
}

impl fmt::Debug for KeyedPrivateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyedPrivateCode")
            .field("layout", &self.layout)
            .field("key", &self.fingerprint)
            .finish_non_exhaustive()
    }
}

impl KeyedPrivateCode {
    pub fn new(layout: BlockLayout, key: &SecretKey) -> Self {
        let n = layout.codeword_len();
        let positions = FeistelPermutation::new(key.perm_seed(), n as u64).table();
        let mut stream = ChaCha20Rng::from_seed(*key.pad_seed());
        let mut bytes = vec![0u8; n.div_ceil(8)];
        stream.fill_bytes(&mut bytes);
        let pad = BitString::from_bytes(&bytes, n).expect("pad length");
        Self { layout, rs: layout.block_code(), positions, pad, fingerprint: key.fingerprint() }
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn key_fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn codeword_len(&self) -> usize {
        self.layout.codeword_len()
    }

    pub fn encode(&self, x: &BitString) -> Result<BitString> {
        let l = &self.layout;
        if x.len() != l.k {
            return Err(Error::LengthMismatch { left: x.len(), right: l.k });
        }
        let mut out = self.pad.clone();
        for j in 0..l.blocks {
            let payload: Vec<bool> = (j * l.m..(j + 1) * l.m).map(|i| i < l.k && x.bit(i)).collect();
            for (r, bit) in self.rs.encode(&payload).into_iter().enumerate() {
                if bit {
                    out.flip(self.positions[j * l.ell + r] as usize);
                }
            }
        }
        Ok(out)
    }

    /// Codeword positions holding block `j`, in block order.
    pub fn block_positions(&self, j: usize) -> &[u32] {
        &self.positions[j * self.layout.ell..(j + 1) * self.layout.ell]
    }

    /// Reads the `ell` positions of block `j` and returns its `m` payload bits.
    pub fn decode_block(&self, oracle: &dyn BitOracle, j: usize) -> Result<BitString> {
        if j >= self.layout.blocks {
            return Err(Error::IndexOutOfRange { index: j, len: self.layout.blocks });
        }
        let received: Vec<bool> = self
            .block_positions(j)
            .iter()
            .map(|&pos| oracle.query(pos as usize) ^ self.pad.bit(pos as usize))
            .collect();
        self.rs
            .decode(&received)
            .map(|bits| BitString::from_bools(&bits))
            .ok_or(Error::DecodeFailure { block: j })
    }

    pub fn decode_index(&self, oracle: &dyn BitOracle, i: usize) -> Result<bool> {
        if i >= self.layout.k {
            return Err(Error::IndexOutOfRange { index: i, len: self.layout.k });
        }
        Ok(self.decode_block(oracle, i / self.layout.m)?.bit(i % self.layout.m))
    }

    /// Decodes every block once; `None` marks a block whose decoder failed.
    pub fn decode_all_blocks(&self, oracle: &dyn BitOracle) -> Vec<Option<BitString>> {
        (0..self.layout.blocks).map(|j| self.decode_block(oracle, j).ok()).collect()
    }
}

impl LocalDecoder for KeyedPrivateCode {
    fn message_len(&self) -> usize {
        self.layout.k
    }

    fn locality(&self) -> usize {
        self.layout.ell
    }

    fn local_decode(&self, oracle: &dyn BitOracle, i: usize, _rng: &mut dyn RngCore) -> Result<bool> {
        self.decode_index(oracle, i)
    }
}
