//! Hamming locally decodable codes: the query-oracle abstraction, the generic
//! local decoder interface, and the 2-query Hadamard code.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parameters of an `(ell, rho, p)` locally decodable code `C[K, k, q1, q2]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LocalCodeSpec<T> {
    pub k: usize,
    pub codeword_len: usize,
    pub q1: u32,
    pub q2: u32,
    pub ell: usize,
    pub rho: T,
    pub p: T,
}

impl<T: Scalar> LocalCodeSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let half = T::from_ratio(1, 2);
        let mut bad = Vec::new();
        if self.k < 1 || self.codeword_len < self.k {
            bad.push("need K >= k >= 1");
        }
        if self.ell < 1 {
            bad.push("need ell >= 1");
        }
        if self.rho < T::zero() || self.rho >= half {
            bad.push("need 0 <= rho < 1/2");
        }
        if self.p <= half || self.p > T::one() {
            bad.push("need 1/2 < p <= 1");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad.join("; ")))
        }
    }
}

/// Read access to a (possibly corrupted) binary word, metered per query.
pub trait BitOracle: Sync {
    /// Visible length of the word; may differ from the codeword length after InsDel corruption.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reads position `i`; out-of-range reads return `false` and are still charged.
    fn query(&self, i: usize) -> bool;

    /// Queries charged so far.
    fn queries(&self) -> u64;
}

/// A metered oracle over an owned or borrowed word.
#[derive(Debug)]
pub struct QueryOracle<'a> {
    word: &'a BitString,
    count: AtomicU64,
}

impl<'a> QueryOracle<'a> {
    pub fn new(word: &'a BitString) -> Self {
        Self { word, count: AtomicU64::new(0) }
    }

    pub fn word(&self) -> &BitString {
        self.word
    }

    pub fn reset(&self) -> u64 {
        self.count.swap(0, Ordering::Relaxed)
    }
}

impl BitOracle for QueryOracle<'_> {
    fn len(&self) -> usize {
        self.word.len()
    }

    #[inline]
    fn query(&self, i: usize) -> bool {
        self.count.fetch_add(1, Ordering::Relaxed);
        i < self.word.len() && self.word.bit(i)
    }

    fn queries(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

/// A randomized local decoder for a fixed code (and key, if any).
pub trait LocalDecoder {
    fn message_len(&self) -> usize;

    /// Advertised locality: the maximum number of queries per call.
    fn locality(&self) -> usize;

    fn local_decode(&self, oracle: &dyn BitOracle, i: usize, rng: &mut dyn RngCore) -> Result<bool>;
}

pub const HADAMARD_MAX_K: usize = 20;

/// `a`-th position holds `<msg, a> mod 2`, with `a` enumerated in increasing
/// binary order and message bit `i` paired with the `i`-th most significant bit of `a`.
pub fn hadamard_encode(msg: &BitString) -> Result<BitString> {
    let k = msg.len();
    if k == 0 {
        return Err(Error::EmptyInput);
    }
    if k > HADAMARD_MAX_K {
        return Err(Error::MessageTooLong { k, cap: HADAMARD_MAX_K });
    }
    let mask = msg.read_uint(0, k);
    Ok((0..1u64 << k).map(|a| (a & mask).count_ones() % 2 == 1).collect())
}

/// The standard 2-query Hadamard local decoder.
#[derive(Debug, Clone, Copy)]
pub struct Hadamard {
    k: usize,
}

impl Hadamard {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyInput);
        }
        if k > HADAMARD_MAX_K {
            return Err(Error::MessageTooLong { k, cap: HADAMARD_MAX_K });
        }
        Ok(Self { k })
    }

    pub fn codeword_len(&self) -> usize {
        1 << self.k
    }

    pub fn spec(&self, rho: f64) -> LocalCodeSpec<f64> {
        LocalCodeSpec {
            k: self.k,
            codeword_len: self.codeword_len(),
            q1: 2,
            q2: 2,
            ell: 2,
            rho,
            p: 1.0 - 2.0 * rho,
        }
    }

    /// Reads `a` and `a xor e_i` for a uniform `a`.
    pub fn decode_with(&self, oracle: &dyn BitOracle, i: usize, a: u64) -> Result<bool> {
        if i >= self.k {
            return Err(Error::IndexOutOfRange { index: i, len: self.k });
        }
        if oracle.len() != self.codeword_len() {
            return Err(Error::OracleLengthMismatch { expected: self.codeword_len(), actual: oracle.len() });
        }
        let e_i = 1u64 << (self.k - 1 - i);
        Ok(oracle.query(a as usize) ^ oracle.query((a ^ e_i) as usize))
    }
}

impl LocalDecoder for Hadamard {
    fn message_len(&self) -> usize {
        self.k
    }

    fn locality(&self) -> usize {
        2
    }

    fn local_decode(&self, oracle: &dyn BitOracle, i: usize, rng: &mut dyn RngCore) -> Result<bool> {
        let a = rng.gen_range(0..self.codeword_len() as u64);
        self.decode_with(oracle, i, a)
    }
}

pub const DEFAULT_REPETITIONS: usize = 15;

/// Majority of `repetitions` independent local decodes at every index.
pub fn decode_all<D: LocalDecoder + ?Sized>(
    code: &D,
    oracle: &dyn BitOracle,
    repetitions: usize,
    rng: &mut dyn RngCore,
) -> Result<BitString> {
    let repetitions = repetitions.max(1);
    (0..code.message_len())
        .map(|i| {
            let mut ones = 0;
            for _ in 0..repetitions {
                ones += code.local_decode(oracle, i, rng)? as usize;
            }
            Ok(2 * ones > repetitions)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn hadamard_examples() {
        assert_eq!(hadamard_encode(&b("101")).unwrap(), b("01011010"));
        assert_eq!(hadamard_encode(&b("1")).unwrap(), b("01"));
        assert_eq!(hadamard_encode(&BitString::zeros(5)).unwrap(), BitString::zeros(32));
        assert!(matches!(
            hadamard_encode(&BitString::zeros(21)),
            Err(Error::MessageTooLong { k: 21, cap: 20 })
        ));
    }

    #[test]
    fn clean_decode_is_certain_and_charges_two_queries() {
        let cw = hadamard_encode(&b("101")).unwrap();
        let code = Hadamard::new(3).unwrap();
        let oracle = QueryOracle::new(&cw);
        for a in 0..8 {
            assert!(code.decode_with(&oracle, 0, a).unwrap());
            assert!(!code.decode_with(&oracle, 1, a).unwrap());
            assert!(code.decode_with(&oracle, 2, a).unwrap());
        }
        assert_eq!(oracle.queries(), 48);
    }

    #[test]
    fn length_mismatch_rejected() {
        let word = BitString::zeros(7);
        let oracle = QueryOracle::new(&word);
        let code = Hadamard::new(3).unwrap();
        assert!(matches!(
            code.decode_with(&oracle, 0, 0),
            Err(Error::OracleLengthMismatch { expected: 8, actual: 7 })
        ));
    }

    #[test]
    fn one_flip_in_eight_keeps_success_at_least_three_quarters() {
        // Exhaustive over the flip position and the decoder's choice of `a`.
        let msg = b("101");
        let cw = hadamard_encode(&msg).unwrap();
        let code = Hadamard::new(3).unwrap();
        for flip in 0..8 {
            let mut word = cw.clone();
            word.flip(flip);
            let oracle = QueryOracle::new(&word);
            for i in 0..3 {
                let ok = (0..8).filter(|&a| code.decode_with(&oracle, i, a).unwrap() == msg.bit(i)).count();
                assert!(ok * 4 >= 8 * 3, "flip {flip} index {i}: {ok}/8");
            }
        }
        // Monte Carlo over the randomized decoder: the exact rate here is 3/4, so
        // the estimate is held to three standard errors below it.
        let mut word = cw.clone();
        word.flip(5);
        let oracle = QueryOracle::new(&word);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 10_000;
        let ok = (0..trials).filter(|_| code.local_decode(&oracle, 1, &mut rng).unwrap() == msg.bit(1)).count();
        let sigma = (0.75f64 * 0.25 / trials as f64).sqrt();
        assert!(ok as f64 / trials as f64 >= 0.75 - 3.0 * sigma, "{ok}/{trials}");
    }

    #[test]
    fn decode_all_clean_and_lightly_corrupted() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = 8;
        let code = Hadamard::new(k).unwrap();
        let rho = 0.1;
        let mut ok = 0;
        let trials = 200;
        for _ in 0..trials {
            let msg: BitString = (0..k).map(|_| rng.gen()).collect();
            let cw = hadamard_encode(&msg).unwrap();
            assert_eq!(decode_all(&code, &QueryOracle::new(&cw), DEFAULT_REPETITIONS, &mut rng).unwrap(), msg);
            let mut word = cw.clone();
            let flips = ((rho / 2.0) * word.len() as f64) as usize;
            for pos in rand::seq::index::sample(&mut rng, word.len(), flips) {
                word.flip(pos);
            }
            let out = decode_all(&code, &QueryOracle::new(&word), DEFAULT_REPETITIONS, &mut rng).unwrap();
            ok += (out == msg) as usize;
        }
        assert!(ok as f64 / trials as f64 >= 0.99, "{ok}/{trials}");
    }

    #[test]
    fn spec_validation() {
        let good = Hadamard::new(4).unwrap().spec(0.1);
        good.validate().unwrap();
        let bad = LocalCodeSpec { rho: 0.6, p: 0.4, ..good };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("rho") && msg.contains("p <= 1"));
    }
}
