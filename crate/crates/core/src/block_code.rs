//! Fixed-rate block codes used inside each private-code block.
//!
//! The concrete code is a shortened Reed-Solomon code over GF(2^8), viewed as a
//! binary code by packing each symbol MSB-first. Decoding is Berlekamp-Massey,
//! Chien search and Forney's formula.

use std::sync::OnceLock;

/// A binary block code with a worst-case correction radius.
pub trait BlockCode: Send + Sync + std::fmt::Debug {
    fn payload_bits(&self) -> usize;
    fn block_bits(&self) -> usize;
    /// Number of bit errors corrected in the worst case.
    fn radius_bits(&self) -> usize;
    fn encode(&self, payload: &[bool]) -> Vec<bool>;
    /// `None` when the decoder detects more errors than it can correct.
    fn decode(&self, block: &[bool]) -> Option<Vec<bool>>;
}

const PRIMITIVE_POLY: u16 = 0x11d;

struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut exp = [0u8; 512];
        let mut log = [0u8; 256];
        let mut x: u16 = 1;
        for i in 0..255 {
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & 0x100 != 0 {
                x ^= PRIMITIVE_POLY;
            }
        }
        for i in 255..512 {
            exp[i] = exp[i - 255];
        }
        Tables { exp, log }
    })
}

#[inline]
fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    let t = tables();
    t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
}

#[inline]
fn div(a: u8, b: u8) -> u8 {
    assert!(b != 0, "division by zero in GF(256)");
    if a == 0 {
        return 0;
    }
    let t = tables();
    t.exp[(t.log[a as usize] as usize + 255 - t.log[b as usize] as usize) % 255]
}

#[inline]
fn alpha_pow(e: usize) -> u8 {
    tables().exp[e % 255]
}

#[inline]
fn inv(a: u8) -> u8 {
    div(1, a)
}

/// Evaluate a low-degree-first polynomial.
fn eval_low(poly: &[u8], x: u8) -> u8 {
    poly.iter().rev().fold(0, |acc, &c| mul(acc, x) ^ c)
}

/// Shortened systematic Reed-Solomon code RS(`total`, `data`) over GF(2^8),
/// generator roots `alpha^0 .. alpha^(total-data-1)`.
#[derive(Debug, Clone)]
pub struct ReedSolomon {
    data: usize,
    total: usize,
    /// Generator polynomial, highest degree first, monic.
    generator: Vec<u8>,
}

impl ReedSolomon {
    pub fn new(data: usize, total: usize) -> Self {
        assert!(data >= 1 && data < total && total <= 255, "invalid RS({total}, {data})");
        let mut generator = vec![1u8];
        for i in 0..total - data {
            // multiply by (x - alpha^i)
            let root = alpha_pow(i);
            let mut next = vec![0u8; generator.len() + 1];
            for (j, &g) in generator.iter().enumerate() {
                next[j] ^= g;
                next[j + 1] ^= mul(g, root);
            }
            generator = next;
        }
        Self { data, total, generator }
    }

    pub fn parity(&self) -> usize {
        self.total - self.data
    }

    /// Symbol errors corrected in the worst case.
    pub fn symbol_radius(&self) -> usize {
        self.parity() / 2
    }

    pub fn encode_bytes(&self, msg: &[u8]) -> Vec<u8> {
        assert_eq!(msg.len(), self.data);
        let mut work = msg.to_vec();
        work.resize(self.total, 0);
        for i in 0..self.data {
            let coef = work[i];
            if coef != 0 {
                for (j, &g) in self.generator.iter().enumerate().skip(1) {
                    work[i + j] ^= mul(g, coef);
                }
            }
        }
        work[..self.data].copy_from_slice(msg);
        work
    }

    fn syndromes(&self, cw: &[u8]) -> Vec<u8> {
        (0..self.parity())
            .map(|j| {
                let x = alpha_pow(j);
                cw.iter().fold(0, |acc, &c| mul(acc, x) ^ c)
            })
            .collect()
    }

    /// Corrects up to `symbol_radius` symbol errors; returns the data symbols.
    pub fn decode_bytes(&self, received: &[u8]) -> Option<Vec<u8>> {
        assert_eq!(received.len(), self.total);
        let synd = self.syndromes(received);
        if synd.iter().all(|&s| s == 0) {
            return Some(received[..self.data].to_vec());
        }

        // Berlekamp-Massey, low-degree-first locator.
        let mut lambda = vec![1u8];
        let mut prev = vec![1u8];
        let mut l = 0usize;
        let mut shift = 1usize;
        let mut prev_disc = 1u8;
        for n in 0..synd.len() {
            let mut d = synd[n];
            for i in 1..=l.min(lambda.len() - 1) {
                d ^= mul(lambda[i], synd[n - i]);
            }
            if d == 0 {
                shift += 1;
                continue;
            }
            let coef = div(d, prev_disc);
            let mut next = lambda.clone();
            if next.len() < prev.len() + shift {
                next.resize(prev.len() + shift, 0);
            }
            for (i, &p) in prev.iter().enumerate() {
                next[i + shift] ^= mul(coef, p);
            }
            if 2 * l <= n {
                prev = std::mem::replace(&mut lambda, next);
                l = n + 1 - l;
                prev_disc = d;
                shift = 1;
            } else {
                lambda = next;
                shift += 1;
            }
        }
        while lambda.len() > 1 && *lambda.last().unwrap() == 0 {
            lambda.pop();
        }
        if l != lambda.len() - 1 || l > self.symbol_radius() {
            return None;
        }

        // Chien search over the shortened positions.
        let n = self.total;
        let mut positions = Vec::with_capacity(l);
        for i in 0..n {
            let x_inv = inv(alpha_pow(n - 1 - i));
            if eval_low(&lambda, x_inv) == 0 {
                positions.push(i);
            }
        }
        if positions.len() != l {
            return None;
        }

        // Forney: Y = X * Omega(X^-1) / Lambda'(X^-1).
        let mut omega = vec![0u8; synd.len()];
        for (i, &s) in synd.iter().enumerate() {
            for (j, &c) in lambda.iter().enumerate() {
                if i + j < omega.len() {
                    omega[i + j] ^= mul(s, c);
                }
            }
        }
        let derivative: Vec<u8> = lambda
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| if k % 2 == 1 { c } else { 0 })
            .collect();
        let mut corrected = received.to_vec();
        for &i in &positions {
            let x = alpha_pow(n - 1 - i);
            let x_inv = inv(x);
            let denom = eval_low(&derivative, x_inv);
            if denom == 0 {
                return None;
            }
            corrected[i] ^= mul(x, div(eval_low(&omega, x_inv), denom));
        }
        if self.syndromes(&corrected).iter().any(|&s| s != 0) {
            return None;
        }
        Some(corrected[..self.data].to_vec())
    }
}

fn pack(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i))))
        .collect()
}

fn unpack(bytes: &[u8]) -> Vec<bool> {
    bytes.iter().flat_map(|&b| (0..8).map(move |i| (b >> (7 - i)) & 1 == 1)).collect()
}

impl BlockCode for ReedSolomon {
    fn payload_bits(&self) -> usize {
        8 * self.data
    }

    fn block_bits(&self) -> usize {
        8 * self.total
    }

    fn radius_bits(&self) -> usize {
        self.symbol_radius()
    }

    fn encode(&self, payload: &[bool]) -> Vec<bool> {
        assert_eq!(payload.len(), self.payload_bits());
        unpack(&self.encode_bytes(&pack(payload)))
    }

    fn decode(&self, block: &[bool]) -> Option<Vec<bool>> {
        assert_eq!(block.len(), self.block_bits());
        self.decode_bytes(&pack(block)).map(|d| unpack(&d))
    }
}
