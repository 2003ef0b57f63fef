//! Inner insertion-deletion code for compiled blocks: sync marker, Manchester
//! symbols and a CRC-8 check, decoded by a banded trellis search.

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::scalar::Fraction;

pub const SYNC_LEN: usize = 4;
pub const CRC_BITS: usize = 8;
pub const CRC_POLY: u8 = 0x07;
/// Longest zero run inside any inner codeword.
pub const MAX_ZERO_RUN: usize = 2;
/// Largest supported decoding radius in raw edits.
pub const MAX_RADIUS: usize = 7;
/// Widest supported payload.
pub const MAX_PAYLOAD: usize = 56;
/// Zeros the decoder expects after a codeword: the next buffer, or the
/// zero reads past the end of the word.
pub const GUARD_LEN: usize = 2;

/// One bit of CRC-8 (MSB-first, zero initial register).
#[inline]
pub fn crc_step(reg: u8, bit: bool) -> u8 {
    let feedback = (reg >> 7 == 1) ^ bit;
    let shifted = reg << 1;
    if feedback {
        shifted ^ CRC_POLY
    } else {
        shifted
    }
}

pub fn crc8(bits: impl IntoIterator<Item = bool>) -> u8 {
    bits.into_iter().fold(0, crc_step)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct InnerCodeSpec {
    /// Payload bits `h`.
    pub payload_len: usize,
    pub codeword_len: usize,
    pub max_zero_run: usize,
    /// Decoding radius in raw insertions plus deletions.
    pub radius: usize,
}

impl InnerCodeSpec {
    pub fn new(payload_len: usize, radius: usize) -> Result<Self> {
        if payload_len == 0 || payload_len > MAX_PAYLOAD {
            return Err(Error::InvalidParams(format!("inner payload {payload_len} outside 1..={MAX_PAYLOAD}")));
        }
        if radius > MAX_RADIUS {
            return Err(Error::InvalidParams(format!("inner radius {radius} above {MAX_RADIUS}")));
        }
        Ok(Self {
            payload_len,
            codeword_len: SYNC_LEN + 2 * payload_len + 2 * CRC_BITS,
            max_zero_run: MAX_ZERO_RUN,
            radius,
        })
    }

    /// Fractional radius `radius / codeword_len`.
    pub fn delta_in(&self) -> Fraction {
        Fraction::new(self.radius as u64, self.codeword_len as u64)
    }

    /// Window length the decoder wants: the codeword, the guard zeros and room for insertions.
    pub fn window_len(&self) -> usize {
        self.codeword_len + GUARD_LEN + self.radius
    }

    /// Codeword followed by the guard zeros, the string windows are aligned against.
    pub fn template_value(&self, value: u64) -> Vec<bool> {
        let mut t = self.encode_value(value).to_bools();
        t.extend([false; GUARD_LEN]);
        t
    }

    /// Codeword for the payload given as an MSB-first integer.
    pub fn encode_value(&self, value: u64) -> BitString {
        let h = self.payload_len;
        let mut out = BitString::with_capacity(self.codeword_len);
        for _ in 0..SYNC_LEN {
            out.push(true);
        }
        let mut reg = 0u8;
        for t in 0..h {
            let bit = (value >> (h - 1 - t)) & 1 == 1;
            reg = crc_step(reg, bit);
            out.push(bit);
            out.push(!bit);
        }
        for t in 0..CRC_BITS {
            let bit = (reg >> (CRC_BITS - 1 - t)) & 1 == 1;
            out.push(bit);
            out.push(!bit);
        }
        out
    }

    pub fn encode(&self, payload: &BitString) -> Result<BitString> {
        if payload.len() != self.payload_len {
            return Err(Error::LengthMismatch { left: payload.len(), right: self.payload_len });
        }
        Ok(self.encode_value(payload.read_uint(0, self.payload_len)))
    }

    /// Nearest codeword within the radius, as `(payload, cost)`.
    ///
    /// Cost is the insdel distance from the codeword plus guard zeros to the
    /// best-matching prefix of `window`, so bits past that are free. Ties go to
    /// the smaller payload.
    pub fn decode_value(&self, window: &[bool]) -> Option<(u64, usize)> {
        let mut search = Trellis::new(self, window);
        let row = self.sync_row(&mut search);
        search.dfs(0, row, 0, 0);
        search.best.map(|value| (value, search.best_cost as usize))
    }

    pub fn decode(&self, window: &BitString) -> Option<BitString> {
        self.decode_value(&window.to_bools())
            .map(|(value, _)| BitString::from_uint(value, self.payload_len))
    }

    fn sync_row(&self, search: &mut Trellis<'_>) -> Row {
        let mut row = search.base_row();
        for _ in 0..SYNC_LEN {
            row = search.advance(&row, true);
        }
        row
    }

    /// Exhaustive nearest-codeword decoder with the same cost and tie rule.
    pub fn decode_brute_force(&self, window: &[bool]) -> Option<(u64, usize)> {
        assert!(self.payload_len <= 16, "brute force only for small payloads");
        let mut best: Option<(u64, usize)> = None;
        for value in 0..1u64 << self.payload_len {
            let cost = prefix_edit_distance(&self.template_value(value), window);
            if best.is_none_or(|(_, c)| cost < c) {
                best = Some((value, cost));
            }
        }
        best.filter(|&(_, c)| c <= self.radius)
    }
}

/// `min_e edit(codeword, window[..e])` by a full dynamic program.
pub fn prefix_edit_distance(codeword: &[bool], window: &[bool]) -> usize {
    let m = window.len();
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0; m + 1];
    for (i, &c) in codeword.iter().enumerate() {
        cur[0] = i + 1;
        for j in 1..=m {
            let diag = if window[j - 1] == c { prev[j - 1] } else { usize::MAX };
            cur[j] = diag.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    *prev.iter().min().unwrap()
}

const BAND: usize = 2 * MAX_RADIUS + 1;

/// Banded row of the alignment table: `vals[d]` is the cost of aligning `i`
/// codeword bits against `i + d - radius` window bits, capped at `radius + 1`.
#[derive(Clone, Copy)]
struct Row {
    i: usize,
    vals: [u8; BAND],
}

struct Trellis<'a> {
    window: &'a [bool],
    h: usize,
    r: usize,
    cap: u8,
    best: Option<u64>,
    best_cost: u8,
}

impl<'a> Trellis<'a> {
    fn new(spec: &InnerCodeSpec, window: &'a [bool]) -> Self {
        let cap = spec.radius as u8 + 1;
        Self { window, h: spec.payload_len, r: spec.radius, cap, best: None, best_cost: cap }
    }

    fn base_row(&self) -> Row {
        let mut vals = [self.cap; BAND];
        for (d, v) in vals.iter_mut().enumerate().take(2 * self.r + 1) {
            if d >= self.r && d - self.r <= self.window.len() {
                *v = (d - self.r) as u8;
            }
        }
        Row { i: 0, vals }
    }

    #[inline]
    fn advance(&self, old: &Row, c: bool) -> Row {
        let (r, cap) = (self.r, self.cap);
        let i = old.i + 1;
        let mut vals = [cap; BAND];
        for d in 0..=2 * r {
            let j = i as isize + d as isize - r as isize;
            if j < 0 || j as usize > self.window.len() {
                continue;
            }
            let j = j as usize;
            let mut v = cap;
            if d < 2 * r {
                v = v.min(old.vals[d + 1] + 1);
            }
            if d > 0 {
                v = v.min(vals[d - 1] + 1);
            }
            if j >= 1 && self.window[j - 1] == c {
                v = v.min(old.vals[d]);
            }
            vals[d] = v.min(cap);
        }
        Row { i, vals }
    }

    #[inline]
    fn floor(&self, row: &Row) -> u8 {
        *row.vals[..=2 * self.r].iter().min().unwrap()
    }

    fn dfs(&mut self, t: usize, row: Row, reg: u8, value: u64) {
        if self.floor(&row) >= self.best_cost {
            return;
        }
        if t == self.h {
            let mut row = row;
            for s in 0..CRC_BITS {
                let bit = (reg >> (CRC_BITS - 1 - s)) & 1 == 1;
                row = self.advance(&self.advance(&row, bit), !bit);
            }
            for _ in 0..GUARD_LEN {
                row = self.advance(&row, false);
            }
            let cost = self.floor(&row);
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best = Some(value);
            }
            return;
        }
        for bit in [false, true] {
            let next = self.advance(&self.advance(&row, bit), !bit);
            self.dfs(t + 1, next, crc_step(reg, bit), (value << 1) | bit as u64);
        }
    }
}
