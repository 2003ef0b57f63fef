//! Hamming-to-InsDel compiler: `compile` lays a Hamming codeword out as
//! zero buffers followed by inner codewords carrying `(block index, payload)`;
//! `recover` finds a block by noisy binary search over the corrupted word.

pub mod container;
pub mod inner;
mod recover;

pub use container::{Container, ContainerHeader};
pub use inner::{crc8, InnerCodeSpec};
pub use recover::{recover, recover_all, RecoverOracle, RecoverSnapshot, RecoverStats, Recoverer};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::bits::{BitString, SymbolString};
use crate::channels::{Adversary, ChannelView, CostMeter};
use crate::error::{Error, Result};
use crate::local_codes::QueryOracle;
use crate::scalar::{Fraction, Scalar};
use crate::stats::{clopper_pearson, union_bound_confidence};

/// Decoding radius of the inner code in raw edits. The code's minimum
/// insdel distance is 4 (checked in tests), so one edit is uniquely decodable.
pub const DEFAULT_INNER_RADIUS: usize = 1;
pub const DEFAULT_BETA: usize = 8;
/// Extra windows tried after a failed inner decode within one probe.
pub const PROBE_RETRIES: usize = 2;

fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CompilerParams {
    /// Hamming codeword length in symbols.
    pub k_symbols: usize,
    pub q2: u32,
    /// Payload bits per block.
    pub b: usize,
    pub idx_bits: usize,
    /// Buffer length in zeros.
    pub beta: usize,
    pub inner: InnerCodeSpec,
    /// Independent searches per recovered block, majority voted.
    pub amp: usize,
    /// Probes per search before giving up.
    pub probe_cap: usize,
    /// Bits a single probe may read.
    pub read_width: usize,
}

impl CompilerParams {
    /// Explicit layout; `idx_bits` is the smallest width addressing every block.
    pub fn new(k_symbols: usize, q2: u32, b: usize, beta: usize) -> Result<Self> {
        if k_symbols == 0 || b == 0 {
            return Err(Error::EmptyInput);
        }
        let bits = k_symbols * crate::bits::bits_per_symbol(q2);
        let blocks = bits.div_ceil(b);
        Self::with_idx_bits(k_symbols, q2, b, beta, (ceil_log2(blocks) as usize).max(1))
    }

    pub fn with_idx_bits(k_symbols: usize, q2: u32, b: usize, beta: usize, idx_bits: usize) -> Result<Self> {
        if q2 < 2 {
            return Err(Error::InvalidParams(format!("alphabet size {q2} below 2")));
        }
        let inner = InnerCodeSpec::new(b + idx_bits, DEFAULT_INNER_RADIUS)?;
        let mut params = Self {
            k_symbols,
            q2,
            b,
            idx_bits,
            beta,
            inner,
            amp: 1,
            probe_cap: 2 * idx_bits + 4,
            read_width: 2 * (beta + inner.codeword_len),
        };
        params.amp = default_amp(params.log_len());
        params.validate()?;
        Ok(params)
    }

    /// Default calibration for a Hamming codeword of `k_symbols` symbols over `q2`.
    pub fn calibrated(k_symbols: usize, q2: u32) -> Result<Self> {
        if k_symbols == 0 {
            return Err(Error::EmptyInput);
        }
        let bits = k_symbols * crate::bits::bits_per_symbol(q2);
        let b = (ceil_log2(bits) as usize).max(8);
        Self::new(k_symbols, q2, b, DEFAULT_BETA)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.beta < 2 * self.inner.max_zero_run + 2 {
            bad.push(format!("beta {} below 2*max_zero_run+2", self.beta));
        }
        if self.amp == 0 || self.probe_cap == 0 || self.read_width == 0 {
            bad.push("amp, probe_cap and read_width must be positive".to_string());
        }
        if self.idx_bits == 0 || self.idx_bits > 32 {
            bad.push(format!("idx_bits {} outside 1..=32", self.idx_bits));
        }
        if !bad.is_empty() {
            return Err(Error::InvalidParams(bad.join("; ")));
        }
        if self.blocks() as u64 > 1u64 << self.idx_bits {
            return Err(Error::TooManyBlocks { blocks: self.blocks(), idx_bits: self.idx_bits as u32 });
        }
        Ok(())
    }

    pub fn with_amp(mut self, amp: usize) -> Self {
        self.amp = amp.max(1);
        self
    }

    pub fn with_probe_cap(mut self, probe_cap: usize) -> Self {
        self.probe_cap = probe_cap.max(1);
        self
    }

    pub fn bits_per_symbol(&self) -> usize {
        crate::bits::bits_per_symbol(self.q2)
    }

    /// Length of `binary(c)`.
    pub fn message_bits(&self) -> usize {
        self.k_symbols * self.bits_per_symbol()
    }

    pub fn blocks(&self) -> usize {
        self.message_bits().div_ceil(self.b)
    }

    pub fn block_len(&self) -> usize {
        self.beta + self.inner.codeword_len
    }

    /// Compiled length `n`.
    pub fn compiled_len(&self) -> usize {
        self.blocks() * self.block_len()
    }

    /// `ceil(log2 n)` for the compiled length.
    pub fn log_len(&self) -> usize {
        (ceil_log2(self.compiled_len()) as usize).max(1)
    }

    /// Zero-run length that marks a buffer.
    pub fn scan_threshold(&self) -> usize {
        self.beta / 2
    }

    /// Worst-case compiled-word queries spent recovering one bit.
    pub fn recover_locality(&self) -> usize {
        self.amp * self.probe_cap * self.read_width
    }

    /// Compiled bits per source bit.
    pub fn expansion<T: Scalar>(&self) -> T {
        T::from_ratio(self.compiled_len() as u64, self.message_bits() as u64)
    }
}

/// Searches per block: `2 * floor(log2(n)^2 / 32) + 1`, so that with probe cap
/// and read width both linear in `log2(n)` the query bound grows as `log2(n)^4`.
fn default_amp(log_len: usize) -> usize {
    2 * (log_len * log_len / 32) + 1
}

fn emit_block(params: &CompilerParams, t: usize, payload: u64, out: &mut BitString) {
    for _ in 0..params.beta {
        out.push(false);
    }
    let value = ((t as u64) << params.b) | payload;
    out.extend_from(&params.inner.encode_value(value));
}

/// Compiles a binary Hamming codeword (`q2 = 2`).
pub fn compile_bits(c: &BitString, params: &CompilerParams) -> Result<BitString> {
    if params.q2 != 2 {
        return Err(Error::AlphabetMismatch { left: 2, right: params.q2 });
    }
    compile_expanded(c, params)
}

pub fn compile(c: &SymbolString, params: &CompilerParams) -> Result<BitString> {
    if c.q() != params.q2 {
        return Err(Error::AlphabetMismatch { left: c.q(), right: params.q2 });
    }
    compile_expanded(&c.binary_expand(), params)
}

fn compile_expanded(bits: &BitString, params: &CompilerParams) -> Result<BitString> {
    if bits.is_empty() {
        return Err(Error::EmptyInput);
    }
    if bits.len() != params.message_bits() {
        return Err(Error::LengthMismatch { left: bits.len(), right: params.message_bits() });
    }
    params.validate()?;
    let mut out = BitString::with_capacity(params.compiled_len());
    for t in 0..params.blocks() {
        let payload = (0..params.b).fold(0u64, |acc, s| {
            let i = t * params.b + s;
            (acc << 1) | (i < bits.len() && bits.bit(i)) as u64
        });
        emit_block(params, t, payload, &mut out);
    }
    Ok(out)
}

/// Measured compiler failure rates standing in for the negligible terms of the
/// compiler guarantee, with their confidence intervals.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CompilerGuarantee<T> {
    /// Per-index drop in decode success attributable to recovery.
    pub theta1_hat: T,
    pub theta1_interval: (T, T),
    /// Frequency with which recovery leaves more than `rho` wrong bits.
    pub theta2_hat: T,
    pub theta2_interval: (T, T),
    pub channel_rate: T,
    pub trials: usize,
    pub confidence: T,
    pub seed: u64,
}

impl CompilerGuarantee<f64> {
    /// Runs `trials` compile, corrupt, recover cycles on uniform words and
    /// estimates both failure terms. `rho` is the Hamming radius of the outer code.
    pub fn measure(
        params: &CompilerParams,
        channel: &dyn Adversary,
        channel_rate: f64,
        rho: Fraction,
        trials: usize,
        confidence: f64,
        seed: u64,
    ) -> Result<Self> {
        if trials == 0 {
            return Err(Error::EmptyInput);
        }
        let k = params.message_bits();
        let mut seeder = ChaCha20Rng::seed_from_u64(seed);
        let seeds: Vec<u64> = (0..trials).map(|_| seeder.next_u64()).collect();
        let runs: Vec<(Vec<usize>, bool)> = seeds
            .par_iter()
            .map(|&s| {
                let mut rng = ChaCha20Rng::seed_from_u64(s);
                let c: BitString = (0..k).map(|_| rng.gen()).collect();
                let y = compile_bits(&c, params)?;
                let y2 = channel.corrupt(&ChannelView::new(&c, &y), &mut CostMeter::unlimited(), &mut rng)?;
                let (back, _) = recover_all(&QueryOracle::new(&y2), params, rng.next_u64());
                let wrong: Vec<usize> = (0..k).filter(|&j| back.bit(j) != c.bit(j)).collect();
                let far = Fraction::new(wrong.len() as u64, k as u64) > rho;
                Ok((wrong, far))
            })
            .collect::<Result<_>>()?;
        let mut per_bit = vec![0u64; k];
        let mut far = 0u64;
        for (wrong, f) in &runs {
            wrong.iter().for_each(|&j| per_bit[j] += 1);
            far += *f as u64;
        }
        let t = trials as u64;
        let worst_bit = per_bit.iter().copied().max().unwrap_or(0);
        let (t1_lo, t1_hi) = clopper_pearson(worst_bit, t, union_bound_confidence(confidence, k));
        let (t2_lo, t2_hi) = clopper_pearson(far, t, confidence);
        Ok(Self {
            theta1_hat: worst_bit as f64 / t as f64,
            theta1_interval: (t1_lo, t1_hi),
            theta2_hat: far as f64 / t as f64,
            theta2_interval: (t2_lo, t2_hi),
            channel_rate,
            trials,
            confidence,
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::edit_raw_slices;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layout_example() {
        let params = CompilerParams::new(8, 2, 4, 8).unwrap();
        assert_eq!(params.idx_bits, 1);
        assert_eq!(params.blocks(), 2);
        assert_eq!(params.compiled_len(), 76);
        let c: BitString = "10110010".parse().unwrap();
        let y = compile_bits(&c, &params).unwrap();
        assert_eq!(y.len(), 76);
        assert_eq!(y.slice(0, 12).to_string(), "000000001111");
    }

    #[test]
    fn too_many_blocks() {
        assert!(matches!(
            CompilerParams::with_idx_bits(64, 2, 4, 8, 3),
            Err(Error::TooManyBlocks { blocks: 16, idx_bits: 3 })
        ));
    }

    #[test]
    fn compile_is_injective_for_short_words() {
        let params = CompilerParams::new(8, 2, 4, 8).unwrap();
        let mut seen = std::collections::HashSet::new();
        for v in 0..256u64 {
            let y = compile_bits(&BitString::from_uint(v, 8), &params).unwrap();
            assert!(seen.insert(y.to_string()));
        }
    }

    #[test]
    fn default_rate_bounded() {
        for k in [64, 1024, 4608, 1 << 14] {
            let params = CompilerParams::calibrated(k, 2).unwrap();
            assert!(params.expansion::<f64>() <= 12.0, "K={k}");
        }
        let q4 = CompilerParams::calibrated(100, 4).unwrap();
        assert_eq!(q4.message_bits(), 200);
    }

    #[test]
    fn guarantee_at_rate_zero_and_replay() {
        use crate::channels::{Identity, RandomInsDel};
        let params = CompilerParams::calibrated(256, 2).unwrap();
        let rho = Fraction::new(1, 100);
        let g = CompilerGuarantee::measure(&params, &Identity, 0.0, rho, 20, 0.95, 4).unwrap();
        assert_eq!((g.theta1_hat, g.theta2_hat), (0.0, 0.0));
        let adv = RandomInsDel { rate: 0.002 };
        let a = CompilerGuarantee::measure(&params, &adv, 0.002, rho, 20, 0.95, 4).unwrap();
        let b = CompilerGuarantee::measure(&params, &adv, 0.002, rho, 20, 0.95, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.theta2_interval.0 <= a.theta2_hat && a.theta2_hat <= a.theta2_interval.1);
    }

    #[test]
    fn buffers_are_the_only_long_zero_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 1..=64 {
            let params = CompilerParams::calibrated(k, 2).unwrap();
            let c: BitString = (0..k).map(|_| rng.gen()).collect();
            let y = compile_bits(&c, &params).unwrap();
            let mut starts = Vec::new();
            let mut run = 0;
            for i in 0..=y.len() {
                if i < y.len() && !y.bit(i) {
                    run += 1;
                    continue;
                }
                if run >= params.scan_threshold() {
                    starts.push(i - run);
                }
                run = 0;
            }
            let expected: Vec<usize> = (0..params.blocks()).map(|t| t * params.block_len()).collect();
            // a block ending in a zero extends the next buffer to the left by one
            assert_eq!(starts.len(), expected.len());
            for (s, e) in starts.iter().zip(&expected) {
                assert!(*s == *e || *s + 1 == *e, "{s} vs {e}");
            }
        }
    }

    #[test]
    fn inner_minimum_distance_exceeds_twice_the_radius() {
        for h in 1..=10 {
            let spec = InnerCodeSpec::new(h, DEFAULT_INNER_RADIUS).unwrap();
            let cws: Vec<Vec<bool>> = (0..1u64 << h).map(|v| spec.encode_value(v).to_bools()).collect();
            let mut dmin = usize::MAX;
            for a in 0..cws.len() {
                for b in a + 1..cws.len() {
                    dmin = dmin.min(edit_raw_slices(&cws[a], &cws[b]));
                }
            }
            assert!(dmin > 2 * spec.radius, "h={h} dmin={dmin}");
        }
        let spec = InnerCodeSpec::new(22, DEFAULT_INNER_RADIUS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let (a, b) = (rng.gen_range(0..1u64 << 22), rng.gen_range(0..1u64 << 22));
            if a != b {
                let d = edit_raw_slices(&spec.encode_value(a).to_bools(), &spec.encode_value(b).to_bools());
                assert!(d > 2 * spec.radius);
            }
        }
    }
}
