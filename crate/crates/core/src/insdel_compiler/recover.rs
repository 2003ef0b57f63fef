use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CompilerParams, PROBE_RETRIES};
use crate::bits::BitString;
use crate::local_codes::BitOracle;

/// Aggregate counters for recovery work; exact under concurrent use.
#[derive(Debug, Default)]
pub struct RecoverStats {
    searches: AtomicU64,
    probes: AtomicU64,
    aborted: AtomicU64,
    queries: AtomicU64,
    max_chain_queries: AtomicU64,
    max_chain_probes: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RecoverSnapshot {
    pub searches: u64,
    pub probes: u64,
    pub aborted: u64,
    /// Compiled-word reads across all searches.
    pub queries: u64,
    /// Most reads spent recovering a single block.
    pub max_chain_queries: u64,
    /// Most probes spent recovering a single block.
    pub max_chain_probes: u64,
}

impl RecoverStats {
    pub fn snapshot(&self) -> RecoverSnapshot {
        RecoverSnapshot {
            searches: self.searches.load(Ordering::Relaxed),
            probes: self.probes.load(Ordering::Relaxed),
            aborted: self.aborted.load(Ordering::Relaxed),
            queries: self.queries.load(Ordering::Relaxed),
            max_chain_queries: self.max_chain_queries.load(Ordering::Relaxed),
            max_chain_probes: self.max_chain_probes.load(Ordering::Relaxed),
        }
    }

    fn record_chain(&self, queries: u64, probes: u64) {
        self.queries.fetch_add(queries, Ordering::Relaxed);
        self.probes.fetch_add(probes, Ordering::Relaxed);
        self.max_chain_queries.fetch_max(queries, Ordering::Relaxed);
        self.max_chain_probes.fetch_max(probes, Ordering::Relaxed);
    }
}

enum Probe {
    Found(Decoded),
    /// Reached the end of the word without seeing any buffer.
    EndOfWord,
    Failed,
}

struct Decoded {
    header: u64,
    payload: u64,
    window_start: usize,
}

#[derive(Default)]
struct Chain {
    queries: u64,
    probes: u64,
}

/// Local recovery of source bits from a corrupted compiled word.
pub struct Recoverer<'a> {
    params: CompilerParams,
    oracle: &'a dyn BitOracle,
    seed: u64,
    stats: RecoverStats,
}

impl<'a> Recoverer<'a> {
    pub fn new(params: CompilerParams, oracle: &'a dyn BitOracle, seed: u64) -> Self {
        Self { params, oracle, seed, stats: RecoverStats::default() }
    }

    pub fn params(&self) -> &CompilerParams {
        &self.params
    }

    pub fn stats(&self) -> RecoverSnapshot {
        self.stats.snapshot()
    }

    fn rng_for_block(&self, t: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t as u64);
        rng
    }

    /// Reads from `start` looking for a buffer followed by a decodable block.
    fn probe(&self, start: usize, chain: &mut Chain) -> Probe {
        let p = &self.params;
        let len = self.oracle.len();
        let limit = p.read_width.min(len.saturating_sub(start));
        let thr = p.scan_threshold();
        let mut seen: Vec<bool> = Vec::with_capacity(limit);
        let mut read_to = |end: usize, seen: &mut Vec<bool>| {
            let end = end.min(limit);
            while seen.len() < end {
                seen.push(self.oracle.query(start + seen.len()));
                chain.queries += 1;
            }
        };
        chain.probes += 1;
        let mut k = 0;
        let mut failures = 0;
        loop {
            let mut run = 0;
            loop {
                read_to(k + 1, &mut seen);
                if k >= seen.len() {
                    let at_end = start + k >= len;
                    return if at_end && failures == 0 { Probe::EndOfWord } else { Probe::Failed };
                }
                if !seen[k] {
                    run += 1;
                } else if run >= thr {
                    break;
                } else {
                    run = 0;
                }
                k += 1;
            }
            let mut window_start = k;
            loop {
                let want = window_start + p.inner.window_len();
                read_to(want, &mut seen);
                let mut window = seen[window_start..].to_vec();
                if start + want > len {
                    // reads past the end of the word are zeros
                    window.resize(want.min(len + p.inner.window_len() - start) - window_start, false);
                }
                if let Some((value, _)) = p.inner.decode_value(&window) {
                    return Probe::Found(Decoded {
                        header: value >> p.b,
                        payload: value & ((1u64 << p.b) - 1),
                        window_start: start + window_start,
                    });
                }
                failures += 1;
                if failures > PROBE_RETRIES {
                    return Probe::Failed;
                }
                // a 1 inserted into a buffer leaves the sync marker a few bits later
                let lookahead = (window_start + p.scan_threshold() + 1).min(seen.len());
                match (window_start + 1..lookahead).find(|&s| !seen[s - 1] && seen[s]) {
                    Some(s) => window_start = s,
                    None => break,
                }
            }
            k = window_start + 1;
        }
    }

    /// One noisy binary search for block `t`; `None` when it gives up.
    fn search(&self, t: usize, rng: &mut ChaCha8Rng, chain: &mut Chain) -> Option<u64> {
        let p = &self.params;
        let (mut lo, mut hi) = (0usize, self.oracle.len());
        let mut random_next = false;
        self.stats.searches.fetch_add(1, Ordering::Relaxed);
        for _ in 0..p.probe_cap {
            if lo >= hi {
                break;
            }
            let span = hi - lo;
            let mid = if random_next {
                rng.gen_range(lo..hi)
            } else {
                let jitter = (span / 8) as isize;
                let offset = if jitter > 0 { rng.gen_range(-jitter..=jitter) } else { 0 };
                (lo as isize + (span / 2) as isize + offset).clamp(lo as isize, hi as isize - 1) as usize
            };
            match self.probe(mid, chain) {
                Probe::Found(d) if d.header as usize >= p.blocks() => random_next = true,
                Probe::Found(d) if d.header as usize == t => return Some(d.payload),
                // the first buffer at or after `mid` is past the target, so the target starts before `mid`
                Probe::Found(d) if (d.header as usize) > t => {
                    hi = hi.min(mid);
                    random_next = false;
                }
                Probe::Found(d) => {
                    lo = lo.max(d.window_start + 1);
                    random_next = false;
                }
                // no block starts in [mid, len)
                Probe::EndOfWord => {
                    hi = mid;
                    random_next = false;
                }
                Probe::Failed => random_next = true,
            }
        }
        self.stats.aborted.fetch_add(1, Ordering::Relaxed);
        None
    }

    /// Payload of block `t` by majority over `amp` searches; aborted searches vote all zeros.
    pub fn recover_block(&self, t: usize) -> u64 {
        let p = &self.params;
        let mut rng = self.rng_for_block(t);
        let mut chain = Chain::default();
        let mut votes: Vec<(u64, usize)> = Vec::new();
        let mut results = Vec::with_capacity(p.amp);
        for _ in 0..p.amp {
            let value = self.search(t, &mut rng, &mut chain).unwrap_or(0);
            results.push(value);
            match votes.iter_mut().find(|(v, _)| *v == value) {
                Some((_, n)) => *n += 1,
                None => votes.push((value, 1)),
            }
            // a strict majority for one value fixes every bit's majority
            if let Some(&(v, _)) = votes.iter().find(|(_, n)| 2 * n > p.amp) {
                self.stats.record_chain(chain.queries, chain.probes);
                return v;
            }
        }
        self.stats.record_chain(chain.queries, chain.probes);
        (0..p.b).fold(0u64, |acc, s| {
            let ones = results.iter().filter(|&&v| (v >> (p.b - 1 - s)) & 1 == 1).count();
            (acc << 1) | (2 * ones > results.len()) as u64
        })
    }

    /// Bit `j` of `binary(c)`.
    pub fn recover(&self, j: usize) -> bool {
        let b = self.params.b;
        (self.recover_block(j / b) >> (b - 1 - j % b)) & 1 == 1
    }

    /// Every source bit, blocks recovered in parallel.
    pub fn recover_all(&self) -> BitString {
        let p = &self.params;
        let blocks: Vec<u64> = (0..p.blocks()).into_par_iter().map(|t| self.recover_block(t)).collect();
        let mut out = BitString::with_capacity(p.message_bits());
        for j in 0..p.message_bits() {
            out.push((blocks[j / p.b] >> (p.b - 1 - j % p.b)) & 1 == 1);
        }
        out
    }
}

/// Single-bit recovery with a fresh recoverer.
pub fn recover(oracle: &dyn BitOracle, params: &CompilerParams, j: usize, seed: u64) -> bool {
    Recoverer::new(*params, oracle, seed).recover(j)
}

pub fn recover_all(oracle: &dyn BitOracle, params: &CompilerParams, seed: u64) -> (BitString, RecoverSnapshot) {
    let r = Recoverer::new(*params, oracle, seed);
    let out = r.recover_all();
    (out, r.stats())
}

/// Oracle over `binary(c)` answered by recovery from the compiled word, one
/// recovery per block, memoized.
pub struct RecoverOracle<'a> {
    recoverer: Recoverer<'a>,
    blocks: Vec<OnceLock<u64>>,
    queries: AtomicU64,
}

impl<'a> RecoverOracle<'a> {
    pub fn new(params: CompilerParams, oracle: &'a dyn BitOracle, seed: u64) -> Self {
        let blocks = (0..params.blocks()).map(|_| OnceLock::new()).collect();
        Self { recoverer: Recoverer::new(params, oracle, seed), blocks, queries: AtomicU64::new(0) }
    }

    pub fn stats(&self) -> RecoverSnapshot {
        self.recoverer.stats()
    }

    /// Reads of the compiled word so far.
    pub fn compiled_queries(&self) -> u64 {
        self.recoverer.oracle.queries()
    }
}

impl BitOracle for RecoverOracle<'_> {
    fn len(&self) -> usize {
        self.recoverer.params.message_bits()
    }

    fn query(&self, j: usize) -> bool {
        self.queries.fetch_add(1, Ordering::Relaxed);
        let p = &self.recoverer.params;
        if j >= p.message_bits() {
            return false;
        }
        let t = j / p.b;
        let value = *self.blocks[t].get_or_init(|| self.recoverer.recover_block(t));
        (value >> (p.b - 1 - j % p.b)) & 1 == 1
    }

    fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::super::compile_bits;
    use super::*;
    use crate::local_codes::QueryOracle;

    #[test]
    fn identity_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in [1usize, 7, 8, 100, 1024] {
            let params = CompilerParams::calibrated(k, 2).unwrap();
            let c: BitString = (0..k).map(|_| rng.gen()).collect();
            let y = compile_bits(&c, &params).unwrap();
            let oracle = QueryOracle::new(&y);
            let (out, stats) = recover_all(&oracle, &params, 1);
            assert_eq!(out, c, "K={k}");
            assert_eq!(stats.aborted, 0, "K={k} {stats:?}");
            assert!(stats.max_chain_queries <= params.recover_locality() as u64);
            assert_eq!(stats.queries, oracle.queries());
            for j in [0, k / 2, k - 1] {
                assert_eq!(recover(&oracle, &params, j, 9), c.bit(j));
            }
        }
    }

    #[test]
    fn recover_oracle_matches_recover_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = CompilerParams::calibrated(300, 2).unwrap();
        let c: BitString = (0..300).map(|_| rng.gen()).collect();
        let mut y = compile_bits(&c, &params).unwrap().to_bools();
        for _ in 0..10 {
            let at = rng.gen_range(0..y.len());
            y.remove(at);
        }
        let y = BitString::from_bools(&y);
        let oracle = QueryOracle::new(&y);
        let (all, _) = recover_all(&oracle, &params, 3);
        let lazy = RecoverOracle::new(params, &oracle, 3);
        for j in (0..300).rev() {
            assert_eq!(lazy.query(j), all.bit(j));
        }
        assert_eq!(lazy.queries(), 300);
    }
}
