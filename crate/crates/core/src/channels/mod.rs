//! Corruption channels and adversaries, cost metering, the random-oracle
//! registry, and the compile/recover reduction wrapped around an adversary.

mod meter;
mod oracle;
pub mod subprocess;

pub use meter::{CostBudget, CostMeter, MeterSnapshot};
pub use oracle::{safe_function_eval, Digest, MeteredOracle, OracleRegistry, SafeFunctionSpec};
pub use subprocess::SubprocessAdversary;

use std::sync::Mutex;

use rand::{Rng, RngCore};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::insdel_compiler::{compile_bits, recover_all, CompilerParams, RecoverSnapshot};
use crate::local_codes::QueryOracle;
use crate::metrics::{edit_fractional, edit_raw_bounded, hamming_bits};
use crate::private_ldc::{BlockLayout, KeyedPrivateCode, SecretKey};
use crate::scalar::Fraction;

/// What an adversary sees: the message and its codeword. The key is handed
/// over only to adversaries that declare themselves key-aware.
#[derive(Clone, Copy)]
pub struct ChannelView<'a> {
    pub message: &'a BitString,
    pub codeword: &'a BitString,
    pub key: Option<&'a SecretKey>,
    pub oracle: Option<&'a OracleRegistry>,
}

impl<'a> ChannelView<'a> {
    pub fn new(message: &'a BitString, codeword: &'a BitString) -> Self {
        Self { message, codeword, key: None, oracle: None }
    }

    pub fn with_oracle(mut self, oracle: &'a OracleRegistry) -> Self {
        self.oracle = Some(oracle);
        self
    }

    pub fn with_key(mut self, key: &'a SecretKey) -> Self {
        self.key = Some(key);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Metric {
    Hamming,
    Edit,
}

/// Distance an adversary promises to stay within.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DistanceBound {
    pub metric: Metric,
    pub rate: f64,
}

impl DistanceBound {
    pub fn distance(metric: Metric, y: &BitString, y2: &BitString) -> Result<Fraction> {
        match metric {
            Metric::Hamming if y.len() != y2.len() => Ok(Fraction::from_integer(1)),
            Metric::Hamming => hamming_bits(y, y2),
            Metric::Edit => edit_fractional(y, y2),
        }
    }

    pub fn check(&self, y: &BitString, y2: &BitString) -> Result<Fraction> {
        let exceeded = || Error::InvalidParams(format!("channel exceeded its {:?} bound {}", self.metric, self.rate));
        match self.metric {
            Metric::Hamming => {
                let d = Self::distance(Metric::Hamming, y, y2)?;
                if *d.numer() as f64 / *d.denom() as f64 > self.rate * (1.0 + 1e-12) {
                    return Err(exceeded());
                }
                Ok(d)
            }
            Metric::Edit => {
                if y.is_empty() {
                    return Err(Error::EmptyReference);
                }
                let max_raw = (self.rate * 2.0 * y.len() as f64 * (1.0 + 1e-12)).floor() as usize;
                let d = edit_raw_bounded(y, y2, max_raw).ok_or_else(exceeded)?;
                Ok(Fraction::new(d as u64, 2 * y.len() as u64))
            }
        }
    }
}

pub trait Adversary: Send + Sync {
    fn id(&self) -> String;

    /// Whether the adversary must be handed the secret key (test-only separation witnesses).
    fn key_aware(&self) -> bool {
        false
    }

    fn bound(&self) -> Option<DistanceBound> {
        None
    }

    fn corrupt(&self, view: &ChannelView<'_>, meter: &mut CostMeter, rng: &mut dyn RngCore) -> Result<BitString>;
}

/// Runs `adv` and, when it advertises a bound, checks its output against it.
pub fn corrupt_checked(
    adv: &dyn Adversary,
    view: &ChannelView<'_>,
    meter: &mut CostMeter,
    rng: &mut dyn RngCore,
) -> Result<BitString> {
    let out = adv.corrupt(view, meter, rng)?;
    if let Some(bound) = adv.bound() {
        bound.check(view.codeword, &out)?;
    }
    Ok(out)
}

fn edit_ops(word_len: usize, rate: f64) -> usize {
    (rate.clamp(0.0, 1.0) * 2.0 * word_len as f64).floor() as usize
}

pub(crate) fn flip_count(word_len: usize, rate: f64) -> usize {
    (rate.clamp(0.0, 1.0) * word_len as f64).floor() as usize
}

/// `floor(2 rate |word|)` uniform insertions and deletions.
pub fn random_insdel<R: Rng + ?Sized>(word: &BitString, rate: f64, rng: &mut R) -> BitString {
    let mut bits = word.to_bools();
    for _ in 0..edit_ops(word.len(), rate) {
        if !bits.is_empty() && rng.gen_bool(0.5) {
            bits.remove(rng.gen_range(0..bits.len()));
        } else {
            let at = rng.gen_range(0..=bits.len());
            bits.insert(at, rng.gen());
        }
    }
    BitString::from_bools(&bits)
}

/// First longest run of zeros as `(start, len)`.
fn longest_zero_run(bits: &[bool]) -> (usize, usize) {
    let (mut best, mut run_start, mut run) = ((0, 0), 0, 0);
    for (i, &b) in bits.iter().enumerate() {
        if b {
            run = 0;
        } else {
            if run == 0 {
                run_start = i;
            }
            run += 1;
            if run > best.1 {
                best = (run_start, run);
            }
        }
    }
    best
}

/// Same edit budget as [`random_insdel`], spent on the longest zero runs:
/// alternately deleting a zero from one and inserting a 1 into its middle.
pub fn zero_run_killer<R: Rng + ?Sized>(word: &BitString, rate: f64, rng: &mut R) -> BitString {
    let mut bits = word.to_bools();
    for op in 0..edit_ops(word.len(), rate) {
        let (start, len) = longest_zero_run(&bits);
        if len == 0 {
            let at = rng.gen_range(0..=bits.len());
            bits.insert(at, false);
        } else if op % 2 == 0 {
            bits.remove(start + len / 2);
        } else {
            bits.insert(start + len / 2, true);
        }
    }
    BitString::from_bools(&bits)
}

/// `floor(rate |word|)` flips at distinct uniform positions.
pub fn random_flips<R: Rng + ?Sized>(word: &BitString, rate: f64, rng: &mut R) -> BitString {
    let mut out = word.clone();
    for pos in rand::seq::index::sample(rng, word.len(), flip_count(word.len(), rate).min(word.len())) {
        out.flip(pos);
    }
    out
}

/// `floor(rate |word|)` flips in one contiguous burst at a uniform offset.
pub fn burst_flips<R: Rng + ?Sized>(word: &BitString, rate: f64, rng: &mut R) -> BitString {
    let mut out = word.clone();
    let n = flip_count(word.len(), rate).min(word.len());
    if n == 0 {
        return out;
    }
    let start = rng.gen_range(0..=word.len() - n);
    for pos in start..start + n {
        out.flip(pos);
    }
    out
}

/// Spends `floor(rate K)` flips on block `block` of the private code, one per
/// distinct block-code symbol first, so the block decoder is overwhelmed.
pub fn key_aware_block_attack(word: &BitString, code: &KeyedPrivateCode, rate: f64, block: usize) -> Result<BitString> {
    block_attack_with_budget(word, code, flip_count(word.len(), rate), block)
}

/// [`key_aware_block_attack`] with an explicit flip budget; `word` may be longer
/// than the private codeword, and only its private-code prefix is touched.
pub fn block_attack_with_budget(word: &BitString, code: &KeyedPrivateCode, budget: usize, block: usize) -> Result<BitString> {
    let mut out = word.clone();
    if budget == 0 {
        return Ok(out);
    }
    let layout = code.layout();
    let needed = layout.radius_bits() + 1;
    if budget < needed {
        return Err(Error::BudgetTooSmall { needed, available: budget });
    }
    let positions = code.block_positions(block % layout.blocks);
    let symbols = layout.ell / 8;
    let order = (0..layout.ell).map(|r| (r % symbols) * 8 + r / symbols);
    for r in order.take(budget.min(layout.ell)) {
        out.flip(positions[r] as usize);
    }
    Ok(out)
}

fn charge_simple(meter: &mut CostMeter, ops: usize) -> Result<()> {
    meter.charge_rounds(1)?;
    meter.hold_space(2)?;
    meter.charge_steps(ops as u64)
}

macro_rules! rate_channel {
    ($name:ident, $id:literal, $metric:expr, $f:ident, $ops:expr) => {
        #[derive(Debug, Clone, Copy)]
        pub struct $name {
            pub rate: f64,
        }

        impl Adversary for $name {
            fn id(&self) -> String {
                $id.to_string()
            }

            fn bound(&self) -> Option<DistanceBound> {
                Some(DistanceBound { metric: $metric, rate: self.rate })
            }

            fn corrupt(&self, view: &ChannelView<'_>, meter: &mut CostMeter, mut rng: &mut dyn RngCore) -> Result<BitString> {
                charge_simple(meter, $ops(view.codeword.len(), self.rate))?;
                Ok($f(view.codeword, self.rate, &mut rng))
            }
        }
    };
}

rate_channel!(RandomInsDel, "random-insdel", Metric::Edit, random_insdel, edit_ops);
rate_channel!(ZeroRunKiller, "zero-run-killer", Metric::Edit, zero_run_killer, edit_ops);
rate_channel!(RandomFlips, "random-flips", Metric::Hamming, random_flips, flip_count);
rate_channel!(BurstFlips, "burst-flips", Metric::Hamming, burst_flips, flip_count);

/// Leaves the word untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Adversary for Identity {
    fn id(&self) -> String {
        "identity".into()
    }

    fn bound(&self) -> Option<DistanceBound> {
        Some(DistanceBound { metric: Metric::Hamming, rate: 0.0 })
    }

    fn corrupt(&self, view: &ChannelView<'_>, meter: &mut CostMeter, _rng: &mut dyn RngCore) -> Result<BitString> {
        meter.charge_steps(1)?;
        Ok(view.codeword.clone())
    }
}

/// Test-only adversary that knows the key and destroys one block of the private code.
#[derive(Debug, Clone, Copy)]
pub struct KeyAwareBlockAttack {
    pub rate: f64,
    pub layout: BlockLayout,
    pub block: usize,
}

impl Adversary for KeyAwareBlockAttack {
    fn id(&self) -> String {
        "key-aware-block".into()
    }

    fn key_aware(&self) -> bool {
        true
    }

    fn bound(&self) -> Option<DistanceBound> {
        Some(DistanceBound { metric: Metric::Hamming, rate: self.rate })
    }

    fn corrupt(&self, view: &ChannelView<'_>, meter: &mut CostMeter, _rng: &mut dyn RngCore) -> Result<BitString> {
        let key = view.key.ok_or_else(|| Error::InvalidParams("key-aware adversary run without a key".into()))?;
        charge_simple(meter, self.layout.ell)?;
        let code = KeyedPrivateCode::new(self.layout, key);
        key_aware_block_attack(view.codeword, &code, self.rate, self.block)
    }
}

/// Cost the reduction adds on top of the adversary it wraps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ReductionCost {
    pub total: MeterSnapshot,
    pub wrapped: MeterSnapshot,
    pub overhead: MeterSnapshot,
    pub recover: RecoverSnapshot,
    pub compiled_len: usize,
}

/// Turns an adversary against compiled words into one against Hamming codewords:
/// compile, let the wrapped adversary corrupt, recover every bit.
pub struct ReductionAdversary {
    inner: Box<dyn Adversary>,
    params: CompilerParams,
    last: Mutex<Option<ReductionCost>>,
}

impl ReductionAdversary {
    pub fn new(inner: Box<dyn Adversary>, params: CompilerParams) -> Self {
        Self { inner, params, last: Mutex::new(None) }
    }

    pub fn params(&self) -> &CompilerParams {
        &self.params
    }

    /// Cost breakdown of the most recent run.
    pub fn last_cost(&self) -> Option<ReductionCost> {
        *self.last.lock().expect("reduction cost poisoned")
    }

    pub fn run(
        &self,
        view: &ChannelView<'_>,
        meter: &mut CostMeter,
        rng: &mut dyn RngCore,
    ) -> Result<(BitString, ReductionCost)> {
        let p = &self.params;
        let start = meter.snapshot();
        let n = p.compiled_len() as u64;
        let log_n = p.log_len() as u64;

        // compile: blocks in parallel, each a CRC over its payload
        meter.hold_space(n + view.codeword.len() as u64)?;
        meter.charge_rounds(log_n)?;
        meter.charge_steps(n)?;
        let compiled = compile_bits(view.codeword, p)?;

        let inner_view = ChannelView { codeword: &compiled, ..*view };
        let before_inner = meter.snapshot();
        let corrupted = corrupt_checked(self.inner.as_ref(), &inner_view, meter, rng)?;
        let wrapped = meter.snapshot().minus(&before_inner);

        // recover_all: blocks in parallel, each a chain of sequential reads
        meter.hold_space(corrupted.len() as u64 + p.message_bits() as u64)?;
        let oracle = QueryOracle::new(&corrupted);
        let (recovered, stats) = recover_all(&oracle, p, rng.next_u64());
        meter.charge_rounds(stats.max_chain_queries)?;
        meter.charge_steps(stats.queries)?;

        let total = meter.snapshot().minus(&start);
        let overhead = MeterSnapshot {
            steps: total.steps - wrapped.steps,
            parallel_rounds: total.parallel_rounds - wrapped.parallel_rounds,
            space_units: total.space_units,
            oracle_queries: total.oracle_queries - wrapped.oracle_queries,
        };
        let cost = ReductionCost { total, wrapped, overhead, recover: stats, compiled_len: corrupted.len() };
        *self.last.lock().expect("reduction cost poisoned") = Some(cost);
        Ok((recovered, cost))
    }
}

impl Adversary for ReductionAdversary {
    fn id(&self) -> String {
        format!("reduction({})", self.inner.id())
    }

    fn key_aware(&self) -> bool {
        self.inner.key_aware()
    }

    fn corrupt(&self, view: &ChannelView<'_>, meter: &mut CostMeter, rng: &mut dyn RngCore) -> Result<BitString> {
        let (mut out, _) = self.run(view, meter, rng)?;
        // recovery works on whole blocks; trim the padding back off
        let len = view.codeword.len();
        if out.len() != len {
            out = out.slice(0, len);
        }
        Ok(out)
    }
}

pub const CHANNEL_IDS: &[&str] = &["identity", "random-insdel", "zero-run-killer", "random-flips", "burst-flips"];

/// Keyless channels by string ID; `subprocess:<program>` runs an external adversary.
pub fn channel_by_id(id: &str, rate: f64) -> Result<Box<dyn Adversary>> {
    Ok(match id {
        "identity" => Box::new(Identity),
        "random-insdel" => Box::new(RandomInsDel { rate }),
        "zero-run-killer" => Box::new(ZeroRunKiller { rate }),
        "random-flips" => Box::new(RandomFlips { rate }),
        "burst-flips" => Box::new(BurstFlips { rate }),
        other => match other.strip_prefix("subprocess:") {
            Some(cmd) if !cmd.is_empty() => Box::new(SubprocessAdversary::from_command_line(cmd)),
            _ => return Err(Error::UnknownChannel(other.to_string())),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::edit_raw;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_word(rng: &mut ChaCha8Rng, n: usize) -> BitString {
        (0..n).map(|_| rng.gen()).collect()
    }

    #[test]
    fn insdel_channels_respect_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let word = random_word(&mut rng, 1000);
        assert_eq!(random_insdel(&word, 0.0, &mut rng), word);
        for _ in 0..20 {
            let out = random_insdel(&word, 0.05, &mut rng);
            assert!(edit_fractional(&word, &out).unwrap() <= Fraction::new(5, 100));
            assert!(out.len() >= 900 && out.len() <= 1100);
            let out = zero_run_killer(&word, 0.05, &mut rng);
            assert!(edit_raw(&word, &out) <= 100);
        }
    }

    #[test]
    fn zero_run_killer_hits_longest_runs_first() {
        let word: BitString = "1000000001001".parse().unwrap();
        let out = zero_run_killer(&word, 0.04, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out.to_string(), "100000001001");
    }

    #[test]
    fn flips_respect_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let word = random_word(&mut rng, 500);
        for f in [random_flips::<ChaCha8Rng>, burst_flips::<ChaCha8Rng>] {
            let out = f(&word, 0.02, &mut rng);
            assert_eq!(word.xor(&out).unwrap().count_ones(), 10);
        }
    }

    #[test]
    fn unknown_channel_rejected() {
        assert!(matches!(channel_by_id("nope", 0.1), Err(Error::UnknownChannel(_))));
        for id in CHANNEL_IDS {
            assert_eq!(channel_by_id(id, 0.1).unwrap().id(), *id);
        }
    }

    #[test]
    fn key_aware_attack_kills_target_block_only() {
        let layout = BlockLayout::new(256, 64).unwrap();
        let key = SecretKey::gen(32).unwrap();
        let code = KeyedPrivateCode::new(layout, &key);
        let x = BitString::zeros(256);
        let y = code.encode(&x).unwrap();
        let rate = (layout.radius_bits() + 1) as f64 / y.len() as f64;
        let y2 = key_aware_block_attack(&y, &code, rate, 1).unwrap();
        assert_eq!(y.xor(&y2).unwrap().count_ones(), layout.radius_bits() + 1);
        let oracle = QueryOracle::new(&y2);
        assert!(code.decode_index(&oracle, 64).is_err());
        assert!(code.decode_index(&oracle, 0).is_ok());
        assert_eq!(key_aware_block_attack(&y, &code, 0.0, 1).unwrap(), y);
        assert!(matches!(
            key_aware_block_attack(&y, &code, 1.0 / y.len() as f64, 1),
            Err(Error::BudgetTooSmall { .. })
        ));
    }

    #[test]
    fn reduction_with_identity_is_transparent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = random_word(&mut rng, 500);
        let x = BitString::zeros(1);
        let params = CompilerParams::calibrated(500, 2).unwrap();
        let red = ReductionAdversary::new(Box::new(Identity), params);
        let mut meter = CostMeter::unlimited();
        let out = red.corrupt(&ChannelView::new(&x, &y), &mut meter, &mut rng).unwrap();
        assert_eq!(out, y);
        let cost = red.last_cost().unwrap();
        assert_eq!(meter.snapshot().parallel_rounds, cost.wrapped.parallel_rounds + cost.overhead.parallel_rounds);
        assert!(cost.overhead.parallel_rounds > 0);
    }
}
