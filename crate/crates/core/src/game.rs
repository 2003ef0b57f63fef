//! Security games: the Fool predicate estimated from repeated decoder runs,
//! the one-time and multi-round games for keyed codes, and the game for
//! keyless codes against cost-bounded adversaries.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::channels::{flip_count, Adversary, ChannelView, CostBudget, CostMeter, MeterSnapshot, Metric, OracleRegistry};
use crate::composed::{expand_blocks, PrivateInsdelCode, RbHammingCode, RbInsdelCode};
use crate::error::{Error, Result};
use crate::insdel_compiler::CompilerParams;
use crate::local_codes::QueryOracle;
use crate::metrics::{edit_fractional_within, hamming_bits};
use crate::private_ldc::{BlockLayout, KeyedPrivateCode, SecretKey};
use crate::scalar::Fraction;
use crate::stats::{union_bound_confidence, Proportion};

pub const MIN_TRIALS: usize = 100;
pub const MAX_ROUNDS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fooled {
    Yes,
    No,
    /// The interval of the worst index straddles `p`.
    Inconclusive,
}

mod fraction_text {
    use super::Fraction;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(f: &Fraction, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", f.numer(), f.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Fraction, D::Error> {
        let text = String::deserialize(d)?;
        let (n, m) = text.split_once('/').ok_or_else(|| serde::de::Error::custom("expected num/den"))?;
        let n: u64 = n.trim().parse().map_err(serde::de::Error::custom)?;
        let m: u64 = m.trim().parse().map_err(serde::de::Error::custom)?;
        if m == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Fraction::new(n, m))
    }
}

/// Thresholds and sampling effort of the Fool predicate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FoolConfig {
    #[serde(with = "fraction_text")]
    pub rho: Fraction,
    pub p: f64,
    pub trials: usize,
    /// Family-wise confidence across all indices.
    pub confidence: f64,
}

impl FoolConfig {
    pub fn new(rho: Fraction, p: f64, trials: usize, confidence: f64) -> Result<Self> {
        let cfg = Self { rho, p, trials, confidence };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::InvalidParams(format!("trials {} below {MIN_TRIALS}", self.trials)));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidParams(format!("p {} outside (0, 1]", self.p)));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidParams(format!("confidence {} outside (0, 1)", self.confidence)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FoolVerdict {
    pub fooled: Fooled,
    /// Normalised distance, when it was within `rho` (edit distances beyond it are not computed).
    pub distance: Option<f64>,
    pub distance_ok: bool,
    pub worst_index: Option<usize>,
    pub worst: Option<Proportion>,
    pub trials: usize,
    /// The adversary ran out of budget and produced no word.
    pub budget_exceeded: bool,
}

impl FoolVerdict {
    fn not_fooled(trials: usize) -> Self {
        Self {
            fooled: Fooled::No,
            distance: None,
            distance_ok: false,
            worst_index: None,
            worst: None,
            trials,
            budget_exceeded: false,
        }
    }
}

/// A code ready to encode and decode: keyed codes after instantiation under a
/// key, keyless codes bound to an oracle registry.
pub trait CodeInstance: Send + Sync {
    fn message_len(&self) -> usize;
    fn metric(&self) -> Metric;
    /// Whether `decode_all` depends on its seed.
    fn randomized(&self) -> bool;
    fn encode(&self, x: &BitString) -> Result<BitString>;
    /// One decoder run on every index; `None` is an abstention.
    fn decode_all(&self, word: &BitString, seed: u64) -> Vec<Option<bool>>;
}

impl CodeInstance for KeyedPrivateCode {
    fn message_len(&self) -> usize {
        self.layout().k
    }

    fn metric(&self) -> Metric {
        Metric::Hamming
    }

    fn randomized(&self) -> bool {
        false
    }

    fn encode(&self, x: &BitString) -> Result<BitString> {
        KeyedPrivateCode::encode(self, x)
    }

    fn decode_all(&self, word: &BitString, _seed: u64) -> Vec<Option<bool>> {
        expand_blocks(self, &self.decode_all_blocks(&QueryOracle::new(word)))
    }
}

impl CodeInstance for PrivateInsdelCode {
    fn message_len(&self) -> usize {
        PrivateInsdelCode::message_len(self)
    }

    fn metric(&self) -> Metric {
        Metric::Edit
    }

    fn randomized(&self) -> bool {
        true
    }

    fn encode(&self, x: &BitString) -> Result<BitString> {
        self.encode_fin(x)
    }

    fn decode_all(&self, word: &BitString, seed: u64) -> Vec<Option<bool>> {
        PrivateInsdelCode::decode_all(self, &QueryOracle::new(word), seed)
    }
}

/// Per-index success estimates of decoding `y2` back to `x`. Deterministic
/// decoders are run once and their estimates are exact.
pub fn success_profile(
    code: &dyn CodeInstance,
    x: &BitString,
    y2: &BitString,
    trials: usize,
    confidence: f64,
    seed: u64,
) -> Result<Vec<Proportion>> {
    let k = code.message_len();
    if x.len() != k {
        return Err(Error::LengthMismatch { left: x.len(), right: k });
    }
    let hits = |out: &[Option<bool>], acc: &mut [u64]| {
        for (i, bit) in out.iter().enumerate() {
            if *bit == Some(x.bit(i)) {
                acc[i] += 1;
            }
        }
    };
    let t = trials as u64;
    if !code.randomized() {
        let mut acc = vec![0u64; k];
        hits(&code.decode_all(y2, seed), &mut acc);
        return Ok(acc
            .into_iter()
            .map(|s| {
                let hat = s as f64;
                Proportion { successes: s * t, trials: t, hat, lower: hat, upper: hat }
            })
            .collect());
    }
    let mut seeder = ChaCha20Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..trials).map(|_| seeder.next_u64()).collect();
    let counts = seeds
        .par_iter()
        .fold(
            || vec![0u64; k],
            |mut acc, &s| {
                hits(&code.decode_all(y2, s), &mut acc);
                acc
            },
        )
        .reduce(
            || vec![0u64; k],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
                a
            },
        );
    let per_index = union_bound_confidence(confidence, k);
    Ok(counts.into_iter().map(|s| Proportion::new(s, t, per_index)).collect())
}

/// Distance of `y2` from `y` when it is within `rho`.
pub fn distance_within(metric: Metric, y: &BitString, y2: &BitString, rho: Fraction) -> Result<Option<Fraction>> {
    match metric {
        Metric::Hamming if y.len() != y2.len() => Ok(None),
        Metric::Hamming => Ok(Some(hamming_bits(y, y2)?).filter(|d| *d <= rho)),
        Metric::Edit => edit_fractional_within(y, y2, rho),
    }
}

/// The Fool predicate: `y2` is within `rho` of `y` and some index decodes
/// correctly with probability below `p`.
pub fn estimate_fool(
    code: &dyn CodeInstance,
    x: &BitString,
    y: &BitString,
    y2: &BitString,
    cfg: &FoolConfig,
    seed: u64,
) -> Result<FoolVerdict> {
    cfg.validate()?;
    let Some(d) = distance_within(code.metric(), y, y2, cfg.rho)? else {
        return Ok(FoolVerdict::not_fooled(cfg.trials));
    };
    let profile = success_profile(code, x, y2, cfg.trials, cfg.confidence, seed)?;
    let (worst_index, worst) = profile
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.upper.total_cmp(&b.1.upper).then(a.1.hat.total_cmp(&b.1.hat)))
        .map(|(i, p)| (i, *p))
        .ok_or(Error::EmptyInput)?;
    let fooled = if worst.upper < cfg.p {
        Fooled::Yes
    } else if profile.iter().all(|q| q.lower >= cfg.p) {
        Fooled::No
    } else {
        Fooled::Inconclusive
    };
    Ok(FoolVerdict {
        fooled,
        distance: Some(*d.numer() as f64 / *d.denom() as f64),
        distance_ok: true,
        worst_index: Some(worst_index),
        worst: Some(worst),
        trials: cfg.trials,
        budget_exceeded: false,
    })
}

/// A keyed code family, instantiated per key.
pub trait KeyedScheme: Send + Sync {
    fn id(&self) -> String;
    fn lambda(&self) -> u32;
    fn message_len(&self) -> usize;
    fn instantiate(&self, key: &SecretKey) -> Box<dyn CodeInstance>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrivateScheme {
    pub layout: BlockLayout,
    pub lambda: u32,
}

impl KeyedScheme for PrivateScheme {
    fn id(&self) -> String {
        "private-ldc".into()
    }

    fn lambda(&self) -> u32 {
        self.lambda
    }

    fn message_len(&self) -> usize {
        self.layout.k
    }

    fn instantiate(&self, key: &SecretKey) -> Box<dyn CodeInstance> {
        Box::new(KeyedPrivateCode::new(self.layout, key))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComposedScheme {
    pub layout: BlockLayout,
    pub compiler: CompilerParams,
    pub lambda: u32,
}

impl KeyedScheme for ComposedScheme {
    fn id(&self) -> String {
        crate::composed::PRIV_CODEC.into()
    }

    fn lambda(&self) -> u32 {
        self.lambda
    }

    fn message_len(&self) -> usize {
        self.layout.k
    }

    fn instantiate(&self, key: &SecretKey) -> Box<dyn CodeInstance> {
        Box::new(PrivateInsdelCode::from_layout(self.layout, self.compiler, key))
    }
}

/// A keyless code whose encoder and decoder share only a random oracle.
pub trait KeylessScheme: Send + Sync {
    fn id(&self) -> String;
    fn lambda(&self) -> u32;
    fn message_len(&self) -> usize;
    fn metric(&self) -> Metric;
    fn randomized(&self) -> bool;
    fn encode(&self, x: &BitString, registry: &OracleRegistry, rng: &mut dyn RngCore) -> Result<BitString>;
    fn decode_all(&self, word: &BitString, registry: &OracleRegistry, seed: u64) -> Vec<Option<bool>>;
}

impl KeylessScheme for RbHammingCode {
    fn id(&self) -> String {
        "rb-hamming".into()
    }

    fn lambda(&self) -> u32 {
        self.lambda
    }

    fn message_len(&self) -> usize {
        RbHammingCode::message_len(self)
    }

    fn metric(&self) -> Metric {
        Metric::Hamming
    }

    fn randomized(&self) -> bool {
        false
    }

    fn encode(&self, x: &BitString, registry: &OracleRegistry, rng: &mut dyn RngCore) -> Result<BitString> {
        Ok(RbHammingCode::encode(self, x, registry, rng)?.word)
    }

    fn decode_all(&self, word: &BitString, registry: &OracleRegistry, _seed: u64) -> Vec<Option<bool>> {
        RbHammingCode::decode_all(self, &QueryOracle::new(word), registry)
    }
}

impl KeylessScheme for RbInsdelCode {
    fn id(&self) -> String {
        crate::composed::RB_CODEC.into()
    }

    fn lambda(&self) -> u32 {
        self.hamming.lambda
    }

    fn message_len(&self) -> usize {
        RbInsdelCode::message_len(self)
    }

    fn metric(&self) -> Metric {
        Metric::Edit
    }

    fn randomized(&self) -> bool {
        true
    }

    fn encode(&self, x: &BitString, registry: &OracleRegistry, rng: &mut dyn RngCore) -> Result<BitString> {
        Ok(RbInsdelCode::encode(self, x, registry, rng)?.word)
    }

    fn decode_all(&self, word: &BitString, registry: &OracleRegistry, seed: u64) -> Vec<Option<bool>> {
        RbInsdelCode::decode_all(self, &QueryOracle::new(word), registry, seed)
    }
}

/// A keyless scheme bound to one oracle registry.
pub struct BoundKeyless<'a> {
    pub scheme: &'a dyn KeylessScheme,
    pub registry: &'a OracleRegistry,
}

impl CodeInstance for BoundKeyless<'_> {
    fn message_len(&self) -> usize {
        self.scheme.message_len()
    }

    fn metric(&self) -> Metric {
        self.scheme.metric()
    }

    fn randomized(&self) -> bool {
        self.scheme.randomized()
    }

    fn encode(&self, _x: &BitString) -> Result<BitString> {
        Err(Error::InvalidParams("keyless encoding needs its own randomness".into()))
    }

    fn decode_all(&self, word: &BitString, seed: u64) -> Vec<Option<bool>> {
        self.scheme.decode_all(word, self.registry, seed)
    }
}

/// How the single game key yields per-round keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeySchedule {
    /// The same key every round.
    OneTime,
    /// A fresh key derived from the game key and the round number.
    PerRound,
}

impl KeySchedule {
    pub fn key_for(&self, key: &SecretKey, round: usize) -> SecretKey {
        match self {
            KeySchedule::OneTime => key.clone(),
            KeySchedule::PerRound => key.derive_round(round as u64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    OneTime,
    PrivLdc,
    CSecure,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GameRound {
    pub round: usize,
    pub message: BitString,
    pub codeword: BitString,
    pub corrupted: Option<BitString>,
    pub adversary_seed: u64,
    pub decoder_seed: u64,
    pub verdict: FoolVerdict,
    pub meter: MeterSnapshot,
    /// No oracle digest the adversary held was deeper than its rounds.
    pub depth_sound: bool,
}

/// One row of the per-round CSV summary.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RoundRow {
    pub round: usize,
    pub distance: Option<f64>,
    pub worst_index: Option<usize>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub verdict: Fooled,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GameReport {
    pub game: GameKind,
    pub scheme: String,
    pub adversary: String,
    pub seed: u64,
    pub schedule: Option<KeySchedule>,
    pub key_fingerprint: Option<String>,
    pub config: FoolConfig,
    pub rounds: Vec<GameRound>,
    pub yes_rounds: usize,
    /// Whether any round was fooled.
    pub win: bool,
}

impl GameReport {
    pub fn new(
        game: GameKind,
        scheme: String,
        adversary: String,
        seed: u64,
        schedule: Option<KeySchedule>,
        key_fingerprint: Option<String>,
        config: FoolConfig,
        rounds: Vec<GameRound>,
    ) -> Self {
        let yes_rounds = rounds.iter().filter(|r| r.verdict.fooled == Fooled::Yes).count();
        Self { game, scheme, adversary, seed, schedule, key_fingerprint, config, rounds, yes_rounds, win: yes_rounds > 0 }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn rows(&self) -> Vec<RoundRow> {
        self.rounds
            .iter()
            .map(|r| RoundRow {
                round: r.round,
                distance: r.verdict.distance,
                worst_index: r.verdict.worst_index,
                lower: r.verdict.worst.map(|w| w.lower),
                upper: r.verdict.worst.map(|w| w.upper),
                verdict: r.verdict.fooled,
            })
            .collect()
    }
}

/// Runs the adversary, turning a budget overflow into a missing word.
fn run_channel(
    adv: &dyn Adversary,
    view: &ChannelView<'_>,
    meter: &mut CostMeter,
    rng: &mut dyn RngCore,
) -> Result<Option<BitString>> {
    match adv.corrupt(view, meter, rng) {
        Ok(word) => Ok(Some(word)),
        Err(Error::BudgetExceeded(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn judge(
    code: &dyn CodeInstance,
    x: &BitString,
    y: &BitString,
    y2: Option<&BitString>,
    cfg: &FoolConfig,
    seed: u64,
) -> Result<FoolVerdict> {
    match y2 {
        Some(w) => estimate_fool(code, x, y, w, cfg, seed),
        None => Ok(FoolVerdict { budget_exceeded: true, ..FoolVerdict::not_fooled(cfg.trials) }),
    }
}

/// One encoding under a fresh key, one corruption, one Fool estimate. The key
/// reaches the adversary only if it declares itself key-aware.
pub fn one_time_game(
    scheme: &dyn KeyedScheme,
    adv: &dyn Adversary,
    x: &BitString,
    cfg: &FoolConfig,
    seed: u64,
) -> Result<GameReport> {
    cfg.validate()?;
    let mut master = ChaCha20Rng::seed_from_u64(seed);
    let key = SecretKey::gen_with(scheme.lambda(), &mut master)?;
    let (adversary_seed, decoder_seed) = (master.next_u64(), master.next_u64());
    let code = scheme.instantiate(&key);
    let y = code.encode(x)?;
    let mut view = ChannelView::new(x, &y);
    if adv.key_aware() {
        view = view.with_key(&key);
    }
    let mut meter = CostMeter::unlimited();
    let y2 = run_channel(adv, &view, &mut meter, &mut ChaCha20Rng::seed_from_u64(adversary_seed))?;
    let verdict = judge(code.as_ref(), x, &y, y2.as_ref(), cfg, decoder_seed)?;
    let round = GameRound {
        round: 0,
        message: x.clone(),
        codeword: y,
        corrupted: y2,
        adversary_seed,
        decoder_seed,
        verdict,
        meter: meter.snapshot(),
        depth_sound: meter.depth_sound(),
    };
    Ok(GameReport::new(
        GameKind::OneTime,
        scheme.id(),
        adv.id(),
        seed,
        None,
        Some(key.fingerprint()),
        *cfg,
        vec![round],
    ))
}

/// What an adaptive adversary has seen after a round.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub message: BitString,
    pub codeword: BitString,
}

/// Adversary of the multi-round game: picks each message after seeing the
/// earlier codewords, then corrupts the current one.
pub trait AdaptiveAdversary: Send + Sync {
    fn id(&self) -> String;
    fn choose_message(&self, k: usize, transcript: &[Exchange], rng: &mut dyn RngCore) -> BitString;
    fn corrupt(
        &self,
        view: &ChannelView<'_>,
        transcript: &[Exchange],
        meter: &mut CostMeter,
        rng: &mut dyn RngCore,
    ) -> Result<BitString>;
}

/// Uniform messages, each corrupted by a fixed channel.
pub struct RandomMessages {
    pub channel: Box<dyn Adversary>,
}

impl AdaptiveAdversary for RandomMessages {
    fn id(&self) -> String {
        format!("random-messages/{}", self.channel.id())
    }

    fn choose_message(&self, k: usize, _transcript: &[Exchange], rng: &mut dyn RngCore) -> BitString {
        (0..k).map(|_| rng.gen()).collect()
    }

    fn corrupt(
        &self,
        view: &ChannelView<'_>,
        _transcript: &[Exchange],
        meter: &mut CostMeter,
        rng: &mut dyn RngCore,
    ) -> Result<BitString> {
        self.channel.corrupt(view, meter, rng)
    }
}

/// Encodes two messages differing in the first bit, then spends its flips on
/// the positions where their codewords differed. Under a reused key those
/// positions belong to the first block.
#[derive(Debug, Clone, Copy)]
pub struct TranscriptCorrelator {
    pub rate: f64,
}

impl AdaptiveAdversary for TranscriptCorrelator {
    fn id(&self) -> String {
        "transcript-correlator".into()
    }

    fn choose_message(&self, k: usize, transcript: &[Exchange], rng: &mut dyn RngCore) -> BitString {
        match transcript.len() {
            0 => BitString::zeros(k),
            1 => {
                let mut x = BitString::zeros(k);
                x.set(0, true);
                x
            }
            _ => (0..k).map(|_| rng.gen()).collect(),
        }
    }

    fn corrupt(
        &self,
        view: &ChannelView<'_>,
        transcript: &[Exchange],
        meter: &mut CostMeter,
        rng: &mut dyn RngCore,
    ) -> Result<BitString> {
        let n = view.codeword.len();
        let budget = flip_count(n, self.rate);
        meter.charge_steps(n as u64)?;
        let mut targets: Vec<usize> = match transcript {
            [a, b, ..] if a.codeword.len() == n && b.codeword.len() == n => {
                a.codeword.xor(&b.codeword)?.iter().enumerate().filter(|(_, d)| *d).map(|(i, _)| i).collect()
            }
            _ => Vec::new(),
        };
        // spread the flips over the differing positions
        for i in (1..targets.len()).rev() {
            targets.swap(i, rng.gen_range(0..=i));
        }
        let mut out = view.codeword.clone();
        let mut chosen = std::collections::HashSet::new();
        for &pos in targets.iter().take(budget) {
            chosen.insert(pos);
        }
        while chosen.len() < budget.min(n) {
            chosen.insert(rng.gen_range(0..n));
        }
        for pos in chosen {
            out.flip(pos);
        }
        Ok(out)
    }
}

/// `h` adaptive rounds under one game key. The adversary wins if any round is fooled.
pub fn priv_ldc_game(
    scheme: &dyn KeyedScheme,
    adv: &dyn AdaptiveAdversary,
    h: usize,
    schedule: KeySchedule,
    cfg: &FoolConfig,
    seed: u64,
) -> Result<GameReport> {
    cfg.validate()?;
    if h == 0 || h > MAX_ROUNDS {
        return Err(Error::InvalidParams(format!("rounds {h} outside 1..={MAX_ROUNDS}")));
    }
    let mut master = ChaCha20Rng::seed_from_u64(seed);
    let key = SecretKey::gen_with(scheme.lambda(), &mut master)?;
    let mut transcript: Vec<Exchange> = Vec::with_capacity(h);
    let mut rounds = Vec::with_capacity(h);
    for round in 0..h {
        let (adversary_seed, decoder_seed) = (master.next_u64(), master.next_u64());
        let mut adv_rng = ChaCha20Rng::seed_from_u64(adversary_seed);
        let code = scheme.instantiate(&schedule.key_for(&key, round));
        let x = adv.choose_message(scheme.message_len(), &transcript, &mut adv_rng);
        let y = code.encode(&x)?;
        let view = ChannelView::new(&x, &y);
        let mut meter = CostMeter::unlimited();
        let y2 = match adv.corrupt(&view, &transcript, &mut meter, &mut adv_rng) {
            Ok(w) => Some(w),
            Err(Error::BudgetExceeded(_)) => None,
            Err(e) => return Err(e),
        };
        let verdict = judge(code.as_ref(), &x, &y, y2.as_ref(), cfg, decoder_seed)?;
        transcript.push(Exchange { message: x.clone(), codeword: y.clone() });
        rounds.push(GameRound {
            round,
            message: x,
            codeword: y,
            corrupted: y2,
            adversary_seed,
            decoder_seed,
            verdict,
            meter: meter.snapshot(),
            depth_sound: meter.depth_sound(),
        });
    }
    Ok(GameReport::new(
        GameKind::PrivLdc,
        scheme.id(),
        adv.id(),
        seed,
        Some(schedule),
        Some(key.fingerprint()),
        *cfg,
        rounds,
    ))
}

/// Keyless game: a fresh oracle registry, one encoding, one corruption by an
/// adversary held to `budget`. Running out of budget counts as not fooling.
pub fn c_secure_game(
    scheme: &dyn KeylessScheme,
    adv: &dyn Adversary,
    budget: CostBudget,
    x: &BitString,
    cfg: &FoolConfig,
    seed: u64,
) -> Result<GameReport> {
    cfg.validate()?;
    let mut master = ChaCha20Rng::seed_from_u64(seed);
    let mut registry_seed = [0u8; 32];
    master.fill_bytes(&mut registry_seed);
    let registry = OracleRegistry::new(scheme.lambda(), registry_seed);
    let (encoder_seed, adversary_seed, decoder_seed) = (master.next_u64(), master.next_u64(), master.next_u64());
    let y = scheme.encode(x, &registry, &mut ChaCha20Rng::seed_from_u64(encoder_seed))?;
    let view = ChannelView::new(x, &y).with_oracle(&registry);
    let mut meter = CostMeter::new(budget);
    let y2 = run_channel(adv, &view, &mut meter, &mut ChaCha20Rng::seed_from_u64(adversary_seed))?;
    let bound = BoundKeyless { scheme, registry: &registry };
    let verdict = judge(&bound, x, &y, y2.as_ref(), cfg, decoder_seed)?;
    let round = GameRound {
        round: 0,
        message: x.clone(),
        codeword: y,
        corrupted: y2,
        adversary_seed,
        decoder_seed,
        verdict,
        meter: meter.snapshot(),
        depth_sound: meter.depth_sound(),
    };
    Ok(GameReport::new(GameKind::CSecure, scheme.id(), adv.id(), seed, None, None, *cfg, vec![round]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{Identity, KeyAwareBlockAttack, RandomFlips};
    use crate::private_ldc::PrivateCodeParams;
    use rand_chacha::ChaCha8Rng;

    /// Decoder whose index `i` is right with probability `p_star[i]`.
    struct Planted {
        p_star: Vec<f64>,
    }

    impl CodeInstance for Planted {
        fn message_len(&self) -> usize {
            self.p_star.len()
        }

        fn metric(&self) -> Metric {
            Metric::Hamming
        }

        fn randomized(&self) -> bool {
            true
        }

        fn encode(&self, x: &BitString) -> Result<BitString> {
            Ok(x.clone())
        }

        fn decode_all(&self, word: &BitString, seed: u64) -> Vec<Option<bool>> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            self.p_star.iter().enumerate().map(|(i, p)| Some(word.bit(i) ^ !rng.gen_bool(*p))).collect()
        }
    }

    fn cfg(rho: Fraction, trials: usize) -> FoolConfig {
        FoolConfig::new(rho, 0.9, trials, 0.95).unwrap()
    }

    #[test]
    fn planted_intervals_cover_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut covered = 0;
        let runs = 100;
        for run in 0..runs {
            let p_star: Vec<f64> = (0..8).map(|_| rng.gen_range(0.5..1.0)).collect();
            let code = Planted { p_star: p_star.clone() };
            let x: BitString = (0..8).map(|_| rng.gen()).collect();
            let profile = success_profile(&code, &x, &x, 200, 0.95, run).unwrap();
            if profile.iter().zip(&p_star).all(|(q, p)| q.lower <= *p && *p <= q.upper) {
                covered += 1;
            }
        }
        assert!(covered >= 95, "{covered}/{runs}");
    }

    #[test]
    fn planted_verdicts() {
        let x = BitString::zeros(4);
        let rho = Fraction::new(1, 4);
        let bad = Planted { p_star: vec![1.0, 1.0, 0.5, 1.0] };
        let v = estimate_fool(&bad, &x, &x, &x, &cfg(rho, 400), 1).unwrap();
        assert_eq!(v.fooled, Fooled::Yes);
        assert_eq!(v.worst_index, Some(2));
        let good = Planted { p_star: vec![1.0; 4] };
        assert_eq!(estimate_fool(&good, &x, &x, &x, &cfg(rho, 400), 1).unwrap().fooled, Fooled::No);
        let edge = Planted { p_star: vec![0.9; 4] };
        assert_eq!(estimate_fool(&edge, &x, &x, &x, &cfg(rho, 100), 1).unwrap().fooled, Fooled::Inconclusive);
        // too far away: never fooled regardless of decoding
        let far: BitString = "1100".parse().unwrap();
        let v = estimate_fool(&bad, &x, &x, &far, &cfg(rho, 100), 1).unwrap();
        assert!(!v.distance_ok && v.fooled == Fooled::No);
        assert!(FoolConfig::new(rho, 0.9, 99, 0.95).is_err());
    }

    #[test]
    fn or_semantics_over_synthetic_transcripts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = cfg(Fraction::new(1, 10), 100);
        for _ in 0..100 {
            let rounds: Vec<GameRound> = (0..rng.gen_range(1..=16))
                .map(|round| {
                    let fooled = [Fooled::Yes, Fooled::No, Fooled::Inconclusive][rng.gen_range(0..3)];
                    GameRound {
                        round,
                        message: BitString::zeros(1),
                        codeword: BitString::zeros(1),
                        corrupted: None,
                        adversary_seed: 0,
                        decoder_seed: 0,
                        verdict: FoolVerdict { fooled, ..FoolVerdict::not_fooled(100) },
                        meter: CostMeter::unlimited().snapshot(),
                        depth_sound: true,
                    }
                })
                .collect();
            let any = rounds.iter().any(|r| r.verdict.fooled == Fooled::Yes);
            let report = GameReport::new(GameKind::PrivLdc, "s".into(), "a".into(), 0, None, None, c, rounds);
            assert_eq!(report.win, any);
        }
    }

    fn private_scheme(k: usize) -> (PrivateScheme, Fraction) {
        let params = PrivateCodeParams::<f64>::new(k, 64).unwrap();
        let rho = Fraction::new(params.layout.radius_bits() as u64, 4 * params.layout.ell as u64);
        (PrivateScheme { layout: params.layout, lambda: 64 }, rho)
    }

    #[test]
    fn one_time_game_outcomes() {
        // a block attack within rho needs at least five blocks
        let (scheme, rho) = private_scheme(1024);
        let c = cfg(rho, 100);
        let rate = *rho.numer() as f64 / *rho.denom() as f64;
        let x: BitString = (0..1024).map(|i| i % 3 == 0).collect();
        let honest = one_time_game(&scheme, &Identity, &x, &c, 1).unwrap();
        assert!(!honest.win);
        assert_eq!(honest.rounds[0].verdict.distance, Some(0.0));
        let flips = one_time_game(&scheme, &RandomFlips { rate }, &x, &c, 2).unwrap();
        assert!(flips.rounds[0].verdict.distance_ok && !flips.win);
        let attack = one_time_game(&scheme, &KeyAwareBlockAttack { rate, layout: scheme.layout, block: 0 }, &x, &c, 3).unwrap();
        assert!(attack.win);
        assert_eq!(attack.rounds[0].verdict.worst_index.map(|i| i < 192), Some(true));
    }

    #[test]
    fn key_reuse_is_exploited_and_per_round_keys_are_not() {
        let (scheme, rho) = private_scheme(1024);
        let c = cfg(rho, 100);
        let adv = TranscriptCorrelator { rate: *rho.numer() as f64 / *rho.denom() as f64 };
        let reused = priv_ldc_game(&scheme, &adv, 4, KeySchedule::OneTime, &c, 9).unwrap();
        assert!(reused.win);
        assert!(reused.rounds[..2].iter().all(|r| r.verdict.fooled == Fooled::No));
        let fresh = priv_ldc_game(&scheme, &adv, 4, KeySchedule::PerRound, &c, 9).unwrap();
        assert!(!fresh.win);
    }

    #[test]
    fn reports_replay_identically() {
        let (scheme, rho) = private_scheme(256);
        let c = cfg(rho, 100);
        let adv = RandomMessages { channel: Box::new(RandomFlips { rate: 0.01 }) };
        let a = priv_ldc_game(&scheme, &adv, 3, KeySchedule::PerRound, &c, 77).unwrap();
        let b = priv_ldc_game(&scheme, &adv, 3, KeySchedule::PerRound, &c, 77).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(GameReport::from_json(&a.to_json()).unwrap(), a);
        assert_eq!(a.rows().len(), 3);
    }
}
