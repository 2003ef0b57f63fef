//! Composed codes: the private InsDel LDC (private code, then the compiler) and
//! the resource-bounded InsDel LDC, whose private-code key is derived from a
//! safe function of a seed carried in the clear.

use rand::{Rng, RngCore};

use crate::bits::BitString;
use crate::block_code::BlockCode;
use crate::channels::{
    block_attack_with_budget, flip_count, Adversary, ChannelView, CostMeter, DistanceBound, Metric, MeteredOracle,
    OracleRegistry, SafeFunctionSpec, safe_function_eval,
};
use crate::error::{Error, Result};
use crate::insdel_compiler::{compile_bits, CompilerParams, RecoverOracle};
use crate::local_codes::BitOracle;
use crate::private_ldc::{BlockLayout, KeyedPrivateCode, PrivateCodeParams, SecretKey};
use crate::scalar::Scalar;

/// Calibrated channel edit rate of the composed code, as a fraction.
pub const RHO_FIN: (u64, u64) = (1, 1000);
pub const P_FIN: (u64, u64) = (9, 10);
/// Sequential oracle rounds an adversary of the default class may use.
pub const DEFAULT_SAFE_ROUNDS: u32 = 64;
const KDF_LABEL: &[u8] = b"kdf";

pub const PRIV_CODEC: &str = "priv-insdel-v1";
pub const RB_CODEC: &str = "rb-insdel-v1";

/// `eps / (1 - p_fin/p - theta1/p - theta2)`.
pub fn eps_fin_of<T: Scalar>(eps: T, p: T, p_fin: T, theta1: T, theta2: T) -> Result<T> {
    if p <= T::zero() {
        return Err(Error::InvalidParams("p must be positive".into()));
    }
    let denom = T::one() - p_fin / p - theta1 / p - theta2;
    if denom <= T::zero() {
        return Err(Error::InvalidParams(format!(
            "p_fin/p + theta1/p + theta2 must stay below 1 (denominator {denom:?})"
        )));
    }
    Ok(eps / denom)
}

/// Parameters of the private InsDel code.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ComposedParams<T> {
    pub private: PrivateCodeParams<T>,
    pub compiler: CompilerParams,
    /// Compiled-word queries per decoded index, worst case.
    pub ell_fin: usize,
    pub rho_fin: T,
    pub p_fin: T,
    pub theta1: T,
    pub theta2: T,
    pub eps_fin: T,
    /// Compiled length.
    pub n: usize,
}

impl<T: Scalar> ComposedParams<T> {
    /// Default calibration with both compiler failure terms set to zero.
    pub fn new(k: usize, lambda: u32) -> Result<Self> {
        let private = PrivateCodeParams::<T>::new(k, lambda)?;
        let compiler = CompilerParams::calibrated(private.codeword_len(), 2)?;
        Self::from_parts(private, compiler)
    }

    pub fn from_parts(private: PrivateCodeParams<T>, compiler: CompilerParams) -> Result<Self> {
        if compiler.message_bits() != private.codeword_len() {
            return Err(Error::LengthMismatch { left: compiler.message_bits(), right: private.codeword_len() });
        }
        let p_fin = T::from_ratio(P_FIN.0, P_FIN.1);
        let zero = T::zero();
        Ok(Self {
            private,
            compiler,
            ell_fin: private.locality() * compiler.recover_locality(),
            rho_fin: T::from_ratio(RHO_FIN.0, RHO_FIN.1),
            p_fin,
            theta1: zero,
            theta2: zero,
            eps_fin: eps_fin_of(private.eps, private.p, p_fin, zero, zero)?,
            n: compiler.compiled_len(),
        })
    }

    /// Installs measured compiler failure rates and recomputes `eps_fin`.
    pub fn with_thetas(mut self, theta1: T, theta2: T) -> Result<Self> {
        self.eps_fin = eps_fin_of(self.private.eps, self.private.p, self.p_fin, theta1, theta2)?;
        self.theta1 = theta1;
        self.theta2 = theta2;
        Ok(self)
    }

    pub fn with_rho_fin(mut self, rho_fin: T) -> Self {
        self.rho_fin = rho_fin;
        self
    }

    pub fn k(&self) -> usize {
        self.private.layout.k
    }

    /// Compiled bits per message bit.
    pub fn rate(&self) -> T {
        T::from_ratio(self.n as u64, self.k() as u64)
    }
}

/// Key generation of the private InsDel code: that of the private code.
pub fn gen_fin(lambda: u32) -> Result<SecretKey> {
    SecretKey::gen(lambda)
}

/// The private InsDel code under one key.
#[derive(Debug, Clone)]
pub struct PrivateInsdelCode {
    private: KeyedPrivateCode,
    compiler: CompilerParams,
}

impl PrivateInsdelCode {
    pub fn new<T: Scalar>(params: &ComposedParams<T>, key: &SecretKey) -> Self {
        Self::from_layout(params.private.layout, params.compiler, key)
    }

    pub fn from_layout(layout: BlockLayout, compiler: CompilerParams, key: &SecretKey) -> Self {
        Self { private: KeyedPrivateCode::new(layout, key), compiler }
    }

    pub fn private(&self) -> &KeyedPrivateCode {
        &self.private
    }

    pub fn compiler(&self) -> &CompilerParams {
        &self.compiler
    }

    pub fn message_len(&self) -> usize {
        self.private.layout().k
    }

    pub fn ell_fin(&self) -> usize {
        self.private.layout().ell * self.compiler.recover_locality()
    }

    pub fn encode_fin(&self, x: &BitString) -> Result<BitString> {
        compile_bits(&self.private.encode(x)?, &self.compiler)
    }

    /// Decodes index `i`; every private-code read is answered by recovery from
    /// the compiled word with recovery randomness `seed`.
    pub fn dec_fin(&self, oracle: &dyn BitOracle, i: usize, seed: u64) -> Result<bool> {
        let recovered = RecoverOracle::new(self.compiler, oracle, seed);
        self.private.decode_index(&recovered, i)
    }

    /// One decoder run over every index, sharing block recoveries; `None`
    /// marks indices whose block failed. Equal to [`Self::dec_fin`] per index
    /// under the same seed.
    pub fn decode_all(&self, oracle: &dyn BitOracle, seed: u64) -> Vec<Option<bool>> {
        let recovered = RecoverOracle::new(self.compiler, oracle, seed);
        expand_blocks(&self.private, &self.private.decode_all_blocks(&recovered))
    }
}

pub(crate) fn expand_blocks(code: &KeyedPrivateCode, blocks: &[Option<BitString>]) -> Vec<Option<bool>> {
    let l = code.layout();
    (0..l.k).map(|i| blocks[i / l.m].as_ref().map(|b| b.bit(i % l.m))).collect()
}

/// Oracle costs of one honest keyless decode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RbDecodeCost {
    /// Sequential random-oracle rounds to rebuild the key.
    pub oracle_rounds: u64,
    pub oracle_queries: u64,
}

/// Keyless Hamming code: the private code under a key derived from a safe
/// function of a seed `r`, followed by `r` under the block code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RbHammingCode {
    pub layout: BlockLayout,
    pub lambda: u32,
    pub safe: SafeFunctionSpec,
}

/// An encoding together with the seed it hides.
#[derive(Debug, Clone)]
pub struct RbEncoding {
    pub word: BitString,
    pub seed: Vec<u8>,
}

impl RbHammingCode {
    pub fn new(k: usize, lambda: u32, rounds: u32) -> Result<Self> {
        let params = PrivateCodeParams::<f64>::new(k, lambda)?;
        let code = Self { layout: params.layout, lambda, safe: SafeFunctionSpec { rounds, out_bits: lambda } };
        if code.seed_bytes() * 8 > code.layout.m {
            return Err(Error::InvalidParams(format!("seed of {lambda} bits does not fit one block")));
        }
        Ok(code)
    }

    pub fn message_len(&self) -> usize {
        self.layout.k
    }

    pub fn private_len(&self) -> usize {
        self.layout.codeword_len()
    }

    pub fn codeword_len(&self) -> usize {
        self.private_len() + self.layout.ell
    }

    fn seed_bytes(&self) -> usize {
        (self.lambda as usize).div_ceil(8)
    }

    /// Private-code key for seed `r`: the safe function, then one more call for the KDF.
    pub fn derive_key(&self, r: &[u8], oracle: &mut MeteredOracle<'_>) -> Result<SecretKey> {
        let s = safe_function_eval(r, &self.safe, oracle)?;
        let material = oracle.query(&[s.as_bytes(), KDF_LABEL])?;
        SecretKey::from_material(self.lambda, material.as_bytes())
    }

    fn random_seed(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        let mut r = vec![0u8; self.seed_bytes()];
        rng.fill_bytes(&mut r);
        let spare = r.len() * 8 - self.lambda as usize;
        if spare > 0 {
            *r.last_mut().unwrap() &= 0xffu8 << spare;
        }
        r
    }

    pub fn encode(&self, x: &BitString, registry: &OracleRegistry, rng: &mut dyn RngCore) -> Result<RbEncoding> {
        let r = self.random_seed(rng);
        let mut meter = CostMeter::unlimited();
        let key = self.derive_key(&r, &mut MeteredOracle::new(registry, &mut meter))?;
        let mut word = KeyedPrivateCode::new(self.layout, &key).encode(x)?;
        let payload: Vec<bool> = (0..self.layout.m)
            .map(|t| t / 8 < r.len() && (r[t / 8] >> (7 - t % 8)) & 1 == 1)
            .collect();
        for bit in self.layout.block_code().encode(&payload) {
            word.push(bit);
        }
        Ok(RbEncoding { word, seed: r })
    }

    /// Reads and corrects the seed from the suffix.
    pub fn read_seed(&self, oracle: &dyn BitOracle) -> Result<Vec<u8>> {
        let base = self.private_len();
        let received: Vec<bool> = (0..self.layout.ell).map(|t| oracle.query(base + t)).collect();
        let payload = self
            .layout
            .block_code()
            .decode(&received)
            .ok_or(Error::DecodeFailure { block: self.layout.blocks })?;
        let mut r = vec![0u8; self.seed_bytes()];
        for (t, bit) in payload.iter().take(r.len() * 8).enumerate() {
            r[t / 8] |= (*bit as u8) << (7 - t % 8);
        }
        Ok(r)
    }

    /// Honest preamble: seed, safe function, key.
    pub fn session(&self, oracle: &dyn BitOracle, registry: &OracleRegistry) -> Result<(KeyedPrivateCode, RbDecodeCost)> {
        let r = self.read_seed(oracle)?;
        let mut meter = CostMeter::unlimited();
        let key = self.derive_key(&r, &mut MeteredOracle::new(registry, &mut meter))?;
        let cost = RbDecodeCost { oracle_rounds: meter.parallel_rounds, oracle_queries: meter.oracle_queries };
        Ok((KeyedPrivateCode::new(self.layout, &key), cost))
    }

    pub fn decode_index(&self, oracle: &dyn BitOracle, registry: &OracleRegistry, i: usize) -> Result<bool> {
        self.session(oracle, registry)?.0.decode_index(oracle, i)
    }

    pub fn decode_all(&self, oracle: &dyn BitOracle, registry: &OracleRegistry) -> Vec<Option<bool>> {
        match self.session(oracle, registry) {
            Ok((code, _)) => expand_blocks(&code, &code.decode_all_blocks(oracle)),
            Err(_) => vec![None; self.layout.k],
        }
    }
}

/// Keyless InsDel code: the compiler applied to [`RbHammingCode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RbInsdelCode {
    pub hamming: RbHammingCode,
    pub compiler: CompilerParams,
}

impl RbInsdelCode {
    pub fn new(k: usize, lambda: u32, rounds: u32) -> Result<Self> {
        let hamming = RbHammingCode::new(k, lambda, rounds)?;
        let compiler = CompilerParams::calibrated(hamming.codeword_len(), 2)?;
        Ok(Self { hamming, compiler })
    }

    pub fn message_len(&self) -> usize {
        self.hamming.message_len()
    }

    /// Worst-case compiled-word queries per index: the seed block plus the data block.
    pub fn ell_fin(&self) -> usize {
        2 * self.hamming.layout.ell * self.compiler.recover_locality()
    }

    pub fn encode(&self, x: &BitString, registry: &OracleRegistry, rng: &mut dyn RngCore) -> Result<RbEncoding> {
        let enc = self.hamming.encode(x, registry, rng)?;
        Ok(RbEncoding { word: compile_bits(&enc.word, &self.compiler)?, seed: enc.seed })
    }

    pub fn decode_index(&self, oracle: &dyn BitOracle, registry: &OracleRegistry, i: usize, seed: u64) -> Result<bool> {
        let recovered = RecoverOracle::new(self.compiler, oracle, seed);
        self.hamming.decode_index(&recovered, registry, i)
    }

    pub fn decode_all(&self, oracle: &dyn BitOracle, registry: &OracleRegistry, seed: u64) -> Vec<Option<bool>> {
        let recovered = RecoverOracle::new(self.compiler, oracle, seed);
        self.hamming.decode_all(&recovered, registry)
    }

    /// Decode of every index along with the key-rebuild cost.
    pub fn decode_all_with_cost(
        &self,
        oracle: &dyn BitOracle,
        registry: &OracleRegistry,
        seed: u64,
    ) -> Result<(Vec<Option<bool>>, RbDecodeCost)> {
        let recovered = RecoverOracle::new(self.compiler, oracle, seed);
        let (code, cost) = self.hamming.session(&recovered, registry)?;
        Ok((expand_blocks(&code, &code.decode_all_blocks(&recovered)), cost))
    }
}

/// White-box adversary against [`RbHammingCode`]: reads the seed, recomputes
/// the key through its own metered oracle access, then destroys one block.
/// With fewer than `rounds + 1` rounds available it runs out of budget.
#[derive(Debug, Clone, Copy)]
pub struct SafeFunctionAttack {
    pub code: RbHammingCode,
    pub rate: f64,
    pub block: usize,
}

impl Adversary for SafeFunctionAttack {
    fn id(&self) -> String {
        "safe-function-recompute".into()
    }

    fn bound(&self) -> Option<DistanceBound> {
        Some(DistanceBound { metric: Metric::Hamming, rate: self.rate })
    }

    fn corrupt(&self, view: &ChannelView<'_>, meter: &mut CostMeter, rng: &mut dyn RngCore) -> Result<BitString> {
        let registry = view.oracle.ok_or_else(|| Error::InvalidParams("no random oracle in view".into()))?;
        if view.codeword.len() != self.code.codeword_len() {
            return Err(Error::LengthMismatch { left: view.codeword.len(), right: self.code.codeword_len() });
        }
        meter.hold_space(2)?;
        meter.charge_steps(self.code.layout.ell as u64)?;
        let word = crate::local_codes::QueryOracle::new(view.codeword);
        let r = self.code.read_seed(&word)?;
        let key = self.code.derive_key(&r, &mut MeteredOracle::new(registry, meter))?;
        let private = KeyedPrivateCode::new(self.code.layout, &key);
        meter.charge_steps(self.code.layout.ell as u64)?;
        let block = if self.block == usize::MAX { rng.gen_range(0..self.code.layout.blocks) } else { self.block };
        block_attack_with_budget(view.codeword, &private, flip_count(view.codeword.len(), self.rate), block)
    }
}
