//! Shared random oracle with query-depth provenance, metered access, and the
//! iterated-oracle safe function.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use sha2::{Digest as _, Sha256};

use super::meter::CostMeter;
use crate::error::{Error, Result};

/// An oracle output of `lambda` bits.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Digest(Vec<u8>);

impl Digest {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest(")?;
        for b in self.0.iter().take(8) {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

#[derive(Default)]
struct Table {
    outputs: HashMap<Vec<u8>, Digest>,
    depth: HashMap<Digest, u32>,
}

/// Lazily sampled random function `{0,1}* -> {0,1}^lambda`. The same input always
/// maps to the same digest; each digest remembers how many chained calls produced it.
pub struct OracleRegistry {
    lambda: u32,
    seed: [u8; 32],
    table: Mutex<Table>,
}

impl fmt::Debug for OracleRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleRegistry").field("lambda", &self.lambda).finish_non_exhaustive()
    }
}

fn encode_parts(parts: &[&[u8]]) -> Vec<u8> {
    let mut input = Vec::new();
    for p in parts {
        input.extend_from_slice(&(p.len() as u64).to_le_bytes());
        input.extend_from_slice(p);
    }
    input
}

impl OracleRegistry {
    pub fn new(lambda: u32, seed: [u8; 32]) -> Self {
        assert!(lambda >= 1);
        Self { lambda, seed, table: Mutex::new(Table::default()) }
    }

    pub fn from_u64(lambda: u32, seed: u64) -> Self {
        let mut s = [0u8; 32];
        s[..8].copy_from_slice(&seed.to_le_bytes());
        Self::new(lambda, s)
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    fn sample(&self, input: &[u8]) -> Digest {
        let bytes = (self.lambda as usize).div_ceil(8);
        let mut out = Vec::with_capacity(bytes + 32);
        let mut counter = 0u32;
        while out.len() < bytes {
            let block = Sha256::new()
                .chain_update(self.seed)
                .chain_update(counter.to_le_bytes())
                .chain_update(input)
                .finalize();
            out.extend_from_slice(&block);
            counter += 1;
        }
        out.truncate(bytes);
        let spare = bytes * 8 - self.lambda as usize;
        if spare > 0 {
            *out.last_mut().unwrap() &= 0xffu8 << spare;
        }
        Digest(out)
    }

    /// One oracle call on the concatenation of `parts`, length-prefixed.
    /// The result's depth is one more than the deepest part that is itself a digest.
    pub fn query(&self, parts: &[&[u8]]) -> Digest {
        let input = encode_parts(parts);
        let mut table = self.table.lock().expect("oracle table poisoned");
        if let Some(d) = table.outputs.get(&input) {
            return d.clone();
        }
        let parent = parts
            .iter()
            .filter_map(|p| table.depth.get(&Digest(p.to_vec())).copied())
            .max()
            .unwrap_or(0);
        let digest = self.sample(&input);
        let entry = table.depth.entry(digest.clone()).or_insert(0);
        *entry = (*entry).max(parent + 1);
        table.outputs.insert(input, digest.clone());
        digest
    }

    /// Provenance depth of `bytes`: 0 for anything the oracle never produced.
    pub fn depth(&self, bytes: &[u8]) -> u32 {
        let table = self.table.lock().expect("oracle table poisoned");
        table.depth.get(&Digest(bytes.to_vec())).copied().unwrap_or(0)
    }

    /// Distinct inputs sampled so far.
    pub fn entries(&self) -> usize {
        self.table.lock().expect("oracle table poisoned").outputs.len()
    }
}

/// Oracle access charged to a meter: every batch is one parallel round.
pub struct MeteredOracle<'a> {
    registry: &'a OracleRegistry,
    meter: &'a mut CostMeter,
    max_depth_seen: u32,
}

impl<'a> MeteredOracle<'a> {
    pub fn new(registry: &'a OracleRegistry, meter: &'a mut CostMeter) -> Self {
        Self { registry, meter, max_depth_seen: 0 }
    }

    pub fn registry(&self) -> &OracleRegistry {
        self.registry
    }

    pub fn meter(&self) -> &CostMeter {
        self.meter
    }

    pub fn query(&mut self, parts: &[&[u8]]) -> Result<Digest> {
        Ok(self.query_batch(&[parts])?.pop().unwrap())
    }

    /// Independent calls issued together, costing a single round.
    pub fn query_batch(&mut self, batch: &[&[&[u8]]]) -> Result<Vec<Digest>> {
        self.meter.charge_rounds(1)?;
        self.meter.charge_queries(batch.len() as u64)?;
        let out: Vec<Digest> = batch.iter().map(|parts| self.registry.query(parts)).collect();
        for d in &out {
            let depth = self.registry.depth(d.as_bytes());
            self.max_depth_seen = self.max_depth_seen.max(depth);
            self.meter.note_depth(depth as u64);
        }
        Ok(out)
    }

    /// Deepest digest obtained through this handle.
    pub fn max_depth_seen(&self) -> u32 {
        self.max_depth_seen
    }

    /// Digests obtained through metered access never outrun the rounds spent.
    pub fn depth_sound(&self) -> bool {
        self.max_depth_seen as u64 <= self.meter.parallel_rounds
    }
}

/// Iterated oracle `H^(rounds+1)` with `lambda`-bit output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SafeFunctionSpec {
    /// Sequential rounds an adversary is allowed; evaluation needs one more.
    pub rounds: u32,
    pub out_bits: u32,
}

impl SafeFunctionSpec {
    pub fn chain_len(&self) -> u32 {
        self.rounds + 1
    }

    /// Residual guessing probability `q * T * 2^-lambda` for `q` total queries.
    pub fn residual(&self, queries: u64) -> f64 {
        queries as f64 * self.rounds.max(1) as f64 * (-(self.out_bits as f64)).exp2()
    }
}

const CHAIN_LABEL: &[u8] = b"chain";

/// Honest evaluation; the caller's meter records the sequential rounds.
pub fn safe_function_eval(r: &[u8], spec: &SafeFunctionSpec, oracle: &mut MeteredOracle<'_>) -> Result<Digest> {
    if oracle.registry().lambda() != spec.out_bits {
        return Err(Error::InvalidParams(format!(
            "oracle width {} differs from safe function width {}",
            oracle.registry().lambda(),
            spec.out_bits
        )));
    }
    let mut x = oracle.query(&[CHAIN_LABEL, r])?;
    for _ in 1..spec.chain_len() {
        x = oracle.query(&[CHAIN_LABEL, x.as_bytes()])?;
    }
    Ok(x)
}
