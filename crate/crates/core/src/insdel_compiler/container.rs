//! On-disk container for compiled words. The header describes the layout and
//! never passes through a channel.

use std::io::{Read, Write};

use super::CompilerParams;
use crate::bits::BitString;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"IDLC";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 + 2 + 2 + 2 + 1 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ContainerHeader {
    pub k_symbols: u32,
    pub q2: u16,
    pub b: u16,
    pub beta: u16,
    pub idx_bits: u8,
}

impl ContainerHeader {
    pub fn from_params(p: &CompilerParams) -> Result<Self> {
        let narrow = |what: &str| Error::InvalidParams(format!("{what} does not fit the container header"));
        Ok(Self {
            k_symbols: p.k_symbols.try_into().map_err(|_| narrow("K"))?,
            q2: p.q2.try_into().map_err(|_| narrow("q2"))?,
            b: p.b.try_into().map_err(|_| narrow("b"))?,
            beta: p.beta.try_into().map_err(|_| narrow("beta"))?,
            idx_bits: p.idx_bits.try_into().map_err(|_| narrow("idx_bits"))?,
        })
    }

    /// Layout parameters with the default recovery calibration.
    pub fn params(&self) -> Result<CompilerParams> {
        CompilerParams::with_idx_bits(
            self.k_symbols as usize,
            self.q2 as u32,
            self.b as usize,
            self.beta as usize,
            self.idx_bits as usize,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub header: ContainerHeader,
    pub word: BitString,
}

impl Container {
    pub fn new(params: &CompilerParams, word: BitString) -> Result<Self> {
        Ok(Self { header: ContainerHeader::from_params(params)?, word })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(HEADER_LEN + self.word.len().div_ceil(8));
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&h.k_symbols.to_le_bytes());
        out.extend_from_slice(&h.q2.to_le_bytes());
        out.extend_from_slice(&h.b.to_le_bytes());
        out.extend_from_slice(&h.beta.to_le_bytes());
        out.push(h.idx_bits);
        out.extend_from_slice(&(self.word.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.word.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(Error::Format("not an IDLC container".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Format(format!("unsupported container version {}", bytes[4])));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let header = ContainerHeader {
            k_symbols: u32::from_le_bytes(bytes[5..9].try_into().unwrap()),
            q2: u16_at(9),
            b: u16_at(11),
            beta: u16_at(13),
            idx_bits: bytes[15],
        };
        let bits = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let bits = usize::try_from(bits).map_err(|_| Error::Format("bit count too large".into()))?;
        let word = BitString::from_bytes(&bytes[HEADER_LEN..], bits)?;
        Ok(Self { header, word })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
