//! External adversaries speaking length-prefixed binary frames on stdin/stdout.
//!
//! A frame is the bit count as a little-endian `u32` followed by the bits packed
//! MSB-first. The process receives one frame holding the codeword and must
//! answer with one frame holding the corrupted word.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use rand::RngCore;

use super::{Adversary, ChannelView, CostMeter};
use crate::bits::BitString;
use crate::error::{Error, Result};

pub fn write_frame(mut w: impl Write, word: &BitString) -> Result<()> {
    let len = u32::try_from(word.len()).map_err(|_| Error::Format("word too long for a frame".into()))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&word.to_bytes())?;
    Ok(())
}

pub fn read_frame(mut r: impl Read) -> Result<BitString> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len).map_err(|e| Error::Format(format!("missing frame header: {e}")))?;
    let bits = u32::from_le_bytes(len) as usize;
    let mut bytes = vec![0u8; bits.div_ceil(8)];
    r.read_exact(&mut bytes).map_err(|e| Error::Format(format!("truncated frame: {e}")))?;
    BitString::from_bytes(&bytes, bits)
}

/// Adversary implemented by another program; only frames are metered.
#[derive(Debug, Clone)]
pub struct SubprocessAdversary {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl SubprocessAdversary {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self { program: program.into(), args }
    }

    /// Splits on whitespace: the first word is the program, the rest its arguments.
    pub fn from_command_line(cmd: &str) -> Self {
        let mut words = cmd.split_whitespace();
        let program = words.next().unwrap_or_default();
        Self::new(program, words.map(str::to_string).collect())
    }
}

impl Adversary for SubprocessAdversary {
    fn id(&self) -> String {
        format!("subprocess:{}", self.program.display())
    }

    fn corrupt(&self, view: &ChannelView<'_>, meter: &mut CostMeter, _rng: &mut dyn RngCore) -> Result<BitString> {
        meter.charge_steps(1)?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let word = view.codeword.clone();
        let writer = std::thread::spawn(move || write_frame(&mut stdin, &word));
        let out = read_frame(child.stdout.take().expect("piped stdout"));
        writer.join().map_err(|_| Error::Format("frame writer panicked".into()))??;
        let status = child.wait()?;
        if !status.success() {
            return Err(Error::Format(format!("adversary process exited with {status}")));
        }
        meter.charge_steps(1)?;
        meter.charge_rounds(1)?;
        out
    }
}
