use std::path::PathBuf;

use insdel_ldc::channels::CHANNEL_IDS;
use insdel_ldc::composed::{DEFAULT_SAFE_ROUNDS, PRIV_CODEC, RB_CODEC};
use insdel_ldc::game::{KeySchedule, MAX_ROUNDS, MIN_TRIALS};
use insdel_ldc::private_ldc::MIN_LAMBDA;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const BUILD: &str = env!("IDLC_BUILD");

/// Hamming-layer codecs, usable in games only.
pub const PRIV_HAMMING: &str = "priv-hamming";
pub const RB_HAMMING: &str = "rb-hamming";
pub const CODECS: &[&str] = &[PRIV_CODEC, RB_CODEC, PRIV_HAMMING, RB_HAMMING];

/// Adversaries beyond the keyless channels.
pub const SPECIAL_CHANNELS: &[&str] = &["key-aware-block", "safe-function-recompute", "transcript-correlator"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    #[default]
    Encode,
    Corrupt,
    Decode,
    Game,
    Calibrate,
}

/// Everything that determines a run. Written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub codec: String,
    pub k: usize,
    pub lambda: u32,
    pub safe_rounds: u32,
    /// Seed of the public random oracle shared by keyless encoders and decoders.
    pub registry_seed: u64,
    pub channel: String,
    pub rate: Option<f64>,
    pub rates: Vec<f64>,
    pub rho: Option<f64>,
    pub p: Option<f64>,
    pub rounds: usize,
    pub games: usize,
    pub schedule: KeySchedule,
    pub budget_rounds: Option<u64>,
    pub block: Option<usize>,
    pub trials: usize,
    pub confidence: f64,
    pub seed: Option<u64>,
    pub indices: Vec<usize>,
    pub input: Option<PathBuf>,
    pub key: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: Command::Encode,
            codec: PRIV_CODEC.to_string(),
            k: 1024,
            lambda: 64,
            safe_rounds: DEFAULT_SAFE_ROUNDS,
            registry_seed: 0,
            channel: "identity".to_string(),
            rate: None,
            rates: Vec::new(),
            rho: None,
            p: None,
            rounds: 1,
            games: 1,
            schedule: KeySchedule::PerRound,
            budget_rounds: None,
            block: None,
            trials: MIN_TRIALS,
            confidence: 0.95,
            seed: None,
            indices: Vec::new(),
            input: None,
            key: None,
            out: None,
        }
    }
}

fn known_channel(id: &str) -> bool {
    CHANNEL_IDS.contains(&id)
        || SPECIAL_CHANNELS.contains(&id)
        || id.strip_prefix("subprocess:").is_some_and(|c| !c.trim().is_empty())
        || id.strip_prefix("reduction:").is_some_and(|inner| CHANNEL_IDS.contains(&inner))
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed config: {e}")))
    }

    /// Checks every field the command uses and lists all offending ones.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut bad: Vec<String> = Vec::new();
        let mut flag = |field: &str, why: String| bad.push(format!("{field}: {why}"));
        if self.lambda < MIN_LAMBDA {
            flag("lambda", format!("{} below {MIN_LAMBDA}", self.lambda));
        }
        let codec_ok = match self.command {
            Command::Encode | Command::Decode => [PRIV_CODEC, RB_CODEC].contains(&self.codec.as_str()),
            Command::Game => CODECS.contains(&self.codec.as_str()),
            _ => true,
        };
        if !codec_ok {
            flag("codec", format!("unknown codec {:?}", self.codec));
        }
        if matches!(self.command, Command::Corrupt | Command::Game | Command::Calibrate) && !known_channel(&self.channel) {
            flag("channel", format!("unknown channel {:?}", self.channel));
        }
        if let Some(rate) = self.rate {
            if !unit(rate) {
                flag("rate", format!("{rate} outside [0, 1]"));
            }
        }
        if let Some(rho) = self.rho {
            if !unit(rho) {
                flag("rho", format!("{rho} outside [0, 1]"));
            }
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p <= 1.0) {
                flag("p", format!("{p} outside (0, 1]"));
            }
        }
        if self.rates.iter().any(|r| !unit(*r)) {
            flag("rates", "every rate must lie in [0, 1]".into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            flag("confidence", format!("{} outside (0, 1)", self.confidence));
        }
        match self.command {
            Command::Game => {
                if self.k == 0 {
                    flag("k", "must be positive".into());
                }
                if self.trials < MIN_TRIALS {
                    flag("trials", format!("{} below {MIN_TRIALS}", self.trials));
                }
                if self.rounds == 0 || self.rounds > MAX_ROUNDS {
                    flag("rounds", format!("{} outside 1..={MAX_ROUNDS}", self.rounds));
                }
                let keyless = [RB_CODEC, RB_HAMMING].contains(&self.codec.as_str());
                if keyless && self.rounds > 1 {
                    flag("rounds", "keyless codecs play a single round".into());
                }
                if self.games == 0 {
                    flag("games", "must be positive".into());
                }
            }
            Command::Calibrate => {
                if self.k == 0 {
                    flag("k", "must be positive".into());
                }
                if self.trials == 0 {
                    flag("trials", "must be positive".into());
                }
                if self.rates.is_empty() {
                    flag("rates", "at least one rate is needed".into());
                }
            }
            _ => {}
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!("invalid config: {}", bad.join("; "))))
        }
    }
}
