use std::fs::File;
use std::path::{Path, PathBuf};

use insdel_ldc::channels::{
    channel_by_id, Adversary, ChannelView, CostBudget, CostMeter, KeyAwareBlockAttack, OracleRegistry,
    ReductionAdversary,
};
use insdel_ldc::composed::{
    PrivateInsdelCode, RbHammingCode, RbInsdelCode, SafeFunctionAttack, PRIV_CODEC, P_FIN, RB_CODEC, RHO_FIN,
};
use insdel_ldc::game::{
    c_secure_game, one_time_game, priv_ldc_game, AdaptiveAdversary, ComposedScheme, FoolConfig, GameReport,
    KeyedScheme, KeylessScheme, PrivateScheme, RandomMessages, TranscriptCorrelator,
};
use insdel_ldc::insdel_compiler::{CompilerGuarantee, CompilerParams, Container, ContainerHeader};
use insdel_ldc::local_codes::{BitOracle, QueryOracle};
use insdel_ldc::metrics::{edit_raw, edit_raw_bounded};
use insdel_ldc::private_ldc::SecretKey;
use insdel_ldc::scalar::fraction_floor;
use insdel_ldc::stats::Proportion;
use insdel_ldc::{BitString, ComposedParams64, Fraction, PrivateCodeParams64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, BUILD, PRIV_HAMMING, RB_HAMMING};
use crate::error::CliError;
use crate::files::{
    read_json, read_key, read_message, sidecar_path, with_suffix, write_csv, write_json, write_key, CodeInfo,
    CorruptionInfo, OutputLock, WordSidecar,
};

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    path.as_deref().ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn seeded_or_fresh(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn private_rho(k: usize, lambda: u32) -> Result<Fraction, CliError> {
    let params = PrivateCodeParams64::new(k, lambda)?;
    Ok(Fraction::new(params.layout.radius_bits() as u64, 4 * params.layout.ell as u64))
}

fn ratio(f: Fraction) -> f64 {
    *f.numer() as f64 / *f.denom() as f64
}

fn load_or_create_key(path: &Path, cfg: &ExperimentConfig) -> Result<SecretKey, CliError> {
    if path.exists() {
        let key = read_key(path)?;
        if key.lambda() != cfg.lambda {
            return Err(CliError::Usage(format!(
                "key in {} has lambda {}, not {}",
                path.display(),
                key.lambda(),
                cfg.lambda
            )));
        }
        return Ok(key);
    }
    let key = SecretKey::gen_with(cfg.lambda, &mut seeded_or_fresh(cfg.seed))?;
    write_key(path, &key)?;
    Ok(key)
}

pub fn encode(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let input = required(&cfg.input, "input")?;
    let out = required(&cfg.out, "out")?;
    let x = read_message(input)?;
    let _lock = OutputLock::acquire(out)?;
    let mut cfg = cfg.clone();
    cfg.k = x.len();
    let (container, fingerprint) = if cfg.codec == PRIV_CODEC {
        let key = load_or_create_key(required(&cfg.key, "key")?, &cfg)?;
        let params = ComposedParams64::new(cfg.k, cfg.lambda)?;
        let word = PrivateInsdelCode::new(&params, &key).encode_fin(&x)?;
        (Container::new(&params.compiler, word)?, Some(key.fingerprint()))
    } else {
        let code = RbInsdelCode::new(cfg.k, cfg.lambda, cfg.safe_rounds)?;
        let registry = OracleRegistry::from_u64(cfg.lambda, cfg.registry_seed);
        let enc = code.encode(&x, &registry, &mut seeded_or_fresh(cfg.seed))?;
        (Container::new(&code.compiler, enc.word)?, None)
    };
    let n = container.word.len();
    container.write_to(File::create(out)?)?;
    let code = CodeInfo {
        codec: cfg.codec.clone(),
        k: cfg.k,
        lambda: cfg.lambda,
        safe_rounds: cfg.safe_rounds,
        registry_seed: cfg.registry_seed,
        n,
        key_fingerprint: fingerprint.clone(),
    };
    write_json(&sidecar_path(out), &WordSidecar { build: BUILD.into(), config: cfg.clone(), code, corruption: None })?;
    println!("codec={} k={} n={} rate={:.3}", cfg.codec, cfg.k, n, n as f64 / cfg.k as f64);
    if let Some(fp) = fingerprint {
        println!("key={fp}");
    }
    Ok(())
}

fn read_word(input: &Path) -> Result<(Container, WordSidecar), CliError> {
    let container = Container::read_from(File::open(input)?)?;
    let sidecar: WordSidecar = read_json(&sidecar_path(input))?;
    Ok((container, sidecar))
}

pub fn corrupt(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let input = required(&cfg.input, "input")?;
    let out = required(&cfg.out, "out")?;
    let (container, sidecar) = read_word(input)?;
    let rate = cfg.rate.unwrap_or(0.0);
    let seed = cfg.seed.unwrap_or(0);
    let channel = channel_by_id(&cfg.channel, rate)?;
    let _lock = OutputLock::acquire(out)?;
    let y = &container.word;
    let message = BitString::new();
    let y2 = channel.corrupt(
        &ChannelView::new(&message, y),
        &mut CostMeter::unlimited(),
        &mut ChaCha20Rng::seed_from_u64(seed),
    )?;
    // the banded distance covers every rate-bounded channel; anything else pays for the full table
    let band = ((rate * 2.0 * y.len() as f64).floor() as usize).max(y.len().abs_diff(y2.len()));
    let d = edit_raw_bounded(y, &y2, band).unwrap_or_else(|| edit_raw(y, &y2));
    let corruption = CorruptionInfo {
        channel: cfg.channel.clone(),
        rate,
        seed,
        edit_raw: d as u64,
        edit_fraction: d as f64 / (2 * y.len().max(1)) as f64,
        corrupted_len: y2.len(),
    };
    Container { header: container.header, word: y2 }.write_to(File::create(out)?)?;
    println!("channel={} edit_raw={} edit_fraction={:.6}", cfg.channel, d, corruption.edit_fraction);
    let next = WordSidecar { build: BUILD.into(), config: cfg.clone(), code: sidecar.code, corruption: Some(corruption) };
    write_json(&sidecar_path(out), &next)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct DecodedIndex {
    index: usize,
    value: Option<u8>,
    queries: u64,
}

pub fn decode(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let input = required(&cfg.input, "input")?;
    let (container, sidecar) = read_word(input)?;
    let info = &sidecar.code;
    let seed = cfg.seed.unwrap_or(0);
    let k = info.k;
    if let Some(&bad) = cfg.indices.iter().find(|&&i| i >= k) {
        return Err(CliError::Usage(format!("index {bad} out of range for a message of {k} bits")));
    }
    let indices: Vec<usize> = if cfg.indices.is_empty() { (0..k).collect() } else { cfg.indices.clone() };
    let word = &container.word;
    let mismatch = || CliError::Usage("container header does not match the recorded code parameters".into());

    let run_one: Box<dyn Fn(usize) -> (Option<bool>, u64) + Sync>;
    let ell_fin;
    if info.codec == PRIV_CODEC {
        let key = read_key(required(&cfg.key, "key")?)?;
        if info.key_fingerprint.as_deref() != Some(key.fingerprint().as_str()) || key.lambda() != info.lambda {
            return Err(CliError::Usage("key does not match the container".into()));
        }
        let params = ComposedParams64::new(k, info.lambda)?;
        if ContainerHeader::from_params(&params.compiler)? != container.header {
            return Err(mismatch());
        }
        ell_fin = params.ell_fin;
        let code = PrivateInsdelCode::new(&params, &key);
        run_one = Box::new(move |i| {
            let oracle = QueryOracle::new(word);
            let v = code.dec_fin(&oracle, i, seed).ok();
            (v, oracle.queries())
        });
    } else if info.codec == RB_CODEC {
        let code = RbInsdelCode::new(k, info.lambda, info.safe_rounds)?;
        if ContainerHeader::from_params(&code.compiler)? != container.header {
            return Err(mismatch());
        }
        ell_fin = code.ell_fin();
        let registry = OracleRegistry::from_u64(info.lambda, info.registry_seed);
        run_one = Box::new(move |i| {
            let oracle = QueryOracle::new(word);
            let v = code.decode_index(&oracle, &registry, i, seed).ok();
            (v, oracle.queries())
        });
    } else {
        return Err(CliError::Usage(format!("unknown codec {:?} in sidecar", info.codec)));
    }

    let rows: Vec<DecodedIndex> = indices
        .par_iter()
        .map(|&i| {
            let (v, queries) = run_one(i);
            DecodedIndex { index: i, value: v.map(u8::from), queries }
        })
        .collect();
    println!("index,value,queries");
    for r in &rows {
        let v = r.value.map_or("?".to_string(), |b| b.to_string());
        println!("{},{},{}", r.index, v, r.queries);
    }
    let failed = rows.iter().filter(|r| r.value.is_none()).count();
    let max_q = rows.iter().map(|r| r.queries).max().unwrap_or(0);
    eprintln!("decoded {}/{} indices; max queries {max_q} (bound {ell_fin})", rows.len() - failed, rows.len());
    if let Some(out) = &cfg.out {
        let _lock = OutputLock::acquire(out)?;
        write_csv(out, cfg, &rows)?;
    }
    if failed > 0 {
        return Err(CliError::Decode(format!("{failed} of {} indices could not be decoded", rows.len())));
    }
    Ok(())
}

/// The code under test with its default game thresholds.
enum GameCode {
    Keyed { scheme: Box<dyn KeyedScheme>, private: Option<PrivateCodeParams64> },
    Keyless { scheme: Box<dyn KeylessScheme>, hamming: Option<RbHammingCode> },
}

fn game_code(cfg: &ExperimentConfig) -> Result<(GameCode, Fraction, f64, usize), CliError> {
    let (k, lambda) = (cfg.k, cfg.lambda);
    let rho_fin = Fraction::new(RHO_FIN.0, RHO_FIN.1);
    let p_fin = P_FIN.0 as f64 / P_FIN.1 as f64;
    Ok(match cfg.codec.as_str() {
        PRIV_HAMMING => {
            let params = PrivateCodeParams64::new(k, lambda)?;
            let scheme = PrivateScheme { layout: params.layout, lambda };
            let n = params.codeword_len();
            (GameCode::Keyed { scheme: Box::new(scheme), private: Some(params) }, private_rho(k, lambda)?, params.p, n)
        }
        PRIV_CODEC => {
            let params = ComposedParams64::new(k, lambda)?;
            let scheme =
                ComposedScheme { layout: params.private.layout, compiler: params.compiler, lambda };
            (GameCode::Keyed { scheme: Box::new(scheme), private: None }, rho_fin, params.p_fin, params.n)
        }
        RB_HAMMING => {
            let code = RbHammingCode::new(k, lambda, cfg.safe_rounds)?;
            let p = PrivateCodeParams64::new(k, lambda)?.p;
            let n = code.codeword_len();
            (GameCode::Keyless { scheme: Box::new(code), hamming: Some(code) }, private_rho(k, lambda)?, p, n)
        }
        RB_CODEC => {
            let code = RbInsdelCode::new(k, lambda, cfg.safe_rounds)?;
            let n = code.compiler.compiled_len();
            (GameCode::Keyless { scheme: Box::new(code), hamming: None }, rho_fin, p_fin, n)
        }
        other => return Err(CliError::Usage(format!("unknown codec {other:?}"))),
    })
}

fn build_channel(
    cfg: &ExperimentConfig,
    code: &GameCode,
    rate: f64,
    hamming_len: usize,
    game_seed: u64,
) -> Result<Box<dyn Adversary>, CliError> {
    let block = cfg.block;
    let unsupported = || CliError::Usage(format!("channel {:?} does not apply to codec {:?}", cfg.channel, cfg.codec));
    if let Some(inner) = cfg.channel.strip_prefix("reduction:") {
        if ![PRIV_HAMMING, RB_HAMMING].contains(&cfg.codec.as_str()) {
            return Err(unsupported());
        }
        let params = CompilerParams::calibrated(hamming_len, 2)?;
        return Ok(Box::new(ReductionAdversary::new(channel_by_id(inner, rate)?, params)));
    }
    match (cfg.channel.as_str(), code) {
        ("key-aware-block", GameCode::Keyed { private: Some(params), .. }) => Ok(Box::new(KeyAwareBlockAttack {
            rate,
            layout: params.layout,
            block: block.unwrap_or(ChaCha20Rng::seed_from_u64(game_seed).gen_range(0..params.layout.blocks))
                % params.layout.blocks,
        })),
        ("safe-function-recompute", GameCode::Keyless { hamming: Some(code), .. }) => {
            Ok(Box::new(SafeFunctionAttack { code: *code, rate, block: block.unwrap_or(usize::MAX) }))
        }
        ("key-aware-block" | "safe-function-recompute" | "transcript-correlator", _) => Err(unsupported()),
        (id, _) => Ok(channel_by_id(id, rate)?),
    }
}

#[derive(Debug, Serialize)]
struct GameSummary {
    games: usize,
    wins: usize,
    win_rate: f64,
    lower: f64,
    upper: f64,
    budget_exceeded: usize,
}

#[derive(Debug, Serialize)]
struct GameOutput<'a> {
    build: &'a str,
    config: &'a ExperimentConfig,
    rho: String,
    p: f64,
    summary: &'a GameSummary,
    reports: &'a [GameReport],
}

#[derive(Debug, Serialize)]
struct GameRow {
    game: usize,
    round: usize,
    distance: Option<f64>,
    worst_index: Option<usize>,
    lower: Option<f64>,
    upper: Option<f64>,
    verdict: insdel_ldc::game::Fooled,
}

pub fn game(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let (code, default_rho, default_p, n) = game_code(cfg)?;
    let rho = cfg.rho.map(fraction_floor).unwrap_or(default_rho);
    let p = cfg.p.unwrap_or(default_p);
    let rate = cfg.rate.unwrap_or(ratio(rho));
    let fool = FoolConfig::new(rho, p, cfg.trials, cfg.confidence)?;
    let seed = cfg.seed.unwrap_or(0);
    let lock = cfg.out.as_deref().map(OutputLock::acquire).transpose()?;

    let hamming_len = match &code {
        GameCode::Keyed { private: Some(params), .. } => params.codeword_len(),
        GameCode::Keyless { hamming: Some(h), .. } => h.codeword_len(),
        _ => n,
    };
    let mut reports = Vec::with_capacity(cfg.games);
    for g in 0..cfg.games {
        let s = seed.wrapping_add(g as u64);
        let mut message_rng = ChaCha20Rng::seed_from_u64(s);
        message_rng.set_stream(1);
        let report = match &code {
            GameCode::Keyed { scheme, .. } if cfg.rounds == 1 => {
                let adv = build_channel(cfg, &code, rate, hamming_len, s)?;
                let x: BitString = (0..scheme.message_len()).map(|_| message_rng.gen()).collect();
                one_time_game(scheme.as_ref(), adv.as_ref(), &x, &fool, s)?
            }
            GameCode::Keyed { scheme, .. } => {
                let adv: Box<dyn AdaptiveAdversary> = if cfg.channel == "transcript-correlator" {
                    Box::new(TranscriptCorrelator { rate })
                } else {
                    Box::new(RandomMessages { channel: build_channel(cfg, &code, rate, hamming_len, s)? })
                };
                priv_ldc_game(scheme.as_ref(), adv.as_ref(), cfg.rounds, cfg.schedule, &fool, s)?
            }
            GameCode::Keyless { scheme, .. } => {
                let adv = build_channel(cfg, &code, rate, hamming_len, s)?;
                let budget = cfg.budget_rounds.map(CostBudget::with_rounds).unwrap_or_default();
                let x: BitString = (0..scheme.message_len()).map(|_| message_rng.gen()).collect();
                c_secure_game(scheme.as_ref(), adv.as_ref(), budget, &x, &fool, s)?
            }
        };
        reports.push(report);
    }
    let wins = reports.iter().filter(|r| r.win).count();
    let exceeded = reports.iter().filter(|r| r.rounds.iter().any(|x| x.verdict.budget_exceeded)).count();
    let q = Proportion::new(wins as u64, reports.len() as u64, cfg.confidence);
    let summary = GameSummary {
        games: reports.len(),
        wins,
        win_rate: q.hat,
        lower: q.lower,
        upper: q.upper,
        budget_exceeded: exceeded,
    };
    println!(
        "codec={} channel={} games={} wins={} win_rate={:.4} [{:.4}, {:.4}] budget_exceeded={}",
        cfg.codec, cfg.channel, summary.games, wins, q.hat, q.lower, q.upper, exceeded
    );
    if let Some(out) = &cfg.out {
        let output = GameOutput {
            build: BUILD,
            config: cfg,
            rho: format!("{}/{}", rho.numer(), rho.denom()),
            p,
            summary: &summary,
            reports: &reports,
        };
        write_json(&with_suffix(out, ".json"), &output)?;
        let rows: Vec<GameRow> = reports
            .iter()
            .enumerate()
            .flat_map(|(g, r)| {
                r.rows().into_iter().map(move |row| GameRow {
                    game: g,
                    round: row.round,
                    distance: row.distance,
                    worst_index: row.worst_index,
                    lower: row.lower,
                    upper: row.upper,
                    verdict: row.verdict,
                })
            })
            .collect();
        write_csv(&with_suffix(out, ".csv"), cfg, &rows)?;
    }
    drop(lock);
    if exceeded > 0 {
        return Err(CliError::Budget(format!("the adversary ran out of budget in {exceeded} game(s)")));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CalibrationRow {
    rate: f64,
    theta1_hat: f64,
    theta1_lower: f64,
    theta1_upper: f64,
    theta2_hat: f64,
    theta2_lower: f64,
    theta2_upper: f64,
    trials: usize,
}

#[derive(Debug, Serialize)]
struct CalibrationOutput<'a> {
    build: &'a str,
    config: &'a ExperimentConfig,
    params: &'a CompilerParams,
    rho: String,
    points: &'a [CompilerGuarantee<f64>],
    /// Largest swept rate whose measured failure frequency is at most 1%.
    rho_fin: Option<f64>,
    guarantee: Option<&'a CompilerGuarantee<f64>>,
}

/// Failure frequency tolerated at the calibrated rate.
const CALIBRATION_FAILURE: f64 = 0.01;

pub fn calibrate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let params = CompilerParams::calibrated(cfg.k, 2)?;
    let rho = cfg.rho.map(fraction_floor).map_or_else(|| private_rho(cfg.k, cfg.lambda), Ok)?;
    let seed = cfg.seed.unwrap_or(0);
    let lock = cfg.out.as_deref().map(OutputLock::acquire).transpose()?;
    let mut points = Vec::with_capacity(cfg.rates.len());
    for &rate in &cfg.rates {
        let channel = channel_by_id(&cfg.channel, rate)?;
        points.push(CompilerGuarantee::measure(&params, channel.as_ref(), rate, rho, cfg.trials, cfg.confidence, seed)?);
    }
    let chosen = points
        .iter()
        .filter(|g| g.theta2_hat <= CALIBRATION_FAILURE)
        .max_by(|a, b| a.channel_rate.total_cmp(&b.channel_rate));
    println!("rate,theta1_hat,theta2_hat,theta2_lower,theta2_upper");
    for g in &points {
        println!(
            "{},{:.4},{:.4},{:.4},{:.4}",
            g.channel_rate, g.theta1_hat, g.theta2_hat, g.theta2_interval.0, g.theta2_interval.1
        );
    }
    match chosen {
        Some(g) => println!("rho_fin={} (n={}, rho={})", g.channel_rate, params.compiled_len(), rho),
        None => println!("no swept rate keeps the failure frequency at or below {CALIBRATION_FAILURE}"),
    }
    if let Some(out) = &cfg.out {
        let output = CalibrationOutput {
            build: BUILD,
            config: cfg,
            params: &params,
            rho: format!("{}/{}", rho.numer(), rho.denom()),
            points: &points,
            rho_fin: chosen.map(|g| g.channel_rate),
            guarantee: chosen,
        };
        write_json(&with_suffix(out, ".json"), &output)?;
        let rows: Vec<CalibrationRow> = points
            .iter()
            .map(|g| CalibrationRow {
                rate: g.channel_rate,
                theta1_hat: g.theta1_hat,
                theta1_lower: g.theta1_interval.0,
                theta1_upper: g.theta1_interval.1,
                theta2_hat: g.theta2_hat,
                theta2_lower: g.theta2_interval.0,
                theta2_upper: g.theta2_interval.1,
                trials: g.trials,
            })
            .collect();
        write_csv(&with_suffix(out, ".csv"), cfg, &rows)?;
    }
    drop(lock);
    Ok(())
}
