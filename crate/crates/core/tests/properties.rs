use insdel_ldc::channels::{
    channel_by_id, corrupt_checked, ChannelView, CostBudget, CostMeter, MeteredOracle, OracleRegistry, CHANNEL_IDS,
};
use insdel_ldc::game::{Fooled, FoolConfig, FoolVerdict, GameKind, GameReport, GameRound};
use insdel_ldc::insdel_compiler::{compile_bits, recover_all, CompilerParams, Container};
use insdel_ldc::local_codes::{hadamard_encode, BitOracle, Hadamard, LocalDecoder, QueryOracle};
use insdel_ldc::metrics::{edit_fractional, edit_raw, edit_raw_bounded, hamming_bits};
use insdel_ldc::private_ldc::{BlockLayout, KeyedPrivateCode, SecretKey};
use insdel_ldc::stats::Proportion;
use insdel_ldc::{BitString, Fraction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn bits(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(|v| BitString::from_bools(&v))
}

fn nonempty_bits(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 1..=max).prop_map(|v| BitString::from_bools(&v))
}

proptest! {
    #[test]
    fn edit_distance_is_symmetric(x in bits(40), y in bits(40)) {
        prop_assert_eq!(edit_raw(&x, &y), edit_raw(&y, &x));
    }

    #[test]
    fn edit_distance_obeys_the_triangle_inequality(x in bits(32), y in bits(32), z in bits(32)) {
        prop_assert!(edit_raw(&x, &z) <= edit_raw(&x, &y) + edit_raw(&y, &z));
    }

    #[test]
    fn edit_distance_has_length_parity(x in bits(40), y in bits(40)) {
        let d = edit_raw(&x, &y);
        prop_assert_eq!((x.len() + y.len() - d) % 2, 0);
        prop_assert!(d >= x.len().abs_diff(y.len()));
        prop_assert!(d <= x.len() + y.len());
    }

    #[test]
    fn fractional_edit_never_exceeds_hamming(v in prop::collection::vec(any::<(bool, bool)>(), 1..64)) {
        let x = BitString::from_bools(&v.iter().map(|p| p.0).collect::<Vec<_>>());
        let y = BitString::from_bools(&v.iter().map(|p| p.1).collect::<Vec<_>>());
        prop_assert!(edit_fractional(&x, &y).unwrap() <= hamming_bits(&x, &y).unwrap());
    }

    #[test]
    fn banded_edit_distance_agrees_inside_its_band(x in bits(60), y in bits(60), band in 0usize..40) {
        let d = edit_raw(&x, &y);
        match edit_raw_bounded(&x, &y, band) {
            Some(b) => prop_assert_eq!(b, d),
            None => prop_assert!(d > band),
        }
    }

    #[test]
    fn bytes_round_trip(x in bits(200)) {
        prop_assert_eq!(BitString::from_bytes(&x.to_bytes(), x.len()).unwrap(), x);
    }

    #[test]
    fn hadamard_decoding_spends_exactly_its_locality(k in 1usize..=10, msg in any::<u16>(), i in 0usize..10, seed in any::<u64>()) {
        let i = i % k;
        let x = BitString::from_uint(msg as u64 & ((1 << k) - 1), k);
        let y = hadamard_encode(&x).unwrap();
        let code = Hadamard::new(k).unwrap();
        let oracle = QueryOracle::new(&y);
        let got = code.local_decode(&oracle, i, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(got, x.bit(i));
        prop_assert_eq!(oracle.queries(), code.locality() as u64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn private_code_round_trips_with_exact_locality(
        k in 1usize..=400,
        key_seed in any::<u64>(),
        msg_seed in any::<u64>(),
    ) {
        let key = SecretKey::gen_with(64, &mut ChaCha20Rng::seed_from_u64(key_seed)).unwrap();
        let layout = BlockLayout::new(k, 192).unwrap();
        let code = KeyedPrivateCode::new(layout, &key);
        let mut rng = ChaCha20Rng::seed_from_u64(msg_seed);
        let x: BitString = (0..k).map(|_| rand::Rng::gen::<bool>(&mut rng)).collect();
        let y = code.encode(&x).unwrap();
        prop_assert_eq!(y.len(), code.codeword_len());
        let oracle = QueryOracle::new(&y);
        for i in 0..k {
            let before = oracle.queries();
            prop_assert_eq!(code.decode_index(&oracle, i).unwrap(), x.bit(i));
            prop_assert_eq!(oracle.queries() - before, layout.ell as u64);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compiling_is_deterministic_and_recoverable(c in nonempty_bits(300), seed in any::<u64>()) {
        let params = CompilerParams::calibrated(c.len(), 2).unwrap();
        let y = compile_bits(&c, &params).unwrap();
        prop_assert_eq!(y.len(), params.compiled_len());
        prop_assert_eq!(&compile_bits(&c, &params).unwrap(), &y);
        let (back, _) = recover_all(&QueryOracle::new(&y), &params, seed);
        prop_assert_eq!(back, c);
    }

    #[test]
    fn containers_round_trip(c in nonempty_bits(300), tail in bits(40)) {
        let params = CompilerParams::calibrated(c.len(), 2).unwrap();
        // a corrupted word may be longer or shorter than the compiled one
        let mut word = compile_bits(&c, &params).unwrap();
        word.extend_from(&tail);
        let container = Container::new(&params, word).unwrap();
        let back = Container::from_bytes(&container.to_bytes()).unwrap();
        prop_assert_eq!(back.header, container.header);
        prop_assert_eq!(back.word, container.word);
    }

    #[test]
    fn channels_stay_within_their_advertised_distance(
        word in nonempty_bits(600),
        channel in 0usize..CHANNEL_IDS.len(),
        rate in 0.0f64..0.05,
        seed in any::<u64>(),
    ) {
        let adv = channel_by_id(CHANNEL_IDS[channel], rate).unwrap();
        let msg = BitString::new();
        let mut meter = CostMeter::unlimited();
        let out = corrupt_checked(adv.as_ref(), &ChannelView::new(&msg, &word), &mut meter, &mut ChaCha20Rng::seed_from_u64(seed));
        prop_assert!(out.is_ok(), "{:?}", out.err());
        prop_assert!(meter.steps >= 1);
    }

    #[test]
    fn meters_are_monotone_and_enforce_their_budget(charges in prop::collection::vec((0u8..4, 0u64..5), 1..40), limit in 1u64..20) {
        let mut meter = CostMeter::new(CostBudget { max_steps: limit, ..CostBudget::unlimited() });
        let mut last = meter.snapshot();
        let mut failed = false;
        for (line, n) in charges {
            let r = match line {
                0 => meter.charge_steps(n),
                1 => meter.charge_rounds(n),
                2 => meter.charge_queries(n),
                _ => meter.hold_space(n),
            };
            failed |= r.is_err();
            let now = meter.snapshot();
            prop_assert!(now.steps >= last.steps && now.parallel_rounds >= last.parallel_rounds);
            prop_assert!(now.oracle_queries >= last.oracle_queries && now.space_units >= last.space_units);
            last = now;
        }
        prop_assert_eq!(failed, meter.steps > limit);
        if failed {
            prop_assert!(meter.charge_steps(0).is_err());
        }
    }

    #[test]
    fn oracle_depth_tracks_chain_length(chain in 1u32..12, seed in any::<u64>(), input in prop::collection::vec(any::<u8>(), 0..16)) {
        let registry = OracleRegistry::from_u64(64, seed);
        let mut meter = CostMeter::unlimited();
        let mut oracle = MeteredOracle::new(&registry, &mut meter);
        prop_assert_eq!(registry.depth(&input), 0);
        let mut digest = input.clone();
        for step in 1..=chain {
            let next = oracle.query_batch(&[&[digest.as_slice()]]).unwrap().remove(0);
            digest = next.as_bytes().to_vec();
            prop_assert_eq!(registry.depth(&digest), step);
        }
        prop_assert!(oracle.depth_sound());
        prop_assert_eq!(oracle.meter().parallel_rounds, chain as u64);
        prop_assert_eq!(registry.query(&[input.as_slice()]), registry.query(&[input.as_slice()]));
    }

    #[test]
    fn win_is_the_or_of_round_verdicts(verdicts in prop::collection::vec(0u8..3, 1..20)) {
        let cfg = FoolConfig::new(Fraction::new(1, 100), 0.9, 100, 0.95).unwrap();
        let rounds: Vec<GameRound> = verdicts
            .iter()
            .enumerate()
            .map(|(r, v)| {
                let fooled = [Fooled::No, Fooled::Yes, Fooled::Inconclusive][*v as usize];
                GameRound {
                    round: r,
                    message: BitString::new(),
                    codeword: BitString::new(),
                    corrupted: None,
                    adversary_seed: 0,
                    decoder_seed: 0,
                    verdict: FoolVerdict {
                        fooled,
                        distance: None,
                        distance_ok: fooled != Fooled::No,
                        worst_index: None,
                        worst: None,
                        trials: 100,
                        budget_exceeded: false,
                    },
                    meter: CostMeter::unlimited().snapshot(),
                    depth_sound: true,
                }
            })
            .collect();
        let report = GameReport::new(GameKind::PrivLdc, "s".into(), "a".into(), 0, None, None, cfg, rounds);
        prop_assert_eq!(report.win, verdicts.contains(&1));
        prop_assert_eq!(report.rounds.len(), verdicts.len());
    }

    #[test]
    fn confidence_intervals_contain_the_estimate(trials in 1u64..500, frac in 0.0f64..=1.0, confidence in 0.5f64..0.999) {
        let successes = (frac * trials as f64).round() as u64;
        let q = Proportion::new(successes, trials, confidence);
        prop_assert!(0.0 <= q.lower && q.lower <= q.hat && q.hat <= q.upper && q.upper <= 1.0);
        let wider = Proportion::new(successes, trials, (confidence + 1.0) / 2.0);
        prop_assert!(wider.lower <= q.lower + 1e-12 && wider.upper + 1e-12 >= q.upper);
    }
}

#[test]
fn hadamard_decoding_is_exact_on_clean_words_for_every_random_choice() {
    for k in 1..=6 {
        let code = Hadamard::new(k).unwrap();
        for m in 0..(1u64 << k) {
            let x = BitString::from_uint(m, k);
            let y = hadamard_encode(&x).unwrap();
            let oracle = QueryOracle::new(&y);
            for i in 0..k {
                for a in 0..code.codeword_len() as u64 {
                    assert_eq!(code.decode_with(&oracle, i, a).unwrap(), x.bit(i));
                }
            }
        }
    }
}

#[test]
fn hadamard_encoding_is_injective() {
    for k in 1..=10 {
        let mut seen = std::collections::HashSet::new();
        for m in 0..(1u64 << k) {
            assert!(seen.insert(hadamard_encode(&BitString::from_uint(m, k)).unwrap().to_bytes()));
        }
    }
}

#[test]
fn block_positions_look_uniform_without_the_key() {
    // a scanner guessing that block 0 sits in the first ell positions should hit at chance rate
    let layout = BlockLayout::new(1024, 192).unwrap();
    let (ell, n) = (layout.ell as f64, layout.codeword_len() as f64);
    let keys = 200;
    let mut hits = 0usize;
    for seed in 0..keys {
        let key = SecretKey::gen_with(64, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        let code = KeyedPrivateCode::new(layout, &key);
        hits += code.block_positions(0).iter().filter(|&&p| (p as usize) < layout.ell).count();
    }
    let draws = keys as f64 * ell;
    let rate = ell / n;
    let sigma = (rate * (1.0 - rate) / draws).sqrt();
    let observed = hits as f64 / draws;
    assert!(observed <= rate + 3.0 * sigma, "hit rate {observed} vs chance {rate}");
    assert!(observed >= rate - 3.0 * sigma, "hit rate {observed} vs chance {rate}");
}
