mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stmram::memory::{ApproxWeightStore, FixedPointFormat, ProgrammingProfile, SamplerKind};

#[test]
fn fast_sampler_matches_naive() {
    for ber in [1e-4, 1e-2, 0.5, 0.9] {
        let bers = [ber; 16];
        let p = common::sampler_equivalence_p(&bers, 1_000_000, 11);
        assert!(p > 0.001, "BER {ber}: p = {p}");
    }
}

#[test]
fn fast_sampler_matches_naive_on_two_tier_profiles() {
    let mut bers = [1e-3; 16];
    bers[..10].fill(0.5);
    bers[15] = 1e-6;
    let p = common::sampler_equivalence_p(&bers, 1_000_000, 21);
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn single_bit_failure_fraction() {
    let n = 1_000_000u64;
    let profile = ProgrammingProfile::constant(0.25, 0.01).unwrap();
    let mut store = ApproxWeightStore::new(vec![0], FixedPointFormat::default(), profile, 3);
    let mut failures = 0u64;
    for _ in 0..n {
        store.restore_snapshot(&snapshot_of(&[0])[..]).unwrap();
        store.program_word(0, 1).unwrap();
        failures += u64::from(store.read(0).unwrap() == 0);
    }
    let p = 0.25;
    let bound = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
    assert!((failures as f64 / n as f64 - p).abs() <= bound, "{failures}");
}

fn snapshot_of(words: &[u16]) -> Vec<u8> {
    let s = ApproxWeightStore::new(
        words.to_vec(),
        FixedPointFormat::default(),
        ProgrammingProfile::constant(0.0, 0.0).unwrap(),
        0,
    );
    let mut bytes = Vec::new();
    s.write_snapshot(&mut bytes).unwrap();
    bytes
}

fn arb_bers() -> impl Strategy<Value = [f64; 16]> {
    prop::array::uniform16(prop_oneof![Just(0.0), Just(1.0), 1e-6f64..1e-3, 1e-3f64..1.0])
}

proptest! {
    #[test]
    fn failed_bits_keep_their_previous_value(
        bers in arb_bers(),
        initial in prop::collection::vec(any::<u16>(), 1..20),
        writes in prop::collection::vec((any::<prop::sample::Index>(), any::<u16>()), 1..200),
        seed in any::<u64>(),
        naive in any::<bool>(),
    ) {
        let profile = ProgrammingProfile::custom(bers, 0.02).unwrap();
        let kind = if naive { SamplerKind::Naive } else { SamplerKind::Fast };
        let mut store = ApproxWeightStore::new(initial.clone(), FixedPointFormat::default(), profile, seed).with_sampler(kind);
        for (idx, target) in writes {
            let i = idx.index(initial.len());
            let before = store.read(i).unwrap();
            store.program_word(i, target).unwrap();
            let after = store.read(i).unwrap();
            // every bit is either the old or the target value
            prop_assert_eq!(!(after ^ before) | !(after ^ target), 0xFFFF);
            // certain bits behave deterministically
            for b in 0..16 {
                let bit = 1u16 << b;
                if bers[b] == 0.0 { prop_assert_eq!(after & bit, target & bit); }
                if bers[b] == 1.0 { prop_assert_eq!(after & bit, before & bit); }
            }
        }
    }

    #[test]
    fn ledger_is_exact(
        energy in 1e-4f64..1.0,
        singles in 0usize..300,
        bulks in 0usize..30,
        n in 1usize..50,
    ) {
        let profile = ProgrammingProfile::constant(0.3, energy).unwrap();
        let word = profile.word_energy_pj();
        let mut store = ApproxWeightStore::new(vec![0; n], FixedPointFormat::default(), profile, 5);
        for i in 0..singles {
            store.program_word(i % n, i as u16).unwrap();
        }
        for j in 0..bulks {
            store.program_all(&vec![j as u16; n]).unwrap();
        }
        let writes = (singles + bulks * n) as u64;
        prop_assert_eq!(store.ledger().words_written(), writes);
        let want = word * writes as f64;
        prop_assert!((store.ledger().total_pj() - want).abs() <= 1e-13 * want.max(1e-300));
    }

    #[test]
    fn identical_seeds_give_identical_stores(seed in any::<u64>(), ber in 1e-5f64..0.9) {
        let run = || {
            let profile = ProgrammingProfile::constant(ber, 0.01).unwrap();
            let mut s = ApproxWeightStore::new(vec![0; 64], FixedPointFormat::default(), profile, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            for _ in 0..50 {
                let targets: Vec<u16> = (0..64).map(|_| rng.random()).collect();
                s.program_all(&targets).unwrap();
            }
            let mut snap = Vec::new();
            s.write_snapshot(&mut snap).unwrap();
            (snap, *s.ledger())
        };
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn error_free_and_always_failing_profiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let initial: Vec<u16> = (0..100).map(|_| rng.random()).collect();
    let targets: Vec<u16> = (0..100).map(|_| rng.random()).collect();
    let mut exact = ApproxWeightStore::new(initial.clone(), FixedPointFormat::default(), ProgrammingProfile::constant(0.0, 0.1).unwrap(), 1);
    exact.program_all(&targets).unwrap();
    assert_eq!(exact.words(), &targets[..]);
    let mut frozen = ApproxWeightStore::new(initial.clone(), FixedPointFormat::default(), ProgrammingProfile::constant(1.0, 0.1).unwrap(), 1);
    for _ in 0..10 {
        frozen.program_all(&targets).unwrap();
    }
    assert_eq!(frozen.words(), &initial[..]);
}
