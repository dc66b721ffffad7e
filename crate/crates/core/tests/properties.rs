use std::collections::HashSet;

use onebit::alignment::{align, violation_table};
use onebit::fuzz::{bound_fuzz, structural_failures, structural_fuzz};
use onebit::gen::{de_bruijn, pref, worst_case_word};
use onebit::general::{check_p1, derive_params, first_repeated_factor, sample_family, sync_offsets, Family};
use onebit::infinite::{build_prefix, ratio_curve, schedule};
use onebit::lz::{comp_ratio, decode, encode, parse, prepend_check, LzCode};
use onebit::Word;
use proptest::prelude::*;

fn word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0u8..2, 0..max).prop_map(Word::from_letters)
}

fn nonempty_word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0u8..2, 1..max).prop_map(Word::from_letters)
}

proptest! {
    #[test]
    fn text_and_packed_round_trip(w in word(700)) {
        prop_assert_eq!(Word::parse_text(&w.to_text()).unwrap(), w.clone());
        prop_assert_eq!(Word::from_packed_bytes(&w.to_packed_bytes()).unwrap(), w.clone());
        let json = serde_json::to_string(&w).unwrap();
        prop_assert_eq!(serde_json::from_str::<Word>(&json).unwrap(), w);
    }

    #[test]
    fn code_round_trip(w in word(1500)) {
        let code = encode(&parse(&w));
        prop_assert_eq!(decode(&code).unwrap(), w.clone());
        let json = serde_json::to_string(&code).unwrap();
        prop_assert_eq!(serde_json::from_str::<LzCode>(&json).unwrap(), code);
    }

    #[test]
    fn structural_invariants(w in word(1200)) {
        let fails = structural_failures(&w);
        prop_assert!(fails.is_empty(), "{:?}", fails);
    }

    #[test]
    fn prepending_bound(w in nonempty_word(3000), a in 0u8..2) {
        let c = prepend_check(&w, a);
        prop_assert!(c.holds(), "{:?}", c);
    }

    #[test]
    fn prefixes_parse_as_themselves(x in nonempty_word(300)) {
        let p = parse(&pref(&x));
        prop_assert_eq!(p.block_count(), x.len());
        prop_assert_eq!(p.dic_size(), x.len());
        for (b, blk) in p.blocks().iter().enumerate() {
            prop_assert_eq!(blk.len, b + 1);
            prop_assert_eq!(p.block_word(b), x.prefix(b + 1));
        }
    }

    #[test]
    fn violation_pairs_fit_in_s(x in nonempty_word(120)) {
        let w = pref(&x);
        let table = violation_table(&align(&w, 0, None).unwrap());
        prop_assert_eq!(table.s, x.len());
        prop_assert!(table.max_pair_sum() <= x.len());
        let heavy = table.counts.values().filter(|&&c| c > x.len() / 2).count();
        prop_assert!(heavy <= 1);
    }

    #[test]
    fn de_bruijn_census_is_cyclic(k in 1u32..=10, seed in any::<u64>()) {
        let x = de_bruijn(k, None, Some(seed)).unwrap();
        let v: Vec<u8> = x.iter().collect();
        let period = 1usize << k;
        for len in 1..=k as usize {
            let mut counts = std::collections::HashMap::new();
            for s in 0..period {
                *counts.entry(&v[s..s + len]).or_insert(0usize) += 1;
            }
            prop_assert_eq!(counts.len(), 1 << len);
            prop_assert!(counts.values().all(|&c| c == 1 << (k as usize - len)));
        }
    }

    #[test]
    fn prefix_requirement_leads(k in 2u32..=9, seed in any::<u64>(), p in prop::collection::vec(0u8..2, 1..3)) {
        let prefix = Word::from_letters(p);
        let x = de_bruijn(k, Some(&prefix), Some(seed)).unwrap();
        prop_assert!(prefix.is_prefix_of(&x));
    }

    #[test]
    fn curve_points_match_standalone_prefixes(w in nonempty_word(2000), stride in 1usize..200) {
        for p in ratio_curve(&w, stride) {
            let direct = comp_ratio(&w.prefix(p.n)).unwrap();
            prop_assert!((p.comp - direct).abs() < 1e-12);
        }
    }
}

#[test]
fn worst_case_word_shape() {
    for n in 1..=12u32 {
        let w = worst_case_word(n).unwrap();
        assert_eq!(w.len(), (n as usize - 1) * (1 << (n + 1)) + 2);
        let p = parse(&w);
        assert_eq!(p.block_count(), (1 << (n + 1)) - 2);
        assert!(!p.last_is_duplicate());
    }
}

#[test]
fn fuzz_reports_are_thread_count_independent() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let one = pool.install(|| bound_fuzz(200, 2000, 3));
    assert_eq!(one, bound_fuzz(200, 2000, 3));
    let one = pool.install(|| structural_fuzz(100, 500, 4));
    assert_eq!(one, structural_fuzz(100, 500, 4));
    assert!(one.failures.is_empty());
}

#[test]
fn family_sampling_is_deterministic() {
    let params = derive_params(1 << 18, 1 << 8, 4.0, false).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = pool.install(|| sample_family(&params, 11)).unwrap();
    let b = sample_family(&params, 11).unwrap();
    assert_eq!(a.words, b.words);
    assert_eq!(a.retries, b.retries);
    assert_eq!(a.q, sync_offsets(&a.words, &[]));
    assert_eq!(Family::from_text(&a.to_text()).unwrap().words, a.words);
    assert!(a.words[0].bit(0) == 1);
    assert!(a.q.iter().all(|&q| q <= params.m));
}

#[test]
fn prefix_levels_keep_factors_unique() {
    let sched = schedule(256, 0.1, 2).unwrap();
    let prefix = build_prefix(&sched, 400_000, 5).unwrap();
    let cw = &prefix.word;
    assert_eq!(cw.word.len(), 400_000);
    assert!(prefix.levels.len() == 2, "{:?}", prefix.levels);
    for lv in &sched.levels {
        let upto: Vec<Word> = cw
            .chains
            .iter()
            .zip(&prefix.chain_levels)
            .filter(|(_, &l)| l <= lv.index)
            .map(|(c, _)| cw.sources[c.source].clone())
            .collect();
        assert_eq!(first_repeated_factor(&upto, lv.m), None, "level {}", lv.index);
    }
    for (c, &l) in cw.chains.iter().zip(&prefix.chain_levels) {
        let lv = &sched.levels[l];
        let x = &cw.sources[c.source];
        assert_eq!(x.len(), lv.l);
        assert!(check_p1(x, lv.k, lv.l));
        assert!(c.q <= lv.m);
    }
    let distinct: HashSet<&Word> = cw.sources.iter().collect();
    assert_eq!(distinct.len(), cw.sources.len());
}
