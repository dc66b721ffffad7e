//! Comparisons against deliberately naive reimplementations: a set-based
//! LZ'78 parser, brute-force factor counting, and the gadget loop run
//! literally with a full reparse after every insertion.

use std::collections::{BTreeMap, HashSet};

use onebit::alignment::{align, violation_table, RedClass};
use onebit::gen::{de_bruijn, kgram_counts, occurrences, pref, worst_case_word};
use onebit::lz::{parse, parse_prepended};
use onebit::toy::construct_toy_from;
use onebit::Word;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Blocks as `(start, len)`; the last one may repeat an earlier block.
fn naive_parse(w: &[u8]) -> Vec<(usize, usize)> {
    let mut seen: HashSet<&[u8]> = HashSet::new();
    let mut out = Vec::new();
    let mut start = 0;
    while start < w.len() {
        let mut len = 1;
        while start + len <= w.len() && seen.contains(&w[start..start + len]) {
            len += 1;
        }
        if start + len > w.len() {
            out.push((start, w.len() - start));
            break;
        }
        seen.insert(&w[start..start + len]);
        out.push((start, len));
        start += len;
    }
    out
}

fn naive_dic(w: &[u8]) -> usize {
    naive_parse(w)
        .iter()
        .map(|&(s, l)| &w[s..s + l])
        .collect::<HashSet<_>>()
        .len()
}

fn letters(w: &Word) -> Vec<u8> {
    w.iter().collect()
}

fn word_strategy(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 0..max)
}

proptest! {
    #[test]
    fn parser_matches_set_based_parser(v in word_strategy(400)) {
        let w = Word::from_letters(v.iter().copied());
        let p = parse(&w);
        let got: Vec<(usize, usize)> = p.blocks().iter().map(|b| (b.start, b.len)).collect();
        prop_assert_eq!(&got, &naive_parse(&v));
        prop_assert_eq!(p.dic_size(), naive_dic(&v));
    }

    #[test]
    fn prepended_parser_matches(v in word_strategy(300), a in 0u8..2) {
        let w = Word::from_letters(v.iter().copied());
        let mut aw = vec![a];
        aw.extend(&v);
        let got: Vec<(usize, usize)> = parse_prepended(a, &w).blocks().iter().map(|b| (b.start, b.len)).collect();
        prop_assert_eq!(got, naive_parse(&aw));
    }

    #[test]
    fn factor_census_matches_brute_force(v in word_strategy(200), i in 1usize..8) {
        let w = Word::from_letters(v.iter().copied());
        let p = parse(&w);
        let mut factors = HashSet::new();
        for (s, l) in naive_parse(&v) {
            for win in v[s..s + l].windows(i) {
                factors.insert(win.to_vec());
            }
        }
        prop_assert_eq!(p.factor_census(i), factors.len());
    }

    #[test]
    fn occurrences_match_brute_force(v in word_strategy(120), u in prop::collection::vec(0u8..2, 1..6)) {
        let w = Word::from_letters(v.iter().copied());
        let uw = Word::from_letters(u.iter().copied());
        let brute = v.windows(u.len()).filter(|win| *win == u.as_slice()).count();
        prop_assert_eq!(occurrences(&w, &uw).unwrap(), brute);
    }

    #[test]
    fn kgram_counts_match_brute_force(v in word_strategy(150), k in 1usize..7) {
        let w = Word::from_letters(v.iter().copied());
        let counts = kgram_counts(&w, k);
        let mut brute = vec![0u32; 1 << k];
        for win in v.windows(k) {
            let code = win.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            brute[code] += 1;
        }
        prop_assert_eq!(counts, brute);
    }
}

#[test]
fn de_bruijn_windows_are_distinct() {
    for k in 1..=12u32 {
        let x = letters(&de_bruijn(k, None, None).unwrap());
        assert_eq!(x.len(), (1 << k) + k as usize - 1);
        let distinct: HashSet<&[u8]> = x.windows(k as usize).collect();
        assert_eq!(distinct.len(), 1 << k, "k = {k}");
    }
}

#[test]
fn worst_case_word_by_counting() {
    // Every word of length 1..n appears once as a block, shortest first.
    for n in 1..=8u32 {
        let w = letters(&worst_case_word(n).unwrap());
        let blocks = naive_parse(&w);
        assert_eq!(blocks.len(), (1 << (n + 1)) - 2);
        let mut by_len: BTreeMap<usize, usize> = BTreeMap::new();
        for (_, l) in &blocks {
            *by_len.entry(*l).or_default() += 1;
        }
        for len in 1..=n as usize {
            assert_eq!(by_len[&len], 1 << len);
        }
    }
}

// The literal gadget loop.

fn toy_gadget(x: &[u8], i: usize, c: usize) -> Vec<u8> {
    let mut g = Vec::new();
    if i == 0 {
        g.push(1);
        g.extend(std::iter::repeat_n(0, c));
    } else {
        g.extend(&x[..i]);
        g.push(1 - x[i]);
        g.extend(std::iter::repeat_n(1, c));
    }
    g
}

/// Word `z_0 … z_{s-1}` and the position of each regular block `w_j`.
fn assemble(x: &[u8], gadgets: &[Option<Vec<u8>>]) -> (Vec<u8>, Vec<(usize, usize)>) {
    let mut w = Vec::new();
    let mut regular = Vec::new();
    for (j, g) in gadgets.iter().enumerate() {
        if let Some(g) = g {
            w.extend(g);
        }
        regular.push((w.len(), j + 1));
        w.extend(&x[..=j]);
    }
    (w, regular)
}

/// Whether each regular block contains a red block of `0w` at offset `i`.
fn violated(w: &[u8], regular: &[(usize, usize)], i: usize) -> Vec<bool> {
    let mut aw = vec![0];
    aw.extend(w);
    let red: HashSet<(usize, usize)> = naive_parse(&aw)
        .into_iter()
        .skip(1)
        .map(|(s, l)| (s - 1, s - 1 + l))
        .collect();
    regular
        .iter()
        .map(|&(start, len)| red.iter().any(|&(rs, re)| rs == start + i && re <= start + len))
        .collect()
}

struct LiteralOutcome {
    word: Vec<u8>,
    chosen_i: Option<usize>,
    gadgets: usize,
}

fn literal_toy(x: &[u8], window: usize) -> Option<LiteralOutcome> {
    let s = x.len();
    let mut z: Vec<Option<Vec<u8>>> = vec![None; s];
    let (w0, regular) = assemble(x, &z);
    let heavy: Vec<usize> = (0..=window)
        .filter(|&i| violated(&w0, &regular, i).iter().filter(|&&b| b).count() > s / 2)
        .collect();
    if heavy.len() > 1 {
        return None;
    }
    let Some(&i) = heavy.first() else {
        return Some(LiteralOutcome {
            word: w0,
            chosen_i: None,
            gadgets: 0,
        });
    };
    let (mut c, mut d) = (0, s / 2 + 1);
    loop {
        let (w, regular) = assemble(x, &z);
        let viol = violated(&w, &regular, i);
        let hits: Vec<usize> = (0..s).filter(|&j| viol[j]).collect();
        if hits.len() < d {
            return Some(LiteralOutcome {
                word: w,
                chosen_i: Some(i),
                gadgets: c,
            });
        }
        let j = hits[d - 1];
        z[j] = Some(toy_gadget(x, i, c));
        c += 1;
        let (w, regular) = assemble(x, &z);
        if violated(&w, &regular, i)[j] {
            d += 1;
        }
    }
}

/// Source words starting with `01` (so that gadgets are fresh blocks) drawn
/// from biased coins and noisy short periods, which violate one offset far
/// more often than de Bruijn words do.
fn adversarial_source(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let len = rng.random_range(10..70);
    let mut x: Vec<u8> = match rng.random_range(0..3) {
        0 => {
            let p: f64 = rng.random_range(0.0..0.25);
            (0..len).map(|_| rng.random_bool(p) as u8).collect()
        }
        1 => {
            let period: Vec<u8> = (0..rng.random_range(1..5)).map(|_| rng.random_range(0..2)).collect();
            (0..len)
                .map(|t| period[t % period.len()] ^ rng.random_bool(0.05) as u8)
                .collect()
        }
        _ => (0..len).map(|_| rng.random_range(0..2)).collect(),
    };
    x[0] = 0;
    x[1] = 1;
    x
}

#[test]
fn streaming_gadget_loop_matches_literal_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut compared, mut with_gadgets) = (0, 0);
    for _ in 0..6000 {
        let x = adversarial_source(&mut rng);
        let window = rng.random_range(0..6.min(x.len() - 1));
        let xw = Word::from_letters(x.iter().copied());
        let Ok(cw) = construct_toy_from(&xw, window) else {
            continue;
        };
        let lit = literal_toy(&x, window).expect("the streaming loop accepted the source");
        assert_eq!(letters(&cw.word), lit.word, "x = {xw}, window = {window}");
        assert_eq!(cw.chains[0].chosen_i, lit.chosen_i);
        assert_eq!(cw.gadget_count(), lit.gadgets);
        compared += 1;
        if lit.gadgets > 0 {
            with_gadgets += 1;
        }
    }
    assert!(compared >= 5000, "only {compared} sources were accepted");
    assert!(with_gadgets >= 30, "only {with_gadgets} runs inserted gadgets");
}

#[test]
fn violation_table_matches_literal_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let x = adversarial_source(&mut rng);
        let w = letters(&pref(&Word::from_letters(x.iter().copied())));
        let (_, regular) = assemble(&x, &vec![None; x.len()]);
        let ap = align(&Word::from_letters(w.iter().copied()), 0, None).unwrap();
        let table = violation_table(&ap);
        for i in 0..x.len() {
            let literal = violated(&w, &regular, i).iter().filter(|&&b| b).count();
            assert_eq!(table.get(i), literal, "offset {i}");
        }
        let offsets = ap
            .classes
            .iter()
            .filter(|c| matches!(c, RedClass::Offset { .. }))
            .count();
        assert!(offsets <= ap.red.block_count());
    }
}
