//! Randomized checks over many words: the prepending bound and the structural
//! invariants of parsings and alignments.
//!
//! Trial `t` draws from its own ChaCha8 stream of the seed, so results are the
//! same for any thread count. Word lengths are log-uniform in `[1, max_len]`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{align, coverage_profile, RedClass};
use crate::lz::{parse, parse_prepended, prepend_check_with};
use crate::word::Word;

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Random word whose length is log-uniform in `[1, max_len]`.
pub fn random_word_log_uniform(rng: &mut ChaCha8Rng, max_len: usize) -> Word {
    let max_len = max_len.max(1);
    let len = ((rng.random::<f64>() * ((max_len + 1) as f64).ln()).exp().floor() as usize).clamp(1, max_len);
    let words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect();
    Word::from_raw_parts(words, len)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reproducer {
    pub trial: u64,
    pub letter: u8,
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundFuzzReport {
    pub schema: u32,
    pub trials: u64,
    pub max_len: usize,
    pub seed: u64,
    pub checks: u64,
    pub max_ratio: f64,
    pub max_ratio_trial: u64,
    pub violations: Vec<Reproducer>,
}

/// Checks `|dic(aw)| <= 3 sqrt(|w| |dic(w)|)` on random words for both letters.
pub fn bound_fuzz(trials: u64, max_len: usize, seed: u64) -> BoundFuzzReport {
    let results: Vec<(u64, [crate::lz::PrependCheck; 2], Word)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = random_word_log_uniform(&mut trial_rng(seed, t), max_len);
            let dic_w = parse(&w).dic_size();
            let checks = [prepend_check_with(&w, 0, dic_w), prepend_check_with(&w, 1, dic_w)];
            (t, checks, w)
        })
        .collect();
    let mut report = BoundFuzzReport {
        schema: 1,
        trials,
        max_len,
        seed,
        checks: 0,
        max_ratio: 0.0,
        max_ratio_trial: 0,
        violations: Vec::new(),
    };
    for (t, checks, w) in results {
        for c in checks {
            report.checks += 1;
            if c.ratio > report.max_ratio {
                report.max_ratio = c.ratio;
                report.max_ratio_trial = t;
            }
            if !c.holds() {
                report.violations.push(Reproducer {
                    trial: t,
                    letter: c.letter,
                    word: w.clone(),
                });
            }
        }
    }
    report
}

/// Every structural invariant that fails on `w`, as messages.
pub fn structural_failures(w: &Word) -> Vec<String> {
    let mut fails = Vec::new();
    let p = parse(w);

    match p.encode().decode() {
        Ok(back) if back == *w => {}
        Ok(_) => fails.push("decode(encode(parse(w))) differs from w".into()),
        Err(e) => fails.push(format!("decode failed: {e}")),
    }

    let mut rebuilt = Word::with_capacity(w.len());
    let mut pos = 0;
    for (b, blk) in p.blocks().iter().enumerate() {
        if blk.start != pos {
            fails.push(format!("block {b} starts at {} instead of {pos}", blk.start));
        }
        pos = blk.end();
        rebuilt.extend_from(&p.block_word(b));
    }
    if rebuilt != *w {
        fails.push("blocks do not concatenate to w".into());
    }

    let dict = p.dictionary();
    let set: std::collections::HashSet<&Word> = dict.iter().collect();
    if set.len() != dict.len() {
        fails.push("dictionary has repeated words".into());
    }
    for u in &dict {
        if !u.is_empty() && !set.contains(&u.prefix(u.len() - 1)) {
            fails.push(format!("dictionary is not prefix-closed at {u}"));
            break;
        }
    }
    for (b, blk) in p.blocks().iter().enumerate() {
        if p.block_word(b).len() != blk.len {
            fails.push(format!("block {b} depth differs from its length"));
        }
    }

    let stats = p.tree_stats();
    for i in 1..=stats.max_depth {
        let census = p.factor_census(i);
        if census + i > stats.vertex_count {
            fails.push(format!(
                "{census} distinct factors of length {i} exceed {} - {i}",
                stats.vertex_count
            ));
        }
    }

    let (blocks, dic) = (p.block_count(), p.dic_size());
    if blocks * (blocks + 1) / 2 < w.len() || dic * (dic + 3) / 2 < w.len() {
        fails.push(format!(
            "{blocks} blocks ({dic} distinct) cannot cover {} letters",
            w.len()
        ));
    }

    if !w.is_empty() {
        for a in 0..2u8 {
            let ap = match align(w, a, None) {
                Ok(ap) => ap,
                Err(e) => {
                    fails.push(format!("align failed: {e}"));
                    continue;
                }
            };
            let firsts = ap.classes.iter().filter(|c| **c == RedClass::First).count();
            if firsts != 1 || ap.classes[0] != RedClass::First {
                fails.push(format!("{firsts} first blocks for letter {a}"));
            }
            let red_total: usize = ap.red.blocks().iter().map(|b| b.len).sum();
            if red_total != w.len() + 1 {
                fails.push(format!("red blocks cover {red_total} letters of aw"));
            }
            let cov = coverage_profile(&ap);
            for (g, (pieces, gb)) in cov.iter().zip(ap.green.blocks()).enumerate() {
                let mut at = 0;
                for piece in pieces {
                    if piece.offset != at {
                        fails.push(format!("green block {g} is not tiled at offset {at}"));
                        break;
                    }
                    at += piece.len;
                }
                if at != gb.len {
                    fails.push(format!("green block {g} tiled up to {at} of {}", gb.len));
                }
            }
            for (r, c) in ap.classes.iter().enumerate().skip(1) {
                let rb = ap.red.blocks()[r];
                let (rs, re) = (rb.start - 1, rb.end() - 1);
                let inside: Vec<usize> = ap
                    .green
                    .blocks()
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| g.start < re && rs < g.end())
                    .map(|(i, _)| i)
                    .collect();
                let ok = match *c {
                    RedClass::Offset { i, green } => inside == [green] && ap.green.blocks()[green].start + i == rs,
                    RedClass::Junction => inside.len() >= 2,
                    RedClass::First => false,
                };
                if !ok {
                    fails.push(format!("red block {r} misclassified as {c:?}"));
                }
            }
            let red2 = parse_prepended(a, w);
            if red2.blocks() != ap.red.blocks() {
                fails.push("parse is not deterministic".into());
            }
        }
    }
    fails
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralFuzzReport {
    pub schema: u32,
    pub trials: u64,
    pub max_len: usize,
    pub seed: u64,
    pub failures: Vec<(u64, String)>,
}

pub fn structural_fuzz(trials: u64, max_len: usize, seed: u64) -> StructuralFuzzReport {
    let failures: Vec<(u64, String)> = (0..trials)
        .into_par_iter()
        .flat_map_iter(|t| {
            let w = random_word_log_uniform(&mut trial_rng(seed, t), max_len);
            structural_failures(&w).into_iter().map(move |f| (t, f))
        })
        .collect();
    StructuralFuzzReport {
        schema: 1,
        trials,
        max_len,
        seed,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_words_are_clean() {
        for w in ["", "0", "1", "00", "0001010100011", "001010100011"] {
            let w: Word = w.parse().unwrap();
            assert!(structural_failures(&w).is_empty(), "{w}: {:?}", structural_failures(&w));
        }
    }

    #[test]
    fn small_bound_fuzz_is_deterministic() {
        let a = bound_fuzz(50, 300, 9);
        assert_eq!(a, bound_fuzz(50, 300, 9));
        assert!(a.violations.is_empty());
        assert_eq!(a.checks, 100);
    }
}
