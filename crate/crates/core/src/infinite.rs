//! Finite prefixes of the infinite construction: chains from families of
//! growing word length `l_i = l_0 2^i`, and compression-ratio curves over the
//! prefixes of the result.
//!
//! Only the first levels are reachable at desk scale (family sizes grow like
//! `|F_{i+1}| ~ |F_i|^{√2}`), so the output is compared through trends of the
//! ratio curves rather than limits.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{align_parsings, violated_offsets};
use crate::construct::{ChainBuilder, ConstructedWord, Gadgets};
use crate::error::{Error, Result};
use crate::general::{
    chain_reports, chain_window, check_p1, first_repeated_factor, ChainReport, MIN_GAMMA, SAMPLING_RETRY_CAP,
};
use crate::lz::{comp_from_dic, parse, parse_prepended, LzParser};
use crate::word::Word;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub index: usize,
    /// `l_i = l_0 2^i`.
    pub l: usize,
    /// `p_i = √l_i / (9γ) - 2 log2 l_i`.
    pub p: f64,
    /// `k_i = log2(l_i) / 2`.
    pub k: f64,
    /// Factor-uniqueness length: `max(⌈γ p_i⌉, ⌈2(p_i + log2 l_i)⌉ + 8)`.
    pub m: usize,
    /// `⌊2^{p_i}⌋`, the number of words in levels `0..=i`.
    pub cumulative: u64,
    /// `|F_i|`, a difference of consecutive cumulative counts.
    pub size: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub l0: usize,
    pub gamma: f64,
    pub levels: Vec<Level>,
    /// `γ < 10`: the asymptotic guarantees do not cover this run.
    pub out_of_theorem_range: bool,
}

/// Per-level parameters for the first `levels` levels.
pub fn schedule(l0: usize, gamma: f64, levels: usize) -> Result<Schedule> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Parameter(format!("gamma must be positive, got {gamma}")));
    }
    if levels == 0 {
        return Err(Error::Parameter("at least one level is required".into()));
    }
    let mut out: Vec<Level> = Vec::with_capacity(levels);
    for index in 0..levels {
        let l = l0
            .checked_mul(1usize << index)
            .ok_or_else(|| Error::Parameter(format!("level {index}: word length overflows")))?;
        let log_l = (l as f64).log2();
        let p = (l as f64).sqrt() / (9.0 * gamma) - 2.0 * log_l;
        if index == 0 && p < 1.0 {
            return Err(Error::Parameter(format!(
                "level 0: p_0 = {p:.3} < 1 for l0 = {l0}, gamma = {gamma}; increase l0 or lower gamma"
            )));
        }
        if let Some(prev) = out.last() {
            if p <= prev.p {
                return Err(Error::Parameter(format!(
                    "level {index}: p_{index} = {p:.3} does not increase"
                )));
            }
        }
        if p > 62.0 {
            return Err(Error::Parameter(format!(
                "level {index}: 2^{p:.1} words cannot be counted"
            )));
        }
        let m = ((gamma * p).ceil() as usize).max((2.0 * (p + log_l)).ceil() as usize + 8);
        if m + 1 >= l / 2 {
            return Err(Error::Parameter(format!(
                "level {index}: m = {m} does not fit in half of l = {l}"
            )));
        }
        let cumulative = p.exp2().floor() as u64;
        let size = cumulative - out.last().map_or(0, |lv| lv.cumulative);
        out.push(Level {
            index,
            l,
            p,
            k: log_l / 2.0,
            m,
            cumulative,
            size,
        });
    }
    Ok(Schedule {
        l0,
        gamma,
        levels: out,
        out_of_theorem_range: gamma < MIN_GAMMA,
    })
}

fn level_word(seed: u64, attempt: u32, level: usize, j: u64, l: usize) -> Word {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((attempt as u64) << 48) | ((level as u64) << 32) | j);
    let words: Vec<u64> = (0..l.div_ceil(64)).map(|_| rng.next_u64()).collect();
    Word::from_raw_parts(words, l)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelUse {
    pub level: usize,
    /// Words drawn for this level (only as many as the budget needs).
    pub sampled: usize,
    pub chains: usize,
    pub retries: u32,
}

#[derive(Clone, Debug)]
pub struct InfinitePrefix {
    pub word: ConstructedWord,
    pub schedule: Schedule,
    pub levels: Vec<LevelUse>,
    /// Level of every chain.
    pub chain_levels: Vec<usize>,
    pub budget: usize,
    pub seed: u64,
}

/// The first `budget` letters of the construction.
///
/// Each level draws only as many words as the remaining budget can use, with
/// whole-draw rejection on the per-word census and on uniqueness of
/// `m_i`-letter factors across every word drawn so far.
pub fn build_prefix(sched: &Schedule, budget: usize, seed: u64) -> Result<InfinitePrefix> {
    let first = &sched.levels[0];
    let min_chain = |lv: &Level| lv.l * (lv.l + 1) / 2 - lv.m * (lv.m + 1) / 2;
    if budget < min_chain(first) {
        return Err(Error::Parameter(format!(
            "budget {budget} is below the size of one level-0 chain ({})",
            min_chain(first)
        )));
    }
    let mut b = ChainBuilder::new();
    let mut all_words: Vec<Word> = Vec::new();
    let mut uses = Vec::new();
    let mut chain_levels = Vec::new();
    for lv in &sched.levels {
        if b.len() >= budget {
            break;
        }
        let remaining = budget - b.len();
        let need = (remaining.div_ceil(min_chain(lv)) as u64).clamp(1, lv.size.max(1)) as usize;
        let mut accepted = None;
        for attempt in 0..SAMPLING_RETRY_CAP {
            let words: Vec<Word> = (0..need as u64)
                .into_par_iter()
                .map(|j| level_word(seed, attempt, lv.index, j, lv.l))
                .collect();
            if lv.index == 0 && words[0].bit(0) != 1 {
                continue;
            }
            if !words.par_iter().all(|x| check_p1(x, lv.k, lv.l)) {
                continue;
            }
            let mut pool = all_words.clone();
            pool.extend(words.iter().cloned());
            if first_repeated_factor(&pool, lv.m).is_some() {
                continue;
            }
            accepted = Some((attempt, words));
            break;
        }
        let (retries, words) = accepted.ok_or_else(|| Error::Sampling {
            attempts: SAMPLING_RETRY_CAP,
            detail: format!("level {} (l = {}, m = {}), seed {seed}", lv.index, lv.l, lv.m),
        })?;
        let mut chains = 0;
        for x in &words {
            if b.len() >= budget {
                break;
            }
            let q = b.green_depth(x);
            if q > lv.m {
                return Err(Error::Construction(format!(
                    "level {} chain starts after offset {q} > m = {}",
                    lv.index, lv.m
                )));
            }
            b.add_chain(
                x,
                q,
                chain_window(lv.k, lv.l),
                Gadgets::General { m: lv.m, u: None },
                false,
            )?;
            chain_levels.push(lv.index);
            chains += 1;
        }
        uses.push(LevelUse {
            level: lv.index,
            sampled: words.len(),
            chains,
            retries,
        });
        all_words.extend(words);
    }
    if b.len() < budget {
        return Err(Error::Parameter(format!(
            "the {} scheduled levels yield only {} letters, below the budget {budget}",
            sched.levels.len(),
            b.len()
        )));
    }
    let mut word = b.finish();
    word.truncate(budget);
    chain_levels.truncate(word.chains.len());
    Ok(InfinitePrefix {
        word,
        schedule: sched.clone(),
        levels: uses,
        chain_levels,
        budget,
        seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub comp: f64,
}

/// `comp` of the prefixes of length `stride, 2 stride, …` of the letters,
/// from a single left-to-right parse.
///
/// The parsing of a prefix is the parsing of the longer word cut at that
/// point; the cut block is either complete or a repeat of an earlier block,
/// so the dictionary of the prefix is the set of blocks completed so far.
pub fn ratio_curve_letters<I: IntoIterator<Item = u8>>(letters: I, stride: usize) -> Vec<CurvePoint> {
    assert!(stride >= 1, "stride must be positive");
    let mut parser = LzParser::new();
    let mut out = Vec::new();
    for b in letters {
        parser.push(b);
        let n = parser.position();
        if n.is_multiple_of(stride) {
            out.push(CurvePoint {
                n,
                comp: comp_from_dic(parser.dic_size(), n),
            });
        }
    }
    out
}

pub fn ratio_curve(w: &Word, stride: usize) -> Vec<CurvePoint> {
    ratio_curve_letters(w.iter(), stride)
}

/// Curve of `aw`.
pub fn ratio_curve_prepended(a: u8, w: &Word, stride: usize) -> Vec<CurvePoint> {
    ratio_curve_letters(std::iter::once(a).chain(w.iter()), stride)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSeparation {
    /// Points with `n >= from_n` form the last quartile.
    pub from_n: usize,
    pub max_w: f64,
    pub min_aw: f64,
    pub holds: bool,
}

/// Compares the last quartile of two curves: the largest ratio of the first
/// must stay below the smallest ratio of the second.
pub fn tail_separation(curve_w: &[CurvePoint], curve_aw: &[CurvePoint]) -> TailSeparation {
    let last = curve_w
        .last()
        .map_or(0, |p| p.n)
        .max(curve_aw.last().map_or(0, |p| p.n));
    let from_n = (last * 3).div_ceil(4);
    let tail = |c: &[CurvePoint]| c.iter().filter(|p| p.n >= from_n).map(|p| p.comp).collect::<Vec<_>>();
    let max_w = tail(curve_w).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let min_aw = tail(curve_aw).into_iter().fold(f64::INFINITY, f64::min);
    TailSeparation {
        from_n,
        max_w,
        min_aw,
        holds: max_w < min_aw,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfiniteChainReport {
    pub level: usize,
    pub l: usize,
    pub m: usize,
    pub q_ok: bool,
    /// At most `3 l / 2` green blocks.
    pub green_ok: bool,
    #[serde(flatten)]
    pub chain: ChainReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfiniteReport {
    pub schema: u32,
    pub l0: usize,
    pub gamma: f64,
    pub budget: usize,
    pub seed: u64,
    pub out_of_theorem_range: bool,
    pub levels: Vec<Level>,
    pub usage: Vec<LevelUse>,
    pub dic_w: usize,
    pub dic_0w: usize,
    pub stride: usize,
    pub tail: TailSeparation,
    pub chains: Vec<InfiniteChainReport>,
}

pub struct InfiniteAnalysis {
    pub report: InfiniteReport,
    pub curve_w: Vec<CurvePoint>,
    pub curve_0w: Vec<CurvePoint>,
}

pub fn analyze_prefix(prefix: &InfinitePrefix, stride: usize) -> Result<InfiniteAnalysis> {
    let cw = &prefix.word;
    let w = &cw.word;
    let green = parse(w);
    let red = parse_prepended(0, w);
    let (dic_w, dic_0w) = (green.dic_size(), red.dic_size());
    let (kinds, _) = cw.green_kinds(&green);
    let green_chain = cw.green_chains(&green);
    let green_blocks = green.blocks().to_vec();
    let red_starts: Vec<usize> = red.blocks().iter().skip(1).map(|b| b.start - 1).collect();
    let ap = align_parsings(0, green, red, Some(kinds.clone()))?;
    let offsets = violated_offsets(&ap);
    let levels = &prefix.schedule.levels;
    let ms: Vec<usize> = prefix.chain_levels.iter().map(|&lv| levels[lv].m).collect();
    let reports = chain_reports(cw, &ms, &green_blocks, &kinds, &green_chain, &offsets, &red_starts);
    let chains = reports
        .into_iter()
        .zip(&prefix.chain_levels)
        .map(|(chain, &lv)| {
            let level = &levels[lv];
            InfiniteChainReport {
                level: lv,
                l: level.l,
                m: level.m,
                q_ok: chain.q <= level.m,
                green_ok: 2 * chain.green_blocks <= 3 * level.l,
                chain,
            }
        })
        .collect();
    let curve_w = ratio_curve(w, stride);
    let curve_0w = ratio_curve_prepended(0, w, stride);
    let tail = tail_separation(&curve_w, &curve_0w);
    let report = InfiniteReport {
        schema: 1,
        l0: prefix.schedule.l0,
        gamma: prefix.schedule.gamma,
        budget: prefix.budget,
        seed: prefix.seed,
        out_of_theorem_range: prefix.schedule.out_of_theorem_range,
        levels: levels.clone(),
        usage: prefix.levels.clone(),
        dic_w,
        dic_0w,
        stride,
        tail,
        chains,
    };
    Ok(InfiniteAnalysis {
        report,
        curve_w,
        curve_0w,
    })
}
