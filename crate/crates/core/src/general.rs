//! The chained construction with tunable compression speed: a family of
//! random pseudo-de Bruijn words of length `l`, each turned into a chain
//! `pref_{>q_j}(x^j)` with gadgets, concatenated and padded with zeroes to
//! length `n`. `w` compresses in `Θ(n/l)` blocks and `0w` in `Θ(n/√l)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{align_parsings, violated_offsets, GreenKind};
use crate::construct::{ChainBuilder, ConstructedWord, Gadgets};
use crate::error::{Error, Result};
use crate::gen::kgram_counts;
use crate::lz::{parse, parse_prepended};
use crate::word::Word;

pub const SAMPLING_RETRY_CAP: u32 = 64;
pub const MIN_GAMMA: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub l: usize,
    pub gamma: f64,
    /// `⌊log2(n / l²)⌋`; the family has `2^p` words.
    pub p: u32,
    /// `log2(l) / 2`.
    pub k: f64,
    /// `⌈max(γp, γ log2 l)⌉`.
    pub m: usize,
    /// `l ∈ [(9γ)² log² n, √n]` and `γ ≥ 10`.
    pub in_theorem_range: bool,
    /// `0 ≤ p ≤ √l` and `γ log2(n)/3 ≤ m ≤ √l/9`.
    pub relations_hold: bool,
}

impl Params {
    pub fn family_size(&self) -> usize {
        1usize << self.p
    }

    /// Census depth for the per-word occurrence bound.
    pub fn census_depth(&self) -> usize {
        self.k.floor() as usize
    }

    /// Largest offset that can trigger gadgets, `⌊2k√l⌋`.
    pub fn gadget_window(&self) -> usize {
        chain_window(self.k, self.l)
    }
}

pub(crate) fn chain_window(k: f64, l: usize) -> usize {
    (2.0 * k * (l as f64).sqrt()).floor() as usize
}

/// Derives the remaining parameters from `n`, `l` and `γ`.
///
/// Parameters outside the range where the asymptotic guarantees apply are
/// accepted and flagged; with `strict` they are rejected. Parameters that make
/// the construction itself impossible are always rejected.
pub fn derive_params(n: usize, l: usize, gamma: f64, strict: bool) -> Result<Params> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Parameter(format!("gamma must be positive, got {gamma}")));
    }
    if l < 4 {
        return Err(Error::Parameter(format!("word length l must be at least 4, got {l}")));
    }
    if l.checked_mul(l).is_none_or(|l2| l2 > n) {
        return Err(Error::Parameter(format!("l = {l} exceeds √n for n = {n}")));
    }
    let p = (n as f64 / (l as f64 * l as f64)).log2().floor() as u32;
    if p > 40 {
        return Err(Error::Parameter(format!("family of 2^{p} words is too large")));
    }
    let log_l = (l as f64).log2();
    let log_n = (n as f64).log2();
    let k = log_l / 2.0;
    let m = (gamma * p as f64).max(gamma * log_l).ceil() as usize;
    if m + 1 >= l / 2 {
        return Err(Error::Parameter(format!(
            "m = {m} does not fit in half of a length-{l} word"
        )));
    }
    let lo = (9.0 * gamma).powi(2) * log_n * log_n;
    let in_theorem_range = gamma >= MIN_GAMMA && l as f64 >= lo && (l * l) <= n;
    let sqrt_l = (l as f64).sqrt();
    let relations_hold = (p as f64) <= sqrt_l && gamma * log_n / 3.0 <= m as f64 && m as f64 <= sqrt_l / 9.0;
    if strict && !in_theorem_range {
        return Err(Error::Parameter(format!(
            "l = {l} is outside [(9γ)² log² n, √n] = [{lo:.0}, {:.0}] or γ < {MIN_GAMMA}",
            (n as f64).sqrt()
        )));
    }
    Ok(Params {
        n,
        l,
        gamma,
        p,
        k,
        m,
        in_theorem_range,
        relations_hold,
    })
}

/// Every `u` with `1 ≤ |u| ≤ ⌊k⌋` occurs at most `k l / 2^|u|` times in `x`.
pub fn check_p1(x: &Word, k: f64, l: usize) -> bool {
    let depth = k.floor() as usize;
    (1..=depth).all(|len| {
        let bound = k * l as f64 / (1u64 << len) as f64;
        kgram_counts(x, len).iter().all(|&c| c as f64 <= bound)
    })
}

const MERSENNE61: u64 = (1 << 61) - 1;

fn mulmod61(a: u64, b: u64) -> u64 {
    let p = a as u128 * b as u128;
    let r = ((p & MERSENNE61 as u128) + (p >> 61)) as u64;
    if r >= MERSENNE61 {
        r - MERSENNE61
    } else {
        r
    }
}

/// Every factor of length `m` occurs at most once across all `words`
/// (one word, one position). Rolling hashes locate candidate repeats, which
/// are then compared letter by letter.
pub fn check_p2(words: &[Word], m: usize) -> bool {
    first_repeated_factor(words, m).is_none()
}

/// Positions `(word, offset)` of two equal length-`m` factors, if any.
pub fn first_repeated_factor(words: &[Word], m: usize) -> Option<((usize, usize), (usize, usize))> {
    if m == 0 {
        return None;
    }
    const BASE: u64 = 1_000_003;
    let mut top = 1u64;
    for _ in 1..m {
        top = mulmod61(top, BASE);
    }
    let mut seen: HashMap<u64, Vec<(usize, usize)>> = HashMap::new();
    for (wi, w) in words.iter().enumerate() {
        if w.len() < m {
            continue;
        }
        let mut h = 0u64;
        for t in 0..w.len() {
            if t >= m {
                let out = mulmod61(top, w.bit(t - m) as u64 + 1);
                h = (h + MERSENNE61 - out) % MERSENNE61;
            }
            h = (mulmod61(h, BASE) + w.bit(t) as u64 + 1) % MERSENNE61;
            if t + 1 >= m {
                let pos = t + 1 - m;
                let bucket = seen.entry(h).or_default();
                for &(wj, pj) in bucket.iter() {
                    let other = &words[wj];
                    if (0..m).all(|d| other.bit(pj + d) == w.bit(pos + d)) {
                        return Some(((wj, pj), (wi, pos)));
                    }
                }
                bucket.push((wi, pos));
            }
        }
    }
    None
}

/// `q_j`: the smallest `i` such that `x^j[0..i]` is not a prefix of an
/// earlier word, i.e. the longest common prefix with any earlier word.
pub fn sync_offsets(words: &[Word], earlier: &[Word]) -> Vec<usize> {
    let mut q = Vec::with_capacity(words.len());
    for (j, x) in words.iter().enumerate() {
        let best = earlier.iter().chain(&words[..j]).map(|y| x.lcp(y)).max().unwrap_or(0);
        q.push(best);
    }
    q
}

/// Uniform random word of length `l` from the stream `(attempt, index)` of
/// `seed`. Independent of thread scheduling.
pub(crate) fn random_word(seed: u64, attempt: u32, index: u64, l: usize) -> Word {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((attempt as u64) << 40) | index);
    let words: Vec<u64> = (0..l.div_ceil(64)).map(|_| rng.next_u64()).collect();
    Word::from_raw_parts(words, l)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub params: Params,
    pub seed: u64,
    pub words: Vec<Word>,
    pub q: Vec<usize>,
    /// Rejected draws before the accepted one.
    pub retries: u32,
}

impl Family {
    pub fn check_p1(&self) -> bool {
        self.words.par_iter().all(|x| check_p1(x, self.params.k, self.params.l))
    }

    pub fn check_p2(&self) -> bool {
        check_p2(&self.words, self.params.m)
    }

    /// Text form: one header line of `key=value` pairs, then one word per line.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = format!(
            "n={} l={} p={} k={} m={} gamma={} seed={}\n",
            p.n, p.l, p.p, p.k, p.m, p.gamma, self.seed
        );
        for w in &self.words {
            let _ = writeln!(out, "{w}");
        }
        out
    }

    /// Reads the text form back, recomputing derived fields and `q`.
    pub fn from_text(text: &str) -> Result<Family> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parameter("empty family file".into()))?;
        let mut fields = HashMap::new();
        for kv in header.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("bad header field {kv:?}")))?;
            fields.insert(k, v);
        }
        let get = |key: &str| -> Result<&str> {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| Error::Parameter(format!("header lacks {key}")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse::<f64>()
                .map_err(|_| Error::Parameter(format!("header field {key} is not a number")))
        };
        let params = derive_params(num("n")? as usize, num("l")? as usize, num("gamma")?, false)?;
        let seed = get("seed")?
            .parse::<u64>()
            .map_err(|_| Error::Parameter("header field seed is not an integer".into()))?;
        let words = lines
            .filter(|l| !l.trim().is_empty())
            .map(Word::parse_text)
            .collect::<Result<Vec<_>>>()?;
        if words.len() != params.family_size() || words.iter().any(|w| w.len() != params.l) {
            return Err(Error::Parameter(format!(
                "expected {} words of length {}",
                params.family_size(),
                params.l
            )));
        }
        let q = sync_offsets(&words, &[]);
        Ok(Family {
            params,
            seed,
            words,
            q,
            retries: 0,
        })
    }
}

/// Draws whole families until one satisfies both occurrence properties and
/// its first word starts with `1`.
pub fn sample_family(params: &Params, seed: u64) -> Result<Family> {
    let size = params.family_size();
    let mut last_failure = String::new();
    for attempt in 0..SAMPLING_RETRY_CAP {
        let words: Vec<Word> = (0..size as u64)
            .into_par_iter()
            .map(|j| random_word(seed, attempt, j, params.l))
            .collect();
        let first_ok = words[0].bit(0) == 1;
        let p1 = words.par_iter().all(|x| check_p1(x, params.k, params.l));
        let p2 = check_p2(&words, params.m);
        if first_ok && p1 && p2 {
            let q = sync_offsets(&words, &[]);
            return Ok(Family {
                params: params.clone(),
                seed,
                words,
                q,
                retries: attempt,
            });
        }
        last_failure = format!(
            "first word starts with 1: {first_ok}, per-word census: {p1}, unique {}-grams: {p2}",
            params.m
        );
    }
    Err(Error::Sampling {
        attempts: SAMPLING_RETRY_CAP,
        detail: format!(
            "n={} l={} gamma={} seed={seed}; last draw: {last_failure}",
            params.n, params.l, params.gamma
        ),
    })
}

/// Builds the padded word from a family.
pub fn construct_general(family: &Family) -> Result<ConstructedWord> {
    let p = &family.params;
    let mut b = ChainBuilder::new();
    for (j, x) in family.words.iter().enumerate() {
        // At least the family offset: earlier gadgets can also share a prefix with x.
        let q = b.green_depth(x);
        debug_assert!(q >= family.q[j]);
        if q > p.m {
            return Err(Error::Construction(format!(
                "chain {j} starts after offset {q} > m = {}",
                p.m
            )));
        }
        b.add_chain(x, q, p.gadget_window(), Gadgets::General { m: p.m, u: None }, false)?;
    }
    b.pad_to(p.n)?;
    Ok(b.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain: usize,
    pub q: usize,
    pub s: usize,
    pub chosen_i: Option<usize>,
    pub gadgets: usize,
    pub green_blocks: usize,
    /// Red blocks starting inside the chain.
    pub red_blocks: usize,
    /// `l^{3/2} / 54`.
    pub red_target: f64,
    /// Largest violation count over offsets `0..=⌊2k√l⌋`.
    pub max_violations: usize,
    pub violation_cap: f64,
    pub violation_cap_ok: bool,
    pub pair_sum_max: usize,
    pub pair_sum_ok: bool,
    /// The first green block of the chain is `x[0..q]`.
    pub head_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralReport {
    pub schema: u32,
    pub params: Params,
    pub len: usize,
    pub dic_w: usize,
    pub dic_0w: usize,
    pub catastrophe_factor: f64,
    /// `(3+√3)/2 · n/l`.
    pub size_bound: f64,
    pub size_ok: bool,
    /// `|dic(0w)| √l / n`, to compare with `1/54`.
    pub speed_constant: f64,
    pub speed_target: f64,
    pub gadget_count: usize,
    pub green_synchronized: bool,
    pub chains: Vec<ChainReport>,
}

impl GeneralReport {
    pub fn chains_ok(&self) -> bool {
        self.chains
            .iter()
            .all(|c| c.violation_cap_ok && c.pair_sum_ok && c.head_ok)
    }
}

pub fn verify_general(cw: &ConstructedWord, params: &Params) -> Result<GeneralReport> {
    let w = &cw.word;
    let green = parse(w);
    let red = parse_prepended(0, w);
    let (dic_w, dic_0w) = (green.dic_size(), red.dic_size());
    let (kinds, green_synchronized) = cw.green_kinds(&green);
    let green_chain = cw.green_chains(&green);
    let green_blocks: Vec<_> = green.blocks().to_vec();
    let red_starts: Vec<usize> = red.blocks().iter().skip(1).map(|b| b.start - 1).collect();
    let ap = align_parsings(0, green, red, Some(kinds.clone()))?;
    let offsets = violated_offsets(&ap);
    let ms = vec![params.m; cw.chains.len()];
    let chains = chain_reports(cw, &ms, &green_blocks, &kinds, &green_chain, &offsets, &red_starts);
    let n = w.len();
    let l = params.l as f64;
    let size_bound = (3.0 + 3f64.sqrt()) / 2.0 * n as f64 / l;
    Ok(GeneralReport {
        schema: 1,
        params: params.clone(),
        len: n,
        dic_w,
        dic_0w,
        catastrophe_factor: dic_0w as f64 / dic_w as f64,
        size_bound,
        size_ok: dic_w as f64 <= size_bound,
        speed_constant: dic_0w as f64 * l.sqrt() / n as f64,
        speed_target: 1.0 / 54.0,
        gadget_count: cw.gadget_count(),
        green_synchronized,
        chains,
    })
}

/// Per-chain statistics; `ms[c]` is the factor-uniqueness length used for
/// chain `c`.
pub(crate) fn chain_reports(
    cw: &ConstructedWord,
    ms: &[usize],
    green_blocks: &[crate::lz::Block],
    kinds: &[GreenKind],
    green_chain: &[Option<usize>],
    offsets: &[Vec<usize>],
    red_starts: &[usize],
) -> Vec<ChainReport> {
    let mut per_chain: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); cw.chains.len()];
    let mut green_count = vec![0usize; cw.chains.len()];
    let mut first_green: Vec<Option<usize>> = vec![None; cw.chains.len()];
    for (g, chain) in green_chain.iter().enumerate() {
        let Some(c) = *chain else { continue };
        green_count[c] += 1;
        first_green[c].get_or_insert(g);
        if kinds[g] == GreenKind::Regular {
            for &i in &offsets[g] {
                *per_chain[c].entry(i).or_insert(0) += 1;
            }
        }
    }
    cw.chains
        .iter()
        .enumerate()
        .map(|(c, info)| {
            let x = &cw.sources[info.source];
            let l = x.len();
            let k_c = (l as f64).log2() / 2.0;
            let m = ms[c];
            let window = chain_window(k_c, l);
            let lo = red_starts.partition_point(|&s| s < info.start);
            let hi = red_starts.partition_point(|&s| s < info.end);
            let table = &per_chain[c];
            let max_violations = table.range(..=window).map(|(_, &v)| v).max().unwrap_or(0);
            let violation_cap = l as f64 / 2.0 + 2.0 * m as f64 + 1.0 + 2.0 * k_c * (l as f64).sqrt();
            let mut top: Vec<usize> = table.values().copied().collect();
            top.sort_unstable_by(|a, b| b.cmp(a));
            let pair_sum_max: usize = top.iter().take(2).sum();
            let head_ok = first_green[c].is_some_and(|g| {
                let b = green_blocks[g];
                b.start == info.start && b.len == info.q + 1
            });
            ChainReport {
                chain: c,
                q: info.q,
                s: info.s,
                chosen_i: info.chosen_i,
                gadgets: info.gadgets,
                green_blocks: green_count[c],
                red_blocks: hi - lo,
                red_target: (l as f64).powf(1.5) / 54.0,
                max_violations,
                violation_cap,
                violation_cap_ok: max_violations as f64 <= violation_cap,
                pair_sum_max,
                pair_sum_ok: pair_sum_max <= info.s,
                head_ok,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_by_substitution() {
        let a = derive_params(1 << 20, 1 << 10, 10.0, false).unwrap();
        assert_eq!((a.p, a.k, a.m), (0, 5.0, 100));
        assert!(!a.in_theorem_range);
        let b = derive_params(1 << 24, 1 << 9, 10.0, false).unwrap();
        assert_eq!((b.p, b.k, b.m), (6, 4.5, 90));
        assert!(derive_params(1 << 20, 1 << 11, 10.0, false).is_err());
        assert!(derive_params(1 << 20, 1 << 10, 10.0, true).is_err());
        assert!(derive_params(1 << 20, 1 << 6, 10.0, false).is_err());
    }

    #[test]
    fn planted_census_failures() {
        let zeros = Word::repeat(0, 256);
        assert!(!check_p1(&zeros, 4.0, 256));
        let x = random_word(7, 0, 0, 256);
        assert!(check_p1(&x, 4.0, 256));
        assert!(!check_p2(&[x.clone(), x.clone()], 40));
        assert!(check_p2(&[x], 40));
    }

    #[test]
    fn sync_offsets_are_lcps() {
        let words: Vec<Word> = ["1011", "1000", "0110", "1001"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(sync_offsets(&words, &[]), [0, 2, 0, 3]);
    }

    #[test]
    fn family_text_roundtrip() {
        let params = derive_params(1 << 18, 1 << 8, 4.0, false).unwrap();
        let fam = sample_family(&params, 3).unwrap();
        let back = Family::from_text(&fam.to_text()).unwrap();
        assert_eq!(back.words, fam.words);
        assert_eq!(back.q, fam.q);
        assert_eq!(back.params, fam.params);
    }
}
