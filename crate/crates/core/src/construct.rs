//! Machinery shared by the gadget constructions.
//!
//! A constructed word is a sequence of chains. A chain is `pref_{>q}(x)` for a
//! source word `x`: its regular blocks are the prefixes of `x` of lengths
//! `q+1, …, |x|`, possibly with one gadget inserted before some of them.
//!
//! The gadget loop is adaptive on the red parsing (the parsing of `0w`), but an
//! insertion only changes the red parsing from the insertion point on. The
//! builder therefore streams the chain through an [`LzParser`] once, and when
//! a gadget must go in front of a block it rolls the parser back to the start
//! of that block, feeds the gadget, and feeds the block again. Regular blocks
//! before the insertion point keep their violation status, so counting
//! violations left to right is equivalent to recounting the whole chain after
//! every insertion.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::alignment::GreenKind;
use crate::error::{Error, Result};
use crate::lz::{LzParser, Parsing};
use crate::word::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    /// The prefix of length `prefix_len` of the chain's source word.
    Regular {
        chain: usize,
        prefix_len: usize,
    },
    Gadget {
        chain: usize,
        i: usize,
        c: usize,
    },
    Padding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: usize,
    pub len: usize,
}

impl Segment {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn green_kind(&self) -> GreenKind {
        match self.kind {
            SegmentKind::Regular { .. } => GreenKind::Regular,
            SegmentKind::Gadget { .. } => GreenKind::Gadget,
            SegmentKind::Padding => GreenKind::Padding,
        }
    }

    pub fn chain(&self) -> Option<usize> {
        match self.kind {
            SegmentKind::Regular { chain, .. } | SegmentKind::Gadget { chain, .. } => Some(chain),
            SegmentKind::Padding => None,
        }
    }
}

/// Outcome of the gadget loop on one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainInfo {
    /// Index of the source word in [`ConstructedWord::sources`].
    pub source: usize,
    pub q: usize,
    /// Number of regular blocks, `|x| - q`.
    pub s: usize,
    /// Violations per offset in the gadget window before any insertion
    /// (offsets with no violation omitted).
    pub initial_violations: BTreeMap<usize, usize>,
    pub chosen_i: Option<usize>,
    pub gadgets: usize,
    /// Final values of the insertion counter and of the target counter.
    pub final_c: usize,
    pub final_d: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug)]
pub struct ConstructedWord {
    pub word: Word,
    pub segments: Vec<Segment>,
    pub chains: Vec<ChainInfo>,
    pub sources: Vec<Word>,
}

impl ConstructedWord {
    pub fn gadget_count(&self) -> usize {
        self.chains.iter().map(|c| c.gadgets).sum()
    }

    /// The word with gadgets and padding removed.
    pub fn regular_word(&self) -> Word {
        let mut w = Word::new();
        for seg in &self.segments {
            if let SegmentKind::Regular { .. } = seg.kind {
                w.extend_range(&self.word, seg.start..seg.end());
            }
        }
        w
    }

    /// Tags each green block with the kind of the segment it starts in, and
    /// reports whether every segment is exactly one green block (padding
    /// excepted).
    pub fn green_kinds(&self, green: &Parsing) -> (Vec<GreenKind>, bool) {
        let mut kinds = Vec::with_capacity(green.block_count());
        let mut synchronized = true;
        let mut s = 0usize;
        for b in green.blocks() {
            while s + 1 < self.segments.len() && self.segments[s].end() <= b.start {
                s += 1;
            }
            let seg = &self.segments[s];
            kinds.push(seg.green_kind());
            if seg.kind != SegmentKind::Padding && (b.start != seg.start || b.len != seg.len) {
                synchronized = false;
            }
        }
        (kinds, synchronized)
    }

    /// Chain index of every green block (`None` for padding).
    pub fn green_chains(&self, green: &Parsing) -> Vec<Option<usize>> {
        let mut out = Vec::with_capacity(green.block_count());
        let mut s = 0usize;
        for b in green.blocks() {
            while s + 1 < self.segments.len() && self.segments[s].end() <= b.start {
                s += 1;
            }
            out.push(self.segments[s].chain());
        }
        out
    }

    /// Truncates to the first `n` letters, dropping or cutting segments.
    pub fn truncate(&mut self, n: usize) {
        self.word.truncate(n);
        self.segments.retain(|s| s.start < n);
        if let Some(last) = self.segments.last_mut() {
            last.len = last.len.min(n - last.start);
        }
        for c in &mut self.chains {
            c.end = c.end.min(n);
        }
        self.chains.retain(|c| c.start < n);
    }
}

/// The gadget words of a construction.
#[derive(Clone, Debug)]
pub(crate) enum Gadgets {
    /// `g_0^c = 1 0^c` and `g_i^c = x_{<i} x̄_i 1^c`.
    Toy,
    /// `g_0^c = u a^c` with `a = x_0`, and
    /// `g_i^c = x[0..m'-1] x̄_{m'} v[0..c-1]` with `m' = max(i, m)`,
    /// `v = x[0..m-1] 1^l`.
    General { m: usize, u: Option<Word> },
}

impl Gadgets {
    fn word(&self, x: &Word, i: usize, c: usize) -> Result<Word> {
        let mut g = Word::new();
        match self {
            Gadgets::Toy => {
                if i == 0 {
                    g.push(1);
                    g.push_repeat(0, c);
                } else {
                    if i >= x.len() {
                        return Err(Error::Construction(format!("gadget offset {i} outside source word")));
                    }
                    g.extend_prefix_of(x, i);
                    g.push(x.flipped_bit(i));
                    g.push_repeat(1, c);
                }
            }
            Gadgets::General { m, u } => {
                let m = *m;
                if i == 0 {
                    let u = u.as_ref().expect("u is computed before the first offset-0 gadget");
                    g.extend_from(u);
                    g.push_repeat(x.bit(0), c);
                } else {
                    let mp = i.max(m);
                    if mp >= x.len() || c > m + x.len() {
                        return Err(Error::Construction(format!(
                            "gadget g_{i}^{c} does not fit a source word of length {}",
                            x.len()
                        )));
                    }
                    g.extend_prefix_of(x, mp);
                    g.push(x.flipped_bit(mp));
                    let from_v = c.min(m);
                    g.extend_prefix_of(x, from_v);
                    g.push_repeat(1, c - from_v);
                }
            }
        }
        Ok(g)
    }
}

/// Incremental builder holding the word so far and both parsers.
pub(crate) struct ChainBuilder {
    word: Word,
    segments: Vec<Segment>,
    chains: Vec<ChainInfo>,
    sources: Vec<Word>,
    /// Parser of `0w`.
    red: LzParser,
    /// Parser of `w`.
    green: LzParser,
}

/// Red blocks completed while feeding one regular block.
struct BlockFeed {
    offsets: Vec<usize>,
}

impl BlockFeed {
    fn violated(&self, i: usize) -> bool {
        self.offsets.contains(&i)
    }
}

impl ChainBuilder {
    pub fn new() -> Self {
        let mut red = LzParser::new();
        red.push(0);
        ChainBuilder {
            word: Word::new(),
            segments: Vec::new(),
            chains: Vec::new(),
            sources: Vec::new(),
            red,
            green: LzParser::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    /// Length of the longest prefix of `x` that is already a green block.
    /// Starting a chain at the next prefix makes its first regular block a new
    /// green block.
    pub fn green_depth(&self, x: &Word) -> usize {
        let mut node = 0u32;
        for (t, b) in x.iter().enumerate() {
            match self.green.child(node, b) {
                Some(c) => node = c,
                None => return t,
            }
        }
        x.len()
    }

    /// Feeds the prefix of length `len` of `x` to the red parser and reports
    /// the offsets of red blocks contained in it. With `at_end`, a trailing
    /// partial red block counts as completed.
    fn feed_block(&mut self, x: &Word, len: usize, at_end: bool) -> BlockFeed {
        // Red positions are shifted by one for the prepended letter.
        let block_start = self.red.position();
        let mut offsets = Vec::new();
        for t in 0..len {
            let st = self.red.phrase_start();
            if self.red.push(x.bit(t)) && st >= block_start {
                offsets.push(st - block_start);
            }
        }
        if at_end && self.red.has_partial() && self.red.phrase_start() >= block_start {
            offsets.push(self.red.phrase_start() - block_start);
        }
        BlockFeed { offsets }
    }

    fn append(&mut self, kind: SegmentKind, content: &Word, range: std::ops::Range<usize>) -> Result<()> {
        let start = self.word.len();
        self.word.extend_range(content, range.clone());
        let seg = Segment {
            kind,
            start,
            len: range.len(),
        };
        let before = self.green.dic_size();
        self.green.feed_range(content, range);
        if self.green.dic_size() != before + 1 || self.green.has_partial() {
            return Err(Error::Construction(format!(
                "segment {kind:?} at {start} is not parsed as exactly one green block"
            )));
        }
        self.segments.push(seg);
        Ok(())
    }

    /// Runs the gadget loop on the chain `pref_{>q}(x)` and appends it.
    ///
    /// `window` is the largest offset considered for violations. With
    /// `last_chain`, the chain ends the word.
    pub fn add_chain(
        &mut self,
        x: &Word,
        q: usize,
        window: usize,
        mut gadgets: Gadgets,
        last_chain: bool,
    ) -> Result<ChainInfo> {
        let l = x.len();
        if q >= l {
            return Err(Error::Construction(format!(
                "chain offset {q} leaves no block of a length-{l} word"
            )));
        }
        let chain = self.chains.len();
        let s = l - q;
        let half = s / 2;
        let start = self.word.len();
        let green_mark = self.green.node_count();
        let cp0 = self.red.checkpoint();

        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for r in 0..s {
            let feed = self.feed_block(x, q + 1 + r, last_chain && r + 1 == s);
            for &i in feed.offsets.iter().filter(|&&i| i <= window) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        let heavy: Vec<usize> = counts.iter().filter(|&(_, &c)| c > half).map(|(&i, _)| i).collect();
        if heavy.len() > 1 {
            return Err(Error::Construction(format!(
                "offsets {heavy:?} are all violated in more than half of the {s} blocks of chain {chain}"
            )));
        }
        let chosen_i = heavy.first().copied();

        let (mut c, mut d) = (0usize, half + 1);
        self.red.rollback(cp0);
        match chosen_i {
            None => {
                for r in 0..s {
                    self.feed_block(x, q + 1 + r, false);
                    self.append(
                        SegmentKind::Regular {
                            chain,
                            prefix_len: q + 1 + r,
                        },
                        x,
                        0..q + 1 + r,
                    )?;
                }
            }
            Some(i) => {
                if i == 0 {
                    if let Gadgets::General { m, u } = &mut gadgets {
                        *u = Some(self.smallest_fresh_word(x, q, green_mark, *m)?);
                        self.red.rollback(cp0);
                    }
                }
                let mut v = 0usize;
                for r in 0..s {
                    let len = q + 1 + r;
                    let at_end = last_chain && r + 1 == s;
                    let cp = self.red.checkpoint();
                    let mut feed = self.feed_block(x, len, at_end);
                    let mut violated = feed.violated(i);
                    if violated && v + 1 == d {
                        if c >= s {
                            return Err(Error::Construction(format!(
                                "chain {chain}: more than {s} gadget insertions"
                            )));
                        }
                        self.red.rollback(cp);
                        let g = gadgets.word(x, i, c)?;
                        self.red.feed(&g);
                        self.append(SegmentKind::Gadget { chain, i, c }, &g, 0..g.len())?;
                        feed = self.feed_block(x, len, at_end);
                        c += 1;
                        violated = feed.violated(i);
                        if violated {
                            d += 1;
                        }
                    }
                    if violated {
                        v += 1;
                    }
                    self.append(SegmentKind::Regular { chain, prefix_len: len }, x, 0..len)?;
                }
            }
        }

        self.sources.push(x.clone());
        let info = ChainInfo {
            source: self.sources.len() - 1,
            q,
            s,
            initial_violations: counts,
            chosen_i,
            gadgets: c,
            final_c: c,
            final_d: d,
            start,
            end: self.word.len(),
        };
        self.chains.push(info.clone());
        Ok(info)
    }

    /// Smallest word, in length-lexicographic order, that is a red block once
    /// the first half of the chain has been fed but is not a green block of
    /// the word through the whole chain. Green blocks of the chain itself are
    /// the prefixes of `x`; older green blocks are the nodes below
    /// `green_mark`. Leaves the red parser at the half point.
    fn smallest_fresh_word(&mut self, x: &Word, q: usize, green_mark: usize, m: usize) -> Result<Word> {
        let half_len = x.len() / 2 + 1;
        for len in q + 1..=half_len {
            self.feed_block(x, len, false);
        }
        let mut queue: VecDeque<(u32, Option<u32>, bool, usize)> = VecDeque::from([(0, Some(0), true, 0)]);
        while let Some((r, g, on_x, depth)) = queue.pop_front() {
            for b in 0..2u8 {
                let Some(rc) = self.red.child(r, b) else { continue };
                let gc = g.and_then(|g| self.green.child_below(g, b, green_mark));
                let on_x = on_x && depth < x.len() && x.bit(depth) == b;
                if gc.is_none() && !on_x {
                    let u = self.red.node_word(rc);
                    if u.len() > m {
                        return Err(Error::Construction(format!(
                            "smallest fresh red word has length {} > m = {m}",
                            u.len()
                        )));
                    }
                    return Ok(u);
                }
                queue.push_back((rc, gc, on_x, depth + 1));
            }
        }
        Err(Error::Construction("no red word outside the green dictionary".into()))
    }

    pub fn pad_to(&mut self, n: usize) -> Result<()> {
        let len = self.word.len();
        if len > n {
            return Err(Error::Construction(format!(
                "constructed word has length {len} > target {n}"
            )));
        }
        if len < n {
            let start = len;
            self.word.push_repeat(0, n - len);
            self.segments.push(Segment {
                kind: SegmentKind::Padding,
                start,
                len: n - len,
            });
        }
        Ok(())
    }

    pub fn finish(self) -> ConstructedWord {
        ConstructedWord {
            word: self.word,
            segments: self.segments,
            chains: self.chains,
            sources: self.sources,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn toy_gadget_words() {
        let x = w("0111010001");
        assert_eq!(Gadgets::Toy.word(&x, 0, 3).unwrap().to_text(), "1000");
        assert_eq!(Gadgets::Toy.word(&x, 2, 2).unwrap().to_text(), "01011");
    }

    #[test]
    fn general_gadget_words() {
        let x = w("1011001110");
        let g = Gadgets::General { m: 3, u: Some(w("01")) };
        assert_eq!(g.word(&x, 0, 2).unwrap().to_text(), "0111");
        // m' = 3, v = 101 111...
        assert_eq!(g.word(&x, 2, 5).unwrap().to_text(), "1010".to_string() + "10111");
        assert_eq!(g.word(&x, 4, 0).unwrap().to_text(), "10111");
    }

    #[test]
    fn chain_without_violations_is_pref() {
        let x = w("0110");
        let mut b = ChainBuilder::new();
        b.add_chain(&x, 0, 0, Gadgets::Toy, true).unwrap();
        let cw = b.finish();
        assert_eq!(cw.word, crate::gen::pref(&x));
        assert_eq!(cw.segments.len(), 4);
    }
}
