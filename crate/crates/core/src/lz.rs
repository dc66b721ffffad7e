//! LZ'78 parsing, encoding and dictionary statistics.
//!
//! The dictionary is a binary trie stored as parallel arrays. Node 0 is the
//! empty word and node `b + 1` is the block with index `b`, so a node id is
//! also a block index and parents always have smaller ids than their children.
//! Only the last block of a parsing can repeat an earlier block; it then has
//! no node of its own.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::word::Word;

const NONE: u32 = 0;

/// Block of a parsing, as a span into the parsed word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub start: usize,
    pub len: usize,
}

impl Block {
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// Trie arena shared by the streaming parser and finished parsings.
#[derive(Clone, Debug)]
struct Trie {
    children: Vec<[u32; 2]>,
    parent: Vec<u32>,
    letter: Vec<u8>,
    depth: Vec<u32>,
}

impl Trie {
    fn new() -> Self {
        Trie {
            children: vec![[NONE; 2]],
            parent: vec![u32::MAX],
            letter: vec![0],
            depth: vec![0],
        }
    }

    fn len(&self) -> usize {
        self.children.len()
    }

    fn add(&mut self, parent: u32, letter: u8) -> u32 {
        let id = self.children.len() as u32;
        self.children.push([NONE; 2]);
        self.parent.push(parent);
        self.letter.push(letter);
        self.depth.push(self.depth[parent as usize] + 1);
        self.children[parent as usize][letter as usize] = id;
        id
    }

    fn truncate(&mut self, len: usize) {
        for id in (len..self.children.len()).rev() {
            let p = self.parent[id] as usize;
            self.children[p][self.letter[id] as usize] = NONE;
        }
        self.children.truncate(len);
        self.parent.truncate(len);
        self.letter.truncate(len);
        self.depth.truncate(len);
    }

    fn word_of(&self, mut node: u32) -> Word {
        let mut rev = Vec::with_capacity(self.depth[node as usize] as usize);
        while node != 0 {
            rev.push(self.letter[node as usize]);
            node = self.parent[node as usize];
        }
        Word::from_letters(rev.into_iter().rev())
    }
}

/// Saved state of an [`LzParser`]; restoring it undoes everything fed since.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    nodes: usize,
    cur: u32,
    pos: usize,
    phrase_start: usize,
}

/// Letter-at-a-time LZ'78 parser.
///
/// Nodes are only ever appended, so a checkpoint is just the arena length plus
/// the cursor, and rolling back truncates the arena.
#[derive(Clone, Debug)]
pub struct LzParser {
    trie: Trie,
    cur: u32,
    pos: usize,
    phrase_start: usize,
}

impl Default for LzParser {
    fn default() -> Self {
        Self::new()
    }
}

impl LzParser {
    pub fn new() -> Self {
        LzParser {
            trie: Trie::new(),
            cur: 0,
            pos: 0,
            phrase_start: 0,
        }
    }

    /// Feeds one letter; returns true when it completes a new block.
    #[inline]
    pub fn push(&mut self, letter: u8) -> bool {
        let next = self.trie.children[self.cur as usize][letter as usize];
        self.pos += 1;
        if next != NONE {
            self.cur = next;
            false
        } else {
            self.trie.add(self.cur, letter);
            self.cur = 0;
            self.phrase_start = self.pos;
            true
        }
    }

    pub fn feed(&mut self, w: &Word) {
        self.feed_range(w, 0..w.len());
    }

    pub fn feed_range(&mut self, w: &Word, range: std::ops::Range<usize>) {
        for i in range {
            self.push(w.bit(i));
        }
    }

    /// Letters consumed so far.
    pub fn position(&self) -> usize {
        self.pos
    }

    /// Start of the block currently being read.
    pub fn phrase_start(&self) -> usize {
        self.phrase_start
    }

    /// Number of completed (hence distinct) blocks.
    pub fn dic_size(&self) -> usize {
        self.trie.len() - 1
    }

    /// True when the letters since the last completed block form a
    /// non-empty (necessarily duplicate) partial block.
    pub fn has_partial(&self) -> bool {
        self.cur != 0
    }

    pub fn node_count(&self) -> usize {
        self.trie.len()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            nodes: self.trie.len(),
            cur: self.cur,
            pos: self.pos,
            phrase_start: self.phrase_start,
        }
    }

    pub fn rollback(&mut self, cp: Checkpoint) {
        assert!(
            cp.nodes <= self.trie.len() && cp.pos <= self.pos,
            "checkpoint is from the future"
        );
        self.trie.truncate(cp.nodes);
        self.cur = cp.cur;
        self.pos = cp.pos;
        self.phrase_start = cp.phrase_start;
    }

    /// Child of `node` by `letter`, restricted to nodes with id `< limit`.
    pub fn child_below(&self, node: u32, letter: u8, limit: usize) -> Option<u32> {
        let c = self.trie.children[node as usize][letter as usize];
        (c != NONE && (c as usize) < limit).then_some(c)
    }

    pub fn child(&self, node: u32, letter: u8) -> Option<u32> {
        self.child_below(node, letter, usize::MAX)
    }

    pub fn node_word(&self, node: u32) -> Word {
        self.trie.word_of(node)
    }

    pub fn node_depth(&self, node: u32) -> usize {
        self.trie.depth[node as usize] as usize
    }

    /// Finishes the stream, producing the parsing of everything fed.
    pub fn finish(self) -> Parsing {
        let LzParser {
            trie,
            cur,
            pos,
            phrase_start,
        } = self;
        let mut blocks = Vec::with_capacity(trie.len());
        let mut start = 0usize;
        for id in 1..trie.len() {
            let len = trie.depth[id] as usize;
            blocks.push(Block { start, len });
            start += len;
        }
        let dup_node = (cur != 0).then_some(cur);
        if let Some(node) = dup_node {
            blocks.push(Block {
                start: phrase_start,
                len: trie.depth[node as usize] as usize,
            });
        }
        debug_assert_eq!(blocks.last().map_or(0, Block::end), pos);
        Parsing {
            blocks,
            trie,
            dup_node,
            word_len: pos,
        }
    }
}

/// The LZ'78 parsing of one word.
#[derive(Clone, Debug)]
pub struct Parsing {
    blocks: Vec<Block>,
    trie: Trie,
    dup_node: Option<u32>,
    word_len: usize,
}

pub fn parse(w: &Word) -> Parsing {
    let mut p = LzParser::new();
    p.feed(w);
    p.finish()
}

/// Parsing of `a` followed by `w`, without materializing `aw`.
pub fn parse_prepended(a: u8, w: &Word) -> Parsing {
    let mut p = LzParser::new();
    p.push(a);
    p.feed(w);
    p.finish()
}

impl Parsing {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// `|dic(w)|`, the number of distinct blocks.
    pub fn dic_size(&self) -> usize {
        self.trie.len() - 1
    }

    pub fn last_is_duplicate(&self) -> bool {
        self.dup_node.is_some()
    }

    pub fn word_len(&self) -> usize {
        self.word_len
    }

    /// Trie node holding block `b`.
    pub fn block_node(&self, b: usize) -> u32 {
        match self.dup_node {
            Some(node) if b + 1 == self.blocks.len() => node,
            _ => (b + 1) as u32,
        }
    }

    pub fn block_word(&self, b: usize) -> Word {
        self.trie.word_of(self.block_node(b))
    }

    /// Vertices of the parsing tree, `{ε} ∪ dic(w)`.
    pub fn vertex_count(&self) -> usize {
        self.trie.len()
    }

    /// Words of all trie vertices (including ε) in node order.
    pub fn dictionary(&self) -> Vec<Word> {
        (0..self.trie.len() as u32).map(|n| self.trie.word_of(n)).collect()
    }

    pub fn encode(&self) -> LzCode {
        let entries = (0..self.blocks.len())
            .map(|b| {
                let node = self.block_node(b) as usize;
                let parent = self.trie.parent[node];
                CodeEntry {
                    pred: if parent == 0 { -1 } else { parent as i64 - 1 },
                    letter: self.trie.letter[node],
                }
            })
            .collect();
        LzCode { entries }
    }

    /// Number of distinct length-`i` factors over all blocks.
    ///
    /// The dictionary is prefix-closed, so the factors of its words are the
    /// length-`i` suffixes of its vertices.
    pub fn factor_census(&self, i: usize) -> usize {
        if i == 0 {
            return 1;
        }
        let t = &self.trie;
        if i <= 64 {
            let mask = if i == 64 { u64::MAX } else { (1u64 << i) - 1 };
            let mut window = vec![0u64; t.len()];
            let mut seen = HashSet::new();
            for v in 1..t.len() {
                let p = t.parent[v] as usize;
                window[v] = ((window[p] << 1) | t.letter[v] as u64) & mask;
                if t.depth[v] as usize >= i {
                    seen.insert(window[v]);
                }
            }
            seen.len()
        } else {
            let mut seen = HashSet::new();
            for v in 1..t.len() {
                if (t.depth[v] as usize) < i {
                    continue;
                }
                let mut node = v as u32;
                let mut suffix = Vec::with_capacity(i);
                for _ in 0..i {
                    suffix.push(t.letter[node as usize]);
                    node = t.parent[node as usize];
                }
                seen.insert(suffix);
            }
            seen.len()
        }
    }

    pub fn tree_stats(&self) -> TreeStats {
        let max_depth = self.trie.depth.iter().copied().max().unwrap_or(0) as usize;
        let mut depth_histogram = vec![0usize; max_depth + 1];
        for &d in &self.trie.depth {
            depth_histogram[d as usize] += 1;
        }
        TreeStats {
            vertex_count: self.trie.len(),
            depth_histogram,
            max_depth,
        }
    }

    /// Number of children of each vertex, in node order.
    pub fn out_degrees(&self) -> Vec<u8> {
        self.trie
            .children
            .iter()
            .map(|c| (c[0] != NONE) as u8 + (c[1] != NONE) as u8)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub vertex_count: usize,
    pub depth_histogram: Vec<usize>,
    pub max_depth: usize,
}

/// One code entry: predecessor block index (`-1` for ε) and appended letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeEntry {
    pub pred: i64,
    pub letter: u8,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LzCode {
    pub entries: Vec<CodeEntry>,
}

impl LzCode {
    pub fn decode(&self) -> Result<Word> {
        let mut out = Word::new();
        let mut spans: Vec<(usize, usize)> = Vec::with_capacity(self.entries.len());
        for (idx, e) in self.entries.iter().enumerate() {
            if e.letter > 1 {
                return Err(Error::MalformedCode {
                    entry: idx,
                    pred: e.pred.max(0) as usize,
                });
            }
            let start = out.len();
            let len = if e.pred < 0 {
                0
            } else {
                let pred = e.pred as usize;
                if pred >= idx {
                    return Err(Error::MalformedCode { entry: idx, pred });
                }
                let (s, l) = spans[pred];
                let seg = out.slice(s..s + l);
                out.extend_from(&seg);
                l
            };
            out.push(e.letter);
            spans.push((start, len + 1));
        }
        Ok(out)
    }
}

pub fn encode(p: &Parsing) -> LzCode {
    p.encode()
}

pub fn decode(c: &LzCode) -> Result<Word> {
    c.decode()
}

/// `|dic| log2 |dic| / |w|` given a dictionary size.
pub fn comp_from_dic(dic: usize, len: usize) -> f64 {
    if dic <= 1 {
        0.0
    } else {
        dic as f64 * (dic as f64).log2() / len as f64
    }
}

pub fn comp_ratio(w: &Word) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    Ok(comp_from_dic(parse(w).dic_size(), w.len()))
}

/// Dictionary sizes of `w` and `aw` and the ratio `|dic(aw)| / sqrt(|w| |dic(w)|)`,
/// which the prepending bound caps at 3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrependCheck {
    pub letter: u8,
    pub len: usize,
    pub dic_w: usize,
    pub dic_aw: usize,
    pub ratio: f64,
}

impl PrependCheck {
    pub const BOUND: f64 = 3.0;

    pub fn holds(&self) -> bool {
        (self.dic_aw as f64) <= Self::BOUND * ((self.len * self.dic_w) as f64).sqrt()
    }
}

pub fn prepend_check(w: &Word, a: u8) -> PrependCheck {
    let dic_w = parse(w).dic_size();
    prepend_check_with(w, a, dic_w)
}

pub fn prepend_check_with(w: &Word, a: u8, dic_w: usize) -> PrependCheck {
    let dic_aw = parse_prepended(a, w).dic_size();
    let denom = ((w.len() * dic_w) as f64).sqrt();
    let ratio = if denom == 0.0 {
        f64::INFINITY
    } else {
        dic_aw as f64 / denom
    };
    PrependCheck {
        letter: a,
        len: w.len(),
        dic_w,
        dic_aw,
        ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks_text(w: &str) -> Vec<String> {
        let w: Word = w.parse().unwrap();
        let p = parse(&w);
        p.blocks().iter().map(|b| w.slice(b.start..b.end()).to_text()).collect()
    }

    #[test]
    fn parses_reference_word() {
        assert_eq!(
            blocks_text("00010110100001"),
            ["0", "00", "1", "01", "10", "100", "001"]
        );
        assert_eq!(blocks_text("0001010100011"), ["0", "00", "1", "01", "010", "001", "1"]);
        assert!(blocks_text("").is_empty());
    }

    #[test]
    fn duplicate_last_block_is_flagged() {
        let p = parse(&"0001010100011".parse().unwrap());
        assert!(p.last_is_duplicate());
        assert_eq!(p.block_count(), 7);
        assert_eq!(p.dic_size(), 6);
        assert_eq!(p.vertex_count(), 7);
    }

    #[test]
    fn encodes_reference_word() {
        let p = parse(&"00010110100001".parse().unwrap());
        let code: Vec<(i64, u8)> = p.encode().entries.iter().map(|e| (e.pred, e.letter)).collect();
        assert_eq!(code, [(-1, 0), (0, 0), (-1, 1), (0, 1), (2, 0), (4, 0), (1, 1)]);
        let dup = parse(&"0001010100011".parse().unwrap()).encode();
        assert_eq!(dup.entries.last(), Some(&CodeEntry { pred: -1, letter: 1 }));
        assert_eq!(dup.entries[4], CodeEntry { pred: 3, letter: 0 });
    }

    #[test]
    fn decode_rejects_forward_reference() {
        let code = LzCode {
            entries: vec![CodeEntry { pred: 0, letter: 1 }],
        };
        assert!(matches!(code.decode(), Err(Error::MalformedCode { entry: 0, pred: 0 })));
        assert_eq!(LzCode::default().decode().unwrap(), Word::new());
    }

    #[test]
    fn comp_ratio_values() {
        let r = comp_ratio(&"00010110100001".parse().unwrap()).unwrap();
        assert!((r - 7.0 * 7f64.log2() / 14.0).abs() < 1e-12);
        assert!((r - 1.4037).abs() < 1e-4);
        assert_eq!(comp_ratio(&"0".parse().unwrap()).unwrap(), 0.0);
        assert!(matches!(comp_ratio(&Word::new()), Err(Error::EmptyWord)));
    }

    #[test]
    fn census_and_tree_stats() {
        let p = parse(&"00010110100001".parse().unwrap());
        assert_eq!(p.factor_census(2), 3);
        assert_eq!(p.factor_census(4), 0);
        let t = p.tree_stats();
        assert_eq!((t.vertex_count, t.max_depth), (8, 3));
        assert_eq!(t.depth_histogram, [1, 2, 3, 2]);
        let empty = parse(&Word::new()).tree_stats();
        assert_eq!((empty.vertex_count, empty.max_depth), (1, 0));
    }

    #[test]
    fn rollback_restores_parse() {
        let w: Word = "0110100110010110100101100110".parse().unwrap();
        let mut p = LzParser::new();
        p.feed_range(&w, 0..9);
        let cp = p.checkpoint();
        p.feed(&"111000111".parse().unwrap());
        p.rollback(cp);
        p.feed_range(&w, 9..w.len());
        let a = p.finish();
        let b = parse(&w);
        assert_eq!(a.blocks(), b.blocks());
        assert_eq!(a.encode(), b.encode());
    }
}
