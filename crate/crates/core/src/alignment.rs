//! Red/green alignment: the parsing of `aw` (red) against the parsing of `w`
//! (green), with `w` right-aligned inside `aw`.
//!
//! A red block covering positions `[s, e)` of `aw` covers `[s-1, e-1)` of `w`.
//! Green block indices are 0-based.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lz::{parse, parse_prepended, Block, Parsing};
use crate::word::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedClass {
    /// The block made of the prepended letter.
    First,
    /// Overlaps two or more green blocks.
    Junction,
    /// Starts at offset `i` of green block `green` and ends inside it.
    Offset { i: usize, green: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenKind {
    #[default]
    Regular,
    Gadget,
    Padding,
}

#[derive(Clone, Debug)]
pub struct AlignedParsing {
    pub letter: u8,
    pub green: Parsing,
    pub red: Parsing,
    pub classes: Vec<RedClass>,
    pub green_kinds: Vec<GreenKind>,
}

/// Classifies every red block of `aw` against the green blocks of `w`.
pub fn classify(green: &Parsing, red: &Parsing) -> Vec<RedClass> {
    let gb = green.blocks();
    let mut classes = Vec::with_capacity(red.block_count());
    let mut g = 0usize;
    for (r, b) in red.blocks().iter().enumerate() {
        if r == 0 {
            classes.push(RedClass::First);
            continue;
        }
        let (rs, re) = (b.start - 1, b.end() - 1);
        while gb[g].end() <= rs {
            g += 1;
        }
        if re <= gb[g].end() {
            classes.push(RedClass::Offset {
                i: rs - gb[g].start,
                green: g,
            });
        } else {
            classes.push(RedClass::Junction);
        }
    }
    classes
}

/// Aligns the parsings of `w` and `aw`. `green_kinds`, when given, tags each
/// green block; untagged blocks are regular.
pub fn align(w: &Word, a: u8, green_kinds: Option<Vec<GreenKind>>) -> Result<AlignedParsing> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    let green = parse(w);
    let red = parse_prepended(a, w);
    align_parsings(a, green, red, green_kinds)
}

pub fn align_parsings(
    letter: u8,
    green: Parsing,
    red: Parsing,
    green_kinds: Option<Vec<GreenKind>>,
) -> Result<AlignedParsing> {
    let green_kinds = green_kinds.unwrap_or_else(|| vec![GreenKind::Regular; green.block_count()]);
    if green_kinds.len() != green.block_count() {
        return Err(Error::Parameter(format!(
            "{} green tags for {} green blocks",
            green_kinds.len(),
            green.block_count()
        )));
    }
    let classes = classify(&green, &red);
    Ok(AlignedParsing {
        letter,
        green,
        red,
        classes,
        green_kinds,
    })
}

/// Number of regular green blocks that are `i`-violated, for every `i`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationTable {
    pub counts: BTreeMap<usize, usize>,
    /// Number of regular green blocks.
    pub s: usize,
}

impl ViolationTable {
    pub fn get(&self, i: usize) -> usize {
        self.counts.get(&i).copied().unwrap_or(0)
    }

    pub fn max(&self) -> Option<(usize, usize)> {
        self.counts
            .iter()
            .map(|(&i, &c)| (i, c))
            .max_by_key(|&(i, c)| (c, std::cmp::Reverse(i)))
    }

    /// Largest `counts[i] + counts[i']` over pairs `i != i'`.
    pub fn max_pair_sum(&self) -> usize {
        let mut top: Vec<usize> = self.counts.values().copied().collect();
        top.sort_unstable_by(|a, b| b.cmp(a));
        top.iter().take(2).sum()
    }
}

/// Offsets `i` for which each green block is `i`-violated.
pub fn violated_offsets(ap: &AlignedParsing) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); ap.green.block_count()];
    for c in &ap.classes {
        if let RedClass::Offset { i, green } = *c {
            out[green].push(i);
        }
    }
    out
}

pub fn violation_table(ap: &AlignedParsing) -> ViolationTable {
    let mut t = ViolationTable::default();
    for (g, offsets) in violated_offsets(ap).into_iter().enumerate() {
        if ap.green_kinds[g] != GreenKind::Regular {
            continue;
        }
        t.s += 1;
        for i in offsets {
            *t.counts.entry(i).or_insert(0) += 1;
        }
    }
    t
}

/// Piece of a red block lying inside one green block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub red: usize,
    /// Offset of the piece inside the green block.
    pub offset: usize,
    pub len: usize,
}

/// For each green block, the red pieces that tile it, left to right.
pub fn coverage_profile(ap: &AlignedParsing) -> Vec<Vec<Coverage>> {
    let gb = ap.green.blocks();
    let mut out = vec![Vec::new(); gb.len()];
    let mut g = 0usize;
    for (r, b) in ap.red.blocks().iter().enumerate().skip(1) {
        let (mut pos, re) = (b.start - 1, b.end() - 1);
        while pos < re {
            while gb[g].end() <= pos {
                g += 1;
            }
            let end = re.min(gb[g].end());
            out[g].push(Coverage {
                red: r,
                offset: pos - gb[g].start,
                len: end - pos,
            });
            pos = end;
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub schema: u32,
    pub letter: u8,
    pub green: Vec<Block>,
    pub red: Vec<Block>,
    pub classes: Vec<RedClass>,
    pub violations: BTreeMap<usize, usize>,
}

impl AlignmentReport {
    pub fn new(ap: &AlignedParsing) -> Self {
        AlignmentReport {
            schema: 1,
            letter: ap.letter,
            green: ap.green.blocks().to_vec(),
            red: ap.red.blocks().to_vec(),
            classes: ap.classes.clone(),
            violations: violation_table(ap).counts,
        }
    }
}
