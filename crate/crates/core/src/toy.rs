//! The de Bruijn construction: `pref(x)` for `x ∈ DB(k)` starting with `01`,
//! with gadgets inserted to cap the number of offset violations, so that `w`
//! compresses in `O(√|w|)` blocks while `0w` needs `Ω(|w|^{3/4})`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::alignment::{align_parsings, violation_table};
use crate::construct::{ChainBuilder, ConstructedWord, Gadgets};
use crate::error::{Error, Result};
use crate::gen::de_bruijn;
use crate::lz::{parse, parse_prepended, PrependCheck};
use crate::word::Word;

pub const DEFAULT_GAMMA: f64 = 3.0;

/// Largest offset that can trigger gadgets, `⌊γk⌋`.
pub fn gadget_window(k: u32, gamma: f64) -> usize {
    (gamma * k as f64).floor() as usize
}

/// Builds the word for a `DB(k)` starting with `01`. `db_seed` selects the
/// Eulerian tie-breaking of the de Bruijn generator (`None` is canonical).
pub fn construct_toy(k: u32, gamma: f64, db_seed: Option<u64>) -> Result<ConstructedWord> {
    if k < 5 {
        return Err(Error::Parameter(format!("order k must be at least 5, got {k}")));
    }
    if gamma < 3.0 || !gamma.is_finite() {
        return Err(Error::Parameter(format!("gamma must be at least 3, got {gamma}")));
    }
    let x = de_bruijn(k, Some(&"01".parse()?), db_seed)?;
    construct_toy_from(&x, gadget_window(k, gamma))
}

/// Runs the construction on an arbitrary source word with the given gadget
/// window.
pub fn construct_toy_from(x: &Word, window: usize) -> Result<ConstructedWord> {
    if x.is_empty() || window >= x.len() {
        return Err(Error::Parameter(format!(
            "gadget window {window} must be below the source length {}",
            x.len()
        )));
    }
    let mut b = ChainBuilder::new();
    b.add_chain(x, 0, window, Gadgets::Toy, true)?;
    Ok(b.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub schema: u32,
    /// `|w|`.
    pub n: usize,
    pub s: usize,
    pub k: u32,
    pub gamma: f64,
    pub letter: u8,
    pub dic_w: usize,
    pub dic_0w: usize,
    pub chosen_i: Option<usize>,
    pub gadget_count: usize,
    /// Violations of the final word for offsets `0..=⌊γk⌋` (zero counts omitted).
    pub violations: BTreeMap<usize, usize>,
    pub size_bound: f64,
    pub size_ok: bool,
    pub violation_cap: f64,
    pub violation_cap_ok: bool,
    /// Largest `counts[i] + counts[i']` over all offsets, against `s`.
    pub pair_sum_max: usize,
    pub pair_sum_ok: bool,
    /// Every green block is a prefix of `x` or a gadget.
    pub green_synchronized: bool,
    /// Parsing tree of `w` is one path of depth `s` plus at most one side
    /// branch of at most `⌈s/2⌉` vertices.
    pub tree_shape_ok: bool,
    /// `|dic(aw)| / |w|^{3/4}`, to compare with the asymptotic 0.039.
    pub growth_ratio: f64,
    pub growth_target: f64,
    /// `|dic(aw)| / sqrt(|w| |dic(w)|)`; at most 3 for every word.
    pub prepend_ratio: f64,
    pub prepend_ok: bool,
}

impl ToyReport {
    pub fn bounds_ok(&self) -> bool {
        self.size_ok && self.violation_cap_ok && self.pair_sum_ok && self.prepend_ok
    }
}

pub fn verify_toy(cw: &ConstructedWord, k: u32, gamma: f64) -> Result<ToyReport> {
    one_front_variant(cw, k, gamma, 0)
}

/// Report for `aw` with either front letter.
pub fn one_front_variant(cw: &ConstructedWord, k: u32, gamma: f64, a: u8) -> Result<ToyReport> {
    let chain = cw
        .chains
        .first()
        .ok_or_else(|| Error::Parameter("word has no chain".into()))?;
    let w = &cw.word;
    let s = chain.s;
    let window = gadget_window(k, gamma);
    let green = parse(w);
    let red = parse_prepended(a, w);
    let (dic_w, dic_aw) = (green.dic_size(), red.dic_size());
    let (kinds, green_synchronized) = cw.green_kinds(&green);
    let stats = green.tree_stats();
    let degrees = green.out_degrees();
    let branching = degrees.iter().filter(|&&d| d == 2).count();
    let tree_shape_ok = stats.max_depth == s && branching <= 1 && stats.vertex_count <= s + (s - s / 2) + 1;
    let ap = align_parsings(a, green, red, Some(kinds))?;
    let table = violation_table(&ap);

    let n = w.len();
    let size_bound = 3.0 * (2.0f64 / 5.0).sqrt() * (n as f64).sqrt();
    let violation_cap = s as f64 / 2.0 + (1.0 + gamma) * k as f64 + 1.0;
    let violations: BTreeMap<usize, usize> = table
        .counts
        .iter()
        .filter(|(&i, _)| i <= window)
        .map(|(&i, &c)| (i, c))
        .collect();
    let violation_cap_ok = violations.values().all(|&c| c as f64 <= violation_cap);
    let pair_sum_max = table.max_pair_sum();
    let prepend = PrependCheck {
        letter: a,
        len: n,
        dic_w,
        dic_aw,
        ratio: dic_aw as f64 / ((n * dic_w) as f64).sqrt(),
    };
    Ok(ToyReport {
        schema: 1,
        n,
        s,
        k,
        gamma,
        letter: a,
        dic_w,
        dic_0w: dic_aw,
        chosen_i: chain.chosen_i,
        gadget_count: cw.gadget_count(),
        violations,
        size_bound,
        size_ok: dic_w as f64 <= size_bound,
        violation_cap,
        violation_cap_ok,
        pair_sum_max,
        pair_sum_ok: pair_sum_max <= s,
        green_synchronized,
        tree_shape_ok,
        growth_ratio: dic_aw as f64 / (n as f64).powf(0.75),
        growth_target: 0.039,
        prepend_ratio: prepend.ratio,
        prepend_ok: prepend.holds(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::pref;

    #[test]
    fn rejects_small_parameters() {
        assert!(matches!(construct_toy(4, 3.0, None), Err(Error::Parameter(_))));
        assert!(matches!(construct_toy(7, 2.0, None), Err(Error::Parameter(_))));
    }

    #[test]
    fn small_order_report() {
        let cw = construct_toy(7, 3.0, None).unwrap();
        assert_eq!(cw.regular_word(), pref(&cw.sources[0]));
        let r = verify_toy(&cw, 7, 3.0).unwrap();
        assert!(r.green_synchronized);
        assert!(r.bounds_ok(), "{r:?}");
        assert_eq!(r.s, 134);
    }
}
