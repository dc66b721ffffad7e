//! Structured word generators: de Bruijn sequences, prefix concatenations,
//! the worst-case word, and occurrence counting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::word::Word;

/// Largest supported de Bruijn order (the census table has `2^k` entries).
pub const MAX_DB_ORDER: u32 = 30;

/// Cyclic de Bruijn sequence of order `k` (length `2^k`), as letters.
///
/// Eulerian circuit on the shift graph over `(k-1)`-letter nodes, found with
/// an iterative Hierholzer walk from node `0`. Each node tries its outgoing
/// letters in the order `[0, 1]`, or in a seeded random order.
fn de_bruijn_cycle(k: u32, seed: Option<u64>) -> Vec<u8> {
    let nodes = 1usize << (k - 1);
    let mask = nodes - 1;
    let mut order = vec![[0u8, 1u8]; nodes];
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for o in order.iter_mut() {
            o.shuffle(&mut rng);
        }
    }
    let mut used = vec![0u8; nodes];
    // Stack of (node, letter of the edge that reached it).
    let mut stack: Vec<(usize, u8)> = vec![(0, 2)];
    let mut circuit = Vec::with_capacity(1 << k);
    while let Some(&(v, _)) = stack.last() {
        if used[v] < 2 {
            let b = order[v][used[v] as usize];
            used[v] += 1;
            stack.push((((v << 1) | b as usize) & mask, b));
        } else {
            let (_, b) = stack.pop().unwrap();
            if b != 2 {
                circuit.push(b);
            }
        }
    }
    circuit.reverse();
    debug_assert_eq!(circuit.len(), 1 << k);
    circuit
}

/// A de Bruijn word of order `k`: length `2^k + k - 1`, every `k`-letter word
/// occurring exactly once.
///
/// The cyclic sequence is rotated so that `require_prefix` leads, then the
/// first `k - 1` letters are appended. Output is deterministic for fixed
/// arguments; `seed` varies the Eulerian tie-breaking.
pub fn de_bruijn(k: u32, require_prefix: Option<&Word>, seed: Option<u64>) -> Result<Word> {
    if k == 0 || k > MAX_DB_ORDER {
        return Err(Error::Parameter(format!(
            "de Bruijn order must be in 1..={MAX_DB_ORDER}, got {k}"
        )));
    }
    let cycle = de_bruijn_cycle(k, seed);
    let n = cycle.len();
    let total = n + k as usize - 1;
    let at = |r: usize, t: usize| cycle[(r + t) % n];
    let rotation = match require_prefix {
        None => 0,
        Some(prefix) => {
            let impossible = || Error::ImpossiblePrefix {
                k,
                prefix: prefix.to_text(),
            };
            if prefix.len() > total {
                return Err(impossible());
            }
            (0..n)
                .find(|&r| prefix.iter().enumerate().all(|(t, b)| at(r, t) == b))
                .ok_or_else(impossible)?
        }
    };
    let mut w = Word::with_capacity(total);
    for t in 0..total {
        w.push(at(rotation, t));
    }
    Ok(w)
}

/// Counts of every `k`-letter window of `w`, indexed by the window's value
/// (first letter most significant).
pub fn kgram_counts(w: &Word, k: usize) -> Vec<u32> {
    assert!(k <= MAX_DB_ORDER as usize, "census width {k} too large");
    let mut counts = vec![0u32; 1 << k];
    if k == 0 {
        counts[0] = (w.len() + 1) as u32;
        return counts;
    }
    if w.len() < k {
        return counts;
    }
    let mask = (1u64 << k) - 1;
    let mut h = w.window(0, k - 1);
    for i in k - 1..w.len() {
        h = ((h << 1) | w.bit(i) as u64) & mask;
        counts[h as usize] += 1;
    }
    counts
}

pub fn is_de_bruijn(w: &Word, k: u32) -> bool {
    if k == 0 || k > MAX_DB_ORDER {
        return false;
    }
    w.len() == (1usize << k) + k as usize - 1 && kgram_counts(w, k as usize).iter().all(|&c| c == 1)
}

/// `pref_{>p}(x)`: the prefixes of `x` of lengths `p+1, …, |x|`, concatenated.
pub fn pref_gt(x: &Word, p: usize) -> Result<Word> {
    if p >= x.len() {
        return Err(Error::OutOfRange { index: p, len: x.len() });
    }
    Ok(pref_from(x, p + 1))
}

/// `pref(x) = x_0 . x_0x_1 . … . x`.
pub fn pref(x: &Word) -> Word {
    pref_from(x, 1)
}

fn pref_from(x: &Word, first_len: usize) -> Word {
    let l = x.len();
    let total = (first_len..=l).sum::<usize>();
    let mut w = Word::with_capacity(total);
    for len in first_len..=l {
        w.extend_prefix_of(x, len);
    }
    w
}

/// Concatenation, in length-lexicographic order, of every word of length
/// `1..=n`. Its parsing has the largest possible number of blocks.
pub fn worst_case_word(n: u32) -> Result<Word> {
    if n == 0 || n > 28 {
        return Err(Error::Parameter(format!(
            "worst-case word length must be in 1..=28, got {n}"
        )));
    }
    let total = (n as usize - 1) * (1usize << (n + 1)) + 2;
    let mut w = Word::with_capacity(total);
    for len in 1..=n {
        for v in 0u64..(1u64 << len) {
            for t in (0..len).rev() {
                w.push(((v >> t) & 1) as u8);
            }
        }
    }
    Ok(w)
}

/// Number of (possibly overlapping) occurrences of `u` in `w`.
pub fn occurrences(w: &Word, u: &Word) -> Result<usize> {
    if u.is_empty() {
        return Err(Error::EmptyWord);
    }
    let m = u.len();
    if m > w.len() {
        return Ok(0);
    }
    if m <= 64 {
        let target = u.window(0, m);
        let mask = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        let mut h = w.window(0, m - 1);
        let mut count = 0;
        for i in m - 1..w.len() {
            h = ((h << 1) | w.bit(i) as u64) & mask;
            count += (h == target) as usize;
        }
        Ok(count)
    } else {
        Ok((0..=w.len() - m).filter(|&s| w.slice(s..s + m) == *u).count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn small_orders() {
        assert!(is_de_bruijn(&w("0001011100"), 3));
        assert!(!is_de_bruijn(&w("0000"), 2));
        let d1 = de_bruijn(1, None, None).unwrap();
        assert_eq!(d1.len(), 2);
        assert!(is_de_bruijn(&d1, 1));
        let d4 = de_bruijn(4, None, None).unwrap();
        assert_eq!(d4.len(), 19);
        assert!(is_de_bruijn(&d4, 4));
    }

    #[test]
    fn required_prefix_leads() {
        for k in 2..=10 {
            let x = de_bruijn(k, Some(&w("01")), None).unwrap();
            assert!(x.to_text().starts_with("01"));
            assert!(is_de_bruijn(&x, k));
        }
        assert!(matches!(
            de_bruijn(2, Some(&w("000000")), None),
            Err(Error::ImpossiblePrefix { .. })
        ));
        assert!(matches!(
            de_bruijn(2, Some(&w("00000")), None),
            Err(Error::ImpossiblePrefix { .. })
        ));
    }

    #[test]
    fn seeds_vary_but_stay_valid() {
        let base = de_bruijn(8, Some(&w("01")), None).unwrap();
        let mut distinct = 0;
        for seed in 0..5 {
            let x = de_bruijn(8, Some(&w("01")), Some(seed)).unwrap();
            assert!(is_de_bruijn(&x, 8));
            assert_eq!(x, de_bruijn(8, Some(&w("01")), Some(seed)).unwrap());
            distinct += (x != base) as usize;
        }
        assert!(distinct > 0);
    }

    #[test]
    fn prefix_words() {
        assert_eq!(pref(&w("011")).to_text(), "001011");
        assert_eq!(pref_gt(&w("011"), 1).unwrap().to_text(), "01011");
        assert!(pref_gt(&w("011"), 3).is_err());
        assert_eq!(pref(&Word::new()), Word::new());
    }

    #[test]
    fn worst_case_small() {
        assert_eq!(worst_case_word(1).unwrap().to_text(), "01");
        assert_eq!(worst_case_word(2).unwrap().to_text(), "0100011011");
        assert_eq!(worst_case_word(5).unwrap().len(), 258);
    }

    #[test]
    fn occurrence_counts() {
        assert_eq!(occurrences(&w("0001011100"), &w("00")).unwrap(), 3);
        let x = w("0110");
        assert_eq!(occurrences(&x, &x).unwrap(), 1);
        assert!(occurrences(&x, &Word::new()).is_err());
        let long = Word::repeat(1, 100);
        assert_eq!(occurrences(&Word::repeat(1, 130), &long).unwrap(), 31);
    }
}
