//! Bit-packed binary words.
//!
//! Letters are stored 64 to a machine word, little-endian within each `u64`
//! (letter `i` lives at bit `i % 64` of word `i / 64`). Unused high bits of the
//! last machine word are always zero so that derived equality and hashing are
//! exact.
//!
//! Two external encodings exist: the canonical ASCII text form (`'0'`/`'1'`,
//! optional trailing newline) and a packed binary form for large artifacts:
//! the magic `LZCW`, the bit length as a little-endian `u64`, then the
//! machine words as little-endian `u64`s.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const PACKED_MAGIC: &[u8; 4] = b"LZCW";

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl Word {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    /// Builds a word from machine words in the packed layout. Bits past `len`
    /// are discarded.
    pub fn from_raw_parts(mut words: Vec<u64>, len: usize) -> Self {
        assert!(words.len() * 64 >= len, "not enough machine words for {len} letters");
        words.truncate(len.div_ceil(64));
        let off = len & 63;
        if off != 0 {
            *words.last_mut().unwrap() &= low_mask(off);
        }
        Word { words, len }
    }

    /// The complement of letter `i`.
    pub fn flipped_bit(&self, i: usize) -> u8 {
        1 - self.bit(i)
    }

    /// `count` copies of `letter`.
    pub fn repeat(letter: u8, count: usize) -> Self {
        let mut w = Self::with_capacity(count);
        w.push_repeat(letter, count);
        w
    }

    pub fn from_letters<I: IntoIterator<Item = u8>>(letters: I) -> Self {
        let mut w = Self::new();
        for b in letters {
            w.push(b);
        }
        w
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<u8> {
        (i < self.len).then(|| self.bit(i))
    }

    /// Letter at `i`. Panics when `i >= len`.
    #[inline]
    pub fn bit(&self, i: usize) -> u8 {
        assert!(i < self.len, "index {i} out of range for word of length {}", self.len);
        ((self.words[i >> 6] >> (i & 63)) & 1) as u8
    }

    pub fn try_bit(&self, i: usize) -> Result<u8> {
        self.get(i).ok_or(Error::OutOfRange {
            index: i,
            len: self.len,
        })
    }

    #[inline]
    pub fn push(&mut self, letter: u8) {
        debug_assert!(letter <= 1);
        let off = self.len & 63;
        if off == 0 {
            self.words.push((letter & 1) as u64);
        } else {
            *self.words.last_mut().unwrap() |= ((letter & 1) as u64) << off;
        }
        self.len += 1;
    }

    pub fn push_repeat(&mut self, letter: u8, count: usize) {
        let fill = if letter & 1 == 1 { u64::MAX } else { 0 };
        let mut left = count;
        while left > 0 {
            let n = left.min(64);
            self.append_lsb(fill & low_mask(n), n);
            left -= n;
        }
    }

    /// Appends the letters `other[range]`.
    pub fn extend_range(&mut self, other: &Word, range: Range<usize>) {
        assert!(range.end <= other.len && range.start <= range.end);
        let mut pos = range.start;
        while pos < range.end {
            let n = (range.end - pos).min(64);
            self.append_lsb(other.read_lsb(pos, n), n);
            pos += n;
        }
    }

    pub fn extend_from(&mut self, other: &Word) {
        self.extend_range(other, 0..other.len);
    }

    /// Appends the first `n` letters of `other`.
    pub fn extend_prefix_of(&mut self, other: &Word, n: usize) {
        self.extend_range(other, 0..n);
    }

    pub fn truncate(&mut self, len: usize) {
        if len >= self.len {
            return;
        }
        self.len = len;
        self.words.truncate(len.div_ceil(64));
        let off = len & 63;
        if off != 0 {
            *self.words.last_mut().unwrap() &= low_mask(off);
        }
    }

    pub fn slice(&self, range: Range<usize>) -> Word {
        let mut w = Word::with_capacity(range.len());
        w.extend_range(self, range);
        w
    }

    pub fn prefix(&self, n: usize) -> Word {
        self.slice(0..n)
    }

    /// `a` followed by this word.
    pub fn prepend(&self, a: u8) -> Word {
        let mut w = Word::with_capacity(self.len + 1);
        w.push(a);
        w.extend_from(self);
        w
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = Word::with_capacity(self.len + other.len);
        w.extend_from(self);
        w.extend_from(other);
        w
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = u8> + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        self.len <= other.len && self.lcp(other) == self.len
    }

    /// Length of the longest common prefix.
    pub fn lcp(&self, other: &Word) -> usize {
        let n = self.len.min(other.len);
        let mut pos = 0;
        while pos < n {
            let m = (n - pos).min(64);
            let diff = self.read_lsb(pos, m) ^ other.read_lsb(pos, m);
            if diff != 0 {
                return pos + diff.trailing_zeros() as usize;
            }
            pos += m;
        }
        n
    }

    /// Letters `start..start+n` (`n <= 64`) as an integer, first letter most
    /// significant. Numeric order of equal-length windows is lexicographic.
    pub fn window(&self, start: usize, n: usize) -> u64 {
        assert!(n <= 64 && start + n <= self.len);
        let lsb = self.read_lsb(start, n);
        if n == 0 {
            0
        } else {
            lsb.reverse_bits() >> (64 - n)
        }
    }

    /// Letters `pos..pos+n` (`n <= 64`), letter `pos + t` at bit `t`.
    #[inline]
    pub(crate) fn read_lsb(&self, pos: usize, n: usize) -> u64 {
        if n == 0 {
            return 0;
        }
        let idx = pos >> 6;
        let off = pos & 63;
        let mut v = self.words[idx] >> off;
        if off + n > 64 {
            v |= self.words[idx + 1] << (64 - off);
        }
        v & low_mask(n)
    }

    #[inline]
    fn append_lsb(&mut self, bits: u64, n: usize) {
        if n == 0 {
            return;
        }
        let off = self.len & 63;
        if off == 0 {
            self.words.push(bits);
        } else {
            *self.words.last_mut().unwrap() |= bits << off;
            if off + n > 64 {
                self.words.push(bits >> (64 - off));
            }
        }
        self.len += n;
    }

    pub fn to_text(&self) -> String {
        self.iter().map(|b| if b == 1 { '1' } else { '0' }).collect()
    }

    /// Parses the ASCII form. A single trailing `\n` (or `\r\n`) is accepted.
    pub fn parse_text(s: &str) -> Result<Word> {
        let body = s.strip_suffix("\r\n").or_else(|| s.strip_suffix('\n')).unwrap_or(s);
        let mut w = Word::with_capacity(body.len());
        for (offset, ch) in body.char_indices() {
            match ch {
                '0' => w.push(0),
                '1' => w.push(1),
                found => return Err(Error::InvalidLetter { offset, found }),
            }
        }
        Ok(w)
    }

    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.words.len());
        out.extend_from_slice(PACKED_MAGIC);
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_packed_bytes(bytes: &[u8]) -> Result<Word> {
        if bytes.len() < 12 || &bytes[..4] != PACKED_MAGIC {
            return Err(Error::MalformedPacked("missing LZCW header".into()));
        }
        let len = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let payload = &bytes[12..];
        let n_words = len.div_ceil(64);
        if payload.len() != 8 * n_words {
            return Err(Error::MalformedPacked(format!(
                "bit length {len} needs {} payload bytes, found {}",
                8 * n_words,
                payload.len()
            )));
        }
        let mut words: Vec<u64> = payload
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let off = len & 63;
        if off != 0 {
            let last = words.last_mut().unwrap();
            if *last & !low_mask(off) != 0 {
                return Err(Error::MalformedPacked("nonzero padding bits".into()));
            }
        }
        words.truncate(n_words);
        Ok(Word { words, len })
    }

    /// Decodes either encoding, choosing by the `LZCW` magic.
    pub fn from_bytes(bytes: &[u8]) -> Result<Word> {
        if bytes.starts_with(PACKED_MAGIC) {
            Word::from_packed_bytes(bytes)
        } else {
            let text = std::str::from_utf8(bytes).map_err(|e| {
                let offset = e.valid_up_to();
                Error::InvalidLetter {
                    offset,
                    found: char::REPLACEMENT_CHARACTER,
                }
            })?;
            Word::parse_text(text)
        }
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Word::parse_text(s)
    }
}

impl serde::Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_text())
    }
}

impl<'de> serde::Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Word::parse_text(&s).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "Word({:?})", self.to_text())
        } else {
            write!(f, "Word(len={}, head={:?})", self.len, self.prefix(64).to_text())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn text_roundtrip_and_newline() {
        assert_eq!(w("0110\n").to_text(), "0110");
        assert_eq!(w("").len(), 0);
        assert_eq!(w("1\r\n").to_text(), "1");
    }

    #[test]
    fn rejects_bad_letter_with_offset() {
        match Word::parse_text("01x1") {
            Err(Error::InvalidLetter { offset: 2, found: 'x' }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        let x = w("01");
        assert_eq!(x.get(2), None);
        assert!(matches!(x.try_bit(5), Err(Error::OutOfRange { index: 5, len: 2 })));
    }

    #[test]
    fn window_is_msb_first() {
        let x = w("0110");
        assert_eq!(x.window(0, 4), 0b0110);
        assert_eq!(x.window(1, 2), 0b11);
    }

    #[test]
    fn truncate_clears_tail() {
        let mut a = Word::repeat(1, 70);
        a.truncate(3);
        assert_eq!(a, w("111"));
        a.push(0);
        assert_eq!(a, w("1110"));
    }

    #[test]
    fn packed_rejects_garbage() {
        assert!(Word::from_packed_bytes(b"nope").is_err());
        let mut bytes = w("101").to_packed_bytes();
        bytes[12] |= 0x80;
        assert!(Word::from_packed_bytes(&bytes).is_err());
    }

    fn arb_word(max: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec(0u8..2, 0..max).prop_map(Word::from_letters)
    }

    proptest! {
        #[test]
        fn encodings_roundtrip(x in arb_word(400)) {
            prop_assert_eq!(Word::parse_text(&x.to_text()).unwrap(), x.clone());
            prop_assert_eq!(Word::from_bytes(&x.to_packed_bytes()).unwrap(), x);
        }

        #[test]
        fn extend_range_matches_letters(x in arb_word(300), a in 0usize..300, b in 0usize..300) {
            let (lo, hi) = (a.min(b).min(x.len()), a.max(b).min(x.len()));
            let mut y = Word::repeat(1, a % 7);
            y.extend_range(&x, lo..hi);
            let expect: Vec<u8> = std::iter::repeat_n(1, a % 7).chain(x.iter().skip(lo).take(hi - lo)).collect();
            prop_assert_eq!(y.iter().collect::<Vec<_>>(), expect);
        }

        #[test]
        fn lcp_matches_naive(x in arb_word(200), y in arb_word(200)) {
            let naive = x.iter().zip(y.iter()).take_while(|(a, b)| a == b).count();
            prop_assert_eq!(x.lcp(&y), naive);
        }
    }
}
