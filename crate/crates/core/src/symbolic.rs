//! Words over finite alphabets, the Chacon block hierarchy and occurrence
//! analysis of the word `0010` inside it.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::hyperspace::{LevelSet, Sides};

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// A finite word over `{0, .., base - 1}`.
///
/// Equality, ordering and hashing look at the symbols only; the alphabet
/// size is carried along for validation and enumeration.
#[derive(Clone)]
pub struct Word {
    symbols: Vec<u8>,
    base: u8,
}

impl PartialEq for Word {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols
    }
}

impl Eq for Word {}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.symbols.cmp(&other.symbols)
    }
}

impl std::hash::Hash for Word {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.symbols.hash(state);
    }
}

impl Word {
    pub fn new(symbols: Vec<u8>, base: u8) -> Result<Self> {
        if !(2..=36).contains(&base) {
            return Err(Error::invalid(format!("alphabet size {base} outside 2..=36")));
        }
        if let Some(bad) = symbols.iter().find(|&&s| s >= base) {
            return Err(Error::invalid(format!(
                "symbol {bad} not in alphabet of size {base}"
            )));
        }
        Ok(Word { symbols, base })
    }

    pub(crate) fn from_raw(symbols: Vec<u8>, base: u8) -> Self {
        debug_assert!(symbols.iter().all(|&s| s < base));
        Word { symbols, base }
    }

    pub fn empty(base: u8) -> Self {
        Word {
            symbols: Vec::new(),
            base,
        }
    }

    /// Parses a digit string; the alphabet size must be given.
    pub fn parse(text: &str, base: u8) -> Result<Self> {
        let symbols = text
            .bytes()
            .map(|c| {
                DIGITS
                    .iter()
                    .position(|&d| d == c.to_ascii_lowercase())
                    .map(|v| v as u8)
                    .ok_or_else(|| Error::invalid(format!("bad symbol `{}`", c as char)))
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(symbols, base)
    }

    /// Parses a digit string, taking the smallest alphabet (at least 2) that holds it.
    pub fn parse_infer(text: &str) -> Result<Self> {
        let w = Word::parse(text, 36)?;
        let base = w.symbols.iter().copied().max().map_or(2, |m| (m + 1).max(2));
        Ok(Word {
            symbols: w.symbols,
            base,
        })
    }

    /// The `len`-digit base-`base` expansion of `index` (most significant first).
    pub fn from_index(mut index: u64, len: usize, base: u8) -> Self {
        let mut symbols = vec![0u8; len];
        for slot in symbols.iter_mut().rev() {
            *slot = (index % base as u64) as u8;
            index /= base as u64;
        }
        Word { symbols, base }
    }

    /// Lexicographic rank among words of the same length.
    pub fn index(&self) -> u64 {
        self.symbols
            .iter()
            .fold(0u64, |acc, &s| acc * self.base as u64 + s as u64)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn base(&self) -> u8 {
        self.base
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn subword(&self, start: usize, len: usize) -> Word {
        Word {
            symbols: self.symbols[start..start + len].to_vec(),
            base: self.base,
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Word {
            symbols,
            base: self.base.max(other.base),
        }
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.symbols.starts_with(&prefix.symbols)
    }

    /// Length of the longest common prefix.
    pub fn common_prefix(&self, other: &Word) -> usize {
        self.symbols
            .iter()
            .zip(&other.symbols)
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Every word of length `len` over an alphabet of size `base`, in lexicographic order.
    pub fn all(len: usize, base: u8) -> impl Iterator<Item = Word> {
        let count = (base as u64).pow(len as u32);
        (0..count).map(move |i| Word::from_index(i, len, base))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.symbols {
            write!(f, "{}", DIGITS[s as usize] as char)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Word::parse_infer(s)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Word::parse_infer(&text).map_err(serde::de::Error::custom)
    }
}

/// `|b_n| = (5 * 3^(n-1) - 1) / 2`.
pub fn chacon_len(n: u32) -> u64 {
    assert!((1..=38).contains(&n), "Chacon block index outside 1..=38");
    (3u64.pow(n + 1) - 1) / 2
}

/// The Chacon block `b_n`: `b_1 = 0010`, `b_{n+1} = b_n b_n 1 b_n`.
pub fn chacon_block(n: u32) -> Result<Word> {
    chacon_block_capped(n, Caps::default().block_len)
}

pub fn chacon_block_capped(n: u32, cap: u64) -> Result<Word> {
    if n == 0 {
        return Err(Error::invalid("Chacon blocks are indexed from 1"));
    }
    if n > 38 || chacon_len(n) > cap {
        let size = if n > 38 {
            format!("|b_{n}|")
        } else {
            chacon_len(n).to_string()
        };
        return Err(Error::size_limit("Chacon block length", size, cap));
    }
    let mut block = vec![0u8, 0, 1, 0];
    for _ in 1..n {
        let mut next = Vec::with_capacity(3 * block.len() + 1);
        next.extend_from_slice(&block);
        next.extend_from_slice(&block);
        next.push(1);
        next.extend_from_slice(&block);
        block = next;
    }
    Ok(Word::from_raw(block, 2))
}

/// `[|b_2| - 1, .., |b_{n_max}| - 1]`, empty when `n_max < 2`.
pub fn chacon_l(n_max: u32) -> Vec<u64> {
    (2..=n_max).map(|n| chacon_len(n) - 1).collect()
}

/// Pattern positions inside a text, with optional forbidden start differences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceReport {
    pub pattern: Word,
    pub starts: Vec<usize>,
    pub gaps: Vec<usize>,
    pub forbidden_hits: Vec<(usize, usize, u64)>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pattern_too_long: bool,
}

impl OccurrenceReport {
    pub fn gap_set(&self) -> BTreeSet<usize> {
        self.gaps.iter().copied().collect()
    }
}

/// Every start of `pattern` in `text` by direct comparison.
pub fn occurrences(text: &Word, pattern: &Word) -> OccurrenceReport {
    let (t, p) = (text.symbols(), pattern.symbols());
    if p.len() > t.len() || p.is_empty() {
        return OccurrenceReport {
            pattern: pattern.clone(),
            starts: Vec::new(),
            gaps: Vec::new(),
            forbidden_hits: Vec::new(),
            pattern_too_long: p.len() > t.len(),
        };
    }
    let starts: Vec<usize> = (0..=t.len() - p.len())
        .filter(|&i| &t[i..i + p.len()] == p)
        .collect();
    let gaps = starts.windows(2).map(|w| w[1] - w[0]).collect();
    OccurrenceReport {
        pattern: pattern.clone(),
        starts,
        gaps,
        forbidden_hits: Vec::new(),
        pattern_too_long: false,
    }
}

/// Pairs of starts whose difference lies in `distances`.
pub fn forbidden_hits(starts: &[usize], distances: &[u64]) -> Vec<(usize, usize, u64)> {
    let present: BTreeSet<usize> = starts.iter().copied().collect();
    let mut hits = Vec::new();
    for &i in starts {
        for &d in distances {
            let j = i as u64 + d;
            if d > 0 && present.contains(&(j as usize)) {
                hits.push((i, j as usize, d));
            }
        }
    }
    hits.sort_unstable();
    hits
}

/// Occurrences of `pattern` in `b_level`, flagging pairs at a distance from
/// `distances` (default: the elements of `L` below `|b_level|`).
pub fn forbidden_distance_check(
    level: u32,
    pattern: &Word,
    distances: Option<&[u64]>,
    caps: &Caps,
) -> Result<OccurrenceReport> {
    let block = chacon_block_capped(level, caps.block_len)?;
    let default: Vec<u64>;
    let distances = match distances {
        Some(d) => d,
        None => {
            default = chacon_l(level.max(2))
                .into_iter()
                .filter(|&l| l < block.len() as u64)
                .collect();
            &default
        }
    };
    let mut report = occurrences(&block, pattern);
    report.forbidden_hits = forbidden_hits(&report.starts, distances);
    Ok(report)
}

/// The length-`2 * radius + 1` subword of `b_level` centered at `j`.
pub fn chacon_orbit_window(j: u64, radius: u64, level: u32) -> Result<Word> {
    let block = chacon_block(level)?;
    if j < radius || j + radius >= block.len() as u64 {
        return Err(Error::range(format!(
            "window [{}, {}] not inside b_{level} of length {}",
            j as i64 - radius as i64,
            j + radius,
            block.len()
        )));
    }
    Ok(block.subword((j - radius) as usize, (2 * radius + 1) as usize))
}

/// The point `x_C`, read at integer coordinates.
///
/// Nonnegative coordinates follow the right-infinite limit of `b_n` (each
/// block is a prefix of the next). Negative coordinates follow the
/// left-infinite limit (each block is also a suffix of the next), so `x_C`
/// is `... b_N . b_N ...` around the origin, a concatenation that occurs in
/// `b_{N+1}`. Only a finite stretch `[-|b_N|, |b_N|)` is held in memory.
#[derive(Debug, Clone)]
pub struct ChaconPoint {
    block: Word,
    level: u32,
}

impl ChaconPoint {
    pub fn new(level: u32, caps: &Caps) -> Result<Self> {
        Ok(ChaconPoint {
            block: chacon_block_capped(level, caps.block_len)?,
            level,
        })
    }

    /// Smallest level whose stretch contains `[-reach, reach]`.
    pub fn covering(reach: u64, caps: &Caps) -> Result<Self> {
        let mut level = 1;
        while chacon_len(level) <= reach {
            level += 1;
            if level > 40 {
                return Err(Error::size_limit("Chacon reach", reach, caps.block_len));
            }
        }
        ChaconPoint::new(level, caps)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Largest `r` such that `[-r, r]` is available.
    pub fn reach(&self) -> u64 {
        self.block.len() as u64 - 1
    }

    pub fn symbol(&self, i: i64) -> Option<u8> {
        let len = self.block.len() as i64;
        let idx = if i >= 0 { i } else { len + i };
        (0..len)
            .contains(&idx)
            .then(|| self.block.symbols()[idx as usize])
    }

    /// Symbols at `[center - radius, center + radius]`.
    pub fn window(&self, center: i64, radius: u64) -> Result<Word> {
        let r = radius as i64;
        let reach = self.reach() as i64;
        if center - r < -reach - 1 || center + r > reach {
            return Err(Error::range(format!(
                "window around {center} of radius {radius} leaves the stretch of b_{}",
                self.level
            )));
        }
        let symbols = (center - r..=center + r)
            .map(|i| self.symbol(i).expect("checked range"))
            .collect();
        Ok(Word::from_raw(symbols, 2))
    }
}

/// All words of length `len` in the Chacon language.
///
/// Every such word sits inside `b_n b_n` or `b_n 1 b_n` once `|b_n| >= len`,
/// and both concatenations occur in `b_{n+1}`.
pub fn chacon_language(len: usize, caps: &Caps) -> Result<BTreeSet<Word>> {
    let mut n = 1;
    while (chacon_len(n) as usize) < len {
        n += 1;
    }
    let block = chacon_block_capped(n + 1, caps.block_len)?;
    Ok((0..=block.len() - len)
        .map(|i| block.subword(i, len))
        .collect())
}

/// Level-`m` image of `{T^ℓ x_C : ℓ among the first `l_count` elements of L}`.
///
/// Each shift contributes its symmetric window of radius `m` around the
/// origin, i.e. the window of `x_C` centered at `ℓ`.
pub fn chacon_y_levelset(m: usize, l_count: usize, level: u32, caps: &Caps) -> Result<LevelSet> {
    if l_count == 0 {
        return Err(Error::invalid("no offsets: the empty set is not a level set"));
    }
    let offsets = chacon_l(l_count as u32 + 1);
    let point = ChaconPoint::new(level, caps)?;
    let cells = offsets
        .iter()
        .map(|&l| point.window(l as i64, m as u64))
        .collect::<Result<Vec<_>>>()?;
    LevelSet::new(m, Sides::Two, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    #[test]
    fn chacon_blocks() {
        assert_eq!(chacon_block(1).unwrap(), w("0010"));
        assert_eq!(chacon_block(2).unwrap(), w("0010001010010"));
        assert_eq!(chacon_block(4).unwrap().len(), 121);
        for n in 1..=8 {
            let b = chacon_block(n).unwrap();
            assert_eq!(b.len() as u64, chacon_len(n));
            let next = chacon_block(n + 1).unwrap();
            assert_eq!(next.len(), 3 * b.len() + 1);
            assert!(next.starts_with(&b));
        }
    }

    #[test]
    fn block_cap() {
        let err = chacon_block_capped(5, 100).unwrap_err();
        assert!(err.is_cap());
        assert!(chacon_block(14).is_ok());
        assert!(chacon_block(16).unwrap_err().is_cap());
    }

    #[test]
    fn occurrence_examples() {
        let b2 = chacon_block(2).unwrap();
        let rep = occurrences(&b2, &w("0010"));
        assert_eq!(rep.starts, vec![0, 4, 9]);
        assert_eq!(rep.gaps, vec![4, 5]);

        let rep = occurrences(&w("0010"), &w("0010"));
        assert_eq!(rep.starts, vec![0]);

        let b3 = chacon_block(3).unwrap();
        let rep = occurrences(&b3, &w("0010"));
        assert_eq!(rep.starts, vec![0, 4, 9, 13, 17, 22, 27, 31, 36]);
        assert!(rep.gaps.iter().all(|g| *g == 4 || *g == 5));

        let rep = occurrences(&w("001"), &w("0010"));
        assert!(rep.pattern_too_long && rep.starts.is_empty());
    }

    #[test]
    fn forbidden_distance_examples() {
        let caps = Caps::default();
        let p = w("0010");
        let rep = forbidden_distance_check(3, &p, Some(&[12]), &caps).unwrap();
        assert!(rep.forbidden_hits.is_empty());
        let rep = forbidden_distance_check(3, &p, Some(&[13]), &caps).unwrap();
        assert!(rep.forbidden_hits.contains(&(0, 13, 13)));
        let rep = forbidden_distance_check(1, &p, Some(&[1, 2, 3, 4]), &caps).unwrap();
        assert!(rep.forbidden_hits.is_empty());
    }

    #[test]
    fn l_values() {
        assert_eq!(chacon_l(2), vec![12]);
        assert_eq!(chacon_l(4), vec![12, 39, 120]);
        assert!(chacon_l(1).is_empty());
    }

    #[test]
    fn orbit_windows() {
        assert_eq!(chacon_orbit_window(4, 4, 3).unwrap(), w("001000101"));
        let b1 = chacon_block(1).unwrap();
        for j in 0..4 {
            let win = chacon_orbit_window(j, 0, 1).unwrap();
            assert_eq!(win.symbols(), &b1.symbols()[j as usize..=j as usize]);
        }
        assert_ne!(
            chacon_orbit_window(20, 4, 3).unwrap(),
            chacon_orbit_window(32, 4, 3).unwrap()
        );
        assert!(matches!(
            chacon_orbit_window(2, 4, 3),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn point_agrees_with_blocks_and_across_levels() {
        let caps = Caps::default();
        let small = ChaconPoint::new(4, &caps).unwrap();
        let big = ChaconPoint::new(7, &caps).unwrap();
        for i in -(small.reach() as i64) - 1..=small.reach() as i64 {
            assert_eq!(small.symbol(i), big.symbol(i), "coordinate {i}");
        }
        // nonnegative side is b_N itself
        let b4 = chacon_block(4).unwrap();
        assert_eq!(small.window(60, 60).unwrap(), b4.subword(0, 121));
        // the two-sided stretch is b_N b_N, a factor of b_{N+1}
        let b5 = chacon_block(5).unwrap();
        let around = small.window(0, 50).unwrap();
        let text = b5.to_string();
        assert!(text.contains(&around.to_string()));
    }

    #[test]
    fn language_has_chacon_complexity() {
        let caps = Caps::default();
        // Chacon complexity is 2n - 1 for n >= 2
        for len in 2..=20 {
            assert_eq!(chacon_language(len, &caps).unwrap().len(), 2 * len - 1);
        }
    }

    #[test]
    fn word_index_roundtrip() {
        for i in 0..81 {
            let word = Word::from_index(i, 4, 3);
            assert_eq!(word.index(), i);
        }
        assert_eq!(Word::parse_infer("0120").unwrap().base(), 3);
    }

    #[test]
    fn y_levelsets() {
        let caps = Caps::default();
        let one = chacon_y_levelset(4, 1, 4, &caps).unwrap();
        assert_eq!(one.len(), 1);
        let b4 = chacon_block(4).unwrap();
        assert!(one.contains(&b4.subword(8, 9)));
        // at radius 4 the windows around 12, 39 and 120 coincide
        let three = chacon_y_levelset(4, 3, 5, &caps).unwrap();
        assert_eq!(three.len(), 1);
        // radius |b_2| + 1 sees past the block boundary
        let two = chacon_y_levelset(14, 2, 5, &caps).unwrap();
        assert_eq!(two.len(), 2);
        assert!(chacon_y_levelset(4, 0, 4, &caps).is_err());
        assert!(matches!(
            chacon_y_levelset(4, 3, 3, &caps),
            Err(Error::Range(_))
        ));
    }
}
