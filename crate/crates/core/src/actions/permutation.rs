use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::hyperspace::{LevelSet, Sides};
use crate::stats::substream;
use crate::symbolic::Word;

/// How a permutation of words acts on points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `τ(x) = τ(x_1..x_k) x_{k+1} ..` on the one-sided shift.
    Prefix,
    /// `τ` applied to every window `[i(2k+1) - k, i(2k+1) + k]` of a two-sided point.
    BlockCode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Table {
    Explicit(Vec<u32>),
    /// Keyed bijection evaluated on demand, used past the word-table cap.
    Keyed { key: u64 },
}

/// A bijection on the words of length `k` (prefix) or `2k + 1` (block code).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPermutation {
    k: usize,
    base: u8,
    mode: Mode,
    size: u64,
    table: Table,
}

fn word_count(k: usize, base: u8, mode: Mode) -> Result<(usize, u64)> {
    let len = match mode {
        Mode::Prefix => k,
        Mode::BlockCode => 2 * k + 1,
    };
    if k == 0 && mode == Mode::Prefix {
        return Err(Error::invalid("prefix permutations need k >= 1"));
    }
    let size = u32::try_from(len)
        .ok()
        .and_then(|l| (base as u64).checked_pow(l))
        .filter(|s| *s <= u32::MAX as u64)
        .ok_or_else(|| Error::size_limit("permuted words", format!("{base}^{len}"), u32::MAX as u64))?;
    Ok((len, size))
}

impl BlockPermutation {
    pub fn identity(k: usize, base: u8, mode: Mode) -> Result<Self> {
        let (_, size) = word_count(k, base, mode)?;
        Ok(BlockPermutation {
            k,
            base,
            mode,
            size,
            table: Table::Explicit((0..size as u32).collect()),
        })
    }

    /// `table[i]` is the image of the word with index `i`.
    pub fn from_table(k: usize, base: u8, mode: Mode, table: Vec<u32>) -> Result<Self> {
        let (_, size) = word_count(k, base, mode)?;
        if table.len() as u64 != size {
            return Err(Error::invalid(format!(
                "table has {} entries, expected {size}",
                table.len()
            )));
        }
        let mut seen = vec![false; table.len()];
        for &t in &table {
            let slot = seen
                .get_mut(t as usize)
                .ok_or_else(|| Error::invalid(format!("image {t} out of range")))?;
            if *slot {
                return Err(Error::invalid(format!("image {t} repeated: not a bijection")));
            }
            *slot = true;
        }
        Ok(BlockPermutation {
            k,
            base,
            mode,
            size,
            table: Table::Explicit(table),
        })
    }

    /// The transposition exchanging two words.
    pub fn swap(k: usize, base: u8, mode: Mode, a: &Word, b: &Word) -> Result<Self> {
        let mut g = BlockPermutation::identity(k, base, mode)?;
        let (ia, ib) = (g.check_word(a)?, g.check_word(b)?);
        if let Table::Explicit(t) = &mut g.table {
            t.swap(ia as usize, ib as usize);
        }
        Ok(g)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn base(&self) -> u8 {
        self.base
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Number of permuted words.
    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn word_len(&self) -> usize {
        match self.mode {
            Mode::Prefix => self.k,
            Mode::BlockCode => 2 * self.k + 1,
        }
    }

    /// False for keyed permutations, which are not uniformly distributed.
    pub fn is_uniform(&self) -> bool {
        matches!(self.table, Table::Explicit(_))
    }

    fn check_word(&self, w: &Word) -> Result<u64> {
        if w.len() != self.word_len() || w.symbols().iter().any(|s| *s >= self.base) {
            return Err(Error::invalid(format!(
                "word {w} is not in the permuted alphabet"
            )));
        }
        Ok(Word::new(w.symbols().to_vec(), self.base)?.index())
    }

    pub fn apply_index(&self, i: u64) -> u64 {
        match &self.table {
            Table::Explicit(t) => t[i as usize] as u64,
            Table::Keyed { key } => keyed_apply(*key, self.size, i),
        }
    }

    pub fn apply_word(&self, w: &Word) -> Result<Word> {
        let i = self.check_word(w)?;
        Ok(Word::from_index(self.apply_index(i), self.word_len(), self.base))
    }

    pub fn inverse(&self) -> BlockPermutation {
        let table = match &self.table {
            Table::Explicit(t) => {
                let mut inv = vec![0u32; t.len()];
                for (i, &v) in t.iter().enumerate() {
                    inv[v as usize] = i as u32;
                }
                Table::Explicit(inv)
            }
            Table::Keyed { key } => Table::Keyed { key: !*key },
        };
        BlockPermutation { table, ..self.clone() }
    }

    fn apply_label(&self, label: &[u8], level: usize) -> Result<Vec<u8>> {
        let len = self.word_len();
        let mut out = label.to_vec();
        let base = self.base;
        let map = |chunk: &mut [u8]| -> Result<()> {
            let w = Word::new(chunk.to_vec(), base)?;
            chunk.copy_from_slice(self.apply_word(&w)?.symbols());
            Ok(())
        };
        match self.mode {
            Mode::Prefix => map(&mut out[..len])?,
            Mode::BlockCode => {
                debug_assert_eq!(label.len(), 2 * level + 1);
                for chunk in out.chunks_mut(len) {
                    map(chunk)?;
                }
            }
        }
        Ok(out)
    }
}

/// Image of a level set under a prefix or block-code permutation.
///
/// Prefix mode needs a one-sided set at level `>= k`. Block-code mode needs
/// a two-sided set whose window length `2m + 1` is a multiple of `2k + 1`,
/// so that the window grid at phase 0 tiles the label exactly.
pub fn apply_permutation(g: &BlockPermutation, a: &LevelSet) -> Result<LevelSet> {
    let m = a.level();
    match g.mode {
        Mode::Prefix => {
            if a.sides() != Sides::One || m < g.k {
                return Err(Error::invalid(format!(
                    "prefix permutation of length {} needs a one-sided level set at level >= {}",
                    g.k, g.k
                )));
            }
        }
        Mode::BlockCode => {
            if a.sides() != Sides::Two || !(2 * m + 1).is_multiple_of(2 * g.k + 1) {
                return Err(Error::invalid(format!(
                    "block code of width {} does not tile two-sided level {m}",
                    2 * g.k + 1
                )));
            }
        }
    }
    let cells = a
        .cells()
        .iter()
        .map(|c| {
            let symbols = g.apply_label(c.symbols(), m)?;
            Word::new(symbols, g.base.max(c.base()))
        })
        .collect::<Result<Vec<_>>>()?;
    LevelSet::new(m, a.sides(), cells)
}

/// Uniform random element of `Sym(n^k)` (prefix) or `Sym(n^{2k+1})` (block code).
///
/// Above `caps.word_table` words the result is a keyed bijection that is
/// deterministic in the seed but not uniform; `is_uniform` reports this.
pub fn random_symmetric_element(
    k: usize,
    base: u8,
    mode: Mode,
    seed: u64,
    caps: &Caps,
) -> Result<BlockPermutation> {
    random_element_from(k, base, mode, &mut substream(seed, 0), caps)
}

pub(crate) fn random_element_from<R: rand::Rng>(
    k: usize,
    base: u8,
    mode: Mode,
    rng: &mut R,
    caps: &Caps,
) -> Result<BlockPermutation> {
    let (_, size) = word_count(k, base, mode)?;
    if size > caps.word_table {
        return Ok(BlockPermutation {
            k,
            base,
            mode,
            size,
            table: Table::Keyed {
                key: rng.random::<u64>() >> 1,
            },
        });
    }
    let mut table: Vec<u32> = (0..size as u32).collect();
    table.shuffle(rng);
    Ok(BlockPermutation {
        k,
        base,
        mode,
        size,
        table: Table::Explicit(table),
    })
}

fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

const ROUNDS: u64 = 6;

/// Balanced Feistel network on `2h` bits with cycle walking down to `size`.
///
/// Forward keys have the top bit clear; `inverse()` stores the complement,
/// which runs the rounds backwards.
fn keyed_apply(key: u64, size: u64, x: u64) -> u64 {
    let (forward_key, backward) = if key >> 63 == 1 { (!key, true) } else { (key, false) };
    let bits = 64 - (size.max(2) - 1).leading_zeros() as u64;
    let half = bits.div_ceil(2);
    let mask = (1u64 << half) - 1;
    let round = |r: u64, v: u64| mix(forward_key ^ mix(r.wrapping_add(v << 8))) & mask;
    let step = |v: u64| -> u64 {
        let (mut l, mut r) = (v >> half, v & mask);
        if backward {
            for i in (0..ROUNDS).rev() {
                let prev_r = l;
                let prev_l = r ^ round(i, prev_r);
                l = prev_l;
                r = prev_r;
            }
        } else {
            for i in 0..ROUNDS {
                let next = l ^ round(i, r);
                l = r;
                r = next;
            }
        }
        (l << half) | r
    };
    let mut y = step(x);
    while y >= size {
        y = step(y);
    }
    y
}
