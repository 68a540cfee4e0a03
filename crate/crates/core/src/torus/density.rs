use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::digits::DigitSet;
use super::folner::folner_mult;
use crate::caps::Caps;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Dense,
    NotDense,
    Ambiguous,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Dense => "dense",
            Verdict::NotDense => "not_dense",
            Verdict::Ambiguous => "ambiguous",
        }
    }
}

/// Level choice for covers of `nY`: `m'(n) = ceil(log_p n) + margin`, raised
/// further if needed so that the cover slack `n p^-m'` is at most `eps / 10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Resolution {
    pub margin: u32,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution { margin: 6 }
    }
}

impl Resolution {
    pub fn level(&self, base: u8, n: u64, eps: &BigRational) -> usize {
        let p = base as u128;
        let mut t = 0usize;
        let mut pow: u128 = 1;
        while pow < n as u128 {
            pow *= p;
            t += 1;
        }
        t += self.margin as usize;
        let ten_n = BigInt::from(10u64) * BigInt::from(n) * eps.denom();
        let mut scaled = num_traits::Pow::pow(&BigInt::from(base), t as u32) * eps.numer();
        while scaled < ten_n {
            scaled *= base;
            t += 1;
        }
        t
    }
}

/// Two-sided bound on `ℓ_n`, the largest gap of `nY`, from one cover level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapBound {
    #[serde(with = "crate::rational_string")]
    pub n: BigUint,
    /// `n` with every factor of `p` removed when `T_p Y = Y`; `nY` equals `n'Y`.
    pub reduced: u64,
    pub level: usize,
    /// Largest gap of the dilated cover; always a gap of `nY` as well.
    #[serde(with = "crate::rational_string")]
    pub cover_gap: BigRational,
    /// Upper bound for `ℓ_n`.
    #[serde(with = "crate::rational_string")]
    pub upper: BigRational,
}

impl GapBound {
    pub fn is_exact(&self) -> bool {
        self.cover_gap == self.upper
    }

    /// Whether `nY` is ε-dense, i.e. `ℓ_n < 2ε`, when the bounds decide it.
    pub fn verdict(&self, eps: &BigRational) -> Verdict {
        let two_eps = eps * BigInt::from(2);
        if self.upper < two_eps {
            Verdict::Dense
        } else if self.cover_gap >= two_eps {
            Verdict::NotDense
        } else {
            Verdict::Ambiguous
        }
    }

    /// Whether `ℓ_n < bound` is certain.
    pub fn below(&self, bound: &BigRational) -> Option<bool> {
        if self.upper < *bound {
            Some(true)
        } else if self.cover_gap >= *bound {
            Some(false)
        } else {
            None
        }
    }
}

/// Gap of the level-`t` cover of `nY`, in units of `p^-t`, with the arc length.
///
/// Every admissible word `w` contributes the arc starting at
/// `Σ d_i n p^{t-i} mod p^t` of length `n`. Starts are bucketed by
/// `floor(start / n)`; arcs within a bucket overlap, so only the extreme
/// starts of consecutive nonempty buckets matter.
fn cover_gap_units(y: &DigitSet, n: u64, t: usize) -> Result<(u64, u64, u64)> {
    let p = y.base() as u64;
    let d = p
        .checked_pow(t as u32)
        .filter(|&d| d < 1 << 62)
        .ok_or_else(|| Error::size_limit("dilation modulus", format!("{p}^{t}"), 1 << 62))?;
    if n >= d {
        return Err(Error::invalid("cover level too coarse for n"));
    }
    // table[i][digit] = digit * n * p^{t-1-i} mod D
    let table: Vec<Vec<u64>> = (0..t)
        .map(|i| {
            let c = (n as u128 * p.pow((t - 1 - i) as u32) as u128 % d as u128) as u64;
            (0..p).map(|digit| (digit as u128 * c as u128 % d as u128) as u64).collect()
        })
        .collect();
    let buckets = d.div_ceil(n);
    if buckets > 1 << 28 {
        return Err(Error::size_limit("gap buckets", buckets, 1 << 28));
    }
    let mut lo = vec![u64::MAX; buckets as usize];
    let mut hi = vec![0u64; buckets as usize];
    let mut word = Vec::with_capacity(t);
    walk(y, &table, d, &mut word, 0, &mut |v| {
        let b = (v / n) as usize;
        lo[b] = lo[b].min(v);
        hi[b] = hi[b].max(v);
    });
    let mut gap: i128 = 0;
    let mut first: Option<u64> = None;
    let mut prev_hi: Option<u64> = None;
    for b in 0..buckets as usize {
        if lo[b] == u64::MAX {
            continue;
        }
        if let Some(h) = prev_hi {
            gap = gap.max(lo[b] as i128 - (h + n) as i128);
        }
        first.get_or_insert(lo[b]);
        prev_hi = Some(hi[b]);
    }
    let (first, last) = (first.expect("nonempty set"), prev_hi.expect("nonempty set"));
    gap = gap.max(first as i128 + d as i128 - (last + n) as i128);
    Ok((gap.max(0) as u64, n, d))
}

fn walk(y: &DigitSet, table: &[Vec<u64>], d: u64, word: &mut Vec<u8>, acc: u64, f: &mut impl FnMut(u64)) {
    let i = word.len();
    if i == table.len() {
        f(acc);
        return;
    }
    for &digit in y.allowed() {
        if y.extends(word, digit) {
            let mut next = acc + table[i][digit as usize];
            if next >= d {
                next -= d;
            }
            word.push(digit);
            walk(y, table, d, word, next, f);
            word.pop();
        }
    }
}

/// Bounds on the largest gap of `nY` at the given cover level.
///
/// The dilated cover contains `nY`, so its gap `g` is a true gap. Each arc
/// contains a point of `nY`; when cylinder endpoints belong to `Y` so do the
/// arc endpoints, and the true gap is `g` if `g` is at least one arc length,
/// otherwise at most one arc length. Without endpoints the true gap is at
/// most `g` plus two arc lengths.
pub fn gap_bound_at(y: &DigitSet, n: u64, level: usize, caps: &Caps) -> Result<GapBound> {
    if n == 0 {
        return Err(Error::invalid("dilation factor must be positive"));
    }
    let reduced = reduce(y, n);
    if y.is_full() {
        return Ok(GapBound {
            n: BigUint::from(n),
            reduced,
            level: 0,
            cover_gap: BigRational::zero(),
            upper: BigRational::zero(),
        });
    }
    let words = y.count_words(level);
    if words > BigUint::from(caps.enumeration) {
        return Err(Error::size_limit("streamed digit words", words, caps.enumeration));
    }
    let (g, a, d) = cover_gap_units(y, reduced, level)?;
    let tight = y.endpoint_closed() && level >= y.memory();
    let upper = match (tight, g >= a) {
        (true, true) => g,
        (true, false) => a,
        (false, _) => g + 2 * a,
    };
    let q = |x: u64| BigRational::new(BigInt::from(x), BigInt::from(d));
    Ok(GapBound {
        n: BigUint::from(n),
        reduced,
        level,
        cover_gap: q(g),
        upper: q(upper).min(BigRational::from_integer(1.into())),
    })
}

fn reduce(y: &DigitSet, mut n: u64) -> u64 {
    if y.is_whitelist() {
        let p = y.base() as u64;
        while n.is_multiple_of(p) {
            n /= p;
        }
    }
    n
}

/// Gap bounds for many `n`, computed once per reduced factor and in parallel.
pub fn gap_bounds(
    y: &DigitSet,
    ns: &[BigUint],
    eps: &BigRational,
    res: Resolution,
    caps: &Caps,
) -> Result<Vec<GapBound>> {
    let ns: Vec<u64> = ns
        .iter()
        .map(|n| n.to_u64().ok_or_else(|| Error::size_limit("dilation factor", n, u64::MAX)))
        .collect::<Result<_>>()?;
    let mut distinct: Vec<u64> = ns.iter().map(|&n| reduce(y, n)).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let computed: Vec<(u64, GapBound)> = distinct
        .par_iter()
        .map(|&r| {
            let level = if y.is_full() { 0 } else { res.level(y.base(), r, eps) };
            gap_bound_at(y, r, level, caps).map(|g| (r, g))
        })
        .collect::<Result<_>>()?;
    let table: BTreeMap<u64, GapBound> = computed.into_iter().collect();
    Ok(ns
        .iter()
        .map(|&n| GapBound {
            n: BigUint::from(n),
            ..table[&reduce(y, n)].clone()
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRow {
    #[serde(with = "crate::rational_string")]
    pub n: BigUint,
    pub level: usize,
    #[serde(with = "crate::rational_string")]
    pub max_gap: BigRational,
    #[serde(with = "crate::rational_string")]
    pub gap_upper: BigRational,
    pub verdict: Verdict,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityResult {
    pub m: usize,
    #[serde(with = "crate::rational_string")]
    pub eps: BigRational,
    pub resolution: Resolution,
    pub total: u64,
    pub dense: u64,
    pub ambiguous: u64,
    /// Certified dense count over `|F_m|`; ambiguous verdicts count as not dense.
    #[serde(with = "crate::rational_string")]
    pub fraction: BigRational,
    pub rows: Vec<DensityRow>,
}

/// Fraction of `n ∈ F_m` for which `nY` is ε-dense.
pub fn dilation_density(
    y: &DigitSet,
    m: usize,
    eps: &BigRational,
    res: Resolution,
    caps: &Caps,
) -> Result<DensityResult> {
    if eps <= &BigRational::zero() {
        return Err(Error::invalid("eps must be positive"));
    }
    let f = folner_mult(m, None, caps)?;
    let bounds = gap_bounds(y, &f.elements, eps, res, caps)?;
    let rows: Vec<DensityRow> = bounds
        .into_iter()
        .map(|b| {
            let verdict = b.verdict(eps);
            DensityRow {
                n: b.n,
                level: b.level,
                max_gap: b.cover_gap,
                gap_upper: b.upper,
                verdict,
                ambiguous: verdict == Verdict::Ambiguous,
            }
        })
        .collect();
    let total = rows.len() as u64;
    let dense = rows.iter().filter(|r| r.verdict == Verdict::Dense).count() as u64;
    let ambiguous = rows.iter().filter(|r| r.ambiguous).count() as u64;
    Ok(DensityResult {
        m,
        eps: eps.clone(),
        resolution: res,
        total,
        dense,
        ambiguous,
        fraction: BigRational::new(dense.into(), total.into()),
        rows,
    })
}
