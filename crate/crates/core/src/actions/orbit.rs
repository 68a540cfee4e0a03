use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use super::permutation::{apply_permutation, random_element_from, BlockPermutation, Mode};
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::hyperspace::{dist_to_finite, hausdorff_at_level, LevelSet, Sides};
use crate::stats::{substream, wilson, Interval};
use crate::symbolic::{chacon_l, chacon_language, ChaconPoint};

/// A finite averaging window of group elements acting on one level set.
pub trait OrbitSource: Sync {
    /// Resolution of the images.
    fn level(&self) -> usize;
    /// Number of group elements in the window (or of samples).
    fn len(&self) -> u64;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// `g_index · Y` at the source level.
    fn image(&self, index: u64) -> Result<LevelSet>;
    /// `A_m(X)`: the whole space at the source level.
    fn space(&self) -> &LevelSet;
    /// Short human-readable description for tables.
    fn describe(&self) -> String;
    /// Seed when the window is a random sample rather than an exact average.
    fn seed(&self) -> Option<u64> {
        None
    }
}

/// Shifts `T^j Y` of a finite part of `Y = closure{T^ℓ x_C : ℓ ∈ L}` for `j`
/// in `[start, end)`.
#[derive(Debug, Clone)]
pub struct ShiftWindow {
    point: ChaconPoint,
    offsets: Vec<u64>,
    level: usize,
    start: i64,
    end: i64,
    space: LevelSet,
}

impl ShiftWindow {
    /// Uses the first `l_count` elements of L; the stretch of `x_C` held in
    /// memory grows to cover every window that is read.
    pub fn chacon(level: usize, l_count: usize, start: i64, end: i64, caps: &Caps) -> Result<Self> {
        let offsets = chacon_l(l_count as u32 + 1);
        Self::with_offsets(level, offsets, start, end, caps)
    }

    pub fn with_offsets(
        level: usize,
        offsets: Vec<u64>,
        start: i64,
        end: i64,
        caps: &Caps,
    ) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::invalid("no offsets: the empty set is not a level set"));
        }
        if end <= start {
            return Err(Error::invalid(format!("empty shift window [{start}, {end})")));
        }
        let far = offsets.iter().max().copied().unwrap_or(0) as i64;
        let reach = (start.abs().max(end.abs()) + far + level as i64 + 1) as u64;
        let point = ChaconPoint::covering(reach, caps)?;
        let language = chacon_language(2 * level + 1, caps)?;
        let space = LevelSet::new(level, Sides::Two, language)?;
        Ok(ShiftWindow {
            point,
            offsets,
            level,
            start,
            end,
            space,
        })
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn point(&self) -> &ChaconPoint {
        &self.point
    }
}

impl OrbitSource for ShiftWindow {
    fn level(&self) -> usize {
        self.level
    }

    fn len(&self) -> u64 {
        (self.end - self.start) as u64
    }

    fn image(&self, index: u64) -> Result<LevelSet> {
        let j = self.start + index as i64;
        let cells = self
            .offsets
            .iter()
            .map(|&l| self.point.window(j + l as i64, self.level as u64))
            .collect::<Result<Vec<_>>>()?;
        LevelSet::new(self.level, Sides::Two, cells)
    }

    fn space(&self) -> &LevelSet {
        &self.space
    }

    fn describe(&self) -> String {
        format!("shift[{},{})", self.start, self.end)
    }
}

/// How group elements of `Sym(n^k)` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Every element once, in Lehmer-code order.
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

/// Prefix or block-code permutations acting on a full-shift level set.
#[derive(Debug, Clone)]
pub struct PermutationWindow {
    y: LevelSet,
    k: usize,
    base: u8,
    mode: Mode,
    sampling: Sampling,
    group_order: u64,
    space: LevelSet,
    caps: Caps,
}

fn factorial(n: u64) -> Option<u64> {
    (2..=n).try_fold(1u64, |acc, i| acc.checked_mul(i))
}

/// The permutation of `{0, .., n-1}` with Lehmer rank `index`.
pub fn lehmer_unrank(mut index: u64, n: usize) -> Vec<u32> {
    let mut pool: Vec<u32> = (0..n as u32).collect();
    let mut out = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let f = factorial(i as u64).expect("caller bounds n");
        let pick = (index / f) as usize;
        index %= f;
        out.push(pool.remove(pick));
    }
    out
}

impl PermutationWindow {
    pub fn new(y: LevelSet, k: usize, base: u8, mode: Mode, sampling: Sampling, caps: &Caps) -> Result<Self> {
        let size = BlockPermutation::identity(k, base, mode)?.size();
        let group_order = match sampling {
            Sampling::Exhaustive => factorial(size)
                .filter(|f| *f <= caps.orbit)
                .ok_or_else(|| Error::size_limit("group order (use sampling)", format!("{size}!"), caps.orbit))?,
            Sampling::Sampled { samples, .. } => {
                if samples == 0 {
                    return Err(Error::invalid("sampling needs at least one sample"));
                }
                samples
            }
        };
        // validate the action once
        apply_permutation(&BlockPermutation::identity(k, base, mode)?, &y)?;
        let space = LevelSet::new(
            y.level(),
            y.sides(),
            crate::symbolic::Word::all(y.sides().label_len(y.level()), base),
        )?;
        Ok(PermutationWindow {
            y,
            k,
            base,
            mode,
            sampling,
            group_order,
            space,
            caps: *caps,
        })
    }

    pub fn element(&self, index: u64) -> Result<BlockPermutation> {
        match self.sampling {
            Sampling::Exhaustive => {
                let size = BlockPermutation::identity(self.k, self.base, self.mode)?.size();
                let table = lehmer_unrank(index, size as usize);
                BlockPermutation::from_table(self.k, self.base, self.mode, table)
            }
            Sampling::Sampled { seed, .. } => random_element_from(
                self.k,
                self.base,
                self.mode,
                &mut substream(seed, index),
                &self.caps,
            ),
        }
    }
}

impl OrbitSource for PermutationWindow {
    fn level(&self) -> usize {
        self.y.level()
    }

    fn len(&self) -> u64 {
        self.group_order
    }

    fn image(&self, index: u64) -> Result<LevelSet> {
        apply_permutation(&self.element(index)?, &self.y)
    }

    fn space(&self) -> &LevelSet {
        &self.space
    }

    fn describe(&self) -> String {
        let size = (self.base as u64).pow(match self.mode {
            Mode::Prefix => self.k as u32,
            Mode::BlockCode => 2 * self.k as u32 + 1,
        });
        match self.sampling {
            Sampling::Exhaustive => format!("Sym({size})"),
            Sampling::Sampled { samples, .. } => format!("Sym({size})~{samples}"),
        }
    }

    fn seed(&self) -> Option<u64> {
        match self.sampling {
            Sampling::Exhaustive => None,
            Sampling::Sampled { seed, .. } => Some(seed),
        }
    }
}

/// An explicit list of images, e.g. the identity window.
#[derive(Debug, Clone)]
pub struct ExplicitWindow {
    pub images: Vec<LevelSet>,
    pub space: LevelSet,
    pub label: String,
}

impl OrbitSource for ExplicitWindow {
    fn level(&self) -> usize {
        self.space.level()
    }

    fn len(&self) -> u64 {
        self.images.len() as u64
    }

    fn image(&self, index: u64) -> Result<LevelSet> {
        Ok(self.images[index as usize].clone())
    }

    fn space(&self) -> &LevelSet {
        &self.space
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

/// Orbit event at threshold `ε = 2^-eps_exp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode")]
pub enum Event {
    /// `d(gY, X) >= ε`.
    #[serde(rename = "D")]
    Far { eps_exp: u32 },
    /// `d(gY, K_{<=r}(X)) >= ε`.
    #[serde(rename = "E")]
    FarFromFinite { r: usize, eps_exp: u32 },
    /// `d(gY, X) < ε`.
    #[serde(rename = "Z")]
    Near { eps_exp: u32 },
}

impl Event {
    pub fn eps_exp(&self) -> u32 {
        match *self {
            Event::Far { eps_exp } | Event::Near { eps_exp } => eps_exp,
            Event::FarFromFinite { eps_exp, .. } => eps_exp,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Event::Far { .. } => "D",
            Event::FarFromFinite { .. } => "E",
            Event::Near { .. } => "Z",
        }
    }

    pub fn r(&self) -> Option<usize> {
        match *self {
            Event::FarFromFinite { r, .. } => Some(r),
            _ => None,
        }
    }

    /// Distances between level-`m` cylinder unions are `0` or at least
    /// `2^-m`, so `ε = 2^-(m+1)` is the finest threshold they resolve. For
    /// the distance to `K_{<=r}` that threshold is always met, so it needs
    /// `ε >= 2^-m`.
    pub fn check_resolution(&self, level: usize) -> Result<()> {
        let finest = match self {
            Event::FarFromFinite { .. } => level,
            _ => level + 1,
        };
        if self.eps_exp() as usize > finest {
            return Err(Error::ResolutionTooFine {
                eps_exp: self.eps_exp(),
                level,
            });
        }
        if let Event::FarFromFinite { r: 0, .. } = self {
            return Err(Error::invalid("r must be at least 1"));
        }
        Ok(())
    }

    pub fn holds(&self, image: &LevelSet, space: &LevelSet) -> Result<bool> {
        Ok(match *self {
            Event::Far { eps_exp } => hausdorff_at_level(image, space)?.at_least_pow2(eps_exp),
            Event::Near { eps_exp } => hausdorff_at_level(image, space)?.below_pow2(eps_exp),
            Event::FarFromFinite { r, eps_exp } => {
                dist_to_finite(image, r)?.distance.at_least_pow2(eps_exp)
            }
        })
    }
}

/// Fraction of a window for which an orbit event holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitStat {
    pub window: String,
    pub level: usize,
    pub mode: &'static str,
    pub eps_exp: u32,
    pub r: Option<usize>,
    pub successes: u64,
    pub samples: u64,
    #[serde(with = "crate::rational_string")]
    pub fraction: BigRational,
    pub estimate: f64,
    pub ci: Interval,
    /// True when the window is the whole averaging set rather than a sample.
    pub exact: bool,
    pub seed: Option<u64>,
}

impl OrbitStat {
    pub const CSV_HEADER: [&'static str; 9] =
        ["window", "mode", "eps", "r", "fraction", "ci_lo", "ci_hi", "samples", "seed"];

    pub fn csv_row(&self) -> [String; 9] {
        [
            self.window.clone(),
            self.mode.to_string(),
            format!("1/{}", BigInt::from(1) << self.eps_exp),
            self.r.map(|r| r.to_string()).unwrap_or_default(),
            self.fraction.to_string(),
            self.ci.lo.to_string(),
            self.ci.hi.to_string(),
            self.samples.to_string(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

/// Evaluates an event over every element of the window, in parallel.
pub fn orbit_stat<S: OrbitSource + ?Sized>(source: &S, event: Event) -> Result<OrbitStat> {
    event.check_resolution(source.level())?;
    let space = source.space();
    let n = source.len();
    let successes = (0..n)
        .into_par_iter()
        .map(|i| {
            let image = source.image(i)?;
            event.holds(&image, space).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let fraction = BigRational::new(BigInt::from(successes), BigInt::from(n.max(1)));
    let estimate = successes as f64 / n.max(1) as f64;
    let exact = source.seed().is_none();
    let ci = if exact {
        Interval {
            lo: estimate,
            hi: estimate,
        }
    } else {
        wilson(successes, n)
    };
    Ok(OrbitStat {
        window: source.describe(),
        level: source.level(),
        mode: event.code(),
        eps_exp: event.eps_exp(),
        r: event.r(),
        successes,
        samples: n,
        fraction,
        estimate,
        ci,
        exact,
        seed: source.seed(),
    })
}

/// One-sided "sunny side up" set at level `m`: `0^m` and every `0^j 1 0^(m-j-1)`.
pub fn sunny_side_up(m: usize) -> Result<LevelSet> {
    let mut cells = BTreeSet::new();
    cells.insert(crate::symbolic::Word::new(vec![0; m], 2)?);
    for j in 0..m {
        let mut s = vec![0u8; m];
        s[j] = 1;
        cells.insert(crate::symbolic::Word::new(s, 2)?);
    }
    LevelSet::new(m, Sides::One, cells)
}
