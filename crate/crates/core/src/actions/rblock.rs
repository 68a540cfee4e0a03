use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperspace::binomial;
use crate::stats::{substream, wilson, Interval};

/// How `rblock_containment` evaluates the probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RblockMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
    Bound,
}

/// Shape of an r-block instance: `α`-subsets of `{1, .., n^m}` against unions
/// of `r` intervals of length `ℓ = n^(m-k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RblockInstance {
    pub n: u64,
    pub m: u32,
    pub k: u32,
    pub alpha: u64,
    pub r: u64,
}

impl RblockInstance {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.k > self.m || self.r == 0 {
            return Err(Error::invalid("need n >= 2, k <= m and r >= 1"));
        }
        if self.universe()? < self.alpha {
            return Err(Error::invalid("alpha exceeds n^m"));
        }
        Ok(())
    }

    pub fn universe(&self) -> Result<u64> {
        self.n
            .checked_pow(self.m)
            .ok_or_else(|| Error::size_limit("n^m", format!("{}^{}", self.n, self.m), u64::MAX))
    }

    pub fn block_len(&self) -> u64 {
        self.n.pow(self.m - self.k)
    }

    /// `γ = r / n^k`.
    pub fn gamma(&self) -> BigRational {
        BigRational::new(BigInt::from(self.r), BigInt::from(self.n).pow(self.k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RblockBounds {
    /// `C(α, r) N^r C(rℓ, α - r) / C(N, α)`: the counting bound.
    #[serde(with = "crate::rational_string")]
    pub counting: BigRational,
    /// `α^{2r} γ^{α - r} (N / (N - α + 1))^r`: the envelope with its constant made explicit.
    #[serde(with = "crate::rational_string")]
    pub envelope: BigRational,
    /// Set when `γ >= 1`, where the envelope says nothing.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RblockResult {
    pub instance: RblockInstance,
    /// Exact probability, or the Monte Carlo proportion as a rational.
    #[serde(with = "crate::rational_string")]
    pub probability: BigRational,
    pub estimate: f64,
    pub ci: Option<Interval>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    /// Analytic bounds; `None` when `α <= r` (the probability is 1).
    pub bounds: Option<RblockBounds>,
}

/// Whether sorted points in `1..=universe` fit in `r` intervals of length `len`.
///
/// Greedy: open an interval at the leftmost uncovered point (clipped to end
/// at `universe`) and skip everything it covers.
pub fn fits_in_rblock(sorted: &[u64], universe: u64, len: u64, r: u64) -> bool {
    let mut used = 0;
    let mut i = 0;
    while i < sorted.len() {
        used += 1;
        if used > r {
            return false;
        }
        let start = sorted[i].min(universe + 1 - len);
        let end = start + len;
        while i < sorted.len() && sorted[i] < end {
            i += 1;
        }
    }
    true
}

pub fn rblock_bounds(inst: &RblockInstance) -> Result<Option<RblockBounds>> {
    inst.validate()?;
    let (alpha, r) = (inst.alpha, inst.r);
    if alpha <= r {
        return Ok(None);
    }
    let big = |u: BigUint| BigInt::from(u);
    let universe = inst.universe()?;
    let n = BigInt::from(universe);
    let counting = BigRational::new(
        big(binomial(alpha, r)) * Pow::pow(&n, r as u32) * big(binomial(r * inst.block_len(), alpha - r)),
        big(binomial(universe, alpha)),
    );
    let gamma = inst.gamma();
    let envelope = BigRational::from_integer(BigInt::from(alpha).pow(2 * r as u32))
        * Pow::pow(&gamma, (alpha - r) as u32)
        * Pow::pow(
            &BigRational::new(n.clone(), BigInt::from(universe - alpha + 1)),
            r as u32,
        );
    Ok(Some(RblockBounds {
        counting,
        envelope,
        vacuous: gamma >= BigRational::one(),
    }))
}

const ENUMERATION_LIMIT: u64 = 20;
const MC_CHUNK: u64 = 4096;

/// Probability that a uniform `α`-subset of `{1, .., n^m}` lies in an r-block.
pub fn rblock_containment(inst: &RblockInstance, mode: RblockMode) -> Result<RblockResult> {
    inst.validate()?;
    let bounds = rblock_bounds(inst)?;
    let universe = inst.universe()?;
    let len = inst.block_len();
    let base = RblockResult {
        instance: *inst,
        probability: BigRational::one(),
        estimate: 1.0,
        ci: None,
        samples: None,
        seed: None,
        bounds,
    };
    if inst.alpha <= inst.r {
        return Ok(base);
    }
    match mode {
        RblockMode::Bound => {
            let b = base.bounds.as_ref().expect("alpha > r");
            let p = b.envelope.clone().min(b.counting.clone());
            let estimate = crate::hyperspace::rational_to_f64(&p);
            Ok(RblockResult {
                probability: p,
                estimate,
                ..base
            })
        }
        RblockMode::Exact => {
            if universe > ENUMERATION_LIMIT {
                return Err(Error::size_limit("r-block enumeration universe", universe, ENUMERATION_LIMIT));
            }
            let alpha = inst.alpha as u32;
            let hits = (0u64..1 << universe)
                .into_par_iter()
                .filter(|mask| mask.count_ones() == alpha)
                .filter(|mask| {
                    let pts: Vec<u64> = (0..universe).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
                    fits_in_rblock(&pts, universe, len, inst.r)
                })
                .count() as u64;
            let total = binomial(universe, inst.alpha);
            let probability = BigRational::new(BigInt::from(hits), BigInt::from(total));
            Ok(RblockResult {
                estimate: crate::hyperspace::rational_to_f64(&probability),
                probability,
                ..base
            })
        }
        RblockMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::invalid("Monte Carlo mode needs at least one sample"));
            }
            let chunks = samples.div_ceil(MC_CHUNK);
            let hits: u64 = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = substream(seed, c);
                    let lo = c * MC_CHUNK;
                    let hi = (lo + MC_CHUNK).min(samples);
                    (lo..hi)
                        .filter(|_| {
                            let mut pts: Vec<u64> = sample(&mut rng, universe as usize, inst.alpha as usize)
                                .into_iter()
                                .map(|x| x as u64 + 1)
                                .collect();
                            pts.sort_unstable();
                            fits_in_rblock(&pts, universe, len, inst.r)
                        })
                        .count() as u64
                })
                .sum();
            let probability = BigRational::new(BigInt::from(hits), BigInt::from(samples));
            Ok(RblockResult {
                estimate: hits as f64 / samples as f64,
                probability,
                ci: Some(wilson(hits, samples)),
                samples: Some(samples),
                seed: Some(seed),
                ..base
            })
        }
    }
}

/// All instances with `n^m <= 20` and `1 <= r < α <= n^m`.
pub fn enumerable_instances() -> Vec<RblockInstance> {
    let mut out = Vec::new();
    for n in 2u64..=20 {
        let mut m = 1;
        while n.pow(m) <= ENUMERATION_LIMIT {
            let universe = n.pow(m);
            for k in 0..=m {
                for alpha in 1..=universe {
                    for r in 1..alpha {
                        out.push(RblockInstance { n, m, k, alpha, r });
                    }
                }
            }
            m += 1;
        }
    }
    out
}

impl RblockBounds {
    pub fn is_zero(&self) -> bool {
        self.counting.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn greedy_cover() {
        assert!(fits_in_rblock(&[1, 2], 4, 2, 1));
        assert!(!fits_in_rblock(&[1, 3], 4, 2, 1));
        assert!(fits_in_rblock(&[4], 4, 2, 1));
        assert!(fits_in_rblock(&[1, 3, 4], 4, 2, 2));
        assert!(!fits_in_rblock(&[1, 4, 7], 8, 2, 2));
    }

    #[test]
    fn pairs_in_one_block() {
        let inst = RblockInstance { n: 2, m: 2, k: 1, alpha: 2, r: 1 };
        let res = rblock_containment(&inst, RblockMode::Exact).unwrap();
        assert_eq!(res.probability, q(1, 2));
    }

    #[test]
    fn small_alpha_is_certain() {
        let inst = RblockInstance { n: 2, m: 3, k: 2, alpha: 2, r: 2 };
        let res = rblock_containment(&inst, RblockMode::Exact).unwrap();
        assert_eq!(res.probability, BigRational::one());
        assert!(res.bounds.is_none());
    }

    #[test]
    fn exact_matches_brute_force_without_greedy() {
        // independent check: try every placement of r interval starts
        let inst = RblockInstance { n: 3, m: 2, k: 1, alpha: 4, r: 2 };
        let (u, len) = (9u64, 3u64);
        let mut hits = 0u64;
        let mut total = 0u64;
        for mask in 0u64..1 << u {
            if mask.count_ones() != 4 {
                continue;
            }
            total += 1;
            let ok = (1..=u - len + 1).any(|a| {
                (1..=u - len + 1).any(|b| {
                    (0..u).filter(|i| mask >> i & 1 == 1).all(|i| {
                        let p = i + 1;
                        (a..a + len).contains(&p) || (b..b + len).contains(&p)
                    })
                })
            });
            hits += ok as u64;
        }
        let res = rblock_containment(&inst, RblockMode::Exact).unwrap();
        assert_eq!(res.probability, BigRational::new(hits.into(), total.into()));
    }

    #[test]
    fn bounds_dominate_exact_values() {
        for inst in enumerable_instances().into_iter().filter(|i| i.n <= 4) {
            let exact = rblock_containment(&inst, RblockMode::Exact).unwrap();
            let b = exact.bounds.clone().unwrap();
            assert!(exact.probability <= b.counting, "{inst:?}");
            if !b.vacuous {
                assert!(exact.probability <= b.envelope, "{inst:?}");
            }
        }
    }

    #[test]
    fn mc_is_reproducible() {
        let inst = RblockInstance { n: 2, m: 10, k: 3, alpha: 32, r: 2 };
        let mode = RblockMode::MonteCarlo { samples: 2000, seed: 5 };
        let a = rblock_containment(&inst, mode).unwrap();
        let b = rblock_containment(&inst, mode).unwrap();
        assert_eq!(a, b);
        assert!(!a.bounds.unwrap().vacuous);
    }
}
