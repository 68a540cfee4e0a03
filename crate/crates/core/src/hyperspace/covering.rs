use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::profile::TreeProfile;
use crate::error::{Error, Result};

/// Exact binomial coefficient `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringCount {
    /// `|F_{k+i,r}(k)|`: r-subsets of level-(k+i) cells meeting every level-k cell.
    #[serde(with = "crate::rational_string")]
    pub count: BigUint,
    /// `C(κ(k+i), r)`.
    #[serde(with = "crate::rational_string")]
    pub total: BigUint,
    /// Set when `r > κ(k+i)`; both counts are zero then.
    pub oversized: bool,
}

impl CoveringCount {
    pub fn fraction(&self) -> Option<BigRational> {
        (!self.total.is_zero()).then(|| {
            BigRational::new(
                BigInt::from(self.count.clone()),
                BigInt::from(self.total.clone()),
            )
        })
    }
}

/// Counts r-subsets of level-`(k+i)` cells that meet every level-`k` cell.
///
/// Inclusion-exclusion over the set `S` of level-`k` cells that are missed:
/// `Σ_S (-1)^|S| C(κ(k+i) - Σ_{C∈S} e(C,i), r)` with `e(C,i)` the number of
/// level-`(k+i)` descendants of `C`. Cells are grouped by `e`, so full
/// shifts reduce to `Σ_s (-1)^s C(κ(k), s) C(κ(k+i) - s n^i, r)`.
pub fn count_covering_subsets(
    profile: &TreeProfile,
    k: usize,
    i: usize,
    r: u64,
) -> Result<CoveringCount> {
    let fine = profile.kappa(k + i)?;
    if r > fine {
        return Ok(CoveringCount {
            count: BigUint::zero(),
            total: BigUint::zero(),
            oversized: true,
        });
    }
    let groups = descendant_groups(profile, k, i)?;

    // signed[t] = Σ over excluded sets with Σ e = t of (-1)^|S|
    let mut signed: BTreeMap<u64, BigInt> = BTreeMap::new();
    signed.insert(0, BigInt::one());
    for (&e, &mult) in &groups {
        let mut next: BTreeMap<u64, BigInt> = BTreeMap::new();
        for (t, coef) in &signed {
            for s in 0..=mult {
                let total = t + s * e;
                if total > fine {
                    break;
                }
                let mut term = coef * BigInt::from(binomial(mult, s));
                if s % 2 == 1 {
                    term = -term;
                }
                *next.entry(total).or_insert_with(BigInt::zero) += term;
            }
        }
        next.retain(|_, v| !v.is_zero());
        signed = next;
    }

    let mut count = BigInt::zero();
    for (t, coef) in signed {
        count += coef * BigInt::from(binomial(fine - t, r));
    }
    let count = count
        .to_biguint()
        .ok_or_else(|| Error::invalid("inclusion-exclusion produced a negative count"))?;
    Ok(CoveringCount {
        count,
        total: binomial(fine, r),
        oversized: false,
    })
}

/// Multiplicity of each descendant count `e(C, i)` over level-`k` cells.
fn descendant_groups(profile: &TreeProfile, k: usize, i: usize) -> Result<BTreeMap<u64, u64>> {
    let mut groups = BTreeMap::new();
    if profile.depth().is_none() {
        // full shifts: every cell has the same number of descendants
        let cells = profile.kappa(k)?;
        let probe = profile.cells(1)?.remove(0);
        let per_cell = profile.descendants(&probe, 1 + i)?;
        groups.insert(per_cell, cells);
    } else {
        for cell in profile.cells(k)? {
            *groups.entry(profile.descendants(&cell, k + i)?).or_insert(0) += 1;
        }
    }
    Ok(groups)
}

const EXP_BITS: u64 = 256;

/// Lower bound for `e^x`, `x = num/den >= 0`, scaled by `2^EXP_BITS`.
///
/// Taylor terms are floored, so the partial sum never exceeds `e^x`.
fn exp_lower_scaled(x: &BigRational) -> BigUint {
    let num = x.numer().to_biguint().expect("nonnegative");
    let den = x.denom().to_biguint().expect("positive");
    let mut term = BigUint::one() << EXP_BITS;
    let mut sum = term.clone();
    let mut n: u64 = 1;
    loop {
        term = (&term * &num) / (&den * n);
        if term.is_zero() {
            break;
        }
        sum += &term;
        n += 1;
    }
    sum
}

/// Certified lower bound `1 - κ(k) e^{-r L_k}` on the covering fraction.
///
/// The exponential is bounded above through a floored Taylor sum and the
/// result is rounded down to a multiple of `2^-64`, so the returned rational
/// never exceeds the true value. It is negative (vacuous) for small `r`.
pub fn covering_fraction_bound(
    profile: &TreeProfile,
    k: usize,
    r: u64,
) -> Result<BigRational> {
    let kappa = BigInt::from(profile.kappa(k)?);
    let x = profile.lower_bound(k)? * BigInt::from(r);
    if x.is_negative() {
        return Err(Error::invalid("lower bound must be positive"));
    }
    let exp_scaled = BigInt::from(exp_lower_scaled(&x));
    let one_scaled = BigInt::one() << EXP_BITS;
    // 1 - κ e^{-x} >= 1 - κ 2^B / S  where S <= e^x 2^B
    let out_bits = 64u32;
    let numer = (&exp_scaled - &kappa * &one_scaled) << out_bits;
    let floored = numer.div_floor(&exp_scaled);
    Ok(BigRational::new(floored, BigInt::one() << out_bits))
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    let (n, d) = (q.numer(), q.denom());
    let shift = n.bits().max(d.bits()).saturating_sub(60);
    let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
    if d == 0.0 {
        if n.is_sign_negative() || q.numer().sign() == Sign::Minus {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        n / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::Word;

    /// Enumerates every r-subset of level-(k+i) cells and checks coverage.
    fn brute_force(profile: &TreeProfile, k: usize, i: usize, r: u32) -> u64 {
        let fine = profile.cells(k + i).unwrap();
        let coarse = profile.cells(k).unwrap();
        let parent: Vec<usize> = fine
            .iter()
            .map(|c| {
                let a: Word = profile.ancestor(c, k).unwrap();
                coarse.iter().position(|x| *x == a).unwrap()
            })
            .collect();
        let full: u64 = (1u64 << coarse.len()) - 1;
        (0u64..1 << fine.len())
            .filter(|mask| mask.count_ones() == r)
            .filter(|mask| {
                let hit = (0..fine.len())
                    .filter(|b| mask >> b & 1 == 1)
                    .fold(0u64, |acc, b| acc | 1 << parent[b]);
                hit == full
            })
            .count() as u64
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(52, 5), BigUint::from(2_598_960u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
    }

    #[test]
    fn small_example() {
        let p = TreeProfile::one_sided(2).unwrap();
        let c = count_covering_subsets(&p, 1, 1, 2).unwrap();
        assert_eq!(c.count, BigUint::from(4u32));
        assert_eq!(c.total, BigUint::from(6u32));
        let c = count_covering_subsets(&p, 1, 1, 4).unwrap();
        assert_eq!(c.count, BigUint::one());
        let c = count_covering_subsets(&p, 1, 1, 5).unwrap();
        assert!(c.oversized && c.count.is_zero());
    }

    #[test]
    fn matches_enumeration_on_custom_tree() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let p = TreeProfile::custom(
            3,
            vec![vec![1, 2, 4], vec![2, 1, 3, 1, 2, 1, 1]],
            vec![q(1, 11), q(1, 11), q(1, 11)],
        )
        .unwrap();
        for k in 1..=3 {
            for i in 0..=3 - k {
                let fine = p.kappa(k + i).unwrap();
                for r in 0..=fine {
                    let c = count_covering_subsets(&p, k, i, r).unwrap();
                    assert_eq!(
                        c.count,
                        BigUint::from(brute_force(&p, k, i, r as u32)),
                        "k={k} i={i} r={r}"
                    );
                }
            }
        }
    }

    #[test]
    fn bound_example() {
        let p = TreeProfile::one_sided(2).unwrap();
        let b = rational_to_f64(&covering_fraction_bound(&p, 1, 20).unwrap());
        let expect = 1.0 - 2.0 * (-10f64).exp();
        assert!((b - expect).abs() < 1e-12 && b <= expect, "{b} vs {expect}");
        let b = covering_fraction_bound(&p, 1, 0).unwrap();
        assert_eq!(b, BigRational::from_integer((-1).into()));
    }

    #[test]
    fn exp_lower_bound_is_tight() {
        let x = BigRational::new(7.into(), 3.into());
        let s = exp_lower_scaled(&x);
        let approx = rational_to_f64(&BigRational::new(s.into(), BigInt::one() << EXP_BITS));
        assert!((approx - (7.0f64 / 3.0).exp()).abs() < 1e-12);
    }
}
