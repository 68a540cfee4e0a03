use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::arcs::ExactFraction;
use super::folner::{first_primes, folner_mult, primorial};
use crate::caps::Caps;
use crate::error::{Error, Result};

/// How `Q(i+1)` is chosen from `Q(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Smallest primorial with `Q(i+1) > 4 M_{2m_i} Q(i)` and `Q(i+1) > 2^{i+2} M_{2m_i}`.
    True,
    /// `Q(i+1) = 4 Q(i) p` with `p` the first prime not dividing `Q(i)`.
    /// Too slow for the condensation argument; for qualitative runs only.
    Scaled,
}

/// `M_k = max F_k = (p_1 ⋯ p_k)^k`.
pub fn folner_max(k: usize) -> BigUint {
    Pow::pow(primorial(k), k)
}

const TRUE_RULE_MAX: usize = 3;
const POINTS_MAX: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct BerendPeres {
    pub growth: Growth,
    /// Set for the scaled rule, whose output does not satisfy the growth conditions.
    pub flagged: bool,
    /// `m_i`: the number of distinct primes dividing `Q(i)`.
    pub m: Vec<usize>,
    #[serde(with = "crate::rational_string::vec")]
    pub q: Vec<BigUint>,
    /// Bit lengths of `Q(i)`.
    pub bits: Vec<u64>,
}

pub fn berend_peres(i_max: usize, growth: Growth, caps: &Caps) -> Result<BerendPeres> {
    if i_max == 0 {
        return Err(Error::invalid("i_max must be positive"));
    }
    if growth == Growth::True && i_max > TRUE_RULE_MAX {
        return Err(Error::invalid(format!(
            "the true growth rule is limited to i_max <= {TRUE_RULE_MAX}; use the scaled rule"
        )));
    }
    let mut m = vec![1usize];
    let mut q = vec![BigUint::from(2u32)];
    for i in 1..i_max {
        let (mi, qi) = (m[i - 1], &q[i - 1]);
        let (next_m, next_q) = match growth {
            Growth::True => {
                let big_m = folner_max(2 * mi);
                check_bits(&big_m, caps)?;
                let a = BigUint::from(4u32) * &big_m * qi;
                let b = (BigUint::one() << (i + 2)) * &big_m;
                let target = a.max(b);
                smallest_primorial_above(&target, mi, caps)?
            }
            Growth::Scaled => {
                let p = *first_primes(mi + 1).last().expect("nonempty");
                (mi + 1, BigUint::from(4u32) * qi * p)
            }
        };
        check_bits(&next_q, caps)?;
        m.push(next_m);
        q.push(next_q);
    }
    Ok(BerendPeres {
        growth,
        flagged: growth == Growth::Scaled,
        bits: q.iter().map(|x| x.bits()).collect(),
        m,
        q,
    })
}

fn check_bits(x: &BigUint, caps: &Caps) -> Result<()> {
    if x.bits() > caps.bits {
        return Err(Error::size_limit("integer bit length (use the scaled rule)", x.bits(), caps.bits));
    }
    Ok(())
}

fn smallest_primorial_above(target: &BigUint, at_least: usize, caps: &Caps) -> Result<(usize, BigUint)> {
    let mut count = (at_least + 1).max(16);
    loop {
        let primes = first_primes(count);
        let mut acc = BigUint::one();
        for (k, &p) in primes.iter().enumerate() {
            acc *= p;
            if k + 1 > at_least && acc > *target {
                return Ok((k + 1, acc));
            }
        }
        check_bits(&acc, caps)?;
        count *= 2;
    }
}

impl BerendPeres {
    /// `Y_t = {Σ_{ℓ<=t} ε_ℓ / Q(ℓ) : ε ∈ {0,1}^t}`, mod 1.
    pub fn points(&self, t: usize) -> Result<Vec<ExactFraction>> {
        if t > self.q.len() {
            return Err(Error::range(format!("only {} terms were constructed", self.q.len())));
        }
        if t > POINTS_MAX {
            return Err(Error::size_limit("truncated set points", format!("2^{t}"), 1 << POINTS_MAX));
        }
        let mut pts = vec![BigRational::zero()];
        for qi in &self.q[..t] {
            let step = BigRational::new(BigInt::one(), BigInt::from(qi.clone()));
            let shifted: Vec<BigRational> = pts.iter().map(|p| p + &step).collect();
            pts.extend(shifted);
        }
        let mut out: Vec<ExactFraction> = pts.into_iter().map(ExactFraction::from_rational).collect();
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// `F_m` elements up to `M_{2 m_i}`, the range the growth conditions are built for.
    pub fn valid_folner_index(&self, i: usize) -> usize {
        2 * self.m[i - 1]
    }

    pub fn condensation_stat(&self, m: usize, delta: &BigRational, t: usize, caps: &Caps) -> Result<CondensationStat> {
        let pts = self.points(t)?;
        let f = folner_mult(m, None, caps)?;
        let hits = f
            .elements
            .par_iter()
            .filter(|n| hausdorff_to_zero(n, &pts) < *delta)
            .count() as u64;
        let total = f.len() as u64;
        Ok(CondensationStat {
            m,
            t,
            delta: delta.clone(),
            hits,
            total,
            fraction: BigRational::new(hits.into(), total.into()),
        })
    }

    /// Checks `Q(i) | n ⇒ d_H(nY_t, {0}) < 2^-i` on every `n ∈ F_m`.
    pub fn check_implication(&self, i: usize, m: usize, t: usize, caps: &Caps) -> Result<ImplicationCheck> {
        if i == 0 || i > self.q.len() {
            return Err(Error::range(format!("i must lie in 1..={}", self.q.len())));
        }
        let pts = self.points(t)?;
        let qi = &self.q[i - 1];
        let f = folner_mult(m, None, caps)?;
        let bound = BigRational::new(BigInt::one(), BigInt::one() << i);
        let distances: Vec<BigRational> = f
            .elements
            .par_iter()
            .filter(|n| n.is_multiple_of(qi))
            .map(|n| hausdorff_to_zero(n, &pts))
            .collect();
        let violations = distances.iter().filter(|d| **d >= bound).count() as u64;
        Ok(ImplicationCheck {
            i,
            m,
            t,
            divisible: distances.len() as u64,
            violations,
            max_distance: distances.into_iter().max(),
            bound,
        })
    }
}

/// `d_H(nY, {0}) = max_{y ∈ Y} ‖ny‖`.
pub fn hausdorff_to_zero(n: &BigUint, pts: &[ExactFraction]) -> BigRational {
    pts.iter()
        .map(|y| y.dilate(n).norm())
        .max()
        .unwrap_or_else(BigRational::zero)
}

#[derive(Debug, Clone, Serialize)]
pub struct CondensationStat {
    pub m: usize,
    pub t: usize,
    #[serde(with = "crate::rational_string")]
    pub delta: BigRational,
    pub hits: u64,
    pub total: u64,
    #[serde(with = "crate::rational_string")]
    pub fraction: BigRational,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImplicationCheck {
    pub i: usize,
    pub m: usize,
    pub t: usize,
    /// Elements of `F_m` divisible by `Q(i)`.
    pub divisible: u64,
    pub violations: u64,
    #[serde(with = "crate::rational_string::option")]
    pub max_distance: Option<BigRational>,
    #[serde(with = "crate::rational_string")]
    pub bound: BigRational,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivisibilityCount {
    pub m: usize,
    pub s: usize,
    pub direct: u64,
    pub total: u64,
    #[serde(with = "crate::rational_string")]
    pub formula: BigRational,
    pub matches: bool,
}

/// Elements of `F_m` divisible by `p_1 ⋯ p_s`, against `(m/(m+1))^s`.
pub fn divisibility_fraction(m: usize, s: usize, caps: &Caps) -> Result<DivisibilityCount> {
    if s > m {
        return Err(Error::invalid("s must not exceed m"));
    }
    let f = folner_mult(m, None, caps)?;
    let d = primorial(s);
    let direct = f.elements.iter().filter(|n| n.is_multiple_of(&d)).count() as u64;
    let total = f.len() as u64;
    let formula = Pow::pow(&BigRational::new(BigInt::from(m), BigInt::from(m + 1)), s);
    let matches = BigRational::new(direct.into(), total.into()) == formula;
    Ok(DivisibilityCount {
        m,
        s,
        direct,
        total,
        formula,
        matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn true_rule_sequence() {
        let bp = berend_peres(3, Growth::True, &Caps::default()).unwrap();
        assert_eq!(&bp.m[..2], &[1, 5]);
        assert_eq!(bp.q[1], BigUint::from(2310u32));
        // Q(3) exceeds both thresholds and is the smallest primorial to do so
        let big_m = folner_max(10);
        assert!(bp.q[2] > BigUint::from(4u32) * &big_m * 2310u32);
        assert!(primorial(bp.m[2] - 1) <= BigUint::from(4u32) * &big_m * 2310u32);
        assert!(!bp.flagged);
        assert!(berend_peres(4, Growth::True, &Caps::default()).is_err());
    }

    #[test]
    fn scaled_rule_is_flagged() {
        let bp = berend_peres(4, Growth::Scaled, &Caps::default()).unwrap();
        assert!(bp.flagged);
        assert_eq!(bp.q[1], BigUint::from(24u32));
        assert_eq!(bp.q[2], BigUint::from(480u32));
    }

    #[test]
    fn folner_max_matches_sets() {
        for k in 1..=4 {
            let f = folner_mult(k, None, &Caps::default()).unwrap();
            assert_eq!(f.max(), folner_max(k));
        }
    }

    #[test]
    fn single_term_set() {
        let bp = berend_peres(2, Growth::True, &Caps::default()).unwrap();
        let pts = bp.points(1).unwrap();
        assert_eq!(pts, vec![ExactFraction::zero(), ExactFraction::new(1, 2).unwrap()]);
        // nY_1 = {0} for even n, {0, 1/2} otherwise
        let c = bp.condensation_stat(2, &q(1, 4), 1, &Caps::default()).unwrap();
        assert_eq!((c.hits, c.total), (6, 9));
    }

    #[test]
    fn implication_holds() {
        let caps = Caps::default();
        let bp = berend_peres(3, Growth::True, &caps).unwrap();
        for m in 1..=2 {
            let c = bp.check_implication(1, m, 3, &caps).unwrap();
            assert_eq!(c.violations, 0);
            assert!(c.divisible > 0);
        }
        let c = bp.check_implication(2, 5, 3, &caps).unwrap();
        assert_eq!((c.divisible, c.violations), (3125, 0));
    }

    #[test]
    fn divisibility_counts() {
        for m in 1..=4 {
            for s in 0..=m {
                let d = divisibility_fraction(m, s, &Caps::default()).unwrap();
                assert!(d.matches, "m={m} s={s}");
            }
        }
    }
}
