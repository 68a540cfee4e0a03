use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the circle `[0, 1)` as an exact reduced fraction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactFraction(BigRational);

impl ExactFraction {
    /// Reduces `num / den` modulo 1.
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::invalid("zero denominator"));
        }
        Ok(Self::from_rational(BigRational::new(num.into(), den)))
    }

    pub fn from_rational(q: BigRational) -> Self {
        ExactFraction(frac(&q))
    }

    pub fn zero() -> Self {
        ExactFraction(BigRational::zero())
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    /// `n x mod 1`.
    pub fn dilate(&self, n: &BigUint) -> Self {
        Self::from_rational(&self.0 * BigInt::from(n.clone()))
    }

    /// Distance to `0` along the circle.
    pub fn norm(&self) -> BigRational {
        let other = BigRational::one() - &self.0;
        if other < self.0 {
            other
        } else {
            self.0.clone()
        }
    }
}

impl fmt::Display for ExactFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for ExactFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for ExactFraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ExactFraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let q: BigRational = crate::rational_string::deserialize(d)?;
        Ok(ExactFraction::from_rational(q))
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac(q: &BigRational) -> BigRational {
    let (num, den) = (q.numer(), q.denom());
    BigRational::new(num.mod_floor(den), den.clone())
}

/// A finite union of closed arcs `[a, b]` with `0 <= a <= b <= 1`, sorted
/// and pairwise disjoint. An arc through `0` is stored as `[a, 1]` plus
/// `[0, b]`, and `1` is identified with `0` when measuring gaps.
#[derive(Clone, PartialEq, Eq)]
pub struct IntervalUnion {
    arcs: Vec<(BigRational, BigRational)>,
}

impl IntervalUnion {
    pub fn full() -> Self {
        IntervalUnion {
            arcs: vec![(BigRational::zero(), BigRational::one())],
        }
    }

    /// Normalizes any nonempty list of arcs inside `[0, 1]`.
    pub fn new(arcs: Vec<(BigRational, BigRational)>) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::invalid("an interval union needs at least one arc"));
        }
        let zero = BigRational::zero();
        let one = BigRational::one();
        if let Some((a, b)) = arcs.iter().find(|(a, b)| a > b || *a < zero || *b > one) {
            return Err(Error::invalid(format!("arc [{a}, {b}] is not inside [0, 1]")));
        }
        Ok(Self::merge(arcs))
    }

    /// Closed arc of length `len` starting at `start`, wrapped around the circle.
    pub fn arc(start: &BigRational, len: &BigRational) -> Vec<(BigRational, BigRational)> {
        if *len >= BigRational::one() {
            return vec![(BigRational::zero(), BigRational::one())];
        }
        let s = frac(start);
        let e = &s + len;
        if e <= BigRational::one() {
            vec![(s, e)]
        } else {
            vec![(s, BigRational::one()), (BigRational::zero(), e - BigRational::one())]
        }
    }

    fn merge(mut arcs: Vec<(BigRational, BigRational)>) -> Self {
        arcs.sort();
        let mut out: Vec<(BigRational, BigRational)> = Vec::with_capacity(arcs.len());
        for (a, b) in arcs {
            match out.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => out.push((a, b)),
            }
        }
        IntervalUnion { arcs: out }
    }

    pub fn arcs(&self) -> &[(BigRational, BigRational)] {
        &self.arcs
    }

    /// Lebesgue measure, counting the overlap of `[a, 1]` and `[0, b]` once.
    pub fn measure(&self) -> BigRational {
        self.arcs
            .iter()
            .fold(BigRational::zero(), |acc, (a, b)| acc + b - a)
    }

    pub fn is_full(&self) -> bool {
        self.max_gap().is_zero()
    }

    /// Largest circular gap between consecutive arcs.
    pub fn max_gap(&self) -> BigRational {
        let mut best = BigRational::zero();
        for w in self.arcs.windows(2) {
            let g = &w[1].0 - &w[0].1;
            if g > best {
                best = g;
            }
        }
        let first = &self.arcs[0];
        let last = &self.arcs[self.arcs.len() - 1];
        let wrap = &first.0 + BigRational::one() - &last.1;
        if wrap > best {
            best = wrap;
        }
        best
    }

    pub fn contains(&self, x: &ExactFraction) -> bool {
        let v = x.value();
        let one = BigRational::one();
        self.arcs
            .iter()
            .any(|(a, b)| (a <= v && v <= b) || (v.is_zero() && *b == one))
    }

    /// `{n x mod 1 : x ∈ U}`; an arc of length `L` covers `min(1, nL)` of the circle.
    pub fn dilate(&self, n: &BigUint) -> IntervalUnion {
        if n.is_zero() {
            return IntervalUnion {
                arcs: vec![(BigRational::zero(), BigRational::zero())],
            };
        }
        let n = BigInt::from(n.clone());
        let mut out = Vec::new();
        for (a, b) in &self.arcs {
            let len = (b - a) * &n;
            out.extend(Self::arc(&(a * &n), &len));
            if len >= BigRational::one() {
                return IntervalUnion::full();
            }
        }
        Self::merge(out)
    }

    /// Subset test on point sets (arcs of `self` inside arcs of `other`).
    pub fn is_subset_of(&self, other: &IntervalUnion) -> bool {
        self.arcs
            .iter()
            .all(|(a, b)| other.arcs.iter().any(|(c, d)| c <= a && b <= d))
    }
}

impl fmt::Debug for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.arcs.iter().map(|(a, b)| format!("[{a}, {b}]")).collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}

impl Serialize for IntervalUnion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self
            .arcs
            .iter()
            .map(|(a, b)| [a.to_string(), b.to_string()])
            .collect();
        pairs.serialize(s)
    }
}

/// Whether every point of the circle is strictly within `eps` of `U`
/// (equivalently, the largest gap is below `2 eps`), with that gap.
pub fn eps_dense(u: &IntervalUnion, eps: &BigRational) -> (bool, BigRational) {
    let g = u.max_gap();
    (g < eps * BigInt::from(2) && eps.is_positive(), g)
}
