use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::arcs::IntervalUnion;
use crate::caps::Caps;
use crate::error::{Error, Result};

/// Automaton states are limited to this many entries.
const STATE_LIMIT: u64 = 1 << 20;

/// A closed subset of the circle given by base-`p` expansions: every digit is
/// drawn from `allowed` and no word of `forbidden` occurs. Only words that
/// extend to an infinite admissible sequence are counted as admissible.
#[derive(Debug, Clone, Serialize)]
pub struct DigitSet {
    base: u8,
    allowed: Vec<u8>,
    forbidden: Vec<Vec<u8>>,
    #[serde(skip)]
    allowed_mask: Vec<bool>,
    /// Memory of the automaton: `max |forbidden| - 1`.
    #[serde(skip)]
    memory: usize,
    /// Live states indexed by the last `memory` digits read in base `p`.
    #[serde(skip)]
    live: Vec<bool>,
    /// `live_prefix[j][v]`: the length-`j` word with value `v` extends to a live state.
    #[serde(skip)]
    live_prefix: Vec<Vec<bool>>,
}

impl DigitSet {
    /// Digits restricted to a whitelist, the same at every position.
    pub fn whitelist(base: u8, digits: &[u8]) -> Result<Self> {
        Self::new(base, digits, &[])
    }

    /// Every digit allowed, with a list of forbidden words.
    pub fn sft(base: u8, forbidden: &[Vec<u8>]) -> Result<Self> {
        let all: Vec<u8> = (0..base).collect();
        Self::new(base, &all, forbidden)
    }

    /// Middle-thirds Cantor set: base 3, digits {0, 2}.
    pub fn cantor() -> Self {
        Self::whitelist(3, &[0, 2]).expect("valid digit set")
    }

    /// Golden-mean shift: base 2, word `11` forbidden.
    pub fn golden_mean() -> Self {
        Self::sft(2, &[vec![1, 1]]).expect("valid digit set")
    }

    pub fn new(base: u8, digits: &[u8], forbidden: &[Vec<u8>]) -> Result<Self> {
        if base < 2 {
            return Err(Error::invalid("base must be at least 2"));
        }
        let mut allowed = digits.to_vec();
        allowed.sort_unstable();
        allowed.dedup();
        if allowed.is_empty() || allowed.iter().any(|&d| d >= base) {
            return Err(Error::invalid(format!("digits must be a nonempty subset of 0..{base}")));
        }
        if forbidden.iter().any(|w| w.is_empty() || w.iter().any(|&d| d >= base)) {
            return Err(Error::invalid("forbidden words must be nonempty words over the base"));
        }
        let mut allowed_mask = vec![false; base as usize];
        for &d in &allowed {
            allowed_mask[d as usize] = true;
        }
        let memory = forbidden.iter().map(Vec::len).max().unwrap_or(1) - 1;
        let states = (base as u64)
            .checked_pow(memory as u32)
            .filter(|&s| s <= STATE_LIMIT)
            .ok_or_else(|| Error::size_limit("digit automaton states", format!("{base}^{memory}"), STATE_LIMIT))?;
        let mut set = DigitSet {
            base,
            allowed,
            forbidden: forbidden.to_vec(),
            allowed_mask,
            memory,
            live: vec![false; states as usize],
            live_prefix: Vec::new(),
        };
        set.build_automaton();
        if !set.live.iter().any(|&b| b) {
            return Err(Error::invalid("digit set is empty"));
        }
        Ok(set)
    }

    fn build_automaton(&mut self) {
        let states = self.live.len();
        let p = self.base as usize;
        // a state is valid when its own digits form an admissible word
        let valid: Vec<bool> = (0..states)
            .map(|s| {
                let w = self.state_word(s as u64);
                w.iter().all(|&d| self.allowed_mask[d as usize])
                    && (0..w.len()).all(|end| !self.forbidden_suffix(&w[..=end]))
            })
            .collect();
        let mut live = valid.clone();
        loop {
            let mut changed = false;
            for s in 0..states {
                if !live[s] {
                    continue;
                }
                let w = self.state_word(s as u64);
                let has_succ = (0..p as u8).any(|d| self.step_ok(&w, d) && live[self.next_state(s as u64, d) as usize]);
                if !has_succ {
                    live[s] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.live = live;
        let mut prefixes: Vec<Vec<bool>> = (0..=self.memory).map(|j| vec![false; p.pow(j as u32)]).collect();
        for s in 0..states {
            if self.live[s] {
                for (j, row) in prefixes.iter_mut().enumerate() {
                    row[s / p.pow((self.memory - j) as u32)] = true;
                }
            }
        }
        self.live_prefix = prefixes;
    }

    fn state_word(&self, s: u64) -> Vec<u8> {
        let p = self.base as u64;
        let mut w = vec![0u8; self.memory];
        let mut v = s;
        for slot in w.iter_mut().rev() {
            *slot = (v % p) as u8;
            v /= p;
        }
        w
    }

    fn next_state(&self, s: u64, d: u8) -> u64 {
        if self.memory == 0 {
            return 0;
        }
        let modulus = (self.base as u64).pow(self.memory as u32);
        (s * self.base as u64 + d as u64) % modulus
    }

    fn forbidden_suffix(&self, w: &[u8]) -> bool {
        self.forbidden.iter().any(|f| w.ends_with(f))
    }

    /// `d` is allowed after `w` as far as local rules go.
    fn step_ok(&self, w: &[u8], d: u8) -> bool {
        if !self.allowed_mask[d as usize] {
            return false;
        }
        if self.forbidden.is_empty() {
            return true;
        }
        let keep = self.memory.min(w.len());
        let mut tail = w[w.len() - keep..].to_vec();
        tail.push(d);
        !self.forbidden_suffix(&tail)
    }

    fn value(&self, w: &[u8]) -> usize {
        w.iter().fold(0usize, |acc, &d| acc * self.base as usize + d as usize)
    }

    /// For an admissible word `w`, whether `w d` is admissible.
    pub fn extends(&self, w: &[u8], d: u8) -> bool {
        if !self.step_ok(w, d) {
            return false;
        }
        if self.memory == 0 {
            return true;
        }
        let len = w.len() + 1;
        if len <= self.memory {
            let v = self.value(w) * self.base as usize + d as usize;
            self.live_prefix[len][v]
        } else {
            let tail = &w[w.len() + 1 - self.memory..];
            let v = (self.value(tail) * self.base as usize + d as usize) % self.live.len();
            self.live[v]
        }
    }

    pub fn is_admissible(&self, w: &[u8]) -> bool {
        (0..w.len()).all(|i| w[i] < self.base && self.extends(&w[..i], w[i]))
    }

    pub fn base(&self) -> u8 {
        self.base
    }

    pub fn allowed(&self) -> &[u8] {
        &self.allowed
    }

    pub fn forbidden(&self) -> &[Vec<u8>] {
        &self.forbidden
    }

    /// No forbidden words, so the shift maps the set onto itself.
    pub fn is_whitelist(&self) -> bool {
        self.forbidden.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.forbidden.is_empty() && self.allowed.len() == self.base as usize
    }

    /// Whether `w 0^∞` and `w (p-1)^∞` belong to the set for every admissible `w`
    /// of length at least `memory`, so cylinder endpoints are points of the set.
    pub fn endpoint_closed(&self) -> bool {
        let top = self.base - 1;
        [0u8, top].iter().all(|&d| {
            (0..self.live.len() as u64).filter(|&s| self.live[s as usize]).all(|s| {
                let mut w = self.state_word(s);
                (0..=self.memory).all(|_| {
                    let ok = self.step_ok(&w, d);
                    w.push(d);
                    ok
                })
            })
        })
    }

    /// Length of the suffix that determines admissibility of the next digit.
    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Number of admissible words of length `m`.
    pub fn count_words(&self, m: usize) -> BigUint {
        if m <= self.memory {
            return BigUint::from(self.live_prefix[m].iter().filter(|&&b| b).count());
        }
        let mut counts: Vec<BigUint> = self
            .live
            .iter()
            .map(|&b| if b { BigUint::one() } else { BigUint::zero() })
            .collect();
        for _ in self.memory..m {
            let mut next = vec![BigUint::zero(); counts.len()];
            for (s, c) in counts.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let w = self.state_word(s as u64);
                for d in 0..self.base {
                    let t = self.next_state(s as u64, d) as usize;
                    if self.step_ok(&w, d) && self.live[t] {
                        next[t] += c;
                    }
                }
            }
            counts = next;
        }
        counts.into_iter().sum()
    }

    /// Calls `f` on every admissible word of length `m`, in lexicographic order.
    pub fn for_each_word(&self, m: usize, cap: u64, mut f: impl FnMut(&[u8])) -> Result<()> {
        let count = self.count_words(m);
        if count > BigUint::from(cap) {
            return Err(Error::size_limit("admissible digit words", count, cap));
        }
        let mut word = Vec::with_capacity(m);
        self.walk(&mut word, m, &mut f);
        Ok(())
    }

    fn walk(&self, word: &mut Vec<u8>, m: usize, f: &mut impl FnMut(&[u8])) {
        if word.len() == m {
            f(word);
            return;
        }
        for &d in &self.allowed {
            if self.extends(word, d) {
                word.push(d);
                self.walk(word, m, f);
                word.pop();
            }
        }
    }

    pub fn words(&self, m: usize, cap: u64) -> Result<Vec<Vec<u8>>> {
        let mut out = Vec::new();
        self.for_each_word(m, cap, |w| out.push(w.to_vec()))?;
        Ok(out)
    }

    /// Checks that dropping the first digit of every admissible length-`m`
    /// word leaves an admissible word, as required for shift invariance.
    pub fn check_shift_invariance(&self, m: usize, cap: u64) -> Result<bool> {
        let mut ok = true;
        self.for_each_word(m.max(1), cap, |w| ok &= self.is_admissible(&w[1..]))?;
        Ok(ok)
    }
}

/// Union of the closed arcs `[e(w)/p^m, (e(w)+1)/p^m]` over admissible `w`.
pub fn cover(y: &DigitSet, m: usize, caps: &Caps) -> Result<IntervalUnion> {
    let p = BigInt::from(y.base);
    let den = num_traits::Pow::pow(&p, m as u32);
    let mut arcs = Vec::new();
    y.for_each_word(m, caps.cover_words, |w| {
        let e = w.iter().fold(BigInt::zero(), |acc, &d| acc * &p + d);
        let a = BigRational::new(e.clone(), den.clone());
        let b = BigRational::new(e + 1, den.clone());
        arcs.push((a, b));
    })?;
    IntervalUnion::new(arcs)
}
