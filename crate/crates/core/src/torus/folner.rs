use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::caps::Caps;
use crate::error::{Error, Result};

/// The first `k` primes.
pub fn first_primes(k: usize) -> Vec<u64> {
    if k == 0 {
        return Vec::new();
    }
    // p_k < k (ln k + ln ln k) for k >= 6
    let kf = k.max(6) as f64;
    let limit = (kf * (kf.ln() + kf.ln().ln())).ceil() as usize + 1;
    let mut sieve = vec![true; limit + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= limit {
        if sieve[i] {
            let mut j = i * i;
            while j <= limit {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    (0..=limit).filter(|&x| sieve[x]).map(|x| x as u64).take(k).collect()
}

/// Product of the first `k` primes.
pub fn primorial(k: usize) -> BigUint {
    first_primes(k).into_iter().fold(BigUint::one(), |acc, p| acc * p)
}

/// `{p_1^{i_1} ... p_m^{i_m} : 0 <= i_j <= m}`.
#[derive(Debug, Clone, Serialize)]
pub struct FolnerSet {
    pub m: usize,
    pub primes: Vec<u64>,
    #[serde(with = "crate::rational_string::vec")]
    pub elements: Vec<BigUint>,
}

impl FolnerSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements as machine integers, if they all fit.
    pub fn elements_u64(&self) -> Option<Vec<u64>> {
        self.elements.iter().map(|e| e.to_u64()).collect()
    }

    pub fn max(&self) -> BigUint {
        self.elements.iter().max().cloned().unwrap_or_else(BigUint::one)
    }
}

/// Multiplicative Folner set with exponents `0..=m` over `primes` (default:
/// the first `m` primes). Elements are listed with the last exponent varying
/// slowest.
pub fn folner_mult(m: usize, primes: Option<&[u64]>, caps: &Caps) -> Result<FolnerSet> {
    let primes = match primes {
        Some(p) => {
            if p.len() != m {
                return Err(Error::invalid(format!("expected {m} primes, got {}", p.len())));
            }
            let mut sorted = p.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != m || sorted.iter().any(|&x| x < 2) {
                return Err(Error::invalid("primes must be distinct and at least 2"));
            }
            p.to_vec()
        }
        None => first_primes(m),
    };
    let size = (m as u64 + 1)
        .checked_pow(m as u32)
        .filter(|&s| s <= caps.folner)
        .ok_or_else(|| Error::size_limit("Folner set", format!("{}^{m}", m + 1), caps.folner))?;
    let mut elements = vec![BigUint::one()];
    for &p in &primes {
        let mut next = Vec::with_capacity(elements.len() * (m + 1));
        let mut power = BigUint::one();
        for _ in 0..=m {
            next.extend(elements.iter().map(|e| e * &power));
            power *= p;
        }
        elements = next;
    }
    debug_assert_eq!(elements.len() as u64, size);
    Ok(FolnerSet { m, primes, elements })
}
