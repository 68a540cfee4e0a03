use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_POINTS: u64 = 10_000_000;

/// Which integers `s_i` multiply `α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sequence {
    Naturals,
    Squares,
    Custom(Vec<u64>),
}

impl Sequence {
    fn term(&self, i: u64) -> u128 {
        match self {
            Sequence::Naturals => i as u128,
            Sequence::Squares => i as u128 * i as u128,
            Sequence::Custom(v) => v[(i - 1) as usize] as u128,
        }
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sequence::Naturals => write!(f, "naturals"),
            Sequence::Squares => write!(f, "squares"),
            Sequence::Custom(v) => write!(f, "custom({})", v.len()),
        }
    }
}

/// A real number through its fractional part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Alpha {
    /// `√d`.
    Sqrt(u64),
    /// `(√5 - 1) / 2`.
    GoldenConjugate,
    /// `p / q`, for which the points are periodic.
    Rational { num: u64, den: u64 },
}

impl Alpha {
    /// `frac(α)` as a 128-bit binary fraction, truncated.
    fn fixed_point(&self) -> u128 {
        match self {
            Alpha::Sqrt(d) => {
                let root = (BigUint::from(*d) << 256u32).sqrt();
                low_u128(&root)
            }
            Alpha::GoldenConjugate => {
                let root = (BigUint::from(5u32) << 256u32).sqrt();
                low_u128(&((root - (BigUint::from(1u32) << 128u32)) >> 1u32))
            }
            Alpha::Rational { num, den } => {
                let r = (BigUint::from(num % den) << 128u32) / den;
                low_u128(&r)
            }
        }
    }

    /// Rational inputs, including perfect squares under the root.
    pub fn is_rational(&self) -> bool {
        match self {
            Alpha::Sqrt(d) => {
                let r = (*d as f64).sqrt().round() as u64;
                (r.saturating_sub(1)..=r + 1).any(|x| x * x == *d)
            }
            Alpha::GoldenConjugate => false,
            Alpha::Rational { .. } => true,
        }
    }
}

fn low_u128(x: &BigUint) -> u128 {
    let mask = (BigUint::from(1u32) << 128u32) - 1u32;
    (x & mask).to_u128().expect("masked to 128 bits")
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Sqrt(d) => write!(f, "sqrt{d}"),
            Alpha::GoldenConjugate => write!(f, "golden"),
            Alpha::Rational { num, den } => write!(f, "{num}/{den}"),
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    /// `sqrtD`, `golden`, `0`, or `p/q`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "golden" {
            return Ok(Alpha::GoldenConjugate);
        }
        if let Some(d) = s.strip_prefix("sqrt") {
            let d = d.trim_matches(|c| c == '(' || c == ')');
            return d
                .parse()
                .map(Alpha::Sqrt)
                .map_err(|_| Error::invalid(format!("bad alpha `{s}`")));
        }
        let (num, den) = s.split_once('/').unwrap_or((s, "1"));
        let num: u64 = num.parse().map_err(|_| Error::invalid(format!("bad alpha `{s}`")))?;
        let den: u64 = den.parse().map_err(|_| Error::invalid(format!("bad alpha `{s}`")))?;
        if den == 0 {
            return Err(Error::invalid("alpha denominator must be positive"));
        }
        Ok(Alpha::Rational { num, den })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeylResult {
    pub sequence: String,
    pub alpha: Vec<String>,
    pub n: u64,
    /// Star discrepancy per coordinate.
    pub coordinates: Vec<f64>,
    /// Largest coordinate discrepancy, or the box estimate in dimension > 1.
    pub discrepancy: f64,
    /// `sup |#{x ∈ B}/N - vol(B)|` over anchored boxes with corners on a grid.
    pub box_estimate: Option<f64>,
    /// Some coordinate is rational, so the points do not equidistribute.
    pub rational_alpha: bool,
}

/// Star discrepancy of `{s_i α mod 1 : 1 <= i <= N}`.
///
/// Points are computed in 128-bit fixed point: `s_i · frac(α)` wraps mod 1
/// exactly, so the only error is the truncation of `α` times `s_i`.
pub fn weyl_discrepancy(seq: &Sequence, alpha: &[Alpha], n: u64, grid: usize) -> Result<WeylResult> {
    if n == 0 || n > MAX_POINTS {
        return Err(Error::size_limit("Weyl points", n, MAX_POINTS));
    }
    if alpha.is_empty() {
        return Err(Error::invalid("alpha needs at least one coordinate"));
    }
    if let Sequence::Custom(v) = seq {
        if (v.len() as u64) < n {
            return Err(Error::invalid(format!("custom sequence has only {} terms", v.len())));
        }
    }
    let columns: Vec<Vec<f64>> = alpha
        .iter()
        .map(|a| {
            let f = a.fixed_point();
            (1..=n).map(|i| to_unit(seq.term(i).wrapping_mul(f))).collect()
        })
        .collect();
    let coordinates: Vec<f64> = columns.iter().map(|c| star_discrepancy(c.clone())).collect();
    let box_estimate = (columns.len() > 1).then(|| box_discrepancy(&columns, grid.max(1)));
    let discrepancy = box_estimate.unwrap_or_else(|| coordinates.iter().cloned().fold(0.0, f64::max));
    Ok(WeylResult {
        sequence: seq.to_string(),
        alpha: alpha.iter().map(|a| a.to_string()).collect(),
        n,
        coordinates,
        discrepancy,
        box_estimate,
        rational_alpha: alpha.iter().any(Alpha::is_rational),
    })
}

fn to_unit(x: u128) -> f64 {
    (x >> 64) as f64 / 18446744073709551616.0
}

/// `max_i max(i/N - x_(i), x_(i) - (i-1)/N)` over sorted points.
pub fn star_discrepancy(mut pts: Vec<f64>) -> f64 {
    pts.sort_by(|a, b| a.total_cmp(b));
    let n = pts.len() as f64;
    pts.iter()
        .enumerate()
        .map(|(i, &x)| {
            let i = i as f64;
            ((i + 1.0) / n - x).max(x - i / n)
        })
        .fold(0.0, f64::max)
}

/// Anchored boxes `[0, a_1) × ... × [0, a_d)` with `a_j ∈ {1/g, .., 1}`.
fn box_discrepancy(columns: &[Vec<f64>], grid: usize) -> f64 {
    let d = columns.len();
    let n = columns[0].len();
    // cells[j][i] = smallest grid index k with x < k/g, in 1..=g
    let cells: Vec<Vec<usize>> = columns
        .iter()
        .map(|c| c.iter().map(|&x| ((x * grid as f64).floor() as usize + 1).min(grid)).collect())
        .collect();
    let combos = grid.pow(d as u32);
    let mut best: f64 = 0.0;
    let mut corner = vec![1usize; d];
    for _ in 0..combos {
        let inside = (0..n).filter(|&i| (0..d).all(|j| cells[j][i] <= corner[j])).count();
        let vol: f64 = corner.iter().map(|&k| k as f64 / grid as f64).product();
        best = best.max((inside as f64 / n as f64 - vol).abs());
        for slot in corner.iter_mut() {
            if *slot < grid {
                *slot += 1;
                break;
            }
            *slot = 1;
        }
    }
    best
}
