use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use super::density::{gap_bounds, GapBound, Resolution};
use super::digits::DigitSet;
use super::folner::folner_mult;
use crate::caps::Caps;
use crate::error::{Error, Result};

/// One Folner index of the extraction.
#[derive(Debug, Clone, Serialize)]
pub struct JTraceRow {
    pub m: usize,
    /// `r(m) = max{r : I_r <= m}`.
    pub r: Option<u32>,
    pub folner_size: u64,
    /// `|J_m| = |E_{r(m)} ∩ F_m|`.
    pub j_m: u64,
    /// `|J ∩ F_m|` over the horizon.
    pub j_in_f: u64,
    #[serde(with = "crate::rational_string")]
    pub density: BigRational,
    /// `1 - 2^-r(m)`.
    #[serde(with = "crate::rational_string::option")]
    pub density_floor: Option<BigRational>,
    /// Largest certified upper bound on `ℓ_n` over `J_m`.
    #[serde(with = "crate::rational_string::option")]
    pub sup_gap: Option<BigRational>,
    pub density_ok: bool,
    pub gap_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct JExtraction {
    pub horizon: usize,
    pub r_max: u32,
    /// `I_r` for `r = 1..=r_max`.
    pub thresholds: Vec<Option<usize>>,
    /// `|E_r ∩ F_M| / |F_M|` for `r = 1..=r_max`, certified members only.
    #[serde(with = "crate::rational_string::vec")]
    pub e_fractions: Vec<BigRational>,
    /// Gap bounds that straddle some `1/r`; those `n` are left out of `E_r`.
    pub ambiguous: u64,
    pub trace: Vec<JTraceRow>,
    #[serde(with = "crate::rational_string::vec")]
    pub members: Vec<BigUint>,
    pub warning: Option<String>,
}

impl JExtraction {
    pub fn all_ok(&self) -> bool {
        self.trace.iter().all(|r| r.density_ok && r.gap_ok)
    }
}

fn one_over(r: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(r))
}

/// Builds `J = ∪ J_m` with `J_m = E_{r(m)} ∩ F_m` over Folner indices `1..=horizon`.
///
/// `E_r = {n : ℓ_n < 1/r}` uses certified gap bounds. `I_r` is the first `m`
/// from which `|E_r ∩ F_m'| / |F_m'| > 1 - 2^-r` holds for every `m'` up to the
/// horizon, made nondecreasing in `r`.
pub fn extract_j(
    y: &DigitSet,
    horizon: usize,
    r_max: u32,
    res: Resolution,
    caps: &Caps,
) -> Result<JExtraction> {
    if horizon == 0 || r_max == 0 {
        return Err(Error::invalid("horizon and r_max must be positive"));
    }
    let top = folner_mult(horizon, None, caps)?;
    // the finest threshold is 1/r_max, i.e. ε = 1/(2 r_max)
    let eps = BigRational::new(BigInt::one(), BigInt::from(2 * r_max));
    let bounds = gap_bounds(y, &top.elements, &eps, res, caps)?;
    let lookup: std::collections::HashMap<BigUint, GapBound> =
        bounds.into_iter().map(|b| (b.n.clone(), b)).collect();

    let sets: Vec<Vec<BigUint>> = (1..=horizon)
        .map(|m| folner_mult(m, None, caps).map(|f| f.elements))
        .collect::<Result<_>>()?;

    let mut ambiguous_n = std::collections::HashSet::new();
    // member[r-1][m-1] = certified members of E_r ∩ F_m
    let members: Vec<Vec<Vec<BigUint>>> = (1..=r_max)
        .map(|r| {
            let bound = one_over(r);
            sets.iter()
                .map(|fm| {
                    fm.iter()
                        .filter(|n| match lookup[*n].below(&bound) {
                            Some(b) => b,
                            None => {
                                ambiguous_n.insert((*n).clone());
                                false
                            }
                        })
                        .cloned()
                        .collect()
                })
                .collect()
        })
        .collect();

    let frac = |count: usize, total: usize| BigRational::new(count.into(), total.into());
    let mut thresholds = Vec::with_capacity(r_max as usize);
    let mut running = 0usize;
    for r in 1..=r_max {
        let floor = BigRational::one() - BigRational::new(BigInt::one(), BigInt::one() << r);
        let good: Vec<bool> = (0..horizon)
            .map(|i| frac(members[r as usize - 1][i].len(), sets[i].len()) > floor)
            .collect();
        let first = (0..horizon).find(|&i| good[i..].iter().all(|&g| g)).map(|i| i + 1);
        let threshold = first.map(|m| {
            running = running.max(m);
            running
        });
        thresholds.push(threshold);
        if threshold.is_none() {
            // later thresholds cannot exist either since E_r shrinks with r
            thresholds.extend(std::iter::repeat_n(None, (r_max - r) as usize));
            break;
        }
    }

    let r_of = |m: usize| -> Option<u32> {
        thresholds
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_some_and(|t| t <= m))
            .map(|(i, _)| i as u32 + 1)
            .max()
    };

    let mut j: std::collections::BTreeSet<BigUint> = std::collections::BTreeSet::new();
    let mut j_parts: Vec<Vec<BigUint>> = Vec::with_capacity(horizon);
    for m in 1..=horizon {
        let part = match r_of(m) {
            Some(r) => members[r as usize - 1][m - 1].clone(),
            None => Vec::new(),
        };
        j.extend(part.iter().cloned());
        j_parts.push(part);
    }

    let trace = (1..=horizon)
        .map(|m| {
            let fm = &sets[m - 1];
            let r = r_of(m);
            let j_in_f = fm.iter().filter(|n| j.contains(*n)).count();
            let density = frac(j_in_f, fm.len());
            let part = &j_parts[m - 1];
            let sup_gap = part.iter().map(|n| lookup[n].upper.clone()).max();
            let density_floor =
                r.map(|r| BigRational::one() - BigRational::new(BigInt::one(), BigInt::one() << r));
            let density_ok = density_floor.as_ref().is_none_or(|f| density >= *f);
            let gap_ok = match (r, &sup_gap) {
                (Some(r), Some(g)) => *g <= one_over(r),
                _ => true,
            };
            JTraceRow {
                m,
                r,
                folner_size: fm.len() as u64,
                j_m: part.len() as u64,
                j_in_f: j_in_f as u64,
                density,
                density_floor,
                sup_gap,
                density_ok,
                gap_ok,
            }
        })
        .collect();

    let e_fractions = members
        .iter()
        .map(|row| frac(row[horizon - 1].len(), sets[horizon - 1].len()))
        .collect();
    let warning = thresholds[0]
        .is_none()
        .then(|| format!("no threshold I_r is reached within horizon {horizon}; the trace is partial"));
    Ok(JExtraction {
        horizon,
        r_max,
        thresholds,
        e_fractions,
        ambiguous: ambiguous_n.len() as u64,
        trace,
        members: j.into_iter().collect(),
        warning,
    })
}

impl JTraceRow {
    pub fn defined(&self) -> bool {
        self.r.is_some()
    }
}
