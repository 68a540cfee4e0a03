use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::levelset::LevelSet;
use super::profile::TreeProfile;
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::estimator::EmpiricalIRC;
use crate::stats::substream;
use crate::symbolic::Word;

/// A level set with its probability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weighted {
    pub levelset: LevelSet,
    #[serde(with = "crate::rational_string")]
    pub mass: BigRational,
}

/// Exact law on level sets, sorted by level set.
pub type Distribution = Vec<Weighted>;

#[derive(Debug, Clone)]
pub enum OccupancyLaw {
    Exact(Distribution),
    MonteCarlo(EmpiricalIRC),
}

impl OccupancyLaw {
    pub fn as_empirical(&self) -> Result<EmpiricalIRC> {
        match self {
            OccupancyLaw::Exact(dist) => EmpiricalIRC::from_distribution(dist),
            OccupancyLaw::MonteCarlo(e) => Ok(e.clone()),
        }
    }
}

const MC_CHUNK: u64 = 4096;

/// Law of `A_m({x_1, .., x_k})` for `x_i` i.i.d. from the uniform tree measure.
///
/// `samples = None` asks for the exact law, which enumerates all `κ(m)^k`
/// ordered tuples and fails with a cap error past `caps.enumeration`.
/// `Some(s)` draws `s` tuples by descending the tree from the root.
pub fn finitary_occupancy_law(
    profile: &TreeProfile,
    k: usize,
    m: usize,
    samples: Option<u64>,
    seed: u64,
    caps: &Caps,
) -> Result<OccupancyLaw> {
    if k == 0 || m == 0 {
        return Err(Error::invalid("need k >= 1 points and level m >= 1"));
    }
    match samples {
        None => exact_law(profile, k, m, caps).map(OccupancyLaw::Exact),
        Some(s) => mc_law(profile, k, m, s, seed).map(OccupancyLaw::MonteCarlo),
    }
}

fn exact_law(profile: &TreeProfile, k: usize, m: usize, caps: &Caps) -> Result<Distribution> {
    let kappa = profile.kappa(m)?;
    let tuples = u32::try_from(k)
        .ok()
        .and_then(|e| kappa.checked_pow(e))
        .filter(|t| *t <= caps.enumeration)
        .ok_or_else(|| {
            Error::size_limit(
                "occupancy tuples (use Monte Carlo mode)",
                format!("{kappa}^{k}"),
                caps.enumeration,
            )
        })?;
    let cells = profile.cells(m)?;
    let masses = cells
        .iter()
        .map(|c| profile.measure(c))
        .collect::<Result<Vec<_>>>()?;
    let denom = masses
        .iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let weights: Vec<u128> = masses
        .iter()
        .map(|q| (q.numer() * (&denom / q.denom())).to_u128())
        .collect::<Option<_>>()
        .ok_or_else(|| Error::invalid("cell weights overflow"))?;
    let denom128 = denom
        .to_u128()
        .and_then(|d| d.checked_pow(k as u32))
        .ok_or_else(|| Error::size_limit("occupancy weight denominator", &denom, u64::MAX))?;

    let kappa_us = kappa as usize;
    let tally = (0..tuples)
        .into_par_iter()
        .fold(HashMap::<Vec<u32>, u128>::new, |mut acc, t| {
            let mut rest = t;
            let mut idx = Vec::with_capacity(k);
            let mut w: u128 = 1;
            for _ in 0..k {
                let c = (rest % kappa) as usize;
                rest /= kappa;
                idx.push(c as u32);
                w *= weights[c];
            }
            debug_assert!(idx.iter().all(|c| (*c as usize) < kappa_us));
            idx.sort_unstable();
            idx.dedup();
            *acc.entry(idx).or_insert(0) += w;
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (key, w) in b {
                *a.entry(key).or_insert(0) += w;
            }
            a
        });

    let mut law: BTreeMap<LevelSet, BigRational> = BTreeMap::new();
    for (idx, w) in tally {
        let set = LevelSet::new(m, profile.sides(), idx.iter().map(|c| cells[*c as usize].clone()))?;
        law.insert(
            set,
            BigRational::new(BigInt::from(w), BigInt::from(denom128)),
        );
    }
    Ok(law
        .into_iter()
        .map(|(levelset, mass)| Weighted { levelset, mass })
        .collect())
}

/// A level-`m` cell drawn from the uniform tree measure.
fn descend<R: Rng>(profile: &TreeProfile, m: usize, rng: &mut R) -> Result<Word> {
    let roots = profile.cells(1)?;
    let mut cell = roots[rng.random_range(0..roots.len())].clone();
    for _ in 1..m {
        let children = profile.children(&cell)?;
        cell = children[rng.random_range(0..children.len())].clone();
    }
    Ok(cell)
}

fn mc_law(profile: &TreeProfile, k: usize, m: usize, samples: u64, seed: u64) -> Result<EmpiricalIRC> {
    if samples == 0 {
        return Err(Error::invalid("Monte Carlo mode needs at least one sample"));
    }
    profile.kappa(m)?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<BTreeMap<LevelSet, u64>> {
            let mut rng = substream(seed, chunk);
            let lo = chunk * MC_CHUNK;
            let hi = (lo + MC_CHUNK).min(samples);
            let mut acc = BTreeMap::new();
            for _ in lo..hi {
                let pts = (0..k)
                    .map(|_| descend(profile, m, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                *acc.entry(LevelSet::new(m, profile.sides(), pts)?).or_insert(0) += 1;
            }
            Ok(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (key, c) in b {
                *a.entry(key).or_insert(0) += c;
            }
            Ok(a)
        })?;
    let provenance = serde_json::json!({
        "source": "occupancy-mc",
        "k": k,
        "m": m,
        "samples": samples,
        "seed": seed,
    });
    EmpiricalIRC::from_counts(m, counts, provenance)
}

/// Total mass of a distribution (1 for every law built here).
pub fn total_mass(dist: &Distribution) -> BigRational {
    dist.iter().fold(BigRational::zero(), |acc, w| acc + &w.mass)
}
