//! Empirical measures on one hyperspace level and their diagnostics.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::OrbitSource;
use crate::error::{Error, Result};
use crate::hyperspace::{dist_to_finite, hausdorff_at_level, project, Distribution, LevelSet};

/// Finitely supported probability measure on level-`m` level sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalIRC {
    level: usize,
    atoms: BTreeMap<LevelSet, BigRational>,
    provenance: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct AtomRepr {
    cells: Vec<String>,
    #[serde(with = "crate::rational_string")]
    weight: BigRational,
}

#[derive(Serialize, Deserialize)]
struct EmpiricalRepr {
    level: usize,
    atoms: Vec<AtomRepr>,
    provenance: serde_json::Value,
}

impl Serialize for EmpiricalIRC {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EmpiricalRepr {
            level: self.level,
            atoms: self
                .atoms
                .iter()
                .map(|(a, w)| AtomRepr {
                    cells: a.cells().iter().map(|c| c.to_string()).collect(),
                    weight: w.clone(),
                })
                .collect(),
            provenance: self.provenance.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EmpiricalIRC {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = EmpiricalRepr::deserialize(d)?;
        let mut atoms = BTreeMap::new();
        for atom in repr.atoms {
            let refs: Vec<&str> = atom.cells.iter().map(String::as_str).collect();
            let set = LevelSet::from_strs(repr.level, &refs).map_err(serde::de::Error::custom)?;
            atoms.insert(set, atom.weight);
        }
        EmpiricalIRC::from_weights(repr.level, atoms, repr.provenance).map_err(serde::de::Error::custom)
    }
}

impl EmpiricalIRC {
    /// Validates positivity, a common level and total mass exactly 1.
    pub fn from_weights(
        level: usize,
        atoms: BTreeMap<LevelSet, BigRational>,
        provenance: serde_json::Value,
    ) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("an empirical measure needs at least one atom"));
        }
        if let Some(bad) = atoms.keys().find(|a| a.level() != level) {
            return Err(Error::LevelMismatch {
                left: level,
                right: bad.level(),
            });
        }
        if atoms.values().any(|w| !w.is_positive()) {
            return Err(Error::invalid("atom weights must be positive"));
        }
        let total = atoms.values().fold(BigRational::zero(), |a, w| a + w);
        if !total.is_one() {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(EmpiricalIRC {
            level,
            atoms,
            provenance,
        })
    }

    pub fn from_counts(
        level: usize,
        counts: BTreeMap<LevelSet, u64>,
        provenance: serde_json::Value,
    ) -> Result<Self> {
        let total: u64 = counts.values().sum();
        let atoms = counts
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .map(|(a, c)| (a, BigRational::new(BigInt::from(c), BigInt::from(total))))
            .collect();
        Self::from_weights(level, atoms, provenance)
    }

    pub fn from_distribution(dist: &Distribution) -> Result<Self> {
        let level = dist
            .first()
            .map(|w| w.levelset.level())
            .ok_or_else(|| Error::invalid("empty distribution"))?;
        let atoms = dist
            .iter()
            .filter(|w| w.mass.is_positive())
            .map(|w| (w.levelset.clone(), w.mass.clone()))
            .collect();
        Self::from_weights(level, atoms, serde_json::json!({"source": "exact-law"}))
    }

    pub fn dirac(atom: LevelSet) -> Self {
        let level = atom.level();
        let mut atoms = BTreeMap::new();
        atoms.insert(atom, BigRational::one());
        EmpiricalIRC {
            level,
            atoms,
            provenance: serde_json::json!({"source": "dirac"}),
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn atoms(&self) -> &BTreeMap<LevelSet, BigRational> {
        &self.atoms
    }

    pub fn weight(&self, atom: &LevelSet) -> BigRational {
        self.atoms.get(atom).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn provenance(&self) -> &serde_json::Value {
        &self.provenance
    }

    /// Push-forward under projection one level up.
    pub fn project(&self) -> Result<EmpiricalIRC> {
        let mut atoms: BTreeMap<LevelSet, BigRational> = BTreeMap::new();
        for (a, w) in &self.atoms {
            *atoms.entry(project(a)?).or_insert_with(BigRational::zero) += w;
        }
        Self::from_weights(self.level - 1, atoms, self.provenance.clone())
    }

    /// Total weight of atoms satisfying `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(&LevelSet) -> Result<bool>) -> Result<BigRational> {
        let mut total = BigRational::zero();
        for (a, w) in &self.atoms {
            if pred(a)? {
                total += w;
            }
        }
        Ok(total)
    }
}

/// `(1/|W|) Σ_{g ∈ W} δ_{g·Y}` over the window of an orbit source.
pub fn accumulate<S: OrbitSource + ?Sized>(source: &S) -> Result<EmpiricalIRC> {
    let n = source.len();
    if n == 0 {
        return Err(Error::invalid("empty window"));
    }
    let counts = (0..n)
        .into_par_iter()
        .map(|i| source.image(i))
        .try_fold(BTreeMap::new, |mut acc: BTreeMap<LevelSet, u64>, img| {
            *acc.entry(img?).or_insert(0) += 1;
            Ok::<_, Error>(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (k, c) in b {
                *a.entry(k).or_insert(0) += c;
            }
            Ok(a)
        })?;
    let provenance = serde_json::json!({
        "window": source.describe(),
        "size": n,
        "seed": source.seed(),
    });
    EmpiricalIRC::from_counts(source.level(), counts, provenance)
}

fn check_eps(level: usize, eps_exp: u32, finest: usize) -> Result<()> {
    if eps_exp as usize > finest {
        return Err(Error::ResolutionTooFine { eps_exp, level });
    }
    Ok(())
}

/// Weight of atoms within `2^-eps_exp` (strictly) of `full`.
pub fn mass_near_full(e: &EmpiricalIRC, full: &LevelSet, eps_exp: u32) -> Result<BigRational> {
    check_eps(e.level, eps_exp, e.level + 1)?;
    e.mass_where(|a| Ok(hausdorff_at_level(a, full)?.below_pow2(eps_exp)))
}

/// Weight of atoms within `2^-eps_exp` (strictly) of some set of at most `r` points.
pub fn mass_near_finite(e: &EmpiricalIRC, r: usize, eps_exp: u32) -> Result<BigRational> {
    check_eps(e.level, eps_exp, e.level)?;
    e.mass_where(|a| Ok(dist_to_finite(a, r)?.distance.below_pow2(eps_exp)))
}

/// Half the L1 distance between weight vectors.
pub fn tv_distance(a: &EmpiricalIRC, b: &EmpiricalIRC) -> Result<BigRational> {
    if a.level != b.level {
        return Err(Error::LevelMismatch {
            left: a.level,
            right: b.level,
        });
    }
    let mut sum = BigRational::zero();
    for (atom, w) in &a.atoms {
        sum += (w - b.weight(atom)).abs();
    }
    for (atom, w) in &b.atoms {
        if !a.atoms.contains_key(atom) {
            sum += w;
        }
    }
    Ok(sum / BigInt::from(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{ExplicitWindow, Mode, PermutationWindow, Sampling, ShiftWindow};
    use crate::caps::Caps;
    use crate::hyperspace::TreeProfile;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn ls(level: usize, cells: &[&str]) -> LevelSet {
        LevelSet::from_strs(level, cells).unwrap()
    }

    #[test]
    fn identity_window_gives_dirac() {
        let y = ls(2, &["01", "10"]);
        let src = ExplicitWindow {
            images: vec![y.clone()],
            space: ls(2, &["00", "01", "10", "11"]),
            label: "identity".into(),
        };
        let e = accumulate(&src).unwrap();
        assert_eq!(e.atoms().len(), 1);
        assert_eq!(e.weight(&y), BigRational::one());
    }

    #[test]
    fn sym2_on_one_cell() {
        let src = PermutationWindow::new(ls(1, &["0"]), 1, 2, Mode::Prefix, Sampling::Exhaustive, &Caps::default()).unwrap();
        let e = accumulate(&src).unwrap();
        assert_eq!(e.weight(&ls(1, &["0"])), q(1, 2));
        assert_eq!(e.weight(&ls(1, &["1"])), q(1, 2));
    }

    #[test]
    fn chacon_accumulation_matches_direct_enumeration() {
        let caps = Caps::default();
        let src = ShiftWindow::chacon(4, 3, 0, 100, &caps).unwrap();
        let e = accumulate(&src).unwrap();
        let mut direct: BTreeMap<LevelSet, u64> = BTreeMap::new();
        for j in 0..100 {
            *direct.entry(src.image(j).unwrap()).or_insert(0) += 1;
        }
        for (atom, c) in direct {
            assert_eq!(e.weight(&atom), q(c as i64, 100));
        }
        let full = src.space().clone();
        assert!(mass_near_full(&e, &full, 5).unwrap().is_zero());
        // weights are multiples of 1/100
        for w in e.atoms().values() {
            assert!((w * BigInt::from(100)).is_integer());
        }
    }

    #[test]
    fn full_shift_is_a_fixed_point() {
        let p = TreeProfile::one_sided(2).unwrap();
        let full = p.full_level(3).unwrap();
        let src = PermutationWindow::new(full.clone(), 2, 2, Mode::Prefix, Sampling::Exhaustive, &Caps::default()).unwrap();
        let e = accumulate(&src).unwrap();
        assert_eq!(e, EmpiricalIRC { provenance: e.provenance.clone(), ..EmpiricalIRC::dirac(full.clone()) });
        for eps in 0..=4 {
            assert_eq!(mass_near_full(&e, &full, eps).unwrap(), BigRational::one());
        }
    }

    #[test]
    fn tv_examples() {
        let a = EmpiricalIRC::dirac(ls(1, &["0"]));
        let b = EmpiricalIRC::dirac(ls(1, &["1"]));
        assert!(tv_distance(&a, &a).unwrap().is_zero());
        assert_eq!(tv_distance(&a, &b).unwrap(), BigRational::one());
        let c = EmpiricalIRC::dirac(ls(2, &["00"]));
        assert!(tv_distance(&a, &c).is_err());
    }

    #[test]
    fn mass_near_full_is_monotone() {
        let mut atoms = BTreeMap::new();
        atoms.insert(ls(3, &["000"]), q(1, 3));
        atoms.insert(ls(3, &["000", "100"]), q(1, 3));
        atoms.insert(ls(3, &["000", "011", "100", "111"]), q(1, 3));
        let e = EmpiricalIRC::from_weights(3, atoms, serde_json::Value::Null).unwrap();
        let full = TreeProfile::one_sided(2).unwrap().full_level(3).unwrap();
        let masses: Vec<BigRational> = (0..=4).rev().map(|x| mass_near_full(&e, &full, x).unwrap()).collect();
        assert!(masses.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(masses[4], BigRational::one());
        assert!(mass_near_full(&e, &full, 5).is_err());
    }

    #[test]
    fn projection_reaggregates() {
        let src = ShiftWindow::chacon(4, 3, 0, 60, &Caps::default()).unwrap();
        let coarse = ShiftWindow::chacon(3, 3, 0, 60, &Caps::default()).unwrap();
        assert_eq!(
            accumulate(&src).unwrap().project().unwrap().atoms(),
            accumulate(&coarse).unwrap().atoms()
        );
    }

    #[test]
    fn json_roundtrip() {
        let src = ShiftWindow::chacon(2, 2, 0, 10, &Caps::default()).unwrap();
        let e = accumulate(&src).unwrap();
        let text = serde_json::to_string(&e).unwrap();
        let back: EmpiricalIRC = serde_json::from_str(&text).unwrap();
        assert_eq!(back, e);
    }
}
