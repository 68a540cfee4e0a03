use std::collections::{HashSet, VecDeque};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::hyperspace::binomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitivityMode {
    /// Unordered r-subsets (deep transitivity at one level).
    Set,
    /// Ordered r-tuples of distinct cells (extreme transitivity at one level).
    Tuple,
}

/// Transposition `(0 1)` and the cycle `(0 1 .. n-1)`: generators of `Sym(n)`.
pub fn symmetric_generators(n: usize) -> Vec<Vec<u32>> {
    let mut swap: Vec<u32> = (0..n as u32).collect();
    if n >= 2 {
        swap.swap(0, 1);
    }
    vec![swap, cyclic_generator(n)]
}

/// The cycle `i -> i + 1 mod n`.
pub fn cyclic_generator(n: usize) -> Vec<u32> {
    (0..n as u32).map(|i| (i + 1) % n as u32).collect()
}

/// The 3-cycles `(0 1 i)` for `2 <= i < n`, which generate `Alt(n)`.
pub fn alternating_generators(n: usize) -> Vec<Vec<u32>> {
    (2..n)
        .map(|i| {
            let mut g: Vec<u32> = (0..n as u32).collect();
            g[0] = 1;
            g[1] = i as u32;
            g[i] = 0;
            g
        })
        .collect()
}

fn orbit_space_size(points: u64, r: u64, mode: TransitivityMode) -> Option<u64> {
    match mode {
        TransitivityMode::Set => binomial(points, r).to_u64(),
        TransitivityMode::Tuple => (0..r).try_fold(1u64, |acc, i| acc.checked_mul(points - i)),
    }
}

/// Whether the group generated by `generators` acts transitively on r-sets
/// (or r-tuples) of the `κ` points they permute.
///
/// Breadth-first search from one configuration; the orbit space must fit
/// within `caps.orbit`.
pub fn transitivity_check(
    generators: &[Vec<u32>],
    r: usize,
    mode: TransitivityMode,
    caps: &Caps,
) -> Result<bool> {
    let points = generators
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::invalid("at least one generator is required"))?;
    for g in generators {
        let mut seen = vec![false; points];
        if g.len() != points
            || g.iter().any(|&x| {
                let slot = seen.get_mut(x as usize);
                match slot {
                    Some(s) if !*s => {
                        *s = true;
                        false
                    }
                    _ => true,
                }
            })
        {
            return Err(Error::invalid("generators must be permutations of one point set"));
        }
    }
    if r > points {
        return Err(Error::invalid(format!("r = {r} exceeds the {points} cells")));
    }
    let total = orbit_space_size(points as u64, r as u64, mode)
        .filter(|t| *t <= caps.orbit)
        .ok_or_else(|| {
            Error::size_limit("orbit space", format!("{points} cells, r = {r}"), caps.orbit)
        })?;

    let start: Vec<u32> = (0..r as u32).collect();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    while let Some(state) = queue.pop_front() {
        for g in generators {
            let mut next: Vec<u32> = state.iter().map(|&x| g[x as usize]).collect();
            if mode == TransitivityMode::Set {
                next.sort_unstable();
            }
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok(seen.len() as u64 == total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TransitivityMode::*;

    fn check(g: &[Vec<u32>], r: usize, mode: TransitivityMode) -> bool {
        transitivity_check(g, r, mode, &Caps::default()).unwrap()
    }

    #[test]
    fn symmetric_group_is_tuple_transitive() {
        for n in 1..=8 {
            let g = symmetric_generators(n);
            for r in 0..=n {
                assert!(check(&g, r, Tuple), "n={n} r={r}");
            }
        }
    }

    #[test]
    fn cycle_fails_on_ordered_pairs() {
        let g = vec![cyclic_generator(4)];
        assert!(!check(&g, 2, Tuple));
        assert!(!check(&g, 2, Set));
        assert!(check(&g, 1, Tuple));
    }

    #[test]
    fn alternating_group_on_four_points() {
        let g = alternating_generators(4);
        for r in 0..=4 {
            assert!(check(&g, r, Set), "r={r}");
        }
        assert!(check(&g, 2, Tuple));
        // 24 ordered triples, 12 group elements
        assert!(!check(&g, 3, Tuple));
    }

    #[test]
    fn tuple_implies_set() {
        let gens = [
            vec![cyclic_generator(5)],
            alternating_generators(5),
            symmetric_generators(5),
            vec![vec![1, 0, 2, 3, 4]],
        ];
        for g in &gens {
            for r in 0..=5 {
                if check(g, r, Tuple) {
                    assert!(check(g, r, Set));
                }
            }
        }
    }

    #[test]
    fn caps_and_validation() {
        let caps = Caps {
            orbit: 10,
            ..Caps::default()
        };
        let err = transitivity_check(&symmetric_generators(8), 3, Tuple, &caps).unwrap_err();
        assert!(err.is_cap());
        assert!(transitivity_check(&[vec![0, 0]], 1, Set, &Caps::default()).is_err());
        assert!(transitivity_check(&[], 1, Set, &Caps::default()).is_err());
    }
}
