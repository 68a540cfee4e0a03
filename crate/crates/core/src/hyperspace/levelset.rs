use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::Word;

/// Geometry of cell labels.
///
/// One-sided cells at level `m` are prefixes `x_1..x_m`; two-sided cells are
/// symmetric windows `x_{-m}..x_m` of length `2m + 1`. In both cases two
/// points sharing their level-`m` cell are at distance at most `2^-(m+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sides {
    One,
    Two,
}

impl Sides {
    pub fn label_len(self, level: usize) -> usize {
        match self {
            Sides::One => level,
            Sides::Two => 2 * level + 1,
        }
    }

    /// Coarsest meaningful level: the whole space is a single cell there.
    /// For two-sided labels this is "level -1".
    fn root_level(self) -> i64 {
        match self {
            Sides::One => 0,
            Sides::Two => -1,
        }
    }

    /// Truncate a label to a coarser level (`target >= root_level`).
    pub(crate) fn truncate(self, cell: &Word, level: usize, target: i64) -> Word {
        match self {
            Sides::One => cell.subword(0, target as usize),
            Sides::Two => {
                if target < 0 {
                    Word::empty(cell.base())
                } else {
                    let cut = level - target as usize;
                    cell.subword(cut, 2 * target as usize + 1)
                }
            }
        }
    }

    /// Largest level at which two distinct-or-equal labels of `level` agree.
    fn agreement(self, a: &Word, b: &Word, level: usize) -> i64 {
        match self {
            Sides::One => a.common_prefix(b) as i64,
            Sides::Two => {
                let (sa, sb) = (a.symbols(), b.symbols());
                let mut s: i64 = -1;
                for r in 0..=level {
                    if sa[level - r] != sb[level - r] || sa[level + r] != sb[level + r] {
                        break;
                    }
                    s = r as i64;
                }
                s
            }
        }
    }
}

/// Distance `2^-exponent`, or zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicDistance {
    /// `None` encodes distance zero.
    pub exponent: Option<u32>,
}

impl DyadicDistance {
    pub const ZERO: DyadicDistance = DyadicDistance { exponent: None };

    pub fn pow2(exponent: u32) -> Self {
        DyadicDistance {
            exponent: Some(exponent),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.exponent.is_none()
    }

    /// `self >= 2^-e`
    pub fn at_least_pow2(&self, e: u32) -> bool {
        matches!(self.exponent, Some(x) if x <= e)
    }

    /// `self < 2^-e`
    pub fn below_pow2(&self, e: u32) -> bool {
        !self.at_least_pow2(e)
    }

    pub fn to_f64(&self) -> f64 {
        self.exponent.map_or(0.0, |e| 0.5f64.powi(e as i32))
    }
}

impl Ord for DyadicDistance {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.exponent, other.exponent) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) => b.cmp(&a),
        }
    }
}

impl PartialOrd for DyadicDistance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exponent {
            None => write!(f, "0"),
            Some(e) => write!(f, "2^-{e}"),
        }
    }
}

/// A nonempty set of level-`m` cells: the finite-resolution image `A_m(Y)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LevelSet {
    level: usize,
    sides: Sides,
    cells: BTreeSet<Word>,
}

impl LevelSet {
    pub fn new(level: usize, sides: Sides, cells: impl IntoIterator<Item = Word>) -> Result<Self> {
        let cells: BTreeSet<Word> = cells.into_iter().collect();
        if cells.is_empty() {
            return Err(Error::invalid("a level set must contain at least one cell"));
        }
        let want = sides.label_len(level);
        if let Some(bad) = cells.iter().find(|c| c.len() != want) {
            return Err(Error::invalid(format!(
                "cell `{bad}` has length {} but level {level} needs {want}",
                bad.len()
            )));
        }
        Ok(LevelSet {
            level,
            sides,
            cells,
        })
    }

    /// Builds a level set from digit strings; geometry is read off the label length.
    pub fn from_strs(level: usize, cells: &[&str]) -> Result<Self> {
        let words = cells
            .iter()
            .map(|s| Word::parse_infer(s))
            .collect::<Result<Vec<_>>>()?;
        let base = words.iter().map(Word::base).max().unwrap_or(2);
        let words = words
            .into_iter()
            .map(|w| Word::new(w.symbols().to_vec(), base))
            .collect::<Result<Vec<_>>>()?;
        let sides = infer_sides(level, words.first().map_or(0, Word::len))?;
        LevelSet::new(level, sides, words)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn sides(&self) -> Sides {
        self.sides
    }

    pub fn cells(&self) -> &BTreeSet<Word> {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: &Word) -> bool {
        self.cells.contains(cell)
    }

    fn check_compatible(&self, other: &LevelSet) -> Result<()> {
        if self.level != other.level {
            return Err(Error::LevelMismatch {
                left: self.level,
                right: other.level,
            });
        }
        if self.sides != other.sides {
            return Err(Error::invalid("one-sided and two-sided level sets do not mix"));
        }
        Ok(())
    }

    /// Number of distinct cells after truncating to `target` (may be the root level).
    fn count_at(&self, target: i64) -> usize {
        if target == self.level as i64 {
            return self.cells.len();
        }
        self.cells
            .iter()
            .map(|c| self.sides.truncate(c, self.level, target))
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Image under the projection to level `target <= level` (`target >= 1`).
    pub fn project_to(&self, target: usize) -> Result<LevelSet> {
        if target == 0 || target > self.level {
            return Err(Error::range(format!(
                "cannot project level {} to level {target}",
                self.level
            )));
        }
        Ok(LevelSet {
            level: target,
            sides: self.sides,
            cells: self
                .cells
                .iter()
                .map(|c| self.sides.truncate(c, self.level, target as i64))
                .collect(),
        })
    }
}

pub(crate) fn infer_sides(level: usize, label_len: usize) -> Result<Sides> {
    if label_len == level {
        Ok(Sides::One)
    } else if label_len == 2 * level + 1 {
        Ok(Sides::Two)
    } else {
        Err(Error::invalid(format!(
            "label length {label_len} fits neither geometry at level {level}"
        )))
    }
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LevelSet(m={}, {{", self.level)?;
        for (i, c) in self.cells.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}})")
    }
}

#[derive(Serialize, Deserialize)]
struct LevelSetRepr {
    level: usize,
    cells: Vec<String>,
}

impl Serialize for LevelSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LevelSetRepr {
            level: self.level,
            cells: self.cells.iter().map(|c| c.to_string()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LevelSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = LevelSetRepr::deserialize(d)?;
        let refs: Vec<&str> = repr.cells.iter().map(String::as_str).collect();
        LevelSet::from_strs(repr.level, &refs).map_err(serde::de::Error::custom)
    }
}

/// Parents of the cells of `a`, one level up.
pub fn project(a: &LevelSet) -> Result<LevelSet> {
    if a.level < 2 {
        return Err(Error::NoParent(a.level));
    }
    a.project_to(a.level - 1)
}

fn cell_distance(sides: Sides, a: &Word, b: &Word, level: usize) -> DyadicDistance {
    if a == b {
        DyadicDistance::ZERO
    } else {
        DyadicDistance::pow2((sides.agreement(a, b, level) + 1) as u32)
    }
}

fn directed(a: &LevelSet, b: &LevelSet) -> DyadicDistance {
    a.cells
        .iter()
        .map(|x| {
            if b.cells.contains(x) {
                DyadicDistance::ZERO
            } else {
                b.cells
                    .iter()
                    .map(|y| cell_distance(a.sides, x, y, a.level))
                    .min()
                    .expect("level sets are nonempty")
            }
        })
        .max()
        .expect("level sets are nonempty")
}

/// Exact Hausdorff distance between the cylinder unions of two level sets.
///
/// The metric is an ultrametric, so distinct cells are at the constant
/// distance `2^-(agreement + 1)` from each other.
pub fn hausdorff_at_level(a: &LevelSet, b: &LevelSet) -> Result<DyadicDistance> {
    a.check_compatible(b)?;
    Ok(directed(a, b).max(directed(b, a)))
}

/// Distance from the cylinder union of `a` to the sets with at most `r` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteDistance {
    pub distance: DyadicDistance,
    /// Coarsest scale needed: the largest level whose projection has `<= r` cells.
    pub threshold_level: i64,
    /// False when `a` itself has at most `r` cells; the distance is then only
    /// an upper bound at this resolution.
    pub exact: bool,
}

/// Scale at which `a` can be matched by `r` points.
///
/// `d(∪a, K_{<=r}) <= 2^-(j+1)` iff the projection of `a` to level `j` has at
/// most `r` cells, and the bound is attained at the largest such `j`.
pub fn dist_to_finite(a: &LevelSet, r: usize) -> Result<FiniteDistance> {
    if r == 0 {
        return Err(Error::invalid("r must be at least 1"));
    }
    let root = a.sides.root_level();
    let mut level = a.level as i64;
    while level > root && a.count_at(level) > r {
        level -= 1;
    }
    Ok(FiniteDistance {
        distance: DyadicDistance::pow2((level + 1) as u32),
        threshold_level: level,
        exact: level < a.level as i64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ls(level: usize, cells: &[&str]) -> LevelSet {
        LevelSet::from_strs(level, cells).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project(&ls(2, &["00", "01"])).unwrap(), ls(1, &["0"]));
        assert_eq!(project(&ls(2, &["00", "10"])).unwrap(), ls(1, &["0", "1"]));
        assert_eq!(project(&ls(1, &["0"])), Err(Error::NoParent(1)));
        // two-sided: trim both ends
        assert_eq!(project(&ls(2, &["01101", "11100"])).unwrap(), ls(1, &["110"]));
    }

    #[test]
    fn hausdorff_examples() {
        let a = ls(2, &["00"]);
        assert!(hausdorff_at_level(&a, &a).unwrap().is_zero());
        assert_eq!(
            hausdorff_at_level(&a, &ls(2, &["01"])).unwrap(),
            DyadicDistance::pow2(2)
        );
        assert_eq!(
            hausdorff_at_level(&a, &ls(2, &["00", "11"])).unwrap(),
            DyadicDistance::pow2(1)
        );
        assert!(matches!(
            hausdorff_at_level(&a, &ls(1, &["0"])),
            Err(Error::LevelMismatch { .. })
        ));
    }

    #[test]
    fn two_sided_cells_differing_at_center_are_at_distance_one() {
        let d = hausdorff_at_level(&ls(1, &["010"]), &ls(1, &["000"])).unwrap();
        assert_eq!(d, DyadicDistance::pow2(0));
        let d = hausdorff_at_level(&ls(1, &["010"]), &ls(1, &["011"])).unwrap();
        assert_eq!(d, DyadicDistance::pow2(1));
    }

    #[test]
    fn finite_distance_examples() {
        let a = ls(3, &["000", "001"]);
        let fd = dist_to_finite(&a, 2).unwrap();
        assert_eq!(fd.distance, DyadicDistance::pow2(4));
        assert!(!fd.exact);

        let all: Vec<String> = Word::all(3, 2).map(|w| w.to_string()).collect();
        let refs: Vec<&str> = all.iter().map(String::as_str).collect();
        let full = ls(3, &refs);
        let fd = dist_to_finite(&full, 2).unwrap();
        assert_eq!(fd.threshold_level, 1);
        assert_eq!(fd.distance, DyadicDistance::pow2(2));
        assert!(fd.exact);
        // one point is 2^-1 away from everything one-sided
        assert_eq!(dist_to_finite(&full, 1).unwrap().distance, DyadicDistance::pow2(1));
    }

    #[test]
    fn serde_roundtrip_infers_geometry() {
        let a = ls(1, &["010", "111"]);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"level":1,"cells":["010","111"]}"#);
        let back: LevelSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.sides(), Sides::Two);
    }

    #[test]
    fn rejects_empty_and_bad_lengths() {
        assert!(LevelSet::new(2, Sides::One, Vec::<Word>::new()).is_err());
        assert!(LevelSet::from_strs(2, &["000", "01"]).is_err());
    }

    #[test]
    fn dyadic_order() {
        assert!(DyadicDistance::pow2(1) > DyadicDistance::pow2(3));
        assert!(DyadicDistance::ZERO < DyadicDistance::pow2(60));
        assert!(DyadicDistance::pow2(3).at_least_pow2(3));
        assert!(DyadicDistance::pow2(4).below_pow2(3));
    }
}
