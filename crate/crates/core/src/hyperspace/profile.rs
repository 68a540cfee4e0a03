use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::levelset::{LevelSet, Sides};
use crate::error::{Error, Result};
use crate::symbolic::Word;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Shape {
    /// Cylinders `[x_1..x_m]` of `{0..n-1}^N`.
    OneSided { base: u8 },
    /// Symmetric windows `[x_{-m}..x_m]` of `{0..n-1}^Z`.
    TwoSided { base: u8 },
    /// Explicit finite tree. Cells are labelled by child-position paths.
    Custom {
        roots: u32,
        /// `branching[d][c]`: children of the `c`-th cell at level `d + 1`.
        branching: Vec<Vec<u32>>,
    },
}

/// Branching description of a tree structure on a Cantor set.
///
/// Levels start at 1. Full-shift profiles are unbounded; custom profiles
/// stop at `depth()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeProfile {
    shape: Shape,
    /// `lower_bounds[k - 1]` bounds `|{D in C_n : D ⊂ C}| / κ(n)` from below
    /// for every level-`k` cell `C` and `n >= k`. Only stored for custom trees.
    #[serde(default, with = "crate::rational_string::vec")]
    lower_bounds: Vec<BigRational>,
}

fn checked_pow(base: u64, exp: usize) -> Result<u64> {
    u32::try_from(exp)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .ok_or_else(|| Error::size_limit("cell count", format!("{base}^{exp}"), u64::MAX))
}

impl TreeProfile {
    pub fn one_sided(base: u8) -> Result<Self> {
        check_base(base)?;
        Ok(TreeProfile {
            shape: Shape::OneSided { base },
            lower_bounds: Vec::new(),
        })
    }

    pub fn two_sided(base: u8) -> Result<Self> {
        check_base(base)?;
        Ok(TreeProfile {
            shape: Shape::TwoSided { base },
            lower_bounds: Vec::new(),
        })
    }

    /// A finite tree with `roots` level-1 cells and explicit child counts.
    ///
    /// `lower_bounds[k - 1]` must be positive and must not exceed the
    /// descendant proportion of any level-`k` cell at any provided level.
    pub fn custom(
        roots: u32,
        branching: Vec<Vec<u32>>,
        lower_bounds: Vec<BigRational>,
    ) -> Result<Self> {
        if roots == 0 {
            return Err(Error::invalid("a tree needs at least one level-1 cell"));
        }
        let mut width = roots as usize;
        for (d, row) in branching.iter().enumerate() {
            if row.len() != width {
                return Err(Error::invalid(format!(
                    "level {} has {width} cells but {} child counts",
                    d + 1,
                    row.len()
                )));
            }
            if row.contains(&0) {
                return Err(Error::invalid(format!(
                    "every cell at level {} needs a child",
                    d + 1
                )));
            }
            width = row.iter().map(|&c| c as usize).sum();
        }
        if roots.max(branching.iter().flatten().copied().max().unwrap_or(0)) > 36 {
            return Err(Error::invalid("at most 36 children per cell"));
        }
        let profile = TreeProfile {
            shape: Shape::Custom { roots, branching },
            lower_bounds,
        };
        profile.validate_lower_bounds()?;
        Ok(profile)
    }

    fn validate_lower_bounds(&self) -> Result<()> {
        let depth = self.depth().expect("custom trees are finite");
        if self.lower_bounds.len() != depth {
            return Err(Error::invalid(format!(
                "need one lower bound per level ({depth}), got {}",
                self.lower_bounds.len()
            )));
        }
        for k in 1..=depth {
            let bound = &self.lower_bounds[k - 1];
            if *bound <= BigRational::zero() {
                return Err(Error::invalid(format!("lower bound at level {k} must be positive")));
            }
            for cell in self.cells(k)? {
                for n in k..=depth {
                    let ratio = BigRational::new(
                        BigInt::from(self.descendants(&cell, n)?),
                        BigInt::from(self.kappa(n)?),
                    );
                    if ratio < *bound {
                        return Err(Error::invalid(format!(
                            "cell {cell} has descendant proportion {ratio} < {bound} at level {n}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn sides(&self) -> Sides {
        match self.shape {
            Shape::TwoSided { .. } => Sides::Two,
            _ => Sides::One,
        }
    }

    /// Deepest level of a custom tree; `None` for full shifts.
    pub fn depth(&self) -> Option<usize> {
        match &self.shape {
            Shape::Custom { branching, .. } => Some(branching.len() + 1),
            _ => None,
        }
    }

    fn label_base(&self) -> u8 {
        match &self.shape {
            Shape::OneSided { base } | Shape::TwoSided { base } => *base,
            Shape::Custom { roots, branching } => {
                let widest = branching.iter().flatten().copied().max().unwrap_or(0);
                (*roots).max(widest).max(2) as u8
            }
        }
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 {
            return Err(Error::range("tree levels start at 1"));
        }
        if let Some(depth) = self.depth() {
            if level > depth {
                return Err(Error::range(format!("level {level} beyond tree depth {depth}")));
            }
        }
        Ok(())
    }

    /// Number of cells `κ(level)`.
    pub fn kappa(&self, level: usize) -> Result<u64> {
        self.check_level(level)?;
        match &self.shape {
            Shape::OneSided { base } => checked_pow(*base as u64, level),
            Shape::TwoSided { base } => checked_pow(*base as u64, 2 * level + 1),
            Shape::Custom { roots, branching } => Ok(if level == 1 {
                *roots as u64
            } else {
                branching[level - 2].iter().map(|&c| c as u64).sum()
            }),
        }
    }

    /// Root count and branching rows of a custom tree.
    fn custom_rows(&self) -> Option<(u32, &Vec<Vec<u32>>)> {
        match &self.shape {
            Shape::Custom { roots, branching } => Some((*roots, branching)),
            _ => None,
        }
    }

    /// Index of a custom-tree cell among the cells of its level.
    fn custom_index(&self, cell: &Word) -> Result<usize> {
        let (roots, branching) = self.custom_rows().expect("custom tree");
        let path = cell.symbols();
        let first = *path.first().ok_or_else(|| Error::invalid("empty cell label"))? as usize;
        if first >= roots as usize {
            return Err(Error::invalid(format!("no cell {cell}")));
        }
        let mut index = first;
        for (d, &step) in path.iter().enumerate().skip(1) {
            let row = &branching[d - 1];
            if step as u32 >= row[index] {
                return Err(Error::invalid(format!("no cell {cell}")));
            }
            let offset: usize = row[..index].iter().map(|&c| c as usize).sum();
            index = offset + step as usize;
        }
        Ok(index)
    }

    fn check_cell(&self, cell: &Word) -> Result<usize> {
        let level = match self.sides() {
            Sides::One => cell.len(),
            Sides::Two => {
                if cell.len().is_multiple_of(2) {
                    return Err(Error::invalid(format!("two-sided cell {cell} has even length")));
                }
                (cell.len() - 1) / 2
            }
        };
        self.check_level(level)?;
        match &self.shape {
            Shape::OneSided { base } | Shape::TwoSided { base } => {
                if cell.symbols().iter().any(|&s| s >= *base) {
                    return Err(Error::invalid(format!("cell {cell} uses symbols beyond {base}")));
                }
            }
            Shape::Custom { .. } => {
                self.custom_index(cell)?;
            }
        }
        Ok(level)
    }

    /// Number of children of `cell` one level down.
    pub fn fanout(&self, cell: &Word) -> Result<u64> {
        let level = self.check_cell(cell)?;
        match &self.shape {
            Shape::OneSided { base } => Ok(*base as u64),
            Shape::TwoSided { base } => Ok((*base as u64).pow(2)),
            Shape::Custom { branching, .. } => {
                let row = branching
                    .get(level - 1)
                    .ok_or_else(|| Error::range(format!("cell {cell} is at the deepest level")))?;
                Ok(row[self.custom_index(cell)?] as u64)
            }
        }
    }

    pub fn children(&self, cell: &Word) -> Result<Vec<Word>> {
        let fanout = self.fanout(cell)?;
        let base = self.label_base();
        Ok(match &self.shape {
            Shape::TwoSided { base } => {
                let mut out = Vec::with_capacity(fanout as usize);
                for left in 0..*base {
                    for right in 0..*base {
                        let mut s = vec![left];
                        s.extend_from_slice(cell.symbols());
                        s.push(right);
                        out.push(Word::from_raw(s, *base));
                    }
                }
                out
            }
            _ => (0..fanout as u8)
                .map(|c| {
                    let mut s = cell.symbols().to_vec();
                    s.push(c);
                    Word::from_raw(s, base)
                })
                .collect(),
        })
    }

    /// The level-`level` cell containing `cell` (`1 <= level <= cell level`).
    pub fn ancestor(&self, cell: &Word, level: usize) -> Result<Word> {
        let own = self.check_cell(cell)?;
        if level == 0 || level > own {
            return Err(Error::range(format!("no ancestor of {cell} at level {level}")));
        }
        Ok(self.sides().truncate(cell, own, level as i64))
    }

    /// Cells of a level in label order.
    pub fn cells(&self, level: usize) -> Result<Vec<Word>> {
        let count = self.kappa(level)?;
        if count > 50_000_000 {
            return Err(Error::size_limit("cells of one level", count, 50_000_000));
        }
        match &self.shape {
            Shape::OneSided { base } => Ok(Word::all(level, *base).collect()),
            Shape::TwoSided { base } => Ok(Word::all(2 * level + 1, *base).collect()),
            Shape::Custom { roots, .. } => {
                let base = self.label_base();
                let mut layer: Vec<Word> =
                    (0..*roots as u8).map(|c| Word::from_raw(vec![c], base)).collect();
                for _ in 1..level {
                    let mut next = Vec::new();
                    for cell in &layer {
                        next.extend(self.children(cell)?);
                    }
                    layer = next;
                }
                Ok(layer)
            }
        }
    }

    /// Number of level-`level` cells inside `cell`.
    pub fn descendants(&self, cell: &Word, level: usize) -> Result<u64> {
        let own = self.check_cell(cell)?;
        self.check_level(level)?;
        if level < own {
            return Err(Error::range(format!("level {level} is above cell {cell}")));
        }
        let extra = level - own;
        match &self.shape {
            Shape::OneSided { base } => checked_pow(*base as u64, extra),
            Shape::TwoSided { base } => checked_pow(*base as u64, 2 * extra),
            Shape::Custom { .. } => {
                let mut layer = vec![cell.clone()];
                for _ in 0..extra {
                    let mut next = Vec::new();
                    for c in &layer {
                        next.extend(self.children(c)?);
                    }
                    layer = next;
                }
                Ok(layer.len() as u64)
            }
        }
    }

    /// `L_k`: a positive lower bound on the descendant proportion of level-`k` cells.
    pub fn lower_bound(&self, k: usize) -> Result<BigRational> {
        self.check_level(k)?;
        match &self.shape {
            Shape::Custom { .. } => Ok(self.lower_bounds[k - 1].clone()),
            _ => Ok(BigRational::new(BigInt::one(), BigInt::from(self.kappa(k)?))),
        }
    }

    /// Uniform tree measure of a cell: mass is split evenly among children.
    pub fn measure(&self, cell: &Word) -> Result<BigRational> {
        let level = self.check_cell(cell)?;
        let mut mass = BigRational::new(BigInt::one(), BigInt::from(self.kappa(1)?));
        for l in 1..level {
            let parent = self.ancestor(cell, l)?;
            mass /= BigInt::from(self.fanout(&parent)?);
        }
        Ok(mass)
    }

    /// All cells of a level as a level set.
    pub fn full_level(&self, level: usize) -> Result<LevelSet> {
        LevelSet::new(level, self.sides(), self.cells(level)?)
    }
}

fn check_base(base: u8) -> Result<()> {
    if (2..=36).contains(&base) {
        Ok(())
    } else {
        Err(Error::invalid(format!("alphabet size {base} outside 2..=36")))
    }
}

/// Shorthand for `tree_measure` in operation form.
pub fn tree_measure(profile: &TreeProfile, cell: &Word) -> Result<BigRational> {
    profile.measure(cell)
}
