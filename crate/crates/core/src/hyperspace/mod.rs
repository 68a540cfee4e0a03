//! Finite-level presentations of the hyperspace of compact sets over a
//! tree of cylinder cells.

mod covering;
mod levelset;
mod occupancy;
mod profile;

pub use covering::{
    binomial, count_covering_subsets, covering_fraction_bound, rational_to_f64, CoveringCount,
};
pub use levelset::{
    dist_to_finite, hausdorff_at_level, project, DyadicDistance, FiniteDistance, LevelSet, Sides,
};
pub use occupancy::{finitary_occupancy_law, total_mass, Distribution, OccupancyLaw, Weighted};
pub use profile::{tree_measure, TreeProfile};
