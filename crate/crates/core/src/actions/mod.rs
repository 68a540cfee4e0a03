//! Permutation actions on shift spaces, transitivity at one level, and
//! averaged orbit statistics.

mod orbit;
mod permutation;
mod rblock;
mod transitivity;

pub use orbit::{
    lehmer_unrank, orbit_stat, sunny_side_up, Event, ExplicitWindow, OrbitSource, OrbitStat,
    PermutationWindow, Sampling, ShiftWindow,
};
pub use permutation::{apply_permutation, random_symmetric_element, BlockPermutation, Mode};
pub use rblock::{
    enumerable_instances, fits_in_rblock, rblock_bounds, rblock_containment, RblockBounds,
    RblockInstance, RblockMode, RblockResult,
};
pub use transitivity::{
    alternating_generators, cyclic_generator, symmetric_generators, transitivity_check,
    TransitivityMode,
};
