//! Circle dilations `x ↦ nx mod 1` with exact rationals: digit-defined
//! invariant sets, covers and their dilations, density over multiplicative
//! Folner sets, the J-set extraction, the Berend-Peres sets and Weyl sums.

mod arcs;
mod berend;
mod density;
mod digits;
mod folner;
mod jset;
mod weyl;

pub use arcs::{eps_dense, frac, ExactFraction, IntervalUnion};
pub use berend::{
    berend_peres, divisibility_fraction, folner_max, hausdorff_to_zero, BerendPeres, CondensationStat,
    DivisibilityCount, Growth, ImplicationCheck,
};
pub use density::{
    dilation_density, gap_bound_at, gap_bounds, DensityResult, DensityRow, GapBound, Resolution, Verdict,
};
pub use digits::{cover, DigitSet};
pub use folner::{first_primes, folner_mult, primorial, FolnerSet};
pub use jset::{extract_j, JExtraction, JTraceRow};
pub use weyl::{star_discrepancy, weyl_discrepancy, Alpha, Sequence, WeylResult, MAX_POINTS};
