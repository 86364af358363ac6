//! Gram-matrix positivity of reflected Renyi entropies, infinite
//! divisibility and the randomized counterexample search.

pub mod divisibility;
pub mod gram;
pub mod search;
pub mod sweep;

pub use divisibility::{divisibility_matrix, ordering_scan, three_set_inequality, DivisibilityRecord, OrderingScan};
pub use gram::{check_psd, fractional_power, gram_from_reflected, gram_matrix, schur_power, GramRecord, PsdVerdict};
pub use search::{counterexample_search, SearchConfig, SearchReport, SearchStatus, SearchTarget, Violation};
pub use sweep::{theorem_sweep, DimSpec, SweepConfig, SweepReport};
