//! Random lifts and exact counting on them.

pub mod cycles;
pub mod lift;
pub mod matching;
pub mod monte_carlo;
pub mod oracle;

pub use cycles::count_k_cycles;
pub use lift::{sample_lift, Lift, UGraph};
pub use matching::count_perfect_matchings;
pub use monte_carlo::{monte_carlo_moments, SimReport, Trial};
pub use oracle::{exhaustive_lift_oracle, OracleReport};
