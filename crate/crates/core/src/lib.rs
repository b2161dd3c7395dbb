//! Static analysis and reference evaluation for semiring-weighted logic
//! programs.

pub mod builtin;
pub mod cost;
pub mod denote;
pub mod propagate;
pub mod report;
pub mod semiring;
pub mod solver;
pub mod syntax;
pub mod term;
pub mod typeinfer;

pub use semiring::{Boolean, Count, MaxTimes, MinPlus, RealPlusTimes, Semiring, SemiringKind};

/// Real-valued sum-product semiring over `f64`.
pub type Real = RealPlusTimes<f64>;
/// Min-plus semiring over `f64`.
pub type Tropical = MinPlus<f64>;
/// Max-times semiring over `f64`.
pub type Viterbi = MaxTimes<f64>;
/// Counting semiring over `u64`.
pub type Counting = Count<u64>;
