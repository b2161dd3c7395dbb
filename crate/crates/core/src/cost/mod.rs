//! Space and time bounds.

mod card;
mod runtime;
mod symexpr;

pub use card::{
    card_bound, card_bound_detailed, space_bound, type_size, CardBound, CardinalityDb, EXACT_LIMIT,
};
pub use runtime::{time_bound, AnalyzedPlanner, DriverTerm, RuntimeAnalyzer, State, TimeBound};
pub use symexpr::{Factor, Monomial, SymExpr};
