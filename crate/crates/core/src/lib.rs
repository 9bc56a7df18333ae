//! A decision procedure and proof toolkit for the logic of Bunched
//! Implications (BI).
//!
//! - [`syntax`]: formulas, bunches, sequents, the ASCII grammar, ≅ and ≡.
//! - [`measures`]: multiplicity μ, multiplicative width ω, depth δ.
//! - [`rewriting`]: the reduction system on bunches and normal forms.
//! - [`calculus`]: the rule systems LBI, sLBI, dLBI and dLBI+rad, proof
//!   checking, the proof interchange format and regimentation.
//! - [`search`]: the bounded sequent space and the decision procedure.
//! - [`transform`]: proof transformations and well-labelling.

pub mod calculus;
pub mod measures;
pub mod rewriting;
pub mod search;
pub mod syntax;
pub mod transform;

pub use calculus::{check_derivation, is_regimented, Derivation, Rule, RuleInstance, System};
pub use measures::{sequent_measures, Measures, SearchBounds};
pub use rewriting::{normal_form, normalize};
pub use search::{decide, generate_space, Outcome, SearchOptions, Verdict};
pub use syntax::{parse_bunch, parse_formula, parse_sequent, Bunch, Formula, Sequent};
