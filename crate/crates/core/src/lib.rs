//! Invariant synthesis for programs whose verification conditions fall
//! outside a decidable logic.
//!
//! A deliberately incomplete verifier (skolemization plus bounded quantifier
//! instantiation, discharged by an SMT solver) checks each conjectured
//! annotation. When it fails, the countermodel is mined for constraints on
//! the next conjecture, and a Houdini-style learner proposes the strongest
//! conjunction of candidate predicates consistent with everything seen so far.
//!
//! The main entry points are [`driver::synthesize`] for a single program and
//! [`driver::run_suite`] for a directory of `.npl` files.

pub mod cdnpi;
pub mod driver;
pub mod ice;
pub mod logic;
pub mod quant;
pub mod solver;
pub mod teacher;
pub mod vcgen;
