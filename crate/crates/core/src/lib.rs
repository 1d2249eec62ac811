//! Temporal-logic-guided refinement of demonstrated motion skills.
//!
//! The crate takes a motion skill encoded as a hidden semi-Markov model
//! (Gaussian components, duration probabilities, transition matrix), a task
//! specification written in signal temporal logic (STL), and searches the
//! skill's parameter space with Gaussian-process Bayesian optimization until
//! the executed trajectory satisfies the specification.
//!
//! Module map:
//!
//! - [`stl`] — formula AST, text parser, signals, exact boolean semantics.
//! - [`robustness`] — quantitative STL semantics: classical space robustness
//!   and the smooth sign-preserving variant used as the optimization reward.
//! - [`model`] — skill models, the optimization parameter space with bounds,
//!   and trajectory retrieval via finite-horizon linear-quadratic tracking.
//! - [`bo`] — the Bayesian optimization loop: GP surrogate, probability of
//!   improvement, proposal search, and trace bookkeeping.
//! - [`sim`] — deterministic trajectory executor (positions plus a synthetic
//!   contact-force channel) and the bundled benchmark experiments.

pub mod bo;
pub mod model;
pub mod robustness;
pub mod sim;
pub mod stl;
