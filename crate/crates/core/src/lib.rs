//! Proximal-calculus toolkit with numerical verification.
//!
//! The crate provides dense vector/operator arithmetic, a small catalog of
//! convex functions, Moreau envelopes and proximity operators with
//! closed-form and brute-force routes, forward-backward and
//! backward-backward splitting, and suites that numerically certify the
//! cocoercivity/Lipschitz equivalences these constructions satisfy.
//!
//! Heavy inner loops (grid scans, sampled-pair sweeps) run on rayon when the
//! default `parallel` feature is enabled and fall back to sequential loops
//! otherwise; both backends reduce deterministically, so reports are
//! byte-stable across thread counts and feature choices.

pub mod functions;
pub mod moreau;
pub mod oracles;
pub mod par;
pub mod solvers;
pub mod vecspace;
pub mod verify;

pub use functions::{
    make_abs_l1, make_huber, make_quadratic, make_shifted_conjugate, make_zero, CatalogFunction,
    Caps, FunctionError, ShiftedConjugate,
};
pub use vecspace::{inner, half_sq_norm, op_norm, psd_check, sandwich_check, SymOperator, Vector};
