//! Numerical toolkit for complex germs on invariant isotropic tori.
//!
//! Given k commuting Hamiltonian flows on R^{2n} with a common invariant
//! k-torus, germkit computes the monodromy operators over the torus return
//! lattice, reduces them to the symplectic quotient, classifies their
//! stability through Krein signatures, decides whether a complex germ (a
//! field of positive Lagrangian planes containing the complexified tangent)
//! exists and whether it is unique, constructs the germ field by pushforward,
//! and certifies every germ axiom numerically.
//!
//! The built-in model class covers Hamiltonians with k cyclic variables and
//! a quadratic (optionally quartic-perturbed) transverse part; these carry
//! analytic return lattices and an analytic reduced-monodromy oracle.

pub mod cli;
pub mod error;
pub mod germ;
pub mod linalg;
pub mod models;
pub mod monodromy;
pub mod par;
pub mod pli;
pub mod schema;
pub mod spectral;
pub mod symcore;
