//! A numerical laboratory for linear cocycles over Lipschitz dynamics.
//!
//! `oselab` computes Lyapunov spectra, Oseledets filtrations and splittings,
//! builds regular (Pesin) blocks with executable membership tests, and
//! mechanically verifies Hölder-continuity bounds for the dependence of
//! Oseledets subspaces on the base point — matrix-sequence lemmas as well as
//! the end-to-end exponent predictions — on bundled example systems.
//!
//! The modules mirror the pipeline:
//!
//! * [`grassmann`] — subspace frames, distances, principal angles, graph
//!   maps, transverse intersections;
//! * [`cocycle`] — cocycle systems, iteration, iterate-Hölder estimates;
//! * [`oseledets`] — QR-cascade spectra, filtrations, splittings;
//! * [`regular_blocks`] — `(ε, ℓ)` membership tests and norm-growth checks;
//! * [`bounds`] — the bound formulas, their hypothesis-checking verifiers,
//!   and the end-to-end exponent predictions;
//! * [`systems`] — bundled example systems with analytic regularity data;
//! * [`harness`] — experiment driver, config files, reports, soundness
//!   sweeps.
//!
//! The guide under `book/` walks through the concepts; its code snippets
//! are compiled and run as part of `cargo test` (see [`book`]).

pub mod bounds;
pub mod cocycle;
pub mod grassmann;
pub mod harness;
pub(crate) mod linalg;
pub mod oseledets;
pub mod regular_blocks;
pub mod systems;

pub use bounds::{BoundReport, BoundsError};
pub use cocycle::{CocycleError, CocycleSystem, Point};
pub use grassmann::{GraphMap, GrassmannError, Subspace};
pub use oseledets::{OseledetsData, OseledetsError, Spectrum};
pub use regular_blocks::{BlockMembership, RegularBlockParams};
pub use systems::{SystemError, SystemSpec};

/// Doc-tested copies of the guide chapters under `book/src/`, so the book's
/// code snippets compile and run under `cargo test` and cannot drift from
/// the library.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/subspaces.md")]
    pub mod subspaces {}
    #[doc = include_str!("../../../book/src/cocycles.md")]
    pub mod cocycles {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    pub mod spectra {}
    #[doc = include_str!("../../../book/src/regular-blocks.md")]
    pub mod regular_blocks {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    pub mod bounds {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod experiments {}
}
