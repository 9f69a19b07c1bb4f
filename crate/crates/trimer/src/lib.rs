//! Spectral analysis of a three-particle lattice Schroedinger operator.
//!
//! This crate computes the spectral picture of a system of two identical
//! fermions and one distinct particle moving on the three-dimensional cubic
//! lattice, interacting through a zero-range fermion-core attraction of
//! strength `lambda`.  After separating the conserved total quasi-momentum
//! `K`, each fiber Hamiltonian acts on antisymmetric functions over the
//! torus `(-pi, pi]^3` and its spectrum splits into
//!
//! * two *essential-spectrum* bands: a two-particle band traced out by the
//!   bound state of the fermion-core pair (when it exists) and a
//!   three-particle band of unbound motion, and
//! * discrete eigenvalues below the lower band and, for strong coupling,
//!   inside the gap between the bands.
//!
//! The discrete spectrum is resolved through the Birman-Schwinger principle:
//! `z` is an eigenvalue of the fiber Hamiltonian precisely when a compact
//! self-adjoint integral operator depending on `z` has eigenvalue one.  The
//! crate provides
//!
//! * exact band extrema and two-body fiber eigenvalues via one-dimensional
//!   Laplace-transform quadrature ([`two_body`]),
//! * Nystrom discretizations of the Birman-Schwinger operator, its symmetry
//!   decomposition, and its weak-coupling principal parts
//!   ([`birman_schwinger`]),
//! * bound-state location, multiplicity, and parity classification together
//!   with residual certificates ([`bound_states`]),
//! * critical mass-ratio constants governing when bound states appear
//!   ([`bound_states::critical_gammas`]),
//! * small dense reference spectra that validate the whole chain end to end
//!   ([`oracle`]), and
//! * a command-line interface over the same functionality ([`cli`]).
//!
//! Everything is deterministic: no randomness enters any numerical path, and
//! repeated runs produce identical bytes.

pub mod birman_schwinger;
pub mod bound_states;
pub mod cli;
pub mod dispersion;
pub mod linalg;
pub mod oracle;
pub mod special;
pub mod tol;
pub mod torus_grid;
pub mod two_body;

/// Errors reported by the numerical routines.
///
/// Variants distinguish caller mistakes (`InvalidArgument`, `InvalidInput`),
/// mathematically meaningless requests (`DomainError`), numerically hopeless
/// configurations (`IllConditioned`), declared-but-unimplemented regimes
/// (`Unsupported`), resource guards (`ResourceLimit`), and I/O failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its documented range (negative `gamma`, odd
    /// grid size where parity symmetry is required, and so on).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The request is well-formed but mathematically undefined here, e.g.
    /// evaluating a resolvent-type quantity at a point of the spectrum.
    #[error("domain error: {0}")]
    DomainError(String),

    /// A quantity needed in a denominator is too small to trust; the message
    /// names the offending grid node or parameter.
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    /// The combination of options is recognised but intentionally not
    /// implemented (e.g. symmetry decomposition at nonzero total
    /// quasi-momentum, where the symmetry group is broken).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A guard against accidentally enormous computations (dense oracle
    /// matrices, pair-function reconstruction on large grids).
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// Malformed user-facing input: config files, range syntax, CSV paths.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Filesystem failure while reading configuration or writing output.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
