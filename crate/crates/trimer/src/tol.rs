//! Centralized numerical tolerances.
//!
//! Every hard-coded threshold used by the solvers lives here with a note on
//! where it comes from.  Tests and examples reference these constants rather
//! than repeating magic numbers.

/// Relative accuracy target for scalar root finding (fiber eigenvalues,
/// Birman-Schwinger crossings).  Bisection stops when the bracket width drops
/// below `ROOT_REL * max(1, |z|)`.
pub const ROOT_REL: f64 = 1e-13;

/// Gradient norm at which band-extremum refinement declares convergence.
pub const EXTREMUM_GRAD: f64 = 1e-12;

/// Below this, the pair-dispersion amplitude `b = sqrt(1 + g^2 + 2 g cos t)`
/// is treated as exactly zero: the threshold integral then diverges
/// logarithmically or worse and the two-body coupling threshold is zero.
pub const B_FLOOR: f64 = 3e-8;

/// Decay rates `D >= DECAY_DIRECT` are handled by pure quadrature with
/// horizon `T = 50 / D` (truncation error below `e^-50`); smaller rates go
/// through the threshold path with analytic tail corrections.
pub const DECAY_DIRECT: f64 = 5e-8;

/// Hard cap on quadrature horizons, reached only for decay rates at the
/// crossover `DECAY_DIRECT`.
pub const HORIZON_CAP: f64 = 1e9;

/// A Birman-Schwinger weight `|Delta(q)| < DELTA_FLOOR` at a grid node makes
/// the kernel numerically meaningless at that node; the caller is told which
/// node offends.
pub const DELTA_FLOOR: f64 = 1e-14;

/// Eigenvalues within this of one count as Birman-Schwinger crossings when
/// multiplicities are matched against the dense oracle.
pub const BS_MATCH: f64 = 1e-6;

/// Bound-state candidates closer than this are merged into one degenerate
/// level.
pub const CLUSTER: f64 = 1e-6;

/// Dense-oracle eigenvalues must sit at least this far from the discrete
/// two-particle set and the discrete three-particle values before they are
/// compared against the Birman-Schwinger reduction.
pub const ISOLATION: f64 = 1e-6;

/// Default number of Gauss-Legendre points per panel in the Laplace
/// quadrature.
pub const GL_POINTS: usize = 32;

/// Default geometric panels per decade in the Laplace quadrature.
pub const PANELS_PER_DECADE: usize = 4;

/// Modified-Bessel evaluation switches from the power series to the 14-term
/// asymptotic expansion at this argument; both sides agree to about 1e-15
/// relative accuracy there.
pub const BESSEL_SWITCH: f64 = 50.0;

/// Number of terms retained in asymptotic Bessel tails.
pub const BESSEL_ASYM_TERMS: usize = 14;
