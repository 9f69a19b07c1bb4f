//! Discrete spectrum of the three-body fiber Hamiltonian.
//!
//! The Birman-Schwinger principle ([`crate::birman_schwinger`]) turns the
//! eigenvalue problem `H f = z f` outside the essential spectrum into a fixed
//! resolution-in-`z` family of compact self-adjoint operators `B(z)`: after
//! deflating the constraint direction, `z` is an eigenvalue of the fiber
//! Hamiltonian exactly when `1` is an eigenvalue of the projected operator,
//! with equal multiplicities.  This module walks that family:
//!
//! * **Below the bands** ([`solve_below`]).  At zero total quasi-momentum the
//!   kernel is positivity-improving on each per-axis odd sector, the top
//!   eigenvalue `mu(z)` of the `Odd1` sector increases strictly in `z`, and
//!   the unique crossing `mu(z) = 1` is found by safeguarded false-position
//!   iteration.  The triple degeneracy is assembled from the three
//!   axis-related sectors `Odd1`, `Odd2`, `Odd3`, whose spectra coincide by
//!   cubic symmetry.  The even and triply-odd sectors are scanned to confirm
//!   the absence of further crossings.  At general quasi-momentum no parity
//!   survives, so the top six eigenvalue curves of the projected full
//!   operator are scanned over an edge-refined `z`-mesh and every sign change
//!   of `mu - 1` is polished individually.
//!
//! * **Inside the band gap** ([`solve_gap`]).  When the two-particle band
//!   detaches from the three-particle band, eigenvalues may appear in the gap
//!   for large mass ratio.  The relevant crossings live in the even subspace:
//!   a doubly degenerate family carried by the `EvenA2`/`EvenPerp` pair and a
//!   simple one in the permutation-symmetric sector `EvenS2`.  The curves are
//!   not monotone, so all of them are tabulated across the admissible window
//!   `(tau_max, tau_max + T_lambda)` and each crossing is refined separately.
//!
//! * **Eigenfunction reconstruction** ([`reconstruct_eigenfunction`]).  From
//!   a unit Birman-Schwinger eigenvector `psi` the pair wave function
//!   `f(p, q) = (phi(q) - phi(p)) / (E(p, q) - z)` with
//!   `phi = psi / sqrt|Delta|` is rebuilt, and the relative residual
//!   `||(H - z) f|| / ||f||` of the *discretized* Hamiltonian is evaluated in
//!   closed form: `(H - z) f` collapses to the antisymmetrized grid function
//!   `g(q) - g(p)` with `g = phi Delta + lambda G`, so the residual needs one
//!   `O(n^6)` sweep and no dense matrix.
//!
//! * **Critical mass ratios** ([`critical_gammas`]).  The thresholds at which
//!   bound states appear are `1 / sup` of eigenvalue curves of the
//!   weak-coupling limit operator.  At zero quasi-momentum they reduce to
//!   lattice Watson-type integrals with closed quadrature forms; at general
//!   `K` the curves are scanned over the spectral parameter `alpha` with
//!   golden-section refinement.
//!
//! Every reported state carries a residual certificate and the list of
//! symmetry sectors in which the eigenvalue-one crossing occurred, so parity
//! claims are backed by data rather than by construction.

use std::time::Instant;

use rayon::prelude::*;

use crate::birman_schwinger::{
    self as bs, constraint_projection, sector_basis, KernelOperator, Region, SectorBasis,
    SymmetrySector,
};
use crate::dispersion::ModelParams;
use crate::linalg::{self, SymMatrix};
use crate::special::j_moment;
use crate::tol;
use crate::torus_grid::{make_grid, GridFunction, TorusGrid};
use crate::two_body::{self, DeltaMethod, FiberCache, SpectralBands};
use crate::{Error, Result};

/// Absolute standoff from band edges: brackets and scan windows stay this far
/// away from `tau_min`, `tau_max` and `E_min(K)`, where the determinant
/// weights degenerate.
pub const EDGE_STANDOFF: f64 = 1e-6;

/// Mesh points across the gap window.  The eigenvalue curves are restrictions
/// of analytic kernels, hence smooth; 400 points resolve every crossing seen
/// in practice with two orders of magnitude to spare.
const GAP_MESH_POINTS: usize = 400;

/// Mesh points for the general-momentum scan below the band.  The mesh is
/// quadratically refined towards the band edge where bound states accumulate.
const BELOW_MESH_POINTS: usize = 120;

/// Mesh points for "no crossing expected" confirmation sweeps (even and
/// triply-odd sectors below the band, where sign-definiteness forbids
/// crossings).
const CONFIRM_MESH_POINTS: usize = 8;

/// Fallback mesh density when the monotone false-position trace is violated.
const FALLBACK_MESH_POINTS: usize = 160;

/// Sorted eigenvalue curves tracked per symmetry sector at `K = 0`.
const CURVES_SYMMETRIC: usize = 4;

/// Sorted eigenvalue curves tracked for the projected full operator.
const CURVES_GENERAL: usize = 6;

/// Refinement target: crossings are polished until `|mu(z) - 1|` drops below
/// this (or the bracket collapses to relative width [`tol::ROOT_REL`]).
const MU_REFINE: f64 = 1e-10;

/// A refined candidate is only reported when `|mu - 1|` ended below this;
/// anything larger means the bracket pinched without an actual crossing.
pub const MU_ACCEPT: f64 = 1e-8;

/// Iteration caps for the two root finders.
const FALSE_POSITION_MAX: usize = 80;

/// Monotonicity slack for the bisection-trace check: consecutive trace values
/// may decrease by at most this before the solver distrusts the bracket and
/// falls back to a mesh scan.
const TRACE_SLACK: f64 = 1e-12;

/// Eigenvectors are extracted densely up to this dimension; larger operators
/// use a restarted Lanczos pass with explicitly stored Krylov basis.
const EIGVEC_DENSE_CAP: usize = 1600;

/// Krylov steps for the large-dimension Ritz-vector extraction.
const RITZ_STEPS: usize = 240;

/// A crossing whose eigenvector carries more than this fraction of its mass
/// on a single grid node is a discretization artifact of a nearly singular
/// determinant weight (the continuum eigenfunctions are spread over symmetry
/// orbits) and is discarded from gap scans.
const SINGLE_NODE_MASS: f64 = 0.9;

/// Pair functions are materialized only for `n^3` up to this (the `f` table
/// holds `n^6` doubles); the residual itself streams and has no cap.
const RECONSTRUCT_NODE_CAP: usize = 1800;

/// Unit-norm and constraint tolerances on eigenvectors fed to the
/// reconstruction routines.
const PSI_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Report types
// ---------------------------------------------------------------------------

/// Parity of a bound-state eigenfunction under total momentum reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Odd under `(p, q) -> (-p, -q)`; all below-band states at `K = 0`.
    Odd,
    /// Even under total reflection; all gap states at `K = 0`.
    Even,
    /// Crossings in both odd and even sectors merged at one energy (not
    /// expected for this model; reported defensively rather than hidden).
    Mixed,
    /// No parity decomposition exists (`K != 0`).
    NotApplicable,
}

impl Parity {
    /// Lower-case label for reports.
    pub fn label(self) -> &'static str {
        match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
            Parity::Mixed => "mixed",
            Parity::NotApplicable => "n/a",
        }
    }
}

/// One discrete eigenvalue of the fiber Hamiltonian, with its certificate.
#[derive(Debug, Clone)]
pub struct BoundState {
    /// Eigenvalue location.
    pub z: f64,
    /// Count of projected Birman-Schwinger eigenvalues within
    /// [`tol::BS_MATCH`] of one at `z`, summed over the scanned sectors.
    pub multiplicity: usize,
    /// Parity classification derived from `sector_tags`.
    pub parity: Parity,
    /// Whether the state sits below both bands or inside the band gap.
    pub location: Region,
    /// Relative residual `||(H - z) f|| / ||f||` of the reconstructed pair
    /// function under the discretized fiber Hamiltonian.
    pub residual: f64,
    /// Symmetry sectors whose projected operator has eigenvalue one at `z`.
    pub sector_tags: Vec<SymmetrySector>,
    /// True when the monotone bracketing assumption failed and the state was
    /// recovered by the safety-net mesh scan instead.
    pub from_fallback_scan: bool,
}

/// How the second critical ratio was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gamma2Flag {
    /// The supremum over `alpha` was attained strictly inside the scanned
    /// interval, so `1 / sup` is the ratio itself.
    Exact,
    /// The supremum sat on the boundary of the `alpha` scan (at zero
    /// quasi-momentum it sits at `alpha = 0`), so `1 / sup` is only an upper
    /// bound for the ratio: a lower bound on where gap states are guaranteed.
    LowerBoundFromSup,
}

/// The four critical mass ratios at fixed total quasi-momentum.
///
/// For `gamma < gamma1` no eigenvalues exist below the bands and for
/// `gamma > gamma1_tilde` at least three do (counted with multiplicity);
/// `gamma2` / `gamma2_tilde` play the same roles for the band gap.  At zero
/// quasi-momentum `gamma1 = gamma1_tilde` (the three below-band threshold
/// curves coincide) and the pair of bounds collapses to one number.
#[derive(Debug, Clone)]
pub struct CriticalGammas {
    /// Below-band nonexistence threshold `1 / max_i sup_alpha`.
    pub gamma1: f64,
    /// Below-band existence threshold `1 / min_i sup_alpha`.
    pub gamma1_tilde: f64,
    /// Gap nonexistence threshold, exact or a bound per `gamma2_flag`.
    pub gamma2: f64,
    /// Provenance of `gamma2`.
    pub gamma2_flag: Gamma2Flag,
    /// Gap existence threshold.
    pub gamma2_tilde: f64,
    /// Total quasi-momentum the constants refer to.
    pub k: [f64; 3],
}

/// Sublinear gap-window growth `T_lambda = c * lambda^theta`.
///
/// Gap eigenvalues are certified inside `(tau_max, tau_max + T_lambda)`;
/// sublinearity (`theta < 1`) keeps the window asymptotically clear of the
/// upper band, whose distance grows linearly in `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapWindow {
    coefficient: f64,
    exponent: f64,
}

impl GapWindow {
    /// Validates `coefficient > 0` and `exponent` strictly inside `(0, 1)`.
    ///
    /// # Errors
    ///
    /// `InvalidArgument` outside those ranges.
    pub fn new(coefficient: f64, exponent: f64) -> Result<Self> {
        if !coefficient.is_finite() || coefficient <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "gap window coefficient must be positive, got {coefficient}"
            )));
        }
        if !exponent.is_finite() || exponent <= 0.0 || exponent >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "gap window exponent must lie strictly between 0 and 1, got {exponent}"
            )));
        }
        Ok(GapWindow { coefficient, exponent })
    }

    /// Window coefficient `c`.
    pub fn coefficient(self) -> f64 {
        self.coefficient
    }

    /// Window exponent `theta`.
    pub fn exponent(self) -> f64 {
        self.exponent
    }

    /// Window length `T_lambda = c * lambda^theta`.
    pub fn t_lambda(self, lambda: f64) -> f64 {
        self.coefficient * lambda.powf(self.exponent)
    }
}

impl Default for GapWindow {
    /// `T_lambda = sqrt(lambda)`.
    fn default() -> Self {
        GapWindow { coefficient: 1.0, exponent: 0.5 }
    }
}

/// Everything about one `(gamma, lambda, K)` point: bands, both bound-state
/// lists, and wall-clock cost.
#[derive(Debug, Clone)]
pub struct PhaseReport {
    /// Parameters the report refers to.
    pub params: ModelParams,
    /// Essential-spectrum bands and gap.
    pub bands: SpectralBands,
    /// States below both bands, sorted by energy.
    pub below: Vec<BoundState>,
    /// States inside the band gap, sorted by energy.
    pub gap_states: Vec<BoundState>,
    /// Wall-clock seconds spent assembling this report.
    pub elapsed_seconds: f64,
}

// ---------------------------------------------------------------------------
// Shared scan machinery
// ---------------------------------------------------------------------------

/// Per-scan state that does not depend on `z`: the Laplace-transform fiber
/// cache, the pair-energy tables, and the sector bases.  A `z`-sweep builds
/// this once and then assembles one small matrix per evaluation.
struct SectorScanner<'a> {
    params: &'a ModelParams,
    grid: &'a TorusGrid,
    method: DeltaMethod,
    cache: FiberCache,
    energy: bs::EnergyTables,
    /// `None` marks the full (unrestricted) operator.
    bases: Vec<(SymmetrySector, Option<SectorBasis>)>,
}

impl<'a> SectorScanner<'a> {
    fn new(
        params: &'a ModelParams,
        grid: &'a TorusGrid,
        method: DeltaMethod,
        sectors: &[SymmetrySector],
    ) -> Result<Self> {
        let mut bases = Vec::with_capacity(sectors.len());
        for &sector in sectors {
            let basis = if sector == SymmetrySector::Full {
                if grid.len() > bs::MAX_OPERATOR_DIM {
                    return Err(Error::ResourceLimit(format!(
                        "full operator on n = {} has dimension {}, above the dense cap of {}",
                        grid.n(),
                        grid.len(),
                        bs::MAX_OPERATOR_DIM
                    )));
                }
                None
            } else {
                Some(sector_basis(grid, sector)?)
            };
            bases.push((sector, basis));
        }
        Ok(SectorScanner {
            params,
            grid,
            method,
            cache: FiberCache::new(params, grid.clone()),
            energy: bs::EnergyTables::new(params, grid),
            bases,
        })
    }

    fn sector(&self, which: usize) -> SymmetrySector {
        self.bases[which].0
    }

    /// Constraint-projected sector operator at `z`.  The matrix is identical
    /// to `constraint_projection(bs_sector_matrix(...))` but reuses the
    /// `z`-independent tables held by the scanner.
    fn operator(&self, which: usize, z: f64) -> Result<KernelOperator> {
        let (weights, region) =
            bs::delta_weights_cached(self.params, z, self.grid, self.method, &self.cache)?;
        let kfac = -region.delta_sign() * self.params.lambda / self.grid.len() as f64;
        let (sector, basis) = &self.bases[which];
        let matrix = match basis {
            Some(b) => bs::assemble_restricted(b, |i, j| {
                kfac * weights[i as usize] * weights[j as usize]
                    / (self.energy.pair_energy(i as usize, j as usize) - z)
            }),
            None => SymMatrix::from_fn(self.grid.len(), |i, j| {
                kfac * weights[i] * weights[j] / (self.energy.pair_energy(i, j) - z)
            }),
        };
        let op = KernelOperator {
            grid: self.grid.clone(),
            z,
            params: *self.params,
            sector: *sector,
            region,
            matrix,
            weights,
        };
        Ok(constraint_projection(&op))
    }

    /// Largest `k` eigenvalues (descending) of the projected sector operator.
    fn top_eigs(&self, which: usize, z: f64, k: usize) -> Result<Vec<f64>> {
        let op = self.operator(which, z)?;
        Ok(linalg::sym_top_eigs(&op.matrix, k))
    }

    /// Count of eigenvalues within [`tol::BS_MATCH`] of one, over the first
    /// `k` curves.
    fn crossing_count(&self, which: usize, z: f64, k: usize) -> Result<usize> {
        let tops = self.top_eigs(which, z, k)?;
        Ok(tops.iter().filter(|&&mu| (mu - 1.0).abs() <= tol::BS_MATCH).count())
    }

    /// Unit eigenvector (in grid coordinates) of the projected sector
    /// operator whose eigenvalue is nearest one, with that eigenvalue.
    fn eigvec_near_one(&self, which: usize, z: f64) -> Result<(f64, Vec<f64>)> {
        let op = self.operator(which, z)?;
        let (mu, coeffs) = ritz_vector_near(&op.matrix, 1.0);
        let lifted = match &self.bases[which].1 {
            Some(basis) => basis.lift(&coeffs, self.grid.len()),
            None => coeffs,
        };
        Ok((mu, normalized(lifted)))
    }
}

/// One refined `mu(z) = 1` crossing.
struct Crossing {
    z: f64,
    mu: f64,
    sector: SymmetrySector,
}

/// Ascending mesh from `a` to `b` inclusive.
fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    debug_assert!(count >= 2);
    (0..count)
        .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Ascending mesh on `[floor, edge]` quadratically clustered towards `edge`,
/// where below-band eigenvalues accumulate.
fn edge_clustered_mesh(floor: f64, edge: f64, count: usize) -> Vec<f64> {
    debug_assert!(count >= 2);
    (0..count)
        .map(|i| {
            let t = 1.0 - i as f64 / (count - 1) as f64;
            edge - (edge - floor) * t * t
        })
        .collect()
}

/// Tabulates the top `n_curves` eigenvalues of one sector over the mesh and
/// refines every sign change of `mu_k(z) - 1` by safeguarded false position.
///
/// Mesh evaluations are independent and run in parallel; the refinements are
/// sequential.  Candidates whose final `|mu - 1|` exceeds [`MU_ACCEPT`] are
/// dropped (a pinched bracket without a crossing), as are candidates whose
/// eigenvector concentrates on a single grid node (see [`SINGLE_NODE_MASS`])
/// when `filter_localized` is set.
fn scan_sector_crossings(
    scanner: &SectorScanner,
    which: usize,
    zs: &[f64],
    n_curves: usize,
    filter_localized: bool,
) -> Result<Vec<Crossing>> {
    let tops: Vec<Vec<f64>> = zs
        .par_iter()
        .map(|&z| scanner.top_eigs(which, z, n_curves))
        .collect::<Result<_>>()?;
    let mut found = Vec::new();
    for k in 0..n_curves {
        for i in 1..zs.len() {
            let fa = tops[i - 1][k] - 1.0;
            let fb = tops[i][k] - 1.0;
            let bracketed = (fa <= 0.0 && fb > 0.0) || (fa >= 0.0 && fb < 0.0);
            if !bracketed || fa == fb {
                continue;
            }
            let eval = |z: f64| scanner.top_eigs(which, z, n_curves).map(|t| t[k] - 1.0);
            let (z_star, f_star, _) = false_position(eval, zs[i - 1], fa, zs[i], fb)?;
            if f_star.abs() > MU_ACCEPT {
                continue;
            }
            if filter_localized {
                let (_, psi) = scanner.eigvec_near_one(which, z_star)?;
                let max_mass = psi.iter().map(|v| v * v).fold(0.0, f64::max);
                if max_mass > SINGLE_NODE_MASS {
                    continue;
                }
            }
            found.push(Crossing { z: z_star, mu: 1.0 + f_star, sector: scanner.sector(which) });
        }
    }
    Ok(found)
}

/// Illinois-damped false position on a bracketed root of `g`.
///
/// Returns the best iterate, its `g` value, and the full evaluation trace
/// `(z, g(z))` including the endpoints.  Stops when `|g| <= MU_REFINE` or the
/// bracket width drops below [`tol::ROOT_REL`] relative.
fn false_position(
    mut g: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
) -> Result<(f64, f64, Vec<(f64, f64)>)> {
    debug_assert!(fa * fb <= 0.0);
    let mut trace = vec![(a, fa), (b, fb)];
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for _ in 0..FALSE_POSITION_MAX {
        let denom = fb - fa;
        let mut c = if denom.abs() > f64::MIN_POSITIVE {
            (a * fb - b * fa) / denom
        } else {
            0.5 * (a + b)
        };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if !(c > lo && c < hi) {
            c = 0.5 * (a + b);
        }
        let fc = g(c)?;
        trace.push((c, fc));
        if fc.abs() < best.1.abs() {
            best = (c, fc);
        }
        if fc.abs() <= MU_REFINE {
            return Ok((c, fc, trace));
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
        } else {
            // The retained endpoint stalls: halve its weight (Illinois).
            fa *= 0.5;
        }
        b = c;
        fb = fc;
        if (b - a).abs() <= tol::ROOT_REL * (1.0 + c.abs()) {
            break;
        }
    }
    Ok((best.0, best.1, trace))
}

/// Unit eigenvector for the eigenvalue nearest `target`.
///
/// Dense two-stage symmetric eigensolve up to [`EIGVEC_DENSE_CAP`]; above
/// that, a fixed-size Lanczos pass with stored Krylov basis and full
/// reorthogonalization, returning the Ritz pair nearest `target`.  The start
/// vector is drawn from a fixed-seed generator, so results are deterministic.
fn ritz_vector_near(m: &SymMatrix, target: f64) -> (f64, Vec<f64>) {
    ritz_vector_near_capped(m, target, EIGVEC_DENSE_CAP)
}

fn ritz_vector_near_capped(m: &SymMatrix, target: f64, dense_cap: usize) -> (f64, Vec<f64>) {
    let dim = m.n();
    assert!(dim > 0, "eigenvector of an empty operator");
    if dim <= dense_cap {
        let (vals, vecs) = linalg::sym_eigen(m);
        let mut pick = 0;
        for (i, &v) in vals.iter().enumerate() {
            if (v - target).abs() < (vals[pick] - target).abs() {
                pick = i;
            }
        }
        let v: Vec<f64> = (0..dim).map(|j| vecs[j * dim + pick]).collect();
        return (vals[pick], normalized(v));
    }

    let steps = RITZ_STEPS.min(dim);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta = Vec::with_capacity(steps);
    let mut state = 0x5eed_ba5e_0000_0001u64;
    let mut v: Vec<f64> = (0..dim).map(|_| linalg::splitmix_unit(&mut state)).collect();
    v = normalized(v);
    let mut w = vec![0.0; dim];
    for step in 0..steps {
        m.matvec(&v, &mut w);
        let a: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        alpha.push(a);
        basis.push(v.clone());
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= a * vi;
        }
        if let Some(prev) = step.checked_sub(1) {
            let bprev: f64 = beta[prev];
            for (wi, ui) in w.iter_mut().zip(&basis[prev]) {
                *wi -= bprev * ui;
            }
        }
        // Full reorthogonalization keeps the Ritz basis numerically
        // orthogonal over hundreds of steps.
        for u in &basis {
            let d: f64 = u.iter().zip(&w).map(|(x, y)| x * y).sum();
            for (wi, ui) in w.iter_mut().zip(u) {
                *wi -= d * ui;
            }
        }
        let nb: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nb < 1e-13 || step + 1 == steps {
            break;
        }
        beta.push(nb);
        v = w.iter().map(|x| x / nb).collect();
    }
    let kdim = alpha.len();
    let tri = SymMatrix::from_fn(kdim, |i, j| {
        if i == j {
            alpha[i]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let (vals, vecs) = linalg::sym_eigen(&tri);
    let mut pick = 0;
    for (i, &val) in vals.iter().enumerate() {
        if (val - target).abs() < (vals[pick] - target).abs() {
            pick = i;
        }
    }
    let mut y = vec![0.0; dim];
    for (j, u) in basis.iter().enumerate() {
        let c = vecs[j * kdim + pick];
        for (yi, ui) in y.iter_mut().zip(u) {
            *yi += c * ui;
        }
    }
    (vals[pick], normalized(y))
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

fn sector_parity(sector: SymmetrySector) -> Parity {
    match sector {
        SymmetrySector::Odd
        | SymmetrySector::Odd1
        | SymmetrySector::Odd2
        | SymmetrySector::Odd3
        | SymmetrySector::Odd123 => Parity::Odd,
        SymmetrySector::Even
        | SymmetrySector::EvenS2
        | SymmetrySector::EvenA2
        | SymmetrySector::EvenPerp => Parity::Even,
        SymmetrySector::Full => Parity::NotApplicable,
    }
}

/// Merges refined crossings that lie within [`tol::CLUSTER`] of each other
/// into degenerate groups and finalizes each group into a [`BoundState`].
///
/// The representative energy is the member with the smallest `|mu - 1|` (not
/// the mean: the residual certificate is evaluated at the representative, and
/// shifting `z` by even the cluster width would already dominate it).  The
/// multiplicity is re-counted at the representative across *all* scanned
/// sectors, so exact degeneracies split across sectors (the `EvenA2` /
/// `EvenPerp` pair) are reported whole.
fn finalize_crossings(
    scanner: &SectorScanner,
    crossings: Vec<Crossing>,
    location: Region,
    fallback: bool,
) -> Result<Vec<BoundState>> {
    let mut sorted = crossings;
    sorted.sort_by(|a, b| a.z.total_cmp(&b.z));
    let mut states = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end].z - sorted[end - 1].z <= tol::CLUSTER {
            end += 1;
        }
        let group = &sorted[start..end];
        let rep = group
            .iter()
            .min_by(|a, b| (a.mu - 1.0).abs().total_cmp(&(b.mu - 1.0).abs()))
            .expect("cluster is nonempty");

        let mut multiplicity = 0;
        let mut tags = Vec::new();
        let curves = if scanner.bases.len() == 1 { CURVES_GENERAL } else { CURVES_SYMMETRIC };
        for which in 0..scanner.bases.len() {
            let hits = scanner.crossing_count(which, rep.z, curves)?;
            if hits > 0 {
                tags.push(scanner.sector(which));
                multiplicity += hits;
            }
        }
        if multiplicity == 0 {
            // The representative drifted outside the match band between
            // refinement and recount; count at least the refined crossing.
            multiplicity = group.len();
            tags = group.iter().map(|c| c.sector).collect();
            tags.dedup();
        }

        let parity = classify_parity(&tags);
        let best_sector = scanner
            .bases
            .iter()
            .position(|(s, _)| *s == rep.sector)
            .expect("crossing sector is scanned");
        let (_, psi) = scanner.eigvec_near_one(best_sector, rep.z)?;
        let psi_fn = GridFunction::new(scanner.grid.clone(), psi)?;
        let residual = eigenfunction_residual(scanner.params, rep.z, &psi_fn, scanner.method)?;

        states.push(BoundState {
            z: rep.z,
            multiplicity,
            parity,
            location,
            residual,
            sector_tags: tags,
            from_fallback_scan: fallback,
        });
        start = end;
    }
    Ok(states)
}

fn classify_parity(tags: &[SymmetrySector]) -> Parity {
    let mut saw_odd = false;
    let mut saw_even = false;
    let mut saw_full = false;
    for &t in tags {
        match sector_parity(t) {
            Parity::Odd => saw_odd = true,
            Parity::Even => saw_even = true,
            _ => saw_full = true,
        }
    }
    match (saw_odd, saw_even, saw_full) {
        (true, false, false) => Parity::Odd,
        (false, true, false) => Parity::Even,
        (false, false, true) | (false, false, false) => Parity::NotApplicable,
        _ => Parity::Mixed,
    }
}

// ---------------------------------------------------------------------------
// Below-band solver
// ---------------------------------------------------------------------------

/// Locates all discrete eigenvalues below both essential-spectrum bands.
///
/// At `K = 0` the grid must be negation-closed (offset `0` or `1/2`); the
/// unique odd crossing is found by monotone false-position iteration on the
/// top `Odd1` eigenvalue, its triple multiplicity is assembled from the three
/// axis sectors, and the even and triply-odd sectors are swept to confirm no
/// further crossings (none exist in the regime covered by the theory; any
/// found are reported, not suppressed).  At general `K` the top six curves of
/// the constraint-projected full operator are scanned over an edge-refined
/// mesh.
///
/// An empty result is an answer, not an error: it states that no eigenvalue
/// curve crossed one in the searched range `[E_min(K) - 2 lambda - 1,
/// band edge - 1e-6]`, which covers the whole admissible region since the
/// potential has norm at most `2 lambda`.
///
/// # Errors
///
/// `InvalidArgument` for a grid that cannot carry the symmetry decomposition
/// at `K = 0`; `ResourceLimit` for general-`K` grids above the dense cap;
/// numerical errors from the kernel assembly propagate.
pub fn solve_below(params: &ModelParams, grid: &TorusGrid) -> Result<Vec<BoundState>> {
    if params.lambda == 0.0 {
        return Ok(Vec::new());
    }
    let bands = two_body::essential_spectrum(params);
    let edge = bands.two_particle.0.min(bands.three_particle.0);
    let probe = edge - EDGE_STANDOFF;
    // `||V1 + V2|| <= 2 lambda`, so the spectrum is contained above this.
    let floor = bands.three_particle.0 - 2.0 * params.lambda - 1.0;
    if params.is_k_zero() {
        solve_below_symmetric(params, grid, floor, probe)
    } else {
        solve_below_general(params, grid, floor, probe)
    }
}

fn solve_below_symmetric(
    params: &ModelParams,
    grid: &TorusGrid,
    floor: f64,
    probe: f64,
) -> Result<Vec<BoundState>> {
    let scanner = SectorScanner::new(
        params,
        grid,
        DeltaMethod::Bessel,
        &[
            SymmetrySector::Odd1,
            SymmetrySector::Odd2,
            SymmetrySector::Odd3,
            SymmetrySector::Odd123,
            SymmetrySector::Even,
        ],
    )?;
    let mut crossings = Vec::new();
    let mut fallback = false;

    let top1 = |z: f64| scanner.top_eigs(0, z, 1).map(|t| t[0] - 1.0);
    let f_probe = top1(probe)?;
    if f_probe > 0.0 {
        let f_floor = top1(floor)?;
        if f_floor >= 0.0 {
            return Err(Error::IllConditioned(format!(
                "odd Birman-Schwinger eigenvalue still at least one at z = {floor:.6}, \
                 below the variational floor; the discretization cannot be trusted"
            )));
        }
        let (z_star, f_star, trace) = false_position(top1, floor, f_floor, probe, f_probe)?;
        let mut sorted_trace = trace;
        sorted_trace.sort_by(|a, b| a.0.total_cmp(&b.0));
        let monotone = sorted_trace.windows(2).all(|w| w[1].1 >= w[0].1 - TRACE_SLACK);
        if monotone && f_star.abs() <= MU_ACCEPT {
            crossings.push(Crossing {
                z: z_star,
                mu: 1.0 + f_star,
                sector: SymmetrySector::Odd1,
            });
            // The bracket logic finds the top-curve root; sweep the next
            // curves for additional (deeper) odd states.
            let mesh = edge_clustered_mesh(floor, probe, CONFIRM_MESH_POINTS);
            for c in scan_sector_crossings(&scanner, 0, &mesh, 3, false)? {
                if (c.z - z_star).abs() > tol::CLUSTER {
                    crossings.push(c);
                }
            }
        } else {
            // Monotone bracketing is a theorem about the principal part plus
            // a small residual; if the trace disagrees, distrust it and
            // rescan the whole range densely.
            fallback = true;
            let mesh = edge_clustered_mesh(floor, probe, FALLBACK_MESH_POINTS);
            crossings.extend(scan_sector_crossings(&scanner, 0, &mesh, CURVES_SYMMETRIC, false)?);
        }
    }

    // Confirmation sweeps: even and triply-odd curves stay on their sign-law
    // side of one below the band; any crossing found here is reported.
    let mesh = edge_clustered_mesh(floor, probe, CONFIRM_MESH_POINTS);
    for which in [3usize, 4usize] {
        crossings.extend(scan_sector_crossings(&scanner, which, &mesh, 2, false)?);
    }

    finalize_crossings(&scanner, crossings, Region::Below, fallback)
}

fn solve_below_general(
    params: &ModelParams,
    grid: &TorusGrid,
    floor: f64,
    probe: f64,
) -> Result<Vec<BoundState>> {
    let scanner = SectorScanner::new(params, grid, DeltaMethod::Bessel, &[SymmetrySector::Full])?;
    let mesh = edge_clustered_mesh(floor, probe, BELOW_MESH_POINTS);
    let crossings = scan_sector_crossings(&scanner, 0, &mesh, CURVES_GENERAL, false)?;
    finalize_crossings(&scanner, crossings, Region::Below, false)
}

// ---------------------------------------------------------------------------
// Gap solver
// ---------------------------------------------------------------------------

/// Locates discrete eigenvalues inside the band gap, within the window
/// `(tau_max + 1e-6, min(tau_max + T_lambda, E_min(K) - 1e-6))`.
///
/// At `K = 0` the three even sectors are swept: `EvenS2` carries the simple
/// crossing and the `EvenA2`/`EvenPerp` pair carries the exactly doubly
/// degenerate one (two copies of the same permutation representation).  The
/// curves are not monotone, so every sign change over a 400-point mesh is
/// refined individually and all crossings are reported; completeness beyond
/// mesh resolution is not claimed.  At general `K` the projected full
/// operator's top six curves are swept instead.
///
/// Offset-`1/2` grids are strongly preferred here: an offset-`0` grid
/// contains the corner momentum where the two-particle branch attains
/// `tau_max`, and near the lower window edge the determinant weight at that
/// node grows without bound.  Crossings whose eigenvector concentrates on a
/// single node are filtered as artifacts of exactly this effect.
///
/// # Errors
///
/// `DomainError` when the essential spectrum has no gap; grid and size errors
/// as in [`solve_below`].  An empty window (gap narrower than the standoffs)
/// yields an empty list.
pub fn solve_gap(
    params: &ModelParams,
    window: GapWindow,
    grid: &TorusGrid,
) -> Result<Vec<BoundState>> {
    let bands = two_body::essential_spectrum(params);
    let Some((tau_max, e_min)) = bands.gap else {
        return Err(Error::DomainError(format!(
            "the essential spectrum has no gap at gamma = {}, lambda = {}: the two-particle \
             band does not detach from the three-particle band",
            params.gamma, params.lambda
        )));
    };
    let lo = tau_max + EDGE_STANDOFF;
    let hi = (tau_max + window.t_lambda(params.lambda)).min(e_min - EDGE_STANDOFF);
    if hi <= lo {
        return Ok(Vec::new());
    }
    let zs = linspace(lo, hi, GAP_MESH_POINTS);
    let (scanner, n_curves) = if params.is_k_zero() {
        (
            SectorScanner::new(
                params,
                grid,
                DeltaMethod::Bessel,
                &[
                    SymmetrySector::EvenS2,
                    SymmetrySector::EvenA2,
                    SymmetrySector::EvenPerp,
                ],
            )?,
            CURVES_SYMMETRIC,
        )
    } else {
        (
            SectorScanner::new(params, grid, DeltaMethod::Bessel, &[SymmetrySector::Full])?,
            CURVES_GENERAL,
        )
    };
    let mut crossings = Vec::new();
    for which in 0..scanner.bases.len() {
        crossings.extend(scan_sector_crossings(&scanner, which, &zs, n_curves, true)?);
    }
    finalize_crossings(&scanner, crossings, Region::Gap, false)
}

// ---------------------------------------------------------------------------
// Eigenfunction reconstruction and residual
// ---------------------------------------------------------------------------

/// Rebuilds the antisymmetric pair function from a Birman-Schwinger
/// eigenvector and certifies it against the discretized Hamiltonian.
///
/// Given a unit eigenvector `psi` of the projected kernel with eigenvalue
/// within `1e-8` of one, sets `phi = psi / sqrt|Delta|` and returns the pair
/// table `f[p * n^3 + q] = (phi(q) - phi(p)) / (E(p, q) - z)` together with
/// the relative residual of `(H_disc - z) f`, where `H_disc` is
/// multiplication by `E` minus `lambda` times the two quadrature potentials
/// on the grid.  `f` is antisymmetric by construction, exactly.
///
/// `method` must match the determinant convention of the matrix `psi` came
/// from: `Bessel` for production operators, `Grid(n)` for the discretization
/// that is exactly paired with the dense oracle.
///
/// # Errors
///
/// `InvalidInput` when `psi` is not unit length, violates the zero-mean
/// constraint `sum psi / sqrt|Delta| = 0` beyond `1e-8`, or reconstructs to
/// zero; `ResourceLimit` when the `n^6` table would exceed the cap (use
/// [`eigenfunction_residual`], which streams, for large grids); weight
/// errors propagate.
pub fn reconstruct_eigenfunction(
    params: &ModelParams,
    z: f64,
    psi: &GridFunction,
    method: DeltaMethod,
) -> Result<(Vec<f64>, f64)> {
    if psi.grid.len() > RECONSTRUCT_NODE_CAP {
        return Err(Error::ResourceLimit(format!(
            "pair-function table needs {}^2 doubles; grids above {} nodes only support \
             the streaming residual",
            psi.grid.len(),
            RECONSTRUCT_NODE_CAP
        )));
    }
    let (f, residual) = residual_core(params, z, psi, method, true)?;
    Ok((f.expect("table requested"), residual))
}

/// Relative residual `||(H_disc - z) f|| / ||f||` of the pair function
/// reconstructed from `psi`, without materializing `f`.
///
/// The residual collapses to grid means of one function: for
/// `f(p, q) = (phi(q) - phi(p)) / (E(p, q) - z)`,
///
/// ```text
/// ((H_disc - z) f)(p, q) = g(q) - g(p),
/// g(q) = phi(q) * Delta_grid(q, z) + lambda * mean_p phi(p) / (E(p, q) - z),
/// ```
///
/// where `Delta_grid` is the determinant with the grid's own quadrature, so
/// `||(H - z) f||^2 = 2 mean(g^2) - 2 mean(g)^2` in one `O(n^6)` sweep.  For
/// an exact eigenvector the two terms of `g` cancel node by node.
///
/// # Errors
///
/// As [`reconstruct_eigenfunction`], minus the size cap.
pub fn eigenfunction_residual(
    params: &ModelParams,
    z: f64,
    psi: &GridFunction,
    method: DeltaMethod,
) -> Result<f64> {
    let (_, residual) = residual_core(params, z, psi, method, false)?;
    Ok(residual)
}

fn residual_core(
    params: &ModelParams,
    z: f64,
    psi: &GridFunction,
    method: DeltaMethod,
    want_table: bool,
) -> Result<(Option<Vec<f64>>, f64)> {
    let grid = &psi.grid;
    let len = grid.len();
    let norm: f64 = psi.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > PSI_TOL {
        return Err(Error::InvalidInput(format!(
            "eigenvector must be unit length, got norm {norm:.12}"
        )));
    }
    let (weights, _region) = bs::delta_weights(params, z, grid, method)?;
    let wnorm: f64 = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let constraint: f64 =
        psi.values.iter().zip(&weights).map(|(p, w)| p * w).sum::<f64>() / wnorm;
    if constraint.abs() > PSI_TOL {
        return Err(Error::InvalidInput(format!(
            "eigenvector violates the zero-mean constraint: |<psi, phi_0>| = {:.3e} > {PSI_TOL:.0e}",
            constraint.abs()
        )));
    }

    let phi: Vec<f64> = psi.values.iter().zip(&weights).map(|(p, w)| p * w).collect();
    let energy = bs::EnergyTables::new(params, grid);
    let lambda = params.lambda;
    let nf = len as f64;
    let mut table = if want_table { Some(vec![0.0; len * len]) } else { None };
    let mut g = vec![0.0; len];
    let mut f2_sum = 0.0;
    for q in 0..len {
        let mut resolvent_mean = 0.0;
        let mut smeared = 0.0;
        for p in 0..len {
            let e = energy.pair_energy(p, q) - z;
            let fv = (phi[q] - phi[p]) / e;
            resolvent_mean += 1.0 / e;
            smeared += phi[p] / e;
            f2_sum += fv * fv;
            if let Some(t) = table.as_mut() {
                t[p * len + q] = fv;
            }
        }
        // 1 - lambda * mean(1/(E - z)) is the grid-quadrature determinant.
        g[q] = phi[q] * (1.0 - lambda * resolvent_mean / nf) + lambda * smeared / nf;
    }
    let f_norm2 = f2_sum / (nf * nf);
    if f_norm2 <= 0.0 {
        return Err(Error::InvalidInput(
            "eigenvector reconstructs to the zero pair function".into(),
        ));
    }
    let g_mean = g.iter().sum::<f64>() / nf;
    let g_sq_mean = g.iter().map(|v| v * v).sum::<f64>() / nf;
    let hf_norm2 = (2.0 * (g_sq_mean - g_mean * g_mean)).max(0.0);
    Ok((table, (hf_norm2 / f_norm2).sqrt()))
}

// ---------------------------------------------------------------------------
// Critical mass ratios
// ---------------------------------------------------------------------------

/// Critical mass ratios at total quasi-momentum `k`.
///
/// At `k = 0` the thresholds have closed quadrature forms: the three
/// below-band curves coincide, giving
/// `gamma1 = gamma1_tilde = (J_000 - J_200)^-1 * 2` in terms of Watson-type
/// integrals, and the gap constants come from the `alpha = 0` values of the
/// even limit curves, `gamma2 = 1/e_3(0)` (a bound: the supremum over `alpha`
/// sits on the boundary) and `gamma2_tilde = 1/e_1(0)`.  At general `k` the
/// scanned route [`critical_gammas_scanned`] is used.
///
/// # Errors
///
/// Quadrature failures propagate; the inputs themselves are unrestricted.
pub fn critical_gammas(k: [f64; 3]) -> Result<CriticalGammas> {
    if k == [0.0, 0.0, 0.0] {
        let j000 = j_moment([0, 0, 0], 0.0)?;
        let j200 = j_moment([2, 0, 0], 0.0)?;
        let inv_gamma1 = 0.5 * (j000 - j200);
        let (e1, e3, _beta) = bs::limit_funcs(0.0)?;
        return Ok(CriticalGammas {
            gamma1: 1.0 / inv_gamma1,
            gamma1_tilde: 1.0 / inv_gamma1,
            gamma2: 1.0 / e3,
            gamma2_flag: Gamma2Flag::LowerBoundFromSup,
            gamma2_tilde: 1.0 / e1,
            k,
        });
    }
    critical_gammas_scanned(k)
}

/// Critical mass ratios from the limit-operator `alpha` scan, at any `k`.
///
/// Both branches of the six-dimensional limit operator are scanned over
/// `alpha` and the reciprocals of the sorted-curve suprema give the
/// constants: the largest curve's supremum bounds where states *cannot*
/// exist, the third largest where they *must*.  The gap flag is `Exact` only
/// when the top gap curve attains its supremum strictly inside the scanned
/// interval; at `k = 0` it sits at `alpha = 0` and the flag stays
/// `LowerBoundFromSup`, matching the closed-form route.
///
/// # Errors
///
/// Quadrature failures propagate.
pub fn critical_gammas_scanned(k: [f64; 3]) -> Result<CriticalGammas> {
    let below = bs::limit_curve_sup(k, Region::Below)?;
    let gap = bs::limit_curve_sup(k, Region::Gap)?;
    for (branch, scan) in [("below", &below), ("gap", &gap)] {
        if !(scan.sup[2] > 0.0) {
            return Err(Error::IllConditioned(format!(
                "limit-operator {branch} curves are not all positive at K = \
                 [{:.4}, {:.4}, {:.4}]; cannot invert suprema",
                k[0], k[1], k[2]
            )));
        }
    }
    let alpha_lo = gap.alphas[1];
    let alpha_hi = *gap.alphas.last().expect("scan is nonempty");
    let interior = gap.alpha_star[0] > 1.5 * alpha_lo && gap.alpha_star[0] < 0.75 * alpha_hi;
    Ok(CriticalGammas {
        gamma1: 1.0 / below.sup[0],
        gamma1_tilde: 1.0 / below.sup[2],
        gamma2: 1.0 / gap.sup[0],
        gamma2_flag: if interior { Gamma2Flag::Exact } else { Gamma2Flag::LowerBoundFromSup },
        gamma2_tilde: 1.0 / gap.sup[2],
        k,
    })
}

// ---------------------------------------------------------------------------
// Phase-point aggregation
// ---------------------------------------------------------------------------

/// Assembles bands and both bound-state lists at one parameter point.
///
/// The below-band solve runs on the grid as given.  The gap solve, when a
/// gap exists, runs on the offset-`1/2` grid of the same size whenever the
/// caller passed an offset-`0` grid at `K = 0`: the offset-`0` grid samples
/// the corner momentum where the two-particle branch attains its maximum,
/// and the determinant weight at that node diverges at the lower edge of the
/// gap window (see [`solve_gap`]).  The switch is deterministic and recorded
/// here rather than sprung on callers of the lower-level solvers.
///
/// # Errors
///
/// Component errors propagate, except that a missing gap yields an empty gap
/// list instead of the `DomainError` that a direct [`solve_gap`] call would
/// produce.
pub fn phase_point(
    params: &ModelParams,
    window: GapWindow,
    grid: &TorusGrid,
) -> Result<PhaseReport> {
    let started = Instant::now();
    let bands = two_body::essential_spectrum(params);
    let below = solve_below(params, grid)?;
    let gap_states = if bands.gap.is_some() && params.lambda > 0.0 {
        if params.is_k_zero() && grid.offset() == 0.0 {
            let shifted = make_grid(grid.n(), 0.5)?;
            solve_gap(params, window, &shifted)?
        } else {
            solve_gap(params, window, grid)?
        }
    } else {
        Vec::new()
    };
    Ok(PhaseReport {
        params: *params,
        bands,
        below,
        gap_states,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}
