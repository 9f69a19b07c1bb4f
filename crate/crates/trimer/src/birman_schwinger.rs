//! The Birman-Schwinger operator of the trimer fiber: Nystrom matrices,
//! symmetry decomposition, principal parts, and the weak-coupling limit
//! operator.
//!
//! For `z` outside the essential spectrum the Birman-Schwinger principle
//! trades the eigenvalue problem for the fiber Hamiltonian against a compact
//! self-adjoint integral operator `B(z, lambda)` on `L^2(T^3)`:
//! `z` is an eigenvalue of the fiber Hamiltonian exactly when `1` is an
//! eigenvalue of `B(z, lambda)` restricted to the constraint space `H_Delta`,
//! with equal multiplicities.  The kernel is
//!
//! ```text
//! A(p, q) = -(lambda / (2 pi)^3) * sign(Delta) /
//!           ( sqrt|Delta(p, z)| * (E(p, q) - z) * sqrt|Delta(q, z)| )
//! ```
//!
//! where `Delta` is the two-body Fredholm determinant of [`crate::two_body`]
//! and `E(p, q)` the three-particle kinetic energy.  `Delta(., z)` has one
//! sign throughout each spectral gap: positive below the two-particle branch
//! (*below* region), negative between the branch and the three-particle band
//! (*gap* region).  The constraint space
//! `H_Delta = { psi : integral psi / sqrt|Delta| = 0 }` encodes the fermionic
//! antisymmetry; the projection onto it is the rank-one deflation by
//! `phi_0 = c_0 / sqrt|Delta|`.
//!
//! # Symmetry decomposition at `K = 0`
//!
//! At zero total quasi-momentum the kernel commutes with the hyperoctahedral
//! group (coordinate permutations and sign flips applied to `p` and `q`
//! simultaneously).  The decomposition used here:
//!
//! * total parity splits `L^2 = L^{2,e} + L^{2,o}`; below the band the even
//!   restriction is negative semidefinite and the odd one positive
//!   semidefinite, and in the gap the signs swap;
//! * the odd space splits by per-coordinate parity into `H_1 + H_2 + H_3 +
//!   H_123` (odd in exactly one coordinate, or in all three), with `H_1, H_2,
//!   H_3` mutually unitarily equivalent;
//! * the even space splits into `s_2` (invariant under all coordinate
//!   permutations), `a_2` (antisymmetric under swapping the second and third
//!   coordinates), and the orthogonal complement `perp` of both.
//!
//! All sector bases are built from node orbits of the symmetry group, so the
//! block structure is exact: off-sector couplings vanish to rounding.
//!
//! # Principal parts and residual bounds
//!
//! At strong coupling `B` splits into an explicit finite-rank principal part
//! and a residual of norm `O(1/lambda)`.  Below the band the odd principal
//! part is rank one on each `H_alpha` with the closed-form eigenvalue
//! [`principal_odd_eig`]; in the gap the projected even principal part has
//! rank three with eigenvalues [`principal_even_eigs`].  The residual norms
//! admit the closed bounds of [`residual_bounds`], built from the Watson
//! constant.
//!
//! # Weak-coupling limit operator
//!
//! As `lambda` grows (with `z` tracking the relevant band edge) the scaled
//! principal part converges to a rank-six operator whose action is spanned by
//! mean-deflated cosine and sine profiles per axis.  [`limit_matrix_general_k`]
//! assembles its 6x6 matrix from lattice moments with weight
//! `1 / (w(p) + alpha)` — `w = eps(p)` below the band, `w = eps(pi_bar - p)`
//! in the gap — and [`limit_curve_sup`] scans its positive eigenvalue curves
//! over `alpha`, which yields the critical mass ratios.

use crate::dispersion::{gamma_hat, ModelParams};
use crate::linalg::{cholesky_lower, sym_eigenvalues, SymMatrix};
use crate::special::{ive, j_moment, log_panel_rule, watson_w};
use crate::tol;
use crate::torus_grid::TorusGrid;
use crate::two_body::{self, DeltaMethod, FiberCache};
use crate::{Error, Result};
use std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Module tolerances and guards
// ---------------------------------------------------------------------------

/// Largest matrix dimension assembled densely (`dim^2` doubles are stored;
/// 4100^2 is about 135 MB).  Larger requests must go through sector
/// restriction on a coarser grid.
pub(crate) const MAX_OPERATOR_DIM: usize = 4100;

/// Norm of the sector-restricted constraint vector above which the rank-one
/// deflation is applied; below it the sector is orthogonal to the constraint
/// direction and projection is a no-op.  On symmetry-closed grids the norm is
/// `1` or `0` to rounding, so any mid-range threshold works.
const PROJECTION_NOOP: f64 = 0.5;

/// Pivot floor for the greedy orthonormal completion of the even `perp`
/// sector (squared residual norms are rational and bounded well away from
/// zero when the completion has not yet reached its known rank).
const PERP_PIVOT_FLOOR: f64 = 1e-12;

/// Truncation horizon for the `sin^2 p_1 / eps(p)^2` lattice integral; the
/// integrand decays like `t^(-3/2)`, and the explicit two-term tail below
/// this horizon contributes with error `O(T^(-5/2)) ~ 1e-16`.
const SIN2_EPS2_HORIZON: f64 = 1e6;

/// Number of logarithmically spaced points (besides `alpha = 0`) in the
/// limit-operator scan over `alpha in [1e-3, 1e3]`.
const ALPHA_SCAN_POINTS: usize = 61;

/// Golden-section iterations refining the scan maximum; 60 steps shrink the
/// bracket by `0.618^60 ~ 3e-13` relative.
const GOLDEN_ITERS: usize = 60;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Which spectral gap the energy `z` lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `z` below the two-particle branch; `Delta(., z) > 0`.
    Below,
    /// `z` between the two-particle branch and the three-particle band;
    /// `Delta(., z) < 0`.
    Gap,
}

impl Region {
    /// Sign of the determinant throughout the region.
    pub(crate) fn delta_sign(self) -> f64 {
        match self {
            Region::Below => 1.0,
            Region::Gap => -1.0,
        }
    }

    /// Lower-case label for error messages and reports.
    pub fn label(self) -> &'static str {
        match self {
            Region::Below => "below",
            Region::Gap => "gap",
        }
    }
}

/// Invariant subspace of the Birman-Schwinger operator at `K = 0`.
///
/// `Full` is the whole node space and needs no symmetry.  All other tags
/// require zero quasi-momentum and a symmetry-closed grid (offset `0`, even
/// `n`).  `Odd1`, `Odd2`, `Odd3` are odd in the named coordinate and even in
/// the other two; `Odd123` is odd in all three; `Odd` is their direct sum and
/// `Even` its orthogonal complement.  The even space splits further into the
/// permutation-symmetric part `EvenS2`, the part antisymmetric under swapping
/// the second and third coordinates `EvenA2`, and the complement `EvenPerp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetrySector {
    /// All nodes, no symmetry assumed.
    Full,
    /// Even total parity, `f(-p) = f(p)`.
    Even,
    /// Odd total parity, `f(-p) = -f(p)`.
    Odd,
    /// Odd in coordinate 1, even in 2 and 3.
    Odd1,
    /// Odd in coordinate 2, even in 1 and 3.
    Odd2,
    /// Odd in coordinate 3, even in 1 and 2.
    Odd3,
    /// Odd in every coordinate.
    Odd123,
    /// Even and invariant under all coordinate permutations.
    EvenS2,
    /// Even and antisymmetric under swapping coordinates 2 and 3.
    EvenA2,
    /// Even, orthogonal to both `EvenS2` and `EvenA2`.
    EvenPerp,
}

impl SymmetrySector {
    /// Stable lower-case label (used in reports and CSV columns).
    pub fn label(self) -> &'static str {
        match self {
            SymmetrySector::Full => "full",
            SymmetrySector::Even => "even",
            SymmetrySector::Odd => "odd",
            SymmetrySector::Odd1 => "odd1",
            SymmetrySector::Odd2 => "odd2",
            SymmetrySector::Odd3 => "odd3",
            SymmetrySector::Odd123 => "odd123",
            SymmetrySector::EvenS2 => "even-s2",
            SymmetrySector::EvenA2 => "even-a2",
            SymmetrySector::EvenPerp => "even-perp",
        }
    }

    /// `true` for every tag except `Full`.
    fn needs_symmetry(self) -> bool {
        !matches!(self, SymmetrySector::Full)
    }
}

/// A Nystrom discretization of the Birman-Schwinger operator (or of one of
/// its sector restrictions).
///
/// `matrix` is symmetric by construction; for `sector = Full` its dimension
/// is the node count, otherwise the sector subspace dimension.  `weights`
/// stores `1 / sqrt|Delta|` per node in flat order and is retained so that
/// the constraint projection and eigenfunction reconstruction reuse exactly
/// the determinant values the matrix was built from.
#[derive(Debug, Clone)]
pub struct KernelOperator {
    /// Quadrature grid the operator is sampled on.
    pub grid: TorusGrid,
    /// Spectral parameter.
    pub z: f64,
    /// Model parameters the kernel was built from.
    pub params: ModelParams,
    /// Invariant subspace the matrix is restricted to.
    pub sector: SymmetrySector,
    /// Region of `z` (fixes the kernel sign).
    pub region: Region,
    /// Dense symmetric matrix over the (sector of the) node space.
    pub matrix: SymMatrix,
    /// Node weights `1 / sqrt|Delta(q_i, z)|` in flat order.
    pub weights: Vec<f64>,
}

/// Closed-form eigenvalues of the principal parts at `K = 0`.
///
/// Below the band only `e_odd` is meaningful (the triple eigenvalue of the
/// odd principal part).  In the gap the projected even principal part has the
/// double eigenvalue `e_even_12` and the simple eigenvalue `e_even_3`, built
/// around the weighted cosine mean `beta_bar`; `e_odd` is then the (negative)
/// odd principal eigenvalue at the same `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalEigs {
    /// Odd principal eigenvalue (multiplicity three).
    pub e_odd: f64,
    /// Double even principal eigenvalue in the gap.
    pub e_even_12: f64,
    /// Simple even principal eigenvalue in the gap.
    pub e_even_3: f64,
    /// Weighted cosine mean `integral cos p_1 / |Delta| / integral 1 / |Delta|`.
    pub beta_bar: f64,
}

// ---------------------------------------------------------------------------
// Determinant weights and region classification
// ---------------------------------------------------------------------------

/// Node weights `1 / sqrt|Delta(q_i, z)|` and the region of `z`, classified
/// from the determinant signs.
///
/// All determinants positive means `z` lies below the two-particle branch,
/// all negative means `z` lies in the gap (the three-particle band is
/// excluded separately because the determinant itself is undefined there).
/// On symmetry-closed grids at `K = 0` the determinant is evaluated once per
/// orbit of the hyperoctahedral group and copied to the orbit members, which
/// makes the weight vector exactly symmetric and saves a factor of up to 48.
///
/// # Errors
///
/// * `IllConditioned` if some `|Delta(q_i, z)|` falls below
///   [`tol::DELTA_FLOOR`], naming the node;
/// * `DomainError` if the signs are mixed (`z` inside the two-particle
///   branch) or `z` is not below the local three-particle band edge.
pub fn delta_weights(
    params: &ModelParams,
    z: f64,
    grid: &TorusGrid,
    method: DeltaMethod,
) -> Result<(Vec<f64>, Region)> {
    let cache = FiberCache::new(params, grid.clone());
    delta_weights_cached(params, z, grid, method, &cache)
}

/// [`delta_weights`] reusing a caller-held fiber cache (for z-sweeps, where
/// rebuilding the per-node Laplace data every step would dominate).
pub(crate) fn delta_weights_cached(
    params: &ModelParams,
    z: f64,
    grid: &TorusGrid,
    method: DeltaMethod,
    cache: &FiberCache,
) -> Result<(Vec<f64>, Region)> {
    let len = grid.len();
    let mut deltas = vec![f64::NAN; len];
    let symmetric = params.is_k_zero() && grid.is_negation_closed();

    let eval = |flat: usize, cache: &FiberCache| -> Result<f64> {
        match method {
            DeltaMethod::Bessel => cache.delta_at(grid.split_index(flat), z),
            DeltaMethod::Grid(m) => two_body::delta(params, grid.node(flat), z, DeltaMethod::Grid(m)),
        }
    };

    if symmetric {
        let neg = mirror_table(grid);
        for flat in 0..len {
            if !deltas[flat].is_nan() {
                continue;
            }
            let d = eval(flat, &cache)?;
            for g in hyperoctahedral_orbit(grid.split_index(flat), &neg) {
                deltas[grid.flat_index(g)] = d;
            }
        }
    } else {
        for (flat, slot) in deltas.iter_mut().enumerate() {
            *slot = eval(flat, &cache)?;
        }
    }

    let mut pos = 0usize;
    let mut neg = 0usize;
    for (flat, &d) in deltas.iter().enumerate() {
        if d.abs() < tol::DELTA_FLOOR {
            let q = grid.node(flat);
            return Err(Error::IllConditioned(format!(
                "determinant vanishes at node {flat} (q = [{:.6}, {:.6}, {:.6}]): |Delta| = {:.3e} < {:.0e}; \
                 z = {z:.12} is too close to a fiber eigenvalue",
                q[0],
                q[1],
                q[2],
                d.abs(),
                tol::DELTA_FLOOR
            )));
        }
        if d > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    if pos > 0 && neg > 0 {
        return Err(Error::DomainError(format!(
            "z = {z:.12} lies inside the two-particle branch: the determinant changes sign \
             on the grid ({pos} positive, {neg} negative nodes)"
        )));
    }
    let region = if pos > 0 { Region::Below } else { Region::Gap };
    let weights = deltas.iter().map(|d| 1.0 / d.abs().sqrt()).collect();
    Ok((weights, region))
}

// ---------------------------------------------------------------------------
// Kernel evaluation tables
// ---------------------------------------------------------------------------

/// Precomputed per-node energy data shared by kernel assembly and
/// eigenfunction reconstruction.
///
/// The convolution part of the three-particle energy is evaluated through
/// the half-shifted phases `u = p - K/2`: `cos(K_c - p_c - q_c) = cu_i cu_j
/// - su_i su_j` with `cu = cos u`, `su = sin u`.  Per-axis trigonometric
/// tables are mirrored across the grid's reflection, so at `K = 0` every
/// pair energy is exactly invariant under the hyperoctahedral node maps and
/// sector block structures hold to rounding.
pub(crate) struct EnergyTables {
    gamma: f64,
    /// `eps(p_i)` per flat node.
    eps: Vec<f64>,
    /// `cos(p_i - K/2)` per flat node and axis.
    cu: Vec<[f64; 3]>,
    /// `sin(p_i - K/2)` per flat node and axis.
    su: Vec<[f64; 3]>,
}

/// Per-axis cosine and sine tables mirrored across the grid reflection so
/// that mirror nodes get bitwise-equal values (sine up to exact sign).
fn mirrored_axis_trig(grid: &TorusGrid) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n();
    let nodes = grid.axis_nodes();
    let mut c = vec![0.0; n];
    let mut s = vec![0.0; n];
    if !grid.is_negation_closed() {
        for j in 0..n {
            c[j] = nodes[j].cos();
            s[j] = nodes[j].sin();
        }
        return (c, s);
    }
    let mut done = vec![false; n];
    for j in 0..n {
        if done[j] {
            continue;
        }
        let r = grid.negate_axis_index(j);
        c[j] = nodes[j].cos();
        s[j] = if r == j {
            // Reflection-fixed node: p = 0 or p = pi, sine exactly zero.
            0.0
        } else {
            nodes[j].sin()
        };
        c[r] = c[j];
        s[r] = -s[j];
        done[j] = true;
        done[r] = true;
    }
    (c, s)
}

impl EnergyTables {
    pub(crate) fn new(params: &ModelParams, grid: &TorusGrid) -> Self {
        let n = grid.n();
        let len = grid.len();
        let (cp, sp) = mirrored_axis_trig(grid);
        // Per-axis half-shifted phases; at K = 0 these reduce exactly to the
        // mirrored tables because cos(K/2) = 1, sin(K/2) = 0.
        let mut cu_axis = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut su_axis = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for c in 0..3 {
            let (ck, sk) = ((params.k[c] / 2.0).cos(), (params.k[c] / 2.0).sin());
            for j in 0..n {
                cu_axis[c][j] = cp[j] * ck + sp[j] * sk;
                su_axis[c][j] = sp[j] * ck - cp[j] * sk;
            }
        }
        let mut eps = vec![0.0; len];
        let mut cu = vec![[0.0; 3]; len];
        let mut su = vec![[0.0; 3]; len];
        for flat in 0..len {
            let ijk = grid.split_index(flat);
            eps[flat] = (1.0 - cp[ijk[0]]) + (1.0 - cp[ijk[1]]) + (1.0 - cp[ijk[2]]);
            for c in 0..3 {
                cu[flat][c] = cu_axis[c][ijk[c]];
                su[flat][c] = su_axis[c][ijk[c]];
            }
        }
        EnergyTables {
            gamma: params.gamma,
            eps,
            cu,
            su,
        }
    }

    /// Three-particle energy `E(p_i, p_j) = eps(p_i) + eps(p_j) + gamma *
    /// eps(K - p_i - p_j)` from the tables.
    #[inline]
    pub(crate) fn pair_energy(&self, i: usize, j: usize) -> f64 {
        let (cui, cuj) = (&self.cu[i], &self.cu[j]);
        let (sui, suj) = (&self.su[i], &self.su[j]);
        let csum = cui[0] * cuj[0] - sui[0] * suj[0] + cui[1] * cuj[1] - sui[1] * suj[1]
            + cui[2] * cuj[2]
            - sui[2] * suj[2];
        self.eps[i] + self.eps[j] + self.gamma * (3.0 - csum)
    }
}

/// Energy tables plus the determinant weights: everything a kernel entry
/// needs.
struct KernelTables {
    energy: EnergyTables,
    z: f64,
    /// Kernel prefactor `-sign(Delta) * lambda / n^3`.
    kfac: f64,
    /// `1 / sqrt|Delta|` per flat node.
    w: Vec<f64>,
}

impl KernelTables {
    fn new(params: &ModelParams, z: f64, grid: &TorusGrid, weights: &[f64], region: Region) -> Self {
        KernelTables {
            energy: EnergyTables::new(params, grid),
            z,
            kfac: -region.delta_sign() * params.lambda / grid.len() as f64,
            w: weights.to_vec(),
        }
    }

    /// One symmetrized kernel entry
    /// `-sign * (lambda / n^3) * w_i * w_j / (E(p_i, p_j) - z)`.
    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.kfac * self.w[i] * self.w[j] / (self.energy.pair_energy(i, j) - self.z)
    }
}

// ---------------------------------------------------------------------------
// Full-space Nystrom matrix
// ---------------------------------------------------------------------------

/// Nystrom matrix of the Birman-Schwinger operator on the full node space,
/// with the determinant evaluated by Laplace--Bessel quadrature.
///
/// Entries are `-sign(Delta) * (lambda / n^3) / (sqrt|Delta_i| (E(p_i, p_j)
/// - z) sqrt|Delta_j|)`; the cell weight `(2 pi / n)^3 / (2 pi)^3 = 1 / n^3`
/// is split symmetrically so the matrix is exactly symmetric and its
/// spectrum approximates the operator's.
///
/// # Errors
///
/// `DomainError` if `z` lies in a band, `IllConditioned` if a determinant
/// vanishes at a node (see [`delta_weights`]), `ResourceLimit` for more than
/// 4100 nodes.
pub fn bs_matrix(params: &ModelParams, z: f64, grid: &TorusGrid) -> Result<KernelOperator> {
    bs_matrix_with(params, z, grid, DeltaMethod::Bessel)
}

/// [`bs_matrix`] with an explicit determinant method.
///
/// `DeltaMethod::Grid(m)` with `m` equal to the grid size makes the matrix
/// the *exact* Birman-Schwinger counterpart of the dense discretized fiber
/// Hamiltonian on the same grid, which is what the oracle certification
/// checks.
///
/// # Errors
///
/// As for [`bs_matrix`].
pub fn bs_matrix_with(
    params: &ModelParams,
    z: f64,
    grid: &TorusGrid,
    method: DeltaMethod,
) -> Result<KernelOperator> {
    let len = grid.len();
    if len > MAX_OPERATOR_DIM {
        return Err(Error::ResourceLimit(format!(
            "full Birman-Schwinger matrix on {len} nodes exceeds the dense cap of \
             {MAX_OPERATOR_DIM}; restrict to a symmetry sector or coarsen the grid"
        )));
    }
    let (weights, region) = delta_weights(params, z, grid, method)?;
    let tables = KernelTables::new(params, z, grid, &weights, region);
    let mut matrix = SymMatrix::zeros(len);
    for i in 0..len {
        for j in 0..=i {
            matrix.set_sym(i, j, tables.entry(i, j));
        }
    }
    Ok(KernelOperator {
        grid: grid.clone(),
        z,
        params: *params,
        sector: SymmetrySector::Full,
        region,
        matrix,
        weights,
    })
}

// ---------------------------------------------------------------------------
// Node orbits of the hyperoctahedral group
// ---------------------------------------------------------------------------

/// The six permutations of three axes.
const PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Per-axis mirror index table of a negation-closed grid.
fn mirror_table(grid: &TorusGrid) -> Vec<usize> {
    (0..grid.n()).map(|j| grid.negate_axis_index(j)).collect()
}

/// Image of a node index under full negation `p -> -p`.
#[inline]
fn negate_idx(ijk: [usize; 3], neg: &[usize]) -> [usize; 3] {
    [neg[ijk[0]], neg[ijk[1]], neg[ijk[2]]]
}

/// Image under an axis permutation: `out[c] = in[perm[c]]`.
#[inline]
fn permute_idx(ijk: [usize; 3], perm: [usize; 3]) -> [usize; 3] {
    [ijk[perm[0]], ijk[perm[1]], ijk[perm[2]]]
}

/// Sorted, deduplicated orbit of a node under the full hyperoctahedral group
/// (48 signed permutations): per-axis reflections in any subset composed
/// with any axis permutation.
fn hyperoctahedral_orbit(ijk: [usize; 3], neg: &[usize]) -> Vec<[usize; 3]> {
    let mut orbit = Vec::with_capacity(48);
    for perm in PERMS {
        let base = permute_idx(ijk, perm);
        for mask in 0..8usize {
            let mut im = base;
            for (c, v) in im.iter_mut().enumerate() {
                if mask & (1 << c) != 0 {
                    *v = neg[*v];
                }
            }
            orbit.push(im);
        }
    }
    orbit.sort_unstable();
    orbit.dedup();
    orbit
}

/// Sorted orbit under permutations and *global* negation only (order 12);
/// the orbit type underlying the even-sector decomposition.
fn perm_negate_orbit(ijk: [usize; 3], neg: &[usize]) -> Vec<[usize; 3]> {
    let mut orbit = Vec::with_capacity(12);
    for perm in PERMS {
        let base = permute_idx(ijk, perm);
        orbit.push(base);
        orbit.push(negate_idx(base, neg));
    }
    orbit.sort_unstable();
    orbit.dedup();
    orbit
}

/// Sorted orbit under per-axis sign flips only (order 8); the orbit type
/// underlying the per-coordinate parity sectors.
fn flip_orbit(ijk: [usize; 3], neg: &[usize]) -> Vec<[usize; 3]> {
    let mut orbit = Vec::with_capacity(8);
    for mask in 0..8usize {
        let mut im = ijk;
        for (c, v) in im.iter_mut().enumerate() {
            if mask & (1 << c) != 0 {
                *v = neg[*v];
            }
        }
        orbit.push(im);
    }
    orbit.sort_unstable();
    orbit.dedup();
    orbit
}

// ---------------------------------------------------------------------------
// Sector bases
// ---------------------------------------------------------------------------

/// An orthonormal basis of one symmetry sector, grouped by support orbit.
///
/// Basis vectors are sparse: each lives on a single node orbit (at most 12
/// nodes for the even family, at most 8 for the parity family).  Vectors on
/// different orbits have disjoint supports, so orthonormality across groups
/// is automatic and sector restriction of a kernel touches one small orbit
/// pair block at a time.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    sector: SymmetrySector,
    /// Flat node indices per support orbit (ascending).
    supports: Vec<Vec<u32>>,
    /// Coefficient rows per support, aligned with `supports[s]`.
    rows: Vec<Vec<Vec<f64>>>,
    /// Global index of the first vector of each support.
    offsets: Vec<usize>,
    dim: usize,
}

impl SectorBasis {
    /// Number of basis vectors (the sector dimension on this grid).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The sector this basis spans.
    pub fn sector(&self) -> SymmetrySector {
        self.sector
    }

    /// Expands sector coefficients into a grid function (flat node values).
    ///
    /// # Panics
    ///
    /// If `coeffs.len() != self.dim()`.
    pub fn lift(&self, coeffs: &[f64], grid_len: usize) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.dim, "coefficient length != sector dimension");
        let mut values = vec![0.0; grid_len];
        for (s, support) in self.supports.iter().enumerate() {
            for (r, row) in self.rows[s].iter().enumerate() {
                let c = coeffs[self.offsets[s] + r];
                if c != 0.0 {
                    for (k, &node) in support.iter().enumerate() {
                        values[node as usize] += c * row[k];
                    }
                }
            }
        }
        values
    }

    /// Projects a grid function onto the sector (returns coefficients).
    pub fn restrict(&self, values: &[f64]) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.dim];
        for (s, support) in self.supports.iter().enumerate() {
            for (r, row) in self.rows[s].iter().enumerate() {
                let mut acc = 0.0;
                for (k, &node) in support.iter().enumerate() {
                    acc += row[k] * values[node as usize];
                }
                coeffs[self.offsets[s] + r] = acc;
            }
        }
        coeffs
    }

    fn finish(sector: SymmetrySector, supports: Vec<Vec<u32>>, rows: Vec<Vec<Vec<f64>>>) -> Self {
        let mut offsets = Vec::with_capacity(supports.len());
        let mut dim = 0;
        for r in &rows {
            offsets.push(dim);
            dim += r.len();
        }
        SectorBasis {
            sector,
            supports,
            rows,
            offsets,
            dim,
        }
    }
}

/// Builds the orthonormal basis of a symmetry sector on a symmetry-closed
/// grid.
///
/// * parity sectors (`Odd*`) use sign-flip orbits with character-symmetrized
///   vectors: the vector odd in axes `S` exists on an orbit exactly when all
///   axes in `S` move freely (no coordinate pinned at `0` or `pi`);
/// * the even family (`Even*`) uses orbits of permutations plus global
///   negation: the normalized orbit indicator spans `s_2`, the sign
///   character of the coordinate swap `2 <-> 3` generates `a_2`, and `perp`
///   completes the local even space by greedy orthonormalization (its rank
///   per orbit is known exactly, so no thresholds enter);
/// * `Full` is the trivial basis of node indicators.
///
/// Vectors are enumerated deterministically (orbits by ascending minimal
/// node).
///
/// # Errors
///
/// `InvalidArgument` if the sector needs symmetry and the grid is not
/// negation-closed.
pub fn sector_basis(grid: &TorusGrid, sector: SymmetrySector) -> Result<SectorBasis> {
    if sector.needs_symmetry() && !grid.is_negation_closed() {
        return Err(Error::InvalidArgument(format!(
            "sector {} needs a negation-closed grid (offset 0 or 1/2); got n = {}, offset = {}",
            sector.label(),
            grid.n(),
            grid.offset()
        )));
    }
    match sector {
        SymmetrySector::Full => {
            let supports = (0..grid.len() as u32).map(|i| vec![i]).collect();
            let rows = (0..grid.len()).map(|_| vec![vec![1.0]]).collect();
            Ok(SectorBasis::finish(sector, supports, rows))
        }
        SymmetrySector::Odd1 => Ok(parity_basis(grid, sector, &[[true, false, false]])),
        SymmetrySector::Odd2 => Ok(parity_basis(grid, sector, &[[false, true, false]])),
        SymmetrySector::Odd3 => Ok(parity_basis(grid, sector, &[[false, false, true]])),
        SymmetrySector::Odd123 => Ok(parity_basis(grid, sector, &[[true, true, true]])),
        SymmetrySector::Odd => Ok(parity_basis(
            grid,
            sector,
            &[
                [true, false, false],
                [false, true, false],
                [false, false, true],
                [true, true, true],
            ],
        )),
        SymmetrySector::Even | SymmetrySector::EvenS2 | SymmetrySector::EvenA2 | SymmetrySector::EvenPerp => {
            Ok(even_family_basis(grid, sector))
        }
    }
}

/// Character-symmetrized vectors over sign-flip orbits; `chis` lists the
/// requested parities (`true` = odd in that axis).
fn parity_basis(grid: &TorusGrid, sector: SymmetrySector, chis: &[[bool; 3]]) -> SectorBasis {
    let neg = mirror_table(grid);
    let mut seen = vec![false; grid.len()];
    let mut supports = Vec::new();
    let mut rows = Vec::new();
    for flat in 0..grid.len() {
        if seen[flat] {
            continue;
        }
        let rep = grid.split_index(flat);
        let orbit = flip_orbit(rep, &neg);
        for m in &orbit {
            seen[grid.flat_index(*m)] = true;
        }
        let free = [
            rep[0] != neg[rep[0]],
            rep[1] != neg[rep[1]],
            rep[2] != neg[rep[2]],
        ];
        let norm = 1.0 / (orbit.len() as f64).sqrt();
        let mut orbit_rows: Vec<Vec<f64>> = Vec::new();
        for chi in chis {
            // The character must be trivial on the stabilizer: every odd
            // axis has to move freely.
            if chi.iter().zip(free).any(|(&odd, fr)| odd && !fr) {
                continue;
            }
            let row = orbit
                .iter()
                .map(|m| {
                    let mut sign = 1.0;
                    for c in 0..3 {
                        if chi[c] && m[c] != rep[c] {
                            sign = -sign;
                        }
                    }
                    sign * norm
                })
                .collect();
            orbit_rows.push(row);
        }
        if !orbit_rows.is_empty() {
            supports.push(orbit.iter().map(|m| grid.flat_index(*m) as u32).collect());
            rows.push(orbit_rows);
        }
    }
    SectorBasis::finish(sector, supports, rows)
}

/// Even-family bases over permutation-negation orbits: `s_2` indicators,
/// `a_2` swap-sign vectors, and the greedy `perp` completion.
fn even_family_basis(grid: &TorusGrid, sector: SymmetrySector) -> SectorBasis {
    let neg = mirror_table(grid);
    let mut seen = vec![false; grid.len()];
    let mut supports = Vec::new();
    let mut rows = Vec::new();
    for flat in 0..grid.len() {
        if seen[flat] {
            continue;
        }
        let rep = grid.split_index(flat);
        let orbit = perm_negate_orbit(rep, &neg);
        for m in &orbit {
            seen[grid.flat_index(*m)] = true;
        }
        let local = even_orbit_rows(&orbit, &neg, sector);
        if !local.is_empty() {
            supports.push(orbit.iter().map(|m| grid.flat_index(*m) as u32).collect());
            rows.push(local);
        }
    }
    SectorBasis::finish(sector, supports, rows)
}

/// Local even-family rows on one permutation-negation orbit, in node
/// coordinates aligned with the sorted orbit.
fn even_orbit_rows(orbit: &[[usize; 3]], neg: &[usize], sector: SymmetrySector) -> Vec<Vec<f64>> {
    let size = orbit.len();
    let pos = |m: &[usize; 3]| orbit.binary_search(m).expect("orbit member");

    // Reflection pairs {y, -y} spanning the local even space.
    let mut pair_of = vec![usize::MAX; size]; // node -> pair id
    let mut pairs: Vec<(usize, Option<usize>)> = Vec::new();
    for (k, m) in orbit.iter().enumerate() {
        if pair_of[k] != usize::MAX {
            continue;
        }
        let mirror = pos(&negate_idx(*m, neg));
        let id = pairs.len();
        pair_of[k] = id;
        pair_of[mirror] = id;
        pairs.push((k, if mirror == k { None } else { Some(mirror) }));
    }
    let d_e = pairs.len();
    let sqrt2 = std::f64::consts::SQRT_2;

    // Pair-coordinate representation: even vectors are expanded over the
    // orthonormal pair vectors u_id = (delta_y + delta_{-y}) / sqrt(2), or
    // delta_y for self-paired nodes.
    let expand = |pair_coords: &[f64]| -> Vec<f64> {
        let mut row = vec![0.0; size];
        for (id, &(a, b)) in pairs.iter().enumerate() {
            match b {
                Some(b) => {
                    row[a] = pair_coords[id] / sqrt2;
                    row[b] = pair_coords[id] / sqrt2;
                }
                None => row[a] = pair_coords[id],
            }
        }
        row
    };

    // s_2: the normalized orbit indicator, in pair coordinates.
    let inv_sqrt_orbit = 1.0 / (size as f64).sqrt();
    let s2: Vec<f64> = pairs
        .iter()
        .map(|&(_, b)| if b.is_some() { sqrt2 * inv_sqrt_orbit } else { inv_sqrt_orbit })
        .collect();

    // a_2: sign character of the swap 2 <-> 3 over its four-element orbits.
    let mut a2: Vec<Vec<f64>> = Vec::new();
    let mut used = vec![false; size];
    for (k, m) in orbit.iter().enumerate() {
        if used[k] {
            continue;
        }
        let swapped = permute_idx(*m, [0, 2, 1]);
        let members = [
            (k, 1.0),
            (pos(&negate_idx(*m, neg)), 1.0),
            (pos(&swapped), -1.0),
            (pos(&negate_idx(swapped, neg)), -1.0),
        ];
        for (idx, _) in members {
            used[idx] = true;
        }
        // The character dies when the swap stabilizes {y, -y}.
        if members[2].0 == members[0].0 || members[2].0 == members[1].0 {
            continue;
        }
        let mut dedup: Vec<(usize, f64)> = Vec::new();
        for (idx, sign) in members {
            if !dedup.iter().any(|&(i, _)| i == idx) {
                dedup.push((idx, sign));
            }
        }
        let norm = 1.0 / (dedup.len() as f64).sqrt();
        let mut coords = vec![0.0; d_e];
        for (idx, sign) in &dedup {
            let id = pair_of[*idx];
            let self_paired = pairs[id].1.is_none();
            // Each listed node contributes its pair vector once; paired
            // nodes appear together (the character is even under negation).
            if pairs[id].0 == *idx {
                coords[id] = sign * norm * if self_paired { 1.0 } else { sqrt2 };
            }
        }
        a2.push(coords);
    }

    // perp: greedy orthonormal completion of known rank.
    let n_perp = d_e - 1 - a2.len();
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(1 + a2.len() + n_perp);
    kept.push(s2.clone());
    kept.extend(a2.iter().cloned());
    let mut perp: Vec<Vec<f64>> = Vec::new();
    let mut candidates: Vec<Vec<f64>> = (0..d_e)
        .map(|i| {
            let mut e = vec![0.0; d_e];
            e[i] = 1.0;
            e
        })
        .collect();
    for _ in 0..n_perp {
        // Orthogonalize every remaining candidate and keep the largest.
        let mut best = (0usize, -1.0f64);
        for (ci, cand) in candidates.iter().enumerate() {
            let mut v = cand.clone();
            for b in &kept {
                let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
            let norm2: f64 = v.iter().map(|x| x * x).sum();
            if norm2 > best.1 {
                best = (ci, norm2);
            }
        }
        assert!(
            best.1 > PERP_PIVOT_FLOOR,
            "even orbit completion lost rank (pivot {:.3e})",
            best.1
        );
        let mut v = candidates[best.0].clone();
        // Two orthogonalization passes for orthonormality to rounding.
        for _ in 0..2 {
            for b in &kept {
                let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        kept.push(v.clone());
        perp.push(v);
        candidates.remove(best.0);
    }

    let selected: Vec<&Vec<f64>> = match sector {
        SymmetrySector::EvenS2 => vec![&s2],
        SymmetrySector::EvenA2 => a2.iter().collect(),
        SymmetrySector::EvenPerp => perp.iter().collect(),
        SymmetrySector::Even => {
            let mut all = vec![&s2];
            all.extend(a2.iter());
            all.extend(perp.iter());
            all
        }
        _ => unreachable!("even family called with {:?}", sector),
    };
    selected.into_iter().map(|coords| expand(coords)).collect()
}

// ---------------------------------------------------------------------------
// Sector restriction
// ---------------------------------------------------------------------------

/// Contracts a kernel against a sector basis, touching one orbit-pair block
/// at a time.
pub(crate) fn assemble_restricted(
    basis: &SectorBasis,
    mut kernel: impl FnMut(u32, u32) -> f64,
) -> SymMatrix {
    let dim = basis.dim;
    let mut m = SymMatrix::zeros(dim);
    let nsup = basis.supports.len();
    let mut block: Vec<f64> = Vec::new();
    let mut tmp: Vec<f64> = Vec::new();
    for s in 0..nsup {
        let sa = &basis.supports[s];
        let na = sa.len();
        for s2 in s..nsup {
            let sb = &basis.supports[s2];
            let nb = sb.len();
            block.resize(na * nb, 0.0);
            for (u, &iu) in sa.iter().enumerate() {
                for (v, &iv) in sb.iter().enumerate() {
                    block[u * nb + v] = kernel(iu, iv);
                }
            }
            tmp.resize(na, 0.0);
            for (bi, rowb) in basis.rows[s2].iter().enumerate() {
                for (u, t) in tmp.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (v, &bv) in rowb.iter().enumerate() {
                        acc += block[u * nb + v] * bv;
                    }
                    *t = acc;
                }
                let gb = basis.offsets[s2] + bi;
                for (ai, rowa) in basis.rows[s].iter().enumerate() {
                    let ga = basis.offsets[s] + ai;
                    if s == s2 && ga > gb {
                        continue;
                    }
                    let val: f64 = rowa.iter().zip(tmp.iter()).map(|(a, t)| a * t).sum();
                    m.set_sym(ga, gb, val);
                }
            }
        }
    }
    m
}

/// Restricts a full-space Birman-Schwinger matrix to a symmetry sector.
///
/// The basis is orbit-symmetrized, so the restriction is an exact block of
/// the full matrix: couplings between different sectors vanish to rounding
/// (about `1e-15` of the matrix scale).
///
/// # Errors
///
/// `Unsupported` for nonzero quasi-momentum, `InvalidArgument` if `op` is
/// not a `Full`-sector operator or the grid is not symmetry-closed.
pub fn sector_restrict(op: &KernelOperator, sector: SymmetrySector) -> Result<KernelOperator> {
    if op.sector != SymmetrySector::Full {
        return Err(Error::InvalidArgument(format!(
            "sector_restrict starts from a full-space operator, got sector {}",
            op.sector.label()
        )));
    }
    if sector == SymmetrySector::Full {
        return Ok(op.clone());
    }
    if !op.params.is_k_zero() {
        return Err(Error::Unsupported(
            "symmetry sectors exist only at zero total quasi-momentum".into(),
        ));
    }
    let basis = sector_basis(&op.grid, sector)?;
    let matrix = assemble_restricted(&basis, |i, j| op.matrix.at(i as usize, j as usize));
    Ok(KernelOperator {
        grid: op.grid.clone(),
        z: op.z,
        params: op.params,
        sector,
        region: op.region,
        matrix,
        weights: op.weights.clone(),
    })
}

/// Assembles the sector restriction directly from kernel entries, without
/// materializing the full matrix.
///
/// This is the work horse for fine grids: the cost is one small kernel block
/// per orbit pair (at most `12 x 12` entries), so the `n = 20` odd sector
/// assembles in under a second while the full matrix would need half a
/// gigabyte.
///
/// # Errors
///
/// As [`bs_matrix`] plus the sector preconditions of [`sector_restrict`];
/// `ResourceLimit` if the sector dimension exceeds the dense cap.
pub fn bs_sector_matrix(
    params: &ModelParams,
    z: f64,
    grid: &TorusGrid,
    sector: SymmetrySector,
    method: DeltaMethod,
) -> Result<KernelOperator> {
    if sector == SymmetrySector::Full {
        return bs_matrix_with(params, z, grid, method);
    }
    if !params.is_k_zero() {
        return Err(Error::Unsupported(
            "symmetry sectors exist only at zero total quasi-momentum".into(),
        ));
    }
    let basis = sector_basis(grid, sector)?;
    if basis.dim() > MAX_OPERATOR_DIM {
        return Err(Error::ResourceLimit(format!(
            "sector {} has dimension {} on this grid, above the dense cap of {MAX_OPERATOR_DIM}",
            sector.label(),
            basis.dim()
        )));
    }
    let (weights, region) = delta_weights(params, z, grid, method)?;
    let tables = KernelTables::new(params, z, grid, &weights, region);
    let matrix = assemble_restricted(&basis, |i, j| tables.entry(i as usize, j as usize));
    Ok(KernelOperator {
        grid: grid.clone(),
        z,
        params: *params,
        sector,
        region,
        matrix,
        weights,
    })
}

// ---------------------------------------------------------------------------
// Constraint projection
// ---------------------------------------------------------------------------

/// Deflates the constraint direction `phi_0 = c_0 / sqrt|Delta|`, returning
/// `P * M * P` with `P = I - phi phi^T` in the operator's own coordinates.
///
/// The odd sectors (and the even `a_2` and `perp` sectors) are orthogonal to
/// `phi_0` by parity or symmetry; for them the restricted constraint vector
/// vanishes and the projection is a no-op.  For `Full`, `Even`, and `EvenS2`
/// the restricted vector has unit norm and one rank-one direction is
/// removed.
pub fn constraint_projection(op: &KernelOperator) -> KernelOperator {
    let mut out = op.clone();
    let norm2: f64 = op.weights.iter().map(|w| w * w).sum();
    let phi_grid: Vec<f64> = op.weights.iter().map(|w| w / norm2.sqrt()).collect();
    let phi = match op.sector {
        SymmetrySector::Full => phi_grid,
        _ => {
            let basis = sector_basis(&op.grid, op.sector).expect("operator carries a valid sector basis");
            basis.restrict(&phi_grid)
        }
    };
    let nrm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm < PROJECTION_NOOP {
        return out;
    }
    let v: Vec<f64> = phi.iter().map(|x| x / nrm).collect();
    let n = out.matrix.n();
    let mut w = vec![0.0; n];
    out.matrix.matvec(&v, &mut w);
    let vmv: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..=i {
            let updated =
                out.matrix.at(i, j) - v[i] * w[j] - w[i] * v[j] + vmv * v[i] * v[j];
            out.matrix.set_sym(i, j, updated);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Principal parts at K = 0
// ---------------------------------------------------------------------------

/// Nystrom matrix of the strong-coupling principal part at `K = 0`.
///
/// * **Below the band** this is the odd principal part: the positive rank-three
///   kernel `lambda gamma / ((2 pi)^3 (gamma_hat - z)^2) * sum_a sin p_a sin
///   q_a / (sqrt(Delta(p)) sqrt(Delta(q)))`; it annihilates even functions.
/// * **In the gap** it is the *projected* even principal part: the analogous
///   cosine kernel with `1 / sqrt|Delta|` weights, deflated by the constraint
///   direction; it annihilates odd functions and has rank three with
///   eigenvalues `(e_even_12, e_even_12, e_even_3)`.
///
/// # Errors
///
/// `Unsupported` for `K != 0`; otherwise as [`bs_matrix`].
pub fn principal_part_matrix(params: &ModelParams, z: f64, grid: &TorusGrid) -> Result<KernelOperator> {
    if !params.is_k_zero() {
        return Err(Error::Unsupported(
            "closed-form principal parts exist only at zero total quasi-momentum".into(),
        ));
    }
    let len = grid.len();
    if len > MAX_OPERATOR_DIM {
        return Err(Error::ResourceLimit(format!(
            "principal-part matrix on {len} nodes exceeds the dense cap of {MAX_OPERATOR_DIM}"
        )));
    }
    let (weights, region) = delta_weights(params, z, grid, DeltaMethod::Bessel)?;
    let ghat = params.gamma_hat();
    let c = params.lambda * params.gamma / (len as f64 * (ghat - z) * (ghat - z));
    let (cp, sp) = mirrored_axis_trig(grid);
    let trig = match region {
        Region::Below => &sp,
        Region::Gap => &cp,
    };
    // Rank-three factors f_a(p_i) = trig(p_{i,a}) * w_i.
    let mut factors = vec![[0.0; 3]; len];
    for (flat, f) in factors.iter_mut().enumerate() {
        let ijk = grid.split_index(flat);
        for a in 0..3 {
            f[a] = trig[ijk[a]] * weights[flat];
        }
    }
    let mut matrix = SymMatrix::zeros(len);
    for i in 0..len {
        for j in 0..=i {
            let dot =
                factors[i][0] * factors[j][0] + factors[i][1] * factors[j][1] + factors[i][2] * factors[j][2];
            matrix.set_sym(i, j, c * dot);
        }
    }
    let mut op = KernelOperator {
        grid: grid.clone(),
        z,
        params: *params,
        sector: SymmetrySector::Full,
        region,
        matrix,
        weights,
    };
    if region == Region::Gap {
        op = constraint_projection(&op);
    }
    Ok(op)
}

/// Closed-form eigenvalue of the odd principal part at `K = 0` (multiplicity
/// three): `e = lambda gamma / ((2 pi)^3 (gamma_hat - z)^2) * integral
/// sin^2 p_1 / Delta(p, z)`.
///
/// The quadrature runs over `grid` with the determinant evaluated by
/// `method`; on the same grid this value equals the top Nystrom eigenvalue
/// of [`principal_part_matrix`] *exactly* (both are the same finite sum), so
/// agreement between the two routes checks only linear algebra, while grid
/// refinement checks the quadrature.  Strictly increasing in `z` with limit
/// `0` as `z -> -infinity`.
///
/// # Errors
///
/// `Unsupported` for `K != 0`; `DomainError` unless `z` classifies as
/// `Below` (the closed form integrates `1 / Delta`, which must be positive).
pub fn principal_odd_eig(
    params: &ModelParams,
    z: f64,
    grid: &TorusGrid,
    method: DeltaMethod,
) -> Result<f64> {
    if !params.is_k_zero() {
        return Err(Error::Unsupported(
            "closed-form principal parts exist only at zero total quasi-momentum".into(),
        ));
    }
    let (weights, region) = delta_weights(params, z, grid, method)?;
    if region != Region::Below {
        return Err(Error::DomainError(format!(
            "odd principal eigenvalue needs z below the two-particle branch, got z = {z:.12} in the gap"
        )));
    }
    let (_, sp) = mirrored_axis_trig(grid);
    let mut acc = 0.0;
    for (flat, w) in weights.iter().enumerate() {
        let s = sp[grid.split_index(flat)[0]];
        acc += s * s * w * w;
    }
    let ghat = params.gamma_hat();
    Ok(params.lambda * params.gamma / ((ghat - z) * (ghat - z)) * acc / grid.len() as f64)
}

/// Closed-form eigenvalues of the projected even principal part in the gap
/// at `K = 0`.
///
/// With `c = lambda gamma / ((2 pi)^3 (gamma_hat - z)^2)` and weights
/// `1 / |Delta|`:
///
/// * `e_even_12 = (c/2) integral (cos p_1 - cos p_2)^2 / |Delta|` (double),
/// * `e_even_3  = (c/3) integral (cos p_1 + cos p_2 + cos p_3 - 3
///   beta_bar)^2 / |Delta|` (simple),
/// * `beta_bar  = integral cos p_1 / |Delta| / integral 1 / |Delta|`,
///
/// all by quadrature on `grid`.  `e_odd` is filled with the odd principal
/// eigenvalue at the same `z`, which is negative in the gap.  The even
/// values are continuous in `z` but *not* monotone, unlike the below-band
/// odd eigenvalue.
///
/// # Errors
///
/// `Unsupported` for `K != 0`; `DomainError` unless `z` classifies as `Gap`.
pub fn principal_even_eigs(params: &ModelParams, z: f64, grid: &TorusGrid) -> Result<PrincipalEigs> {
    if !params.is_k_zero() {
        return Err(Error::Unsupported(
            "closed-form principal parts exist only at zero total quasi-momentum".into(),
        ));
    }
    let (weights, region) = delta_weights(params, z, grid, DeltaMethod::Bessel)?;
    if region != Region::Gap {
        return Err(Error::DomainError(format!(
            "even principal eigenvalues live in the gap; z = {z:.12} classifies as below the branch"
        )));
    }
    let (cp, sp) = mirrored_axis_trig(grid);
    let len = grid.len() as f64;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for (flat, w) in weights.iter().enumerate() {
        let ijk = grid.split_index(flat);
        let w2 = w * w;
        s0 += w2;
        s1 += (cp[ijk[0]] + cp[ijk[1]] + cp[ijk[2]]) / 3.0 * w2;
    }
    let beta_bar = s1 / s0;
    let mut acc12 = 0.0;
    let mut acc3 = 0.0;
    let mut acc_odd = 0.0;
    for (flat, w) in weights.iter().enumerate() {
        let ijk = grid.split_index(flat);
        let w2 = w * w;
        let d12 = cp[ijk[0]] - cp[ijk[1]];
        let d3 = cp[ijk[0]] + cp[ijk[1]] + cp[ijk[2]] - 3.0 * beta_bar;
        acc12 += d12 * d12 * w2;
        acc3 += d3 * d3 * w2;
        acc_odd += sp[ijk[0]] * sp[ijk[0]] * w2;
    }
    let ghat = params.gamma_hat();
    let c = params.lambda * params.gamma / ((ghat - z) * (ghat - z)) / len;
    Ok(PrincipalEigs {
        e_odd: -c * acc_odd,
        e_even_12: c / 2.0 * acc12,
        e_even_3: c / 3.0 * acc3,
        beta_bar,
    })
}

// ---------------------------------------------------------------------------
// Weak-coupling limit operator
// ---------------------------------------------------------------------------

/// Gap-branch limit eigenvalue functions `(e_1(alpha), e_3(alpha),
/// beta_bar_alpha)`.
///
/// With moments `J_abc(alpha)` of `cos(a p_1) cos(b p_2) cos(c p_3)` against
/// `1 / (eps(p) + alpha)` (Laplace--Bessel quadrature, exact at the
/// threshold `alpha = 0`):
///
/// * `e_1(alpha) = (J_000 + J_200)/2 - J_110`, the double eigenvalue
///   `(1 / 2 (2 pi)^3) integral (cos p_1 - cos p_2)^2 / (eps(pi_bar - p) +
///   alpha)`;
/// * `beta_bar_alpha = -J_100 / J_000`, the weighted cosine mean;
/// * `e_3(alpha) = (J_000 + J_200)/2 + 2 J_110 - 3 J_100^2 / J_000`, the
///   simple eigenvalue; it satisfies the lattice identity `e_3 = -beta_bar`.
///
/// The reflection `p -> pi_bar - p` converts all gap-weight integrals into
/// the plain moments above.  `e_1(0) ~ 0.185237` and `e_3(0) ~ 0.340537`
/// determine the critical mass ratios of the gap.
///
/// # Errors
///
/// `InvalidArgument` for negative `alpha`.
pub fn limit_funcs(alpha: f64) -> Result<(f64, f64, f64)> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "limit functions need alpha >= 0, got {alpha}"
        )));
    }
    let j000 = j_moment([0, 0, 0], alpha)?;
    let j200 = j_moment([2, 0, 0], alpha)?;
    let j110 = j_moment([1, 1, 0], alpha)?;
    let j100 = j_moment([1, 0, 0], alpha)?;
    let e1 = (j000 + j200) / 2.0 - j110;
    let beta_bar = -j100 / j000;
    let e3 = (j000 + j200) / 2.0 + 2.0 * j110 - 3.0 * j100 * j100 / j000;
    Ok((e1, e3, beta_bar))
}

/// The rank-six weak-coupling limit matrix at quasi-momentum `K` and its
/// eigenvalues (ascending).
///
/// The limit operator acts on the span of the mean-deflated profiles
/// `cos p_c - C_bar` and `sin p_c` per axis, with Gram matrix `G` built from
/// the lattice moments with weight `1 / (w(p) + alpha)`; the coordinate
/// reflection `p -> pi_bar - p` makes `G` *identical* for both branches, so
/// the branch enters only through an overall sign.  In the ordered basis
/// `(c_1, s_1, c_2, s_2, c_3, s_3)` the quasi-momentum enters through the
/// per-axis blocks `X_c = [[cos K_c, sin K_c], [sin K_c, -cos K_c]]`, and
/// with the Cholesky factor `G = L L^T` the returned matrix is
///
/// ```text
/// M = sign * L^T X L ,   sign = -1 below the band, +1 in the gap,
/// ```
///
/// whose spectrum is that of the limit operator: three positive and three
/// negative eigenvalues.  At `K = 0` the below-branch positives are the
/// triple sine moment `(J_000 - J_200)/2` (supremum `1 / gamma_1(0)` at
/// `alpha = 0`) and the gap-branch positives are `(e_1, e_1, e_3)` of
/// [`limit_funcs`].  Squaring `M` reproduces the positive-definite form
/// whose eigenvalue square roots are the critical curves.
///
/// # Errors
///
/// `InvalidArgument` for negative `alpha`; `IllConditioned` if the Gram
/// matrix loses definiteness (it never does for finite `alpha >= 0`).
pub fn limit_matrix_general_k(
    k: [f64; 3],
    alpha: f64,
    branch: Region,
) -> Result<(SymMatrix, Vec<f64>)> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "limit matrix needs alpha >= 0, got {alpha}"
        )));
    }
    let j000 = j_moment([0, 0, 0], alpha)?;
    let j200 = j_moment([2, 0, 0], alpha)?;
    let j110 = j_moment([1, 1, 0], alpha)?;
    let j100 = j_moment([1, 0, 0], alpha)?;
    let gc_diag = (j000 + j200) / 2.0 - j100 * j100 / j000;
    let gc_off = j110 - j100 * j100 / j000;
    let gs = (j000 - j200) / 2.0;

    let mut g = SymMatrix::zeros(6);
    for c in 0..3 {
        g.set_sym(2 * c, 2 * c, gc_diag);
        g.set_sym(2 * c + 1, 2 * c + 1, gs);
        for c2 in 0..c {
            g.set_sym(2 * c, 2 * c2, gc_off);
        }
    }
    let l = cholesky_lower(&g)?;

    // X in the interleaved basis: per-axis rotation-reflection blocks.
    let mut x = [[0.0f64; 6]; 6];
    for c in 0..3 {
        let (ck, sk) = (k[c].cos(), k[c].sin());
        x[2 * c][2 * c] = ck;
        x[2 * c][2 * c + 1] = sk;
        x[2 * c + 1][2 * c] = sk;
        x[2 * c + 1][2 * c + 1] = -ck;
    }

    // M = sign * L^T X L (L lower, row-major).
    let sign = match branch {
        Region::Below => -1.0,
        Region::Gap => 1.0,
    };
    let mut xl = [[0.0f64; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            let mut acc = 0.0;
            for (t, xr) in x[i].iter().enumerate() {
                if t >= j {
                    acc += xr * l[t * 6 + j];
                }
            }
            xl[i][j] = acc;
        }
    }
    let mut m = SymMatrix::zeros(6);
    for i in 0..6 {
        for j in 0..=i {
            let mut acc = 0.0;
            for t in i..6 {
                acc += l[t * 6 + i] * xl[t][j];
            }
            // L^T X L entry (i, j): sum_t L[t][i] * (X L)[t][j]; L[t][i] = 0
            // for t < i.
            m.set_sym(i, j, sign * acc);
        }
    }
    let eigs = sym_eigenvalues(&m);
    Ok((m, eigs))
}

/// The supremum over `alpha` of each positive eigenvalue curve of the limit
/// operator, with the full scan retained.
#[derive(Debug, Clone)]
pub struct LimitScan {
    /// Per sorted curve (descending), the supremum over `alpha >= 0`.
    pub sup: [f64; 3],
    /// The `alpha` attaining each supremum.
    pub alpha_star: [f64; 3],
    /// Scanned `alpha` values: `{0}` then 61 log-spaced points in
    /// `[1e-3, 1e3]`.
    pub alphas: Vec<f64>,
    /// Top three eigenvalues (descending) at each scanned `alpha`.
    pub curves: Vec<[f64; 3]>,
}

/// Scans the three positive eigenvalue curves of the limit operator over
/// `alpha` and refines each curve's maximum by golden-section search.
///
/// Eigenvalues are tracked *sorted* at each `alpha` (curve labels across
/// crossings are not defined), so the reported suprema are those of the
/// sorted curves; the reciprocal of `sup[0]` is the mass ratio where the
/// first bound state appears and the reciprocal of `sup[2]` the ratio where
/// all three are guaranteed.
///
/// # Errors
///
/// Propagates moment-evaluation errors (none for valid `k`).
pub fn limit_curve_sup(k: [f64; 3], branch: Region) -> Result<LimitScan> {
    let mut alphas = Vec::with_capacity(ALPHA_SCAN_POINTS + 1);
    alphas.push(0.0);
    let (lo, hi) = (1e-3f64, 1e3f64);
    for i in 0..ALPHA_SCAN_POINTS {
        let t = i as f64 / (ALPHA_SCAN_POINTS - 1) as f64;
        alphas.push(lo * (hi / lo).powf(t));
    }
    let top3 = |alpha: f64| -> Result<[f64; 3]> {
        let (_, eigs) = limit_matrix_general_k(k, alpha, branch)?;
        Ok([eigs[5], eigs[4], eigs[3]])
    };
    let mut curves = Vec::with_capacity(alphas.len());
    for &a in &alphas {
        curves.push(top3(a)?);
    }
    let mut sup = [0.0; 3];
    let mut alpha_star = [0.0; 3];
    for curve in 0..3 {
        let mut best = 0usize;
        for (i, c) in curves.iter().enumerate() {
            if c[curve] > curves[best][curve] {
                best = i;
            }
        }
        // Golden-section refinement on the bracketing interval.
        let mut a = if best == 0 { 0.0 } else { alphas[best - 1] };
        let mut b = if best + 1 < alphas.len() {
            alphas[best + 1]
        } else {
            alphas[best]
        };
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = top3(x1)?[curve];
        let mut f2 = top3(x2)?[curve];
        for _ in 0..GOLDEN_ITERS {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = top3(x2)?[curve];
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = top3(x1)?[curve];
            }
        }
        let (xm, fm) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
        if fm > curves[best][curve] {
            sup[curve] = fm;
            alpha_star[curve] = xm;
        } else {
            sup[curve] = curves[best][curve];
            alpha_star[curve] = alphas[best];
        }
    }
    Ok(LimitScan {
        sup,
        alpha_star,
        alphas,
        curves,
    })
}

/// Projected principal part of the Birman-Schwinger operator at general
/// quasi-momentum: the rank-six reduction and its eigenvalues.
///
/// Expanding the resolvent factor `1 / (E - z) = -1/z - E/z^2 + E^2 / (z^2
/// (E - z))` and projecting out the constraint direction kills every
/// separable term except the convolution cosines, leaving
///
/// ```text
/// P B^p P = kappa * sum_c [ u_c u_c^T - v_c v_c^T ],
/// kappa = -sign(Delta) * lambda gamma / (n^3 z^2),
/// ```
///
/// with `u_c = P(cos(p_c - K_c/2) / sqrt|Delta|)` and `v_c` the sine
/// analogue.  The nonzero spectrum is that of the 6x6 congruence
/// `kappa L^T diag(1,1,1,-1,-1,-1) L` with `G = L L^T` the factor Gram
/// matrix; it always consists of three positive and three negative
/// eigenvalues.  Returns the 6x6 matrix and its eigenvalues (ascending).
///
/// # Errors
///
/// As [`delta_weights`]; `IllConditioned` if the factor Gram matrix is
/// numerically singular.
pub fn projected_principal_general_k(
    params: &ModelParams,
    z: f64,
    grid: &TorusGrid,
) -> Result<(SymMatrix, Vec<f64>)> {
    let (weights, region) = delta_weights(params, z, grid, DeltaMethod::Bessel)?;
    let tables = KernelTables::new(params, z, grid, &weights, region);
    let len = grid.len();
    let norm: f64 = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let phi: Vec<f64> = weights.iter().map(|w| w / norm).collect();
    // Factors u_c, v_c: weighted half-shifted trig profiles, deflated by phi.
    let mut factors: Vec<Vec<f64>> = Vec::with_capacity(6);
    for c in 0..3 {
        for sin_part in [false, true] {
            let mut f: Vec<f64> = (0..len)
                .map(|i| {
                    let t = if sin_part {
                        tables.energy.su[i][c]
                    } else {
                        tables.energy.cu[i][c]
                    };
                    t * weights[i]
                })
                .collect();
            let d: f64 = f.iter().zip(&phi).map(|(a, b)| a * b).sum();
            f.iter_mut().zip(&phi).for_each(|(a, b)| *a -= d * b);
            factors.push(f);
        }
    }
    let mut g = SymMatrix::zeros(6);
    for i in 0..6 {
        for j in 0..=i {
            let dot: f64 = factors[i].iter().zip(&factors[j]).map(|(a, b)| a * b).sum();
            g.set_sym(i, j, dot);
        }
    }
    let l = cholesky_lower(&g)?;
    let kappa = -region.delta_sign() * params.lambda * params.gamma / (len as f64 * z * z);
    // Signature in the interleaved basis (c_1, s_1, c_2, s_2, c_3, s_3):
    // +1 on cosine rows, -1 on sine rows.
    let sig = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
    let mut m = SymMatrix::zeros(6);
    for i in 0..6 {
        for j in 0..=i {
            let mut acc = 0.0;
            for t in 0..6 {
                if t >= i && t >= j {
                    acc += l[t * 6 + i] * sig[t] * l[t * 6 + j];
                }
            }
            m.set_sym(i, j, kappa * acc);
        }
    }
    let eigs = sym_eigenvalues(&m);
    Ok((m, eigs))
}

// ---------------------------------------------------------------------------
// Residual bounds
// ---------------------------------------------------------------------------

/// The lattice integral `(1 / (2 pi)^3) integral sin^2 p_1 / eps(p)^2 dp`,
/// by Laplace--Bessel quadrature: `integral_0^inf t * (ive(0,t) - ive(2,t))
/// / 2 * ive(0,t)^2 dt` with an explicit `t^(-3/2)` two-term tail.
fn sin2_over_eps_sq() -> f64 {
    let rule = log_panel_rule(SIN2_EPS2_HORIZON);
    let head = rule.integrate(|t| {
        t * (ive(0, t) - ive(2, t)) / 2.0 * ive(0, t) * ive(0, t)
    });
    let c = (2.0 * PI).powf(-1.5);
    let tail = c * (2.0 / SIN2_EPS2_HORIZON.sqrt() - 1.0 / (12.0 * SIN2_EPS2_HORIZON.powf(1.5)));
    head + tail
}

/// The explicit constant `C_1(gamma)` dominating `lambda * |residual norm|`
/// below the band:
///
/// ```text
/// C_1 = ( gamma_hat (3+gamma)/12 + (3+gamma)^2/4 )
///       * ( 6 gamma gamma_hat + 3 gamma gamma_hat / (gamma_hat + 6)
///           + 27 gamma^3 gamma_hat / 36 + 27 gamma^3 / 6 ) * W
///       + 3 (3 + gamma)
/// ```
///
/// with `W` the Watson constant.
pub fn c1_constant(gamma: f64) -> f64 {
    let gh = gamma_hat(gamma);
    let g3 = 3.0 + gamma;
    let first = gh * g3 / 12.0 + g3 * g3 / 4.0;
    let second = 6.0 * gamma * gh + 3.0 * gamma * gh / (gh + 6.0) + 27.0 * gamma.powi(3) * gh / 36.0
        + 27.0 * gamma.powi(3) / 6.0;
    first * second * watson_w() + 3.0 * g3
}

/// The explicit constant `C_2(gamma)` in the two-sided bound for the odd
/// principal eigenvalue at the branch bottom:
/// `C_2 = 9 (3+gamma) gamma / gamma_1(0) + 9 gamma (1+gamma)^2 *
/// (1/(2 pi)^3) integral sin^2 p_1 / eps^2`.
pub fn c2_constant(gamma: f64) -> f64 {
    let inv_gamma1 = (j_moment([0, 0, 0], 0.0).expect("Watson-type moment converges")
        - j_moment([2, 0, 0], 0.0).expect("moment converges"))
        / 2.0;
    9.0 * (3.0 + gamma) * gamma * inv_gamma1 + 9.0 * gamma * (1.0 + gamma) * (1.0 + gamma) * sin2_over_eps_sq()
}

/// Closed-form norm bound for the residual part of the Birman-Schwinger
/// operator at `K = 0`.
///
/// * `Region::Below`: the odd residual obeys `|B^{o,r}| <= C_1(gamma) /
///   lambda` for every `z` below the two-particle branch, provided
///   `lambda > 3 (3 + gamma)`; the bound value is returned.
/// * `Region::Gap`: the projected even residual obeys `|P B^{e,r} P| <=
///   (gamma_hat - z)(gamma_hat + lambda) * ( 9 gamma^2 / (-z)^3 +
///   gamma_hat^2 / ((gamma_hat - z)^2 (-z)) ) * W` for `z` between the top
///   of the branch and `0`.
///
/// # Errors
///
/// `Unsupported` for `K != 0` (the closed constants are zero-momentum
/// objects; at general `K` only the qualitative `O((1+lambda)/z^2)` decay is
/// available).  `DomainError` if `lambda <= 3 (3 + gamma)` or `z` is outside
/// the stated range for the region.
pub fn residual_bounds(params: &ModelParams, z: f64, region: Region) -> Result<f64> {
    if !params.is_k_zero() {
        return Err(Error::Unsupported(
            "closed residual bounds exist only at zero total quasi-momentum".into(),
        ));
    }
    let gamma = params.gamma;
    let lambda = params.lambda;
    if lambda <= 3.0 * (3.0 + gamma) {
        return Err(Error::DomainError(format!(
            "residual bounds need lambda > 3 (3 + gamma) = {:.6}, got lambda = {lambda:.6}",
            3.0 * (3.0 + gamma)
        )));
    }
    match region {
        Region::Below => {
            let tau_min = two_body::fiber_eigenvalue(params, [0.0, 0.0, 0.0]).z;
            if z >= tau_min {
                return Err(Error::DomainError(format!(
                    "below-branch residual bound needs z < {tau_min:.12}, got z = {z:.12}"
                )));
            }
            Ok(c1_constant(gamma) / lambda)
        }
        Region::Gap => {
            let tau_max = two_body::fiber_eigenvalue(params, [PI, PI, PI]).z;
            if z <= tau_max || z >= 0.0 {
                return Err(Error::DomainError(format!(
                    "gap residual bound needs z in ({tau_max:.12}, 0), got z = {z:.12}"
                )));
            }
            let gh = params.gamma_hat();
            Ok((gh - z)
                * (gh + lambda)
                * (9.0 * gamma * gamma / (-z).powi(3) + gh * gh / ((gh - z) * (gh - z) * (-z)))
                * watson_w())
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_top_eigs;
    use crate::torus_grid::make_grid;
    use crate::two_body::essential_spectrum;

    fn params(gamma: f64, lambda: f64, k: [f64; 3]) -> ModelParams {
        ModelParams::new(gamma, lambda, k).unwrap()
    }

    /// lambda -> 0 keeps Delta = 1, so the kernel carries the bare factor
    /// lambda and the matrix vanishes entrywise.
    #[test]
    fn tiny_lambda_matrix_vanishes_entrywise() {
        let p = params(1.3, 1e-9, [0.3, -0.7, 1.1]);
        let grid = make_grid(6, 0.0).unwrap();
        let op = bs_matrix(&p, -1.0, &grid).unwrap();
        assert_eq!(op.region, Region::Below);
        assert!(op.matrix.max_abs() < 1e-9);
        // Entry sign below the band: -lambda / (stuff > 0) < 0.
        assert!(op.matrix.at(0, 0) < 0.0);
    }

    /// The matrix is exactly symmetric and the region tag matches where z
    /// was placed relative to the essential spectrum.
    #[test]
    fn region_classification_below_and_gap() {
        let p = params(5.0, 150.0, [0.0; 3]);
        let bands = essential_spectrum(&p);
        let grid = make_grid(6, 0.0).unwrap();
        let below = bs_matrix(&p, bands.two_particle.0 - 1.0, &grid).unwrap();
        assert_eq!(below.region, Region::Below);
        let (gap_lo, gap_hi) = bands.gap.unwrap();
        let gap = bs_matrix(&p, (gap_lo + gap_hi) / 2.0, &grid).unwrap();
        assert_eq!(gap.region, Region::Gap);
        for i in 0..gap.matrix.n() {
            for j in 0..i {
                assert_eq!(gap.matrix.at(i, j), gap.matrix.at(j, i));
            }
        }
    }

    /// z inside the two-particle branch mixes determinant signs.
    #[test]
    fn branch_interior_is_a_domain_error() {
        let p = params(5.0, 150.0, [0.0; 3]);
        let bands = essential_spectrum(&p);
        let grid = make_grid(6, 0.0).unwrap();
        let mid = (bands.two_particle.0 + bands.two_particle.1) / 2.0;
        match bs_matrix(&p, mid, &grid) {
            Err(Error::DomainError(msg)) => assert!(msg.contains("two-particle branch")),
            other => panic!("expected DomainError, got {other:?}"),
        }
    }

    /// z at a grid fiber eigenvalue hits the determinant floor and names the
    /// node.
    #[test]
    fn near_fiber_eigenvalue_is_ill_conditioned() {
        let p = params(5.0, 150.0, [0.0; 3]);
        let grid = make_grid(6, 0.0).unwrap();
        // The fiber at q = 0 attains tau_min; its eigenvalue zeroes Delta.
        let z0 = two_body::fiber_eigenvalue(&p, [0.0, 0.0, 0.0]).z;
        match bs_matrix(&p, z0, &grid) {
            Err(Error::IllConditioned(msg)) => assert!(msg.contains("node")),
            other => panic!("expected IllConditioned, got {other:?}"),
        }
    }

    /// Below the band the even restriction is negative semidefinite and the
    /// odd restriction positive semidefinite; in the gap the signs swap.
    #[test]
    fn region_sign_laws_for_even_and_odd() {
        let grid = make_grid(8, 0.0).unwrap();
        let p_below = params(2.0, 30.0, [0.0; 3]);
        let bands = essential_spectrum(&p_below);
        let op = bs_matrix(&p_below, bands.two_particle.0 - 0.5, &grid).unwrap();
        let even = sector_restrict(&op, SymmetrySector::Even).unwrap();
        let odd = sector_restrict(&op, SymmetrySector::Odd).unwrap();
        let slack = 1e-9 * op.matrix.max_abs();
        let (_, even_max) = crate::linalg::sym_extreme_eigs(&even.matrix);
        let (odd_min, _) = crate::linalg::sym_extreme_eigs(&odd.matrix);
        assert!(even_max <= slack, "even max {even_max:.3e} above slack {slack:.3e}");
        assert!(odd_min >= -slack, "odd min {odd_min:.3e} below -slack");

        let p_gap = params(5.0, 150.0, [0.0; 3]);
        let bands = essential_spectrum(&p_gap);
        let (lo, hi) = bands.gap.unwrap();
        let op = bs_matrix(&p_gap, lo + 0.3 * (hi - lo), &grid).unwrap();
        let even = sector_restrict(&op, SymmetrySector::Even).unwrap();
        let odd = sector_restrict(&op, SymmetrySector::Odd).unwrap();
        let slack = 1e-9 * op.matrix.max_abs();
        let (even_min, _) = crate::linalg::sym_extreme_eigs(&even.matrix);
        let (_, odd_max) = crate::linalg::sym_extreme_eigs(&odd.matrix);
        assert!(even_min >= -slack, "gap even min {even_min:.3e}");
        assert!(odd_max <= slack, "gap odd max {odd_max:.3e}");
    }

    /// Sector dimensions on n = 10: per-axis even/odd counts give the parity
    /// sectors, Burnside counts give the even family.
    #[test]
    fn sector_dimensions_count_correctly() {
        let grid = make_grid(10, 0.0).unwrap();
        let dims: Vec<usize> = [
            SymmetrySector::Even,
            SymmetrySector::Odd,
            SymmetrySector::Odd1,
            SymmetrySector::Odd123,
            SymmetrySector::EvenS2,
            SymmetrySector::EvenA2,
            SymmetrySector::EvenPerp,
        ]
        .iter()
        .map(|&s| sector_basis(&grid, s).unwrap().dim())
        .collect();
        assert_eq!(dims, vec![504, 496, 144, 64, 116, 222, 166]);
        assert_eq!(dims[0] + dims[1], 1000);
    }

    /// Basis vectors are orthonormal: the Gram matrix of every support block
    /// is the identity.
    #[test]
    fn sector_bases_are_orthonormal() {
        let grid = make_grid(6, 0.0).unwrap();
        for sector in [
            SymmetrySector::Odd,
            SymmetrySector::Even,
            SymmetrySector::EvenA2,
            SymmetrySector::EvenPerp,
        ] {
            let basis = sector_basis(&grid, sector).unwrap();
            for (s, rows) in basis.rows.iter().enumerate() {
                for (a, ra) in rows.iter().enumerate() {
                    for (b, rb) in rows.iter().enumerate() {
                        let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
                        let expect = if a == b { 1.0 } else { 0.0 };
                        assert!(
                            (dot - expect).abs() < 1e-13,
                            "{}: support {s} rows {a},{b}: {dot}",
                            sector.label()
                        );
                    }
                }
            }
        }
    }

    /// Direct sector assembly agrees with restriction of the full matrix.
    #[test]
    fn direct_assembly_matches_full_restriction() {
        let p = params(3.0, 40.0, [0.0; 3]);
        let grid = make_grid(6, 0.0).unwrap();
        let full = bs_matrix(&p, -45.0, &grid).unwrap();
        for sector in [SymmetrySector::Odd1, SymmetrySector::EvenPerp] {
            let restricted = sector_restrict(&full, sector).unwrap();
            let direct = bs_sector_matrix(&p, -45.0, &grid, sector, DeltaMethod::Bessel).unwrap();
            assert_eq!(restricted.matrix.n(), direct.matrix.n());
            let mut dev = 0.0f64;
            for i in 0..direct.matrix.n() {
                for j in 0..=i {
                    dev = dev.max((restricted.matrix.at(i, j) - direct.matrix.at(i, j)).abs());
                }
            }
            assert!(dev < 1e-13 * full.matrix.max_abs(), "{}: {dev:.3e}", sector.label());
        }
    }

    /// The three singly odd sectors are unitarily equivalent: identical
    /// spectra to rounding.
    #[test]
    fn singly_odd_sectors_share_spectra() {
        let p = params(4.0, 50.0, [0.0; 3]);
        let grid = make_grid(8, 0.0).unwrap();
        let bands = essential_spectrum(&p);
        let z = bands.two_particle.0 - 0.7;
        let spectra: Vec<Vec<f64>> = [SymmetrySector::Odd1, SymmetrySector::Odd2, SymmetrySector::Odd3]
            .iter()
            .map(|&s| {
                let op = bs_sector_matrix(&p, z, &grid, s, DeltaMethod::Bessel).unwrap();
                sym_eigenvalues(&op.matrix)
            })
            .collect();
        let scale = spectra[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for other in &spectra[1..] {
            for (a, b) in spectra[0].iter().zip(other) {
                assert!((a - b).abs() <= 1e-10 * scale.max(1.0), "{a} vs {b}");
            }
        }
    }

    /// In the gap, the even family is an exact orthogonal decomposition:
    /// the union of the S2, A2, and Perp spectra is the Even spectrum.
    #[test]
    fn even_family_partitions_even_spectrum() {
        let p = params(5.0, 150.0, [0.0; 3]);
        let grid = make_grid(6, 0.0).unwrap();
        let bands = essential_spectrum(&p);
        let (lo, hi) = bands.gap.unwrap();
        let z = lo + 0.25 * (hi - lo);
        let even = bs_sector_matrix(&p, z, &grid, SymmetrySector::Even, DeltaMethod::Bessel).unwrap();
        let mut union: Vec<f64> = Vec::new();
        for sector in [SymmetrySector::EvenS2, SymmetrySector::EvenA2, SymmetrySector::EvenPerp] {
            let op = bs_sector_matrix(&p, z, &grid, sector, DeltaMethod::Bessel).unwrap();
            union.extend(sym_eigenvalues(&op.matrix));
        }
        union.sort_by(f64::total_cmp);
        let reference = sym_eigenvalues(&even.matrix);
        assert_eq!(union.len(), reference.len());
        let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for (a, b) in reference.iter().zip(&union) {
            assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
        }
    }

    /// Projection is idempotent, kills the constraint vector, and leaves odd
    /// sectors untouched.
    #[test]
    fn constraint_projection_properties() {
        let p = params(5.0, 150.0, [0.0; 3]);
        let grid = make_grid(6, 0.0).unwrap();
        let bands = essential_spectrum(&p);
        let (lo, hi) = bands.gap.unwrap();
        let z = lo + 0.4 * (hi - lo);
        let op = bs_matrix(&p, z, &grid).unwrap();
        let once = constraint_projection(&op);
        let twice = constraint_projection(&once);
        let mut dev = 0.0f64;
        for i in 0..once.matrix.n() {
            for j in 0..=i {
                dev = dev.max((once.matrix.at(i, j) - twice.matrix.at(i, j)).abs());
            }
        }
        assert!(dev <= 1e-13 * op.matrix.max_abs());

        let norm2: f64 = op.weights.iter().map(|w| w * w).sum();
        let phi: Vec<f64> = op.weights.iter().map(|w| w / norm2.sqrt()).collect();
        let mut out = vec![0.0; phi.len()];
        once.matrix.matvec(&phi, &mut out);
        let img = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(img <= 1e-12 * op.matrix.max_abs() * (phi.len() as f64).sqrt());

        let odd = bs_sector_matrix(&p, z, &grid, SymmetrySector::Odd, DeltaMethod::Bessel).unwrap();
        let odd_proj = constraint_projection(&odd);
        let mut odd_dev = 0.0f64;
        for i in 0..odd.matrix.n() {
            for j in 0..=i {
                odd_dev = odd_dev.max((odd.matrix.at(i, j) - odd_proj.matrix.at(i, j)).abs());
            }
        }
        assert_eq!(odd_dev, 0.0, "odd sector must be untouched by projection");
    }

    /// The odd principal part has rank three; its nonzero eigenvalues are
    /// the closed form, which on the same grid is the same finite sum.
    #[test]
    fn odd_principal_rank_three_closed_form() {
        let p = params(6.0, 40.0, [0.0; 3]);
        let grid = make_grid(10, 0.0).unwrap();
        let bands = essential_spectrum(&p);
        let z = bands.two_particle.0 - 1.0;
        let op = principal_part_matrix(&p, z, &grid).unwrap();
        let e = principal_odd_eig(&p, z, &grid, DeltaMethod::Bessel).unwrap();
        let eigs = sym_top_eigs(&op.matrix, 5);
        for k in 0..3 {
            assert!((eigs[k] - e).abs() <= 1e-12 * e, "top {k}: {} vs {e}", eigs[k]);
        }
        assert!(eigs[3].abs() <= 1e-12 * e, "rank leak: {}", eigs[3]);
        assert!(eigs[4].abs() <= 1e-12 * e);
    }

    /// e^{o,p} decays to zero far below the band and increases strictly
    /// along the branch approach.
    #[test]
    fn odd_principal_monotone_and_vanishing() {
        let p = params(6.0, 100.0, [0.0; 3]);
        let grid = make_grid(10, 0.0).unwrap();
        let far = principal_odd_eig(&p, -1e4, &grid, DeltaMethod::Bessel).unwrap();
        assert!(far > 0.0 && far < 1e-3, "far value {far}");
        let z0 = two_body::fiber_eigenvalue(&p, [0.0, 0.0, 0.0]).z;
        let mut prev = -1.0;
        for k in 0..50 {
            let z = (z0 - 30.0) + 29.9 * k as f64 / 49.0;
            let e = principal_odd_eig(&p, z, &grid, DeltaMethod::Bessel).unwrap();
            assert!(e > prev, "not increasing at z = {z}: {e} after {prev}");
            prev = e;
        }
    }

    /// Two-sided bound for the odd principal eigenvalue at the branch
    /// bottom: gamma/gamma_1(0) - C_2/lambda < e < gamma/gamma_1(0).
    #[test]
    fn odd_principal_sandwich_at_branch_bottom() {
        let p = params(6.0, 100.0, [0.0; 3]);
        let z0 = two_body::fiber_eigenvalue(&p, [0.0, 0.0, 0.0]).z;
        // Offset grid: the fiber at q = 0 is exactly critical there, so the
        // integrand has a removable 0/0 at the origin that an offset grid
        // never samples.
        let grid = make_grid(32, 0.5).unwrap();
        let e = principal_odd_eig(&p, z0, &grid, DeltaMethod::Bessel).unwrap();
        let gamma1 = 2.0
            / (j_moment([0, 0, 0], 0.0).unwrap() - j_moment([2, 0, 0], 0.0).unwrap());
        let upper = p.gamma / gamma1;
        let lower = upper - c2_constant(p.gamma) / p.lambda;
        assert!(e < upper, "e = {e:.9} not below gamma/gamma_1 = {upper:.9}");
        assert!(e > lower, "e = {e:.9} not above lower bound {lower:.9}");
    }

    /// Even principal eigenvalues: e_1 = e_2 by construction, both
    /// nonnegative, and the Nystrom spectrum of the projected principal part
    /// matches (e_12, e_12, e_3).
    #[test]
    fn even_principal_matches_nystrom() {
        let p = params(5.0, 150.0, [0.0; 3]);
        let grid = make_grid(10, 0.0).unwrap();
        let bands = essential_spectrum(&p);
        let (lo, hi) = bands.gap.unwrap();
        let z = lo + 0.2 * (hi - lo);
        let eigs = principal_even_eigs(&p, z, &grid).unwrap();
        assert!(eigs.e_even_12 >= 0.0 && eigs.e_even_3 >= 0.0);
        assert!(eigs.e_odd < 0.0, "gap odd principal eigenvalue is negative");
        let op = principal_part_matrix(&p, z, &grid).unwrap();
        let top = sym_top_eigs(&op.matrix, 4);
        let mut expect = [eigs.e_even_12, eigs.e_even_12, eigs.e_even_3];
        expect.sort_by(f64::total_cmp);
        expect.reverse();
        let scale = expect[0].max(1e-300);
        for k in 0..3 {
            assert!(
                (top[k] - expect[k]).abs() <= 1e-10 * scale,
                "eig {k}: {} vs {}",
                top[k],
                expect[k]
            );
        }
        assert!(top[3].abs() <= 1e-10 * scale, "rank leak {}", top[3]);
    }

    /// Limit functions at the threshold match the frozen quadrature
    /// anchors, and e_3 = -beta_bar is a lattice identity.
    #[test]
    fn limit_funcs_threshold_anchors() {
        let (e1, e3, beta) = limit_funcs(0.0).unwrap();
        assert!((e1 - 0.185237457025554116).abs() < 1e-10);
        assert!((e3 - 0.340537329550999143).abs() < 1e-10);
        assert!((beta + 0.340537329550999143).abs() < 1e-10);
        for alpha in [0.0, 0.3, 1.0, 10.0] {
            let (_, e3, beta) = limit_funcs(alpha).unwrap();
            assert!((e3 + beta).abs() < 1e-11, "identity fails at alpha = {alpha}");
        }
        let (e1inf, e3inf, _) = limit_funcs(1e3).unwrap();
        assert!(e1inf < 3e-2 && e3inf < 3e-2);
        assert!(limit_funcs(-0.5).is_err());
    }

    /// K = 0 limit matrix: below-branch positives are the triple sine
    /// moment; gap-branch positives are (e_1, e_1, e_3); the two branches
    /// are exact negatives.
    #[test]
    fn limit_matrix_zero_momentum_structure() {
        for alpha in [0.0, 0.5] {
            let (mb, eb) = limit_matrix_general_k([0.0; 3], alpha, Region::Below).unwrap();
            let (mg, eg) = limit_matrix_general_k([0.0; 3], alpha, Region::Gap).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    assert!((mb.at(i, j) + mg.at(i, j)).abs() < 1e-14);
                }
            }
            let sine = (j_moment([0, 0, 0], alpha).unwrap() - j_moment([2, 0, 0], alpha).unwrap()) / 2.0;
            for k in 3..6 {
                assert!((eb[k] - sine).abs() < 1e-12, "below positive {} vs {sine}", eb[k]);
            }
            let (e1, e3, _) = limit_funcs(alpha).unwrap();
            let mut expect = [e1, e1, e3];
            expect.sort_by(f64::total_cmp);
            for k in 0..3 {
                assert!(
                    (eg[3 + k] - expect[k]).abs() < 1e-8,
                    "gap positive {} vs {}",
                    eg[3 + k],
                    expect[k]
                );
            }
        }
    }

    /// General K: three positive and three negative eigenvalues on both
    /// branches, and the branch matrices are exact negatives of each other.
    #[test]
    fn limit_matrix_general_momentum_signature() {
        let k = [1.0, 0.5, -2.0];
        for alpha in [0.0, 0.7] {
            let (mb, eb) = limit_matrix_general_k(k, alpha, Region::Below).unwrap();
            let (mg, eg) = limit_matrix_general_k(k, alpha, Region::Gap).unwrap();
            assert_eq!(eb.iter().filter(|&&e| e > 0.0).count(), 3);
            assert_eq!(eb.iter().filter(|&&e| e < 0.0).count(), 3);
            assert_eq!(eg.iter().filter(|&&e| e > 0.0).count(), 3);
            for i in 0..6 {
                for j in 0..6 {
                    assert!((mb.at(i, j) + mg.at(i, j)).abs() < 1e-14);
                }
            }
        }
    }

    /// The alpha-scan supremum at K = 0, below branch, is the inverse
    /// critical mass ratio 1/gamma_1(0), attained at alpha = 0.
    #[test]
    fn limit_scan_recovers_gamma1() {
        let scan = limit_curve_sup([0.0; 3], Region::Below).unwrap();
        let inv_gamma1 =
            (j_moment([0, 0, 0], 0.0).unwrap() - j_moment([2, 0, 0], 0.0).unwrap()) / 2.0;
        for c in 0..3 {
            assert!((scan.sup[c] - inv_gamma1).abs() < 1e-9, "curve {c}: {}", scan.sup[c]);
            assert!(scan.alpha_star[c] < 1e-3);
        }
        assert_eq!(scan.alphas.len(), scan.curves.len());
    }

    /// Projected principal part at general K: exactly three positive and
    /// three negative eigenvalues, in both regions.
    #[test]
    fn projected_principal_signature_general_k() {
        let p = params(3.0, 80.0, [1.0, 0.5, -2.0]);
        let bands = essential_spectrum(&p);
        let grid = make_grid(8, 0.0).unwrap();
        let z_below = bands.two_particle.0 - 1.0;
        let (_, eigs) = projected_principal_general_k(&p, z_below, &grid).unwrap();
        assert_eq!(eigs.iter().filter(|&&e| e > 0.0).count(), 3, "{eigs:?}");
        assert_eq!(eigs.iter().filter(|&&e| e < 0.0).count(), 3);
        let (lo, hi) = bands.gap.unwrap();
        let z_gap = lo + 0.3 * (hi - lo);
        let (_, eigs) = projected_principal_general_k(&p, z_gap, &grid).unwrap();
        assert_eq!(eigs.iter().filter(|&&e| e > 0.0).count(), 3, "{eigs:?}");
        assert_eq!(eigs.iter().filter(|&&e| e < 0.0).count(), 3);
    }

    /// The closed below-branch bound dominates the Nystrom residual norm in
    /// the odd sector, and the gap bound dominates the projected even
    /// residual.
    #[test]
    fn residual_bounds_dominate_nystrom() {
        let grid = make_grid(8, 0.0).unwrap();
        // Below: gamma = 1, lambda = 1000 (the classic strong-coupling spot).
        let p = params(1.0, 1000.0, [0.0; 3]);
        let bands = essential_spectrum(&p);
        let z = bands.two_particle.0 - 1.0;
        let bound = residual_bounds(&p, z, Region::Below).unwrap();
        assert!((bound - c1_constant(1.0) / 1000.0).abs() < 1e-14);
        let full = bs_matrix(&p, z, &grid).unwrap();
        let principal = principal_part_matrix(&p, z, &grid).unwrap();
        let odd_full = sector_restrict(&full, SymmetrySector::Odd).unwrap();
        let odd_princ = sector_restrict(&principal, SymmetrySector::Odd).unwrap();
        let mut diff = odd_full.matrix.clone();
        for i in 0..diff.n() {
            for j in 0..=i {
                diff.set_sym(i, j, diff.at(i, j) - odd_princ.matrix.at(i, j));
            }
        }
        let (mn, mx) = crate::linalg::sym_extreme_eigs(&diff);
        let norm = mn.abs().max(mx.abs());
        assert!(norm <= bound, "odd residual {norm:.6e} above bound {bound:.6e}");

        // Gap: z about sqrt(lambda) above the branch top.
        let p = params(5.0, 400.0, [0.0; 3]);
        let bands = essential_spectrum(&p);
        let z = bands.two_particle.1 + 400.0f64.sqrt();
        assert!(z < 0.0);
        let bound = residual_bounds(&p, z, Region::Gap).unwrap();
        let full = constraint_projection(&bs_matrix(&p, z, &grid).unwrap());
        let principal = principal_part_matrix(&p, z, &grid).unwrap();
        let even_full = sector_restrict(
            &KernelOperator {
                sector: SymmetrySector::Full,
                ..full.clone()
            },
            SymmetrySector::Even,
        )
        .unwrap();
        let even_princ = sector_restrict(&principal, SymmetrySector::Even).unwrap();
        let mut diff = even_full.matrix.clone();
        for i in 0..diff.n() {
            for j in 0..=i {
                diff.set_sym(i, j, diff.at(i, j) - even_princ.matrix.at(i, j));
            }
        }
        let (mn, mx) = crate::linalg::sym_extreme_eigs(&diff);
        let norm = mn.abs().max(mx.abs());
        assert!(norm <= bound, "gap residual {norm:.6e} above bound {bound:.6e}");
    }

    /// Residual bounds reject out-of-regime requests.
    #[test]
    fn residual_bounds_regime_checks() {
        let p = params(1.0, 5.0, [0.0; 3]);
        assert!(matches!(
            residual_bounds(&p, -50.0, Region::Below),
            Err(Error::DomainError(_))
        ));
        let p = params(1.0, 100.0, [0.1, 0.0, 0.0]);
        assert!(matches!(
            residual_bounds(&p, -150.0, Region::Below),
            Err(Error::Unsupported(_))
        ));
    }

    /// Offset-half grids are negation-closed with no reflection-fixed
    /// nodes: sector dimensions follow the orbit counts and direct assembly
    /// still matches full-matrix restriction.
    #[test]
    fn offset_half_grid_sectors() {
        let grid = make_grid(6, 0.5).unwrap();
        assert!(grid.is_negation_closed() && !grid.is_symmetry_closed());
        let dims: Vec<usize> = [
            SymmetrySector::Even,
            SymmetrySector::Odd,
            SymmetrySector::Odd1,
            SymmetrySector::Odd123,
            SymmetrySector::EvenS2,
            SymmetrySector::EvenA2,
            SymmetrySector::EvenPerp,
        ]
        .iter()
        .map(|&s| sector_basis(&grid, s).unwrap().dim())
        .collect();
        assert_eq!(dims, vec![108, 108, 27, 27, 28, 45, 35]);

        let p = params(5.0, 150.0, [0.0; 3]);
        let bands = essential_spectrum(&p);
        let (lo, hi) = bands.gap.unwrap();
        let z = lo + 0.2 * (hi - lo);
        let full = bs_matrix(&p, z, &grid).unwrap();
        for sector in [SymmetrySector::Odd2, SymmetrySector::EvenS2] {
            let restricted = sector_restrict(&full, sector).unwrap();
            let direct = bs_sector_matrix(&p, z, &grid, sector, DeltaMethod::Bessel).unwrap();
            let mut dev = 0.0f64;
            for i in 0..direct.matrix.n() {
                for j in 0..=i {
                    dev = dev.max((restricted.matrix.at(i, j) - direct.matrix.at(i, j)).abs());
                }
            }
            assert!(dev < 1e-12 * full.matrix.max_abs(), "{}: {dev:.3e}", sector.label());
        }
    }

    /// Lifting then restricting sector coefficients is the identity.
    #[test]
    fn lift_restrict_roundtrip() {
        let grid = make_grid(6, 0.0).unwrap();
        let basis = sector_basis(&grid, SymmetrySector::EvenPerp).unwrap();
        let coeffs: Vec<f64> = (0..basis.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let lifted = basis.lift(&coeffs, grid.len());
        let back = basis.restrict(&lifted);
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
