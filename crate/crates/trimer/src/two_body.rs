//! Fiber operators of the two-particle subsystem and the essential spectrum
//! they generate.
//!
//! For fixed total quasimomentum `K` the three-body problem decomposes over
//! the momentum `q` of the spectating light particle.  Each fiber carries a
//! rank-one perturbation of the multiplication operator `E(p, q)`, and its
//! discrete spectrum below the band `[E_min(K,q), E_max(K,q)]` is governed by
//! the Fredholm determinant
//!
//! ```text
//! Delta(q, z) = 1 - lambda (2 pi)^-3 Int_T^3 dp / (E(p, q) - z).
//! ```
//!
//! A Laplace transform turns the momentum integral into a product of modified
//! Bessel functions, one per axis:
//!
//! ```text
//! Delta(q, z) = 1 - lambda Int_0^inf e^(-D t) prod_i ive(0, b_i t) dt,
//! D   = E_min(K, q) - z,
//! b_i = sqrt(1 + gamma^2 + 2 gamma cos(K_i - q_i)),
//! ```
//!
//! with `ive` the exponentially scaled `I_0`.  `Delta` is strictly decreasing
//! in `z`, so each fiber has at most one eigenvalue `z(K, q)` below its band;
//! it exists iff `lambda` exceeds the fiber threshold `lambda_*(q)`, and by
//! convention the value `z := E_min(K, q)` is reported otherwise.
//!
//! Sweeping `q` over the torus yields the two-particle branch
//! `[tau_min, tau_max]` of the essential spectrum; together with the
//! three-particle band `[E_min(K), E_max(K)]` this gives the full essential
//! spectrum (the lattice HVZ theorem), and a spectral gap opens exactly when
//! `tau_max < E_min(K)`.
//!
//! Large-coupling expansions are available through [`asymptotic_z`]:
//!
//! ```text
//! zhat(v) = -lambda + 3 (1 + gamma) - sum_i beta_i / (2 lambda)
//!           - (2 (sum_i beta_i)^2 - 3 sum_i beta_i^2) / (8 lambda^3) + ...,
//! beta_i  = 1 + gamma^2 + 2 gamma cos(v_i),
//! ```
//!
//! with `z(K, q) = zhat(K - q) + eps(q)`.

use rayon::prelude::*;

use crate::dispersion::{
    band_extrema, epsilon, fiber_band_min, pair_amplitude, wrap_angle, ModelParams,
};
use crate::special::{laplace_product_integral, laplace_time_moment, log_panel_rule, watson_w};
use crate::special::{ive, LaplaceTail, PanelRule};
use crate::torus_grid::{make_grid, TorusGrid};
use crate::{tol, Error, Result};
use std::f64::consts::PI;

/// Grid size for the `tau_band` scan seeding the extremum refinement.
const TAU_SCAN_N: usize = 24;
/// Grid size for the small-coupling fallback extremization (no refinement).
const FALLBACK_SCAN_N: usize = 32;
/// Shared Laplace horizon of a [`FiberCache`]: long enough past the panel
/// rule's first decade that the product asymptotics behind [`LaplaceTail`]
/// has converged.
const CACHE_HORIZON: f64 = 80.0;
/// Fastest decay the first cache panel `[0, 0.1]` resolves at full accuracy;
/// beyond it a node falls back to one-shot evaluation with its own horizon.
const CACHE_DECAY_MAX: f64 = 1.2e3;
/// Early-exit product for the head quadrature: past `decay * t > 45` the
/// integrand is below `e^-45` of its peak.
const HEAD_CUTOFF: f64 = 45.0;
/// Smallest `b_min * horizon` product for which the algebraic tail past the
/// shared horizon is trusted; mirrors the `30 / b_min` horizon rule of the
/// one-shot integrator.
const TAIL_SAFE_PRODUCT: f64 = 30.0;
/// Relative root tolerance while scanning for extremum seeds; the seeds are
/// re-solved at full precision before refinement, so scan accuracy only has
/// to rank the nodes.
const SCAN_REL_TOL: f64 = 1e-7;

/// How the Fredholm determinant is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMethod {
    /// Riemann sum over an internal offset-0 momentum grid of the given size
    /// per axis.  Spectrally accurate in the grid size while `z` stays below
    /// the band, and exactly the determinant of the discretized fiber.
    Grid(usize),
    /// Laplace--Bessel quadrature; also valid at the band edge
    /// `z = E_min(K, q)` where the momentum integral is improper.
    Bessel,
}

/// The discrete (or convention) spectral point of one fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSolution {
    /// Spectator momentum labelling the fiber.
    pub q: [f64; 3],
    /// Eigenvalue below the fiber band, or the convention value
    /// `E_min(K, q)` when no bound state exists.
    pub z: f64,
    /// True when `z` is a genuine eigenvalue (`Delta(q, z) = 0` with
    /// `z < E_min(K, q)`); false when the convention value was applied.
    pub is_bound: bool,
}

/// Critical coupling of one fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExistenceThreshold {
    /// The coupling `lambda_*(q)` above which the fiber binds; `0` when the
    /// threshold integral diverges (a bound state exists for every positive
    /// coupling).
    pub lambda_star: f64,
    /// True when the threshold integral diverges, i.e. fewer than three pair
    /// amplitudes are bounded away from zero at the band edge.
    pub divergent: bool,
}

/// The two-particle branch `{ z(K, q) : q in T^3 }` of the essential
/// spectrum, with the extremizing fibers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauBand {
    /// Bottom of the branch.
    pub tau_min: f64,
    /// Top of the branch.
    pub tau_max: f64,
    /// Fiber momentum attaining `tau_min`.
    pub argmin_q: [f64; 3],
    /// Fiber momentum attaining `tau_max`.
    pub argmax_q: [f64; 3],
}

/// The essential spectrum at fixed total quasimomentum: two branches and the
/// gap between them when one opens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBands {
    /// Two-particle branch `[tau_min, tau_max]`.
    pub two_particle: (f64, f64),
    /// Three-particle branch `[E_min(K), E_max(K)]`.
    pub three_particle: (f64, f64),
    /// Open interval `(tau_max, E_min(K))`, present iff it is nonempty.
    pub gap: Option<(f64, f64)>,
    /// Fiber momentum attaining `tau_min`.
    pub argmin_q: [f64; 3],
    /// Fiber momentum attaining `tau_max`.
    pub argmax_q: [f64; 3],
}

/// Per-axis pair amplitudes `b_i = sqrt(1 + gamma^2 + 2 gamma cos(K_i - q_i))`.
fn pair_bs(params: &ModelParams, q: [f64; 3]) -> [f64; 3] {
    [
        pair_amplitude(params.gamma, params.k[0] - q[0]),
        pair_amplitude(params.gamma, params.k[1] - q[1]),
        pair_amplitude(params.gamma, params.k[2] - q[2]),
    ]
}

/// Fredholm determinant `Delta(q, z)` of one fiber.
///
/// Both methods agree to about `1e-9` for `z` at least `0.1` below the band
/// edge (the grid sum converges spectrally in the grid size there), and the
/// determinant is strictly decreasing in `z` wherever it is defined.
///
/// # Errors
///
/// `DomainError` when `z` is not below the band edge (`Grid`), not at or
/// below it (`Bessel`), or when the band-edge integral diverges.
pub fn delta(params: &ModelParams, q: [f64; 3], z: f64, method: DeltaMethod) -> Result<f64> {
    match method {
        DeltaMethod::Grid(n) => delta_grid(params, q, z, n),
        DeltaMethod::Bessel => delta_bessel(params, q, z),
    }
}

fn delta_grid(params: &ModelParams, q: [f64; 3], z: f64, n: usize) -> Result<f64> {
    let emin = fiber_band_min(params, q);
    if !z.is_finite() || z >= emin {
        return Err(Error::DomainError(format!(
            "grid determinant needs z < E_min(K,q) = {emin:.6}, got z = {z:.6}"
        )));
    }
    let grid = make_grid(n, 0.0)?;
    let nodes = grid.axis_nodes();
    // E(p, q) - z = (eps(q) - z) + sum_c a_c(p_c) separates per axis.
    let base = epsilon(q) - z;
    let axis: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            nodes
                .iter()
                .map(|&p| (1.0 - p.cos()) + params.gamma * (1.0 - (params.k[c] - p - q[c]).cos()))
                .collect()
        })
        .collect();
    // Kahan-compensated sum over the n^2 inner-row partial sums.
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for a3 in &axis[2] {
        for a2 in &axis[1] {
            let base23 = base + a2 + a3;
            let mut row = 0.0f64;
            for a1 in &axis[0] {
                row += 1.0 / (base23 + a1);
            }
            let y = row - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
        }
    }
    Ok(1.0 - params.lambda * sum / (grid.len() as f64))
}

fn delta_bessel(params: &ModelParams, q: [f64; 3], z: f64) -> Result<f64> {
    let emin = fiber_band_min(params, q);
    let decay = emin - z;
    if !z.is_finite() || decay < 0.0 {
        return Err(Error::DomainError(format!(
            "Bessel determinant needs z <= E_min(K,q) = {emin:.6}, got z = {z:.6}"
        )));
    }
    if params.lambda == 0.0 {
        return Ok(1.0);
    }
    let l = laplace_product_integral([0, 0, 0], pair_bs(params, q), decay)?;
    Ok(1.0 - params.lambda * l)
}

/// Critical coupling `lambda_*(q)` of the fiber at `q`: the band-edge value
/// of the Birman--Schwinger integral decides existence, so
/// `lambda_* = 1 / Int_0^inf prod_i ive(0, b_i t) dt` (the `lambda` field of
/// `params` is ignored).
///
/// When fewer than three pair amplitudes stay away from zero the integral
/// diverges and the fiber binds at every positive coupling; this is reported
/// as `lambda_star = 0` with the `divergent` flag set.  Amplitudes below
/// [`tol::B_FLOOR`] are indistinguishable from the divergent case at working
/// precision and are folded into it.
pub fn existence_threshold(params: &ModelParams, q: [f64; 3]) -> ExistenceThreshold {
    match laplace_product_integral([0, 0, 0], pair_bs(params, q), 0.0) {
        Ok(l) => ExistenceThreshold {
            lambda_star: 1.0 / l,
            divergent: false,
        },
        Err(_) => ExistenceThreshold {
            lambda_star: 0.0,
            divergent: true,
        },
    }
}

/// Treat a divergent determinant evaluation (possible only arbitrarily close
/// to a degenerate band edge) as `-inf`: the determinant genuinely tends to
/// `-inf` there, so sign logic stays correct.
fn delta_or_neg_inf(v: Result<f64>) -> f64 {
    v.unwrap_or(f64::NEG_INFINITY)
}

/// Existence decision from a band-edge integral evaluation:
/// `Delta(E_min) = 1 - lambda * L(0) < 0`, with a divergent edge integral
/// counting as `L(0) = +inf`.
fn edge_binds(lambda: f64, l0: Result<f64>) -> bool {
    match l0 {
        Ok(l) => lambda * l > 1.0,
        Err(_) => true,
    }
}

/// Core fiber solver shared by the direct and cached paths: bracketed
/// bisection to width `rel_tol * max(1, |z|)`, one secant polish.  The
/// existence decision is made by the caller (it may be known a priori or
/// come from cached tables).
fn solve_fiber(
    emin: f64,
    lambda: f64,
    bound: bool,
    rel_tol: f64,
    delta_fn: &dyn Fn(f64) -> Result<f64>,
) -> (f64, bool) {
    if lambda <= 0.0 || !bound {
        return (emin, false);
    }
    // Upper bracket end: walk toward the edge until the determinant is
    // negative there.  Delta(E_min - lambda - 1) > 0 always, because
    // lambda * L <= lambda / (lambda + 1) < 1 at decay lambda + 1.
    let mut eta = 1e-6 * emin.abs().max(1.0);
    let mut hi = emin - eta;
    let mut f_hi = delta_or_neg_inf(delta_fn(hi));
    let mut tries = 0;
    while f_hi >= 0.0 {
        tries += 1;
        if tries > 50 {
            // Threshold resonance within working precision; apply the
            // convention value.
            return (emin, false);
        }
        eta *= 0.25;
        hi = emin - eta;
        f_hi = delta_or_neg_inf(delta_fn(hi));
    }
    let mut lo = emin - lambda - 1.0;
    let mut f_lo = delta_or_neg_inf(delta_fn(lo));
    debug_assert!(f_lo > 0.0, "determinant must be positive at bracket bottom");
    let mut guard = 0;
    while hi - lo > rel_tol * lo.abs().max(hi.abs()).max(1.0) {
        guard += 1;
        if guard > 200 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = delta_or_neg_inf(delta_fn(mid));
        if fm > 0.0 {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    let mut z = 0.5 * (lo + hi);
    if f_lo.is_finite() && f_hi.is_finite() && f_lo > 0.0 && f_hi < 0.0 {
        // Secant polish inside the final bracket.
        let zs = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        if zs > lo && zs < hi {
            z = zs;
        }
    }
    (z, true)
}

/// The unique spectral point of the fiber at `q`: the root of
/// `Delta(q, .)` below the band when `lambda > lambda_*(q)`, the convention
/// value `E_min(K, q)` otherwise.
///
/// The root satisfies both sandwiches
/// `E_min(K,q) - lambda <= z <= E_max(K,q) - lambda` and `z < E_min(K,q)`.
pub fn fiber_eigenvalue(params: &ModelParams, q: [f64; 3]) -> FiberSolution {
    let emin = fiber_band_min(params, q);
    let bs = pair_bs(params, q);
    let bound =
        params.lambda > 0.0 && edge_binds(params.lambda, laplace_product_integral([0, 0, 0], bs, 0.0));
    let (z, is_bound) = solve_fiber(emin, params.lambda, bound, tol::ROOT_REL, &|z| {
        delta_bessel(params, q, z)
    });
    FiberSolution { q, z, is_bound }
}

/// Large-coupling expansion of the fiber eigenvalue, truncated after the
/// constant (`order = 0`), `1/lambda` (`order = 1`) or `1/lambda^3`
/// (`order = 3`) term; the remainder is `O(lambda^(order - 2))` for the
/// truncations offered here.
///
/// # Errors
///
/// `InvalidArgument` for orders other than `{0, 1, 3}`, or when a
/// `1/lambda` truncation is requested at `lambda = 0`.
pub fn asymptotic_z(params: &ModelParams, q: [f64; 3], order: u32) -> Result<f64> {
    if !matches!(order, 0 | 1 | 3) {
        return Err(Error::InvalidArgument(format!(
            "asymptotic order must be one of {{0, 1, 3}}, got {order}"
        )));
    }
    if order > 0 && params.lambda == 0.0 {
        return Err(Error::InvalidArgument(
            "1/lambda truncations need a positive coupling".into(),
        ));
    }
    let mut zhat = -params.lambda + 3.0 * (1.0 + params.gamma);
    if order >= 1 {
        // beta_i = b_i^2 evaluated at the shifted argument v = K - q.
        let beta: [f64; 3] = std::array::from_fn(|i| {
            let b = pair_amplitude(params.gamma, params.k[i] - q[i]);
            b * b
        });
        let s1: f64 = beta.iter().sum();
        zhat -= s1 / (2.0 * params.lambda);
        if order >= 3 {
            let s2: f64 = beta.iter().map(|b| b * b).sum();
            zhat -= (2.0 * s1 * s1 - 3.0 * s2) / (8.0 * params.lambda.powi(3));
        }
    }
    Ok(zhat + epsilon(q))
}

// ---------------------------------------------------------------------------
// Cached fiber evaluation over a grid
// ---------------------------------------------------------------------------

/// Shared tables for evaluating fiber determinants at every node of a grid:
/// one Laplace panel rule and per-axis factor tables
/// `ive(0, b_c(x_j) * t_k)`, so a node evaluation is three table rows, an
/// exponential, and a dot product.
///
/// Nodes whose decay `D = E_min - z` falls outside the window resolved by
/// the shared horizon (truncation `e^(-D T) > e^-45`, or `D` too fast for
/// the first panel) transparently fall back to one-shot quadrature with its
/// own tailored horizon, so accuracy is uniform in `z`.
pub struct FiberCache {
    params: ModelParams,
    grid: TorusGrid,
    rule: PanelRule,
    /// `factor[c][j * nt + k] = ive(0, axis_b[c][j] * t_k)`.
    factor: [Vec<f64>; 3],
    /// `axis_b[c][j] = pair_amplitude(gamma, K_c - x_j)`.
    axis_b: [Vec<f64>; 3],
    /// `axis_emin[c][j] = (1 - cos x_j) + 1 + gamma - axis_b[c][j]`;
    /// summing the three axes gives `E_min(K, q)` at a node.
    axis_emin: [Vec<f64>; 3],
}

impl FiberCache {
    /// Build the tables for all nodes of `grid`.
    pub fn new(params: &ModelParams, grid: TorusGrid) -> Self {
        let rule = log_panel_rule(CACHE_HORIZON);
        let nt = rule.nodes.len();
        let mut factor: [Vec<f64>; 3] = Default::default();
        let mut axis_b: [Vec<f64>; 3] = Default::default();
        let mut axis_emin: [Vec<f64>; 3] = Default::default();
        for c in 0..3 {
            let nodes = grid.axis_nodes();
            let mut fac = vec![0.0; nodes.len() * nt];
            let mut bs = Vec::with_capacity(nodes.len());
            let mut em = Vec::with_capacity(nodes.len());
            for (j, &x) in nodes.iter().enumerate() {
                let b = pair_amplitude(params.gamma, params.k[c] - x);
                bs.push(b);
                em.push((1.0 - x.cos()) + 1.0 + params.gamma - b);
                for (k, &t) in rule.nodes.iter().enumerate() {
                    fac[j * nt + k] = ive(0, b * t);
                }
            }
            factor[c] = fac;
            axis_b[c] = bs;
            axis_emin[c] = em;
        }
        FiberCache {
            params: *params,
            grid,
            rule,
            factor,
            axis_b,
            axis_emin,
        }
    }

    /// The grid the tables were built for.
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Model parameters the tables were built for.
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Band-edge energy `E_min(K, q)` of the node.
    pub fn emin_at(&self, idx: [usize; 3]) -> f64 {
        self.axis_emin[0][idx[0]] + self.axis_emin[1][idx[1]] + self.axis_emin[2][idx[2]]
    }

    /// Pair amplitudes of the node.
    pub fn bs_at(&self, idx: [usize; 3]) -> [f64; 3] {
        [
            self.axis_b[0][idx[0]],
            self.axis_b[1][idx[1]],
            self.axis_b[2][idx[2]],
        ]
    }

    /// Assemble one node's evaluation state: three factor-table rows and,
    /// when the amplitudes allow it, an algebraic continuation of the
    /// quadrature past the shared horizon.
    fn node_eval(&self, idx: [usize; 3]) -> NodeEval<'_> {
        let nt = self.rule.nodes.len();
        let bs = self.bs_at(idx);
        let bmin = bs[0].min(bs[1]).min(bs[2]);
        // The tail expands every Bessel factor asymptotically, so it is
        // trusted only when the slowest amplitude has left the power-series
        // regime by the horizon; this mirrors the `30 / b_min` horizon rule
        // of the one-shot integrator.
        let tail = if bmin * self.rule.t_max >= TAIL_SAFE_PRODUCT {
            LaplaceTail::new([0, 0, 0], bs, self.rule.t_max).ok()
        } else {
            None
        };
        NodeEval {
            lambda: self.params.lambda,
            emin: self.emin_at(idx),
            bs,
            weights: &self.rule.weights,
            nodes_t: &self.rule.nodes,
            rows: [
                &self.factor[0][idx[0] * nt..(idx[0] + 1) * nt],
                &self.factor[1][idx[1] * nt..(idx[1] + 1) * nt],
                &self.factor[2][idx[2] * nt..(idx[2] + 1) * nt],
            ],
            horizon: self.rule.t_max,
            tail,
        }
    }

    /// Fredholm determinant `Delta(q_idx, z)` at a grid node.
    ///
    /// # Errors
    ///
    /// `DomainError` when `z` is above the node's band edge or the fallback
    /// integral diverges.
    pub fn delta_at(&self, idx: [usize; 3], z: f64) -> Result<f64> {
        self.node_eval(idx).delta(z)
    }

    /// Fiber spectral point at a grid node (root of the determinant, or the
    /// convention value), sharing the solver of [`fiber_eigenvalue`].
    pub fn fiber_value(&self, idx: [usize; 3]) -> FiberSolution {
        self.fiber_value_opts(idx, false, tol::ROOT_REL)
    }

    /// Node solve with scan-grade options: `assume_bound` skips the
    /// band-edge existence integral when the caller has a global bound
    /// criterion, and a loose `rel_tol` is enough while ranking nodes (the
    /// selected extremizers are re-solved at full precision afterwards).
    fn fiber_value_opts(&self, idx: [usize; 3], assume_bound: bool, rel_tol: f64) -> FiberSolution {
        let ev = self.node_eval(idx);
        let bound = self.params.lambda > 0.0
            && (assume_bound || edge_binds(self.params.lambda, ev.laplace(0.0)));
        let (z, is_bound) = solve_fiber(ev.emin, self.params.lambda, bound, rel_tol, &|z| {
            ev.delta(z)
        });
        FiberSolution {
            q: self.grid.node(self.grid.flat_index(idx)),
            z,
            is_bound,
        }
    }
}

/// One grid node's evaluation state, borrowed from a [`FiberCache`]: the
/// shared time grid, the node's three factor rows, and an optional
/// algebraic tail for the range beyond the shared horizon.
struct NodeEval<'a> {
    lambda: f64,
    emin: f64,
    bs: [f64; 3],
    weights: &'a [f64],
    nodes_t: &'a [f64],
    rows: [&'a [f64]; 3],
    horizon: f64,
    /// `None` when an amplitude is too small for the asymptotic tail; such
    /// nodes defer small decays to the one-shot integrator, which carries
    /// the divergence analysis.
    tail: Option<LaplaceTail>,
}

impl NodeEval<'_> {
    /// Band-edge Laplace transform `L(D) = Int e^(-D t) prod_c I~0(b_c t) dt`
    /// at decay `D = E_min - z`: tabulated head plus algebraic tail, with a
    /// one-shot fallback when the decay is too fast for the first panel of
    /// the shared rule or the node has no valid tail.
    ///
    /// # Errors
    ///
    /// `DomainError` from the fallback when the integral diverges
    /// (fewer than three effective amplitudes at vanishing decay).
    fn laplace(&self, decay: f64) -> Result<f64> {
        if decay > CACHE_DECAY_MAX {
            return laplace_product_integral([0, 0, 0], self.bs, decay);
        }
        let tail_matters = decay * self.horizon < HEAD_CUTOFF;
        if self.tail.is_none() && tail_matters {
            return laplace_product_integral([0, 0, 0], self.bs, decay);
        }
        let mut l = 0.0;
        for (k, &t) in self.nodes_t.iter().enumerate() {
            // Nodes ascend, so everything past the cutoff is below e^-45
            // of the integrand scale.
            if decay * t > HEAD_CUTOFF {
                break;
            }
            l += self.weights[k]
                * self.rows[0][k]
                * self.rows[1][k]
                * self.rows[2][k]
                * (-decay * t).exp();
        }
        if tail_matters {
            if let Some(tail) = &self.tail {
                l += tail.eval(decay);
            }
        }
        Ok(l)
    }

    /// Fredholm determinant `1 - lambda L(E_min - z)` for this node.
    fn delta(&self, z: f64) -> Result<f64> {
        let decay = self.emin - z;
        if !z.is_finite() || decay < 0.0 {
            return Err(Error::DomainError(format!(
                "determinant needs z <= E_min = {:.6}, got z = {z:.6}",
                self.emin
            )));
        }
        if self.lambda == 0.0 {
            return Ok(1.0);
        }
        Ok(1.0 - self.lambda * self.laplace(decay)?)
    }
}

// ---------------------------------------------------------------------------
// The tau band and the assembled essential spectrum
// ---------------------------------------------------------------------------

/// Analytic gradient of the fiber eigenvalue, by implicit differentiation of
/// the determinant at its root:
///
/// ```text
/// dz/dq_i = sin q_i - (gamma sin(K_i - q_i) / b_i) * M1_i / M1,
/// M1   = Int t e^(-D t) prod_c ive(0, b_c t) dt,
/// M1_i = like M1 with ive(1, b_i t) replacing the axis-i factor.
/// ```
///
/// Returns the gradient together with the eigenvalue.
///
/// # Errors
///
/// `DomainError` when the fiber is unbound (the convention branch is not
/// differentiable) or the root sits too close to the band edge for the
/// time-moment quadrature.
fn fiber_gradient(params: &ModelParams, q: [f64; 3]) -> Result<([f64; 3], f64)> {
    let sol = fiber_eigenvalue(params, q);
    if !sol.is_bound {
        return Err(Error::DomainError(
            "fiber gradient needs a bound state below the band".into(),
        ));
    }
    let emin = fiber_band_min(params, q);
    let decay = emin - sol.z;
    let bs = pair_bs(params, q);
    let m1 = laplace_time_moment([0, 0, 0], bs, decay, 1)?;
    let mut grad = [0.0; 3];
    for i in 0..3 {
        let u = params.k[i] - q[i];
        let ratio = if bs[i] > 1e-9 {
            let mut orders = [0u32; 3];
            orders[i] = 1;
            let m1i = laplace_time_moment(orders, bs, decay, 1)?;
            params.gamma * u.sin() / bs[i] * (m1i / m1)
        } else {
            // b_i -> 0 limit: ive(1, b t) ~ b t / 2, so the amplitude in the
            // denominator cancels against the moment.
            let m2 = laplace_time_moment([0, 0, 0], bs, decay, 2)?;
            params.gamma * u.sin() * m2 / (2.0 * m1)
        };
        grad[i] = q[i].sin() - ratio;
    }
    Ok((grad, sol.z))
}

/// Solve a 3x3 linear system by Gaussian elimination with partial pivoting;
/// `None` when the matrix is numerically singular.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).fold(col, |p, r| if m[r][col].abs() > m[p][col].abs() { r } else { p });
        m.swap(col, piv);
        if m[col][col].abs() < 1e-14 {
            return None;
        }
        for r in col + 1..3 {
            let f = m[r][col] / m[col][col];
            for c in col..4 {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut s = m[i][3];
        for j in i + 1..3 {
            s -= m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    Some(x)
}

/// Refine a tau-band extremum from a grid seed by damped Newton steps on the
/// analytic gradient (`sign = +1` minimizes `z`, `-1` maximizes).  Any
/// failure along the way keeps the best value found so far, so the result
/// never falls behind the seed.
fn refine_extremum(
    params: &ModelParams,
    q0: [f64; 3],
    sign: f64,
    v0: f64,
) -> ([f64; 3], f64) {
    let mut q = q0;
    let mut best_q = q0;
    let mut best_v = v0;
    for _ in 0..30 {
        let Ok((g, z)) = fiber_gradient(params, q) else {
            break;
        };
        if sign * (z - best_v) < 0.0 {
            best_q = q;
            best_v = z;
        }
        let gnorm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if gnorm < tol::EXTREMUM_GRAD {
            break;
        }
        // Forward-difference Hessian of z from three extra gradients.
        let h = 1e-5;
        let mut hess = [[0.0f64; 3]; 3];
        let mut have_hess = true;
        for j in 0..3 {
            let mut qj = q;
            qj[j] += h;
            match fiber_gradient(params, qj) {
                Ok((gj, _)) => {
                    for i in 0..3 {
                        hess[i][j] = (gj[i] - g[i]) / h;
                    }
                }
                Err(_) => {
                    have_hess = false;
                    break;
                }
            }
        }
        let mut step = if have_hess {
            for i in 0..3 {
                for j in i + 1..3 {
                    let s = 0.5 * (hess[i][j] + hess[j][i]);
                    hess[i][j] = s;
                    hess[j][i] = s;
                }
            }
            let neg_g = [-g[0], -g[1], -g[2]];
            solve3(hess, neg_g)
        } else {
            None
        }
        .unwrap_or([-sign * g[0], -sign * g[1], -sign * g[2]]);
        // A Newton step toward a saddle is rejected by the descent check
        // below; replace an ascent direction by the gradient direction.
        let descent: f64 = (0..3).map(|i| sign * g[i] * step[i]).sum();
        if descent >= 0.0 {
            step = [-sign * g[0], -sign * g[1], -sign * g[2]];
        }
        let snorm = (step[0] * step[0] + step[1] * step[1] + step[2] * step[2]).sqrt();
        if snorm > 0.3 {
            let f = 0.3 / snorm;
            step.iter_mut().for_each(|s| *s *= f);
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let qt = [q[0] + t * step[0], q[1] + t * step[1], q[2] + t * step[2]];
            let sol = fiber_eigenvalue(params, qt);
            if sol.is_bound && sign * (sol.z - z) < 0.0 {
                q = qt;
                if sign * (sol.z - best_v) < 0.0 {
                    best_q = qt;
                    best_v = sol.z;
                }
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (best_q, best_v)
}

/// 1-D extremum of the per-axis band-edge profile
/// `g(x) = (1 - cos x) + 1 + gamma - b(K_c - x)` (`sign = +1` min, `-1`
/// max): dense scan plus golden-section refinement on the bracketing cell.
fn axis_extremum(gamma: f64, kc: f64, sign: f64) -> (f64, f64) {
    let g = |x: f64| (1.0 - x.cos()) + 1.0 + gamma - pair_amplitude(gamma, kc - x);
    let m = 720;
    let mut best_j = 0;
    let mut best = f64::INFINITY;
    for j in 0..m {
        let x = -PI + crate::torus_grid::TWO_PI * (j as f64 + 0.5) / m as f64;
        let v = sign * g(x);
        if v < best {
            best = v;
            best_j = j;
        }
    }
    let cell = crate::torus_grid::TWO_PI / m as f64;
    let mut a = -PI + cell * (best_j as f64 - 0.5);
    let mut b = a + 2.0 * cell;
    // Golden-section: the profile is smooth and unimodal on the bracket.
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = sign * g(x1);
    let mut f2 = sign * g(x2);
    for _ in 0..120 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = sign * g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = sign * g(x2);
        }
    }
    let x = wrap_angle(0.5 * (a + b));
    (x, g(x))
}

/// Extremization when not every fiber binds: exact separable treatment at
/// `lambda = 0`, otherwise a plain grid scan of the (continuous but only
/// piecewise-smooth) convention values without refinement.
fn tau_band_fallback(params: &ModelParams) -> TauBand {
    if params.lambda == 0.0 {
        // tau set = range of q -> E_min(K, q), which separates per axis.
        let mut tau_min = 0.0;
        let mut tau_max = 0.0;
        let mut argmin = [0.0; 3];
        let mut argmax = [0.0; 3];
        for c in 0..3 {
            let (xlo, glo) = axis_extremum(params.gamma, params.k[c], 1.0);
            let (xhi, ghi) = axis_extremum(params.gamma, params.k[c], -1.0);
            tau_min += glo;
            tau_max += ghi;
            argmin[c] = xlo;
            argmax[c] = xhi;
        }
        return TauBand {
            tau_min,
            tau_max,
            argmin_q: argmin,
            argmax_q: argmax,
        };
    }
    let grid = make_grid(FALLBACK_SCAN_N, 0.0).expect("internal fallback grid");
    let cache = FiberCache::new(params, grid);
    let vals: Vec<f64> = (0..cache.grid().len())
        .into_par_iter()
        .map(|f| {
            cache
                .fiber_value_opts(cache.grid().split_index(f), false, SCAN_REL_TOL)
                .z
        })
        .collect();
    let (mut imin, mut imax) = (0usize, 0usize);
    for (i, &v) in vals.iter().enumerate() {
        if v < vals[imin] {
            imin = i;
        }
        if v > vals[imax] {
            imax = i;
        }
    }
    // Re-solve the winners at full precision; the scan tolerance only had
    // to rank the nodes.
    let lo = cache.fiber_value(cache.grid().split_index(imin));
    let hi = cache.fiber_value(cache.grid().split_index(imax));
    TauBand {
        tau_min: lo.z,
        tau_max: hi.z,
        argmin_q: lo.q,
        argmax_q: hi.q,
    }
}

/// The two-particle branch `[tau_min, tau_max]` with its extremizing fibers.
///
/// Since `lambda_*(q) <= (1 + gamma) / W` for every fiber (the amplitudes
/// are largest at `q = K`, where the threshold integral is smallest), the
/// branch is a genuine eigenvalue sweep whenever
/// `lambda > (1 + gamma) / W`; then `K = 0` has the exact extremizers
/// `q = 0` and `q = (pi, pi, pi)`, and general `K` is handled by a grid scan
/// (first-found node in flat order seeds each basin) plus Newton refinement
/// on the analytic gradient.  Below that coupling the convention values are
/// extremized directly ([`tau_band_fallback`]).
pub fn tau_band(params: &ModelParams) -> TauBand {
    let all_bound = params.lambda * watson_w() / (1.0 + params.gamma) > 1.0 + 1e-12;
    if !all_bound {
        return tau_band_fallback(params);
    }
    if params.is_k_zero() {
        let q_lo = [0.0; 3];
        let q_hi = [PI; 3];
        return TauBand {
            tau_min: fiber_eigenvalue(params, q_lo).z,
            tau_max: fiber_eigenvalue(params, q_hi).z,
            argmin_q: q_lo,
            argmax_q: q_hi,
        };
    }
    let grid = make_grid(TAU_SCAN_N, 0.0).expect("internal scan grid");
    let cache = FiberCache::new(params, grid);
    // Every fiber is bound here, so the scan skips per-node existence
    // integrals and ranks nodes at loose tolerance.
    let vals: Vec<f64> = (0..cache.grid().len())
        .into_par_iter()
        .map(|f| {
            cache
                .fiber_value_opts(cache.grid().split_index(f), true, SCAN_REL_TOL)
                .z
        })
        .collect();
    let (mut imin, mut imax) = (0usize, 0usize);
    for (i, &v) in vals.iter().enumerate() {
        if v < vals[imin] {
            imin = i;
        }
        if v > vals[imax] {
            imax = i;
        }
    }
    let seed_lo = cache.fiber_value_opts(cache.grid().split_index(imin), true, tol::ROOT_REL);
    let seed_hi = cache.fiber_value_opts(cache.grid().split_index(imax), true, tol::ROOT_REL);
    let (qmin, tau_min) = refine_extremum(params, seed_lo.q, 1.0, seed_lo.z);
    let (qmax, tau_max) = refine_extremum(params, seed_hi.q, -1.0, seed_hi.z);
    TauBand {
        tau_min,
        tau_max,
        argmin_q: [
            wrap_angle(qmin[0]),
            wrap_angle(qmin[1]),
            wrap_angle(qmin[2]),
        ],
        argmax_q: [
            wrap_angle(qmax[0]),
            wrap_angle(qmax[1]),
            wrap_angle(qmax[2]),
        ],
    }
}

/// The essential spectrum at fixed `K`: two-particle branch, three-particle
/// band, and the gap between them when `tau_max < E_min(K)`.
pub fn essential_spectrum(params: &ModelParams) -> SpectralBands {
    let tau = tau_band(params);
    let (e_lo, e_hi) = band_extrema(params);
    debug_assert!(tau.tau_min <= tau.tau_max + 1e-12);
    debug_assert!(e_lo <= e_hi);
    let gap = if tau.tau_max < e_lo {
        Some((tau.tau_max, e_lo))
    } else {
        None
    };
    SpectralBands {
        two_particle: (tau.tau_min, tau.tau_max),
        three_particle: (e_lo, e_hi),
        gap,
        argmin_q: tau.argmin_q,
        argmax_q: tau.argmax_q,
    }
}
