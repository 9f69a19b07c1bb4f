//! Uniform grids, quadrature, and node-level symmetries on the torus.
//!
//! All integrals in this crate live on the three-dimensional torus
//! `T^3 = (-pi, pi]^3`.  They are discretized by tensor-product uniform
//! (trapezoidal/midpoint) rules, which are spectrally accurate for the smooth
//! periodic integrands that arise away from the spectrum: the quadrature
//! error of an analytic periodic integrand decays faster than any fixed power
//! of `1/n`.  Integrable singularities (such as `1/eps(p)` at `p = 0`) are
//! handled either by half-cell offset grids, which avoid the singular node,
//! or by exact Laplace-transform reductions in [`crate::special`].
//!
//! Nodes are indexed lexicographically with axis 1 fastest:
//! `flat = i1 + n*i2 + n^2*i3`.  Every module shares this layout.
//!
//! For symmetry decompositions at total quasi-momentum zero the node set must
//! be closed under the involutions `p -> -p` and `p -> pi_bar - p` (with
//! `pi_bar = (pi,pi,pi)`), which holds exactly for `offset = 0` and even `n`;
//! [`symmetry_maps`] exposes those involutions, and axis permutations, as
//! index permutations.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Full circumference of one torus axis.
pub const TWO_PI: f64 = 2.0 * PI;

/// A uniform tensor-product grid on `(-pi, pi]^3`.
///
/// Per-axis nodes are `p_j = -pi + 2*pi*(j + offset)/n` for `j = 0..n-1`,
/// wrapped by `2*pi` into `(-pi, pi]`.  The same node list is used on each of
/// the three axes.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusGrid {
    n: usize,
    offset: f64,
    axis_nodes: Vec<f64>,
    cell_weight: f64,
}

impl TorusGrid {
    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of nodes, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    /// `true` iff the grid has no nodes (never, for constructed grids).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node offset as a fraction of one cell, in `[0, 1)`.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Quadrature weight of one cell, `(2*pi/n)^3`.
    pub fn cell_weight(&self) -> f64 {
        self.cell_weight
    }

    /// The per-axis node list (length `n`), wrapped into `(-pi, pi]`.
    pub fn axis_nodes(&self) -> &[f64] {
        &self.axis_nodes
    }

    /// Decomposes a flat index into per-axis indices `[i1, i2, i3]`.
    pub fn split_index(&self, flat: usize) -> [usize; 3] {
        debug_assert!(flat < self.len());
        let i1 = flat % self.n;
        let rest = flat / self.n;
        [i1, rest % self.n, rest / self.n]
    }

    /// Flattens per-axis indices into the lexicographic index (axis 1
    /// fastest).
    pub fn flat_index(&self, ijk: [usize; 3]) -> usize {
        debug_assert!(ijk.iter().all(|&i| i < self.n));
        ijk[0] + self.n * (ijk[1] + self.n * ijk[2])
    }

    /// The node at a flat index.
    pub fn node(&self, flat: usize) -> [f64; 3] {
        let [i1, i2, i3] = self.split_index(flat);
        [
            self.axis_nodes[i1],
            self.axis_nodes[i2],
            self.axis_nodes[i3],
        ]
    }

    /// `true` iff the node set supports the `p -> -p` and `p -> pi_bar - p`
    /// involutions exactly: `offset = 0` and `n` even.
    pub fn is_symmetry_closed(&self) -> bool {
        self.offset == 0.0 && self.n % 2 == 0
    }

    /// `true` iff the node set is closed under `p -> -p` (and hence under
    /// the full hyperoctahedral group): offset `0`, where `j -> (n - j) mod
    /// n` is the mirror, or offset `1/2`, where `j -> n - 1 - j` is.
    ///
    /// Offset-half grids have *no* reflection-fixed nodes (neither `0` nor
    /// `pi` is sampled), which keeps kernel weights bounded near band
    /// extrema attained at those points.
    pub fn is_negation_closed(&self) -> bool {
        self.offset == 0.0 || self.offset == 0.5
    }

    /// Axis index of the mirror node at `-p_j`.
    ///
    /// # Panics
    ///
    /// If the grid is not negation-closed.
    pub fn negate_axis_index(&self, j: usize) -> usize {
        assert!(
            self.is_negation_closed(),
            "mirror index needs a negation-closed grid (offset 0 or 1/2)"
        );
        if self.offset == 0.0 {
            (self.n - j) % self.n
        } else {
            self.n - 1 - j
        }
    }
}

/// Builds a uniform grid with `n >= 2` points per axis and node offset in
/// `[0, 1)` cells.
///
/// # Errors
///
/// `InvalidArgument` if `n < 2` or `offset` is outside `[0, 1)`.
pub fn make_grid(n: usize, offset: f64) -> Result<TorusGrid> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 2 points per axis, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&offset) || !offset.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "grid offset must lie in [0, 1), got {offset}"
        )));
    }
    let h = TWO_PI / n as f64;
    let axis_nodes = (0..n)
        .map(|j| {
            let mut x = -PI + (j as f64 + offset) * h;
            // Wrap into (-pi, pi]; only the j = 0, offset = 0 node (-pi)
            // needs it, mapping to +pi.
            if x <= -PI {
                x += TWO_PI;
            }
            x
        })
        .collect();
    Ok(TorusGrid {
        n,
        offset,
        axis_nodes,
        cell_weight: h * h * h,
    })
}

/// A real-valued function sampled on all `n^3` nodes of a grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    /// The grid the samples live on.
    pub grid: TorusGrid,
    /// Sample values in lexicographic node order (length `n^3`).
    pub values: Vec<f64>,
}

impl GridFunction {
    /// Wraps existing samples, checking the length against the grid.
    ///
    /// # Errors
    ///
    /// `InvalidArgument` if `values.len() != n^3`.
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "grid function needs {} values for n = {}, got {}",
                grid.len(),
                grid.n(),
                values.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        GridFunction { grid, values }
    }
}

/// Midpoint/trapezoidal quadrature: `cell_weight * sum(values)`, a
/// deterministic approximation of the integral over `(-pi, pi]^3`.
///
/// Summation is compensated (Kahan), so cancellation-heavy integrands such as
/// pure Fourier modes come out at the `1e-14` level even on large grids.
pub fn quadrature(f: &GridFunction) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for &v in &f.values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    f.grid.cell_weight() * sum
}

/// Average of the samples: `quadrature / (2*pi)^3`, the normalized integral
/// used by the Birman-Schwinger kernels.
pub fn grid_mean(f: &GridFunction) -> f64 {
    quadrature(f) / (TWO_PI * TWO_PI * TWO_PI)
}

/// Node-level symmetry maps of a symmetry-closed grid.
///
/// Each map is a permutation of `{0, .., n^3-1}` acting on flat node
/// indices; applying a map to a [`GridFunction`] means permuting its values.
#[derive(Debug, Clone)]
pub struct SymmetryMaps {
    n: usize,
    negate: Vec<u32>,
    shift_pi: Vec<u32>,
}

impl SymmetryMaps {
    /// Index permutation of `p -> -p` (an involution).
    pub fn negate(&self) -> &[u32] {
        &self.negate
    }

    /// Index permutation of `p -> p + pi_bar` (an involution), where
    /// `pi_bar = (pi, pi, pi)`.
    pub fn shift_pi(&self) -> &[u32] {
        &self.shift_pi
    }

    /// Index permutation of the axis relabeling `p -> (p_{s[0]}, p_{s[1]},
    /// p_{s[2]})`.
    ///
    /// # Errors
    ///
    /// `InvalidArgument` if `sigma` is not a permutation of `{0, 1, 2}`.
    pub fn permute_axes(&self, sigma: [usize; 3]) -> Result<Vec<u32>> {
        let mut seen = [false; 3];
        for &s in &sigma {
            if s > 2 || seen[s] {
                return Err(Error::InvalidArgument(format!(
                    "axis permutation must be a permutation of {{0,1,2}}, got {sigma:?}"
                )));
            }
            seen[s] = true;
        }
        let n = self.n;
        let mut map = vec![0u32; n * n * n];
        for (flat, entry) in map.iter_mut().enumerate() {
            let i = [flat % n, (flat / n) % n, flat / (n * n)];
            let j = [i[sigma[0]], i[sigma[1]], i[sigma[2]]];
            *entry = (j[0] + n * (j[1] + n * j[2])) as u32;
        }
        Ok(map)
    }
}

/// Builds the symmetry maps of a grid.
///
/// # Errors
///
/// `Unsupported` unless the grid is symmetry-closed (`offset = 0`, even `n`):
/// on other grids negation does not map the node set to itself.
pub fn symmetry_maps(grid: &TorusGrid) -> Result<SymmetryMaps> {
    if !grid.is_symmetry_closed() {
        return Err(Error::Unsupported(format!(
            "symmetry maps need offset 0 and even n; grid has n = {}, offset = {}",
            grid.n(),
            grid.offset()
        )));
    }
    let n = grid.n();
    // Per-axis involutions: j -> (n - j) mod n sends node x_j to -x_j
    // (mod 2*pi); j -> j + n/2 (mod n) shifts by pi.
    let neg1: Vec<usize> = (0..n).map(|j| (n - j) % n).collect();
    let shift1: Vec<usize> = (0..n).map(|j| (j + n / 2) % n).collect();
    let len = grid.len();
    let mut negate = vec![0u32; len];
    let mut shift_pi = vec![0u32; len];
    for flat in 0..len {
        let [i1, i2, i3] = grid.split_index(flat);
        negate[flat] = grid.flat_index([neg1[i1], neg1[i2], neg1[i3]]) as u32;
        shift_pi[flat] = grid.flat_index([shift1[i1], shift1[i2], shift1[i3]]) as u32;
    }
    Ok(SymmetryMaps {
        n,
        negate,
        shift_pi,
    })
}
