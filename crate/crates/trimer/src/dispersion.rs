//! Closed-form energy functions of the three-particle model and their exact
//! extrema.
//!
//! One particle (the "core", relative mass `1/gamma`) interacts with two
//! identical fermions through a zero-range attraction.  After separating the
//! total quasi-momentum `K`, the free fiber energy is
//!
//! ```text
//! E(p, q) = eps(p) + eps(q) + gamma * eps(K - p - q),
//! eps(p)  = sum_i (1 - cos p_i),
//! ```
//!
//! with `p`, `q` the fermion quasi-momenta.  Two structural facts drive all
//! the numerics downstream:
//!
//! * `E` splits into three independent coordinate blocks
//!   `f_c(a, b) = (1 - cos a) + (1 - cos b) + gamma*(1 - cos(K_c - a - b))`,
//!   so global extrema reduce to three two-dimensional optimizations; and
//! * minimizing over one fermion momentum alone is exact per axis:
//!   `min_a [(1 - cos a) + gamma*(1 - cos(t - a))] = 1 + gamma - b(t)` with
//!   the pair amplitude `b(t) = sqrt(1 + gamma^2 + 2*gamma*cos t)`, which
//!   yields the closed-form fiber band `[fiber_band_min, fiber_band_max]`.
//!
//! At `K = 0` the energy further splits into even and odd parts under
//! `(p, q) -> (-p, q)`; the even part is bounded by the constant
//! `gamma_hat = 3*(2 + gamma + 1/gamma)`, which controls the convergent
//! Neumann series used by the weak-coupling analysis.

use std::f64::consts::PI;

use crate::torus_grid::TWO_PI;
use crate::{Error, Result};

/// Model parameters of one fiber Hamiltonian.
///
/// `gamma` is the fermion/core mass ratio (`> 0`), `lambda` the zero-range
/// coupling strength (`>= 0`), and `k` the conserved total quasi-momentum,
/// componentwise in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Mass ratio, `> 0`.
    pub gamma: f64,
    /// Coupling strength, `>= 0`.
    pub lambda: f64,
    /// Total quasi-momentum, each component in `(-pi, pi]`.
    pub k: [f64; 3],
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut w = x - TWO_PI * (x / TWO_PI).round();
    if w <= -PI {
        w += TWO_PI;
    }
    w
}

impl ModelParams {
    /// Validates parameters and wraps `k` into `(-pi, pi]` componentwise.
    ///
    /// # Errors
    ///
    /// `InvalidArgument` for non-finite input, `gamma <= 0`, or
    /// `lambda < 0`.
    pub fn new(gamma: f64, lambda: f64, k: [f64; 3]) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "mass ratio must be a positive real, got {gamma}"
            )));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "coupling must be a nonnegative real, got {lambda}"
            )));
        }
        if k.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "quasi-momentum must be finite, got {k:?}"
            )));
        }
        Ok(ModelParams {
            gamma,
            lambda,
            k: [wrap_angle(k[0]), wrap_angle(k[1]), wrap_angle(k[2])],
        })
    }

    /// `true` iff the total quasi-momentum is exactly zero, the only fiber
    /// with the full parity/permutation symmetry group.
    pub fn is_k_zero(&self) -> bool {
        self.k == [0.0, 0.0, 0.0]
    }

    /// The even-part bound `gamma_hat = 3*(2 + gamma + 1/gamma)`.
    pub fn gamma_hat(&self) -> f64 {
        gamma_hat(self.gamma)
    }
}

/// Lattice dispersion `eps(p) = sum_i (1 - cos p_i)`, with values in
/// `[0, 6]`.
pub fn epsilon(p: [f64; 3]) -> f64 {
    (1.0 - p[0].cos()) + (1.0 - p[1].cos()) + (1.0 - p[2].cos())
}

/// Free fiber energy `E(p, q) = eps(p) + eps(q) + gamma * eps(K - p - q)`.
pub fn total_energy(params: &ModelParams, p: [f64; 3], q: [f64; 3]) -> f64 {
    let r = [
        params.k[0] - p[0] - q[0],
        params.k[1] - p[1] - q[1],
        params.k[2] - p[2] - q[2],
    ];
    epsilon(p) + epsilon(q) + params.gamma * epsilon(r)
}

/// The even-part bound `gamma_hat = 3*(2 + gamma + 1/gamma) >= 12`.
pub fn gamma_hat(gamma: f64) -> f64 {
    3.0 * (2.0 + gamma + 1.0 / gamma)
}

/// Even/odd decomposition of the `K = 0` fiber energy under
/// `(p, q) -> (-p, q)`.
///
/// `e_s` is the odd part, `e_c` the even part, and
/// `e_hat_c = gamma_hat - e_c` the shifted even part whose absolute value
/// never exceeds `gamma_hat` (the fact behind the convergent resolvent
/// series at weak coupling).
#[derive(Debug, Clone, Copy)]
pub struct EvenOddSplit {
    /// Even part of the energy, `>= 0`.
    pub e_c: f64,
    /// Odd part `gamma * sum_i sin p_i sin q_i`, with `|e_s| <= e_c`.
    pub e_s: f64,
    /// Shifted even part `gamma_hat - e_c`, with `|e_hat_c| <= gamma_hat`.
    pub e_hat_c: f64,
    /// The constant `gamma_hat = 3*(2 + gamma + 1/gamma)`.
    pub gamma_hat: f64,
}

/// Splits the `K = 0` fiber energy into even and odd parts.
///
/// Both `e_c` and `e_hat_c` are evaluated from their own trigonometric
/// formulas, so the identity `e_c = gamma_hat - e_hat_c` is a genuine
/// cross-check rather than a tautology.
pub fn even_odd_split(gamma: f64, p: [f64; 3], q: [f64; 3]) -> EvenOddSplit {
    let mut sin_sum = 0.0;
    let mut cos_sum = 0.0;
    for i in 0..3 {
        sin_sum += p[i].sin() * q[i].sin();
        cos_sum += p[i].cos() * q[i].cos();
    }
    let e_s = gamma * sin_sum;
    let e_c = epsilon(p) + epsilon(q) + 3.0 * gamma - gamma * cos_sum;
    let e_hat_c = (6.0 + 3.0 / gamma - epsilon(p) - epsilon(q)) + gamma * cos_sum;
    EvenOddSplit {
        e_c,
        e_s,
        e_hat_c,
        gamma_hat: gamma_hat(gamma),
    }
}

/// Pair-dispersion amplitude `b(t) = sqrt(1 + gamma^2 + 2*gamma*cos t)`,
/// the per-axis range of `cos a + gamma*cos(t - a)` over `a`.
pub fn pair_amplitude(gamma: f64, t: f64) -> f64 {
    let s = 1.0 + gamma * gamma + 2.0 * gamma * t.cos();
    // Roundoff can push s slightly negative at t = pi, gamma = 1.
    s.max(0.0).sqrt()
}

/// Closed-form fiber band minimum
/// `min_p E(p, q) = eps(q) + sum_c (1 + gamma - b(K_c - q_c))`.
pub fn fiber_band_min(params: &ModelParams, q: [f64; 3]) -> f64 {
    let mut e = epsilon(q);
    for c in 0..3 {
        e += 1.0 + params.gamma - pair_amplitude(params.gamma, params.k[c] - q[c]);
    }
    e
}

/// Closed-form fiber band maximum
/// `max_p E(p, q) = eps(q) + sum_c (1 + gamma + b(K_c - q_c))`.
pub fn fiber_band_max(params: &ModelParams, q: [f64; 3]) -> f64 {
    let mut e = epsilon(q);
    for c in 0..3 {
        e += 1.0 + params.gamma + pair_amplitude(params.gamma, params.k[c] - q[c]);
    }
    e
}

/// One coordinate block of the fiber energy:
/// `f(a, b) = (1 - cos a) + (1 - cos b) + gamma*(1 - cos(kc - a - b))`.
fn block_energy(gamma: f64, kc: f64, a: f64, b: f64) -> f64 {
    (1.0 - a.cos()) + (1.0 - b.cos()) + gamma * (1.0 - (kc - a - b).cos())
}

/// Extremizes one coordinate block by dense scan plus damped Newton polish
/// on the gradient.  `sign = 1.0` minimizes, `-1.0` maximizes.  Returns the
/// extremal value of `f` (not of `sign * f`).
fn extremize_block(gamma: f64, kc: f64, sign: f64) -> f64 {
    // Dense scan: the block is a trigonometric polynomial of degree one per
    // variable, so a 48 x 48 scan lands within one cell of the optimum.
    let n = 48;
    let h = TWO_PI / n as f64;
    let mut best = f64::INFINITY;
    let (mut a, mut b) = (0.0, 0.0);
    for i in 0..n {
        let ai = -PI + (i as f64 + 0.5) * h;
        for j in 0..n {
            let bj = -PI + (j as f64 + 0.5) * h;
            let v = sign * block_energy(gamma, kc, ai, bj);
            if v < best {
                best = v;
                a = ai;
                b = bj;
            }
        }
    }
    // Damped Newton on the gradient of sign * f.
    for _ in 0..60 {
        let u = kc - a - b;
        let ga = sign * (a.sin() - gamma * u.sin());
        let gb = sign * (b.sin() - gamma * u.sin());
        if ga.hypot(gb) <= crate::tol::EXTREMUM_GRAD {
            break;
        }
        let haa = sign * (a.cos() + gamma * u.cos());
        let hab = sign * (gamma * u.cos());
        let hbb = sign * (b.cos() + gamma * u.cos());
        let det = haa * hbb - hab * hab;
        let (mut da, mut db) = if det.abs() > 1e-14 {
            ((-ga * hbb + gb * hab) / det, (-gb * haa + ga * hab) / det)
        } else {
            // Singular Hessian: fall back to a small gradient step.
            (-ga, -gb)
        };
        // Clip the step so Newton cannot leave the scan cell's basin.
        let norm = da.hypot(db);
        if norm > 0.3 {
            da *= 0.3 / norm;
            db *= 0.3 / norm;
        }
        // Backtrack if the step does not decrease sign * f.
        let mut step = 1.0;
        let current = sign * block_energy(gamma, kc, a, b);
        for _ in 0..20 {
            let trial = sign * block_energy(gamma, kc, a + step * da, b + step * db);
            if trial <= current {
                a += step * da;
                b += step * db;
                break;
            }
            step *= 0.5;
        }
    }
    block_energy(gamma, kc, a, b)
}

/// Exact extrema of the free fiber energy over both momenta:
/// `(E_min(K), E_max(K))`.
///
/// The energy separates into three coordinate blocks, so the global extrema
/// are sums of three independent two-dimensional extrema, each found by a
/// dense scan with Newton polish (gradient norm below
/// [`crate::tol::EXTREMUM_GRAD`]).
pub fn band_extrema(params: &ModelParams) -> (f64, f64) {
    let mut emin = 0.0;
    let mut emax = 0.0;
    for c in 0..3 {
        emin += extremize_block(params.gamma, params.k[c], 1.0);
        emax += extremize_block(params.gamma, params.k[c], -1.0);
    }
    (emin, emax)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!(
            (a - b).abs() <= tol,
            "expected {a} == {b} within {tol}, off by {}",
            (a - b).abs()
        );
    }

    const PI_BAR: [f64; 3] = [PI, PI, PI];

    #[test]
    fn epsilon_attains_its_range() {
        assert_close(epsilon([0.0; 3]), 0.0, 0.0);
        assert_close(epsilon(PI_BAR), 6.0, 1e-15);
        assert_close(epsilon([PI / 2.0, 0.0, 0.0]), 1.0, 1e-15);
    }

    #[test]
    fn total_energy_examples() {
        let p0 = ModelParams::new(1.0, 0.0, [0.0; 3]).unwrap();
        assert_close(total_energy(&p0, [0.0; 3], [0.0; 3]), 0.0, 0.0);
        let p2 = ModelParams::new(2.0, 0.0, [0.0; 3]).unwrap();
        // K - p - q = -2*pi_bar wraps to 0, so the core contributes nothing.
        assert_close(total_energy(&p2, PI_BAR, PI_BAR), 12.0, 1e-12);
        let p = [PI, 0.0, 0.0];
        assert_close(total_energy(&p0, p, [0.0; 3]), 4.0, 1e-12);
    }

    #[test]
    fn params_are_validated_and_wrapped() {
        assert!(ModelParams::new(0.0, 1.0, [0.0; 3]).is_err());
        assert!(ModelParams::new(-1.0, 1.0, [0.0; 3]).is_err());
        assert!(ModelParams::new(1.0, -0.5, [0.0; 3]).is_err());
        assert!(ModelParams::new(1.0, f64::NAN, [0.0; 3]).is_err());
        let p = ModelParams::new(1.0, 1.0, [3.0 * PI, -PI, 0.5]).unwrap();
        assert_close(p.k[0], PI, 1e-12);
        assert_close(p.k[1], PI, 1e-12);
        assert_close(p.k[2], 0.5, 1e-15);
    }

    #[test]
    fn even_odd_split_matches_total_energy() {
        // Structured points plus a deterministic pseudo-random sweep.
        let gammas = [0.3, 1.0, 5.0];
        let mut x = 0.123_f64;
        let mut next = || {
            // Simple linear-congruential stream; reproducible and
            // dependency-free.
            x = (x * 16807.0 + 0.13).rem_euclid(1.0);
            (x - 0.5) * TWO_PI * 0.999
        };
        for &g in &gammas {
            let params = ModelParams::new(g, 0.0, [0.0; 3]).unwrap();
            for _ in 0..200 {
                let p = [next(), next(), next()];
                let q = [next(), next(), next()];
                let s = even_odd_split(g, p, q);
                assert_close(s.e_c + s.e_s, total_energy(&params, p, q), 1e-12);
                assert!(s.e_c >= -1e-12);
                assert!(s.e_s.abs() <= s.e_c + 1e-12);
                assert!(s.e_hat_c.abs() <= s.gamma_hat + 1e-12);
                assert_close(s.e_c, s.gamma_hat - s.e_hat_c, 1e-10);
            }
        }
    }

    #[test]
    fn even_odd_split_examples() {
        let s = even_odd_split(1.0, [0.0; 3], [0.0; 3]);
        assert_close(s.e_c, 0.0, 1e-15);
        assert_close(s.e_s, 0.0, 1e-15);
        assert_close(s.e_hat_c, 12.0, 1e-15);
        assert_close(s.gamma_hat, 12.0, 1e-15);
        // q = pi_bar kills every sine.
        let s = even_odd_split(2.5, [0.7, -0.2, 1.1], PI_BAR);
        assert_close(s.e_s, 0.0, 1e-15);
        let params = ModelParams::new(2.5, 0.0, [0.0; 3]).unwrap();
        assert_close(s.e_c, total_energy(&params, [0.7, -0.2, 1.1], PI_BAR), 1e-12);
    }

    #[test]
    fn fiber_band_bounds_enclose_samples() {
        let params = ModelParams::new(1.7, 0.0, [1.0, -0.5, 2.0]).unwrap();
        let q = [0.3, 0.9, -1.2];
        let lo = fiber_band_min(&params, q);
        let hi = fiber_band_max(&params, q);
        let mut x = 0.377_f64;
        let mut next = || {
            x = (x * 16807.0 + 0.17).rem_euclid(1.0);
            (x - 0.5) * TWO_PI * 0.999
        };
        for _ in 0..4000 {
            let p = [next(), next(), next()];
            let e = total_energy(&params, p, q);
            assert!(e >= lo - 1e-12 && e <= hi + 1e-12);
        }
        // Attainment: the energy separates per axis,
        // E = eps(q) + sum_c [(1 - cos p_c) + gamma (1 - cos(K_c - p_c - q_c))],
        // so dense 1-D scans recover the extrema to scan resolution
        // ((1 + gamma) h^2 / 8 ~ 2e-8 here) without a 3-D search.
        let m = 20_000;
        let mut scan_lo = 0.0;
        let mut scan_hi = 0.0;
        for c in 0..3 {
            let mut axis_lo = f64::INFINITY;
            let mut axis_hi = f64::NEG_INFINITY;
            for j in 0..m {
                let p = -PI + TWO_PI * (j as f64 + 0.5) / m as f64;
                let h = (1.0 - p.cos())
                    + params.gamma * (1.0 - (params.k[c] - p - q[c]).cos());
                axis_lo = axis_lo.min(h);
                axis_hi = axis_hi.max(h);
            }
            scan_lo += axis_lo;
            scan_hi += axis_hi;
        }
        let eps_q = epsilon(q);
        assert!((scan_lo + eps_q - lo).abs() < 1e-6);
        assert!((scan_hi + eps_q - hi).abs() < 1e-6);
    }

    #[test]
    fn band_extrema_known_values() {
        // K = 0: E_min = 0 for any gamma.
        for g in [0.4, 1.0, 3.0] {
            let params = ModelParams::new(g, 0.0, [0.0; 3]).unwrap();
            let (emin, emax) = band_extrema(&params);
            assert_close(emin, 0.0, 1e-11);
            assert!(emax <= 12.0 + 6.0 * g + 1e-9);
            assert!(emin <= emax);
        }
        // gamma = 1, K = 0: per-block max of 3 - cos a - cos b - cos(a+b)
        // is 4.5 at a = b = 2*pi/3, so E_max = 13.5.
        let params = ModelParams::new(1.0, 0.0, [0.0; 3]).unwrap();
        let (_, emax) = band_extrema(&params);
        assert_close(emax, 13.5, 1e-9);
    }

    #[test]
    fn band_extrema_agree_with_fiber_band_scan() {
        // min_q fiber_band_min must reproduce E_min; same for max.
        let params = ModelParams::new(2.2, 0.0, [0.9, 0.4, -2.5]).unwrap();
        let (emin, emax) = band_extrema(&params);
        let n = 60;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let h = TWO_PI / n as f64;
        // fiber_band_min/max separate per axis, so scan axes independently.
        for c in 0..3 {
            let mut axis_lo = f64::INFINITY;
            let mut axis_hi = f64::NEG_INFINITY;
            for j in 0..n {
                let qc = -PI + (j as f64 + 0.5) * h;
                let v_lo =
                    (1.0 - qc.cos()) + 1.0 + params.gamma - pair_amplitude(params.gamma, params.k[c] - qc);
                let v_hi =
                    (1.0 - qc.cos()) + 1.0 + params.gamma + pair_amplitude(params.gamma, params.k[c] - qc);
                axis_lo = axis_lo.min(v_lo);
                axis_hi = axis_hi.max(v_hi);
            }
            if lo == f64::INFINITY {
                lo = axis_lo;
                hi = axis_hi;
            } else {
                lo += axis_lo;
                hi += axis_hi;
            }
        }
        assert!(emin <= lo + 1e-9, "E_min {emin} above scan {lo}");
        assert!(emax >= hi - 1e-9, "E_max {emax} below scan {hi}");
        assert!(lo - emin < 0.01 && emax - hi < 0.01);
    }
}
