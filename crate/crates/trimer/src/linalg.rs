//! Dense symmetric eigensolvers and small factorizations.
//!
//! The spectral computations need three linear-algebra tools, all real
//! symmetric:
//!
//! * full eigendecomposition of dense matrices up to a few thousand rows
//!   (Householder tridiagonalization followed by implicit-shift QL, the
//!   classical EISPACK `tred2`/`tql2` pair), with and without eigenvectors;
//! * a few extreme eigenvalues of larger matrices (Lanczos with full
//!   reorthogonalization and a deterministic start vector); and
//! * Cholesky factorization with triangular solves for the small Gram
//!   matrices of the weak-coupling limit operators.
//!
//! Everything is deterministic: the Lanczos start vector comes from a fixed
//! SplitMix64 stream, never from an entropy source.

use crate::{Error, Result};

/// Dense real symmetric matrix, row-major full storage.
///
/// Only symmetry-respecting constructors are provided; consumers may assume
/// `at(i, j) == at(j, i)` exactly.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    n: usize,
    a: Vec<f64>,
}

impl SymMatrix {
    /// Zero matrix of size `n`.
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            a: vec![0.0; n * n],
        }
    }

    /// Builds from an entry function, evaluating only the upper triangle
    /// and mirroring it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.a[i * n + j] = v;
                m.a[j * n + i] = v;
            }
        }
        m
    }

    /// Wraps raw row-major storage, symmetrizing as `(A + A^T)/2` to kill
    /// roundoff asymmetry from independent entry evaluations.
    pub fn from_raw_symmetrized(n: usize, mut a: Vec<f64>) -> Self {
        assert_eq!(a.len(), n * n);
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (a[i * n + j] + a[j * n + i]);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        SymMatrix { n, a }
    }

    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    /// Raw row-major storage.
    pub fn raw(&self) -> &[f64] {
        &self.a
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            let mut s = 0.0;
            for (aij, xj) in row.iter().zip(x) {
                s += aij * xj;
            }
            *yi = s;
        }
    }

    /// Largest absolute entry (cheap norm bound used in tolerances).
    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

// ---------------------------------------------------------------------------
// Householder tridiagonalization + implicit QL
// ---------------------------------------------------------------------------

/// Householder reduction of the symmetric matrix stored in `z` (row-major,
/// size `n`) to tridiagonal form `(d, e)`; when `vectors` is set, `z` is
/// overwritten with the accumulated orthogonal transform.
fn tred2(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64], vectors: bool) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += z[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = z[i * n + l];
            } else {
                for k in 0..=l {
                    z[i * n + k] /= scale;
                    h += z[i * n + k] * z[i * n + k];
                }
                let f = z[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[i * n + l] = f - g;
                let mut fsum = 0.0;
                for j in 0..=l {
                    if vectors {
                        z[j * n + i] = z[i * n + j] / h;
                    }
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[j * n + k] * z[i * n + k];
                    }
                    for k in j + 1..=l {
                        g += z[k * n + j] * z[i * n + k];
                    }
                    e[j] = g / h;
                    fsum += e[j] * z[i * n + j];
                }
                let hh = fsum / (h + h);
                for j in 0..=l {
                    let f = z[i * n + j];
                    let gj = e[j] - hh * f;
                    e[j] = gj;
                    for k in 0..=j {
                        z[j * n + k] -= f * e[k] + gj * z[i * n + k];
                    }
                }
            }
        } else {
            e[i] = z[i * n + l];
        }
        d[i] = h;
    }
    if vectors {
        d[0] = 0.0;
    }
    e[0] = 0.0;
    for i in 0..n {
        if vectors {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += z[i * n + k] * z[k * n + j];
                    }
                    for k in 0..i {
                        z[k * n + j] -= g * z[k * n + i];
                    }
                }
            }
            d[i] = z[i * n + i];
            z[i * n + i] = 1.0;
            for j in 0..i {
                z[j * n + i] = 0.0;
                z[i * n + j] = 0.0;
            }
        } else {
            d[i] = z[i * n + i];
        }
    }
}

/// Implicit-shift QL iteration on a tridiagonal `(d, e)`; eigenvalues land
/// in `d`.  With `z = Some(..)` the rotations are accumulated so that column
/// `i` of `z` becomes the eigenvector of `d[i]`.
fn tql2(d: &mut [f64], e: &mut [f64], n: usize, mut z: Option<&mut [f64]>) {
    if n == 0 {
        return;
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    // Absolute deflation floor: off-diagonals below machine precision times
    // the tridiagonal norm perturb eigenvalues by a negligible absolute
    // amount, and the purely relative test can stall (never deflating) when
    // adjacent diagonal entries happen to be tiny against the matrix scale,
    // as with the huge dynamic range of near-band-edge kernel weights.
    let anorm = (0..n)
        .map(|i| d[i].abs() + e[i].abs())
        .fold(0.0_f64, f64::max);
    let floor = f64::EPSILON * anorm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "QL iteration failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = i > l;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zm) = z.as_deref_mut() {
                    for k in 0..n {
                        f = zm[k * n + i + 1];
                        zm[k * n + i + 1] = s * zm[k * n + i] + c * f;
                        zm[k * n + i] = c * zm[k * n + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Sorts eigenvalues ascending, permuting eigenvector columns alongside.
fn sort_pairs(d: &mut [f64], z: Option<&mut [f64]>) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    d.copy_from_slice(&sorted);
    if let Some(z) = z {
        let old = z.to_vec();
        for (new_col, &old_col) in order.iter().enumerate() {
            for k in 0..n {
                z[k * n + new_col] = old[k * n + old_col];
            }
        }
    }
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let n = m.n();
    if n == 0 {
        return Vec::new();
    }
    let mut z = m.a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, n, &mut d, &mut e, false);
    tql2(&mut d, &mut e, n, None);
    sort_pairs(&mut d, None);
    d
}

/// Full eigendecomposition: eigenvalues ascending, and a row-major matrix
/// whose column `i` is the (unit) eigenvector of eigenvalue `i`.
pub fn sym_eigen(m: &SymMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.n();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut z = m.a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, n, &mut d, &mut e, true);
    tql2(&mut d, &mut e, n, Some(&mut z));
    sort_pairs(&mut d, Some(&mut z));
    (d, z)
}

// ---------------------------------------------------------------------------
// Lanczos for extreme eigenvalues of large matrices
// ---------------------------------------------------------------------------

/// Deterministic SplitMix64 stream for start vectors and tests.
pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform value in `(-1, 1)` from the stream.
pub(crate) fn splitmix_unit(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
}

/// Largest `k` eigenvalues (descending) of the operator given by `matvec`
/// on dimension `dim`, by Lanczos with full reorthogonalization.
///
/// Deterministic: the start vector comes from a fixed SplitMix64 seed.
/// Intended for matrices too large for [`sym_eigenvalues`]; accuracy is
/// about `1e-11 * |theta_1|` on the returned Ritz values.
pub fn lanczos_top_eigs(
    matvec: impl Fn(&[f64], &mut [f64]),
    dim: usize,
    k: usize,
    max_iter: usize,
) -> Vec<f64> {
    assert!(k >= 1);
    if dim == 0 {
        return Vec::new();
    }
    if dim <= k + 2 {
        // Tiny ambient space: build densely via basis vectors.
        let mut m = SymMatrix::zeros(dim);
        let mut x = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        for j in 0..dim {
            x.iter_mut().for_each(|v| *v = 0.0);
            x[j] = 1.0;
            matvec(&x, &mut y);
            for i in 0..dim {
                m.a[i * dim + j] = y[i];
            }
        }
        let m = SymMatrix::from_raw_symmetrized(dim, m.a);
        let mut vals = sym_eigenvalues(&m);
        vals.reverse();
        vals.truncate(k);
        return vals;
    }
    let m_max = max_iter.min(dim);
    let mut state = 0x5DEE_CE66_D1CE_4E5Bu64;
    let mut v: Vec<f64> = (0..dim).map(|_| splitmix_unit(&mut state)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut last_ritz: Vec<f64> = Vec::new();
    for j in 0..m_max {
        matvec(&basis[j], &mut w);
        if j > 0 {
            let beta = betas[j - 1];
            let prev = &basis[j - 1];
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= beta * pi;
            }
        }
        let alpha: f64 = w.iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
        alphas.push(alpha);
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= alpha * vi;
        }
        // Full reorthogonalization, twice for numerical safety.
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = w.iter().zip(b).map(|(a, c)| a * c).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= proj * bi;
                }
            }
        }
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Convergence check on the Ritz values every few steps.  A breakdown
        // (beta ~ 0) makes the residual estimate beta * |bottom row| vacuous:
        // the current Krylov space is invariant, but further copies of a
        // degenerate eigenvalue live outside it and only restarts reveal
        // them.  So a breakdown is accepted as convergence only after the
        // step count rules out hidden multiplicity up to the requested k.
        let steps = alphas.len();
        let saturated = steps >= (2 * k + 16).min(dim);
        if steps >= k
            && (steps % 8 == 0 || (beta < 1e-13 && saturated) || j + 1 == m_max)
        {
            let mut d = alphas.clone();
            let mut e = vec![0.0; steps];
            e[1..steps].copy_from_slice(&betas[..steps - 1]);
            // tql2 expects e shifted like tred2 output: e[i] couples i-1,i.
            let mut zmat = vec![0.0; steps * steps];
            for i in 0..steps {
                zmat[i * steps + i] = 1.0;
            }
            tql2(&mut d, &mut e, steps, Some(&mut zmat));
            sort_pairs(&mut d, Some(&mut zmat));
            let scale = d.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1e-300);
            let mut converged = true;
            for t in 0..k {
                let col = steps - 1 - t;
                let resid = beta * zmat[(steps - 1) * steps + col].abs();
                if resid > 1e-11 * scale {
                    converged = false;
                    break;
                }
            }
            last_ritz = d;
            if converged && (beta >= 1e-13 || saturated) {
                break;
            }
        }
        if beta < 1e-13 {
            // Invariant subspace exhausted; restart direction.
            let mut fresh: Vec<f64> = (0..dim).map(|_| splitmix_unit(&mut state)).collect();
            for b in &basis {
                let proj: f64 = fresh.iter().zip(b).map(|(a, c)| a * c).sum();
                for (fi, bi) in fresh.iter_mut().zip(b) {
                    *fi -= proj * bi;
                }
            }
            let norm = fresh.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-10 {
                break;
            }
            fresh.iter_mut().for_each(|x| *x /= norm);
            betas.push(0.0);
            basis.push(fresh);
            continue;
        }
        betas.push(beta);
        let next: Vec<f64> = w.iter().map(|x| x / beta).collect();
        basis.push(next);
    }
    if last_ritz.is_empty() {
        let steps = alphas.len();
        let mut d = alphas.clone();
        let mut e = vec![0.0; steps];
        if steps > 1 {
            e[1..steps].copy_from_slice(&betas[..steps - 1]);
        }
        tql2(&mut d, &mut e, steps, None);
        sort_pairs(&mut d, None);
        last_ritz = d;
    }
    last_ritz.reverse();
    last_ritz.truncate(k);
    last_ritz
}

/// Largest `k` eigenvalues (descending) of a dense symmetric matrix:
/// full QL below dimension 600, Lanczos above.
pub fn sym_top_eigs(m: &SymMatrix, k: usize) -> Vec<f64> {
    let n = m.n();
    if n == 0 {
        return Vec::new();
    }
    if n <= 600 {
        let mut vals = sym_eigenvalues(m);
        vals.reverse();
        vals.truncate(k.min(n));
        vals
    } else {
        lanczos_top_eigs(|x, y| m.matvec(x, y), n, k.min(n), 400)
    }
}

/// Extreme eigenvalues `(min, max)` of a dense symmetric matrix.
pub fn sym_extreme_eigs(m: &SymMatrix) -> (f64, f64) {
    let n = m.n();
    assert!(n > 0);
    if n <= 600 {
        let vals = sym_eigenvalues(m);
        (vals[0], vals[n - 1])
    } else {
        let top = lanczos_top_eigs(|x, y| m.matvec(x, y), n, 1, 400)[0];
        let bottom = -lanczos_top_eigs(
            |x, y| {
                m.matvec(x, y);
                y.iter_mut().for_each(|v| *v = -*v);
            },
            n,
            1,
            400,
        )[0];
        (bottom, top)
    }
}

// ---------------------------------------------------------------------------
// Cholesky for small Gram matrices
// ---------------------------------------------------------------------------

/// Cholesky factor `L` (lower, row-major) of a symmetric positive-definite
/// matrix.
///
/// # Errors
///
/// `IllConditioned` if a pivot drops below `1e-14` times the largest
/// diagonal entry (the Gram matrix is numerically singular).
pub fn cholesky_lower(m: &SymMatrix) -> Result<Vec<f64>> {
    let n = m.n();
    let scale = (0..n).fold(0.0f64, |s, i| s.max(m.at(i, i).abs())).max(1e-300);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m.at(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 1e-14 * scale {
                    return Err(Error::IllConditioned(format!(
                        "Cholesky pivot {s:.3e} at row {i} (scale {scale:.3e}); \
                         Gram matrix numerically singular"
                    )));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L x = b` in place (forward substitution), `L` lower row-major.
pub fn solve_lower(n: usize, l: &[f64], b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `L^T x = b` in place (back substitution), `L` lower row-major.
pub fn solve_lower_transpose(n: usize, l: &[f64], b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut state = seed;
        SymMatrix::from_fn(n, |_, _| splitmix_unit(&mut state))
    }

    #[test]
    fn small_known_spectra() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let m = SymMatrix::from_fn(2, |i, j| if i == j { 2.0 } else { 1.0 });
        let vals = sym_eigenvalues(&m);
        assert!((vals[0] - 1.0).abs() < 1e-13);
        assert!((vals[1] - 3.0).abs() < 1e-13);
        // Diagonal matrix is returned sorted.
        let m = SymMatrix::from_fn(3, |i, j| if i == j { [3.0, -1.0, 2.0][i] } else { 0.0 });
        let vals = sym_eigenvalues(&m);
        assert_eq!(vals.len(), 3);
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_reconstructs_the_matrix() {
        let n = 40;
        let m = random_sym(n, 7);
        let (vals, vecs) = sym_eigen(&m);
        // Check A v = lambda v for every pair, and orthonormality.
        let mut y = vec![0.0; n];
        for j in 0..n {
            let v: Vec<f64> = (0..n).map(|i| vecs[i * n + j]).collect();
            m.matvec(&v, &mut y);
            for i in 0..n {
                assert!(
                    (y[i] - vals[j] * v[i]).abs() < 1e-10 * m.max_abs() * n as f64,
                    "eigenpair {j} violated at row {i}"
                );
            }
            for jj in 0..=j {
                let dot: f64 = (0..n).map(|i| vecs[i * n + j] * vecs[i * n + jj]).sum();
                let target = if jj == j { 1.0 } else { 0.0 };
                assert!((dot - target).abs() < 1e-10);
            }
        }
        // Trace equals eigenvalue sum.
        let trace: f64 = (0..n).map(|i| m.at(i, i)).sum();
        let sum: f64 = vals.iter().sum();
        assert!((trace - sum).abs() < 1e-10 * n as f64);
    }

    #[test]
    fn lanczos_matches_dense_top() {
        let n = 300;
        let m = random_sym(n, 42);
        let dense = {
            let mut v = sym_eigenvalues(&m);
            v.reverse();
            v
        };
        let top = lanczos_top_eigs(|x, y| m.matvec(x, y), n, 5, 400);
        for t in 0..5 {
            assert!(
                (top[t] - dense[t]).abs() < 1e-8 * dense[0].abs().max(1.0),
                "Ritz value {t}: {} vs {}",
                top[t],
                dense[t]
            );
        }
        let (lo, hi) = sym_extreme_eigs(&m);
        assert!((hi - dense[0]).abs() < 1e-10 * dense[0].abs().max(1.0));
        assert!((lo - dense[n - 1]).abs() < 1e-10 * dense[0].abs().max(1.0));
    }

    #[test]
    fn lanczos_handles_degenerate_spectra() {
        // Projection-like matrix: eigenvalues 1 (multiplicity 3) and 0.
        let n = 50;
        let mut state = 9u64;
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                let v: Vec<f64> = (0..n).map(|_| splitmix_unit(&mut state)).collect();
                v
            })
            .collect();
        // Gram-Schmidt.
        let mut q: Vec<Vec<f64>> = Vec::new();
        for c in cols {
            let mut v = c;
            for b in &q {
                let proj: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= proj * bi;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            q.push(v);
        }
        let m = SymMatrix::from_fn(n, |i, j| q.iter().map(|b| b[i] * b[j]).sum());
        let top = lanczos_top_eigs(|x, y| m.matvec(x, y), n, 4, 400);
        assert!((top[0] - 1.0).abs() < 1e-9);
        assert!((top[1] - 1.0).abs() < 1e-9);
        assert!((top[2] - 1.0).abs() < 1e-9);
        assert!(top[3].abs() < 1e-9);
    }

    #[test]
    fn cholesky_round_trip() {
        // SPD matrix A = B B^T + I.
        let n = 6;
        let b = random_sym(n, 3);
        let mut a = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = if i == j { 1.0 } else { 0.0 };
                for k in 0..n {
                    s += b.at(i, k) * b.at(j, k);
                }
                a.a[i * n + j] = s;
            }
        }
        let l = cholesky_lower(&a).unwrap();
        // L L^T == A.
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += l[i * n + k] * l[j * n + k];
                }
                assert!((s - a.at(i, j)).abs() < 1e-11);
            }
        }
        // Solve round trip: x from L(L^T x) = rhs equals A^-1 rhs.
        let rhs: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let mut x = rhs.clone();
        solve_lower(n, &l, &mut x);
        solve_lower_transpose(n, &l, &mut x);
        let mut back = vec![0.0; n];
        a.matvec(&x, &mut back);
        for i in 0..n {
            assert!((back[i] - rhs[i]).abs() < 1e-10);
        }
        // Singular matrix is rejected.
        let sing = SymMatrix::from_fn(3, |_, _| 1.0);
        assert!(matches!(cholesky_lower(&sing), Err(Error::IllConditioned(_))));
    }
}
