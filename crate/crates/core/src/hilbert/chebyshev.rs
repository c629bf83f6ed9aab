//! Sparse real-symmetric operators and a Chebyshev expansion of the
//! propagator, used for the 2^N spin-chain basis where a dense
//! diagonalization per time step is too expensive.
//!
//! `exp(-i H dt) = exp(-i c dt) * sum_k (2 - delta_k0) (-i)^k J_k(r dt) T_k((H - c) / r)`
//! with `[c - r, c + r]` enclosing the spectrum. The series is truncated once
//! the Bessel weights drop below `1e-17`, which makes the step exact to
//! rounding for the step sizes used here.

use nalgebra::DVector;
use num_complex::Complex64;

/// Compressed-row real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseReal {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    row_abs_sum: Vec<f64>,
}

impl SparseReal {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    /// The caller supplies both halves of the symmetric pattern.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet outside {dim}x{dim}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let row_abs_sum = (0..dim)
            .map(|i| vals[row_ptr[i]..row_ptr[i + 1]].iter().map(|v| v.abs()).sum())
            .collect();
        Self {
            dim,
            row_ptr,
            cols,
            vals,
            row_abs_sum,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = scale * (A x)`.
    pub fn mul_into(&self, scale: f64, x: &[Complex64], out: &mut [Complex64]) {
        for i in 0..self.dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[p]] * self.vals[p];
            }
            out[i] = acc * scale;
        }
    }

    pub(crate) fn row_abs_sum(&self) -> &[f64] {
        &self.row_abs_sum
    }

    /// Dense copy, for tests and small systems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[p])] += self.vals[p];
            }
        }
        m
    }
}

/// Propagator for `H = a * A + diag(d)` with sparse `A`.
#[derive(Debug, Clone)]
pub struct ChebyshevPropagator<'a> {
    off: &'a SparseReal,
    off_scale: f64,
    diag: Vec<f64>,
    center: f64,
    radius: f64,
}

impl<'a> ChebyshevPropagator<'a> {
    pub fn new(off: &'a SparseReal, off_scale: f64, diag: Vec<f64>) -> Self {
        assert_eq!(off.dim(), diag.len(), "diagonal length must match operator");
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (d, s) in diag.iter().zip(off.row_abs_sum()) {
            let spread = off_scale.abs() * s;
            lo = lo.min(d - spread);
            hi = hi.max(d + spread);
        }
        let center = 0.5 * (lo + hi);
        // Slight widening keeps the scaled spectrum strictly inside [-1, 1].
        let radius = 0.5 * (hi - lo) * (1.0 + 1e-10) + 1e-12;
        Self {
            off,
            off_scale,
            diag,
            center,
            radius,
        }
    }

    /// `H x` into `out`.
    pub fn apply_hamiltonian(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.off.mul_into(self.off_scale, x, out);
        for ((o, xi), d) in out.iter_mut().zip(x).zip(&self.diag) {
            *o += xi * d;
        }
    }

    /// `psi <- exp(-i H dt) psi`.
    pub fn step(&self, psi: &mut DVector<Complex64>, dt: f64) {
        if dt == 0.0 {
            return;
        }
        let n = psi.len();
        let x = self.radius * dt;
        let bessel = bessel_j_sequence(x.abs());
        let sign = if x < 0.0 { -1.0 } else { 1.0 };

        let inv_r = 1.0 / self.radius;
        let shift = self.center;
        let scaled = |src: &[Complex64], dst: &mut [Complex64]| {
            self.apply_hamiltonian(src, dst);
            for (d, s) in dst.iter_mut().zip(src) {
                *d = (*d - s * shift) * inv_r;
            }
        };

        let mut prev: Vec<Complex64> = psi.as_slice().to_vec();
        let mut cur = vec![Complex64::new(0.0, 0.0); n];
        scaled(&prev, &mut cur);
        let mut next = vec![Complex64::new(0.0, 0.0); n];

        let mut acc: Vec<Complex64> = prev.iter().map(|p| p * bessel[0]).collect();
        // (-i)^k with the parity sign of J_k(-x) folded in.
        let mut phase = Complex64::new(0.0, -sign);
        if bessel.len() > 1 {
            let w = phase * (2.0 * bessel[1]);
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += c * w;
            }
        }
        for &jk in bessel.iter().skip(2) {
            scaled(&cur, &mut next);
            for (nx, p) in next.iter_mut().zip(&prev) {
                *nx = *nx * 2.0 - p;
            }
            phase *= Complex64::new(0.0, -sign);
            let w = phase * (2.0 * jk);
            for (a, c) in acc.iter_mut().zip(&next) {
                *a += c * w;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        let (s, c) = (-shift * dt).sin_cos();
        let global = Complex64::new(c, s);
        for (p, a) in psi.iter_mut().zip(acc) {
            *p = a * global;
        }
    }
}

/// `J_0(x), J_1(x), ...` for `x >= 0`, truncated after the weights fall
/// below `1e-17`. Miller's backward recurrence normalized with
/// `J_0 + 2 sum J_2k = 1`.
pub(crate) fn bessel_j_sequence(x: f64) -> Vec<f64> {
    if x < 1e-300 {
        return vec![1.0];
    }
    let top = (x + 12.0 * x.cbrt() + 40.0).ceil() as usize;
    let top = top + (top % 2);
    let mut j = vec![0.0f64; top + 2];
    j[top] = 1e-300;
    for k in (1..=top).rev() {
        j[k - 1] = (2.0 * k as f64 / x) * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for v in j.iter_mut() {
        *v /= norm;
    }
    let mut len = j.len();
    while len > 1 && (len as f64) > x + 1.0 && j[len - 1].abs() < 1e-17 {
        len -= 1;
    }
    j.truncate(len);
    j
}
