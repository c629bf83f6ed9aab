//! Brute-force references in the full 2^N spin space, built from Kronecker
//! products of Pauli matrices without any collective-spin algebra.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};

fn pauli_x() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

fn pauli_z() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// `op` acting on `site` (0-based, site 0 is the most significant bit).
pub fn site_operator(op: &DMatrix<f64>, site: usize, n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for s in 0..n {
        let factor = if s == site { op.clone() } else { DMatrix::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

/// `-(1/N) Sum_{i,j} sx_i sx_j / 4 - Gamma Sum_i sz_i / 2`, the collective
/// Hamiltonian written site by site.
pub fn lmg_full(n: usize, field: f64) -> DMatrix<f64> {
    let dim = 1 << n;
    let mut jx = DMatrix::zeros(dim, dim);
    let mut jz = DMatrix::zeros(dim, dim);
    for s in 0..n {
        jx += site_operator(&pauli_x(), s, n) * 0.5;
        jz += site_operator(&pauli_z(), s, n) * 0.5;
    }
    -(&jx * &jx) / n as f64 - jz * field
}

/// Open-chain `-Sum sx_i sx_{i+1} - Gamma Sum sz_i`.
pub fn ising_full(n: usize, field: f64) -> DMatrix<f64> {
    let dim = 1 << n;
    let mut h = DMatrix::zeros(dim, dim);
    for s in 0..n - 1 {
        h -= site_operator(&pauli_x(), s, n) * site_operator(&pauli_x(), s + 1, n);
    }
    for s in 0..n {
        h -= site_operator(&pauli_z(), s, n) * field;
    }
    h
}

/// Normalized symmetric state with `k` flipped spins (bit 1 = down).
pub fn dicke_vector(n: usize, k: usize) -> DVector<f64> {
    let dim = 1usize << n;
    let mut v = DVector::zeros(dim);
    for b in 0..dim {
        if b.count_ones() as usize == k {
            v[b] = 1.0;
        }
    }
    let norm = v.norm();
    v / norm
}

/// Columns are the Dicke vectors with `k = 2i (+1)` flips.
pub fn sector_isometry(n: usize, odd: bool) -> DMatrix<f64> {
    let ks: Vec<usize> = (0..=n).filter(|k| (k % 2 == 1) == odd).collect();
    let mut w = DMatrix::zeros(1 << n, ks.len());
    for (c, &k) in ks.iter().enumerate() {
        w.set_column(c, &dicke_vector(n, k));
    }
    w
}

pub fn sorted_eigenvalues(h: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Base-2 entropy of the first `block` spins of a real pure state, from
/// the singular values of the reshaped amplitude matrix.
pub fn leading_block_entropy(psi: &DVector<f64>, n: usize, block: usize) -> f64 {
    let rows = 1 << block;
    let cols = 1 << (n - block);
    let m = DMatrix::from_fn(rows, cols, |r, c| psi[r * cols + c]);
    m.singular_values()
        .iter()
        .map(|s| s * s)
        .filter(|p| *p > 1e-300)
        .map(|p| -p * p.log2())
        .sum()
}
