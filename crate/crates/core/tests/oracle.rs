#[path = "support/full_space.rs"]
mod full_space;

use esu_core::entanglement::symmetric_block_entropy;
use esu_core::ising::{build_ising, reduced_two_spin};
use esu_core::lmg::{build_dicke_sector, Parity};
use esu_core::{BasisTag, StateVector};
use full_space::*;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[test]
fn lmg_sector_matches_full_space() {
    for n in [4usize, 6, 8] {
        let full_dim = 1 << n;
        for parity in [Parity::Even, Parity::Odd] {
            let w = sector_isometry(n, parity == Parity::Odd);
            let ops = build_dicke_sector(n, parity).unwrap();
            for field in [10.0, 1.0, 0.3] {
                let h = lmg_full(n, field);
                let full_spectrum = sorted_eigenvalues(&h);
                let projected = sorted_eigenvalues(&(w.transpose() * &h * &w));
                let eig = ops.spectrum(field);
                for (k, &e) in eig.eigenvalues().iter().enumerate() {
                    assert!((e - projected[k]).abs() < 1e-9, "N={n} {parity:?} field={field}");
                    let nearest = full_spectrum.iter().map(|f| (f - e).abs()).fold(f64::INFINITY, f64::min);
                    assert!(nearest < 1e-9);

                    let v: DVector<f64> = eig.eigenvectors().column(k).map(|z| z.re);
                    let embedded = &w * &v;
                    assert_eq!(embedded.len(), full_dim);
                    let residual = (&h * &embedded - &embedded * e).norm();
                    assert!(residual < 1e-9, "residual {residual}");

                    let s_oracle = leading_block_entropy(&embedded, n, n / 2);
                    let s = symmetric_block_entropy(ops.sector(), &eig.eigenvectors().column(k).into_owned(), n / 2).unwrap();
                    assert!((s - s_oracle).abs() < 1e-9, "N={n} k={k}: {s} vs {s_oracle}");
                }
            }
        }
    }
}

#[test]
fn every_block_size_matches_full_space() {
    let n = 8;
    let ops = build_dicke_sector(n, Parity::Even).unwrap();
    let w = sector_isometry(n, false);
    let amps = DVector::from_fn(ops.dim(), |i, _| 1.0 / (1.0 + i as f64).sqrt());
    let amps = &amps / amps.norm();
    let embedded = &w * &amps;
    for block in 1..n {
        let s = symmetric_block_entropy(ops.sector(), &amps.map(|x| Complex64::new(x, 0.0)), block).unwrap();
        assert!((s - leading_block_entropy(&embedded, n, block)).abs() < 1e-9);
    }
}

#[test]
fn ising_hamiltonian_matches_kronecker_form() {
    for n in [2usize, 3, 5, 7] {
        for field in [0.0, 0.7, 10.0] {
            let ours = build_ising(n).unwrap().hamiltonian(field);
            let reference = ising_full(n, field);
            let diff = (ours.entries().map(|z| z.re) - reference).abs().max();
            assert!(diff < 1e-12, "N={n}: {diff}");
            assert!(ours.entries().iter().all(|z| z.im == 0.0));
        }
    }
}

fn explicit_pair(psi: &DVector<Complex64>, n: usize, i: usize, j: usize) -> DMatrix<Complex64> {
    // Sites are 1-based; site 1 is the most significant bit.
    let bit = |b: usize, site: usize| (b >> (n - site)) & 1;
    let mut rho = DMatrix::zeros(4, 4);
    for a in 0..(1 << n) {
        for b in 0..(1 << n) {
            let rest_same = (0..n).all(|s| {
                let site = s + 1;
                site == i || site == j || bit(a, site) == bit(b, site)
            });
            if rest_same {
                let r = 2 * bit(a, i) + bit(a, j);
                let c = 2 * bit(b, i) + bit(b, j);
                rho[(r, c)] += psi[a] * psi[b].conj();
            }
        }
    }
    rho
}

#[test]
fn two_spin_reduction_matches_explicit_sum() {
    let n = 5;
    let amps = DVector::from_fn(1 << n, |k, _| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.91).cos()));
    let psi = StateVector::normalized(BasisTag::SpinChain { spins: n }, amps).unwrap();
    for (i, j) in [(1, 5), (2, 4), (1, 2), (3, 5)] {
        let ours = reduced_two_spin(&psi, i, j).unwrap();
        let reference = explicit_pair(psi.amplitudes(), n, i, j);
        assert!((ours.entries() - reference).norm() < 1e-12, "pair ({i},{j})");
    }
}
