use nalgebra::DMatrix;

use crate::coherent::C64;

/// Eigenvalues of a Hermitian matrix, ascending.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut vals: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Principal square root of a Hermitian PSD matrix; negative rounding-noise
/// eigenvalues are clipped to zero.
pub(crate) fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    if n == 0 {
        return m.clone();
    }
    let eig = m.clone().symmetric_eigen();
    let mut out = DMatrix::<C64>::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        out += (v * v.adjoint()) * C64::new(s, 0.0);
    }
    out
}

pub(crate) fn max_hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Von Neumann entropy in bits of a spectrum; eigenvalues below `clip` are
/// treated as zero.
pub(crate) fn entropy_bits(eigenvalues: &[f64], clip: f64) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&p| p > clip)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}
