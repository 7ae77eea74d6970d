//! Dense spectral routines for reversible walk matrices.
//!
//! A reversible chain `P` with positive stationary measure `pi` is similar
//! to the symmetric matrix `D^{1/2} P D^{-1/2}` with `D = diag(pi)`, so its
//! full real spectrum comes out of a symmetric eigensolver. All matrices
//! here are small (desk scale), dense `nalgebra` types.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues of a symmetric matrix, sorted descending.
pub fn symmetric_eigenvalues(mat: &DMatrix<f64>) -> Result<Vec<f64>> {
    let eig = mat
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigensolver(format!("symmetric QR stalled on {}x{}", mat.nrows(), mat.ncols())))?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}

/// Full spectrum of a reversible transition matrix, sorted descending.
///
/// Requires `pi` strictly positive. The similarity transform is symmetrized
/// by averaging; the residual asymmetry is the caller's reversibility error.
pub fn reversible_spectrum(p: &DMatrix<f64>, pi: &DVector<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    if p.ncols() != n || pi.len() != n {
        return Err(Error::InvalidParameter("matrix/measure shape mismatch".into()));
    }
    if pi.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter(
            "stationary measure must be strictly positive".into(),
        ));
    }
    let sqrt: Vec<f64> = pi.iter().map(|&x| x.sqrt()).collect();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = sqrt[i] * p[(i, j)] / sqrt[j];
        }
    }
    // fold in the transpose; exact for a truly reversible pair
    let sym = (&s + s.transpose()) * 0.5;
    symmetric_eigenvalues(&sym)
}

/// Largest deviation from row-stochasticity.
pub fn row_stochastic_deviation(p: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..p.nrows() {
        let s: f64 = p.row(i).iter().sum();
        worst = worst.max((s - 1.0).abs());
        for j in 0..p.ncols() {
            if p[(i, j)] < 0.0 {
                worst = worst.max(-p[(i, j)]);
            }
        }
    }
    worst
}

/// Largest entrywise detailed-balance violation `|pi_i P_ij - pi_j P_ji|`.
pub fn reversibility_deviation(p: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            worst = worst.max((pi[i] * p[(i, j)] - pi[j] * p[(j, i)]).abs());
        }
    }
    worst
}

/// Total variation distance between two distributions on the same index set.
pub fn tv_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    0.5 * a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Greedy positional comparison of two sorted multisets; returns the largest
/// absolute mismatch (infinite when lengths differ).
pub fn multiset_deviation(lhs: &[f64], rhs: &[f64]) -> f64 {
    if lhs.len() != rhs.len() {
        return f64::INFINITY;
    }
    lhs.iter()
        .zip(rhs.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_state_chain_spectrum() {
        // P = [[1-a, a], [b, 1-b]] has eigenvalues 1 and 1-a-b.
        let (a, b) = (0.3, 0.2);
        let p = DMatrix::from_row_slice(2, 2, &[1.0 - a, a, b, 1.0 - b]);
        let pi = DVector::from_vec(vec![b / (a + b), a / (a + b)]);
        let ev = reversible_spectrum(&p, &pi).unwrap();
        assert_relative_eq!(ev[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(ev[1], 1.0 - a - b, epsilon = 1e-12);
    }

    #[test]
    fn deviations_detect_problems() {
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 0.5, 0.5]);
        assert!(row_stochastic_deviation(&p) > 0.05);
        let pi = DVector::from_vec(vec![0.9, 0.1]);
        assert!(reversibility_deviation(&p, &pi) > 0.1);
    }

    #[test]
    fn tv_bounds() {
        let a = DVector::from_vec(vec![1.0, 0.0]);
        let b = DVector::from_vec(vec![0.0, 1.0]);
        assert_relative_eq!(tv_distance(&a, &b), 1.0);
        assert_relative_eq!(tv_distance(&a, &a), 0.0);
    }
}
