//! Small dense linear-algebra helpers over complex Hermitian matrices.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::C64;

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Column `k` of `vectors` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

/// Hermitian part `(A + A†)/2`.
pub fn hermitian_part(a: &DMatrix<C64>) -> DMatrix<C64> {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn hermitian_eigen(a: &DMatrix<C64>) -> HermitianEigen {
    let n = a.nrows();
    if n == 0 {
        return HermitianEigen { values: vec![], vectors: DMatrix::zeros(0, 0) };
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

pub fn eigenvalues(a: &DMatrix<C64>) -> Vec<f64> {
    hermitian_eigen(a).values
}

pub fn min_eigenvalue(a: &DMatrix<C64>) -> f64 {
    eigenvalues(a).last().copied().unwrap_or(0.0)
}

/// Cheap positive-definiteness probe: attempts a Cholesky factorization of
/// `A + shift·I`.
pub fn cholesky_ok(a: &DMatrix<C64>, shift: f64) -> bool {
    let n = a.nrows();
    let shifted = hermitian_part(a) + DMatrix::<C64>::identity(n, n) * C64::new(shift, 0.0);
    Cholesky::new(shifted).is_some()
}

/// Solves `A x = b` for Hermitian positive definite `A`.
pub fn solve_hpd(a: &DMatrix<C64>, b: &DVector<C64>) -> Option<DVector<C64>> {
    Cholesky::new(hermitian_part(a)).map(|c| c.solve(b))
}

/// `x† A⁻¹ x` for Hermitian positive definite `A`.
pub fn inverse_quadratic_form(a: &DMatrix<C64>, x: &DVector<C64>) -> Option<f64> {
    solve_hpd(a, x).map(|y| x.dotc(&y).re)
}

/// Kronecker product of two coordinate vectors, `(a ⊗ b)[i·len(b) + j] = a_i b_j`.
pub fn kron(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    let nb = b.len();
    DVector::from_fn(a.len() * nb, |k, _| a[k / nb] * b[k % nb])
}

/// Largest entry modulus of `A - B`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Completes an orthonormal set of columns to a full orthonormal basis of
/// its ambient space using Gram–Schmidt against the standard basis.
pub fn complete_orthonormal_basis(cols: &DMatrix<C64>) -> DMatrix<C64> {
    let dim = cols.nrows();
    let mut basis: Vec<DVector<C64>> = cols.column_iter().map(|c| c.into_owned()).collect();
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = DVector::<C64>::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / C64::new(norm, 0.0));
        }
    }
    DMatrix::from_columns(&basis)
}

/// Nearest unitary in the Frobenius sense (`W V†` from the SVD).
pub fn nearest_unitary(a: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    u * v_t
}
