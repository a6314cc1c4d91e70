//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::C64;

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigen-pairs of a Hermitian matrix sorted by ascending eigenvalue.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a general complex matrix.
pub fn complex_eigenvalues(m: &DMatrix<C64>) -> Vec<C64> {
    let schur = nalgebra::linalg::Schur::new(m.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Eigenvalues of a general real matrix.
pub fn real_eigenvalues(m: &DMatrix<f64>) -> Vec<C64> {
    m.complex_eigenvalues().iter().copied().collect()
}

/// Orthonormal basis (columns) of the orthogonal complement of the span of `basis`,
/// where `basis` already has orthonormal columns.
pub fn orthogonal_complement(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = basis.nrows();
    let mut cols: Vec<DVector<f64>> = basis.column_iter().map(|c| c.into_owned()).collect();
    let start = cols.len();
    for e in 0..dim {
        let mut v = DVector::zeros(dim);
        v[e] = 1.0;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for c in &cols {
                let p = c.dot(&v);
                v.axpy(-p, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
        if cols.len() == dim {
            break;
        }
    }
    DMatrix::from_columns(&cols[start..])
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal() {
        let v = DVector::from_vec(vec![1.0, 1.0, 0.0]).normalize();
        let b = DMatrix::from_columns(&[v.clone()]);
        let q = orthogonal_complement(&b);
        assert_eq!(q.ncols(), 2);
        assert!((q.transpose() * &q - DMatrix::identity(2, 2)).norm() < 1e-14);
        assert!((q.transpose() * v).norm() < 1e-14);
    }

    #[test]
    fn complex_eigenvalues_of_triangular() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 1.0), C64::new(3.0, 0.0), C64::new(0.0, 0.0), C64::new(-2.0, 0.5)],
        );
        let mut ev = complex_eigenvalues(&m);
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - C64::new(-2.0, 0.5)).norm() < 1e-14);
        assert!((ev[1] - C64::new(1.0, 1.0)).norm() < 1e-14);
    }
}
