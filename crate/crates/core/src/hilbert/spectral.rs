use serde::Serialize;

use super::operator::{ComplexOperator, DensityOperator, Projector};
use super::{Matrix, C64};

/// Eigenvalues (descending) and matching orthonormal eigenvector columns of
/// a Hermitian matrix. Only the lower triangle of `m` is read.
///
/// Equal eigenvalues keep the solver's original relative order.
pub fn hermitian_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// One term `weight · P` of a spectral decomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralTerm {
    pub weight: f64,
    #[serde(skip)]
    pub projector: Projector,
}

/// Writes `ρ = Σ wₖ Pₖ` with distinct positive weights in descending order.
///
/// Eigenvalues within `tol_degen` of the largest member of their group share
/// one eigenprojector; the group weight is their mean. Eigenspaces with
/// weight at or below `tol_degen` are the kernel and are dropped.
pub fn spectral_decompose(rho: &DensityOperator, tol_degen: f64) -> Vec<SpectralTerm> {
    let (values, vectors) = hermitian_eigen(rho.matrix());
    let n = values.len();
    let mut terms = Vec::new();
    let mut start = 0;
    while start < n {
        let leader = values[start];
        let mut end = start + 1;
        while end < n && leader - values[end] <= tol_degen {
            end += 1;
        }
        let weight = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        if weight > tol_degen {
            let cols = vectors.columns(start, end - start);
            let p = &cols * cols.adjoint();
            terms.push(SpectralTerm {
                weight,
                projector: Projector::from_parts_unchecked(ComplexOperator::from_matrix_unchecked(p), end - start),
            });
        }
        start = end;
    }
    terms
}

/// `Σ wₖ Pₖ`
pub fn reconstruct(terms: &[SpectralTerm], dim: usize) -> ComplexOperator {
    let mut m = Matrix::zeros(dim, dim);
    for t in terms {
        m += t.projector.matrix() * C64::new(t.weight, 0.0);
    }
    ComplexOperator::from_matrix_unchecked(m)
}
