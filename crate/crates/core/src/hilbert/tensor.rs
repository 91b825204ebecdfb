use super::operator::{ComplexOperator, SubsystemLayout};
use super::Matrix;
use crate::error::{Error, Result};

/// Kronecker product `F₀ ⊗ F₁ ⊗ …`, leftmost factor slowest-varying.
pub fn tensor(factors: &[ComplexOperator]) -> Result<ComplexOperator> {
    let (first, rest) = factors.split_first().ok_or(Error::EmptyFactors)?;
    let m = rest.iter().fold(first.matrix().clone(), |acc, f| acc.kronecker(f.matrix()));
    Ok(ComplexOperator::from_matrix_unchecked(m))
}

fn check_keep(layout: &SubsystemLayout, keep: &[usize]) -> Result<Vec<bool>> {
    let mut kept = vec![false; layout.len()];
    for &k in keep {
        layout.check_index(k)?;
        if kept[k] {
            return Err(Error::InvalidArgument(format!("subsystem {k} listed twice")));
        }
        kept[k] = true;
    }
    Ok(kept)
}

/// Traces out every subsystem not listed in `keep` (0-based indices).
///
/// The result is ordered by layout position regardless of the order of
/// `keep`. An empty `keep` traces everything and yields the 1×1 operator
/// `[Tr op]`.
pub fn partial_trace(op: &ComplexOperator, layout: &SubsystemLayout, keep: &[usize]) -> Result<ComplexOperator> {
    if op.dim() != layout.total() {
        return Err(Error::DimensionMismatch { expected: layout.total(), found: op.dim() });
    }
    let kept = check_keep(layout, keep)?;
    let dims = layout.dims();
    let kept_dims: Vec<usize> = dims.iter().zip(&kept).filter(|(_, &k)| k).map(|(&d, _)| d).collect();
    let out_dim: usize = kept_dims.iter().product();

    let split = |flat: usize| {
        let digits = layout.digits(flat);
        let mut keep_idx = 0;
        let mut trace_idx = 0;
        for ((&x, &d), &k) in digits.iter().zip(dims).zip(&kept) {
            if k {
                keep_idx = keep_idx * d + x;
            } else {
                trace_idx = trace_idx * d + x;
            }
        }
        (keep_idx, trace_idx)
    };
    let parts: Vec<(usize, usize)> = (0..layout.total()).map(split).collect();

    let m = op.matrix();
    let mut out = Matrix::zeros(out_dim, out_dim);
    for (i, &(ri, ti)) in parts.iter().enumerate() {
        for (j, &(rj, tj)) in parts.iter().enumerate() {
            if ti == tj {
                out[(ri, rj)] += m[(i, j)];
            }
        }
    }
    Ok(ComplexOperator::from_matrix_unchecked(out))
}

/// Lifts `op`, acting on the subsystems `acts_on` (in that order), to the
/// full space of `layout`, acting as identity elsewhere.
pub fn embed(op: &ComplexOperator, layout: &SubsystemLayout, acts_on: &[usize]) -> Result<ComplexOperator> {
    if acts_on.is_empty() {
        return Err(Error::InvalidArgument("embedding needs at least one target subsystem".into()));
    }
    let targeted = check_keep(layout, acts_on)?;
    let local_dim: usize = acts_on.iter().map(|&s| layout.dims()[s]).product();
    if op.dim() != local_dim {
        return Err(Error::DimensionMismatch { expected: local_dim, found: op.dim() });
    }
    let dims = layout.dims();
    let local_index = |digits: &[usize]| acts_on.iter().fold(0, |acc, &s| acc * dims[s] + digits[s]);
    let digits: Vec<Vec<usize>> = (0..layout.total()).map(|f| layout.digits(f)).collect();

    let m = op.matrix();
    let n = layout.total();
    let mut out = Matrix::zeros(n, n);
    for (i, di) in digits.iter().enumerate() {
        for (j, dj) in digits.iter().enumerate() {
            let spectators_match = (0..dims.len()).all(|s| targeted[s] || di[s] == dj[s]);
            if spectators_match {
                out[(i, j)] = m[(local_index(di), local_index(dj))];
            }
        }
    }
    Ok(ComplexOperator::from_matrix_unchecked(out))
}
