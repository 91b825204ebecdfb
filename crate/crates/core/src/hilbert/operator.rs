use std::fmt;

use nalgebra::DVector;

use super::validate::{validate, OperatorKind};
use super::{max_abs, Matrix, Tolerances, C64};
use crate::error::{Error, Result};

/// A square matrix of finite complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOperator(Matrix);

impl ComplexOperator {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("operator dimension must be positive".into()));
        }
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let z = m[(r, c)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(Self(m))
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare { rows: n, cols: bad.len() });
        }
        Self::new(Matrix::from_fn(n, n, |r, c| rows[r][c]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> =
            rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Matrix::zeros(dim, dim))
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        Self(Matrix::from_fn(n, n, |r, c| if r == c { C64::new(entries[r], 0.0) } else { C64::new(0.0, 0.0) }))
    }

    /// `|ket⟩⟨bra|`
    pub fn outer(ket: &StateVector, bra: &StateVector) -> Result<Self> {
        check_dim(ket.dim(), bra.dim())?;
        Ok(Self(&ket.0 * bra.0.adjoint()))
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Matrix product `self · rhs`.
    pub fn product(&self, rhs: &ComplexOperator) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Self(&self.0 * &rhs.0))
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn add(&self, rhs: &ComplexOperator) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Self(&self.0 + &rhs.0))
    }

    /// Largest entry-wise modulus of `self - other`; infinite if the
    /// dimensions differ.
    pub fn max_deviation(&self, other: &ComplexOperator) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        max_abs(&(&self.0 - &other.0))
    }

    pub fn approx_eq(&self, other: &ComplexOperator, tol: f64) -> bool {
        self.max_deviation(other) <= tol
    }
}

impl fmt::Display for ComplexOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let z = self.0[(r, c)];
                if c > 0 {
                    f.write_str("  ")?;
                }
                write!(f, "({:+.6}, {:+.6})", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// A normalised ket.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    /// Accepts amplitudes whose Euclidean norm is 1 within the default
    /// norm tolerance.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        Self::with_tolerances(amplitudes, &Tolerances::default())
    }

    pub fn with_tolerances(amplitudes: Vec<C64>, tol: &Tolerances) -> Result<Self> {
        let v = finite_vector(amplitudes)?;
        let deviation = (v.norm() - 1.0).abs();
        if deviation > tol.norm {
            let mut verdict = super::Verdict::new(OperatorKind::State);
            verdict.push(super::Invariant::UnitNorm, deviation, tol.norm);
            return Err(Error::Invalid(verdict));
        }
        Ok(Self(v))
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let v = finite_vector(amplitudes)?;
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self(v / C64::new(n, 0.0)))
    }

    pub(crate) fn from_vector_unchecked(v: DVector<C64>) -> Self {
        Self(v)
    }

    /// Computational basis ket `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range for dimension {dim}")));
        }
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.dotc(&other.0))
    }

    pub fn kron(&self, other: &StateVector) -> StateVector {
        Self(self.0.kronecker(&other.0))
    }

    /// `|ψ⟩⟨ψ|` as a rank-1 projector.
    pub fn projector(&self) -> Projector {
        Projector { op: ComplexOperator(&self.0 * self.0.adjoint()), rank: 1 }
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator { op: ComplexOperator(&self.0 * self.0.adjoint()) }
    }
}

fn finite_vector(amplitudes: Vec<C64>) -> Result<DVector<C64>> {
    if amplitudes.is_empty() {
        return Err(Error::InvalidArgument("state vector must have positive dimension".into()));
    }
    if let Some(i) = amplitudes.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    Ok(DVector::from_vec(amplitudes))
}

/// Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    op: ComplexOperator,
}

impl DensityOperator {
    pub fn new(op: ComplexOperator) -> Result<Self> {
        Self::with_tolerances(op, &Tolerances::default())
    }

    pub fn with_tolerances(op: ComplexOperator, tol: &Tolerances) -> Result<Self> {
        let verdict = validate(&op, OperatorKind::Density, tol);
        if !verdict.passed() {
            return Err(Error::Invalid(verdict));
        }
        Ok(Self { op })
    }

    /// `I / dim`
    pub fn maximally_mixed(dim: usize) -> Self {
        Self { op: ComplexOperator::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)) }
    }

    /// `Σ wᵢ |ψᵢ⟩⟨ψᵢ|`; the weights must be non-negative and sum to 1.
    pub fn mixture(terms: &[(f64, StateVector)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let mut m = Matrix::zeros(first.1.dim(), first.1.dim());
        for (w, psi) in terms {
            check_dim(first.1.dim(), psi.dim())?;
            m += psi.density().op.0 * C64::new(*w, 0.0);
        }
        Self::new(ComplexOperator(m))
    }

    pub(crate) fn from_operator_unchecked(op: ComplexOperator) -> Self {
        Self { op }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn matrix(&self) -> &Matrix {
        self.op.matrix()
    }

    /// `Tr(ρ²)`
    pub fn purity(&self) -> f64 {
        (self.op.matrix() * self.op.matrix()).trace().re
    }

    /// `Tr(ρ X)`
    pub fn expectation(&self, x: &ComplexOperator) -> Result<C64> {
        check_dim(self.dim(), x.dim())?;
        Ok((self.op.matrix() * x.matrix()).trace())
    }
}

/// Hermitian idempotent operator with its rank cached.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    op: ComplexOperator,
    rank: usize,
}

impl Projector {
    pub fn new(op: ComplexOperator) -> Result<Self> {
        Self::with_tolerances(op, &Tolerances::default())
    }

    pub fn with_tolerances(op: ComplexOperator, tol: &Tolerances) -> Result<Self> {
        let verdict = validate(&op, OperatorKind::Projector, tol);
        if !verdict.passed() {
            return Err(Error::Invalid(verdict));
        }
        let rank = op.trace().re.round() as usize;
        Ok(Self { op, rank })
    }

    pub fn identity(dim: usize) -> Self {
        Self { op: ComplexOperator::identity(dim), rank: dim }
    }

    /// Projector onto `|index⟩` in the computational basis.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        Ok(StateVector::basis(dim, index)?.projector())
    }

    /// Projector onto the span of orthonormal `vectors`.
    pub fn onto(vectors: &[StateVector]) -> Result<Self> {
        let first = vectors.first().ok_or_else(|| Error::InvalidArgument("empty span".into()))?;
        let mut m = Matrix::zeros(first.dim(), first.dim());
        for v in vectors {
            check_dim(first.dim(), v.dim())?;
            m += v.projector().op.0;
        }
        Self::new(ComplexOperator(m))
    }

    pub(crate) fn from_parts_unchecked(op: ComplexOperator, rank: usize) -> Self {
        Self { op, rank }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.op.approx_eq(&ComplexOperator::identity(self.dim()), tol)
    }

    pub fn operator(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn matrix(&self) -> &Matrix {
        self.op.matrix()
    }

    /// Normalised `P / rank` as a density operator.
    pub fn to_density(&self) -> DensityOperator {
        DensityOperator { op: self.op.scale(C64::new(1.0 / self.rank.max(1) as f64, 0.0)) }
    }
}

/// `U†U = I`
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator {
    op: ComplexOperator,
}

impl UnitaryOperator {
    pub fn new(op: ComplexOperator) -> Result<Self> {
        Self::with_tolerances(op, &Tolerances::default())
    }

    pub fn with_tolerances(op: ComplexOperator, tol: &Tolerances) -> Result<Self> {
        let verdict = validate(&op, OperatorKind::Unitary, tol);
        if !verdict.passed() {
            return Err(Error::Invalid(verdict));
        }
        Ok(Self { op })
    }

    pub fn identity(dim: usize) -> Self {
        Self { op: ComplexOperator::identity(dim) }
    }

    pub(crate) fn from_operator_unchecked(op: ComplexOperator) -> Self {
        Self { op }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn matrix(&self) -> &Matrix {
        self.op.matrix()
    }

    pub fn adjoint(&self) -> Self {
        Self { op: self.op.adjoint() }
    }

    /// `later · self`: apply `self` first, then `later`.
    pub fn then(&self, later: &UnitaryOperator) -> Result<Self> {
        Ok(Self { op: later.op.product(&self.op)? })
    }

    /// Composes interval propagators given in time order.
    pub fn sequence<'a>(dim: usize, steps: impl IntoIterator<Item = &'a UnitaryOperator>) -> Result<Self> {
        steps.into_iter().try_fold(Self::identity(dim), |acc, u| acc.then(u))
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), psi.dim())?;
        Ok(StateVector(self.op.matrix() * &psi.0))
    }

    /// `U X U†`
    pub fn conjugate(&self, x: &ComplexOperator) -> Result<ComplexOperator> {
        check_dim(self.dim(), x.dim())?;
        let u = self.op.matrix();
        Ok(ComplexOperator(u * x.matrix() * u.adjoint()))
    }

    pub fn kron(&self, other: &UnitaryOperator) -> Self {
        Self { op: ComplexOperator(self.op.matrix().kronecker(other.op.matrix())) }
    }

    /// Basis vector `U|index⟩`, i.e. column `index`.
    pub fn column(&self, index: usize) -> StateVector {
        StateVector(self.op.matrix().column(index).into_owned())
    }
}

/// Subsystem dimensions, leftmost first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemLayout {
    dims: Vec<usize>,
    total: usize,
}

impl SubsystemLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidLayout("no subsystems".into()));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidLayout(format!("subsystem {i} has dimension 0")));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidLayout("total dimension overflows".into()))?;
        Ok(Self { dims, total })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.dims.len() {
            Ok(())
        } else {
            Err(Error::SubsystemOutOfRange { index, count: self.dims.len() })
        }
    }

    /// Splits a flat basis index into per-subsystem digits.
    pub fn digits(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        out
    }

    /// Inverse of [`SubsystemLayout::digits`].
    pub fn flat(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }
}
