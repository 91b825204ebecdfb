use std::fmt;

use serde::Serialize;

use super::operator::ComplexOperator;
use super::spectral::hermitian_eigen;
use super::{max_abs, Matrix, Tolerances, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Density,
    Projector,
    Unitary,
    /// A pure density operator `|ψ⟩⟨ψ|`.
    State,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Density => "density operator",
            Self::Projector => "projector",
            Self::Unitary => "unitary",
            Self::State => "pure state",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    Hermitian,
    PositiveSemidefinite,
    UnitTrace,
    Idempotent,
    Unitary,
    UnitNorm,
    Pure,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hermitian => "hermitian",
            Self::PositiveSemidefinite => "positive semidefinite",
            Self::UnitTrace => "unit trace",
            Self::Idempotent => "idempotent",
            Self::Unitary => "unitary",
            Self::UnitNorm => "unit norm",
            Self::Pure => "pure",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Check {
    pub invariant: Invariant,
    pub violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Outcome of checking one operator against the invariants of a kind.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub kind: OperatorKind,
    pub checks: Vec<Check>,
}

impl Verdict {
    pub(crate) fn new(kind: OperatorKind) -> Self {
        Self { kind, checks: Vec::new() }
    }

    pub(crate) fn push(&mut self, invariant: Invariant, violation: f64, tolerance: f64) {
        // NaN violations fail.
        let passed = violation <= tolerance;
        self.checks.push(Check { invariant, violation, tolerance, passed });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn violation(&self, invariant: Invariant) -> Option<f64> {
        self.checks.iter().find(|c| c.invariant == invariant).map(|c| c.violation)
    }

    /// The check with the largest violation.
    pub fn worst(&self) -> Option<&Check> {
        self.checks.iter().max_by(|a, b| a.violation.total_cmp(&b.violation))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "valid {}", self.kind);
        }
        write!(f, "not a valid {}:", self.kind)?;
        for c in self.failures() {
            write!(f, " {} violated by {:.3e} (tolerance {:.1e});", c.invariant, c.violation, c.tolerance)?;
        }
        Ok(())
    }
}

/// Checks `op` against every invariant of `kind`. Never fails; inspect the
/// returned verdict.
pub fn validate(op: &ComplexOperator, kind: OperatorKind, tol: &Tolerances) -> Verdict {
    let m = op.matrix();
    let mut v = Verdict::new(kind);
    match kind {
        OperatorKind::Density | OperatorKind::State => {
            v.push(Invariant::Hermitian, hermiticity(m), tol.herm);
            v.push(Invariant::PositiveSemidefinite, negativity(m), tol.psd);
            v.push(Invariant::UnitTrace, (m.trace() - C64::new(1.0, 0.0)).norm(), tol.norm);
            if kind == OperatorKind::State {
                v.push(Invariant::Pure, ((m * m).trace() - C64::new(1.0, 0.0)).norm(), tol.norm);
            }
        }
        OperatorKind::Projector => {
            v.push(Invariant::Hermitian, hermiticity(m), tol.herm);
            v.push(Invariant::Idempotent, max_abs(&(m * m - m)), tol.idem);
        }
        OperatorKind::Unitary => {
            let n = m.nrows();
            v.push(Invariant::Unitary, max_abs(&(m.adjoint() * m - Matrix::identity(n, n))), tol.unit);
        }
    }
    v
}

fn hermiticity(m: &Matrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// How far the smallest eigenvalue of the Hermitian part lies below zero.
fn negativity(m: &Matrix) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let (values, _) = hermitian_eigen(&h);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (-min).max(0.0)
}
