//! Dense complex operator algebra over finite tensor-product Hilbert spaces.
//!
//! Everything here is dense and immutable. Operators are checked on
//! construction, so holding a [`DensityOperator`], [`Projector`] or
//! [`UnitaryOperator`] means its invariants held within the
//! [`Tolerances`] it was built with.
//!
//! Subsystem order is global: subsystem 0 is the leftmost tensor factor and
//! its index varies slowest in the flattened basis.

mod operator;
mod spectral;
mod tensor;
mod validate;

pub use operator::{
    ComplexOperator, DensityOperator, Projector, StateVector, SubsystemLayout, UnitaryOperator,
};
pub use spectral::{hermitian_eigen, reconstruct, spectral_decompose, SpectralTerm};
pub use tensor::{embed, partial_trace, tensor};
pub use validate::{validate, Check, Invariant, OperatorKind, Verdict};

/// Complex amplitude type used throughout the crate.
pub type C64 = nalgebra::Complex<f64>;

/// Dense complex matrix storage.
pub type Matrix = nalgebra::DMatrix<C64>;

/// Shorthand for a complex number with the given parts.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Absolute tolerances, each applied to the largest entry-wise deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Unit norm of states and unit trace of density operators.
    pub norm: f64,
    pub herm: f64,
    pub idem: f64,
    pub unit: f64,
    /// Allowed negativity of the smallest eigenvalue.
    pub psd: f64,
    /// Reconstruction and operator-equality checks.
    pub recon: f64,
    /// Eigenvalues closer than this are grouped into one eigenspace.
    pub degen: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: 1e-10,
            herm: 1e-10,
            idem: 1e-10,
            unit: 1e-10,
            psd: 1e-10,
            recon: 1e-9,
            degen: 1e-8,
        }
    }
}

/// Largest modulus among the entries of `m`.
pub(crate) fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}
