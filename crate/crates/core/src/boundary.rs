//! Consistency between an initial and a final boundary condition.
//!
//! A [`BoundaryPair`] fixes a density operator and a projector at each end of
//! the interval `[t_i, t_f]`, plus the propagator `U = U(t_f, t_i)`. The final
//! state must be the Lüders projection of the forward-evolved initial state,
//! the initial state the Lüders projection of the backward-evolved final
//! state, and the round trip must return both unchanged. Only two families
//! survive: the trivial one with identity projectors and `UρᵢU† = ρ_f`, and
//! the one where both boundaries are rank-1 rays equal to their projectors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    partial_trace, ComplexOperator, DensityOperator, Projector, StateVector, SubsystemLayout, Tolerances,
    UnitaryOperator,
};
use crate::hilbert::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `U ρ U†`
    Forward,
    /// `U† ρ U`
    Backward,
}

pub fn evolve(rho: &DensityOperator, u: &UnitaryOperator, direction: Direction) -> Result<DensityOperator> {
    let op = match direction {
        Direction::Forward => u.conjugate(rho.operator())?,
        Direction::Backward => u.adjoint().conjugate(rho.operator())?,
    };
    Ok(DensityOperator::from_operator_unchecked(op))
}

/// Result of conditioning a state on a projector.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub state: DensityOperator,
    /// `Tr(ρP)`
    pub weight: f64,
}

/// `ρ ↦ PρP / Tr(ρP)`.
///
/// Fails with [`Error::ImpossibleBoundary`] when `Tr(ρP)` does not exceed the
/// norm tolerance.
pub fn lueders(rho: &DensityOperator, p: &Projector) -> Result<Projection> {
    let tol = Tolerances::default();
    let weight = rho.expectation(p.operator())?.re;
    if weight <= tol.norm {
        return Err(Error::ImpossibleBoundary { weight, tolerance: tol.norm });
    }
    let pm = p.matrix();
    let projected = pm * rho.matrix() * pm / C64::new(weight, 0.0);
    Ok(Projection {
        state: DensityOperator::from_operator_unchecked(ComplexOperator::from_matrix_unchecked(projected)),
        weight,
    })
}

/// `ρ = PρP` within the reconstruction tolerance.
pub fn support_condition(rho: &DensityOperator, p: &Projector) -> Result<bool> {
    Ok(support_residual(rho, p)? <= Tolerances::default().recon)
}

fn support_residual(rho: &DensityOperator, p: &Projector) -> Result<f64> {
    let sandwiched = p.operator().product(rho.operator())?.product(p.operator())?;
    Ok(sandwiched.max_deviation(rho.operator()))
}

/// Boundary states and projectors at `t_i` and `t_f` with the propagator
/// between them.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPair {
    rho_i: DensityOperator,
    rho_f: DensityOperator,
    p_a: Projector,
    p_b: Projector,
    u_if: UnitaryOperator,
}

impl BoundaryPair {
    pub fn new(
        rho_i: DensityOperator,
        rho_f: DensityOperator,
        p_a: Projector,
        p_b: Projector,
        u_if: UnitaryOperator,
    ) -> Result<Self> {
        let dim = rho_i.dim();
        for found in [rho_f.dim(), p_a.dim(), p_b.dim(), u_if.dim()] {
            if found != dim {
                return Err(Error::DimensionMismatch { expected: dim, found });
            }
        }
        Ok(Self { rho_i, rho_f, p_a, p_b, u_if })
    }

    pub fn dim(&self) -> usize {
        self.rho_i.dim()
    }

    pub fn rho_i(&self) -> &DensityOperator {
        &self.rho_i
    }

    pub fn rho_f(&self) -> &DensityOperator {
        &self.rho_f
    }

    pub fn p_a(&self) -> &Projector {
        &self.p_a
    }

    pub fn p_b(&self) -> &Projector {
        &self.p_b
    }

    pub fn propagator(&self) -> &UnitaryOperator {
        &self.u_if
    }

    /// `A = Tr(ρ_f(t_i) P_a)`
    pub fn a(&self) -> Result<f64> {
        let back = evolve(&self.rho_f, &self.u_if, Direction::Backward)?;
        Ok(back.expectation(self.p_a.operator())?.re)
    }

    /// `B = Tr(ρ_i(t_f) P_b)`
    pub fn b(&self) -> Result<f64> {
        let fwd = evolve(&self.rho_i, &self.u_if, Direction::Forward)?;
        Ok(fwd.expectation(self.p_b.operator())?.re)
    }

    /// Both overlaps, failing if either vanishes.
    fn overlaps(&self) -> Result<(f64, f64)> {
        let tol = Tolerances::default();
        let (a, b) = (self.a()?, self.b()?);
        for w in [a, b] {
            if w <= tol.norm {
                return Err(Error::ImpossibleBoundary { weight: w, tolerance: tol.norm });
            }
        }
        Ok((a, b))
    }
}

/// Residuals of the round-trip conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundTrip {
    pub consistent: bool,
    pub a: f64,
    pub b: f64,
    /// `‖ρ_i − (AB)⁻¹ P_a P_b ρ_i P_b P_a‖` with everything at `t_i`.
    pub initial_residual: f64,
    /// `‖ρ_f − (AB)⁻¹ P_b P_a ρ_f P_a P_b‖` with everything at `t_f`.
    pub final_residual: f64,
    /// Largest deviation of `AB` from `Tr(P_b ρ_i P_b P_a)` and
    /// `Tr(P_a ρ_f P_a P_b)`.
    pub normalization_residual: f64,
}

/// Evolves the initial state forward, projects with `P_b`, evolves back,
/// projects with `P_a` and checks both boundaries are recovered.
pub fn roundtrip_consistent(pair: &BoundaryPair) -> Result<RoundTrip> {
    let tol = Tolerances::default();
    let (a, b) = pair.overlaps()?;
    let ab = C64::new(a * b, 0.0);
    let u = &pair.u_if;

    // Everything at t_i.
    let pa = pair.p_a.matrix();
    let pb_at_i = u.adjoint().conjugate(pair.p_b.operator())?;
    let pb_i = pb_at_i.matrix();
    let rho_i = pair.rho_i.matrix();
    let initial = pa * pb_i * rho_i * pb_i * pa / ab;
    let initial_residual = crate::hilbert::max_abs(&(initial - rho_i));
    let norm_i = (pb_i * rho_i * pb_i * pa).trace();

    // Everything at t_f.
    let pb = pair.p_b.matrix();
    let pa_at_f = u.conjugate(pair.p_a.operator())?;
    let pa_f = pa_at_f.matrix();
    let rho_f = pair.rho_f.matrix();
    let fin = pb * pa_f * rho_f * pa_f * pb / ab;
    let final_residual = crate::hilbert::max_abs(&(fin - rho_f));
    let norm_f = (pa_f * rho_f * pa_f * pb).trace();

    let normalization_residual = (norm_i - ab).norm().max((norm_f - ab).norm());
    let consistent =
        initial_residual <= tol.recon && final_residual <= tol.recon && normalization_residual <= tol.recon;
    Ok(RoundTrip { consistent, a, b, initial_residual, final_residual, normalization_residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Identity projectors, `ρ_f = U ρ_i U†`: no new information at `t_f`.
    Sqm,
    /// Both boundaries are rank-1 rays equal to their projectors.
    Pure,
    Inconsistent,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Sqm => "sqm",
            Branch::Pure => "pure",
            Branch::Inconsistent => "inconsistent",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryDiagnostics {
    pub roundtrip: RoundTrip,
    /// `‖U ρ_i U† − ρ_f‖`
    pub evolution_mismatch: f64,
    pub p_a_identity_deviation: f64,
    pub p_b_identity_deviation: f64,
    pub p_a_rank: usize,
    pub p_b_rank: usize,
    /// `‖ρ_i − P_a‖`
    pub initial_ray_deviation: f64,
    /// `‖ρ_f − P_b‖`
    pub final_ray_deviation: f64,
    /// `‖ρ_i − P_a ρ_i P_a‖`
    pub initial_support_residual: f64,
    /// `‖ρ_f − P_b ρ_f P_b‖`
    pub final_support_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryVerdict {
    pub branch: Branch,
    pub a: f64,
    pub b: f64,
    pub diagnostics: BoundaryDiagnostics,
}

pub fn classify_boundary_solution(pair: &BoundaryPair) -> Result<BoundaryVerdict> {
    let tol = Tolerances::default();
    let roundtrip = roundtrip_consistent(pair)?;
    let evolved = evolve(&pair.rho_i, &pair.u_if, Direction::Forward)?;
    let identity = ComplexOperator::identity(pair.dim());
    let diagnostics = BoundaryDiagnostics {
        roundtrip,
        evolution_mismatch: evolved.operator().max_deviation(pair.rho_f.operator()),
        p_a_identity_deviation: pair.p_a.operator().max_deviation(&identity),
        p_b_identity_deviation: pair.p_b.operator().max_deviation(&identity),
        p_a_rank: pair.p_a.rank(),
        p_b_rank: pair.p_b.rank(),
        initial_ray_deviation: pair.rho_i.operator().max_deviation(pair.p_a.operator()),
        final_ray_deviation: pair.rho_f.operator().max_deviation(pair.p_b.operator()),
        initial_support_residual: support_residual(&pair.rho_i, &pair.p_a)?,
        final_support_residual: support_residual(&pair.rho_f, &pair.p_b)?,
    };
    let d = &diagnostics;
    let branch = if d.p_a_identity_deviation <= tol.recon
        && d.p_b_identity_deviation <= tol.recon
        && d.evolution_mismatch <= tol.recon
    {
        Branch::Sqm
    } else if d.p_a_rank == 1
        && d.p_b_rank == 1
        && d.initial_ray_deviation <= tol.recon
        && d.final_ray_deviation <= tol.recon
        && roundtrip.consistent
    {
        Branch::Pure
    } else {
        Branch::Inconsistent
    };
    Ok(BoundaryVerdict { branch, a: roundtrip.a, b: roundtrip.b, diagnostics })
}

/// Builds the pure pair `ρ_i = P_a = |a⟩⟨a|`, `ρ_f = P_b`, where `ρ_f` is the
/// Lüders projection of `U|a⟩` onto the ray `P_b`.
pub fn construct_consistent_pair(a: &StateVector, p_b: &Projector, u: &UnitaryOperator) -> Result<BoundaryPair> {
    if p_b.rank() != 1 {
        return Err(Error::InvalidArgument(format!("final projector must be rank 1, got rank {}", p_b.rank())));
    }
    let rho_i = a.density();
    let projected = lueders(&evolve(&rho_i, u, Direction::Forward)?, p_b)?;
    // For a ray, the projection is P_b itself; store the exact projector.
    debug_assert!(projected.state.operator().approx_eq(p_b.operator(), 1e-8));
    BoundaryPair::new(rho_i, p_b.to_density(), a.projector(), p_b.clone(), u.clone())
}

/// `ρ` is a pure product `P¹ ⊗ … ⊗ Pⁿ` of rays: the global state and every
/// single-subsystem reduction have unit purity.
pub fn product_pure_check(rho: &DensityOperator, layout: &SubsystemLayout) -> Result<bool> {
    if rho.dim() != layout.total() {
        return Err(Error::DimensionMismatch { expected: layout.total(), found: rho.dim() });
    }
    let tol = Tolerances::default().recon;
    if (rho.purity() - 1.0).abs() > tol {
        return Ok(false);
    }
    for s in 0..layout.len() {
        let reduced = partial_trace(rho.operator(), layout, &[s])?;
        let purity = (reduced.matrix() * reduced.matrix()).trace().re;
        if (purity - 1.0).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}
