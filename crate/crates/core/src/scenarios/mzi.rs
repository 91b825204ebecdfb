//! Beam splitters and the Mach–Zehnder interferometer.
//!
//! Path labels map onto the computational basis of a qubit, one basis per
//! time: `a = 0, b = 1` before the first splitter, `d = 0, c = 1` between the
//! splitters and `e = 0, f = 1` after the second.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{c64, ComplexOperator, DensityOperator, StateVector, Tolerances, UnitaryOperator};
use crate::histories::{history_distribution, HistoryDistribution, HistorySlot};

pub const A: usize = 0;
pub const B: usize = 1;
pub const D: usize = 0;
pub const C: usize = 1;
pub const E: usize = 0;
pub const F: usize = 1;

/// `[[cos α, i sin α], [i sin α, cos α]]`: the input column `|a⟩` maps to
/// `cos α |d⟩ + i sin α |c⟩`.
pub fn beam_splitter(angle: f64) -> UnitaryOperator {
    let (s, c) = angle.sin_cos();
    let m = ComplexOperator::from_rows(&[vec![c64(c, 0.0), c64(0.0, s)], vec![c64(0.0, s), c64(c, 0.0)]])
        .expect("finite for finite angles");
    UnitaryOperator::new(m).expect("beam splitter is unitary")
}

/// Which-path probabilities `(sin²θ, cos²θ)` when path c/d is measured.
pub fn sqm_reference(theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (s * s, c * c)
}

/// `(sin θ sin φ, cos θ cos φ) / cos(θ − φ)`
pub fn mzi_closed_form(theta: f64, phi: f64) -> (f64, f64) {
    let norm = (theta - phi).cos();
    (theta.sin() * phi.sin() / norm, theta.cos() * phi.cos() / norm)
}

/// The three-slot history problem for an MZI with splitter angles `θ`, `φ`.
#[derive(Clone, Debug)]
pub struct MziSetup {
    pub slots: Vec<HistorySlot>,
    pub intervals: Vec<UnitaryOperator>,
    /// `|a⟩⟨a|`
    pub preparation: DensityOperator,
    /// `|e⟩⟨e|`
    pub measurement: DensityOperator,
}

impl MziSetup {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self {
            slots: (0..3).map(|t| HistorySlot::computational(t, 2)).collect(),
            intervals: vec![beam_splitter(theta), beam_splitter(phi)],
            preparation: StateVector::basis(2, A).expect("qubit").density(),
            measurement: StateVector::basis(2, E).expect("qubit").density(),
        }
    }

    /// `⟨e| U(φ) U(θ) |a⟩ = cos(θ + φ)`
    pub fn transmission_amplitude(&self) -> f64 {
        let u = self.intervals[0].then(&self.intervals[1]).expect("same dimension");
        u.operator().entry(E, A).re
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathProbabilities {
    pub c: f64,
    pub d: f64,
}

impl From<(f64, f64)> for PathProbabilities {
    fn from((c, d): (f64, f64)) -> Self {
        Self { c, d }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MziOutcome {
    pub theta: f64,
    pub phi: f64,
    pub distribution: HistoryDistribution,
    /// Marginals of the enumerated distribution on the middle slot.
    pub two_boundary: PathProbabilities,
    pub closed_form: PathProbabilities,
    pub sqm: PathProbabilities,
}

/// Two-boundary path probabilities inside an MZI prepared in `|a⟩` and found
/// in `|e⟩`, for `0 ≤ θ, φ ≤ π/2`.
pub fn mzi_distribution(theta: f64, phi: f64) -> Result<MziOutcome> {
    let range = 0.0..=std::f64::consts::FRAC_PI_2;
    if !range.contains(&theta) || !range.contains(&phi) {
        return Err(Error::InvalidArgument(format!("angles must lie in [0, π/2], got θ = {theta}, φ = {phi}")));
    }
    let setup = MziSetup::new(theta, phi);
    let tol = Tolerances::default();
    let amplitude = setup.transmission_amplitude();
    if amplitude.abs() <= tol.norm {
        return Err(Error::ImpossibleBoundary { weight: amplitude * amplitude, tolerance: tol.norm });
    }
    let distribution = history_distribution(&setup.preparation, &setup.slots, &setup.intervals, &setup.measurement)?;
    let two_boundary = PathProbabilities { c: distribution.marginal(1, C), d: distribution.marginal(1, D) };
    Ok(MziOutcome {
        theta,
        phi,
        distribution,
        two_boundary,
        closed_form: mzi_closed_form(theta, phi).into(),
        sqm: sqm_reference(theta).into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{validate, OperatorKind};
    use crate::histories::{chain_operator, HistorySequence};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn beam_splitter_limits() {
        assert!(beam_splitter(0.0).operator().approx_eq(&ComplexOperator::identity(2), 1e-15));
        let swap = ComplexOperator::from_rows(&[vec![c64(0.0, 0.0), c64(0.0, 1.0)], vec![c64(0.0, 1.0), c64(0.0, 0.0)]])
            .unwrap();
        assert!(beam_splitter(FRAC_PI_2).operator().approx_eq(&swap, 1e-15));
        let out = beam_splitter(FRAC_PI_4).apply(&StateVector::basis(2, A).unwrap()).unwrap();
        assert!((out.amplitudes()[D].norm_sqr() - 0.5).abs() < 1e-15);
        assert!((out.amplitudes()[C].norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn beam_splitter_inverse_is_negative_angle() {
        for k in 0..20 {
            let alpha = -3.0 + 0.3 * k as f64;
            let u = beam_splitter(alpha);
            assert!(validate(u.operator(), OperatorKind::Unitary, &Tolerances::default()).passed());
            assert!(beam_splitter(-alpha).operator().approx_eq(u.adjoint().operator(), 1e-15));
        }
    }

    #[test]
    fn sqm_reference_values() {
        let (c, d) = sqm_reference(0.0);
        assert_eq!((c, d), (0.0, 1.0));
        let (c, d) = sqm_reference(FRAC_PI_4);
        assert!((c - 0.5).abs() < 1e-15 && (d - 0.5).abs() < 1e-15);
        let (c, d) = sqm_reference(FRAC_PI_6);
        assert!((c - 0.25).abs() < 1e-15 && (d - 0.75).abs() < 1e-15);
    }

    #[test]
    fn second_splitter_matches_stated_map() {
        // |c⟩ → cos φ |f⟩ + i sin φ |e⟩,  |d⟩ → i sin φ |f⟩ + cos φ |e⟩
        let phi = 0.37_f64;
        let u = beam_splitter(phi);
        let from_c = u.apply(&StateVector::basis(2, C).unwrap()).unwrap();
        assert!((from_c.amplitudes()[F] - c64(phi.cos(), 0.0)).norm() < 1e-15);
        assert!((from_c.amplitudes()[E] - c64(0.0, phi.sin())).norm() < 1e-15);
        let from_d = u.apply(&StateVector::basis(2, D).unwrap()).unwrap();
        assert!((from_d.amplitudes()[F] - c64(0.0, phi.sin())).norm() < 1e-15);
        assert!((from_d.amplitudes()[E] - c64(phi.cos(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn chain_operators_for_both_paths() {
        let (theta, phi) = (0.3_f64, 1.1_f64);
        let s = MziSetup::new(theta, phi);
        let kc = chain_operator(&s.slots, &HistorySequence::new(vec![A, C, E]), &s.intervals).unwrap();
        let kd = chain_operator(&s.slots, &HistorySequence::new(vec![A, D, E]), &s.intervals).unwrap();
        // |a⟩⟨e| is the (0, 0) matrix unit
        let unit = ComplexOperator::diagonal(&[1.0, 0.0]);
        assert!(kc.operator().approx_eq(&unit.scale(c64(-theta.sin() * phi.sin(), 0.0)), 1e-15));
        assert!(kd.operator().approx_eq(&unit.scale(c64(theta.cos() * phi.cos(), 0.0)), 1e-15));
    }

    #[test]
    fn symmetric_angles_split_evenly_but_cannot_reach_e() {
        // θ = φ = π/4 puts the two histories at equal weight, yet ⟨e|U|a⟩ = cos(π/2) = 0.
        let (c, d) = mzi_closed_form(FRAC_PI_4, FRAC_PI_4);
        assert!((c - 0.5).abs() < 1e-15 && (d - 0.5).abs() < 1e-15);
        let s = MziSetup::new(FRAC_PI_4, FRAC_PI_4);
        let raw = history_distribution(&s.preparation, &s.slots, &s.intervals, &s.measurement).unwrap();
        assert!((raw.marginal(1, C) - 0.5).abs() < 1e-12);
        assert!((raw.marginal(1, D) - 0.5).abs() < 1e-12);
        assert!(matches!(mzi_distribution(FRAC_PI_4, FRAC_PI_4), Err(Error::ImpossibleBoundary { .. })));
    }

    #[test]
    fn equal_angles_agree_with_sqm() {
        let out = mzi_distribution(FRAC_PI_6, FRAC_PI_6).unwrap();
        assert!((out.two_boundary.c - 0.25).abs() < 1e-12);
        assert!((out.two_boundary.d - 0.75).abs() < 1e-12);
        assert!((out.two_boundary.c - out.sqm.c).abs() < 1e-12);
    }

    #[test]
    fn complementary_angles_are_impossible() {
        let err = mzi_distribution(FRAC_PI_3, FRAC_PI_6).unwrap_err();
        assert!(matches!(err, Error::ImpossibleBoundary { .. }));
        assert!(matches!(mzi_distribution(-0.1, 0.2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn paths_through_b_or_f_never_occur() {
        let out = mzi_distribution(0.2, 0.9).unwrap();
        for e in &out.distribution.entries {
            let l = e.sequence.labels();
            if l[0] == B || l[2] == F {
                assert!(e.weight < 1e-14, "{:?}", e);
            }
        }
    }
}
