//! Probabilities for sequences of unmeasured properties between a
//! preparation `ρ_p` and the next measurement `ρ_m`.
//!
//! A history picks one projector per time slot. Its chain operator is
//!
//! ```text
//! K = P¹ U(t₁,t₂) P² U(t₂,t₃) … U(t_{k−1},t_k) Pᵏ
//! ```
//!
//! with `U(t_j, t_{j+1}) = U(t_{j+1}, t_j)†`, and its weight is
//! `|Tr(ρ_p K ρ_m)|`. Probabilities are weights times the dimension of the
//! history's product projector `S = P¹ ⊗ … ⊗ Pᵏ`, normalised over every
//! history. `S` itself is never built: orthogonal per-slot bases give
//! `Tr(S_α S_α′) = δ_αα′ · Π rank(Pʲ)`.
//!
//! Interval propagators are passed in the forward direction: `intervals[j]`
//! maps slot `j`'s time to slot `j + 1`'s.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{max_abs, ComplexOperator, DensityOperator, Matrix, Projector, Tolerances, UnitaryOperator};

/// A complete set of orthogonal projectors at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct HistorySlot {
    time_index: usize,
    basis: Vec<Projector>,
}

impl HistorySlot {
    pub fn new(time_index: usize, basis: Vec<Projector>) -> Result<Self> {
        let tol = Tolerances::default();
        let invalid = |reason: String| Error::InvalidSlot { slot: time_index, reason };
        let first = basis.first().ok_or_else(|| invalid("empty basis".into()))?;
        let dim = first.dim();
        let mut sum = Matrix::zeros(dim, dim);
        for (i, p) in basis.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
            sum += p.matrix();
            for (j, q) in basis.iter().enumerate().skip(i + 1) {
                let overlap = max_abs(&(p.matrix() * q.matrix()));
                if overlap > tol.idem {
                    return Err(invalid(format!("projectors {i} and {j} overlap by {overlap:.3e}")));
                }
            }
        }
        let completeness = max_abs(&(sum - Matrix::identity(dim, dim)));
        if completeness > tol.recon {
            return Err(invalid(format!("projectors do not sum to identity (deviation {completeness:.3e})")));
        }
        Ok(Self { time_index, basis })
    }

    /// The computational basis `{|0⟩⟨0|, …}`.
    pub fn computational(time_index: usize, dim: usize) -> Self {
        let basis = (0..dim).map(|i| Projector::basis(dim, i).expect("index in range")).collect();
        Self { time_index, basis }
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn basis(&self) -> &[Projector] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis[0].dim()
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

/// One basis label per slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct HistorySequence(Vec<usize>);

impl HistorySequence {
    pub fn new(labels: Vec<usize>) -> Self {
        Self(labels)
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check(&self, slots: &[HistorySlot]) -> Result<()> {
        if self.0.len() != slots.len() {
            return Err(Error::InvalidArgument(format!(
                "sequence has {} labels for {} slots",
                self.0.len(),
                slots.len()
            )));
        }
        for (slot, (&label, s)) in self.0.iter().zip(slots).enumerate() {
            if label >= s.len() {
                return Err(Error::LabelOutOfRange { slot, label, size: s.len() });
            }
        }
        Ok(())
    }
}

impl fmt::Display for HistorySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOperator(ComplexOperator);

impl ChainOperator {
    pub fn operator(&self) -> &ComplexOperator {
        &self.0
    }

    pub fn matrix(&self) -> &Matrix {
        self.0.matrix()
    }
}

fn check_shapes(slots: &[HistorySlot], intervals: &[UnitaryOperator]) -> Result<usize> {
    let first = slots.first().ok_or_else(|| Error::InvalidArgument("no history slots".into()))?;
    let dim = first.dim();
    let expected = slots.len() - 1;
    if intervals.len() != expected {
        return Err(Error::IntervalCount { expected, found: intervals.len() });
    }
    for found in slots.iter().map(HistorySlot::dim).chain(intervals.iter().map(UnitaryOperator::dim)) {
        if found != dim {
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
    }
    Ok(dim)
}

/// `P¹_{α₁} U₁† P²_{α₂} U₂† … Pᵏ_{α_k}` for forward propagators `Uⱼ`.
pub fn chain_operator(
    slots: &[HistorySlot],
    seq: &HistorySequence,
    intervals: &[UnitaryOperator],
) -> Result<ChainOperator> {
    check_shapes(slots, intervals)?;
    seq.check(slots)?;
    Ok(ChainOperator(ComplexOperator::from_matrix_unchecked(chain_matrix(slots, seq.labels(), intervals))))
}

fn chain_matrix(slots: &[HistorySlot], labels: &[usize], intervals: &[UnitaryOperator]) -> Matrix {
    let mut k = slots[0].basis[labels[0]].matrix().clone();
    for ((slot, &label), u) in slots.iter().zip(labels).skip(1).zip(intervals) {
        k = k * u.matrix().adjoint() * slot.basis[label].matrix();
    }
    k
}

/// `|Tr(ρ_p K ρ_m)|`
pub fn sequence_weight(rho_p: &DensityOperator, k: &ChainOperator, rho_m: &DensityOperator) -> Result<f64> {
    let dim = rho_p.dim();
    for found in [k.0.dim(), rho_m.dim()] {
        if found != dim {
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
    }
    Ok((rho_p.matrix() * k.matrix() * rho_m.matrix()).trace().norm())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub sequence: HistorySequence,
    pub weight: f64,
    /// `Π rank(Pʲ_{αⱼ})`, the trace of the history's product projector.
    pub multiplicity: usize,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistoryDistribution {
    /// Every sequence, lexicographic in slot labels.
    pub entries: Vec<HistoryEntry>,
    pub normalization: f64,
}

impl HistoryDistribution {
    pub fn probability(&self, labels: &[usize]) -> Option<f64> {
        self.entries.iter().find(|e| e.sequence.labels() == labels).map(|e| e.probability)
    }

    pub fn weight(&self, labels: &[usize]) -> Option<f64> {
        self.entries.iter().find(|e| e.sequence.labels() == labels).map(|e| e.weight)
    }

    /// Total probability of the sequences carrying `label` at `slot`.
    pub fn marginal(&self, slot: usize, label: usize) -> f64 {
        self.entries.iter().filter(|e| e.sequence.labels().get(slot) == Some(&label)).map(|e| e.probability).sum()
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HistoryOptions {
    pub max_sequences: usize,
}

impl Default for HistoryOptions {
    fn default() -> Self {
        Self { max_sequences: 1_000_000 }
    }
}

pub fn history_distribution(
    rho_p: &DensityOperator,
    slots: &[HistorySlot],
    intervals: &[UnitaryOperator],
    rho_m: &DensityOperator,
) -> Result<HistoryDistribution> {
    history_distribution_with(rho_p, slots, intervals, rho_m, HistoryOptions::default())
}

pub fn history_distribution_with(
    rho_p: &DensityOperator,
    slots: &[HistorySlot],
    intervals: &[UnitaryOperator],
    rho_m: &DensityOperator,
    options: HistoryOptions,
) -> Result<HistoryDistribution> {
    let dim = check_shapes(slots, intervals)?;
    for found in [rho_p.dim(), rho_m.dim()] {
        if found != dim {
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
    }
    let requested = slots.iter().try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128)).unwrap_or(u128::MAX);
    if requested > options.max_sequences as u128 {
        return Err(Error::SequenceCapExceeded { requested, cap: options.max_sequences });
    }

    // Tr(ρ_p K ρ_m) = Tr(ρ_m ρ_p K)
    let boundary = rho_m.matrix() * rho_p.matrix();
    let mut entries = Vec::with_capacity(requested as usize);
    let mut labels = vec![0usize; slots.len()];
    loop {
        let k = chain_matrix(slots, &labels, intervals);
        let weight = (&boundary * k).trace().norm();
        let multiplicity = slots.iter().zip(&labels).map(|(s, &l)| s.basis[l].rank()).product();
        entries.push(HistoryEntry { sequence: HistorySequence(labels.clone()), weight, multiplicity, probability: 0.0 });
        if !advance(&mut labels, slots) {
            break;
        }
    }

    let normalization: f64 = entries.iter().map(|e| e.weight * e.multiplicity as f64).sum();
    if normalization <= Tolerances::default().norm {
        return Err(Error::AllWeightsZero { normalization });
    }
    for e in &mut entries {
        e.probability = e.weight * e.multiplicity as f64 / normalization;
    }
    Ok(HistoryDistribution { entries, normalization })
}

/// Odometer step, last slot fastest. Returns false after the final sequence.
fn advance(labels: &mut [usize], slots: &[HistorySlot]) -> bool {
    for (l, s) in labels.iter_mut().zip(slots).rev() {
        *l += 1;
        if *l < s.len() {
            return true;
        }
        *l = 0;
    }
    false
}
