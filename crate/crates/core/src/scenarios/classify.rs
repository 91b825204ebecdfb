//! Type I / Type II classification of subsystems at a time slice.
//!
//! A subsystem is Type I at `t` when its preferred-basis states are carried
//! into preferred-basis states (up to phase) on at least one side of `t`,
//! from the initial boundary to `t` or from `t` to the final boundary. Its
//! state at `t` is then fixed by that boundary. Otherwise it is Type II. A
//! composite is Type I as soon as one of its parts is.
//!
//! Schedules are factored: each interval is a list of unitaries tagged with
//! the subsystems they act on. Local factors on one subsystem are composed
//! and judged together. A factor spanning several subsystems must map
//! product basis states to product basis states, and must not copy the label
//! of a superposed participant onto a clean one; otherwise the clean one is
//! entangled and counts as superposed from then on. The final side is swept
//! backward from the final boundary with adjoint factors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{embed, Matrix, SubsystemLayout, Tolerances, UnitaryOperator};

/// A unitary acting on the listed subsystems, Kronecker-ordered as listed.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalFactor {
    pub acts_on: Vec<usize>,
    pub unitary: UnitaryOperator,
}

impl IntervalFactor {
    pub fn new(acts_on: Vec<usize>, unitary: UnitaryOperator) -> Self {
        Self { acts_on, unitary }
    }

    pub fn local(subsystem: usize, unitary: UnitaryOperator) -> Self {
        Self { acts_on: vec![subsystem], unitary }
    }
}

/// Intervals `t_j → t_{j+1}`, each a time-ordered list of factors.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredSchedule {
    layout: SubsystemLayout,
    intervals: Vec<Vec<IntervalFactor>>,
}

impl FactoredSchedule {
    pub fn new(layout: SubsystemLayout, intervals: Vec<Vec<IntervalFactor>>) -> Result<Self> {
        for (j, interval) in intervals.iter().enumerate() {
            for f in interval {
                if f.acts_on.is_empty() {
                    return Err(Error::UntaggedInterval { interval: j });
                }
                let mut seen = vec![false; layout.len()];
                for &s in &f.acts_on {
                    layout.check_index(s)?;
                    if std::mem::replace(&mut seen[s], true) {
                        return Err(Error::InvalidArgument(format!("interval {j}: subsystem {s} tagged twice")));
                    }
                }
                let expected: usize = f.acts_on.iter().map(|&s| layout.dims()[s]).product();
                if f.unitary.dim() != expected {
                    return Err(Error::DimensionMismatch { expected, found: f.unitary.dim() });
                }
            }
        }
        Ok(Self { layout, intervals })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn intervals(&self) -> &[Vec<IntervalFactor>] {
        &self.intervals
    }

    /// Number of time slices, one more than the number of intervals.
    pub fn times(&self) -> usize {
        self.intervals.len() + 1
    }

    /// Full-space propagator of interval `j`.
    pub fn interval_unitary(&self, j: usize) -> Result<UnitaryOperator> {
        let n = self.layout.total();
        let mut u = Matrix::identity(n, n);
        for f in &self.intervals[j] {
            u = embed(f.unitary.operator(), &self.layout, &f.acts_on)?.into_matrix() * u;
        }
        Ok(UnitaryOperator::from_operator_unchecked(crate::hilbert::ComplexOperator::from_matrix_unchecked(u)))
    }

    /// Propagator from the first to the last time slice.
    pub fn propagator(&self) -> Result<UnitaryOperator> {
        let steps = (0..self.intervals.len()).map(|j| self.interval_unitary(j)).collect::<Result<Vec<_>>>()?;
        UnitaryOperator::sequence(self.layout.total(), &steps)
    }

    pub fn with_interval(mut self, interval: Vec<IntervalFactor>) -> Result<Self> {
        self.intervals.push(interval);
        Self::new(self.layout, self.intervals)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EventType {
    #[serde(rename = "type_i")]
    TypeI,
    #[serde(rename = "type_ii")]
    TypeII,
}

impl std::fmt::Display for EventType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EventType::TypeI => "Type I",
            EventType::TypeII => "Type II",
        })
    }
}

/// What happens to a subsystem's preferred basis on one side of `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "interval")]
pub enum Side {
    /// Basis states map to basis states across the whole range.
    Clean,
    /// A superposition forms; the interval that produced it.
    Superposed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SubsystemVerdict {
    pub subsystem: usize,
    pub event: EventType,
    /// From the initial boundary up to `t`.
    pub initial_side: Side,
    /// From `t` to the final boundary.
    pub final_side: Side,
}

impl SubsystemVerdict {
    /// Time range `(from, to)` over which the basis stays unsuperposed, for
    /// Type I verdicts. Prefers the final-boundary side.
    pub fn witness(&self, t: usize, times: usize) -> Option<(usize, usize)> {
        match (self.final_side, self.initial_side) {
            (Side::Clean, _) => Some((t, times - 1)),
            (_, Side::Clean) => Some((0, t)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassificationReport {
    pub time: usize,
    pub times: usize,
    pub subsystems: Vec<SubsystemVerdict>,
    pub overall: EventType,
}

impl ClassificationReport {
    /// Verdict for the composite of the given subsystems.
    pub fn composite(&self, members: &[usize]) -> EventType {
        let any_type_i =
            self.subsystems.iter().any(|v| members.contains(&v.subsystem) && v.event == EventType::TypeI);
        if any_type_i {
            EventType::TypeI
        } else {
            EventType::TypeII
        }
    }
}

/// Exactly one entry of modulus one per column, the rest zero.
pub fn is_generalized_permutation(m: &Matrix, tol: f64) -> bool {
    m.column_iter().all(|col| {
        let big: Vec<f64> = col.iter().map(|z| z.norm()).filter(|&x| x > tol).collect();
        big.len() == 1 && (big[0] - 1.0).abs() <= tol
    })
}

fn in_basis(u: &Matrix, basis: &Matrix) -> Matrix {
    basis.adjoint() * u * basis
}

/// Basis-label map of a generalized permutation: `cols[i]` is the row
/// holding column `i`'s single nonzero entry.
fn permutation_targets(m: &Matrix, tol: f64) -> Vec<usize> {
    m.column_iter().map(|col| col.iter().position(|z| z.norm() > tol).expect("nonzero column")).collect()
}

/// Mixed-radix digits of `flat` for the given dimensions, most significant
/// first.
fn digits(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = flat % d;
        flat /= d;
    }
    out
}

/// Sweeps `range` of the schedule, forward from the initial boundary or
/// backward (with adjoints) from the final one, and reports for every
/// subsystem whether its preferred basis gets superposed.
///
/// Local factors on a subsystem are composed until the subsystem next takes
/// part in a joint factor, so a splitter followed by its inverse leaves no
/// superposition. A joint factor that is not a generalized permutation
/// superposes all its participants. A generalized permutation superposes a
/// clean participant when that participant's output label depends on the
/// label of an already superposed one, i.e. when it becomes entangled with
/// it.
fn sweep(
    schedule: &FactoredSchedule,
    bases: &[UnitaryOperator],
    range: std::ops::Range<usize>,
    backward: bool,
) -> Vec<Side> {
    let tol = Tolerances::default().recon;
    let dims = schedule.layout.dims();
    let n = dims.len();
    let mut local: Vec<Matrix> = dims.iter().map(|&d| Matrix::identity(d, d)).collect();
    let mut pending: Vec<Option<usize>> = vec![None; n];
    let mut side = vec![Side::Clean; n];

    let flush = |s: usize, local: &mut Vec<Matrix>, pending: &mut Vec<Option<usize>>, side: &mut Vec<Side>| {
        if let Some(at) = pending[s].take() {
            if side[s] == Side::Clean && !is_generalized_permutation(&in_basis(&local[s], bases[s].matrix()), tol) {
                side[s] = Side::Superposed(at);
            }
            local[s] = Matrix::identity(dims[s], dims[s]);
        }
    };

    let order: Vec<usize> = if backward { range.rev().collect() } else { range.collect() };
    for j in order {
        let factors = &schedule.intervals[j];
        let factors: Vec<&IntervalFactor> =
            if backward { factors.iter().rev().collect() } else { factors.iter().collect() };
        for f in factors {
            let u = if backward { f.unitary.matrix().adjoint() } else { f.unitary.matrix().clone() };
            if let [s] = f.acts_on[..] {
                local[s] = &u * &local[s];
                pending[s] = Some(j);
                continue;
            }
            for &p in &f.acts_on {
                flush(p, &mut local, &mut pending, &mut side);
            }
            let joint = f.acts_on[1..]
                .iter()
                .fold(bases[f.acts_on[0]].matrix().clone(), |acc, &t| acc.kronecker(bases[t].matrix()));
            let g = in_basis(&u, &joint);
            if !is_generalized_permutation(&g, tol) {
                for &p in &f.acts_on {
                    if side[p] == Side::Clean {
                        side[p] = Side::Superposed(j);
                    }
                }
                continue;
            }
            let part_dims: Vec<usize> = f.acts_on.iter().map(|&p| dims[p]).collect();
            let superposed: Vec<bool> = f.acts_on.iter().map(|&p| side[p] != Side::Clean).collect();
            if !superposed.iter().any(|&x| x) {
                continue;
            }
            // For each clean participant, its output label must be a function
            // of the clean input labels alone.
            let targets = permutation_targets(&g, tol);
            let mut seen: std::collections::HashMap<Vec<usize>, Vec<usize>> = std::collections::HashMap::new();
            let mut entangled = vec![false; f.acts_on.len()];
            for (col, &row) in targets.iter().enumerate() {
                let input = digits(col, &part_dims);
                let output = digits(row, &part_dims);
                let key: Vec<usize> =
                    input.iter().zip(&superposed).filter(|(_, &sup)| !sup).map(|(&d, _)| d).collect();
                match seen.get(&key) {
                    Some(first) => {
                        for k in 0..f.acts_on.len() {
                            if !superposed[k] && first[k] != output[k] {
                                entangled[k] = true;
                            }
                        }
                    }
                    None => {
                        seen.insert(key, output);
                    }
                }
            }
            for (k, &p) in f.acts_on.iter().enumerate() {
                if entangled[k] {
                    side[p] = Side::Superposed(j);
                }
            }
        }
    }
    for s in 0..n {
        flush(s, &mut local, &mut pending, &mut side);
    }
    side
}

/// Classifies every subsystem at time slice `t` (0 = initial boundary).
///
/// `preferred_bases[s]` holds subsystem `s`'s preferred basis as columns.
pub fn classify_subsystems(
    schedule: &FactoredSchedule,
    preferred_bases: &[UnitaryOperator],
    t: usize,
) -> Result<ClassificationReport> {
    let layout = &schedule.layout;
    if preferred_bases.len() != layout.len() {
        return Err(Error::InvalidArgument(format!(
            "{} preferred bases for {} subsystems",
            preferred_bases.len(),
            layout.len()
        )));
    }
    for (b, &d) in preferred_bases.iter().zip(layout.dims()) {
        if b.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: b.dim() });
        }
    }
    let n = schedule.intervals.len();
    if t > n {
        return Err(Error::InvalidArgument(format!("time slice {t} beyond final boundary {n}")));
    }
    let initial = sweep(schedule, preferred_bases, 0..t, false);
    let finals = sweep(schedule, preferred_bases, t..n, true);
    let subsystems: Vec<SubsystemVerdict> = (0..layout.len())
        .map(|s| {
            let (initial_side, final_side) = (initial[s], finals[s]);
            let event = if initial_side == Side::Clean || final_side == Side::Clean {
                EventType::TypeI
            } else {
                EventType::TypeII
            };
            SubsystemVerdict { subsystem: s, event, initial_side, final_side }
        })
        .collect();
    let overall =
        if subsystems.iter().any(|v| v.event == EventType::TypeI) { EventType::TypeI } else { EventType::TypeII };
    Ok(ClassificationReport { time: t, times: n + 1, subsystems, overall })
}

/// Computational bases for every subsystem of `layout`.
pub fn computational_bases(layout: &SubsystemLayout) -> Vec<UnitaryOperator> {
    layout.dims().iter().map(|&d| UnitaryOperator::identity(d)).collect()
}
