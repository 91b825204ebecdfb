//! A system measured by a two-part instrument, and Born-rule recovery from
//! sampling the final boundary.
//!
//! The instrument splits into an `m` part, whose outcome records never
//! superpose before the final boundary, and an `n` part, which may. After the
//! interaction the joint state is `Σᵢ μᵢ |qᵢ⟩|mᵢ⟩|nᵢ⟩`; by the final time each
//! branch has spread into
//!
//! ```text
//! Σᵢ μᵢ (Σ_α c_iα |q_α⟩)(Σ_β d_iβ |m_β⟩)(Σ_γ e_iγ |n_γ⟩)
//! ```
//!
//! where `d_i` is supported on block `{β}ᵢ` and the blocks are disjoint. The
//! final boundary is a product basis state drawn with probability
//! `|⟨b′|ψ_f⟩|²`; the block holding its `m` component names the outcome.

use std::ops::Range;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{Matrix, StateVector, SubsystemLayout, Tolerances, UnitaryOperator, C64};
use crate::random::{random_amplitudes, run_rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MeasurementDims {
    pub system: usize,
    /// Instrument part whose records do not superpose.
    pub m: usize,
    /// Instrument part allowed to superpose.
    pub n: usize,
}

impl Default for MeasurementDims {
    fn default() -> Self {
        Self { system: 2, m: 4, n: 4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementModel {
    mu: Vec<C64>,
    dims: MeasurementDims,
    blocks: Vec<Range<usize>>,
    c: Vec<DVector<C64>>,
    d: Vec<DVector<C64>>,
    e: Vec<DVector<C64>>,
    seed: u64,
    run: u64,
}

/// `m` indices split into `k` contiguous, disjoint, near-equal blocks.
pub fn outcome_blocks(m: usize, k: usize) -> Vec<Range<usize>> {
    (0..k).map(|i| (i * m / k)..((i + 1) * m / k)).collect()
}

fn check_mu(mu: &[C64]) -> Result<()> {
    if mu.is_empty() {
        return Err(Error::InvalidArgument("no outcome amplitudes".into()));
    }
    let norm: f64 = mu.iter().map(|z| z.norm_sqr()).sum();
    let tol = Tolerances::default().norm;
    if (norm - 1.0).abs() > tol {
        return Err(Error::InvalidArgument(format!("Σ|μᵢ|² = {norm}, expected 1")));
    }
    Ok(())
}

/// Model with final-stage coefficients drawn from run 0 of `seed`.
pub fn build_measurement_model(mu: &[C64], dims: MeasurementDims, seed: u64) -> Result<MeasurementModel> {
    MeasurementModel::for_run(mu, dims, seed, 0)
}

impl MeasurementModel {
    /// Model for run `run` of a seeded experiment.
    pub fn for_run(mu: &[C64], dims: MeasurementDims, seed: u64, run: u64) -> Result<Self> {
        Self::draw(mu, dims, seed, run, &mut run_rng(seed, run))
    }

    fn draw<R: Rng + ?Sized>(mu: &[C64], dims: MeasurementDims, seed: u64, run: u64, rng: &mut R) -> Result<Self> {
        check_mu(mu)?;
        let k = mu.len();
        if dims.system == 0 || dims.n == 0 {
            return Err(Error::InvalidArgument("subsystem dimensions must be positive".into()));
        }
        if dims.m < k {
            return Err(Error::InvalidArgument(format!(
                "instrument record dimension {} cannot hold {k} disjoint outcome blocks",
                dims.m
            )));
        }
        let blocks = outcome_blocks(dims.m, k);
        let mut c = Vec::with_capacity(k);
        let mut d = Vec::with_capacity(k);
        let mut e = Vec::with_capacity(k);
        for block in &blocks {
            c.push(DVector::from_vec(random_amplitudes(dims.system, rng)));
            let mut di = DVector::zeros(dims.m);
            for (slot, z) in block.clone().zip(random_amplitudes(block.len(), rng)) {
                di[slot] = z;
            }
            d.push(di);
            e.push(DVector::from_vec(random_amplitudes(dims.n, rng)));
        }
        Ok(Self { mu: mu.to_vec(), dims, blocks, c, d, e, seed, run })
    }

    pub fn mu(&self) -> &[C64] {
        &self.mu
    }

    pub fn dims(&self) -> MeasurementDims {
        self.dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn run(&self) -> u64 {
        self.run
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    /// `(system, m, n)`
    pub fn layout(&self) -> SubsystemLayout {
        SubsystemLayout::new(vec![self.dims.system, self.dims.m, self.dims.n]).expect("positive dims")
    }

    /// Final-stage coefficient vectors `(c_i, d_i, e_i)` of outcome `i`.
    pub fn coefficients(&self, i: usize) -> (&DVector<C64>, &DVector<C64>, &DVector<C64>) {
        (&self.c[i], &self.d[i], &self.e[i])
    }

    /// `Σᵢ μᵢ |qᵢ⟩|mᵢ⟩|nᵢ⟩` right after the interaction, with `qᵢ = |i mod dim⟩`,
    /// `mᵢ` the first record state of block `i` and `nᵢ = |i mod n⟩`.
    pub fn post_measurement_state(&self) -> StateVector {
        let mut psi = DVector::zeros(self.layout().total());
        let layout = self.layout();
        for (i, (mu, block)) in self.mu.iter().zip(&self.blocks).enumerate() {
            psi[layout.flat(&[i % self.dims.system, block.start, i % self.dims.n])] += *mu;
        }
        StateVector::from_vector_unchecked(psi)
    }

    /// `Σᵢ μᵢ cᵢ ⊗ dᵢ ⊗ eᵢ`
    pub fn final_state(&self) -> StateVector {
        let mut psi = DVector::zeros(self.layout().total());
        for i in 0..self.mu.len() {
            psi += self.c[i].kronecker(&self.d[i]).kronecker(&self.e[i]) * self.mu[i];
        }
        StateVector::from_vector_unchecked(psi)
    }

    /// Outcome whose record block contains instrument index `beta`.
    pub fn outcome_of(&self, beta: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&beta))
    }
}

/// One orthonormal basis per subsystem, stored as unitary columns.
#[derive(Clone, Debug)]
pub struct ProductBasis {
    layout: SubsystemLayout,
    bases: Vec<UnitaryOperator>,
    /// `(B₀ ⊗ B₁ ⊗ …)†`, or `None` for the computational basis.
    analysis: Option<Matrix>,
}

impl ProductBasis {
    pub fn new(layout: SubsystemLayout, bases: Vec<UnitaryOperator>) -> Result<Self> {
        if bases.len() != layout.len() {
            return Err(Error::InvalidArgument(format!(
                "{} bases given for {} subsystems",
                bases.len(),
                layout.len()
            )));
        }
        for (b, &d) in bases.iter().zip(layout.dims()) {
            if b.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: b.dim() });
            }
        }
        let full = bases[1..].iter().fold(bases[0].matrix().clone(), |acc, b| acc.kronecker(b.matrix()));
        Ok(Self { layout, bases, analysis: Some(full.adjoint()) })
    }

    pub fn computational(layout: SubsystemLayout) -> Self {
        let bases = layout.dims().iter().map(|&d| UnitaryOperator::identity(d)).collect();
        Self { layout, bases, analysis: None }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn bases(&self) -> &[UnitaryOperator] {
        &self.bases
    }

    /// `|⟨b′|ψ⟩|²` for every product label, in flat order.
    pub fn probabilities(&self, psi: &StateVector) -> Result<Vec<f64>> {
        if psi.dim() != self.layout.total() {
            return Err(Error::DimensionMismatch { expected: self.layout.total(), found: psi.dim() });
        }
        Ok(match &self.analysis {
            Some(m) => (m * psi.amplitudes()).iter().map(|z| z.norm_sqr()).collect(),
            None => psi.amplitudes().iter().map(|z| z.norm_sqr()).collect(),
        })
    }
}

/// Draws one product-basis label `b′` with probability `|⟨b′|ψ_f⟩|²`.
/// Returns the per-subsystem digits of the label.
pub fn gleason_sample<R: Rng + ?Sized>(psi_f: &StateVector, basis: &ProductBasis, rng: &mut R) -> Result<Vec<usize>> {
    let probs = basis.probabilities(psi_f)?;
    let total: f64 = probs.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = probs.len() - 1;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if target < acc {
            chosen = i;
            break;
        }
    }
    // Never land on a zero-probability label through round-off at the tail.
    while probs[chosen] == 0.0 && chosen > 0 {
        chosen -= 1;
    }
    Ok(basis.layout.digits(chosen))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutcomeFrequency {
    pub outcome: usize,
    pub count: u64,
    pub frequency: f64,
    /// `sqrt(f (1 − f) / runs)`
    pub std_error: f64,
    /// `|μⱼ|²`
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BornReport {
    pub runs: u64,
    pub seed: u64,
    pub dims: MeasurementDims,
    pub outcomes: Vec<OutcomeFrequency>,
}

impl BornReport {
    /// Largest `|frequency − |μⱼ|²|`.
    pub fn max_deviation(&self) -> f64 {
        self.outcomes.iter().map(|o| (o.frequency - o.expected).abs()).fold(0.0, f64::max)
    }
}

/// Repeats the measurement `runs` times with fresh final-stage coefficients
/// and tallies which outcome block the sampled final boundary falls in.
///
/// Run `r` uses ChaCha8 stream `r` of `seed` for both its coefficients and
/// its sample, so the result does not depend on thread scheduling.
pub fn born_recovery_experiment(mu: &[C64], dims: MeasurementDims, runs: u64, seed: u64) -> Result<BornReport> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    check_mu(mu)?;
    // Validates dims once up front.
    let probe = MeasurementModel::for_run(mu, dims, seed, 0)?;
    let basis = ProductBasis::computational(probe.layout());

    let outcomes: Vec<usize> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(seed, run);
            let model = MeasurementModel::draw(mu, dims, seed, run, &mut rng)?;
            let label = gleason_sample(&model.final_state(), &basis, &mut rng)?;
            model
                .outcome_of(label[1])
                .ok_or_else(|| Error::InvalidArgument(format!("record index {} lies in no outcome block", label[1])))
        })
        .collect::<Result<_>>()?;

    let mut counts = vec![0u64; mu.len()];
    for o in outcomes {
        counts[o] += 1;
    }
    let n = runs as f64;
    let outcomes = counts
        .iter()
        .enumerate()
        .map(|(j, &count)| {
            let f = count as f64 / n;
            OutcomeFrequency {
                outcome: j,
                count,
                frequency: f,
                std_error: (f * (1.0 - f) / n).sqrt(),
                expected: mu[j].norm_sqr(),
            }
        })
        .collect();
    Ok(BornReport { runs, seed, dims, outcomes })
}
