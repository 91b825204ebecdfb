//! Scenario files: a versioned TOML description of a layout, named
//! operators, a schedule of intervals and per-command parameters.
//!
//! Parsing has two stages. The text is deserialized into a [`ScenarioDoc`],
//! which mirrors the file and serializes back to it. The document is then
//! resolved: every reference is looked up, every operator is validated for
//! its declared kind and every section is checked against the layout. Errors
//! from either stage carry a 1-based line and column.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

use crate::boundary::BoundaryPair;
use crate::error::Error;
use crate::hilbert::{
    c64, embed, tensor, ComplexOperator, DensityOperator, Projector, StateVector, SubsystemLayout, UnitaryOperator,
    Verdict, C64,
};
use crate::histories::HistorySlot;
use crate::scenarios::{FactoredSchedule, IntervalFactor, MeasurementDims};

/// The only format version this build reads and writes.
pub const SCENARIO_VERSION: u32 = 1;

/// 1-based position in the scenario text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl Location {
    fn of(text: &str, offset: usize) -> Self {
        let offset = offset.min(text.len());
        let before = &text[..offset];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        Self { line, column: text[line_start..offset].chars().count() + 1 }
    }
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("syntax error at {location}: {message}")]
    Syntax { location: Location, message: String },

    #[error("unresolved reference `{name}` at {location}")]
    UnresolvedReference { name: String, location: Location },

    #[error("`{name}` at {location} is a {found}, expected {expected}")]
    WrongKind { name: String, location: Location, expected: String, found: OperatorKindName },

    #[error("cyclic definition through `{name}` at {location}")]
    Cycle { name: String, location: Location },

    #[error("definition of `{name}` at {location}: {message}")]
    Definition { name: String, location: Location, message: String },

    #[error("operator `{name}` at {location} is {verdict}")]
    Invalid { name: String, location: Location, verdict: Verdict },

    #[error("{context} at {location}: {source}")]
    Library { context: String, location: Location, source: Error },
}

impl ScenarioError {
    /// Syntax and reference problems are parse errors; everything that
    /// parsed but describes an invalid object is a validation failure.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            Self::Syntax { .. } | Self::UnresolvedReference { .. } | Self::WrongKind { .. } | Self::Cycle { .. }
                | Self::Definition { .. }
        )
    }

    pub fn location(&self) -> Location {
        match self {
            Self::Syntax { location, .. }
            | Self::UnresolvedReference { location, .. }
            | Self::WrongKind { location, .. }
            | Self::Cycle { location, .. }
            | Self::Definition { location, .. }
            | Self::Invalid { location, .. }
            | Self::Library { location, .. } => *location,
        }
    }
}

// ---------------------------------------------------------------------------
// Document model

/// A matrix or vector entry: a real number or an `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    pub fn value(self) -> C64 {
        match self {
            Entry::Real(re) => c64(re, 0.0),
            Entry::Complex([re, im]) => c64(re, im),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKindName {
    Unitary,
    Projector,
    Density,
    State,
}

impl std::fmt::Display for OperatorKindName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Unitary => "unitary",
            Self::Projector => "projector",
            Self::Density => "density",
            Self::State => "state",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constructor {
    Identity,
    BeamSplitter,
    MaximallyMixed,
}

/// One `[operators.NAME]` table. Exactly one source key must be present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDef {
    pub kind: OperatorKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<Entry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constructor: Option<Constructor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<Vec<Spanned<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<Vec<Spanned<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjoint: Option<Spanned<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDef {
    pub gate: Spanned<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acts_on: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalDef {
    #[serde(default)]
    pub factors: Vec<FactorDef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_i: Option<Spanned<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_f: Option<Spanned<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_a: Option<Spanned<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_b: Option<Spanned<String>>,
    /// Pure initial state for the constructed form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Spanned<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoriesDef {
    pub rho_p: Spanned<String>,
    pub rho_m: Spanned<String>,
    pub slots: Vec<Vec<Spanned<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sequences: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MziDef {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BornDef {
    pub mu: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_dim: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyDef {
    pub time: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_bases: Option<Vec<Spanned<String>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub groups: BTreeMap<String, Vec<usize>>,
}

/// The scenario file as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub version: Spanned<u32>,
    pub layout: Vec<usize>,
    /// Optional display names, one per subsystem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub operators: BTreeMap<Spanned<String>, OperatorDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<IntervalDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Spanned<BoundaryDef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histories: Option<Spanned<HistoriesDef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mzi: Option<MziDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub born: Option<Spanned<BornDef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<Spanned<ClassifyDef>>,
}

// ---------------------------------------------------------------------------
// Resolved model

/// A named operator after validation.
#[derive(Clone, Debug)]
pub enum Resolved {
    State(StateVector),
    Density(DensityOperator),
    Projector(Projector),
    Unitary(UnitaryOperator),
}

impl Resolved {
    pub fn kind(&self) -> OperatorKindName {
        match self {
            Self::State(_) => OperatorKindName::State,
            Self::Density(_) => OperatorKindName::Density,
            Self::Projector(_) => OperatorKindName::Projector,
            Self::Unitary(_) => OperatorKindName::Unitary,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::State(s) => s.dim(),
            Self::Density(d) => d.dim(),
            Self::Projector(p) => p.dim(),
            Self::Unitary(u) => u.dim(),
        }
    }

    /// Operator form; a state becomes its ray projector.
    fn operator(&self) -> ComplexOperator {
        match self {
            Self::State(s) => s.projector().operator().clone(),
            Self::Density(d) => d.operator().clone(),
            Self::Projector(p) => p.operator().clone(),
            Self::Unitary(u) => u.operator().clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScheduledFactor {
    pub gate: String,
    pub acts_on: Option<Vec<usize>>,
    pub unitary: UnitaryOperator,
}

#[derive(Clone, Debug)]
pub enum BoundarySpec {
    Explicit(BoundaryPair),
    /// Final boundary derived from `a` by Lüders projection onto `p_b`.
    Constructed { a: StateVector, p_b: Projector, propagator: UnitaryOperator },
}

#[derive(Clone, Debug)]
pub struct HistoriesSpec {
    pub rho_p: DensityOperator,
    pub rho_m: DensityOperator,
    pub slots: Vec<HistorySlot>,
    /// Projector names per slot, in label order.
    pub labels: Vec<Vec<String>>,
    pub max_sequences: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct BornSpec {
    pub mu: Vec<C64>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
    pub dims: MeasurementDims,
}

#[derive(Clone, Debug)]
pub struct ClassifySpec {
    pub time: usize,
    pub preferred_bases: Vec<UnitaryOperator>,
    pub groups: Vec<(String, Vec<usize>)>,
}

/// A fully resolved and validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    doc: ScenarioDoc,
    layout: SubsystemLayout,
    operators: BTreeMap<String, Resolved>,
    schedule: Vec<Vec<ScheduledFactor>>,
    intervals: Vec<UnitaryOperator>,
    boundary: Option<BoundarySpec>,
    histories: Option<HistoriesSpec>,
    born: Option<BornSpec>,
    classify: Option<ClassifySpec>,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.doc == other.doc
    }
}

impl Scenario {
    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn subsystem_name(&self, s: usize) -> String {
        match &self.doc.names {
            Some(names) => names[s].clone(),
            None => s.to_string(),
        }
    }

    pub fn operator(&self, name: &str) -> Option<&Resolved> {
        self.operators.get(name)
    }

    pub fn schedule(&self) -> &[Vec<ScheduledFactor>] {
        &self.schedule
    }

    /// Full-space unitary of each interval.
    pub fn intervals(&self) -> &[UnitaryOperator] {
        &self.intervals
    }

    /// Product of all intervals, from the first slice to the last.
    pub fn propagator(&self) -> UnitaryOperator {
        UnitaryOperator::sequence(self.layout.total(), &self.intervals).expect("intervals share the layout dimension")
    }

    /// The schedule with subsystem tags, as the classifier needs it. Factors
    /// written without `acts_on` are untagged unless the layout has a single
    /// subsystem.
    pub fn factored_schedule(&self) -> crate::Result<FactoredSchedule> {
        let single = self.layout.len() == 1;
        let intervals = self
            .schedule
            .iter()
            .map(|factors| {
                factors
                    .iter()
                    .map(|f| {
                        let acts_on = match &f.acts_on {
                            Some(a) => a.clone(),
                            None if single => vec![0],
                            None => Vec::new(),
                        };
                        IntervalFactor::new(acts_on, f.unitary.clone())
                    })
                    .collect()
            })
            .collect();
        FactoredSchedule::new(self.layout.clone(), intervals)
    }

    pub fn boundary(&self) -> Option<&BoundarySpec> {
        self.boundary.as_ref()
    }

    pub fn histories(&self) -> Option<&HistoriesSpec> {
        self.histories.as_ref()
    }

    pub fn mzi(&self) -> Option<&MziDef> {
        self.doc.mzi.as_ref()
    }

    pub fn born(&self) -> Option<&BornSpec> {
        self.born.as_ref()
    }

    pub fn classify(&self) -> Option<&ClassifySpec> {
        self.classify.as_ref()
    }

    /// Serializes the document back to TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.doc).expect("scenario documents are representable in TOML")
    }
}

/// Parses and resolves a scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| ScenarioError::Syntax {
        location: Location::of(text, e.span().map_or(0, |s| s.start)),
        message: e.message().trim().to_string(),
    })?;
    Resolver { text, doc: &doc, resolved: BTreeMap::new(), visiting: BTreeSet::new() }.finish(doc.clone())
}

// ---------------------------------------------------------------------------
// Resolution

struct Resolver<'a> {
    text: &'a str,
    doc: &'a ScenarioDoc,
    resolved: BTreeMap<String, Resolved>,
    visiting: BTreeSet<String>,
}

impl<'a> Resolver<'a> {
    fn at(&self, span: Range<usize>) -> Location {
        Location::of(self.text, span.start)
    }

    fn definition(&self, name: &str, span: Range<usize>, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Definition { name: name.to_string(), location: self.at(span), message: message.into() }
    }

    fn library(&self, context: impl Into<String>, span: Range<usize>, source: Error) -> ScenarioError {
        match source {
            Error::Invalid(verdict) => {
                ScenarioError::Invalid { name: context.into(), location: self.at(span), verdict }
            }
            source => ScenarioError::Library { context: context.into(), location: self.at(span), source },
        }
    }

    fn finish(mut self, doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
        let whole = 0..0;
        if *doc.version.get_ref() != SCENARIO_VERSION {
            return Err(self.definition(
                "version",
                doc.version.span(),
                format!("unsupported version {}, expected {SCENARIO_VERSION}", doc.version.get_ref()),
            ));
        }
        let layout = SubsystemLayout::new(doc.layout.clone()).map_err(|e| self.library("layout", whole.clone(), e))?;
        if let Some(names) = &doc.names {
            if names.len() != layout.len() {
                return Err(self.definition(
                    "names",
                    whole.clone(),
                    format!("{} names for {} subsystems", names.len(), layout.len()),
                ));
            }
        }

        for key in doc.operators.keys() {
            self.resolve(key.get_ref(), key.span())?;
        }

        let mut schedule = Vec::with_capacity(doc.schedule.len());
        let mut intervals = Vec::with_capacity(doc.schedule.len());
        for (j, interval) in doc.schedule.iter().enumerate() {
            let mut factors = Vec::with_capacity(interval.factors.len());
            let mut full = UnitaryOperator::identity(layout.total());
            for f in &interval.factors {
                let unitary = self.unitary(&f.gate)?;
                let context = format!("interval {j}, gate `{}`", f.gate.get_ref());
                let lifted = match &f.acts_on {
                    Some(acts_on) => embed(unitary.operator(), &layout, acts_on)
                        .map_err(|e| self.library(context.clone(), f.gate.span(), e))?,
                    None => {
                        self.expect_dim(&f.gate, unitary.dim(), layout.total())?;
                        unitary.operator().clone()
                    }
                };
                let lifted = UnitaryOperator::new(lifted).map_err(|e| self.library(context.clone(), f.gate.span(), e))?;
                full = full.then(&lifted).map_err(|e| self.library(context, f.gate.span(), e))?;
                factors.push(ScheduledFactor { gate: f.gate.get_ref().clone(), acts_on: f.acts_on.clone(), unitary });
            }
            schedule.push(factors);
            intervals.push(full);
        }
        let propagator = UnitaryOperator::sequence(layout.total(), &intervals).expect("same dimension");

        let boundary = match &doc.boundary {
            Some(b) => Some(self.boundary(b, &propagator, layout.total())?),
            None => None,
        };
        let histories = match &doc.histories {
            Some(h) => Some(self.histories(h, intervals.len(), layout.total())?),
            None => None,
        };
        let born = match &doc.born {
            Some(b) => Some(self.born(b)?),
            None => None,
        };
        let classify = match &doc.classify {
            Some(c) => Some(self.classify(c, &layout, doc.schedule.len())?),
            None => None,
        };

        Ok(Scenario {
            operators: self.resolved,
            doc,
            layout,
            schedule,
            intervals,
            boundary,
            histories,
            born,
            classify,
        })
    }

    fn lookup(&mut self, reference: &Spanned<String>) -> Result<Resolved, ScenarioError> {
        let name = reference.get_ref();
        if !self.doc.operators.contains_key(name.as_str()) {
            return Err(ScenarioError::UnresolvedReference { name: name.clone(), location: self.at(reference.span()) });
        }
        self.resolve(name, reference.span())
    }

    fn wrong_kind(&self, reference: &Spanned<String>, expected: &str, found: OperatorKindName) -> ScenarioError {
        ScenarioError::WrongKind {
            name: reference.get_ref().clone(),
            location: self.at(reference.span()),
            expected: expected.to_string(),
            found,
        }
    }

    fn expect_dim(&self, reference: &Spanned<String>, found: usize, expected: usize) -> Result<(), ScenarioError> {
        if found == expected {
            return Ok(());
        }
        Err(self.library(
            format!("`{}`", reference.get_ref()),
            reference.span(),
            Error::DimensionMismatch { expected, found },
        ))
    }

    fn unitary(&mut self, reference: &Spanned<String>) -> Result<UnitaryOperator, ScenarioError> {
        match self.lookup(reference)? {
            Resolved::Unitary(u) => Ok(u),
            other => Err(self.wrong_kind(reference, "unitary", other.kind())),
        }
    }

    /// A density operator or a state standing for its pure density.
    fn density(&mut self, reference: &Spanned<String>, dim: usize) -> Result<DensityOperator, ScenarioError> {
        let rho = match self.lookup(reference)? {
            Resolved::Density(d) => d,
            Resolved::State(s) => s.density(),
            other => return Err(self.wrong_kind(reference, "density or state", other.kind())),
        };
        self.expect_dim(reference, rho.dim(), dim)?;
        Ok(rho)
    }

    /// A projector or a state standing for its ray projector.
    fn projector(&mut self, reference: &Spanned<String>, dim: usize) -> Result<Projector, ScenarioError> {
        let p = match self.lookup(reference)? {
            Resolved::Projector(p) => p,
            Resolved::State(s) => s.projector(),
            other => return Err(self.wrong_kind(reference, "projector or state", other.kind())),
        };
        self.expect_dim(reference, p.dim(), dim)?;
        Ok(p)
    }

    fn state(&mut self, reference: &Spanned<String>, dim: usize) -> Result<StateVector, ScenarioError> {
        let s = match self.lookup(reference)? {
            Resolved::State(s) => s,
            other => return Err(self.wrong_kind(reference, "state", other.kind())),
        };
        self.expect_dim(reference, s.dim(), dim)?;
        Ok(s)
    }

    fn resolve(&mut self, name: &str, span: Range<usize>) -> Result<Resolved, ScenarioError> {
        if let Some(r) = self.resolved.get(name) {
            return Ok(r.clone());
        }
        if !self.visiting.insert(name.to_string()) {
            return Err(ScenarioError::Cycle { name: name.to_string(), location: self.at(span) });
        }
        let (key, def) = self.doc.operators.get_key_value(name).expect("caller checked the name");
        let resolved = self.build(key.get_ref(), key.span(), def)?;
        self.visiting.remove(name);
        self.resolved.insert(name.to_string(), resolved.clone());
        Ok(resolved)
    }

    fn build(&mut self, name: &str, span: Range<usize>, def: &OperatorDef) -> Result<Resolved, ScenarioError> {
        let sources = [
            def.matrix.is_some(),
            def.vector.is_some(),
            def.diagonal.is_some(),
            def.basis.is_some(),
            def.constructor.is_some(),
            def.tensor.is_some(),
            def.product.is_some(),
            def.adjoint.is_some(),
        ];
        let count = sources.iter().filter(|&&s| s).count();
        if count != 1 {
            return Err(self.definition(
                name,
                span,
                format!(
                    "exactly one of matrix, vector, diagonal, basis, constructor, tensor, product, adjoint is \
                     required, found {count}"
                ),
            ));
        }
        let kind = def.kind;
        let fail = |this: &Self, e: Error| this.library(name, span.clone(), e);

        if kind == OperatorKindName::State {
            let state = if let Some(v) = &def.vector {
                StateVector::new(v.iter().map(|e| e.value()).collect()).map_err(|e| fail(self, e))?
            } else if let Some(index) = def.basis {
                let dim = def.dim.ok_or_else(|| self.definition(name, span.clone(), "`basis` needs `dim`"))?;
                StateVector::basis(dim, index).map_err(|e| fail(self, e))?
            } else if let Some(parts) = &def.tensor {
                let mut acc: Option<StateVector> = None;
                for part in parts {
                    let s = match self.lookup(part)? {
                        Resolved::State(s) => s,
                        other => return Err(self.wrong_kind(part, "state", other.kind())),
                    };
                    acc = Some(match acc {
                        Some(a) => a.kron(&s),
                        None => s,
                    });
                }
                acc.ok_or_else(|| self.definition(name, span.clone(), "empty tensor list"))?
            } else {
                return Err(self.definition(name, span, "a state takes `vector`, `basis` or `tensor`"));
            };
            return Ok(Resolved::State(state));
        }

        let op = if let Some(rows) = &def.matrix {
            let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|e| e.value()).collect()).collect();
            if rows.iter().any(|r| r.len() != rows.len()) {
                return Err(self.definition(name, span, "matrix rows must all have as many entries as there are rows"));
            }
            ComplexOperator::from_rows(&rows).map_err(|e| fail(self, e))?
        } else if let Some(d) = &def.diagonal {
            if d.is_empty() {
                return Err(self.definition(name, span, "empty diagonal"));
            }
            ComplexOperator::diagonal(d)
        } else if let Some(v) = &def.vector {
            let s = StateVector::new(v.iter().map(|e| e.value()).collect()).map_err(|e| fail(self, e))?;
            s.projector().operator().clone()
        } else if let Some(index) = def.basis {
            let dim = def.dim.ok_or_else(|| self.definition(name, span.clone(), "`basis` needs `dim`"))?;
            StateVector::basis(dim, index).map_err(|e| fail(self, e))?.projector().operator().clone()
        } else if let Some(c) = def.constructor {
            self.construct(name, span.clone(), def, c)?
        } else if let Some(parts) = &def.tensor {
            let mut ops = Vec::with_capacity(parts.len());
            for part in parts {
                ops.push(self.lookup(part)?.operator());
            }
            tensor(&ops).map_err(|e| fail(self, e))?
        } else if let Some(parts) = &def.product {
            let mut acc: Option<ComplexOperator> = None;
            for part in parts {
                let next = self.lookup(part)?.operator();
                acc = Some(match acc {
                    Some(a) => a.product(&next).map_err(|e| self.library(name, part.span(), e))?,
                    None => next,
                });
            }
            acc.ok_or_else(|| self.definition(name, span.clone(), "empty product list"))?
        } else if let Some(of) = &def.adjoint {
            self.lookup(of)?.operator().adjoint()
        } else {
            unreachable!("one source is present")
        };

        let result = match kind {
            OperatorKindName::Unitary => UnitaryOperator::new(op).map(Resolved::Unitary),
            OperatorKindName::Projector => Projector::new(op).map(Resolved::Projector),
            OperatorKindName::Density => DensityOperator::new(op).map(Resolved::Density),
            OperatorKindName::State => unreachable!("handled above"),
        };
        result.map_err(|e| fail(self, e))
    }

    fn construct(
        &self,
        name: &str,
        span: Range<usize>,
        def: &OperatorDef,
        c: Constructor,
    ) -> Result<ComplexOperator, ScenarioError> {
        match c {
            Constructor::Identity => {
                let dim = def.dim.ok_or_else(|| self.definition(name, span, "`identity` needs `dim`"))?;
                Ok(ComplexOperator::identity(dim))
            }
            Constructor::MaximallyMixed => {
                let dim = def.dim.ok_or_else(|| self.definition(name, span, "`maximally_mixed` needs `dim`"))?;
                Ok(DensityOperator::maximally_mixed(dim).operator().clone())
            }
            Constructor::BeamSplitter => {
                let angle = def.angle.ok_or_else(|| self.definition(name, span, "`beam_splitter` needs `angle`"))?;
                Ok(crate::scenarios::beam_splitter(angle).operator().clone())
            }
        }
    }

    fn boundary(
        &mut self,
        def: &Spanned<BoundaryDef>,
        propagator: &UnitaryOperator,
        dim: usize,
    ) -> Result<BoundarySpec, ScenarioError> {
        let b = def.get_ref();
        let identity = |this: &mut Self, p: &Option<Spanned<String>>| match p {
            Some(r) => this.projector(r, dim),
            None => Ok(Projector::identity(dim)),
        };
        if let Some(a) = &b.a {
            if b.rho_i.is_some() || b.rho_f.is_some() || b.p_a.is_some() {
                return Err(self.definition(
                    "boundary",
                    def.span(),
                    "the constructed form takes only `a` and `p_b`",
                ));
            }
            let a = self.state(a, dim)?;
            let p_b = identity(self, &b.p_b)?;
            return Ok(BoundarySpec::Constructed { a, p_b, propagator: propagator.clone() });
        }
        let (Some(rho_i), Some(rho_f)) = (&b.rho_i, &b.rho_f) else {
            return Err(self.definition("boundary", def.span(), "needs `rho_i` and `rho_f`, or `a`"));
        };
        let rho_i = self.density(rho_i, dim)?;
        let rho_f = self.density(rho_f, dim)?;
        let p_a = identity(self, &b.p_a)?;
        let p_b = identity(self, &b.p_b)?;
        let pair = BoundaryPair::new(rho_i, rho_f, p_a, p_b, propagator.clone())
            .map_err(|e| self.library("boundary", def.span(), e))?;
        Ok(BoundarySpec::Explicit(pair))
    }

    fn histories(
        &mut self,
        def: &Spanned<HistoriesDef>,
        intervals: usize,
        dim: usize,
    ) -> Result<HistoriesSpec, ScenarioError> {
        let h = def.get_ref();
        let rho_p = self.density(&h.rho_p, dim)?;
        let rho_m = self.density(&h.rho_m, dim)?;
        if h.slots.len() != intervals + 1 {
            return Err(self.library(
                "histories",
                def.span(),
                Error::IntervalCount { expected: h.slots.len().saturating_sub(1), found: intervals },
            ));
        }
        let mut slots = Vec::with_capacity(h.slots.len());
        let mut labels = Vec::with_capacity(h.slots.len());
        for (t, names) in h.slots.iter().enumerate() {
            let mut basis = Vec::with_capacity(names.len());
            for n in names {
                basis.push(self.projector(n, dim)?);
            }
            let slot = HistorySlot::new(t, basis).map_err(|e| self.library("histories", def.span(), e))?;
            slots.push(slot);
            labels.push(names.iter().map(|n| n.get_ref().clone()).collect());
        }
        Ok(HistoriesSpec { rho_p, rho_m, slots, labels, max_sequences: h.max_sequences })
    }

    fn born(&self, def: &Spanned<BornDef>) -> Result<BornSpec, ScenarioError> {
        let b = def.get_ref();
        let defaults = MeasurementDims::default();
        let dims = MeasurementDims {
            system: b.system_dim.unwrap_or(defaults.system),
            m: b.m_dim.unwrap_or(defaults.m),
            n: b.n_dim.unwrap_or(defaults.n),
        };
        Ok(BornSpec { mu: b.mu.iter().map(|e| e.value()).collect(), runs: b.runs, seed: b.seed, dims })
    }

    fn classify(
        &mut self,
        def: &Spanned<ClassifyDef>,
        layout: &SubsystemLayout,
        intervals: usize,
    ) -> Result<ClassifySpec, ScenarioError> {
        let c = def.get_ref();
        if c.time > intervals {
            return Err(self.definition(
                "classify",
                def.span(),
                format!("time {} is past the final boundary at {intervals}", c.time),
            ));
        }
        let preferred_bases = match &c.preferred_bases {
            None => crate::scenarios::computational_bases(layout),
            Some(names) => {
                if names.len() != layout.len() {
                    return Err(self.definition(
                        "classify",
                        def.span(),
                        format!("{} preferred bases for {} subsystems", names.len(), layout.len()),
                    ));
                }
                let mut bases = Vec::with_capacity(names.len());
                for (n, &d) in names.iter().zip(layout.dims()) {
                    let u = self.unitary(n)?;
                    self.expect_dim(n, u.dim(), d)?;
                    bases.push(u);
                }
                bases
            }
        };
        let mut groups = Vec::with_capacity(c.groups.len());
        for (name, members) in &c.groups {
            for &m in members {
                layout.check_index(m).map_err(|e| self.library(format!("group `{name}`"), def.span(), e))?;
            }
            groups.push((name.clone(), members.clone()));
        }
        Ok(ClassifySpec { time: c.time, preferred_bases, groups })
    }
}
