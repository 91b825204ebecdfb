//! Command-line front end.
//!
//! `twotime <command> [--scenario FILE] [--format table|csv|json] ...`
//!
//! | exit | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | any other failure, e.g. the history enumeration cap |
//! | 2 | parse error: unreadable file, bad syntax, unresolved reference |
//! | 3 | impossible boundary |
//! | 4 | no consistent histories |
//! | 5 | validation failure, including missing command parameters |
//!
//! Reports go to stdout and diagnostics to stderr.

mod report;
mod scenario;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use thiserror::Error as ThisError;

pub use report::{format_real, round12, Cell, Format, Report, Section};
pub use scenario::{
    parse_scenario, BornDef, BornSpec, BoundaryDef, BoundarySpec, ClassifyDef, ClassifySpec, Constructor, Entry,
    FactorDef, HistoriesDef, HistoriesSpec, IntervalDef, Location, MziDef, OperatorDef, OperatorKindName, Resolved,
    Scenario, ScenarioDoc, ScenarioError, ScheduledFactor, SCENARIO_VERSION,
};

use crate::boundary::{classify_boundary_solution, construct_consistent_pair, BoundaryVerdict};
use crate::error::Error;
use crate::hilbert::{c64, C64};
use crate::histories::{history_distribution_with, HistoryOptions};
use crate::scenarios::{
    born_recovery_experiment, classify_subsystems, mzi_distribution, MeasurementDims, MziSetup, Side,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_IMPOSSIBLE_BOUNDARY: i32 = 3;
pub const EXIT_NO_CONSISTENT_HISTORIES: i32 = 4;
pub const EXIT_VALIDATION: i32 = 5;

pub const DEFAULT_RUNS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Classify the `[boundary]` pair as sqm, pure or inconsistent.
    CheckBoundary,
    /// Enumerate the `[histories]` distribution.
    Histories,
    /// Two-boundary versus single-boundary path probabilities in an MZI.
    Mzi,
    /// Born-rule recovery from final-boundary sampling.
    Born,
    /// Type I / Type II verdicts for the `[classify]` time slice.
    Classify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::CheckBoundary => "check-boundary",
            Self::Histories => "histories",
            Self::Mzi => "mzi",
            Self::Born => "born",
            Self::Classify => "classify",
        }
    }
}

#[derive(Clone, Debug, Parser)]
#[command(name = "twotime", version, about = "Two-boundary quantum simulations on small Hilbert spaces")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<u64>,
    /// First beam-splitter angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Second beam-splitter angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub phi: Option<f64>,
    /// Real outcome amplitudes for `born`, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub mu: Option<Vec<f64>>,
}

/// Command-line values that take precedence over the scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<u64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub mu: Option<Vec<f64>>,
}

impl From<&Args> for Overrides {
    fn from(a: &Args) -> Self {
        Self { seed: a.seed, runs: a.runs, theta: a.theta, phi: a.phi, mu: a.mu.clone() }
    }
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Scenario(#[from] ScenarioError),

    #[error("{command} needs {what}")]
    MissingParameter { command: &'static str, what: String },

    #[error("{context}: {source}")]
    Library { context: String, source: Error },
}

impl CliError {
    fn library(context: impl Into<String>) -> impl FnOnce(Error) -> CliError {
        let context = context.into();
        move |source| CliError::Library { context, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => EXIT_PARSE,
            Self::Scenario(e) if e.is_parse_error() => EXIT_PARSE,
            Self::Scenario(ScenarioError::Library { source, .. }) => library_exit_code(source),
            Self::Scenario(_) => EXIT_VALIDATION,
            Self::MissingParameter { .. } => EXIT_VALIDATION,
            Self::Library { source, .. } => library_exit_code(source),
        }
    }
}

pub fn library_exit_code(e: &Error) -> i32 {
    match e {
        Error::ImpossibleBoundary { .. } => EXIT_IMPOSSIBLE_BOUNDARY,
        Error::AllWeightsZero { .. } => EXIT_NO_CONSISTENT_HISTORIES,
        Error::SequenceCapExceeded { .. } | Error::EmptyFactors => EXIT_OTHER,
        Error::NotSquare { .. }
        | Error::NonFinite { .. }
        | Error::DimensionMismatch { .. }
        | Error::InvalidLayout(_)
        | Error::SubsystemOutOfRange { .. }
        | Error::Invalid(_)
        | Error::ZeroVector
        | Error::InvalidSlot { .. }
        | Error::LabelOutOfRange { .. }
        | Error::IntervalCount { .. }
        | Error::UntaggedInterval { .. }
        | Error::InvalidArgument(_) => EXIT_VALIDATION,
    }
}

pub fn load_scenario(path: &std::path::Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(parse_scenario(&text)?)
}

/// Runs `command` and returns its report.
pub fn run(command: Command, scenario: Option<&Scenario>, overrides: &Overrides) -> Result<Report, CliError> {
    match command {
        Command::CheckBoundary => check_boundary(require(command, scenario)?),
        Command::Histories => histories(require(command, scenario)?),
        Command::Mzi => mzi(scenario, overrides),
        Command::Born => born(scenario, overrides),
        Command::Classify => classify(require(command, scenario)?),
    }
}

/// Parses arguments already split by clap, runs the command and prints.
/// Returns the process exit code.
pub fn main_with(args: &Args) -> i32 {
    let outcome = args
        .scenario
        .as_deref()
        .map(load_scenario)
        .transpose()
        .and_then(|scenario| run(args.command, scenario.as_ref(), &Overrides::from(args)));
    match outcome {
        Ok(report) => {
            print!("{}", report.render(args.format));
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn require(command: Command, scenario: Option<&Scenario>) -> Result<&Scenario, CliError> {
    scenario.ok_or(CliError::MissingParameter { command: command.name(), what: "--scenario".into() })
}

fn missing(command: Command, what: &str) -> CliError {
    CliError::MissingParameter { command: command.name(), what: what.into() }
}

fn check_boundary(s: &Scenario) -> Result<Report, CliError> {
    let spec = s.boundary().ok_or_else(|| missing(Command::CheckBoundary, "a [boundary] section"))?;
    let verdict = match spec {
        BoundarySpec::Explicit(pair) => classify_boundary_solution(pair),
        BoundarySpec::Constructed { a, p_b, propagator } => {
            let pair = construct_consistent_pair(a, p_b, propagator)
                .map_err(CliError::library("boundary: the final boundary cannot be constructed"))?;
            classify_boundary_solution(&pair)
        }
    }
    .map_err(CliError::library("check-boundary"))?;
    Ok(boundary_report(&verdict))
}

fn boundary_report(v: &BoundaryVerdict) -> Report {
    let d = &v.diagnostics;
    let mut r = Report::new(Command::CheckBoundary.name());
    r.push(Section::key_values(
        "boundary",
        vec![
            ("branch", Cell::text(v.branch.to_string())),
            ("a", Cell::real(v.a)),
            ("b", Cell::real(v.b)),
            ("roundtrip_consistent", Cell::Bool(d.roundtrip.consistent)),
            ("initial_residual", Cell::real(d.roundtrip.initial_residual)),
            ("final_residual", Cell::real(d.roundtrip.final_residual)),
            ("normalization_residual", Cell::real(d.roundtrip.normalization_residual)),
            ("evolution_mismatch", Cell::real(d.evolution_mismatch)),
            ("p_a_rank", Cell::int(d.p_a_rank)),
            ("p_b_rank", Cell::int(d.p_b_rank)),
            ("p_a_identity_deviation", Cell::real(d.p_a_identity_deviation)),
            ("p_b_identity_deviation", Cell::real(d.p_b_identity_deviation)),
            ("initial_ray_deviation", Cell::real(d.initial_ray_deviation)),
            ("final_ray_deviation", Cell::real(d.final_ray_deviation)),
            ("initial_support_residual", Cell::real(d.initial_support_residual)),
            ("final_support_residual", Cell::real(d.final_support_residual)),
        ],
    ));
    r
}

fn histories(s: &Scenario) -> Result<Report, CliError> {
    let h = s.histories().ok_or_else(|| missing(Command::Histories, "a [histories] section"))?;
    let mut options = HistoryOptions::default();
    if let Some(cap) = h.max_sequences {
        options.max_sequences = cap;
    }
    let dist = history_distribution_with(&h.rho_p, &h.slots, s.intervals(), &h.rho_m, options)
        .map_err(CliError::library("histories"))?;

    let mut r = Report::new(Command::Histories.name());
    let mut table = Section::new("histories", &["sequence", "weight", "multiplicity", "probability"]);
    for e in &dist.entries {
        let names: Vec<&str> = e.sequence.labels().iter().zip(&h.labels).map(|(&l, n)| n[l].as_str()).collect();
        table.row(vec![
            Cell::text(names.join(",")),
            Cell::real(e.weight),
            Cell::int(e.multiplicity),
            Cell::real(e.probability),
        ]);
    }
    r.push(table);
    r.push(Section::key_values(
        "summary",
        vec![
            ("sequences", Cell::int(dist.entries.len())),
            ("normalization", Cell::real(dist.normalization)),
            ("total_probability", Cell::real(dist.total_probability())),
        ],
    ));
    Ok(r)
}

fn mzi(s: Option<&Scenario>, o: &Overrides) -> Result<Report, CliError> {
    let from_file = s.and_then(Scenario::mzi);
    let theta = o.theta.or(from_file.map(|m| m.theta)).ok_or_else(|| missing(Command::Mzi, "--theta or [mzi].theta"))?;
    let phi = o.phi.or(from_file.map(|m| m.phi)).ok_or_else(|| missing(Command::Mzi, "--phi or [mzi].phi"))?;
    let amplitude = MziSetup::new(theta, phi).transmission_amplitude();
    let out = mzi_distribution(theta, phi).map_err(|e| match e {
        Error::ImpossibleBoundary { .. } => CliError::Library {
            context: format!(
                "mzi: the final boundary |e⟩ is unreachable from |a⟩, ⟨e|U|a⟩ = cos(θ + φ) = {}",
                format_real(round12(amplitude))
            ),
            source: e,
        },
        e => CliError::Library { context: "mzi".into(), source: e },
    })?;

    let mut r = Report::new(Command::Mzi.name());
    r.push(Section::key_values(
        "parameters",
        vec![("theta", Cell::real(theta)), ("phi", Cell::real(phi)), ("amplitude_e_a", Cell::real(amplitude))],
    ));
    let mut paths = Section::new("paths", &["path", "two_boundary", "closed_form", "sqm"]);
    paths.row(vec![
        Cell::text("c"),
        Cell::real(out.two_boundary.c),
        Cell::real(out.closed_form.c),
        Cell::real(out.sqm.c),
    ]);
    paths.row(vec![
        Cell::text("d"),
        Cell::real(out.two_boundary.d),
        Cell::real(out.closed_form.d),
        Cell::real(out.sqm.d),
    ]);
    r.push(paths);
    Ok(r)
}

fn born(s: Option<&Scenario>, o: &Overrides) -> Result<Report, CliError> {
    let from_file = s.and_then(Scenario::born);
    let mu: Vec<C64> = match (&o.mu, from_file) {
        (Some(m), _) => m.iter().map(|&x| c64(x, 0.0)).collect(),
        (None, Some(b)) => b.mu.clone(),
        (None, None) => return Err(missing(Command::Born, "--mu or [born].mu")),
    };
    let runs = o.runs.or(from_file.and_then(|b| b.runs)).unwrap_or(DEFAULT_RUNS);
    let seed = o.seed.or(from_file.and_then(|b| b.seed)).unwrap_or(DEFAULT_SEED);
    let dims = from_file.map_or_else(MeasurementDims::default, |b| b.dims);
    let report = born_recovery_experiment(&mu, dims, runs, seed).map_err(CliError::library("born"))?;

    let mut r = Report::new(Command::Born.name());
    r.push(Section::key_values(
        "parameters",
        vec![
            ("runs", Cell::int(runs)),
            ("seed", Cell::int(seed)),
            ("system_dim", Cell::int(dims.system)),
            ("m_dim", Cell::int(dims.m)),
            ("n_dim", Cell::int(dims.n)),
        ],
    ));
    let mut table =
        Section::new("outcomes", &["outcome", "mu", "expected", "count", "frequency", "std_error", "deviation"]);
    for (f, m) in report.outcomes.iter().zip(&mu) {
        table.row(vec![
            Cell::int(f.outcome),
            Cell::complex(m.re, m.im),
            Cell::real(f.expected),
            Cell::int(f.count),
            Cell::real(f.frequency),
            Cell::real(f.std_error),
            Cell::real(f.frequency - f.expected),
        ]);
    }
    r.push(table);
    Ok(r)
}

fn side(s: Side) -> String {
    match s {
        Side::Clean => "clean".into(),
        Side::Superposed(j) => format!("superposed in interval {j}"),
    }
}

fn classify(s: &Scenario) -> Result<Report, CliError> {
    let c = s.classify().ok_or_else(|| missing(Command::Classify, "a [classify] section"))?;
    let schedule = s.factored_schedule().map_err(CliError::library("classify"))?;
    let report = classify_subsystems(&schedule, &c.preferred_bases, c.time).map_err(CliError::library("classify"))?;

    let mut r = Report::new(Command::Classify.name());
    let mut table = Section::new("subsystems", &["subsystem", "name", "event", "initial_side", "final_side", "witness"]);
    for v in &report.subsystems {
        let witness = v.witness(report.time, report.times).map_or_else(|| "none".into(), |(a, b)| format!("{a}..{b}"));
        table.row(vec![
            Cell::int(v.subsystem),
            Cell::text(s.subsystem_name(v.subsystem)),
            Cell::text(v.event.to_string()),
            Cell::text(side(v.initial_side)),
            Cell::text(side(v.final_side)),
            Cell::text(witness),
        ]);
    }
    r.push(table);
    if !c.groups.is_empty() {
        let mut groups = Section::new("groups", &["group", "members", "event"]);
        for (name, members) in &c.groups {
            let list: Vec<String> = members.iter().map(|m| m.to_string()).collect();
            groups.row(vec![
                Cell::text(name.clone()),
                Cell::text(list.join(" ")),
                Cell::text(report.composite(members).to_string()),
            ]);
        }
        r.push(groups);
    }
    r.push(Section::key_values(
        "overall",
        vec![
            ("time", Cell::int(report.time)),
            ("times", Cell::int(report.times)),
            ("event", Cell::text(report.overall.to_string())),
        ],
    ));
    Ok(r)
}
