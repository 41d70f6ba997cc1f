//! Run configuration, experiment dispatch and report emission.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynball::{Fan, Ladder};
use crate::experiments::{
    run_agreement_experiment, run_example_experiment, run_invariance_experiment, run_lambda_jump_experiment,
    run_oseledets_experiment, run_zero_experiment, AgreementParams, ExampleParams, ExperimentReport,
    InvarianceParams, LambdaJumpParams, OseledetsParams, Table, ZeroParams,
};
use crate::exponents::{PointSource, Quadrature, Schedule};
use crate::maps::MapSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::Invalid { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Experiment(#[from] crate::Error),

    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Example,
    Agreement,
    Zero,
    Invariance,
    LambdaJump,
    Oseledets,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Example,
        ExperimentKind::Agreement,
        ExperimentKind::Zero,
        ExperimentKind::Invariance,
        ExperimentKind::LambdaJump,
        ExperimentKind::Oseledets,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Example => "example",
            ExperimentKind::Agreement => "agreement",
            ExperimentKind::Zero => "zero",
            ExperimentKind::Invariance => "invariance",
            ExperimentKind::LambdaJump => "lambda_jump",
            ExperimentKind::Oseledets => "oseledets",
        }
    }

    fn uses_map(self) -> bool {
        matches!(self, ExperimentKind::Invariance | ExperimentKind::Oseledets)
    }

    fn uses_quadrature(self) -> bool {
        matches!(self, ExperimentKind::Zero | ExperimentKind::LambdaJump)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePreset {
    Default,
    /// Long horizons and a deep ladder, for maps linear on cones.
    Conic,
    /// Ladder floor at 1e-6: keeps rounding noise of isometries near 1e-10.
    Coarse,
}

impl SchedulePreset {
    pub fn schedule(self) -> Schedule {
        match self {
            SchedulePreset::Default => Schedule::default(),
            SchedulePreset::Conic => Schedule::conic(),
            SchedulePreset::Coarse => Schedule { ladder: Ladder { floor: 1e-6, ..Ladder::default() }, ..Schedule::default() },
        }
    }
}

/// Schedule overrides on top of a preset; every field is filled after parsing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<SchedulePreset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fan: Option<Fan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Ladder>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_window: Option<usize>,
}

impl ScheduleConfig {
    pub fn resolve(&self, kind: ExperimentKind) -> Schedule {
        let preset = self.preset.unwrap_or(match kind {
            ExperimentKind::Example => SchedulePreset::Conic,
            _ => SchedulePreset::Default,
        });
        let base = preset.schedule();
        Schedule {
            n_values: self.n_values.clone().unwrap_or(base.n_values),
            delta_values: self.delta_values.clone().unwrap_or(base.delta_values),
            fan: self.fan.clone().unwrap_or(base.fan),
            ladder: self.ladder.unwrap_or(base.ladder),
            tail_window: self.tail_window.unwrap_or(base.tail_window),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point_source: Option<PointSource>,
}

impl QuadratureConfig {
    /// The lambda-jump default is a prime-sized lattice, so every disc of
    /// every family in the run sees the same local sample pattern.
    pub fn resolve(&self, kind: ExperimentKind, seed: u64) -> Quadrature {
        let (count, source) = match kind {
            ExperimentKind::LambdaJump => (1021, PointSource::Lattice),
            _ => (400, PointSource::UniformRandom),
        };
        Quadrature::new(self.sample_count.unwrap_or(count), seed, self.point_source.unwrap_or(source))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default)]
    pub verbosity: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero: Option<ZeroParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariance: Option<InvarianceParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_jump: Option<LambdaJumpParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oseledets: Option<OseledetsParams>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl RunConfig {
    /// Parse a TOML document, fill defaults and validate.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            ConfigError::Parse { line, column, message: e.message().trim().to_string() }
        })?;
        cfg.fill_and_validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Minimal valid config for an experiment, with every default filled.
    pub fn with_defaults(experiment: ExperimentKind, seed: u64) -> Self {
        let mut cfg = RunConfig {
            experiment,
            seed,
            verbosity: 0,
            map: None,
            schedule: ScheduleConfig::default(),
            quadrature: None,
            output: OutputConfig::default(),
            example: None,
            agreement: None,
            zero: None,
            invariance: None,
            lambda_jump: None,
            oseledets: None,
        };
        cfg.fill_and_validate().expect("defaults are valid");
        cfg
    }

    fn fill_and_validate(&mut self) -> Result<(), ConfigError> {
        let kind = self.experiment;
        let sections = [
            ("example", self.example.is_some(), ExperimentKind::Example),
            ("agreement", self.agreement.is_some(), ExperimentKind::Agreement),
            ("zero", self.zero.is_some(), ExperimentKind::Zero),
            ("invariance", self.invariance.is_some(), ExperimentKind::Invariance),
            ("lambda_jump", self.lambda_jump.is_some(), ExperimentKind::LambdaJump),
            ("oseledets", self.oseledets.is_some(), ExperimentKind::Oseledets),
        ];
        for (name, present, owner) in sections {
            if present && owner != kind {
                return Err(ConfigError::invalid(name, format!("section does not apply to experiment `{kind}`")));
            }
        }
        if self.map.is_some() && !kind.uses_map() {
            return Err(ConfigError::invalid("map", format!("experiment `{kind}` does not take a map")));
        }
        if self.quadrature.is_some() && !kind.uses_quadrature() {
            return Err(ConfigError::invalid("quadrature", format!("experiment `{kind}` does not integrate")));
        }

        let s = self.schedule.resolve(kind);
        s.validate().map_err(|e| ConfigError::invalid("schedule", e.to_string()))?;
        self.schedule = ScheduleConfig {
            preset: None,
            n_values: Some(s.n_values),
            delta_values: Some(s.delta_values),
            fan: Some(s.fan),
            ladder: Some(s.ladder),
            tail_window: Some(s.tail_window),
        };
        if kind.uses_quadrature() {
            let q = self.quadrature.clone().unwrap_or_default().resolve(kind, self.seed);
            if q.sample_count < Quadrature::MIN_SAMPLES {
                return Err(ConfigError::invalid(
                    "quadrature.sample_count",
                    format!("needs at least {} samples", Quadrature::MIN_SAMPLES),
                ));
            }
            self.quadrature = Some(QuadratureConfig { sample_count: Some(q.sample_count), point_source: Some(q.point_source) });
        }
        if kind.uses_map() && self.map.is_none() {
            self.map = Some(MapSpec::Cat {});
        }
        if let Some(m) = &self.map {
            m.build().map_err(|e| ConfigError::invalid("map", e.to_string()))?;
        }
        match kind {
            ExperimentKind::Example => {
                self.example.get_or_insert_with(Default::default);
            }
            ExperimentKind::Agreement => {
                self.agreement.get_or_insert_with(Default::default);
            }
            ExperimentKind::Zero => {
                self.zero.get_or_insert_with(Default::default);
            }
            ExperimentKind::Invariance => {
                self.invariance.get_or_insert_with(Default::default);
            }
            ExperimentKind::LambdaJump => {
                let p = self.lambda_jump.get_or_insert_with(Default::default);
                p.base.validate().map_err(|e| ConfigError::invalid("lambda_jump.base", e.to_string()))?;
            }
            ExperimentKind::Oseledets => {
                self.oseledets.get_or_insert_with(Default::default);
            }
        }
        self.output.format.get_or_insert(Format::Json);
        Ok(())
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule.resolve(self.experiment)
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature.clone().unwrap_or_default().resolve(self.experiment, self.seed)
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or_default()
    }

    /// Output path, defaulting to `<experiment>-report.<ext>`.
    pub fn output_path(&self) -> PathBuf {
        self.output.path.clone().unwrap_or_else(|| {
            let ext = match self.format() {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            PathBuf::from(format!("{}-report.{ext}", self.experiment))
        })
    }
}

/// Run the configured experiment without writing anything.
pub fn execute(cfg: &RunConfig) -> Result<ExperimentReport, RunError> {
    let s = cfg.schedule();
    let seed = cfg.seed;
    let map = || cfg.map.clone().unwrap_or(MapSpec::Cat {});
    let report = match cfg.experiment {
        ExperimentKind::Example => {
            let mut r = run_example_experiment(&s, &cfg.example.clone().unwrap_or_default())?;
            r.seed = seed;
            r
        }
        ExperimentKind::Agreement => run_agreement_experiment(&s, &cfg.agreement.clone().unwrap_or_default(), seed)?,
        ExperimentKind::Zero => run_zero_experiment(&s, &cfg.quadrature(), &cfg.zero.clone().unwrap_or_default(), seed)?,
        ExperimentKind::Invariance => {
            run_invariance_experiment(&map(), &s, &cfg.invariance.clone().unwrap_or_default(), seed)?
        }
        ExperimentKind::LambdaJump => {
            run_lambda_jump_experiment(&s, &cfg.quadrature(), &cfg.lambda_jump.clone().unwrap_or_default(), seed)?
        }
        ExperimentKind::Oseledets => {
            run_oseledets_experiment(&map(), &s, &cfg.oseledets.clone().unwrap_or_default(), seed)?
        }
    };
    Ok(report)
}

#[derive(Debug, Serialize)]
struct Timing {
    wall_time_seconds: f64,
}

/// Top-level JSON document.
#[derive(Debug, Serialize)]
struct JsonReport<'a> {
    config: &'a RunConfig,
    checks: &'a [crate::experiments::Check],
    artifacts: &'a [Table],
    timing: Timing,
}

pub fn report_json(cfg: &RunConfig, r: &ExperimentReport) -> String {
    let doc = JsonReport { config: cfg, checks: &r.checks, artifacts: &r.artifacts, timing: Timing { wall_time_seconds: r.wall_time } };
    serde_json::to_string_pretty(&doc).expect("report serializes")
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn checks_csv(r: &ExperimentReport) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["description", "measured", "expected", "tolerance", "relation", "pass", "source"])?;
    for c in &r.checks {
        let relation = match c.relation {
            crate::experiments::Relation::Within => "within",
            crate::experiments::Relation::AtMost => "at_most",
            crate::experiments::Relation::AtLeast => "at_least",
        };
        w.write_record([
            c.description.clone(),
            fmt_cell(c.measured),
            format!("{:?}", c.expected),
            format!("{:?}", c.tolerance),
            relation.to_string(),
            c.pass.to_string(),
            c.source.clone(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn table_csv(t: &Table) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.columns)?;
    for row in &t.rows {
        w.write_record(row.iter().map(|&v| fmt_cell(v)))?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// File-name-safe form of a table name.
fn slug(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        let c = if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' };
        if !(c == '_' && out.ends_with('_')) {
            out.push(c);
        }
    }
    out.trim_matches('_').to_string()
}

/// Sibling file `<stem>.<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Write every file to a temporary sibling first and rename only once all
/// of them are complete.
fn write_all_atomic(files: &[(PathBuf, Vec<u8>)]) -> Result<(), RunError> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let err = |e: std::io::Error| RunError::Output { path: path.clone(), message: e.to_string() };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(err)?;
        tmp.write_all(bytes).map_err(err)?;
        tmp.as_file().sync_all().map_err(err)?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| RunError::Output { path: path.clone(), message: e.error.to_string() })?;
    }
    Ok(())
}

/// The files a run emits: the report itself, plus one CSV per grid table
/// (per table of any kind in CSV mode) and, in CSV mode, the effective
/// config next to the report.
pub fn render(cfg: &RunConfig, r: &ExperimentReport) -> Result<Vec<(PathBuf, Vec<u8>)>, RunError> {
    let path = cfg.output_path();
    let csv_err = |e: csv::Error| RunError::Output { path: path.clone(), message: e.to_string() };
    let mut files = Vec::new();
    match cfg.format() {
        Format::Json => files.push((path.clone(), report_json(cfg, r).into_bytes())),
        Format::Csv => {
            files.push((path.clone(), checks_csv(r).map_err(csv_err)?));
            files.push((sibling(&path, "config.toml"), cfg.to_toml().into_bytes()));
        }
    }
    for (i, t) in r.artifacts.iter().enumerate() {
        if t.is_grid() || cfg.format() == Format::Csv {
            files.push((sibling(&path, &format!("{i:03}.{}.csv", slug(&t.name))), table_csv(t).map_err(csv_err)?));
        }
    }
    Ok(files)
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: ExperimentReport,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            0
        } else {
            1
        }
    }
}

/// Run the experiment and write its report files.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let report = execute(cfg)?;
    let files = render(cfg, &report)?;
    write_all_atomic(&files)?;
    Ok(RunOutcome { report, files: files.into_iter().map(|(p, _)| p).collect() })
}

/// Exit status for a finished run: 0 pass, 1 failed checks, 2 error.
pub fn exit_code(outcome: &Result<RunOutcome, RunError>) -> i32 {
    match outcome {
        Ok(o) => o.exit_code(),
        Err(_) => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub claim: &'static str,
}

pub fn list_experiments() -> Vec<CatalogEntry> {
    ExperimentKind::ALL
        .iter()
        .map(|&k| match k {
            ExperimentKind::Example => CatalogEntry {
                name: k.name(),
                description: "directional and top exponents of the piecewise-linear map at its corner point",
                claim: "exact values log 2, -log 2, log 3 where the map has no derivative",
            },
            ExperimentKind::Agreement => CatalogEntry {
                name: k.name(),
                description: "derivative-free vs derivative-cocycle exponents on smooth maps",
                claim: "Theorem A: for differentiable maps the new exponents coincide with the classical ones",
            },
            ExperimentKind::Zero => CatalogEntry {
                name: k.name(),
                description: "top exponent and area integral of isometries",
                claim: "zero-exponent maps have vanishing exponents and vanishing area integral",
            },
            ExperimentKind::Invariance => CatalogEntry {
                name: k.name(),
                description: "top exponent along forward orbits, with subadditivity spot checks",
                claim: "the new exponent is constant along orbits",
            },
            ExperimentKind::LambdaJump => CatalogEntry {
                name: k.name(),
                description: "disc families converging to the identity with constant area integral",
                claim: "Theorem C: the area integral of the top exponent is not upper-semicontinuous at the identity",
            },
            ExperimentKind::Oseledets => CatalogEntry {
                name: k.name(),
                description: "unstable and stable directions and the growth along them",
                claim: "growth is +chi along the unstable direction and generic vectors, -chi along the stable one",
            },
        })
        .collect()
}

pub fn catalog_text() -> String {
    list_experiments()
        .iter()
        .map(|e| format!("{:<12} {}\n{:<12} reproduces: {}\n", e.name, e.description, "", e.claim))
        .collect()
}

/// Run `f` on a pool with `threads` workers, or on the global pool.
#[cfg(feature = "parallel")]
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunError::Config(ConfigError::invalid("threads", e.to_string())))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<T: Send>(_threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    Ok(f())
}
