//! Command-line interface.
//!
//! Exit status: 0 success, 1 malformed model or I/O failure, 2 audit failure,
//! 64 usage error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::channel::Model;
use crate::error::Error;
use crate::measures::{chain_decomposition, full_audit, AuditReport, FlowReport, Tolerances};
use crate::model_file::{gamma_from_labels, load_model, model_to_json};
use crate::partition::Subset;
use crate::random::{random_corpus, RandomShape};
use crate::scenarios::{beta_grid, run_sweep, write_sweep_csv, Scenario, SweepSpec};
use crate::sigma::{build_family, FamilyKind, PartitionFamily};

pub const EXIT_MODEL: i32 = 1;
pub const EXIT_AUDIT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "infoflow",
    version,
    about = "Causal information flow through finite channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chain-rule decomposition of the flow into ordered terms.
    Flow(FlowArgs),
    /// Evaluate scenario quantities over a β grid (CSV).
    Sweep(SweepArgs),
    /// Audit the chain rule and the natural properties.
    Verify(VerifyArgs),
    /// Dump a partition family.
    Traces(TracesArgs),
    /// Write the model file of a scenario.
    Example(ExampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Extension,
    Reduction,
    Classical,
    RawTrace,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Extension => FamilyKind::Extension,
            FamilyArg::Reduction => FamilyKind::Reduction,
            FamilyArg::Classical => FamilyKind::Classical,
            FamilyArg::RawTrace => FamilyKind::RawTrace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Built-in scenario: copy | transfer | sum.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Coupling parameter of the scenario.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// Number of inputs (sum scenario, random models).
    #[arg(long)]
    pub n: Option<usize>,
    /// Alphabet size of each input (sum scenario).
    #[arg(long, default_value_t = 2)]
    pub k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Model file (JSON).
    #[arg(long, conflicts_with = "scenario")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Output partition as semicolon-separated blocks of comma-separated labels.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Row-equality tolerance for channel comparisons.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value_t = FamilyArg::Extension)]
    pub family: FamilyArg,
    /// Ordered blocks, e.g. `X1;X2,X3`. Defaults to one block per input.
    #[arg(long)]
    pub order: Option<String>,
    /// Report in bits instead of nats.
    #[arg(long)]
    pub bits: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Grid `START:STOP:STEP`; ignored when `--betas` is given.
    #[arg(long, default_value = "-3:3:0.25", allow_hyphen_values = true)]
    pub grid: String,
    /// Explicit comma-separated β values.
    #[arg(long, allow_hyphen_values = true)]
    pub betas: Option<String>,
    /// Comma-separated quantity ids (default: all).
    #[arg(long)]
    pub quantities: Option<String>,
    #[arg(long)]
    pub bits: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Audit this many seeded random models instead of one model.
    #[arg(long, conflicts_with_all = ["model", "scenario"])]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Extension)]
    pub family: FamilyArg,
    /// Tolerance for equalities.
    #[arg(long, default_value_t = Tolerances::default().equality)]
    pub eq_tol: f64,
    /// Slack for inequalities.
    #[arg(long, default_value_t = Tolerances::default().inequality)]
    pub ineq_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TracesArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value_t = FamilyArg::Extension)]
    pub family: FamilyArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure with its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn model(err: Error) -> Self {
        CliError {
            code: EXIT_MODEL,
            message: format!("malformed model: {err}"),
        }
    }

    fn io(err: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_MODEL,
            message: err.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn scenario_model(args: &ScenarioArgs) -> CliResult<Option<Model>> {
    let Some(id) = &args.scenario else {
        return Ok(None);
    };
    let scenario = Scenario::parse(id, args.n.unwrap_or(3), args.k)
        .map_err(|e| CliError::usage(e.to_string()))?;
    scenario
        .build(args.beta)
        .map(Some)
        .map_err(|e| CliError::usage(e.to_string()))
}

fn apply_overrides(mut model: Model, source: &SourceArgs) -> CliResult<Model> {
    if let Some(spec) = &source.gamma {
        let blocks = split_spec(spec).map_err(CliError::usage)?;
        let gamma = gamma_from_labels(model.nu().out(), &blocks)
            .map_err(|e| CliError::usage(format!("--gamma: {e}")))?;
        model = model
            .with_gamma(gamma)
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    if let Some(t) = source.tol {
        model = model
            .with_tol(t)
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(model)
}

fn load_source(source: &SourceArgs) -> CliResult<Model> {
    let model = match (&source.model, scenario_model(&source.scenario)?) {
        (Some(path), _) => load_model(path).map_err(CliError::model)?,
        (None, Some(m)) => m,
        (None, None) => return Err(CliError::usage("one of --model or --scenario is required")),
    };
    apply_overrides(model, source)
}

/// Split `a,b;c` into `[[a, b], [c]]`, rejecting empty names and blocks.
pub fn split_spec(spec: &str) -> std::result::Result<Vec<Vec<String>>, String> {
    spec.split(';')
        .map(|block| {
            let names: Vec<String> = block.split(',').map(|s| s.trim().to_string()).collect();
            if names.iter().any(String::is_empty) {
                Err(format!("empty name in '{spec}'"))
            } else {
                Ok(names)
            }
        })
        .collect()
}

/// Parse an ordering string against the model's input names (or 1-based indices).
pub fn parse_ordering(model: &Model, spec: &str) -> std::result::Result<Vec<Subset>, String> {
    let mut seen = Subset::EMPTY;
    split_spec(spec)?
        .into_iter()
        .map(|names| {
            let mut block = Subset::EMPTY;
            for name in names {
                let i = model
                    .input_index(&name)
                    .or_else(|| {
                        name.parse::<usize>()
                            .ok()
                            .filter(|i| (1..=model.n()).contains(i))
                            .map(|i| i - 1)
                    })
                    .ok_or_else(|| {
                        format!(
                            "unknown input '{name}' (inputs: {})",
                            model.names().join(", ")
                        )
                    })?;
                if seen.contains(i) {
                    return Err(format!("input '{name}' appears twice in '{spec}'"));
                }
                seen = seen.union(Subset::singleton(i));
                block = block.union(Subset::singleton(i));
            }
            Ok(block)
        })
        .collect()
}

fn family_for(model: &Model, f: FamilyArg) -> CliResult<PartitionFamily> {
    build_family(model, f.into()).map_err(CliError::model)
}

fn emit(out: &Option<PathBuf>, stdout: &mut dyn Write, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(CliError::io),
        None => stdout.write_all(bytes).map_err(CliError::io),
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value).map_err(CliError::io)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn flow_table(r: &FlowReport) -> String {
    let width = r
        .terms
        .iter()
        .map(|t| t.label.len())
        .max()
        .unwrap_or(0)
        .max(8);
    let mut s = format!(
        "family: {} ({})\nordering: {}\nunits: {}\n",
        r.family_kind.as_str(),
        if r.projective {
            "projective"
        } else {
            "NOT projective"
        },
        r.ordering_spec(),
        if r.units == crate::measures::Units::Bits {
            "bits"
        } else {
            "nats"
        },
    );
    for t in &r.terms {
        s += &format!("{:<width$}  {:.12}\n", t.label, t.value);
    }
    s += &format!("{:<width$}  {:.12}\n", "total", r.total);
    s += &format!("{:<width$}  {:.3e}\n", "residual", r.residual);
    s
}

fn run_flow(args: &FlowArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = load_source(&args.source)?;
    let family = family_for(&model, args.family)?;
    let order = match &args.order {
        Some(spec) => {
            parse_ordering(&model, spec).map_err(|e| CliError::usage(format!("--order: {e}")))?
        }
        None => (0..model.n()).map(Subset::singleton).collect(),
    };
    let mut report = chain_decomposition(&model, &family, &order).map_err(CliError::model)?;
    if args.bits {
        report = report.in_bits();
    }
    let bytes = match args.output.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf).map_err(CliError::io)?;
            buf
        }
        Format::Table => flow_table(&report).into_bytes(),
    };
    emit(&args.output.out, stdout, &bytes)
}

fn run_sweep_cmd(args: &SweepArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let id = args
        .scenario
        .scenario
        .as_deref()
        .ok_or_else(|| CliError::usage("--scenario is required"))?;
    let scenario = Scenario::parse(id, args.scenario.n.unwrap_or(3), args.scenario.k)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let betas = match &args.betas {
        Some(list) => list
            .split(',')
            .map(|b| {
                b.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::usage(format!("bad beta '{b}'")))
            })
            .collect::<CliResult<Vec<_>>>()?,
        None => {
            let parts: Vec<f64> = args
                .grid
                .split(':')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| CliError::usage(format!("bad grid '{}'", args.grid)))?;
            let [start, stop, step] = parts[..] else {
                return Err(CliError::usage(format!(
                    "grid '{}' is not START:STOP:STEP",
                    args.grid
                )));
            };
            beta_grid(start, stop, step).map_err(|e| CliError::usage(e.to_string()))?
        }
    };
    let quantities = args
        .quantities
        .as_deref()
        .map(|q| q.split(',').map(|s| s.trim().to_string()).collect())
        .unwrap_or_default();
    let spec =
        SweepSpec::new(scenario, betas, quantities).map_err(|e| CliError::usage(e.to_string()))?;
    let mut rows = run_sweep(&spec).map_err(CliError::model)?;
    if args.bits {
        rows.iter_mut()
            .for_each(|r| r.value /= std::f64::consts::LN_2);
    }
    let bytes = match args.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf).map_err(CliError::io)?;
            buf
        }
        Format::Table => rows
            .iter()
            .map(|r| format!("{:>8}  {:<22}  {:.12}\n", r.beta, r.quantity, r.value))
            .collect::<String>()
            .into_bytes(),
    };
    emit(&args.out, stdout, &bytes)
}

#[derive(Serialize)]
struct ModelAudit {
    model: usize,
    passed: bool,
    report: AuditReport,
}

fn witness_text(w: &[Vec<String>]) -> String {
    w.iter()
        .map(|s| format!("{{{}}}", s.join(",")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn run_verify(args: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let models = match args.random {
        Some(count) => random_corpus(
            args.seed,
            count,
            args.source.scenario.n,
            RandomShape::default(),
        )
        .map_err(|e| CliError::usage(e.to_string()))?
        .into_iter()
        .map(|m| apply_overrides(m, &args.source))
        .collect::<CliResult<Vec<_>>>()?,
        None => vec![load_source(&args.source)?],
    };
    let tol = Tolerances {
        equality: args.eq_tol,
        inequality: args.ineq_tol,
    };
    let mut audits = Vec::with_capacity(models.len());
    for (i, model) in models.iter().enumerate() {
        let family = family_for(model, args.family)?;
        let report = full_audit(model, &family, tol).map_err(CliError::model)?;
        audits.push(ModelAudit {
            model: i,
            passed: report.all_passed(),
            report,
        });
    }
    let failed = audits.iter().filter(|a| !a.passed).count();
    for a in audits.iter().filter(|a| !a.passed) {
        for c in a.report.failures() {
            let _ = writeln!(
                stderr,
                "FAIL model {} [{}] {}: {} witness: {}",
                a.model,
                a.report.family_kind.as_str(),
                c.property,
                c.detail,
                witness_text(&c.witness)
            );
        }
    }
    let bytes = match args.output.format {
        Format::Json => to_json(&audits)?,
        Format::Csv => {
            let mut wtr = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            let mut rec = |r: [String; 6]| wtr.write_record(r).map_err(CliError::io);
            rec(["model", "family", "property", "passed", "detail", "witness"].map(String::from))?;
            for a in &audits {
                for c in &a.report.checks {
                    rec([
                        a.model.to_string(),
                        a.report.family_kind.as_str().to_string(),
                        c.property.to_string(),
                        c.passed.to_string(),
                        c.detail.clone(),
                        witness_text(&c.witness),
                    ])?;
                }
            }
            wtr.into_inner().map_err(CliError::io)?
        }
        Format::Table => {
            let mut s = String::new();
            for a in &audits {
                for c in &a.report.checks {
                    s += &format!(
                        "model {:>3}  {:<10}  {:<14}  {}  {}\n",
                        a.model,
                        a.report.family_kind.as_str(),
                        c.property.to_string(),
                        if c.passed { "pass" } else { "FAIL" },
                        c.detail
                    );
                }
            }
            s += &format!(
                "{} of {} models passed\n",
                audits.len() - failed,
                audits.len()
            );
            s.into_bytes()
        }
    };
    emit(&args.output.out, stdout, &bytes)?;
    if failed > 0 {
        return Err(CliError {
            code: EXIT_AUDIT,
            message: format!("audit failed for {failed} of {} models", audits.len()),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceMember {
    subset: Vec<String>,
    blocks: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct TraceWitness {
    smaller: Vec<String>,
    larger: Vec<String>,
}

#[derive(Serialize)]
struct TraceDump {
    family: FamilyKind,
    projective: bool,
    witness: Option<TraceWitness>,
    gamma_resolved: bool,
    inputs: Vec<String>,
    members: Vec<TraceMember>,
}

fn state_text(model: &Model, m: Subset, x: usize) -> String {
    let labels = model.space().state_labels(m, x);
    match labels.len() {
        1 => labels[0].clone(),
        _ => format!("({})", labels.join(",")),
    }
}

fn trace_dump(model: &Model, family: &PartitionFamily) -> TraceDump {
    let members = Subset::all(model.n())
        .map(|m| TraceMember {
            subset: model.subset_names(m),
            blocks: family
                .get(m)
                .blocks()
                .iter()
                .map(|b| b.iter().map(|&x| state_text(model, m, x)).collect())
                .collect(),
        })
        .collect();
    TraceDump {
        family: family.kind(),
        projective: family.is_projective(),
        witness: family.certificate().witness.map(|v| TraceWitness {
            smaller: model.subset_names(v.smaller),
            larger: model.subset_names(v.larger),
        }),
        gamma_resolved: model.gamma_resolved(),
        inputs: model.names().to_vec(),
        members,
    }
}

fn run_traces(args: &TracesArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = load_source(&args.source)?;
    let family = family_for(&model, args.family)?;
    let dump = trace_dump(&model, &family);
    let bytes = match args.format {
        Format::Json => to_json(&dump)?,
        Format::Csv => {
            let mut wtr = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            wtr.write_record(["subset", "block", "state"])
                .map_err(CliError::io)?;
            for m in &dump.members {
                for (b, block) in m.blocks.iter().enumerate() {
                    for s in block {
                        wtr.write_record([m.subset.join(","), b.to_string(), s.clone()])
                            .map_err(CliError::io)?;
                    }
                }
            }
            wtr.into_inner().map_err(CliError::io)?
        }
        Format::Table => {
            let mut s = format!(
                "family: {} ({})\n",
                dump.family.as_str(),
                if dump.projective {
                    "projective"
                } else {
                    "NOT projective"
                }
            );
            if let Some(w) = &dump.witness {
                s += &format!(
                    "witness: L={{{}}} M={{{}}}\n",
                    w.smaller.join(","),
                    w.larger.join(",")
                );
            }
            for m in &dump.members {
                let blocks: Vec<String> = m
                    .blocks
                    .iter()
                    .map(|b| format!("{{{}}}", b.join(" ")))
                    .collect();
                s += &format!("{{{}}}: {}\n", m.subset.join(","), blocks.join(" "));
            }
            s.into_bytes()
        }
    };
    emit(&args.out, stdout, &bytes)
}

fn run_example(args: &ExampleArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model =
        scenario_model(&args.scenario)?.ok_or_else(|| CliError::usage("--scenario is required"))?;
    let json = model_to_json(&model).map_err(CliError::io)?;
    emit(&args.out, stdout, json.as_bytes())
}

/// Execute a parsed command.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Flow(a) => run_flow(a, stdout),
        Command::Sweep(a) => run_sweep_cmd(a, stdout),
        Command::Verify(a) => run_verify(a, stdout, stderr),
        Command::Traces(a) => run_traces(a, stdout),
        Command::Example(a) => run_example(a, stdout),
    }
}

/// Parse `args` (including the program name) and run; returns the exit status.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match run(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}
