//! Command-line front end. Data goes to the output stream (or `--output`),
//! diagnostics to the error stream; the exit code distinguishes bad input,
//! scale limits and failed verifications.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bounds::{self, compare_bounds, format_float, CompareFlags, Method};
use crate::coupling::{self, ParentRule};
use crate::covers::{self, CoverSolution, WeightedCover, WeightedCoverJson};
use crate::error::{input, Error, Result};
use crate::graph::{BlockPartition, Graph};
use crate::montecarlo::{self, RunConfig};
use crate::profile::LipschitzProfile;
use crate::rational;

#[derive(Debug, Parser)]
#[command(name = "graphdep", version, about = "Concentration bounds under graph dependence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare tail bounds for a dependency graph and Lipschitz profile.
    Bounds(BoundsArgs),
    /// Fractional covers and the decomposable-bound program.
    Covers {
        #[command(subcommand)]
        which: CoversCommand,
    },
    /// Monte Carlo validation of every applicable bound.
    Simulate(SimulateArgs),
    /// Exact checks on finite joint laws and covers.
    Verify {
        #[command(subcommand)]
        which: VerifyCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write data here instead of the standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Graph as JSON `{"n": .., "edges": [[u, v], ..]}` or an edge list.
    #[arg(long)]
    pub graph: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Lipschitz profile: `uniform:<c>` or a comma-separated list.
    #[arg(long, default_value = "uniform:1")]
    pub c: String,
    #[arg(long)]
    pub t: f64,
    /// `all` or a comma-separated list of methods.
    #[arg(long, default_value = "all")]
    pub methods: String,
    #[arg(long, default_value = "enumerated-lp")]
    pub strategy: String,
    /// Treat the coordinates as an m-dependent sequence with this gap.
    #[arg(long)]
    pub m: Option<usize>,
    /// Custom consecutive blocks for the m-dependent bounds, e.g. `1-3,4-5`.
    #[arg(long)]
    pub blocks: Option<String>,
    /// Include McDiarmid's bound as a reference line.
    #[arg(long)]
    pub assume_independent: bool,
    /// The statistic is not a sum; disables the cover-based bounds.
    #[arg(long)]
    pub not_decomposable: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum CoversCommand {
    /// Fractional chromatic number.
    ChiF(CoverArgs),
    /// Fractional vertex arboricity.
    Arboricity(CoverArgs),
    /// The decomposable-bound denominator `D(G, c)`.
    D(DArgs),
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "enumerated-lp")]
    pub strategy: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "uniform:1")]
    pub c: String,
    #[arg(long, default_value = "enumerated-lp")]
    pub strategy: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Sampler specification (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long = "samples", alias = "n", default_value_t = montecarlo::DEFAULT_SAMPLES)]
    pub samples: u64,
    /// Single threshold; overrides the derived grid.
    #[arg(long, conflicts_with = "t_grid")]
    pub t: Option<f64>,
    /// Comma-separated thresholds; defaults to a 10-point grid.
    #[arg(long)]
    pub t_grid: Option<String>,
    /// Worker threads (default: the GRAPHDEP_THREADS variable, else all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value = "enumerated-lp")]
    pub strategy: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Exact coupling, difference-bound, MGF and tail checks on a forest-dependent joint.
    Coupling(JointArgs),
    /// Exact dependency check of a joint against its declared (or given) graph.
    Dependency(DependencyArgs),
    /// Validate a weighted cover file against a graph.
    Cover(VerifyCoverArgs),
}

#[derive(Debug, Args)]
pub struct JointArgs {
    /// Joint specification (latent or raw pmf JSON).
    #[arg(long)]
    pub spec: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DependencyArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Check against this graph instead of the declared one.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyCoverArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub cover: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Successful outcome of a subcommand: the data to emit and whether a
/// mathematical check failed.
struct Outcome {
    data: String,
    verified: bool,
}

impl Outcome {
    fn ok(data: String) -> Self {
        Outcome { data, verified: true }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

/// Reads a graph file, JSON when it starts with `{`, an edge list otherwise.
pub fn load_graph(path: &Path) -> Result<Graph> {
    let text = read(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        Graph::from_json_str(&text)
    } else {
        Graph::from_edge_list_str(&text)
    };
    parsed.map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn parse_methods(text: &str) -> Result<Option<Vec<Method>>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    let methods = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Method>>>()?;
    if methods.is_empty() {
        return input("--methods needs at least one method");
    }
    Ok(Some(methods))
}

fn parse_blocks(text: &str, n: usize) -> Result<BlockPartition> {
    let blocks = text
        .split(',')
        .map(|range| {
            let range = range.trim();
            let (a, b) = range.split_once('-').unwrap_or((range, range));
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Input(format!("--blocks: '{s}' is not a position")))
            };
            let (a, b) = (parse(a)?, parse(b)?);
            if a == 0 || b < a {
                return input(format!("--blocks: '{range}' is not a range 'a-b' with 1 <= a <= b"));
            }
            Ok((a..=b).collect())
        })
        .collect::<Result<Vec<Vec<usize>>>>()?;
    BlockPartition::custom(n, blocks)
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("--t-grid: '{s}' is not a number")))
        })
        .collect()
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Internal(e.to_string()))?)
        .map_err(|e| Error::Internal(e.to_string()))
}

fn json_string(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialise");
    s.push('\n');
    s
}

fn run_bounds(args: &BoundsArgs) -> Result<Outcome> {
    let g = load_graph(&args.graph.graph)?;
    let c = LipschitzProfile::parse(&args.c, g.n())?;
    let blocks = args.blocks.as_deref().map(|b| parse_blocks(b, g.n())).transpose()?;
    let m_dependence = match (args.m, &blocks) {
        (Some(m), _) => Some(m),
        (None, Some(b)) => b.blocks.iter().map(Vec::len).max(),
        (None, None) => None,
    };
    let flags = CompareFlags {
        assume_independent: args.assume_independent,
        decomposable: !args.not_decomposable,
        m_dependence,
        blocks,
        strategy: args.strategy.parse()?,
        methods: parse_methods(&args.methods)?,
    };
    let cmp = compare_bounds(&g, &c, args.t, &flags)?;
    if cmp.reports.is_empty() {
        let reasons: Vec<String> = cmp.skipped.iter().map(|s| format!("{}: {}", s.method, s.reason)).collect();
        return Err(Error::Kind(format!("no requested bound applies ({})", reasons.join("; "))));
    }
    Ok(Outcome::ok(match args.out.format {
        Format::Json => json_string(&cmp.to_json()),
        Format::Csv => cmp.to_csv()?,
    }))
}

fn cover_outcome(quantity: &str, sol: &CoverSolution, format: Format) -> Result<String> {
    let exact = sol.objective.exact().map(rational::format);
    match format {
        Format::Json => Ok(json_string(&json!({
            "quantity": quantity,
            "value": sol.objective.to_f64(),
            "value_exact": exact,
            "optimality": sol.optimality,
            "method": sol.method,
            "cover": WeightedCoverJson::from(&sol.cover),
        }))),
        Format::Csv => csv_string(
            &["quantity", "value", "value_exact", "optimality", "method"],
            &[vec![
                quantity.to_string(),
                format_float(sol.objective.to_f64()),
                exact.unwrap_or_default(),
                bounds::enum_name(&sol.optimality),
                bounds::enum_name(&sol.method),
            ]],
        ),
    }
}

fn run_covers(which: &CoversCommand) -> Result<Outcome> {
    match which {
        CoversCommand::ChiF(args) => {
            let g = load_graph(&args.graph.graph)?;
            let sol = covers::fractional_chromatic_number_with(&g, args.strategy.parse()?)?;
            Ok(Outcome::ok(cover_outcome("chi_f", &sol, args.out.format)?))
        }
        CoversCommand::Arboricity(args) => {
            let g = load_graph(&args.graph.graph)?;
            let sol = covers::fractional_vertex_arboricity_with(&g, args.strategy.parse()?)?;
            Ok(Outcome::ok(cover_outcome("a_f", &sol, args.out.format)?))
        }
        CoversCommand::D(args) => {
            let g = load_graph(&args.graph.graph)?;
            let c = LipschitzProfile::parse(&args.c, g.n())?;
            let sol = covers::optimize_d(&g, &c, args.strategy.parse()?)?;
            let chi = sol.chi_f.objective.exact().map(rational::format);
            let janson = sol.chi_f.objective.to_f64() * rational::to_f64(&c.squared_norm());
            Ok(Outcome::ok(match args.out.format {
                Format::Json => json_string(&json!({
                    "quantity": "D",
                    "d": sol.d,
                    "objective": sol.solution.objective.to_f64(),
                    "optimality": sol.solution.optimality,
                    "method": sol.solution.method,
                    "chi_f": chi,
                    "janson_denominator": janson,
                    "cover": WeightedCoverJson::from(&sol.solution.cover),
                })),
                Format::Csv => csv_string(
                    &["quantity", "d", "objective", "optimality", "method", "chi_f", "janson_denominator"],
                    &[vec![
                        "D".into(),
                        format_float(sol.d),
                        format_float(sol.solution.objective.to_f64()),
                        bounds::enum_name(&sol.solution.optimality),
                        bounds::enum_name(&sol.solution.method),
                        chi.unwrap_or_default(),
                        format_float(janson),
                    ]],
                )?,
            }))
        }
    }
}

fn run_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let spec = montecarlo::parse_sampler_spec(&read(&args.spec)?).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", args.spec.display())),
        other => other,
    })?;
    if let Some(t) = args.t {
        if !(t > 0.0) || !t.is_finite() {
            return input(format!("--t must be positive and finite, got {t}"));
        }
    }
    let grid = match (&args.t, &args.t_grid) {
        (Some(t), _) => Some(vec![*t]),
        (None, Some(text)) => Some(parse_grid(text)?),
        (None, None) => None,
    };
    let threads = match args.threads {
        Some(0) => return input("--threads must be positive"),
        Some(k) => Some(k),
        None => montecarlo::threads_from_env()?,
    };
    let config = RunConfig { seed: args.seed, samples: args.samples, threads };
    let validation = montecarlo::validate_bounds(&spec, grid.as_deref(), &config, args.strategy.parse()?)?;
    let verified = validation.defects().next().is_none();
    let data = match args.out.format {
        Format::Json => json_string(&validation.to_json()),
        Format::Csv => validation.to_csv()?,
    };
    Ok(Outcome { data, verified })
}

fn run_verify(which: &VerifyCommand) -> Result<Outcome> {
    match which {
        VerifyCommand::Coupling(args) => {
            let (joint, f) = coupling::parse_joint_spec(&read(&args.spec)?)?;
            let g = joint
                .dependency()
                .cloned()
                .ok_or_else(|| Error::Input("the joint spec declares no dependency graph".into()))?;
            let report = coupling::verify_forest_joint(&joint, &g, &f, ParentRule::Conditional)?;
            let theorem = if report.passed() {
                Some(coupling::theorem_check(&joint, &g, &f, coupling::DEFAULT_TAIL_POINTS, &coupling::DEFAULT_S_GRID)?)
            } else {
                None
            };
            let verified = report.passed() && theorem.as_ref().is_some_and(|t| t.passed());
            let fmt = |r: &rational::Rational| json!(rational::format(r));
            let float = |x: Option<f64>| x.map_or(serde_json::Value::Null, |x| json!(x));
            let fields = [
                ("dependency_deviation", fmt(&report.dependency_deviation)),
                ("independence_gap", fmt(&report.independence_gap)),
                ("marginal_deviation", fmt(&report.marginal_deviation)),
                ("structural_defect", fmt(&report.structural_defect)),
                ("difference_excess", fmt(&report.difference_excess)),
                ("contexts_checked", json!(report.contexts_checked)),
                ("unreachable_contexts", json!(report.unreachable_contexts)),
                ("mgf_worst_ratio", float(theorem.as_ref().map(|t| t.mgf_worst_ratio))),
                ("tail_worst_margin", float(theorem.as_ref().map(|t| t.tail_worst_margin))),
                ("passed", json!(verified)),
            ];
            let data = match args.out.format {
                Format::Json => {
                    let obj: serde_json::Map<String, serde_json::Value> =
                        fields.iter().map(|(k, v)| ((*k).to_string(), v.clone())).collect();
                    json_string(&serde_json::Value::Object(obj))
                }
                Format::Csv => {
                    let cell = |v: &serde_json::Value| match v {
                        serde_json::Value::String(s) => s.clone(),
                        serde_json::Value::Null => String::new(),
                        serde_json::Value::Number(x) => x.as_f64().filter(|_| !x.is_u64()).map_or(x.to_string(), format_float),
                        other => other.to_string(),
                    };
                    let rows: Vec<Vec<String>> = fields.iter().map(|(k, v)| vec![k.to_string(), cell(v)]).collect();
                    csv_string(&["check", "value"], &rows)?
                }
            };
            Ok(Outcome { data, verified })
        }
        VerifyCommand::Dependency(args) => {
            let (joint, _) = coupling::parse_joint_spec(&read(&args.spec)?)?;
            let g = match &args.graph {
                Some(path) => load_graph(path)?,
                None => joint
                    .dependency()
                    .cloned()
                    .ok_or_else(|| Error::Input("the joint spec declares no dependency graph; pass --graph".into()))?,
            };
            let check = coupling::verify_dependency(&joint, &g)?;
            let (s, t) = check.worst.clone().unwrap_or_default();
            let data = match args.out.format {
                Format::Json => json_string(&json!({
                    "max_deviation": rational::format(&check.max_deviation),
                    "worst_s": s,
                    "worst_t": t,
                    "passed": check.is_ok(),
                })),
                Format::Csv => {
                    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
                    csv_string(
                        &["max_deviation", "worst_s", "worst_t", "passed"],
                        &[vec![rational::format(&check.max_deviation), join(&s), join(&t), check.is_ok().to_string()]],
                    )?
                }
            };
            Ok(Outcome { data, verified: check.is_ok() })
        }
        VerifyCommand::Cover(args) => {
            let g = load_graph(&args.graph.graph)?;
            let text = read(&args.cover)?;
            let json: WeightedCoverJson = serde_json::from_str(&text)
                .map_err(|e| Error::Input(format!("malformed cover at line {} column {}: {e}", e.line(), e.column())))?;
            let cover = WeightedCover::try_from(json)?;
            let violations: Vec<String> = covers::validate_cover(&g, &cover).iter().map(ToString::to_string).collect();
            let total = rational::format(&cover.total_weight());
            let data = match args.out.format {
                Format::Json => json_string(&json!({ "total_weight": total, "violations": violations, "passed": violations.is_empty() })),
                Format::Csv => csv_string(
                    &["total_weight", "violations", "passed"],
                    &[vec![total, violations.join("; "), violations.is_empty().to_string()]],
                )?,
            };
            Ok(Outcome { verified: violations.is_empty(), data })
        }
    }
}

fn output_args(command: &Command) -> Option<&OutputArgs> {
    match command {
        Command::Bounds(a) => Some(&a.out),
        Command::Covers { which } => Some(match which {
            CoversCommand::ChiF(a) | CoversCommand::Arboricity(a) => &a.out,
            CoversCommand::D(a) => &a.out,
        }),
        Command::Simulate(a) => Some(&a.out),
        Command::Verify { which } => Some(match which {
            VerifyCommand::Coupling(a) => &a.out,
            VerifyCommand::Dependency(a) => &a.out,
            VerifyCommand::Cover(a) => &a.out,
        }),
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Bounds(args) => run_bounds(args),
        Command::Covers { which } => run_covers(which),
        Command::Simulate(args) => run_simulate(args),
        Command::Verify { which } => run_verify(which),
    }
}

/// Runs the tool with explicit streams and returns the process exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            if informational {
                let _ = stdout.write_all(rendered.as_bytes());
                return 0;
            }
            let _ = stderr.write_all(rendered.as_bytes());
            return 1;
        }
    };
    let outcome = match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let written = match output_args(&cli.command).and_then(|o| o.output.as_ref()) {
        Some(path) => std::fs::write(path, &outcome.data)
            .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(outcome.data.as_bytes())
            .map_err(|e| Error::Internal(format!("cannot write output: {e}"))),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return e.exit_code();
    }
    if !outcome.verified {
        let _ = writeln!(stderr, "verification failed; see the report for the failing checks");
        return 3;
    }
    0
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
