//! `flowloc`: generate graphs, compute electrical-flow quantities and run the
//! localization checks.
//!
//! Exit status: 0 when every check passes, 1 when a bound or identity is
//! violated, 2 on configuration, input or runtime errors.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use flowloc::generate::{generate, ConductanceMode, Family, FamilySpec};
use flowloc::localization::{self, Check, GraphDescriptor, SuiteConfig, SuiteSummary, Tolerances};
use flowloc::WeightedMultigraph;

use output::{render_reports, write_output, Format};

#[derive(Debug, Parser)]
#[command(name = "flowloc", version, about = "Electrical flows, heat kernels and localization bounds on weighted multigraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a generated graph in the edge-list text format.
    Gen(GenArgs),
    /// Compute transfer-current quantities of a graph file.
    Compute(ComputeArgs),
    /// Run the verification checks and write a report.
    Verify(VerifyArgs),
    /// Re-render a JSON report written by `verify`.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Conductance {
    Unit,
    Weighted,
    Both,
}

#[derive(Debug, Args)]
struct FamilyArgs {
    /// path, cycle, complete, star, grid2d, hypercube, gnp, parallel_gadget or random_weighted.
    #[arg(long)]
    family: Option<String>,
    /// Vertex count; side length for grid2d, dimension for hypercube.
    #[arg(long)]
    n: Option<usize>,
    /// Edge count of the parallel gadget.
    #[arg(long)]
    m: Option<usize>,
    /// Edge probability of gnp.
    #[arg(long, default_value_t = flowloc::generate::DEFAULT_GNP_P)]
    p: f64,
    /// Conductance of the gadget's heavy edge.
    #[arg(long)]
    big: Option<f64>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, value_enum, default_value_t = Conductance::Unit)]
    conductance: Conductance,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ComputeArgs {
    /// Graph file in the edge-list text format.
    #[arg(long)]
    graph: PathBuf,
    /// Comma-separated subset of K, Pi, Kbar_norm, Pibar_norm, avg_l1, eff_res, entropy_mu.
    #[arg(long, value_delimiter = ',', value_parser = parse_quantity)]
    quantities: Vec<Quantity>,
    /// Allow the m×m matrices K and Pi in the output.
    #[arg(long)]
    emit_matrices: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Verify a single graph file instead of the generated families.
    #[arg(long, conflicts_with = "family")]
    graph: Option<PathBuf>,
    /// Comma-separated families; the default suite when absent.
    #[arg(long, value_delimiter = ',')]
    family: Vec<String>,
    #[arg(long, default_value_t = 4)]
    min_n: usize,
    #[arg(long, default_value_t = 64)]
    max_n: usize,
    /// Run a single size: sets both --min-n and --max-n.
    #[arg(long)]
    n: Option<usize>,
    /// Gadget edge count; replaces the default gadgets m ∈ {4, 9, 16}.
    #[arg(long)]
    m: Option<usize>,
    /// Gadget heavy-edge conductance; defaults to 100·m.
    #[arg(long)]
    big: Option<f64>,
    #[arg(long, default_value_t = flowloc::generate::DEFAULT_GNP_P)]
    p: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Conductance::Both)]
    conductance: Conductance,
    /// Comma-separated check names; all checks when absent.
    #[arg(long, value_delimiter = ',', value_parser = parse_check)]
    checks: Vec<Check>,
    #[arg(long, value_parser = parse_positive, default_value_t = localization::DEFAULT_REL_TOL)]
    tol_rel: f64,
    #[arg(long, value_parser = parse_positive, default_value_t = localization::DEFAULT_ABS_TOL)]
    tol_abs: f64,
    /// Worker threads for suite items; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// JSON report from `verify`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Quantity {
    K,
    Pi,
    KbarNorm,
    PibarNorm,
    AvgL1,
    EffRes,
    EntropyMu,
}

impl Quantity {
    const SCALARS: [Quantity; 5] = [
        Quantity::KbarNorm,
        Quantity::PibarNorm,
        Quantity::AvgL1,
        Quantity::EffRes,
        Quantity::EntropyMu,
    ];

    fn name(self) -> &'static str {
        match self {
            Quantity::K => "K",
            Quantity::Pi => "Pi",
            Quantity::KbarNorm => "Kbar_norm",
            Quantity::PibarNorm => "Pibar_norm",
            Quantity::AvgL1 => "avg_l1",
            Quantity::EffRes => "eff_res",
            Quantity::EntropyMu => "entropy_mu",
        }
    }
}

fn parse_quantity(s: &str) -> Result<Quantity, String> {
    [
        Quantity::K,
        Quantity::Pi,
        Quantity::KbarNorm,
        Quantity::PibarNorm,
        Quantity::AvgL1,
        Quantity::EffRes,
        Quantity::EntropyMu,
    ]
    .into_iter()
    .find(|q| q.name() == s)
    .ok_or_else(|| format!("unknown quantity `{s}` (expected K, Pi, Kbar_norm, Pibar_norm, avg_l1, eff_res, entropy_mu)"))
}

fn parse_check(s: &str) -> Result<Check, String> {
    s.parse::<Check>().map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("`{s}` is not a number: {e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("tolerance must be positive and finite, got {s}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args).map(|()| 0),
        Command::Compute(args) => cmd_compute(args).map(|()| 0),
        Command::Verify(args) => cmd_verify(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn family_spec(args: &FamilyArgs, conductance: ConductanceMode) -> Result<FamilySpec> {
    let name = args.family.as_deref().ok_or_else(|| anyhow!("--family is required"))?;
    let family: Family = name.parse()?;
    let size = match family {
        Family::ParallelGadget => args.m.ok_or_else(|| anyhow!("parallel_gadget needs --m"))?,
        _ => args.n.ok_or_else(|| anyhow!("{family} needs --n"))?,
    };
    let mut spec = FamilySpec::new(family, size).with_p(args.p).with_seed(args.seed);
    spec.conductance = conductance;
    if let Some(big) = args.big {
        spec = spec.with_big(big);
    } else if family == Family::ParallelGadget {
        spec = spec.with_big(100.0 * size as f64);
    }
    Ok(spec)
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let mode = match args.conductance {
        Conductance::Unit => ConductanceMode::Unit,
        Conductance::Weighted => ConductanceMode::LogUniform,
        Conductance::Both => bail!("gen needs --conductance unit or weighted"),
    };
    let spec = family_spec(&args.family, mode)?;
    let g = generate(&spec)?;
    write_output(args.out.as_deref(), &g.to_edge_list())
}

fn read_graph(path: &Path) -> Result<WeightedMultigraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse::<WeightedMultigraph>()
        .with_context(|| format!("invalid graph file {}", path.display()))
}

fn cmd_compute(args: ComputeArgs) -> Result<()> {
    let g = read_graph(&args.graph)?;
    let mut quantities = if args.quantities.is_empty() {
        let mut q = Quantity::SCALARS.to_vec();
        if args.emit_matrices {
            q.extend([Quantity::K, Quantity::Pi]);
        }
        q
    } else {
        args.quantities.clone()
    };
    quantities.sort();
    quantities.dedup();
    if !args.emit_matrices {
        if let Some(q) = quantities.iter().find(|q| matches!(q, Quantity::K | Quantity::Pi)) {
            bail!("{} is an m×m matrix; pass --emit-matrices to include it", q.name());
        }
    }

    let cm = flowloc::transfer_current_matrix(&g)?;
    let mut fields: Vec<(String, String)> = vec![
        ("n".into(), g.n().to_string()),
        ("m".into(), g.m().to_string()),
    ];
    for q in quantities {
        let value = match q {
            Quantity::K => output::json_matrix(&cm.k),
            Quantity::Pi => output::json_matrix(&cm.pi),
            Quantity::KbarNorm => output::json_number(cm.kbar_norm()?.value),
            Quantity::PibarNorm => output::json_number(cm.pibar_norm()?.value),
            Quantity::AvgL1 => output::json_number(cm.avg_l1_flow()),
            Quantity::EffRes => {
                let r: Vec<f64> = (0..g.m()).map(|e| cm.effective_resistance(e)).collect();
                output::json_array(&r)
            }
            Quantity::EntropyMu => {
                let weighting = g.measure_from_weights(&vec![1.0; g.m()])?;
                output::json_number(flowloc::entropy::entropy(&weighting.mu)?)
            }
        };
        fields.push((q.name().into(), value));
    }
    write_output(args.out.as_deref(), &output::json_object(&fields))
}

fn suite_config(args: &VerifyArgs) -> Result<SuiteConfig> {
    let mut config = SuiteConfig {
        seed: args.seed,
        p: args.p,
        checks: args.checks.clone(),
        tolerances: Tolerances {
            rel: args.tol_rel,
            abs: args.tol_abs,
        },
        jobs: args.jobs,
        min_n: args.min_n,
        max_n: args.max_n,
        ..SuiteConfig::default()
    };
    if let Some(n) = args.n {
        config.min_n = n;
        config.max_n = n;
    }
    if !args.family.is_empty() {
        config.families = args
            .family
            .iter()
            .map(|f| f.parse::<Family>())
            .collect::<Result<_, _>>()?;
    }
    config.conductances = match args.conductance {
        Conductance::Unit => vec![ConductanceMode::Unit],
        Conductance::Weighted => vec![ConductanceMode::LogUniform],
        Conductance::Both => vec![ConductanceMode::Unit, ConductanceMode::LogUniform],
    };
    if let Some(big) = args.big {
        if !(big > 0.0 && big.is_finite()) {
            bail!("--big must be positive and finite, got {big}");
        }
    }
    match (args.m, args.big) {
        (Some(m), big) => {
            if m < 2 {
                bail!("--m must be at least 2, got {m}");
            }
            config.gadgets = vec![(m, big.unwrap_or(100.0 * m as f64))];
        }
        (None, Some(big)) => config.gadgets = config.gadgets.iter().map(|&(m, _)| (m, big)).collect(),
        (None, None) => {}
    }
    // Naming only the gadget family means "just the gadgets".
    if config.families.iter().all(|&f| f == Family::ParallelGadget) && !args.family.is_empty() && config.checks.is_empty()
    {
        config.checks = vec![Check::ParallelGadget];
    }
    Ok(config)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let config = suite_config(&args)?;
    let reports = match &args.graph {
        Some(path) => {
            let g = read_graph(path)?;
            let descriptor = GraphDescriptor {
                family: "file".into(),
                size: g.n(),
                conductance: if g.is_unweighted() { "unit" } else { "weighted" }.into(),
                seed: config.seed,
            };
            let mut reports = localization::run_checks(&g, &descriptor, &config);
            if args.checks.contains(&Check::ParallelGadget) {
                let gadgets_only = SuiteConfig {
                    checks: vec![Check::ParallelGadget],
                    ..config.clone()
                };
                reports.extend(localization::run_suite(&gadgets_only));
            }
            reports
        }
        None => localization::run_suite(&config),
    };
    let summary = SuiteSummary::of(&reports);
    write_output(args.out.as_deref(), &render_reports(&reports, args.format)?)?;
    eprintln!(
        "{} checks: {} passed, {} failed, {} flagged, {} skipped, {} errors",
        summary.total, summary.passed, summary.failed, summary.flagged, summary.skipped, summary.errors
    );
    Ok(SuiteSummary::exit_code(&reports))
}

fn cmd_report(args: ReportArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let rows = output::parse_json_report(&text).with_context(|| format!("invalid report {}", args.input.display()))?;
    write_output(args.out.as_deref(), &output::render_rows(&rows, args.format)?)?;
    let code = if rows.iter().any(|r| r.status == "error") {
        2
    } else if rows.iter().any(|r| r.status == "fail" || (r.status == "flagged" && !r.pass)) {
        1
    } else {
        0
    };
    Ok(code)
}
