use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ufa_core::activation::fmt_real;
use ufa_core::dataio::{load_deltas_csv, load_points_csv, plot_builtin, plot_samples, write_plot_csv};
use ufa_core::validation::suggest_rescale;
use ufa_core::{
    build_network_timed, check_hypotheses, compare, load_network, load_samples_csv, sample_builtin_with,
    save_network, train_gd, verify_reconstruction, ActivationSpec, BuiltinTarget, DeltaPolicy, Error, GDConfig,
    GridLayout, Routing, SampleSet, ShallowNetwork,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;

/// Closed-form single-hidden-layer networks that reproduce sampled functions exactly.
#[derive(Parser)]
#[command(name = "ufa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check range containment, invertibility and nonvanishing before building.
    Check(CheckArgs),
    /// Build a network, write it to a file and verify it at the samples.
    Build(BuildArgs),
    /// Evaluate a saved network at query points.
    Eval(EvalArgs),
    /// Re-verify a saved network against samples.
    Verify(VerifyArgs),
    /// Compare the closed-form build against a gradient-descent baseline.
    Compare(CompareArgs),
    /// Write plot data (inputs, reference values, network outputs) as CSV.
    ExportPlot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Kv,
}

#[derive(Args)]
struct DataArgs {
    /// Sample CSV with header x1..xn,y1..ym.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    input: Option<PathBuf>,
    /// Built-in target: sine-bump, gauss2d or swirl2to2.
    #[arg(long)]
    builtin: Option<BuiltinTarget>,
    /// Grid points per axis for a built-in target.
    #[arg(long, default_value_t = 101)]
    per_axis: usize,
    /// Grid layout for a built-in target: closed (endpoints included) or interior (cell centres).
    #[arg(long, default_value = "closed")]
    grid: GridLayout,
}

#[derive(Args)]
struct ActivationArgs {
    /// Hidden activation g.
    #[arg(long, default_value = "identity")]
    g: ActivationSpec,
    /// Output activation; repeat once per output, or give one to use for all.
    #[arg(long, default_value = "sigmoid")]
    sigma: Vec<ActivationSpec>,
    /// Input weights: default or fixed:<d1>,...,<dn>.
    #[arg(long, default_value = "default", conflicts_with = "delta_file")]
    delta: DeltaPolicy,
    /// Per-sample input weights, CSV with header d1..dn in sample order.
    #[arg(long)]
    delta_file: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    act: ActivationArgs,
    /// Grid size for the certificates.
    #[arg(long, default_value_t = ufa_core::activation::DEFAULT_GRID)]
    grid_size: usize,
    /// Margin used when suggesting a rescaled output activation.
    #[arg(long, default_value_t = 0.1)]
    margin: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    act: ActivationArgs,
    /// Maximum absolute residual accepted at the samples.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Network file to write.
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct EvalArgs {
    /// Saved network file.
    #[arg(long)]
    network: PathBuf,
    /// Query point, comma separated; may be repeated.
    #[arg(long = "x", value_name = "X1,..,XN", required_unless_present = "points")]
    x: Vec<String>,
    /// CSV of query points with header x1..xn.
    #[arg(long, conflicts_with = "x")]
    points: Option<PathBuf>,
    /// anchor-exact, nearest-anchor or unit:<i>.
    #[arg(long, default_value = "anchor-exact")]
    routing: Routing,
    /// Output CSV (default: stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Saved network file.
    #[arg(long)]
    network: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    act: ActivationArgs,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Hidden width of the baseline.
    #[arg(long, default_value_t = 16)]
    width: usize,
    /// Learning rate of the baseline.
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    /// Maximum gradient-descent iterations.
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    /// Stop once the baseline MSE reaches this value.
    #[arg(long, default_value_t = 0.0)]
    target_mse: f64,
    /// Seed for the baseline's initial weights.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scale of the baseline's initial weights.
    #[arg(long, default_value_t = 1.0)]
    init_scale: f64,
    /// Write the baseline loss history (iteration,mse) here.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct PlotArgs {
    /// Saved network file.
    #[arg(long)]
    network: PathBuf,
    /// Compare against a built-in target on a dense grid.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    builtin: Option<BuiltinTarget>,
    /// Compare against the samples in this CSV, at their anchors.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Plot grid points per axis for a built-in target.
    #[arg(long, default_value_t = 201)]
    resolution: usize,
    /// Routing for off-anchor plot points.
    #[arg(long, default_value = "nearest-anchor")]
    routing: Routing,
    /// Output CSV (default: stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// A failed run: the exit code and what to print.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            r if r.is_hypothesis_failure() => EXIT_FAILURE,
            Error::InvalidArgument(_) | Error::InvalidInterval { .. } | Error::NotApplicable(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: format!("error[{}]: {e}", e.name()),
        }
    }
}

type Outcome = std::result::Result<u8, Failure>;

fn io_context(path: &Path) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::Io(format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    File::open(path).map(BufReader::new).map_err(io_context(path))
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path).map(BufWriter::new).map_err(io_context(path))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_data(args: &DataArgs) -> Result<SampleSet, Error> {
    match (&args.input, args.builtin) {
        (Some(path), _) => load_samples_csv(open(path)?),
        (None, Some(target)) => sample_builtin_with(target, args.per_axis, args.grid),
        (None, None) => Err(Error::InvalidArgument("one of --input or --builtin is required".into())),
    }
}

struct Setup {
    g: ActivationSpec,
    sigmas: Vec<ActivationSpec>,
    delta: DeltaPolicy,
}

fn setup(args: &ActivationArgs, samples: &SampleSet) -> Result<Setup, Error> {
    let sigmas = if args.sigma.len() == 1 {
        vec![args.sigma[0].clone(); samples.m()]
    } else {
        args.sigma.clone()
    };
    let delta = match &args.delta_file {
        Some(path) => DeltaPolicy::PerPoint(load_deltas_csv(open(path)?)?),
        None => args.delta.clone(),
    };
    Ok(Setup {
        g: args.g.clone(),
        sigmas,
        delta,
    })
}

fn describe(s: &Setup, samples: &SampleSet, format: Format) -> String {
    let sigmas: Vec<String> = s.sigmas.iter().map(|a| a.name().to_string()).collect();
    match format {
        Format::Text => format!(
            "samples: p={} n={} m={}\nactivations: g={} sigma=[{}] delta={}\n",
            samples.len(),
            samples.n(),
            samples.m(),
            s.g.name(),
            sigmas.join(" "),
            s.delta
        ),
        Format::Kv => format!(
            "p={}\nn={}\nm={}\ng={}\nsigma={}\ndelta={}\n",
            samples.len(),
            samples.n(),
            samples.m(),
            s.g.name(),
            sigmas.join(" "),
            s.delta
        ),
    }
}

fn status(passed: bool) -> u8 {
    if passed {
        0
    } else {
        EXIT_FAILURE
    }
}

fn run_check(args: CheckArgs) -> Outcome {
    let samples = load_data(&args.data)?;
    let s = setup(&args.act, &samples)?;
    let report = check_hypotheses(&samples, &s.g, &s.sigmas, &s.delta, args.grid_size)?;
    let mut out = describe(&s, &samples, args.format);
    out.push_str(&match args.format {
        Format::Text => report.render_text(),
        Format::Kv => report.render_kv(),
    });
    if !report.range_containment.passed {
        let mut failing: Vec<usize> = report.range_containment.violations.iter().map(|v| v.output).collect();
        failing.dedup();
        for j in failing {
            if let Ok(spec) = suggest_rescale(&samples, j, &s.sigmas[j], args.margin) {
                out.push_str(&match args.format {
                    Format::Text => format!("  suggestion: output {j} fits `--sigma {}`\n", spec.name()),
                    Format::Kv => format!("suggestion.{j}={}\n", spec.name()),
                });
            }
        }
    }
    print!("{out}");
    Ok(status(report.overall_passed))
}

fn run_build(args: BuildArgs) -> Outcome {
    let samples = load_data(&args.data)?;
    let s = setup(&args.act, &samples)?;
    let (net, seconds) = build_network_timed(&samples, &s.g, &s.sigmas, &s.delta)?;
    let mut file = create(&args.output)?;
    save_network(&net, &mut file)?;
    file.flush().map_err(io_context(&args.output))?;
    let report = verify_reconstruction(&net, &samples, args.tol)?.with_construction_seconds(seconds);
    let mut out = describe(&s, &samples, args.format);
    match args.format {
        Format::Text => {
            out.push_str(&format!("network: {}\n", args.output.display()));
            let c = net.counts();
            out.push_str(&format!("nodes: inputs={} hidden={} outputs={}\n", c.inputs, c.hidden, c.outputs));
            out.push_str(&report.render_text());
        }
        Format::Kv => {
            out.push_str(&format!("network={}\n", args.output.display()));
            out.push_str(&report.render_kv());
        }
    }
    print!("{out}");
    Ok(status(report.passed))
}

fn load_net(path: &Path) -> Result<ShallowNetwork, Error> {
    load_network(open(path)?)
}

fn parse_point(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse {
                    line: 0,
                    message: format!("query point `{text}`: {e}"),
                })
        })
        .collect()
}

fn run_eval(args: EvalArgs) -> Outcome {
    let net = load_net(&args.network)?;
    let points = match &args.points {
        Some(path) => load_points_csv(open(path)?)?,
        None => args.x.iter().map(|t| parse_point(t)).collect::<Result<_, _>>()?,
    };
    let dims = net.dims();
    let mut rows = Vec::with_capacity(points.len());
    for x in &points {
        let trace = net.forward(x, args.routing)?;
        let mut cells: Vec<String> = x.iter().map(|v| fmt_real(*v)).collect();
        cells.push(trace.unit_index.to_string());
        cells.extend(trace.outputs.iter().map(|v| fmt_real(*v)));
        rows.push(cells.join(","));
    }
    let mut header: Vec<String> = (1..=dims.n).map(|k| format!("x{k}")).collect();
    header.push("unit".into());
    header.extend((1..=dims.m).map(|j| format!("y{j}")));
    let target = args.output.as_deref();
    let mut w = sink(target)?;
    let written = writeln!(w, "{}", header.join(","))
        .and_then(|_| rows.iter().try_for_each(|r| writeln!(w, "{r}")))
        .and_then(|_| w.flush());
    written.map_err(|e| Error::Io(e.to_string()))?;
    Ok(0)
}

fn run_verify(args: VerifyArgs) -> Outcome {
    let net = load_net(&args.network)?;
    let samples = load_data(&args.data)?;
    let report = verify_reconstruction(&net, &samples, args.tol)?;
    match args.format {
        Format::Text => print!("network: {}\n{}", args.network.display(), report.render_text()),
        Format::Kv => print!("network={}\n{}", args.network.display(), report.render_kv()),
    }
    Ok(status(report.passed))
}

fn run_compare(args: CompareArgs) -> Outcome {
    let samples = load_data(&args.data)?;
    let s = setup(&args.act, &samples)?;
    let config = GDConfig {
        hidden_width: args.width,
        learning_rate: args.lr,
        max_iterations: args.iters,
        target_mse: args.target_mse,
        rng_seed: args.seed,
        init_scale: args.init_scale,
    };
    config.validate()?;
    let (net, seconds) = build_network_timed(&samples, &s.g, &s.sigmas, &s.delta)?;
    let ufa = verify_reconstruction(&net, &samples, args.tol)?.with_construction_seconds(seconds);
    let (_, gd) = train_gd(&samples, &config)?;
    if let Some(path) = &args.loss_csv {
        let mut w = create(path)?;
        gd.write_loss_csv(&mut w)?;
        w.flush().map_err(io_context(path))?;
    }
    let cmp = compare(&ufa, &gd)?;
    let mut out = describe(&s, &samples, args.format);
    match args.format {
        Format::Text => {
            out.push_str(&format!(
                "baseline: width={} lr={} iters={} target_mse={} seed={} init_scale={} (sigmoid hidden layer, full batch)\n",
                config.hidden_width,
                fmt_real(config.learning_rate),
                config.max_iterations,
                fmt_real(config.target_mse),
                config.rng_seed,
                fmt_real(config.init_scale)
            ));
            out.push_str(&ufa.render_text());
            out.push_str(&format!(
                "baseline loss: initial {} final {} after {} iterations (nonincreasing: {})\n",
                fmt_real(gd.initial_mse),
                fmt_real(gd.final_mse),
                gd.iterations_run,
                gd.nonincreasing
            ));
            out.push_str(&cmp.render_text());
        }
        Format::Kv => {
            out.push_str(&format!(
                "gd.width={}\ngd.lr={}\ngd.iters={}\ngd.target_mse={}\ngd.seed={}\ngd.init_scale={}\ngd.nonincreasing={}\nufa.passed={}\nufa.max_abs_residual={}\n",
                config.hidden_width,
                fmt_real(config.learning_rate),
                config.max_iterations,
                fmt_real(config.target_mse),
                config.rng_seed,
                fmt_real(config.init_scale),
                gd.nonincreasing,
                ufa.passed,
                fmt_real(ufa.max_abs_residual)
            ));
            out.push_str(&cmp.render_kv());
        }
    }
    print!("{out}");
    Ok(status(ufa.passed))
}

fn run_plot(args: PlotArgs) -> Outcome {
    let net = load_net(&args.network)?;
    let rows = match (&args.input, args.builtin) {
        (Some(path), _) => plot_samples(&net, &load_samples_csv(open(path)?)?)?,
        (None, Some(target)) => {
            let dims = net.dims();
            for (what, expected, found) in [("target inputs", dims.n, target.n()), ("target outputs", dims.m, target.m())] {
                if expected != found {
                    return Err(Error::DimensionMismatch { what, expected, found }.into());
                }
            }
            plot_builtin(&net, target, args.resolution, args.routing)?
        }
        (None, None) => return Err(Error::InvalidArgument("one of --input or --builtin is required".into()).into()),
    };
    let mut w = sink(args.output.as_deref())?;
    write_plot_csv(&rows, &mut w)?;
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check(a) => run_check(a),
        Command::Build(a) => run_build(a),
        Command::Eval(a) => run_eval(a),
        Command::Verify(a) => run_verify(a),
        Command::Compare(a) => run_compare(a),
        Command::ExportPlot(a) => run_plot(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let _ = io::stdout().flush();
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
