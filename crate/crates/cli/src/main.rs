use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mapt::bench::{run_benchmark, scenario_sample, BenchConfig, Method, DEFAULT_REPLICATES};
use mapt::engine::{default_beta_grid, default_states_grid, empirical_bayes};
use mapt::io::{format_f64, load_model, read_data, save_model, Resolved, RunConfig, TuningRecord};
use mapt::{backward, build_tree, sample_posterior, DensityEstimate, Error, HyperParams};

#[derive(Parser)]
#[command(
    name = "mapt",
    version,
    about = "Markov adaptive Polya tree density estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to data and write it as JSON
    Fit(FitArgs),
    /// Evaluate the posterior predictive density of a fitted model
    Density(DensityArgs),
    /// Draw densities from the posterior of a fitted model
    Sample(SampleArgs),
    /// Print the marginal likelihood surface over (I, beta)
    Tune(TuneArgs),
    /// Draw a data set from one of the simulation scenarios
    Simulate(SimulateArgs),
    /// Run the simulation study and write loss and summary CSVs
    Bench(BenchArgs),
}

#[derive(Args)]
struct ModelFlags {
    /// Data file, one number per line
    #[arg(long)]
    data: PathBuf,
    /// JSON config with keys lo, hi, K, I, beta, L, U, H, base, seed, kernel
    #[arg(long)]
    config: Option<PathBuf>,
    /// Domain as lo,hi
    #[arg(long, value_parser = parse_domain, allow_hyphen_values = true)]
    domain: Option<(f64, f64)>,
    /// Maximum tree depth
    #[arg(long)]
    depth: Option<u32>,
    /// Number of shrinkage states
    #[arg(long = "I")]
    states: Option<usize>,
    /// Stickiness of the state transitions
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Choose (I, beta) by maximum marginal likelihood over the default grid
    #[arg(long)]
    tune: bool,
    /// Seed recorded in the config (fitting itself is deterministic)
    #[arg(long)]
    seed: Option<u64>,
    /// Output model path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DensityArgs {
    /// Fitted model
    #[arg(long)]
    model: PathBuf,
    /// Evaluate at the midpoints of this many equal cells of the domain
    #[arg(long, conflicts_with = "points")]
    grid: Option<u64>,
    /// Evaluate at the points in this file, one per line
    #[arg(long)]
    points: Option<PathBuf>,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Fitted model
    #[arg(long)]
    model: PathBuf,
    /// Number of posterior draws
    #[arg(long, default_value_t = 10)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluate each draw at the midpoints of this many equal cells
    #[arg(long, default_value_t = 256)]
    grid: u64,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario id, 1 to 5
    #[arg(long)]
    scenario: u8,
    /// Sample size
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Scenario ids
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    scenario: Vec<u8>,
    /// Sample sizes
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "125,250,500,750,1000,1250"
    )]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,
    /// Methods: markov_apt, pt
    #[arg(long, value_delimiter = ',', default_value = "markov_apt,pt")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for losses.csv and summary.csv
    #[arg(long)]
    out: PathBuf,
}

fn parse_domain(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo = a
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound {a:?}"))?;
    let hi = b
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound {b:?}"))?;
    Ok((lo, hi))
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

type CliResult<T> = Result<T, Failure>;

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn resolve(flags: &ModelFlags, seed: Option<u64>) -> CliResult<Resolved> {
    let file = match &flags.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    let over = RunConfig {
        lo: flags.domain.map(|d| d.0),
        hi: flags.domain.map(|d| d.1),
        depth: flags.depth,
        states: flags.states,
        beta: flags.beta,
        seed,
        ..RunConfig::default()
    };
    Ok(file.overlay(&over).resolve()?)
}

fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let cfg = resolve(&args.model, args.seed)?;
    let data = read_data(&args.model.data)?;
    let tree = build_tree(&data, cfg.domain, cfg.depth)?;
    let (settings, tuning) = if args.tune {
        let t = empirical_bayes(
            &tree,
            &cfg.base,
            &cfg.settings,
            &default_states_grid(),
            &default_beta_grid(),
        )?;
        (t.settings(&cfg.settings), Some(TuningRecord::from(&t)))
    } else {
        (cfg.settings, None)
    };
    let hp = HyperParams::from_settings(cfg.domain, cfg.depth, cfg.base.clone(), &settings)?;
    let est = DensityEstimate::fit(tree, hp)?;
    save_model(&args.out, &est, tuning)?;
    println!("log_marginal={}", format_f64(est.log_marginal()));
    if let Some(t) = tuning {
        println!("I={} beta={}", t.states, t.beta);
    }
    Ok(())
}

fn grid_points(lo: f64, hi: f64, cells: u64) -> CliResult<Vec<f64>> {
    if cells == 0 {
        return Err(Failure::Usage("--grid must be at least 1".into()));
    }
    let w = (hi - lo) / cells as f64;
    Ok((0..cells).map(|k| lo + (k as f64 + 0.5) * w).collect())
}

fn cmd_density(args: &DensityArgs) -> CliResult<()> {
    let est = load_model(&args.model)?.estimate;
    let d = *est.tree().domain();
    let xs = match (&args.points, args.grid) {
        (Some(p), _) => read_data(p)?,
        (None, Some(g)) => grid_points(d.lo(), d.hi(), g)?,
        (None, None) => {
            return Err(Failure::Usage(
                "one of --grid or --points is required".into(),
            ))
        }
    };
    let mut w = output(args.out.as_deref())?;
    writeln!(w, "x,ppd")?;
    for x in xs {
        writeln!(w, "{},{}", format_f64(x), format_f64(est.ppd(x)?))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_sample(args: &SampleArgs) -> CliResult<()> {
    if args.draws == 0 {
        return Err(Failure::Usage("--draws must be at least 1".into()));
    }
    let est = load_model(&args.model)?.estimate;
    let hp = est.hyper_params();
    let post = backward(est.tree(), hp, est.forward_table())?;
    let draws = sample_posterior(&post, hp, est.tree(), args.seed, args.draws)?;
    let d = *est.tree().domain();
    let xs = grid_points(d.lo(), d.hi(), args.grid)?;
    let mut w = output(args.out.as_deref())?;
    writeln!(w, "draw,x,density")?;
    for (k, draw) in draws.iter().enumerate() {
        for &x in &xs {
            writeln!(
                w,
                "{k},{},{}",
                format_f64(x),
                format_f64(draw.density(x, hp)?)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_tune(args: &TuneArgs) -> CliResult<()> {
    let cfg = resolve(&args.model, None)?;
    let data = read_data(&args.model.data)?;
    let tree = build_tree(&data, cfg.domain, cfg.depth)?;
    let t = empirical_bayes(
        &tree,
        &cfg.base,
        &cfg.settings,
        &default_states_grid(),
        &default_beta_grid(),
    )?;
    let mut w = output(args.out.as_deref())?;
    writeln!(w, "I,beta,log_marginal")?;
    for p in &t.surface {
        writeln!(w, "{},{},{}", p.states, p.beta, format_f64(p.log_marginal))?;
    }
    w.flush()?;
    eprintln!("selected I={} beta={}", t.states, t.beta);
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let xs = scenario_sample(args.scenario, args.n, args.seed)?;
    let mut w = output(args.out.as_deref())?;
    for x in xs {
        writeln!(w, "{}", format_f64(x))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    let cfg = BenchConfig {
        scenarios: args.scenario.clone(),
        sizes: args.sizes.clone(),
        replicates: args.replicates,
        methods: args.methods.clone(),
        seed: args.seed,
        ..BenchConfig::default()
    };
    let res = run_benchmark(&cfg)?;
    std::fs::create_dir_all(&args.out)?;
    let mut losses = BufWriter::new(File::create(args.out.join("losses.csv"))?);
    res.write_losses_csv(&mut losses)?;
    losses.flush()?;
    let mut summary = BufWriter::new(File::create(args.out.join("summary.csv"))?);
    res.write_summary_csv(&mut summary)?;
    summary.flush()?;
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("MAPT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("MAPT_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Density(a) => cmd_density(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(Error::Io(e))) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
