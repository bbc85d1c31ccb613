//! `nacstruct` command-line front end.

use std::fs;
use std::io::Write;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use log::info;

use nacstruct::collapse::annotate_tau;
use nacstruct::dependence::{dependence_matrix, Dataset, DependenceKind};
use nacstruct::nac::{sample, NacSpec};
use nacstruct::study::{estimate, paper_config, run_study, Estimator, StudyConfig};
use nacstruct::tree::{decompose, parse_newick, tree_distance_01, tree_distance_tri, write_newick, RootedTree};

#[derive(Parser, Debug)]
#[command(name = "nacstruct", version, about = "Tree-structure estimation for nested Archimedean copulas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the tree structure of a data set.
    Estimate(EstimateArgs),
    /// Draw a sample from a nested Archimedean copula.
    Sample(SampleArgs),
    /// Run a simulation study.
    Simulate(SimulateArgs),
    /// Pairwise dependence distances between the columns of a data set.
    Distmat(DistmatArgs),
    /// Distances between two trees.
    Treedist(TreedistArgs),
    /// List the trivariate shapes of a tree.
    Triples(TriplesArgs),
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// CSV file with a header row; one column per variable.
    #[arg(long)]
    input: PathBuf,
    /// Estimator such as kt_kagg, hD_kagg, kind_kagg, kt_kb, NJNNI_kb,
    /// RNix_kb or SU_baseline.
    #[arg(long, default_value = "kt_kagg")]
    method: String,
    /// Collapse threshold of the kagg rule [default: 0.075].
    #[arg(long)]
    tau_c: Option<f64>,
    /// Test level of the kb rule and of SU_baseline [default: 0.05].
    #[arg(long)]
    alpha: Option<f64>,
    /// Bootstrap replicates per triple test.
    #[arg(long, default_value_t = 200)]
    boot: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Newick output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Label internal nodes with their average Kendall's tau.
    #[arg(long)]
    annotate: bool,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Copula specification (JSON).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output file.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "paper_config"])))]
struct SimulateArgs {
    /// Study configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in configuration, e.g. fig7_right or fig11.
    #[arg(long)]
    paper_config: Option<String>,
    /// Output directory for results.csv, summary.json and config.json.
    #[arg(long)]
    out: PathBuf,
    /// Override the number of replicates.
    #[arg(long)]
    replicates: Option<usize>,
    /// Override the sample sizes (comma separated).
    #[arg(long, value_delimiter = ',')]
    sample_sizes: Option<Vec<usize>>,
    /// Override the estimators (comma separated).
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// Override the bootstrap size.
    #[arg(long)]
    boot: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip timing; millis is written as 0 and runs are faster.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct DistmatArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Dependence measure: kt, hD or kind.
    #[arg(long, default_value = "kt")]
    kind: String,
    /// CSV output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TreedistArgs {
    /// First tree: a Newick file or a Newick string.
    #[arg(long)]
    a: String,
    /// Second tree: a Newick file or a Newick string.
    #[arg(long)]
    b: String,
}

#[derive(Args, Debug)]
struct TriplesArgs {
    /// A Newick file or a Newick string.
    #[arg(long)]
    input: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<nacstruct::Error> for Failure {
    fn from(e: nacstruct::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read_tree(arg: &str) -> Result<RootedTree, Failure> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        fs::read_to_string(path)?
    } else if arg.trim_end().ends_with(';') {
        arg.to_string()
    } else {
        return Err(Failure::Data(format!("`{arg}` is neither a file nor a Newick string")));
    };
    Ok(parse_newick(&text)?)
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Outcome {
    match output {
        Some(p) => fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs) -> Outcome {
    let estimator: Estimator = args.method.parse().map_err(|e: nacstruct::Error| Failure::Usage(e.to_string()))?;
    let threshold = if estimator.uses_alpha() {
        if args.tau_c.is_some() {
            return Err(Failure::Usage(format!("--tau-c does not apply to {estimator}; use --alpha")));
        }
        let alpha = args.alpha.unwrap_or(0.05);
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Failure::Usage(format!("--alpha {alpha} must lie in [0, 1]")));
        }
        alpha
    } else {
        if args.alpha.is_some() {
            return Err(Failure::Usage(format!("--alpha does not apply to {estimator}; use --tau-c")));
        }
        let tau_c = args.tau_c.unwrap_or(0.075);
        if !(tau_c >= 0.0) || !tau_c.is_finite() {
            return Err(Failure::Usage(format!("--tau-c {tau_c} must be >= 0")));
        }
        tau_c
    };
    if args.boot == 0 {
        return Err(Failure::Usage("--boot must be at least 1".into()));
    }
    info!(
        "estimate: input={} method={estimator} threshold={threshold} boot={} seed={} annotate={}",
        args.input.display(),
        args.boot,
        args.seed,
        args.annotate
    );
    let data = Dataset::from_csv_path(&args.input)?;
    if data.dim() < 3 {
        return Err(Failure::Data(format!("need at least 3 columns, got {}", data.dim())));
    }
    let u = data.pseudo_observations();
    let mut tree = estimate(&u, estimator, threshold, args.boot, args.seed)?;
    if args.annotate {
        tree = annotate_tau(&tree, &u)?;
    }
    let text = write_newick(&tree, args.annotate) + "\n";
    emit(args.output.as_deref(), text.as_bytes())
}

fn cmd_sample(args: &SampleArgs) -> Outcome {
    info!("sample: spec={} n={} seed={}", args.spec.display(), args.n, args.seed);
    if args.n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let spec = NacSpec::from_json_str(&fs::read_to_string(&args.spec)?)?;
    let data = sample(&spec, args.n, args.seed)?;
    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    fs::write(&args.output, buf)?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Outcome {
    let mut config = match (&args.config, &args.paper_config) {
        (Some(path), _) => StudyConfig::from_json_str(&fs::read_to_string(path)?)?,
        (None, Some(name)) => paper_config(name).map_err(|e| Failure::Usage(e.to_string()))?,
        (None, None) => unreachable!("clap enforces one source"),
    };
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if let Some(n) = &args.sample_sizes {
        config.sample_sizes = n.clone();
    }
    if let Some(names) = &args.estimators {
        config.estimators = names
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, nacstruct::Error>>()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        config.thresholds.retain(|e, _| config.estimators.contains(e));
    }
    if let Some(b) = args.boot {
        config.bootstrap_b = b;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.no_timing {
        config.timing = false;
    }
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let resolved = serde_json::to_string_pretty(&config.to_json()).map_err(|e| Failure::Data(e.to_string()))?;
    info!("simulate: out={} config={}", args.out.display(), resolved);
    let result = run_study(&config)?;
    fs::create_dir_all(&args.out)?;
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    fs::write(args.out.join("results.csv"), csv)?;
    let mut summary = Vec::new();
    result.write_summary_json(&mut summary)?;
    fs::write(args.out.join("summary.json"), summary)?;
    fs::write(args.out.join("config.json"), resolved)?;
    Ok(())
}

fn cmd_distmat(args: &DistmatArgs) -> Outcome {
    let kind: DependenceKind = args.kind.parse().map_err(|e: nacstruct::Error| Failure::Usage(e.to_string()))?;
    info!("distmat: input={} kind={kind}", args.input.display());
    let data = Dataset::from_csv_path(&args.input)?;
    let m = dependence_matrix(&data.pseudo_observations(), kind)?;
    let mut buf = Vec::new();
    m.write_csv(&mut buf)?;
    emit(args.output.as_deref(), &buf)
}

fn cmd_treedist(args: &TreedistArgs) -> Outcome {
    info!("treedist: a={} b={}", args.a, args.b);
    let a = read_tree(&args.a)?;
    let b = read_tree(&args.b)?;
    let tri = tree_distance_tri(&a, &b)?;
    let d = a.leaf_count() as u64;
    let max = if d < 3 { 0 } else { d * (d - 1) * (d - 2) / 6 };
    println!("01={} tri={tri} max={max}", tree_distance_01(&a, &b));
    Ok(())
}

fn cmd_triples(args: &TriplesArgs) -> Outcome {
    info!("triples: input={}", args.input);
    let tree = read_tree(&args.input)?;
    if tree.leaf_count() < 3 {
        return Err(Failure::Data(format!("need at least 3 leaves, got {}", tree.leaf_count())));
    }
    let mut out = String::new();
    for shape in decompose(&tree)?.shapes() {
        out.push_str(&format!("{shape}\n"));
    }
    emit(None, out.as_bytes())
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Distmat(a) => cmd_distmat(a),
        Command::Treedist(a) => cmd_treedist(a),
        Command::Triples(a) => cmd_triples(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Data(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
