use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use object_kb::analysis::{AnalysisConfig, PropertySet, DEFAULT_CLUSTERS, DEFAULT_NEIGHBORS};
use object_kb::corpus::bundled_corpus;
use object_kb::geometry::{DEFAULT_RANSAC_ITERATIONS, DEFAULT_RANSAC_THRESHOLD_M};
use object_kb::pipeline::{analyze_to_files, build_to_file, simulate_dataset};
use object_kb::properties::DEFAULT_DELTA0_MM;
use object_kb::sensing::{load_corpus, SimulationConfig, DEFAULT_POINTS_PER_VIEW, DEFAULT_RAMP_STEP_DEG};
use object_kb::symbols::{load_kb, query, KbConfig, Scope, DEFAULT_K};
use object_kb::{Error, DEFAULT_SEED};

/// Build a symbolic knowledge base about household objects from measurements.
#[derive(Debug, Parser)]
#[command(name = "kb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate measurements for a corpus of object specs into a dataset directory.
    Simulate(SimulateArgs),
    /// Extract properties from a dataset and write the knowledge base.
    Build(BuildArgs),
    /// Embed instances with Isomap, cluster them with K-means and export plot data.
    Analyze(AnalyzeArgs),
    /// Print a class's label distributions and its nearest classes.
    Query(QueryArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON array of object specs; the bundled 46-object corpus when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output dataset directory (must be absent or empty).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "OBJECT_KB_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Points rendered per depth view.
    #[arg(long, default_value_t = DEFAULT_POINTS_PER_VIEW)]
    points: usize,
    /// Ramp actuator step in degrees.
    #[arg(long, default_value_t = DEFAULT_RAMP_STEP_DEG)]
    ramp_step: f64,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Clusters per property.
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Cluster each property over the whole corpus or within each class.
    #[arg(long, default_value = "corpus")]
    scope: Scope,
    #[arg(long, env = "OBJECT_KB_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Deformation scale of the rigidity transform exp(-d / delta0).
    #[arg(long = "delta0-mm", default_value_t = DEFAULT_DELTA0_MM)]
    delta0_mm: f64,
    #[arg(long, default_value_t = DEFAULT_RANSAC_THRESHOLD_M)]
    ransac_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_RANSAC_ITERATIONS)]
    ransac_iterations: usize,
    /// Also symbolize length, width and height.
    #[arg(long)]
    size_axes: bool,
    /// Per-property cluster count, e.g. `--k-for rigidity=2`.
    #[arg(long = "k-for", value_parser = parse_k_override)]
    k_for: Vec<(String, usize)>,
    /// Per-property vocabulary, e.g. `--labels rigidity=soft,medium,rigid`.
    #[arg(long = "labels", value_parser = parse_vocabulary)]
    labels: Vec<(String, Vec<String>)>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    kb: PathBuf,
    /// `physical`, `functional`, or a comma-separated list such as `support`.
    #[arg(long, default_value = "physical")]
    properties: String,
    /// K-means cluster count.
    #[arg(long, default_value_t = DEFAULT_CLUSTERS)]
    k: usize,
    /// Isomap neighbor count.
    #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
    neighbors: usize,
    #[arg(long, env = "OBJECT_KB_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Embedding CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG scatter plot.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Join disconnected neighbor-graph components instead of failing.
    #[arg(long)]
    bridge_components: bool,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    kb: PathBuf,
    /// Class name, e.g. "Ceramic Cup".
    #[arg(long = "class")]
    class_name: String,
    /// Number of nearest classes to list.
    #[arg(long, default_value_t = 3)]
    nearest: usize,
}

fn parse_k_override(s: &str) -> Result<(String, usize), String> {
    let (prop, k) = s.split_once('=').ok_or("expected PROPERTY=K")?;
    let k = k.parse().map_err(|e| format!("bad cluster count: {e}"))?;
    Ok((prop.trim().to_owned(), k))
}

fn parse_vocabulary(s: &str) -> Result<(String, Vec<String>), String> {
    let (prop, labels) = s.split_once('=').ok_or("expected PROPERTY=LABEL,LABEL,...")?;
    let labels: Vec<String> = labels.split(',').map(|l| l.trim().to_owned()).collect();
    if labels.iter().any(String::is_empty) {
        return Err("labels must not be empty".into());
    }
    Ok((prop.trim().to_owned(), labels))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Build(args) => build(args),
        Command::Analyze(args) => analyze(args),
        Command::Query(args) => run_query(args),
    }
}

fn simulate(args: SimulateArgs) -> Result<(), Error> {
    let specs = match &args.spec {
        Some(path) => load_corpus(path)?,
        None => bundled_corpus()?,
    };
    let config = SimulationConfig {
        points_per_view: args.points,
        ramp_step_deg: args.ramp_step,
    };
    let manifest = simulate_dataset(&specs, &args.out, &config, args.seed)?;
    println!("simulated {} instances into {}", manifest.instances, args.out.display());
    for (class, count) in &manifest.classes {
        println!("  {class}: {count}");
    }
    Ok(())
}

fn build(args: BuildArgs) -> Result<(), Error> {
    let config = KbConfig {
        k: args.k,
        scope: args.scope,
        seed: args.seed,
        delta0_mm: args.delta0_mm,
        ransac_threshold_m: args.ransac_threshold,
        ransac_iterations: args.ransac_iterations,
        size_axes: args.size_axes,
        vocabularies: args.labels.into_iter().collect(),
        k_overrides: args.k_for.into_iter().collect(),
    };
    let kb = build_to_file(&args.dataset, &args.out, &config)?;
    println!(
        "wrote {}: {} instances, {} classes",
        args.out.display(),
        kb.instances.len(),
        kb.classes.len()
    );
    for model in &kb.models {
        let scope = model.class_name.as_deref().map(|c| format!(" [{c}]")).unwrap_or_default();
        let centroids: Vec<String> = model.centroids.iter().map(|c| format!("{c:.4}")).collect();
        println!(
            "  {}{scope}: {} -> {}",
            model.property,
            model.labels.join("/"),
            centroids.join(", ")
        );
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<(), Error> {
    let config = AnalysisConfig {
        properties: PropertySet::parse(&args.properties),
        k_clusters: args.k,
        neighbors: args.neighbors,
        seed: args.seed,
        bridge_components: args.bridge_components,
    };
    let analysis = analyze_to_files(&args.kb, &config, &args.out, args.svg.as_deref())?;
    let [l1, l2] = analysis.embedding.eigenvalues;
    println!(
        "embedded {} instances over [{}] (eigenvalues {l1:.6}, {l2:.6}); inertia {:.6}",
        analysis.matrix.len(),
        analysis.matrix.columns.join(", "),
        analysis.report.inertia
    );
    for cluster in &analysis.report.clusters {
        let labels: Vec<String> = cluster.members.iter().map(|m| m.class_label.to_string()).collect();
        println!("  cluster {}: {} members, labels [{}]", cluster.cluster, cluster.members.len(), labels.join(" "));
    }
    println!("wrote {}", args.out.display());
    if let Some(svg) = &args.svg {
        println!("wrote {}", svg.display());
    }
    Ok(())
}

fn run_query(args: QueryArgs) -> Result<(), Error> {
    let kb = load_kb(&args.kb)?;
    let result = query(&kb, &args.class_name, args.nearest)?;
    let concept = result.concept;
    println!("{} ({} instances)", concept.class_name, concept.instance_count);
    println!("marginals:");
    for (prop, marginal) in &concept.marginals {
        let cells: Vec<String> = marginal
            .proportions
            .iter()
            .map(|(label, p)| format!("{label}: {p:.4}"))
            .collect();
        println!("  {prop}: {{{}}}", cells.join(", "));
    }
    println!("joints:");
    for joint in &concept.joints {
        let cells: Vec<String> = joint
            .cells
            .iter()
            .map(|c| format!("({}, {}): {:.4}", c.labels[0], c.labels[1], c.proportion))
            .collect();
        println!("  {} x {}: {}", joint.properties[0], joint.properties[1], cells.join(", "));
    }
    println!("nearest classes (L1 over marginals):");
    for (name, d) in &result.nearest {
        println!("  {name}: {d:.4}");
    }
    Ok(())
}
