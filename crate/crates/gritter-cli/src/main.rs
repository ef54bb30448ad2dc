//! `gritter` — winter-maintenance route planner CLI.
//!
//! Staged workflow: `generate` a synthetic instance (or bring your own
//! files), `preprocess` it (largest SCC + chain compression), `plan`
//! (baseline or policy-refined), then `export-geojson` for mapping.
//! `oracle` verifies the heuristic against the exhaustive optimum on micro
//! instances and `bench` runs the two-planner comparison harness.
//!
//! Exit codes: 0 success (for `plan`: best plan has no hard violations),
//! 1 configuration/input/runtime error, 2 the best plan violates a hard
//! constraint (or a soft one under `--depot-capacity hard`).

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gritter::artifacts::{self, load_instance, preprocess};
use gritter::assign::nearest_depot_assignment;
use gritter::compare::{run_comparison, ComparisonInstance};
use gritter::fleet::DepotId;
use gritter::geojson;
use gritter::oracle::{brute_force_oracle, OracleOutcome, MAX_ORACLE_EDGES};
use gritter::policy::{train_loop, RewardWeights, TrainConfig};
use gritter::routing::{solve_depot, Plan, Selection};
use gritter::synth::{generate_instance, GeneratorConfig};

#[derive(Parser)]
#[command(name = "gritter", version, about = "Bi-level winter road maintenance planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance directory.
    Generate(GenerateArgs),
    /// Largest-SCC + degree-2 chain compression, with a stats report.
    Preprocess(PreprocessArgs),
    /// Run the planner and persist all artifacts.
    Plan(PlanArgs),
    /// Compare the heuristic against the exhaustive micro-instance optimum.
    Oracle(OracleArgs),
    /// Two-planner comparison harness over generated instances.
    Bench(BenchArgs),
    /// Export plan artifacts as GeoJSON.
    ExportGeojson(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionArg {
    Nearest,
    Farthest,
}

impl From<SelectionArg> for Selection {
    fn from(s: SelectionArg) -> Selection {
        match s {
            SelectionArg::Nearest => Selection::Nearest,
            SelectionArg::Farthest => Selection::Farthest,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CapacityMode {
    /// Depot vehicle overruns are reported and penalized, never fatal.
    Soft,
    /// Depot vehicle overruns fail the run (nonzero exit).
    Hard,
}

#[derive(Args)]
struct GenerateArgs {
    /// Output instance directory.
    #[arg(long, env = "GRITTER_OUT")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Approximate node count (grid of the nearest square).
    #[arg(long, default_value_t = 400)]
    nodes: usize,
    #[arg(long, default_value_t = 0.122)]
    oneway_frac: f64,
    #[arg(long, default_value_t = 0.25)]
    treat_frac: f64,
    #[arg(long, default_value_t = 3)]
    depots: usize,
    #[arg(long, default_value_t = 12)]
    max_vehicles: u32,
    /// Square area side, coordinate units.
    #[arg(long, default_value_t = 60_000.0)]
    extent: f64,
    #[arg(long, default_value = "synthetic")]
    name: String,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Instance directory (instance.json, nodes.csv, edges.csv, fleet.json).
    #[arg(long)]
    instance: PathBuf,
    /// Output directory for the compressed instance.
    #[arg(long, env = "GRITTER_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, env = "GRITTER_OUT")]
    out: PathBuf,
    /// Policy-refinement iterations; 0 runs the nearest-depot baseline only.
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    w1: f64,
    #[arg(long, default_value_t = 1.0)]
    w2: f64,
    #[arg(long, default_value_t = 1.0)]
    penalty_weight: f64,
    #[arg(long, value_enum, default_value_t = SelectionArg::Nearest)]
    selection: SelectionArg,
    #[arg(long, value_enum, default_value_t = CapacityMode::Soft)]
    depot_capacity: CapacityMode,
    /// Policy network hidden width.
    #[arg(long, default_value_t = 64)]
    hidden: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Depot whose assigned edges are verified (default: lowest id).
    #[arg(long)]
    depot: Option<u64>,
    #[arg(long, value_enum, default_value_t = SelectionArg::Nearest)]
    selection: SelectionArg,
}

#[derive(Args)]
struct BenchArgs {
    /// Report CSV path.
    #[arg(long, env = "GRITTER_OUT")]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    instances: usize,
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 250)]
    nodes: usize,
    #[arg(long, default_value_t = 0.25)]
    treat_frac: f64,
    #[arg(long, default_value_t = 3)]
    depots: usize,
    #[arg(long, default_value_t = 40_000.0)]
    extent: f64,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Plan artifact directory produced by `plan`.
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, env = "GRITTER_OUT")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("gritter: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Preprocess(args) => cmd_preprocess(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Bench(args) => cmd_bench(args),
        Command::ExportGeojson(args) => cmd_export(args),
    }
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<ExitCode> {
    let cfg = GeneratorConfig {
        seed: args.seed,
        nodes: args.nodes,
        oneway_fraction: args.oneway_frac,
        treated_fraction: args.treat_frac,
        depots: args.depots,
        max_vehicles_per_depot: args.max_vehicles,
        extent: (args.extent, args.extent),
        name: args.name,
        ..GeneratorConfig::default()
    };
    let instance = generate_instance(&cfg).context("instance generation failed")?;
    instance.write(&args.out)?;
    artifacts::write_run_echo(&args.out.join("generator_config.json"), &cfg)?;
    println!(
        "generated {} nodes / {} rows ({} directed edges, {} required) -> {}",
        instance.network.node_count(),
        instance.row_count(),
        instance.network.edge_count(),
        instance.network.required_edges().count(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_preprocess(args: PreprocessArgs) -> anyhow::Result<ExitCode> {
    let (network, fleet) = load_instance(&args.instance)?;
    let (compressed, stats) = preprocess(&network, &fleet)?;
    artifacts::save_instance(&args.out, &compressed, &fleet)?;
    artifacts::write_atomic(
        &args.out.join("preprocess_stats.json"),
        &serde_json::to_vec_pretty(&stats)?,
    )?;
    println!(
        "preprocess: {} nodes / {} edges -> {} / {} (SCC {} / {}); \
         treated {} edges, {:.1} km, {:.1} lane-km; one-way {:.1}%",
        stats.nodes_before,
        stats.edges_before,
        stats.nodes_after,
        stats.edges_after,
        stats.nodes_after_scc,
        stats.edges_after_scc,
        stats.treated_edges,
        stats.treated_km,
        stats.treated_lane_km,
        stats.oneway_fraction * 100.0
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_plan(args: PlanArgs) -> anyhow::Result<ExitCode> {
    let (raw, fleet) = load_instance(&args.instance)?;
    // Preprocessing is idempotent, so this is a no-op on already-compressed
    // instances and makes `plan` safe on raw ones.
    let (network, _) = preprocess(&raw, &fleet)?;
    let fleet = fleet.resolve(&network)?;

    let cfg = TrainConfig {
        iterations: args.iterations,
        seed: args.seed,
        weights: RewardWeights {
            w1: args.w1,
            w2: args.w2,
            penalty_weight: args.penalty_weight,
        },
        selection: args.selection.into(),
        hidden_dim: args.hidden,
        ..TrainConfig::default()
    };
    let outcome = train_loop(&network, &fleet, &cfg)?;

    std::fs::create_dir_all(&args.out)?;
    outcome
        .best_assignment
        .write_csv(&args.out.join("assignment.csv"))?;
    artifacts::write_plan_summary(&args.out.join("plan_summary.json"), &outcome.best_plan)?;
    artifacts::write_route_csvs(&args.out, &outcome.best_plan, &network, &fleet.vehicle)?;
    artifacts::write_training_log(&args.out.join("training_log.csv"), &outcome.log)?;
    artifacts::write_atomic(
        &args.out.join("feature_scaling.json"),
        &serde_json::to_vec_pretty(&outcome.scaling)?,
    )?;
    if let Some(model) = &outcome.model {
        model.save(&args.out.join("model.json"))?;
    }
    artifacts::write_run_echo(&args.out.join("run_config.json"), &cfg)?;

    let plan = &outcome.best_plan;
    println!(
        "plan: Z1 {:.2} min, Z2 {:.2} kg CO2, NoV {} ({} iterations, seed {})",
        plan.z1_minutes,
        plan.z2_kg,
        plan.vehicles_used(),
        args.iterations,
        args.seed
    );
    for v in &plan.violations {
        println!("violation: {}", serde_json::to_string(v)?);
    }

    let hard = plan.hard_violations().count();
    let soft = plan.soft_violations().count();
    let failed = hard > 0 || (matches!(args.depot_capacity, CapacityMode::Hard) && soft > 0);
    Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn cmd_oracle(args: OracleArgs) -> anyhow::Result<ExitCode> {
    let (raw, fleet) = load_instance(&args.instance)?;
    let (network, _) = preprocess(&raw, &fleet)?;
    let fleet = fleet.resolve(&network)?;

    let depot = match args.depot {
        Some(id) => fleet
            .depot(DepotId(id))
            .with_context(|| format!("no depot with id {id}"))?,
        None => &fleet.depots[0],
    };
    let assignment = nearest_depot_assignment(&network, &fleet.depots)?;
    let edges = assignment.edges_for(depot.id);
    if edges.len() > MAX_ORACLE_EDGES {
        bail!(
            "depot {} has {} assigned edges; the oracle enumerates at most {MAX_ORACLE_EDGES}",
            depot.id,
            edges.len()
        );
    }

    let routes = solve_depot(&network, depot, &edges, &fleet.vehicle, args.selection.into())?;
    let heuristic = Plan {
        z1_minutes: routes.iter().map(|r| r.duration_minutes).fold(0.0, f64::max),
        z2_kg: routes.iter().map(|r| r.emissions_kg).sum(),
        vehicles_per_depot: vec![(depot.id, routes.len() as u32)],
        routes,
        violations: Vec::new(),
    };

    match brute_force_oracle(&network, depot, &edges, &fleet.vehicle)? {
        OracleOutcome::Feasible(opt) => {
            let gap = if opt.z1_minutes > 0.0 {
                (heuristic.z1_minutes - opt.z1_minutes) / opt.z1_minutes * 100.0
            } else {
                0.0
            };
            println!(
                "oracle:    Z1 {:.3} min, Z2 {:.3} kg, routes {}",
                opt.z1_minutes,
                opt.z2_kg,
                opt.plan.routes.len()
            );
            println!(
                "heuristic: Z1 {:.3} min, Z2 {:.3} kg, routes {} (gap {:.1}%)",
                heuristic.z1_minutes,
                heuristic.z2_kg,
                heuristic.routes.len(),
                gap
            );
            println!("scalarized optimum (Z1+Z2): {:.3}", opt.scalarized_min);
        }
        OracleOutcome::Infeasible => {
            println!("oracle: no feasible plan exists for depot {}", depot.id);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<ExitCode> {
    let mut instances = Vec::new();
    for i in 0..args.instances {
        let gen_cfg = GeneratorConfig {
            seed: args.seed.wrapping_add(i as u64),
            nodes: args.nodes,
            treated_fraction: args.treat_frac,
            depots: args.depots,
            extent: (args.extent, args.extent),
            name: format!("bench-{i:03}"),
            ..GeneratorConfig::default()
        };
        let inst = generate_instance(&gen_cfg)
            .with_context(|| format!("generation failed for instance {i}"))?;
        let (network, _) = preprocess(&inst.network, &inst.fleet)?;
        let fleet = inst.fleet.resolve(&network)?;
        instances.push(ComparisonInstance {
            name: gen_cfg.name.clone(),
            network,
            fleet,
        });
    }

    let template = TrainConfig {
        iterations: args.iterations,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let report = run_comparison(&instances, &template);
    report.write_csv(&args.out)?;

    let mut improved = 0;
    let mut total = 0;
    for (base, refined) in report.paired() {
        if base.failed || refined.failed {
            continue;
        }
        total += 1;
        if refined.objective < base.objective {
            improved += 1;
        }
        println!(
            "{}: baseline Z1 {:.2} / Z2 {:.2} -> refined Z1 {:.2} / Z2 {:.2} (objective {:.4} -> {:.4})",
            base.instance,
            base.z1_minutes,
            base.z2_kg,
            refined.z1_minutes,
            refined.z2_kg,
            base.objective,
            refined.objective
        );
    }
    println!(
        "bench: refined arm improved the objective on {improved}/{total} instances -> {}",
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(args: ExportArgs) -> anyhow::Result<ExitCode> {
    let (raw, fleet) = load_instance(&args.instance)?;
    let (network, _) = preprocess(&raw, &fleet)?;
    let fleet = fleet.resolve(&network)?;

    let summary = artifacts::read_plan_summary(&args.plan.join("plan_summary.json"))?;
    let routes_dir = args.plan.join("routes");
    let mut route_files: Vec<PathBuf> = match std::fs::read_dir(&routes_dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect(),
        Err(_) => Vec::new(),
    };
    route_files.sort();
    let mut routes = Vec::with_capacity(route_files.len());
    for f in &route_files {
        routes.push(artifacts::read_route_csv(f, &network)?);
    }
    let plan = Plan {
        routes,
        z1_minutes: summary.z1_min,
        z2_kg: summary.z2_kg,
        vehicles_per_depot: summary.nov_per_depot.clone(),
        violations: summary.violations.clone(),
    };
    geojson::write_geojson(&args.out, &network, &fleet, &plan)?;
    println!(
        "exported {} routes and {} depots -> {}",
        plan.routes.len(),
        fleet.depots.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
