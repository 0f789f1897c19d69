//! Command-line front end for the platoon coordination simulator.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use platoon_core::coordination::{DecisionEvent, SchemeKind};
use platoon_core::dp::{self, DpInstance, SolveResult};
use platoon_core::network::{
    make_scenario, FleetBucket, FleetSpec, Scenario, ScenarioConfig,
};
use platoon_core::sim::{
    compare_schemes, comparison_csv, decisions_jsonl, platoons_csv, run_simulation,
    run_simulation_observed, DecisionObserver,
};

#[derive(Parser)]
#[command(
    name = "platoon",
    version,
    about = "Hub-based multi-fleet truck platooning: scenario generation, coordination simulation, and solver benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario file from a preset, a config file, or flags
    Generate(GenerateArgs),
    /// Simulate one coordination scheme on a scenario
    Run(RunArgs),
    /// Simulate all three schemes and write a side-by-side comparison
    Compare(CompareArgs),
    /// Time the solver against exhaustive enumeration on sampled decisions
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Config JSON file to start from; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset (available: sweden)
    #[arg(long)]
    preset: Option<String>,
    /// Number of hubs
    #[arg(long)]
    hubs: Option<usize>,
    /// Number of trucks
    #[arg(long)]
    trucks: Option<usize>,
    /// Fleet distribution: preset name or size:count pairs, e.g. 1:325,3:362
    #[arg(long)]
    fleets: Option<String>,
    /// Earliest start time in seconds since midnight
    #[arg(long)]
    window_start_s: Option<i64>,
    /// End of the start window (exclusive) in seconds since midnight
    #[arg(long)]
    window_end_s: Option<i64>,
    /// Waiting budget as a fraction of route travel time
    #[arg(long)]
    budget_fraction: Option<f64>,
    /// Constant truck speed used to derive travel times
    #[arg(long)]
    speed_kmh: Option<f64>,
    /// Platooning benefit per following truck per hour
    #[arg(long)]
    xi_per_follower_h: Option<f64>,
    /// Fractional fuel reduction of a following truck
    #[arg(long)]
    fuel_saving_fraction: Option<f64>,
    /// Waiting loss per hour
    #[arg(long)]
    epsilon_per_h: Option<f64>,
    /// Master seed for all generation randomness
    #[arg(long)]
    seed: Option<u64>,
    /// Output scenario file
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file produced by `generate`
    scenario: PathBuf,
    /// Coordination scheme: predictive, spontaneous, or single-fleet
    #[arg(long, value_parser = parse_scheme)]
    scheme: SchemeKind,
    /// Output directory
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Scenario file produced by `generate`
    scenario: PathBuf,
    /// Output directory
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Scenario file produced by `generate`
    scenario: PathBuf,
    /// Number of decision instances to benchmark, hardest first
    #[arg(long, default_value_t = 5)]
    samples: usize,
    /// Maximum enumeration combinations before a case is skipped
    #[arg(long, default_value_t = dp::DEFAULT_ENUMERATION_GUARD)]
    guard: u64,
    /// Output CSV file (stdout when omitted)
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> std::result::Result<SchemeKind, String> {
    s.parse::<SchemeKind>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let internal = err
                .downcast_ref::<platoon_core::Error>()
                .is_some_and(|e| e.is_internal());
            ExitCode::from(if internal { 3 } else { 2 })
        }
    }
}

fn parse_fleet_spec(text: &str) -> Result<FleetSpec> {
    if !text.contains(':') {
        return Ok(FleetSpec::Preset(text.to_string()));
    }
    let mut buckets = Vec::new();
    for part in text.split(',') {
        let (size, count) = part
            .split_once(':')
            .with_context(|| format!("bad fleet bucket '{part}', expected size:count"))?;
        buckets.push(FleetBucket {
            trucks_per_fleet: size
                .trim()
                .parse()
                .with_context(|| format!("bad fleet size in '{part}'"))?,
            fleet_count: count
                .trim()
                .parse()
                .with_context(|| format!("bad fleet count in '{part}'"))?,
        });
    }
    Ok(FleetSpec::Buckets(buckets))
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str::<ScenarioConfig>(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(preset) = &args.preset {
        config = match preset.as_str() {
            "sweden" => ScenarioConfig::default(),
            other => anyhow::bail!("unknown preset '{other}' (available: sweden)"),
        };
    }
    if let Some(hubs) = args.hubs {
        config.hub_count = hubs;
    }
    if let Some(trucks) = args.trucks {
        config.truck_count = trucks;
    }
    if let Some(fleets) = &args.fleets {
        config.fleets = parse_fleet_spec(fleets)?;
    }
    if let Some(v) = args.window_start_s {
        config.window_start_s = v;
    }
    if let Some(v) = args.window_end_s {
        config.window_end_s = v;
    }
    if let Some(v) = args.budget_fraction {
        config.waiting_budget_fraction = v;
    }
    if let Some(v) = args.speed_kmh {
        config.speed_kmh = v;
    }
    if let Some(v) = args.xi_per_follower_h {
        config.economics.platoon_benefit_per_hour = v;
    }
    if let Some(v) = args.fuel_saving_fraction {
        config.economics.fuel_saving_fraction = v;
    }
    if let Some(v) = args.epsilon_per_h {
        config.economics.default_waiting_loss_per_hour = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }

    let started = Instant::now();
    let scenario = make_scenario(&config)?;
    write_file(&args.out, &(scenario.to_json() + "\n"))?;

    let fleet_count = scenario.fleet_sizes().len();
    let mean_route_hubs = if scenario.trucks.is_empty() {
        0.0
    } else {
        scenario
            .trucks
            .iter()
            .map(|t| t.route.num_hubs() as f64)
            .sum::<f64>()
            / scenario.trucks.len() as f64
    };
    println!(
        "wrote {}: {} hubs, {} trucks, {} fleets, mean route length {:.2} hubs ({:.2}s)",
        args.out.display(),
        scenario.network.hub_count(),
        scenario.trucks.len(),
        fleet_count,
        mean_route_hubs,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    Ok(Scenario::from_json(&text)?)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_run_outputs(
    dir: &Path,
    suffix: &str,
    output: &platoon_core::sim::SimOutput,
) -> Result<()> {
    write_file(
        &dir.join(format!("metrics{suffix}.json")),
        &(output.metrics.to_json() + "\n"),
    )?;
    write_file(
        &dir.join(format!("platoons{suffix}.csv")),
        &platoons_csv(&output.platoons),
    )?;
    write_file(
        &dir.join(format!("decisions{suffix}.jsonl")),
        &decisions_jsonl(&output.decisions),
    )?;
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let started = Instant::now();
    let output = run_simulation(&scenario, args.scheme)?;
    write_run_outputs(&args.out, "", &output)?;
    println!(
        "{}: total reward {:.2}, {} platoons, fuel saving {:.3}%, {} decisions in {:.2}s \
         (solver mean {:.1} ms, max {:.1} ms)",
        args.scheme,
        output.metrics.total_reward,
        output.metrics.n_platoons,
        output.metrics.fuel_saving_fraction * 100.0,
        output.metrics.n_decisions,
        started.elapsed().as_secs_f64(),
        output.metrics.timing.mean().as_secs_f64() * 1e3,
        output.metrics.timing.max.as_secs_f64() * 1e3,
    );
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let runs = compare_schemes(&scenario)?;
    write_file(&args.out.join("compare.csv"), &comparison_csv(&runs))?;
    for (scheme, output) in &runs {
        write_run_outputs(&args.out, &format!("_{scheme}"), output)?;
    }
    for (scheme, output) in &runs {
        println!(
            "{scheme}: total reward {:.2}, {} platoons, fuel saving {:.3}%",
            output.metrics.total_reward,
            output.metrics.n_platoons,
            output.metrics.fuel_saving_fraction * 100.0,
        );
    }
    Ok(())
}

/// Collects every decision instance of a run together with its solved size.
#[derive(Default)]
struct InstanceCollector {
    instances: Vec<(usize, u32, usize, DpInstance)>, // (n_tilde, truck, stage, instance)
}

impl DecisionObserver for InstanceCollector {
    fn on_decision(&mut self, instance: &DpInstance, event: &DecisionEvent, result: &SolveResult) {
        self.instances.push((
            result.stats.n_tilde,
            event.truck.0,
            event.stage,
            instance.clone(),
        ));
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let mut collector = InstanceCollector::default();
    run_simulation_observed(&scenario, SchemeKind::PredictiveMultiFleet, &mut collector)?;

    // hardest instances first; deterministic tie-break by (truck, stage)
    collector
        .instances
        .sort_by_key(|(n_tilde, truck, stage, _)| (std::cmp::Reverse(*n_tilde), *truck, *stage));
    collector.instances.truncate(args.samples);

    let mut csv = String::from("case,n_tilde,N_i,enum_seconds,dp_seconds,values_equal\n");
    for (case, (_, _, _, instance)) in collector.instances.iter().enumerate() {
        let dp_result = dp::solve(instance)?;
        let dp_seconds = dp_result.stats.wall_time.as_secs_f64();
        let n_hubs = instance.num_stages() + 1;
        let row = match dp::brute_force_solve_with_guard(instance, args.guard) {
            Ok(enum_result) => {
                let equal = (enum_result.value - dp_result.value).abs() <= 1e-9
                    && enum_result.waits == dp_result.waits;
                format!(
                    "{},{},{},{:.6},{:.6},{}\n",
                    case + 1,
                    dp_result.stats.n_tilde,
                    n_hubs,
                    enum_result.stats.wall_time.as_secs_f64(),
                    dp_seconds,
                    equal
                )
            }
            Err(platoon_core::Error::ResourceLimit(_)) => format!(
                "{},{},{},skipped,{:.6},skipped\n",
                case + 1,
                dp_result.stats.n_tilde,
                n_hubs,
                dp_seconds
            ),
            Err(e) => return Err(e.into()),
        };
        csv.push_str(&row);
    }

    match &args.out {
        Some(path) => {
            write_file(path, &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}
