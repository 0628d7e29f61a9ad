//! Batch runner for the soft-manipulator rod simulator.
//!
//! Subcommands mirror the scenario engine: `static-sweep`, `dynamic`,
//! `benchmark`, `convergence` and `rpe-fit`. Every subcommand accepts
//! `--config` (TOML scenario file, built-in defaults when omitted), `--out`
//! (output directory) and targeted overrides.
//!
//! Exit codes: 0 success, 2 config error, 3 solver non-convergence,
//! 4 instability detected in a non-benchmark run.

use clap::{Args, Parser, Subcommand, ValueEnum};
use softrod::config::{
    load_config, save_config, InitialState, MaterialKind, RpeModeConfig, ScenarioConfig,
    SchemeConfig, SignalConfig, SpatialConfig,
};
use softrod::scenario::{
    benchmark_methods, export_benchmark, export_convergence, export_rpe_fit, export_sweep,
    export_trajectory, run_convergence_study, run_dynamic, run_rpe_fit, run_static_sweep,
    ActuationCase, ScenarioError, SweepSpec,
};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_UNSTABLE: u8 = 4;

#[derive(Parser)]
#[command(name = "softrod", version, about = "Soft pneumatic continuum manipulator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Static solves over a pressure range, exporting backbone and TCP.
    StaticSweep(SweepArgs),
    /// Time-marched run of the configured actuation program.
    Dynamic(CommonArgs),
    /// Full spatial-method x time-scheme comparison table.
    Benchmark(CommonArgs),
    /// Spatial and temporal convergence-order studies.
    Convergence(CommonArgs),
    /// Tube equilibrium solves over a pressure range and the linear RPE fit.
    RpeFit(RpeFitArgs),
    /// Write the built-in default configuration to a file.
    WriteConfig(WriteConfigArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    A,
    B,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Bdf1,
    Bdf2,
    Bdf3,
    BdfAlpha,
    Trapezoidal,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpatialArg {
    Euler,
    Rk4,
}

#[derive(Clone, Copy, ValueEnum)]
enum RpeModeArg {
    EquivalentForce,
    StrainTransfer,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaterialArg {
    Homogeneous,
    Inhomogeneous,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitialArg {
    Rest,
    Static,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file (TOML); defaults are built in.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Drive actuator 1 (a), actuators 2+3 (b), or all three.
    #[arg(long, value_enum)]
    case: Option<CaseArg>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Parameter of the one-parameter scheme family, in [-0.5, 0].
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    spatial: Option<SpatialArg>,
    /// Number of arclength grid nodes.
    #[arg(long)]
    nodes: Option<usize>,
    /// Time step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated timeframe (s).
    #[arg(long)]
    timeframe: Option<f64>,
    #[arg(long, value_enum)]
    rpe_mode: Option<RpeModeArg>,
    #[arg(long, value_enum)]
    material: Option<MaterialArg>,
    #[arg(long, value_enum)]
    initial_state: Option<InitialArg>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 0.15)]
    start_bar: f64,
    #[arg(long, default_value_t = 0.65)]
    end_bar: f64,
    #[arg(long, default_value_t = 0.05)]
    step_bar: f64,
}

#[derive(Args)]
struct RpeFitArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 0.15)]
    start_bar: f64,
    #[arg(long, default_value_t = 0.65)]
    end_bar: f64,
    #[arg(long, default_value_t = 0.05)]
    step_bar: f64,
}

#[derive(Args)]
struct WriteConfigArgs {
    /// Destination path for the TOML config.
    #[arg(long, default_value = "scenario.toml")]
    path: PathBuf,
}

fn load(args: &CommonArgs) -> Result<ScenarioConfig, String> {
    let mut config = match &args.config {
        None => ScenarioConfig::default(),
        Some(path) => load_config(path).map_err(|e| e.to_string())?,
    };
    if let Some(case) = args.case {
        let mask = case_of(case).mask();
        for (i, signal) in config.actuation.signals.iter_mut().enumerate() {
            *signal = if mask[i] {
                SignalConfig::default_sinusoid()
            } else {
                SignalConfig::zero()
            };
        }
    }
    if let Some(s) = args.scheme {
        config.discretization.scheme = match s {
            SchemeArg::Bdf1 => SchemeConfig::Bdf1,
            SchemeArg::Bdf2 => SchemeConfig::Bdf2,
            SchemeArg::Bdf3 => SchemeConfig::Bdf3,
            SchemeArg::BdfAlpha => SchemeConfig::BdfAlpha,
            SchemeArg::Trapezoidal => SchemeConfig::Trapezoidal,
        };
    }
    if let Some(alpha) = args.alpha {
        config.discretization.alpha = alpha;
    }
    if let Some(sp) = args.spatial {
        config.discretization.spatial = match sp {
            SpatialArg::Euler => SpatialConfig::Euler,
            SpatialArg::Rk4 => SpatialConfig::Rk4,
        };
    }
    if let Some(n) = args.nodes {
        config.discretization.nodes = n;
    }
    if let Some(dt) = args.dt {
        config.discretization.dt_s = dt;
    }
    if let Some(tf) = args.timeframe {
        config.discretization.timeframe_s = tf;
    }
    if let Some(mode) = args.rpe_mode {
        config.rpe.mode = match mode {
            RpeModeArg::EquivalentForce => RpeModeConfig::EquivalentForce,
            RpeModeArg::StrainTransfer => RpeModeConfig::StrainTransfer,
            RpeModeArg::Off => RpeModeConfig::Off,
        };
    }
    if let Some(mat) = args.material {
        config.material.law = match mat {
            MaterialArg::Homogeneous => MaterialKind::Homogeneous,
            MaterialArg::Inhomogeneous => MaterialKind::Inhomogeneous,
        };
    }
    if let Some(init) = args.initial_state {
        config.discretization.initial_state = match init {
            InitialArg::Rest => InitialState::Rest,
            InitialArg::Static => InitialState::Static,
        };
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn case_of(arg: CaseArg) -> ActuationCase {
    match arg {
        CaseArg::A => ActuationCase::A,
        CaseArg::B => ActuationCase::B,
        CaseArg::All => ActuationCase::All,
    }
}

fn scenario_exit(err: &ScenarioError) -> u8 {
    match err {
        ScenarioError::Config(_) => EXIT_CONFIG,
        ScenarioError::Shooting(_) | ScenarioError::Actuator(_) => EXIT_NO_CONVERGENCE,
        ScenarioError::Io(_) => EXIT_NO_CONVERGENCE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::StaticSweep(args) => run_sweep(args),
        Command::Dynamic(args) => run_dynamic_cmd(args),
        Command::Benchmark(args) => run_benchmark_cmd(args),
        Command::Convergence(args) => run_convergence_cmd(args),
        Command::RpeFit(args) => run_rpe_fit_cmd(args),
        Command::WriteConfig(args) => write_config_cmd(args),
    };
    ExitCode::from(code)
}

fn run_sweep(args: SweepArgs) -> u8 {
    let config = match load(&args.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let spec = SweepSpec {
        start_bar: args.start_bar,
        end_bar: args.end_bar,
        step_bar: args.step_bar,
        case: args.common.case.map(case_of).unwrap_or(ActuationCase::A),
    };
    match run_static_sweep(&config, &spec) {
        Ok(result) => {
            let failed: Vec<f64> = result
                .levels
                .iter()
                .filter(|l| l.outcome.is_err())
                .map(|l| l.pressure_bar)
                .collect();
            for level in &result.levels {
                match &level.outcome {
                    Ok(frame) => {
                        let tip = frame.tip();
                        println!(
                            "P = {:.2} bar: tip = ({:+.5}, {:+.5}, {:+.5}) m, {} iterations",
                            level.pressure_bar,
                            tip.position.x,
                            tip.position.y,
                            tip.position.z,
                            frame.iterations
                        );
                    }
                    Err(e) => println!("P = {:.2} bar: failed: {e}", level.pressure_bar),
                }
            }
            if let Err(e) = export_sweep(&result, &args.common.out) {
                eprintln!("export failed: {e}");
                return EXIT_NO_CONVERGENCE;
            }
            if failed.is_empty() {
                0
            } else {
                eprintln!("{} level(s) did not converge: {failed:?}", failed.len());
                EXIT_NO_CONVERGENCE
            }
        }
        Err(e) => {
            eprintln!("sweep failed: {e}");
            scenario_exit(&e)
        }
    }
}

fn run_dynamic_cmd(args: CommonArgs) -> u8 {
    let config = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run_dynamic(&config) {
        Ok(run) => {
            if let Err(e) = std::fs::create_dir_all(&args.out) {
                eprintln!("cannot create output dir: {e}");
                return EXIT_NO_CONVERGENCE;
            }
            let path = args.out.join("trajectory.csv");
            if let Err(e) = export_trajectory(&run.record, &path) {
                eprintln!("export failed: {e}");
                return EXIT_NO_CONVERGENCE;
            }
            println!(
                "wrote {} frames to {}",
                run.record.frames.len(),
                path.display()
            );
            match run.instability {
                None => 0,
                Some(inst) => {
                    eprintln!("instability at step {}: {}", inst.step, inst.reason);
                    EXIT_UNSTABLE
                }
            }
        }
        Err(e) => {
            eprintln!("dynamic run failed: {e}");
            scenario_exit(&e)
        }
    }
}

fn run_benchmark_cmd(args: CommonArgs) -> u8 {
    let config = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    match benchmark_methods(&config, Some(&args.out)) {
        Ok(report) => {
            print!("{}", report.render_text());
            if report.reference_from_cache {
                println!("(reference loaded from cache)");
            }
            if let Err(e) = export_benchmark(&report, &args.out) {
                eprintln!("export failed: {e}");
                return EXIT_NO_CONVERGENCE;
            }
            0
        }
        Err(e) => {
            eprintln!("benchmark failed: {e}");
            scenario_exit(&e)
        }
    }
}

fn run_convergence_cmd(args: CommonArgs) -> u8 {
    let config = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run_convergence_study(&config) {
        Ok(report) => {
            print!("{}", report.render_text());
            if let Err(e) = export_convergence(&report, &args.out) {
                eprintln!("export failed: {e}");
                return EXIT_NO_CONVERGENCE;
            }
            0
        }
        Err(e) => {
            eprintln!("convergence study failed: {e}");
            scenario_exit(&e)
        }
    }
}

fn run_rpe_fit_cmd(args: RpeFitArgs) -> u8 {
    let config = match load(&args.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run_rpe_fit(&config, args.start_bar, args.end_bar, args.step_bar) {
        Ok(report) => {
            print!("{}", report.render_text());
            if let Err(e) = export_rpe_fit(&report, &args.common.out) {
                eprintln!("export failed: {e}");
                return EXIT_NO_CONVERGENCE;
            }
            0
        }
        Err(e) => {
            eprintln!("rpe fit failed: {e}");
            scenario_exit(&e)
        }
    }
}

fn write_config_cmd(args: WriteConfigArgs) -> u8 {
    match save_config(&ScenarioConfig::default(), &args.path) {
        Ok(()) => {
            println!("wrote {}", args.path.display());
            0
        }
        Err(e) => {
            eprintln!("cannot write config: {e}");
            EXIT_CONFIG
        }
    }
}
