//! Command-line interface.
//!
//! Exit codes: 0 success, 2 invalid input (arguments, configuration,
//! genotype), 3 resource limit, 4 I/O, 5 internal error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use attentive_core::design::{build_ctmc, build_reward_structures, design_space_size};
use attentive_core::mape::interpret_trajectory;
use attentive_core::pareto::dominated_pairs;
use attentive_core::sim::simulate;
use attentive_core::synthesis::{evaluate, exhaustive_pareto_with, nsga2_with, reference_point, ProgressRecord};
use attentive_core::{ControllerGenotype, GaSettings, ParetoFront, ProblemSpec, SolverSettings};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{load_config, LoadedConfig, SECONDS_PER_HOUR};
use crate::error::AppError;
use crate::formats;
use crate::manifest::{OutputDir, RunManifest, MANIFEST_FILE};
use crate::parallel::{estimate_rewards, thread_pool, ParallelEvaluator};

pub const FRONT_FILE: &str = "front.csv";
pub const PROGRESS_FILE: &str = "progress.csv";
pub const PLOT_FILE: &str = "plot_front.py";
pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const MAPE_LOG_FILE: &str = "mape_log.txt";
pub const MAPE_EVENTS_FILE: &str = "mape_events.csv";

pub const DEFAULT_ENUMERATION_LIMIT: u64 = 65_536;

#[derive(Debug, Parser)]
#[command(name = "attentive", version, about = "Pareto-optimal driver-attentiveness controller synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a configuration and report model sizes.
    Validate {
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the three objectives of one controller.
    Check {
        config: PathBuf,
        /// Hyphen-joined option integers.
        #[arg(long)]
        genotype: String,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        json: bool,
    },
    /// Approximate the Pareto front with NSGA-II.
    Synthesize {
        config: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        ga: GaArgs,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Compute the exact Pareto front by evaluating every controller.
    Enumerate {
        config: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Largest design space that will be enumerated.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
        limit: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Monte Carlo estimates of the objectives of one controller.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        genotype: String,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Directory for estimates, manifest and logs.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write the MAPE event log of the first trajectory.
        #[arg(long, requires = "output")]
        log: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Solver truncation error (overrides the configuration).
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Time horizon in hours (overrides the configuration).
    #[arg(long)]
    pub horizon_hours: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct GaArgs {
    #[arg(long, default_value_t = 100)]
    pub population: usize,
    #[arg(long, default_value_t = 200)]
    pub generations: usize,
    #[arg(long, default_value_t = 0.9)]
    pub crossover: f64,
    /// Per-gene mutation probability; defaults to 1/genotype length.
    #[arg(long)]
    pub mutation: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub tournament: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl GaArgs {
    pub fn settings(&self) -> GaSettings {
        GaSettings {
            population_size: self.population,
            generations: self.generations,
            crossover_probability: self.crossover,
            mutation_probability_per_gene: self.mutation,
            tournament_size: self.tournament,
            seed: self.seed,
        }
    }
}

struct Model {
    path: PathBuf,
    config: LoadedConfig,
    spec: ProblemSpec,
    solver: SolverSettings,
}

fn load_model(path: &Path, args: &ModelArgs) -> Result<Model, AppError> {
    let config = load_config(path)?;
    let mut spec = config.spec.clone();
    let mut solver = config.solver;
    if let Some(h) = args.horizon_hours {
        if !(h.is_finite() && h > 0.0) {
            return Err(AppError::Invalid(vec![format!("--horizon-hours: must be finite and > 0, got {h}")]));
        }
        spec.horizon_t = h * SECONDS_PER_HOUR;
    }
    if let Some(eps) = args.tolerance {
        solver.epsilon = eps;
        solver
            .check()
            .map_err(|e| AppError::Invalid(vec![format!("--tolerance: {e}")]))?;
    }
    spec.checked()?;
    Ok(Model {
        path: path.to_path_buf(),
        config,
        spec,
        solver,
    })
}

fn parse_genotype(spec: &ProblemSpec, text: &str) -> Result<ControllerGenotype, AppError> {
    let expect = format!(
        "expected {} integers each in [0, {})",
        spec.genotype_len(),
        spec.option_count()
    );
    let g: ControllerGenotype = text
        .parse()
        .map_err(|e: attentive_core::Error| AppError::Invalid(vec![format!("--genotype: {e}, {expect}")]))?;
    g.check(spec)
        .map_err(|e| AppError::Invalid(vec![format!("--genotype: {e}")]))?;
    Ok(g)
}

fn model_settings(m: &Model) -> serde_json::Value {
    json!({
        "horizon_seconds": m.spec.horizon_t,
        "solver_epsilon": m.solver.epsilon,
        "solver_max_iterations": m.solver.max_iterations,
    })
}

fn manifest(command: &str, argv: &[String], m: &Model, settings: serde_json::Value, seed: Option<u64>, started: Instant, outputs: Vec<String>) -> RunManifest {
    RunManifest {
        command: command.to_string(),
        arguments: argv.to_vec(),
        config_path: m.path.display().to_string(),
        config_sha256: m.config.sha256.clone(),
        settings,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs,
    }
}

/// Errors if any row of `front` dominates another.
pub fn audit_front(front: &ParetoFront) -> Result<(), AppError> {
    match dominated_pairs(&front.objectives()) {
        0 => Ok(()),
        n => Err(AppError::Internal(format!("front has {n} dominated pairs"))),
    }
}

fn w(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), AppError> {
    out.write_fmt(text).map_err(|e| AppError::io("<stdout>", e))
}

/// Parses `args` (program name first) and runs the command, writing reports
/// to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), AppError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            return w(out, format_args!("{e}"));
        }
        Err(e) => return Err(AppError::Usage(e.to_string())),
    };
    execute(cli.command, &argv, out)
}

pub fn execute(command: Command, argv: &[String], out: &mut dyn Write) -> Result<(), AppError> {
    let started = Instant::now();
    match command {
        Command::Validate { config, json } => {
            let c = load_config(&config)?;
            let s = &c.spec;
            let size = design_space_size(s);
            if json {
                let v = json!({
                    "valid": true,
                    "n": s.n, "m": s.m, "q": s.q,
                    "states": s.num_states(),
                    "option_parameters": s.genotype_len(),
                    "options_per_parameter": s.option_count(),
                    "design_space_size": size.to_string(),
                    "horizon_seconds": s.horizon_t,
                    "mrm_enabled": s.mrm_enabled,
                    "config_sha256": c.sha256,
                });
                w(out, format_args!("{}\n", serde_json::to_string_pretty(&v).expect("json")))?;
            } else {
                w(out, format_args!("{}: valid\n", config.display()))?;
                w(out, format_args!(
                    "tables: nuisance {} entries, progress {}, risk {}x{}, driver rates {} level pairs x {} alert settings x {} speeds\n",
                    s.nuisance.len(), s.progress.len(), s.n, s.q, s.n * (s.n - 1), s.alert_combinations(), s.q
                ))?;
                w(out, format_args!("{} options per parameter, horizon {} s, MRM {}\n",
                    s.option_count(), s.horizon_t, if s.mrm_enabled { "enabled" } else { "disabled" }))?;
                w(out, format_args!("{} states, {} option parameters, design space {}\n",
                    s.num_states(), s.genotype_len(), size))?;
            }
            Ok(())
        }
        Command::Check { config, genotype, model, json } => {
            let m = load_model(&config, &model)?;
            let g = parse_genotype(&m.spec, &genotype)?;
            let o = evaluate(&m.spec, &g, &m.solver)?;
            if json {
                let v = json!({
                    "genotype": g.to_string(),
                    "nuisance": o.nuisance,
                    "progress": o.progress,
                    "risk": o.risk,
                    "tolerance": m.solver.epsilon,
                    "horizon_seconds": m.spec.horizon_t,
                });
                w(out, format_args!("{}\n", serde_json::to_string_pretty(&v).expect("json")))?;
            } else {
                w(out, format_args!("genotype  {g}\nnuisance  {}\nprogress  {}\nrisk      {}\ntolerance {}\n",
                    o.nuisance, o.progress, o.risk, m.solver.epsilon))?;
            }
            Ok(())
        }
        Command::Synthesize { config, model, ga, workers, output } => {
            let m = load_model(&config, &model)?;
            let settings = ga.settings();
            settings.check()?;
            let pool = thread_pool(workers)?;
            let mut evaluator = ParallelEvaluator::new(&m.spec, m.solver, &pool)?;
            let reference = reference_point(&m.spec);
            let mut last: Option<ProgressRecord> = None;
            let outcome = nsga2_with(&m.spec, &settings, &mut evaluator, &reference, &mut |r| {
                last = Some(r.clone());
            })?;
            audit_front(&outcome.front)?;
            let mut dir = OutputDir::create(&output)?;
            dir.write(FRONT_FILE, &formats::front_csv("nsga2", &outcome.front)?)?;
            dir.write(PROGRESS_FILE, &formats::progress_csv(&outcome.progress)?)?;
            dir.write(PLOT_FILE, formats::plot_script(FRONT_FILE).as_bytes())?;
            let mut settings_json = model_settings(&m);
            settings_json["population_size"] = json!(settings.population_size);
            settings_json["generations"] = json!(settings.generations);
            settings_json["crossover_probability"] = json!(settings.crossover_probability);
            settings_json["mutation_probability_per_gene"] = json!(settings.mutation_rate(m.spec.genotype_len()));
            settings_json["tournament_size"] = json!(settings.tournament_size);
            settings_json["workers"] = json!(workers);
            let mut outputs = dir.names();
            outputs.push(MANIFEST_FILE.to_string());
            let man = manifest("synthesize", argv, &m, settings_json, Some(settings.seed), started, outputs);
            dir.write(MANIFEST_FILE, &man.to_json())?;
            let hv = last.map_or(0.0, |r| r.hypervolume);
            w(out, format_args!(
                "{} controllers ({} distinct objective vectors), {} evaluations, hypervolume {}, {:.2} s\nwrote {}\n",
                outcome.front.entries.len(), outcome.front.objective_set().len(),
                outcome.front.metadata.evaluations, hv, man.wall_clock_seconds, dir.path().display()
            ))?;
            dir.commit();
            Ok(())
        }
        Command::Enumerate { config, model, limit, workers, output } => {
            let m = load_model(&config, &model)?;
            let pool = thread_pool(workers)?;
            let mut evaluator = ParallelEvaluator::new(&m.spec, m.solver, &pool)?;
            let front = exhaustive_pareto_with(&m.spec, &mut evaluator, limit)?;
            audit_front(&front)?;
            let mut dir = OutputDir::create(&output)?;
            dir.write(FRONT_FILE, &formats::front_csv("exhaustive", &front)?)?;
            dir.write(PLOT_FILE, formats::plot_script(FRONT_FILE).as_bytes())?;
            let mut settings_json = model_settings(&m);
            settings_json["limit"] = json!(limit);
            settings_json["workers"] = json!(workers);
            let mut outputs = dir.names();
            outputs.push(MANIFEST_FILE.to_string());
            let man = manifest("enumerate", argv, &m, settings_json, None, started, outputs);
            dir.write(MANIFEST_FILE, &man.to_json())?;
            let hv = front.hypervolume(&reference_point(&m.spec))?;
            w(out, format_args!(
                "{} controllers ({} distinct objective vectors), {} evaluations, hypervolume {}, {:.2} s\nwrote {}\n",
                front.entries.len(), front.objective_set().len(), front.metadata.evaluations, hv,
                man.wall_clock_seconds, dir.path().display()
            ))?;
            dir.commit();
            Ok(())
        }
        Command::Simulate { config, genotype, model, runs, seed, workers, output, log, json } => {
            let m = load_model(&config, &model)?;
            let g = parse_genotype(&m.spec, &genotype)?;
            let ctmc = build_ctmc(&m.spec, &g)?;
            let r = build_reward_structures(&m.spec)?;
            let rewards = [r.nuisance, r.progress, r.risk];
            let names = ["nuisance", "progress", "risk"];
            let pool = thread_pool(workers)?;
            let estimates = estimate_rewards(&pool, &ctmc, &rewards, m.spec.horizon_t, runs, seed)?;
            if json {
                let rows: Vec<_> = names.iter().zip(&estimates).map(|(n, e)| json!({
                    "reward": n,
                    "mean": e.mean,
                    "std_error": e.std_error,
                    "ci99_half_width": e.confidence_99_half_width,
                    "runs": e.runs,
                })).collect();
                let v = json!({ "genotype": g.to_string(), "seed": seed, "estimates": rows });
                w(out, format_args!("{}\n", serde_json::to_string_pretty(&v).expect("json")))?;
            } else {
                w(out, format_args!("genotype {g}, {runs} runs, seed {seed}, 99% normal-approximation intervals\n"))?;
                for (n, e) in names.iter().zip(&estimates) {
                    w(out, format_args!("{n:<9} {} +/- {} (std error {})\n", e.mean, e.confidence_99_half_width, e.std_error))?;
                }
            }
            if let Some(output) = output {
                let mut dir = OutputDir::create(&output)?;
                dir.write(ESTIMATES_FILE, &formats::estimates_csv(&names, &estimates)?)?;
                if log {
                    let traj = simulate(&ctmc, m.spec.horizon_t, seed)?;
                    let events = interpret_trajectory(&m.spec, &traj)?;
                    let header = format!(
                        "MAPE log, genotype {g}, seed {seed}, horizon {} s, {} events",
                        m.spec.horizon_t,
                        events.len()
                    );
                    dir.write(MAPE_LOG_FILE, formats::mape_log_text(&header, &events).as_bytes())?;
                    dir.write(MAPE_EVENTS_FILE, &formats::mape_log_csv(&events)?)?;
                }
                let mut settings_json = model_settings(&m);
                settings_json["genotype"] = json!(g.to_string());
                settings_json["runs"] = json!(runs);
                settings_json["workers"] = json!(workers);
                let mut outputs = dir.names();
                outputs.push(MANIFEST_FILE.to_string());
                let man = manifest("simulate", argv, &m, settings_json, Some(seed), started, outputs);
                dir.write(MANIFEST_FILE, &man.to_json())?;
                dir.commit();
            }
            Ok(())
        }
    }
}
