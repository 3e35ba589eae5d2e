//! `run`: the adaptive engine over a set of instances.

use std::path::{Path, PathBuf};

use log::{error, info};
use mosaic_qaoa_core::engine::{run_gamma_grid, EngineConfig, Strategy, GAMMA_GRID};
use mosaic_qaoa_core::metrics::EvalReport;
use mosaic_qaoa_core::sat::max_sat_opt;
use mosaic_qaoa_core::sim::build_cost_diag_capped;
use rayon::prelude::*;
use serde::Serialize;

use crate::cli::RunArgs;
use crate::files::{file_stem, list_files, read_dimacs, write_json};
use crate::records::RunRecord;
use crate::{
    config_digest, derive_seed, fatal, simulator_cap_override, unix_time, Failure, Outcome, SystemClock,
    TOOL_VERSION,
};

/// Everything that determines the run outputs. Its digest is embedded in
/// every record.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub strategies: Vec<Strategy>,
    pub gamma_grid: Vec<f64>,
    pub shots: u64,
    pub seed: u64,
    pub engine: EngineConfig,
}

#[derive(Debug, Serialize)]
struct MetricsRow<'a> {
    formula_id: &'a str,
    strategy: Strategy,
    gamma0: f64,
    ar: f64,
    layers: usize,
    params: usize,
    stuck: bool,
    stop_reason: &'a str,
    wall_time: Option<f64>,
    ar_best_shot: f64,
    layers_to_999: Option<usize>,
    config_digest: &'a str,
    tool_version: &'a str,
}

#[derive(Debug, Serialize)]
struct Timing {
    run: String,
    wall_time: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    config_digest: &'a str,
    config: &'a RunConfig,
    created_unix: u64,
    jobs: usize,
    runs: Vec<String>,
    timings: Vec<Timing>,
    failures: Vec<String>,
}

pub fn parse_strategies(text: &str) -> Result<Vec<Strategy>, Failure> {
    if text == "all" {
        return Ok(Strategy::ALL.to_vec());
    }
    text.parse::<Strategy>()
        .map(|s| vec![s])
        .map_err(|e| Failure::Config(e.to_string()))
}

pub fn parse_gammas(text: &str) -> Result<Vec<f64>, Failure> {
    if text == "grid" {
        return Ok(GAMMA_GRID.to_vec());
    }
    let gammas = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Config(format!("--gamma0 {text:?}: {e}")))?;
    if gammas.is_empty() || gammas.iter().any(|g| !g.is_finite()) {
        return Err(Failure::Config(format!("--gamma0 {text:?} needs finite angles")));
    }
    Ok(gammas)
}

pub fn resolve(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut engine = EngineConfig {
        layer_stopper_max: args.max_layers,
        compare_selectors: args.compare_selectors,
        ..EngineConfig::default()
    };
    if let Some(cap) = simulator_cap_override()? {
        engine.simulator_cap = cap;
    }
    let gamma_grid = parse_gammas(&args.gamma0)?;
    engine.gamma0 = gamma_grid[0];
    engine.validate().map_err(|e| Failure::Config(e.to_string()))?;
    if args.shots == 0 {
        return Err(Failure::Config("--shots must be positive".into()));
    }
    Ok(RunConfig {
        strategies: parse_strategies(&args.strategy)?,
        gamma_grid,
        shots: args.shots,
        seed: args.seed,
        engine,
    })
}

fn run_one(path: &Path, strategy: Strategy, cfg: &RunConfig, digest: &str) -> Result<(RunRecord, f64), String> {
    let formula_id = file_stem(path);
    let f = read_dimacs(path).map_err(|e| e.to_string())?;
    let seed = derive_seed(cfg.seed, &formula_id);
    let engine = EngineConfig {
        strategy,
        seed,
        ..cfg.engine.clone()
    };
    let opt = max_sat_opt(&f).map_err(|e| format!("{formula_id}: {e}"))?.opt;
    let diag = build_cost_diag_capped(&f, engine.simulator_cap).map_err(|e| format!("{formula_id}: {e}"))?;
    let clock = SystemClock::default();
    let (gamma0, result) =
        run_gamma_grid(&f, &engine, &cfg.gamma_grid, &clock).map_err(|e| format!("{formula_id}/{strategy}: {e}"))?;
    let report = EvalReport::for_run(&result, &diag, opt, cfg.shots, seed);
    let record = RunRecord::new(&formula_id, &f, opt, &cfg.gamma_grid, gamma0, &result, report, seed, &engine, digest);
    Ok((record, result.wall_time))
}

pub fn execute(args: &RunArgs) -> Outcome {
    let cfg = resolve(args)?;
    let digest = config_digest(&cfg);
    let inputs = list_files(&args.input, "cnf")?;
    if inputs.is_empty() {
        return Err(fatal(format!("no .cnf instances under {}", args.input.display())));
    }
    let work: Vec<(PathBuf, Strategy)> = inputs
        .iter()
        .flat_map(|p| cfg.strategies.iter().map(move |&s| (p.clone(), s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(fatal)?;
    let results: Vec<Result<(RunRecord, f64), String>> =
        pool.install(|| work.par_iter().map(|(p, s)| run_one(p, *s, &cfg, &digest)).collect());

    let runs_dir = args.out.join("runs");
    let mut csv = csv::Writer::from_writer(Vec::new());
    let mut runs = Vec::new();
    let mut timings = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok((record, wall)) => {
                let name = RunRecord::file_name(&record.formula_id, record.strategy, &record.gamma_grid);
                write_json(&runs_dir.join(&name), &record)?;
                info!(
                    "{name}: ar={:.4} layers={} stop={}",
                    record.report.ar_expectation,
                    record.circuit.depth(),
                    record.stop_reason
                );
                csv.serialize(MetricsRow {
                    formula_id: &record.formula_id,
                    strategy: record.strategy,
                    gamma0: record.gamma0,
                    ar: record.report.ar_expectation,
                    layers: record.circuit.depth(),
                    params: record.report.parameter_count,
                    stuck: record.report.stuck,
                    stop_reason: record.stop_reason.as_str(),
                    wall_time: args.record_wall_time.then_some(wall),
                    ar_best_shot: record.report.ar_best_shot,
                    layers_to_999: record.report.layers_to_999,
                    config_digest: &digest,
                    tool_version: TOOL_VERSION,
                })
                .map_err(fatal)?;
                timings.push(Timing {
                    run: name.clone(),
                    wall_time: wall,
                });
                runs.push(name);
            }
            Err(msg) => {
                error!("{msg}");
                failures.push(msg);
            }
        }
    }
    let body = csv.into_inner().map_err(fatal)?;
    crate::files::write_text(&args.out.join("metrics.csv"), &String::from_utf8(body).map_err(fatal)?)?;
    let failed = failures.len();
    write_json(
        &args.out.join("manifest.json"),
        &Manifest {
            tool_version: TOOL_VERSION,
            config_digest: &digest,
            config: &cfg,
            created_unix: unix_time(),
            jobs: args.jobs,
            runs,
            timings,
            failures,
        },
    )?;
    Ok(failed)
}
