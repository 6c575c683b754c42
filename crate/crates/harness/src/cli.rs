use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cablebot_core::gfs;
use cablebot_core::mlp::MlpParams;
use cablebot_core::qlearn::{self, chain, Discretizer};
use cablebot_core::sim::{Scenario, Vec2, WorldConfig};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{RunConfig, WorldPreset};
use crate::error::{HarnessError, Result};
use crate::io;
use crate::model::ModelFile;
use crate::plot;
use crate::report::{self, CsvDoc, EvalRow, EvalSummary};
use crate::scenarios::{self, Role, ScenarioSet};

#[derive(Debug, Parser)]
#[command(name = "cablebot", version, about = "Train and evaluate decentralized controllers for cable-coupled robots")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Run configuration (JSON). Defaults to the bundled preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for scenario generation and every trainer.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replace the world section with a bundled preset.
    #[arg(long, global = true, value_enum)]
    pub world_preset: Option<WorldPreset>,
    /// Number of robots; also selects the matching suite sizes.
    #[arg(long, global = true)]
    pub robots: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample target suites uniformly over a disc.
    GenScenarios {
        /// One suite only; without it all three are written into --out as a directory.
        #[arg(long, value_enum)]
        role: Option<Role>,
        #[arg(long)]
        count: Option<usize>,
        /// Target radius limit in meters (default: fraction from the config).
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tune fuzzy controllers with the genetic algorithm.
    TrainGfs {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-generation CSV (default: next to the model).
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Q-learn one table per robot, then distill each into a network.
    TrainQ {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Store the raw Q-table rows in the model file.
        #[arg(long)]
        dump_qtable: bool,
        /// Check the learner on the chain fixture before training.
        #[arg(long)]
        self_test: bool,
    },
    /// Run a model over a scenario suite.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Aggregate JSON (default: next to the CSV).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Record one episode as CSV and optionally SVG.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        /// Target as X,Y in meters.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_target)]
        target: Vec2,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Evaluate two models on one suite, side by side.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

fn parse_target(s: &str) -> std::result::Result<Vec2, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected X,Y, got {s:?}"));
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| format!("bad x: {e}"))?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| format!("bad y: {e}"))?;
    Ok(Vec2::new(x, y))
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

impl Global {
    fn explicit(&self) -> bool {
        self.config.is_some() || self.world_preset.is_some() || self.robots.is_some()
    }

    /// Config file (or default preset), then preset world, robot count and seed.
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::preset(self.world_preset.unwrap_or(WorldPreset::Default)),
        };
        if let (Some(_), Some(preset)) = (&self.config, self.world_preset) {
            let n = cfg.world.n_robots;
            cfg.world = RunConfig::preset(preset).world;
            cfg.world.n_robots = n;
        }
        if let Some(n) = self.robots {
            cfg = cfg.with_robots(n);
        }
        if let Some(s) = self.seed {
            cfg = cfg.with_seed(s);
        }
        cfg.finalize()
    }

    /// World to run a saved model in: the model's own unless a config,
    /// preset or robot count was given on the command line.
    fn world_for(&self, model: &ModelFile) -> Result<WorldConfig> {
        if self.explicit() {
            Ok(self.resolve()?.world)
        } else {
            Ok(model.header.config.world.clone())
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn provenance(doc: &mut CsvDoc, cfg: &RunConfig) {
    doc.comment("config_fingerprint", cfg.fingerprint())
        .comment("world_fingerprint", cfg.world_fingerprint())
        .comment("seed", cfg.seed);
}

fn load_suite(path: &Path, world: &WorldConfig) -> Result<(ScenarioSet, String)> {
    let bytes = io::read_bytes(path)?;
    let set = ScenarioSet::load(path, world)?;
    Ok((set, io::short_hash(&bytes)))
}

fn load_model(path: &Path) -> Result<(ModelFile, String)> {
    let bytes = io::read_bytes(path)?;
    Ok((ModelFile::parse(&bytes, path)?, io::short_hash(&bytes)))
}

pub fn execute(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::GenScenarios { role, count, r_max, out } => {
            let cfg = g.resolve()?;
            gen_scenarios_cmd(&cfg, role, count, r_max, &out)
        }
        Command::TrainGfs { train, val, out, history } => {
            let cfg = g.resolve()?;
            let history = history.unwrap_or_else(|| sibling(&out, "history.csv"));
            train_gfs_cmd(&cfg, &train, &val, &out, &history)
        }
        Command::TrainQ { train, out, dump_qtable, self_test } => {
            if self_test {
                let (learned, oracle) = chain::self_test();
                if learned != oracle {
                    println!("chain self-test: FAIL (learned {learned:?}, oracle {oracle:?})");
                    return Err(HarnessError::Internal("q-learning self-test failed".into()));
                }
                println!("chain self-test: PASS");
            }
            let cfg = g.resolve()?;
            train_q_cmd(&cfg, &train, &out, dump_qtable)
        }
        Command::Eval { model, scenarios, out, summary } => {
            let (m, model_hash) = load_model(&model)?;
            let world = g.world_for(&m)?;
            let summary = summary.unwrap_or_else(|| sibling(&out, "summary.json"));
            eval_cmd(&m, &model_hash, &world, &scenarios, &out, &summary)
        }
        Command::Simulate { model, target, out, svg } => {
            let (m, model_hash) = load_model(&model)?;
            let world = g.world_for(&m)?;
            simulate_cmd(&m, &model_hash, &world, target, &out, svg.as_deref())
        }
        Command::Compare { a, b, scenarios, out, summary } => {
            let (ma, ha) = load_model(&a)?;
            let (mb, hb) = load_model(&b)?;
            let world = g.world_for(&ma)?;
            if mb.header.world_fingerprint != ma.header.world_fingerprint {
                log::warn!("models were trained in different worlds; running both in model a's");
            }
            let summary = summary.unwrap_or_else(|| sibling(&out, "summary.json"));
            compare_cmd([(&ma, ha), (&mb, hb)], &world, &scenarios, &out, &summary)
        }
    }
}

fn gen_scenarios_cmd(
    cfg: &RunConfig,
    role: Option<Role>,
    count: Option<usize>,
    r_max: Option<f64>,
    out: &Path,
) -> Result<()> {
    let r_max = r_max.unwrap_or_else(|| cfg.r_max());
    let size = |role: Role| match role {
        Role::Training => cfg.suites.training,
        Role::Validation => cfg.suites.validation,
        Role::Test => cfg.suites.test,
    };
    match role {
        Some(role) => {
            let set = scenarios::gen_scenarios(count.unwrap_or(size(role)), r_max, cfg.seed, role, &cfg.world)?;
            io::write_json(out, &set)?;
            println!("wrote {} {} targets to {}", set.count, role.as_str(), out.display());
        }
        None => {
            if count.is_some() {
                return Err(HarnessError::Usage("--count needs --role".into()));
            }
            std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
            for role in Role::ALL {
                let set = scenarios::gen_scenarios(size(role), r_max, cfg.seed, role, &cfg.world)?;
                let path = out.join(format!("{}.json", role.as_str()));
                io::write_json(&path, &set)?;
                println!("wrote {} {} targets to {}", set.count, role.as_str(), path.display());
            }
        }
    }
    Ok(())
}

fn train_gfs_cmd(cfg: &RunConfig, train: &Path, val: &Path, out: &Path, history: &Path) -> Result<()> {
    let (train_set, train_hash) = load_suite(train, &cfg.world)?;
    let (val_set, val_hash) = load_suite(val, &cfg.world)?;
    let started = Instant::now();
    let trained = gfs::train(&cfg.world, &cfg.ga, &train_set.scenarios(), &val_set.scenarios())
        .map_err(HarnessError::Data)?;
    let ga = &trained.ga;
    log::info!("ga finished in {:.1} s", started.elapsed().as_secs_f64());

    let training = json!({
        "training_scenarios": train_hash,
        "validation_scenarios": val_hash,
        "generations": cfg.ga.generations,
        "selected_generation": ga.best_generation,
        "train_cost": ga.best_train,
        "validation_cost": ga.best_validation,
    });
    let model = ModelFile::gfs(cfg, &trained.fleet, training);
    model.save(out)?;

    let mut doc = CsvDoc::new(["generation", "best_train", "mean_train", "champion_validation"]);
    provenance(&mut doc, cfg);
    for s in &ga.history {
        doc.row(vec![
            s.generation.to_string(),
            s.best_train.to_string(),
            s.mean_train.to_string(),
            s.champion_validation.to_string(),
        ]);
    }
    io::write_atomic(history, &doc.to_bytes()?)?;
    println!(
        "gfs: generation {} selected, train cost {:.4}, validation cost {:.4}; wrote {} and {}",
        ga.best_generation,
        ga.best_train,
        ga.best_validation,
        out.display(),
        history.display()
    );
    Ok(())
}

fn train_q_cmd(cfg: &RunConfig, train: &Path, out: &Path, dump: bool) -> Result<()> {
    let (train_set, train_hash) = load_suite(train, &cfg.world)?;
    let started = Instant::now();
    let trained = qlearn::train_fleet(&cfg.qlearn, &train_set.scenarios(), &cfg.world)
        .map_err(|e| HarnessError::data(e.to_string()))?;
    log::info!("q-learning finished in {:.1} s", started.elapsed().as_secs_f64());

    let disc = Discretizer::for_world(&cfg.world, cfg.qlearn.bins);
    let total = disc.n_states();
    let mut nets: Vec<MlpParams> = Vec::new();
    let mut robots = Vec::new();
    for (i, table) in trained.tables.iter().enumerate() {
        let rows = qlearn::extract_dataset(table, &disc, &cfg.qlearn.action_levels)
            .map_err(|e| HarnessError::data(format!("robot {i}: {e}")))?;
        let mlp_cfg = cablebot_core::mlp::TrainConfig { rng_seed: cfg.mlp.rng_seed.wrapping_add(i as u64), ..cfg.mlp.clone() };
        let (net, history) =
            qlearn::distill(&rows, &mlp_cfg).map_err(|e| HarnessError::data(format!("robot {i}: {e}")))?;
        let mse = *history.last().expect("at least one epoch");
        println!(
            "robot {i}: visited {}/{} states ({:.2}%), distillation mse {:.4}",
            table.n_states(),
            total,
            100.0 * table.n_states() as f64 / total as f64,
            mse
        );
        robots.push(json!({
            "visited_states": table.n_states(),
            "total_states": total,
            "occupancy": table.n_states() as f64 / total as f64,
            "distillation_mse": mse,
        }));
        nets.push(net);
    }
    let faulted = trained.returns.iter().filter(|r| r.is_none()).count();
    let training = json!({
        "training_scenarios": train_hash,
        "episodes": cfg.qlearn.episodes,
        "faulted_episodes": faulted,
        "robots": robots,
    });
    let model = ModelFile::qmlp(cfg, &nets, dump.then_some(&trained.tables[..]), training);
    model.save(out)?;
    println!("qmlp: wrote {}", out.display());
    Ok(())
}

fn eval_doc(model: &ModelFile, model_hash: &str, suite: &ScenarioSet, suite_hash: &str, header: &[&str]) -> CsvDoc {
    let mut doc = CsvDoc::new(header.iter().copied());
    doc.comment("method", model.header.method.as_str())
        .comment("model", model_hash)
        .comment("config_fingerprint", &model.header.config_fingerprint)
        .comment("world_fingerprint", &model.header.world_fingerprint)
        .comment("seed", model.header.seed)
        .comment("scenarios", suite_hash)
        .comment("scenario_seed", suite.seed)
        .comment("config", model.header.config.to_compact_json());
    doc
}

fn run_suite(model: &ModelFile, world: &WorldConfig, suite: &ScenarioSet) -> Result<Vec<EvalRow>> {
    let fleet = model.fleet(world)?;
    report::evaluate(&fleet, &suite.scenarios(), world)
}

fn eval_cmd(
    model: &ModelFile,
    model_hash: &str,
    world: &WorldConfig,
    scenarios: &Path,
    out: &Path,
    summary_path: &Path,
) -> Result<()> {
    let (suite, suite_hash) = load_suite(scenarios, world)?;
    let rows = run_suite(model, world, &suite)?;
    let mut doc = eval_doc(model, model_hash, &suite, &suite_hash, &report::EVAL_COLUMNS);
    report::eval_rows_csv(&mut doc, &rows);
    io::write_atomic(out, &doc.to_bytes()?)?;
    let summary = EvalSummary::of(&rows);
    io::write_json(
        summary_path,
        &json!({
            "method": model.header.method.as_str(),
            "model": model_hash,
            "config_fingerprint": model.header.config_fingerprint,
            "world_fingerprint": io::fingerprint(world),
            "seed": model.header.seed,
            "scenarios": suite_hash,
            "scenario_seed": suite.seed,
            "summary": summary,
        }),
    )?;
    println!(
        "{}: {}/{} successful ({:.0}%), median settle {}, mean smoothness {:.4} rad",
        model.header.method.as_str(),
        summary.successes,
        summary.scenarios,
        100.0 * summary.success_rate,
        summary.median_settle_time.map(|t| format!("{t:.2} s")).unwrap_or_else(|| "n/a".into()),
        summary.mean_smoothness
    );
    Ok(())
}

fn simulate_cmd(
    model: &ModelFile,
    model_hash: &str,
    world: &WorldConfig,
    target: Vec2,
    out: &Path,
    svg: Option<&Path>,
) -> Result<()> {
    let scenario = Scenario { target };
    scenario.validate(world).map_err(|e| HarnessError::data(e.to_string()))?;
    let fleet = model.fleet(world)?;
    let traj = fleet.run(&scenario, world).map_err(|e| HarnessError::Internal(e.to_string()))?;
    let mut doc = CsvDoc::new(plot::trajectory_columns(world.n_robots));
    doc.comment("method", model.header.method.as_str())
        .comment("model", model_hash)
        .comment("config_fingerprint", &model.header.config_fingerprint)
        .comment("world_fingerprint", &model.header.world_fingerprint)
        .comment("seed", model.header.seed)
        .comment("target", format!("{},{}", target.x, target.y));
    plot::trajectory_csv(&mut doc, &traj, world)?;
    io::write_atomic(out, &doc.to_bytes()?)?;
    if let Some(path) = svg {
        io::write_atomic(path, plot::trajectory_svg(&traj, world)?.as_bytes())?;
    }
    let o = cablebot_core::sim::EpisodeOutcome::of(&traj, world);
    println!(
        "{} after {:.2} s, final distance {:.4} m, settle {}",
        o.terminated_by.as_str(),
        o.t_end,
        traj.samples.last().map(|s| s.dist).unwrap_or(f64::NAN),
        o.settle_time.map(|t| format!("{t:.2} s")).unwrap_or_else(|| "none".into())
    );
    Ok(())
}

fn compare_cmd(
    models: [(&ModelFile, String); 2],
    world: &WorldConfig,
    scenarios: &Path,
    out: &Path,
    summary_path: &Path,
) -> Result<()> {
    let (suite, suite_hash) = load_suite(scenarios, world)?;
    let [(ma, ha), (mb, hb)] = models;
    let rows_a = run_suite(ma, world, &suite)?;
    let rows_b = run_suite(mb, world, &suite)?;
    let mut doc = CsvDoc::new(report::COMPARE_COLUMNS);
    doc.comment("method_a", ma.header.method.as_str())
        .comment("model_a", &ha)
        .comment("seed_a", ma.header.seed)
        .comment("config_fingerprint_a", &ma.header.config_fingerprint)
        .comment("method_b", mb.header.method.as_str())
        .comment("model_b", &hb)
        .comment("seed_b", mb.header.seed)
        .comment("config_fingerprint_b", &mb.header.config_fingerprint)
        .comment("world_fingerprint", io::fingerprint(world))
        .comment("scenarios", &suite_hash)
        .comment("scenario_seed", suite.seed);
    report::compare_rows_csv(&mut doc, &rows_a, &rows_b);
    io::write_atomic(out, &doc.to_bytes()?)?;
    let (sa, sb) = (EvalSummary::of(&rows_a), EvalSummary::of(&rows_b));
    io::write_json(
        summary_path,
        &json!({
            "scenarios": suite_hash,
            "a": { "method": ma.header.method.as_str(), "model": ha, "summary": sa },
            "b": { "method": mb.header.method.as_str(), "model": hb, "summary": sb },
        }),
    )?;
    let settle = |s: &EvalSummary| s.median_settle_time.map(|t| format!("{t:.2}")).unwrap_or_else(|| "n/a".into());
    println!("{:<8} {:>9} {:>14} {:>12}", "model", "success", "median settle", "smoothness");
    for (m, s) in [(ma, &sa), (mb, &sb)] {
        println!(
            "{:<8} {:>6}/{:<2} {:>14} {:>12.4}",
            m.header.method.as_str(),
            s.successes,
            s.scenarios,
            settle(s),
            s.mean_smoothness
        );
    }
    Ok(())
}
