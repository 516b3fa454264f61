use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use qdiv_core::agents::RegularizerChoice;
use qdiv_harness::error::HarnessError;
use qdiv_harness::matrix::{run_cells, Cell, RunManifest};
use qdiv_harness::output::read_training_csv;
use qdiv_harness::sine_demo::{sine_demo, SineDemoConfig};
use qdiv_harness::timeline::{similarity_timeline, write_timeline};
use qdiv_harness::{plot, tables, ExperimentConfig};
use qdiv_core::similarity::SimilarityHeatmap;

#[derive(Parser)]
#[command(name = "qdiv", version, about = "Diversity-regularized Q-ensemble experiments")]
struct Cli {
    /// Experiment config (TOML with [experiment], [environment], [agent]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replace the config's seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides experiment.out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. `--set agent.learning_rate=1e-3`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the single configuration in [agent] for each seed.
    Train,
    /// Run every algorithm × method × λ × seed cell.
    Matrix,
    /// Fit two MLPs to a sine wave and compare their representations.
    SineDemo {
        #[arg(long, default_value_t = 1)]
        seed_a: u64,
        #[arg(long, default_value_t = 2)]
        seed_b: u64,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// CKA heatmaps at fixed step intervals during one ensemble run.
    Similarity {
        /// Steps between checkpoints (default experiment.checkpoint_every).
        #[arg(long)]
        every: Option<u64>,
    },
    /// z-score and Welch p-value tables from a finished matrix.
    Stats {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// SVG training curves and heatmaps from a finished matrix.
    Plot {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let mut overrides = Vec::new();
    if let Some(seed) = cli.seed {
        overrides.push(format!("experiment.seeds=[{seed}]"));
    }
    if let Some(out) = &cli.out {
        overrides.push(format!("experiment.out_dir={}", toml_string(&out.display().to_string())));
    }
    overrides.extend(cli.overrides.iter().cloned());
    match &cli.config {
        Some(path) => ExperimentConfig::load(path, &overrides),
        None => ExperimentConfig::from_toml_with("", &overrides),
    }
}

fn toml_string(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn report(manifest: &RunManifest, root: &Path) -> Result<(), HarnessError> {
    for (entry, s) in manifest.completed() {
        println!("{:<40} final return {:>8.3}  auc {:>8.3}", entry.id, s.final_return, s.auc);
    }
    println!("manifest: {}", root.join("manifest.json").display());
    match manifest.failures() {
        0 => Ok(()),
        failed => Err(HarnessError::RunsFailed {
            failed,
            total: manifest.runs.len(),
        }),
    }
}

fn manifest_path(cfg: &ExperimentConfig, given: &Option<PathBuf>) -> PathBuf {
    given.clone().unwrap_or_else(|| cfg.experiment.out_dir.join("manifest.json"))
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = load_config(cli)?;
    let out = cfg.experiment.out_dir.clone();
    match &cli.command {
        Command::Train => {
            let a = &cfg.agent;
            let n = if a.algorithm.is_ensemble() { a.ensemble_size } else { 1 };
            let cells: Vec<Cell> = cfg
                .experiment
                .seeds
                .iter()
                .map(|&seed| Cell {
                    algorithm: a.algorithm,
                    ensemble_size: n,
                    regularizer: a.regularizer,
                    lambda: if a.regularizer == RegularizerChoice::None { 0.0 } else { a.lambda },
                    seed,
                })
                .collect();
            report(&run_cells(&cfg, &cells, &out)?, &out)?;
        }
        Command::Matrix => {
            let cells = qdiv_harness::plan_cells(&cfg);
            println!("{} runs scheduled", cells.len());
            report(&run_cells(&cfg, &cells, &out)?, &out)?;
        }
        Command::SineDemo { seed_a, seed_b, steps } => {
            let mut demo = SineDemoConfig::new(*seed_a, *seed_b);
            if let Some(s) = steps {
                demo.steps = *s;
            }
            let r = sine_demo(&demo)?;
            write(&out.join("sine_pre.csv"), &r.pre.to_csv())?;
            write(&out.join("sine_post.csv"), &r.post.to_csv())?;
            write(&out.join("sine_pre.svg"), &plot::heatmap_svg("before training", &r.pre))?;
            write(&out.join("sine_post.svg"), &plot::heatmap_svg("after training", &r.post))?;
            let fmt = |v: Option<f64>| v.map_or("undefined".into(), |v| format!("{v:.4}"));
            println!("output-layer CKA before {} after {}", fmt(r.pre_output_cka), fmt(r.post_output_cka));
            println!("probe MSE: net A {:.5}, net B {:.5}", r.mse_a, r.mse_b);
        }
        Command::Similarity { every } => {
            let a = &cfg.agent;
            let cell = Cell {
                algorithm: a.algorithm,
                ensemble_size: a.ensemble_size,
                regularizer: a.regularizer,
                lambda: a.lambda,
                seed: cfg.experiment.seeds[0],
            };
            let points = similarity_timeline(&cfg, &cell, every.unwrap_or(cfg.experiment.checkpoint_every))?;
            let dir = out.join("timeline").join(cell.id());
            write_timeline(&dir, &points)?;
            for p in &points {
                let cka = p.mean_cka.map_or("undefined".into(), |v| format!("{v:.4}"));
                println!("checkpoint {:>3} step {:>8} mean CKA {cka} return {:.3}", p.checkpoint, p.step, p.return_mean);
            }
            println!("written to {}", dir.display());
        }
        Command::Stats { manifest } => {
            let path = manifest_path(&cfg, manifest);
            let m = RunManifest::load(&path)?;
            let groups = tables::compute(&m)?;
            let dir = path.parent().unwrap_or(Path::new("."));
            let z = tables::z_table(&groups);
            write(&dir.join("zscores.csv"), &z)?;
            write(&dir.join("pvalues.csv"), &tables::p_table(&groups))?;
            write(&dir.join("lambdas.csv"), &tables::lambda_table(&groups))?;
            print!("z-scores\n{z}\np-values\n{}", tables::p_table(&groups));
        }
        Command::Plot { manifest } => {
            let path = manifest_path(&cfg, manifest);
            let m = RunManifest::load(&path)?;
            let dir = path.parent().unwrap_or(Path::new("."));
            let mut series: Vec<(String, Vec<Vec<(u64, f64)>>)> = Vec::new();
            for entry in &m.runs {
                for art in &entry.artifacts {
                    let file = dir.join(art);
                    match art.file_name().and_then(|f| f.to_str()) {
                        Some("train.csv") => {
                            let rows = read_training_csv(&file)?;
                            let label = format!("{}/{}", entry.cell.algorithm.label(), entry.method);
                            match series.iter_mut().find(|s| s.0 == label) {
                                Some(s) => s.1.push(plot::return_curve(&rows)),
                                None => series.push((label, vec![plot::return_curve(&rows)])),
                            }
                        }
                        Some(name) if name.starts_with("heatmap") => {
                            let h = SimilarityHeatmap::from_csv(&std::fs::read_to_string(&file)?)
                                .with_context(|| format!("parsing {}", file.display()))?;
                            let title = format!("{} {}", entry.id, name.trim_end_matches(".csv"));
                            write(&file.with_extension("svg"), &plot::heatmap_svg(&title, &h))?;
                        }
                        _ => {}
                    }
                }
            }
            let bands: Vec<(String, Vec<plot::BandPoint>)> =
                series.into_iter().map(|(l, c)| (l, plot::aggregate(&c))).collect();
            let svg = dir.join("curves.svg");
            write(&svg, &plot::curves_svg(&m.name, &bands))?;
            println!("wrote {}", svg.display());
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<HarnessError>() {
        Some(HarnessError::RunsFailed { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
