use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chromaprobe::error::{Error, Result};
use chromaprobe::harness::{self, ExperimentConfig, Preset};
use chromaprobe::scenegen::{self, SceneConfig};

#[derive(Parser)]
#[command(
    name = "chromaprobe",
    version,
    about = "Color-space detectability and discriminability experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic dataset (images, label maps, manifest).
    Gen(Common),
    /// Write the per-class templates used for detection.
    Templates(Common),
    /// Backprojection sweep: detect.csv and detect_ranking.json.
    EvalDetect(Common),
    /// Clustering sweep: cluster.csv and cluster_ranking.json.
    EvalCluster(Common),
    /// Grid-world search sweep: search.csv and search_summary.json.
    Search(Common),
    /// Merge available summaries in --out into report.json and report.csv.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config JSON; for `gen` a scene config is also accepted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Corpus directory of `<stem>_img.png` / `<stem>_label.png` pairs.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Comma-separated spaces; `X` selects X and X', `X'` only X', `all` the sweep.
    #[arg(long)]
    spaces: Option<String>,
    /// Comma-separated subset of 16,32,64,128.
    #[arg(long)]
    bins: Option<String>,
    /// Backprojection threshold in [0, 1] (default 0.5).
    #[arg(long)]
    tau: Option<f64>,
    /// Seed for pixel sampling and k-means (default 0); for `gen`, the scene seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Scene preset to render when no corpus is given (default desk).
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

impl Common {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(c) = &self.corpus {
            cfg.corpus = Some(c.clone());
        }
        if let Some(s) = &self.spaces {
            cfg.spaces = harness::parse_space_list(s)?;
        }
        if let Some(b) = &self.bins {
            cfg.bins = harness::parse_bins_list(b)?;
        }
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = self.preset {
            cfg.preset = Some(p);
            cfg.scene = None;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// A scene config file, or the scene of an experiment config.
    fn scene(&self) -> Result<SceneConfig> {
        if let (Some(path), None) = (&self.config, self.preset) {
            if let Ok(scene) = SceneConfig::load(path) {
                return Ok(scene);
            }
        }
        let mut scene = self.experiment()?.scene_config();
        if let Some(s) = self.seed {
            scene.seed = s;
        }
        scene.validate()?;
        Ok(scene)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Gen(c)
        | Command::Templates(c)
        | Command::EvalDetect(c)
        | Command::EvalCluster(c)
        | Command::Search(c)
        | Command::Report(c) => c,
    };
    if let Some(n) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let out = &common.out;
    match &cli.command {
        Command::Gen(c) => {
            let scene = c.scene()?;
            let manifest = scenegen::generate_dataset(&scene, out)?;
            println!(
                "wrote {} image/label pairs to {}",
                manifest.entries.len(),
                out.display()
            );
        }
        Command::Templates(c) => {
            let cfg = c.experiment()?;
            let templates = harness::resolve_templates(&cfg)?;
            let dir = out.join("templates");
            harness::save_templates(&templates, &dir)?;
            println!("wrote {} templates to {}", templates.len(), dir.display());
        }
        Command::EvalDetect(c) => {
            let cfg = c.experiment()?;
            let (corpus, templates) = harness::resolve_inputs(&cfg)?;
            let rows = harness::detect_rows(&cfg, &corpus, &templates)?;
            let ranking = harness::rank_detection(&cfg, corpus.len(), &rows)?;
            create_dir(out)?;
            harness::write_csv(&out.join(harness::DETECT_CSV), &rows)?;
            harness::write_json(&out.join(harness::DETECT_JSON), &ranking)?;
            for primed in [false, true] {
                let top: Vec<String> = ranking
                    .ranked(primed)
                    .iter()
                    .take(3)
                    .map(|e| {
                        format!(
                            "{}{} {:.4}",
                            e.space,
                            if primed { "'" } else { "" },
                            e.mean.fmeasure
                        )
                    })
                    .collect();
                println!(
                    "{} top-3 F: {}",
                    if primed { "normalized" } else { "original" },
                    top.join(", ")
                );
            }
        }
        Command::EvalCluster(c) => {
            let cfg = c.experiment()?;
            let (corpus, _) = harness::resolve_inputs(&cfg)?;
            let rows = harness::cluster_rows(&cfg, &corpus)?;
            let ranking = harness::rank_clusters(&cfg, &rows)?;
            create_dir(out)?;
            harness::write_csv(&out.join(harness::CLUSTER_CSV), &rows)?;
            harness::write_json(&out.join(harness::CLUSTER_JSON), &ranking)?;
            let mut best: Vec<_> = ranking.entries.iter().collect();
            best.sort_by_key(|e| e.rank);
            let top: Vec<String> = best
                .iter()
                .take(3)
                .map(|e| {
                    format!(
                        "{}{} {:.4}",
                        e.space,
                        if e.primed { "'" } else { "" },
                        e.mean_silhouette
                    )
                })
                .collect();
            println!("top-3 silhouette: {}", top.join(", "));
        }
        Command::Search(c) => {
            let cfg = c.experiment()?;
            let rows = harness::search_rows(&cfg)?;
            let summary = harness::summarize_search(&rows)?;
            create_dir(out)?;
            harness::write_csv(&out.join(harness::SEARCH_CSV), &rows)?;
            harness::write_json(&out.join(harness::SEARCH_JSON), &summary)?;
            println!("uninformed mean steps: {:.2}", summary.baseline.mean_steps);
            for e in &summary.entries {
                println!(
                    "{}{}: {:.2} steps ({:+.1}%)",
                    e.space,
                    if e.primed { "'" } else { "" },
                    e.mean_steps,
                    -100.0 * e.improvement
                );
            }
        }
        Command::Report(_) => {
            let report = harness::build_report(out)?;
            harness::write_json(&out.join(harness::REPORT_JSON), &report)?;
            harness::write_csv(
                &out.join(harness::REPORT_CSV),
                &harness::report_rows(&report),
            )?;
            println!("wrote {} and {}", harness::REPORT_JSON, harness::REPORT_CSV);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
