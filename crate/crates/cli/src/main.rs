use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semaffinity::providers::EmbeddingCache;
use semaffinity::viz::{convert_svg, render, render_grid_svg, ChartSpec, OutputFormat};
use semaffinity::Error;
use semaffinity_cli::report::export_results;
use semaffinity_cli::{file_stem, run_matrix, write_atomic, Overrides, RunConfig, RunReport};

const EXIT_PARTIAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "semaffinity",
    version,
    about = "Cross-lingual embedding alignment benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single model × dataset experiment.
    Run {
        #[command(flatten)]
        run: RunArgs,
        /// Model to run; required when the file lists several.
        #[arg(long)]
        model: Option<String>,
        /// Dataset to run; required when the file lists several.
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Run every configured model on every configured dataset.
    Matrix {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the diagnostic workflow stored in a report.
    Diagnose {
        report: PathBuf,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Re-render charts from the layouts stored with a report.
    Chart {
        report: PathBuf,
        #[arg(long, default_value = "svg")]
        format: String,
        /// Combine each model's charts into 2×2 grids.
        #[arg(long)]
        grid: bool,
        /// Output directory; defaults to `charts/` next to the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect or clear the embedding cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
        #[arg(long, global = true)]
        cache_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    List {
        #[arg(long)]
        model: Option<String>,
    },
    Clear {
        #[arg(long)]
        model: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Run file (TOML).
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    no_charts: bool,
    /// Chart formats (svg, png, pdf); repeatable.
    #[arg(long = "format")]
    formats: Vec<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Overrides, Error> {
        let formats = self
            .formats
            .iter()
            .map(|f| OutputFormat::parse(f))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Overrides {
            name: self.name.clone(),
            output_dir: self.output_dir.clone(),
            bootstrap_iterations: self.iterations,
            seed: self.seed,
            parallelism: self.parallelism,
            charts: self.no_charts.then_some(false),
            chart_formats: (!formats.is_empty()).then_some(formats),
            cache_dir: self.cache_dir.clone(),
        })
    }

    fn load(&self) -> Result<RunConfig, Error> {
        let mut config = RunConfig::load(&self.config)?;
        config.apply(&self.overrides()?);
        Ok(config)
    }
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::from(EXIT_PARTIAL),
    }
}

fn run(config: RunConfig) -> Result<ExitCode, Error> {
    let report = run_matrix(&config)?;
    let files = export_results(&report, &config.run.output_dir)?;
    for r in &report.results {
        let r = &r.result;
        println!(
            "{} {} {}: SA(cos)={:.3} ± {:.3}  SA(eucl)={:.3} ± {:.3}  {}",
            r.model_id,
            r.dataset_id,
            r.language_pair_label(),
            r.sa_cosine,
            r.sem_cosine,
            r.sa_euclidean,
            r.sem_euclidean,
            r.tier.as_str()
        );
    }
    for f in &report.failures {
        eprintln!("failed: {f}");
    }
    println!("wrote {} and {}", files.csv.display(), files.json.display());
    Ok(if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PARTIAL)
    })
}

fn diagnose(path: &Path, json: bool) -> Result<ExitCode, Error> {
    let report = RunReport::read(path)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report.diagnostics)?);
        return Ok(ExitCode::SUCCESS);
    }
    for d in &report.diagnostics {
        println!("{} (datasets: {})", d.model_id, d.datasets.join(", "));
        println!("  mean SA(cos): {:.3}", d.mean_sa_cosine);
        println!("  stage 1: {:?}", d.stage1_decision);
        if let Some(f) = d.magnitude_finding {
            println!("  magnitude: {f:?}");
        }
        if let Some(f) = d.variance_finding {
            println!("  variance: {f:?}");
        }
        if let Some(f) = d.separation_finding {
            println!(
                "  separation: {f:?} (inter/intra {:.2})",
                d.inter_intra_ratio_cosine
            );
        }
        for line in &d.narrative {
            println!("  - {line}");
        }
        println!("  recommendation: {}", d.recommendation);
    }
    Ok(ExitCode::SUCCESS)
}

fn chart(path: &Path, format: &str, grid: bool, out: Option<PathBuf>) -> Result<ExitCode, Error> {
    let format = OutputFormat::parse(format).map_err(|e| Error::Config(e.to_string()))?;
    let report = RunReport::read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let out = out.unwrap_or_else(|| base.join("charts"));
    let mut by_model: Vec<(String, Vec<ChartSpec>)> = Vec::new();
    for rec in &report.results {
        let Some(layout) = &rec.layout else { continue };
        let bytes = std::fs::read(base.join(layout))
            .map_err(|e| Error::Config(format!("cannot read layout {layout}: {e}")))?;
        let spec: ChartSpec = serde_json::from_slice(&bytes)?;
        let model = &rec.result.model_id;
        if !grid {
            let name = format!(
                "{}-{}-phate.{}",
                file_stem(model),
                file_stem(&rec.result.dataset_id),
                format.extension()
            );
            let target = out.join(name);
            write_atomic(&target, &render(&spec, format)?)?;
            println!("{}", target.display());
        }
        match by_model.iter_mut().find(|(m, _)| m == model) {
            Some((_, v)) => v.push(spec),
            None => by_model.push((model.clone(), vec![spec])),
        }
    }
    if grid {
        for (model, specs) in &by_model {
            for (i, chunk) in specs.chunks(4).enumerate() {
                let svg = render_grid_svg(chunk)?;
                let target = out.join(format!(
                    "{}-grid-{}.{}",
                    file_stem(model),
                    i + 1,
                    format.extension()
                ));
                write_atomic(&target, &convert_svg(&svg, format)?)?;
                println!("{}", target.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cache(action: CacheAction, dir: Option<PathBuf>) -> Result<ExitCode, Error> {
    let cache = EmbeddingCache::resolve(dir.as_deref());
    match action {
        CacheAction::List { model } => {
            let mut entries = cache.entries()?;
            entries.retain(|e| model.as_deref().is_none_or(|m| e.model_id == m));
            entries.sort_by(|a, b| (&a.model_id, &a.word).cmp(&(&b.model_id, &b.word)));
            for e in &entries {
                println!(
                    "{}\t{}\t{}\t{}\t{}",
                    e.model_id, e.word, e.dimension, e.provider, e.fetched_at
                );
            }
            eprintln!("{} entries in {}", entries.len(), cache.root().display());
        }
        CacheAction::Clear { model } => {
            let n = cache.clear(model.as_deref())?;
            println!("removed {n} entries from {}", cache.root().display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { run: args, model, dataset } => args.load().and_then(|mut config| {
            config.select(model.as_deref(), dataset.as_deref())?;
            if config.models.len() != 1 || config.datasets.len() != 1 {
                return Err(Error::Config(format!(
                    "run needs exactly one model and one dataset, the file lists {} and {}; use --model and --dataset",
                    config.models.len(),
                    config.datasets.len()
                )));
            }
            run(config)
        }),
        Command::Matrix { run: args } => args.load().and_then(run),
        Command::Diagnose { report, json } => diagnose(&report, json),
        Command::Chart {
            report,
            format,
            grid,
            out,
        } => chart(&report, &format, grid, out),
        Command::Cache { action, cache_dir } => cache(action, cache_dir),
    };
    outcome.unwrap_or_else(|e| exit_for(&e))
}
