use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heartprompt::experiment::{ExperimentConfig, ExperimentError, ReportTable, Runner};
use log::error;

#[derive(Parser, Debug)]
#[command(name = "heartprompt", version, about = "Explainable-ML guided prompt classification for heart-disease risk")]
struct Cli {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    data_path: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    n_iter: Option<usize>,
    /// Comma-separated example counts, e.g. `0,2,4`.
    #[arg(long, global = true, value_delimiter = ',')]
    n_ex: Option<Vec<usize>>,
    #[arg(long, global = true)]
    cache_path: Option<PathBuf>,
    /// Reproduce the published prompt box verbatim.
    #[arg(long, global = true)]
    paper_faithful: bool,
    /// Write every grid prompt under `<output_dir>/prompts`.
    #[arg(long, global = true)]
    export_prompts: bool,
    /// Allow requests to the configured HTTP endpoint; otherwise only cached replies are used.
    #[arg(long, global = true)]
    live: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load, impute, split and standardize the dataset.
    PrepareData,
    /// Tune and evaluate the six classifiers and the trivial baselines.
    TrainModels,
    /// Render domain-knowledge texts from the trained models.
    GenDk,
    /// Classify the test set under every prompt variant and example count.
    RunGrid,
    /// Assemble the results table as JSON, CSV and Markdown.
    Report,
    /// Every stage in order.
    RunAll,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

impl Cli {
    fn config(&self) -> Result<ExperimentConfig, ExperimentError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.data_path {
            cfg.data_path = v.clone();
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.n_iter {
            cfg.n_iter = v;
        }
        if let Some(v) = &self.n_ex {
            cfg.n_ex_grid = v.clone();
        }
        if let Some(v) = &self.cache_path {
            cfg.cache_path = Some(v.clone());
        }
        cfg.paper_faithful |= self.paper_faithful;
        cfg.export_prompts |= self.export_prompts;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_table(table: &ReportTable) {
    print!("{}", table.to_markdown());
}

fn run(cli: &Cli) -> Result<(), ExperimentError> {
    let cfg = cli.config()?;
    if let Command::ShowConfig = cli.command {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let runner = Runner::new(cfg, cli.live);
    match cli.command {
        Command::PrepareData => {
            let data = runner.prepare()?;
            let s = &data.stats;
            println!(
                "rows: {}, with missing values: {}, male fraction: {:.4}, train/test: {}/{}",
                s.n_total,
                s.n_with_missing,
                s.male_fraction,
                data.train_raw.len(),
                data.test_raw.len()
            );
        }
        Command::TrainModels => {
            for row in runner.train()?.rows {
                println!("{}: F1 {:.4}, accuracy {:.4}", row.label, row.metrics.f1, row.metrics.accuracy);
            }
        }
        Command::GenDk => {
            for (i, dk) in runner.dk()?.texts.iter().enumerate() {
                println!("dk{i} [{}]: {}", dk.kind, dk.text);
            }
        }
        Command::RunGrid => {
            let grid = runner.grid()?;
            println!("{} grid cells completed", grid.cells.len());
        }
        Command::Report => print_table(&runner.report()?),
        Command::RunAll => print_table(&runner.all()?),
        Command::ShowConfig => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
