use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use persuasion::mte::Link;
use persuasion::report::{
    exit_code, parse_grid, render, run, InputFormat, ModeChoice, OutputFormat, RunConfig,
    ScenarioChoice,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    CsvMicro,
    JsonCounts,
    DgpJson,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Auto,
    Sharp,
    Full,
    Marginals,
    Outcome,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Binary,
    Multinomial,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutArg {
    Json,
    Markdown,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LinkArg {
    Probit,
    Logit,
}

/// Bounds, point estimates and confidence intervals for persuasion rates.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Data file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "csv-micro")]
    format: Format,
    #[arg(long, value_enum, default_value = "auto")]
    scenario: ScenarioArg,
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Pretest level for the marginals scenario.
    #[arg(long)]
    alpha_bar: Option<f64>,
    /// Bootstrap replicates (0 skips the bootstrap).
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    out: OutArg,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output_file: Option<PathBuf>,
    /// JSON file with known exposure rates {"e1": .., "e0": ..}.
    #[arg(long)]
    exposure: Option<PathBuf>,
    /// Evaluation points for the marginal rate: "0.1,0.2" or "lo:hi:step".
    #[arg(long)]
    mte_grid: Option<String>,
    #[arg(long, value_enum, default_value = "probit")]
    link: LinkArg,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    second_step_degree: u8,
    /// CSV column holding a discrete covariate.
    #[arg(long)]
    cell_column: Option<String>,
    #[arg(long, default_value_t = 10)]
    min_cell_size: usize,
    /// Ignore the treatment column.
    #[arg(long)]
    drop_t: bool,
    /// Sample size when the input is a simulator configuration.
    #[arg(long, default_value_t = 10_000)]
    sim_size: usize,
}

fn config(cli: Cli) -> persuasion::Result<(RunConfig, Option<PathBuf>)> {
    let mut cfg = RunConfig::new(
        cli.input,
        match cli.format {
            Format::CsvMicro => InputFormat::CsvMicro,
            Format::JsonCounts => InputFormat::JsonCounts,
            Format::DgpJson => InputFormat::DgpJson,
        },
    );
    cfg.scenario = match cli.scenario {
        ScenarioArg::Auto => ScenarioChoice::Auto,
        ScenarioArg::Sharp => ScenarioChoice::Sharp,
        ScenarioArg::Full => ScenarioChoice::Full,
        ScenarioArg::Marginals => ScenarioChoice::Marginals,
        ScenarioArg::Outcome => ScenarioChoice::Outcome,
    };
    cfg.mode = match cli.mode {
        ModeArg::Auto => ModeChoice::Auto,
        ModeArg::Binary => ModeChoice::Binary,
        ModeArg::Multinomial => ModeChoice::Multinomial,
    };
    cfg.alpha = cli.alpha;
    cfg.alpha_bar = cli.alpha_bar;
    cfg.bootstrap = cli.bootstrap;
    cfg.seed = cli.seed;
    cfg.output = match cli.out {
        OutArg::Json => OutputFormat::Json,
        OutArg::Markdown => OutputFormat::Markdown,
    };
    cfg.exposure = cli.exposure;
    cfg.mte_grid = cli.mte_grid.as_deref().map(parse_grid).transpose()?;
    cfg.link = match cli.link {
        LinkArg::Probit => Link::Probit,
        LinkArg::Logit => Link::Logit,
    };
    cfg.second_step_degree = cli.second_step_degree as usize;
    cfg.cell_column = cli.cell_column;
    cfg.min_cell_size = cli.min_cell_size;
    cfg.drop_t = cli.drop_t;
    cfg.sim_size = cli.sim_size;
    Ok((cfg, cli.output_file))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(cli).and_then(|(cfg, dest)| {
        let text = render(&run(&cfg)?, cfg.output)?;
        match dest {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
