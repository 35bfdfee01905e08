use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reason_eval::{load_config, run, Error, RunConfig};

/// Score candidate trajectories against the reasons of the people they affect.
#[derive(Parser)]
#[command(name = "reason-eval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the scene and candidate trajectories as CSV.
    Generate(Common),
    /// Score and rank the candidates under the configured weights.
    Evaluate(Common),
    /// Evaluate every point of the weight simplex.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// List the weight vectors under which one candidate wins.
    Invert {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        candidate: Option<String>,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Report the first sample of a score series below the threshold.
    Monitor {
        #[command(flatten)]
        common: Common,
        /// CSV file with a `score` column.
        #[arg(long)]
        series: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            config.output.dir = out.clone();
        }
        Ok(config)
    }
}

fn execute(cli: Cli) -> Result<Vec<String>, Error> {
    let mut lines = Vec::new();
    let summary = match cli.command {
        Command::Generate(common) => {
            let config = common.load()?;
            run::run_generate(&config)?
        }
        Command::Evaluate(common) => {
            let config = common.load()?;
            let (report, summary) = run::run_evaluate(&config)?;
            for (rank, id) in report.ranking.iter().enumerate() {
                let c = report.candidate(id).expect("ranked candidate");
                lines.push(format!(
                    "{:>2}  {id}  S={:.6}  S_w={:.6}",
                    rank + 1,
                    c.total,
                    c.s_w
                ));
            }
            lines.push(format!("B={:.6}", report.balance));
            summary
        }
        Command::Sweep { common, resolution } => {
            let mut config = common.load()?;
            if let Some(r) = resolution {
                config.analysis.resolution = r;
            }
            let (sweep, summary) = run::run_sweep(&config)?;
            let regions = reason_eval::decision_regions(&sweep);
            for (id, n) in regions.counts() {
                lines.push(format!("{id}: {n} cells"));
            }
            summary
        }
        Command::Invert {
            common,
            candidate,
            resolution,
        } => {
            let mut config = common.load()?;
            if let Some(c) = candidate {
                config.analysis.candidate = Some(c);
            }
            if let Some(r) = resolution {
                config.analysis.resolution = r;
            }
            let (count, summary) = run::run_invert(&config)?;
            lines.push(format!("{count} cells"));
            summary
        }
        Command::Monitor {
            common,
            series,
            threshold,
        } => {
            let mut config = common.load()?;
            if let Some(s) = series {
                config.analysis.series = Some(s);
            }
            if let Some(t) = threshold {
                config.analysis.monitor_threshold = t;
            }
            let (trigger, summary) = run::run_monitor(&config)?;
            lines.push(match trigger {
                Some(i) => format!("trigger at index {i}"),
                None => "none".to_owned(),
            });
            summary
        }
    };
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    for f in &summary.files {
        lines.push(format!("wrote {}", f.display()));
    }
    Ok(lines)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}
