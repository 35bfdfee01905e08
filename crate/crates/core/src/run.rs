//! The end-to-end runs behind each command-line subcommand.
//!
//! Each run writes its data files into `config.output.dir`, plus the
//! effective configuration (`effective_config.toml`) and a `manifest.json`
//! listing what was written. Data files never contain timestamps or other
//! run metadata, so identical configurations give byte-identical outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{decision_regions, inverse_region, monitor_scores, simplex_sweep, Sweep};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats;
use crate::model::{validate_alignment, AgentSpec, Environment, Trajectory, WeightVector};
use crate::scenario::{build_scenario, generate_candidates};
use crate::scoring::{self, CandidateScores, EvaluationReport, ScoringContext};

/// Everything a run needs, built from a configuration.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub context: ScoringContext,
    pub environment: Environment,
    pub candidates: Vec<Trajectory>,
    pub agents: Vec<AgentSpec>,
    pub weights: WeightVector,
}

/// Builds the scene and candidates. Externally supplied trajectories replace
/// generated ones with the same id and are appended otherwise.
pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    config.validate()?;
    let (road, generated_env) = build_scenario(&config.scenario)?;
    let environment = match &config.inputs.environment {
        Some(path) => formats::read_environment(path)?,
        None => generated_env,
    };
    let mut candidates = if config.scenario.candidates.is_empty() {
        Vec::new()
    } else {
        generate_candidates(&road, &environment, &config.scenario)?
    };
    if let Some(path) = &config.inputs.candidates {
        for external in formats::read_trajectories(path)? {
            match candidates.iter_mut().find(|c| c.id() == external.id()) {
                Some(slot) => *slot = external,
                None => candidates.push(external),
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::Config(
            "no candidates: configure scenario.candidates or inputs.candidates".into(),
        ));
    }
    for c in &candidates {
        validate_alignment(c, &environment)?;
    }
    Ok(Prepared {
        context: config.context()?,
        environment,
        candidates,
        agents: config.agents()?,
        weights: config.weights()?,
    })
}

impl Prepared {
    pub fn candidate_scores(&self) -> Result<Vec<CandidateScores>> {
        self.candidates
            .iter()
            .map(|t| CandidateScores::compute(&self.context, t, &self.environment, &self.agents))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    output_dir: &'a Path,
    files: Vec<String>,
    warnings: &'a [String],
}

struct Output<'a> {
    dir: &'a Path,
    summary: RunSummary,
}

impl<'a> Output<'a> {
    fn new(config: &'a RunConfig, command: &str) -> Self {
        Output {
            dir: &config.output.dir,
            summary: RunSummary {
                command: command.to_owned(),
                ..Default::default()
            },
        }
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        formats::write_text(&path, text)?;
        self.summary.files.push(path);
        Ok(())
    }

    fn warn(&mut self, message: String) {
        self.summary.warnings.push(message);
    }

    fn finish(mut self, config: &RunConfig) -> Result<RunSummary> {
        self.write("effective_config.toml", &config.to_toml_string())?;
        let files = self
            .summary
            .files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.summary.command,
            output_dir: self.dir,
            files,
            warnings: &self.summary.warnings,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        self.write("manifest.json", &text)?;
        Ok(self.summary)
    }
}

fn zero_weight_warning(weights: &WeightVector) -> Option<String> {
    weights.w().contains(&0.0).then(|| {
        "an agent has zero weight: the balance factor is 0, every score is 0 and all candidates tie"
            .to_owned()
    })
}

/// Writes the scene and the candidate trajectories.
pub fn run_generate(config: &RunConfig) -> Result<RunSummary> {
    let prepared = prepare(config)?;
    let mut out = Output::new(config, "generate");
    out.write(
        "candidates.csv",
        &formats::trajectories_to_csv(&prepared.candidates),
    )?;
    out.write(
        "environment.csv",
        &formats::environment_to_csv(&prepared.environment),
    )?;
    out.finish(config)
}

/// Scores and ranks the candidates under the configured weights.
pub fn run_evaluate(config: &RunConfig) -> Result<(EvaluationReport, RunSummary)> {
    let prepared = prepare(config)?;
    let scores = prepared.candidate_scores()?;
    let report = scoring::report_from_scores(
        &scores,
        &prepared.agents,
        &prepared.weights,
        config.scoring.tie_epsilon,
    )?;
    let mut out = Output::new(config, "evaluate");
    if let Some(w) = zero_weight_warning(&prepared.weights) {
        out.warn(w);
    }
    out.write("report.json", &formats::report_to_json(&report))?;
    out.write("report.csv", &formats::report_to_csv(&report))?;

    let times: Vec<f64> = prepared.candidates[0].timestamps().collect();
    let series = prepared
        .candidates
        .iter()
        .map(|t| {
            let v = scoring::score_timeline(
                &prepared.context,
                t,
                &prepared.environment,
                &prepared.agents,
                &prepared.weights,
            )?;
            Ok((t.id().to_owned(), v))
        })
        .collect::<Result<Vec<_>>>()?;
    let same_clock = prepared.candidates.iter().all(|c| c.len() == times.len());
    if same_clock {
        out.write("timeline.csv", &formats::timeline_to_csv(&times, &series))?;
    } else {
        out.warn("candidates differ in length; timeline.csv not written".into());
    }
    let summary = out.finish(config)?;
    Ok((report, summary))
}

/// Sweeps the weight simplex at the configured resolution.
pub fn sweep(config: &RunConfig) -> Result<Sweep> {
    let prepared = prepare(config)?;
    let scores = prepared.candidate_scores()?;
    simplex_sweep(
        &scores,
        prepared.weights.w_star(),
        config.analysis.resolution,
        config.analysis.sweep_tie_threshold,
    )
}

pub fn run_sweep(config: &RunConfig) -> Result<(Sweep, RunSummary)> {
    let sweep = sweep(config)?;
    let mut out = Output::new(config, "sweep");
    out.write("sweep.csv", &formats::sweep_to_csv(&sweep))?;
    let regions = decision_regions(&sweep);
    let mut text = serde_json::to_string_pretty(&regions.counts()).expect("counts serialize");
    text.push('\n');
    out.write("regions.json", &text)?;
    let summary = out.finish(config)?;
    Ok((sweep, summary))
}

/// Writes the weight vectors under which the configured candidate wins.
pub fn run_invert(config: &RunConfig) -> Result<(usize, RunSummary)> {
    let candidate =
        config.analysis.candidate.clone().ok_or_else(|| {
            Error::Config("invert needs a candidate id (analysis.candidate)".into())
        })?;
    let sweep = sweep(config)?;
    let cells = inverse_region(&sweep, &candidate)?;
    let mut out = Output::new(config, "invert");
    if cells.is_empty() {
        out.warn(format!("{candidate} does not win at any grid point"));
    }
    out.write(
        &format!("invert_{candidate}.csv"),
        &formats::inverse_region_to_csv(&sweep, &candidate, &cells),
    )?;
    let count = cells.len();
    let summary = out.finish(config)?;
    Ok((count, summary))
}

/// Finds the first sample of the configured score series below the threshold.
pub fn run_monitor(config: &RunConfig) -> Result<(Option<usize>, RunSummary)> {
    config.validate()?;
    let path =
        config.analysis.series.as_ref().ok_or_else(|| {
            Error::Config("monitor needs a score series (analysis.series)".into())
        })?;
    let series = formats::read_score_series(path)?;
    let trigger = monitor_scores(&series, config.analysis.monitor_threshold)?;
    let mut out = Output::new(config, "monitor");
    out.write("trigger.txt", &formats::trigger_to_text(trigger))?;
    let summary = out.finish(config)?;
    Ok((trigger, summary))
}
