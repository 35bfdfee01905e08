//! Shared fixtures for the benchmarks.

use reason_eval::run::{self, Prepared};
use reason_eval::{CandidateScores, RunConfig};

/// The default scene, ready to score.
pub fn default_scene() -> Prepared {
    run::prepare(&RunConfig::default()).expect("default configuration is valid")
}

/// Reason scores of the default candidates, as consumed by the sweep.
pub fn default_scores() -> Vec<CandidateScores> {
    default_scene()
        .candidate_scores()
        .expect("default candidates score")
}
