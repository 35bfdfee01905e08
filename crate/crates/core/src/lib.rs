//! Scores candidate vehicle trajectories by how well they serve the reasons
//! of the people they affect.
//!
//! Each human agent (policymaker, driver, cyclist in the bundled overtaking
//! scene) holds reasons that are evaluated at every time step and averaged
//! over a trajectory. Agents are mixed with weights on the probability
//! simplex, and the mixture is scaled by a balance factor that falls to zero
//! when any agent is ignored.
//!
//! ```
//! use reason_eval::{run, RunConfig};
//!
//! let config = RunConfig::default();
//! let prepared = run::prepare(&config).unwrap();
//! let report = reason_eval::scoring::evaluate(
//!     &prepared.context,
//!     &prepared.candidates,
//!     &prepared.environment,
//!     &prepared.agents,
//!     &prepared.weights,
//!     config.scoring.tie_epsilon,
//! )
//! .unwrap();
//! assert_eq!(report.ranking.first().map(String::as_str), Some("T1"));
//! ```

pub mod analysis;
pub mod config;
pub mod error;
pub mod formats;
pub mod model;
pub mod reasons;
pub mod run;
pub mod scenario;
pub mod scoring;

pub use analysis::{
    decision_regions, inverse_region, monitor_scores, simplex_sweep, Best, DecisionCell, RegionMap,
    SimplexGrid, Sweep,
};
pub use config::{load_config, RunConfig};
pub use error::{Error, Result};
pub use model::{
    default_agents, make_uniform_weights, validate_alignment, AgentKind, AgentSpec, AgentTrack,
    EgoState, EnvAgentState, Environment, ReasonKind, ReasonParams, ReasonSpec, Trajectory,
    WeightVector,
};
pub use reasons::{FollowClocks, GeometryInputs};
pub use scenario::{
    agent_distance, build_scenario, generate_candidates, signed_lane_distance, CandidateParams,
    CandidateStyle, RoadModel, ScenarioConfig,
};
pub use scoring::{
    agent_score, balance, evaluate, rank_candidates, reason_trajectory_score, total_score,
    unbalanced_score, CandidateScores, ClearanceMetric, EvaluationReport, Ranking, ScoringContext,
};
