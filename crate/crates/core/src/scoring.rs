//! From per-step reason values to one unified score per candidate.
//!
//! The pipeline is: per-step reason values are averaged over the trajectory,
//! each agent mixes its reasons with its alphas, agents are mixed with the
//! simplex weights, and the result is scaled by the balance factor of the
//! weight vector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_alignment, AgentKind, AgentSpec, Environment, ReasonKind, ReasonParams, Trajectory,
    WeightVector,
};
use crate::reasons::{self, FollowClocks, GeometryInputs};
use crate::scenario::{self, RoadModel};

/// Default threshold below which two unified scores count as tied.
pub const TIE_EPSILON: f64 = 1e-9;

/// How the ego to cyclist distance is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClearanceMetric {
    /// Straight-line distance between reference points.
    #[default]
    Euclidean,
    /// Lateral offset only.
    Lateral,
}

/// Geometry and constants that turn states into reason inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoringContext {
    pub road: RoadModel,
    pub vehicle_width: f64,
    pub params: ReasonParams,
    pub clearance: ClearanceMetric,
}

impl ScoringContext {
    fn cyclist_distance(
        &self,
        environment: &Environment,
        trajectory: &Trajectory,
        l: usize,
    ) -> Result<f64> {
        let ego = &trajectory.states()[l];
        let mut best: Option<f64> = None;
        for track in environment.of_kind(AgentKind::Cyclist) {
            let other = &track.states()[l];
            let d = match self.clearance {
                ClearanceMetric::Euclidean => scenario::agent_distance(ego, other)?,
                ClearanceMetric::Lateral => scenario::lateral_distance(ego, other)?,
            };
            best = Some(best.map_or(d, |b| b.min(d)));
        }
        best.ok_or(Error::MissingAgent("cyclist"))
    }
}

/// Per-step values of one reason over a trajectory, clocks threaded from zero.
pub fn reason_step_scores(
    ctx: &ScoringContext,
    trajectory: &Trajectory,
    environment: &Environment,
    kind: ReasonKind,
) -> Result<Vec<f64>> {
    validate_alignment(trajectory, environment)?;
    let dt = trajectory.dt();
    let params = &ctx.params;
    let mut clocks = FollowClocks::default();
    let mut out = Vec::with_capacity(trajectory.len());
    for (l, state) in trajectory.states().iter().enumerate() {
        let value = match kind {
            ReasonKind::PolicymakerLane => {
                let d_veh = scenario::signed_lane_distance(state, &ctx.road, ctx.vehicle_width)?;
                reasons::policymaker_step(GeometryInputs { d_veh, d_vc: 0.0 }, params)?
            }
            ReasonKind::DriverEfficiency => {
                let d_vc = ctx.cyclist_distance(environment, trajectory, l)?;
                let (v, next) =
                    reasons::driver_step(GeometryInputs { d_veh: 0.0, d_vc }, clocks, dt, params)?;
                clocks = next;
                v
            }
            ReasonKind::CyclistSafetyComfort => {
                let d_vc = ctx.cyclist_distance(environment, trajectory, l)?;
                let (v, next) =
                    reasons::cyclist_step(GeometryInputs { d_veh: 0.0, d_vc }, clocks, dt, params)?;
                clocks = next;
                v
            }
        };
        out.push(value);
    }
    Ok(out)
}

/// Trajectory-level reason score: the mean of the per-step values.
pub fn reason_trajectory_score(
    ctx: &ScoringContext,
    trajectory: &Trajectory,
    environment: &Environment,
    kind: ReasonKind,
) -> Result<f64> {
    let steps = reason_step_scores(ctx, trajectory, environment, kind)?;
    Ok(mean(&steps))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn agent_score(f_values: &[f64], alphas: &[f64]) -> Result<f64> {
    if f_values.len() != alphas.len() {
        return Err(Error::InvalidArgument(format!(
            "{} reason scores but {} alphas",
            f_values.len(),
            alphas.len()
        )));
    }
    Ok(f_values
        .iter()
        .zip(alphas)
        .map(|(f, a)| f * a)
        .sum::<f64>()
        .clamp(0.0, 1.0))
}

/// Weighted sum of agent scores, before balancing.
///
/// Clamped to `[0, 1]`: weights may sum to one only within tolerance.
pub fn unbalanced_score(agent_scores: &[f64], weights: &WeightVector) -> Result<f64> {
    if agent_scores.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} agent scores but {} weights",
            agent_scores.len(),
            weights.len()
        )));
    }
    Ok(agent_scores
        .iter()
        .zip(weights.w())
        .map(|(s, w)| s * w)
        .sum::<f64>()
        .clamp(0.0, 1.0))
}

/// Balance factor of a weight vector against its ideal distribution.
///
/// The RMS deviation from the ideal, relative to the ideal's norm, is
/// subtracted from one and multiplied by the smallest `w_i / w*_i`. Equals 1
/// at the ideal and 0 as soon as one agent gets zero weight.
pub fn balance(weights: &WeightVector) -> f64 {
    balance_terms(weights.w(), weights.w_star())
}

/// [`balance`] on raw slices, validating the ideal distribution.
pub fn balance_of(w: &[f64], w_star: &[f64]) -> Result<f64> {
    if w.is_empty() || w.len() != w_star.len() {
        return Err(Error::InvalidArgument(format!(
            "weights ({}) and ideal distribution ({}) must be nonempty and equally long",
            w.len(),
            w_star.len()
        )));
    }
    if let Some(v) = w_star.iter().find(|v| v.is_nan() || **v <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ideal weight {v} makes the balance ratio undefined"
        )));
    }
    Ok(balance_terms(w, w_star))
}

fn balance_terms(w: &[f64], w_star: &[f64]) -> f64 {
    let n = w.len() as f64;
    let mean_sq: f64 = w
        .iter()
        .zip(w_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    let ideal_norm = w_star.iter().map(|b| b * b).sum::<f64>().sqrt();
    let spread = 1.0 - mean_sq.sqrt() / ideal_norm;
    let floor = w
        .iter()
        .zip(w_star)
        .map(|(a, b)| a / b)
        .fold(f64::INFINITY, f64::min);
    // Neither factor leaves [0, 1] for a uniform ideal; the clamp only
    // matters for skewed ideals and sum rounding.
    (spread.max(0.0) * floor).clamp(0.0, 1.0)
}

/// Weight-independent scores of one candidate: F per agent per reason and S_i.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateScores {
    pub id: String,
    pub reason_scores: Vec<Vec<f64>>,
    pub agent_scores: Vec<f64>,
}

impl CandidateScores {
    pub fn compute(
        ctx: &ScoringContext,
        trajectory: &Trajectory,
        environment: &Environment,
        agents: &[AgentSpec],
    ) -> Result<Self> {
        validate_alignment(trajectory, environment)?;
        let mut by_kind: BTreeMap<ReasonKind, f64> = BTreeMap::new();
        let mut reason_scores = Vec::with_capacity(agents.len());
        let mut agent_scores = Vec::with_capacity(agents.len());
        for agent in agents {
            let mut fs = Vec::with_capacity(agent.reasons().len());
            for reason in agent.reasons() {
                let f = match by_kind.get(&reason.kind) {
                    Some(f) => *f,
                    None => {
                        let f = reason_trajectory_score(ctx, trajectory, environment, reason.kind)?;
                        by_kind.insert(reason.kind, f);
                        f
                    }
                };
                fs.push(f);
            }
            agent_scores.push(agent_score(&fs, &agent.alphas())?);
            reason_scores.push(fs);
        }
        Ok(CandidateScores {
            id: trajectory.id().to_owned(),
            reason_scores,
            agent_scores,
        })
    }

    /// `(S_w, B, S)` under the given weights.
    pub fn weighted(&self, weights: &WeightVector) -> Result<(f64, f64, f64)> {
        let s_w = unbalanced_score(&self.agent_scores, weights)?;
        let b = balance(weights);
        Ok((s_w, b, b * s_w))
    }
}

/// Unified score of one trajectory.
pub fn total_score(
    ctx: &ScoringContext,
    trajectory: &Trajectory,
    environment: &Environment,
    agents: &[AgentSpec],
    weights: &WeightVector,
) -> Result<f64> {
    Ok(
        CandidateScores::compute(ctx, trajectory, environment, agents)?
            .weighted(weights)?
            .2,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReasonScore {
    pub id: String,
    pub kind: ReasonKind,
    pub alpha: f64,
    #[serde(rename = "F")]
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentReport {
    pub id: String,
    pub weight: f64,
    pub score: f64,
    pub reasons: Vec<ReasonScore>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateReport {
    pub id: String,
    pub agents: Vec<AgentReport>,
    #[serde(rename = "S_w")]
    pub s_w: f64,
    #[serde(rename = "B")]
    pub balance: f64,
    #[serde(rename = "S")]
    pub total: f64,
}

/// Candidate order by descending score, with groups of tied candidates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Ranking {
    pub order: Vec<String>,
    /// Groups of two or more candidates whose scores differ by less than epsilon.
    pub ties: Vec<Vec<String>>,
}

/// Sorts candidates by descending score.
///
/// Candidates within `epsilon` of the best score of their group form a tie
/// group; inside a group candidates are listed in id order.
pub fn rank_candidates(scores: &[(String, f64)], epsilon: f64) -> Result<Ranking> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no candidates to rank".into()));
    }
    if let Some((id, s)) = scores.iter().find(|(_, s)| !s.is_finite()) {
        return Err(Error::InvalidInput(format!("candidate {id} has score {s}")));
    }
    let mut sorted: Vec<&(String, f64)> = scores.iter().collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut groups: Vec<Vec<&(String, f64)>> = Vec::new();
    for entry in sorted {
        match groups.last_mut() {
            Some(group) if group[0].1 - entry.1 < epsilon => group.push(entry),
            _ => groups.push(vec![entry]),
        }
    }
    let mut order = Vec::with_capacity(scores.len());
    let mut ties = Vec::new();
    for mut group in groups {
        group.sort_by(|a, b| a.0.cmp(&b.0));
        let ids: Vec<String> = group.iter().map(|e| e.0.clone()).collect();
        if ids.len() > 1 {
            ties.push(ids.clone());
        }
        order.extend(ids);
    }
    Ok(Ranking { order, ties })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub agents: Vec<String>,
    pub weights: Vec<f64>,
    pub ideal_weights: Vec<f64>,
    #[serde(rename = "B")]
    pub balance: f64,
    pub tie_epsilon: f64,
    pub candidates: Vec<CandidateReport>,
    pub ranking: Vec<String>,
    pub ties: Vec<Vec<String>>,
}

impl EvaluationReport {
    pub fn candidate(&self, id: &str) -> Option<&CandidateReport> {
        self.candidates.iter().find(|c| c.id == id)
    }
}

/// Scores every candidate and ranks them.
pub fn evaluate(
    ctx: &ScoringContext,
    candidates: &[Trajectory],
    environment: &Environment,
    agents: &[AgentSpec],
    weights: &WeightVector,
    tie_epsilon: f64,
) -> Result<EvaluationReport> {
    let scores = candidates
        .iter()
        .map(|t| CandidateScores::compute(ctx, t, environment, agents))
        .collect::<Result<Vec<_>>>()?;
    report_from_scores(&scores, agents, weights, tie_epsilon)
}

pub fn report_from_scores(
    scores: &[CandidateScores],
    agents: &[AgentSpec],
    weights: &WeightVector,
    tie_epsilon: f64,
) -> Result<EvaluationReport> {
    if agents.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} agents but {} weights",
            agents.len(),
            weights.len()
        )));
    }
    let mut reports = Vec::with_capacity(scores.len());
    for cs in scores {
        let (s_w, b, s) = cs.weighted(weights)?;
        let agent_reports = agents
            .iter()
            .enumerate()
            .map(|(i, agent)| AgentReport {
                id: agent.id().to_owned(),
                weight: weights.w()[i],
                score: cs.agent_scores[i],
                reasons: agent
                    .reasons()
                    .iter()
                    .zip(&cs.reason_scores[i])
                    .map(|(r, f)| ReasonScore {
                        id: r.id.clone(),
                        kind: r.kind,
                        alpha: r.alpha,
                        f: *f,
                    })
                    .collect(),
            })
            .collect();
        reports.push(CandidateReport {
            id: cs.id.clone(),
            agents: agent_reports,
            s_w,
            balance: b,
            total: s,
        });
    }
    let pairs: Vec<(String, f64)> = reports.iter().map(|r| (r.id.clone(), r.total)).collect();
    let ranking = rank_candidates(&pairs, tie_epsilon)?;
    Ok(EvaluationReport {
        agents: agents.iter().map(|a| a.id().to_owned()).collect(),
        weights: weights.w().to_vec(),
        ideal_weights: weights.w_star().to_vec(),
        balance: balance(weights),
        tie_epsilon,
        candidates: reports,
        ranking: ranking.order,
        ties: ranking.ties,
    })
}

/// Unified score of every trajectory prefix `[0, l]`, for score-over-time views.
pub fn score_timeline(
    ctx: &ScoringContext,
    trajectory: &Trajectory,
    environment: &Environment,
    agents: &[AgentSpec],
    weights: &WeightVector,
) -> Result<Vec<f64>> {
    let mut steps: BTreeMap<ReasonKind, Vec<f64>> = BTreeMap::new();
    for agent in agents {
        for reason in agent.reasons() {
            if let std::collections::btree_map::Entry::Vacant(slot) = steps.entry(reason.kind) {
                slot.insert(reason_step_scores(
                    ctx,
                    trajectory,
                    environment,
                    reason.kind,
                )?);
            }
        }
    }
    let b = balance(weights);
    let mut running: BTreeMap<ReasonKind, f64> = steps.keys().map(|k| (*k, 0.0)).collect();
    let mut out = Vec::with_capacity(trajectory.len());
    for (l, count) in (0..trajectory.len()).zip(1u32..) {
        for (kind, sum) in running.iter_mut() {
            *sum += steps[kind][l];
        }
        let count = f64::from(count);
        let agent_scores = agents
            .iter()
            .map(|a| {
                let fs: Vec<f64> = a
                    .reasons()
                    .iter()
                    .map(|r| running[&r.kind] / count)
                    .collect();
                agent_score(&fs, &a.alphas())
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(b * unbalanced_score(&agent_scores, weights)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_uniform_weights;
    use proptest::prelude::*;

    fn uniform3(w: [f64; 3]) -> WeightVector {
        WeightVector::with_uniform_ideal(w.to_vec()).unwrap()
    }

    #[test]
    fn agent_score_examples() {
        assert_eq!(agent_score(&[0.7], &[1.0]).unwrap(), 0.7);
        assert_eq!(agent_score(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 0.5);
        assert!((agent_score(&[0.5, 0.25], &[0.2, 0.8]).unwrap() - 0.30).abs() < 1e-12);
        assert!(agent_score(&[0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn unbalanced_examples() {
        let u = make_uniform_weights(3).unwrap();
        assert_eq!(unbalanced_score(&[1.0; 3], &u).unwrap(), 1.0);
        assert_eq!(
            unbalanced_score(&[1.0; 3], &uniform3([0.2, 0.5, 0.3])).unwrap(),
            1.0
        );
        assert!((unbalanced_score(&[0.9, 0.6, 0.3], &u).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(
            unbalanced_score(&[0.4, 0.9, 0.9], &uniform3([1.0, 0.0, 0.0])).unwrap(),
            0.4
        );
        assert!(unbalanced_score(&[0.4, 0.9], &u).is_err());
    }

    #[test]
    fn balance_examples() {
        assert_eq!(balance(&make_uniform_weights(3).unwrap()), 1.0);
        // 0.6 * (1 - sqrt(24) / 15), worked by hand.
        let expected = 0.6 * (1.0 - 24f64.sqrt() / 15.0);
        let b = balance(&uniform3([0.2, 0.6, 0.2]));
        assert!((b - expected).abs() < 1e-12);
        assert!((b - 0.404041).abs() < 1e-6);
        assert_eq!(balance(&uniform3([0.0, 0.5, 0.5])), 0.0);
        assert!(balance_of(&[0.5, 0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn ranking_examples() {
        let s = |v: [f64; 4]| -> Vec<(String, f64)> {
            v.iter()
                .enumerate()
                .map(|(i, x)| (format!("T{}", i + 1), *x))
                .collect()
        };
        let r = rank_candidates(&s([0.8, 0.6, 0.7, 0.5]), TIE_EPSILON).unwrap();
        assert_eq!(r.order, ["T1", "T3", "T2", "T4"]);
        assert!(r.ties.is_empty());

        let r = rank_candidates(&s([0.0; 4]), TIE_EPSILON).unwrap();
        assert_eq!(r.ties, vec![vec!["T1", "T2", "T3", "T4"]]);

        let r = rank_candidates(&s([0.7, 0.7, 0.2, 0.1]), TIE_EPSILON).unwrap();
        assert_eq!(r.order, ["T1", "T2", "T3", "T4"]);
        assert_eq!(r.ties, vec![vec!["T1", "T2"]]);

        assert!(rank_candidates(&[], TIE_EPSILON).is_err());
    }

    #[test]
    fn tie_group_is_listed_in_id_order() {
        let scores = vec![("b".to_owned(), 0.5), ("a".to_owned(), 0.5 - 1e-12)];
        let r = rank_candidates(&scores, TIE_EPSILON).unwrap();
        assert_eq!(r.order, ["a", "b"]);
    }

    fn simplex() -> impl Strategy<Value = [f64; 3]> {
        (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            [lo, hi - lo, 1.0 - hi]
        })
    }

    proptest! {
        #[test]
        fn balance_in_unit_interval(w in simplex()) {
            if let Ok(wv) = WeightVector::with_uniform_ideal(w.to_vec()) {
                let b = balance(&wv);
                prop_assert!((0.0..=1.0).contains(&b));
            }
        }

        #[test]
        fn balance_permutation_invariant(w in simplex()) {
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let base = balance_of(&w, &[1.0 / 3.0; 3]).unwrap();
            for p in perms {
                let v = [w[p[0]], w[p[1]], w[p[2]]];
                prop_assert!((balance_of(&v, &[1.0 / 3.0; 3]).unwrap() - base).abs() < 1e-12);
            }
        }

        #[test]
        fn balance_below_one_away_from_ideal(w in simplex()) {
            let dev: f64 = w.iter().map(|x| (x - 1.0 / 3.0).abs()).sum();
            prop_assume!(dev > 1e-6);
            prop_assert!(balance_of(&w, &[1.0 / 3.0; 3]).unwrap() < 1.0);
        }

        #[test]
        fn ranking_is_a_permutation(scores in proptest::collection::vec(0.0f64..1.0, 1..8)) {
            let pairs: Vec<(String, f64)> =
                scores.iter().enumerate().map(|(i, s)| (format!("c{i}"), *s)).collect();
            let r = rank_candidates(&pairs, TIE_EPSILON).unwrap();
            let mut ids = r.order.clone();
            ids.sort();
            let mut expected: Vec<String> = pairs.iter().map(|p| p.0.clone()).collect();
            expected.sort();
            prop_assert_eq!(ids, expected);
            for w in r.order.windows(2) {
                let a = pairs.iter().find(|p| p.0 == w[0]).unwrap().1;
                let b = pairs.iter().find(|p| p.0 == w[1]).unwrap().1;
                prop_assert!(a >= b || (b - a) < TIE_EPSILON);
            }
        }

        #[test]
        fn positive_scaling_keeps_ranking(scores in proptest::collection::vec(0.0f64..1.0, 1..8), scale in 0.01f64..1.0) {
            let pairs: Vec<(String, f64)> =
                scores.iter().enumerate().map(|(i, s)| (format!("c{i}"), *s)).collect();
            let scaled: Vec<(String, f64)> = pairs.iter().map(|(i, s)| (i.clone(), s * scale)).collect();
            // Exact comparison only; epsilon grouping is scale dependent.
            let a = rank_candidates(&pairs, 0.0).unwrap();
            let b = rank_candidates(&scaled, 0.0).unwrap();
            prop_assert_eq!(a.order, b.order);
        }
    }
}
