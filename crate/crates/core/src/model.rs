//! Domain types shared by the scoring pipeline.
//!
//! Everything here is validated at construction and immutable afterwards.
//! Invalid inputs are rejected, never repaired: a trajectory with uneven
//! spacing is an error, not something to resample, and a weight vector that
//! does not sum to one is an error, not something to renormalize.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on timestamps when checking spacing and alignment (seconds).
pub const TIME_TOLERANCE: f64 = 1e-9;

/// Tolerance on simplex sums (weights and reason alphas).
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

/// One sampled configuration of the ego vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

impl EgoState {
    pub fn new(t: f64, x: f64, y: f64, heading: f64, speed: f64) -> Result<Self> {
        let state = EgoState {
            t,
            x,
            y,
            heading,
            speed,
        };
        state.validate()?;
        Ok(state)
    }

    fn validate(&self) -> Result<()> {
        if ![self.t, self.x, self.y, self.heading, self.speed]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "ego state at t={} has a non-finite field",
                self.t
            )));
        }
        if self.speed < 0.0 {
            return Err(Error::InvalidInput(format!(
                "ego speed {} at t={} is negative",
                self.speed, self.t
            )));
        }
        if !(-PI..PI).contains(&self.heading) {
            return Err(Error::InvalidInput(format!(
                "ego heading {} at t={} outside [-pi, pi)",
                self.heading, self.t
            )));
        }
        Ok(())
    }
}

/// A candidate ego trajectory: uniformly sampled states with a label.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    id: String,
    dt: f64,
    states: Vec<EgoState>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, dt: f64, states: Vec<EgoState>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidInput("trajectory id is empty".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "trajectory {id}: dt must be positive, got {dt}"
            )));
        }
        if states.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "trajectory {id}: needs at least 2 states, got {}",
                states.len()
            )));
        }
        for state in &states {
            state.validate()?;
        }
        check_uniform_spacing(&id, dt, states.iter().map(|s| s.t))?;
        Ok(Trajectory { id, dt, states })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn states(&self) -> &[EgoState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.t)
    }

    /// Same states under a different label.
    pub fn relabeled(&self, id: impl Into<String>) -> Self {
        Trajectory {
            id: id.into(),
            dt: self.dt,
            states: self.states.clone(),
        }
    }
}

fn check_uniform_spacing(id: &str, dt: f64, times: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev: Option<f64> = None;
    for (i, t) in times.enumerate() {
        if let Some(p) = prev {
            if ((t - p) - dt).abs() > TIME_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "trajectory {id}: spacing {} at index {i} differs from dt {dt}",
                    t - p
                )));
            }
        }
        prev = Some(t);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Cyclist,
    Vehicle,
    Pedestrian,
}

impl AgentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentKind::Cyclist => "cyclist",
            AgentKind::Vehicle => "vehicle",
            AgentKind::Pedestrian => "pedestrian",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cyclist" => Ok(AgentKind::Cyclist),
            "vehicle" => Ok(AgentKind::Vehicle),
            "pedestrian" => Ok(AgentKind::Pedestrian),
            other => Err(Error::InvalidInput(format!("unknown agent kind {other:?}"))),
        }
    }
}

/// One sampled state of a dynamic road user other than the ego vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvAgentState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub kind: AgentKind,
}

/// The full time series of one dynamic agent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentTrack {
    id: String,
    kind: AgentKind,
    states: Vec<EnvAgentState>,
}

impl AgentTrack {
    pub fn new(id: impl Into<String>, states: Vec<EnvAgentState>) -> Result<Self> {
        let id = id.into();
        let Some(first) = states.first() else {
            return Err(Error::InvalidInput(format!("agent {id} has no states")));
        };
        let kind = first.kind;
        for s in &states {
            if ![s.t, s.x, s.y, s.heading, s.speed]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::InvalidInput(format!(
                    "agent {id}: non-finite field at t={}",
                    s.t
                )));
            }
            if s.speed < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "agent {id}: negative speed at t={}",
                    s.t
                )));
            }
            if s.kind != kind {
                return Err(Error::InvalidInput(format!(
                    "agent {id}: kind changes from {kind} to {}",
                    s.kind
                )));
            }
        }
        Ok(AgentTrack { id, kind, states })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn states(&self) -> &[EnvAgentState] {
        &self.states
    }
}

/// All dynamic agents sharing the road with the ego vehicle.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Environment {
    agents: Vec<AgentTrack>,
}

impl Environment {
    pub fn new(agents: Vec<AgentTrack>) -> Self {
        Environment { agents }
    }

    pub fn agents(&self) -> &[AgentTrack] {
        &self.agents
    }

    pub fn of_kind(&self, kind: AgentKind) -> impl Iterator<Item = &AgentTrack> {
        self.agents.iter().filter(move |a| a.kind == kind)
    }
}

/// Checks that every environment agent is sampled at exactly the ego's timestamps.
pub fn validate_alignment(trajectory: &Trajectory, environment: &Environment) -> Result<()> {
    for (q, agent) in environment.agents.iter().enumerate() {
        if agent.states.len() != trajectory.len() {
            return Err(Error::AlignmentLength {
                agent: q,
                expected: trajectory.len(),
                found: agent.states.len(),
            });
        }
        let bad = trajectory
            .timestamps()
            .zip(agent.states.iter().map(|s| s.t))
            .position(|(te, ta)| (te - ta).abs() > TIME_TOLERANCE);
        if let Some(index) = bad {
            return Err(Error::AlignmentTimestamp { agent: q, index });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonKind {
    /// Lane discipline: stay on the legal side of the divider.
    PolicymakerLane,
    /// Travel efficiency: do not linger close behind slow traffic.
    DriverEfficiency,
    /// Cyclist spatial safety times temporal comfort.
    CyclistSafetyComfort,
}

impl ReasonKind {
    pub const ALL: [ReasonKind; 3] = [
        ReasonKind::PolicymakerLane,
        ReasonKind::DriverEfficiency,
        ReasonKind::CyclistSafetyComfort,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ReasonKind::PolicymakerLane => "policymaker_lane",
            ReasonKind::DriverEfficiency => "driver_efficiency",
            ReasonKind::CyclistSafetyComfort => "cyclist_safety_comfort",
        }
    }
}

impl fmt::Display for ReasonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReasonSpec {
    pub id: String,
    pub kind: ReasonKind,
    pub alpha: f64,
}

/// A human agent and the weighted reasons they hold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentSpec {
    id: String,
    reasons: Vec<ReasonSpec>,
}

impl AgentSpec {
    pub fn new(id: impl Into<String>, reasons: Vec<ReasonSpec>) -> Result<Self> {
        let id = id.into();
        if reasons.is_empty() {
            return Err(Error::InvalidArgument(format!("agent {id} has no reasons")));
        }
        for r in &reasons {
            if !(0.0..=1.0).contains(&r.alpha) {
                return Err(Error::InvalidArgument(format!(
                    "agent {id}: reason {} alpha {} outside [0, 1]",
                    r.id, r.alpha
                )));
            }
        }
        let sum: f64 = reasons.iter().map(|r| r.alpha).sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "agent {id}: reason alphas must sum to 1, got {sum}"
            )));
        }
        Ok(AgentSpec { id, reasons })
    }

    /// An agent holding a single reason with alpha = 1.
    pub fn single(id: impl Into<String>, kind: ReasonKind) -> Self {
        AgentSpec {
            id: id.into(),
            reasons: vec![ReasonSpec {
                id: kind.as_str().to_owned(),
                kind,
                alpha: 1.0,
            }],
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn reasons(&self) -> &[ReasonSpec] {
        &self.reasons
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.reasons.iter().map(|r| r.alpha).collect()
    }
}

/// The policymaker / driver / cyclist trio, one reason each.
pub fn default_agents() -> Vec<AgentSpec> {
    vec![
        AgentSpec::single("policymaker", ReasonKind::PolicymakerLane),
        AgentSpec::single("driver", ReasonKind::DriverEfficiency),
        AgentSpec::single("cyclist", ReasonKind::CyclistSafetyComfort),
    ]
}

/// Agent weights on the probability simplex together with the ideal distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightVector {
    w: Vec<f64>,
    w_star: Vec<f64>,
}

impl WeightVector {
    pub fn new(w: Vec<f64>, w_star: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidArgument("weight vector is empty".into()));
        }
        if w.len() != w_star.len() {
            return Err(Error::InvalidArgument(format!(
                "weights have {} entries, ideal distribution has {}",
                w.len(),
                w_star.len()
            )));
        }
        if let Some(v) = w.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("weight {v} outside [0, 1]")));
        }
        if let Some(v) = w_star.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "ideal weight {v} must be strictly positive"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        let sum_star: f64 = w_star.iter().sum();
        if (sum_star - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "ideal weights must sum to 1, got {sum_star}"
            )));
        }
        Ok(WeightVector { w, w_star })
    }

    /// Weights with a uniform ideal distribution.
    pub fn with_uniform_ideal(w: Vec<f64>) -> Result<Self> {
        let n = w.len().max(1);
        WeightVector::new(w, vec![1.0 / n as f64; n])
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

pub fn make_uniform_weights(n: usize) -> Result<WeightVector> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "cannot build weights for zero agents".into(),
        ));
    }
    let u = vec![1.0 / n as f64; n];
    Ok(WeightVector {
        w: u.clone(),
        w_star: u,
    })
}

/// Decay rates and thresholds of the reason functions.
///
/// `k1` and `k3` are per metre, `k2` and `k4` per second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReasonParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    /// Driver follow distance (m).
    pub d_driver: f64,
    /// Driver patience before satisfaction decays (s).
    pub t_driver: f64,
    /// Cyclist safety distance (m).
    pub d_th: f64,
    /// Cyclist tolerance for being followed closely (s).
    pub t_th: f64,
}

impl Default for ReasonParams {
    fn default() -> Self {
        ReasonParams {
            k1: 0.2,
            k2: 0.2,
            k3: 0.2,
            k4: 0.2,
            d_driver: 10.0,
            t_driver: 5.0,
            d_th: 3.0,
            t_th: 3.0,
        }
    }
}

impl ReasonParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
            ("d_driver", self.d_driver),
            ("t_driver", self.t_driver),
            ("d_th", self.d_th),
            ("t_th", self.t_th),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "reason parameter {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ego_track(n: usize, dt: f64, t0: f64) -> Vec<EgoState> {
        (0..n)
            .map(|i| EgoState::new(t0 + i as f64 * dt, i as f64, 0.0, 0.0, 1.0).unwrap())
            .collect()
    }

    fn cyclist_track(n: usize, dt: f64, t0: f64) -> AgentTrack {
        let states = (0..n)
            .map(|i| EnvAgentState {
                t: t0 + i as f64 * dt,
                x: 10.0 + i as f64 * 0.1,
                y: 0.0,
                heading: 0.0,
                speed: 1.0,
                kind: AgentKind::Cyclist,
            })
            .collect();
        AgentTrack::new("c", states).unwrap()
    }

    #[test]
    fn uniform_weights() {
        let w = make_uniform_weights(3).unwrap();
        assert_eq!(w.w(), &[1.0 / 3.0; 3]);
        assert_eq!(w.w_star(), &[1.0 / 3.0; 3]);
        assert_eq!(make_uniform_weights(1).unwrap().w(), &[1.0]);
        assert_eq!(make_uniform_weights(4).unwrap().w(), &[0.25; 4]);
        assert!(matches!(
            make_uniform_weights(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn weights_are_validated_not_renormalized() {
        let err = WeightVector::with_uniform_ideal(vec![0.5, 0.6, 0.2]).unwrap_err();
        assert!(err.to_string().contains("weights must sum to 1"));
        assert!(WeightVector::new(vec![0.5, 0.5], vec![1.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![0.5, 0.5], vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.5], vec![1.0 / 3.0; 3]).is_err());
    }

    #[test]
    fn alignment_ok() {
        let t = Trajectory::new("T1", 0.1, ego_track(51, 0.1, 0.0)).unwrap();
        let env = Environment::new(vec![cyclist_track(51, 0.1, 0.0)]);
        validate_alignment(&t, &env).unwrap();
    }

    #[test]
    fn alignment_length_mismatch_names_agent() {
        let t = Trajectory::new("T1", 0.1, ego_track(51, 0.1, 0.0)).unwrap();
        let env = Environment::new(vec![cyclist_track(50, 0.1, 0.0)]);
        match validate_alignment(&t, &env) {
            Err(Error::AlignmentLength { agent, .. }) => assert_eq!(agent, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn alignment_shifted_timestamps() {
        let t = Trajectory::new("T1", 0.1, ego_track(51, 0.1, 0.0)).unwrap();
        let env = Environment::new(vec![cyclist_track(51, 0.1, 0.05)]);
        match validate_alignment(&t, &env) {
            Err(Error::AlignmentTimestamp { agent, index }) => {
                assert_eq!((agent, index), (0, 0))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trajectory_rejects_uneven_spacing() {
        let mut states = ego_track(5, 0.1, 0.0);
        states[3].t += 0.01;
        assert!(Trajectory::new("T", 0.1, states).is_err());
        assert!(Trajectory::new("T", 0.1, ego_track(1, 0.1, 0.0)).is_err());
    }

    #[test]
    fn state_invariants() {
        assert!(EgoState::new(0.0, 0.0, 0.0, 0.0, -1.0).is_err());
        assert!(EgoState::new(0.0, 0.0, 0.0, PI, 1.0).is_err());
        assert!(EgoState::new(0.0, 0.0, 0.0, -PI, 1.0).is_ok());
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn agent_alphas_must_sum_to_one() {
        let r = |a| ReasonSpec {
            id: "r".into(),
            kind: ReasonKind::PolicymakerLane,
            alpha: a,
        };
        assert!(AgentSpec::new("a", vec![r(0.5), r(0.4)]).is_err());
        assert!(AgentSpec::new("a", vec![r(0.5), r(0.5)]).is_ok());
        assert!(AgentSpec::new("a", vec![]).is_err());
    }

    #[test]
    fn params_strictly_positive() {
        ReasonParams::default().validate().unwrap();
        let p = ReasonParams {
            t_th: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
