//! The rural overtaking scene: a two-lane road, a slow cyclist in the right
//! lane and four parametric ego candidates (three overtakes of increasing
//! lateral clearance and one that stays behind).
//!
//! Coordinates: `x` runs along the road in the direction of travel, `y` is
//! lateral and increases to the left. The right lane spans
//! `[centerline_y - lane_width, centerline_y]`, the oncoming lane lies above
//! the divider. The ego starts at `x = 0` in the centre of the right lane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    wrap_angle, AgentKind, AgentTrack, EgoState, EnvAgentState, Environment, Trajectory,
};

pub const KMH: f64 = 1.0 / 3.6;

/// Substeps used when integrating longitudinal position over one sample.
const INTEGRATION_SUBSTEPS: usize = 20;

/// Lateral profile: each logistic transition covers 1% to 99% of the
/// shift within `lane_change_duration`.
const LOGISTIC_SPAN: f64 = 99.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoadModel {
    pub total_width: f64,
    pub lane_width: f64,
    /// Lateral position of the lane divider.
    pub centerline_y: f64,
    /// m/s
    pub speed_limit: f64,
    pub length: f64,
}

impl RoadModel {
    pub fn right_lane_center(&self) -> f64 {
        self.centerline_y - 0.5 * self.lane_width
    }

    pub fn left_boundary(&self) -> f64 {
        self.centerline_y + self.lane_width
    }

    pub fn right_boundary(&self) -> f64 {
        self.centerline_y - self.lane_width
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStyle {
    SmallGap,
    MediumGap,
    LargeGap,
    Follow,
}

impl CandidateStyle {
    pub fn is_overtake(&self) -> bool {
        !matches!(self, CandidateStyle::Follow)
    }
}

/// Shape parameters of one generated candidate.
///
/// Overtaking styles use `lateral_clearance` (gap between the ego's right
/// side and the cyclist at the passing instant), `overtake_speed_kmh`,
/// `encroachment_duration` (spacing of the two lateral transitions, centred
/// on the passing instant) and `lane_change_duration`. `Follow` uses only
/// `follow_gap`, the reference-point distance held behind the cyclist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateParams {
    pub id: String,
    pub style: CandidateStyle,
    #[serde(default)]
    pub lateral_clearance: f64,
    #[serde(default)]
    pub overtake_speed_kmh: f64,
    #[serde(default)]
    pub encroachment_duration: f64,
    #[serde(default)]
    pub lane_change_duration: f64,
    #[serde(default)]
    pub follow_gap: f64,
}

impl CandidateParams {
    pub fn overtake(
        id: &str,
        style: CandidateStyle,
        lateral_clearance: f64,
        overtake_speed_kmh: f64,
        encroachment_duration: f64,
        lane_change_duration: f64,
    ) -> Self {
        CandidateParams {
            id: id.to_owned(),
            style,
            lateral_clearance,
            overtake_speed_kmh,
            encroachment_duration,
            lane_change_duration,
            follow_gap: 0.0,
        }
    }

    pub fn follow(id: &str, follow_gap: f64) -> Self {
        CandidateParams {
            id: id.to_owned(),
            style: CandidateStyle::Follow,
            lateral_clearance: 0.0,
            overtake_speed_kmh: 0.0,
            encroachment_duration: 0.0,
            lane_change_duration: 0.0,
            follow_gap,
        }
    }

    pub fn overtake_speed(&self) -> f64 {
        self.overtake_speed_kmh * KMH
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "candidate {}: {name} must be positive, got {v}",
                    self.id
                )))
            }
        };
        if self.style.is_overtake() {
            positive("lateral_clearance", self.lateral_clearance)?;
            positive("overtake_speed_kmh", self.overtake_speed_kmh)?;
            positive("encroachment_duration", self.encroachment_duration)?;
            positive("lane_change_duration", self.lane_change_duration)?;
        } else {
            positive("follow_gap", self.follow_gap)?;
            if self.lateral_clearance != 0.0 || self.encroachment_duration != 0.0 {
                return Err(Error::Config(format!(
                    "candidate {}: a following candidate has no clearance or encroachment",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// Everything needed to rebuild the scene and its candidates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// s
    pub horizon: f64,
    /// s
    pub dt: f64,
    pub total_width: f64,
    pub lane_width: f64,
    pub centerline_y: f64,
    pub road_length: f64,
    pub speed_limit_kmh: f64,
    pub cyclist_speed_kmh: f64,
    /// Lateral position of the cyclist.
    pub cyclist_y: f64,
    /// Initial longitudinal distance from ego to cyclist (m).
    pub initial_gap: f64,
    pub ego_speed_kmh: f64,
    pub vehicle_width: f64,
    /// Bound on longitudinal acceleration magnitude (m/s^2).
    pub max_accel: f64,
    pub candidates: Vec<CandidateParams>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            horizon: 20.0,
            dt: 0.1,
            total_width: 7.0,
            lane_width: 3.5,
            centerline_y: 0.0,
            road_length: 250.0,
            speed_limit_kmh: 30.0,
            cyclist_speed_kmh: 5.0,
            cyclist_y: -1.75,
            initial_gap: 15.0,
            ego_speed_kmh: 30.0,
            vehicle_width: 1.8,
            max_accel: 2.5,
            candidates: default_candidates(),
        }
    }
}

pub fn default_candidates() -> Vec<CandidateParams> {
    vec![
        CandidateParams::overtake("T1", CandidateStyle::SmallGap, 0.8, 30.0, 3.0, 2.0),
        CandidateParams::overtake("T2", CandidateStyle::MediumGap, 1.5, 16.0, 3.0, 3.0),
        CandidateParams::overtake("T3", CandidateStyle::LargeGap, 2.5, 14.0, 5.0, 4.0),
        CandidateParams::follow("T4", 5.0),
    ]
}

impl ScenarioConfig {
    /// Number of samples per trajectory, `p + 1`.
    pub fn sample_count(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        let steps = (self.horizon / self.dt).round();
        if (steps * self.dt - self.horizon).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "horizon {} is not a whole number of dt {} steps",
                self.horizon, self.dt
            )));
        }
        Ok(steps as usize + 1)
    }

    pub fn road(&self) -> Result<RoadModel> {
        let positive = [
            ("total_width", self.total_width),
            ("lane_width", self.lane_width),
            ("road_length", self.road_length),
            ("speed_limit_kmh", self.speed_limit_kmh),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if (self.total_width - 2.0 * self.lane_width).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "total_width {} must equal two lanes of {}",
                self.total_width, self.lane_width
            )));
        }
        if !self.centerline_y.is_finite() {
            return Err(Error::Config("centerline_y must be finite".into()));
        }
        Ok(RoadModel {
            total_width: self.total_width,
            lane_width: self.lane_width,
            centerline_y: self.centerline_y,
            speed_limit: self.speed_limit_kmh * KMH,
            length: self.road_length,
        })
    }

    fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }
}

/// Lateral margin between the ego's left edge and the lane divider.
///
/// Positive while the whole vehicle is in the right lane; negative, with the
/// encroachment depth as magnitude, once the left edge crosses the divider.
pub fn signed_lane_distance(state: &EgoState, road: &RoadModel, vehicle_width: f64) -> Result<f64> {
    if !(vehicle_width.is_finite() && vehicle_width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "vehicle width must be positive, got {vehicle_width}"
        )));
    }
    if !state.y.is_finite() {
        return Err(Error::InvalidInput(
            "ego lateral position is not finite".into(),
        ));
    }
    Ok(road.centerline_y - (state.y + 0.5 * vehicle_width))
}

/// Euclidean distance between the ego and another agent's reference point.
pub fn agent_distance(state: &EgoState, other: &EnvAgentState) -> Result<f64> {
    if (state.t - other.t).abs() > crate::model::TIME_TOLERANCE {
        return Err(Error::InvalidInput(format!(
            "distance requested between states at t={} and t={}",
            state.t, other.t
        )));
    }
    Ok((state.x - other.x).hypot(state.y - other.y))
}

/// Lateral-only variant of [`agent_distance`].
pub fn lateral_distance(state: &EgoState, other: &EnvAgentState) -> Result<f64> {
    if (state.t - other.t).abs() > crate::model::TIME_TOLERANCE {
        return Err(Error::InvalidInput(format!(
            "distance requested between states at t={} and t={}",
            state.t, other.t
        )));
    }
    Ok((state.y - other.y).abs())
}

/// Builds the road and the cyclist moving at constant speed in the right lane.
pub fn build_scenario(config: &ScenarioConfig) -> Result<(RoadModel, Environment)> {
    let n = config.sample_count()?;
    let road = config.road()?;
    let speed = config.cyclist_speed_kmh * KMH;
    if !(speed.is_finite() && speed >= 0.0) {
        return Err(Error::Config(format!(
            "cyclist speed must be non-negative, got {}",
            config.cyclist_speed_kmh
        )));
    }
    if !(config.cyclist_y > road.right_boundary() && config.cyclist_y < road.centerline_y) {
        return Err(Error::Config(format!(
            "cyclist_y {} is not inside the right lane",
            config.cyclist_y
        )));
    }
    if !(config.initial_gap.is_finite() && config.initial_gap > 0.0) {
        return Err(Error::Config(format!(
            "initial_gap must be positive, got {}",
            config.initial_gap
        )));
    }
    let states: Vec<EnvAgentState> = (0..n)
        .map(|i| {
            let t = config.time(i);
            EnvAgentState {
                t,
                x: config.initial_gap + speed * t,
                y: config.cyclist_y,
                heading: 0.0,
                speed,
                kind: AgentKind::Cyclist,
            }
        })
        .collect();
    if states.last().is_some_and(|s| s.x > road.length) {
        return Err(Error::Config(format!(
            "road length {} is too short for the cyclist over the horizon",
            road.length
        )));
    }
    let track = AgentTrack::new("cyclist", states)?;
    Ok((road, Environment::new(vec![track])))
}

/// Generates one trajectory per configured candidate.
pub fn generate_candidates(
    road: &RoadModel,
    environment: &Environment,
    config: &ScenarioConfig,
) -> Result<Vec<Trajectory>> {
    let n = config.sample_count()?;
    let cyclist = environment
        .of_kind(AgentKind::Cyclist)
        .next()
        .ok_or(Error::MissingAgent("cyclist"))?;
    if cyclist.states().len() != n {
        return Err(Error::Config(format!(
            "cyclist track has {} samples, horizon needs {n}",
            cyclist.states().len()
        )));
    }
    let ego = EgoLimits::new(road, config)?;
    check_clearance_order(&config.candidates)?;

    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(config.candidates.len());
    for params in &config.candidates {
        if !seen.insert(params.id.as_str()) {
            return Err(Error::Config(format!(
                "duplicate candidate id {}",
                params.id
            )));
        }
        params.validate()?;
        let states = if params.style.is_overtake() {
            overtake_states(road, cyclist, config, &ego, params)?
        } else {
            follow_states(cyclist, config, &ego, params)?
        };
        if let Some(s) = states.iter().find(|s| s.x > road.length) {
            return Err(Error::Config(format!(
                "candidate {} leaves the {} m road at t={}",
                params.id, road.length, s.t
            )));
        }
        out.push(Trajectory::new(params.id.clone(), config.dt, states)?);
    }
    Ok(out)
}

fn check_clearance_order(candidates: &[CandidateParams]) -> Result<()> {
    let clearance = |style| {
        candidates
            .iter()
            .filter(move |c| c.style == style)
            .map(|c| c.lateral_clearance)
    };
    let ordered = [
        (CandidateStyle::SmallGap, CandidateStyle::MediumGap),
        (CandidateStyle::MediumGap, CandidateStyle::LargeGap),
        (CandidateStyle::SmallGap, CandidateStyle::LargeGap),
    ];
    for (narrow, wide) in ordered {
        for a in clearance(narrow) {
            for b in clearance(wide) {
                if a >= b {
                    return Err(Error::Config(format!(
                        "{narrow:?} clearance {a} must be smaller than {wide:?} clearance {b}"
                    )));
                }
            }
        }
    }
    Ok(())
}

struct EgoLimits {
    start_speed: f64,
    start_y: f64,
    max_accel: f64,
    speed_limit: f64,
    width: f64,
}

impl EgoLimits {
    fn new(road: &RoadModel, config: &ScenarioConfig) -> Result<Self> {
        let start_speed = config.ego_speed_kmh * KMH;
        if !(start_speed.is_finite() && start_speed >= 0.0) || start_speed > road.speed_limit + 1e-9
        {
            return Err(Error::Config(format!(
                "ego speed {} km/h must be within [0, speed limit]",
                config.ego_speed_kmh
            )));
        }
        if !(config.max_accel.is_finite() && config.max_accel > 0.0) {
            return Err(Error::Config(format!(
                "max_accel must be positive, got {}",
                config.max_accel
            )));
        }
        if !(config.vehicle_width.is_finite()
            && config.vehicle_width > 0.0
            && config.vehicle_width < road.lane_width)
        {
            return Err(Error::Config(format!(
                "vehicle width {} must be positive and narrower than a lane",
                config.vehicle_width
            )));
        }
        Ok(EgoLimits {
            start_speed: start_speed.min(road.speed_limit),
            start_y: road.right_lane_center(),
            max_accel: config.max_accel,
            speed_limit: road.speed_limit,
            width: config.vehicle_width,
        })
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Smooth out-and-back lateral shift: two logistic transitions
/// `encroachment` seconds apart, centred on `t_pass`, normalised so the
/// shift at `t_pass` equals `amplitude` exactly.
#[derive(Clone, Copy, Debug)]
struct LateralProfile {
    amplitude: f64,
    t_pass: f64,
    half_span: f64,
    steepness: f64,
    norm: f64,
}

impl LateralProfile {
    fn new(amplitude: f64, t_pass: f64, encroachment: f64, lane_change: f64) -> Self {
        let steepness = 2.0 * LOGISTIC_SPAN.ln() / lane_change;
        let half_span = 0.5 * encroachment;
        let norm = logistic(steepness * half_span) - logistic(-steepness * half_span);
        LateralProfile {
            amplitude,
            t_pass,
            half_span,
            steepness,
            norm,
        }
    }

    fn flat() -> Self {
        LateralProfile {
            amplitude: 0.0,
            t_pass: 0.0,
            half_span: 1.0,
            steepness: 1.0,
            norm: 1.0,
        }
    }

    fn offset(&self, t: f64) -> f64 {
        let a = self.steepness * (t - self.t_pass + self.half_span);
        let b = self.steepness * (t - self.t_pass - self.half_span);
        self.amplitude * (logistic(a) - logistic(b)) / self.norm
    }

    fn rate(&self, t: f64) -> f64 {
        let d = |z: f64| {
            let s = logistic(z);
            s * (1.0 - s)
        };
        let a = self.steepness * (t - self.t_pass + self.half_span);
        let b = self.steepness * (t - self.t_pass - self.half_span);
        self.amplitude * self.steepness * (d(a) - d(b)) / self.norm
    }
}

/// Path speed ramping from `v0` to `v1` at `accel`, then constant.
fn ramp_speed(v0: f64, v1: f64, accel: f64, t: f64) -> f64 {
    let ramp = (v1 - v0).abs() / accel;
    if t >= ramp {
        v1
    } else {
        v0 + (v1 - v0).signum() * accel * t
    }
}

fn overtake_states(
    road: &RoadModel,
    cyclist: &AgentTrack,
    config: &ScenarioConfig,
    ego: &EgoLimits,
    params: &CandidateParams,
) -> Result<Vec<EgoState>> {
    let speed = params.overtake_speed();
    if speed > ego.speed_limit + 1e-9 {
        return Err(Error::Config(format!(
            "candidate {}: overtake speed {} km/h exceeds the speed limit",
            params.id, params.overtake_speed_kmh
        )));
    }
    let cyclist_speed = cyclist.states()[0].speed;
    if speed <= cyclist_speed {
        return Err(Error::Config(format!(
            "candidate {}: overtake speed must exceed the cyclist's",
            params.id
        )));
    }
    let cyclist_y = cyclist.states()[0].y;
    let pass_y = cyclist_y + params.lateral_clearance + 0.5 * ego.width;
    if pass_y + 0.5 * ego.width > road.left_boundary() {
        return Err(Error::Config(format!(
            "candidate {}: clearance {} m pushes the ego past the road edge",
            params.id, params.lateral_clearance
        )));
    }
    let amplitude = pass_y - ego.start_y;
    let speed_at = |t: f64| ramp_speed(ego.start_speed, speed, ego.max_accel, t);

    // The passing instant depends on the lateral profile through the path
    // geometry, so iterate to a fixed point.
    let mut lateral = LateralProfile::flat();
    let mut t_pass = None;
    for _ in 0..50 {
        let xs = integrate_longitudinal(config, &speed_at, &lateral, &params.id)?;
        let t = passing_time(&xs, cyclist, config.dt).ok_or_else(|| {
            Error::Config(format!(
                "candidate {} does not pass the cyclist within the horizon",
                params.id
            ))
        })?;
        let converged = t_pass.is_some_and(|p: f64| (p - t).abs() < 1e-12);
        t_pass = Some(t);
        lateral = LateralProfile::new(
            amplitude,
            t,
            params.encroachment_duration,
            params.lane_change_duration,
        );
        if converged {
            break;
        }
    }

    let xs = integrate_longitudinal(config, &speed_at, &lateral, &params.id)?;
    let n = xs.len();
    let states = (0..n)
        .map(|i| {
            let t = config.time(i);
            let v = speed_at(t);
            let vy = lateral.rate(t);
            let vx = (v * v - vy * vy).max(0.0).sqrt();
            EgoState::new(
                t,
                xs[i],
                ego.start_y + lateral.offset(t),
                wrap_angle(vy.atan2(vx)),
                v,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(states)
}

/// Longitudinal positions at each sample for a path speed and lateral profile.
fn integrate_longitudinal(
    config: &ScenarioConfig,
    speed_at: &dyn Fn(f64) -> f64,
    lateral: &LateralProfile,
    id: &str,
) -> Result<Vec<f64>> {
    let n = config.sample_count()?;
    let h = config.dt / INTEGRATION_SUBSTEPS as f64;
    let forward = |t: f64| -> Result<f64> {
        let v = speed_at(t);
        let vy = lateral.rate(t);
        if vy.abs() > v {
            return Err(Error::Config(format!(
                "candidate {id}: lateral speed {vy:.3} m/s exceeds path speed {v:.3} m/s at t={t:.2}; \
                 lengthen lane_change_duration"
            )));
        }
        Ok((v * v - vy * vy).sqrt())
    };
    let mut xs = Vec::with_capacity(n);
    let mut x = 0.0;
    xs.push(x);
    for i in 1..n {
        let t0 = config.time(i - 1);
        let mut acc = 0.5 * (forward(t0)? + forward(config.time(i))?);
        for j in 1..INTEGRATION_SUBSTEPS {
            acc += forward(t0 + j as f64 * h)?;
        }
        x += acc * h;
        xs.push(x);
    }
    Ok(xs)
}

/// First time the ego's x reaches the cyclist's, interpolated within a step.
fn passing_time(ego_x: &[f64], cyclist: &AgentTrack, dt: f64) -> Option<f64> {
    let gap = |i: usize| cyclist.states()[i].x - ego_x[i];
    if gap(0) <= 0.0 {
        return None;
    }
    (1..ego_x.len()).find(|&i| gap(i) <= 0.0).map(|i| {
        let (g0, g1) = (gap(i - 1), gap(i));
        cyclist.states()[i - 1].t + dt * g0 / (g0 - g1)
    })
}

fn follow_states(
    cyclist: &AgentTrack,
    config: &ScenarioConfig,
    ego: &EgoLimits,
    params: &CandidateParams,
) -> Result<Vec<EgoState>> {
    let first = cyclist.states()[0];
    let vc = first.speed;
    let gap0 = first.x;
    let closing = ego.start_speed - vc;
    if closing <= 0.0 {
        return Err(Error::Config(format!(
            "candidate {}: the ego must start faster than the cyclist",
            params.id
        )));
    }
    let braking = closing * closing / (2.0 * ego.max_accel);
    let slack = gap0 - params.follow_gap - braking;
    if slack < 0.0 {
        return Err(Error::Config(format!(
            "candidate {}: cannot settle at a {} m gap from {} m without exceeding max_accel",
            params.id, params.follow_gap, gap0
        )));
    }
    let cruise = slack / closing;
    let brake_time = closing / ego.max_accel;
    let v0 = ego.start_speed;
    let a = ego.max_accel;
    let n = config.sample_count()?;
    (0..n)
        .map(|i| {
            let t = config.time(i);
            let (x, v) = if t <= cruise {
                (v0 * t, v0)
            } else if t <= cruise + brake_time {
                let u = t - cruise;
                (v0 * cruise + v0 * u - 0.5 * a * u * u, v0 - a * u)
            } else {
                let u = t - cruise - brake_time;
                (
                    v0 * cruise + v0 * brake_time - 0.5 * a * brake_time * brake_time + vc * u,
                    vc,
                )
            };
            EgoState::new(t, x, ego.start_y, 0.0, v.max(0.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn road() -> RoadModel {
        ScenarioConfig::default().road().unwrap()
    }

    fn ego_at(y: f64) -> EgoState {
        EgoState::new(0.0, 0.0, y, 0.0, 0.0).unwrap()
    }

    fn env_at(x: f64, y: f64) -> EnvAgentState {
        EnvAgentState {
            t: 0.0,
            x,
            y,
            heading: 0.0,
            speed: 0.0,
            kind: AgentKind::Cyclist,
        }
    }

    #[test]
    fn lane_distance_examples() {
        let r = road();
        let d = signed_lane_distance(&ego_at(-1.75), &r, 1.8).unwrap();
        assert!((d - 0.85).abs() < 1e-12);
        assert_eq!(signed_lane_distance(&ego_at(-0.9), &r, 1.8).unwrap(), 0.0);
        let d = signed_lane_distance(&ego_at(0.1), &r, 1.8).unwrap();
        assert!((d + 1.0).abs() < 1e-12);
        assert!(signed_lane_distance(&ego_at(0.0), &r, 0.0).is_err());
    }

    #[test]
    fn agent_distance_examples() {
        let e = EgoState::new(0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(agent_distance(&e, &env_at(3.0, 4.0)).unwrap(), 5.0);
        assert_eq!(agent_distance(&e, &env_at(0.0, 0.0)).unwrap(), 0.0);
        let e = EgoState::new(0.0, 10.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(agent_distance(&e, &env_at(10.0, 1.5)).unwrap(), 1.5);
        let mut late = env_at(0.0, 0.0);
        late.t = 0.1;
        assert!(agent_distance(&e, &late).is_err());
    }

    #[test]
    fn scenario_cyclist() {
        let (road, env) = build_scenario(&ScenarioConfig::default()).unwrap();
        assert!((road.speed_limit - 8.3333).abs() < 1e-4);
        let c = &env.agents()[0];
        assert_eq!(c.states().len(), 201);
        let dx = c.states()[1].x - c.states()[0].x;
        assert!((dx - 0.13889).abs() < 1e-5);
        assert!(env.agents().iter().all(|a| a.kind() == AgentKind::Cyclist));

        let short = ScenarioConfig {
            horizon: 0.1,
            ..Default::default()
        };
        assert_eq!(
            build_scenario(&short).unwrap().1.agents()[0].states().len(),
            2
        );
    }

    #[test]
    fn scenario_rejects_bad_geometry() {
        let bad = ScenarioConfig {
            total_width: 8.0,
            ..Default::default()
        };
        assert!(matches!(build_scenario(&bad), Err(Error::Config(_))));
        let bad = ScenarioConfig {
            horizon: 0.15,
            ..Default::default()
        };
        assert!(build_scenario(&bad).is_err());
    }

    #[test]
    fn clearance_beyond_road_is_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.candidates[2].lateral_clearance = 4.0;
        let (road, env) = build_scenario(&cfg).unwrap();
        let err = generate_candidates(&road, &env, &cfg).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn clearance_order_is_enforced() {
        let mut cfg = ScenarioConfig::default();
        cfg.candidates[1].lateral_clearance = 0.5;
        let (road, env) = build_scenario(&cfg).unwrap();
        assert!(generate_candidates(&road, &env, &cfg).is_err());
    }

    #[test]
    fn steep_lane_change_is_infeasible() {
        let mut cfg = ScenarioConfig::default();
        cfg.candidates[2].lane_change_duration = 0.5;
        let (road, env) = build_scenario(&cfg).unwrap();
        assert!(generate_candidates(&road, &env, &cfg).is_err());
    }

    #[test]
    fn follow_gap_needs_braking_room() {
        let mut cfg = ScenarioConfig::default();
        cfg.candidates[3].follow_gap = 10.0;
        let (road, env) = build_scenario(&cfg).unwrap();
        assert!(generate_candidates(&road, &env, &cfg).is_err());
    }

    #[test]
    fn lateral_profile_hits_amplitude_at_pass() {
        let p = LateralProfile::new(2.0, 5.0, 3.0, 2.0);
        assert!((p.offset(5.0) - 2.0).abs() < 1e-12);
        assert!(p.offset(0.0).abs() < 1e-3);
        assert!(p.offset(10.0).abs() < 1e-3);
        let h = 1e-6;
        let fd = (p.offset(4.0 + h) - p.offset(4.0 - h)) / (2.0 * h);
        assert!((fd - p.rate(4.0)).abs() < 1e-6);
    }
}
