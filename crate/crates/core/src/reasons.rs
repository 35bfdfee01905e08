//! Per-time-step reason functions for the policymaker, driver and cyclist.
//!
//! All functions are pure. The two follow-time accumulators live in
//! [`FollowClocks`], which the caller threads through a trajectory in time
//! order: each step is scored with the clock value at that step, and the
//! returned clocks are the values for the next step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ReasonParams;

/// Cumulative close-following times (seconds). Never reset within a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FollowClocks {
    /// Time the ego has spent within `d_driver` of the cyclist.
    pub t_elapsed: f64,
    /// Time the ego has spent within `d_th` of the cyclist.
    pub t_follow: f64,
}

impl FollowClocks {
    fn check(&self) -> Result<()> {
        if !(self.t_elapsed >= 0.0 && self.t_follow >= 0.0) {
            return Err(Error::InvalidState(format!(
                "follow clocks must be non-negative, got t_elapsed={} t_follow={}",
                self.t_elapsed, self.t_follow
            )));
        }
        Ok(())
    }
}

/// Geometric quantities a reason function needs at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryInputs {
    /// Signed lateral lane margin (m); negative means encroaching.
    pub d_veh: f64,
    /// Ego to cyclist distance (m).
    pub d_vc: f64,
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    Ok(())
}

fn check_distance(d_vc: f64) -> Result<()> {
    if !d_vc.is_finite() || d_vc < 0.0 {
        return Err(Error::InvalidInput(format!(
            "cyclist distance must be finite and non-negative, got {d_vc}"
        )));
    }
    Ok(())
}

/// Lane compliance: full marks on the legal side, exponential penalty in the
/// depth of encroachment otherwise.
pub fn policymaker_step(g: GeometryInputs, params: &ReasonParams) -> Result<f64> {
    if !g.d_veh.is_finite() {
        return Err(Error::InvalidInput(format!(
            "lane margin must be finite, got {}",
            g.d_veh
        )));
    }
    if g.d_veh > 0.0 {
        Ok(1.0)
    } else {
        Ok((params.k1 * g.d_veh).exp())
    }
}

/// Driver efficiency. Satisfaction decays once the ego has followed within
/// `d_driver` for longer than `t_driver`.
pub fn driver_step(
    g: GeometryInputs,
    clocks: FollowClocks,
    dt: f64,
    params: &ReasonParams,
) -> Result<(f64, FollowClocks)> {
    check_dt(dt)?;
    check_distance(g.d_vc)?;
    clocks.check()?;
    let score = if clocks.t_elapsed < params.t_driver || g.d_vc > params.d_driver {
        1.0
    } else {
        (-params.k2 * (clocks.t_elapsed - params.t_driver)).exp()
    };
    let mut next = clocks;
    if g.d_vc <= params.d_driver {
        next.t_elapsed += dt;
    }
    Ok((score, next))
}

/// Cyclist spatial safety.
pub fn cyclist_safety(g: GeometryInputs, params: &ReasonParams) -> Result<f64> {
    check_distance(g.d_vc)?;
    if g.d_vc > params.d_th {
        Ok(1.0)
    } else {
        Ok((-params.k3 * (params.d_th - g.d_vc)).exp())
    }
}

/// Cyclist temporal comfort, driven by the `t_follow` clock.
pub fn cyclist_comfort(
    g: GeometryInputs,
    clocks: FollowClocks,
    dt: f64,
    params: &ReasonParams,
) -> Result<(f64, FollowClocks)> {
    check_dt(dt)?;
    check_distance(g.d_vc)?;
    clocks.check()?;
    let score = if clocks.t_follow < params.t_th || g.d_vc > params.d_th {
        1.0
    } else {
        (-params.k4 * (clocks.t_follow - params.t_th)).exp()
    };
    let mut next = clocks;
    if g.d_vc <= params.d_th {
        next.t_follow += dt;
    }
    Ok((score, next))
}

/// Product of cyclist safety and comfort.
pub fn cyclist_step(
    g: GeometryInputs,
    clocks: FollowClocks,
    dt: f64,
    params: &ReasonParams,
) -> Result<(f64, FollowClocks)> {
    let safety = cyclist_safety(g, params)?;
    let (comfort, next) = cyclist_comfort(g, clocks, dt, params)?;
    Ok((safety * comfort, next))
}
