//! Per-step reward vector: a safety component driven by collision and
//! near-collision events and a speed component driven by the gap to the
//! reference speed.

use serde::{Deserialize, Serialize};

use crate::{math, Error, Result};

/// Safety-relevant outcome of one simulator step. `NearCollision` carries the
/// distance to the nearest front crossing pedestrian; a collision always wins
/// over a near collision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SafetyEvent {
    Collision,
    NearCollision { distance: f64 },
    Clear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    pub safety: f64,
    pub speed: f64,
}

/// Sign convention for the near-collision penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyShape {
    /// -exp((d_p - d_r)/d_r): the published formula with its sign flipped so
    /// it acts as a penalty. Most negative at the far edge of the range.
    #[default]
    LiteralNegated,
    /// -exp((d_r - d_p)/d_r)/e: same range [-1, 0), but grows more negative as
    /// the pedestrian gets closer.
    ProximityIncreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyParams {
    /// Collision penalty r_c, strictly negative.
    pub collision_penalty: f64,
    /// Maximum deceleration a_max in m/s², tied to the brake action.
    pub max_decel: f64,
    /// Minimum safety distance d_0 in meters.
    pub min_safety_distance: f64,
    pub shape: PenaltyShape,
}

impl Default for SafetyParams {
    fn default() -> Self {
        SafetyParams {
            collision_penalty: -4.0,
            max_decel: 5.0,
            min_safety_distance: 2.0,
            shape: PenaltyShape::default(),
        }
    }
}

impl SafetyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.collision_penalty < 0.0) {
            return Err(Error::config("collision penalty must be negative"));
        }
        if !(self.max_decel > 0.0) {
            return Err(Error::config("max decel must be positive"));
        }
        if !(self.min_safety_distance > 0.0) {
            return Err(Error::config("min safety distance must be positive"));
        }
        Ok(())
    }
}

/// Direction of the speed reward's middle branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMode {
    /// λ·(v_ref − v_ev) on (0, v_ref]: the published formula, which rewards
    /// driving slower.
    #[default]
    Literal,
    /// λ·v_ev on (0, v_ref]: rewards driving closer to the reference speed.
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RewardConfig {
    pub safety: SafetyParams,
    pub speed_mode: SpeedMode,
}

/// Speed-dependent braking horizon d_r = max(v²/(2·a_max), d_0).
pub fn dynamic_range(v_ev: f64, params: &SafetyParams) -> Result<f64> {
    if !v_ev.is_finite() || v_ev < 0.0 {
        return Err(Error::invalid(format_args!("speed must be non-negative, got {v_ev}")));
    }
    Ok((v_ev * v_ev / (2.0 * params.max_decel)).max(params.min_safety_distance))
}

/// Penalty for a pedestrian at distance d_p within the braking horizon d_r.
/// Requires 0 < d_p <= d_r; the caller must emit `Clear` otherwise.
pub fn near_collision_penalty(d_p: f64, d_r: f64, params: &SafetyParams) -> Result<f64> {
    if !d_p.is_finite() || !d_r.is_finite() || d_p <= 0.0 || d_r <= 0.0 {
        return Err(Error::invalid(format_args!(
            "near-collision distances must be positive, got d_p={d_p} d_r={d_r}"
        )));
    }
    if d_p > d_r {
        return Err(Error::contract(format_args!(
            "pedestrian at {d_p} m is outside the dynamic range {d_r} m"
        )));
    }
    Ok(match params.shape {
        PenaltyShape::LiteralNegated => -math::exp((d_p - d_r) / d_r),
        PenaltyShape::ProximityIncreasing => -math::exp((d_r - d_p) / d_r) / core::f64::consts::E,
    })
}

/// Safety component of the reward vector.
pub fn safety_reward(event: &SafetyEvent, v_ev: f64, params: &SafetyParams) -> Result<f64> {
    match event {
        SafetyEvent::Collision => Ok(params.collision_penalty),
        SafetyEvent::NearCollision { distance } => {
            let d_r = dynamic_range(v_ev, params)?;
            near_collision_penalty(*distance, d_r, params)
        }
        SafetyEvent::Clear => Ok(0.0),
    }
}

/// Speed component with the published middle branch.
pub fn speed_reward(v_ev: f64, v_ref: f64) -> Result<f64> {
    speed_reward_mode(v_ev, v_ref, SpeedMode::Literal)
}

pub fn speed_reward_mode(v_ev: f64, v_ref: f64, mode: SpeedMode) -> Result<f64> {
    if !v_ref.is_finite() || v_ref <= 0.0 {
        return Err(Error::invalid(format_args!("reference speed must be positive, got {v_ref}")));
    }
    if !v_ev.is_finite() {
        return Err(Error::invalid("speed must be finite"));
    }
    let lambda = 1.0 / v_ref;
    Ok(if v_ev <= 0.0 {
        -1.0
    } else if v_ev <= v_ref {
        match mode {
            SpeedMode::Literal => lambda * (v_ref - v_ev),
            SpeedMode::Corrected => lambda * v_ev,
        }
    } else {
        -0.5
    })
}

/// The full per-step reward vector.
pub fn reward_vector(
    event: &SafetyEvent,
    v_ev: f64,
    v_ref: f64,
    cfg: &RewardConfig,
) -> Result<RewardVector> {
    Ok(RewardVector {
        safety: safety_reward(event, v_ev, &cfg.safety)?,
        speed: speed_reward_mode(v_ev, v_ref, cfg.speed_mode)?,
    })
}

/// Summed reward for the single-objective baseline.
pub fn scalarize(r: RewardVector) -> f64 {
    r.safety + r.speed
}
