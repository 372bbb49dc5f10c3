//! Deterministic 2-D urban micro-simulator: a waypoint-following ego vehicle
//! under longitudinal control among seeded pedestrian traffic.

mod map;
mod pedestrian;

use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use map::{MapSpec, RoadSegment, Semantic};
pub use pedestrian::Pedestrian;

use crate::geom::{OrientedRect, Polyline, Vec2};
use crate::rewards::{dynamic_range, SafetyEvent, SafetyParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Simulation step in seconds.
    pub dt: f64,
    /// Reference (desired) ego speed in m/s.
    pub v_ref: f64,
    /// Physical ego speed cap in m/s; exceeding v_ref is allowed and flagged
    /// by the evaluation metrics.
    pub v_hard_cap: f64,
    /// Pedestrian population maintained around the ego.
    pub max_pedestrians: usize,
    /// Radius of the forward vicinity pedestrians spawn into, meters.
    pub vicinity_radius: f64,
    /// Pedestrians farther than this from the ego are removed, meters.
    pub despawn_radius: f64,
    /// Probability that a spawned pedestrian may cross the road.
    pub crossing_factor: f64,
    /// Episode step cap.
    pub step_cap: usize,
    pub ped_speed_min: f64,
    pub ped_speed_max: f64,
    pub ped_radius: f64,
    /// Std-dev of per-step pedestrian heading noise, degrees.
    pub heading_noise_deg: f64,
    pub ego_length: f64,
    pub ego_width: f64,
    /// New pedestrians appear at least this far from the ego, meters.
    pub min_spawn_distance: f64,
    pub safety: SafetyParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            dt: 0.1,
            v_ref: 8.0,
            v_hard_cap: 15.0,
            max_pedestrians: 30,
            vicinity_radius: 35.0,
            despawn_radius: 40.0,
            crossing_factor: 0.8,
            step_cap: 2000,
            ped_speed_min: 0.4,
            ped_speed_max: 1.2,
            ped_radius: 0.3,
            heading_noise_deg: 5.0,
            ego_length: 4.5,
            ego_width: 2.0,
            min_spawn_distance: 5.0,
            safety: SafetyParams::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::config("dt must be positive"));
        }
        if !(self.v_ref > 0.0) || !(self.v_hard_cap >= self.v_ref) {
            return Err(Error::config("need 0 < v_ref <= v_hard_cap"));
        }
        if !(self.despawn_radius > self.vicinity_radius) {
            return Err(Error::config("despawn radius must exceed vicinity radius"));
        }
        if !(0.0..=1.0).contains(&self.crossing_factor) {
            return Err(Error::config("crossing factor must lie in [0, 1]"));
        }
        if self.step_cap == 0 {
            return Err(Error::config("step cap must be positive"));
        }
        if !(self.ped_speed_min > 0.0 && self.ped_speed_max >= self.ped_speed_min) {
            return Err(Error::config("pedestrian speed range is invalid"));
        }
        if !(self.ped_radius > 0.0 && self.ego_length > 0.0 && self.ego_width > 0.0) {
            return Err(Error::config("agent dimensions must be positive"));
        }
        if !(self.min_spawn_distance >= 0.0 && self.min_spawn_distance < self.vicinity_radius) {
            return Err(Error::config("min spawn distance must lie inside the vicinity"));
        }
        self.safety.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub waypoint_cursor: usize,
    pub footprint_length: f64,
    pub footprint_width: f64,
}

impl EgoState {
    pub fn footprint(&self) -> OrientedRect {
        OrientedRect::new(self.position, self.footprint_length, self.footprint_width, self.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DoneReason {
    Goal,
    Collision,
    StepCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Along-route distance covered this step, meters.
    pub distance: f64,
    /// Ego footprint overlaps an intersection region.
    pub in_intersection: bool,
    /// Along-route distance to the nearest front crossing pedestrian in the
    /// ego lane, if any.
    pub nearest_front_crossing: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub event: SafetyEvent,
    pub done: bool,
    pub reason: Option<DoneReason>,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    map: MapSpec,
    route: Polyline,
    route_len: f64,
    corridor_half: f64,
    rng: ChaCha8Rng,
    ego: EgoState,
    progress: f64,
    pedestrians: Vec<Pedestrian>,
    next_ped_id: u64,
    steps: usize,
    done: Option<DoneReason>,
}

impl Env {
    /// Build a freshly reset environment. The same (config, map, seed) always
    /// produces a bit-identical initial state.
    pub fn reset(config: EnvConfig, map: MapSpec, seed: u64) -> Result<Env> {
        config.validate()?;
        map.validate()?;
        let route = map.route_polyline()?;
        let route_len = route.length();
        let start = route.point_at(0.0);
        let heading = route.heading_at(0.0);
        let mid = route.point_at(route_len / 2.0);
        let corridor_half = map
            .segments
            .iter()
            .min_by(|a, b| a.project(mid).2.partial_cmp(&b.project(mid).2).unwrap())
            .map(|s| s.half_width() / 2.0)
            .unwrap_or(1.75);
        let ego = EgoState {
            position: start,
            heading,
            speed: 0.0,
            waypoint_cursor: 0,
            footprint_length: config.ego_length,
            footprint_width: config.ego_width,
        };
        let mut env = Env {
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
            map,
            route,
            route_len,
            corridor_half,
            ego,
            progress: 0.0,
            pedestrians: Vec::new(),
            next_ped_id: 0,
            steps: 0,
            done: None,
        };
        env.maintain_population();
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn map(&self) -> &MapSpec {
        &self.map
    }

    pub fn ego(&self) -> &EgoState {
        &self.ego
    }

    pub fn pedestrians(&self) -> &[Pedestrian] {
        &self.pedestrians
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn route_progress(&self) -> f64 {
        self.progress
    }

    pub fn route_length(&self) -> f64 {
        self.route_len
    }

    pub fn done_reason(&self) -> Option<DoneReason> {
        self.done
    }

    pub fn is_done(&self) -> bool {
        self.done.is_some()
    }

    /// Test fixture hook: place a pedestrian directly.
    pub fn insert_pedestrian(&mut self, mut ped: Pedestrian) {
        ped.id = self.next_ped_id;
        self.next_ped_id += 1;
        self.pedestrians.push(ped);
    }

    /// Test fixture hook: remove all pedestrians.
    pub fn clear_pedestrians(&mut self) {
        self.pedestrians.clear();
    }

    /// Advance the world one step under the given action.
    pub fn step(&mut self, action: crate::Action) -> Result<StepOutcome> {
        if self.done.is_some() {
            return Err(Error::contract("step called on a finished episode"));
        }

        // ego kinematics: longitudinal control along the scripted route
        let v1 = (self.ego.speed + action.acceleration() * self.config.dt)
            .clamp(0.0, self.config.v_hard_cap);
        self.ego.speed = v1;
        let p0 = self.progress;
        self.progress = (self.progress + v1 * self.config.dt).min(self.route_len);
        self.ego.position = self.route.point_at(self.progress);
        self.ego.heading = self.route.heading_at(self.progress);
        self.ego.waypoint_cursor = self.route.cursor_at(self.progress);

        // pedestrians react to the new ego pose
        let ego_rect = self.ego.footprint();
        let map = &self.map;
        let cfg = &self.config;
        for ped in &mut self.pedestrians {
            ped.advance(map, &ego_rect, cfg, &mut self.rng);
        }

        // despawn far pedestrians; replace them to keep traffic busy
        let ego_pos = self.ego.position;
        let despawn = self.config.despawn_radius;
        self.pedestrians.retain(|p| p.position.dist(ego_pos) <= despawn);
        self.maintain_population();

        let collision = self
            .pedestrians
            .iter()
            .any(|p| ego_rect.overlaps_disc(p.position, p.radius));
        let nearest = self.nearest_front_crossing_pedestrian();
        let event = if collision {
            SafetyEvent::Collision
        } else {
            match nearest {
                Some(d) if d <= dynamic_range(v1, &self.config.safety)? => {
                    SafetyEvent::NearCollision { distance: d }
                }
                _ => SafetyEvent::Clear,
            }
        };

        self.steps += 1;
        self.done = if collision {
            Some(DoneReason::Collision)
        } else if self.progress >= self.route_len {
            Some(DoneReason::Goal)
        } else if self.steps >= self.config.step_cap {
            Some(DoneReason::StepCap)
        } else {
            None
        };

        let info = StepInfo {
            distance: self.progress - p0,
            in_intersection: self.map.intersections.iter().any(|r| ego_rect.overlaps_rect(r)),
            nearest_front_crossing: nearest,
        };
        Ok(StepOutcome { event, done: self.done.is_some(), reason: self.done, info })
    }

    /// Along-route distance to the nearest pedestrian that is on the road
    /// surface, ahead of the ego and inside the ego's lane corridor.
    pub fn nearest_front_crossing_pedestrian(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for ped in &self.pedestrians {
            if !self.map.on_road_surface(ped.position) {
                continue;
            }
            let (s, lateral) = self.route.project(ped.position);
            let ahead = s - self.progress;
            if ahead <= 0.0 || lateral.abs() > self.corridor_half {
                continue;
            }
            if best.map_or(true, |b| ahead < b) {
                best = Some(ahead);
            }
        }
        best
    }

    fn maintain_population(&mut self) {
        let ego_rect = self.ego.footprint();
        while self.pedestrians.len() < self.config.max_pedestrians {
            match pedestrian::spawn(
                &self.map,
                &self.config,
                self.ego.position,
                self.ego.heading,
                &ego_rect,
                self.next_ped_id,
                &mut self.rng,
            ) {
                Some(ped) => {
                    self.next_ped_id += 1;
                    self.pedestrians.push(ped);
                }
                None => break,
            }
        }
    }

    /// FNV-1a hash over the exact bit patterns of the dynamic state; two
    /// identically seeded runs must agree on every step.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut mix = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        mix(self.ego.position.x.to_bits());
        mix(self.ego.position.y.to_bits());
        mix(self.ego.speed.to_bits());
        mix(self.progress.to_bits());
        mix(self.steps as u64);
        for p in &self.pedestrians {
            mix(p.id);
            mix(p.position.x.to_bits());
            mix(p.position.y.to_bits());
            mix(p.velocity.x.to_bits());
            mix(p.velocity.y.to_bits());
        }
        h
    }
}
