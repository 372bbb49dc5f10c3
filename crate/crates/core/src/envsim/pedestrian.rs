//! Pedestrian agents: spawning on sidewalks, constant-speed goal seeking with
//! heading noise, road-crossing permission and basic ego avoidance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::map::MapSpec;
use super::EnvConfig;
use crate::geom::{OrientedRect, Vec2};
use crate::math;

/// Pedestrians stop rather than walk into the ego vehicle; collisions are
/// therefore always caused by ego motion.
const AVOID_MARGIN: f64 = 0.2;
/// Steps a pedestrian may be blocked before it picks a new goal.
const BLOCKED_LIMIT: u32 = 50;
const GOAL_REACHED_DIST: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: u64,
    pub position: Vec2,
    pub velocity: Vec2,
    pub goal: Vec2,
    pub crossing_allowed: bool,
    pub speed: f64,
    pub radius: f64,
    #[serde(default)]
    blocked_steps: u32,
}

impl Pedestrian {
    pub fn new(
        id: u64,
        position: Vec2,
        goal: Vec2,
        crossing_allowed: bool,
        speed: f64,
        radius: f64,
    ) -> Self {
        Pedestrian {
            id,
            position,
            velocity: Vec2::new(0.0, 0.0),
            goal,
            crossing_allowed,
            speed,
            radius,
            blocked_steps: 0,
        }
    }

    fn walkable(&self, map: &MapSpec, p: Vec2) -> bool {
        if self.crossing_allowed {
            map.on_sidewalk(p) || map.on_road_surface(p)
        } else {
            map.on_sidewalk(p)
        }
    }

    /// Advance one step toward the goal. Returns without moving when the next
    /// position would leave the walkable area or enter the ego's footprint.
    pub(super) fn advance<R: Rng + ?Sized>(
        &mut self,
        map: &MapSpec,
        ego_rect: &OrientedRect,
        cfg: &EnvConfig,
        rng: &mut R,
    ) {
        if self.position.dist(self.goal) < GOAL_REACHED_DIST {
            self.pick_new_goal(map, rng);
        }
        // deterministic Box-Muller heading noise, drawn every step
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let noise = math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2);
        let sigma = cfg.heading_noise_deg.to_radians();

        let desired = (self.goal - self.position).normalized();
        if desired.length() == 0.0 {
            self.velocity = Vec2::new(0.0, 0.0);
            return;
        }
        let heading = desired.angle() + noise * sigma;
        let dir = Vec2::from_angle(heading);
        let candidate = self.position + dir * (self.speed * cfg.dt);

        let blocked = ego_rect.distance_to_point(candidate) < self.radius + AVOID_MARGIN
            || !self.walkable(map, candidate);
        if blocked {
            self.velocity = Vec2::new(0.0, 0.0);
            self.blocked_steps += 1;
            if self.blocked_steps >= BLOCKED_LIMIT {
                self.pick_new_goal(map, rng);
                self.blocked_steps = 0;
            }
        } else {
            self.velocity = dir * self.speed;
            self.position = candidate;
            self.blocked_steps = 0;
        }
    }

    fn pick_new_goal<R: Rng + ?Sized>(&mut self, map: &MapSpec, rng: &mut R) {
        self.goal = pick_goal(map, self.position, self.crossing_allowed, rng);
    }
}

/// Goal for a pedestrian at `from`: crossing pedestrians aim at the opposite
/// sidewalk of the nearest road segment (forcing a road crossing), the rest
/// walk along their own sidewalk.
pub(super) fn pick_goal<R: Rng + ?Sized>(
    map: &MapSpec,
    from: Vec2,
    crossing: bool,
    rng: &mut R,
) -> Vec2 {
    let seg = map
        .segments
        .iter()
        .min_by(|a, b| {
            let da = a.project(from).2;
            let db = b.project(from).2;
            da.partial_cmp(&db).unwrap()
        })
        .expect("validated maps have segments");
    let (s, lateral, _) = seg.project(from);
    let dir = (seg.end - seg.start).normalized();
    let left = dir.left();
    let side = if lateral >= 0.0 { 1.0 } else { -1.0 };
    let band = seg.half_width() + 0.3 + rng.gen_range(0.0..(map.sidewalk_width - 0.6));
    if crossing {
        let s_goal = (s + rng.gen_range(-3.0..3.0)).clamp(0.0, seg.length());
        seg.start + dir * s_goal + left * (-side * band)
    } else {
        let delta = rng.gen_range(5.0..25.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let s_goal = (s + delta).clamp(0.0, seg.length());
        seg.start + dir * s_goal + left * (side * band)
    }
}

/// Try to place a new pedestrian on a sidewalk in the forward vicinity of the
/// ego vehicle. Deterministic given the rng; gives up after a bounded number
/// of rejection-sampling attempts.
pub(super) fn spawn<R: Rng + ?Sized>(
    map: &MapSpec,
    cfg: &EnvConfig,
    ego_pos: Vec2,
    ego_heading: f64,
    ego_rect: &OrientedRect,
    id: u64,
    rng: &mut R,
) -> Option<Pedestrian> {
    let heading_dir = Vec2::from_angle(ego_heading);
    let total_len: f64 = map.segments.iter().map(|s| s.length()).sum();
    for _ in 0..64 {
        // segment weighted by length
        let mut pick = rng.gen_range(0.0..total_len);
        let mut seg = &map.segments[0];
        for s in &map.segments {
            if pick < s.length() {
                seg = s;
                break;
            }
            pick -= s.length();
        }
        let s_pos = rng.gen_range(0.0..seg.length());
        let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let lateral = side * (seg.half_width() + 0.3 + rng.gen_range(0.0..(map.sidewalk_width - 0.6)));
        let dir = (seg.end - seg.start).normalized();
        let pos = seg.start + dir * s_pos + dir.left() * lateral;

        let rel = pos - ego_pos;
        let dist = rel.length();
        if rel.dot(heading_dir) < 0.0 || dist < cfg.min_spawn_distance || dist > cfg.vicinity_radius
        {
            continue;
        }
        if !map.on_sidewalk(pos) {
            continue;
        }
        if ego_rect.distance_to_point(pos) < cfg.ped_radius + AVOID_MARGIN {
            continue;
        }
        let crossing_allowed = rng.gen_bool(cfg.crossing_factor);
        let speed = rng.gen_range(cfg.ped_speed_min..=cfg.ped_speed_max);
        let goal = pick_goal(map, pos, crossing_allowed, rng);
        return Some(Pedestrian {
            id,
            position: pos,
            velocity: Vec2::new(0.0, 0.0),
            goal,
            crossing_allowed,
            speed,
            radius: cfg.ped_radius,
            blocked_steps: 0,
        });
    }
    None
}
