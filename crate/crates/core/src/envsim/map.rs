//! Road network description and the builtin maps: a four-way training
//! intersection plus two held-out layouts (a T-junction and a two-intersection
//! arterial).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::geom::{point_segment_distance, Polyline, Rect, Vec2};
use crate::{Error, Result};

/// Straight two-way road segment: a centerline and one lane width per
/// direction (total paved width = 2 × lane_width).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub start: Vec2,
    pub end: Vec2,
    pub lane_width: f64,
}

impl RoadSegment {
    pub fn half_width(&self) -> f64 {
        self.lane_width
    }

    pub fn length(&self) -> f64 {
        self.start.dist(self.end)
    }

    /// (distance along, signed lateral offset, distance to centerline).
    pub fn project(&self, p: Vec2) -> (f64, f64, f64) {
        let (t, d) = point_segment_distance(p, self.start, self.end);
        let dir = (self.end - self.start).normalized();
        let q = self.start + (self.end - self.start) * t;
        let lateral = (p - q).dot(dir.left());
        (t * self.length(), lateral, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Semantic {
    Sidewalk,
    Road,
    Intersection,
    Crosswalk,
}

impl Semantic {
    pub fn code(self) -> u8 {
        match self {
            Semantic::Sidewalk => 0,
            Semantic::Road => 1,
            Semantic::Intersection => 2,
            Semantic::Crosswalk => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub name: String,
    pub segments: Vec<RoadSegment>,
    pub intersections: Vec<Rect>,
    pub crosswalks: Vec<Rect>,
    /// Ego route waypoints along a lane center; the goal is the last one.
    pub route: Vec<Vec2>,
    pub sidewalk_width: f64,
}

impl MapSpec {
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::config("map has no road segments"));
        }
        if self.route.len() < 2 {
            return Err(Error::config("route needs at least two waypoints"));
        }
        if !(self.sidewalk_width > 0.0) {
            return Err(Error::config("sidewalk width must be positive"));
        }
        for seg in &self.segments {
            if !(seg.lane_width > 0.0) {
                return Err(Error::config("lane width must be positive"));
            }
            if seg.length() <= 0.0 {
                return Err(Error::config("zero-length road segment"));
            }
        }
        for wp in &self.route {
            if !self.on_road_surface(*wp) {
                return Err(Error::config(format_args!(
                    "route waypoint ({}, {}) is off the road surface",
                    wp.x, wp.y
                )));
            }
        }
        for cw in &self.crosswalks {
            let center = Vec2::new((cw.min.x + cw.max.x) / 2.0, (cw.min.y + cw.max.y) / 2.0);
            if !self.segments.iter().any(|s| s.project(center).2 <= s.half_width()) {
                return Err(Error::config("crosswalk does not intersect any road segment"));
            }
        }
        Ok(())
    }

    pub fn goal(&self) -> Vec2 {
        *self.route.last().unwrap()
    }

    pub fn route_polyline(&self) -> Result<Polyline> {
        Polyline::new(self.route.clone())
            .ok_or_else(|| Error::config("route needs at least two waypoints"))
    }

    pub fn on_road_surface(&self, p: Vec2) -> bool {
        self.semantic_at(p) != Semantic::Sidewalk
    }

    /// Road-type classification of a point. Intersection boxes win over
    /// crosswalks, crosswalks over plain road; everything off the paved
    /// surface is sidewalk.
    pub fn semantic_at(&self, p: Vec2) -> Semantic {
        if self.intersections.iter().any(|r| r.contains(p)) {
            return Semantic::Intersection;
        }
        if self.crosswalks.iter().any(|r| r.contains(p)) {
            return Semantic::Crosswalk;
        }
        if self.segments.iter().any(|s| s.project(p).2 <= s.half_width()) {
            return Semantic::Road;
        }
        Semantic::Sidewalk
    }

    /// Is the point on a walkable sidewalk band (just off the paved surface)?
    pub fn on_sidewalk(&self, p: Vec2) -> bool {
        if self.semantic_at(p) != Semantic::Sidewalk {
            return false;
        }
        self.segments.iter().any(|s| {
            let d = s.project(p).2;
            d > s.half_width() && d <= s.half_width() + self.sidewalk_width
        })
    }

    pub fn by_name(name: &str) -> Option<MapSpec> {
        match name {
            "train" => Some(Self::training()),
            "heldout1" => Some(Self::heldout_t_junction()),
            "heldout2" => Some(Self::heldout_two_intersections()),
            _ => None,
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 3] = ["train", "heldout1", "heldout2"];

    /// Training map: two two-way roads crossing at an unsignalized four-way
    /// intersection with crosswalks on all four approaches. The ego drives
    /// east along the southern lane, straight through the intersection.
    pub fn training() -> MapSpec {
        let lane = 3.5;
        let ew = RoadSegment {
            start: Vec2::new(-90.0, 0.0),
            end: Vec2::new(90.0, 0.0),
            lane_width: lane,
        };
        let ns = RoadSegment {
            start: Vec2::new(0.0, -60.0),
            end: Vec2::new(0.0, 60.0),
            lane_width: lane,
        };
        let ix = Rect::new(Vec2::new(-lane, -lane), Vec2::new(lane, lane));
        let crosswalks = four_way_crosswalks(Vec2::new(0.0, 0.0), lane, 3.0);
        MapSpec {
            name: String::from("train"),
            segments: vec![ew, ns],
            intersections: vec![ix],
            crosswalks,
            route: straight_route(-80.0, 80.0, -lane / 2.0),
            sidewalk_width: 2.0,
        }
    }

    /// Held-out map 1: a T-junction (the side road only extends north).
    pub fn heldout_t_junction() -> MapSpec {
        let lane = 3.5;
        let ew = RoadSegment {
            start: Vec2::new(-90.0, 0.0),
            end: Vec2::new(90.0, 0.0),
            lane_width: lane,
        };
        let north = RoadSegment {
            start: Vec2::new(0.0, 0.0),
            end: Vec2::new(0.0, 60.0),
            lane_width: lane,
        };
        let ix = Rect::new(Vec2::new(-lane, -lane), Vec2::new(lane, lane));
        let crosswalks = vec![
            Rect::new(Vec2::new(-lane - 3.0, -lane), Vec2::new(-lane, lane)),
            Rect::new(Vec2::new(lane, -lane), Vec2::new(lane + 3.0, lane)),
            Rect::new(Vec2::new(-lane, lane), Vec2::new(lane, lane + 3.0)),
        ];
        MapSpec {
            name: String::from("heldout1"),
            segments: vec![ew, north],
            intersections: vec![ix],
            crosswalks,
            route: straight_route(-80.0, 80.0, -lane / 2.0),
            sidewalk_width: 2.0,
        }
    }

    /// Held-out map 2: an arterial road crossing two side streets.
    pub fn heldout_two_intersections() -> MapSpec {
        let lane = 3.5;
        let ew = RoadSegment {
            start: Vec2::new(-100.0, 0.0),
            end: Vec2::new(100.0, 0.0),
            lane_width: lane,
        };
        let ns_a = RoadSegment {
            start: Vec2::new(-40.0, -60.0),
            end: Vec2::new(-40.0, 60.0),
            lane_width: lane,
        };
        let ns_b = RoadSegment {
            start: Vec2::new(40.0, -60.0),
            end: Vec2::new(40.0, 60.0),
            lane_width: lane,
        };
        let ix_a = Rect::new(Vec2::new(-40.0 - lane, -lane), Vec2::new(-40.0 + lane, lane));
        let ix_b = Rect::new(Vec2::new(40.0 - lane, -lane), Vec2::new(40.0 + lane, lane));
        let mut crosswalks = four_way_crosswalks(Vec2::new(-40.0, 0.0), lane, 3.0);
        crosswalks.extend(four_way_crosswalks(Vec2::new(40.0, 0.0), lane, 3.0));
        MapSpec {
            name: String::from("heldout2"),
            segments: vec![ew, ns_a, ns_b],
            intersections: vec![ix_a, ix_b],
            crosswalks,
            route: straight_route(-90.0, 90.0, -lane / 2.0),
            sidewalk_width: 2.0,
        }
    }
}

fn straight_route(x0: f64, x1: f64, y: f64) -> Vec<Vec2> {
    let mut pts = Vec::new();
    let step = 5.0;
    let mut x = x0;
    while x < x1 {
        pts.push(Vec2::new(x, y));
        x += step;
    }
    pts.push(Vec2::new(x1, y));
    pts
}

fn four_way_crosswalks(center: Vec2, lane: f64, depth: f64) -> Vec<Rect> {
    vec![
        // west and east approaches span the north-south road width
        Rect::new(
            Vec2::new(center.x - lane - depth, center.y - lane),
            Vec2::new(center.x - lane, center.y + lane),
        ),
        Rect::new(
            Vec2::new(center.x + lane, center.y - lane),
            Vec2::new(center.x + lane + depth, center.y + lane),
        ),
        // south and north approaches
        Rect::new(
            Vec2::new(center.x - lane, center.y - lane - depth),
            Vec2::new(center.x + lane, center.y - lane),
        ),
        Rect::new(
            Vec2::new(center.x - lane, center.y + lane),
            Vec2::new(center.x + lane, center.y + lane + depth),
        ),
    ]
}
