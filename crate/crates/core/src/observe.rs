//! Observation encoding: the ego-centric multi-layer grid (environment state)
//! and the ego speed (ego vehicle state).

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::envsim::Env;
use crate::geom::Vec2;
use crate::math;
use crate::{Error, Result};

/// Grid layers: occupancy, relative speed (m/s), relative heading (degrees in
/// [-180, 180)), semantic road-type code.
pub const GRID_LAYERS: usize = 4;

pub const LAYER_OCCUPANCY: usize = 0;
pub const LAYER_REL_SPEED: usize = 1;
pub const LAYER_REL_HEADING: usize = 2;
pub const LAYER_SEMANTIC: usize = 3;

/// Region-of-interest geometry. Cells are square with side `cell_m`; the grid
/// covers height·cell_m meters along the ego heading and width·cell_m meters
/// laterally, with the ego placed 25% from the rear edge on the center line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub height: usize,
    pub width: usize,
    pub cell_m: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::desk()
    }
}

impl GridSpec {
    pub fn new(height: usize, width: usize, cell_m: f64) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::config("grid dimensions must be positive"));
        }
        if !(cell_m > 0.0) {
            return Err(Error::config("cell size must be positive"));
        }
        Ok(GridSpec { height, width, cell_m })
    }

    /// Paper-scale grid: 80×60 cells of 0.5 m.
    pub fn paper() -> Self {
        GridSpec { height: 80, width: 60, cell_m: 0.5 }
    }

    /// Desk-scale grid: 40×30 cells of 0.5 m.
    pub fn desk() -> Self {
        GridSpec { height: 40, width: 30, cell_m: 0.5 }
    }

    pub fn roi_length(&self) -> f64 {
        self.height as f64 * self.cell_m
    }

    pub fn roi_width(&self) -> f64 {
        self.width as f64 * self.cell_m
    }

    pub fn flat_len(&self) -> usize {
        self.height * self.width * GRID_LAYERS
    }
}

/// Ego-centric observation tensor [height × width × 4], row-major with the
/// layer index innermost. Layers 1 and 2 are zero wherever layer 0 is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridObservation {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl GridObservation {
    fn zeroed(spec: &GridSpec) -> Self {
        GridObservation {
            height: spec.height,
            width: spec.width,
            data: vec![0.0; spec.flat_len()],
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize, layer: usize) -> f64 {
        self.data[(row * self.width + col) * GRID_LAYERS + layer]
    }

    #[inline]
    fn at_mut(&mut self, row: usize, col: usize, layer: usize) -> &mut f64 {
        &mut self.data[(row * self.width + col) * GRID_LAYERS + layer]
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoObservation {
    pub speed: f64,
}

impl EgoObservation {
    pub fn flat(&self) -> [f64; 1] {
        [self.speed]
    }
}

/// Rasterize the scene around the ego vehicle.
///
/// Rows run from the rear edge of the ROI towards the front (row index grows
/// with longitudinal distance), columns from left to right across the
/// heading. Each pedestrian inside the ROI marks its cell occupied and
/// contributes a signed closing speed along the ego heading axis plus a
/// relative heading; when several share a cell the one nearest the ego wins.
/// The semantic layer is filled from the map for every cell regardless of
/// occupancy.
pub fn encode_grid(env: &Env, spec: &GridSpec) -> GridObservation {
    let mut obs = GridObservation::zeroed(spec);
    let ego = env.ego();
    let heading_dir = Vec2::from_angle(ego.heading);
    let left = heading_dir.left();
    let rear_offset = 0.25 * spec.roi_length();
    let half_width = 0.5 * spec.roi_width();

    // semantic layer from cell centers
    for row in 0..spec.height {
        let u = (row as f64 + 0.5) * spec.cell_m - rear_offset;
        for col in 0..spec.width {
            let v = half_width - (col as f64 + 0.5) * spec.cell_m;
            let world = ego.position + heading_dir * u + left * v;
            *obs.at_mut(row, col, LAYER_SEMANTIC) = env.map().semantic_at(world).code() as f64;
        }
    }

    let ego_vel = heading_dir * ego.speed;
    let mut cell_dist: Vec<f64> = vec![f64::INFINITY; spec.height * spec.width];
    for ped in env.pedestrians() {
        let d = ped.position - ego.position;
        let u = d.dot(heading_dir);
        let v = d.dot(left);
        let row_f = math::floor((u + rear_offset) / spec.cell_m);
        let col_f = math::floor((half_width - v) / spec.cell_m);
        if row_f < 0.0 || col_f < 0.0 || row_f >= spec.height as f64 || col_f >= spec.width as f64
        {
            continue;
        }
        let (row, col) = (row_f as usize, col_f as usize);
        let dist = d.length();
        let slot = row * spec.width + col;
        if dist >= cell_dist[slot] {
            continue;
        }
        cell_dist[slot] = dist;
        let closing = (ego_vel - ped.velocity).dot(heading_dir);
        let rel_heading = if ped.velocity.length() > 0.0 {
            math::wrap_degrees((ped.velocity.angle() - ego.heading).to_degrees())
        } else {
            0.0
        };
        *obs.at_mut(row, col, LAYER_OCCUPANCY) = 1.0;
        *obs.at_mut(row, col, LAYER_REL_SPEED) = closing;
        *obs.at_mut(row, col, LAYER_REL_HEADING) = rel_heading;
    }
    obs
}

pub fn encode_ego(env: &Env) -> EgoObservation {
    EgoObservation { speed: env.ego().speed }
}
