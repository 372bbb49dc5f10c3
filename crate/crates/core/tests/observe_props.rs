//! Observation-encoding fixtures and properties.

use lexi_morl_core::envsim::{Env, EnvConfig, MapSpec, Pedestrian, Semantic};
use lexi_morl_core::geom::Vec2;
use lexi_morl_core::observe::{
    encode_ego, encode_grid, GridSpec, GRID_LAYERS, LAYER_OCCUPANCY, LAYER_REL_HEADING,
    LAYER_REL_SPEED, LAYER_SEMANTIC,
};
use lexi_morl_core::Action;

fn quiet_env(seed: u64) -> Env {
    let cfg = EnvConfig { max_pedestrians: 0, ..EnvConfig::default() };
    Env::reset(cfg, MapSpec::training(), seed).unwrap()
}

fn occupancy_cells(obs: &lexi_morl_core::observe::GridObservation) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..obs.height {
        for c in 0..obs.width {
            if obs.at(r, c, LAYER_OCCUPANCY) != 0.0 {
                out.push((r, c));
            }
        }
    }
    out
}

#[test]
fn empty_scene_has_clear_occupancy_and_semantic_road() {
    let env = quiet_env(1);
    let spec = GridSpec::desk();
    let obs = encode_grid(&env, &spec);
    assert!(occupancy_cells(&obs).is_empty());
    // the ego drives on the road: cells around the ego column are road-coded
    let road_cells = (0..spec.height)
        .flat_map(|r| (0..spec.width).map(move |c| (r, c)))
        .filter(|&(r, c)| obs.at(r, c, LAYER_SEMANTIC) == Semantic::Road.code() as f64)
        .count();
    assert!(road_cells > 100, "expected a road band, got {road_cells} road cells");
    // layers 1..2 all zero with zero occupancy
    for r in 0..spec.height {
        for c in 0..spec.width {
            assert_eq!(obs.at(r, c, LAYER_REL_SPEED), 0.0);
            assert_eq!(obs.at(r, c, LAYER_REL_HEADING), 0.0);
        }
    }
}

#[test]
fn static_pedestrian_ahead_marks_one_cell_with_closing_speed() {
    let mut env = quiet_env(1);
    // drive the ego up to 8 m/s on the empty road
    for _ in 0..80 {
        env.step(Action::Accelerate).unwrap();
    }
    assert!((env.ego().speed - 8.0).abs() < 1e-9);
    let ego = env.ego().position;
    env.insert_pedestrian(Pedestrian::new(
        0,
        Vec2::new(ego.x + 5.0, ego.y),
        Vec2::new(ego.x + 5.0, ego.y),
        true,
        1.0,
        0.3,
    ));
    let spec = GridSpec::desk();
    let obs = encode_grid(&env, &spec);
    let cells = occupancy_cells(&obs);
    assert_eq!(cells.len(), 1);
    let (r, c) = cells[0];
    // ego sits 25% from the rear edge: row = (5 + 0.25*20) / 0.5 = 20
    assert_eq!(r, 20);
    assert_eq!(c, spec.width / 2);
    assert!((obs.at(r, c, LAYER_REL_SPEED) - 8.0).abs() < 1e-9);
    assert_eq!(obs.at(r, c, LAYER_REL_HEADING), 0.0);
}

#[test]
fn pedestrian_outside_roi_is_clipped() {
    let mut env = quiet_env(1);
    let ego = env.ego().position;
    // desk ROI reaches 15 m ahead; 30 m is outside
    env.insert_pedestrian(Pedestrian::new(
        0,
        Vec2::new(ego.x + 30.0, ego.y),
        Vec2::new(ego.x + 30.0, ego.y),
        true,
        1.0,
        0.3,
    ));
    // and more than 7.5 m to the side
    env.insert_pedestrian(Pedestrian::new(
        1,
        Vec2::new(ego.x + 2.0, ego.y + 9.0),
        Vec2::new(ego.x + 2.0, ego.y + 9.0),
        true,
        1.0,
        0.3,
    ));
    let obs = encode_grid(&env, &GridSpec::desk());
    assert!(occupancy_cells(&obs).is_empty());
}

#[test]
fn nearest_pedestrian_wins_a_shared_cell() {
    let mut env = quiet_env(1);
    let ego = env.ego().position;
    // same cell (0.5 m cells): two pedestrians 10 cm apart longitudinally
    let near = Vec2::new(ego.x + 5.1, ego.y);
    let far = Vec2::new(ego.x + 5.3, ego.y);
    let mut moving = Pedestrian::new(0, far, far, true, 1.0, 0.3);
    moving.velocity = Vec2::new(0.0, 1.0);
    env.insert_pedestrian(moving);
    env.insert_pedestrian(Pedestrian::new(1, near, near, true, 1.0, 0.3));
    let obs = encode_grid(&env, &GridSpec::desk());
    let cells = occupancy_cells(&obs);
    assert_eq!(cells.len(), 1);
    let (r, c) = cells[0];
    // the nearer pedestrian is static, so its relative heading stays zero
    assert_eq!(obs.at(r, c, LAYER_REL_HEADING), 0.0);
}

#[test]
fn moving_pedestrian_relative_heading_wraps() {
    let mut env = quiet_env(1);
    let ego = env.ego().position;
    let pos = Vec2::new(ego.x + 5.0, ego.y);
    let mut ped = Pedestrian::new(0, pos, pos, true, 1.0, 0.3);
    ped.velocity = Vec2::new(0.0, 1.0); // walking north, ego heads east
    env.insert_pedestrian(ped);
    let obs = encode_grid(&env, &GridSpec::desk());
    let cells = occupancy_cells(&obs);
    let (r, c) = cells[0];
    assert!((obs.at(r, c, LAYER_REL_HEADING) - 90.0).abs() < 1e-9);
    assert!(obs.at(r, c, LAYER_REL_HEADING) >= -180.0);
    assert!(obs.at(r, c, LAYER_REL_HEADING) < 180.0);
}

#[test]
fn translation_equivariance() {
    // shift the whole world by an exactly representable offset: the encoding
    // must be bit-identical
    let shift = Vec2::new(64.0, -32.0);
    let base = MapSpec::training();
    let mut shifted = base.clone();
    for seg in &mut shifted.segments {
        seg.start = seg.start + shift;
        seg.end = seg.end + shift;
    }
    for r in shifted.intersections.iter_mut().chain(shifted.crosswalks.iter_mut()) {
        r.min = r.min + shift;
        r.max = r.max + shift;
    }
    for wp in &mut shifted.route {
        *wp = *wp + shift;
    }

    let cfg = EnvConfig { max_pedestrians: 0, ..EnvConfig::default() };
    let mut env_a = Env::reset(cfg.clone(), base, 5).unwrap();
    let mut env_b = Env::reset(cfg, shifted, 5).unwrap();
    for env in [&mut env_a, &mut env_b] {
        let ego = env.ego().position;
        env.insert_pedestrian(Pedestrian::new(
            0,
            Vec2::new(ego.x + 4.25, ego.y + 1.5),
            Vec2::new(ego.x + 4.25, ego.y + 1.5),
            true,
            1.0,
            0.3,
        ));
    }
    let spec = GridSpec::desk();
    let obs_a = encode_grid(&env_a, &spec);
    let obs_b = encode_grid(&env_b, &spec);
    assert_eq!(obs_a, obs_b);
}

#[test]
fn semantic_layer_ignores_agents() {
    let mut env = quiet_env(1);
    let spec = GridSpec::desk();
    let before = encode_grid(&env, &spec);
    let ego = env.ego().position;
    env.insert_pedestrian(Pedestrian::new(
        0,
        Vec2::new(ego.x + 5.0, ego.y),
        Vec2::new(ego.x + 5.0, ego.y),
        true,
        1.0,
        0.3,
    ));
    let after = encode_grid(&env, &spec);
    for r in 0..spec.height {
        for c in 0..spec.width {
            assert_eq!(before.at(r, c, LAYER_SEMANTIC), after.at(r, c, LAYER_SEMANTIC));
        }
    }
}

#[test]
fn ego_observation_copies_speed() {
    let mut env = quiet_env(1);
    assert_eq!(encode_ego(&env).speed, 0.0);
    for _ in 0..80 {
        env.step(Action::Accelerate).unwrap();
    }
    assert!((encode_ego(&env).speed - 8.0).abs() < 1e-9);
    // brake below zero clamps, and the observation follows
    let mut env2 = quiet_env(2);
    env2.step(Action::Accelerate).unwrap();
    env2.step(Action::Accelerate).unwrap();
    env2.step(Action::Accelerate).unwrap();
    env2.step(Action::Brake).unwrap();
    assert_eq!(encode_ego(&env2).speed, 0.0);
}

#[test]
fn grid_spec_validation_and_flat_layout() {
    assert!(GridSpec::new(0, 30, 0.5).is_err());
    assert!(GridSpec::new(40, 30, 0.0).is_err());
    let spec = GridSpec::desk();
    assert_eq!(spec.flat_len(), 40 * 30 * GRID_LAYERS);
    assert_eq!(spec.roi_length(), 20.0);
    assert_eq!(spec.roi_width(), 15.0);
    let paper = GridSpec::paper();
    assert_eq!((paper.height, paper.width), (80, 60));
}
