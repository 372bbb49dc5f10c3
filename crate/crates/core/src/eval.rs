//! Seeded evaluation episodes for any policy, per-episode metrics and the
//! nine-row aggregate report with comparison support.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envsim::{DoneReason, Env, EnvConfig, MapSpec};
use crate::observe::{encode_ego, encode_grid, EgoObservation, GridObservation, GridSpec};
use crate::qfunc::QFunction;
use crate::rewards::{reward_vector, RewardConfig, RewardVector, SafetyEvent, SpeedMode};
use crate::select::{tlo_select, ExploreFlags, QSnapshot, SelectionTrace};
use crate::train::{MorlAgents, SorlAgent};
use crate::{Action, Error, Result};

/// Distance under which a front crossing pedestrian counts as a
/// closest-pedestrian event.
pub const CLOSE_PED_EVENT_M: f64 = 2.0;

/// An evaluation policy. All variants act greedily (no exploration).
#[derive(Debug, Clone)]
pub enum Policy {
    Morl(MorlAgents),
    Sorl(SorlAgent),
    Scripted(Action),
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Morl(_) => "morl",
            Policy::Sorl(_) => "sorl",
            Policy::Scripted(Action::Accelerate) => "accelerate",
            Policy::Scripted(Action::Decelerate) => "decelerate",
            Policy::Scripted(Action::Brake) => "brake",
            Policy::Scripted(Action::Maintain) => "maintain",
        }
    }

    /// Greedy action plus the per-objective Q rows and selection trace when
    /// the policy produces them.
    pub fn select(
        &self,
        grid: &GridObservation,
        ego: &EgoObservation,
    ) -> Result<(Action, Vec<Vec<f64>>, Option<SelectionTrace>)> {
        match self {
            Policy::Morl(agents) => {
                let qs = agents.safety.q_values(grid.flat())?;
                let qp = agents.speed.q_values(&ego.flat())?;
                let snapshot = QSnapshot::new(vec![qs.to_vec(), qp.to_vec()])?;
                // greedy evaluation: nothing is explored and the rng is untouched
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                let (action, trace) =
                    tlo_select(&snapshot, &agents.chain, &ExploreFlags::none(2), &mut rng)?;
                Ok((action, vec![qs.to_vec(), qp.to_vec()], Some(trace)))
            }
            Policy::Sorl(agent) => {
                let mut input = grid.flat().to_vec();
                input.push(ego.speed);
                let q = agent.net.q_values(&input)?;
                let mut best = 0;
                for a in 1..Action::COUNT {
                    if q[a] > q[best] {
                        best = a;
                    }
                }
                let action = Action::from_index(best).expect("in range");
                Ok((action, vec![q.to_vec()], None))
            }
            Policy::Scripted(a) => Ok((*a, Vec::new(), None)),
        }
    }
}

/// The nine per-episode measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub collision_free: bool,
    pub success: bool,
    pub distance_m: f64,
    pub steps: usize,
    pub avg_speed_mps: f64,
    pub speed_violated: bool,
    pub crossing_duration_pct: f64,
    pub stops: usize,
    pub closest_ped_distances: Vec<f64>,
}

/// One step of an episode trace; enough to replay every metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub action: Action,
    pub q_rows: Vec<Vec<f64>>,
    pub selection: Option<SelectionTrace>,
    pub reward: RewardVector,
    pub v: f64,
    pub event: SafetyEvent,
    pub done: bool,
    pub reason: Option<DoneReason>,
    pub distance: f64,
    pub in_intersection: bool,
    pub nearest_front_crossing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<GridObservation>,
}

/// Run one greedy episode to termination.
pub fn run_episode(
    policy: &Policy,
    env: &mut Env,
    grid_spec: &GridSpec,
    speed_mode: SpeedMode,
    with_trace: bool,
    with_obs: bool,
) -> Result<(EpisodeMetrics, Vec<TraceStep>)> {
    let dt = env.config().dt;
    let v_ref = env.config().v_ref;
    let reward_cfg = RewardConfig { safety: env.config().safety, speed_mode };
    let mut trace = Vec::new();
    let mut acc = MetricsAccumulator::new(dt, v_ref);

    let mut step = 0usize;
    while !env.is_done() {
        let grid = encode_grid(env, grid_spec);
        let ego = encode_ego(env);
        let (action, q_rows, selection) = policy.select(&grid, &ego)?;
        let out = env.step(action)?;
        let v_after = env.ego().speed;
        let reward = reward_vector(&out.event, v_after, v_ref, &reward_cfg)?;

        acc.push(action, v_after, &out);
        if with_trace {
            trace.push(TraceStep {
                step,
                action,
                q_rows,
                selection,
                reward,
                v: v_after,
                event: out.event,
                done: out.done,
                reason: out.reason,
                distance: out.info.distance,
                in_intersection: out.info.in_intersection,
                nearest_front_crossing: out.info.nearest_front_crossing,
                grid: if with_obs { Some(grid) } else { None },
            });
        }
        step += 1;
    }
    Ok((acc.finish(env.done_reason().expect("episode finished")), trace))
}

/// Online metric accumulation; also used to replay metrics from a stored
/// trace so both paths share one definition.
struct MetricsAccumulator {
    dt: f64,
    v_ref: f64,
    steps: usize,
    distance: f64,
    intersection_steps: usize,
    speed_violated: bool,
    stops: usize,
    in_brake_run: bool,
    last_brake_v: f64,
    closest: Vec<f64>,
}

impl MetricsAccumulator {
    fn new(dt: f64, v_ref: f64) -> Self {
        MetricsAccumulator {
            dt,
            v_ref,
            steps: 0,
            distance: 0.0,
            intersection_steps: 0,
            speed_violated: false,
            stops: 0,
            in_brake_run: false,
            last_brake_v: f64::NAN,
            closest: Vec::new(),
        }
    }

    fn push(&mut self, action: Action, v_after: f64, out: &crate::envsim::StepOutcome) {
        self.steps += 1;
        self.distance += out.info.distance;
        if out.info.in_intersection {
            self.intersection_steps += 1;
        }
        if v_after > self.v_ref {
            self.speed_violated = true;
        }
        if action == Action::Brake {
            self.in_brake_run = true;
            self.last_brake_v = v_after;
        } else {
            self.close_brake_run();
        }
        if let Some(d) = out.info.nearest_front_crossing {
            if d < CLOSE_PED_EVENT_M {
                self.closest.push(d);
            }
        }
    }

    fn close_brake_run(&mut self) {
        if self.in_brake_run && self.last_brake_v == 0.0 {
            self.stops += 1;
        }
        self.in_brake_run = false;
    }

    fn finish(mut self, reason: DoneReason) -> EpisodeMetrics {
        self.close_brake_run();
        let avg = if self.steps > 0 { self.distance / (self.steps as f64 * self.dt) } else { 0.0 };
        EpisodeMetrics {
            collision_free: reason != DoneReason::Collision,
            success: reason == DoneReason::Goal,
            distance_m: self.distance,
            steps: self.steps,
            avg_speed_mps: avg,
            speed_violated: self.speed_violated,
            crossing_duration_pct: if self.steps > 0 {
                100.0 * self.intersection_steps as f64 / self.steps as f64
            } else {
                0.0
            },
            stops: self.stops,
            closest_ped_distances: self.closest,
        }
    }
}

/// Recompute the episode metrics from a stored trace; must agree exactly with
/// the online computation.
pub fn metrics_from_trace(steps: &[TraceStep], dt: f64, v_ref: f64) -> Result<EpisodeMetrics> {
    let last = steps.last().ok_or_else(|| Error::invalid("empty trace"))?;
    let reason = last.reason.ok_or_else(|| Error::invalid("trace does not end an episode"))?;
    let mut acc = MetricsAccumulator::new(dt, v_ref);
    for s in steps {
        let out = crate::envsim::StepOutcome {
            event: s.event,
            done: s.done,
            reason: s.reason,
            info: crate::envsim::StepInfo {
                distance: s.distance,
                in_intersection: s.in_intersection,
                nearest_front_crossing: s.nearest_front_crossing,
            },
        };
        acc.push(s.action, s.v, &out);
    }
    Ok(acc.finish(reason))
}

pub const METRIC_NAMES: [&str; 9] = [
    "Collision Free Episodes (%)",
    "Success Rate (%)",
    "Distance Travelled (m)",
    "Average Steps",
    "Average Speed (m/s)",
    "Speed Violation (%)",
    "Crossing Duration (%)",
    "Average Stops",
    "Closest Pedestrian Distance (m)",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub name: String,
    pub value: Option<f64>,
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub policy: String,
    pub map: String,
    pub n_episodes: usize,
    pub rows: Vec<MetricRow>,
}

impl AggregateReport {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.name == name).and_then(|r| r.value)
    }
}

fn mean_and_hw(values: impl Iterator<Item = f64>) -> (Option<f64>, Option<f64>) {
    // summed in sorted order so aggregation is bit-identical under shuffling
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return (None, None);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (Some(mean), None);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (Some(mean), Some(1.96 * crate::math::sqrt(var / n as f64)))
}

fn pct_and_hw(count: usize, n: usize) -> (Option<f64>, Option<f64>) {
    if n == 0 {
        return (None, None);
    }
    let p = count as f64 / n as f64;
    (Some(100.0 * p), Some(100.0 * 1.96 * crate::math::sqrt(p * (1.0 - p) / n as f64)))
}

/// Aggregate per-episode metrics into the nine-row report (paper row order).
pub fn aggregate(policy: &str, map: &str, metrics: &[EpisodeMetrics]) -> AggregateReport {
    let n = metrics.len();
    let mut rows = Vec::with_capacity(9);
    let pack = |name: &str, (value, half_width): (Option<f64>, Option<f64>)| MetricRow {
        name: String::from(name),
        value,
        half_width,
    };
    rows.push(pack(METRIC_NAMES[0], pct_and_hw(metrics.iter().filter(|m| m.collision_free).count(), n)));
    rows.push(pack(METRIC_NAMES[1], pct_and_hw(metrics.iter().filter(|m| m.success).count(), n)));
    rows.push(pack(METRIC_NAMES[2], mean_and_hw(metrics.iter().map(|m| m.distance_m))));
    rows.push(pack(METRIC_NAMES[3], mean_and_hw(metrics.iter().map(|m| m.steps as f64))));
    rows.push(pack(METRIC_NAMES[4], mean_and_hw(metrics.iter().map(|m| m.avg_speed_mps))));
    rows.push(pack(METRIC_NAMES[5], pct_and_hw(metrics.iter().filter(|m| m.speed_violated).count(), n)));
    rows.push(pack(METRIC_NAMES[6], mean_and_hw(metrics.iter().map(|m| m.crossing_duration_pct))));
    rows.push(pack(METRIC_NAMES[7], mean_and_hw(metrics.iter().map(|m| m.stops as f64))));
    let events = metrics.iter().flat_map(|m| m.closest_ped_distances.iter().copied());
    rows.push(pack(METRIC_NAMES[8], mean_and_hw(events)));
    AggregateReport { policy: String::from(policy), map: String::from(map), n_episodes: n, rows }
}

/// Run `n_episodes` greedy episodes with per-episode seeds seed, seed+1, ...
pub fn run_eval(
    policy: &Policy,
    env_cfg: &EnvConfig,
    map: &MapSpec,
    grid_spec: &GridSpec,
    speed_mode: SpeedMode,
    n_episodes: usize,
    seed: u64,
) -> Result<(AggregateReport, Vec<EpisodeMetrics>)> {
    let mut all = Vec::with_capacity(n_episodes);
    for i in 0..n_episodes {
        let mut env = Env::reset(env_cfg.clone(), map.clone(), seed.wrapping_add(i as u64))?;
        let (m, _) = run_episode(policy, &mut env, grid_spec, speed_mode, false, false)?;
        all.push(m);
    }
    Ok((aggregate(policy.name(), &map.name, &all), all))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Better {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub metric: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `None` when the metric has no preferred direction or a side is
    /// missing.
    pub better: Option<Better>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    HigherBetter,
    LowerBetter,
    Neutral,
}

fn direction(metric: &str) -> Direction {
    match metric {
        "Collision Free Episodes (%)"
        | "Success Rate (%)"
        | "Distance Travelled (m)"
        | "Average Speed (m/s)"
        | "Closest Pedestrian Distance (m)" => Direction::HigherBetter,
        "Speed Violation (%)" | "Crossing Duration (%)" | "Average Stops" => {
            Direction::LowerBetter
        }
        _ => Direction::Neutral,
    }
}

/// Side-by-side comparison of two reports, marking the better value per
/// metric under the usual direction conventions. "Average Steps" carries no
/// direction.
pub fn compare(a: &AggregateReport, b: &AggregateReport) -> Vec<CompareRow> {
    METRIC_NAMES
        .iter()
        .map(|&name| {
            let va = a.value(name);
            let vb = b.value(name);
            let better = match (va, vb) {
                (Some(x), Some(y)) => {
                    if x == y {
                        Some(Better::Tie)
                    } else {
                        match direction(name) {
                            Direction::Neutral => None,
                            Direction::HigherBetter => {
                                Some(if x > y { Better::A } else { Better::B })
                            }
                            Direction::LowerBetter => {
                                Some(if x < y { Better::A } else { Better::B })
                            }
                        }
                    }
                }
                _ => None,
            };
            CompareRow { metric: String::from(name), a: va, b: vb, better }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_metrics() -> EpisodeMetrics {
        EpisodeMetrics {
            collision_free: true,
            success: true,
            distance_m: 160.0,
            steps: 400,
            avg_speed_mps: 4.0,
            speed_violated: false,
            crossing_duration_pct: 10.0,
            stops: 2,
            closest_ped_distances: vec![1.5],
        }
    }

    #[test]
    fn empty_report_has_no_values() {
        let report = aggregate("brake", "train", &[]);
        assert_eq!(report.n_episodes, 0);
        assert_eq!(report.rows.len(), 9);
        assert!(report.rows.iter().all(|r| r.value.is_none()));
    }

    #[test]
    fn report_rows_follow_fixed_order() {
        let report = aggregate("x", "train", &[fixture_metrics()]);
        let names: Vec<&str> = report.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, METRIC_NAMES.to_vec());
    }

    #[test]
    fn aggregation_is_order_insensitive() {
        let mut a = fixture_metrics();
        a.distance_m = 100.0;
        let mut b = fixture_metrics();
        b.distance_m = 50.0;
        b.collision_free = false;
        let c = fixture_metrics();
        let fwd = aggregate("p", "m", &[a.clone(), b.clone(), c.clone()]);
        let rev = aggregate("p", "m", &[c, b, a]);
        assert_eq!(fwd, rev);
    }

    #[test]
    fn identical_reports_tie_everywhere() {
        let r = aggregate("p", "m", &[fixture_metrics()]);
        let rows = compare(&r, &r);
        for row in rows {
            if row.a.is_some() {
                assert_eq!(row.better, Some(Better::Tie), "{}", row.metric);
            }
        }
    }

    #[test]
    fn direction_conventions() {
        let mut hi = fixture_metrics();
        hi.stops = 1;
        hi.crossing_duration_pct = 5.0;
        let mut lo = fixture_metrics();
        lo.distance_m = 10.0;
        lo.avg_speed_mps = 0.5;
        lo.steps = 900;
        lo.stops = 9;
        lo.crossing_duration_pct = 50.0;
        lo.collision_free = false;
        lo.success = false;
        lo.speed_violated = true;
        let ra = aggregate("a", "m", &[hi]);
        let rb = aggregate("b", "m", &[lo]);
        let rows = compare(&ra, &rb);
        let by_name = |n: &str| rows.iter().find(|r| r.metric == n).unwrap().better;
        assert_eq!(by_name("Collision Free Episodes (%)"), Some(Better::A));
        assert_eq!(by_name("Success Rate (%)"), Some(Better::A));
        assert_eq!(by_name("Distance Travelled (m)"), Some(Better::A));
        assert_eq!(by_name("Average Speed (m/s)"), Some(Better::A));
        assert_eq!(by_name("Speed Violation (%)"), Some(Better::A));
        assert_eq!(by_name("Crossing Duration (%)"), Some(Better::A));
        assert_eq!(by_name("Average Stops"), Some(Better::A));
        // same closest-ped events on both sides: tie
        assert_eq!(by_name("Closest Pedestrian Distance (m)"), Some(Better::Tie));
        // steps carries no direction
        assert_eq!(by_name("Average Steps"), None);
    }

    #[test]
    fn stops_counts_brake_runs_ending_at_zero() {
        use crate::envsim::{StepInfo, StepOutcome};
        let out = |d: f64| StepOutcome {
            event: SafetyEvent::Clear,
            done: false,
            reason: None,
            info: StepInfo { distance: d, in_intersection: false, nearest_front_crossing: None },
        };
        let mut acc = MetricsAccumulator::new(0.1, 8.0);
        // brake to zero over two steps: one stop
        acc.push(Action::Brake, 0.2, &out(0.02));
        acc.push(Action::Brake, 0.0, &out(0.0));
        // move off again
        acc.push(Action::Accelerate, 0.1, &out(0.01));
        // brake but not to zero: no stop
        acc.push(Action::Brake, 0.05, &out(0.005));
        acc.push(Action::Accelerate, 0.15, &out(0.015));
        // brake to zero again at episode end: second stop
        acc.push(Action::Brake, 0.0, &out(0.0));
        let m = acc.finish(DoneReason::StepCap);
        assert_eq!(m.stops, 2);
        assert_eq!(m.steps, 6);
    }
}
