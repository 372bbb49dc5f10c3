//! Thresholded lexicographic action selection.
//!
//! Two related mechanisms live here. The clamp-based comparison clamps every
//! objective's Q-value to an absolute level and compares actions with the
//! recursive `superior` predicate. The percentage-threshold chain keeps, per
//! objective, the actions scoring at least a fraction τ of the best surviving
//! action, narrowing the acceptable set objective by objective; the agent uses
//! this variant.

use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Action, Error, Result};

pub const MAX_OBJECTIVES: usize = 8;

/// How the per-objective acceptability bar is derived from τ and the best
/// surviving Q-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// q >= τ · qmax. With a negative qmax the bar rises above the maximum and
    /// only the argmax survives; kept as the default because it is the cited
    /// rule.
    #[default]
    Literal,
    /// q >= qmax − (1 − τ) · |qmax|; the band stays below the maximum for
    /// either sign of qmax.
    Slack,
}

/// Comparison used against the acceptability bar. `Gt` exists solely as a
/// fault-injection hook for the self-verification suites.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarCmp {
    Ge,
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub name: String,
    /// Percentage threshold τ in (0, 1].
    pub tau: f64,
    /// Clamp level for the clamp-based comparison; `None` leaves the
    /// objective unclamped.
    pub clamp: Option<f64>,
}

/// Ordered objectives, highest priority first. Order is fixed at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveChain {
    specs: Vec<ObjectiveSpec>,
    #[serde(default)]
    pub mode: ThresholdMode,
}

impl ObjectiveChain {
    pub fn new(specs: Vec<ObjectiveSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::invalid("objective chain must be non-empty"));
        }
        if specs.len() > MAX_OBJECTIVES {
            return Err(Error::invalid(format_args!(
                "at most {MAX_OBJECTIVES} objectives supported, got {}",
                specs.len()
            )));
        }
        for s in &specs {
            if !(s.tau > 0.0 && s.tau <= 1.0) {
                return Err(Error::invalid(format_args!(
                    "threshold for objective '{}' must lie in (0, 1], got {}",
                    s.name, s.tau
                )));
            }
            if let Some(c) = s.clamp {
                if !c.is_finite() {
                    return Err(Error::invalid(format_args!(
                        "clamp level for objective '{}' must be finite",
                        s.name
                    )));
                }
            }
        }
        Ok(ObjectiveChain { specs, mode: ThresholdMode::Literal })
    }

    pub fn with_mode(mut self, mode: ThresholdMode) -> Self {
        self.mode = mode;
        self
    }

    /// The usual two-objective chain: safety gates speed.
    pub fn safety_speed(tau_safety: f64, tau_speed: f64) -> Result<Self> {
        ObjectiveChain::new(alloc::vec![
            ObjectiveSpec { name: String::from("safety"), tau: tau_safety, clamp: None },
            ObjectiveSpec { name: String::from("speed"), tau: tau_speed, clamp: None },
        ])
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[ObjectiveSpec] {
        &self.specs
    }
}

/// Per-objective Q-values for the current per-objective states: one row per
/// objective, one column per action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSnapshot {
    rows: Vec<Vec<f64>>,
}

impl QSnapshot {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("snapshot needs at least one objective row"));
        }
        let width = rows[0].len();
        if width == 0 || width > Action::COUNT {
            return Err(Error::invalid(format_args!(
                "snapshot rows must have 1..={} actions, got {width}",
                Action::COUNT
            )));
        }
        for row in &rows {
            if row.len() != width {
                return Err(Error::invalid("snapshot rows must all have the same length"));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("snapshot values must be finite"));
            }
        }
        Ok(QSnapshot { rows })
    }

    pub fn num_objectives(&self) -> usize {
        self.rows.len()
    }

    pub fn num_actions(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Which objective, if any, is explored this step. At most one flag is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreFlags {
    flags: Vec<bool>,
}

impl ExploreFlags {
    pub fn none(n: usize) -> Self {
        ExploreFlags { flags: alloc::vec![false; n] }
    }

    pub fn one(n: usize, objective: usize) -> Result<Self> {
        if objective >= n {
            return Err(Error::invalid(format_args!(
                "explore index {objective} out of range for {n} objectives"
            )));
        }
        let mut flags = alloc::vec![false; n];
        flags[objective] = true;
        Ok(ExploreFlags { flags })
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn is_set(&self, i: usize) -> bool {
        self.flags[i]
    }

    /// Index of the explored objective, if any.
    pub fn explored(&self) -> Option<usize> {
        self.flags.iter().position(|&f| f)
    }
}

/// Record of one selection: every acceptable set in order (starting with the
/// full action set), the explored objective if the selection ended early, and
/// the chosen action index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub sets: Vec<Vec<usize>>,
    pub explored: Option<usize>,
    pub chosen: usize,
}

/// Clamp a Q-value to an acceptability level: min(q, clamp_level).
pub fn clamp_thresholded(q: f64, clamp_level: f64) -> Result<f64> {
    if !q.is_finite() || !clamp_level.is_finite() {
        return Err(Error::invalid("clamp_thresholded requires finite inputs"));
    }
    Ok(q.min(clamp_level))
}

/// Recursive lexicographic comparison of two clamped Q-vectors starting at
/// objective level `i` (1-based). Strictly greater wins; equal values recurse,
/// and equality through the last level counts as superior.
pub fn superior(tq_a: &[f64], tq_b: &[f64], i: usize) -> Result<bool> {
    let n = tq_a.len();
    if n == 0 || tq_b.len() != n {
        return Err(Error::invalid(format_args!(
            "superior requires equal-length non-empty vectors, got {n} and {}",
            tq_b.len()
        )));
    }
    if i < 1 || i > n {
        return Err(Error::invalid(format_args!("level {i} out of range 1..={n}")));
    }
    if tq_a.iter().chain(tq_b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("superior requires finite values"));
    }
    for level in (i - 1)..n {
        if tq_a[level] > tq_b[level] {
            return Ok(true);
        }
        if tq_a[level] < tq_b[level] {
            return Ok(false);
        }
        // equal: fall through to the next level; equal at the last level is
        // superior by definition.
    }
    Ok(true)
}

/// Greedy action under clamp-based thresholded lexicographic comparison:
/// clamp each objective row, then pick the lowest-indexed action no other
/// action strictly dominates.
pub fn tlq_greedy(snapshot: &QSnapshot, chain: &ObjectiveChain) -> Result<Action> {
    if snapshot.num_objectives() != chain.len() {
        return Err(Error::invalid(format_args!(
            "snapshot has {} objectives but chain has {}",
            snapshot.num_objectives(),
            chain.len()
        )));
    }
    let n_actions = snapshot.num_actions();
    let column = |a: usize| -> Result<Vec<f64>> {
        (0..chain.len())
            .map(|i| match chain.specs()[i].clamp {
                Some(c) => clamp_thresholded(snapshot.row(i)[a], c),
                None => Ok(snapshot.row(i)[a]),
            })
            .collect()
    };
    let mut best = 0usize;
    let mut best_col = column(0)?;
    for a in 1..n_actions {
        let col = column(a)?;
        if superior(&col, &best_col, 1)? && !superior(&best_col, &col, 1)? {
            best = a;
            best_col = col;
        }
    }
    Action::from_index(best).ok_or_else(|| Error::invalid("action index out of range"))
}

/// Actions from `prev` scoring at least the τ-derived bar for this objective,
/// plus the argmax itself (lowest index on ties), guaranteeing a non-empty
/// result.
pub fn acceptable_actions(prev: &[usize], q_row: &[f64], tau: f64, mode: ThresholdMode) -> Result<Vec<usize>> {
    acceptable_actions_with_cmp(prev, q_row, tau, mode, BarCmp::Ge)
}

#[doc(hidden)]
pub fn acceptable_actions_with_cmp(
    prev: &[usize],
    q_row: &[f64],
    tau: f64,
    mode: ThresholdMode,
    cmp: BarCmp,
) -> Result<Vec<usize>> {
    if prev.is_empty() {
        return Err(Error::invalid("previous acceptable set must be non-empty"));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(format_args!("threshold must lie in (0, 1], got {tau}")));
    }
    let mut argmax = prev[0];
    for &a in prev {
        if a >= q_row.len() {
            return Err(Error::invalid(format_args!(
                "action index {a} out of range for row of length {}",
                q_row.len()
            )));
        }
        if !q_row[a].is_finite() {
            return Err(Error::invalid("q values must be finite"));
        }
        if q_row[a] > q_row[argmax] {
            argmax = a;
        }
    }
    let qmax = q_row[argmax];
    let bar = match mode {
        ThresholdMode::Literal => tau * qmax,
        ThresholdMode::Slack => qmax - (1.0 - tau) * qmax.abs(),
    };
    let mut out: Vec<usize> = prev
        .iter()
        .copied()
        .filter(|&a| match cmp {
            BarCmp::Ge => q_row[a] >= bar,
            BarCmp::Gt => q_row[a] > bar,
        })
        .collect();
    if !out.contains(&argmax) {
        out.push(argmax);
        out.sort_unstable();
    }
    Ok(out)
}

/// Percentage-threshold action selection over the whole chain.
///
/// Starting from the full action set, each objective in priority order narrows
/// the acceptable set via [`acceptable_actions`]. If the objective is flagged
/// for exploration the selection ends early with a uniform-random member of
/// the previous set; otherwise the final pick is the greedy action of the last
/// objective over the final set (the last objective is effectively
/// unconstrained).
pub fn tlo_select<R: Rng + ?Sized>(
    snapshot: &QSnapshot,
    chain: &ObjectiveChain,
    explore: &ExploreFlags,
    rng: &mut R,
) -> Result<(Action, SelectionTrace)> {
    tlo_select_with_cmp(snapshot, chain, explore, rng, BarCmp::Ge)
}

#[doc(hidden)]
pub fn tlo_select_with_cmp<R: Rng + ?Sized>(
    snapshot: &QSnapshot,
    chain: &ObjectiveChain,
    explore: &ExploreFlags,
    rng: &mut R,
    cmp: BarCmp,
) -> Result<(Action, SelectionTrace)> {
    let n = chain.len();
    if snapshot.num_objectives() != n {
        return Err(Error::invalid(format_args!(
            "snapshot has {} objectives but chain has {n}",
            snapshot.num_objectives()
        )));
    }
    if explore.len() != n {
        return Err(Error::invalid(format_args!(
            "explore flags have length {} but chain has {n}",
            explore.len()
        )));
    }

    let all: Vec<usize> = (0..snapshot.num_actions()).collect();
    let mut sets: Vec<Vec<usize>> = alloc::vec![all];
    for i in 0..n {
        let prev = sets.last().unwrap();
        let next = acceptable_actions_with_cmp(prev, snapshot.row(i), chain.specs()[i].tau, chain.mode, cmp)?;
        sets.push(next);
        if explore.is_set(i) {
            let prev = &sets[sets.len() - 2];
            let pick = prev[rng.gen_range(0..prev.len())];
            let trace = SelectionTrace { sets, explored: Some(i), chosen: pick };
            let action = Action::from_index(pick)
                .ok_or_else(|| Error::invalid("action index out of range"))?;
            return Ok((action, trace));
        }
    }

    let last_row = snapshot.row(n - 1);
    let final_set = sets.last().unwrap();
    let mut pick = final_set[0];
    for &a in final_set {
        if last_row[a] > last_row[pick] {
            pick = a;
        }
    }
    let trace = SelectionTrace { sets, explored: None, chosen: pick };
    let action =
        Action::from_index(pick).ok_or_else(|| Error::invalid("action index out of range"))?;
    Ok((action, trace))
}
