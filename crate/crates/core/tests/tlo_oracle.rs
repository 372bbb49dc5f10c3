//! Brute-force oracles for the thresholded lexicographic selection machinery.
//!
//! The oracle implementations here use plain set enumeration and standard
//! library lexicographic slice ordering; they share no code with the library
//! paths they check.

use std::collections::BTreeSet;

use lexi_morl_core::select::{
    superior, tlo_select, ExploreFlags, ObjectiveChain, ObjectiveSpec, QSnapshot, SelectionTrace,
    ThresholdMode,
};
use lexi_morl_core::Action;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAUS: [f64; 4] = [0.5, 0.8, 0.95, 1.0];

fn oracle_acceptable(
    prev: &BTreeSet<usize>,
    q: &[f64],
    tau: f64,
    mode: ThresholdMode,
) -> BTreeSet<usize> {
    let mut argmax = *prev.iter().next().unwrap();
    for &a in prev {
        if q[a] > q[argmax] {
            argmax = a;
        }
    }
    let bar = match mode {
        ThresholdMode::Literal => tau * q[argmax],
        ThresholdMode::Slack => q[argmax] - (1.0 - tau) * q[argmax].abs(),
    };
    let mut out: BTreeSet<usize> = prev.iter().copied().filter(|&a| q[a] >= bar).collect();
    out.insert(argmax);
    out
}

struct OracleOutcome {
    sets: Vec<BTreeSet<usize>>,
    greedy: usize,
}

fn oracle_tlo(rows: &[Vec<f64>], taus: &[f64], mode: ThresholdMode) -> OracleOutcome {
    let n_actions = rows[0].len();
    let mut sets: Vec<BTreeSet<usize>> = vec![(0..n_actions).collect()];
    for (row, &tau) in rows.iter().zip(taus) {
        let next = oracle_acceptable(sets.last().unwrap(), row, tau, mode);
        sets.push(next);
    }
    let last_row = rows.last().unwrap();
    let final_set = sets.last().unwrap();
    let mut greedy = *final_set.iter().next().unwrap();
    for &a in final_set {
        if last_row[a] > last_row[greedy] {
            greedy = a;
        }
    }
    OracleOutcome { sets, greedy }
}

fn random_rows<R: Rng>(rng: &mut R, n_obj: usize, n_actions: usize) -> Vec<Vec<f64>> {
    (0..n_obj)
        .map(|_| {
            (0..n_actions)
                .map(|_| match rng.gen_range(0..10) {
                    // mixed signs, ties and magnitude spread
                    0 => 0.0,
                    1 => rng.gen_range(-1.0e-3..1.0e-3),
                    2 => rng.gen_range(-1000.0..1000.0),
                    _ => rng.gen_range(-10.0..10.0),
                })
                .collect()
        })
        .map(|mut row: Vec<f64>| {
            // occasionally duplicate a value to force ties
            if row.len() >= 2 && row[0] > 0.0 {
                let v = row[0];
                if v > 5.0 {
                    row[1] = v;
                }
            }
            row
        })
        .collect()
}

fn chain_for(taus: &[f64], mode: ThresholdMode) -> ObjectiveChain {
    ObjectiveChain::new(
        taus.iter()
            .enumerate()
            .map(|(i, &tau)| ObjectiveSpec { name: format!("o{i}"), tau, clamp: None })
            .collect(),
    )
    .unwrap()
    .with_mode(mode)
}

fn trace_sets_match(trace: &SelectionTrace, oracle_sets: &[BTreeSet<usize>]) -> bool {
    if trace.sets.len() != oracle_sets.len() {
        return false;
    }
    trace
        .sets
        .iter()
        .zip(oracle_sets)
        .all(|(got, want)| got.iter().copied().collect::<BTreeSet<usize>>() == *want)
}

/// 10,000 seeded random q-tables: the selected action and every acceptable
/// set must match the enumeration oracle exactly.
#[test]
fn tlo_select_matches_brute_force_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7107_5313);
    let mut cases = 0usize;
    while cases < 10_000 {
        let n_obj = rng.gen_range(1..=3);
        let taus: Vec<f64> = (0..n_obj).map(|_| TAUS[rng.gen_range(0..TAUS.len())]).collect();
        let mode = if rng.gen_bool(0.5) { ThresholdMode::Literal } else { ThresholdMode::Slack };
        let rows = random_rows(&mut rng, n_obj, Action::COUNT);

        let oracle = oracle_tlo(&rows, &taus, mode);
        let snapshot = QSnapshot::new(rows.clone()).unwrap();
        let chain = chain_for(&taus, mode);
        let mut sel_rng = ChaCha8Rng::seed_from_u64(cases as u64);
        let (action, trace) =
            tlo_select(&snapshot, &chain, &ExploreFlags::none(n_obj), &mut sel_rng).unwrap();

        assert_eq!(
            action.index(),
            oracle.greedy,
            "case {cases}: rows {rows:?} taus {taus:?} mode {mode:?} trace {trace:?}",
        );
        assert!(
            trace_sets_match(&trace, &oracle.sets),
            "case {cases}: sets {:?} vs oracle {:?}",
            trace.sets,
            oracle.sets
        );
        cases += 1;
    }
}

/// Exploration at objective i must return a member of the previous oracle set
/// and record the sets computed so far.
#[test]
fn tlo_select_exploration_draws_from_oracle_previous_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    for case in 0..2_000 {
        let n_obj = rng.gen_range(1..=3);
        let taus: Vec<f64> = (0..n_obj).map(|_| TAUS[rng.gen_range(0..TAUS.len())]).collect();
        let rows = random_rows(&mut rng, n_obj, Action::COUNT);
        let explored = rng.gen_range(0..n_obj);

        let oracle = oracle_tlo(&rows, &taus, ThresholdMode::Literal);
        let snapshot = QSnapshot::new(rows).unwrap();
        let chain = chain_for(&taus, ThresholdMode::Literal);
        let flags = ExploreFlags::one(n_obj, explored).unwrap();
        let mut sel_rng = ChaCha8Rng::seed_from_u64(case);
        let (action, trace) = tlo_select(&snapshot, &chain, &flags, &mut sel_rng).unwrap();

        assert!(oracle.sets[explored].contains(&action.index()));
        assert_eq!(trace.explored, Some(explored));
        assert_eq!(trace.sets.len(), explored + 2);
        assert!(trace_sets_match(&trace, &oracle.sets[..explored + 2]));
    }
}

/// Monotone restriction and argmax membership along the whole chain.
#[test]
fn acceptable_sets_are_nested_and_keep_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    for case in 0..5_000 {
        let n_obj = rng.gen_range(1..=3);
        let taus: Vec<f64> = (0..n_obj).map(|_| TAUS[rng.gen_range(0..TAUS.len())]).collect();
        let mode = if rng.gen_bool(0.5) { ThresholdMode::Literal } else { ThresholdMode::Slack };
        let rows = random_rows(&mut rng, n_obj, Action::COUNT);
        let snapshot = QSnapshot::new(rows.clone()).unwrap();
        let chain = chain_for(&taus, mode);
        let mut sel_rng = ChaCha8Rng::seed_from_u64(case);
        let (action, trace) =
            tlo_select(&snapshot, &chain, &ExploreFlags::none(n_obj), &mut sel_rng).unwrap();

        for i in 1..trace.sets.len() {
            let prev: BTreeSet<usize> = trace.sets[i - 1].iter().copied().collect();
            let cur: BTreeSet<usize> = trace.sets[i].iter().copied().collect();
            assert!(cur.is_subset(&prev), "sets not nested at level {i}");
            assert!(!cur.is_empty());
            // objective-(i-1) argmax over the previous set survives
            let row = &rows[i - 1];
            let mut argmax = *prev.iter().next().unwrap();
            for &a in &prev {
                if row[a] > row[argmax] {
                    argmax = a;
                }
            }
            assert!(cur.contains(&argmax));
        }
        assert!(trace.sets.last().unwrap().contains(&action.index()));
    }
}

/// τ = 1 with all-distinct positive values collapses each set to the running
/// argmax; τ → 0 with positive values keeps the previous set.
#[test]
fn tau_limit_behavior() {
    let rows = vec![vec![3.0, 9.0, 4.0, 1.0], vec![5.0, 2.0, 8.0, 6.0]];
    let snapshot = QSnapshot::new(rows).unwrap();

    let chain = chain_for(&[1.0, 1.0], ThresholdMode::Literal);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (action, trace) = tlo_select(&snapshot, &chain, &ExploreFlags::none(2), &mut rng).unwrap();
    assert_eq!(trace.sets[1], vec![1]);
    assert_eq!(trace.sets[2], vec![1]);
    assert_eq!(action.index(), 1);

    let chain = chain_for(&[1e-12, 1e-12], ThresholdMode::Literal);
    let (_, trace) = tlo_select(&snapshot, &chain, &ExploreFlags::none(2), &mut rng).unwrap();
    assert_eq!(trace.sets[1], vec![0, 1, 2, 3]);
    assert_eq!(trace.sets[2], vec![0, 1, 2, 3]);
}

/// Scaling every Q row by the same positive power of two leaves the selected
/// action unchanged (thresholds are percentages).
#[test]
fn positive_rescaling_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5CA1E);
    for case in 0..3_000 {
        let n_obj = rng.gen_range(1..=3);
        let taus: Vec<f64> = (0..n_obj).map(|_| TAUS[rng.gen_range(0..TAUS.len())]).collect();
        let rows = random_rows(&mut rng, n_obj, Action::COUNT);
        let k = [0.25, 0.5, 2.0, 4.0, 1024.0][rng.gen_range(0..5)];
        let scaled: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().map(|v| v * k).collect()).collect();

        let chain = chain_for(&taus, ThresholdMode::Literal);
        let mut r1 = ChaCha8Rng::seed_from_u64(case);
        let mut r2 = ChaCha8Rng::seed_from_u64(case);
        let (a1, _) = tlo_select(
            &QSnapshot::new(rows).unwrap(),
            &chain,
            &ExploreFlags::none(n_obj),
            &mut r1,
        )
        .unwrap();
        let (a2, _) = tlo_select(
            &QSnapshot::new(scaled).unwrap(),
            &chain,
            &ExploreFlags::none(n_obj),
            &mut r2,
        )
        .unwrap();
        assert_eq!(a1, a2, "case {case}: rescaling by {k} changed the action");
    }
}

/// `superior` equals the standard-library lexicographic slice ordering on the
/// suffix starting at level i (greater-or-equal), over 10,000 random pairs.
#[test]
fn superior_matches_slice_lexicographic_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x500_0001);
    for case in 0..10_000 {
        let n = rng.gen_range(1..=4);
        let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        // force frequent equal prefixes and full equality
        match case % 4 {
            0 => {
                b = a.clone();
            }
            1 => {
                for i in 0..n / 2 {
                    b[i] = a[i];
                }
            }
            2 => {
                for i in 0..n {
                    a[i] = (a[i] * 2.0).round() / 2.0;
                    b[i] = (b[i] * 2.0).round() / 2.0;
                }
            }
            _ => {}
        }
        let i = rng.gen_range(1..=n);
        let got = superior(&a, &b, i).unwrap();
        let want = a[i - 1..] >= b[i - 1..]; // slice lexicographic order
        assert_eq!(got, want, "case {case}: {a:?} vs {b:?} at level {i}");
        // equality through the last level is superior both ways
        if a == b {
            assert!(got);
            assert!(superior(&b, &a, i).unwrap());
        }
    }
}

/// Mutual superiority implies the vectors are equal element-wise from the
/// starting level on.
#[test]
fn mutual_superiority_means_equality() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0E);
    for case in 0..5_000 {
        let n = rng.gen_range(1..=4);
        let a: Vec<f64> = (0..n).map(|_| (rng.gen_range(-4.0..4.0f64)).round()).collect();
        let b: Vec<f64> = if case % 3 == 0 {
            a.clone()
        } else {
            (0..n).map(|_| (rng.gen_range(-4.0..4.0f64)).round()).collect()
        };
        if superior(&a, &b, 1).unwrap() && superior(&b, &a, 1).unwrap() {
            assert_eq!(a, b);
        }
    }
}
