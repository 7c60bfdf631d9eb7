//! Cost-accuracy Pareto frontier.
//!
//! A point is dominated when some other point costs no more and is at least
//! as accurate, with one of the two strict. The frontier is computed by a
//! cost-ascending sweep: within each equal-cost group only the maximum
//! accuracy survives, and a group survives only by strictly beating every
//! cheaper point. Duplicate-coordinate points never dominate each other, so
//! all copies are retained.

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub label: String,
    pub cost_usd: f64,
    pub accuracy: f64,
}

impl ParetoPoint {
    pub fn new(label: impl Into<String>, cost_usd: f64, accuracy: f64) -> Self {
        ParetoPoint {
            label: label.into(),
            cost_usd,
            accuracy,
        }
    }

    fn validate(&self) -> Result<(), EvalError> {
        if !(self.cost_usd > 0.0) || !self.cost_usd.is_finite() {
            return Err(EvalError::NonPositiveCost {
                label: self.label.clone(),
                cost: self.cost_usd,
            });
        }
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(EvalError::InvalidAccuracy {
                label: self.label.clone(),
                accuracy: self.accuracy,
            });
        }
        Ok(())
    }
}

/// Indices of the non-dominated points, ordered by cost ascending (input
/// order within equal coordinates).
fn frontier_indices(points: &[ParetoPoint]) -> Result<Vec<usize>, EvalError> {
    for p in points {
        p.validate()?;
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .cost_usd
            .partial_cmp(&points[b].cost_usd)
            .expect("costs are finite")
    });

    let mut survivors = Vec::new();
    let mut best_cheaper_accuracy = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        // Group indices sharing this exact cost.
        let cost = points[order[i]].cost_usd;
        let mut j = i;
        while j < order.len() && points[order[j]].cost_usd == cost {
            j += 1;
        }
        let group = &order[i..j];
        let group_max = group
            .iter()
            .map(|&idx| points[idx].accuracy)
            .fold(f64::NEG_INFINITY, f64::max);
        if group_max > best_cheaper_accuracy {
            survivors.extend(
                group
                    .iter()
                    .copied()
                    .filter(|&idx| points[idx].accuracy == group_max),
            );
            best_cheaper_accuracy = group_max;
        }
        i = j;
    }
    Ok(survivors)
}

/// The non-dominated points, sorted by cost ascending.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Result<Vec<ParetoPoint>, EvalError> {
    Ok(frontier_indices(points)?
        .into_iter()
        .map(|i| points[i].clone())
        .collect())
}

/// Per-point frontier membership, aligned with the input order.
pub fn on_frontier_flags(points: &[ParetoPoint]) -> Result<Vec<bool>, EvalError> {
    let mut flags = vec![false; points.len()];
    for i in frontier_indices(points)? {
        flags[i] = true;
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(label: &str, cost: f64, acc: f64) -> ParetoPoint {
        ParetoPoint::new(label, cost, acc)
    }

    /// Independent O(n²) dominance filter used as the test oracle.
    fn oracle_frontier(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
        let mut kept: Vec<(usize, ParetoPoint)> = points
            .iter()
            .enumerate()
            .filter(|(i, a)| {
                !points.iter().enumerate().any(|(j, b)| {
                    j != *i
                        && b.cost_usd <= a.cost_usd
                        && b.accuracy >= a.accuracy
                        && (b.cost_usd < a.cost_usd || b.accuracy > a.accuracy)
                })
            })
            .map(|(i, a)| (i, a.clone()))
            .collect();
        kept.sort_by(|(ia, a), (ib, b)| {
            a.cost_usd
                .partial_cmp(&b.cost_usd)
                .unwrap()
                .then(ia.cmp(ib))
        });
        kept.into_iter().map(|(_, a)| a).collect()
    }

    #[test]
    fn order_of_magnitude_ladder_is_all_on_frontier() {
        let points = vec![p("s1", 5.0, 0.88), p("s2", 50.0, 0.92), p("s3", 500.0, 0.96)];
        let frontier = pareto_frontier(&points).unwrap();
        assert_eq!(frontier, points);
    }

    #[test]
    fn dominated_point_is_excluded() {
        let points = vec![
            p("s1", 5.0, 0.88),
            p("s2", 50.0, 0.92),
            p("s3", 500.0, 0.96),
            p("dominated", 60.0, 0.90),
        ];
        let frontier = pareto_frontier(&points).unwrap();
        let labels: Vec<&str> = frontier.iter().map(|q| q.label.as_str()).collect();
        assert_eq!(labels, ["s1", "s2", "s3"]);
        assert_eq!(
            on_frontier_flags(&points).unwrap(),
            vec![true, true, true, false]
        );
    }

    #[test]
    fn single_point_is_its_own_frontier() {
        let points = vec![p("only", 1.0, 0.5)];
        assert_eq!(pareto_frontier(&points).unwrap(), points);
    }

    #[test]
    fn duplicate_coordinate_points_are_all_retained() {
        let points = vec![p("a", 10.0, 0.8), p("b", 10.0, 0.8), p("worse", 10.0, 0.7)];
        let frontier = pareto_frontier(&points).unwrap();
        let labels: Vec<&str> = frontier.iter().map(|q| q.label.as_str()).collect();
        assert_eq!(labels, ["a", "b"]);
    }

    #[test]
    fn equal_cost_keeps_only_max_accuracy() {
        let points = vec![p("lo", 10.0, 0.6), p("hi", 10.0, 0.9)];
        let frontier = pareto_frontier(&points).unwrap();
        assert_eq!(frontier.len(), 1);
        assert_eq!(frontier[0].label, "hi");
    }

    #[test]
    fn cheaper_equal_accuracy_dominates() {
        let points = vec![p("cheap", 5.0, 0.9), p("pricey", 50.0, 0.9)];
        let frontier = pareto_frontier(&points).unwrap();
        assert_eq!(frontier.len(), 1);
        assert_eq!(frontier[0].label, "cheap");
    }

    #[test]
    fn nonpositive_cost_is_rejected() {
        assert!(matches!(
            pareto_frontier(&[p("zero", 0.0, 0.5)]),
            Err(EvalError::NonPositiveCost { .. })
        ));
        assert!(matches!(
            pareto_frontier(&[p("neg", -1.0, 0.5)]),
            Err(EvalError::NonPositiveCost { .. })
        ));
    }

    #[test]
    fn empty_input_gives_empty_frontier() {
        assert!(pareto_frontier(&[]).unwrap().is_empty());
    }

    fn arb_points() -> impl Strategy<Value = Vec<ParetoPoint>> {
        proptest::collection::vec(
            // Coarse grids make coordinate collisions (the tricky cases) common.
            (1u32..20, 0u32..=10),
            1..100,
        )
        .prop_map(|raw| {
            raw.into_iter()
                .enumerate()
                .map(|(i, (c, a))| p(&format!("p{i}"), c as f64, a as f64 / 10.0))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force_oracle(points in arb_points()) {
            let got = pareto_frontier(&points).unwrap();
            let want = oracle_frontier(&points);
            prop_assert_eq!(got, want);
        }

        #[test]
        fn frontier_contains_extremes(points in arb_points()) {
            let frontier = pareto_frontier(&points).unwrap();
            prop_assert!(!frontier.is_empty());
            let max_acc = points.iter().map(|q| q.accuracy).fold(f64::NEG_INFINITY, f64::max);
            let min_cost = points.iter().map(|q| q.cost_usd).fold(f64::INFINITY, f64::min);
            prop_assert!(frontier.iter().any(|q| q.accuracy == max_acc));
            prop_assert!(frontier.iter().any(|q| q.cost_usd == min_cost));
            // Sorted by cost ascending.
            for w in frontier.windows(2) {
                prop_assert!(w[0].cost_usd <= w[1].cost_usd);
            }
        }

        #[test]
        fn flags_agree_with_frontier_multiset(points in arb_points()) {
            let flags = on_frontier_flags(&points).unwrap();
            let frontier = pareto_frontier(&points).unwrap();
            let flagged: usize = flags.iter().filter(|f| **f).count();
            prop_assert_eq!(flagged, frontier.len());
            for (point, flag) in points.iter().zip(&flags) {
                let in_frontier = frontier.iter().any(|q| q == point);
                prop_assert_eq!(*flag, in_frontier);
            }
        }
    }
}
