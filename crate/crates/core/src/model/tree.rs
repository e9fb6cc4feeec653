//! Depth-limited regression trees with sparsity-aware splits.
//!
//! Split search scans every boundary between distinct observed values of a
//! feature and evaluates routing the rows with that feature missing to the
//! left and to the right child; the direction with the higher gain is kept
//! and stored on the node as the default direction for inference. Ties in
//! gain are broken toward the lower feature index, the lower threshold, and
//! the left default, in that order, so fits are deterministic.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Number of candidate features per split (`None` = all), sampled
    /// without replacement; used by the random forest.
    pub mtry: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        default_left: bool,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Arena-allocated regression tree; node 0 is the root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, Default)]
struct Stats {
    sum: f64,
    sum_sq: f64,
    count: usize,
}

impl Stats {
    fn add(&mut self, y: f64) {
        self.sum += y;
        self.sum_sq += y * y;
        self.count += 1;
    }

    fn merge(self, other: Stats) -> Stats {
        Stats {
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
            count: self.count + other.count,
        }
    }

    fn sse(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum_sq - self.sum * self.sum / self.count as f64
        }
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
    default_left: bool,
}

impl RegressionTree {
    /// Grow a tree on the rows in `rows` of `x` (NaN = missing) against
    /// `targets`. `rng` is only consulted when `params.mtry` is set.
    pub fn grow(
        x: &DMatrix<f64>,
        targets: &[f64],
        rows: &[usize],
        params: &TreeParams,
        mut rng: Option<&mut StreamRng>,
    ) -> RegressionTree {
        let mut tree = RegressionTree { nodes: Vec::new() };
        tree.grow_node(x, targets, rows, params, 0, &mut rng);
        tree
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() { *default_left } else { v < *threshold };
                    idx = if go_left { *left } else { *right };
                }
            }
        }
    }

    /// Copy of the tree with every split's feature index remapped.
    /// Supports model surgery such as building feature-swapped ensembles.
    pub fn map_features(&self, remap: impl Fn(usize) -> usize) -> RegressionTree {
        RegressionTree {
            nodes: self
                .nodes
                .iter()
                .map(|n| match n {
                    Node::Leaf { value } => Node::Leaf { value: *value },
                    Node::Split {
                        feature,
                        threshold,
                        default_left,
                        left,
                        right,
                    } => Node::Split {
                        feature: remap(*feature),
                        threshold: *threshold,
                        default_left: *default_left,
                        left: *left,
                        right: *right,
                    },
                })
                .collect(),
        }
    }

    /// Feature indices used by at least one split.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    fn grow_node(
        &mut self,
        x: &DMatrix<f64>,
        targets: &[f64],
        rows: &[usize],
        params: &TreeParams,
        depth: usize,
        rng: &mut Option<&mut StreamRng>,
    ) -> usize {
        let mut node_stats = Stats::default();
        for &r in rows {
            node_stats.add(targets[r]);
        }

        let can_split = depth < params.max_depth && rows.len() >= 2 * params.min_samples_leaf;
        let best = if can_split {
            Self::best_split(x, targets, rows, params, node_stats, rng)
        } else {
            None
        };

        match best {
            None => {
                self.nodes.push(Node::Leaf {
                    value: node_stats.mean(),
                });
                self.nodes.len() - 1
            }
            Some(split) => {
                let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
                for &r in rows {
                    let v = x[(r, split.feature)];
                    let go_left = if v.is_nan() {
                        split.default_left
                    } else {
                        v < split.threshold
                    };
                    if go_left {
                        left_rows.push(r);
                    } else {
                        right_rows.push(r);
                    }
                }
                let idx = self.nodes.len();
                self.nodes.push(Node::Leaf { value: 0.0 }); // placeholder
                let left = self.grow_node(x, targets, &left_rows, params, depth + 1, rng);
                let right = self.grow_node(x, targets, &right_rows, params, depth + 1, rng);
                self.nodes[idx] = Node::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    default_left: split.default_left,
                    left,
                    right,
                };
                idx
            }
        }
    }

    fn best_split(
        x: &DMatrix<f64>,
        targets: &[f64],
        rows: &[usize],
        params: &TreeParams,
        node_stats: Stats,
        rng: &mut Option<&mut StreamRng>,
    ) -> Option<BestSplit> {
        let p = x.ncols();
        let candidates: Vec<usize> = match (params.mtry, rng.as_mut()) {
            (Some(m), Some(rng)) if m < p => {
                let mut c = rng.sample_without_replacement(p, m);
                c.sort_unstable();
                c
            }
            _ => (0..p).collect(),
        };

        let parent_sse = node_stats.sse();
        let mut best: Option<BestSplit> = None;

        for &feature in &candidates {
            // Observed (value, target) pairs sorted by value; stable sort
            // keeps row order on ties for determinism.
            let mut observed: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
            let mut missing = Stats::default();
            for &r in rows {
                let v = x[(r, feature)];
                if v.is_nan() {
                    missing.add(targets[r]);
                } else {
                    observed.push((v, targets[r]));
                }
            }
            if observed.len() < 2 {
                continue; // all-missing or constant-by-count: not splittable
            }
            observed.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left = Stats::default();
            let mut right = Stats::default();
            for &(_, y) in &observed {
                right.add(y);
            }

            for k in 1..observed.len() {
                let y = observed[k - 1].1;
                left.add(y);
                right.sum -= y;
                right.sum_sq -= y * y;
                right.count -= 1;

                if observed[k].0 == observed[k - 1].0 {
                    continue; // not a boundary between distinct values
                }
                let threshold = 0.5 * (observed[k - 1].0 + observed[k].0);

                for default_left in [true, false] {
                    let (l, r) = if default_left {
                        (left.merge(missing), right)
                    } else {
                        (left, right.merge(missing))
                    };
                    if l.count < params.min_samples_leaf || r.count < params.min_samples_leaf {
                        continue;
                    }
                    let gain = parent_sse - l.sse() - r.sse();
                    if gain > 1e-12 && best.as_ref().map_or(true, |b| gain > b.gain) {
                        best = Some(BestSplit {
                            gain,
                            feature,
                            threshold,
                            default_left,
                        });
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(depth: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            min_samples_leaf: 1,
            mtry: None,
        }
    }

    /// Exhaustive oracle: best threshold by brute-force SSE over every
    /// observed split point, missing rows tried on both sides.
    fn oracle_best_gain(xs: &[f64], ys: &[f64]) -> (f64, f64) {
        let total: Stats = {
            let mut s = Stats::default();
            for &y in ys {
                s.add(y);
            }
            s
        };
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        let mut values: Vec<f64> = xs.iter().copied().filter(|v| !v.is_nan()).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            for default_left in [true, false] {
                let mut l = Stats::default();
                let mut r = Stats::default();
                for (&x, &y) in xs.iter().zip(ys) {
                    let go_left = if x.is_nan() { default_left } else { x < t };
                    if go_left {
                        l.add(y);
                    } else {
                        r.add(y);
                    }
                }
                let gain = total.sse() - l.sse() - r.sse();
                if gain > best.0 {
                    best = (gain, t);
                }
            }
        }
        best
    }

    #[test]
    fn splits_step_data_at_the_step() {
        let xs = [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];
        let ys = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let x = DMatrix::from_column_slice(8, 1, &xs);
        let rows: Vec<usize> = (0..8).collect();
        let tree = RegressionTree::grow(&x, &ys, &rows, &params(1), None);

        let (_, oracle_t) = oracle_best_gain(&xs, &ys);
        match tree.nodes()[0] {
            Node::Split { threshold, .. } => assert!((threshold - oracle_t).abs() < 1e-12),
            _ => panic!("expected a split"),
        }
        assert!((tree.predict_row(&[-1.0]) - 0.0).abs() < 1e-12);
        assert!((tree.predict_row(&[1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_rows_follow_the_higher_gain_direction() {
        // Step data with 30% of x masked; the masked rows all have y = 1,
        // so routing them right (the y = 1 side) has strictly higher gain.
        let xs = [
            -2.0,
            -1.5,
            -1.0,
            -0.5,
            0.5,
            1.0,
            f64::NAN,
            f64::NAN,
            f64::NAN,
        ];
        let ys = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let x = DMatrix::from_column_slice(9, 1, &xs);
        let rows: Vec<usize> = (0..9).collect();
        let tree = RegressionTree::grow(&x, &ys, &rows, &params(1), None);

        match tree.nodes()[0] {
            Node::Split { default_left, .. } => assert!(!default_left),
            _ => panic!("expected a split"),
        }
        // A missing-x row lands in the default (right) leaf.
        assert!((tree.predict_row(&[f64::NAN]) - 1.0).abs() < 1e-12);

        // Oracle agreement on the gain-maximizing routing.
        let (gain, _) = oracle_best_gain(&xs, &ys);
        assert!(gain > 0.0);
    }

    #[test]
    fn stored_default_direction_beats_the_alternative() {
        // Post-hoc re-check of default-direction optimality from training
        // data, for every split in a depth-2 tree.
        let mut rng = StreamRng::new(17);
        let n = 80;
        let x = DMatrix::from_fn(n, 2, |i, j| {
            if (i * 7 + j * 3) % 5 == 0 {
                f64::NAN
            } else {
                rng.standard_normal()
            }
        });
        let ys: Vec<f64> = (0..n)
            .map(|i| {
                let v = x[(i, 0)];
                if v.is_nan() {
                    1.5
                } else {
                    v.signum()
                }
            })
            .collect();
        let rows: Vec<usize> = (0..n).collect();
        let tree = RegressionTree::grow(
            &x,
            &ys,
            &rows,
            &TreeParams {
                max_depth: 2,
                min_samples_leaf: 2,
                mtry: None,
            },
            None,
        );

        // Re-derive the rows reaching each split node, then compare gains.
        fn walk(
            tree: &RegressionTree,
            x: &DMatrix<f64>,
            ys: &[f64],
            rows: Vec<usize>,
            idx: usize,
        ) {
            if let Node::Split {
                feature,
                threshold,
                default_left,
                left,
                right,
            } = &tree.nodes()[idx]
            {
                let gain_for = |miss_left: bool| {
                    let (mut l, mut r) = (Stats::default(), Stats::default());
                    let mut total = Stats::default();
                    for &row in &rows {
                        total.add(ys[row]);
                        let v = x[(row, *feature)];
                        let go_left = if v.is_nan() { miss_left } else { v < *threshold };
                        if go_left {
                            l.add(ys[row]);
                        } else {
                            r.add(ys[row]);
                        }
                    }
                    total.sse() - l.sse() - r.sse()
                };
                assert!(gain_for(*default_left) >= gain_for(!*default_left) - 1e-9);

                let (mut lr, mut rr) = (Vec::new(), Vec::new());
                for &row in &rows {
                    let v = x[(row, *feature)];
                    let go_left = if v.is_nan() { *default_left } else { v < *threshold };
                    if go_left {
                        lr.push(row);
                    } else {
                        rr.push(row);
                    }
                }
                walk(tree, x, ys, lr, *left);
                walk(tree, x, ys, rr, *right);
            }
        }
        walk(&tree, &x, &ys, rows, 0);
    }

    #[test]
    fn all_missing_feature_is_skipped_and_constant_target_is_a_leaf() {
        let x = DMatrix::from_column_slice(4, 1, &[f64::NAN; 4]);
        let ys = [1.0, 2.0, 3.0, 4.0];
        let tree = RegressionTree::grow(&x, &ys, &[0, 1, 2, 3], &params(3), None);
        assert_eq!(tree.nodes().len(), 1);
        assert!((tree.predict_row(&[f64::NAN]) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [0.0, 0.0, 0.0, 0.0, 0.0, 10.0];
        let x = DMatrix::from_column_slice(6, 1, &xs);
        let tree = RegressionTree::grow(
            &x,
            &ys,
            &[0, 1, 2, 3, 4, 5],
            &TreeParams {
                max_depth: 1,
                min_samples_leaf: 3,
                mtry: None,
            },
            None,
        );
        if let Node::Split { threshold, .. } = tree.nodes()[0] {
            // The isolated-outlier split (5 | 1) is forbidden; both children
            // must hold at least 3 rows.
            let left = xs.iter().filter(|&&v| v < threshold).count();
            assert!(left >= 3 && 6 - left >= 3);
        } else {
            panic!("expected a split");
        }
    }
}
