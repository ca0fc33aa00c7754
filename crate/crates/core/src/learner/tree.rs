use std::cmp::Ordering;

/// Minimum number of training rows on each side of a split.
const MIN_LEAF: usize = 2;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        /// A sample value: rows with `x <= threshold` go left.
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// Depth-limited least-squares regression tree. Thresholds are always
/// observed feature values, so the fitted partition depends only on the
/// order of each feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    root: Node,
}

impl RegressionTree {
    /// Fits on the rows of `x` selected by `sample` (repeats allowed).
    pub fn fit(x: &[Vec<f64>], y: &[f64], sample: &[usize], max_depth: usize) -> Self {
        Self {
            root: grow(x, y, sample.to_vec(), max_depth),
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }
}

fn mean(y: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn grow(x: &[Vec<f64>], y: &[f64], idx: Vec<usize>, depth: usize) -> Node {
    let leaf = Node::Leaf(mean(y, &idx));
    if depth == 0 || idx.len() < 2 * MIN_LEAF {
        return leaf;
    }
    let n = idx.len();
    let total: f64 = idx.iter().map(|&i| y[i]).sum();
    let base = total * total / n as f64;
    let mut best: Option<Best> = None;
    let mut order = idx.clone();
    for feature in 0..x.first().map_or(0, Vec::len) {
        order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
        let mut left_sum = 0.0;
        for split in 0..n - 1 {
            left_sum += y[order[split]];
            let here = x[order[split]][feature];
            if here.total_cmp(&x[order[split + 1]][feature]) == Ordering::Equal {
                continue;
            }
            let (nl, nr) = (split + 1, n - split - 1);
            if nl < MIN_LEAF || nr < MIN_LEAF {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - base;
            if gain > best.as_ref().map_or(1e-12, |b| b.gain) {
                best = Some(Best {
                    gain,
                    feature,
                    threshold: here,
                });
            }
        }
    }
    let Some(best) = best else {
        return leaf;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&i| x[i][best.feature] <= best.threshold);
    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(x, y, left, depth - 1)),
        right: Box::new(grow(x, y, right, depth - 1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_feature_is_learned() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i % 7) as f64, if i % 2 == 0 { -1.0 } else { 1.0 }])
            .collect();
        let y: Vec<f64> = (0..20)
            .map(|i| if i % 2 == 0 { -1.0 } else { 1.0 })
            .collect();
        let all: Vec<usize> = (0..20).collect();
        let tree = RegressionTree::fit(&x, &y, &all, 2);
        assert_eq!(tree.predict(&[3.0, -1.0]), -1.0);
        assert_eq!(tree.predict(&[3.0, 1.0]), 1.0);
    }

    #[test]
    fn constant_target_gives_leaf() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y = vec![1.0; 10];
        let tree = RegressionTree::fit(&x, &y, &(0..10).collect::<Vec<_>>(), 2);
        assert_eq!(tree.root, Node::Leaf(1.0));
    }

    #[test]
    fn respects_depth_limit() {
        let x: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..32).map(|i| ((i / 4) % 2) as f64).collect();
        let tree = RegressionTree::fit(&x, &y, &(0..32).collect::<Vec<_>>(), 1);
        match tree.root {
            Node::Split { left, right, .. } => {
                assert!(matches!(*left, Node::Leaf(_)));
                assert!(matches!(*right, Node::Leaf(_)));
            }
            Node::Leaf(_) => panic!("expected a split"),
        }
    }
}
