use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Samples;
use crate::seeding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        label: usize,
    },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary CART tree; `nodes[0]` is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

pub(super) struct TreeOptions {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Non-constant features examined per node.
    pub max_features: usize,
}

struct Split {
    feature: usize,
    threshold: f64,
    // Candidate quality is num / den = sum_c l_c^2 / n_l + sum_c r_c^2 / n_r,
    // larger meaning lower weighted Gini impurity; kept as an exact fraction.
    num: u128,
    den: u128,
}

impl Split {
    fn beats(&self, num: u128, den: u128) -> bool {
        num * self.den > self.num * den
    }
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (l, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = l;
        }
    }
    best
}

fn sum_squares(counts: &[usize]) -> u128 {
    counts.iter().map(|&c| (c as u128) * (c as u128)).sum()
}

/// Best threshold on one feature, or `None` when the feature is constant on
/// the node.
fn best_threshold(
    data: &Samples,
    idx: &[usize],
    feature: usize,
    total: &[usize],
    buf: &mut Vec<(f64, usize)>,
) -> Option<Split> {
    buf.clear();
    buf.extend(idx.iter().map(|&i| (data.x[i][feature], data.y[i])));
    buf.sort_by(|a, b| a.0.total_cmp(&b.0));
    if buf.first()?.0 == buf.last()?.0 {
        return None;
    }
    let n = buf.len();
    let mut left = vec![0usize; total.len()];
    let mut best: Option<Split> = None;
    for i in 0..n - 1 {
        left[buf[i].1] += 1;
        let (lo, hi) = (buf[i].0, buf[i + 1].0);
        if lo == hi {
            continue;
        }
        let nl = (i + 1) as u128;
        let nr = (n - i - 1) as u128;
        let sl = sum_squares(&left);
        let sr: u128 = total
            .iter()
            .zip(&left)
            .map(|(&t, &l)| ((t - l) as u128) * ((t - l) as u128))
            .sum();
        let (num, den) = (sl * nr + sr * nl, nl * nr);
        if best.as_ref().is_none_or(|b| b.beats(num, den)) {
            let mid = lo + (hi - lo) / 2.0;
            best = Some(Split {
                feature,
                threshold: if mid < hi { mid } else { lo },
                num,
                den,
            });
        }
    }
    best
}

impl Tree {
    /// Grows a tree on all of `data`. With `rng`, features are visited in a
    /// random order per node and the search stops after `max_features`
    /// non-constant ones; otherwise every feature is examined in index order.
    pub(super) fn fit(data: &Samples, opts: &TreeOptions, mut rng: Option<&mut ChaCha8Rng>) -> Tree {
        let n_features = data.n_features();
        let mut nodes = vec![Node::Leaf { label: 0 }];
        let mut stack = vec![(0usize, (0..data.len()).collect::<Vec<usize>>(), 0usize)];
        let mut buf = Vec::new();
        let mut order: Vec<usize> = (0..n_features).collect();
        while let Some((slot, idx, depth)) = stack.pop() {
            let mut counts = vec![0usize; data.n_classes];
            for &i in &idx {
                counts[data.y[i]] += 1;
            }
            let label = majority(&counts);
            let pure = counts[label] == idx.len();
            let depth_left = opts.max_depth.is_none_or(|d| depth < d);
            if pure || !depth_left || idx.len() < opts.min_samples_split.max(2) {
                nodes[slot] = Node::Leaf { label };
                continue;
            }
            if let Some(r) = rng.as_deref_mut() {
                order.shuffle(r);
            }
            let mut best: Option<Split> = None;
            let mut examined = 0;
            for &f in &order {
                if examined >= opts.max_features {
                    break;
                }
                if let Some(s) = best_threshold(data, &idx, f, &counts, &mut buf) {
                    examined += 1;
                    if best.as_ref().is_none_or(|b| b.beats(s.num, s.den)) {
                        best = Some(s);
                    }
                }
            }
            let Some(split) = best else {
                nodes[slot] = Node::Leaf { label };
                continue;
            };
            let (li, ri): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&i| data.x[i][split.feature] <= split.threshold);
            let left = nodes.len();
            let right = left + 1;
            nodes.push(Node::Leaf { label: 0 });
            nodes.push(Node::Leaf { label: 0 });
            nodes[slot] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            stack.push((right, ri, depth + 1));
            stack.push((left, li, depth + 1));
        }
        Tree { nodes }
    }

    pub fn predict(&self, v: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if v[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Children always follow their parent, so every walk terminates.
    pub(super) fn is_consistent(&self, n_features: usize, n_classes: usize) -> bool {
        !self.nodes.is_empty()
            && self.nodes.iter().enumerate().all(|(i, n)| match n {
                Node::Leaf { label } => *label < n_classes,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    *feature < n_features
                        && !threshold.is_nan()
                        && *left > i
                        && *right > i
                        && *left < self.nodes.len()
                        && *right < self.nodes.len()
                }
            })
    }
}

fn fit_member(data: &Samples, opts: &TreeOptions, seed: u64, t: usize) -> Tree {
    let mut rng = seeding::stream_rng(seed, t as u64);
    let n = data.len();
    let boot: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    Tree::fit(&data.select(&boot), opts, Some(&mut rng))
}

/// Bagged trees; tree `t` draws from its own stream of `seed`.
pub(super) fn fit_forest(data: &Samples, n_trees: usize, opts: &TreeOptions, seed: u64) -> Vec<Tree> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_trees)
            .into_par_iter()
            .map(|t| fit_member(data, opts, seed, t))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_trees).map(|t| fit_member(data, opts, seed, t)).collect()
    }
}
