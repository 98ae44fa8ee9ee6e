use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::FeatureKind;
use super::{argmax, Prediction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Split {
    Leaf,
    /// `value <= threshold` goes left.
    Numeric {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// One child per value seen at this node; unseen values stop here.
    Categorical {
        feature: usize,
        branches: Vec<(i64, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub class_counts: Vec<usize>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeState {
    pub nodes: Vec<Node>,
    pub max_depth: usize,
    pub min_leaf: usize,
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

struct Builder<'a> {
    kinds: &'a [FeatureKind],
    rows: &'a [(Vec<f64>, usize)],
    n_classes: usize,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

enum Candidate {
    Numeric { feature: usize, threshold: f64 },
    Categorical { feature: usize },
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.rows[i].1] += 1;
        }
        c
    }

    fn best_split(&self, idx: &[usize], parent_entropy: f64) -> Option<(f64, Candidate)> {
        let n = idx.len();
        let mut best: Option<(f64, Candidate)> = None;
        let consider = |gain: f64, cand: Candidate, best: &mut Option<(f64, Candidate)>| {
            if gain > 1e-12 && best.as_ref().is_none_or(|(g, _)| gain > *g) {
                *best = Some((gain, cand));
            }
        };
        for (j, kind) in self.kinds.iter().enumerate() {
            match kind {
                FeatureKind::Numeric => {
                    let mut order: Vec<(f64, usize)> = idx.iter().map(|&i| (self.rows[i].0[j], i)).collect();
                    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    let mut left = vec![0usize; self.n_classes];
                    let mut right = self.counts(idx);
                    for p in 1..n {
                        let y = self.rows[order[p - 1].1].1;
                        left[y] += 1;
                        right[y] -= 1;
                        let (lo, hi) = (order[p - 1].0, order[p].0);
                        if lo == hi || p < self.min_leaf || n - p < self.min_leaf {
                            continue;
                        }
                        let h = (p as f64 * entropy(&left, p) + (n - p) as f64 * entropy(&right, n - p)) / n as f64;
                        let mut threshold = lo + (hi - lo) / 2.0;
                        if threshold >= hi {
                            threshold = lo;
                        }
                        consider(
                            parent_entropy - h,
                            Candidate::Numeric { feature: j, threshold },
                            &mut best,
                        );
                    }
                }
                FeatureKind::Categorical => {
                    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
                    for &i in idx {
                        let code = self.rows[i].0[j] as i64;
                        groups.entry(code).or_insert_with(|| vec![0; self.n_classes])[self.rows[i].1] += 1;
                    }
                    let big = groups
                        .values()
                        .filter(|g| g.iter().sum::<usize>() >= self.min_leaf)
                        .count();
                    if groups.len() < 2 || big < 2 {
                        continue;
                    }
                    let h: f64 = groups
                        .values()
                        .map(|g| {
                            let t = g.iter().sum::<usize>();
                            t as f64 * entropy(g, t)
                        })
                        .sum::<f64>()
                        / n as f64;
                    consider(parent_entropy - h, Candidate::Categorical { feature: j }, &mut best);
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let class_counts = self.counts(&idx);
        let id = self.nodes.len();
        self.nodes.push(Node {
            class_counts: class_counts.clone(),
            split: Split::Leaf,
        });
        let pure = class_counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || idx.len() < 2 * self.min_leaf {
            return id;
        }
        let Some((_, cand)) = self.best_split(&idx, entropy(&class_counts, idx.len())) else {
            return id;
        };
        let split = match cand {
            Candidate::Numeric { feature, threshold } => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.into_iter().partition(|&i| self.rows[i].0[feature] <= threshold);
                let left = self.grow(l, depth + 1);
                let right = self.grow(r, depth + 1);
                Split::Numeric {
                    feature,
                    threshold,
                    left,
                    right,
                }
            }
            Candidate::Categorical { feature } => {
                let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
                for i in idx {
                    groups.entry(self.rows[i].0[feature] as i64).or_default().push(i);
                }
                let branches = groups
                    .into_iter()
                    .map(|(code, members)| (code, self.grow(members, depth + 1)))
                    .collect();
                Split::Categorical { feature, branches }
            }
        };
        self.nodes[id].split = split;
        id
    }
}

/// Grows a tree by maximal information gain. Numeric splits are binary at
/// midpoints between distinct values; categorical splits branch on every
/// value. Growth stops at pure nodes, at `max_depth`, or when no split
/// leaves two children with `min_leaf` rows.
pub fn fit(
    kinds: &[FeatureKind],
    n_classes: usize,
    rows: &[(Vec<f64>, usize)],
    max_depth: usize,
    min_leaf: usize,
) -> TreeState {
    let mut b = Builder {
        kinds,
        rows,
        n_classes,
        max_depth,
        min_leaf: min_leaf.max(1),
        nodes: Vec::new(),
    };
    b.grow((0..rows.len()).collect(), 0);
    TreeState {
        nodes: b.nodes,
        max_depth,
        min_leaf,
    }
}

impl TreeState {
    fn leaf_for(&self, x: &[f64]) -> &Node {
        let mut node = &self.nodes[0];
        loop {
            let next = match &node.split {
                Split::Leaf => None,
                Split::Numeric {
                    feature,
                    threshold,
                    left,
                    right,
                } => Some(if x[*feature] <= *threshold { *left } else { *right }),
                Split::Categorical { feature, branches } => {
                    let code = x[*feature] as i64;
                    branches.iter().find(|(v, _)| *v == code).map(|(_, child)| *child)
                }
            };
            match next {
                Some(child) => node = &self.nodes[child],
                None => return node,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        let counts = &self.leaf_for(x).class_counts;
        let total: usize = counts.iter().sum();
        let distribution: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Prediction {
            label: argmax(&distribution),
            distribution,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id].split {
                Split::Leaf => 0,
                Split::Numeric { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Split::Categorical { branches, .. } => {
                    1 + branches.iter().map(|(_, c)| walk(nodes, *c)).max().unwrap_or(0)
                }
            }
        }
        walk(&self.nodes, 0)
    }
}
