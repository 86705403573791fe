//! Binary trees over binned features. A split on `(feature, bin)` sends rows
//! with `bin <= split_bin` (raw `x <= threshold`) left.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        bin: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Loss reduction (GBDT) or size-weighted impurity decrease (forest).
        gain: f64,
        count: usize,
    },
    Leaf {
        value: Vec<f64>,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { value, .. } => return value,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }

    /// Adds each split's gain to `out[feature]`.
    pub fn accumulate_gain(&self, out: &mut [f64]) {
        for n in &self.nodes {
            if let Node::Split { feature, gain, .. } = n {
                out[*feature] += gain;
            }
        }
    }
}

fn threshold(edges: &[Vec<f64>], feature: usize, bin: usize) -> f64 {
    edges[feature][bin]
}

// ---------------------------------------------------------------------------
// Second-order (gradient/hessian) regression trees
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    LeafWise,
    LevelWise,
}

#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub growth: Growth,
    pub num_leaves: usize,
    /// `None` is unlimited; level-wise growth requires a value.
    pub max_depth: Option<usize>,
    pub min_data_in_leaf: usize,
    pub lambda: f64,
    pub gamma: f64,
}

/// One accepted split as seen by the grower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitTrace {
    pub rows: Vec<u32>,
    pub feature: usize,
    pub bin: usize,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafTrace {
    pub rows: Vec<u32>,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeTrace {
    pub splits: Vec<SplitTrace>,
    pub leaves: Vec<LeafTrace>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Bin {
    g: f64,
    h: f64,
    c: u32,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    bin: usize,
    gain: f64,
}

struct Open {
    node: usize,
    rows: Vec<u32>,
    hist: Vec<Vec<Bin>>,
    g: f64,
    h: f64,
    depth: usize,
    best: Option<Candidate>,
}

pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma
}

pub fn leaf_value(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        -g / d
    } else {
        0.0
    }
}

fn histogram(x: &BinnedMatrix, rows: &[u32], grad: &[f64], hess: &[f64]) -> Vec<Vec<Bin>> {
    x.columns
        .par_iter()
        .zip(x.n_bins.par_iter())
        .map(|(col, &nb)| {
            let mut hist = vec![Bin::default(); nb];
            for &r in rows {
                let b = &mut hist[col[r as usize] as usize];
                b.g += grad[r as usize];
                b.h += hess[r as usize];
                b.c += 1;
            }
            hist
        })
        .collect()
}

fn subtract(parent: &[Vec<Bin>], child: &[Vec<Bin>]) -> Vec<Vec<Bin>> {
    parent
        .iter()
        .zip(child)
        .map(|(p, c)| {
            p.iter()
                .zip(c)
                .map(|(p, c)| Bin {
                    g: p.g - c.g,
                    h: p.h - c.h,
                    c: p.c - c.c,
                })
                .collect()
        })
        .collect()
}

fn best_split(hist: &[Vec<Bin>], g: f64, h: f64, n: usize, p: &GrowParams) -> Option<Candidate> {
    let per_feature: Vec<Option<Candidate>> = hist
        .par_iter()
        .enumerate()
        .map(|(feature, bins)| {
            let mut best: Option<Candidate> = None;
            let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0usize);
            for (bin, b) in bins.iter().enumerate().take(bins.len().saturating_sub(1)) {
                gl += b.g;
                hl += b.h;
                cl += b.c as usize;
                let cr = n - cl;
                if cl < p.min_data_in_leaf || cr < p.min_data_in_leaf || cl == 0 || cr == 0 {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl + p.lambda <= 0.0 || hr + p.lambda <= 0.0 {
                    continue;
                }
                let gain = split_gain(gl, hl, gr, hr, p.lambda, p.gamma);
                if best.is_none_or(|c| gain > c.gain) {
                    best = Some(Candidate { feature, bin, gain });
                }
            }
            best
        })
        .collect();
    // first (feature, bin) wins ties
    per_feature
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<Candidate>, c| match acc {
            Some(a) if c.gain <= a.gain => Some(a),
            _ => Some(c),
        })
        .filter(|c| c.gain > 0.0)
}

/// Grows one second-order tree. Returns the tree, the leaf value of every
/// training row in `rows` (indexed by row id, other rows untouched), and a trace.
pub fn grow_gradient_tree(
    x: &BinnedMatrix,
    edges: &[Vec<f64>],
    rows: Vec<u32>,
    grad: &[f64],
    hess: &[f64],
    p: &GrowParams,
    row_values: &mut [f64],
    trace: Option<&mut TreeTrace>,
) -> Tree {
    let sums = |rows: &[u32]| {
        rows.iter().fold((0.0, 0.0), |(g, h), &r| (g + grad[r as usize], h + hess[r as usize]))
    };
    let mut nodes = vec![Node::Leaf { value: vec![0.0], count: rows.len() }];
    let (g, h) = sums(&rows);
    let hist = histogram(x, &rows, grad, hess);
    let best = if p.max_depth.is_none_or(|d| d > 0) { best_split(&hist, g, h, rows.len(), p) } else { None };
    let mut open = vec![Open { node: 0, rows, hist, g, h, depth: 0, best }];
    let mut closed: Vec<Open> = Vec::new();
    let mut splits = Vec::new();

    let max_leaves = match p.growth {
        Growth::LeafWise => p.num_leaves.max(1),
        Growth::LevelWise => usize::MAX,
    };

    let split_one = |o: Open, nodes: &mut Vec<Node>, splits: &mut Vec<SplitTrace>| -> (Open, Open) {
        let c = o.best.expect("split requires a candidate");
        let col = &x.columns[c.feature];
        let (lrows, rrows): (Vec<u32>, Vec<u32>) =
            o.rows.iter().partition(|&&r| (col[r as usize] as usize) <= c.bin);
        let (small_is_left, small) = if lrows.len() <= rrows.len() { (true, &lrows) } else { (false, &rrows) };
        let small_hist = histogram(x, small, grad, hess);
        let large_hist = subtract(&o.hist, &small_hist);
        let (lhist, rhist) = if small_is_left { (small_hist, large_hist) } else { (large_hist, small_hist) };
        let li = nodes.len();
        nodes.push(Node::Leaf { value: vec![0.0], count: lrows.len() });
        nodes.push(Node::Leaf { value: vec![0.0], count: rrows.len() });
        nodes[o.node] = Node::Split {
            feature: c.feature,
            bin: c.bin,
            threshold: threshold(edges, c.feature, c.bin),
            left: li,
            right: li + 1,
            gain: c.gain,
            count: o.rows.len(),
        };
        splits.push(SplitTrace { rows: o.rows, feature: c.feature, bin: c.bin, gain: c.gain });
        let depth = o.depth + 1;
        let make = |node, rows: Vec<u32>, hist: Vec<Vec<Bin>>| {
            let (g, h) = sums(&rows);
            let best = if p.max_depth.is_none_or(|d| depth < d) {
                best_split(&hist, g, h, rows.len(), p)
            } else {
                None
            };
            Open { node, rows, hist, g, h, depth, best }
        };
        (make(li, lrows, lhist), make(li + 1, rrows, rhist))
    };

    match p.growth {
        Growth::LeafWise => {
            while open.len() < max_leaves {
                let pick = open
                    .iter()
                    .enumerate()
                    .filter_map(|(i, o)| o.best.map(|c| (i, c.gain)))
                    .fold(None, |acc: Option<(usize, f64)>, (i, gn)| match acc {
                        Some((_, ag)) if gn <= ag => acc,
                        _ => Some((i, gn)),
                    });
                let Some((i, _)) = pick else { break };
                let o = open.remove(i);
                let (l, r) = split_one(o, &mut nodes, &mut splits);
                open.insert(i, r);
                open.insert(i, l);
            }
        }
        Growth::LevelWise => {
            for _ in 0..p.max_depth.unwrap_or(usize::MAX) {
                let mut next = Vec::new();
                for o in open.drain(..) {
                    if o.best.is_some() {
                        let (l, r) = split_one(o, &mut nodes, &mut splits);
                        next.push(l);
                        next.push(r);
                    } else {
                        closed.push(o);
                    }
                }
                open = next;
                if open.is_empty() {
                    break;
                }
            }
        }
    }
    closed.extend(open);
    closed.sort_by_key(|o| o.node);

    let mut leaves = Vec::with_capacity(closed.len());
    for o in closed {
        let value = leaf_value(o.g, o.h, p.lambda);
        for &r in &o.rows {
            row_values[r as usize] = value;
        }
        nodes[o.node] = Node::Leaf { value: vec![value], count: o.rows.len() };
        leaves.push(LeafTrace { rows: o.rows, value });
    }
    if let Some(t) = trace {
        t.splits = splits;
        t.leaves = leaves;
    }
    Tree { nodes }
}

// ---------------------------------------------------------------------------
// Gini classification trees
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct GiniParams {
    pub n_classes: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per node; `None` examines all in index order.
    pub max_features: Option<usize>,
}

fn gini_sum_sq(counts: &[u32], n: usize) -> f64 {
    let n = n as f64;
    counts.iter().map(|&c| (c as f64 / n).powi(2)).sum()
}

fn gini(counts: &[u32], n: usize) -> f64 {
    1.0 - gini_sum_sq(counts, n)
}

/// Grows a Gini tree over `rows` (duplicates allowed, as in a bootstrap sample).
/// Leaves hold class frequencies.
pub fn grow_gini_tree<R: Rng>(
    x: &BinnedMatrix,
    edges: &[Vec<f64>],
    labels: &[usize],
    rows: Vec<u32>,
    p: &GiniParams,
    rng: &mut R,
) -> Tree {
    let k = p.n_classes;
    let n_features = x.columns.len();
    let mut nodes = vec![Node::Leaf { value: vec![], count: 0 }];
    let mut stack = vec![(0usize, rows, 0usize)];
    let mut class_bin = Vec::new();

    while let Some((node, rows, depth)) = stack.pop() {
        let n = rows.len();
        let mut counts = vec![0u32; k];
        for &r in &rows {
            counts[labels[r as usize]] += 1;
        }
        let parent_imp = gini(&counts, n);
        let can_split = parent_imp > 0.0
            && n >= 2 * p.min_samples_leaf.max(1)
            && p.max_depth.is_none_or(|d| depth < d);

        let mut best: Option<(usize, usize, f64)> = None;
        if can_split {
            let features: Vec<usize> = match p.max_features {
                Some(m) if m < n_features => {
                    let mut f = sample(rng, n_features, m).into_vec();
                    f.sort_unstable();
                    f
                }
                _ => (0..n_features).collect(),
            };
            for f in features {
                let nb = x.n_bins[f];
                let col = &x.columns[f];
                class_bin.clear();
                class_bin.resize(nb * k, 0u32);
                for &r in &rows {
                    class_bin[col[r as usize] as usize * k + labels[r as usize]] += 1;
                }
                let mut left = vec![0u32; k];
                for b in 0..nb.saturating_sub(1) {
                    for c in 0..k {
                        left[c] += class_bin[b * k + c];
                    }
                    let nl: usize = left.iter().map(|&v| v as usize).sum();
                    let nr = n - nl;
                    if nl < p.min_samples_leaf.max(1) || nr < p.min_samples_leaf.max(1) {
                        continue;
                    }
                    let right: Vec<u32> = counts.iter().zip(&left).map(|(a, b)| a - b).collect();
                    let decrease = n as f64 * parent_imp - nl as f64 * gini(&left, nl) - nr as f64 * gini(&right, nr);
                    if decrease > 1e-12 && best.is_none_or(|(_, _, d)| decrease > d) {
                        best = Some((f, b, decrease));
                    }
                }
            }
        }

        match best {
            Some((feature, bin, decrease)) => {
                let col = &x.columns[feature];
                let (l, r): (Vec<u32>, Vec<u32>) = rows.iter().partition(|&&r| (col[r as usize] as usize) <= bin);
                let li = nodes.len();
                nodes.push(Node::Leaf { value: vec![], count: 0 });
                nodes.push(Node::Leaf { value: vec![], count: 0 });
                nodes[node] = Node::Split {
                    feature,
                    bin,
                    threshold: threshold(edges, feature, bin),
                    left: li,
                    right: li + 1,
                    gain: decrease,
                    count: n,
                };
                stack.push((li + 1, r, depth + 1));
                stack.push((li, l, depth + 1));
            }
            None => {
                let value = counts.iter().map(|&c| c as f64 / n as f64).collect();
                nodes[node] = Node::Leaf { value, count: n };
            }
        }
    }
    Tree { nodes }
}
