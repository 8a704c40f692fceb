//! Brute-force reference computations over raw edge lists.
//!
//! Nothing here touches the library's adjacency indices or profile tables:
//! neighbor sets come from double loops over the edge list, and indices are
//! recomputed from first appearance.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Edge = (String, String);

#[derive(Clone, Debug)]
pub struct Net {
    pub edges: Vec<Edge>,
    /// One weight per edge in `[-1, 1]`.
    pub weights: Vec<f64>,
}

impl Net {
    pub fn origins(&self) -> Vec<String> {
        first_appearance(self.edges.iter().map(|e| e.0.clone()))
    }

    pub fn terminals(&self) -> Vec<String> {
        first_appearance(self.edges.iter().map(|e| e.1.clone()))
    }

    pub fn edge_labels(&self) -> Vec<String> {
        self.edges.iter().map(|(o, t)| format!("{o}->{t}")).collect()
    }
}

pub fn first_appearance(tokens: impl Iterator<Item = String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for t in tokens {
        if seen.insert(t.clone()) {
            out.push(t);
        }
    }
    out
}

/// Random simple digraph. Vertex tokens are shared between roles so the same
/// token regularly appears as both an origin and a terminal.
pub fn random_net(rng: &mut ChaCha8Rng, max_edges: usize) -> Net {
    let n_vertices = rng.gen_range(2..=12);
    let target = rng.gen_range(1..=max_edges);
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for _ in 0..target * 3 {
        if edges.len() == target {
            break;
        }
        let o = format!("v{}", rng.gen_range(0..n_vertices));
        let t = format!("v{}", rng.gen_range(0..n_vertices));
        if seen.insert((o.clone(), t.clone())) {
            edges.push((o, t));
        }
    }
    let weights = edges
        .iter()
        .map(|_| {
            // coarse grid so ties and exact-boundary cases show up
            if rng.gen_bool(0.5) {
                rng.gen_range(-4..=4) as f64 / 4.0
            } else {
                rng.gen_range(-1.0..=1.0)
            }
        })
        .collect();
    Net { edges, weights }
}

/// A random training subset of `items`, never empty.
pub fn random_subset<T: Clone>(rng: &mut ChaCha8Rng, items: &[T]) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(rng);
    let k = rng.gen_range(1..=v.len());
    v.truncate(k);
    v
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Kind {
    Origin,
    Terminal,
    Edge,
}

/// Reference model of a partially weighted network for one element kind.
/// Elements are identified by label: vertex token or `o->t`.
pub struct Reference {
    pub kind: Kind,
    pub elements: Vec<String>,
    pub train: HashMap<String, f64>,
    pub neighbor_sets: Vec<Vec<String>>,
}

impl Reference {
    pub fn new(net: &Net, kind: Kind, train: HashMap<String, f64>, exclude_self: bool) -> Self {
        let elements = match kind {
            Kind::Origin => net.origins(),
            Kind::Terminal => net.terminals(),
            Kind::Edge => net.edge_labels(),
        };
        let order: HashMap<&str, usize> = elements.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut neighbor_sets = Vec::new();
        for x in &elements {
            let mut set = BTreeSet::new();
            match kind {
                Kind::Origin => {
                    for (o, t) in &net.edges {
                        if o != x {
                            continue;
                        }
                        for (a, t2) in &net.edges {
                            if t2 == t && train.contains_key(a) && !(exclude_self && a == x) {
                                set.insert(a.clone());
                            }
                        }
                    }
                }
                Kind::Terminal => {
                    for (o, t) in &net.edges {
                        if t != x {
                            continue;
                        }
                        for (o2, b) in &net.edges {
                            if o2 == o && train.contains_key(b) && !(exclude_self && b == x) {
                                set.insert(b.clone());
                            }
                        }
                    }
                }
                Kind::Edge => {
                    let (xo, xt) = x.split_once("->").unwrap();
                    for (o, t) in &net.edges {
                        let label = format!("{o}->{t}");
                        if (o == xo || t == xt) && train.contains_key(&label) && !(exclude_self && &label == x) {
                            set.insert(label);
                        }
                    }
                }
            }
            let mut v: Vec<String> = set.into_iter().collect();
            v.sort_by_key(|s| order[s.as_str()]);
            neighbor_sets.push(v);
        }
        Reference {
            kind,
            elements,
            train,
            neighbor_sets,
        }
    }

    /// Mean neighbor weight, summed in element order.
    pub fn avg(&self, i: usize) -> Option<f64> {
        let n = &self.neighbor_sets[i];
        if n.is_empty() {
            return None;
        }
        let mut s = 0.0;
        for a in n {
            s += self.train[a];
        }
        Some(s / n.len() as f64)
    }

    pub fn count(&self, i: usize, h: f64) -> usize {
        match self.avg(i) {
            None => 0,
            Some(avg) => self.neighbor_sets[i]
                .iter()
                .filter(|a| (self.train[*a] - avg).abs() <= h)
                .count(),
        }
    }

    pub fn counts(&self, h: f64) -> Vec<usize> {
        (0..self.elements.len()).map(|i| self.count(i, h)).collect()
    }

    /// kNN set of element `i` by sorting all training distances.
    pub fn knn(&self, i: usize, h: f64, k: usize, include_zero: bool) -> (Vec<String>, bool) {
        let counts = self.counts(h);
        let index: HashMap<&str, usize> = self.elements.iter().enumerate().map(|(j, s)| (s.as_str(), j)).collect();
        let mut dists: Vec<(u64, &String)> = self
            .train
            .keys()
            .map(|a| ((counts[i] as i64 - counts[index[a.as_str()]] as i64).unsigned_abs(), a))
            .collect();
        dists.sort();
        let mut distinct: Vec<u64> = dists.iter().map(|d| d.0).filter(|&d| include_zero || d > 0).collect();
        distinct.dedup();
        let degenerate = distinct.len() < k;
        distinct.truncate(k);
        let mut members: Vec<String> = dists
            .iter()
            .filter(|(d, _)| distinct.contains(d))
            .map(|(_, a)| (*a).clone())
            .collect();
        members.sort_by_key(|s| index[s.as_str()]);
        (members, degenerate)
    }
}

/// Direct fairness/goodness iteration over the edge list.
pub fn fairness_goodness(net: &Net, tol: f64, max_iter: usize) -> (HashMap<String, f64>, HashMap<String, f64>, usize) {
    let mut f: HashMap<String, f64> = net.origins().into_iter().map(|o| (o, 1.0)).collect();
    let mut g: HashMap<String, f64> = net.terminals().into_iter().map(|t| (t, 1.0)).collect();
    for it in 1..=max_iter {
        let mut gs: HashMap<String, (f64, usize)> = HashMap::new();
        for ((o, t), w) in net.edges.iter().zip(&net.weights) {
            let e = gs.entry(t.clone()).or_insert((0.0, 0));
            e.0 += f[o] * w;
            e.1 += 1;
        }
        let g_new: HashMap<String, f64> = gs.into_iter().map(|(t, (s, n))| (t, s / n as f64)).collect();
        let mut fs: HashMap<String, (f64, usize)> = HashMap::new();
        for ((o, t), w) in net.edges.iter().zip(&net.weights) {
            let e = fs.entry(o.clone()).or_insert((0.0, 0));
            e.0 += (w - g_new[t]).abs() / 2.0;
            e.1 += 1;
        }
        let f_new: HashMap<String, f64> = fs.into_iter().map(|(o, (s, n))| (o, 1.0 - s / n as f64)).collect();
        let mut change: f64 = 0.0;
        for (k, v) in &f_new {
            change = change.max((v - f[k]).abs());
        }
        for (k, v) in &g_new {
            change = change.max((v - g[k]).abs());
        }
        f = f_new;
        g = g_new;
        if change < tol {
            return (f, g, it);
        }
    }
    (f, g, max_iter)
}

/// Ridge fit of `y = w0 + sum_i w_i y_i k(t, t_i)` over two distinct points
/// with an unpenalized intercept, by Cramer's rule on the 3x3 normal system.
pub fn two_point_ridge(p: [(f64, f64); 2], kernel: impl Fn(f64, f64) -> f64, lambda: f64) -> [f64; 3] {
    let row = |t: f64| [1.0, p[0].1 * kernel(t, p[0].0), p[1].1 * kernel(t, p[1].0)];
    let rows = [row(p[0].0), row(p[1].0)];
    let ys = [p[0].1, p[1].1];
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (r, y) in rows.iter().zip(ys) {
        for i in 0..3 {
            b[i] += r[i] * y;
            for j in 0..3 {
                a[i][j] += r[i] * r[j];
            }
        }
    }
    a[1][1] += lambda;
    a[2][2] += lambda;
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(a);
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *slot = det3(m) / d;
    }
    out
}

/// Library objects for a reference network: graph plus weighting over the
/// training labels, all weights in `[-1, 1]`.
pub fn build(net: &Net, kind: Kind, train: &HashMap<String, f64>) -> (wdn::DirectedGraph, wdn::PartialWeighting) {
    use wdn::{DirectedGraph, PartialWeighting, Variant, WeightRange};
    let g = DirectedGraph::from_edges(net.edges.iter().map(|(a, b)| (a.as_str(), b.as_str()))).unwrap();
    type Lookup<'a> = Box<dyn Fn(&str) -> usize + 'a>;
    let (variant, lookup): (Variant, Lookup) = match kind {
        Kind::Origin => (Variant::Origin, Box::new(|s| g.origin(s).unwrap().index())),
        Kind::Terminal => (Variant::Terminal, Box::new(|s| g.terminal(s).unwrap().index())),
        Kind::Edge => (
            Variant::Edge,
            Box::new(|s| {
                let (a, b) = s.split_once("->").unwrap();
                g.edge_by_tokens(a, b).unwrap().index()
            }),
        ),
    };
    let pairs: Vec<(usize, f64)> = train.iter().map(|(k, &w)| (lookup(k), w)).collect();
    drop(lookup);
    let w = PartialWeighting::new(&g, variant, WeightRange::SIGNED_UNIT, pairs).unwrap();
    (g, w)
}

pub fn variant_of(kind: Kind) -> wdn::Variant {
    match kind {
        Kind::Origin => wdn::Variant::Origin,
        Kind::Terminal => wdn::Variant::Terminal,
        Kind::Edge => wdn::Variant::Edge,
    }
}

/// Training map for a random subset of the elements of `kind`, with weights
/// taken from the edge weights (edges) or drawn fresh (vertices).
pub fn random_training(rng: &mut ChaCha8Rng, net: &Net, kind: Kind) -> HashMap<String, f64> {
    let elements = match kind {
        Kind::Origin => net.origins(),
        Kind::Terminal => net.terminals(),
        Kind::Edge => net.edge_labels(),
    };
    let by_label: HashMap<String, f64> = net.edge_labels().into_iter().zip(net.weights.iter().copied()).collect();
    random_subset(rng, &elements)
        .into_iter()
        .map(|e| {
            let w = match kind {
                Kind::Edge => by_label[&e],
                _ => {
                    if rng.gen_bool(0.5) {
                        rng.gen_range(-4..=4) as f64 / 4.0
                    } else {
                        rng.gen_range(-1.0..=1.0)
                    }
                }
            };
            (e, w)
        })
        .collect()
}

/// Bitcoin-OTC-shaped CSV (`source,target,rating,time`, ratings in
/// [-10, 10], mostly positive, skewed degrees) with about `n_edges` lines.
pub fn synthetic_bitcoin_csv(rng: &mut ChaCha8Rng, n_vertices: usize, n_edges: usize) -> String {
    let mut out = String::new();
    // latent trustworthiness per vertex drives the ratings it receives
    let quality: Vec<f64> = (0..n_vertices)
        .map(|_| {
            if rng.gen_bool(0.9) {
                rng.gen_range(0.2..1.0)
            } else {
                rng.gen_range(-1.0..0.0)
            }
        })
        .collect();
    for i in 0..n_edges {
        // squaring a uniform skews toward low ids, giving hub vertices
        let pick = |rng: &mut ChaCha8Rng| ((rng.gen_range(0.0f64..1.0).powi(2)) * n_vertices as f64) as usize;
        let o = pick(rng);
        let mut t = pick(rng);
        if t == o {
            t = (t + 1) % n_vertices;
        }
        let noise: f64 = rng.gen_range(-0.3..0.3);
        let rating = ((quality[t] + noise).clamp(-1.0, 1.0) * 10.0).round();
        out.push_str(&format!("{o},{t},{rating},{}\n", 1_300_000_000 + i));
    }
    out
}
