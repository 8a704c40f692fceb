//! Directed graph model and the three partially weighted network variants.
//!
//! Origins and terminals live in separate index spaces. A token that shows up
//! both as a rater and as a ratee is therefore two distinct elements, one per
//! role, and no computation ever merges them.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an origin (first endpoint of some edge).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OriginId(pub u32);

/// Index of a terminal (second endpoint of some edge).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TerminalId(pub u32);

/// Index of an edge in insertion order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

macro_rules! impl_index {
    ($($t:ty),*) => {$(
        impl $t {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    )*};
}
impl_index!(OriginId, TerminalId, EdgeId);

/// Which element set a weighting, profile or prediction refers to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Origin,
    Terminal,
    Edge,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Origin => "origin",
            Variant::Terminal => "terminal",
            Variant::Edge => "edge",
        })
    }
}

/// An element of one of the three sets O, T or E.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Origin(OriginId),
    Terminal(TerminalId),
    Edge(EdgeId),
}

impl Element {
    pub fn variant(self) -> Variant {
        match self {
            Element::Origin(_) => Variant::Origin,
            Element::Terminal(_) => Variant::Terminal,
            Element::Edge(_) => Variant::Edge,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Element::Origin(o) => o.index(),
            Element::Terminal(t) => t.index(),
            Element::Edge(e) => e.index(),
        }
    }

    pub fn from_index(variant: Variant, index: usize) -> Self {
        let i = index as u32;
        match variant {
            Variant::Origin => Element::Origin(OriginId(i)),
            Variant::Terminal => Element::Terminal(TerminalId(i)),
            Variant::Edge => Element::Edge(EdgeId(i)),
        }
    }
}

/// Immutable directed graph `G = (O, T, E)` with origin and terminal adjacency.
#[derive(Clone, Debug)]
pub struct DirectedGraph {
    origins: Vec<String>,
    terminals: Vec<String>,
    origin_lookup: HashMap<String, OriginId>,
    terminal_lookup: HashMap<String, TerminalId>,
    edges: Vec<(OriginId, TerminalId)>,
    edge_lookup: HashMap<(OriginId, TerminalId), EdgeId>,
    origin_index: Vec<Vec<EdgeId>>,
    terminal_index: Vec<Vec<EdgeId>>,
}

impl DirectedGraph {
    /// Builds a graph from `(origin, terminal)` token pairs.
    ///
    /// Vertices are numbered in order of first appearance in their role and
    /// repeated pairs collapse onto the first occurrence.
    pub fn from_edges<I, A, B>(edge_list: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut g = DirectedGraph {
            origins: Vec::new(),
            terminals: Vec::new(),
            origin_lookup: HashMap::new(),
            terminal_lookup: HashMap::new(),
            edges: Vec::new(),
            edge_lookup: HashMap::new(),
            origin_index: Vec::new(),
            terminal_index: Vec::new(),
        };
        for (a, b) in edge_list {
            let o = g.intern_origin(a.as_ref());
            let t = g.intern_terminal(b.as_ref());
            if g.edge_lookup.contains_key(&(o, t)) {
                continue;
            }
            let e = EdgeId(g.edges.len() as u32);
            g.edges.push((o, t));
            g.edge_lookup.insert((o, t), e);
            g.origin_index[o.index()].push(e);
            g.terminal_index[t.index()].push(e);
        }
        if g.edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok(g)
    }

    fn intern_origin(&mut self, token: &str) -> OriginId {
        if let Some(&id) = self.origin_lookup.get(token) {
            return id;
        }
        let id = OriginId(self.origins.len() as u32);
        self.origins.push(token.to_owned());
        self.origin_lookup.insert(token.to_owned(), id);
        self.origin_index.push(Vec::new());
        id
    }

    fn intern_terminal(&mut self, token: &str) -> TerminalId {
        if let Some(&id) = self.terminal_lookup.get(token) {
            return id;
        }
        let id = TerminalId(self.terminals.len() as u32);
        self.terminals.push(token.to_owned());
        self.terminal_lookup.insert(token.to_owned(), id);
        self.terminal_index.push(Vec::new());
        id
    }

    pub fn origin_count(&self) -> usize {
        self.origins.len()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of elements in the set a variant refers to.
    pub fn element_count(&self, variant: Variant) -> usize {
        match variant {
            Variant::Origin => self.origin_count(),
            Variant::Terminal => self.terminal_count(),
            Variant::Edge => self.edge_count(),
        }
    }

    pub fn origin(&self, token: &str) -> Option<OriginId> {
        self.origin_lookup.get(token).copied()
    }

    pub fn terminal(&self, token: &str) -> Option<TerminalId> {
        self.terminal_lookup.get(token).copied()
    }

    pub fn edge(&self, origin: OriginId, terminal: TerminalId) -> Option<EdgeId> {
        self.edge_lookup.get(&(origin, terminal)).copied()
    }

    /// Looks up an edge by endpoint tokens.
    pub fn edge_by_tokens(&self, origin: &str, terminal: &str) -> Option<EdgeId> {
        self.edge(self.origin(origin)?, self.terminal(terminal)?)
    }

    pub fn origin_token(&self, o: OriginId) -> &str {
        &self.origins[o.index()]
    }

    pub fn terminal_token(&self, t: TerminalId) -> &str {
        &self.terminals[t.index()]
    }

    pub fn origin_tokens(&self) -> &[String] {
        &self.origins
    }

    pub fn terminal_tokens(&self) -> &[String] {
        &self.terminals
    }

    pub fn endpoints(&self, e: EdgeId) -> (OriginId, TerminalId) {
        self.edges[e.index()]
    }

    pub fn edges(&self) -> &[(OriginId, TerminalId)] {
        &self.edges
    }

    /// Edges leaving `o`.
    pub fn out_edges(&self, o: OriginId) -> &[EdgeId] {
        &self.origin_index[o.index()]
    }

    /// Edges entering `t`.
    pub fn in_edges(&self, t: TerminalId) -> &[EdgeId] {
        &self.terminal_index[t.index()]
    }

    /// Human-readable label: the token for vertices, `origin->terminal` for edges.
    pub fn element_label(&self, el: Element) -> String {
        match el {
            Element::Origin(o) => self.origin_token(o).to_owned(),
            Element::Terminal(t) => self.terminal_token(t).to_owned(),
            Element::Edge(e) => {
                let (o, t) = self.endpoints(e);
                format!("{}->{}", self.origin_token(o), self.terminal_token(t))
            }
        }
    }

    pub(crate) fn check_element(&self, el: Element) -> Result<()> {
        let n = self.element_count(el.variant());
        if el.index() >= n {
            return Err(Error::UnknownElement {
                variant: el.variant(),
                index: el.index(),
            });
        }
        Ok(())
    }

    /// Rebuilds both adjacency indices from the edge list and compares them
    /// with the stored ones.
    pub fn indices_consistent(&self) -> bool {
        let mut by_origin = vec![Vec::new(); self.origins.len()];
        let mut by_terminal = vec![Vec::new(); self.terminals.len()];
        for (i, &(o, t)) in self.edges.iter().enumerate() {
            by_origin[o.index()].push(EdgeId(i as u32));
            by_terminal[t.index()].push(EdgeId(i as u32));
        }
        by_origin == self.origin_index && by_terminal == self.terminal_index
    }
}

/// Closed interval `[lo, hi]` that weights of a variant live in.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRange {
    pub lo: f64,
    pub hi: f64,
}

impl WeightRange {
    pub const SIGNED_UNIT: WeightRange = WeightRange { lo: -1.0, hi: 1.0 };
    pub const UNIT: WeightRange = WeightRange { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidRange { lo, hi });
        }
        Ok(WeightRange { lo, hi })
    }

    pub fn contains(&self, w: f64) -> bool {
        w >= self.lo && w <= self.hi
    }

    pub fn clamp(&self, w: f64) -> f64 {
        w.clamp(self.lo, self.hi)
    }
}

/// Known weights on a subset of one element set: `F_{O_A}`, `G_{T_B}` or
/// `W_{E_L}` depending on the variant.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialWeighting {
    variant: Variant,
    range: WeightRange,
    values: Vec<Option<f64>>,
    domain: Vec<usize>,
}

impl PartialWeighting {
    /// Creates a weighting over `graph`'s element set for `variant`, given
    /// `(element index, weight)` pairs.
    pub fn new<I>(graph: &DirectedGraph, variant: Variant, range: WeightRange, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let n = graph.element_count(variant);
        let mut values = vec![None; n];
        for (i, w) in weights {
            if i >= n {
                return Err(Error::UnknownElement { variant, index: i });
            }
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight { value: w });
            }
            if !range.contains(w) {
                return Err(Error::WeightOutOfRange {
                    value: w,
                    lo: range.lo,
                    hi: range.hi,
                });
            }
            values[i] = Some(w);
        }
        let domain = values.iter().enumerate().filter_map(|(i, v)| v.map(|_| i)).collect();
        Ok(PartialWeighting {
            variant,
            range,
            values,
            domain,
        })
    }

    /// Origin weighting keyed by token (convenience for small fixtures).
    pub fn origins<'a, I>(graph: &DirectedGraph, range: WeightRange, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let pairs = weights
            .into_iter()
            .map(|(tok, w)| {
                graph
                    .origin(tok)
                    .map(|o| (o.index(), w))
                    .ok_or_else(|| Error::UnknownToken(tok.to_owned()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(graph, Variant::Origin, range, pairs)
    }

    /// Terminal weighting keyed by token.
    pub fn terminals<'a, I>(graph: &DirectedGraph, range: WeightRange, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let pairs = weights
            .into_iter()
            .map(|(tok, w)| {
                graph
                    .terminal(tok)
                    .map(|t| (t.index(), w))
                    .ok_or_else(|| Error::UnknownToken(tok.to_owned()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(graph, Variant::Terminal, range, pairs)
    }

    /// Edge weighting keyed by endpoint tokens.
    pub fn edges<'a, I>(graph: &DirectedGraph, range: WeightRange, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((&'a str, &'a str), f64)>,
    {
        let pairs = weights
            .into_iter()
            .map(|((a, b), w)| {
                graph
                    .edge_by_tokens(a, b)
                    .map(|e| (e.index(), w))
                    .ok_or_else(|| Error::UnknownToken(format!("{a}->{b}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(graph, Variant::Edge, range, pairs)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn range(&self) -> WeightRange {
        self.range
    }

    /// Weight of element `i`, if it belongs to the training domain.
    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.get(i).is_some()
    }

    /// Training domain indices in ascending order.
    pub fn domain(&self) -> &[usize] {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    /// Size of the full element set this weighting is defined over.
    pub fn universe(&self) -> usize {
        self.values.len()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.domain.iter().map(move |&i| self.values[i].unwrap_or_default())
    }

    pub fn mean(&self) -> Option<f64> {
        if self.domain.is_empty() {
            return None;
        }
        Some(self.weights().sum::<f64>() / self.domain.len() as f64)
    }

    /// Population standard deviation of the training weights.
    pub fn std_dev(&self) -> Option<f64> {
        let mean = self.mean()?;
        let var = self.weights().map(|w| (w - mean).powi(2)).sum::<f64>() / self.domain.len() as f64;
        Some(var.sqrt())
    }
}

/// Switches for the neighbor relations.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborOptions {
    /// Drop the query element from its own neighbor set. Off by default, which
    /// lets a training element count itself.
    pub exclude_self: bool,
}

fn require_variant(w: &PartialWeighting, expected: Variant) -> Result<()> {
    if w.variant != expected {
        return Err(Error::VariantMismatch {
            expected,
            found: w.variant,
        });
    }
    Ok(())
}

/// Training origins that share a terminal with `o`.
pub fn neighbors_of_origin(
    g: &DirectedGraph,
    w: &PartialWeighting,
    o: OriginId,
    opts: NeighborOptions,
) -> Result<Vec<OriginId>> {
    require_variant(w, Variant::Origin)?;
    g.check_element(Element::Origin(o))?;
    let mut out: Vec<OriginId> = g
        .out_edges(o)
        .iter()
        .flat_map(|&e| g.in_edges(g.endpoints(e).1))
        .map(|&a| g.endpoints(a).0)
        .filter(|&alpha| w.contains(alpha.index()) && !(opts.exclude_self && alpha == o))
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Training terminals that share an origin with `t`.
pub fn neighbors_of_terminal(
    g: &DirectedGraph,
    w: &PartialWeighting,
    t: TerminalId,
    opts: NeighborOptions,
) -> Result<Vec<TerminalId>> {
    require_variant(w, Variant::Terminal)?;
    g.check_element(Element::Terminal(t))?;
    let mut out: Vec<TerminalId> = g
        .in_edges(t)
        .iter()
        .flat_map(|&e| g.out_edges(g.endpoints(e).0))
        .map(|&b| g.endpoints(b).1)
        .filter(|&beta| w.contains(beta.index()) && !(opts.exclude_self && beta == t))
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Training edges sharing the origin or the terminal of `e`.
pub fn neighbors_of_edge(
    g: &DirectedGraph,
    w: &PartialWeighting,
    e: EdgeId,
    opts: NeighborOptions,
) -> Result<Vec<EdgeId>> {
    require_variant(w, Variant::Edge)?;
    g.check_element(Element::Edge(e))?;
    let (o, t) = g.endpoints(e);
    let mut out: Vec<EdgeId> = g
        .out_edges(o)
        .iter()
        .chain(g.in_edges(t))
        .copied()
        .filter(|&a| w.contains(a.index()) && !(opts.exclude_self && a == e))
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Neighbor set of any element, as raw indices in the element's own set.
pub fn neighbors(g: &DirectedGraph, w: &PartialWeighting, el: Element, opts: NeighborOptions) -> Result<Vec<usize>> {
    Ok(match el {
        Element::Origin(o) => neighbors_of_origin(g, w, o, opts)?
            .into_iter()
            .map(OriginId::index)
            .collect(),
        Element::Terminal(t) => neighbors_of_terminal(g, w, t, opts)?
            .into_iter()
            .map(TerminalId::index)
            .collect(),
        Element::Edge(e) => neighbors_of_edge(g, w, e, opts)?
            .into_iter()
            .map(EdgeId::index)
            .collect(),
    })
}
