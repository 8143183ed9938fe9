//! Orthogonality graphs of texts and recognition of (well-)split graphs.
//!
//! A graph is split when its vertices partition into an independent set and
//! a clique. It is well-split when, in addition, for every splitting whose
//! clique side is maximal each independent-side vertex has at most one edge.
//! Recognition uses the forbidden induced subgraph characterization: split
//! graphs exclude 2K2, C4 and C5; well-split graphs additionally exclude the
//! diamond (K4 minus an edge).

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::Text;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge ({0},{1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0},{1}) references a vertex outside 0..{2}")]
    VertexOutOfRange(usize, usize, usize),
    #[error("edge ({0},{1}) appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("graph is not connected")]
    NotConnected,
    #[error("graph is not well-split")]
    NotWellSplit,
    #[error("graph needs at least two vertices")]
    TooSmall,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("isomorphism test limited to 10 vertices (got {0})")]
    TooLarge(usize),
}

/// A simple undirected graph on vertices `0..n`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct SimpleGraph {
    adj: Vec<Vec<bool>>,
}

/// On-disk form: `{"n": int, "edges": [[i,j],...]}` with `i < j`, sorted.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphFile> for SimpleGraph {
    type Error = GraphError;

    fn try_from(f: GraphFile) -> Result<Self, Self::Error> {
        SimpleGraph::from_edges(f.n, f.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<SimpleGraph> for GraphFile {
    fn from(g: SimpleGraph) -> Self {
        GraphFile { n: g.n(), edges: g.edges().into_iter().map(|(i, j)| [i, j]).collect() }
    }
}

impl fmt::Debug for SimpleGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimpleGraph(n={}, edges={:?})", self.n(), self.edges())
    }
}

impl SimpleGraph {
    pub fn empty(n: usize) -> Self {
        SimpleGraph { adj: vec![vec![false; n]; n] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                g.set_edge(i, j);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut g = Self::empty(n);
        for (i, j) in edges {
            if i == j {
                return Err(GraphError::SelfLoop(i, j));
            }
            if i >= n || j >= n {
                return Err(GraphError::VertexOutOfRange(i, j, n));
            }
            if g.adj[i][j] {
                return Err(GraphError::DuplicateEdge(i, j));
            }
            g.set_edge(i, j);
        }
        Ok(g)
    }

    /// Graph with the edges selected by the bits of `mask`, enumerating pairs
    /// `(i, j)`, `i < j`, in lexicographic order.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let mut g = Self::empty(n);
        let mut bit = 0;
        for i in 0..n {
            for j in i + 1..n {
                if mask >> bit & 1 == 1 {
                    g.set_edge(i, j);
                }
                bit += 1;
            }
        }
        g
    }

    fn set_edge(&mut self, i: usize, j: usize) {
        self.adj[i][j] = true;
        self.adj[j][i] = true;
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i][j]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().filter(|&&e| e).count()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().enumerate().filter(|(_, &e)| e).map(|(u, _)| u)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| self.adj[i][j]).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Induced subgraph on `vertices`, relabelled `0..k` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> SimpleGraph {
        let k = vertices.len();
        let mut g = Self::empty(k);
        for a in 0..k {
            for b in a + 1..k {
                if self.adj[vertices[a]][vertices[b]] {
                    g.set_edge(a, b);
                }
            }
        }
        g
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices.iter().enumerate().all(|(a, &u)| vertices[a + 1..].iter().all(|&v| self.adj[u][v]))
    }

    pub fn is_independent(&self, vertices: &[usize]) -> bool {
        vertices.iter().enumerate().all(|(a, &u)| vertices[a + 1..].iter().all(|&v| !self.adj[u][v]))
    }

    pub fn is_connected(&self) -> bool {
        connected_components(self).len() <= 1
    }
}

/// `Γ(T)`: one vertex per state, an edge per non-orthogonal pair.
pub fn graph_of_text(t: &Text) -> SimpleGraph {
    let n = t.n();
    let mut g = SimpleGraph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if !t.is_zero(i, j) {
                g.set_edge(i, j);
            }
        }
    }
    g
}

/// Components as sorted vertex lists, ordered by smallest vertex.
pub fn connected_components(g: &SimpleGraph) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut comp = vec![root];
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for u in g.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                    queue.push_back(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// The four forbidden induced subgraphs: 2K2, C4, diamond, C5.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ForbiddenKind {
    TwoK2,
    C4,
    Diamond,
    C5,
}

impl ForbiddenKind {
    /// A labelled representative of this kind.
    pub fn graph(self) -> SimpleGraph {
        let edges: &[(usize, usize)] = match self {
            ForbiddenKind::TwoK2 => &[(0, 1), (2, 3)],
            ForbiddenKind::C4 => &[(0, 1), (1, 2), (2, 3), (0, 3)],
            ForbiddenKind::Diamond => &[(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)],
            ForbiddenKind::C5 => &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)],
        };
        let n = if self == ForbiddenKind::C5 { 5 } else { 4 };
        SimpleGraph::from_edges(n, edges.iter().copied()).expect("static forbidden graph")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForbiddenWitness {
    pub kind: ForbiddenKind,
    pub vertices: Vec<usize>,
}

/// Partition into an independent side `v1` and a maximal clique `v2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splitting {
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphClass {
    Independent,
    WellSplit,
    SplitNotWellSplit,
    NotSplit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recognition {
    pub class: GraphClass,
    pub splitting: Option<Splitting>,
    pub witness: Option<ForbiddenWitness>,
}

impl Recognition {
    pub fn is_split(&self) -> bool {
        !matches!(self.class, GraphClass::NotSplit)
    }

    pub fn is_well_split(&self) -> bool {
        matches!(self.class, GraphClass::Independent | GraphClass::WellSplit)
    }
}

fn classify_four(g: &SimpleGraph, s: &[usize; 4]) -> Option<ForbiddenKind> {
    let mut edges = 0;
    let mut degrees = [0usize; 4];
    for a in 0..4 {
        for b in a + 1..4 {
            if g.has_edge(s[a], s[b]) {
                edges += 1;
                degrees[a] += 1;
                degrees[b] += 1;
            }
        }
    }
    match edges {
        2 if degrees.iter().all(|&d| d == 1) => Some(ForbiddenKind::TwoK2),
        4 if degrees.iter().all(|&d| d == 2) => Some(ForbiddenKind::C4),
        5 => Some(ForbiddenKind::Diamond),
        _ => None,
    }
}

fn is_c5(g: &SimpleGraph, s: &[usize; 5]) -> bool {
    let mut edges = 0;
    for a in 0..5 {
        let deg = (0..5).filter(|&b| b != a && g.has_edge(s[a], s[b])).count();
        if deg != 2 {
            return false;
        }
        edges += deg;
    }
    // 2-regular on 5 vertices is C5 (a triangle plus an edge is not 2-regular)
    edges == 10
}

/// Orders the witness vertices so that the i-th listed vertex plays the role
/// of vertex i in [`ForbiddenKind::graph`].
fn canonical_witness(g: &SimpleGraph, kind: ForbiddenKind, subset: &[usize]) -> ForbiddenWitness {
    let pattern = kind.graph();
    let k = subset.len();
    let mut perm: Vec<usize> = (0..k).collect();
    loop {
        let ordered: Vec<usize> = perm.iter().map(|&p| subset[p]).collect();
        if g.induced(&ordered) == pattern {
            return ForbiddenWitness { kind, vertices: ordered };
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    unreachable!("subset was classified as {kind:?}")
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// First induced forbidden subgraph found, scanning split obstructions
/// (2K2, C4, then C5) before the diamond.
pub fn find_forbidden(g: &SimpleGraph) -> Option<ForbiddenWitness> {
    let n = g.n();
    let mut diamond: Option<[usize; 4]> = None;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let s = [a, b, c, d];
                    match classify_four(g, &s) {
                        Some(ForbiddenKind::Diamond) => {
                            diamond.get_or_insert(s);
                        }
                        Some(kind) => return Some(canonical_witness(g, kind, &s)),
                        None => {}
                    }
                }
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    for e in d + 1..n {
                        let s = [a, b, c, d, e];
                        if is_c5(g, &s) {
                            return Some(canonical_witness(g, ForbiddenKind::C5, &s));
                        }
                    }
                }
            }
        }
    }
    diamond.map(|s| canonical_witness(g, ForbiddenKind::Diamond, &s))
}

/// Constructive splitting candidate from the degree sequence: sort vertices
/// by degree (descending, ties by index), take the longest prefix with
/// `deg(v_i) ≥ i - 1` as the clique, then extend the clique to maximality.
/// For split graphs the result is a valid splitting; for other graphs the
/// returned partition fails the clique or independence check.
pub fn degree_splitting(g: &SimpleGraph) -> Splitting {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));
    let mut m = 0;
    for (i, &v) in order.iter().enumerate() {
        if g.degree(v) + 1 > i {
            m = i + 1;
        } else {
            break;
        }
    }
    let mut v2: Vec<usize> = order[..m].to_vec();
    let mut v1: Vec<usize> = order[m..].to_vec();
    v1.sort_unstable();
    if let Some(pos) = v1.iter().position(|&u| v2.iter().all(|&w| g.has_edge(u, w))) {
        v2.push(v1.remove(pos));
    }
    v2.sort_unstable();
    Splitting { v1, v2 }
}

/// True when `s` is a splitting of `g` with a maximal clique side.
pub fn is_valid_splitting(g: &SimpleGraph, s: &Splitting) -> bool {
    let mut all: Vec<usize> = s.v1.iter().chain(&s.v2).copied().collect();
    all.sort_unstable();
    all == (0..g.n()).collect::<Vec<_>>()
        && g.is_independent(&s.v1)
        && g.is_clique(&s.v2)
        && s.v1.iter().all(|&u| !s.v2.iter().all(|&w| g.has_edge(u, w)))
}

/// Recognizes the class of `g`, producing a splitting when split and a
/// forbidden witness when not well-split.
pub fn recognize(g: &SimpleGraph) -> Recognition {
    if g.edge_count() == 0 {
        return Recognition { class: GraphClass::Independent, splitting: Some(degree_splitting(g)), witness: None };
    }
    let witness = find_forbidden(g);
    let class = match &witness {
        None => GraphClass::WellSplit,
        Some(w) if w.kind == ForbiddenKind::Diamond => GraphClass::SplitNotWellSplit,
        Some(_) => GraphClass::NotSplit,
    };
    let splitting = (class != GraphClass::NotSplit).then(|| degree_splitting(g));
    if let Some(s) = &splitting {
        debug_assert!(is_valid_splitting(g, s), "split graph without a degree splitting: {g:?}");
        if class == GraphClass::WellSplit {
            debug_assert!(s.v1.iter().all(|&v| g.degree(v) <= 1));
        }
    }
    Recognition { class, splitting, witness }
}

/// Role of a vertex in a connected well-split graph: clique vertex `w_j`, or
/// the `j`-th pendant `v_ij` attached to `w_i` (both 1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexLabel {
    Clique(usize),
    Pendant(usize, usize),
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexLabel::Clique(j) => write!(f, "w{j}"),
            VertexLabel::Pendant(i, j) => write!(f, "v{i}{j}"),
        }
    }
}

/// Isomorphism-class parameters of a connected well-split graph: clique size
/// `n2`, the number `ell` of clique vertices carrying pendants, and the
/// pendant counts `m` (descending).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WellSplitShape {
    pub n2: usize,
    pub ell: usize,
    pub m: Vec<usize>,
    /// Label of each vertex of the graph the shape was derived from (or built for).
    pub labels: Vec<VertexLabel>,
}

impl WellSplitShape {
    /// A shape with the canonical labelling of [`shape_to_graph`].
    pub fn new(n2: usize, m: Vec<usize>) -> Result<Self, GraphError> {
        let ell = m.len();
        let mut shape = WellSplitShape { n2, ell, m, labels: Vec::new() };
        shape.check()?;
        shape.labels = (1..=n2)
            .map(VertexLabel::Clique)
            .chain(shape.m.iter().enumerate().flat_map(|(i, &mi)| (1..=mi).map(move |j| VertexLabel::Pendant(i + 1, j))))
            .collect();
        Ok(shape)
    }

    pub fn vertex_count(&self) -> usize {
        self.n2 + self.m.iter().sum::<usize>()
    }

    fn check(&self) -> Result<(), GraphError> {
        if self.n2 == 0 {
            return Err(GraphError::InvalidShape("clique must be non-empty".into()));
        }
        if self.ell != self.m.len() {
            return Err(GraphError::InvalidShape(format!("ell = {} but {} pendant counts given", self.ell, self.m.len())));
        }
        if self.ell > self.n2 {
            return Err(GraphError::InvalidShape(format!("ell = {} exceeds n2 = {}", self.ell, self.n2)));
        }
        if self.m.contains(&0) {
            return Err(GraphError::InvalidShape("pendant counts must be positive".into()));
        }
        if self.n2 == 1 && self.ell > 0 {
            return Err(GraphError::InvalidShape("a single-vertex clique with pendants is not maximal".into()));
        }
        Ok(())
    }

    /// Canonical parameters, ignoring labels.
    pub fn key(&self) -> (usize, usize, Vec<usize>) {
        let mut m = self.m.clone();
        m.sort_unstable_by(|a, b| b.cmp(a));
        (self.n2, self.ell, m)
    }
}

/// Parameters and labels of a connected well-split graph with `n ≥ 2`.
pub fn parameterize(g: &SimpleGraph) -> Result<WellSplitShape, GraphError> {
    if g.n() < 2 {
        return Err(GraphError::TooSmall);
    }
    if !g.is_connected() {
        return Err(GraphError::NotConnected);
    }
    let rec = recognize(g);
    if rec.class != GraphClass::WellSplit {
        return Err(GraphError::NotWellSplit);
    }
    let Splitting { v1, v2 } = rec.splitting.expect("well-split graphs carry a splitting");
    let mut pendants: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &v in &v1 {
        let anchor = g.neighbors(v).next().expect("connected graph has no isolated pendant");
        pendants.entry(anchor).or_default().push(v);
    }
    let mut anchors: Vec<usize> = pendants.keys().copied().collect();
    anchors.sort_by(|a, b| pendants[b].len().cmp(&pendants[a].len()).then(a.cmp(b)));
    let bare = v2.iter().copied().filter(|w| !pendants.contains_key(w));
    let mut labels = vec![VertexLabel::Clique(0); g.n()];
    for (pos, w) in anchors.iter().copied().chain(bare).enumerate() {
        labels[w] = VertexLabel::Clique(pos + 1);
    }
    let mut m = Vec::with_capacity(anchors.len());
    for (i, w) in anchors.iter().enumerate() {
        let list = &pendants[w];
        m.push(list.len());
        for (j, &v) in list.iter().enumerate() {
            labels[v] = VertexLabel::Pendant(i + 1, j + 1);
        }
    }
    Ok(WellSplitShape { n2: v2.len(), ell: anchors.len(), m, labels })
}

/// Builds the canonical graph of a shape: clique vertices `0..n2` (`w_j` is
/// vertex `j-1`), followed by the pendants of `w_1`, `w_2`, ... in order.
pub fn shape_to_graph(s: &WellSplitShape) -> Result<SimpleGraph, GraphError> {
    s.check()?;
    let n = s.vertex_count();
    let mut g = SimpleGraph::complete(s.n2);
    g.adj.iter_mut().for_each(|row| row.resize(n, false));
    g.adj.resize(n, vec![false; n]);
    let mut next = s.n2;
    for (i, &mi) in s.m.iter().enumerate() {
        for _ in 0..mi {
            g.set_edge(i, next);
            next += 1;
        }
    }
    Ok(g)
}

/// Exact isomorphism test for graphs with at most 10 vertices.
pub fn graphs_isomorphic(a: &SimpleGraph, b: &SimpleGraph) -> Result<bool, GraphError> {
    for g in [a, b] {
        if g.n() > 10 {
            return Err(GraphError::TooLarge(g.n()));
        }
    }
    if a.n() != b.n() || a.edge_count() != b.edge_count() {
        return Ok(false);
    }
    let mut da: Vec<usize> = (0..a.n()).map(|v| a.degree(v)).collect();
    let mut db: Vec<usize> = (0..b.n()).map(|v| b.degree(v)).collect();
    da.sort_unstable();
    db.sort_unstable();
    if da != db {
        return Ok(false);
    }
    Ok(petgraph::algo::is_isomorphic(&to_petgraph(a), &to_petgraph(b)))
}

fn to_petgraph(g: &SimpleGraph) -> petgraph::graph::UnGraph<(), ()> {
    let mut pg = petgraph::graph::UnGraph::with_capacity(g.n(), g.edge_count());
    let nodes: Vec<_> = (0..g.n()).map(|_| pg.add_node(())).collect();
    for (i, j) in g.edges() {
        pg.add_edge(nodes[i], nodes[j], ());
    }
    pg
}
