//! Dependency graphs on vertices `1..=n`, forest classification and the
//! rooted vertex orderings used by the exposure martingale.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::profile::LipschitzProfile;

/// Undirected simple graph on vertices `1..=n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Sorted `(u, v)` with `u < v`, 1-based.
    edges: Vec<(usize, usize)>,
    /// 0-based sorted neighbour lists.
    adj: Vec<Vec<usize>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, edges={:?})", self.n, self.edges)
    }
}

impl Graph {
    /// Builds a graph, normalising each pair to `(min, max)` and dropping duplicates.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return input(format!("self-loop ({u}, {v}) is not allowed"));
            }
            if u == 0 || v == 0 || u > n || v > n {
                return input(format!("edge ({u}, {v}) has an endpoint outside 1..={n}"));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &set {
            adj[u - 1].push(v - 1);
            adj[v - 1].push(u - 1);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self { n, edges: set.into_iter().collect(), adj })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new(), adj: vec![Vec::new(); n] }
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (1..=n)
            .flat_map(|u| (u + 1..=n).map(move |v| (u, v)))
            .collect();
        Self::new(n, &edges).expect("complete graph edges are valid")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|u| (u, u + 1)).collect();
        Self::new(n, &edges).expect("path edges are valid")
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|u| (u, u + 1)).collect();
        if n >= 3 {
            edges.push((1, n));
        }
        Self::new(n, &edges).expect("cycle edges are valid")
    }

    /// Vertex-disjoint union; vertices of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.n;
        let edges: Vec<_> = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(u, v)| (u + shift, v + shift)))
            .collect();
        Graph::new(self.n + other.n, &edges).expect("union of valid graphs is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && u >= 1 && v >= 1 && u <= self.n && v <= self.n
            && self.adj[u - 1].binary_search(&(v - 1)).is_ok()
    }

    /// 1-based neighbours of the 1-based vertex `v`, ascending.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v - 1].iter().map(|&u| u + 1)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v - 1].len()
    }

    /// Neighbour bitmasks (bit `u-1` set for neighbour `u`); requires `n <= 64`.
    pub fn neighbor_masks(&self) -> Result<Vec<u64>> {
        if self.n > 64 {
            return Err(Error::Scale(format!(
                "bitmask algorithms support at most 64 vertices, graph has {}",
                self.n
            )));
        }
        Ok(self
            .adj
            .iter()
            .map(|list| list.iter().fold(0u64, |m, &u| m | (1 << u)))
            .collect())
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> {
        1..=self.n
    }

    /// `G[S]` with vertices relabelled `1..=|S|` in ascending original order.
    pub fn induced_subgraph(&self, subset: &[usize]) -> Result<InducedSubgraph> {
        let mut labels: Vec<usize> = subset.to_vec();
        labels.sort_unstable();
        labels.dedup();
        if let Some(&bad) = labels.iter().find(|&&v| v == 0 || v > self.n) {
            return input(format!("vertex {bad} is outside 1..={}", self.n));
        }
        let mut position = vec![0usize; self.n + 1];
        for (k, &v) in labels.iter().enumerate() {
            position[v] = k + 1;
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .filter(|&&(u, v)| position[u] != 0 && position[v] != 0)
            .map(|&(u, v)| (position[u], position[v]))
            .collect();
        let graph = Graph::new(labels.len(), &edges)?;
        Ok(InducedSubgraph { graph, labels })
    }

    pub fn classify(&self) -> ForestClassification {
        let mut component_of = vec![usize::MAX; self.n];
        let mut components = Vec::new();
        for start in 0..self.n {
            if component_of[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            component_of[start] = id;
            while let Some(v) = stack.pop() {
                members.push(v + 1);
                for &u in &self.adj[v] {
                    if component_of[u] == usize::MAX {
                        component_of[u] = id;
                        stack.push(u);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        let tree_count = components.len();
        let is_forest = self.edges.len() + tree_count == self.n;
        ForestClassification { is_forest, components, tree_count }
    }

    /// True iff `G[subset]` is acyclic, for a bitmask over `n <= 64` vertices.
    pub(crate) fn mask_is_forest(masks: &[u64], subset: u64) -> bool {
        let mut edges = 0u32;
        let mut seen = 0u64;
        let mut components = 0u32;
        let mut rest = subset;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            edges += (masks[v] & subset).count_ones();
            if seen & (1 << v) == 0 {
                components += 1;
                let mut frontier = 1u64 << v;
                seen |= frontier;
                while frontier != 0 {
                    let u = frontier.trailing_zeros() as usize;
                    frontier &= frontier - 1;
                    let fresh = masks[u] & subset & !seen;
                    seen |= fresh;
                    frontier |= fresh;
                }
            }
        }
        edges / 2 + components == subset.count_ones()
    }
}

/// Parsed form `{"n": int, "edges": [[u, v], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

impl GraphJson {
    pub fn into_graph(self) -> Result<Graph> {
        if self.n == 0 {
            return input("graph must have at least one vertex");
        }
        let pairs: Vec<_> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(self.n, &pairs)
    }
}

impl From<&Graph> for GraphJson {
    fn from(g: &Graph) -> Self {
        GraphJson { n: g.n, edges: g.edges.iter().map(|&(u, v)| [u, v]).collect() }
    }
}

impl Graph {
    pub fn from_json_str(text: &str) -> Result<Graph> {
        let parsed: GraphJson = serde_json::from_str(text)
            .map_err(|e| Error::Input(format!("malformed graph JSON at line {} column {}: {e}", e.line(), e.column())))?;
        parsed.into_graph()
    }

    /// Plain-text edge list: first line `n`, then one `u v` pair per line.
    /// Blank lines and `#` comments are ignored.
    pub fn from_edge_list_str(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line_no, first) = lines
            .next()
            .ok_or_else(|| Error::Input("edge list is empty; expected vertex count".into()))?;
        let n: usize = first
            .parse()
            .map_err(|_| Error::Input(format!("line {line_no}: expected vertex count, found '{first}'")))?;
        if n == 0 {
            return input(format!("line {line_no}: graph must have at least one vertex"));
        }
        let mut edges = Vec::new();
        for (line_no, line) in lines {
            let fields: Vec<_> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Input(format!("line {line_no}: '{s}' is not a vertex label")))
            };
            match fields.as_slice() {
                [u, v] => edges.push((parse(u)?, parse(v)?)),
                _ => return input(format!("line {line_no}: expected 'u v', found '{line}'")),
            }
        }
        Graph::new(n, &edges).map_err(|e| match e {
            Error::Input(msg) => Error::Input(format!("edge list: {msg}")),
            other => other,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&GraphJson::from(self)).expect("graph serialises")
    }
}

/// `G[S]` together with the original label of each new vertex.
#[derive(Debug, Clone)]
pub struct InducedSubgraph {
    pub graph: Graph,
    /// `labels[k - 1]` is the original label of new vertex `k`.
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestClassification {
    pub is_forest: bool,
    /// Connected components, each sorted, ordered by smallest member.
    pub components: Vec<Vec<usize>>,
    pub tree_count: usize,
}

/// A tree relabelled so that descendants precede ancestors and the root,
/// a vertex of minimal Lipschitz coefficient, comes last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedTree {
    /// `vertex_order[k]` is the original label of relabelled vertex `k + 1`.
    vertex_order: Vec<usize>,
    /// Relabelled parent of relabelled vertex `k + 1`; `None` for the root.
    parent: Vec<Option<usize>>,
    /// Relabelled vertices of the fringe subtree rooted at `k + 1`, ascending.
    fringe: Vec<Vec<usize>>,
}

impl OrderedTree {
    pub fn len(&self) -> usize {
        self.vertex_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_order.is_empty()
    }

    pub fn root(&self) -> usize {
        *self.vertex_order.last().expect("ordered trees are nonempty")
    }

    pub fn vertex_order(&self) -> &[usize] {
        &self.vertex_order
    }

    /// Original label of relabelled vertex `i`.
    pub fn label(&self, i: usize) -> usize {
        self.vertex_order[i - 1]
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i - 1]
    }

    pub fn fringe(&self, i: usize) -> &[usize] {
        &self.fringe[i - 1]
    }

    /// `S_i = [i+1, |T|] \ {p_i}` in relabelled coordinates.
    pub fn s_set(&self, i: usize) -> Vec<usize> {
        let p = self.parent(i);
        (i + 1..=self.len()).filter(|&j| Some(j) != p).collect()
    }
}

/// Orders the tree `G[tree_vertices]` for vertex exposure. The root is the
/// smallest label attaining `min c`; children are visited by ascending label
/// and vertices are numbered in post-order.
pub fn rooted_order(g: &Graph, tree_vertices: &[usize], c: &LipschitzProfile) -> Result<OrderedTree> {
    c.check_len(g.n())?;
    let sub = g.induced_subgraph(tree_vertices)?;
    if sub.labels.is_empty() {
        return input("cannot order an empty vertex set");
    }
    let class = sub.graph.classify();
    if !(class.is_forest && class.tree_count == 1) {
        return Err(Error::Kind(format!(
            "vertices {:?} do not induce a tree",
            sub.labels
        )));
    }
    let local_root = (1..=sub.labels.len())
        .min_by(|&a, &b| c.get(sub.labels[a - 1]).cmp(c.get(sub.labels[b - 1])).then(a.cmp(&b)))
        .expect("nonempty");

    let size = sub.labels.len();
    // iterative post-order; local indices are 1-based
    let mut post = Vec::with_capacity(size);
    let mut local_parent = vec![0usize; size + 1];
    let mut stack: Vec<(usize, usize)> = vec![(local_root, 0)];
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        let children: Vec<usize> = sub
            .graph
            .neighbors(v)
            .filter(|&u| u != local_parent[v])
            .collect();
        if *next < children.len() {
            let child = children[*next];
            *next += 1;
            local_parent[child] = v;
            stack.push((child, 0));
        } else {
            post.push(v);
            stack.pop();
        }
    }
    let mut relabel = vec![0usize; size + 1];
    for (k, &v) in post.iter().enumerate() {
        relabel[v] = k + 1;
    }
    let vertex_order: Vec<usize> = post.iter().map(|&v| sub.labels[v - 1]).collect();
    let parent: Vec<Option<usize>> = post
        .iter()
        .map(|&v| (local_parent[v] != 0).then(|| relabel[local_parent[v]]))
        .collect();
    let mut fringe: Vec<Vec<usize>> = (1..=size).map(|i| vec![i]).collect();
    // children precede parents, so one forward sweep accumulates subtrees
    for i in 1..=size {
        if let Some(p) = parent[i - 1] {
            let child = fringe[i - 1].clone();
            fringe[p - 1].extend(child);
        }
    }
    for f in &mut fringe {
        f.sort_unstable();
    }
    Ok(OrderedTree { vertex_order, parent, fringe })
}

/// Exposure order for a whole forest: the ordered trees are concatenated,
/// components taken by ascending smallest label. Every tree root has no
/// parent; the last position is the root of the last tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposureOrder {
    order: Vec<usize>,
    parent: Vec<Option<usize>>,
    position: Vec<usize>,
}

impl ExposureOrder {
    pub fn for_forest(g: &Graph, c: &LipschitzProfile) -> Result<Self> {
        let class = g.classify();
        if !class.is_forest {
            return Err(Error::Kind("exposure orders require a forest dependency graph".into()));
        }
        let trees = class
            .components
            .iter()
            .map(|comp| rooted_order(g, comp, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::concat(&trees))
    }

    pub fn from_tree(tree: &OrderedTree) -> Self {
        Self::concat(std::slice::from_ref(tree))
    }

    fn concat(trees: &[OrderedTree]) -> Self {
        let mut order = Vec::new();
        let mut parent = Vec::new();
        for tree in trees {
            let offset = order.len();
            order.extend_from_slice(tree.vertex_order());
            parent.extend(tree.parent.iter().map(|p| p.map(|p| p + offset)));
        }
        let n = order.iter().copied().max().unwrap_or(0);
        let mut position = vec![0; n + 1];
        for (k, &v) in order.iter().enumerate() {
            position[v] = k + 1;
        }
        Self { order, parent, position }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Original label exposed at 1-based step `i`.
    pub fn label(&self, i: usize) -> usize {
        self.order[i - 1]
    }

    pub fn labels(&self) -> &[usize] {
        &self.order
    }

    /// Exposure step of the original label `v`.
    pub fn position(&self, v: usize) -> usize {
        self.position[v]
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i - 1]
    }

    /// `S_i = [i+1, n] \ {p_i}` in exposure positions.
    pub fn s_set(&self, i: usize) -> Vec<usize> {
        let p = self.parent(i);
        (i + 1..=self.len()).filter(|&j| Some(j) != p).collect()
    }

    /// Martingale-difference bound at step `i`: `c_i + c_{p_i}`, or `c_i` at a root.
    pub fn effective_coefficients(&self, c: &LipschitzProfile) -> Vec<crate::rational::Rational> {
        (1..=self.len())
            .map(|i| {
                let own = c.get(self.label(i)).clone();
                match self.parent(i) {
                    Some(p) => own + c.get(self.label(p)),
                    None => own,
                }
            })
            .collect()
    }
}

/// `D_{n,m}`: edge `{i, j}` iff `1 <= |i - j| <= m`.
pub fn m_dependence_graph(n: usize, m: usize) -> Result<Graph> {
    if m < 1 {
        return input("m-dependence gap must be at least 1");
    }
    if n < 1 {
        return input("m-dependence graph needs at least one vertex");
    }
    let edges: Vec<_> = (1..=n)
        .flat_map(|i| (i + 1..=(i + m).min(n)).map(move |j| (i, j)))
        .collect();
    Graph::new(n, &edges)
}

/// Consecutive blocks `B_1..B_p` of `[1, n]`, all of size `m` except possibly the last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub n: usize,
    pub m: usize,
    pub blocks: Vec<Vec<usize>>,
}

pub fn block_partition(n: usize, m: usize) -> Result<BlockPartition> {
    if n < 1 || m < 1 {
        return input(format!("block partition needs n >= 1 and m >= 1, got n={n}, m={m}"));
    }
    let blocks = (1..=n)
        .collect::<Vec<_>>()
        .chunks(m)
        .map(<[usize]>::to_vec)
        .collect();
    Ok(BlockPartition { n, m, blocks })
}

impl BlockPartition {
    /// A user-supplied grouping: consecutive runs covering `[1, n]` exactly.
    pub fn custom(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut expected = 1;
        for block in &blocks {
            if block.is_empty() {
                return input("block partitions may not contain empty blocks");
            }
            for &v in block {
                if v != expected {
                    return input(format!("blocks must be consecutive runs of 1..={n}; found {v} where {expected} was expected"));
                }
                expected += 1;
            }
        }
        if expected != n + 1 {
            return input(format!("blocks cover 1..={} but n = {n}", expected - 1));
        }
        let m = blocks.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self { n, m, blocks })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}
