//! Undirected simple graphs in CSR form, the self-loop-augmented symmetric
//! normalized adjacency, and edge-list ingestion.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

/// Immutable undirected simple graph.
///
/// Each undirected edge is stored twice in the CSR arrays (once per endpoint),
/// with neighbor lists sorted ascending. `edges` holds the canonical `(u, v)`
/// pairs with `u < v`, sorted lexicographically; a pair's position there is its
/// edge index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from unordered pairs. Duplicates (in either orientation)
    /// collapse; self-loops and out-of-range ids are rejected.
    pub fn from_edges<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::Validation(format!("self-loop on node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_canonical(n, edges))
    }

    /// `edges` must be sorted, deduplicated, `u < v < n`.
    fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; 2 * edges.len()];
        // Walking canonical edges in order fills every row in ascending order:
        // for row w, lower neighbors u (edges (u, w)) arrive sorted by u before
        // any higher neighbor (edges (w, v)) because (u, w) < (w, v).
        for &(u, v) in &edges {
            neighbors[cursor[u]] = v;
            cursor[u] += 1;
            neighbors[cursor[v]] = u;
            cursor[v] += 1;
        }
        Graph {
            n,
            offsets,
            neighbors,
            edges,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> Result<(usize, usize)> {
        self.edges.get(index).copied().ok_or(Error::InvalidEdge {
            index,
            edge_count: self.edges.len(),
        })
    }

    /// Canonical index of the edge `{u, v}`, if present.
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// New graph without edge `index`. Remaining edges keep their relative order.
    pub fn remove_edge(&self, index: usize) -> Result<Graph> {
        self.edge(index)?;
        let mut edges = self.edges.clone();
        edges.remove(index);
        Ok(Self::from_canonical(self.n, edges))
    }

    /// New graph without the given edge indices.
    pub fn remove_edges(&self, indices: &[usize]) -> Result<Graph> {
        let mut drop = vec![false; self.edges.len()];
        for &e in indices {
            self.edge(e)?;
            drop[e] = true;
        }
        let edges = self
            .edges
            .iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(&e, _)| e)
            .collect();
        Ok(Self::from_canonical(self.n, edges))
    }

    /// New graph with `{u, v}` added (no-op if already present).
    pub fn add_edge(&self, u: usize, v: usize) -> Result<Graph> {
        Graph::from_edges(self.n, self.edges.iter().copied().chain([(u, v)]))
    }

    /// Nodes within shortest-path distance `k` of any seed, seeds included.
    pub fn khop_set(&self, seeds: &NodeSet, k: usize) -> NodeSet {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::new();
        for &s in seeds.as_slice() {
            if dist[s] == usize::MAX {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            if dist[u] == k {
                continue;
            }
            for &w in self.neighbors(u) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        NodeSet(
            (0..self.n)
                .filter(|&v| dist[v] != usize::MAX)
                .collect(),
        )
    }

    pub fn normalized_adjacency(&self) -> NormalizedAdjacency {
        NormalizedAdjacency::new(self)
    }
}

/// `1 / sqrt(a * b)` for self-loop-augmented degrees `a`, `b`.
#[inline]
pub fn norm_weight(a: usize, b: usize) -> f64 {
    1.0 / ((a * b) as f64).sqrt()
}

/// Sparse `D̃^{-1/2} (A + I) D̃^{-1/2}` with `d̃ = d + 1`.
///
/// Pattern is the adjacency pattern plus the diagonal; columns within a row are
/// ascending. Each off-diagonal value is evaluated once per edge and written to
/// both mirrored slots.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn new(g: &Graph) -> Self {
        let n = g.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for v in 0..n {
            offsets.push(offsets[v] + g.degree(v) + 1);
        }
        let mut cols = vec![0usize; offsets[n]];
        let mut vals = vec![0.0f64; offsets[n]];
        let mut cursor = offsets[..n].to_vec();
        for v in 0..n {
            let dv = g.degree(v) + 1;
            let mut diag_done = false;
            for &u in g.neighbors(v) {
                if !diag_done && u > v {
                    cols[cursor[v]] = v;
                    vals[cursor[v]] = 1.0 / dv as f64;
                    cursor[v] += 1;
                    diag_done = true;
                }
                if u > v {
                    let w = norm_weight(dv, g.degree(u) + 1);
                    cols[cursor[v]] = u;
                    vals[cursor[v]] = w;
                    cursor[v] += 1;
                } else {
                    // mirrored slot was computed when row u was visited
                    let pos = offsets[u]
                        + cols[offsets[u]..offsets[u + 1]]
                            .binary_search(&v)
                            .expect("symmetric pattern");
                    cols[cursor[v]] = u;
                    vals[cursor[v]] = vals[pos];
                    cursor[v] += 1;
                }
            }
            if !diag_done {
                cols[cursor[v]] = v;
                vals[cursor[v]] = 1.0 / dv as f64;
                cursor[v] += 1;
            }
        }
        NormalizedAdjacency {
            n,
            offsets,
            cols,
            vals,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Stored `(column, value)` pairs of row `v`, ascending by column.
    pub fn row(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let r = self.offsets[u]..self.offsets[u + 1];
        match self.cols[r.clone()].binary_search(&v) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }
}

/// Sorted, deduplicated node ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new(mut ids: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&bad) = ids.iter().find(|&&v| v >= n) {
            return Err(Error::Validation(format!(
                "node {bad} outside 0..{n}"
            )));
        }
        ids.sort_unstable();
        ids.dedup();
        Ok(NodeSet(ids))
    }

    pub fn all(n: usize) -> Self {
        NodeSet((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.0.iter().all(|&v| other.contains(v))
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in &self.0 {
            m[v] = true;
        }
        m
    }
}

/// Parsed edge list plus the original tokens when ids were remapped.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// `ids[v]` is the token that node `v` was read from (remapped loads only).
    pub ids: Option<Vec<String>>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(p) => &line[..p],
        None => line,
    }
}

/// Reads `# nodes=N` style headers.
pub(crate) fn header_value(line: &str, key: &str) -> Option<std::result::Result<usize, String>> {
    let body = line.trim().strip_prefix('#')?.trim();
    let value = body.strip_prefix(key)?.trim_start().strip_prefix('=')?.trim();
    Some(value.parse::<usize>().map_err(|e| format!("bad {key} header: {e}")))
}

/// Parses a whitespace-separated edge list with dense non-negative integer ids.
///
/// `#` starts a comment; a `# nodes=N` line fixes the node count, otherwise it
/// is `max id + 1`.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    load_edge_list_impl(text, false).map(|l| l.graph)
}

/// Like [`load_edge_list`] but accepts arbitrary tokens as node ids and maps
/// them to dense ids in order of first appearance.
pub fn load_edge_list_remapped(text: &str) -> Result<LoadedGraph> {
    load_edge_list_impl(text, true)
}

fn load_edge_list_impl(text: &str, remap: bool) -> Result<LoadedGraph> {
    let mut declared_n = None;
    let mut pairs = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut ids: Vec<String> = Vec::new();
    let mut saw_content = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        if let Some(v) = header_value(raw, "nodes") {
            declared_n = Some(v.map_err(|msg| Error::Parse { line: line_no, msg })?);
            saw_content = true;
            continue;
        }
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        saw_content = true;
        let mut toks = line.split_whitespace();
        let (a, b) = match (toks.next(), toks.next(), toks.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected two node ids, got {line:?}"),
                })
            }
        };
        let mut resolve = |tok: &str| -> Result<usize> {
            if remap {
                let next = ids.len();
                Ok(*index.entry(tok.to_string()).or_insert_with(|| {
                    ids.push(tok.to_string());
                    next
                }))
            } else {
                tok.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("node id {tok:?} is not a non-negative integer"),
                })
            }
        };
        let u = resolve(a)?;
        let v = resolve(b)?;
        if u == v {
            return Err(Error::SelfLoop { line: line_no });
        }
        pairs.push((u, v));
    }
    if !saw_content {
        return Err(Error::Validation("edge list is empty".into()));
    }
    let inferred = if remap {
        ids.len()
    } else {
        pairs.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0)
    };
    let n = match declared_n {
        Some(d) if d < inferred => {
            return Err(Error::Validation(format!(
                "nodes={d} header but ids reach {}",
                inferred - 1
            )))
        }
        Some(d) => d,
        None => inferred,
    };
    if n == 0 {
        return Err(Error::Validation("graph has no nodes".into()));
    }
    let graph = Graph::from_edges(n, pairs)?;
    Ok(LoadedGraph {
        graph,
        ids: remap.then_some(ids),
    })
}
