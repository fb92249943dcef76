//! Finite directed weighted networks with a designated boundary and root.
//!
//! A network is a strongly connected digraph with positive edge weights, no
//! loops, a non-empty boundary set, and a root vertex. The JSON form is
//!
//! ```json
//! {
//!   "vertices": ["0", "1", "2"],
//!   "edges": [{"from": "0", "to": "1", "weight": 1.0}, ...],
//!   "boundary": ["0", "2"],
//!   "root": "0"
//! }
//! ```
//!
//! Canonical serialization keeps vertices in file order, sorts edges by
//! (from-index, to-index), and prints weights with 17 significant digits so
//! that parse → serialize → parse is the identity.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Counts strongly connected components of a digraph given by index pairs.
pub fn strongly_connected_components(vertex_count: usize, edges: &[(usize, usize)]) -> usize {
    if vertex_count == 0 {
        return 0;
    }
    let mut fwd = vec![Vec::new(); vertex_count];
    let mut rev = vec![Vec::new(); vertex_count];
    for &(x, y) in edges {
        fwd[x].push(y);
        rev[y].push(x);
    }
    // Kosaraju with explicit stacks. First pass: forward post-order.
    let mut order = Vec::with_capacity(vertex_count);
    let mut seen = vec![false; vertex_count];
    for start in 0..vertex_count {
        if seen[start] {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        seen[start] = true;
        while let Some(&mut (x, ref mut next)) = stack.last_mut() {
            if *next < fwd[x].len() {
                let y = fwd[x][*next];
                *next += 1;
                if !seen[y] {
                    seen[y] = true;
                    stack.push((y, 0));
                }
            } else {
                order.push(x);
                stack.pop();
            }
        }
    }
    // Second pass: reverse graph in reverse post-order.
    let mut component = vec![usize::MAX; vertex_count];
    let mut count = 0;
    for &start in order.iter().rev() {
        if component[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        component[start] = count;
        while let Some(x) = stack.pop() {
            for &y in &rev[x] {
                if component[y] == usize::MAX {
                    component[y] = count;
                    stack.push(y);
                }
            }
        }
        count += 1;
    }
    count
}

/// True when the digraph is strongly connected.
pub fn strongly_connected(vertex_count: usize, edges: &[(usize, usize)]) -> bool {
    strongly_connected_components(vertex_count, edges) == 1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    from: String,
    to: String,
    weight: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    vertices: Vec<String>,
    edges: Vec<RawEdge>,
    boundary: Vec<String>,
    root: String,
}

/// A validated network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    vertices: Vec<String>,
    index: BTreeMap<String, usize>,
    edges: BTreeMap<(usize, usize), f64>,
    boundary: BTreeSet<usize>,
    root: usize,
}

impl Network {
    /// Builds and validates a network from labeled parts.
    pub fn new(
        vertices: Vec<String>,
        edges: impl IntoIterator<Item = (String, String, f64)>,
        boundary: impl IntoIterator<Item = String>,
        root: &str,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Invalid("vertex list is empty".to_string()));
        }
        let mut index = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if v.is_empty() {
                return Err(Error::Invalid("empty vertex label".to_string()));
            }
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate vertex \"{v}\"")));
            }
        }
        let lookup = |label: &str, role: &str| -> Result<usize> {
            index
                .get(label)
                .copied()
                .ok_or_else(|| Error::Invalid(format!("{role} references unknown vertex \"{label}\"")))
        };
        let mut edge_map = BTreeMap::new();
        for (from, to, weight) in edges {
            let x = lookup(&from, "edge")?;
            let y = lookup(&to, "edge")?;
            if x == y {
                return Err(Error::Invalid(format!("loop edge at vertex \"{from}\"")));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::Invalid(format!(
                    "edge \"{from}\" -> \"{to}\" has non-positive or non-finite weight {weight}"
                )));
            }
            if edge_map.insert((x, y), weight).is_some() {
                return Err(Error::Invalid(format!(
                    "duplicate edge \"{from}\" -> \"{to}\""
                )));
            }
        }
        let mut boundary_set = BTreeSet::new();
        for b in boundary {
            let i = lookup(&b, "boundary")?;
            if !boundary_set.insert(i) {
                return Err(Error::Invalid(format!("duplicate boundary vertex \"{b}\"")));
            }
        }
        if boundary_set.is_empty() {
            return Err(Error::Invalid("boundary is empty".to_string()));
        }
        let root = lookup(root, "root")?;
        for (i, v) in vertices.iter().enumerate() {
            if !edge_map.keys().any(|&(x, _)| x == i) {
                return Err(Error::Invalid(format!("vertex \"{v}\" has no outgoing edge")));
            }
        }
        let pairs: Vec<(usize, usize)> = edge_map.keys().copied().collect();
        let components = strongly_connected_components(vertices.len(), &pairs);
        if components != 1 {
            return Err(Error::NotStronglyConnected(components));
        }
        Ok(Self {
            vertices,
            index,
            edges: edge_map,
            boundary: boundary_set,
            root,
        })
    }

    /// Parses and validates the JSON form.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawNetwork = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::new(
            raw.vertices,
            raw.edges.into_iter().map(|e| (e.from, e.to, e.weight)),
            raw.boundary,
            &raw.root,
        )
    }

    /// Canonical JSON: vertex order preserved, edges sorted by index pair,
    /// weights with 17 significant digits.
    pub fn to_canonical_json(&self) -> String {
        let quote = |s: &str| serde_json::to_string(s).expect("string serialization");
        let mut out = String::from("{\n  \"vertices\": [");
        out.push_str(
            &self
                .vertices
                .iter()
                .map(|v| quote(v))
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push_str("],\n  \"edges\": [\n");
        let lines: Vec<String> = self
            .edges
            .iter()
            .map(|(&(x, y), &w)| {
                format!(
                    "    {{\"from\": {}, \"to\": {}, \"weight\": {:.16e}}}",
                    quote(&self.vertices[x]),
                    quote(&self.vertices[y]),
                    w
                )
            })
            .collect();
        out.push_str(&lines.join(",\n"));
        out.push_str("\n  ],\n  \"boundary\": [");
        out.push_str(
            &self
                .boundary
                .iter()
                .map(|&i| quote(&self.vertices[i]))
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push_str("],\n  \"root\": ");
        out.push_str(&quote(&self.vertices[self.root]));
        out.push_str("\n}\n");
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.vertices[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.vertices
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Edges as (from, to, weight) index triples, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(x, y), &w)| (x, y, w))
    }

    pub fn weight(&self, x: usize, y: usize) -> Option<f64> {
        self.edges.get(&(x, y)).copied()
    }

    pub fn boundary(&self) -> &BTreeSet<usize> {
        &self.boundary
    }

    /// Boundary indices in increasing order.
    pub fn boundary_sorted(&self) -> Vec<usize> {
        self.boundary.iter().copied().collect()
    }

    /// Interior indices in increasing order. May be empty.
    pub fn interior_sorted(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|i| !self.boundary.contains(i))
            .collect()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn is_strongly_connected(&self) -> bool {
        let pairs: Vec<(usize, usize)> = self.edges.keys().copied().collect();
        strongly_connected(self.vertices.len(), &pairs)
    }

    /// Induced sub-network on `subset`. Its boundary consists of the
    /// vertices of `subset` with at least one edge leaving `subset`.
    pub fn subnetwork(&self, subset: &BTreeSet<usize>) -> Result<SubNetwork<'_>> {
        if subset.is_empty() {
            return Err(Error::EmptySubset("sub-network vertex set is empty".to_string()));
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= self.vertices.len()) {
            return Err(Error::BadParameter(format!(
                "sub-network vertex index {bad} out of range"
            )));
        }
        let vertices: Vec<usize> = subset.iter().copied().collect();
        let boundary: Vec<usize> = vertices
            .iter()
            .copied()
            .filter(|&x| {
                self.edges
                    .range((x, 0)..=(x, usize::MAX))
                    .any(|(&(_, y), _)| !subset.contains(&y))
            })
            .collect();
        let interior: Vec<usize> = vertices
            .iter()
            .copied()
            .filter(|x| !boundary.contains(x))
            .collect();
        Ok(SubNetwork {
            parent: self,
            vertices,
            boundary,
            interior,
        })
    }
}

/// Induced sub-network: vertex subset plus the boundary/interior split
/// determined by edges leaving the subset.
#[derive(Debug, Clone)]
pub struct SubNetwork<'a> {
    parent: &'a Network,
    vertices: Vec<usize>,
    boundary: Vec<usize>,
    interior: Vec<usize>,
}

impl<'a> SubNetwork<'a> {
    pub fn parent(&self) -> &'a Network {
        self.parent
    }

    /// Parent indices of the subset, sorted.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Parent indices of the induced boundary, sorted.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Parent indices of the induced interior, sorted.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// True when the induced subgraph (edges within the subset) is strongly
    /// connected.
    pub fn is_strongly_connected(&self) -> bool {
        let pos: BTreeMap<usize, usize> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(k, &x)| (x, k))
            .collect();
        let edges: Vec<(usize, usize)> = self
            .parent
            .edges()
            .filter_map(|(x, y, _)| Some((*pos.get(&x)?, *pos.get(&y)?)))
            .collect();
        strongly_connected(self.vertices.len(), &edges)
    }
}

/// Bidirectional path 0 — 1 — ... — n with unit weights, boundary at the two
/// endpoints, root at 0. Requires n >= 2.
pub fn path_a(n: usize) -> Result<Network> {
    if n < 2 {
        return Err(Error::BadParameter(format!(
            "path length {n} too short, need at least 2"
        )));
    }
    let vertices: Vec<String> = (0..=n).map(|k| k.to_string()).collect();
    let mut edges = Vec::new();
    for k in 0..n {
        edges.push((k.to_string(), (k + 1).to_string(), 1.0));
        edges.push(((k + 1).to_string(), k.to_string(), 1.0));
    }
    Network::new(
        vertices,
        edges,
        [0.to_string(), n.to_string()],
        "0",
    )
}

/// Funnel network on vertices 1..N: vertex 1 branches to 2..N with the given
/// tail weights (normalized), every k >= 2 steps down to k-1, boundary at
/// {N-1, N}, root at 1. `tail[j]` is the weight of edge 1 -> j+2, so N =
/// tail.len() + 1 and at least two tail entries are required.
pub fn funnel_b(tail: &[f64]) -> Result<Network> {
    if tail.len() < 2 {
        return Err(Error::BadParameter(
            "funnel needs at least two branch weights (N >= 3)".to_string(),
        ));
    }
    if let Some(bad) = tail.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::BadParameter(format!(
            "funnel branch weight {bad} is not positive"
        )));
    }
    let sum: f64 = tail.iter().sum();
    let n = tail.len() + 1;
    let vertices: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
    let mut edges = Vec::new();
    for (j, &p) in tail.iter().enumerate() {
        edges.push(("1".to_string(), (j + 2).to_string(), p / sum));
    }
    for k in 2..=n {
        edges.push((k.to_string(), (k - 1).to_string(), 1.0));
    }
    Network::new(
        vertices,
        edges,
        [(n - 1).to_string(), n.to_string()],
        "1",
    )
}

/// Funnel builder taking the full probability vector p_1..p_N (summing to 1)
/// and folding the retention probability p_1 away: the emitted network has
/// branch weights p_k / (1 - p_1). The transition matrix of the result equals
/// the original chain conditioned on leaving vertex 1.
pub fn funnel_b_folded(ps: &[f64]) -> Result<Network> {
    if ps.len() < 3 {
        return Err(Error::BadParameter(
            "funnel probability vector needs at least three entries".to_string(),
        ));
    }
    if let Some(bad) = ps.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::BadParameter(format!(
            "funnel probability {bad} is not positive"
        )));
    }
    let sum: f64 = ps.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::BadParameter(format!(
            "funnel probabilities sum to {sum}, expected 1"
        )));
    }
    funnel_b(&ps[1..])
}

/// Oriented cycle of even length: k -> k+1 mod len with unit weights,
/// boundary on the odd vertices, root at 0. Requires len even and >= 4.
pub fn cycle(len: usize) -> Result<Network> {
    if len < 4 || len % 2 != 0 {
        return Err(Error::BadParameter(format!(
            "cycle length {len} must be even and at least 4"
        )));
    }
    let vertices: Vec<String> = (0..len).map(|k| k.to_string()).collect();
    let edges: Vec<(String, String, f64)> = (0..len)
        .map(|k| (k.to_string(), ((k + 1) % len).to_string(), 1.0))
        .collect();
    let boundary: Vec<String> = (0..len)
        .filter(|k| k % 2 == 1)
        .map(|k| k.to_string())
        .collect();
    Network::new(vertices, edges, boundary, "0")
}
