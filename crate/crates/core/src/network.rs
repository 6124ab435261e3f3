//! Street network, shortest travel times and shortest paths.
//!
//! Nodes are numbered densely from 1. Travel times are integer seconds. The
//! time-expanded graph that routes live on is never materialized: a route is a
//! sequence of timestamped stops, consecutive stops are joined by shortest
//! paths (move edges) and any slack is spent waiting in place (unit wait edges).

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::GraphError;

/// 1-based node identifier.
pub type NodeId = u32;
/// Simulation clock unit.
pub type Seconds = i64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub travel_time: Seconds,
}

/// Edge kinds of the time-expanded graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeExpandedEdgeKind {
    Move,
    Wait,
}

impl TimeExpandedEdgeKind {
    /// Clock advance along an edge of this kind.
    pub fn duration(self, travel_time: Seconds) -> Seconds {
        match self {
            TimeExpandedEdgeKind::Move => travel_time,
            TimeExpandedEdgeKind::Wait => 1,
        }
    }
}

/// Validated, strongly connected directed street graph.
#[derive(Debug, Clone)]
pub struct StreetGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out: Vec<Vec<(NodeId, Seconds)>>,
    inc: Vec<Vec<(NodeId, Seconds)>>,
}

impl StreetGraph {
    /// Builds a graph from node and edge records. `nodes` must carry ids `1..=n`
    /// in any order.
    pub fn new(mut nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        nodes.sort_by_key(|n| n.id);
        for (i, n) in nodes.iter().enumerate() {
            if n.id as usize != i + 1 {
                return Err(GraphError::NotDense { expected: i as NodeId + 1, found: n.id });
            }
        }
        let n = nodes.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        for (i, e) in edges.iter().enumerate() {
            for endpoint in [e.from, e.to] {
                if endpoint == 0 || endpoint as usize > n {
                    return Err(GraphError::DanglingEndpoint { record: i + 1, node: endpoint });
                }
            }
            if e.travel_time < 1 {
                return Err(GraphError::NonPositiveTime { record: i + 1, time: e.travel_time.to_string() });
            }
        }
        Self::assemble(nodes, edges)
    }

    fn assemble(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let n = nodes.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for e in &edges {
            push_min(&mut out[e.from as usize - 1], e.to, e.travel_time);
            push_min(&mut inc[e.to as usize - 1], e.from, e.travel_time);
        }
        for list in out.iter_mut().chain(inc.iter_mut()) {
            list.sort_unstable();
        }
        let graph = StreetGraph { nodes, edges, out, inc };
        graph.check_strongly_connected()?;
        Ok(graph)
    }

    /// Parses the line-oriented graph format:
    ///
    /// ```text
    /// nodes <n>
    /// node <id> <x> <y>      (n lines)
    /// edges <m>
    /// edge <from> <to> <travel_time_seconds>   (m lines)
    /// ```
    ///
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, strip_comment(l).trim()))
            .filter(|(_, l)| !l.is_empty());

        let (line, header) = lines.next().ok_or(GraphError::Empty)?;
        let n = parse_count(header, "nodes", line)?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, rec) = lines
                .next()
                .ok_or_else(|| GraphError::parse(line, "unexpected end of file in node records"))?;
            let f: Vec<&str> = rec.split_whitespace().collect();
            if f.len() != 4 || f[0] != "node" {
                return Err(GraphError::parse(line, "expected `node <id> <x> <y>`"));
            }
            let id = f[1].parse::<NodeId>().map_err(|_| GraphError::parse(line, "bad node id"))?;
            let x = f[2].parse::<f64>().map_err(|_| GraphError::parse(line, "bad x coordinate"))?;
            let y = f[3].parse::<f64>().map_err(|_| GraphError::parse(line, "bad y coordinate"))?;
            if !x.is_finite() || !y.is_finite() {
                return Err(GraphError::parse(line, "non-finite coordinate"));
            }
            nodes.push(Node { id, x, y });
        }
        let (line, header) = lines
            .next()
            .ok_or_else(|| GraphError::parse(line, "missing `edges <m>` header"))?;
        let m = parse_count(header, "edges", line)?;
        let mut edges = Vec::with_capacity(m);
        let mut edge_lines = Vec::with_capacity(m);
        for _ in 0..m {
            let (line, rec) = lines
                .next()
                .ok_or_else(|| GraphError::parse(line, "unexpected end of file in edge records"))?;
            let f: Vec<&str> = rec.split_whitespace().collect();
            if f.len() != 4 || f[0] != "edge" {
                return Err(GraphError::parse(line, "expected `edge <from> <to> <travel_time>`"));
            }
            let from = f[1].parse::<NodeId>().map_err(|_| GraphError::parse(line, "bad edge source"))?;
            let to = f[2].parse::<NodeId>().map_err(|_| GraphError::parse(line, "bad edge target"))?;
            // fractional or negative travel times are rejected here
            let travel_time = match f[3].parse::<Seconds>() {
                Ok(t) if t >= 1 => t,
                _ => return Err(GraphError::NonPositiveTime { record: line, time: f[3].to_string() }),
            };
            edges.push(Edge { from, to, travel_time });
            edge_lines.push(line);
        }
        if let Some((line, _)) = lines.next() {
            return Err(GraphError::parse(line, "trailing records after edge list"));
        }

        let mut sorted: Vec<&Node> = nodes.iter().collect();
        sorted.sort_by_key(|n| n.id);
        for (i, node) in sorted.iter().enumerate() {
            if node.id as usize != i + 1 {
                return Err(GraphError::NotDense { expected: i as NodeId + 1, found: node.id });
            }
        }
        for (e, &line) in edges.iter().zip(&edge_lines) {
            for endpoint in [e.from, e.to] {
                if endpoint == 0 || endpoint as usize > n {
                    return Err(GraphError::DanglingEndpoint { record: line, node: endpoint });
                }
            }
        }
        Self::new(nodes, edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GraphError::Io { path: path.display().to_string(), source: e })?;
        Self::parse(&text)
    }

    /// Bidirectional `cols x rows` grid, row-major ids starting at 1, node `(c, r)`
    /// placed at `(x0 + c, y0 + r)`.
    pub fn grid(cols: u32, rows: u32, travel_time: Seconds, x0: f64, y0: f64) -> Self {
        let id = |c: u32, r: u32| r * cols + c + 1;
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                nodes.push(Node { id: id(c, r), x: x0 + c as f64, y: y0 + r as f64 });
                if c + 1 < cols {
                    edges.push(Edge { from: id(c, r), to: id(c + 1, r), travel_time });
                    edges.push(Edge { from: id(c + 1, r), to: id(c, r), travel_time });
                }
                if r + 1 < rows {
                    edges.push(Edge { from: id(c, r), to: id(c, r + 1), travel_time });
                    edges.push(Edge { from: id(c, r + 1), to: id(c, r), travel_time });
                }
            }
        }
        Self::new(nodes, edges).expect("grid graphs are valid")
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize - 1]
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id >= 1 && id as usize <= self.nodes.len()
    }

    /// Outgoing neighbors with travel time, sorted by neighbor id.
    pub fn neighbors(&self, id: NodeId) -> &[(NodeId, Seconds)] {
        &self.out[id as usize - 1]
    }

    /// Node closest to planar point `(x, y)`; lowest id on ties.
    pub fn nearest_node(&self, x: f64, y: f64) -> NodeId {
        let mut best = (f64::INFINITY, 1);
        for n in &self.nodes {
            let d = (n.x - x).powi(2) + (n.y - y).powi(2);
            if d < best.0 {
                best = (d, n.id);
            }
        }
        best.1
    }

    /// Euclidean diagonal of the coordinate bounding box.
    pub fn coordinate_extent(&self) -> f64 {
        let (mut lx, mut ly, mut hx, mut hy) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for n in &self.nodes {
            lx = lx.min(n.x);
            ly = ly.min(n.y);
            hx = hx.max(n.x);
            hy = hy.max(n.y);
        }
        ((hx - lx).powi(2) + (hy - ly).powi(2)).sqrt()
    }

    fn check_strongly_connected(&self) -> Result<(), GraphError> {
        for adj in [&self.out, &self.inc] {
            let mut seen = vec![false; self.nodes.len()];
            let mut stack = vec![1 as NodeId];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for &(v, _) in &adj[u as usize - 1] {
                    if !seen[v as usize - 1] {
                        seen[v as usize - 1] = true;
                        stack.push(v);
                    }
                }
            }
            if let Some(i) = seen.iter().position(|s| !s) {
                return Err(GraphError::NotStronglyConnected { node: i as NodeId + 1 });
            }
        }
        Ok(())
    }
}

impl fmt::Display for StreetGraph {
    /// Writes the graph in its file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes {}", self.nodes.len())?;
        for n in &self.nodes {
            writeln!(f, "node {} {} {}", n.id, n.x, n.y)?;
        }
        writeln!(f, "edges {}", self.edges.len())?;
        for e in &self.edges {
            writeln!(f, "edge {} {} {}", e.from, e.to, e.travel_time)?;
        }
        Ok(())
    }
}

fn push_min(list: &mut Vec<(NodeId, Seconds)>, to: NodeId, t: Seconds) {
    match list.iter_mut().find(|(v, _)| *v == to) {
        Some(entry) => entry.1 = entry.1.min(t),
        None => list.push((to, t)),
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

fn parse_count(header: &str, keyword: &str, line: usize) -> Result<usize, GraphError> {
    let f: Vec<&str> = header.split_whitespace().collect();
    if f.len() != 2 || f[0] != keyword {
        return Err(GraphError::parse(line, format!("expected `{keyword} <count>`")));
    }
    f[1].parse().map_err(|_| GraphError::parse(line, format!("bad {keyword} count")))
}

/// Shortest travel times and paths over a [`StreetGraph`].
///
/// Distances are computed lazily, one reverse Dijkstra per destination, and
/// cached behind `OnceLock`s so a shared oracle can be queried from several
/// threads. Among equal-time paths the one whose next hop has the smallest node
/// id is taken at every step.
#[derive(Debug)]
pub struct TravelTimeOracle {
    graph: StreetGraph,
    to_target: Vec<OnceLock<Box<[Seconds]>>>,
    diameter: OnceLock<Seconds>,
}

impl TravelTimeOracle {
    pub fn new(graph: StreetGraph) -> Self {
        let n = graph.node_count();
        TravelTimeOracle { graph, to_target: (0..n).map(|_| OnceLock::new()).collect(), diameter: OnceLock::new() }
    }

    pub fn graph(&self) -> &StreetGraph {
        &self.graph
    }

    fn distances_to(&self, target: NodeId) -> &[Seconds] {
        self.to_target[target as usize - 1].get_or_init(|| self.reverse_dijkstra(target))
    }

    fn reverse_dijkstra(&self, target: NodeId) -> Box<[Seconds]> {
        let n = self.graph.node_count();
        let mut dist = vec![Seconds::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[target as usize - 1] = 0;
        heap.push(Reverse((0, target)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u as usize - 1] {
                continue;
            }
            for &(v, w) in &self.graph.inc[u as usize - 1] {
                let nd = d + w;
                if nd < dist[v as usize - 1] {
                    dist[v as usize - 1] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        dist.into_boxed_slice()
    }

    /// Shortest travel time; 0 when `from == to`.
    pub fn time(&self, from: NodeId, to: NodeId) -> Seconds {
        if from == to {
            return 0;
        }
        self.distances_to(to)[from as usize - 1]
    }

    /// Node sequence of the shortest path, both endpoints included.
    pub fn path(&self, from: NodeId, to: NodeId) -> Vec<NodeId> {
        let dist = self.distances_to(to);
        let mut path = vec![from];
        let mut cur = from;
        while cur != to {
            let remaining = dist[cur as usize - 1];
            let next = self
                .graph
                .neighbors(cur)
                .iter()
                .find(|&&(v, w)| dist[v as usize - 1] != Seconds::MAX && w + dist[v as usize - 1] == remaining)
                .map(|&(v, _)| v)
                .expect("strongly connected graph has a next hop");
            path.push(next);
            cur = next;
        }
        path
    }

    /// Shortest path with the arrival time at every node, departing at `depart`.
    pub fn timed_path(&self, from: NodeId, to: NodeId, depart: Seconds) -> Vec<(NodeId, Seconds)> {
        let path = self.path(from, to);
        let mut out = Vec::with_capacity(path.len());
        let mut t = depart;
        out.push((path[0], t));
        for w in path.windows(2) {
            t += self.edge_time(w[0], w[1]);
            out.push((w[1], t));
        }
        out
    }

    fn edge_time(&self, from: NodeId, to: NodeId) -> Seconds {
        self.graph
            .neighbors(from)
            .iter()
            .filter(|(v, _)| *v == to)
            .map(|&(_, w)| w)
            .min()
            .expect("path hop is an edge")
    }

    /// Largest shortest-path time over all ordered node pairs.
    pub fn diameter(&self) -> Seconds {
        *self.diameter.get_or_init(|| {
            let n = self.graph.node_count() as NodeId;
            (1..=n).map(|t| self.distances_to(t).iter().copied().max().unwrap_or(0)).max().unwrap_or(0)
        })
    }
}
