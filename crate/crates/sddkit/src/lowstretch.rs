//! Spanning trees of controlled total stretch, and exact per-edge stretch.
//!
//! The stretch of an edge e over a tree T is `w_e` times the resistance of
//! the tree path between e's endpoints (edge lengths `1/w`). Tree stretch
//! dominates the edge's true effective resistance by Rayleigh monotonicity,
//! which is what makes stretch usable as an oversampling probability.
//!
//! Two constructions compete per graph and the one with the smaller measured
//! total stretch wins: a recursive ball-decomposition tree (grow a central
//! ball cutting few edges, recurse on the ball and on the residual
//! components through their best bridge edges) and a plain shortest-path
//! tree from an approximate center.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Rooted spanning tree over a host graph.
///
/// `parent[root] == root`; every other vertex records the graph edge to its
/// parent. `scale` is the multiplier applied to tree-edge weights when the
/// tree is used as the deterministic core of a sparsifier.
#[derive(Debug, Clone)]
pub struct SpanningTree {
    root: usize,
    parent: Vec<usize>,
    parent_edge: Vec<Option<usize>>,
    scale: f64,
}

impl SpanningTree {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> usize {
        self.parent[v]
    }

    pub fn parent_edge(&self, v: usize) -> Option<usize> {
        self.parent_edge[v]
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    /// Same tree with its scale multiplier replaced by `kappa`.
    pub fn with_scale(&self, kappa: f64) -> Result<SpanningTree> {
        if !(kappa.is_finite() && kappa >= 1.0) {
            return Err(Error::param("kappa", format!("scale {kappa} must be >= 1")));
        }
        let mut t = self.clone();
        t.scale = kappa;
        Ok(t)
    }

    /// True for edges of the host graph that belong to the tree.
    pub fn edge_mask(&self, g: &WeightedGraph) -> Vec<bool> {
        let mut mask = vec![false; g.m()];
        for id in self.parent_edge.iter().flatten() {
            mask[*id] = true;
        }
        mask
    }

    /// Checks the spanning-tree invariants against the host graph.
    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        let n = g.n();
        if self.parent.len() != n || self.parent_edge.len() != n {
            return Err(Error::TreeMismatch(format!(
                "tree over {} vertices, graph has {n}",
                self.parent.len()
            )));
        }
        if self.parent[self.root] != self.root || self.parent_edge[self.root].is_some() {
            return Err(Error::TreeMismatch("root must be self-parented".into()));
        }
        let mut count = 0;
        for v in 0..n {
            if v == self.root {
                continue;
            }
            let eid = self.parent_edge[v].ok_or_else(|| {
                Error::TreeMismatch(format!("vertex {v} has no parent edge"))
            })?;
            if eid >= g.m() {
                return Err(Error::TreeMismatch(format!("edge id {eid} out of range")));
            }
            let e = g.edge(eid);
            let p = self.parent[v];
            if !((e.u == v && e.v == p) || (e.v == v && e.u == p)) {
                return Err(Error::TreeMismatch(format!(
                    "edge {eid} does not connect {v} to its parent {p}"
                )));
            }
            count += 1;
        }
        if count + 1 != n {
            return Err(Error::TreeMismatch(format!(
                "{count} parent edges for {n} vertices"
            )));
        }
        // every vertex must reach the root without revisiting
        let depths = self.depths()?;
        if depths.iter().any(|d| d.is_none()) {
            return Err(Error::TreeMismatch("tree contains a cycle".into()));
        }
        Ok(())
    }

    fn depths(&self) -> Result<Vec<Option<usize>>> {
        let n = self.parent.len();
        let mut depth: Vec<Option<usize>> = vec![None; n];
        depth[self.root] = Some(0);
        for start in 0..n {
            let mut chain = Vec::new();
            let mut v = start;
            while depth[v].is_none() {
                chain.push(v);
                v = self.parent[v];
                if chain.len() > n {
                    return Err(Error::TreeMismatch("parent chain does not terminate".into()));
                }
            }
            let mut d = depth[v].unwrap();
            for &u in chain.iter().rev() {
                d += 1;
                depth[u] = Some(d);
            }
        }
        Ok(depth)
    }
}

/// Per-edge stretch values for a (possibly scaled) spanning tree.
///
/// Tree edges carry stretch exactly 1 against their own scaled weight;
/// non-tree stretch is `w_e` times the scaled tree-path resistance.
#[derive(Debug, Clone)]
pub struct StretchTable {
    stretch: Vec<f64>,
    tree_flag: Vec<bool>,
    total_stretch: f64,
}

impl StretchTable {
    pub fn stretch(&self) -> &[f64] {
        &self.stretch
    }

    pub fn is_tree_edge(&self, e: usize) -> bool {
        self.tree_flag[e]
    }

    pub fn tree_flags(&self) -> &[bool] {
        &self.tree_flag
    }

    pub fn total_stretch(&self) -> f64 {
        self.total_stretch
    }

    /// Sum of non-tree stretch values (the `t'` of the sampling step).
    pub fn non_tree_stretch(&self) -> f64 {
        neumaier_sum(
            self.stretch
                .iter()
                .zip(&self.tree_flag)
                .filter(|(_, &t)| !t)
                .map(|(&s, _)| s),
        )
    }
}

fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Clone, Copy)]
struct HeapEntry {
    dist: f64,
    v: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // min-heap via reversal; equal distances resolve to the lowest vertex id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.v.cmp(&self.v))
    }
}

/// Scratch space for repeated cluster-restricted Dijkstra runs.
struct DijkstraScratch {
    stamp: u32,
    member: Vec<u32>,
    dist: Vec<f64>,
    via_edge: Vec<Option<usize>>,
    done: Vec<u32>,
    heap: BinaryHeap<HeapEntry>,
}

impl DijkstraScratch {
    fn new(n: usize) -> Self {
        DijkstraScratch {
            stamp: 0,
            member: vec![0; n],
            dist: vec![f64::INFINITY; n],
            via_edge: vec![None; n],
            done: vec![0; n],
            heap: BinaryHeap::new(),
        }
    }

    /// Shortest paths from `source` within `cluster` using edge lengths
    /// `1/w`. Returns vertices in settled order.
    fn run(&mut self, g: &WeightedGraph, cluster: &[usize], source: usize) -> Vec<usize> {
        self.stamp += 1;
        let stamp = self.stamp;
        for &v in cluster {
            self.member[v] = stamp;
            self.dist[v] = f64::INFINITY;
            self.via_edge[v] = None;
        }
        self.dist[source] = 0.0;
        self.heap.clear();
        self.heap.push(HeapEntry { dist: 0.0, v: source });
        let mut order = Vec::with_capacity(cluster.len());
        while let Some(HeapEntry { dist, v }) = self.heap.pop() {
            if self.done[v] == stamp || dist > self.dist[v] {
                continue;
            }
            self.done[v] = stamp;
            order.push(v);
            for &eid in g.incident(v) {
                let e = g.edge(eid);
                let u = e.other(v);
                if self.member[u] != stamp || self.done[u] == stamp {
                    continue;
                }
                let nd = dist + 1.0 / e.w;
                // strict improvement or same-distance lower-id edge keeps
                // the construction deterministic
                if nd < self.dist[u] {
                    self.dist[u] = nd;
                    self.via_edge[u] = Some(eid);
                    self.heap.push(HeapEntry { dist: nd, v: u });
                }
            }
        }
        order
    }
}

/// Shortest-path tree from `root` over the whole (connected) graph.
pub fn shortest_path_tree(g: &WeightedGraph, root: usize) -> Result<SpanningTree> {
    g.require_connected()?;
    if root >= g.n() {
        return Err(Error::VertexOutOfRange { v: root, n: g.n() });
    }
    let cluster: Vec<usize> = (0..g.n()).collect();
    let mut scratch = DijkstraScratch::new(g.n());
    scratch.run(g, &cluster, root);
    let mut parent = vec![0usize; g.n()];
    let mut parent_edge = vec![None; g.n()];
    parent[root] = root;
    for v in 0..g.n() {
        if v == root {
            continue;
        }
        let eid = scratch.via_edge[v].expect("connected graph");
        parent[v] = g.edge(eid).other(v);
        parent_edge[v] = Some(eid);
    }
    Ok(SpanningTree {
        root,
        parent,
        parent_edge,
        scale: 1.0,
    })
}

/// Approximate center: endpoint sweep on the resistance metric, then the
/// vertex minimizing the larger of the two endpoint distances.
fn approximate_center(g: &WeightedGraph, scratch: &mut DijkstraScratch) -> usize {
    if g.n() <= 2 {
        return 0;
    }
    let cluster: Vec<usize> = (0..g.n()).collect();
    let o0 = scratch.run(g, &cluster, 0);
    let a = *o0.last().unwrap();
    let oa = scratch.run(g, &cluster, a);
    let dist_a = scratch.dist.clone();
    let b = *oa.last().unwrap();
    scratch.run(g, &cluster, b);
    let mut best = (f64::INFINITY, 0usize);
    for v in 0..g.n() {
        let ecc = dist_a[v].max(scratch.dist[v]);
        if ecc < best.0 {
            best = (ecc, v);
        }
    }
    best.1
}

const LEAF_SIZE: usize = 16;

/// Ball-decomposition spanning tree rooted at `root`.
fn ball_decomposition_tree(
    g: &WeightedGraph,
    root: usize,
    scratch: &mut DijkstraScratch,
) -> SpanningTree {
    let n = g.n();
    let mut parent = vec![0usize; n];
    let mut parent_edge: Vec<Option<usize>> = vec![None; n];
    parent[root] = root;

    let mut comp_stamp = vec![0u32; n];
    let mut comp_round = 0u32;

    let mut tasks: Vec<(Vec<usize>, usize)> = vec![((0..n).collect(), root)];
    while let Some((cluster, center)) = tasks.pop() {
        if cluster.len() <= 1 {
            continue;
        }
        let order = scratch.run(g, &cluster, center);
        debug_assert_eq!(order.len(), cluster.len());
        let radius = scratch.dist[*order.last().unwrap()];
        if cluster.len() <= LEAF_SIZE || radius <= 0.0 {
            for &v in &order {
                if v == center {
                    continue;
                }
                let eid = scratch.via_edge[v].expect("cluster is connected");
                parent[v] = g.edge(eid).other(v);
                parent_edge[v] = Some(eid);
            }
            continue;
        }

        // Grow the central ball: sweep prefixes of the settled order and
        // keep the distance-closed cut with the fewest boundary edges whose
        // radius lands in [radius/4, radius/2].
        let in_ball_stamp = scratch.stamp;
        let member = scratch.member.clone();
        let dist = scratch.dist.clone();
        let mut in_prefix = vec![false; cluster.len()];
        let mut index_of = std::collections::HashMap::with_capacity(cluster.len());
        for (i, &v) in order.iter().enumerate() {
            index_of.insert(v, i);
        }
        let mut cut = 0isize;
        let mut best: Option<(isize, usize)> = None;
        let mut fallback: Option<usize> = None;
        for (i, &v) in order.iter().enumerate() {
            for &eid in g.incident(v) {
                let u = g.edge(eid).other(v);
                if member[u] != in_ball_stamp {
                    continue;
                }
                if in_prefix[index_of[&u]] {
                    cut -= 1;
                } else {
                    cut += 1;
                }
            }
            in_prefix[i] = true;
            if dist[v] > radius / 2.0 {
                break;
            }
            let closed = i + 1 < order.len() && dist[order[i + 1]] > dist[v];
            if !closed {
                continue;
            }
            fallback = Some(i);
            if dist[v] >= radius / 4.0 && (best.is_none() || cut < best.unwrap().0) {
                best = Some((cut, i));
            }
        }
        let ball_end = best.map(|(_, i)| i).or(fallback).unwrap_or(0);
        let ball: Vec<usize> = order[..=ball_end].to_vec();

        // Residual components each hang off their best bridge edge into the
        // ball; the component endpoint becomes the child cluster's center.
        comp_round += 1;
        let ball_mark = comp_round;
        for &v in &ball {
            comp_stamp[v] = ball_mark;
        }
        let mut outside: Vec<usize> = order[ball_end + 1..].to_vec();
        outside.sort_unstable();
        let mut comp_of = std::collections::HashMap::with_capacity(outside.len());
        let mut components: Vec<Vec<usize>> = Vec::new();
        for &s in &outside {
            if comp_of.contains_key(&s) {
                continue;
            }
            let cid = components.len();
            let mut stack = vec![s];
            comp_of.insert(s, cid);
            let mut comp = vec![s];
            while let Some(v) = stack.pop() {
                for &eid in g.incident(v) {
                    let u = g.edge(eid).other(v);
                    if member[u] != in_ball_stamp
                        || comp_stamp[u] == ball_mark
                        || comp_of.contains_key(&u)
                    {
                        continue;
                    }
                    comp_of.insert(u, cid);
                    comp.push(u);
                    stack.push(u);
                }
            }
            components.push(comp);
        }

        // best bridge per component: minimize (distance of the ball
        // endpoint) + edge length, ties to the lower edge id
        let mut bridges: Vec<Option<(f64, usize, usize)>> = vec![None; components.len()];
        for (cid, comp) in components.iter().enumerate() {
            for &x in comp {
                for &eid in g.incident(x) {
                    let e = g.edge(eid);
                    let y = e.other(x);
                    if member[y] != in_ball_stamp || comp_stamp[y] != ball_mark {
                        continue;
                    }
                    let score = dist[y] + 1.0 / e.w;
                    let cand = (score, eid, x);
                    if bridges[cid].map_or(true, |(s, id, _)| {
                        score < s || (score == s && eid < id)
                    }) {
                        bridges[cid] = Some(cand);
                    }
                }
            }
        }

        if ball.len() > 1 {
            tasks.push((ball, center));
        }
        for (cid, comp) in components.into_iter().enumerate() {
            let (_, eid, x) = bridges[cid].expect("cluster is connected");
            parent[x] = g.edge(eid).other(x);
            parent_edge[x] = Some(eid);
            if comp.len() > 1 {
                tasks.push((comp, x));
            }
        }
    }

    SpanningTree {
        root,
        parent,
        parent_edge,
        scale: 1.0,
    }
}

/// Which construction produced the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeMethod {
    BallDecomposition,
    ShortestPath,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeInfo {
    pub total_stretch: f64,
    pub method: TreeMethod,
}

/// Builds a spanning tree of low measured total stretch.
pub fn low_stretch_tree(g: &WeightedGraph) -> Result<SpanningTree> {
    low_stretch_tree_with_info(g).map(|(t, _)| t)
}

pub fn low_stretch_tree_with_info(g: &WeightedGraph) -> Result<(SpanningTree, TreeInfo)> {
    g.require_connected()?;
    if g.n() == 1 {
        let t = SpanningTree {
            root: 0,
            parent: vec![0],
            parent_edge: vec![None],
            scale: 1.0,
        };
        return Ok((
            t,
            TreeInfo {
                total_stretch: 0.0,
                method: TreeMethod::ShortestPath,
            },
        ));
    }
    let mut scratch = DijkstraScratch::new(g.n());
    let center = approximate_center(g, &mut scratch);
    let ball = ball_decomposition_tree(g, center, &mut scratch);
    let spt = shortest_path_tree(g, center)?;
    let ball_total = compute_stretch(g, &ball)?.total_stretch();
    let spt_total = compute_stretch(g, &spt)?.total_stretch();
    let (tree, info) = if ball_total <= spt_total {
        (
            ball,
            TreeInfo {
                total_stretch: ball_total,
                method: TreeMethod::BallDecomposition,
            },
        )
    } else {
        (
            spt,
            TreeInfo {
                total_stretch: spt_total,
                method: TreeMethod::ShortestPath,
            },
        )
    };
    log::debug!(
        "low-stretch tree: {:?} won with total stretch {:.3} (ball {:.3}, spt {:.3})",
        info.method,
        info.total_stretch,
        ball_total,
        spt_total
    );
    Ok((tree, info))
}

/// Error-tracked prefix resistance: root-to-vertex sums of `1/(scale * w)`.
#[derive(Clone, Copy, Default)]
struct Prefix {
    sum: f64,
    comp: f64,
}

impl Prefix {
    fn add(self, v: f64) -> Prefix {
        let t = self.sum + v;
        let comp = if self.sum.abs() >= v.abs() {
            self.comp + ((self.sum - t) + v)
        } else {
            self.comp + ((v - t) + self.sum)
        };
        Prefix { sum: t, comp }
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

struct LcaUnionFind {
    parent: Vec<usize>,
    rank: Vec<u32>,
    ancestor: Vec<usize>,
}

impl LcaUnionFind {
    fn new(n: usize) -> Self {
        LcaUnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
            ancestor: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize, anchor: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let root = if self.rank[ra] < self.rank[rb] {
            self.parent[ra] = rb;
            rb
        } else if self.rank[ra] > self.rank[rb] {
            self.parent[rb] = ra;
            ra
        } else {
            self.parent[rb] = ra;
            self.rank[ra] += 1;
            ra
        };
        self.ancestor[root] = anchor;
    }
}

/// Exact per-edge stretch via Tarjan's offline LCA (union-find, one DFS).
///
/// For a non-tree edge (u, v) the stretch is
/// `w_e * (res[u] + res[v] - 2 res[lca(u, v)])` with `res` the compensated
/// root-prefix sums of `1/(scale * w)` over tree edges; tree edges have
/// stretch exactly 1 against their own scaled weight.
pub fn compute_stretch(g: &WeightedGraph, t: &SpanningTree) -> Result<StretchTable> {
    t.validate(g)?;
    let n = g.n();

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        if v != t.root() {
            children[t.parent(v)].push(v);
        }
    }

    let mut res = vec![Prefix::default(); n];
    // preorder walk computing prefix resistances
    let mut stack = vec![t.root()];
    while let Some(v) = stack.pop() {
        for &c in &children[v] {
            let e = g.edge(t.parent_edge(c).unwrap());
            res[c] = res[v].add(1.0 / (t.scale() * e.w));
            stack.push(c);
        }
    }

    let tree_flag = t.edge_mask(g);
    let mut queries: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (other endpoint, edge id)
    for (eid, e) in g.edges().iter().enumerate() {
        if !tree_flag[eid] {
            queries[e.u].push((e.v, eid));
            queries[e.v].push((e.u, eid));
        }
    }

    let mut stretch = vec![1.0; g.m()];
    let mut uf = LcaUnionFind::new(n);
    let mut visited = vec![false; n];
    // iterative Tarjan: frames of (vertex, next child index)
    let mut frames: Vec<(usize, usize)> = vec![(t.root(), 0)];
    while let Some(&mut (v, ref mut next)) = frames.last_mut() {
        if *next < children[v].len() {
            let c = children[v][*next];
            *next += 1;
            frames.push((c, 0));
            continue;
        }
        frames.pop();
        visited[v] = true;
        for &(other, eid) in &queries[v] {
            if !visited[other] {
                continue;
            }
            let root = uf.find(other);
            let lca = uf.ancestor[root];
            let path_res = (res[v].value() - res[lca].value())
                + (res[other].value() - res[lca].value());
            stretch[eid] = g.edge(eid).w * path_res;
        }
        if let Some(&(p, _)) = frames.last() {
            uf.union(p, v, p);
        }
    }

    let total_stretch = neumaier_sum(stretch.iter().copied());
    Ok(StretchTable {
        stretch,
        tree_flag,
        total_stretch,
    })
}

/// Sampling weights over a tree scaled by `kappa`: 1 for tree edges,
/// `stretch / kappa` for the rest. `table` must be the scale-1 stretch of
/// the same tree.
pub fn scaled_probabilities(table: &StretchTable, kappa: f64) -> Result<Vec<f64>> {
    if !(kappa.is_finite() && kappa >= 1.0) {
        return Err(Error::param("kappa", format!("{kappa} must be >= 1")));
    }
    Ok(table
        .stretch()
        .iter()
        .zip(table.tree_flags())
        .map(|(&s, &tree)| if tree { 1.0 } else { s / kappa })
        .collect())
}
