//! ε-neighborhood and K-nearest-neighbor graphs, and all-pairs shortest-path
//! metrics on them.
//!
//! `d_G` weights each edge by its Euclidean length; `d_S` replaces the weight
//! by the manifold's Riemannian distance between the endpoints. Pairs in
//! different connected components get `+inf`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::ManifoldOracle;
use crate::types::{DissimilarityMatrix, PointCloud};

/// Above this many points (and for ambient dimension <= 3) ε-graphs are
/// built with a uniform grid instead of the O(n²) scan.
pub const BRUTE_FORCE_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum NeighborhoodRule {
    /// Edge iff `‖x_i − x_j‖ <= ε`.
    Epsilon(f64),
    /// Edge iff either endpoint is among the other's `K` nearest neighbors.
    Knn(usize),
}

/// Undirected graph on the points of a cloud. Edges are stored once with
/// `i < j`, sorted by `(i, j)`, weighted by Euclidean length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborhoodGraph {
    pub n: usize,
    pub rule: NeighborhoodRule,
    pub edges: Vec<(usize, usize, f64)>,
}

impl NeighborhoodGraph {
    /// Checks the stored invariants (useful after deserializing).
    pub fn validate(&self) -> Result<()> {
        let mut prev: Option<(usize, usize)> = None;
        for &(i, j, w) in &self.edges {
            if i >= j || j >= self.n {
                return Err(Error::InvalidParameter(format!("edge ({i},{j}) is not a valid i<j<n pair")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!("edge ({i},{j}) has weight {w}")));
            }
            if prev.is_some_and(|p| p >= (i, j)) {
                return Err(Error::InvalidParameter("edges must be sorted by (i, j) without repeats".into()));
            }
            prev = Some((i, j));
        }
        Ok(())
    }

    pub fn degree(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j, _) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }
}

pub fn build_graph(cloud: &PointCloud, rule: NeighborhoodRule) -> Result<NeighborhoodGraph> {
    let n = cloud.len();
    let edges = match rule {
        NeighborhoodRule::Epsilon(eps) => {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter(format!("ε must be positive, got {eps}")));
            }
            if n > BRUTE_FORCE_LIMIT && cloud.ambient_dim() <= 3 {
                epsilon_edges_grid(cloud, eps)
            } else {
                epsilon_edges_brute(cloud, eps)
            }
        }
        NeighborhoodRule::Knn(k) => {
            if k == 0 {
                return Err(Error::InvalidParameter("K must be >= 1".into()));
            }
            if n == 1 {
                Vec::new()
            } else if k >= n {
                return Err(Error::InvalidParameter(format!("K = {k} must be below n = {n}")));
            } else {
                knn_edges(cloud, k)
            }
        }
    };
    Ok(NeighborhoodGraph { n, rule, edges })
}

fn epsilon_edges_brute(cloud: &PointCloud, eps: f64) -> Vec<(usize, usize, f64)> {
    let n = cloud.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .filter_map(|j| {
                    let d = cloud.euclidean(i, j);
                    (d <= eps).then_some((i, j, d))
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect()
}

fn epsilon_edges_grid(cloud: &PointCloud, eps: f64) -> Vec<(usize, usize, f64)> {
    let n = cloud.len();
    let q = cloud.ambient_dim();
    let cell_of = |i: usize| -> Vec<i64> { cloud.point(i).iter().map(|&x| (x / eps).floor() as i64).collect() };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for i in 0..n {
        buckets.entry(cell_of(i)).or_default().push(i);
    }
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(q as u32))
        .map(|mut code| {
            (0..q)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let home = cell_of(i);
            let mut row = Vec::new();
            for off in &offsets {
                let key: Vec<i64> = home.iter().zip(off).map(|(h, o)| h + o).collect();
                if let Some(bucket) = buckets.get(&key) {
                    for &j in bucket {
                        if j > i {
                            let d = cloud.euclidean(i, j);
                            if d <= eps {
                                row.push((i, j, d));
                            }
                        }
                    }
                }
            }
            row.sort_by_key(|e| e.1);
            row
        })
        .flatten()
        .collect()
}

fn knn_edges(cloud: &PointCloud, k: usize) -> Vec<(usize, usize, f64)> {
    let n = cloud.len();
    let lists: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (cloud.euclidean(i, j), j)).collect();
            // ties go to the smaller index
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> =
        lists.iter().enumerate().flat_map(|(i, l)| l.iter().map(move |&j| (i.min(j), i.max(j)))).collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs.into_iter().map(|(i, j)| (i, j, cloud.euclidean(i, j))).collect()
}

/// How edge lengths are measured when computing shortest paths.
#[derive(Debug, Clone, Copy)]
pub enum EdgeWeights<'a> {
    /// `‖x_i − x_j‖`, giving `d_G`.
    Euclidean,
    /// `d_M(x_i, x_j)` from the oracle, giving `d_S`.
    Oracle(&'a ManifoldOracle),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Euclidean,
    Oracle,
}

/// All-pairs shortest-path distances on a neighborhood graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMetric {
    pub matrix: Array2<f64>,
    pub kind: MetricKind,
    /// Component id per vertex; ids are numbered by smallest member vertex.
    pub component_map: Vec<usize>,
}

impl GraphMetric {
    /// Wraps a stored shortest-path matrix; pairs with finite distance share a
    /// component.
    pub fn from_matrix(matrix: Array2<f64>, kind: MetricKind) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::shape(format!("{n}x{n} matrix"), format!("{:?}", matrix.dim())));
        }
        for i in 0..n {
            for j in 0..n {
                let v = matrix[[i, j]];
                if v.is_nan() || v < 0.0 || v != matrix[[j, i]] || (i == j && v != 0.0) {
                    return Err(Error::InvalidDissimilarity(format!("entry ({i},{j}) = {v}")));
                }
            }
        }
        let edges: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| matrix[[i, j]].is_finite())
            .map(|(i, j)| (i, j, matrix[[i, j]]))
            .collect();
        Ok(GraphMetric { component_map: components(n, &edges), matrix, kind })
    }

    pub fn len(&self) -> usize {
        self.component_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.component_map.is_empty()
    }

    pub fn n_components(&self) -> usize {
        self.component_map.iter().max().map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.n_components() <= 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[[i, j]]
    }

    /// Fails when any pair is disconnected.
    pub fn to_dissimilarity(&self) -> Result<DissimilarityMatrix> {
        if !self.is_connected() {
            return Err(Error::InvalidDissimilarity(format!(
                "graph has {} components; shortest-path distances contain +inf",
                self.n_components()
            )));
        }
        DissimilarityMatrix::new(self.matrix.clone())
    }

    /// Vertices of the largest component, ascending; ties go to the component
    /// holding the smallest vertex.
    pub fn largest_component(&self) -> Vec<usize> {
        let sizes = component_sizes(&self.component_map);
        let best = (0..sizes.len()).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap_or(0);
        (0..self.len()).filter(|&v| self.component_map[v] == best).collect()
    }

    pub fn restrict(&self, vertices: &[usize]) -> GraphMetric {
        let matrix = self.matrix.select(ndarray::Axis(0), vertices).select(ndarray::Axis(1), vertices);
        let map: Vec<usize> = vertices.iter().map(|&v| self.component_map[v]).collect();
        GraphMetric { matrix, kind: self.kind, component_map: renumber(&map) }
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then on node for a fixed pop order
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compressed adjacency: neighbors of `v` are `targets[offsets[v]..offsets[v+1]]`.
struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<(usize, f64)>,
}

impl Adjacency {
    fn new(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut deg = vec![0usize; n + 1];
        for &(i, j, _) in edges {
            deg[i + 1] += 1;
            deg[j + 1] += 1;
        }
        for v in 0..n {
            deg[v + 1] += deg[v];
        }
        let offsets = deg.clone();
        let mut fill = deg;
        let mut targets = vec![(0, 0.0); 2 * edges.len()];
        for &(i, j, w) in edges {
            targets[fill[i]] = (j, w);
            fill[i] += 1;
            targets[fill[j]] = (i, w);
            fill[j] += 1;
        }
        Adjacency { offsets, targets }
    }

    fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// Single-source Dijkstra with a binary heap.
fn dijkstra(adj: &Adjacency, n: usize, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry { cost: 0.0, node: source });
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        for &(next, w) in adj.neighbors(node) {
            let cand = cost + w;
            if cand < dist[next] {
                dist[next] = cand;
                heap.push(HeapEntry { cost: cand, node: next });
            }
        }
    }
    dist
}

/// Exact all-pairs shortest paths by repeated Dijkstra, one source per task.
///
/// The two directions of a pair can differ in the last bit because sums are
/// accumulated along different paths; the smaller value is stored on both
/// sides so the result is exactly symmetric.
pub fn shortest_paths(graph: &NeighborhoodGraph, cloud: &PointCloud, weights: EdgeWeights<'_>) -> Result<GraphMetric> {
    graph.validate()?;
    if cloud.len() != graph.n {
        return Err(Error::shape(format!("{} points", graph.n), cloud.len()));
    }
    let n = graph.n;
    let (kind, edges) = match weights {
        EdgeWeights::Euclidean => (MetricKind::Euclidean, graph.edges.clone()),
        EdgeWeights::Oracle(oracle) => {
            let pts: Vec<Vec<f64>> = (0..n).map(|i| cloud.point(i).to_vec()).collect();
            let edges = graph
                .edges
                .par_iter()
                .map(|&(i, j, _)| {
                    let d = oracle.distance(&pts[i], &pts[j]).map_err(|e| match e {
                        Error::OutsideDomain { index } => {
                            Error::OutsideDomain { index: if index == 0 { i } else { j } }
                        }
                        other => other,
                    })?;
                    Ok((i, j, d))
                })
                .collect::<Result<Vec<_>>>()?;
            (MetricKind::Oracle, edges)
        }
    };
    let adj = Adjacency::new(n, &edges);
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(&adj, n, s)).collect();
    let mut matrix = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = rows[i][j].min(rows[j][i]);
            matrix[[i, j]] = d;
            matrix[[j, i]] = d;
        }
    }
    Ok(GraphMetric { matrix, kind, component_map: components(n, &edges) })
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Union-find labelling, numbered in order of each component's smallest vertex.
fn components(n: usize, edges: &[(usize, usize, f64)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    for &(i, j, _) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let roots: Vec<usize> = (0..n).map(|v| find(&mut parent, v)).collect();
    renumber(&roots)
}

fn renumber(labels: &[usize]) -> Vec<usize> {
    let mut ids: HashMap<usize, usize> = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect()
}

fn component_sizes(map: &[usize]) -> Vec<usize> {
    let mut sizes = vec![0; map.iter().max().map_or(0, |m| m + 1)];
    for &c in map {
        sizes[c] += 1;
    }
    sizes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub n_components: usize,
    pub component_sizes: Vec<usize>,
    pub component_map: Vec<usize>,
    /// Smallest ε whose ε-graph is connected: the longest edge of a minimum
    /// spanning tree of the complete Euclidean graph.
    pub min_connecting_epsilon: f64,
}

pub fn connectivity_report(graph: &NeighborhoodGraph, cloud: &PointCloud) -> Result<ConnectivityReport> {
    graph.validate()?;
    if cloud.len() != graph.n {
        return Err(Error::shape(format!("{} points", graph.n), cloud.len()));
    }
    let map = components(graph.n, &graph.edges);
    Ok(ConnectivityReport {
        n_components: component_sizes(&map).len(),
        component_sizes: component_sizes(&map),
        component_map: map,
        min_connecting_epsilon: mst_bottleneck(cloud),
    })
}

/// Longest edge of the Euclidean MST (dense Prim, O(n²)).
pub fn mst_bottleneck(cloud: &PointCloud) -> f64 {
    let n = cloud.len();
    if n <= 1 {
        return 0.0;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut bottleneck: f64 = 0.0;
    for _ in 0..n {
        let u = (0..n).filter(|&v| !in_tree[v]).min_by(|&a, &b| best[a].total_cmp(&best[b])).expect("vertex left");
        in_tree[u] = true;
        bottleneck = bottleneck.max(best[u]);
        for v in 0..n {
            if !in_tree[v] {
                let d = cloud.euclidean(u, v);
                if d < best[v] {
                    best[v] = d;
                }
            }
        }
    }
    bottleneck
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{SphereCap, Spiral};
    use crate::types::Seed;

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::from_rows(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    fn pairs(g: &NeighborhoodGraph) -> Vec<(usize, usize)> {
        g.edges.iter().map(|&(i, j, _)| (i, j)).collect()
    }

    #[test]
    fn epsilon_on_a_line() {
        let g = build_graph(&line(&[0.0, 1.0, 2.0]), NeighborhoodRule::Epsilon(1.5)).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1), (1, 2)]);
        // weak inequality at the threshold
        let g = build_graph(&line(&[0.0, 1.0, 2.0]), NeighborhoodRule::Epsilon(1.0)).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn knn_on_a_line() {
        let g = build_graph(&line(&[0.0, 1.0, 2.0]), NeighborhoodRule::Knn(1)).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn knn_ties_prefer_lower_index() {
        // vertex 1 is equidistant from 0 and 2
        let g = build_graph(&line(&[0.0, 1.0, 2.0, 10.0]), NeighborhoodRule::Knn(1)).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn single_point_graph() {
        let one = line(&[3.0]);
        assert!(build_graph(&one, NeighborhoodRule::Epsilon(1.0)).unwrap().edges.is_empty());
        assert!(build_graph(&one, NeighborhoodRule::Knn(1)).unwrap().edges.is_empty());
        let r = connectivity_report(&build_graph(&one, NeighborhoodRule::Epsilon(1.0)).unwrap(), &one).unwrap();
        assert_eq!((r.n_components, r.min_connecting_epsilon), (1, 0.0));
    }

    #[test]
    fn invalid_rules() {
        let c = line(&[0.0, 1.0]);
        assert!(build_graph(&c, NeighborhoodRule::Epsilon(0.0)).is_err());
        assert!(build_graph(&c, NeighborhoodRule::Knn(0)).is_err());
        assert!(build_graph(&c, NeighborhoodRule::Knn(2)).is_err());
    }

    #[test]
    fn path_distances() {
        let c = line(&[0.0, 1.0, 2.0]);
        let g = build_graph(&c, NeighborhoodRule::Epsilon(1.5)).unwrap();
        let m = shortest_paths(&g, &c, EdgeWeights::Euclidean).unwrap();
        assert_eq!(m.get(0, 2), 2.0);
        assert_eq!(m.get(0, 1), 1.0);
        let chain = line(&(0..8).map(|k| 0.25 * k as f64).collect::<Vec<_>>());
        let g = build_graph(&chain, NeighborhoodRule::Epsilon(0.3)).unwrap();
        let m = shortest_paths(&g, &chain, EdgeWeights::Euclidean).unwrap();
        assert_eq!(m.get(0, 7), 7.0 * 0.25);
    }

    #[test]
    fn two_clusters() {
        let c = line(&[0.0, 0.1, 0.2, 1.2, 1.3]);
        let g = build_graph(&c, NeighborhoodRule::Epsilon(0.5)).unwrap();
        let r = connectivity_report(&g, &c).unwrap();
        assert_eq!(r.n_components, 2);
        assert_eq!(r.component_sizes, vec![3, 2]);
        assert!((r.min_connecting_epsilon - 1.0).abs() < 1e-12);
        let m = shortest_paths(&g, &c, EdgeWeights::Euclidean).unwrap();
        assert!(m.get(0, 4).is_infinite());
        assert!(m.to_dissimilarity().is_err());
        assert_eq!(m.largest_component(), vec![0, 1, 2]);
        let sub = m.restrict(&m.largest_component());
        assert!(sub.is_connected());
        assert!(sub.to_dissimilarity().is_ok());

        let back = GraphMetric::from_matrix(m.matrix.clone(), MetricKind::Euclidean).unwrap();
        assert_eq!(back, m);
        let mut bad = m.matrix.clone();
        bad[[0, 1]] = 5.0;
        assert!(GraphMetric::from_matrix(bad, MetricKind::Euclidean).is_err());
    }

    #[test]
    fn grid_accelerator_matches_brute_force() {
        let cloud = SphereCap::hemisphere().sample(3000, Seed(5)).unwrap();
        let brute = epsilon_edges_brute(&cloud, 0.08);
        let grid = epsilon_edges_grid(&cloud, 0.08);
        assert_eq!(brute, grid);
    }

    #[test]
    fn graph_metric_properties() {
        let spiral = ManifoldOracle::Spiral(Spiral::new(0.1, 2.0, 12.0).unwrap());
        let cloud = spiral.sample(250, Seed(8)).unwrap();
        let small = build_graph(&cloud, NeighborhoodRule::Epsilon(0.25)).unwrap();
        let large = build_graph(&cloud, NeighborhoodRule::Epsilon(0.4)).unwrap();
        let dg = shortest_paths(&small, &cloud, EdgeWeights::Euclidean).unwrap();
        let dg_large = shortest_paths(&large, &cloud, EdgeWeights::Euclidean).unwrap();
        let ds = shortest_paths(&small, &cloud, EdgeWeights::Oracle(&spiral)).unwrap();
        assert!(dg.is_connected());
        let n = cloud.len();
        for i in 0..n {
            for j in 0..n {
                let d = dg.get(i, j);
                assert_eq!(d, dg.get(j, i));
                assert!(d >= cloud.euclidean(i, j) * (1.0 - 1e-12));
                assert!(dg_large.get(i, j) <= d * (1.0 + 1e-12));
                assert!(d <= ds.get(i, j) * (1.0 + 1e-12) + 1e-15);
                for k in 0..n {
                    assert!(dg.get(i, k) <= d + dg.get(j, k) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn deterministic_under_parallelism() {
        let cloud = SphereCap::new(1.0).unwrap().sample(400, Seed(2)).unwrap();
        let g = build_graph(&cloud, NeighborhoodRule::Knn(6)).unwrap();
        let a = shortest_paths(&g, &cloud, EdgeWeights::Euclidean).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| shortest_paths(&g, &cloud, EdgeWeights::Euclidean).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn graph_json_shape() {
        let g = build_graph(&line(&[0.0, 1.0]), NeighborhoodRule::Epsilon(1.5)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&g).unwrap();
        assert_eq!(v, serde_json::json!({"n": 2, "rule": {"type": "epsilon", "value": 1.5}, "edges": [[0, 1, 1.0]]}));
        let back: NeighborhoodGraph = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
    }
}
