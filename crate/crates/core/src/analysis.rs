//! Similarity analysis over instance property vectors: Isomap down to two
//! dimensions, then K-means on the embedded coordinates.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use petgraph::graph::{NodeIndex, UnGraph};
use petgraph::unionfind::UnionFind;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::class_labels;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::symbols::KnowledgeBase;

pub const DEFAULT_NEIGHBORS: usize = 5;
pub const DEFAULT_CLUSTERS: usize = 7;

// ---------------------------------------------------------------------------
// K-means

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Independent k-means++ restarts; the lowest final inertia wins. Unused
    /// for inputs small enough to enumerate.
    pub n_init: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iter: 300,
            rel_tol: 1e-9,
            n_init: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
}

impl Clustering {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

pub fn kmeans(points: &[Vec<f64>], config: &KMeansConfig) -> Result<Clustering> {
    let n = points.len();
    let k = config.k;
    if k == 0 {
        return Err(Error::InsufficientData("k must be at least 1".into()));
    }
    if n < k {
        return Err(Error::InsufficientData(format!(
            "{n} points cannot form {k} clusters"
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Sizing("points have mixed dimensionality".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Sizing("points contain non-finite coordinates".into()));
    }

    if (k as u64).checked_pow(n as u32).is_some_and(|c| c <= EXHAUSTIVE_ASSIGNMENTS) {
        return Ok(lloyd(points, best_partition_means(points, k), config.max_iter, config.rel_tol));
    }

    let mut rng = seeded(config.seed);
    let mut best: Option<Clustering> = None;
    for _ in 0..config.n_init.max(1) {
        let init = kmeans_plus_plus(points, k, &mut rng);
        let run = lloyd(points, init, config.max_iter, config.rel_tol);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Inputs with at most this many point-to-cluster assignments are solved by
/// enumeration, so tiny clusterings are globally optimal rather than
/// dependent on where the seeding lands.
const EXHAUSTIVE_ASSIGNMENTS: u64 = 4096;

/// Means of the lowest-inertia partition into exactly `k` non-empty groups.
/// Groups are numbered by first member, so each partition is visited once;
/// near-ties keep the earlier partition.
fn best_partition_means(points: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    fn visit(
        points: &[Vec<f64>],
        k: usize,
        labels: &mut Vec<usize>,
        used: usize,
        best: &mut (f64, Vec<usize>),
    ) {
        let n = points.len();
        if labels.len() == n {
            if used == k {
                let mut centroids = vec![vec![0.0; points[0].len()]; k];
                update_means(points, &mut centroids, labels);
                let inertia = inertia_of(points, &centroids, labels);
                if best.1.is_empty() || inertia < best.0 - 1e-12 * best.0 {
                    *best = (inertia, labels.clone());
                }
            }
            return;
        }
        // leave enough points to open the remaining groups
        if k - used > n - labels.len() {
            return;
        }
        for label in 0..(used + 1).min(k) {
            labels.push(label);
            visit(points, k, labels, used.max(label + 1), best);
            labels.pop();
        }
    }

    let mut best = (f64::INFINITY, Vec::new());
    visit(points, k, &mut Vec::with_capacity(points.len()), 0, &mut best);
    let mut centroids = vec![vec![0.0; points[0].len()]; k];
    update_means(points, &mut centroids, &best.1);
    centroids
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut crate::rng::Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                chosen = Some(i);
                if acc > target {
                    break;
                }
            }
            chosen.expect("positive total weight")
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize, rel_tol: f64) -> Clustering {
    let n = points.len();
    let k = centroids.len();
    let mut assignments = vec![usize::MAX; n];
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let changed = assign_nearest(points, &centroids, &mut assignments);
        repair_empty(points, &mut centroids, &mut assignments, k);
        let inertia = inertia_of(points, &centroids, &assignments);
        let prev = history.last().copied();
        if let Some(prev) = prev {
            debug_assert!(
                inertia <= prev * (1.0 + 1e-12) + 1e-300,
                "inertia increased: {prev} -> {inertia}"
            );
        }
        history.push(inertia);
        update_means(points, &mut centroids, &assignments);

        let converged = match prev {
            _ if !changed => true,
            Some(prev) => prev <= 0.0 || (prev - inertia) / prev < rel_tol,
            None => inertia == 0.0,
        };
        if converged {
            break;
        }
    }

    assign_nearest(points, &centroids, &mut assignments);
    repair_empty(points, &mut centroids, &mut assignments, k);
    let inertia = inertia_of(points, &centroids, &assignments);
    history.push(inertia);
    Clustering {
        assignments,
        centroids,
        inertia,
        iterations,
        inertia_history: history,
    }
}

/// Nearest-centroid assignment, ties to the lowest centroid index. Returns
/// whether any assignment changed.
fn assign_nearest(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &mut [usize]) -> bool {
    let mut changed = false;
    for (p, a) in points.iter().zip(assignments.iter_mut()) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in centroids.iter().enumerate() {
            let d = sq_dist(p, c);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        if *a != best {
            *a = best;
            changed = true;
        }
    }
    changed
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken from a cluster that keeps at least one member.
fn repair_empty(points: &[Vec<f64>], centroids: &mut [Vec<f64>], assignments: &mut [usize], k: usize) {
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut donor: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let a = assignments[i];
            if sizes[a] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[a]);
            if donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        let Some((i, _)) = donor else { break };
        sizes[assignments[i]] -= 1;
        assignments[i] = empty;
        sizes[empty] = 1;
        centroids[empty] = points[i].clone();
    }
}

fn update_means(points: &[Vec<f64>], centroids: &mut [Vec<f64>], assignments: &[usize]) {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; centroids.len()];
    let mut counts = vec![0usize; centroids.len()];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    for ((c, s), &count) in centroids.iter_mut().zip(sums).zip(&counts) {
        if count > 0 {
            *c = s.into_iter().map(|v| v / count as f64).collect();
        }
    }
}

fn inertia_of(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

// ---------------------------------------------------------------------------
// Isomap

/// Instance-by-property matrix, rows ordered by instance id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub instance_ids: Vec<String>,
    pub class_names: Vec<String>,
    pub columns: Vec<String>,
    /// Whether each column was min-max standardized.
    pub standardized: Vec<bool>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        Self {
            instance_ids: (0..n).map(|i| format!("{i}")).collect(),
            class_names: vec![String::new(); n],
            columns: (0..dim).map(|j| format!("c{j}")).collect(),
            standardized: vec![false; dim],
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Min-max scales every column into [0, 1]; constant columns become 0.5.
    pub fn standardize(&mut self) {
        for j in 0..self.columns.len() {
            let (lo, hi) = self
                .rows
                .iter()
                .map(|r| r[j])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            for r in &mut self.rows {
                r[j] = if hi > lo { (r[j] - lo) / (hi - lo) } else { 0.5 };
            }
            self.standardized[j] = true;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub coords: Vec<[f64; 2]>,
    /// Leading eigenvalues of the double-centered squared geodesic matrix,
    /// clamped at zero; `eigenvalues[0] >= eigenvalues[1]`.
    pub eigenvalues: [f64; 2],
    pub neighbors: usize,
}

/// Symmetrized k-nearest-neighbor graph as adjacency lists `(j, distance)`.
/// Neighbor ties go to the lower index.
pub fn knn_graph(points: &[Vec<f64>], k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = points.len();
    let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for i in 0..n {
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(&points[i], &points[j]).sqrt(), j))
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(d, j) in cand.iter().take(k) {
            adj[i].insert(j, d);
            adj[j].insert(i, d);
        }
    }
    adj.into_iter().map(|m| m.into_iter().collect()).collect()
}

/// All-pairs shortest-path distances over the k-NN graph.
///
/// A disconnected graph is an error unless `bridge_components` is set, in
/// which case the closest pair of components (by Euclidean distance) is
/// joined repeatedly until one component remains.
pub fn geodesic_distances(
    points: &[Vec<f64>],
    k: usize,
    bridge_components: bool,
) -> Result<Vec<Vec<f64>>> {
    let n = points.len();
    let mut adj = knn_graph(points, k);
    loop {
        let labels = component_labels(&adj);
        let components = labels.iter().collect::<std::collections::BTreeSet<_>>().len();
        if components <= 1 {
            break;
        }
        if !bridge_components {
            return Err(Error::DisconnectedManifold { components });
        }
        let mut shortest: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in i + 1..n {
                if labels[i] == labels[j] {
                    continue;
                }
                let d = sq_dist(&points[i], &points[j]).sqrt();
                if shortest.is_none_or(|(best, _, _)| d < best) {
                    shortest = Some((d, i, j));
                }
            }
        }
        let (d, i, j) = shortest.expect("two components imply a cross pair");
        adj[i].push((j, d));
        adj[j].push((i, d));
    }

    let mut graph = UnGraph::<(), f64>::with_capacity(n, n * k);
    let nodes: Vec<NodeIndex> = (0..n).map(|_| graph.add_node(())).collect();
    for (i, edges) in adj.iter().enumerate() {
        for &(j, d) in edges {
            if i < j {
                graph.add_edge(nodes[i], nodes[j], d);
            }
        }
    }
    let rows = (0..n)
        .into_par_iter()
        .map(|s| {
            let reached = petgraph::algo::dijkstra(&graph, nodes[s], None, |e| *e.weight());
            let mut row = vec![f64::INFINITY; n];
            for (node, d) in reached {
                row[node.index()] = d;
            }
            row[s] = 0.0;
            row
        })
        .collect::<Vec<_>>();
    // symmetrize away any summation-order asymmetry
    let mut geo = rows;
    for i in 0..n {
        for j in i + 1..n {
            let d = geo[i][j].min(geo[j][i]);
            geo[i][j] = d;
            geo[j][i] = d;
        }
    }
    Ok(geo)
}

fn component_labels(adj: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let mut uf = UnionFind::<usize>::new(adj.len());
    for (i, edges) in adj.iter().enumerate() {
        for &(j, _) in edges {
            uf.union(i, j);
        }
    }
    uf.into_labeling()
}

/// Classical multidimensional scaling of a distance matrix into `dim`
/// coordinates. Returns the coordinates (one row per point) and the `dim`
/// leading eigenvalues, negatives clamped to zero. Each axis is sign-fixed
/// so its first clearly nonzero coordinate is positive.
pub fn classical_mds(dist: &[Vec<f64>], dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = dist.len();
    if n == 0 {
        return (Vec::new(), vec![0.0; dim]);
    }
    let d2 = DMatrix::from_fn(n, n, |i, j| dist[i][j] * dist[i][j]);
    let row_means: Vec<f64> = (0..n).map(|i| d2.row(i).mean()).collect();
    let col_means: Vec<f64> = (0..n).map(|j| d2.column(j).mean()).collect();
    let grand = d2.mean();
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (d2[(i, j)] - row_means[i] - col_means[j] + grand));
    let b = (&b + b.transpose()) * 0.5;

    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));

    let mut coords = vec![vec![0.0; dim]; n];
    let mut values = vec![0.0; dim];
    for (axis, &idx) in order.iter().take(dim).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        values[axis] = lambda;
        let scale = lambda.sqrt();
        let v = eig.eigenvectors.column(idx);
        let peak = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let flip = v
            .iter()
            .find(|x| x.abs() > 1e-9 * peak.max(f64::MIN_POSITIVE))
            .is_some_and(|x| *x < 0.0);
        let sign = if flip { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i][axis] = sign * v[i] * scale;
        }
    }
    (coords, values)
}

pub fn isomap(matrix: &FeatureMatrix, neighbors: usize, bridge_components: bool) -> Result<Embedding2D> {
    let n = matrix.len();
    if neighbors == 0 {
        return Err(Error::Sizing("neighbors must be at least 1".into()));
    }
    if n < neighbors + 1 {
        return Err(Error::Sizing(format!(
            "isomap with {neighbors} neighbors needs at least {} rows, got {n}",
            neighbors + 1
        )));
    }
    if matrix.rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Sizing("feature matrix contains non-finite entries".into()));
    }
    let geo = geodesic_distances(&matrix.rows, neighbors, bridge_components)?;
    let (coords, values) = classical_mds(&geo, 2);
    Ok(Embedding2D {
        coords: coords.into_iter().map(|c| [c[0], c[1]]).collect(),
        eigenvalues: [values[0], values[1]],
        neighbors,
    })
}

// ---------------------------------------------------------------------------
// Analysis driver

pub const PHYSICAL_COLUMNS: [&str; 8] = [
    "length",
    "width",
    "height",
    "flatness",
    "hollowness",
    "rigidity",
    "roughness",
    "weight",
];
pub const FUNCTIONAL_COLUMNS: [&str; 4] = ["support", "containment", "movability", "blockage"];

/// Which retained scalars make up the feature vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertySet {
    Physical,
    Functional,
    Custom(Vec<String>),
}

impl PropertySet {
    pub fn parse(s: &str) -> Self {
        match s.trim() {
            "physical" => PropertySet::Physical,
            "functional" => PropertySet::Functional,
            other => PropertySet::Custom(
                other
                    .split(',')
                    .map(|p| p.trim().to_owned())
                    .filter(|p| !p.is_empty())
                    .collect(),
            ),
        }
    }

    pub fn columns(&self) -> Vec<String> {
        match self {
            PropertySet::Physical => PHYSICAL_COLUMNS.iter().map(|s| s.to_string()).collect(),
            PropertySet::Functional => FUNCTIONAL_COLUMNS.iter().map(|s| s.to_string()).collect(),
            PropertySet::Custom(cols) => cols.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub instance_id: String,
    pub class_name: String,
    pub class_label: u32,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMembers {
    pub cluster: usize,
    pub centroid: Vec<f64>,
    pub members: Vec<ClusterAssignment>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub assignments: Vec<ClusterAssignment>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub clusters: Vec<ClusterMembers>,
}

impl ClusterReport {
    pub fn new(matrix: &FeatureMatrix, labels: &[u32], clustering: &Clustering) -> Self {
        let assignments: Vec<ClusterAssignment> = (0..matrix.len())
            .map(|i| ClusterAssignment {
                instance_id: matrix.instance_ids[i].clone(),
                class_name: matrix.class_names[i].clone(),
                class_label: labels[i],
                cluster: clustering.assignments[i],
            })
            .collect();
        let clusters = clustering
            .centroids
            .iter()
            .enumerate()
            .map(|(c, centroid)| ClusterMembers {
                cluster: c,
                centroid: centroid.clone(),
                members: assignments.iter().filter(|a| a.cluster == c).cloned().collect(),
            })
            .collect();
        ClusterReport {
            assignments,
            centroids: clustering.centroids.clone(),
            inertia: clustering.inertia,
            clusters,
        }
    }

    pub fn non_empty_clusters(&self) -> usize {
        self.clusters.iter().filter(|c| !c.members.is_empty()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub properties: PropertySet,
    pub k_clusters: usize,
    pub neighbors: usize,
    pub seed: u64,
    pub bridge_components: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            properties: PropertySet::Physical,
            k_clusters: DEFAULT_CLUSTERS,
            neighbors: DEFAULT_NEIGHBORS,
            seed: crate::DEFAULT_SEED,
            bridge_components: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub matrix: FeatureMatrix,
    pub embedding: Embedding2D,
    pub report: ClusterReport,
}

/// Builds the standardized feature matrix for the chosen properties.
pub fn feature_matrix(kb: &KnowledgeBase, properties: &PropertySet) -> Result<FeatureMatrix> {
    let columns = properties.columns();
    if columns.is_empty() {
        return Err(Error::Sizing("no properties selected".into()));
    }
    let mut instances: Vec<_> = kb.instances.iter().collect();
    instances.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    let mut rows = Vec::with_capacity(instances.len());
    for inst in &instances {
        let row = columns
            .iter()
            .map(|c| {
                inst.values.get(c).copied().ok_or_else(|| {
                    Error::NotFound {
                        name: c.clone(),
                        known: inst.values.keys().cloned().collect(),
                    }
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let mut matrix = FeatureMatrix {
        instance_ids: instances.iter().map(|i| i.instance_id.clone()).collect(),
        class_names: instances.iter().map(|i| i.class_name.clone()).collect(),
        standardized: vec![false; columns.len()],
        columns,
        rows,
    };
    matrix.standardize();
    Ok(matrix)
}

/// Reduce to two dimensions first, then cluster the embedded points.
pub fn analyze(kb: &KnowledgeBase, config: &AnalysisConfig) -> Result<Analysis> {
    let n = kb.instances.len();
    if n == 0 {
        return Err(Error::EmptyInput("analyze"));
    }
    if n < config.neighbors + 1 || n < config.k_clusters {
        return Err(Error::Sizing(format!(
            "{n} instances cannot support {} neighbors and {} clusters",
            config.neighbors, config.k_clusters
        )));
    }
    let matrix = feature_matrix(kb, &config.properties)?;
    let embedding = isomap(&matrix, config.neighbors, config.bridge_components)?;
    let points: Vec<Vec<f64>> = embedding.coords.iter().map(|c| c.to_vec()).collect();
    let clustering = kmeans(&points, &KMeansConfig::new(config.k_clusters, config.seed))?;
    let labels = class_labels(&matrix.class_names);
    let report = ClusterReport::new(&matrix, &labels, &clustering);
    Ok(Analysis {
        matrix,
        embedding,
        report,
    })
}

/// Share of instances that sit in the majority cluster of their group.
pub fn group_purity<G: Ord>(groups: &[G], clusters: &[usize]) -> f64 {
    if groups.is_empty() {
        return 1.0;
    }
    let mut table: BTreeMap<&G, BTreeMap<usize, usize>> = BTreeMap::new();
    for (g, &c) in groups.iter().zip(clusters) {
        *table.entry(g).or_default().entry(c).or_insert(0) += 1;
    }
    let agreeing: usize = table.values().map(|m| m.values().copied().max().unwrap_or(0)).sum();
    agreeing as f64 / groups.len() as f64
}

// ---------------------------------------------------------------------------
// Export

pub const CSV_HEADER: [&str; 5] = ["instance_id", "class_label", "x", "y", "cluster"];

pub fn export_plot(
    embedding: &Embedding2D,
    report: &ClusterReport,
    csv_path: &Path,
    svg_path: Option<&Path>,
) -> Result<()> {
    let csv_bytes = render_csv(embedding, report).map_err(|source| Error::Csv {
        path: csv_path.to_owned(),
        source,
    })?;
    write_atomic(csv_path, &csv_bytes)?;
    if let Some(svg_path) = svg_path {
        write_atomic(svg_path, render_svg(embedding, report).as_bytes())?;
    }
    Ok(())
}

pub fn render_csv(embedding: &Embedding2D, report: &ClusterReport) -> std::result::Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for (a, [x, y]) in report.assignments.iter().zip(&embedding.coords) {
        w.write_record([
            a.instance_id.clone(),
            a.class_label.to_string(),
            x.to_string(),
            y.to_string(),
            a.cluster.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub fn render_svg(embedding: &Embedding2D, report: &ClusterReport) -> String {
    let (width, height, margin) = (640.0, 480.0, 40.0);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in &embedding.coords {
        for axis in 0..2 {
            lo[axis] = lo[axis].min(c[axis]);
            hi[axis] = hi[axis].max(c[axis]);
        }
    }
    let project = |v: f64, axis: usize, span: f64| {
        let range = hi[axis] - lo[axis];
        if range > 0.0 {
            (v - lo[axis]) / range * span
        } else {
            span / 2.0
        }
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (a, c) in report.assignments.iter().zip(&embedding.coords) {
        let x = margin + project(c[0], 0, width - 2.0 * margin);
        let y = height - margin - project(c[1], 1, height - 2.0 * margin);
        let color = PALETTE[a.cluster % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="{color}"><title>{}</title></circle>"#,
            xml_escape(&a.instance_id)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif">{}</text>"#,
            x + 6.0,
            y - 6.0,
            a.class_label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
