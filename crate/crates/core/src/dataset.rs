//! Ground-truth dissimilarities, the triplet universe and noisy comparisons.
//!
//! Entity ids are 0-based in memory. File formats and the CLI use 1-based
//! ids; the conversion happens in [`crate::formats`].

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::{stream, Component};
use crate::{Error, Result};

/// Multiplicative jitter applied to generated edge weights.
pub const WEIGHT_JITTER: f64 = 1e-6;

const MAX_TREE_ATTEMPTS: usize = 100;

/// An edge-weighted tree on vertices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTree {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedTree {
    /// Validate `n - 1` positive-weight edges forming a spanning tree.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("a tree needs at least one vertex".into()));
        }
        if edges.len() != n - 1 {
            return Err(Error::InvalidInput(format!(
                "a tree on {n} vertices has {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(u, v, w) in &edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n}"
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) closes a cycle")));
            }
            parent[ru] = rv;
        }
        Ok(Self { n, edges })
    }

    /// A path `0 - 1 - ... - k` with the given consecutive weights.
    pub fn path(weights: &[f64]) -> Result<Self> {
        let edges = weights.iter().enumerate().map(|(a, &w)| (a, a + 1, w)).collect();
        Self::new(weights.len() + 1, edges)
    }

    /// A star with centre 0 and the given leaf weights.
    pub fn star(weights: &[f64]) -> Result<Self> {
        let edges = weights.iter().enumerate().map(|(a, &w)| (0, a + 1, w)).collect();
        Self::new(weights.len() + 1, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Adjacency lists `(neighbour, weight)`, in edge order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, w) in &self.edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        adj
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.2).reduce(f64::min)
    }
}

/// A symmetric matrix of ground-truth dissimilarities with zero diagonal
/// and pairwise distinct off-diagonal values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dissimilarity {
    n: usize,
    values: Vec<f64>,
}

impl Dissimilarity {
    /// Build from a row-major `n x n` matrix.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                values.len()
            )));
        }
        for a in 0..n {
            if values[a * n + a] != 0.0 {
                return Err(Error::InvalidInput(format!("non-zero diagonal at {a}")));
            }
            for b in a + 1..n {
                let (x, y) = (values[a * n + b], values[b * n + a]);
                if x != y {
                    return Err(Error::InvalidInput(format!("asymmetric entry at ({a}, {b})")));
                }
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(Error::InvalidInput(format!("invalid entry {x} at ({a}, {b})")));
                }
            }
        }
        let out = Self { n, values };
        if let Some((p, q)) = out.first_tie() {
            return Err(Error::InvalidInput(format!(
                "pairs {p:?} and {q:?} have equal dissimilarity"
            )));
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.n + b]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All unordered pairs `a < b` with their value.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for a in 0..self.n {
            for b in a + 1..self.n {
                out.push((a, b, self.get(a, b)));
            }
        }
        out
    }

    fn first_tie(&self) -> Option<((usize, usize), (usize, usize))> {
        let mut pairs = self.pairs();
        pairs.sort_by(|x, y| x.2.total_cmp(&y.2));
        pairs
            .windows(2)
            .find(|w| w[0].2 == w[1].2)
            .map(|w| ((w[0].0, w[0].1), (w[1].0, w[1].1)))
    }
}

/// A triplet `(i, j, k)` from the universe: `j < k`, `i` distinct from both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triplet {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl Triplet {
    pub fn new(i: usize, j: usize, k: usize, n: usize) -> Result<Self> {
        if !(j < k && i != j && i != k && i < n && k < n) {
            return Err(Error::InvalidInput(format!(
                "({i}, {j}, {k}) is not a valid triplet for n = {n}"
            )));
        }
        Ok(Self { i, j, k })
    }
}

/// One noisy comparison: label `+1` means `x_i` is farther from `x_j` than
/// from `x_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripletObservation {
    pub triplet: Triplet,
    pub label: i8,
}

impl TripletObservation {
    pub fn new(triplet: Triplet, label: i8) -> Result<Self> {
        if label != 1 && label != -1 {
            return Err(Error::InvalidInput(format!("label must be +1 or -1, got {label}")));
        }
        Ok(Self { triplet, label })
    }

    pub fn y(&self) -> f64 {
        f64::from(self.label)
    }
}

/// Probability of label `+1` as a function of the true gap
/// `xi(i,j) - xi(i,k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkFunction {
    /// `1/2 + alpha` above zero, `1/2 - alpha` below.
    Step { alpha: f64 },
    /// `1 / (1 + exp(-x / scale))`.
    Logistic { scale: f64 },
}

impl LinkFunction {
    pub fn step(alpha: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&alpha) {
            return Err(Error::InvalidInput(format!("step alpha {alpha} outside [0, 1/2]")));
        }
        Ok(Self::Step { alpha })
    }

    pub fn logistic(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("logistic scale {scale} must be positive")));
        }
        Ok(Self::Logistic { scale })
    }

    pub fn probability(&self, x: f64) -> Result<f64> {
        match *self {
            Self::Step { alpha } => {
                if x > 0.0 {
                    Ok(0.5 + alpha)
                } else if x < 0.0 {
                    Ok(0.5 - alpha)
                } else {
                    Err(Error::Domain("step link is undefined at a zero gap".into()))
                }
            }
            Self::Logistic { scale } => Ok(1.0 / (1.0 + (-x / scale).exp())),
        }
    }
}

/// Same as [`LinkFunction::probability`].
pub fn link_probability(link: &LinkFunction, x: f64) -> Result<f64> {
    link.probability(x)
}

/// `|T| = n(n-1)(n-2)/2`.
pub fn triplet_count(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 2
    }
}

/// The whole triplet universe in lexicographic `(i, j, k)` order.
pub fn enumerate_triplets(n: usize) -> Vec<Triplet> {
    let mut out = Vec::with_capacity(triplet_count(n));
    for i in 0..n {
        for j in 0..n {
            for k in j + 1..n {
                if i != j && i != k {
                    out.push(Triplet { i, j, k });
                }
            }
        }
    }
    out
}

/// A uniformly random element of the triplet universe (`n >= 3`).
pub fn random_triplet(n: usize, rng: &mut impl Rng) -> Triplet {
    let i = rng.random_range(0..n);
    let a = rng.random_range(0..n - 1);
    let mut b = rng.random_range(0..n - 2);
    if b >= a {
        b += 1;
    }
    // a, b index the n - 1 entities other than i
    let skip = |x: usize| if x >= i { x + 1 } else { x };
    let (a, b) = (skip(a), skip(b));
    Triplet { i, j: a.min(b), k: a.max(b) }
}

/// Draw `m` i.i.d. observations: uniform triplet, label from the link.
pub fn sample_observations(
    dis: &Dissimilarity,
    link: &LinkFunction,
    m: usize,
    seed: u64,
) -> Result<Vec<TripletObservation>> {
    let n = dis.n();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "triplet universe is empty for n = {n}"
        )));
    }
    let mut rng = stream(seed, Component::Sampling, 0);
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let t = random_triplet(n, &mut rng);
        let p = link.probability(dis.get(t.i, t.j) - dis.get(t.i, t.k))?;
        let u: f64 = rng.random();
        let label = if u < p { 1 } else { -1 };
        out.push(TripletObservation { triplet: t, label });
    }
    Ok(out)
}

/// Random tree by uniform attachment: vertex `v` hangs off a uniformly
/// chosen earlier vertex. Weights are uniform in `[weight_min, weight_max)`
/// times `1 + u`, `u` uniform in `[0, WEIGHT_JITTER]`. Regenerated until all
/// path distances are distinct.
pub fn generate_weighted_tree(
    n: usize,
    seed: u64,
    weight_min: f64,
    weight_max: f64,
) -> Result<WeightedTree> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need n >= 2, got {n}")));
    }
    if !(weight_min > 0.0 && weight_min < weight_max && weight_max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need 0 < weight_min < weight_max, got [{weight_min}, {weight_max}]"
        )));
    }
    let mut rng = stream(seed, Component::Tree, 0);
    for _ in 0..MAX_TREE_ATTEMPTS {
        let edges = (1..n)
            .map(|v| {
                let parent = rng.random_range(0..v);
                let w = rng.random_range(weight_min..weight_max);
                let jitter = rng.random_range(0.0..=WEIGHT_JITTER);
                (parent, v, w * (1.0 + jitter))
            })
            .collect();
        let tree = WeightedTree::new(n, edges)?;
        if tree_distances(&tree).is_ok() {
            return Ok(tree);
        }
    }
    Err(Error::Generation(format!(
        "no tree with distinct path distances after {MAX_TREE_ATTEMPTS} attempts"
    )))
}

/// Path distances of all pairs; fails if two pairs tie.
pub fn tree_distances(tree: &WeightedTree) -> Result<Dissimilarity> {
    Dissimilarity::new(tree.n(), tree_distance_matrix(tree))
}

/// Path distances without the distinctness requirement.
pub fn tree_distance_matrix(tree: &WeightedTree) -> Vec<f64> {
    let n = tree.n();
    let adj = tree.adjacency();
    let mut values = vec![0.0; n * n];
    let mut stack = Vec::new();
    for src in 0..n {
        let row = &mut values[src * n..(src + 1) * n];
        stack.push((src, usize::MAX));
        while let Some((v, from)) = stack.pop() {
            for &(u, w) in &adj[v] {
                if u != from {
                    row[u] = row[v] + w;
                    stack.push((u, v));
                }
            }
        }
    }
    // make exact symmetry independent of summation order
    for a in 0..n {
        for b in a + 1..n {
            values[b * n + a] = values[a * n + b];
        }
    }
    values
}

/// Euclidean distances of `n` standard-normal points in `R^d`.
pub fn random_point_cloud(n: usize, d: usize, seed: u64) -> Result<Dissimilarity> {
    if d == 0 {
        return Err(Error::InvalidInput("point cloud dimension must be positive".into()));
    }
    let mut rng = stream(seed, Component::PointCloud, 0);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let mut values = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let dist = pts[a]
                .iter()
                .zip(&pts[b])
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            values[a * n + b] = dist;
            values[b * n + a] = dist;
        }
    }
    Dissimilarity::new(n, values)
}
