//! Losses, hypotheses, empirical and expected risks, and the projected
//! gradient minimisers for hyperbolic (HOE) and Euclidean (EOE) embeddings.
//!
//! A hypothesis on the triplet `(i, j, k)` is `f(d(x_i, x_j)) - f(d(x_i, x_k))`
//! and an observation with label `y` costs `loss(-y * h)`.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{enumerate_triplets, triplet_count, Dissimilarity, LinkFunction, Triplet, TripletObservation};
use crate::hypgeo::{exp_map, hyperbolic_distance, project_to_ball, project_to_tangent, BallRestriction, HyperPoint, TangentVector};
use crate::rng::{stream, Component};
use crate::{Error, Result};

/// Largest triplet universe that expected-risk routines will enumerate.
pub const MAX_EXACT_TRIPLETS: usize = 10_000_000;

/// Margin loss applied to `-y * h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossFunction {
    /// `max(0, x + 1)`.
    Hinge,
    /// `min(1, max(0, x + 1))`.
    Ramp,
}

impl LossFunction {
    pub fn value(self, x: f64) -> f64 {
        match self {
            Self::Hinge => (x + 1.0).max(0.0),
            Self::Ramp => (x + 1.0).clamp(0.0, 1.0),
        }
    }

    /// A subgradient; zero at every knot.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Self::Hinge if x > -1.0 => 1.0,
            Self::Ramp if x > -1.0 && x < 0.0 => 1.0,
            _ => 0.0,
        }
    }

    pub fn lipschitz_constant(self) -> f64 {
        1.0
    }
}

/// Same as [`LossFunction::value`].
pub fn loss_value(loss: LossFunction, x: f64) -> f64 {
    loss.value(x)
}

/// Increasing transform applied to distances before comparing them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// `cosh`, used for HOE.
    Cosh,
    /// `x^2`, used for EOE.
    Square,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Cosh => x.cosh(),
            Self::Square => x * x,
        }
    }

    /// `f(a) - f(b)` without cancellation.
    pub fn difference(self, a: f64, b: f64) -> f64 {
        match self {
            Self::Cosh => 2.0 * ((a + b) / 2.0).sinh() * ((a - b) / 2.0).sinh(),
            Self::Square => (a + b) * (a - b),
        }
    }
}

/// Anything that can report distances between `len()` entities.
pub trait PairwiseDistances {
    fn len(&self) -> usize;

    fn distance(&self, a: usize, b: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `f(d(i, j)) - f(d(i, k))`; indices are assumed in range.
    fn transformed_gap(&self, t: Triplet, f: Transform) -> f64 {
        f.difference(self.distance(t.i, t.j), self.distance(t.i, t.k))
    }
}

/// Target geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Hyperbolic,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Hyperbolic(Vec<HyperPoint>),
    Euclidean { dim: usize, points: Vec<Vec<f64>> },
}

/// `n` representations in `L^d` or `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    repr: Repr,
}

impl Embedding {
    pub fn hyperbolic(points: Vec<HyperPoint>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidInput("an embedding needs at least one point".into()));
        };
        let dim = first.dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::Dimension("points of different dimension".into()));
        }
        Ok(Self { repr: Repr::Hyperbolic(points) })
    }

    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidInput("an embedding needs at least one point".into()));
        };
        let dim = first.len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::Dimension("points must share a positive dimension".into()));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        Ok(Self { repr: Repr::Euclidean { dim, points } })
    }

    /// `n` copies of the origin (base point in the hyperbolic case).
    pub fn identical(space: Space, n: usize, dim: usize) -> Result<Self> {
        match space {
            Space::Hyperbolic => Self::hyperbolic(vec![HyperPoint::base(dim); n]),
            Space::Euclidean => Self::euclidean(vec![vec![0.0; dim]; n]),
        }
    }

    pub fn space(&self) -> Space {
        match self.repr {
            Repr::Hyperbolic(_) => Space::Hyperbolic,
            Repr::Euclidean { .. } => Space::Euclidean,
        }
    }

    /// Intrinsic dimension `d`.
    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Hyperbolic(p) => p[0].dim(),
            Repr::Euclidean { dim, .. } => *dim,
        }
    }

    pub fn hyperbolic_points(&self) -> Option<&[HyperPoint]> {
        match &self.repr {
            Repr::Hyperbolic(p) => Some(p),
            Repr::Euclidean { .. } => None,
        }
    }

    pub fn euclidean_points(&self) -> Option<&[Vec<f64>]> {
        match &self.repr {
            Repr::Euclidean { points, .. } => Some(points),
            Repr::Hyperbolic(_) => None,
        }
    }

    /// Stored coordinates of point `a` (`1 + d` entries when hyperbolic).
    pub fn coords(&self, a: usize) -> &[f64] {
        match &self.repr {
            Repr::Hyperbolic(p) => p[a].coords(),
            Repr::Euclidean { points, .. } => &points[a],
        }
    }

    /// Distance of point `a` from the origin / base point.
    pub fn radius(&self, a: usize) -> f64 {
        match &self.repr {
            Repr::Hyperbolic(p) => p[a].radius(),
            Repr::Euclidean { points, .. } => norm(&points[a]),
        }
    }

    /// Membership in the radius ball of `restriction`.
    pub fn within_radius(&self, restriction: &BallRestriction) -> bool {
        (0..self.len()).all(|a| self.radius(a) <= restriction.radius() + 1e-9)
    }

    fn inner_gap(&self, t: Triplet, f: Transform) -> f64 {
        match (&self.repr, f) {
            (Repr::Hyperbolic(p), Transform::Cosh) => {
                let (xi, xj, xk) = (p[t.i].coords(), p[t.j].coords(), p[t.k].coords());
                -mink(xi, xj) + mink(xi, xk)
            }
            (Repr::Euclidean { points, .. }, Transform::Square) => {
                sq_dist(&points[t.i], &points[t.j]) - sq_dist(&points[t.i], &points[t.k])
            }
            _ => f.difference(self.distance(t.i, t.j), self.distance(t.i, t.k)),
        }
    }
}

impl PairwiseDistances for Embedding {
    fn len(&self) -> usize {
        match &self.repr {
            Repr::Hyperbolic(p) => p.len(),
            Repr::Euclidean { points, .. } => points.len(),
        }
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        match &self.repr {
            Repr::Hyperbolic(p) => hyperbolic_distance(&p[a], &p[b]),
            Repr::Euclidean { points, .. } => sq_dist(&points[a], &points[b]).sqrt(),
        }
    }

    /// Uses the bilinear Minkowski form for `(hyperbolic, cosh)` and squared
    /// norms for `(euclidean, square)`.
    fn transformed_gap(&self, t: Triplet, f: Transform) -> f64 {
        self.inner_gap(t, f)
    }
}

fn mink(u: &[f64], v: &[f64]) -> f64 {
    u[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum::<f64>() - u[0] * v[0]
}

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn norm(u: &[f64]) -> f64 {
    u.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn check_triplet<P: PairwiseDistances + ?Sized>(t: Triplet, emb: &P) -> Result<()> {
    let n = emb.len();
    if t.i >= n || t.j >= n || t.k >= n {
        return Err(Error::InvalidInput(format!(
            "triplet ({}, {}, {}) out of range for {n} points",
            t.i, t.j, t.k
        )));
    }
    Ok(())
}

/// `f(d(x_i, x_j)) - f(d(x_i, x_k))`.
pub fn hypothesis<P: PairwiseDistances + ?Sized>(t: Triplet, emb: &P, f: Transform) -> Result<f64> {
    check_triplet(t, emb)?;
    Ok(emb.transformed_gap(t, f))
}

/// `(1/m) sum_t loss(-y_t h_t)`.
pub fn empirical_risk<P: PairwiseDistances + ?Sized>(
    emb: &P,
    observations: &[TripletObservation],
    loss: LossFunction,
    f: Transform,
) -> Result<f64> {
    if observations.is_empty() {
        return Err(Error::Domain("empirical risk of an empty sample".into()));
    }
    let mut total = 0.0;
    for o in observations {
        check_triplet(o.triplet, emb)?;
        total += loss.value(-o.y() * emb.transformed_gap(o.triplet, f));
    }
    Ok(total / observations.len() as f64)
}

/// Fraction of observations whose hypothesis has the sign of the label.
pub fn ordering_accuracy<P: PairwiseDistances + ?Sized>(
    emb: &P,
    observations: &[TripletObservation],
    f: Transform,
) -> Result<f64> {
    if observations.is_empty() {
        return Err(Error::Domain("accuracy of an empty sample".into()));
    }
    let mut hits = 0usize;
    for o in observations {
        check_triplet(o.triplet, emb)?;
        if o.y() * emb.transformed_gap(o.triplet, f) > 0.0 {
            hits += 1;
        }
    }
    Ok(hits as f64 / observations.len() as f64)
}

/// The full triplet universe with the probability of label `+1` on each.
#[derive(Debug, Clone)]
pub struct ExpectedRiskProblem {
    n: usize,
    triplets: Vec<Triplet>,
    probs: Vec<f64>,
}

impl ExpectedRiskProblem {
    pub fn new(dis: &Dissimilarity, link: &LinkFunction) -> Result<Self> {
        let n = dis.n();
        if n < 3 {
            return Err(Error::InvalidInput(format!("triplet universe is empty for n = {n}")));
        }
        if triplet_count(n) > MAX_EXACT_TRIPLETS {
            return Err(Error::Capacity(format!(
                "|T| = {} exceeds {MAX_EXACT_TRIPLETS}",
                triplet_count(n)
            )));
        }
        let triplets = enumerate_triplets(n);
        let probs = triplets
            .iter()
            .map(|t| link.probability(dis.get(t.i, t.j) - dis.get(t.i, t.k)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, triplets, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn risk<P: PairwiseDistances + ?Sized>(&self, emb: &P, loss: LossFunction, f: Transform) -> Result<f64> {
        if emb.len() != self.n {
            return Err(Error::Dimension(format!(
                "embedding has {} points, problem has {}",
                emb.len(),
                self.n
            )));
        }
        let total: f64 = self
            .triplets
            .iter()
            .zip(&self.probs)
            .map(|(&t, &p)| {
                let h = emb.transformed_gap(t, f);
                expected_term(p, h, loss)
            })
            .sum();
        Ok(total / self.triplets.len() as f64)
    }
}

fn expected_term(p: f64, h: f64, loss: LossFunction) -> f64 {
    // skip zero-weight terms so that infinite losses do not produce NaN
    let mut v = 0.0;
    if p > 0.0 {
        v += p * loss.value(-h);
    }
    if p < 1.0 {
        v += (1.0 - p) * loss.value(h);
    }
    v
}

/// Exact expected risk under the uniform-triplet model with the given link.
pub fn expected_risk_exact<P: PairwiseDistances + ?Sized>(
    emb: &P,
    dis: &Dissimilarity,
    link: &LinkFunction,
    loss: LossFunction,
    f: Transform,
) -> Result<f64> {
    ExpectedRiskProblem::new(dis, link)?.risk(emb, loss, f)
}

/// Per-triplet terms of an objective, each `weight * phi(h)`.
enum Terms<'a> {
    Empirical(&'a [TripletObservation]),
    Expected(&'a ExpectedRiskProblem),
}

impl Terms<'_> {
    fn len(&self) -> usize {
        match self {
            Terms::Empirical(o) => o.len(),
            Terms::Expected(p) => p.triplets.len(),
        }
    }

    /// Triplet of term `idx` and `d phi / d h` at `h`.
    fn slope(&self, idx: usize, emb: &Embedding, loss: LossFunction, f: Transform) -> (Triplet, f64) {
        match self {
            Terms::Empirical(o) => {
                let ob = o[idx];
                let y = ob.y();
                let h = emb.inner_gap(ob.triplet, f);
                (ob.triplet, -y * loss.derivative(-y * h))
            }
            Terms::Expected(p) => {
                let t = p.triplets[idx];
                let q = p.probs[idx];
                let h = emb.inner_gap(t, f);
                (t, -q * loss.derivative(-h) + (1.0 - q) * loss.derivative(h))
            }
        }
    }

    fn value(&self, emb: &Embedding, loss: LossFunction, f: Transform) -> Result<f64> {
        match self {
            Terms::Empirical(o) => empirical_risk(emb, o, loss, f),
            Terms::Expected(p) => p.risk(emb, loss, f),
        }
    }
}

fn check_gradient_support(space: Space, f: Transform) -> Result<()> {
    match (space, f) {
        (Space::Hyperbolic, Transform::Cosh) | (Space::Euclidean, Transform::Square) => Ok(()),
        _ => Err(Error::InvalidInput(format!(
            "gradients are implemented for (hyperbolic, cosh) and (euclidean, square), not ({space:?}, {f:?})"
        ))),
    }
}

/// Gradient of the mean of the selected terms (all terms if `subset` is
/// `None`). Hyperbolic gradients are Minkowski gradients: the ambient
/// vectors `g_a` with `dF = sum_a <g_a, dx_a>_M`.
fn terms_gradient(
    terms: &Terms<'_>,
    subset: Option<&[usize]>,
    emb: &Embedding,
    loss: LossFunction,
    f: Transform,
) -> Vec<Vec<f64>> {
    let n = emb.len();
    let width = emb.coords(0).len();
    let mut grad = vec![vec![0.0; width]; n];
    let mut accumulate = |idx: usize| {
        let (t, c) = terms.slope(idx, emb, loss, f);
        if c == 0.0 {
            return;
        }
        let (xi, xj, xk) = (emb.coords(t.i), emb.coords(t.j), emb.coords(t.k));
        for a in 0..width {
            let (gi, gj, gk) = match emb.space() {
                // h = -<x_i,x_j>_M + <x_i,x_k>_M
                Space::Hyperbolic => (c * (xk[a] - xj[a]), -c * xi[a], c * xi[a]),
                // h = |x_i - x_j|^2 - |x_i - x_k|^2
                Space::Euclidean => (
                    2.0 * c * (xk[a] - xj[a]),
                    -2.0 * c * (xi[a] - xj[a]),
                    2.0 * c * (xi[a] - xk[a]),
                ),
            };
            grad[t.i][a] += gi;
            grad[t.j][a] += gj;
            grad[t.k][a] += gk;
        }
    };
    let count = match subset {
        Some(s) => {
            s.iter().copied().for_each(&mut accumulate);
            s.len()
        }
        None => {
            (0..terms.len()).for_each(&mut accumulate);
            terms.len()
        }
    };
    let scale = 1.0 / count.max(1) as f64;
    grad.iter_mut().flatten().for_each(|g| *g *= scale);
    grad
}

/// Gradient of [`empirical_risk`]. Euclidean: ordinary gradient.
/// Hyperbolic: Minkowski gradient (see [`chart_gradient`] to convert).
pub fn empirical_risk_gradient(
    emb: &Embedding,
    observations: &[TripletObservation],
    loss: LossFunction,
    f: Transform,
) -> Result<Vec<Vec<f64>>> {
    check_gradient_support(emb.space(), f)?;
    if observations.is_empty() {
        return Err(Error::Domain("empirical risk of an empty sample".into()));
    }
    for o in observations {
        check_triplet(o.triplet, emb)?;
    }
    Ok(terms_gradient(&Terms::Empirical(observations), None, emb, loss, f))
}

/// Gradient of the exact expected risk, in the convention of
/// [`empirical_risk_gradient`].
pub fn expected_risk_gradient(
    emb: &Embedding,
    problem: &ExpectedRiskProblem,
    loss: LossFunction,
    f: Transform,
) -> Result<Vec<Vec<f64>>> {
    check_gradient_support(emb.space(), f)?;
    if emb.len() != problem.n() {
        return Err(Error::Dimension("embedding and problem sizes differ".into()));
    }
    Ok(terms_gradient(&Terms::Expected(problem), None, emb, loss, f))
}

/// Convert a gradient to partial derivatives in the chart used by
/// [`HyperPoint::lift`] (spatial coordinates). Euclidean gradients are
/// returned unchanged.
pub fn chart_gradient(emb: &Embedding, grad: &[Vec<f64>]) -> Vec<Vec<f64>> {
    match emb.hyperbolic_points() {
        None => grad.to_vec(),
        Some(points) => points
            .iter()
            .zip(grad)
            .map(|(p, g)| {
                let x0 = p.time();
                p.spatial().iter().zip(&g[1..]).map(|(s, ga)| ga - g[0] * s / x0).collect()
            })
            .collect(),
    }
}

/// Optimiser settings shared by all minimisers.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub restriction: BallRestriction,
    pub step_size: f64,
    /// Passes over the sample (or full-batch steps for expected risk).
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub init_scale: f64,
    /// Use `step_size / sqrt(1 + epoch)`.
    pub decay: bool,
    /// Upper bound on the length of one update.
    pub max_step: f64,
    /// Independent starts for [`minimize_expected_risk`].
    pub restarts: usize,
    /// Optimise the hinge surrogate for the first half of the epochs when
    /// the target loss is the ramp.
    pub hinge_warmup: bool,
}

impl FitConfig {
    pub fn new(restriction: BallRestriction) -> Self {
        Self {
            restriction,
            step_size: 0.05,
            epochs: 200,
            batch_size: 32,
            seed: 0,
            init_scale: 0.1,
            decay: false,
            max_step: 0.5,
            restarts: 3,
            hinge_warmup: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidInput(format!("step_size {} must be positive", self.step_size)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be positive".into()));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidInput(format!("init_scale {} must be non-negative", self.init_scale)));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidInput(format!("max_step {} must be positive", self.max_step)));
        }
        Ok(())
    }

    fn step_at(&self, epoch: usize) -> f64 {
        if self.decay {
            self.step_size / ((1 + epoch) as f64).sqrt()
        } else {
            self.step_size
        }
    }
}

/// A fitted embedding and its objective trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Best iterate by objective value, the initialisation included.
    pub embedding: Embedding,
    pub risk: f64,
    /// `(epoch, objective)`; epoch 0 is the initialisation.
    pub trace: Vec<(usize, f64)>,
}

/// Random start near the origin, projected into the radius ball.
pub fn initialize(space: Space, n: usize, dim: usize, config: &FitConfig, index: u64) -> Result<Embedding> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidInput(format!("need n >= 1 and d >= 1, got n={n}, d={dim}")));
    }
    let mut rng = stream(config.seed, Component::Init, index);
    let radius = config.restriction.radius();
    let mut gauss = || -> Vec<f64> {
        (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                config.init_scale * z
            })
            .collect()
    };
    match space {
        Space::Hyperbolic => {
            let base = HyperPoint::base(dim);
            let points = (0..n)
                .map(|_| {
                    let mut dir = vec![0.0];
                    dir.extend(gauss());
                    let p = exp_map(&TangentVector { at: base.clone(), dir });
                    project_to_ball(&p, radius)
                })
                .collect();
            Embedding::hyperbolic(points)
        }
        Space::Euclidean => {
            let points = (0..n).map(|_| euclidean_ball(gauss(), radius)).collect();
            Embedding::euclidean(points)
        }
    }
}

fn euclidean_ball(mut x: Vec<f64>, radius: f64) -> Vec<f64> {
    let r = norm(&x);
    if r > radius {
        let s = if r > 0.0 { radius / r } else { 0.0 };
        x.iter_mut().for_each(|v| *v *= s);
    }
    x
}

/// Move every point against its gradient by `eta`, clipped and projected.
fn descend(emb: &Embedding, grad: &[Vec<f64>], eta: f64, config: &FitConfig) -> Result<Embedding> {
    if grad.iter().flatten().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite(
            "gradient overflowed; reduce the radius or the step size".into(),
        ));
    }
    let radius = config.restriction.radius();
    match emb.hyperbolic_points() {
        Some(points) => {
            let mut out = Vec::with_capacity(points.len());
            for (p, g) in points.iter().zip(grad) {
                let rg = project_to_tangent(p, g)?;
                let len = eta * rg.norm();
                let factor = if len > config.max_step { -config.max_step / rg.norm() } else { -eta };
                let q = project_to_ball(&exp_map(&rg.scaled(factor)), radius).relift();
                out.push(q);
            }
            Embedding::hyperbolic(out)
        }
        None => {
            let points = emb.euclidean_points().expect("euclidean");
            let out = points
                .iter()
                .zip(grad)
                .map(|(x, g)| {
                    let len = eta * norm(g);
                    let factor = if len > config.max_step { config.max_step / norm(g) } else { eta };
                    euclidean_ball(x.iter().zip(g).map(|(a, b)| a - factor * b).collect(), radius)
                })
                .collect();
            Embedding::euclidean(out)
        }
    }
}

fn check_finite_risk(r: f64) -> Result<f64> {
    if r.is_nan() {
        return Err(Error::NonFinite("objective evaluated to NaN".into()));
    }
    Ok(r)
}

/// Minibatch projected SGD on the empirical risk, starting from `init`.
pub fn fit_from(
    init: Embedding,
    observations: &[TripletObservation],
    loss: LossFunction,
    f: Transform,
    config: &FitConfig,
) -> Result<FitResult> {
    config.validate()?;
    check_gradient_support(init.space(), f)?;
    let terms = Terms::Empirical(observations);
    let mut current = init;
    let mut best_risk = check_finite_risk(terms.value(&current, loss, f)?)?;
    let mut best = current.clone();
    let mut trace = vec![(0, best_risk)];
    let mut order: Vec<usize> = (0..observations.len()).collect();
    for epoch in 0..config.epochs {
        let mut rng = stream(config.seed, Component::Shuffle, epoch as u64);
        order.shuffle(&mut rng);
        let eta = config.step_at(epoch);
        for batch in order.chunks(config.batch_size) {
            let grad = terms_gradient(&terms, Some(batch), &current, loss, f);
            current = descend(&current, &grad, eta, config)?;
        }
        let risk = check_finite_risk(terms.value(&current, loss, f)?)?;
        trace.push((epoch + 1, risk));
        if risk < best_risk {
            best_risk = risk;
            best = current.clone();
        }
    }
    Ok(FitResult { embedding: best, risk: best_risk, trace })
}

/// Fit `n` points in `space` of dimension `dim` to the observations.
pub fn fit(
    space: Space,
    observations: &[TripletObservation],
    loss: LossFunction,
    n: usize,
    dim: usize,
    config: &FitConfig,
) -> Result<FitResult> {
    config.validate()?;
    if observations.is_empty() {
        return Err(Error::Domain("cannot fit an empty sample".into()));
    }
    let f = match space {
        Space::Hyperbolic => Transform::Cosh,
        Space::Euclidean => Transform::Square,
    };
    let init = initialize(space, n, dim, config, 0)?;
    for o in observations {
        check_triplet(o.triplet, &init)?;
    }
    fit_from(init, observations, loss, f, config)
}

/// HOE: hyperbolic points, cosh transform.
pub fn fit_hoe(
    observations: &[TripletObservation],
    config: &FitConfig,
    loss: LossFunction,
    n: usize,
    dim: usize,
) -> Result<FitResult> {
    fit(Space::Hyperbolic, observations, loss, n, dim, config)
}

/// EOE: Euclidean points, squared transform.
pub fn fit_eoe(
    observations: &[TripletObservation],
    config: &FitConfig,
    loss: LossFunction,
    n: usize,
    dim: usize,
) -> Result<FitResult> {
    fit(Space::Euclidean, observations, loss, n, dim, config)
}

/// Full-batch projected gradient descent on the exact expected risk from
/// one starting point. The trace records the target-loss risk.
pub fn descend_expected_risk(
    init: Embedding,
    problem: &ExpectedRiskProblem,
    loss: LossFunction,
    f: Transform,
    config: &FitConfig,
) -> Result<FitResult> {
    config.validate()?;
    check_gradient_support(init.space(), f)?;
    let terms = Terms::Expected(problem);
    let mut current = init;
    let mut best_risk = check_finite_risk(terms.value(&current, loss, f)?)?;
    let mut best = current.clone();
    let mut trace = vec![(0, best_risk)];
    let warmup = if config.hinge_warmup && loss == LossFunction::Ramp { config.epochs / 2 } else { 0 };
    for epoch in 0..config.epochs {
        let surrogate = if epoch < warmup { LossFunction::Hinge } else { loss };
        let grad = terms_gradient(&terms, None, &current, surrogate, f);
        current = descend(&current, &grad, config.step_at(epoch), config)?;
        let risk = check_finite_risk(terms.value(&current, loss, f)?)?;
        trace.push((epoch + 1, risk));
        if risk < best_risk {
            best_risk = risk;
            best = current.clone();
        }
    }
    Ok(FitResult { embedding: best, risk: best_risk, trace })
}

/// Multi-start minimisation of the exact expected risk; returns the best
/// start. Every start's initialisation is a candidate, so the result is
/// never worse than any of them.
pub fn minimize_expected_risk(
    dis: &Dissimilarity,
    link: &LinkFunction,
    loss: LossFunction,
    f: Transform,
    space: Space,
    dim: usize,
    config: &FitConfig,
) -> Result<FitResult> {
    config.validate()?;
    if config.restarts < 3 {
        return Err(Error::InvalidInput(format!(
            "minimize_expected_risk needs at least 3 restarts, got {}",
            config.restarts
        )));
    }
    check_gradient_support(space, f)?;
    let problem = ExpectedRiskProblem::new(dis, link)?;
    let mut best: Option<FitResult> = None;
    for r in 0..config.restarts {
        let init = initialize(space, dis.n(), dim, config, r as u64)?;
        let run = descend_expected_risk(init, &problem, loss, f, config)?;
        if best.as_ref().is_none_or(|b| run.risk < b.risk) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
