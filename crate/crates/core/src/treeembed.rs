//! Margin-scaled embeddings of weighted trees into the hyperbolic plane.
//!
//! The scale `tau` needed for a unit margin grows like the inverse of the
//! smallest relative gap between path distances, which routinely pushes
//! radii past the range where hyperboloid coordinates fit in an `f64`
//! (`cosh r` overflows near `r = 710`) and makes angular offsets underflow.
//! The layout therefore stores each vertex in polar form: the radius
//! directly, and the angle as the list of per-edge angular increments
//! kept as signed logarithms. Distances are evaluated from
//!
//! `sinh^2(d/2) = sinh^2(dr/2) + sinh(r_u) sinh(r_v) sin^2(dphi/2)`
//!
//! entirely in the log domain, where `dphi` only sums the increments below
//! the lowest common ancestor, so shared prefixes cancel exactly.

use std::f64::consts::{LN_2, PI, TAU};

use rayon::prelude::*;

use crate::dataset::{tree_distances, Dissimilarity, LinkFunction, WeightedTree};
use crate::embed::{expected_risk_exact, LossFunction, PairwiseDistances, Transform};
use crate::hypgeo::HyperPoint;
use crate::{Error, Result};

/// Doublings of `tau` attempted by [`embed_with_margin`].
pub const MAX_DOUBLINGS: usize = 20;

/// Largest radius for which [`TreeLayout::to_hyper_points`] will emit
/// hyperboloid coordinates.
pub const MAX_COORDINATE_RADIUS: f64 = 700.0;

/// Sentinel for a vacuous margin (fewer than two entity pairs).
pub const VACUOUS_MARGIN: f64 = f64::MAX;

fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

fn ln_cosh(x: f64) -> f64 {
    if x > 20.0 {
        x - LN_2 + (-2.0 * x).exp().ln_1p()
    } else {
        x.cosh().ln()
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 - exp(-x))` for `x >= 0`.
fn ln_one_minus_exp_neg(x: f64) -> f64 {
    if x < LN_2 {
        (-(-x).exp_m1()).ln()
    } else {
        (-(-x).exp()).ln_1p()
    }
}

/// `asinh(exp(z))` without overflow.
fn asinh_exp(z: f64) -> f64 {
    if z > 20.0 {
        z + (1.0 + (-2.0 * z).exp()).sqrt().ln_1p()
    } else {
        z.exp().asinh()
    }
}

/// `2 ln |sin(x/2)|` for a signed-log `x`.
fn two_ln_sin_half(x: SignedLog) -> f64 {
    if x.sign == 0 {
        return f64::NEG_INFINITY;
    }
    let ln_half = x.ln_abs - LN_2;
    if ln_half < -7.0 {
        let half = ln_half.exp();
        2.0 * (ln_half - half * half / 6.0)
    } else {
        2.0 * (x.value() / 2.0).sin().abs().ln()
    }
}

/// A real number stored as `sign * exp(ln_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SignedLog {
    sign: i8,
    ln_abs: f64,
}

impl SignedLog {
    const ZERO: Self = Self { sign: 0, ln_abs: f64::NEG_INFINITY };

    fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self { sign: if v > 0.0 { 1 } else { -1 }, ln_abs: v.abs().ln() }
        }
    }

    fn value(self) -> f64 {
        f64::from(self.sign) * self.ln_abs.exp()
    }

    /// Sum of `plus` minus sum of `minus`.
    fn difference(plus: &[SignedLog], minus: &[SignedLog]) -> Self {
        let mut pos = f64::NEG_INFINITY;
        let mut neg = f64::NEG_INFINITY;
        for (t, flip) in plus.iter().map(|t| (t, 1)).chain(minus.iter().map(|t| (t, -1))) {
            match t.sign * flip {
                1 => pos = log_add_exp(pos, t.ln_abs),
                -1 => neg = log_add_exp(neg, t.ln_abs),
                _ => {}
            }
        }
        if pos == neg {
            return Self::ZERO;
        }
        if pos > neg {
            Self { sign: 1, ln_abs: pos + ln_one_minus_exp_neg(pos - neg) }
        } else {
            Self { sign: -1, ln_abs: neg + ln_one_minus_exp_neg(neg - pos) }
        }
    }
}

/// Polar layout of a rooted tree in the hyperbolic plane.
#[derive(Debug, Clone)]
pub struct TreeLayout {
    tau: f64,
    radius: Vec<f64>,
    /// Vertex ids from the root down to each vertex.
    ancestors: Vec<Vec<usize>>,
    /// Angular increment of each edge on the root path.
    increments: Vec<Vec<SignedLog>>,
}

impl TreeLayout {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Distance of vertex `a` from the base point.
    pub fn radius(&self, a: usize) -> f64 {
        self.radius[a]
    }

    /// Polar angle of vertex `a`, rounded to `f64` (tiny increments are
    /// lost once they fall below the rounding of larger ones).
    pub fn angle(&self, a: usize) -> f64 {
        self.increments[a].iter().map(|t| t.value()).sum()
    }

    /// Hyperboloid coordinates; fails once radii leave `f64` range.
    pub fn to_hyper_points(&self) -> Result<Vec<HyperPoint>> {
        let far = self.radius.iter().copied().fold(0.0, f64::max);
        if far > MAX_COORDINATE_RADIUS {
            return Err(Error::Scale(format!(
                "radius {far:.1} exceeds {MAX_COORDINATE_RADIUS}; coordinates would overflow (use a smaller tree or larger weight gaps)"
            )));
        }
        (0..self.radius.len())
            .map(|a| {
                let (r, phi) = (self.radius[a], self.angle(a));
                HyperPoint::lift(&[r.sinh() * phi.cos(), r.sinh() * phi.sin()])
            })
            .collect()
    }
}

impl PairwiseDistances for TreeLayout {
    fn len(&self) -> usize {
        self.radius.len()
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let (pa, pb) = (&self.ancestors[a], &self.ancestors[b]);
        let common = pa.iter().zip(pb).take_while(|(x, y)| x == y).count();
        let dphi = SignedLog::difference(&self.increments[a][common - 1..], &self.increments[b][common - 1..]);
        let (ra, rb) = (self.radius[a], self.radius[b]);
        let radial = 2.0 * ln_sinh((ra - rb).abs() / 2.0);
        let angular = ln_sinh(ra) + ln_sinh(rb) + two_ln_sin_half(dphi);
        let w = log_add_exp(radial, angular);
        if w == f64::NEG_INFINITY {
            return 0.0;
        }
        2.0 * asinh_exp(w / 2.0)
    }
}

/// Place the tree rooted at vertex 0 with every edge stretched by `tau`.
///
/// The root sits at the base point with its children spread evenly around
/// it. A non-root vertex of degree `k` sends its children out at angles
/// `2 pi c / k`, `c = 1..k-1`, measured from the direction back towards
/// the base point, so consecutive tree edges never fold back.
pub fn sarkar_embed(tree: &WeightedTree, tau: f64) -> Result<TreeLayout> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("tau {tau} must be positive and finite")));
    }
    let n = tree.n();
    let adj = tree.adjacency();
    let mut radius = vec![0.0; n];
    let mut ancestors = vec![Vec::new(); n];
    let mut increments: Vec<Vec<SignedLog>> = vec![Vec::new(); n];
    let mut visited = vec![false; n];
    ancestors[0] = vec![0];
    visited[0] = true;

    let root_children = adj[0].len();
    let mut queue = std::collections::VecDeque::new();
    for (c, &(child, w)) in adj[0].iter().enumerate() {
        radius[child] = tau * w;
        ancestors[child] = vec![0, child];
        increments[child] = vec![SignedLog::from_value(TAU * c as f64 / root_children as f64)];
        visited[child] = true;
        queue.push_back(child);
    }

    while let Some(v) = queue.pop_front() {
        let degree = adj[v].len();
        let rp = radius[v];
        let mut slot = 0usize;
        for &(child, w) in &adj[v] {
            if visited[child] {
                continue;
            }
            slot += 1;
            let len = tau * w;
            let gamma = TAU * slot as f64 / degree as f64;
            let g = gamma.min(TAU - gamma);
            let ln_sin_half = (g / 2.0).sin().ln();
            let w_child = log_add_exp(
                2.0 * ln_sinh((rp - len).abs() / 2.0),
                ln_sinh(rp) + ln_sinh(len) + 2.0 * ln_sin_half,
            );
            let rc = 2.0 * asinh_exp(w_child / 2.0);
            if !rc.is_finite() {
                return Err(Error::Scale(format!("radius overflow at tau = {tau}")));
            }
            let increment = if 2 * slot == degree {
                SignedLog::ZERO
            } else {
                // angle at the base point between v and the child
                let ln_sin_a = ln_sinh(len) + g.sin().ln() - ln_sinh(rc);
                let cos_a = 1.0 / (rp.tanh() * rc.tanh()) - (ln_cosh(len) - ln_sinh(rp) - ln_sinh(rc)).exp();
                let ln_a = if ln_sin_a < -20.0 {
                    if cos_a > 0.0 {
                        ln_sin_a
                    } else {
                        (PI - ln_sin_a.exp()).ln()
                    }
                } else {
                    ln_sin_a.exp().min(1.0).atan2(cos_a).ln()
                };
                let sign = if gamma < PI { -1 } else { 1 };
                SignedLog { sign, ln_abs: ln_a }
            };
            radius[child] = rc;
            let mut path = ancestors[v].clone();
            path.push(child);
            ancestors[child] = path;
            let mut inc = increments[v].clone();
            inc.push(increment);
            increments[child] = inc;
            visited[child] = true;
            queue.push_back(child);
        }
    }
    Ok(TreeLayout { tau, radius, ancestors, increments })
}

/// Constants governing the margin construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeMarginStats {
    /// Smallest edge weight.
    pub min_weight: f64,
    /// Smallest `1 - xi / xi'` over pairs of entity pairs with `xi < xi'`
    /// (1 when there is only one pair).
    pub min_ratio_gap: f64,
}

pub fn tree_margin_stats(tree: &WeightedTree) -> Result<TreeMarginStats> {
    let min_weight = tree
        .min_weight()
        .ok_or_else(|| Error::InvalidInput("tree has no edges".into()))?;
    let dis = tree_distances(tree)?;
    let mut values: Vec<f64> = dis.pairs().iter().map(|p| p.2).collect();
    values.sort_by(f64::total_cmp);
    // for sorted values the smallest ratio gap is between neighbours
    let min_ratio_gap = values
        .windows(2)
        .map(|w| 1.0 - w[0] / w[1])
        .fold(1.0, f64::min);
    if min_ratio_gap <= 0.0 {
        return Err(Error::InvalidInput("path distances are not distinct".into()));
    }
    Ok(TreeMarginStats { min_weight, min_ratio_gap })
}

/// Result of an exhaustive margin check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginCheck {
    pub ok: bool,
    /// Smallest `d(p) - d(q)` over entity pairs with `xi(p) > xi(q)`.
    pub worst_gap: f64,
    /// The pairs `(p, q)` attaining `worst_gap`.
    pub witness: Option<((usize, usize), (usize, usize))>,
}

/// Check `xi(p) > xi(q) => d(p) - d(q) > margin` over all entity pairs.
pub fn verify_margin<P: PairwiseDistances + Sync + ?Sized>(points: &P, dis: &Dissimilarity, margin: f64) -> MarginCheck {
    let pairs = dis.pairs();
    let dist: Vec<f64> = pairs.iter().map(|&(a, b, _)| points.distance(a, b)).collect();
    let rows: Vec<(f64, Option<(usize, usize)>)> = (0..pairs.len())
        .into_par_iter()
        .map(|p| {
            let mut best = (VACUOUS_MARGIN, None);
            for q in 0..pairs.len() {
                if pairs[p].2 > pairs[q].2 {
                    let gap = dist[p] - dist[q];
                    if gap < best.0 {
                        best = (gap, Some((p, q)));
                    }
                }
            }
            best
        })
        .collect();
    let (worst_gap, idx) = rows
        .into_iter()
        .fold((VACUOUS_MARGIN, None), |acc, row| if row.0 < acc.0 { row } else { acc });
    let witness = idx.map(|(p, q)| ((pairs[p].0, pairs[p].1), (pairs[q].0, pairs[q].1)));
    MarginCheck { ok: worst_gap > margin, worst_gap, witness }
}

/// Check `(1 - eps) tau xi < d <= (1 + eps) tau xi` for all pairs; returns
/// the worst relative deviation on each side.
pub fn distortion(layout: &TreeLayout, dis: &Dissimilarity) -> (f64, f64) {
    let tau = layout.tau();
    let mut below = 0.0f64;
    let mut above = 0.0f64;
    for (a, b, xi) in dis.pairs() {
        let ratio = layout.distance(a, b) / (tau * xi);
        below = below.max(1.0 - ratio);
        above = above.max(ratio - 1.0);
    }
    (below, above)
}

/// A layout certified to separate every distance comparison by more
/// than 1.
#[derive(Debug, Clone)]
pub struct MarginEmbedding {
    pub layout: TreeLayout,
    pub scale_tau: f64,
    pub epsilon: f64,
    /// Worst separation found; [`VACUOUS_MARGIN`] for a single pair.
    pub achieved_margin: f64,
}

impl MarginEmbedding {
    /// Hyperboloid coordinates, when the radii allow them.
    pub fn points(&self) -> Result<Vec<HyperPoint>> {
        self.layout.to_hyper_points()
    }
}

/// Double `tau` from the analytic starting value until the layout meets the
/// distortion bracket and a margin of 1.
pub fn embed_with_margin(tree: &WeightedTree) -> Result<MarginEmbedding> {
    let stats = tree_margin_stats(tree)?;
    let dis = tree_distances(tree)?;
    let eps = stats.min_ratio_gap / 3.0;
    let mut tau = ((1.0 / (stats.min_weight * eps)).max((1.0 + eps) / (stats.min_weight * eps))).max(f64::MIN_POSITIVE);
    let mut last = (f64::NAN, f64::NAN, f64::NAN);
    for _ in 0..=MAX_DOUBLINGS {
        let layout = sarkar_embed(tree, tau)?;
        let (below, above) = distortion(&layout, &dis);
        // the upper side holds by the triangle inequality up to rounding
        let bracket_ok = below < eps && above <= eps;
        let check = verify_margin(&layout, &dis, 1.0);
        if bracket_ok && check.ok {
            return Ok(MarginEmbedding { layout, scale_tau: tau, epsilon: eps, achieved_margin: check.worst_gap });
        }
        last = (below, above, check.worst_gap);
        tau *= 2.0;
    }
    Err(Error::Construction(format!(
        "no unit margin after {MAX_DOUBLINGS} doublings (eps = {eps:.3e}, last tau = {:.3e}, distortion below/above = {:.3e}/{:.3e}, worst gap = {:.3e})",
        tau / 2.0,
        last.0,
        last.1,
        last.2
    )))
}

/// Margin embedding and its exact expected ramp risk under a step link;
/// the risk equals `1/2 - alpha`.
pub fn zero_risk_certificate(
    tree: &WeightedTree,
    link: &LinkFunction,
    loss: LossFunction,
) -> Result<(MarginEmbedding, f64)> {
    if !matches!(link, LinkFunction::Step { .. }) {
        return Err(Error::InvalidInput("the certificate needs a step link".into()));
    }
    if loss != LossFunction::Ramp {
        return Err(Error::InvalidInput("the certificate needs the ramp loss".into()));
    }
    let emb = embed_with_margin(tree)?;
    let dis = tree_distances(tree)?;
    let risk = expected_risk_exact(&emb.layout, &dis, link, loss, Transform::Cosh)?;
    Ok((emb, risk))
}
