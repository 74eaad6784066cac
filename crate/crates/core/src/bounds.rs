//! Closed-form excess-risk bounds for HOE and EOE, the matrix Bernstein
//! ingredients behind them, and Monte Carlo estimators used to check them.
//!
//! `ln` is the natural logarithm throughout. Formula evaluators accept
//! `n >= 2`; anything that draws triplets needs `n >= 3`.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dataset::random_triplet;
use crate::rng::{stream, Component};
use crate::{Error, Result};

fn check_nm(n: usize, m: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("bounds need n >= 2, got {n}")));
    }
    if m == 0 {
        return Err(Error::InvalidInput("bounds need m >= 1".into()));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta {delta} outside (0, 1)")));
    }
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} = {v} must be finite and non-negative")));
    }
    Ok(())
}

/// Constants of the Rademacher bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RademacherVariant {
    /// `sqrt(2(n+1) ln n / m) + n ln n / (sqrt(12) m)`; used in the
    /// headline HOE bound.
    Theorem1,
    /// `sqrt(2 n ln n / m) + n ln n / (6 m)`; the standalone form of the
    /// bracket, kept for comparison.
    Lemma5Stated,
}

impl RademacherVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Theorem1 => "theorem1",
            Self::Lemma5Stated => "lemma5_stated",
        }
    }

    fn bracket(self, n: f64, m: f64) -> f64 {
        let ln = n.ln();
        match self {
            Self::Theorem1 => (2.0 * (n + 1.0) * ln / m).sqrt() + n * ln / (12f64.sqrt() * m),
            Self::Lemma5Stated => (2.0 * n * ln / m).sqrt() + n * ln / (6.0 * m),
        }
    }
}

/// Which bound a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    Hoe(RademacherVariant),
    HoeRadius,
    Eoe,
    EoeRadius,
}

impl BoundVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Hoe(RademacherVariant::Theorem1) => "hoe_theorem1",
            Self::Hoe(RademacherVariant::Lemma5Stated) => "hoe_lemma5_stated",
            Self::HoeRadius => "hoe_radius",
            Self::Eoe => "eoe",
            Self::EoeRadius => "eoe_radius",
        }
    }
}

/// Parameters of the bounds. `mean_radius_c` and `loss_range_b` feed the
/// HOE bound, `nuclear_gamma` and `max_b` the EOE bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub lipschitz_l: f64,
    pub radius_r: f64,
    pub mean_radius_c: f64,
    pub loss_range_b: f64,
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub nuclear_gamma: f64,
    pub max_b: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        check_nm(self.n, self.m)?;
        check_delta(self.delta)?;
        if !(self.lipschitz_l > 0.0 && self.lipschitz_l.is_finite()) {
            return Err(Error::InvalidInput(format!("L = {} must be positive", self.lipschitz_l)));
        }
        check_nonneg("R", self.radius_r)?;
        check_nonneg("C", self.mean_radius_c)?;
        check_nonneg("B_loss", self.loss_range_b)?;
        check_nonneg("gamma", self.nuclear_gamma)?;
        check_nonneg("B", self.max_b)?;
        Ok(())
    }
}

/// Evaluated bound, `total = complexity_term + concentration_term`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub variant: BoundVariant,
    pub complexity_term: f64,
    pub concentration_term: f64,
    pub total: f64,
}

impl BoundReport {
    fn new(variant: BoundVariant, complexity_term: f64, concentration_term: f64) -> Self {
        Self { variant, complexity_term, concentration_term, total: complexity_term + concentration_term }
    }
}

/// Range of the loss over `B_R`: `2 L cosh^2(2R)`.
pub fn loss_range_hoe(l: f64, r: f64) -> f64 {
    let c = (2.0 * r).cosh();
    2.0 * l * c * c
}

/// Rademacher complexity bound of the cosh-hypothesis class over `B^C`:
/// `(cosh^2 C + sinh^2 C)` times the variant's bracket.
pub fn rademacher_bound_hoe(c: f64, n: usize, m: usize, variant: RademacherVariant) -> Result<f64> {
    check_nm(n, m)?;
    check_nonneg("C", c)?;
    let factor = c.cosh().powi(2) + c.sinh().powi(2);
    Ok(factor * variant.bracket(n as f64, m as f64))
}

/// `2 L Rad + 2 B_loss sqrt(2 ln(2/delta) / m)`.
pub fn hoe_excess_bound(inputs: &BoundInputs, variant: RademacherVariant) -> Result<BoundReport> {
    inputs.validate()?;
    let rad = rademacher_bound_hoe(inputs.mean_radius_c, inputs.n, inputs.m, variant)?;
    let conc = 2.0 * inputs.loss_range_b * (2.0 * (2.0 / inputs.delta).ln() / inputs.m as f64).sqrt();
    Ok(BoundReport::new(BoundVariant::Hoe(variant), 2.0 * inputs.lipschitz_l * rad, conc))
}

/// HOE bound with `C = R` and `B_loss = 2 L cosh^2(2R)`.
pub fn hoe_excess_bound_radius(l: f64, r: f64, n: usize, m: usize, delta: f64) -> Result<BoundReport> {
    let inputs = BoundInputs {
        lipschitz_l: l,
        radius_r: r,
        mean_radius_c: r,
        loss_range_b: loss_range_hoe(l, r),
        n,
        m,
        delta,
        nuclear_gamma: 0.0,
        max_b: 0.0,
    };
    let rep = hoe_excess_bound(&inputs, RademacherVariant::Theorem1)?;
    Ok(BoundReport { variant: BoundVariant::HoeRadius, ..rep })
}

/// EOE bound over Gramians with nuclear norm at most `gamma` and max norm
/// at most `b`.
pub fn eoe_excess_bound(l: f64, gamma: f64, b: f64, n: usize, m: usize, delta: f64) -> Result<BoundReport> {
    check_nm(n, m)?;
    check_delta(delta)?;
    check_nonneg("gamma", gamma)?;
    check_nonneg("B", b)?;
    check_nonneg("L", l)?;
    let (nf, mf) = (n as f64, m as f64);
    let k = 12.0 * SQRT_2 * l;
    let ratio = nf * nf.ln() / mf;
    let complexity = k * (gamma / nf) * ((nf.ln() * nf / mf).sqrt() + 3f64.sqrt() / 9.0 * ratio);
    let concentration = k * b * ((2.0 / delta).ln() / mf).sqrt();
    Ok(BoundReport::new(BoundVariant::Eoe, complexity, concentration))
}

/// EOE bound over the radius-`R` ball: `gamma = n R^2`, `B = R^2`.
pub fn eoe_excess_bound_radius(l: f64, r: f64, n: usize, m: usize, delta: f64) -> Result<BoundReport> {
    check_nonneg("R", r)?;
    let rep = eoe_excess_bound(l, n as f64 * r * r, r * r, n, m, delta)?;
    Ok(BoundReport { variant: BoundVariant::EoeRadius, ..rep })
}

/// Rademacher bound of `{<G, M>}` over PSD `G` with nuclear norm at most
/// `gamma`: `(gamma/n)(sqrt(2(n+1) ln n / m) + n ln n / (sqrt(12) m))`.
pub fn decomposed_class_bound(gamma: f64, n: usize, m: usize) -> Result<f64> {
    check_nm(n, m)?;
    check_nonneg("gamma", gamma)?;
    Ok(gamma / n as f64 * RademacherVariant::Theorem1.bracket(n as f64, m as f64))
}

/// Exact statistics of a uniformly drawn comparison matrix `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonStats {
    /// Operator norm of every `M`.
    pub sigma_op: f64,
    /// Diagonal entries of `E[M^2]`.
    pub diag_mean: f64,
    /// Off-diagonal entries of `E[M^2]`.
    pub offdiag_mean: f64,
    /// `||E[M^2]||_op = 1/n + 1/(2n(n-1))`.
    pub variance_per_sample: f64,
}

pub fn comparison_matrix_stats(n: usize) -> Result<ComparisonStats> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("comparison matrices need n >= 3, got {n}")));
    }
    let nf = n as f64;
    let off = -1.0 / (2.0 * nf * (nf - 1.0));
    Ok(ComparisonStats {
        sigma_op: 1.0 / SQRT_2,
        diag_mean: 1.0 / nf,
        offdiag_mean: off,
        variance_per_sample: 1.0 / nf - off,
    })
}

/// `sqrt(2 v ln n) + sigma ln n / 3`.
pub fn matrix_bernstein_bound(variance_v: f64, sigma: f64, n: f64) -> Result<f64> {
    check_nonneg("v", variance_v)?;
    check_nonneg("sigma", sigma)?;
    if !(n >= 2.0) {
        return Err(Error::InvalidInput(format!("matrix dimension {n} must be >= 2")));
    }
    let ln = n.ln();
    Ok((2.0 * variance_v * ln).sqrt() + sigma * ln / 3.0)
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

fn summarize(values: &[f64]) -> McEstimate {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    McEstimate { estimate: mean, stderr: (var / k).sqrt() }
}

/// `S = sum_t sigma_t M_t` for `m` uniform triplets and signs.
fn signed_comparison_sum(n: usize, m: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, n);
    for _ in 0..m {
        let t = random_triplet(n, rng);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        s[(t.i, t.j)] -= 0.5 * sign;
        s[(t.j, t.i)] -= 0.5 * sign;
        s[(t.i, t.k)] += 0.5 * sign;
        s[(t.k, t.i)] += 0.5 * sign;
    }
    s
}

/// Monte Carlo `E || sum_t sigma_t M_t ||_op` over `draws` draws.
pub fn estimate_comparison_sum_norm(n: usize, m: usize, draws: usize, seed: u64) -> Result<McEstimate> {
    if n < 3 || m == 0 || draws == 0 {
        return Err(Error::InvalidInput(format!(
            "need n >= 3, m >= 1 and draws >= 1 (got n={n}, m={m}, draws={draws})"
        )));
    }
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, Component::Bernstein, k as u64);
            let s = signed_comparison_sum(n, m, &mut rng);
            s.symmetric_eigenvalues().amax()
        })
        .collect();
    Ok(summarize(&values))
}

/// Scale all base distances by one factor in `[0, 1]` so that the mean of
/// `cosh^2` stays within `cosh^2 C`.
fn retract_mean(radii: &mut [f64], c: f64) {
    let limit = c.cosh().powi(2);
    let mean = |t: f64, r: &[f64]| r.iter().map(|x| (t * x).cosh().powi(2)).sum::<f64>() / r.len() as f64;
    if mean(1.0, radii) <= limit {
        return;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mean(mid, radii) <= limit {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    radii.iter_mut().for_each(|r| *r *= lo);
}

/// Points in `L^d` stored as (radius, unit direction).
struct PolarCloud {
    radii: Vec<f64>,
    dirs: Vec<Vec<f64>>,
}

impl PolarCloud {
    fn coords(&self) -> Vec<Vec<f64>> {
        self.radii
            .iter()
            .zip(&self.dirs)
            .map(|(r, u)| {
                let mut x = vec![r.cosh()];
                x.extend(u.iter().map(|v| v * r.sinh()));
                x
            })
            .collect()
    }

    fn from_coords(coords: &[Vec<f64>]) -> Self {
        let mut radii = Vec::with_capacity(coords.len());
        let mut dirs = Vec::with_capacity(coords.len());
        for x in coords {
            let s = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            radii.push(s.asinh());
            if s > 0.0 {
                dirs.push(x[1..].iter().map(|v| v / s).collect());
            } else {
                let mut u = vec![0.0; x.len() - 1];
                u[0] = 1.0;
                dirs.push(u);
            }
        }
        Self { radii, dirs }
    }
}

fn lorentz_objective(s: &DMatrix<f64>, x: &[Vec<f64>]) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            let sab = s[(a, b)];
            if sab != 0.0 {
                let ip = x[a][1..].iter().zip(&x[b][1..]).map(|(p, q)| p * q).sum::<f64>() - x[a][0] * x[b][0];
                total += sab * ip;
            }
        }
    }
    total
}

/// Projected Riemannian ascent of `<H(X), S>` over `B^C` from `start`.
fn ascend(s: &DMatrix<f64>, start: PolarCloud, c: f64, budget: usize) -> f64 {
    let mut cloud = start;
    retract_mean(&mut cloud.radii, c);
    let mut x = cloud.coords();
    let mut value = lorentz_objective(s, &x);
    let n = x.len();
    let width = x[0].len();
    let mut eta = 0.5 * c.max(1e-3);
    for _ in 0..budget {
        // Minkowski gradient of sum_ab S_ab <x_a, x_b>_M is 2 sum_b S_ab x_b
        let mut tangents = Vec::with_capacity(n);
        let mut largest = 0.0f64;
        for a in 0..n {
            let mut g = vec![0.0; width];
            for b in 0..n {
                let sab = s[(a, b)];
                if sab != 0.0 {
                    g.iter_mut().zip(&x[b]).for_each(|(gi, xb)| *gi += 2.0 * sab * xb);
                }
            }
            let ip = g[1..].iter().zip(&x[a][1..]).map(|(p, q)| p * q).sum::<f64>() - g[0] * x[a][0];
            let t: Vec<f64> = g.iter().zip(&x[a]).map(|(gi, xi)| gi + ip * xi).collect();
            let norm = (t[1..].iter().map(|v| v * v).sum::<f64>() - t[0] * t[0]).max(0.0).sqrt();
            largest = largest.max(norm);
            tangents.push((t, norm));
        }
        if largest < 1e-14 {
            break;
        }
        let scale = eta / largest;
        let moved: Vec<Vec<f64>> = x
            .iter()
            .zip(&tangents)
            .map(|(xa, (t, norm))| {
                let len = scale * norm;
                if len < 1e-15 {
                    return xa.clone();
                }
                let (ch, sh) = (len.cosh(), len.sinh() / norm);
                let spatial: Vec<f64> = xa[1..].iter().zip(&t[1..]).map(|(p, v)| ch * p + sh * scale * v).collect();
                let mut out = vec![(1.0 + spatial.iter().map(|v| v * v).sum::<f64>()).sqrt()];
                out.extend(spatial);
                out
            })
            .collect();
        let mut cand = PolarCloud::from_coords(&moved);
        retract_mean(&mut cand.radii, c);
        let cx = cand.coords();
        let cv = lorentz_objective(s, &cx);
        if cv > value {
            x = cx;
            value = cv;
            eta *= 1.2;
        } else {
            eta *= 0.5;
            if eta < 1e-10 {
                break;
            }
        }
    }
    value
}

/// Number of random starts of the inner ascent, besides the all-identical
/// configuration.
pub const RADEMACHER_RESTARTS: usize = 3;

/// Monte Carlo estimate of the Rademacher complexity of the cosh-hypothesis
/// class over `B^C` in `L^d`. Each draw maximises
/// `(1/m) sum_t sigma_t h_t` by multi-start projected ascent, so the
/// estimate is a lower estimate of the true complexity.
pub fn estimate_rademacher_mc(
    n: usize,
    m: usize,
    c: f64,
    d: usize,
    sigma_draws: usize,
    opt_budget: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n < 3 || m == 0 || d == 0 || sigma_draws == 0 {
        return Err(Error::InvalidInput(format!(
            "need n >= 3, m >= 1, d >= 1, draws >= 1 (got n={n}, m={m}, d={d}, draws={sigma_draws})"
        )));
    }
    check_nonneg("C", c)?;
    let values: Vec<f64> = (0..sigma_draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, Component::Rademacher, k as u64);
            let s = signed_comparison_sum(n, m, &mut rng);
            // the all-identical configuration scores exactly 0
            let mut best = 0.0f64;
            if c > 0.0 {
                for _ in 0..RADEMACHER_RESTARTS {
                    let dirs: Vec<Vec<f64>> = (0..n)
                        .map(|_| {
                            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                            v.iter().map(|x| x / norm).collect()
                        })
                        .collect();
                    let radii: Vec<f64> = (0..n).map(|_| c * rng.random::<f64>()).collect();
                    best = best.max(ascend(&s, PolarCloud { radii, dirs }, c, opt_budget));
                }
            }
            best / m as f64
        })
        .collect();
    Ok(summarize(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::enumerate_triplets;
    use crate::gramian::ComparisonMatrix;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn loss_range_examples() {
        assert_eq!(loss_range_hoe(1.0, 0.0), 2.0);
        let direct = 2.0 * 2f64.cosh() * 2f64.cosh();
        assert!(close(loss_range_hoe(1.0, 1.0), direct, 1e-15));
        assert!((direct - 28.308).abs() < 1e-3);
        assert!(loss_range_hoe(1.0, 2.0) > loss_range_hoe(1.0, 1.0));
    }

    #[test]
    fn rademacher_bound_examples() {
        let b0 = rademacher_bound_hoe(0.0, 10, 1000, RademacherVariant::Theorem1).unwrap();
        let bracket = (2.0 * 11.0 * 10f64.ln() / 1000.0).sqrt() + 10.0 * 10f64.ln() / (12f64.sqrt() * 1000.0);
        assert!(close(b0, bracket, 1e-14));
        let t1 = RademacherVariant::Theorem1.bracket(10.0, 1000.0);
        let l5 = RademacherVariant::Lemma5Stated.bracket(10.0, 1000.0);
        assert!(t1 > l5);
        assert!(rademacher_bound_hoe(1.0, 1, 10, RademacherVariant::Theorem1).is_err());
    }

    #[test]
    fn hoe_bound_structure() {
        let mk = |m| hoe_excess_bound_radius(1.0, 1.0, 10, m, 0.1).unwrap();
        assert!(close(mk(4000).concentration_term * 2.0, mk(1000).concentration_term, 1e-14));
        let inputs = BoundInputs {
            lipschitz_l: 1.0,
            radius_r: 1.0,
            mean_radius_c: 1.0,
            loss_range_b: 0.0,
            n: 10,
            m: 100,
            delta: 0.3,
            nuclear_gamma: 0.0,
            max_b: 0.0,
        };
        assert_eq!(hoe_excess_bound(&inputs, RademacherVariant::Theorem1).unwrap().concentration_term, 0.0);
        let bad = BoundInputs { delta: 1.0, ..inputs };
        assert!(hoe_excess_bound(&bad, RademacherVariant::Theorem1).is_err());

        let radius = hoe_excess_bound_radius(1.0, 1.0, 10, 1000, 0.1).unwrap();
        let full = hoe_excess_bound(
            &BoundInputs { loss_range_b: loss_range_hoe(1.0, 1.0), m: 1000, delta: 0.1, ..inputs },
            RademacherVariant::Theorem1,
        )
        .unwrap();
        assert_eq!(radius.total, full.total);

        // the complexity term grows like exp(2R); the concentration term
        // carries cosh^2(2R) and grows like exp(4R)
        let b1 = hoe_excess_bound_radius(1.0, 1.0, 10, 1000, 0.1).unwrap();
        let b2 = hoe_excess_bound_radius(1.0, 2.0, 10, 1000, 0.1).unwrap();
        let e = std::f64::consts::E;
        let complexity_ratio = b2.complexity_term / b1.complexity_term;
        assert!(complexity_ratio >= e && complexity_ratio <= e.powi(3), "{complexity_ratio}");
        let concentration_ratio = b2.concentration_term / b1.concentration_term;
        assert!(concentration_ratio >= e.powi(3) && concentration_ratio <= e.powi(5), "{concentration_ratio}");
        let total_ratio = b2.total / b1.total;
        assert!(total_ratio >= e && total_ratio <= e.powi(4), "{total_ratio}");
    }

    #[test]
    fn eoe_bound_structure() {
        let zero = eoe_excess_bound(1.0, 0.0, 0.0, 10, 1000, 0.1).unwrap();
        assert_eq!(zero.total, 0.0);
        assert_eq!(eoe_excess_bound_radius(1.0, 0.0, 10, 1000, 0.1).unwrap().total, 0.0);
        let a = eoe_excess_bound(1.0, 10.0, 1.0, 10, 1000, 0.1).unwrap();
        let b = eoe_excess_bound_radius(1.0, 1.0, 10, 1000, 0.1).unwrap();
        assert_eq!(a.total, b.total);
        let r1 = eoe_excess_bound_radius(1.0, 1.3, 10, 1000, 0.1).unwrap().total;
        let r2 = eoe_excess_bound_radius(1.0, 2.6, 10, 1000, 0.1).unwrap().total;
        assert!(close(r2, 4.0 * r1, 1e-14));
    }

    #[test]
    fn decomposed_bound_splits_the_hoe_bound() {
        assert_eq!(decomposed_class_bound(0.0, 10, 100).unwrap(), 0.0);
        for (c, n, m) in [(0.3f64, 5, 17), (1.0, 10, 1000), (2.2, 40, 3)] {
            let nf = n as f64;
            let sum = decomposed_class_bound(nf * c.cosh().powi(2), n, m).unwrap()
                + decomposed_class_bound(nf * c.sinh().powi(2), n, m).unwrap();
            let whole = rademacher_bound_hoe(c, n, m, RademacherVariant::Theorem1).unwrap();
            assert!(close(sum, whole, 1e-12));
        }
    }

    #[test]
    fn comparison_stats_examples() {
        let s3 = comparison_matrix_stats(3).unwrap();
        assert!(close(s3.variance_per_sample, 5.0 / 12.0, 1e-15));
        assert_eq!(s3.sigma_op, comparison_matrix_stats(9).unwrap().sigma_op);
        assert!(comparison_matrix_stats(2).is_err());
        let n = 5;
        let all = enumerate_triplets(n);
        let mut mean = DMatrix::<f64>::zeros(n, n);
        for t in &all {
            let m = ComparisonMatrix { triplet: *t, n }.to_dense();
            mean += &m * &m;
            let op = m.symmetric_eigenvalues().amax();
            assert!(close(op, 1.0 / SQRT_2, 1e-12));
        }
        mean /= all.len() as f64;
        for a in 0..n {
            for b in 0..n {
                let want = if a == b { 1.0 / 5.0 } else { -1.0 / 40.0 };
                assert!((mean[(a, b)] - want).abs() < 1e-15);
            }
        }
        let op = mean.symmetric_eigenvalues().amax();
        assert!(close(op, comparison_matrix_stats(n).unwrap().variance_per_sample, 1e-12));
    }

    #[test]
    fn bernstein_examples() {
        assert_eq!(matrix_bernstein_bound(0.0, 0.0, 5.0).unwrap(), 0.0);
        let e2 = std::f64::consts::E.powi(2);
        assert!(close(matrix_bernstein_bound(1.0, 1.0, e2).unwrap(), 2.0 + 2.0 / 3.0, 1e-14));
    }

    #[test]
    fn bernstein_holds_for_comparison_sums() {
        for (n, m) in [(4, 10), (6, 100)] {
            let est = estimate_comparison_sum_norm(n, m, 200, 3).unwrap();
            let st = comparison_matrix_stats(n).unwrap();
            let bound = matrix_bernstein_bound(m as f64 * st.variance_per_sample, st.sigma_op, n as f64).unwrap();
            assert!(est.estimate + 3.0 * est.stderr <= bound, "{est:?} vs {bound}");
        }
    }

    #[test]
    fn rademacher_estimate_edge_cases() {
        let zero = estimate_rademacher_mc(5, 20, 0.0, 2, 50, 20, 1).unwrap();
        assert_eq!(zero.estimate, 0.0);
        let single = estimate_rademacher_mc(5, 1, 1.0, 2, 50, 20, 2).unwrap();
        assert!(single.estimate >= 0.0);
        let a = estimate_rademacher_mc(5, 10, 1.0, 2, 50, 20, 3).unwrap();
        let b = estimate_rademacher_mc(5, 10, 1.0, 2, 50, 20, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rademacher_estimate_below_bound() {
        let est = estimate_rademacher_mc(5, 50, 1.0, 2, 200, 60, 4).unwrap();
        let bound = rademacher_bound_hoe(1.0, 5, 50, RademacherVariant::Theorem1).unwrap();
        assert!(est.estimate > 0.0);
        assert!(est.estimate + 3.0 * est.stderr <= bound, "{est:?} vs {bound}");
    }

    #[test]
    fn bounds_are_monotone() {
        let grid = [0.0, 0.5, 1.0, 2.0];
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let h = |r: f64| hoe_excess_bound_radius(1.0, r, 10, 100, 0.1).unwrap().total;
            let e = |r: f64| eoe_excess_bound_radius(1.0, r, 10, 100, 0.1).unwrap().total;
            assert!(h(a) <= h(b) && e(a) <= e(b));
            let rc = |c: f64| rademacher_bound_hoe(c, 10, 100, RademacherVariant::Lemma5Stated).unwrap();
            assert!(rc(a) <= rc(b));
        }
        for l in [0.5, 1.0, 2.0] {
            assert!(hoe_excess_bound_radius(l, 1.0, 10, 100, 0.1).unwrap().total < hoe_excess_bound_radius(l * 2.0, 1.0, 10, 100, 0.1).unwrap().total);
            assert!(eoe_excess_bound_radius(l, 1.0, 10, 100, 0.1).unwrap().total < eoe_excess_bound_radius(l * 2.0, 1.0, 10, 100, 0.1).unwrap().total);
        }
        for n in 3..30 {
            for v in [RademacherVariant::Theorem1, RademacherVariant::Lemma5Stated] {
                assert!(rademacher_bound_hoe(1.0, n, 100, v).unwrap() <= rademacher_bound_hoe(1.0, n + 1, 100, v).unwrap());
            }
            assert!(hoe_excess_bound_radius(1.0, 1.0, n, 100, 0.1).unwrap().total <= hoe_excess_bound_radius(1.0, 1.0, n + 1, 100, 0.1).unwrap().total);
            assert!(eoe_excess_bound_radius(1.0, 1.0, n, 100, 0.1).unwrap().total <= eoe_excess_bound_radius(1.0, 1.0, n + 1, 100, 0.1).unwrap().total);
        }
        for m in [1, 10, 100, 1000] {
            assert!(hoe_excess_bound_radius(1.0, 1.0, 10, m, 0.1).unwrap().total >= hoe_excess_bound_radius(1.0, 1.0, 10, m * 2, 0.1).unwrap().total);
            assert!(eoe_excess_bound_radius(1.0, 1.0, 10, m, 0.1).unwrap().total >= eoe_excess_bound_radius(1.0, 1.0, 10, m * 2, 0.1).unwrap().total);
        }
        for delta in [0.01, 0.05, 0.1, 0.5] {
            assert!(hoe_excess_bound_radius(1.0, 1.0, 10, 100, delta).unwrap().total >= hoe_excess_bound_radius(1.0, 1.0, 10, 100, delta * 1.5).unwrap().total);
            assert!(eoe_excess_bound_radius(1.0, 1.0, 10, 100, delta).unwrap().total >= eoe_excess_bound_radius(1.0, 1.0, 10, 100, delta * 1.5).unwrap().total);
        }
    }
}
