//! Gramian and Lorentz-Gramian algebra.
//!
//! For hyperboloid points the Lorentz Gramian `H = [<x_a, x_b>_M]` splits as
//! `H = G+ - G-` with `G-` the rank-one Gram matrix of the time coordinates
//! and `G+` the Gram matrix of the spatial parts. The cosh-hypothesis of a
//! triplet is the linear form `<H, M_ijk>`, which is what makes the risk a
//! function of `H` alone.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dataset::{Triplet, TripletObservation};
use crate::embed::{Embedding, LossFunction};
use crate::hypgeo::HyperPoint;
use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Relative tolerance for eigenvalue signs, ranks and the equality tests.
pub const CONDITION_TOL: f64 = 1e-8;

/// Euclidean Gram matrix `[<x_a, x_b>]`.
pub fn gramian(points: &[Vec<f64>]) -> Result<Matrix> {
    let dim = points.first().map_or(0, Vec::len);
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Dimension("points of different dimension".into()));
    }
    let n = points.len();
    Ok(Matrix::from_fn(n, n, |a, b| {
        points[a].iter().zip(&points[b]).map(|(x, y)| x * y).sum()
    }))
}

/// Nuclear and max norm of the Gram matrix from distances to the origin
/// only: `sum_a |x_a|^2` and `max_a |x_a|^2`.
pub fn euclidean_norm_identities(points: &[Vec<f64>]) -> (f64, f64) {
    let sq: Vec<f64> = points.iter().map(|p| p.iter().map(|v| v * v).sum()).collect();
    (sq.iter().sum(), sq.iter().copied().fold(0.0, f64::max))
}

/// Sum of singular values.
pub fn nuclear_norm(m: &Matrix) -> f64 {
    m.clone().svd(false, false).singular_values.sum()
}

/// Largest absolute entry.
pub fn max_norm(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    let scale = max_norm(m).max(1.0);
    for a in 0..m.nrows() {
        for b in a + 1..m.ncols() {
            if (m[(a, b)] - m[(b, a)]).abs() > 1e-10 * scale {
                return Err(Error::InvalidInput(format!("matrix is not symmetric at ({a}, {b})")));
            }
        }
    }
    Ok(())
}

/// A symmetric matrix claimed to be a Lorentz Gramian.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzGram {
    h: Matrix,
}

impl LorentzGram {
    /// Accepts any square symmetric matrix; the Lorentz conditions are
    /// checked by [`reconstruct_points`] and [`LorentzGram::signature`].
    pub fn from_matrix(h: Matrix) -> Result<Self> {
        check_symmetric(&h)?;
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self { h })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    /// `(negative, positive)` eigenvalue counts beyond the relative tolerance.
    pub fn signature(&self) -> (usize, usize) {
        let eig = self.h.clone().symmetric_eigenvalues();
        let tol = CONDITION_TOL * eig.amax().max(f64::MIN_POSITIVE);
        (
            eig.iter().filter(|&&l| l < -tol).count(),
            eig.iter().filter(|&&l| l > tol).count(),
        )
    }

    /// `<H, M_ijk> = -H_ij + H_ik`.
    pub fn comparison(&self, t: Triplet) -> f64 {
        -self.h[(t.i, t.j)] + self.h[(t.i, t.k)]
    }
}

fn hyper_points(emb: &Embedding) -> Result<&[HyperPoint]> {
    emb.hyperbolic_points()
        .ok_or_else(|| Error::InvalidInput("a Lorentz Gramian needs a hyperbolic embedding".into()))
}

fn revalidate(points: &[HyperPoint]) -> Result<()> {
    for p in points {
        HyperPoint::from_coords(p.coords().to_vec())?;
    }
    Ok(())
}

/// `H(a, b) = <x_a, x_b>_M`.
pub fn lorentz_gramian(emb: &Embedding) -> Result<LorentzGram> {
    let points = hyper_points(emb)?;
    revalidate(points)?;
    let n = points.len();
    let mut h = Matrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let x = points[a].coords();
            let y = points[b].coords();
            let v = x[1..].iter().zip(&y[1..]).map(|(p, q)| p * q).sum::<f64>() - x[0] * y[0];
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    Ok(LorentzGram { h })
}

/// A pair `(G-, G+)` whose difference `G+ - G-` is a Lorentz Gramian.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedGramian {
    pub g_minus: Matrix,
    pub g_plus: Matrix,
}

impl DecomposedGramian {
    pub fn lorentz(&self) -> Matrix {
        &self.g_plus - &self.g_minus
    }
}

/// Split by coordinates: `G-` from the time row, `G+` from the spatial block.
pub fn coordinate_decompose(emb: &Embedding) -> Result<DecomposedGramian> {
    let points = hyper_points(emb)?;
    revalidate(points)?;
    let n = points.len();
    let time = Matrix::from_fn(1, n, |_, b| points[b].time());
    let d = points[0].dim();
    let spatial = Matrix::from_fn(d, n, |a, b| points[b].spatial()[a]);
    Ok(DecomposedGramian {
        g_minus: time.transpose() * &time,
        g_plus: spatial.transpose() * &spatial,
    })
}

/// Outcome of one condition with its measured slack (positive = satisfied
/// with room, negative = violated by that amount).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub passed: bool,
    pub slack: f64,
}

impl ConditionCheck {
    fn at_most(value: f64, limit: f64, tol: f64) -> Self {
        Self { passed: value <= limit + tol, slack: limit - value }
    }
}

/// Per-condition report for a decomposed Gramian.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub a_minus: ConditionCheck,
    pub a_plus: ConditionCheck,
    pub b_minus: ConditionCheck,
    pub b_plus: ConditionCheck,
    pub c: ConditionCheck,
    pub d: ConditionCheck,
    pub e_minus: Option<ConditionCheck>,
    pub e_plus: Option<ConditionCheck>,
    pub f_minus: Option<ConditionCheck>,
    pub f_plus: Option<ConditionCheck>,
}

impl ConditionReport {
    /// Conditions (a) through (d).
    pub fn core_ok(&self) -> bool {
        [self.a_minus, self.a_plus, self.b_minus, self.b_plus, self.c, self.d]
            .iter()
            .all(|c| c.passed)
    }

    pub fn e_ok(&self) -> Option<bool> {
        Some(self.e_minus?.passed && self.e_plus?.passed)
    }

    pub fn f_ok(&self) -> Option<bool> {
        Some(self.f_minus?.passed && self.f_plus?.passed)
    }

    /// `(name, check)` for every evaluated condition, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, ConditionCheck)> {
        let mut out = vec![
            ("a-", self.a_minus),
            ("a+", self.a_plus),
            ("b-", self.b_minus),
            ("b+", self.b_plus),
            ("c", self.c),
            ("d", self.d),
        ];
        for (name, c) in [
            ("e-", self.e_minus),
            ("e+", self.e_plus),
            ("f-", self.f_minus),
            ("f+", self.f_plus),
        ] {
            if let Some(c) = c {
                out.push((name, c));
            }
        }
        out
    }
}

fn numerical_rank(eig: &nalgebra::DVector<f64>) -> usize {
    let top = eig.amax();
    if top == 0.0 {
        return 0;
    }
    eig.iter().filter(|&&l| l > CONDITION_TOL * top).count()
}

/// Evaluate conditions (a)-(d), plus (e) when `radius` is given and (f)
/// when `mean_radius` is given.
pub fn check_conditions(
    dec: &DecomposedGramian,
    d: usize,
    radius: Option<f64>,
    mean_radius: Option<f64>,
) -> Result<ConditionReport> {
    let (gm, gp) = (&dec.g_minus, &dec.g_plus);
    if !gm.is_square() || gm.shape() != gp.shape() {
        return Err(Error::Dimension(format!(
            "G- is {:?} and G+ is {:?}",
            gm.shape(),
            gp.shape()
        )));
    }
    let n = gm.nrows();
    let eig_m = gm.clone().symmetric_eigenvalues();
    let eig_p = gp.clone().symmetric_eigenvalues();
    let scale = max_norm(gm).max(max_norm(gp)).max(1.0);
    let tol = CONDITION_TOL * scale;

    let min_m = eig_m.iter().copied().fold(f64::INFINITY, f64::min);
    let min_p = eig_p.iter().copied().fold(f64::INFINITY, f64::min);
    let rank_m = numerical_rank(&eig_m);
    let rank_p = numerical_rank(&eig_p);

    let h = gp - gm;
    let mut diag_err = 0.0f64;
    let mut max_offdiag = f64::NEG_INFINITY;
    for a in 0..n {
        diag_err = diag_err.max((h[(a, a)] + 1.0).abs());
        for b in 0..n {
            if a != b {
                max_offdiag = max_offdiag.max(h[(a, b)]);
            }
        }
    }
    let d_check = if n < 2 {
        ConditionCheck { passed: true, slack: f64::INFINITY }
    } else {
        ConditionCheck::at_most(max_offdiag, -1.0, tol)
    };

    let bound_pair = |lim_minus: f64, lim_plus: f64, v_minus: f64, v_plus: f64| {
        (
            ConditionCheck::at_most(v_minus, lim_minus, CONDITION_TOL * lim_minus.max(1.0)),
            ConditionCheck::at_most(v_plus, lim_plus, CONDITION_TOL * lim_minus.max(1.0)),
        )
    };
    let e = radius.map(|r| {
        let (c, s) = (r.cosh(), r.sinh());
        bound_pair(c * c, s * s, max_norm(gm), max_norm(gp))
    });
    let f = mean_radius.map(|r| {
        let (c, s) = (r.cosh(), r.sinh());
        let nf = n as f64;
        bound_pair(nf * c * c, nf * s * s, nuclear_norm(gm), nuclear_norm(gp))
    });

    Ok(ConditionReport {
        a_minus: ConditionCheck { passed: min_m >= -tol, slack: min_m },
        a_plus: ConditionCheck { passed: min_p >= -tol, slack: min_p },
        b_minus: ConditionCheck { passed: rank_m == 1, slack: rank_m as f64 - 1.0 },
        b_plus: ConditionCheck { passed: rank_p <= d, slack: d as f64 - rank_p as f64 },
        c: ConditionCheck { passed: diag_err <= tol, slack: -diag_err },
        d: d_check,
        e_minus: e.map(|p| p.0),
        e_plus: e.map(|p| p.1),
        f_minus: f.map(|p| p.0),
        f_plus: f.map(|p| p.1),
    })
}

/// Eigen-route decomposition of `H`: `G-` from the negative eigenpair,
/// `G+` from the positive ones.
pub fn eigen_decompose(h: &LorentzGram) -> DecomposedGramian {
    let eig = SymmetricEigen::new(h.h.clone());
    let n = h.n();
    let mut g_minus = Matrix::zeros(n, n);
    let mut g_plus = Matrix::zeros(n, n);
    for (idx, &l) in eig.eigenvalues.iter().enumerate() {
        let u = eig.eigenvectors.column(idx);
        if l < 0.0 {
            g_minus -= (u * u.transpose()) * l;
        } else {
            g_plus += (u * u.transpose()) * l;
        }
    }
    DecomposedGramian { g_minus, g_plus }
}

/// Points in `L^d` whose Lorentz Gramian is `H`, unique up to a Lorentz
/// isometry.
pub fn reconstruct_points(h: &LorentzGram, d: usize) -> Result<Embedding> {
    let n = h.n();
    if n == 0 || d == 0 {
        return Err(Error::Reconstruction("need n >= 1 and d >= 1".into()));
    }
    let scale = max_norm(&h.h).max(1.0);
    for a in 0..n {
        if (h.h[(a, a)] + 1.0).abs() > CONDITION_TOL * scale {
            return Err(Error::Reconstruction(format!(
                "condition (c) violated: H({a},{a}) = {}",
                h.h[(a, a)]
            )));
        }
    }
    let eig = SymmetricEigen::new(h.h.clone());
    let tol = CONDITION_TOL * eig.eigenvalues.amax();
    let negative: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] < -tol).collect();
    if negative.len() != 1 {
        return Err(Error::Reconstruction(format!(
            "condition (b-) violated: {} negative eigenvalues, expected 1",
            negative.len()
        )));
    }
    let mut positive: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > tol).collect();
    if positive.len() > d {
        return Err(Error::Reconstruction(format!(
            "condition (b+) violated: {} positive eigenvalues exceed d = {d}",
            positive.len()
        )));
    }
    positive.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let neg = negative[0];
    let amp = (-eig.eigenvalues[neg]).sqrt();
    let mut time: Vec<f64> = eig.eigenvectors.column(neg).iter().map(|u| amp * u).collect();
    // the eigenvector sign is arbitrary; all time coordinates must agree
    if time.iter().sum::<f64>() < 0.0 {
        time.iter_mut().for_each(|t| *t = -*t);
    }
    if time.iter().any(|&t| t <= 0.0) {
        return Err(Error::Reconstruction(
            "time coordinates have mixed signs (they must share one sign)".into(),
        ));
    }

    let points = (0..n)
        .map(|a| {
            let mut spatial = vec![0.0; d];
            for (slot, &idx) in positive.iter().enumerate() {
                spatial[slot] = eig.eigenvalues[idx].sqrt() * eig.eigenvectors[(a, idx)];
            }
            HyperPoint::lift(&spatial)
        })
        .collect::<Result<Vec<_>>>()?;
    Embedding::hyperbolic(points)
}

/// Sparse comparison matrix: `-1/2` at `(i,j),(j,i)`, `+1/2` at `(i,k),(k,i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComparisonMatrix {
    pub triplet: Triplet,
    pub n: usize,
}

impl ComparisonMatrix {
    pub fn to_dense(&self) -> Matrix {
        let t = self.triplet;
        let mut m = Matrix::zeros(self.n, self.n);
        m[(t.i, t.j)] = -0.5;
        m[(t.j, t.i)] = -0.5;
        m[(t.i, t.k)] = 0.5;
        m[(t.k, t.i)] = 0.5;
        m
    }

    /// Frobenius product with a symmetric matrix.
    pub fn frobenius(&self, h: &Matrix) -> f64 {
        let t = self.triplet;
        -0.5 * (h[(t.i, t.j)] + h[(t.j, t.i)]) + 0.5 * (h[(t.i, t.k)] + h[(t.k, t.i)])
    }
}

pub fn comparison_matrix(i: usize, j: usize, k: usize, n: usize) -> Result<ComparisonMatrix> {
    Ok(ComparisonMatrix { triplet: Triplet::new(i, j, k, n)?, n })
}

/// `(1/m) sum_t loss(-y_t <H, M_t>)`.
pub fn gramian_empirical_risk(
    h: &LorentzGram,
    observations: &[TripletObservation],
    loss: LossFunction,
) -> Result<f64> {
    if observations.is_empty() {
        return Err(Error::Domain("empirical risk of an empty sample".into()));
    }
    let n = h.n();
    let mut total = 0.0;
    for o in observations {
        let t = o.triplet;
        if t.i >= n || t.j >= n || t.k >= n {
            return Err(Error::InvalidInput(format!("triplet {t:?} out of range for n = {n}")));
        }
        total += loss.value(-o.y() * h.comparison(t));
    }
    Ok(total / observations.len() as f64)
}

/// `(1/n) sum_a cosh^2 d(x0, x_a)`, the quantity bounded by `B^C`.
pub fn mean_cosh_squared(emb: &Embedding) -> Result<f64> {
    let points = hyper_points(emb)?;
    Ok(points.iter().map(|p| p.time() * p.time()).sum::<f64>() / points.len() as f64)
}
