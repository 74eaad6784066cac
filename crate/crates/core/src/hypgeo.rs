//! Geometry of the hyperboloid model `L^d = {x : <x,x>_M = -1, x_0 > 0}`.
//!
//! Coordinates are stored time-first: index 0 is `x_0`, indices `1..=d` are
//! spatial. Curvature is fixed at -1.

use crate::{Error, Result};

/// Tolerance for the `<x,x>_M = -1` invariant, relative to `x_0^2`.
pub const MANIFOLD_TOL: f64 = 1e-9;

/// Below this Minkowski norm a tangent vector is treated as zero.
const TINY_TANGENT: f64 = 1e-12;

/// A point on the upper sheet of the hyperboloid.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperPoint {
    coords: Vec<f64>,
}

impl HyperPoint {
    /// The base point `x_0 = (1, 0, ..., 0)` of `L^d`.
    pub fn base(dim: usize) -> Self {
        let mut coords = vec![0.0; dim + 1];
        coords[0] = 1.0;
        Self { coords }
    }

    /// Wrap raw coordinates, checking the hyperboloid invariants.
    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Dimension(format!(
                "need at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::OffManifold("non-finite coordinate".into()));
        }
        let self_product = minkowski_inner_unchecked(&coords, &coords);
        let scale = coords[0] * coords[0];
        if (self_product + 1.0).abs() > MANIFOLD_TOL * scale.max(1.0) {
            return Err(Error::OffManifold(format!(
                "<x,x>_M = {self_product}, expected -1"
            )));
        }
        if coords[0] < 1.0 - MANIFOLD_TOL {
            return Err(Error::OffManifold(format!(
                "time coordinate {} is below 1",
                coords[0]
            )));
        }
        Ok(Self { coords })
    }

    /// Place a point on the hyperboloid from its spatial coordinates.
    pub fn lift(spatial: &[f64]) -> Result<Self> {
        if spatial.is_empty() {
            return Err(Error::Dimension("spatial part must be non-empty".into()));
        }
        if spatial.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite spatial coordinate".into()));
        }
        Ok(Self::lift_unchecked(spatial))
    }

    pub(crate) fn lift_unchecked(spatial: &[f64]) -> Self {
        let sq: f64 = spatial.iter().map(|s| s * s).sum();
        let mut coords = Vec::with_capacity(spatial.len() + 1);
        coords.push((1.0 + sq).sqrt());
        coords.extend_from_slice(spatial);
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }

    /// Dimension `d` of the hyperbolic space (ambient has `d + 1`).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Distance from the base point, `arcosh(x_0)`.
    pub fn radius(&self) -> f64 {
        let s: f64 = self.spatial().iter().map(|v| v * v).sum();
        s.sqrt().asinh()
    }

    /// Recompute `x_0` from the spatial part.
    pub fn relift(&self) -> Self {
        Self::lift_unchecked(self.spatial())
    }
}

/// A vector in the tangent space at `at`, i.e. Minkowski-orthogonal to it.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub at: HyperPoint,
    pub dir: Vec<f64>,
}

impl TangentVector {
    /// Minkowski norm `sqrt(<v,v>_M)`; tangent vectors are spacelike.
    pub fn norm(&self) -> f64 {
        minkowski_inner_unchecked(&self.dir, &self.dir).max(0.0).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            at: self.at.clone(),
            dir: self.dir.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Ball restriction on an embedding: every point within `radius` of the
/// base point, and mean `cosh^2` base distance at most `cosh^2(mean_radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallRestriction {
    radius: f64,
    mean_radius: f64,
}

impl BallRestriction {
    pub fn new(radius: f64, mean_radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && mean_radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "ball radii must be finite and non-negative (R={radius}, C={mean_radius})"
            )));
        }
        if mean_radius > radius {
            return Err(Error::InvalidInput(format!(
                "mean radius C={mean_radius} exceeds radius R={radius}"
            )));
        }
        Ok(Self { radius, mean_radius })
    }

    /// `C = R`, for which the two restrictions coincide.
    pub fn radius_only(radius: f64) -> Result<Self> {
        Self::new(radius, radius)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn mean_radius(&self) -> f64 {
        self.mean_radius
    }

    /// Membership in `B_R` (with a small absolute slack).
    pub fn contains_radius(&self, points: &[HyperPoint]) -> bool {
        points.iter().all(|p| p.radius() <= self.radius + MANIFOLD_TOL)
    }

    /// Membership in `B^C`.
    pub fn contains_mean(&self, points: &[HyperPoint]) -> bool {
        if points.is_empty() {
            return true;
        }
        let mean: f64 =
            points.iter().map(|p| p.time() * p.time()).sum::<f64>() / points.len() as f64;
        let c = self.mean_radius.cosh();
        mean <= c * c * (1.0 + MANIFOLD_TOL)
    }
}

fn minkowski_inner_unchecked(u: &[f64], v: &[f64]) -> f64 {
    let spatial: f64 = u[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
    spatial - u[0] * v[0]
}

/// Lorentz inner product `-u_0 v_0 + sum_a u_a v_a`.
pub fn minkowski_inner(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension(format!(
            "vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    if u.len() < 2 {
        return Err(Error::Dimension(format!(
            "Minkowski vectors need length >= 2, got {}",
            u.len()
        )));
    }
    Ok(minkowski_inner_unchecked(u, v))
}

/// Geodesic distance `arcosh(-<p,q>_M)`.
///
/// Evaluated through the chord form `2 asinh(|p - q|_M / 2)`, which is the
/// same quantity but keeps full precision for nearby points. The argument
/// of `arcosh` is implicitly clamped to `[1, inf)`.
///
/// # Panics
///
/// Panics if the points live in different dimensions.
pub fn hyperbolic_distance(p: &HyperPoint, q: &HyperPoint) -> f64 {
    assert_eq!(p.dim(), q.dim(), "points of different dimension");
    let dt = p.coords[0] - q.coords[0];
    let ds: f64 = p.coords[1..]
        .iter()
        .zip(&q.coords[1..])
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let chord_sq = (ds - dt * dt).max(0.0);
    2.0 * (chord_sq.sqrt() / 2.0).asinh()
}

/// Orthogonal projection onto the tangent space at `p`: `g + <p,g>_M p`.
pub fn project_to_tangent(p: &HyperPoint, ambient: &[f64]) -> Result<TangentVector> {
    let ip = minkowski_inner(p.coords(), ambient)?;
    let dir = ambient
        .iter()
        .zip(p.coords())
        .map(|(g, x)| g + ip * x)
        .collect();
    Ok(TangentVector { at: p.clone(), dir })
}

/// Exponential map `cosh(|v|) p + sinh(|v|) v / |v|`, re-lifted onto the
/// hyperboloid.
pub fn exp_map(t: &TangentVector) -> HyperPoint {
    let norm = t.norm();
    if norm < TINY_TANGENT {
        return t.at.clone();
    }
    let (ch, sh) = (norm.cosh(), norm.sinh() / norm);
    let spatial: Vec<f64> = t.at.coords[1..]
        .iter()
        .zip(&t.dir[1..])
        .map(|(x, v)| ch * x + sh * v)
        .collect();
    HyperPoint::lift_unchecked(&spatial)
}

/// Logarithm map at `p` towards `q` (inverse of [`exp_map`]).
pub fn log_map(p: &HyperPoint, q: &HyperPoint) -> TangentVector {
    let d = hyperbolic_distance(p, q);
    let ip = minkowski_inner_unchecked(p.coords(), q.coords());
    let raw: Vec<f64> = q.coords.iter().zip(&p.coords).map(|(b, a)| b + ip * a).collect();
    let raw_norm = minkowski_inner_unchecked(&raw, &raw).max(0.0).sqrt();
    let dir = if raw_norm < TINY_TANGENT || d == 0.0 {
        vec![0.0; raw.len()]
    } else {
        raw.iter().map(|v| v * d / raw_norm).collect()
    };
    TangentVector { at: p.clone(), dir }
}

/// Metric projection onto the ball of radius `radius` around the base point.
///
/// Points outside are moved along the geodesic from the base point so that
/// they end up at distance exactly `radius`; points inside are untouched.
pub fn project_to_ball(p: &HyperPoint, radius: f64) -> HyperPoint {
    let r = p.radius();
    // the slack absorbs the rounding of a previous projection
    if r <= radius + 4.0 * f64::EPSILON * radius.max(1.0) {
        return p.clone();
    }
    let spatial_norm = r.sinh();
    if radius <= 0.0 || spatial_norm == 0.0 {
        return HyperPoint::base(p.dim());
    }
    let factor = radius.sinh() / spatial_norm;
    let spatial: Vec<f64> = p.spatial().iter().map(|s| s * factor).collect();
    HyperPoint::lift_unchecked(&spatial)
}

/// The point at distance `radius` from the base point in the direction of
/// the unit spatial vector `direction`.
pub fn point_at(direction: &[f64], radius: f64) -> HyperPoint {
    let norm: f64 = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return HyperPoint::base(direction.len());
    }
    let s = radius.sinh() / norm;
    let spatial: Vec<f64> = direction.iter().map(|v| v * s).collect();
    HyperPoint::lift_unchecked(&spatial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut impl Rng, dim: usize, scale: f64) -> HyperPoint {
        let s: Vec<f64> = (0..dim).map(|_| rng.random_range(-scale..scale)).collect();
        HyperPoint::lift(&s).unwrap()
    }

    #[test]
    fn minkowski_examples() {
        assert_eq!(minkowski_inner(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(), -1.0);
        assert_eq!(minkowski_inner(&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(minkowski_inner(&[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0]).unwrap(), -1.0);
        assert!(matches!(
            minkowski_inner(&[1.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn distance_examples() {
        let o = HyperPoint::base(2);
        assert_eq!(hyperbolic_distance(&o, &o), 0.0);
        let p = HyperPoint::from_coords(vec![1f64.cosh(), 1f64.sinh(), 0.0]).unwrap();
        assert!((hyperbolic_distance(&p, &o) - 1.0).abs() < 1e-12);

        let (a, b) = (0.3f64, 1.7f64);
        let pa = HyperPoint::from_coords(vec![a.cosh(), a.sinh(), 0.0]).unwrap();
        let pb = HyperPoint::from_coords(vec![b.cosh(), b.sinh(), 0.0]).unwrap();
        // direct arcosh evaluation as the oracle
        let direct = (-minkowski_inner(pa.coords(), pb.coords()).unwrap()).acosh();
        assert!((direct - 1.4).abs() < 1e-12);
        assert!((hyperbolic_distance(&pa, &pb) - direct).abs() < 1e-12);
    }

    #[test]
    fn lift_examples() {
        assert_eq!(HyperPoint::lift(&[0.0, 0.0, 0.0]).unwrap(), HyperPoint::base(3));
        let p = HyperPoint::lift(&[1f64.sinh(), 0.0]).unwrap();
        assert!((p.time() - 1f64.cosh()).abs() < 1e-15);
        assert!(matches!(HyperPoint::lift(&[f64::NAN]), Err(Error::Domain(_))));
        assert!(HyperPoint::lift(&[]).is_err());
    }

    #[test]
    fn lift_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = random_point(&mut rng, 3, 4.0);
            let q = HyperPoint::lift(p.spatial()).unwrap();
            for (a, b) in p.coords().iter().zip(q.coords()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn from_coords_rejects_off_manifold() {
        assert!(HyperPoint::from_coords(vec![2.0, 0.0]).is_err());
        assert!(HyperPoint::from_coords(vec![-1.0, 0.0]).is_err());
        assert!(HyperPoint::from_coords(vec![1.0]).is_err());
    }

    #[test]
    fn tangent_projection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_point(&mut rng, 2, 1.0);
        let t = project_to_tangent(&p, p.coords()).unwrap();
        assert!(t.dir.iter().all(|v| v.abs() < 1e-12));

        // tangent at base point: zero time component
        let o = HyperPoint::base(2);
        let v = [0.0, 0.4, -0.2];
        let t = project_to_tangent(&o, &v).unwrap();
        assert_eq!(t.dir, v.to_vec());

        for _ in 0..50 {
            let p = random_point(&mut rng, 3, 2.0);
            let g: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let once = project_to_tangent(&p, &g).unwrap();
            assert!(minkowski_inner(p.coords(), &once.dir).unwrap().abs() < 1e-9);
            let twice = project_to_tangent(&p, &once.dir).unwrap();
            for (a, b) in once.dir.iter().zip(&twice.dir) {
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn exp_map_examples() {
        let o = HyperPoint::base(2);
        let zero = TangentVector { at: o.clone(), dir: vec![0.0; 3] };
        assert_eq!(exp_map(&zero), o);

        let t = TangentVector { at: o.clone(), dir: vec![0.0, 1.0, 0.0] };
        let p = exp_map(&t);
        assert!((p.time() - 1f64.cosh()).abs() < 1e-12);
        assert!((p.spatial()[0] - 1f64.sinh()).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = random_point(&mut rng, 3, 1.5);
            let g: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t = project_to_tangent(&p, &g).unwrap();
            let t = t.scaled(0.7 / t.norm());
            let q = exp_map(&t);
            assert!(q.time() >= 1.0);
            assert!((hyperbolic_distance(&p, &q) - 0.7).abs() < 1e-8);
        }
    }

    #[test]
    fn log_map_inverts_exp_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let p = random_point(&mut rng, 2, 1.0);
            let q = random_point(&mut rng, 2, 1.0);
            let back = exp_map(&log_map(&p, &q));
            assert!(hyperbolic_distance(&back, &q) < 1e-7);
        }
    }

    #[test]
    fn ball_projection_examples() {
        let o = HyperPoint::base(2);
        let inside = point_at(&[1.0, 0.0], 0.5);
        assert_eq!(project_to_ball(&inside, 1.0), inside);
        assert_eq!(project_to_ball(&inside, 0.0), o);

        let far = point_at(&[0.6, 0.8], 3.0);
        let proj = project_to_ball(&far, 2.0);
        assert!((hyperbolic_distance(&o, &proj) - 2.0).abs() < 1e-8);
        // same ray: spatial part is a positive multiple
        let ratio0 = proj.spatial()[0] / far.spatial()[0];
        let ratio1 = proj.spatial()[1] / far.spatial()[1];
        assert!(ratio0 > 0.0 && (ratio0 - ratio1).abs() < 1e-12);
    }

    #[test]
    fn restriction_validation() {
        assert!(BallRestriction::new(1.0, 2.0).is_err());
        assert!(BallRestriction::new(-1.0, 0.0).is_err());
        let b = BallRestriction::radius_only(1.5).unwrap();
        assert_eq!(b.mean_radius(), 1.5);
        let pts = vec![point_at(&[1.0, 0.0], 1.4), point_at(&[0.0, 1.0], 1.5)];
        assert!(b.contains_radius(&pts) && b.contains_mean(&pts));
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(
            a in prop::collection::vec(-3.0f64..3.0, 3),
            b in prop::collection::vec(-3.0f64..3.0, 3),
            c in prop::collection::vec(-3.0f64..3.0, 3),
        ) {
            let (p, q, r) = (
                HyperPoint::lift(&a).unwrap(),
                HyperPoint::lift(&b).unwrap(),
                HyperPoint::lift(&c).unwrap(),
            );
            let pq = hyperbolic_distance(&p, &q);
            prop_assert!(pq >= 0.0);
            prop_assert!((pq - hyperbolic_distance(&q, &p)).abs() < 1e-12);
            prop_assert_eq!(hyperbolic_distance(&p, &p), 0.0);
            let pr = hyperbolic_distance(&p, &r);
            let qr = hyperbolic_distance(&q, &r);
            prop_assert!(pr <= pq + qr + 1e-8);
            // cosh d = -<p,q>_M
            let ip = minkowski_inner(p.coords(), q.coords()).unwrap();
            prop_assert!((pq.cosh() + ip).abs() <= 1e-8 * ip.abs().max(1.0));
        }

        #[test]
        fn ball_projection_is_idempotent(
            s in prop::collection::vec(-20.0f64..20.0, 2),
            r in 0.0f64..3.0,
        ) {
            let p = HyperPoint::lift(&s).unwrap();
            let once = project_to_ball(&p, r);
            prop_assert!(once.radius() <= r + 1e-9);
            let twice = project_to_ball(&once, r);
            prop_assert_eq!(once, twice);
        }
    }
}
