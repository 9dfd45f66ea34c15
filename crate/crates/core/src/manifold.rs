//! Geometry kernel for the two Hadamard manifolds the solvers run on.
//!
//! Euclidean space is the flat case. Hyperbolic space uses the hyperboloid
//! (Lorentz) model: points live on the upper sheet
//! `{x : -x0^2 + x1^2 + ... + xn^2 = -1, x0 > 0}` of Minkowski space and
//! tangent vectors at `p` are the ambient vectors Minkowski-orthogonal to `p`.
//! On the tangent space the Minkowski form is positive definite, which gives
//! the Riemannian metric.
//!
//! Every operation validates its inputs and returns [`Error::InvalidInput`]
//! for points off the model surface or tangents based at the wrong point.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Points closer than this are treated as coincident by `log`.
pub const COINCIDENT_TOL: f64 = 1e-12;
/// Relative tolerance on the hyperboloid constraint `<x,x>_L = -1`.
pub const MODEL_TOL: f64 = 1e-10;

/// A Hadamard manifold together with its intrinsic dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "dim", rename_all = "lowercase")]
pub enum Manifold {
    Euclidean(usize),
    Hyperboloid(usize),
}

/// A point of a manifold, stored in ambient coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub DVector<f64>);

/// A tangent vector together with the point it is attached to.
#[derive(Clone, Debug, PartialEq)]
pub struct Tangent {
    base: Point,
    vec: DVector<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(DVector::from_vec(coords))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }
}

impl From<DVector<f64>> for Point {
    fn from(v: DVector<f64>) -> Self {
        Point(v)
    }
}

impl Tangent {
    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn vec(&self) -> &DVector<f64> {
        &self.vec
    }

    pub fn into_vec(self) -> DVector<f64> {
        self.vec
    }

    pub fn scaled(&self, a: f64) -> Tangent {
        Tangent {
            base: self.base.clone(),
            vec: &self.vec * a,
        }
    }

    /// `self + a * other`; both must share the same base point.
    pub fn axpy(&self, a: f64, other: &Tangent) -> Result<Tangent> {
        if !same_point(&self.base, &other.base) {
            return Err(invalid("tangent vectors attached to different points"));
        }
        Ok(Tangent {
            base: self.base.clone(),
            vec: &self.vec + &other.vec * a,
        })
    }

    /// Builds a tangent without validation. Callers inside the crate use this
    /// only for vectors they constructed to be tangent.
    pub(crate) fn raw(base: Point, vec: DVector<f64>) -> Tangent {
        Tangent { base, vec }
    }
}

/// Minkowski bilinear form `-x0*y0 + sum_{i>=1} xi*yi`.
pub fn minkowski(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let spatial: f64 = x.iter().zip(y.iter()).skip(1).map(|(a, b)| a * b).sum();
    spatial - x[0] * y[0]
}

fn same_point(a: &Point, b: &Point) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let scale = 1.0 + a.0.amax();
    (&a.0 - &b.0).amax() <= 1e-12 * scale
}

/// Lifts `x0` so that the point lies exactly on the hyperboloid.
fn renormalize(x: &mut DVector<f64>) {
    let spatial: f64 = x.iter().skip(1).map(|v| v * v).sum();
    x[0] = (1.0 + spatial).sqrt();
}

impl Manifold {
    pub fn euclidean(dim: usize) -> Result<Manifold> {
        if dim == 0 {
            return Err(invalid("manifold dimension must be at least 1"));
        }
        Ok(Manifold::Euclidean(dim))
    }

    pub fn hyperboloid(dim: usize) -> Result<Manifold> {
        if dim == 0 {
            return Err(invalid("manifold dimension must be at least 1"));
        }
        Ok(Manifold::Hyperboloid(dim))
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match *self {
            Manifold::Euclidean(d) | Manifold::Hyperboloid(d) => d,
        }
    }

    /// Length of the coordinate vectors used for points and tangents.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            Manifold::Euclidean(d) => d,
            Manifold::Hyperboloid(d) => d + 1,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, Manifold::Euclidean(_))
    }

    /// The origin: zero in Euclidean space, `(1, 0, ..., 0)` on the hyperboloid.
    pub fn origin(&self) -> Point {
        let mut v = DVector::zeros(self.ambient_dim());
        if let Manifold::Hyperboloid(_) = self {
            v[0] = 1.0;
        }
        Point(v)
    }

    pub fn validate_point(&self, p: &Point) -> Result<()> {
        if p.len() != self.ambient_dim() {
            return Err(invalid(format!(
                "point has {} coordinates, manifold expects {}",
                p.len(),
                self.ambient_dim()
            )));
        }
        if p.0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("point has non-finite coordinates"));
        }
        if let Manifold::Hyperboloid(_) = self {
            let x0 = p.0[0];
            if x0 <= 0.0 {
                return Err(invalid("hyperboloid point must have x0 > 0"));
            }
            let defect = (minkowski(&p.0, &p.0) + 1.0).abs();
            if defect > MODEL_TOL * x0 * x0 {
                return Err(invalid(format!(
                    "point is off the hyperboloid: |<x,x>_L + 1| = {defect:e}"
                )));
            }
        }
        Ok(())
    }

    /// Checks that `v` is attached to `p` and lies in its tangent space.
    pub fn validate_tangent(&self, p: &Point, v: &Tangent) -> Result<()> {
        if v.vec.len() != self.ambient_dim() {
            return Err(invalid("tangent vector has the wrong length"));
        }
        if !same_point(p, &v.base) {
            return Err(invalid("tangent vector is based at a different point"));
        }
        if v.vec.iter().any(|x| !x.is_finite()) {
            return Err(invalid("tangent vector has non-finite entries"));
        }
        if let Manifold::Hyperboloid(_) = self {
            let ortho = minkowski(&p.0, &v.vec).abs();
            if ortho > MODEL_TOL * (1.0 + p.0.norm() * v.vec.norm()) {
                return Err(invalid(format!(
                    "vector is not tangent: |<p,v>_L| = {ortho:e}"
                )));
            }
        }
        Ok(())
    }

    /// Wraps an ambient vector as a tangent at `p`, rejecting non-tangent input.
    pub fn tangent(&self, p: &Point, vec: DVector<f64>) -> Result<Tangent> {
        self.validate_point(p)?;
        let v = Tangent {
            base: p.clone(),
            vec,
        };
        self.validate_tangent(p, &v)?;
        Ok(v)
    }

    /// Orthogonal projection of an ambient vector onto `T_p`.
    pub fn project_tangent(&self, p: &Point, vec: DVector<f64>) -> Result<Tangent> {
        self.validate_point(p)?;
        if vec.len() != self.ambient_dim() {
            return Err(invalid("vector has the wrong length"));
        }
        let vec = match self {
            Manifold::Euclidean(_) => vec,
            Manifold::Hyperboloid(_) => {
                let c = minkowski(&p.0, &vec);
                vec + &p.0 * c
            }
        };
        Ok(Tangent {
            base: p.clone(),
            vec,
        })
    }

    pub fn zero_tangent(&self, p: &Point) -> Tangent {
        Tangent {
            base: p.clone(),
            vec: DVector::zeros(self.ambient_dim()),
        }
    }

    /// Geodesic distance.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        Ok(self.distance_unchecked(p, q))
    }

    pub(crate) fn distance_unchecked(&self, p: &Point, q: &Point) -> f64 {
        let delta = &q.0 - &p.0;
        match self {
            Manifold::Euclidean(_) => delta.norm(),
            Manifold::Hyperboloid(_) => {
                // <q-p, q-p>_L = 4 sinh^2(d/2); accurate for nearby points too.
                let chord = minkowski(&delta, &delta).max(0.0).sqrt();
                2.0 * (0.5 * chord).asinh()
            }
        }
    }

    /// Riemannian inner product of two tangents at `p`.
    pub fn inner(&self, p: &Point, u: &Tangent, v: &Tangent) -> Result<f64> {
        self.validate_point(p)?;
        self.validate_tangent(p, u)?;
        self.validate_tangent(p, v)?;
        Ok(self.inner_unchecked(&u.vec, &v.vec))
    }

    pub(crate) fn inner_unchecked(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        match self {
            Manifold::Euclidean(_) => u.dot(v),
            Manifold::Hyperboloid(_) => minkowski(u, v),
        }
    }

    pub fn norm(&self, v: &Tangent) -> f64 {
        self.inner_unchecked(&v.vec, &v.vec).max(0.0).sqrt()
    }

    /// Exponential map `exp_p(v)`.
    pub fn exp(&self, p: &Point, v: &Tangent) -> Result<Point> {
        self.validate_point(p)?;
        self.validate_tangent(p, v)?;
        Ok(self.exp_unchecked(p, &v.vec))
    }

    pub(crate) fn exp_unchecked(&self, p: &Point, v: &DVector<f64>) -> Point {
        match self {
            Manifold::Euclidean(_) => Point(&p.0 + v),
            Manifold::Hyperboloid(_) => {
                let nv = minkowski(v, v).max(0.0).sqrt();
                if nv == 0.0 {
                    return p.clone();
                }
                let mut x = &p.0 * nv.cosh() + v * (nv.sinh() / nv);
                renormalize(&mut x);
                Point(x)
            }
        }
    }

    /// Logarithm map `log_p(q)`, the inverse of `exp_p`.
    pub fn log(&self, p: &Point, q: &Point) -> Result<Tangent> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        Ok(self.log_unchecked(p, q))
    }

    pub(crate) fn log_unchecked(&self, p: &Point, q: &Point) -> Tangent {
        let delta = &q.0 - &p.0;
        let vec = match self {
            Manifold::Euclidean(_) => delta,
            Manifold::Hyperboloid(_) => {
                let d = self.distance_unchecked(p, q);
                if d < COINCIDENT_TOL {
                    DVector::zeros(delta.len())
                } else {
                    // Tangent part of q - p; its Minkowski norm is sinh(d).
                    let c = minkowski(&p.0, &delta);
                    let u = delta + &p.0 * c;
                    u * (d / d.sinh())
                }
            }
        };
        Tangent {
            base: p.clone(),
            vec,
        }
    }

    /// Point at fraction `s` of the way along the geodesic from `p` to `q`.
    pub fn geodesic_point(&self, p: &Point, q: &Point, s: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&s) {
            return Err(invalid(format!("geodesic parameter {s} outside [0, 1]")));
        }
        self.validate_point(p)?;
        self.validate_point(q)?;
        if s == 0.0 {
            return Ok(p.clone());
        }
        if s == 1.0 {
            return Ok(q.clone());
        }
        let v = self.log_unchecked(p, q);
        Ok(self.exp_unchecked(p, &(v.vec * s)))
    }

    /// Metric projection of `q` onto the closed ball of `radius` around `center`.
    pub fn project_to_ball(&self, center: &Point, radius: f64, q: &Point) -> Result<Point> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("ball radius must be positive, got {radius}")));
        }
        self.validate_point(center)?;
        self.validate_point(q)?;
        Ok(self.project_to_ball_unchecked(center, radius, q))
    }

    pub(crate) fn project_to_ball_unchecked(&self, center: &Point, radius: f64, q: &Point) -> Point {
        let d = self.distance_unchecked(center, q);
        if d <= radius {
            return q.clone();
        }
        let v = self.log_unchecked(center, q);
        self.exp_unchecked(center, &(v.vec * (radius / d)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyp_point(m: &Manifold, spatial: &[f64]) -> Point {
        let o = m.origin();
        let mut v = DVector::zeros(spatial.len() + 1);
        for (i, s) in spatial.iter().enumerate() {
            v[i + 1] = *s;
        }
        m.exp(&o, &m.tangent(&o, v).unwrap()).unwrap()
    }

    #[test]
    fn euclidean_distance_is_pythagorean() {
        let m = Manifold::euclidean(2).unwrap();
        let d = m
            .distance(&Point::new(vec![0.0, 0.0]), &Point::new(vec![3.0, 4.0]))
            .unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn hyperboloid_distances() {
        let m = Manifold::hyperboloid(2).unwrap();
        let o = Point::new(vec![1.0, 0.0, 0.0]);
        assert_eq!(m.distance(&o, &o).unwrap(), 0.0);
        let q = Point::new(vec![1f64.cosh(), 1f64.sinh(), 0.0]);
        // arccosh(cosh 1) = 1
        assert!((m.distance(&o, &q).unwrap() - 1.0).abs() < 1e-14);
        assert!((m.distance(&q, &o).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_points_off_the_model() {
        let m = Manifold::hyperboloid(2).unwrap();
        let bad = Point::new(vec![1.0, 0.5, 0.0]);
        let o = m.origin();
        assert!(m.distance(&o, &bad).is_err());
        let lower = Point::new(vec![-1.0, 0.0, 0.0]);
        assert!(m.validate_point(&lower).is_err());
        let e = Manifold::euclidean(2).unwrap();
        assert!(e.validate_point(&Point::new(vec![1.0])).is_err());
        assert!(e.validate_point(&Point::new(vec![1.0, f64::NAN])).is_err());
        assert!(Manifold::euclidean(0).is_err());
    }

    #[test]
    fn exp_examples() {
        let e = Manifold::euclidean(2).unwrap();
        let p = Point::new(vec![1.0, 1.0]);
        let v = e.tangent(&p, DVector::from_vec(vec![2.0, 0.0])).unwrap();
        assert_eq!(e.exp(&p, &v).unwrap(), Point::new(vec![3.0, 1.0]));
        assert_eq!(e.exp(&p, &e.zero_tangent(&p)).unwrap(), p);

        let h = Manifold::hyperboloid(2).unwrap();
        let o = h.origin();
        let v = h.tangent(&o, DVector::from_vec(vec![0.0, 1.0, 0.0])).unwrap();
        let q = h.exp(&o, &v).unwrap();
        assert!((q.0[0] - 1f64.cosh()).abs() < 1e-14);
        assert!((q.0[1] - 1f64.sinh()).abs() < 1e-14);
        assert!((h.distance(&o, &q).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(h.exp(&o, &h.zero_tangent(&o)).unwrap(), o);
    }

    #[test]
    fn exp_rejects_mismatched_base() {
        let e = Manifold::euclidean(2).unwrap();
        let p = Point::new(vec![1.0, 1.0]);
        let other = Point::new(vec![0.0, 1.0]);
        let v = e.tangent(&other, DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!(e.exp(&p, &v).is_err());

        let h = Manifold::hyperboloid(2).unwrap();
        let o = h.origin();
        // (1, 0, 0) is not Minkowski-orthogonal to the origin.
        assert!(h.tangent(&o, DVector::from_vec(vec![1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn log_examples() {
        let e = Manifold::euclidean(2).unwrap();
        let p = Point::new(vec![1.0, 1.0]);
        let v = e.log(&p, &Point::new(vec![3.0, 1.0])).unwrap();
        assert_eq!(v.vec().as_slice(), &[2.0, 0.0]);
        assert_eq!(e.log(&p, &p).unwrap().vec().norm(), 0.0);

        let h = Manifold::hyperboloid(3).unwrap();
        let q = hyp_point(&h, &[0.3, -0.2, 0.1]);
        assert_eq!(h.log(&q, &q).unwrap().vec().norm(), 0.0);
    }

    #[test]
    fn inner_examples() {
        let e = Manifold::euclidean(2).unwrap();
        let p = Point::new(vec![0.0, 0.0]);
        let u = e.tangent(&p, DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let v = e.tangent(&p, DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert_eq!(e.inner(&p, &u, &v).unwrap(), 0.0);

        let h = Manifold::hyperboloid(2).unwrap();
        let o = h.origin();
        let u = h.tangent(&o, DVector::from_vec(vec![0.0, 1.0, 0.0])).unwrap();
        assert_eq!(h.inner(&o, &u, &u).unwrap(), 1.0);
        let w = h.tangent(&p_of(&h), DVector::zeros(3));
        assert!(w.is_ok());
        assert!(h.inner(&o, &u, &w.unwrap()).is_err());
    }

    fn p_of(h: &Manifold) -> Point {
        let o = h.origin();
        h.exp(&o, &h.tangent(&o, DVector::from_vec(vec![0.0, 0.5, 0.5])).unwrap())
            .unwrap()
    }

    #[test]
    fn geodesic_point_examples() {
        let e = Manifold::euclidean(2).unwrap();
        let p = Point::new(vec![0.0, 0.0]);
        let q = Point::new(vec![2.0, 2.0]);
        assert_eq!(e.geodesic_point(&p, &q, 0.5).unwrap(), Point::new(vec![1.0, 1.0]));
        assert_eq!(e.geodesic_point(&p, &q, 0.0).unwrap(), p);
        assert!(e.geodesic_point(&p, &q, 1.5).is_err());
        assert!(e.geodesic_point(&p, &q, -0.1).is_err());

        let h = Manifold::hyperboloid(2).unwrap();
        let a = Point::new(vec![1f64.cosh(), 1f64.sinh(), 0.0]);
        let b = Point::new(vec![1f64.cosh(), -(1f64.sinh()), 0.0]);
        let mid = h.geodesic_point(&a, &b, 0.5).unwrap();
        assert!((&mid.0 - &h.origin().0).amax() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let e = Manifold::euclidean(2).unwrap();
        let c = Point::new(vec![0.0, 0.0]);
        let inside = Point::new(vec![0.5, 0.0]);
        assert_eq!(e.project_to_ball(&c, 1.0, &inside).unwrap(), inside);
        let out = e.project_to_ball(&c, 1.0, &Point::new(vec![3.0, 4.0])).unwrap();
        assert!((out.0[0] - 0.6).abs() < 1e-15 && (out.0[1] - 0.8).abs() < 1e-15);
        assert!(e.project_to_ball(&c, 0.0, &inside).is_err());
    }
}
