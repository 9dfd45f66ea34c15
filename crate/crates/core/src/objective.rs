//! Objective oracles and the benchmark problem generators.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::manifold::{Manifold, Point, Tangent};

/// Value and Riemannian gradient of a geodesically convex function.
///
/// Inputs are assumed to be valid points of the problem's manifold; the
/// solvers only ever query points produced by the geometry kernel.
pub trait Objective: Send + Sync + fmt::Debug {
    fn value(&self, p: &Point) -> f64;

    fn gradient(&self, p: &Point) -> Tangent;

    fn value_and_gradient(&self, p: &Point) -> (f64, Tangent) {
        (self.value(p), self.gradient(p))
    }

    /// The quadratic data, when the objective is `x -> 0.5 x^T A x` on R^n.
    fn quadratic(&self) -> Option<&QuadraticSpec> {
        None
    }
}

/// `f(x) = 0.5 x^T A x` with `A = U diag(eigenvalues) U^T` positive definite.
#[derive(Clone, Debug)]
pub struct QuadraticSpec {
    eigenvalues: DVector<f64>,
    basis: DMatrix<f64>,
    matrix: DMatrix<f64>,
}

impl QuadraticSpec {
    /// Eigenvalues equally spaced in `[eig_lo, eig_hi]`, eigenbasis from the
    /// sign-normalized QR factorization of a seeded standard-normal matrix.
    pub fn generate(n: usize, eig_lo: f64, eig_hi: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("quadratic dimension must be at least 1"));
        }
        if !(eig_lo > 0.0) || !(eig_hi >= eig_lo) || !eig_hi.is_finite() {
            return Err(invalid(format!(
                "eigenvalue range must satisfy 0 < lo <= hi, got [{eig_lo}, {eig_hi}]"
            )));
        }
        let eigenvalues = DVector::from_fn(n, |i, _| {
            if n == 1 {
                eig_lo
            } else {
                eig_lo + (eig_hi - eig_lo) * i as f64 / (n - 1) as f64
            }
        });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        Ok(Self::from_parts(eigenvalues, q))
    }

    pub fn diagonal(eigenvalues: &[f64]) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(invalid("quadratic dimension must be at least 1"));
        }
        if eigenvalues.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(invalid("matrix is not positive definite"));
        }
        let n = eigenvalues.len();
        Ok(Self::from_parts(
            DVector::from_column_slice(eigenvalues),
            DMatrix::identity(n, n),
        ))
    }

    /// Accepts any symmetric positive definite matrix.
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(invalid("matrix must be square and nonempty"));
        }
        let scale = 1.0 + a.amax();
        if (&a - a.transpose()).amax() > 1e-12 * scale {
            return Err(invalid("matrix is not symmetric"));
        }
        let eig = SymmetricEigen::new(a.clone());
        if eig.eigenvalues.iter().any(|&d| !(d > 0.0)) {
            return Err(invalid("matrix is not positive definite"));
        }
        Ok(QuadraticSpec {
            eigenvalues: eig.eigenvalues,
            basis: eig.eigenvectors,
            matrix: a,
        })
    }

    fn from_parts(eigenvalues: DVector<f64>, basis: DMatrix<f64>) -> Self {
        let scaled = &basis * DMatrix::from_diagonal(&eigenvalues);
        let a = &scaled * basis.transpose();
        let matrix = (&a + a.transpose()) * 0.5;
        QuadraticSpec {
            eigenvalues,
            basis,
            matrix,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthogonal eigenbasis `U`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.max()
    }
}

impl Objective for QuadraticSpec {
    fn value(&self, p: &Point) -> f64 {
        0.5 * p.0.dot(&(&self.matrix * &p.0))
    }

    fn gradient(&self, p: &Point) -> Tangent {
        Tangent::raw(p.clone(), &self.matrix * &p.0)
    }

    fn value_and_gradient(&self, p: &Point) -> (f64, Tangent) {
        let ax = &self.matrix * &p.0;
        (0.5 * p.0.dot(&ax), Tangent::raw(p.clone(), ax))
    }

    fn quadratic(&self) -> Option<&QuadraticSpec> {
        Some(self)
    }
}

/// `f(p) = 0.5 * sum_i w_i d^2(p, a_i)`.
#[derive(Clone, Debug)]
pub struct FrechetObjective {
    manifold: Manifold,
    anchors: Vec<Point>,
    weights: Vec<f64>,
}

impl FrechetObjective {
    pub fn anchors(&self) -> &[Point] {
        &self.anchors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Objective for FrechetObjective {
    fn value(&self, p: &Point) -> f64 {
        self.anchors
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| {
                let d = self.manifold.distance_unchecked(p, a);
                0.5 * w * d * d
            })
            .sum()
    }

    fn gradient(&self, p: &Point) -> Tangent {
        // grad of 0.5 d^2(., a) at p is -log_p(a)
        let mut g = DVector::zeros(self.manifold.ambient_dim());
        for (a, w) in self.anchors.iter().zip(&self.weights) {
            g -= self.manifold.log_unchecked(p, a).into_vec() * *w;
        }
        Tangent::raw(p.clone(), g)
    }

    fn value_and_gradient(&self, p: &Point) -> (f64, Tangent) {
        let mut g = DVector::zeros(self.manifold.ambient_dim());
        let mut f = 0.0;
        for (a, w) in self.anchors.iter().zip(&self.weights) {
            let v = self.manifold.log_unchecked(p, a);
            let d = self.manifold.norm(&v);
            f += 0.5 * w * d * d;
            g -= v.into_vec() * *w;
        }
        (f, Tangent::raw(p.clone(), g))
    }
}

/// Reproducible description of a shipped problem, stored with every run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Quadratic {
        dim: usize,
        eig_lo: f64,
        eig_hi: f64,
        seed: u64,
    },
    /// `0.5 * sum_i d_i x_i^2` in the standard basis.
    DiagonalQuadratic { eigenvalues: Vec<f64> },
    FrechetMean {
        manifold: Manifold,
        anchors: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<ProblemInstance> {
        match self {
            ProblemSpec::Quadratic {
                dim,
                eig_lo,
                eig_hi,
                seed,
            } => make_quadratic(*dim, *eig_lo, *eig_hi, *seed),
            ProblemSpec::DiagonalQuadratic { eigenvalues } => {
                let label = format!("diag-quadratic-n{}", eigenvalues.len());
                Ok(quadratic_from_spec(QuadraticSpec::diagonal(eigenvalues)?, label)?.with_spec(self.clone()))
            }
            ProblemSpec::FrechetMean {
                manifold,
                anchors,
                weights,
            } => {
                let pts: Vec<Point> = anchors.iter().map(|a| Point::new(a.clone())).collect();
                make_frechet_mean(*manifold, &pts, weights)
            }
        }
    }
}

/// A minimization problem: manifold, oracle and whatever is known about its
/// solution. Immutable once built and cheap to clone.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    manifold: Manifold,
    objective: Arc<dyn Objective>,
    f_star: Option<f64>,
    p_star: Option<Point>,
    lipschitz: Option<f64>,
    label: String,
    spec: Option<ProblemSpec>,
}

impl ProblemInstance {
    pub fn new(manifold: Manifold, objective: Arc<dyn Objective>, label: impl Into<String>) -> Self {
        ProblemInstance {
            manifold,
            objective,
            f_star: None,
            p_star: None,
            lipschitz: None,
            label: label.into(),
            spec: None,
        }
    }

    /// Attaches a known minimizer; rejects it unless its gradient vanishes and
    /// (when given) its value matches `f_star`.
    pub fn with_optimum(mut self, p_star: Point, f_star: Option<f64>) -> Result<Self> {
        self.manifold.validate_point(&p_star)?;
        let (f, g) = self.objective.value_and_gradient(&p_star);
        let gn = self.manifold.norm(&g);
        if gn > 1e-8 {
            return Err(invalid(format!("claimed minimizer has gradient norm {gn:e}")));
        }
        if let Some(fs) = f_star {
            if (f - fs).abs() > 1e-10 {
                return Err(invalid(format!("f(p*) = {f} disagrees with f* = {fs}")));
            }
        }
        self.p_star = Some(p_star);
        self.f_star = Some(f_star.unwrap_or(f));
        Ok(self)
    }

    pub fn with_f_star(mut self, f_star: f64) -> Self {
        self.f_star = Some(f_star);
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Result<Self> {
        if !(l > 0.0) {
            return Err(invalid("smoothness constant must be positive"));
        }
        self.lipschitz = Some(l);
        Ok(self)
    }

    pub fn with_spec(mut self, spec: ProblemSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn objective(&self) -> &dyn Objective {
        self.objective.as_ref()
    }

    pub fn value(&self, p: &Point) -> f64 {
        self.objective.value(p)
    }

    pub fn gradient(&self, p: &Point) -> Tangent {
        self.objective.gradient(p)
    }

    pub fn value_and_gradient(&self, p: &Point) -> (f64, Tangent) {
        self.objective.value_and_gradient(p)
    }

    pub fn quadratic(&self) -> Option<&QuadraticSpec> {
        self.objective.quadratic()
    }

    pub fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    pub fn p_star(&self) -> Option<&Point> {
        self.p_star.as_ref()
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn spec(&self) -> Option<&ProblemSpec> {
        self.spec.as_ref()
    }
}

/// Strongly convex quadratic benchmark on R^n.
pub fn make_quadratic(n: usize, eig_lo: f64, eig_hi: f64, seed: u64) -> Result<ProblemInstance> {
    let spec = QuadraticSpec::generate(n, eig_lo, eig_hi, seed)?;
    let m = Manifold::euclidean(n)?;
    ProblemInstance::new(m, Arc::new(spec), format!("quadratic-n{n}-s{seed}"))
        .with_optimum(m.origin(), Some(0.0))?
        .with_lipschitz(eig_hi)
        .map(|p| {
            p.with_spec(ProblemSpec::Quadratic {
                dim: n,
                eig_lo,
                eig_hi,
                seed,
            })
        })
}

/// Quadratic built from an explicit SPD matrix (no generator spec attached).
pub fn quadratic_from_spec(spec: QuadraticSpec, label: impl Into<String>) -> Result<ProblemInstance> {
    let m = Manifold::euclidean(spec.dim())?;
    let l = spec.max_eigenvalue();
    ProblemInstance::new(m, Arc::new(spec), label)
        .with_optimum(m.origin(), Some(0.0))?
        .with_lipschitz(l)
}

/// `0.5 * sum_i d_i x_i^2`, minimized at the origin.
pub fn make_diagonal_quadratic(eigenvalues: &[f64]) -> Result<ProblemInstance> {
    ProblemSpec::DiagonalQuadratic {
        eigenvalues: eigenvalues.to_vec(),
    }
    .build()
}

/// Weighted Fréchet mean: minimize `0.5 * sum_i w_i d^2(p, a_i)`.
pub fn make_frechet_mean(m: Manifold, anchors: &[Point], weights: &[f64]) -> Result<ProblemInstance> {
    if anchors.is_empty() {
        return Err(invalid("at least one anchor is required"));
    }
    if anchors.len() != weights.len() {
        return Err(invalid(format!(
            "{} anchors but {} weights",
            anchors.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(invalid("weights must be positive"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("weights sum to {total}, expected 1")));
    }
    for a in anchors {
        m.validate_point(a)?;
    }
    let objective = FrechetObjective {
        manifold: m,
        anchors: anchors.to_vec(),
        weights: weights.to_vec(),
    };
    let spec = ProblemSpec::FrechetMean {
        manifold: m,
        anchors: anchors.iter().map(Point::to_vec).collect(),
        weights: weights.to_vec(),
    };
    let label = format!("frechet-{}-k{}", geometry_name(&m), anchors.len());
    let mut problem = ProblemInstance::new(m, Arc::new(objective), label).with_spec(spec);
    if m.is_euclidean() {
        problem = problem.with_lipschitz(1.0)?;
    }
    if anchors.len() == 1 {
        problem = problem.with_optimum(anchors[0].clone(), Some(0.0))?;
    } else if anchors.len() == 2 && (weights[0] - weights[1]).abs() < 1e-15 {
        let mid = m.geodesic_point(&anchors[0], &anchors[1], 0.5)?;
        problem = problem.with_optimum(mid, None)?;
    }
    Ok(problem)
}

fn geometry_name(m: &Manifold) -> &'static str {
    match m {
        Manifold::Euclidean(_) => "euclidean",
        Manifold::Hyperboloid(_) => "hyperboloid",
    }
}

/// Seeded starting point: coordinates uniform in `[-3, 3]` (Euclidean), or the
/// exponential of such a tangent at the hyperboloid origin.
pub fn initial_point(problem: &ProblemInstance, seed: u64) -> Point {
    let m = problem.manifold();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let n = m.dim();
    let spatial: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..=3.0)).collect();
    match m {
        Manifold::Euclidean(_) => Point::new(spatial),
        Manifold::Hyperboloid(_) => {
            let o = m.origin();
            let mut v = DVector::zeros(n + 1);
            for (i, s) in spatial.into_iter().enumerate() {
                v[i + 1] = s;
            }
            m.exp_unchecked(&o, &v)
        }
    }
}
