//! Frank-Wolfe core for Lasso over the unit l1 ball.
//!
//! The loss is `L(theta) = ||X theta - y||^2 / (2N)` and the feasible set is
//! `||theta||_1 <= 1`, whose extreme points are the `2d` signed basis
//! vectors. Vertices are indexed `1..=2d`: index `s <= d` is `+e_s`, index
//! `s > d` is `-e_(s-d)`. Each iteration picks the vertex minimizing the
//! directional derivative `<vertex, grad L>` and moves with step
//! `mu_t = 2 / (t + 2)`, so the iterate after `t` steps is a convex
//! combination of at most `t + 1` vertices and stays feasible by
//! construction.
//!
//! [`AlphaVector`] stores the `d` base partial derivatives; the value at a
//! negative vertex is the exact negation of its positive twin, so the length
//! `2d` view is antisymmetric with no extra storage.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{Purpose, Stream};

/// Splits a vertex index `s in 1..=2d` into `(zero-based coordinate, sign)`.
pub fn vertex_coord(s: usize, d: usize) -> (usize, f64) {
    assert!(s >= 1 && s <= 2 * d, "vertex index {s} out of 1..={}", 2 * d);
    if s <= d {
        (s - 1, 1.0)
    } else {
        (s - d - 1, -1.0)
    }
}

/// Frank-Wolfe step size at iteration `t` (1-based).
pub fn step_size(t: usize) -> f64 {
    2.0 / (t as f64 + 2.0)
}

/// Sparse iterate: a map from zero-based coordinate to coefficient plus the
/// iteration counter it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseIterate {
    d: usize,
    t: usize,
    coeffs: BTreeMap<usize, f64>,
}

impl SparseIterate {
    /// The all-zero iterate (not a vertex; useful as a gradient probe point).
    pub fn zero(d: usize) -> SparseIterate {
        SparseIterate {
            d,
            t: 1,
            coeffs: BTreeMap::new(),
        }
    }

    /// The signed vertex with index `s in 1..=2d`.
    pub fn vertex(d: usize, s: usize) -> SparseIterate {
        let (coord, sign) = vertex_coord(s, d);
        let mut coeffs = BTreeMap::new();
        coeffs.insert(coord, sign);
        SparseIterate { d, t: 1, coeffs }
    }

    /// Uniformly random signed vertex; every fitter draws its start from the
    /// same `(seed, InitVertex)` stream so equal seeds share an initial point.
    pub fn random_vertex(d: usize, seed: u64) -> SparseIterate {
        let s = 1 + Stream::new(seed, Purpose::InitVertex).below(2 * d as u64) as usize;
        SparseIterate::vertex(d, s)
    }

    /// Feature dimension d.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Iteration counter (1 for a fresh vertex).
    pub fn t(&self) -> usize {
        self.t
    }

    /// Number of stored nonzero coefficients.
    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient at zero-based coordinate `j`.
    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(&j).copied().unwrap_or(0.0)
    }

    /// Iterates over `(coordinate, coefficient)` pairs in coordinate order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs.iter().map(|(&j, &c)| (j, c))
    }

    /// Sum of absolute coefficients.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.abs()).sum()
    }

    /// Dense copy, length d.
    pub fn to_dense(&self) -> Array1<f64> {
        let mut out = Array1::zeros(self.d);
        for (&j, &c) in &self.coeffs {
            out[j] = c;
        }
        out
    }
}

/// One Frank-Wolfe update: `(1 - mu_t) * theta + mu_t * vertex(k)`.
/// Coefficients that land exactly on zero are dropped so the support size
/// never exceeds the number of steps taken plus one.
pub fn fw_step(theta: &SparseIterate, k: usize, t: usize) -> SparseIterate {
    assert!(t >= 1, "iteration counter must be >= 1");
    let d = theta.d;
    let (coord, sign) = vertex_coord(k, d);
    let mu = step_size(t);
    let mut coeffs: BTreeMap<usize, f64> = theta
        .coeffs
        .iter()
        .map(|(&j, &c)| (j, (1.0 - mu) * c))
        .collect();
    let updated = coeffs.get(&coord).copied().unwrap_or(0.0) + mu * sign;
    if updated == 0.0 {
        coeffs.remove(&coord);
    } else {
        coeffs.insert(coord, updated);
    }
    SparseIterate {
        d,
        t: t + 1,
        coeffs,
    }
}

/// The `d` base partial derivatives of the loss; values at the `2d` signed
/// vertices are read through [`AlphaVector::value`], which negates the base
/// entry for indices above `d`, keeping antisymmetry exact.
#[derive(Debug, Clone)]
pub struct AlphaVector {
    base: Array1<f64>,
}

impl AlphaVector {
    /// Wraps precomputed base derivatives.
    pub fn from_base(base: Array1<f64>) -> AlphaVector {
        AlphaVector { base }
    }

    /// Feature dimension d.
    pub fn d(&self) -> usize {
        self.base.len()
    }

    /// Base slice (values at the positive vertices).
    pub fn base(&self) -> &Array1<f64> {
        &self.base
    }

    /// Directional derivative at signed vertex `s in 1..=2d`.
    pub fn value(&self, s: usize) -> f64 {
        let (coord, sign) = vertex_coord(s, self.d());
        sign * self.base[coord]
    }

    /// Index (1-based, over all `2d` signed vertices) of the smallest value;
    /// ties resolve to the lowest index.
    pub fn argmin_vertex(&self) -> usize {
        let mut best = 1;
        let mut best_val = self.value(1);
        for s in 2..=2 * self.d() {
            let v = self.value(s);
            if v < best_val {
                best = s;
                best_val = v;
            }
        }
        best
    }
}

/// Loss `||X theta - y||^2 / (2N)`.
pub fn loss(ds: &Dataset, theta: &SparseIterate) -> f64 {
    let z = residual(ds, theta);
    z.iter().map(|v| v * v).sum::<f64>() / (2.0 * ds.n() as f64)
}

/// Residual `y - X theta`, using the sparsity of the iterate.
pub fn residual(ds: &Dataset, theta: &SparseIterate) -> Array1<f64> {
    let mut z = ds.y().clone();
    for (j, c) in theta.iter() {
        z.scaled_add(-c, &ds.x().column(j));
    }
    z
}

/// Exact gradient slice at `theta`: base entry `j` is
/// `-<X column j, y - X theta> / N`.
pub fn gradient_slice(ds: &Dataset, theta: &SparseIterate) -> AlphaVector {
    let z = residual(ds, theta);
    let xt_view = ds.x().t();
    let xt = xt_view.as_standard_layout();
    let n = ds.n() as f64;
    // Contiguous per-row dots, so every gradient path in the crate reduces
    // in the same order and frozen noisy values agree bit for bit.
    let base = Array1::from_shape_fn(ds.d(), |j| -xt.row(j).dot(&z) / n);
    AlphaVector::from_base(base)
}

/// How to bound the curvature constant of the quadratic loss over the ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureMethod {
    /// `(2 max_j ||X column j||_2)^2 / N`; valid for any d.
    Upper,
    /// Exact maximum of `||X(u - v)||^2 / N` over signed-vertex pairs, by
    /// enumeration; restricted to `d <= 64`.
    ExactVertex,
}

/// Curvature bound for the dataset's quadratic loss. For this loss the
/// vertex-pair enumeration is exact: the curvature supremum is attained at
/// extreme points of the ball.
pub fn curvature_bound(ds: &Dataset, method: CurvatureMethod) -> Result<f64> {
    let n = ds.n() as f64;
    match method {
        CurvatureMethod::Upper => {
            let m = ds.max_column_norm();
            Ok((2.0 * m).powi(2) / n)
        }
        CurvatureMethod::ExactVertex => {
            let d = ds.d();
            if d > 64 {
                return Err(Error::invalid(format!(
                    "ExactVertex curvature enumerates column pairs; d = {d} exceeds 64"
                )));
            }
            // ||X(u - v)|| over signed vertices reduces to column sums and
            // differences: u = -v gives 2 X_i, otherwise X_i -+ X_j.
            let x = ds.x();
            let mut best = 0.0f64;
            for i in 0..d {
                let ci = x.column(i);
                let self_pair = 4.0 * ci.iter().map(|v| v * v).sum::<f64>();
                best = best.max(self_pair);
                for j in (i + 1)..d {
                    let cj = x.column(j);
                    let (mut diff, mut sum) = (0.0, 0.0);
                    for (a, b) in ci.iter().zip(cj.iter()) {
                        diff += (a - b) * (a - b);
                        sum += (a + b) * (a + b);
                    }
                    best = best.max(diff).max(sum);
                }
            }
            Ok(best / n)
        }
    }
}

/// Gradient-entry bound `||X||_F (||X||_F + ||y||_2) / N`; every directional
/// derivative over the ball lies within it in absolute value.
pub fn lipschitz_bound(ds: &Dataset) -> f64 {
    let fro = ds.frobenius_norm();
    fro * (fro + ds.y_norm()) / ds.n() as f64
}

/// Output of a fitting run.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Final iterate.
    pub iterate: SparseIterate,
    /// Vertex index chosen at each iteration (length `t_total - 1`).
    pub chosen_indices: Vec<usize>,
    /// Loss after each iteration (length `t_total - 1`).
    pub losses: Vec<f64>,
    /// Loss of the initial vertex.
    pub initial_loss: f64,
    /// Iteration horizon T (the run performs `T - 1` update steps).
    pub t_total: usize,
    /// Curvature bound of the instance (Upper method).
    pub cf_bound: f64,
    /// Gradient-entry bound of the instance.
    pub l1_bound: f64,
    /// Final loss minus a reference optimum, when one has been supplied.
    pub excess_risk: Option<f64>,
}

impl FitReport {
    /// Loss of the final iterate.
    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(self.initial_loss)
    }

    /// Fills `excess_risk` from a reference optimal loss.
    pub fn record_excess_risk(&mut self, reference_loss: f64) {
        self.excess_risk = Some(self.final_loss() - reference_loss);
    }
}

/// Exact (noise-free) Frank-Wolfe for `t_total - 1` steps from a random
/// signed vertex. `t_total = 1` returns the initial vertex untouched.
pub fn fit_nonprivate(ds: &Dataset, t_total: usize, seed: u64) -> Result<FitReport> {
    if t_total == 0 {
        return Err(Error::invalid("iteration horizon must be >= 1"));
    }
    let n = ds.n() as f64;
    let d = ds.d();
    // Contiguous copy of X^T so the per-iteration gradient is a plain
    // row-major matrix-vector product.
    let xt: Array2<f64> = ds.x().t().as_standard_layout().into_owned();

    let mut theta = SparseIterate::random_vertex(d, seed);
    let mut z = residual(ds, &theta);
    let initial_loss = z.iter().map(|v| v * v).sum::<f64>() / (2.0 * n);

    let mut chosen = Vec::with_capacity(t_total - 1);
    let mut losses = Vec::with_capacity(t_total - 1);
    for t in 1..t_total {
        let base = Array1::from_shape_fn(d, |j| -xt.row(j).dot(&z) / n);
        let alpha = AlphaVector::from_base(base);
        let k = alpha.argmin_vertex();
        theta = fw_step(&theta, k, t);
        // z' = (1 - mu) z + mu (y - sign * X_k): replacing a mu-fraction of
        // the iterate with a vertex shifts the residual the same way.
        let mu = step_size(t);
        let (coord, sign) = vertex_coord(k, d);
        let col = ds.x().column(coord);
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = (1.0 - mu) * *zi + mu * (ds.y()[i] - sign * col[i]);
        }
        chosen.push(k);
        losses.push(z.iter().map(|v| v * v).sum::<f64>() / (2.0 * n));
    }

    Ok(FitReport {
        iterate: theta,
        chosen_indices: chosen,
        losses,
        initial_loss,
        t_total,
        cf_bound: curvature_bound(ds, CurvatureMethod::Upper)?,
        l1_bound: lipschitz_bound(ds),
        excess_risk: None,
    })
}

/// Loss reached by a long noise-free run; serves as the reference optimum
/// when reporting excess risk.
pub fn reference_loss(ds: &Dataset, t_ref: usize, seed: u64) -> Result<f64> {
    Ok(fit_nonprivate(ds, t_ref, seed)?.final_loss())
}
