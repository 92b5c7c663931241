//! Minkowski norms on a single fiber and the tensors they induce.

use nalgebra::{DMatrix, DVector};

use crate::ad::{hessian, third_derivatives, Real};
use crate::error::{GbcError, Result};

/// Anything that evaluates a norm-like function of a fiber vector over any
/// scalar type of the AD tower.
pub trait NormLike {
    fn dim(&self) -> usize;
    fn eval<T: Real>(&self, y: &[T]) -> T;

    /// `F²`; override where it avoids a square root.
    fn eval_sq<T: Real>(&self, y: &[T]) -> T {
        let f = self.eval(y);
        f * f
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MinkowskiNorm {
    Euclidean(usize),
    /// `√(yᵀ G y)`.
    Riemannian(DMatrix<f64>),
    /// `√(yᵀ A y) + b·y`, valid while `‖b‖_{A⁻¹} < 1`.
    Randers { a: DMatrix<f64>, b: DVector<f64> },
    /// `(Σ yᵢ⁴ + eps (Σ yᵢ²)²)^{1/4}`.
    Quartic { n: usize, eps: f64 },
    Sum(Box<MinkowskiNorm>, Box<MinkowskiNorm>),
}

fn quad_form<T: Real>(a: &DMatrix<f64>, y: &[T]) -> T {
    let n = y.len();
    let mut acc = T::zero();
    for i in 0..n {
        let mut row = T::zero();
        for j in 0..n {
            row += y[j].scale(a[(i, j)]);
        }
        acc += y[i] * row;
    }
    acc
}

impl MinkowskiNorm {
    pub fn randers(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() != b.len() {
            return Err(GbcError::Structural("Randers data has inconsistent dimensions".into()));
        }
        let inv = a
            .clone()
            .cholesky()
            .ok_or_else(|| GbcError::InvalidMetric("Randers α is not positive definite".into()))?
            .inverse();
        let beta_norm = (b.transpose() * &inv * &b)[(0, 0)].sqrt();
        if beta_norm >= 1.0 {
            return Err(GbcError::InvalidMetric(format!("Randers ‖β‖_α = {beta_norm} ≥ 1")));
        }
        Ok(MinkowskiNorm::Randers { a, b })
    }

    pub fn riemannian(g: DMatrix<f64>) -> Result<Self> {
        if g.nrows() != g.ncols() || (&g - g.transpose()).amax() > 1e-14 * g.amax() {
            return Err(GbcError::InvalidMetric("Riemannian matrix is not symmetric".into()));
        }
        if g.clone().cholesky().is_none() {
            return Err(GbcError::InvalidMetric("Riemannian matrix is not positive definite".into()));
        }
        Ok(MinkowskiNorm::Riemannian(g))
    }

    pub fn quartic(n: usize, eps: f64) -> Result<Self> {
        if eps < 0.0 {
            return Err(GbcError::InvalidMetric(format!("quartic eps = {eps} < 0")));
        }
        Ok(MinkowskiNorm::Quartic { n, eps })
    }
}

impl NormLike for MinkowskiNorm {
    fn dim(&self) -> usize {
        match self {
            MinkowskiNorm::Euclidean(n) | MinkowskiNorm::Quartic { n, .. } => *n,
            MinkowskiNorm::Riemannian(g) => g.nrows(),
            MinkowskiNorm::Randers { b, .. } => b.len(),
            MinkowskiNorm::Sum(a, _) => a.dim(),
        }
    }

    fn eval<T: Real>(&self, y: &[T]) -> T {
        match self {
            MinkowskiNorm::Sum(a, b) => a.eval(y) + b.eval(y),
            MinkowskiNorm::Randers { a, b } => {
                let mut beta = T::zero();
                for (i, &yi) in y.iter().enumerate() {
                    beta += yi.scale(b[i]);
                }
                quad_form(a, y).sqrt() + beta
            }
            _ => self.eval_sq(y).sqrt(),
        }
    }

    fn eval_sq<T: Real>(&self, y: &[T]) -> T {
        match self {
            MinkowskiNorm::Euclidean(_) => y.iter().fold(T::zero(), |acc, &v| acc + v * v),
            MinkowskiNorm::Riemannian(g) => quad_form(g, y),
            MinkowskiNorm::Quartic { eps, .. } => {
                let s2 = y.iter().fold(T::zero(), |acc, &v| acc + v * v);
                let s4 = y.iter().fold(T::zero(), |acc, &v| acc + v * v * v * v);
                (s4 + (s2 * s2).scale(*eps)).sqrt()
            }
            _ => {
                let f = self.eval(y);
                f * f
            }
        }
    }
}

/// The sum `F₁ + F₂` of two Minkowski norms on the same fiber.
pub fn sum_norms(a: &MinkowskiNorm, b: &MinkowskiNorm) -> Result<MinkowskiNorm> {
    if a.dim() != b.dim() {
        return Err(GbcError::Structural(format!(
            "cannot add norms of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(MinkowskiNorm::Sum(Box::new(a.clone()), Box::new(b.clone())))
}

#[derive(Clone, Debug)]
pub struct FundamentalTensor {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
}

impl FundamentalTensor {
    pub fn min_eigenvalue(&self) -> f64 {
        self.g.clone().symmetric_eigenvalues().min()
    }

    pub fn apply(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = u.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += u[i] * self.g[(i, j)] * v[j];
            }
        }
        acc
    }
}

#[derive(Clone, Debug)]
pub struct CartanTensor {
    pub n: usize,
    /// `A_{ijk}` stored at `i·n² + j·n + k`.
    pub lower: Vec<f64>,
    /// `A^j_{ik} = g^{jl} A_{lik}` stored at `j·n² + i·n + k`.
    pub raised: Vec<f64>,
}

impl CartanTensor {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.lower[(i * self.n + j) * self.n + k]
    }

    /// `A^j_{ik}`.
    pub fn up(&self, j: usize, i: usize, k: usize) -> f64 {
        self.raised[(j * self.n + i) * self.n + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.lower.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max_{ij} |y^k A_{kij}|`.
    pub fn contraction_residual(&self, y: &[f64]) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| y[k] * self.get(k, i, j)).sum();
                worst = worst.max(s.abs());
            }
        }
        worst
    }
}

fn check_direction(y: &[f64]) -> Result<()> {
    if y.iter().all(|v| *v == 0.0) {
        return Err(GbcError::Domain("fiber tensors are undefined at y = 0".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(GbcError::Domain(format!("non-finite direction {y:?}")));
    }
    Ok(())
}

/// `g_ij = ½ ∂²F²/∂yⁱ∂yʲ`, rejected unless positive definite.
pub fn fundamental_tensor_of<N: NormLike>(norm: &N, y: &[f64]) -> Result<FundamentalTensor> {
    check_direction(y)?;
    let n = norm.dim();
    let (_, _, h) = hessian(y, |v| norm.eval_sq(v));
    let g = DMatrix::from_fn(n, n, |i, j| 0.5 * h[i][j]);
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| GbcError::InvalidMetric(format!("fundamental tensor not positive definite at y = {y:?}")))?;
    Ok(FundamentalTensor { g_inv: chol.inverse(), g })
}

/// `A_ijk = (F/4) ∂³F²/∂yⁱ∂yʲ∂yᵏ` together with its raised form.
pub fn cartan_tensor_of<N: NormLike>(norm: &N, y: &[f64]) -> Result<CartanTensor> {
    let ft = fundamental_tensor_of(norm, y)?;
    let n = norm.dim();
    let f = norm.eval(y);
    let t = third_derivatives(y, |v| norm.eval_sq(v));
    let mut lower = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                lower[(i * n + j) * n + k] = 0.25 * f * t[i][j][k];
            }
        }
    }
    let mut raised = vec![0.0; n * n * n];
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                raised[(j * n + i) * n + k] = (0..n).map(|l| ft.g_inv[(j, l)] * lower[(l * n + i) * n + k]).sum();
            }
        }
    }
    Ok(CartanTensor { n, lower, raised })
}

/// A g-orthonormal frame whose rows are `e_i = B_i^k 𝔰_k`, with `e_n = ℓ`.
#[derive(Clone, Debug)]
pub struct OrthonormalFrame {
    pub b: DMatrix<f64>,
}

impl OrthonormalFrame {
    pub fn ell(&self) -> Vec<f64> {
        let n = self.b.nrows();
        self.b.row(n - 1).iter().copied().collect()
    }

    pub fn det_inverse(&self) -> f64 {
        1.0 / self.b.determinant()
    }
}

/// Gram–Schmidt against `g` with `ℓ = y/F` fixed as the last vector.
///
/// The coordinate vector most nearly parallel to `ℓ` is dropped; the rest are
/// orthonormalised in index order and `e_1` is flipped if needed so that
/// `det B > 0`.
pub fn orthonormal_frame_of<N: NormLike>(norm: &N, y: &[f64]) -> Result<OrthonormalFrame> {
    let ft = fundamental_tensor_of(norm, y)?;
    let n = norm.dim();
    let f = norm.eval(y);
    let ell: Vec<f64> = y.iter().map(|v| v / f).collect();
    let residual = |k: usize| -> Vec<f64> {
        let mut s = vec![0.0; n];
        s[k] = 1.0;
        let c = ft.apply(&s, &ell);
        s.iter().zip(&ell).map(|(a, b)| a - c * b).collect()
    };
    let drop = (0..n)
        .map(|k| {
            let r = residual(k);
            (k, ft.apply(&r, &r))
        })
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in (0..n).filter(|&k| k != drop) {
        let mut v = residual(k);
        for e in &rows {
            let c = ft.apply(&v, e);
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi -= c * ei;
            }
        }
        let norm2 = ft.apply(&v, &v);
        if norm2 <= 1e-24 {
            return Err(GbcError::InvalidMetric("degenerate Gram–Schmidt step".into()));
        }
        let s = norm2.sqrt();
        rows.push(v.iter().map(|x| x / s).collect());
    }
    rows.push(ell);
    let mut b = DMatrix::from_fn(n, n, |i, k| rows[i][k]);
    if b.determinant() < 0.0 {
        for k in 0..n {
            b[(0, k)] = -b[(0, k)];
        }
    }
    Ok(OrthonormalFrame { b })
}

/// `max_{ij} |g(e_i, e_j) − δ_ij|`.
pub fn orthogonality_check(ft: &FundamentalTensor, frame: &OrthonormalFrame) -> f64 {
    let m = &frame.b * &ft.g * frame.b.transpose();
    (m - DMatrix::identity(ft.g.nrows(), ft.g.nrows())).amax()
}

/// Relative homogeneity defect `|F(λy) − λF(y)| / (λF(y))`.
pub fn homogeneity_defect<N: NormLike>(norm: &N, y: &[f64], lambda: f64) -> f64 {
    let scaled: Vec<f64> = y.iter().map(|v| lambda * v).collect();
    let f = norm.eval(y);
    (norm.eval(&scaled) - lambda * f).abs() / (lambda * f)
}

/// The two non-negative terms of `g̃(X,X)` for `F̃ = F₁ + F₂`:
/// `(g₁(y/F₁,X) + g₂(y/F₂,X))²` and `F̃ (F₁_yy + F₂_yy)(X,X)`.
pub fn sum_decomposition(f1: &MinkowskiNorm, f2: &MinkowskiNorm, y: &[f64], x: &[f64]) -> Result<(f64, f64)> {
    let mut square = 0.0;
    let mut convex = 0.0;
    let total = f1.eval(y) + f2.eval(y);
    for norm in [f1, f2] {
        let ft = fundamental_tensor_of(norm, y)?;
        let f = norm.eval(y);
        let ell: Vec<f64> = y.iter().map(|v| v / f).collect();
        let gx = ft.apply(&ell, x);
        square += gx;
        convex += (ft.apply(x, x) - gx * gx) / f;
    }
    Ok((square * square, total * convex))
}
