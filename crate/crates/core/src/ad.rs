//! Forward-mode automatic differentiation with nestable dual numbers.
//!
//! `Dual<T>` carries a value and one tangent. Nesting `Dual<Dual<Dual<f64>>>`
//! with three seed directions yields every mixed partial up to third order
//! along those directions in a single evaluation. All metric kernels are
//! written generically over [`Real`] so the same code evaluates plain values,
//! gradients, Hessians and third derivatives.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Scalar field usable by the generic metric and vector-field kernels.
pub trait Real:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    fn cst(v: f64) -> Self;
    /// Value with every infinitesimal part dropped.
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan2(self, x: Self) -> Self;

    #[inline]
    fn zero() -> Self {
        Self::cst(0.0)
    }
    #[inline]
    fn one() -> Self {
        Self::cst(1.0)
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * Self::cst(s)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        let mut acc = Self::one();
        let base = if n < 0 { Self::one() / self } else { self };
        for _ in 0..n.unsigned_abs() {
            acc *= base;
        }
        acc
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
}

/// Dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Real> Dual<T> {
    #[inline]
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }
    #[inline]
    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }
    #[inline]
    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::one() }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.re;
        let q = self.re * inv;
        Dual::new(q, (self.eps - q * o.eps) * inv)
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Real> AddAssign for Dual<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Dual<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> MulAssign for Dual<T> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Real> Real for Dual<T> {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }
    #[inline]
    fn value(&self) -> f64 {
        self.re.value()
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (s + s))
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        let lower = self.re.powf(p - 1.0);
        Dual::new(lower * self.re, self.eps * lower.scale(p))
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }
    #[inline]
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
    #[inline]
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.eps * self.re.sin()))
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        let r2 = x.re * x.re + self.re * self.re;
        Dual::new(self.re.atan2(x.re), (x.re * self.eps - self.re * x.eps) / r2)
    }
}

pub type D1 = Dual<f64>;
pub type D2 = Dual<Dual<f64>>;
pub type D3 = Dual<Dual<Dual<f64>>>;

/// Seeds a second-order nested dual: `value + a·ε₁ + b·ε₂`.
#[inline]
pub fn seed2(value: f64, a: f64, b: f64) -> D2 {
    Dual::new(Dual::new(value, b), Dual::new(a, 0.0))
}

/// Seeds a third-order nested dual: `value + a·ε₁ + b·ε₂ + c·ε₃`.
#[inline]
pub fn seed3(value: f64, a: f64, b: f64, c: f64) -> D3 {
    Dual::new(
        Dual::new(Dual::new(value, c), Dual::new(b, 0.0)),
        Dual::new(Dual::new(a, 0.0), Dual::new(0.0, 0.0)),
    )
}

/// Components of a third-order nested dual, indexed as partial derivatives
/// along the three seed directions.
#[derive(Clone, Copy, Debug, Default)]
pub struct Partials3 {
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d12: f64,
    pub d13: f64,
    pub d23: f64,
    pub d123: f64,
}

impl From<D3> for Partials3 {
    fn from(v: D3) -> Self {
        Partials3 {
            f: v.re.re.re,
            d3: v.re.re.eps,
            d2: v.re.eps.re,
            d23: v.re.eps.eps,
            d1: v.eps.re.re,
            d13: v.eps.re.eps,
            d12: v.eps.eps.re,
            d123: v.eps.eps.eps,
        }
    }
}

/// Value, gradient and Hessian of a scalar function of `n` variables via
/// `n(n+1)/2` second-order dual evaluations.
pub fn hessian<F>(x: &[f64], f: F) -> (f64, Vec<f64>, Vec<Vec<f64>>)
where
    F: Fn(&[D2]) -> D2,
{
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut hess = vec![vec![0.0; n]; n];
    let mut value = 0.0;
    let mut args = Vec::with_capacity(n);
    for i in 0..n {
        for j in i..n {
            args.clear();
            args.extend((0..n).map(|k| {
                seed2(
                    x[k],
                    if k == i { 1.0 } else { 0.0 },
                    if k == j { 1.0 } else { 0.0 },
                )
            }));
            let r = f(&args);
            value = r.re.re;
            grad[i] = r.eps.re;
            grad[j] = r.re.eps;
            hess[i][j] = r.eps.eps;
            hess[j][i] = r.eps.eps;
        }
    }
    if n == 0 {
        value = f(&[]).re.re;
    }
    (value, grad, hess)
}

/// Fully symmetric third-derivative tensor of a scalar function of `n`
/// variables, evaluated over the `C(n+2,3)` sorted index triples.
pub fn third_derivatives<F>(x: &[f64], f: F) -> Vec<Vec<Vec<f64>>>
where
    F: Fn(&[D3]) -> D3,
{
    let n = x.len();
    let mut t = vec![vec![vec![0.0; n]; n]; n];
    let mut args = Vec::with_capacity(n);
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                args.clear();
                args.extend((0..n).map(|m| {
                    seed3(
                        x[m],
                        (m == i) as u8 as f64,
                        (m == j) as u8 as f64,
                        (m == k) as u8 as f64,
                    )
                }));
                let v = Partials3::from(f(&args)).d123;
                for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                    t[a][b][c] = v;
                }
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly<T: Real>(x: T, y: T) -> T {
        x * x * y + (x * y).sin() + y.exp()
    }

    #[test]
    fn first_derivative_matches_closed_form() {
        let x = D1::variable(0.7);
        let y = D1::constant(1.3);
        let r = poly(x, y);
        let expected = 2.0 * 0.7 * 1.3 + (0.7f64 * 1.3).cos() * 1.3;
        assert!((r.eps - expected).abs() < 1e-14);
    }

    #[test]
    fn third_mixed_partial_matches_closed_form() {
        // d/dx d/dx d/dy of x²y + sin(xy) + e^y
        let (x, y) = (0.4, -0.9);
        let t = third_derivatives(&[x, y], |v| poly(v[0], v[1]));
        let s = x * y;
        // f_xxy = 2 - 2y sin(s) - x y² cos(s)
        let expected = 2.0 - 2.0 * y * s.sin() - x * y * y * s.cos();
        assert!((t[0][0][1] - expected).abs() < 1e-13);
        assert_eq!(t[0][1][0], t[1][0][0]);
    }

    #[test]
    fn hessian_of_quadratic_is_exact() {
        let (v, g, h) = hessian(&[1.0, 2.0], |a| a[0] * a[0].scale(3.0) + a[0] * a[1]);
        assert_eq!(v, 5.0);
        assert_eq!(g, vec![8.0, 1.0]);
        assert_eq!(h, vec![vec![6.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn atan2_derivative() {
        let y = D1::variable(1.0);
        let x = D1::constant(1.0);
        assert!((y.atan2(x).eps - 0.5).abs() < 1e-15);
    }

    #[test]
    fn powf_and_powi_agree() {
        let x = D2::cst(1.7) + seed2(0.0, 1.0, 1.0);
        let a = x.powf(3.0);
        let b = x.powi(3);
        assert!((a.eps.eps - b.eps.eps).abs() < 1e-12);
    }
}
