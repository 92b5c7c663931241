//! Pointwise differential forms in a fixed coordinate coframe.
//!
//! A form on a `dim`-dimensional chart is stored densely by basis mask: bit
//! `c` of the mask selects `dx^c`, and the basis element for a mask is the
//! wedge of its coordinates in increasing order. Mixed degrees are allowed.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::Zero;
use smallvec::SmallVec;

pub type Mask = u16;

/// Coefficient ring for forms: `f64` or `Complex64`.
pub trait Coeff:
    Copy
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn magnitude(&self) -> f64;
}

impl Coeff for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Coeff for Complex64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    #[inline]
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Sign of `dx^{a} ∧ dx^{b}` relative to the sorted basis element for
/// `a | b`, or `None` when the masks overlap.
#[inline]
pub fn wedge_sign(a: Mask, b: Mask) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    Some(if swaps.is_multiple_of(2) { 1.0 } else { -1.0 })
}

/// Mask and permutation sign for an index list, or `None` on repetition.
///
/// The sign is the parity of the insertion sort that orders the list.
pub fn mask_and_sign(indices: &[usize]) -> Option<(Mask, f64)> {
    let mut v: SmallVec<[usize; 8]> = indices.iter().copied().collect();
    let mut swaps = 0usize;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            swaps += 1;
            j -= 1;
        }
    }
    let mut mask: Mask = 0;
    for w in v.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    for &i in &v {
        mask |= 1 << i;
    }
    Some((mask, if swaps.is_multiple_of(2) { 1.0 } else { -1.0 }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointwiseForm<S: Coeff = f64> {
    dim: usize,
    coeffs: SmallVec<[S; 8]>,
}

impl<S: Coeff> PointwiseForm<S> {
    pub fn zero(dim: usize) -> Self {
        assert!(dim <= 12, "form dimension {dim} exceeds supported range");
        PointwiseForm { dim, coeffs: SmallVec::from_elem(S::zero(), 1 << dim) }
    }

    pub fn scalar(dim: usize, v: S) -> Self {
        let mut f = Self::zero(dim);
        f.coeffs[0] = v;
        f
    }

    /// The form `v · dx^{i₁} ∧ … ∧ dx^{i_k}` for an arbitrary index order.
    pub fn monomial(dim: usize, indices: &[usize], v: S) -> Self {
        let mut f = Self::zero(dim);
        assert!(indices.iter().all(|&i| i < dim), "index out of range");
        if let Some((mask, sign)) = mask_and_sign(indices) {
            f.coeffs[mask as usize] = v * S::from_f64(sign);
        }
        f
    }

    /// A 1-form from its components.
    pub fn one_form(components: &[S]) -> Self {
        let mut f = Self::zero(components.len());
        for (c, &v) in components.iter().enumerate() {
            f.coeffs[1 << c] = v;
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, mask: Mask) -> S {
        self.coeffs[mask as usize]
    }

    #[inline]
    pub fn set(&mut self, mask: Mask, v: S) {
        self.coeffs[mask as usize] = v;
    }

    /// Coefficient of `dx^{i₁} ∧ … ∧ dx^{i_k}` (any order, sign-corrected).
    pub fn coeff(&self, indices: &[usize]) -> S {
        match mask_and_sign(indices) {
            Some((mask, sign)) => self.coeffs[mask as usize] * S::from_f64(sign),
            None => S::zero(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mask, S)> + '_ {
        self.coeffs.iter().enumerate().map(|(m, &v)| (m as Mask, v))
    }

    /// Degree-`k` part.
    pub fn component(&self, k: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, v) in self.iter() {
            if m.count_ones() as usize == k {
                out.coeffs[m as usize] = v;
            }
        }
        out
    }

    /// Masks of degree `k` in increasing order.
    pub fn basis(dim: usize, k: usize) -> Vec<Mask> {
        (0..(1u32 << dim)).filter(|m| m.count_ones() as usize == k).map(|m| m as Mask).collect()
    }

    pub fn wedge(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "wedge of forms on different charts");
        let mut out = Self::zero(self.dim);
        for (a, va) in self.iter() {
            if va.is_zero() {
                continue;
            }
            for (b, vb) in other.iter() {
                if vb.is_zero() {
                    continue;
                }
                if let Some(s) = wedge_sign(a, b) {
                    let m = (a | b) as usize;
                    out.coeffs[m] = out.coeffs[m] + va * vb * S::from_f64(s);
                }
            }
        }
        out
    }

    pub fn scale(&self, s: S) -> Self {
        PointwiseForm { dim: self.dim, coeffs: self.coeffs.iter().map(|&v| v * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|v| v.magnitude()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|v| v.is_zero())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        assert_eq!(self.dim, other.dim, "forms on different charts");
        PointwiseForm {
            dim: self.dim,
            coeffs: self.coeffs.iter().zip(other.coeffs.iter()).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl PointwiseForm<Complex64> {
    /// Real part together with the largest discarded imaginary magnitude.
    pub fn split_real(&self) -> (PointwiseForm<f64>, f64) {
        let mut imag = 0.0f64;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                imag = imag.max(c.im.abs());
                c.re
            })
            .collect();
        (PointwiseForm { dim: self.dim, coeffs }, imag)
    }

    pub fn split_real_imag(&self) -> (PointwiseForm<f64>, PointwiseForm<f64>) {
        (
            PointwiseForm { dim: self.dim, coeffs: self.coeffs.iter().map(|c| c.re).collect() },
            PointwiseForm { dim: self.dim, coeffs: self.coeffs.iter().map(|c| c.im).collect() },
        )
    }
}

impl PointwiseForm<f64> {
    pub fn to_complex(&self) -> PointwiseForm<Complex64> {
        PointwiseForm {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

impl<S: Coeff> Add for &PointwiseForm<S> {
    type Output = PointwiseForm<S>;
    fn add(self, o: Self) -> PointwiseForm<S> {
        self.zip_with(o, |a, b| a + b)
    }
}

impl<S: Coeff> Sub for &PointwiseForm<S> {
    type Output = PointwiseForm<S>;
    fn sub(self, o: Self) -> PointwiseForm<S> {
        self.zip_with(o, |a, b| a - b)
    }
}

impl<S: Coeff> Add for PointwiseForm<S> {
    type Output = PointwiseForm<S>;
    fn add(self, o: Self) -> PointwiseForm<S> {
        &self + &o
    }
}

impl<S: Coeff> Sub for PointwiseForm<S> {
    type Output = PointwiseForm<S>;
    fn sub(self, o: Self) -> PointwiseForm<S> {
        &self - &o
    }
}

impl<S: Coeff> Neg for PointwiseForm<S> {
    type Output = PointwiseForm<S>;
    fn neg(self) -> PointwiseForm<S> {
        self.scale(-S::from_f64(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_sign_by_insertion_sort() {
        assert_eq!(mask_and_sign(&[0, 1, 2]), Some((0b111, 1.0)));
        assert_eq!(mask_and_sign(&[1, 0]), Some((0b11, -1.0)));
        assert_eq!(mask_and_sign(&[2, 0, 1]), Some((0b111, 1.0)));
        assert_eq!(mask_and_sign(&[1, 1]), None);
    }

    #[test]
    fn wedge_is_graded_commutative() {
        let a = PointwiseForm::<f64>::one_form(&[1.0, 2.0, 3.0]);
        let b = PointwiseForm::<f64>::one_form(&[-1.0, 0.5, 4.0]);
        let ab = a.wedge(&b);
        let ba = b.wedge(&a);
        assert!((&ab + &ba).max_abs() < 1e-15);
        // dx⁰∧dx¹ coefficient: 1·0.5 − 2·(−1)
        assert_eq!(ab.coeff(&[0, 1]), 2.5);
        assert_eq!(ab.coeff(&[1, 0]), -2.5);
        assert!(a.wedge(&a).is_zero());
    }

    #[test]
    fn wedge_sign_matches_enumeration() {
        for a in 0u16..16 {
            for b in 0u16..16 {
                let mut idx: Vec<usize> = (0..4).filter(|i| a >> i & 1 == 1).collect();
                idx.extend((0..4).filter(|i| b >> i & 1 == 1));
                let expect = mask_and_sign(&idx).map(|(_, s)| s);
                assert_eq!(wedge_sign(a, b), expect, "a={a:b} b={b:b}");
            }
        }
    }
}
