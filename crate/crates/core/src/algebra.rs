//! Bigraded algebra of form-valued fiber multivectors.
//!
//! An element of `𝒜 = ⊕ 𝒜^{i,j}` is a sum of terms `ω ⊗ e_J` where `ω` is a
//! coordinate `i`-form on a `form_dim`-dimensional chart and `e_J` a wedge of
//! `j` orthonormal fiber vectors of a rank-`n` bundle. The product is
//!
//! ```text
//! (a ⊗ b)·(c ⊗ d) = (−1)^{deg b · deg c} (a∧c) ⊗ (b∧d)
//! ```
//!
//! and the Berezin integral keeps the coefficient of `e_1∧…∧e_n`.
//! Coefficients are complex because the Mathai–Quillen family carries `i`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{GbcError, Result};
use crate::forms::{mask_and_sign, wedge_sign, Mask, PointwiseForm};

pub const MAX_RANK: usize = 4;

type Key = (Mask, u8);

#[derive(Clone, Debug, PartialEq)]
pub struct BigradedElement {
    n: usize,
    form_dim: usize,
    terms: BTreeMap<Key, Complex64>,
}

impl BigradedElement {
    pub fn zero(n: usize, form_dim: usize) -> Self {
        assert!((1..=MAX_RANK).contains(&n), "fiber rank {n} outside 1..={MAX_RANK}");
        assert!(form_dim <= 12, "form dimension {form_dim} too large");
        BigradedElement { n, form_dim, terms: BTreeMap::new() }
    }

    pub fn scalar(n: usize, form_dim: usize, c: Complex64) -> Self {
        let mut e = Self::zero(n, form_dim);
        e.insert(0, 0, c);
        e
    }

    pub fn one(n: usize, form_dim: usize) -> Self {
        Self::scalar(n, form_dim, Complex64::new(1.0, 0.0))
    }

    /// `c · dx^{I} ⊗ e_J` for index lists in any order; repeated indices give 0.
    pub fn term(n: usize, form_dim: usize, form_idx: &[usize], fiber_idx: &[usize], c: Complex64) -> Self {
        let mut e = Self::zero(n, form_dim);
        assert!(form_idx.iter().all(|&i| i < form_dim), "form index out of range");
        assert!(fiber_idx.iter().all(|&i| i < n), "fiber index out of range");
        if let (Some((fm, fs)), Some((vm, vs))) = (mask_and_sign(form_idx), mask_and_sign(fiber_idx)) {
            e.insert(fm, vm as u8, c * fs * vs);
        }
        e
    }

    /// `ω ⊗ e_J` for a form `ω` on the element's chart.
    pub fn from_form(n: usize, form: &PointwiseForm<f64>, fiber_idx: &[usize]) -> Self {
        let mut e = Self::zero(n, form.dim());
        if let Some((vm, vs)) = mask_and_sign(fiber_idx) {
            for (m, v) in form.iter() {
                if v != 0.0 {
                    e.insert(m, vm as u8, Complex64::new(v * vs, 0.0));
                }
            }
        }
        e
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn form_dim(&self) -> usize {
        self.form_dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (Mask, u8, Complex64)> + '_ {
        self.terms.iter().map(|(&(f, v), &c)| (f, v, c))
    }

    pub fn coefficient(&self, form_idx: &[usize], fiber_idx: &[usize]) -> Complex64 {
        match (mask_and_sign(form_idx), mask_and_sign(fiber_idx)) {
            (Some((fm, fs)), Some((vm, vs))) => {
                self.terms.get(&(fm, vm as u8)).copied().unwrap_or_default() * fs * vs
            }
            _ => Complex64::default(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn insert(&mut self, form: Mask, fiber: u8, c: Complex64) {
        if c == Complex64::default() {
            return;
        }
        let slot = self.terms.entry((form, fiber)).or_default();
        *slot += c;
        if *slot == Complex64::default() {
            self.terms.remove(&(form, fiber));
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.form_dim != other.form_dim {
            return Err(GbcError::Structural(format!(
                "bigraded operands of shape (n={}, dim={}) and (n={}, dim={})",
                self.n, self.form_dim, other.n, other.form_dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (&(f, v), &c) in &other.terms {
            out.insert(f, v, c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.n, self.form_dim);
        for (&(f, v), &c) in &self.terms {
            out.insert(f, v, c * s);
        }
        out
    }

    /// Bigraded product with the Koszul sign `(−1)^{deg(fiber of self)·deg(form of other)}`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self::zero(self.n, self.form_dim);
        for (&(fa, va), &ca) in &self.terms {
            let fiber_deg = va.count_ones();
            for (&(fb, vb), &cb) in &other.terms {
                let (Some(s_form), Some(s_fiber)) = (wedge_sign(fa, fb), wedge_sign(va as Mask, vb as Mask)) else {
                    continue;
                };
                let koszul = if (fiber_deg * fb.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                out.insert(fa | fb, va | vb, ca * cb * (s_form * s_fiber * koszul));
            }
        }
        Ok(out)
    }

    /// Projection onto `𝒜^{i,j}`.
    pub fn component(&self, i: usize, j: usize) -> Self {
        let mut out = Self::zero(self.n, self.form_dim);
        for (&(f, v), &c) in &self.terms {
            if f.count_ones() as usize == i && v.count_ones() as usize == j {
                out.insert(f, v, c);
            }
        }
        out
    }

    pub fn scalar_part(&self) -> Complex64 {
        self.terms.get(&(0, 0)).copied().unwrap_or_default()
    }

    /// Largest total degree (form + fiber) any nonzero product can carry.
    pub fn degree_bound(&self) -> usize {
        self.form_dim + self.n
    }
}

/// Berezin integral: coefficient form of `e_1∧…∧e_n`.
pub fn berezin(a: &BigradedElement) -> PointwiseForm<Complex64> {
    let top = ((1u16 << a.n) - 1) as u8;
    let mut out = PointwiseForm::zero(a.form_dim);
    for (&(f, v), &c) in &a.terms {
        if v == top {
            out.set(f, out.get(f) + c);
        }
    }
    out
}

pub fn bigraded_product(a: &BigradedElement, b: &BigradedElement) -> Result<BigradedElement> {
    a.product(b)
}

/// `Σ_{k≤K} a^k / k!`, with the scalar part factored out as `e^{a₀₀}`.
///
/// The nilpotent remainder has every term of positive total degree, so its
/// powers vanish once `k` exceeds `form_dim + n`; the loop also stops at the
/// first zero power or at `max_total_degree`.
pub fn exp_truncated(a: &BigradedElement, max_total_degree: usize) -> BigradedElement {
    let c = a.scalar_part();
    let nil = a.sub(&BigradedElement::scalar(a.n, a.form_dim, c)).expect("same shape");
    let mut sum = BigradedElement::one(a.n, a.form_dim);
    let mut power = BigradedElement::one(a.n, a.form_dim);
    let kmax = max_total_degree.min(a.degree_bound());
    for k in 1..=kmax {
        power = power.product(&nil).expect("same shape").scale(Complex64::new(1.0 / k as f64, 0.0));
        if power.is_zero() {
            break;
        }
        sum = sum.add(&power).expect("same shape");
    }
    sum.scale(c.exp())
}

/// Matrix of `k`-forms `Ω_i^j`, skew in `(i, j)`.
#[derive(Clone, Debug)]
pub struct SkewMatrixValuedForm {
    n: usize,
    entries: Vec<Vec<PointwiseForm<f64>>>,
}

impl SkewMatrixValuedForm {
    /// Validates `entries[i][j] = −entries[j][i]` to a relative tolerance of `1e−12`.
    pub fn new(entries: Vec<Vec<PointwiseForm<f64>>>) -> Result<Self> {
        let n = entries.len();
        if !(1..=MAX_RANK).contains(&n) || entries.iter().any(|r| r.len() != n) {
            return Err(GbcError::Structural(format!("skew matrix must be square of size ≤ {MAX_RANK}")));
        }
        let dim = entries[0][0].dim();
        let scale = entries.iter().flatten().map(|f| f.max_abs()).fold(1.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                if entries[i][j].dim() != dim {
                    return Err(GbcError::Structural("entries live on different charts".into()));
                }
                let r = (&entries[i][j] + &entries[j][i]).max_abs();
                if r > 1e-12 * scale {
                    return Err(GbcError::Validation(format!(
                        "entry ({i},{j}) not skew: |Ω_ij + Ω_ji| = {r:e}"
                    )));
                }
            }
        }
        Ok(SkewMatrixValuedForm { n, entries })
    }

    /// `½(Ω − Ωᵀ)` for a numerically skew matrix, with the defect `max |Ω_ij + Ω_ji|`.
    pub fn antisymmetrized(entries: Vec<Vec<PointwiseForm<f64>>>) -> Result<(Self, f64)> {
        let n = entries.len();
        if !(1..=MAX_RANK).contains(&n) || entries.iter().any(|r| r.len() != n) {
            return Err(GbcError::Structural(format!("skew matrix must be square of size ≤ {MAX_RANK}")));
        }
        let mut defect = 0.0f64;
        let mut out = entries.clone();
        for i in 0..n {
            for j in 0..n {
                defect = defect.max((&entries[i][j] + &entries[j][i]).max_abs());
                out[i][j] = (&entries[i][j] - &entries[j][i]).scale(0.5);
            }
        }
        Ok((Self::new(out)?, defect))
    }

    /// Skew matrix built from its strictly upper entries `(i, j, Ω_i^j)`.
    pub fn from_upper(n: usize, dim: usize, upper: &[(usize, usize, PointwiseForm<f64>)]) -> Result<Self> {
        let mut entries = vec![vec![PointwiseForm::zero(dim); n]; n];
        for (i, j, f) in upper {
            if i >= j || *j >= n {
                return Err(GbcError::Structural(format!("({i},{j}) is not a strictly upper index")));
            }
            entries[*i][*j] = f.clone();
            entries[*j][*i] = -f.clone();
        }
        Self::new(entries)
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &PointwiseForm<f64> {
        &self.entries[i][j]
    }

    /// `½ Σ_{i,j} Ω_i^j ⊗ e_i∧e_j`.
    pub fn to_bivector(&self) -> BigradedElement {
        let mut out = BigradedElement::zero(self.n, self.entries[0][0].dim());
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                let t = BigradedElement::from_form(self.n, &self.entries[i][j], &[i, j]);
                out = out.add(&t.scale(Complex64::new(0.5, 0.0))).expect("same shape");
            }
        }
        out
    }
}

/// `𝓑(exp(−Ω))`, i.e. `Pf(−Ω)` for the skew matrix `Ω`.
///
/// For `n = 2` and `Ω = [[0, a], [−a, 0]]` this returns `−a`; odd rank gives 0.
pub fn pfaffian(omega: &SkewMatrixValuedForm) -> PointwiseForm<f64> {
    let neg = omega.to_bivector().scale(Complex64::new(-1.0, 0.0));
    let e = exp_truncated(&neg, neg.degree_bound());
    let (re, imag) = berezin(&e).split_real();
    debug_assert!(imag == 0.0);
    re
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn pure_fiber_wedge() {
        let a = BigradedElement::term(2, 3, &[], &[0], c(1.0));
        let b = BigradedElement::term(2, 3, &[], &[1], c(1.0));
        let p = a.product(&b).unwrap();
        assert_eq!(p, BigradedElement::term(2, 3, &[], &[0, 1], c(1.0)));
    }

    #[test]
    fn repeated_form_index_vanishes() {
        let a = BigradedElement::term(2, 3, &[0], &[0], c(1.0));
        let b = BigradedElement::term(2, 3, &[0], &[1], c(1.0));
        assert!(a.product(&b).unwrap().is_zero());
    }

    #[test]
    fn odd_odd_cross_term_sign() {
        let a = BigradedElement::term(2, 3, &[0], &[0], c(1.0));
        let b = BigradedElement::term(2, 3, &[1], &[1], c(1.0));
        let p = a.product(&b).unwrap();
        assert_eq!(p.coefficient(&[0, 1], &[0, 1]), c(-1.0));
        let same = BigradedElement::term(2, 3, &[1], &[0], c(1.0));
        assert!(a.product(&same).unwrap().is_zero());
    }

    #[test]
    fn rank_mismatch_is_structural_error() {
        let a = BigradedElement::one(2, 3);
        let b = BigradedElement::one(3, 3);
        assert!(matches!(a.product(&b), Err(GbcError::Structural(_))));
    }

    #[test]
    fn berezin_top_and_lower() {
        let top = BigradedElement::term(2, 3, &[], &[0, 1], c(1.0));
        assert_eq!(berezin(&top).get(0), c(1.0));
        let low = BigradedElement::term(2, 3, &[], &[0], c(1.0));
        assert!(berezin(&low).is_zero());
        let swapped = BigradedElement::term(2, 3, &[2], &[1, 0], c(3.0));
        assert_eq!(berezin(&swapped).coeff(&[2]), c(-3.0));
    }

    #[test]
    fn pfaffian_rank_two_sign() {
        let a = 0.7;
        let omega = SkewMatrixValuedForm::from_upper(2, 3, &[(0, 1, PointwiseForm::scalar(3, a))]).unwrap();
        // 𝓑(e^{−Ω}) with Ω ↦ a·e₁∧e₂ is −a.
        assert!((pfaffian(&omega).get(0) + a).abs() < 1e-15);
    }

    #[test]
    fn pfaffian_odd_rank_is_zero() {
        let f = |v: f64| PointwiseForm::scalar(4, v);
        let omega = SkewMatrixValuedForm::from_upper(3, 4, &[(0, 1, f(0.3)), (0, 2, f(-1.1)), (1, 2, f(2.0))]).unwrap();
        assert!(pfaffian(&omega).is_zero());
    }

    #[test]
    fn pfaffian_block_diagonal_rank_four() {
        let (a, b) = (0.6, -1.3);
        let f = |v: f64| PointwiseForm::scalar(2, v);
        let omega = SkewMatrixValuedForm::from_upper(4, 2, &[(0, 1, f(a)), (2, 3, f(b))]).unwrap();
        assert!((pfaffian(&omega).get(0) - a * b).abs() < 1e-15);
    }

    #[test]
    fn non_skew_input_rejected() {
        let e = vec![
            vec![PointwiseForm::scalar(1, 0.0), PointwiseForm::scalar(1, 1.0)],
            vec![PointwiseForm::scalar(1, 1.0), PointwiseForm::scalar(1, 0.0)],
        ];
        assert!(matches!(SkewMatrixValuedForm::new(e), Err(GbcError::Validation(_))));
    }

    #[test]
    fn exp_of_zero_is_unit() {
        let z = BigradedElement::zero(3, 3);
        assert_eq!(exp_truncated(&z, 10), BigradedElement::one(3, 3));
    }

    #[test]
    fn exp_terminates_for_fiber_nilpotent() {
        // a ∈ 𝒜^{1,1} with n = 2 on a 3-dimensional chart: a³ = 0.
        let mut a = BigradedElement::zero(2, 3);
        for (fi, vi, v) in [(0, 0, 0.3), (1, 1, -0.8), (2, 0, 1.2), (2, 1, 0.5)] {
            a = a.add(&BigradedElement::term(2, 3, &[fi], &[vi], c(v))).unwrap();
        }
        let a2 = a.product(&a).unwrap();
        assert!(a2.product(&a).unwrap().is_zero());
        let expected = BigradedElement::one(2, 3).add(&a).unwrap().add(&a2.scale(c(0.5))).unwrap();
        let got = exp_truncated(&a, 20);
        assert!(got.sub(&expected).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn component_projection() {
        let x = BigradedElement::one(2, 3).add(&BigradedElement::term(2, 3, &[0], &[0], c(1.0))).unwrap();
        assert_eq!(x.component(1, 1), BigradedElement::term(2, 3, &[0], &[0], c(1.0)));
        assert!(x.component(2, 2).is_zero());
    }
}
